//! Veronese-Whitney embedding `j([x]) = x x^T`, its projection, and
//! extrinsic sample means (per group and pooled) on (RP^3)^q.

use crate::error::{Error, Result};
use crate::linalg::{eig_sym4, EigenSystem4, SymMat4};
use crate::projective::{HomogeneousPoint, ProjectiveShape};
use crate::scalar::Scalar;

/// One group's sample of projective shapes, all with the same q.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupSample<T> {
    shapes: Vec<ProjectiveShape<T>>,
}

impl<T: Scalar> GroupSample<T> {
    pub fn new(shapes: Vec<ProjectiveShape<T>>) -> Result<Self> {
        let q = shapes
            .first()
            .ok_or_else(|| Error::InvalidInput("a group sample needs at least one shape".into()))?
            .q();
        if let Some(i) = shapes.iter().position(|s| s.q() != q) {
            return Err(Error::InvalidInput(format!(
                "shape {} has q = {}, expected {q}",
                i + 1,
                shapes[i].q()
            )));
        }
        Ok(Self { shapes })
    }

    pub fn shapes(&self) -> &[ProjectiveShape<T>] {
        &self.shapes
    }

    pub fn len(&self) -> usize {
        self.shapes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shapes.is_empty()
    }

    pub fn q(&self) -> usize {
        self.shapes[0].q()
    }

    /// Representatives of component `s` across the sample.
    pub fn component(&self, s: usize) -> impl Iterator<Item = &HomogeneousPoint<T>> + '_ {
        self.shapes.iter().map(move |sh| sh.component(s))
    }
}

/// `j_k(shape)`: one rank-one projector per component.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddedShape<T> {
    mats: Vec<SymMat4<T>>,
}

impl<T: Scalar> EmbeddedShape<T> {
    pub fn mats(&self) -> &[SymMat4<T>] {
        &self.mats
    }
}

pub fn vw_embed<T: Scalar>(shape: &ProjectiveShape<T>) -> EmbeddedShape<T> {
    EmbeddedShape {
        mats: shape
            .coords()
            .iter()
            .map(|p| SymMat4::outer(p.rep()))
            .collect(),
    }
}

/// Top-eigenvector projection `P_{j_k}` of q symmetric matrices.
pub fn vw_project<T: Scalar>(mats: &[SymMat4<T>]) -> Result<ProjectiveShape<T>> {
    let coords = mats
        .iter()
        .enumerate()
        .map(|(s, m)| {
            let es = eig_sym4(m);
            if es.is_focal() {
                return Err(Error::FocalPoint {
                    component: s + 1,
                    gap: es.eigengap().to_f64_lossy(),
                });
            }
            Ok(HomogeneousPoint::from_unit(*es.top()))
        })
        .collect::<Result<Vec<_>>>()?;
    ProjectiveShape::new(coords)
}

/// Anything carrying an eigenframe per component: a group's sample mean or
/// the pooled mean. `spectra()[s].vector(3)` is the mean direction.
pub trait MeanFrame<T: Scalar> {
    fn spectra(&self) -> &[EigenSystem4<T>];

    fn q(&self) -> usize {
        self.spectra().len()
    }
}

/// Extrinsic sample mean together with the full spectra of the `J_s`.
#[derive(Clone, Debug, PartialEq)]
pub struct MeanWithSpectrum<T> {
    mean: ProjectiveShape<T>,
    spectra: Vec<EigenSystem4<T>>,
    eigengaps: Vec<T>,
}

impl<T: Scalar> MeanWithSpectrum<T> {
    /// Builds from eigensystems; the mean is read off the top eigenvectors.
    pub fn from_spectra(spectra: Vec<EigenSystem4<T>>) -> Result<Self> {
        check_nonfocal(&spectra)?;
        let mean = ProjectiveShape::new(
            spectra
                .iter()
                .map(|es| HomogeneousPoint::from_unit(*es.top()))
                .collect(),
        )?;
        let eigengaps = spectra.iter().map(EigenSystem4::eigengap).collect();
        Ok(Self {
            mean,
            spectra,
            eigengaps,
        })
    }

    pub fn mean(&self) -> &ProjectiveShape<T> {
        &self.mean
    }

    pub fn eigengaps(&self) -> &[T] {
        &self.eigengaps
    }

    /// Copy with eigenvector `r` of component `s` negated.
    pub fn with_flipped(&self, s: usize, r: usize) -> Self {
        let mut out = self.clone();
        out.spectra[s] = out.spectra[s].with_flipped(r);
        if r == 3 {
            out.mean = out.mean.with_negated(s);
        }
        out
    }
}

impl<T: Scalar> MeanFrame<T> for MeanWithSpectrum<T> {
    fn spectra(&self) -> &[EigenSystem4<T>] {
        &self.spectra
    }
}

fn check_nonfocal<T: Scalar>(spectra: &[EigenSystem4<T>]) -> Result<()> {
    if let Some((s, es)) = spectra.iter().enumerate().find(|(_, es)| es.is_focal()) {
        return Err(Error::FocalSample {
            group: None,
            component: s + 1,
            gap: es.eigengap().to_f64_lossy(),
        });
    }
    Ok(())
}

/// `J_s = (1/n) sum_i X_i^s (X_i^s)^T` for one component.
pub fn second_moment<T: Scalar>(sample: &GroupSample<T>, s: usize) -> SymMat4<T> {
    let mut j = SymMat4::zero();
    for p in sample.component(s) {
        j.add_outer(p.rep(), T::one());
    }
    j.scaled(T::one() / T::from_count(sample.len()))
}

/// VW sample mean: per component the top eigenvector of `J_s`.
pub fn vw_sample_mean<T: Scalar>(sample: &GroupSample<T>) -> Result<MeanWithSpectrum<T>> {
    let spectra = (0..sample.q())
        .map(|s| eig_sym4(&second_moment(sample, s)))
        .collect();
    MeanWithSpectrum::from_spectra(spectra)
}

/// Pooled VW sample mean with weights `n_a / n`.
#[derive(Clone, Debug, PartialEq)]
pub struct PooledMean<T> {
    weights: Vec<T>,
    mean: ProjectiveShape<T>,
    spectra: Vec<EigenSystem4<T>>,
}

impl<T: Scalar> PooledMean<T> {
    pub fn from_parts(weights: Vec<T>, spectra: Vec<EigenSystem4<T>>) -> Result<Self> {
        let inner = MeanWithSpectrum::from_spectra(spectra)?;
        Ok(Self {
            weights,
            mean: inner.mean,
            spectra: inner.spectra,
        })
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn mean(&self) -> &ProjectiveShape<T> {
        &self.mean
    }

    /// Copy with eigenvector `r` of component `s` negated.
    pub fn with_flipped(&self, s: usize, r: usize) -> Self {
        let mut out = self.clone();
        out.spectra[s] = out.spectra[s].with_flipped(r);
        if r == 3 {
            out.mean = out.mean.with_negated(s);
        }
        out
    }
}

impl<T: Scalar> MeanFrame<T> for PooledMean<T> {
    fn spectra(&self) -> &[EigenSystem4<T>] {
        &self.spectra
    }
}

/// Projects `sum_a (n_a / n) j_k(group mean a)` back to (RP^3)^q.
pub fn pooled_sample_mean<T: Scalar>(
    means: &[MeanWithSpectrum<T>],
    sizes: &[usize],
) -> Result<PooledMean<T>> {
    if means.is_empty() || means.len() != sizes.len() {
        return Err(Error::InvalidInput(
            "need one positive size per group mean".into(),
        ));
    }
    if sizes.contains(&0) {
        return Err(Error::InvalidInput("group sizes must be positive".into()));
    }
    let q = means[0].q();
    if means.iter().any(|m| m.q() != q) {
        return Err(Error::InvalidInput("group means disagree on q".into()));
    }
    let n: usize = sizes.iter().sum();
    let weights: Vec<T> = sizes
        .iter()
        .map(|&na| T::from_count(na) / T::from_count(n))
        .collect();
    let spectra = (0..q)
        .map(|s| {
            let mut jp = SymMat4::zero();
            for (m, w) in means.iter().zip(&weights) {
                jp.add_outer(m.spectra()[s].top(), *w);
            }
            eig_sym4(&jp)
        })
        .collect();
    PooledMean::from_parts(weights, spectra)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dot4;

    fn shape(vs: &[[f64; 4]]) -> ProjectiveShape<f64> {
        ProjectiveShape::from_vectors(vs).unwrap()
    }

    const E1: [f64; 4] = [1.0, 0.0, 0.0, 0.0];
    const E2: [f64; 4] = [0.0, 1.0, 0.0, 0.0];
    const E4: [f64; 4] = [0.0, 0.0, 0.0, 1.0];

    #[test]
    fn embed_examples() {
        let e = vw_embed(&shape(&[E1]));
        assert_eq!(e.mats()[0], SymMat4::diagonal([1.0, 0.0, 0.0, 0.0]));
        let a = vw_embed(&shape(&[[0.0, -1.0, 0.0, 0.0]]));
        let b = vw_embed(&shape(&[E2]));
        assert_eq!(a, b);
        let h = vw_embed(&shape(&[[1.0, 1.0, 0.0, 0.0]]));
        let m = h.mats()[0];
        for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            assert!((m.get(i, j) - 0.5).abs() < 1e-15);
        }
        assert!((m.trace() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn project_examples() {
        let p = vw_project(&[SymMat4::diagonal([0.1, 0.2, 0.3, 0.4])]).unwrap();
        assert!(p.component(0).approx_eq(&HomogeneousPoint::basis(3), 1e-12));
        let focal = vw_project(&[SymMat4::<f64>::identity().scaled(0.25)]);
        assert!(matches!(focal, Err(Error::FocalPoint { component: 1, .. })));
        let s = shape(&[[1.0, -2.0, 0.3, 0.7], [0.0, 1.0, 1.0, -4.0]]);
        let back = vw_project(vw_embed(&s).mats()).unwrap();
        assert!(back.approx_eq(&s, 1e-10));
    }

    #[test]
    fn sample_mean_diagonal_case() {
        let sample = GroupSample::new(vec![shape(&[E1]), shape(&[E1]), shape(&[E2])]).unwrap();
        let m = vw_sample_mean(&sample).unwrap();
        assert!(m
            .mean()
            .component(0)
            .approx_eq(&HomogeneousPoint::basis(0), 1e-12));
        assert!((m.eigengaps()[0] - 1.0 / 3.0).abs() < 1e-12);
        let es = &m.spectra()[0];
        assert!((es.value(3) - 2.0 / 3.0).abs() < 1e-12);
        assert!((es.value(2) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn sample_mean_of_copies() {
        let s = shape(&[[0.3, 0.1, -0.2, 0.9], [1.0, 1.0, 1.0, 1.0]]);
        let sample = GroupSample::new(vec![s.clone(); 5]).unwrap();
        let m = vw_sample_mean(&sample).unwrap();
        assert!(m.mean().approx_eq(&s, 1e-12));
        for g in m.eigengaps() {
            assert!((g - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn focal_sample_detected() {
        let sample = GroupSample::new(vec![shape(&[E1]), shape(&[E2])]).unwrap();
        assert!(matches!(
            vw_sample_mean(&sample),
            Err(Error::FocalSample { component: 1, .. })
        ));
    }

    #[test]
    fn pooled_examples() {
        let one =
            |v: [f64; 4]| vw_sample_mean(&GroupSample::new(vec![shape(&[v])]).unwrap()).unwrap();
        let s = one([0.2, 0.4, 0.1, 0.8]);
        let p = pooled_sample_mean(&[s.clone(), s.clone(), s.clone()], &[3, 5, 2]).unwrap();
        assert!(p.mean().approx_eq(s.mean(), 1e-12));
        let w: f64 = p.weights().iter().sum();
        assert!((w - 1.0).abs() < 1e-12);

        let tie = pooled_sample_mean(&[one(E1), one(E2)], &[4, 4]);
        assert!(matches!(tie, Err(Error::FocalSample { .. })));

        let dom = pooled_sample_mean(&[one(E1), one(E2)], &[3, 1]).unwrap();
        assert!(dom
            .mean()
            .component(0)
            .approx_eq(&HomogeneousPoint::basis(0), 1e-12));
    }

    #[test]
    fn antipodal_invariance_of_mean() {
        let base = vec![
            shape(&[[1.0, 0.1, 0.0, 0.2]]),
            shape(&[[0.9, -0.1, 0.1, 0.1]]),
            shape(&[[1.1, 0.0, -0.2, 0.0]]),
            shape(&[E4]),
        ];
        let flipped: Vec<_> = base.iter().map(|s| s.with_negated(0)).collect();
        let a = vw_sample_mean(&GroupSample::new(base).unwrap()).unwrap();
        let b = vw_sample_mean(&GroupSample::new(flipped).unwrap()).unwrap();
        assert!(a.mean().approx_eq(b.mean(), 1e-12));
        assert!((dot4(a.spectra()[0].top(), b.spectra()[0].top()).abs() - 1.0).abs() < 1e-12);
    }
}
