//! Extrinsic covariance matrices, tangent coordinates and the T^2-type
//! statistics on (RP^3)^q, plus the Euclidean MANOVA baseline.
//!
//! Coordinates are indexed by pairs `(s, c)`, `s = 0..q`, `c = 0..3`, in
//! lexicographic order (`index = 3 s + c`). For a frame with eigenvectors
//! `g_s(1..4)` and eigenvalues `d_s(1..4)`, the covariance of a group is
//!
//! ```text
//! S_(s,c)(t,b) = 1/n sum_i w_i(s,c) w_i(t,b),
//! w_i(s,c)     = (g_s(c) . X_i^s)(g_s(4) . X_i^s) / (d_s(4) - d_s(c)).
//! ```
//!
//! When coordinates are taken in an arbitrary orthonormal completion
//! `f_s(1..3)` of a hypothesized point, `w_i(s,c)` becomes
//! `f_s(c) . L_s X_i^s (g_s(4) . X_i^s)` with `L_s = sum_r g_s(r) g_s(r)^T /
//! (d_s(4) - d_s(r))` over `r = 1..3`. This reduces to the line above when
//! `f_s(c) = g_s(c)` and rotates congruently with the completion.

use serde::{Deserialize, Serialize};

use crate::chi2::chi2_sf;
use crate::error::{Error, Result};
use crate::linalg::{dot4, neg4, orthonormal_completion, Matrix, PivotedCholesky, SpdMatrix, Vec4};
use crate::means::{
    pooled_sample_mean, vw_sample_mean, GroupSample, MeanFrame, MeanWithSpectrum, PooledMean,
};
use crate::projective::ProjectiveShape;
use crate::scalar::Scalar;

/// Per-component tangent frame: three directions spanning the complement
/// of the base point.
pub type TangentFrame<T> = [Vec4<T>; 3];

/// Coordinates of length 3q, `(s, c)` lexicographic.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector<T> {
    coords: Vec<T>,
}

impl<T: Scalar> TangentVector<T> {
    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    pub fn get(&self, s: usize, c: usize) -> T {
        self.coords[3 * s + c]
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| *a + *b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| *a - *b)
                .collect(),
        }
    }
}

/// `v` flipped into the half-space `<v, anchor> >= 0`.
fn aligned<T: Scalar>(v: &Vec4<T>, anchor: &Vec4<T>) -> Vec4<T> {
    if dot4(v, anchor) < T::zero() {
        neg4(v)
    } else {
        *v
    }
}

/// Entry `(s, c)` is `<y_s, g_s(c)>` where `y_s` is the point's `s`-th
/// representative aligned with the base direction `g_s(4)`.
pub fn tangent_coords<T: Scalar, F: MeanFrame<T>>(
    point: &ProjectiveShape<T>,
    base: &F,
) -> TangentVector<T> {
    let spectra = base.spectra();
    assert_eq!(point.q(), spectra.len(), "point and base disagree on q");
    let mut coords = Vec::with_capacity(3 * spectra.len());
    for (p, es) in point.coords().iter().zip(spectra) {
        let y = aligned(p.rep(), es.top());
        for c in 0..3 {
            coords.push(dot4(&y, es.vector(c)));
        }
    }
    TangentVector { coords }
}

/// Entry `(s, c)` is `<y_s, f_s(c)>` for explicit frames `f_s`, with `y_s`
/// aligned to the `s`-th component of `anchor`.
pub fn frame_coords<T: Scalar>(
    point: &ProjectiveShape<T>,
    frames: &[TangentFrame<T>],
    anchor: &ProjectiveShape<T>,
) -> Vec<T> {
    assert_eq!(point.q(), frames.len(), "point and frames disagree on q");
    let mut coords = Vec::with_capacity(3 * frames.len());
    for ((p, f), a) in point.coords().iter().zip(frames).zip(anchor.coords()) {
        let y = aligned(p.rep(), a.rep());
        for dir in f {
            coords.push(dot4(&y, dir));
        }
    }
    coords
}

/// Extrinsic sample covariance of one group, order 3q.
#[derive(Clone, Debug, PartialEq)]
pub struct VwCovariance<T> {
    matrix: SpdMatrix<T>,
    gaps: Vec<[T; 3]>,
    group_size: usize,
}

impl<T: Scalar> VwCovariance<T> {
    pub fn matrix(&self) -> &SpdMatrix<T> {
        &self.matrix
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.matrix.get(i, j)
    }

    /// `d_s(4) - d_s(c)` used as divisors, per component.
    pub fn gaps(&self) -> &[[T; 3]] {
        &self.gaps
    }

    pub fn group_size(&self) -> usize {
        self.group_size
    }

    pub fn order(&self) -> usize {
        self.matrix.order()
    }
}

fn frame_gaps<T: Scalar, F: MeanFrame<T>>(base: &F) -> Result<Vec<[T; 3]>> {
    base.spectra()
        .iter()
        .enumerate()
        .map(|(s, es)| {
            if es.is_focal() {
                return Err(Error::FocalSample {
                    group: None,
                    component: s + 1,
                    gap: es.eigengap().to_f64_lossy(),
                });
            }
            Ok([0, 1, 2].map(|c| es.value(3) - es.value(c)))
        })
        .collect()
}

pub(crate) fn own_frames<T: Scalar, F: MeanFrame<T>>(base: &F) -> Vec<TangentFrame<T>> {
    base.spectra()
        .iter()
        .map(|es| [*es.vector(0), *es.vector(1), *es.vector(2)])
        .collect()
}

/// Builds the covariance with eigen-data from `base` and coordinates along
/// `frames` (one 3-frame per component).
pub(crate) fn covariance_in_frames<T: Scalar, F: MeanFrame<T>>(
    sample: &GroupSample<T>,
    base: &F,
    frames: &[TangentFrame<T>],
) -> Result<VwCovariance<T>> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::InvalidInput(
            "a covariance needs at least two observations".into(),
        ));
    }
    let q = sample.q();
    if base.q() != q || frames.len() != q {
        return Err(Error::InvalidInput("sample and base disagree on q".into()));
    }
    let gaps = frame_gaps(base)?;
    let spectra = base.spectra();
    // M_s[c][r] = <f_s(c), g_s(r)> / gap_s(r): maps g-coordinates of X to w.
    let maps: Vec<[[T; 3]; 3]> = (0..q)
        .map(|s| {
            let mut m = [[T::zero(); 3]; 3];
            for c in 0..3 {
                for r in 0..3 {
                    m[c][r] = dot4(&frames[s][c], spectra[s].vector(r)) / gaps[s][r];
                }
            }
            m
        })
        .collect();

    let dim = 3 * q;
    let mut acc = Matrix::zeros(dim, dim);
    let mut w = vec![T::zero(); dim];
    for shape in sample.shapes() {
        for s in 0..q {
            let x = shape.component(s).rep();
            let es = &spectra[s];
            let top = dot4(es.top(), x);
            let proj = [0, 1, 2].map(|r| dot4(es.vector(r), x));
            for c in 0..3 {
                let m = &maps[s][c];
                w[3 * s + c] = (m[0] * proj[0] + m[1] * proj[1] + m[2] * proj[2]) * top;
            }
        }
        for i in 0..dim {
            for j in 0..=i {
                acc[(i, j)] += w[i] * w[j];
            }
        }
    }
    let inv_n = T::one() / T::from_count(n);
    for i in 0..dim {
        for j in 0..=i {
            let v = acc[(i, j)] * inv_n;
            acc[(i, j)] = v;
            acc[(j, i)] = v;
        }
    }
    Ok(VwCovariance {
        matrix: SpdMatrix::new_unchecked(acc),
        gaps,
        group_size: n,
    })
}

/// Extrinsic covariance of `sample` in the eigenframe of `base` (normally
/// the pooled mean; for one-sample work, the group's own mean).
pub fn vw_covariance<T: Scalar, F: MeanFrame<T>>(
    sample: &GroupSample<T>,
    base: &F,
) -> Result<VwCovariance<T>> {
    covariance_in_frames(sample, base, &own_frames(base))
}

/// How a singular covariance is treated inside a quadratic form.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SingularPolicy {
    /// Fail with `SingularCovariance`.
    #[default]
    Reject,
    /// Use the Moore-Penrose inverse on the numerical range.
    PseudoInverse,
}

/// `n v^T S^{-1} v`.
pub(crate) fn quadratic_term<T: Scalar>(
    cov: &VwCovariance<T>,
    v: &[T],
    policy: SingularPolicy,
) -> Result<T> {
    let f = PivotedCholesky::decompose(cov.matrix().matrix());
    let form = if f.rank() == f.order() {
        f.inverse_quadratic_form(v)
    } else {
        match policy {
            SingularPolicy::Reject => return Err(Error::SingularCovariance { group: None }),
            SingularPolicy::PseudoInverse => f.pseudo_inverse_quadratic_form(v),
        }
    };
    if !form.is_finite() {
        return Err(Error::SingularCovariance { group: None });
    }
    Ok(T::from_count(cov.group_size()) * form)
}

/// Which g-sample statistic a result holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatisticKind {
    /// Group means against a hypothesized common mean.
    Tc,
    /// Group means against the pooled sample mean.
    Td,
}

/// Outcome of a g-sample test statistic with its chi-squared calibration.
#[derive(Clone, Debug, PartialEq)]
pub struct ManovaResult<T> {
    pub kind: StatisticKind,
    pub statistic: T,
    pub per_group_terms: Vec<T>,
    pub df_asymptotic: usize,
    pub p_asymptotic: f64,
    pub group_sizes: Vec<usize>,
    pub q: usize,
    pub g: usize,
}

impl<T: Scalar> ManovaResult<T> {
    pub(crate) fn from_terms(
        kind: StatisticKind,
        terms: Vec<T>,
        sizes: Vec<usize>,
        q: usize,
    ) -> Self {
        let g = sizes.len();
        let statistic: T = terms.iter().copied().sum();
        let df = 3 * g * q;
        Self {
            kind,
            statistic,
            per_group_terms: terms,
            df_asymptotic: df,
            p_asymptotic: chi2_sf(df, statistic.to_f64_lossy().max(0.0)),
            group_sizes: sizes,
            q,
            g,
        }
    }

    /// Recomputes the asymptotic p-value with a different df.
    pub fn with_df(mut self, df: usize) -> Self {
        assert!(df >= 1);
        self.df_asymptotic = df;
        self.p_asymptotic = chi2_sf(df, self.statistic.to_f64_lossy().max(0.0));
        self
    }
}

/// Group means and the pooled mean of a set of samples.
#[derive(Clone, Debug)]
pub struct ManovaFit<T> {
    pub means: Vec<MeanWithSpectrum<T>>,
    pub pooled: PooledMean<T>,
    pub sizes: Vec<usize>,
}

impl<T: Scalar> ManovaFit<T> {
    pub fn q(&self) -> usize {
        self.pooled.q()
    }
}

fn check_groups<T: Scalar>(samples: &[GroupSample<T>], min_groups: usize) -> Result<usize> {
    if samples.len() < min_groups {
        return Err(Error::InvalidInput(format!(
            "need at least {min_groups} groups, got {}",
            samples.len()
        )));
    }
    let q = samples[0].q();
    if let Some(a) = samples.iter().position(|s| s.q() != q) {
        return Err(Error::InvalidInput(format!(
            "group {} has q = {}, expected {q}",
            a + 1,
            samples[a].q()
        )));
    }
    Ok(q)
}

/// Group sample means and their pooled mean.
pub fn fit_means<T: Scalar>(samples: &[GroupSample<T>]) -> Result<ManovaFit<T>> {
    check_groups(samples, 1)?;
    let means = samples
        .iter()
        .enumerate()
        .map(|(a, s)| vw_sample_mean(s).map_err(|e| e.in_group(a)))
        .collect::<Result<Vec<_>>>()?;
    let sizes: Vec<usize> = samples.iter().map(GroupSample::len).collect();
    let pooled = pooled_sample_mean(&means, &sizes)?;
    Ok(ManovaFit {
        means,
        pooled,
        sizes,
    })
}

/// Per-group T_d terms
/// `n_a |S_a^{-1/2} (tan(group mean a) - tan(candidate))|^2`, all in the
/// pooled frame. With `candidate = None` the pooled mean itself is used
/// and contributes zero.
pub fn t_d_terms<T: Scalar>(
    samples: &[GroupSample<T>],
    means: &[MeanWithSpectrum<T>],
    pooled: &PooledMean<T>,
    candidate: Option<&ProjectiveShape<T>>,
    policy: SingularPolicy,
) -> Result<Vec<T>> {
    let offset = candidate.map(|c| tangent_coords(c, pooled));
    samples
        .iter()
        .zip(means)
        .enumerate()
        .map(|(a, (sample, mean))| {
            let mut v = tangent_coords(mean.mean(), pooled);
            if let Some(o) = &offset {
                v = v.sub(o);
            }
            let cov = vw_covariance(sample, pooled).map_err(|e| e.in_group(a))?;
            quadratic_term(&cov, v.coords(), policy).map_err(|e| e.in_group(a))
        })
        .collect()
}

/// Per-group T_c terms: group means expressed in the tangent frames of a
/// hypothesized shape, against covariances built on the pooled
/// eigen-data and expressed in those same frames.
pub fn t_c_terms<T: Scalar>(
    samples: &[GroupSample<T>],
    means: &[MeanWithSpectrum<T>],
    pooled: &PooledMean<T>,
    frames: &[TangentFrame<T>],
    policy: SingularPolicy,
) -> Result<Vec<T>> {
    let q = pooled.q();
    if frames.len() != q {
        return Err(Error::InvalidInput(
            "hypothesized shape disagrees on q".into(),
        ));
    }
    samples
        .iter()
        .zip(means)
        .enumerate()
        .map(|(a, (sample, mean))| {
            let mut u = Vec::with_capacity(3 * q);
            for s in 0..q {
                let top = aligned(mean.spectra()[s].top(), pooled.spectra()[s].top());
                for c in 0..3 {
                    u.push(dot4(&top, &frames[s][c]));
                }
            }
            let cov = covariance_in_frames(sample, pooled, frames).map_err(|e| e.in_group(a))?;
            quadratic_term(&cov, &u, policy).map_err(|e| e.in_group(a))
        })
        .collect()
}

/// Householder completion of each component of `shape`.
pub fn completion_frames<T: Scalar>(shape: &ProjectiveShape<T>) -> Vec<TangentFrame<T>> {
    shape
        .coords()
        .iter()
        .map(|p| {
            let f = orthonormal_completion(p.rep());
            [f[0], f[1], f[2]]
        })
        .collect()
}

/// T_d: dispersion of the group means around their pooled mean.
pub fn manova_t_d<T: Scalar>(samples: &[GroupSample<T>]) -> Result<ManovaResult<T>> {
    let q = check_groups(samples, 2)?;
    let fit = fit_means(samples)?;
    let terms = t_d_terms(
        samples,
        &fit.means,
        &fit.pooled,
        None,
        SingularPolicy::Reject,
    )?;
    Ok(ManovaResult::from_terms(
        StatisticKind::Td,
        terms,
        fit.sizes,
        q,
    ))
}

/// T_c: dispersion of the group means around a hypothesized common mean.
pub fn manova_t_c<T: Scalar>(
    samples: &[GroupSample<T>],
    hypothesized: &ProjectiveShape<T>,
) -> Result<ManovaResult<T>> {
    manova_t_c_with_frames(samples, &completion_frames(hypothesized))
}

/// T_c with explicit tangent frames for the hypothesized shape; each frame
/// must be an orthonormal basis of the complement of that component.
pub fn manova_t_c_with_frames<T: Scalar>(
    samples: &[GroupSample<T>],
    frames: &[TangentFrame<T>],
) -> Result<ManovaResult<T>> {
    let q = check_groups(samples, 2)?;
    let fit = fit_means(samples)?;
    let terms = t_c_terms(
        samples,
        &fit.means,
        &fit.pooled,
        frames,
        SingularPolicy::Reject,
    )?;
    Ok(ManovaResult::from_terms(
        StatisticKind::Tc,
        terms,
        fit.sizes,
        q,
    ))
}

/// One-sample statistic `n u^T S^{-1} u`, `u_(s,c) = <g_s(4), nu_s(c)>`,
/// where `nu_s(1..3)` complete the hypothesized point and `S` is the
/// group's own covariance expressed in those directions.
pub fn one_sample_statistic_with_frames<T: Scalar>(
    sample: &GroupSample<T>,
    mean: &MeanWithSpectrum<T>,
    frames: &[TangentFrame<T>],
) -> Result<T> {
    let q = sample.q();
    if frames.len() != q || mean.q() != q {
        return Err(Error::InvalidInput(
            "hypothesized shape disagrees on q".into(),
        ));
    }
    let mut u = Vec::with_capacity(3 * q);
    for s in 0..q {
        for c in 0..3 {
            u.push(dot4(mean.spectra()[s].top(), &frames[s][c]));
        }
    }
    let cov = covariance_in_frames(sample, mean, frames)?;
    quadratic_term(&cov, &u, SingularPolicy::Reject)
}

/// One-sample test of a hypothesized extrinsic mean on (RP^3)^q;
/// asymptotically chi-squared with 3q degrees of freedom under the null.
pub fn one_sample_statistic_shape<T: Scalar>(
    sample: &GroupSample<T>,
    hypothesized: &ProjectiveShape<T>,
) -> Result<T> {
    let mean = vw_sample_mean(sample)?;
    one_sample_statistic_with_frames(sample, &mean, &completion_frames(hypothesized))
}

/// One-sample statistic for q = 1.
pub fn one_sample_statistic<T: Scalar>(
    sample: &GroupSample<T>,
    hypothesized: &crate::projective::HomogeneousPoint<T>,
) -> Result<T> {
    if sample.q() != 1 {
        return Err(Error::InvalidInput(format!(
            "one-sample statistic on RP^3 needs q = 1, got {}",
            sample.q()
        )));
    }
    one_sample_statistic_shape(sample, &ProjectiveShape::new(vec![*hypothesized])?)
}

/// Confidence-region variant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionVariant {
    /// T_c evaluated at the candidate.
    C,
    /// T_d with the candidate replacing the pooled mean in the difference.
    D,
}

/// Statistic defining the confidence region, evaluated at `candidate`.
pub fn confidence_region_statistic<T: Scalar>(
    samples: &[GroupSample<T>],
    candidate: &ProjectiveShape<T>,
    variant: RegionVariant,
) -> Result<T> {
    check_groups(samples, 1)?;
    let fit = fit_means(samples)?;
    if candidate.q() != fit.q() {
        return Err(Error::InvalidInput("candidate disagrees on q".into()));
    }
    let terms = match variant {
        RegionVariant::D => t_d_terms(
            samples,
            &fit.means,
            &fit.pooled,
            Some(candidate),
            SingularPolicy::Reject,
        )?,
        RegionVariant::C => t_c_terms(
            samples,
            &fit.means,
            &fit.pooled,
            &completion_frames(candidate),
            SingularPolicy::Reject,
        )?,
    };
    Ok(terms.into_iter().sum())
}

/// Whether `candidate` lies in the region `{statistic <= cutoff}`.
pub fn confidence_region_contains<T: Scalar>(
    samples: &[GroupSample<T>],
    candidate: &ProjectiveShape<T>,
    cutoff: T,
    variant: RegionVariant,
) -> Result<bool> {
    Ok(confidence_region_statistic(samples, candidate, variant)? <= cutoff)
}

/// Euclidean MANOVA without a common covariance assumption.
#[derive(Clone, Debug, PartialEq)]
pub struct EuclideanManova<T> {
    pub statistic: T,
    pub df: usize,
    pub p_value: f64,
}

/// `sum_a n_a (xbar_a - xbar)^T S_a^{-1} (xbar_a - xbar)` with unbiased
/// `S_a` and `xbar` the size-weighted grand mean; df = g p.
pub fn euclidean_manova<T: Scalar>(groups: &[Vec<Vec<T>>]) -> Result<EuclideanManova<T>> {
    let g = groups.len();
    if g == 0 {
        return Err(Error::InvalidInput("need at least one group".into()));
    }
    let p = groups[0].first().map_or(0, Vec::len);
    if p == 0 {
        return Err(Error::InvalidInput(
            "observations must have dimension >= 1".into(),
        ));
    }
    for (a, grp) in groups.iter().enumerate() {
        if grp.iter().any(|x| x.len() != p) {
            return Err(Error::InvalidInput(format!(
                "group {} has observations of inconsistent dimension",
                a + 1
            )));
        }
        if grp.len() <= p {
            return Err(Error::InvalidInput(format!(
                "group {} has n = {} but needs n > p = {p}",
                a + 1,
                grp.len()
            )));
        }
    }
    let means: Vec<Vec<T>> = groups
        .iter()
        .map(|grp| {
            let n = T::from_count(grp.len());
            (0..p)
                .map(|j| grp.iter().map(|x| x[j]).sum::<T>() / n)
                .collect()
        })
        .collect();
    let n_total: usize = groups.iter().map(Vec::len).sum();
    let grand: Vec<T> = (0..p)
        .map(|j| {
            groups
                .iter()
                .zip(&means)
                .map(|(grp, m)| T::from_count(grp.len()) * m[j])
                .sum::<T>()
                / T::from_count(n_total)
        })
        .collect();
    let mut statistic = T::zero();
    for (a, (grp, m)) in groups.iter().zip(&means).enumerate() {
        let mut s = Matrix::zeros(p, p);
        for x in grp {
            for i in 0..p {
                for j in 0..p {
                    s[(i, j)] += (x[i] - m[i]) * (x[j] - m[j]);
                }
            }
        }
        let denom = T::from_count(grp.len() - 1);
        for i in 0..p {
            for j in 0..p {
                s[(i, j)] /= denom;
            }
        }
        let f = SpdMatrix::new_unchecked(s)
            .factor()
            .map_err(|e| e.in_group(a))?;
        let d: Vec<T> = m.iter().zip(&grand).map(|(u, v)| *u - *v).collect();
        statistic += T::from_count(grp.len()) * f.inverse_quadratic_form(&d);
    }
    let df = g * p;
    Ok(EuclideanManova {
        statistic,
        df,
        p_value: chi2_sf(df, statistic.to_f64_lossy().max(0.0)),
    })
}
