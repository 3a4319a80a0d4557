//! Points of RP^3, projective frames, and registration of k-landmark
//! configurations into projective coordinates in (RP^3)^(k-5).

use crate::error::{Error, Result};
use crate::linalg::{canonical_sign, dot4, invert4, mat4_mul_vec, normalize4, Mat4, Vec4};
use crate::scalar::Scalar;

/// Default tolerance of the point-equality predicate.
pub const POINT_EQ_TOL: f64 = 1e-9;

/// A point `[x]` of RP^3, held as a unit representative. `x` and `-x`
/// denote the same point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HomogeneousPoint<T> {
    rep: Vec4<T>,
}

impl<T: Scalar> HomogeneousPoint<T> {
    /// Normalizes any nonzero finite 4-vector.
    pub fn new(x: Vec4<T>) -> Result<Self> {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "non-finite homogeneous coordinates".into(),
            ));
        }
        normalize4(&x)
            .map(|rep| Self { rep })
            .ok_or_else(|| Error::InvalidInput("zero vector is not a projective point".into()))
    }

    /// Wraps a vector already known to be unit length.
    pub(crate) fn from_unit(rep: Vec4<T>) -> Self {
        debug_assert!((dot4(&rep, &rep) - T::one()).abs() < T::lit(1e-6));
        Self { rep }
    }

    /// The standard basis point `[e_i]`, zero-based.
    pub fn basis(i: usize) -> Self {
        let mut rep = [T::zero(); 4];
        rep[i] = T::one();
        Self { rep }
    }

    pub fn rep(&self) -> &Vec4<T> {
        &self.rep
    }

    pub fn negated(&self) -> Self {
        Self {
            rep: [-self.rep[0], -self.rep[1], -self.rep[2], -self.rep[3]],
        }
    }

    /// Same point with its representative in canonical sign.
    pub fn canonical(&self) -> Self {
        Self {
            rep: canonical_sign(self.rep),
        }
    }

    /// `|<x, y>|`, the cosine of the angle between the two lines.
    pub fn abs_cos(&self, other: &Self) -> T {
        dot4(&self.rep, &other.rep).abs().min(T::one())
    }

    /// `sqrt(1 - <x, y>^2)`: sine of the angle between the lines.
    pub fn distance(&self, other: &Self) -> T {
        let c = dot4(&self.rep, &other.rep);
        (T::one() - c * c).max(T::zero()).sqrt()
    }

    /// Point equality: `|<x, y>| > 1 - tol`.
    pub fn approx_eq(&self, other: &Self, tol: T) -> bool {
        dot4(&self.rep, &other.rep).abs() > T::one() - tol
    }

    /// Applies a linear map of R^4 and renormalizes.
    pub fn transformed(&self, m: &Mat4<T>) -> Result<Self> {
        Self::new(mat4_mul_vec(m, &self.rep))
    }
}

/// `[x : y : z : 1]` normalized to unit length.
pub fn point_from_affine<T: Scalar>(xyz: [T; 3]) -> Result<HomogeneousPoint<T>> {
    HomogeneousPoint::new([xyz[0], xyz[1], xyz[2], T::one()])
}

/// Five points `([u1], ..., [u5])` in general position.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjectiveFrame<T> {
    points: [HomogeneousPoint<T>; 5],
}

impl<T: Scalar> ProjectiveFrame<T> {
    pub fn new(points: [HomogeneousPoint<T>; 5]) -> Result<Self> {
        let frame = Self { points };
        frame_registration_matrix(&frame)?;
        Ok(frame)
    }

    /// `([e1], [e2], [e3], [e4], [1:1:1:1])`.
    pub fn standard() -> Self {
        let h = T::lit(0.5);
        Self {
            points: [
                HomogeneousPoint::basis(0),
                HomogeneousPoint::basis(1),
                HomogeneousPoint::basis(2),
                HomogeneousPoint::basis(3),
                HomogeneousPoint::from_unit([h, h, h, h]),
            ],
        }
    }

    pub fn points(&self) -> &[HomogeneousPoint<T>; 5] {
        &self.points
    }
}

/// Matrix sending `[u_i] -> [e_i]` (i = 1..4) and `[u5] -> [1:1:1:1]`.
///
/// With `U = [u1 u2 u3 u4]` and `U lambda = u5`, this is `B^{-1}` for
/// `B = U diag(lambda)`. The result is unique up to a global scale.
pub fn frame_registration_matrix<T: Scalar>(frame: &ProjectiveFrame<T>) -> Result<Mat4<T>> {
    let p = &frame.points;
    let mut u = [[T::zero(); 4]; 4];
    for (col, pt) in p.iter().take(4).enumerate() {
        for row in 0..4 {
            u[row][col] = pt.rep[row];
        }
    }
    let u_inv = invert4(&u, T::frame_tol()).ok_or_else(|| Error::DegenerateFrame {
        reason: "first four frame points are linearly dependent".into(),
    })?;
    let lambda = mat4_mul_vec(&u_inv, &p[4].rep);
    if let Some(i) = lambda.iter().position(|l| !(l.abs() >= T::frame_tol())) {
        return Err(Error::DegenerateFrame {
            reason: format!(
                "fifth frame point lies in the span of three others (lambda_{} = {:e})",
                i + 1,
                lambda[i].to_f64_lossy()
            ),
        });
    }
    let mut out = u_inv;
    for (row, l) in out.iter_mut().zip(lambda.iter()) {
        for v in row.iter_mut() {
            *v /= *l;
        }
    }
    Ok(out)
}

/// A point of (RP^3)^q.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectiveShape<T> {
    coords: Vec<HomogeneousPoint<T>>,
}

impl<T: Scalar> ProjectiveShape<T> {
    pub fn new(coords: Vec<HomogeneousPoint<T>>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidInput(
                "a projective shape needs q >= 1".into(),
            ));
        }
        Ok(Self { coords })
    }

    /// Builds a shape from raw 4-vectors, normalizing each.
    pub fn from_vectors(vs: &[Vec4<T>]) -> Result<Self> {
        Self::new(
            vs.iter()
                .map(|v| HomogeneousPoint::new(*v))
                .collect::<Result<_>>()?,
        )
    }

    pub fn q(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[HomogeneousPoint<T>] {
        &self.coords
    }

    pub fn component(&self, s: usize) -> &HomogeneousPoint<T> {
        &self.coords[s]
    }

    /// Copy with component `s` negated.
    pub fn with_negated(&self, s: usize) -> Self {
        let mut out = self.clone();
        out.coords[s] = out.coords[s].negated();
        out
    }

    pub fn approx_eq(&self, other: &Self, tol: T) -> bool {
        self.q() == other.q()
            && self
                .coords
                .iter()
                .zip(&other.coords)
                .all(|(a, b)| a.approx_eq(b, tol))
    }

    /// Largest component-wise `sqrt(1 - <x, y>^2)`.
    pub fn max_distance(&self, other: &Self) -> T {
        self.coords
            .iter()
            .zip(&other.coords)
            .fold(T::zero(), |m, (a, b)| m.max(a.distance(b)))
    }
}

/// An ordered k-ad of points with the indices of its five frame landmarks.
#[derive(Clone, Debug, PartialEq)]
pub struct LandmarkConfig<T> {
    landmarks: Vec<HomogeneousPoint<T>>,
    frame_indices: [usize; 5],
}

impl<T: Scalar> LandmarkConfig<T> {
    /// `frame_indices` are zero-based.
    pub fn new(landmarks: Vec<HomogeneousPoint<T>>, frame_indices: [usize; 5]) -> Result<Self> {
        let k = landmarks.len();
        if k < 6 {
            return Err(Error::InvalidInput(format!(
                "need k >= 6 landmarks, got {k}"
            )));
        }
        validate_frame_indices(&frame_indices, k)?;
        let config = Self {
            landmarks,
            frame_indices,
        };
        config.frame()?;
        Ok(config)
    }

    pub fn k(&self) -> usize {
        self.landmarks.len()
    }

    pub fn landmarks(&self) -> &[HomogeneousPoint<T>] {
        &self.landmarks
    }

    pub fn frame_indices(&self) -> &[usize; 5] {
        &self.frame_indices
    }

    pub fn frame(&self) -> Result<ProjectiveFrame<T>> {
        let pts = self.frame_indices.map(|i| self.landmarks[i]);
        ProjectiveFrame::new(pts)
    }

    /// Indices of the q non-frame landmarks, ascending.
    pub fn free_indices(&self) -> Vec<usize> {
        (0..self.k())
            .filter(|i| !self.frame_indices.contains(i))
            .collect()
    }

    /// Applies one linear map of R^4 to every landmark.
    pub fn transformed(&self, m: &Mat4<T>) -> Result<Self> {
        let landmarks = self
            .landmarks
            .iter()
            .map(|p| p.transformed(m))
            .collect::<Result<Vec<_>>>()?;
        Self::new(landmarks, self.frame_indices)
    }
}

/// Checks five distinct zero-based indices below `k`.
pub fn validate_frame_indices(idx: &[usize; 5], k: usize) -> Result<()> {
    for (a, &i) in idx.iter().enumerate() {
        if i >= k {
            return Err(Error::InvalidInput(format!(
                "frame index {} out of range for k = {k}",
                i + 1
            )));
        }
        if idx[..a].contains(&i) {
            return Err(Error::InvalidInput(format!(
                "duplicate frame index {}",
                i + 1
            )));
        }
    }
    Ok(())
}

/// Registers the configuration on its frame and returns the q = k - 5
/// projective coordinates of the remaining landmarks in index order.
pub fn projective_coordinates<T: Scalar>(config: &LandmarkConfig<T>) -> Result<ProjectiveShape<T>> {
    let reg = frame_registration_matrix(&config.frame()?)?;
    let coords = config
        .free_indices()
        .into_iter()
        .map(|i| {
            let image = mat4_mul_vec(&reg, config.landmarks[i].rep());
            normalize4(&image)
                .map(|v| HomogeneousPoint::from_unit(canonical_sign(v)))
                .ok_or(Error::DegenerateLandmark { index: i })
        })
        .collect::<Result<Vec<_>>>()?;
    ProjectiveShape::new(coords)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::mat4_mul;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn hp(x: [f64; 4]) -> HomogeneousPoint<f64> {
        HomogeneousPoint::new(x).unwrap()
    }

    fn random_config(rng: &mut ChaCha8Rng, k: usize) -> LandmarkConfig<f64> {
        loop {
            let pts = (0..k)
                .map(|_| {
                    point_from_affine([
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                    ])
                    .unwrap()
                })
                .collect();
            if let Ok(c) = LandmarkConfig::new(pts, [0, 1, 2, 3, 4]) {
                return c;
            }
        }
    }

    #[test]
    fn affine_points() {
        assert_eq!(
            point_from_affine([0.0, 0.0, 0.0]).unwrap().rep(),
            &[0.0, 0.0, 0.0, 1.0]
        );
        let s = 1.0 / 2.0f64.sqrt();
        let p = point_from_affine([1.0, 0.0, 0.0]).unwrap();
        assert!((p.rep()[0] - s).abs() < 1e-15 && (p.rep()[3] - s).abs() < 1e-15);
        let p = point_from_affine([3.0, 4.0, 0.0]).unwrap();
        let n = 26.0f64.sqrt();
        for (a, b) in p.rep().iter().zip([3.0 / n, 4.0 / n, 0.0, 1.0 / n]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn antipodal_equality() {
        let p = hp([1.0, -2.0, 0.5, 3.0]);
        assert!(p.approx_eq(&p.negated(), 1e-12));
        assert!(!p.approx_eq(&hp([1.0, 0.0, 0.0, 0.0]), 1e-9));
    }

    #[test]
    fn standard_frame_registers_to_identity() {
        let m = frame_registration_matrix(&ProjectiveFrame::<f64>::standard()).unwrap();
        let scale = m[0][0];
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { scale } else { 0.0 };
                assert!((m[i][j] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fifth_point_on_axis_is_degenerate() {
        let f = ProjectiveFrame::<f64>::standard();
        let mut pts = *f.points();
        pts[4] = HomogeneousPoint::basis(0);
        assert!(matches!(
            ProjectiveFrame::new(pts),
            Err(Error::DegenerateFrame { .. })
        ));
        // coplanar first four
        let pts = [
            hp([1.0, 0.0, 0.0, 0.0]),
            hp([0.0, 1.0, 0.0, 0.0]),
            hp([1.0, 1.0, 0.0, 0.0]),
            hp([0.0, 0.0, 0.0, 1.0]),
            hp([1.0, 2.0, 3.0, 4.0]),
        ];
        assert!(ProjectiveFrame::new(pts).is_err());
    }

    #[test]
    fn random_frame_maps_to_standard() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let std_frame = ProjectiveFrame::<f64>::standard();
        for _ in 0..200 {
            let c = random_config(&mut rng, 6);
            let frame = c.frame().unwrap();
            let m = frame_registration_matrix(&frame).unwrap();
            for (p, target) in frame.points().iter().zip(std_frame.points()) {
                let img = p.transformed(&m).unwrap();
                assert!(img.approx_eq(target, 1e-9));
            }
            // inverse restores landmarks
            let inv = invert4(&m, 1e-14).unwrap();
            let round = mat4_mul(&inv, &m);
            for p in c.landmarks() {
                let back = p.transformed(&round).unwrap();
                assert!(back.approx_eq(p, 1e-9));
            }
        }
    }

    #[test]
    fn identity_registration_echoes_landmark() {
        let f = ProjectiveFrame::<f64>::standard();
        let mut lm: Vec<_> = f.points().to_vec();
        lm.push(hp([1.0, 2.0, 3.0, 4.0]));
        let c = LandmarkConfig::new(lm, [0, 1, 2, 3, 4]).unwrap();
        let s = projective_coordinates(&c).unwrap();
        assert_eq!(s.q(), 1);
        assert!(s.component(0).approx_eq(&hp([1.0, 2.0, 3.0, 4.0]), 1e-12));
    }

    #[test]
    fn diagonal_premultiplication_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let d = [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 2.0, 0.0, 0.0],
            [0.0, 0.0, 3.0, 0.0],
            [0.0, 0.0, 0.0, 4.0],
        ];
        for _ in 0..20 {
            let c = random_config(&mut rng, 7);
            let a = projective_coordinates(&c).unwrap();
            let b = projective_coordinates(&c.transformed(&d).unwrap()).unwrap();
            assert!(a.approx_eq(&b, 1e-9));
        }
    }

    #[test]
    fn representative_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let c = random_config(&mut rng, 8);
        let base = projective_coordinates(&c).unwrap();
        for i in 0..c.k() {
            let mut lm = c.landmarks().to_vec();
            lm[i] = lm[i].negated();
            let flipped = LandmarkConfig::new(lm, *c.frame_indices()).unwrap();
            assert!(projective_coordinates(&flipped)
                .unwrap()
                .approx_eq(&base, 1e-9));
        }
    }

    #[test]
    fn frame_index_validation() {
        assert!(validate_frame_indices(&[0, 1, 2, 3, 3], 7).is_err());
        assert!(validate_frame_indices(&[0, 1, 2, 3, 7], 7).is_err());
        assert!(validate_frame_indices(&[6, 1, 2, 3, 0], 7).is_ok());
    }

    #[test]
    fn free_indices_follow_frame_choice() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c = random_config(&mut rng, 7);
        let lm = c.landmarks().to_vec();
        let c2 = LandmarkConfig::new(lm, [6, 0, 2, 4, 5]).unwrap();
        assert_eq!(c2.free_indices(), vec![1, 3]);
    }
}
