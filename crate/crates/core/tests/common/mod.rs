#![allow(dead_code)]

use nalgebra::{Matrix4, SMatrix};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use vwmanova::linalg::{Mat4, Vec4};
use vwmanova::means::MeanFrame;
use vwmanova::simulate::{sample_shapes, ShapeDistribution};
use vwmanova::{GroupSample, HomogeneousPoint, LandmarkConfig, ProjectiveShape};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian4(rng: &mut impl Rng) -> Vec4<f64> {
    std::array::from_fn(|_| rng.sample(StandardNormal))
}

pub fn unit4(rng: &mut impl Rng) -> Vec4<f64> {
    loop {
        let v = gaussian4(rng);
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-6 {
            return v.map(|x| x / n);
        }
    }
}

pub fn random_shape(rng: &mut impl Rng, q: usize) -> ProjectiveShape {
    let coords: Vec<Vec4<f64>> = (0..q).map(|_| unit4(rng)).collect();
    ProjectiveShape::from_vectors(&coords).unwrap()
}

/// Concentrated sample around `base`.
pub fn concentrated(base: &ProjectiveShape, kappa: f64, n: usize, seed: u64) -> GroupSample {
    sample_shapes(
        &ShapeDistribution::uniform(base.clone(), kappa, seed).unwrap(),
        n,
    )
}

/// k affine landmarks, a fixed base plus Gaussian jitter.
pub fn random_config(rng: &mut impl Rng, base: &[[f64; 3]], jitter: f64) -> LandmarkConfig {
    let pts = base
        .iter()
        .map(|p| {
            let e: [f64; 3] = std::array::from_fn(|_| rng.sample::<f64, _>(StandardNormal));
            vwmanova::point_from_affine([
                p[0] + jitter * e[0],
                p[1] + jitter * e[1],
                p[2] + jitter * e[2],
            ])
            .unwrap()
        })
        .collect();
    LandmarkConfig::new(pts, [0, 1, 2, 3, 4]).unwrap()
}

pub fn base7() -> Vec<[f64; 3]> {
    vec![
        [0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [1.0, 1.0, 1.0],
        [0.3, 0.6, 0.2],
        [0.7, 0.2, 0.5],
    ]
}

pub fn to_na(m: &Mat4<f64>) -> Matrix4<f64> {
    Matrix4::from_fn(|i, j| m[i][j])
}

/// Random invertible map with 2-norm condition number below `max_cond`.
pub fn random_transform(rng: &mut impl Rng, max_cond: f64) -> Mat4<f64> {
    loop {
        let m: Mat4<f64> = std::array::from_fn(|_| gaussian4(rng));
        let sv = to_na(&m).singular_values();
        let cond = sv.max() / sv.min();
        if cond.is_finite() && cond < max_cond {
            return m;
        }
    }
}

/// Kolmogorov-Smirnov distance between a sample and a continuous cdf.
pub fn ks_distance(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Flips the representative of every component of shape `i`.
pub fn negate_shape(s: &ProjectiveShape) -> ProjectiveShape {
    let coords: Vec<HomogeneousPoint> = s.coords().iter().map(HomogeneousPoint::negated).collect();
    ProjectiveShape::new(coords).unwrap()
}

/// Independent covariance route: the uncentered second moment of the
/// embedded points in R^16, compressed onto the tangent directions
/// `(g(c) g(4)^T + g(4) g(c)^T) / (2 (d(4) - d(c)))` of each component.
pub fn covariance_oracle<F: MeanFrame<f64>>(sample: &GroupSample, base: &F) -> Vec<Vec<f64>> {
    let q = sample.q();
    let dim = 16 * q;
    let n = sample.len() as f64;
    let mut moment = vec![vec![0.0; dim]; dim];
    for shape in sample.shapes() {
        let mut v = Vec::with_capacity(dim);
        for p in shape.coords() {
            let x = p.rep();
            for i in 0..4 {
                for j in 0..4 {
                    v.push(x[i] * x[j]);
                }
            }
        }
        for a in 0..dim {
            for b in 0..dim {
                moment[a][b] += v[a] * v[b] / n;
            }
        }
    }
    // compression columns
    let mut cols = Vec::with_capacity(3 * q);
    for (s, es) in base.spectra().iter().enumerate() {
        let top = es.vector(3);
        for c in 0..3 {
            let gc = es.vector(c);
            let gap = es.value(3) - es.value(c);
            let mut col = vec![0.0; dim];
            for i in 0..4 {
                for j in 0..4 {
                    col[16 * s + 4 * i + j] = (gc[i] * top[j] + top[i] * gc[j]) / (2.0 * gap);
                }
            }
            cols.push(col);
        }
    }
    let m = cols.len();
    let mut out = vec![vec![0.0; m]; m];
    for a in 0..m {
        for b in 0..m {
            let mut acc = 0.0;
            for i in 0..dim {
                if cols[a][i] == 0.0 {
                    continue;
                }
                for j in 0..dim {
                    acc += cols[a][i] * moment[i][j] * cols[b][j];
                }
            }
            out[a][b] = acc;
        }
    }
    out
}

/// Symmetric eigen-decomposition through nalgebra.
pub fn reference_eigen(a: &[[f64; 4]; 4]) -> (Vec<f64>, SMatrix<f64, 4, 4>) {
    let e = nalgebra::SymmetricEigen::new(Matrix4::from_fn(|i, j| a[i][j]));
    (e.eigenvalues.iter().copied().collect(), e.eigenvectors)
}
