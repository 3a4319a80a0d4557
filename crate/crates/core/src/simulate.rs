//! Seeded synthetic data: concentrated shape distributions on products of
//! projective spaces, and raw landmark datasets written in the dataset
//! file format.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::{
    register, write_specimen, CoordinateKind, DatasetManifest, GroupEntry, FORMAT_VERSION,
};
use crate::error::{Error, Result};
use crate::linalg::{dot4, normalize4, Vec4};
use crate::means::GroupSample;
use crate::projective::{point_from_affine, HomogeneousPoint, ProjectiveShape};

/// Regeneration cap for degenerate landmark configurations.
pub const MAX_ATTEMPTS: usize = 100;

fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn gaussian4<R: Rng + ?Sized>(rng: &mut R) -> Vec4<f64> {
    [
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
    ]
}

/// Draws `normalize(mu_s + eps / kappa_s)` independently per component,
/// with the representative kept in the hemisphere of `mu_s`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShapeDistribution {
    base: ProjectiveShape<f64>,
    concentration: Vec<f64>,
    seed: u64,
}

impl ShapeDistribution {
    pub fn new(base: ProjectiveShape<f64>, concentration: Vec<f64>, seed: u64) -> Result<Self> {
        if concentration.len() != base.q() {
            return Err(Error::InvalidConfig(format!(
                "{} concentrations for {} components",
                concentration.len(),
                base.q()
            )));
        }
        if let Some(k) = concentration.iter().find(|k| !(**k > 0.0 && k.is_finite())) {
            return Err(Error::InvalidConfig(format!(
                "concentration must be positive, got {k}"
            )));
        }
        Ok(Self {
            base,
            concentration,
            seed,
        })
    }

    /// Same concentration for every component.
    pub fn uniform(base: ProjectiveShape<f64>, kappa: f64, seed: u64) -> Result<Self> {
        let q = base.q();
        Self::new(base, vec![kappa; q], seed)
    }

    pub fn base(&self) -> &ProjectiveShape<f64> {
        &self.base
    }

    pub fn concentration(&self) -> &[f64] {
        &self.concentration
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Draw `index`; each draw has its own stream.
    pub fn draw(&self, index: usize) -> ProjectiveShape<f64> {
        let mut rng = stream(self.seed, index as u64);
        let coords = self
            .base
            .coords()
            .iter()
            .zip(&self.concentration)
            .map(|(mu, &kappa)| loop {
                let eps = gaussian4(&mut rng);
                let m = mu.rep();
                let x = std::array::from_fn(|i| m[i] + eps[i] / kappa);
                if let Some(mut x) = normalize4(&x) {
                    if dot4(&x, m) < 0.0 {
                        x = x.map(|v| -v);
                    }
                    break HomogeneousPoint::new(x).expect("unit vector");
                }
            })
            .collect();
        ProjectiveShape::new(coords).expect("same q as base")
    }
}

/// `n` independent draws.
pub fn sample_shapes(dist: &ShapeDistribution, n: usize) -> GroupSample<f64> {
    assert!(n >= 1, "sample size must be positive");
    GroupSample::new((0..n).map(|i| dist.draw(i)).collect()).expect("draws share q")
}

/// Design of a synthetic landmark dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticDatasetSpec {
    pub group_names: Vec<String>,
    pub sizes: Vec<usize>,
    /// 1-based positions of the frame landmarks.
    pub frame_indices: [usize; 5],
    /// Affine base configuration per group, `k` landmarks each.
    pub bases: Vec<Vec<[f64; 3]>>,
    /// Standard deviation of the isotropic Gaussian landmark noise.
    pub noise: f64,
    pub seed: u64,
}

impl SyntheticDatasetSpec {
    pub fn k(&self) -> usize {
        self.bases.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        let g = self.sizes.len();
        if g == 0 || self.bases.len() != g || self.group_names.len() != g {
            return Err(Error::InvalidConfig(
                "sizes, bases and group names must have one entry per group".into(),
            ));
        }
        if self.sizes.contains(&0) {
            return Err(Error::InvalidConfig("group sizes must be positive".into()));
        }
        let k = self.k();
        if k < 6 || self.bases.iter().any(|b| b.len() != k) {
            return Err(Error::InvalidConfig(
                "every base needs the same number k >= 6 of landmarks".into(),
            ));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::InvalidConfig("noise must be non-negative".into()));
        }
        crate::projective::validate_frame_indices(&self.frame_indices.map(|i| i.wrapping_sub(1)), k)
    }

    /// Landmarks of specimen `index` (global counter) of `group`.
    pub fn specimen(&self, group: usize, index: usize) -> Result<Vec<[f64; 3]>> {
        let mut rng = stream(self.seed, index as u64);
        let frame = self.frame_indices.map(|i| i - 1);
        for _ in 0..MAX_ATTEMPTS {
            let config: Vec<[f64; 3]> = self.bases[group]
                .iter()
                .map(|p| {
                    std::array::from_fn(|c| {
                        p[c] + self.noise * rng.sample::<f64, _>(StandardNormal)
                    })
                })
                .collect();
            if registers(&config, frame) {
                return Ok(config);
            }
        }
        Err(Error::DegenerateSpec {
            attempts: MAX_ATTEMPTS,
        })
    }
}

fn registers(config: &[[f64; 3]], frame: [usize; 5]) -> bool {
    let points: Option<Vec<_>> = config.iter().map(|p| point_from_affine(*p).ok()).collect();
    points.is_some_and(|pts| register(pts, frame).is_ok())
}

/// Writes specimen tables under `dir/<group name>/` and the manifest at
/// `manifest_path`; returns the manifest.
pub fn generate_landmark_dataset(
    spec: &SyntheticDatasetSpec,
    manifest_path: &Path,
) -> Result<DatasetManifest> {
    spec.validate()?;
    let root = manifest_path
        .parent()
        .unwrap_or(Path::new(""))
        .to_path_buf();
    let stem = manifest_path
        .file_stem()
        .map_or_else(|| "dataset".into(), |s| s.to_string_lossy().into_owned());

    let mut groups = Vec::with_capacity(spec.sizes.len());
    let mut tables = Vec::new();
    let mut counter = 0;
    for (a, (&n, name)) in spec.sizes.iter().zip(&spec.group_names).enumerate() {
        let mut specimens = Vec::with_capacity(n);
        for i in 0..n {
            let rel = format!("{stem}/{name}/specimen_{:02}.csv", i + 1);
            tables.push((root.join(&rel), spec.specimen(a, counter)?));
            specimens.push(rel);
            counter += 1;
        }
        groups.push(GroupEntry {
            name: name.clone(),
            specimens,
        });
    }

    for (path, landmarks) in &tables {
        let dir = path.parent().expect("specimen path has a parent");
        fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: PathBuf::from(dir),
            source,
        })?;
        write_specimen(path, landmarks)?;
    }
    let manifest = DatasetManifest {
        format_version: FORMAT_VERSION,
        k: spec.k(),
        frame_indices: spec.frame_indices,
        coordinates: CoordinateKind::Affine,
        groups,
    };
    manifest.write(manifest_path)?;
    Ok(manifest)
}
