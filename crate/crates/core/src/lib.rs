//! Equality tests for extrinsic (Veronese-Whitney) mean 3D projective
//! shapes across several independent groups of landmark configurations.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`). The
//! aliases at the crate root fix the scalar to `f64`, which is what the
//! pipeline, the bootstrap driver and the command-line tool use.

// index loops mirror the matrix formulas; negated comparisons catch NaN
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod bootstrap;
pub mod chi2;
pub mod dataset;
pub mod error;
pub mod linalg;
pub mod means;
pub mod pipeline;
pub mod projective;
pub mod scalar;
pub mod simulate;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use chi2::{chi2_cdf, chi2_quantile, chi2_sf};
pub use linalg::{eig_sym4, spd_solve};
pub use means::{pooled_sample_mean, vw_embed, vw_project, vw_sample_mean, MeanFrame};
pub use projective::{frame_registration_matrix, point_from_affine, projective_coordinates};
pub use stats::{
    confidence_region_contains, euclidean_manova, manova_t_c, manova_t_d, one_sample_statistic,
    tangent_coords, vw_covariance, RegionVariant, SingularPolicy, StatisticKind,
};

pub type SymMat4 = linalg::SymMat4<f64>;
pub type EigenSystem4 = linalg::EigenSystem4<f64>;
pub type SpdMatrix = linalg::SpdMatrix<f64>;
pub type HomogeneousPoint = projective::HomogeneousPoint<f64>;
pub type ProjectiveFrame = projective::ProjectiveFrame<f64>;
pub type LandmarkConfig = projective::LandmarkConfig<f64>;
pub type ProjectiveShape = projective::ProjectiveShape<f64>;
pub type GroupSample = means::GroupSample<f64>;
pub type EmbeddedShape = means::EmbeddedShape<f64>;
pub type MeanWithSpectrum = means::MeanWithSpectrum<f64>;
pub type PooledMean = means::PooledMean<f64>;
pub type TangentVector = stats::TangentVector<f64>;
pub type VwCovariance = stats::VwCovariance<f64>;
pub type ManovaResult = stats::ManovaResult<f64>;

/// Single-precision variants.
pub mod f32 {
    pub type HomogeneousPoint = crate::projective::HomogeneousPoint<f32>;
    pub type ProjectiveShape = crate::projective::ProjectiveShape<f32>;
    pub type GroupSample = crate::means::GroupSample<f32>;
    pub type MeanWithSpectrum = crate::means::MeanWithSpectrum<f32>;
    pub type ManovaResult = crate::stats::ManovaResult<f32>;
}
