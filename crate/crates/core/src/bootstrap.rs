//! Nonparametric bootstrap cutoffs for the g-sample statistics.
//!
//! Each replicate resamples every group with replacement (within group)
//! and recomputes the group means, the pooled mean and the covariances,
//! with eigen-data from the resampled pooled mean. Replicates are centered
//! at the original sample, so that their spread mimics the sampling error
//! of the observed statistic:
//!
//! * for the equality tests, the resampled group-minus-pooled offsets are
//!   compared with the original offsets;
//! * for confidence regions of a common mean, each resampled group mean is
//!   compared with the original mean of its group.
//!
//! The d-variants use the tangent frame of the resampled pooled mean, the
//! c-variants the fixed frame of the original pooled mean. Replicate `b`
//! draws from its own ChaCha8 stream (`seed`, stream `b`), so results do
//! not depend on how replicates are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::means::GroupSample;
use crate::scalar::Scalar;
use crate::stats::{
    covariance_in_frames, fit_means, frame_coords, manova_t_d, own_frames, quadratic_term,
    t_c_terms, t_d_terms, tangent_coords, vw_covariance, ManovaFit, ManovaResult, RegionVariant,
    SingularPolicy, StatisticKind, TangentFrame,
};

/// Smallest accepted replicate count.
pub const MIN_REPLICATES: usize = 100;

/// Share of replicates (in percent) allowed to fail before the run is
/// abandoned.
pub const MAX_FAILED_PERCENT: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub replicates: usize,
    /// Confidence level `1 - c`.
    pub level: f64,
    pub seed: u64,
    /// Thread count; `None` uses the global rayon pool.
    pub worker_hint: Option<usize>,
    /// Treatment of resampled covariances that lose rank because of
    /// repeated draws.
    pub singular: SingularPolicy,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            replicates: 10_000,
            level: 0.95,
            seed: 0,
            worker_hint: None,
            singular: SingularPolicy::PseudoInverse,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates < MIN_REPLICATES {
            return Err(Error::InvalidConfig(format!(
                "at least {MIN_REPLICATES} bootstrap replicates are required, got {}",
                self.replicates
            )));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "level must lie in (0, 1), got {}",
                self.level
            )));
        }
        if self.worker_hint == Some(0) {
            return Err(Error::InvalidConfig("worker count must be positive".into()));
        }
        Ok(())
    }

    /// Random stream for replicate `index`.
    pub fn stream(&self, index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        rng
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailedReplicate {
    pub replicate: usize,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BootstrapOutcome<T> {
    pub kind: StatisticKind,
    /// Statistic on the original data.
    pub observed: ManovaResult<T>,
    pub cutoff: T,
    pub reject: bool,
    /// Successful replicate values in replicate order.
    pub replicate_values: Vec<T>,
    pub failed_replicates: Vec<FailedReplicate>,
    /// Replicates whose covariance needed the pseudo-inverse.
    pub rank_deficient_replicates: usize,
}

/// Draws `n_a` shapes with replacement.
pub fn resample_group<T: Scalar, R: Rng + ?Sized>(
    sample: &GroupSample<T>,
    rng: &mut R,
) -> GroupSample<T> {
    let n = sample.len();
    let shapes = (0..n)
        .map(|_| sample.shapes()[rng.random_range(0..n)].clone())
        .collect();
    GroupSample::new(shapes).expect("resample of a valid sample is valid")
}

/// `ceil(m * level)`-th order statistic (1-based) of `values`.
pub fn bootstrap_quantile<T: Scalar>(values: &[T], level: f64) -> Option<T> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite replicate values"));
    let rank = ((values.len() as f64) * level).ceil() as usize;
    Some(sorted[rank.clamp(1, values.len()) - 1])
}

struct Replicate<T> {
    value: T,
    rank_deficient: bool,
}

fn run_replicates<T, F>(
    samples: &[GroupSample<T>],
    cfg: &BootstrapConfig,
    eval: F,
) -> Result<(Vec<T>, Vec<FailedReplicate>, usize)>
where
    T: Scalar,
    F: Fn(&[GroupSample<T>], &ManovaFit<T>, SingularPolicy) -> Result<T> + Sync,
{
    let one = |b: usize| -> Result<Replicate<T>> {
        let mut rng = cfg.stream(b);
        let resampled: Vec<GroupSample<T>> = samples
            .iter()
            .map(|s| resample_group(s, &mut rng))
            .collect();
        let fit = fit_means(&resampled)?;
        match eval(&resampled, &fit, SingularPolicy::Reject) {
            Ok(value) => Ok(Replicate {
                value,
                rank_deficient: false,
            }),
            Err(Error::SingularCovariance { .. })
                if cfg.singular == SingularPolicy::PseudoInverse =>
            {
                eval(&resampled, &fit, SingularPolicy::PseudoInverse).map(|value| Replicate {
                    value,
                    rank_deficient: true,
                })
            }
            Err(e) => Err(e),
        }
    };
    let run =
        || -> Vec<Result<Replicate<T>>> { (0..cfg.replicates).into_par_iter().map(one).collect() };
    let results = match cfg.worker_hint {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    };

    let mut values = Vec::with_capacity(cfg.replicates);
    let mut failed = Vec::new();
    let mut rank_deficient = 0;
    for (b, r) in results.into_iter().enumerate() {
        match r {
            Ok(rep) if rep.value.is_finite() => {
                rank_deficient += usize::from(rep.rank_deficient);
                values.push(rep.value);
            }
            Ok(_) => failed.push(FailedReplicate {
                replicate: b,
                reason: "non-finite statistic".into(),
            }),
            Err(e) => failed.push(FailedReplicate {
                replicate: b,
                reason: e.to_string(),
            }),
        }
    }
    let limit = cfg.replicates * MAX_FAILED_PERCENT / 100;
    if failed.len() > limit {
        return Err(Error::TooManyDegenerateReplicates {
            failed: failed.len(),
            total: cfg.replicates,
            limit,
        });
    }
    Ok((values, failed, rank_deficient))
}

fn finish<T: Scalar>(
    observed: ManovaResult<T>,
    cfg: &BootstrapConfig,
    (values, failed, rank_deficient): (Vec<T>, Vec<FailedReplicate>, usize),
) -> BootstrapOutcome<T> {
    let cutoff = bootstrap_quantile(&values, cfg.level).unwrap_or(T::infinity());
    BootstrapOutcome {
        kind: observed.kind,
        reject: observed.statistic > cutoff,
        observed,
        cutoff,
        replicate_values: values,
        failed_replicates: failed,
        rank_deficient_replicates: rank_deficient,
    }
}

/// Original-sample quantities a replicate is centered at.
struct Reference<T> {
    fit: ManovaFit<T>,
    /// Tangent frame of the original pooled mean.
    frames: Vec<TangentFrame<T>>,
}

impl<T: Scalar> Reference<T> {
    fn new(samples: &[GroupSample<T>]) -> Result<Self> {
        let fit = fit_means(samples)?;
        let frames = own_frames(&fit.pooled);
        Ok(Self { fit, frames })
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Centering {
    Offsets,
    GroupMeans,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Frame {
    Resampled,
    Original,
}

fn replicate_value<T: Scalar>(
    resampled: &[GroupSample<T>],
    fit: &ManovaFit<T>,
    reference: &Reference<T>,
    frame: Frame,
    centering: Centering,
    policy: SingularPolicy,
) -> Result<T> {
    let original = &reference.fit;
    let anchor = original.pooled.mean();
    let mut total = T::zero();
    for (a, sample) in resampled.iter().enumerate() {
        let (v, cov) = match frame {
            Frame::Resampled => {
                let mut v = tangent_coords(fit.means[a].mean(), &fit.pooled)
                    .sub(&tangent_coords(original.means[a].mean(), &fit.pooled));
                if centering == Centering::Offsets {
                    // the resampled pooled mean has zero coordinates here
                    v = v.add(&tangent_coords(anchor, &fit.pooled));
                }
                (v.coords().to_vec(), vw_covariance(sample, &fit.pooled))
            }
            Frame::Original => {
                let frames = &reference.frames;
                let star = frame_coords(fit.means[a].mean(), frames, anchor);
                let orig = frame_coords(original.means[a].mean(), frames, anchor);
                let mut v: Vec<T> = star.iter().zip(&orig).map(|(x, y)| *x - *y).collect();
                if centering == Centering::Offsets {
                    let pooled = frame_coords(fit.pooled.mean(), frames, anchor);
                    v.iter_mut().zip(&pooled).for_each(|(x, p)| *x -= *p);
                }
                (v, covariance_in_frames(sample, &fit.pooled, frames))
            }
        };
        let cov = cov.map_err(|e| e.in_group(a))?;
        total += quadratic_term(&cov, &v, policy).map_err(|e| e.in_group(a))?;
    }
    Ok(total)
}

/// Bootstrap equality test based on T_d, the dispersion of the group means
/// around their pooled mean in its own tangent frame.
pub fn bootstrap_t_d<T: Scalar>(
    samples: &[GroupSample<T>],
    cfg: &BootstrapConfig,
) -> Result<BootstrapOutcome<T>> {
    cfg.validate()?;
    let observed = manova_t_d(samples)?;
    let reference = Reference::new(samples)?;
    let reps = run_replicates(samples, cfg, |res, fit, policy| {
        replicate_value(
            res,
            fit,
            &reference,
            Frame::Resampled,
            Centering::Offsets,
            policy,
        )
    })?;
    Ok(finish(observed, cfg, reps))
}

/// Bootstrap equality test based on T_c at the pooled sample mean, with
/// the pooled mean's eigenframe as the fixed tangent frame.
pub fn bootstrap_t_c<T: Scalar>(
    samples: &[GroupSample<T>],
    cfg: &BootstrapConfig,
) -> Result<BootstrapOutcome<T>> {
    cfg.validate()?;
    if samples.len() < 2 {
        return Err(Error::InvalidInput("need at least 2 groups".into()));
    }
    let reference = Reference::new(samples)?;
    let fit = &reference.fit;
    let terms = t_c_terms(
        samples,
        &fit.means,
        &fit.pooled,
        &reference.frames,
        SingularPolicy::Reject,
    )?;
    let observed = ManovaResult::from_terms(StatisticKind::Tc, terms, fit.sizes.clone(), fit.q());
    let reps = run_replicates(samples, cfg, |res, fit, policy| {
        replicate_value(
            res,
            fit,
            &reference,
            Frame::Original,
            Centering::Offsets,
            policy,
        )
    })?;
    Ok(finish(observed, cfg, reps))
}

/// Bootstrap cutoff of a confidence region for the common mean.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionCutoff<T> {
    pub variant: RegionVariant,
    pub cutoff: T,
    pub replicate_values: Vec<T>,
    pub failed_replicates: Vec<FailedReplicate>,
    pub rank_deficient_replicates: usize,
}

/// Cutoff for the region `{nu : statistic(nu) <= cutoff}`; variant C uses
/// the fixed original frame, variant D the resampled pooled frame.
pub fn bootstrap_region_cutoff<T: Scalar>(
    samples: &[GroupSample<T>],
    variant: RegionVariant,
    cfg: &BootstrapConfig,
) -> Result<RegionCutoff<T>> {
    cfg.validate()?;
    let reference = Reference::new(samples)?;
    let fit = &reference.fit;
    // original covariances must be usable
    t_d_terms(
        samples,
        &fit.means,
        &fit.pooled,
        None,
        SingularPolicy::Reject,
    )?;
    let frame = match variant {
        RegionVariant::C => Frame::Original,
        RegionVariant::D => Frame::Resampled,
    };
    let (values, failed, rank_deficient) = run_replicates(samples, cfg, |res, fit, policy| {
        replicate_value(res, fit, &reference, frame, Centering::GroupMeans, policy)
    })?;
    Ok(RegionCutoff {
        variant,
        cutoff: bootstrap_quantile(&values, cfg.level).unwrap_or(T::infinity()),
        replicate_values: values,
        failed_replicates: failed,
        rank_deficient_replicates: rank_deficient,
    })
}
