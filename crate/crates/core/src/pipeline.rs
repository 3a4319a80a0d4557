//! End-to-end analysis of a landmark dataset: load, fit means, bootstrap
//! test, report.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bootstrap::{
    bootstrap_region_cutoff, bootstrap_t_c, bootstrap_t_d, BootstrapConfig, FailedReplicate,
};
use crate::dataset::{load_dataset, read_specimen, register, Dataset, DatasetManifest};
use crate::error::{Error, Result};
use crate::linalg::Vec4;
use crate::means::{MeanFrame, MeanWithSpectrum};
use crate::projective::ProjectiveShape;
use crate::stats::{
    confidence_region_statistic, fit_means, RegionVariant, SingularPolicy, StatisticKind,
};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    pub statistic: StatisticKind,
    pub bootstrap: BootstrapConfig,
    /// Replaces `3 g q` for the asymptotic p-value.
    pub df_override: Option<usize>,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            statistic: StatisticKind::Td,
            bootstrap: BootstrapConfig::default(),
            df_override: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupMeanReport {
    pub name: String,
    pub size: usize,
    /// Unit representative per component, canonical sign.
    pub mean: Vec<Vec4<f64>>,
    /// Relative top eigengap per component.
    pub eigengaps: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub replicates: usize,
    pub seed: u64,
    pub level: f64,
    pub singular_resamples: SingularPolicy,
    pub cutoff: f64,
    pub successful_replicates: usize,
    pub rank_deficient_replicates: usize,
    pub failed_replicates: Vec<FailedReplicate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticSummary {
    pub df: usize,
    pub df_overridden: bool,
    pub p_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub schema_version: u32,
    pub manifest_path: String,
    pub manifest: DatasetManifest,
    pub q: usize,
    pub group_means: Vec<GroupMeanReport>,
    pub pooled_mean: Vec<Vec4<f64>>,
    pub statistic_kind: StatisticKind,
    pub statistic: f64,
    pub per_group_terms: Vec<f64>,
    pub bootstrap: BootstrapSummary,
    pub asymptotic: AsymptoticSummary,
    /// `statistic > bootstrap.cutoff`.
    pub reject: bool,
}

impl AnalysisReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("report: {e}")))
    }
}

fn shape_reps(shape: &ProjectiveShape<f64>) -> Vec<Vec4<f64>> {
    shape
        .coords()
        .iter()
        .map(|p| *p.canonical().rep())
        .collect()
}

fn group_reports(dataset: &Dataset, means: &[MeanWithSpectrum<f64>]) -> Vec<GroupMeanReport> {
    dataset
        .manifest
        .groups
        .iter()
        .zip(means)
        .zip(&dataset.groups)
        .map(|((entry, m), sample)| GroupMeanReport {
            name: entry.name.clone(),
            size: sample.len(),
            mean: shape_reps(m.mean()),
            eigengaps: m
                .spectra()
                .iter()
                .map(|es| es.relative_eigengap())
                .collect(),
        })
        .collect()
}

/// Group means and pooled mean of a dataset.
pub fn dataset_means(dataset: &Dataset) -> Result<(Vec<GroupMeanReport>, Vec<Vec4<f64>>)> {
    let fit = fit_means(&dataset.groups)?;
    Ok((
        group_reports(dataset, &fit.means),
        shape_reps(fit.pooled.mean()),
    ))
}

/// Runs the bootstrap MANOVA on an already loaded dataset.
pub fn analyze(
    dataset: &Dataset,
    manifest_path: &str,
    opts: &AnalysisOptions,
) -> Result<AnalysisReport> {
    opts.bootstrap.validate()?;
    if opts.df_override == Some(0) {
        return Err(Error::InvalidConfig("df override must be positive".into()));
    }
    if dataset.groups.len() < 2 {
        return Err(Error::InvalidInput(
            "the test needs at least 2 groups".into(),
        ));
    }
    let fit = fit_means(&dataset.groups)?;
    let outcome = match opts.statistic {
        StatisticKind::Td => bootstrap_t_d(&dataset.groups, &opts.bootstrap)?,
        StatisticKind::Tc => bootstrap_t_c(&dataset.groups, &opts.bootstrap)?,
    };
    let observed = match opts.df_override {
        Some(df) => outcome.observed.clone().with_df(df),
        None => outcome.observed.clone(),
    };
    Ok(AnalysisReport {
        schema_version: REPORT_SCHEMA_VERSION,
        manifest_path: manifest_path.to_string(),
        manifest: dataset.manifest.clone(),
        q: fit.q(),
        group_means: group_reports(dataset, &fit.means),
        pooled_mean: shape_reps(fit.pooled.mean()),
        statistic_kind: outcome.kind,
        statistic: observed.statistic,
        per_group_terms: observed.per_group_terms.clone(),
        bootstrap: BootstrapSummary {
            replicates: opts.bootstrap.replicates,
            seed: opts.bootstrap.seed,
            level: opts.bootstrap.level,
            singular_resamples: opts.bootstrap.singular,
            cutoff: outcome.cutoff,
            successful_replicates: outcome.replicate_values.len(),
            rank_deficient_replicates: outcome.rank_deficient_replicates,
            failed_replicates: outcome.failed_replicates,
        },
        asymptotic: AsymptoticSummary {
            df: observed.df_asymptotic,
            df_overridden: opts.df_override.is_some(),
            p_value: observed.p_asymptotic,
        },
        reject: outcome.reject,
    })
}

/// Loads the manifest at `path` and runs [`analyze`].
pub fn run_manova(path: &Path, opts: &AnalysisOptions) -> Result<AnalysisReport> {
    opts.bootstrap.validate()?;
    let dataset = load_dataset(path)?;
    analyze(&dataset, &path.display().to_string(), opts)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionReport {
    pub variant: RegionVariant,
    pub candidate: Vec<Vec4<f64>>,
    pub statistic: f64,
    pub cutoff: f64,
    pub level: f64,
    pub replicates: usize,
    pub seed: u64,
    pub contains: bool,
}

/// Registers a candidate landmark table with the manifest's frame.
pub fn load_candidate(manifest: &DatasetManifest, path: &Path) -> Result<ProjectiveShape<f64>> {
    let points = read_specimen(path, manifest.k, manifest.coordinates)?;
    register(points, manifest.frame_positions()).map_err(|e| Error::Specimen {
        specimen: path.display().to_string(),
        source: Box::new(e),
    })
}

/// Bootstrap confidence region membership of `candidate` for the common
/// mean.
pub fn confidence_region(
    dataset: &Dataset,
    candidate: &ProjectiveShape<f64>,
    variant: RegionVariant,
    cfg: &BootstrapConfig,
) -> Result<RegionReport> {
    let region = bootstrap_region_cutoff(&dataset.groups, variant, cfg)?;
    let statistic = confidence_region_statistic(&dataset.groups, candidate, variant)?;
    Ok(RegionReport {
        variant,
        candidate: shape_reps(candidate),
        statistic,
        cutoff: region.cutoff,
        level: cfg.level,
        replicates: cfg.replicates,
        seed: cfg.seed,
        contains: statistic <= region.cutoff,
    })
}
