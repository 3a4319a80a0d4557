use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("covariance matrix is singular or not positive definite{}", group_suffix(*.group))]
    SingularCovariance { group: Option<usize> },

    #[error("projective frame is not in general position: {reason}")]
    DegenerateFrame { reason: String },

    #[error("landmark {index} maps to the zero vector under frame registration")]
    DegenerateLandmark { index: usize },

    #[error("projection undefined: component {component} has top eigengap {gap:e}")]
    FocalPoint { component: usize, gap: f64 },

    #[error("sample mean not unique: component {component} has top eigengap {gap:e}{}", group_suffix(*.group))]
    FocalSample {
        group: Option<usize>,
        component: usize,
        gap: f64,
    },

    #[error("{failed} of {total} bootstrap replicates were degenerate (limit {limit})")]
    TooManyDegenerateReplicates {
        failed: usize,
        total: usize,
        limit: usize,
    },

    #[error("could not build a general-position landmark configuration after {attempts} attempts")]
    DegenerateSpec { attempts: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid manifest {path}: {reason}")]
    Manifest { path: PathBuf, reason: String },

    #[error("{file}:{line}: {reason}")]
    Parse {
        file: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("{file}: expected {expected} landmarks, found {found}")]
    InconsistentK {
        file: PathBuf,
        expected: usize,
        found: usize,
    },

    #[error("specimen {specimen}: {source}")]
    Specimen {
        specimen: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn group_suffix(group: Option<usize>) -> String {
    match group {
        Some(g) => format!(" (group {})", g + 1),
        None => String::new(),
    }
}

impl Error {
    /// Attaches a group index to errors that carry one.
    pub fn in_group(self, index: usize) -> Self {
        match self {
            Error::SingularCovariance { .. } => Error::SingularCovariance { group: Some(index) },
            Error::FocalSample { component, gap, .. } => Error::FocalSample {
                group: Some(index),
                component,
                gap,
            },
            other => other,
        }
    }

    /// Innermost error, looking through specimen context.
    pub fn root(&self) -> &Error {
        match self {
            Error::Specimen { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
