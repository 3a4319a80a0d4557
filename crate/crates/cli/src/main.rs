use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use vwmanova::bootstrap::BootstrapConfig;
use vwmanova::dataset::{load_dataset, read_landmarks, register, CoordinateKind};
use vwmanova::pipeline::{
    analyze, confidence_region, dataset_means, load_candidate, AnalysisOptions,
};
use vwmanova::simulate::{generate_landmark_dataset, SyntheticDatasetSpec};
use vwmanova::{euclidean_manova, Error, RegionVariant, SingularPolicy, StatisticKind};

/// Exit status per error class.
mod exit {
    pub const CONFIG: u8 = 2;
    pub const INPUT: u8 = 3;
    pub const DEGENERATE: u8 = 4;
    pub const SINGULAR: u8 = 5;
}

#[derive(Parser)]
#[command(
    name = "vwmanova",
    version,
    about = "Extrinsic MANOVA for 3D projective shapes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum StatisticArg {
    #[value(name = "t_d")]
    Td,
    #[value(name = "t_c")]
    Tc,
}

#[derive(Clone, Copy, ValueEnum)]
enum SingularArg {
    /// Moore-Penrose inverse on the covariance range
    PseudoInverse,
    /// Count the replicate as failed
    Reject,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    C,
    D,
}

#[derive(clap::Args)]
struct BootstrapArgs {
    /// Confidence level 1 - alpha
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// Bootstrap replicates (at least 100)
    #[arg(long, default_value_t = 10_000)]
    replicates: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
    /// Handling of resampled covariances that lose rank through repeated draws
    #[arg(long, value_enum, default_value = "pseudo-inverse")]
    singular_resamples: SingularArg,
}

impl BootstrapArgs {
    fn config(&self) -> BootstrapConfig {
        BootstrapConfig {
            replicates: self.replicates,
            level: self.level,
            seed: self.seed,
            worker_hint: self.threads,
            singular: match self.singular_resamples {
                SingularArg::PseudoInverse => SingularPolicy::PseudoInverse,
                SingularArg::Reject => SingularPolicy::Reject,
            },
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Test equality of the group extrinsic means with a bootstrap cutoff
    Manova {
        #[arg(long)]
        manifest: PathBuf,
        #[command(flatten)]
        bootstrap: BootstrapArgs,
        /// Degrees of freedom for the asymptotic p-value instead of 3gq
        #[arg(long)]
        df_override: Option<usize>,
        #[arg(long, value_enum, default_value = "t_d")]
        statistic: StatisticArg,
        /// Write the report here instead of standard output
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Projective coordinates of one specimen table
    Coords {
        #[arg(long)]
        specimen: PathBuf,
        /// 1-based positions of the five frame landmarks, comma separated
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
        frame: Vec<usize>,
        /// Rows are x,y,z,w instead of x,y,z
        #[arg(long)]
        homogeneous: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Extrinsic sample mean of each group and the pooled mean
    Mean {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Whether a candidate shape lies in the bootstrap confidence region
    Ci {
        #[arg(long)]
        manifest: PathBuf,
        /// Landmark table registered with the manifest's frame
        #[arg(long)]
        candidate: PathBuf,
        #[arg(long, value_enum, default_value = "d")]
        variant: VariantArg,
        #[command(flatten)]
        bootstrap: BootstrapArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic landmark dataset from a JSON design
    Simulate {
        /// Dataset design (group_names, sizes, frame_indices, bases, noise, seed)
        #[arg(long)]
        spec: PathBuf,
        /// Manifest path; specimen tables go in a sibling directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Euclidean MANOVA on a table with rows group,x1,...,xp
    Euclidean {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum Failure {
    Analysis(Error),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Analysis(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => exit::CONFIG,
            Failure::Analysis(e) => match e.root() {
                Error::InvalidConfig(_) | Error::InvalidInput(_) => exit::CONFIG,
                Error::Parse { .. }
                | Error::Manifest { .. }
                | Error::InconsistentK { .. }
                | Error::Io { .. } => exit::INPUT,
                Error::SingularCovariance { .. } => exit::SINGULAR,
                _ => exit::DEGENERATE,
            },
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => f.write_str(m),
            Failure::Analysis(e) => write!(f, "{e}"),
        }
    }
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).expect("output serializes");
    text.push('\n');
    match out {
        Some(path) => fs::write(path, text).map_err(|source| {
            Failure::Analysis(Error::Io {
                path: path.to_path_buf(),
                source,
            })
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct CoordsOutput {
    specimen: String,
    q: usize,
    coordinates: Vec<[f64; 4]>,
}

#[derive(Serialize)]
struct MeanOutput {
    groups: Vec<vwmanova::pipeline::GroupMeanReport>,
    pooled_mean: Vec<[f64; 4]>,
}

#[derive(Serialize)]
struct EuclideanOutput {
    groups: Vec<String>,
    dimension: usize,
    statistic: f64,
    df: usize,
    p_value: f64,
}

/// Group names in order of appearance and the observations of each group.
type Table = (Vec<String>, Vec<Vec<Vec<f64>>>);

fn read_table(path: &Path) -> Result<Table, Failure> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let parse = |line: usize, reason: String| Error::Parse {
        file: path.to_path_buf(),
        line,
        reason,
    };
    let mut names: Vec<String> = Vec::new();
    let mut groups: Vec<Vec<Vec<f64>>> = Vec::new();
    let mut dim = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let values: Option<Vec<f64>> = fields[1..].iter().map(|f| f.parse().ok()).collect();
        let Some(values) = values else {
            if dim.is_none() && names.is_empty() {
                continue; // header
            }
            return Err(parse(i + 1, format!("non-numeric value in {line:?}")).into());
        };
        if values.is_empty() {
            return Err(parse(i + 1, "row has no coordinates".into()).into());
        }
        if *dim.get_or_insert(values.len()) != values.len() {
            return Err(parse(i + 1, format!("expected {} coordinates", dim.unwrap())).into());
        }
        let group = fields[0].to_string();
        let idx = match names.iter().position(|n| *n == group) {
            Some(idx) => idx,
            None => {
                names.push(group);
                groups.push(Vec::new());
                names.len() - 1
            }
        };
        groups[idx].push(values);
    }
    Ok((names, groups))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Manova {
            manifest,
            bootstrap,
            df_override,
            statistic,
            out,
        } => {
            let opts = AnalysisOptions {
                statistic: match statistic {
                    StatisticArg::Td => StatisticKind::Td,
                    StatisticArg::Tc => StatisticKind::Tc,
                },
                bootstrap: bootstrap.config(),
                df_override,
            };
            // configuration errors surface before any file is read
            opts.bootstrap.validate()?;
            let dataset = load_dataset(&manifest)?;
            let report = analyze(&dataset, &manifest.display().to_string(), &opts)?;
            emit(&report, out.as_deref())
        }
        Command::Coords {
            specimen,
            frame,
            homogeneous,
            out,
        } => {
            let kind = if homogeneous {
                CoordinateKind::Homogeneous
            } else {
                CoordinateKind::Affine
            };
            let frame: [usize; 5] = frame
                .try_into()
                .map_err(|_| Failure::Usage("--frame needs exactly 5 indices".into()))?;
            if frame.contains(&0) {
                return Err(Failure::Usage("--frame indices are 1-based".into()));
            }
            let points = read_landmarks(&specimen, kind)?;
            let shape = register(points, frame.map(|i| i - 1)).map_err(|e| Error::Specimen {
                specimen: specimen.display().to_string(),
                source: Box::new(e),
            })?;
            emit(
                &CoordsOutput {
                    specimen: specimen.display().to_string(),
                    q: shape.q(),
                    coordinates: shape
                        .coords()
                        .iter()
                        .map(|p| *p.canonical().rep())
                        .collect(),
                },
                out.as_deref(),
            )
        }
        Command::Mean { manifest, out } => {
            let dataset = load_dataset(&manifest)?;
            let (groups, pooled_mean) = dataset_means(&dataset)?;
            emit(
                &MeanOutput {
                    groups,
                    pooled_mean,
                },
                out.as_deref(),
            )
        }
        Command::Ci {
            manifest,
            candidate,
            variant,
            bootstrap,
            out,
        } => {
            let cfg = bootstrap.config();
            cfg.validate()?;
            let dataset = load_dataset(&manifest)?;
            let shape = load_candidate(&dataset.manifest, &candidate)?;
            let variant = match variant {
                VariantArg::C => RegionVariant::C,
                VariantArg::D => RegionVariant::D,
            };
            emit(
                &confidence_region(&dataset, &shape, variant, &cfg)?,
                out.as_deref(),
            )
        }
        Command::Simulate { spec, out } => {
            let text = fs::read_to_string(&spec).map_err(|source| Error::Io {
                path: spec.clone(),
                source,
            })?;
            let design: SyntheticDatasetSpec =
                serde_json::from_str(&text).map_err(|e| Error::Parse {
                    file: spec.clone(),
                    line: e.line(),
                    reason: e.to_string(),
                })?;
            let manifest = generate_landmark_dataset(&design, &out)?;
            let n: usize = manifest.groups.iter().map(|g| g.specimens.len()).sum();
            eprintln!(
                "wrote {} ({} groups, {n} specimens, k = {})",
                out.display(),
                manifest.groups.len(),
                manifest.k
            );
            Ok(())
        }
        Command::Euclidean { input, out } => {
            let (groups, data) = read_table(&input)?;
            let result = euclidean_manova(&data)?;
            emit(
                &EuclideanOutput {
                    dimension: data.first().and_then(|g| g.first()).map_or(0, Vec::len),
                    groups,
                    statistic: result.statistic,
                    df: result.df,
                    p_value: result.p_value,
                },
                out.as_deref(),
            )
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
