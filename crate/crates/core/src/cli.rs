//! Command-line front end.
//!
//! Exit codes: 0 success, 1 internal failure, 2 input error, 3 unknown
//! entity, 64 usage error.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::KeyValueConfig;
use crate::engine::{Algorithm, Engine, EngineConfig};
use crate::error::Error;
use crate::eval::{run_benchmark, write_report_json, write_report_table, BenchmarkConfig};
use crate::factorization::FactorModel;
use crate::fixtures::{generate_ow2_like, FixtureConfig, SparsityProfile};
use crate::ids::UserId;
use crate::ingest::{self, IngestError};
use crate::ratings::RatingsMatrix;
use crate::similarity::Kernel;
use crate::Recommender;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_UNKNOWN: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

/// File names written by `ingest`.
pub const RATINGS_FILE: &str = "ratings.csv";
pub const TECHNOLOGIES_FILE: &str = "technologies.csv";

#[derive(Debug, Parser)]
#[command(name = "techrec", version, about = "Technology recommendations from project metadata")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Derive the ratings and technology files from a metadata export.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output_dir: PathBuf,
        /// Field delimiter: a single ASCII character or a name such as tab or comma.
        #[arg(long, default_value = "tab")]
        delimiter: String,
    },
    /// Print the top-n technologies for one user.
    Recommend {
        #[arg(long)]
        ratings: PathBuf,
        #[arg(long)]
        user: u64,
        #[arg(long, value_enum, default_value_t = AlgorithmArg::Item)]
        algorithm: AlgorithmArg,
        #[arg(short = 'n', long = "n", value_parser = clap::value_parser!(u64).range(1..))]
        n: Option<u64>,
        /// Serve popularity items when the model has nothing for the user.
        #[arg(long)]
        fallback: bool,
        /// Load a saved factor model instead of training (mf only).
        #[arg(long)]
        model_in: Option<PathBuf>,
        /// Save the trained factor model (mf only).
        #[arg(long)]
        model_out: Option<PathBuf>,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Evaluate a single algorithm on a seeded split.
    Evaluate {
        #[arg(long)]
        ratings: PathBuf,
        #[arg(long, value_enum)]
        algorithm: AlgorithmArg,
        #[command(flatten)]
        report: ReportArgs,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Evaluate several algorithms on the same seeded split.
    Benchmark {
        #[arg(long)]
        ratings: PathBuf,
        /// Comma-separated subset of user,item,slopeone,mf,pop.
        #[arg(long, value_enum, value_delimiter = ',')]
        algorithms: Vec<AlgorithmArg>,
        #[command(flatten)]
        report: ReportArgs,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Write a synthetic metadata export.
    GenerateFixture {
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 103)]
        users: usize,
        #[arg(long, default_value_t = 150)]
        projects: usize,
        #[arg(long, value_enum, default_value_t = ProfileArg::Sparse)]
        profile: ProfileArg,
        #[arg(long, default_value = "tab")]
        delimiter: String,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AlgorithmArg {
    User,
    Item,
    Slopeone,
    Mf,
    Pop,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::User => Algorithm::UserKnn,
            AlgorithmArg::Item => Algorithm::ItemKnn,
            AlgorithmArg::Slopeone => Algorithm::SlopeOne,
            AlgorithmArg::Mf => Algorithm::Mf,
            AlgorithmArg::Pop => Algorithm::Popularity,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ProfileArg {
    Sparse,
    Dense,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq)]
enum FormatArg {
    Tsv,
    Json,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Ratings held out per user (users with this many or fewer are not split).
    #[arg(long)]
    holdout_k: Option<usize>,
    /// List length used for coverage.
    #[arg(long)]
    top_n: Option<usize>,
    /// Cutoff for precision and recall.
    #[arg(long)]
    at_k: Option<usize>,
    #[arg(long, value_enum, default_value_t = FormatArg::Tsv)]
    format: FormatArg,
    /// Write the report here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Include wall-clock timings (makes output non-reproducible).
    #[arg(long)]
    timings: bool,
}

/// Model parameters. Precedence: flag, then `--config` file, then default.
#[derive(Debug, Args)]
struct Tuning {
    /// Flat key=value file with any of the tuning keys below.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Neighbors used per prediction.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    min_neighbors: Option<usize>,
    /// Neighbors need similarity strictly above this.
    #[arg(long)]
    threshold: Option<f64>,
    /// Neighbors stored per entity in the similarity model.
    #[arg(long)]
    model_size: Option<usize>,
    #[arg(long)]
    user_kernel: Option<String>,
    #[arg(long)]
    item_kernel: Option<String>,
    #[arg(long)]
    shrinkage: Option<f64>,
    #[arg(long)]
    factors: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    regularization: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    init_scale: Option<f64>,
}

const CONFIG_KEYS: &[&str] = &[
    "seed",
    "k",
    "min_neighbors",
    "threshold",
    "model_size",
    "user_kernel",
    "item_kernel",
    "shrinkage",
    "factors",
    "learning_rate",
    "regularization",
    "epochs",
    "init_scale",
    "n",
    "holdout_k",
    "top_n",
    "at_k",
];

#[derive(Debug)]
enum CliError {
    Usage(String),
    Input(String),
    Unknown(String),
    Internal(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Input(_) => EXIT_INPUT,
            CliError::Unknown(_) => EXIT_UNKNOWN,
            CliError::Internal(_) => EXIT_FAILURE,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Input(m) | CliError::Unknown(m) | CliError::Internal(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::UnknownUser(_) => CliError::Unknown(msg),
            Error::InvalidArgument(_) => CliError::Usage(msg),
            Error::Ingest(_)
            | Error::Io(_)
            | Error::Format { .. }
            | Error::EmptyInput
            | Error::DuplicatePair { .. }
            | Error::RatingOutOfRange { .. } => CliError::Input(msg),
            _ => CliError::Internal(msg),
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        CliError::Input(e.to_string())
    }
}

fn input_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

/// Runs the CLI with `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{e}");
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message());
            e.code()
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Ingest { input, output_dir, delimiter } => cmd_ingest(&input, &output_dir, &delimiter, out),
        Command::Recommend { ratings, user, algorithm, n, fallback, model_in, model_out, tuning } => {
            let settings = Settings::resolve(&tuning)?;
            let n = match n {
                Some(n) => n as usize,
                None => settings.file.get::<usize>("n")?.unwrap_or(10),
            };
            if n == 0 {
                return Err(CliError::Usage("n must be at least 1".into()));
            }
            let request = RecommendRequest {
                ratings: &ratings,
                user: UserId(user),
                algorithm: algorithm.into(),
                n,
                fallback,
                model_in: model_in.as_deref(),
                model_out: model_out.as_deref(),
            };
            cmd_recommend(&request, &settings.engine, out)
        }
        Command::Evaluate { ratings, algorithm, report, tuning } => {
            cmd_benchmark(&ratings, vec![algorithm.into()], &report, &tuning, out)
        }
        Command::Benchmark { ratings, algorithms, report, tuning } => {
            let algorithms = if algorithms.is_empty() {
                Algorithm::ALL.to_vec()
            } else {
                algorithms.into_iter().map(Algorithm::from).collect()
            };
            cmd_benchmark(&ratings, algorithms, &report, &tuning, out)
        }
        Command::GenerateFixture { output, seed, users, projects, profile, delimiter } => {
            if users == 0 || projects == 0 {
                return Err(CliError::Usage("users and projects must be at least 1".into()));
            }
            let cfg = FixtureConfig {
                seed,
                n_pm_users: users,
                n_projects: projects,
                profile: match profile {
                    ProfileArg::Sparse => SparsityProfile::Sparse,
                    ProfileArg::Dense => SparsityProfile::Dense,
                },
            };
            let delim = parse_delimiter(&delimiter)?;
            let records = generate_ow2_like(&cfg);
            let file = File::create(&output).map_err(|e| input_err(&output, e))?;
            ingest::write_project_metadata(&records, BufWriter::new(file), delim)?;
            writeln!(out, "wrote {} records to {}", records.len(), output.display()).map_err(io_err)?;
            Ok(())
        }
    }
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Internal(e.to_string())
}

fn parse_delimiter(raw: &str) -> Result<u8, CliError> {
    match raw {
        "tab" | "\\t" | "\t" => Ok(b'\t'),
        "comma" => Ok(b','),
        "semicolon" => Ok(b';'),
        "pipe" => Ok(b'|'),
        s if s.len() == 1 && s.is_ascii() => Ok(s.as_bytes()[0]),
        other => Err(CliError::Usage(format!("unsupported delimiter {other:?}"))),
    }
}

fn cmd_ingest(input: &Path, output_dir: &Path, delimiter: &str, out: &mut dyn Write) -> Result<(), CliError> {
    let delim = parse_delimiter(delimiter)?;
    let file = File::open(input).map_err(|e| input_err(input, e))?;
    let records = ingest::parse_project_metadata(BufReader::new(file), delim)
        .map_err(|e| input_err(input, e))?;
    let catalog = ingest::build_catalog(&records)?;
    let ratings = ingest::derive_ratings(&records, &catalog)?;

    fs::create_dir_all(output_dir).map_err(|e| input_err(output_dir, e))?;
    let ratings_path = output_dir.join(RATINGS_FILE);
    let tech_path = output_dir.join(TECHNOLOGIES_FILE);
    let f = File::create(&ratings_path).map_err(|e| input_err(&ratings_path, e))?;
    ingest::write_ratings(&ratings, BufWriter::new(f)).map_err(io_err)?;
    let f = File::create(&tech_path).map_err(|e| input_err(&tech_path, e))?;
    ingest::write_catalog(&catalog, BufWriter::new(f))?;

    let users = ratings.iter().map(|r| r.user).collect::<std::collections::BTreeSet<_>>().len();
    writeln!(
        out,
        "records={} users={} technologies={} ratings={}",
        records.len(),
        users,
        catalog.len(),
        ratings.len()
    )
    .map_err(io_err)?;
    Ok(())
}

fn load_matrix(path: &Path) -> Result<RatingsMatrix, CliError> {
    let file = File::open(path).map_err(|e| input_err(path, e))?;
    let rows = ingest::read_ratings(BufReader::new(file)).map_err(|e| input_err(path, e))?;
    RatingsMatrix::from_rating_rows(&rows).map_err(|e| input_err(path, e))
}

struct Settings {
    engine: EngineConfig,
    file: KeyValueConfig,
}

impl Settings {
    fn resolve(t: &Tuning) -> Result<Settings, CliError> {
        let file = match &t.config {
            Some(path) => {
                let cfg = KeyValueConfig::load(path).map_err(|e| input_err(path, e))?;
                cfg.check_keys(CONFIG_KEYS).map_err(|e| input_err(path, e))?;
                cfg
            }
            None => KeyValueConfig::default(),
        };
        let mut engine = EngineConfig::default();

        macro_rules! pick {
            ($flag:expr, $key:literal, $target:expr) => {
                if let Some(v) = $flag.clone() {
                    $target = v;
                } else if let Some(v) = file.get($key)? {
                    $target = v;
                }
            };
        }
        pick!(t.seed, "seed", engine.train.seed);
        pick!(t.k, "k", engine.neighborhood.k);
        pick!(t.min_neighbors, "min_neighbors", engine.neighborhood.min_neighbors);
        pick!(t.threshold, "threshold", engine.neighborhood.similarity_threshold);
        pick!(t.model_size, "model_size", engine.user_similarity.model_size);
        pick!(t.model_size, "model_size", engine.item_similarity.model_size);
        pick!(t.shrinkage, "shrinkage", engine.user_similarity.shrinkage);
        pick!(t.shrinkage, "shrinkage", engine.item_similarity.shrinkage);
        pick!(t.factors, "factors", engine.train.factors);
        pick!(t.learning_rate, "learning_rate", engine.train.learning_rate);
        pick!(t.regularization, "regularization", engine.train.regularization);
        pick!(t.epochs, "epochs", engine.train.epochs);
        pick!(t.init_scale, "init_scale", engine.train.init_scale);

        let user_kernel = t.user_kernel.as_deref().map(str::parse::<Kernel>).transpose()?;
        pick!(user_kernel, "user_kernel", engine.user_similarity.kernel);
        let item_kernel = t.item_kernel.as_deref().map(str::parse::<Kernel>).transpose()?;
        pick!(item_kernel, "item_kernel", engine.item_similarity.kernel);

        engine.neighborhood.validate()?;
        engine.train.validate()?;
        if engine.user_similarity.model_size == 0 {
            return Err(CliError::Usage("model_size must be at least 1".into()));
        }
        Ok(Settings { engine, file })
    }
}

struct RecommendRequest<'a> {
    ratings: &'a Path,
    user: UserId,
    algorithm: Algorithm,
    n: usize,
    fallback: bool,
    model_in: Option<&'a Path>,
    model_out: Option<&'a Path>,
}

fn cmd_recommend(req: &RecommendRequest<'_>, cfg: &EngineConfig, out: &mut dyn Write) -> Result<(), CliError> {
    if (req.model_in.is_some() || req.model_out.is_some()) && req.algorithm != Algorithm::Mf {
        return Err(CliError::Usage("--model-in/--model-out require --algorithm mf".into()));
    }
    let matrix = Arc::new(load_matrix(req.ratings)?);
    if !req.fallback && matrix.user_index(req.user).is_none() {
        return Err(Error::UnknownUser(req.user).into());
    }
    let engine = match req.model_in {
        Some(path) => {
            let file = File::open(path).map_err(|e| input_err(path, e))?;
            let model = FactorModel::read_snapshot(BufReader::new(file)).map_err(|e| input_err(path, e))?;
            Engine::from_factor_model(matrix, model, cfg).map_err(|e| input_err(path, e))?
        }
        None => Engine::train(matrix, req.algorithm, cfg)?,
    };
    if let (Some(path), Some(model)) = (req.model_out, engine.factor_model()) {
        let file = File::create(path).map_err(|e| input_err(path, e))?;
        model.write_snapshot(BufWriter::new(file)).map_err(io_err)?;
    }

    let (recs, provenance) = if req.fallback {
        engine.recommend_with_fallback(req.user, req.n)?
    } else {
        (engine.recommend(req.user, req.n)?, crate::baseline::Provenance::Model)
    };
    for r in recs {
        writeln!(out, "{}\t{:.4}\t{}", r.item, r.score, provenance).map_err(io_err)?;
    }
    Ok(())
}

fn cmd_benchmark(
    ratings: &Path,
    algorithms: Vec<Algorithm>,
    report: &ReportArgs,
    tuning: &Tuning,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let settings = Settings::resolve(tuning)?;
    let defaults = BenchmarkConfig::default();
    let pick = |flag: Option<usize>, key: &str, default: usize| -> Result<usize, CliError> {
        Ok(match flag {
            Some(v) => v,
            None => settings.file.get(key)?.unwrap_or(default),
        })
    };
    let cfg = BenchmarkConfig {
        algorithms,
        holdout_k: pick(report.holdout_k, "holdout_k", defaults.holdout_k)?,
        top_n: pick(report.top_n, "top_n", defaults.top_n)?,
        at_k: pick(report.at_k, "at_k", defaults.at_k)?,
        seed: settings.engine.train.seed,
        engine: settings.engine,
    };
    let matrix = load_matrix(ratings)?;
    let reports = run_benchmark(&matrix, &cfg)?;

    let mut sink: Box<dyn Write> = match &report.output {
        Some(path) => Box::new(BufWriter::new(File::create(path).map_err(|e| input_err(path, e))?)),
        None => Box::new(&mut *out),
    };
    match report.format {
        FormatArg::Tsv => write_report_table(&reports, &mut sink, report.timings),
        FormatArg::Json => write_report_json(&reports, &mut sink, report.timings),
    }
    .map_err(io_err)?;
    Ok(())
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        io_err(e)
    }
}
