use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser, ValueEnum};

use super::{default_workers, ExperimentSpec, DEFAULT_RUNS};
use crate::engine::{RunConfig, SizeLimit};
use crate::fitness::MAX_CTT_VARIABLES;
use crate::variation::DeletionVariant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Table1,
    Table2,
    Fig2,
    Fig3,
    DriftReport,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::Table1,
        Preset::Table2,
        Preset::Fig2,
        Preset::Fig3,
        Preset::DriftReport,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Table1 => "table1",
            Preset::Table2 => "table2",
            Preset::Fig2 => "fig2",
            Preset::Fig3 => "fig3",
            Preset::DriftReport => "drift-report",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DeletionArg {
    Leaf,
    Subtree,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Ctt,
    Sampled,
}

/// RLS-GP on AND_n: run a preset sweep or a single configuration.
#[derive(Debug, Parser)]
#[command(name = "rlsgp", version)]
struct Cli {
    /// Predefined sweep.
    #[arg(long, value_enum, conflicts_with_all = ["n", "limit", "deletion", "mode", "sample_size", "threshold"])]
    preset: Option<Preset>,

    /// Number of variables.
    #[arg(long, required_unless_present = "preset", value_parser = clap::value_parser!(u32).range(1..))]
    n: Option<u32>,

    /// Leaf-count limit: a positive integer or `inf`.
    #[arg(long, required_unless_present = "preset", value_parser = clap::builder::ValueParser::new(parse_limit))]
    limit: Option<SizeLimit>,

    #[arg(long, value_enum, default_value = "subtree")]
    deletion: Option<DeletionArg>,

    #[arg(long, value_enum, default_value = "ctt")]
    mode: Option<ModeArg>,

    /// Rows per fresh sample (sampled mode).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    sample_size: Option<u64>,

    /// Stop once the sampled error is at most this value (sampled mode).
    #[arg(long = "threshold", value_name = "A")]
    threshold: Option<u64>,

    /// Runs per cell.
    #[arg(long, default_value_t = DEFAULT_RUNS as u64, value_parser = clap::value_parser!(u64).range(1..))]
    runs: u64,

    /// Master seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Iteration budget per run.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    max_iters: Option<u64>,

    /// Worker threads (defaults to the number of CPUs).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    workers: Option<u64>,

    /// Output directory.
    #[arg(long, default_value = "results")]
    out: PathBuf,

    /// Record per-iteration fitness traces and write binned drift reports.
    #[arg(long)]
    record_drift: bool,
}

fn parse_limit(s: &str) -> Result<SizeLimit, String> {
    s.parse()
}

/// Parses command-line arguments (program name first) into an experiment.
pub fn parse_cli<I, T>(argv: I) -> Result<ExperimentSpec, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)?;
    let usage = |kind, msg: &str| Cli::command().error(kind, msg);

    let mut spec = match cli.preset {
        Some(p) => ExperimentSpec::preset(p),
        None => {
            let n = cli.n.expect("required without a preset");
            let limit = cli.limit.expect("required without a preset");
            let deletion = match cli.deletion.unwrap_or(DeletionArg::Subtree) {
                DeletionArg::Leaf => DeletionVariant::LeafOnly,
                DeletionArg::Subtree => DeletionVariant::Subtree,
            };
            let config = match (cli.mode.unwrap_or(ModeArg::Ctt), cli.sample_size, cli.threshold) {
                (ModeArg::Ctt, None, None) => {
                    if n > MAX_CTT_VARIABLES {
                        return Err(usage(
                            ErrorKind::ValueValidation,
                            &format!("--mode ctt supports n <= {MAX_CTT_VARIABLES}; use --mode sampled"),
                        ));
                    }
                    RunConfig::ctt(n, limit, deletion)
                }
                (ModeArg::Ctt, _, _) => {
                    return Err(usage(
                        ErrorKind::ArgumentConflict,
                        "--sample-size and --threshold require --mode sampled",
                    ))
                }
                (ModeArg::Sampled, Some(s), Some(a)) => RunConfig::sampled(n, limit, deletion, s as usize, a),
                (ModeArg::Sampled, _, _) => {
                    return Err(usage(
                        ErrorKind::MissingRequiredArgument,
                        "--mode sampled requires --sample-size and --threshold",
                    ))
                }
            };
            ExperimentSpec::single(config)
        }
    };

    spec.runs = cli.runs as usize;
    spec.seed = cli.seed;
    spec.workers = cli.workers.map_or_else(default_workers, |w| w as usize);
    spec.out = cli.out;
    for cell in &mut spec.cells {
        if let Some(m) = cli.max_iters {
            cell.config.max_iterations = m;
        }
        if cli.record_drift {
            cell.config.record_drift = true;
        }
    }
    Ok(spec)
}
