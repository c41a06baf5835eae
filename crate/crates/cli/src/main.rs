use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cactus::baselines::ForestParams;
use cactus_cli::commands::{self, BaselineArgs};
use cactus_cli::config::{parse_levels, Settings, OUT_DIR_ENV};
use cactus_cli::CliError;

#[derive(Parser)]
#[command(name = "cactus", version, about = "Robustness experiments for abstraction-based classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full missingness experiment and write every artifact.
    Run(RunArgs),
    /// Join an abstraction model with a ranked report.
    Heatmap {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        report: PathBuf,
        #[arg(long, default_value_t = 10)]
        top_k: usize,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Stability and overlap from importance reports of any model.
    Compare {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        #[arg(long, default_value = "0.1,0.2,0.3")]
        levels: String,
        #[arg(long, default_value_t = 10)]
        top_k: usize,
        #[arg(long, env = OUT_DIR_ENV, default_value = "cactus-out")]
        out: PathBuf,
    },
    /// Importance report utilities.
    Report {
        #[command(subcommand)]
        command: ReportCommand,
    },
    /// Forest baseline utilities.
    Baseline {
        #[command(subcommand)]
        command: BaselineCommand,
    },
}

#[derive(Subcommand)]
enum ReportCommand {
    /// Validate a JSON or CSV report and print it in canonical form.
    Import {
        path: PathBuf,
        #[arg(long)]
        csv: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum BaselineCommand {
    /// Fit the forest on a whole file and print its importance report.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "target")]
        target: String,
        #[arg(long)]
        stratify: Option<String>,
        #[arg(long, default_value_t = 100)]
        trees: usize,
        #[arg(long, default_value_t = 8)]
        depth: usize,
        #[arg(long, default_value_t = 2)]
        min_leaf: usize,
        /// 0 picks the square root of the feature count.
        #[arg(long, default_value_t = 0)]
        features_per_split: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Mean/mode impute before fitting.
        #[arg(long)]
        impute: bool,
        #[arg(long)]
        csv: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// key = value file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    target: Option<String>,
    /// Restrict to one stratum, e.g. `sex=female`.
    #[arg(long)]
    stratify: Option<String>,
    /// Comma-separated missing fractions.
    #[arg(long)]
    levels: Option<String>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    top_k: Option<usize>,
    #[arg(long)]
    test_fraction: Option<f64>,
    #[arg(long)]
    trees: Option<usize>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    min_leaf: Option<usize>,
    #[arg(long)]
    features_per_split: Option<usize>,
    /// Skip the forest baseline.
    #[arg(long)]
    no_forest: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn text<T: ToString>(v: Option<T>) -> Option<String> {
    v.map(|x| x.to_string())
}

fn run(args: RunArgs) -> Result<(), CliError> {
    let mut s = match &args.config {
        Some(p) => Settings::load(p)?,
        None => Settings::default(),
    };
    s.set("input", args.input.as_ref().map(|p| p.display().to_string()));
    s.set("target", args.target.clone());
    s.set("stratify", args.stratify.clone());
    s.set("levels", args.levels.clone());
    s.set("repeats", text(args.repeats));
    s.set("seed", text(args.seed));
    s.set("alpha", text(args.alpha));
    s.set("top-k", text(args.top_k));
    s.set("test-fraction", text(args.test_fraction));
    s.set("trees", text(args.trees));
    s.set("depth", text(args.depth));
    s.set("min-leaf", text(args.min_leaf));
    s.set("features-per-split", text(args.features_per_split));
    if args.no_forest {
        s.set("forest", Some("false".into()));
    }
    s.set("out", args.out.as_ref().map(|p| p.display().to_string()));
    let config = s.resolve(std::env::var(OUT_DIR_ENV).ok())?;
    let summary = commands::cmd_run(&config)?;
    eprintln!(
        "{} rows, {} files written to {}",
        summary.cohort_rows,
        summary.manifest.files.len(),
        config.out.display()
    );
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => run(args),
        Command::Heatmap { model, report, top_k, out } => {
            let bytes = commands::cmd_heatmap(&model, &report, top_k)?;
            emit(&String::from_utf8_lossy(&bytes), out.as_ref())
        }
        Command::Compare { reports, levels, top_k, out } => {
            let levels = parse_levels(&levels)?;
            let manifest = commands::cmd_compare(&reports, &levels, top_k, &out)?;
            eprintln!("{} files written to {}", manifest.files.len(), out.display());
            Ok(())
        }
        Command::Report {
            command: ReportCommand::Import { path, csv, out },
        } => emit(&commands::cmd_report_import(&path, csv)?, out.as_ref()),
        Command::Baseline {
            command:
                BaselineCommand::Fit {
                    input,
                    target,
                    stratify,
                    trees,
                    depth,
                    min_leaf,
                    features_per_split,
                    seed,
                    impute,
                    csv,
                    out,
                },
        } => {
            let stratify = stratify.map(|s| s.parse()).transpose()?;
            let report = commands::cmd_baseline_fit(&BaselineArgs {
                input: &input,
                target: &target,
                stratify: stratify.as_ref(),
                params: ForestParams {
                    n_trees: trees,
                    max_depth: depth,
                    min_leaf,
                    features_per_split,
                    seed,
                },
                impute,
            })?;
            let text = if csv {
                report.to_csv_string()
            } else {
                format!("{}\n", report.to_json())
            };
            emit(&text, out.as_ref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
