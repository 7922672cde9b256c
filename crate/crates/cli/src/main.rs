use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use clfeval_cli::commands::{self, BayesOptions, Output};
use clfeval_cli::{formats, CliError, Result};
use clfeval_core::Laterality;

#[derive(Parser)]
#[command(
    name = "clfeval",
    version,
    about = "Point and Bayesian classifier evaluation"
)]
struct Cli {
    /// Worker threads for sampling.
    #[arg(long, global = true, env = "CLFEVAL_WORKERS", default_value_t = 1)]
    workers: usize,

    /// Directory to write CSV outputs into.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// What to print on stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Side {
    /// Zones A-C on the left side of the image.
    AbcImageLeft,
    /// Zones A-C on the right side of the image.
    AbcImageRight,
}

#[derive(Subcommand)]
enum Command {
    /// Point metrics from a confusion matrix (.json or .csv).
    Report { confusion: PathBuf },
    /// Posterior metric summaries under uniform Dirichlet priors.
    Bayes {
        confusion: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0.95)]
        mass: f64,
        /// Comma-separated metric keys (e.g. accuracy,macro_f1,recall_2).
        #[arg(long, value_delimiter = ',')]
        metrics: Vec<String>,
        /// Write 100-bin histogram CSVs per metric (requires --out).
        #[arg(long)]
        histograms: bool,
        /// Write raw posterior samples per metric (requires --out).
        #[arg(long)]
        raw_samples: bool,
    },
    /// Multi-class AUC from a true_label,score_0..score_{M-1} CSV.
    Auc { scores: PathBuf },
    /// IoU of thresholded predictions against target masks.
    Iou {
        manifest: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
    },
    /// Compare Brixia scores with zone-aggregated relevance heatmaps.
    Brixia {
        manifest: PathBuf,
        #[arg(long, value_enum, default_value_t = Side::AbcImageLeft)]
        laterality: Side,
    },
    /// Convert a confusion matrix between the JSON and CSV formats.
    Convert { input: PathBuf, output: PathBuf },
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn emit(out: &Output, dir: Option<&Path>, format: Format) -> Result<()> {
    if let Some(dir) = dir {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        for (name, contents) in &out.files {
            write_file(&dir.join(name), contents.as_bytes())?;
        }
    }
    let text = match format {
        Format::Table => &out.table,
        Format::Csv => out.primary_csv(),
    };
    let mut stdout = std::io::stdout().lock();
    stdout
        .write_all(text.as_bytes())
        .and_then(|_| stdout.flush())
        .map_err(|e| CliError::Internal(format!("writing stdout: {e}")))?;
    for d in &out.diagnostics {
        eprintln!("warning: {d}");
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let output = match cli.command {
        Command::Report { confusion } => commands::report(&formats::read_confusion(&confusion)?),
        Command::Bayes {
            confusion,
            seed,
            samples,
            mass,
            metrics,
            histograms,
            raw_samples,
        } => {
            if (histograms || raw_samples) && cli.out.is_none() {
                return Err(clfeval_core::Error::Parameter(
                    "--histograms and --raw-samples need --out".into(),
                )
                .into());
            }
            let cm = formats::read_confusion(&confusion)?;
            commands::bayes(
                &cm,
                &BayesOptions {
                    seed,
                    samples,
                    mass,
                    workers: cli.workers.max(1),
                    metrics,
                    histograms,
                    raw_samples,
                },
            )?
        }
        Command::Auc { scores } => commands::auc(&scores)?,
        Command::Iou {
            manifest,
            threshold,
        } => commands::iou_manifest(&manifest, threshold)?,
        Command::Brixia {
            manifest,
            laterality,
        } => {
            let side = match laterality {
                Side::AbcImageLeft => Laterality::AbcImageLeft,
                Side::AbcImageRight => Laterality::AbcImageRight,
            };
            commands::brixia(&manifest, side)?
        }
        Command::Convert { input, output } => {
            let cm = formats::read_confusion(&input)?;
            let text = match output.extension().and_then(|e| e.to_str()) {
                Some("json") => formats::confusion_to_json(&cm),
                Some("csv") => formats::confusion_to_csv(&cm),
                _ => return Err(CliError::parse(&output, "output must end in .json or .csv")),
            };
            return write_file(&output, text.as_bytes());
        }
    };
    emit(&output, cli.out.as_deref(), cli.format)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
        // Panics are invariant violations; the hook has already printed them.
        Err(_) => ExitCode::from(3),
    }
}
