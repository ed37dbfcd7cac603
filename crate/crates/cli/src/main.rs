use std::error::Error;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gendertx::backends::{
    CompletionBackend, EndpointConfig, HttpBackend, ReplayBackend, ReplayMode, ReplayStore,
};
use gendertx::corpus::split_lines;
use gendertx::experiments::{
    open_backend, score_bias, score_flores, score_mhb, translate, Experiment, ExperimentReport,
    Manifest, ReportFormat, TranslationRun,
};
use gendertx::metrics::{bleu_text, chrf_multi, BleuConfig, ChrfConfig, Tokenization};

type Result<T> = std::result::Result<T, Box<dyn Error>>;

#[derive(Parser)]
#[command(
    name = "gendertx",
    version,
    about = "Gender-specific translation experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Prompt the backend for every query and write outputs/{lang}.jsonl.
    Translate(ManifestArg),
    /// BLEU and chrF panels on the gendered reference set.
    ScoreMhb(ScoreArgs),
    /// Gender prediction accuracy on the coreference set.
    ScoreBias {
        #[command(flatten)]
        score: ScoreArgs,
        /// Overrides data.lexicon from the manifest.
        #[arg(long)]
        lexicon: Option<PathBuf>,
    },
    /// Masculine/feminine BLEU gap on general-domain data.
    ScoreDelta(ScoreArgs),
    /// Fill a replay store from a live endpoint for a manifest's queries.
    Record {
        #[arg(long)]
        endpoint: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        /// Keep existing entries and only request the missing ones.
        #[arg(long)]
        missing_only: bool,
    },
    /// Corpus BLEU of a hypothesis file against one or more reference files.
    Bleu {
        #[arg(long)]
        hyp: PathBuf,
        #[arg(long = "ref", required = true)]
        refs: Vec<PathBuf>,
        #[arg(long, default_value = "whitespace")]
        tokenize: String,
        #[arg(long, default_value_t = 4)]
        max_order: usize,
        #[arg(long, default_value_t = 1.0)]
        smoothing_k: f64,
    },
    /// Corpus chrF of a hypothesis file against one or more reference files.
    Chrf {
        #[arg(long)]
        hyp: PathBuf,
        #[arg(long = "ref", required = true)]
        refs: Vec<PathBuf>,
        #[arg(long, default_value_t = 6)]
        char_order: usize,
        #[arg(long, default_value_t = 2.0)]
        beta: f64,
    },
    /// Re-render a report CSV, e.g. as Markdown.
    Render {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Md)]
        format: Format,
    },
}

#[derive(Args)]
struct ManifestArg {
    #[arg(long)]
    manifest: PathBuf,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Which report files to write into the output directory.
    #[arg(long, value_enum, default_value_t = Format::Both)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Md,
    Both,
}

impl Format {
    fn formats(self) -> Vec<ReportFormat> {
        match self {
            Format::Csv => vec![ReportFormat::Csv],
            Format::Md => vec![ReportFormat::Markdown],
            Format::Both => vec![ReportFormat::Csv, ReportFormat::Markdown],
        }
    }
}

fn load_manifest(path: &Path, expected: Option<Experiment>) -> Result<Manifest> {
    let manifest = Manifest::load(path)?;
    if let Some(expected) = expected {
        if manifest.experiment != expected {
            return Err(format!(
                "{} describes `{}`, expected `{expected}`",
                path.display(),
                manifest.experiment
            )
            .into());
        }
    }
    Ok(manifest)
}

fn write_outputs(manifest: &Manifest, backend: &dyn CompletionBackend) -> Result<()> {
    let run = translate(manifest, backend)?;
    for path in run.write(&manifest.output_dir())? {
        println!("{}", path.display());
    }
    Ok(())
}

fn write_report(manifest: &Manifest, report: &ExperimentReport, format: Format) -> Result<()> {
    let dir = manifest.output_dir();
    std::fs::create_dir_all(&dir)?;
    for fmt in format.formats() {
        let ext = if fmt == ReportFormat::Csv {
            "csv"
        } else {
            "md"
        };
        let path = dir.join(format!("{}.{ext}", manifest.experiment));
        std::fs::write(&path, report.emit(fmt))?;
        println!("{}", path.display());
    }
    Ok(())
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(split_lines(&text).into_iter().map(str::to_string).collect())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Translate(args) => {
            let manifest = load_manifest(&args.manifest, None)?;
            let backend = open_backend(&manifest)?;
            write_outputs(&manifest, &backend)?;
            backend.store().compact()?;
        }
        Command::ScoreMhb(args) => {
            let manifest = load_manifest(&args.manifest, Some(Experiment::MhbPanel))?;
            let report = score_mhb(&manifest, &TranslationRun::read_for(&manifest)?)?;
            write_report(&manifest, &report, args.format)?;
        }
        Command::ScoreBias { score, lexicon } => {
            let manifest = load_manifest(&score.manifest, Some(Experiment::BugBias))?;
            let report = score_bias(
                &manifest,
                &TranslationRun::read_for(&manifest)?,
                lexicon.as_deref(),
            )?;
            write_report(&manifest, &report, score.format)?;
        }
        Command::ScoreDelta(args) => {
            let manifest = load_manifest(&args.manifest, Some(Experiment::FloresDelta))?;
            let report = score_flores(&manifest, &TranslationRun::read_for(&manifest)?)?;
            write_report(&manifest, &report, args.format)?;
        }
        Command::Record {
            endpoint,
            out,
            manifest,
            missing_only,
        } => {
            let manifest = load_manifest(&manifest, None)?;
            let mode = if missing_only {
                ReplayMode::RecordMissing
            } else {
                ReplayMode::Record
            };
            let store = Arc::new(ReplayStore::open(&out, mode)?);
            let inner = HttpBackend::new(EndpointConfig::load(&endpoint)?)?;
            let backend = ReplayBackend::new(manifest.backend.id.clone(), store.clone())
                .with_inner(Arc::new(inner));
            let result = write_outputs(&manifest, &backend);
            // keep whatever was recorded, even after a failure
            store.compact()?;
            result?;
            eprintln!("{} entries in {}", store.len(), out.display());
        }
        Command::Bleu {
            hyp,
            refs,
            tokenize,
            max_order,
            smoothing_k,
        } => {
            let tokenization: Tokenization = tokenize.parse()?;
            let hyps = read_lines(&hyp)?;
            let sets = refs
                .iter()
                .map(|p| read_lines(p))
                .collect::<Result<Vec<_>>>()?;
            let set_refs: Vec<&[String]> = sets.iter().map(Vec::as_slice).collect();
            let score = bleu_text(
                &hyps,
                &set_refs,
                tokenization,
                &BleuConfig {
                    max_order,
                    smoothing_k,
                },
            )?;
            let precisions: Vec<String> = score
                .precisions
                .iter()
                .map(|p| format!("{:.1}", 100.0 * p))
                .collect();
            println!(
                "BLEU = {:.2} {} (BP = {:.3} hyp_len = {} ref_len = {})",
                score.score,
                precisions.join("/"),
                score.brevity_penalty,
                score.hyp_len,
                score.ref_len
            );
        }
        Command::Chrf {
            hyp,
            refs,
            char_order,
            beta,
        } => {
            let hyps = read_lines(&hyp)?;
            let sets = refs
                .iter()
                .map(|p| read_lines(p))
                .collect::<Result<Vec<_>>>()?;
            for (p, set) in refs.iter().zip(&sets) {
                if set.len() != hyps.len() {
                    return Err(format!(
                        "{}: {} lines, hypothesis has {}",
                        p.display(),
                        set.len(),
                        hyps.len()
                    )
                    .into());
                }
            }
            let per_segment: Vec<Vec<&str>> = (0..hyps.len())
                .map(|i| sets.iter().map(|s| s[i].as_str()).collect())
                .collect();
            let score = chrf_multi(&hyps, &per_segment, &ChrfConfig { char_order, beta })?;
            println!("chrF{beta} = {score:.2}");
        }
        Command::Render { csv, format } => {
            let text =
                std::fs::read_to_string(&csv).map_err(|e| format!("{}: {e}", csv.display()))?;
            let report = ExperimentReport::parse_csv(&text)?;
            for fmt in format.formats() {
                print!("{}", report.emit(fmt));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = e.source();
            while let Some(cause) = source {
                eprintln!("  caused by: {cause}");
                source = cause.source();
            }
            ExitCode::FAILURE
        }
    }
}
