use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use segprobe::config::PitchSection;
use segprobe::pipeline::{run, RunOverrides};
use segprobe::synth::{synth_tokens, write_corpus, SynthSpec};
use segprobe::{tools, WORKERS_ENV};
use segprobe_core::tokens::write_token_table;

#[derive(Parser)]
#[command(name = "probe", version, about = "Probe speech corpora for consonant-induced F0 perturbation")]
struct Cli {
    /// Overrides the sampling or generator seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline described by a TOML config.
    Run {
        config: PathBuf,
        /// Only accept onset consonants at the start of their word.
        #[arg(long)]
        word_initial_only: bool,
    },
    /// Generate a synthetic token table (and optionally an annotated corpus).
    Synth {
        spec: PathBuf,
        /// Token table path.
        #[arg(short, long, default_value = "synth_tokens.tsv")]
        output: PathBuf,
        /// Also write TextGrids, contours, dictionary, frequency list and transcripts here.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Annotation files per source in the corpus.
        #[arg(long, default_value_t = 10)]
        files: usize,
    },
    /// Report the fraction of each stratum's words found in training transcripts.
    Overlap { word_list: PathBuf, transcripts: PathBuf },
    /// Track F0 of a WAV file, or validate an imported contour against it.
    Pitch {
        wav: PathBuf,
        #[arg(long = "import")]
        import: Option<PathBuf>,
        #[arg(long)]
        floor: Option<f64>,
        #[arg(long)]
        ceiling: Option<f64>,
        #[arg(long)]
        time_step: Option<f64>,
    },
}

fn configure_workers() -> Result<()> {
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v.trim().parse().with_context(|| format!("{WORKERS_ENV}={v} is not a worker count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("cannot configure worker threads")?;
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<u8> {
    configure_workers()?;
    match cli.command {
        Command::Run { config, word_initial_only } => {
            let outcome = run(&config, &RunOverrides { seed: cli.seed, word_initial_only })?;
            for (k, v) in &outcome.failures {
                eprintln!("failed: {k}: {v}");
            }
            println!("{} reports written to {}", outcome.report.sources.len(), outcome.output.display());
            Ok(outcome.status.exit_code() as u8)
        }
        Command::Synth { spec, output, corpus, files } => {
            let text = std::fs::read_to_string(&spec).with_context(|| format!("cannot read {}", spec.display()))?;
            let mut s = SynthSpec::from_toml(&text).with_context(|| format!("in {}", spec.display()))?;
            if let Some(seed) = cli.seed {
                s.seed = seed;
            }
            let c = synth_tokens(&s)?;
            std::fs::write(&output, write_token_table(&c.tokens, None)).with_context(|| format!("cannot write {}", output.display()))?;
            if let Some(dir) = corpus {
                write_corpus(&c, &dir, files).with_context(|| format!("cannot write corpus to {}", dir.display()))?;
            }
            println!("{} tokens written to {}", c.tokens.len(), output.display());
            Ok(0)
        }
        Command::Overlap { word_list, transcripts } => {
            print!("{}", tools::overlap(&word_list, &transcripts)?.to_tsv());
            Ok(0)
        }
        Command::Pitch { wav, import, floor, ceiling, time_step } => {
            let cfg = PitchSection { floor, ceiling, time_step, ..Default::default() }.to_config();
            print!("{}", tools::contour_text(&tools::pitch(&wav, import.as_deref(), &cfg)?));
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
