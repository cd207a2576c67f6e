//! `assr-bci` command-line entry point.
//!
//! Exit codes: 0 on success, 2 on validation or malformed input, 1 on I/O
//! failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use assr_bci::classify::{evaluate_all, EvaluationFile, Task};
use assr_bci::dsp::{read_features_csv, write_features_csv};
use assr_bci::eegsim::{read_epoch_set, simulate_session, write_epoch_set, MANIFEST};
use assr_bci::session::{build_report, extract_features, render_csv, render_text, run_sweep, PipelineConfig};
use assr_bci::stimgen::{click_count, spatialize, synthesize, write_wav, StimulusSpec};
use assr_bci::{Direction, Error, Result, StimulusKind};

#[derive(Parser)]
#[command(name = "assr-bci", version, about = "ASSR stimulus synthesis, EEG simulation and PLV/naive-Bayes evaluation")]
struct Cli {
    /// Suppress progress messages on stderr.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a stimulus and write it as a 16-bit stereo WAV.
    GenStim {
        #[arg(long)]
        kind: StimulusKind,
        /// Modulation (or click) rate in Hz.
        #[arg(long)]
        fm: f64,
        /// Duration in seconds.
        #[arg(long)]
        len: f64,
        #[arg(long)]
        dir: Direction,
        /// Output file. Defaults to `<kind>_<fm>hz_<len>s_<dir>.wav`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 44_100)]
        rate: u32,
        #[arg(long, default_value_t = 440.0)]
        carrier: f64,
        /// Second carrier of AM/FM.
        #[arg(long, default_value_t = 880.0)]
        carrier2: f64,
        #[arg(long, default_value_t = 1.0)]
        amplitude: f64,
        /// Samples per click phase.
        #[arg(long, default_value_t = 1)]
        click_width: usize,
    },
    /// Simulate every condition of the protocol into `<out>/<kind>_<ms>ms/`.
    Simulate {
        /// JSON pipeline config; built-in defaults when absent.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Session seed. Defaults to `protocol.rng_seed` (1).
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract PLV features from a condition directory, or from every
    /// condition directory below a parent.
    Features {
        epoch_dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Leave-one-out naive Bayes evaluation of a feature CSV.
    Evaluate {
        features: PathBuf,
        #[arg(long)]
        task: Task,
        /// JSON output file; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run label used as the row name in per-run tables.
        #[arg(long, default_value = "run")]
        run: String,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Accuracy tables from every evaluation JSON in a directory.
    Report {
        results_dir: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Append the published human-subject tables.
        #[arg(long)]
        reference: bool,
    },
    /// Simulate, extract and evaluate every condition for consecutive seeds,
    /// writing `seed_<k>.json` per seed.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        first_seed: u64,
        #[arg(long, default_value_t = 10)]
        seeds: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Csv,
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig> {
    match path {
        Some(p) => PipelineConfig::load(p),
        None => Ok(PipelineConfig::default()),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn require_dir(dir: &Path, field: &str) -> Result<()> {
    if dir.is_dir() {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("{} is not a directory", dir.display())))
    }
}

fn create_parent(path: &Path) -> Result<()> {
    match path.parent().filter(|p| !p.as_os_str().is_empty()) {
        Some(parent) => create_dir(parent),
        None => Ok(()),
    }
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        out.push(entry.map_err(|e| Error::io(dir, e))?.path());
    }
    out.sort();
    Ok(out)
}

fn run(cli: Cli) -> Result<()> {
    let log = |msg: String| {
        if !cli.quiet {
            eprintln!("{msg}");
        }
    };
    match cli.command {
        Command::GenStim {
            kind,
            fm,
            len,
            dir,
            out,
            rate,
            carrier,
            carrier2,
            amplitude,
            click_width,
        } => {
            let mut spec = StimulusSpec::new(kind, fm, len)
                .with_audio_rate(rate)
                .with_carriers(carrier, carrier2)
                .with_amplitude(amplitude);
            spec.click_width = click_width;
            spec.validate()?;
            let wave = synthesize(&spec)?;
            let n = wave.len();
            let stereo = spatialize(wave, dir);
            let out = out.unwrap_or_else(|| PathBuf::from(format!("{kind}_{fm}hz_{len}s_{dir}.wav")));
            create_parent(&out)?;
            write_wav(&stereo, &out)?;
            let carriers = match kind {
                StimulusKind::Clicks => format!("clicks={}", click_count(&spec)),
                StimulusKind::Amfm => format!("carriers={carrier}/{carrier2} Hz"),
                _ => format!("carrier={carrier} Hz"),
            };
            println!(
                "{} kind={kind} fm={fm} Hz {carriers} duration={len} s rate={rate} Hz samples={n} direction={dir}",
                out.display()
            );
        }
        Command::Simulate { config, seed, out } => {
            let cfg = load_config(config.as_deref())?;
            let seed = seed.unwrap_or(cfg.protocol.rng_seed);
            create_dir(&out)?;
            let sets = simulate_session(&cfg.protocol, &cfg.sim, seed)?;
            for set in &sets {
                let dir = out.join(set.condition.slug());
                write_epoch_set(set, &dir)?;
                log(format!("{}: {} epochs", dir.display(), set.epochs.len()));
            }
            println!("{} conditions written to {}", sets.len(), out.display());
        }
        Command::Features { epoch_dir, out, config } => {
            let cfg = load_config(config.as_deref())?;
            require_dir(&epoch_dir, "epoch_dir")?;
            let dirs: Vec<PathBuf> = if epoch_dir.join(MANIFEST).is_file() {
                vec![epoch_dir.clone()]
            } else {
                sorted_entries(&epoch_dir)?
                    .into_iter()
                    .filter(|p| p.join(MANIFEST).is_file())
                    .collect()
            };
            if dirs.is_empty() {
                return Err(Error::invalid(
                    "epoch_dir",
                    format!("no {MANIFEST} in {} or its subdirectories", epoch_dir.display()),
                ));
            }
            let mut features = Vec::new();
            for dir in &dirs {
                let set = read_epoch_set(dir)?;
                features.extend(extract_features(&set, &cfg.dsp)?);
                log(format!("{}: {} epochs", dir.display(), set.epochs.len()));
            }
            create_parent(&out)?;
            write_features_csv(&features, &out)?;
            println!("{} feature rows written to {}", features.len(), out.display());
        }
        Command::Evaluate {
            features,
            task,
            out,
            run,
            config,
        } => {
            let cfg = load_config(config.as_deref())?;
            let rows = read_features_csv(&features)?;
            let evaluations = evaluate_all(&rows, task, &cfg.nbc)?;
            for ev in &evaluations {
                let parts: Vec<String> = ev
                    .results
                    .iter()
                    .map(|r| format!("{}={:.4}", r.name, r.result.accuracy))
                    .collect();
                log(format!("{} {task}: {:.4} ({})", ev.condition, ev.accuracy, parts.join(", ")));
            }
            let file = EvaluationFile { run, evaluations };
            match out {
                Some(path) => {
                    create_parent(&path)?;
                    file.write(&path)?
                }
                None => {
                    let text = serde_json::to_string_pretty(&file).expect("evaluation serializes");
                    println!("{text}");
                }
            }
        }
        Command::Report {
            results_dir,
            format,
            reference,
        } => {
            require_dir(&results_dir, "results_dir")?;
            let files = sorted_entries(&results_dir)?
                .into_iter()
                .filter(|p| p.extension().is_some_and(|e| e == "json"))
                .map(EvaluationFile::read)
                .collect::<Result<Vec<_>>>()?;
            let report = build_report(&files);
            let text = match format {
                Format::Text => render_text(&report, reference),
                Format::Csv => render_csv(&report, reference),
            };
            print!("{text}");
        }
        Command::Sweep {
            config,
            first_seed,
            seeds,
            out,
        } => {
            let cfg = load_config(config.as_deref())?;
            create_dir(&out)?;
            let files = run_sweep(&cfg, first_seed, seeds)?;
            for (k, f) in files.iter().enumerate() {
                let path = out.join(format!("seed_{:02}.json", k + 1));
                f.write(&path)?;
                log(format!("{}: {}", f.run, path.display()));
            }
            print!("{}", render_text(&build_report(&files), false));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
