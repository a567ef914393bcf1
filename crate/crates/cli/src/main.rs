//! `mdattack`: simulate, build corpora, plot and measure the micro-Doppler
//! attack from the command line.
//!
//! Exit status is 0 on success, 1 on runtime failure and 2 on usage errors
//! (bad flags, unknown config keys, invalid config values).

mod config;
mod metrics;
mod plot;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use log::info;
use mdattack::dataset::{build_corpus, read_record, simulate_record_full, write_record, MANIFEST_FILE};
use mdattack::receiver::range_doppler_map;
use mdattack::{ClassLabel, CorpusRecord, RangeDopplerMap, Scheme};
use serde_json::json;

use config::RunConfig;
use plot::{render_svg, Axis, Heatmap};

#[derive(Parser)]
#[command(name = "mdattack", version, about = "OFDM micro-Doppler attack simulator")]
struct Cli {
    /// More log output on stderr (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    /// Only log errors.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Run configuration JSON; see configs/default.json.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override a config value by dotted key, e.g. spec.cfg.n_frames=2000.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and write its record and sidecar.
    Simulate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Scenario class (simulate.class).
        #[arg(long)]
        class: Option<ClassLabel>,
        /// Attack scheme (simulate.scheme).
        #[arg(long)]
        scheme: Option<Scheme>,
        /// Master seed (spec.master_seed).
        #[arg(long)]
        seed: Option<u64>,
        /// Scenario index within the class (simulate.index).
        #[arg(long)]
        index: Option<usize>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Also render the spectrogram to this SVG file.
        #[arg(long, value_name = "FILE")]
        plot: Option<PathBuf>,
        /// Also render the range-Doppler map to this SVG file.
        #[arg(long, value_name = "FILE")]
        rd_plot: Option<PathBuf>,
    },
    /// Build a labeled corpus with a manifest.
    Corpus {
        #[command(flatten)]
        config: ConfigArgs,
        /// Corpus spec JSON replacing the config's `spec` section.
        #[arg(long, value_name = "FILE")]
        spec: Option<PathBuf>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (jobs); defaults to every core.
        #[arg(long)]
        jobs: Option<usize>,
        /// Scenarios per class and scheme (spec.scenarios_per_class).
        #[arg(long)]
        per_class: Option<usize>,
        /// Master seed (spec.master_seed).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Render a record's spectrogram to SVG.
    Plot {
        /// `.mdspec` record; its `.json` sidecar must sit next to it.
        #[arg(long)]
        record: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print per-scheme entropy and ridge-shift statistics as JSON.
    Metrics {
        /// Corpus directory containing manifest.json.
        #[arg(long)]
        corpus: PathBuf,
    },
}

/// Errors the user fixes by changing the invocation.
#[derive(Debug)]
struct Usage(anyhow::Error);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(e: anyhow::Error) -> anyhow::Error {
    anyhow!(Usage(e))
}

fn resolve(args: &ConfigArgs, flags: &[String]) -> anyhow::Result<RunConfig> {
    let base = match &args.config {
        Some(path) => config::load(path).map_err(usage)?,
        None => RunConfig::default(),
    };
    let all: Vec<String> = args.overrides.iter().chain(flags).cloned().collect();
    config::apply_overrides(&base, &all).map_err(usage)
}

fn flag<T: ToString>(key: &str, v: &Option<T>) -> Option<String> {
    v.as_ref().map(|v| format!("{key}={}", v.to_string()))
}

fn print_json(value: &serde_json::Value) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn spectrogram_heatmap(rec: &CorpusRecord) -> Heatmap {
    let sp = &rec.spectrogram;
    Heatmap {
        title: format!("{} / {} (seed {:016x})", rec.label, rec.scheme, rec.seed),
        columns: sp.values.rows().into_iter().map(|r| r.to_vec()).collect(),
        x: Axis {
            label: "Time (s)".into(),
            first: sp.time_axis.at(0),
            last: sp.time_axis.at(sp.n_time() - 1),
        },
        y: Axis {
            label: "Doppler (Hz)".into(),
            first: sp.doppler_axis.at(0),
            last: sp.doppler_axis.at(sp.n_doppler() - 1),
        },
    }
}

fn range_doppler_heatmap(rd: &RangeDopplerMap, title: String) -> Heatmap {
    let peak = rd.values.iter().cloned().fold(0.0, f64::max);
    let floor_db = 60.0;
    let scale = |v: f64| {
        let db = 20.0 * (v / peak).max(1e-12).log10();
        ((db + floor_db) / floor_db).clamp(0.0, 1.0) as f32
    };
    let (n, m) = rd.values.dim();
    Heatmap {
        title,
        columns: rd
            .values
            .columns()
            .into_iter()
            .map(|c| c.iter().map(|&v| scale(v)).collect())
            .collect(),
        x: Axis {
            label: "Doppler (Hz)".into(),
            first: rd.doppler_axis.at(0),
            last: rd.doppler_axis.at(m - 1),
        },
        y: Axis {
            label: "Bistatic range (m)".into(),
            first: rd.range_axis.at(0),
            last: rd.range_axis.at(n - 1),
        },
    }
}

fn write_svg(path: &Path, map: &Heatmap) -> anyhow::Result<()> {
    fs::write(path, render_svg(map)?).with_context(|| format!("writing {}", path.display()))?;
    info!("wrote {}", path.display());
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Simulate {
            config,
            class,
            scheme,
            seed,
            index,
            out,
            plot,
            rd_plot,
        } => {
            let flags: Vec<String> = [
                flag("simulate.class", &class),
                flag("simulate.scheme", &scheme),
                flag("simulate.index", &index),
                flag("spec.master_seed", &seed),
            ]
            .into_iter()
            .flatten()
            .collect();
            let cfg = resolve(&config, &flags)?;
            cfg.spec.validate().map_err(|e| usage(e.into()))?;
            let sim = &cfg.simulate;
            info!(
                "simulating {} / {} index {} seed {}",
                sim.class, sim.scheme, sim.index, cfg.spec.master_seed
            );
            let (rec, output) = simulate_record_full(&cfg.spec, sim.class, sim.scheme, sim.index)?;
            fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            let file = write_record(&out, &format!("{:016x}", rec.seed), &rec)?;
            info!("wrote {}", out.join(&file).display());
            if let Some(path) = plot {
                write_svg(&path, &spectrogram_heatmap(&rec))?;
            }
            if let Some(path) = rd_plot {
                let title = format!("Range-Doppler, {} / {}", rec.label, rec.scheme);
                write_svg(&path, &range_doppler_heatmap(&range_doppler_map(&output.z), title))?;
            }
            print_json(&json!({
                "file": out.join(&file),
                "label": rec.label,
                "scheme": rec.scheme,
                "seed": rec.seed,
            }))
        }
        Command::Corpus {
            config,
            spec,
            out,
            jobs,
            per_class,
            seed,
        } => {
            let mut base = match &config.config {
                Some(path) => config::load(path).map_err(usage)?,
                None => RunConfig::default(),
            };
            if let Some(path) = &spec {
                base.spec = config::load_spec(path).map_err(usage)?;
            }
            let flags: Vec<String> = [
                flag("spec.scenarios_per_class", &per_class),
                flag("spec.master_seed", &seed),
                flag("jobs", &jobs),
            ]
            .into_iter()
            .flatten()
            .chain(config.overrides.iter().cloned())
            .collect();
            let cfg = config::apply_overrides(&base, &flags).map_err(usage)?;
            cfg.spec.validate().map_err(|e| usage(e.into()))?;
            let mut pool = rayon::ThreadPoolBuilder::new();
            if let Some(n) = cfg.jobs {
                if n == 0 {
                    return Err(usage(anyhow!("jobs must be at least 1")));
                }
                pool = pool.num_threads(n);
            }
            let pool = pool.build()?;
            info!(
                "building {} records with {} threads into {}",
                cfg.spec.record_count(),
                pool.current_num_threads(),
                out.display()
            );
            let manifest = pool.install(|| build_corpus(&cfg.spec, &out))?;
            print_json(&json!({
                "manifest": out.join(MANIFEST_FILE),
                "records": manifest.len(),
            }))
        }
        Command::Plot { record, out } => {
            let rec = read_record(&record)?;
            write_svg(&out, &spectrogram_heatmap(&rec))
        }
        Command::Metrics { corpus } => {
            let m = metrics::corpus_metrics(&corpus)?;
            print_json(&serde_json::to_value(m)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => "error",
        (false, 0) => "info",
        (false, 1) => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<Usage>() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
