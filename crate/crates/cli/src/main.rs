//! `rfidet`: generate IQ files, calibrate, detect, and run the sweeps.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use rfidet::experiment::{self, run_pd_sweep_auto, thresholds_for_targets};
use rfidet::signal::{gen_chirp_len, read_iq_file, read_sidecar, write_iq_file, write_sidecar};
use rfidet::{detect, run_doa_sweep, run_pd_sweep, run_roc, run_table1, IqBuffer, ScenarioConfig, ThresholdSet};

#[derive(Parser)]
#[command(name = "rfidet", version, about = "Chirp interference detection and azimuth estimation")]
struct Cli {
    /// Scenario JSON; omitted fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum SignalKind {
    Chirp,
    Noise,
    Mixed,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a synthetic IQ file (f32 LE interleaved) with a rate sidecar.
    Generate {
        #[arg(long, value_enum, default_value = "mixed")]
        signal: SignalKind,
        /// Chirp scaling; defaults to the scenario chirp.
        #[arg(long, allow_hyphen_values = true)]
        scaling_db: Option<f64>,
        /// Samples; defaults to the scenario snapshot length.
        #[arg(long)]
        len: Option<usize>,
        /// File name inside --out.
        #[arg(long, default_value = "signal.iq")]
        file: String,
    },
    /// Learn thresholds from noise-only snapshots, one file per Pfa target.
    Calibrate {
        /// Overrides calibration_trials.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Run every detector on consecutive snapshots of an IQ file.
    Detect {
        #[arg(long = "in")]
        input: PathBuf,
        /// Needed when the file has no sidecar.
        #[arg(long)]
        sample_rate: Option<f64>,
        #[arg(long)]
        thresholds: PathBuf,
        /// Include the matched-order coefficients in the report.
        #[arg(long)]
        retain_frft: bool,
    },
    /// Pd against chirp scaling.
    PdSweep {
        /// Threshold files, one per Pfa target in order.
        #[arg(long)]
        thresholds: Vec<PathBuf>,
        /// Calibrate first instead of loading thresholds.
        #[arg(long, conflicts_with = "thresholds")]
        auto_calibrate: bool,
    },
    /// Fresh-noise ROC curves for all detectors at one scaling.
    Roc {
        #[arg(long, allow_hyphen_values = true, default_value_t = -40.0)]
        scaling_db: f64,
    },
    /// Search-cost comparison of the four fine-search schemes.
    Table1,
    /// Azimuth error against SNR.
    Doa,
}

/// Failures before any work starts exit with 2, everything else with 3.
enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Runtime(e.into())
    }
}

fn load_config(cli: &Cli) -> anyhow::Result<ScenarioConfig> {
    let mut cfg: ScenarioConfig = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write(out: &Path, name: &str, contents: &str) -> anyhow::Result<String> {
    let path = out.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(name.to_string())
}

fn write_manifest(out: &Path, command: &str, cfg: &ScenarioConfig, outputs: &[String], extra: serde_json::Value) -> anyhow::Result<()> {
    let manifest = json!({
        "command": command,
        "seed": cfg.seed,
        "versions": { "rfidet": env!("CARGO_PKG_VERSION") },
        "config": cfg,
        "outputs": outputs,
        "details": extra,
    });
    write(out, &format!("{command}.manifest.json"), &serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

fn pfa_tag(p: f64) -> String {
    format!("{p:e}")
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = load_config(&cli).map_err(Failure::Config)?;
    if let Some(n) = cli.threads {
        rayon_pool(n).map_err(Failure::Config)?;
    }
    let out = cli.out.as_path();
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    match cli.cmd {
        Cmd::Generate { signal, scaling_db, len, file } => {
            let len = len.unwrap_or(cfg.snapshot_len);
            let params = cfg.chirp.with_scaling_db(scaling_db.unwrap_or(cfg.chirp.scaling_db));
            let chirp = gen_chirp_len(&params, cfg.sample_rate_hz, len)?;
            let noise = IqBuffer::new(cfg.noise().sample(len, cfg.seed)?, cfg.sample_rate_hz)?;
            let buf = match signal {
                SignalKind::Chirp => chirp,
                SignalKind::Noise => noise,
                SignalKind::Mixed => rfidet::mix(&chirp, &noise)?,
            };
            let path = out.join(&file);
            write_iq_file(&path, &buf)?;
            write_sidecar(&path, cfg.sample_rate_hz)?;
            eprintln!("wrote {} ({} samples)", path.display(), buf.len());
        }
        Cmd::Calibrate { trials } => {
            let mut cfg = cfg;
            if let Some(t) = trials {
                cfg.calibration_trials = t;
            }
            let stats = experiment::calibration_statistics(&cfg)?;
            let sets = thresholds_for_targets(&cfg, &stats)?;
            let mut outputs = Vec::new();
            for (i, thr) in sets.iter().enumerate() {
                let text = serde_json::to_string_pretty(thr)?;
                if i == 0 {
                    outputs.push(write(out, "thresholds.json", &text)?);
                }
                outputs.push(write(out, &format!("thresholds_pfa_{}.json", pfa_tag(thr.calibrated_pfa)), &text)?);
                if thr.extrapolated {
                    eprintln!("pfa {}: thresholds extrapolated from a fitted tail", thr.calibrated_pfa);
                }
            }
            write_manifest(out, "calibrate", &cfg, &outputs, json!({ "thresholds": sets }))?;
        }
        Cmd::Detect { input, sample_rate, thresholds, retain_frft } => {
            let thr = ThresholdSet::load(&thresholds)?;
            let rate = match (sample_rate, read_sidecar(&input)?) {
                (Some(r), _) => r,
                (None, Some(s)) => s.sample_rate_hz,
                (None, None) => return Err(Failure::Config(anyhow!("{} has no sidecar; pass --sample-rate", input.display()))),
            };
            let buf = read_iq_file(&input, rate)?;
            let det = rfidet::DetectorConfig {
                snapshot_len: thr.snapshot_len,
                search: thr.search,
                target_pfa: thr.calibrated_pfa,
                ..cfg.detector.clone()
            };
            let n = det.snapshot_len;
            if buf.len() < n {
                return Err(anyhow!("{} holds {} samples, thresholds need snapshots of {n}", input.display(), buf.len()).into());
            }
            if buf.len() % n != 0 {
                eprintln!("ignoring {} trailing samples", buf.len() % n);
            }
            let mut reports = Vec::new();
            for block in buf.samples().chunks_exact(n) {
                let snap = IqBuffer::new(block.to_vec(), rate)?;
                let mut r = detect(&snap, &det, &thr, cfg.engine)?;
                if !retain_frft {
                    r.matched_frft = None;
                }
                reports.push(r);
            }
            println!("{}", serde_json::to_string_pretty(&reports)?);
        }
        Cmd::PdSweep { thresholds, auto_calibrate } => {
            let (sets, sweeps) = if auto_calibrate {
                run_pd_sweep_auto(&cfg)?
            } else {
                if thresholds.is_empty() {
                    return Err(Failure::Config(anyhow!(
                        "no thresholds given: run `rfidet calibrate` first and pass --thresholds, or use --auto-calibrate"
                    )));
                }
                let sets = thresholds.iter().map(|p| ThresholdSet::load(p)).collect::<Result<Vec<_>, _>>()?;
                let sweeps = run_pd_sweep(&cfg, &sets)?;
                (sets, sweeps)
            };
            let mut outputs = Vec::new();
            for (i, s) in sweeps.iter().enumerate() {
                let csv = s.to_csv();
                if i == 0 {
                    outputs.push(write(out, "pd_sweep.csv", &csv)?);
                }
                if sweeps.len() > 1 {
                    outputs.push(write(out, &format!("pd_sweep_pfa_{}.csv", pfa_tag(s.calibrated_pfa)), &csv)?);
                }
            }
            write_manifest(out, "pd-sweep", &cfg, &outputs, json!({ "thresholds": sets }))?;
        }
        Cmd::Roc { scaling_db } => {
            let roc = run_roc(&cfg, scaling_db)?;
            let outputs = vec![write(out, "roc.csv", &roc.to_csv())?];
            write_manifest(
                out,
                "roc",
                &cfg,
                &outputs,
                json!({ "scaling_db": scaling_db, "noise_trials": roc.noise_trials, "signal_trials": roc.signal_trials }),
            )?;
        }
        Cmd::Table1 => {
            let t = run_table1(&cfg)?;
            let outputs = vec![write(out, "table1.csv", &t.to_csv())?, write(out, "table1_timing.csv", &t.timing_csv())?];
            write_manifest(out, "table1", &cfg, &outputs, json!({ "rows": t.rows }))?;
        }
        Cmd::Doa => {
            let r = run_doa_sweep(&cfg)?;
            let outputs = vec![write(out, "doa.csv", &r.to_csv())?];
            write_manifest(out, "doa", &cfg, &outputs, json!({ "noise_free_error_deg": r.noise_free_error_deg }))?;
        }
    }
    Ok(())
}

fn rayon_pool(n: usize) -> anyhow::Result<()> {
    if n == 0 {
        bail!("--threads must be at least 1");
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
