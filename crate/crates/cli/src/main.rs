//! `goaround`: command-line driver for the go-around alert pipeline.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use goaround::features::catalog;
use goaround::pipeline::{self, EvalSummary, RunConfig};
use goaround::synth::ScenarioConfig;

#[derive(Parser, Debug)]
#[command(name = "goaround", version, about = "Go-around detection, feature extraction and alert modelling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Args, Debug)]
struct Global {
    /// Run configuration (TOML). A bare scenario file is accepted too.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Top-level seed; every stage derives its own seed from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for default artifact locations.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Radar coverage radius around the origin.
    #[arg(long, global = true)]
    radius_nm: Option<f64>,
    /// Local time offset from UTC, minutes.
    #[arg(long, global = true, allow_hyphen_values = true)]
    utc_offset_min: Option<i64>,
    /// Destination airport scanned for go-arounds (SFO, OAK, SJC or ALL).
    #[arg(long, global = true)]
    dest: Option<String>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic scenario: tracks, flights, weather, ground truth.
    Synth {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Detect go-arounds in radar tracks.
    Detect {
        #[arg(long)]
        tracks: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the per-minute feature table.
    Featurize {
        /// Directory with tracks.csv, flights.csv and weather.csv.
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the feature catalog and exit.
        #[arg(long)]
        print_catalog: bool,
    },
    /// Label go-around and nominal samples, and split train/test.
    Label {
        #[arg(long)]
        features: Option<PathBuf>,
        #[arg(long)]
        events: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        split: SplitArgs,
        #[arg(long)]
        train: Option<PathBuf>,
        #[arg(long)]
        test: Option<PathBuf>,
    },
    /// Fit the two-class discriminant.
    Train {
        #[arg(long)]
        samples: Option<PathBuf>,
        #[arg(long)]
        ridge: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score samples and write the lift curve and distribution reports.
    Eval {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        samples: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Every stage in order under --out-dir.
    RunAll {
        #[command(flatten)]
        split: SplitArgs,
        #[arg(long)]
        ridge: Option<f64>,
    },
    /// List feature index, name and unit.
    PrintCatalog,
}

#[derive(Args, Debug)]
struct SplitArgs {
    /// Training period as local days `start,end` (half-open).
    #[arg(long, value_parser = parse_days)]
    train_days: Option<[i64; 2]>,
    /// Test period as local days `start,end` (half-open).
    #[arg(long, value_parser = parse_days)]
    test_days: Option<[i64; 2]>,
}

fn parse_days(s: &str) -> Result<[i64; 2], String> {
    let parts: Vec<&str> = s.split([',', '-', ':']).map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => {
            let a: i64 = a.parse().map_err(|_| format!("bad day `{a}`"))?;
            let b: i64 = b.parse().map_err(|_| format!("bad day `{b}`"))?;
            if a < b {
                Ok([a, b])
            } else {
                Err("start day must precede end day".into())
            }
        }
        _ => Err(format!("expected `start,end`, got `{s}`")),
    }
}

fn load_config(g: &Global) -> Result<RunConfig> {
    let mut cfg = match &g.config {
        None => {
            let mut cfg = RunConfig { seed: g.seed.unwrap_or(0), ..RunConfig::default() };
            cfg.apply_seed();
            cfg
        }
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("{}", path.display()))?;
            match RunConfig::from_toml(&text) {
                Ok(mut cfg) => {
                    if let Some(s) = g.seed {
                        cfg.seed = s;
                    }
                    cfg.apply_seed();
                    cfg
                }
                Err(run_err) => {
                    let scenario = ScenarioConfig::from_toml(&text)
                        .map_err(|_| run_err)
                        .with_context(|| format!("{}", path.display()))?;
                    let mut cfg = RunConfig { scenario, ..RunConfig::default() };
                    // a scenario file carries its own seed unless overridden
                    let own = cfg.scenario.seed;
                    cfg.seed = g.seed.unwrap_or(own);
                    cfg.apply_seed();
                    if g.seed.is_none() {
                        cfg.scenario.seed = own;
                    }
                    cfg
                }
            }
        }
    };
    if let Some(d) = &g.out_dir {
        cfg.out_dir = d.clone();
    }
    if let Some(r) = g.radius_nm {
        cfg.ingest.radius_nm = r;
    }
    if let Some(off) = g.utc_offset_min {
        cfg.set_utc_offset(off);
    }
    if let Some(d) = &g.dest {
        cfg.dest = if d.eq_ignore_ascii_case("all") { None } else { Some(d.to_ascii_uppercase()) };
    }
    Ok(cfg)
}

fn apply_split(cfg: &mut RunConfig, split: &SplitArgs) {
    if split.train_days.is_some() {
        cfg.split.train_days = split.train_days;
    }
    if split.test_days.is_some() {
        cfg.split.test_days = split.test_days;
    }
}

fn print_catalog() {
    println!("index,name,unit");
    for spec in catalog() {
        println!("{},{},{}", spec.index, spec.name, spec.unit);
    }
}

fn print_summary(s: &EvalSummary) {
    println!(
        "test samples {} ({} go-around); alert fraction {:.3} captures {:.3} (lift ratio {:.3}, threshold {:.6})",
        s.samples, s.ga, s.alert_target, s.capture, s.lift_ratio, s.threshold
    );
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = load_config(&cli.global)?;
    match cli.command {
        Command::PrintCatalog => print_catalog(),
        Command::Synth { out } => {
            cfg.validate()?;
            let dir = out.unwrap_or_else(|| cfg.dataset_dir());
            let s = pipeline::run_synth(&cfg.scenario, &dir)?;
            println!(
                "{} tracks, {} flights, {} weather minutes, {} go-arounds injected -> {}",
                s.tracks,
                s.flights,
                s.weather_minutes,
                s.injected,
                dir.display()
            );
        }
        Command::Detect { tracks, out } => {
            let tracks = tracks.unwrap_or_else(|| cfg.dataset_dir().join("tracks.csv"));
            let out = out.unwrap_or_else(|| cfg.events_path());
            let events = pipeline::run_detect(&tracks, &out, &cfg)?;
            println!("{} go-arounds -> {}", events.len(), out.display());
        }
        Command::Featurize { print_catalog: true, .. } => print_catalog(),
        Command::Featurize { dataset, out, .. } => {
            let dataset = dataset.unwrap_or_else(|| cfg.dataset_dir());
            let out = out.unwrap_or_else(|| cfg.features_path());
            let rows = pipeline::run_featurize(&dataset, &out, &cfg)?;
            println!("{rows} minutes -> {}", out.display());
        }
        Command::Label { features, events, out, split, train, test } => {
            apply_split(&mut cfg, &split);
            if train.is_some() {
                cfg.paths.train = train;
            }
            if test.is_some() {
                cfg.paths.test = test;
            }
            cfg.corpus.validate()?;
            let features = features.unwrap_or_else(|| cfg.features_path());
            let events = events.unwrap_or_else(|| cfg.events_path());
            let out = out.unwrap_or_else(|| cfg.samples_path());
            let corpus = pipeline::run_label(&features, &events, &out, &cfg)?;
            println!("{} samples -> {}", corpus.samples.len(), out.display());
            if let Some((tr, te)) = &corpus.split {
                println!("train {} -> {}; test {} -> {}", tr.len(), cfg.train_path().display(), te.len(), cfg.test_path().display());
            }
        }
        Command::Train { samples, ridge, out } => {
            let ridge = ridge.unwrap_or(cfg.ridge_lambda);
            if !(ridge.is_finite() && ridge >= 0.0) {
                bail!("--ridge must be a non-negative number");
            }
            let samples = samples.unwrap_or_else(|| cfg.train_path());
            let out = out.unwrap_or_else(|| cfg.model_path());
            let model = pipeline::run_train(&samples, &out, ridge)?;
            println!("{}-dimensional model, ridge {ridge} -> {}", model.dim(), out.display());
        }
        Command::Eval { model, samples, out } => {
            let model = model.unwrap_or_else(|| cfg.model_path());
            let samples = samples.unwrap_or_else(|| cfg.test_path());
            let out = out.unwrap_or_else(|| cfg.report_dir());
            let s = pipeline::run_eval(&model, &samples, &out, &cfg)?;
            print_summary(&s);
        }
        Command::RunAll { split, ridge } => {
            apply_split(&mut cfg, &split);
            if let Some(r) = ridge {
                cfg.ridge_lambda = r;
            }
            let s = pipeline::run_all(&cfg)?;
            print_summary(&s);
            println!("artifacts in {}", cfg.out_dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
