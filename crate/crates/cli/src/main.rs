use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Parser, ValueEnum};

use stairscan::config::Dump;
use stairscan::export::{write_map_files, write_overlay_ppm, write_particles_csv, write_profiles_csv};
use stairscan::pipeline::Outcome;
use stairscan::{run_pipeline, validate_config, InitKind, PipelineConfig, PipelineReport};

const EXIT_INTERNAL: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NO_STAIRS: u8 = 3;

const DEFAULT_OUT: &str = "stairscan-out";

/// Simulate a mirror-scanner radar sweep of a staircase and estimate its steps.
#[derive(Debug, Parser)]
#[command(version, after_help = "Exit codes: 0 stairs detected, 1 internal failure, 2 config error, 3 no stairs detected.")]
struct Args {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config file).
    #[arg(long)]
    seed: Option<u64>,
    /// Skip CA-CFAR and run the filter on the raw map.
    #[arg(long)]
    no_cfar: bool,
    /// Particle initialisation.
    #[arg(long, value_enum)]
    init: Option<InitArg>,
    /// Resampling rounds.
    #[arg(long)]
    iterations: Option<usize>,
    /// Output directory for results.json and dumps.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Extra artefacts to write (repeatable or comma-separated).
    #[arg(long, value_enum, value_delimiter = ',')]
    dump: Vec<DumpArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum InitArg {
    Uniform,
    Gmm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DumpArg {
    Profiles,
    Map,
    Particles,
    Overlay,
}

impl From<DumpArg> for Dump {
    fn from(d: DumpArg) -> Self {
        match d {
            DumpArg::Profiles => Dump::Profiles,
            DumpArg::Map => Dump::Map,
            DumpArg::Particles => Dump::Particles,
            DumpArg::Overlay => Dump::Overlay,
        }
    }
}

enum Failure {
    Config(String),
    Internal(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Internal(e)
    }
}

fn load_config(args: &Args) -> Result<PipelineConfig, Failure> {
    let mut config = match &args.config {
        Some(path) => PipelineConfig::from_file(path)
            .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = Some(seed);
    }
    if args.no_cfar {
        config.cfar.enabled = false;
    }
    if let Some(init) = args.init {
        config.filter.init_kind = match init {
            InitArg::Uniform => InitKind::Uniform,
            InitArg::Gmm => InitKind::Gmm,
        };
    }
    if args.iterations.is_some() {
        config.filter.iterations = args.iterations;
    }
    if let Some(out) = &args.out {
        config.output.dir = Some(out.clone());
    }
    for d in &args.dump {
        let d = Dump::from(*d);
        if !config.output.dumps.contains(&d) {
            config.output.dumps.push(d);
        }
    }
    let violations = validate_config(&config);
    if !violations.is_empty() {
        let lines: Vec<String> = violations.iter().map(|v| format!("  {v}")).collect();
        return Err(Failure::Config(format!("invalid configuration:\n{}", lines.join("\n"))));
    }
    Ok(config)
}

fn write_outputs(config: &PipelineConfig, report: &PipelineReport, dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    std::fs::write(dir.join("results.json"), report.results_json() + "\n")?;
    for dump in &config.output.dumps {
        match dump {
            Dump::Profiles => write_profiles_csv(&report.profiles, BufWriter::new(File::create(dir.join("profiles.csv"))?))?,
            Dump::Map => write_map_files(&report.map, &dir.join("map.pgm"), &dir.join("map.json"))?,
            Dump::Particles => {
                let snaps = report.filter.as_ref().map(|f| f.snapshots.as_slice()).unwrap_or(&[]);
                write_particles_csv(snaps, BufWriter::new(File::create(dir.join("particles.csv"))?))?
            }
            Dump::Overlay => write_overlay_ppm(
                &report.map,
                &config.scene,
                &report.results.estimate,
                BufWriter::new(File::create(dir.join("overlay.ppm"))?),
            )?,
        }
    }
    Ok(())
}

fn print_summary(report: &PipelineReport, dir: &Path, elapsed: f64) {
    let r = &report.results;
    println!("seed {}  cfar {}  map {}x{} cells", r.seed, if r.cfar_applied { "on" } else { "off" }, r.map_cells[0], r.map_cells[1]);
    if let Some(f) = &r.filter {
        let conv = match f.iterations_to_converge {
            Some(i) => format!("converged at round {i}"),
            None => "not converged".to_string(),
        };
        println!(
            "filter: {:?} init, {} rounds, metric {:.3}, {conv}",
            f.init_kind,
            f.iterations_run,
            f.metric_history.last().copied().unwrap_or(0.0)
        );
    }
    match &r.outcome {
        Outcome::Detected => println!("detected {} step(s)", r.estimate.num_steps),
        Outcome::NoStairs { reason } => println!("no stairs detected ({reason})"),
    }
    if !r.estimate.steps.is_empty() {
        println!("  step   depth_m   top_m   riser_m   |d_err|   |h_err|");
        for (i, s) in r.estimate.steps.iter().enumerate() {
            let (de, he) = r
                .ground_truth
                .steps
                .get(i)
                .map(|e| (format!("{:.4}", e.depth_error), format!("{:.4}", e.height_error)))
                .unwrap_or(("-".into(), "-".into()));
            println!(
                "  {:>4}  {:>8.4}  {:>6.4}  {:>8.4}  {:>8}  {:>8}",
                i + 1,
                s.depth,
                s.top_height,
                s.riser_height,
                de,
                he
            );
        }
    }
    let g = &r.ground_truth;
    println!(
        "ground truth: {} step(s), count {}",
        g.expected_steps,
        if g.count_matches { "matches" } else { "differs" }
    );
    println!("results: {}", dir.join("results.json").display());
    println!("wall time {elapsed:.2} s");
}

fn run(args: &Args) -> Result<bool, Failure> {
    let start = Instant::now();
    let config = load_config(args)?;
    let report = run_pipeline(&config).map_err(|e| Failure::Internal(e.into()))?;
    let dir = config.output.dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    write_outputs(&config, &report, &dir)?;
    print_summary(&report, &dir, start.elapsed().as_secs_f64());
    Ok(report.detected())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_NO_STAIRS),
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Internal(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INTERNAL)
        }
    }
}
