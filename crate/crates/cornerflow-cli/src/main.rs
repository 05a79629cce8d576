use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use log::info;

use cornerflow::config::{parse_config, RunConfig};
use cornerflow::harmonic_split::{twin_run_divergence, Perturbation};
use cornerflow::output::{parse_snapshot_json, parse_trace_csv, to_json, twin_csv, write_run};
use cornerflow::transport::{patch_from_config, simulate};
use cornerflow::validation::{kernel_test_suite, probe_map, summarize_run, validate_lyapunov};
use cornerflow::{ConformalMap, FlowError};

#[derive(Parser)]
#[command(name = "cornerflow", version, about = "Vortex-blob Euler flow around obstacles with corners")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Only log errors.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output_dir` for `simulate`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured simulation and write diagnostics, snapshots,
    /// traces and summary.json.
    Simulate(Common),
    /// Far-field constants, corner exponents and map round-trip error.
    ProbeMap(Common),
    /// Kernel and velocity identity checks for the configured domain.
    KernelTest(Common),
    /// Liapounov checks on a snapshot (and optionally a trace).
    ValidateLyapunov {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Particle index of the trace (default: parsed from `trace_<id>.csv`).
        #[arg(long)]
        particle: Option<usize>,
    },
    /// Twin-run divergence; perturbation `identical`, `refine` or `jitter:<eps>`.
    TwinRun {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        perturb: String,
    },
}

fn load(path: &Path) -> anyhow::Result<RunConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(parse_config(&text)?)
}

fn emit(out: Option<&Path>, file: &str, text: &str) -> anyhow::Result<()> {
    print!("{text}");
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(file), text)?;
    }
    Ok(())
}

fn parse_perturbation(s: &str) -> anyhow::Result<Perturbation> {
    match s {
        "identical" => Ok(Perturbation::Identical),
        "refine" => Ok(Perturbation::Refine),
        _ => match s.strip_prefix("jitter:") {
            Some(eps) => {
                let eps: f64 = eps.parse().with_context(|| format!("bad jitter size `{eps}`"))?;
                if !(eps > 0.0 && eps.is_finite()) {
                    bail!("jitter size must be positive");
                }
                Ok(Perturbation::Jitter(eps))
            }
            None => Err(anyhow!("unknown perturbation `{s}` (identical | refine | jitter:<eps>)")),
        },
    }
}

fn trace_id(path: &Path) -> Option<usize> {
    path.file_stem()?.to_str()?.strip_prefix("trace_")?.parse().ok()
}

/// Returns whether every reported check passed.
fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Simulate(c) => {
            let mut config = load(&c.config)?;
            if let Some(out) = c.out {
                config.output_dir = out;
            }
            let map = ConformalMap::new(config.domain.clone());
            let out = simulate(&config)?;
            let summary = summarize_run(&out, &map)?;
            write_run(&config.output_dir, &out, &summary)?;
            info!("wrote {} records to {}", out.records.len(), config.output_dir.display());
            print!("{}", to_json(&summary)?);
            Ok(summary.all_pass())
        }
        Command::ProbeMap(c) => {
            let config = load(&c.config)?;
            let report = probe_map(&ConformalMap::new(config.domain))?;
            emit(c.out.as_deref(), "probe_map.json", &to_json(&report)?)?;
            Ok(true)
        }
        Command::KernelTest(c) => {
            let config = load(&c.config)?;
            let map = ConformalMap::new(config.domain.clone());
            let ens = match &config.patch {
                Some(p) => patch_from_config(&map, p)?,
                None => cornerflow::biot_savart::VortexEnsemble::empty(),
            };
            let checks = kernel_test_suite(&map, &ens, config.gamma0)?;
            emit(c.out.as_deref(), "kernel_test.json", &to_json(&checks)?)?;
            Ok(checks.iter().all(|c| c.pass))
        }
        Command::ValidateLyapunov { common, snapshot, trace, particle } => {
            let config = load(&common.config)?;
            let map = Arc::new(ConformalMap::new(config.domain.clone()));
            let text = fs::read_to_string(&snapshot).with_context(|| format!("reading {}", snapshot.display()))?;
            let ens = parse_snapshot_json(&text)?;
            let trace = match trace {
                Some(path) => {
                    let id = particle.or_else(|| trace_id(&path)).unwrap_or(0);
                    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                    Some(parse_trace_csv(&text, id)?)
                }
                None => None,
            };
            let checks = validate_lyapunov(map, &ens, config.gamma0, trace.as_ref())?;
            emit(common.out.as_deref(), "lyapunov.json", &to_json(&checks)?)?;
            Ok(checks.iter().all(|c| c.pass))
        }
        Command::TwinRun { common, perturb } => {
            let config = load(&common.config)?;
            let report = twin_run_divergence(&config, parse_perturbation(&perturb)?)?;
            info!("fitted rate {:.6e}", report.rate);
            emit(common.out.as_deref(), "twin_run.csv", &twin_csv(&report))?;
            Ok(true)
        }
    }
}

fn error_kind(e: &anyhow::Error) -> String {
    match e.downcast_ref::<FlowError>() {
        Some(f) => {
            let d = format!("{f:?}");
            d.split([' ', '(', '{']).next().unwrap_or("FlowError").to_string()
        }
        None => "Error".to_string(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("cannot configure {n} threads: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            let report = serde_json::json!({ "error": error_kind(&e), "message": format!("{e:#}") });
            println!("{report}");
            ExitCode::from(1)
        }
    }
}
