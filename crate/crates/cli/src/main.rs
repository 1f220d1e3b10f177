use std::path::PathBuf;
use std::process::ExitCode;

use acsharp::config::RunConfig;
use acsharp::curve::FrontTracker;
use acsharp::diagnostics::{extract_interface, ExtractOptions};
use acsharp::energetics::EnergeticsContext;
use acsharp::grid::DiskField;
use acsharp::{export, study, Error, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "ac-sharp", version, about = "Allen-Cahn with boundary contact energy on the disk")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct ConfigArgs {
    /// Run configuration (JSON).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in configuration: mp90, mp60 or cc60.
    #[arg(long)]
    preset: Option<String>,
    /// Dotted-path override, e.g. --override scheme.c_tau=0.1
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig> {
        match (&self.config, &self.preset) {
            (Some(p), _) => RunConfig::load(p, &self.overrides),
            (None, Some(name)) => {
                let base = RunConfig::preset(name)?;
                RunConfig::from_json(&base.to_json(), &self.overrides)
            }
            (None, None) => Err(Error::Config("one of --config or --preset is required".into())),
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Run every ε of the config and write diagnostics and snapshots.
    Simulate(ConfigArgs),
    /// ε-convergence study with fitted log-log slopes.
    Converge(ConfigArgs),
    /// Calibration condition report for the reference flow.
    CalibrateCheck {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Index into the ε list selecting the grid.
        #[arg(long, default_value_t = 0)]
        eps_index: usize,
        #[arg(long, default_value_t = 0.05)]
        time: f64,
        #[arg(long, default_value_t = 0.005)]
        dt: f64,
    },
    /// Dump the heteroclinic profile, its truncation and c_F.
    Profile {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Truncation length L.
        #[arg(long, default_value_t = 4.0)]
        truncation: f64,
        #[arg(long, default_value_t = 10.0)]
        span: f64,
        #[arg(long, default_value_t = 201)]
        samples: usize,
    },
    /// Extract the ψ = c_F/2 contour from a field snapshot.
    ExtractInterface {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Snapshot stem (without .json/.bin).
        #[arg(long)]
        snapshot: PathBuf,
        /// Compare against the reference curve at the snapshot time.
        #[arg(long)]
        reference: bool,
    },
    /// Report, CSV tables and gnuplot data for a finished run directory.
    Export {
        #[arg(long)]
        run_dir: PathBuf,
    },
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<u8> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(0)
}

fn run(cli: Cli) -> Result<u8> {
    match cli.cmd {
        Cmd::Simulate(a) => {
            let cfg = a.load()?;
            let s = study::simulate(&cfg)?;
            print_json(&s)
        }
        Cmd::Converge(a) => {
            let cfg = a.load()?;
            let t = study::converge(&cfg, true)?;
            print_json(&t)?;
            if let Some(f) = t.rows.iter().find_map(|r| r.failure.as_ref()) {
                eprintln!("error: {f}");
                return Ok(3);
            }
            Ok(0)
        }
        Cmd::CalibrateCheck { cfg, eps_index, time, dt } => {
            let cfg = cfg.load()?;
            if eps_index >= cfg.epsilons.len() {
                return Err(Error::Config(format!("eps index {eps_index} out of range")));
            }
            print_json(&study::calibrate_check(&cfg, eps_index, time, dt)?)
        }
        Cmd::Profile {
            cfg,
            truncation,
            span,
            samples,
        } => {
            let cfg = cfg.load()?;
            print_json(&study::profile_dump(&cfg, truncation, span, samples)?)
        }
        Cmd::ExtractInterface {
            cfg,
            snapshot,
            reference,
        } => {
            let cfg = cfg.load()?;
            let (u, meta) = DiskField::read_snapshot(&snapshot)?;
            let ctx = EnergeticsContext::new(cfg.manifold.build()?, &cfg.energetics())?;
            if u.k != ctx.mp.k {
                return Err(Error::Config(format!("snapshot has k = {}, config k = {}", u.k, ctx.mp.k)));
            }
            let curve = if reference {
                let c = cfg.curve.build(cfg.r_omega, cfg.curve_nodes)?;
                let mut tr = FrontTracker::new(c, cfg.alpha_deg.to_radians());
                tr.advance_to(meta.time)?;
                Some(tr.curve)
            } else {
                None
            };
            let opts = ExtractOptions {
                angle_window: cfg.diagnostics.angle_window,
                scan_levels: cfg.diagnostics.perimeter_scan,
                ..ExtractOptions::for_eps(meta.epsilon, ctx.c_f)
            };
            print_json(&extract_interface(&u, &ctx, curve.as_ref(), &opts)?)
        }
        Cmd::Export { run_dir } => {
            for p in export::export(&run_dir)? {
                println!("{}", p.display());
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
