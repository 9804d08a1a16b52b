//! Command-line front end for turinglab.
//!
//! Exit codes: 0 success, 2 invalid input, 3 numerical failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use turinglab::config::ModelFile;
use turinglab::io::{fmt_f64, to_json_string};
use turinglab::kinetics::{KineticModel, SchnakenbergParams};
use turinglab::reduction::{
    bifurcated_state, classify_transition, psi_table_csv, reduce_at_critical, BifurcatedState,
    Classification, ReducedSystem,
};
use turinglab::simulator::{write_outputs, Simulation, SimulationConfig, Termination};
use turinglab::spectrum::{eigen_table_csv, eigenpairs, BoundaryCondition, DomainSpec};
use turinglab::stability::{audit_tangency, critical_dv, h_profile, h_profile_csv, turing_verdict};
use turinglab::sweep::{run_sweep, sweep_csv, SweepSpec};
use turinglab::Error;

#[derive(Parser, Debug)]
#[command(
    name = "turinglab",
    version,
    about = "Turing instability and dynamic-transition analysis"
)]
struct Cli {
    /// Seed for stochastic initial data (overrides the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for sweeps and simulator row updates.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Suppress the summary on standard output.
    #[arg(long, global = true)]
    quiet: bool,
    /// Directory for outputs given without an explicit path.
    #[arg(long, global = true, env = "TURINGLAB_OUT", default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Turing verdict, dispersion quantities and growing modes.
    Analyze {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long)]
        du: f64,
        #[arg(long)]
        dv: f64,
        /// Number of Laplacian modes examined.
        #[arg(long, default_value_t = 200)]
        modes: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Critical inhibitor diffusivity and transition class.
    Critical {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long)]
        du: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Center-manifold reduction and transition type.
    Reduce {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long)]
        du: f64,
        /// Evaluate at the critical value (default when --dv is absent).
        #[arg(long, conflicts_with = "dv")]
        at_critical: bool,
        #[arg(long)]
        dv: Option<f64>,
        /// Galerkin modes for the center-manifold correction.
        #[arg(long, default_value_t = 32)]
        modes: usize,
        /// Offset past Dv* used for the branch amplitudes at criticality.
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate the full system and write snapshots.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Phase-diagram table over one or two parameters.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dispersion polynomial h(λ) sampled on [0, lambda_max].
    Hprofile {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        du: f64,
        #[arg(long)]
        dv: f64,
        #[arg(long, default_value_t = 2.0)]
        lambda_max: f64,
        #[arg(long, default_value_t = 201)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Laplacian eigenvalue table.
    Eigen {
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare published Schnakenberg tangency values with recomputed ones.
    Audit {
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
        #[arg(long, default_value_t = 1.0)]
        r: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct ModelArgs {
    /// TOML model file, optionally with a [domain] table.
    #[arg(long)]
    model_file: PathBuf,
}

#[derive(Args, Debug)]
struct DomainArgs {
    /// Interval length (overrides the model file's domain).
    #[arg(long, conflicts_with = "rectangle")]
    interval: Option<f64>,
    /// Rectangle side lengths LX,LY.
    #[arg(long, value_delimiter = ',')]
    rectangle: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value_t = Bc::Neumann)]
    bc: Bc,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Bc {
    Neumann,
    Dirichlet,
}

impl DomainArgs {
    fn resolve(&self, file: Option<DomainSpec>) -> turinglab::Result<DomainSpec> {
        let bc = match self.bc {
            Bc::Neumann => BoundaryCondition::Neumann,
            Bc::Dirichlet => BoundaryCondition::Dirichlet,
        };
        let d = match (&self.interval, &self.rectangle) {
            (Some(s), _) => DomainSpec::interval(*s, bc),
            (None, Some(r)) if r.len() == 2 => DomainSpec::rectangle(r[0], r[1], bc),
            (None, Some(r)) => {
                return Err(Error::InvalidConfig(format!(
                    "--rectangle takes LX,LY (got {} values)",
                    r.len()
                )))
            }
            (None, None) => file.ok_or_else(|| {
                Error::InvalidConfig(
                    "no domain: pass --interval or --rectangle, or add [domain] to the model file"
                        .into(),
                )
            })?,
        };
        d.validate()?;
        Ok(d)
    }
}

struct Context {
    quiet: bool,
    out_dir: PathBuf,
}

impl Context {
    fn path(&self, out: &Option<PathBuf>, default: &str) -> PathBuf {
        out.clone().unwrap_or_else(|| self.out_dir.join(default))
    }

    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }
}

fn write_text(path: &Path, text: &str) -> turinglab::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn load_model(args: &ModelArgs) -> turinglab::Result<(KineticModel, ModelFile)> {
    let file = ModelFile::load(&args.model_file)?;
    Ok((file.model.build()?, file))
}

fn read_structured<T: for<'de> serde::Deserialize<'de>>(path: &Path) -> turinglab::Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e == "toml") {
        toml::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
    } else {
        serde_json::from_str(&text)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
    }
}

#[derive(Serialize)]
struct ReduceOutput {
    reduced: ReducedSystem,
    classification: Classification,
    bifurcated: BifurcatedState,
}

fn execute(cli: Cli) -> turinglab::Result<()> {
    let ctx = Context {
        quiet: cli.quiet,
        out_dir: cli.out_dir,
    };
    match cli.command {
        Command::Analyze {
            model,
            domain,
            du,
            dv,
            modes,
            out,
        } => {
            let (m, file) = load_model(&model)?;
            let d = domain.resolve(file.domain)?;
            let report = turing_verdict(&m, &d, du, dv, modes)?;
            let path = ctx.path(&out, "report.json");
            write_text(&path, &to_json_string(&report)?)?;
            ctx.say(format!(
                "verdict: {:?}\nD = {}\nL = {}\nunstable modes: {}",
                report.verdict,
                fmt_f64(report.d),
                fmt_f64(report.l),
                report.unstable_modes.len()
            ));
        }
        Command::Critical {
            model,
            domain,
            du,
            out,
        } => {
            let (m, file) = load_model(&model)?;
            let d = domain.resolve(file.domain)?;
            let c = critical_dv(&m, &d, du)?;
            let path = ctx.path(&out, "critical.json");
            write_text(&path, &to_json_string(&c)?)?;
            ctx.say(format!(
                "Dv* = {}\nclass: {:?}",
                fmt_f64(c.dv_star),
                c.transition_class
            ));
        }
        Command::Reduce {
            model,
            domain,
            du,
            at_critical: _,
            dv,
            modes,
            delta,
            out,
        } => {
            let (m, file) = load_model(&model)?;
            let d = domain.resolve(file.domain)?;
            let reduced = reduce_at_critical(&m, &d, du, dv, modes)?;
            let dv_star = reduced.dv_star.expect("critical reduction records Dv*");
            let delta = match (dv, delta) {
                (Some(dv), _) => dv - dv_star,
                (None, Some(x)) => x,
                (None, None) => 1e-3 * dv_star,
            };
            let classification = classify_transition(&reduced)?;
            let bifurcated = bifurcated_state(&m, &reduced, delta)?;
            let path = ctx.path(&out, "reduced.json");
            let psi_path = path.with_file_name(format!(
                "{}_psi.csv",
                path.file_stem()
                    .and_then(|s| s.to_str())
                    .unwrap_or("reduced")
            ));
            write_text(&psi_path, &psi_table_csv(&reduced.psi))?;
            let summary = format!(
                "kind: {:?}\ntransition: {:?}",
                reduced.kind, classification.transition_type
            );
            write_text(
                &path,
                &to_json_string(&ReduceOutput {
                    reduced,
                    classification,
                    bifurcated,
                })?,
            )?;
            ctx.say(summary);
        }
        Command::Simulate { config, out } => {
            let mut cfg: SimulationConfig = read_structured(&config)?;
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            if let Some(t) = cli.threads {
                cfg.threads = t;
            }
            let dir = out.unwrap_or(ctx.out_dir.clone());
            let result = Simulation::new(cfg)?.run();
            let manifest = write_outputs(&result, &dir)?;
            ctx.say(format!(
                "steps: {}\ntermination: {:?}\nsaturated: {}\nsnapshots: {}",
                manifest.steps,
                manifest.termination,
                manifest.saturated,
                manifest.snapshots.len()
            ));
            if let Termination::BlowUp { t } = result.termination {
                return Err(Error::BlowUp { t });
            }
        }
        Command::Sweep { spec, out } => {
            let spec: SweepSpec = read_structured(&spec)?;
            let cells = run_sweep(&spec, cli.threads.unwrap_or(1))?;
            let path = ctx.path(&out, "sweep.csv");
            write_text(&path, &sweep_csv(&spec, &cells))?;
            let failed = cells.iter().filter(|c| c.error.is_some()).count();
            ctx.say(format!(
                "cells: {}\ncells with errors: {failed}",
                cells.len()
            ));
        }
        Command::Hprofile {
            model,
            du,
            dv,
            lambda_max,
            samples,
            out,
        } => {
            let (m, _) = load_model(&model)?;
            let profile = h_profile(&m, du, dv, lambda_max, samples)?;
            let path = ctx.path(&out, "hprofile.csv");
            write_text(&path, &h_profile_csv(&profile))?;
            ctx.say(format!("h(0) = {}", fmt_f64(profile[0].1)));
        }
        Command::Eigen { domain, count, out } => {
            let d = domain.resolve(None)?;
            let modes = eigenpairs(&d, count)?;
            let path = ctx.path(&out, "eigen.csv");
            write_text(&path, &eigen_table_csv(&modes))?;
            ctx.say(format!("modes: {}", modes.len()));
        }
        Command::Audit { a, b, r, out } => {
            let audit = audit_tangency(SchnakenbergParams::new(a, b, r)?)?;
            let path = ctx.path(&out, "audit.json");
            write_text(&path, &to_json_string(&audit)?)?;
            ctx.say(format!(
                "hypothesis Tr<0, det>0 holds: {}",
                audit.hypothesis_holds
            ));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
    }
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
