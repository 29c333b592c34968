use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

mod commands;
mod config;
mod output;

use config::{ClusterKind, CommandName, CustomCluster, Format, Model, RunConfig, System};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<nhladder::LinalgError> for CliError {
    fn from(e: nhladder::LinalgError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<nhladder::spectra::SpectraError> for CliError {
    fn from(e: nhladder::spectra::SpectraError) -> Self {
        use nhladder::spectra::SpectraError as E;
        match e {
            E::Linalg(_) | E::AnalyticMismatch { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<nhladder::dynamics::DynamicsError> for CliError {
    fn from(e: nhladder::dynamics::DynamicsError) -> Self {
        use nhladder::dynamics::DynamicsError as E;
        match e {
            E::Linalg(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<nhladder::hamiltonian::HamiltonianError> for CliError {
    fn from(e: nhladder::hamiltonian::HamiltonianError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<nhladder::lattice::LatticeError> for CliError {
    fn from(e: nhladder::lattice::LatticeError) -> Self {
        CliError::Config(e.to_string())
    }
}

/// Non-Hermitian ladder and moire superlattice toolkit.
#[derive(Debug, Parser)]
#[command(name = "nhladder", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Args)]
struct ModelFlags {
    #[arg(long, value_enum)]
    model: Option<Model>,
    #[arg(long)]
    w: Option<f64>,
    #[arg(long)]
    v: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    kappa_prime: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Cells per leg of the periodic ladders.
    #[arg(long)]
    n_cells: Option<usize>,
}

#[derive(Debug, Args)]
struct TimeFlags {
    #[arg(long)]
    t_max: Option<f64>,
    /// Sampling step of the trajectory.
    #[arg(long)]
    dt: Option<f64>,
}

#[derive(Debug, Args)]
struct MoireFlags {
    /// Baseline chain-1 length (2 N1) before scaling.
    #[arg(long)]
    n_sites_1: Option<usize>,
    /// Divide the baseline length (at least two registry periods are kept).
    #[arg(long)]
    scale: Option<f64>,
    #[arg(long)]
    mismatch: Option<f64>,
    #[arg(long)]
    kappa0: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    cutoff: Option<f64>,
    #[arg(long)]
    t_low: Option<f64>,
    #[arg(long)]
    t_high: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Band structure of a regular ladder, optionally with finite-size eigenvalues.
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelFlags,
        #[arg(long)]
        k_points: Option<usize>,
        /// Also diagonalise the periodic ladder of --n-cells cells.
        #[arg(long)]
        finite: bool,
    },
    /// Critical gain/loss strength over a (v, w) grid.
    PhaseDiagram {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelFlags,
        #[arg(long)]
        v_min: Option<f64>,
        #[arg(long)]
        v_max: Option<f64>,
        #[arg(long)]
        w_min: Option<f64>,
        #[arg(long)]
        w_max: Option<f64>,
        #[arg(long)]
        n_v: Option<usize>,
        #[arg(long)]
        n_w: Option<usize>,
        /// Rung (or crossover) coupling; defaults to the model's.
        #[arg(long)]
        coupling: Option<f64>,
        #[arg(long)]
        k_points: Option<usize>,
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Closed-form versus propagated cluster dynamics.
    Cluster {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        time: TimeFlags,
        /// Built-in case (1-4); repeat to select several. Default: all.
        #[arg(long = "case")]
        cases: Vec<u8>,
        /// Add a custom cluster of this kind, using --w/--gamma/--kappa.
        #[arg(long, value_enum)]
        kind: Option<ClusterKind>,
        #[arg(long)]
        w: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        kappa: Option<f64>,
    },
    /// Propagate the uniform state under any built Hamiltonian.
    Evolve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelFlags,
        #[command(flatten)]
        time: TimeFlags,
        #[command(flatten)]
        moire: MoireFlags,
        #[arg(long, value_enum)]
        system: Option<System>,
    },
    /// Couplings, region labels and dynamics of the mismatched ladder.
    Moire {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelFlags,
        #[command(flatten)]
        time: TimeFlags,
        #[command(flatten)]
        moire: MoireFlags,
    },
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

impl ModelFlags {
    fn apply(self, c: &mut RunConfig) {
        let m = &mut c.model;
        set(&mut m.model, self.model);
        set(&mut m.w, self.w);
        set(&mut m.v, self.v);
        set(&mut m.kappa, self.kappa);
        set(&mut m.kappa_prime, self.kappa_prime);
        set(&mut m.gamma, self.gamma);
        set(&mut m.n_cells, self.n_cells);
    }
}

impl MoireFlags {
    fn apply(self, c: &mut RunConfig) {
        let g = &mut c.moire;
        set(&mut g.n_sites_1, self.n_sites_1);
        set(&mut g.scale, self.scale);
        set(&mut g.mismatch, self.mismatch);
        set(&mut g.kappa0, self.kappa0);
        set(&mut g.alpha, self.alpha);
        set(&mut g.cutoff, self.cutoff);
        set(&mut g.t_low, self.t_low);
        set(&mut g.t_high, self.t_high);
    }
}

fn load(common: &Common, name: CommandName) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
            RunConfig::from_toml(&text)?
        }
        None => RunConfig::new(name),
    };
    match cfg.command {
        Some(c) if c != name => {
            return Err(CliError::Config(format!(
                "command: config file is for {c:?}, but {name:?} was invoked"
            )))
        }
        _ => cfg.command = Some(name),
    }
    set(&mut cfg.output.dir, common.out.clone());
    set(&mut cfg.output.format, common.format);
    Ok(cfg)
}

fn resolve(cmd: Cmd) -> Result<RunConfig, CliError> {
    Ok(match cmd {
        Cmd::Spectrum {
            common,
            model,
            k_points,
            finite,
        } => {
            let mut c = load(&common, CommandName::Spectrum)?;
            model.apply(&mut c);
            set(&mut c.spectrum.k_points, k_points);
            c.spectrum.finite |= finite;
            c
        }
        Cmd::PhaseDiagram {
            common,
            model,
            v_min,
            v_max,
            w_min,
            w_max,
            n_v,
            n_w,
            coupling,
            k_points,
            tolerance,
        } => {
            let mut c = load(&common, CommandName::PhaseDiagram)?;
            model.apply(&mut c);
            let p = &mut c.phase_diagram;
            set(&mut p.v_min, v_min);
            set(&mut p.v_max, v_max);
            set(&mut p.w_min, w_min);
            set(&mut p.w_max, w_max);
            set(&mut p.n_v, n_v);
            set(&mut p.n_w, n_w);
            if coupling.is_some() {
                p.coupling = coupling;
            }
            set(&mut p.k_points, k_points);
            set(&mut p.tolerance, tolerance);
            c
        }
        Cmd::Cluster {
            common,
            time,
            cases,
            kind,
            w,
            gamma,
            kappa,
        } => {
            let mut c = load(&common, CommandName::Cluster)?;
            set(&mut c.cluster.t_max, time.t_max);
            set(&mut c.cluster.dt, time.dt);
            if !cases.is_empty() {
                c.cluster.cases = cases;
            }
            if let Some(kind) = kind {
                let gamma = gamma.ok_or_else(|| CliError::Config("--gamma: required with --kind".into()))?;
                c.cluster.custom = Some(CustomCluster {
                    kind,
                    w: w.unwrap_or(0.0),
                    gamma,
                    kappa: kappa.unwrap_or(1.0),
                });
            } else if w.is_some() || gamma.is_some() || kappa.is_some() {
                return Err(CliError::Config("--kind: required when giving --w/--gamma/--kappa".into()));
            }
            c
        }
        Cmd::Evolve {
            common,
            model,
            time,
            moire,
            system,
        } => {
            let mut c = load(&common, CommandName::Evolve)?;
            model.apply(&mut c);
            moire.apply(&mut c);
            set(&mut c.evolve.t_max, time.t_max);
            set(&mut c.evolve.dt, time.dt);
            set(&mut c.evolve.system, system);
            c
        }
        Cmd::Moire {
            common,
            model,
            time,
            moire,
        } => {
            let mut c = load(&common, CommandName::Moire)?;
            model.apply(&mut c);
            moire.apply(&mut c);
            set(&mut c.moire.t_max, time.t_max);
            set(&mut c.moire.dt, time.dt);
            c
        }
    })
}

fn run(cmd: Cmd) -> Result<(), CliError> {
    let cfg = resolve(cmd)?;
    cfg.validate()?;
    let start = Instant::now();
    let mut out = output::Emitter::new(&cfg.output.dir)?;
    match cfg.command.expect("resolved") {
        CommandName::Spectrum => commands::spectrum(&cfg, &mut out)?,
        CommandName::PhaseDiagram => commands::phase(&cfg, &mut out)?,
        CommandName::Cluster => commands::cluster(&cfg, &mut out)?,
        CommandName::Evolve => commands::evolve_cmd(&cfg, &mut out)?,
        CommandName::Moire => commands::moire(&cfg, &mut out)?,
    }
    let manifest = out.finish(&cfg, start.elapsed())?;
    for f in &manifest.files {
        println!("{}", cfg.output.dir.join(&f.name).display());
    }
    for (k, v) in &manifest.notes {
        println!("  {k} = {v}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nhladder: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
