//! Run configuration: TOML file sections, flag overrides and validation.

use std::path::PathBuf;

use nhladder::ModelParams;
use nhladder::ModelTag;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CommandName {
    Spectrum,
    PhaseDiagram,
    Cluster,
    Evolve,
    Moire,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Pgm,
    Both,
}

impl Format {
    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }

    pub fn pgm(self) -> bool {
        matches!(self, Format::Pgm | Format::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Tetramerized,
    Dimerized,
    Crossover,
}

impl From<Model> for ModelTag {
    fn from(m: Model) -> Self {
        match m {
            Model::Tetramerized => ModelTag::Tetramerized,
            Model::Dimerized => ModelTag::Dimerized,
            Model::Crossover => ModelTag::Crossover,
        }
    }
}

/// Systems `evolve` can propagate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum System {
    Tetramerized,
    Dimerized,
    Crossover,
    TetramerCluster,
    DimerCluster,
    Moire,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ClusterKind {
    Tetramer,
    Dimer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub format: Format,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            format: Format::Both,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub model: Model,
    pub w: f64,
    pub v: f64,
    pub kappa: f64,
    pub kappa_prime: f64,
    pub gamma: f64,
    pub n_cells: usize,
}

impl Default for ModelSection {
    fn default() -> Self {
        let p = ModelParams::default();
        Self {
            model: Model::Tetramerized,
            w: p.w,
            v: p.v,
            kappa: p.kappa,
            kappa_prime: p.kappa_prime,
            gamma: p.gamma,
            n_cells: p.n_cells,
        }
    }
}

impl ModelSection {
    pub fn params(&self) -> ModelParams {
        ModelParams {
            w: self.w,
            v: self.v,
            kappa: self.kappa,
            kappa_prime: self.kappa_prime,
            gamma: self.gamma,
            n_cells: self.n_cells,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSection {
    pub k_points: usize,
    /// Also diagonalise the finite periodic ladder of `model.n_cells` cells.
    pub finite: bool,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self {
            k_points: nhladder::spectra::DEFAULT_K_POINTS,
            finite: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseDiagramSection {
    pub v_min: f64,
    pub v_max: f64,
    pub w_min: f64,
    pub w_max: f64,
    pub n_v: usize,
    pub n_w: usize,
    /// Defaults to `model.kappa`, or `model.kappa_prime` for crossover.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coupling: Option<f64>,
    pub k_points: usize,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_max: Option<f64>,
    pub coarse_steps: usize,
}

impl Default for PhaseDiagramSection {
    fn default() -> Self {
        let scan = nhladder::ScanOptions::default();
        Self {
            v_min: 0.0,
            v_max: 2.0,
            w_min: 0.0,
            w_max: 2.0,
            n_v: 101,
            n_w: 101,
            coupling: None,
            k_points: scan.k_points,
            tolerance: scan.tolerance,
            gamma_max: None,
            coarse_steps: scan.coarse_steps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomCluster {
    pub kind: ClusterKind,
    /// Intra-leg hop of the tetramer; ignored for the dimer.
    #[serde(default)]
    pub w: f64,
    pub gamma: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterSection {
    /// Built-in cases 1..=4.
    pub cases: Vec<u8>,
    pub t_max: f64,
    pub dt: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub custom: Option<CustomCluster>,
}

impl Default for ClusterSection {
    fn default() -> Self {
        Self {
            cases: vec![1, 2, 3, 4],
            t_max: 30.0,
            dt: nhladder::dynamics::DEFAULT_DT,
            custom: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveSection {
    pub system: System,
    pub t_max: f64,
    pub dt: f64,
}

impl Default for EvolveSection {
    fn default() -> Self {
        Self {
            system: System::TetramerCluster,
            t_max: 50.0,
            dt: nhladder::dynamics::DEFAULT_DT,
        }
    }
}

/// Geometry of the mismatched ladder. Hoppings and gain/loss come from
/// the model section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MoireSection {
    /// Baseline chain-1 length before `scale`.
    pub n_sites_1: usize,
    /// Divides `n_sites_1`; the result is kept at two registry periods or more.
    pub scale: f64,
    pub mismatch: f64,
    pub kappa0: f64,
    pub alpha: f64,
    pub cutoff: f64,
    pub t_low: f64,
    pub t_high: f64,
    pub t_max: f64,
    pub dt: f64,
}

impl Default for MoireSection {
    fn default() -> Self {
        Self {
            n_sites_1: 1210,
            scale: 1.0,
            mismatch: 1.0 / 301.0,
            kappa0: 1.0,
            alpha: 2.0,
            cutoff: nhladder::lattice::DEFAULT_CUTOFF,
            t_low: nhladder::lattice::DEFAULT_THRESHOLDS.0,
            t_high: nhladder::lattice::DEFAULT_THRESHOLDS.1,
            t_max: 60.0,
            dt: nhladder::dynamics::DEFAULT_DT,
        }
    }
}

impl MoireSection {
    /// Chain-1 length after scaling, even, and at least two registry periods.
    pub fn resolved_n_sites_1(&self) -> usize {
        let scaled = (self.n_sites_1 as f64 / self.scale).round() as usize;
        let floor = if self.mismatch > 0.0 {
            (2.0 * 2.0 * (1.0 - self.mismatch) / self.mismatch).ceil() as usize
        } else {
            2
        };
        let n = scaled.max(floor).max(2);
        n + n % 2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<CommandName>,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub spectrum: SpectrumSection,
    #[serde(default)]
    pub phase_diagram: PhaseDiagramSection,
    #[serde(default)]
    pub cluster: ClusterSection,
    #[serde(default)]
    pub evolve: EvolveSection,
    #[serde(default)]
    pub moire: MoireSection,
}

impl RunConfig {
    pub fn new(command: CommandName) -> Self {
        Self {
            command: Some(command),
            output: Default::default(),
            model: Default::default(),
            spectrum: Default::default(),
            phase_diagram: Default::default(),
            cluster: Default::default(),
            evolve: Default::default(),
            moire: Default::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("config: {}", e.message())))
    }

    #[cfg(test)]
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// Checks everything the given command will read.
    pub fn validate(&self) -> Result<(), CliError> {
        let m = &self.model;
        finite("model.w", m.w)?;
        finite("model.v", m.v)?;
        finite("model.kappa", m.kappa)?;
        finite("model.kappa_prime", m.kappa_prime)?;
        finite("model.gamma", m.gamma)?;
        let cmd = self.command.expect("command resolved before validation");
        match cmd {
            CommandName::Spectrum => {
                let s = &self.spectrum;
                require(s.k_points >= 1, "spectrum.k_points", "must be >= 1")?;
                if s.finite {
                    require(m.n_cells >= 2, "model.n_cells", "must be >= 2 for the finite ladder")?;
                }
            }
            CommandName::PhaseDiagram => {
                let p = &self.phase_diagram;
                for (name, x) in [
                    ("phase_diagram.v_min", p.v_min),
                    ("phase_diagram.v_max", p.v_max),
                    ("phase_diagram.w_min", p.w_min),
                    ("phase_diagram.w_max", p.w_max),
                ] {
                    finite(name, x)?;
                }
                require(p.n_v >= 1, "phase_diagram.n_v", "must be >= 1")?;
                require(p.n_w >= 1, "phase_diagram.n_w", "must be >= 1")?;
                require(
                    p.k_points >= 64 && p.k_points % 2 == 0,
                    "phase_diagram.k_points",
                    "must be even and >= 64",
                )?;
                require(p.tolerance > 0.0 && p.tolerance.is_finite(), "phase_diagram.tolerance", "must be positive")?;
                require(p.coarse_steps >= 1, "phase_diagram.coarse_steps", "must be >= 1")?;
                if let Some(c) = p.coupling {
                    finite("phase_diagram.coupling", c)?;
                }
                if let Some(g) = p.gamma_max {
                    require(g > 0.0 && g.is_finite(), "phase_diagram.gamma_max", "must be positive")?;
                }
            }
            CommandName::Cluster => {
                let c = &self.cluster;
                time_grid("cluster", c.t_max, c.dt)?;
                for case in &c.cases {
                    require((1..=4).contains(case), "cluster.cases", "entries must be 1, 2, 3 or 4")?;
                }
                if let Some(u) = &c.custom {
                    finite("cluster.custom.w", u.w)?;
                    finite("cluster.custom.gamma", u.gamma)?;
                    finite("cluster.custom.kappa", u.kappa)?;
                    if u.kind == ClusterKind::Dimer && u.kappa.abs() <= u.gamma.abs() {
                        return Err(CliError::Config(format!(
                            "cluster.custom: the dimer closed form needs |kappa| > |gamma| (kappa = {}, gamma = {}); \
                             use `evolve --system dimer-cluster` for the broken regime",
                            u.kappa, u.gamma
                        )));
                    }
                }
            }
            CommandName::Evolve => {
                let e = &self.evolve;
                time_grid("evolve", e.t_max, e.dt)?;
                match e.system {
                    System::Tetramerized | System::Dimerized | System::Crossover => {
                        require(m.n_cells >= 2, "model.n_cells", "must be >= 2")?
                    }
                    System::Moire => self.validate_moire()?,
                    _ => {}
                }
            }
            CommandName::Moire => {
                self.validate_moire()?;
                time_grid("moire", self.moire.t_max, self.moire.dt)?;
            }
        }
        Ok(())
    }

    fn validate_moire(&self) -> Result<(), CliError> {
        let g = &self.moire;
        require(g.n_sites_1 >= 2, "moire.n_sites_1", "must be >= 2")?;
        require(g.scale > 0.0 && g.scale.is_finite(), "moire.scale", "must be positive")?;
        require((0.0..1.0).contains(&g.mismatch), "moire.mismatch", "must lie in [0, 1)")?;
        finite("moire.kappa0", g.kappa0)?;
        require(g.alpha >= 0.0 && g.alpha.is_finite(), "moire.alpha", "must be >= 0")?;
        require(g.cutoff >= 0.0 && g.cutoff.is_finite(), "moire.cutoff", "must be >= 0")?;
        require(
            g.t_low > 0.0 && g.t_low < g.t_high && g.t_high < 0.5,
            "moire.t_low/t_high",
            "need 0 < t_low < t_high < 0.5",
        )?;
        if self.command == Some(CommandName::Evolve) && self.evolve.system == System::Moire {
            time_grid("evolve", self.evolve.t_max, self.evolve.dt)?;
        }
        Ok(())
    }
}

fn finite(name: &str, x: f64) -> Result<(), CliError> {
    require(x.is_finite(), name, "must be finite")
}

fn require(ok: bool, name: &str, msg: &str) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name}: {msg}")))
    }
}

fn time_grid(section: &str, t_max: f64, dt: f64) -> Result<(), CliError> {
    require(t_max >= 0.0 && t_max.is_finite(), &format!("{section}.t_max"), "must be finite and >= 0")?;
    require(dt > 0.0 && dt.is_finite(), &format!("{section}.dt"), "must be positive")
}
