//! Closed-form cluster dynamics, propagation of arbitrary Hamiltonians and
//! Dirac-probability observables.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hamiltonian::SiteMap;
use crate::lattice::{MoireSpec, Region, RegionLabels};
use crate::linalg::{expm, ComplexMatrix, ComplexVector, LinalgError, C64, I};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("dimer closed form needs kappa > gamma (got kappa = {kappa}, gamma = {gamma}); use generic evolution")]
    DimerBroken { kappa: f64, gamma: f64 },
    #[error("sample step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("t_max must be non-negative and finite, got {0}")]
    BadDuration(f64),
    #[error("column map has {got} entries for a {dim}-dimensional state")]
    ColumnMismatch { dim: usize, got: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Relative window around `|w| = |gamma|` treated as the exceptional point.
pub const EP_TOL: f64 = 1e-9;
pub const DEFAULT_DT: f64 = 0.05;
/// Squared norm beyond which a trajectory is truncated.
pub const OVERFLOW_NORM_SQR: f64 = 1e300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegimeTag {
    Unbroken,
    #[serde(rename = "EP")]
    Ep,
    Broken,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterRegime {
    pub tag: RegimeTag,
    /// `sqrt(w^2 - gamma^2)`, principal branch.
    pub w_bar: C64,
    /// Recurrence period of the probability, unbroken regime only.
    pub period: Option<f64>,
    /// Exponent of the asymptotic growth `P ~ e^{rate t}`, broken regime only.
    pub growth_rate: Option<f64>,
}

impl ClusterRegime {
    /// Regime of a coupling `x` (hopping `w` for the tetramer, `kappa` for
    /// the dimer) against gain/loss `gamma`.
    pub fn classify(x: f64, gamma: f64) -> Self {
        let (x, g) = (x.abs(), gamma.abs());
        let scale = x.max(g);
        let w_bar = C64::new(x * x - g * g, 0.0).sqrt();
        if (x - g).abs() <= EP_TOL * scale {
            return Self {
                tag: RegimeTag::Ep,
                w_bar,
                period: None,
                growth_rate: None,
            };
        }
        if x > g {
            Self {
                tag: RegimeTag::Unbroken,
                w_bar,
                period: Some(std::f64::consts::PI / w_bar.re),
                growth_rate: None,
            }
        } else {
            Self {
                tag: RegimeTag::Broken,
                w_bar,
                period: None,
                growth_rate: Some(2.0 * w_bar.im),
            }
        }
    }
}

/// `t sin(x t) / (x t)` with the removable singularity filled in.
fn sinc_t(x: f64, t: f64) -> f64 {
    let z = x * t;
    if z.abs() < 1e-4 {
        t * (1.0 - z * z / 6.0)
    } else {
        z.sin() / x
    }
}

fn sinhc_t(x: f64, t: f64) -> f64 {
    let z = x * t;
    if z.abs() < 1e-4 {
        t * (1.0 + z * z / 6.0)
    } else {
        z.sinh() / x
    }
}

/// Dirac probability of the uniform state evolved under the tetramer cluster.
///
/// Evaluated as `1 + 2 gamma^2 sin^2(w_bar t) / w_bar^2` (and its hyperbolic
/// continuation), which is algebraically the textbook cosine form and stays
/// well conditioned as `w_bar -> 0`. `kappa` only contributes a global phase.
pub fn tetramer_probability(w: f64, gamma: f64, _kappa: f64, t: f64) -> f64 {
    let r = ClusterRegime::classify(w, gamma);
    let g2 = gamma * gamma;
    match r.tag {
        RegimeTag::Ep => 1.0 + 2.0 * g2 * t * t,
        RegimeTag::Unbroken => {
            let s = sinc_t(r.w_bar.re, t);
            1.0 + 2.0 * g2 * s * s
        }
        RegimeTag::Broken => {
            let s = sinhc_t(r.w_bar.im, t);
            1.0 + 2.0 * g2 * s * s
        }
    }
}

/// Dimer probability for `(|1,1> + |1,2>)/sqrt(2)`, real regime only.
pub fn dimer_probability(kappa: f64, gamma: f64, t: f64) -> Result<f64, DynamicsError> {
    if !(kappa.abs() > gamma.abs()) {
        return Err(DynamicsError::DimerBroken { kappa, gamma });
    }
    let eps = (kappa * kappa - gamma * gamma).sqrt();
    let s = sinc_t(eps, t);
    Ok(1.0 + 2.0 * gamma * gamma * s * s)
}

pub fn dimer_period(kappa: f64, gamma: f64) -> Result<f64, DynamicsError> {
    if !(kappa.abs() > gamma.abs()) {
        return Err(DynamicsError::DimerBroken { kappa, gamma });
    }
    Ok(std::f64::consts::PI / (kappa * kappa - gamma * gamma).sqrt())
}

/// Exact evolution of `(a, b)` under the 2x2 reduced tetramer block at the
/// exceptional point `w = gamma`.
pub fn ep_propagate_2x2(kappa: f64, gamma: f64, a: C64, b: C64, t: f64) -> ComplexVector {
    let phase = (-I * kappa * t).exp();
    let tg = t * gamma;
    let ia = I * tg;
    ComplexVector(vec![
        phase * (a * (1.0 - tg) - ia * b),
        phase * (b * (1.0 + tg) - ia * a),
    ])
}

/// Assignment of basis states to spatial columns `j` for `P(j, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteColumns {
    column: Vec<usize>,
    n_columns: usize,
}

impl SiteColumns {
    pub fn new(column: Vec<usize>) -> Self {
        let n_columns = column.iter().map(|&c| c + 1).max().unwrap_or(0);
        Self { column, n_columns }
    }

    /// Column `l - 1` for every site of a ladder.
    pub fn from_site_map(map: &SiteMap) -> Self {
        Self::new(map.sites().iter().map(|s| s.l - 1).collect())
    }

    /// Chain-1 site `i` is column `i - 1`; chain-2 sites go to the column of
    /// the physically nearest chain-1 site.
    pub fn moire(spec: &MoireSpec) -> Self {
        let n1 = spec.n_sites_1;
        let mut c: Vec<usize> = (0..n1).collect();
        c.extend((1..=spec.n_sites_2).map(|j| spec.y(j).round().clamp(1.0, n1 as f64) as usize - 1));
        Self::new(c)
    }

    pub fn len(&self) -> usize {
        self.column.len()
    }

    pub fn is_empty(&self) -> bool {
        self.column.is_empty()
    }

    pub fn n_columns(&self) -> usize {
        self.n_columns
    }

    pub fn column(&self, flat: usize) -> usize {
        self.column[flat]
    }

    fn accumulate(&self, psi: &[C64]) -> Vec<f64> {
        let mut p = vec![0.0; self.n_columns];
        for (z, &c) in psi.iter().zip(&self.column) {
            p[c] += z.norm_sqr();
        }
        p
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<ComplexVector>,
    /// `P(j, t)` per sample, indexed by column.
    pub site_probability: Vec<Vec<f64>>,
    pub total_probability: Vec<f64>,
    /// Set when the run stopped early because `||psi||^2` left the safe range.
    pub truncated: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `P(j, t)` divided by its per-sample maximum.
    pub fn slice_normalized(&self) -> Vec<Vec<f64>> {
        self.site_probability
            .iter()
            .map(|row| {
                let m = row.iter().cloned().fold(0.0, f64::max);
                if m > 0.0 {
                    row.iter().map(|x| x / m).collect()
                } else {
                    row.clone()
                }
            })
            .collect()
    }
}

/// `psi(t) = exp(-i H t) psi0` sampled every `dt` up to `t_max`, with a single
/// propagator computed up front.
pub fn evolve(
    h: &ComplexMatrix,
    psi0: &ComplexVector,
    columns: &SiteColumns,
    t_max: f64,
    dt: f64,
) -> Result<Trajectory, DynamicsError> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(DynamicsError::BadStep(dt));
    }
    if !(t_max.is_finite() && t_max >= 0.0) {
        return Err(DynamicsError::BadDuration(t_max));
    }
    if h.dim() != psi0.len() {
        return Err(LinalgError::DimensionMismatch {
            left: h.dim(),
            right: psi0.len(),
        }
        .into());
    }
    if columns.len() != psi0.len() {
        return Err(DynamicsError::ColumnMismatch {
            dim: psi0.len(),
            got: columns.len(),
        });
    }
    if !psi0.is_finite() {
        return Err(LinalgError::NonFinite { what: "initial state" }.into());
    }
    let u = expm(&h.scale(-I * dt))?;
    let n_steps = (t_max / dt * (1.0 + 1e-12)).floor() as usize;

    let mut traj = Trajectory {
        times: Vec::with_capacity(n_steps + 1),
        states: Vec::with_capacity(n_steps + 1),
        site_probability: Vec::with_capacity(n_steps + 1),
        total_probability: Vec::with_capacity(n_steps + 1),
        truncated: false,
    };
    let mut psi = psi0.0.clone();
    let mut next = vec![C64::new(0.0, 0.0); psi.len()];
    for step in 0..=n_steps {
        if step > 0 {
            u.mul_vec_into(&psi, &mut next);
            std::mem::swap(&mut psi, &mut next);
        }
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>();
        if !(norm.is_finite() && norm <= OVERFLOW_NORM_SQR) {
            traj.truncated = true;
            break;
        }
        traj.times.push(step as f64 * dt);
        traj.site_probability.push(columns.accumulate(&psi));
        traj.total_probability.push(norm);
        traj.states.push(ComplexVector(psi.clone()));
    }
    Ok(traj)
}

/// Equal amplitude `1/sqrt(n)` on every basis state.
pub fn uniform_initial_state(dim: usize) -> ComplexVector {
    let a = 1.0 / (dim as f64).sqrt();
    ComplexVector(vec![C64::new(a, 0.0); dim])
}

/// Region of every column of a moiré ladder (columns follow chain 1).
pub fn column_regions(labels: &RegionLabels) -> Vec<Region> {
    labels.labels.clone()
}

/// Probability summed over the columns of each region, per sample, in the
/// order of [`Region::ALL`].
pub fn region_probability(traj: &Trajectory, regions: &[Region]) -> Vec<[f64; 3]> {
    traj.site_probability
        .iter()
        .map(|row| {
            let mut acc = [0.0; 3];
            for (p, r) in row.iter().zip(regions) {
                acc[region_slot(*r)] += p;
            }
            acc
        })
        .collect()
}

pub fn region_slot(r: Region) -> usize {
    Region::ALL.iter().position(|&x| x == r).unwrap()
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
