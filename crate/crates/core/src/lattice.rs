//! Geometry of two mismatched SSH chains.
//!
//! Chain 1 sites sit at `x_i = i`, chain 2 sites at `y_j = (1 - mismatch) j`
//! (both 1-based). Inter-chain hops are Gaussian in the coordinate offset,
//! `kappa_ij = kappa0 * exp(-alpha^2 (x_i - y_j)^2)`, truncated below
//! `cutoff * kappa0`.
//!
//! Region classification uses the local registry of the two chains. At a
//! chain-1 site `i` the second chain is displaced by
//! `s_i = i / (1 - mismatch) - i` chain-2 sites. Because both the hoppings
//! and the staggered potential alternate with period two, only `s_i mod 2`
//! matters: an even shift lines up equal-potential sites (tetramerized
//! ladder), an odd shift lines up opposite-potential sites with swapped
//! bond pattern (dimerized ladder), and a half-integer shift gives every
//! site two comparable partners (crossover ladder). The offset reported per
//! site is the distance of `s_i / 2` to the nearest integer, i.e. the
//! registry offset in unit cells, in `[0, 0.5]`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("chain lengths must be even and positive, got ({0}, {1})")]
    BadChainLength(usize, usize),
    #[error("mismatch must lie in [0, 1), got {0}")]
    BadMismatch(f64),
    #[error("alpha must be finite and >= 0, got {0}")]
    BadAlpha(f64),
    #[error("kappa0 must be finite, got {0}")]
    BadKappa(f64),
    #[error("coupling cutoff must be finite and >= 0, got {0}")]
    BadCutoff(f64),
    #[error("chains do not span the same length: n2 = {n2} but n1/(1-mismatch) = {expected:.3}")]
    SpanMismatch { n2: usize, expected: f64 },
    #[error("thresholds must satisfy 0 < low < high < 0.5, got ({0}, {1})")]
    BadThresholds(f64, f64),
}

/// Default truncation of the Gaussian couplings, as a fraction of `kappa0`.
pub const DEFAULT_CUTOFF: f64 = 1e-8;
/// Default `(t_low, t_high)` thresholds on the registry offset.
pub const DEFAULT_THRESHOLDS: (f64, f64) = (0.15, 0.35);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoireSpec {
    /// Sites on chain 1 (2 N1).
    pub n_sites_1: usize,
    /// Sites on chain 2 (2 N2).
    pub n_sites_2: usize,
    pub mismatch: f64,
    pub kappa0: f64,
    pub alpha: f64,
    pub coupling_cutoff: f64,
}

impl MoireSpec {
    /// Chain 2 gets `round(n1 / (1 - mismatch))` sites, rounded to even, so
    /// both chains span the same physical length.
    pub fn equal_span(n_sites_1: usize, mismatch: f64, kappa0: f64, alpha: f64) -> Result<Self, LatticeError> {
        if !(0.0..1.0).contains(&mismatch) {
            return Err(LatticeError::BadMismatch(mismatch));
        }
        let target = n_sites_1 as f64 / (1.0 - mismatch);
        let n_sites_2 = 2 * (target / 2.0).round() as usize;
        let spec = Self {
            n_sites_1,
            n_sites_2,
            mismatch,
            kappa0,
            alpha,
            coupling_cutoff: DEFAULT_CUTOFF,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), LatticeError> {
        let (n1, n2) = (self.n_sites_1, self.n_sites_2);
        if n1 == 0 || n2 == 0 || n1 % 2 == 1 || n2 % 2 == 1 {
            return Err(LatticeError::BadChainLength(n1, n2));
        }
        if !(self.mismatch.is_finite() && (0.0..1.0).contains(&self.mismatch)) {
            return Err(LatticeError::BadMismatch(self.mismatch));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(LatticeError::BadAlpha(self.alpha));
        }
        if !self.kappa0.is_finite() {
            return Err(LatticeError::BadKappa(self.kappa0));
        }
        if !(self.coupling_cutoff.is_finite() && self.coupling_cutoff >= 0.0) {
            return Err(LatticeError::BadCutoff(self.coupling_cutoff));
        }
        let expected = n1 as f64 / (1.0 - self.mismatch);
        if (n2 as f64 - expected).abs() > 1.0 + 1e-9 {
            return Err(LatticeError::SpanMismatch { n2, expected });
        }
        Ok(())
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64
    }

    pub fn y(&self, j: usize) -> f64 {
        (1.0 - self.mismatch) * j as f64
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        let d = self.x(i) - self.y(j);
        self.kappa0 * (-self.alpha * self.alpha * d * d).exp()
    }

    fn keeps(&self, kappa: f64) -> bool {
        kappa.abs() >= self.coupling_cutoff * self.kappa0.abs() && kappa != 0.0
    }

    /// Chain-1 sites per full registry period, `2 (1 - mismatch) / mismatch`.
    pub fn registry_period(&self) -> f64 {
        2.0 * (1.0 - self.mismatch) / self.mismatch
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    /// 1-based site on chain 1.
    pub i: usize,
    /// 1-based site on chain 2.
    pub j: usize,
    pub kappa: f64,
}

/// Inter-chain couplings sorted by `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingTable {
    entries: Vec<Coupling>,
}

impl CouplingTable {
    pub fn entries(&self) -> &[Coupling] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Partners of chain-1 site `i`.
    pub fn partners(&self, i: usize) -> &[Coupling] {
        let start = self.entries.partition_point(|c| c.i < i);
        let end = self.entries.partition_point(|c| c.i <= i);
        &self.entries[start..end]
    }

    /// Strongest partner of chain-1 site `i` (ties go to the smaller `j`).
    pub fn dominant(&self, i: usize) -> Option<Coupling> {
        self.partners(i)
            .iter()
            .copied()
            .fold(None, |best: Option<Coupling>, c| match best {
                Some(b) if b.kappa.abs() >= c.kappa.abs() => Some(b),
                _ => Some(c),
            })
    }
}

pub fn build_couplings(spec: &MoireSpec) -> Result<CouplingTable, LatticeError> {
    spec.validate()?;
    let (n1, n2) = (spec.n_sites_1, spec.n_sites_2);
    let pitch = 1.0 - spec.mismatch;
    let radius = if spec.alpha > 0.0 && spec.coupling_cutoff > 0.0 && spec.coupling_cutoff < 1.0 {
        Some((-spec.coupling_cutoff.ln()).sqrt() / spec.alpha)
    } else if spec.alpha > 0.0 && spec.coupling_cutoff >= 1.0 {
        Some(0.0)
    } else {
        None
    };
    let mut entries = Vec::new();
    for i in 1..=n1 {
        let (lo, hi) = match radius {
            // One extra site on each side; the exact test below decides.
            Some(r) => {
                let lo = ((i as f64 - r) / pitch).floor() as i64 - 1;
                let hi = ((i as f64 + r) / pitch).ceil() as i64 + 1;
                (lo.max(1) as usize, (hi.max(0) as usize).min(n2))
            }
            None => (1, n2),
        };
        for j in lo..=hi {
            let kappa = spec.coupling(i, j);
            if spec.keeps(kappa) {
                entries.push(Coupling { i, j, kappa });
            }
        }
    }
    Ok(CouplingTable { entries })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    Tetramerized,
    Crossover,
    Dimerized,
}

impl Region {
    pub fn as_str(self) -> &'static str {
        match self {
            Region::Tetramerized => "tetramerized",
            Region::Crossover => "crossover",
            Region::Dimerized => "dimerized",
        }
    }

    pub const ALL: [Region; 3] = [Region::Tetramerized, Region::Crossover, Region::Dimerized];
}

/// Per chain-1 site region labels.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionLabels {
    pub labels: Vec<Region>,
    /// Registry offset in unit cells, in `[0, 0.5]`.
    pub offsets: Vec<f64>,
    /// Strongest inter-chain partner of each site, if any survived the cutoff.
    pub dominant: Vec<Option<Coupling>>,
}

impl RegionLabels {
    /// Label of chain-1 site `i` (1-based).
    pub fn label(&self, i: usize) -> Region {
        self.labels[i - 1]
    }

    /// Region of chain-2 site `j`, taken from the physically nearest chain-1 site.
    pub fn label_for_chain2(&self, spec: &MoireSpec, j: usize) -> Region {
        let n1 = self.labels.len();
        let i = spec.y(j).round().clamp(1.0, n1 as f64) as usize;
        self.label(i)
    }

    /// Smallest period `p` with `labels[i] == labels[i + p]` on the middle
    /// fraction `window` of the chain.
    pub fn fundamental_period(&self, window: f64) -> Option<usize> {
        let n = self.labels.len();
        let margin = ((1.0 - window) / 2.0 * n as f64).floor() as usize;
        let (start, end) = (margin, n - margin);
        (1..(end - start)).find(|&p| (start..end - p).all(|i| self.labels[i] == self.labels[i + p]))
    }
}

/// Offsets are snapped to this grid before comparison with the thresholds
/// so that sites related by an exact registry period get identical labels.
const OFFSET_SNAP: f64 = 1e-12;

pub fn registry_offset(spec: &MoireSpec, i: usize) -> f64 {
    let shift = i as f64 / (1.0 - spec.mismatch) - i as f64;
    let half = shift / 2.0;
    let d = (half - half.round()).abs();
    (d / OFFSET_SNAP).round() * OFFSET_SNAP
}

pub fn classify_offset(offset: f64, thresholds: (f64, f64)) -> Region {
    if offset <= thresholds.0 {
        Region::Tetramerized
    } else if offset >= thresholds.1 {
        Region::Dimerized
    } else {
        Region::Crossover
    }
}

pub fn classify_regions(
    spec: &MoireSpec,
    table: &CouplingTable,
    thresholds: (f64, f64),
) -> Result<RegionLabels, LatticeError> {
    let (lo, hi) = thresholds;
    if !(lo > 0.0 && lo < hi && hi < 0.5) {
        return Err(LatticeError::BadThresholds(lo, hi));
    }
    spec.validate()?;
    let n1 = spec.n_sites_1;
    let offsets: Vec<f64> = (1..=n1).map(|i| registry_offset(spec, i)).collect();
    let labels = offsets.iter().map(|&d| classify_offset(d, thresholds)).collect();
    let dominant = (1..=n1).map(|i| table.dominant(i)).collect();
    Ok(RegionLabels {
        labels,
        offsets,
        dominant,
    })
}
