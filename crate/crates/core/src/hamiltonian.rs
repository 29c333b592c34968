//! Hamiltonian builders for the regular ladders, the two small clusters and
//! the mismatched moire ladder, plus the parity / leg-exchange operators.
//!
//! Basis convention (used everywhere, including all CSV exports): site
//! `|l, leg>` with `l` 1-based along the leg and `leg` in {1, 2} maps to the
//! flat 0-based index `(leg - 1) * L1 + (l - 1)` where `L1` is the length of
//! leg 1. The two clusters are the exception and use the rung-major order
//! `{|1,1>, |1,2>, |2,1>, |2,2>}` (see [`SiteMap::rung_major`]).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{CouplingTable, LatticeError, MoireSpec};
use crate::linalg::{ComplexMatrix, C64, I};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HamiltonianError {
    #[error("periodic ladders need at least 2 cells, got {0}")]
    TooFewCells(usize),
    #[error("parameter {name} is not finite")]
    NonFinite { name: &'static str },
    #[error("chain lengths must be even, got ({0}, {1})")]
    OddChain(usize, usize),
    #[error("matrix of dimension {dim} is not leg-exchange symmetric (residual {residual:e})")]
    NotLegSymmetric { dim: usize, residual: f64 },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Coupling/gain parameters of a regular ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Strong intra-leg hop on bonds `(2l-1, 2l)`.
    pub w: f64,
    /// Weak intra-leg hop on bonds `(2l, 2l+1)`.
    pub v: f64,
    /// Rung hop.
    pub kappa: f64,
    /// Crossover (diagonal) hop.
    pub kappa_prime: f64,
    /// Gain/loss strength of the staggered imaginary potential.
    pub gamma: f64,
    /// Cells per leg (each cell holds two sites).
    pub n_cells: usize,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            w: 0.5,
            v: 0.1,
            kappa: 1.0,
            kappa_prime: 0.37,
            gamma: 0.395,
            n_cells: 20,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<(), HamiltonianError> {
        for (name, x) in [
            ("w", self.w),
            ("v", self.v),
            ("kappa", self.kappa),
            ("kappa_prime", self.kappa_prime),
            ("gamma", self.gamma),
        ] {
            if !x.is_finite() {
                return Err(HamiltonianError::NonFinite { name });
            }
        }
        Ok(())
    }

    fn validate_periodic(&self) -> Result<(), HamiltonianError> {
        self.validate()?;
        if self.n_cells < 2 {
            return Err(HamiltonianError::TooFewCells(self.n_cells));
        }
        Ok(())
    }
}

/// A lattice site `|l, leg>` with 1-based `l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SiteIndex {
    pub l: usize,
    pub leg: u8,
}

/// Bijection between flat vector indices and lattice sites.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteMap {
    sites: Vec<SiteIndex>,
    leg_lengths: [usize; 2],
    leg_major: bool,
}

impl SiteMap {
    /// The standard ordering: all of leg 1, then all of leg 2.
    pub fn leg_major(len1: usize, len2: usize) -> Self {
        let sites = (1..=len1)
            .map(|l| SiteIndex { l, leg: 1 })
            .chain((1..=len2).map(|l| SiteIndex { l, leg: 2 }))
            .collect();
        Self {
            sites,
            leg_lengths: [len1, len2],
            leg_major: true,
        }
    }

    /// Rung-major ordering `|1,1>, |1,2>, |2,1>, |2,2>, ...` used by the
    /// clusters.
    pub fn rung_major(n_rungs: usize) -> Self {
        let sites = (1..=n_rungs)
            .flat_map(|l| [SiteIndex { l, leg: 1 }, SiteIndex { l, leg: 2 }])
            .collect();
        Self {
            sites,
            leg_lengths: [n_rungs, n_rungs],
            leg_major: false,
        }
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn leg_lengths(&self) -> [usize; 2] {
        self.leg_lengths
    }

    pub fn site(&self, flat: usize) -> SiteIndex {
        self.sites[flat]
    }

    pub fn sites(&self) -> &[SiteIndex] {
        &self.sites
    }

    pub fn flat(&self, site: SiteIndex) -> Option<usize> {
        let [len1, len2] = self.leg_lengths;
        let len = if site.leg == 1 { len1 } else { len2 };
        if site.l == 0 || site.l > len || !(site.leg == 1 || site.leg == 2) {
            return None;
        }
        Some(if self.leg_major {
            (site.leg as usize - 1) * len1 + site.l - 1
        } else {
            2 * (site.l - 1) + site.leg as usize - 1
        })
    }

    /// Largest `l` on either leg.
    pub fn max_l(&self) -> usize {
        self.leg_lengths[0].max(self.leg_lengths[1])
    }
}

#[inline]
fn stagger(l: usize) -> f64 {
    if l % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

#[inline]
fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Adds an SSH leg of length `len` starting at flat offset `base`. `first`
/// is the hop on bonds `(2l-1, 2l)`, `second` on `(2l, 2l+1)`.
fn add_ssh_leg(h: &mut ComplexMatrix, base: usize, len: usize, first: f64, second: f64, periodic: bool) {
    let bonds = if periodic { len } else { len - 1 };
    for b in 0..bonds {
        // Bond between site l = b+1 and l+1 (wrapping).
        let l = b + 1;
        let t = if l % 2 == 1 { first } else { second };
        let i = base + b;
        let j = base + (b + 1) % len;
        if t != 0.0 {
            h.add_hopping(i, j, real(t));
        }
    }
}

/// Tetramerized ladder: identical SSH legs, rungs `kappa`, on-site
/// `i gamma (-1)^l` on both legs, periodic along the legs.
pub fn build_ht(p: &ModelParams) -> Result<ComplexMatrix, HamiltonianError> {
    p.validate_periodic()?;
    let len = 2 * p.n_cells;
    let mut h = ComplexMatrix::zeros(2 * len);
    for leg in 0..2 {
        add_ssh_leg(&mut h, leg * len, len, p.w, p.v, true);
    }
    for l in 1..=len {
        let (a, b) = (l - 1, len + l - 1);
        if p.kappa != 0.0 {
            h.add_hopping(a, b, real(p.kappa));
        }
        h[(a, a)] = I * (p.gamma * stagger(l));
        h[(b, b)] = I * (p.gamma * stagger(l));
    }
    Ok(h)
}

/// Dimerized ladder: leg 1 carries `v` on `(2l-1, 2l)` and `w` on
/// `(2l, 2l+1)`, leg 2 the reverse; rungs `kappa`; on-site
/// `i gamma (-1)^(l + leg)`; periodic.
pub fn build_hd(p: &ModelParams) -> Result<ComplexMatrix, HamiltonianError> {
    p.validate_periodic()?;
    let len = 2 * p.n_cells;
    let mut h = ComplexMatrix::zeros(2 * len);
    add_ssh_leg(&mut h, 0, len, p.v, p.w, true);
    add_ssh_leg(&mut h, len, len, p.w, p.v, true);
    for l in 1..=len {
        let (a, b) = (l - 1, len + l - 1);
        if p.kappa != 0.0 {
            h.add_hopping(a, b, real(p.kappa));
        }
        h[(a, a)] = I * (p.gamma * stagger(l + 1));
        h[(b, b)] = I * (p.gamma * stagger(l + 2));
    }
    Ok(h)
}

/// Crossover ladder: SSH legs as in [`build_ht`], inter-leg `kappa_prime`
/// on `(l,1)-(l,2)` and `(l,1)-(l+1,2)`, on-site `i gamma (-1)^l`; periodic.
pub fn build_hc(p: &ModelParams) -> Result<ComplexMatrix, HamiltonianError> {
    p.validate_periodic()?;
    let len = 2 * p.n_cells;
    let mut h = ComplexMatrix::zeros(2 * len);
    for leg in 0..2 {
        add_ssh_leg(&mut h, leg * len, len, p.w, p.v, true);
    }
    for l in 1..=len {
        let a = l - 1;
        if p.kappa_prime != 0.0 {
            h.add_hopping(a, len + l - 1, real(p.kappa_prime));
            h.add_hopping(a, len + l % len, real(p.kappa_prime));
        }
        h[(a, a)] = I * (p.gamma * stagger(l));
        h[(len + l - 1, len + l - 1)] = I * (p.gamma * stagger(l));
    }
    Ok(h)
}

/// Full moire ladder with open ends. Each chain carries its own `w`/`v`
/// alternation and the potential `i gamma (-1)^l`; chain 1 occupies flat
/// indices `0..n1`, chain 2 `n1..n1+n2`. Inter-chain hops come from `table`
/// (1-based site pairs).
pub fn build_moire_h(
    spec: &MoireSpec,
    table: &CouplingTable,
    p: &ModelParams,
) -> Result<ComplexMatrix, HamiltonianError> {
    p.validate()?;
    let (n1, n2) = (spec.n_sites_1, spec.n_sites_2);
    if n1 % 2 == 1 || n2 % 2 == 1 {
        return Err(HamiltonianError::OddChain(n1, n2));
    }
    spec.validate()?;
    let mut h = ComplexMatrix::zeros(n1 + n2);
    add_ssh_leg(&mut h, 0, n1, p.w, p.v, false);
    add_ssh_leg(&mut h, n1, n2, p.w, p.v, false);
    for l in 1..=n1 {
        h[(l - 1, l - 1)] = I * (p.gamma * stagger(l));
    }
    for l in 1..=n2 {
        h[(n1 + l - 1, n1 + l - 1)] = I * (p.gamma * stagger(l));
    }
    for c in table.entries() {
        h.add_hopping(c.i - 1, n1 + c.j - 1, real(c.kappa));
    }
    Ok(h)
}

/// Tetramer cluster in the basis `{|1,1>, |1,2>, |2,1>, |2,2>}`.
pub fn build_cluster_ht(w: f64, gamma: f64, kappa: f64) -> ComplexMatrix {
    let g = I * gamma;
    let (w, k) = (real(w), real(kappa));
    let z = real(0.0);
    ComplexMatrix::from_rows(&[
        vec![-g, k, w, z],
        vec![k, -g, z, w],
        vec![w, z, g, k],
        vec![z, w, k, g],
    ])
    .expect("4x4 cluster literal")
}

/// Dimer cluster in the basis `{|1,1>, |1,2>}`.
pub fn build_cluster_hd(kappa: f64, gamma: f64) -> ComplexMatrix {
    let g = I * gamma;
    let k = real(kappa);
    ComplexMatrix::from_rows(&[vec![g, k], vec![k, -g]]).expect("2x2 cluster literal")
}

/// The 2x2 reduction of the tetramer cluster onto the leg-symmetric sector:
/// `[[kappa - i gamma, w], [w, kappa + i gamma]]`.
pub fn build_cluster_reduced(w: f64, gamma: f64, kappa: f64) -> ComplexMatrix {
    let g = I * gamma;
    ComplexMatrix::from_rows(&[vec![real(kappa) - g, real(w)], vec![real(w), real(kappa) + g]])
        .expect("2x2 literal")
}

/// Parity `|l, leg> -> |2N - l + 1, leg>` on a periodic ladder of `n_cells`.
#[derive(Debug, Clone)]
pub struct SymmetryOperators {
    perm: Vec<usize>,
    parity: ComplexMatrix,
}

pub fn symmetry_operators(n_cells: usize) -> SymmetryOperators {
    assert!(n_cells >= 1, "parity needs at least one cell");
    let len = 2 * n_cells;
    let perm: Vec<usize> = (0..2 * len)
        .map(|idx| {
            let (leg, l0) = (idx / len, idx % len);
            leg * len + (len - 1 - l0)
        })
        .collect();
    let mut parity = ComplexMatrix::zeros(2 * len);
    for (from, &to) in perm.iter().enumerate() {
        parity[(to, from)] = real(1.0);
    }
    SymmetryOperators { perm, parity }
}

impl SymmetryOperators {
    pub fn parity(&self) -> &ComplexMatrix {
        &self.parity
    }

    /// `|| P conj(H) P - H ||_F`; zero iff `[PT, H] = 0` in the site basis.
    ///
    /// # Panics
    ///
    /// Panics if `h` has the wrong dimension.
    pub fn pt_residual(&self, h: &ComplexMatrix) -> f64 {
        let n = self.perm.len();
        assert_eq!(h.dim(), n, "PT check dimension mismatch");
        // (P conj(H) P)_{ij} = conj(H)_{p(i) p(j)} since P is an involution.
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let d = h[(self.perm[i], self.perm[j])].conj() - h[(i, j)];
                acc += d.norm_sqr();
            }
        }
        acc.sqrt()
    }
}

/// Bonding/antibonding rotation of a leg-exchange symmetric ladder.
#[derive(Debug, Clone)]
pub struct LegBlocks {
    /// Bonding sector, chemical potential `+kappa`.
    pub plus: ComplexMatrix,
    /// Antibonding sector, chemical potential `-kappa`.
    pub minus: ComplexMatrix,
    /// Largest modulus in the off-diagonal blocks after rotation.
    pub off_block_residual: f64,
}

/// Applies `|l, sigma> = (|l,1> + sigma |l,2>)/sqrt(2)` to a leg-major
/// matrix with equal legs and returns the two diagonal blocks.
pub fn leg_exchange_blocks(h: &ComplexMatrix) -> Result<LegBlocks, HamiltonianError> {
    let dim = h.dim();
    if dim % 2 == 1 {
        return Err(HamiltonianError::NotLegSymmetric {
            dim,
            residual: f64::INFINITY,
        });
    }
    let len = dim / 2;
    let mut asym: f64 = 0.0;
    for i in 0..len {
        for j in 0..len {
            asym = asym
                .max((h[(i, j)] - h[(len + i, len + j)]).norm())
                .max((h[(i, len + j)] - h[(len + i, j)]).norm());
        }
    }
    if asym > 1e-12 {
        return Err(HamiltonianError::NotLegSymmetric { dim, residual: asym });
    }

    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut u = ComplexMatrix::zeros(dim);
    for l in 0..len {
        u[(l, l)] = real(r);
        u[(l, len + l)] = real(r);
        u[(len + l, l)] = real(r);
        u[(len + l, len + l)] = real(-r);
    }
    // U is real, symmetric and orthogonal, so U^-1 = U.
    let rotated = &(&u * h) * &u;
    let mut plus = ComplexMatrix::zeros(len);
    let mut minus = ComplexMatrix::zeros(len);
    let mut off: f64 = 0.0;
    for i in 0..len {
        for j in 0..len {
            plus[(i, j)] = rotated[(i, j)];
            minus[(i, j)] = rotated[(len + i, len + j)];
            off = off
                .max(rotated[(i, len + j)].norm())
                .max(rotated[(len + i, j)].norm());
        }
    }
    Ok(LegBlocks {
        plus,
        minus,
        off_block_residual: off,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eig;

    fn params(w: f64, v: f64, kappa: f64, gamma: f64, n: usize) -> ModelParams {
        ModelParams {
            w,
            v,
            kappa,
            kappa_prime: 0.37,
            gamma,
            n_cells: n,
        }
    }

    #[test]
    fn single_cell_rejected() {
        let p = params(0.5, 0.1, 1.0, 0.2, 1);
        assert_eq!(build_ht(&p).unwrap_err(), HamiltonianError::TooFewCells(1));
        assert!(build_hd(&p).is_err());
        assert!(build_hc(&p).is_err());
    }

    #[test]
    fn nan_rejected() {
        let mut p = params(0.5, 0.1, 1.0, 0.2, 3);
        p.gamma = f64::NAN;
        assert!(matches!(build_ht(&p), Err(HamiltonianError::NonFinite { name: "gamma" })));
    }

    #[test]
    fn site_map_roundtrip() {
        for map in [SiteMap::leg_major(6, 8), SiteMap::rung_major(3)] {
            for flat in 0..map.len() {
                assert_eq!(map.flat(map.site(flat)), Some(flat));
            }
            assert_eq!(map.flat(SiteIndex { l: 0, leg: 1 }), None);
        }
        let m = SiteMap::leg_major(4, 4);
        assert_eq!(m.flat(SiteIndex { l: 1, leg: 2 }), Some(4));
        let c = SiteMap::rung_major(2);
        assert_eq!(c.flat(SiteIndex { l: 2, leg: 1 }), Some(2));
    }

    #[test]
    fn ht_structure() {
        let p = params(0.5, 0.1, 1.0, 0.3, 2);
        let h = build_ht(&p).unwrap();
        assert_eq!(h.dim(), 8);
        // w on (1,2), v on (2,3), v wraps (4,1), rung (1,1)-(1,2).
        assert_eq!(h[(0, 1)].re, 0.5);
        assert_eq!(h[(1, 2)].re, 0.1);
        assert_eq!(h[(3, 0)].re, 0.1);
        assert_eq!(h[(0, 4)].re, 1.0);
        assert_eq!(h[(0, 0)], C64::new(0.0, -0.3));
        assert_eq!(h[(5, 5)], C64::new(0.0, 0.3));
    }

    #[test]
    fn ht_decoupled_cells_spectrum() {
        // v = 0, gamma = 0: isolated plaquettes with levels +-kappa +- w.
        let p = params(0.5, 0.0, 1.0, 0.0, 2);
        let e = eig(&build_ht(&p).unwrap(), false).unwrap();
        let expected = [-1.5, -1.5, -0.5, -0.5, 0.5, 0.5, 1.5, 1.5];
        for (z, x) in e.eigenvalues.iter().zip(expected) {
            assert!((z - C64::new(x, 0.0)).norm() < 1e-12, "{z} vs {x}");
        }
    }

    #[test]
    fn hd_dimer_limit() {
        let p = params(0.0, 0.0, 1.0, 0.395, 3);
        let e = eig(&build_hd(&p).unwrap(), false).unwrap();
        let eps = (1.0f64 - 0.395 * 0.395).sqrt();
        for (idx, z) in e.eigenvalues.iter().enumerate() {
            let target = if idx < 6 { -eps } else { eps };
            assert!((z - C64::new(target, 0.0)).norm() < 1e-12);
        }
        assert!((eps - 0.918681).abs() < 1e-6);
    }

    #[test]
    fn hd_potential_pattern() {
        let p = params(0.5, 0.1, 1.0, 0.2, 2);
        let h = build_hd(&p).unwrap();
        // (l=1, leg=1): (-1)^2 = +1; (l=1, leg=2): -1.
        assert_eq!(h[(0, 0)], C64::new(0.0, 0.2));
        assert_eq!(h[(4, 4)], C64::new(0.0, -0.2));
        assert_eq!(h[(0, 1)].re, 0.1);
        assert_eq!(h[(4, 5)].re, 0.5);
    }

    #[test]
    fn hc_without_crossing_is_two_chains() {
        let mut p = params(0.5, 0.2, 1.0, 0.1, 3);
        p.kappa_prime = 0.0;
        let h = build_hc(&p).unwrap();
        let len = 6;
        for i in 0..len {
            for j in 0..len {
                assert_eq!(h[(i, len + j)].norm(), 0.0);
            }
        }
        let ht = build_ht(&ModelParams { kappa: 0.0, ..p }).unwrap();
        assert_eq!(h, ht);
    }

    #[test]
    fn clusters_match_literals() {
        let h = build_cluster_ht(0.5, 0.395, 1.0);
        assert_eq!(h[(0, 0)], C64::new(0.0, -0.395));
        assert_eq!(h[(0, 1)].re, 1.0);
        assert_eq!(h[(0, 2)].re, 0.5);
        assert_eq!(h[(3, 3)], C64::new(0.0, 0.395));
        let d = build_cluster_hd(1.0, 0.0);
        let e = eig(&d, false).unwrap();
        assert!((e.eigenvalues[0].re + 1.0).abs() < 1e-15);
        assert!((e.eigenvalues[1].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn parity_is_permutation_involution() {
        let s = symmetry_operators(3);
        let p = s.parity();
        assert_eq!(&(p * p), &ComplexMatrix::identity(12));
        // |1,1> -> |6,1>
        assert_eq!(p[(5, 0)].re, 1.0);
    }

    #[test]
    fn pt_breaking_detected() {
        let p = params(0.5, 0.1, 1.0, 0.3, 3);
        let mut h = build_ht(&p).unwrap();
        let s = symmetry_operators(3);
        assert_eq!(s.pt_residual(&h), 0.0);
        for i in 0..h.dim() {
            h[(i, i)] += C64::new(0.0, 0.3);
        }
        assert!(s.pt_residual(&h) > 1.0);
    }

    #[test]
    fn leg_blocks_reject_asymmetric() {
        let p = params(0.5, 0.1, 1.0, 0.3, 3);
        let h = build_hd(&p).unwrap();
        match leg_exchange_blocks(&h) {
            Err(HamiltonianError::NotLegSymmetric { residual, .. }) => assert!(residual > 0.1),
            other => panic!("unexpected {other:?}"),
        }
    }
}
