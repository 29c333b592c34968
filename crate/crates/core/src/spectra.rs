//! Bloch kernels, analytic dispersions and the PT-breaking threshold scanner.
//!
//! Momentum convention: `k` is the momentum per unit cell of two sites along
//! a leg, so the folding grid of a ring of `N` cells is `k = 2 pi m / N`.
//! The 4x4 kernels of the tetramerized and crossover ladders act on the
//! cell basis `(2l-1,1), (2l,1), (2l-1,2), (2l,2)`. The dimerized ladder is
//! translation invariant with period one site on its zigzag sublattices; its
//! 2x2 kernel takes the site momentum `q`, and the four bands at cell
//! momentum `k` are the kernel values at `q = k/2` and `q = k/2 + pi`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hamiltonian::ModelParams;
use crate::linalg::{eig, ComplexMatrix, LinalgError, C64, I};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectraError {
    #[error("k resolution must be even and >= 64, got {0}")]
    BadResolution(usize),
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("parameters {0} must be finite")]
    NonFinite(&'static str),
    #[error("all energy scales vanish; gamma_c is undefined")]
    NoScale,
    #[error("grid resolution must be >= 1 on both axes")]
    EmptyGrid,
    #[error("scanned gamma_c {scanned} disagrees with analytic {analytic} beyond tolerance")]
    AnalyticMismatch { analytic: f64, scanned: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelTag {
    Tetramerized,
    Dimerized,
    Crossover,
}

impl ModelTag {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelTag::Tetramerized => "tetramerized",
            ModelTag::Dimerized => "dimerized",
            ModelTag::Crossover => "crossover",
        }
    }
}

/// Relative threshold on `|Im e|` below which a level counts as real.
pub const REALITY_THRESHOLD: f64 = 1e-9;
pub const DEFAULT_K_POINTS: usize = 512;

/// Uniform grid `2 pi m / n`, `m = 0..n`.
pub fn k_grid(n: usize) -> Vec<f64> {
    (0..n).map(|m| 2.0 * PI * m as f64 / n as f64).collect()
}

/// `lambda_k = w + v e^{ik}`.
pub fn lambda_k(w: f64, v: f64, k: f64) -> C64 {
    C64::new(w, 0.0) + C64::from_polar(v, k)
}

/// Gapless single-chain energy `sqrt(4 w v cos^2(k/2) + (w - v)^2) = |lambda_k|`.
pub fn ssh_energy(w: f64, v: f64, k: f64) -> f64 {
    let c = (k / 2.0).cos();
    (4.0 * w * v * c * c + (w - v) * (w - v)).max(0.0).sqrt()
}

/// Hermitian part of the dimer kernel, `|w e^{-iq} + v e^{iq} + kappa|`.
pub fn dimer_energy(w: f64, v: f64, kappa: f64, q: f64) -> f64 {
    (C64::from_polar(w, -q) + C64::from_polar(v, q) + kappa).norm()
}

/// Principal square root of `x^2 - gamma^2` for real `x`.
fn split(x: f64, gamma: f64) -> C64 {
    C64::new(x * x - gamma * gamma, 0.0).sqrt()
}

pub fn kernel_t(p: &ModelParams, k: f64) -> ComplexMatrix {
    let g = I * p.gamma;
    let lk = lambda_k(p.w, p.v, k);
    let lmk = lambda_k(p.w, p.v, -k);
    let kap = C64::new(p.kappa, 0.0);
    let z = C64::new(0.0, 0.0);
    ComplexMatrix::from_rows(&[
        vec![-g, lk, kap, z],
        vec![lmk, g, z, kap],
        vec![kap, z, -g, lk],
        vec![z, kap, lmk, g],
    ])
    .expect("finite kernel")
}

/// 2x2 dimer kernel at site momentum `q`.
pub fn kernel_d(p: &ModelParams, q: f64) -> ComplexMatrix {
    let g = I * p.gamma;
    let off = C64::from_polar(p.w, q) + C64::from_polar(p.v, -q) + p.kappa;
    ComplexMatrix::from_rows(&[vec![g, off], vec![off.conj(), -g]]).expect("finite kernel")
}

pub fn kernel_c(p: &ModelParams, k: f64) -> ComplexMatrix {
    let g = I * p.gamma;
    let lk = lambda_k(p.w, p.v, k);
    let lmk = lambda_k(p.w, p.v, -k);
    let kp = C64::new(p.kappa_prime, 0.0);
    ComplexMatrix::from_rows(&[
        vec![-g, lk, kp, kp],
        vec![lmk, g, C64::from_polar(p.kappa_prime, -k), kp],
        vec![kp, C64::from_polar(p.kappa_prime, k), -g, lk],
        vec![kp, kp, lmk, g],
    ])
    .expect("finite kernel")
}

/// Cell-momentum kernel of any of the three ladders.
pub fn kernel(model: ModelTag, p: &ModelParams, k: f64) -> ComplexMatrix {
    match model {
        ModelTag::Tetramerized => kernel_t(p, k),
        ModelTag::Crossover => kernel_c(p, k),
        ModelTag::Dimerized => {
            let a = kernel_d(p, k / 2.0);
            let b = kernel_d(p, k / 2.0 + PI);
            let mut m = ComplexMatrix::zeros(4);
            for i in 0..2 {
                for j in 0..2 {
                    m[(i, j)] = a[(i, j)];
                    m[(2 + i, 2 + j)] = b[(i, j)];
                }
            }
            m
        }
    }
}

#[derive(Debug, Clone)]
pub struct Dispersion {
    pub model: ModelTag,
    pub k: Vec<f64>,
    /// Four bands per momentum.
    pub bands: Vec<[C64; 4]>,
    /// Largest distance between the closed-form bands and kernel
    /// diagonalisation, for the models that have a closed form.
    pub kernel_deviation: Option<f64>,
}

impl Dispersion {
    pub fn max_abs_imag(&self) -> f64 {
        self.bands
            .iter()
            .flat_map(|b| b.iter())
            .map(|z| z.im.abs())
            .fold(0.0, f64::max)
    }

    pub fn all_values(&self) -> Vec<C64> {
        self.bands.iter().flat_map(|b| b.iter().copied()).collect()
    }
}

/// `sigma kappa +- sqrt(eps0^2 - gamma^2)` ordered as
/// `(-,-), (-,+), (+,-), (+,+)` in `(sigma, rho)`.
pub fn tetramer_bands(p: &ModelParams, k: f64) -> [C64; 4] {
    let s = split(ssh_energy(p.w, p.v, k), p.gamma);
    let kap = C64::new(p.kappa, 0.0);
    [-kap - s, -kap + s, kap - s, kap + s]
}

pub fn dimer_bands(p: &ModelParams, k: f64) -> [C64; 4] {
    let a = split(dimer_energy(p.w, p.v, p.kappa, k / 2.0), p.gamma);
    let b = split(dimer_energy(p.w, p.v, p.kappa, k / 2.0 + PI), p.gamma);
    [-a, a, -b, b]
}

fn kernel_values(model: ModelTag, p: &ModelParams, k: f64) -> Result<Vec<C64>, LinalgError> {
    Ok(eig(&kernel(model, p, k), false)?.eigenvalues)
}

pub fn dispersion_t(p: &ModelParams, k: &[f64]) -> Result<Dispersion, SpectraError> {
    analytic_dispersion(ModelTag::Tetramerized, p, k, tetramer_bands)
}

pub fn dispersion_d(p: &ModelParams, k: &[f64]) -> Result<Dispersion, SpectraError> {
    analytic_dispersion(ModelTag::Dimerized, p, k, dimer_bands)
}

fn analytic_dispersion(
    model: ModelTag,
    p: &ModelParams,
    k: &[f64],
    bands_at: fn(&ModelParams, f64) -> [C64; 4],
) -> Result<Dispersion, SpectraError> {
    p.validate().map_err(|_| SpectraError::NonFinite("model"))?;
    let mut bands = Vec::with_capacity(k.len());
    let mut deviation: f64 = 0.0;
    for &kk in k {
        let b = bands_at(p, kk);
        let numeric = kernel_values(model, p, kk)?;
        deviation = deviation.max(spectral_distance(&b, &numeric));
        bands.push(b);
    }
    Ok(Dispersion {
        model,
        k: k.to_vec(),
        bands,
        kernel_deviation: Some(deviation),
    })
}

/// Crossover bands by diagonalising the 4x4 kernel (no closed form).
pub fn dispersion_c(p: &ModelParams, k: &[f64]) -> Result<Dispersion, SpectraError> {
    p.validate().map_err(|_| SpectraError::NonFinite("model"))?;
    let bands = k
        .iter()
        .map(|&kk| {
            let v = kernel_values(ModelTag::Crossover, p, kk)?;
            Ok([v[0], v[1], v[2], v[3]])
        })
        .collect::<Result<Vec<_>, SpectraError>>()?;
    Ok(Dispersion {
        model: ModelTag::Crossover,
        k: k.to_vec(),
        bands,
        kernel_deviation: None,
    })
}

pub fn dispersion(model: ModelTag, p: &ModelParams, k: &[f64]) -> Result<Dispersion, SpectraError> {
    match model {
        ModelTag::Tetramerized => dispersion_t(p, k),
        ModelTag::Dimerized => dispersion_d(p, k),
        ModelTag::Crossover => dispersion_c(p, k),
    }
}

/// Largest distance in a greedy nearest-neighbour matching of two
/// equal-size multisets of complex numbers.
pub fn spectral_distance(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let (idx, d) = b
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .map(|(i, y)| (i, (x - y).norm()))
            .fold((usize::MAX, f64::INFINITY), |acc, c| if c.1 < acc.1 { c } else { acc });
        used[idx] = true;
        worst = worst.max(d);
    }
    worst
}

/// Settings for the gamma_c scanner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    pub k_points: usize,
    pub tolerance: f64,
    /// Upper end of the bracket; defaults to `4 max(|w|, |v|, coupling)`.
    pub gamma_max: Option<f64>,
    /// Uniform steps of the coarse pre-scan that locates the first breaking.
    pub coarse_steps: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            k_points: DEFAULT_K_POINTS,
            tolerance: 1e-6,
            gamma_max: None,
            coarse_steps: 32,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaC {
    /// Reported threshold (the closed form for the tetramerized ladder).
    pub value: f64,
    /// Threshold found by the numeric scan.
    pub scanned: f64,
    /// The spectrum is still real at the top of the bracket.
    pub saturated: bool,
}

/// Parameters for the `(v, w)` point of a given model; `coupling` is
/// `kappa` for tetramerized/dimerized and `kappa'` for crossover.
pub fn point_params(model: ModelTag, v: f64, w: f64, coupling: f64, gamma: f64) -> ModelParams {
    let mut p = ModelParams {
        w,
        v,
        kappa: 0.0,
        kappa_prime: 0.0,
        gamma,
        n_cells: 2,
    };
    match model {
        ModelTag::Crossover => p.kappa_prime = coupling,
        _ => p.kappa = coupling,
    }
    p
}

/// True when every kernel level on the grid has `|Im e| <= threshold`.
///
/// Only `k` in `[0, pi]` is visited: `h(-k)` is the transpose of `h(k)` for
/// all three kernels, so the spectra at `k` and `2 pi - k` coincide.
pub fn spectrum_is_real(
    model: ModelTag,
    p: &ModelParams,
    k_points: usize,
    threshold: f64,
) -> Result<bool, LinalgError> {
    let half = k_points / 2;
    for m in (0..=half).rev() {
        let k = 2.0 * PI * m as f64 / k_points as f64;
        let e = eig(&kernel(model, p, k), false)?;
        if e.max_abs_imag() > threshold {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn gamma_c(
    model: ModelTag,
    v: f64,
    w: f64,
    coupling: f64,
    opts: &ScanOptions,
) -> Result<GammaC, SpectraError> {
    if opts.k_points < 64 || opts.k_points % 2 == 1 {
        return Err(SpectraError::BadResolution(opts.k_points));
    }
    if !(opts.tolerance > 0.0 && opts.tolerance.is_finite()) {
        return Err(SpectraError::BadTolerance(opts.tolerance));
    }
    if !(v.is_finite() && w.is_finite() && coupling.is_finite()) {
        return Err(SpectraError::NonFinite("(v, w, coupling)"));
    }
    let scale = w.abs().max(v.abs()).max(coupling.abs());
    if scale == 0.0 {
        return Err(SpectraError::NoScale);
    }
    let threshold = REALITY_THRESHOLD * scale;
    let gamma_max = opts.gamma_max.unwrap_or(4.0 * scale);
    let real_at = |gamma: f64| -> Result<bool, LinalgError> {
        spectrum_is_real(model, &point_params(model, v, w, coupling, gamma), opts.k_points, threshold)
    };

    let steps = opts.coarse_steps.max(1);
    let mut lo = 0.0;
    let mut hi = None;
    if !real_at(0.0)? {
        hi = Some(0.0);
    } else {
        for s in 1..=steps {
            let g = gamma_max * s as f64 / steps as f64;
            if real_at(g)? {
                lo = g;
            } else {
                hi = Some(g);
                break;
            }
        }
    }

    let (scanned, saturated) = match hi {
        None => (gamma_max, true),
        Some(h) if h == 0.0 => (0.0, false),
        Some(mut h) => {
            while h - lo > opts.tolerance {
                let mid = 0.5 * (lo + h);
                if real_at(mid)? {
                    lo = mid;
                } else {
                    h = mid;
                }
            }
            (0.5 * (lo + h), false)
        }
    };

    let value = match model {
        ModelTag::Tetramerized => {
            let analytic = (w - v).abs();
            if !saturated && (analytic - scanned).abs() > opts.tolerance {
                return Err(SpectraError::AnalyticMismatch { analytic, scanned });
            }
            analytic
        }
        _ => scanned,
    };
    Ok(GammaC {
        value,
        scanned,
        saturated,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseGridSpec {
    pub model: ModelTag,
    pub v_range: (f64, f64),
    pub w_range: (f64, f64),
    pub n_v: usize,
    pub n_w: usize,
    /// `kappa` or `kappa'` depending on the model.
    pub coupling: f64,
    pub scan: ScanOptions,
}

/// gamma_c sampled on a `(v, w)` grid. Cells are stored row-major with `w`
/// as the slow index: cell `(iw, iv)` lives at `iw * n_v + iv`.
#[derive(Debug, Clone)]
pub struct PhaseDiagramGrid {
    pub spec: PhaseGridSpec,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
    pub gamma_c: Vec<f64>,
    /// Raw scan result per cell (equals `gamma_c` except for the
    /// tetramerized ladder, where `gamma_c` holds the closed form).
    pub scanned: Vec<f64>,
    pub saturated: Vec<bool>,
}

impl PhaseDiagramGrid {
    pub fn at(&self, iw: usize, iv: usize) -> f64 {
        self.gamma_c[iw * self.v.len() + iv]
    }

    pub fn saturated_count(&self) -> usize {
        self.saturated.iter().filter(|&&s| s).count()
    }
}

fn axis(range: (f64, f64), n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![range.0];
    }
    (0..n)
        .map(|i| range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Evaluates every cell independently (in parallel when threads are
/// available) and assembles the grid by cell index.
pub fn phase_diagram(spec: &PhaseGridSpec) -> Result<PhaseDiagramGrid, SpectraError> {
    if spec.n_v == 0 || spec.n_w == 0 {
        return Err(SpectraError::EmptyGrid);
    }
    let v = axis(spec.v_range, spec.n_v);
    let w = axis(spec.w_range, spec.n_w);
    let cells: Vec<GammaC> = (0..spec.n_v * spec.n_w)
        .into_par_iter()
        .map(|idx| {
            let (iw, iv) = (idx / spec.n_v, idx % spec.n_v);
            gamma_c(spec.model, v[iv], w[iw], spec.coupling, &spec.scan)
        })
        .collect::<Result<_, _>>()?;
    Ok(PhaseDiagramGrid {
        spec: *spec,
        v,
        w,
        gamma_c: cells.iter().map(|c| c.value).collect(),
        scanned: cells.iter().map(|c| c.scanned).collect(),
        saturated: cells.iter().map(|c| c.saturated).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(w: f64, v: f64, kappa: f64, kappa_prime: f64, gamma: f64) -> ModelParams {
        ModelParams {
            w,
            v,
            kappa,
            kappa_prime,
            gamma,
            n_cells: 2,
        }
    }

    #[test]
    fn ssh_energy_at_pi_is_gap() {
        assert!((ssh_energy(0.5, 0.1, PI) - 0.4).abs() < 1e-15);
        assert!((ssh_energy(0.5, 0.1, 0.0) - 0.6).abs() < 1e-15);
        for k in k_grid(7) {
            assert!((ssh_energy(0.3, 0.8, k) - lambda_k(0.3, 0.8, k).norm()).abs() < 1e-14);
        }
    }

    #[test]
    fn tetramer_bands_at_pi_hermitian() {
        let b = tetramer_bands(&p(0.5, 0.1, 1.0, 0.0, 0.0), PI);
        let expected = [-1.4, -0.6, 0.6, 1.4];
        for (z, x) in b.iter().zip(expected) {
            assert!((z.re - x).abs() < 1e-15 && z.im == 0.0);
        }
    }

    #[test]
    fn tetramer_gap_at_ep_closes() {
        let b = tetramer_bands(&p(0.5, 0.1, 1.0, 0.0, 0.4), PI);
        assert!((b[3] - b[2]).norm() < 1e-7);
    }

    #[test]
    fn dimer_energy_without_legs_is_kappa() {
        for q in k_grid(9) {
            assert!((dimer_energy(0.0, 0.0, 1.3, q) - 1.3).abs() < 1e-15);
        }
        assert!((dimer_energy(0.5, 0.1, 1.0, PI) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn dimer_boundary_line_touches_zero() {
        // w = v = 0.6, kappa = 1: |2v/kappa| > 1.
        let q = (-1.0f64 / 1.2).acos();
        assert!(dimer_energy(0.6, 0.6, 1.0, q) < 1e-12);
    }

    #[test]
    fn crossover_decoupled_kernel() {
        let params = p(0.7, 0.2, 0.0, 0.0, 0.0);
        let k = 1.1;
        let e = eig(&kernel_c(&params, k), false).unwrap().eigenvalues;
        let l = lambda_k(0.7, 0.2, k).norm();
        let expected = [-l, -l, l, l];
        for (z, x) in e.iter().zip(expected) {
            assert!((z - C64::new(x, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn crossover_k0_complex_pair() {
        let params = p(0.6, 0.4, 0.0, 1.0, 0.1);
        let e = eig(&kernel_c(&params, 0.0), false).unwrap().eigenvalues;
        for target in [C64::new(-1.0, 0.1), C64::new(-1.0, -0.1)] {
            let best = e.iter().map(|z| (z - target).norm()).fold(f64::INFINITY, f64::min);
            assert!(best < 1e-10, "{target} missing from {e:?}");
        }
    }

    #[test]
    fn crossover_w_eq_v_breaks_at_pi() {
        let params = p(0.5, 0.5, 0.0, 0.37, 0.01);
        let e = eig(&kernel_c(&params, PI), false).unwrap();
        assert!(e.max_abs_imag() > 1e-3);
    }

    #[test]
    fn scan_rejects_bad_options() {
        let opts = ScanOptions {
            k_points: 63,
            ..ScanOptions::default()
        };
        assert!(matches!(
            gamma_c(ModelTag::Tetramerized, 0.1, 0.5, 1.0, &opts),
            Err(SpectraError::BadResolution(63))
        ));
        let opts = ScanOptions {
            tolerance: 0.0,
            ..ScanOptions::default()
        };
        assert!(gamma_c(ModelTag::Tetramerized, 0.1, 0.5, 1.0, &opts).is_err());
        assert!(matches!(
            gamma_c(ModelTag::Dimerized, 0.0, 0.0, 0.0, &ScanOptions::default()),
            Err(SpectraError::NoScale)
        ));
    }

    #[test]
    fn saturation_flag() {
        // Tiny bracket: spectrum still real at its top.
        let opts = ScanOptions {
            gamma_max: Some(0.1),
            k_points: 64,
            ..ScanOptions::default()
        };
        let g = gamma_c(ModelTag::Dimerized, 0.1, 0.5, 1.0, &opts).unwrap();
        assert!(g.saturated);
        assert_eq!(g.value, 0.1);
    }

    #[test]
    fn spectral_distance_matches_permutations() {
        let a = [C64::new(1.0, 0.0), C64::new(-1.0, 0.5), C64::new(0.0, 0.0)];
        let b = [C64::new(0.0, 0.0), C64::new(1.0, 1e-9), C64::new(-1.0, 0.5)];
        assert!(spectral_distance(&a, &b) < 2e-9);
        assert_eq!(spectral_distance(&a, &b[..2]), f64::INFINITY);
    }
}
