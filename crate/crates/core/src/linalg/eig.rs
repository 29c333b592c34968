//! General complex eigensolver: Householder reduction to upper Hessenberg
//! form followed by single-shift complex QR iteration (Wilkinson shifts)
//! to a Schur form `A = Z T Z^H`. Eigenvectors come from back-substitution
//! on `T`.

use super::{ComplexMatrix, LinalgError, C64};

/// Default cap on the matrix dimension accepted by [`eig`].
pub const DEFAULT_MAX_DIM: usize = 2048;

#[derive(Debug, Clone)]
pub struct EigOptions {
    pub max_dim: usize,
    /// QR sweeps allowed per unit of dimension before giving up.
    pub sweeps_per_dim: usize,
    /// Name reported in convergence failures.
    pub label: Option<String>,
}

impl Default for EigOptions {
    fn default() -> Self {
        Self {
            max_dim: DEFAULT_MAX_DIM,
            sweeps_per_dim: 30,
            label: None,
        }
    }
}

/// Eigenvalues sorted lexicographically by (real, imaginary), optional
/// unit-norm eigenvectors stored as matrix columns in the same order, and
/// the relative residual `||A x - lambda x|| / ||A||_F` of each pair.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<C64>,
    pub eigenvectors: Option<ComplexMatrix>,
    pub residuals: Vec<f64>,
}

impl EigenDecomposition {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_abs_imag(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    /// Eigenvector `k` as a standalone vector.
    pub fn vector(&self, k: usize) -> Option<super::ComplexVector> {
        self.eigenvectors.as_ref().map(|v| {
            let n = v.dim();
            super::ComplexVector((0..n).map(|i| v[(i, k)]).collect())
        })
    }
}

pub fn eig(a: &ComplexMatrix, want_vectors: bool) -> Result<EigenDecomposition, LinalgError> {
    eig_with(a, want_vectors, &EigOptions::default())
}

pub fn eig_with(
    a: &ComplexMatrix,
    want_vectors: bool,
    opts: &EigOptions,
) -> Result<EigenDecomposition, LinalgError> {
    let n = a.dim();
    if !a.is_finite() {
        return Err(LinalgError::NonFinite { what: "eigensolver input" });
    }
    if n > opts.max_dim {
        return Err(LinalgError::TooLarge { dim: n, cap: opts.max_dim });
    }

    let mut t = a.clone();
    let mut z = want_vectors.then(|| ComplexMatrix::identity(n));
    hessenberg(&mut t, z.as_mut());
    schur(&mut t, z.as_mut(), opts)?;

    let raw_values: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();
    let raw_vectors = z.map(|z| triangular_eigenvectors(&t, &z));

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        let (x, y) = (raw_values[i], raw_values[j]);
        x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im))
    });
    let eigenvalues: Vec<C64> = order.iter().map(|&i| raw_values[i]).collect();

    let (eigenvectors, residuals) = match raw_vectors {
        None => (None, Vec::new()),
        Some(raw) => {
            let mut v = ComplexMatrix::zeros(n);
            for (new, &old) in order.iter().enumerate() {
                for r in 0..n {
                    v[(r, new)] = raw[(r, old)];
                }
            }
            let a_norm = a.frobenius_norm();
            let denom = if a_norm > 0.0 { a_norm } else { 1.0 };
            let residuals = (0..n)
                .map(|k| {
                    let lambda = eigenvalues[k];
                    let mut acc = 0.0;
                    for i in 0..n {
                        let mut s = -lambda * v[(i, k)];
                        for j in 0..n {
                            s += a[(i, j)] * v[(j, k)];
                        }
                        acc += s.norm_sqr();
                    }
                    acc.sqrt() / denom
                })
                .collect();
            (Some(v), residuals)
        }
    };

    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
        residuals,
    })
}

/// In-place Householder reduction to upper Hessenberg form; accumulates the
/// orthogonal factor into `z` when given.
fn hessenberg(h: &mut ComplexMatrix, mut z: Option<&mut ComplexMatrix>) {
    let n = h.dim();
    if n < 3 {
        return;
    }
    let mut v = vec![C64::new(0.0, 0.0); n];
    for k in 0..n - 2 {
        let norm_x = (k + 1..n).map(|i| h[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if norm_x == 0.0 {
            continue;
        }
        let x0 = h[(k + 1, k)];
        let phase = if x0.norm() == 0.0 {
            C64::new(1.0, 0.0)
        } else {
            x0 / x0.norm()
        };
        let alpha = -phase * norm_x;
        for i in k + 1..n {
            v[i] = h[(i, k)];
        }
        v[k + 1] -= alpha;
        let vnorm = (k + 1..n).map(|i| v[i].norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        for item in v.iter_mut().take(n).skip(k + 1) {
            *item /= vnorm;
        }

        // H <- (I - 2 v v^H) H on rows k+1.., columns k..
        for j in k..n {
            let s: C64 = (k + 1..n).map(|i| v[i].conj() * h[(i, j)]).sum();
            let s2 = s * 2.0;
            for i in k + 1..n {
                h[(i, j)] -= v[i] * s2;
            }
        }
        // H <- H (I - 2 v v^H) on all rows, columns k+1..
        for i in 0..n {
            let s: C64 = (k + 1..n).map(|j| h[(i, j)] * v[j]).sum();
            let s2 = s * 2.0;
            for j in k + 1..n {
                h[(i, j)] -= s2 * v[j].conj();
            }
        }
        h[(k + 1, k)] = alpha;
        for i in k + 2..n {
            h[(i, k)] = C64::new(0.0, 0.0);
        }
        if let Some(z) = z.as_deref_mut() {
            for i in 0..n {
                let s: C64 = (k + 1..n).map(|j| z[(i, j)] * v[j]).sum();
                let s2 = s * 2.0;
                for j in k + 1..n {
                    z[(i, j)] -= s2 * v[j].conj();
                }
            }
        }
    }
}

#[inline]
fn abs1(z: C64) -> f64 {
    z.re.abs() + z.im.abs()
}

/// Givens rotation `G = [[c, s], [-conj(s), c]]` with `G [x; y] = [r; 0]`.
#[inline]
fn givens(x: C64, y: C64) -> (f64, C64) {
    let ax = x.norm();
    let ay = y.norm();
    if ay == 0.0 {
        return (1.0, C64::new(0.0, 0.0));
    }
    if ax == 0.0 {
        return (0.0, C64::new(1.0, 0.0));
    }
    let r = ax.hypot(ay);
    let c = ax / r;
    let s = (x / ax) * y.conj() / r;
    (c, s)
}

/// Reduces an upper Hessenberg matrix to upper triangular Schur form.
fn schur(
    h: &mut ComplexMatrix,
    mut z: Option<&mut ComplexMatrix>,
    opts: &EigOptions,
) -> Result<(), LinalgError> {
    let n = h.dim();
    if n == 1 {
        return Ok(());
    }
    let full = z.is_some();
    let eps = f64::EPSILON;
    let h_norm = h.frobenius_norm().max(f64::MIN_POSITIVE);
    let cap = opts.sweeps_per_dim.saturating_mul(n).max(1);
    let mut total = 0usize;
    let mut since_deflation = 0usize;
    let mut rot: Vec<(f64, C64)> = Vec::with_capacity(n);

    let mut hi = n - 1;
    while hi > 0 {
        // Locate the top of the unreduced block ending at row `hi`.
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)];
            let mut scale = abs1(h[(lo - 1, lo - 1)]) + abs1(h[(lo, lo)]);
            if scale == 0.0 {
                scale = h_norm;
            }
            if abs1(sub) <= eps * scale {
                h[(lo, lo - 1)] = C64::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            since_deflation = 0;
            continue;
        }

        total += 1;
        since_deflation += 1;
        if total > cap {
            let matrix = opts
                .label
                .clone()
                .unwrap_or_else(|| format!("{n}x{n} matrix"));
            return Err(LinalgError::NoConvergence {
                matrix,
                iterations: total - 1,
            });
        }

        let shift = if since_deflation % 11 == 10 {
            // Exceptional shift to break cycles.
            h[(hi, hi)] + C64::new(0.75 * abs1(h[(hi, hi - 1)]), 0.0)
        } else {
            wilkinson_shift(
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            )
        };

        for i in lo..=hi {
            h[(i, i)] -= shift;
        }
        let col_end = if full { n } else { hi + 1 };
        rot.clear();
        for k in lo..hi {
            let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
            rot.push((c, s));
            for j in k..col_end {
                let a = h[(k, j)];
                let b = h[(k + 1, j)];
                h[(k, j)] = a * c + s * b;
                h[(k + 1, j)] = -s.conj() * a + b * c;
            }
            h[(k + 1, k)] = C64::new(0.0, 0.0);
        }
        let row_start = if full { 0 } else { lo };
        for (idx, &(c, s)) in rot.iter().enumerate() {
            let k = lo + idx;
            let row_end = (k + 2).min(hi + 1);
            for i in row_start..row_end {
                let a = h[(i, k)];
                let b = h[(i, k + 1)];
                h[(i, k)] = a * c + b * s.conj();
                h[(i, k + 1)] = -a * s + b * c;
            }
            if let Some(z) = z.as_deref_mut() {
                for i in 0..n {
                    let a = z[(i, k)];
                    let b = z[(i, k + 1)];
                    z[(i, k)] = a * c + b * s.conj();
                    z[(i, k + 1)] = -a * s + b * c;
                }
            }
        }
        for i in lo..=hi {
            h[(i, i)] += shift;
        }
    }
    Ok(())
}

/// Eigenvalue of `[[a, b], [c, d]]` closest to `d`.
fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let p = (a - d) * 0.5;
    let bc = b * c;
    if bc.norm() == 0.0 {
        return d;
    }
    let disc = (p * p + bc).sqrt();
    let den1 = p + disc;
    let den2 = p - disc;
    let den = if den1.norm() >= den2.norm() { den1 } else { den2 };
    if den.norm() == 0.0 {
        return d;
    }
    d - bc / den
}

/// Eigenvectors of the Schur form mapped back through `z`, normalised to
/// unit 2-norm.
fn triangular_eigenvectors(t: &ComplexMatrix, z: &ComplexMatrix) -> ComplexMatrix {
    let n = t.dim();
    let smin = (f64::EPSILON * t.frobenius_norm()).max(f64::MIN_POSITIVE * n as f64);
    let mut x = vec![C64::new(0.0, 0.0); n];
    let mut out = ComplexMatrix::zeros(n);
    for k in 0..n {
        let lambda = t[(k, k)];
        x.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        x[k] = C64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let mut s = C64::new(0.0, 0.0);
            for j in i + 1..=k {
                s += t[(i, j)] * x[j];
            }
            let mut d = t[(i, i)] - lambda;
            if d.norm() < smin {
                d = C64::new(smin, 0.0);
            }
            x[i] = -s / d;
            let big = x[i].norm();
            if big > 1e100 {
                for v in x.iter_mut().take(k + 1) {
                    *v /= big;
                }
            }
        }
        let mut norm = 0.0;
        for r in 0..n {
            let mut s = C64::new(0.0, 0.0);
            for j in 0..=k {
                s += z[(r, j)] * x[j];
            }
            out[(r, k)] = s;
            norm += s.norm_sqr();
        }
        let norm = norm.sqrt();
        if norm > 0.0 {
            for r in 0..n {
                out[(r, k)] /= norm;
            }
        }
    }
    out
}
