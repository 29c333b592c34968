use super::{ComplexMatrix, ComplexVector, LinalgError, C64, I};

/// Classical fixed-step RK4 for `i dpsi/dt = H psi`.
///
/// Samples are taken at every step, starting with `(0, psi0)`. When `t_max`
/// is not a multiple of `dt`, the final step is shortened to land exactly on
/// `t_max`.
pub fn integrate_schrodinger(
    h: &ComplexMatrix,
    psi0: &ComplexVector,
    t_max: f64,
    dt: f64,
) -> Result<Vec<(f64, ComplexVector)>, LinalgError> {
    if h.dim() != psi0.len() {
        return Err(LinalgError::DimensionMismatch {
            left: h.dim(),
            right: psi0.len(),
        });
    }
    if !h.is_finite() {
        return Err(LinalgError::NonFinite { what: "Hamiltonian" });
    }
    if !psi0.is_finite() {
        return Err(LinalgError::NonFinite { what: "initial state" });
    }
    if !(dt.is_finite() && dt > 0.0 && t_max.is_finite() && t_max >= 0.0) {
        return Err(LinalgError::NonFinite { what: "time grid" });
    }

    let n = h.dim();
    let minus_i = -I;
    let deriv = |psi: &[C64], out: &mut [C64]| {
        h.mul_vec_into(psi, out);
        out.iter_mut().for_each(|z| *z *= minus_i);
    };

    let mut psi = psi0.0.clone();
    let mut k1 = vec![C64::new(0.0, 0.0); n];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut tmp = k1.clone();

    let n_full = (t_max / dt * (1.0 + 1e-12)).floor() as usize;
    let mut out = Vec::with_capacity(n_full + 2);
    out.push((0.0, psi0.clone()));
    let mut t = 0.0;
    let mut step = 0usize;
    loop {
        let remaining = t_max - t;
        if remaining <= dt * 1e-9 {
            break;
        }
        let h_step = if step < n_full { dt } else { remaining };
        deriv(&psi, &mut k1);
        for i in 0..n {
            tmp[i] = psi[i] + k1[i] * (0.5 * h_step);
        }
        deriv(&tmp, &mut k2);
        for i in 0..n {
            tmp[i] = psi[i] + k2[i] * (0.5 * h_step);
        }
        deriv(&tmp, &mut k3);
        for i in 0..n {
            tmp[i] = psi[i] + k3[i] * h_step;
        }
        deriv(&tmp, &mut k4);
        for i in 0..n {
            psi[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h_step / 6.0);
        }
        step += 1;
        t = if step <= n_full { step as f64 * dt } else { t_max };
        out.push((t, ComplexVector(psi.clone())));
    }
    Ok(out)
}
