//! Matrix exponential by scaling and squaring with the diagonal [13/13]
//! Padé approximant (Higham 2005). The scaling power is chosen from the
//! 1-norm so that `||A / 2^s||_1 <= theta_13`.

use super::{solve_in_place, ComplexMatrix, LinalgError, C64};

const THETA_13: f64 = 5.371_920_351_148_152;

const PADE_13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

pub fn expm(a: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    if !a.is_finite() {
        return Err(LinalgError::NonFinite { what: "expm input" });
    }
    let n = a.dim();
    let norm = a.one_norm();
    if !norm.is_finite() {
        return Err(LinalgError::Overflow { norm });
    }
    if norm == 0.0 {
        return Ok(ComplexMatrix::identity(n));
    }
    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as i32
    } else {
        0
    };
    if s > 1000 {
        return Err(LinalgError::Overflow { norm });
    }
    let a = a.scale(C64::new(2f64.powi(-s), 0.0));

    let b = |i: usize| C64::new(PADE_13[i], 0.0);
    let id = ComplexMatrix::identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let lincomb = |c6: usize, c4: usize, c2: usize| -> ComplexMatrix {
        let mut m = a6.scale(b(c6));
        m = &m + &a4.scale(b(c4));
        &m + &a2.scale(b(c2))
    };

    let u_inner = lincomb(13, 11, 9);
    let mut u_tail = lincomb(7, 5, 3);
    u_tail = &u_tail + &id.scale(b(1));
    let u = &a * &(&(&a6 * &u_inner) + &u_tail);

    let v_inner = lincomb(12, 10, 8);
    let mut v_tail = lincomb(6, 4, 2);
    v_tail = &v_tail + &id.scale(b(0));
    let v = &(&a6 * &v_inner) + &v_tail;

    let mut denom = &v - &u;
    let mut r = &v + &u;
    solve_in_place(&mut denom, &mut r)?;

    for _ in 0..s {
        r = &r * &r;
        if !r.is_finite() {
            return Err(LinalgError::Overflow { norm });
        }
    }
    if !r.is_finite() {
        return Err(LinalgError::Overflow { norm });
    }
    Ok(r)
}
