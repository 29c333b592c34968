use nhladder::hamiltonian::{
    build_cluster_hd, build_cluster_ht, build_cluster_reduced, build_hc, build_hd, build_ht, build_moire_h,
    ModelParams,
};
use nhladder::lattice::{build_couplings, MoireSpec};
use nhladder::linalg::{eig, expm, integrate_schrodinger, ComplexMatrix, ComplexVector, C64};
use proptest::prelude::*;

fn matrix(max_dim: usize, scale: f64) -> impl Strategy<Value = ComplexMatrix> {
    (1..=max_dim).prop_flat_map(move |n| {
        prop::collection::vec((-scale..scale, -scale..scale), n * n).prop_map(move |v| {
            ComplexMatrix::from_row_major(n, v.into_iter().map(|(re, im)| C64::new(re, im)).collect()).unwrap()
        })
    })
}

/// Determinant by Gaussian elimination with partial pivoting.
fn det(a: &ComplexMatrix) -> C64 {
    let n = a.dim();
    let mut m: Vec<Vec<C64>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    let mut d = C64::new(1.0, 0.0);
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| m[x][c].norm().partial_cmp(&m[y][c].norm()).unwrap()).unwrap();
        if m[p][c].norm() == 0.0 {
            return C64::new(0.0, 0.0);
        }
        if p != c {
            m.swap(p, c);
            d = -d;
        }
        d *= m[c][c];
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            for k in c..n {
                let sub = f * m[c][k];
                m[r][k] -= sub;
            }
        }
    }
    d
}

proptest! {
    #[test]
    fn eigenvalues_are_characteristic_roots(a in matrix(8, 1.0)) {
        let n = a.dim();
        let e = eig(&a, false).unwrap();
        let bound = 1e-8 * a.frobenius_norm().max(1.0).powi(n as i32);
        for lam in &e.eigenvalues {
            let shifted = &a - &ComplexMatrix::identity(n).scale(*lam);
            prop_assert!(det(&shifted).norm() <= bound, "|det(A - {lam})| too large");
        }
    }

    #[test]
    fn trace_is_eigenvalue_sum(a in matrix(12, 2.0)) {
        let e = eig(&a, false).unwrap();
        let sum: C64 = e.eigenvalues.iter().sum();
        prop_assert!((sum - a.trace()).norm() <= 1e-9 * a.frobenius_norm().max(1e-300));
    }

    #[test]
    fn eigenvector_residuals_small(a in matrix(10, 1.0)) {
        let e = eig(&a, true).unwrap();
        prop_assert!(e.max_residual() < 1e-10, "residual {}", e.max_residual());
    }

    #[test]
    fn expm_inverse(a in matrix(8, 1.0), s in 0.0f64..1.0) {
        let norm = a.one_norm().max(1e-300);
        let a = a.scale(C64::new(10.0 * s / norm, 0.0));
        let n = a.dim();
        let prod = &expm(&a).unwrap() * &expm(&a.scale(C64::new(-1.0, 0.0))).unwrap();
        let err = (&prod - &ComplexMatrix::identity(n)).max_abs();
        prop_assert!(err <= 1e-9, "||e^A e^-A - I|| = {err}");
    }

    #[test]
    fn eig_is_deterministic(a in matrix(6, 1.0)) {
        let x = eig(&a, true).unwrap();
        let y = eig(&a, true).unwrap();
        prop_assert_eq!(x.eigenvalues, y.eigenvalues);
        prop_assert_eq!(x.eigenvectors, y.eigenvectors);
        prop_assert_eq!(expm(&a).unwrap(), expm(&a).unwrap());
    }
}

fn all_small_hamiltonians() -> Vec<(String, ComplexMatrix)> {
    let mut out = Vec::new();
    for (w, v, kappa, kp, gamma, n) in [
        (0.5, 0.1, 1.0, 0.37, 0.395, 4),
        (0.5, 0.1, 1.0, 0.37, 0.2, 8),
        (0.3, 0.7, 0.6, 0.2, 0.5, 3),
    ] {
        let p = ModelParams {
            w,
            v,
            kappa,
            kappa_prime: kp,
            gamma,
            n_cells: n,
        };
        out.push((format!("H_T {p:?}"), build_ht(&p).unwrap()));
        out.push((format!("H_D {p:?}"), build_hd(&p).unwrap()));
        out.push((format!("H_C {p:?}"), build_hc(&p).unwrap()));
    }
    out.push(("h_T".into(), build_cluster_ht(0.5, 0.505, 1.0)));
    out.push(("h_D".into(), build_cluster_hd(1.0, 0.395)));
    out.push(("M".into(), build_cluster_reduced(0.5, 0.5, 1.0)));
    let spec = MoireSpec::equal_span(26, 1.0 / 13.0, 1.0, 2.0).unwrap();
    let table = build_couplings(&spec).unwrap();
    out.push((
        "moire 26+28".into(),
        build_moire_h(&spec, &table, &ModelParams { gamma: 0.2, ..ModelParams::default() }).unwrap(),
    ));
    out
}

#[test]
fn expm_matches_rk4_on_built_hamiltonians() {
    for (name, h) in all_small_hamiltonians() {
        let n = h.dim();
        assert!(n <= 64);
        let psi0 = ComplexVector((0..n).map(|i| C64::new(1.0, 0.3 * i as f64) / (n as f64).sqrt()).collect());
        let t = 5.0;
        let exact = expm(&h.scale(C64::new(0.0, -t))).unwrap().mul_vec(&psi0);
        let rk = integrate_schrodinger(&h, &psi0, t, 1e-3).unwrap();
        let last = &rk.last().unwrap().1;
        let rel = exact.sub(last).norm() / exact.norm();
        assert!(rel <= 1e-6, "{name}: relative deviation {rel:e}");
    }
}

fn hermitian(n: usize, seed: u64, norm: f64) -> ComplexMatrix {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut h = ComplexMatrix::zeros(n);
    for i in 0..n {
        h[(i, i)] = C64::new(rng.gen_range(-1.0..1.0), 0.0);
        for j in i + 1..n {
            h.add_hopping(i, j, C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        }
    }
    h.scale(C64::new(norm / h.one_norm(), 0.0))
}

#[test]
fn expm_large_norm_against_oracles() {
    for (seed, norm) in [(1, 5.0), (2, 20.0), (3, 50.0)] {
        let h = hermitian(8, seed, norm);
        let u = expm(&h.scale(C64::new(0.0, -1.0))).unwrap();
        // Spectral oracle: e^{-iH} = sum_k e^{-i lambda_k} v_k v_k^+ (orthonormal v_k).
        let e = eig(&h, true).unwrap();
        let v = e.eigenvectors.as_ref().unwrap();
        let mut spectral = ComplexMatrix::zeros(8);
        for k in 0..8 {
            let col: Vec<C64> = (0..8).map(|i| v[(i, k)]).collect();
            let nrm: f64 = col.iter().map(|z| z.norm_sqr()).sum();
            let phase = C64::new(0.0, -e.eigenvalues[k].re).exp() / nrm;
            for i in 0..8 {
                for j in 0..8 {
                    spectral[(i, j)] += phase * col[i] * col[j].conj();
                }
            }
        }
        let rel = (&u - &spectral).frobenius_norm() / u.frobenius_norm();
        assert!(rel <= 1e-10, "norm {norm}: spectral deviation {rel:e}");

        // RK4 oracle, column by column, with a step small enough for 1e-10.
        let dt = 2e-4 / norm.max(1.0) * 10.0;
        let mut rk = ComplexMatrix::zeros(8);
        for c in 0..8 {
            let mut e_c = ComplexVector::zeros(8);
            e_c.0[c] = C64::new(1.0, 0.0);
            let out = integrate_schrodinger(&h, &e_c, 1.0, dt).unwrap();
            let last = &out.last().unwrap().1;
            for r in 0..8 {
                rk[(r, c)] = last[r];
            }
        }
        let rel = (&u - &rk).frobenius_norm() / u.frobenius_norm();
        assert!(rel <= 1e-10, "norm {norm}: RK4 deviation {rel:e}");
    }
}
