//! Hamiltonian and band-structure invariants.

use std::f64::consts::PI;

use nhladder::hamiltonian::{
    build_cluster_hd, build_cluster_ht, build_hc, build_hd, build_ht, build_moire_h, leg_exchange_blocks,
    symmetry_operators, ModelParams,
};
use nhladder::lattice::{build_couplings, MoireSpec};
use nhladder::linalg::{eig, ComplexMatrix, C64};
use nhladder::spectra::{
    dimer_bands, dimer_energy, dispersion_c, dispersion_t, gamma_c, k_grid, kernel, kernel_c,
    spectral_distance, spectrum_is_real, tetramer_bands, ModelTag, ScanOptions, REALITY_THRESHOLD,
};
use proptest::prelude::*;

fn ladder() -> impl Strategy<Value = ModelParams> {
    (-1.5f64..1.5, -1.5f64..1.5, -1.5f64..1.5, -1.0f64..1.0, -1.0f64..1.0, 2usize..10).prop_map(
        |(w, v, kappa, kappa_prime, gamma, n_cells)| ModelParams {
            w,
            v,
            kappa,
            kappa_prime,
            gamma,
            n_cells,
        },
    )
}

/// Matching distance between a spectrum and its complex conjugate.
fn unpaired(values: &[C64]) -> f64 {
    spectral_distance(values, &values.iter().map(|z| z.conj()).collect::<Vec<_>>())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pt_commutes(p in ladder()) {
        let ops = symmetry_operators(p.n_cells);
        prop_assert!(ops.pt_residual(&build_ht(&p).unwrap()) <= 1e-14);
        prop_assert!(ops.pt_residual(&build_hd(&p).unwrap()) <= 1e-14);
    }

    #[test]
    fn leg_rotation_block_diagonal(p in ladder()) {
        let b = leg_exchange_blocks(&build_ht(&p).unwrap()).unwrap();
        prop_assert!(b.off_block_residual <= 1e-12);
        // [H+, H-] = 0 as operators on the full space: the blocks act on
        // orthogonal sectors, and each is an SSH chain shifted by +-kappa.
        let shift = &b.plus - &b.minus;
        let expected = ComplexMatrix::identity(b.plus.dim()).scale(C64::new(2.0 * p.kappa, 0.0));
        prop_assert!((&shift - &expected).max_abs() <= 1e-14);
    }

    #[test]
    fn folding_matches_closed_form(p in ladder()) {
        let k = k_grid(p.n_cells);
        let ht = eig(&build_ht(&p).unwrap(), false).unwrap().eigenvalues;
        let t: Vec<C64> = k.iter().flat_map(|&kk| tetramer_bands(&p, kk)).collect();
        let hd = eig(&build_hd(&p).unwrap(), false).unwrap().eigenvalues;
        let d: Vec<C64> = k.iter().flat_map(|&kk| dimer_bands(&p, kk)).collect();
        let hc = eig(&build_hc(&p).unwrap(), false).unwrap().eigenvalues;
        let c: Vec<C64> = dispersion_c(&p, &k).unwrap().all_values();
        // Eigenvalues near band EPs carry sqrt(eps) error.
        let tol = |vals: &[C64]| {
            let scale = vals.iter().map(|z| z.norm()).fold(1.0, f64::max);
            1e-6 * scale
        };
        prop_assert!(spectral_distance(&t, &ht) <= tol(&t), "T");
        prop_assert!(spectral_distance(&d, &hd) <= tol(&d), "D");
        prop_assert!(spectral_distance(&c, &hc) <= tol(&c), "C");
    }

    #[test]
    fn dispersions_match_kernels(w in -1.5f64..1.5, v in -1.5f64..1.5, kappa in -1.5f64..1.5, gamma in -1.0f64..1.0) {
        let p = ModelParams { w, v, kappa, kappa_prime: 0.0, gamma, n_cells: 2 };
        for k in k_grid(16) {
            let t = tetramer_bands(&p, k);
            let d = dimer_bands(&p, k);
            for (model, bands, split) in [
                (ModelTag::Tetramerized, t, (t[1] - t[0]).norm()),
                (ModelTag::Dimerized, d, (d[1] - d[0]).norm().min((d[3] - d[2]).norm())),
            ] {
                // Defective k points (band EPs) are only resolved to sqrt(eps).
                if split < 1e-3 {
                    continue;
                }
                let e = eig(&kernel(model, &p, k), false).unwrap().eigenvalues;
                let dev = spectral_distance(&bands, &e);
                prop_assert!(dev <= 1e-10, "{model:?} k = {k}: {dev:e}");
            }
        }
    }

    #[test]
    fn crossover_kernel_pairs(w in -1.5f64..1.5, v in -1.5f64..1.5, kp in -1.0f64..1.0, gamma in -1.0f64..1.0, k in 0.0f64..(2.0 * PI)) {
        let p = ModelParams { w, v, kappa: 0.0, kappa_prime: kp, gamma, n_cells: 2 };
        let e = eig(&kernel_c(&p, k), false).unwrap().eigenvalues;
        let scale = e.iter().map(|z| z.norm()).fold(1.0, f64::max);
        // Defective points limit accuracy to sqrt(eps); generic points reach 1e-12.
        prop_assert!(unpaired(&e) <= 1e-7 * scale);
    }

    #[test]
    fn built_hamiltonians_pair(p in ladder()) {
        for h in [build_ht(&p).unwrap(), build_hd(&p).unwrap(), build_hc(&p).unwrap()] {
            let e = eig(&h, false).unwrap().eigenvalues;
            let scale = e.iter().map(|z| z.norm()).fold(1.0, f64::max);
            prop_assert!(unpaired(&e) <= 1e-6 * scale);
        }
    }
}

#[test]
fn crossover_kernel_pairs_generic_point() {
    let p = ModelParams {
        w: 0.7,
        v: 0.2,
        kappa: 0.0,
        kappa_prime: 0.37,
        gamma: 0.3,
        n_cells: 2,
    };
    for k in k_grid(64) {
        let e = eig(&kernel_c(&p, k), false).unwrap().eigenvalues;
        assert!(unpaired(&e) <= 1e-12, "k = {k}");
    }
}

#[test]
fn spectrum_match_both_sides_of_boundary() {
    for gamma in [0.3, 0.395, 0.45, 0.55, 0.7] {
        let p = ModelParams {
            w: 0.5,
            v: 0.1,
            kappa: 1.0,
            kappa_prime: 0.0,
            gamma,
            n_cells: 20,
        };
        let e = eig(&build_ht(&p).unwrap(), false).unwrap().eigenvalues;
        let analytic: Vec<C64> = k_grid(20).into_iter().flat_map(|k| tetramer_bands(&p, k)).collect();
        let d = spectral_distance(&analytic, &e);
        assert!(d <= 1e-9, "gamma {gamma}: {d:e}");
    }
}

#[test]
fn gap_formula() {
    let p = ModelParams {
        w: 0.5,
        v: 0.1,
        kappa: 1.0,
        kappa_prime: 0.0,
        gamma: 0.395,
        n_cells: 20,
    };
    let blocks = leg_exchange_blocks(&build_ht(&p).unwrap()).unwrap();
    let mut e: Vec<f64> = eig(&blocks.plus, false).unwrap().eigenvalues.iter().map(|z| z.re).collect();
    e.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // Branch separation: lowest level of the upper branch minus highest of the lower.
    let half = e.len() / 2;
    let gap = e[half] - e[half - 1];
    let expected = 2.0 * (0.16f64 - 0.395 * 0.395).sqrt();
    assert!((gap - expected).abs() <= 1e-9, "{gap} vs {expected}");
    assert!((expected - 0.126095).abs() < 1e-6);
    let d = dispersion_t(&p, &k_grid(512)).unwrap();
    let min_gap = d.bands.iter().map(|b| (b[3] - b[2]).norm()).fold(f64::INFINITY, f64::min);
    assert!((min_gap - expected).abs() < 1e-12);
}

#[test]
fn dimer_minimum_by_dense_scan() {
    let min = (0..200_000)
        .map(|m| dimer_energy(0.5, 0.1, 1.0, 2.0 * PI * m as f64 / 200_000.0))
        .fold(f64::INFINITY, f64::min);
    assert!((min - 0.4).abs() < 1e-12);
    let g = gamma_c(ModelTag::Dimerized, 0.1, 0.5, 1.0, &ScanOptions::default()).unwrap();
    assert!((g.value - min).abs() <= 1e-6);
}

#[test]
fn gamma_c_monotonicity_probe() {
    let opts = ScanOptions::default();
    for (v, w) in [(0.1, 0.5), (0.7, 0.2), (1.3, 0.4)] {
        let g = gamma_c(ModelTag::Tetramerized, v, w, 1.0, &opts).unwrap();
        assert!(!g.saturated);
        let thr = REALITY_THRESHOLD * w.max(v).max(1.0);
        let at = |gamma: f64| {
            let p = ModelParams {
                w,
                v,
                kappa: 1.0,
                kappa_prime: 0.0,
                gamma,
                n_cells: 2,
            };
            spectrum_is_real(ModelTag::Tetramerized, &p, opts.k_points, thr).unwrap()
        };
        assert!(at(g.value - 2.0 * opts.tolerance));
        assert!(!at(g.value + 2.0 * opts.tolerance));
    }
}

#[test]
fn crossover_and_dimer_boundaries() {
    let opts = ScanOptions {
        k_points: 128,
        ..ScanOptions::default()
    };
    for w in [0.2, 0.5, 0.9] {
        let g = gamma_c(ModelTag::Crossover, w, w, 0.37, &opts).unwrap();
        assert!(g.value <= 1e-3, "w = v = {w}: {}", g.value);
    }
    // |w + v| = kappa lines close the dimer gap.
    for (v, w) in [(0.3, 0.7), (0.5, 0.5), (0.9, 0.1)] {
        let g = gamma_c(ModelTag::Dimerized, v, w, 1.0, &opts).unwrap();
        assert!(g.value <= 1e-5, "(v, w) = ({v}, {w}): {}", g.value);
    }
}

#[test]
fn kernels_transpose_under_k_reflection() {
    let p = ModelParams::default();
    for model in [ModelTag::Tetramerized, ModelTag::Dimerized, ModelTag::Crossover] {
        for k in [0.3, 1.7, 2.9] {
            let a = kernel(model, &p, -k);
            let b = kernel(model, &p, k).transpose();
            let ea = eig(&a, false).unwrap().eigenvalues;
            let eb = eig(&b, false).unwrap().eigenvalues;
            assert!(spectral_distance(&ea, &eb) < 1e-12, "{model:?}");
        }
    }
}

#[test]
fn clusters_pair_and_moire_is_complex_symmetric() {
    let e = eig(&build_cluster_ht(0.5, 0.505, 1.0), false).unwrap().eigenvalues;
    assert!(unpaired(&e) < 1e-12);
    let e = eig(&build_cluster_hd(0.3, 0.5), false).unwrap().eigenvalues;
    assert!((e[0].im.abs() - 0.4).abs() < 1e-12 && unpaired(&e) < 1e-12);
    let spec = MoireSpec::equal_span(50, 1.0 / 25.0, 1.0, 2.0).unwrap();
    let table = build_couplings(&spec).unwrap();
    let h = build_moire_h(&spec, &table, &ModelParams::default()).unwrap();
    // Inter-chain bonds join both sublattice parities, so the moire ladder
    // has no antiunitary symmetry and its levels need not pair.
    assert_eq!(h, h.transpose());
    let e = eig(&h, true).unwrap();
    assert_eq!(e.eigenvalues.len(), 50 + 52);
    assert!(e.max_residual() < 1e-12);
}
