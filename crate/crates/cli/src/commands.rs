use nhladder::dynamics::{
    dimer_probability, evolve, region_probability, tetramer_probability, uniform_initial_state, SiteColumns,
    Trajectory,
};
use nhladder::hamiltonian::{
    build_cluster_hd, build_cluster_ht, build_hc, build_hd, build_ht, build_moire_h, SiteMap,
};
use nhladder::io;
use nhladder::lattice::{build_couplings, classify_regions, MoireSpec};
use nhladder::linalg::{eig, ComplexMatrix};
use nhladder::spectra::{self, k_grid, phase_diagram, PhaseGridSpec, ScanOptions, REALITY_THRESHOLD};
use nhladder::{ModelTag, Region};

use crate::config::{ClusterKind, Model, RunConfig, System};
use crate::output::Emitter;
use crate::CliError;

pub fn spectrum(cfg: &RunConfig, out: &mut Emitter) -> Result<(), CliError> {
    let m = &cfg.model;
    let p = m.params();
    let model: ModelTag = m.model.into();
    let d = spectra::dispersion(model, &p, &k_grid(cfg.spectrum.k_points))?;
    let scale = p.w.abs().max(p.v.abs()).max(p.kappa.abs()).max(p.kappa_prime.abs()).max(1e-300);
    let threshold = REALITY_THRESHOLD * scale;
    out.emit("dispersion.csv", |w| io::write_dispersion(w, &d, threshold))?;
    let nonreal = d.all_values().iter().filter(|z| z.im.abs() > threshold).count();
    out.note("dispersion_nonreal_levels", nonreal);
    if let Some(dev) = d.kernel_deviation {
        out.note("dispersion_kernel_deviation", io::num(dev));
    }
    if cfg.spectrum.finite {
        let h = match m.model {
            Model::Tetramerized => build_ht(&p)?,
            Model::Dimerized => build_hd(&p)?,
            Model::Crossover => build_hc(&p)?,
        };
        let e = eig(&h, false)?;
        out.emit("eigenvalues.csv", |w| io::write_eigenvalues(w, &e.eigenvalues, threshold))?;
        out.note("finite_max_abs_imag", io::num(e.max_abs_imag()));
    }
    Ok(())
}

pub fn phase(cfg: &RunConfig, out: &mut Emitter) -> Result<(), CliError> {
    let s = &cfg.phase_diagram;
    let model: ModelTag = cfg.model.model.into();
    let coupling = s.coupling.unwrap_or(match cfg.model.model {
        Model::Crossover => cfg.model.kappa_prime,
        _ => cfg.model.kappa,
    });
    let spec = PhaseGridSpec {
        model,
        v_range: (s.v_min, s.v_max),
        w_range: (s.w_min, s.w_max),
        n_v: s.n_v,
        n_w: s.n_w,
        coupling,
        scan: ScanOptions {
            k_points: s.k_points,
            tolerance: s.tolerance,
            gamma_max: s.gamma_max,
            coarse_steps: s.coarse_steps,
        },
    };
    let grid = phase_diagram(&spec)?;
    if cfg.output.format.csv() {
        out.emit("phase_diagram.csv", |w| io::write_phase_diagram(w, &grid))?;
    }
    if cfg.output.format.pgm() {
        out.emit("phase_diagram.pgm", |w| io::phase_diagram_pgm(w, &grid))?;
    }
    out.note("saturated_cells", grid.saturated_count());
    out.note("coupling", io::num(coupling));
    Ok(())
}

struct ClusterCase {
    name: String,
    kind: ClusterKind,
    w: f64,
    gamma: f64,
    kappa: f64,
}

fn builtin_case(n: u8) -> ClusterCase {
    let (kind, w, gamma) = match n {
        1 => (ClusterKind::Tetramer, 0.5, 0.395),
        2 => (ClusterKind::Tetramer, 0.5, 0.505),
        3 => (ClusterKind::Tetramer, 0.5, 0.5),
        4 => (ClusterKind::Dimer, 0.0, 0.395),
        _ => unreachable!("validated"),
    };
    ClusterCase {
        name: format!("case{n}"),
        kind,
        w,
        gamma,
        kappa: 1.0,
    }
}

pub fn cluster(cfg: &RunConfig, out: &mut Emitter) -> Result<(), CliError> {
    let c = &cfg.cluster;
    let mut cases: Vec<ClusterCase> = c.cases.iter().map(|&n| builtin_case(n)).collect();
    if let Some(u) = &c.custom {
        cases.push(ClusterCase {
            name: "custom".into(),
            kind: u.kind,
            w: u.w,
            gamma: u.gamma,
            kappa: u.kappa,
        });
    }
    for case in cases {
        let (h, map) = match case.kind {
            ClusterKind::Tetramer => (build_cluster_ht(case.w, case.gamma, case.kappa), SiteMap::rung_major(2)),
            ClusterKind::Dimer => (build_cluster_hd(case.kappa, case.gamma), SiteMap::rung_major(1)),
        };
        let traj = evolve(&h, &uniform_initial_state(h.dim()), &SiteColumns::from_site_map(&map), c.t_max, c.dt)?;
        let mut rows = Vec::with_capacity(traj.len());
        let mut worst: f64 = 0.0;
        for (t, p) in traj.times.iter().zip(&traj.total_probability) {
            let f = match case.kind {
                ClusterKind::Tetramer => tetramer_probability(case.w, case.gamma, case.kappa, *t),
                ClusterKind::Dimer => dimer_probability(case.kappa, case.gamma, *t)?,
            };
            worst = worst.max((f - p).abs());
            rows.push(vec![*t, f, *p, (f - p).abs()]);
        }
        let file = format!("cluster_{}.csv", case.name);
        out.emit(&file, |w| io::write_columns(w, &["t", "P_formula", "P_numeric", "abs_diff"], &rows))?;
        out.note(&format!("{}_max_abs_diff", case.name), io::num(worst));
        if traj.truncated {
            out.note(&format!("{}_truncated_at", case.name), io::num(*traj.times.last().unwrap()));
        }
    }
    Ok(())
}

struct Moire {
    spec: MoireSpec,
    h: ComplexMatrix,
    table: nhladder::CouplingTable,
}

fn build_moire(cfg: &RunConfig) -> Result<Moire, CliError> {
    let g = &cfg.moire;
    let mut spec = MoireSpec::equal_span(g.resolved_n_sites_1(), g.mismatch, g.kappa0, g.alpha)?;
    spec.coupling_cutoff = g.cutoff;
    let table = build_couplings(&spec)?;
    let h = build_moire_h(&spec, &table, &cfg.model.params())?;
    Ok(Moire { spec, h, table })
}

fn emit_trajectory(cfg: &RunConfig, out: &mut Emitter, traj: &Trajectory) -> Result<(), CliError> {
    let f = cfg.output.format;
    if f.csv() {
        out.emit("trajectory.csv", |w| io::write_trajectory_long(w, traj, false))?;
        out.emit("trajectory_normalized.csv", |w| io::write_trajectory_long(w, traj, true))?;
        out.emit("summary.csv", |w| io::write_trajectory_summary(w, traj))?;
    }
    if f.pgm() {
        out.emit("trajectory.pgm", |w| io::trajectory_pgm(w, traj, false))?;
        out.emit("trajectory_normalized.pgm", |w| io::trajectory_pgm(w, traj, true))?;
    }
    out.note("samples", traj.len());
    out.note("truncated", traj.truncated);
    if let Some(p) = traj.total_probability.last() {
        out.note("final_total_probability", io::num(*p));
    }
    Ok(())
}

pub fn evolve_cmd(cfg: &RunConfig, out: &mut Emitter) -> Result<(), CliError> {
    let e = &cfg.evolve;
    let p = cfg.model.params();
    let len = 2 * p.n_cells;
    let (h, cols) = match e.system {
        System::Tetramerized => (build_ht(&p)?, SiteColumns::from_site_map(&SiteMap::leg_major(len, len))),
        System::Dimerized => (build_hd(&p)?, SiteColumns::from_site_map(&SiteMap::leg_major(len, len))),
        System::Crossover => (build_hc(&p)?, SiteColumns::from_site_map(&SiteMap::leg_major(len, len))),
        System::TetramerCluster => (
            build_cluster_ht(p.w, p.gamma, p.kappa),
            SiteColumns::from_site_map(&SiteMap::rung_major(2)),
        ),
        System::DimerCluster => (
            build_cluster_hd(p.kappa, p.gamma),
            SiteColumns::from_site_map(&SiteMap::rung_major(1)),
        ),
        System::Moire => {
            let m = build_moire(cfg)?;
            out.note("n_sites", format!("{}+{}", m.spec.n_sites_1, m.spec.n_sites_2));
            (m.h, SiteColumns::moire(&m.spec))
        }
    };
    let traj = evolve(&h, &uniform_initial_state(h.dim()), &cols, e.t_max, e.dt)?;
    emit_trajectory(cfg, out, &traj)
}

pub fn moire(cfg: &RunConfig, out: &mut Emitter) -> Result<(), CliError> {
    let g = &cfg.moire;
    let m = build_moire(cfg)?;
    let labels = classify_regions(&m.spec, &m.table, (g.t_low, g.t_high))?;
    out.note("n_sites", format!("{}+{}", m.spec.n_sites_1, m.spec.n_sites_2));
    out.note("registry_period_sites", io::num(m.spec.registry_period()));
    if let Some(p) = labels.fundamental_period(0.8) {
        out.note("label_period_sites", p);
    }
    out.emit("couplings.csv", |w| io::write_couplings(w, &m.table))?;
    out.emit("regions.csv", |w| io::write_regions(w, &labels))?;
    let traj = evolve(&m.h, &uniform_initial_state(m.h.dim()), &SiteColumns::moire(&m.spec), g.t_max, g.dt)?;
    let rp = region_probability(&traj, &labels.labels);
    let rows: Vec<Vec<f64>> = traj.times.iter().zip(&rp).map(|(t, r)| vec![*t, r[0], r[1], r[2]]).collect();
    let header: Vec<String> = std::iter::once("t".to_string())
        .chain(Region::ALL.iter().map(|r| format!("P_{}", r.as_str())))
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    out.emit("region_probability.csv", |w| io::write_columns(w, &header, &rows))?;
    // The (t, j) heatmap, raw and per-slice normalised, is always written for
    // this command in the requested formats.
    emit_trajectory(cfg, out, &traj)
}
