//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! (run with `cargo test --test acceptance -- --nocapture` to see them all).
//! Every tolerance is pinned here; the scenario files live in `configs/`.

use std::path::{Path, PathBuf};
use std::time::Instant;

use stiffhs::barrier::{
    halton, make_decay_supersolution, make_expanding_subbarrier, make_wt, verify_barrier,
    BarrierSide,
};
use stiffhs::cli::{dispatch, parse_scenario, Command, DispatchOptions};
use stiffhs::front::run_front;
use stiffhs::grid::{Geometry, RadialGrid};
use stiffhs::harness::{
    band_measure_spacetime, comparison_check, l1_contraction_check, m_sweep,
    perimeter_series_2d,
};
use stiffhs::model::{ExteriorDensity, ExteriorProfile, GrowthLaw, Stiffness};
use stiffhs::pme::{self, Barenblatt, PmeState, SolverConfig, Trajectory};
use stiffhs::scenario::{RegionConfig, Scenario};

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn load(name: &str) -> Scenario {
    let (scenario, _warnings) = parse_scenario(&config_path(name)).expect("config must parse");
    scenario
}

fn report(criterion: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "acceptance {criterion:2} {:<28} {} ({detail})",
        name,
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} ({name}) failed: {detail}");
}

/// Least-squares slope of (t, r) samples with `lo <= t <= hi`.
fn window_slope(series: &[(f64, f64)], lo: f64, hi: f64) -> f64 {
    let pts: Vec<(f64, f64)> =
        series.iter().copied().filter(|&(t, _)| t >= lo && t <= hi).collect();
    let n = pts.len() as f64;
    assert!(n >= 2.0, "not enough samples in [{lo}, {hi}]");
    let (mut st, mut sr, mut stt, mut str_) = (0.0, 0.0, 0.0, 0.0);
    for &(t, r) in &pts {
        st += t;
        sr += r;
        stt += t * t;
        str_ += t * r;
    }
    (n * str_ - st * sr) / (n * stt - st * st)
}

fn support_series(traj: &Trajectory) -> Vec<(f64, f64)> {
    traj.diagnostics.iter().map(|d| (d.t, d.support_radius)).collect()
}

#[test]
fn criterion_01_barenblatt_oracle() {
    let start = Instant::now();
    // 1D (radial n = 1), m = 2, G off, 400 cells; start from the exact
    // profile at t = 0.5 and march to t = 1.
    let m = 2.0;
    let bb = Barenblatt::new(m, 1.0, 1).unwrap();
    let grid = RadialGrid::new(1, 0.0, 2.6, 400).unwrap();
    let geom = Geometry::Radial(grid.clone());
    let law = GrowthLaw::constant_test(1e-300, 1.0).unwrap(); // G off
    let ext = ExteriorDensity::new(ExteriorProfile::Zero, &law).unwrap();
    let t0 = 0.5;
    let rho0: Vec<f64> =
        (0..grid.n_cells).map(|j| bb.density_at_radius(grid.center(j), t0).unwrap()).collect();
    let mut state =
        PmeState::new(geom.clone(), rho0, Stiffness::new(m).unwrap(), law, ext).unwrap();
    state.t = t0;
    let times: Vec<f64> = (0..11).map(|i| 0.5 + 0.5 * i as f64 / 10.0).collect();
    let traj = pme::run_from(state, times, &SolverConfig::default(), 1e-3, 4).unwrap();

    let mut worst = 0.0f64;
    for st in &traj.states {
        let exact: Vec<f64> =
            (0..grid.n_cells).map(|j| bb.density_at_radius(grid.center(j), st.t).unwrap()).collect();
        let diff: Vec<f64> = st.rho.iter().zip(&exact).map(|(a, b)| (a - b).abs()).collect();
        let rel = grid.integrate(&diff) / 1.0; // exact total mass is 1
        worst = worst.max(rel);
    }
    let elapsed = start.elapsed();
    let pass = worst < 0.01 && elapsed.as_secs_f64() < 10.0;
    report(
        1,
        "barenblatt-oracle",
        pass,
        &format!("max rel L1 error {worst:.2e} (tol 1e-2), elapsed {elapsed:.2?} (limit 10 s)"),
    );
}

#[test]
fn criterion_02_mass_balance() {
    let start = Instant::now();
    let scenario = load("standard_radial.json");
    let config = SolverConfig::from_scenario(&scenario);
    let traj = pme::run(&scenario, 40.0, &config).unwrap();
    let mass0 = traj.diagnostics[0].mass;
    let gained = traj.diagnostics.last().unwrap().mass - mass0;
    let quad = traj.source_integral_quadrature();
    let rel = (gained - quad).abs() / mass0;
    let elapsed = start.elapsed();
    let pass = rel < 1e-3 && elapsed.as_secs_f64() < 30.0;
    report(
        2,
        "mass-balance",
        pass,
        &format!("|dM - source quadrature|/M0 = {rel:.2e} (tol 1e-3), elapsed {elapsed:.2?} (limit 30 s)"),
    );
}

#[test]
fn criterion_03_time_monotonicity() {
    let scenario = load("standard_radial.json");
    let config = SolverConfig::from_scenario(&scenario);
    let mut worst = f64::INFINITY;
    for &m in &[40.0, 80.0] {
        let traj = pme::run(&scenario, m, &config).unwrap();
        for w in traj.states.windows(2) {
            for (b, a) in w[1].rho.iter().zip(&w[0].rho) {
                worst = worst.min(b - a);
            }
        }
    }
    let pass = worst >= -1e-10;
    report(
        3,
        "time-monotonicity",
        pass,
        &format!("cellwise min increment {worst:.2e} (tol -1e-10), m in {{40, 80}}"),
    );
}

#[test]
fn criterion_04_l1_contraction() {
    let scenario = load("standard_radial.json");
    let mut perturbed = scenario.clone();
    perturbed.omega0 = RegionConfig::Ball { radius: 0.9 };
    let config = SolverConfig::from_scenario(&scenario);
    let a = pme::run(&scenario, 40.0, &config).unwrap();
    let b = pme::run(&perturbed, 40.0, &config).unwrap();
    let (series, flagged) = l1_contraction_check(&a, &b).unwrap();
    let max_ratio = series.iter().map(|&(_, r)| r).fold(0.0f64, f64::max);
    let pass = !flagged && max_ratio <= 1.01;
    report(4, "l1-contraction", pass, &format!("max ratio {max_ratio:.6} (tol 1.01), m = 40"));
}

#[test]
fn criterion_05_aronson_benilan() {
    let scenario = load("standard_radial.json");
    let g0 = scenario.growth.g0;
    let config = SolverConfig::from_scenario(&scenario);
    let mut detail = String::new();
    let mut pass = true;
    for &m in &[40.0, 80.0] {
        let traj = pme::run(&scenario, m, &config).unwrap();
        let mut worst_margin = f64::INFINITY;
        for d in &traj.diagnostics {
            if d.t >= 0.1 {
                let bound = -1.0 / ((m - 1.0) * d.t) - 0.1 * g0;
                worst_margin = worst_margin.min(d.ab_min - bound);
            }
        }
        pass &= worst_margin >= 0.0;
        detail.push_str(&format!("m={m}: margin {worst_margin:.3e}; "));
    }

    // G-off control: the scaled minimum stays above -(1 + 0.1) on a
    // self-similar run.
    let m = 2.0;
    let bb = Barenblatt::new(m, 1.0, 1).unwrap();
    let grid = RadialGrid::new(1, 0.0, 2.6, 200).unwrap();
    let geom = Geometry::Radial(grid.clone());
    let law = GrowthLaw::constant_test(1e-300, 1.0).unwrap();
    let ext = ExteriorDensity::new(ExteriorProfile::Zero, &law).unwrap();
    let rho0: Vec<f64> =
        (0..grid.n_cells).map(|j| bb.density_at_radius(grid.center(j), 0.5).unwrap()).collect();
    let mut state = PmeState::new(geom, rho0, Stiffness::new(m).unwrap(), law, ext).unwrap();
    state.t = 0.5;
    let times: Vec<f64> = (0..6).map(|i| 0.5 + 0.5 * i as f64 / 5.0).collect();
    let traj = pme::run_from(state, times, &SolverConfig::default(), 1e-3, 4).unwrap();
    let mut worst_scaled = f64::INFINITY;
    for d in &traj.diagnostics {
        worst_scaled = worst_scaled.min(d.ab_min * (m - 1.0) * d.t);
    }
    pass &= worst_scaled >= -1.1;
    detail.push_str(&format!("G-off scaled min {worst_scaled:.3}"));
    report(5, "aronson-benilan", pass, &detail);
}

#[test]
fn criterion_06_front_closed_form() {
    let start = Instant::now();
    // Constant-test G, rho_E = 0, n = 2: R(t) = R0 e^{g0 t / n}.
    let mut scenario = load("sweep_constant.json");
    scenario.geometry = stiffhs::scenario::GeometryConfig::Radial {
        dim: 2,
        r_outer: 4.0,
        cells: 256,
    };
    scenario.horizon = 1.0;
    scenario.snapshots = 11;
    scenario.front_dt = 1e-3;
    let traj = run_front(&scenario).unwrap();
    let r_final = traj.states.last().unwrap().outer_radius();
    let expected = 0.5f64.exp();
    let rel = (r_final - expected).abs() / expected;
    let elapsed = start.elapsed();
    let pass = rel < 5e-3 && elapsed.as_secs_f64() < 5.0;
    report(
        6,
        "front-closed-form",
        pass,
        &format!(
            "R(1) = {r_final:.6} vs e^0.5 = {expected:.6}, rel {rel:.2e} (tol 5e-3), elapsed {elapsed:.2?} (limit 5 s)"
        ),
    );
}

#[test]
fn criterion_07_stiff_limit_convergence() {
    let start = Instant::now();
    let scenario = load("sweep_constant.json");
    let report_data = m_sweep(&scenario, 4).unwrap();
    let elapsed = start.elapsed();

    let errs: Vec<f64> = report_data.per_m.iter().map(|p| p.max_radius_rel_error).collect();
    let n = errs.len();
    let trend_ok = errs[n - 1] <= errs[n - 2] && errs[n - 2] <= errs[n - 3];
    let final_ok = errs[n - 1] < 0.05;

    // Shrunken-set errors at m = 80, t = 0.5.
    let at = report_data
        .entries
        .iter()
        .find(|e| e.m == 80.0 && (e.t - 0.5).abs() < 1e-12)
        .expect("sweep must include (m=80, t=0.5)");
    let inner_ok = at.inner_error < 0.02;
    let outer_ok = at.outer_error < 0.05;

    let pass =
        trend_ok && final_ok && inner_ok && outer_ok && elapsed.as_secs_f64() < 300.0;
    report(
        7,
        "stiff-limit-convergence",
        pass,
        &format!(
            "radius errors {errs:.3?} (last < 0.05, nonincreasing), inner {:.4} (tol 0.02), outer {:.4} (tol 0.05), elapsed {elapsed:.2?} (limit 300 s)",
            at.inner_error, at.outer_error
        ),
    );
}

#[test]
fn criterion_08_velocity_acceleration() {
    let scenario = load("speed_pair.json");
    let mut base = scenario.clone();
    base.exterior = ExteriorProfile::Zero;
    let config = SolverConfig::from_scenario(&scenario);
    let accel = pme::run(&scenario, 80.0, &config).unwrap();
    let vacuum = pme::run(&base, 80.0, &config).unwrap();
    // One least-squares slope across the early window averages out the
    // cell-crossing wobble of the discrete front reading.
    let (lo, hi) = (0.01, 0.06);
    let v_accel = window_slope(&support_series(&accel), lo, hi);
    let v_base = window_slope(&support_series(&vacuum), lo, hi);
    let ratio = v_accel / v_base;
    let pass = (1.8..=2.2).contains(&ratio);
    report(
        8,
        "velocity-acceleration",
        pass,
        &format!("early-time speed ratio {ratio:.4} (window [1.8, 2.2]), m = 80"),
    );
}

#[test]
fn criterion_09_nucleation() {
    let scenario = load("nucleation.json");
    let ext = scenario.exterior_density().unwrap();
    let traj = run_front(&scenario).unwrap();
    let t_star = (1.0f64 / 0.95).ln();
    let sat = traj.saturation_time.expect("the domain must saturate");
    let timing_ok = sat >= t_star - 1e-12 && sat <= t_star + scenario.front_dt + 1e-12;

    // {rho_E >= 1} inside the closure of the positive set at every output.
    let mut containment_ok = true;
    for st in &traj.states {
        let samples = 400;
        for i in 0..=samples {
            let r = st.r_domain * i as f64 / samples as f64;
            if ext.at_radius(r, st.t).unwrap() >= 1.0 && !(st.saturated || st.covers(r)) {
                containment_ok = false;
            }
        }
    }
    let pass = timing_ok && containment_ok;
    report(
        9,
        "nucleation",
        pass,
        &format!(
            "saturation at {sat:.6} vs t* = {t_star:.6} (within one step {}), containment {containment_ok}",
            scenario.front_dt
        ),
    );
}

#[test]
fn criterion_10_barrier_identities() {
    let g0 = 1.0;
    let law = GrowthLaw::linear(g0, 1.0).unwrap();
    let ext = ExteriorDensity::new(ExteriorProfile::Zero, &law).unwrap();
    let wt = make_wt(1.5, 0.5, 2, g0).unwrap();

    // Stencil identity -lap_h W_T = 2 G(0) and boundary speed ratio 4, at
    // 10^4 low-discrepancy sample points.
    let samples = 10_000;
    let mut lap_dev = 0.0f64;
    let mut ratio_dev = 0.0f64;
    for i in 0..samples {
        let t = 0.5 * halton(i, 2);
        let r0 = wt.zero_radius(t).unwrap();
        let x = [(2.0 * halton(i, 3) - 1.0) * r0, (2.0 * halton(i, 5) - 1.0) * r0];
        lap_dev = lap_dev.max((-wt.discrete_laplacian(&x, t, 0.05) - 2.0 * g0).abs());
        let ratio = wt.time_derivative(r0, t) / wt.gradient_norm(r0, t).powi(2);
        ratio_dev = ratio_dev.max((ratio - 4.0).abs());
    }
    let identities_ok = lap_dev < 1e-9 && ratio_dev < 1e-9;

    let sub = make_expanding_subbarrier(0.5, vec![0.0, 0.0], 2, &law).unwrap();
    let decay = make_decay_supersolution(80.0, 2.0, &law).unwrap();
    let sub_report = verify_barrier(&sub, BarrierSide::Sub, &law, &ext, samples).unwrap();
    let decay_report = verify_barrier(&decay, BarrierSide::Super, &law, &ext, samples).unwrap();
    let super_report = verify_barrier(&wt, BarrierSide::Super, &law, &ext, samples).unwrap();
    let negative = verify_barrier(&wt, BarrierSide::Sub, &law, &ext, samples).unwrap();

    let pass = identities_ok
        && sub_report.pass
        && decay_report.pass
        && super_report.pass
        && !negative.pass
        && sub_report.interior_worst > 0.0
        && decay_report.interior_worst > 0.0;
    report(
        10,
        "barrier-identities",
        pass,
        &format!(
            "lap dev {lap_dev:.2e}, speed-ratio dev {ratio_dev:.2e} (tol 1e-9); sub margin {:.2e}, decay margin {:.2e}, negative control pass={}",
            sub_report.interior_worst.min(sub_report.boundary_worst),
            decay_report.interior_worst,
            negative.pass
        ),
    );
}

#[test]
fn criterion_11_discrete_comparison() {
    let scenario = load("standard_radial.json");
    let mut bigger = scenario.clone();
    bigger.omega0 = RegionConfig::Ball { radius: 1.2 };
    let config = SolverConfig::from_scenario(&scenario);
    let a = pme::run(&scenario, 40.0, &config).unwrap();
    let b = pme::run(&bigger, 40.0, &config).unwrap();
    let (ok, worst) = comparison_check(&a, &b).unwrap();
    report(
        11,
        "discrete-comparison",
        ok,
        &format!("worst ordering violation {worst:.2e} (tol 1e-12), m = 40"),
    );
}

#[test]
fn criterion_12_perimeter_diagnostic() {
    let scenario = load("disc_plane.json");
    let eps = scenario.support_threshold();
    let config = SolverConfig::from_scenario(&scenario);
    let traj = pme::run(&scenario, 40.0, &config).unwrap();
    let series = perimeter_series_2d(&traj, eps).unwrap();

    // Radial reference front on the same scenario.
    let mut radial = scenario.clone();
    radial.geometry = stiffhs::scenario::GeometryConfig::Radial {
        dim: 2,
        r_outer: 3.4,
        cells: 108,
    };
    let reference = run_front(&radial).unwrap();
    let mut worst = 0.0f64;
    for (&(_, per), (_, r_ref)) in series.iter().zip(reference.outer_radius_series()) {
        let expected = 2.0 * std::f64::consts::PI * r_ref;
        worst = worst.max((per - expected).abs() / expected);
    }
    let perimeter_ok = worst < 0.10;

    // Boundary-band space-time measure shrinks by >= 1.5x under simultaneous
    // (eps, dx) halving.
    let band = band_measure_spacetime(&traj, eps);
    let mut refined = scenario.clone();
    refined.geometry =
        stiffhs::scenario::GeometryConfig::Plane { half_width: 3.4, cells: 216 };
    let traj_fine = pme::run(&refined, 40.0, &config).unwrap();
    let band_fine = band_measure_spacetime(&traj_fine, eps / 2.0);
    let ratio = band / band_fine;
    let band_ok = ratio >= 1.5;

    report(
        12,
        "perimeter-diagnostic",
        perimeter_ok && band_ok,
        &format!(
            "max perimeter deviation {worst:.4} (tol 0.10), band ratio {ratio:.3} (min 1.5)"
        ),
    );
}

#[test]
fn criterion_13_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let (scenario, _) = parse_scenario(&config_path("standard_radial.json")).unwrap();
    let mut quick = scenario;
    quick.snapshots = 6;
    quick.horizon = 0.05;
    let opts = DispatchOptions { m_list: Some(vec![40.0]), threads: None };

    let mut pass = true;
    let mut detail = String::new();
    for (cmd, files) in [
        (Command::PmeRun, vec!["snapshots.csv", "diagnostics.csv"]),
        (Command::FrontRun, vec!["front.csv"]),
    ] {
        let dir_a = dispatch(cmd, &quick, &tmp.path().join("a"), &opts).unwrap();
        let dir_b = dispatch(cmd, &quick, &tmp.path().join("b"), &opts).unwrap();
        for name in files {
            let a = std::fs::read(dir_a.join(name)).unwrap();
            let b = std::fs::read(dir_b.join(name)).unwrap();
            let same = a == b;
            pass &= same;
            detail.push_str(&format!("{name}: {} bytes {}; ", a.len(), if same { "==" } else { "!=" }));
        }
    }
    report(13, "determinism", pass, &detail);
}
