//! Command dispatch: scenario parsing with strict validation, one output
//! directory per run (named by scenario hash and command), and the manifest.
//! Partial outputs are removed when a run fails.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::barrier::{
    halton, make_decay_supersolution, make_expanding_subbarrier, make_wt, verify_barrier,
    BarrierSide, VerifyReport,
};
use crate::error::{Error, Result};
use crate::front::run_front;
use crate::harness::{
    band_measure_spacetime, l1_contraction_check, m_sweep, perimeter_series_2d,
};
use crate::model::Stiffness;
use crate::output::{
    self, front_csv, json_pretty, scenario_hash, series_csv, snapshot_csv, sweep_errors_csv,
    unix_ms, ManifestEntry, RunManifest,
};
use crate::pme::{self, SolverConfig};
use crate::scenario::{RegionConfig, Scenario};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    PmeRun,
    FrontRun,
    Sweep,
    Barriers,
    Contraction,
    Perimeter,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::PmeRun => "pme-run",
            Command::FrontRun => "front-run",
            Command::Sweep => "sweep",
            Command::Barriers => "barriers",
            Command::Contraction => "contraction",
            Command::Perimeter => "perimeter",
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct DispatchOptions {
    /// Replaces the scenario's m list.
    pub m_list: Option<Vec<f64>>,
    /// Worker threads for per-m parallelism (default: one per m).
    pub threads: Option<usize>,
}

/// Reads and validates a scenario file. The truncation-safety bound is
/// recomputed and enforced, auto-expanding the outer radius with a warning
/// when violated; all other constraint violations are hard errors, listed
/// together. Unknown keys are rejected by the parser.
pub fn parse_scenario(path: &Path) -> Result<(Scenario, Vec<String>)> {
    let text = fs::read_to_string(path)?;
    let mut scenario: Scenario = serde_json::from_str(&text)?;
    let mut warnings = scenario.validate_core()?;
    if let Some(required) = scenario.required_outer_radius() {
        if scenario.domain_radius() < required {
            if let Some(msg) = scenario.expand_to_truncation_bound() {
                warnings.push(format!("truncation-safety: {msg}"));
            }
        }
    } else {
        warnings.push(
            "truncation-safety: exterior density does not decay below 1/2; bound uncertifiable"
                .into(),
        );
    }
    Ok((scenario, warnings))
}

#[derive(Serialize)]
struct BarrierIdentityChecks {
    samples: usize,
    /// Max |(-lap_h W_T) - 2 g0| over Halton samples (5-point stencil).
    wt_discrete_laplacian_max_dev: f64,
    /// Max |dt W_T / |DW_T|^2 - 4| on the zero set.
    wt_speed_ratio_max_dev: f64,
}

#[derive(Serialize)]
struct BarrierReport {
    identities: BarrierIdentityChecks,
    reports: Vec<VerifyReport>,
    negative_control: VerifyReport,
    notes: Vec<String>,
    all_pass: bool,
}

#[derive(Serialize)]
struct ContractionReport {
    m: f64,
    max_ratio: f64,
    flagged: bool,
    perturbed_omega0_scale: f64,
}

#[derive(Serialize)]
struct PerimeterReport {
    m: f64,
    eps: f64,
    /// Max relative deviation of the marching-squares perimeter from the
    /// radial reference `2 pi R(t)` over positive-radius snapshots.
    max_rel_perimeter_dev: f64,
    band_measure: f64,
    band_measure_refined: f64,
    /// Coarse/refined band ratio under simultaneous (eps, dx) halving.
    band_ratio: f64,
}

/// Runs one command against a parsed scenario, writing its outputs plus the
/// run manifest into `out_dir/<hash8>-<command>/`. Returns the run directory.
pub fn dispatch(
    cmd: Command,
    scenario: &Scenario,
    out_dir: &Path,
    opts: &DispatchOptions,
) -> Result<PathBuf> {
    let mut scenario = scenario.clone();
    if let Some(list) = &opts.m_list {
        scenario.m_list = list.clone();
    }
    scenario.validate_core()?;
    for &m in &scenario.m_list {
        Stiffness::new(m)?;
    }

    let hash = scenario_hash(&scenario);
    let run_dir = out_dir.join(format!("{}-{}", &hash[..8], cmd.name()));
    fs::create_dir_all(&run_dir)?;
    let started = unix_ms();

    let mut entries: Vec<ManifestEntry> = Vec::new();
    let result = run_command(cmd, &scenario, &run_dir, opts, &mut entries);
    if let Err(e) = result {
        // No partial outputs on failure.
        let _ = fs::remove_dir_all(&run_dir);
        return Err(e);
    }

    let manifest = RunManifest {
        tool_version: crate::VERSION.to_string(),
        command: cmd.name().to_string(),
        scenario_name: scenario.name.clone(),
        scenario_hash: hash,
        started_unix_ms: started,
        finished_unix_ms: unix_ms(),
        outputs: entries,
    };
    fs::write(run_dir.join("manifest.json"), json_pretty(&manifest))?;
    Ok(run_dir)
}

fn run_command(
    cmd: Command,
    scenario: &Scenario,
    run_dir: &Path,
    opts: &DispatchOptions,
    entries: &mut Vec<ManifestEntry>,
) -> Result<()> {
    match cmd {
        Command::PmeRun => {
            scenario.validate()?;
            let m = *scenario
                .m_list
                .first()
                .ok_or_else(|| Error::Domain("pme-run needs at least one m value".into()))?;
            let config = SolverConfig::from_scenario(scenario);
            let traj = pme::run(scenario, m, &config)?;
            output::write_output(run_dir, "snapshots.csv", &snapshot_csv(&traj), entries)?;
            output::write_output(
                run_dir,
                "diagnostics.csv",
                &output::diagnostics_csv(&traj),
                entries,
            )?;
        }
        Command::FrontRun => {
            let traj = run_front(scenario)?;
            output::write_output(run_dir, "front.csv", &front_csv(&traj), entries)?;
        }
        Command::Sweep => {
            let threads = opts.threads.unwrap_or(scenario.m_list.len());
            let report = m_sweep(scenario, threads)?;
            output::write_output(run_dir, "sweep_report.json", &json_pretty(&report), entries)?;
            output::write_output(run_dir, "errors.csv", &sweep_errors_csv(&report), entries)?;
        }
        Command::Barriers => {
            let report = barrier_report(scenario)?;
            output::write_output(run_dir, "barrier_report.json", &json_pretty(&report), entries)?;
            if !report.all_pass {
                return Err(Error::Numerical {
                    t: 0.0,
                    reason: "barrier verification failed".into(),
                    dump: json_pretty(&report),
                });
            }
        }
        Command::Contraction => {
            let m = *scenario
                .m_list
                .first()
                .ok_or_else(|| Error::Domain("contraction needs at least one m value".into()))?;
            scenario.validate()?;
            let scale = 0.9;
            let mut perturbed = scenario.clone();
            perturbed.omega0 = match scenario.omega0 {
                RegionConfig::Ball { radius } => RegionConfig::Ball { radius: radius * scale },
                RegionConfig::Annulus { r_inner, r_outer } => RegionConfig::Annulus {
                    r_inner,
                    r_outer: r_inner + (r_outer - r_inner) * scale,
                },
                RegionConfig::Empty => {
                    return Err(Error::Domain(
                        "contraction needs a nonempty initial region to perturb".into(),
                    ))
                }
            };
            let config = SolverConfig::from_scenario(scenario);
            let a = pme::run(scenario, m, &config)?;
            let b = pme::run(&perturbed, m, &config)?;
            let (series, flagged) = l1_contraction_check(&a, &b)?;
            let max_ratio = series.iter().map(|&(_, r)| r).fold(0.0f64, f64::max);
            output::write_output(
                run_dir,
                "contraction.csv",
                &series_csv("t,ratio", &series),
                entries,
            )?;
            output::write_output(
                run_dir,
                "contraction_report.json",
                &json_pretty(&ContractionReport {
                    m,
                    max_ratio,
                    flagged,
                    perturbed_omega0_scale: scale,
                }),
                entries,
            )?;
        }
        Command::Perimeter => {
            let report = perimeter_command(scenario, run_dir, entries)?;
            output::write_output(
                run_dir,
                "perimeter_report.json",
                &json_pretty(&report),
                entries,
            )?;
        }
    }
    Ok(())
}

fn barrier_report(scenario: &Scenario) -> Result<BarrierReport> {
    let law = scenario.law()?;
    let ext = scenario.exterior_density()?;
    let dim = scenario.dim();
    let g0 = law.g0;
    let samples = 10_000;
    let mut notes = Vec::new();

    let radius = scenario.omega0.outer_radius().max(1.0);
    let horizon = scenario.horizon.clamp(1e-3, 1.0);
    let wt = make_wt(radius, horizon, dim, g0)?;

    // Stencil identities of the expanding superbarrier.
    let mut lap_dev = 0.0f64;
    let mut speed_dev = 0.0f64;
    let h = 0.05 * radius;
    for i in 0..samples {
        let t = halton(i, 2) * horizon;
        let r0 = wt.zero_radius(t).expect("superbarrier has a zero set");
        let x = [(2.0 * halton(i, 3) - 1.0) * r0, (2.0 * halton(i, 5) - 1.0) * r0];
        lap_dev = lap_dev.max((-wt.discrete_laplacian(&x, t, h) - 2.0 * g0).abs());
        let ratio = wt.time_derivative(r0, t) / wt.gradient_norm(r0, t).powi(2);
        speed_dev = speed_dev.max((ratio - 4.0).abs());
    }

    let mut reports = vec![verify_barrier(&wt, BarrierSide::Super, &law, &ext, samples)?];

    let sub = make_expanding_subbarrier(0.5, vec![0.0; dim as usize], dim, &law)?;
    reports.push(verify_barrier(&sub, BarrierSide::Sub, &law, &ext, samples)?);

    if law.is_decreasing() {
        let m = scenario.m_list.last().copied().unwrap_or(40.0);
        let decay = make_decay_supersolution(m, 2.0 * law.p_max, &law)?;
        reports.push(verify_barrier(&decay, BarrierSide::Super, &law, &ext, samples)?);
    } else {
        notes.push(
            "decay supersolution skipped: the constant-test growth law has no decay constant"
                .into(),
        );
    }

    // Negative control: the superbarrier checked with reversed inequalities.
    let negative_control = verify_barrier(&wt, BarrierSide::Sub, &law, &ext, samples)?;

    let identities = BarrierIdentityChecks {
        samples,
        wt_discrete_laplacian_max_dev: lap_dev,
        wt_speed_ratio_max_dev: speed_dev,
    };
    let all_pass = reports.iter().all(|r| r.pass)
        && !negative_control.pass
        && lap_dev < 1e-9
        && speed_dev < 1e-9;
    Ok(BarrierReport { identities, reports, negative_control, notes, all_pass })
}

fn perimeter_command(
    scenario: &Scenario,
    run_dir: &Path,
    entries: &mut Vec<ManifestEntry>,
) -> Result<PerimeterReport> {
    use crate::scenario::GeometryConfig;
    let GeometryConfig::Plane { half_width, cells } = scenario.geometry else {
        return Err(Error::Unsupported("the perimeter study requires a planar scenario".into()));
    };
    scenario.validate()?;
    let m = *scenario
        .m_list
        .last()
        .ok_or_else(|| Error::Domain("perimeter needs at least one m value".into()))?;
    let eps = scenario.support_threshold();
    let config = SolverConfig::from_scenario(scenario);
    let traj = pme::run(scenario, m, &config)?;
    let series = perimeter_series_2d(&traj, eps)?;
    output::write_output(run_dir, "perimeter.csv", &series_csv("t,perimeter", &series), entries)?;

    // Radial reference for the same scenario.
    let mut radial = scenario.clone();
    radial.geometry = GeometryConfig::Radial { dim: 2, r_outer: half_width, cells };
    let reference = run_front(&radial)?;
    let mut max_dev = 0.0f64;
    for (&(_, per), (_, r_ref)) in series.iter().zip(reference.outer_radius_series()) {
        if r_ref > 0.0 {
            let expected = 2.0 * std::f64::consts::PI * r_ref;
            max_dev = max_dev.max((per - expected).abs() / expected);
        }
    }

    // Boundary-band refinement study: halve eps and dx together.
    let band = band_measure_spacetime(&traj, eps);
    let mut refined = scenario.clone();
    refined.geometry = GeometryConfig::Plane { half_width, cells: cells * 2 };
    refined.support_threshold = Some(eps / 2.0);
    let traj_fine = pme::run(&refined, m, &config)?;
    let band_fine = band_measure_spacetime(&traj_fine, eps / 2.0);

    Ok(PerimeterReport {
        m,
        eps,
        max_rel_perimeter_dev: max_dev,
        band_measure: band,
        band_measure_refined: band_fine,
        band_ratio: if band_fine > 0.0 { band / band_fine } else { f64::INFINITY },
    })
}
