//! Orchestration of the stiff-limit experiments: per-m sweeps against the
//! front reference, sup-convolution, L1 contraction and comparison checks,
//! perimeter estimates of the positive set, and the front velocity-law error.
//!
//! "Away from the front" is operationalized as a margin of `margin_cells`
//! grid cells around the reference front (a config knob, reported alongside
//! the errors). Front speeds are read from the thresholded support by a
//! least-squares slope over a 5-snapshot window; raw differencing is too
//! noisy. The sweep shares one `dx` across all m so that m-trends are not
//! confounded; `dt` varies per the step-size rule.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::front::{run_front, FrontTrajectory};
use crate::grid::{unit_sphere_area, Geometry, Grid2d};
use crate::pme::{self, SolverConfig, Trajectory};
use crate::scenario::Scenario;

/// Snapshot window of the least-squares front-speed estimator.
const SPEED_WINDOW: usize = 5;

/// One (m, t) row of the sweep error tables.
#[derive(Clone, Debug, Serialize)]
pub struct SweepEntry {
    pub m: f64,
    pub t: f64,
    pub support_radius: f64,
    pub reference_radius: f64,
    /// `|R_m - R| / R`; absolute when the reference front is empty.
    pub radius_rel_error: f64,
    /// `sup |rho_m - 1|` on the inner shrunken set.
    pub inner_error: f64,
    /// `sup |p_m - p_ref|` on the inner shrunken set.
    pub pressure_error: f64,
    /// `sup |rho_m - rho_E|` on the outer shrunken set.
    pub outer_error: f64,
    pub ab_min: f64,
    pub mass: f64,
    pub max_p: f64,
}

/// Per-m reduction of the sweep.
#[derive(Clone, Debug, Serialize)]
pub struct MSummary {
    pub m: f64,
    /// Max relative support-radius error over `t >= 0.1 T`.
    pub max_radius_rel_error: f64,
    pub inner_error_final: f64,
    pub pressure_error_final: f64,
    pub outer_error_final: f64,
    /// Max contraction ratio against a run from a shrunken initial region.
    pub contraction_max_ratio: f64,
    /// Cellwise time-monotonicity of the run (tolerance -1e-10).
    pub monotone_in_time: bool,
    /// `m (1-delta)^m ||D^2 rho_E0,m||_inf` for the mollified exterior data;
    /// reported (it should shrink with m), not enforced.
    pub initial_condition_product: f64,
    pub steps: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub scenario_name: String,
    pub scenario_hash: String,
    pub dim: u32,
    pub dx: f64,
    pub cells: usize,
    pub margin: f64,
    pub support_threshold: f64,
    /// Slope of the growth law at zero pressure (reported, not asserted).
    pub g_prime0: f64,
    pub m_values: Vec<f64>,
    pub entries: Vec<SweepEntry>,
    pub per_m: Vec<MSummary>,
    /// Smallest m in the sweep whose run is nondecreasing in time.
    pub smallest_monotone_m: Option<f64>,
    /// Reference front perimeter per output time (exact sphere areas).
    pub reference_perimeter: Vec<(f64, f64)>,
}

fn is_monotone_in_time(traj: &Trajectory) -> bool {
    traj.states.windows(2).all(|w| {
        w[1].rho.iter().zip(&w[0].rho).all(|(b, a)| b - a >= -1e-10)
    })
}

/// Reference pressure at a radius: the elliptic profile of the component
/// containing it, zero outside the positive set.
fn reference_pressure(state: &crate::front::FrontState, r: f64) -> f64 {
    for (i, c) in state.components.iter().enumerate() {
        if c.contains(r) {
            if let Some(p) = state.profiles.get(i) {
                return p.value_at(r);
            }
        }
    }
    0.0
}

/// `m (1-delta)^m ||D^2 rho_E0,m||_inf` for the mollified exterior data,
/// with `delta = 1 - max rho_E0,m`.
fn initial_condition_product(m: f64, geom: &Geometry, ext: &crate::model::ExteriorDensity) -> f64 {
    let sampled: Vec<f64> =
        (0..geom.n_cells()).map(|j| ext.profile.at_radius(geom.radius_of(j))).collect();
    let mollified = crate::pme::mollify(geom, &sampled, 1.0 / m);
    let max_val = mollified.iter().fold(0.0f64, |a, &v| a.max(v));
    if max_val == 0.0 {
        return 0.0;
    }
    let mut lap = Vec::new();
    geom.laplacian_zero_flux(&mollified, &mut lap);
    let d2 = lap.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    m * max_val.powf(m) * d2
}

/// Runs every m of the scenario's sweep list, compares against the front
/// reference and assembles the error tables. Per-m runs execute on up to
/// `threads` worker threads; report assembly is deterministic.
pub fn m_sweep(scenario: &Scenario, threads: usize) -> Result<SweepReport> {
    if !scenario.is_radial() {
        return Err(Error::Unsupported("the m-sweep requires a radial scenario".into()));
    }
    if scenario.m_list.len() < 3 {
        return Err(Error::Domain("the m-sweep needs at least 3 stiffness values".into()));
    }
    scenario.validate()?;

    let reference = run_front(scenario)?;
    let ref_radii: Vec<(f64, f64)> = reference.outer_radius_series();

    let config = SolverConfig::from_scenario(scenario);
    let trajectories = run_sweep_parallel(scenario, &config, threads)?;

    // Contraction pairing: the same sweep from a shrunken initial region.
    let perturbed_scenario = {
        let mut p = scenario.clone();
        p.omega0 = match scenario.omega0 {
            crate::scenario::RegionConfig::Ball { radius } => {
                crate::scenario::RegionConfig::Ball { radius: 0.9 * radius }
            }
            crate::scenario::RegionConfig::Annulus { r_inner, r_outer } => {
                crate::scenario::RegionConfig::Annulus {
                    r_inner,
                    r_outer: r_inner + 0.9 * (r_outer - r_inner),
                }
            }
            crate::scenario::RegionConfig::Empty => crate::scenario::RegionConfig::Empty,
        };
        p
    };
    let perturbed = if scenario.omega0.is_empty() {
        None
    } else {
        Some(run_sweep_parallel(&perturbed_scenario, &config, threads)?)
    };

    let geom = scenario.geometry()?;
    let dx = geom.dx();
    let margin = scenario.margin_cells as f64 * dx;
    let law = scenario.law()?;
    let ext = scenario.exterior_density()?;

    let mut entries = Vec::new();
    let mut per_m = Vec::new();
    let mut smallest_monotone = None;
    for (mi, traj) in trajectories.iter().enumerate() {
        let mut max_rel = 0.0f64;
        for (i, st) in traj.states.iter().enumerate() {
            let (t_ref, r_ref) = ref_radii[i];
            debug_assert!((st.t - t_ref).abs() < 1e-12);
            let ref_state = &reference.states[i];
            let d = &traj.diagnostics[i];
            let rel = if r_ref > 0.0 {
                (d.support_radius - r_ref).abs() / r_ref
            } else {
                d.support_radius
            };
            if st.t >= 0.1 * scenario.horizon {
                max_rel = max_rel.max(rel);
            }

            let p = st.pressure();
            let mut inner = 0.0f64;
            let mut pressure = 0.0f64;
            let mut outer = 0.0f64;
            for j in 0..st.rho.len() {
                let r = geom.radius_of(j);
                if r <= r_ref - margin {
                    inner = inner.max((st.rho[j] - 1.0).abs());
                    pressure = pressure.max((p[j] - reference_pressure(ref_state, r)).abs());
                } else if r >= r_ref + margin {
                    outer = outer.max((st.rho[j] - ext.value(r, st.t)).abs());
                }
            }
            entries.push(SweepEntry {
                m: traj.m,
                t: st.t,
                support_radius: d.support_radius,
                reference_radius: r_ref,
                radius_rel_error: rel,
                inner_error: inner,
                pressure_error: pressure,
                outer_error: outer,
                ab_min: d.ab_min,
                mass: d.mass,
                max_p: d.max_p,
            });
        }
        let monotone = is_monotone_in_time(traj);
        if monotone && smallest_monotone.is_none() {
            smallest_monotone = Some(traj.m);
        }
        let contraction_max_ratio = match &perturbed {
            Some(runs) => {
                let (series, _) = l1_contraction_check(traj, &runs[mi])?;
                series.iter().map(|&(_, r)| r).fold(0.0f64, f64::max)
            }
            None => 0.0,
        };
        let last = entries.last().unwrap();
        per_m.push(MSummary {
            m: traj.m,
            max_radius_rel_error: max_rel,
            inner_error_final: last.inner_error,
            pressure_error_final: last.pressure_error,
            outer_error_final: last.outer_error,
            contraction_max_ratio,
            monotone_in_time: monotone,
            initial_condition_product: initial_condition_product(traj.m, &geom, &ext),
            steps: traj.steps,
        });
    }

    Ok(SweepReport {
        scenario_name: scenario.name.clone(),
        scenario_hash: crate::output::scenario_hash(scenario),
        dim: scenario.dim(),
        dx,
        cells: geom.n_cells(),
        margin,
        support_threshold: scenario.support_threshold(),
        g_prime0: law.rate_derivative(0.0),
        m_values: scenario.m_list.clone(),
        entries,
        per_m,
        smallest_monotone_m: smallest_monotone,
        reference_perimeter: perimeter_series_front(&reference),
    })
}

/// Runs the scenario once per m value, at most `threads` at a time,
/// preserving the m-list order in the result.
pub fn run_sweep_parallel(
    scenario: &Scenario,
    config: &SolverConfig,
    threads: usize,
) -> Result<Vec<Trajectory>> {
    let threads = threads.max(1);
    let mut results: Vec<Option<Result<Trajectory>>> =
        (0..scenario.m_list.len()).map(|_| None).collect();
    for chunk in (0..scenario.m_list.len()).collect::<Vec<_>>().chunks(threads) {
        std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for &idx in chunk {
                let m = scenario.m_list[idx];
                handles.push((idx, scope.spawn(move || pme::run(scenario, m, config))));
            }
            for (idx, h) in handles {
                results[idx] = Some(h.join().expect("sweep worker panicked"));
            }
        });
    }
    results.into_iter().map(|r| r.expect("sweep slot not filled")).collect()
}

/// Cellwise supremum over the discrete ball of the given radius. Extensive
/// (`S f >= f`), monotone, and `sigma = 0` is the identity.
pub fn sup_convolution(geom: &Geometry, values: &[f64], sigma: f64) -> Result<Vec<f64>> {
    if sigma < 0.0 {
        return Err(Error::Domain(format!("sup-convolution radius must be >= 0, got {sigma}")));
    }
    if values.len() != geom.n_cells() {
        return Err(Error::Domain("field length does not match grid".into()));
    }
    let reach = (sigma / geom.dx()).floor() as isize;
    if reach == 0 {
        return Ok(values.to_vec());
    }
    match geom {
        Geometry::Radial(_) => {
            let n = values.len() as isize;
            Ok((0..n)
                .map(|j| {
                    let lo = (j - reach).max(0);
                    let hi = (j + reach).min(n - 1);
                    (lo..=hi).map(|k| values[k as usize]).fold(f64::NEG_INFINITY, f64::max)
                })
                .collect())
        }
        Geometry::Plane(g) => {
            let mut offsets = Vec::new();
            for dj in -reach..=reach {
                for di in -reach..=reach {
                    if ((di * di + dj * dj) as f64).sqrt() * g.dx <= sigma {
                        offsets.push((di, dj));
                    }
                }
            }
            let (nx, ny) = (g.nx as isize, g.ny as isize);
            let mut out = vec![f64::NEG_INFINITY; values.len()];
            for j in 0..ny {
                for i in 0..nx {
                    let mut best = f64::NEG_INFINITY;
                    for &(di, dj) in &offsets {
                        let (ii, jj) = (i + di, j + dj);
                        if ii >= 0 && ii < nx && jj >= 0 && jj < ny {
                            best = best.max(values[(jj * nx + ii) as usize]);
                        }
                    }
                    out[(j * nx + i) as usize] = best;
                }
            }
            Ok(out)
        }
    }
}

/// Ratio series `||rho_a(t) - rho_b(t)||_1 / (e^{G(0) t} ||rho_a(0) - rho_b(0)||_1)`
/// together with a flag for any ratio above `1 + 1e-2`. Identical initial
/// data reports ratio 0 by convention.
pub fn l1_contraction_check(
    a: &Trajectory,
    b: &Trajectory,
) -> Result<(Vec<(f64, f64)>, bool)> {
    if a.states.len() != b.states.len() {
        return Err(Error::Domain("trajectories have different snapshot counts".into()));
    }
    let geom = &a.states[0].geom;
    if *geom != b.states[0].geom {
        return Err(Error::Domain("trajectories live on different grids".into()));
    }
    let g0 = a.states[0].law.rate(0.0);
    let l1 = |x: &[f64], y: &[f64]| -> f64 {
        let diff: Vec<f64> = x.iter().zip(y).map(|(u, v)| (u - v).abs()).collect();
        geom.integrate(&diff)
    };
    let d0 = l1(&a.states[0].rho, &b.states[0].rho);
    let mut series = Vec::with_capacity(a.states.len());
    let mut flagged = false;
    for (sa, sb) in a.states.iter().zip(&b.states) {
        if (sa.t - sb.t).abs() > 1e-12 {
            return Err(Error::Domain("trajectories have mismatched snapshot times".into()));
        }
        let ratio = if d0 == 0.0 { 0.0 } else { l1(&sa.rho, &sb.rho) / ((g0 * sa.t).exp() * d0) };
        if ratio > 1.0 + 1e-2 {
            flagged = true;
        }
        series.push((sa.t, ratio));
    }
    Ok((series, flagged))
}

/// Discrete comparison check: with `rho_a(0) <= rho_b(0)` cellwise, the
/// ordering must persist at every snapshot to 1e-12. Returns the verdict and
/// the worst violation.
pub fn comparison_check(a: &Trajectory, b: &Trajectory) -> Result<(bool, f64)> {
    if a.states.len() != b.states.len() {
        return Err(Error::Domain("trajectories have different snapshot counts".into()));
    }
    if a.states[0].geom != b.states[0].geom {
        return Err(Error::Domain("trajectories live on different grids".into()));
    }
    let initial_violation = a.states[0]
        .rho
        .iter()
        .zip(&b.states[0].rho)
        .map(|(x, y)| x - y)
        .fold(f64::NEG_INFINITY, f64::max);
    if initial_violation > 0.0 {
        return Err(Error::Domain(format!(
            "comparison check requires ordered initial data (violation {initial_violation:.3e})"
        )));
    }
    let mut worst = f64::NEG_INFINITY;
    for (sa, sb) in a.states.iter().zip(&b.states) {
        for (x, y) in sa.rho.iter().zip(&sb.rho) {
            worst = worst.max(x - y);
        }
    }
    Ok((worst <= 1e-12, worst))
}

/// Exact perimeter of the reference front: the sum of sphere areas of every
/// component endpoint radius (interior holes count).
pub fn perimeter_series_front(traj: &FrontTrajectory) -> Vec<(f64, f64)> {
    traj.states
        .iter()
        .map(|st| {
            let area = unit_sphere_area(st.dim);
            let nf = st.dim as i32 - 1;
            let mut total = 0.0;
            for c in &st.components {
                if c.left > 0.0 {
                    total += area * c.left.powi(nf);
                }
                total += area * c.right.powi(nf);
            }
            (st.t, total)
        })
        .collect()
}

/// Perimeter series of `{p > eps}` for a stiff radial run: sphere areas at
/// every interpolated level crossing.
pub fn perimeter_series_radial(traj: &Trajectory, eps: f64) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::with_capacity(traj.states.len());
    for st in &traj.states {
        let Geometry::Radial(g) = &st.geom else {
            return Err(Error::Domain("radial perimeter requires a radial trajectory".into()));
        };
        let p = st.pressure();
        let area = unit_sphere_area(g.dim);
        let nf = g.dim as i32 - 1;
        let mut total = 0.0;
        for j in 0..g.n_cells - 1 {
            let (a, b) = (p[j], p[j + 1]);
            if (a > eps) != (b > eps) {
                let w = ((a - eps) / (a - b)).clamp(0.0, 1.0);
                let r = g.center(j) + w * g.dx;
                total += area * r.powi(nf);
            }
        }
        out.push((st.t, total));
    }
    Ok(out)
}

/// Marching-squares length of the `level` contour of a cell-centered field.
pub fn marching_squares_length(grid: &Grid2d, values: &[f64], level: f64) -> f64 {
    debug_assert_eq!(values.len(), grid.len());
    let mut total = 0.0;
    // Interpolation point on an edge between two corner values.
    let cut = |a: f64, b: f64| -> f64 { ((level - a) / (b - a)).clamp(0.0, 1.0) };
    for j in 0..grid.ny - 1 {
        for i in 0..grid.nx - 1 {
            let v00 = values[grid.index(i, j)];
            let v10 = values[grid.index(i + 1, j)];
            let v11 = values[grid.index(i + 1, j + 1)];
            let v01 = values[grid.index(i, j + 1)];
            let mut case = 0usize;
            if v00 > level {
                case |= 1;
            }
            if v10 > level {
                case |= 2;
            }
            if v11 > level {
                case |= 4;
            }
            if v01 > level {
                case |= 8;
            }
            if case == 0 || case == 15 {
                continue;
            }
            // Edge midpoints in cell-local coordinates, scaled by dx at the end.
            let bottom = [cut(v00, v10), 0.0];
            let right = [1.0, cut(v10, v11)];
            let top = [cut(v01, v11), 1.0];
            let left = [0.0, cut(v00, v01)];
            let seg = |a: [f64; 2], b: [f64; 2]| ((a[0] - b[0]).hypot(a[1] - b[1])) * grid.dx;
            total += match case {
                1 | 14 => seg(left, bottom),
                2 | 13 => seg(bottom, right),
                4 | 11 => seg(right, top),
                8 | 7 => seg(top, left),
                3 | 12 => seg(left, right),
                6 | 9 => seg(bottom, top),
                5 | 10 => {
                    // Saddle: resolve by the cell-center average.
                    let center = 0.25 * (v00 + v10 + v11 + v01);
                    let connected = (center > level) == (case == 5);
                    if connected {
                        seg(left, bottom) + seg(right, top)
                    } else {
                        seg(bottom, right) + seg(top, left)
                    }
                }
                _ => unreachable!(),
            };
        }
    }
    total
}

/// Perimeter series of `{p > eps}` for a 2D run via marching squares.
pub fn perimeter_series_2d(traj: &Trajectory, eps: f64) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::with_capacity(traj.states.len());
    for st in &traj.states {
        let Geometry::Plane(g) = &st.geom else {
            return Err(Error::Domain("2D perimeter requires a planar trajectory".into()));
        };
        let p = st.pressure();
        out.push((st.t, marching_squares_length(g, &p, eps)));
    }
    Ok(out)
}

/// Space-time measure of the band `{eps/2 < p < 2 eps}`, a proxy for the
/// boundary measure: cell areas summed per snapshot, trapezoid in time.
pub fn band_measure_spacetime(traj: &Trajectory, eps: f64) -> f64 {
    let areas: Vec<f64> = traj
        .states
        .iter()
        .map(|st| {
            let p = st.pressure();
            let dx = st.geom.dx();
            let cell = match &st.geom {
                Geometry::Plane(_) => dx * dx,
                Geometry::Radial(_) => dx,
            };
            p.iter().filter(|&&v| v > eps / 2.0 && v < 2.0 * eps).count() as f64 * cell
        })
        .collect();
    let mut total = 0.0;
    for i in 1..areas.len() {
        let dt = traj.states[i].t - traj.states[i - 1].t;
        total += 0.5 * (areas[i] + areas[i - 1]) * dt;
    }
    total
}

/// Relative error series of the measured stiff front speed against the
/// reference velocity law `g |p_r|` taken at equal radius. The stiff speed
/// is the least-squares slope of the thresholded support over a 5-snapshot
/// window; both speeds zero counts as error zero.
pub fn velocity_law_error(
    pme_traj: &Trajectory,
    front_traj: &FrontTrajectory,
) -> Result<Vec<(f64, f64)>> {
    if pme_traj.states.len() < 3 {
        return Err(Error::Domain("velocity-law error needs at least 3 snapshots".into()));
    }

    // Reference (radius -> speed) table from the outermost front records.
    let mut ref_rv: Vec<(f64, f64)> = Vec::new();
    for st in &front_traj.states {
        let Some(c) = st.components.iter().max_by(|a, b| a.right.partial_cmp(&b.right).unwrap())
        else {
            continue;
        };
        let idx = st.components.iter().position(|x| x == c).unwrap();
        if let Some(p) = st.profiles.get(idx) {
            let grad = p.boundary_gradient(crate::elliptic::Side::Outer).unwrap_or(0.0);
            let ext_g = front_traj
                .records
                .iter()
                .find(|r| (r.t - st.t).abs() < 1e-12 && r.component == idx)
                .map(|r| r.g_right);
            if let Some(crate::model::VelocityCoeff::Finite(g)) = ext_g {
                ref_rv.push((c.right, g * grad));
            }
        }
    }
    if ref_rv.is_empty() {
        // No moving reference front; a stationary pair has zero error.
        let all_zero = pme_traj.diagnostics.iter().all(|d| d.support_radius == 0.0);
        if all_zero {
            return Ok(pme_traj.diagnostics.iter().map(|d| (d.t, 0.0)).collect());
        }
        return Err(Error::Domain("reference trajectory carries no moving front".into()));
    }
    ref_rv.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let ref_speed_at = |r: f64| -> f64 {
        if r <= ref_rv[0].0 {
            return ref_rv[0].1;
        }
        if r >= ref_rv.last().unwrap().0 {
            return ref_rv.last().unwrap().1;
        }
        let k = ref_rv.partition_point(|(rr, _)| *rr < r).max(1);
        let (r0, v0) = ref_rv[k - 1];
        let (r1, v1) = ref_rv[k];
        if r1 == r0 {
            return v0;
        }
        v0 + (v1 - v0) * (r - r0) / (r1 - r0)
    };

    // Least-squares slope over sliding windows of the support series,
    // skipping the t = 0 snapshot (matched data has no speed history).
    let series: Vec<(f64, f64)> =
        pme_traj.diagnostics.iter().skip(1).map(|d| (d.t, d.support_radius)).collect();
    let w = SPEED_WINDOW.min(series.len());
    if w < 2 {
        return Err(Error::Domain("velocity-law error needs at least 2 usable snapshots".into()));
    }
    let mut out = Vec::new();
    for win in series.windows(w) {
        let nw = w as f64;
        let (mut st_, mut sr, mut stt, mut str_) = (0.0, 0.0, 0.0, 0.0);
        for &(t, r) in win {
            st_ += t;
            sr += r;
            stt += t * t;
            str_ += t * r;
        }
        let denom = nw * stt - st_ * st_;
        if denom == 0.0 {
            continue;
        }
        let slope = (nw * str_ - st_ * sr) / denom;
        let t_mid = st_ / nw;
        let r_mid = sr / nw;
        let v_ref = ref_speed_at(r_mid);
        let err = if v_ref == 0.0 && slope.abs() < 1e-14 {
            0.0
        } else if v_ref == 0.0 {
            f64::INFINITY
        } else {
            (slope - v_ref).abs() / v_ref
        };
        out.push((t_mid, err));
    }
    Ok(out)
}

/// Median of a series' values (NaNs excluded); `None` on empty input.
pub fn median(values: impl Iterator<Item = f64>) -> Option<f64> {
    let mut v: Vec<f64> = values.filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Some(v[v.len() / 2])
}
