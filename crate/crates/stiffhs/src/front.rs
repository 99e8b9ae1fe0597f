//! Radial reference solver for the limit free boundary flow: quasi-static
//! elliptic pressure on the positive set coupled to the front law
//! `V = g |p_r|`, with instantaneous nucleation where the exterior density
//! reaches one.
//!
//! The discrete front law is a quasi-static splitting (solve the elliptic
//! profile, move the endpoints, re-solve) with one Heun corrector pass.
//! Nucleation is handled as a jump at the exact threshold time of
//! `rho_E0(x) e^{g0 s} = 1` rather than by integrating an infinite velocity.
//! Component merging is interval union; merge events are logged prominently
//! since the limit problem does not prescribe a constructive rule there.

use crate::elliptic::{solve_radial, RadialBc, RadialProfile, Side};
use crate::error::{Error, Result};
use crate::model::{ExteriorDensity, GrowthLaw, VelocityCoeff};
use crate::scenario::{RegionConfig, Scenario};

/// Kind of a component endpoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EndpointKind {
    /// The coordinate origin; does not move.
    Origin,
    /// Free boundary moving by `V = g |p_r|`.
    Free,
    /// Fixed boundary carrying Dirichlet data; does not move.
    Pinned,
}

/// One radial interval component of the positive set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Component {
    pub left: f64,
    pub right: f64,
    pub left_kind: EndpointKind,
    pub right_kind: EndpointKind,
}

impl Component {
    pub fn ball(radius: f64) -> Self {
        Component {
            left: 0.0,
            right: radius,
            left_kind: EndpointKind::Origin,
            right_kind: EndpointKind::Free,
        }
    }

    pub fn annulus(left: f64, right: f64) -> Self {
        Component { left, right, left_kind: EndpointKind::Free, right_kind: EndpointKind::Free }
    }

    pub fn contains(&self, r: f64) -> bool {
        r >= self.left && r <= self.right
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrontEvent {
    Move,
    Nucleate,
    Merge,
}

impl FrontEvent {
    pub fn as_str(&self) -> &'static str {
        match self {
            FrontEvent::Move => "move",
            FrontEvent::Nucleate => "nucleate",
            FrontEvent::Merge => "merge",
        }
    }
}

/// Positive set, profiles and bookkeeping at one instant.
#[derive(Clone, Debug)]
pub struct FrontState {
    pub t: f64,
    pub dim: u32,
    /// Truncation radius of the computational domain.
    pub r_domain: f64,
    /// Disjoint, sorted interval components of `{p > 0}`.
    pub components: Vec<Component>,
    /// Elliptic profiles, one per component (refreshed after each advance).
    pub profiles: Vec<RadialProfile>,
    pub saturated: bool,
}

impl FrontState {
    pub fn new(dim: u32, r_domain: f64, components: Vec<Component>) -> Self {
        FrontState { t: 0.0, dim, r_domain, components, profiles: Vec::new(), saturated: false }
    }

    /// Outermost front radius (0 when the positive set is empty).
    pub fn outer_radius(&self) -> f64 {
        self.components.iter().fold(0.0f64, |a, c| a.max(c.right))
    }

    pub fn covers(&self, r: f64) -> bool {
        self.components.iter().any(|c| c.contains(r))
    }

    fn check_saturated(&mut self, tol: f64) {
        let covered: f64 = self.components.iter().map(|c| c.right - c.left).sum();
        if self.r_domain - covered < tol {
            self.saturated = true;
        }
    }
}

/// Knobs of the front integrator.
#[derive(Clone, Copy, Debug)]
pub struct FrontOptions {
    /// Target node spacing of the per-component elliptic solves.
    pub profile_dr: f64,
    /// Sample spacing of the nucleation scan.
    pub scan_dr: f64,
}

impl FrontOptions {
    pub fn for_domain(r_domain: f64) -> Self {
        FrontOptions { profile_dr: r_domain / 512.0, scan_dr: r_domain / 2048.0 }
    }
}

/// Boundary data for pinned endpoints.
pub type BoundaryValueFn<'a> = &'a dyn Fn(f64) -> f64;

fn profile_points(len: f64, dr: f64) -> usize {
    ((len / dr).ceil() as usize + 1).clamp(33, 8193)
}

/// Solves the elliptic profile on one component at time `t`.
fn solve_component(
    c: &Component,
    dim: u32,
    law: &GrowthLaw,
    t: f64,
    opts: &FrontOptions,
    pinned: Option<BoundaryValueFn>,
) -> Result<RadialProfile> {
    let bc_of = |kind: EndpointKind| -> Result<RadialBc> {
        match kind {
            EndpointKind::Origin => Ok(RadialBc::Symmetry),
            EndpointKind::Free => Ok(RadialBc::Dirichlet(0.0)),
            EndpointKind::Pinned => {
                let f = pinned
                    .ok_or_else(|| Error::Logic("pinned endpoint without boundary data".into()))?;
                Ok(RadialBc::Dirichlet(f(t)))
            }
        }
    };
    let bc_inner = bc_of(c.left_kind)?;
    let bc_outer = match bc_of(c.right_kind)? {
        RadialBc::Dirichlet(v) => v,
        RadialBc::Symmetry => {
            return Err(Error::Logic("right endpoint cannot be the origin".into()))
        }
    };
    let points = profile_points(c.right - c.left, opts.profile_dr);
    solve_radial(dim, c.left, c.right, bc_inner, bc_outer, law, points)
}

/// Outward one-sided velocity coefficient at an endpoint; the velocity law
/// uses the exterior-side density limit.
fn endpoint_g(ext: &ExteriorDensity, r: f64, outward: f64, t: f64, r_domain: f64) -> VelocityCoeff {
    let delta = 1e-7 * r_domain;
    let sample = (r + outward * delta).clamp(0.0, r_domain);
    ext.coeff(sample, t)
}

/// Endpoint velocities `g * |p_r|` of one component (left, right); pinned or
/// origin endpoints report zero.
fn component_velocities(
    c: &Component,
    profile: &RadialProfile,
    ext: &ExteriorDensity,
    t: f64,
    r_domain: f64,
) -> Result<(f64, f64)> {
    let saturated_endpoint = || {
        Error::Logic(
            "velocity coefficient infinite at a moving endpoint; nucleation_scan must run first"
                .into(),
        )
    };
    let mut v = (0.0, 0.0);
    if c.left_kind == EndpointKind::Free {
        let grad = profile.boundary_gradient(Side::Inner)?;
        match endpoint_g(ext, c.left, -1.0, t, r_domain) {
            VelocityCoeff::Finite(g) => v.0 = g * grad,
            VelocityCoeff::Infinite => return Err(saturated_endpoint()),
        }
    }
    if c.right_kind == EndpointKind::Free {
        let grad = profile.boundary_gradient(Side::Outer)?;
        match endpoint_g(ext, c.right, 1.0, t, r_domain) {
            VelocityCoeff::Finite(g) => v.1 = g * grad,
            VelocityCoeff::Infinite => return Err(saturated_endpoint()),
        }
    }
    Ok(v)
}

fn normalize_components(
    components: &mut Vec<Component>,
    r_domain: f64,
    events: &mut Vec<(f64, FrontEvent)>,
    t: f64,
) {
    for c in components.iter_mut() {
        if c.left <= 0.0 && c.left_kind == EndpointKind::Free {
            c.left = 0.0;
            c.left_kind = EndpointKind::Origin;
        }
        if c.right > r_domain {
            c.right = r_domain;
        }
    }
    components.sort_by(|a, b| a.left.partial_cmp(&b.left).unwrap());
    let mut merged: Vec<Component> = Vec::with_capacity(components.len());
    for c in components.drain(..) {
        if let Some(last) = merged.last_mut() {
            if c.left <= last.right {
                last.right = last.right.max(c.right);
                last.right_kind = c.right_kind;
                events.push((t, FrontEvent::Merge));
                continue;
            }
        }
        merged.push(c);
    }
    *components = merged;
}

/// Advances the front by `dt`: solves the profiles, moves every free
/// endpoint by the explicit front law with one Heun corrector pass, merges
/// overlapping components and re-solves.
pub fn advance(
    state: &FrontState,
    dt: f64,
    law: &GrowthLaw,
    ext: &ExteriorDensity,
    opts: &FrontOptions,
    pinned: Option<BoundaryValueFn>,
) -> Result<(FrontState, Vec<(f64, FrontEvent)>)> {
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("front step requires dt > 0, got {dt}")));
    }
    let mut events = Vec::new();
    let mut next = state.clone();
    if state.saturated || state.components.is_empty() {
        next.t = state.t + dt;
        return Ok((next, events));
    }

    // Predictor velocities at the current configuration.
    let mut predicted = state.components.clone();
    let mut v1 = Vec::with_capacity(state.components.len());
    for (c, pc) in state.components.iter().zip(predicted.iter_mut()) {
        let profile = solve_component(c, state.dim, law, state.t, opts, pinned)?;
        let v = component_velocities(c, &profile, ext, state.t, state.r_domain)?;
        pc.left = (c.left - dt * v.0).max(0.0);
        pc.right = (c.right + dt * v.1).min(state.r_domain);
        v1.push(v);
    }

    // Corrector velocities at the predicted configuration and final move.
    let t_new = state.t + dt;
    let mut final_components = state.components.clone();
    for (i, pc) in predicted.iter().enumerate() {
        let profile = solve_component(pc, state.dim, law, t_new, opts, pinned)?;
        let v2 = component_velocities(pc, &profile, ext, t_new, state.r_domain)?;
        let c = &mut final_components[i];
        c.left = (c.left - 0.5 * dt * (v1[i].0 + v2.0)).max(0.0);
        c.right = (c.right + 0.5 * dt * (v1[i].1 + v2.1)).min(state.r_domain);
        if v1[i].0 != 0.0 || v1[i].1 != 0.0 {
            events.push((t_new, FrontEvent::Move));
        }
    }

    normalize_components(&mut final_components, state.r_domain, &mut events, t_new);
    next.t = t_new;
    next.components = final_components;
    next.check_saturated(opts.scan_dr);
    next.profiles =
        if next.saturated { Vec::new() } else { refresh_profiles(&next, law, opts, pinned)? };
    Ok((next, events))
}

fn refresh_profiles(
    state: &FrontState,
    law: &GrowthLaw,
    opts: &FrontOptions,
    pinned: Option<BoundaryValueFn>,
) -> Result<Vec<RadialProfile>> {
    state
        .components
        .iter()
        .map(|c| solve_component(c, state.dim, law, state.t, opts, pinned))
        .collect()
}

/// Merges every radius with `rho_E(., s) >= 1` for some `s <= t_next` into
/// the positive set (instant absorption); interval edges are refined by
/// bisection on the threshold.
pub fn nucleation_scan(
    state: &FrontState,
    ext: &ExteriorDensity,
    t_next: f64,
    opts: &FrontOptions,
) -> Result<(FrontState, Vec<(f64, FrontEvent)>)> {
    if t_next < state.t {
        return Err(Error::Domain("nucleation scan target time precedes the state".into()));
    }
    let mut events = Vec::new();
    let mut next = state.clone();

    // rho_E is nondecreasing in t, so testing at t_next captures the window.
    // The tolerance absorbs the rounding of exp(ln(1/rho0)) at the exact
    // threshold time.
    let saturated_at = |r: f64| ext.value(r, t_next) >= 1.0 - 1e-12;
    let n_samples = (state.r_domain / opts.scan_dr).ceil() as usize;
    let mut intervals: Vec<(f64, f64)> = Vec::new();
    let mut run_start: Option<f64> = None;
    for i in 0..=n_samples {
        let r = state.r_domain * i as f64 / n_samples as f64;
        let inside = saturated_at(r);
        match (inside, run_start) {
            (true, None) => run_start = Some(r),
            (false, Some(s)) => {
                let a =
                    if s == 0.0 { 0.0 } else { bisect_threshold(ext, t_next, s - opts.scan_dr, s) };
                let b = bisect_threshold(ext, t_next, r - opts.scan_dr, r);
                intervals.push((a, b));
                run_start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = run_start {
        let a = if s == 0.0 { 0.0 } else { bisect_threshold(ext, t_next, s - opts.scan_dr, s) };
        intervals.push((a, state.r_domain));
    }

    if intervals.is_empty() {
        return Ok((next, events));
    }

    for (a, b) in intervals {
        next.components.push(Component {
            left: a,
            right: b,
            left_kind: if a <= 0.0 { EndpointKind::Origin } else { EndpointKind::Free },
            right_kind: EndpointKind::Free,
        });
        events.push((t_next, FrontEvent::Nucleate));
    }
    normalize_components(&mut next.components, state.r_domain, &mut events, t_next);
    next.check_saturated(opts.scan_dr);
    Ok((next, events))
}

/// Spatial bisection of `rho_E(r, t) = 1` between two radii straddling the
/// threshold; falls back to the bracket midpoint when they do not straddle.
fn bisect_threshold(ext: &ExteriorDensity, t: f64, mut lo: f64, mut hi: f64) -> f64 {
    lo = lo.max(0.0);
    let f = |r: f64| ext.value(r, t) - 1.0;
    let (mut flo, fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return lo;
    }
    if flo.signum() == fhi.signum() {
        return 0.5 * (lo + hi);
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Earliest saturation time strictly inside `(t, t_limit]` over radii not yet
/// covered by the positive set, or `None`.
fn next_nucleation_time(
    state: &FrontState,
    ext: &ExteriorDensity,
    t_limit: f64,
    opts: &FrontOptions,
) -> Option<f64> {
    let n_samples = (state.r_domain / opts.scan_dr).ceil() as usize;
    let mut earliest: Option<f64> = None;
    for i in 0..=n_samples {
        let r = state.r_domain * i as f64 / n_samples as f64;
        if state.covers(r) {
            continue;
        }
        if let Some(ts) = ext.saturation_time(r) {
            if ts > state.t && ts <= t_limit {
                earliest = Some(earliest.map_or(ts, |e: f64| e.min(ts)));
            }
        }
    }
    earliest
}

/// Per-component record at one output time (one CSV row).
#[derive(Clone, Debug)]
pub struct FrontRecord {
    pub t: f64,
    pub component: usize,
    pub left: f64,
    pub right: f64,
    pub grad_left: f64,
    pub grad_right: f64,
    pub g_left: VelocityCoeff,
    pub g_right: VelocityCoeff,
    pub event: FrontEvent,
}

/// Time series of front states at the output schedule.
#[derive(Clone, Debug)]
pub struct FrontTrajectory {
    pub states: Vec<FrontState>,
    pub records: Vec<FrontRecord>,
    pub events: Vec<(f64, FrontEvent)>,
    pub saturated: bool,
    pub saturation_time: Option<f64>,
}

impl FrontTrajectory {
    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t).collect()
    }

    /// Outermost front radius per output time.
    pub fn outer_radius_series(&self) -> Vec<(f64, f64)> {
        self.states.iter().map(|s| (s.t, s.outer_radius())).collect()
    }
}

fn record_state(
    state: &FrontState,
    ext: &ExteriorDensity,
    event: FrontEvent,
    records: &mut Vec<FrontRecord>,
) {
    for (i, c) in state.components.iter().enumerate() {
        let (mut gl, mut gr) = (0.0, 0.0);
        if let Some(p) = state.profiles.get(i) {
            gl = p.boundary_gradient(Side::Inner).unwrap_or(0.0);
            gr = p.boundary_gradient(Side::Outer).unwrap_or(0.0);
        }
        records.push(FrontRecord {
            t: state.t,
            component: i,
            left: c.left,
            right: c.right,
            grad_left: gl,
            grad_right: gr,
            g_left: endpoint_g(ext, c.left, -1.0, state.t, state.r_domain),
            g_right: endpoint_g(ext, c.right, 1.0, state.t, state.r_domain),
            event,
        });
    }
}

#[allow(clippy::too_many_arguments)]
fn integrate_front(
    mut state: FrontState,
    output_times: &[f64],
    dt: f64,
    law: &GrowthLaw,
    ext: &ExteriorDensity,
    opts: &FrontOptions,
    pinned: Option<BoundaryValueFn>,
    allow_nucleation: bool,
) -> Result<FrontTrajectory> {
    let mut states = Vec::with_capacity(output_times.len());
    let mut records = Vec::new();
    let mut all_events: Vec<(f64, FrontEvent)> = Vec::new();
    let mut saturation_time = None;

    state.profiles = if state.components.is_empty() {
        Vec::new()
    } else {
        refresh_profiles(&state, law, opts, pinned)?
    };

    for &target in output_times {
        while state.t < target - 1e-15 {
            let step = dt.min(target - state.t);
            let t_next = state.t + step;

            if allow_nucleation && !state.saturated {
                if let Some(t_star) = next_nucleation_time(&state, ext, t_next, opts) {
                    // Move up to the jump time, absorb, then continue.
                    if t_star > state.t + 1e-15 {
                        let (s, ev) = advance(&state, t_star - state.t, law, ext, opts, pinned)?;
                        state = s;
                        all_events.extend(ev);
                    }
                    let (s, ev) = nucleation_scan(&state, ext, t_star, opts)?;
                    state = s;
                    all_events.extend(ev);
                    if !state.saturated {
                        state.profiles = refresh_profiles(&state, law, opts, pinned)?;
                    }
                    if state.saturated && saturation_time.is_none() {
                        saturation_time = Some(t_star);
                    }
                    continue;
                }
            }

            let (s, ev) = advance(&state, step, law, ext, opts, pinned)?;
            state = s;
            all_events.extend(ev);
            if state.saturated && saturation_time.is_none() {
                saturation_time = Some(state.t);
            }
        }
        state.t = target;
        let event = all_events
            .iter()
            .rev()
            .find(|(te, e)| *te <= target && *e != FrontEvent::Move)
            .map(|(_, e)| *e)
            .unwrap_or(FrontEvent::Move);
        record_state(&state, ext, event, &mut records);
        states.push(state.clone());
    }

    Ok(FrontTrajectory {
        saturated: states.last().map(|s| s.saturated).unwrap_or(false),
        states,
        records,
        events: all_events,
        saturation_time,
    })
}

/// Runs the free boundary reference flow for a radial scenario.
pub fn run_front(scenario: &Scenario) -> Result<FrontTrajectory> {
    scenario.validate_core()?;
    if !scenario.is_radial() {
        return Err(Error::Unsupported("front solver requires a radial scenario".into()));
    }
    let law = scenario.law()?;
    let ext = scenario.exterior_density()?;
    let dim = scenario.dim();
    let r_domain = scenario.domain_radius();
    let opts = FrontOptions::for_domain(r_domain);

    let components = match scenario.omega0 {
        RegionConfig::Empty => Vec::new(),
        RegionConfig::Ball { radius } => vec![Component::ball(radius)],
        RegionConfig::Annulus { r_inner, r_outer } => vec![Component::annulus(r_inner, r_outer)],
    };
    let state = FrontState::new(dim, r_domain, components);
    integrate_front(
        state,
        &scenario.output_times(),
        scenario.front_dt,
        &law,
        &ext,
        &opts,
        None,
        true,
    )
}

/// Domain side of a fixed-boundary radial solution.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FixedBoundaryMode {
    /// Positive set `[r_fixed, R(t)]`, outer endpoint free.
    Exterior,
    /// Positive set `[R(t), r_fixed]`, inner endpoint free (moving inward).
    Interior,
}

/// Fixed-boundary radial solution: one endpoint pinned at `r_fixed` with
/// time-dependent Dirichlet data, the other moving by the front law.
#[allow(clippy::too_many_arguments)]
pub fn fixed_boundary_radial_solution(
    dim: u32,
    r_fixed: f64,
    mode: FixedBoundaryMode,
    boundary_value: BoundaryValueFn,
    init_front: f64,
    ext: &ExteriorDensity,
    law: &GrowthLaw,
    horizon: f64,
    dt: f64,
    snapshots: usize,
    r_domain: f64,
) -> Result<FrontTrajectory> {
    // Boundary data must stay strictly positive on the whole window.
    let checks = 200;
    for i in 0..=checks {
        let t = horizon * i as f64 / checks as f64;
        if boundary_value(t) <= 0.0 {
            return Err(Error::Domain(format!(
                "fixed boundary data must be > 0 on [0, T]; value {} at t={t}",
                boundary_value(t)
            )));
        }
    }
    let component = match mode {
        FixedBoundaryMode::Exterior => {
            if !(r_fixed < init_front && init_front < r_domain) {
                return Err(Error::Domain(
                    "exterior mode requires r_fixed < init_front < r_domain".into(),
                ));
            }
            Component {
                left: r_fixed,
                right: init_front,
                left_kind: EndpointKind::Pinned,
                right_kind: EndpointKind::Free,
            }
        }
        FixedBoundaryMode::Interior => {
            if !(init_front < r_fixed && init_front > 0.0) {
                return Err(Error::Domain(
                    "interior mode requires 0 < init_front < r_fixed".into(),
                ));
            }
            Component {
                left: init_front,
                right: r_fixed,
                left_kind: EndpointKind::Free,
                right_kind: EndpointKind::Pinned,
            }
        }
    };
    // The exterior density may never saturate outside the positive set.
    let opts = FrontOptions::for_domain(r_domain);
    let n_samples = (r_domain / opts.scan_dr).ceil() as usize;
    for i in 0..=n_samples {
        let r = r_domain * i as f64 / n_samples as f64;
        if !component.contains(r) && ext.value(r, horizon) >= 1.0 {
            return Err(Error::Domain(format!(
                "exterior density reaches 1 outside the positive set (r={r:.4}) within the horizon"
            )));
        }
    }

    let k = snapshots.max(2);
    let output_times: Vec<f64> = if horizon == 0.0 {
        vec![0.0; k]
    } else {
        (0..k).map(|i| horizon * i as f64 / (k - 1) as f64).collect()
    };
    let state = FrontState::new(dim, r_domain, vec![component]);
    integrate_front(state, &output_times, dt, law, ext, &opts, Some(boundary_value), false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ExteriorProfile;
    use crate::scenario::{GeometryConfig, GrowthConfig, SCHEMA_VERSION};
    use crate::scenario::Scenario;

    fn front_scenario(exterior: ExteriorProfile, g0: f64, horizon: f64, r_outer: f64) -> Scenario {
        Scenario {
            schema_version: SCHEMA_VERSION,
            name: String::new(),
            geometry: GeometryConfig::Radial { dim: 2, r_outer, cells: 256 },
            omega0: RegionConfig::Ball { radius: 1.0 },
            exterior,
            growth: GrowthConfig { form: crate::model::GrowthForm::ConstantTest, g0, p_max: 1.0 },
            m_list: vec![40.0],
            horizon,
            snapshots: 11,
            support_threshold: None,
            sup_convolution_radius: None,
            cfl_safety: 0.45,
            margin_cells: 4,
            front_dt: 1e-3,
        }
    }

    #[test]
    fn ball_expands_exponentially() {
        // Constant-test G, rho_E = 0, ball: V = g0 R / n so R(t) = R0 e^{g0 t/n}.
        let mut s = front_scenario(ExteriorProfile::Zero, 1.0, 1.0, 4.0);
        s.snapshots = 5;
        let traj = run_front(&s).unwrap();
        let r_final = traj.states.last().unwrap().outer_radius();
        let expected = (0.5f64).exp();
        let rel = (r_final - expected).abs() / expected;
        assert!(rel < 5e-3, "R(1) = {r_final}, expected {expected}, rel err {rel:.2e}");
    }

    #[test]
    fn frozen_exterior_doubles_exponent() {
        // With rho_E frozen at 0.5 (g = 2): R(t) = R0 e^{2 g0 t / n}.
        let law = GrowthLaw::constant_test(1.0, 1.0).unwrap();
        let ext =
            ExteriorDensity::with_growth_rate(ExteriorProfile::Constant { value: 0.5 }, 0.0)
                .unwrap();
        let opts = FrontOptions::for_domain(8.0);
        let mut state = FrontState::new(2, 8.0, vec![Component::ball(1.0)]);
        let dt = 1e-3;
        let t_end: f64 = 0.5;
        let steps = (t_end / dt).round() as usize;
        for _ in 0..steps {
            let (s, _) = advance(&state, dt, &law, &ext, &opts, None).unwrap();
            state = s;
        }
        let expected = (2.0 * 1.0 * t_end / 2.0_f64).exp();
        let rel = (state.outer_radius() - expected).abs() / expected;
        assert!(rel < 5e-3, "R = {}, expected {expected}", state.outer_radius());
    }

    #[test]
    fn first_step_speed_ratio_is_exactly_g() {
        // At equal radius the profiles agree, so the speed ratio between a
        // frozen rho_E = 0.5 run and a vacuum run is exactly 2 on one step.
        let law = GrowthLaw::constant_test(1.0, 1.0).unwrap();
        let vacuum = ExteriorDensity::with_growth_rate(ExteriorProfile::Zero, 0.0).unwrap();
        let half =
            ExteriorDensity::with_growth_rate(ExteriorProfile::Constant { value: 0.5 }, 0.0)
                .unwrap();
        let opts = FrontOptions::for_domain(4.0);
        let state = FrontState::new(2, 4.0, vec![Component::ball(1.0)]);
        let dt = 1e-6;
        let (sv, _) = advance(&state, dt, &law, &vacuum, &opts, None).unwrap();
        let (sh, _) = advance(&state, dt, &law, &half, &opts, None).unwrap();
        let dv = sv.outer_radius() - 1.0;
        let dh = sh.outer_radius() - 1.0;
        assert!((dh / dv - 2.0).abs() < 1e-6, "ratio {}", dh / dv);
    }

    #[test]
    fn stationary_when_growth_vanishes() {
        // p = 0 profile (G ~ 0, zero boundary data) leaves the front in place.
        let law = GrowthLaw::constant_test(1e-300, 1.0).unwrap();
        let ext = ExteriorDensity::with_growth_rate(ExteriorProfile::Zero, 0.0).unwrap();
        let opts = FrontOptions::for_domain(4.0);
        let state = FrontState::new(2, 4.0, vec![Component::ball(1.0)]);
        let (s, _) = advance(&state, 0.1, &law, &ext, &opts, None).unwrap();
        assert!((s.outer_radius() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nucleation_threshold_time() {
        // rho_E0 = 0.95, g0 = 1: the whole domain saturates at t* = ln(1/0.95).
        let ext =
            ExteriorDensity::with_growth_rate(ExteriorProfile::Constant { value: 0.95 }, 1.0)
                .unwrap();
        let opts = FrontOptions::for_domain(3.0);
        let state = FrontState::new(2, 3.0, Vec::new());
        let t_star = (1.0f64 / 0.95).ln();
        // Just before the threshold: no-op.
        let (before, ev) = nucleation_scan(&state, &ext, t_star - 1e-6, &opts).unwrap();
        assert!(before.components.is_empty() && ev.is_empty());
        // Over the threshold: everything is absorbed.
        let (after, ev) = nucleation_scan(&state, &ext, t_star + 1e-9, &opts).unwrap();
        assert!(!ev.is_empty());
        assert!(after.saturated);
    }

    #[test]
    fn nucleation_no_op_below_threshold() {
        let ext = ExteriorDensity::with_growth_rate(
            ExteriorProfile::Plateau { value: 0.4, plateau: 1.0, edge: 2.0 },
            1.0,
        )
        .unwrap();
        let opts = FrontOptions::for_domain(3.0);
        let state = FrontState::new(2, 3.0, vec![Component::ball(0.5)]);
        // e^{0.5} * 0.4 = 0.66 < 1.
        let (after, ev) = nucleation_scan(&state, &ext, 0.5, &opts).unwrap();
        assert_eq!(after.components, state.components);
        assert!(ev.is_empty());
    }

    #[test]
    fn annulus_nucleates_as_new_component() {
        // rho_E0 = 0.9 on [2,3], front at R=1: at t* = ln(1/0.9) the annulus
        // becomes a second component.
        let ext = ExteriorDensity::with_growth_rate(
            ExteriorProfile::Annulus { value: 0.9, r_inner: 2.0, r_outer: 3.0 },
            1.0,
        )
        .unwrap();
        let opts = FrontOptions::for_domain(5.0);
        let state = FrontState::new(2, 5.0, vec![Component::ball(1.0)]);
        let t_star = (1.0f64 / 0.9).ln();
        let (after, ev) = nucleation_scan(&state, &ext, t_star + 1e-9, &opts).unwrap();
        assert_eq!(after.components.len(), 2);
        assert!(ev.iter().any(|(_, e)| *e == FrontEvent::Nucleate));
        let c = after.components[1];
        assert!((c.left - 2.0).abs() < 2.0 * opts.scan_dr, "left {}", c.left);
        assert!((c.right - 3.0).abs() < 2.0 * opts.scan_dr, "right {}", c.right);
    }

    #[test]
    fn empty_scenario_stays_empty() {
        let mut s = front_scenario(
            ExteriorProfile::Plateau { value: 0.3, plateau: 1.0, edge: 2.0 },
            1.0,
            0.5,
            8.0,
        );
        s.omega0 = RegionConfig::Empty;
        let traj = run_front(&s).unwrap();
        assert!(traj.states.iter().all(|st| st.components.is_empty()));
        assert!(!traj.saturated);
    }

    #[test]
    fn richardson_self_consistency_linear_growth() {
        // Linear G ball run against a refined (dt/16, 8x nodes) oracle.
        let mut s = front_scenario(ExteriorProfile::Zero, 1.0, 0.5, 8.0);
        s.growth = GrowthConfig { form: crate::model::GrowthForm::Linear, g0: 1.0, p_max: 1.0 };
        s.snapshots = 6;
        let coarse = run_front(&s).unwrap();

        let law = s.law().unwrap();
        let ext = s.exterior_density().unwrap();
        let mut opts = FrontOptions::for_domain(8.0);
        opts.profile_dr /= 8.0;
        let state = FrontState::new(2, 8.0, vec![Component::ball(1.0)]);
        let fine = integrate_front(
            state,
            &s.output_times(),
            s.front_dt / 16.0,
            &law,
            &ext,
            &opts,
            None,
            true,
        )
        .unwrap();

        for (c, f) in coarse.states.iter().zip(&fine.states) {
            let (rc, rf) = (c.outer_radius(), f.outer_radius());
            assert!((rc - rf).abs() / rf < 1e-2, "t={}: coarse {rc} vs fine {rf}", c.t);
        }
    }

    #[test]
    fn support_monotone_and_saturation_containment() {
        let s = front_scenario(
            ExteriorProfile::Plateau { value: 0.8, plateau: 1.5, edge: 2.5 },
            1.0,
            0.4,
            14.0,
        );
        let ext = s.exterior_density().unwrap();
        let traj = run_front(&s).unwrap();
        for w in traj.states.windows(2) {
            // Set inclusion per output step.
            for c_old in &w[0].components {
                for &r in &[c_old.left, 0.5 * (c_old.left + c_old.right), c_old.right] {
                    assert!(
                        w[1].saturated || w[1].covers(r),
                        "support shrank at t={} (r={r})",
                        w[1].t
                    );
                }
            }
        }
        // {rho_E >= 1} inside the closure of the positive set at all outputs.
        for st in &traj.states {
            let n = 300;
            for i in 0..=n {
                let r = st.r_domain * i as f64 / n as f64;
                if ext.value(r, st.t) >= 1.0 {
                    assert!(
                        st.saturated || st.covers(r),
                        "saturated radius {r} not covered at t={}",
                        st.t
                    );
                }
            }
        }
    }

    #[test]
    fn nested_initial_regions_stay_nested() {
        let sa = front_scenario(ExteriorProfile::Zero, 1.0, 0.5, 8.0);
        let mut sb = sa.clone();
        sb.omega0 = RegionConfig::Ball { radius: 1.3 };
        let ta = run_front(&sa).unwrap();
        let tb = run_front(&sb).unwrap();
        for (a, b) in ta.states.iter().zip(&tb.states) {
            assert!(a.outer_radius() <= b.outer_radius() + 1e-12);
        }
    }

    #[test]
    fn fixed_boundary_annulus_self_consistent() {
        // Exterior-domain mode with constant boundary data; coarse run within
        // 1% of a (dt/16, 8x nodes) refinement.
        let law = GrowthLaw::constant_test(1.0, 1.0).unwrap();
        let ext = ExteriorDensity::with_growth_rate(ExteriorProfile::Zero, 1.0).unwrap();
        let bval = |_t: f64| 0.3;
        let coarse = fixed_boundary_radial_solution(
            2,
            1.0,
            FixedBoundaryMode::Exterior,
            &bval,
            1.5,
            &ext,
            &law,
            0.5,
            1e-3,
            6,
            8.0,
        )
        .unwrap();
        // Refined oracle.
        let opts = FrontOptions { profile_dr: 8.0 / 4096.0, scan_dr: 8.0 / 2048.0 };
        let component = Component {
            left: 1.0,
            right: 1.5,
            left_kind: EndpointKind::Pinned,
            right_kind: EndpointKind::Free,
        };
        let state = FrontState::new(2, 8.0, vec![component]);
        let times: Vec<f64> = (0..6).map(|i| 0.5 * i as f64 / 5.0).collect();
        let fine =
            integrate_front(state, &times, 1e-3 / 16.0, &law, &ext, &opts, Some(&bval), false)
                .unwrap();
        for (c, f) in coarse.states.iter().zip(&fine.states) {
            let (rc, rf) = (c.outer_radius(), f.outer_radius());
            assert!((rc - rf).abs() / rf < 1e-2, "t={}: {rc} vs {rf}", c.t);
        }
        // The front moved outward.
        assert!(coarse.states.last().unwrap().outer_radius() > 1.6);
    }

    #[test]
    fn fixed_boundary_rejects_saturating_exterior() {
        let law = GrowthLaw::constant_test(1.0, 1.0).unwrap();
        let ext =
            ExteriorDensity::with_growth_rate(ExteriorProfile::Constant { value: 0.9 }, 1.0)
                .unwrap();
        let bval = |_t: f64| 0.3;
        // Horizon 0.5 > ln(1/0.9): rejected.
        let res = fixed_boundary_radial_solution(
            2,
            1.0,
            FixedBoundaryMode::Exterior,
            &bval,
            1.5,
            &ext,
            &law,
            0.5,
            1e-3,
            6,
            8.0,
        );
        assert!(res.is_err());
    }

    #[test]
    fn fixed_boundary_rejects_nonpositive_data() {
        let law = GrowthLaw::constant_test(1.0, 1.0).unwrap();
        let ext = ExteriorDensity::with_growth_rate(ExteriorProfile::Zero, 1.0).unwrap();
        let bval = |t: f64| 0.3 - t;
        let res = fixed_boundary_radial_solution(
            2,
            1.0,
            FixedBoundaryMode::Exterior,
            &bval,
            1.5,
            &ext,
            &law,
            0.5,
            1e-3,
            6,
            8.0,
        );
        assert!(res.is_err());
    }

    #[test]
    fn fixed_boundary_zero_horizon() {
        let law = GrowthLaw::constant_test(1.0, 1.0).unwrap();
        let ext = ExteriorDensity::with_growth_rate(ExteriorProfile::Zero, 1.0).unwrap();
        let bval = |_t: f64| 0.3;
        let traj = fixed_boundary_radial_solution(
            2,
            1.0,
            FixedBoundaryMode::Exterior,
            &bval,
            1.5,
            &ext,
            &law,
            0.0,
            1e-3,
            2,
            8.0,
        )
        .unwrap();
        assert_eq!(traj.states.len(), 2);
        assert!((traj.states[1].outer_radius() - 1.5).abs() < 1e-14);
    }

    #[test]
    fn advance_through_saturated_coefficient_is_logic_error() {
        let law = GrowthLaw::constant_test(1.0, 1.0).unwrap();
        let ext =
            ExteriorDensity::with_growth_rate(ExteriorProfile::Constant { value: 0.95 }, 1.0)
                .unwrap();
        let opts = FrontOptions::for_domain(4.0);
        let mut state = FrontState::new(2, 4.0, vec![Component::ball(1.0)]);
        state.t = 0.06; // past t* = 0.0513 without a scan
        let err = advance(&state, 1e-3, &law, &ext, &opts, None).unwrap_err();
        assert!(matches!(err, Error::Logic(_)));
    }
}
