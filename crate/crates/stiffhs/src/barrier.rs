//! Explicit barrier functions of the comparison theory, with numerical
//! verification of the strict sub/superbarrier differential inequalities.
//!
//! Three constructions are provided:
//! - the expanding radial superbarrier
//!   `W_T = (g0/n)(R^2 e^{16 g0 t/n} - |x|^2)`, which satisfies
//!   `-lap W_T = 2 g0` exactly and `dW_T/dt / |DW_T|^2 = 4` on its zero set;
//! - the expanding subbarrier `w = alpha((c t + r)^2 - |x - x0|^2)` with
//!   `alpha`, `c` chosen by bisection so that `G(4 alpha) > 2 n alpha` and
//!   `c (c + r) / (2 alpha r^2) < 1`, valid for `0 <= t <= 1`;
//! - the spatially constant decay supersolution
//!   `p_max + (M - p_max)_+ e^{-c (m-1) t / M}` with
//!   `c = -max G'` on `[0, M]`, which caps the pressure of the stiff runs.
//!
//! Verification is sampling based (fixed Halton low-discrepancy points, so
//! reports are reproducible), not symbolic; reports carry worst margins.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ExteriorDensity, GrowthLaw, VelocityCoeff};

/// Margin floor for the bisected subbarrier parameters.
const PARAM_MARGIN: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BarrierKind {
    SuperbarrierWt,
    SubbarrierExpanding,
    DecaySupersolution,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BarrierSide {
    Sub,
    Super,
}

/// An explicit barrier with closed-form derivatives.
#[derive(Clone, Debug)]
pub enum Barrier {
    Wt { radius: f64, horizon: f64, dim: u32, g0: f64 },
    Expanding { alpha: f64, speed: f64, radius: f64, center: Vec<f64>, dim: u32 },
    Decay { p_max: f64, initial_sup: f64, c: f64, m: f64 },
}

impl Barrier {
    pub fn kind(&self) -> BarrierKind {
        match self {
            Barrier::Wt { .. } => BarrierKind::SuperbarrierWt,
            Barrier::Expanding { .. } => BarrierKind::SubbarrierExpanding,
            Barrier::Decay { .. } => BarrierKind::DecaySupersolution,
        }
    }

    /// End of the validity window in time. The decay barrier holds for all
    /// times, but its strict margin is sampled only while the exponential
    /// excess stays above rounding (8 decades).
    pub fn horizon(&self) -> f64 {
        match *self {
            Barrier::Wt { horizon, .. } => horizon,
            Barrier::Expanding { .. } => 1.0,
            Barrier::Decay { p_max, initial_sup, c, m } => {
                if initial_sup > p_max {
                    let scale = initial_sup.max(p_max);
                    scale * 8.0 * std::f64::consts::LN_10 / (c * (m - 1.0))
                } else {
                    1.0
                }
            }
        }
    }

    fn offset_radius(&self, x: &[f64]) -> f64 {
        match self {
            Barrier::Expanding { center, .. } => x
                .iter()
                .zip(center.iter().chain(std::iter::repeat(&0.0)))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
            _ => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
        }
    }

    pub fn value(&self, x: &[f64], t: f64) -> f64 {
        let r = self.offset_radius(x);
        self.value_radial(r, t)
    }

    pub fn value_radial(&self, r: f64, t: f64) -> f64 {
        match *self {
            Barrier::Wt { radius, dim, g0, .. } => {
                let n = dim as f64;
                g0 / n * (radius * radius * (16.0 * g0 * t / n).exp() - r * r)
            }
            Barrier::Expanding { alpha, speed, radius, .. } => {
                alpha * ((speed * t + radius).powi(2) - r * r)
            }
            Barrier::Decay { p_max, initial_sup, c, m } => {
                let d = (initial_sup - p_max).max(0.0);
                let scale = initial_sup.max(p_max);
                p_max + d * (-c * (m - 1.0) * t / scale).exp()
            }
        }
    }

    /// `|grad|` at radius `r` (all barriers are radially symmetric).
    pub fn gradient_norm(&self, r: f64, _t: f64) -> f64 {
        match *self {
            Barrier::Wt { dim, g0, .. } => 2.0 * g0 / dim as f64 * r,
            Barrier::Expanding { alpha, .. } => 2.0 * alpha * r,
            Barrier::Decay { .. } => 0.0,
        }
    }

    pub fn laplacian(&self, _r: f64, _t: f64) -> f64 {
        match *self {
            Barrier::Wt { dim: _, g0, .. } => -2.0 * g0,
            Barrier::Expanding { alpha, dim, .. } => -2.0 * dim as f64 * alpha,
            Barrier::Decay { .. } => 0.0,
        }
    }

    pub fn time_derivative(&self, _r: f64, t: f64) -> f64 {
        match *self {
            Barrier::Wt { radius, horizon: _, dim, g0 } => {
                let n = dim as f64;
                g0 / n * radius * radius * (16.0 * g0 / n) * (16.0 * g0 * t / n).exp()
            }
            Barrier::Expanding { alpha, speed, radius, .. } => {
                2.0 * alpha * speed * (speed * t + radius)
            }
            Barrier::Decay { p_max, initial_sup, c, m } => {
                let d = (initial_sup - p_max).max(0.0);
                let scale = initial_sup.max(p_max);
                -d * c * (m - 1.0) / scale * (-c * (m - 1.0) * t / scale).exp()
            }
        }
    }

    /// Radius of the zero level set at time `t` (none for the constant
    /// decay barrier).
    pub fn zero_radius(&self, t: f64) -> Option<f64> {
        match *self {
            Barrier::Wt { radius, dim, g0, .. } => Some(radius * (8.0 * g0 * t / dim as f64).exp()),
            Barrier::Expanding { speed, radius, .. } => Some(speed * t + radius),
            Barrier::Decay { .. } => None,
        }
    }

    /// Centered 3/5-point discrete Laplacian of the barrier at a point, for
    /// the stencil-exactness identities (the barriers are quadratic in x,
    /// so the discrete value matches the analytic one to rounding).
    pub fn discrete_laplacian(&self, x: &[f64], t: f64, h: f64) -> f64 {
        let mut acc = 0.0;
        for axis in 0..x.len() {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[axis] += h;
            xm[axis] -= h;
            acc += self.value(&xp, t) + self.value(&xm, t) - 2.0 * self.value(x, t);
        }
        acc / (h * h)
    }

    pub fn describe(&self) -> String {
        match *self {
            Barrier::Wt { radius, horizon, dim, g0 } => {
                format!("expanding superbarrier (R={radius}, T={horizon}, n={dim}, g0={g0})")
            }
            Barrier::Expanding { alpha, speed, radius, dim, .. } => format!(
                "expanding subbarrier (alpha={alpha:.6e}, c={speed:.6e}, r={radius}, n={dim})"
            ),
            Barrier::Decay { p_max, initial_sup, c, m } => {
                format!("decay supersolution (p_max={p_max}, M={initial_sup}, c={c}, m={m})")
            }
        }
    }
}

/// Expanding radial superbarrier containing any solution whose data sits
/// below it; requires the scenario to keep the exterior density under 1/2
/// beyond `radius` up to the horizon.
pub fn make_wt(radius: f64, horizon: f64, dim: u32, g0: f64) -> Result<Barrier> {
    if !(radius > 0.0) || !(horizon > 0.0) || !(g0 > 0.0) || dim < 1 {
        return Err(Error::Domain(
            "superbarrier requires radius > 0, horizon > 0, g0 > 0, dim >= 1".into(),
        ));
    }
    Ok(Barrier::Wt { radius, horizon, dim, g0 })
}

/// Expanding subbarrier under any solution whose support has an interior
/// ball of the given radius; `alpha` and `c` are selected by bisection with
/// a margin floor on both strict inequalities.
pub fn make_expanding_subbarrier(
    radius: f64,
    center: Vec<f64>,
    dim: u32,
    law: &GrowthLaw,
) -> Result<Barrier> {
    if !(radius > 0.0 && radius < 1.0) {
        return Err(Error::Domain(format!(
            "subbarrier requires interior ball radius in (0, 1), got {radius}"
        )));
    }
    if law.rate(0.0) <= 0.0 {
        return Err(Error::Domain("subbarrier construction requires G(0) > 0".into()));
    }
    let n = dim as f64;

    // First inequality: G(4 alpha) > 2 n alpha.
    let margin_alpha = |alpha: f64| law.rate(4.0 * alpha) - 2.0 * n * alpha;
    let mut hi = 1.0;
    let mut doubled = 0;
    while margin_alpha(hi) > 0.0 && doubled < 60 {
        hi *= 2.0;
        doubled += 1;
    }
    let alpha = if margin_alpha(hi) > 0.0 {
        hi / 2.0
    } else {
        let mut lo = 0.0;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if margin_alpha(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo / 2.0
    };
    if !(alpha > 0.0) || margin_alpha(alpha) < PARAM_MARGIN {
        return Err(Error::Domain(format!(
            "no admissible subbarrier amplitude: margin {} below floor",
            margin_alpha(alpha)
        )));
    }

    // Second inequality: c (c + r) / (2 alpha r^2) < 1.
    let margin_c = |c: f64| 1.0 - c * (c + radius) / (2.0 * alpha * radius * radius);
    let mut hi = radius;
    let mut doubled = 0;
    while margin_c(hi) > 0.0 && doubled < 60 {
        hi *= 2.0;
        doubled += 1;
    }
    let speed = if margin_c(hi) > 0.0 {
        hi / 2.0
    } else {
        let mut lo = 0.0;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if margin_c(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo / 2.0
    };
    if !(speed > 0.0) || margin_c(speed) < PARAM_MARGIN {
        return Err(Error::Domain(format!(
            "no admissible subbarrier speed: margin {} below floor",
            margin_c(speed)
        )));
    }

    Ok(Barrier::Expanding { alpha, speed, radius, center, dim })
}

/// Spatially constant decay supersolution of the stiff pressure equation;
/// the cap used by the stiff-run sanity check.
pub fn make_decay_supersolution(m: f64, initial_sup: f64, law: &GrowthLaw) -> Result<Barrier> {
    if m <= 1.0 {
        return Err(Error::Domain(format!("decay supersolution requires m > 1, got {m}")));
    }
    if initial_sup < 0.0 {
        return Err(Error::Domain("initial pressure bound must be >= 0".into()));
    }
    // c = -max G' over [0, M]; the linear form gives g0/p_max. A constant
    // growth law has no decay (c = 0) and admits no such supersolution.
    let c = -law.rate_derivative(0.0).max(law.rate_derivative(initial_sup));
    if !(c > 0.0) {
        return Err(Error::Domain(
            "decay supersolution requires a strictly decreasing growth law".into(),
        ));
    }
    Ok(Barrier::Decay { p_max: law.p_max, initial_sup, c, m })
}

/// Verification report of one barrier; `pass` requires strictly positive
/// worst margins on both inequalities.
#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub barrier: String,
    pub kind: BarrierKind,
    pub side: BarrierSide,
    pub samples: usize,
    /// Worst interior PDE-inequality margin (positive = strict inequality).
    pub interior_worst: f64,
    /// Worst free-boundary velocity-inequality margin.
    pub boundary_worst: f64,
    /// Whether the coefficient `g` stayed finite outside the support (only
    /// binding for superbarriers).
    pub g_finite_outside: bool,
    pub pass: bool,
}

/// Radical-inverse Halton sequence member (deterministic sampling).
pub fn halton(index: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let mut i = index + 1;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Samples the two strict barrier inequalities over the validity window with
/// the given orientation. Interior margin (sub): `lap phi + G(phi)`;
/// boundary margin (sub): `g |D phi|^2 - phi_t`; signs flip for super. The
/// constant decay barrier is checked against the stiff pressure equation it
/// caps instead (it carries no free boundary).
pub fn verify_barrier(
    b: &Barrier,
    side: BarrierSide,
    law: &GrowthLaw,
    ext: &ExteriorDensity,
    sample_count: usize,
) -> Result<VerifyReport> {
    if sample_count == 0 {
        return Err(Error::Domain("verification requires at least one sample".into()));
    }
    let horizon = b.horizon();
    if !(horizon > 0.0) {
        return Err(Error::Domain("barrier validity window is empty".into()));
    }
    let orient = match side {
        BarrierSide::Sub => 1.0,
        BarrierSide::Super => -1.0,
    };

    let mut interior_worst = f64::INFINITY;
    let mut boundary_worst = f64::INFINITY;
    let mut g_finite_outside = true;

    match b {
        Barrier::Decay { m, .. } => {
            // Supersolution margin of p_t = (m-1) p (lap p + G(p)) + |Dp|^2,
            // normalized by (m-1): -(phi_t/(m-1) - phi G(phi)) for super.
            for i in 0..sample_count {
                let t = halton(i, 2) * horizon;
                let phi = b.value_radial(0.0, t);
                let margin =
                    -orient * (b.time_derivative(0.0, t) / (m - 1.0) - phi * law.rate(phi));
                interior_worst = interior_worst.min(margin);
            }
            boundary_worst = interior_worst;
        }
        _ => {
            for i in 0..sample_count {
                let t = halton(i, 2) * horizon;
                let r0 = b.zero_radius(t).expect("expanding barriers have a zero set");

                // Interior sample.
                let r = halton(i, 3) * r0;
                let phi = b.value_radial(r, t);
                let interior = orient * (b.laplacian(r, t) + law.rate(phi));
                interior_worst = interior_worst.min(interior);

                // Free boundary sample.
                let grad2 = b.gradient_norm(r0, t).powi(2);
                let phi_t = b.time_derivative(r0, t);
                let boundary = match ext.coeff(r0, t) {
                    VelocityCoeff::Finite(g) => orient * (g * grad2 - phi_t),
                    VelocityCoeff::Infinite => match side {
                        // g = inf makes the subbarrier inequality trivially
                        // strict, and disqualifies a superbarrier.
                        BarrierSide::Sub => f64::INFINITY,
                        BarrierSide::Super => {
                            g_finite_outside = false;
                            f64::NEG_INFINITY
                        }
                    },
                };
                boundary_worst = boundary_worst.min(boundary);

                // Superbarriers need g finite on their zero set and beyond.
                if side == BarrierSide::Super {
                    let r_out = r0 * (1.0 + halton(i, 5));
                    if ext.coeff(r_out, t).is_infinite() {
                        g_finite_outside = false;
                    }
                }
            }
        }
    }

    let pass = interior_worst > 0.0
        && boundary_worst > 0.0
        && (side == BarrierSide::Sub || g_finite_outside);
    Ok(VerifyReport {
        barrier: b.describe(),
        kind: b.kind(),
        side,
        samples: sample_count,
        interior_worst,
        boundary_worst,
        g_finite_outside,
        pass,
    })
}
