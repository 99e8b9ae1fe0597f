//! Algebraic layer of the model: density/pressure transforms, growth law,
//! exterior density and the front velocity coefficient.
//!
//! The pressure law is `p = m/(m-1) * rho^(m-1)`; the growth rate `G(p)`
//! vanishes at the homeostatic pressure `p_max` and the exterior density
//! evolves as `rho_E(x,t) = rho_E0(x) * exp(G(0) t)`. The velocity
//! coefficient `g = 1/(1 - min(1, rho_E))` becomes infinite at saturation,
//! which is kept as a distinguished enum value so callers must branch.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Functional form of the growth rate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthForm {
    /// `G(p) = g0 (1 - p/p_max)`: strictly decreasing, `G(p_max) = 0`.
    Linear,
    /// `G(p) = g0` for all `p`. Verification mode only: it yields closed-form
    /// front solutions but violates the decreasing-rate assumption, which is
    /// flagged in reports.
    ConstantTest,
}

/// Growth rate `G` with `G(0) = g0` and homeostatic pressure `p_max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthLaw {
    pub g0: f64,
    pub p_max: f64,
    pub form: GrowthForm,
}

impl GrowthLaw {
    pub fn linear(g0: f64, p_max: f64) -> Result<Self> {
        Self::new(g0, p_max, GrowthForm::Linear)
    }

    pub fn constant_test(g0: f64, p_max: f64) -> Result<Self> {
        Self::new(g0, p_max, GrowthForm::ConstantTest)
    }

    pub fn new(g0: f64, p_max: f64, form: GrowthForm) -> Result<Self> {
        if !(g0 > 0.0) || !g0.is_finite() {
            return Err(Error::Domain(format!("growth rate g0 must be > 0, got {g0}")));
        }
        if !(p_max > 0.0) || !p_max.is_finite() {
            return Err(Error::Domain(format!("p_max must be > 0, got {p_max}")));
        }
        Ok(GrowthLaw { g0, p_max, form })
    }

    /// `G(p)`. The linear form extrapolates linearly above `p_max`, yielding
    /// negative rates; no clamping.
    #[inline]
    pub fn rate(&self, p: f64) -> f64 {
        match self.form {
            GrowthForm::Linear => self.g0 * (1.0 - p / self.p_max),
            GrowthForm::ConstantTest => self.g0,
        }
    }

    /// `G'(p)`.
    #[inline]
    pub fn rate_derivative(&self, _p: f64) -> f64 {
        match self.form {
            GrowthForm::Linear => -self.g0 / self.p_max,
            GrowthForm::ConstantTest => 0.0,
        }
    }

    /// True when `G' < 0` holds (the standing model assumption).
    pub fn is_decreasing(&self) -> bool {
        self.form == GrowthForm::Linear
    }
}

/// Stiffness exponent `m > 1` of the pressure law, with a fast integer-power
/// path since the sweeps use integer exponents.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stiffness {
    m: f64,
    /// `m - 1` as an integer when exact, for `powi` in hot loops.
    int_em1: Option<i32>,
}

impl Stiffness {
    pub fn new(m: f64) -> Result<Self> {
        if !m.is_finite() || m <= 1.0 {
            return Err(Error::Domain(format!("stiffness exponent must satisfy 1 < m < inf, got {m}")));
        }
        let em1 = m - 1.0;
        let int_em1 = if em1.fract() == 0.0 && em1 <= i32::MAX as f64 {
            Some(em1 as i32)
        } else {
            None
        };
        Ok(Stiffness { m, int_em1 })
    }

    #[inline]
    pub fn m(&self) -> f64 {
        self.m
    }

    #[inline]
    fn pow_em1(&self, rho: f64) -> f64 {
        match self.int_em1 {
            Some(k) => rho.powi(k),
            None => rho.powf(self.m - 1.0),
        }
    }

    /// `P_m(rho) = m/(m-1) rho^(m-1)`; strictly increasing for `rho > 0`.
    pub fn pressure_from_density(&self, rho: f64) -> Result<f64> {
        if !(rho >= 0.0) {
            return Err(Error::Domain(format!("density must be >= 0, got {rho}")));
        }
        Ok(self.pressure(rho))
    }

    /// `P_m^{-1}(p) = ((m-1)/m p)^(1/(m-1))`; exact inverse on positive values.
    pub fn density_from_pressure(&self, p: f64) -> Result<f64> {
        if !(p >= 0.0) {
            return Err(Error::Domain(format!("pressure must be >= 0, got {p}")));
        }
        Ok(self.density(p))
    }

    /// Unchecked `P_m`, for inner loops; `rho >= 0` is the caller's invariant.
    #[inline]
    pub(crate) fn pressure(&self, rho: f64) -> f64 {
        self.m / (self.m - 1.0) * self.pow_em1(rho)
    }

    /// Unchecked `P_m^{-1}`.
    #[inline]
    pub(crate) fn density(&self, p: f64) -> f64 {
        if p == 0.0 {
            return 0.0;
        }
        ((self.m - 1.0) / self.m * p).powf(1.0 / (self.m - 1.0))
    }

    /// `rho^m`, the diffusion variable of the divergence-form equation.
    #[inline]
    pub(crate) fn diffusion_variable(&self, rho: f64) -> f64 {
        rho * self.pow_em1(rho)
    }
}

/// Radial profile of the initial exterior density `rho_E0`.
///
/// All acceptance scenarios are radially symmetric in the exterior; a 2D
/// field samples the profile at `|x|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExteriorProfile {
    Zero,
    /// Constant value everywhere in the truncated domain. Does not decay at
    /// the outer edge; the truncation-safety check degenerates (see
    /// `Scenario::validate`).
    Constant { value: f64 },
    /// `value` on `r <= plateau`, cosine taper to zero at `r = edge`.
    Plateau { value: f64, plateau: f64, edge: f64 },
    /// `value` on `r_inner <= r <= r_outer`, zero elsewhere.
    Annulus { value: f64, r_inner: f64, r_outer: f64 },
}

impl ExteriorProfile {
    pub fn at_radius(&self, r: f64) -> f64 {
        match *self {
            ExteriorProfile::Zero => 0.0,
            ExteriorProfile::Constant { value } => value,
            ExteriorProfile::Plateau { value, plateau, edge } => {
                if r <= plateau {
                    value
                } else if r >= edge {
                    0.0
                } else {
                    let s = (r - plateau) / (edge - plateau);
                    value * 0.5 * (1.0 + (std::f64::consts::PI * s).cos())
                }
            }
            ExteriorProfile::Annulus { value, r_inner, r_outer } => {
                if r >= r_inner && r <= r_outer {
                    value
                } else {
                    0.0
                }
            }
        }
    }

    pub fn max_value(&self) -> f64 {
        match *self {
            ExteriorProfile::Zero => 0.0,
            ExteriorProfile::Constant { value }
            | ExteriorProfile::Plateau { value, .. }
            | ExteriorProfile::Annulus { value, .. } => value,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.max_value();
        if !(0.0..1.0).contains(&v) {
            return Err(Error::Domain(format!(
                "exterior density must satisfy 0 <= rho_E0 < 1, got max {v}"
            )));
        }
        match *self {
            ExteriorProfile::Plateau { plateau, edge, .. } if !(edge > plateau && plateau >= 0.0) => {
                Err(Error::Domain("plateau profile requires 0 <= plateau < edge".into()))
            }
            ExteriorProfile::Annulus { r_inner, r_outer, .. } if !(r_outer > r_inner && r_inner >= 0.0) => {
                Err(Error::Domain("annulus profile requires 0 <= r_inner < r_outer".into()))
            }
            _ => Ok(()),
        }
    }

    /// Largest radius of `{rho_E0 >= 1/2}`, or `None` when the set is empty,
    /// or `Unbounded` when the profile does not decay (constant form).
    pub fn half_density_radius(&self) -> HalfDensityExtent {
        match *self {
            ExteriorProfile::Zero => HalfDensityExtent::Empty,
            ExteriorProfile::Constant { value } => {
                if value >= 0.5 {
                    HalfDensityExtent::Unbounded
                } else {
                    HalfDensityExtent::Empty
                }
            }
            ExteriorProfile::Plateau { value, plateau, edge } => {
                if value < 0.5 {
                    HalfDensityExtent::Empty
                } else if value == 0.5 {
                    HalfDensityExtent::Bounded(plateau)
                } else {
                    // Cosine taper crosses value/2 where the factor is 0.5/value.
                    let frac = (2.0 * (0.5 / value) - 1.0).clamp(-1.0, 1.0).acos() / std::f64::consts::PI;
                    HalfDensityExtent::Bounded(plateau + frac * (edge - plateau))
                }
            }
            ExteriorProfile::Annulus { value, r_outer, .. } => {
                if value >= 0.5 {
                    HalfDensityExtent::Bounded(r_outer)
                } else {
                    HalfDensityExtent::Empty
                }
            }
        }
    }
}

/// Extent of the set `{rho_E0 >= 1/2}` used by the truncation-safety bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HalfDensityExtent {
    Empty,
    Bounded(f64),
    Unbounded,
}

/// Exterior density `rho_E(x,t) = rho_E0(x) exp(growth_rate * t)`.
#[derive(Clone, Debug)]
pub struct ExteriorDensity {
    pub profile: ExteriorProfile,
    /// Copy of `G(0)`; zero freezes the exterior for ratio tests.
    pub growth_rate: f64,
}

/// Front velocity coefficient `g = 1/(1 - min(1, rho_E))`.
///
/// `Infinite` is a distinguished value rather than a float infinity so that
/// front logic must branch explicitly on saturation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum VelocityCoeff {
    Finite(f64),
    Infinite,
}

impl VelocityCoeff {
    pub fn is_infinite(&self) -> bool {
        matches!(self, VelocityCoeff::Infinite)
    }

    /// Finite value, or `None` at saturation.
    pub fn finite(&self) -> Option<f64> {
        match *self {
            VelocityCoeff::Finite(v) => Some(v),
            VelocityCoeff::Infinite => None,
        }
    }
}

impl ExteriorDensity {
    pub fn new(profile: ExteriorProfile, law: &GrowthLaw) -> Result<Self> {
        profile.validate()?;
        Ok(ExteriorDensity { profile, growth_rate: law.rate(0.0) })
    }

    /// Exterior density with an explicit growth rate; `0` freezes it in time
    /// (used by the velocity-ratio tests).
    pub fn with_growth_rate(profile: ExteriorProfile, growth_rate: f64) -> Result<Self> {
        profile.validate()?;
        Ok(ExteriorDensity { profile, growth_rate })
    }

    /// `rho_E(r, t)`; nondecreasing in `t`.
    pub fn at_radius(&self, r: f64, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::Domain(format!("time must be >= 0, got {t}")));
        }
        Ok(self.value(r, t))
    }

    #[inline]
    pub(crate) fn value(&self, r: f64, t: f64) -> f64 {
        self.profile.at_radius(r) * (self.growth_rate * t).exp()
    }

    /// `g(r,t) = 1/(1 - min(1, rho_E(r,t)))`, `Infinite` when `rho_E >= 1`.
    pub fn velocity_coefficient(&self, r: f64, t: f64) -> Result<VelocityCoeff> {
        if t < 0.0 {
            return Err(Error::Domain(format!("time must be >= 0, got {t}")));
        }
        Ok(self.coeff(r, t))
    }

    #[inline]
    pub(crate) fn coeff(&self, r: f64, t: f64) -> VelocityCoeff {
        let rho = self.value(r, t);
        if rho >= 1.0 {
            VelocityCoeff::Infinite
        } else {
            VelocityCoeff::Finite(1.0 / (1.0 - rho))
        }
    }

    /// First time `rho_E(r, .)` reaches 1, or `None` if it never does.
    pub fn saturation_time(&self, r: f64) -> Option<f64> {
        let rho0 = self.profile.at_radius(r);
        if rho0 >= 1.0 {
            return Some(0.0);
        }
        if rho0 <= 0.0 || self.growth_rate <= 0.0 {
            return None;
        }
        Some(-rho0.ln() / self.growth_rate)
    }
}
