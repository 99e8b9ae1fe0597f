//! Experiment description: geometry, initial tumor region, exterior density,
//! growth parameters, stiffness sweep, grid and output schedule.
//!
//! Unknown configuration keys are hard errors, and the outer truncation
//! radius is checked against the barrier-derived safety bound
//! `R * exp(16 g0 T / n)`, where `R` is the smallest radius enclosing the
//! initial region together with `{rho_E0 >= 1/2}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Geometry, Grid2d, RadialGrid};
use crate::model::{
    ExteriorDensity, ExteriorProfile, GrowthForm, GrowthLaw, HalfDensityExtent,
};

pub const SCHEMA_VERSION: u32 = 1;

/// Computational geometry of a scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeometryConfig {
    /// Radially symmetric domain `[0, r_outer]` with dimension parameter `dim`.
    Radial { dim: u32, r_outer: f64, cells: usize },
    /// Square box `[-half_width, half_width]^2`, `cells` per side.
    Plane { half_width: f64, cells: usize },
}

/// Initial tumor region `Omega_0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RegionConfig {
    Empty,
    Ball { radius: f64 },
    Annulus { r_inner: f64, r_outer: f64 },
}

impl RegionConfig {
    pub fn is_empty(&self) -> bool {
        matches!(self, RegionConfig::Empty)
    }

    /// Whether the radius `r` lies inside the region.
    pub fn contains_radius(&self, r: f64) -> bool {
        match *self {
            RegionConfig::Empty => false,
            RegionConfig::Ball { radius } => r < radius,
            RegionConfig::Annulus { r_inner, r_outer } => r > r_inner && r < r_outer,
        }
    }

    pub fn outer_radius(&self) -> f64 {
        match *self {
            RegionConfig::Empty => 0.0,
            RegionConfig::Ball { radius } => radius,
            RegionConfig::Annulus { r_outer, .. } => r_outer,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            RegionConfig::Ball { radius } if !(radius > 0.0) => {
                Err(Error::Domain("omega0 ball radius must be > 0".into()))
            }
            RegionConfig::Annulus { r_inner, r_outer } if !(r_outer > r_inner && r_inner >= 0.0) => {
                Err(Error::Domain("omega0 annulus requires 0 <= r_inner < r_outer".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthConfig {
    pub form: GrowthForm,
    pub g0: f64,
    pub p_max: f64,
}

impl GrowthConfig {
    pub fn law(&self) -> Result<GrowthLaw> {
        GrowthLaw::new(self.g0, self.p_max, self.form)
    }
}

fn default_m_list() -> Vec<f64> {
    vec![10.0, 20.0, 40.0, 80.0]
}

fn default_snapshots() -> usize {
    41
}

fn default_cfl() -> f64 {
    0.45
}

fn default_margin_cells() -> usize {
    4
}

fn default_front_dt() -> f64 {
    1e-3
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

/// Full experiment description; the JSON schema mirrors the fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    pub geometry: GeometryConfig,
    pub omega0: RegionConfig,
    #[serde(default = "ExteriorProfile::zero")]
    pub exterior: ExteriorProfile,
    pub growth: GrowthConfig,
    #[serde(default = "default_m_list")]
    pub m_list: Vec<f64>,
    /// Time horizon `T`.
    pub horizon: f64,
    /// Number of output snapshots, uniformly spaced on `[0, T]` (>= 2).
    #[serde(default = "default_snapshots")]
    pub snapshots: usize,
    /// Support-detection threshold; defaults to `1e-3 * p_max`.
    #[serde(default)]
    pub support_threshold: Option<f64>,
    /// Sup-convolution radius sigma; defaults to `2 dx`.
    #[serde(default)]
    pub sup_convolution_radius: Option<f64>,
    #[serde(default = "default_cfl")]
    pub cfl_safety: f64,
    /// Shrunken-set margin in cells ("away from the front" means this many
    /// cells beyond the reference front).
    #[serde(default = "default_margin_cells")]
    pub margin_cells: usize,
    /// Time step of the reference front solver.
    #[serde(default = "default_front_dt")]
    pub front_dt: f64,
}

impl ExteriorProfile {
    fn zero() -> Self {
        ExteriorProfile::Zero
    }
}

impl Scenario {
    /// Scheduled output times (uniform, includes 0 and T).
    pub fn output_times(&self) -> Vec<f64> {
        let k = self.snapshots.max(2);
        (0..k).map(|i| self.horizon * i as f64 / (k - 1) as f64).collect()
    }

    pub fn law(&self) -> Result<GrowthLaw> {
        self.growth.law()
    }

    pub fn exterior_density(&self) -> Result<ExteriorDensity> {
        ExteriorDensity::new(self.exterior.clone(), &self.law()?)
    }

    pub fn support_threshold(&self) -> f64 {
        self.support_threshold.unwrap_or(1e-3 * self.growth.p_max)
    }

    pub fn geometry(&self) -> Result<Geometry> {
        match self.geometry {
            GeometryConfig::Radial { dim, r_outer, cells } => {
                Ok(Geometry::Radial(RadialGrid::new(dim, 0.0, r_outer, cells)?))
            }
            GeometryConfig::Plane { half_width, cells } => {
                Ok(Geometry::Plane(Grid2d::centered_square(half_width, cells)?))
            }
        }
    }

    pub fn is_radial(&self) -> bool {
        matches!(self.geometry, GeometryConfig::Radial { .. })
    }

    /// Dimension parameter entering the truncation bound.
    pub fn dim(&self) -> u32 {
        match self.geometry {
            GeometryConfig::Radial { dim, .. } => dim,
            GeometryConfig::Plane { .. } => 2,
        }
    }

    pub fn domain_radius(&self) -> f64 {
        match self.geometry {
            GeometryConfig::Radial { r_outer, .. } => r_outer,
            GeometryConfig::Plane { half_width, .. } => half_width,
        }
    }

    /// Barrier-derived lower bound on the truncation radius, when the set
    /// `Omega_0 union {rho_E0 >= 1/2}` is bounded inside the domain.
    pub fn required_outer_radius(&self) -> Option<f64> {
        let r_half = match self.exterior.half_density_radius() {
            HalfDensityExtent::Empty => 0.0,
            HalfDensityExtent::Bounded(r) => r,
            HalfDensityExtent::Unbounded => return None,
        };
        let r = self.omega0.outer_radius().max(r_half);
        if r == 0.0 {
            return Some(0.0);
        }
        Some(r * (16.0 * self.growth.g0 * self.horizon / self.dim() as f64).exp())
    }

    /// Validates all invariants including the truncation-safety bound (the
    /// precondition of the stiff runs). Returns warnings for conditions that
    /// are reported but not fatal.
    pub fn validate(&self) -> Result<Vec<String>> {
        let mut warnings = self.validate_core()?;
        match self.required_outer_radius() {
            Some(required) => {
                if self.domain_radius() < required {
                    return Err(Error::Config(vec![format!(
                        "outer radius {} violates the truncation-safety bound {required:.6} \
                         (= R exp(16 g0 T / n))",
                        self.domain_radius()
                    )]));
                }
            }
            None => warnings.push(
                "exterior density does not decay below 1/2 inside the domain; the \
                 truncation-safety bound cannot be certified"
                    .into(),
            ),
        }
        Ok(warnings)
    }

    /// Validates everything except the truncation-safety bound (sufficient
    /// for the quasi-static front solver, which cannot outrun its domain).
    pub fn validate_core(&self) -> Result<Vec<String>> {
        let mut failures = Vec::new();
        let mut warnings = Vec::new();

        if self.schema_version != SCHEMA_VERSION {
            failures.push(format!(
                "schema_version {} does not match supported version {SCHEMA_VERSION}",
                self.schema_version
            ));
        }
        if let Err(e) = self.growth.law() {
            failures.push(e.to_string());
        }
        if let Err(e) = self.omega0.validate() {
            failures.push(e.to_string());
        }
        if let Err(e) = self.exterior.validate() {
            failures.push(e.to_string());
        }
        if let Err(e) = self.geometry() {
            failures.push(e.to_string());
        }
        if !(self.horizon >= 0.0) || !self.horizon.is_finite() {
            failures.push(format!("horizon must be >= 0 and finite, got {}", self.horizon));
        }
        if self.snapshots < 2 {
            failures.push("snapshots must be >= 2".into());
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            failures.push(format!("cfl_safety must lie in (0, 1], got {}", self.cfl_safety));
        }
        if self.cfl_safety > 2.0 / 3.0 {
            warnings.push(format!(
                "cfl_safety {} > 2/3: the combined diffusion+source update is no longer \
                 provably monotone",
                self.cfl_safety
            ));
        }
        for &m in &self.m_list {
            if !(m > 1.0) || !m.is_finite() {
                failures.push(format!("all m values must satisfy 1 < m < inf, got {m}"));
            }
        }
        if self.m_list.windows(2).any(|w| w[1] <= w[0]) {
            failures.push("m_list must be strictly increasing".into());
        }
        if let Some(eps) = self.support_threshold {
            if !(eps > 0.0) {
                failures.push(format!("support_threshold must be > 0, got {eps}"));
            }
        }
        if let Some(sigma) = self.sup_convolution_radius {
            if !(sigma >= 0.0) {
                failures.push(format!("sup_convolution_radius must be >= 0, got {sigma}"));
            }
        }
        if !(self.front_dt > 0.0) {
            failures.push(format!("front_dt must be > 0, got {}", self.front_dt));
        }
        if self.omega0.outer_radius() >= self.domain_radius() {
            failures.push("omega0 must be strictly inside the computational domain".into());
        }

        if failures.is_empty() {
            Ok(warnings)
        } else {
            Err(Error::Config(failures))
        }
    }

    /// Expands the outer radius (keeping `dx`) until the truncation bound
    /// holds; used by the config parser. Returns a description of the change
    /// when one was made.
    pub fn expand_to_truncation_bound(&mut self) -> Option<String> {
        let factor = (16.0 * self.growth.g0 * self.horizon / self.dim() as f64).exp();
        let (required, note) = match self.required_outer_radius() {
            Some(required) => (required, None),
            // No certifiable bound: expand once by the barrier factor.
            None => (
                self.domain_radius() * factor,
                Some("bound uncertifiable for non-decaying exterior; expanded once by the barrier factor"),
            ),
        };
        if self.domain_radius() >= required && note.is_none() {
            return None;
        }
        let msg;
        match &mut self.geometry {
            GeometryConfig::Radial { r_outer, cells, .. } => {
                let dx = *r_outer / *cells as f64;
                let new_cells = (required / dx).ceil() as usize;
                let new_outer = new_cells as f64 * dx;
                msg = format!(
                    "outer radius expanded from {} to {new_outer} ({} -> {new_cells} cells){}",
                    *r_outer,
                    *cells,
                    note.map(|n| format!("; {n}")).unwrap_or_default()
                );
                *r_outer = new_outer;
                *cells = new_cells;
            }
            GeometryConfig::Plane { half_width, cells } => {
                let dx = 2.0 * *half_width / *cells as f64;
                let new_cells = (2.0 * required / dx).ceil() as usize;
                let new_half = new_cells as f64 * dx / 2.0;
                msg = format!(
                    "half width expanded from {} to {new_half} ({} -> {new_cells} cells){}",
                    *half_width,
                    *cells,
                    note.map(|n| format!("; {n}")).unwrap_or_default()
                );
                *half_width = new_half;
                *cells = new_cells;
            }
        }
        Some(msg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_scenario() -> Scenario {
        Scenario {
            schema_version: SCHEMA_VERSION,
            name: "test".into(),
            geometry: GeometryConfig::Radial { dim: 2, r_outer: 8.0, cells: 400 },
            omega0: RegionConfig::Ball { radius: 1.0 },
            exterior: ExteriorProfile::Zero,
            growth: GrowthConfig { form: GrowthForm::ConstantTest, g0: 1.0, p_max: 1.0 },
            m_list: default_m_list(),
            horizon: 0.25,
            snapshots: 11,
            support_threshold: None,
            sup_convolution_radius: None,
            cfl_safety: default_cfl(),
            margin_cells: 4,
            front_dt: 1e-3,
        }
    }

    #[test]
    fn valid_scenario_passes() {
        let s = base_scenario();
        // R = 1, bound = exp(16*0.25/2) = e^2 = 7.39 < 8.
        assert!(s.validate().unwrap().is_empty());
    }

    #[test]
    fn truncation_bound_enforced() {
        let mut s = base_scenario();
        s.horizon = 0.5; // bound e^4 = 54.6 > 8
        assert!(s.validate().is_err());
        let msg = s.expand_to_truncation_bound().unwrap();
        assert!(msg.contains("expanded"));
        assert!(s.validate().unwrap().is_empty());
        // dx is preserved.
        assert!((s.domain_radius() / 8.0 * 400.0 - matches_cells(&s)).abs() < 1.5);
    }

    fn matches_cells(s: &Scenario) -> f64 {
        match s.geometry {
            GeometryConfig::Radial { cells, .. } => cells as f64,
            _ => unreachable!(),
        }
    }

    #[test]
    fn non_decaying_exterior_warns() {
        let mut s = base_scenario();
        s.exterior = ExteriorProfile::Constant { value: 0.95 };
        let warnings = s.validate().unwrap();
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("cannot be certified"));
    }

    #[test]
    fn invalid_fields_listed_together() {
        let mut s = base_scenario();
        s.m_list = vec![10.0, 5.0];
        s.cfl_safety = 0.0;
        s.snapshots = 1;
        match s.validate() {
            Err(Error::Config(list)) => assert!(list.len() >= 3, "got {list:?}"),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let json = r#"{
            "geometry": {"kind": "radial", "dim": 2, "r_outer": 8.0, "cells": 100},
            "omega0": {"kind": "ball", "radius": 1.0},
            "growth": {"form": "linear", "g0": 1.0, "p_max": 1.0},
            "horizon": 0.1,
            "unexpected_key": 3
        }"#;
        assert!(serde_json::from_str::<Scenario>(json).is_err());
    }

    #[test]
    fn defaults_applied() {
        let json = r#"{
            "geometry": {"kind": "radial", "dim": 2, "r_outer": 8.0, "cells": 100},
            "omega0": {"kind": "ball", "radius": 1.0},
            "growth": {"form": "linear", "g0": 1.0, "p_max": 1.0},
            "horizon": 0.1
        }"#;
        let s: Scenario = serde_json::from_str(json).unwrap();
        assert_eq!(s.m_list, default_m_list());
        assert_eq!(s.exterior, ExteriorProfile::Zero);
        assert_eq!(s.schema_version, SCHEMA_VERSION);
        assert!((s.support_threshold() - 1e-3).abs() < 1e-18);
    }
}
