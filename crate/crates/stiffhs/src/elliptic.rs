//! Quasi-static pressure solver for `-lap p = G(p)` with Dirichlet data, on
//! radial domains and on 2D masks.
//!
//! Since `G` is nonincreasing the discrete operator is an M-matrix and damped
//! Newton from `p = 0` converges robustly; the iteration cap is a hard
//! failure, not a retry knob. The radial solver uses the node-centered
//! stencil `-(p'' + (n-1)/r p') = G(p)`; a reflected ghost node enforces
//! `p'(0) = 0` at the coordinate singularity. Dirichlet data on 2D masks is
//! imposed at cut cells by direct substitution, which is first order at the
//! boundary.

use crate::error::{Error, Result};
use crate::grid::{Grid2d, RadialGrid};
use crate::model::GrowthLaw;

const MAX_NEWTON_ITERS: usize = 50;
const RADIAL_TOL: f64 = 1e-10;
const PLANE_TOL: f64 = 1e-9;

/// Inner boundary condition of a radial solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RadialBc {
    /// Reflection at `r = 0` (`p'(0) = 0`); requires `r_inner = 0`.
    Symmetry,
    Dirichlet(f64),
}

/// Which boundary of a radial profile.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Inner,
    Outer,
}

/// Node-centered solution of the radial pressure problem.
#[derive(Clone, Debug)]
pub struct RadialProfile {
    pub dim: u32,
    pub r_inner: f64,
    pub r_outer: f64,
    /// Node values, `samples[i]` at `r_inner + i * dr`.
    pub samples: Vec<f64>,
    pub bc_inner: RadialBc,
    pub bc_outer: f64,
}

impl RadialProfile {
    pub fn dr(&self) -> f64 {
        (self.r_outer - self.r_inner) / (self.samples.len() - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        self.r_inner + i as f64 * self.dr()
    }

    /// Linear interpolation; clamps outside `[r_inner, r_outer]`.
    pub fn value_at(&self, r: f64) -> f64 {
        let h = self.dr();
        let s = (r - self.r_inner) / h;
        if s <= 0.0 {
            return self.samples[0];
        }
        let last = self.samples.len() - 1;
        if s >= last as f64 {
            return self.samples[last];
        }
        let i = s.floor() as usize;
        let w = s - i as f64;
        self.samples[i] * (1.0 - w) + self.samples[i + 1] * w
    }

    /// One-sided second-order `|p_r|` at the requested boundary.
    pub fn boundary_gradient(&self, side: Side) -> Result<f64> {
        let n = self.samples.len();
        if n < 3 {
            return Err(Error::Domain("boundary gradient needs at least 3 nodes".into()));
        }
        let h = self.dr();
        let p = &self.samples;
        let grad = match side {
            Side::Outer => (3.0 * p[n - 1] - 4.0 * p[n - 2] + p[n - 3]) / (2.0 * h),
            Side::Inner => (-3.0 * p[0] + 4.0 * p[1] - p[2]) / (2.0 * h),
        };
        Ok(grad.abs())
    }

    /// Max norm of the discrete residual `-(p'' + (n-1)/r p') - G(p)` at
    /// interior nodes.
    pub fn residual_max(&self, law: &GrowthLaw) -> f64 {
        let n = self.samples.len();
        let mut f = vec![0.0; n];
        radial_residual(
            self.dim,
            self.r_inner,
            self.dr(),
            self.bc_inner,
            self.bc_outer,
            law,
            &self.samples,
            &mut f,
        );
        f.iter()
            .take(n - 1)
            .skip(1)
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
    }
}

#[allow(clippy::too_many_arguments)]
fn radial_residual(
    dim: u32,
    r_inner: f64,
    h: f64,
    bc_inner: RadialBc,
    bc_outer: f64,
    law: &GrowthLaw,
    p: &[f64],
    out: &mut [f64],
) {
    let n = p.len();
    let nf = dim as f64;
    let inv_h2 = 1.0 / (h * h);
    out[0] = match bc_inner {
        // Ghost reflection: lap p(0) = 2 n (p1 - p0)/h^2.
        RadialBc::Symmetry => -2.0 * nf * (p[1] - p[0]) * inv_h2 - law.rate(p[0]),
        RadialBc::Dirichlet(v) => p[0] - v,
    };
    for i in 1..n - 1 {
        let r = r_inner + i as f64 * h;
        let lap = (p[i + 1] - 2.0 * p[i] + p[i - 1]) * inv_h2
            + (nf - 1.0) / r * (p[i + 1] - p[i - 1]) / (2.0 * h);
        out[i] = -lap - law.rate(p[i]);
    }
    out[n - 1] = p[n - 1] - bc_outer;
}

/// Thomas solve of a tridiagonal system; diagonals are consumed.
fn solve_tridiagonal(lower: &mut [f64], diag: &mut [f64], upper: &mut [f64], rhs: &mut [f64]) {
    let n = diag.len();
    for i in 1..n {
        let w = lower[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for i in (0..n - 1).rev() {
        rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
    }
}

/// Solves `-(p'' + (n-1)/r p') = G(p)` on `[r_inner, r_outer]` with the given
/// boundary data by damped Newton on the node-centered tridiagonal system.
pub fn solve_radial(
    dim: u32,
    r_inner: f64,
    r_outer: f64,
    bc_inner: RadialBc,
    bc_outer: f64,
    law: &GrowthLaw,
    grid_points: usize,
) -> Result<RadialProfile> {
    if !(r_outer > r_inner && r_inner >= 0.0) {
        return Err(Error::Domain(format!(
            "radial domain must satisfy 0 <= r_inner < r_outer, got [{r_inner}, {r_outer}]"
        )));
    }
    if grid_points < 16 {
        return Err(Error::Domain("radial solve needs at least 16 grid points".into()));
    }
    if bc_outer < 0.0 {
        return Err(Error::Domain(format!("boundary data must be >= 0, got {bc_outer}")));
    }
    match bc_inner {
        RadialBc::Dirichlet(v) if v < 0.0 => {
            return Err(Error::Domain(format!("boundary data must be >= 0, got {v}")));
        }
        RadialBc::Symmetry if r_inner != 0.0 => {
            return Err(Error::Domain("symmetry condition requires r_inner = 0".into()));
        }
        _ => {}
    }

    let n = grid_points;
    let h = (r_outer - r_inner) / (n - 1) as f64;
    let nf = dim as f64;
    let inv_h2 = 1.0 / (h * h);

    let mut p = vec![0.0; n];
    let mut f = vec![0.0; n];
    let mut f_trial = vec![0.0; n];
    radial_residual(dim, r_inner, h, bc_inner, bc_outer, law, &p, &mut f);
    let mut res = f.iter().fold(0.0f64, |a, v| a.max(v.abs()));

    for _iter in 0..MAX_NEWTON_ITERS {
        if res <= RADIAL_TOL {
            return Ok(RadialProfile { dim, r_inner, r_outer, samples: p, bc_inner, bc_outer });
        }
        // Jacobian of the residual map.
        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        match bc_inner {
            RadialBc::Symmetry => {
                diag[0] = 2.0 * nf * inv_h2 - law.rate_derivative(p[0]);
                upper[0] = -2.0 * nf * inv_h2;
            }
            RadialBc::Dirichlet(_) => {
                diag[0] = 1.0;
            }
        }
        for i in 1..n - 1 {
            let r = r_inner + i as f64 * h;
            let drift = (nf - 1.0) / r / (2.0 * h);
            lower[i] = -(inv_h2 - drift);
            diag[i] = 2.0 * inv_h2 - law.rate_derivative(p[i]);
            upper[i] = -(inv_h2 + drift);
        }
        diag[n - 1] = 1.0;

        let mut step: Vec<f64> = f.iter().map(|v| -v).collect();
        solve_tridiagonal(&mut lower, &mut diag, &mut upper, &mut step);

        // Damping by halving until the residual decreases.
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<f64> = p.iter().zip(&step).map(|(pi, si)| pi + lambda * si).collect();
            radial_residual(dim, r_inner, h, bc_inner, bc_outer, law, &trial, &mut f_trial);
            let trial_res = f_trial.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if trial_res < res || trial_res <= RADIAL_TOL {
                p = trial;
                std::mem::swap(&mut f, &mut f_trial);
                res = trial_res;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(Error::NonConvergence { iterations: MAX_NEWTON_ITERS, residual: res });
        }
    }
    if res <= RADIAL_TOL {
        return Ok(RadialProfile { dim, r_inner, r_outer, samples: p, bc_inner, bc_outer });
    }
    Err(Error::NonConvergence { iterations: MAX_NEWTON_ITERS, residual: res })
}

/// Cell-centered masked radial solve with the same conservative flux
/// Laplacian as the time stepper: `-r^(1-n) D(r^(n-1) D p) = G(p)` at inside
/// cells, `p = 0` at outside cells. Matched initial data is built on this
/// operator so that the discrete time-monotonicity argument is exact.
pub fn solve_radial_cells(grid: &RadialGrid, inside: &[bool], law: &GrowthLaw) -> Result<Vec<f64>> {
    let n = grid.n_cells;
    if inside.len() != n {
        return Err(Error::Domain("mask length does not match grid".into()));
    }
    if !inside.iter().any(|&b| b) {
        return Ok(vec![0.0; n]);
    }

    let inv_dx = 1.0 / grid.dx;
    let residual = |p: &[f64], out: &mut [f64]| {
        for j in 0..n {
            if !inside[j] {
                out[j] = p[j];
                continue;
            }
            let flux_in = if j == 0 { 0.0 } else { grid.face_area(j) * (p[j] - p[j - 1]) * inv_dx };
            let flux_out = if j + 1 == n {
                0.0
            } else {
                grid.face_area(j + 1) * (p[j + 1] - p[j]) * inv_dx
            };
            out[j] = -(flux_out - flux_in) / grid.cell_volume(j) - law.rate(p[j]);
        }
    };

    let mut p = vec![0.0; n];
    let mut f = vec![0.0; n];
    let mut f_trial = vec![0.0; n];
    residual(&p, &mut f);
    let mut res = f.iter().fold(0.0f64, |a, v| a.max(v.abs()));

    for _ in 0..MAX_NEWTON_ITERS {
        if res <= RADIAL_TOL {
            return Ok(p);
        }
        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        for j in 0..n {
            if !inside[j] {
                diag[j] = 1.0;
                continue;
            }
            let vol = grid.cell_volume(j);
            let a_in = if j == 0 { 0.0 } else { grid.face_area(j) };
            let a_out = if j + 1 == n { 0.0 } else { grid.face_area(j + 1) };
            diag[j] = (a_in + a_out) * inv_dx / vol - law.rate_derivative(p[j]);
            if j > 0 {
                lower[j] = -a_in * inv_dx / vol;
            }
            if j + 1 < n {
                upper[j] = -a_out * inv_dx / vol;
            }
        }
        let mut step: Vec<f64> = f.iter().map(|v| -v).collect();
        solve_tridiagonal(&mut lower, &mut diag, &mut upper, &mut step);

        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<f64> = p.iter().zip(&step).map(|(pi, si)| pi + lambda * si).collect();
            residual(&trial, &mut f_trial);
            let trial_res = f_trial.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if trial_res < res || trial_res <= RADIAL_TOL {
                p = trial;
                std::mem::swap(&mut f, &mut f_trial);
                res = trial_res;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if res <= RADIAL_TOL {
        Ok(p)
    } else {
        Err(Error::NonConvergence { iterations: MAX_NEWTON_ITERS, residual: res })
    }
}

/// An open subdomain of a 2D box grid (cell-interior convention) carrying
/// Dirichlet data on its complement.
#[derive(Clone, Debug)]
pub struct DomainMask {
    pub grid: Grid2d,
    pub inside: Vec<bool>,
    pub boundary_value: f64,
    /// Number of connected components (4-neighbor flood fill).
    pub components: usize,
}

impl DomainMask {
    pub fn new(grid: Grid2d, inside: Vec<bool>, boundary_value: f64) -> Result<Self> {
        if inside.len() != grid.len() {
            return Err(Error::Domain("mask length does not match grid".into()));
        }
        if boundary_value < 0.0 {
            return Err(Error::Domain("boundary data must be >= 0".into()));
        }
        let components = count_components(&grid, &inside);
        Ok(DomainMask { grid, inside, boundary_value, components })
    }

    pub fn disc(grid: Grid2d, center: [f64; 2], radius: f64, boundary_value: f64) -> Result<Self> {
        let inside = (0..grid.len())
            .map(|k| {
                let [x, y] = grid.center(k % grid.nx, k / grid.nx);
                (x - center[0]).hypot(y - center[1]) < radius
            })
            .collect();
        Self::new(grid, inside, boundary_value)
    }

    pub fn annulus(grid: Grid2d, r_inner: f64, r_outer: f64, boundary_value: f64) -> Result<Self> {
        let inside = (0..grid.len())
            .map(|k| {
                let [x, y] = grid.center(k % grid.nx, k / grid.nx);
                let r = x.hypot(y);
                r > r_inner && r < r_outer
            })
            .collect();
        Self::new(grid, inside, boundary_value)
    }

    pub fn empty(grid: Grid2d) -> Self {
        let inside = vec![false; grid.len()];
        DomainMask { grid, inside, boundary_value: 0.0, components: 0 }
    }

    pub fn is_empty(&self) -> bool {
        !self.inside.iter().any(|&b| b)
    }
}

fn count_components(grid: &Grid2d, inside: &[bool]) -> usize {
    let mut seen = vec![false; inside.len()];
    let mut count = 0;
    let mut stack = Vec::new();
    for start in 0..inside.len() {
        if !inside[start] || seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(k) = stack.pop() {
            let (i, j) = (k % grid.nx, k / grid.nx);
            let mut push = |kk: usize| {
                if inside[kk] && !seen[kk] {
                    seen[kk] = true;
                    stack.push(kk);
                }
            };
            if i > 0 {
                push(k - 1);
            }
            if i + 1 < grid.nx {
                push(k + 1);
            }
            if j > 0 {
                push(k - grid.nx);
            }
            if j + 1 < grid.ny {
                push(k + grid.nx);
            }
        }
    }
    count
}

/// Conjugate gradients for the SPD linearized system restricted to the mask.
struct MaskedPoisson<'a> {
    mask: &'a DomainMask,
    /// `-G'(p)` at each cell (nonnegative since G is nonincreasing).
    shift: Vec<f64>,
}

impl MaskedPoisson<'_> {
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let g = &self.mask.grid;
        let inv_dx2 = 1.0 / (g.dx * g.dx);
        for k in 0..x.len() {
            if !self.mask.inside[k] {
                y[k] = 0.0;
                continue;
            }
            let (i, j) = (k % g.nx, k / g.nx);
            let mut acc = (4.0 * inv_dx2 + self.shift[k]) * x[k];
            let mut nb = |kk: usize| {
                if self.mask.inside[kk] {
                    acc -= inv_dx2 * x[kk];
                }
            };
            // Exterior neighbors are Dirichlet cells: they contribute to the
            // right-hand side only.
            if i > 0 {
                nb(k - 1);
            }
            if i + 1 < g.nx {
                nb(k + 1);
            }
            if j > 0 {
                nb(k - g.nx);
            }
            if j + 1 < g.ny {
                nb(k + g.nx);
            }
            y[k] = acc;
        }
    }

    fn solve(&self, rhs: &[f64], tol: f64) -> Result<Vec<f64>> {
        let n = rhs.len();
        let mut x = vec![0.0; n];
        let mut r = rhs.to_vec();
        let mut p = r.clone();
        let mut ap = vec![0.0; n];
        let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(u, v)| u * v).sum() };
        let mut rr = dot(&r, &r);
        let target = tol * tol * rr.max(1e-300);
        let max_iters = 20 * n + 100;
        for _ in 0..max_iters {
            if rr <= target {
                return Ok(x);
            }
            self.apply(&p, &mut ap);
            let pap = dot(&p, &ap);
            if pap <= 0.0 {
                break;
            }
            let alpha = rr / pap;
            for k in 0..n {
                x[k] += alpha * p[k];
                r[k] -= alpha * ap[k];
            }
            let rr_new = dot(&r, &r);
            let beta = rr_new / rr;
            rr = rr_new;
            for k in 0..n {
                p[k] = r[k] + beta * p[k];
            }
        }
        if rr <= target {
            Ok(x)
        } else {
            Err(Error::NonConvergence { iterations: max_iters, residual: rr.sqrt() })
        }
    }
}

/// Solves the 5-point discretization of `-lap p = G(p)` on the mask with
/// Dirichlet data substituted at outside cells. Returns the full-grid field
/// (boundary value outside the mask is not included: outside cells carry the
/// Dirichlet value).
pub fn solve_cartesian_2d(mask: &DomainMask, law: &GrowthLaw) -> Result<Vec<f64>> {
    let grid = &mask.grid;
    if mask.is_empty() {
        return Ok(vec![0.0; grid.len()]);
    }
    let n = grid.len();
    let inv_dx2 = 1.0 / (grid.dx * grid.dx);
    let bv = mask.boundary_value;

    let mut p: Vec<f64> = (0..n).map(|k| if mask.inside[k] { 0.0 } else { bv }).collect();

    let residual = |p: &[f64], out: &mut [f64]| {
        for k in 0..n {
            if !mask.inside[k] {
                out[k] = 0.0;
                continue;
            }
            let (i, j) = (k % grid.nx, k / grid.nx);
            let l = if i > 0 { p[k - 1] } else { bv };
            let r = if i + 1 < grid.nx { p[k + 1] } else { bv };
            let d = if j > 0 { p[k - grid.nx] } else { bv };
            let t = if j + 1 < grid.ny { p[k + grid.nx] } else { bv };
            let lap = (l + r + d + t - 4.0 * p[k]) * inv_dx2;
            out[k] = -lap - law.rate(p[k]);
        }
    };

    let mut f = vec![0.0; n];
    residual(&p, &mut f);
    let mut res = f.iter().fold(0.0f64, |a, v| a.max(v.abs()));

    for _ in 0..MAX_NEWTON_ITERS {
        if res <= PLANE_TOL {
            return Ok(p);
        }
        let shift: Vec<f64> =
            (0..n).map(|k| if mask.inside[k] { -law.rate_derivative(p[k]) } else { 0.0 }).collect();
        let op = MaskedPoisson { mask, shift };
        let rhs: Vec<f64> = f.iter().map(|v| -v).collect();
        let step = op.solve(&rhs, 1e-12)?;

        let mut lambda = 1.0;
        let mut accepted = false;
        let mut f_trial = vec![0.0; n];
        for _ in 0..30 {
            let trial: Vec<f64> = (0..n).map(|k| p[k] + lambda * step[k]).collect();
            residual(&trial, &mut f_trial);
            let trial_res = f_trial.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if trial_res < res || trial_res <= PLANE_TOL {
                p = trial;
                std::mem::swap(&mut f, &mut f_trial);
                res = trial_res;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if res <= PLANE_TOL {
        Ok(p)
    } else {
        Err(Error::NonConvergence { iterations: MAX_NEWTON_ITERS, residual: res })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GrowthLaw;
    use approx::assert_relative_eq;

    #[test]
    fn slab_closed_form() {
        // Constant-test G = g0 on (0, L) with zero Dirichlet data:
        // p(x) = g0 x (L - x) / 2.
        let law = GrowthLaw::constant_test(1.0, 1.0).unwrap();
        let prof =
            solve_radial(1, 0.0, 1.0, RadialBc::Dirichlet(0.0), 0.0, &law, 101).unwrap();
        assert_relative_eq!(prof.value_at(0.5), 0.125, max_relative = 1e-10);
        assert!(prof.residual_max(&law) <= 1e-10);
        // |p'(L)| = g0 L / 2.
        assert_relative_eq!(prof.boundary_gradient(Side::Outer).unwrap(), 0.5, max_relative = 1e-9);
    }

    #[test]
    fn ball_closed_form() {
        // p(r) = g0 (R^2 - r^2) / (2n); n=2, R=1, g0=1: p(0) = 0.25.
        let law = GrowthLaw::constant_test(1.0, 1.0).unwrap();
        let prof = solve_radial(2, 0.0, 1.0, RadialBc::Symmetry, 0.0, &law, 129).unwrap();
        assert_relative_eq!(prof.samples[0], 0.25, max_relative = 1e-9);
        // |p_r(R)| = g0 R / n.
        assert_relative_eq!(prof.boundary_gradient(Side::Outer).unwrap(), 0.5, max_relative = 1e-9);
    }

    #[test]
    fn symmetry_requires_origin() {
        let law = GrowthLaw::constant_test(1.0, 1.0).unwrap();
        assert!(solve_radial(2, 0.5, 1.0, RadialBc::Symmetry, 0.0, &law, 33).is_err());
    }

    #[test]
    fn boundary_gradient_needs_three_nodes() {
        let stub = RadialProfile {
            dim: 2,
            r_inner: 0.0,
            r_outer: 1.0,
            samples: vec![0.1, 0.0],
            bc_inner: RadialBc::Symmetry,
            bc_outer: 0.0,
        };
        assert!(stub.boundary_gradient(Side::Outer).is_err());
    }

    #[test]
    fn negative_boundary_rejected() {
        let law = GrowthLaw::constant_test(1.0, 1.0).unwrap();
        assert!(solve_radial(2, 0.0, 1.0, RadialBc::Symmetry, -0.1, &law, 33).is_err());
        assert!(solve_radial(2, 0.5, 1.0, RadialBc::Dirichlet(-1.0), 0.0, &law, 33).is_err());
    }

    #[test]
    fn comparison_in_boundary_data() {
        // bc1 <= bc2 pointwise implies p1 <= p2 pointwise.
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let law = GrowthLaw::linear(1.0, 1.0).unwrap();
        for _ in 0..10 {
            let inner1: f64 = rng.gen_range(0.0..0.5);
            let outer1: f64 = rng.gen_range(0.0..0.5);
            let inner2 = inner1 + rng.gen_range(0.0..0.5);
            let outer2 = outer1 + rng.gen_range(0.0..0.5);
            let p1 =
                solve_radial(2, 0.5, 2.0, RadialBc::Dirichlet(inner1), outer1, &law, 65).unwrap();
            let p2 =
                solve_radial(2, 0.5, 2.0, RadialBc::Dirichlet(inner2), outer2, &law, 65).unwrap();
            for (a, b) in p1.samples.iter().zip(&p2.samples) {
                assert!(a <= &(b + 1e-12));
            }
        }
    }

    #[test]
    fn discrete_maximum_principle() {
        // 0 <= p <= max(bc, p_max).
        let law = GrowthLaw::linear(2.0, 0.6).unwrap();
        let prof = solve_radial(3, 0.0, 2.0, RadialBc::Symmetry, 0.3, &law, 129).unwrap();
        let cap = 0.6f64.max(0.3);
        for &v in &prof.samples {
            assert!(v >= -1e-13 && v <= cap + 1e-10);
        }
    }

    #[test]
    fn masked_cells_matches_closed_form() {
        let law = GrowthLaw::constant_test(1.0, 1.0).unwrap();
        let grid = RadialGrid::new(2, 0.0, 2.0, 400).unwrap();
        let inside: Vec<bool> = (0..grid.n_cells).map(|j| grid.center(j) < 1.0).collect();
        let p = solve_radial_cells(&grid, &inside, &law).unwrap();
        // Center cell vs p(r) = (1 - r^2)/4; boundary substitution is first
        // order so allow an O(dx) deviation.
        let r0 = grid.center(0);
        assert!((p[0] - (1.0 - r0 * r0) / 4.0).abs() < 2.0 * grid.dx / 4.0);
        for j in 0..grid.n_cells {
            if !inside[j] {
                assert_eq!(p[j], 0.0);
            }
        }
    }

    #[test]
    fn plane_disc_matches_radial_value() {
        // Disc of radius R in a box, constant-test G: center value within
        // 2 dx of g0 R^2 / (2n).
        let law = GrowthLaw::constant_test(1.0, 1.0).unwrap();
        let grid = Grid2d::centered_square(1.5, 96).unwrap();
        let dx = grid.dx;
        let mask = DomainMask::disc(grid, [0.0, 0.0], 1.0, 0.0).unwrap();
        let p = solve_cartesian_2d(&mask, &law).unwrap();
        let g = &mask.grid;
        let center_idx = g.index(g.nx / 2, g.ny / 2);
        assert!((p[center_idx] - 0.25).abs() < 2.0 * dx);
        // Strictly positive inside when G(0) > 0.
        for k in 0..g.len() {
            if mask.inside[k] {
                assert!(p[k] > 0.0);
            }
        }
    }

    #[test]
    fn plane_empty_mask_returns_zero() {
        let law = GrowthLaw::linear(1.0, 1.0).unwrap();
        let grid = Grid2d::centered_square(1.0, 16).unwrap();
        let mask = DomainMask::empty(grid);
        let p = solve_cartesian_2d(&mask, &law).unwrap();
        assert!(p.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn plane_annulus_matches_radial_solver() {
        let law = GrowthLaw::linear(1.0, 1.0).unwrap();
        let grid = Grid2d::centered_square(2.0, 128).unwrap();
        let dx = grid.dx;
        let mask = DomainMask::annulus(grid, 0.8, 1.6, 0.0).unwrap();
        assert_eq!(mask.components, 1);
        let p2d = solve_cartesian_2d(&mask, &law).unwrap();
        let radial =
            solve_radial(2, 0.8, 1.6, RadialBc::Dirichlet(0.0), 0.0, &law, 513).unwrap();
        // Compare along the +x ray.
        let g = &mask.grid;
        let j_mid = g.ny / 2;
        for i in 0..g.nx {
            let k = g.index(i, j_mid);
            if !mask.inside[k] {
                continue;
            }
            let [x, y] = g.center(i, j_mid);
            let r = x.hypot(y);
            let expected = radial.value_at(r);
            assert!(
                (p2d[k] - expected).abs() < 3.0 * dx,
                "ray mismatch at r={r}: {} vs {expected}",
                p2d[k]
            );
        }
    }

    #[test]
    fn mask_components_counted() {
        let grid = Grid2d::centered_square(2.0, 64).unwrap();
        let inside: Vec<bool> = (0..grid.len())
            .map(|k| {
                let [x, y] = grid.center(k % grid.nx, k / grid.nx);
                let r1 = (x + 1.0).hypot(y);
                let r2 = (x - 1.0).hypot(y);
                r1 < 0.5 || r2 < 0.5
            })
            .collect();
        let mask = DomainMask::new(grid, inside, 0.0).unwrap();
        assert_eq!(mask.components, 2);
    }
}
