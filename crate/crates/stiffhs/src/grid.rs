//! Uniform cell-centered grids: radial (dimension parameter `n >= 1`) and a
//! 2D Cartesian box. Also hosts the discrete conservative Laplacians used by
//! the time stepper and the diagnostics.

use crate::error::{Error, Result};

/// Surface area of the unit sphere in `R^n` (2, 2*pi, 4*pi, ...).
pub fn unit_sphere_area(n: u32) -> f64 {
    match n {
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI,
        // omega_n = 2 pi / (n - 2) * omega_{n-2}
        _ => 2.0 * std::f64::consts::PI / (n as f64 - 2.0) * unit_sphere_area(n - 2),
    }
}

/// Cell-centered uniform radial grid on `[r_min, r_max]`.
///
/// Faces sit at `r_min + j*dx`; cell `j` is centered at `r_min + (j+1/2)dx`.
/// Volumes carry the `r^(n-1)` measure without the angular factor; integrals
/// multiply by `unit_sphere_area(n)` so that radial masses agree with masses
/// in `R^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialGrid {
    pub dim: u32,
    pub r_min: f64,
    pub dx: f64,
    pub n_cells: usize,
}

impl RadialGrid {
    pub fn new(dim: u32, r_min: f64, r_max: f64, n_cells: usize) -> Result<Self> {
        if dim < 1 {
            return Err(Error::Domain("radial dimension parameter must be >= 1".into()));
        }
        if !(r_max > r_min && r_min >= 0.0) {
            return Err(Error::Domain(format!(
                "radial extent must satisfy 0 <= r_min < r_max, got [{r_min}, {r_max}]"
            )));
        }
        if n_cells < 4 {
            return Err(Error::Domain("radial grid needs at least 4 cells".into()));
        }
        Ok(RadialGrid { dim, r_min, dx: (r_max - r_min) / n_cells as f64, n_cells })
    }

    #[inline]
    pub fn center(&self, j: usize) -> f64 {
        self.r_min + (j as f64 + 0.5) * self.dx
    }

    #[inline]
    pub fn face(&self, j: usize) -> f64 {
        self.r_min + j as f64 * self.dx
    }

    pub fn r_max(&self) -> f64 {
        self.face(self.n_cells)
    }

    /// `int_{face(j)}^{face(j+1)} r^(n-1) dr`.
    #[inline]
    pub fn cell_volume(&self, j: usize) -> f64 {
        let n = self.dim as f64;
        let a = self.face(j);
        let b = self.face(j + 1);
        if self.dim == 1 {
            b - a
        } else {
            (b.powi(self.dim as i32) - a.powi(self.dim as i32)) / n
        }
    }

    /// `r^(n-1)` at face `j`.
    #[inline]
    pub fn face_area(&self, j: usize) -> f64 {
        let r = self.face(j);
        match self.dim {
            1 => 1.0,
            2 => r,
            _ => r.powi(self.dim as i32 - 1),
        }
    }

    /// `omega_n * sum_j V_j v_j`, the mass of a radial field in `R^n`.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.n_cells);
        let mut s = 0.0;
        for (j, v) in values.iter().enumerate() {
            s += self.cell_volume(j) * v;
        }
        s * unit_sphere_area(self.dim)
    }

    /// Conservative discrete Laplacian `r^(1-n) D(r^(n-1) D u)` of a cell
    /// field, zero-flux at both boundary faces (inner face at r=0 carries no
    /// flux for n >= 2 automatically).
    pub fn laplacian_zero_flux(&self, u: &[f64], out: &mut Vec<f64>) {
        debug_assert_eq!(u.len(), self.n_cells);
        out.clear();
        out.resize(self.n_cells, 0.0);
        let inv_dx = 1.0 / self.dx;
        for j in 0..self.n_cells {
            let flux_in = if j == 0 { 0.0 } else { self.face_area(j) * (u[j] - u[j - 1]) * inv_dx };
            let flux_out = if j + 1 == self.n_cells {
                0.0
            } else {
                self.face_area(j + 1) * (u[j + 1] - u[j]) * inv_dx
            };
            out[j] = (flux_out - flux_in) / self.cell_volume(j);
        }
    }
}

/// Uniform cell-centered 2D grid on `[-half_width, half_width]^2`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid2d {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    /// Coordinates of the lower-left cell center.
    pub x0: f64,
    pub y0: f64,
}

impl Grid2d {
    pub fn centered_square(half_width: f64, cells: usize) -> Result<Self> {
        if !(half_width > 0.0) {
            return Err(Error::Domain("half_width must be > 0".into()));
        }
        if cells < 3 {
            return Err(Error::Domain("2D grid needs at least 3 cells per side".into()));
        }
        let dx = 2.0 * half_width / cells as f64;
        let x0 = -half_width + 0.5 * dx;
        Ok(Grid2d { nx: cells, ny: cells, dx, x0, y0: x0 })
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn center(&self, i: usize, j: usize) -> [f64; 2] {
        [self.x0 + i as f64 * self.dx, self.y0 + j as f64 * self.dx]
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_area(&self) -> f64 {
        self.dx * self.dx
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        values.iter().sum::<f64>() * self.cell_area()
    }

    /// 5-point Laplacian with zero-flux (mirror) box boundaries.
    pub fn laplacian_zero_flux(&self, u: &[f64], out: &mut Vec<f64>) {
        debug_assert_eq!(u.len(), self.len());
        out.clear();
        out.resize(self.len(), 0.0);
        let inv_dx2 = 1.0 / (self.dx * self.dx);
        for j in 0..self.ny {
            for i in 0..self.nx {
                let k = self.index(i, j);
                let c = u[k];
                let l = if i > 0 { u[k - 1] } else { c };
                let r = if i + 1 < self.nx { u[k + 1] } else { c };
                let d = if j > 0 { u[k - self.nx] } else { c };
                let t = if j + 1 < self.ny { u[k + self.nx] } else { c };
                out[k] = (l + r + d + t - 4.0 * c) * inv_dx2;
            }
        }
    }
}

/// Geometry of a simulation field: radial (covers 1D via `n = 1`) or planar.
#[derive(Clone, Debug, PartialEq)]
pub enum Geometry {
    Radial(RadialGrid),
    Plane(Grid2d),
}

impl Geometry {
    pub fn n_cells(&self) -> usize {
        match self {
            Geometry::Radial(g) => g.n_cells,
            Geometry::Plane(g) => g.len(),
        }
    }

    pub fn dx(&self) -> f64 {
        match self {
            Geometry::Radial(g) => g.dx,
            Geometry::Plane(g) => g.dx,
        }
    }

    /// Dimension entering the CFL rule and the radial operators.
    pub fn dim(&self) -> u32 {
        match self {
            Geometry::Radial(g) => g.dim,
            Geometry::Plane(_) => 2,
        }
    }

    /// Distance of a cell center from the origin.
    pub fn radius_of(&self, idx: usize) -> f64 {
        match self {
            Geometry::Radial(g) => g.center(idx),
            Geometry::Plane(g) => {
                let [x, y] = g.center(idx % g.nx, idx / g.nx);
                x.hypot(y)
            }
        }
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        match self {
            Geometry::Radial(g) => g.integrate(values),
            Geometry::Plane(g) => g.integrate(values),
        }
    }

    pub fn laplacian_zero_flux(&self, u: &[f64], out: &mut Vec<f64>) {
        match self {
            Geometry::Radial(g) => g.laplacian_zero_flux(u, out),
            Geometry::Plane(g) => g.laplacian_zero_flux(u, out),
        }
    }
}
