use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Uniform node grid on `[x_min, x_max] x [xi_min, xi_max]`, endpoints included.
///
/// Fields are stored row-major with the time index outermost:
/// `values[i * nxi + j]` sits at `(x(i), xi(j))`. Integrals over the grid use
/// the trapezoidal node weights of [`Grid2D::weight`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub xi_min: f64,
    pub xi_max: f64,
    pub nxi: usize,
}

impl Grid2D {
    pub fn new(x_min: f64, x_max: f64, nx: usize, xi_min: f64, xi_max: f64, nxi: usize) -> Result<Self> {
        for (name, v) in [("x_min", x_min), ("x_max", x_max), ("xi_min", xi_min), ("xi_max", xi_max)] {
            if !v.is_finite() {
                return Err(Error::param(name, "must be finite"));
            }
        }
        if x_max <= x_min {
            return Err(Error::param("x_max", "must exceed x_min"));
        }
        if xi_max <= xi_min {
            return Err(Error::param("xi_max", "must exceed xi_min"));
        }
        if nx < 2 || nxi < 2 {
            return Err(Error::param("nx/nxi", "need at least two nodes per axis"));
        }
        Ok(Self { x_min, x_max, nx, xi_min, xi_max, nxi })
    }

    /// Square grid `[-r, r]^2` with `n` nodes per axis.
    pub fn symmetric(r: f64, n: usize) -> Result<Self> {
        Self::new(-r, r, n, -r, r, n)
    }

    pub fn len(&self) -> usize {
        self.nx * self.nxi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn hx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn hxi(&self) -> f64 {
        (self.xi_max - self.xi_min) / (self.nxi - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.hx()
    }

    pub fn xi(&self, j: usize) -> f64 {
        self.xi_min + j as f64 * self.hxi()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.nxi + j
    }

    pub fn weight_x(&self, i: usize) -> f64 {
        trapezoid(i, self.nx, self.hx())
    }

    pub fn weight_xi(&self, j: usize) -> f64 {
        trapezoid(j, self.nxi, self.hxi())
    }

    /// Trapezoidal quadrature weight of node `(i, j)`.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weight_x(i) * self.weight_xi(j)
    }

    /// All node weights in storage order.
    pub fn weights(&self) -> Vec<f64> {
        let wx: Vec<f64> = (0..self.nx).map(|i| self.weight_x(i)).collect();
        let wxi: Vec<f64> = (0..self.nxi).map(|j| self.weight_xi(j)).collect();
        let mut out = Vec::with_capacity(self.len());
        for &a in &wx {
            for &b in &wxi {
                out.push(a * b);
            }
        }
        out
    }

    /// Index of the node nearest to `(x, xi)`, clamped to the grid.
    pub fn nearest(&self, x: f64, xi: f64) -> (usize, usize) {
        let i = ((x - self.x_min) / self.hx()).round().clamp(0.0, (self.nx - 1) as f64) as usize;
        let j = ((xi - self.xi_min) / self.hxi()).round().clamp(0.0, (self.nxi - 1) as f64) as usize;
        (i, j)
    }

    pub fn contains(&self, x: f64, xi: f64) -> bool {
        x >= self.x_min && x <= self.x_max && xi >= self.xi_min && xi <= self.xi_max
    }

    pub fn same_as(&self, other: &Grid2D) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()));
        self.nx == other.nx
            && self.nxi == other.nxi
            && close(self.x_min, other.x_min)
            && close(self.x_max, other.x_max)
            && close(self.xi_min, other.xi_min)
            && close(self.xi_max, other.xi_max)
    }

    pub(crate) fn check_same(&self, other: &Grid2D) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }

    /// Sample spacing that puts every time node of the grid, and t = 0, on a
    /// common lattice `k * dt`, using at least `per_cell` samples per time cell.
    ///
    /// Returns `None` when the grid origin is not commensurate with its spacing.
    pub fn lattice_step(&self, per_cell: usize) -> Option<f64> {
        let hx = self.hx();
        let per_cell = per_cell.max(1);
        for m in per_cell..per_cell * 64 {
            let dt = hx / m as f64;
            let k = self.x_min / dt;
            if (k - k.round()).abs() < 1e-7 {
                return Some(dt);
            }
        }
        None
    }
}

fn trapezoid(i: usize, n: usize, h: f64) -> f64 {
    if i == 0 || i + 1 == n {
        0.5 * h
    } else {
        h
    }
}

/// Complex values on a [`Grid2D`], e.g. an STFT.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    pub grid: Grid2D,
    pub values: Vec<Complex64>,
}

impl Field2D {
    pub fn new(grid: Grid2D, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a {}x{} grid",
                values.len(),
                grid.nx,
                grid.nxi
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid2D) -> Self {
        Self { grid, values: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn from_fn(grid: Grid2D, mut f: impl FnMut(f64, f64) -> Complex64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.nx {
            let x = grid.x(i);
            for j in 0..grid.nxi {
                values.push(f(x, grid.xi(j)));
            }
        }
        Self { grid, values }
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn modulus(&self) -> RealField2D {
        RealField2D { grid: self.grid, values: self.values.iter().map(|z| z.norm()).collect() }
    }

    pub fn scaled(&self, c: Complex64) -> Field2D {
        Field2D { grid: self.grid, values: self.values.iter().map(|z| z * c).collect() }
    }

    /// `self - c * other`.
    pub fn sub_scaled(&self, other: &Field2D, c: Complex64) -> Result<Field2D> {
        self.grid.check_same(&other.grid)?;
        Ok(Field2D {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - c * b).collect(),
        })
    }

    pub fn add(&self, other: &Field2D) -> Result<Field2D> {
        self.grid.check_same(&other.grid)?;
        Ok(Field2D {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        })
    }

    /// Squared L2 norm with trapezoidal weights.
    pub fn energy(&self) -> f64 {
        let w = self.grid.weights();
        self.values.iter().zip(&w).map(|(z, w)| z.norm_sqr() * w).sum()
    }
}

/// Real values on a [`Grid2D`]: moduli, weights, indicator functions.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField2D {
    pub grid: Grid2D,
    pub values: Vec<f64>,
}

impl RealField2D {
    pub fn new(grid: Grid2D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a {}x{} grid",
                values.len(),
                grid.nx,
                grid.nxi
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid2D, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.nx {
            let x = grid.x(i);
            for j in 0..grid.nxi {
                values.push(f(x, grid.xi(j)));
            }
        }
        Self { grid, values }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn integral(&self) -> f64 {
        let w = self.grid.weights();
        self.values.iter().zip(&w).map(|(v, w)| v * w).sum()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn scaled(&self, c: f64) -> RealField2D {
        RealField2D { grid: self.grid, values: self.values.iter().map(|v| v * c).collect() }
    }

    /// Pointwise product.
    pub fn mul(&self, other: &RealField2D) -> Result<RealField2D> {
        self.grid.check_same(&other.grid)?;
        Ok(RealField2D {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect(),
        })
    }

    pub fn to_complex(&self) -> Field2D {
        Field2D { grid: self.grid, values: self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_grids() {
        assert!(Grid2D::new(0.0, 0.0, 4, 0.0, 1.0, 4).is_err());
        assert!(Grid2D::new(0.0, 1.0, 1, 0.0, 1.0, 4).is_err());
        assert!(Grid2D::new(0.0, f64::NAN, 4, 0.0, 1.0, 4).is_err());
    }

    #[test]
    fn trapezoid_weights_integrate_constants_exactly() {
        let g = Grid2D::new(0.0, 1.0, 17, 0.0, 1.0, 33).unwrap();
        let one = RealField2D::from_fn(g, |_, _| 1.0);
        assert!((one.integral() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn lattice_step_aligns_origin_and_nodes() {
        let g = Grid2D::symmetric(4.0, 512).unwrap();
        let dt = g.lattice_step(1).unwrap();
        for i in [0, 1, 255, 511] {
            let k = g.x(i) / dt;
            assert!((k - k.round()).abs() < 1e-6);
        }
    }
}
