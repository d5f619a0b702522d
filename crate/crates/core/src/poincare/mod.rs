//! Weighted Poincaré and Cheeger constants on 1-D and 2-D grids.
//!
//! For weights `v, w` the Poincaré constant `C_P(v, w)` is the smallest `C`
//! with `inf_c ||u - c||^2_{L2(v)} <= C ||grad u||^2_{L2(w)}`. On a grid this
//! becomes the generalized eigenproblem `K u = lambda M u` restricted to
//! `v`-mean-zero vectors:
//!
//! * `M = diag(v_i * omega_i)` with trapezoidal node weights `omega_i`;
//! * `K` sums `kappa_e (u_i - u_j)^2` over axis-parallel edges, with
//!   `kappa_e = mean(w_i, w_j) * omega_perp / h` (`omega_perp` is the
//!   trapezoidal weight of the edge in the transverse direction), so a product
//!   weight yields exactly the tensor product pencil.
//!
//! `C_P = 1 / lambda_min`. No-flux boundaries are natural: nothing couples the
//! grid to the outside.

mod cheeger;
mod checks;
mod solver;
mod spectro;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::tfcore::{Grid2D, RealField2D};
use crate::{Error, Result};

pub use cheeger::{estimate_cheeger, CheegerEstimate};
pub use checks::{
    bobkov_moment_bound, bump_constants, cauchy_exp_convolution, cauchy_pair_bound, convolution_equivalence_check,
    log_concavity_check, log_concavity_check_1d, log_concavity_of_logs, modified_poincare_check, sinh_inequality_check,
    sinh_log_margin, tensor_bound, BumpConstants, ConvEquivReport, LogConcavityReport, ModifiedPoincareReport,
    SinhReport, CONV_STABILITY,
};
pub use spectro::{log_weight_from_spectrogram, weight_from_power, weight_from_spectrogram, MAX_DECAY_PER_CELL};

/// Node layout of a weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Mesh {
    /// `n` nodes `x0 + k h`.
    Line { x0: f64, h: f64, n: usize },
    Plane(Grid2D),
}

impl Mesh {
    pub fn line(x0: f64, x1: f64, n: usize) -> Result<Self> {
        if !(x1 > x0) || n < 2 || !x0.is_finite() || !x1.is_finite() {
            return Err(Error::param("mesh", format!("need x1 > x0 and n >= 2, got [{x0}, {x1}] with {n}")));
        }
        Ok(Mesh::Line { x0, h: (x1 - x0) / (n - 1) as f64, n })
    }

    pub fn len(&self) -> usize {
        match self {
            Mesh::Line { n, .. } => *n,
            Mesh::Plane(g) => g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        match self {
            Mesh::Line { .. } => 1,
            Mesh::Plane(_) => 2,
        }
    }

    /// Coordinates of node `k`; the second entry is 0 on a line.
    pub fn coords(&self, k: usize) -> (f64, f64) {
        match self {
            Mesh::Line { x0, h, .. } => (x0 + k as f64 * h, 0.0),
            Mesh::Plane(g) => (g.x(k / g.nxi), g.xi(k % g.nxi)),
        }
    }

    /// Trapezoidal quadrature weights.
    pub fn weights(&self) -> Vec<f64> {
        match self {
            Mesh::Line { h, n, .. } => (0..*n).map(|k| if k == 0 || k + 1 == *n { 0.5 * h } else { *h }).collect(),
            Mesh::Plane(g) => g.weights(),
        }
    }

    /// Axis-parallel edges `(i, j, h, omega_perp)` with `i < j`.
    pub(crate) fn edges(&self) -> Vec<(usize, usize, f64, f64)> {
        match self {
            Mesh::Line { h, n, .. } => (0..n - 1).map(|k| (k, k + 1, *h, 1.0)).collect(),
            Mesh::Plane(g) => {
                let mut out = Vec::with_capacity(2 * g.len());
                for i in 0..g.nx {
                    for j in 0..g.nxi {
                        let k = g.index(i, j);
                        if i + 1 < g.nx {
                            out.push((k, g.index(i + 1, j), g.hx(), g.weight_xi(j)));
                        }
                        if j + 1 < g.nxi {
                            out.push((k, g.index(i, j + 1), g.hxi(), g.weight_x(i)));
                        }
                    }
                }
                out
            }
        }
    }

    /// Node ordering with minimal bandwidth: `(perm, bandwidth)` where
    /// `perm[natural] = banded`.
    fn band_order(&self) -> (Vec<usize>, usize) {
        match self {
            Mesh::Line { n, .. } => ((0..*n).collect(), 1),
            Mesh::Plane(g) => {
                if g.nxi <= g.nx {
                    ((0..g.len()).collect(), g.nxi)
                } else {
                    let perm = (0..g.len()).map(|k| (k % g.nxi) * g.nx + k / g.nxi).collect();
                    (perm, g.nx)
                }
            }
        }
    }
}

/// The weights `(v, w)` of a Poincaré inequality on a common mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightPair {
    pub mesh: Mesh,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
}

impl WeightPair {
    pub fn new(mesh: Mesh, v: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        if v.len() != mesh.len() || w.len() != mesh.len() {
            return Err(Error::GridMismatch(format!("{} / {} weights for {} nodes", v.len(), w.len(), mesh.len())));
        }
        for (name, f) in [("v", &v), ("w", &w)] {
            if let Some(k) = f.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(Error::param(if name == "v" { "v" } else { "w" }, format!("value {} at node {k}", f[k])));
            }
        }
        let pair = Self { mesh, v, w };
        if !(pair.v_mass() > 0.0) {
            return Err(Error::ZeroMass);
        }
        Ok(pair)
    }

    /// `v = w = weight`.
    pub fn symmetric(mesh: Mesh, weight: Vec<f64>) -> Result<Self> {
        Self::new(mesh, weight.clone(), weight)
    }

    pub fn from_fields(v: &RealField2D, w: &RealField2D) -> Result<Self> {
        v.grid.check_same(&w.grid)?;
        Self::new(Mesh::Plane(v.grid), v.values.clone(), w.values.clone())
    }

    /// Samples `v(x)` and `w(x)` on a line.
    pub fn line_fn(x0: f64, x1: f64, n: usize, v: impl Fn(f64) -> f64, w: impl Fn(f64) -> f64) -> Result<Self> {
        let mesh = Mesh::line(x0, x1, n)?;
        let xs: Vec<f64> = (0..n).map(|k| mesh.coords(k).0).collect();
        Self::new(mesh, xs.iter().map(|&x| v(x)).collect(), xs.iter().map(|&x| w(x)).collect())
    }

    pub fn v_mass(&self) -> f64 {
        self.v.iter().zip(self.mesh.weights()).map(|(a, b)| a * b).sum()
    }

    /// Whether `v <= w` holds at every node.
    pub fn dominated(&self) -> bool {
        self.v.iter().zip(&self.w).all(|(a, b)| a <= b)
    }

    fn mass(&self) -> Vec<f64> {
        self.v.iter().zip(self.mesh.weights()).map(|(a, b)| a * b).collect()
    }

    /// Edge list with stiffness coefficients `kappa_e`.
    pub(crate) fn stiffness(&self) -> Vec<(usize, usize, f64)> {
        self.mesh
            .edges()
            .into_iter()
            .map(|(i, j, h, perp)| (i, j, 0.5 * (self.w[i] + self.w[j]) * perp / h))
            .collect()
    }

    /// Dense stiffness matrix, for the reference solver.
    fn dense_stiffness(&self) -> DMatrix<f64> {
        let n = self.mesh.len();
        let mut k = DMatrix::zeros(n, n);
        for (i, j, c) in self.stiffness() {
            k[(i, i)] += c;
            k[(j, j)] += c;
            k[(i, j)] -= c;
            k[(j, i)] -= c;
        }
        k
    }
}

/// One point of a refinement or domain-growth study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergencePoint {
    pub nodes: usize,
    pub c_p: f64,
}

/// Result of [`estimate_poincare`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoincareEstimate {
    /// `1 / eigenvalue`; infinite when the study was flagged divergent.
    pub c_p: f64,
    /// Set when successive domain doublings grew the estimate by at least
    /// 2x three times in a row.
    pub divergent: bool,
    pub eigenvalue: f64,
    pub nodes: usize,
    pub iterations: usize,
    pub residual: f64,
    pub convergence: Vec<ConvergencePoint>,
}

/// Maximum number of Lanczos steps.
pub const MAX_ITERATIONS: usize = 400;

/// Relative Ritz residual at which the iteration stops.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// Everything needed to apply `K^+` and to map back to node values.
pub(crate) struct Pencil {
    pub mass: Vec<f64>,
    pub sqrt_mass: Vec<f64>,
    perm: Vec<usize>,
    pin: usize,
    chol: solver::Cholesky,
}

impl Pencil {
    pub(crate) fn new(pair: &WeightPair) -> Result<Self> {
        let n = pair.mesh.len();
        let (perm, bw) = pair.mesh.band_order();
        let mut band = solver::Band::zeros(n, bw);
        for (i, j, c) in pair.stiffness() {
            let (pi, pj) = (perm[i], perm[j]);
            band.add(pi, pi, c);
            band.add(pj, pj, c);
            band.add(pi, pj, -c);
        }
        let mass = pair.mass();
        let pin = (0..n).max_by(|&a, &b| mass[a].total_cmp(&mass[b])).unwrap_or(0);
        band.ground(perm[pin]);
        let chol = band.factor()?;
        let sqrt_mass = mass.iter().map(|m| m.sqrt()).collect();
        let pin = perm[pin];
        Ok(Self { mass, sqrt_mass, perm, pin, chol })
    }

    /// Solves `K y = b` with the pinned node held at zero; `b` must sum to 0.
    pub(crate) fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut tmp = vec![0.0; n];
        for (k, v) in b.iter().enumerate() {
            tmp[self.perm[k]] = *v;
        }
        tmp[self.pin] = 0.0;
        self.chol.solve(&mut tmp);
        (0..n).map(|k| tmp[self.perm[k]]).collect()
    }

    /// Projection onto the orthogonal complement of `sqrt(m)`.
    fn project(&self, x: &mut [f64]) {
        let s = &self.sqrt_mass;
        let ss: f64 = s.iter().map(|v| v * v).sum();
        let c: f64 = x.iter().zip(s).map(|(a, b)| a * b).sum::<f64>() / ss;
        for (a, b) in x.iter_mut().zip(s) {
            *a -= c * b;
        }
    }

    /// `P S K^+ S P x`.
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut x = x.to_vec();
        self.project(&mut x);
        let b: Vec<f64> = x.iter().zip(&self.sqrt_mass).map(|(a, s)| a * s).collect();
        let y = self.solve(&b);
        let mut out: Vec<f64> = y.iter().zip(&self.sqrt_mass).map(|(a, s)| a * s).collect();
        self.project(&mut out);
        out
    }
}

/// Smallest nonzero eigenpair of the pencil: `(lambda, u, iterations, residual)`,
/// with `u` normalized to `v`-mean zero.
pub(crate) fn smallest_eigenpair(pair: &WeightPair) -> Result<(f64, Vec<f64>, usize, f64)> {
    let n = pair.mesh.len();
    if n < 2 {
        return Err(Error::Degenerate("need at least two nodes".into()));
    }
    let pencil = Pencil::new(pair)?;
    // deterministic start: constant plus coordinate ramps
    let start: Vec<f64> = (0..n)
        .map(|k| {
            let (x, y) = pair.mesh.coords(k);
            pencil.sqrt_mass[k] * (1.0 + x + 0.5 * y + 0.1 * x * y)
        })
        .collect();
    let mut start = start;
    pencil.project(&mut start);
    if start.iter().all(|v| *v == 0.0) {
        start = (0..n).map(|k| pencil.sqrt_mass[k] * ((k as f64) * 0.618).sin()).collect();
        pencil.project(&mut start);
    }
    let r = solver::lanczos_top(|x| pencil.apply(x), start, MAX_ITERATIONS, RESIDUAL_TOL)?;
    if !(r.theta > 0.0) {
        return Err(Error::Degenerate("pencil has no positive spectrum".into()));
    }
    // u solves K u = lambda M u: u = lambda K^+ (S x), shifted to v-mean zero
    let b: Vec<f64> = r.vector.iter().zip(&pencil.sqrt_mass).map(|(a, s)| a * s).collect();
    let mut u = pencil.solve(&b);
    let mt: f64 = pencil.mass.iter().sum();
    let mean = u.iter().zip(&pencil.mass).map(|(a, m)| a * m).sum::<f64>() / mt;
    u.iter_mut().for_each(|a| *a -= mean);
    Ok((1.0 / r.theta, u, r.iterations, r.residual / r.theta))
}

/// `C_P(v, w)` of the discretized pencil.
pub fn estimate_poincare(pair: &WeightPair) -> Result<PoincareEstimate> {
    let (lambda, _, iterations, residual) = smallest_eigenpair(pair)?;
    let c_p = 1.0 / lambda;
    Ok(PoincareEstimate {
        c_p,
        divergent: false,
        eigenvalue: lambda,
        nodes: pair.mesh.len(),
        iterations,
        residual,
        convergence: vec![ConvergencePoint { nodes: pair.mesh.len(), c_p }],
    })
}

/// Largest problem the dense reference solver accepts.
pub const DENSE_LIMIT: usize = 4096;

/// `C_P(v, w)` by a dense symmetric eigensolve; requires `v > 0`.
pub fn estimate_poincare_dense(pair: &WeightPair) -> Result<f64> {
    if pair.mesh.len() > DENSE_LIMIT {
        return Err(Error::param("mesh", format!("dense solve limited to {DENSE_LIMIT} nodes")));
    }
    let lambda = solver::dense_smallest_nonzero(&pair.dense_stiffness(), &pair.mass())?;
    Ok(1.0 / lambda)
}

/// `true` when the sequence grows by at least 2x on three consecutive steps.
pub fn divergence_flag(values: &[f64]) -> bool {
    values.windows(4).any(|w| w[1] >= 2.0 * w[0] && w[2] >= 2.0 * w[1] && w[3] >= 2.0 * w[2])
        || values.windows(2).any(|w| w[1].is_infinite() && w[0].is_finite())
}

/// Runs [`estimate_poincare`] on a sequence of discretizations (e.g. nested
/// domain doublings) and reports the last estimate with the full trace.
pub fn poincare_study(levels: &[WeightPair]) -> Result<PoincareEstimate> {
    let mut out: Option<PoincareEstimate> = None;
    let mut trace = Vec::with_capacity(levels.len());
    for pair in levels {
        let est = estimate_poincare(pair)?;
        trace.push(ConvergencePoint { nodes: est.nodes, c_p: est.c_p });
        out = Some(est);
    }
    let mut est = out.ok_or(Error::Empty("no levels"))?;
    let values: Vec<f64> = trace.iter().map(|p| p.c_p).collect();
    est.divergent = divergence_flag(&values);
    if est.divergent {
        est.c_p = f64::INFINITY;
    }
    est.convergence = trace;
    Ok(est)
}
