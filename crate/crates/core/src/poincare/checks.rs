//! Closed-form bounds and the auxiliary inequalities behind them.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use super::{estimate_poincare, Mesh, WeightPair};
use crate::norms::{local_deviation, local_deviation_1d};
use crate::tfcore::{log_sinh, Field2D, Grid2D};
use crate::{Complex64, Error, Result};

/// Second moment `int |z - z0|^2 w / int w` about the barycenter `z0`.
///
/// For log-concave `w` this bounds `C_P(w)` up to a universal factor `K`
/// whose value is not known, so the moment itself is returned.
pub fn bobkov_moment_bound(mesh: &Mesh, w: &[f64]) -> Result<f64> {
    if w.len() != mesh.len() {
        return Err(Error::GridMismatch(format!("{} values for {} nodes", w.len(), mesh.len())));
    }
    let q = mesh.weights();
    let (mut m, mut c1, mut c2) = (0.0, 0.0, 0.0);
    for k in 0..w.len() {
        let (x, y) = mesh.coords(k);
        let d = w[k] * q[k];
        m += d;
        c1 += d * x;
        c2 += d * y;
    }
    if !(m > 0.0) {
        return Err(Error::ZeroMass);
    }
    let (x0, y0) = (c1 / m, c2 / m);
    let s: f64 = (0..w.len())
        .map(|k| {
            let (x, y) = mesh.coords(k);
            w[k] * q[k] * ((x - x0).powi(2) + (y - y0).powi(2))
        })
        .sum();
    Ok(s / m)
}

/// `1 / (2 beta)`, the Poincaré constant of the pair
/// `((1 + |x|^2)^{-beta - 1}, (1 + |x|^2)^{-beta})` on `R^d`, valid for
/// `beta >= d + 1`.
pub fn cauchy_pair_bound(beta: f64, d: usize) -> Result<f64> {
    if d == 0 || !(beta >= d as f64 + 1.0) || !beta.is_finite() {
        return Err(Error::param("beta", format!("need beta >= d + 1 = {}, got {beta}", d + 1)));
    }
    Ok(0.5 / beta)
}

/// Poincaré constant of a product pair from those of its factors.
pub fn tensor_bound(c1: f64, c2: f64) -> Result<f64> {
    if !(c1 >= 0.0 && c2 >= 0.0) {
        return Err(Error::param("c", format!("Poincaré constants are nonnegative, got ({c1}, {c2})")));
    }
    Ok(c1.max(c2))
}

/// Worst midpoint-concavity violation of `log w`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogConcavityReport {
    /// `max (log w(z-h) + log w(z+h)) / 2 - log w(z)`; nonpositive for a
    /// log-concave weight.
    pub worst_violation: f64,
    pub worst_at: (f64, f64),
    pub triples: usize,
    pub tol: f64,
    pub passed: bool,
}

impl LogConcavityReport {
    fn new(tol: f64) -> Self {
        Self { worst_violation: f64::NEG_INFINITY, worst_at: (f64::NAN, f64::NAN), triples: 0, tol, passed: true }
    }

    fn push(&mut self, left: f64, mid: f64, right: f64, at: (f64, f64)) {
        let v = 0.5 * (left + right) - mid;
        self.triples += 1;
        if v > self.worst_violation {
            self.worst_violation = v;
            self.worst_at = at;
        }
    }

    fn finish(mut self) -> Self {
        self.passed = self.worst_violation <= self.tol;
        self
    }
}

/// Midpoint concavity of `log w` along every axis-parallel and diagonal grid
/// line. `w` must be strictly positive.
pub fn log_concavity_check(mesh: &Mesh, w: &[f64], tol: f64) -> Result<LogConcavityReport> {
    if w.len() != mesh.len() {
        return Err(Error::GridMismatch(format!("{} values for {} nodes", w.len(), mesh.len())));
    }
    if let Some(k) = w.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::NonPositive { index: k, value: w[k] });
    }
    let logs: Vec<f64> = w.iter().map(|v| v.ln()).collect();
    log_concavity_of_logs(mesh, &logs, tol)
}

/// As [`log_concavity_check`], taking `log w` directly.
pub fn log_concavity_of_logs(mesh: &Mesh, logs: &[f64], tol: f64) -> Result<LogConcavityReport> {
    if logs.len() != mesh.len() {
        return Err(Error::GridMismatch(format!("{} values for {} nodes", logs.len(), mesh.len())));
    }
    if let Some(k) = logs.iter().position(|v| v.is_nan() || *v == f64::INFINITY) {
        return Err(Error::NonPositive { index: k, value: logs[k] });
    }
    let mut rep = LogConcavityReport::new(tol);
    match mesh {
        Mesh::Line { .. } => {
            for k in 1..logs.len() - 1 {
                rep.push(logs[k - 1], logs[k], logs[k + 1], mesh.coords(k));
            }
        }
        Mesh::Plane(g) => {
            let at = |i: usize, j: usize| logs[g.index(i, j)];
            for i in 1..g.nx.saturating_sub(1) {
                for j in 1..g.nxi.saturating_sub(1) {
                    let c = at(i, j);
                    let z = (g.x(i), g.xi(j));
                    rep.push(at(i - 1, j), c, at(i + 1, j), z);
                    rep.push(at(i, j - 1), c, at(i, j + 1), z);
                    rep.push(at(i - 1, j - 1), c, at(i + 1, j + 1), z);
                    rep.push(at(i - 1, j + 1), c, at(i + 1, j - 1), z);
                }
            }
            // boundary rows and columns still carry axis-parallel triples
            for i in [0, g.nx - 1] {
                for j in 1..g.nxi.saturating_sub(1) {
                    rep.push(at(i, j - 1), at(i, j), at(i, j + 1), (g.x(i), g.xi(j)));
                }
            }
            for j in [0, g.nxi - 1] {
                for i in 1..g.nx.saturating_sub(1) {
                    rep.push(at(i - 1, j), at(i, j), at(i + 1, j), (g.x(i), g.xi(j)));
                }
            }
        }
    }
    if rep.triples == 0 {
        return Err(Error::Empty("need at least three nodes along a line"));
    }
    Ok(rep.finish())
}

/// Midpoint concavity of a function given through its logarithm, on `n`
/// equispaced nodes of `[lo, hi]`.
pub fn log_concavity_check_1d(log_f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize, tol: f64) -> Result<LogConcavityReport> {
    let mesh = Mesh::line(lo, hi, n)?;
    let logs: Vec<f64> = (0..n).map(|k| log_f(mesh.coords(k).0)).collect();
    log_concavity_of_logs(&mesh, &logs, tol)
}

/// `sinh^2(v) >= v^2 (1 + v^2 / pi^2)^2` on a grid of `(0, v_max]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SinhReport {
    /// Smallest `log(lhs) - log(rhs)` over the sample points.
    pub min_log_margin: f64,
    pub argmin: f64,
    /// `log(lhs) - log(rhs)` at `v_max`.
    pub log_margin_at_max: f64,
    pub points: usize,
    pub holds: bool,
}

/// `log sinh^2(v) - log (v^2 (1 + v^2/pi^2)^2)`, accurate for small `v`.
pub fn sinh_log_margin(v: f64) -> f64 {
    let log_ratio = if v < 1.0 { (v.sinh() / v).ln() } else { log_sinh(v) - v.ln() };
    2.0 * log_ratio - 2.0 * (v * v / (PI * PI)).ln_1p()
}

pub fn sinh_inequality_check(v_max: f64, n: usize) -> Result<SinhReport> {
    if !(v_max > 0.0 && v_max.is_finite()) || n == 0 {
        return Err(Error::param("v_max", format!("need v_max > 0 and n > 0, got {v_max}, {n}")));
    }
    let mut rep = SinhReport {
        min_log_margin: f64::INFINITY,
        argmin: f64::NAN,
        log_margin_at_max: sinh_log_margin(v_max),
        points: n,
        holds: true,
    };
    for k in 1..=n {
        let v = v_max * k as f64 / n as f64;
        let m = sinh_log_margin(v);
        if m < rep.min_log_margin {
            rep.min_log_margin = m;
            rep.argmin = v;
        }
    }
    rep.holds = rep.min_log_margin >= 0.0;
    Ok(rep)
}

/// Two-sided comparison of `(1/(1 + pi^2 t^2)) * e^{-b|.|}` with `1/(1 + xi^2)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvEquivReport {
    pub b: f64,
    pub xi_max: f64,
    pub min: f64,
    pub max: f64,
    /// Same extremes on `[-2 xi_max, 2 xi_max]`.
    pub min_doubled: f64,
    pub max_doubled: f64,
    /// Relative change of `max / min` under doubling.
    pub doubling_change: f64,
    /// `max |r(xi) - r(-xi)|` over the sample points.
    pub even_defect: f64,
    pub stable: bool,
}

/// Relative change under domain doubling accepted as stable.
pub const CONV_STABILITY: f64 = 0.01;

/// `(1/(1 + pi^2 eta^2) * e^{-b|.|})(xi)` by composite Simpson on
/// `[xi - 40/b, xi + 40/b]`, split at the kink `eta = xi` and on a dyadic
/// partition around the Lorentzian peak.
pub fn cauchy_exp_convolution(b: f64, xi: f64) -> f64 {
    let half = 40.0 / b;
    let (lo, hi) = (xi - half, xi + half);
    let f = |eta: f64| (-b * (xi - eta).abs()).exp() / (1.0 + PI * PI * eta * eta);
    let mut cuts = vec![lo, xi, hi, 0.0];
    let mut r = 0.125;
    while r < half + xi.abs() {
        cuts.extend([r, -r]);
        r *= 2.0;
    }
    cuts.retain(|c| *c >= lo && *c <= hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let n = 1024usize;
    cuts.windows(2)
        .map(|w| {
            let h = (w[1] - w[0]) / n as f64;
            let mut s = f(w[0]) + f(w[1]);
            for k in 1..n {
                s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(w[0] + k as f64 * h);
            }
            s * h / 3.0
        })
        .sum()
}

fn ratio_extremes(b: f64, xi_max: f64, step: f64) -> (f64, f64, f64) {
    let n = (xi_max / step).round() as i64;
    let vals: Vec<(f64, f64)> = (-n..=n)
        .into_par_iter()
        .map(|k| {
            let xi = k as f64 * xi_max / n as f64;
            (xi, cauchy_exp_convolution(b, xi) * (1.0 + xi * xi))
        })
        .collect();
    let min = vals.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
    let max = vals.iter().map(|v| v.1).fold(0.0, f64::max);
    let m = vals.len();
    let even = (0..m).map(|k| (vals[k].1 - vals[m - 1 - k].1).abs()).fold(0.0, f64::max);
    (min, max, even)
}

pub fn convolution_equivalence_check(b: f64, xi_max: f64) -> Result<ConvEquivReport> {
    if !(b > 0.0 && b.is_finite()) || !(xi_max > 0.0 && xi_max.is_finite()) {
        return Err(Error::param("b", format!("need b > 0 and xi_max > 0, got {b}, {xi_max}")));
    }
    let step = 0.05f64.min(xi_max / 20.0);
    let (min, max, even_defect) = ratio_extremes(b, xi_max, step);
    let (min_doubled, max_doubled, _) = ratio_extremes(b, 2.0 * xi_max, step);
    let (q, qd) = (max / min, max_doubled / min_doubled);
    let doubling_change = (qd - q).abs() / q;
    Ok(ConvEquivReport {
        b,
        xi_max,
        min,
        max,
        min_doubled,
        max_doubled,
        doubling_change,
        even_defect,
        stable: min > 0.0 && max.is_finite() && doubling_change < CONV_STABILITY,
    })
}

/// Norms of the unit-integral mollifier `phi(x) = c exp(-1/(1 - |x|^2))` on `B_1 in R^d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BumpConstants {
    pub d: usize,
    /// The normalizing factor `c`.
    pub normalization: f64,
    pub l2_sq: f64,
    pub grad_sq: f64,
}

impl BumpConstants {
    pub fn h1_sq(&self) -> f64 {
        self.l2_sq + self.grad_sq
    }
}

/// Radial Simpson quadrature of the mollifier norms for `d` in `{1, 2}`.
pub fn bump_constants(d: usize) -> Result<BumpConstants> {
    let sphere = match d {
        1 => 2.0,
        2 => 2.0 * PI,
        _ => return Err(Error::param("d", format!("dimension {d} is not supported"))),
    };
    let bump = |r: f64| if r < 1.0 { (-1.0 / (1.0 - r * r)).exp() } else { 0.0 };
    let slope = |r: f64| if r < 1.0 { -2.0 * r / (1.0 - r * r).powi(2) * bump(r) } else { 0.0 };
    let radial = |f: &dyn Fn(f64) -> f64| {
        let n = 20_000usize;
        let h = 1.0 / n as f64;
        let g = |r: f64| f(r) * r.powi(d as i32 - 1);
        let mut s = g(0.0) + g(1.0);
        for k in 1..n {
            s += if k % 2 == 1 { 4.0 } else { 2.0 } * g(k as f64 * h);
        }
        sphere * s * h / 3.0
    };
    let mass = radial(&bump);
    let c = 1.0 / mass;
    Ok(BumpConstants {
        d,
        normalization: c,
        l2_sq: c * c * radial(&|r| bump(r).powi(2)),
        grad_sq: c * c * radial(&|r| slope(r).powi(2)),
    })
}

/// Outcome of [`modified_poincare_check`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModifiedPoincareReport {
    /// `inf_c ||u - c||^2_{L2(v)}`, the `v`-weighted variance.
    pub lhs: f64,
    /// `||delta_1[u]||^2_{L2(w)}`.
    pub rhs: f64,
    /// `lhs / rhs`; zero when both vanish.
    pub ratio: f64,
    pub c_p: f64,
    /// `2 ||phi||^2_{H1}` for the mollifier `phi`.
    pub c_star: f64,
    /// `c_star (1 + C_P)`.
    pub bound: f64,
    /// `2 (||phi||^2 + C_P ||grad phi||^2)`, the bound before the last
    /// simplification of the argument.
    pub sharp_bound: f64,
    pub holds: bool,
}

/// Checks `inf_c ||u - c||^2_{L2(v)} <= c_star (1 + C_P(v, w)) ||delta_1[u]||^2_{L2(w)}`
/// for a real grid function `u`.
pub fn modified_poincare_check(u: &[f64], pair: &WeightPair) -> Result<ModifiedPoincareReport> {
    let mesh = pair.mesh;
    if u.len() != mesh.len() {
        return Err(Error::GridMismatch(format!("{} values for {} nodes", u.len(), mesh.len())));
    }
    if u.iter().any(|x| !x.is_finite()) {
        return Err(Error::param("u", "must be bounded"));
    }
    let delta = match mesh {
        Mesh::Line { h, .. } => local_deviation_1d(u, h)?,
        Mesh::Plane(g) => local_deviation(&real_field(g, u))?.values,
    };
    let q = mesh.weights();
    let mv: f64 = pair.v.iter().zip(&q).map(|(a, b)| a * b).sum();
    let mean = u.iter().zip(pair.v.iter().zip(&q)).map(|(x, (a, b))| x * a * b).sum::<f64>() / mv;
    let lhs: f64 = u.iter().zip(pair.v.iter().zip(&q)).map(|(x, (a, b))| (x - mean).powi(2) * a * b).sum();
    let rhs: f64 = delta.iter().zip(pair.w.iter().zip(&q)).map(|(d, (a, b))| d * d * a * b).sum();
    let c_p = estimate_poincare(pair)?.c_p;
    let bump = bump_constants(mesh.dim())?;
    let c_star = 2.0 * bump.h1_sq();
    let bound = c_star * (1.0 + c_p);
    let sharp_bound = 2.0 * (bump.l2_sq + c_p * bump.grad_sq);
    let ratio = if rhs > 0.0 { lhs / rhs } else if lhs > 0.0 { f64::INFINITY } else { 0.0 };
    Ok(ModifiedPoincareReport { lhs, rhs, ratio, c_p, c_star, bound, sharp_bound, holds: ratio <= bound })
}

fn real_field(g: Grid2D, u: &[f64]) -> Field2D {
    Field2D { grid: g, values: u.iter().map(|&x| Complex64::new(x, 0.0)).collect() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tfcore::{gamma2_modulus_sq, log_sinh};

    #[test]
    fn gaussian_second_moment() {
        let mesh = Mesh::line(-8.0, 8.0, 4001).unwrap();
        let w: Vec<f64> = (0..mesh.len()).map(|k| (-PI * mesh.coords(k).0.powi(2)).exp()).collect();
        let m = bobkov_moment_bound(&mesh, &w).unwrap();
        assert!((m - 0.5 / PI).abs() < 1e-9);
        let shifted: Vec<f64> = (0..mesh.len()).map(|k| (-PI * (mesh.coords(k).0 - 1.5).powi(2)).exp()).collect();
        assert!((bobkov_moment_bound(&mesh, &shifted).unwrap() - m).abs() < 1e-9);
    }

    #[test]
    fn product_moment_adds() {
        let g = Grid2D::new(-8.0, 8.0, 321, -10.0, 10.0, 401).unwrap();
        let mesh = Mesh::Plane(g);
        let w: Vec<f64> =
            (0..g.len()).map(|k| { let (x, y) = mesh.coords(k); (-PI * x * x - 0.5 * y * y).exp() }).collect();
        let m = bobkov_moment_bound(&mesh, &w).unwrap();
        assert!((m - (0.5 / PI + 1.0)).abs() < 1e-6, "{m}");
    }

    #[test]
    fn closed_form_bounds() {
        assert_eq!(cauchy_pair_bound(2.0, 1).unwrap(), 0.25);
        assert!((cauchy_pair_bound(3.0, 2).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert!(cauchy_pair_bound(2.5, 2).is_err());
        assert_eq!(tensor_bound(0.1, 0.25).unwrap(), 0.25);
        assert_eq!(tensor_bound(0.3, 0.3).unwrap(), 0.3);
        assert!(tensor_bound(-0.1, 1.0).is_err());
    }

    #[test]
    fn sech_and_phi2_are_log_concave() {
        let sech = log_concavity_check_1d(|x| -(x.abs() + (-2.0 * x.abs()).exp().ln_1p() - 2f64.ln()), -30.0, 30.0, 6001, 1e-8)
            .unwrap();
        assert!(sech.passed, "{sech:?}");
        let phi2 = log_concavity_check_1d(|x| gamma2_modulus_sq(x).ln(), -20.0, 20.0, 8001, 1e-8).unwrap();
        assert!(phi2.passed, "{phi2:?}");
        // a bimodal density is caught
        let bimodal =
            log_concavity_check_1d(|x| ((-(x - 3.0).powi(2)).exp() + (-(x + 3.0).powi(2)).exp()).ln(), -6.0, 6.0, 601, 1e-8)
                .unwrap();
        assert!(!bimodal.passed);
    }

    #[test]
    fn nonpositive_values_are_rejected() {
        let mesh = Mesh::line(0.0, 1.0, 5).unwrap();
        assert!(matches!(log_concavity_check(&mesh, &[1.0, 2.0, 0.0, 1.0, 1.0], 1e-8), Err(Error::NonPositive { index: 2, .. })));
    }

    #[test]
    fn sinh_inequality() {
        let lhs = 1f64.sinh().powi(2);
        let rhs = (1.0 + 1.0 / (PI * PI)).powi(2);
        assert!((lhs - 1.3811).abs() < 1e-4 && (rhs - 1.2129).abs() < 1e-4);
        assert!((sinh_log_margin(1.0) - (lhs / rhs).ln()).abs() < 1e-12);
        let r = sinh_inequality_check(20.0, 10_000).unwrap();
        assert!(r.holds && r.min_log_margin > 0.0);
        // v = 20: log margin = 2 log sinh 20 - 2 log(20 (1 + 400/pi^2)) ~ 26.6
        assert!((r.log_margin_at_max - (2.0 * log_sinh(20.0) - 2.0 * (20.0 * (1.0 + 400.0 / (PI * PI))).ln())).abs() < 1e-9);
        assert!(r.log_margin_at_max > 20.0);
        // near zero the margin is 2 v^2 (1/6 - 1/pi^2) + O(v^4)
        let v = 1e-3;
        assert!((sinh_log_margin(v) - 2.0 * v * v * (1.0 / 6.0 - 1.0 / (PI * PI))).abs() < 1e-12);
    }

    #[test]
    fn convolution_at_origin_and_infinity() {
        // oracle: eta = tan(theta) / pi turns the Lorentzian into d theta / pi
        let oracle = |b: f64, xi: f64| {
            let kink = (PI * xi).atan();
            let f = |t: f64| (-b * (xi - t.tan() / PI).abs()).exp() / PI;
            let simpson = |lo: f64, hi: f64| {
                let n = 200_000;
                let h = (hi - lo) / n as f64;
                let inner: f64 = (1..n).map(|k| if k % 2 == 1 { 4.0 } else { 2.0 } * f(lo + k as f64 * h)).sum();
                (inner + f(lo) + f(hi)) * h / 3.0
            };
            let edge = PI / 2.0 - 1e-12;
            simpson(-edge, kink) + simpson(kink, edge)
        };
        for b in [0.5, 1.0, 2.0] {
            for xi in [0.0, 0.7, 10.0] {
                let (got, want) = (cauchy_exp_convolution(b, xi), oracle(b, xi));
                assert!((got - want).abs() < 1e-8 * want, "b={b} xi={xi}: {got} vs {want}");
            }
        }
        // far out the convolution behaves like (2/b) / (pi^2 xi^2)
        let (b, xi) = (1.0, 60.0);
        let r = cauchy_exp_convolution(b, xi) * (1.0 + xi * xi);
        assert!((r - 2.0 / (PI * PI * b)).abs() < 0.01 * r);
    }

    #[test]
    fn convolution_equivalence_is_stable() {
        let r = convolution_equivalence_check(1.0, 50.0).unwrap();
        assert!(r.stable && r.min > 0.0, "{r:?}");
        assert!(r.even_defect < 1e-12 * r.max);
        let wide = convolution_equivalence_check(2.0, 50.0).unwrap();
        assert!(wide.max < r.max && wide.min < r.min);
    }

    #[test]
    fn bump_is_normalized() {
        for d in [1, 2] {
            let b = bump_constants(d).unwrap();
            assert!(b.l2_sq > 0.0 && b.grad_sq > b.l2_sq);
        }
        // d = 1 normalization against a direct Simpson rule on [-1, 1]
        let b = bump_constants(1).unwrap();
        let n = 40_000;
        let h = 2.0 / n as f64;
        let f = |x: f64| if x.abs() < 1.0 { (-1.0 / (1.0 - x * x)).exp() } else { 0.0 };
        let s: f64 = (1..n).map(|k| if k % 2 == 1 { 4.0 } else { 2.0 } * f(-1.0 + k as f64 * h)).sum::<f64>() * h / 3.0;
        assert!((b.normalization * s - 1.0).abs() < 1e-10);
    }

    #[test]
    fn modified_poincare_on_constant_and_oscillation() {
        let pair = WeightPair::line_fn(0.0, 4.0, 801, |_| 1.0, |_| 1.0).unwrap();
        let c = modified_poincare_check(&vec![2.0; 801], &pair).unwrap();
        assert_eq!((c.lhs, c.rhs, c.ratio), (0.0, 0.0, 0.0));
        let u: Vec<f64> = (0..801).map(|k| 0.1 * (8.0 * PI * k as f64 * 0.005).sin()).collect();
        let r = modified_poincare_check(&u, &pair).unwrap();
        assert!(r.holds && r.ratio < 0.1 * r.bound, "{r:?}");
        // the gradient-based quotient would be tiny: |grad u|^2 ~ (0.8 pi)^2 times the variance
        assert!(r.lhs < 0.03);
    }
}
