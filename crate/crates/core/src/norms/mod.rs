//! Distances between time-frequency fields.
//!
//! * [`mixed_norm`]: `||F||_{L(chi)} = ( \int ((|F|^2 * 1_{B_1})(tau))^2 chi(tau) dtau )^{1/4}`
//! * [`metric_d`]: `d(phi, psi) = ||phi^2 - psi^2||_2^{1/2}`
//! * [`phase_aligned_distance`]: `inf_{|lambda| = 1} ||H - lambda F||`
//! * [`local_deviation`]: `delta_1[u](x) = ( \int_{B_1(x)} |u(y) - u(x)|^2 dy )^{1/2}`
//!
//! Unit-disk integrals use the exact disk indicator on the grid (a node is
//! inside iff its distance to the centre is `< 1`) with the cell area
//! `hx * hxi` as the measure. Outer integrals use trapezoidal node weights.

mod disk;

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::tfcore::{Field2D, Grid2D, RealField2D};
use crate::{Error, Result};

pub use disk::{ball_energy, ball_energy_fft, ball_sum_complex, DiskStencil};

/// Largest grid spacing for which unit-ball integrals are considered resolved.
pub const MAX_BALL_SPACING: f64 = 0.25;

/// The weight `chi: R^2 -> [0, 1]` of the mixed norm.
#[derive(Debug, Clone, PartialEq)]
pub enum ChiWeight {
    Unit,
    /// `chi(x, xi) = 1 / (1 + xi^2)`.
    CauchyFreq,
    /// Indicator of the rectangle `K`; nodes on its boundary get `1/2`, except
    /// where that boundary coincides with the edge of the grid.
    CompactIndicator { x_min: f64, x_max: f64, xi_min: f64, xi_max: f64 },
    Sampled(RealField2D),
}

impl ChiWeight {
    pub fn name(&self) -> &'static str {
        match self {
            ChiWeight::Unit => "unit",
            ChiWeight::CauchyFreq => "cauchy",
            ChiWeight::CompactIndicator { .. } => "indicator",
            ChiWeight::Sampled(_) => "sampled",
        }
    }

    pub fn eval(&self, x: f64, xi: f64) -> Option<f64> {
        match self {
            ChiWeight::Unit => Some(1.0),
            ChiWeight::CauchyFreq => Some(1.0 / (1.0 + xi * xi)),
            ChiWeight::CompactIndicator { x_min, x_max, xi_min, xi_max } => {
                let side = |v: f64, lo: f64, hi: f64| {
                    let eps = 1e-12 * (1.0 + v.abs());
                    if v < lo - eps || v > hi + eps {
                        0.0
                    } else if (v - lo).abs() <= eps || (v - hi).abs() <= eps {
                        0.5
                    } else {
                        1.0
                    }
                };
                // a corner node counts 1/4, an edge node 1/2
                Some(side(x, *x_min, *x_max) * side(xi, *xi_min, *xi_max))
            }
            ChiWeight::Sampled(_) => None,
        }
    }

    /// Node values of `chi` on `grid`, validated to lie in `[0, 1]`.
    pub fn values_on(&self, grid: &Grid2D) -> Result<Vec<f64>> {
        let vals = match self {
            ChiWeight::Sampled(f) => {
                f.grid.check_same(grid)?;
                f.values.clone()
            }
            ChiWeight::CompactIndicator { x_min, x_max, xi_min, xi_max } => {
                // edges of K lying on the grid boundary are not jumps of chi there
                let open = |v: f64, edge: f64, below: bool| {
                    let beyond = if below { v <= edge } else { v >= edge };
                    if beyond {
                        if below {
                            f64::NEG_INFINITY
                        } else {
                            f64::INFINITY
                        }
                    } else {
                        v
                    }
                };
                let k = ChiWeight::CompactIndicator {
                    x_min: open(*x_min, grid.x_min, true),
                    x_max: open(*x_max, grid.x_max, false),
                    xi_min: open(*xi_min, grid.xi_min, true),
                    xi_max: open(*xi_max, grid.xi_max, false),
                };
                RealField2D::from_fn(*grid, |x, xi| k.eval(x, xi).unwrap_or(0.0)).values
            }
            other => RealField2D::from_fn(*grid, |x, xi| other.eval(x, xi).unwrap_or(0.0)).values,
        };
        if let Some(k) = vals.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::param("chi", format!("value {} at node {k} is outside [0, 1]", vals[k])));
        }
        Ok(vals)
    }
}

/// Which norm a phase alignment minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NormKind {
    Mixed,
    L2,
}

/// Minimizer and minimum of `lambda -> ||H - lambda F||` over `|lambda| = 1`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PhaseAlignment {
    pub lambda_star: Complex64,
    pub value: f64,
    pub iterations: usize,
}

fn check_ball_resolution(grid: &Grid2D) -> Result<()> {
    let h = grid.hx().max(grid.hxi());
    if h > MAX_BALL_SPACING {
        return Err(Error::GridTooCoarse { what: "unit ball", spacing: h, limit: MAX_BALL_SPACING });
    }
    Ok(())
}

/// `( sum_nodes |F|^p chi w )^{1/p}` for `p` in `{1, 2, 4}`.
pub fn weighted_lp_norm(f: &Field2D, p: f64, chi: &ChiWeight) -> Result<f64> {
    if ![1.0, 2.0, 4.0].contains(&p) {
        return Err(Error::param("p", format!("only 1, 2 and 4 are supported, got {p}")));
    }
    let chi = chi.values_on(&f.grid)?;
    let w = f.grid.weights();
    let s: f64 = f.values.iter().zip(&chi).zip(&w).map(|((z, c), w)| z.norm().powf(p) * c * w).sum();
    Ok(s.powf(1.0 / p))
}

/// `d(phi, psi) = ||phi^2 - psi^2||_2^{1/2}`.
pub fn metric_d(phi: &RealField2D, psi: &RealField2D) -> Result<f64> {
    phi.grid.check_same(&psi.grid)?;
    let w = phi.grid.weights();
    let s: f64 = phi
        .values
        .iter()
        .zip(&psi.values)
        .zip(&w)
        .map(|((a, b), w)| {
            let d = a * a - b * b;
            d * d * w
        })
        .sum();
    Ok(s.sqrt().sqrt())
}

/// `( sum_tau E(tau)^2 chi(tau) w_tau )^{1/4}` for a precomputed ball energy `E`.
fn l4_of_energy(grid: &Grid2D, energy: &[f64], chi: &[f64]) -> f64 {
    let w = grid.weights();
    let s: f64 = energy.iter().zip(chi).zip(&w).map(|((e, c), w)| e * e * c * w).sum();
    s.sqrt().sqrt()
}

/// Mixed norm of a field given by its squared modulus.
pub fn mixed_norm_of_power(grid: &Grid2D, power: &[f64], chi: &ChiWeight) -> Result<f64> {
    check_ball_resolution(grid)?;
    let chi = chi.values_on(grid)?;
    let e = ball_energy(grid, power)?;
    Ok(l4_of_energy(grid, &e, &chi))
}

/// `||F||_{L(chi)}`.
pub fn mixed_norm(f: &Field2D, chi: &ChiWeight) -> Result<f64> {
    let power: Vec<f64> = f.values.iter().map(|z| z.norm_sqr()).collect();
    mixed_norm_of_power(&f.grid, &power, chi)
}

/// `||phi||_{L(chi)}` for a real field.
pub fn mixed_norm_real(phi: &RealField2D, chi: &ChiWeight) -> Result<f64> {
    let power: Vec<f64> = phi.values.iter().map(|v| v * v).collect();
    mixed_norm_of_power(&phi.grid, &power, chi)
}

/// Weighted inner product `<H, F> = sum H conj(F) w`.
fn inner(h: &Field2D, f: &Field2D) -> Complex64 {
    let w = h.grid.weights();
    h.values.iter().zip(&f.values).zip(&w).map(|((a, b), w)| a * b.conj() * w).sum()
}

/// Ball sums needed to evaluate `||H - c F||_{L(chi)}` for any complex `c`:
/// `E(c) = A - 2 Re(conj(c) C) + |c|^2 B` with `A = |H|^2 * 1_B`,
/// `B = |F|^2 * 1_B` and `C = (H conj F) * 1_B`.
struct Lifted {
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<Complex64>,
    /// `chi * w` at each node.
    cw: Vec<f64>,
}

impl Lifted {
    fn new(f: &Field2D, h: &Field2D, chi: &ChiWeight) -> Result<Self> {
        f.grid.check_same(&h.grid)?;
        check_ball_resolution(&f.grid)?;
        let grid = f.grid;
        let pf: Vec<f64> = f.values.iter().map(|z| z.norm_sqr()).collect();
        let ph: Vec<f64> = h.values.iter().map(|z| z.norm_sqr()).collect();
        let cross: Vec<Complex64> = h.values.iter().zip(&f.values).map(|(a, b)| a * b.conj()).collect();
        let chi = chi.values_on(&grid)?;
        let cw = chi.iter().zip(grid.weights()).map(|(c, w)| c * w).collect();
        Ok(Self { a: ball_energy(&grid, &ph)?, b: ball_energy(&grid, &pf)?, c: ball_sum_complex(&grid, &cross)?, cw })
    }

    /// Coefficients of `Phi(theta) = ||H - e^{i theta} F||^4` as
    /// `k0 + k1c cos + k1s sin + k2c cos 2 + k2s sin 2`.
    fn trig_coefficients(&self) -> [f64; 5] {
        let mut k = [0.0; 5];
        for idx in 0..self.a.len() {
            let w = self.cw[idx];
            if w == 0.0 {
                continue;
            }
            let p = self.a[idx] + self.b[idx];
            let (cr, ci) = (self.c[idx].re, self.c[idx].im);
            k[0] += w * (p * p + 2.0 * (cr * cr + ci * ci));
            k[1] += w * (-4.0 * p * cr);
            k[2] += w * (-4.0 * p * ci);
            k[3] += w * 2.0 * (cr * cr - ci * ci);
            k[4] += w * 4.0 * cr * ci;
        }
        k
    }

    /// `||H - c F||^4` for complex `c`, with gradient and Hessian in `(Re c, Im c)`.
    fn quartic(&self, c: Complex64) -> (f64, [f64; 2], [f64; 3]) {
        let (u, v) = (c.re, c.im);
        let (mut val, mut gu, mut gv, mut huu, mut huv, mut hvv) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for idx in 0..self.a.len() {
            let w = self.cw[idx];
            if w == 0.0 {
                continue;
            }
            let (b, cr, ci) = (self.b[idx], self.c[idx].re, self.c[idx].im);
            let e = self.a[idx] - 2.0 * (u * cr + v * ci) + (u * u + v * v) * b;
            let eu = -2.0 * cr + 2.0 * u * b;
            let ev = -2.0 * ci + 2.0 * v * b;
            val += w * e * e;
            gu += 2.0 * w * e * eu;
            gv += 2.0 * w * e * ev;
            huu += 2.0 * w * (eu * eu + 2.0 * e * b);
            huv += 2.0 * w * eu * ev;
            hvv += 2.0 * w * (ev * ev + 2.0 * e * b);
        }
        (val, [gu, gv], [huu, huv, hvv])
    }
}

fn trig_eval(k: &[f64; 5], t: f64) -> f64 {
    k[0] + k[1] * t.cos() + k[2] * t.sin() + k[3] * (2.0 * t).cos() + k[4] * (2.0 * t).sin()
}

/// Golden-section search for a minimum of `f` on `[lo, hi]`.
fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, usize) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    let mut it = 0;
    while hi - lo > tol && it < 200 {
        it += 1;
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        }
    }
    (0.5 * (lo + hi), it)
}

/// Number of angles in the initial scan of the mixed-norm phase search.
pub const PHASE_SCAN: usize = 64;

/// `inf_{|lambda| = 1} ||H - lambda F||` in the chosen norm.
///
/// The L2 minimizer is `<H, F> / |<H, F>|` (1 when the pairing vanishes).
/// For the mixed norm, `||H - e^{i theta} F||^4` is a trigonometric
/// polynomial of degree 2 in `theta`: it is scanned at [`PHASE_SCAN`] angles
/// and refined by golden-section search to `1e-8`; the L2 minimizer is kept
/// as a candidate as well, and the final value is evaluated directly.
pub fn phase_aligned_distance(f: &Field2D, h: &Field2D, chi: &ChiWeight, kind: NormKind) -> Result<PhaseAlignment> {
    f.grid.check_same(&h.grid)?;
    let pairing = inner(h, f);
    let l2_lambda = if pairing.norm() > 0.0 { pairing / pairing.norm() } else { Complex64::new(1.0, 0.0) };
    match kind {
        NormKind::L2 => {
            let diff = h.sub_scaled(f, l2_lambda)?;
            let chi = chi.values_on(&f.grid)?;
            let w = f.grid.weights();
            let s: f64 = diff.values.iter().zip(&chi).zip(&w).map(|((z, c), w)| z.norm_sqr() * c * w).sum();
            Ok(PhaseAlignment { lambda_star: l2_lambda, value: s.sqrt(), iterations: 0 })
        }
        NormKind::Mixed => {
            let lifted = Lifted::new(f, h, chi)?;
            let k = lifted.trig_coefficients();
            let step = 2.0 * PI / PHASE_SCAN as f64;
            let best = (0..PHASE_SCAN)
                .map(|m| m as f64 * step)
                .fold((0.0, f64::INFINITY), |acc, t| {
                    let v = trig_eval(&k, t);
                    if v < acc.1 {
                        (t, v)
                    } else {
                        acc
                    }
                })
                .0;
            let (theta, iterations) = golden_section(|t| trig_eval(&k, t), best - step, best + step, 1e-8);
            let candidates = [Complex64::from_polar(1.0, theta), l2_lambda];
            let mut out = PhaseAlignment { lambda_star: candidates[0], value: f64::INFINITY, iterations };
            for lam in candidates {
                let v = mixed_norm(&h.sub_scaled(f, lam)?, chi)?;
                if v < out.value {
                    out.value = v;
                    out.lambda_star = lam;
                }
            }
            Ok(out)
        }
    }
}

/// `inf_{c in C} ||H - c F||_{L(chi)}` and its minimizer.
///
/// `c -> ||H - c F||^4` is a convex quartic; Newton's method with
/// backtracking is started from the L2 minimizer `<H, F> / <F, F>`.
pub fn inf_complex_scale(f: &Field2D, h: &Field2D, chi: &ChiWeight) -> Result<(Complex64, f64)> {
    let lifted = Lifted::new(f, h, chi)?;
    let ff = inner(f, f).re;
    let mut c = if ff > 0.0 { inner(h, f) / ff } else { Complex64::new(0.0, 0.0) };
    let (mut val, _, _) = lifted.quartic(c);
    for _ in 0..100 {
        let (v0, g, [huu, huv, hvv]) = lifted.quartic(c);
        let det = huu * hvv - huv * huv;
        if !(det > 0.0) || g[0].hypot(g[1]) <= 1e-15 * v0.max(f64::MIN_POSITIVE) {
            break;
        }
        let du = -(hvv * g[0] - huv * g[1]) / det;
        let dv = -(-huv * g[0] + huu * g[1]) / det;
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-12 {
            let trial = c + Complex64::new(du, dv) * t;
            let (vt, _, _) = lifted.quartic(trial);
            if vt <= v0 {
                c = trial;
                val = vt;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted || (v0 - val) <= 1e-15 * v0 {
            break;
        }
    }
    // the direct evaluation is the reported value
    let direct = mixed_norm(&h.sub_scaled(f, c)?, chi)?;
    Ok((c, direct.min(val.max(0.0).sqrt().sqrt()).max(0.0)))
}

/// `delta_1[u]` at every node: the truncated disk `B_1(x)` intersected with
/// the grid domain, direct stencil sum.
pub fn local_deviation(u: &Field2D) -> Result<RealField2D> {
    let grid = u.grid;
    check_ball_resolution(&grid)?;
    let disk = DiskStencil::new(&grid);
    let area = grid.hx() * grid.hxi();
    let rows: Vec<Vec<f64>> = (0..grid.nx)
        .into_par_iter()
        .map(|i| {
            (0..grid.nxi)
                .map(|j| {
                    let c = u.values[grid.index(i, j)];
                    let mut s = 0.0;
                    for &(p, q) in &disk.rows {
                        let r = i as i64 + p;
                        if r < 0 || r >= grid.nx as i64 {
                            continue;
                        }
                        let lo = (j as i64 - q).max(0) as usize;
                        let hi = (j as i64 + q).min(grid.nxi as i64 - 1) as usize;
                        let base = r as usize * grid.nxi;
                        for v in &u.values[base + lo..=base + hi] {
                            s += (v - c).norm_sqr();
                        }
                    }
                    (s * area).sqrt()
                })
                .collect()
        })
        .collect();
    RealField2D::new(grid, rows.into_iter().flatten().collect())
}

/// `delta_1[u]` on a 1-D grid of spacing `h`: the ball is `(x - 1, x + 1)`.
pub fn local_deviation_1d(u: &[f64], h: f64) -> Result<Vec<f64>> {
    if !(h > 0.0 && h <= MAX_BALL_SPACING) {
        return Err(Error::GridTooCoarse { what: "unit interval", spacing: h, limit: MAX_BALL_SPACING });
    }
    let q = ((1.0 / h) * (1.0 - 1e-12)).floor() as i64;
    let n = u.len() as i64;
    Ok((0..n)
        .map(|i| {
            let lo = (i - q).max(0) as usize;
            let hi = (i + q).min(n - 1) as usize;
            let c = u[i as usize];
            (u[lo..=hi].iter().map(|v| (v - c) * (v - c)).sum::<f64>() * h).sqrt()
        })
        .collect())
}

/// Outcome of [`phaseless_diff_bound_check`].
#[derive(Debug, Clone, Serialize)]
pub struct PhaselessReport {
    /// `|| |H| - |F| ||_L`.
    pub lhs: f64,
    /// `d(|F|, |H|)`.
    pub rhs: f64,
    /// `lhs / rhs`, or 1 when both vanish.
    pub ratio: f64,
    /// `|B_1|^{1/2}` of the discrete disk, the constant of the bound.
    pub constant: f64,
    /// `pi^{1/2}`, the continuum constant.
    pub continuum_constant: f64,
    pub holds: bool,
}

/// Checks `|| |H| - |F| ||_L <= |B_1|^{1/2} d(|F|, |H|)`.
pub fn phaseless_diff_bound_check(f: &Field2D, h: &Field2D) -> Result<PhaselessReport> {
    f.grid.check_same(&h.grid)?;
    let (mf, mh) = (f.modulus(), h.modulus());
    let diff = RealField2D::new(f.grid, mh.values.iter().zip(&mf.values).map(|(a, b)| a - b).collect())?;
    let lhs = mixed_norm_real(&diff, &ChiWeight::Unit)?;
    let rhs = metric_d(&mf, &mh)?;
    let constant = DiskStencil::new(&f.grid).area.sqrt();
    let ratio = if rhs > 0.0 {
        lhs / rhs
    } else if lhs == 0.0 {
        1.0
    } else {
        f64::INFINITY
    };
    Ok(PhaselessReport {
        lhs,
        rhs,
        ratio,
        constant,
        continuum_constant: PI.sqrt(),
        holds: lhs <= constant * rhs * (1.0 + 1e-12) + 1e-300,
    })
}
