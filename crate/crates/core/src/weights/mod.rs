//! Translation stable weights and admissible pairs.
//!
//! A weight `gamma` is translation stable when `gamma(z + tau) <= mu(tau) gamma(z)`
//! for a locally bounded control function `mu`. A window `g` and a weight
//! `gamma = e^{-a|x| - b|xi|}` form an admissible pair when `|V_g g|` is
//! translation stable with a control `mu` that is square integrable against
//! the autocorrelation `gamma * R gamma`.
//!
//! Everything that can overflow (the control functions grow exponentially,
//! the ambiguity moduli decay exponentially) is evaluated in log space.

mod quadrature;

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::tfcore::{log_ambiguity_modulus, Grid2D, WindowSpec};
use crate::{Error, Result};

pub use quadrature::log_simpson;

/// `gamma(x, xi) = exp(-a |x| - b |xi|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct GammaWeight {
    pub a: f64,
    pub b: f64,
}

impl GammaWeight {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        for (name, v) in [("gamma.a", a), ("gamma.b", b)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, format!("must be positive and finite, got {v}")));
            }
        }
        Ok(Self { a, b })
    }

    pub fn eval(&self, x: f64, xi: f64) -> f64 {
        (-self.a * x.abs() - self.b * xi.abs()).exp()
    }

    /// `(gamma * R gamma)(x, xi) = (1/a + |x|) e^{-a|x|} (1/b + |xi|) e^{-b|xi|}`.
    pub fn autocorr(&self, x: f64, xi: f64) -> f64 {
        self.log_autocorr(x, xi).exp()
    }

    pub fn log_autocorr(&self, x: f64, xi: f64) -> f64 {
        let (x, xi) = (x.abs(), xi.abs());
        (1.0 / self.a + x).ln() - self.a * x + (1.0 / self.b + xi).ln() - self.b * xi
    }

    /// `\int gamma = 4 / (a b)`.
    pub fn integral(&self) -> f64 {
        4.0 / (self.a * self.b)
    }
}

/// Free-function form of [`GammaWeight::eval`].
pub fn gamma_eval(g: &GammaWeight, x: f64, xi: f64) -> f64 {
    g.eval(x, xi)
}

/// Free-function form of [`GammaWeight::autocorr`].
pub fn gamma_autocorr(g: &GammaWeight, x: f64, xi: f64) -> f64 {
    g.autocorr(x, xi)
}

/// `mu(tau) = c_norm (1 + poly_coef |tau_2|^poly_power) exp(time_rate |tau_1| + freq_rate |tau_2|)`.
///
/// Both closed-form control functions of the supported windows have this
/// shape; other members of the family are useful as negative controls.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControlFunction {
    pub label: String,
    pub time_rate: f64,
    pub freq_rate: f64,
    pub poly_coef: f64,
    pub poly_power: f64,
    pub c_norm: f64,
}

impl ControlFunction {
    /// The control function that makes `|V_g g|` translation stable.
    ///
    /// * one-sided exponential: `e^{|tau_1|} (1 + pi |tau_2|)`. The growth in
    ///   `tau_1` must be `e^{+|tau_1|}`: shifting `e^{-|x|}` by `tau_1` costs
    ///   up to that factor.
    /// * ExpExp: `c (1 + |tau_2|^{3/2}) e^{pi^2 |tau_2| + |tau_1|}` with `c = 1`;
    ///   use [`estimate_mu_norm`] and [`ControlFunction::with_norm`] to measure it.
    pub fn for_window(window: &WindowSpec) -> Result<Self> {
        match window {
            WindowSpec::OneSidedExp => Ok(Self::custom("onesided", 1.0, 0.0, PI, 1.0)),
            WindowSpec::ExpExp => Ok(Self::custom("expexp", 1.0, PI * PI, 1.0, 1.5)),
            other => Err(Error::NoControlFunction(other.name())),
        }
    }

    pub fn custom(label: &str, time_rate: f64, freq_rate: f64, poly_coef: f64, poly_power: f64) -> Self {
        Self { label: label.to_string(), time_rate, freq_rate, poly_coef, poly_power, c_norm: 1.0 }
    }

    pub fn with_norm(mut self, c_norm: f64) -> Self {
        self.c_norm = c_norm;
        self
    }

    /// `ln mu(tau)`.
    pub fn log_eval(&self, t1: f64, t2: f64) -> f64 {
        let (t1, t2) = (t1.abs(), t2.abs());
        self.c_norm.ln() + (self.poly_coef * t2.powf(self.poly_power)).ln_1p() + self.time_rate * t1 + self.freq_rate * t2
    }

    pub fn eval(&self, t1: f64, t2: f64) -> f64 {
        self.log_eval(t1, t2).exp()
    }
}

/// `n x n` lattice of shifts on `[-r, r]^2`.
pub fn tau_lattice(r: f64, n: usize) -> Vec<(f64, f64)> {
    let n = n.max(2);
    let h = 2.0 * r / (n - 1) as f64;
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            out.push((-r + i as f64 * h, -r + j as f64 * h));
        }
    }
    out
}

/// Log of the worst ratio `|A(z + tau)| / (mu(tau) |A(z)|)` with its location.
fn worst_log_ratio(
    window: &WindowSpec,
    mu: &ControlFunction,
    grid: &Grid2D,
    taus: &[(f64, f64)],
) -> Result<(f64, (f64, f64), (f64, f64))> {
    let mut base = Vec::with_capacity(grid.len());
    for i in 0..grid.nx {
        for j in 0..grid.nxi {
            base.push(log_ambiguity_modulus(window, grid.x(i), grid.xi(j))?);
        }
    }
    let per_tau: Vec<(f64, (f64, f64), (f64, f64))> = taus
        .par_iter()
        .map(|&(t1, t2)| {
            let lm = mu.log_eval(t1, t2);
            let mut best = (f64::NEG_INFINITY, (0.0, 0.0), (t1, t2));
            for i in 0..grid.nx {
                let x = grid.x(i);
                for j in 0..grid.nxi {
                    let xi = grid.xi(j);
                    // closed forms were validated when `base` was filled
                    let shifted = log_ambiguity_modulus(window, x + t1, xi + t2).unwrap_or(f64::NEG_INFINITY);
                    let r = shifted - base[grid.index(i, j)] - lm;
                    if r > best.0 {
                        best = (r, (x, xi), (t1, t2));
                    }
                }
            }
            best
        })
        .collect();
    // sequential reduction keeps the reported location deterministic
    let mut best = (f64::NEG_INFINITY, (0.0, 0.0), (0.0, 0.0));
    for cand in per_tau {
        if cand.0 > best.0 {
            best = cand;
        }
    }
    Ok(best)
}

/// Smallest `c` such that `c (1 + |tau_2|^{3/2}) e^{pi^2 |tau_2| + |tau_1|}`
/// dominates `|A(z + tau)| / |A(z)|` over the sampled `z` (grid nodes) and
/// `tau`. The shift `tau = 0` is always included, so the result is at least 1.
pub fn estimate_mu_norm(window: &WindowSpec, grid: &Grid2D, tau_samples: &[(f64, f64)]) -> Result<f64> {
    if !matches!(window, WindowSpec::ExpExp) {
        return Err(Error::param("window", format!("a measured constant only applies to expexp, not {}", window.name())));
    }
    if tau_samples.is_empty() {
        return Err(Error::Empty("no shifts to sample"));
    }
    let mut taus = tau_samples.to_vec();
    taus.push((0.0, 0.0));
    let envelope = ControlFunction::for_window(window)?;
    let (lr, _, _) = worst_log_ratio(window, &envelope, grid, &taus)?;
    Ok(lr.exp())
}

/// Outcome of [`verify_tsw`].
#[derive(Debug, Clone, Serialize)]
pub struct TswReport {
    pub passed: bool,
    /// `max |A(z + tau)| / (mu(tau) |A(z)|)`.
    pub worst_ratio: f64,
    pub worst_z: (f64, f64),
    pub worst_tau: (f64, f64),
    pub checked: usize,
}

/// Checks `|A(z + tau)| <= (1 + tol) mu(tau) |A(z)|` at every grid node `z`
/// and every sampled `tau`. Violations are reported, not returned as errors.
pub fn verify_tsw(
    window: &WindowSpec,
    mu: &ControlFunction,
    grid: &Grid2D,
    tau_samples: &[(f64, f64)],
    tol: f64,
) -> Result<TswReport> {
    log_ambiguity_modulus(window, 0.0, 0.0)?;
    if tau_samples.is_empty() {
        return Err(Error::Empty("no shifts to sample"));
    }
    let (lr, z, tau) = worst_log_ratio(window, mu, grid, tau_samples)?;
    Ok(TswReport {
        passed: lr <= tol.ln_1p(),
        worst_ratio: lr.exp(),
        worst_z: z,
        worst_tau: tau,
        checked: grid.len() * tau_samples.len(),
    })
}

/// Radii of the nested boxes `[-R, R]^2` used for the shell analysis.
pub const SHELL_RADII: [f64; 5] = [3.0, 6.0, 12.0, 24.0, 48.0];

/// Slope threshold of `ln(shell integral)` against radius at or above which
/// the integral is declared divergent.
pub const DIVERGENCE_SLOPE: f64 = -1e-3;

/// Outcome of [`check_admissibility`].
#[derive(Debug, Clone, Serialize)]
pub struct AdmissibilityReport {
    pub window: String,
    pub a: f64,
    pub b: f64,
    pub admissible: bool,
    /// Exponent test: `a > 2 * time_rate` and `b > 2 * freq_rate`.
    pub exponent_condition: bool,
    /// The shell integrals decay.
    pub numerically_convergent: bool,
    /// `\int_{[-48, 48]^2} mu^2 (gamma * R gamma)`; `None` when divergent.
    pub integral_estimate: Option<f64>,
    /// Relative change of the integral from `[-24, 24]^2` to `[-48, 48]^2`.
    pub doubling_change: Option<f64>,
    /// Fitted slope of `ln(shell integral)` against shell mid-radius.
    pub tail_slope: f64,
    /// Same fit for the one-dimensional factor in `tau_1` only.
    pub tail_slope_tau1: f64,
    /// Same fit for the one-dimensional factor in `tau_2` only.
    pub tail_slope_tau2: f64,
    /// `ln` of each box shell integral, innermost first.
    pub log_shells: Vec<f64>,
}

/// Log-integrands of the two separable factors of `mu^2 (gamma * R gamma)` on `[0, inf)`.
fn factors(mu: &ControlFunction, g: &GammaWeight) -> (impl Fn(f64) -> f64 + Sync, impl Fn(f64) -> f64 + Sync) {
    let (a, ta) = (g.a, mu.time_rate);
    let (b, fb, pc, pp) = (g.b, mu.freq_rate, mu.poly_coef, mu.poly_power);
    let f1 = move |x: f64| 2.0 * ta * x + (1.0 / a + x).ln() - a * x;
    let f2 = move |s: f64| 2.0 * (pc * s.powf(pp)).ln_1p() + 2.0 * fb * s + (1.0 / b + s).ln() - b * s;
    (f1, f2)
}

/// `ln \int_{lo <= |t| <= hi} e^{f(|t|)} dt`, i.e. twice the one-sided integral.
fn log_sym(f: &(impl Fn(f64) -> f64 + Sync), lo: f64, hi: f64, rate: f64) -> f64 {
    std::f64::consts::LN_2 + log_simpson(f, lo, hi, rate)
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

fn log_add(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Shell analysis of `mu^2 (gamma * R gamma)` for an explicit control function.
pub fn check_admissibility_with(mu: &ControlFunction, g: &GammaWeight, window: &str) -> AdmissibilityReport {
    let (f1, f2) = factors(mu, g);
    let r1 = (g.a - 2.0 * mu.time_rate).abs().max(1.0);
    let r2 = (g.b - 2.0 * mu.freq_rate).abs().max(1.0);
    // cumulative log integrals of each factor over [-R, R]
    let mut c1 = vec![log_sym(&f1, 0.0, SHELL_RADII[0], r1)];
    let mut c2 = vec![log_sym(&f2, 0.0, SHELL_RADII[0], r2)];
    let mut s1 = Vec::new();
    let mut s2 = Vec::new();
    for w in SHELL_RADII.windows(2) {
        let d1 = log_sym(&f1, w[0], w[1], r1);
        let d2 = log_sym(&f2, w[0], w[1], r2);
        s1.push(d1);
        s2.push(d2);
        c1.push(log_add(*c1.last().unwrap(), d1));
        c2.push(log_add(*c2.last().unwrap(), d2));
    }
    let log_c2 = 2.0 * mu.c_norm.ln();
    // box shell = (I1(R') - I1(R)) I2(R') + I1(R) (I2(R') - I2(R))
    let shells: Vec<f64> = (0..s1.len())
        .map(|k| log_c2 + log_add(s1[k] + c2[k + 1], c1[k] + s2[k]))
        .collect();
    let mids: Vec<f64> = SHELL_RADII.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let tail = &mids[mids.len() - 4..];
    let tail_slope = slope(tail, &shells[shells.len() - 4..]);
    let tail_slope_tau1 = slope(tail, &s1[s1.len() - 4..]);
    let tail_slope_tau2 = slope(tail, &s2[s2.len() - 4..]);

    let exponent_condition = g.a > 2.0 * mu.time_rate && g.b > 2.0 * mu.freq_rate;
    let numerically_convergent = tail_slope < DIVERGENCE_SLOPE;
    let n = c1.len();
    let total = |k: usize| (log_c2 + c1[k] + c2[k]).exp();
    let (integral_estimate, doubling_change) = if numerically_convergent {
        let (big, small) = (total(n - 1), total(n - 2));
        (Some(big), Some((big - small).abs() / big))
    } else {
        (None, None)
    };
    AdmissibilityReport {
        window: window.to_string(),
        a: g.a,
        b: g.b,
        admissible: exponent_condition && numerically_convergent,
        exponent_condition,
        numerically_convergent,
        integral_estimate,
        doubling_change,
        tail_slope,
        tail_slope_tau1,
        tail_slope_tau2,
        log_shells: shells,
    }
}

/// Decides whether `(window, gamma)` is an admissible pair by integrating
/// `mu^2 (gamma * R gamma)` over the nested boxes [`SHELL_RADII`].
///
/// The pair is admissible iff the growth exponents of `mu` are dominated
/// (`a > 2 * time_rate`, `b > 2 * freq_rate`) and the shell integrals decay.
/// For ExpExp this means `a > 2` and `b > 2 pi^2`.
pub fn check_admissibility(window: &WindowSpec, g: &GammaWeight) -> Result<AdmissibilityReport> {
    let mu = ControlFunction::for_window(window)?;
    Ok(check_admissibility_with(&mu, g, window.name()))
}

/// `( \int mu^2 (gamma * R gamma) )^{1/2}` over boxes doubled from `[-24, 24]^2`
/// until the relative change of the integral drops below `1e-4`.
pub fn slpr_constant(window: &WindowSpec, g: &GammaWeight) -> Result<f64> {
    slpr_constant_with(&ControlFunction::for_window(window)?, g, window.name())
}

/// [`slpr_constant`] for an explicit control function.
pub fn slpr_constant_with(mu: &ControlFunction, g: &GammaWeight, window: &str) -> Result<f64> {
    let report = check_admissibility_with(mu, g, window);
    if !report.admissible {
        return Err(Error::NotAdmissible(format!(
            "{window} with a = {}, b = {} (tail slope {:.3e})",
            g.a, g.b, report.tail_slope
        )));
    }
    let (f1, f2) = factors(mu, g);
    let r1 = (g.a - 2.0 * mu.time_rate).max(1.0);
    let r2 = (g.b - 2.0 * mu.freq_rate).max(1.0);
    let mut r = 24.0;
    let mut l1 = log_sym(&f1, 0.0, r, r1);
    let mut l2 = log_sym(&f2, 0.0, r, r2);
    let mut prev = (l1 + l2).exp();
    for _ in 0..12 {
        l1 = log_add(l1, log_sym(&f1, r, 2.0 * r, r1));
        l2 = log_add(l2, log_sym(&f2, r, 2.0 * r, r2));
        r *= 2.0;
        let cur = (l1 + l2).exp();
        if (cur - prev).abs() < 1e-4 * cur {
            return Ok(mu.c_norm * cur.sqrt());
        }
        prev = cur;
    }
    Err(Error::NoConvergence { iterations: 12, residual: f64::NAN })
}
