//! Lemma-level checks: each evaluates both sides of one inequality or
//! identity on concrete data.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::norms::{inf_complex_scale, mixed_norm, mixed_norm_real, phase_aligned_distance, ChiWeight, NormKind};
use crate::tfcore::{stft, Field2D, Grid2D, RealField2D, Signal1D, WindowSpec};
use crate::weights::{slpr_constant, ControlFunction, GammaWeight};
use crate::{Complex64, Error, Result};

/// Identities and inequality for a pair of vectors `phi, psi`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hilbert2Report {
    /// `||phi||^2`.
    pub a: f64,
    /// `||psi||^2`.
    pub b: f64,
    /// `|<psi, phi>|`.
    pub c: f64,
    /// `min_{|lambda| = 1} ||psi - lambda phi||^2`, evaluated directly.
    pub min_distance_sq: f64,
    /// `||psi (x) conj(psi) - phi (x) conj(phi)||^2`, summed entrywise.
    pub tensor_distance_sq: f64,
    /// `|min_distance_sq - (a + b - 2c)| / (a + b)`.
    pub distance_error: f64,
    /// `|tensor_distance_sq - (a^2 + b^2 - 2c^2)| / (a^2 + b^2)`.
    pub tensor_error: f64,
    /// `(a + b)/2 * (a + b - 2c)`.
    pub inequality_lhs: f64,
    /// `a^2 + b^2 - 2c^2`.
    pub inequality_rhs: f64,
}

impl Hilbert2Report {
    /// The inequality with an allowance of a few ulps of `(a + b)^2`.
    pub fn inequality_holds(&self) -> bool {
        let slack = 8.0 * f64::EPSILON * (self.a + self.b).powi(2);
        self.inequality_lhs <= self.inequality_rhs + slack
    }
}

fn dot(psi: &[Complex64], phi: &[Complex64]) -> Complex64 {
    psi.iter().zip(phi).map(|(x, y)| x * y.conj()).sum()
}

/// Both sides of the finite-dimensional lifting identities.
pub fn check_hilbert2(phi: &[Complex64], psi: &[Complex64]) -> Result<Hilbert2Report> {
    if phi.len() != psi.len() {
        return Err(Error::param("psi", format!("length {} differs from {}", psi.len(), phi.len())));
    }
    if phi.is_empty() {
        return Err(Error::Empty("vectors have no entries"));
    }
    let a = dot(phi, phi).re;
    let b = dot(psi, psi).re;
    let pair = dot(psi, phi);
    let c = pair.norm();
    let lambda = if c > 0.0 { pair / c } else { Complex64::new(1.0, 0.0) };
    let min_distance_sq: f64 = psi.iter().zip(phi).map(|(x, y)| (x - lambda * y).norm_sqr()).sum();
    let tensor_distance_sq: f64 = (0..phi.len())
        .map(|i| (0..phi.len()).map(|j| (psi[i] * psi[j].conj() - phi[i] * phi[j].conj()).norm_sqr()).sum::<f64>())
        .sum();
    let scale1 = (a + b).max(f64::MIN_POSITIVE);
    let scale2 = (a * a + b * b).max(f64::MIN_POSITIVE);
    Ok(Hilbert2Report {
        a,
        b,
        c,
        min_distance_sq,
        tensor_distance_sq,
        distance_error: (min_distance_sq - (a + b - 2.0 * c)).abs() / scale1,
        tensor_error: (tensor_distance_sq - (a * a + b * b - 2.0 * c * c)).abs() / scale2,
        inequality_lhs: 0.5 * (a + b) * (a + b - 2.0 * c),
        inequality_rhs: a * a + b * b - 2.0 * c * c,
    })
}

/// Aggregate of [`check_hilbert2`] over random pairs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hilbert2Suite {
    pub cases: usize,
    pub worst_distance_error: f64,
    pub worst_tensor_error: f64,
    pub violations: usize,
}

/// `cases` random complex pairs with lengths in `4..=256`; a third of them
/// are nearly parallel, where the identities suffer the worst cancellation.
pub fn hilbert2_suite(rng: &mut impl Rng, cases: usize) -> Result<Hilbert2Suite> {
    let mut out = Hilbert2Suite { cases, worst_distance_error: 0.0, worst_tensor_error: 0.0, violations: 0 };
    for k in 0..cases {
        let n = rng.random_range(4..=256);
        let draw = |rng: &mut dyn rand::RngCore| -> Vec<Complex64> {
            (0..n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
        };
        let phi = draw(rng);
        let psi = if k % 3 == 0 {
            let phase = Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
            let noise = draw(rng);
            phi.iter().zip(noise).map(|(p, e)| p * phase + e * 1e-3).collect()
        } else {
            draw(rng)
        };
        let r = check_hilbert2(&phi, &psi)?;
        out.worst_distance_error = out.worst_distance_error.max(r.distance_error);
        out.worst_tensor_error = out.worst_tensor_error.max(r.tensor_error);
        if !r.inequality_holds() {
            out.violations += 1;
        }
    }
    Ok(out)
}

/// Grid offsets `(p, q)` nearest to `tau`, and the distance to it.
pub fn snap_shift(grid: &Grid2D, tau: (f64, f64)) -> ((i64, i64), (f64, f64), f64) {
    let p = (tau.0 / grid.hx()).round() as i64;
    let q = (tau.1 / grid.hxi()).round() as i64;
    let used = (p as f64 * grid.hx(), q as f64 * grid.hxi());
    ((p, q), used, ((used.0 - tau.0).powi(2) + (used.1 - tau.1).powi(2)).sqrt())
}

/// `sum_z term(z, z + tau) hx hxi` over nodes `z` with `z + tau` on the grid.
fn shifted_sum(grid: &Grid2D, (p, q): (i64, i64), term: impl Fn(usize, usize) -> f64 + Sync) -> f64 {
    let (nx, nxi) = (grid.nx as i64, grid.nxi as i64);
    let rows: Vec<f64> = (0.max(-p)..nx.min(nx - p))
        .into_par_iter()
        .map(|i| {
            let mut s = 0.0;
            for j in 0.max(-q)..nxi.min(nxi - q) {
                s += term(grid.index(i as usize, j as usize), grid.index((i + p) as usize, (j + q) as usize));
            }
            s
        })
        .collect();
    rows.iter().sum::<f64>() * grid.hx() * grid.hxi()
}

/// Both sides of the shifted Moyal identity
/// `||F F(.+tau)^* - H H(.+tau)^*|| = ||(V_f f - V_h h) V_g g(. + tau)||`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanchshiftReport {
    pub tau_requested: (f64, f64),
    pub tau_used: (f64, f64),
    pub snap_distance: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// `|lhs - rhs| / max(lhs, rhs)`; zero when both vanish.
    pub relative_difference: f64,
}

/// The five transforms needed by [`check_planchshift`], computed once per
/// signal pair and reused across shifts.
pub struct PlanchshiftFields {
    pub f: Field2D,
    pub h: Field2D,
    pub vff: Field2D,
    pub vhh: Field2D,
    pub vgg: Field2D,
}

impl PlanchshiftFields {
    pub fn new(f: &Signal1D, g: &Signal1D, h: &Signal1D, grid: &Grid2D) -> Result<Self> {
        Ok(Self {
            f: stft(f, g, grid)?,
            h: stft(h, g, grid)?,
            vff: stft(f, f, grid)?,
            vhh: stft(h, h, grid)?,
            vgg: stft(g, g, grid)?,
        })
    }

    pub fn check(&self, tau: (f64, f64)) -> PlanchshiftReport {
        let grid = self.f.grid;
        let (pq, used, dist) = snap_shift(&grid, tau);
        let (f, h, vff, vhh, vgg) = (&self.f.values, &self.h.values, &self.vff.values, &self.vhh.values, &self.vgg.values);
        let lhs = shifted_sum(&grid, pq, |k, l| (f[k] * f[l].conj() - h[k] * h[l].conj()).norm_sqr()).sqrt();
        let rhs = shifted_sum(&grid, pq, |k, l| (vff[k] - vhh[k]).norm_sqr() * vgg[l].norm_sqr()).sqrt();
        let top = lhs.max(rhs);
        PlanchshiftReport {
            tau_requested: tau,
            tau_used: used,
            snap_distance: dist,
            lhs,
            rhs,
            relative_difference: if top > 0.0 { (lhs - rhs).abs() / top } else { 0.0 },
        }
    }
}

pub fn check_planchshift(f: &Signal1D, g: &Signal1D, h: &Signal1D, tau: (f64, f64), grid: &Grid2D) -> Result<PlanchshiftReport> {
    Ok(PlanchshiftFields::new(f, g, h, grid)?.check(tau))
}

/// Per-shift slice bound and integrated lifted bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlprReport {
    /// `int int |F(z) F(z+tau)^* - H(z) H(z+tau)^*|^2 dz (gamma * R gamma)(tau) dtau`
    /// over the sampled shift box.
    pub lhs: f64,
    /// `K^2 || |F|^2 - |H|^2 ||^2` with `K` the lifted stability constant.
    pub rhs: f64,
    pub constant: f64,
    /// `|| |F|^2 - |H|^2 ||`.
    pub base: f64,
    /// Largest `slice(tau) / (mu(tau) base)` over the sampled shifts.
    pub worst_slice_ratio: f64,
    pub worst_tau: (f64, f64),
    pub shifts: usize,
    pub slice_tol: f64,
    pub slices_hold: bool,
    pub holds: bool,
}

/// Relative slack allowed in the per-shift comparison: the slice is computed
/// from products of two discretized transforms, which agree with the exact
/// identity only to the discretization accuracy of the transform.
pub const SLICE_TOL: f64 = 1e-3;

/// Evaluates the lifted stability bound for `F = V_g f`, `H = V_g h` on a box
/// `|tau_i| <= tau_radius` of grid shifts, sampled every `stride` cells.
pub fn check_slpr_bound(
    f: &Signal1D,
    h: &Signal1D,
    g: &Signal1D,
    window: &WindowSpec,
    gamma: &GammaWeight,
    grid: &Grid2D,
    tau_radius: f64,
    stride: usize,
) -> Result<SlprReport> {
    let constant = slpr_constant(window, gamma)?;
    let mu = ControlFunction::for_window(window)?;
    let stride = stride.max(1) as i64;
    let ff = stft(f, g, grid)?;
    let hh = stft(h, g, grid)?;
    let (fv, hv) = (&ff.values, &hh.values);
    let base = shifted_sum(grid, (0, 0), |k, _| (fv[k].norm_sqr() - hv[k].norm_sqr()).powi(2)).sqrt();
    let pmax = (tau_radius / grid.hx()).floor() as i64 / stride * stride;
    let qmax = (tau_radius / grid.hxi()).floor() as i64 / stride * stride;
    let shifts: Vec<(i64, i64)> = (-pmax..=pmax)
        .step_by(stride as usize)
        .flat_map(|p| (-qmax..=qmax).step_by(stride as usize).map(move |q| (p, q)))
        .collect();
    let cell = (stride as f64 * grid.hx()) * (stride as f64 * grid.hxi());
    let mut rep = SlprReport {
        lhs: 0.0,
        rhs: constant * constant * base * base,
        constant,
        base,
        worst_slice_ratio: 0.0,
        worst_tau: (0.0, 0.0),
        shifts: shifts.len(),
        slice_tol: SLICE_TOL,
        slices_hold: true,
        holds: true,
    };
    for (p, q) in shifts {
        let tau = (p as f64 * grid.hx(), q as f64 * grid.hxi());
        let slice_sq =
            shifted_sum(grid, (p, q), |k, l| (fv[k] * fv[l].conj() - hv[k] * hv[l].conj()).norm_sqr());
        let slice = slice_sq.sqrt();
        let allowed = mu.eval(tau.0, tau.1) * base;
        let ratio = if allowed > 0.0 { slice / allowed } else if slice > 0.0 { f64::INFINITY } else { 0.0 };
        if ratio > rep.worst_slice_ratio {
            rep.worst_slice_ratio = ratio;
            rep.worst_tau = tau;
        }
        rep.lhs += slice_sq * gamma.autocorr(tau.0, tau.1) * cell;
    }
    rep.slices_hold = rep.worst_slice_ratio <= 1.0 + SLICE_TOL;
    rep.holds = rep.lhs <= rep.rhs;
    Ok(rep)
}

/// Both sides of `inf_lambda ||H - lambda F|| <= 2 inf_c ||H - c F|| + || |H| - |F| ||`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintReport {
    pub unimodular: f64,
    pub complex: f64,
    pub complex_minimizer: Complex64,
    pub phaseless: f64,
    pub holds: bool,
}

/// Relative allowance for the two inner optimizations.
pub const OPTIMIZER_TOL: f64 = 1e-9;

pub fn check_constraint_replacement(f: &Field2D, h: &Field2D, chi: &ChiWeight) -> Result<ConstraintReport> {
    f.grid.check_same(&h.grid)?;
    let unimodular = phase_aligned_distance(f, h, chi, NormKind::Mixed)?.value;
    let (c, complex) = inf_complex_scale(f, h, chi)?;
    let diff = RealField2D {
        grid: f.grid,
        values: f.values.iter().zip(&h.values).map(|(a, b)| b.norm() - a.norm()).collect(),
    };
    let phaseless = mixed_norm_real(&diff, chi)?;
    let rhs = 2.0 * complex + phaseless;
    let scale = mixed_norm(f, chi)?.max(mixed_norm(h, chi)?);
    Ok(ConstraintReport {
        unimodular,
        complex,
        complex_minimizer: c,
        phaseless,
        holds: unimodular <= rhs + OPTIMIZER_TOL * scale,
    })
}

/// The finiteness chain for an indicator weight `chi = 1_K`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompactReport {
    /// The rectangle `Omega`: `K` enlarged by one unit, clipped to the grid.
    pub omega: (f64, f64, f64, f64),
    pub w_sup: f64,
    pub w_inf: f64,
    /// `C_P(1_Omega)` of the discretized rectangle.
    pub cp_omega: f64,
    /// `(sup w / inf w) C_P(1_Omega)`, the proof's bound on `C_P(w chi, w)`.
    pub cp_bound: f64,
    /// Direct estimate of `C_P(w chi, w)`.
    pub cp_direct: f64,
    /// `c_emp (1 + cp_bound)^{1/4}`.
    pub lipschitz: f64,
    /// `(lhs, d)` for every perturbation.
    pub cases: Vec<(f64, f64)>,
    pub holds: bool,
}

/// Zero-signal case: `||H||_L^4 <= |B_1|^2 d(0, |H|)^4`, with the area of
/// the discrete disk.
pub fn zero_signal_bound(h: &Field2D) -> Result<(f64, f64)> {
    let lhs = mixed_norm(h, &ChiWeight::Unit)?.powi(4);
    let disk = crate::norms::DiskStencil::new(&h.grid);
    let d4: f64 = h.values.iter().map(|z| z.norm_sqr().powi(2)).sum::<f64>() * h.grid.hx() * h.grid.hxi();
    Ok((lhs, disk.area * disk.area * d4))
}

/// Checks the compact-set corollary for `F = V_g f` against perturbed `H`,
/// using the empirical constant `c_emp` of the main inequality.
pub fn check_compact_corollary(
    f: &Field2D,
    perturbations: &[Field2D],
    gamma: &GammaWeight,
    k: (f64, f64, f64, f64),
    c_emp: f64,
) -> Result<CompactReport> {
    use crate::poincare::{estimate_poincare, weight_from_spectrogram, WeightPair};
    let grid = f.grid;
    let (x0, x1, y0, y1) = k;
    if !(x0 < x1 && y0 < y1) || !grid.contains(x0, y0) || !grid.contains(x1, y1) {
        return Err(Error::OutsideGrid(format!("rectangle {k:?}")));
    }
    let omega = ((x0 - 1.0).max(grid.x_min), (x1 + 1.0).min(grid.x_max), (y0 - 1.0).max(grid.xi_min), (y1 + 1.0).min(grid.xi_max));
    let w = weight_from_spectrogram(f, gamma)?;
    let inside = |x: f64, y: f64| x >= omega.0 - 1e-12 && x <= omega.1 + 1e-12 && y >= omega.2 - 1e-12 && y <= omega.3 + 1e-12;
    let (mut sup, mut inf) = (0.0f64, f64::INFINITY);
    let (mut ilo, mut ihi, mut jlo, mut jhi) = (usize::MAX, 0, usize::MAX, 0);
    for i in 0..grid.nx {
        for j in 0..grid.nxi {
            if inside(grid.x(i), grid.xi(j)) {
                let v = w.at(i, j);
                sup = sup.max(v);
                inf = inf.min(v);
                (ilo, ihi, jlo, jhi) = (ilo.min(i), ihi.max(i), jlo.min(j), jhi.max(j));
            }
        }
    }
    if !(inf > 0.0) {
        return Err(Error::Degenerate("weight vanishes on Omega".into()));
    }
    let sub = Grid2D::new(grid.x(ilo), grid.x(ihi), ihi - ilo + 1, grid.xi(jlo), grid.xi(jhi), jhi - jlo + 1)?;
    let ones = RealField2D::from_fn(sub, |_, _| 1.0);
    let cp_omega = estimate_poincare(&WeightPair::from_fields(&ones, &ones)?)?.c_p;
    let cp_bound = sup / inf * cp_omega;
    let chi = ChiWeight::CompactIndicator { x_min: x0, x_max: x1, xi_min: y0, xi_max: y1 };
    let v = RealField2D { grid, values: w.values.iter().zip(chi.values_on(&grid)?).map(|(a, b)| a * b).collect() };
    let cp_direct = estimate_poincare(&WeightPair::from_fields(&v, &w)?)?.c_p;
    let lipschitz = c_emp * (1.0 + cp_bound).powf(0.25);
    let mut cases = Vec::with_capacity(perturbations.len());
    let mut holds = cp_direct <= cp_bound * (1.0 + 1e-9);
    for h in perturbations {
        let lhs = phase_aligned_distance(f, h, &chi, NormKind::Mixed)?.value;
        let d = crate::norms::metric_d(&f.modulus(), &h.modulus())?;
        holds &= lhs <= lipschitz * d;
        cases.push((lhs, d));
    }
    Ok(CompactReport { omega, w_sup: sup, w_inf: inf, cp_omega, cp_bound, cp_direct, lipschitz, cases, holds })
}
