use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use super::{same_spacing, Field2D, Grid2D, RealField2D, Signal1D};
use crate::{Error, Result};

/// Below this many frequency nodes the STFT is evaluated by direct summation.
pub const DIRECT_THRESHOLD: usize = 64;

/// Upper bound on the spacing of the zero-padded FFT bins before interpolating
/// onto the grid. The actual bound is `min(BIN_SPACING, dt / 4)`, so refining
/// the sampling also refines the frequency interpolation.
const BIN_SPACING: f64 = 1.0 / 256.0;

/// `|g|^2`-weighted mean time of a window.
pub fn window_centroid(g: &Signal1D) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (k, z) in g.samples.iter().enumerate() {
        let p = z.norm_sqr();
        num += p * g.time(k);
        den += p;
    }
    if den > 0.0 {
        num / den
    } else {
        0.5 * (g.t0 + g.t_end())
    }
}

fn check_inputs(f: &Signal1D, g: &Signal1D, grid: &Grid2D) -> Result<()> {
    if !same_spacing(f.dt, g.dt) {
        return Err(Error::IncompatibleSpacing(f.dt, g.dt));
    }
    let nyquist = 0.5 / f.dt;
    let top = grid.xi_min.abs().max(grid.xi_max.abs());
    if top > nyquist * (1.0 + 1e-12) {
        return Err(Error::ExceedsNyquist { requested: top, nyquist });
    }
    Ok(())
}

/// Products `f_k conj(g(t_k - x))` for one time slice, with the index of the
/// first entry. Non-lattice shifts interpolate the window linearly.
fn slice_product(f: &Signal1D, g: &Signal1D, x: f64) -> (usize, Vec<Complex64>) {
    let r = (f.t0 - x - g.t0) / f.dt;
    let rr = r.round();
    let nf = f.len() as i64;
    let ng = g.len() as i64;
    if (r - rr).abs() < 1e-6 {
        let m = rr as i64;
        let lo = 0.max(-m);
        let hi = nf.min(ng - m);
        if hi <= lo {
            return (0, Vec::new());
        }
        let prod = (lo..hi)
            .map(|k| f.samples[k as usize] * g.samples[(k + m) as usize].conj())
            .collect();
        (lo as usize, prod)
    } else {
        let m = r.floor() as i64;
        let th = r - r.floor();
        let lo = 0.max(-m - 1);
        let hi = nf.min(ng - m);
        if hi <= lo {
            return (0, Vec::new());
        }
        let gv = |j: i64| {
            if j >= 0 && j < ng {
                g.samples[j as usize]
            } else {
                Complex64::new(0.0, 0.0)
            }
        };
        let prod = (lo..hi)
            .map(|k| {
                let gi = gv(k + m) * (1.0 - th) + gv(k + m + 1) * th;
                f.samples[k as usize] * gi.conj()
            })
            .collect();
        (lo as usize, prod)
    }
}

/// Index of the `|h|^2`-weighted centre of a slice product; demodulating
/// around it keeps the transform slowly varying in frequency, which is what
/// makes linear interpolation between FFT bins accurate.
fn product_centre(lo: usize, prod: &[Complex64]) -> Option<i64> {
    let (mut num, mut den) = (0.0, 0.0);
    for (k, z) in prod.iter().enumerate() {
        let p = z.norm_sqr();
        num += p * k as f64;
        den += p;
    }
    (den > 0.0).then(|| lo as i64 + (num / den).round() as i64)
}

/// `V_g f(x_i, xi_j) ~ sum_k f(t_k) conj(g(t_k - x_i)) e^{-2 pi i xi_j t_k} dt`.
///
/// Each time slice is transformed with a zero-padded FFT, demodulated around
/// the energy centre of the slice, and linearly interpolated onto the grid frequencies.
/// Grids with fewer than [`DIRECT_THRESHOLD`] frequency nodes are summed
/// directly instead.
pub fn stft(f: &Signal1D, g: &Signal1D, grid: &Grid2D) -> Result<Field2D> {
    check_inputs(f, g, grid)?;
    if grid.nxi < DIRECT_THRESHOLD {
        return stft_direct(f, g, grid);
    }
    let dt = f.dt;
    let centroid = window_centroid(g);
    let support = f.len().min(g.len() + 1);
    let min_len = (1.0 / (dt * BIN_SPACING.min(0.25 * dt))).ceil() as usize;
    let n_fft = (2 * support).max(min_len).next_power_of_two();
    let fft: Arc<dyn Fft<f64>> = FftPlanner::new().plan_fft_forward(n_fft);

    let rows: Vec<Vec<Complex64>> = (0..grid.nx)
        .into_par_iter()
        .map(|i| {
            let x = grid.x(i);
            let (lo, prod) = slice_product(f, g, x);
            let mut out = vec![Complex64::new(0.0, 0.0); grid.nxi];
            if prod.is_empty() {
                return out;
            }
            let kc = product_centre(lo, &prod).unwrap_or_else(|| ((x + centroid - f.t0) / dt).round() as i64);
            let mut buf = vec![Complex64::new(0.0, 0.0); n_fft];
            for (off, z) in prod.iter().enumerate() {
                let pos = (lo as i64 + off as i64 - kc).rem_euclid(n_fft as i64) as usize;
                buf[pos] = *z;
            }
            fft.process(&mut buf);
            let tc = f.t0 + kc as f64 * dt;
            for (j, o) in out.iter_mut().enumerate() {
                let xi = grid.xi(j);
                let p = xi * n_fft as f64 * dt;
                let m0 = p.floor();
                let frac = p - m0;
                let a = buf[(m0 as i64).rem_euclid(n_fft as i64) as usize];
                let b = buf[(m0 as i64 + 1).rem_euclid(n_fft as i64) as usize];
                let d = a * (1.0 - frac) + b * frac;
                *o = d * Complex64::from_polar(dt, -2.0 * PI * xi * tc);
            }
            out
        })
        .collect();
    Field2D::new(*grid, rows.into_iter().flatten().collect())
}

/// Direct-summation STFT; the correctness reference for [`stft`].
pub fn stft_direct(f: &Signal1D, g: &Signal1D, grid: &Grid2D) -> Result<Field2D> {
    check_inputs(f, g, grid)?;
    let dt = f.dt;
    let centroid = window_centroid(g);
    let rows: Vec<Vec<Complex64>> = (0..grid.nx)
        .into_par_iter()
        .map(|i| {
            let x = grid.x(i);
            let (lo, prod) = slice_product(f, g, x);
            let kc = ((x + centroid - f.t0) / dt).round() as i64;
            let tc = f.t0 + kc as f64 * dt;
            (0..grid.nxi)
                .map(|j| {
                    let xi = grid.xi(j);
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (off, z) in prod.iter().enumerate() {
                        let s = (lo as i64 + off as i64 - kc) as f64 * dt;
                        acc += z * Complex64::from_polar(1.0, -2.0 * PI * xi * s);
                    }
                    acc * Complex64::from_polar(dt, -2.0 * PI * xi * tc)
                })
                .collect()
        })
        .collect();
    Field2D::new(*grid, rows.into_iter().flatten().collect())
}

/// `|V_g f|` on the grid.
pub fn spectrogram(f: &Signal1D, g: &Signal1D, grid: &Grid2D) -> Result<RealField2D> {
    Ok(stft(f, g, grid)?.modulus())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tfcore::{ambiguity_modulus, make_window, WindowSpec};

    fn sampled(spec: &WindowSpec, dt: f64) -> Signal1D {
        let n = (64.0 / dt).round() as usize + 1;
        make_window(spec, n, dt, -32.0).unwrap()
    }

    #[test]
    fn gaussian_self_stft_at_origin() {
        let g = sampled(&WindowSpec::gaussian(), 1.0 / 64.0);
        let grid = Grid2D::symmetric(1.0, 3).unwrap();
        let v = stft(&g, &g, &grid).unwrap().at(1, 1).norm();
        let want = 0.5f64.sqrt();
        assert!((v - want).abs() / want < 1e-6, "{v}");
    }

    #[test]
    fn onesided_self_stft_at_origin() {
        // the jump contributes a first-order Riemann bias of about dt / 4
        let grid = Grid2D::symmetric(1.0, 3).unwrap();
        let err = |dt: f64| {
            let g = sampled(&WindowSpec::OneSidedExp, dt);
            (stft(&g, &g, &grid).unwrap().at(1, 1).norm() - 0.5).abs()
        };
        let (coarse, fine) = (err(1.0 / 64.0), err(1.0 / 128.0));
        assert!(coarse <= 0.5 / 64.0, "{coarse}");
        assert!(fine < 0.6 * coarse, "{fine} vs {coarse}");
    }

    #[test]
    fn zero_signal_gives_zero_field() {
        let g = sampled(&WindowSpec::ExpExp, 1.0 / 32.0);
        let f = Signal1D::zeros(g.len(), g.dt, g.t0).unwrap();
        let grid = Grid2D::symmetric(2.0, 65).unwrap();
        assert!(stft(&f, &g, &grid).unwrap().values.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn fft_path_matches_direct_path() {
        let g = sampled(&WindowSpec::ExpExp, 1.0 / 32.0);
        let f = Signal1D::from_fn(g.len(), g.dt, g.t0, |t| {
            Complex64::from_polar((-PI * (t - 0.7).powi(2)).exp(), 3.0 * t)
        })
        .unwrap();
        let grid = Grid2D::new(-2.0, 2.0, 9, -3.0, 3.0, 64).unwrap();
        let a = stft(&f, &g, &grid).unwrap();
        let b = stft_direct(&f, &g, &grid).unwrap();
        let scale = b.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let err = a.values.iter().zip(&b.values).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
        assert!(err / scale < 1e-4, "{}", err / scale);
    }

    #[test]
    fn expexp_frequency_axis_matches_closed_form() {
        let g = sampled(&WindowSpec::ExpExp, 1.0 / 64.0);
        let grid = Grid2D::new(-1.0, 1.0, 3, -3.0, 3.0, 121).unwrap();
        let v = stft(&g, &g, &grid).unwrap();
        for j in 0..grid.nxi {
            let want = ambiguity_modulus(&WindowSpec::ExpExp, 0.0, grid.xi(j)).unwrap();
            let got = v.at(1, j).norm();
            assert!((got - want).abs() / want <= 1e-3, "xi={} got {got} want {want}", grid.xi(j));
        }
    }

    #[test]
    fn nyquist_and_spacing_are_checked() {
        let g = sampled(&WindowSpec::ExpExp, 0.25);
        let grid = Grid2D::symmetric(4.0, 9).unwrap();
        assert!(matches!(stft(&g, &g, &grid), Err(Error::ExceedsNyquist { .. })));
        let h = sampled(&WindowSpec::ExpExp, 0.125);
        let ok = Grid2D::symmetric(1.0, 9).unwrap();
        assert!(matches!(stft(&g, &h, &ok), Err(Error::IncompatibleSpacing(..))));
    }
}
