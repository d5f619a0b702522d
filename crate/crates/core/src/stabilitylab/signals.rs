//! Test-signal generators: base signals, band-limited noise and
//! multi-component instability pairs.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::tfcore::{make_window, Signal1D, WindowSpec};
use crate::{Complex64, Error, Result};

/// Half-width of the time interval on which experiment signals are sampled.
pub const SIGNAL_HALF_WIDTH: f64 = 32.0;

/// Sampling lattice `t_k = (k - k0) dt` covering `[-SIGNAL_HALF_WIDTH, SIGNAL_HALF_WIDTH]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    pub dt: f64,
    pub k0: usize,
}

impl Lattice {
    pub fn new(dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::param("dt", format!("must be positive, got {dt}")));
        }
        Ok(Self { dt, k0: (SIGNAL_HALF_WIDTH / dt).ceil() as usize })
    }

    pub fn len(&self) -> usize {
        2 * self.k0 + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn t0(&self) -> f64 {
        -(self.k0 as f64) * self.dt
    }

    pub fn t_max(&self) -> f64 {
        self.k0 as f64 * self.dt
    }

    pub fn signal(&self, f: impl Fn(f64) -> Complex64) -> Result<Signal1D> {
        Signal1D::from_fn(self.len(), self.dt, self.t0(), f)
    }

    pub fn window(&self, spec: &WindowSpec) -> Result<Signal1D> {
        make_window(spec, self.len(), self.dt, self.t0())
    }
}

/// Named deterministic base signals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BaseSignal {
    /// The analysis window itself.
    Window,
    /// Two modulated Gaussian atoms with different widths.
    #[default]
    TwoTone,
}

pub fn base_signal(kind: BaseSignal, window: &WindowSpec, lat: &Lattice) -> Result<Signal1D> {
    match kind {
        BaseSignal::Window => lat.window(window),
        BaseSignal::TwoTone => lat.signal(|t| {
            let a = (-PI * (t - 0.5).powi(2) / 2.0).exp();
            let b = (-PI * (t - 2.0).powi(2)).exp();
            Complex64::new(a, 0.0) + Complex64::from_polar(0.6 * b, 2.0 * PI * 1.25 * t)
        }),
    }
}

/// Standard deviation (in time units) of the Gaussian smoothing applied to
/// white noise.
pub const NOISE_CORRELATION: f64 = 0.25;

/// Width of the Gaussian envelope that keeps the noise square integrable.
pub const NOISE_ENVELOPE: f64 = 6.0;

/// Seeded smooth complex noise of unit `L2` norm on the lattice.
///
/// White complex Gaussian samples are smoothed with a Gaussian kernel of
/// standard deviation [`NOISE_CORRELATION`] and multiplied by
/// `exp(-pi (t / NOISE_ENVELOPE)^2)`.
pub fn smooth_noise(lat: &Lattice, seed: u64) -> Result<Signal1D> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = lat.len();
    let white: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
        .collect();
    let sigma = NOISE_CORRELATION / lat.dt;
    let radius = (4.0 * sigma).ceil() as usize;
    let kernel: Vec<f64> = (0..=radius).map(|m| (-0.5 * (m as f64 / sigma).powi(2)).exp()).collect();
    let samples: Vec<Complex64> = (0..n)
        .map(|k| {
            let mut acc = white[k] * kernel[0];
            for (m, w) in kernel.iter().enumerate().skip(1) {
                if k >= m {
                    acc += white[k - m] * w;
                }
                if k + m < n {
                    acc += white[k + m] * w;
                }
            }
            let t = lat.t0() + k as f64 * lat.dt;
            acc * (-PI * (t / NOISE_ENVELOPE).powi(2)).exp()
        })
        .collect();
    let noise = Signal1D::new(samples, lat.dt, lat.t0())?;
    let norm = noise.norm();
    Ok(noise.scaled(Complex64::new(1.0 / norm, 0.0)))
}

/// Seeded sum of `atoms` modulated Gaussians with centres in `[-3, 3]`,
/// frequencies in `[-3, 3]`, widths in `[0.5, 2]` and complex amplitudes.
pub fn gaussian_atoms(lat: &Lattice, atoms: usize, seed: u64) -> Result<Signal1D> {
    if atoms == 0 {
        return Err(Error::Empty("atoms"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params: Vec<(f64, f64, f64, Complex64)> = (0..atoms)
        .map(|_| {
            let c = rng.random_range(-3.0..3.0);
            let xi = rng.random_range(-3.0..3.0);
            let width = rng.random_range(0.5..2.0);
            let amp = Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
            (c, xi, width, amp)
        })
        .collect();
    lat.signal(|t| {
        params
            .iter()
            .map(|&(c, xi, width, amp)| {
                amp * (-PI * ((t - c) / width).powi(2)).exp() * Complex64::from_polar(1.0, 2.0 * PI * xi * t)
            })
            .sum()
    })
}

/// Direction in which the second component of an instability pair is moved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftKind {
    /// `g(t - s)`.
    TimeShift,
    /// `e^{2 pi i s t} g(t)`.
    FreqShift,
    /// `e^{2 pi i s t} g(t - s)`.
    Diagonal,
}

/// `f_+ = g + m(g)` and `f_- = g - m(g)`, where `m` shifts by `s` in the
/// chosen direction. Their spectrograms nearly coincide once the two
/// components separate, while no global phase relates the signals.
pub fn make_instability_pair(
    window: &WindowSpec,
    s: f64,
    kind: ShiftKind,
    lat: &Lattice,
) -> Result<(Signal1D, Signal1D)> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::param("s", format!("separation must be nonnegative, got {s}")));
    }
    let time = matches!(kind, ShiftKind::TimeShift | ShiftKind::Diagonal);
    if time && s > 0.5 * lat.t_max() {
        return Err(Error::param("s", format!("separation {s} leaves the sampled interval")));
    }
    if !time && s > 0.25 / lat.dt {
        return Err(Error::param("s", format!("frequency shift {s} exceeds half the Nyquist limit")));
    }
    let g = lat.window(window)?;
    let m: Vec<Complex64> = (0..g.len())
        .map(|k| {
            let t = g.time(k);
            let base = if time { shifted_value(window, &g, t - s) } else { g.samples[k] };
            if kind == ShiftKind::TimeShift {
                base
            } else {
                base * Complex64::from_polar(1.0, 2.0 * PI * s * t)
            }
        })
        .collect();
    let plus = Signal1D::new(g.samples.iter().zip(&m).map(|(a, b)| a + b).collect(), g.dt, g.t0)?;
    let minus = Signal1D::new(g.samples.iter().zip(&m).map(|(a, b)| a - b).collect(), g.dt, g.t0)?;
    Ok((plus, minus))
}

/// Window value at `t`: closed form when available, otherwise interpolated.
fn shifted_value(window: &WindowSpec, g: &Signal1D, t: f64) -> Complex64 {
    // snap to the lattice so that closed-form windows reproduce their samples
    let k = ((t - g.t0) / g.dt).round();
    let t = if ((t - g.t0) / g.dt - k).abs() < 1e-9 { g.t0 + k * g.dt } else { t };
    let t = if t.abs() < 1e-9 * g.dt { 0.0 } else { t };
    match window.eval(t) {
        Some(v) => Complex64::new(v, 0.0),
        None => g.interpolate(t),
    }
}
