//! Sampled signals, the Fourier transform, the STFT and closed-form
//! ambiguity moduli of the supported windows.
//!
//! All quadrature is a plain Riemann sum with the sample spacing `dt` as the
//! measure. Signals are truncated to their sampled support; outside it they
//! are zero.

mod agreement;
mod ambiguity;
mod grid;
mod stft;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::{Error, Result};

pub use agreement::{closed_form_agreement, AgreementReport, SIGNIFICANT_FRACTION};
pub use ambiguity::{
    ambiguity_modulus, gamma2_modulus, gamma2_modulus_sq, log_ambiguity_modulus, log_sinh,
};
pub use grid::{Field2D, Grid2D, RealField2D};
pub use stft::{spectrogram, stft, stft_direct, window_centroid, DIRECT_THRESHOLD};

/// Uniformly sampled complex signal: `samples[k]` is the value at `t0 + k * dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal1D {
    pub samples: Vec<Complex64>,
    pub dt: f64,
    pub t0: f64,
}

impl Signal1D {
    pub fn new(samples: Vec<Complex64>, dt: f64, t0: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Empty("signal has no samples"));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::param("dt", format!("must be positive and finite, got {dt}")));
        }
        if !t0.is_finite() {
            return Err(Error::param("t0", "must be finite"));
        }
        if samples.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::param("samples", "contain non-finite values"));
        }
        Ok(Self { samples, dt, t0 })
    }

    pub fn from_fn(n: usize, dt: f64, t0: f64, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let samples = (0..n).map(|k| f(t0 + k as f64 * dt)).collect();
        Self::new(samples, dt, t0)
    }

    pub fn zeros(n: usize, dt: f64, t0: f64) -> Result<Self> {
        Self::new(vec![Complex64::new(0.0, 0.0); n], dt, t0)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.len() - 1)
    }

    /// Riemann-sum energy `sum |f_k|^2 dt`.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.dt
    }

    pub fn norm(&self) -> f64 {
        self.energy().sqrt()
    }

    pub fn scaled(&self, c: Complex64) -> Signal1D {
        Signal1D { samples: self.samples.iter().map(|z| z * c).collect(), ..self.clone() }
    }

    /// `self + c * other`; both signals must share the sampling lattice.
    pub fn add_scaled(&self, other: &Signal1D, c: Complex64) -> Result<Signal1D> {
        self.check_same_lattice(other)?;
        Ok(Signal1D {
            samples: self.samples.iter().zip(&other.samples).map(|(a, b)| a + c * b).collect(),
            ..self.clone()
        })
    }

    pub(crate) fn check_same_lattice(&self, other: &Signal1D) -> Result<()> {
        if !same_spacing(self.dt, other.dt) {
            return Err(Error::IncompatibleSpacing(self.dt, other.dt));
        }
        if self.len() != other.len() || (self.t0 - other.t0).abs() > 1e-9 * self.dt {
            return Err(Error::GridMismatch("signals are sampled on different lattices".into()));
        }
        Ok(())
    }

    /// Value at an arbitrary time by linear interpolation, zero outside the support.
    pub fn interpolate(&self, t: f64) -> Complex64 {
        let s = (t - self.t0) / self.dt;
        if s < -1e-9 || s > (self.len() - 1) as f64 + 1e-9 {
            return Complex64::new(0.0, 0.0);
        }
        let k = s.floor().max(0.0) as usize;
        if k + 1 >= self.len() {
            return self.samples[self.len() - 1];
        }
        let th = s - k as f64;
        self.samples[k] * (1.0 - th) + self.samples[k + 1] * th
    }
}

pub(crate) fn same_spacing(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

/// The window families with closed-form ambiguity functions, plus raw samples.
#[derive(Debug, Clone, PartialEq)]
pub enum WindowSpec {
    /// `g(t) = exp(t - e^t)`.
    ExpExp,
    /// `g(t) = e^{-t} 1_{(0, inf)}(t)`, sampled with `g(0) = 1/2`.
    OneSidedExp,
    /// `g(t) = exp(-pi (t / width)^2)`; `width = 1` is the standard Gaussian.
    Gaussian { width: f64 },
    Sampled(Signal1D),
}

/// Discriminant of [`WindowSpec`], convenient for configs and reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    ExpExp,
    OneSided,
    Gaussian,
    Sampled,
}

impl WindowKind {
    pub fn name(self) -> &'static str {
        match self {
            WindowKind::ExpExp => "expexp",
            WindowKind::OneSided => "onesided",
            WindowKind::Gaussian => "gaussian",
            WindowKind::Sampled => "sampled",
        }
    }
}

impl fmt::Display for WindowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WindowKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "expexp" | "exp-exp" => Ok(WindowKind::ExpExp),
            "onesided" | "one-sided" | "onesidedexp" => Ok(WindowKind::OneSided),
            "gaussian" | "gauss" => Ok(WindowKind::Gaussian),
            "sampled" => Ok(WindowKind::Sampled),
            other => Err(Error::param("window.kind", format!("unknown window `{other}`"))),
        }
    }
}

impl WindowSpec {
    pub fn gaussian() -> Self {
        WindowSpec::Gaussian { width: 1.0 }
    }

    pub fn kind(&self) -> WindowKind {
        match self {
            WindowSpec::ExpExp => WindowKind::ExpExp,
            WindowSpec::OneSidedExp => WindowKind::OneSided,
            WindowSpec::Gaussian { .. } => WindowKind::Gaussian,
            WindowSpec::Sampled(_) => WindowKind::Sampled,
        }
    }

    pub fn name(&self) -> &'static str {
        self.kind().name()
    }

    /// Builds the closed-form window of the given kind (Gaussian with unit width).
    pub fn from_kind(kind: WindowKind) -> Result<Self> {
        match kind {
            WindowKind::ExpExp => Ok(WindowSpec::ExpExp),
            WindowKind::OneSided => Ok(WindowSpec::OneSidedExp),
            WindowKind::Gaussian => Ok(WindowSpec::gaussian()),
            WindowKind::Sampled => Err(Error::param("window.kind", "sampled windows need data")),
        }
    }

    /// Pointwise value of a closed-form window. `None` for sampled windows.
    pub fn eval(&self, t: f64) -> Option<f64> {
        match self {
            WindowSpec::ExpExp => Some((t - t.exp()).exp()),
            WindowSpec::OneSidedExp => Some(if t > 0.0 {
                (-t).exp()
            } else if t == 0.0 {
                0.5
            } else {
                0.0
            }),
            WindowSpec::Gaussian { width } => Some((-PI * (t / width).powi(2)).exp()),
            WindowSpec::Sampled(_) => None,
        }
    }

    fn validate(&self) -> Result<()> {
        if let WindowSpec::Gaussian { width } = self {
            if !(width.is_finite() && *width > 0.0) {
                return Err(Error::param("window.width", format!("must be positive and finite, got {width}")));
            }
        }
        Ok(())
    }
}

/// Samples `spec` at `t0 + k * dt`, `k < n`. Sampled windows are copied as-is.
pub fn make_window(spec: &WindowSpec, n: usize, dt: f64, t0: f64) -> Result<Signal1D> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::Empty("window needs at least one sample"));
    }
    if let WindowSpec::Sampled(sig) = spec {
        return Ok(sig.clone());
    }
    let samples = (0..n)
        .map(|k| {
            let t = t0 + k as f64 * dt;
            // snap lattice points that are meant to be the origin
            let t = if t.abs() < 1e-9 * dt { 0.0 } else { t };
            Complex64::new(spec.eval(t).unwrap_or(0.0), 0.0)
        })
        .collect();
    Signal1D::new(samples, dt, t0)
}

/// Samples of `f^(xi) = \int f(t) e^{-2 pi i xi t} dt` on the FFT-dual grid
/// `xi_m = (m - n/2) / (n dt)`.
///
/// The result is again a [`Signal1D`] whose `dt` is the frequency spacing and
/// whose `t0` is the lowest frequency.
pub fn fourier_transform(f: &Signal1D) -> Result<Signal1D> {
    let n = f.len();
    if n == 0 {
        return Err(Error::Empty("cannot transform an empty signal"));
    }
    let half = n / 2;
    let dxi = 1.0 / (n as f64 * f.dt);
    let mut buf: Vec<Complex64> = f
        .samples
        .iter()
        .enumerate()
        .map(|(k, z)| {
            // demodulate so that bin m corresponds to xi = (m - half) dxi
            let ph = 2.0 * PI * ((half * k) % n) as f64 / n as f64;
            z * Complex64::from_polar(1.0, ph)
        })
        .collect();
    let fft = FftPlanner::new().plan_fft_forward(n);
    fft.process(&mut buf);
    let xi0 = -(half as f64) * dxi;
    for (m, z) in buf.iter_mut().enumerate() {
        let xi = xi0 + m as f64 * dxi;
        *z *= Complex64::from_polar(f.dt, -2.0 * PI * xi * f.t0);
    }
    Signal1D::new(buf, dxi, xi0)
}
