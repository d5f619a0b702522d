use crate::conv::exp_convolve_2d;
use crate::tfcore::{Field2D, RealField2D};
use crate::weights::GammaWeight;
use crate::{Error, Result};

/// Largest `a * hx` (and `b * hxi`) at which the grid still resolves the
/// decay of `gamma`.
pub const MAX_DECAY_PER_CELL: f64 = 1.0;

/// `w = (|F|^2 * gamma)^2`, the weight of the stability bound.
///
/// The convolution treats `|F|^2` as constant on grid cells and integrates
/// `gamma` exactly over each cell, via a two-pass exponential recursion per
/// axis; values outside the grid are taken as zero.
pub fn weight_from_spectrogram(f: &Field2D, gamma: &GammaWeight) -> Result<RealField2D> {
    let power = RealField2D::new(f.grid, f.values.iter().map(|z| z.norm_sqr()).collect())?;
    weight_from_power(&power, gamma)
}

/// As [`weight_from_spectrogram`], starting from `|F|^2`.
pub fn weight_from_power(power: &RealField2D, gamma: &GammaWeight) -> Result<RealField2D> {
    let smoothed = smooth_power(power, gamma)?;
    Ok(RealField2D { grid: power.grid, values: smoothed.values.iter().map(|v| v * v).collect() })
}

/// `log w`, for weights whose dynamic range exceeds double precision after
/// squaring.
pub fn log_weight_from_spectrogram(f: &Field2D, gamma: &GammaWeight) -> Result<RealField2D> {
    let power = RealField2D::new(f.grid, f.values.iter().map(|z| z.norm_sqr()).collect())?;
    let smoothed = smooth_power(&power, gamma)?;
    Ok(RealField2D { grid: power.grid, values: smoothed.values.iter().map(|v| 2.0 * v.ln()).collect() })
}

/// `|F|^2 * gamma`.
fn smooth_power(power: &RealField2D, gamma: &GammaWeight) -> Result<RealField2D> {
    let g = power.grid;
    for (what, rate, h) in [("gamma.a * hx", gamma.a, g.hx()), ("gamma.b * hxi", gamma.b, g.hxi())] {
        if rate * h > MAX_DECAY_PER_CELL {
            return Err(Error::GridTooCoarse { what, spacing: h, limit: MAX_DECAY_PER_CELL / rate });
        }
    }
    if let Some(k) = power.values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::NonPositive { index: k, value: power.values[k] });
    }
    let mut data = power.values.clone();
    exp_convolve_2d(&mut data, g.nx, g.nxi, (gamma.a, g.hx()), (gamma.b, g.hxi()));
    Ok(RealField2D { grid: g, values: data })
}
