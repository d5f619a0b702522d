use serde::Serialize;

use super::{ambiguity_modulus, make_window, stft, Grid2D, WindowSpec};
use crate::{Error, Result};

/// Pointwise values below this fraction of the peak are excluded from the
/// relative-error figure that is compared against tolerances; there the
/// reference itself is below what double-precision quadrature can resolve.
pub const SIGNIFICANT_FRACTION: f64 = 1e-9;

/// Comparison of `|stft(g, g)|` against the closed-form ambiguity modulus.
#[derive(Debug, Clone, Serialize)]
pub struct AgreementReport {
    pub window: String,
    pub dt: f64,
    /// `max |num - exact| / max |exact|` over the whole grid.
    pub sup_relative: f64,
    /// `max |num - exact| / |exact|` over nodes with `|exact| >= SIGNIFICANT_FRACTION * peak`.
    pub pointwise_relative: f64,
    /// Same ratio over every node, for information only.
    pub pointwise_relative_all: f64,
    pub significant_nodes: usize,
}

/// Samples the window on `[-32, 32]` with a spacing that puts every time node
/// of `grid` on the sampling lattice (`per_cell` samples per grid cell), and
/// compares its self-STFT to the closed form.
pub fn closed_form_agreement(spec: &WindowSpec, grid: &Grid2D, per_cell: usize) -> Result<AgreementReport> {
    let dt = grid
        .lattice_step(per_cell)
        .ok_or_else(|| Error::param("grid", "time nodes are not commensurate with the origin"))?;
    let k0 = (32.0 / dt).ceil();
    let n = 2 * k0 as usize + 1;
    let g = make_window(spec, n, dt, -k0 * dt)?;
    let v = stft(&g, &g, grid)?;
    let mut exact = Vec::with_capacity(grid.len());
    for i in 0..grid.nx {
        for j in 0..grid.nxi {
            exact.push(ambiguity_modulus(spec, grid.x(i), grid.xi(j))?);
        }
    }
    let peak = exact.iter().cloned().fold(0.0, f64::max);
    let (mut sup_err, mut pw, mut pw_all, mut count) = (0.0f64, 0.0f64, 0.0f64, 0usize);
    for (z, &e) in v.values.iter().zip(&exact) {
        let err = (z.norm() - e).abs();
        sup_err = sup_err.max(err);
        let rel = if e > 0.0 { err / e } else { f64::INFINITY };
        pw_all = pw_all.max(rel);
        if e >= SIGNIFICANT_FRACTION * peak {
            pw = pw.max(rel);
            count += 1;
        }
    }
    Ok(AgreementReport {
        window: spec.name().to_string(),
        dt,
        sup_relative: sup_err / peak,
        pointwise_relative: pw,
        pointwise_relative_all: pw_all,
        significant_nodes: count,
    })
}
