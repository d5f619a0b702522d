//! End-to-end stability experiments and lemma-level verifications.
//!
//! An [`ExperimentConfig`] names a window, the weight `gamma`, the weight
//! `chi`, a grid and a recipe producing two signals `f, h`.
//! [`run_stability_experiment`] evaluates every quantity of the main
//! stability inequality for `F = V_g f`, `H = V_g h`:
//!
//! ```text
//! inf_{|lambda|=1} ||H - lambda F||_L(chi)  <=  C (1 + C_P(w chi, w))^{1/4} d(|F|, |H|),
//! w = (|F|^2 * gamma)^2,
//! ```
//!
//! and reports the ratio of the left side to `(1 + C_P)^{1/4} d`, an
//! empirical lower bound for the constant `C`.

mod lemmas;
mod signals;

use serde::{Deserialize, Serialize};

use crate::norms::{metric_d, phase_aligned_distance, ChiWeight, NormKind};
use crate::poincare::{estimate_poincare, weight_from_spectrogram, WeightPair};
use crate::tfcore::{stft, Field2D, Grid2D, RealField2D, WindowKind, WindowSpec};
use crate::weights::{check_admissibility, GammaWeight};
use crate::{Complex64, Error, Result};

pub use lemmas::{
    check_compact_corollary, check_constraint_replacement, check_hilbert2, check_planchshift, check_slpr_bound,
    hilbert2_suite, snap_shift, zero_signal_bound, CompactReport, ConstraintReport, Hilbert2Report, Hilbert2Suite,
    PlanchshiftFields, PlanchshiftReport, SlprReport, OPTIMIZER_TOL, SLICE_TOL,
};
pub use signals::{
    base_signal, gaussian_atoms, make_instability_pair, smooth_noise, BaseSignal, Lattice, ShiftKind, NOISE_CORRELATION,
    NOISE_ENVELOPE, SIGNAL_HALF_WIDTH,
};

/// Serializable description of the weight `chi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum ChiSpec {
    #[default]
    Unit,
    CauchyFreq,
    CompactIndicator { x_min: f64, x_max: f64, xi_min: f64, xi_max: f64 },
}

impl ChiSpec {
    pub fn weight(&self) -> ChiWeight {
        match *self {
            ChiSpec::Unit => ChiWeight::Unit,
            ChiSpec::CauchyFreq => ChiWeight::CauchyFreq,
            ChiSpec::CompactIndicator { x_min, x_max, xi_min, xi_max } => {
                ChiWeight::CompactIndicator { x_min, x_max, xi_min, xi_max }
            }
        }
    }
}

/// How the second signal `h` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum Recipe {
    /// `H = i^k F`: every distance vanishes.
    Identity { k: u8 },
    /// `h = f + epsilon ||f|| n` with unit-norm smooth noise `n`.
    Perturbation { epsilon: f64, seed: u64 },
    /// `f = g + m(g)`, `h = g - m(g)` for a shift `m` of size `separation`.
    Instability { separation: f64, shift: ShiftKind },
}

impl Recipe {
    pub fn label(&self) -> String {
        match self {
            Recipe::Identity { k } => format!("identity(k={k})"),
            Recipe::Perturbation { epsilon, seed } => format!("perturbation(eps={epsilon:e},seed={seed})"),
            Recipe::Instability { separation, shift } => {
                format!("instability(s={separation},{})", shift_name(*shift))
            }
        }
    }
}

fn shift_name(s: ShiftKind) -> &'static str {
    match s {
        ShiftKind::TimeShift => "time_shift",
        ShiftKind::FreqShift => "freq_shift",
        ShiftKind::Diagonal => "diagonal",
    }
}

fn default_per_cell() -> usize {
    8
}

/// One stability experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub window: WindowKind,
    pub gamma: GammaWeight,
    #[serde(default)]
    pub chi: ChiSpec,
    #[serde(default)]
    pub signal: BaseSignal,
    pub recipe: Recipe,
    pub grid: Grid2D,
    /// Signal samples per time cell of the grid.
    #[serde(default = "default_per_cell")]
    pub per_cell: usize,
    /// Allows a pair that fails the admissibility check (negative controls).
    #[serde(default)]
    pub negative_control: bool,
}

impl ExperimentConfig {
    pub fn window_spec(&self) -> Result<WindowSpec> {
        WindowSpec::from_kind(self.window)
    }

    pub fn lattice(&self) -> Result<Lattice> {
        let dt = self
            .grid
            .lattice_step(self.per_cell)
            .ok_or_else(|| Error::param("grid", "time nodes are not commensurate with the origin"))?;
        Lattice::new(dt)
    }

    /// Checks admissibility of `(window, gamma)` unless this is a negative control.
    pub fn validate(&self) -> Result<()> {
        GammaWeight::new(self.gamma.a, self.gamma.b)?;
        if let Recipe::Perturbation { epsilon, .. } = self.recipe {
            if !(epsilon >= 0.0 && epsilon.is_finite()) {
                return Err(Error::param("recipe.epsilon", format!("must be nonnegative, got {epsilon}")));
            }
        }
        if !self.negative_control {
            let report = check_admissibility(&self.window_spec()?, &self.gamma)?;
            if !report.admissible {
                return Err(Error::NotAdmissible(format!(
                    "{} with a = {}, b = {}",
                    self.window.name(),
                    self.gamma.a,
                    self.gamma.b
                )));
            }
        }
        Ok(())
    }

    /// `(F, H)` for this configuration.
    pub fn fields(&self) -> Result<(Field2D, Field2D)> {
        let spec = self.window_spec()?;
        let lat = self.lattice()?;
        let g = lat.window(&spec)?;
        match self.recipe {
            Recipe::Identity { k } => {
                let f = base_signal(self.signal, &spec, &lat)?;
                let ff = stft(&f, &g, &self.grid)?;
                let lambda = [Complex64::new(1.0, 0.0), Complex64::i(), Complex64::new(-1.0, 0.0), -Complex64::i()]
                    [(k % 4) as usize];
                let hh = ff.scaled(lambda);
                Ok((ff, hh))
            }
            Recipe::Perturbation { epsilon, seed } => {
                let f = base_signal(self.signal, &spec, &lat)?;
                let noise = smooth_noise(&lat, seed)?;
                let h = f.add_scaled(&noise, Complex64::new(epsilon * f.norm(), 0.0))?;
                Ok((stft(&f, &g, &self.grid)?, stft(&h, &g, &self.grid)?))
            }
            Recipe::Instability { separation, shift } => {
                let (f, h) = make_instability_pair(&spec, separation, shift, &lat)?;
                Ok((stft(&f, &g, &self.grid)?, stft(&h, &g, &self.grid)?))
            }
        }
    }
}

/// Everything measured by [`run_stability_experiment`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub name: String,
    pub window: String,
    pub recipe: String,
    /// `inf_{|lambda|=1} ||H - lambda F||_L(chi)`.
    pub lhs: f64,
    pub lambda: Complex64,
    /// `d(|F|, |H|)`.
    pub d_val: f64,
    /// `C_P(w chi, w)`.
    pub c_p: f64,
    /// `lhs / ((1 + c_p)^{1/4} d_val)`; zero when both distances vanish.
    pub ratio: f64,
    /// `lhs / d_val` without the Poincaré factor.
    pub raw_ratio: f64,
    /// Set when `lhs > UNIQUENESS_LHS` while `d_val < UNIQUENESS_D`.
    pub uniqueness_alarm: bool,
    pub nodes: usize,
    pub eigen_iterations: usize,
}

pub const UNIQUENESS_LHS: f64 = 1e-6;
pub const UNIQUENESS_D: f64 = 1e-10;

/// Runs one experiment. The recipe fixes `f` and `h`; all quantities are
/// computed on `cfg.grid`.
pub fn run_stability_experiment(cfg: &ExperimentConfig) -> Result<StabilityReport> {
    cfg.validate()?;
    let (f, h) = cfg.fields()?;
    stability_report(cfg, &f, &h)
}

/// The measurements of [`run_stability_experiment`] for given `F` and `H`.
pub fn stability_report(cfg: &ExperimentConfig, f: &Field2D, h: &Field2D) -> Result<StabilityReport> {
    let chi = cfg.chi.weight();
    let align = phase_aligned_distance(f, h, &chi, NormKind::Mixed)?;
    let d_val = metric_d(&f.modulus(), &h.modulus())?;
    let w = weight_from_spectrogram(f, &cfg.gamma)?;
    let v = RealField2D { grid: w.grid, values: w.values.iter().zip(chi.values_on(&w.grid)?).map(|(a, b)| a * b).collect() };
    let est = estimate_poincare(&WeightPair::from_fields(&v, &w)?)?;
    let lhs = align.value;
    let ratio = if d_val > 0.0 {
        lhs / ((1.0 + est.c_p).powf(0.25) * d_val)
    } else if lhs > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    let raw_ratio = if d_val > 0.0 { lhs / d_val } else if lhs > 0.0 { f64::INFINITY } else { 0.0 };
    Ok(StabilityReport {
        name: cfg.name.clone(),
        window: cfg.window.name().to_string(),
        recipe: cfg.recipe.label(),
        lhs,
        lambda: align.lambda_star,
        d_val,
        c_p: est.c_p,
        ratio,
        raw_ratio,
        uniqueness_alarm: lhs > UNIQUENESS_LHS && d_val < UNIQUENESS_D,
        nodes: est.nodes,
        eigen_iterations: est.iterations,
    })
}

/// Grid, `gamma` and `chi` used by the standard suite for each window.
pub fn standard_setup(window: WindowKind) -> Result<(Grid2D, GammaWeight, ChiSpec)> {
    match window {
        WindowKind::OneSided => {
            Ok((Grid2D::new(-8.0, 16.0, 97, -8.0, 8.0, 65)?, GammaWeight::new(4.0, 1.0)?, ChiSpec::CauchyFreq))
        }
        WindowKind::ExpExp => {
            Ok((Grid2D::new(-8.0, 16.0, 97, -3.0, 3.0, 145)?, GammaWeight::new(3.0, 21.0)?, ChiSpec::Unit))
        }
        other => Err(Error::NoControlFunction(other.name())),
    }
}

/// Perturbation levels of the standard suite.
pub const STANDARD_EPSILONS: [f64; 3] = [1e-3, 1e-2, 1e-1];

/// Separations of the standard instability sweep.
pub const STANDARD_SEPARATIONS: [f64; 4] = [2.0, 4.0, 6.0, 8.0];

/// The standard suite for one window: three perturbation levels followed by
/// the time-shift instability sweep.
pub fn standard_suite(window: WindowKind, seed: u64) -> Result<Vec<ExperimentConfig>> {
    let (grid, gamma, chi) = standard_setup(window)?;
    let make = |name: String, recipe: Recipe| ExperimentConfig {
        name,
        window,
        gamma,
        chi,
        signal: BaseSignal::TwoTone,
        recipe,
        grid,
        per_cell: default_per_cell(),
        negative_control: false,
    };
    let mut out = Vec::new();
    for (k, &epsilon) in STANDARD_EPSILONS.iter().enumerate() {
        out.push(make(format!("{}-perturb-{k}", window.name()), Recipe::Perturbation { epsilon, seed }));
    }
    for &separation in &STANDARD_SEPARATIONS {
        out.push(make(
            format!("{}-sweep-s{separation}", window.name()),
            Recipe::Instability { separation, shift: ShiftKind::TimeShift },
        ));
    }
    Ok(out)
}
