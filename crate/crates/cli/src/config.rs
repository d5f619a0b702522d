//! TOML experiment configuration.
//!
//! A configuration is a flat sectioned file. Unknown keys are rejected with
//! a diagnostic that names the key and its line. Example:
//!
//! ```toml
//! name = "onesided-standard"
//! seed = 42
//!
//! [window]
//! kind = "onesided"
//!
//! [gamma]
//! a = 4.0
//! b = 1.0
//!
//! [chi]
//! kind = "cauchy_freq"
//!
//! [grid]
//! x_min = -8.0
//! x_max = 16.0
//! nx = 97
//! xi_min = -8.0
//! xi_max = 8.0
//! nxi = 65
//!
//! [[recipe]]
//! name = "perturbation"
//! params = { epsilons = [1e-3, 1e-2, 1e-1] }
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use gaborstab::stabilitylab::{BaseSignal, ChiSpec, ExperimentConfig, Recipe, ShiftKind};
use gaborstab::tfcore::{Grid2D, WindowKind, WindowSpec};
use gaborstab::weights::GammaWeight;

use crate::{CliError, Result};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub name: Option<String>,
    pub seed: Option<u64>,
    pub window: Option<WindowSection>,
    pub gamma: Option<GammaSection>,
    pub chi: Option<ChiSpec>,
    pub grid: Option<GridSection>,
    pub signal: Option<SignalSection>,
    pub weight: Option<WeightSection>,
    #[serde(default)]
    pub recipe: Vec<RecipeSection>,
    #[serde(default)]
    pub tol: TolSection,
    /// Where the configuration was read from, for diagnostics.
    #[serde(skip)]
    pub source: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSection {
    pub kind: WindowKind,
    #[serde(default)]
    pub params: WindowParams,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowParams {
    /// Gaussian width; ignored by the other windows.
    pub width: Option<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaSection {
    pub a: f64,
    pub b: f64,
}

fn default_per_cell() -> usize {
    8
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub xi_min: f64,
    pub xi_max: f64,
    pub nxi: usize,
    /// Signal samples per time cell.
    #[serde(default = "default_per_cell")]
    pub per_cell: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalKind {
    Window,
    TwoTone,
    Zero,
    Atoms,
    Noise,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalSection {
    pub kind: SignalKind,
    #[serde(default)]
    pub params: SignalParams,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalParams {
    /// Number of Gaussian atoms for `atoms`.
    pub count: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    #[serde(rename = "uniform_1d")]
    Uniform1d,
    #[serde(rename = "gaussian_1d")]
    Gaussian1d,
    TwoBump,
    CauchyPair,
    Spectrogram,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSection {
    pub kind: WeightKind,
    #[serde(default)]
    pub params: WeightParams,
    /// Node counts of the refinement levels (one-dimensional weights).
    pub nodes: Option<Vec<usize>>,
    /// Scale factors of the refinement levels (spectrogram weights): level
    /// `r` multiplies the grid extent by `r` and divides both spacings by `r`.
    pub refine: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightParams {
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    /// Bump separation for `two_bump`.
    pub s: Option<f64>,
    /// Decay exponent for `cauchy_pair`.
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecipeSection {
    pub name: String,
    #[serde(default)]
    pub params: toml::Table,
    /// Admit a pair that fails the admissibility check.
    #[serde(default)]
    pub negative_control: bool,
}

/// Tolerances of the verification suites. `scale` multiplies every one.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolSection {
    #[serde(default = "one")]
    pub scale: f64,
    pub hilbert2: Option<f64>,
    pub planchshift: Option<f64>,
    pub slpr: Option<f64>,
    pub tsw: Option<f64>,
    pub logconcave: Option<f64>,
    pub sinh: Option<f64>,
    pub convequiv: Option<f64>,
    pub modified_poincare: Option<f64>,
}

fn one() -> f64 {
    1.0
}

impl Default for TolSection {
    fn default() -> Self {
        TolSection {
            scale: 1.0,
            hilbert2: None,
            planchshift: None,
            slpr: None,
            tsw: None,
            logconcave: None,
            sinh: None,
            convequiv: None,
            modified_poincare: None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct IdentityParams {
    #[serde(default)]
    k: Vec<u8>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PerturbationParams {
    epsilons: Vec<f64>,
    seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstabilityParams {
    separations: Vec<f64>,
    #[serde(default = "time_shift")]
    shift: ShiftKind,
}

fn time_shift() -> ShiftKind {
    ShiftKind::TimeShift
}

/// Seed used when neither the configuration nor the command line sets one.
pub const DEFAULT_SEED: u64 = 42;

impl Config {
    pub fn parse(text: &str, source: Option<&Path>) -> Result<Self> {
        let mut cfg: Config = toml::from_str(text).map_err(|e| CliError::Config {
            path: source.map(Path::to_path_buf).unwrap_or_else(|| "<config>".into()),
            message: e.to_string().trim_end().to_string(),
        })?;
        cfg.source = source.map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, Some(path))
    }

    pub fn error(&self, message: impl Into<String>) -> CliError {
        CliError::Config {
            path: self.source.clone().unwrap_or_else(|| "<config>".into()),
            message: message.into(),
        }
    }

    fn missing(&self, section: &str) -> CliError {
        self.error(format!("missing section `[{section}]`"))
    }

    pub fn name(&self) -> String {
        self.name.clone().unwrap_or_else(|| "experiment".into())
    }

    pub fn seed(&self, cli: Option<u64>) -> u64 {
        cli.or(self.seed).unwrap_or(DEFAULT_SEED)
    }

    pub fn window_kind(&self) -> Result<WindowKind> {
        Ok(self.window.as_ref().ok_or_else(|| self.missing("window"))?.kind)
    }

    pub fn window_spec(&self) -> Result<WindowSpec> {
        let w = self.window.as_ref().ok_or_else(|| self.missing("window"))?;
        match (w.kind, w.params.width) {
            (WindowKind::Gaussian, Some(width)) => {
                if !(width > 0.0 && width.is_finite()) {
                    return Err(self.error(format!("window.params.width must be positive, got {width}")));
                }
                Ok(WindowSpec::Gaussian { width })
            }
            (kind, Some(_)) => Err(self.error(format!("window.params.width does not apply to `{kind}`"))),
            (kind, None) => WindowSpec::from_kind(kind).map_err(|e| self.error(e.to_string())),
        }
    }

    pub fn gamma(&self) -> Result<GammaWeight> {
        let g = self.gamma.ok_or_else(|| self.missing("gamma"))?;
        GammaWeight::new(g.a, g.b).map_err(|e| self.error(format!("gamma: {e}")))
    }

    pub fn chi(&self) -> ChiSpec {
        self.chi.unwrap_or_default()
    }

    pub fn grid(&self) -> Result<Grid2D> {
        let g = self.grid.ok_or_else(|| self.missing("grid"))?;
        Grid2D::new(g.x_min, g.x_max, g.nx, g.xi_min, g.xi_max, g.nxi).map_err(|e| self.error(format!("grid: {e}")))
    }

    pub fn per_cell(&self) -> usize {
        self.grid.map(|g| g.per_cell).unwrap_or_else(default_per_cell)
    }

    pub fn signal(&self) -> SignalSection {
        self.signal.clone().unwrap_or(SignalSection { kind: SignalKind::Window, params: SignalParams::default() })
    }

    /// Expands every `[[recipe]]` section into experiment configurations,
    /// in file order.
    pub fn experiments(&self, seed: u64) -> Result<Vec<ExperimentConfig>> {
        if self.recipe.is_empty() {
            return Err(self.error("no `[[recipe]]` sections"));
        }
        let window = self.window_kind()?;
        let gamma = self.gamma()?;
        let grid = self.grid()?;
        let signal = match self.signal.as_ref().map(|s| s.kind) {
            None | Some(SignalKind::TwoTone) => BaseSignal::TwoTone,
            Some(SignalKind::Window) => BaseSignal::Window,
            Some(other) => {
                return Err(self.error(format!("signal.kind `{other:?}` is not available for stability experiments")))
            }
        };
        let base = self.name();
        let mut out = Vec::new();
        for (index, section) in self.recipe.iter().enumerate() {
            let params = toml::Value::Table(section.params.clone());
            let bad = |e: toml::de::Error| {
                self.error(format!("recipe[{index}] (`{}`) params: {}", section.name, e.to_string().trim_end()))
            };
            let recipes: Vec<(String, Recipe)> = match section.name.as_str() {
                "identity" => {
                    let p: IdentityParams = params.try_into().map_err(bad)?;
                    let ks = if p.k.is_empty() { vec![1] } else { p.k };
                    ks.into_iter().map(|k| (format!("identity-k{k}"), Recipe::Identity { k })).collect()
                }
                "perturbation" => {
                    let p: PerturbationParams = params.try_into().map_err(bad)?;
                    let seed = p.seed.unwrap_or(seed);
                    p.epsilons
                        .into_iter()
                        .enumerate()
                        .map(|(k, epsilon)| (format!("perturb-{k}"), Recipe::Perturbation { epsilon, seed }))
                        .collect()
                }
                "instability" => {
                    let p: InstabilityParams = params.try_into().map_err(bad)?;
                    p.separations
                        .into_iter()
                        .map(|separation| {
                            (format!("sweep-s{separation}"), Recipe::Instability { separation, shift: p.shift })
                        })
                        .collect()
                }
                other => {
                    return Err(self.error(format!(
                        "recipe[{index}]: unknown recipe name `{other}` (expected identity, perturbation or instability)"
                    )))
                }
            };
            if recipes.is_empty() {
                return Err(self.error(format!("recipe[{index}] (`{}`) expands to no cases", section.name)));
            }
            for (label, recipe) in recipes {
                let cfg = ExperimentConfig {
                    name: format!("{base}-{label}"),
                    window,
                    gamma,
                    chi: self.chi(),
                    signal,
                    recipe,
                    grid,
                    per_cell: self.per_cell(),
                    negative_control: section.negative_control,
                };
                cfg.validate().map_err(|e| self.error(format!("recipe[{index}]: {e}")))?;
                out.push(cfg);
            }
        }
        Ok(out)
    }

    /// Tolerance for `suite`: the configured value (or `default`) times `scale`.
    pub fn tolerance(&self, suite: &str, default: f64, cli_scale: Option<f64>) -> f64 {
        let t = &self.tol;
        let base = match suite {
            "hilbert2" => t.hilbert2,
            "planchshift" => t.planchshift,
            "slpr" => t.slpr,
            "tsw" => t.tsw,
            "logconcave" => t.logconcave,
            "sinh" => t.sinh,
            "convequiv" => t.convequiv,
            "modified-poincare" => t.modified_poincare,
            _ => None,
        };
        base.unwrap_or(default) * cli_scale.unwrap_or(t.scale)
    }
}
