//! The `spectrogram`, `admissible`, `poincare` and `stability` commands.

use std::f64::consts::PI;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;

use gaborstab::poincare::{estimate_cheeger, poincare_study, weight_from_spectrogram, WeightPair};
use gaborstab::stabilitylab::{
    base_signal, gaussian_atoms, run_stability_experiment, smooth_noise, BaseSignal, ExperimentConfig, Lattice,
    StabilityReport,
};
use gaborstab::tfcore::{stft, Grid2D, RealField2D, Signal1D, WindowKind, WindowSpec};
use gaborstab::weights::{check_admissibility, AdmissibilityReport, GammaWeight};
use gaborstab::Complex64;

use crate::config::{Config, SignalKind, WeightKind};
use crate::output::{num, OutputDir};
use crate::{svg, CliError, Outcome, Result};

/// Options shared by every command.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out: PathBuf,
    pub config_path: Option<PathBuf>,
    /// Worker threads for independent jobs; `None` uses every core.
    pub jobs: Option<usize>,
    pub svg: bool,
    pub seed: Option<u64>,
    pub tol_scale: Option<f64>,
}

impl RunOptions {
    pub fn new(out: impl Into<PathBuf>) -> Self {
        RunOptions { out: out.into(), config_path: None, jobs: None, svg: false, seed: None, tol_scale: None }
    }

    pub(crate) fn pool(&self) -> Result<rayon::ThreadPool> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(j) = self.jobs {
            if j == 0 {
                return Err(CliError::Usage("--jobs must be at least 1".into()));
            }
            b = b.num_threads(j);
        }
        b.build().map_err(|e| CliError::Usage(format!("thread pool: {e}")))
    }
}

/// Header of `spectrogram.csv`.
pub const SPECTROGRAM_HEADER: [&str; 3] = ["x", "xi", "modulus"];
/// Header of `poincare.csv`.
pub const POINCARE_HEADER: [&str; 6] = ["level", "nodes", "c_p", "cheeger_h", "cheeger_bound", "divergent"];
/// Header of `stability.csv`.
pub const STABILITY_HEADER: [&str; 10] =
    ["case_id", "name", "window", "recipe", "lhs", "d_val", "c_p", "ratio", "raw_ratio", "uniqueness_alarm"];

fn lattice(cfg: &Config, grid: &Grid2D) -> Result<Lattice> {
    let dt = grid
        .lattice_step(cfg.per_cell())
        .ok_or_else(|| cfg.error("grid: time nodes are not commensurate with the origin"))?;
    Ok(Lattice::new(dt)?)
}

/// The analysed signal of a configuration, sampled on `lat`.
pub fn build_signal(cfg: &Config, window: &WindowSpec, lat: &Lattice, seed: u64) -> Result<Signal1D> {
    let s = cfg.signal();
    let seed = s.params.seed.unwrap_or(seed);
    Ok(match s.kind {
        SignalKind::Window => base_signal(BaseSignal::Window, window, lat)?,
        SignalKind::TwoTone => base_signal(BaseSignal::TwoTone, window, lat)?,
        SignalKind::Zero => lat.signal(|_| Complex64::new(0.0, 0.0))?,
        SignalKind::Atoms => gaussian_atoms(lat, s.params.count.unwrap_or(3), seed)?,
        SignalKind::Noise => smooth_noise(lat, seed)?,
    })
}

/// Writes `|V_g f|` on the configured grid.
pub fn cmd_spectrogram(cfg: &Config, opts: &RunOptions) -> Result<Outcome> {
    let window = cfg.window_spec()?;
    let grid = cfg.grid()?;
    let lat = lattice(cfg, &grid)?;
    let f = build_signal(cfg, &window, &lat, cfg.seed(opts.seed))?;
    let g = lat.window(&window)?;
    let modulus = stft(&f, &g, &grid)?.modulus();
    let rows: Vec<Vec<String>> = (0..grid.nx)
        .flat_map(|i| (0..grid.nxi).map(move |j| (i, j)))
        .map(|(i, j)| vec![num(grid.x(i)), num(grid.xi(j)), num(modulus.at(i, j))])
        .collect();
    let mut out = OutputDir::create(&opts.out)?;
    out.write_csv("spectrogram.csv", &SPECTROGRAM_HEADER, &rows)?;
    if opts.svg {
        out.write("spectrogram.svg", svg::heatmap(&modulus, &format!("|V_g f|, {}", window.name())).as_bytes())?;
    }
    let files = out.finish("spectrogram", opts.config_path.as_deref(), Some(&grid))?;
    Ok(Outcome { files, passed: true, summary: format!("max |V_g f| = {}", num(modulus.max())) })
}

/// Runs the admissibility check and writes `admissibility.json`.
pub fn cmd_admissible(window: &str, a: f64, b: f64, opts: &RunOptions) -> Result<(Outcome, AdmissibilityReport)> {
    let kind: WindowKind = window.parse().map_err(|e: gaborstab::Error| CliError::Usage(e.to_string()))?;
    let spec = WindowSpec::from_kind(kind).map_err(|e| CliError::Usage(e.to_string()))?;
    let gamma = GammaWeight::new(a, b).map_err(|e| CliError::Usage(e.to_string()))?;
    let report = check_admissibility(&spec, &gamma).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut out = OutputDir::create(&opts.out)?;
    out.write_json("admissibility.json", &report)?;
    let files = out.finish("admissible", None, None)?;
    let verdict = if report.admissible { "admissible" } else { "divergent" };
    let summary = format!("{} a={a} b={b}: {verdict} (tail slope {})", kind.name(), num(report.tail_slope));
    Ok((Outcome { files, passed: report.admissible, summary }, report))
}

fn gaussian_density(x: f64) -> f64 {
    (-x * x / 2.0).exp() / (2.0 * PI).sqrt()
}

/// The refinement levels of the configured weight.
pub fn weight_levels(cfg: &Config, seed: u64) -> Result<(Vec<WeightPair>, Option<Grid2D>)> {
    let section = cfg.weight.as_ref().ok_or_else(|| cfg.error("missing section `[weight]`"))?;
    let p = &section.params;
    let one_d = |default: (f64, f64), v: &dyn Fn(f64) -> f64, w: &dyn Fn(f64) -> f64| -> Result<Vec<WeightPair>> {
        if section.refine.is_some() {
            return Err(cfg.error("weight.refine applies to spectrogram weights; use weight.nodes"));
        }
        let (x0, x1) = (p.x_min.unwrap_or(default.0), p.x_max.unwrap_or(default.1));
        let nodes = section.nodes.clone().unwrap_or_else(|| vec![256, 512, 1024]);
        if nodes.is_empty() {
            return Err(cfg.error("weight.nodes is empty"));
        }
        nodes
            .iter()
            .map(|&n| WeightPair::line_fn(x0, x1, n, v, w).map_err(|e| cfg.error(format!("weight: {e}"))))
            .collect()
    };
    match section.kind {
        WeightKind::Uniform1d => Ok((one_d((0.0, 1.0), &|_| 1.0, &|_| 1.0)?, None)),
        WeightKind::Gaussian1d => Ok((one_d((-10.0, 10.0), &gaussian_density, &gaussian_density)?, None)),
        WeightKind::TwoBump => {
            let s = p.s.ok_or_else(|| cfg.error("weight.params.s is required for two_bump"))?;
            let f = move |x: f64| 0.5 * (gaussian_density(x - s / 2.0) + gaussian_density(x + s / 2.0));
            let r = s / 2.0 + 6.0;
            Ok((one_d((-r, r), &f, &f)?, None))
        }
        WeightKind::CauchyPair => {
            let beta = p.beta.ok_or_else(|| cfg.error("weight.params.beta is required for cauchy_pair"))?;
            let w = move |x: f64| (1.0 + x * x).powf(-beta);
            Ok((one_d((-50.0, 50.0), &move |x| w(x) / (1.0 + x * x), &w)?, None))
        }
        WeightKind::Spectrogram => {
            if section.nodes.is_some() || p.x_min.is_some() || p.x_max.is_some() {
                return Err(cfg.error("spectrogram weights take their domain from [grid] and levels from weight.refine"));
            }
            let window = cfg.window_spec()?;
            let gamma = cfg.gamma()?;
            let chi = cfg.chi().weight();
            let base = cfg.grid()?;
            let refine = section.refine.clone().unwrap_or_else(|| vec![1, 2, 4]);
            if refine.is_empty() || refine.contains(&0) {
                return Err(cfg.error("weight.refine must list positive factors"));
            }
            let mut pairs = Vec::new();
            let mut last = base;
            for r in refine {
                let rf = r as f64;
                let grid = Grid2D::new(
                    base.x_min * rf,
                    base.x_max * rf,
                    (base.nx - 1) * r * r + 1,
                    base.xi_min * rf,
                    base.xi_max * rf,
                    (base.nxi - 1) * r * r + 1,
                )?;
                let lat = lattice(cfg, &grid)?;
                let f = build_signal(cfg, &window, &lat, seed)?;
                let g = lat.window(&window)?;
                let w = weight_from_spectrogram(&stft(&f, &g, &grid)?, &gamma)?;
                let v = RealField2D::new(grid, w.values.iter().zip(chi.values_on(&grid)?).map(|(a, b)| a * b).collect())?;
                pairs.push(WeightPair::from_fields(&v, &w)?);
                last = grid;
            }
            Ok((pairs, Some(last)))
        }
    }
}

/// Estimates `C_P` and the Cheeger constant on every level and writes the
/// convergence table. Fails when a level violates `C_P <= 4 / h^2`.
pub fn cmd_poincare(cfg: &Config, opts: &RunOptions) -> Result<Outcome> {
    let (pairs, grid) = weight_levels(cfg, cfg.seed(opts.seed))?;
    let study = poincare_study(&pairs)?;
    let cheeger = opts.pool()?.install(|| pairs.par_iter().map(estimate_cheeger).collect::<Vec<_>>());
    let mut rows = Vec::new();
    let mut passed = true;
    for (k, (point, h)) in study.convergence.iter().zip(cheeger).enumerate() {
        let h = h?;
        let bound = 4.0 / (h.h * h.h);
        passed &= point.c_p <= bound;
        rows.push(vec![k.to_string(), point.nodes.to_string(), num(point.c_p), num(h.h), num(bound), String::new()]);
    }
    rows.push(vec![
        "summary".into(),
        study.nodes.to_string(),
        num(study.c_p),
        String::new(),
        String::new(),
        study.divergent.to_string(),
    ]);
    let mut out = OutputDir::create(&opts.out)?;
    out.write_csv("poincare.csv", &POINCARE_HEADER, &rows)?;
    if opts.svg {
        let labels: Vec<String> = study.convergence.iter().map(|p| format!("{} nodes", p.nodes)).collect();
        let values: Vec<f64> = study.convergence.iter().map(|p| p.c_p).collect();
        out.write("poincare.svg", svg::log_bars(&labels, &values, "C_P per level").as_bytes())?;
    }
    let files = out.finish("poincare", opts.config_path.as_deref(), grid.as_ref())?;
    let summary = format!("C_P = {} over {} levels (divergent: {})", num(study.c_p), rows.len() - 1, study.divergent);
    Ok(Outcome { files, passed, summary })
}

/// Runs the experiments on a pool of `jobs` threads, keeping configuration order.
pub fn run_experiments(exps: &[ExperimentConfig], opts: &RunOptions) -> Result<Vec<StabilityReport>> {
    let results = opts.pool()?.install(|| exps.par_iter().map(run_stability_experiment).collect::<Vec<_>>());
    Ok(results.into_iter().collect::<gaborstab::Result<Vec<_>>>()?)
}

/// Contents of `baseline.json`: the empirical constant of the run.
#[derive(Debug, Clone, Serialize)]
pub struct Baseline {
    pub name: String,
    pub seed: u64,
    pub cases: usize,
    /// Largest ratio: the empirical lower bound for the stability constant.
    pub max_ratio: f64,
    pub min_positive_ratio: Option<f64>,
    /// `max_ratio / min_positive_ratio`.
    pub spread: Option<f64>,
    pub uniqueness_alarms: usize,
}

/// Runs every recipe of the configuration and writes `stability.csv`
/// (one row per case plus a summary row carrying the maximal ratio) and
/// `baseline.json`. Fails on a uniqueness alarm.
pub fn cmd_stability(cfg: &Config, opts: &RunOptions) -> Result<(Outcome, Vec<StabilityReport>)> {
    let seed = cfg.seed(opts.seed);
    let exps = cfg.experiments(seed)?;
    let reports = run_experiments(&exps, opts)?;
    let mut rows: Vec<Vec<String>> = reports
        .iter()
        .enumerate()
        .map(|(k, r)| {
            vec![
                k.to_string(),
                r.name.clone(),
                r.window.clone(),
                r.recipe.clone(),
                num(r.lhs),
                num(r.d_val),
                num(r.c_p),
                num(r.ratio),
                num(r.raw_ratio),
                r.uniqueness_alarm.to_string(),
            ]
        })
        .collect();
    let max_ratio = reports.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let min_pos = reports.iter().map(|r| r.ratio).filter(|r| *r > 0.0).fold(None, |m: Option<f64>, r| {
        Some(m.map_or(r, |m| m.min(r)))
    });
    let alarms = reports.iter().filter(|r| r.uniqueness_alarm).count();
    rows.push(vec![
        "summary".into(),
        cfg.name(),
        cfg.window_kind()?.name().into(),
        "max_ratio".into(),
        String::new(),
        String::new(),
        String::new(),
        num(max_ratio),
        String::new(),
        (alarms > 0).to_string(),
    ]);
    let baseline = Baseline {
        name: cfg.name(),
        seed,
        cases: reports.len(),
        max_ratio,
        min_positive_ratio: min_pos,
        spread: min_pos.map(|m| max_ratio / m),
        uniqueness_alarms: alarms,
    };
    let mut out = OutputDir::create(&opts.out)?;
    out.write_csv("stability.csv", &STABILITY_HEADER, &rows)?;
    out.write_json("baseline.json", &baseline)?;
    if opts.svg {
        let labels: Vec<String> = reports.iter().map(|r| r.name.clone()).collect();
        let values: Vec<f64> = reports.iter().map(|r| r.ratio).collect();
        out.write("stability.svg", svg::log_bars(&labels, &values, "lhs / ((1 + C_P)^(1/4) d)").as_bytes())?;
    }
    let grid = cfg.grid()?;
    let files = out.finish("stability", opts.config_path.as_deref(), Some(&grid))?;
    let passed = alarms == 0 && reports.iter().all(|r| r.ratio.is_finite());
    let summary = format!("{} cases, max ratio {}, {} uniqueness alarms", reports.len(), num(max_ratio), alarms);
    Ok((Outcome { files, passed, summary }, reports))
}
