//! Named verification suites behind `gaborstab verify <suite>`.
//!
//! Every suite draws its random inputs from a `ChaCha8Rng` seeded with the
//! run seed, compares each case against a tolerance (scaled by `tol.scale`
//! or `--tol-scale`) and reports one JUnit test case per check.

use std::f64::consts::PI;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use gaborstab::poincare::{
    convolution_equivalence_check, log_concavity_check, log_concavity_check_1d, modified_poincare_check,
    sinh_inequality_check, weight_from_power, Mesh, WeightPair, CONV_STABILITY,
};
use gaborstab::stabilitylab::{check_hilbert2, check_slpr_bound, gaussian_atoms, hilbert2_suite, Lattice, PlanchshiftFields};
use gaborstab::tfcore::{ambiguity_modulus, gamma2_modulus_sq, Grid2D, RealField2D, WindowSpec};
use gaborstab::weights::{estimate_mu_norm, tau_lattice, verify_tsw, ControlFunction, GammaWeight};
use gaborstab::Complex64;

use crate::commands::RunOptions;
use crate::config::Config;
use crate::output::{junit_xml, num, CaseResult, OutputDir};
use crate::{CliError, Outcome, Result};

/// Names accepted by [`run_suite`].
pub const SUITES: [&str; 8] =
    ["hilbert2", "planchshift", "slpr", "tsw", "logconcave", "sinh", "convequiv", "modified-poincare"];

/// Default tolerance of each suite before scaling.
pub fn default_tolerance(suite: &str) -> Option<f64> {
    Some(match suite {
        "hilbert2" => 1e-12,
        "planchshift" => 1e-3,
        "slpr" => gaborstab::stabilitylab::SLICE_TOL,
        "tsw" => 1e-9,
        "logconcave" => 1e-8,
        "sinh" => 0.0,
        "convequiv" => CONV_STABILITY,
        "modified-poincare" => 0.0,
        _ => return None,
    })
}

/// Result of one suite.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteRun {
    pub suite: String,
    pub seed: u64,
    pub tolerance: f64,
    pub passed: bool,
    pub cases: Vec<CaseResult>,
}

struct Cases(Vec<CaseResult>);

impl Cases {
    fn check(&mut self, name: impl Into<String>, f: impl FnOnce() -> Result<(bool, String)>) -> Result<()> {
        let t = Instant::now();
        let (passed, message) = f()?;
        self.0.push(CaseResult { name: name.into(), passed, seconds: t.elapsed().as_secs_f64(), message });
        Ok(())
    }
}

/// Shifts used by the planchshift suite.
pub const PLANCHSHIFT_SHIFTS: [(f64, f64); 5] = [(0.0, 0.0), (0.5, -0.25), (1.0, 1.0), (-2.0, 0.5), (3.0, -2.0)];
/// Signal pairs per window in the planchshift suite.
pub const PLANCHSHIFT_PAIRS: u64 = 10;

/// Runs `suite`; `Err` only for unknown names or invalid inputs.
pub fn run_suite(suite: &str, cfg: &Config, opts: &RunOptions) -> Result<SuiteRun> {
    let default = default_tolerance(suite)
        .ok_or_else(|| CliError::Usage(format!("unknown suite `{suite}` (expected one of {})", SUITES.join(", "))))?;
    let tol = cfg.tolerance(suite, default, opts.tol_scale);
    if !(tol >= 0.0 && tol.is_finite()) {
        return Err(CliError::Usage(format!("tolerance for `{suite}` must be a nonnegative number, got {tol}")));
    }
    let seed = cfg.seed(opts.seed);
    let mut cases = Cases(Vec::new());
    opts.pool()?.install(|| -> Result<()> {
        match suite {
            "hilbert2" => hilbert2(&mut cases, seed, tol),
            "planchshift" => planchshift(&mut cases, seed, tol),
            "slpr" => slpr(&mut cases, seed, tol),
            "tsw" => tsw(&mut cases, tol),
            "logconcave" => logconcave(&mut cases, tol),
            "sinh" => sinh(&mut cases, tol),
            "convequiv" => convequiv(&mut cases, tol),
            _ => modified_poincare(&mut cases, seed, tol),
        }
    })?;
    let passed = cases.0.iter().all(|c| c.passed);
    Ok(SuiteRun { suite: suite.to_string(), seed, tolerance: tol, passed, cases: cases.0 })
}

/// Runs a suite and writes `verify-<suite>.json` and `junit-<suite>.xml`.
pub fn cmd_verify(suite: &str, cfg: &Config, opts: &RunOptions) -> Result<(Outcome, SuiteRun)> {
    let run = run_suite(suite, cfg, opts)?;
    let mut out = OutputDir::create(&opts.out)?;
    out.write_json(&format!("verify-{suite}.json"), &run)?;
    out.write(&format!("junit-{suite}.xml"), junit_xml(suite, &run.cases).as_bytes())?;
    let files = out.finish("verify", opts.config_path.as_deref(), None)?;
    let failed = run.cases.iter().filter(|c| !c.passed).count();
    let summary = format!("{suite}: {} cases, {failed} failed (tolerance {})", run.cases.len(), num(run.tolerance));
    Ok((Outcome { files, passed: run.passed, summary }, run))
}

fn hilbert2(cases: &mut Cases, seed: u64, tol: f64) -> Result<()> {
    cases.check("identical-vectors", || {
        let phi: Vec<Complex64> = (0..16).map(|k| Complex64::new(k as f64, 1.0 - k as f64)).collect();
        let r = check_hilbert2(&phi, &phi)?;
        Ok((r.inequality_lhs.abs() <= tol * r.a * r.a && r.inequality_rhs.abs() <= tol * r.a * r.a, format!("{r:?}")))
    })?;
    cases.check("random-pairs", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = hilbert2_suite(&mut rng, 1000)?;
        let ok = s.worst_distance_error <= tol && s.worst_tensor_error <= tol && s.violations == 0;
        Ok((ok, format!("{s:?}")))
    })
}

fn planchshift(cases: &mut Cases, seed: u64, tol: f64) -> Result<()> {
    let grid = Grid2D::symmetric(16.0, 512)?;
    let lat = Lattice::new(grid.lattice_step(8).expect("symmetric grid with an even node count"))?;
    for window in [WindowSpec::OneSidedExp, WindowSpec::ExpExp] {
        let g = lat.window(&window)?;
        for pair in 0..PLANCHSHIFT_PAIRS {
            let s = seed.wrapping_mul(1000).wrapping_add(2 * pair);
            cases.check(format!("{}-pair-{pair}", window.name()), || {
                let f = gaussian_atoms(&lat, 3, s)?;
                let h = gaussian_atoms(&lat, 3, s + 1)?;
                let fields = PlanchshiftFields::new(&f, &g, &h, &grid)?;
                let worst = PLANCHSHIFT_SHIFTS.iter().map(|&t| fields.check(t).relative_difference).fold(0.0, f64::max);
                Ok((worst <= tol, format!("worst relative difference {}", num(worst))))
            })?;
        }
    }
    Ok(())
}

fn slpr(cases: &mut Cases, seed: u64, tol: f64) -> Result<()> {
    let grid = Grid2D::new(-10.0, 14.0, 97, -8.0, 8.0, 65)?;
    let lat = Lattice::new(grid.lattice_step(8).expect("grid origin lies on the lattice"))?;
    let window = WindowSpec::OneSidedExp;
    let g = lat.window(&window)?;
    let gamma = GammaWeight::new(4.0, 1.0)?;
    for pair in 0..20u64 {
        let s = seed.wrapping_mul(1000).wrapping_add(2 * pair);
        cases.check(format!("onesided-pair-{pair}"), || {
            let f = gaussian_atoms(&lat, 2, s)?;
            let h = gaussian_atoms(&lat, 2, s + 1)?;
            let r = check_slpr_bound(&f, &h, &g, &window, &gamma, &grid, 3.0, 2)?;
            let ok = r.worst_slice_ratio <= 1.0 + tol && r.lhs <= r.rhs;
            Ok((ok, format!("worst slice ratio {}, integrated {} <= {}", num(r.worst_slice_ratio), num(r.lhs), num(r.rhs))))
        })?;
    }
    Ok(())
}

fn tsw(cases: &mut Cases, tol: f64) -> Result<()> {
    cases.check("onesided", || {
        let window = WindowSpec::OneSidedExp;
        let mu = ControlFunction::for_window(&window)?;
        let r = verify_tsw(&window, &mu, &Grid2D::symmetric(6.0, 49)?, &tau_lattice(4.0, 17), tol)?;
        Ok((r.passed, format!("{r:?}")))
    })?;
    cases.check("expexp", || {
        // normalize on a wide box of shifts, then check a finer interior one
        let window = WindowSpec::ExpExp;
        let norm = estimate_mu_norm(&window, &Grid2D::symmetric(4.0, 33)?, &tau_lattice(3.0, 13))?;
        let mu = ControlFunction::for_window(&window)?.with_norm(norm);
        let r = verify_tsw(&window, &mu, &Grid2D::symmetric(2.0, 17)?, &tau_lattice(1.5, 7), tol)?;
        Ok((r.passed, format!("norm constant {}, {r:?}", num(norm))))
    })
}

fn logconcave(cases: &mut Cases, tol: f64) -> Result<()> {
    cases.check("sech", || {
        let r = log_concavity_check_1d(|x| -(x.abs() + (-2.0 * x.abs()).exp().ln_1p() - 2f64.ln()), -30.0, 30.0, 6001, tol)?;
        Ok((r.passed, format!("{r:?}")))
    })?;
    cases.check("gamma-modulus", || {
        let r = log_concavity_check_1d(|x| gamma2_modulus_sq(x).ln(), -20.0, 20.0, 8001, tol)?;
        Ok((r.passed, format!("{r:?}")))
    })?;
    cases.check("expexp-weight", || {
        let g = Grid2D::new(-6.0, 6.0, 97, -6.0, 6.0, 97)?;
        let spec = WindowSpec::ExpExp;
        let mut values = Vec::with_capacity(g.len());
        for i in 0..g.nx {
            for j in 0..g.nxi {
                values.push(ambiguity_modulus(&spec, g.x(i), g.xi(j))?.powi(2));
            }
        }
        let w = weight_from_power(&RealField2D::new(g, values)?, &GammaWeight::new(1.0, 1.0)?)?;
        let r = log_concavity_check(&Mesh::Plane(g), &w.values, tol)?;
        Ok((r.passed, format!("{r:?}")))
    })
}

fn sinh(cases: &mut Cases, tol: f64) -> Result<()> {
    cases.check("sinh-squared", || {
        let r = sinh_inequality_check(20.0, 10_000)?;
        Ok((r.min_log_margin >= -tol, format!("{r:?}")))
    })
}

fn convequiv(cases: &mut Cases, tol: f64) -> Result<()> {
    for b in [0.5, 1.0, 2.0] {
        cases.check(format!("b={b}"), || {
            let r = convolution_equivalence_check(b, 50.0)?;
            Ok((r.min > 0.0 && r.doubling_change <= tol, format!("{r:?}")))
        })?;
    }
    Ok(())
}

fn modified_poincare(cases: &mut Cases, seed: u64, tol: f64) -> Result<()> {
    let check = |u: &[f64], pair: &WeightPair| -> Result<(bool, String)> {
        let r = modified_poincare_check(u, pair)?;
        Ok((r.ratio <= r.bound * (1.0 + tol), format!("{r:?}")))
    };
    cases.check("oscillation-uniform", || {
        let pair = WeightPair::line_fn(0.0, 4.0, 801, |_| 1.0, |_| 1.0)?;
        let u: Vec<f64> = (0..801).map(|k| 0.1 * (8.0 * PI * k as f64 * 0.005).sin()).collect();
        check(&u, &pair)
    })?;
    cases.check("smooth-gaussian-plane", || {
        let g = Grid2D::symmetric(4.0, 65)?;
        let w = RealField2D::from_fn(g, |x, y| (-(x * x + y * y) / 2.0).exp());
        let pair = WeightPair::from_fields(&w, &w)?;
        let u: Vec<f64> = (0..g.len())
            .map(|k| {
                let (x, y) = (g.x(k / g.nxi), g.xi(k % g.nxi));
                (1.3 * x + 0.4).sin() + 0.5 * (0.7 * y - 0.2 * x).cos() + 0.2 * x * y
            })
            .collect();
        check(&u, &pair)
    })?;
    cases.check("random-gaussian-line", || {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pair = WeightPair::line_fn(-8.0, 8.0, 641, |x| (-x * x / 2.0).exp(), |x| (-x * x / 2.0).exp())?;
        let u: Vec<f64> = (0..641).map(|_| rng.random_range(-1.0..1.0)).collect();
        check(&u, &pair)
    })
}
