//! Acceptance suite: one line per criterion, nonzero exit when any fails.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use gaborstab::poincare::{
    cauchy_pair_bound, estimate_cheeger, estimate_poincare, poincare_study, weight_from_power, WeightPair,
};
use gaborstab::stabilitylab::{hilbert2_suite, run_stability_experiment, standard_suite, Recipe};
use gaborstab::tfcore::{ambiguity_modulus, closed_form_agreement, Grid2D, RealField2D, WindowKind, WindowSpec};
use gaborstab::weights::{check_admissibility, GammaWeight};
use gaborstab_cli::commands::{cmd_stability, RunOptions};
use gaborstab_cli::config::Config;
use gaborstab_cli::suites::run_suite;

type Check = Result<(bool, String), Box<dyn std::error::Error>>;

fn within(t: Instant, limit: Duration) -> (bool, String) {
    let e = t.elapsed();
    (e <= limit, format!("{:.2}s of {}s", e.as_secs_f64(), limit.as_secs()))
}

fn suite(name: &str) -> Result<(bool, String), Box<dyn std::error::Error>> {
    let tmp = tempfile::tempdir()?;
    let run = run_suite(name, &Config::default(), &RunOptions::new(tmp.path()))?;
    let failed: Vec<_> = run.cases.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    Ok((run.passed, format!("{name}: {} cases, failed {failed:?}", run.cases.len())))
}

fn criterion_1() -> Check {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let s = hilbert2_suite(&mut rng, 1000)?;
    let ok = s.worst_distance_error <= 1e-12 && s.worst_tensor_error <= 1e-12 && s.violations == 0;
    let (fast, time) = within(t, Duration::from_secs(5));
    Ok((
        ok && fast,
        format!(
            "distance err {:.2e}, tensor err {:.2e}, {} violations, {time}",
            s.worst_distance_error, s.worst_tensor_error, s.violations
        ),
    ))
}

fn criterion_2() -> Check {
    let grid = Grid2D::symmetric(4.0, 512)?;
    let mut ok = true;
    let mut notes = Vec::new();
    for (spec, tol) in [(WindowSpec::ExpExp, 1e-3), (WindowSpec::gaussian(), 1e-3), (WindowSpec::OneSidedExp, 1e-2)] {
        let t = Instant::now();
        let coarse = closed_form_agreement(&spec, &grid, 2)?;
        let fine = closed_form_agreement(&spec, &grid, 4)?;
        let (fast, time) = within(t, Duration::from_secs(60));
        let pass = fine.pointwise_relative <= tol && fine.pointwise_relative < coarse.pointwise_relative && fast;
        ok &= pass;
        notes.push(format!(
            "{} {:.2e} -> {:.2e} (tol {tol:.0e}, {time})",
            spec.name(),
            coarse.pointwise_relative,
            fine.pointwise_relative
        ));
    }
    Ok((ok, notes.join("; ")))
}

fn criterion_3() -> Check {
    let t = Instant::now();
    let (ok, msg) = suite("planchshift")?;
    let (fast, time) = within(t, Duration::from_secs(600));
    Ok((ok && fast, format!("{msg}, {time}")))
}

fn criterion_4() -> Check {
    let cases = [
        (WindowSpec::ExpExp, 2.0 * PI * PI + 1.0, 3.0, true),
        (WindowSpec::OneSidedExp, 3.0, 1.0, true),
        (WindowSpec::ExpExp, 2.0 * PI * PI - 1.0, 3.0, false),
        (WindowSpec::OneSidedExp, 1.5, 1.0, false),
    ];
    let mut ok = true;
    let mut notes = Vec::new();
    for (spec, a, b, want) in cases {
        let r = check_admissibility(&spec, &GammaWeight::new(a, b)?)?;
        let slope_matches = (r.tail_slope < 0.0) == want;
        ok &= r.admissible == want && slope_matches;
        notes.push(format!(
            "{}({a:.3},{b}) admissible={} want={want} slope={:.3e}",
            spec.name(),
            r.admissible,
            r.tail_slope
        ));
    }
    Ok((ok, notes.join("; ")))
}

fn gaussian(x: f64) -> f64 {
    (-x * x / 2.0).exp() / (2.0 * PI).sqrt()
}

fn criterion_5() -> Check {
    let limit = Duration::from_secs(30);
    let t = Instant::now();
    let uniform = estimate_poincare(&WeightPair::line_fn(0.0, 1.0, 1024, |_| 1.0, |_| 1.0)?)?.c_p;
    let want = 1.0 / (PI * PI);
    let (f1, t1) = within(t, limit);

    let t = Instant::now();
    let gauss = estimate_poincare(&WeightPair::line_fn(-10.0, 10.0, 4001, gaussian, gaussian)?)?.c_p;
    let (f2, t2) = within(t, limit);

    let t = Instant::now();
    let w = |x: f64| (1.0 + x * x).powf(-2.0);
    let cauchy = estimate_poincare(&WeightPair::line_fn(-50.0, 50.0, 2048, move |x| w(x) / (1.0 + x * x), w)?)?.c_p;
    let bound = cauchy_pair_bound(2.0, 1)?;
    let (f3, t3) = within(t, limit);

    let ok = (uniform - want).abs() <= 0.01 * want
        && (gauss - 1.0).abs() <= 0.02
        && (bound - 0.25).abs() < 1e-15
        && cauchy <= 0.25 * 1.03
        && f1
        && f2
        && f3;
    Ok((ok, format!("uniform {uniform:.6} ({t1}), gaussian {gauss:.6} ({t2}), cauchy pair {cauchy:.6} <= {:.4} ({t3})", 0.25 * 1.03)))
}

fn one_sided_weight(grid: Grid2D, gamma: &GammaWeight) -> Result<RealField2D, gaborstab::Error> {
    let spec = WindowSpec::OneSidedExp;
    let mut power = Vec::with_capacity(grid.len());
    for i in 0..grid.nx {
        for j in 0..grid.nxi {
            power.push(ambiguity_modulus(&spec, grid.x(i), grid.xi(j))?.powi(2));
        }
    }
    weight_from_power(&RealField2D::new(grid, power)?, gamma)
}

fn criterion_6() -> Check {
    let uniform = WeightPair::line_fn(0.0, 1.0, 1024, |_| 1.0, |_| 1.0)?;
    let h_uniform = estimate_cheeger(&uniform)?.h;
    let mut ok = (h_uniform - 2.0).abs() <= 0.1;
    let mut suite = vec![("uniform".to_string(), uniform)];
    suite.push(("gaussian".into(), WeightPair::line_fn(-10.0, 10.0, 2001, gaussian, gaussian)?));
    for s in [2.0, 4.0, 6.0, 8.0] {
        let f = move |x: f64| 0.5 * (gaussian(x - s / 2.0) + gaussian(x + s / 2.0));
        suite.push((format!("two-bump s={s}"), WeightPair::line_fn(-14.0, 14.0, 2801, f, f)?));
    }
    let w = one_sided_weight(Grid2D::new(-3.0, 3.0, 25, -8.0, 8.0, 33)?, &GammaWeight::new(4.0, 1.0)?)?;
    suite.push(("spectrogram w".into(), WeightPair::from_fields(&w, &w)?));
    let mut worst: f64 = 0.0;
    for (name, pair) in &suite {
        let c = estimate_poincare(pair)?.c_p;
        let h = estimate_cheeger(pair)?.h;
        let ratio = c * h * h / 4.0;
        if ratio > 1.0 {
            ok = false;
            eprintln!("  cheeger inequality fails for {name}: C_P = {c}, h = {h}");
        }
        worst = worst.max(ratio);
    }
    Ok((ok, format!("uniform h = {h_uniform:.4}, max C_P h^2/4 = {worst:.4} over {} weights", suite.len())))
}

fn criterion_7() -> Check {
    let mut ok = true;
    let mut notes = Vec::new();
    for name in ["sinh", "logconcave", "convequiv"] {
        let (pass, msg) = suite(name)?;
        ok &= pass;
        notes.push(msg);
    }
    Ok((ok, notes.join("; ")))
}

fn criterion_8() -> Check {
    let gamma = GammaWeight::new(4.0, 1.0)?;
    let levels = [(3.0, 8.0, 0.25, 0.5), (6.0, 16.0, 0.125, 0.25)];
    let mut pairs = Vec::new();
    for (rx, rxi, hx, hxi) in levels {
        let nx = (2.0 * rx / hx) as usize + 1;
        let nxi = (2.0 * rxi / hxi) as usize + 1;
        let g = Grid2D::new(-rx, rx, nx, -rxi, rxi, nxi)?;
        let w = one_sided_weight(g, &gamma)?;
        let v = RealField2D::new(g, (0..g.len()).map(|k| w.values[k] / (1.0 + g.xi(k % g.nxi).powi(2))).collect())?;
        pairs.push(WeightPair::from_fields(&v, &w)?);
    }
    let study = poincare_study(&pairs)?;
    let c: Vec<f64> = study.convergence.iter().map(|p| p.c_p).collect();
    let change = (c[1] - c[0]).abs() / c[0];

    let mut controls = Vec::new();
    for rxi in [8.0, 16.0, 32.0, 64.0] {
        let g = Grid2D::new(-3.0, 3.0, 25, -rxi, rxi, (4.0 * rxi) as usize + 1)?;
        let w = one_sided_weight(g, &gamma)?;
        controls.push(WeightPair::from_fields(&w, &w)?);
    }
    let control = poincare_study(&controls)?;
    let growth: Vec<f64> = control.convergence.windows(2).map(|p| p[1].c_p / p[0].c_p).collect();
    let ok = !study.divergent && change < 0.1 && control.divergent && growth.iter().all(|g| *g >= 2.0);
    Ok((
        ok,
        format!(
            "C_P(w chi, w) {:.4} -> {:.4} (change {:.1}%), control growth {:?}",
            c[0],
            c[1],
            100.0 * change,
            growth.iter().map(|g| format!("{g:.2}")).collect::<Vec<_>>()
        ),
    ))
}

fn criterion_9() -> Check {
    let t = Instant::now();
    let mut ratios = Vec::new();
    let mut monotone = true;
    for window in [WindowKind::OneSided, WindowKind::ExpExp] {
        let mut sweep = Vec::new();
        for case in standard_suite(window, 42)? {
            let r = run_stability_experiment(&case)?;
            ratios.push((r.name.clone(), r.ratio));
            if matches!(case.recipe, Recipe::Instability { .. }) {
                sweep.push((r.d_val, r.c_p));
            }
        }
        monotone &= sweep.windows(2).all(|p| p[1].0 < p[0].0 && p[1].1 > p[0].1);
    }
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(l, h), (_, r)| (l.min(*r), h.max(*r)));
    let spread = hi / lo;
    let (fast, time) = within(t, Duration::from_secs(1800));
    let argmin = ratios.iter().find(|(_, r)| *r == lo).map(|(n, _)| n.as_str()).unwrap_or("");
    let argmax = ratios.iter().find(|(_, r)| *r == hi).map(|(n, _)| n.as_str()).unwrap_or("");
    Ok((
        spread <= 50.0 && monotone && fast,
        format!(
            "{} cases, max/min = {spread:.2} (<= 50; min {lo:.3e} at {argmin}, max {hi:.3e} at {argmax}), monotone sweeps {monotone}, {time}",
            ratios.len()
        ),
    ))
}

fn criterion_10() -> Check {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/onesided-standard.toml");
    let cfg = Config::load(&path)?;
    let tmp = tempfile::tempdir()?;
    let mut outputs = Vec::new();
    for (run, jobs) in [(0, Some(1)), (1, None)] {
        let mut opts = RunOptions::new(tmp.path().join(format!("run{run}")));
        opts.jobs = jobs;
        cmd_stability(&cfg, &opts)?;
        outputs.push(fs::read(opts.out.join("stability.csv"))?);
    }
    Ok((outputs[0] == outputs[1], format!("{} bytes, single-threaded vs default pool", outputs[0].len())))
}

fn main() {
    let criteria: [(u32, fn() -> Check); 10] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
    ];
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for (n, check) in criteria {
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let (pass, detail) = match check() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        println!("criterion {n}: {} {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            failed.push(n);
        }
    }
    if !failed.is_empty() {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
