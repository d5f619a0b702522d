use std::f64::consts::PI;

use gaborstab::poincare::{
    bobkov_moment_bound, cauchy_pair_bound, estimate_cheeger, estimate_poincare, estimate_poincare_dense,
    log_concavity_check, modified_poincare_check, poincare_study, tensor_bound, weight_from_power, Mesh, WeightPair,
};
use gaborstab::tfcore::{ambiguity_modulus, Grid2D, RealField2D, WindowSpec};
use gaborstab::weights::GammaWeight;

fn gaussian(x: f64) -> f64 {
    (-x * x / 2.0).exp() / (2.0 * PI).sqrt()
}

fn two_bumps(s: f64) -> impl Fn(f64) -> f64 {
    move |x| 0.5 * (gaussian(x - s / 2.0) + gaussian(x + s / 2.0))
}

#[test]
fn uniform_interval_converges_to_inverse_pi_squared() {
    let want = 1.0 / (PI * PI);
    let mut errors = Vec::new();
    for n in [256, 512, 1024] {
        let pair = WeightPair::line_fn(0.0, 1.0, n, |_| 1.0, |_| 1.0).unwrap();
        errors.push((estimate_poincare(&pair).unwrap().c_p - want).abs() / want);
    }
    assert!(errors[2] < 0.01, "{errors:?}");
    // monotone with observed order at least one
    assert!(errors[1] <= 0.5 * errors[0] && errors[2] <= 0.5 * errors[1], "{errors:?}");
}

#[test]
fn standard_gaussian_has_unit_constant() {
    let pair = WeightPair::line_fn(-10.0, 10.0, 4001, gaussian, gaussian).unwrap();
    let c = estimate_poincare(&pair).unwrap().c_p;
    assert!((c - 1.0).abs() < 0.02, "{c}");
    // dense oracle on a coarser truncation
    let small = WeightPair::line_fn(-10.0, 10.0, 801, gaussian, gaussian).unwrap();
    let (it, dense) = (estimate_poincare(&small).unwrap().c_p, estimate_poincare_dense(&small).unwrap());
    assert!((it - dense).abs() < 1e-8 * dense);
}

#[test]
fn cauchy_pair_respects_its_bound() {
    let beta = 2.0;
    let w = move |x: f64| (1.0 + x * x).powf(-beta);
    let pair = WeightPair::line_fn(-50.0, 50.0, 2048, move |x| w(x) / (1.0 + x * x), w).unwrap();
    let c = estimate_poincare(&pair).unwrap().c_p;
    assert!(c <= cauchy_pair_bound(beta, 1).unwrap() * 1.03, "{c}");
}

#[test]
fn separated_bumps_grow_without_bound() {
    let mut last = 0.0;
    for s in [2.0, 4.0, 6.0, 8.0] {
        let f = two_bumps(s);
        let pair = WeightPair::line_fn(-14.0, 14.0, 2801, &f, &f).unwrap();
        let c = estimate_poincare(&pair).unwrap().c_p;
        assert!(c > last, "s = {s}: {c} after {last}");
        last = c;
    }
    assert!(last > 100.0, "{last}");
}

#[test]
fn cheeger_sweeps_satisfy_the_cheeger_inequality() {
    let uniform = WeightPair::line_fn(0.0, 1.0, 1024, |_| 1.0, |_| 1.0).unwrap();
    let h = estimate_cheeger(&uniform).unwrap();
    assert!((h.h - 2.0).abs() < 0.1);
    let mut suite = vec![uniform, WeightPair::line_fn(-10.0, 10.0, 2001, gaussian, gaussian).unwrap()];
    let mut hs = Vec::new();
    for s in [2.0, 4.0, 6.0, 8.0] {
        let f = two_bumps(s);
        suite.push(WeightPair::line_fn(-14.0, 14.0, 2801, &f, &f).unwrap());
    }
    for pair in &suite {
        let c = estimate_poincare(pair).unwrap().c_p;
        let h = estimate_cheeger(pair).unwrap();
        assert!(h.side_masses.0.min(h.side_masses.1) > 0.0);
        assert!(c <= 4.0 / (h.h * h.h), "C_P = {c}, h = {}", h.h);
        hs.push(h.h);
    }
    // the bump sweep isolates the gap between the components
    assert!(hs[2..].windows(2).all(|w| w[1] < w[0]), "{hs:?}");
}

#[test]
fn tensor_product_weight_is_bounded_by_factors() {
    let g = Grid2D::new(-8.0, 8.0, 161, -1.0, 1.0, 41).unwrap();
    let w = RealField2D::from_fn(g, |x, _| gaussian(x));
    let c2 = estimate_poincare(&WeightPair::from_fields(&w, &w).unwrap()).unwrap().c_p;
    let cx = estimate_poincare(&WeightPair::line_fn(-8.0, 8.0, 161, gaussian, gaussian).unwrap()).unwrap().c_p;
    let cy = estimate_poincare(&WeightPair::line_fn(-1.0, 1.0, 41, |_| 1.0, |_| 1.0).unwrap()).unwrap().c_p;
    let bound = tensor_bound(cx, cy).unwrap();
    assert!(c2 <= bound * 1.05, "{c2} vs {bound}");
    assert!((c2 - bound).abs() < 1e-6 * bound);
}

#[test]
fn asymmetric_pencil_is_monotone() {
    let base = WeightPair::line_fn(-6.0, 6.0, 601, gaussian, gaussian).unwrap();
    let c = estimate_poincare(&base).unwrap().c_p;
    let bigger_w = WeightPair::line_fn(-6.0, 6.0, 601, gaussian, |x| gaussian(x) * (1.0 + 0.3 * x.cos())).unwrap();
    let smaller_v = WeightPair::line_fn(-6.0, 6.0, 601, |x| gaussian(x) / (1.0 + x * x), gaussian).unwrap();
    // enlarging w never increases C_P
    let enlarged = WeightPair::line_fn(-6.0, 6.0, 601, gaussian, |x| gaussian(x) * 1.5).unwrap();
    assert!(estimate_poincare(&enlarged).unwrap().c_p <= c);
    assert!(estimate_poincare(&smaller_v).unwrap().c_p <= c * (1.0 + 1e-12));
    assert!(estimate_poincare(&bigger_w).unwrap().c_p.is_finite());
}

#[test]
fn bobkov_moment_tracks_the_gaussian_constant() {
    let mesh = Mesh::line(-10.0, 10.0, 2001).unwrap();
    let w: Vec<f64> = (0..mesh.len()).map(|k| gaussian(mesh.coords(k).0)).collect();
    assert!((bobkov_moment_bound(&mesh, &w).unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn modified_poincare_holds_for_smooth_random_field() {
    let g = Grid2D::symmetric(4.0, 65).unwrap();
    let w = RealField2D::from_fn(g, |x, y| (-(x * x + y * y) / 2.0).exp());
    let pair = WeightPair::from_fields(&w, &w).unwrap();
    let u: Vec<f64> = (0..g.len())
        .map(|k| {
            let (x, y) = (g.x(k / g.nxi), g.xi(k % g.nxi));
            (1.3 * x + 0.4).sin() + 0.5 * (0.7 * y - 0.2 * x).cos() + 0.2 * x * y
        })
        .collect();
    let r = modified_poincare_check(&u, &pair).unwrap();
    assert!(r.holds && r.ratio < r.bound, "{r:?}");
    assert!(r.sharp_bound <= r.bound);
}

/// `(|V_g g|^2 * gamma)^2` for the one-sided exponential window.
fn one_sided_weight(grid: Grid2D, gamma: &GammaWeight) -> RealField2D {
    let spec = WindowSpec::OneSidedExp;
    let power = RealField2D::from_fn(grid, |x, xi| ambiguity_modulus(&spec, x, xi).unwrap().powi(2));
    weight_from_power(&power, gamma).unwrap()
}

#[test]
fn exponential_weight_is_log_concave() {
    let g = Grid2D::new(-6.0, 6.0, 97, -6.0, 6.0, 97).unwrap();
    let spec = WindowSpec::ExpExp;
    let power = RealField2D::from_fn(g, |x, xi| ambiguity_modulus(&spec, x, xi).unwrap().powi(2));
    let w = weight_from_power(&power, &GammaWeight::new(1.0, 1.0).unwrap()).unwrap();
    let r = log_concavity_check(&Mesh::Plane(g), &w.values, 1e-8).unwrap();
    assert!(r.passed, "{r:?}");
}

#[test]
fn frequency_damped_pair_is_finite_and_undamped_pair_diverges() {
    let gamma = GammaWeight::new(4.0, 1.0).unwrap();
    let levels: [(f64, f64, f64, f64); 3] = [(3.0, 8.0, 0.25, 0.5), (6.0, 16.0, 0.125, 0.25), (12.0, 32.0, 0.0625, 0.125)];
    let pairs: Vec<WeightPair> = levels
        .iter()
        .map(|&(rx, rxi, hx, hxi)| {
            let nx = (2.0 * rx / hx).round() as usize + 1;
            let nxi = (2.0 * rxi / hxi).round() as usize + 1;
            let g = Grid2D::new(-rx, rx, nx, -rxi, rxi, nxi).unwrap();
            let w = one_sided_weight(g, &gamma);
            let v = RealField2D::from_fn(g, |x, xi| w.at(g.nearest(x, xi).0, g.nearest(x, xi).1) / (1.0 + xi * xi));
            WeightPair::from_fields(&v, &w).unwrap()
        })
        .collect();
    let study = poincare_study(&pairs).unwrap();
    let c: Vec<f64> = study.convergence.iter().map(|p| p.c_p).collect();
    let last = (c[2] - c[1]).abs() / c[1];
    assert!(!study.divergent && last < 0.1, "{c:?}");

    let controls: Vec<WeightPair> = [8.0, 16.0, 32.0, 64.0]
        .iter()
        .map(|&rxi| {
            let g = Grid2D::new(-3.0, 3.0, 25, -rxi, rxi, (4.0 * rxi) as usize + 1).unwrap();
            let w = one_sided_weight(g, &gamma);
            WeightPair::from_fields(&w, &w).unwrap()
        })
        .collect();
    let control = poincare_study(&controls).unwrap();
    assert!(control.divergent && control.c_p.is_infinite(), "{:?}", control.convergence);
}
