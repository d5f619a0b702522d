use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gaborstab::norms::ChiWeight;
use gaborstab::stabilitylab::{
    check_compact_corollary, check_constraint_replacement, check_planchshift, check_slpr_bound, gaussian_atoms,
    make_instability_pair, run_stability_experiment, stability_report, standard_setup, standard_suite,
    zero_signal_bound, ChiSpec, ExperimentConfig, Lattice, PlanchshiftFields, Recipe, ShiftKind, STANDARD_EPSILONS,
};
use gaborstab::tfcore::{stft, Field2D, Grid2D, WindowKind, WindowSpec};
use gaborstab::weights::GammaWeight;
use gaborstab::Complex64;

fn lattice_for(grid: &Grid2D) -> Lattice {
    Lattice::new(grid.lattice_step(8).unwrap()).unwrap()
}

#[test]
fn planchshift_sides_agree_at_zero_shift() {
    let grid = Grid2D::symmetric(16.0, 512).unwrap();
    let lat = lattice_for(&grid);
    for spec in [WindowSpec::OneSidedExp, WindowSpec::ExpExp] {
        let g = lat.window(&spec).unwrap();
        let f = gaussian_atoms(&lat, 3, 100).unwrap();
        let h = gaussian_atoms(&lat, 3, 101).unwrap();
        let fields = PlanchshiftFields::new(&f, &g, &h, &grid).unwrap();
        let r = fields.check((0.0, 0.0));
        assert!(r.relative_difference < 1e-3, "{spec:?}: {r:?}");
        assert_eq!(r.snap_distance, 0.0);

        // f -> 2f, h -> 2h scales both sides by four
        let two = Complex64::new(2.0, 0.0);
        let scaled = check_planchshift(&f.scaled(two), &g, &h.scaled(two), (1.0, -0.5), &grid).unwrap();
        let base = fields.check((1.0, -0.5));
        assert!((scaled.lhs - 4.0 * base.lhs).abs() < 1e-9 * scaled.lhs);
        assert!((scaled.rhs - 4.0 * base.rhs).abs() < 1e-9 * scaled.rhs);
    }
}

#[test]
fn planchshift_vanishes_for_equal_signals() {
    let grid = Grid2D::symmetric(8.0, 65).unwrap();
    let lat = lattice_for(&grid);
    let g = lat.window(&WindowSpec::OneSidedExp).unwrap();
    let f = gaussian_atoms(&lat, 2, 5).unwrap();
    let r = check_planchshift(&f, &g, &f, (0.7, 0.3), &grid).unwrap();
    assert_eq!((r.lhs, r.rhs, r.relative_difference), (0.0, 0.0, 0.0));
    assert!(r.snap_distance > 0.0);
}

#[test]
fn slpr_slices_respect_the_control_function() {
    let grid = Grid2D::new(-10.0, 14.0, 97, -8.0, 8.0, 65).unwrap();
    let lat = lattice_for(&grid);
    let spec = WindowSpec::OneSidedExp;
    let g = lat.window(&spec).unwrap();
    let gamma = GammaWeight::new(4.0, 1.0).unwrap();
    let mut margins = Vec::new();
    for pair in 0..20u64 {
        let f = gaussian_atoms(&lat, 2, 1000 + 2 * pair).unwrap();
        let h = gaussian_atoms(&lat, 2, 1001 + 2 * pair).unwrap();
        let r = check_slpr_bound(&f, &h, &g, &spec, &gamma, &grid, 3.0, 2).unwrap();
        assert!(r.slices_hold, "pair {pair}: {r:?}");
        assert!(r.holds, "pair {pair}: {r:?}");
        margins.push(r.rhs - r.lhs);
    }
    assert!(margins.iter().all(|m| *m >= 0.0));

    let f = gaussian_atoms(&lat, 2, 7).unwrap();
    let same = check_slpr_bound(&f, &f, &g, &spec, &gamma, &grid, 2.0, 4).unwrap();
    assert_eq!(same.lhs, 0.0);
    let bad = GammaWeight::new(1.5, 1.0).unwrap();
    assert!(check_slpr_bound(&f, &f, &g, &spec, &bad, &grid, 2.0, 4).is_err());
}

fn random_field(grid: Grid2D, rng: &mut ChaCha8Rng) -> Field2D {
    Field2D::from_fn(grid, |x, xi| {
        let env = (-(x * x + xi * xi) / 8.0).exp();
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * env
    })
}

#[test]
fn constraint_replacement_holds() {
    let grid = Grid2D::symmetric(4.0, 33).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let f = random_field(grid, &mut rng);

    let tripled = f.scaled(Complex64::new(3.0, 0.0));
    let r = check_constraint_replacement(&f, &tripled, &ChiWeight::Unit).unwrap();
    assert!(r.complex < 1e-9 * r.unimodular, "{r:?}");
    assert!((r.complex_minimizer - Complex64::new(3.0, 0.0)).norm() < 1e-9);
    assert!(r.unimodular > 0.0 && r.holds);

    let same = check_constraint_replacement(&f, &f, &ChiWeight::Unit).unwrap();
    assert!(same.unimodular < 1e-12 && same.complex < 1e-12 && same.phaseless == 0.0);

    for chi in [ChiWeight::Unit, ChiWeight::CauchyFreq] {
        for case in 0..100 {
            let (a, b) = (random_field(grid, &mut rng), random_field(grid, &mut rng));
            let r = check_constraint_replacement(&a, &b, &chi).unwrap();
            assert!(r.holds, "{} case {case}: {r:?}", chi.name());
        }
    }
}

#[test]
fn zero_signal_obeys_the_jensen_step() {
    let grid = Grid2D::symmetric(6.0, 49).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..10 {
        let (lhs, rhs) = zero_signal_bound(&random_field(grid, &mut rng)).unwrap();
        assert!(lhs <= rhs, "{lhs} > {rhs}");
    }
}

#[test]
fn compact_corollary_bound_holds_for_random_perturbations() {
    let window = WindowKind::OneSided;
    let (grid, gamma, _) = standard_setup(window).unwrap();
    let chi = ChiSpec::CompactIndicator { x_min: -2.0, x_max: 4.0, xi_min: -2.0, xi_max: 2.0 };
    let base = ExperimentConfig {
        name: "compact".into(),
        window,
        gamma,
        chi,
        signal: Default::default(),
        recipe: Recipe::Perturbation { epsilon: 0.0, seed: 0 },
        grid,
        per_cell: 8,
        negative_control: false,
    };
    let (f, _) = base.fields().unwrap();
    let perturbations: Vec<Field2D> = (0..10u64)
        .map(|seed| {
            let cfg = ExperimentConfig { recipe: Recipe::Perturbation { epsilon: 0.05, seed: 50 + seed }, ..base.clone() };
            cfg.fields().unwrap().1
        })
        .collect();
    let c_emp = perturbations
        .iter()
        .map(|h| stability_report(&base, &f, h).unwrap().ratio)
        .fold(0.0, f64::max);
    let ChiSpec::CompactIndicator { x_min, x_max, xi_min, xi_max } = chi else { unreachable!() };
    let r = check_compact_corollary(&f, &perturbations, &gamma, (x_min, x_max, xi_min, xi_max), c_emp).unwrap();
    assert!(r.w_inf > 0.0 && (r.w_sup / r.w_inf).is_finite());
    assert!(r.cp_direct <= r.cp_bound);
    assert_eq!(r.cases.len(), 10);
    assert!(r.holds, "{r:?}");
    assert!(check_compact_corollary(&f, &perturbations, &gamma, (-20.0, 4.0, -2.0, 2.0), c_emp).is_err());
}

#[test]
fn instability_sweep_is_monotone() {
    for window in [WindowKind::OneSided, WindowKind::ExpExp] {
        let reports: Vec<_> = standard_suite(window, 1)
            .unwrap()
            .iter()
            .filter(|c| matches!(c.recipe, Recipe::Instability { .. }))
            .map(|c| run_stability_experiment(c).unwrap())
            .collect();
        assert_eq!(reports.len(), 4);
        for w in reports.windows(2) {
            assert!(w[1].d_val < w[0].d_val, "{}: {} then {}", window.name(), w[0].d_val, w[1].d_val);
            assert!(w[1].c_p > w[0].c_p, "{}: {} then {}", window.name(), w[0].c_p, w[1].c_p);
            assert!(w[1].raw_ratio > w[0].raw_ratio);
        }
        // the aligned distance stays away from zero while d collapses
        let lhs_min = reports.iter().map(|r| r.lhs).fold(f64::INFINITY, f64::min);
        assert!(lhs_min > 0.25, "{lhs_min}");
        assert!(reports.iter().all(|r| r.ratio < 2.0 && !r.uniqueness_alarm));
    }
}

#[test]
fn frequency_shifted_pair_loses_spectrogram_contrast() {
    let grid = Grid2D::new(-6.0, 6.0, 49, -8.0, 8.0, 65).unwrap();
    let lat = lattice_for(&grid);
    let spec = WindowSpec::gaussian();
    let g = lat.window(&spec).unwrap();
    let mut last = f64::INFINITY;
    for s in [1.0, 2.0, 3.0, 4.0] {
        let (p, m) = make_instability_pair(&spec, s, ShiftKind::FreqShift, &lat).unwrap();
        let (pp, mm) = (stft(&p, &g, &grid).unwrap(), stft(&m, &g, &grid).unwrap());
        let d = gaborstab::norms::metric_d(&pp.modulus(), &mm.modulus()).unwrap();
        assert!(d < last, "s = {s}: {d} after {last}");
        last = d;
    }
}

#[test]
fn perturbation_ratios_share_a_common_scale() {
    // within one order of magnitude across the three noise levels
    for window in [WindowKind::OneSided, WindowKind::ExpExp] {
        let ratios: Vec<f64> = standard_suite(window, 1)
            .unwrap()
            .iter()
            .filter(|c| matches!(c.recipe, Recipe::Perturbation { .. }))
            .map(|c| run_stability_experiment(c).unwrap().ratio)
            .collect();
        assert_eq!(ratios.len(), STANDARD_EPSILONS.len());
        let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(l, h), r| (l.min(*r), h.max(*r)));
        assert!(hi / lo <= 10.0, "{}: {ratios:?}", window.name());
    }
}

#[test]
fn ratio_is_invariant_under_common_scaling() {
    let cfg = &standard_suite(WindowKind::ExpExp, 4).unwrap()[1];
    let (f, h) = cfg.fields().unwrap();
    let two = Complex64::new(2.0, 0.0);
    let a = stability_report(cfg, &f, &h).unwrap();
    let b = stability_report(cfg, &f.scaled(two), &h.scaled(two)).unwrap();
    assert!((a.ratio - b.ratio).abs() <= 1e-6 * a.ratio, "{} vs {}", a.ratio, b.ratio);
    assert!((b.lhs - 2.0 * a.lhs).abs() <= 1e-9 * b.lhs);
    assert!((b.d_val - 2.0 * a.d_val).abs() <= 1e-9 * b.d_val);
}

#[test]
fn unimodular_multiples_give_identically_zero_reports() {
    for window in [WindowKind::OneSided, WindowKind::ExpExp] {
        let (grid, gamma, chi) = standard_setup(window).unwrap();
        for k in 0..4 {
            let cfg = ExperimentConfig {
                name: format!("identity-{k}"),
                window,
                gamma,
                chi,
                signal: Default::default(),
                recipe: Recipe::Identity { k },
                grid,
                per_cell: 8,
                negative_control: false,
            };
            let r = run_stability_experiment(&cfg).unwrap();
            assert_eq!((r.lhs, r.d_val, r.ratio), (0.0, 0.0, 0.0), "{r:?}");
        }
    }
}
