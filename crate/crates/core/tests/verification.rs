use rann::analysis::{
    benchmark_graph_norm_settings, graph_norm_check, manufactured_slab, relative_l2_error, scalar_flux,
    slab_benchmark_errors, uniform_grid, angular_trapezoid, zero_inflow_test_functions,
};
use rann::baseline::{normalized_benchmark_values, solve_pincell_sn, solve_slab_sn, SnConfig};
use rann::cli::method_preset;
use rann::solver::solve_problem;
use rann::transport::{builtin_problem, SLAB_HALF_WIDTH};

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

#[test]
fn graph_norm_bounds_hold_for_every_setting_and_test_function() {
    let settings = benchmark_graph_norm_settings().unwrap();
    assert!(settings.len() >= 10);
    let mut checked = 0;
    for s in &settings {
        for f in zero_inflow_test_functions(s.kind, &s.spatial_box) {
            let r = graph_norm_check(s, &f, 40).unwrap();
            assert!(r.holds(1e-6), "{} / {}: {:?}", s.name, f.name, r);
            assert!(r.lower_margin > 0.0 && r.upper_margin > 0.0);
            checked += 1;
        }
    }
    assert!(checked >= 6 * settings.len());
}

#[test]
fn manufactured_error_falls_with_network_size() {
    let case = manufactured_slab().unwrap();
    let grid = uniform_grid(&case.problem.domain, 101).unwrap();
    let rule = angular_trapezoid(case.problem.kind(), 200).unwrap();
    let exact = case.exact_scalar_flux(&grid).unwrap();
    let medians: Vec<f64> = [50, 100, 200, 400]
        .into_iter()
        .map(|m| {
            median(
                (1..=5)
                    .map(|seed| {
                        let mut c = method_preset("mms-slab", false, seed).unwrap();
                        c.neurons = vec![m];
                        let s = solve_problem(&case.problem, &c).unwrap();
                        relative_l2_error(&scalar_flux(&s, &grid, &rule).unwrap(), &exact).unwrap()
                    })
                    .collect(),
            )
        })
        .collect();
    assert!(medians.windows(2).all(|w| w[1] < w[0]), "{medians:?}");
}

#[test]
fn source_iteration_does_not_diverge() {
    let slab = solve_slab_sn(&builtin_problem("slab-critical").unwrap(), &SnConfig::slab(100, 64)).unwrap();
    assert!(slab.history.len() > 50);
    assert!(slab.history[49] < slab.history[0]);
    let pin = solve_pincell_sn(&builtin_problem("pincell-refl-case1").unwrap(), &SnConfig::pincell(20, 8, 8)).unwrap();
    assert!(pin.history.len() > 50);
    assert!(pin.history[49] < pin.history[0]);
}

#[test]
fn slab_baseline_approaches_the_reference_table() {
    let p = builtin_problem("slab-critical").unwrap();
    let worst: Vec<f64> = [(50, 32), (100, 64), (300, 200)]
        .into_iter()
        .map(|(cells, k)| {
            let s = solve_slab_sn(&p, &SnConfig::slab(cells, k)).unwrap();
            let values = normalized_benchmark_values(&s.flux, SLAB_HALF_WIDTH).unwrap();
            slab_benchmark_errors(&values)[1..4]
                .iter()
                .map(|b| b.relative_error)
                .fold(0.0, f64::max)
        })
        .collect();
    assert!(worst[1] < worst[0] && worst[2] < worst[1], "{worst:?}");
}

#[test]
fn pincell_baseline_keeps_dihedral_symmetry() {
    for name in ["pincell-vac-case1", "pincell-vac-case2", "pincell-refl-case1", "pincell-refl-case2"] {
        let s = solve_pincell_sn(&builtin_problem(name).unwrap(), &SnConfig::pincell(16, 16, 8)).unwrap();
        let n = 16;
        let at = |i: usize, j: usize| s.flux.value(j * n + i, 0);
        let scale = s.flux.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for j in 0..n {
            for i in 0..n {
                assert!((at(i, j) - at(j, i)).abs() <= 1e-8 * scale, "{name} transpose at ({i},{j})");
                assert!((at(i, j) - at(n - 1 - i, j)).abs() <= 1e-8 * scale, "{name} mirror at ({i},{j})");
            }
        }
    }
}
