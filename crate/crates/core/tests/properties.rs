use faer::Mat;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rann::analysis::{angular_trapezoid, relative_l2_error, scalar_flux, uniform_grid, ScalarFluxField};
use rann::geometry::{boundary_grid, reflect_direction, trace_weight, Face, GeometryKind, Points, RegionShape};
use rann::quadrature::{gauss_legendre_rule, trapezoid_rule};
use rann::sketch::{build_sketch, SketchSpec};
use rann::solver::{multigroup_schedule, solve_lsq, FluxSolution};
use rann::transport::{builtin_problem, CrossSections, BUILTIN_PROBLEMS};
use rann::RandomFeatureBasis;

const FACES: [Face; 4] = [Face::XLow, Face::XHigh, Face::YLow, Face::YHigh];

fn residual(a: &Mat<f64>, x: &[f64], f: &[f64]) -> f64 {
    (0..a.nrows())
        .map(|i| {
            let r: f64 = (0..a.ncols()).map(|j| a[(i, j)] * x[j]).sum::<f64>() - f[i];
            r * r
        })
        .sum()
}

fn random_solution(problem: &str, m: usize, seed: u64, coeff: &[f64]) -> FluxSolution {
    let p = builtin_problem(problem).unwrap();
    let basis = RandomFeatureBasis::build(m, p.kind().dim(), 2.0, seed).unwrap();
    FluxSolution::from_parts(p, vec![basis], vec![vec![coeff.to_vec()]]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reflection_is_an_involution(phi in 0.0f64..6.283, mu in -1.0f64..1.0, f in 0usize..4) {
        let n = FACES[f].normal();
        let once = reflect_direction(GeometryKind::PinCell2d, &n, &[phi, mu]).unwrap();
        let twice = reflect_direction(GeometryKind::PinCell2d, &n, &once).unwrap();
        prop_assert_eq!(once[1], mu);
        let d = (twice[0] - phi).rem_euclid(std::f64::consts::TAU);
        prop_assert!(d < 1e-12 || std::f64::consts::TAU - d < 1e-12);
        let w0 = trace_weight(GeometryKind::PinCell2d, &n, &[phi, mu]).unwrap();
        let w1 = trace_weight(GeometryKind::PinCell2d, &n, &once).unwrap();
        prop_assert!((w0 - w1).abs() < 1e-12);
    }

    #[test]
    fn slab_reflection_negates_mu(mu in -1.0f64..1.0) {
        let n = Face::XHigh.normal();
        let once = reflect_direction(GeometryKind::Slab1d, &n, &[mu]).unwrap();
        prop_assert_eq!(once[0], -mu);
        prop_assert_eq!(reflect_direction(GeometryKind::Slab1d, &n, &once).unwrap()[0], mu);
    }

    #[test]
    fn boundary_samples_point_inward(n_s in 2usize..6, n_phi in 2usize..9, n_mu in 2usize..9) {
        let d = builtin_problem("pincell-vac-case2").unwrap().domain;
        for face in FACES {
            let pts = boundary_grid(&d, face, &[n_s, n_phi, n_mu]).unwrap();
            let n = face.normal();
            for p in pts.iter() {
                let o = GeometryKind::PinCell2d.direction(&p[2..]);
                prop_assert!(n[0] * o[0] + n[1] * o[1] <= 1e-12);
                prop_assert!(trace_weight(GeometryKind::PinCell2d, &n, &p[2..]).unwrap() >= 0.0);
            }
        }
    }

    #[test]
    fn gauss_legendre_is_exact(k in 1usize..12, lo in -3.0f64..0.0, len in 0.5f64..4.0, seed in any::<u64>()) {
        let hi = lo + len;
        let rule = gauss_legendre_rule(lo, hi, k).unwrap();
        prop_assert!(rule.weights().iter().all(|w| *w > 0.0));
        let deg = 2 * k - 1;
        let coeffs: Vec<f64> = (0..=deg).map(|i| ((seed ^ i as u64) % 1000) as f64 / 500.0 - 1.0).collect();
        let got = rule.integrate(|x| coeffs.iter().rev().fold(0.0, |acc, c| acc * x[0] + c));
        let exact: f64 = coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * (hi.powi(i as i32 + 1) - lo.powi(i as i32 + 1)) / (i as f64 + 1.0))
            .sum();
        let scale: f64 = coeffs.iter().enumerate().map(|(i, c)| c.abs() * lo.abs().max(hi.abs()).powi(i as i32 + 1)).sum();
        prop_assert!((got - exact).abs() <= 1e-12 * scale.max(1.0));
    }

    #[test]
    fn trapezoid_weights_positive(k in 2usize..40, lo in -2.0f64..2.0, len in 0.1f64..5.0) {
        let rule = trapezoid_rule(lo, lo + len, k).unwrap();
        prop_assert!(rule.weights().iter().all(|w| *w > 0.0));
        prop_assert!((rule.total_weight() - len).abs() < 1e-12 * len.max(1.0));
    }

    #[test]
    fn sketch_rows_have_fixed_structure(d_s in 1usize..4, n_s in 1usize..10, m in 1usize..20, extra in 0usize..200, seed in any::<u64>()) {
        let rows_in = n_s + extra;
        let spec = SketchSpec::new(d_s, n_s, seed).unwrap();
        let s = build_sketch(&spec, rows_in, m).unwrap();
        prop_assert_eq!(s.rows(), d_s * m);
        let v = (1.0 / n_s as f64).sqrt();
        for i in 0..s.rows() {
            let mut cols: Vec<usize> = s.row(i).map(|(k, x)| {
                assert!((x.abs() - v).abs() < 1e-15);
                k
            }).collect();
            prop_assert_eq!(cols.len(), n_s);
            prop_assert!(cols.iter().all(|&k| k < rows_in));
            cols.sort_unstable();
            cols.dedup();
            prop_assert_eq!(cols.len(), n_s);
        }
    }

    #[test]
    fn least_squares_meets_normal_equations(n in 5usize..40, extra in 0usize..30, seed in 0u64..10_000) {
        let rows = n + extra + 1;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Mat::from_fn(rows, n, |_, _| rng.random_range(-1.0..1.0));
        let f: Vec<f64> = (0..rows).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = solve_lsq(a.as_ref(), &f, 0.0).unwrap();
        let r: Vec<f64> = (0..rows).map(|i| (0..n).map(|j| a[(i, j)] * x[j]).sum::<f64>() - f[i]).collect();
        let atr: f64 = (0..n).map(|j| (0..rows).map(|i| a[(i, j)] * r[i]).sum::<f64>().powi(2)).sum::<f64>().sqrt();
        let atf: f64 = (0..n).map(|j| (0..rows).map(|i| a[(i, j)] * f[i]).sum::<f64>().powi(2)).sum::<f64>().sqrt();
        prop_assert!(atr <= 1e-8 * atf, "{} vs {}", atr, atf);
    }

    #[test]
    fn schedule_respects_dependencies(groups in 1usize..8, bits in any::<u64>()) {
        let s: Vec<Vec<f64>> = (0..groups)
            .map(|a| (0..groups).map(|b| if a == b || (bits >> ((a * 8 + b) % 64)) & 1 == 1 { 0.1 } else { 0.0 }).collect())
            .collect();
        let xs = CrossSections::new(vec![vec![1.0; groups]], vec![s]).unwrap();
        let blocks = multigroup_schedule(&xs);
        let mut seen: Vec<usize> = blocks.iter().flatten().copied().collect();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..groups).collect::<Vec<_>>());
        let position = |g: usize| blocks.iter().position(|b| b.contains(&g)).unwrap();
        for from in 0..groups {
            for to in 0..groups {
                if xs.scattering(0, from, to) > 0.0 {
                    prop_assert!(position(from) <= position(to));
                }
            }
        }
    }

    #[test]
    fn error_of_scaled_reference(a in 0.01f64..10.0, vals in proptest::collection::vec(0.1f64..5.0, 3..20)) {
        let grid = Points::from_flat(1, (0..vals.len()).map(|i| i as f64).collect()).unwrap();
        let reference = ScalarFluxField::new(grid.clone(), 1, vals.clone(), "ref").unwrap();
        let scaled = ScalarFluxField::new(grid, 1, vals.iter().map(|v| a * v).collect(), "scaled").unwrap();
        let e = relative_l2_error(&scaled, &reference).unwrap();
        prop_assert!((e - (a - 1.0).abs()).abs() < 1e-12 * a.max(1.0));
    }

    #[test]
    fn regions_cover_the_box(x in -0.63f64..0.63, y in -0.63f64..0.63) {
        for name in BUILTIN_PROBLEMS.iter().filter(|n| n.starts_with("pincell")) {
            let d = builtin_problem(name).unwrap().domain;
            let r = d.region_of(&[x, y]);
            prop_assert!(r < d.region_count());
            let inside = d.regions.iter().position(|s| !matches!(s, RegionShape::Complement) && s.contains(&[x, y]));
            prop_assert_eq!(inside.unwrap_or(d.region_count() - 1), r);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn scalar_flux_is_linear(seed in 0u64..1000, s in -2.0f64..2.0) {
        for (problem, m) in [("slab-critical", 12), ("pincell-vac-case2", 10)] {
            let a: Vec<f64> = (0..m).map(|j| ((j as u64 + seed) as f64).sin()).collect();
            let b: Vec<f64> = (0..m).map(|j| ((j as u64 * 3 + seed) as f64).cos()).collect();
            let c: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + s * y).collect();
            let sa = random_solution(problem, m, seed, &a);
            let kind = sa.problem.kind();
            let grid = uniform_grid(&sa.problem.domain, 7).unwrap();
            let rule = angular_trapezoid(kind, 9).unwrap();
            let fa = scalar_flux(&sa, &grid, &rule).unwrap();
            let fb = scalar_flux(&random_solution(problem, m, seed, &b), &grid, &rule).unwrap();
            let fc = scalar_flux(&random_solution(problem, m, seed, &c), &grid, &rule).unwrap();
            let scale = fa.values.iter().chain(&fb.values).fold(1.0f64, |acc, v| acc.max(v.abs()));
            for i in 0..fc.values.len() {
                prop_assert!((fc.values[i] - fa.values[i] - s * fb.values[i]).abs() <= 1e-12 * scale);
            }
        }
    }
}

#[test]
fn perturbing_the_minimizer_never_helps() {
    let h = |i: usize, j: usize| ((i * 7 + j * 13) as f64 * 0.731).sin() + if i == j { 2.0 } else { 0.0 };
    let a = Mat::from_fn(60, 15, h);
    let f: Vec<f64> = (0..60).map(|i| (i as f64 * 0.3).cos()).collect();
    let x = solve_lsq(a.as_ref(), &f, 0.0).unwrap();
    let best = residual(&a, &x, &f);
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    for t in 0..100 {
        let d: Vec<f64> = (0..15).map(|j| ((t * 31 + j * 7) as f64 * 1.37).sin()).collect();
        let dn = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        let y: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + 1e-3 * norm * b / dn).collect();
        assert!(residual(&a, &y, &f) >= best, "trial {t}");
    }
}

#[test]
fn seven_group_fast_groups_are_lower_triangular() {
    let p = builtin_problem("pincell-7g").unwrap();
    for region in 0..2 {
        for from in 0..3 {
            for to in 0..from {
                assert_eq!(p.xs.scattering(region, from, to), 0.0);
            }
        }
    }
    assert_eq!(multigroup_schedule(&p.xs), vec![vec![0], vec![1], vec![2], vec![3, 4, 5, 6]]);
}
