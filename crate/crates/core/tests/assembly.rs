use std::f64::consts::PI;

use rann::assembly::{assemble, LinearSystem, RowBlockKind, SolvedGroup};
use rann::geometry::{BoundaryCondition, CollocationSet, CollocationSpec, Face, GeometryKind};
use rann::transport::{builtin_problem, TransportProblem};
use rann::RandomFeatureBasis;

fn feature(basis: &RandomFeatureBasis, j: usize, x: &[f64]) -> (f64, Vec<f64>) {
    let w = basis.weight(j);
    let z: f64 = w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + basis.biases()[j];
    let v = (-0.5 * z * z).exp();
    (v, w.iter().map(|a| -z * v * a).collect())
}

fn omega(kind: GeometryKind, angles: &[f64]) -> [f64; 3] {
    match kind {
        GeometryKind::Slab1d => [angles[0], 0.0, 0.0],
        _ => {
            let s = (1.0 - angles[1] * angles[1]).sqrt();
            [s * angles[0].cos(), s * angles[0].sin(), angles[1]]
        }
    }
}

fn streaming(kind: GeometryKind, x: &[f64]) -> Vec<f64> {
    match kind {
        GeometryKind::Slab1d => vec![x[1], 0.0],
        GeometryKind::PinCell2d => {
            let o = omega(kind, &x[2..]);
            vec![o[0], o[1], 0.0, 0.0]
        }
        GeometryKind::Cylinder1d => unreachable!(),
    }
}

fn mirrored(kind: GeometryKind, face: Face, angles: &[f64]) -> Vec<f64> {
    match (kind, face) {
        (GeometryKind::Slab1d, _) => vec![-angles[0]],
        (_, Face::XLow | Face::XHigh) => vec![(PI - angles[0]).rem_euclid(2.0 * PI), angles[1]],
        _ => vec![(-angles[0]).rem_euclid(2.0 * PI), angles[1]],
    }
}

fn outward(face: Face) -> [f64; 3] {
    match face {
        Face::XLow => [-1.0, 0.0, 0.0],
        Face::XHigh => [1.0, 0.0, 0.0],
        Face::YLow => [0.0, -1.0, 0.0],
        Face::YHigh => [0.0, 1.0, 0.0],
    }
}

/// Row-by-row evaluation of the interior and boundary blocks for a single
/// network, written without the library's evaluation kernels.
fn naive(
    p: &TransportProblem,
    basis: &RandomFeatureBasis,
    c: &CollocationSet,
    groups: &[usize],
    solved: &[(usize, Vec<f64>)],
) -> (Vec<Vec<f64>>, Vec<f64>) {
    let kind = p.kind();
    let sd = kind.spatial_dim();
    let m = basis.len();
    let norm = if kind == GeometryKind::Slab1d { 0.5 } else { 1.0 / (4.0 * PI) };
    let ncols = m * groups.len();
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    let weights = c.interior.angular_rule.weights();
    for &g in groups {
        for slice in &c.interior.slices {
            let mut sums = vec![0.0; m];
            for (k, i) in slice.clone().enumerate() {
                for (j, s) in sums.iter_mut().enumerate() {
                    *s += weights[k] * feature(basis, j, c.interior.points.point(i)).0;
                }
            }
            for i in slice.clone() {
                let x = c.interior.points.point(i);
                let region = p.domain.region_of(&x[..sd]);
                let dir = streaming(kind, x);
                let mut row = vec![0.0; ncols];
                for (hi, &h) in groups.iter().enumerate() {
                    let kappa = p.xs.kernel(region, h, g);
                    for j in 0..m {
                        let mut v = -norm * kappa * sums[j];
                        if h == g {
                            let (f, grad) = feature(basis, j, x);
                            let d: f64 = grad.iter().zip(&dir).map(|(a, b)| a * b).sum();
                            v += d + p.xs.total(region, g) * f;
                        }
                        row[hi * m + j] = c.eta_interior * v;
                    }
                }
                let mut f = p.source_value(x, g);
                for (h, alpha) in solved {
                    let proj: f64 = sums.iter().zip(alpha).map(|(a, b)| a * b).sum();
                    f += norm * p.xs.kernel(region, *h, g) * proj;
                }
                rows.push(row);
                rhs.push(c.eta_interior * f);
            }
        }
    }
    for gi in 0..groups.len() {
        for (i, x) in c.boundary.points.iter().enumerate() {
            let face = c.boundary.faces[i];
            let o = omega(kind, &x[sd..]);
            let n = outward(face);
            let w = (o[0] * n[0] + o[1] * n[1] + o[2] * n[2]).abs().sqrt();
            let mut row = vec![0.0; ncols];
            for j in 0..m {
                let mut v = feature(basis, j, x).0;
                if c.boundary.conditions[i] == BoundaryCondition::Reflecting {
                    let mut q = x[..sd].to_vec();
                    q.extend(mirrored(kind, face, &x[sd..]));
                    v -= feature(basis, j, &q).0;
                }
                row[gi * m + j] = c.eta_boundary * w * v;
            }
            rows.push(row);
            rhs.push(0.0);
        }
    }
    (rows, rhs)
}

fn assert_matches(sys: &LinearSystem, rows: &[Vec<f64>], rhs: &[f64]) {
    assert_eq!(sys.nrows(), rows.len());
    let scale = rows.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
    for (i, row) in rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let got = sys.matrix[(i, j)];
            assert!((got - v).abs() <= 1e-12 * scale, "entry ({i},{j}): {got} vs {v}");
        }
        let fscale = rhs.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        assert!((sys.rhs[i] - rhs[i]).abs() <= 1e-12 * fscale, "rhs {i}");
    }
}

fn collocation(p: &TransportProblem, interior: Vec<usize>, boundary: Vec<usize>) -> CollocationSet {
    CollocationSet::build(
        &p.domain,
        &p.boundary,
        &CollocationSpec {
            interior,
            boundary,
            interface: vec![],
        },
        vec![],
    )
    .unwrap()
}

#[test]
fn slab_matches_naive_evaluation() {
    let mut p = builtin_problem("slab-critical").unwrap();
    p.anchors.clear();
    let c = collocation(&p, vec![7, 10], vec![6]);
    assert_eq!(c.interior.points.len(), 50);
    let basis = RandomFeatureBasis::build(20, 2, 3.0, 11).unwrap();
    let sys = assemble(&p, &[basis.clone()], &c, &[0], &[]).unwrap();
    let (rows, rhs) = naive(&p, &basis, &c, &[0], &[]);
    assert_matches(&sys, &rows, &rhs);
}

#[test]
fn reflecting_pincell_matches_naive_evaluation() {
    let p = builtin_problem("pincell-refl-case2").unwrap();
    let c = collocation(&p, vec![4, 4, 4, 3], vec![2, 3, 3]);
    assert!(c.interior.points.len() <= 50);
    let basis = RandomFeatureBasis::build(20, 4, 2.0, 5).unwrap();
    let sys = assemble(&p, &[basis.clone()], &c, &[0], &[]).unwrap();
    let (rows, rhs) = naive(&p, &basis, &c, &[0], &[]);
    assert_matches(&sys, &rows, &rhs);
}

#[test]
fn coupled_groups_match_naive_evaluation() {
    let p = builtin_problem("pincell-7g").unwrap();
    let c = collocation(&p, vec![3, 3, 3, 3], vec![2, 2, 2]);
    let basis = RandomFeatureBasis::build(5, 4, 2.0, 3).unwrap();
    let upstream: Vec<(usize, Vec<f64>)> = (0..3)
        .map(|g| (g, (0..5).map(|j| ((g * 5 + j) as f64 * 0.37).sin()).collect()))
        .collect();
    let per_net: Vec<Vec<Vec<f64>>> = upstream.iter().map(|(_, a)| vec![a.clone()]).collect();
    let solved: Vec<SolvedGroup<'_>> = upstream
        .iter()
        .zip(&per_net)
        .map(|((g, _), c)| SolvedGroup {
            group: *g,
            coefficients: c,
        })
        .collect();
    let groups = [3, 4, 5, 6];
    let sys = assemble(&p, &[basis.clone()], &c, &groups, &solved).unwrap();
    let (rows, rhs) = naive(&p, &basis, &c, &groups, &upstream);
    assert_matches(&sys, &rows, &rhs);
}

#[test]
fn interface_rows_flip_sign_with_subdomain_order() {
    let p = builtin_problem("cylinder-case2").unwrap();
    let spec = CollocationSpec {
        interior: vec![5, 4, 4],
        boundary: vec![3, 3],
        interface: vec![4, 4],
    };
    let c = CollocationSet::build(&p.domain, &p.boundary, &spec, vec![]).unwrap();
    let bases = vec![
        RandomFeatureBasis::build(6, 3, 2.0, 1).unwrap(),
        RandomFeatureBasis::build(6, 3, 3.0, 2).unwrap(),
    ];
    let a = assemble(&p, &bases, &c, &[0], &[]).unwrap();
    let mut q = p.clone();
    let (r0, r1) = q.domain.interfaces[0].regions;
    q.domain.interfaces[0].regions = (r1, r0);
    let b = assemble(&q, &bases, &c, &[0], &[]).unwrap();
    let block = a
        .row_blocks
        .iter()
        .find(|r| r.kind == RowBlockKind::Interface)
        .expect("interface rows");
    for i in 0..a.nrows() {
        let sign = if (block.start..block.start + block.len).contains(&i) { -1.0 } else { 1.0 };
        for j in 0..a.ncols() {
            assert_eq!(b.matrix[(i, j)], sign * a.matrix[(i, j)]);
        }
    }
    let alpha: Vec<f64> = (0..12).map(|j| (j as f64).cos()).collect();
    let (ra, rb) = (a.residual(&alpha).unwrap(), b.residual(&alpha).unwrap());
    assert!((ra - rb).abs() <= 1e-12 * ra);
}

#[test]
fn interior_loss_converges_with_refinement() {
    let mut p = builtin_problem("slab-critical").unwrap();
    p.anchors.clear();
    let basis = RandomFeatureBasis::build(8, 2, 2.0, 4).unwrap();
    let alpha: Vec<f64> = (0..8).map(|j| 1.0 / (1.0 + j as f64)).collect();
    let loss = |n: usize| {
        let c = collocation(&p, vec![n, n], vec![4]);
        let sys = assemble(&p, &[basis.clone()], &c, &[0], &[]).unwrap();
        let rows = c.interior.points.len();
        (0..rows)
            .map(|i| {
                let r: f64 = (0..8).map(|j| sys.matrix[(i, j)] * alpha[j]).sum::<f64>() - sys.rhs[i];
                r * r
            })
            .sum::<f64>()
    };
    let values: Vec<f64> = [20, 40, 80, 160].into_iter().map(loss).collect();
    let steps: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    assert!(steps[1] < steps[0] && steps[2] < steps[1], "{values:?}");
    assert!(steps[2] < 0.05 * values[3], "{values:?}");
}
