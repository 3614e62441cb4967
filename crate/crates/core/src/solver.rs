//! Least-squares solves, multigroup ordering and the end-to-end driver.

use std::collections::BinaryHeap;
use std::cmp::Reverse;
use std::time::Instant;

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::householder::{
    apply_block_householder_sequence_transpose_on_the_left_in_place_scratch,
    apply_block_householder_sequence_transpose_on_the_left_in_place_with_conj,
};
use faer::linalg::qr::no_pivoting::factor::{qr_in_place, qr_in_place_scratch, recommended_block_size};
use faer::{get_global_parallelism, Conj, Mat, MatRef};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::assembly::{assemble, owner, LinearSystem, SolvedGroup};
use crate::basis::RandomFeatureBasis;
use crate::error::{invalid, RannError, Result};
use crate::geometry::{CollocationSet, CollocationSpec};
use crate::sketch::{apply_sketch, build_sketch, SketchSpec, SparseSketch};
use crate::transport::{CrossSections, TransportProblem};

/// Applies `Q^T` of a Householder factorization stored in `basis`/`coeff` to `rhs`.
fn apply_qt(basis: MatRef<'_, f64>, coeff: MatRef<'_, f64>, rhs: &mut Mat<f64>) {
    let par = get_global_parallelism();
    let mut mem = MemBuffer::new(apply_block_householder_sequence_transpose_on_the_left_in_place_scratch::<f64>(
        basis.nrows(),
        coeff.nrows(),
        rhs.ncols(),
    ));
    apply_block_householder_sequence_transpose_on_the_left_in_place_with_conj(
        basis,
        coeff,
        Conj::No,
        rhs.as_mut(),
        par,
        MemStack::new(&mut mem),
    );
}

/// Reduces a tall `N x M` problem to `min |R alpha - c|` with `R` upper
/// triangular `M x M`, by unpivoted blocked Householder QR in place.
fn reduce_tall(mut a: Mat<f64>, rhs: &[f64]) -> (Mat<f64>, Vec<f64>) {
    let (n, m) = a.shape();
    let par = get_global_parallelism();
    let block = recommended_block_size::<f64>(n, m);
    let mut coeff = Mat::<f64>::zeros(block, m.min(n));
    {
        let mut mem = MemBuffer::new(qr_in_place_scratch::<f64>(n, m, block, par, Default::default()));
        qr_in_place(a.as_mut(), coeff.as_mut(), par, MemStack::new(&mut mem), Default::default());
    }
    let r = Mat::from_fn(m, m, |i, j| if i <= j { a[(i, j)] } else { 0.0 });
    for j in 0..m {
        for i in 0..j {
            a[(i, j)] = 0.0;
        }
        a[(j, j)] = 1.0;
    }
    let mut b = Mat::from_fn(n, 1, |i, _| rhs[i]);
    apply_qt(a.as_ref(), coeff.as_ref(), &mut b);
    let c = (0..m).map(|i| b[(i, 0)]).collect();
    (r, c)
}

/// Numerical rank threshold relative to the largest pivot.
fn rank_tolerance(n: usize, m: usize) -> f64 {
    n.max(m) as f64 * f64::EPSILON
}

/// Minimizer of `|A alpha - F|^2 + lambda |alpha|^2`.
///
/// With `lambda = 0` rank deficiency is resolved by the minimum-norm solution
/// (complete orthogonal decomposition on top of column-pivoted QR).
pub fn solve_lsq(matrix: MatRef<'_, f64>, rhs: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let (n, m) = matrix.shape();
    if n == 0 || m == 0 {
        return Err(invalid("least-squares system is empty"));
    }
    if rhs.len() != n {
        return Err(RannError::DimensionMismatch {
            what: "right-hand side length",
            expected: n,
            actual: rhs.len(),
        });
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(invalid(format!("Tikhonov parameter must be >= 0, got {lambda}")));
    }
    let finite = rhs.iter().all(|v| v.is_finite())
        && matrix.col_iter().all(|c| c.iter().all(|v| v.is_finite()));
    if !finite {
        return Err(RannError::NonFinite("least-squares system"));
    }

    let (r, c) = if n > m {
        reduce_tall(matrix.to_owned(), rhs)
    } else {
        (matrix.to_owned(), rhs.to_vec())
    };
    let (t, d) = if lambda > 0.0 {
        let rows = r.nrows();
        let s = lambda.sqrt();
        let t = Mat::from_fn(rows + m, m, |i, j| {
            if i < rows {
                r[(i, j)]
            } else if i - rows == j {
                s
            } else {
                0.0
            }
        });
        let mut d = c;
        d.resize(rows + m, 0.0);
        (t, d)
    } else {
        (r, c)
    };

    let qr = t.col_piv_qr();
    let rr = qr.R();
    let size = t.nrows().min(m);
    let mut dq = Mat::from_fn(t.nrows(), 1, |i, _| d[i]);
    apply_qt(qr.Q_basis(), qr.Q_coeff(), &mut dq);
    let top = rr[(0, 0)].abs();
    let tol = rank_tolerance(n, m) * top;
    let rank = if top == 0.0 {
        0
    } else {
        (0..size).take_while(|&k| rr[(k, k)].abs() > tol).count()
    };
    let mut y = vec![0.0; m];
    if rank == m {
        for i in (0..m).rev() {
            let mut s = dq[(i, 0)];
            for j in i + 1..m {
                s -= rr[(i, j)] * y[j];
            }
            y[i] = s / rr[(i, i)];
        }
    } else if rank > 0 {
        // Minimum-norm solution of R[..rank, ..] y = (Q^T d)[..rank] via the QR
        // of its transpose: R_k = U^T Z^T.
        let w = Mat::from_fn(m, rank, |i, j| rr[(j, i)]);
        let wq = w.qr();
        let u = wq.R();
        let z = wq.compute_thin_Q();
        let mut tvec = vec![0.0; rank];
        for i in 0..rank {
            let mut s = dq[(i, 0)];
            for j in 0..i {
                s -= u[(j, i)] * tvec[j];
            }
            tvec[i] = s / u[(i, i)];
        }
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = (0..rank).map(|j| z[(i, j)] * tvec[j]).sum();
        }
    }
    let (fwd, _) = qr.P().arrays();
    let mut alpha = vec![0.0; m];
    for (k, &col) in fwd.iter().enumerate() {
        alpha[col] = y[k];
    }
    if alpha.iter().any(|v| !v.is_finite()) {
        return Err(RannError::NonFinite("least-squares solution"));
    }
    Ok(alpha)
}

pub fn solve_system(system: &LinearSystem, lambda: f64) -> Result<Vec<f64>> {
    solve_lsq(system.matrix.as_ref(), &system.rhs, lambda)
}

/// Blocks of groups in solve order: strongly connected components of the
/// scattering graph (`g' -> g` when some region has `sigma_s(g' -> g) > 0`),
/// topologically sorted, ties broken by the smallest group index.
pub fn multigroup_schedule(xs: &CrossSections) -> Vec<Vec<usize>> {
    let g = xs.groups();
    let mut graph = DiGraph::<usize, ()>::new();
    let nodes: Vec<_> = (0..g).map(|i| graph.add_node(i)).collect();
    for from in 0..g {
        for to in 0..g {
            if from != to && (0..xs.regions()).any(|r| xs.scattering(r, from, to) > 0.0) {
                graph.add_edge(nodes[from], nodes[to], ());
            }
        }
    }
    let mut comps: Vec<Vec<usize>> = tarjan_scc(&graph)
        .into_iter()
        .map(|c| {
            let mut v: Vec<usize> = c.into_iter().map(|n| graph[n]).collect();
            v.sort_unstable();
            v
        })
        .collect();
    comps.sort_by_key(|c| c[0]);
    let mut comp_of = vec![0; g];
    for (ci, c) in comps.iter().enumerate() {
        for &v in c {
            comp_of[v] = ci;
        }
    }
    let nc = comps.len();
    let mut succ = vec![Vec::new(); nc];
    let mut indegree = vec![0usize; nc];
    for e in graph.edge_indices() {
        let (a, b) = graph.edge_endpoints(e).expect("edge exists");
        let (ca, cb) = (comp_of[graph[a]], comp_of[graph[b]]);
        if ca != cb && !succ[ca].contains(&cb) {
            succ[ca].push(cb);
            indegree[cb] += 1;
        }
    }
    let mut ready: BinaryHeap<Reverse<usize>> =
        (0..nc).filter(|&c| indegree[c] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(nc);
    while let Some(Reverse(c)) = ready.pop() {
        order.push(comps[c].clone());
        for &s in &succ[c] {
            indegree[s] -= 1;
            if indegree[s] == 0 {
                ready.push(Reverse(s));
            }
        }
    }
    order
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NetworkLayout {
    /// One network over the whole domain.
    Single,
    /// One network per material region, coupled by interface penalties.
    PerRegion,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct SolveConfig {
    /// Neurons per network; a single entry is shared by all networks.
    pub neurons: Vec<usize>,
    /// Uniform half-width per network; a single entry is shared.
    pub bounds: Vec<f64>,
    pub seed: u64,
    pub layout: NetworkLayout,
    pub collocation: CollocationSpec,
    pub sketch: Option<SketchSpec>,
    pub tikhonov: f64,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct BlockDiagnostics {
    pub groups: Vec<usize>,
    pub rows: usize,
    pub cols: usize,
    pub solved_rows: usize,
    /// `|A alpha - F|^2` on the unsketched system.
    pub residual: f64,
    pub assembly_seconds: f64,
    pub sketch_seconds: f64,
    pub solve_seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq, serde::Serialize)]
pub struct Diagnostics {
    pub blocks: Vec<BlockDiagnostics>,
    pub sketched: bool,
    pub collocation_seconds: f64,
    pub total_seconds: f64,
}

impl Diagnostics {
    pub fn residual(&self) -> f64 {
        self.blocks.iter().map(|b| b.residual).sum()
    }

    pub fn assembly_seconds(&self) -> f64 {
        self.blocks.iter().map(|b| b.assembly_seconds).sum()
    }

    pub fn solve_seconds(&self) -> f64 {
        self.blocks.iter().map(|b| b.sketch_seconds + b.solve_seconds).sum()
    }
}

/// Trained coefficients together with the networks and problem they belong to.
#[derive(Clone, Debug)]
pub struct FluxSolution {
    pub problem: TransportProblem,
    pub bases: Vec<RandomFeatureBasis>,
    /// `[group][subdomain]`.
    pub coefficients: Vec<Vec<Vec<f64>>>,
    pub diagnostics: Diagnostics,
}

impl FluxSolution {
    pub fn from_parts(
        problem: TransportProblem,
        bases: Vec<RandomFeatureBasis>,
        coefficients: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        if coefficients.len() != problem.groups() {
            return Err(RannError::DimensionMismatch {
                what: "coefficient groups",
                expected: problem.groups(),
                actual: coefficients.len(),
            });
        }
        for per_group in &coefficients {
            if per_group.len() != bases.len()
                || per_group.iter().zip(&bases).any(|(c, b)| c.len() != b.len())
            {
                return Err(invalid("coefficient lengths do not match the bases"));
            }
            if per_group.iter().flatten().any(|v| !v.is_finite()) {
                return Err(RannError::NonFinite("coefficients"));
            }
        }
        Ok(Self {
            problem,
            bases,
            coefficients,
            diagnostics: Diagnostics::default(),
        })
    }

    pub fn groups(&self) -> usize {
        self.coefficients.len()
    }

    fn check_point(&self, point: &[f64]) -> Result<usize> {
        let kind = self.problem.kind();
        if point.len() != kind.dim() {
            return Err(RannError::DimensionMismatch {
                what: "point dimension",
                expected: kind.dim(),
                actual: point.len(),
            });
        }
        if !self.problem.domain.contains_spatial(&point[..kind.spatial_dim()]) {
            return Err(RannError::OutsideDomain(point.to_vec()));
        }
        Ok(owner(&self.problem, self.bases.len(), point))
    }

    /// `Psi_rho(x) = sum_j alpha_j psi_j(x)` for the network owning `x`.
    pub fn angular_flux(&self, point: &[f64], group: usize) -> Result<f64> {
        let k = self.check_point(point)?;
        let alpha = self
            .coefficients
            .get(group)
            .ok_or_else(|| invalid(format!("group {group} out of range")))?;
        Ok(self.bases[k].combine(point, &alpha[k]))
    }

    /// Angular flux with an explicit network, e.g. to probe both sides of an interface.
    pub fn angular_flux_on(&self, subdomain: usize, point: &[f64], group: usize) -> f64 {
        self.bases[subdomain].combine(point, &self.coefficients[group][subdomain])
    }

    pub fn evaluate_angular_flux(&self, points: &crate::geometry::Points, group: usize) -> Result<Vec<f64>> {
        points.iter().map(|p| self.angular_flux(p, group)).collect()
    }
}

fn expand<T: Copy>(values: &[T], n: usize, what: &str) -> Result<Vec<T>> {
    match values.len() {
        1 => Ok(vec![values[0]; n]),
        len if len == n => Ok(values.to_vec()),
        len => Err(invalid(format!("{what}: expected 1 or {n} entries, got {len}"))),
    }
}

/// Networks for a configuration; network `k` is seeded with `seed + k`.
pub fn build_bases(problem: &TransportProblem, config: &SolveConfig) -> Result<Vec<RandomFeatureBasis>> {
    let count = match config.layout {
        NetworkLayout::Single => 1,
        NetworkLayout::PerRegion => problem.domain.region_count(),
    };
    let neurons = expand(&config.neurons, count, "neurons")?;
    let bounds = expand(&config.bounds, count, "bounds")?;
    (0..count)
        .map(|k| {
            RandomFeatureBasis::build(
                neurons[k],
                problem.kind().dim(),
                bounds[k],
                config.seed.wrapping_add(k as u64),
            )
        })
        .collect()
}

/// Builds networks and collocation, then assembles and solves each block of
/// the multigroup schedule in order.
pub fn solve_problem(problem: &TransportProblem, config: &SolveConfig) -> Result<FluxSolution> {
    let start = Instant::now();
    if !(config.tikhonov >= 0.0) {
        return Err(invalid("Tikhonov parameter must be >= 0"));
    }
    let bases = build_bases(problem, config)?;
    let t0 = Instant::now();
    let mut spec = config.collocation.clone();
    if config.layout == NetworkLayout::Single {
        spec.interface.clear();
    } else if !problem.domain.interfaces.is_empty() && spec.interface.is_empty() {
        return Err(invalid("local networks need interface collocation counts"));
    }
    let colloc = CollocationSet::build(&problem.domain, &problem.boundary, &spec, problem.anchors.clone())?;
    let collocation_seconds = t0.elapsed().as_secs_f64();

    let g = problem.groups();
    let mut coefficients: Vec<Option<Vec<Vec<f64>>>> = vec![None; g];
    let mut diagnostics = Diagnostics {
        sketched: config.sketch.is_some(),
        collocation_seconds,
        ..Default::default()
    };
    let mut sketch_cache: Option<SparseSketch> = None;
    for block in multigroup_schedule(&problem.xs) {
        let solved: Vec<SolvedGroup<'_>> = coefficients
            .iter()
            .enumerate()
            .filter_map(|(gp, c)| {
                c.as_ref().and_then(|c| {
                    let feeds = block.iter().any(|&gg| {
                        (0..problem.xs.regions()).any(|r| problem.xs.kernel(r, gp, gg) > 0.0)
                    });
                    feeds.then_some(SolvedGroup {
                        group: gp,
                        coefficients: c,
                    })
                })
            })
            .collect();
        let t = Instant::now();
        let system = assemble(problem, &bases, &colloc, &block, &solved)?;
        let assembly_seconds = t.elapsed().as_secs_f64();

        let t = Instant::now();
        let sketched = match &config.sketch {
            Some(spec) => {
                let reuse = sketch_cache
                    .as_ref()
                    .is_some_and(|s| s.input_rows() == system.nrows() && s.rows() == spec.oversampling * system.ncols());
                if !reuse {
                    sketch_cache = Some(build_sketch(spec, system.nrows(), system.ncols())?);
                }
                Some(apply_sketch(sketch_cache.as_ref().expect("sketch built"), &system)?)
            }
            None => None,
        };
        let sketch_seconds = t.elapsed().as_secs_f64();

        let t = Instant::now();
        let target = sketched.as_ref().unwrap_or(&system);
        let alpha = solve_system(target, config.tikhonov)?;
        let solve_seconds = t.elapsed().as_secs_f64();
        let residual = system.residual(&alpha)?;
        drop(solved);

        for (gi, &grp) in block.iter().enumerate() {
            let per_sub: Vec<Vec<f64>> = system
                .col_blocks
                .iter()
                .skip(gi * bases.len())
                .take(bases.len())
                .map(|cb| alpha[cb.range()].to_vec())
                .collect();
            coefficients[grp] = Some(per_sub);
        }
        diagnostics.blocks.push(BlockDiagnostics {
            groups: block.clone(),
            rows: system.nrows(),
            cols: system.ncols(),
            solved_rows: target.nrows(),
            residual,
            assembly_seconds,
            sketch_seconds,
            solve_seconds,
        });
        log::info!(
            "groups {:?}: {}x{} system, residual {:.3e}, assembly {:.2}s, solve {:.2}s",
            block,
            system.nrows(),
            system.ncols(),
            residual,
            assembly_seconds,
            sketch_seconds + solve_seconds
        );
    }
    diagnostics.total_seconds = start.elapsed().as_secs_f64();
    let coefficients = coefficients
        .into_iter()
        .map(|c| c.ok_or_else(|| invalid("schedule skipped a group")))
        .collect::<Result<Vec<_>>>()?;
    let mut solution = FluxSolution::from_parts(problem.clone(), bases, coefficients)?;
    solution.diagnostics = diagnostics;
    Ok(solution)
}
