//! Scalar fluxes, error metrics, manufactured solutions and graph-norm checks.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;

use crate::assembly::{angular_moments, owner};
use crate::error::{invalid, RannError, Result};
use crate::geometry::{GeometryKind, PhaseSpaceDomain, Points, RegionShape};
use crate::quadrature::{gauss_legendre_rule, tensor_rule, trapezoid_rule, QuadratureRule};
use crate::solver::FluxSolution;
use crate::transport::{
    pincell_domain, slab_domain, streaming_direction, CrossSections, SourceTerm, TransportProblem,
    PINCELL_HALF_WIDTH, PIN_RADIUS, SLAB_HALF_WIDTH,
};
use crate::geometry::{BoundaryCondition, Face};

/// Default nodes per angular axis when integrating on a test grid.
pub const DEFAULT_ANGULAR_NODES: usize = 64;

/// Normalized scalar flux of the critical slab at `x/b = 0, 0.25, 0.5, 0.75, 1`.
pub const SLAB_BENCHMARK: [(f64, f64); 5] = [
    (0.0, 1.0),
    (0.25, 0.947144),
    (0.5, 0.793726),
    (0.75, 0.553290),
    (1.0, 0.214192),
];

/// Scalar flux values on a spatial grid, `values[point * groups + group]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarFluxField {
    pub grid: Points,
    pub groups: usize,
    pub values: Vec<f64>,
    pub label: String,
}

impl ScalarFluxField {
    pub fn new(grid: Points, groups: usize, values: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if groups == 0 || values.len() != grid.len() * groups {
            return Err(invalid(format!(
                "flux field has {} values for {} points x {groups} groups",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(RannError::NonFinite("scalar flux"));
        }
        Ok(Self {
            grid,
            groups,
            values,
            label: label.into(),
        })
    }

    pub fn value(&self, point: usize, group: usize) -> f64 {
        self.values[point * self.groups + group]
    }

    pub fn group_values(&self, group: usize) -> Vec<f64> {
        (0..self.grid.len()).map(|i| self.value(i, group)).collect()
    }

    /// Divides every value by `scale`.
    pub fn normalized(&self, scale: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v /= scale);
        out
    }
}

/// Uniform spatial test grid: `n` points including endpoints in 1D, `n x n`
/// cell centres in 2D.
pub fn uniform_grid(domain: &PhaseSpaceDomain, n: usize) -> Result<Points> {
    let sd = domain.kind.spatial_dim();
    if n < 2 {
        return Err(invalid("test grid needs at least 2 points per axis"));
    }
    let mut pts = Points::new(sd);
    if sd == 1 {
        let (lo, hi) = domain.spatial_box[0];
        let h = (hi - lo) / (n - 1) as f64;
        for i in 0..n {
            pts.push(&[if i == n - 1 { hi } else { lo + h * i as f64 }]);
        }
    } else {
        let axes: Vec<Vec<f64>> = domain
            .spatial_box
            .iter()
            .map(|(lo, hi)| {
                let h = (hi - lo) / n as f64;
                (0..n).map(|i| lo + h * (i as f64 + 0.5)).collect()
            })
            .collect();
        for &x in &axes[0] {
            for &y in &axes[1] {
                pts.push(&[x, y]);
            }
        }
    }
    Ok(pts)
}

/// Tensor trapezoid rule with `k` nodes per angular axis over the angular box.
pub fn angular_trapezoid(kind: GeometryKind, k: usize) -> Result<QuadratureRule> {
    let rules = kind
        .angular_box()
        .into_iter()
        .map(|(lo, hi)| trapezoid_rule(lo, hi, k))
        .collect::<Result<Vec<_>>>()?;
    tensor_rule(&rules)
}

fn check_rule(kind: GeometryKind, rule: &QuadratureRule) -> Result<()> {
    if rule.dim() != kind.angular_dim() {
        return Err(RannError::RuleMismatch(format!(
            "rule has {} axes, geometry needs {}",
            rule.dim(),
            kind.angular_dim()
        )));
    }
    let measure = kind.angular_measure();
    if (rule.total_weight() - measure).abs() > 1e-10 * measure {
        return Err(RannError::RuleMismatch(format!(
            "rule weights sum to {}, angular box measures {measure}",
            rule.total_weight()
        )));
    }
    Ok(())
}

/// `Phi_g(r_i) = sum_k beta_k Psi_g(r_i, Omega_k)` for every group.
pub fn scalar_flux(solution: &FluxSolution, grid: &Points, rule: &QuadratureRule) -> Result<ScalarFluxField> {
    let problem = &solution.problem;
    let kind = problem.kind();
    check_rule(kind, rule)?;
    if grid.dim() != kind.spatial_dim() {
        return Err(RannError::DimensionMismatch {
            what: "test grid dimension",
            expected: kind.spatial_dim(),
            actual: grid.dim(),
        });
    }
    if let Some(p) = grid.iter().find(|p| !problem.domain.contains_spatial(p)) {
        return Err(RannError::OutsideDomain(p.to_vec()));
    }
    let groups = solution.groups();
    let evaluators: Vec<MomentEvaluator> = solution
        .bases
        .iter()
        .map(|b| MomentEvaluator::new(b, kind, rule))
        .collect();
    let owners: Vec<usize> = grid
        .iter()
        .map(|r| {
            let mut probe = r.to_vec();
            probe.resize(kind.dim(), 0.0);
            owner(problem, solution.bases.len(), &probe)
        })
        .collect();
    let mut values = vec![0.0; grid.len() * groups];
    for (k, (basis, eval)) in solution.bases.iter().zip(&evaluators).enumerate() {
        let idx: Vec<usize> = (0..grid.len()).filter(|&i| owners[i] == k).collect();
        let pts: Vec<&[f64]> = idx.iter().map(|&i| grid.point(i)).collect();
        let moments = eval.moments_batch(basis, kind, &pts, rule);
        for (&i, s) in idx.iter().zip(&moments) {
            for g in 0..groups {
                values[i * groups + g] = s.iter().zip(&solution.coefficients[g][k]).map(|(a, b)| a * b).sum();
            }
        }
    }
    ScalarFluxField::new(grid.clone(), groups, values, problem.name.clone())
}

/// Splits a two-axis rule into factors `w_(i l) = u_i v_l` over nodes
/// `(p_i, q_l)` listed with the last axis fastest.
fn tensor_factors(rule: &QuadratureRule) -> Option<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> {
    if rule.dim() != 2 || rule.is_empty() {
        return None;
    }
    let p0 = rule.node(0)[0];
    let kq = (0..rule.len()).take_while(|&k| rule.node(k)[0] == p0).count();
    if kq == 0 || rule.len() % kq != 0 {
        return None;
    }
    let kp = rule.len() / kq;
    let w = rule.weights();
    if w[0] == 0.0 {
        return None;
    }
    let p: Vec<f64> = (0..kp).map(|i| rule.node(i * kq)[0]).collect();
    let q: Vec<f64> = (0..kq).map(|l| rule.node(l)[1]).collect();
    let u: Vec<f64> = (0..kp).map(|i| w[i * kq] / w[0]).collect();
    let v: Vec<f64> = w[..kq].to_vec();
    for i in 0..kp {
        for l in 0..kq {
            let n = rule.node(i * kq + l);
            if n[0] != p[i] || n[1] != q[l] || (u[i] * v[l] - w[i * kq + l]).abs() > 1e-14 * w[i * kq + l].abs().max(1e-300) {
                return None;
            }
        }
    }
    Some((p, u, q, v))
}

/// Angular moments of a Gaussian network. On a tensor rule the activation
/// factors as `exp(-(a+p+q)^2/2) = exp(-(a+p)^2/2) exp(-q^2/2 - a q) exp(-p q)`
/// with the last factor independent of the location.
enum MomentEvaluator {
    Direct,
    Tensor {
        p_nodes: Vec<f64>,
        p_weights: Vec<f64>,
        q_nodes: Vec<f64>,
        q_weights: Vec<f64>,
        /// `exp(-p_jk q_jl)` per neuron, `[j][k][l]`.
        cross: Vec<f64>,
    },
}

impl MomentEvaluator {
    fn new(basis: &crate::basis::RandomFeatureBasis, kind: GeometryKind, rule: &QuadratureRule) -> Self {
        let sd = kind.spatial_dim();
        let Some((p_nodes, p_weights, q_nodes, q_weights)) = tensor_factors(rule) else {
            return Self::Direct;
        };
        let (kp, kq) = (p_nodes.len(), q_nodes.len());
        let m = basis.len();
        let mut cross = vec![0.0; m * kp * kq];
        for j in 0..m {
            let w = basis.weight(j);
            for k in 0..kp {
                for l in 0..kq {
                    cross[(j * kp + k) * kq + l] = (-(w[sd] * p_nodes[k]) * (w[sd + 1] * q_nodes[l])).exp();
                }
            }
        }
        if cross.iter().any(|c| !c.is_finite()) {
            return Self::Direct;
        }
        Self::Tensor {
            p_nodes,
            p_weights,
            q_nodes,
            q_weights,
            cross,
        }
    }

    #[cfg(test)]
    fn moments(
        &self,
        basis: &crate::basis::RandomFeatureBasis,
        kind: GeometryKind,
        spatial: &[f64],
        rule: &QuadratureRule,
    ) -> Vec<f64> {
        self.moments_batch(basis, kind, &[spatial], rule).remove(0)
    }

    /// Moments at many locations, `[point][neuron]`.
    fn moments_batch(
        &self,
        basis: &crate::basis::RandomFeatureBasis,
        kind: GeometryKind,
        points: &[&[f64]],
        rule: &QuadratureRule,
    ) -> Vec<Vec<f64>> {
        let Self::Tensor {
            p_nodes,
            p_weights,
            q_nodes,
            q_weights,
            cross,
        } = self
        else {
            return points
                .par_iter()
                .map(|r| angular_moments(basis, kind, r, rule))
                .collect();
        };
        let sd = kind.spatial_dim();
        let (kp, kq) = (p_nodes.len(), q_nodes.len());
        let m = basis.len();
        points
            .par_iter()
            .map(|r| {
                let mut u = vec![0.0; kp];
                let mut v = vec![0.0; kq];
                let mut acc = vec![0.0; kq];
                let row: Vec<f64> = (0..m)
                    .map(|j| {
                        let w = basis.weight(j);
                        let a = (0..sd).map(|d| w[d] * r[d]).sum::<f64>() + basis.biases()[j];
                        for k in 0..kp {
                            let z = a + w[sd] * p_nodes[k];
                            u[k] = p_weights[k] * (-0.5 * z * z).exp();
                        }
                        for l in 0..kq {
                            let q = w[sd + 1] * q_nodes[l];
                            v[l] = q_weights[l] * (-0.5 * q * q - a * q).exp();
                        }
                        acc.iter_mut().for_each(|x| *x = 0.0);
                        let t = &cross[j * kp * kq..(j + 1) * kp * kq];
                        for (uk, tk) in u.iter().zip(t.chunks_exact(kq)) {
                            for (x, y) in acc.iter_mut().zip(tk) {
                                *x += uk * y;
                            }
                        }
                        acc.iter().zip(&v).map(|(x, y)| x * y).sum()
                    })
                    .collect();
                if row.iter().all(|x| x.is_finite()) {
                    row
                } else {
                    angular_moments(basis, kind, r, rule)
                }
            })
            .collect()
    }
}

fn check_same_grid(a: &ScalarFluxField, b: &ScalarFluxField) -> Result<()> {
    if a.grid.dim() != b.grid.dim() || a.grid.len() != b.grid.len() || a.groups != b.groups {
        return Err(invalid("flux fields live on different grids"));
    }
    let same = a
        .grid
        .flat()
        .iter()
        .zip(b.grid.flat())
        .all(|(x, y)| (x - y).abs() <= 1e-9 * (1.0 + x.abs()));
    if !same {
        return Err(invalid("flux fields live on different grids"));
    }
    Ok(())
}

fn rel_l2(pred: impl Iterator<Item = (f64, f64)>) -> Result<f64> {
    let (num, den) = pred.fold((0.0, 0.0), |(n, d), (p, r)| (n + (p - r) * (p - r), d + r * r));
    if den == 0.0 {
        return Err(invalid("reference flux has zero norm"));
    }
    Ok((num / den).sqrt())
}

/// `sqrt(sum (pred - ref)^2 / sum ref^2)` over all points and groups.
pub fn relative_l2_error(predicted: &ScalarFluxField, reference: &ScalarFluxField) -> Result<f64> {
    check_same_grid(predicted, reference)?;
    rel_l2(predicted.values.iter().copied().zip(reference.values.iter().copied()))
}

/// Relative l2 error restricted to one group.
pub fn relative_l2_error_group(
    predicted: &ScalarFluxField,
    reference: &ScalarFluxField,
    group: usize,
) -> Result<f64> {
    check_same_grid(predicted, reference)?;
    if group >= predicted.groups {
        return Err(invalid(format!("group {group} out of range")));
    }
    rel_l2(predicted.group_values(group).into_iter().zip(reference.group_values(group)))
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct BenchmarkPoint {
    pub x_over_b: f64,
    pub normalized_flux: f64,
    pub reference: f64,
    pub relative_error: f64,
}

/// Normalized flux `Phi(x)/Phi(0)` against the slab reference table.
pub fn slab_benchmark_errors(normalized: &[(f64, f64)]) -> Vec<BenchmarkPoint> {
    normalized
        .iter()
        .zip(SLAB_BENCHMARK)
        .map(|(&(x, v), (_, r))| BenchmarkPoint {
            x_over_b: x,
            normalized_flux: v,
            reference: r,
            relative_error: (v - r).abs() / r,
        })
        .collect()
}

/// Pointwise benchmark comparison for a critical-slab solution; the scalar
/// flux is integrated with a `k`-node trapezoid rule in `mu`.
pub fn pointwise_benchmark_error(solution: &FluxSolution, k: usize) -> Result<Vec<BenchmarkPoint>> {
    if solution.problem.kind() != GeometryKind::Slab1d {
        return Err(invalid("benchmark table applies to slab geometry"));
    }
    let b = solution.problem.domain.spatial_box[0].1;
    let rows: Vec<Vec<f64>> = SLAB_BENCHMARK.iter().map(|(f, _)| vec![f * b]).collect();
    let grid = Points::from_rows(1, &rows)?;
    let rule = angular_trapezoid(GeometryKind::Slab1d, k)?;
    let phi = scalar_flux(solution, &grid, &rule)?;
    let centre = phi.value(0, 0);
    if centre == 0.0 {
        return Err(invalid("scalar flux vanishes at the normalization point"));
    }
    let normalized: Vec<(f64, f64)> = SLAB_BENCHMARK
        .iter()
        .enumerate()
        .map(|(i, (f, _))| (*f, phi.value(i, 0) / centre))
        .collect();
    let mut out = slab_benchmark_errors(&normalized);
    out[0].relative_error = 0.0;
    Ok(out)
}

/// Separable closed-form angular flux `s(r) g(Omega)` with spatial gradient.
#[derive(Clone)]
pub struct SeparableFunction {
    pub name: String,
    /// `(s(r), grad s(r))`.
    pub spatial: Arc<dyn Fn(&[f64]) -> (f64, [f64; 2]) + Send + Sync>,
    /// `g` on the angular coordinates.
    pub angular: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for SeparableFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SeparableFunction").field("name", &self.name).finish()
    }
}

impl SeparableFunction {
    pub fn value(&self, kind: GeometryKind, point: &[f64]) -> f64 {
        let sd = kind.spatial_dim();
        (self.spatial)(&point[..sd]).0 * (self.angular)(&point[sd..])
    }

    /// `Omega . grad Psi` in Cartesian streaming form.
    pub fn streaming(&self, kind: GeometryKind, point: &[f64]) -> f64 {
        let sd = kind.spatial_dim();
        let (_, grad) = (self.spatial)(&point[..sd]);
        let omega = kind.direction(&point[sd..]);
        let dot: f64 = (0..sd).map(|a| omega[a] * grad[a]).sum();
        dot * (self.angular)(&point[sd..])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ManufacturedChoice {
    /// `(b^2 - x^2)(2 + mu) / b^2` on the slab.
    SlabQuadratic,
    /// `cos(pi x / 2b) cos(pi y / 2b) (2 + mu cos phi)` on the pin cell.
    PinCellCosine,
}

impl ManufacturedChoice {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "a" | "slab" | "slab-quadratic" => Ok(Self::SlabQuadratic),
            "b" | "pincell" | "pincell-cosine" => Ok(Self::PinCellCosine),
            _ => Err(RannError::Unknown {
                kind: "manufactured case",
                name: name.into(),
            }),
        }
    }
}

/// Problem whose source is derived from a known exact angular flux.
#[derive(Clone, Debug)]
pub struct ManufacturedCase {
    pub choice: ManufacturedChoice,
    pub problem: TransportProblem,
    pub exact: SeparableFunction,
    /// `int g dOmega` from the reference quadrature.
    pub angular_integral: f64,
}

/// Nodes per angular axis of the reference quadrature for derived sources.
pub const REFERENCE_ANGULAR_NODES: usize = 512;

fn slab_quadratic(b: f64) -> SeparableFunction {
    SeparableFunction {
        name: "slab-quadratic".into(),
        spatial: Arc::new(move |r| ((b * b - r[0] * r[0]) / (b * b), [-2.0 * r[0] / (b * b), 0.0])),
        angular: Arc::new(|a| 2.0 + a[0]),
    }
}

fn pincell_cosine(b: f64) -> SeparableFunction {
    let k = PI / (2.0 * b);
    SeparableFunction {
        name: "pincell-cosine".into(),
        spatial: Arc::new(move |r| {
            let (cx, cy) = ((k * r[0]).cos(), (k * r[1]).cos());
            (cx * cy, [-k * (k * r[0]).sin() * cy, -k * cx * (k * r[1]).sin()])
        }),
        angular: Arc::new(|a| 2.0 + a[1] * a[0].cos()),
    }
}

/// Builds the manufactured problem: vacuum faces, source `Q = D Psi + I Psi`
/// with the angular integral from a 512-node-per-axis trapezoid rule.
pub fn make_manufactured_case(
    kind: GeometryKind,
    xs: CrossSections,
    choice: ManufacturedChoice,
) -> Result<ManufacturedCase> {
    let (domain, exact, faces): (PhaseSpaceDomain, SeparableFunction, Vec<Face>) = match (kind, choice) {
        (GeometryKind::Slab1d, ManufacturedChoice::SlabQuadratic) => (
            slab_domain(SLAB_HALF_WIDTH)?,
            slab_quadratic(SLAB_HALF_WIDTH),
            vec![Face::XLow, Face::XHigh],
        ),
        (GeometryKind::PinCell2d, ManufacturedChoice::PinCellCosine) => (
            pincell_domain(PINCELL_HALF_WIDTH, RegionShape::Disk { radius: PIN_RADIUS })?,
            pincell_cosine(PINCELL_HALF_WIDTH),
            vec![Face::XLow, Face::XHigh, Face::YLow, Face::YHigh],
        ),
        _ => return Err(invalid(format!("{choice:?} is not defined for {kind:?}"))),
    };
    if xs.groups() != 1 {
        return Err(invalid("manufactured cases are one-group"));
    }
    if xs.regions() != domain.region_count() {
        return Err(RannError::DimensionMismatch {
            what: "cross-section regions",
            expected: domain.region_count(),
            actual: xs.regions(),
        });
    }
    let rule = angular_trapezoid(kind, REFERENCE_ANGULAR_NODES)?;
    let angular_integral = rule.integrate(|a| (exact.angular)(a));
    let norm = kind.kernel_normalization();
    let source_fn = {
        let exact = exact.clone();
        let xs = xs.clone();
        let domain = domain.clone();
        move |p: &[f64], _g: usize| {
            let sd = kind.spatial_dim();
            let region = domain.region_of(&p[..sd]);
            let (s, _) = (exact.spatial)(&p[..sd]);
            exact.streaming(kind, p) + xs.total(region, 0) * exact.value(kind, p)
                - norm * xs.kernel(region, 0, 0) * s * angular_integral
        }
    };
    let problem = TransportProblem::new(
        format!("manufactured-{}", exact.name),
        domain,
        xs,
        SourceTerm::Custom(Arc::new(source_fn)),
        faces.into_iter().map(|f| (f, BoundaryCondition::Vacuum)).collect(),
        vec![],
        if kind == GeometryKind::Slab1d { "m" } else { "cm" },
    )?;
    Ok(ManufacturedCase {
        choice,
        problem,
        exact,
        angular_integral,
    })
}

/// Case (a): slab with `Sigma_t = 5`, `Sigma_s = 3` and no fission.
pub fn manufactured_slab() -> Result<ManufacturedCase> {
    make_manufactured_case(
        GeometryKind::Slab1d,
        CrossSections::one_group(&[5.0], &[3.0])?,
        ManufacturedChoice::SlabQuadratic,
    )
}

/// Case (b): pin cell with the homogeneous moderator data of the first case.
pub fn manufactured_pincell() -> Result<ManufacturedCase> {
    make_manufactured_case(
        GeometryKind::PinCell2d,
        CrossSections::one_group(&[1.25445, 1.25445], &[1.12, 1.12])?,
        ManufacturedChoice::PinCellCosine,
    )
}

impl ManufacturedCase {
    pub fn exact_angular(&self, point: &[f64]) -> f64 {
        self.exact.value(self.problem.kind(), point)
    }

    /// Exact scalar flux on a grid.
    pub fn exact_scalar_flux(&self, grid: &Points) -> Result<ScalarFluxField> {
        let values = grid
            .iter()
            .map(|r| (self.exact.spatial)(r).0 * self.angular_integral)
            .collect();
        ScalarFluxField::new(grid.clone(), 1, values, format!("{} exact", self.problem.name))
    }

    /// `|D Psi + I Psi - Q|` at a point, with the integral term from `rule`
    /// and `D` in the phase-space form used by the solver.
    pub fn residual_at(&self, point: &[f64], rule: &QuadratureRule) -> f64 {
        let kind = self.problem.kind();
        let sd = kind.spatial_dim();
        let region = self.problem.region_of(point);
        let mut dir = vec![0.0; kind.dim()];
        streaming_direction(kind, point, &mut dir);
        let (s, grad) = (self.exact.spatial)(&point[..sd]);
        let g = (self.exact.angular)(&point[sd..]);
        let streaming: f64 = (0..sd).map(|a| dir[a] * grad[a]).sum::<f64>() * g;
        let integral = s * rule.integrate(|a| (self.exact.angular)(a));
        let lhs = streaming + self.problem.xs.total(region, 0) * s * g
            - kind.kernel_normalization() * self.problem.xs.kernel(region, 0, 0) * integral;
        (lhs - self.problem.source_value(point, 0)).abs()
    }
}

/// `[sigma_*^-2 + (1 + sigma^*/sigma_*)^2]^(1/2)`.
pub fn graph_norm_constant(sigma_lo: f64, sigma_hi: f64) -> f64 {
    (sigma_lo.powi(-2) + (1.0 + sigma_hi / sigma_lo).powi(2)).sqrt()
}

/// Piecewise-constant total cross section over a Cartesian spatial box.
#[derive(Clone, Debug)]
pub struct GraphNormSetting {
    pub name: String,
    /// `Slab1d` (one Cartesian axis, `mu` only) or `PinCell2d`.
    pub kind: GeometryKind,
    pub spatial_box: Vec<(f64, f64)>,
    pub regions: Vec<RegionShape>,
    /// `sigma_t` per region.
    pub sigma_t: Vec<f64>,
}

impl GraphNormSetting {
    fn domain(&self) -> Result<PhaseSpaceDomain> {
        PhaseSpaceDomain::new(self.kind, self.spatial_box.clone(), self.regions.clone(), vec![], vec![])
    }

    pub fn bounds(&self) -> (f64, f64) {
        self.sigma_t
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &s| (lo.min(s), hi.max(s)))
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct GraphNormReport {
    pub setting: String,
    pub test_function: String,
    pub l2_norm: f64,
    pub streaming_norm: f64,
    pub graph_norm: f64,
    pub residual_norm: f64,
    pub sigma_lo: f64,
    pub sigma_hi: f64,
    pub c_gr: f64,
    /// `C_gr |D Psi| - |Psi|_gr`.
    pub lower_margin: f64,
    /// `(1 + sigma^*) |Psi|_gr - |D Psi|`.
    pub upper_margin: f64,
}

impl GraphNormReport {
    pub fn holds(&self, slack: f64) -> bool {
        self.lower_margin >= -slack && self.upper_margin >= -slack
    }
}

/// Angular moments `int g^2 {1, Omega_a, Omega_a Omega_b} dOmega` over the
/// spatial directions of the geometry.
fn angular_moments_sq(kind: GeometryKind, g: &dyn Fn(&[f64]) -> f64, rule: &QuadratureRule) -> (f64, [f64; 2], [[f64; 2]; 2]) {
    let sd = kind.spatial_dim();
    let mut m0 = 0.0;
    let mut m1 = [0.0; 2];
    let mut m2 = [[0.0; 2]; 2];
    for k in 0..rule.len() {
        let a = rule.node(k);
        let w = rule.weights()[k] * g(a).powi(2);
        let omega = kind.direction(a);
        m0 += w;
        for i in 0..sd {
            m1[i] += w * omega[i];
            for j in 0..sd {
                m2[i][j] += w * omega[i] * omega[j];
            }
        }
    }
    (m0, m1, m2)
}

/// Angular rule with at least `k` nodes per axis: Gauss-Legendre in `mu`,
/// trapezoid in `phi`.
fn norm_angular_rule(kind: GeometryKind, k: usize) -> Result<QuadratureRule> {
    match kind {
        GeometryKind::Slab1d => gauss_legendre_rule(-1.0, 1.0, k),
        _ => tensor_rule(&[trapezoid_rule(0.0, 2.0 * PI, k + 1)?, gauss_legendre_rule(-1.0, 1.0, k)?]),
    }
}

/// Evaluates both sides of the graph-norm equivalence for a separable test
/// function with `k`-point rules per axis.
pub fn graph_norm_check(
    setting: &GraphNormSetting,
    test: &SeparableFunction,
    k: usize,
) -> Result<GraphNormReport> {
    if k < 2 {
        return Err(invalid("graph-norm quadrature needs at least 2 nodes per axis"));
    }
    let kind = setting.kind;
    if kind == GeometryKind::Cylinder1d {
        return Err(invalid("graph-norm checks use Cartesian geometries"));
    }
    let domain = setting.domain()?;
    if setting.sigma_t.len() != domain.region_count() || setting.sigma_t.iter().any(|&s| !(s > 0.0)) {
        return Err(invalid("graph-norm setting needs a positive sigma_t per region"));
    }
    let sd = kind.spatial_dim();
    let angular_rule = norm_angular_rule(kind, k)?;
    let (m0, m1, m2) = angular_moments_sq(kind, &*test.angular, &angular_rule);

    // Zero inflow trace: integrate |n . Omega| Psi^2 over each inflow face.
    let face_rule = |axis: usize| -> Result<Option<QuadratureRule>> {
        if sd == 1 {
            return Ok(None);
        }
        let other = 1 - axis;
        let (lo, hi) = setting.spatial_box[other];
        gauss_legendre_rule(lo, hi, k).map(Some)
    };
    let mut trace = 0.0;
    for axis in 0..sd {
        for (side, sign) in [(0usize, -1.0), (1, 1.0)] {
            let mut normal = [0.0; 3];
            normal[axis] = sign;
            let inflow: f64 = (0..angular_rule.len())
                .map(|q| {
                    let a = angular_rule.node(q);
                    let o = kind.direction(a);
                    let dot = normal[0] * o[0] + normal[1] * o[1];
                    if dot < 0.0 {
                        angular_rule.weights()[q] * dot.abs() * (test.angular)(a).powi(2)
                    } else {
                        0.0
                    }
                })
                .sum();
            let fixed = if side == 0 {
                setting.spatial_box[axis].0
            } else {
                setting.spatial_box[axis].1
            };
            let spatial: f64 = match face_rule(axis)? {
                None => (test.spatial)(&[fixed]).0.powi(2),
                Some(rule) => (0..rule.len())
                    .map(|q| {
                        let mut r = [0.0; 2];
                        r[axis] = fixed;
                        r[1 - axis] = rule.node(q)[0];
                        rule.weights()[q] * (test.spatial)(&r).0.powi(2)
                    })
                    .sum(),
            };
            trace += spatial * inflow;
        }
    }
    if trace > 1e-10 {
        return Err(RannError::InflowViolation(trace));
    }

    let axes = setting
        .spatial_box
        .iter()
        .map(|(lo, hi)| gauss_legendre_rule(*lo, *hi, k))
        .collect::<Result<Vec<_>>>()?;
    let spatial_rule = tensor_rule(&axes)?;
    let (mut l2, mut stream, mut resid) = (0.0, 0.0, 0.0);
    for q in 0..spatial_rule.len() {
        let r = spatial_rule.node(q);
        let w = spatial_rule.weights()[q];
        let (s, grad) = (test.spatial)(r);
        let sigma = setting.sigma_t[domain.region_of(r)];
        let mut ss = 0.0;
        let mut cross = 0.0;
        for i in 0..sd {
            cross += grad[i] * m1[i];
            for j in 0..sd {
                ss += grad[i] * grad[j] * m2[i][j];
            }
        }
        l2 += w * s * s * m0;
        stream += w * ss;
        resid += w * (ss + 2.0 * sigma * s * cross + sigma * sigma * s * s * m0);
    }
    let l2_norm = l2.sqrt();
    let streaming_norm = stream.max(0.0).sqrt();
    let graph_norm = (l2 + stream.max(0.0)).sqrt();
    let residual_norm = resid.max(0.0).sqrt();
    let (lo, hi) = setting.bounds();
    let c_gr = graph_norm_constant(lo, hi);
    Ok(GraphNormReport {
        setting: setting.name.clone(),
        test_function: test.name.clone(),
        l2_norm,
        streaming_norm,
        graph_norm,
        residual_norm,
        sigma_lo: lo,
        sigma_hi: hi,
        c_gr,
        lower_margin: c_gr * residual_norm - graph_norm,
        upper_margin: (1.0 + hi) * graph_norm - residual_norm,
    })
}

/// Cross-section settings of every benchmark, one per group for multigroup
/// data. The cylinder data are placed on the Cartesian interval `(0, R)`.
pub fn benchmark_graph_norm_settings() -> Result<Vec<GraphNormSetting>> {
    let mut out = Vec::new();
    for name in crate::transport::BUILTIN_PROBLEMS {
        let p = crate::transport::builtin_problem(name)?;
        let (kind, spatial_box) = match p.kind() {
            GeometryKind::Cylinder1d => (GeometryKind::Slab1d, p.domain.spatial_box.clone()),
            k => (k, p.domain.spatial_box.clone()),
        };
        for g in 0..p.groups() {
            out.push(GraphNormSetting {
                name: if p.groups() > 1 {
                    format!("{name}/group{}", g + 1)
                } else {
                    name.to_string()
                },
                kind,
                spatial_box: spatial_box.clone(),
                regions: p.domain.regions.clone(),
                sigma_t: (0..p.xs.regions()).map(|r| p.xs.total(r, g)).collect(),
            });
        }
    }
    Ok(out)
}

/// Shipped zero-inflow test functions: products of a spatial factor vanishing
/// on the whole boundary with a smooth angular factor.
pub fn zero_inflow_test_functions(kind: GeometryKind, spatial_box: &[(f64, f64)]) -> Vec<SeparableFunction> {
    let angular: Vec<(&str, Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>)> = match kind {
        GeometryKind::Slab1d => vec![
            ("1", Arc::new(|_: &[f64]| 1.0)),
            ("2+mu", Arc::new(|a: &[f64]| 2.0 + a[0])),
            ("exp(mu)", Arc::new(|a: &[f64]| a[0].exp())),
        ],
        _ => vec![
            ("1", Arc::new(|_: &[f64]| 1.0)),
            ("2+mu cos(phi)", Arc::new(|a: &[f64]| 2.0 + a[1] * a[0].cos())),
            ("1+sin(phi)^2 (1-mu^2)", Arc::new(|a: &[f64]| 1.0 + a[0].sin().powi(2) * (1.0 - a[1] * a[1]))),
        ],
    };
    let boxes = spatial_box.to_vec();
    let spatial: Vec<(&str, Arc<dyn Fn(&[f64]) -> (f64, [f64; 2]) + Send + Sync>)> = match kind {
        GeometryKind::Slab1d => {
            let (lo, hi) = boxes[0];
            let (c, h) = (0.5 * (lo + hi), 0.5 * (hi - lo));
            vec![
                (
                    "parabola",
                    Arc::new(move |r: &[f64]| {
                        let u = r[0] - c;
                        (h * h - u * u, [-2.0 * u, 0.0])
                    }),
                ),
                (
                    "sine",
                    Arc::new(move |r: &[f64]| {
                        let t = PI * (r[0] - lo) / (2.0 * h);
                        (t.sin(), [PI / (2.0 * h) * t.cos(), 0.0])
                    }),
                ),
            ]
        }
        _ => {
            let (bx, by) = (boxes[0], boxes[1]);
            let (cx, hx, cy, hy) = (
                0.5 * (bx.0 + bx.1),
                0.5 * (bx.1 - bx.0),
                0.5 * (by.0 + by.1),
                0.5 * (by.1 - by.0),
            );
            vec![
                (
                    "biparabola",
                    Arc::new(move |r: &[f64]| {
                        let (u, v) = (r[0] - cx, r[1] - cy);
                        let (px, py) = (hx * hx - u * u, hy * hy - v * v);
                        (px * py, [-2.0 * u * py, -2.0 * v * px])
                    }),
                ),
                (
                    "cosine",
                    Arc::new(move |r: &[f64]| {
                        let (kx, ky) = (PI / (2.0 * hx), PI / (2.0 * hy));
                        let (a, b) = (kx * (r[0] - cx), ky * (r[1] - cy));
                        (a.cos() * b.cos(), [-kx * a.sin() * b.cos(), -ky * a.cos() * b.sin()])
                    }),
                ),
            ]
        }
    };
    let mut out = Vec::new();
    for (sn, s) in &spatial {
        for (an, a) in &angular {
            out.push(SeparableFunction {
                name: format!("{sn} x {an}"),
                spatial: s.clone(),
                angular: a.clone(),
            });
        }
    }
    out
}

/// Writes a flux field as CSV: `x,phi` for one-group 1D fields, `x,group,phi`
/// for multigroup 1D fields, `x,y,group,phi` in 2D. Groups are 1-based and
/// numbers use 17 significant digits.
pub fn write_flux_csv(path: &Path, field: &ScalarFluxField) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let sd = field.grid.dim();
    let header: Vec<&str> = match (sd, field.groups) {
        (1, 1) => vec!["x", "phi"],
        (1, _) => vec!["x", "group", "phi"],
        _ => vec!["x", "y", "group", "phi"],
    };
    w.write_record(&header)?;
    let fmt = |v: f64| format!("{v:.16e}");
    for (i, r) in field.grid.iter().enumerate() {
        for g in 0..field.groups {
            let mut rec: Vec<String> = r.iter().map(|&v| fmt(v)).collect();
            if header.contains(&"group") {
                rec.push((g + 1).to_string());
            }
            rec.push(fmt(field.value(i, g)));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a flux CSV in the schema of [`write_flux_csv`].
pub fn read_flux_csv(path: &Path) -> Result<ScalarFluxField> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(|s| s.trim().to_string()).collect();
    let col = |name: &str| header.iter().position(|h| h == name);
    let phi = col("phi").ok_or_else(|| invalid("flux CSV lacks a `phi` column"))?;
    let xs = col("x").ok_or_else(|| invalid("flux CSV lacks an `x` column"))?;
    let ys = col("y");
    let gs = col("group");
    let sd = if ys.is_some() { 2 } else { 1 };
    let mut rows: Vec<(Vec<f64>, usize, f64)> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| invalid(format!("bad number in column {i} of {rec:?}")))
        };
        let mut p = vec![num(xs)?];
        if let Some(y) = ys {
            p.push(num(y)?);
        }
        let g = match gs {
            Some(i) => num(i)? as usize,
            None => 1,
        };
        if g == 0 {
            return Err(invalid("group indices in flux CSV are 1-based"));
        }
        rows.push((p, g - 1, num(phi)?));
    }
    let groups = rows.iter().map(|r| r.1 + 1).max().unwrap_or(1);
    if rows.len() % groups != 0 {
        return Err(invalid("flux CSV does not list every group at every point"));
    }
    let mut grid = Points::new(sd);
    let mut values = vec![f64::NAN; rows.len()];
    for (n, (p, g, v)) in rows.iter().enumerate() {
        let i = n / groups;
        if *g == 0 {
            grid.push(p);
        }
        values[i * groups + g] = *v;
    }
    if grid.len() * groups != rows.len() {
        return Err(invalid("flux CSV rows are not ordered by point then group"));
    }
    ScalarFluxField::new(grid, groups, values, path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::RandomFeatureBasis;
    use crate::transport::builtin_problem;

    fn constant_solution(name: &str, value: f64) -> FluxSolution {
        let p = builtin_problem(name).unwrap();
        let d = p.kind().dim();
        let basis = RandomFeatureBasis::from_parameters(vec![0.0; d], vec![0.0], d).unwrap();
        let g = p.groups();
        FluxSolution::from_parts(p, vec![basis], vec![vec![vec![value]]; g]).unwrap()
    }

    #[test]
    fn constant_flux_integrates_to_box_measure() {
        let s = constant_solution("pincell-vac-case1", 1.0);
        let grid = uniform_grid(&s.problem.domain, 5).unwrap();
        let rule = angular_trapezoid(GeometryKind::PinCell2d, 9).unwrap();
        let phi = scalar_flux(&s, &grid, &rule).unwrap();
        assert!(phi.values.iter().all(|v| (v - 4.0 * PI).abs() < 1e-10));
        let bad = angular_trapezoid(GeometryKind::Slab1d, 9).unwrap();
        assert!(matches!(scalar_flux(&s, &grid, &bad), Err(RannError::RuleMismatch(_))));
    }

    #[test]
    fn factored_moments_match_direct_sum() {
        let p = builtin_problem("pincell-refl-case1").unwrap();
        for bound in [1.0, 4.0, 10.0] {
            let basis = RandomFeatureBasis::build(40, 4, bound, 3).unwrap();
            let rule = angular_trapezoid(GeometryKind::PinCell2d, 12).unwrap();
            let eval = MomentEvaluator::new(&basis, p.kind(), &rule);
            assert!(matches!(eval, MomentEvaluator::Tensor { .. }));
            for r in [[0.0, 0.0], [0.63, -0.2], [-0.5, 0.61]] {
                let fast = eval.moments(&basis, p.kind(), &r, &rule);
                let slow = angular_moments(&basis, p.kind(), &r, &rule);
                for (a, b) in fast.iter().zip(&slow) {
                    assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "{a} {b}");
                }
            }
        }
        let gl = gauss_legendre_rule(-1.0, 1.0, 5).unwrap();
        let basis = RandomFeatureBasis::build(4, 2, 1.0, 3).unwrap();
        assert!(matches!(MomentEvaluator::new(&basis, GeometryKind::Slab1d, &gl), MomentEvaluator::Direct));
    }

    #[test]
    fn slab_moments() {
        let rule = angular_trapezoid(GeometryKind::Slab1d, 200).unwrap();
        assert!(rule.integrate(|a| a[0]).abs() < 1e-14);
        let h = 2.0 / 199.0;
        let got = rule.integrate(|a| a[0] * a[0]);
        assert!((got - 2.0 / 3.0).abs() <= 2.0 * h * h / 12.0 * 2.0 + 1e-14);
    }

    #[test]
    fn relative_errors() {
        let grid = Points::from_rows(1, &[vec![0.0], vec![0.5], vec![1.0]]).unwrap();
        let r = ScalarFluxField::new(grid.clone(), 1, vec![3.0, 4.0, 12.0], "ref").unwrap();
        assert_eq!(relative_l2_error(&r, &r).unwrap(), 0.0);
        let scaled = r.normalized(1.0 / 1.01);
        assert!((relative_l2_error(&scaled, &r).unwrap() - 0.01).abs() < 1e-14);
        // |Phi| = 13, perturbation 13 in the first entry: error exactly 1.
        let bumped = ScalarFluxField::new(grid.clone(), 1, vec![16.0, 4.0, 12.0], "p").unwrap();
        assert!((relative_l2_error(&bumped, &r).unwrap() - 1.0).abs() < 1e-15);
        let zero = ScalarFluxField::new(grid.clone(), 1, vec![0.0; 3], "z").unwrap();
        assert!(relative_l2_error(&r, &zero).is_err());
        let other = ScalarFluxField::new(
            Points::from_rows(1, &[vec![0.0], vec![0.6], vec![1.0]]).unwrap(),
            1,
            vec![1.0; 3],
            "o",
        )
        .unwrap();
        assert!(relative_l2_error(&other, &r).is_err());
    }

    #[test]
    fn benchmark_table_structure() {
        let exact: Vec<(f64, f64)> = SLAB_BENCHMARK.to_vec();
        let errs = slab_benchmark_errors(&exact);
        assert!(errs.iter().all(|e| e.relative_error == 0.0));
        assert_eq!(errs[3].reference, 0.553290);
        let s = constant_solution("slab-critical", 0.3);
        let e = pointwise_benchmark_error(&s, 101).unwrap();
        assert_eq!(e[0].relative_error, 0.0);
        assert!((e[4].relative_error - (1.0 - 0.214192) / 0.214192).abs() < 1e-12);
    }

    #[test]
    fn manufactured_hand_values() {
        let case = manufactured_slab().unwrap();
        let p = &case.problem;
        assert!((case.angular_integral - 4.0).abs() < 1e-12);
        // D Psi at (0, 1) = 3 sigma_t; I Psi = -(1/2) 3 (1) 4
        let q = p.source_value(&[0.0, 1.0], 0);
        assert!((q - (15.0 - 6.0)).abs() < 1e-12);
        let b = SLAB_HALF_WIDTH;
        let x = 0.3;
        let expected = 0.5 * (-2.0 * x * 2.5 / (b * b)) + 5.0 * (b * b - x * x) * 2.5 / (b * b)
            - 0.5 * 3.0 * (b * b - x * x) / (b * b) * 4.0;
        assert!((p.source_value(&[x, 0.5], 0) - expected).abs() < 1e-12);

        let pin = manufactured_pincell().unwrap();
        assert!((pin.angular_integral - 8.0 * PI).abs() < 1e-9);
    }

    #[test]
    fn manufactured_residual_identity() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let slab = manufactured_slab().unwrap();
        let gl = gauss_legendre_rule(-1.0, 1.0, 16).unwrap();
        let pin = manufactured_pincell().unwrap();
        let sphere = tensor_rule(&[
            trapezoid_rule(0.0, 2.0 * PI, 33).unwrap(),
            gauss_legendre_rule(-1.0, 1.0, 16).unwrap(),
        ])
        .unwrap();
        for _ in 0..20 {
            let b = SLAB_HALF_WIDTH;
            let p = [rng.random_range(-b..b), rng.random_range(-1.0..1.0)];
            assert!(slab.residual_at(&p, &gl) <= 1e-8);
            let c = PINCELL_HALF_WIDTH;
            let q = [
                rng.random_range(-c..c),
                rng.random_range(-c..c),
                rng.random_range(0.0..2.0 * PI),
                rng.random_range(-1.0..1.0),
            ];
            assert!(pin.residual_at(&q, &sphere) <= 1e-8);
        }
    }

    #[test]
    fn graph_norm_constant_value() {
        assert!((graph_norm_constant(5.0, 5.0) - 4.04f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn graph_norm_slab_parabola() {
        let setting = GraphNormSetting {
            name: "slab".into(),
            kind: GeometryKind::Slab1d,
            spatial_box: vec![(-SLAB_HALF_WIDTH, SLAB_HALF_WIDTH)],
            regions: vec![RegionShape::Complement],
            sigma_t: vec![5.0],
        };
        let tests = zero_inflow_test_functions(GeometryKind::Slab1d, &setting.spatial_box);
        let r = graph_norm_check(&setting, &tests[0], 200).unwrap();
        assert!(r.lower_margin > 0.0 && r.upper_margin > 0.0);
        let zero = SeparableFunction {
            name: "zero".into(),
            spatial: Arc::new(|_| (0.0, [0.0, 0.0])),
            angular: Arc::new(|_| 1.0),
        };
        let r = graph_norm_check(&setting, &zero, 200).unwrap();
        assert_eq!((r.graph_norm, r.residual_norm), (0.0, 0.0));
        assert!(r.holds(1e-6));
        let bad = SeparableFunction {
            name: "one".into(),
            spatial: Arc::new(|_| (1.0, [0.0, 0.0])),
            angular: Arc::new(|_| 1.0),
        };
        assert!(matches!(
            graph_norm_check(&setting, &bad, 200),
            Err(RannError::InflowViolation(_))
        ));
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let grid = Points::from_rows(2, &[vec![0.1, 0.2], vec![0.3, -0.4]]).unwrap();
        let f = ScalarFluxField::new(grid, 2, vec![1.0 / 3.0, 2.0, 3.0, 4e-300], "f").unwrap();
        let path = dir.path().join("f.csv");
        write_flux_csv(&path, &f).unwrap();
        let back = read_flux_csv(&path).unwrap();
        assert_eq!(back.values, f.values);
        assert_eq!(back.grid, f.grid);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("x,y,group,phi\n"));
        let g1 = ScalarFluxField::new(Points::from_rows(1, &[vec![0.5]]).unwrap(), 1, vec![2.0], "s").unwrap();
        let p1 = dir.path().join("s.csv");
        write_flux_csv(&p1, &g1).unwrap();
        assert!(std::fs::read_to_string(&p1).unwrap().starts_with("x,phi\n"));
        assert_eq!(read_flux_csv(&p1).unwrap().values, vec![2.0]);
    }
}
