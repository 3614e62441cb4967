//! Transport problems and the operator row generators.
//!
//! The streaming-absorption operator is written as a directional derivative in
//! the phase-space coordinates plus absorption: `D psi = c(x) . grad psi +
//! sigma_t psi`, where [`streaming_direction`] gives `c(x)` per geometry.
//! Scattering is moved to the left-hand side with a negative sign.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use faer::Mat;

use crate::basis::RandomFeatureBasis;
use crate::error::{invalid, RannError, Result};
use crate::geometry::{
    reflect_direction, trace_weight, Anchor, BoundaryBlock, BoundaryCondition, Face,
    GeometryKind, InteriorBlock, Interface, PhaseSpaceDomain, Points, RegionShape,
};
use crate::quadrature::QuadratureRule;

/// Lower clamp on the radial coordinate in the cylinder's `1/x` coefficient.
pub const CYLINDER_RADIUS_FLOOR: f64 = 1e-4;

/// Region-wise constant multigroup cross sections.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct CrossSections {
    groups: usize,
    /// `[region][group]`.
    sigma_t: Vec<Vec<f64>>,
    /// `[region][from * groups + to]`.
    sigma_s: Vec<Vec<f64>>,
    /// `[region]`, one-group problems only; folded into scattering at `k_eff`.
    nu_sigma_f: Option<Vec<f64>>,
    k_eff: f64,
}

impl CrossSections {
    /// `sigma_s[region][from][to]` is the transfer `from -> to`.
    pub fn new(sigma_t: Vec<Vec<f64>>, sigma_s: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let regions = sigma_t.len();
        if regions == 0 {
            return Err(invalid("cross sections need at least one region"));
        }
        let groups = sigma_t[0].len();
        if groups == 0 {
            return Err(invalid("cross sections need at least one group"));
        }
        if sigma_s.len() != regions {
            return Err(RannError::DimensionMismatch {
                what: "scattering regions",
                expected: regions,
                actual: sigma_s.len(),
            });
        }
        let mut flat = Vec::with_capacity(regions);
        for (t, s) in sigma_t.iter().zip(&sigma_s) {
            if t.len() != groups {
                return Err(RannError::DimensionMismatch {
                    what: "total cross-section groups",
                    expected: groups,
                    actual: t.len(),
                });
            }
            if s.len() != groups || s.iter().any(|row| row.len() != groups) {
                return Err(invalid(format!("scattering matrix must be {groups}x{groups}")));
            }
            if t.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
                return Err(invalid("total cross sections must be positive and finite"));
            }
            let row: Vec<f64> = s.iter().flatten().copied().collect();
            if row.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
                return Err(invalid("scattering cross sections must be nonnegative"));
            }
            flat.push(row);
        }
        Ok(Self {
            groups,
            sigma_t,
            sigma_s: flat,
            nu_sigma_f: None,
            k_eff: 1.0,
        })
    }

    /// One-group data; `sigma_t[r]`, `sigma_s[r]`.
    pub fn one_group(sigma_t: &[f64], sigma_s: &[f64]) -> Result<Self> {
        Self::new(
            sigma_t.iter().map(|&t| vec![t]).collect(),
            sigma_s.iter().map(|&s| vec![vec![s]]).collect(),
        )
    }

    /// Adds a one-group fission production term at fixed eigenvalue `k_eff`.
    pub fn with_fission(mut self, nu_sigma_f: Vec<f64>, k_eff: f64) -> Result<Self> {
        if self.groups != 1 {
            return Err(invalid("fission folding is only supported for one group"));
        }
        if nu_sigma_f.len() != self.sigma_t.len() {
            return Err(RannError::DimensionMismatch {
                what: "fission regions",
                expected: self.sigma_t.len(),
                actual: nu_sigma_f.len(),
            });
        }
        if nu_sigma_f.iter().any(|&v| !(v >= 0.0)) || !(k_eff > 0.0) {
            return Err(invalid("fission data must be nonnegative with k_eff > 0"));
        }
        self.nu_sigma_f = Some(nu_sigma_f);
        self.k_eff = k_eff;
        Ok(self)
    }

    pub fn groups(&self) -> usize {
        self.groups
    }

    pub fn regions(&self) -> usize {
        self.sigma_t.len()
    }

    pub fn total(&self, region: usize, group: usize) -> f64 {
        self.sigma_t[region][group]
    }

    /// Raw scattering transfer `from -> to`.
    pub fn scattering(&self, region: usize, from: usize, to: usize) -> f64 {
        self.sigma_s[region][from * self.groups + to]
    }

    pub fn fission(&self, region: usize) -> Option<f64> {
        self.nu_sigma_f.as_ref().map(|f| f[region])
    }

    pub fn k_eff(&self) -> f64 {
        self.k_eff
    }

    /// Coefficient of the isotropic integral term `from -> to`, fission folded in.
    pub fn kernel(&self, region: usize, from: usize, to: usize) -> f64 {
        let mut c = self.scattering(region, from, to);
        if let Some(f) = &self.nu_sigma_f {
            c += f[region] / self.k_eff;
        }
        c
    }

    /// `(min, max)` of the total cross section over regions for one group.
    pub fn total_bounds(&self, group: usize) -> (f64, f64) {
        self.sigma_t.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), t| {
            (lo.min(t[group]), hi.max(t[group]))
        })
    }
}

/// External source `Q_g` evaluated at a full phase-space point.
#[derive(Clone)]
pub enum SourceTerm {
    Zero,
    /// `scale * values[region][group]`.
    RegionwiseConstant { values: Vec<Vec<f64>>, scale: f64 },
    /// `amplitude * cos(pi x / (2 length))` on the first spatial axis, all groups.
    Cosine { amplitude: f64, length: f64 },
    /// Arbitrary `(point, group) -> value`, used for manufactured solutions.
    Custom(Arc<dyn Fn(&[f64], usize) -> f64 + Send + Sync>),
}

impl fmt::Debug for SourceTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceTerm::Zero => write!(f, "Zero"),
            SourceTerm::RegionwiseConstant { values, scale } => f
                .debug_struct("RegionwiseConstant")
                .field("values", values)
                .field("scale", scale)
                .finish(),
            SourceTerm::Cosine { amplitude, length } => f
                .debug_struct("Cosine")
                .field("amplitude", amplitude)
                .field("length", length)
                .finish(),
            SourceTerm::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl SourceTerm {
    pub fn value(&self, point: &[f64], region: usize, group: usize) -> f64 {
        match self {
            SourceTerm::Zero => 0.0,
            SourceTerm::RegionwiseConstant { values, scale } => scale * values[region][group],
            SourceTerm::Cosine { amplitude, length } => {
                amplitude * (PI * point[0] / (2.0 * length)).cos()
            }
            SourceTerm::Custom(f) => f(point, group),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            SourceTerm::Zero => "zero".into(),
            SourceTerm::RegionwiseConstant { values, scale } => {
                format!("region-wise constant {values:?} x {scale:.12e}")
            }
            SourceTerm::Cosine { amplitude, length } => {
                format!("{amplitude} cos(pi x / (2 x {length}))")
            }
            SourceTerm::Custom(_) => "custom".into(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct TransportProblem {
    pub name: String,
    pub domain: PhaseSpaceDomain,
    pub xs: CrossSections,
    pub source: SourceTerm,
    pub boundary: Vec<(Face, BoundaryCondition)>,
    /// Point-value normalization rows (the critical slab only).
    pub anchors: Vec<Anchor>,
    pub length_unit: &'static str,
}

impl TransportProblem {
    pub fn new(
        name: impl Into<String>,
        domain: PhaseSpaceDomain,
        xs: CrossSections,
        source: SourceTerm,
        boundary: Vec<(Face, BoundaryCondition)>,
        anchors: Vec<Anchor>,
        length_unit: &'static str,
    ) -> Result<Self> {
        if xs.regions() != domain.region_count() {
            return Err(RannError::DimensionMismatch {
                what: "cross-section regions",
                expected: domain.region_count(),
                actual: xs.regions(),
            });
        }
        for face in &domain.faces {
            let n = boundary.iter().filter(|(f, _)| f == face).count();
            if n != 1 {
                return Err(invalid(format!(
                    "face {face:?} must carry exactly one boundary condition, found {n}"
                )));
            }
        }
        if let Some((f, _)) = boundary.iter().find(|(f, _)| !domain.faces.contains(f)) {
            return Err(invalid(format!("boundary condition on absent face {f:?}")));
        }
        if let SourceTerm::RegionwiseConstant { values, .. } = &source {
            if values.len() != domain.region_count()
                || values.iter().any(|v| v.len() != xs.groups())
            {
                return Err(invalid("source table must be regions x groups"));
            }
        }
        let dim = domain.kind.dim();
        if anchors.iter().any(|a| a.point.len() != dim) {
            return Err(invalid("anchor point has the wrong dimension"));
        }
        Ok(Self {
            name: name.into(),
            domain,
            xs,
            source,
            boundary,
            anchors,
            length_unit,
        })
    }

    pub fn kind(&self) -> GeometryKind {
        self.domain.kind
    }

    pub fn groups(&self) -> usize {
        self.xs.groups()
    }

    pub fn region_of(&self, point: &[f64]) -> usize {
        self.domain.region_of(&point[..self.kind().spatial_dim()])
    }

    pub fn boundary_condition(&self, face: Face) -> Option<BoundaryCondition> {
        self.boundary.iter().find(|(f, _)| *f == face).map(|(_, bc)| *bc)
    }

    /// Source value including the benchmark's isotropy factor.
    pub fn source_value(&self, point: &[f64], group: usize) -> f64 {
        self.source.value(point, self.region_of(point), group)
    }
}

/// Coefficients `c` with `Omega . grad psi = c . grad_(phase space) psi`.
pub fn streaming_direction(kind: GeometryKind, point: &[f64], out: &mut [f64]) {
    match kind {
        GeometryKind::Slab1d => {
            out[0] = point[1];
            out[1] = 0.0;
        }
        GeometryKind::Cylinder1d => {
            let (x, phi, mu) = (point[0], point[1], point[2]);
            let s = (1.0 - mu * mu).max(0.0).sqrt();
            out[0] = s * phi.cos();
            out[1] = -s * phi.sin() / x.max(CYLINDER_RADIUS_FLOOR);
            out[2] = 0.0;
        }
        GeometryKind::PinCell2d => {
            let (phi, mu) = (point[2], point[3]);
            let s = (1.0 - mu * mu).max(0.0).sqrt();
            out[0] = s * phi.cos();
            out[1] = s * phi.sin();
            out[2] = 0.0;
            out[3] = 0.0;
        }
    }
}

fn check_dim(problem: &TransportProblem, basis: &RandomFeatureBasis, points: &Points) -> Result<()> {
    let dim = problem.kind().dim();
    if basis.dim() != dim {
        return Err(RannError::DimensionMismatch {
            what: "basis input dimension",
            expected: dim,
            actual: basis.dim(),
        });
    }
    if points.dim() != dim {
        return Err(RannError::DimensionMismatch {
            what: "point dimension",
            expected: dim,
            actual: points.dim(),
        });
    }
    Ok(())
}

/// `N x m` matrix of `(D psi_j)(x_i)` for one group.
pub fn streaming_rows(
    problem: &TransportProblem,
    basis: &RandomFeatureBasis,
    points: &Points,
    group: usize,
) -> Result<Mat<f64>> {
    check_dim(problem, basis, points)?;
    let m = basis.len();
    let kind = problem.kind();
    let mut dir = vec![0.0; kind.dim()];
    let mut values = vec![0.0; m];
    let mut directional = vec![0.0; m];
    let mut out = Mat::zeros(points.len(), m);
    for (i, p) in points.iter().enumerate() {
        streaming_direction(kind, p, &mut dir);
        basis.eval_point_directional(p, &dir, &mut values, &mut directional);
        let sigma_t = problem.xs.total(problem.region_of(p), group);
        for j in 0..m {
            out[(i, j)] = directional[j] + sigma_t * values[j];
        }
    }
    Ok(out)
}

/// Verifies that `rule` lists the angular coordinates of each slice in order.
pub fn check_rule_matches(interior: &InteriorBlock, rule: &QuadratureRule, kind: GeometryKind) -> Result<()> {
    let sd = kind.spatial_dim();
    if rule.dim() != kind.angular_dim() {
        return Err(RannError::RuleMismatch(format!(
            "rule dimension {} but geometry has {} angular axes",
            rule.dim(),
            kind.angular_dim()
        )));
    }
    for slice in &interior.slices {
        if slice.len() != rule.len() {
            return Err(RannError::RuleMismatch(format!(
                "slice has {} directions, rule has {}",
                slice.len(),
                rule.len()
            )));
        }
        for (k, i) in slice.clone().enumerate() {
            let p = interior.points.point(i);
            if p[sd..] != *rule.node(k) {
                return Err(RannError::RuleMismatch(format!(
                    "node {k} is {:?}, grid has {:?}",
                    rule.node(k),
                    &p[sd..]
                )));
            }
        }
    }
    Ok(())
}

/// `N_I x m` matrix of the scattering contribution `from -> to`:
/// `-norm * sigma(r_i) * sum_k beta_k psi_j(r_i, Omega_k)`.
pub fn scattering_rows(
    problem: &TransportProblem,
    basis: &RandomFeatureBasis,
    interior: &InteriorBlock,
    rule: &QuadratureRule,
    from: usize,
    to: usize,
) -> Result<Mat<f64>> {
    check_dim(problem, basis, &interior.points)?;
    let g = problem.groups();
    if from >= g || to >= g {
        return Err(RannError::Unknown {
            kind: "group pair",
            name: format!("({from}, {to})"),
        });
    }
    let kind = problem.kind();
    check_rule_matches(interior, rule, kind)?;
    let m = basis.len();
    let norm = kind.kernel_normalization();
    let mut values = vec![0.0; m];
    let mut sums = vec![0.0; m];
    let mut out = Mat::zeros(interior.points.len(), m);
    for slice in &interior.slices {
        sums.iter_mut().for_each(|s| *s = 0.0);
        for (k, i) in slice.clone().enumerate() {
            basis.eval_point(interior.points.point(i), &mut values);
            let beta = rule.weights()[k];
            for j in 0..m {
                sums[j] += beta * values[j];
            }
        }
        let region = problem.region_of(interior.points.point(slice.start));
        let c = -norm * problem.xs.kernel(region, from, to);
        for i in slice.clone() {
            for j in 0..m {
                out[(i, j)] = c * sums[j];
            }
        }
    }
    Ok(out)
}

/// Writes `sqrt(omega) * (B psi_j)(x)` for one boundary sample into `out`.
pub fn boundary_row(
    basis: &RandomFeatureBasis,
    kind: GeometryKind,
    point: &[f64],
    face: Face,
    bc: BoundaryCondition,
    scratch: &mut Vec<f64>,
    out: &mut [f64],
) -> Result<()> {
    let sd = kind.spatial_dim();
    let normal = face.normal();
    let w = trace_weight(kind, &normal, &point[sd..])?.sqrt();
    basis.eval_point(point, out);
    if bc == BoundaryCondition::Reflecting {
        let reflected = reflect_direction(kind, &normal, &point[sd..])?;
        let mut q = point.to_vec();
        q[sd..].copy_from_slice(&reflected);
        scratch.resize(out.len(), 0.0);
        basis.eval_point(&q, scratch);
        for (o, r) in out.iter_mut().zip(scratch.iter()) {
            *o -= r;
        }
    }
    for o in out.iter_mut() {
        *o *= w;
    }
    Ok(())
}

/// `N_B x m` matrix of weighted boundary-operator rows.
pub fn boundary_rows(
    problem: &TransportProblem,
    basis: &RandomFeatureBasis,
    block: &BoundaryBlock,
) -> Result<Mat<f64>> {
    check_dim(problem, basis, &block.points)?;
    if block.faces.len() != block.points.len() || block.conditions.len() != block.points.len() {
        return Err(invalid("boundary point without a face or condition tag"));
    }
    let m = basis.len();
    let mut row = vec![0.0; m];
    let mut scratch = Vec::new();
    let mut out = Mat::zeros(block.points.len(), m);
    for (i, p) in block.points.iter().enumerate() {
        boundary_row(
            basis,
            problem.kind(),
            p,
            block.faces[i],
            block.conditions[i],
            &mut scratch,
            &mut row,
        )?;
        for j in 0..m {
            out[(i, j)] = row[j];
        }
    }
    Ok(out)
}

/// `F_i = Q_g(x_i)`.
pub fn rhs_vector(problem: &TransportProblem, points: &Points, group: usize) -> Vec<f64> {
    points.iter().map(|p| problem.source_value(p, group)).collect()
}

/// Names accepted by [`builtin_problem`].
pub const BUILTIN_PROBLEMS: [&str; 10] = [
    "slab-critical",
    "cylinder-case1",
    "cylinder-case2",
    "pincell-vac-case1",
    "pincell-vac-case2",
    "pincell-vac-case3",
    "pincell-refl-case1",
    "pincell-refl-case2",
    "pincell-refl-case3",
    "pincell-7g",
];

pub const SLAB_HALF_WIDTH: f64 = 0.6600527544;
pub const CYLINDER_RADIUS: f64 = 1.08225766;
pub const PINCELL_HALF_WIDTH: f64 = 0.63;
pub const PIN_RADIUS: f64 = 0.54;
pub const ANNULUS_INNER_RADIUS: f64 = 0.27;

const FUEL: (f64, f64) = (0.395168, 0.265802);
const MODERATOR: (f64, f64) = (1.25445, 1.12);

/// Seven-group total cross sections `[region][group]`.
pub const SEVEN_GROUP_TOTAL: [[f64; 7]; 2] = [
    [3.558980e-1, 6.596100e-1, 9.607760e-1, 1.108734e0, 6.236020e-1, 7.903360e-1, 1.128812e0],
    [3.184120e-1, 8.259400e-1, 1.180620e0, 1.168700e0, 1.436000e0, 2.508900e0, 5.300760e0],
];

/// Seven-group scattering `[region][from][to]`.
pub const SEVEN_GROUP_SCATTERING: [[[f64; 7]; 7]; 2] = [
    [
        [1.27537e-1, 4.37800e-2, 9.43740e-6, 5.51630e-9, 0.0, 0.0, 0.0],
        [0.0, 3.24456e-1, 1.63140e-3, 3.14270e-9, 0.0, 0.0, 0.0],
        [0.0, 0.0, 4.50940e-1, 2.67920e-3, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 4.52565e-1, 5.56640e-3, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.25250e-4, 2.71401e-1, 1.02550e-2, 1.00210e-8],
        [0.0, 0.0, 0.0, 0.0, 1.29680e-3, 2.65802e-1, 1.68090e-2],
        [0.0, 0.0, 0.0, 0.0, 0.0, 8.54580e-3, 2.73080e-1],
    ],
    [
        [4.44777e-2, 1.13400e-1, 7.23470e-4, 3.74990e-6, 5.31840e-8, 0.0, 0.0],
        [0.0, 2.82334e-1, 1.29940e-1, 6.23400e-4, 4.80020e-5, 7.44860e-6, 1.04550e-6],
        [0.0, 0.0, 3.45256e-1, 2.24570e-1, 1.69990e-2, 2.64430e-3, 5.03440e-4],
        [0.0, 0.0, 0.0, 9.10284e-2, 4.15510e-1, 6.37320e-2, 1.21390e-2],
        [0.0, 0.0, 0.0, 7.14370e-5, 1.39138e-1, 5.11820e-1, 6.12290e-2],
        [0.0, 0.0, 0.0, 0.0, 2.21570e-3, 6.99913e-1, 5.37320e-1],
        [0.0, 0.0, 0.0, 0.0, 0.0, 1.32440e-1, 2.48070e0],
    ],
];

pub fn slab_domain(half_width: f64) -> Result<PhaseSpaceDomain> {
    PhaseSpaceDomain::new(
        GeometryKind::Slab1d,
        vec![(-half_width, half_width)],
        vec![RegionShape::Complement],
        vec![],
        vec![Face::XLow, Face::XHigh],
    )
}

pub fn pincell_domain(half_width: f64, inner: RegionShape) -> Result<PhaseSpaceDomain> {
    PhaseSpaceDomain::new(
        GeometryKind::PinCell2d,
        vec![(-half_width, half_width), (-half_width, half_width)],
        vec![inner, RegionShape::Complement],
        vec![],
        vec![Face::XLow, Face::XHigh, Face::YLow, Face::YHigh],
    )
}

fn all_faces(bc: BoundaryCondition) -> Vec<(Face, BoundaryCondition)> {
    [Face::XLow, Face::XHigh, Face::YLow, Face::YHigh]
        .into_iter()
        .map(|f| (f, bc))
        .collect()
}

fn pincell_case(case: u8, bc: BoundaryCondition) -> Result<TransportProblem> {
    let (inner, fuel) = match case {
        1 => (RegionShape::Disk { radius: PIN_RADIUS }, MODERATOR),
        2 => (RegionShape::Disk { radius: PIN_RADIUS }, FUEL),
        3 => (
            RegionShape::Annulus {
                inner: ANNULUS_INNER_RADIUS,
                outer: PIN_RADIUS,
            },
            FUEL,
        ),
        _ => unreachable!(),
    };
    let label = match bc {
        BoundaryCondition::Vacuum => "vac",
        BoundaryCondition::Reflecting => "refl",
    };
    TransportProblem::new(
        format!("pincell-{label}-case{case}"),
        pincell_domain(PINCELL_HALF_WIDTH, inner)?,
        CrossSections::one_group(&[fuel.0, MODERATOR.0], &[fuel.1, MODERATOR.1])?,
        SourceTerm::RegionwiseConstant {
            values: vec![vec![1.0], vec![0.0]],
            scale: 1.0 / (4.0 * PI),
        },
        all_faces(bc),
        vec![],
        "cm",
    )
}

/// Benchmark problem by name; see [`BUILTIN_PROBLEMS`].
pub fn builtin_problem(name: &str) -> Result<TransportProblem> {
    match name {
        "slab-critical" => TransportProblem::new(
            name,
            slab_domain(SLAB_HALF_WIDTH)?,
            CrossSections::one_group(&[5.0], &[3.0])?.with_fission(vec![2.25], 1.0)?,
            SourceTerm::Zero,
            vec![
                (Face::XLow, BoundaryCondition::Vacuum),
                (Face::XHigh, BoundaryCondition::Vacuum),
            ],
            vec![
                Anchor {
                    point: vec![0.0, -1.0],
                    value: 0.2,
                },
                Anchor {
                    point: vec![0.0, 1.0],
                    value: 0.2,
                },
            ],
            "m",
        ),
        "cylinder-case1" | "cylinder-case2" => {
            let r = CYLINDER_RADIUS;
            let split = name.ends_with('2');
            let (regions, interfaces, xs) = if split {
                (
                    vec![RegionShape::HalfInterval { bound: r / 2.0 }, RegionShape::Complement],
                    vec![Interface {
                        axis: 0,
                        position: r / 2.0,
                        regions: (0, 1),
                    }],
                    CrossSections::one_group(&[5.0, 0.5], &[3.0, 0.3])?,
                )
            } else {
                (
                    vec![RegionShape::Complement],
                    vec![],
                    CrossSections::one_group(&[5.0], &[3.0])?,
                )
            };
            let domain = PhaseSpaceDomain::new(
                GeometryKind::Cylinder1d,
                vec![(0.0, r)],
                regions,
                interfaces,
                vec![Face::XHigh],
            )?;
            TransportProblem::new(
                name,
                domain,
                xs,
                SourceTerm::Cosine {
                    amplitude: 0.2,
                    length: r,
                },
                vec![(Face::XHigh, BoundaryCondition::Vacuum)],
                vec![],
                "m",
            )
        }
        "pincell-vac-case1" => pincell_case(1, BoundaryCondition::Vacuum),
        "pincell-vac-case2" => pincell_case(2, BoundaryCondition::Vacuum),
        "pincell-vac-case3" => pincell_case(3, BoundaryCondition::Vacuum),
        "pincell-refl-case1" => pincell_case(1, BoundaryCondition::Reflecting),
        "pincell-refl-case2" => pincell_case(2, BoundaryCondition::Reflecting),
        "pincell-refl-case3" => pincell_case(3, BoundaryCondition::Reflecting),
        "pincell-7g" => {
            let sigma_t = SEVEN_GROUP_TOTAL.iter().map(|r| r.to_vec()).collect();
            let sigma_s = SEVEN_GROUP_SCATTERING
                .iter()
                .map(|r| r.iter().map(|row| row.to_vec()).collect())
                .collect();
            TransportProblem::new(
                name,
                pincell_domain(PINCELL_HALF_WIDTH, RegionShape::Disk { radius: PIN_RADIUS })?,
                CrossSections::new(sigma_t, sigma_s)?,
                SourceTerm::RegionwiseConstant {
                    values: vec![vec![1.0; 7], vec![0.0; 7]],
                    scale: 1.0 / (4.0 * PI),
                },
                all_faces(BoundaryCondition::Reflecting),
                vec![],
                "cm",
            )
        }
        _ => Err(RannError::Unknown {
            kind: "problem",
            name: name.to_string(),
        }),
    }
}
