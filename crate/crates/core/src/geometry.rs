//! Phase-space domains and deterministic collocation grids.
//!
//! Coordinates are ordered spatial axes first, then angular axes:
//!
//! | kind         | point layout       |
//! |--------------|--------------------|
//! | `Slab1d`     | `(x, mu)`          |
//! | `Cylinder1d` | `(x, phi, mu)`     |
//! | `PinCell2d`  | `(x, y, phi, mu)`  |
//!
//! In slab geometry `mu` is the direction cosine against the x axis, so the
//! direction vector is `(mu, 0, 0)` for the purpose of `n . Omega`. The other
//! kinds use `Omega = (sqrt(1 - mu^2) cos phi, sqrt(1 - mu^2) sin phi, mu)`.

use std::f64::consts::PI;
use std::ops::Range;

use faer::Mat;

use crate::error::{invalid, RannError, Result};
use crate::quadrature::{tensor_rule, trapezoid_rule, QuadratureRule};

const TWO_PI: f64 = 2.0 * PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeometryKind {
    Slab1d,
    Cylinder1d,
    PinCell2d,
}

impl GeometryKind {
    pub fn spatial_dim(self) -> usize {
        match self {
            GeometryKind::Slab1d | GeometryKind::Cylinder1d => 1,
            GeometryKind::PinCell2d => 2,
        }
    }

    pub fn angular_dim(self) -> usize {
        match self {
            GeometryKind::Slab1d => 1,
            GeometryKind::Cylinder1d | GeometryKind::PinCell2d => 2,
        }
    }

    pub fn dim(self) -> usize {
        self.spatial_dim() + self.angular_dim()
    }

    /// Parameter box of the angular variables.
    pub fn angular_box(self) -> Vec<(f64, f64)> {
        match self {
            GeometryKind::Slab1d => vec![(-1.0, 1.0)],
            _ => vec![(0.0, TWO_PI), (-1.0, 1.0)],
        }
    }

    pub fn angular_measure(self) -> f64 {
        match self {
            GeometryKind::Slab1d => 2.0,
            _ => 4.0 * PI,
        }
    }

    /// Normalization of the isotropic scattering kernel: `1/2` on `[-1, 1]`
    /// in slab geometry, `1/(4 pi)` over the full sphere otherwise.
    pub fn kernel_normalization(self) -> f64 {
        match self {
            GeometryKind::Slab1d => 0.5,
            _ => 1.0 / (4.0 * PI),
        }
    }

    /// Direction vector for the angular part of a point.
    pub fn direction(self, angles: &[f64]) -> [f64; 3] {
        match self {
            GeometryKind::Slab1d => [angles[0], 0.0, 0.0],
            _ => {
                let (phi, mu) = (angles[0], angles[1]);
                let s = (1.0 - mu * mu).max(0.0).sqrt();
                [s * phi.cos(), s * phi.sin(), mu]
            }
        }
    }
}

/// Spatial sub-region shape. Closed curves belong to the region on their inside.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegionShape {
    /// `x^2 + y^2 <= radius^2`.
    Disk { radius: f64 },
    /// `inner^2 < x^2 + y^2 <= outer^2`.
    Annulus { inner: f64, outer: f64 },
    /// `x <= bound` on the first spatial axis.
    HalfInterval { bound: f64 },
    /// Everything not claimed by an earlier shape.
    Complement,
}

impl RegionShape {
    pub fn contains(&self, r: &[f64]) -> bool {
        match *self {
            RegionShape::Disk { radius } => r[0] * r[0] + r[1] * r[1] <= radius * radius,
            RegionShape::Annulus { inner, outer } => {
                let rr = r[0] * r[0] + r[1] * r[1];
                rr > inner * inner && rr <= outer * outer
            }
            RegionShape::HalfInterval { bound } => r[0] <= bound,
            RegionShape::Complement => true,
        }
    }
}

/// Spatial face of the bounding box.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Face {
    XLow,
    XHigh,
    YLow,
    YHigh,
}

impl Face {
    pub fn normal(self) -> [f64; 3] {
        match self {
            Face::XLow => [-1.0, 0.0, 0.0],
            Face::XHigh => [1.0, 0.0, 0.0],
            Face::YLow => [0.0, -1.0, 0.0],
            Face::YHigh => [0.0, 1.0, 0.0],
        }
    }

    pub fn axis(self) -> usize {
        match self {
            Face::XLow | Face::XHigh => 0,
            Face::YLow | Face::YHigh => 1,
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "x-low" | "xlow" => Ok(Face::XLow),
            "x-high" | "xhigh" => Ok(Face::XHigh),
            "y-low" | "ylow" => Ok(Face::YLow),
            "y-high" | "yhigh" => Ok(Face::YHigh),
            _ => Err(RannError::Unknown {
                kind: "face",
                name: name.to_string(),
            }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryCondition {
    Vacuum,
    Reflecting,
}

/// Planar interface `x_axis = position` between two regions; the normal points
/// from `regions.0` into `regions.1`.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct Interface {
    pub axis: usize,
    pub position: f64,
    pub regions: (usize, usize),
}

impl Interface {
    pub fn normal(&self) -> [f64; 3] {
        let mut n = [0.0; 3];
        n[self.axis] = 1.0;
        n
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct PhaseSpaceDomain {
    pub kind: GeometryKind,
    pub spatial_box: Vec<(f64, f64)>,
    pub regions: Vec<RegionShape>,
    pub interfaces: Vec<Interface>,
    /// Faces carrying a boundary condition (the cylinder axis carries none).
    pub faces: Vec<Face>,
}

impl PhaseSpaceDomain {
    pub fn new(
        kind: GeometryKind,
        spatial_box: Vec<(f64, f64)>,
        regions: Vec<RegionShape>,
        interfaces: Vec<Interface>,
        faces: Vec<Face>,
    ) -> Result<Self> {
        if spatial_box.len() != kind.spatial_dim() {
            return Err(RannError::DimensionMismatch {
                what: "spatial box axes",
                expected: kind.spatial_dim(),
                actual: spatial_box.len(),
            });
        }
        if spatial_box.iter().any(|(lo, hi)| !(lo < hi)) {
            return Err(invalid("spatial box intervals must be nonempty"));
        }
        if !matches!(regions.last(), Some(RegionShape::Complement)) {
            return Err(invalid("region list must end with a complement region"));
        }
        for iface in &interfaces {
            if iface.axis >= kind.spatial_dim() {
                return Err(invalid("interface axis out of range"));
            }
            if iface.regions.0 >= regions.len() || iface.regions.1 >= regions.len() {
                return Err(invalid("interface references unknown region"));
            }
        }
        for face in &faces {
            if face.axis() >= kind.spatial_dim() {
                return Err(invalid(format!("face {face:?} does not exist in {kind:?}")));
            }
        }
        Ok(Self {
            kind,
            spatial_box,
            regions,
            interfaces,
            faces,
        })
    }

    pub fn region_count(&self) -> usize {
        self.regions.len()
    }

    /// Region id of a spatial location; total by construction.
    pub fn region_of(&self, spatial: &[f64]) -> usize {
        self.regions
            .iter()
            .position(|shape| shape.contains(spatial))
            .unwrap_or(self.regions.len() - 1)
    }

    pub fn spatial_measure(&self) -> f64 {
        self.spatial_box.iter().map(|(lo, hi)| hi - lo).product()
    }

    /// `|D|`: spatial volume times the angular parameter-box measure.
    pub fn measure(&self) -> f64 {
        self.spatial_measure() * self.kind.angular_measure()
    }

    /// Measure of the spatial part of a face (1 for point faces in 1D).
    fn face_spatial_measure(&self, face: Face) -> f64 {
        (0..self.kind.spatial_dim())
            .filter(|&a| a != face.axis())
            .map(|a| self.spatial_box[a].1 - self.spatial_box[a].0)
            .product()
    }

    /// Measure of the inflow part `Gamma^-` over the given faces.
    pub fn inflow_measure(&self, faces: &[Face]) -> f64 {
        let angular = self.kind.angular_measure() / 2.0;
        faces
            .iter()
            .map(|&f| self.face_spatial_measure(f) * angular)
            .sum()
    }

    pub fn interface_measure(&self, id: usize) -> f64 {
        let axis = self.interfaces[id].axis;
        let spatial: f64 = (0..self.kind.spatial_dim())
            .filter(|&a| a != axis)
            .map(|a| self.spatial_box[a].1 - self.spatial_box[a].0)
            .product();
        spatial * self.kind.angular_measure()
    }

    pub fn contains_spatial(&self, spatial: &[f64]) -> bool {
        let tol = 1e-12;
        spatial
            .iter()
            .zip(&self.spatial_box)
            .all(|(x, (lo, hi))| *x >= lo - tol && *x <= hi + tol)
    }

    fn face_value(&self, face: Face) -> f64 {
        let (lo, hi) = self.spatial_box[face.axis()];
        match face {
            Face::XLow | Face::YLow => lo,
            Face::XHigh | Face::YHigh => hi,
        }
    }
}

/// Row-major set of points in `dim` dimensions.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Points {
    dim: usize,
    coords: Vec<f64>,
}

impl Points {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            coords: Vec::new(),
        }
    }

    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 || coords.len() % dim != 0 {
            return Err(invalid("flat coordinate length is not a multiple of the dimension"));
        }
        Ok(Self { dim, coords })
    }

    pub fn from_rows(dim: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let mut p = Self::new(dim);
        for r in rows {
            if r.len() != dim {
                return Err(RannError::DimensionMismatch {
                    what: "point dimension",
                    expected: dim,
                    actual: r.len(),
                });
            }
            p.push(r);
        }
        Ok(p)
    }

    pub fn push(&mut self, x: &[f64]) {
        debug_assert_eq!(x.len(), self.dim);
        self.coords.extend_from_slice(x);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.coords.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim.max(1))
    }

    pub fn flat(&self) -> &[f64] {
        &self.coords
    }

    pub fn to_mat(&self) -> Mat<f64> {
        Mat::from_fn(self.len(), self.dim, |i, j| self.coords[i * self.dim + j])
    }
}

/// Equispaced grid with endpoints; a single node sits at the midpoint.
fn axis_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    let h = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { hi } else { lo + h * i as f64 })
        .collect()
}

/// Visits the tensor grid, last axis fastest.
fn for_each_tensor(axes: &[Vec<f64>], mut f: impl FnMut(&[f64])) {
    let total: usize = axes.iter().map(Vec::len).product();
    let mut x = vec![0.0; axes.len()];
    for flat in 0..total {
        let mut rem = flat;
        for a in (0..axes.len()).rev() {
            let n = axes[a].len();
            x[a] = axes[a][rem % n];
            rem /= n;
        }
        f(&x);
    }
}

/// Interior collocation block with its angular quadrature structure.
#[derive(Clone, Debug)]
pub struct InteriorBlock {
    pub points: Points,
    /// Consecutive runs of points sharing one spatial location; each run is the
    /// full angular grid through that location.
    pub slices: Vec<Range<usize>>,
    /// Trapezoid rule whose nodes are the angular grid of every slice.
    pub angular_rule: QuadratureRule,
}

/// Equispaced tensor grid over the whole phase-space box (endpoints included),
/// keeping only points strictly inside the spatial box.
pub fn tensor_grid(domain: &PhaseSpaceDomain, counts: &[usize]) -> Result<InteriorBlock> {
    let kind = domain.kind;
    if counts.len() != kind.dim() {
        return Err(RannError::DimensionMismatch {
            what: "interior grid counts",
            expected: kind.dim(),
            actual: counts.len(),
        });
    }
    if let Some(c) = counts.iter().find(|&&c| c < 2) {
        return Err(invalid(format!("grid counts must be at least 2, got {c}")));
    }
    let sd = kind.spatial_dim();
    let spatial_axes: Vec<Vec<f64>> = (0..sd)
        .map(|a| {
            let (lo, hi) = domain.spatial_box[a];
            let g = axis_grid(lo, hi, counts[a]);
            g[1..g.len() - 1].to_vec()
        })
        .collect();
    let angular_box = kind.angular_box();
    let angular_axes: Vec<Vec<f64>> = angular_box
        .iter()
        .enumerate()
        .map(|(a, (lo, hi))| axis_grid(*lo, *hi, counts[sd + a]))
        .collect();
    let rules = angular_box
        .iter()
        .enumerate()
        .map(|(a, (lo, hi))| trapezoid_rule(*lo, *hi, counts[sd + a]))
        .collect::<Result<Vec<_>>>()?;
    let angular_rule = tensor_rule(&rules)?;

    let mut points = Points::new(kind.dim());
    let mut slices = Vec::new();
    let mut x = vec![0.0; kind.dim()];
    if spatial_axes.iter().all(|a| !a.is_empty()) {
        for_each_tensor(&spatial_axes, |r| {
            let start = points.len();
            x[..sd].copy_from_slice(r);
            for_each_tensor(&angular_axes, |ang| {
                x[sd..].copy_from_slice(ang);
                points.push(&x);
            });
            slices.push(start..points.len());
        });
    }
    Ok(InteriorBlock {
        points,
        slices,
        angular_rule,
    })
}

/// Angular sector of inflow directions for a face, as parameter intervals.
/// The `phi` range is a contiguous arc that may wrap past `2 pi`.
fn inflow_sector(kind: GeometryKind, face: Face) -> Vec<(f64, f64)> {
    match kind {
        GeometryKind::Slab1d => match face {
            Face::XLow => vec![(0.0, 1.0)],
            _ => vec![(-1.0, 0.0)],
        },
        _ => {
            // Arc of width pi centred on the inward normal direction.
            let centre = match face {
                Face::XLow => 0.0,
                Face::XHigh => PI,
                Face::YLow => 0.5 * PI,
                Face::YHigh => 1.5 * PI,
            };
            vec![(centre - 0.5 * PI, centre + 0.5 * PI), (-1.0, 1.0)]
        }
    }
}

fn wrap_angle(phi: f64) -> f64 {
    let w = phi.rem_euclid(TWO_PI);
    // Keep 2 pi itself representable as the closing endpoint of a grid.
    if (w - TWO_PI).abs() < 1e-14 {
        0.0
    } else {
        w
    }
}

/// Boundary samples on one face, restricted to inflow directions.
///
/// `counts` covers the free coordinates: the other spatial axes (pin-cell only)
/// followed by the angular axes of the inflow sector.
pub fn boundary_grid(domain: &PhaseSpaceDomain, face: Face, counts: &[usize]) -> Result<Points> {
    let kind = domain.kind;
    if face.axis() >= kind.spatial_dim() {
        return Err(RannError::Unknown {
            kind: "face",
            name: format!("{face:?}"),
        });
    }
    let sd = kind.spatial_dim();
    let free_spatial: Vec<usize> = (0..sd).filter(|&a| a != face.axis()).collect();
    let expected = free_spatial.len() + kind.angular_dim();
    if counts.len() != expected {
        return Err(RannError::DimensionMismatch {
            what: "boundary grid counts",
            expected,
            actual: counts.len(),
        });
    }
    if let Some(c) = counts.iter().find(|&&c| c < 2) {
        return Err(invalid(format!("boundary counts must be at least 2, got {c}")));
    }
    let mut axes = Vec::with_capacity(expected);
    for (i, &a) in free_spatial.iter().enumerate() {
        let (lo, hi) = domain.spatial_box[a];
        axes.push(axis_grid(lo, hi, counts[i]));
    }
    for (i, (lo, hi)) in inflow_sector(kind, face).into_iter().enumerate() {
        axes.push(axis_grid(lo, hi, counts[free_spatial.len() + i]));
    }
    let fixed = domain.face_value(face);
    let mut points = Points::new(kind.dim());
    let mut x = vec![0.0; kind.dim()];
    for_each_tensor(&axes, |free| {
        x[face.axis()] = fixed;
        for (i, &a) in free_spatial.iter().enumerate() {
            x[a] = free[i];
        }
        for k in 0..kind.angular_dim() {
            x[sd + k] = free[free_spatial.len() + k];
        }
        if kind != GeometryKind::Slab1d {
            x[sd] = wrap_angle(x[sd]);
        }
        points.push(&x);
    });
    Ok(points)
}

/// Interface samples over all directions; a count of 1 places the single node
/// at the midpoint of that axis.
pub fn interface_grid(domain: &PhaseSpaceDomain, id: usize, counts: &[usize]) -> Result<Points> {
    let kind = domain.kind;
    let iface = domain.interfaces.get(id).ok_or_else(|| RannError::Unknown {
        kind: "interface",
        name: id.to_string(),
    })?;
    let sd = kind.spatial_dim();
    let free_spatial: Vec<usize> = (0..sd).filter(|&a| a != iface.axis).collect();
    let expected = free_spatial.len() + kind.angular_dim();
    if counts.len() != expected {
        return Err(RannError::DimensionMismatch {
            what: "interface grid counts",
            expected,
            actual: counts.len(),
        });
    }
    if counts.contains(&0) {
        return Err(invalid("interface counts must be positive"));
    }
    let mut axes = Vec::with_capacity(expected);
    for (i, &a) in free_spatial.iter().enumerate() {
        let (lo, hi) = domain.spatial_box[a];
        axes.push(axis_grid(lo, hi, counts[i]));
    }
    for (i, (lo, hi)) in kind.angular_box().into_iter().enumerate() {
        axes.push(axis_grid(lo, hi, counts[free_spatial.len() + i]));
    }
    let mut points = Points::new(kind.dim());
    let mut x = vec![0.0; kind.dim()];
    for_each_tensor(&axes, |free| {
        x[iface.axis] = iface.position;
        for (i, &a) in free_spatial.iter().enumerate() {
            x[a] = free[i];
        }
        x[sd..].copy_from_slice(&free[free_spatial.len()..]);
        points.push(&x);
    });
    Ok(points)
}

fn check_unit(normal: &[f64; 3]) -> Result<()> {
    let norm = normal.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(invalid(format!("normal {normal:?} is not a unit vector")));
    }
    Ok(())
}

/// Transport trace weight `|n . Omega|`.
pub fn trace_weight(kind: GeometryKind, normal: &[f64; 3], angles: &[f64]) -> Result<f64> {
    check_unit(normal)?;
    if angles.len() != kind.angular_dim() {
        return Err(RannError::DimensionMismatch {
            what: "angular coordinates",
            expected: kind.angular_dim(),
            actual: angles.len(),
        });
    }
    let mu = angles[kind.angular_dim() - 1];
    if !(-1.0..=1.0).contains(&mu) {
        return Err(invalid(format!("mu = {mu} outside [-1, 1]")));
    }
    let omega = kind.direction(angles);
    Ok(normal.iter().zip(omega).map(|(n, o)| n * o).sum::<f64>().abs())
}

/// Specular reflection of a direction across an axis-aligned face.
///
/// Faces normal to x map `phi -> pi - phi`, faces normal to y map
/// `phi -> 2 pi - phi` (both modulo `2 pi`); `mu` is unchanged. In slab
/// geometry the x faces map `mu -> -mu`.
pub fn reflect_direction(kind: GeometryKind, normal: &[f64; 3], angles: &[f64]) -> Result<Vec<f64>> {
    check_unit(normal)?;
    let axis = normal
        .iter()
        .position(|v| (v.abs() - 1.0).abs() < 1e-12)
        .filter(|&a| a < 2)
        .ok_or_else(|| invalid(format!("reflection needs an x or y normal, got {normal:?}")))?;
    match kind {
        GeometryKind::Slab1d => {
            if axis != 0 {
                return Err(invalid("slab geometry only has x faces"));
            }
            Ok(vec![-angles[0]])
        }
        _ => {
            let phi = angles[0];
            let reflected = if axis == 0 { PI - phi } else { TWO_PI - phi };
            Ok(vec![reflected.rem_euclid(TWO_PI), angles[1]])
        }
    }
}

/// Collocation grid sizes.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct CollocationSpec {
    /// Per-axis interior counts (all phase-space axes).
    pub interior: Vec<usize>,
    /// Per-face boundary counts over the face's free coordinates.
    pub boundary: Vec<usize>,
    /// Interface counts over the interface's free coordinates; empty skips
    /// interface sampling.
    pub interface: Vec<usize>,
}

/// Boundary sample block with face bookkeeping.
#[derive(Clone, Debug)]
pub struct BoundaryBlock {
    pub points: Points,
    pub faces: Vec<Face>,
    pub conditions: Vec<BoundaryCondition>,
}

#[derive(Clone, Debug)]
pub struct InterfaceBlock {
    pub points: Points,
    pub interface_ids: Vec<usize>,
}

/// Point-value normalization constraint.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct Anchor {
    pub point: Vec<f64>,
    pub value: f64,
}

#[derive(Clone, Debug)]
pub struct CollocationSet {
    pub kind: GeometryKind,
    pub interior: InteriorBlock,
    pub boundary: BoundaryBlock,
    pub interface: InterfaceBlock,
    pub anchors: Vec<Anchor>,
    pub eta_interior: f64,
    pub eta_boundary: f64,
    pub eta_interface: f64,
}

impl CollocationSet {
    /// Builds all blocks and the scale factors `sqrt(|D|/N_I)`,
    /// `sqrt(|Gamma^-|/N_B)` and `sqrt(|Gamma_I|/N_F)`.
    pub fn build(
        domain: &PhaseSpaceDomain,
        conditions: &[(Face, BoundaryCondition)],
        spec: &CollocationSpec,
        anchors: Vec<Anchor>,
    ) -> Result<Self> {
        let kind = domain.kind;
        let interior = tensor_grid(domain, &spec.interior)?;
        if interior.points.is_empty() {
            return Err(invalid("interior collocation set is empty"));
        }

        let mut boundary = BoundaryBlock {
            points: Points::new(kind.dim()),
            faces: Vec::new(),
            conditions: Vec::new(),
        };
        let mut faces = Vec::new();
        for &face in &domain.faces {
            let bc = conditions
                .iter()
                .find(|(f, _)| *f == face)
                .map(|(_, bc)| *bc)
                .ok_or_else(|| invalid(format!("face {face:?} has no boundary condition")))?;
            let pts = boundary_grid(domain, face, &spec.boundary)?;
            for p in pts.iter() {
                boundary.points.push(p);
                boundary.faces.push(face);
                boundary.conditions.push(bc);
            }
            faces.push(face);
        }

        let mut interface = InterfaceBlock {
            points: Points::new(kind.dim()),
            interface_ids: Vec::new(),
        };
        let mut interface_measure = 0.0;
        let active_interfaces = if spec.interface.is_empty() {
            0
        } else {
            domain.interfaces.len()
        };
        for id in 0..active_interfaces {
            let pts = interface_grid(domain, id, &spec.interface)?;
            for p in pts.iter() {
                interface.points.push(p);
                interface.interface_ids.push(id);
            }
            interface_measure += domain.interface_measure(id);
        }

        let eta = |measure: f64, n: usize| if n == 0 { 0.0 } else { (measure / n as f64).sqrt() };
        Ok(Self {
            kind,
            eta_interior: eta(domain.measure(), interior.points.len()),
            eta_boundary: eta(domain.inflow_measure(&faces), boundary.points.len()),
            eta_interface: eta(interface_measure, interface.points.len()),
            interior,
            boundary,
            interface,
            anchors,
        })
    }
}
