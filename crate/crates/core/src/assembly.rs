//! Assembly of the stacked weighted least-squares system.
//!
//! Row blocks appear in the order interior, boundary, interface, anchor; inside
//! each block the rows are grouped by energy group in the order of the group
//! set being solved. Columns are grouped by energy group, then by subdomain.

use std::io::Write;
use std::ops::Range;
use std::path::Path;

use faer::Mat;
use rayon::prelude::*;

use crate::basis::RandomFeatureBasis;
use crate::error::{invalid, RannError, Result};
use crate::geometry::{trace_weight, CollocationSet, GeometryKind, Points};
use crate::transport::{boundary_row, check_rule_matches, streaming_direction, TransportProblem};

/// Rows evaluated per parallel batch.
const BATCH_ROWS: usize = 4096;

/// Magic bytes of the binary system dump.
pub const DUMP_MAGIC: &[u8; 8] = b"RANNSYS1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowBlockKind {
    Interior,
    Boundary,
    Interface,
    Anchor,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct RowBlock {
    pub kind: RowBlockKind,
    pub group: usize,
    pub start: usize,
    pub len: usize,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ColBlock {
    pub subdomain: usize,
    pub group: usize,
    pub start: usize,
    pub len: usize,
}

impl ColBlock {
    pub fn range(&self) -> Range<usize> {
        self.start..self.start + self.len
    }
}

/// Dense least-squares system `min |A alpha - F|^2` with block bookkeeping.
#[derive(Clone, Debug)]
pub struct LinearSystem {
    pub matrix: Mat<f64>,
    pub rhs: Vec<f64>,
    pub row_blocks: Vec<RowBlock>,
    pub col_blocks: Vec<ColBlock>,
}

impl LinearSystem {
    pub fn nrows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.matrix.ncols()
    }

    /// `|A alpha - F|^2`.
    pub fn residual(&self, alpha: &[f64]) -> Result<f64> {
        if alpha.len() != self.ncols() {
            return Err(RannError::DimensionMismatch {
                what: "coefficient length",
                expected: self.ncols(),
                actual: alpha.len(),
            });
        }
        let mut r: Vec<f64> = self.rhs.iter().map(|f| -f).collect();
        for (j, a) in alpha.iter().enumerate() {
            if *a == 0.0 {
                continue;
            }
            for (ri, v) in r.iter_mut().zip(self.matrix.col(j).iter()) {
                *ri += v * a;
            }
        }
        Ok(r.iter().map(|v| v * v).sum())
    }

    /// Checks that blocks tile the matrix and that every entry is finite.
    pub fn validate(&self) -> Result<()> {
        let mut next = 0;
        for b in &self.row_blocks {
            if b.start != next {
                return Err(invalid("row blocks do not tile the system"));
            }
            next += b.len;
        }
        if next != self.nrows() || self.rhs.len() != self.nrows() {
            return Err(invalid("row blocks do not cover the system"));
        }
        let mut next = 0;
        for b in &self.col_blocks {
            if b.start != next {
                return Err(invalid("column blocks do not tile the system"));
            }
            next += b.len;
        }
        if next != self.ncols() {
            return Err(invalid("column blocks do not cover the system"));
        }
        let finite = self.rhs.iter().all(|v| v.is_finite())
            && self.matrix.col_iter().all(|c| c.iter().all(|v| v.is_finite()));
        if !finite {
            return Err(RannError::NonFinite("assembled system"));
        }
        Ok(())
    }

    /// Writes the debugging dump: 8 magic bytes, `N_rows` and `M_cols` as
    /// little-endian `u64`, the matrix row-major as little-endian `f64`, then
    /// the right-hand side.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        out.write_all(DUMP_MAGIC)?;
        out.write_all(&(self.nrows() as u64).to_le_bytes())?;
        out.write_all(&(self.ncols() as u64).to_le_bytes())?;
        for i in 0..self.nrows() {
            for j in 0..self.ncols() {
                out.write_all(&self.matrix[(i, j)].to_le_bytes())?;
            }
        }
        for v in &self.rhs {
            out.write_all(&v.to_le_bytes())?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Coefficients of a group that has already been solved, per subdomain.
#[derive(Clone, Copy, Debug)]
pub struct SolvedGroup<'a> {
    pub group: usize,
    pub coefficients: &'a [Vec<f64>],
}

/// Subdomain that owns a spatial location: the single network, or the region
/// id when there is one network per region.
pub fn owner(problem: &TransportProblem, networks: usize, point: &[f64]) -> usize {
    if networks == 1 {
        0
    } else {
        problem.region_of(point)
    }
}

struct SliceEval {
    /// `n x m` row-major.
    values: Vec<f64>,
    directional: Vec<f64>,
    sums: Vec<f64>,
    owner: usize,
}

fn eval_slice(
    problem: &TransportProblem,
    bases: &[RandomFeatureBasis],
    points: &Points,
    slice: Range<usize>,
    weights: &[f64],
) -> SliceEval {
    let kind = problem.kind();
    let k = owner(problem, bases.len(), points.point(slice.start));
    let basis = &bases[k];
    let m = basis.len();
    let n = slice.len();
    let mut values = vec![0.0; n * m];
    let mut directional = vec![0.0; n * m];
    let mut sums = vec![0.0; m];
    let mut dir = vec![0.0; kind.dim()];
    for (a, i) in slice.enumerate() {
        let p = points.point(i);
        streaming_direction(kind, p, &mut dir);
        let v = &mut values[a * m..(a + 1) * m];
        basis.eval_point_directional(p, &dir, v, &mut directional[a * m..(a + 1) * m]);
        let beta = weights[a];
        for (s, x) in sums.iter_mut().zip(v.iter()) {
            *s += beta * x;
        }
    }
    SliceEval {
        values,
        directional,
        sums,
        owner: k,
    }
}

/// Groups consecutive slices into batches of roughly `BATCH_ROWS` rows.
fn batches(slices: &[Range<usize>]) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut rows = 0;
    for (i, s) in slices.iter().enumerate() {
        rows += s.len();
        if rows >= BATCH_ROWS {
            out.push(start..i + 1);
            start = i + 1;
            rows = 0;
        }
    }
    if start < slices.len() {
        out.push(start..slices.len());
    }
    out
}

/// Assembles the system for a set of jointly solved groups.
///
/// `bases` holds one basis per subdomain (one in total for a single network,
/// one per region for local networks). Scattering from groups in `solved`
/// is moved to the right-hand side.
pub fn assemble(
    problem: &TransportProblem,
    bases: &[RandomFeatureBasis],
    colloc: &CollocationSet,
    groups: &[usize],
    solved: &[SolvedGroup<'_>],
) -> Result<LinearSystem> {
    let kind = problem.kind();
    let regions = problem.domain.region_count();
    if bases.is_empty() || (bases.len() != 1 && bases.len() != regions) {
        return Err(invalid(format!(
            "expected 1 or {regions} bases, got {}",
            bases.len()
        )));
    }
    for b in bases {
        if b.dim() != kind.dim() {
            return Err(RannError::DimensionMismatch {
                what: "basis input dimension",
                expected: kind.dim(),
                actual: b.dim(),
            });
        }
    }
    if colloc.kind != kind {
        return Err(invalid("collocation set belongs to another geometry"));
    }
    if colloc.interior.points.is_empty() {
        return Err(invalid("interior collocation set is empty"));
    }
    let g_total = problem.groups();
    if groups.is_empty() || groups.iter().any(|&g| g >= g_total) {
        return Err(invalid(format!("group set {groups:?} invalid for {g_total} groups")));
    }
    for s in solved {
        if s.group >= g_total || groups.contains(&s.group) {
            return Err(invalid(format!("solved group {} is invalid", s.group)));
        }
        if s.coefficients.len() != bases.len()
            || s.coefficients.iter().zip(bases).any(|(c, b)| c.len() != b.len())
        {
            return Err(invalid("solved-group coefficients do not match the bases"));
        }
    }
    check_rule_matches(&colloc.interior, &colloc.interior.angular_rule, kind)?;

    let mut col_blocks = Vec::new();
    let mut ncols = 0;
    for &g in groups {
        for (k, b) in bases.iter().enumerate() {
            col_blocks.push(ColBlock {
                subdomain: k,
                group: g,
                start: ncols,
                len: b.len(),
            });
            ncols += b.len();
        }
    }
    let col_start = |gi: usize, k: usize| col_blocks[gi * bases.len() + k].start;

    let local = bases.len() > 1;
    let n_int = colloc.interior.points.len();
    let n_bnd = colloc.boundary.points.len();
    let n_ifc = if local { colloc.interface.points.len() } else { 0 };
    let n_anc = problem.anchors.len();
    let mut row_blocks = Vec::new();
    let mut nrows = 0;
    for (kind_label, n) in [
        (RowBlockKind::Interior, n_int),
        (RowBlockKind::Boundary, n_bnd),
        (RowBlockKind::Interface, n_ifc),
        (RowBlockKind::Anchor, n_anc),
    ] {
        if n == 0 {
            continue;
        }
        for &g in groups {
            row_blocks.push(RowBlock {
                kind: kind_label,
                group: g,
                start: nrows,
                len: n,
            });
            nrows += n;
        }
    }

    let mut matrix = Mat::<f64>::zeros(nrows, ncols);
    let mut rhs = vec![0.0; nrows];
    let norm = kind.kernel_normalization();

    // Interior rows.
    let eta = colloc.eta_interior;
    let weights = colloc.interior.angular_rule.weights();
    let slices = &colloc.interior.slices;
    for batch in batches(slices) {
        let evals: Vec<SliceEval> = slices[batch.clone()]
            .par_iter()
            .map(|s| eval_slice(problem, bases, &colloc.interior.points, s.clone(), weights))
            .collect();
        for (ev, slice) in evals.iter().zip(&slices[batch]) {
            let k = ev.owner;
            let m = bases[k].len();
            let region = problem.region_of(colloc.interior.points.point(slice.start));
            let carried: Vec<(usize, f64)> = solved
                .iter()
                .map(|s| {
                    let proj: f64 = ev.sums.iter().zip(&s.coefficients[k]).map(|(a, b)| a * b).sum();
                    (s.group, proj)
                })
                .collect();
            for (gi, &g) in groups.iter().enumerate() {
                let sigma_t = problem.xs.total(region, g);
                let row0 = gi * n_int;
                for (a, i) in slice.clone().enumerate() {
                    let row = row0 + i;
                    let v = &ev.values[a * m..(a + 1) * m];
                    let d = &ev.directional[a * m..(a + 1) * m];
                    for (hi, &h) in groups.iter().enumerate() {
                        let c = -norm * problem.xs.kernel(region, h, g);
                        let base = col_start(hi, k);
                        if h == g {
                            for j in 0..m {
                                matrix[(row, base + j)] =
                                    eta * (d[j] + sigma_t * v[j] + c * ev.sums[j]);
                            }
                        } else if c != 0.0 {
                            for j in 0..m {
                                matrix[(row, base + j)] = eta * c * ev.sums[j];
                            }
                        }
                    }
                    let p = colloc.interior.points.point(i);
                    let mut f = problem.source.value(p, region, g);
                    for &(gp, proj) in &carried {
                        f += norm * problem.xs.kernel(region, gp, g) * proj;
                    }
                    rhs[row] = eta * f;
                }
            }
        }
    }

    // Boundary rows.
    let mut offset = n_int * groups.len();
    if n_bnd > 0 {
        let eta = colloc.eta_boundary;
        let block = &colloc.boundary;
        let chunks: Vec<Range<usize>> = (0..n_bnd)
            .step_by(BATCH_ROWS)
            .map(|s| s..(s + BATCH_ROWS).min(n_bnd))
            .collect();
        for chunk in chunks {
            let rows: Vec<(usize, Vec<f64>)> = chunk
                .clone()
                .into_par_iter()
                .map(|i| {
                    let p = block.points.point(i);
                    let k = owner(problem, bases.len(), p);
                    let mut row = vec![0.0; bases[k].len()];
                    let mut scratch = Vec::new();
                    boundary_row(
                        &bases[k],
                        kind,
                        p,
                        block.faces[i],
                        block.conditions[i],
                        &mut scratch,
                        &mut row,
                    )
                    .map(|_| (k, row))
                })
                .collect::<Result<_>>()?;
            for (i, (k, row)) in chunk.zip(rows) {
                for gi in 0..groups.len() {
                    let r = offset + gi * n_bnd + i;
                    let base = col_start(gi, k);
                    for (j, v) in row.iter().enumerate() {
                        matrix[(r, base + j)] = eta * v;
                    }
                }
            }
        }
        offset += n_bnd * groups.len();
    }

    // Interface rows.
    if n_ifc > 0 {
        let eta = colloc.eta_interface;
        let block = &colloc.interface;
        let sd = kind.spatial_dim();
        for i in 0..n_ifc {
            let p = block.points.point(i);
            let iface = &problem.domain.interfaces[block.interface_ids[i]];
            let w = trace_weight(kind, &iface.normal(), &p[sd..])?.sqrt();
            let (k1, k2) = iface.regions;
            let mut v1 = vec![0.0; bases[k1].len()];
            let mut v2 = vec![0.0; bases[k2].len()];
            bases[k1].eval_point(p, &mut v1);
            bases[k2].eval_point(p, &mut v2);
            for gi in 0..groups.len() {
                let r = offset + gi * n_ifc + i;
                let b1 = col_start(gi, k1);
                let b2 = col_start(gi, k2);
                for (j, v) in v1.iter().enumerate() {
                    matrix[(r, b1 + j)] += eta * w * v;
                }
                for (j, v) in v2.iter().enumerate() {
                    matrix[(r, b2 + j)] -= eta * w * v;
                }
            }
        }
        offset += n_ifc * groups.len();
    }

    // Anchor rows, unit weight.
    for (a, anchor) in problem.anchors.iter().enumerate() {
        let k = owner(problem, bases.len(), &anchor.point);
        let mut v = vec![0.0; bases[k].len()];
        bases[k].eval_point(&anchor.point, &mut v);
        for gi in 0..groups.len() {
            let r = offset + gi * n_anc + a;
            let base = col_start(gi, k);
            for (j, x) in v.iter().enumerate() {
                matrix[(r, base + j)] = *x;
            }
            rhs[r] = anchor.value;
        }
    }

    let system = LinearSystem {
        matrix,
        rhs,
        row_blocks,
        col_blocks,
    };
    system.validate()?;
    Ok(system)
}

/// Angular integrals `S_j(r) = sum_k beta_k psi_j(r, Omega_k)` of every basis
/// function at one spatial location.
pub fn angular_moments(
    basis: &RandomFeatureBasis,
    kind: GeometryKind,
    spatial: &[f64],
    rule: &crate::quadrature::QuadratureRule,
) -> Vec<f64> {
    let sd = kind.spatial_dim();
    let m = basis.len();
    let mut x = vec![0.0; kind.dim()];
    x[..sd].copy_from_slice(spatial);
    let mut v = vec![0.0; m];
    let mut sums = vec![0.0; m];
    for k in 0..rule.len() {
        x[sd..].copy_from_slice(rule.node(k));
        basis.eval_point(&x, &mut v);
        let beta = rule.weights()[k];
        for (s, val) in sums.iter_mut().zip(&v) {
            *s += beta * val;
        }
    }
    sums
}
