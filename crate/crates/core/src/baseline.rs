//! Deterministic discrete-ordinates reference solvers: upwind finite
//! differences for the slab and step finite volumes for the pin cell.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::analysis::{ScalarFluxField, SLAB_BENCHMARK};
use crate::error::{invalid, RannError, Result};
use crate::geometry::{BoundaryCondition, Face, GeometryKind, Points};
use crate::quadrature::{gauss_legendre_rule, trapezoid_rule};
use crate::transport::TransportProblem;

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct SnConfig {
    /// Cells per spatial axis; the slab uses only the first entry.
    pub cells: Vec<usize>,
    /// Ordinates per angular axis: `[K]` in the slab, `[N_phi, N_mu]` in the pin cell.
    pub ordinates: Vec<usize>,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl SnConfig {
    pub fn slab(cells: usize, ordinates: usize) -> Self {
        Self {
            cells: vec![cells],
            ordinates: vec![ordinates],
            max_iterations: 20_000,
            tolerance: 1e-10,
        }
    }

    pub fn pincell(cells: usize, n_phi: usize, n_mu: usize) -> Self {
        Self {
            cells: vec![cells, cells],
            ordinates: vec![n_phi, n_mu],
            max_iterations: 20_000,
            tolerance: 1e-10,
        }
    }

    fn validate(&self, spatial: usize, angular: usize) -> Result<()> {
        if self.cells.len() != spatial || self.ordinates.len() != angular {
            return Err(invalid(format!(
                "S_N config needs {spatial} cell counts and {angular} ordinate counts"
            )));
        }
        if self.cells.iter().chain(&self.ordinates).any(|&c| c < 2) {
            return Err(invalid("S_N counts must be at least 2"));
        }
        if !(self.tolerance > 0.0) || self.max_iterations == 0 {
            return Err(invalid("S_N tolerance and iteration limit must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SnSolution {
    pub flux: ScalarFluxField,
    pub iterations: usize,
    /// `max |Phi^(n+1) - Phi^n|` per iteration.
    pub history: Vec<f64>,
}

fn one_group(problem: &TransportProblem) -> Result<()> {
    if problem.groups() != 1 {
        return Err(invalid("the S_N baseline handles one-group problems"));
    }
    Ok(())
}

fn max_change(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Linear interpolation of a 1D one-group field at `x`.
pub fn interpolate_1d(field: &ScalarFluxField, x: f64) -> Result<f64> {
    let xs = field.grid.flat();
    if field.grid.dim() != 1 || xs.len() < 2 {
        return Err(invalid("interpolation needs a 1D grid with two points"));
    }
    if x < xs[0] - 1e-12 || x > xs[xs.len() - 1] + 1e-12 {
        return Err(RannError::OutsideDomain(vec![x]));
    }
    let i = xs.partition_point(|&v| v <= x).clamp(1, xs.len() - 1);
    let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    Ok((1.0 - t) * field.value(i - 1, 0) + t * field.value(i, 0))
}

/// `Phi(x)/Phi(0)` at the benchmark locations `x/b`.
pub fn normalized_benchmark_values(field: &ScalarFluxField, half_width: f64) -> Result<Vec<(f64, f64)>> {
    let centre = interpolate_1d(field, 0.0)?;
    if centre == 0.0 {
        return Err(invalid("scalar flux vanishes at the normalization point"));
    }
    SLAB_BENCHMARK
        .iter()
        .map(|(f, _)| Ok((*f, interpolate_1d(field, f * half_width)? / centre)))
        .collect()
}

/// Slab discrete ordinates on `M + 1` nodes with a `K`-point trapezoid rule in
/// `mu`. Problems with anchors and no source are treated as critical: each
/// iterate is rescaled to `Phi(0) = 1`.
pub fn solve_slab_sn(problem: &TransportProblem, config: &SnConfig) -> Result<SnSolution> {
    if problem.kind() != GeometryKind::Slab1d {
        return Err(invalid("solve_slab_sn needs slab geometry"));
    }
    one_group(problem)?;
    config.validate(1, 1)?;
    let (lo, hi) = problem.domain.spatial_box[0];
    let m = config.cells[0];
    let h = (hi - lo) / m as f64;
    let x: Vec<f64> = (0..=m).map(|i| if i == m { hi } else { lo + h * i as f64 }).collect();
    let rule = trapezoid_rule(-1.0, 1.0, config.ordinates[0])?;
    let mu: Vec<f64> = rule.nodes().to_vec();
    let w = rule.weights();
    let sigma: Vec<f64> = x.iter().map(|&xi| problem.xs.total(problem.region_of(&[xi, 0.0]), 0)).collect();
    let kappa: Vec<f64> = x.iter().map(|&xi| problem.xs.kernel(problem.region_of(&[xi, 0.0]), 0, 0)).collect();
    let external: Vec<Vec<f64>> = mu
        .iter()
        .map(|&u| x.iter().map(|&xi| problem.source_value(&[xi, u], 0)).collect())
        .collect();
    let eigen = !problem.anchors.is_empty() && external.iter().flatten().all(|&q| q == 0.0);
    let refl_low = problem.boundary_condition(Face::XLow) == Some(BoundaryCondition::Reflecting);
    let refl_high = problem.boundary_condition(Face::XHigh) == Some(BoundaryCondition::Reflecting);
    let k = mu.len();
    let mirror: Vec<usize> = (0..k).map(|j| k - 1 - j).collect();

    let n = x.len();
    let mut phi = if eigen { vec![1.0; n] } else { vec![0.0; n] };
    let mut exit_flux = vec![[0.0f64; 2]; k];
    let mut history = Vec::new();
    for it in 1..=config.max_iterations {
        let psi: Vec<Vec<f64>> = (0..k)
            .into_par_iter()
            .map(|j| {
                let u = mu[j];
                let q: Vec<f64> = (0..n).map(|i| 0.5 * kappa[i] * phi[i] + external[j][i]).collect();
                let mut out = vec![0.0; n];
                if u > 0.0 {
                    out[0] = if refl_low { exit_flux[mirror[j]][0] } else { 0.0 };
                    for i in 1..n {
                        out[i] = (q[i] + u / h * out[i - 1]) / (sigma[i] + u / h);
                    }
                } else if u < 0.0 {
                    out[n - 1] = if refl_high { exit_flux[mirror[j]][1] } else { 0.0 };
                    for i in (0..n - 1).rev() {
                        out[i] = (q[i] - u / h * out[i + 1]) / (sigma[i] - u / h);
                    }
                } else {
                    for i in 0..n {
                        out[i] = q[i] / sigma[i];
                    }
                }
                out
            })
            .collect();
        for j in 0..k {
            exit_flux[j] = [psi[j][0], psi[j][n - 1]];
        }
        let mut next = vec![0.0; n];
        for j in 0..k {
            for i in 0..n {
                next[i] += w[j] * psi[j][i];
            }
        }
        if eigen {
            let grid = Points::from_flat(1, x.clone())?;
            let field = ScalarFluxField::new(grid, 1, next.clone(), "")?;
            let centre = interpolate_1d(&field, 0.0)?;
            if centre == 0.0 {
                return Err(RannError::NonFinite("S_N normalization"));
            }
            next.iter_mut().for_each(|v| *v /= centre);
        }
        let change = max_change(&next, &phi);
        history.push(change);
        phi = next;
        if !change.is_finite() {
            return Err(RannError::NonFinite("S_N iterate"));
        }
        if change < config.tolerance {
            let flux = ScalarFluxField::new(Points::from_flat(1, x)?, 1, phi, format!("{} S_N", problem.name))?;
            return Ok(SnSolution {
                flux,
                iterations: it,
                history,
            });
        }
    }
    Err(RannError::NotConverged {
        iterations: config.max_iterations,
        change: *history.last().unwrap_or(&f64::NAN),
    })
}

struct Ordinate {
    ox: f64,
    oy: f64,
    weight: f64,
    /// Index of the mirrored ordinate across x-faces and y-faces.
    mirror_x: usize,
    mirror_y: usize,
}

/// `N_phi` equally spaced azimuths (composite trapezoid on the periodic
/// interval) times Gauss-Legendre in `mu`.
fn pincell_ordinates(n_phi: usize, n_mu: usize, need_mirrors: bool) -> Result<Vec<Ordinate>> {
    let mus = gauss_legendre_rule(-1.0, 1.0, n_mu)?;
    let dphi = 2.0 * PI / n_phi as f64;
    if need_mirrors && n_phi % 2 == 1 {
        return Err(invalid("reflecting x-faces need an even number of phi ordinates"));
    }
    let mut out = Vec::with_capacity(n_phi * n_mu);
    for a in 0..n_phi {
        let phi = dphi * a as f64;
        for (b, &mu) in mus.nodes().iter().enumerate() {
            let s = (1.0 - mu * mu).sqrt();
            // pi - phi and 2 pi - phi as azimuth indices.
            let mx = (n_phi / 2 + n_phi - a) % n_phi;
            let my = (n_phi - a) % n_phi;
            out.push(Ordinate {
                ox: s * phi.cos(),
                oy: s * phi.sin(),
                weight: dphi * mus.weights()[b],
                mirror_x: mx * n_mu + b,
                mirror_y: my * n_mu + b,
            });
        }
    }
    Ok(out)
}

/// Pin-cell discrete ordinates with step upwind finite volumes on an
/// `Nx x Ny` grid.
/// Reflected inflow is lagged by one source iteration.
pub fn solve_pincell_sn(problem: &TransportProblem, config: &SnConfig) -> Result<SnSolution> {
    if problem.kind() != GeometryKind::PinCell2d {
        return Err(invalid("solve_pincell_sn needs pin-cell geometry"));
    }
    one_group(problem)?;
    config.validate(2, 2)?;
    let (nx, ny) = (config.cells[0], config.cells[1]);
    let (bx, by) = (problem.domain.spatial_box[0], problem.domain.spatial_box[1]);
    let (hx, hy) = ((bx.1 - bx.0) / nx as f64, (by.1 - by.0) / ny as f64);
    let reflecting = |f| problem.boundary_condition(f) == Some(BoundaryCondition::Reflecting);
    let any_reflecting = [Face::XLow, Face::XHigh, Face::YLow, Face::YHigh].into_iter().any(reflecting);
    let ordinates = pincell_ordinates(config.ordinates[0], config.ordinates[1], any_reflecting)?;
    let centres: Vec<[f64; 2]> = (0..nx)
        .flat_map(|i| {
            (0..ny).map(move |j| [bx.0 + hx * (i as f64 + 0.5), by.0 + hy * (j as f64 + 0.5)])
        })
        .collect();
    let idx = |i: usize, j: usize| i * ny + j;
    let regions: Vec<usize> = centres.iter().map(|c| problem.domain.region_of(c)).collect();
    let sigma: Vec<f64> = regions.iter().map(|&r| problem.xs.total(r, 0)).collect();
    let kappa: Vec<f64> = regions.iter().map(|&r| problem.xs.kernel(r, 0, 0) / (4.0 * PI)).collect();
    let external: Vec<f64> = centres.iter().map(|c| problem.source_value(&[c[0], c[1], 0.0, 0.0], 0)).collect();
    let refl = [
        reflecting(Face::XLow),
        reflecting(Face::XHigh),
        reflecting(Face::YLow),
        reflecting(Face::YHigh),
    ];

    let cells = nx * ny;
    let mut phi = vec![0.0; cells];
    // Outgoing face fluxes per ordinate: x-low/x-high columns (ny each), y-low/y-high rows (nx each).
    let mut exits: Vec<[Vec<f64>; 4]> = (0..ordinates.len())
        .map(|_| [vec![0.0; ny], vec![0.0; ny], vec![0.0; nx], vec![0.0; nx]])
        .collect();
    let mut history = Vec::new();
    for it in 1..=config.max_iterations {
        let q: Vec<f64> = (0..cells).map(|c| kappa[c] * phi[c] + external[c]).collect();
        let swept: Vec<(Vec<f64>, [Vec<f64>; 4])> = ordinates
            .par_iter()
            .map(|o| {
                let (ax, ay) = (o.ox.abs() / hx, o.oy.abs() / hy);
                let xs: Vec<usize> = if o.ox >= 0.0 { (0..nx).collect() } else { (0..nx).rev().collect() };
                let ys: Vec<usize> = if o.oy >= 0.0 { (0..ny).collect() } else { (0..ny).rev().collect() };
                // Incoming x-face values per row j, incoming y-face values per column i.
                let in_x: Vec<f64> = {
                    let (face, r) = if o.ox >= 0.0 { (0, refl[0]) } else { (1, refl[1]) };
                    if r { exits[o.mirror_x][face].clone() } else { vec![0.0; ny] }
                };
                let in_y: Vec<f64> = {
                    let (face, r) = if o.oy >= 0.0 { (2, refl[2]) } else { (3, refl[3]) };
                    if r { exits[o.mirror_y][face].clone() } else { vec![0.0; nx] }
                };
                let mut psi = vec![0.0; cells];
                for (si, &i) in xs.iter().enumerate() {
                    for (sj, &j) in ys.iter().enumerate() {
                        let left = if si == 0 { in_x[j] } else { psi[idx(xs[si - 1], j)] };
                        let below = if sj == 0 { in_y[i] } else { psi[idx(i, ys[sj - 1])] };
                        let c = idx(i, j);
                        psi[c] = (q[c] + ax * left + ay * below) / (sigma[c] + ax + ay);
                    }
                }
                // Outgoing values leave through the downstream faces.
                let (last_i, last_j) = (xs[nx - 1], ys[ny - 1]);
                let out_x: Vec<f64> = (0..ny).map(|j| psi[idx(last_i, j)]).collect();
                let out_y: Vec<f64> = (0..nx).map(|i| psi[idx(i, last_j)]).collect();
                let mut faces = [vec![0.0; ny], vec![0.0; ny], vec![0.0; nx], vec![0.0; nx]];
                faces[if o.ox >= 0.0 { 1 } else { 0 }] = out_x;
                faces[if o.oy >= 0.0 { 3 } else { 2 }] = out_y;
                (psi, faces)
            })
            .collect();
        let mut next = vec![0.0; cells];
        exits.clear();
        for (o, (psi, faces)) in ordinates.iter().zip(swept) {
            for c in 0..cells {
                next[c] += o.weight * psi[c];
            }
            exits.push(faces);
        }
        let change = max_change(&next, &phi);
        history.push(change);
        phi = next;
        if !change.is_finite() {
            return Err(RannError::NonFinite("S_N iterate"));
        }
        if change < config.tolerance {
            let grid = Points::from_flat(2, centres.iter().flatten().copied().collect())?;
            let flux = ScalarFluxField::new(grid, 1, phi, format!("{} S_N", problem.name))?;
            return Ok(SnSolution {
                flux,
                iterations: it,
                history,
            });
        }
    }
    Err(RannError::NotConverged {
        iterations: config.max_iterations,
        change: *history.last().unwrap_or(&f64::NAN),
    })
}
