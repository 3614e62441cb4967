//! Sparse sign embeddings for compressing tall least-squares systems.

use faer::Mat;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::assembly::LinearSystem;
use crate::error::{invalid, RannError, Result};

pub const DEFAULT_OVERSAMPLING: usize = 2;
pub const DEFAULT_NONZEROS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct SketchSpec {
    /// Sketch rows per unknown.
    pub oversampling: usize,
    /// Nonzeros per sketch row.
    pub nonzeros: usize,
    pub seed: u64,
}

impl SketchSpec {
    pub fn new(oversampling: usize, nonzeros: usize, seed: u64) -> Result<Self> {
        if oversampling == 0 || nonzeros == 0 {
            return Err(invalid("sketch oversampling and nonzeros must be at least 1"));
        }
        Ok(Self {
            oversampling,
            nonzeros,
            seed,
        })
    }

    pub fn with_seed(seed: u64) -> Self {
        Self {
            oversampling: DEFAULT_OVERSAMPLING,
            nonzeros: DEFAULT_NONZEROS,
            seed,
        }
    }
}

/// Sketch matrix stored row by row: `nonzeros` distinct input-row indices and
/// their signs; every nonzero has magnitude `sqrt(1/nonzeros)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSketch {
    input_rows: usize,
    nonzeros: usize,
    indices: Vec<usize>,
    signs: Vec<bool>,
}

impl SparseSketch {
    pub fn rows(&self) -> usize {
        self.indices.len() / self.nonzeros
    }

    pub fn input_rows(&self) -> usize {
        self.input_rows
    }

    pub fn nonzeros(&self) -> usize {
        self.nonzeros
    }

    pub fn scale(&self) -> f64 {
        (1.0 / self.nonzeros as f64).sqrt()
    }

    /// `(index, value)` pairs of sketch row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let s = self.scale();
        let range = i * self.nonzeros..(i + 1) * self.nonzeros;
        self.indices[range.clone()]
            .iter()
            .zip(&self.signs[range])
            .map(move |(&k, &neg)| (k, if neg { -s } else { s }))
    }

    /// `S v` for a vector of length `input_rows`.
    pub fn apply_vector(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.input_rows {
            return Err(RannError::DimensionMismatch {
                what: "sketch input rows",
                expected: self.input_rows,
                actual: v.len(),
            });
        }
        Ok((0..self.rows())
            .map(|i| self.row(i).map(|(k, s)| s * v[k]).sum())
            .collect())
    }
}

/// Draws the sketch for an `n_rows_in`-row system with `m` unknowns.
pub fn build_sketch(spec: &SketchSpec, n_rows_in: usize, m: usize) -> Result<SparseSketch> {
    if spec.oversampling == 0 || spec.nonzeros == 0 || m == 0 {
        return Err(invalid("sketch sizes must be positive"));
    }
    if spec.nonzeros > n_rows_in {
        return Err(invalid(format!(
            "sketch needs {} nonzeros per row but the system has {n_rows_in} rows",
            spec.nonzeros
        )));
    }
    let rows = m * spec.oversampling;
    if rows > n_rows_in {
        log::warn!("sketch has {rows} rows for a {n_rows_in}-row system; no compression");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut indices = Vec::with_capacity(rows * spec.nonzeros);
    let mut signs = Vec::with_capacity(rows * spec.nonzeros);
    for _ in 0..rows {
        let picked = sample(&mut rng, n_rows_in, spec.nonzeros);
        indices.extend(picked.iter());
        for _ in 0..spec.nonzeros {
            signs.push(rng.random::<bool>());
        }
    }
    Ok(SparseSketch {
        input_rows: n_rows_in,
        nonzeros: spec.nonzeros,
        indices,
        signs,
    })
}

/// Compressed system `(S A, S F)`; block bookkeeping keeps the columns and
/// collapses the rows into one block.
pub fn apply_sketch(sketch: &SparseSketch, system: &LinearSystem) -> Result<LinearSystem> {
    if sketch.input_rows != system.nrows() {
        return Err(RannError::DimensionMismatch {
            what: "sketch input rows",
            expected: sketch.input_rows,
            actual: system.nrows(),
        });
    }
    let rows = sketch.rows();
    let ncols = system.ncols();
    let mut matrix = Mat::<f64>::zeros(rows, ncols);
    let a = system.matrix.as_ref();
    // Columns are independent; each output column gathers from one input column.
    let cols: Vec<Vec<f64>> = (0..ncols)
        .into_par_iter()
        .map(|j| {
            let col = a.col(j);
            (0..rows)
                .map(|i| sketch.row(i).map(|(k, s)| s * col[k]).sum())
                .collect()
        })
        .collect();
    for (j, col) in cols.into_iter().enumerate() {
        for (i, v) in col.into_iter().enumerate() {
            matrix[(i, j)] = v;
        }
    }
    let rhs = sketch.apply_vector(&system.rhs)?;
    Ok(LinearSystem {
        matrix,
        rhs,
        row_blocks: vec![crate::assembly::RowBlock {
            kind: crate::assembly::RowBlockKind::Interior,
            group: system.row_blocks.first().map_or(0, |b| b.group),
            start: 0,
            len: rows,
        }],
        col_blocks: system.col_blocks.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn system(n: usize, m: usize, f: impl Fn(usize, usize) -> f64) -> LinearSystem {
        LinearSystem {
            matrix: Mat::from_fn(n, m, &f),
            rhs: (0..n).map(|i| f(i, m)).collect(),
            row_blocks: vec![],
            col_blocks: vec![],
        }
    }

    #[test]
    fn structure() {
        let s = build_sketch(&SketchSpec::with_seed(3), 1000, 100).unwrap();
        assert_eq!(s.rows(), 200);
        for i in 0..s.rows() {
            let row: Vec<_> = s.row(i).collect();
            assert_eq!(row.len(), 8);
            let mut idx: Vec<usize> = row.iter().map(|r| r.0).collect();
            idx.sort_unstable();
            idx.dedup();
            assert_eq!(idx.len(), 8);
            for (_, v) in row {
                assert!((v.abs() - 0.353553390593273762).abs() < 1e-15);
            }
        }
        assert_eq!(s, build_sketch(&SketchSpec::with_seed(3), 1000, 100).unwrap());
        assert!(build_sketch(&SketchSpec::with_seed(3), 7, 1).is_err());
        assert!(SketchSpec::new(0, 8, 1).is_err());
    }

    #[test]
    fn single_nonzero_copies_rows() {
        let spec = SketchSpec::new(1, 1, 9).unwrap();
        let sys = system(10, 3, |i, j| (i * 7 + j) as f64);
        let s = build_sketch(&spec, 10, 3).unwrap();
        let out = apply_sketch(&s, &sys).unwrap();
        for i in 0..3 {
            let (k, v) = s.row(i).next().unwrap();
            assert_eq!(v.abs(), 1.0);
            for j in 0..3 {
                assert_eq!(out.matrix[(i, j)], v * sys.matrix[(k, j)]);
            }
            assert_eq!(out.rhs[i], v * sys.rhs[k]);
        }
    }

    #[test]
    fn zero_in_zero_out() {
        let sys = system(50, 4, |_, _| 0.0);
        let s = build_sketch(&SketchSpec::with_seed(1), 50, 4).unwrap();
        let out = apply_sketch(&s, &sys).unwrap();
        assert!(out.rhs.iter().all(|&v| v == 0.0));
        assert!(out.matrix.col_iter().all(|c| c.iter().all(|&v| v == 0.0)));
        let other = build_sketch(&SketchSpec::with_seed(1), 60, 4).unwrap();
        assert!(apply_sketch(&other, &sys).is_err());
    }

    // Each input row is hit N_S n_S / N times on average with squared value
    // 1/n_S, so the expected ratio is N_S / N; it is 1 when N_S = N.
    #[test]
    fn norm_preserved_on_average() {
        let v: Vec<f64> = (0..500).map(|i| ((i * 37 % 101) as f64 - 50.0) / 17.0).collect();
        let norm2: f64 = v.iter().map(|x| x * x).sum();
        let mean = (0..200)
            .map(|seed| {
                let s = build_sketch(&SketchSpec::with_seed(seed), 500, 250).unwrap();
                s.apply_vector(&v).unwrap().iter().map(|x| x * x).sum::<f64>() / norm2
            })
            .sum::<f64>()
            / 200.0;
        assert!((0.8..=1.2).contains(&mean), "{mean}");
    }
}
