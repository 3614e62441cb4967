//! Random-feature basis: `psi_j(x) = rho(w_j . x + b_j)` with hidden weights and
//! biases drawn once from `U(-r, r)` and frozen.
//!
//! Draw order is part of the contract: a single `ChaCha8Rng` stream seeded with
//! `seed_from_u64(seed)` produces all weights first (neuron-major, then input
//! coordinate), then all biases. Two builds with the same `(m, d, r, seed)` are
//! bit-identical.

use faer::{Mat, MatRef};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, RannError, Result};

/// Hidden-layer activation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Activation {
    /// `rho(z) = exp(-z^2 / 2)`.
    #[default]
    Gaussian,
}

impl Activation {
    #[inline]
    pub fn value(self, z: f64) -> f64 {
        match self {
            Activation::Gaussian => (-0.5 * z * z).exp(),
        }
    }

    #[inline]
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Gaussian => -z * (-0.5 * z * z).exp(),
        }
    }

    /// Value and first derivative sharing one exponential.
    #[inline]
    pub fn value_and_derivative(self, z: f64) -> (f64, f64) {
        match self {
            Activation::Gaussian => {
                let e = (-0.5 * z * z).exp();
                (e, -z * e)
            }
        }
    }
}

/// `m` fixed random features on `R^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomFeatureBasis {
    m: usize,
    d: usize,
    /// Row-major `m x d`.
    weights: Vec<f64>,
    biases: Vec<f64>,
    bound_r: f64,
    seed: u64,
    activation: Activation,
}

impl RandomFeatureBasis {
    /// Draws a fresh basis from the seeded stream.
    pub fn build(m: usize, d: usize, bound_r: f64, seed: u64) -> Result<Self> {
        if m == 0 {
            return Err(invalid("neuron count m must be at least 1"));
        }
        if d == 0 {
            return Err(invalid("input dimension d must be at least 1"));
        }
        if !(bound_r > 0.0 && bound_r.is_finite()) {
            return Err(invalid(format!("bound r must be positive, got {bound_r}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights = (0..m * d)
            .map(|_| rng.random_range(-bound_r..=bound_r))
            .collect();
        let biases = (0..m).map(|_| rng.random_range(-bound_r..=bound_r)).collect();
        Ok(Self {
            m,
            d,
            weights,
            biases,
            bound_r,
            seed,
            activation: Activation::Gaussian,
        })
    }

    /// Basis with explicitly given parameters (row-major `m x d` weights).
    pub fn from_parameters(weights: Vec<f64>, biases: Vec<f64>, d: usize) -> Result<Self> {
        let m = biases.len();
        if m == 0 || d == 0 {
            return Err(invalid("basis needs m >= 1 and d >= 1"));
        }
        if weights.len() != m * d {
            return Err(RannError::DimensionMismatch {
                what: "weights length",
                expected: m * d,
                actual: weights.len(),
            });
        }
        let bound_r = weights
            .iter()
            .chain(&biases)
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        Ok(Self {
            m,
            d,
            weights,
            biases,
            bound_r,
            seed: 0,
            activation: Activation::Gaussian,
        })
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn bound(&self) -> f64 {
        self.bound_r
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, j: usize) -> &[f64] {
        &self.weights[j * self.d..(j + 1) * self.d]
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    #[inline]
    fn preactivation(&self, j: usize, x: &[f64]) -> f64 {
        let w = self.weight(j);
        w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.biases[j]
    }

    /// Writes `psi_j(x)` for all `j` into `out`.
    pub fn eval_point(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.d);
        for (j, o) in out.iter_mut().enumerate().take(self.m) {
            *o = self.activation.value(self.preactivation(j, x));
        }
    }

    /// Writes `psi_j(x)` into `values` and `d psi_j / d x_a` into
    /// `grads[a * m + j]` for every axis `a`.
    pub fn eval_point_with_gradient(&self, x: &[f64], values: &mut [f64], grads: &mut [f64]) {
        debug_assert_eq!(x.len(), self.d);
        let m = self.m;
        for j in 0..m {
            let (v, dv) = self.activation.value_and_derivative(self.preactivation(j, x));
            values[j] = v;
            let w = self.weight(j);
            for a in 0..self.d {
                grads[a * m + j] = w[a] * dv;
            }
        }
    }

    /// Writes `psi_j(x)` into `values` and the directional derivative
    /// `sum_a dir_a d psi_j / d x_a` into `directional`.
    #[inline]
    pub fn eval_point_directional(
        &self,
        x: &[f64],
        dir: &[f64],
        values: &mut [f64],
        directional: &mut [f64],
    ) {
        debug_assert_eq!(x.len(), self.d);
        debug_assert_eq!(dir.len(), self.d);
        for j in 0..self.m {
            let w = self.weight(j);
            let mut z = self.biases[j];
            let mut slope = 0.0;
            for a in 0..self.d {
                z += w[a] * x[a];
                slope += w[a] * dir[a];
            }
            let (v, dv) = self.activation.value_and_derivative(z);
            values[j] = v;
            directional[j] = slope * dv;
        }
    }

    fn check_points(&self, points: MatRef<'_, f64>) -> Result<()> {
        if points.ncols() != self.d {
            return Err(RannError::DimensionMismatch {
                what: "point dimension",
                expected: self.d,
                actual: points.ncols(),
            });
        }
        Ok(())
    }

    /// `N x m` matrix of basis values at the rows of `points`.
    pub fn eval(&self, points: MatRef<'_, f64>) -> Result<Mat<f64>> {
        self.check_points(points)?;
        let mut x = vec![0.0; self.d];
        let mut row = vec![0.0; self.m];
        let mut out = Mat::zeros(points.nrows(), self.m);
        for i in 0..points.nrows() {
            for (a, xa) in x.iter_mut().enumerate() {
                *xa = points[(i, a)];
            }
            self.eval_point(&x, &mut row);
            for (j, v) in row.iter().enumerate() {
                out[(i, j)] = *v;
            }
        }
        Ok(out)
    }

    /// `N x m` matrix of `d psi_j / d x_axis` at the rows of `points`.
    pub fn eval_derivative(&self, points: MatRef<'_, f64>, axis: usize) -> Result<Mat<f64>> {
        self.check_points(points)?;
        if axis >= self.d {
            return Err(invalid(format!(
                "derivative axis {axis} out of range for dimension {}",
                self.d
            )));
        }
        let mut x = vec![0.0; self.d];
        let mut out = Mat::zeros(points.nrows(), self.m);
        for i in 0..points.nrows() {
            for (a, xa) in x.iter_mut().enumerate() {
                *xa = points[(i, a)];
            }
            for j in 0..self.m {
                let z = self.preactivation(j, &x);
                out[(i, j)] = self.weight(j)[axis] * self.activation.derivative(z);
            }
        }
        Ok(out)
    }

    /// `sum_j alpha_j psi_j(x)`.
    pub fn combine(&self, x: &[f64], alpha: &[f64]) -> f64 {
        (0..self.m)
            .map(|j| alpha[j] * self.activation.value(self.preactivation(j, x)))
            .sum()
    }
}
