//! One-dimensional and tensor-product quadrature rules.

use crate::error::{invalid, Result};

/// Quadrature nodes and positive weights over a box in `dim` dimensions.
///
/// Nodes are stored point-major: node `k` occupies `nodes[k * dim..(k + 1) * dim]`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    dim: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    fn one_dim(nodes: Vec<f64>, weights: Vec<f64>) -> Self {
        Self {
            dim: 1,
            nodes,
            weights,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, k: usize) -> &[f64] {
        &self.nodes[k * self.dim..(k + 1) * self.dim]
    }

    /// Flat node storage (`len() * dim()` values).
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        (0..self.len()).map(|k| self.weights[k] * f(self.node(k))).sum()
    }
}

/// Composite trapezoidal rule with `k` equispaced nodes including both endpoints.
pub fn trapezoid_rule(a: f64, b: f64, k: usize) -> Result<QuadratureRule> {
    if k < 2 {
        return Err(invalid(format!("trapezoid rule needs at least 2 nodes, got {k}")));
    }
    if !(a < b) {
        return Err(invalid(format!("trapezoid rule needs a < b, got [{a}, {b}]")));
    }
    let h = (b - a) / (k - 1) as f64;
    let nodes = (0..k)
        .map(|i| if i == k - 1 { b } else { a + h * i as f64 })
        .collect();
    let weights = (0..k)
        .map(|i| if i == 0 || i == k - 1 { 0.5 * h } else { h })
        .collect();
    Ok(QuadratureRule::one_dim(nodes, weights))
}

/// Legendre polynomial `P_n(x)` and its derivative by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// `k`-point Gauss-Legendre rule mapped affinely onto `[a, b]`.
///
/// Roots are found by Newton iteration on `P_k` started from the Chebyshev-like
/// guess `cos(pi (i + 3/4) / (k + 1/2))`, stopped when the step falls below 1e-14.
pub fn gauss_legendre_rule(a: f64, b: f64, k: usize) -> Result<QuadratureRule> {
    if k < 1 {
        return Err(invalid("Gauss-Legendre rule needs at least 1 node"));
    }
    if !(a < b) {
        return Err(invalid(format!("Gauss-Legendre rule needs a < b, got [{a}, {b}]")));
    }
    let mut ref_nodes = vec![0.0; k];
    let mut ref_weights = vec![0.0; k];
    let half = k.div_ceil(2);
    for i in 0..half {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (k as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(k, x);
            dp = d;
            let step = p / d;
            x -= step;
            if step.abs() < 1e-14 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(k, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // Roots come out in decreasing order; store ascending.
        ref_nodes[k - 1 - i] = x;
        ref_nodes[i] = -x;
        ref_weights[k - 1 - i] = w;
        ref_weights[i] = w;
    }
    if k % 2 == 1 {
        ref_nodes[k / 2] = 0.0;
    }
    let mid = 0.5 * (a + b);
    let half_len = 0.5 * (b - a);
    let nodes = ref_nodes.iter().map(|x| mid + half_len * x).collect();
    let weights = ref_weights.iter().map(|w| half_len * w).collect();
    Ok(QuadratureRule::one_dim(nodes, weights))
}

/// Cartesian product of rules; the last factor varies fastest.
pub fn tensor_rule(rules: &[QuadratureRule]) -> Result<QuadratureRule> {
    let (first, rest) = rules
        .split_first()
        .ok_or_else(|| invalid("tensor rule needs at least one factor"))?;
    let mut acc = first.clone();
    for rule in rest {
        let dim = acc.dim + rule.dim;
        let mut nodes = Vec::with_capacity(acc.len() * rule.len() * dim);
        let mut weights = Vec::with_capacity(acc.len() * rule.len());
        for i in 0..acc.len() {
            for k in 0..rule.len() {
                nodes.extend_from_slice(acc.node(i));
                nodes.extend_from_slice(rule.node(k));
                weights.push(acc.weights[i] * rule.weights[k]);
            }
        }
        acc = QuadratureRule {
            dim,
            nodes,
            weights,
        };
    }
    Ok(acc)
}
