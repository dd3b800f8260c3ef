//! Gauss-Legendre quadrature via the Golub-Welsch eigenvalue method.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Quadrature rule on an interval `[a, b]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Quadrature {
    pub a: f64,
    pub b: f64,
    /// Strictly increasing nodes in `[a, b]`.
    pub nodes: Vec<f64>,
    /// Positive weights summing to `b - a`.
    pub weights: Vec<f64>,
}

impl Quadrature {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrate a scalar function with the rule.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Gauss-Legendre rule with `n` nodes on `[a, b]`; exact for polynomials of
/// degree `2n - 1`.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Result<Quadrature> {
    if n == 0 {
        return Err(Error::Param("quadrature order must be positive".into()));
    }
    if !(a < b) {
        return Err(Error::Param(format!("invalid interval [{a}, {b}]")));
    }
    // Jacobi matrix of the Legendre recurrence; its eigenvalues are the nodes
    // on [-1, 1] and the weights come from the first eigenvector components.
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        let beta = i as f64 / ((4 * i * i - 1) as f64).sqrt();
        jacobi[(i, i - 1)] = beta;
        jacobi[(i - 1, i)] = beta;
    }
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|j| {
            let v0 = eig.eigenvectors[(0, j)];
            (eig.eigenvalues[j], 2.0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));

    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let nodes = pairs.iter().map(|&(x, _)| mid + half * x).collect();
    let weights = pairs.iter().map(|&(_, w)| half * w).collect();
    Ok(Quadrature { a, b, nodes, weights })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn one_point_rule_is_midpoint() {
        let q = gauss_legendre(1, -1.0, 1.0).unwrap();
        assert_abs_diff_eq!(q.nodes[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(q.weights[0], 2.0, epsilon = 1e-15);
    }

    #[test]
    fn two_point_rule() {
        let q = gauss_legendre(2, -1.0, 1.0).unwrap();
        let x = 1.0 / 3f64.sqrt();
        assert_abs_diff_eq!(q.nodes[0], -x, epsilon = 1e-14);
        assert_abs_diff_eq!(q.nodes[1], x, epsilon = 1e-14);
        assert_abs_diff_eq!(q.weights[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(q.weights[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn quartic_is_exact_at_n3() {
        let q = gauss_legendre(3, -1.0, 1.0).unwrap();
        let val = q.integrate(|x| x.powi(4));
        assert_abs_diff_eq!(val, 2.0 / 5.0, epsilon = 1e-14);
    }

    #[test]
    fn weights_sum_to_length_and_nodes_increase() {
        for n in [5, 40, 200] {
            let q = gauss_legendre(n, 0.0, 1.0).unwrap();
            let sum: f64 = q.weights.iter().sum();
            assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-13);
            assert!(q.nodes.windows(2).all(|w| w[0] < w[1]));
            assert!(q.weights.iter().all(|&w| w > 0.0));
        }
    }
}
