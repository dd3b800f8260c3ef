//! Nystrom discretization of the band restriction operator's Gram kernel and
//! its Hermitian eigendecomposition.
//!
//! The Hardy space of the half-plane `Im w > -h` has reproducing elements
//! `p_s(w) = i / (2 pi (w - conj(s) + 2ih))`. Restricted to the band
//! `[-1, 1]` the Gram kernel `k(y, x) = p_x(y)` is analytic (the offset `2ih`
//! keeps the denominator away from zero), so a Gauss-Legendre Nystrom scheme
//! converges geometrically. The symmetric `sqrt(w)` weighting keeps the
//! discretized matrix Hermitian.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::quad::{gauss_legendre, Quadrature};

/// Default quadrature order; resolves the spectrum to the binary64 floor for
/// `h >= 0.2`.
pub const DEFAULT_NODES: usize = 200;

/// Eigenvalues below this are treated as round-off noise in decay fits.
pub const EIGEN_FLOOR: f64 = 1e-12;

/// Reproducing-kernel value `p_x(y) = i / (2 pi (y - x + 2ih))` for real
/// band points; Hermitian in `(y, x)`.
pub fn kernel_value(y: f64, x: f64, h: f64) -> C64 {
    C64::new(0.0, 1.0) / (C64::new(y - x, 2.0 * h) * 2.0 * std::f64::consts::PI)
}

/// Reproducing element `p_s(w)` of the Hardy space, for `w` in the
/// analyticity half-plane and source point `s` (typically real).
pub fn reproducing_element(s: C64, w: C64, h: f64) -> C64 {
    C64::new(0.0, 1.0) / ((w - s.conj() + C64::new(0.0, 2.0 * h)) * 2.0 * std::f64::consts::PI)
}

/// Weighted Nystrom matrix of the band Gram operator.
#[derive(Debug, Clone)]
pub struct DiscretizedOperator {
    pub quad: Quadrature,
    pub h: f64,
    /// Hermitian PSD matrix `A[j,k] = sqrt(w_j) k(x_j, x_k) sqrt(w_k)`.
    pub matrix: DMatrix<C64>,
}

/// Eigendecomposition of a [`DiscretizedOperator`], eigenvalues descending.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    /// Descending, clamped at zero from below (the operator is PSD; tiny
    /// negative round-off is zeroed).
    pub eigenvalues: Vec<f64>,
    /// Orthonormal columns in the weighted discrete inner product.
    pub eigenvectors: DMatrix<C64>,
}

/// Build the discretized operator at shift `h` with an `n`-point rule.
pub fn build_operator(h: f64, n: usize) -> Result<DiscretizedOperator> {
    if h <= 0.0 {
        return Err(Error::Param(format!("h must be positive, got {h}")));
    }
    let quad = gauss_legendre(n, -1.0, 1.0)?;
    let sw: Vec<f64> = quad.weights.iter().map(|w| w.sqrt()).collect();
    let mut matrix = DMatrix::<C64>::zeros(n, n);
    for j in 0..n {
        for k in 0..=j {
            let v = kernel_value(quad.nodes[j], quad.nodes[k], h) * (sw[j] * sw[k]);
            matrix[(j, k)] = v;
            matrix[(k, j)] = v.conj();
        }
        // force an exactly real diagonal
        matrix[(j, j)] = C64::new(matrix[(j, j)].re, 0.0);
    }
    Ok(DiscretizedOperator { quad, h, matrix })
}

impl DiscretizedOperator {
    pub fn n(&self) -> usize {
        self.quad.len()
    }

    /// `trace A = sum_j w_j / (4 pi h)`; equals `2 / (4 pi h)` on `[-1, 1]`.
    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }

    /// Hermiticity defect `max |A - A^*|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.n();
        let mut d: f64 = 0.0;
        for j in 0..n {
            for k in 0..n {
                d = d.max((self.matrix[(j, k)] - self.matrix[(k, j)].conj()).norm());
            }
        }
        d
    }
}

/// Eigendecomposition; surfaces a residual report on failure.
pub fn eigen(op: &DiscretizedOperator) -> Result<EigenSystem> {
    let eig = op
        .matrix
        .clone()
        .try_symmetric_eigen(f64::EPSILON, 10_000)
        .ok_or_else(|| Error::EigenFailure("symmetric eigen iteration did not converge".into()))?;
    let n = op.n();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let mut eigenvectors = DMatrix::<C64>::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        eigenvectors.set_column(col, &eig.eigenvectors.column(i));
    }

    let sys = EigenSystem { eigenvalues, eigenvectors };
    let lambda1 = sys.eigenvalues[0];
    let mut worst = 0.0f64;
    for k in 0..n.min(12) {
        let v = sys.eigenvectors.column(k);
        let r = &op.matrix * v - v * C64::from(sys.eigenvalues[k]);
        worst = worst.max(r.norm());
    }
    if worst > 1e-10 * lambda1.max(f64::MIN_POSITIVE) {
        return Err(Error::EigenFailure(format!(
            "eigen residual {worst:.3e} exceeds 1e-10 * lambda_1"
        )));
    }
    Ok(sys)
}

impl EigenSystem {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Indices of eigenvalues above `floor`.
    pub fn above_floor(&self, floor: f64) -> usize {
        self.eigenvalues.iter().take_while(|&&l| l > floor).count()
    }

    /// Components `b_n = (v_n, p)` of a weighted sample vector along the
    /// eigenvectors.
    pub fn project(&self, p: &[C64]) -> Vec<C64> {
        let n = self.len();
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            let v = self.eigenvectors.column(k);
            // (p, v_k) = sum p_j conj(v_jk)
            let mut s = C64::new(0.0, 0.0);
            for j in 0..n {
                s += p[j] * v[j].conj();
            }
            out.push(s);
        }
        out
    }

    /// Orthonormality defect `max |V^* V - I|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.eigenvectors.adjoint() * &self.eigenvectors;
        let n = self.len();
        let mut d: f64 = 0.0;
        for j in 0..n {
            for k in 0..n {
                let t = if j == k { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
                d = d.max((g[(j, k)] - t).norm());
            }
        }
        d
    }
}

/// Weighted samples `sqrt(w_j) p_s(x_j)` of a reproducing element on the band.
pub fn p_vector(omega0: C64, op: &DiscretizedOperator) -> Result<Vec<C64>> {
    if omega0.im <= -op.h {
        return Err(Error::Domain(format!(
            "source point {omega0} lies outside the analyticity half-plane"
        )));
    }
    Ok(op
        .quad
        .nodes
        .iter()
        .zip(&op.quad.weights)
        .map(|(&x, &w)| reproducing_element(omega0, C64::from(x), op.h) * w.sqrt())
        .collect())
}

/// Analytic extension `(R* g)(w) = sum_j p_{x_j}(w) sqrt(w_j) g_j` of a band
/// coefficient vector.
pub fn rkhs_extend(g: &[C64], op: &DiscretizedOperator, omega: C64) -> Result<C64> {
    if omega.im <= -op.h {
        return Err(Error::Domain(format!(
            "evaluation point {omega} lies outside the analyticity half-plane"
        )));
    }
    let mut s = C64::new(0.0, 0.0);
    for ((&x, &w), &gj) in op.quad.nodes.iter().zip(&op.quad.weights).zip(g) {
        s += reproducing_element(C64::from(x), omega, op.h) * w.sqrt() * gj;
    }
    Ok(s)
}

/// Least-squares decay rate of `-ln lambda_n` against `n` over the part of the
/// spectrum above `floor`.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct DecayRate {
    pub alpha: f64,
    pub r2: f64,
    pub n_used: usize,
}

pub fn decay_rate(eigs: &EigenSystem, floor: f64) -> Result<DecayRate> {
    let m = eigs.above_floor(floor);
    if m < 6 {
        return Err(Error::InsufficientSpectrum { found: m, need: 6 });
    }
    let xs: Vec<f64> = (0..m).map(|i| (i + 1) as f64).collect();
    let ys: Vec<f64> = eigs.eigenvalues[..m].iter().map(|l| -l.ln()).collect();
    let (slope, _, r2) = linear_fit(&xs, &ys);
    Ok(DecayRate { alpha: slope, r2, n_used: m })
}

/// Ordinary least squares `y ~ intercept + slope x`; returns
/// `(slope, intercept, r^2)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, intercept, r2)
}

/// Standard error of the fitted slope.
pub fn slope_stderr(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    if n < 3 {
        return f64::INFINITY;
    }
    let (slope, intercept, _) = linear_fit(x, y);
    let mx = x.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - (intercept + slope * a);
            r * r
        })
        .sum();
    (sse / ((n - 2) as f64) / sxx).sqrt()
}
