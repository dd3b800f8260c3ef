//! Regularized Fredholm solves and the worst-case extrapolation bounds.
//!
//! The bound problem maximizes `Re (f, q)` over the Hardy-space unit ball
//! subject to a band norm at most `eps`. Its KKT system is
//! `(K + eta) u = q` with the Lagrange parameter `eta` pinned by constraint
//! activity `||u||_band = eps ||u||`. Everything reduces to the band: with
//! `g = R u` solving `(R R* + eta) g = R q`, the solution extends off the
//! band as `u = (q - R* g) / eta`.
//!
//! All spectral work happens in the eigenbasis of the discretized band
//! operator, which stays well conditioned across the thirty decades of `eta`
//! the bisection has to traverse. The dense Cholesky route is kept as an
//! independent cross-check ([`solve_regularized`]).

use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::cache::{operator_with_eigen, OperatorWithEigen};
use crate::error::{Error, Result};
use crate::operator::{reproducing_element, DiscretizedOperator};
use crate::quad::gauss_legendre;
use crate::stieltjes::{positivity_scan, ProblemParams};
use crate::util::golden_min;

/// Smallest mismatch level certified in binary64; below it the spectral
/// conditioning of `(A + eta I)` exceeds what double precision resolves.
pub const EPS_FLOOR: f64 = 1e-5;
/// Largest supported mismatch level.
pub const EPS_CEIL: f64 = 0.5;

/// One evaluation of the worst-case extrapolation bound.
#[derive(Debug, Clone, Serialize)]
pub struct BoundResult {
    pub params: ProblemParams,
    /// Lagrange parameter; `None` when the band constraint is inactive
    /// (`eps^2 >= Phi(inf)`) and the bound saturates at the norm cap.
    pub eta: Option<f64>,
    /// The bound value `D = u(omega0) / ||u||`.
    pub d: f64,
    /// `||u||` in the Hardy norm.
    pub norm_h2: f64,
    /// `||u||` on the band.
    pub norm_l2: f64,
    /// `u(omega0)`, real positive for the reproducing right-hand side.
    pub value_at_omega0: f64,
    /// `Phi(inf) = (K q, q)/||q||^2`, the activity threshold for `eps^2`.
    pub phi_inf: f64,
    /// Unconstrained cap `||q||`; equals `1/(2 sqrt(pi h))` for the point
    /// functional at real `omega0`.
    pub cap: f64,
    /// Weighted band coefficients `g_j = sqrt(w_j) u(x_j)` of the
    /// (unnormalized) solution; empty in the inactive case.
    pub u_nodes: Vec<C64>,
}

/// A right-hand side reduced to the band: weighted samples, eigen
/// components, and the exact Hardy Gram value `kappa = (q, q)`.
pub struct BandProblem {
    pub ent: Arc<OperatorWithEigen>,
    pub q_hat: Vec<C64>,
    /// `|(q_hat, v_n)|^2` along the eigenvectors.
    pub b2: Vec<f64>,
    b: Vec<C64>,
    pub kappa: f64,
    /// Closure data for evaluating q anywhere in the half-plane.
    terms: Vec<(C64, f64)>, // (coefficient, source point): q(w) = sum c * p_s(w)
}

impl BandProblem {
    /// Point-evaluation functional `q = p_{omega0}` at a real `omega0`.
    pub fn point(ent: Arc<OperatorWithEigen>, omega0: f64) -> Result<Self> {
        Self::combination(ent, vec![(C64::from(1.0), omega0)])
    }

    /// Symmetrized functional `q = (lam p_{omega0} + conj(lam) p_{-omega0})/2`.
    pub fn symmetrized(ent: Arc<OperatorWithEigen>, omega0: f64, lam: C64) -> Result<Self> {
        Self::combination(
            ent,
            vec![(lam * 0.5, omega0), (lam.conj() * 0.5, -omega0)],
        )
    }

    /// `q = sum_k c_k p_{s_k}` with real source points; `kappa` follows from
    /// the reproducing property `(p_s, p_t) = p_s(t)`.
    pub fn combination(ent: Arc<OperatorWithEigen>, terms: Vec<(C64, f64)>) -> Result<Self> {
        let h = ent.op.h;
        let mut kappa = C64::new(0.0, 0.0);
        for &(ci, si) in &terms {
            for &(cj, sj) in &terms {
                // (c_i p_{s_i}, c_j p_{s_j}) = c_i conj(c_j) p_{s_i}(s_j)
                kappa += ci
                    * cj.conj()
                    * reproducing_element(C64::from(si), C64::from(sj), h);
            }
        }
        if kappa.im.abs() > 1e-13 * kappa.re.abs().max(1e-300) {
            return Err(Error::Param(format!(
                "Gram value should be real, got imaginary part {:.3e}",
                kappa.im
            )));
        }
        let q_hat: Vec<C64> = ent
            .op
            .quad
            .nodes
            .iter()
            .zip(&ent.op.quad.weights)
            .map(|(&x, &w)| {
                let mut s = C64::new(0.0, 0.0);
                for &(c, src) in &terms {
                    s += c * reproducing_element(C64::from(src), C64::from(x), h);
                }
                s * w.sqrt()
            })
            .collect();
        let b = ent.eigs.project(&q_hat);
        let b2 = b.iter().map(|z| z.norm_sqr()).collect();
        Ok(Self { ent, q_hat, b2, b, kappa: kappa.re, terms })
    }

    /// Evaluate the right-hand side anywhere with `Im w >= -h`.
    pub fn q_at(&self, w: C64) -> C64 {
        let h = self.ent.op.h;
        self.terms
            .iter()
            .map(|&(c, s)| c * reproducing_element(C64::from(s), w, h))
            .sum()
    }

    /// `Phi(inf) = (K q, q) / ||q||^2`.
    pub fn phi_inf(&self) -> f64 {
        self.b2.iter().sum::<f64>() / self.kappa
    }

    /// `(u, q)` for `u = (K + eta)^{-1} q`; equals `u(omega0)` for the point
    /// functional.
    pub fn value(&self, eta: f64) -> f64 {
        let s: f64 = self
            .b2
            .iter()
            .zip(&self.ent.eigs.eigenvalues)
            .map(|(&b2, &l)| b2 / (l + eta))
            .sum();
        (self.kappa - s) / eta
    }

    /// `||u||_band^2`.
    pub fn band_norm_sq(&self, eta: f64) -> f64 {
        self.b2
            .iter()
            .zip(&self.ent.eigs.eigenvalues)
            .map(|(&b2, &l)| b2 / ((l + eta) * (l + eta)))
            .sum()
    }

    /// `||u||^2` in the Hardy norm, via `(u, q) = ||u||_band^2 + eta ||u||^2`.
    pub fn h2_norm_sq(&self, eta: f64) -> f64 {
        (self.value(eta) - self.band_norm_sq(eta)) / eta
    }

    /// `Phi(eta) = ||u||_band^2 / ||u||^2`; monotone increasing from 0 to
    /// `Phi(inf)`.
    pub fn phi(&self, eta: f64) -> f64 {
        self.band_norm_sq(eta) / self.h2_norm_sq(eta)
    }

    /// Band coefficients `g = (A + eta)^{-1} q_hat` through the eigenbasis.
    pub fn g_hat(&self, eta: f64) -> Vec<C64> {
        let n = self.b.len();
        let eigs = &self.ent.eigs;
        let mut g = vec![C64::new(0.0, 0.0); n];
        for k in 0..n {
            let c = self.b[k] / (eigs.eigenvalues[k] + eta);
            let col = eigs.eigenvectors.column(k);
            for j in 0..n {
                g[j] += c * col[j];
            }
        }
        g
    }

    /// Solve `Phi(eta) = eps^2` by bisection in `ln eta`; the bracket is
    /// certified before the iteration starts.
    pub fn solve_eta(&self, eps: f64) -> Result<f64> {
        if !(eps >= EPS_FLOOR && eps <= EPS_CEIL) {
            return Err(Error::EpsRange { eps, lo: EPS_FLOOR, hi: EPS_CEIL });
        }
        let target = eps * eps;
        let phi_inf = self.phi_inf();
        if target >= phi_inf {
            return Err(Error::ConstraintInactive { eps_sq: target, phi_inf });
        }
        let lo = 1e-30f64;
        let mut hi = 1e6f64;
        while self.phi(hi) < target {
            hi *= 1e4;
            if hi > 1e60 {
                return Err(Error::SolveFailure("eta bracket expansion failed".into()));
            }
        }
        if self.phi(lo) >= target {
            return Err(Error::SolveFailure("eta lower bracket failed".into()));
        }
        let (mut llo, mut lhi) = (lo.ln(), hi.ln());
        let mut eta = ((llo + lhi) * 0.5).exp();
        for _ in 0..400 {
            let p = self.phi(eta);
            if (p - target).abs() <= 1e-10 * target {
                return Ok(eta);
            }
            if p < target {
                llo = eta.ln();
            } else {
                lhi = eta.ln();
            }
            eta = ((llo + lhi) * 0.5).exp();
        }
        // monotone bisection always lands inside tolerance well before the cap
        let p = self.phi(eta);
        if (p - target).abs() <= 1e-8 * target {
            Ok(eta)
        } else {
            Err(Error::SolveFailure(format!(
                "eta bisection stalled at Phi = {p:.6e}, target {target:.6e}"
            )))
        }
    }
}

/// `Phi(eta)` for an externally supplied weighted right-hand side.
pub fn phi_of_eta(ent: Arc<OperatorWithEigen>, q_hat: &[C64], kappa: f64, eta: f64) -> Result<f64> {
    if !(eta > 0.0) {
        return Err(Error::Param("eta must be positive".into()));
    }
    let b = ent.eigs.project(q_hat);
    let b2: Vec<f64> = b.iter().map(|z| z.norm_sqr()).collect();
    let bp = BandProblem {
        ent,
        q_hat: q_hat.to_vec(),
        b2,
        b,
        kappa,
        terms: Vec::new(),
    };
    Ok(bp.phi(eta))
}

/// Outcome of a dense regularized band solve.
#[derive(Debug, Clone)]
pub struct BandSolution {
    pub g_hat: Vec<C64>,
    pub residual_rel: f64,
    pub ill_conditioned: bool,
}

/// Solve `(A + eta I) g = p` by Hermitian Cholesky with one step of
/// iterative refinement.
pub fn solve_regularized(op: &DiscretizedOperator, p: &[C64], eta: f64) -> Result<BandSolution> {
    if !(eta > 0.0) {
        return Err(Error::Param("eta must be positive".into()));
    }
    let n = op.n();
    if p.len() != n {
        return Err(Error::Param("right-hand side length mismatch".into()));
    }
    let mut m = op.matrix.clone();
    for j in 0..n {
        m[(j, j)] += C64::from(eta);
    }
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::SolveFailure("Cholesky factorization failed".into()))?;
    let rhs = nalgebra::DVector::from_column_slice(p);
    let mut g = chol.solve(&rhs);
    let mut residual_rel = f64::INFINITY;
    for _ in 0..4 {
        let resid = &rhs - &m * &g;
        residual_rel = resid.norm() / rhs.norm().max(f64::MIN_POSITIVE);
        if residual_rel <= 1e-14 {
            break;
        }
        g += chol.solve(&resid);
    }
    // lambda_1 <= trace
    let lambda1_bound = op.trace();
    let ill_conditioned = eta < 1e3 * f64::EPSILON * lambda1_bound;
    if residual_rel > 1e-12 && !ill_conditioned {
        return Err(Error::SolveFailure(format!(
            "regularized solve residual {residual_rel:.3e} exceeds 1e-12"
        )));
    }
    Ok(BandSolution {
        g_hat: g.iter().cloned().collect(),
        residual_rel,
        ill_conditioned,
    })
}

/// Worst-case bound without the symmetry constraint.
pub fn bound_d0(params: &ProblemParams) -> Result<BoundResult> {
    let ent = operator_with_eigen(params.h, params.n_nodes)?;
    let bp = BandProblem::point(ent, params.omega0)?;
    bound_for_problem(&bp, params)
}

fn bound_for_problem(bp: &BandProblem, params: &ProblemParams) -> Result<BoundResult> {
    let cap = bp.kappa.sqrt();
    let phi_inf = bp.phi_inf();
    match bp.solve_eta(params.eps) {
        Ok(eta) => {
            let value = bp.value(eta);
            let norm_h2 = bp.h2_norm_sq(eta).sqrt();
            let norm_l2 = bp.band_norm_sq(eta).sqrt();
            let d = value / norm_h2;
            Ok(BoundResult {
                params: *params,
                eta: Some(eta),
                d,
                norm_h2,
                norm_l2,
                value_at_omega0: value,
                phi_inf,
                cap,
                u_nodes: bp.g_hat(eta),
            })
        }
        Err(Error::ConstraintInactive { .. }) => Ok(BoundResult {
            params: *params,
            eta: None,
            d: cap,
            norm_h2: cap,
            norm_l2: phi_inf.sqrt() * cap,
            value_at_omega0: bp.kappa,
            phi_inf,
            cap,
            u_nodes: Vec::new(),
        }),
        Err(e) => Err(e),
    }
}

/// Consistency drift of the closed-form representation
/// `D(eps) = C exp(-int_eps^1 t dt / (t^2 + eta(t)))`, measured over a grid.
#[derive(Debug, Clone, Serialize)]
pub struct ExponentialFormulaCheck {
    pub ratio_drift: f64,
    pub eps_grid: Vec<f64>,
    pub ln_d: Vec<f64>,
    pub eta: Vec<f64>,
}

pub fn check_exponential_formula(
    params: &ProblemParams,
    eps_grid: &[f64],
) -> Result<ExponentialFormulaCheck> {
    let mut grid: Vec<f64> = eps_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let ent = operator_with_eigen(params.h, params.n_nodes)?;
    let bp = BandProblem::point(ent, params.omega0)?;
    let mut ln_d = Vec::with_capacity(grid.len());
    let mut etas = Vec::with_capacity(grid.len());
    for &e in &grid {
        let eta = bp.solve_eta(e)?;
        ln_d.push((bp.value(eta) / bp.h2_norm_sq(eta).sqrt()).ln());
        etas.push(eta);
    }
    // cumulative trapezoid of t/(t^2 + eta(t)) from each eps up to the top
    let integrand: Vec<f64> = grid
        .iter()
        .zip(&etas)
        .map(|(&t, &eta)| t / (t * t + eta))
        .collect();
    let m = grid.len();
    let mut upward = vec![0.0; m];
    for i in (0..m.saturating_sub(1)).rev() {
        let dt = grid[i + 1] - grid[i];
        upward[i] = upward[i + 1] + 0.5 * dt * (integrand[i] + integrand[i + 1]);
    }
    let r: Vec<f64> = ln_d.iter().zip(&upward).map(|(&l, &i)| l + i).collect();
    let mean = r.iter().sum::<f64>() / m as f64;
    let ratio_drift = r.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    Ok(ExponentialFormulaCheck { ratio_drift, eps_grid: grid, ln_d, eta: etas })
}

/// Symmetric worst-case bound `D_sym = max_{|lam|=1} D0_lam`.
#[derive(Debug, Clone, Serialize)]
pub struct SymmetricBound {
    pub d_sym: f64,
    pub lambda_star: C64,
    pub d0: f64,
    pub eta_star: Option<f64>,
}

fn d_for_phase(ent: &Arc<OperatorWithEigen>, params: &ProblemParams, theta: f64) -> Result<f64> {
    let lam = C64::new(theta.cos(), theta.sin());
    let bp = BandProblem::symmetrized(ent.clone(), params.omega0, lam)?;
    Ok(bound_for_problem(&bp, params)?.d)
}

pub fn bound_d_symmetric(params: &ProblemParams, n_phases: usize) -> Result<SymmetricBound> {
    if n_phases < 8 {
        return Err(Error::Param("need at least 8 phases".into()));
    }
    let ent = operator_with_eigen(params.h, params.n_nodes)?;
    let d0 = bound_d0(params)?.d;

    let mut best = (0.0f64, 0.0f64); // (theta, d)
    for k in 0..n_phases {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / n_phases as f64;
        let d = d_for_phase(&ent, params, theta)?;
        if d > best.1 {
            best = (theta, d);
        }
    }
    let step = 2.0 * std::f64::consts::PI / n_phases as f64;
    let (theta_star, neg_d) = golden_min(
        |t| -d_for_phase(&ent, params, t).unwrap_or(0.0),
        best.0 - step,
        best.0 + step,
        1e-6,
        80,
    );
    let d_sym = (-neg_d).max(best.1);
    let theta_star = if -neg_d >= best.1 { theta_star } else { best.0 };

    if !(0.5 * d0 <= d_sym * (1.0 + 1e-9) && d_sym <= d0 * (1.0 + 1e-9)) {
        return Err(Error::SandwichViolation { d_sym, d0 });
    }
    let lam = C64::new(theta_star.cos(), theta_star.sin());
    let bp = BandProblem::symmetrized(ent, params.omega0, lam)?;
    let eta_star = match bp.solve_eta(params.eps) {
        Ok(eta) => Some(eta),
        Err(Error::ConstraintInactive { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(SymmetricBound { d_sym, lambda_star: lam, d0, eta_star })
}

/// `|u(omega0)| / |u(-omega0)|` for the plainly regularized solution
/// `(K + eps^2) u = p`. The triangle inequality in the eigenbasis forces the
/// ratio to be at least one; what matters is that it stays bounded, which is
/// what makes symmetrization lossless for the exponent.
pub fn asymmetry_ratio(params: &ProblemParams) -> Result<f64> {
    let ent = operator_with_eigen(params.h, params.n_nodes)?;
    let bp = BandProblem::point(ent.clone(), params.omega0)?;
    let eta = params.eps * params.eps;
    let g = bp.g_hat(eta);
    let u = |w: C64| -> C64 {
        let mut ext = C64::new(0.0, 0.0);
        for ((&x, &wt), &gj) in ent
            .op
            .quad
            .nodes
            .iter()
            .zip(&ent.op.quad.weights)
            .zip(&g)
        {
            ext += reproducing_element(C64::from(x), w, ent.op.h) * wt.sqrt() * gj;
        }
        (bp.q_at(w) - ext) / eta
    };
    let plus = u(C64::from(params.omega0)).norm();
    let minus = u(C64::from(-params.omega0)).norm();
    Ok(plus / minus)
}

/// A pair of admissible extrapolants nearly indistinguishable on the band and
/// separated at the extrapolation point. Both members are finite atomic
/// Stieltjes measures (plus the common reference mass at the origin).
#[derive(Debug, Clone, Serialize)]
pub struct MaximizerPair {
    /// Spectral abscissae shared by both members.
    pub lambda_nodes: Vec<f64>,
    /// Masses of the first member on those abscissae (reference mass at the
    /// origin included separately).
    pub masses_f: Vec<f64>,
    pub masses_g: Vec<f64>,
    /// Common reference point mass at `lambda = 0`.
    pub reference_mass: f64,
    pub h: f64,
    pub band_mismatch: f64,
    pub separation_at_omega0: f64,
    /// `max(||sigma_F||_*, ||sigma_G||_*)`.
    pub dual_norm_scale: f64,
    /// Symmetric bound at the requested mismatch level.
    pub d_reference: f64,
    /// `separation / (d_reference * dual_norm_scale)`.
    pub achieved_ratio: f64,
}

impl MaximizerPair {
    fn eval_measure(&self, masses: &[f64], w: C64) -> C64 {
        let z = w + C64::new(0.0, self.h);
        let z2 = z * z;
        let mut acc = C64::from(self.reference_mass) / (-z2);
        for (&lam, &m) in self.lambda_nodes.iter().zip(masses) {
            acc += C64::from(m) / (C64::from(lam) - z2);
        }
        acc
    }

    pub fn eval_f(&self, w: C64) -> C64 {
        self.eval_measure(&self.masses_f, w)
    }

    pub fn eval_g(&self, w: C64) -> C64 {
        self.eval_measure(&self.masses_g, w)
    }
}

/// Construct the ill-posedness witness pair at the given parameters.
///
/// The recipe follows the lower-bound direction of the equivalence between
/// the pair problem and the Hardy-space bound: take the symmetrized
/// maximizer `phi`, push it into the admissible cone via
/// `psi = (phi - phi(-ih) chi) / (w + ih)^2`, split the boundary density of
/// `psi` into its positive and negative parts, and add a common reference
/// mass. The subtraction of `chi` (a symmetric bump with `chi(-ih) = 1`
/// and pole just below the boundary) removes the one non-representable
/// term in the Laurent expansion of `psi` at `-ih`; the first-order term
/// vanishes by symmetry.
///
/// The maximizer may be taken at an internal mismatch level below `eps`
/// (the band budget is then spent by rescaling), which absorbs the
/// `omega0^2 + h^2` conversion cost of the `(w+ih)^2` decay factor into the
/// mismatch rather than the separation.
pub fn worst_case_pair(params: &ProblemParams) -> Result<MaximizerPair> {
    let d_ref = bound_d_symmetric(params, 32)?.d_sym;
    let mut best: Option<MaximizerPair> = None;
    for level in 0..6 {
        let eps_int = params.eps * 0.5f64.powi(level);
        if eps_int < EPS_FLOOR {
            break;
        }
        let pair = pair_at_level(params, eps_int, d_ref)?;
        let better = best
            .as_ref()
            .map(|b| pair.achieved_ratio > b.achieved_ratio)
            .unwrap_or(true);
        if better {
            best = Some(pair);
        }
        if best.as_ref().unwrap().achieved_ratio >= 0.25 {
            break;
        }
    }
    let pair = best.expect("at least one level is evaluated");

    // hard contract checks
    let grid: Vec<f64> = (1..=200).map(|i| 0.5 * i as f64).collect();
    for masses in [&pair.masses_f, &pair.masses_g] {
        let scan = positivity_scan(
            |w| pair.eval_measure(masses, w),
            params.h,
            0.5 * params.h,
            &grid,
        )?;
        if !scan.ok {
            return Err(Error::PositivityFailure { min_im: scan.min_im });
        }
    }
    if pair.band_mismatch > params.eps * pair.dual_norm_scale * (1.0 + 1e-8) {
        return Err(Error::SolveFailure(format!(
            "pair mismatch {:.3e} exceeds budget {:.3e}",
            pair.band_mismatch,
            params.eps * pair.dual_norm_scale
        )));
    }
    Ok(pair)
}

fn pair_at_level(params: &ProblemParams, eps_int: f64, d_ref: f64) -> Result<MaximizerPair> {
    let h = params.h;
    let ent = operator_with_eigen(h, params.n_nodes)?;
    let inner_params = ProblemParams { eps: eps_int, ..*params };
    let sym = bound_d_symmetric(&inner_params, 32)?;
    let bp = BandProblem::symmetrized(ent.clone(), params.omega0, sym.lambda_star)?;
    let eta = sym
        .eta_star
        .ok_or_else(|| Error::SolveFailure("symmetric maximizer has inactive constraint".into()))?;
    let g = bp.g_hat(eta);
    let norm_h2 = bp.h2_norm_sq(eta).sqrt();

    // maximizer evaluator, valid down to the boundary line
    let ext = |w: C64| -> C64 {
        let mut s = C64::new(0.0, 0.0);
        for ((&x, &wt), &gj) in ent.op.quad.nodes.iter().zip(&ent.op.quad.weights).zip(&g) {
            s += reproducing_element(C64::from(x), w, h) * wt.sqrt() * gj;
        }
        s
    };
    let phi = move |w: C64| (bp.q_at(w) - ext(w)) / eta / norm_h2;

    // remove the non-representable second-order term at w = -ih
    let a_sub = {
        let v = phi(C64::new(0.0, -h));
        debug_assert!(v.im.abs() <= 1e-6 * v.norm().max(1e-300));
        v.re
    };
    // chi has its pole just below the boundary so the subtraction stays
    // local; delta balances band pollution against density resolution
    let m_phi_rough = {
        let rule = gauss_legendre(40, 0.0, 1.0).expect("fixed rule");
        rule.integrate(|x| {
            let w = C64::from(x);
            let z = w + C64::new(0.0, h);
            (phi(w) / (z * z)).norm_sqr()
        })
        .sqrt()
    };
    let delta = ((0.25 * m_phi_rough / a_sub.abs().max(1e-12)).sqrt()).clamp(1e-3, 0.5);
    let chi = move |w: C64| -> C64 {
        let d = w + C64::new(0.0, h * (1.0 + delta));
        C64::from(-h * h * delta * delta) / (d * d)
    };
    let psi = move |w: C64| -> C64 {
        let z = w + C64::new(0.0, h);
        (phi(w) - C64::from(a_sub) * chi(w)) / (z * z)
    };

    // boundary density over x = sqrt(lambda); panels split at sign changes
    let boundary_im = |x: f64| psi(C64::new(x, -h)).im / std::f64::consts::PI;
    let x_max = (20.0 * params.omega0).max(50.0);
    let mut scan_pts: Vec<f64> = Vec::new();
    let x_min = (h * delta * 1e-3).max(1e-9);
    let n_log = 200usize;
    for i in 0..n_log {
        // log-spaced from x_min up to 1
        scan_pts.push(x_min * ((1.0 / x_min).ln() * i as f64 / n_log as f64).exp());
    }
    let n_lin = 2400usize;
    for i in 1..=n_lin {
        scan_pts.push(x_max * i as f64 / n_lin as f64);
    }
    scan_pts.sort_by(f64::total_cmp);
    scan_pts.dedup();

    let mut cuts = vec![0.0f64];
    let mut prev_x = scan_pts[0];
    let mut prev_s = boundary_im(prev_x);
    for &x in scan_pts.iter().skip(1) {
        let s = boundary_im(x);
        if prev_s != 0.0 && s != 0.0 && prev_s.signum() != s.signum() {
            // bisect the sign change
            let (mut a, mut b) = (prev_x, x);
            let mut fa = prev_s;
            for _ in 0..60 {
                let m = 0.5 * (a + b);
                let fm = boundary_im(m);
                if fm == 0.0 {
                    a = m;
                    break;
                }
                if fa.signum() == fm.signum() {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
            }
            cuts.push(0.5 * (a + b));
        }
        prev_x = x;
        prev_s = s;
    }
    cuts.push(x_max);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

    // quadrature atoms of the split measures: lambda = x^2, d lambda = 2x dx
    let mut lambda_nodes = Vec::new();
    let mut mass_pos = Vec::new();
    let mut mass_neg = Vec::new();
    for win in cuts.windows(2) {
        let (a, b) = (win[0], win[1]);
        if b - a < 1e-14 {
            continue;
        }
        let sub = ((b - a) / 0.05).ceil().min(40.0) as usize;
        for s in 0..sub.max(1) {
            let aa = a + (b - a) * s as f64 / sub as f64;
            let bb = a + (b - a) * (s + 1) as f64 / sub as f64;
            let rule = gauss_legendre(12, aa, bb).expect("panel rule");
            for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
                let d = boundary_im(x);
                let mass = 2.0 * x * w * d;
                lambda_nodes.push(x * x);
                mass_pos.push(mass.max(0.0));
                mass_neg.push((-mass).max(0.0));
            }
        }
    }

    // budget scaling: mismatch c*m1 must not exceed eps * (m0 + c*s1)
    let z2 = |w: C64| {
        let z = w + C64::new(0.0, h);
        z * z
    };
    let diff_unscaled = |w: C64| -> C64 {
        let zz = z2(w);
        lambda_nodes
            .iter()
            .zip(mass_pos.iter().zip(&mass_neg))
            .map(|(&lam, (&mp, &mn))| C64::from(mp - mn) / (C64::from(lam) - zz))
            .sum()
    };
    let band_rule = gauss_legendre(160, 0.0, 1.0)?;
    let m1 = band_rule
        .integrate(|x| diff_unscaled(C64::from(x)).norm_sqr())
        .sqrt();
    let dual = |masses: &[f64]| -> f64 {
        lambda_nodes
            .iter()
            .zip(masses)
            .map(|(&lam, &m)| m / (lam + 1.0))
            .sum()
    };
    let s1 = dual(&mass_pos).max(dual(&mass_neg));
    let m0 = 1.0f64; // reference mass has unit dual norm at lambda = 0
    let c = if m1 > params.eps * s1 {
        params.eps * m0 / (m1 - params.eps * s1)
    } else {
        1e6 * params.eps / m1.max(1e-300)
    };

    let masses_f: Vec<f64> = mass_pos.iter().map(|m| m * c).collect();
    let masses_g: Vec<f64> = mass_neg.iter().map(|m| m * c).collect();
    let mut pair = MaximizerPair {
        lambda_nodes,
        masses_f,
        masses_g,
        reference_mass: m0,
        h,
        band_mismatch: 0.0,
        separation_at_omega0: 0.0,
        dual_norm_scale: 0.0,
        d_reference: d_ref,
        achieved_ratio: 0.0,
    };
    pair.band_mismatch = band_rule
        .integrate(|x| (pair.eval_f(C64::from(x)) - pair.eval_g(C64::from(x))).norm_sqr())
        .sqrt();
    let w0 = C64::from(params.omega0);
    pair.separation_at_omega0 = (pair.eval_f(w0) - pair.eval_g(w0)).norm();
    let dual_f = m0
        + pair
            .lambda_nodes
            .iter()
            .zip(&pair.masses_f)
            .map(|(&l, &m)| m / (l + 1.0))
            .sum::<f64>();
    let dual_g = m0
        + pair
            .lambda_nodes
            .iter()
            .zip(&pair.masses_g)
            .map(|(&l, &m)| m / (l + 1.0))
            .sum::<f64>();
    pair.dual_norm_scale = dual_f.max(dual_g);
    pair.achieved_ratio =
        pair.separation_at_omega0 / (pair.d_reference * pair.dual_norm_scale);
    Ok(pair)
}
