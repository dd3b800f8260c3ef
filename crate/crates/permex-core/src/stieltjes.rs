//! Rational Stieltjes permittivity models and the norms that control them.
//!
//! An admissible model is `f(w) = rho_star + sum_j sigma_j / (t_j - (w+ih)^2)`
//! with nonnegative constant, positive point masses at nonnegative spectral
//! abscissae, and half-plane shift `h = 1/tau_0`. Such functions are analytic
//! for `Im w > -h`, symmetric (`conj(f(-conj w)) = f(w)`), passive
//! (`Im f > 0` for `Re w > 0`), and obey the plasma limit
//! `f ~ -A w^{-2}` when `rho_star = 0`.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{gauss_legendre, Quadrature};
use crate::util::log_grid_min;

/// Relative pole-proximity tolerance for evaluation.
pub const POLE_TOL: f64 = 1e-12;

/// Finitely supported spectral measure plus constant.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StieltjesRational {
    pub rho_star: f64,
    pub h: f64,
    /// Strictly increasing, all `>= 0`.
    pub nodes: Vec<f64>,
    /// Positive point masses, one per node.
    pub masses: Vec<f64>,
}

impl StieltjesRational {
    pub fn new(rho_star: f64, h: f64, nodes: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        let f = Self { rho_star, h, nodes, masses };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0) {
            return Err(Error::Param(format!("h must be positive, got {}", self.h)));
        }
        if self.rho_star < 0.0 {
            return Err(Error::Param("rho_star must be nonnegative".into()));
        }
        if self.nodes.len() != self.masses.len() {
            return Err(Error::Param("nodes and masses must have equal length".into()));
        }
        if self.nodes.first().is_some_and(|&t| t < 0.0) {
            return Err(Error::Param("nodes must be nonnegative".into()));
        }
        if !self.nodes.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Param("nodes must be strictly increasing".into()));
        }
        if !self.masses.iter().all(|&s| s > 0.0) {
            return Err(Error::Param("masses must be positive".into()));
        }
        Ok(())
    }

    /// Total mass `A = sum_j sigma_j`; the plasma-limit amplitude when
    /// `rho_star = 0`.
    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// Dual norm of the spectral measure, `sum_j sigma_j / (t_j + 1)`.
    pub fn dual_norm(&self) -> f64 {
        self.nodes
            .iter()
            .zip(&self.masses)
            .map(|(&t, &s)| s / (t + 1.0))
            .sum()
    }

    /// Evaluate the model at `w` with `Im w > -h`.
    pub fn eval(&self, omega: C64) -> Result<C64> {
        if omega.im <= -self.h {
            return Err(Error::Domain(format!(
                "Im w = {} is not above -h = {}",
                omega.im, -self.h
            )));
        }
        let z = omega + C64::new(0.0, self.h);
        let z2 = z * z;
        let mut acc = C64::from(self.rho_star);
        for (&t, &s) in self.nodes.iter().zip(&self.masses) {
            let den = C64::from(t) - z2;
            let tol = POLE_TOL * (1.0 + t.abs());
            if den.norm() < tol {
                return Err(Error::NearPole { node: t, tol });
            }
            acc += C64::from(s) / den;
        }
        Ok(acc)
    }
}

/// Parameters of one worst-case bound evaluation.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ProblemParams {
    /// Half-plane shift (inverse relaxation time).
    pub h: f64,
    /// Extrapolation point, outside the rescaled band: `omega0 > 1`.
    pub omega0: f64,
    /// Relative data-mismatch level, in `(0, 1)`.
    pub eps: f64,
    /// Quadrature order of the band discretization.
    pub n_nodes: usize,
}

impl ProblemParams {
    pub fn new(h: f64, omega0: f64, eps: f64, n_nodes: usize) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::Param(format!("h must be positive, got {h}")));
        }
        if !(omega0 > 1.0) {
            return Err(Error::Param(format!("omega0 must exceed 1, got {omega0}")));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::Param(format!("eps must lie in (0,1), got {eps}")));
        }
        if n_nodes < 8 {
            return Err(Error::Param(format!("n_nodes must be at least 8, got {n_nodes}")));
        }
        Ok(Self { h, omega0, eps, n_nodes })
    }
}

/// Result of a passivity scan on the line `Im w = -h'`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PositivityScan {
    pub min_im: f64,
    pub ok: bool,
}

/// Minimum of `Im f(x - i h')` over a positive grid; `ok` iff it is positive.
pub fn positivity_scan<F>(f: F, h: f64, h_prime: f64, x_grid: &[f64]) -> Result<PositivityScan>
where
    F: Fn(C64) -> C64,
{
    if !(h_prime > 0.0 && h_prime < h) {
        return Err(Error::Domain(format!(
            "need 0 < h' < h, got h' = {h_prime}, h = {h}"
        )));
    }
    if x_grid.is_empty() || x_grid.iter().any(|&x| x <= 0.0) {
        return Err(Error::Param("x_grid must be nonempty and positive".into()));
    }
    let min_im = x_grid
        .iter()
        .map(|&x| f(C64::new(x, -h_prime)).im)
        .fold(f64::INFINITY, f64::min);
    Ok(PositivityScan { min_im, ok: min_im > 0.0 })
}

/// Boundary density `(1/pi) Im f(sqrt(lambda) - ih)` on a grid of spectral
/// abscissae. The input must be symmetric; the defect is probed on the
/// boundary line.
pub fn measure_density_from_boundary<F>(f: F, h: f64, lambda_grid: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(C64) -> C64,
{
    // symmetry probe: S f(w) = conj(f(-conj w)) must match f on the line
    let probe: Vec<f64> = vec![0.17, 0.61, 1.39, 2.53];
    let mut defect: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for &x in &probe {
        let w = C64::new(x, -h);
        let v = f(w);
        let sv = f(C64::new(-x, -h)).conj();
        defect = defect.max((v - sv).norm());
        scale = scale.max(v.norm());
    }
    let tol = 1e-8 * scale.max(1e-300);
    if defect > tol {
        return Err(Error::NonSymmetric { defect, tol });
    }
    Ok(lambda_grid
        .iter()
        .map(|&lam| f(C64::new(lam.max(0.0).sqrt(), -h)).im / std::f64::consts::PI)
        .collect())
}

/// Stieltjes transform of an absolutely continuous measure given by `density`
/// on the nodes of `lam_quad`: `f(w) = int density(l) / (l - (w+ih)^2) dl`.
pub fn stieltjes_transform(lam_quad: &Quadrature, density: &[f64], h: f64, omega: C64) -> C64 {
    let z = omega + C64::new(0.0, h);
    let z2 = z * z;
    lam_quad
        .nodes
        .iter()
        .zip(&lam_quad.weights)
        .zip(density)
        .map(|((&lam, &w), &d)| C64::from(w * d) / (C64::from(lam) - z2))
        .sum()
}

/// Hardy-norm surrogate `|| f(.-ih') / (.-ih'+ih) ||_{L^2(R)}` computed by
/// quadrature over `|x| <= X` plus closed-form and bounded tails.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct HprimeNorm {
    pub value: f64,
    pub tail_bound: f64,
}

pub fn hprime_norm(f: &StieltjesRational, h_prime: f64) -> Result<HprimeNorm> {
    let h = f.h;
    if !(h_prime > 0.0 && h_prime < h) {
        return Err(Error::Domain(format!(
            "need 0 < h' < h, got h' = {h_prime}, h = {h}"
        )));
    }
    let delta = h - h_prime;
    // constant part integrates exactly: int rho^2/(x^2+delta^2) dx = pi rho^2/delta
    let const_part = f.rho_star * f.rho_star * std::f64::consts::PI / delta;

    let atoms = StieltjesRational {
        rho_star: 0.0,
        h,
        nodes: f.nodes.clone(),
        masses: f.masses.clone(),
    };
    let tmax = f.nodes.iter().cloned().fold(0.0, f64::max);
    let x_cut = 1000.0 * (1.0 + tmax).sqrt().max(1.0);
    // |f_atoms(x-ih')| <= 2 A / x^2 once x^2 >= 2 (tmax + (h+h')^2)
    let a_total = atoms.total_mass();
    let m_bound = 2.0 * a_total;
    // tail of |f_a|^2/x^2: int_X 4A^2 x^{-6} = 4A^2/(5X^5); cross term with rho:
    // int_X 2 rho (2A/x^2) / x^2 = 4 rho A / (3 X^3)
    let tail_bound = m_bound * m_bound / (5.0 * x_cut.powi(5))
        + 4.0 * f.rho_star * a_total / (3.0 * x_cut.powi(3));

    let mut total = const_part;
    if !f.nodes.is_empty() {
        let panels = 64usize;
        let per_panel = 24usize;
        let mut quad_sum = 0.0;
        for p in 0..panels {
            // graded panels, denser near the origin where the atoms live
            let lo = x_cut * (p as f64 / panels as f64).powi(3);
            let hi = x_cut * ((p + 1) as f64 / panels as f64).powi(3);
            if hi <= lo {
                continue;
            }
            let rule = gauss_legendre(per_panel, lo, hi)?;
            quad_sum += rule.integrate(|x| {
                let mut s = 0.0;
                for &sgn in &[1.0, -1.0] {
                    let w = C64::new(sgn * x, -h_prime);
                    let fa = atoms.eval(w).expect("atom evaluation inside the half-plane");
                    s += (2.0 * f.rho_star * fa.re + fa.norm_sqr()) / (x * x + delta * delta);
                }
                s
            });
        }
        total += quad_sum;
    }
    let value_sq = total;
    if value_sq < 0.0 {
        return Err(Error::Domain("negative norm square from cancellation".into()));
    }
    let value = value_sq.sqrt();
    let rel_tail = tail_bound / value_sq.max(f64::MIN_POSITIVE);
    if f.rho_star == 0.0 && !f.nodes.is_empty() && rel_tail > 1e-8 {
        return Err(Error::TailBound { bound: rel_tail, tol: 1e-8 });
    }
    Ok(HprimeNorm { value, tail_bound })
}

/// `phi(x) = (x^2+1)/(4x) ln(1 + 4x/((x-1)^2 + h^2))`, the weight whose
/// infimum certifies the lower bound on the band mean of `Re f`.
pub fn mean_real_weight(x: f64, h: f64) -> f64 {
    if x <= 0.0 {
        return 1.0 / (1.0 + h * h);
    }
    (x * x + 1.0) / (4.0 * x) * (4.0 * x / ((x - 1.0) * (x - 1.0) + h * h)).ln_1p()
}

/// `mu_h = inf_x phi(x)`, found by golden section on `ln x` with the endpoint
/// limits `phi(0+) = 1/(1+h^2)` and `phi(inf) = 1` as guards.
pub fn mu_h(h: f64) -> f64 {
    let (_, interior) = log_grid_min(|x| mean_real_weight(x, h), 1e-6, 1e6, 400);
    interior.min(1.0 / (1.0 + h * h)).min(1.0)
}

/// Both sides of the norm sandwich for one model.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MeanRealBound {
    /// `rho_star + ||sigma||_*`.
    pub sum_norm: f64,
    /// Band mean `int_0^1 Re f`.
    pub mean_real: f64,
    /// Certified weight `mu_h` with `mean_real >= mu_h * sum_norm`.
    pub mu_h: f64,
    /// Certified constant with `sum_norm >= c_lower * ||f||_{L2(0,1)}`.
    pub c_lower: f64,
    /// `||f||_{L2(0,1)}` by quadrature.
    pub band_l2: f64,
}

pub fn mean_real_lower_bound(f: &StieltjesRational) -> Result<MeanRealBound> {
    let rule = gauss_legendre(120, 0.0, 1.0)?;
    let mut mean_real = 0.0;
    let mut band_sq = 0.0;
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        let v = f.eval(C64::from(x))?;
        mean_real += w * v.re;
        band_sq += w * v.norm_sqr();
    }
    let mu = mu_h(f.h);
    let s_h = sup_psi_weight(f.h);
    Ok(MeanRealBound {
        sum_norm: f.rho_star + f.dual_norm(),
        mean_real,
        mu_h: mu,
        c_lower: 1.0 / s_h.sqrt().max(1.0),
        band_l2: band_sq.sqrt(),
    })
}

/// `sup_l (l+1) psi(l)` where `psi(l) = int_0^1 (l+1)/|l-(w+ih)^2|^2 dw`;
/// finite because the arctan difference decays like `2h/l`.
fn sup_psi_weight(h: f64) -> f64 {
    let psi = |lam: f64| {
        let x = lam.sqrt();
        let phi = mean_real_weight(x, h);
        let arct = ((x + 1.0) / h).atan() - ((x - 1.0) / h).atan();
        phi / (lam + h * h) + (lam + 1.0) / (4.0 * h * (lam + h * h)) * arct
    };
    let g = |lam: f64| (lam + 1.0) * psi(lam);
    let (_, neg_max) = log_grid_min(|l| -g(l), 1e-9, 1e9, 600);
    (-neg_max).max(g(0.0))
}
