//! Positivity-constrained least-squares fitting of band data by rational
//! Stieltjes models, certified by the Caprini function.
//!
//! The fit is an exchange scheme over atomic measures: nonnegative least
//! squares pins the weights at fixed nodes, and the Caprini function
//!
//! `C(t) = 2 Re int_0^1 (f(w) - f_exp(w)) / (t - (w - ih)^2) dw`
//!
//! is the exact first-variation of the squared residual against a unit mass
//! at `t`. A negative minimum of `C` names the next node to insert; the fit
//! is optimal precisely when `C >= 0` everywhere, `C` vanishes at the nodes,
//! and (when the constant term is positive) `t C(t)` vanishes at infinity.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad::{gauss_legendre, Quadrature};
use crate::stieltjes::StieltjesRational;
use crate::util::golden_min;

/// Band samples with an attached quadrature representation.
#[derive(Debug, Clone)]
pub struct ExperimentalData {
    pub grid: Vec<f64>,
    pub values: Vec<C64>,
    pub noise_level: Option<f64>,
    /// Gauss rule on `[0, 1]` carrying all band integrals.
    pub rule: Quadrature,
    /// Data resampled onto the rule nodes (piecewise-cubic when the grids
    /// differ).
    pub resampled: Vec<C64>,
}

/// Order of the default band rule.
pub const BAND_RULE_ORDER: usize = 120;

pub fn default_band_rule() -> Quadrature {
    gauss_legendre(BAND_RULE_ORDER, 0.0, 1.0).expect("fixed rule")
}

impl ExperimentalData {
    pub fn new(grid: Vec<f64>, values: Vec<C64>, noise_level: Option<f64>) -> Result<Self> {
        if grid.len() != values.len() || grid.is_empty() {
            return Err(Error::Param("grid and values must be nonempty and equal".into()));
        }
        if !grid.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Param("grid must be strictly increasing".into()));
        }
        if grid[0] < -1e-12 || grid[grid.len() - 1] > 1.0 + 1e-12 {
            return Err(Error::Param("grid must lie in [0, 1]".into()));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Param("values must be finite".into()));
        }
        let rule = default_band_rule();
        let same = grid.len() == rule.len()
            && grid
                .iter()
                .zip(&rule.nodes)
                .all(|(&a, &b)| (a - b).abs() < 1e-12);
        let resampled = if same {
            values.clone()
        } else {
            rule.nodes
                .iter()
                .map(|&x| cubic_interp(&grid, &values, x))
                .collect()
        };
        Ok(Self { grid, values, noise_level, rule, resampled })
    }

    /// `||f_exp||^2` over the band by the attached rule.
    pub fn norm_sq(&self) -> f64 {
        self.rule
            .weights
            .iter()
            .zip(&self.resampled)
            .map(|(&w, v)| w * v.norm_sqr())
            .sum()
    }
}

/// Local 4-point Lagrange interpolation on a sorted grid.
fn cubic_interp(grid: &[f64], values: &[C64], x: f64) -> C64 {
    let n = grid.len();
    if n == 1 {
        return values[0];
    }
    let pos = grid.partition_point(|&g| g < x);
    let start = pos.saturating_sub(2).min(n.saturating_sub(4));
    let count = 4.min(n);
    let xs = &grid[start..start + count];
    let ys = &values[start..start + count];
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..count {
        let mut li = 1.0;
        for j in 0..count {
            if i != j {
                li *= (x - xs[j]) / (xs[i] - xs[j]);
            }
        }
        acc += ys[i] * li;
    }
    acc
}

/// Noisy synthetic samples of a model; deterministic per seed. The noise is
/// complex Gaussian with total standard deviation `noise_sigma`.
pub fn synthesize_data(
    truth: &StieltjesRational,
    grid: &[f64],
    noise_sigma: f64,
    seed: u64,
) -> Result<ExperimentalData> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).map_err(|e| Error::Param(e.to_string()))?;
    let scale = noise_sigma / 2f64.sqrt();
    let values: Vec<C64> = grid
        .iter()
        .map(|&x| {
            let clean = truth.eval(C64::from(x)).expect("band point is inside the domain");
            let re: f64 = normal.sample(&mut rng);
            let im: f64 = normal.sample(&mut rng);
            clean + C64::new(scale * re, scale * im)
        })
        .collect();
    ExperimentalData::new(grid.to_vec(), values, Some(noise_sigma))
}

fn model_on_rule(model: &StieltjesRational, rule: &Quadrature) -> Vec<C64> {
    rule.nodes
        .iter()
        .map(|&x| model.eval(C64::from(x)).expect("band point is inside the domain"))
        .collect()
}

fn residual_norm_sq(model: &StieltjesRational, data: &ExperimentalData) -> f64 {
    let mv = model_on_rule(model, &data.rule);
    data.rule
        .weights
        .iter()
        .zip(mv.iter().zip(&data.resampled))
        .map(|(&w, (m, d))| w * (m - d).norm_sqr())
        .sum()
}

/// The Caprini function of a model against the data.
pub fn caprini_function(model: &StieltjesRational, data: &ExperimentalData, t: f64) -> f64 {
    let h = model.h;
    let mv = model_on_rule(model, &data.rule);
    caprini_from_residual(&data.rule, &mv, &data.resampled, h, t)
}

fn caprini_from_residual(
    rule: &Quadrature,
    model_vals: &[C64],
    data_vals: &[C64],
    h: f64,
    t: f64,
) -> f64 {
    let mut acc = 0.0;
    for ((&x, &w), (m, d)) in rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .zip(model_vals.iter().zip(data_vals))
    {
        let wmih = C64::new(x, -h);
        let den = C64::from(t) - wmih * wmih;
        acc += w * ((m - d) / den).re;
    }
    2.0 * acc
}

/// `d C / d t` by quadrature of the differentiated integrand.
pub fn caprini_derivative(model: &StieltjesRational, data: &ExperimentalData, t: f64) -> f64 {
    let h = model.h;
    let mv = model_on_rule(model, &data.rule);
    let mut acc = 0.0;
    for ((&x, &w), (m, d)) in data
        .rule
        .nodes
        .iter()
        .zip(&data.rule.weights)
        .zip(mv.iter().zip(&data.resampled))
    {
        let wmih = C64::new(x, -h);
        let den = C64::from(t) - wmih * wmih;
        acc += w * (-(m - d) / (den * den)).re;
    }
    2.0 * acc
}

/// `lim t C(t) = 2 Re int_0^1 (f - f_exp)`, the tail charge of the model.
fn tail_charge(rule: &Quadrature, model_vals: &[C64], data_vals: &[C64]) -> f64 {
    2.0 * rule
        .weights
        .iter()
        .zip(model_vals.iter().zip(data_vals))
        .map(|(&w, (m, d))| w * (m - d).re)
        .sum::<f64>()
}

/// Grid certificate of least-squares optimality.
#[derive(Debug, Clone, Serialize)]
pub struct CapriniCertificate {
    pub t_grid: Vec<f64>,
    pub c_values: Vec<f64>,
    pub min_c: f64,
    /// `|C(t_j)|` at the model nodes.
    pub node_values: Vec<f64>,
    /// `|C'(t_j)|` at interior nodes (`t_j > 0`).
    pub node_derivatives: Vec<f64>,
    /// Richardson estimate of `lim t C(t)`; only binding when `rho_star > 0`.
    pub tail_limit: f64,
    pub tol: f64,
    pub ok: bool,
}

/// Evaluate the certificate on a grid covering `[0, T]` with
/// `T >= 10 max(t_j, 1)`.
pub fn certify(
    model: &StieltjesRational,
    data: &ExperimentalData,
    t_grid: &[f64],
) -> Result<CapriniCertificate> {
    let t_need = 10.0 * model.nodes.iter().cloned().fold(1.0f64, f64::max);
    let t_hi = t_grid.iter().cloned().fold(0.0f64, f64::max);
    let t_lo = t_grid.iter().cloned().fold(f64::INFINITY, f64::min);
    if t_lo > 1e-12 || t_hi < t_need {
        return Err(Error::Param(format!(
            "t_grid must cover [0, {t_need}], got [{t_lo}, {t_hi}]"
        )));
    }
    let mv = model_on_rule(model, &data.rule);
    let c_values: Vec<f64> = t_grid
        .iter()
        .map(|&t| caprini_from_residual(&data.rule, &mv, &data.resampled, model.h, t))
        .collect();
    let min_c = c_values.iter().cloned().fold(f64::INFINITY, f64::min);
    let node_values: Vec<f64> = model
        .nodes
        .iter()
        .map(|&t| caprini_function(model, data, t).abs())
        .collect();
    let node_derivatives: Vec<f64> = model
        .nodes
        .iter()
        .filter(|&&t| t > 1e-12)
        .map(|&t| caprini_derivative(model, data, t).abs())
        .collect();

    // Richardson in 1/t through the three largest grid points
    let mut idx: Vec<usize> = (0..t_grid.len()).collect();
    idx.sort_by(|&i, &j| t_grid[i].total_cmp(&t_grid[j]));
    let top: Vec<usize> = idx.iter().rev().take(3).cloned().collect();
    let tail_limit = {
        let pts: Vec<(f64, f64)> = top
            .iter()
            .map(|&i| (1.0 / t_grid[i], t_grid[i] * c_values[i]))
            .collect();
        // least-squares line y = y_inf + c s through the three samples
        let n = pts.len() as f64;
        let ms = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = pts.iter().map(|p| (p.0 - ms) * (p.0 - ms)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - ms) * (p.1 - my)).sum();
        if sxx > 0.0 {
            my - (sxy / sxx) * ms
        } else {
            my
        }
    };

    let tol = 1e-8 * data.norm_sq().max(f64::MIN_POSITIVE);
    let nodes_ok = node_values.iter().all(|&v| v <= tol)
        && node_derivatives.iter().all(|&v| v <= tol);
    let tail_ok = model.rho_star <= 0.0 || tail_limit.abs() <= tol;
    let ok = min_c >= -tol && nodes_ok && tail_ok;
    Ok(CapriniCertificate {
        t_grid: t_grid.to_vec(),
        c_values,
        min_c,
        node_values,
        node_derivatives,
        tail_limit,
        tol,
        ok,
    })
}

/// Default certification grid on `[0, t_max]`: linear below 2, geometric
/// above.
pub fn default_t_grid(t_max: f64) -> Vec<f64> {
    let mut g: Vec<f64> = (0..=400).map(|i| 2.0 * i as f64 / 400.0).collect();
    let mut t = 2.0f64;
    while t < t_max {
        t *= 1.02;
        g.push(t.min(t_max));
    }
    g.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    g
}

#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub model: StieltjesRational,
    pub residual: f64,
    pub iterations: usize,
    pub history: Vec<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub max_nodes: usize,
    pub max_iter: usize,
    pub initial_nodes: Vec<f64>,
    /// Optional override of the optimality tolerance scale (defaults to
    /// `1e-8 ||f_exp||^2`).
    pub tol: Option<f64>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { max_nodes: 24, max_iter: 200, initial_nodes: Vec::new(), tol: None }
    }
}

/// Nonnegative least squares by Lawson-Hanson active sets.
fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = a.ncols();
    let mut x = DVector::<f64>::zeros(n);
    let mut passive = vec![false; n];
    let tol = 1e-12 * (a.norm() * b.norm()).max(f64::MIN_POSITIVE);
    for _ in 0..(20 * n.max(4)) {
        let grad = a.transpose() * (b - a * &x);
        let enter = (0..n)
            .filter(|&j| !passive[j] && grad[j] > tol)
            .max_by(|&i, &j| grad[i].total_cmp(&grad[j]));
        let Some(enter) = enter else { break };
        passive[enter] = true;
        for _ in 0..(4 * n.max(4)) {
            let cols: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
            let sub = a.select_columns(cols.iter());
            let z = sub
                .svd(true, true)
                .solve(b, 1e-13)
                .expect("svd solve is infallible with computed factors");
            if z.iter().all(|&v| v > 0.0) {
                x.fill(0.0);
                for (k, &j) in cols.iter().enumerate() {
                    x[j] = z[k];
                }
                break;
            }
            // back off toward the previous iterate until the first passive
            // coefficient hits zero, then retire it
            let mut alpha = f64::INFINITY;
            for (k, &j) in cols.iter().enumerate() {
                if z[k] <= 0.0 && x[j] - z[k] > 0.0 {
                    alpha = alpha.min(x[j] / (x[j] - z[k]));
                }
            }
            let alpha = alpha.min(1.0);
            for (k, &j) in cols.iter().enumerate() {
                x[j] += alpha * (z[k] - x[j]);
            }
            for &j in &cols {
                if x[j] <= 1e-14 {
                    x[j] = 0.0;
                    passive[j] = false;
                }
            }
        }
    }
    x
}

struct DesignCache<'a> {
    data: &'a ExperimentalData,
    h: f64,
    rows: usize,
    rhs: DVector<f64>,
}

impl<'a> DesignCache<'a> {
    fn new(data: &'a ExperimentalData, h: f64) -> Self {
        let m = data.rule.len();
        let mut rhs = DVector::zeros(2 * m);
        for (i, (&w, v)) in data.rule.weights.iter().zip(&data.resampled).enumerate() {
            let sw = w.sqrt();
            rhs[i] = sw * v.re;
            rhs[m + i] = sw * v.im;
        }
        Self { data, h, rows: 2 * m, rhs }
    }

    fn column(&self, node: Option<f64>) -> DVector<f64> {
        let m = self.data.rule.len();
        let mut col = DVector::zeros(self.rows);
        for (i, (&x, &w)) in self
            .data
            .rule
            .nodes
            .iter()
            .zip(&self.data.rule.weights)
            .enumerate()
        {
            let sw = w.sqrt();
            let v = match node {
                None => C64::from(1.0),
                Some(t) => {
                    let z = C64::new(x, self.h);
                    1.0 / (C64::from(t) - z * z)
                }
            };
            col[i] = sw * v.re;
            col[m + i] = sw * v.im;
        }
        col
    }

    /// Weight update: nonnegative least squares over `(rho_star, sigma_j)`.
    fn solve_weights(&self, nodes: &[f64]) -> (f64, Vec<f64>) {
        let m = nodes.len();
        let mut a = DMatrix::zeros(self.rows, m + 1);
        a.set_column(0, &self.column(None));
        for (k, &t) in nodes.iter().enumerate() {
            a.set_column(k + 1, &self.column(Some(t)));
        }
        let x = nnls(&a, &self.rhs);
        (x[0], (0..m).map(|k| x[k + 1]).collect())
    }
}

/// Fit a rational Stieltjes model to band data by the certified exchange
/// scheme.
pub fn fit_stieltjes(data: &ExperimentalData, h: f64, opts: &FitOptions) -> Result<FitResult> {
    if !(h > 0.0) {
        return Err(Error::Param("h must be positive".into()));
    }
    let scale = data.norm_sq();
    if scale <= 1e-300 {
        return Err(Error::DegenerateData);
    }
    let tol = opts.tol.unwrap_or(1e-8 * scale);
    let design = DesignCache::new(data, h);

    let mut nodes: Vec<f64> = opts.initial_nodes.clone();
    nodes.retain(|&t| t >= 0.0);
    nodes.sort_by(f64::total_cmp);
    nodes.dedup_by(|a, b| (*a - *b).abs() <= 1e-10 * (1.0 + b.abs()));

    let solve_model = |nodes: &[f64]| -> StieltjesRational {
        let (rho, sigma) = design.solve_weights(nodes);
        let mut kept_nodes = Vec::new();
        let mut kept_masses = Vec::new();
        for (&t, &s) in nodes.iter().zip(&sigma) {
            if s > 1e-13 * scale.sqrt().max(1.0) {
                kept_nodes.push(t);
                kept_masses.push(s);
            }
        }
        StieltjesRational { rho_star: rho.max(0.0), h, nodes: kept_nodes, masses: kept_masses }
    };

    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut model = solve_model(&nodes);

    // variable-projection residual: weights re-solved for a trial support
    let projected = |support: &[f64]| -> f64 {
        let mut s = support.to_vec();
        s.sort_by(f64::total_cmp);
        s.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
        residual_norm_sq(&solve_model(&s), data)
    };

    for iter in 0..opts.max_iter {
        iterations = iter + 1;

        // (a) descend to stationarity at fixed support size: cyclic descent
        // over node positions with the weights projected out, plus explicit
        // merge attempts for neighboring nodes
        for _round in 0..60 {
            if model.nodes.is_empty() {
                break;
            }
            let before = residual_norm_sq(&model, data);

            let mut support = model.nodes.clone();
            for k in 0..support.len() {
                let t = support[k];
                let lo = if k == 0 { 0.0 } else { support[k - 1] };
                let hi = if k + 1 == support.len() { t * 2.0 + 1.0 } else { support[k + 1] };
                let obj = |tt: f64| {
                    let mut s = support.clone();
                    s[k] = tt;
                    projected(&s)
                };
                let (t_new, f_new) = golden_min(obj, lo, hi, 1e-13 * (1.0 + t), 70);
                if f_new < projected(&support) {
                    support[k] = t_new;
                }
            }

            // merge attempts: replace an adjacent pair by one optimally
            // placed node whenever that does not hurt the residual
            let mut k = 0;
            while k + 1 < support.len() {
                let lo = if k == 0 { 0.0 } else { support[k - 1] };
                let hi = if k + 2 == support.len() {
                    support[k + 1] * 2.0 + 1.0
                } else {
                    support[k + 2]
                };
                let mut reduced = support.clone();
                reduced.remove(k + 1);
                let obj = |tt: f64| {
                    let mut s = reduced.clone();
                    s[k] = tt;
                    projected(&s)
                };
                let (t_new, f_new) = golden_min(obj, lo, hi, 1e-13, 70);
                if f_new <= projected(&support) * (1.0 + 1e-14) {
                    reduced[k] = t_new;
                    support = reduced;
                } else {
                    k += 1;
                }
            }

            let mut merged: Vec<f64> = Vec::with_capacity(support.len());
            for &t in &support {
                match merged.last() {
                    Some(&prev) if t - prev <= 1e-9 * (1.0 + t) => {}
                    _ => merged.push(t),
                }
            }
            let candidate = solve_model(&merged);
            let after = residual_norm_sq(&candidate, data);
            if after <= before * (1.0 + 1e-14) {
                model = candidate;
            }
            if after >= before * (1.0 - 1e-13) {
                break;
            }
        }
        history.push(residual_norm_sq(&model, data).sqrt());

        // (b) exchange step: insert a node at the most negative Caprini value
        let t_max = 10.0 * (1.0 + model.nodes.iter().cloned().fold(1.0f64, f64::max));
        let mv = model_on_rule(&model, &data.rule);
        let c = |t: f64| caprini_from_residual(&data.rule, &mv, &data.resampled, h, t);
        let grid = default_t_grid(t_max);
        let mut best = (0.0f64, f64::INFINITY);
        for &t in &grid {
            let v = c(t);
            if v < best.1 {
                best = (t, v);
            }
        }
        let span = 0.02 * (1.0 + best.0);
        let (t_star, c_star) = golden_min(&c, (best.0 - span).max(0.0), best.0 + span, 1e-13, 160);
        let (t_star, c_star) = if c_star < best.1 { (t_star, c_star) } else { best };

        if c_star >= -tol {
            // certificate-stationary; stop once the descent has also stalled
            let n = history.len();
            let stalled = n >= 2 && history[n - 1] >= history[n - 2] * (1.0 - 1e-10);
            if stalled || model.nodes.is_empty() {
                converged = true;
                break;
            }
            continue;
        }
        if model.nodes.len() >= opts.max_nodes {
            break;
        }
        nodes = model.nodes.clone();
        let pos = nodes.partition_point(|&t| t < t_star);
        let sep = 1e-9 * (1.0 + t_star);
        let clash = (pos > 0 && (nodes[pos - 1] - t_star).abs() < sep)
            || (pos < nodes.len() && (nodes[pos] - t_star).abs() < sep);
        if clash {
            // the violation sits on an existing node at weight-update
            // stationarity; nothing further to exchange
            converged = true;
            break;
        }
        nodes.insert(pos, t_star);
        model = solve_model(&nodes);
    }

    let residual = residual_norm_sq(&model, data).sqrt();
    Ok(FitResult { model, residual, iterations, history, converged })
}

/// Both sides of the exact variation identity for an atomic competitor.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct VariationCheck {
    pub lhs: f64,
    pub rhs: f64,
}

pub fn variation_identity_check(
    model: &StieltjesRational,
    competitor: &StieltjesRational,
    data: &ExperimentalData,
) -> Result<VariationCheck> {
    if (model.h - competitor.h).abs() > 1e-15 {
        return Err(Error::Param("models must share the half-plane shift".into()));
    }
    let lhs = residual_norm_sq(competitor, data) - residual_norm_sq(model, data);

    // union of supports carries the atomic difference measure
    let mut union: Vec<f64> = model.nodes.iter().chain(&competitor.nodes).cloned().collect();
    union.sort_by(f64::total_cmp);
    union.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
    let mass_at = |m: &StieltjesRational, t: f64| -> f64 {
        m.nodes
            .iter()
            .zip(&m.masses)
            .find(|(&tt, _)| (tt - t).abs() <= 1e-12 * (1.0 + t.abs()))
            .map(|(_, &s)| s)
            .unwrap_or(0.0)
    };

    let mv = model_on_rule(model, &data.rule);
    let tail = tail_charge(&data.rule, &mv, &data.resampled);
    let delta_rho = competitor.rho_star - model.rho_star;

    let mut measure_term = 0.0;
    for &t in &union {
        let dnu = mass_at(competitor, t) - mass_at(model, t);
        if dnu != 0.0 {
            measure_term += caprini_from_residual(&data.rule, &mv, &data.resampled, model.h, t) * dnu;
        }
    }

    // || competitor - model ||^2 over the band
    let phi_sq: f64 = {
        let cv = model_on_rule(competitor, &data.rule);
        data.rule
            .weights
            .iter()
            .zip(cv.iter().zip(&mv))
            .map(|(&w, (c, m))| w * (c - m).norm_sqr())
            .sum()
    };

    Ok(VariationCheck { lhs, rhs: delta_rho * tail + measure_term + phi_sq })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn planted() -> StieltjesRational {
        StieltjesRational::new(0.0, 0.8, vec![0.7, 3.5], vec![1.2, 0.6]).unwrap()
    }

    fn band_grid() -> Vec<f64> {
        default_band_rule().nodes
    }

    #[test]
    fn synthesize_is_deterministic_and_unbiased() {
        let truth = planted();
        let g = band_grid();
        let a = synthesize_data(&truth, &g, 1e-3, 42).unwrap();
        let b = synthesize_data(&truth, &g, 1e-3, 42).unwrap();
        assert_eq!(a.values, b.values);
        let c = synthesize_data(&truth, &g, 0.0, 7).unwrap();
        for (&x, v) in g.iter().zip(&c.values) {
            let clean = truth.eval(C64::from(x)).unwrap();
            assert_eq!(*v, clean);
        }
        // empirical noise scale within 10% over >= 1e3 samples
        let fine: Vec<f64> = (0..2000).map(|i| (i as f64 + 0.5) / 2000.0).collect();
        let noisy = synthesize_data(&truth, &fine, 1e-2, 3).unwrap();
        let mean_sq: f64 = fine
            .iter()
            .zip(&noisy.values)
            .map(|(&x, v)| (v - truth.eval(C64::from(x)).unwrap()).norm_sqr())
            .sum::<f64>()
            / fine.len() as f64;
        let emp = mean_sq.sqrt();
        assert!((emp - 1e-2).abs() <= 1e-3, "empirical std {emp}");
    }

    #[test]
    fn caprini_vanishes_for_exact_interpolant() {
        let truth = planted();
        let data = synthesize_data(&truth, &band_grid(), 0.0, 0).unwrap();
        for t in [0.0, 0.4, 1.0, 3.5, 20.0] {
            assert_abs_diff_eq!(caprini_function(&truth, &data, t), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn caprini_tail_and_derivative() {
        let truth = planted();
        let data = synthesize_data(&truth, &band_grid(), 0.0, 0).unwrap();
        // perturbed model leaves a residual
        let model = StieltjesRational::new(0.1, 0.8, vec![0.7, 3.5], vec![1.0, 0.6]).unwrap();
        let mv = model_on_rule(&model, &data.rule);
        let want = tail_charge(&data.rule, &mv, &data.resampled);
        for t in [1e4, 1e5] {
            let tc = t * caprini_function(&model, &data, t);
            assert!((tc - want).abs() <= 2e-3 * want.abs().max(1e-12), "tC = {tc} vs {want}");
        }
        // derivative quadrature matches central differences
        for t in [0.3, 1.7, 6.0] {
            let dt = 1e-5 * (1.0 + t);
            let fd = (caprini_function(&model, &data, t + dt)
                - caprini_function(&model, &data, t - dt))
                / (2.0 * dt);
            let an = caprini_derivative(&model, &data, t);
            assert_abs_diff_eq!(fd, an, epsilon = 1e-8 * an.abs().max(1.0));
        }
    }

    #[test]
    fn planted_model_is_recovered() {
        let truth = planted();
        let data = synthesize_data(&truth, &band_grid(), 0.0, 0).unwrap();
        let fit = fit_stieltjes(&data, truth.h, &FitOptions::default()).unwrap();
        assert!(fit.converged, "fit did not converge: residual {}", fit.residual);
        assert!(fit.residual <= 1e-10, "residual {}", fit.residual);
        assert_eq!(fit.model.nodes.len(), 2, "nodes: {:?}", fit.model.nodes);
        for (got, want) in fit.model.nodes.iter().zip(&truth.nodes) {
            assert!(
                (got - want).abs() <= 1e-4 * want,
                "node {got} vs {want}"
            );
        }
        let cert = certify(&fit.model, &data, &default_t_grid(40.0)).unwrap();
        assert!(cert.ok, "certificate failed: min_c = {}", cert.min_c);
        // residual history is nonincreasing
        assert!(fit.history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    }

    #[test]
    fn noisy_fit_is_certified_and_perturbation_fails() {
        let truth = planted();
        let sigma = 1e-3;
        let data = synthesize_data(&truth, &band_grid(), sigma, 11).unwrap();
        let fit = fit_stieltjes(&data, truth.h, &FitOptions::default()).unwrap();
        assert!(fit.converged);
        // the truth itself is feasible, so the fit can do no worse than the
        // noise scale
        assert!(fit.residual <= 1.5 * sigma, "residual {} vs noise {sigma}", fit.residual);
        let t_grid = default_t_grid(10.0 * fit.model.nodes.iter().cloned().fold(1.0, f64::max));
        let cert = certify(&fit.model, &data, &t_grid).unwrap();
        assert!(cert.ok);

        // doubling one mass must break the certificate
        if !fit.model.nodes.is_empty() {
            let mut bad = fit.model.clone();
            bad.masses[0] *= 2.0;
            let cert = certify(&bad, &data, &t_grid).unwrap();
            assert!(!cert.ok);
        }
    }

    #[test]
    fn constant_data_yields_constant_model() {
        let rho = 0.8;
        let truth = StieltjesRational::new(rho, 0.5, vec![], vec![]).unwrap();
        let data = synthesize_data(&truth, &band_grid(), 0.0, 0).unwrap();
        let fit = fit_stieltjes(&data, 0.5, &FitOptions::default()).unwrap();
        assert!(fit.converged);
        assert!(fit.model.nodes.is_empty(), "nodes: {:?}", fit.model.nodes);
        assert_abs_diff_eq!(fit.model.rho_star, rho, epsilon = 1e-8);
    }

    #[test]
    fn degenerate_data_is_rejected() {
        let g = band_grid();
        let zeros = vec![C64::new(0.0, 0.0); g.len()];
        let data = ExperimentalData::new(g, zeros, None).unwrap();
        assert!(matches!(
            fit_stieltjes(&data, 1.0, &FitOptions::default()),
            Err(Error::DegenerateData)
        ));
    }

    #[test]
    fn fits_from_different_starts_agree() {
        let truth = planted();
        let data = synthesize_data(&truth, &band_grid(), 1e-4, 5).unwrap();
        let a = fit_stieltjes(&data, truth.h, &FitOptions::default()).unwrap();
        let b = fit_stieltjes(
            &data,
            truth.h,
            &FitOptions { initial_nodes: vec![0.1, 1.0, 5.0, 12.0], ..Default::default() },
        )
        .unwrap();
        assert!((a.residual - b.residual).abs() <= 1e-8);
        for i in 0..=20 {
            let w = C64::from(i as f64 / 20.0);
            let va = a.model.eval(w).unwrap();
            let vb = b.model.eval(w).unwrap();
            assert!((va - vb).norm() <= 1e-6, "models differ at {w}: {va} vs {vb}");
        }
    }

    #[test]
    fn fitted_models_stabilize_as_noise_vanishes() {
        let truth = planted();
        let mut devs = Vec::new();
        for &sigma in &[1e-2, 1e-3, 1e-4] {
            let data = synthesize_data(&truth, &band_grid(), sigma, 17).unwrap();
            let fit = fit_stieltjes(&data, truth.h, &FitOptions::default()).unwrap();
            // uniform deviation on a compact subset of the analyticity domain
            let dev = (0..=30)
                .map(|i| {
                    let w = C64::new(3.0 * i as f64 / 30.0, 0.4);
                    (fit.model.eval(w).unwrap() - truth.eval(w).unwrap()).norm()
                })
                .fold(0.0, f64::max);
            devs.push(dev);
        }
        assert!(devs[0] > devs[1] && devs[1] > devs[2], "deviations {devs:?}");
    }

    #[test]
    fn variation_identity_is_exact() {
        let truth = planted();
        let data = synthesize_data(&truth, &band_grid(), 1e-3, 23).unwrap();
        let fit = fit_stieltjes(&data, truth.h, &FitOptions::default()).unwrap();
        let model = fit.model.clone();

        // competitor = model: both sides vanish
        let chk = variation_identity_check(&model, &model, &data).unwrap();
        assert_abs_diff_eq!(chk.lhs, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(chk.rhs, 0.0, epsilon = 1e-15);

        // a new small mass on a non-optimal base: the change is
        // delta C(t0) + delta^2 ||phi_0||^2 exactly
        let base = truth.clone(); // non-optimal against the noisy data
        let t0 = 2.2;
        let delta = 1e-6;
        let mut nodes = base.nodes.clone();
        let mut masses = base.masses.clone();
        let pos = nodes.partition_point(|&t| t < t0);
        nodes.insert(pos, t0);
        masses.insert(pos, delta);
        let comp = StieltjesRational::new(base.rho_star, base.h, nodes, masses).unwrap();
        let chk = variation_identity_check(&base, &comp, &data).unwrap();
        assert!(
            (chk.lhs - chk.rhs).abs() <= 1e-10 * (1.0 + chk.lhs.abs()),
            "identity broke: {} vs {}",
            chk.lhs,
            chk.rhs
        );
        let c_t0 = caprini_function(&base, &data, t0);
        let phi0_sq: f64 = data
            .rule
            .nodes
            .iter()
            .zip(&data.rule.weights)
            .map(|(&x, &w)| {
                let z = C64::new(x, base.h);
                w * (C64::from(t0) - z * z).norm_sqr().recip()
            })
            .sum();
        assert!(
            (chk.lhs - delta * c_t0).abs() <= 1.001 * delta * delta * phi0_sq,
            "first-order term off: {} vs {}",
            chk.lhs,
            delta * c_t0
        );

        // engage the tail term with a constant shift
        let comp =
            StieltjesRational::new(model.rho_star + 0.3, model.h, model.nodes.clone(), model.masses.clone())
                .unwrap();
        let chk = variation_identity_check(&model, &comp, &data).unwrap();
        assert!(
            (chk.lhs - chk.rhs).abs() <= 1e-10 * (1.0 + chk.lhs.abs()),
            "tail identity broke: {} vs {}",
            chk.lhs,
            chk.rhs
        );
    }

    #[test]
    fn resampling_matches_direct_sampling() {
        let truth = planted();
        // dense uniform grid, cubic resample onto the rule
        let fine: Vec<f64> = (0..=800).map(|i| i as f64 / 800.0).collect();
        let data = synthesize_data(&truth, &fine, 0.0, 0).unwrap();
        let direct = synthesize_data(&truth, &band_grid(), 0.0, 0).unwrap();
        let defect = data
            .resampled
            .iter()
            .zip(&direct.resampled)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(defect <= 1e-9, "resampling defect {defect}");
    }
}
