//! Acceptance suite: every release gate runs here at its stated tolerance
//! and prints one pass line (run with `--nocapture` to see them).

use num_complex::Complex64 as C64;
use permex_core::cache::operator_with_eigen;
use permex_core::conformal::{gamma1_annulus, riemann_invariant};
use permex_core::exponent::{gamma_from_eigen, gamma_from_sweep, gamma_integral_identity, series_phi, series_psi, GammaEstimate};
use permex_core::fit::{
    certify, default_band_rule, default_t_grid, fit_stieltjes,
    synthesize_data, variation_identity_check, FitOptions,
};
use permex_core::fredholm::{bound_d0, bound_d_symmetric, check_exponential_formula, worst_case_pair};
use permex_core::operator::{decay_rate, linear_fit, reproducing_element, EIGEN_FLOOR};
use permex_core::quad::gauss_legendre;
use permex_core::{ProblemParams, StieltjesRational};

const N_NODES: usize = 200;

fn params(h: f64, omega0: f64, eps: f64) -> ProblemParams {
    ProblemParams::new(h, omega0, eps, N_NODES).unwrap()
}

fn eps_window(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let n = (decades * per_decade as f64).round() as usize;
    (0..=n)
        .map(|i| lo * 10f64.powf(decades * i as f64 / n as f64))
        .collect()
}

fn sweep_at(h: f64, omega0: f64) -> GammaEstimate {
    let template = params(h, omega0, 1e-2);
    gamma_from_sweep(&template, &eps_window(1e-4, 1e-1, 6)).unwrap()
}

#[test]
fn acceptance_01_kkt_identities_on_grid() {
    let start = std::time::Instant::now();
    let mut worst_kkt = 0.0f64;
    let mut worst_act = 0.0f64;
    for &h in &[0.5, 1.0, 2.0] {
        for &omega0 in &[1.5, 2.0, 4.0] {
            for &eps in &[1e-2, 1e-3, 1e-4] {
                let r = bound_d0(&params(h, omega0, eps)).unwrap();
                let eta = r.eta.expect("constraint active on the grid");
                let kkt = ((r.value_at_omega0 - (eps * eps + eta) * r.norm_h2 * r.norm_h2)
                    / r.value_at_omega0)
                    .abs();
                let act = ((r.norm_l2 - eps * r.norm_h2) / r.norm_l2).abs();
                worst_kkt = worst_kkt.max(kkt);
                worst_act = worst_act.max(act);
            }
        }
    }
    let elapsed = start.elapsed();
    assert!(worst_kkt <= 1e-8, "KKT identity defect {worst_kkt:.3e}");
    assert!(worst_act <= 1e-8, "constraint activity defect {worst_act:.3e}");
    assert!(elapsed.as_secs_f64() < 10.0, "criterion 1 took {elapsed:?}");
    println!(
        "criterion 01 (KKT identities, 27-point grid): PASS — defects {worst_kkt:.2e}/{worst_act:.2e} in {elapsed:.2?}"
    );
}

#[test]
fn acceptance_02_power_law_regression() {
    let window = eps_window(1e-4, 1e-1, 6);
    let mut ln_eps = Vec::new();
    let mut ln_d = Vec::new();
    for &eps in &window {
        let r = bound_d0(&params(1.0, 2.0, eps)).unwrap();
        ln_eps.push(eps.ln());
        ln_d.push(r.d.ln());
    }
    let (gamma, _, r2) = linear_fit(&ln_eps, &ln_d);
    assert!(r2 > 0.99, "R^2 = {r2}");
    assert!(gamma > 0.0 && gamma < 1.0, "gamma = {gamma}");
    println!("criterion 02 (power law at h=1, omega0=2): PASS — gamma {gamma:.4}, R^2 {r2:.5}");
}

#[test]
fn acceptance_03_symmetry_sandwich_and_exponent() {
    // sandwich on the criterion-1 grid
    let mut worst_lo = f64::INFINITY;
    let mut worst_hi = 0.0f64;
    for &h in &[0.5, 1.0, 2.0] {
        for &omega0 in &[1.5, 2.0, 4.0] {
            for &eps in &[1e-2, 1e-3, 1e-4] {
                let sb = bound_d_symmetric(&params(h, omega0, eps), 32).unwrap();
                let ratio = sb.d_sym / sb.d0;
                worst_lo = worst_lo.min(ratio);
                worst_hi = worst_hi.max(ratio);
                assert!(
                    ratio >= 0.5 - 1e-9 && ratio <= 1.0 + 1e-9,
                    "sandwich broke at h={h}, omega0={omega0}, eps={eps}: {ratio}"
                );
            }
        }
    }
    // exponent equality at h=1, omega0=2
    let window = eps_window(1e-4, 1e-1, 6);
    let mut ln_eps = Vec::new();
    let mut ln_d0 = Vec::new();
    let mut ln_sym = Vec::new();
    for &eps in &window {
        let sb = bound_d_symmetric(&params(1.0, 2.0, eps), 32).unwrap();
        ln_eps.push(eps.ln());
        ln_d0.push(sb.d0.ln());
        ln_sym.push(sb.d_sym.ln());
    }
    let (g0, _, _) = linear_fit(&ln_eps, &ln_d0);
    let (gs, _, _) = linear_fit(&ln_eps, &ln_sym);
    assert!((g0 - gs).abs() <= 0.02, "exponents differ: {g0} vs {gs}");
    println!(
        "criterion 03 (symmetry sandwich + exponent equality): PASS — D_sym/D0 in [{worst_lo:.3}, {worst_hi:.3}], slopes {g0:.4}/{gs:.4}"
    );
}

#[test]
fn acceptance_04_spectral_conformal_cross_check() {
    for &h in &[0.5, 1.0, 2.0] {
        let annulus = riemann_invariant(h, 256).unwrap();
        let ent = operator_with_eigen(h, N_NODES).unwrap();
        let rate = decay_rate(&ent.eigs, EIGEN_FLOOR).unwrap();
        let ln_rho = annulus.rho.ln();
        assert!(
            (ln_rho - rate.alpha).abs() <= 0.02 * rate.alpha,
            "h={h}: ln rho {ln_rho:.5} vs alpha {:.5}",
            rate.alpha
        );
        assert!(rate.r2 > 0.999, "h={h}: eigen fit R^2 = {}", rate.r2);
        println!(
            "criterion 04 (spectral/conformal, h={h}): PASS — ln rho {ln_rho:.5}, alpha {:.5}, R^2 {:.5}",
            rate.alpha, rate.r2
        );
    }
}

#[test]
fn acceptance_05_exponent_concordance() {
    let sweep = sweep_at(1.0, 2.0);
    let (_, eig) = gamma_from_eigen(1.0, 2.0, N_NODES).unwrap();
    assert!(
        (sweep.gamma - eig.gamma).abs() <= 0.03,
        "sweep {} vs eigen {}",
        sweep.gamma,
        eig.gamma
    );
    for &h in &[0.6, 1.0, 2.0] {
        let annulus = riemann_invariant(h, 256).unwrap();
        let g1 = gamma1_annulus(2.0, &annulus).unwrap();
        let sweep_h = sweep_at(h, 2.0);
        let best = if (g1.printed - sweep_h.gamma).abs() <= (g1.doubled - sweep_h.gamma).abs() {
            g1.printed
        } else {
            g1.doubled
        };
        assert!(
            (best - sweep_h.gamma).abs() <= 0.10 * sweep_h.gamma,
            "h={h}: annulus {best} vs measured {}",
            sweep_h.gamma
        );
        println!(
            "criterion 05 (concordance, h={h}): PASS — sweep {:.4}, annulus best {best:.4}",
            sweep_h.gamma
        );
    }
}

#[test]
fn acceptance_06_appendix_bounds_bracket_gamma() {
    use permex_core::conformal::appendix_bounds;
    for &h in &[0.5, 1.0, 2.0] {
        for &omega0 in &[1.5, 2.0, 4.0] {
            let b = appendix_bounds(omega0, h).unwrap();
            let gamma = sweep_at(h, omega0).gamma;
            assert!(
                gamma >= b.gamma0 && gamma <= b.gamma1_lower_route,
                "h={h}, omega0={omega0}: gamma {gamma:.4} outside [{:.4}, {:.4}]",
                b.gamma0,
                b.gamma1_lower_route
            );
        }
    }
    let gs: Vec<f64> = [0.05, 0.1, 0.2]
        .iter()
        .map(|&h| appendix_bounds(2.0, h).unwrap().gamma1_lower_route)
        .collect();
    assert!(gs[0] < gs[1] && gs[1] < gs[2], "{gs:?} not decreasing toward 0");
    println!(
        "criterion 06 (closed-form bounds bracket gamma): PASS — gamma1-lower at small h: {gs:?}"
    );
}

#[test]
fn acceptance_07_integral_identity_grid() {
    let mut worst = 0.0f64;
    // alpha grid times beta fractions, pinned to include (4, 1.75)
    for &alpha in &[1.0, 2.0, 3.0, 4.0, 5.0] {
        for &frac in &[0.1, 0.3, 0.5, 0.7, 0.875] {
            let beta = 0.5 * alpha * frac;
            let val = gamma_integral_identity(alpha, beta).unwrap();
            worst = worst.max((val - 2.0 * beta / alpha).abs());
        }
    }
    assert!(worst <= 1e-3, "identity defect {worst:.3e}");
    let v = gamma_integral_identity(4.0, 1.75).unwrap();
    assert!((v - 0.875).abs() <= 1e-3);
    println!("criterion 07 (lattice integral identity, 5x5 grid): PASS — max defect {worst:.2e}");
}

#[test]
fn acceptance_08_series_lemma() {
    let (a, b) = (C64::from(0.5), 0.25f64);
    // fitted exponent along eta = b^j
    let mut ln_eta = Vec::new();
    let mut ln_phi = Vec::new();
    for j in 10..=30 {
        let eta = b.powi(j);
        ln_eta.push(eta.ln());
        ln_phi.push(series_phi(a, b, eta).unwrap().norm().ln());
    }
    let (slope, _, _) = linear_fit(&ln_eta, &ln_phi);
    assert!((-slope - 0.5).abs() <= 1e-3, "fitted exponent {}", -slope);

    // periodic profile after 20 terms
    let profile = |j: i32, t: f64| {
        let eta = b.powf(j as f64 + t);
        series_phi(a, b, eta).unwrap().norm() * eta.powf(0.5)
    };
    let mut drift = 0.0f64;
    let mut scale = 0.0f64;
    for i in 0..16 {
        let t = i as f64 / 16.0;
        let p0 = profile(20, t);
        let p1 = profile(21, t);
        drift = drift.max((p0 - p1).abs());
        scale = scale.max(p0);
    }
    assert!(drift / scale <= 1e-3, "profile drift {}", drift / scale);

    // companion value at the origin
    let psi0 = series_psi(a, b, 0.0).unwrap();
    assert!((psi0 - C64::from(b / (0.5 - b))).norm() <= 1e-12);
    println!(
        "criterion 08 (series lemma): PASS — exponent {:.6}, drift {:.2e}, psi(0) = {:.12}",
        -slope,
        drift / scale,
        psi0.re
    );
}

#[test]
fn acceptance_09_exact_formula_consistency() {
    let template = params(1.0, 2.0, 1e-2);
    let grid = eps_window(1e-3, 1e-1, 16);
    let chk = check_exponential_formula(&template, &grid).unwrap();
    assert!(chk.ratio_drift <= 1e-2, "drift {:.3e}", chk.ratio_drift);
    println!(
        "criterion 09 (closed-form representation drift): PASS — {:.2e} over [1e-3, 1e-1]",
        chk.ratio_drift
    );
}

#[test]
fn acceptance_10_fit_and_certificate() {
    let start = std::time::Instant::now();
    let truth = StieltjesRational::new(0.0, 0.8, vec![0.7, 3.5], vec![1.2, 0.6]).unwrap();
    let grid = default_band_rule().nodes;

    // noise-free planted recovery
    let clean = synthesize_data(&truth, &grid, 0.0, 0).unwrap();
    let fit = fit_stieltjes(&clean, truth.h, &FitOptions::default()).unwrap();
    let clean_residual = fit.residual;
    assert!(clean_residual <= 1e-10, "clean residual {clean_residual}");
    assert_eq!(fit.model.nodes.len(), 2);
    for (got, want) in fit.model.nodes.iter().zip(&truth.nodes) {
        assert!((got - want).abs() <= 1e-4 * want, "node {got} vs {want}");
    }
    let cert = certify(&fit.model, &clean, &default_t_grid(40.0)).unwrap();
    assert!(cert.ok);

    // noisy data: residual within 1.5x the noise scale and certified
    let sigma = 1e-3;
    let noisy = synthesize_data(&truth, &grid, sigma, 11).unwrap();
    let fit = fit_stieltjes(&noisy, truth.h, &FitOptions::default()).unwrap();
    assert!(fit.residual <= 1.5 * sigma, "noisy residual {}", fit.residual);
    let t_grid = default_t_grid(10.0 * fit.model.nodes.iter().cloned().fold(1.0, f64::max));
    let cert = certify(&fit.model, &noisy, &t_grid).unwrap();
    assert!(cert.ok, "noisy certificate failed: min_c {}", cert.min_c);

    // a deliberately perturbed model must fail certification
    let mut bad = fit.model.clone();
    bad.masses[0] *= 2.0;
    let cert_bad = certify(&bad, &noisy, &t_grid).unwrap();
    assert!(!cert_bad.ok);

    // variation identity on an atomic competitor
    let mut nodes = fit.model.nodes.clone();
    let mut masses = fit.model.masses.clone();
    nodes.push(nodes.last().unwrap() * 2.0 + 1.0);
    masses.push(0.05);
    let comp = StieltjesRational::new(fit.model.rho_star + 0.1, truth.h, nodes, masses).unwrap();
    let chk = variation_identity_check(&fit.model, &comp, &noisy).unwrap();
    assert!(
        (chk.lhs - chk.rhs).abs() <= 1e-10 * (1.0 + chk.lhs.abs()),
        "variation identity {} vs {}",
        chk.lhs,
        chk.rhs
    );

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "criterion 10 took {elapsed:?}");
    println!(
        "criterion 10 (fit + certificate): PASS — clean residual {clean_residual:.1e}, noisy {:.3e}, identity gap {:.1e}, {elapsed:.2?}",
        fit.residual,
        (chk.lhs - chk.rhs).abs()
    );
}

#[test]
fn acceptance_11_ill_posedness_pair() {
    let p = params(0.3, 2.0, 1e-3);
    let pair = worst_case_pair(&p).unwrap();
    assert!(
        pair.band_mismatch <= p.eps * pair.dual_norm_scale * (1.0 + 1e-8),
        "mismatch {} vs budget {}",
        pair.band_mismatch,
        p.eps * pair.dual_norm_scale
    );
    assert!(
        pair.achieved_ratio >= 0.25,
        "separation ratio {} below 1/4",
        pair.achieved_ratio
    );
    println!(
        "criterion 11 (ill-posedness witness at h=0.3): PASS — mismatch/scale {:.2e}, separation/(D*scale) {:.3}",
        pair.band_mismatch / pair.dual_norm_scale,
        pair.achieved_ratio
    );
}

#[test]
fn acceptance_12_reproducing_kernel_line_integral() {
    let h = 0.8;
    let omega0 = 2.0;
    // independent oracle: the Hardy inner product as a boundary line
    // integral, evaluated by substitution x = tan(theta)
    let rule = gauss_legendre(800, -std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2)
        .unwrap();
    let line_inner = |f: &dyn Fn(C64) -> C64| -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (&th, &w) in rule.nodes.iter().zip(&rule.weights) {
            let x = th.tan();
            let sec2 = 1.0 / (th.cos() * th.cos());
            let z = C64::new(x, -h);
            let p = reproducing_element(C64::from(omega0), z, h);
            acc += f(z) * p.conj() * w * sec2;
        }
        acc
    };
    let tests: Vec<(Box<dyn Fn(C64) -> C64>, &str)> = vec![
        (Box::new(move |w: C64| 1.0 / (w + C64::new(0.0, h + 2.0))), "simple pole"),
        (
            Box::new(move |w: C64| {
                let d = w + C64::new(0.0, h + 1.0);
                1.0 / (d * d)
            }),
            "double pole",
        ),
        (
            Box::new(move |w: C64| {
                1.0 / ((w + C64::new(0.0, h + 0.5)) * (w + C64::new(0.0, h + 3.0)))
            }),
            "two poles",
        ),
    ];
    for (f, name) in &tests {
        let lhs = line_inner(f);
        let rhs = f(C64::from(omega0));
        assert!(
            (lhs - rhs).norm() <= 1e-8 * rhs.norm(),
            "{name}: line integral {lhs} vs value {rhs}"
        );
    }
    println!("criterion 12 (reproducing property, 3 test functions): PASS");
}
