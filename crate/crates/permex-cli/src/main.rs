//! `permex`: worst-case extrapolation bounds, power-law exponents, conformal
//! modulus data, and certified Stieltjes fits from the command line.
//!
//! Exit codes: 0 success, 2 usage error, 3 numeric/range error,
//! 4 certification failed.

mod opcache;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64 as C64;
use serde::Serialize;

use permex_core::conformal::{appendix_bounds, gamma1_annulus, riemann_invariant};
use permex_core::exponent::{gamma_from_eigen, gamma_from_sweep};
use permex_core::fit::{certify, default_t_grid, fit_stieltjes, ExperimentalData, FitOptions};
use permex_core::fredholm::{bound_d_symmetric, worst_case_pair, BandProblem};
use permex_core::operator::decay_rate;
use permex_core::{Error, ProblemParams, StieltjesRational};

use output::{emit_json, CsvOut};

#[derive(Parser)]
#[command(name = "permex", version, about = "Extrapolation bounds and certified fits for Stieltjes permittivity models", max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Serialize, Clone)]
struct ProblemArgs {
    /// Half-plane shift (inverse relaxation time)
    #[arg(long)]
    h: f64,
    /// Extrapolation point, beyond the rescaled band (> 1)
    #[arg(long)]
    omega0: f64,
    /// Quadrature order of the band discretization
    #[arg(long, default_value_t = 200)]
    nodes: usize,
}

#[derive(Args, Serialize, Clone)]
struct SweepArgs {
    #[arg(long, default_value_t = 1e-4)]
    eps_min: f64,
    #[arg(long, default_value_t = 1e-1)]
    eps_max: f64,
    #[arg(long, default_value_t = 6)]
    per_decade: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Worst-case bound D at one parameter point (JSON)
    Bound {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Band mismatch level in (0, 1)
        #[arg(long)]
        eps: f64,
        /// Also maximize over phases with the symmetry constraint
        #[arg(long)]
        symmetric: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mismatch sweep: eps, D, eta and norms as CSV
    Sweep {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        sweep: SweepArgs,
        /// Add the symmetric bound column (slower)
        #[arg(long)]
        symmetric: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Power-law exponent estimates (JSON; optional CSV of the sweep)
    Gamma {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        sweep: SweepArgs,
        /// sweep | eigen | annulus | all
        #[arg(long, default_value = "all")]
        method: String,
        /// Write the per-eps sweep table here
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exponent as a function of omega0 for several h (CSV)
    GammaMap {
        /// Comma-separated list of h values, e.g. 0.5,1,2
        #[arg(long, value_delimiter = ',')]
        h: Vec<f64>,
        /// Range of extrapolation points, e.g. 1.1..6
        #[arg(long)]
        omega0: String,
        #[arg(long, default_value_t = 25)]
        steps: usize,
        #[arg(long, default_value_t = 200)]
        nodes: usize,
        /// eigen (fast) or sweep
        #[arg(long, default_value = "eigen")]
        method: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Eigenvalues of the band operator (CSV: n, lambda_n, log10 lambda_n)
    Eig {
        #[arg(long)]
        h: f64,
        #[arg(long, default_value_t = 200)]
        nodes: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Conformal modulus of the two-slit domain (JSON; optional CSV of |Psi|)
    Map {
        #[arg(long)]
        h: f64,
        /// Chebyshev basis size per slit
        #[arg(long, default_value_t = 256)]
        panel: usize,
        /// |Psi| sample line start (points omega0 + ih)
        #[arg(long, default_value_t = 1.05)]
        from: f64,
        #[arg(long, default_value_t = 6.0)]
        to: f64,
        #[arg(long, default_value_t = 100)]
        points: usize,
        /// Write the |Psi| samples here
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed-form power-law bounds (JSON)
    Bounds {
        #[arg(long)]
        h: f64,
        #[arg(long)]
        omega0: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit a rational Stieltjes model to band data (JSON with certificate)
    Fit {
        /// Input CSV with columns omega, re_f, im_f
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        h: f64,
        #[arg(long, default_value_t = 24)]
        max_nodes: usize,
        /// Optimality tolerance override
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Certify a model (JSON) against band data; exits 4 on failure
    Certify {
        /// Model JSON: {"rho_star": .., "h": .., "nodes": [..], "masses": [..]}
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Two admissible models, indistinguishable on the band, split beyond it
    /// (CSV: omega, re_f, im_f, re_g, im_g)
    DemoIllposed {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
        /// Last frequency of the output grid
        #[arg(long, default_value_t = 4.0)]
        wmax: f64,
        #[arg(long, default_value_t = 600)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(RunError::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
        Err(RunError::Io(e)) => {
            eprintln!("io error: {e}");
            ExitCode::from(3)
        }
    }
}

enum RunError {
    Core(Error),
    Io(std::io::Error),
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::Core(e)
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

fn eps_grid(s: &SweepArgs) -> Vec<f64> {
    let decades = (s.eps_max / s.eps_min).log10();
    let n = ((decades * s.per_decade as f64).round() as usize).max(1);
    (0..=n)
        .map(|i| s.eps_min * 10f64.powf(decades * i as f64 / n as f64))
        .collect()
}

fn run(cmd: Command) -> Result<ExitCode, RunError> {
    match cmd {
        Command::Bound { problem, eps, symmetric, out } => {
            let params = ProblemParams::new(problem.h, problem.omega0, eps, problem.nodes)?;
            opcache::operator(problem.h, problem.nodes)?;
            #[derive(Serialize)]
            struct Out {
                bound: permex_core::BoundResult,
                #[serde(skip_serializing_if = "Option::is_none")]
                symmetric: Option<permex_core::fredholm::SymmetricBound>,
            }
            let bound = permex_core::fredholm::bound_d0(&params)?;
            let symmetric = if symmetric {
                Some(bound_d_symmetric(&params, 64)?)
            } else {
                None
            };
            #[derive(Serialize)]
            struct Cfg {
                h: f64,
                omega0: f64,
                eps: f64,
                nodes: usize,
                symmetric: bool,
            }
            let cfg = Cfg {
                h: problem.h,
                omega0: problem.omega0,
                eps,
                nodes: problem.nodes,
                symmetric: symmetric.is_some(),
            };
            emit_json(&out, cfg, None, Out { bound, symmetric })?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Sweep { problem, sweep, symmetric, out } => {
            #[derive(Serialize)]
            struct Cfg<'a> {
                problem: &'a ProblemArgs,
                sweep: &'a SweepArgs,
                symmetric: bool,
            }
            let ent = opcache::operator(problem.h, problem.nodes)?;
            let bp = BandProblem::point(ent, problem.omega0)?;
            let mut columns = vec!["eps", "d", "eta", "norm_l2", "norm_h2"];
            if symmetric {
                columns.push("d_sym");
            }
            let mut csv =
                CsvOut::new(&Cfg { problem: &problem, sweep: &sweep, symmetric }, None, &columns);
            for eps in eps_grid(&sweep) {
                let eta = bp.solve_eta(eps)?;
                let h2 = bp.h2_norm_sq(eta).sqrt();
                let l2 = bp.band_norm_sq(eta).sqrt();
                let d = bp.value(eta) / h2;
                let mut row = vec![eps, d, eta, l2, h2];
                if symmetric {
                    let params =
                        ProblemParams::new(problem.h, problem.omega0, eps, problem.nodes)?;
                    row.push(bound_d_symmetric(&params, 64)?.d_sym);
                }
                csv.row(&row);
            }
            csv.write(&out)?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Gamma { problem, sweep, method, csv, out } => {
            #[derive(Serialize)]
            struct Cfg<'a> {
                problem: &'a ProblemArgs,
                sweep: &'a SweepArgs,
                method: &'a str,
            }
            #[derive(Serialize, Default)]
            struct Out {
                #[serde(skip_serializing_if = "Option::is_none")]
                sweep: Option<permex_core::exponent::GammaEstimate>,
                #[serde(skip_serializing_if = "Option::is_none")]
                eigen: Option<permex_core::exponent::GammaEstimate>,
                #[serde(skip_serializing_if = "Option::is_none")]
                eigen_fit: Option<permex_core::exponent::DecayFit>,
                #[serde(skip_serializing_if = "Option::is_none")]
                annulus: Option<permex_core::conformal::Gamma1Annulus>,
                #[serde(skip_serializing_if = "Option::is_none")]
                annulus_variant_closest_to_sweep: Option<String>,
            }
            let cfg = Cfg { problem: &problem, sweep: &sweep, method: &method };
            opcache::operator(problem.h, problem.nodes)?;
            let template = ProblemParams::new(problem.h, problem.omega0, 1e-2, problem.nodes)?;
            let grid = eps_grid(&sweep);
            let mut result = Out::default();
            if method == "sweep" || method == "all" {
                result.sweep = Some(gamma_from_sweep(&template, &grid)?);
            }
            if method == "eigen" || method == "all" {
                let (fit, est) = gamma_from_eigen(problem.h, problem.omega0, problem.nodes)?;
                result.eigen_fit = Some(fit);
                result.eigen = Some(est);
            }
            if method == "annulus" || method == "all" {
                let annulus = riemann_invariant(problem.h, 256)?;
                let g1 = gamma1_annulus(problem.omega0, &annulus)?;
                if let Some(sw) = &result.sweep {
                    let variant = if (g1.printed - sw.gamma).abs() <= (g1.doubled - sw.gamma).abs()
                    {
                        "printed"
                    } else {
                        "doubled"
                    };
                    result.annulus_variant_closest_to_sweep = Some(variant.into());
                }
                result.annulus = Some(g1);
            }
            if let Some(csv_path) = csv {
                let ent = opcache::operator(problem.h, problem.nodes)?;
                let bp = BandProblem::point(ent, problem.omega0)?;
                let mut table = CsvOut::new(&cfg, None, &["eps", "d", "eta", "norm_l2"]);
                for &eps in &grid {
                    let eta = bp.solve_eta(eps)?;
                    let d = bp.value(eta) / bp.h2_norm_sq(eta).sqrt();
                    table.row(&[eps, d, eta, bp.band_norm_sq(eta).sqrt()]);
                }
                table.write(&Some(csv_path))?;
            }
            emit_json(&out, cfg, None, result)?;
            Ok(ExitCode::SUCCESS)
        }

        Command::GammaMap { h, omega0, steps, nodes, method, out } => {
            let (lo, hi) = parse_range(&omega0)?;
            #[derive(Serialize)]
            struct Cfg<'a> {
                h: &'a [f64],
                omega0: (f64, f64),
                steps: usize,
                nodes: usize,
                method: &'a str,
            }
            let cfg = Cfg { h: &h, omega0: (lo, hi), steps, nodes, method: &method };
            let mut columns = vec!["omega0".to_string()];
            for &hv in &h {
                columns.push(format!("gamma_h{hv}"));
            }
            let col_refs: Vec<&str> = columns.iter().map(|s| s.as_str()).collect();
            let mut csv = CsvOut::new(&cfg, None, &col_refs);
            for i in 0..=steps {
                let w0 = lo + (hi - lo) * i as f64 / steps as f64;
                let mut row = vec![w0];
                for &hv in &h {
                    opcache::operator(hv, nodes)?;
                    let gamma = match method.as_str() {
                        "sweep" => {
                            let template = ProblemParams::new(hv, w0, 1e-2, nodes)?;
                            let grid: Vec<f64> = (0..=18)
                                .map(|k| 1e-4 * 10f64.powf(3.0 * k as f64 / 18.0))
                                .collect();
                            gamma_from_sweep(&template, &grid)?.gamma
                        }
                        _ => gamma_from_eigen(hv, w0, nodes)?.1.gamma,
                    };
                    row.push(gamma);
                }
                csv.row(&row);
            }
            csv.write(&out)?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Eig { h, nodes, out } => {
            #[derive(Serialize)]
            struct Cfg {
                h: f64,
                nodes: usize,
            }
            let ent = opcache::operator(h, nodes)?;
            let notes: Vec<String> = decay_rate(&ent.eigs, permex_core::operator::EIGEN_FLOOR)
                .ok()
                .map(|r| format!("decay_rate alpha={} r2={} n_used={}", r.alpha, r.r2, r.n_used))
                .into_iter()
                .collect();
            let mut csv = CsvOut::with_notes(
                &Cfg { h, nodes },
                None,
                &notes,
                &["n", "lambda_n", "log10_lambda_n"],
            );
            for (i, &l) in ent.eigs.eigenvalues.iter().enumerate() {
                if l <= 0.0 {
                    break;
                }
                csv.row_mixed(&[
                    format!("{}", i + 1),
                    format!("{l:.17e}"),
                    format!("{:.17e}", l.log10()),
                ]);
            }
            csv.write(&out)?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Map { h, panel, from, to, points, csv, out } => {
            #[derive(Serialize)]
            struct Cfg {
                h: f64,
                panel: usize,
                from: f64,
                to: f64,
                points: usize,
            }
            let cfg = Cfg { h, panel, from, to, points };
            let annulus = riemann_invariant(h, panel)?;
            if let Some(path) = csv {
                let mut table = CsvOut::new(
                    &cfg,
                    None,
                    &["omega0", "abs_psi", "gamma1_printed", "gamma1_doubled"],
                );
                for i in 0..=points {
                    let w0 = from + (to - from) * i as f64 / points as f64;
                    let g1 = gamma1_annulus(w0, &annulus)?;
                    table.row(&[w0, g1.abs_psi_at_omega0, g1.printed, g1.doubled]);
                }
                table.write(&Some(path))?;
            }
            #[derive(Serialize)]
            struct Out {
                rho: f64,
                capacity: f64,
                refinement_delta: f64,
            }
            emit_json(
                &out,
                cfg,
                None,
                Out {
                    rho: annulus.rho,
                    capacity: annulus.capacity,
                    refinement_delta: annulus.refinement_delta,
                },
            )?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Bounds { h, omega0, out } => {
            #[derive(Serialize)]
            struct Cfg {
                h: f64,
                omega0: f64,
            }
            let b = appendix_bounds(omega0, h)?;
            emit_json(&out, Cfg { h, omega0 }, None, b)?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Fit { input, h, max_nodes, tol, out } => {
            #[derive(Serialize)]
            struct Cfg {
                input: String,
                h: f64,
                max_nodes: usize,
                tol: Option<f64>,
            }
            let data = read_band_csv(&input)?;
            let opts = FitOptions { max_nodes, tol, ..Default::default() };
            let fit = fit_stieltjes(&data, h, &opts)?;
            let t_max = 10.0 * fit.model.nodes.iter().cloned().fold(1.0f64, f64::max);
            let cert = certify(&fit.model, &data, &default_t_grid(t_max))?;
            #[derive(Serialize)]
            struct Out {
                fit: permex_core::fit::FitResult,
                certificate: permex_core::fit::CapriniCertificate,
            }
            let ok = cert.ok;
            emit_json(
                &out,
                Cfg { input: input.display().to_string(), h, max_nodes, tol },
                None,
                Out { fit, certificate: cert },
            )?;
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(4) })
        }

        Command::Certify { model, input, t_max, out } => {
            #[derive(Serialize)]
            struct Cfg {
                model: String,
                input: String,
                t_max: Option<f64>,
            }
            let text = std::fs::read_to_string(&model)?;
            let m: StieltjesRational = serde_json::from_str(&text)
                .map_err(|e| Error::Param(format!("model JSON: {e}")))?;
            m.validate()?;
            let data = read_band_csv(&input)?;
            let t_hi = t_max.unwrap_or(10.0 * m.nodes.iter().cloned().fold(1.0f64, f64::max));
            let cert = certify(&m, &data, &default_t_grid(t_hi))?;
            let ok = cert.ok;
            emit_json(
                &out,
                Cfg {
                    model: model.display().to_string(),
                    input: input.display().to_string(),
                    t_max,
                },
                None,
                cert,
            )?;
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(4) })
        }

        Command::DemoIllposed { problem, eps, wmax, points, out } => {
            #[derive(Serialize)]
            struct Cfg<'a> {
                problem: &'a ProblemArgs,
                eps: f64,
                wmax: f64,
                points: usize,
            }
            let params = ProblemParams::new(problem.h, problem.omega0, eps, problem.nodes)?;
            opcache::operator(problem.h, problem.nodes)?;
            let pair = worst_case_pair(&params)?;
            let notes = vec![format!(
                "band_mismatch={:.6e} separation_at_omega0={:.6e} dual_norm_scale={:.6e} achieved_ratio={:.4}",
                pair.band_mismatch,
                pair.separation_at_omega0,
                pair.dual_norm_scale,
                pair.achieved_ratio
            )];
            let mut csv = CsvOut::with_notes(
                &Cfg { problem: &problem, eps, wmax, points },
                None,
                &notes,
                &["omega", "re_f", "im_f", "re_g", "im_g"],
            );
            for i in 0..=points {
                let w = wmax * i as f64 / points as f64;
                let f = pair.eval_f(C64::from(w));
                let g = pair.eval_g(C64::from(w));
                csv.row(&[w, f.re, f.im, g.re, g.im]);
            }
            csv.write(&out)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn parse_range(s: &str) -> Result<(f64, f64), Error> {
    let parts: Vec<&str> = s.split("..").collect();
    if parts.len() != 2 {
        return Err(Error::Param(format!("range must look like 1.1..6, got {s}")));
    }
    let lo: f64 = parts[0]
        .parse()
        .map_err(|_| Error::Param(format!("bad range start {}", parts[0])))?;
    let hi: f64 = parts[1]
        .parse()
        .map_err(|_| Error::Param(format!("bad range end {}", parts[1])))?;
    if !(lo < hi) {
        return Err(Error::Param("range start must precede the end".into()));
    }
    Ok((lo, hi))
}

/// Band data CSV: columns omega, re_f, im_f; a header row is optional and
/// `#` comment lines are skipped.
fn read_band_csv(path: &PathBuf) -> Result<ExperimentalData, RunError> {
    let text = std::fs::read_to_string(path)?;
    let mut grid = Vec::new();
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() < 3 {
            return Err(
                Error::Param(format!("line {}: need omega,re_f,im_f", lineno + 1)).into()
            );
        }
        let parsed: Option<Vec<f64>> = fields[..3].iter().map(|f| f.parse().ok()).collect();
        match parsed {
            Some(v) => {
                grid.push(v[0]);
                values.push(C64::new(v[1], v[2]));
            }
            None if grid.is_empty() => continue, // header row
            None => {
                return Err(
                    Error::Param(format!("line {}: non-numeric data", lineno + 1)).into()
                )
            }
        }
    }
    Ok(ExperimentalData::new(grid, values, None)?)
}
