use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("evaluation within {tol:.3e} of the pole at t = {node}")]
    NearPole { node: f64, tol: f64 },

    #[error("grid is not closed under reflection: no partner for point {index}")]
    GridNotSymmetric { index: usize },

    #[error("input is not symmetric: defect {defect:.3e} exceeds {tol:.3e}")]
    NonSymmetric { defect: f64, tol: f64 },

    #[error("grid does not cover the requested interval or carries no quadrature rule")]
    Coverage,

    #[error("tail of the line integral exceeds tolerance: {bound:.3e} > {tol:.3e}")]
    TailBound { bound: f64, tol: f64 },

    #[error("only {found} eigenvalues above the precision floor, need {need}")]
    InsufficientSpectrum { found: usize, need: usize },

    #[error("eigensolver failed: {0}")]
    EigenFailure(String),

    #[error("linear solve failed: {0}")]
    SolveFailure(String),

    #[error("eps = {eps:.3e} is outside the supported range [{lo:.1e}, {hi:.1e}]")]
    EpsRange { eps: f64, lo: f64, hi: f64 },

    #[error("constraint inactive: eps^2 = {eps_sq:.6e} >= Phi(inf) = {phi_inf:.6e}; bound equals the norm cap")]
    ConstraintInactive { eps_sq: f64, phi_inf: f64 },

    #[error("symmetric bound violates the sandwich: D_sym = {d_sym:.6e}, D0 = {d0:.6e}")]
    SandwichViolation { d_sym: f64, d0: f64 },

    #[error("constructed extrapolant violates passivity: min Im = {min_im:.3e}")]
    PositivityFailure { min_im: f64 },

    #[error("series truncation target not met after {terms} terms")]
    Truncation { terms: usize },

    #[error("parameter error: {0}")]
    Param(String),

    #[error("condenser solve did not stabilize under refinement: |d ln rho| = {delta:.3e}")]
    RefinementUnstable { delta: f64 },

    #[error("evaluation point lies on a slit")]
    OnSlit,

    #[error("evaluation too close to the branch cut at {0}")]
    BranchCut(f64),

    #[error("fit did not converge within {iterations} iterations; residual {residual:.6e}")]
    FitNonConvergence { iterations: usize, residual: f64 },

    #[error("degenerate data: all samples vanish")]
    DegenerateData,
}

pub type Result<T> = std::result::Result<T, Error>;
