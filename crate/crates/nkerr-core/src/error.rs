//! Error type shared by all solver and model-construction layers.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("atomic level index {0} outside 1..=4")]
    LevelIndex(usize),

    #[error("negative rate {0} for a dissipative channel")]
    NegativeRate(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate geometry: xi = {xi} must be positive")]
    DegenerateGeometry { xi: f64 },

    #[error("capacitance matrix not positive: Xi = {xi} F^2")]
    SingularCapacitance { xi: f64 },

    #[error("linear system is singular or not solvable to tolerance (residual {residual:.3e} > {tol:.3e})")]
    SingularSystem { residual: f64, tol: f64 },

    #[error("steady-state solve failed: {0}")]
    SteadyState(String),

    #[error("density matrix not positive: min eigenvalue {min_eig:.3e} below floor {floor:.3e}")]
    PositivityViolation { min_eig: f64, floor: f64 },

    #[error("Fock truncation did not converge: {0}")]
    TruncationNonConvergence(String),

    #[error("correlation undefined: mean photon number {n_bar:.3e} below threshold")]
    UndefinedCorrelation { n_bar: f64 },

    #[error("target g2(0) = {target} not achievable at this drive; achievable range [{lo:.3e}, {hi:.3e}]")]
    TargetOutOfRange { target: f64, lo: f64, hi: f64 },

    #[error("lapack: {0}")]
    Linalg(#[from] ndarray_linalg::error::LinalgError),
}
