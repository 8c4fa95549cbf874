use thiserror::Error;

/// Errors produced by the quadrature pipeline.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// The cross product of the Jacobian columns fell below the degeneracy
    /// tolerance; downstream formulas divide by this quantity.
    #[error("degenerate element: |J1 x J2| = {value:e} below tolerance {tol:e}")]
    DegenerateElement { value: f64, tol: f64 },

    /// The preimage search stopped before reaching its gradient tolerance.
    /// Carries the best iterate so callers can inspect it.
    #[error(
        "preimage search did not converge: |grad E| = {grad_norm:e} at ({x1}, {x2}) after {iterations} iterations"
    )]
    NewtonNotConverged {
        x1: f64,
        x2: f64,
        grad_norm: f64,
        iterations: usize,
    },

    /// Asymptotic term evaluated at the singular point with h = 0.
    #[error("singular evaluation: T_l requested at the preimage point with h = 0")]
    SingularEvaluation,

    /// Parameter outside the range a formula is stated for.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
