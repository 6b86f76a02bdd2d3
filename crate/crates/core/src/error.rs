use thiserror::Error;

/// Errors produced by the lattice, continuation, resolvent and scan routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("support configuration is empty")]
    EmptyConfig,

    #[error("site {site} appears more than once")]
    DuplicateSite { site: i64 },

    #[error("sites are not strictly increasing at position {position}")]
    UnsortedSites { position: usize },

    #[error("site {site} lies outside the window [-{half_width}, {half_width}]")]
    SiteOutsideWindow { site: i64, half_width: usize },

    #[error("{what} = {value} is outside its admissible range")]
    Domain { what: &'static str, value: f64 },

    #[error("length mismatch for {what}: expected {expected}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("Newton continuation did not converge after {iterations} iterations (last residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("Jacobian is singular")]
    SingularJacobian,

    #[error("Green's function prefactor 2i sin z vanishes at the band edge (z = {z_re} + {z_im}i)")]
    SingularPrefactor { z_re: f64, z_im: f64 },

    #[error("matrix is numerically singular: smallest singular value {smallest:e}, largest {largest:e}")]
    NearSingular { smallest: f64, largest: f64 },

    #[error("not enough data: need at least {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("least-squares fit residual {residual:e} exceeds tolerance {tolerance:e}")]
    FitResidual { residual: f64, tolerance: f64 },

    #[error("eigenvalue solver failed")]
    EigenSolver,

    #[error("root search did not converge after {iterations} iterations (last step {last_step:e})")]
    RootNotFound { iterations: usize, last_step: f64 },

    #[error("determinant nearly vanishes on the contour (min |det| = {min_abs:e}, scale {scale:e})")]
    ContourTooClose { min_abs: f64, scale: f64 },

    #[error("contour intersects the continuous spectrum")]
    ContourCrossesBand,

    #[error("no interior local maximum found")]
    MaximumNotFound,

    #[error("invalid grid: {reason}")]
    InvalidGrid { reason: &'static str },
}

pub type Result<T> = core::result::Result<T, Error>;
