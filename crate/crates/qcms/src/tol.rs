//! Module-level numeric tolerances.
//!
//! Two families: algebraic identities that hold exactly up to rounding
//! (adjoints, products of isometries, cocycle relations) are checked at
//! [`TOL_ALG`]; identities flowing through eigensolvers or iterative
//! refinement are checked at [`TOL_NORM`].

/// Algebraic identities (unit preservation, *-homomorphism residuals, ...).
pub const TOL_ALG: f64 = 1e-12;

/// Norm-level identities (C*-identity, seminorm agreements, witnesses).
pub const TOL_NORM: f64 = 1e-10;

/// Relative rank cutoff for kernel computations.
pub const TOL_RANK: f64 = 1e-10;

/// Target duality gap for Monge-Kantorovich solves on the regression set.
pub const TOL_GAP: f64 = 1e-6;

/// Step-convergence threshold inside iterative solvers.
pub const TOL_STEP: f64 = 1e-8;

/// Full-quantum-isometry acceptance window on the bi-Lipschitz ratio.
pub const TOL_BILIP: f64 = 1e-8;

/// Gram condition number beyond which faithfulness is flagged as doubtful.
pub const GRAM_COND_WARN: f64 = 1e12;

/// Tolerance profile selected at the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    Default,
    Strict,
}

impl Profile {
    /// Scaling applied to check tolerances (strict mode tightens 10x).
    pub fn scale(self) -> f64 {
        match self {
            Profile::Default => 1.0,
            Profile::Strict => 0.1,
        }
    }
}
