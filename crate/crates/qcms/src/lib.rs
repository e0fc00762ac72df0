//! Numerical laboratory for finite-dimensional quantum compact metric spaces
//! and metric spectral triples.
//!
//! The crate builds spectral triples over finite-dimensional C*-algebras —
//! AF truncation chains with their GNS filtration Dirac operators, explicit
//! triples such as the 2x2-matrix example on C^4, and Dirac operators on
//! twisted group algebras of finite abelian groups — and computes the metric
//! quantities these structures carry:
//!
//! * the Lipschitz seminorm `L(a) = ||[D, pi(a)]||` with verified kernel,
//! * the Monge-Kantorovich distance on states with primal/dual certificates,
//! * the induced length `mkl` and distance `mkD` on *-automorphisms,
//! * isometry-group membership (`Iso`) decided through intertwiner algebra,
//!   and bi-Lipschitz constants with structural certificates (`ISO`),
//! * tunnels between chain levels, bridge-builder defects, covariant reach,
//!   and the telescoping `beta`-sequence bounds driving AF convergence,
//! * finite metric groups, `eps`-iso-iso deviations and upper bounds for the
//!   group Gromov-Hausdorff distance, plus dual actions on group algebras.
//!
//! Every maximization over a seminorm ball is reported as a *bracket*
//! (certified lower and upper bound, see [`metrics::CertifiedValue`]), never
//! as a bare scalar. All sampling is seed-deterministic.

pub mod dirac;
pub mod error;
pub mod finalg;
pub mod gns;
pub mod groups;
pub mod isometry;


pub mod linalg;
pub mod metrics;
pub mod seminorm;
pub mod tol;
pub mod tunnels;


pub use error::{Error, Result};
