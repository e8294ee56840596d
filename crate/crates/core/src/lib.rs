//! Periodic orbits with a prescribed minimal period by inf-max (Nehari)
//! characterizations.
//!
//! Two pipelines share one engine:
//!
//! * **direct**: `ẍ + V′(x) = 0` on the symmetric space `E1` of `T`-periodic
//!   trajectories; the action is `ψ(x) = ½∫|ẋ|² − ∫V(x)`.
//! * **dual**: `ż = JH′(z)` through the Clarke dual action
//!   `Φ(u) = ½∫(Ju, Πu) + ∫G(u)` on mean-zero fields, `G = H*`.
//!
//! In both cases the solver minimizes `m(e) = max_{s≥0} Φ(se)` over
//! normalized directions, refines the minimizer to a critical point, and
//! certifies its minimal period.
//!
//! The numerical core is generic over [`Real`]; the aliases at the crate
//! root fix the scalar to `f64`, which is what the tolerances are tuned for.

// `!(a < b)` is used on purpose so that NaN fails the test.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod action;
pub mod certify;
pub mod error;
pub mod fiber;
pub mod linalg;
pub mod models;
pub mod nehari;
pub mod pipeline;
pub mod scalar;
pub mod symfun;

/// Library version, recorded in result documents.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use error::{Error, Result};
pub use scalar::Real;
pub use symfun::{make_space, SymmetryClass};

pub type Space = symfun::SpaceConfig<f64>;
pub type Trajectory = symfun::TrajectoryCoeffs<f64>;
pub type DualField = symfun::DualFieldCoeffs<f64>;
pub type Potential = models::PotentialModel<f64>;
pub type Hamiltonian = models::HamiltonianModel<f64>;
pub type Conjugate = models::FenchelPair<f64>;
pub type DirectContext = action::DirectActionContext<f64>;
pub type DualContext = action::DualActionContext<f64>;
pub type Profile = fiber::FiberProfile<f64>;
pub type Solution = nehari::Candidate<f64>;
