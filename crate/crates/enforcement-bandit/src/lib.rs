//! Numerical toolkit for a continuous-time enforcement model with a hidden
//! two-state crime process.
//!
//! An enforcement agency watches a neighborhood whose hidden state switches
//! between "hot" (crime opportunities arrive at Poisson rate `lambda`) and
//! "cold" (no opportunities).  Allocating enforcement costs `c` per unit of
//! time, mitigates harm, and — because an intercepted crime reveals the state —
//! also generates information.  The agency's posterior belief `p` that the
//! state is hot follows a deterministic drift between detections and jumps to
//! one at each detection.
//!
//! The crates solves this model end to end:
//!
//! * [`model`] — primitives, closed-form derived constants, belief dynamics;
//! * [`hjb`] — the dynamic-programming ODE family, regime classification and
//!   the optimal cutoff located by a shooting method;
//! * [`stationary`] — the long-run belief distribution under a cutoff policy
//!   (atom, density, conditional CDFs) and the deterring cutoff;
//! * [`equilibrium`] — equilibria with endogenous crime under non-predictive,
//!   greedy-predictive and optimal-predictive enforcement;
//! * [`sim`] — a discrete-time Monte Carlo engine used as the empirical
//!   oracle for every analytic object;
//! * [`oracle`] — an independent value-iteration solver on a discretized
//!   belief MDP, used to cross-check the ODE solver;
//! * [`validate`] — the acceptance suite shared by `cargo test` and the CLI.

pub mod equilibrium;
mod error;
pub mod hjb;
pub mod model;
pub mod num;
pub mod oracle;
pub mod sim;
pub mod stationary;
pub mod validate;

pub use error::{Error, Result};
