//! Frequency-domain and time-domain conditions for deterministic and
//! stochastic (multiplicative-noise) linear-quadratic problems with
//! indefinite weights.
//!
//! - [`linmat`]: complex dense linear algebra, Lyapunov solvers, lifts.
//! - [`stability`]: plants, abscissae and stabilizing feedback.
//! - [`frequency`]: Popov function scans and strict margins.
//! - [`riccati_det`]: algebraic Riccati equation with indefinite weights.
//! - [`coercivity`]: sampled coercivity oracle and witness constructions.
//! - [`stoch_lq`]: Wonham iteration, bounded-real gain and the stochastic
//!   coercivity chain.
//! - [`sim`]: Euler–Maruyama Monte Carlo for closed-loop costs.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod coercivity;
pub mod error;
pub mod frequency;
pub mod linmat;
pub mod par;
pub mod riccati_det;
pub mod serde_matrix;
pub mod sim;
pub mod stability;
pub mod stoch_lq;

pub use error::{Error, Result};
pub use frequency::CostWeight;
pub use linmat::{MatrixData, VectorData};
pub use stability::{LinearPlant, StochPlant};
