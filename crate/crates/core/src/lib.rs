//! Linear-quadratic N-player noncooperative dynamic games on time scales.
//!
//! The crate is layered bottom-up:
//!
//! - [`timescale`]: finite time scales, jump operators, graininess, delta
//!   derivatives and delta integrals. On a finite scale every interior point
//!   is isolated, so all of this calculus is exact up to rounding.
//! - [`linsys`]: linear delta systems `x^Δ = A x + f`, the time-scale matrix
//!   exponential `e_A(t, a)` and regressivity diagnostics.
//! - [`pmp`]: the Lagrange problem with delta-differential side condition,
//!   its Hamiltonian, a residual checker for the first-order necessary
//!   conditions, and an exact single-player linear-quadratic solver.
//! - [`games`]: N-player games with linear dynamics and quadratic costs,
//!   open-loop (OL) and memoryless-perfect-state (MPS) Nash solvers and their
//!   residual checkers.
//! - [`oracle`]: independent brute-force verification (best responses on the
//!   eliminated-dynamics cost, stacked stationarity, convergence studies).
//! - [`cli`]: the `tsgame` command-line front end and its file formats.

// `!(x > y)` is used on purpose to reject NaN; index loops mirror the
// stepping formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod error;
pub mod games;
pub mod linalg;
pub mod linsys;
pub mod oracle;
pub mod pmp;
pub mod timescale;

pub use error::{Error, Result};
pub use games::{
    AffineStrategyProfile, ControlProfile, InfoPattern, LinearGameSpec, NashCandidate, NashSolution,
};
pub use pmp::{PmpCandidate, ResidualReport};
pub use timescale::{GridFunction, PointClass, SamplingScheme, TimeScale};
