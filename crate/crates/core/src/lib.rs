//! Solvers and a benchmark harness for separable convex-concave minimax problems
//!
//! ```text
//! min_x max_y  f(x) + I(x, y) - g(y)
//! ```
//!
//! The central method is AG-OG: Nesterov-style acceleration on the individual
//! component `F(z) = f(x) + g(y)` combined with single-call optimistic steps on
//! the coupling operator `H(z) = [∇ₓI; -∇ᵧI]`. The crate provides
//!
//! - [`oracle`]: block vectors, oracle interfaces, the fields `W`, `H`, `∇F`
//!   and diagnostics (squared distance, gap),
//! - [`problems`]: synthetic instances with exactly known minimax points and
//!   noise wrappers,
//! - [`schedules`]: every closed-form stepsize and restart schedule,
//! - [`algorithms`]: AG-OG and its restarted, stochastic and bilinear
//!   variants, plus OGDA, SEG, AG-OG-Direct and Nesterov baselines,
//! - [`harness`]: seeded multi-run experiments, CSV traces, aggregation and
//!   bound checks,
//! - [`verify`]: self-contained invariant suites driven by `agog verify`.

// `!(x > 0.0)` is the NaN-rejecting form used throughout validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algorithms;
pub mod config;
pub mod error;
pub mod harness;
pub mod oracle;
pub mod pair;
pub mod problems;
pub mod schedules;
pub mod trace;
pub mod verify;

pub use error::{Error, Result};
pub use oracle::{CallCounts, GradientSource, Objective, OracleBundle, ProblemConstants};
pub use pair::PairVector;
pub use trace::{RunTrace, TraceRow};
