//! Joint beamforming and time-allocation optimizer for a sensing transmitter
//! that uploads training data to an edge server while it scans its targets.
//!
//! The transmitter spends one phase per target: a radar beam keeps the echo
//! SINR above the per-task quality threshold while a data beam uploads the
//! freshly sensed samples over the same aperture. The crate solves the
//! resulting design problem globally:
//!
//! - [`model`] — SINRs, Shannon rate, sample budgets and the empirical
//!   classification-error model `E = a v^(-b)`.
//! - [`channels`] — deterministic ULA steering + path-loss channel synthesis.
//! - [`sdp`] — a dense primal-dual interior-point solver for small SDPs in
//!   Hermitian-PSD variables.
//! - [`beamform`] — per-task beamformer design via a fractional-program
//!   lift solved as an SDP, rank-1 recovery, and two independent oracles.
//! - [`timealloc`] — closed-form min-max time allocation with bisection on
//!   the achieved error level.
//! - [`pipeline`] — the end-to-end solve, a sequential sensing-then-upload
//!   baseline, gain analysis and parameter sweeps.
//! - [`scenario`] — JSON scenario ingestion with dB conversion at the
//!   boundary.

// Validation guards use `!(v > 0.0)` so NaN fails them too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beamform;
pub mod channels;
pub mod error;
mod linalg;
pub mod model;
pub mod pipeline;
pub mod scenario;
pub mod sdp;
pub mod timealloc;

pub use error::{Error, Result};
