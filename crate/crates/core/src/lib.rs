//! Analysis and simulation toolkit for random pilot-and-data access in a
//! single-cell massive MIMO uplink.
//!
//! Devices become active with probability `p_a`, hop over `tau_p` orthogonal
//! pilots slot by slot, and are received with MMSE-scaled MRC. The crate
//! provides:
//!
//! - [`access_stats`]: activation / collision probability laws,
//! - [`channel_models`]: the three large-scale fading models and Rayleigh
//!   small-scale channels,
//! - [`bounds`]: the achievable sum-rate bound hierarchy (R1, R2, R3, Ra),
//! - [`optimizer`]: grid and heuristic optimization of `(tau_p, p_a K)`,
//! - [`scaling_laws`]: asymptotic predictions and their numeric verification,
//! - [`protocol_sim`]: a slot-level Monte Carlo simulation of the receiver.
//!
//! The crate is `no_std` (with `alloc`). The default `std` feature enables
//! rayon parallelism; results are bit-identical with or without it.

#![cfg_attr(not(feature = "std"), no_std)]
// Range checks are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod access_stats;
pub mod bounds;
pub mod channel_models;
mod error;
pub mod math;
pub mod optimizer;
mod par;
pub mod protocol_sim;
pub mod quad;
pub mod rng;
pub mod scaling_laws;

pub use error::{Error, Result};

pub use access_stats::{ActivationLaw, CollisionLaw, TruncatedSupport};
pub use bounds::{BoundId, BoundResult, CollisionScenario, McConfig, OperatingPoint};
pub use channel_models::{BetaMoments, LargeScaleModel};
pub use optimizer::{Method, OptimizationResult};
