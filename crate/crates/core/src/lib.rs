//! Simulator for decentralized smooth strongly-convex optimization over
//! gossip networks.
//!
//! A network of n agents cooperatively minimizes the average of local
//! functions f_i, each agent exchanging iterates only with its neighbors
//! through a gossip matrix W. The crate provides:
//!
//! - gossip-matrix construction and spectral analysis ([`graph`]),
//! - counted local objectives with known smoothness constants ([`objective`]),
//! - a deterministic shared-seed source of the algorithmic randomness ([`rng`]),
//! - four methods as pure step functions over explicit state ([`algorithms`]):
//!   classical gradient tracking (GT), its accelerated variant (Acc-GT),
//!   snapshot-based stochastic gradient tracking (SS-GT), and gradient
//!   tracking with loopless Chebyshev-accelerated mixing (OGT),
//! - a run harness with per-iteration invariant diagnostics, metric records,
//!   scaling sweeps and experiment presets ([`harness`]).
//!
//! Everything is deterministic given the run configuration: identical seeds
//! reproduce identical trajectories bit for bit.

pub mod algorithms;
pub mod error;
pub mod graph;
pub mod harness;
pub mod mat;
pub mod objective;
pub mod rng;

pub use error::{Error, Result};
