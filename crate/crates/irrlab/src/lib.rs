//! A laboratory for measuring and simulating interaction latency in
//! interactive remote rendering systems.
//!
//! The crate is organised around five pieces:
//!
//! - [`model`] — pure arithmetic over the end-to-end latency decomposition
//!   (timeline timestamps, component breakdowns, residual estimates).
//! - [`sim`] — an order-preserving latency injector that delays messages by a
//!   configurable amount without disturbing their inter-arrival spacing, plus
//!   the naive synchronous variant for contrast.
//! - [`testbed`] — a miniature client/server rendering system over TCP with
//!   integrated stopwatch measurement and a deterministic software renderer.
//! - [`lmt`] — a non-intrusive measurement tool that watches a region of
//!   pixels, computes PSNR between consecutive captures and matches detected
//!   changes back to interaction timestamps.
//! - [`harness`] — experiment orchestration: templates, runs, statistics and
//!   comparison reports, backing the `irrlab` command line tool.

pub mod frame;
pub mod harness;
pub mod lmt;
pub mod model;
pub mod sim;
pub mod testbed;
pub mod timing;

pub use frame::{PixelBuffer, Region, SharedSurface};
pub use sim::{LatencySimulator, LatencySimulatorResult, SimulatorMode};
pub use timing::SessionClock;
