//! Simulation and estimation of linear and non-linear density-operator
//! functionals through controlled-SWAP / controlled-shift interferometry.
//!
//! The library is organized in layers:
//!
//! - [`qmath`]: dense complex matrices, quantum states, tensor products,
//!   partial traces, and a Hermitian eigendecomposition used as the ground
//!   truth oracle throughout the test suite.
//! - [`networks`]: the Hadamard / phase / controlled-U interferometer, the
//!   swap and cyclic-shift operators, and the analytic shortcuts for
//!   overlaps Tr(ϱₐϱ_b) and power traces Tr ρᵏ.
//! - [`sampling`]: finite-shot simulation of the control-qubit measurement:
//!   seeded binomial sampling, visibility estimators with Wilson confidence
//!   intervals, and shot budgeting.
//! - [`analysis`]: spectrum recovery from power traces, extremal eigenvalue
//!   search, observable expectations via the positive-operator embedding,
//!   overlap-probe state reconstruction, and the two-qubit separability test.
//! - [`channels`]: Kraus channels, the channel/state (Choi) isomorphism, and
//!   the two-way capacity criterion for qubit channels.
//! - [`io`]: JSON file formats for matrices, networks, channels and
//!   estimates, plus canonical (byte-reproducible) emission.

pub mod analysis;
pub mod channels;
mod error;
pub mod io;
pub mod networks;
pub mod qmath;
pub mod sampling;

pub use error::{Error, Result, ValidationReport, Violation};
