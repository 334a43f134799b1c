//! Quantum and classical Fisher information for bosonic phase estimation
//! with non-Gaussian probes (asymmetric cat states, ON states, displaced
//! Fock states) under loss, thermal noise and qubit dephasing.
//!
//! A truncated Fock-space engine ([`fockspace`], [`channels`], [`fisher`])
//! is cross-checked against analytic results ([`closedform`]) and an
//! independent covariance-matrix path for Gaussian states ([`gaussian`]).
//! [`protocol`] simulates the two-gate qubit-oscillator preparation and
//! readout, and [`analysis`] holds the parameter scans and studies.
//!
//! Runnable walkthroughs live in `examples/`:
//!
//! ```text
//! cargo run --release --example kernel
//! cargo run --release --example probes_and_channels
//! cargo run --release --example qfi_estimators
//! cargo run --release --example closed_forms
//! cargo run --release --example gaussian_engine
//! cargo run --release --example protocol_readout
//! cargo run --release --example studies
//! ```

pub mod analysis;
pub mod channels;
pub mod cli;
pub mod closedform;
pub mod error;
pub mod fisher;
pub mod fockspace;
pub mod gaussian;
pub mod probes;
pub mod protocol;

pub use error::{Error, Result};
pub use fockspace::{DensityMatrix, OscillatorState, C64};
