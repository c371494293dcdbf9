//! Minimal qubit tomography with a tetrahedron (four-outcome) measurement.
//!
//! The crate simulates detector clicks for any qubit state, recovers the state
//! with constrained maximum likelihood, evaluates the estimation error against
//! closed-form large-N predictions, and benchmarks adaptive measurement
//! strategies. A standard six-outcome device is included for comparison.
//!
//! Module map:
//!
//! * [`bloch`] – Pauli vectors, measurement frames, Born-rule probabilities
//! * [`clicks`] – multinomial click simulation and frame misalignment
//! * [`ml`] – maximum-likelihood estimation for four- and six-outcome devices
//! * [`likelihood`] – likelihoods with per-click frames (adaptive runs)
//! * [`metrics`] – distances, fidelities, Fisher information, asymptotics
//! * [`adaptive`] – static, pre-measurement and self-learning strategies
//! * [`pair`] – two-qubit tomography and frame calibration with a singlet
//! * [`circuit`] – three-qubit gate network realising the tetrahedron POVM
//! * [`experiment`] – reproducible experiment runner used by the CLI

pub mod adaptive;
pub mod bloch;
pub mod circuit;
pub mod clicks;
pub mod error;
pub mod experiment;
pub mod likelihood;
pub mod metrics;
pub mod ml;
pub mod pair;
pub mod quadrature;
pub mod rng;

pub use bloch::{PauliVector, Probabilities4, SixFrame, StateKind, TetraFrame};
pub use clicks::{ClickCounts, ClickSequence, SixCounts};
pub use error::{Result, TomoError};
pub use ml::{Branch, Estimate, FitMode};
