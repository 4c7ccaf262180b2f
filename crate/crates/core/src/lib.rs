//! Causal-discovery machinery for studying how consistent methods flip their
//! orientation of an edge as the sample size grows.
//!
//! * [`graph`]: DAGs, d-separation, CIC patterns, CPDAG patterns.
//! * [`chickering`]: covered edges, the `⪯` order and flip chains.
//! * [`sem`]: linear Gaussian structural equation models.
//! * [`ci`]: Fisher-z and d-separation conditional independence decisions.
//! * [`discovery`]: the PC and conservative PC algorithms.
//! * [`lab`]: Monte Carlo frequency curves, retractions and flip scenarios.
//! * [`format`]: the line-oriented text formats shared with the CLI.

pub mod chickering;
pub mod ci;
pub mod discovery;
pub mod enumerate;
pub mod error;
pub mod format;
pub mod graph;
pub mod lab;
pub mod sem;
pub mod varset;
pub mod verify;

pub use error::{Error, Result};
pub use graph::{Dag, OrientationAnswer, Pattern};
pub use varset::VarSet;
