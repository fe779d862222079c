//! Outcome prediction and activity relevance for process instances with a
//! gated graph neural network.

pub mod dfg;
pub mod error;
pub mod evaluation;
pub mod event_log;
pub mod ggnn;
pub mod instance_graph;
pub mod numerics;
pub mod relevance;
pub mod training;

pub use error::{Error, ErrorClass, Result};
