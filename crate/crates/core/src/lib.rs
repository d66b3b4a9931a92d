//! Convergence tests for positive series on iterated-logarithm scales.

pub mod cli;
pub mod engine;
pub mod expr;
pub mod extrange;
pub mod lambda;
pub mod ratio_root;
pub mod stats;
