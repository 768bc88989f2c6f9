//! Experiment harness for the randomized Lindblad simulator: configuration,
//! drivers for scaling / convergence / verification studies, slope fits,
//! and deterministic CSV/JSON/SVG outputs.

pub mod config;
pub mod drivers;
pub mod fit;
pub mod output;
pub mod systems;
