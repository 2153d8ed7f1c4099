//! Measure the energy a process consumes and price it in CO₂ for the
//! electricity grid it ran on.

pub mod bench;
pub mod emissions;
pub mod grid;
pub mod locate;
pub mod meter;
pub mod report;
