//! Scenario driver, calibration, curve fitting, and persistence for the
//! pulsed-ablation loading simulator. The binary front end in `main.rs`
//! is a thin argument layer over these modules.

pub mod calibrate;
pub mod engine;
pub mod error;
pub mod fit;
pub mod output;
pub mod report;
pub mod tables;

pub use error::Error;
