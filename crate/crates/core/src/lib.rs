//! Ergonomics assessment toolkit for teleoperation interfaces: motion
//! ingestion, comfort and effort metrics, cohort statistics, input mapping
//! for the 3D-mouse and motion-capture front ends, and comparison reports.

pub mod error;
pub mod geometry;
pub mod ingest;
pub mod metrics;
pub mod report;
pub mod skeleton;
pub mod stats;
pub mod synth;
pub mod teleop;

pub use error::{Error, Result};
