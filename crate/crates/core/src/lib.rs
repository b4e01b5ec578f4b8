//! Estimation of time-varying reproduction numbers from cumulative case
//! counts, and explanation of which control measures accompany low values.
//!
//! The crate is organised as a pipeline:
//!
//! 1. [`serial_interval`] discretizes a Gamma serial-interval distribution.
//! 2. [`rt`] turns cumulative counts into daily reproduction numbers.
//! 3. [`dataset`] joins them with measure dates and weather into binned rows.
//! 4. [`models`] trains a random forest and an additive log-odds surrogate.
//! 5. [`explain`] computes exact Shapley values and minimal sufficient subsets.
//! 6. [`report`] aggregates top-ranked feature-values into CSV tables.
//!
//! [`pipeline`] chains all of it and records a manifest of the run.

mod error;
mod special;

pub mod dataset;
pub mod explain;
pub mod ingest;
pub mod models;
pub mod pipeline;
pub mod report;
pub mod rt;
pub mod serial_interval;
pub mod tables;

pub use error::{Error, IngestReport, LineIssue, Result};
