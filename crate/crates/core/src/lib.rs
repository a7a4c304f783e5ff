//! Judging engine for freestyle aerial skiing.
//!
//! - [`jumpcode`]: jump-code grammar and the degree-of-difficulty catalog
//! - [`rulebook`]: take-off, timing, form-break and landing deduction scales
//! - [`scoring`]: per-judge stage scores, five-judge panel aggregation and
//!   dataset records
//! - [`simulator`]: seeded synthetic competitions
//! - [`metrics`]: rank correlation and relative L2 distance

pub mod jumpcode;
pub mod metrics;
pub mod points;
pub mod rulebook;
pub mod scoring;
pub mod simulator;

pub use jumpcode::{describe, format, parse, DifficultyCatalog, Gender, JumpCode};
pub use points::{Dd, FinalScore, Tenths};
pub use rulebook::{RuleConfig, SeverityClass};
