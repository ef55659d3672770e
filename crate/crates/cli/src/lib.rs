//! Command-line front end: scenario files, reports and CSV output.

// `!(x > 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod app;
pub mod oracle;
pub mod output;
pub mod report;
pub mod scenario;

pub use app::{exit, feasibility, initial_filtered_error, run};
pub use scenario::{parse_scenario, RawScenario, Scenario, ScenarioError, EXAMPLE1};
