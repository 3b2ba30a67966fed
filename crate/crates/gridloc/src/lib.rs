//! File formats and command-line front end for the `gridloc-core` engine.
//!
//! * [`scenario_file`] reads TOML scenarios, including the bundled
//!   `paper_sweep`.
//! * [`format`] writes records, buckets, error surfaces, comparison tables
//!   and protocol traces.
//! * [`reports`] reads beacon report files for one-shot localization.
//! * [`cli`] implements the `gridloc` binary.

pub mod cli;
pub mod format;
pub mod reports;
pub mod scenario_file;

pub use scenario_file::{load_scenario, parse_scenario, ScenarioFileError};
