//! Scenario-driven front end: a TOML document selects a solver and its
//! parameters, and the run writes CSV (and gnuplot matrix) artifacts.

pub mod config;
pub mod output;
pub mod run;

pub use config::{parse_scenario, parse_scenario_as, ConfigErrors, FieldError, Kind, Params, Scenario};
pub use run::{run_scenario, RunError};
