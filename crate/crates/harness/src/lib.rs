//! Experiment runner for the `qfr` solvers: seeded repetitions, grid search, constants reports and CSV output.

pub mod config;
pub mod error;
pub mod grid;
pub mod run;
pub mod tools;

pub use config::{load_tree, RunConfig};
pub use error::{Error, Result};
pub use grid::{grid, CellResult, GridOutput, GridSpec, STANDARD_GRID};
pub use run::{run, run_on, to_csv, ConvergenceRecord, RunOutput, SeedSeries, CSV_HEADER};
pub use tools::{bestresp, bestresp_on, constants, constants_on, BestResponseReport, ConstantsReport, ConstantsRequest, ProfileFile};
