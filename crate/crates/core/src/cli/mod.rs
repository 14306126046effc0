//! Experiment presets, configuration, runs, sweeps and file output behind
//! the `surf-rd` binary.

pub mod config;
pub mod output;
pub mod presets;
pub mod runner;

pub use config::{load_config, parse_config, ConfigError, FileConfig, MeshSpec};
pub use output::{read_vtk, read_vtk_str, sci, write_vtk, write_vtk_string, VtkData, VtkError};
pub use presets::{preset, Experiment, Preset, TauRule};
pub use runner::{
    build_mesh, run, simulate, sweep, verify, CliError, RunOptions, RunOutcome, RunSettings, SweepOptions,
    SweepReport, EXIT_BLOW_UP, EXIT_CONFIG, EXIT_FAILURE, EXIT_OK, EXIT_SOLVER,
};
