//! Environment builders, the declarative experiment runner and the pieces
//! behind the `successor-lab` command line.

pub mod config;
pub mod env;
pub mod error;
pub mod experiments;
pub mod oracle;
pub mod runner;
pub mod svg;
pub mod table;

pub use config::{parse_seeds, ExperimentConfig, ExperimentKind, LearnerSpec, OutputSpec, Params};
pub use env::{build_env, Env, EnvSpec};
pub use error::{LabError, Result};
pub use experiments::{run_seed, PlotSpec, SeedOutput};
pub use oracle::{oracle_csv, OracleQuantity};
pub use runner::{config_hash, run_experiment, thread_count, RunManifest, RunOptions, SeedRecord, MANIFEST_FILE};
pub use table::{schema, Cell, ColumnType, Table};

use std::path::Path;

/// Parses an env argument: shorthand, inline JSON, or a path to a file
/// holding either an env spec or a serialized MRP.
pub fn load_env(arg: &str) -> Result<Env> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = std::fs::read_to_string(path)?;
        if let Ok(spec) = text.parse::<EnvSpec>() {
            return build_env(&spec);
        }
        return Ok(Env::Mrp(mrp_core::io::mrp_from_json(&text)?));
    }
    build_env(&arg.parse()?)
}
