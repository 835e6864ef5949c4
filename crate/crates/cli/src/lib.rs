//! Command-line front end: config parsing, the map-expression grammar and
//! command dispatch.

pub mod commands;
pub mod config;
pub mod expr;

pub use commands::{run, Cli, Command, Overrides, EXIT_BOUND, EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK};
pub use config::{parse_config, ConfigError, RunConfig};
pub use expr::MapExpression;
