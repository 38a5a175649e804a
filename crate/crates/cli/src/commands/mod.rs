pub mod distill;
pub mod encode;
pub mod eval;
pub mod generate;
pub mod validate;

use std::path::Path;

use eventforge::io::config::{ConfigDoc, ConfigError};

use crate::CliError;

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Usage(e.to_string())
    }
}

/// Reads and parses a config file; failures are usage errors.
pub(crate) fn read_config(path: &Path) -> Result<ConfigDoc, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    ConfigDoc::parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}
