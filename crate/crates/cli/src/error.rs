use thiserror::Error;

/// Failure classes with their process exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{0} acceptance check(s) missed")]
    CheckMiss(usize),

    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::CheckMiss(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

impl From<aqec_core::Error> for CliError {
    fn from(e: aqec_core::Error) -> Self {
        use aqec_core::Error as E;
        match e {
            E::Stiffness { .. } | E::Singularity(_) | E::Divergence(_) | E::UndefinedGain(_) | E::InvalidState(_) => {
                CliError::Numerical(e.to_string())
            }
            E::Io(m) => CliError::Io(m),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn core_errors_map_to_exit_codes() {
        let numerical = CliError::from(aqec_core::Error::Singularity(0.5));
        assert_eq!(numerical.exit_code(), 3);
        let config = CliError::from(aqec_core::Error::Config("bad".into()));
        assert_eq!(config.exit_code(), 2);
        assert_eq!(CliError::CheckMiss(1).exit_code(), 4);
        assert_eq!(CliError::from(std::io::Error::other("disk")).exit_code(), 1);
    }
}
