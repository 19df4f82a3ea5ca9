use yod_neural::NeuralError;

/// Failure of a subcommand, carrying its process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Infeasible(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 2,
            CliError::Invalid(_) => 3,
            CliError::Infeasible(_) => 4,
            CliError::Numeric(_) => 5,
        }
    }
}

impl From<yod_core::Error> for CliError {
    fn from(e: yod_core::Error) -> Self {
        use yod_core::Error as E;
        match e {
            E::FileNotFound(_) | E::Io { .. } => CliError::Io(e.to_string()),
            E::InsufficientLevels(_) => CliError::Infeasible(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<NeuralError> for CliError {
    fn from(e: NeuralError) -> Self {
        match e {
            NeuralError::Core(inner) => inner.into(),
            NeuralError::Io(_) => CliError::Io(e.to_string()),
            NeuralError::NonFiniteLoss { .. } => CliError::Numeric(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;
    use yod_core::error::LevelDeficit;

    #[test]
    fn exit_codes_by_cause() {
        let missing = yod_core::Error::FileNotFound(PathBuf::from("a.txt"));
        assert_eq!(CliError::from(missing).exit_code(), 2);
        assert_eq!(CliError::from(yod_core::Error::EmptyText).exit_code(), 3);
        let short = yod_core::Error::InsufficientLevels(vec![LevelDeficit { level: 3, available: 1, required: 40 }]);
        assert_eq!(CliError::from(short).exit_code(), 4);
        let wrapped = NeuralError::Core(yod_core::Error::EmptyRun);
        assert_eq!(CliError::from(wrapped).exit_code(), 3);
        assert_eq!(CliError::Numeric("nan".into()).exit_code(), 5);
    }
}
