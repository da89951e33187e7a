use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    Verification(String),

    #[error("{0}")]
    Io(String),

    #[error(transparent)]
    Core(#[from] qim_core::Error),
}

impl CliError {
    /// 0 success, 1 usage, 2 verification failure, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        use qim_core::Error as E;
        match self {
            CliError::Usage(_) => 1,
            CliError::Verification(_) => 2,
            CliError::Io(_) => 3,
            CliError::Core(e) => match e {
                E::Io(_) | E::File { .. } | E::Csv(_) | E::Malformed { .. } | E::LabelOutOfRange { .. } => 3,
                _ => 1,
            },
        }
    }

    pub(crate) fn io(path: &std::path::Path, err: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes() {
        assert_eq!(CliError::Usage(String::new()).exit_code(), 1);
        assert_eq!(CliError::Verification(String::new()).exit_code(), 2);
        assert_eq!(CliError::Io(String::new()).exit_code(), 3);
        assert_eq!(CliError::Core(qim_core::Error::ZeroNorm).exit_code(), 1);
        let missing = std::io::Error::from(std::io::ErrorKind::NotFound);
        assert_eq!(CliError::Core(qim_core::Error::Io(missing)).exit_code(), 3);
    }
}
