use thiserror::Error;
use twistlab_core::Error as CoreError;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid {key}: {msg}")]
    Config { key: String, msg: String },

    #[error("{key}: {source}")]
    Value {
        key: String,
        #[source]
        source: CoreError,
    },

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// A core error raised while reading the config key `key`.
    pub fn at(key: &str, source: CoreError) -> Self {
        CliError::Value {
            key: key.to_string(),
            source,
        }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// 2 for invalid input, 3 when too many samples stay undecided, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        let core = match self {
            CliError::Config { .. } | CliError::Value { .. } => return 2,
            CliError::Io { .. } => return 1,
            CliError::Core(e) => e,
        };
        match core {
            CoreError::IndeterminateExcess { .. } => 3,
            CoreError::Invalid { .. }
            | CoreError::Unsupported { .. }
            | CoreError::DegenerateBall(_)
            | CoreError::ExplosionGuard { .. } => 2,
            _ => 1,
        }
    }
}
