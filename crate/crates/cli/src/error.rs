use compo_approx::training::TrainError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("acceptance failure: {0}")]
    Acceptance(String),
}

impl LabError {
    pub fn config(msg: impl Into<String>) -> Self {
        LabError::Config(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) => 1,
            LabError::Numerical(_) | LabError::Io { .. } => 2,
            LabError::Acceptance(_) => 3,
        }
    }
}

impl From<compo_approx::Error> for LabError {
    fn from(e: compo_approx::Error) -> Self {
        use compo_approx::Error as E;
        match e {
            E::InvalidArgument(_) | E::UnknownTarget(_) | E::ResourceLimit { .. } | E::Parse { .. } => {
                LabError::Config(e.to_string())
            }
            _ => LabError::Numerical(e.to_string()),
        }
    }
}

impl From<TrainError> for LabError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Config(m) => LabError::Config(m),
            TrainError::Model(e) => e.into(),
            other => LabError::Numerical(other.to_string()),
        }
    }
}

pub type LabResult<T> = Result<T, LabError>;
