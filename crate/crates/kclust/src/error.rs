use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or out-of-range input.
    #[error("input error: {0}")]
    Input(String),

    /// A solution handed to a cost routine breaks one of its constraints.
    #[error("validation error: {0}")]
    Validation(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("size limit exceeded: {0}")]
    Size(String),

    #[error("LP solver failed ({message}); max residual {residual:e}")]
    Solver { message: String, residual: f64 },

    /// A runtime assertion of an algorithm guarantee did not hold.
    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage { stage, source: Box::new(self) }
    }

    /// Process exit code used by the CLI and mirrored by the C API.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invariant(_) | Error::Validation(_) => 1,
            Error::Input(_) | Error::Config(_) | Error::Io(_) | Error::Json(_) | Error::Csv(_) => 2,
            Error::Infeasible(_) | Error::Size(_) | Error::Solver { .. } => 3,
            Error::Stage { source, .. } => source.exit_code(),
        }
    }
}

pub trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.in_stage(stage))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_category() {
        assert_eq!(Error::Invariant("x".into()).exit_code(), 1);
        assert_eq!(Error::Config("x".into()).exit_code(), 2);
        assert_eq!(Error::Size("x".into()).exit_code(), 3);
        let wrapped = Error::Infeasible("no mass".into()).in_stage("lp");
        assert_eq!(wrapped.exit_code(), 3);
        assert!(wrapped.to_string().starts_with("lp: infeasible"));
    }
}
