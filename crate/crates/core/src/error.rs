use thiserror::Error;

/// Crate-wide error type.
///
/// Variants are grouped by how a caller should react: everything except
/// [`Error::Numerics`] is a validation failure of inputs, configuration or
/// usage; `Numerics` means a computation blew up (NaN, overflow, negativity
/// beyond tolerance) and retrying with different numerical parameters is the
/// appropriate response.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("size limit exceeded: {0}")]
    Size(String),
    #[error("invalid state: {0}")]
    State(String),
    #[error("parameter outside domain: {0}")]
    Domain(String),
    #[error("numerical failure: {0}")]
    Numerics(String),
    #[error("insufficient statistics: {0}")]
    Stats(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the CLI: 2 for numerical failures, 1 for
    /// (input) validation failures of any kind.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerics(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(Error::Numerics("overflow".into()).exit_code(), 2);
        assert_eq!(Error::Input("bad".into()).exit_code(), 1);
        assert_eq!(Error::Config("bad".into()).exit_code(), 1);
        assert_eq!(Error::Stats("thin".into()).exit_code(), 1);
    }
}
