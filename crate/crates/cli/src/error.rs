use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("solver: {0}")]
    Solver(layerclose::Error),
    #[error("reference: {0}")]
    Reference(String),
    #[error(transparent)]
    Core(#[from] layerclose::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Reference(_) => 4,
            _ => 1,
        }
    }
}
