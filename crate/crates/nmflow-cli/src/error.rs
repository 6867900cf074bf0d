use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    ConfigParse(String),
    #[error("unknown experiment {0:?}")]
    UnknownExperiment(String),
    #[error(transparent)]
    Library(#[from] nmflow::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
