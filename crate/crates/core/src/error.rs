use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("second stage of scenario {index} is infeasible for the given first stage")]
    ScenarioInfeasible { index: usize },
    #[error("extensive form not solved to optimality (status {status})")]
    Unsolved { status: String },
    #[error(transparent)]
    Solver(#[from] scenred_mip::MipError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

impl CoreError {
    pub fn parse(line: usize, msg: impl Into<String>) -> Self {
        CoreError::Parse {
            line,
            msg: msg.into(),
        }
    }
}
