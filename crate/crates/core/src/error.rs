use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("ill-conditioned collocation system (condition estimate {condition:.3e})")]
    IllConditioned { condition: f64 },

    #[error("no convergence after {iterations} iterations (last residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("singular linear system (condition estimate {condition:.3e})")]
    Singular { condition: f64 },

    #[error("strength function not admissible: {0}")]
    Inadmissible(String),

    #[error("degenerate linearization in mode {mode} (smallest singular value {sigma:.3e})")]
    Degenerate { mode: usize, sigma: f64 },

    #[error("shape too deformed: min |Γ'| = {min_derivative:.3e}")]
    ShapeTooDeformed { min_derivative: f64 },

    #[error("{layer}: {source}")]
    Layer {
        layer: &'static str,
        source: Box<Error>,
    },

    #[error("i/o: {0}")]
    Io(String),

    #[error("parse: {0}")]
    Parse(String),
}

impl Error {
    pub fn layer(self, layer: &'static str) -> Self {
        Error::Layer {
            layer,
            source: Box::new(self),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
