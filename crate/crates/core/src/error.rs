use thiserror::Error;

/// Errors raised by the analytic solver and the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument fell outside its legal range.
    #[error("invalid {name} = {value}: must be {range}")]
    Domain {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    /// A root search could not bracket or isolate a solution.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn domain(name: &'static str, value: impl Into<f64>, range: &'static str) -> Self {
        Error::Domain {
            name,
            value: value.into(),
            range,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
