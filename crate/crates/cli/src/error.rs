use std::fmt;

/// Failure of a subcommand, mapped onto the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad invocation or config file. Exit 1.
    Usage(String),
    /// Input data or scenario rejected. Exit 2.
    Data(String),
    /// A broken internal invariant. Exit 3.
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "error: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

macro_rules! data_errors {
    ($($t:ty),* $(,)?) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Data(e.to_string())
            }
        })*
    };
}

data_errors!(
    std::io::Error,
    nrpos::chanest::ChanestError,
    nrpos::dataset::DatasetError,
    nrpos::fixedpoint::FixedPointError,
    nrpos::metrics::MetricsError,
    nrpos::ofdm::OfdmError,
    nrpos::refsig::RefSigError,
    nrpos::simchan::SimError,
    nrpos::tracefmt::TraceError,
    nrpos::tracefmt::ParseError,
);

pub type Result<T> = std::result::Result<T, CliError>;
