use std::fmt;
use std::process::ExitCode;

/// A command failure, classified by the exit code callers can rely on.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags or configuration (exit 1).
    Usage(anyhow::Error),
    /// Unreadable or inconsistent input data (exit 2).
    Data(anyhow::Error),
    /// The numerical core refused the problem (exit 3).
    Numerical(anyhow::Error),
}

impl Failure {
    pub fn usage(msg: impl fmt::Display) -> Self {
        Failure::Usage(anyhow::anyhow!("{msg}"))
    }

    pub fn data(msg: impl fmt::Display) -> Self {
        Failure::Data(anyhow::anyhow!("{msg}"))
    }

    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.code())
    }

    /// Adds context while keeping the classification.
    pub fn context(self, ctx: impl fmt::Display) -> Self {
        match self {
            Failure::Usage(e) => Failure::Usage(e.context(ctx.to_string())),
            Failure::Data(e) => Failure::Data(e.context(ctx.to_string())),
            Failure::Numerical(e) => Failure::Numerical(e.context(ctx.to_string())),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(e) | Failure::Data(e) | Failure::Numerical(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<splinemotion::Error> for Failure {
    fn from(e: splinemotion::Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.into())
        } else {
            Failure::Data(e.into())
        }
    }
}

pub type CmdResult<T = ()> = Result<T, Failure>;
