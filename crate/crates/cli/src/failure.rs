use std::fmt;
use std::process::ExitCode;

/// A command failure together with the exit code it maps to.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags or configuration (exit 2).
    Usage(String),
    /// Invalid or degenerate data (exit 3).
    Data(String),
    /// Reading or writing files (exit 1).
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            Failure::Usage(_) => ExitCode::from(2),
            Failure::Data(_) => ExitCode::from(3),
            Failure::Io(_) => ExitCode::from(1),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Io(m) => f.write_str(m),
        }
    }
}

impl From<fvml_conc::Error> for Failure {
    fn from(e: fvml_conc::Error) -> Self {
        match e {
            fvml_conc::Error::Config(_) | fvml_conc::Error::UnknownTest(_) => Failure::Usage(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

pub fn io_context(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> Failure + '_ {
    move |e| Failure::Io(format!("{}: {e}", path.display()))
}
