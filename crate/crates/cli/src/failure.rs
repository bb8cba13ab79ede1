use std::fmt;

use qsot_core::wire::ParseError;
use qsot_core::Error;

/// Process exit codes.
pub mod code {
    pub const OK: u8 = 0;
    /// A check requested on the command line did not pass.
    pub const CHECK_FAILED: u8 = 1;
    pub const VALIDATION: u8 = 2;
    pub const PARSE: u8 = 3;
    pub const NUMERICAL: u8 = 4;
    pub const INTERNAL: u8 = 5;
}

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn validation(message: impl Into<String>) -> Self {
        Self {
            code: code::VALIDATION,
            message: message.into(),
        }
    }

    pub fn io(path: &str, e: std::io::Error) -> Self {
        Self::validation(format!("{path}: {e}"))
    }

    pub fn parse(path: &str, e: ParseError) -> Self {
        Self {
            code: code::PARSE,
            message: format!("{path}: {e}"),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NotFaithful { .. } | Error::Singular(_) | Error::SingularDenominator { .. } | Error::Numerical(_) => {
                code::NUMERICAL
            }
            _ => code::VALIDATION,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}
