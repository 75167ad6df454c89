//! Exit codes.

use std::fmt::Display;

pub const INTERNAL: u8 = 1;
pub const INPUT: u8 = 2;
pub const ENTITY_NOT_IN_CORPUS: u8 = 3;
pub const BUDGET: u8 = 4;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn new(code: u8, error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code,
            error: error.into(),
        }
    }

    pub fn input(msg: impl Display) -> Self {
        Failure::new(INPUT, anyhow::anyhow!("{msg}"))
    }
}

pub trait ResultExt<T> {
    /// Maps the error to an input failure (exit code 2).
    fn input(self) -> Result<T, Failure>;
}

impl<T, E> ResultExt<T> for Result<T, E>
where
    E: Into<anyhow::Error>,
{
    fn input(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::new(INPUT, e))
    }
}
