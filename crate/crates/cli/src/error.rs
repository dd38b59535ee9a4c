use ablatron_core::error::{ConfigError, PhysicsError};

/// Unified error for the harness. The variant decides the process exit
/// code: configuration problems exit 2, physics and convergence problems
/// exit 3, plain I/O exits 1.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Physics(#[from] PhysicsError),
    #[error("{0}")]
    NonConvergence(String),
    #[error("{0}")]
    DegenerateData(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Usage(String),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Usage(_) => 2,
            Error::Physics(_) | Error::NonConvergence(_) | Error::DegenerateData(_) => 3,
            Error::Io(_) => 1,
        }
    }
}
