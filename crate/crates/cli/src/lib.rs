//! Scene files, command execution, result caching, and verification suites
//! behind the `motives` binary.

pub mod cache;
pub mod exec;
pub mod report;
pub mod scene;
pub mod suites;

/// Engine identity stamped into every report; cache keys include it so a
/// rebuilt engine never serves stale results.
pub const ENGINE: &str = concat!("motives ", env!("CARGO_PKG_VERSION"));

#[derive(Debug)]
pub enum CliError {
    /// Parse or resolution failure; carries every diagnostic found.
    Scene(scene::SceneError),
    /// Engine failure while executing a command, with context.
    Engine(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Scene(e) => write!(f, "{e}"),
            CliError::Engine(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<scene::SceneError> for CliError {
    fn from(e: scene::SceneError) -> Self {
        CliError::Scene(e)
    }
}
