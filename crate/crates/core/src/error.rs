use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("text has no non-whitespace content")]
    EmptyText,

    #[error("text contains no words")]
    NoWords,

    #[error("YOD level {0} is outside 1..=16")]
    InvalidLevel(i64),

    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}", format_deficits(.0))]
    InsufficientLevels(Vec<LevelDeficit>),

    #[error("histogram has no nonzero level")]
    EmptyHistogram,

    #[error("evaluation run contains no pairs")]
    EmptyRun,

    #[error("serialization failed: {0}")]
    Serialize(String),
}

/// A level that cannot supply `required` records for the test and validation quotas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct LevelDeficit {
    pub level: u8,
    pub available: usize,
    pub required: usize,
}

fn format_deficits(deficits: &[LevelDeficit]) -> String {
    let parts: Vec<String> = deficits
        .iter()
        .map(|d| format!("level {} has {} records, needs {}", d.level, d.available, d.required))
        .collect();
    format!("insufficient records: {}", parts.join("; "))
}

impl Error {
    /// Attaches `path` to an I/O failure; a missing file gets its own variant.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::FileNotFound(path)
        } else {
            Error::Io { path, source }
        }
    }
}
