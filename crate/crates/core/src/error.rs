use std::fmt;

use thiserror::Error;

/// Pipeline stage, used to tag errors raised while running a snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Scenario,
    Channel,
    Association,
    Scheduling,
    Link,
    Power,
    Report,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Scenario => "scenario",
            Stage::Channel => "channel",
            Stage::Association => "association",
            Stage::Scheduling => "scheduling",
            Stage::Link => "link",
            Stage::Power => "power",
            Stage::Report => "report",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid or unsatisfiable configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// The generator could not satisfy its placement constraints.
    #[error("generation error: {0}")]
    Generation(String),

    /// Scenario / preset file could not be parsed.
    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },

    /// A caller broke an operation precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("snapshot {snapshot}, stage {stage}: {source}")]
    Stage {
        snapshot: usize,
        stage: Stage,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn at(self, snapshot: usize, stage: Stage) -> Self {
        Error::Stage {
            snapshot,
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
