use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid box: width {w} and height {h} must be finite and positive")]
    InvalidBox { w: f64, h: f64 },

    #[error("degenerate Kalman state: aspect {aspect}, height {height}")]
    DegenerateState { aspect: f64, height: f64 },

    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("frame {got} presented after frame {last}; frames must strictly increase")]
    Sequencing { last: u32, got: u32 },

    #[error("detection for frame {det_frame} passed to step for frame {frame}")]
    FrameMismatch { frame: u32, det_frame: u32 },

    #[error("frame {frame}: {source}")]
    AtFrame {
        frame: u32,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("metric undefined: ground truth contains no boxes")]
    EmptyGroundTruth,

    #[error("invalid scenario: {0}")]
    Scenario(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
