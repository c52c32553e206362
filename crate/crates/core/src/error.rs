use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("ungraspable geometry: {0}")]
    Ungraspable(String),

    /// The object left the grasp (ejected from the gap, slid off the sensor,
    /// or tactile contact was missing for too many consecutive frames).
    #[error("object lost: {0}")]
    ObjectLost(String),

    /// A solve produced non-finite values. `dump` carries the offending state.
    #[error("numerical failure: {msg}; state: {dump}")]
    Numerical { msg: String, dump: String },

    #[error("estimator error: {0}")]
    Estimator(String),

    #[error("control error: {0}")]
    Control(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("dataset not found: {}", .0.display())]
    DatasetNotFound(PathBuf),

    #[error("config file not found: {}", .0.display())]
    ConfigMissing(PathBuf),

    #[error("config parse error: {0}")]
    ConfigParse(String),

    /// A config value outside its documented range; `key` is the dotted path.
    #[error("invalid config value {key}: {msg}")]
    ConfigRange { key: String, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
