use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("buffer of {len} bytes is not a multiple of the {width}-byte word width")]
    LengthNotMultipleOfWidth { len: usize, width: usize },

    #[error("unsupported word width {0} (expected 2, 4 or 8)")]
    InvalidWidth(usize),

    #[error("byte position {position} out of range 1..={width}")]
    PositionOutOfRange { position: usize, width: usize },

    #[error("invalid clustering plan: {0}")]
    InvalidPlan(String),

    #[error("empty input")]
    EmptyInput,

    #[error("need at least two byte groups to cluster, got {0}")]
    TooFewGroups(usize),

    #[error("cluster count {k} out of range 1..={n}")]
    KOutOfRange { k: usize, n: usize },

    #[error("width mismatch: expected {expected}, got {actual}")]
    WidthMismatch { expected: usize, actual: usize },

    #[error("inconsistent stream lengths: {0}")]
    InconsistentLengths(String),

    #[error("unknown codec id {0}")]
    UnknownCodec(u16),

    #[error("unknown codec name {0:?}")]
    UnknownCodecName(String),

    #[error("codec id {0} is already registered")]
    DuplicateId(u16),

    #[error("codec id {0} is reserved for built-in codecs (external ids start at 16)")]
    ReservedId(u16),

    #[error("invalid codec parameters: {0}")]
    InvalidParams(String),

    #[error("corrupt stream at byte {offset}: {reason}")]
    CorruptStream { offset: usize, reason: String },

    #[error("block {block}, cluster {cluster}: {source}")]
    Stream {
        block: usize,
        cluster: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("external codec failure: {0}")]
    External(String),

    #[error("bad magic: not a TDT container")]
    BadMagic,

    #[error("unsupported container version {0}")]
    UnsupportedVersion(u8),

    #[error("no static profile for category {category:?} and width {width}")]
    MissingProfile { category: String, width: usize },

    #[error("profile file line {line}: {reason}")]
    ProfileSyntax { line: usize, reason: String },

    #[error("order {k} needs more than {k} bytes of data, got {len}")]
    KTooLargeForData { k: usize, len: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    pub(crate) fn corrupt(offset: usize, reason: impl Into<String>) -> Self {
        Error::CorruptStream {
            offset,
            reason: reason.into(),
        }
    }

    pub(crate) fn at(self, block: usize, cluster: usize) -> Self {
        Error::Stream {
            block,
            cluster,
            source: Box::new(self),
        }
    }

    /// The `(block, cluster)` coordinates attached by the pipeline, if any.
    pub fn location(&self) -> Option<(usize, usize)> {
        match self {
            Error::Stream { block, cluster, .. } => Some((*block, *cluster)),
            _ => None,
        }
    }

    /// The underlying error with any pipeline context stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stream { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn is_corrupt(&self) -> bool {
        matches!(self.root(), Error::CorruptStream { .. })
    }
}
