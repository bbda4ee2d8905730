use thiserror::Error;

pub type Result<T, E = SequencerError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum SequencerError {
    #[error("non-rectangular input: row {row} has {found} values, expected {expected}")]
    NonRectangular {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value at ({object},{pixel})")]
    NonFinite { object: usize, pixel: usize },

    #[error("need at least 3 objects, got {0}")]
    TooFewObjects(usize),

    #[error("need at least 2 pixels per object, got {0}")]
    TooFewPixels(usize),

    #[error("labels: expected {expected}, got {found}")]
    LabelCount { expected: usize, found: usize },

    #[error("scale depth {depth} too deep for {n_pix} pixels: segments would hold fewer than 2 pixels")]
    ScaleTooDeep { depth: usize, n_pix: usize },

    #[error("no segment {segment} at scale {scale}")]
    InvalidSegment { scale: usize, segment: usize },

    #[error("negative value {value} for object {object} at pixel {pixel} (enable offset mode to shift rows)")]
    NegativeValue {
        object: usize,
        pixel: usize,
        value: f64,
    },

    #[error("degenerate segment for object {0}: values sum to zero")]
    DegenerateSegment(usize),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("size mismatch: expected {expected}, got {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("graph over {0} nodes is disconnected")]
    Disconnected(usize),

    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error("node {node} out of range for {n_nodes} nodes")]
    NodeOutOfRange { node: usize, n_nodes: usize },

    #[error("elongation weights are all zero")]
    ZeroWeights,

    #[error("degenerate dataset: {0}")]
    Degenerate(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown metric `{0}` (expected one of L2, KL, EMD, energy)")]
    UnknownMetric(String),

    #[error("objects {i} and {j}: {source}")]
    AtPair {
        i: usize,
        j: usize,
        #[source]
        source: Box<SequencerError>,
    },

    #[error("metric {metric}, scale {scale}, segment {segment}: {source}")]
    AtSegment {
        metric: String,
        scale: usize,
        segment: usize,
        #[source]
        source: Box<SequencerError>,
    },

    #[error("metric {metric}, scale {scale}: {source}")]
    AtScale {
        metric: String,
        scale: usize,
        #[source]
        source: Box<SequencerError>,
    },

    #[error("diagnostics were not recorded for this run")]
    DiagnosticsMissing,
}

impl SequencerError {
    /// Strips `AtPair`/`AtSegment` wrappers.
    pub fn root(&self) -> &SequencerError {
        match self {
            SequencerError::AtPair { source, .. }
            | SequencerError::AtSegment { source, .. }
            | SequencerError::AtScale { source, .. } => {
                source.root()
            }
            other => other,
        }
    }
}
