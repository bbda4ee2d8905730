//! Recovers the ordering that best exposes the main continuous trend in a
//! collection of one-dimensional objects.
//!
//! Objects are compared under several statistical distances and at several
//! pixel scales. Each comparison yields a minimum spanning tree whose
//! elongation measures how sequence-like the data looks from that point of
//! view; the elongations weight how much each view contributes to the final
//! ordering.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! at the crate root fix the scalar to one of them.

pub mod approx;
pub mod dataset;
pub mod error;
pub mod fom;
pub mod graph;
pub mod metrics;
pub mod outliers;
pub mod pipeline;
pub mod report;
pub mod scalar;
pub mod synth;

pub use approx::{insert_object, insert_with_weights, run_approx, ApproxConfig, ViewWeights};
pub use dataset::{build_scale_grid, load_object_set, segment_and_normalize, ObjectSet, ScaleGrid, SegmentView};
pub use error::{Result, SequencerError};
pub use fom::{normalized_elongation, score_embedding, select_best, EmbeddingCandidate, FigureOfMerit};
pub use graph::{bfs_walk, elongation, least_connected_node, minimum_spanning_tree, ElongationStats, SpanningTree};
pub use metrics::{DistanceMatrix, Metric, MetricKind};
pub use outliers::{compute_residuals, flag_outliers, smooth_along_sequence, ResidualReport};
pub use pipeline::{run, ElongationWeight, SequencerConfig, SequencerResult};
pub use report::{rank_map, rank_views, RunReport};
pub use scalar::Scalar;
pub use synth::{generate_pulse_dataset, shuffle_rows, PulseDatasetSpec};

pub type ObjectSet64 = ObjectSet<f64>;
pub type ObjectSet32 = ObjectSet<f32>;
pub type DistanceMatrix64 = DistanceMatrix<f64>;
pub type DistanceMatrix32 = DistanceMatrix<f32>;
pub type SpanningTree64 = SpanningTree<f64>;
pub type SpanningTree32 = SpanningTree<f32>;
pub type SequencerConfig64 = SequencerConfig<f64>;
pub type SequencerConfig32 = SequencerConfig<f32>;
pub type SequencerResult64 = SequencerResult<f64>;
pub type SequencerResult32 = SequencerResult<f32>;

/// Crate version, echoed into reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
