//! Serializable run summaries, the per-view comparison listing and rank maps.

use serde::{Deserialize, Serialize};

use crate::approx::ApproxConfig;
use crate::error::{Result, SequencerError};
use crate::pipeline::{ElongationWeight, ScaleElongation, SegmentElongation, SequencerConfig, SequencerResult};
use crate::scalar::Scalar;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub metrics: Vec<String>,
    pub max_depth: usize,
    pub offset_mode: bool,
    pub weighting: String,
    pub diagnostics: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub approx: Option<ApproxConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub metric: String,
    pub scale: usize,
    pub segment: usize,
    pub eta: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleRecord {
    pub metric: String,
    pub scale: usize,
    pub eta: f64,
    pub weight: f64,
    pub unit: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ordering: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: u32,
    pub version: String,
    pub n_obj: usize,
    pub n_pix: usize,
    pub config: ConfigEcho,
    pub ordering: Vec<usize>,
    pub start_node: usize,
    pub eta_combined: f64,
    pub scales: Vec<ScaleRecord>,
    pub segments: Vec<SegmentRecord>,
}

impl RunReport {
    pub fn new<T: Scalar>(
        result: &SequencerResult<T>,
        config: &SequencerConfig<T>,
        approx: Option<&ApproxConfig>,
        n_pix: usize,
    ) -> Self {
        let weighting = match config.weighting {
            ElongationWeight::Raw => "raw".to_string(),
            ElongationWeight::Excess(c) => format!("excess({c})"),
        };
        let max_depth = result.scales.iter().map(|s| s.scale).max().unwrap_or(0);
        Self {
            schema: SCHEMA_VERSION,
            version: crate::VERSION.to_string(),
            n_obj: result.ordering.len(),
            n_pix,
            config: ConfigEcho {
                metrics: config.metrics.iter().map(|m| m.name().to_string()).collect(),
                max_depth,
                offset_mode: config.offset_mode,
                weighting,
                diagnostics: config.diagnostics,
                approx: approx.copied(),
            },
            ordering: result.ordering.clone(),
            start_node: result.start_node,
            eta_combined: result.eta_combined().to_f64_lossy(),
            scales: result
                .scales
                .iter()
                .map(|s| ScaleRecord {
                    metric: s.metric.clone(),
                    scale: s.scale,
                    eta: s.eta.to_f64_lossy(),
                    weight: s.weight.to_f64_lossy(),
                    unit: s.unit.to_f64_lossy(),
                    ordering: s.ordering.clone(),
                })
                .collect(),
            segments: result
                .segments
                .iter()
                .map(|s| SegmentRecord {
                    metric: s.metric.clone(),
                    scale: s.scale,
                    segment: s.segment,
                    eta: s.eta.to_f64_lossy(),
                    weight: s.weight.to_f64_lossy(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewRanking {
    pub metric: String,
    pub scale: usize,
    pub eta: f64,
    pub ordering: Vec<usize>,
}

fn sort_views(rows: impl Iterator<Item = Result<ViewRanking>>, top_k: usize) -> Result<Vec<ViewRanking>> {
    let mut rows = rows.collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| b.eta.total_cmp(&a.eta));
    rows.truncate(top_k);
    Ok(rows)
}

/// The `top_k` (metric, scale) views by elongation, each with its own ordering.
/// Needs a run with diagnostics on.
pub fn rank_views<T: Scalar>(result: &SequencerResult<T>, top_k: usize) -> Result<Vec<ViewRanking>> {
    let rows = result.scales.iter().map(|s| {
        Ok(ViewRanking {
            metric: s.metric.clone(),
            scale: s.scale,
            eta: s.eta.to_f64_lossy(),
            ordering: s.ordering.clone().ok_or(SequencerError::DiagnosticsMissing)?,
        })
    });
    sort_views(rows, top_k)
}

impl RunReport {
    /// [`rank_views`] from a saved report.
    pub fn rank_views(&self, top_k: usize) -> Result<Vec<ViewRanking>> {
        let rows = self.scales.iter().map(|s| {
            Ok(ViewRanking {
                metric: s.metric.clone(),
                scale: s.scale,
                eta: s.eta,
                ordering: s.ordering.clone().ok_or(SequencerError::DiagnosticsMissing)?,
            })
        });
        sort_views(rows, top_k)
    }

    /// Elongation weights in the form insertion expects.
    pub fn view_weights<T: Scalar>(&self) -> (Vec<ScaleElongation<T>>, Vec<SegmentElongation<T>>) {
        let scales = self
            .scales
            .iter()
            .map(|s| ScaleElongation {
                metric: s.metric.clone(),
                scale: s.scale,
                eta: T::lit(s.eta),
                weight: T::lit(s.weight),
                unit: T::lit(s.unit),
                ordering: None,
            })
            .collect();
        let segments = self
            .segments
            .iter()
            .map(|s| SegmentElongation {
                metric: s.metric.clone(),
                scale: s.scale,
                segment: s.segment,
                eta: T::lit(s.eta),
                weight: T::lit(s.weight),
            })
            .collect();
        (scales, segments)
    }
}

/// Plain-text table of [`rank_views`] output; orderings longer than `max_shown` are elided.
pub fn format_view_table(rows: &[ViewRanking], max_shown: usize) -> String {
    let mut out = format!("{:>4}  {:<7} {:>5}  {:>10}  ordering\n", "rank", "metric", "scale", "eta");
    for (r, v) in rows.iter().enumerate() {
        let mut shown: Vec<String> = v.ordering.iter().take(max_shown).map(usize::to_string).collect();
        if v.ordering.len() > max_shown {
            shown.push("...".into());
        }
        out += &format!(
            "{:>4}  {:<7} {:>5}  {:>10.4}  {}\n",
            r + 1,
            v.metric,
            v.scale,
            v.eta,
            shown.join(" ")
        );
    }
    out
}

/// Position of each object in the sequence scaled to `[0, 1]`, indexed by object id.
pub fn rank_map<T: Scalar>(result: &SequencerResult<T>) -> Vec<f64> {
    let n = result.ordering.len();
    let denom = n.saturating_sub(1).max(1) as f64;
    result.positions().into_iter().map(|t| t as f64 / denom).collect()
}
