//! Residuals against a running-median trend along the recovered sequence.
//!
//! Rows are expected in sequence order. Each pixel column is median-filtered
//! along that axis; whatever the filter removes is the residual. An object's
//! score is the root mean square of its residual row, so a row shifted by a
//! constant `c` scores exactly `|c|` and sparse large spikes still register.

use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::ObjectSet;
use crate::error::{Result, SequencerError};
use crate::scalar::Scalar;
use crate::synth::spearman_ranks;

pub const DEFAULT_WINDOW: usize = 9;

fn median<T: Scalar>(buf: &mut [T]) -> T {
    buf.sort_unstable_by(|a, b| a.cmp_total(b));
    let n = buf.len();
    if n % 2 == 1 {
        buf[n / 2]
    } else {
        (buf[n / 2 - 1] + buf[n / 2]) / T::lit(2.0)
    }
}

/// Running median of one column with windows truncated at the ends.
pub fn running_median<T: Scalar>(column: &[T], window: usize) -> Vec<T> {
    let half = window / 2;
    let n = column.len();
    let mut buf = Vec::with_capacity(window);
    (0..n)
        .map(|t| {
            buf.clear();
            buf.extend_from_slice(&column[t.saturating_sub(half)..(t + half + 1).min(n)]);
            median(&mut buf)
        })
        .collect()
}

pub fn smooth_along_sequence<T: Scalar>(ordered: &ObjectSet<T>, window: usize) -> Result<ObjectSet<T>> {
    let (n_obj, n_pix) = (ordered.n_obj(), ordered.n_pix());
    if window % 2 == 0 || window > n_obj {
        return Err(SequencerError::InvalidConfig(format!(
            "smoothing window must be odd and at most {n_obj}, got {window}"
        )));
    }
    let columns: Vec<Vec<T>> = (0..n_pix)
        .into_par_iter()
        .map(|i| {
            let col: Vec<T> = (0..n_obj).map(|j| ordered.get(j, i)).collect();
            running_median(&col, window)
        })
        .collect();
    let mut values = vec![T::zero(); n_obj * n_pix];
    for (i, col) in columns.iter().enumerate() {
        for (j, &v) in col.iter().enumerate() {
            values[j * n_pix + i] = v;
        }
    }
    ObjectSet::from_flat(n_obj, n_pix, values, ordered.labels().map(<[String]>::to_vec))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport<T> {
    pub n_obj: usize,
    pub n_pix: usize,
    /// Row-major `ordered - smoothed`.
    pub residuals: Vec<T>,
    /// One score per row of the ordered set.
    pub scores: Vec<T>,
    /// `(row, score)` pairs, filled by [`flag_outliers`].
    pub flagged: Vec<(usize, T)>,
}

impl<T: Scalar> ResidualReport<T> {
    pub fn residual_row(&self, j: usize) -> &[T] {
        &self.residuals[j * self.n_pix..(j + 1) * self.n_pix]
    }

    /// Row positions sorted by descending score, earlier rows first on ties.
    pub fn ranked(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.n_obj).collect();
        idx.sort_by(|&a, &b| self.scores[b].cmp_total(&self.scores[a]));
        idx
    }

    /// Spearman correlation between sequence position and score rank. Large
    /// magnitudes mean anomalous objects pile up at one end of the sequence.
    pub fn end_position_correlation(&self) -> f64 {
        let mut score_rank = vec![0; self.n_obj];
        for (r, j) in self.ranked().into_iter().enumerate() {
            score_rank[j] = r;
        }
        let positions: Vec<usize> = (0..self.n_obj).collect();
        spearman_ranks(&positions, &score_rank)
    }
}

pub fn residual_score<T: Scalar>(row: &[T]) -> T {
    let ss: T = row.iter().map(|&r| r * r).sum();
    (ss / T::from_usize_lossy(row.len())).sqrt()
}

pub fn compute_residuals<T: Scalar>(ordered: &ObjectSet<T>, smoothed: &ObjectSet<T>) -> Result<ResidualReport<T>> {
    if ordered.n_obj() != smoothed.n_obj() || ordered.n_pix() != smoothed.n_pix() {
        return Err(SequencerError::SizeMismatch {
            expected: ordered.values().len(),
            found: smoothed.values().len(),
        });
    }
    let residuals: Vec<T> = ordered
        .values()
        .iter()
        .zip(smoothed.values())
        .map(|(&a, &b)| a - b)
        .collect();
    let scores = residuals.chunks(ordered.n_pix()).map(residual_score).collect();
    Ok(ResidualReport {
        n_obj: ordered.n_obj(),
        n_pix: ordered.n_pix(),
        residuals,
        scores,
        flagged: Vec::new(),
    })
}

/// Rows scoring above `threshold` times the median score, in row order. Also
/// stores them on the report.
pub fn flag_outliers<T: Scalar>(report: &mut ResidualReport<T>, threshold: T) -> Result<Vec<usize>> {
    if !(threshold > T::zero()) {
        return Err(SequencerError::InvalidConfig(format!("threshold must be positive, got {threshold}")));
    }
    let cut = threshold * median(&mut report.scores.clone());
    report.flagged = report
        .scores
        .iter()
        .enumerate()
        .filter(|&(_, &s)| s > cut)
        .map(|(j, &s)| (j, s))
        .collect();
    Ok(report.flagged.iter().map(|f| f.0).collect())
}
