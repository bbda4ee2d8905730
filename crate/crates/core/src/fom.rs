//! Normalized elongation as a quality score for 2-D embeddings.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, SequencerError};
use crate::graph::{elongation, minimum_spanning_tree, SpanningTree};
use crate::metrics::{DistanceMatrix, MatrixTag};
use crate::scalar::Scalar;

pub const CLUSTERING_WARNING: &str = "elongation may not reflect sequence quality";

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingCandidate<T> {
    /// Row-major `n x dim` coordinates.
    pub points: Vec<T>,
    pub dim: usize,
    pub label: String,
}

impl<T: Scalar> EmbeddingCandidate<T> {
    pub fn new(points: Vec<T>, dim: usize, label: impl Into<String>) -> Result<Self> {
        if dim == 0 || points.len() % dim != 0 {
            return Err(SequencerError::InvalidConfig(format!(
                "{} coordinates do not split into points of dimension {dim}",
                points.len()
            )));
        }
        if let Some(i) = points.iter().position(|v| !v.is_finite()) {
            return Err(SequencerError::NonFinite { object: i / dim, pixel: i % dim });
        }
        Ok(Self { points, dim, label: label.into() })
    }

    pub fn n_points(&self) -> usize {
        self.points.len() / self.dim
    }

    fn point(&self, i: usize) -> &[T] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FigureOfMerit<T> {
    pub eta: T,
    pub eta_normalized: T,
    pub n: usize,
    /// Set when the tree has a hub of degree at least `n / 4`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<&'static str>,
}

pub fn normalized_elongation<T: Scalar>(tree: &SpanningTree<T>) -> Result<FigureOfMerit<T>> {
    let n = tree.n_nodes();
    let eta = elongation(tree, None)?.eta;
    let warning = (n >= 4 && 4 * tree.max_degree() >= n).then_some(CLUSTERING_WARNING);
    Ok(FigureOfMerit {
        eta,
        eta_normalized: eta / T::from_usize_lossy(n),
        n,
        warning,
    })
}

pub fn score_embedding<T: Scalar>(candidate: &EmbeddingCandidate<T>) -> Result<FigureOfMerit<T>> {
    match candidate.dim {
        1 => {
            return Err(SequencerError::InvalidConfig(
                "1-D embeddings are rejected: their spanning tree is always a path, so η′ is always one".into(),
            ))
        }
        2 => {}
        d => return Err(SequencerError::InvalidConfig(format!("embedding dimension {d} is not supported"))),
    }
    let n = candidate.n_points();
    if n < 3 {
        return Err(SequencerError::TooFewObjects(n));
    }
    let d = DistanceMatrix::from_fn(n, MatrixTag::Other, |i, j| {
        let s: T = candidate
            .point(i)
            .iter()
            .zip(candidate.point(j))
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum();
        Ok(s.sqrt())
    })?;
    normalized_elongation(&minimum_spanning_tree(&d)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection<T> {
    pub label: String,
    pub best: FigureOfMerit<T>,
    /// `(candidate index, score)` sorted by η′ descending.
    pub ranking: Vec<(usize, FigureOfMerit<T>)>,
}

/// Scores every candidate and returns the most elongated one; ties go to the earlier candidate.
pub fn select_best<T: Scalar>(candidates: &[EmbeddingCandidate<T>]) -> Result<Selection<T>> {
    let first = candidates
        .first()
        .ok_or_else(|| SequencerError::InvalidConfig("no candidates to select from".into()))?;
    let n = first.n_points();
    if let Some(c) = candidates.iter().find(|c| c.n_points() != n) {
        return Err(SequencerError::SizeMismatch { expected: n, found: c.n_points() });
    }
    let scores: Vec<FigureOfMerit<T>> = candidates.par_iter().map(score_embedding).collect::<Result<_>>()?;
    let mut ranking: Vec<(usize, FigureOfMerit<T>)> = scores.into_iter().enumerate().collect();
    // stable sort keeps first occurrence ahead on ties
    ranking.sort_by(|a, b| b.1.eta_normalized.cmp_total(&a.1.eta_normalized));
    let (idx, best) = ranking[0];
    Ok(Selection { label: candidates[idx].label.clone(), best, ranking })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cand(points: Vec<f64>, label: &str) -> EmbeddingCandidate<f64> {
        EmbeddingCandidate::new(points, 2, label).unwrap()
    }

    fn line(n: usize) -> Vec<f64> {
        (0..n).flat_map(|i| [i as f64, 0.0]).collect()
    }

    #[test]
    fn path_of_five() {
        let f = normalized_elongation(&SpanningTree::<f64>::path(5).unwrap()).unwrap();
        assert_eq!(f.eta, 4.0);
        assert_eq!(f.eta_normalized, 0.8);
    }

    #[test]
    fn collinear_points_score_as_path() {
        for n in [3, 10, 40] {
            let f = score_embedding(&cand(line(n), "line")).unwrap();
            assert_eq!(f.eta_normalized, (n - 1) as f64 / n as f64);
            assert!(f.warning.is_none());
        }
    }

    #[test]
    fn three_points_form_a_path() {
        let f = score_embedding(&cand(vec![0.0, 0.0, 1.0, 0.2, 0.3, 2.0], "tri")).unwrap();
        assert_eq!(f.eta, 2.0);
        assert!((f.eta_normalized - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn one_dimensional_rejected() {
        let c = EmbeddingCandidate::new(vec![0.0, 1.0, 2.0, 3.0], 1, "1d").unwrap();
        let msg = score_embedding(&c).unwrap_err().to_string();
        assert!(msg.contains("always one"), "{msg}");
    }

    #[test]
    fn hub_triggers_warning() {
        let mut pts = vec![0.0, 0.0];
        // pentagon sides exceed the unit spokes, so the center is a hub
        for k in 0..5 {
            let a = k as f64 * std::f64::consts::TAU / 5.0;
            pts.extend([a.cos(), a.sin()]);
        }
        let f = score_embedding(&cand(pts, "star")).unwrap();
        assert_eq!(f.warning, Some(CLUSTERING_WARNING));
    }

    #[test]
    fn selection_rules() {
        let blob: Vec<f64> = (0..10).flat_map(|i| [(i % 3) as f64 * 0.31, (i / 3) as f64 * 0.29]).collect();
        let s = select_best(&[cand(blob.clone(), "blob"), cand(line(10), "line")]).unwrap();
        assert_eq!(s.label, "line");
        assert_eq!(s.ranking.iter().map(|r| r.0).collect::<Vec<_>>(), vec![1, 0]);

        let s = select_best(&[cand(line(10), "a"), cand(line(10), "b")]).unwrap();
        assert_eq!(s.label, "a");
        let s = select_best(&[cand(blob, "only")]).unwrap();
        assert_eq!(s.label, "only");

        assert!(select_best::<f64>(&[]).is_err());
        assert!(matches!(
            select_best(&[cand(line(10), "a"), cand(line(9), "b")]),
            Err(SequencerError::SizeMismatch { .. })
        ));
    }
}
