//! End-to-end sequencing: per-segment trees, elongation-weighted aggregation
//! into one distance per (metric, scale), a proximity graph built from the
//! edges of those trees, and a final breadth-first walk of its spanning tree.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{build_scale_grid, segment_and_normalize, ObjectSet, ScaleGrid, SegmentView};
use crate::error::{Result, SequencerError};
use crate::graph::{
    bfs_walk, elongation, least_connected_node, minimum_spanning_tree,
    minimum_spanning_tree_from_edges, Edge, ElongationStats, SpanningTree,
};
use crate::metrics::{distance_matrix, DistanceMatrix, MatrixTag, Metric};
use crate::scalar::Scalar;

/// Map from an elongation to the weight it carries in the aggregations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ElongationWeight<T> {
    /// The elongation itself.
    Raw,
    /// `max(eta - offset, 0)`.
    Excess(T),
}

impl<T: Scalar> ElongationWeight<T> {
    pub fn apply(&self, eta: T) -> T {
        match *self {
            ElongationWeight::Raw => eta,
            ElongationWeight::Excess(offset) => (eta - offset).max(T::zero()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SequencerConfig<T> {
    pub metrics: Vec<Metric<T>>,
    /// Deepest scale; `None` picks the ~20-pixel default.
    pub max_depth: Option<usize>,
    /// Shift every segment row by its minimum before normalizing.
    pub offset_mode: bool,
    pub weighting: ElongationWeight<T>,
    /// Keep a BFS ordering for every (metric, scale) tree.
    pub diagnostics: bool,
}

impl<T: Scalar> Default for SequencerConfig<T> {
    fn default() -> Self {
        Self {
            metrics: Metric::defaults(),
            max_depth: None,
            offset_mode: false,
            weighting: ElongationWeight::Raw,
            diagnostics: false,
        }
    }
}

impl<T: Scalar> SequencerConfig<T> {
    pub fn with_metrics(metrics: impl IntoIterator<Item = Metric<T>>) -> Self {
        Self {
            metrics: metrics.into_iter().collect(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.metrics.is_empty() {
            return Err(SequencerError::InvalidConfig("at least one metric is required".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentElongation<T> {
    pub metric: String,
    pub scale: usize,
    pub segment: usize,
    pub eta: T,
    pub weight: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaleElongation<T> {
    pub metric: String,
    pub scale: usize,
    pub eta: T,
    pub weight: T,
    /// Mean edge weight of this tree, the unit its distances are measured in
    /// when different metrics are blended.
    pub unit: T,
    /// BFS ordering of this tree alone, when diagnostics are on.
    pub ordering: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProximityEntry<T> {
    pub proximity: T,
    /// Weighted sum of the unit-free distances of the trees that contributed;
    /// orders edges of equal proximity.
    pub tie: T,
}

/// Sparse symmetric proximity, keyed by `(min, max)` node pairs. The diagonal is
/// implicitly infinite and absent pairs are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ProximityMatrix<T> {
    n: usize,
    entries: BTreeMap<(usize, usize), ProximityEntry<T>>,
}

impl<T: Scalar> ProximityMatrix<T> {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            entries: BTreeMap::new(),
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        if i == j {
            return T::infinity();
        }
        self.entries
            .get(&(i.min(j), i.max(j)))
            .map_or(T::zero(), |e| e.proximity)
    }

    pub fn entries(&self) -> impl Iterator<Item = ((usize, usize), &ProximityEntry<T>)> {
        self.entries.iter().map(|(&k, v)| (k, v))
    }

    pub fn n_entries(&self) -> usize {
        self.entries.len()
    }

    /// Adds `proximity` (and `tie`) to the pair `(i, j)`.
    pub fn accumulate(&mut self, i: usize, j: usize, proximity: T, tie: T) {
        let key = (i.min(j), i.max(j));
        let e = self.entries.entry(key).or_insert(ProximityEntry {
            proximity: T::zero(),
            tie: T::zero(),
        });
        e.proximity += proximity;
        e.tie += tie;
    }

    /// Grows the node count; new nodes start unconnected.
    pub fn resize(&mut self, n: usize) {
        self.n = self.n.max(n);
    }
}

/// Reciprocal of a proximity matrix: the edges of a sparse graph.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseDistance<T> {
    n: usize,
    edges: Vec<Edge<T>>,
}

impl<T: Scalar> SparseDistance<T> {
    pub fn size(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge<T>] {
        &self.edges
    }

    /// `Some(0)` on the diagonal, `None` where no edge exists.
    pub fn get(&self, i: usize, j: usize) -> Option<T> {
        if i == j {
            return Some(T::zero());
        }
        let (a, b) = (i.min(j), i.max(j));
        self.edges.iter().find(|e| e.a == a && e.b == b).map(|e| e.weight)
    }
}

#[derive(Debug, Clone)]
pub struct SequencerResult<T> {
    pub ordering: Vec<usize>,
    pub start_node: usize,
    pub segments: Vec<SegmentElongation<T>>,
    pub scales: Vec<ScaleElongation<T>>,
    /// Spanning tree of each (metric, scale) view, aligned with `scales`.
    pub scale_trees: Vec<SpanningTree<T>>,
    pub combined: ElongationStats<T>,
    pub combined_tree: SpanningTree<T>,
    pub proximity: ProximityMatrix<T>,
}

impl<T: Scalar> SequencerResult<T> {
    pub fn eta_combined(&self) -> T {
        self.combined.eta
    }

    /// Position of every object in the ordering.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.ordering.len()];
        for (t, &j) in self.ordering.iter().enumerate() {
            pos[j] = t;
        }
        pos
    }

    pub fn scale_entry(&self, metric: &str, scale: usize) -> Option<&ScaleElongation<T>> {
        self.scales.iter().find(|s| s.metric == metric && s.scale == scale)
    }
}

/// Running weighted sum of equally sized matrices.
struct WeightedSum<T> {
    n: usize,
    acc: Vec<T>,
    weight: T,
}

impl<T: Scalar> WeightedSum<T> {
    fn new(n: usize) -> Self {
        Self {
            n,
            acc: vec![T::zero(); n * n],
            weight: T::zero(),
        }
    }

    fn add(&mut self, d: &DistanceMatrix<T>, w: T) -> Result<()> {
        if d.size() != self.n {
            return Err(SequencerError::SizeMismatch {
                expected: self.n,
                found: d.size(),
            });
        }
        if !(w >= T::zero()) {
            return Err(SequencerError::InvalidConfig(format!("negative weight {w}")));
        }
        for (a, &v) in self.acc.iter_mut().zip(d.as_slice()) {
            *a += w * v;
        }
        self.weight += w;
        Ok(())
    }

    fn finish(mut self, tag: MatrixTag) -> Result<DistanceMatrix<T>> {
        if self.weight <= T::zero() {
            return Err(SequencerError::ZeroWeights);
        }
        let total = self.weight;
        self.acc.iter_mut().for_each(|a| *a /= total);
        DistanceMatrix::from_dense(self.n, self.acc, tag)
    }
}

/// Weighted mean `sum_m w_m D_m / sum_m w_m` of per-segment matrices.
pub fn aggregate_segments<T: Scalar>(
    matrices: &[DistanceMatrix<T>],
    weights: &[T],
) -> Result<DistanceMatrix<T>> {
    let first = matrices
        .first()
        .ok_or_else(|| SequencerError::InvalidConfig("no matrices to aggregate".into()))?;
    if weights.len() != matrices.len() {
        return Err(SequencerError::SizeMismatch {
            expected: matrices.len(),
            found: weights.len(),
        });
    }
    let mut sum = WeightedSum::new(first.size());
    for (d, &w) in matrices.iter().zip(weights) {
        sum.add(d, w)?;
    }
    let tag = match &first.tag {
        MatrixTag::Segment { metric, scale, .. } => MatrixTag::Scale {
            metric: metric.clone(),
            scale: *scale,
        },
        other => other.clone(),
    };
    sum.finish(tag)
}

/// Mean edge weight of a tree; one when every edge is zero.
pub fn tree_unit<T: Scalar>(tree: &SpanningTree<T>) -> T {
    let m = tree.edges().len();
    if m == 0 {
        return T::one();
    }
    let mean = tree.total_weight() / T::from_usize_lossy(m);
    if mean > T::zero() {
        mean
    } else {
        T::one()
    }
}

/// Weighted fraction of trees containing each edge: `sum_{t: (i,j) in t} w_t / sum_t w_t`.
pub fn build_proximity<T: Scalar>(trees: &[SpanningTree<T>], weights: &[T]) -> Result<ProximityMatrix<T>> {
    let first = trees
        .first()
        .ok_or_else(|| SequencerError::InvalidConfig("no trees to combine".into()))?;
    if weights.len() != trees.len() {
        return Err(SequencerError::SizeMismatch {
            expected: trees.len(),
            found: weights.len(),
        });
    }
    let n = first.n_nodes();
    if let Some(t) = trees.iter().find(|t| t.n_nodes() != n) {
        return Err(SequencerError::SizeMismatch {
            expected: n,
            found: t.n_nodes(),
        });
    }
    let total: T = weights.iter().copied().sum();
    if !(total > T::zero()) {
        return Err(SequencerError::ZeroWeights);
    }
    let mut p = ProximityMatrix::new(n);
    for (tree, &w) in trees.iter().zip(weights) {
        if w < T::zero() {
            return Err(SequencerError::InvalidConfig(format!("negative weight {w}")));
        }
        let unit = tree_unit(tree);
        for e in tree.edges() {
            p.accumulate(e.a, e.b, w / total, w * (e.weight / unit) / total);
        }
    }
    Ok(p)
}

/// `1 / P` on populated entries. Pairs with zero proximity have no edge.
pub fn proximity_to_distance<T: Scalar>(p: &ProximityMatrix<T>) -> SparseDistance<T> {
    let edges = p
        .entries()
        .filter(|(_, e)| e.proximity > T::zero())
        .map(|((i, j), e)| Edge::with_tie(i, j, e.proximity.recip(), e.tie))
        .collect();
    SparseDistance { n: p.size(), edges }
}

/// Final tree, start node and walk for a proximity graph.
pub(crate) fn sequence_from_proximity<T: Scalar>(
    p: &ProximityMatrix<T>,
) -> Result<(SpanningTree<T>, usize, Vec<usize>, ElongationStats<T>)> {
    let d = proximity_to_distance(p);
    let tree = minimum_spanning_tree_from_edges(d.size(), d.edges)?;
    let start = least_connected_node(&tree);
    let stats = elongation(&tree, Some(start))?;
    let ordering = bfs_walk(&tree, start)?;
    Ok((tree, start, ordering, stats))
}

/// Normalized segment views for every (scale, segment), in grid order.
pub(crate) fn normalized_views<T: Scalar>(
    objects: &ObjectSet<T>,
    grid: &ScaleGrid,
    offset_mode: bool,
) -> Result<Vec<SegmentView<T>>> {
    let cells: Vec<(usize, usize)> = grid
        .scales()
        .flat_map(|l| (0..grid.segments_at(l).len()).map(move |m| (l, m)))
        .collect();
    cells
        .into_par_iter()
        .map(|(l, m)| {
            segment_and_normalize(objects, grid, l, m, offset_mode).map_err(|e| {
                SequencerError::AtSegment {
                    metric: "normalization".into(),
                    scale: l,
                    segment: m,
                    source: Box::new(e),
                }
            })
        })
        .collect()
}

/// Index of the first view of scale `l` in [`normalized_views`] output.
pub(crate) fn view_offset(l: usize) -> usize {
    (1 << l) - 1
}

struct ScaleOutcome<T> {
    segments: Vec<SegmentElongation<T>>,
    scale: ScaleElongation<T>,
    tree: SpanningTree<T>,
}

fn run_scale<T: Scalar>(
    views: &[SegmentView<T>],
    metric: &Metric<T>,
    scale: usize,
    config: &SequencerConfig<T>,
) -> Result<ScaleOutcome<T>> {
    let n = views[0].n_obj();
    let mut sum = WeightedSum::new(n);
    let mut segments = Vec::with_capacity(views.len());
    for view in views {
        let wrap = |e: SequencerError| SequencerError::AtSegment {
            metric: metric.name().to_string(),
            scale,
            segment: view.segment,
            source: Box::new(e),
        };
        let d = distance_matrix(view, metric).map_err(wrap)?;
        let tree = minimum_spanning_tree(&d).map_err(wrap)?;
        let eta = elongation(&tree, None).map_err(wrap)?.eta;
        let weight = config.weighting.apply(eta);
        sum.add(&d, weight).map_err(wrap)?;
        segments.push(SegmentElongation {
            metric: metric.name().to_string(),
            scale,
            segment: view.segment,
            eta,
            weight,
        });
    }
    let wrap = |e: SequencerError| SequencerError::AtScale {
        metric: metric.name().to_string(),
        scale,
        source: Box::new(e),
    };
    let tag = MatrixTag::Scale {
        metric: metric.name().to_string(),
        scale,
    };
    let d_kl = sum.finish(tag).map_err(wrap)?;
    let tree = minimum_spanning_tree(&d_kl).map_err(wrap)?;
    let start = least_connected_node(&tree);
    let eta = elongation(&tree, Some(start)).map_err(wrap)?.eta;
    let ordering = if config.diagnostics {
        Some(bfs_walk(&tree, start).map_err(wrap)?)
    } else {
        None
    };
    Ok(ScaleOutcome {
        segments,
        scale: ScaleElongation {
            metric: metric.name().to_string(),
            scale,
            eta,
            weight: config.weighting.apply(eta),
            unit: tree_unit(&tree),
            ordering,
        },
        tree,
    })
}

/// Orders `objects` along their main trend.
pub fn run<T: Scalar>(objects: &ObjectSet<T>, config: &SequencerConfig<T>) -> Result<SequencerResult<T>> {
    config.validate()?;
    let grid = build_scale_grid(objects.n_pix(), config.max_depth)?;
    run_with_grid(objects, &grid, config)
}

pub fn run_with_grid<T: Scalar>(
    objects: &ObjectSet<T>,
    grid: &ScaleGrid,
    config: &SequencerConfig<T>,
) -> Result<SequencerResult<T>> {
    config.validate()?;
    if objects.all_rows_equal() {
        return Err(SequencerError::Degenerate(
            "all objects are identical, every distance is zero".into(),
        ));
    }
    let views = normalized_views(objects, grid, config.offset_mode)?;
    let tasks: Vec<(&Metric<T>, usize)> = config
        .metrics
        .iter()
        .flat_map(|m| grid.scales().map(move |l| (m, l)))
        .collect();
    let outcomes: Vec<ScaleOutcome<T>> = tasks
        .into_par_iter()
        .map(|(metric, l)| {
            let start = view_offset(l);
            run_scale(&views[start..start + (1 << l)], metric, l, config)
        })
        .collect::<Result<_>>()?;

    let mut segments = Vec::new();
    let mut scales = Vec::with_capacity(outcomes.len());
    let mut scale_trees = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        segments.extend(o.segments);
        scales.push(o.scale);
        scale_trees.push(o.tree);
    }
    let weights: Vec<T> = scales.iter().map(|s| s.weight).collect();
    let proximity = build_proximity(&scale_trees, &weights)?;
    let (combined_tree, start_node, ordering, combined) = sequence_from_proximity(&proximity)?;

    Ok(SequencerResult {
        ordering,
        start_node,
        segments,
        scales,
        scale_trees,
        combined,
        combined_tree,
        proximity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::load_object_set;
    use crate::metrics::MetricKind;

    fn constant(n: usize, v: f64) -> DistanceMatrix<f64> {
        let data = (0..n * n).map(|k| if k / n == k % n { 0.0 } else { v }).collect();
        DistanceMatrix::from_dense(n, data, MatrixTag::Other).unwrap()
    }

    #[test]
    fn single_segment_aggregate_is_identity() {
        let d = constant(4, 2.5);
        assert_eq!(aggregate_segments(&[d.clone()], &[7.0]).unwrap().as_slice(), d.as_slice());
    }

    #[test]
    fn equal_matrices_aggregate_to_themselves() {
        let d = constant(3, 1.5);
        let agg = aggregate_segments(&[d.clone(), d.clone()], &[0.3, 4.0]).unwrap();
        assert_eq!(agg.as_slice(), d.as_slice());
    }

    #[test]
    fn weighted_mean_of_two_matrices() {
        let agg = aggregate_segments(&[constant(3, 1.0), constant(3, 3.0)], &[1.0, 3.0]).unwrap();
        assert_eq!(agg.get(0, 2), 2.5);
        assert_eq!(agg.get(1, 1), 0.0);
    }

    #[test]
    fn aggregate_errors() {
        assert!(matches!(
            aggregate_segments(&[constant(3, 1.0)], &[0.0]),
            Err(SequencerError::ZeroWeights)
        ));
        assert!(aggregate_segments(&[constant(3, 1.0), constant(4, 1.0)], &[1.0, 1.0]).is_err());
        assert!(aggregate_segments::<f64>(&[], &[]).is_err());
    }

    #[test]
    fn single_tree_proximity() {
        let t = SpanningTree::<f64>::path(4).unwrap();
        let p = build_proximity(&[t], &[2.0]).unwrap();
        assert_eq!(p.get(0, 1), 1.0);
        assert_eq!(p.get(2, 3), 1.0);
        assert_eq!(p.get(0, 2), 0.0);
        assert_eq!(p.get(1, 1), f64::INFINITY);
    }

    #[test]
    fn shared_and_private_edges() {
        let t1 = SpanningTree::<f64>::from_edges(3, vec![Edge::new(0, 1, 1.0), Edge::new(1, 2, 1.0)]).unwrap();
        let t2 = SpanningTree::from_edges(3, vec![Edge::new(0, 1, 1.0), Edge::new(0, 2, 1.0)]).unwrap();
        let p = build_proximity(&[t1, t2], &[1.0, 2.0]).unwrap();
        assert_eq!(p.get(0, 1), 1.0);
        assert!((p.get(1, 2) - 1.0 / 3.0).abs() < 1e-15);
        assert!((p.get(0, 2) - 2.0 / 3.0).abs() < 1e-15);
        let t3 = SpanningTree::<f64>::path(4).unwrap();
        let t4 = SpanningTree::<f64>::path(3).unwrap();
        assert!(build_proximity(&[t3, t4], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn reciprocal_distance() {
        let mut p = ProximityMatrix::new(3);
        p.accumulate(0, 1, 0.5, 0.0);
        let d = proximity_to_distance(&p);
        assert_eq!(d.get(0, 1), Some(2.0));
        assert_eq!(d.get(1, 2), None);
        assert_eq!(d.get(2, 2), Some(0.0));
    }

    #[test]
    fn identical_objects_are_rejected() {
        let s = load_object_set(&vec![vec![1.0, 2.0, 3.0]; 4], None).unwrap();
        assert!(matches!(
            run(&s, &SequencerConfig::default()),
            Err(SequencerError::Degenerate(_))
        ));
    }

    #[test]
    fn empty_metric_list_is_a_config_error() {
        let s = load_object_set(&[vec![1.0, 2.0], vec![2.0, 1.0], vec![1.0, 1.0]], None).unwrap();
        let cfg = SequencerConfig::<f64>::with_metrics([]);
        assert!(matches!(run(&s, &cfg), Err(SequencerError::InvalidConfig(_))));
    }

    #[test]
    fn normalization_errors_carry_segment_context() {
        let rows = vec![vec![1.0, 1.0, 0.0, 0.0], vec![1.0, 2.0, 3.0, 4.0], vec![2.0, 1.0, 1.0, 1.0]];
        let s = load_object_set(&rows, None).unwrap();
        let cfg = SequencerConfig {
            max_depth: Some(1),
            ..SequencerConfig::default()
        };
        let err = run(&s, &cfg).unwrap_err();
        assert!(matches!(err, SequencerError::AtSegment { scale: 1, segment: 1, .. }));
        assert!(matches!(err.root(), SequencerError::DegenerateSegment(0)));
    }

    #[test]
    fn shifted_deltas_come_back_in_order() {
        let n = 20;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let s = load_object_set(&rows, None).unwrap();
        let cfg = SequencerConfig {
            max_depth: Some(0),
            ..SequencerConfig::with_metrics([MetricKind::Emd1d.into()])
        };
        let r = run(&s, &cfg).unwrap();
        let identity: Vec<usize> = (0..n).collect();
        let mut reversed = identity.clone();
        reversed.reverse();
        assert!(r.ordering == identity || r.ordering == reversed, "{:?}", r.ordering);
        assert_eq!(r.eta_combined(), (n - 1) as f64);
    }
}
