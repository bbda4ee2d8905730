//! Large-N mode and single-object insertion.
//!
//! The approximate mode sequences a random subset, then grows that skeleton in
//! batches. For each new object a coarse pass over evenly spaced anchor nodes
//! finds the two nearest anchors; a fine pass measures, per (metric, scale),
//! the distance to every node on the sequence stretch between them, plus one
//! node beyond each. Those
//! distances are the only new edges the view trees ever see.

use rand::seq::{index, SliceRandom};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{build_scale_grid, normalize_row, ObjectSet, ScaleGrid, SegmentView};
use crate::error::{Result, SequencerError};
use crate::graph::{minimum_spanning_tree_from_edges, Edge, SpanningTree};
use crate::metrics::Metric;
use crate::pipeline::{
    build_proximity, normalized_views, run, sequence_from_proximity, view_offset, ProximityMatrix, ScaleElongation,
    SegmentElongation, SequencerConfig, SequencerResult,
};
use crate::scalar::Scalar;
use crate::synth::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproxConfig {
    /// Number of objects sequenced exactly to form the skeleton.
    pub subset_size: usize,
    /// Fraction of the current sequence used as anchors.
    pub anchor_fraction: f64,
    /// Objects inserted per iteration; must stay below the anchor count.
    pub batch_size: usize,
    pub seed: u64,
}

impl ApproxConfig {
    /// Batch size defaults to one less than the initial anchor count.
    pub fn new(subset_size: usize, anchor_fraction: f64, seed: u64) -> Self {
        let anchors = (anchor_fraction * subset_size as f64).floor() as usize;
        Self {
            subset_size,
            anchor_fraction,
            batch_size: anchors.saturating_sub(1).max(1),
            seed,
        }
    }

    pub fn validate(&self, n_obj: usize) -> Result<()> {
        let bad = |msg: String| Err(SequencerError::InvalidConfig(msg));
        if self.subset_size < 3 || self.subset_size > n_obj {
            return bad(format!(
                "subset size {} must be between 3 and the object count {n_obj}",
                self.subset_size
            ));
        }
        if !(self.anchor_fraction > 0.0 && self.anchor_fraction <= 1.0) {
            return bad(format!("anchor fraction {} outside (0, 1]", self.anchor_fraction));
        }
        if self.batch_size == 0 {
            return bad("batch size must be positive".into());
        }
        // the sequence only grows, so the first iteration is the binding one
        let anchors = (self.anchor_fraction * self.subset_size as f64).floor() as usize;
        if self.batch_size >= anchors {
            return bad(format!(
                "batch size {} must be smaller than the {anchors} anchors of the initial sequence",
                self.batch_size
            ));
        }
        Ok(())
    }
}

/// `max(2, floor(f * len))`, capped at `len`.
pub fn anchor_count(len: usize, fraction: f64) -> usize {
    ((fraction * len as f64).floor() as usize).max(2).min(len)
}

/// `count` evenly spaced positions over `0..len`, both ends included.
pub fn anchor_positions(len: usize, count: usize) -> Vec<usize> {
    if count <= 1 || len <= 1 {
        return vec![0];
    }
    (0..count)
        .map(|r| ((r * (len - 1)) as f64 / (count - 1) as f64).round() as usize)
        .collect()
}

struct ScaleTable<T> {
    metric: Metric<T>,
    scale: usize,
    segment_weights: Vec<T>,
    weight: T,
    unit: T,
}

/// The elongation weights of a finished run, which is all insertion needs.
#[derive(Debug, Clone, Copy)]
pub struct ViewWeights<'a, T> {
    pub scales: &'a [ScaleElongation<T>],
    pub segments: &'a [SegmentElongation<T>],
}

impl<'a, T> From<&'a SequencerResult<T>> for ViewWeights<'a, T> {
    fn from(r: &'a SequencerResult<T>) -> Self {
        Self { scales: &r.scales, segments: &r.segments }
    }
}

/// An object that is not (yet) part of an [`ObjectSet`], pre-normalized per segment.
struct FreeObject<T> {
    segments: Vec<Vec<T>>,
}

#[derive(Clone, Copy)]
enum Obj<'a, T> {
    Indexed(usize),
    Free(&'a FreeObject<T>),
}

/// Object-space distances consistent with a finished run: per (metric, scale)
/// the segment-weighted mean, and a blend of all of them in tree-edge units.
struct Blender<T> {
    grid: ScaleGrid,
    views: Vec<SegmentView<T>>,
    tables: Vec<ScaleTable<T>>,
    total_weight: T,
    offset_mode: bool,
}

impl<T: Scalar> Blender<T> {
    fn new(objects: &ObjectSet<T>, views: ViewWeights<'_, T>, config: &SequencerConfig<T>) -> Result<Self> {
        let grid = build_scale_grid(objects.n_pix(), config.max_depth)?;
        let normalized = normalized_views(objects, &grid, config.offset_mode)?;
        let mut tables = Vec::with_capacity(views.scales.len());
        for s in views.scales {
            let metric = *config
                .metrics
                .iter()
                .find(|m| m.name() == s.metric)
                .ok_or_else(|| SequencerError::UnknownMetric(s.metric.clone()))?;
            let segment_weights: Vec<T> = views
                .segments
                .iter()
                .filter(|g| g.metric == s.metric && g.scale == s.scale)
                .map(|g| g.weight)
                .collect();
            if segment_weights.len() != 1 << s.scale || s.scale > grid.max_depth() {
                return Err(SequencerError::InvalidConfig(format!(
                    "result does not match the scale grid at {}/{}",
                    s.metric, s.scale
                )));
            }
            tables.push(ScaleTable {
                metric,
                scale: s.scale,
                segment_weights,
                weight: s.weight,
                unit: s.unit,
            });
        }
        let total_weight = tables.iter().map(|t| t.weight).sum();
        if !(total_weight > T::zero()) {
            return Err(SequencerError::ZeroWeights);
        }
        Ok(Self {
            grid,
            views: normalized,
            tables,
            total_weight,
            offset_mode: config.offset_mode,
        })
    }

    fn free(&self, values: &[T], label: usize) -> Result<FreeObject<T>> {
        if values.len() != self.grid.n_pix() {
            return Err(SequencerError::LengthMismatch {
                left: values.len(),
                right: self.grid.n_pix(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(SequencerError::NonFinite { object: label, pixel: i });
        }
        let mut segments = Vec::new();
        for l in self.grid.scales() {
            for r in self.grid.segments_at(l) {
                let mut row = values[r.clone()].to_vec();
                normalize_row(&mut row, self.offset_mode, label, r.start)?;
                segments.push(row);
            }
        }
        Ok(FreeObject { segments })
    }

    fn row<'a>(&'a self, o: Obj<'a, T>, cell: usize) -> &'a [T] {
        match o {
            Obj::Indexed(j) => self.views[cell].row(j),
            Obj::Free(f) => &f.segments[cell],
        }
    }

    fn scale_distance(&self, table: &ScaleTable<T>, x: Obj<'_, T>, y: Obj<'_, T>) -> Result<T> {
        let base = view_offset(table.scale);
        let mut acc = T::zero();
        let mut wsum = T::zero();
        for (m, &w) in table.segment_weights.iter().enumerate() {
            let d = table.metric.eval(self.row(x, base + m), self.row(y, base + m))?;
            acc += w * d;
            wsum += w;
        }
        if !(wsum > T::zero()) {
            return Err(SequencerError::ZeroWeights);
        }
        Ok(acc / wsum)
    }

    fn blended(&self, x: Obj<'_, T>, y: Obj<'_, T>) -> Result<T> {
        let mut acc = T::zero();
        for t in &self.tables {
            acc += t.weight * self.scale_distance(t, x, y)? / t.unit;
        }
        Ok(acc / self.total_weight)
    }
}

/// Candidate edges for one new object: for every (metric, scale) view, its
/// distance to each sequence node between the two anchors nearest to it,
/// widened by one node on either side.
fn window_distances<T: Scalar>(
    blender: &Blender<T>,
    x: Obj<'_, T>,
    sequence: &[usize],
    anchors: &[usize],
) -> Result<Vec<Vec<(usize, T)>>> {
    let mut coarse = anchors
        .iter()
        .map(|&p| Ok((blender.blended(x, Obj::Indexed(sequence[p]))?, p)))
        .collect::<Result<Vec<(T, usize)>>>()?;
    coarse.sort_by(|a, b| a.0.cmp_total(&b.0).then(a.1.cmp(&b.1)));
    let (p1, p2) = (coarse[0].1, coarse.get(1).map_or(coarse[0].1, |c| c.1));
    // one extra node past each anchor, so an object that belongs just outside
    // the anchor pair can still reach both of its future neighbors
    let lo = p1.min(p2).saturating_sub(1);
    let hi = (p1.max(p2) + 1).min(sequence.len() - 1);
    let window = &sequence[lo..=hi];
    blender
        .tables
        .iter()
        .map(|table| {
            window
                .iter()
                .map(|&j| Ok((j, blender.scale_distance(table, x, Obj::Indexed(j))?)))
                .collect()
        })
        .collect()
}

/// Sequences a seeded subset exactly, then inserts the remaining objects batch
/// by batch. Each view keeps a spanning tree over the objects placed so far;
/// a batch adds its window distances as candidate edges, every view tree is
/// recomputed from its old edges plus the candidates, and the trees are
/// recombined with the elongation weights of the subset run.
pub fn run_approx<T: Scalar>(
    objects: &ObjectSet<T>,
    approx: &ApproxConfig,
    config: &SequencerConfig<T>,
) -> Result<SequencerResult<T>> {
    let n = objects.n_obj();
    approx.validate(n)?;
    config.validate()?;
    let mut rng = rng(approx.seed);
    let mut subset: Vec<usize> = if approx.subset_size == n {
        (0..n).collect()
    } else {
        index::sample(&mut rng, n, approx.subset_size).into_vec()
    };
    subset.sort_unstable();
    let skeleton = run(&objects.select(&subset)?, config)?;
    if approx.subset_size == n {
        return Ok(skeleton);
    }

    let blender = Blender::new(objects, (&skeleton).into(), config)?;
    let mut in_subset = vec![false; n];
    subset.iter().for_each(|&j| in_subset[j] = true);
    let mut remaining: Vec<usize> = (0..n).filter(|&j| !in_subset[j]).collect();
    remaining.shuffle(&mut rng);

    // trees and proximity use dense local ids in insertion order; `members`
    // maps them back to object ids
    let mut members = subset.clone();
    let mut local = vec![usize::MAX; n];
    for (k, &g) in members.iter().enumerate() {
        local[g] = k;
    }
    let weights: Vec<T> = skeleton.scales.iter().map(|s| s.weight).collect();
    let mut trees = skeleton.scale_trees.clone();
    let mut sequence: Vec<usize> = skeleton.ordering.iter().map(|&k| subset[k]).collect();
    let mut last = None;

    for batch in remaining.chunks(approx.batch_size) {
        let len = sequence.len();
        let anchors = anchor_positions(len, anchor_count(len, approx.anchor_fraction));
        let proposals: Vec<Vec<Vec<(usize, T)>>> = batch
            .par_iter()
            .map(|&g| window_distances(&blender, Obj::Indexed(g), &sequence, &anchors))
            .collect::<Result<_>>()?;
        for &g in batch {
            local[g] = members.len();
            members.push(g);
        }
        trees = trees
            .par_iter()
            .enumerate()
            .map(|(k, tree)| {
                let mut edges = tree.edges().to_vec();
                for (&g, prop) in batch.iter().zip(&proposals) {
                    edges.extend(prop[k].iter().map(|&(j, d)| Edge::new(local[g], local[j], d)));
                }
                minimum_spanning_tree_from_edges(members.len(), edges)
            })
            .collect::<Result<_>>()?;
        let proximity = build_proximity(&trees, &weights)?;
        let outcome = sequence_from_proximity(&proximity)?;
        sequence = outcome.2.iter().map(|&k| members[k]).collect();
        last = Some((outcome, proximity));
    }

    let ((tree, start, _, combined), proximity) = last.expect("at least one batch when subset < n");
    let relabel = |t: &SpanningTree<T>| {
        SpanningTree::from_edges(
            n,
            t.edges()
                .iter()
                .map(|e| Edge::with_tie(members[e.a], members[e.b], e.weight, e.tie))
                .collect(),
        )
    };
    let mut global = ProximityMatrix::new(n);
    for ((i, j), e) in proximity.entries() {
        global.accumulate(members[i], members[j], e.proximity, e.tie);
    }
    let mut scales = skeleton.scales;
    for s in &mut scales {
        if let Some(o) = &mut s.ordering {
            o.iter_mut().for_each(|k| *k = subset[*k]);
        }
    }
    Ok(SequencerResult {
        ordering: sequence,
        start_node: members[start],
        segments: skeleton.segments,
        scales,
        scale_trees: trees.iter().map(relabel).collect::<Result<_>>()?,
        combined,
        combined_tree: relabel(&tree)?,
        proximity: global,
    })
}

/// Inserts `new_object` beside its nearest neighbor without re-running the
/// pipeline, on whichever side adds less path length. The new object gets id
/// `objects.n_obj()`; returns the extended ordering.
pub fn insert_object<T: Scalar>(
    result: &SequencerResult<T>,
    objects: &ObjectSet<T>,
    new_object: &[T],
    config: &SequencerConfig<T>,
) -> Result<Vec<usize>> {
    insert_with_weights(&result.ordering, result.into(), objects, new_object, config)
}

/// [`insert_object`] given only an ordering and the run's view weights.
pub fn insert_with_weights<T: Scalar>(
    order: &[usize],
    weights: ViewWeights<'_, T>,
    objects: &ObjectSet<T>,
    new_object: &[T],
    config: &SequencerConfig<T>,
) -> Result<Vec<usize>> {
    if order.len() != objects.n_obj() {
        return Err(SequencerError::SizeMismatch {
            expected: objects.n_obj(),
            found: order.len(),
        });
    }
    let blender = Blender::new(objects, weights, config)?;
    let new_id = objects.n_obj();
    let x = blender.free(new_object, new_id)?;
    let x = Obj::Free(&x);
    let dist: Vec<T> = order
        .par_iter()
        .map(|&j| blender.blended(x, Obj::Indexed(j)))
        .collect::<Result<_>>()?;
    let nearest = (0..dist.len())
        .min_by(|&a, &b| dist[a].cmp_total(&dist[b]).then(a.cmp(&b)))
        .expect("ordering is not empty");

    // added length of slotting x in front of position s
    let cost = |s: usize| -> Result<T> {
        let mut c = T::zero();
        if s > 0 {
            c += dist[s - 1];
        }
        if s < order.len() {
            c += dist[s];
        }
        if s > 0 && s < order.len() {
            c -= blender.blended(Obj::Indexed(order[s - 1]), Obj::Indexed(order[s]))?;
        }
        Ok(c)
    };
    let (before, after) = (cost(nearest)?, cost(nearest + 1)?);
    let slot = if after < before { nearest + 1 } else { nearest };
    let mut out = order.to_vec();
    out.insert(slot, new_id);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anchor_rules() {
        assert_eq!(anchor_count(100, 0.2), 20);
        assert_eq!(anchor_count(5, 0.2), 2);
        assert_eq!(anchor_count(1, 0.5), 1);
        let p = anchor_positions(100, 20);
        assert_eq!(p.len(), 20);
        assert_eq!((p[0], p[19]), (0, 99));
        assert!(p.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(anchor_positions(10, 2), vec![0, 9]);
    }

    #[test]
    fn config_validation() {
        let ok = ApproxConfig::new(100, 0.2, 0);
        assert_eq!(ok.batch_size, 19);
        assert!(ok.validate(200).is_ok());
        assert!(ApproxConfig { batch_size: 20, ..ok }.validate(200).is_err());
        assert!(ApproxConfig { subset_size: 2, ..ok }.validate(200).is_err());
        assert!(ApproxConfig { subset_size: 201, ..ok }.validate(200).is_err());
        assert!(ApproxConfig { anchor_fraction: 0.0, ..ok }.validate(200).is_err());
        assert!(ApproxConfig { anchor_fraction: 1.5, ..ok }.validate(200).is_err());
        assert!(ApproxConfig::new(5, 0.2, 0).validate(10).is_err());
    }
}
