//! Object matrix, hierarchical scale grid, and per-segment normalization.

use std::ops::Range;

use crate::error::{Result, SequencerError};
use crate::scalar::Scalar;

/// Pixels per segment the default grid stops refining at.
pub const DEEPEST_SEGMENT_PIXELS: usize = 20;

/// `n_obj` one-dimensional objects of `n_pix` values each, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectSet<T> {
    values: Vec<T>,
    n_obj: usize,
    n_pix: usize,
    labels: Option<Vec<String>>,
}

impl<T: Scalar> ObjectSet<T> {
    /// Validates a flat row-major buffer.
    pub fn from_flat(
        n_obj: usize,
        n_pix: usize,
        values: Vec<T>,
        labels: Option<Vec<String>>,
    ) -> Result<Self> {
        if values.len() != n_obj * n_pix {
            return Err(SequencerError::SizeMismatch {
                expected: n_obj * n_pix,
                found: values.len(),
            });
        }
        if n_obj < 3 {
            return Err(SequencerError::TooFewObjects(n_obj));
        }
        if n_pix < 2 {
            return Err(SequencerError::TooFewPixels(n_pix));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(SequencerError::NonFinite {
                object: pos / n_pix,
                pixel: pos % n_pix,
            });
        }
        if let Some(l) = &labels {
            if l.len() != n_obj {
                return Err(SequencerError::LabelCount {
                    expected: n_obj,
                    found: l.len(),
                });
            }
        }
        Ok(Self {
            values,
            n_obj,
            n_pix,
            labels,
        })
    }

    pub fn n_obj(&self) -> usize {
        self.n_obj
    }

    pub fn n_pix(&self) -> usize {
        self.n_pix
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn row(&self, j: usize) -> &[T] {
        &self.values[j * self.n_pix..(j + 1) * self.n_pix]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.values.chunks_exact(self.n_pix)
    }

    pub fn get(&self, j: usize, i: usize) -> T {
        self.values[j * self.n_pix + i]
    }

    /// New set whose row `t` is row `order[t]` of `self`. Labels follow their rows.
    pub fn reordered(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.n_obj {
            return Err(SequencerError::SizeMismatch {
                expected: self.n_obj,
                found: order.len(),
            });
        }
        let mut values = Vec::with_capacity(self.values.len());
        for &j in order {
            if j >= self.n_obj {
                return Err(SequencerError::NodeOutOfRange {
                    node: j,
                    n_nodes: self.n_obj,
                });
            }
            values.extend_from_slice(self.row(j));
        }
        let labels = self
            .labels
            .as_ref()
            .map(|l| order.iter().map(|&j| l[j].clone()).collect());
        Self::from_flat(self.n_obj, self.n_pix, values, labels)
    }

    /// Subset of rows, in the order given.
    pub fn select(&self, rows: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(rows.len() * self.n_pix);
        for &j in rows {
            values.extend_from_slice(self.row(j));
        }
        let labels = self
            .labels
            .as_ref()
            .map(|l| rows.iter().map(|&j| l[j].clone()).collect());
        Self::from_flat(rows.len(), self.n_pix, values, labels)
    }

    /// True when every row is bitwise equal to the first.
    pub fn all_rows_equal(&self) -> bool {
        let first = self.row(0);
        self.rows().skip(1).all(|r| r == first)
    }
}

/// Builds an [`ObjectSet`] from a list of rows, preserving their order.
pub fn load_object_set<T: Scalar>(
    rows: &[Vec<T>],
    labels: Option<Vec<String>>,
) -> Result<ObjectSet<T>> {
    let n_pix = rows.first().map_or(0, Vec::len);
    for (j, r) in rows.iter().enumerate() {
        if r.len() != n_pix {
            return Err(SequencerError::NonRectangular {
                row: j,
                expected: n_pix,
                found: r.len(),
            });
        }
    }
    let values = rows.iter().flatten().copied().collect();
    ObjectSet::from_flat(rows.len(), n_pix, values, labels)
}

/// Binary decomposition of the pixel axis: scale `l` holds `2^l` contiguous segments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScaleGrid {
    n_pix: usize,
    bounds: Vec<Vec<Range<usize>>>,
}

impl ScaleGrid {
    pub fn n_pix(&self) -> usize {
        self.n_pix
    }

    pub fn max_depth(&self) -> usize {
        self.bounds.len() - 1
    }

    pub fn scales(&self) -> Range<usize> {
        0..self.bounds.len()
    }

    pub fn segments_at(&self, scale: usize) -> &[Range<usize>] {
        &self.bounds[scale]
    }

    pub fn segment(&self, scale: usize, segment: usize) -> Result<Range<usize>> {
        self.bounds
            .get(scale)
            .and_then(|s| s.get(segment))
            .cloned()
            .ok_or(SequencerError::InvalidSegment { scale, segment })
    }
}

/// Default deepest scale: `ceil(log2(n_pix / 20))`, clamped at zero.
pub fn default_max_depth(n_pix: usize) -> usize {
    let mut depth = 0;
    while DEEPEST_SEGMENT_PIXELS << depth < n_pix {
        depth += 1;
    }
    depth
}

/// Splits `0..n` into `parts` contiguous ranges whose sizes differ by at most one;
/// earlier ranges take the extra element.
pub fn split_even(n: usize, parts: usize) -> Vec<Range<usize>> {
    let base = n / parts;
    let extra = n % parts;
    let mut start = 0;
    (0..parts)
        .map(|m| {
            let len = base + usize::from(m < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect()
}

pub fn build_scale_grid(n_pix: usize, max_depth: Option<usize>) -> Result<ScaleGrid> {
    if n_pix < 2 {
        return Err(SequencerError::TooFewPixels(n_pix));
    }
    let depth = max_depth.unwrap_or_else(|| default_max_depth(n_pix));
    if depth >= usize::BITS as usize - 1 || n_pix >> depth < 2 {
        return Err(SequencerError::ScaleTooDeep { depth, n_pix });
    }
    let bounds = (0..=depth).map(|l| split_even(n_pix, 1 << l)).collect();
    Ok(ScaleGrid { n_pix, bounds })
}

/// One segment of every object, each row normalized to unit sum.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentView<T> {
    pub scale: usize,
    pub segment: usize,
    pub range: Range<usize>,
    n_obj: usize,
    data: Vec<T>,
}

impl<T: Scalar> SegmentView<T> {
    pub fn n_obj(&self) -> usize {
        self.n_obj
    }

    pub fn len(&self) -> usize {
        self.range.len()
    }

    pub fn is_empty(&self) -> bool {
        self.range.is_empty()
    }

    pub fn row(&self, j: usize) -> &[T] {
        let w = self.range.len();
        &self.data[j * w..(j + 1) * w]
    }
}

/// Normalizes a single segment row in place. `object` and `first_pixel` only label errors.
pub fn normalize_row<T: Scalar>(
    row: &mut [T],
    offset_mode: bool,
    object: usize,
    first_pixel: usize,
) -> Result<()> {
    if offset_mode {
        let min = row.iter().copied().fold(T::infinity(), T::min);
        row.iter_mut().for_each(|v| *v -= min);
    } else if let Some(i) = row.iter().position(|v| *v < T::zero()) {
        return Err(SequencerError::NegativeValue {
            object,
            pixel: first_pixel + i,
            value: row[i].to_f64_lossy(),
        });
    }
    let sum: T = row.iter().copied().sum();
    if sum <= T::zero() {
        return Err(SequencerError::DegenerateSegment(object));
    }
    row.iter_mut().for_each(|v| *v /= sum);
    Ok(())
}

pub fn segment_and_normalize<T: Scalar>(
    objects: &ObjectSet<T>,
    grid: &ScaleGrid,
    scale: usize,
    segment: usize,
    offset_mode: bool,
) -> Result<SegmentView<T>> {
    if grid.n_pix() != objects.n_pix() {
        return Err(SequencerError::SizeMismatch {
            expected: objects.n_pix(),
            found: grid.n_pix(),
        });
    }
    let range = grid.segment(scale, segment)?;
    let mut data = Vec::with_capacity(objects.n_obj() * range.len());
    for (j, row) in objects.rows().enumerate() {
        let start = data.len();
        data.extend_from_slice(&row[range.clone()]);
        normalize_row(&mut data[start..], offset_mode, j, range.start)?;
    }
    Ok(SegmentView {
        scale,
        segment,
        range,
        n_obj: objects.n_obj(),
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(rows: &[&[f64]]) -> Result<ObjectSet<f64>> {
        load_object_set(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>(), None)
    }

    #[test]
    fn load_passes_dimensions_through() {
        let s = set(&[&[1., 2., 3., 4.], &[0., 1., 0., 1.], &[5., 5., 5., 5.]]).unwrap();
        assert_eq!((s.n_obj(), s.n_pix()), (3, 4));
        assert_eq!(s.row(1), &[0., 1., 0., 1.]);
    }

    #[test]
    fn load_rejects_nan_with_position() {
        let err = set(&[&[1., 2.], &[1., f64::NAN], &[0., 1.]]).unwrap_err();
        assert!(matches!(err, SequencerError::NonFinite { object: 1, pixel: 1 }));
        assert_eq!(err.to_string(), "non-finite value at (1,1)");
    }

    #[test]
    fn load_rejects_two_objects() {
        let rows = vec![vec![1.0; 10], vec![2.0; 10]];
        let err = load_object_set(&rows, None).unwrap_err();
        assert!(err.to_string().starts_with("need at least 3 objects"));
    }

    #[test]
    fn load_rejects_ragged_rows() {
        let err = set(&[&[1., 2.], &[1.], &[0., 1.]]).unwrap_err();
        assert!(matches!(err, SequencerError::NonRectangular { row: 1, .. }));
    }

    #[test]
    fn default_depth_rule() {
        assert_eq!(default_max_depth(8), 0);
        assert_eq!(default_max_depth(20), 0);
        assert_eq!(default_max_depth(21), 1);
        assert_eq!(default_max_depth(320), 4);
        assert_eq!(default_max_depth(400), 5);
        // ceil(log2(n/20)) evaluated in floating point
        for n in 2..5000usize {
            let x = (n as f64 / 20.0).log2().ceil().max(0.0) as usize;
            assert_eq!(default_max_depth(n), x, "n_pix={n}");
        }
    }

    #[test]
    fn grid_for_400_pixels() {
        let g = build_scale_grid(400, None).unwrap();
        assert_eq!(g.scales(), 0..6);
        let sizes: Vec<usize> = g.segments_at(5).iter().map(|r| r.len()).collect();
        assert_eq!(sizes.len(), 32);
        assert!(sizes.iter().all(|&s| s == 12 || s == 13));
    }

    #[test]
    fn grid_for_8_pixels_is_single_scale() {
        let g = build_scale_grid(8, None).unwrap();
        assert_eq!(g.scales(), 0..1);
        assert_eq!(g.segments_at(0), &[0..8]);
    }

    #[test]
    fn grid_override_splits_evenly() {
        let g = build_scale_grid(7, Some(1)).unwrap();
        assert_eq!(g.segments_at(1), &[0..4, 4..7]);
    }

    #[test]
    fn grid_rejects_too_deep() {
        assert!(build_scale_grid(7, Some(2)).is_err());
        assert!(build_scale_grid(8, Some(2)).is_ok());
        assert!(matches!(
            build_scale_grid(1, None),
            Err(SequencerError::TooFewPixels(1))
        ));
    }

    #[test]
    fn normalize_examples() {
        let s = set(&[&[2., 2., 4.], &[1., 1., 1.], &[0., 3., 1.]]).unwrap();
        let g = build_scale_grid(3, None).unwrap();
        let v = segment_and_normalize(&s, &g, 0, 0, false).unwrap();
        assert_eq!(v.row(0), &[0.25, 0.25, 0.5]);
    }

    #[test]
    fn zero_row_is_degenerate() {
        let s = set(&[&[1., 2., 4.], &[0., 0., 0.], &[0., 3., 1.]]).unwrap();
        let g = build_scale_grid(3, None).unwrap();
        let err = segment_and_normalize(&s, &g, 0, 0, false).unwrap_err();
        assert_eq!(err.to_string(), "degenerate segment for object 1: values sum to zero");
    }

    #[test]
    fn offset_mode_shifts_by_row_minimum() {
        let s = set(&[&[-1., 0., 3.], &[1., 1., 2.], &[0., 3., 1.]]).unwrap();
        let g = build_scale_grid(3, None).unwrap();
        assert!(matches!(
            segment_and_normalize(&s, &g, 0, 0, false),
            Err(SequencerError::NegativeValue { object: 0, pixel: 0, .. })
        ));
        let v = segment_and_normalize(&s, &g, 0, 0, true).unwrap();
        assert_eq!(v.row(0), &[0.0, 0.2, 0.8]);
    }

    #[test]
    fn reordered_and_select() {
        let s = set(&[&[1., 1.], &[2., 2.], &[3., 3.], &[4., 4.]]).unwrap();
        let r = s.reordered(&[3, 1, 0, 2]).unwrap();
        assert_eq!(r.row(0), &[4., 4.]);
        assert_eq!(r.row(3), &[3., 3.]);
        assert!(s.reordered(&[0, 1]).is_err());
        let sub = s.select(&[2, 0, 1]).unwrap();
        assert_eq!(sub.row(0), &[3., 3.]);
    }
}
