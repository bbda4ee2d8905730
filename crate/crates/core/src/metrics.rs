//! Statistical distances between normalized segments and the pairwise matrices built from them.
//!
//! Every metric treats its two inputs as discrete densities over a uniformly
//! sampled index with unit spacing. Euclidean and symmetrized KL ignore the
//! index order; EMD and energy distance act on the cumulative sums and so
//! respond to shifts along the index.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Result, SequencerError};
use crate::dataset::SegmentView;
use crate::scalar::Scalar;

/// Floor applied to every bin before taking logarithms in [`kl_symmetrized`].
pub const KL_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MetricKind {
    Euclidean,
    KlSymmetrized,
    Emd1d,
    Energy1d,
}

impl MetricKind {
    pub const ALL: [MetricKind; 4] = [
        MetricKind::Euclidean,
        MetricKind::KlSymmetrized,
        MetricKind::Emd1d,
        MetricKind::Energy1d,
    ];

    /// Name used on the command line and in report keys.
    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Euclidean => "L2",
            MetricKind::KlSymmetrized => "KL",
            MetricKind::Emd1d => "EMD",
            MetricKind::Energy1d => "energy",
        }
    }

    pub fn eval<T: Scalar>(self, p: &[T], q: &[T]) -> Result<T> {
        match self {
            MetricKind::Euclidean => euclidean(p, q),
            MetricKind::KlSymmetrized => kl_symmetrized(p, q),
            MetricKind::Emd1d => emd_1d(p, q),
            MetricKind::Energy1d => energy_1d(p, q),
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricKind {
    type Err = SequencerError;

    fn from_str(s: &str) -> Result<Self> {
        MetricKind::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| SequencerError::UnknownMetric(s.to_string()))
    }
}

/// Signature of a user-supplied segment distance.
pub type MetricFn<T> = fn(&[T], &[T]) -> Result<T>;

/// A metric the pipeline can run: one of the built-ins, or a function
/// registered at compile time under its own name.
#[derive(Clone, Copy)]
pub enum Metric<T> {
    Builtin(MetricKind),
    Custom { name: &'static str, func: MetricFn<T> },
}

impl<T: Scalar> Metric<T> {
    pub fn name(&self) -> &str {
        match self {
            Metric::Builtin(k) => k.name(),
            Metric::Custom { name, .. } => name,
        }
    }

    pub fn eval(&self, p: &[T], q: &[T]) -> Result<T> {
        match self {
            Metric::Builtin(k) => k.eval(p, q),
            Metric::Custom { func, .. } => func(p, q),
        }
    }

    pub fn defaults() -> Vec<Metric<T>> {
        MetricKind::ALL.into_iter().map(Metric::Builtin).collect()
    }
}

impl<T> From<MetricKind> for Metric<T> {
    fn from(k: MetricKind) -> Self {
        Metric::Builtin(k)
    }
}

impl<T> fmt::Debug for Metric<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Builtin(k) => write!(f, "Builtin({k})"),
            Metric::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

fn check_len<T>(p: &[T], q: &[T]) -> Result<()> {
    if p.len() != q.len() {
        return Err(SequencerError::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    Ok(())
}

pub fn euclidean<T: Scalar>(p: &[T], q: &[T]) -> Result<T> {
    check_len(p, q)?;
    let ss: T = p.iter().zip(q).map(|(&a, &b)| (a - b) * (a - b)).sum();
    Ok(ss.sqrt())
}

fn floored<T: Scalar>(p: &[T]) -> Vec<T> {
    let eps = T::lit(KL_FLOOR);
    let mut out: Vec<T> = p.iter().map(|&v| v.max(eps)).collect();
    let s: T = out.iter().copied().sum();
    out.iter_mut().for_each(|v| *v /= s);
    out
}

fn kl<T: Scalar>(p: &[T], q: &[T]) -> T {
    p.iter().zip(q).map(|(&a, &b)| a * (a / b).ln()).sum()
}

/// Mean of the two directed KL divergences after flooring both inputs at [`KL_FLOOR`].
pub fn kl_symmetrized<T: Scalar>(p: &[T], q: &[T]) -> Result<T> {
    check_len(p, q)?;
    let (p, q) = (floored(p), floored(q));
    let d = (kl(&p, &q) + kl(&q, &p)) / T::lit(2.0);
    Ok(d.max(T::zero()))
}

/// Cumulative sums of `p` and `q`, paired.
fn cdf_pairs<'a, T: Scalar>(p: &'a [T], q: &'a [T]) -> impl Iterator<Item = (T, T)> + 'a {
    p.iter()
        .zip(q)
        .scan((T::zero(), T::zero()), |acc, (&a, &b)| {
            acc.0 += a;
            acc.1 += b;
            Some(*acc)
        })
}

/// One-dimensional earth mover distance: L1 distance between the cumulative sums.
pub fn emd_1d<T: Scalar>(p: &[T], q: &[T]) -> Result<T> {
    check_len(p, q)?;
    Ok(cdf_pairs(p, q).map(|(a, b)| (a - b).abs()).sum())
}

/// One-dimensional energy distance, `sqrt(2 * sum (P - Q)^2)` over the cumulative sums.
pub fn energy_1d<T: Scalar>(p: &[T], q: &[T]) -> Result<T> {
    check_len(p, q)?;
    let ss: T = cdf_pairs(p, q).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((T::lit(2.0) * ss).sqrt())
}

/// What a [`DistanceMatrix`] was computed from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MatrixTag {
    Segment {
        metric: String,
        scale: usize,
        segment: usize,
    },
    Scale {
        metric: String,
        scale: usize,
    },
    Combined,
    Other,
}

/// Dense symmetric matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix<T> {
    n: usize,
    data: Vec<T>,
    pub tag: MatrixTag,
}

impl<T: Scalar> DistanceMatrix<T> {
    /// Wraps a full row-major buffer after checking the matrix invariants.
    pub fn from_dense(n: usize, data: Vec<T>, tag: MatrixTag) -> Result<Self> {
        if data.len() != n * n {
            return Err(SequencerError::SizeMismatch {
                expected: n * n,
                found: data.len(),
            });
        }
        for i in 0..n {
            if data[i * n + i] != T::zero() {
                return Err(SequencerError::InvalidConfig(format!(
                    "distance matrix diagonal entry {i} is nonzero"
                )));
            }
            for j in i + 1..n {
                let (a, b) = (data[i * n + j], data[j * n + i]);
                if a != b || !a.is_finite() || a < T::zero() {
                    return Err(SequencerError::AtPair {
                        i,
                        j,
                        source: Box::new(SequencerError::InvalidConfig(
                            "distance entries must be symmetric, finite and nonnegative".into(),
                        )),
                    });
                }
            }
        }
        Ok(Self { n, data, tag })
    }

    /// Evaluates `f(i, j)` for `i < j` in parallel and mirrors the result.
    pub fn from_fn<F>(n: usize, tag: MatrixTag, f: F) -> Result<Self>
    where
        F: Fn(usize, usize) -> Result<T> + Sync,
    {
        let upper: Vec<Vec<T>> = (0..n)
            .into_par_iter()
            .map(|i| {
                (i + 1..n)
                    .map(|j| {
                        f(i, j).map_err(|e| SequencerError::AtPair {
                            i,
                            j,
                            source: Box::new(e),
                        })
                    })
                    .collect::<Result<Vec<T>>>()
            })
            .collect::<Result<_>>()?;
        let mut data = vec![T::zero(); n * n];
        for (i, row) in upper.into_iter().enumerate() {
            for (off, d) in row.into_iter().enumerate() {
                let j = i + 1 + off;
                data[i * n + j] = d;
                data[j * n + i] = d;
            }
        }
        Ok(Self { n, data, tag })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    /// Mean of the off-diagonal entries.
    pub fn mean_off_diagonal(&self) -> T {
        if self.n < 2 {
            return T::zero();
        }
        let s: T = self.data.iter().copied().sum();
        s / T::from_usize_lossy(self.n * (self.n - 1))
    }
}

/// Pairwise distances between the rows of a normalized segment.
pub fn distance_matrix<T: Scalar>(seg: &SegmentView<T>, metric: &Metric<T>) -> Result<DistanceMatrix<T>> {
    let tag = MatrixTag::Segment {
        metric: metric.name().to_string(),
        scale: seg.scale,
        segment: seg.segment,
    };
    DistanceMatrix::from_fn(seg.n_obj(), tag, |i, j| metric.eval(seg.row(i), seg.row(j)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{build_scale_grid, load_object_set, segment_and_normalize};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn euclidean_examples() {
        let d = euclidean(&[1.0, 0.0, 0.0], &[0.0, 0.0, 1.0]).unwrap();
        assert!(close(d, 2f64.sqrt(), 1e-12));
        assert_eq!(euclidean(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        let d = euclidean(&[0.5, 0.5], &[0.25, 0.75]).unwrap();
        assert!(close(d, 0.125f64.sqrt(), 1e-12));
        assert!(close(d, 0.35355, 1e-5));
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl_symmetrized(&[0.2, 0.8], &[0.2, 0.8]).unwrap(), 0.0);
        // directed sums evaluated by hand: 0.5 ln 2 + 0.5 ln(2/3) and 0.25 ln 0.5 + 0.75 ln 1.5
        let forward = 0.5 * 2f64.ln() + 0.5 * (2.0f64 / 3.0).ln();
        let backward = 0.25 * 0.5f64.ln() + 0.75 * 1.5f64.ln();
        let d = kl_symmetrized(&[0.5, 0.5], &[0.25, 0.75]).unwrap();
        assert!(close(d, (forward + backward) / 2.0, 1e-12));
        assert!(close(d, 0.1373, 5e-5));
    }

    #[test]
    fn kl_disjoint_support_is_finite() {
        let d: f64 = kl_symmetrized(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        // floored inputs: (1-e', e') with e' = 1e-12 / (1 + 1e-12)
        let e = KL_FLOOR / (1.0 + KL_FLOOR);
        let one = 1.0 - e;
        let expected = one * (one / e).ln() + e * (e / one).ln();
        assert!(d.is_finite());
        assert!(close(d, expected, 1e-9), "{d} vs {expected}");
        assert!(d > 27.0);
    }

    #[test]
    fn emd_examples() {
        assert_eq!(emd_1d(&[1.0, 0.0, 0.0], &[0.0, 0.0, 1.0]).unwrap(), 2.0);
        assert_eq!(emd_1d(&[0.1, 0.9], &[0.1, 0.9]).unwrap(), 0.0);
    }

    #[test]
    fn energy_examples() {
        assert_eq!(energy_1d(&[1.0, 0.0, 0.0], &[0.0, 0.0, 1.0]).unwrap(), 2.0);
        assert_eq!(energy_1d(&[0.4, 0.6], &[0.4, 0.6]).unwrap(), 0.0);
        let d = energy_1d(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!(close(d, 2f64.sqrt(), 1e-15));
    }

    #[test]
    fn length_mismatch_is_an_error() {
        for m in MetricKind::ALL {
            assert!(matches!(
                m.eval(&[0.5, 0.5], &[1.0]),
                Err(SequencerError::LengthMismatch { left: 2, right: 1 })
            ));
        }
    }

    #[test]
    fn metric_names_parse() {
        for m in MetricKind::ALL {
            assert_eq!(m.name().parse::<MetricKind>().unwrap(), m);
        }
        assert_eq!("l2".parse::<MetricKind>().unwrap(), MetricKind::Euclidean);
        assert!("cosine".parse::<MetricKind>().is_err());
    }

    #[test]
    fn one_hot_rows_under_emd() {
        let rows = vec![
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
        ];
        let s = load_object_set(&rows, None).unwrap();
        let g = build_scale_grid(4, Some(0)).unwrap();
        let seg = segment_and_normalize(&s, &g, 0, 0, false).unwrap();
        let d = distance_matrix(&seg, &MetricKind::Emd1d.into()).unwrap();
        assert_eq!(d.get(0, 1), 1.0);
        assert_eq!(d.get(0, 2), 3.0);
        assert_eq!(d.get(2, 1), 2.0);
        assert_eq!(d.get(1, 1), 0.0);
    }

    #[test]
    fn identical_rows_have_zero_distance() {
        let rows = vec![vec![1.0, 2.0], vec![1.0, 2.0], vec![2.0, 1.0]];
        let s = load_object_set(&rows, None).unwrap();
        let g = build_scale_grid(2, None).unwrap();
        let seg = segment_and_normalize(&s, &g, 0, 0, false).unwrap();
        for m in MetricKind::ALL {
            let d = distance_matrix(&seg, &m.into()).unwrap();
            assert_eq!(d.get(0, 1), 0.0);
            assert!(d.get(0, 2) > 0.0);
        }
    }

    #[test]
    fn custom_metric_runs_through_matrix() {
        fn linf(p: &[f64], q: &[f64]) -> Result<f64> {
            Ok(p.iter().zip(q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        }
        let m = Metric::Custom { name: "Linf", func: linf };
        let rows = vec![vec![1.0, 3.0], vec![1.0, 1.0], vec![3.0, 1.0]];
        let s = load_object_set(&rows, None).unwrap();
        let g = build_scale_grid(2, None).unwrap();
        let seg = segment_and_normalize(&s, &g, 0, 0, false).unwrap();
        let d = distance_matrix(&seg, &m).unwrap();
        assert_eq!(m.name(), "Linf");
        assert_eq!(d.get(0, 2), 0.5);
    }

    #[test]
    fn from_dense_validates() {
        assert!(DistanceMatrix::from_dense(2, vec![0.0, 1.0, 1.0, 0.0], MatrixTag::Other).is_ok());
        assert!(DistanceMatrix::from_dense(2, vec![0.0, 1.0, 2.0, 0.0], MatrixTag::Other).is_err());
        assert!(DistanceMatrix::from_dense(2, vec![1.0, 1.0, 1.0, 0.0], MatrixTag::Other).is_err());
        assert!(DistanceMatrix::from_dense(2, vec![0.0, -1.0, -1.0, 0.0], MatrixTag::Other).is_err());
    }
}
