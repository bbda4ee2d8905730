//! Seeded synthetic inputs: drifting pulses over a smooth random background,
//! row shuffling, and rank-correlation scoring of recovered orderings.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dataset::ObjectSet;
use crate::error::{Result, SequencerError};
use crate::scalar::Scalar;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Parameters of the drifting-pulse dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseDatasetSpec {
    pub n_obj: usize,
    pub n_pix: usize,
    pub n_pulses: usize,
    /// Gaussian pulse standard deviation, in pixels.
    pub pulse_width: f64,
    pub pulse_height: f64,
    /// Total displacement of every pulse from the first object to the last, in pixels.
    pub drift: f64,
    /// Background standard deviation as a fraction of the pulse height.
    pub background_ratio: f64,
    /// Constant level under the zero-mean background, in background standard
    /// deviations. Values that would still go negative are clipped at zero.
    pub background_baseline: f64,
    /// Squared-exponential correlation length of the background, in pixels.
    pub correlation_length: f64,
    pub seed: u64,
}

impl Default for PulseDatasetSpec {
    fn default() -> Self {
        Self {
            n_obj: 200,
            n_pix: 400,
            n_pulses: 4,
            pulse_width: 2.0,
            pulse_height: 1.0,
            drift: 40.0,
            background_ratio: 0.5,
            background_baseline: 6.0,
            correlation_length: 50.0,
            seed: 0,
        }
    }
}

impl PulseDatasetSpec {
    /// Pulse centers of the object at true position `t`.
    pub fn centers(&self, t: usize) -> Vec<f64> {
        let spacing = self.n_pix as f64 / self.n_pulses as f64;
        let frac = if self.n_obj > 1 {
            t as f64 / (self.n_obj - 1) as f64
        } else {
            0.0
        };
        (0..self.n_pulses)
            .map(|k| spacing * (k as f64 + 0.5) - self.drift / 2.0 + self.drift * frac)
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_obj < 3 || self.n_pix < 2 || self.n_pulses == 0 {
            return Err(SequencerError::InvalidConfig(
                "pulse dataset needs n_obj >= 3, n_pix >= 2 and at least one pulse".into(),
            ));
        }
        if !(self.pulse_width > 0.0) || !(self.pulse_height > 0.0) || !(self.correlation_length > 0.0) {
            return Err(SequencerError::InvalidConfig(
                "pulse width, height and correlation length must be positive".into(),
            ));
        }
        if !(self.drift > 0.0) || !(self.background_ratio >= 0.0) || !(self.background_baseline >= 0.0) {
            return Err(SequencerError::InvalidConfig(
                "drift must be positive, background ratio and baseline nonnegative".into(),
            ));
        }
        let margin = 3.0 * self.pulse_width;
        for t in [0, self.n_obj - 1] {
            for c in self.centers(t) {
                if c - margin < 0.0 || c + margin > (self.n_pix - 1) as f64 {
                    return Err(SequencerError::InvalidConfig(format!(
                        "pulse at {c:.1} overflows the {} pixel range",
                        self.n_pix
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PulseDataset<T> {
    /// Objects in shuffled order.
    pub objects: ObjectSet<T>,
    /// True sequence position of each shuffled row.
    pub true_rank: Vec<usize>,
}

/// Lower Cholesky factor of a squared-exponential covariance over `n` unit-spaced points.
fn background_factor(n: usize, length: f64) -> DMatrix<f64> {
    let jitter = 1e-6;
    let k = DMatrix::from_fn(n, n, |i, j| {
        let d = i as f64 - j as f64;
        (-d * d / (2.0 * length * length)).exp() + if i == j { jitter } else { 0.0 }
    });
    k.cholesky().expect("jittered covariance is positive definite").l()
}

/// Objects whose pulses drift linearly with their true position, each on top of
/// its own smooth background draw. Rows come back shuffled.
pub fn generate_pulse_dataset<T: Scalar>(spec: &PulseDatasetSpec) -> Result<PulseDataset<T>> {
    spec.validate()?;
    let mut rng = rng(spec.seed);
    let chol = background_factor(spec.n_pix, spec.correlation_length);
    let amp = spec.background_ratio * spec.pulse_height;
    let two_var = 2.0 * spec.pulse_width * spec.pulse_width;

    let mut ordered = Vec::with_capacity(spec.n_obj * spec.n_pix);
    for t in 0..spec.n_obj {
        let z = DMatrix::from_fn(spec.n_pix, 1, |_, _| StandardNormal.sample(&mut rng));
        let g = &chol * z;
        let centers = spec.centers(t);
        for i in 0..spec.n_pix {
            let pulses: f64 = centers
                .iter()
                .map(|&c| {
                    let d = i as f64 - c;
                    spec.pulse_height * (-d * d / two_var).exp()
                })
                .sum();
            let background = (amp * (g[i] + spec.background_baseline)).max(0.0);
            ordered.push(background + pulses);
        }
    }
    let ordered: Vec<T> = ordered.into_iter().map(T::lit).collect();
    let ordered = ObjectSet::from_flat(spec.n_obj, spec.n_pix, ordered, None)?;

    let mut perm: Vec<usize> = (0..spec.n_obj).collect();
    perm.shuffle(&mut rng);
    let objects = ordered.reordered(&perm)?;
    Ok(PulseDataset {
        objects,
        true_rank: perm,
    })
}

/// Seeded uniform row shuffle. Row `r` of the output is row `perm[r]` of the input.
pub fn shuffle_rows<T: Scalar>(image: &ObjectSet<T>, seed: u64) -> Result<(ObjectSet<T>, Vec<usize>)> {
    let mut perm: Vec<usize> = (0..image.n_obj()).collect();
    perm.shuffle(&mut rng(seed));
    Ok((image.reordered(&perm)?, perm))
}

pub fn invert_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}

/// Spearman correlation of two rankings of the same `n` items (no ties).
pub fn spearman_ranks(x: &[usize], y: &[usize]) -> f64 {
    assert_eq!(x.len(), y.len(), "rankings must have equal length");
    let n = x.len() as f64;
    if x.len() < 2 {
        return 1.0;
    }
    let d2: f64 = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| {
            let d = a as f64 - b as f64;
            d * d
        })
        .sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}

/// Spearman correlation between the position of each object in `ordering` and
/// its `true_rank`.
pub fn ordering_correlation(ordering: &[usize], true_rank: &[usize]) -> f64 {
    let recovered: Vec<usize> = ordering.iter().map(|&j| true_rank[j]).collect();
    let positions: Vec<usize> = (0..ordering.len()).collect();
    spearman_ranks(&positions, &recovered)
}

/// Spearman correlation between the positions objects take in two orderings.
pub fn orderings_agreement(a: &[usize], b: &[usize]) -> f64 {
    spearman_ranks(&invert_permutation(a), &invert_permutation(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> PulseDatasetSpec {
        PulseDatasetSpec {
            n_obj: 20,
            n_pix: 80,
            n_pulses: 2,
            drift: 10.0,
            ..PulseDatasetSpec::default()
        }
    }

    #[test]
    fn default_shape() {
        let d = generate_pulse_dataset::<f64>(&PulseDatasetSpec::default()).unwrap();
        assert_eq!((d.objects.n_obj(), d.objects.n_pix()), (200, 400));
        assert!(d.objects.values().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn same_seed_same_bits() {
        let a = generate_pulse_dataset::<f64>(&small_spec()).unwrap();
        let b = generate_pulse_dataset::<f64>(&small_spec()).unwrap();
        assert_eq!(a.objects, b.objects);
        assert_eq!(a.true_rank, b.true_rank);
        let c = generate_pulse_dataset::<f64>(&PulseDatasetSpec { seed: 1, ..small_spec() }).unwrap();
        assert_ne!(a.objects, c.objects);
    }

    #[test]
    fn centers_drift_monotonically() {
        let s = PulseDatasetSpec::default();
        for t in 1..s.n_obj {
            for (a, b) in s.centers(t - 1).iter().zip(s.centers(t)) {
                assert!(b > *a);
            }
        }
    }

    #[test]
    fn overflowing_pulses_are_rejected() {
        let s = PulseDatasetSpec {
            drift: 120.0,
            ..PulseDatasetSpec::default()
        };
        assert!(generate_pulse_dataset::<f64>(&s).is_err());
    }

    #[test]
    fn shuffle_composes_back() {
        let d = generate_pulse_dataset::<f64>(&small_spec()).unwrap();
        let (shuffled, perm) = shuffle_rows(&d.objects, 9).unwrap();
        let back = shuffled.reordered(&invert_permutation(&perm)).unwrap();
        assert_eq!(back, d.objects);
        for (r, &p) in perm.iter().enumerate() {
            assert_eq!(shuffled.row(r), d.objects.row(p));
        }
    }

    #[test]
    fn two_row_shuffle_is_a_permutation() {
        let s = ObjectSet::from_flat(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], None).unwrap();
        let (_, p) = shuffle_rows(&s, 5).unwrap();
        let mut sorted = p.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![0, 1, 2]);
    }

    #[test]
    fn spearman_extremes() {
        let p = vec![3, 0, 2, 1, 4];
        assert_eq!(spearman_ranks(&p, &p), 1.0);
        let rev: Vec<usize> = p.iter().map(|&r| 4 - r).collect();
        assert_eq!(spearman_ranks(&p, &rev), -1.0);
        let order = vec![4, 2, 0, 1, 3];
        let mut reversed = order.clone();
        reversed.reverse();
        let truth = invert_permutation(&order);
        assert_eq!(ordering_correlation(&order, &truth), 1.0);
        assert_eq!(ordering_correlation(&reversed, &truth), -1.0);
    }
}
