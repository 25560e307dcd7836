//! Beliefs over libraries and the Gaussian performance models.

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Floor applied to every belief weight so that no library entry is ever
/// ruled out for good.
///
/// With |J| entries a belief can concentrate at most `1 - (|J|-1)·floor` on
/// one entry, so the floor has to stay well below `0.05 / |J|` for the
/// 24-strategy thieves-and-hunters library to reach a 0.95 posterior.
pub const DEFAULT_BELIEF_FLOOR: f64 = 0.001;

/// Smallest standard deviation a fitted performance model may have.
pub const DEFAULT_SIGMA_FLOOR: f64 = 0.05;

/// Probability distribution over the entries of a policy or strategy library.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Belief {
    weights: Vec<f64>,
}

impl Belief {
    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "belief over an empty library");
        Self {
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.weights[i]
    }

    /// Index of the largest weight, lowest index on ties.
    pub fn argmax(&self) -> usize {
        argmax(&self.weights)
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        self.weights
            .iter()
            .filter(|w| **w > 0.0)
            .map(|w| -w * w.ln())
            .sum()
    }
}

/// Draws a belief from the flat Dirichlet distribution, floored like
/// [`normalize`].
pub fn random_belief<R: Rng + ?Sized>(n: usize, floor: f64, rng: &mut R) -> Result<Belief> {
    let w: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    normalize(&w, floor)
}

/// Turns nonnegative weights into a [`Belief`] whose entries are all at least
/// `floor`.
///
/// Entries whose normalized share falls below the floor are pinned to it and
/// the remaining mass is shared among the other entries in proportion to
/// their weights. Pinning can push further entries under the floor, so this
/// repeats until stable. The result is idempotent and sums to one.
pub fn normalize(weights: &[f64], floor: f64) -> Result<Belief> {
    let n = weights.len();
    if n == 0 {
        return Err(Error::DegenerateBelief);
    }
    if !(0.0..1.0 / n as f64).contains(&floor) {
        return Err(Error::InvalidParameter(format!(
            "belief floor {floor} must lie in [0, 1/{n})"
        )));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidParameter(
            "belief weights must be finite and nonnegative".into(),
        ));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::DegenerateBelief);
    }

    let shares: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let mut pinned = vec![false; n];
    let mut out = shares.clone();
    loop {
        let n_pinned = pinned.iter().filter(|p| **p).count();
        let free_mass = 1.0 - n_pinned as f64 * floor;
        let free_share: f64 = shares
            .iter()
            .zip(&pinned)
            .filter(|(_, p)| !**p)
            .map(|(s, _)| s)
            .sum();
        let mut changed = false;
        for i in 0..n {
            if pinned[i] {
                out[i] = floor;
                continue;
            }
            out[i] = if free_share > 0.0 {
                shares[i] * free_mass / free_share
            } else {
                free_mass / (n - n_pinned) as f64
            };
            if out[i] < floor {
                pinned[i] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Ok(Belief { weights: out })
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Gaussian over the episodic return of one (opponent strategy, own policy)
/// pairing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPerfModel {
    pub mean: f64,
    pub stddev: f64,
}

impl GaussianPerfModel {
    pub fn new(mean: f64, stddev: f64) -> Self {
        debug_assert!(stddev > 0.0);
        Self { mean, stddev }
    }

    pub fn pdf(&self, u: f64) -> f64 {
        gaussian_pdf(u, self)
    }

    pub fn ln_pdf(&self, u: f64) -> f64 {
        let z = (u - self.mean) / self.stddev;
        -0.5 * z * z - self.stddev.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
    }

    pub fn cdf(&self, u: f64) -> f64 {
        gaussian_cdf(u, self)
    }
}

pub fn gaussian_pdf(u: f64, m: &GaussianPerfModel) -> f64 {
    let z = (u - m.mean) / m.stddev;
    (-0.5 * z * z).exp() / (m.stddev * (2.0 * std::f64::consts::PI).sqrt())
}

pub fn gaussian_cdf(u: f64, m: &GaussianPerfModel) -> f64 {
    if u == f64::INFINITY {
        return 1.0;
    }
    if u == f64::NEG_INFINITY {
        return 0.0;
    }
    let z = (u - m.mean) / m.stddev;
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Sample mean and (n-1) sample standard deviation, floored at `sigma_floor`.
pub fn fit_gaussian(samples: &[f64], sigma_floor: f64) -> Result<GaussianPerfModel> {
    if samples.len() < 2 {
        return Err(Error::TooFewSamples(samples.len()));
    }
    if sigma_floor <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "sigma floor {sigma_floor} must be positive"
        )));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(GaussianPerfModel::new(mean, var.sqrt().max(sigma_floor)))
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn normalize_examples() {
        let b = normalize(&[2.0, 2.0], 0.0).unwrap();
        assert_eq!(b.weights(), &[0.5, 0.5]);

        let b = normalize(&[1.0, 0.0, 0.0], 0.01).unwrap();
        assert!(close(b.get(0), 0.98, 1e-12));
        assert!(close(b.get(1), 0.01, 1e-12));
        assert!(close(b.get(2), 0.01, 1e-12));

        assert!(matches!(
            normalize(&[0.0, 0.0], 0.0),
            Err(Error::DegenerateBelief)
        ));
    }

    #[test]
    fn normalize_rejects_bad_floor() {
        assert!(normalize(&[1.0, 1.0], 0.5).is_err());
        assert!(normalize(&[1.0, 1.0], -0.1).is_err());
    }

    #[test]
    fn cascading_floor() {
        // Pinning the last two entries rescales 0.21 down to 0.13, which
        // then has to be pinned as well.
        let b = normalize(&[0.76, 0.21, 0.03, 0.0], 0.2).unwrap();
        for w in b.weights() {
            assert!(*w >= 0.2 - 1e-15);
        }
        assert!(close(b.weights().iter().sum(), 1.0, 1e-12));
        assert!(close(b.get(0), 0.4, 1e-12));
        assert!(close(b.get(1), 0.2, 1e-12));
    }

    #[test]
    fn gaussian_values() {
        let m = GaussianPerfModel::new(0.0, 1.0);
        assert!(close(gaussian_pdf(0.0, &m), 0.398_942_280_4, 1e-9));
        assert!(close(gaussian_cdf(0.0, &m), 0.5, 1e-15));
        assert!(close(gaussian_cdf(1.0, &m), 0.841_344_746_1, 1e-9));
        assert_eq!(gaussian_cdf(f64::NEG_INFINITY, &m), 0.0);
        assert_eq!(gaussian_cdf(f64::INFINITY, &m), 1.0);
        assert!(close(m.ln_pdf(0.7), gaussian_pdf(0.7, &m).ln(), 1e-12));
    }

    #[test]
    fn fit_examples() {
        let m = fit_gaussian(&[1.0, 1.0, 1.0, 1.0], 0.05).unwrap();
        assert_eq!(m.mean, 1.0);
        assert_eq!(m.stddev, 0.05);

        let m = fit_gaussian(&[1.0, -1.0], 0.05).unwrap();
        assert_eq!(m.mean, 0.0);
        assert!(close(m.stddev, 2f64.sqrt(), 1e-12));

        assert!(matches!(fit_gaussian(&[], 0.05), Err(Error::TooFewSamples(0))));
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(w in prop::collection::vec(0.0f64..10.0, 1..12), floor_frac in 0.0f64..0.9) {
            prop_assume!(w.iter().sum::<f64>() > 1e-9);
            let floor = floor_frac / w.len() as f64;
            let once = normalize(&w, floor).unwrap();
            let twice = normalize(once.weights(), floor).unwrap();
            for (a, b) in once.weights().iter().zip(twice.weights()) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
            prop_assert!((once.weights().iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            for x in once.weights() {
                prop_assert!(*x >= floor - 1e-12 && *x <= 1.0 + 1e-12);
            }
        }

        #[test]
        fn argmax_survives_scaling(w in prop::collection::vec(0.0f64..10.0, 1..12), k in 0.01f64..100.0) {
            prop_assume!(w.iter().sum::<f64>() > 1e-9);
            let scaled: Vec<f64> = w.iter().map(|x| x * k).collect();
            let a = normalize(&w, 0.0).unwrap();
            let b = normalize(&scaled, 0.0).unwrap();
            prop_assert_eq!(a.argmax(), b.argmax());
        }

        #[test]
        fn pdf_is_symmetric(mu in -2.0f64..2.0, sigma in 0.05f64..3.0, d in 0.0f64..5.0) {
            let m = GaussianPerfModel::new(mu, sigma);
            prop_assert!((m.pdf(mu + d) - m.pdf(mu - d)).abs() <= 1e-12);
        }

        #[test]
        fn cdf_window_is_probability(mu in -2.0f64..2.0, sigma in 0.05f64..3.0, lo in -3.0f64..1.0, gap in 0.0f64..3.0) {
            let m = GaussianPerfModel::new(mu, sigma);
            let mass = m.cdf(lo + gap) - m.cdf(lo);
            prop_assert!((0.0..=1.0).contains(&mass));
        }
    }
}
