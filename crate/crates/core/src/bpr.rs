//! Bayesian policy reuse: performance models, BPR-EI selection and belief
//! updates.
//!
//! A [`PerfMatrix`] is indexed `(row, col)` where rows are the hypotheses a
//! belief ranges over and columns the policies one can play. For the agent
//! rows are opponent strategies J and columns its own policies Π. The
//! opponent's view swaps the two and negates the returns.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::GameSpec;
use crate::policies::{evaluate, StrategyLibrary};
use crate::prob::{self, fit_gaussian, Belief, GaussianPerfModel};
use crate::rng::SimRng;

/// Two expected-improvement masses closer than this count as a tie.
const EI_TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerfMatrix {
    n_rows: usize,
    n_cols: usize,
    models: Vec<GaussianPerfModel>,
    /// Empirical (win, loss) frequencies of the column player, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    outcomes: Option<Vec<(f64, f64)>>,
    zero_sum: bool,
}

impl PerfMatrix {
    /// Builds a matrix from rows of models.
    pub fn from_rows(rows: Vec<Vec<GaussianPerfModel>>, zero_sum: bool) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::InvalidParameter("empty performance matrix".into()));
        }
        for r in &rows {
            if r.len() != n_cols {
                return Err(Error::DimensionMismatch {
                    expected: n_cols,
                    got: r.len(),
                });
            }
        }
        if rows.iter().flatten().any(|m| !(m.stddev > 0.0) || !m.mean.is_finite()) {
            return Err(Error::InvalidParameter(
                "performance models need a finite mean and positive stddev".into(),
            ));
        }
        Ok(Self {
            n_rows,
            n_cols,
            models: rows.into_iter().flatten().collect(),
            outcomes: None,
            zero_sum,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn is_zero_sum(&self) -> bool {
        self.zero_sum
    }

    pub fn model(&self, row: usize, col: usize) -> &GaussianPerfModel {
        &self.models[row * self.n_cols + col]
    }

    pub fn mean(&self, row: usize, col: usize) -> f64 {
        self.model(row, col).mean
    }

    /// Win frequency of the column player at `(row, col)`, if recorded.
    pub fn win_rate(&self, row: usize, col: usize) -> Option<f64> {
        self.outcomes.as_ref().map(|o| o[row * self.n_cols + col].0)
    }

    /// Column player's win frequencies, one row per hypothesis.
    pub fn win_rates(&self) -> Option<Vec<Vec<f64>>> {
        self.outcomes.as_ref()?;
        Some(
            (0..self.n_rows)
                .map(|r| (0..self.n_cols).map(|c| self.win_rate(r, c).unwrap()).collect())
                .collect(),
        )
    }

    fn with_outcomes(mut self, outcomes: Vec<(f64, f64)>) -> Self {
        debug_assert_eq!(outcomes.len(), self.models.len());
        self.outcomes = Some(outcomes);
        self
    }

    /// Copy with one more row and one more column. `row` holds the new
    /// hypothesis against the old columns plus the new one; `col` holds the
    /// old hypotheses against the new column.
    pub fn extended(
        &self,
        row: Vec<(GaussianPerfModel, (f64, f64))>,
        col: Vec<(GaussianPerfModel, (f64, f64))>,
    ) -> Result<Self> {
        if row.len() != self.n_cols + 1 {
            return Err(Error::DimensionMismatch {
                expected: self.n_cols + 1,
                got: row.len(),
            });
        }
        if col.len() != self.n_rows {
            return Err(Error::DimensionMismatch {
                expected: self.n_rows,
                got: col.len(),
            });
        }
        let n_cols = self.n_cols + 1;
        let mut models = Vec::with_capacity((self.n_rows + 1) * n_cols);
        let mut outcomes = Vec::with_capacity(models.capacity());
        let old = self.outcomes.clone();
        for r in 0..self.n_rows {
            for c in 0..self.n_cols {
                models.push(*self.model(r, c));
                outcomes.push(old.as_ref().map_or((f64::NAN, f64::NAN), |o| o[r * self.n_cols + c]));
            }
            models.push(col[r].0);
            outcomes.push(col[r].1);
        }
        for (m, o) in row {
            models.push(m);
            outcomes.push(o);
        }
        Ok(Self {
            n_rows: self.n_rows + 1,
            n_cols,
            models,
            outcomes: Some(outcomes),
            zero_sum: self.zero_sum,
        })
    }
}

/// Fits one Gaussian per (opponent strategy, own policy) pair from
/// `episodes_per_pair` simulated episodes. Rows follow `opponents`, columns
/// follow `own`. Pairs are simulated in parallel on their own streams.
pub fn estimate_perf_models(
    spec: &GameSpec,
    own: &StrategyLibrary,
    opponents: &StrategyLibrary,
    episodes_per_pair: usize,
    sigma_floor: f64,
    rng: &SimRng,
) -> Result<PerfMatrix> {
    if own.is_empty() || opponents.is_empty() {
        return Err(Error::InvalidParameter("libraries must be nonempty".into()));
    }
    if episodes_per_pair < 2 {
        return Err(Error::TooFewSamples(episodes_per_pair));
    }
    let n_cols = own.len();
    let cells: Result<Vec<(GaussianPerfModel, (f64, f64))>> = (0..opponents.len() * n_cols)
        .into_par_iter()
        .map(|k| {
            let (j, pi) = (k / n_cols, k % n_cols);
            let mut r = rng.fork_indexed("perf", k as u64);
            fit_pair(spec, own, opponents, pi, j, episodes_per_pair, sigma_floor, &mut r)
        })
        .collect();
    let cells = cells?;
    let (models, outcomes): (Vec<_>, Vec<_>) = cells.into_iter().unzip();
    let rows = models.chunks(n_cols).map(<[_]>::to_vec).collect();
    Ok(PerfMatrix::from_rows(rows, spec.is_zero_sum())?.with_outcomes(outcomes))
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn fit_pair(
    spec: &GameSpec,
    own: &StrategyLibrary,
    opponents: &StrategyLibrary,
    pi: usize,
    j: usize,
    episodes: usize,
    sigma_floor: f64,
    rng: &mut SimRng,
) -> Result<(GaussianPerfModel, (f64, f64))> {
    let returns = evaluate(spec, own.get(pi), opponents.get(j), episodes, rng)?;
    let n = returns.len() as f64;
    let wins = returns.iter().filter(|r| **r > 0.0).count() as f64 / n;
    let losses = returns.iter().filter(|r| **r < 0.0).count() as f64 / n;
    Ok((fit_gaussian(&returns, sigma_floor)?, (wins, losses)))
}

/// The opponent's view of a zero-sum matrix: transposed, means negated,
/// spreads kept, win and loss frequencies swapped.
pub fn derive_opponent_models(perf_self: &PerfMatrix) -> Result<PerfMatrix> {
    if !perf_self.zero_sum {
        return Err(Error::NotZeroSum);
    }
    let (r, c) = (perf_self.n_rows, perf_self.n_cols);
    let mut models = Vec::with_capacity(r * c);
    let mut outcomes = perf_self.outcomes.as_ref().map(|_| Vec::with_capacity(r * c));
    for col in 0..c {
        for row in 0..r {
            let m = perf_self.model(row, col);
            models.push(GaussianPerfModel::new(-m.mean, m.stddev));
            if let (Some(out), Some(src)) = (outcomes.as_mut(), perf_self.outcomes.as_ref()) {
                let (w, l) = src[row * c + col];
                out.push((l, w));
            }
        }
    }
    Ok(PerfMatrix {
        n_rows: c,
        n_cols: r,
        models,
        outcomes,
        zero_sum: true,
    })
}

fn check_dims(weights: &[f64], perf: &PerfMatrix) -> Result<()> {
    if weights.len() != perf.n_rows {
        return Err(Error::DimensionMismatch {
            expected: perf.n_rows,
            got: weights.len(),
        });
    }
    Ok(())
}

/// Belief-weighted mean return of every column.
pub fn expected_returns(weights: &[f64], perf: &PerfMatrix) -> Result<Vec<f64>> {
    check_dims(weights, perf)?;
    Ok((0..perf.n_cols)
        .map(|c| weights.iter().enumerate().map(|(r, w)| w * perf.mean(r, c)).sum())
        .collect())
}

/// Best belief-weighted expected return over all columns.
pub fn expected_best(weights: &[f64], perf: &PerfMatrix) -> Result<f64> {
    Ok(expected_returns(weights, perf)?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Probability mass each column puts on returns in `[u_bar, u_max]`, mixed
/// over rows by `weights`.
pub fn ei_masses(weights: &[f64], perf: &PerfMatrix, u_max: f64) -> Result<Vec<f64>> {
    let u_bar = expected_best(weights, perf)?;
    Ok((0..perf.n_cols)
        .map(|c| {
            weights
                .iter()
                .enumerate()
                .map(|(r, w)| {
                    let m = perf.model(r, c);
                    w * (m.cdf(u_max) - m.cdf(u_bar)).max(0.0)
                })
                .sum()
        })
        .collect())
}

/// BPR-EI choice for arbitrary nonnegative row weights.
///
/// Columns whose masses tie are ranked by belief-weighted mean return, then
/// by index. The mean tie-break matters once the belief is concentrated:
/// every mass is then essentially zero and the lowest index would otherwise
/// win regardless of the matrix.
pub fn ei_select(weights: &[f64], perf: &PerfMatrix, u_max: f64) -> Result<usize> {
    let masses = ei_masses(weights, perf, u_max)?;
    let means = expected_returns(weights, perf)?;
    let top = masses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut best: Option<usize> = None;
    for (c, m) in masses.iter().enumerate() {
        if top - m > EI_TIE_TOL {
            continue;
        }
        match best {
            Some(b) if means[c] <= means[b] => {}
            _ => best = Some(c),
        }
    }
    Ok(best.expect("matrix has at least one column"))
}

pub fn bpr_ei_select(belief: &Belief, perf: &PerfMatrix, u_max: f64) -> Result<usize> {
    ei_select(belief.weights(), perf, u_max)
}

/// Posterior over rows after observing `signal` while playing column
/// `played`. Likelihoods are combined in log space so that very unlikely
/// signals do not underflow every weight to zero.
pub fn belief_update(
    belief: &Belief,
    perf: &PerfMatrix,
    played: usize,
    signal: f64,
    floor: f64,
) -> Result<Belief> {
    check_dims(belief.weights(), perf)?;
    if played >= perf.n_cols {
        return Err(Error::DimensionMismatch {
            expected: perf.n_cols,
            got: played + 1,
        });
    }
    let logs: Vec<f64> = belief
        .weights()
        .iter()
        .enumerate()
        .map(|(r, w)| w.ln() + perf.model(r, played).ln_pdf(signal))
        .collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return Err(Error::DegenerateBelief);
    }
    let weights: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    prob::normalize(&weights, floor)
}

/// Performance models for both players of a zero-sum game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BprContext {
    /// Rows J, columns Π.
    pub perf_self: PerfMatrix,
    /// Rows Π, columns J.
    pub perf_oppo: PerfMatrix,
    pub u_max: f64,
}

impl BprContext {
    pub fn new(perf_self: PerfMatrix, u_max: f64) -> Result<Self> {
        let perf_oppo = derive_opponent_models(&perf_self)?;
        Ok(Self {
            perf_self,
            perf_oppo,
            u_max,
        })
    }

    pub fn n_strategies(&self) -> usize {
        self.perf_self.n_rows()
    }

    pub fn n_policies(&self) -> usize {
        self.perf_self.n_cols()
    }
}
