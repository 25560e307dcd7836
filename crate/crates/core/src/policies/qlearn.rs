//! Tabular Q-learning of best responses to fixed opponent strategies.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{QTable, StrategyLibrary, TabularPolicy};
use crate::error::{Error, Result};
use crate::games::{self, Action, GameSpec};
use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QLearnParams {
    pub alpha: f64,
    pub gamma: f64,
    /// Exploration rate at the first episode, annealed linearly...
    pub epsilon_start: f64,
    /// ...down to this value at the last one.
    pub epsilon_end: f64,
    pub episodes: usize,
    /// Value of every action in a state before its first update. Setting it
    /// to the best achievable return makes the learner try each action
    /// before settling on draws.
    pub q_init: f64,
}

impl Default for QLearnParams {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            gamma: 0.9,
            epsilon_start: 0.1,
            epsilon_end: 0.01,
            episodes: 50_000,
            q_init: 1.0,
        }
    }
}

impl QLearnParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad(format!("alpha {} must lie in (0, 1]", self.alpha));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad(format!("gamma {} must lie in (0, 1]", self.gamma));
        }
        for e in [self.epsilon_start, self.epsilon_end] {
            if !(0.0..=1.0).contains(&e) {
                return bad(format!("epsilon {e} must lie in [0, 1]"));
            }
        }
        if !self.q_init.is_finite() {
            return bad(format!("q_init {} must be finite", self.q_init));
        }
        if self.episodes == 0 {
            return bad("episodes must be positive".into());
        }
        Ok(())
    }

    fn epsilon(&self, episode: usize) -> f64 {
        if self.episodes <= 1 {
            return self.epsilon_end;
        }
        let t = episode as f64 / (self.episodes - 1) as f64;
        self.epsilon_start + t * (self.epsilon_end - self.epsilon_start)
    }
}

/// Learns a greedy policy against a fixed opponent strategy.
pub fn q_learn_best_response(
    spec: &GameSpec,
    opponent: &TabularPolicy,
    params: &QLearnParams,
    rng: &mut SimRng,
) -> Result<TabularPolicy> {
    params.validate()?;
    let n_actions = spec.n_actions();
    let mut q = QTable::with_init(n_actions, params.q_init);
    for episode in 0..params.episodes {
        let eps = params.epsilon(episode);
        let mut s = games::reset(spec, rng);
        loop {
            let si = games::state_index(spec, &s);
            let a = if rng.gen::<f64>() < eps {
                Action(rng.gen_range(0..n_actions) as u8)
            } else {
                q.greedy(si)
            };
            let b = opponent.act(spec, &s, rng)?;
            let out = games::step(spec, &s, a, b)?;
            let target = match out.terminal {
                Some(r) => r,
                None => params.gamma * q.max(games::state_index(spec, &out.next)),
            };
            let cell = &mut q.row_mut(si)[a.index()];
            *cell += params.alpha * (target - *cell);
            if out.terminal.is_some() {
                break;
            }
            s = out.next;
        }
    }
    Ok(TabularPolicy::greedy(format!("br-{}", opponent.id), q))
}

/// One best response per opponent strategy, trained in parallel. Entry `i`
/// answers `opponents.get(i)`; each pairing draws from its own stream so the
/// result does not depend on thread scheduling.
pub fn build_response_library(
    spec: &GameSpec,
    opponents: &StrategyLibrary,
    params: &QLearnParams,
    rng: &SimRng,
) -> Result<StrategyLibrary> {
    params.validate()?;
    let policies: Result<Vec<TabularPolicy>> = (0..opponents.len())
        .into_par_iter()
        .map(|i| {
            let mut r = rng.fork_indexed("q-learn", i as u64);
            q_learn_best_response(spec, opponents.get(i), params, &mut r)
        })
        .collect();
    StrategyLibrary::from_policies(spec.id, policies?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::GameId;
    use crate::policies::{evaluate, scripted_library};

    fn small() -> QLearnParams {
        QLearnParams {
            episodes: 2_000,
            ..QLearnParams::default()
        }
    }

    #[test]
    fn rejects_bad_params() {
        let p = QLearnParams {
            gamma: 0.0,
            ..QLearnParams::default()
        };
        assert!(p.validate().is_err());
        let p = QLearnParams {
            gamma: 1.5,
            ..QLearnParams::default()
        };
        assert!(p.validate().is_err());
        assert!(QLearnParams { episodes: 0, ..small() }.validate().is_err());
    }

    #[test]
    fn rps_best_responses_beat_their_strategy() {
        let spec = GameSpec::new(GameId::Rps);
        let lib = scripted_library(&spec);
        let br = build_response_library(&spec, &lib, &small(), &SimRng::new(1)).unwrap();
        let expected = [Action::PAPER, Action::SCISSORS, Action::ROCK];
        let s = games::reset(&spec, &mut SimRng::new(0));
        for (i, a) in expected.iter().enumerate() {
            assert_eq!(br.get(i).act(&spec, &s, &mut SimRng::new(0)).unwrap(), *a);
        }
    }

    #[test]
    fn training_is_deterministic() {
        let spec = GameSpec::new(GameId::Soccer);
        let lib = scripted_library(&spec);
        let a = build_response_library(&spec, &lib, &small(), &SimRng::new(9)).unwrap();
        let b = build_response_library(&spec, &lib, &small(), &SimRng::new(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn epsilon_anneals_linearly() {
        let p = QLearnParams {
            episodes: 11,
            ..QLearnParams::default()
        };
        assert!((p.epsilon(0) - 0.1).abs() < 1e-12);
        assert!((p.epsilon(10) - 0.01).abs() < 1e-12);
        assert!((p.epsilon(5) - 0.055).abs() < 1e-12);
    }

    #[test]
    fn soccer_response_wins_against_its_route() {
        let spec = GameSpec::new(GameId::Soccer);
        let lib = scripted_library(&spec);
        let params = QLearnParams::default();
        let br = q_learn_best_response(&spec, lib.get(0), &params, &mut SimRng::new(2)).unwrap();
        let returns = evaluate(&spec, &br, lib.get(0), 1000, &mut SimRng::new(3)).unwrap();
        let wins = returns.iter().filter(|r| **r > 0.0).count();
        assert!(wins >= 900, "won {wins}/1000");
    }
}
