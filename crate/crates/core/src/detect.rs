//! Detecting an opponent strategy outside the library, learning a response
//! to it with R-max, and growing the libraries and models afterwards.

use std::collections::{BTreeMap, VecDeque};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bpr::{fit_pair, BprContext};
use crate::error::{Error, Result};
use crate::games::{self, Action, GameSpec};
use crate::policies::{QTable, StochasticTable, StrategyLibrary, TabularPolicy};
use crate::rng::SimRng;

/// Win-rate monitor over the last `h` episodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionState {
    pub h: usize,
    pub delta: f64,
    pub memory: VecDeque<bool>,
    pub triggered: bool,
}

impl DetectionState {
    pub fn new(h: usize, delta: f64) -> Result<Self> {
        if h == 0 {
            return Err(Error::InvalidParameter("h must be positive".into()));
        }
        Ok(Self {
            h,
            delta,
            memory: VecDeque::with_capacity(h),
            triggered: false,
        })
    }

    /// Mean of the memory once it is full.
    pub fn theta(&self) -> Option<f64> {
        (self.memory.len() == self.h)
            .then(|| self.memory.iter().filter(|w| **w).count() as f64 / self.h as f64)
    }

    /// Records one outcome; true when θ has dropped strictly below δ.
    pub fn observe(&mut self, won: bool) -> bool {
        if self.memory.len() == self.h {
            self.memory.pop_front();
        }
        self.memory.push_back(won);
        self.triggered = self.theta().is_some_and(|t| t < self.delta);
        self.triggered
    }

    pub fn reset(&mut self) {
        self.memory.clear();
        self.triggered = false;
    }
}

/// Lowest win rate any policy reaches against the strategy it answers best:
/// min over columns of the column maximum. Rows are opponent strategies.
pub fn delta_upper_bound(win_rates: &[Vec<f64>]) -> Result<f64> {
    let n_cols = win_rates.first().map_or(0, Vec::len);
    if n_cols == 0 {
        return Err(Error::InvalidParameter("empty win-rate matrix".into()));
    }
    if let Some(r) = win_rates.iter().find(|r| r.len() != n_cols) {
        return Err(Error::DimensionMismatch {
            expected: n_cols,
            got: r.len(),
        });
    }
    Ok((0..n_cols)
        .map(|c| win_rates.iter().map(|r| r[c]).fold(f64::NEG_INFINITY, f64::max))
        .fold(f64::INFINITY, f64::min))
}

/// Stand-in successor for episode ends. It is absorbing with value 0.
pub const TERMINAL: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RmaxParams {
    /// Visits after which a state-action pair counts as known.
    pub n: u32,
    pub gamma: f64,
    /// Exploration rate while learning.
    pub epsilon: f64,
    /// Best achievable per-step reward.
    pub u_opt: f64,
    /// Learning stops once the win rate over this many episodes reaches δ.
    pub window: usize,
    pub max_episodes: usize,
    pub vi_tolerance: f64,
    pub vi_max_iterations: usize,
}

impl Default for RmaxParams {
    fn default() -> Self {
        Self {
            n: 5,
            gamma: 0.9,
            epsilon: 0.1,
            u_opt: 1.0,
            window: 100,
            max_episodes: 50_000,
            vi_tolerance: 1e-6,
            vi_max_iterations: 100_000,
        }
    }
}

impl RmaxParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return bad(format!("gamma {} must lie in [0, 1)", self.gamma));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad(format!("epsilon {} must lie in [0, 1]", self.epsilon));
        }
        if self.window == 0 || self.max_episodes == 0 {
            return bad("window and max_episodes must be positive".into());
        }
        if !(self.vi_tolerance > 0.0) {
            return bad("vi_tolerance must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
struct PairStats {
    next: BTreeMap<usize, u32>,
    visits: u32,
    reward: f64,
}

/// Sparse R-max model. Ordered maps keep value iteration bit-reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmaxModel {
    pub n_actions: usize,
    pub n: u32,
    pub gamma: f64,
    pub u_opt: f64,
    pairs: BTreeMap<(usize, usize), PairStats>,
    /// Q̂ of known pairs.
    q: BTreeMap<(usize, usize), f64>,
}

impl RmaxModel {
    pub fn new(n_actions: usize, n: u32, gamma: f64, u_opt: f64) -> Self {
        Self {
            n_actions,
            n,
            gamma,
            u_opt,
            pairs: BTreeMap::new(),
            q: BTreeMap::new(),
        }
    }

    /// Value of a pair that has not been tried often enough.
    pub fn optimistic_value(&self) -> f64 {
        self.u_opt / (1.0 - self.gamma)
    }

    pub fn is_known(&self, s: usize, a: usize) -> bool {
        self.pairs.get(&(s, a)).is_some_and(|p| p.visits >= self.n)
    }

    pub fn known_pairs(&self) -> usize {
        self.pairs.values().filter(|p| p.visits >= self.n).count()
    }

    pub fn visits(&self, s: usize, a: usize) -> u32 {
        self.pairs.get(&(s, a)).map_or(0, |p| p.visits)
    }

    /// T̂(s, a, ·) of a known pair.
    pub fn transition(&self, s: usize, a: usize) -> Option<Vec<(usize, f64)>> {
        let p = self.pairs.get(&(s, a)).filter(|p| p.visits >= self.n)?;
        let total = p.visits as f64;
        Some(p.next.iter().map(|(s2, c)| (*s2, *c as f64 / total)).collect())
    }

    /// R̂(s, a) of a known pair.
    pub fn reward(&self, s: usize, a: usize) -> Option<f64> {
        let p = self.pairs.get(&(s, a)).filter(|p| p.visits >= self.n)?;
        Some(p.reward / p.visits as f64)
    }

    pub fn q_value(&self, s: usize, a: usize) -> f64 {
        if s == TERMINAL {
            return 0.0;
        }
        self.q.get(&(s, a)).copied().unwrap_or_else(|| self.optimistic_value())
    }

    pub fn q_row(&self, s: usize) -> Vec<f64> {
        (0..self.n_actions).map(|a| self.q_value(s, a)).collect()
    }

    /// Greedy action under Q̂, lowest index on ties.
    pub fn greedy(&self, s: usize) -> Action {
        Action(crate::prob::argmax(&self.q_row(s)) as u8)
    }

    /// Greedy policy over every state seen so far.
    pub fn to_policy(&self, id: impl Into<String>) -> TabularPolicy {
        let mut table = QTable::with_init(self.n_actions, self.optimistic_value());
        let mut states: Vec<usize> = self.pairs.keys().map(|(s, _)| *s).collect();
        states.dedup();
        for s in states {
            let row = self.q_row(s);
            table.row_mut(s).copy_from_slice(&row);
        }
        TabularPolicy::greedy(id, table)
    }
}

/// Counts one transition. `next` is [`TERMINAL`] at episode end. Returns true
/// when this visit made the pair known.
pub fn rmax_update(model: &mut RmaxModel, s: usize, a: usize, next: usize, r: f64) -> bool {
    let n = model.n;
    let p = model.pairs.entry((s, a)).or_default();
    *p.next.entry(next).or_insert(0) += 1;
    p.visits += 1;
    p.reward += r;
    p.visits == n
}

/// Value iteration over the known pairs. Unknown pairs keep the optimistic
/// value, so the greedy policy heads for them.
pub fn rmax_plan(model: &mut RmaxModel, tolerance: f64, max_iterations: usize) -> Result<()> {
    let known: Vec<((usize, usize), f64, Vec<(usize, f64)>)> = model
        .pairs
        .iter()
        .filter(|(_, p)| p.visits >= model.n)
        .map(|(k, p)| {
            let total = p.visits as f64;
            let t = p.next.iter().map(|(s2, c)| (*s2, *c as f64 / total)).collect();
            (*k, p.reward / total, t)
        })
        .collect();
    let index: BTreeMap<(usize, usize), usize> = known.iter().enumerate().map(|(i, (k, _, _))| (*k, i)).collect();
    // One slot per successor state: the known pairs it can choose from and
    // whether an unknown (optimistic) action is also available.
    let mut slot_of: BTreeMap<usize, usize> = BTreeMap::new();
    let mut slots: Vec<(Vec<usize>, bool)> = Vec::new();
    let trans: Vec<Vec<(usize, f64)>> = known
        .iter()
        .map(|(_, _, t)| {
            t.iter()
                .filter(|(s2, _)| *s2 != TERMINAL)
                .map(|(s2, p)| {
                    let slot = *slot_of.entry(*s2).or_insert_with(|| {
                        let acts: Vec<Option<usize>> = (0..model.n_actions).map(|a| index.get(&(*s2, a)).copied()).collect();
                        slots.push((acts.iter().flatten().copied().collect(), acts.iter().any(Option::is_none)));
                        slots.len() - 1
                    });
                    (slot, *p)
                })
                .collect()
        })
        .collect();
    let opt = model.optimistic_value();
    let mut q: Vec<f64> = known.iter().map(|(k, _, _)| model.q.get(k).copied().unwrap_or(0.0)).collect();
    let mut v = vec![0.0; slots.len()];
    for _ in 0..max_iterations {
        for (val, (idx, open)) in v.iter_mut().zip(&slots) {
            let init = if *open { opt } else { f64::NEG_INFINITY };
            *val = idx.iter().map(|i| q[*i]).fold(init, f64::max);
        }
        let mut change: f64 = 0.0;
        for (i, ((_, r, _), t)) in known.iter().zip(&trans).enumerate() {
            let next = r + model.gamma * t.iter().map(|(slot, p)| p * v[*slot]).sum::<f64>();
            change = change.max((next - q[i]).abs());
            q[i] = next;
        }
        if change < tolerance {
            model.q = known.iter().zip(q).map(|((k, _, _), x)| (*k, x)).collect();
            return Ok(());
        }
    }
    Err(Error::NonConvergence(max_iterations))
}

/// One row of the learning trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LearnStep {
    pub episode: usize,
    pub r_self: f64,
    pub won: bool,
    /// Win rate over the last `window` learning episodes, if that many exist.
    pub window_rate: Option<f64>,
    pub known_pairs: usize,
}

#[derive(Debug, Clone)]
pub struct LearnOutcome {
    pub policy: TabularPolicy,
    /// Opponent (state, action) pairs seen while learning.
    pub observations: Vec<(usize, Action)>,
    pub trace: Vec<LearnStep>,
}

/// Runs ε-greedy R-max against a fixed opponent until the recent win rate
/// reaches `target`.
pub fn learn_new_response(
    spec: &GameSpec,
    opponent: &TabularPolicy,
    params: &RmaxParams,
    target: f64,
    id: &str,
    rng: &mut SimRng,
) -> Result<LearnOutcome> {
    params.validate()?;
    let n_actions = spec.n_actions();
    let mut model = RmaxModel::new(n_actions, params.n, params.gamma, params.u_opt);
    rmax_plan(&mut model, params.vi_tolerance, params.vi_max_iterations)?;
    let mut recent: VecDeque<bool> = VecDeque::with_capacity(params.window);
    let mut observations = Vec::new();
    let mut trace = Vec::new();
    let mut best_rate = 0.0;
    for episode in 0..params.max_episodes {
        let mut s = games::reset(spec, rng);
        let r_self = loop {
            let si = games::state_index(spec, &s);
            let a = if rng.gen::<f64>() < params.epsilon {
                Action(rng.gen_range(0..n_actions) as u8)
            } else {
                model.greedy(si)
            };
            let b = opponent.act(spec, &s, rng)?;
            observations.push((games::opponent_state_index(spec, &s), b));
            let out = games::step(spec, &s, a, b)?;
            let (next, r) = match out.terminal {
                Some(r) => (TERMINAL, r),
                None => (games::state_index(spec, &out.next), 0.0),
            };
            if rmax_update(&mut model, si, a.index(), next, r) {
                rmax_plan(&mut model, params.vi_tolerance, params.vi_max_iterations)?;
            }
            if let Some(r) = out.terminal {
                break r;
            }
            s = out.next;
        };
        let won = r_self > 0.0;
        if recent.len() == params.window {
            recent.pop_front();
        }
        recent.push_back(won);
        let window_rate = (recent.len() == params.window)
            .then(|| recent.iter().filter(|w| **w).count() as f64 / params.window as f64);
        trace.push(LearnStep {
            episode,
            r_self,
            won,
            window_rate,
            known_pairs: model.known_pairs(),
        });
        if let Some(rate) = window_rate {
            best_rate = f64::max(best_rate, rate);
            if rate >= target {
                return Ok(LearnOutcome {
                    policy: model.to_policy(id),
                    observations,
                    trace,
                });
            }
        }
    }
    Err(Error::LearningCapReached {
        episodes: params.max_episodes,
        best_rate,
        best: Box::new(model.to_policy(id)),
    })
}

/// Per-state empirical action frequencies of the opponent; unseen states
/// fall back to uniform.
pub fn estimate_opponent_policy(
    n_actions: usize,
    observations: &[(usize, Action)],
    id: &str,
) -> Result<TabularPolicy> {
    let mut counts: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for (s, a) in observations {
        if a.index() >= n_actions {
            return Err(Error::InvalidAction {
                action: a.index(),
                size: n_actions,
            });
        }
        counts.entry(*s).or_insert_with(|| vec![0.0; n_actions])[a.index()] += 1.0;
    }
    let mut table = StochasticTable::new(n_actions);
    for (s, c) in counts {
        table.set(s, &c)?;
    }
    Ok(TabularPolicy::estimated(id, table))
}

/// Simulates the pairs involving the newest own policy or the newest
/// opponent strategy and extends both performance matrices. `own` and
/// `opponents` must already hold the new entries as their last element.
pub fn regenerate_models(
    ctx: &BprContext,
    spec: &GameSpec,
    own: &StrategyLibrary,
    opponents: &StrategyLibrary,
    episodes_per_pair: usize,
    sigma_floor: f64,
    rng: &SimRng,
) -> Result<BprContext> {
    let (n_j, n_pi) = (ctx.n_strategies(), ctx.n_policies());
    if opponents.len() != n_j + 1 || own.len() != n_pi + 1 {
        return Err(Error::DimensionMismatch {
            expected: n_j + 1,
            got: opponents.len(),
        });
    }
    if episodes_per_pair < 2 {
        return Err(Error::TooFewSamples(episodes_per_pair));
    }
    // New row: the estimated strategy against every policy. New column: the
    // old strategies against the new policy.
    let pairs: Vec<(usize, usize)> = (0..=n_pi).map(|pi| (n_j, pi)).chain((0..n_j).map(|j| (j, n_pi))).collect();
    let cells: Result<Vec<_>> = pairs
        .par_iter()
        .enumerate()
        .map(|(k, (j, pi))| {
            let mut r = rng.fork_indexed("regen", k as u64);
            fit_pair(spec, own, opponents, *pi, *j, episodes_per_pair, sigma_floor, &mut r)
        })
        .collect();
    let mut cells = cells?;
    let col = cells.split_off(n_pi + 1);
    let perf_self = ctx.perf_self.extended(cells, col)?;
    BprContext::new(perf_self, ctx.u_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::GameId;
    use crate::policies::{evaluate, novel_strategy, scripted_library, ScriptedRule};

    #[test]
    fn detection_examples() {
        let mut d = DetectionState::new(10, 0.7).unwrap();
        assert!(!(0..9).any(|_| d.observe(false)));
        assert!(d.observe(false));
        let mut d = DetectionState::new(10, 0.7).unwrap();
        assert!(!(0..20).any(|_| d.observe(true)));
        // θ = 0.69 with a window of 100.
        let mut d = DetectionState::new(100, 0.7).unwrap();
        let fired: Vec<bool> = (0..100).map(|i| d.observe(i < 69)).collect();
        assert!(fired[99] && !fired[98]);
        let mut d = DetectionState::new(10, 0.7).unwrap();
        let fired: Vec<bool> = (0..10).map(|i| d.observe(i < 7)).collect();
        assert!(!fired[9], "θ = δ does not fire");
    }

    #[test]
    fn delta_bound_examples() {
        assert_eq!(delta_upper_bound(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap(), 1.0);
        assert_eq!(delta_upper_bound(&[vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap(), 0.8);
        assert_eq!(delta_upper_bound(&[vec![0.6]]).unwrap(), 0.6);
        assert!(delta_upper_bound(&[]).is_err());
    }

    #[test]
    fn unknown_pairs_stay_optimistic() {
        let mut m = RmaxModel::new(2, 5, 0.9, 1.0);
        for _ in 0..4 {
            assert!(!rmax_update(&mut m, 0, 0, 1, 0.0));
        }
        rmax_plan(&mut m, 1e-6, 1000).unwrap();
        assert!((m.q_value(0, 0) - 10.0).abs() < 1e-12);
        assert!(rmax_update(&mut m, 0, 0, 1, 0.0));
        let t = m.transition(0, 0).unwrap();
        assert_eq!(t, vec![(1, 1.0)]);
        assert_eq!(m.known_pairs(), 1);
    }

    #[test]
    fn transition_divides_by_visits() {
        let mut m = RmaxModel::new(1, 2, 0.9, 1.0);
        for next in [1, 2, 1, 1] {
            rmax_update(&mut m, 0, 0, next, 0.0);
        }
        let t = m.transition(0, 0).unwrap();
        assert_eq!(t, vec![(1, 0.75), (2, 0.25)]);
        assert!((t.iter().map(|x| x.1).sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_state_chain_matches_hand_solution() {
        // s0 --a0--> s1 (r = 0), s1 --a0--> end (r = 1), single action.
        let mut m = RmaxModel::new(1, 1, 0.9, 1.0);
        rmax_update(&mut m, 0, 0, 1, 0.0);
        rmax_update(&mut m, 1, 0, TERMINAL, 1.0);
        rmax_plan(&mut m, 1e-9, 1000).unwrap();
        assert!((m.q_value(1, 0) - 1.0).abs() < 1e-9);
        assert!((m.q_value(0, 0) - 0.9).abs() < 1e-9);
        // A self-loop with reward 0.5: Q = 0.5 / (1 - 0.9) = 5.
        let mut m = RmaxModel::new(1, 1, 0.9, 1.0);
        rmax_update(&mut m, 0, 0, 0, 0.5);
        rmax_plan(&mut m, 1e-9, 10_000).unwrap();
        assert!((m.q_value(0, 0) - 5.0).abs() < 1e-7);
    }

    #[test]
    fn myopic_planning_returns_rewards() {
        let mut m = RmaxModel::new(2, 1, 0.0, 1.0);
        rmax_update(&mut m, 0, 0, 1, 0.25);
        rmax_update(&mut m, 0, 1, 0, -0.5);
        rmax_plan(&mut m, 1e-12, 100).unwrap();
        assert_eq!(m.q_row(0), vec![0.25, -0.5]);
    }

    #[test]
    fn rps_learns_paper_against_mostly_rock() {
        let spec = GameSpec::new(GameId::Rps);
        let novel = novel_strategy(&spec);
        let mut rng = SimRng::new(4);
        let out = learn_new_response(&spec, &novel, &RmaxParams::default(), 0.7, "br-new", &mut rng).unwrap();
        let s = games::reset(&spec, &mut rng);
        assert_eq!(out.policy.act(&spec, &s, &mut rng).unwrap(), Action::PAPER);
        let returns = evaluate(&spec, &out.policy, &novel, 4000, &mut rng).unwrap();
        let wins = returns.iter().filter(|r| **r > 0.0).count() as f64 / 4000.0;
        assert!((wins - 0.8).abs() < 0.03, "{wins}");
    }

    #[test]
    fn learning_cap_is_reported() {
        let spec = GameSpec::new(GameId::Rps);
        let novel = novel_strategy(&spec);
        let params = RmaxParams {
            max_episodes: 150,
            ..RmaxParams::default()
        };
        let err = learn_new_response(&spec, &novel, &params, 0.99, "x", &mut SimRng::new(1)).unwrap_err();
        assert!(matches!(err, Error::LearningCapReached { episodes: 150, .. }));
    }

    #[test]
    fn estimation_counts_frequencies() {
        let obs = vec![(3, Action::UP); 10];
        let p = estimate_opponent_policy(5, &obs, "est").unwrap();
        match &p.kind {
            crate::policies::PolicyKind::Estimated { table } => {
                assert_eq!(table.probs(3), vec![0.0, 0.0, 1.0, 0.0, 0.0]);
                assert_eq!(table.probs(7), vec![0.2; 5]);
            }
            _ => panic!("not an estimated policy"),
        }
        assert!(estimate_opponent_policy(3, &[(0, Action(4))], "x").is_err());
    }

    #[test]
    fn rps_estimate_of_always_rock_plays_rock() {
        let spec = GameSpec::new(GameId::Rps);
        let rock = TabularPolicy::scripted(ScriptedRule::Constant { action: Action::ROCK });
        let obs = vec![(0, Action::ROCK); 20];
        let est = estimate_opponent_policy(3, &obs, "est").unwrap();
        let mut rng = SimRng::new(0);
        let s = games::reset(&spec, &mut rng);
        for _ in 0..20 {
            assert_eq!(est.act(&spec, &s, &mut rng).unwrap(), rock.act(&spec, &s, &mut rng).unwrap());
        }
    }

    #[test]
    fn regeneration_grows_matrices_append_only() {
        let spec = GameSpec::new(GameId::Rps);
        let opponents = scripted_library(&spec);
        let own = crate::policies::build_response_library(
            &spec,
            &opponents,
            &crate::policies::QLearnParams {
                episodes: 500,
                ..Default::default()
            },
            &SimRng::new(0),
        )
        .unwrap();
        let perf = crate::bpr::estimate_perf_models(&spec, &own, &opponents, 20, 0.05, &SimRng::new(1)).unwrap();
        let ctx = BprContext::new(perf, 1.0).unwrap();
        let mut own2 = own.clone();
        let mut opp2 = opponents.clone();
        let mut q = QTable::new(3);
        q.row_mut(0)[1] = 1.0;
        own2.push(TabularPolicy::greedy("br-new", q)).unwrap();
        opp2.push(novel_strategy(&spec)).unwrap();
        let next = regenerate_models(&ctx, &spec, &own2, &opp2, 50, 0.05, &SimRng::new(2)).unwrap();
        assert_eq!((next.n_strategies(), next.n_policies()), (4, 4));
        for j in 0..3 {
            for pi in 0..3 {
                assert_eq!(next.perf_self.model(j, pi), ctx.perf_self.model(j, pi));
            }
        }
        // Paper against 80 % rock.
        assert!(next.perf_self.mean(3, 3) > 0.6);
        assert_eq!(next.perf_oppo.n_rows(), 4);
    }
}
