//! Policies for both sides of a game and the libraries that hold them.
//!
//! Own policies are greedy over a sparse Q-table. Opponent strategies are
//! scripted rules or, after learning, a stochastic table estimated from
//! observed play.

mod qlearn;
pub mod scripted;

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::{self, Action, EpisodeOutcome, GameId, GameSpec, GameState};
pub use qlearn::{build_response_library, q_learn_best_response, QLearnParams};
pub use scripted::{RouteShape, ScriptedRule};

/// Sparse action-value table. States never written read as `init` for
/// every action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "QTableRepr", from = "QTableRepr")]
pub struct QTable {
    n_actions: usize,
    init: f64,
    rows: HashMap<usize, Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct QTableRepr {
    n_actions: usize,
    #[serde(default)]
    init: f64,
    /// `[state, values]` pairs sorted by state.
    rows: Vec<(usize, Vec<f64>)>,
}

impl From<QTable> for QTableRepr {
    fn from(q: QTable) -> Self {
        Self {
            n_actions: q.n_actions,
            init: q.init,
            rows: q.rows.into_iter().collect::<BTreeMap<_, _>>().into_iter().collect(),
        }
    }
}

impl From<QTableRepr> for QTable {
    fn from(r: QTableRepr) -> Self {
        Self {
            n_actions: r.n_actions,
            init: r.init,
            rows: r.rows.into_iter().collect(),
        }
    }
}

impl QTable {
    pub fn new(n_actions: usize) -> Self {
        Self::with_init(n_actions, 0.0)
    }

    pub fn with_init(n_actions: usize, init: f64) -> Self {
        Self {
            n_actions,
            init,
            rows: HashMap::new(),
        }
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    /// Number of states with stored values.
    pub fn n_visited(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, s: usize) -> Option<&[f64]> {
        self.rows.get(&s).map(Vec::as_slice)
    }

    pub fn value(&self, s: usize, a: usize) -> f64 {
        self.rows.get(&s).map_or(self.init, |r| r[a])
    }

    pub fn row_mut(&mut self, s: usize) -> &mut [f64] {
        let (n, init) = (self.n_actions, self.init);
        self.rows.entry(s).or_insert_with(|| vec![init; n])
    }

    pub fn max(&self, s: usize) -> f64 {
        self.rows
            .get(&s)
            .map_or(self.init, |r| r.iter().copied().fold(f64::NEG_INFINITY, f64::max))
    }

    /// Greedy action, lowest index on ties.
    pub fn greedy(&self, s: usize) -> Action {
        match self.rows.get(&s) {
            Some(r) => Action(crate::prob::argmax(r) as u8),
            None => Action(0),
        }
    }
}

/// Per-state action distribution; unseen states are uniform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "QTableRepr", from = "QTableRepr")]
pub struct StochasticTable(QTable);

impl From<StochasticTable> for QTableRepr {
    fn from(t: StochasticTable) -> Self {
        t.0.into()
    }
}

impl From<QTableRepr> for StochasticTable {
    fn from(r: QTableRepr) -> Self {
        StochasticTable(r.into())
    }
}

impl StochasticTable {
    pub fn new(n_actions: usize) -> Self {
        StochasticTable(QTable::new(n_actions))
    }

    /// Stores a distribution for `s`; it is renormalized on the way in.
    pub fn set(&mut self, s: usize, probs: &[f64]) -> Result<()> {
        if probs.len() != self.0.n_actions {
            return Err(Error::DimensionMismatch {
                expected: self.0.n_actions,
                got: probs.len(),
            });
        }
        let total: f64 = probs.iter().sum();
        if !(total > 0.0) || probs.iter().any(|p| *p < 0.0 || !p.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "action distribution for state {s} is not a distribution"
            )));
        }
        let row = self.0.row_mut(s);
        for (dst, p) in row.iter_mut().zip(probs) {
            *dst = p / total;
        }
        Ok(())
    }

    pub fn probs(&self, s: usize) -> Vec<f64> {
        match self.0.get(s) {
            Some(r) => r.to_vec(),
            None => vec![1.0 / self.0.n_actions as f64; self.0.n_actions],
        }
    }

    pub fn n_states(&self) -> usize {
        self.0.n_visited()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PolicyKind {
    Greedy { q: QTable },
    Scripted { rule: ScriptedRule },
    Estimated { table: StochasticTable },
}

/// A named policy usable by either player. Which side it plays is decided by
/// the caller: own policies read the state as player A, opponent strategies
/// as player B.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularPolicy {
    pub id: String,
    #[serde(flatten)]
    pub kind: PolicyKind,
}

impl TabularPolicy {
    pub fn greedy(id: impl Into<String>, q: QTable) -> Self {
        Self {
            id: id.into(),
            kind: PolicyKind::Greedy { q },
        }
    }

    pub fn scripted(rule: ScriptedRule) -> Self {
        Self {
            id: rule.label(),
            kind: PolicyKind::Scripted { rule },
        }
    }

    pub fn estimated(id: impl Into<String>, table: StochasticTable) -> Self {
        Self {
            id: id.into(),
            kind: PolicyKind::Estimated { table },
        }
    }

    pub fn act<R: Rng + ?Sized>(&self, spec: &GameSpec, state: &GameState, rng: &mut R) -> Result<Action> {
        let check = |n: usize| {
            if n == spec.n_actions() {
                Ok(())
            } else {
                Err(Error::DimensionMismatch {
                    expected: spec.n_actions(),
                    got: n,
                })
            }
        };
        match &self.kind {
            PolicyKind::Greedy { q } => {
                check(q.n_actions())?;
                let s = games::state_index(spec, state);
                if s >= spec.n_states() {
                    return Err(Error::UnknownState(s));
                }
                Ok(q.greedy(s))
            }
            PolicyKind::Scripted { rule } => Ok(rule.act(spec, state, rng)),
            PolicyKind::Estimated { table } => {
                check(table.0.n_actions())?;
                let s = games::opponent_state_index(spec, state);
                Ok(scripted::sample_action(&table.probs(s), rng))
            }
        }
    }
}

/// Ordered collection of policies for one game. Ids are unique.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyLibrary {
    pub game: GameId,
    entries: Vec<TabularPolicy>,
}

impl StrategyLibrary {
    pub fn new(game: GameId) -> Self {
        Self {
            game,
            entries: Vec::new(),
        }
    }

    pub fn from_policies(game: GameId, policies: Vec<TabularPolicy>) -> Result<Self> {
        let mut lib = Self::new(game);
        for p in policies {
            lib.push(p)?;
        }
        Ok(lib)
    }

    pub fn push(&mut self, policy: TabularPolicy) -> Result<usize> {
        if self.entries.iter().any(|p| p.id == policy.id) {
            return Err(Error::InvalidParameter(format!(
                "duplicate policy id `{}`",
                policy.id
            )));
        }
        self.entries.push(policy);
        Ok(self.entries.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, i: usize) -> &TabularPolicy {
        &self.entries[i]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, TabularPolicy> {
        self.entries.iter()
    }

    pub fn ids(&self) -> Vec<&str> {
        self.entries.iter().map(|p| p.id.as_str()).collect()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.entries.iter().position(|p| p.id == id)
    }
}

/// The known opponent strategies of a game.
///
/// RPS: the three pure strategies. Soccer: one route per goal row, each
/// either advancing or aligning first. Thieves-and-hunters: every visiting
/// order of the goals.
pub fn scripted_library(spec: &GameSpec) -> StrategyLibrary {
    let rules: Vec<ScriptedRule> = match spec.id {
        GameId::Rps => (0..3)
            .map(|a| ScriptedRule::Constant { action: Action(a) })
            .collect(),
        GameId::Soccer => spec
            .layout
            .goal_rows
            .iter()
            .flat_map(|row| {
                [RouteShape::AdvanceFirst, RouteShape::AlignFirst]
                    .map(|shape| ScriptedRule::SoccerRoute { row: *row, shape })
            })
            .collect(),
        GameId::ThievesHunters => permutations(spec.layout.goals.len())
            .into_iter()
            .map(ScriptedRule::thief_tour)
            .collect(),
    };
    let policies = rules.into_iter().map(TabularPolicy::scripted).collect();
    StrategyLibrary::from_policies(spec.id, policies).expect("scripted ids are unique")
}

/// A strategy outside [`scripted_library`], used to exercise detection.
///
/// RPS: 80% rock, 20% paper. Soccer: a top-flank attack through the middle
/// row. Thieves-and-hunters: a tour that breaks into its first goal
/// straight away.
pub fn novel_strategy(spec: &GameSpec) -> TabularPolicy {
    let rule = match spec.id {
        GameId::Rps => ScriptedRule::Mixed {
            probs: vec![0.8, 0.2, 0.0],
        },
        GameId::Soccer => {
            let rows = &spec.layout.goal_rows;
            ScriptedRule::SoccerRoute {
                row: rows[0],
                shape: RouteShape::Flank,
            }
        }
        GameId::ThievesHunters => ScriptedRule::thief_tour(vec![spec.layout.goals.len() - 1]),
    };
    TabularPolicy::scripted(rule)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Plays one episode of `own` (player A) against `oppo` (player B).
pub fn run_episode<R: Rng + ?Sized>(
    spec: &GameSpec,
    own: &TabularPolicy,
    oppo: &TabularPolicy,
    rng: &mut R,
    record: bool,
) -> Result<EpisodeOutcome> {
    let mut s = games::reset(spec, rng);
    let mut trajectory = Vec::new();
    loop {
        let a = own.act(spec, &s, rng)?;
        let b = oppo.act(spec, &s, rng)?;
        let out = games::step(spec, &s, a, b)?;
        if record {
            trajectory.push((s, a, b));
        }
        if let Some(r) = out.terminal {
            let mut outcome = EpisodeOutcome::new(r, out.next.step.max(1));
            outcome.trajectory = trajectory;
            return Ok(outcome);
        }
        s = out.next;
    }
}

/// Returns of `episodes` plays of `own` against `oppo`.
pub fn evaluate<R: Rng + ?Sized>(
    spec: &GameSpec,
    own: &TabularPolicy,
    oppo: &TabularPolicy,
    episodes: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    (0..episodes)
        .map(|_| run_episode(spec, own, oppo, rng, false).map(|o| o.r_self))
        .collect()
}
