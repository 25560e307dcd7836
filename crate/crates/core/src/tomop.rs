//! Bayes-ToMoP agents of order zero and one.
//!
//! The zero-order agent is plain BPR over the opponent's strategy library.
//! The first-order agent also tracks what the opponent believes about it,
//! predicts the opponent's response ĵ from that, and blends the prediction
//! into its own belief with confidence `c1`. `c1` follows the agent's recent
//! win rate υ, and a flag `F` switches first-order reasoning off (or back on)
//! whenever υ drops to the threshold δ.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bpr::{belief_update, ei_select, BprContext};
use crate::error::{Error, Result};
use crate::prob::{random_belief, Belief, DEFAULT_BELIEF_FLOOR};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToMoPParams {
    /// Initial first-order confidence.
    pub c1: f64,
    pub lambda: f64,
    pub delta: f64,
    /// Window length for the win rate υ.
    pub l: usize,
    pub belief_floor: f64,
    /// Start a fresh υ window (with its warm-up) every time the flag flips.
    /// When false the flag follows the literal rule and toggles on every
    /// episode for as long as υ stays at or below δ.
    pub restart_window_on_flip: bool,
    /// Draw the starting beliefs at random instead of uniformly.
    pub random_belief_init: bool,
}

impl Default for ToMoPParams {
    fn default() -> Self {
        Self {
            c1: 0.3,
            lambda: 0.7,
            delta: 0.7,
            l: 35,
            belief_floor: DEFAULT_BELIEF_FLOOR,
            restart_window_on_flip: true,
            random_belief_init: false,
        }
    }
}

impl ToMoPParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(0.0..=1.0).contains(&self.c1) {
            return bad(format!("c1 {} must lie in [0, 1]", self.c1));
        }
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return bad(format!("lambda {} must lie in (0, 1)", self.lambda));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta {} must lie in (0, 1)", self.delta));
        }
        if self.l == 0 {
            return bad("l must be positive".into());
        }
        if !(0.0..0.5).contains(&self.belief_floor) {
            return bad(format!("belief floor {} must lie in [0, 0.5)", self.belief_floor));
        }
        Ok(())
    }
}

/// Blends the zero-order belief with a point prediction on `j_hat`.
/// The result sums to one whenever `belief0` does, so it is not
/// renormalized.
pub fn integrate(belief0: &Belief, j_hat: usize, c1: f64) -> Vec<f64> {
    let mut merged: Vec<f64> = belief0.weights().iter().map(|w| (1.0 - c1) * w).collect();
    merged[j_hat] += c1;
    merged
}

/// Share of wins among the last `l` outcomes; 1.0 until `l` are available.
pub fn win_rate(window: &VecDeque<bool>, l: usize) -> f64 {
    if window.len() < l || l == 0 {
        return 1.0;
    }
    let wins = window.iter().rev().take(l).filter(|w| **w).count();
    wins as f64 / l as f64
}

/// New flag value: flipped when υ is at or below δ, kept otherwise.
pub fn update_flag(flag: bool, upsilon: f64, delta: f64) -> bool {
    if upsilon <= delta {
        !flag
    } else {
        flag
    }
}

/// New first-order confidence, clamped to [0, 1].
pub fn update_confidence(
    c1: f64,
    upsilon: f64,
    upsilon_prev: f64,
    lambda: f64,
    delta: f64,
    flag: bool,
) -> f64 {
    let f = if flag { 1.0 } else { 0.0 };
    let next = if upsilon >= upsilon_prev {
        ((1.0 - lambda) * c1 + lambda) * f
    } else if upsilon > delta {
        let factor = upsilon.log10() / (upsilon - delta).log10();
        let factor = if factor.is_finite() { factor } else { 0.0 };
        factor * c1 * f
    } else {
        lambda * f
    };
    next.clamp(0.0, 1.0)
}

/// Zero-order agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToMoP0State {
    pub belief0: Belief,
    pub floor: f64,
}

impl ToMoP0State {
    pub fn new(n_strategies: usize, floor: f64) -> Self {
        Self {
            belief0: Belief::uniform(n_strategies),
            floor,
        }
    }

    pub fn select(&self, ctx: &BprContext) -> Result<usize> {
        ei_select(self.belief0.weights(), &ctx.perf_self, ctx.u_max)
    }

    pub fn observe(&mut self, ctx: &BprContext, played: usize, r_self: f64) -> Result<()> {
        self.belief0 = belief_update(&self.belief0, &ctx.perf_self, played, r_self, self.floor)?;
        Ok(())
    }
}

/// First-order agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToMoP1State {
    pub belief0: Belief,
    /// What the opponent is believed to believe about our policies.
    pub belief1: Belief,
    pub c1: f64,
    pub flag: bool,
    pub upsilon_prev: f64,
    pub window: VecDeque<bool>,
    pub params: ToMoPParams,
}

/// What [`ToMoP1State::observe`] did to the confidence dynamics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceStep {
    pub upsilon: f64,
    pub flipped: bool,
}

impl ToMoP1State {
    pub fn new(n_strategies: usize, n_policies: usize, params: ToMoPParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            belief0: Belief::uniform(n_strategies),
            belief1: Belief::uniform(n_policies),
            c1: params.c1,
            flag: true,
            upsilon_prev: 1.0,
            window: VecDeque::with_capacity(params.l + 1),
            params,
        })
    }

    /// The opponent's best reply to its believed picture of us.
    pub fn predict_opponent(&self, ctx: &BprContext) -> Result<usize> {
        ei_select(self.belief1.weights(), &ctx.perf_oppo, ctx.u_max)
    }

    /// Returns `(π*, ĵ)`.
    pub fn select(&self, ctx: &BprContext) -> Result<(usize, usize)> {
        let j_hat = self.predict_opponent(ctx)?;
        let merged = integrate(&self.belief0, j_hat, self.c1);
        let pi = ei_select(&merged, &ctx.perf_self, ctx.u_max)?;
        Ok((pi, j_hat))
    }

    pub fn update_first_order(&mut self, ctx: &BprContext, j_hat: usize, r_oppo: f64) -> Result<()> {
        self.belief1 = belief_update(&self.belief1, &ctx.perf_oppo, j_hat, r_oppo, self.params.belief_floor)?;
        Ok(())
    }

    pub fn update_zero_order(&mut self, ctx: &BprContext, played: usize, r_self: f64) -> Result<()> {
        self.belief0 = belief_update(&self.belief0, &ctx.perf_self, played, r_self, self.params.belief_floor)?;
        Ok(())
    }

    /// Records one outcome, then updates the flag and the confidence.
    pub fn update_confidence_dynamics(&mut self, won: bool) -> ConfidenceStep {
        let p = self.params;
        self.window.push_back(won);
        while self.window.len() > p.l + 1 {
            self.window.pop_front();
        }
        let upsilon = win_rate(&self.window, p.l);
        let new_flag = update_flag(self.flag, upsilon, p.delta);
        let flipped = new_flag != self.flag;
        self.flag = new_flag;
        self.c1 = update_confidence(self.c1, upsilon, self.upsilon_prev, p.lambda, p.delta, self.flag);
        self.upsilon_prev = upsilon;
        if flipped && p.restart_window_on_flip {
            self.window.clear();
            self.upsilon_prev = 1.0;
        }
        ConfidenceStep { upsilon, flipped }
    }

    /// All end-of-episode updates in order: first-order belief, zero-order
    /// belief, flag and confidence.
    pub fn observe(
        &mut self,
        ctx: &BprContext,
        played: usize,
        j_hat: usize,
        r_self: f64,
        won: bool,
    ) -> Result<ConfidenceStep> {
        let r_oppo = if ctx.perf_self.is_zero_sum() { -r_self } else { r_self };
        self.update_first_order(ctx, j_hat, r_oppo)?;
        self.update_zero_order(ctx, played, r_self)?;
        Ok(self.update_confidence_dynamics(won))
    }

    /// Uniform beliefs over resized libraries, e.g. after learning a new
    /// response. Confidence state is kept.
    pub fn reset_beliefs(&mut self, n_strategies: usize, n_policies: usize) {
        self.belief0 = Belief::uniform(n_strategies);
        self.belief1 = Belief::uniform(n_policies);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AgentKind {
    #[serde(rename = "tomop0")]
    ToMoP0,
    #[serde(rename = "tomop1")]
    ToMoP1,
}

impl AgentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AgentKind::ToMoP0 => "tomop0",
            AgentKind::ToMoP1 => "tomop1",
        }
    }
}

/// One episode's choice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub pi: usize,
    pub j_hat: Option<usize>,
}

/// Per-episode agent telemetry. Confidence fields are `None` for the
/// zero-order agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Telemetry {
    pub c1: Option<f64>,
    pub flag: Option<bool>,
    pub upsilon: Option<f64>,
    pub belief_entropy: f64,
}

/// Either agent behind one interface.
#[derive(Debug, Clone, PartialEq)]
pub enum Agent {
    Zero(ToMoP0State),
    First(ToMoP1State),
}

impl Agent {
    pub fn new(kind: AgentKind, ctx: &BprContext, params: ToMoPParams) -> Result<Self> {
        params.validate()?;
        Ok(match kind {
            AgentKind::ToMoP0 => Agent::Zero(ToMoP0State::new(ctx.n_strategies(), params.belief_floor)),
            AgentKind::ToMoP1 => Agent::First(ToMoP1State::new(ctx.n_strategies(), ctx.n_policies(), params)?),
        })
    }

    pub fn kind(&self) -> AgentKind {
        match self {
            Agent::Zero(_) => AgentKind::ToMoP0,
            Agent::First(_) => AgentKind::ToMoP1,
        }
    }

    pub fn belief0(&self) -> &Belief {
        match self {
            Agent::Zero(s) => &s.belief0,
            Agent::First(s) => &s.belief0,
        }
    }

    pub fn select(&self, ctx: &BprContext) -> Result<Decision> {
        match self {
            Agent::Zero(s) => Ok(Decision {
                pi: s.select(ctx)?,
                j_hat: None,
            }),
            Agent::First(s) => {
                let (pi, j_hat) = s.select(ctx)?;
                Ok(Decision { pi, j_hat: Some(j_hat) })
            }
        }
    }

    pub fn observe(&mut self, ctx: &BprContext, d: Decision, r_self: f64, won: bool) -> Result<Telemetry> {
        match self {
            Agent::Zero(s) => {
                s.observe(ctx, d.pi, r_self)?;
                Ok(Telemetry {
                    c1: None,
                    flag: None,
                    upsilon: None,
                    belief_entropy: s.belief0.entropy(),
                })
            }
            Agent::First(s) => {
                let j_hat = d.j_hat.ok_or_else(|| Error::InvalidParameter("first-order decision without prediction".into()))?;
                let step = s.observe(ctx, d.pi, j_hat, r_self, won)?;
                Ok(Telemetry {
                    c1: Some(s.c1),
                    flag: Some(s.flag),
                    upsilon: Some(step.upsilon),
                    belief_entropy: s.belief0.entropy(),
                })
            }
        }
    }

    /// Replaces every belief with a random draw.
    pub fn randomize_beliefs<R: Rng + ?Sized>(&mut self, floor: f64, rng: &mut R) -> Result<()> {
        match self {
            Agent::Zero(s) => s.belief0 = random_belief(s.belief0.len(), floor, rng)?,
            Agent::First(s) => {
                s.belief0 = random_belief(s.belief0.len(), floor, rng)?;
                s.belief1 = random_belief(s.belief1.len(), floor, rng)?;
            }
        }
        Ok(())
    }

    pub fn reset_beliefs(&mut self, ctx: &BprContext) {
        match self {
            Agent::Zero(s) => s.belief0 = Belief::uniform(ctx.n_strategies()),
            Agent::First(s) => s.reset_beliefs(ctx.n_strategies(), ctx.n_policies()),
        }
    }
}
