//! Opponent controllers: a fixed strategy, periodic random switching, a
//! mirrored Bayes-ToMoP₀, alternation between the two, and a switch to a
//! strategy outside the library.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bpr::BprContext;
use crate::error::{Error, Result};
use crate::games::{Action, GameSpec, GameState};
use crate::policies::{StrategyLibrary, TabularPolicy};
use crate::prob::DEFAULT_BELIEF_FLOOR;
use crate::rng::SimRng;
use crate::tomop::ToMoP0State;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MixedPhase {
    #[serde(rename = "tomop0")]
    ToMoP0,
    Stationary,
}

/// Controller description as written in experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OpponentSpec {
    Stationary {
        strategy: usize,
    },
    NonStationary {
        #[serde(default = "default_period")]
        period: usize,
        #[serde(default)]
        start: usize,
    },
    #[serde(rename = "tomop0")]
    ToMoP0,
    Mixed {
        #[serde(default = "default_period")]
        period: usize,
        #[serde(default = "default_first_phase")]
        first: MixedPhase,
    },
    Novel {
        #[serde(default = "default_period")]
        activation: usize,
        #[serde(default)]
        before: usize,
    },
}

fn default_period() -> usize {
    200
}

fn default_first_phase() -> MixedPhase {
    MixedPhase::ToMoP0
}

impl OpponentSpec {
    pub fn label(&self) -> &'static str {
        match self {
            OpponentSpec::Stationary { .. } => "stationary",
            OpponentSpec::NonStationary { .. } => "non-stationary",
            OpponentSpec::ToMoP0 => "tomop0",
            OpponentSpec::Mixed { .. } => "mixed",
            OpponentSpec::Novel { .. } => "novel",
        }
    }

    pub fn validate(&self, n_strategies: usize) -> Result<()> {
        let check = |i: usize| {
            if i < n_strategies {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "strategy index {i} out of range for a library of {n_strategies}"
                )))
            }
        };
        match self {
            OpponentSpec::Stationary { strategy } => check(*strategy),
            OpponentSpec::NonStationary { period, start } => {
                if n_strategies < 2 {
                    return Err(Error::InvalidParameter("switching needs at least two strategies".into()));
                }
                if *period == 0 {
                    return Err(Error::InvalidParameter("period must be positive".into()));
                }
                check(*start)
            }
            OpponentSpec::ToMoP0 => Ok(()),
            OpponentSpec::Mixed { period, .. } => {
                if *period == 0 {
                    return Err(Error::InvalidParameter("period must be positive".into()));
                }
                Ok(())
            }
            OpponentSpec::Novel { before, .. } => check(*before),
        }
    }
}

/// What the opponent plays this episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Active {
    Library(usize),
    Novel,
}

/// Runtime controller. It holds its own random stream so that the switch
/// sequence depends on the seed alone.
#[derive(Debug, Clone)]
pub struct OpponentController {
    pub spec: OpponentSpec,
    library: StrategyLibrary,
    novel: Option<TabularPolicy>,
    /// The opponent's own Bayes-ToMoP₀, over our policies.
    tom: Option<(ToMoP0State, BprContext)>,
    phase: MixedPhase,
    active: Active,
    rng: SimRng,
}

impl OpponentController {
    /// `ctx` is the agent's context; the ToMoP₀ opponent uses its mirror
    /// image. `novel` is required by the novel controller only.
    pub fn new(
        spec: OpponentSpec,
        library: StrategyLibrary,
        novel: Option<TabularPolicy>,
        ctx: &BprContext,
        rng: SimRng,
    ) -> Result<Self> {
        spec.validate(library.len())?;
        if library.len() != ctx.n_strategies() {
            return Err(Error::DimensionMismatch {
                expected: ctx.n_strategies(),
                got: library.len(),
            });
        }
        let mirrored = BprContext {
            perf_self: ctx.perf_oppo.clone(),
            perf_oppo: ctx.perf_self.clone(),
            u_max: ctx.u_max,
        };
        let tom = Some((ToMoP0State::new(ctx.n_policies(), DEFAULT_BELIEF_FLOOR), mirrored));
        let (active, phase, tom) = match &spec {
            OpponentSpec::Stationary { strategy } => (Active::Library(*strategy), MixedPhase::Stationary, None),
            OpponentSpec::NonStationary { start, .. } => (Active::Library(*start), MixedPhase::Stationary, None),
            OpponentSpec::ToMoP0 => (Active::Library(0), MixedPhase::ToMoP0, tom),
            OpponentSpec::Mixed { first, .. } => (Active::Library(0), *first, tom),
            OpponentSpec::Novel { before, .. } => {
                if novel.is_none() {
                    return Err(Error::InvalidParameter("novel controller needs a novel policy".into()));
                }
                (Active::Library(*before), MixedPhase::Stationary, None)
            }
        };
        let mut ctrl = Self {
            spec,
            library,
            novel,
            tom,
            phase,
            active,
            rng,
        };
        if let OpponentSpec::Mixed { .. } = ctrl.spec {
            if ctrl.phase == MixedPhase::Stationary {
                ctrl.active = Active::Library(ctrl.rng.gen_range(0..ctrl.library.len()));
            }
        }
        Ok(ctrl)
    }

    /// Picks this episode's strategy. Only the ToMoP₀ phase decides here;
    /// scheduled switches happen in [`Self::end_episode`].
    pub fn begin_episode(&mut self, episode: usize) -> Result<()> {
        if let OpponentSpec::Novel { activation, .. } = self.spec {
            if episode >= activation {
                self.active = Active::Novel;
            }
        }
        if self.phase == MixedPhase::ToMoP0 {
            if let Some((state, mirrored)) = &self.tom {
                self.active = Active::Library(state.select(mirrored)?);
            }
        }
        Ok(())
    }

    pub fn active(&self) -> Active {
        self.active
    }

    pub fn phase(&self) -> MixedPhase {
        self.phase
    }

    /// The opponent's belief over our policies, when it has one.
    pub fn tom_state(&self) -> Option<&ToMoP0State> {
        self.tom.as_ref().map(|(s, _)| s)
    }

    pub fn policy(&self) -> &TabularPolicy {
        match self.active {
            Active::Library(j) => self.library.get(j),
            Active::Novel => self.novel.as_ref().expect("novel policy checked at construction"),
        }
    }

    pub fn label(&self) -> &str {
        &self.policy().id
    }

    pub fn act<R: Rng + ?Sized>(&self, spec: &GameSpec, state: &GameState, rng: &mut R) -> Result<Action> {
        self.policy().act(spec, state, rng)
    }

    /// Post-episode bookkeeping. Returns true when the next episode will be
    /// played under a different schedule (strategy switch or phase change).
    /// The ToMoP₀ belief keeps learning during stationary phases too.
    pub fn end_episode(&mut self, r_oppo: f64, episode: usize) -> Result<bool> {
        if let (Some((state, mirrored)), Active::Library(j)) = (&mut self.tom, self.active) {
            state.observe(mirrored, j, r_oppo)?;
        }
        let boundary = |period: usize| (episode + 1) % period == 0;
        match self.spec {
            OpponentSpec::NonStationary { period, .. } if boundary(period) => {
                let Active::Library(cur) = self.active else {
                    unreachable!("switching controller plays library strategies")
                };
                let mut next = self.rng.gen_range(0..self.library.len() - 1);
                if next >= cur {
                    next += 1;
                }
                self.active = Active::Library(next);
                Ok(true)
            }
            OpponentSpec::Mixed { period, .. } if boundary(period) => {
                self.phase = match self.phase {
                    MixedPhase::ToMoP0 => {
                        self.active = Active::Library(self.rng.gen_range(0..self.library.len()));
                        MixedPhase::Stationary
                    }
                    MixedPhase::Stationary => MixedPhase::ToMoP0,
                };
                Ok(true)
            }
            OpponentSpec::Novel { activation, .. } => Ok(episode + 1 == activation),
            _ => Ok(false),
        }
    }
}
