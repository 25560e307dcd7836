//! The two-player competitive environments: rock-paper-scissors, grid soccer
//! and thieves-and-hunters.
//!
//! Player A is always the learning agent and player B its opponent. All three
//! games are zero-sum with terminal returns in {-1, 0, +1}.
//!
//! Soccer: A carries the ball out through the right edge on one of the goal
//! rows, B through the left edge. Both players choosing the same cell (or
//! trying to swap cells) leaves both in place and hands the ball over.
//!
//! Thieves-and-hunters: B scores by entering a goal cell on its own. A scores
//! by entering the same goal cell on the same step as B. A hunter entering a
//! goal alone trips the alarm and the thief gets away, so B scores. Moves that
//! would bring both players to one non-goal cell, or swap them, are
//! cancelled.

pub mod grid;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use grid::{Cell, Geometry};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GameId {
    Rps,
    Soccer,
    ThievesHunters,
}

impl GameId {
    pub const ALL: [GameId; 3] = [GameId::Rps, GameId::Soccer, GameId::ThievesHunters];

    pub fn as_str(self) -> &'static str {
        match self {
            GameId::Rps => "rps",
            GameId::Soccer => "soccer",
            GameId::ThievesHunters => "thieves-hunters",
        }
    }
}

impl fmt::Display for GameId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GameId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rps" => Ok(GameId::Rps),
            "soccer" => Ok(GameId::Soccer),
            "thieves-hunters" | "thieves" => Ok(GameId::ThievesHunters),
            other => Err(Error::Config(format!(
                "unknown game `{other}` (expected rps, soccer or thieves-hunters)"
            ))),
        }
    }
}

/// Index into a game's action set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Action(pub u8);

impl Action {
    pub const ROCK: Action = Action(0);
    pub const PAPER: Action = Action(1);
    pub const SCISSORS: Action = Action(2);

    pub const LEFT: Action = Action(0);
    pub const RIGHT: Action = Action(1);
    pub const UP: Action = Action(2);
    pub const DOWN: Action = Action(3);
    pub const STAY: Action = Action(4);

    pub fn index(self) -> usize {
        usize::from(self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Player {
    A,
    B,
}

impl Player {
    pub fn other(self) -> Player {
        match self {
            Player::A => Player::B,
            Player::B => Player::A,
        }
    }
}

/// Board description. Every field can be overridden from the `[game]`
/// section of an experiment config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub width: i32,
    pub height: i32,
    pub step_limit: u32,
    pub blocked: Vec<Cell>,
    pub starts_self: Vec<Cell>,
    pub starts_oppo: Vec<Cell>,
    /// Soccer: rows through which the ball can be carried off the board.
    pub goal_rows: Vec<i32>,
    /// Thieves-and-hunters: goal cells.
    pub goals: Vec<Cell>,
}

impl Layout {
    pub fn rps() -> Self {
        Self {
            width: 1,
            height: 1,
            step_limit: 1,
            blocked: vec![],
            starts_self: vec![Cell::new(0, 0)],
            starts_oppo: vec![Cell::new(0, 0)],
            goal_rows: vec![],
            goals: vec![],
        }
    }

    pub fn soccer() -> Self {
        Self {
            width: 7,
            height: 7,
            step_limit: 50,
            blocked: vec![],
            starts_self: (2..=4).map(|y| Cell::new(1, y)).collect(),
            starts_oppo: (2..=4).map(|y| Cell::new(5, y)).collect(),
            goal_rows: vec![2, 3, 4],
            goals: vec![],
        }
    }

    pub fn thieves_hunters() -> Self {
        Self {
            width: 7,
            height: 7,
            step_limit: 50,
            blocked: vec![],
            starts_self: vec![Cell::new(0, 3)],
            starts_oppo: vec![Cell::new(6, 3)],
            goal_rows: vec![],
            goals: vec![
                Cell::new(1, 1),
                Cell::new(1, 5),
                Cell::new(5, 1),
                Cell::new(5, 5),
            ],
        }
    }

    pub fn default_for(id: GameId) -> Self {
        match id {
            GameId::Rps => Self::rps(),
            GameId::Soccer => Self::soccer(),
            GameId::ThievesHunters => Self::thieves_hunters(),
        }
    }
}

/// A game together with its board and precomputed geometry.
#[derive(Debug, Clone)]
pub struct GameSpec {
    pub id: GameId,
    pub layout: Layout,
    geometry: Arc<Geometry>,
}

impl PartialEq for GameSpec {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id && self.layout == other.layout
    }
}

impl GameSpec {
    pub fn new(id: GameId) -> Self {
        Self::with_layout(id, Layout::default_for(id)).expect("built-in layouts are valid")
    }

    pub fn with_layout(id: GameId, layout: Layout) -> Result<Self> {
        validate_layout(id, &layout)?;
        let geometry = Geometry::new(layout.width, layout.height, &layout.blocked, &layout.goals);
        Ok(Self {
            id,
            layout,
            geometry: Arc::new(geometry),
        })
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn n_actions(&self) -> usize {
        match self.id {
            GameId::Rps => 3,
            GameId::Soccer | GameId::ThievesHunters => 5,
        }
    }

    pub fn n_states(&self) -> usize {
        let cells = self.geometry.n_cells();
        match self.id {
            GameId::Rps => 1,
            GameId::Soccer => 2 * cells * cells,
            GameId::ThievesHunters => self.layout.step_limit as usize * cells,
        }
    }

    pub fn is_zero_sum(&self) -> bool {
        true
    }

    /// Largest achievable episodic return.
    pub fn max_return(&self) -> f64 {
        1.0
    }

    pub fn is_goal(&self, c: Cell) -> bool {
        self.layout.goals.contains(&c)
    }
}

fn validate_layout(id: GameId, l: &Layout) -> Result<()> {
    let bad = |msg: String| Err(Error::Config(msg));
    if l.width < 1 || l.height < 1 || l.width * l.height > 400 {
        return bad(format!("grid {}x{} out of range", l.width, l.height));
    }
    if l.step_limit == 0 {
        return bad("step_limit must be positive".into());
    }
    if id == GameId::Rps {
        return Ok(());
    }
    if l.starts_self.is_empty() || l.starts_oppo.is_empty() {
        return bad("both players need at least one start cell".into());
    }
    let geo = Geometry::new(l.width, l.height, &l.blocked, &[]);
    for c in l.starts_self.iter().chain(&l.starts_oppo) {
        if !geo.is_free(*c) {
            return bad(format!("start cell {c} is blocked or off the grid"));
        }
    }
    for s in &l.starts_self {
        if l.starts_oppo.contains(s) {
            return bad(format!("start cell {s} is shared by both players"));
        }
    }
    match id {
        GameId::Soccer => {
            if l.goal_rows.is_empty() || l.goal_rows.iter().any(|r| *r < 0 || *r >= l.height) {
                return bad("soccer needs goal rows inside the grid".into());
            }
        }
        GameId::ThievesHunters => {
            if l.goals.is_empty() {
                return bad("thieves-and-hunters needs goal cells".into());
            }
            for g in &l.goals {
                if !geo.is_free(*g) || l.starts_oppo.contains(g) || l.starts_self.contains(g) {
                    return bad(format!("goal cell {g} is blocked, off the grid or a start"));
                }
            }
        }
        GameId::Rps => {}
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GameState {
    pub pos_self: Cell,
    pub pos_oppo: Cell,
    /// Soccer only.
    pub ball: Option<Player>,
    pub step: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GameResult {
    Win,
    Lose,
    Draw,
}

impl GameResult {
    pub fn from_return(r_self: f64, r_oppo: f64) -> Self {
        if r_self > r_oppo {
            GameResult::Win
        } else if r_self < r_oppo {
            GameResult::Lose
        } else {
            GameResult::Draw
        }
    }

    pub fn is_win(self) -> bool {
        self == GameResult::Win
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GameResult::Win => "win",
            GameResult::Lose => "lose",
            GameResult::Draw => "draw",
        }
    }
}

/// Terminal signal of one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeOutcome {
    pub r_self: f64,
    pub r_oppo: f64,
    pub result: GameResult,
    pub steps: u32,
    /// `(state, a_self, a_oppo)` per step; empty unless recording was requested.
    pub trajectory: Vec<(GameState, Action, Action)>,
}

impl EpisodeOutcome {
    pub fn new(r_self: f64, steps: u32) -> Self {
        let r_oppo = -r_self;
        Self {
            r_self,
            r_oppo,
            result: GameResult::from_return(r_self, r_oppo),
            steps,
            trajectory: Vec::new(),
        }
    }

    pub fn won(&self) -> bool {
        self.result.is_win()
    }
}

/// Result of one joint move.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub next: GameState,
    /// `Some(r_self)` once the episode is over.
    pub terminal: Option<f64>,
}

pub fn reset<R: Rng + ?Sized>(spec: &GameSpec, rng: &mut R) -> GameState {
    let l = &spec.layout;
    match spec.id {
        GameId::Rps => GameState {
            pos_self: Cell::new(0, 0),
            pos_oppo: Cell::new(0, 0),
            ball: None,
            step: 0,
        },
        GameId::Soccer => {
            let pos_self = l.starts_self[rng.gen_range(0..l.starts_self.len())];
            let pos_oppo = l.starts_oppo[rng.gen_range(0..l.starts_oppo.len())];
            let ball = if rng.gen_bool(0.5) { Player::A } else { Player::B };
            GameState {
                pos_self,
                pos_oppo,
                ball: Some(ball),
                step: 0,
            }
        }
        GameId::ThievesHunters => {
            let pos_self = l.starts_self[rng.gen_range(0..l.starts_self.len())];
            let pos_oppo = l.starts_oppo[rng.gen_range(0..l.starts_oppo.len())];
            GameState {
                pos_self,
                pos_oppo,
                ball: None,
                step: 0,
            }
        }
    }
}

pub fn step(spec: &GameSpec, state: &GameState, a_self: Action, a_oppo: Action) -> Result<Step> {
    let size = spec.n_actions();
    for a in [a_self, a_oppo] {
        if a.index() >= size {
            return Err(Error::InvalidAction {
                action: a.index(),
                size,
            });
        }
    }
    Ok(match spec.id {
        GameId::Rps => Step {
            next: *state,
            terminal: Some(rps_payoff(a_self, a_oppo)),
        },
        GameId::Soccer => soccer_step(spec, state, a_self, a_oppo),
        GameId::ThievesHunters => thieves_step(spec, state, a_self, a_oppo),
    })
}

/// Return to the player choosing `mine` against `theirs`.
pub fn rps_payoff(mine: Action, theirs: Action) -> f64 {
    match (mine.0 + 3 - theirs.0) % 3 {
        0 => 0.0,
        1 => 1.0,
        _ => -1.0,
    }
}

/// Target cell of a move; invalid moves resolve to staying put.
fn target(spec: &GameSpec, from: Cell, a: Action) -> Cell {
    let to = from.offset(a);
    if spec.geometry.is_free(to) {
        to
    } else {
        from
    }
}

fn finish_step(spec: &GameSpec, mut next: GameState) -> Step {
    next.step += 1;
    let terminal = (next.step >= spec.layout.step_limit).then_some(0.0);
    Step { next, terminal }
}

fn soccer_step(spec: &GameSpec, s: &GameState, a_self: Action, a_oppo: Action) -> Step {
    let l = &spec.layout;
    let carrier = s.ball.unwrap_or(Player::A);
    if carrier == Player::A
        && a_self == Action::RIGHT
        && s.pos_self.x == l.width - 1
        && l.goal_rows.contains(&s.pos_self.y)
    {
        return Step {
            next: GameState { step: s.step + 1, ..*s },
            terminal: Some(1.0),
        };
    }
    if carrier == Player::B
        && a_oppo == Action::LEFT
        && s.pos_oppo.x == 0
        && l.goal_rows.contains(&s.pos_oppo.y)
    {
        return Step {
            next: GameState { step: s.step + 1, ..*s },
            terminal: Some(-1.0),
        };
    }

    let t_self = target(spec, s.pos_self, a_self);
    let t_oppo = target(spec, s.pos_oppo, a_oppo);
    let mut next = *s;
    if t_self == t_oppo || (t_self == s.pos_oppo && t_oppo == s.pos_self) {
        next.ball = Some(carrier.other());
    } else {
        next.pos_self = t_self;
        next.pos_oppo = t_oppo;
    }
    finish_step(spec, next)
}

fn thieves_step(spec: &GameSpec, s: &GameState, a_self: Action, a_oppo: Action) -> Step {
    let t_self = target(spec, s.pos_self, a_self);
    let t_oppo = target(spec, s.pos_oppo, a_oppo);
    let self_enters = t_self != s.pos_self;
    let oppo_enters = t_oppo != s.pos_oppo;

    if t_self == t_oppo && self_enters && oppo_enters && spec.is_goal(t_oppo) {
        let next = GameState {
            pos_self: t_self,
            pos_oppo: t_oppo,
            step: s.step + 1,
            ..*s
        };
        return Step {
            next,
            terminal: Some(1.0),
        };
    }

    let mut next = *s;
    if t_self == t_oppo || (t_self == s.pos_oppo && t_oppo == s.pos_self) {
        return finish_step(spec, next);
    }
    next.pos_self = t_self;
    next.pos_oppo = t_oppo;
    if oppo_enters && spec.is_goal(t_oppo) {
        next.step += 1;
        return Step {
            next,
            terminal: Some(-1.0),
        };
    }
    if self_enters && spec.is_goal(t_self) {
        // The hunter trips the alarm on an empty goal and the thief escapes.
        next.step += 1;
        return Step {
            next,
            terminal: Some(-1.0),
        };
    }
    finish_step(spec, next)
}

/// Dense index of a state for tabular methods.
///
/// Soccer keys on (A cell, B cell, ball owner). Thieves-and-hunters keys on
/// (A cell, step) only: thieves follow timed tours, so the hunter's own
/// position and the clock are what it acts on. A table that also saw the
/// thief would learn to react to it and catch other tours by accident.
pub fn state_index(spec: &GameSpec, s: &GameState) -> usize {
    let geo = spec.geometry();
    let cells = geo.n_cells();
    let a = geo.cell_index(s.pos_self);
    match spec.id {
        GameId::Rps => 0,
        GameId::Soccer => {
            let b = geo.cell_index(s.pos_oppo);
            let ball = usize::from(s.ball == Some(Player::B));
            (ball * cells + b) * cells + a
        }
        GameId::ThievesHunters => {
            let step = (s.step as usize).min(spec.layout.step_limit as usize - 1);
            step * cells + a
        }
    }
}

/// Dense index of a state as seen by player B, for tables that model the
/// opponent. Same as [`state_index`] except in thieves-and-hunters, where it
/// keys on (B cell, step).
pub fn opponent_state_index(spec: &GameSpec, s: &GameState) -> usize {
    match spec.id {
        GameId::ThievesHunters => {
            let geo = spec.geometry();
            let step = (s.step as usize).min(spec.layout.step_limit as usize - 1);
            step * geo.n_cells() + geo.cell_index(s.pos_oppo)
        }
        _ => state_index(spec, s),
    }
}

/// A state with the given index. For thieves-and-hunters the thief is put
/// on its first start cell, since the index does not record it.
pub fn state_from_index(spec: &GameSpec, index: usize) -> Result<GameState> {
    if index >= spec.n_states() {
        return Err(Error::UnknownState(index));
    }
    let geo = spec.geometry();
    let cells = geo.n_cells();
    let a = geo.cell_at(index % cells);
    let b = geo.cell_at((index / cells) % cells);
    let upper = index / (cells * cells);
    Ok(match spec.id {
        GameId::Rps => GameState {
            pos_self: Cell::new(0, 0),
            pos_oppo: Cell::new(0, 0),
            ball: None,
            step: 0,
        },
        GameId::Soccer => GameState {
            pos_self: a,
            pos_oppo: b,
            ball: Some(if upper == 1 { Player::B } else { Player::A }),
            step: 0,
        },
        GameId::ThievesHunters => GameState {
            pos_self: a,
            pos_oppo: spec.layout.starts_oppo[0],
            ball: None,
            step: (index / cells) as u32,
        },
    })
}
