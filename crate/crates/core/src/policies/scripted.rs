//! Hand-written opponent strategies.
//!
//! Every rule is a function of the current state, so the tabular learner
//! facing it sees a Markov environment.
//!
//! Soccer routes differ in the row through which B carries the ball out and
//! in the shape of the attack (advance first, align first, or along the top
//! flank). Without the ball B falls back onto its route row: align-first
//! routes guard one cell in front of the goal line, the others guard the
//! goal line itself.
//!
//! Thieves follow a timed tour: they scout the cell just outside each goal
//! in their order and finally break into the last goal. At the first
//! scouting cell the thief lingers for as many steps as that goal's index,
//! which gives every order its own (goal, arrival step) pair; on a grid all
//! paths to a given goal have the same parity, so path lengths alone leave
//! ties. A thief that gets held up keeps steering toward where its schedule
//! says it should be.

use std::sync::{Arc, OnceLock};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::games::{Action, Cell, GameSpec, GameState, Player};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RouteShape {
    /// Run to the goal line along the current row, then line up.
    AdvanceFirst,
    /// Line up with the route row first, then run.
    AlignFirst,
    /// Climb to the top edge, run along it, then drop into the route row.
    Flank,
}

impl RouteShape {
    fn as_str(self) -> &'static str {
        match self {
            RouteShape::AdvanceFirst => "advance",
            RouteShape::AlignFirst => "align",
            RouteShape::Flank => "flank",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum ScriptedRule {
    /// Always the same action (RPS pure strategies).
    Constant { action: Action },
    /// Independent draw from a fixed distribution every step.
    Mixed { probs: Vec<f64> },
    SoccerRoute { row: i32, shape: RouteShape },
    ThiefTour {
        /// Indices into the layout's goal list; the last one is broken into.
        order: Vec<usize>,
        #[serde(skip)]
        schedule: OnceLock<Arc<Vec<Cell>>>,
    },
}

impl PartialEq for ScriptedRule {
    fn eq(&self, other: &Self) -> bool {
        use ScriptedRule::*;
        match (self, other) {
            (Constant { action: a }, Constant { action: b }) => a == b,
            (Mixed { probs: a }, Mixed { probs: b }) => a == b,
            (SoccerRoute { row: r1, shape: s1 }, SoccerRoute { row: r2, shape: s2 }) => {
                r1 == r2 && s1 == s2
            }
            (ThiefTour { order: a, .. }, ThiefTour { order: b, .. }) => a == b,
            _ => false,
        }
    }
}

impl ScriptedRule {
    pub fn thief_tour(order: Vec<usize>) -> Self {
        ScriptedRule::ThiefTour {
            order,
            schedule: OnceLock::new(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            ScriptedRule::Constant { action } => match action.0 {
                0 => "always-R".into(),
                1 => "always-P".into(),
                2 => "always-S".into(),
                n => format!("always-{n}"),
            },
            ScriptedRule::Mixed { probs } => {
                let parts: Vec<String> = probs.iter().map(|p| format!("{p:.2}")).collect();
                format!("mixed-{}", parts.join("/"))
            }
            ScriptedRule::SoccerRoute { row, shape } => format!("route-r{row}-{}", shape.as_str()),
            ScriptedRule::ThiefTour { order, .. } => {
                let parts: Vec<String> = order.iter().map(|g| g.to_string()).collect();
                format!("tour-{}", parts.join(""))
            }
        }
    }

    pub fn act<R: Rng + ?Sized>(&self, spec: &GameSpec, state: &GameState, rng: &mut R) -> Action {
        match self {
            ScriptedRule::Constant { action } => *action,
            ScriptedRule::Mixed { probs } => sample_action(probs, rng),
            ScriptedRule::SoccerRoute { row, shape } => soccer_route(spec, state, *row, *shape),
            ScriptedRule::ThiefTour { order, schedule } => {
                let schedule = schedule.get_or_init(|| Arc::new(plan_tour(spec, order)));
                thief_step(spec, state, schedule)
            }
        }
    }
}

pub(crate) fn sample_action<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> Action {
    let total: f64 = probs.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (i, p) in probs.iter().enumerate() {
        if u < *p {
            return Action(i as u8);
        }
        u -= p;
    }
    let last = probs.iter().rposition(|p| *p > 0.0).unwrap_or(probs.len() - 1);
    Action(last as u8)
}

fn soccer_route(spec: &GameSpec, s: &GameState, row: i32, shape: RouteShape) -> Action {
    let geo = spec.geometry();
    let me = s.pos_oppo;
    if s.ball != Some(Player::B) {
        let depth = if shape == RouteShape::AlignFirst { 2 } else { 1 };
        let home = Cell::new(spec.layout.width - depth, row);
        return geo.step_toward(me, home, false);
    }
    if me.x == 0 && me.y == row {
        return Action::LEFT;
    }
    let waypoint = match shape {
        RouteShape::AdvanceFirst if me.x > 0 => Cell::new(0, me.y),
        RouteShape::AlignFirst if me.y != row => Cell::new(me.x, row),
        RouteShape::Flank if me.x > 0 && me.y != 0 => Cell::new(me.x, 0),
        RouteShape::Flank if me.x > 0 => Cell::new(0, 0),
        _ => Cell::new(0, row),
    };
    geo.step_toward(me, waypoint, false)
}

/// Cell from which a thief scouts `goal`: the free neighbour on the side
/// facing the board centre.
fn scout_cell(spec: &GameSpec, goal: Cell) -> Cell {
    let geo = spec.geometry();
    let cx = spec.layout.width / 2;
    let cy = spec.layout.height / 2;
    let preferred = [
        Cell::new(goal.x + (cx - goal.x).signum(), goal.y),
        Cell::new(goal.x, goal.y + (cy - goal.y).signum()),
    ];
    preferred
        .into_iter()
        .chain(crate::games::grid::MOVES.iter().map(|m| goal.offset(*m)))
        .find(|c| *c != goal && geo.is_free(*c) && !spec.is_goal(*c))
        .unwrap_or(goal)
}

/// Planned thief position at every step, starting from the first B start.
fn plan_tour(spec: &GameSpec, order: &[usize]) -> Vec<Cell> {
    let geo = spec.geometry();
    let goals = &spec.layout.goals;
    let mut waypoints: Vec<Cell> = Vec::new();
    for (k, g) in order.iter().enumerate() {
        let goal = goals[*g % goals.len()];
        if k + 1 == order.len() {
            waypoints.push(goal);
        } else {
            waypoints.push(scout_cell(spec, goal));
        }
    }
    let mut pos = spec.layout.starts_oppo[0];
    let mut path = vec![pos];
    for (k, wp) in waypoints.into_iter().enumerate() {
        let mut guard = 0;
        while pos != wp && guard < 200 {
            let m = geo.step_toward(pos, wp, true);
            if m == Action::STAY {
                break;
            }
            pos = pos.offset(m);
            path.push(pos);
            guard += 1;
        }
        if k == 0 && order.len() > 1 {
            path.extend(std::iter::repeat(pos).take(order[0]));
        }
    }
    path
}

fn thief_step(spec: &GameSpec, s: &GameState, schedule: &[Cell]) -> Action {
    let last = schedule.len() - 1;
    let t = (s.step as usize + 1).min(last);
    spec.geometry().step_toward(s.pos_oppo, schedule[t], true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{self, GameId};
    use crate::rng::SimRng;

    #[test]
    fn tours_end_in_their_last_goal() {
        let spec = GameSpec::new(GameId::ThievesHunters);
        let rule = ScriptedRule::thief_tour(vec![2, 0, 1, 3]);
        let mut s = games::reset(&spec, &mut SimRng::new(0));
        let mut rng = SimRng::new(0);
        // A hides in a corner and never interferes.
        for _ in 0..50 {
            let b = rule.act(&spec, &s, &mut rng);
            let out = games::step(&spec, &s, Action::UP, b).unwrap();
            if let Some(r) = out.terminal {
                assert_eq!(r, -1.0);
                assert_eq!(out.next.pos_oppo, spec.layout.goals[3]);
                return;
            }
            s = out.next;
        }
        panic!("thief never finished its tour");
    }

    #[test]
    fn scouting_never_enters_other_goals() {
        let spec = GameSpec::new(GameId::ThievesHunters);
        let rule = ScriptedRule::thief_tour(vec![0, 3, 1, 2]);
        if let ScriptedRule::ThiefTour { order, .. } = &rule {
            let path = plan_tour(&spec, order);
            let final_goal = spec.layout.goals[2];
            for c in &path[..path.len() - 1] {
                assert!(!spec.is_goal(*c), "tour passes through goal {c}");
            }
            assert_eq!(*path.last().unwrap(), final_goal);
        }
    }

    #[test]
    fn tours_have_distinct_arrivals() {
        let spec = GameSpec::new(GameId::ThievesHunters);
        let mut seen = std::collections::HashSet::new();
        for p in crate::policies::scripted_library(&spec).iter() {
            if let crate::policies::PolicyKind::Scripted {
                rule: ScriptedRule::ThiefTour { order, .. },
            } = &p.kind
            {
                let path = plan_tour(&spec, order);
                assert!(path.len() < spec.layout.step_limit as usize);
                assert!(seen.insert((*path.last().unwrap(), path.len())), "{}", p.id);
            }
        }
        assert_eq!(seen.len(), 24);
    }

    #[test]
    fn soccer_routes_score_against_a_passive_keeper() {
        let spec = GameSpec::new(GameId::Soccer);
        for shape in [RouteShape::AdvanceFirst, RouteShape::AlignFirst, RouteShape::Flank] {
            for row in [2, 3, 4] {
                let rule = ScriptedRule::SoccerRoute { row, shape };
                let mut s = GameState {
                    pos_self: Cell::new(6, 6),
                    pos_oppo: Cell::new(5, 3),
                    ball: Some(Player::B),
                    step: 0,
                };
                let mut rng = SimRng::new(1);
                let mut scored = false;
                for _ in 0..50 {
                    let b = rule.act(&spec, &s, &mut rng);
                    let out = games::step(&spec, &s, Action::STAY, b).unwrap();
                    if out.terminal == Some(-1.0) {
                        assert_eq!(out.next.pos_oppo.y, row);
                        scored = true;
                        break;
                    }
                    s = out.next;
                }
                assert!(scored, "{} did not score", rule.label());
            }
        }
    }

    #[test]
    fn mixed_sampling_follows_probs() {
        let mut rng = SimRng::new(5);
        let probs = [0.8, 0.2, 0.0];
        let n = 20_000;
        let rocks = (0..n)
            .filter(|_| sample_action(&probs, &mut rng) == Action::ROCK)
            .count();
        let frac = rocks as f64 / n as f64;
        assert!((frac - 0.8).abs() < 0.02, "{frac}");
    }
}
