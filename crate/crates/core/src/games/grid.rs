//! Grid geometry shared by the two stochastic games and the scripted
//! opponents that move on them.

use serde::{Deserialize, Serialize};

use super::Action;

/// A grid cell, `x` counting columns from the left and `y` rows from the top.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[i32; 2]", into = "[i32; 2]")]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn manhattan(self, other: Cell) -> i32 {
        (self.x - other.x).abs() + (self.y - other.y).abs()
    }

    pub fn offset(self, action: Action) -> Cell {
        let (dx, dy) = match action {
            Action::LEFT => (-1, 0),
            Action::RIGHT => (1, 0),
            Action::UP => (0, -1),
            Action::DOWN => (0, 1),
            _ => (0, 0),
        };
        Cell::new(self.x + dx, self.y + dy)
    }
}

impl From<[i32; 2]> for Cell {
    fn from([x, y]: [i32; 2]) -> Self {
        Cell::new(x, y)
    }
}

impl From<Cell> for [i32; 2] {
    fn from(c: Cell) -> Self {
        [c.x, c.y]
    }
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// Moves in the order used for every deterministic tie-break.
pub const MOVES: [Action; 4] = [Action::LEFT, Action::RIGHT, Action::UP, Action::DOWN];

const UNREACHABLE: u16 = u16::MAX;

/// All-pairs shortest path lengths on a grid with blocked cells.
///
/// Two tables are kept: plain distances, and distances that treat goal
/// cells as walls unless the goal is itself the destination.
#[derive(Debug, Clone)]
pub struct Geometry {
    width: i32,
    height: i32,
    blocked: Vec<bool>,
    dist: Vec<u16>,
    dist_avoiding_goals: Vec<u16>,
}

impl Geometry {
    pub fn new(width: i32, height: i32, blocked: &[Cell], goals: &[Cell]) -> Self {
        let n = (width * height) as usize;
        let mut blocked_mask = vec![false; n];
        let mut goal_mask = vec![false; n];
        let idx = |c: &Cell| (c.y * width + c.x) as usize;
        for c in blocked {
            if c.x >= 0 && c.x < width && c.y >= 0 && c.y < height {
                blocked_mask[idx(c)] = true;
            }
        }
        for c in goals {
            if c.x >= 0 && c.x < width && c.y >= 0 && c.y < height {
                goal_mask[idx(c)] = true;
            }
        }
        let mut geo = Self {
            width,
            height,
            blocked: blocked_mask,
            dist: vec![UNREACHABLE; n * n],
            dist_avoiding_goals: vec![UNREACHABLE; n * n],
        };
        for target in 0..n {
            let plain = geo.bfs(target, &vec![false; n]);
            let mut walls = goal_mask.clone();
            walls[target] = false;
            let avoiding = geo.bfs(target, &walls);
            geo.dist[target * n..(target + 1) * n].copy_from_slice(&plain);
            geo.dist_avoiding_goals[target * n..(target + 1) * n].copy_from_slice(&avoiding);
        }
        geo
    }

    pub fn n_cells(&self) -> usize {
        (self.width * self.height) as usize
    }

    pub fn cell_index(&self, c: Cell) -> usize {
        (c.y * self.width + c.x) as usize
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        Cell::new(index as i32 % self.width, index as i32 / self.width)
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.x >= 0 && c.x < self.width && c.y >= 0 && c.y < self.height
    }

    pub fn is_free(&self, c: Cell) -> bool {
        self.in_bounds(c) && !self.blocked[self.cell_index(c)]
    }

    /// Shortest path length, `None` if unreachable.
    pub fn distance(&self, from: Cell, to: Cell) -> Option<u32> {
        let d = self.dist[self.cell_index(to) * self.n_cells() + self.cell_index(from)];
        (d != UNREACHABLE).then_some(u32::from(d))
    }

    pub fn distance_avoiding_goals(&self, from: Cell, to: Cell) -> Option<u32> {
        let d = self.dist_avoiding_goals[self.cell_index(to) * self.n_cells() + self.cell_index(from)];
        (d != UNREACHABLE).then_some(u32::from(d))
    }

    /// First move of a shortest path from `from` to `to`; `STAY` when already
    /// there or when `to` cannot be reached.
    pub fn step_toward(&self, from: Cell, to: Cell, avoid_goals: bool) -> Action {
        let dist = |c: Cell| {
            if avoid_goals {
                self.distance_avoiding_goals(c, to)
            } else {
                self.distance(c, to)
            }
        };
        let Some(here) = dist(from) else {
            return Action::STAY;
        };
        if here == 0 {
            return Action::STAY;
        }
        for m in MOVES {
            let next = from.offset(m);
            if self.is_free(next) && dist(next) == Some(here - 1) {
                return m;
            }
        }
        Action::STAY
    }

    fn bfs(&self, target: usize, walls: &[bool]) -> Vec<u16> {
        let n = self.n_cells();
        let mut out = vec![UNREACHABLE; n];
        if self.blocked[target] {
            return out;
        }
        let mut queue = std::collections::VecDeque::new();
        out[target] = 0;
        queue.push_back(target);
        while let Some(cur) = queue.pop_front() {
            let c = self.cell_at(cur);
            for m in MOVES {
                let nb = c.offset(m);
                if !self.is_free(nb) {
                    continue;
                }
                let ni = self.cell_index(nb);
                if walls[ni] || out[ni] != UNREACHABLE {
                    continue;
                }
                out[ni] = out[cur] + 1;
                queue.push_back(ni);
            }
        }
        out
    }
}
