//! Exhaustive depth-bounded search over every valid action sequence, with its
//! own distance table and door-deferral rule.

use std::collections::HashMap;

use arn_core::constraints::{ConstraintSet, Window};
use rand::Rng;

use super::Instance;

pub const MAX_LEN: usize = 12;
const EPS: f64 = 1e-9;

pub struct Oracle<'a> {
    inst: &'a Instance,
    dist: Vec<Vec<f64>>,
    windows: Vec<(f64, f64)>,
    pickup: Vec<usize>,
    base: usize,
    best: f64,
    seen: HashMap<(usize, Option<usize>, Option<usize>, Vec<u8>), Vec<(f64, usize)>>,
}

impl<'a> Oracle<'a> {
    pub fn new(inst: &'a Instance, constraints: &ConstraintSet) -> Self {
        let w = &inst.world;
        let n = w.nodes().len();
        let mut dist = vec![vec![f64::INFINITY; n]; n];
        for (i, row) in dist.iter_mut().enumerate() {
            row[i] = 0.0;
        }
        for e in w.edges().iter().filter(|e| e.door.is_none()) {
            let a = w.node_idx(&e.from).unwrap();
            let b = w.node_idx(&e.to).unwrap();
            dist[a][b] = dist[a][b].min(e.length);
            dist[b][a] = dist[b][a].min(e.length);
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let via = dist[i][k] + dist[k][j];
                    if via < dist[i][j] {
                        dist[i][j] = via;
                    }
                }
            }
        }
        let node_of = |station: &str| w.node_idx(&w.station(station).unwrap().node).unwrap();
        Oracle {
            inst,
            dist,
            windows: constraints.windows().iter().map(|w| (w.start, w.end)).collect(),
            pickup: inst.goal.deliveries.iter().map(|d| node_of(&d.pickup)).collect(),
            base: node_of("B"),
            best: f64::INFINITY,
            seen: HashMap::new(),
        }
    }

    /// Earliest request start at or after `t` whose `open_s` seconds avoid every window interior.
    fn defer(&self, t: f64, open_s: f64) -> f64 {
        let mut s = t;
        loop {
            let mut moved = false;
            for &(a, b) in &self.windows {
                if s < b - EPS && a < s + open_s - EPS {
                    s = b;
                    moved = true;
                }
            }
            if !moved {
                return s;
            }
        }
    }

    pub fn run(&mut self, now: f64) -> Option<f64> {
        let objs = vec![0u8; self.pickup.len()];
        let loc = self.inst.world.node_idx(&self.inst.state.robot_location).unwrap();
        self.dfs(loc, None, None, objs, now, 0);
        self.best.is_finite().then_some(self.best)
    }

    /// `open` is the door opened by the previous action; `usize::MAX` marks an
    /// assisted opening scheduled without a traversal after it.
    fn dfs(&mut self, loc: usize, facing: Option<usize>, open: Option<usize>, objs: Vec<u8>, t: f64, depth: usize) {
        if t >= self.best - EPS {
            return;
        }
        if objs.iter().all(|&o| o == 2) {
            self.best = t;
            return;
        }
        if depth >= MAX_LEN {
            return;
        }
        let key = (loc, facing, open, objs.clone());
        let entry = self.seen.entry(key).or_default();
        if entry.iter().any(|&(t2, d2)| t2 <= t + EPS && d2 <= depth) {
            return;
        }
        entry.push((t, depth));

        let w = &self.inst.world;
        let robot = &self.inst.robot;
        let speed = robot.speed;

        for m in 0..w.nodes().len() {
            if m != loc && self.dist[loc][m].is_finite() {
                self.dfs(m, None, None, objs.clone(), t + self.dist[loc][m] / speed, depth + 1);
            }
        }
        for d in 0..w.doors().len() {
            if facing == Some(d) {
                continue;
            }
            if let Some(side) = w.door_side(d, loc) {
                let dur = self.dist[loc][side] / speed + 1.0;
                self.dfs(side, Some(d), None, objs.clone(), t + dur, depth + 1);
            }
        }
        if let (Some(d), false) = (facing, open == Some(usize::MAX)) {
            let door = &w.doors()[d];
            let (a, b) = w.door_endpoints(d);
            let other = if a == loc { b } else { a };
            let through = w.door_edge(d).length / speed;
            if open == Some(d) {
                if !door.assisted {
                    self.dfs(other, None, None, objs.clone(), t + through, depth + 1);
                }
            } else if door.assisted {
                let s = self.defer(t, 10.0);
                // open and go through
                if depth + 2 <= MAX_LEN {
                    self.dfs(other, None, None, objs.clone(), s + 10.0 + through, depth + 2);
                }
                // open and do something else: the door closes again, so the
                // robot is back where it was, later
                self.dfs(loc, facing, Some(usize::MAX), objs.clone(), s + 10.0, depth + 1);
            } else {
                self.dfs(loc, facing, Some(d), objs.clone(), t + 3.0, depth + 1);
            }
        }
        let carried = objs.iter().filter(|&&o| o == 1).count();
        for i in 0..objs.len() {
            let mut next = objs.clone();
            if objs[i] == 0 && self.pickup[i] == loc && carried < robot.capacity {
                next[i] = 1;
            } else if objs[i] == 1 && loc == self.base {
                next[i] = 2;
            } else {
                continue;
            }
            self.dfs(loc, None, None, next, t + robot.handling_s, depth + 1);
        }
    }
}

pub fn random_constraints(rng: &mut impl Rng) -> ConstraintSet {
    let k = rng.random_range(0..=2);
    ConstraintSet::new((0..k).map(|_| {
        let start = rng.random_range(0.0..150.0_f64).round();
        let len = [120.0, 240.0, 20.0, 45.5][rng.random_range(0..4)];
        Window::new(start, start + len)
    }))
}
