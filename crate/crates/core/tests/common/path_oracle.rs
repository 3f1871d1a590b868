//! Independent path oracle: enumerate every simple path.

use arn_core::domain::{Station, StationKind, WorldMap};
use rand::Rng;

/// A random connected door-free world of 2..=20 nodes.
pub fn random_world(seed: u64) -> WorldMap {
    let mut rng = super::rng(seed);
    let n = rng.random_range(2..=20);
    let extra = rng.random_range(0..5);
    let (nodes, edges) = super::random_graph(&mut rng, n, extra);
    let base = Station {
        id: "B".into(),
        node: nodes[0].id.clone(),
        kind: StationKind::Base,
    };
    WorldMap::new(nodes, edges, Vec::new(), vec![base]).unwrap()
}

/// Every simple path from `from` to `to`, as node indices.
pub fn simple_paths(w: &WorldMap, from: usize, to: usize) -> Vec<Vec<usize>> {
    fn go(w: &WorldMap, at: usize, to: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if at == to {
            out.push(path.clone());
            return;
        }
        for &(next, _) in w.neighbors(at) {
            if !path.contains(&next) {
                path.push(next);
                go(w, next, to, path, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(w, from, to, &mut vec![from], &mut out);
    out
}

pub fn path_length(w: &WorldMap, path: &[usize]) -> f64 {
    path.windows(2)
        .map(|p| {
            let (a, b) = (&w.nodes()[p[0]], &w.nodes()[p[1]]);
            (a.x - b.x).hypot(a.y - b.y)
        })
        .sum()
}

/// Shortest path by enumeration, ties to the smallest id sequence.
pub fn expected_shortest(w: &WorldMap, from: usize, to: usize) -> Vec<String> {
    let mut all: Vec<(f64, Vec<String>)> = simple_paths(w, from, to)
        .into_iter()
        .map(|p| (path_length(w, &p), p.iter().map(|&i| w.nodes()[i].id.clone()).collect()))
        .collect();
    let best = all.iter().map(|(l, _)| *l).fold(f64::INFINITY, f64::min);
    all.retain(|(l, _)| *l <= best + 1e-9);
    all.into_iter().map(|(_, p)| p).min().expect("connected world")
}
