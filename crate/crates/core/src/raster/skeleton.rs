//! Skeleton vectorization: binarize a polyline channel pair, thin it to a
//! one-pixel skeleton (Zhang-Suen), trace paths between junctions and
//! endpoints, orient each path by majority vote over the stored direction
//! vectors, prune short fragments and resample to fixed-size polylines.

use super::{resample_polyline, PolylineChannel, Rsi, PRUNE_MIN_LENGTH_M};
use crate::geom::Vec2;
use crate::scene::{Polyline, POLYLINE_POINTS};
use std::collections::HashSet;

/// Extracts directed polylines from one polyline channel group.
pub fn skeleton_vectorize(rsi: &Rsi, channel: PolylineChannel) -> Vec<Polyline> {
    let entity = channel.entity();
    let w = rsi.width as usize;
    let h = rsi.height as usize;

    let mut grid = vec![false; w * h];
    for row in 0..rsi.height {
        for col in 0..rsi.width {
            grid[(row as usize) * w + col as usize] =
                rsi.value(row, col, entity) != (0.0, 0.0);
        }
    }

    thin_zhang_suen(&mut grid, w, h);

    let paths = trace_paths(&grid, w, h);

    let mut out = Vec::new();
    for path in paths {
        let world: Vec<Vec2> = path
            .iter()
            .map(|&(r, c)| rsi.pixel_center(r as u32, c as u32))
            .collect();
        if world.len() < 2 || crate::scene::chain_length(&world) < PRUNE_MIN_LENGTH_M {
            continue;
        }
        let oriented = orient_by_vote(world, &path, rsi, channel);
        if let Ok(resampled) = resample_polyline(&oriented, POLYLINE_POINTS) {
            if let Ok(line) = Polyline::new(&resampled) {
                out.push(line);
            }
        }
    }
    out
}

/// Flips the path when fewer than half of the on-path direction samples
/// agree with the traversal direction.
fn orient_by_vote(
    world: Vec<Vec2>,
    path: &[(usize, usize)],
    rsi: &Rsi,
    channel: PolylineChannel,
) -> Vec<Vec2> {
    let mut agree = 0usize;
    let mut disagree = 0usize;
    for i in 0..world.len() - 1 {
        let step = world[i + 1] - world[i];
        let (r, c) = path[i];
        let (vx, vy) = rsi.value(r as u32, c as u32, channel.entity());
        let dot = step.x * vx as f64 + step.y * vy as f64;
        if dot > 0.0 {
            agree += 1;
        } else if dot < 0.0 {
            disagree += 1;
        }
    }
    if disagree > agree {
        let mut flipped = world;
        flipped.reverse();
        flipped
    } else {
        world
    }
}

/// In-place Zhang-Suen thinning of an 8-connected binary grid.
fn thin_zhang_suen(grid: &mut [bool], w: usize, h: usize) {
    let at = |g: &[bool], r: i64, c: i64| -> bool {
        r >= 0 && c >= 0 && (r as usize) < h && (c as usize) < w && g[(r as usize) * w + c as usize]
    };
    loop {
        let mut changed = false;
        for pass in 0..2 {
            let mut to_clear = Vec::new();
            for r in 0..h as i64 {
                for c in 0..w as i64 {
                    if !at(grid, r, c) {
                        continue;
                    }
                    // P2..P9 clockwise starting north.
                    let p = [
                        at(grid, r - 1, c),
                        at(grid, r - 1, c + 1),
                        at(grid, r, c + 1),
                        at(grid, r + 1, c + 1),
                        at(grid, r + 1, c),
                        at(grid, r + 1, c - 1),
                        at(grid, r, c - 1),
                        at(grid, r - 1, c - 1),
                    ];
                    let b: u32 = p.iter().map(|&v| v as u32).sum();
                    if !(2..=6).contains(&b) {
                        continue;
                    }
                    let mut transitions = 0;
                    for k in 0..8 {
                        if !p[k] && p[(k + 1) % 8] {
                            transitions += 1;
                        }
                    }
                    if transitions != 1 {
                        continue;
                    }
                    let (c1, c2) = if pass == 0 {
                        (p[0] && p[2] && p[4], p[2] && p[4] && p[6])
                    } else {
                        (p[0] && p[2] && p[6], p[0] && p[4] && p[6])
                    };
                    if !c1 && !c2 {
                        to_clear.push((r as usize) * w + c as usize);
                    }
                }
            }
            if !to_clear.is_empty() {
                changed = true;
                for idx in to_clear {
                    grid[idx] = false;
                }
            }
        }
        if !changed {
            break;
        }
    }
}

const NEIGHBORS: [(i64, i64); 8] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, -1),
    (0, 1),
    (1, -1),
    (1, 0),
    (1, 1),
];

/// Traces maximal pixel paths between skeleton nodes (pixels whose 8-degree
/// differs from 2), then picks up any leftover cycles.
fn trace_paths(grid: &[bool], w: usize, h: usize) -> Vec<Vec<(usize, usize)>> {
    let on = |r: i64, c: i64| -> bool {
        r >= 0 && c >= 0 && (r as usize) < h && (c as usize) < w && grid[(r as usize) * w + c as usize]
    };
    let neighbors = |r: usize, c: usize| -> Vec<(usize, usize)> {
        NEIGHBORS
            .iter()
            .filter_map(|&(dr, dc)| {
                let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                on(nr, nc).then(|| (nr as usize, nc as usize))
            })
            .collect()
    };
    let degree = |r: usize, c: usize| neighbors(r, c).len();

    let mut paths = Vec::new();
    let mut visited_edges: HashSet<(usize, usize)> = HashSet::new();
    let edge_key = |a: (usize, usize), b: (usize, usize)| {
        let ia = a.0 * w + a.1;
        let ib = b.0 * w + b.1;
        (ia.min(ib), ia.max(ib))
    };

    let walk = |start: (usize, usize),
                    first: (usize, usize),
                    visited: &mut HashSet<(usize, usize)>|
     -> Vec<(usize, usize)> {
        let mut path = vec![start, first];
        visited.insert(edge_key(start, first));
        let (mut prev, mut cur) = (start, first);
        loop {
            if degree(cur.0, cur.1) != 2 || cur == start {
                break;
            }
            let next = neighbors(cur.0, cur.1).into_iter().find(|&n| n != prev);
            let Some(next) = next else { break };
            if visited.contains(&edge_key(cur, next)) {
                break;
            }
            visited.insert(edge_key(cur, next));
            path.push(next);
            prev = cur;
            cur = next;
        }
        path
    };

    // Paths anchored at nodes.
    for r in 0..h {
        for c in 0..w {
            if !grid[r * w + c] || degree(r, c) == 2 {
                continue;
            }
            for n in neighbors(r, c) {
                if !visited_edges.contains(&edge_key((r, c), n)) {
                    paths.push(walk((r, c), n, &mut visited_edges));
                }
            }
        }
    }
    // Leftover cycles consist entirely of degree-2 pixels.
    for r in 0..h {
        for c in 0..w {
            if !grid[r * w + c] || degree(r, c) != 2 {
                continue;
            }
            let untouched = neighbors(r, c)
                .into_iter()
                .find(|&n| !visited_edges.contains(&edge_key((r, c), n)));
            if let Some(n) = untouched {
                paths.push(walk((r, c), n, &mut visited_edges));
            }
        }
    }
    paths
}
