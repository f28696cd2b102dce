//! Exact minimum-cost bipartite assignment between point sets. The
//! feasibility graph (pairs within the matching threshold) is split into
//! connected components and each component is solved independently with the
//! Jonker–Volgenant shortest-augmenting-path scheme, which keeps the cubic
//! solver on small blocks.

use crate::geom::Vec2;
use std::collections::HashMap;

/// Cost given to pairs farther apart than the threshold. Large enough to
/// dominate any sum of feasible costs (so match count is maximized first),
/// small enough that dual variables stay well inside f64 precision.
const PROHIBITIVE_COST: f64 = 1e6;

/// Tiny preference for pairs with equal global indices. Among matchings of
/// equal geometric cost — coincident lane endpoints produce exact ties —
/// this makes a point set matched against itself reproduce the identity
/// assignment, which downstream identity checks rely on.
const INDEX_TIE_BREAK: f64 = 1e-9;

/// Optimal assignment between `pred` and `gt`: maximizes the number of
/// pairs within `threshold`, then minimizes their total distance. Returns
/// `(pred index, gt index, distance)` triples ordered by pred index.
pub fn match_points(pred: &[Vec2], gt: &[Vec2], threshold: f64) -> Vec<(usize, usize, f64)> {
    if pred.is_empty() || gt.is_empty() {
        return Vec::new();
    }

    // Candidate pairs via a uniform grid of cell size `threshold`.
    let cell = |p: Vec2| -> (i64, i64) {
        ((p.x / threshold).floor() as i64, (p.y / threshold).floor() as i64)
    };
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (j, g) in gt.iter().enumerate() {
        grid.entry(cell(*g)).or_default().push(j);
    }
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    for (i, p) in pred.iter().enumerate() {
        let (cx, cy) = cell(*p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(cands) = grid.get(&(cx + dx, cy + dy)) {
                    for &j in cands {
                        let d = p.distance(gt[j]);
                        if d <= threshold {
                            edges.push((i, j, d));
                        }
                    }
                }
            }
        }
    }
    if edges.is_empty() {
        return Vec::new();
    }

    // Connected components over pred ∪ gt nodes joined by feasible edges.
    let n_nodes = pred.len() + gt.len();
    let mut parent: Vec<usize> = (0..n_nodes).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let root = find(parent, parent[i]);
            parent[i] = root;
        }
        parent[i]
    }
    for &(i, j, _) in &edges {
        let (a, b) = (find(&mut parent, i), find(&mut parent, pred.len() + j));
        if a != b {
            parent[a] = b;
        }
    }

    struct Component {
        preds: Vec<usize>,
        gts: Vec<usize>,
        edges: Vec<(usize, usize, f64)>,
    }
    let mut comps: HashMap<usize, Component> = HashMap::new();
    for &(i, j, d) in &edges {
        let root = find(&mut parent, i);
        let comp = comps.entry(root).or_insert_with(|| Component {
            preds: Vec::new(),
            gts: Vec::new(),
            edges: Vec::new(),
        });
        if !comp.preds.contains(&i) {
            comp.preds.push(i);
        }
        if !comp.gts.contains(&j) {
            comp.gts.push(j);
        }
        comp.edges.push((i, j, d));
    }

    let mut matches: Vec<(usize, usize, f64)> = Vec::new();
    for comp in comps.values_mut() {
        comp.preds.sort_unstable();
        comp.gts.sort_unstable();
        let m = comp.preds.len().max(comp.gts.len());
        let col_of: HashMap<usize, usize> =
            comp.gts.iter().enumerate().map(|(c, &j)| (j, c)).collect();
        let row_of: HashMap<usize, usize> =
            comp.preds.iter().enumerate().map(|(r, &i)| (i, r)).collect();
        let mut cost = vec![vec![PROHIBITIVE_COST; m]; m];
        for &(i, j, d) in &comp.edges {
            let tie = if i == j { 0.0 } else { INDEX_TIE_BREAK };
            cost[row_of[&i]][col_of[&j]] = d + tie;
        }
        for (r, c) in solve(&cost).into_iter().enumerate() {
            if r < comp.preds.len() && c < comp.gts.len() && cost[r][c] < PROHIBITIVE_COST / 2.0 {
                let (i, j) = (comp.preds[r], comp.gts[c]);
                matches.push((i, j, pred[i].distance(gt[j])));
            }
        }
    }
    matches.sort_unstable_by(|a, b| a.0.cmp(&b.0));
    matches
}

/// Minimum-cost perfect assignment on a square matrix via shortest
/// augmenting paths with dual potentials; returns the column chosen for
/// each row.
fn solve(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut matched_row = vec![0usize; n + 1]; // row occupying column j (1-based; 0 = free)
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut cols = vec![0usize; n];
    for j in 1..=n {
        if matched_row[j] > 0 {
            cols[matched_row[j] - 1] = j - 1;
        }
    }
    cols
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Maximum bipartite matching size under the threshold (Kuhn's
    /// algorithm) — an independent bound on how many pairs any assignment
    /// can produce.
    fn max_matching_size(pred: &[Vec2], gt: &[Vec2], thr: f64) -> usize {
        let adj: Vec<Vec<usize>> = pred
            .iter()
            .map(|p| {
                gt.iter()
                    .enumerate()
                    .filter(|(_, g)| p.distance(**g) <= thr)
                    .map(|(j, _)| j)
                    .collect()
            })
            .collect();
        let mut owner: Vec<Option<usize>> = vec![None; gt.len()];
        fn augment(
            i: usize,
            adj: &[Vec<usize>],
            owner: &mut Vec<Option<usize>>,
            seen: &mut Vec<bool>,
        ) -> bool {
            for &j in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    if owner[j].is_none() || augment(owner[j].unwrap(), adj, owner, seen) {
                        owner[j] = Some(i);
                        return true;
                    }
                }
            }
            false
        }
        let mut size = 0;
        for i in 0..pred.len() {
            let mut seen = vec![false; gt.len()];
            if augment(i, &adj, &mut owner, &mut seen) {
                size += 1;
            }
        }
        size
    }

    /// Brute-force best assignment for tiny instances: maximize match
    /// count, then minimize total distance.
    fn brute_force(pred: &[Vec2], gt: &[Vec2], thr: f64) -> (usize, f64) {
        fn rec(
            i: usize,
            pred: &[Vec2],
            gt: &[Vec2],
            thr: f64,
            used: &mut Vec<bool>,
            best: &mut (usize, f64),
            count: usize,
            sum: f64,
        ) {
            if i == pred.len() {
                if count > best.0 || (count == best.0 && sum < best.1) {
                    *best = (count, sum);
                }
                return;
            }
            rec(i + 1, pred, gt, thr, used, best, count, sum);
            for j in 0..gt.len() {
                if !used[j] && pred[i].distance(gt[j]) <= thr {
                    used[j] = true;
                    rec(i + 1, pred, gt, thr, used, best, count + 1, sum + pred[i].distance(gt[j]));
                    used[j] = false;
                }
            }
        }
        let mut best = (0, f64::INFINITY);
        let mut used = vec![false; gt.len()];
        rec(0, pred, gt, thr, &mut used, &mut best, 0, 0.0);
        if best.0 == 0 {
            best.1 = 0.0;
        }
        best
    }

    fn random_points(rng: &mut ChaCha8Rng, n: usize, span: f64) -> Vec<Vec2> {
        (0..n)
            .map(|_| Vec2::new(rng.gen_range(-span..span), rng.gen_range(-span..span)))
            .collect()
    }

    #[test]
    fn empty_inputs_yield_no_matches() {
        assert!(match_points(&[], &[Vec2::ZERO], 1.5).is_empty());
        assert!(match_points(&[Vec2::ZERO], &[], 1.5).is_empty());
    }

    #[test]
    fn identity_matches_by_index_despite_duplicates() {
        // Two coincident points: the assignment must still pair i with i.
        let pts = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
        ];
        let matches = match_points(&pts, &pts, 1.5);
        assert_eq!(matches.len(), 3);
        for (k, &(i, j, d)) in matches.iter().enumerate() {
            assert_eq!((i, j), (k, k));
            assert_eq!(d, 0.0);
        }
    }

    #[test]
    fn count_beats_distance() {
        // One pred point close to a single gt point that another pred point
        // also needs: the solver must spread out to match both.
        let pred = vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0)];
        let gt = vec![Vec2::new(0.1, 0.0), Vec2::new(1.4, 0.0)];
        let matches = match_points(&pred, &gt, 1.5);
        assert_eq!(matches.len(), 2);
    }

    #[test]
    fn rejects_pairs_beyond_threshold() {
        let pred = vec![Vec2::new(0.0, 0.0)];
        let gt = vec![Vec2::new(1.6, 0.0)];
        assert!(match_points(&pred, &gt, 1.5).is_empty());
    }

    #[test]
    fn match_count_equals_kuhn_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for case in 0..200 {
            let np = rng.gen_range(0..=25);
            let ng = rng.gen_range(0..=25);
            let pred = random_points(&mut rng, np, 6.0);
            let gt = random_points(&mut rng, ng, 6.0);
            let matches = match_points(&pred, &gt, 1.5);
            assert_eq!(
                matches.len(),
                max_matching_size(&pred, &gt, 1.5),
                "case {case}: np={np} ng={ng}"
            );
        }
    }

    #[test]
    fn total_distance_matches_exhaustive_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..60 {
            let np = rng.gen_range(0..=5);
            let ng = rng.gen_range(0..=5);
            let pred = random_points(&mut rng, np, 2.5);
            let gt = random_points(&mut rng, ng, 2.5);
            let matches = match_points(&pred, &gt, 1.5);
            let sum: f64 = matches.iter().map(|&(_, _, d)| d).sum();
            let (best_count, best_sum) = brute_force(&pred, &gt, 1.5);
            assert_eq!(matches.len(), best_count);
            assert!((sum - best_sum).abs() < 1e-6, "{sum} vs {best_sum}");
        }
    }
}
