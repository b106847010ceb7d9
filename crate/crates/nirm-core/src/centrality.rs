//! Classical node-ranking baselines over a masked graph, plus the CoreHD
//! dismantling heuristic.
//!
//! Every ranker scores the surviving subgraph and fills removed positions
//! with [`crate::NEVER_SELECTED`], so adaptive dismantling can re-invoke it
//! on the residual network without copying the graph.

use crate::graph::{Graph, NodeMask};
use crate::oracle::residual_target;
use crate::parallel;
use crate::NEVER_SELECTED;

/// Sources per parallel work unit in the path-based centralities. Fixed so
/// the floating-point reduction order never depends on the worker count.
const SOURCE_CHUNK: usize = 256;

/// Surviving degree of each surviving node.
pub fn degree_centrality(g: &Graph, mask: &NodeMask) -> Vec<f64> {
    assert_eq!(mask.len(), g.node_count());
    (0..g.node_count())
        .map(|i| {
            if mask.is_removed(i) {
                NEVER_SELECTED
            } else {
                surviving_degree(g, mask, i) as f64
            }
        })
        .collect()
}

/// Collective influence at the given radius:
/// `(d_i - 1) * sum of (d_j - 1)` over nodes at distance exactly `radius`
/// in the surviving subgraph.
pub fn collective_influence(g: &Graph, mask: &NodeMask, radius: usize) -> Vec<f64> {
    assert_eq!(mask.len(), g.node_count());
    assert!(radius >= 1, "collective influence needs radius >= 1");
    let n = g.node_count();
    let degrees: Vec<i64> = (0..n)
        .map(|i| {
            if mask.is_removed(i) {
                0
            } else {
                surviving_degree(g, mask, i) as i64
            }
        })
        .collect();
    parallel::map_indexed(n, |i| {
        if mask.is_removed(i) {
            return NEVER_SELECTED;
        }
        // BFS truncated at `radius`; collect the shell degree sum
        let mut dist = vec![usize::MAX; n];
        dist[i] = 0;
        let mut queue = std::collections::VecDeque::from([i]);
        let mut shell_sum: i64 = 0;
        while let Some(u) = queue.pop_front() {
            if dist[u] == radius {
                shell_sum += degrees[u] - 1;
                continue;
            }
            for &v in g.neighbors(u) {
                if !mask.is_removed(v) && dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        ((degrees[i] - 1) * shell_sum) as f64
    })
}

struct ShortestPathDag {
    order: Vec<usize>,
    preds: Vec<Vec<usize>>,
    sigma: Vec<f64>,
}

fn shortest_path_dag(g: &Graph, mask: &NodeMask, source: usize) -> ShortestPathDag {
    let n = g.node_count();
    let mut dist = vec![usize::MAX; n];
    let mut sigma = vec![0.0; n];
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut order = Vec::new();
    dist[source] = 0;
    sigma[source] = 1.0;
    let mut queue = std::collections::VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        order.push(u);
        for &v in g.neighbors(u) {
            if mask.is_removed(v) {
                continue;
            }
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
            if dist[v] == dist[u] + 1 {
                sigma[v] += sigma[u];
                preds[v].push(u);
            }
        }
    }
    ShortestPathDag { order, preds, sigma }
}

/// Brandes dependency accumulation for one source, weighted by
/// `source_weight` and added into `acc`.
fn accumulate_dependencies(
    g: &Graph,
    mask: &NodeMask,
    source: usize,
    source_weight: f64,
    acc: &mut [f64],
) {
    let dag = shortest_path_dag(g, mask, source);
    let mut delta = vec![0.0; g.node_count()];
    for &w in dag.order.iter().rev() {
        for &p in &dag.preds[w] {
            delta[p] += dag.sigma[p] / dag.sigma[w] * (1.0 + delta[w]);
        }
        if w != source {
            acc[w] += source_weight * delta[w];
        }
    }
}

/// Unnormalized shortest-path betweenness over unordered pairs, with
/// fractional credit across equal-length paths.
pub fn betweenness(g: &Graph, mask: &NodeMask) -> Vec<f64> {
    assert_eq!(mask.len(), g.node_count());
    let n = g.node_count();
    let sources: Vec<usize> = mask.alive_nodes().collect();
    let mut scores = parallel::sum_chunked(n, sources.len(), SOURCE_CHUNK, |range| {
        let mut acc = vec![0.0; n];
        for &s in &sources[range] {
            accumulate_dependencies(g, mask, s, 1.0, &mut acc);
        }
        acc
    });
    for (i, s) in scores.iter_mut().enumerate() {
        if mask.is_removed(i) {
            *s = NEVER_SELECTED;
        } else {
            // each unordered pair was visited from both endpoints
            *s /= 2.0;
        }
    }
    scores
}

/// Component-local closeness `(r - 1) / sum of distances`, where `r` is the
/// size of the node's component; 0 for isolated nodes.
pub fn closeness(g: &Graph, mask: &NodeMask) -> Vec<f64> {
    assert_eq!(mask.len(), g.node_count());
    per_source_distances(g, mask, |dists| {
        let mut reached = 0usize;
        let mut total = 0usize;
        for &d in dists {
            if d != usize::MAX {
                reached += 1;
                total += d;
            }
        }
        if reached <= 1 {
            0.0
        } else {
            (reached - 1) as f64 / total as f64
        }
    })
}

/// Harmonic centrality `sum over reachable j != i of 1 / d(i, j)`.
pub fn harmonic(g: &Graph, mask: &NodeMask) -> Vec<f64> {
    assert_eq!(mask.len(), g.node_count());
    per_source_distances(g, mask, |dists| {
        dists
            .iter()
            .filter(|&&d| d != usize::MAX && d > 0)
            .map(|&d| 1.0 / d as f64)
            .sum()
    })
}

fn per_source_distances(
    g: &Graph,
    mask: &NodeMask,
    score: impl Fn(&[usize]) -> f64 + Sync + Send,
) -> Vec<f64> {
    let n = g.node_count();
    parallel::map_indexed(n, |i| {
        if mask.is_removed(i) {
            return NEVER_SELECTED;
        }
        let mut dist = vec![usize::MAX; n];
        dist[i] = 0;
        let mut queue = std::collections::VecDeque::from([i]);
        while let Some(u) = queue.pop_front() {
            for &v in g.neighbors(u) {
                if !mask.is_removed(v) && dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        score(&dist)
    })
}

pub const EIGENVECTOR_TOLERANCE: f64 = 1e-10;
pub const EIGENVECTOR_MAX_ITERATIONS: usize = 1000;

/// Principal eigenvector of the surviving adjacency via power iteration,
/// L2-normalized with nonnegative entries. Iterates on `A + I`, which shares
/// eigenvectors with `A` but keeps the principal one strictly dominant, so
/// near-bipartite graphs (stars, even cycles) converge instead of
/// oscillating. An edgeless surviving graph yields all zeros.
pub fn eigenvector(g: &Graph, mask: &NodeMask) -> Vec<f64> {
    assert_eq!(mask.len(), g.node_count());
    let n = g.node_count();
    let mut out = vec![0.0; n];
    for i in 0..n {
        if mask.is_removed(i) {
            out[i] = NEVER_SELECTED;
        }
    }
    let alive: Vec<usize> = mask.alive_nodes().collect();
    if alive.is_empty() {
        return out;
    }
    let surviving_edges = alive
        .iter()
        .any(|&i| g.neighbors(i).iter().any(|&j| !mask.is_removed(j)));
    if !surviving_edges {
        return out;
    }

    let mut x = vec![0.0; n];
    let init = 1.0 / (alive.len() as f64).sqrt();
    for &i in &alive {
        x[i] = init;
    }
    let mut next = vec![0.0; n];
    for _ in 0..EIGENVECTOR_MAX_ITERATIONS {
        for &i in &alive {
            let mut acc = x[i];
            for &j in g.neighbors(i) {
                if !mask.is_removed(j) {
                    acc += x[j];
                }
            }
            next[i] = acc;
        }
        let norm: f64 = alive.iter().map(|&i| next[i] * next[i]).sum::<f64>().sqrt();
        let mut diff = 0.0_f64;
        for &i in &alive {
            next[i] /= norm;
            diff = diff.max((next[i] - x[i]).abs());
            x[i] = next[i];
        }
        if diff < EIGENVECTOR_TOLERANCE {
            break;
        }
    }
    for &i in &alive {
        out[i] = x[i];
    }
    out
}

/// Percolation centrality with explicit per-node states:
/// `PC(v) = 1/(r-2) * sum over ordered pairs (s, t), s != v != t, of
/// [sigma_st(v) / sigma_st] * x_s / (sum x - x_v)`, with `r` surviving nodes.
/// Fewer than three survivors yield zero scores.
pub fn percolation_centrality(g: &Graph, mask: &NodeMask, states: &[f64]) -> Vec<f64> {
    assert_eq!(mask.len(), g.node_count());
    assert_eq!(states.len(), g.node_count());
    let n = g.node_count();
    let alive: Vec<usize> = mask.alive_nodes().collect();
    let r = alive.len();
    let mut out = vec![0.0; n];
    for i in 0..n {
        if mask.is_removed(i) {
            out[i] = NEVER_SELECTED;
        }
    }
    if r < 3 {
        return out;
    }
    let weighted = parallel::sum_chunked(n, r, SOURCE_CHUNK, |range| {
        let mut acc = vec![0.0; n];
        for &s in &alive[range] {
            accumulate_dependencies(g, mask, s, states[s], &mut acc);
        }
        acc
    });
    let state_sum: f64 = alive.iter().map(|&i| states[i]).sum();
    for &v in &alive {
        let denom = (state_sum - states[v]) * (r - 2) as f64;
        out[v] = if denom != 0.0 { weighted[v] / denom } else { 0.0 };
    }
    out
}

/// Uniform-state percolation centrality (all states 1).
pub fn percolation_centrality_uniform(g: &Graph, mask: &NodeMask) -> Vec<f64> {
    percolation_centrality(g, mask, &vec![1.0; g.node_count()])
}

/// CoreHD removal sequence: adaptively delete the highest-degree node of the
/// 2-core until the 2-core is empty, then greedily break the residual forest
/// by removing, from the largest surviving component, the node minimizing the
/// resulting largest-component size. Stops once NGCC <= theta (original-n
/// denominator). Ties break toward the lower node id.
pub fn corehd_order(g: &Graph, theta: f64) -> Vec<usize> {
    let n = g.node_count();
    let mut order = Vec::new();
    if n == 0 {
        return order;
    }
    let target = residual_target(theta, n);
    let mut mask = NodeMask::all_alive(n);
    let mut gcc = g.gcc_size(&mask).expect("mask sized to graph");

    while gcc > target {
        let core = g.k_core(&mask, 2).expect("mask sized to graph");
        let victim = if core.alive_count() > 0 {
            // highest degree within the 2-core
            let mut best: Option<(usize, usize)> = None;
            for i in core.alive_nodes() {
                let d = surviving_degree(g, &core, i);
                if best.map_or(true, |(bd, bi)| d > bd || (d == bd && i < bi)) {
                    best = Some((d, i));
                }
            }
            best.expect("nonempty 2-core").1
        } else {
            tree_break_victim(g, &mask)
        };
        mask.remove(victim);
        order.push(victim);
        gcc = g.gcc_size(&mask).expect("mask sized to graph");
    }
    order
}

/// Once the 2-core is empty the survivors form a forest: pick, within the
/// largest component, the node whose removal minimizes the global largest
/// component.
fn tree_break_victim(g: &Graph, mask: &NodeMask) -> usize {
    let comps = g.components(mask).expect("mask sized to graph");
    let largest_idx = comps
        .iter()
        .enumerate()
        .max_by(|(ai, a), (bi, b)| a.len().cmp(&b.len()).then(bi.cmp(ai)))
        .map(|(i, _)| i)
        .expect("called with survivors present");
    let comp = &comps[largest_idx];
    let comp_size = comp.len();
    let other_max = comps
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != largest_idx)
        .map(|(_, c)| c.len())
        .max()
        .unwrap_or(0);

    let n = g.node_count();
    let root = comp[0];
    let mut parent = vec![usize::MAX; n];
    let mut dfs_order = Vec::with_capacity(comp_size);
    let mut stack = vec![root];
    let mut seen = vec![false; n];
    seen[root] = true;
    while let Some(u) = stack.pop() {
        dfs_order.push(u);
        for &v in g.neighbors(u) {
            if !mask.is_removed(v) && !seen[v] {
                seen[v] = true;
                parent[v] = u;
                stack.push(v);
            }
        }
    }
    let mut subtree = vec![1usize; n];
    for &u in dfs_order.iter().rev() {
        if parent[u] != usize::MAX {
            subtree[parent[u]] += subtree[u];
        }
    }

    let mut best: Option<(usize, usize)> = None;
    for &v in comp {
        let mut max_piece = if v == root { 0 } else { comp_size - subtree[v] };
        for &c in g.neighbors(v) {
            if !mask.is_removed(c) && parent[c] == v {
                max_piece = max_piece.max(subtree[c]);
            }
        }
        let result = max_piece.max(other_max);
        if best.map_or(true, |(br, bv)| result < br || (result == br && v < bv)) {
            best = Some((result, v));
        }
    }
    best.expect("component is nonempty").1
}

fn surviving_degree(g: &Graph, mask: &NodeMask, i: usize) -> usize {
    g.neighbors(i).iter().filter(|&&j| !mask.is_removed(j)).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn star(leaves: usize) -> Graph {
        Graph::from_edges(leaves + 1, (1..=leaves).map(|v| (0, v))).unwrap()
    }

    fn path(n: usize) -> Graph {
        Graph::from_edges(n, (0..n - 1).map(|i| (i, i + 1))).unwrap()
    }

    fn cycle(n: usize) -> Graph {
        Graph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n))).unwrap()
    }

    fn full_mask(g: &Graph) -> NodeMask {
        NodeMask::all_alive(g.node_count())
    }

    #[test]
    fn degree_scores_star_and_isolated() {
        let g = star(4);
        let scores = degree_centrality(&g, &full_mask(&g));
        assert_eq!(scores[0], 4.0);
        let iso = Graph::empty(1);
        assert_eq!(degree_centrality(&iso, &NodeMask::all_alive(1)), vec![0.0]);
    }

    #[test]
    fn degree_matches_dense_row_sums() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 50;
        let edges: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
            .filter(|_| rng.random::<f64>() < 0.1)
            .collect();
        let g = Graph::from_edges(n, edges).unwrap();
        let mut dense = vec![vec![0.0; n]; n];
        for (u, v) in g.edges() {
            dense[u][v] = 1.0;
            dense[v][u] = 1.0;
        }
        let scores = degree_centrality(&g, &full_mask(&g));
        for i in 0..n {
            let row_sum: f64 = dense[i].iter().sum();
            assert_eq!(scores[i], row_sum);
        }
    }

    #[test]
    fn collective_influence_examples() {
        let g = star(5);
        let ci = collective_influence(&g, &full_mask(&g), 1);
        assert_eq!(ci[0], 0.0);

        let p = path(5);
        let ci1 = collective_influence(&p, &full_mask(&p), 1);
        assert_eq!(ci1[2], 2.0);
        let ci2 = collective_influence(&p, &full_mask(&p), 2);
        assert_eq!(ci2[2], 0.0);
    }

    #[test]
    fn betweenness_trivial_cases() {
        let p = path(3);
        let bc = betweenness(&p, &full_mask(&p));
        assert!((bc[1] - 1.0).abs() <= 1e-12);

        let s = star(4);
        let bc = betweenness(&s, &full_mask(&s));
        assert!((bc[0] - 6.0).abs() <= 1e-12);

        let c = cycle(4);
        let bc = betweenness(&c, &full_mask(&c));
        for v in 0..4 {
            assert!((bc[v] - 0.5).abs() <= 1e-12);
        }
    }

    #[test]
    fn closeness_examples() {
        let s = star(4);
        let cc = closeness(&s, &full_mask(&s));
        assert!((cc[0] - 1.0).abs() <= 1e-12);
        assert!((cc[1] - 4.0 / 7.0).abs() <= 1e-12);

        let two_edges = Graph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        let cc = closeness(&two_edges, &NodeMask::all_alive(4));
        for v in 0..4 {
            assert!((cc[v] - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn harmonic_examples() {
        let s = star(4);
        let hc = harmonic(&s, &full_mask(&s));
        assert!((hc[0] - 4.0).abs() <= 1e-12);
        assert!((hc[1] - 2.5).abs() <= 1e-12);

        let iso = Graph::empty(1);
        assert_eq!(harmonic(&iso, &NodeMask::all_alive(1)), vec![0.0]);
    }

    #[test]
    fn harmonic_stays_within_bounds() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 30;
        let edges: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
            .filter(|_| rng.random::<f64>() < 0.15)
            .collect();
        let g = Graph::from_edges(n, edges).unwrap();
        for &h in &harmonic(&g, &full_mask(&g)) {
            assert!(h >= 0.0 && h <= (n - 1) as f64);
        }
    }

    #[test]
    fn eigenvector_on_complete_graph_is_uniform() {
        let g = Graph::from_edges(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
        let ev = eigenvector(&g, &full_mask(&g));
        for v in 0..4 {
            assert!((ev[v] - 0.5).abs() <= 1e-9, "ev[{v}] = {}", ev[v]);
        }
    }

    #[test]
    fn eigenvector_star_ratio_is_two() {
        let g = star(4);
        let ev = eigenvector(&g, &full_mask(&g));
        assert!((ev[0] / ev[1] - 2.0).abs() <= 1e-8);
    }

    #[test]
    fn eigenvector_of_edgeless_graph_is_zero() {
        let g = Graph::empty(3);
        assert_eq!(eigenvector(&g, &NodeMask::all_alive(3)), vec![0.0; 3]);
    }

    #[test]
    fn percolation_uniform_matches_betweenness_rescaling() {
        let s = star(4);
        let pc = percolation_centrality_uniform(&s, &full_mask(&s));
        assert!((pc[0] - 1.0).abs() <= 1e-12);

        let p = path(5);
        let n = 5.0;
        let pc = percolation_centrality_uniform(&p, &full_mask(&p));
        let bc = betweenness(&p, &full_mask(&p));
        for v in 0..5 {
            let expected = 2.0 * bc[v] / ((n - 1.0) * (n - 2.0));
            assert!((pc[v] - expected).abs() <= 1e-12);
        }
    }

    #[test]
    fn percolation_with_zero_states_is_zero() {
        let p = path(5);
        let pc = percolation_centrality(&p, &full_mask(&p), &[0.0; 5]);
        assert_eq!(pc, vec![0.0; 5]);
    }

    #[test]
    fn percolation_needs_three_nodes() {
        let g = Graph::from_edges(2, [(0, 1)]).unwrap();
        let pc = percolation_centrality_uniform(&g, &NodeMask::all_alive(2));
        assert_eq!(pc, vec![0.0, 0.0]);
    }

    #[test]
    fn corehd_breaks_star_with_one_removal() {
        let g = star(4);
        assert_eq!(corehd_order(&g, 0.2), vec![0]);
    }

    #[test]
    fn corehd_on_c5_needs_two_removals() {
        let g = cycle(5);
        let order = corehd_order(&g, 0.4);
        assert_eq!(order.len(), 2);
        let mask = NodeMask::from_removed(5, order.iter().copied());
        assert!(g.gcc_size(&mask).unwrap() <= 2);
    }

    #[test]
    fn corehd_on_dismantled_input_is_empty() {
        let g = Graph::empty(4);
        assert_eq!(corehd_order(&g, 0.3), Vec::<usize>::new());
    }

    #[test]
    fn centralities_are_permutation_equivariant() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 12;
        let edges: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
            .filter(|_| rng.random::<f64>() < 0.3)
            .collect();
        let g = Graph::from_edges(n, edges.clone()).unwrap();
        let mut pi: Vec<usize> = (0..n).collect();
        // fixed derangement-ish permutation
        pi.rotate_left(5);
        let h = Graph::from_edges(n, edges.iter().map(|&(u, v)| (pi[u], pi[v]))).unwrap();

        let mask = NodeMask::all_alive(n);
        let rankers: Vec<fn(&Graph, &NodeMask) -> Vec<f64>> = vec![
            degree_centrality,
            betweenness,
            closeness,
            harmonic,
            |g, m| collective_influence(g, m, 2),
            percolation_centrality_uniform,
        ];
        for ranker in rankers {
            let a = ranker(&g, &mask);
            let b = ranker(&h, &mask);
            for v in 0..n {
                assert!(
                    (a[v] - b[pi[v]]).abs() <= 1e-9,
                    "equivariance broken at {v}: {} vs {}",
                    a[v],
                    b[pi[v]]
                );
            }
        }
    }
}
