//! Exhaustive labeling of tiny graphs: find every minimum target attack set,
//! convert appearance counts into initial scores, propagate them one hop, and
//! normalize into training labels.
//!
//! The search enumerates node subsets in increasing size and returns all
//! minimum-size sets whose removal drives the largest surviving component to
//! the residual target. Cost grows combinatorially; intended for graphs of a
//! few dozen nodes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Graph;
use crate::parallel;

pub const DEFAULT_THETA_TRAIN: f64 = 0.2;
pub const DEFAULT_MAX_TAS_SIZE: usize = 10;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("no target attack set of size <= {max} reaches the residual target on the {n}-node graph")]
    BudgetExceeded { max: usize, n: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Dismantling threshold used while labeling: a subset qualifies when the
    /// residual GCC is at most `ceil(theta_train * n)` nodes.
    pub theta_train: f64,
    /// Search-depth cap; exceeding it is a budget error, not an answer.
    pub max_tas_size: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            theta_train: DEFAULT_THETA_TRAIN,
            max_tas_size: DEFAULT_MAX_TAS_SIZE,
        }
    }
}

impl OracleConfig {
    pub fn new(theta_train: f64) -> Self {
        OracleConfig {
            theta_train,
            ..OracleConfig::default()
        }
    }

    pub fn with_max_tas_size(mut self, max: usize) -> Self {
        self.max_tas_size = max;
        self
    }
}

/// Residual GCC target `ceil(theta * n)`, with a tiny guard against values
/// like `0.2 * 25` landing a hair above the integer they denote.
pub fn residual_target(theta: f64, n: usize) -> usize {
    ((theta * n as f64) - 1e-9).ceil().max(0.0) as usize
}

/// One labeled training graph. When loaded back from disk only `graph` and
/// `labels` are populated; the search artifacts are empty.
#[derive(Debug, Clone)]
pub struct TrainingSample {
    pub graph: Graph,
    /// Every minimum target attack set, each sorted, list in lexicographic order.
    pub optimal_sets: Vec<Vec<usize>>,
    /// Appearance counts normalized by the maximum count.
    pub initial_scores: Vec<f64>,
    /// Propagated scores, max-normalized (score mode) or rank-normalized.
    pub labels: Vec<f64>,
}

impl TrainingSample {
    pub fn k_star(&self) -> Option<usize> {
        self.optimal_sets.first().map(Vec::len)
    }

    pub fn from_labels(graph: Graph, labels: Vec<f64>) -> Self {
        TrainingSample {
            graph,
            optimal_sets: Vec::new(),
            initial_scores: Vec::new(),
            labels,
        }
    }

    /// Degenerate samples (all-zero labels) carry no ranking signal and are
    /// excluded from training datasets.
    pub fn is_degenerate(&self) -> bool {
        self.labels.iter().all(|&c| c <= 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelMode {
    /// Regress max-normalized propagated scores (default).
    Score,
    /// Regress tie-averaged normalized ranks of the propagated scores.
    Rank,
}

impl std::str::FromStr for LabelMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "score" => Ok(LabelMode::Score),
            "rank" => Ok(LabelMode::Rank),
            other => Err(format!("unknown label mode '{other}' (expected score|rank)")),
        }
    }
}

/// Finds the smallest `k` for which some `k`-subset, once removed, leaves
/// every component at or below the residual target, and returns ALL such
/// `k`-subsets.
pub fn find_all_min_tas(g: &Graph, cfg: &OracleConfig) -> Result<Vec<Vec<usize>>, OracleError> {
    let n = g.node_count();
    let target = residual_target(cfg.theta_train, n);
    let order = degree_desc_order(g);

    let mut scratch = Scratch::new(n);
    if subset_dismantles(g, &[], target, &order, &mut scratch) {
        return Ok(vec![Vec::new()]);
    }
    let cap = cfg.max_tas_size.min(n);
    let bits = (n <= 64).then(|| adjacency_bits(g));
    for k in 1..=cap {
        let sets = match &bits {
            Some(adj) => feasible_k_subsets_bits(adj, n, k, target, &order),
            None => feasible_k_subsets(g, k, target, &order),
        };
        if !sets.is_empty() {
            return Ok(sets);
        }
    }
    Err(OracleError::BudgetExceeded { max: cap, n })
}

fn adjacency_bits(g: &Graph) -> Vec<u64> {
    let n = g.node_count();
    let mut adj = vec![0u64; n];
    for u in 0..n {
        for &v in g.neighbors(u) {
            adj[u] |= 1 << v;
        }
    }
    adj
}

/// Bit-parallel flood fill over at most 64 nodes, early-exiting once a
/// component exceeds the target.
fn subset_dismantles_bits(
    adj: &[u64],
    order: &[usize],
    alive: u64,
    target: usize,
) -> bool {
    if (alive.count_ones() as usize) <= target {
        return true;
    }
    let mut unvisited = alive;
    for &start in order {
        let bit = 1u64 << start;
        if unvisited & bit == 0 {
            continue;
        }
        let mut comp = bit;
        let mut frontier = bit;
        loop {
            let mut next = 0u64;
            let mut f = frontier;
            while f != 0 {
                let v = f.trailing_zeros() as usize;
                f &= f - 1;
                next |= adj[v];
            }
            next &= alive & !comp;
            if next == 0 {
                break;
            }
            comp |= next;
            if comp.count_ones() as usize > target {
                return false;
            }
            frontier = next;
        }
        unvisited &= !comp;
        if unvisited == 0 {
            break;
        }
    }
    true
}

fn feasible_k_subsets_bits(
    adj: &[u64],
    n: usize,
    k: usize,
    target: usize,
    order: &[usize],
) -> Vec<Vec<usize>> {
    if k > n {
        return Vec::new();
    }
    let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let firsts = n - k + 1;
    parallel::map_indexed(firsts, |first| {
        let mut found = Vec::new();
        for_each_combo_with_first(first, n, k, &mut |subset| {
            let mut removed = 0u64;
            for &v in subset {
                removed |= 1 << v;
            }
            if subset_dismantles_bits(adj, order, all & !removed, target) {
                found.push(subset.to_vec());
            }
        });
        found
    })
    .into_iter()
    .flatten()
    .collect()
}

/// `c0_i = N_i / N_max` where `N_i` counts appearances of `i` across the
/// optimal sets. All-zero when the only optimal set is empty (`k* = 0`).
///
/// # Panics
/// When `optimal_sets` is empty; the search always returns at least one set.
pub fn initial_scores(g: &Graph, optimal_sets: &[Vec<usize>]) -> Vec<f64> {
    assert!(
        !optimal_sets.is_empty(),
        "optimal_sets must contain at least one set"
    );
    let mut counts = vec![0usize; g.node_count()];
    for set in optimal_sets {
        for &v in set {
            counts[v] += 1;
        }
    }
    let max = counts.iter().copied().max().unwrap_or(0);
    if max == 0 {
        return vec![0.0; g.node_count()];
    }
    counts.iter().map(|&c| c as f64 / max as f64).collect()
}

/// `c_i = sum_{j in N(i)} c0_j / deg(j) + c0_i`: every node's initial score
/// is split equally among its neighbors, and each node keeps its own.
pub fn propagate_scores(g: &Graph, initial: &[f64]) -> Vec<f64> {
    assert_eq!(initial.len(), g.node_count(), "score length must equal node count");
    (0..g.node_count())
        .map(|i| {
            let mut acc = 0.0;
            for &j in g.neighbors(i) {
                acc += initial[j] / g.degree(j) as f64;
            }
            acc + initial[i]
        })
        .collect()
}

pub fn label_sample(g: &Graph, cfg: &OracleConfig) -> Result<TrainingSample, OracleError> {
    label_sample_with_mode(g, cfg, LabelMode::Score)
}

pub fn label_sample_with_mode(
    g: &Graph,
    cfg: &OracleConfig,
    mode: LabelMode,
) -> Result<TrainingSample, OracleError> {
    let optimal_sets = find_all_min_tas(g, cfg)?;
    let initial = initial_scores(g, &optimal_sets);
    let propagated = propagate_scores(g, &initial);
    let labels = match mode {
        LabelMode::Score => max_normalize(&propagated),
        LabelMode::Rank => rank_labels(&propagated),
    };
    Ok(TrainingSample {
        graph: g.clone(),
        optimal_sets,
        initial_scores: initial,
        labels,
    })
}

fn max_normalize(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().fold(0.0_f64, |a, &b| a.max(b));
    if max <= 0.0 {
        return vec![0.0; scores.len()];
    }
    scores.iter().map(|&c| c / max).collect()
}

/// Tie-averaged normalized ranks: the top node maps to 1, the bottom to 0,
/// tied scores share the mean of their rank positions.
fn rank_labels(scores: &[f64]) -> Vec<f64> {
    let n = scores.len();
    let max = scores.iter().fold(0.0_f64, |a, &b| a.max(b));
    if max <= 0.0 {
        return vec![0.0; n];
    }
    if n == 1 {
        return vec![1.0];
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut labels = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let head = scores[idx[i]];
        let mut j = i + 1;
        while j < n && (head - scores[idx[j]]).abs() <= 1e-12 * head.abs().max(1.0) {
            j += 1;
        }
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        for &node in &idx[i..j] {
            labels[node] = (n as f64 - avg_rank) / (n as f64 - 1.0);
        }
        i = j;
    }
    labels
}

fn degree_desc_order(g: &Graph) -> Vec<usize> {
    let mut order: Vec<usize> = (0..g.node_count()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(g.degree(i)));
    order
}

struct Scratch {
    removed: Vec<u32>,
    visited: Vec<u32>,
    epoch: u32,
    queue: Vec<usize>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Scratch {
            removed: vec![0; n],
            visited: vec![0; n],
            epoch: 0,
            queue: Vec::with_capacity(n),
        }
    }
}

/// Does removing `subset` leave every surviving component at or below
/// `target`? Flood fills from high-degree survivors first and bails out as
/// soon as one component exceeds the target.
fn subset_dismantles(
    g: &Graph,
    subset: &[usize],
    target: usize,
    degree_order: &[usize],
    s: &mut Scratch,
) -> bool {
    let n = g.node_count();
    if n - subset.len() <= target {
        return true;
    }
    s.epoch += 1;
    let e = s.epoch;
    for &v in subset {
        s.removed[v] = e;
    }
    for &start in degree_order {
        if s.removed[start] == e || s.visited[start] == e {
            continue;
        }
        s.visited[start] = e;
        s.queue.clear();
        s.queue.push(start);
        let mut size = 0usize;
        let mut head = 0usize;
        while head < s.queue.len() {
            let u = s.queue[head];
            head += 1;
            size += 1;
            if size > target {
                return false;
            }
            for &v in g.neighbors(u) {
                if s.removed[v] != e && s.visited[v] != e {
                    s.visited[v] = e;
                    s.queue.push(v);
                }
            }
        }
    }
    true
}

fn feasible_k_subsets(g: &Graph, k: usize, target: usize, order: &[usize]) -> Vec<Vec<usize>> {
    let n = g.node_count();
    if k > n {
        return Vec::new();
    }
    // Split by the subset's first element: lexicographic within each worker
    // and across workers, so the merged list needs no re-sort.
    let firsts = n - k + 1;
    parallel::map_indexed(firsts, |first| {
        let mut found = Vec::new();
        let mut scratch = Scratch::new(n);
        for_each_combo_with_first(first, n, k, &mut |subset| {
            if subset_dismantles(g, subset, target, order, &mut scratch) {
                found.push(subset.to_vec());
            }
        });
        found
    })
    .into_iter()
    .flatten()
    .collect()
}

/// Calls `f` for every ascending `k`-subset of `0..n` whose smallest element
/// is `first`, in lexicographic order.
fn for_each_combo_with_first(first: usize, n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    debug_assert!(k >= 1 && first + k <= n);
    let mut idx: Vec<usize> = (0..k).map(|t| first + t).collect();
    if k == 1 {
        f(&idx);
        return;
    }
    loop {
        f(&idx);
        let mut t = k - 1;
        loop {
            if idx[t] < n - k + t {
                break;
            }
            if t == 1 {
                return;
            }
            t -= 1;
        }
        idx[t] += 1;
        for u in (t + 1)..k {
            idx[u] = idx[u - 1] + 1;
        }
    }
}
