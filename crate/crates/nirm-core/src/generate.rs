//! Seeded synthetic network generators: Erdős–Rényi, Watts–Strogatz,
//! Barabási–Albert, and the Holme–Kim powerlaw-cluster model.
//!
//! Generation is deterministic given the spec seed. A graph is resampled with
//! a derived seed until it comes out connected (capped), since the labeling
//! pipeline assumes a single component.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Graph;
use crate::parallel;

/// Resampling budget before giving up on connectivity.
pub const MAX_CONNECT_ATTEMPTS: u64 = 1000;

pub const DEFAULT_ER_EDGE_PROB: f64 = 0.1;
pub const DEFAULT_WS_RING_NEIGHBORS: usize = 4;
pub const DEFAULT_WS_REWIRE_PROB: f64 = 0.1;
pub const DEFAULT_BA_ATTACH: usize = 3;
pub const DEFAULT_PLC_ATTACH: usize = 3;
pub const DEFAULT_PLC_TRIAD_PROB: f64 = 0.05;

#[derive(Debug, Error, PartialEq)]
pub enum GenError {
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
    #[error("no connected sample within {attempts} attempts for {spec}")]
    Disconnected { spec: GeneratorSpec, attempts: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GenModel {
    Er,
    Ws,
    Ba,
    Plc,
}

impl GenModel {
    pub const ALL: [GenModel; 4] = [GenModel::Er, GenModel::Ws, GenModel::Ba, GenModel::Plc];
}

impl fmt::Display for GenModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GenModel::Er => "er",
            GenModel::Ws => "ws",
            GenModel::Ba => "ba",
            GenModel::Plc => "plc",
        };
        f.write_str(s)
    }
}

impl FromStr for GenModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "er" => Ok(GenModel::Er),
            "ws" => Ok(GenModel::Ws),
            "ba" => Ok(GenModel::Ba),
            "plc" => Ok(GenModel::Plc),
            other => Err(format!("unknown generator model '{other}'")),
        }
    }
}

/// Parameters for one synthetic graph: which model, its size, the model
/// parameters actually used by that model, and the RNG seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub model: GenModel,
    pub n: usize,
    /// Edge probability (ER), rewiring probability (WS), triad probability (PLC).
    pub p: f64,
    /// Ring neighbor count (WS only).
    pub k: usize,
    /// Attachment count (BA, PLC).
    pub m: usize,
    pub seed: u64,
}

impl fmt::Display for GeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.model {
            GenModel::Er => write!(f, "er(n={}, p={}, seed={})", self.n, self.p, self.seed),
            GenModel::Ws => write!(
                f,
                "ws(n={}, k={}, p={}, seed={})",
                self.n, self.k, self.p, self.seed
            ),
            GenModel::Ba => write!(f, "ba(n={}, m={}, seed={})", self.n, self.m, self.seed),
            GenModel::Plc => write!(
                f,
                "plc(n={}, m={}, p={}, seed={})",
                self.n, self.m, self.p, self.seed
            ),
        }
    }
}

impl GeneratorSpec {
    pub fn er(n: usize, p: f64, seed: u64) -> Self {
        GeneratorSpec {
            model: GenModel::Er,
            n,
            p,
            k: 0,
            m: 0,
            seed,
        }
    }

    pub fn ws(n: usize, k: usize, p: f64, seed: u64) -> Self {
        GeneratorSpec {
            model: GenModel::Ws,
            n,
            p,
            k,
            m: 0,
            seed,
        }
    }

    pub fn ba(n: usize, m: usize, seed: u64) -> Self {
        GeneratorSpec {
            model: GenModel::Ba,
            n,
            p: 0.0,
            k: 0,
            m,
            seed,
        }
    }

    pub fn plc(n: usize, m: usize, p: f64, seed: u64) -> Self {
        GeneratorSpec {
            model: GenModel::Plc,
            n,
            p,
            k: 0,
            m,
            seed,
        }
    }

    /// Spec with this crate's default parameters for `model`.
    pub fn with_defaults(model: GenModel, n: usize, seed: u64) -> Self {
        match model {
            GenModel::Er => GeneratorSpec::er(n, DEFAULT_ER_EDGE_PROB, seed),
            GenModel::Ws => GeneratorSpec::ws(n, DEFAULT_WS_RING_NEIGHBORS, DEFAULT_WS_REWIRE_PROB, seed),
            GenModel::Ba => GeneratorSpec::ba(n, DEFAULT_BA_ATTACH, seed),
            GenModel::Plc => GeneratorSpec::plc(n, DEFAULT_PLC_ATTACH, DEFAULT_PLC_TRIAD_PROB, seed),
        }
    }

    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |msg: String| Err(GenError::InvalidSpec(msg));
        match self.model {
            GenModel::Er => {
                if !(0.0..=1.0).contains(&self.p) {
                    return bad(format!("er edge probability {} outside [0, 1]", self.p));
                }
            }
            GenModel::Ws => {
                if self.k % 2 != 0 {
                    return bad(format!("ws ring neighbor count {} must be even", self.k));
                }
                if self.k >= self.n {
                    return bad(format!("ws requires k < n, got k={} n={}", self.k, self.n));
                }
                if !(0.0..=1.0).contains(&self.p) {
                    return bad(format!("ws rewiring probability {} outside [0, 1]", self.p));
                }
            }
            GenModel::Ba | GenModel::Plc => {
                if self.m < 1 || self.m >= self.n {
                    return bad(format!(
                        "{} requires 1 <= m < n, got m={} n={}",
                        self.model, self.m, self.n
                    ));
                }
                if self.model == GenModel::Plc && !(0.0..=1.0).contains(&self.p) {
                    return bad(format!("plc triad probability {} outside [0, 1]", self.p));
                }
            }
        }
        Ok(())
    }
}

/// SplitMix64-style stream derivation so that per-graph and per-attempt seeds
/// never collide in a correlated way.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generates a connected graph from `spec`, resampling with derived seeds up
/// to [`MAX_CONNECT_ATTEMPTS`] times.
pub fn generate(spec: &GeneratorSpec) -> Result<Graph, GenError> {
    spec.validate()?;
    for attempt in 0..MAX_CONNECT_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(spec.seed, attempt));
        let g = sample_unfiltered(spec, &mut rng);
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(GenError::Disconnected {
        spec: *spec,
        attempts: MAX_CONNECT_ATTEMPTS,
    })
}

/// One raw draw from the model, without the connectivity filter.
pub fn sample_unfiltered(spec: &GeneratorSpec, rng: &mut ChaCha8Rng) -> Graph {
    let edges = match spec.model {
        GenModel::Er => er_edges(spec.n, spec.p, rng),
        GenModel::Ws => ws_edges(spec.n, spec.k, spec.p, rng),
        GenModel::Ba => ba_edges(spec.n, spec.m, rng),
        GenModel::Plc => plc_edges(spec.n, spec.m, spec.p, rng),
    };
    Graph::from_edges(spec.n, edges).expect("generators emit in-range edges")
}

fn er_edges(n: usize, p: f64, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    edges
}

fn ws_edges(n: usize, k: usize, p: f64, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let mut nbrs: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    let half = k / 2;
    for j in 1..=half {
        for i in 0..n {
            let far = (i + j) % n;
            if i != far {
                nbrs[i].insert(far);
                nbrs[far].insert(i);
            }
        }
    }
    // Rewire the far endpoint of each ring edge with probability p, keeping
    // the near endpoint; skipped when no non-neighbor exists.
    for j in 1..=half {
        for i in 0..n {
            let far = (i + j) % n;
            if i == far || !nbrs[i].contains(&far) {
                continue;
            }
            if rng.random::<f64>() >= p {
                continue;
            }
            if nbrs[i].len() >= n - 1 {
                continue;
            }
            loop {
                let cand = rng.random_range(0..n);
                if cand != i && !nbrs[i].contains(&cand) {
                    nbrs[i].remove(&far);
                    nbrs[far].remove(&i);
                    nbrs[i].insert(cand);
                    nbrs[cand].insert(i);
                    break;
                }
            }
        }
    }
    collect_edges(&nbrs)
}

/// Preferential attachment from `m` initially isolated nodes. Every new node
/// attaches `m` distinct edges, targets weighted by current degree; the first
/// arrival picks uniformly (hitting all seeds), which forces the closed-form
/// edge count m * (n - m).
fn ba_edges(n: usize, m: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let mut edges = Vec::with_capacity(m * (n - m));
    let mut repeated: Vec<usize> = Vec::with_capacity(2 * m * (n - m));
    let mut targets: Vec<usize> = Vec::with_capacity(m);
    for source in m..n {
        targets.clear();
        if repeated.is_empty() {
            while targets.len() < m {
                let cand = rng.random_range(0..source);
                if !targets.contains(&cand) {
                    targets.push(cand);
                }
            }
        } else {
            while targets.len() < m {
                let cand = repeated[rng.random_range(0..repeated.len())];
                if !targets.contains(&cand) {
                    targets.push(cand);
                }
            }
        }
        for &t in &targets {
            edges.push((source, t));
            repeated.push(t);
        }
        repeated.extend(std::iter::repeat_n(source, m));
    }
    edges
}

/// Holme–Kim powerlaw-cluster model: preferential attachment where each link
/// after the first may instead close a triad with a random neighbor of the
/// last preferentially-attached target (probability p), falling back to
/// preferential attachment when closure is impossible.
fn plc_edges(n: usize, m: usize, p: f64, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let mut nbrs: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    // Seed nodes are listed once so degree-0 seeds stay reachable by the
    // preferential draw.
    let mut repeated: Vec<usize> = (0..m).collect();

    let pa_pick = |repeated: &[usize], source: usize, nbrs: &[BTreeSet<usize>], rng: &mut ChaCha8Rng| loop {
        let cand = repeated[rng.random_range(0..repeated.len())];
        if cand != source && !nbrs[source].contains(&cand) {
            return cand;
        }
    };

    for source in m..n {
        let mut target = pa_pick(&repeated, source, &nbrs, rng);
        nbrs[source].insert(target);
        nbrs[target].insert(source);
        repeated.push(target);
        let mut count = 1;
        while count < m {
            let mut linked = false;
            if rng.random::<f64>() < p {
                let cands: Vec<usize> = nbrs[target]
                    .iter()
                    .copied()
                    .filter(|&w| w != source && !nbrs[source].contains(&w))
                    .collect();
                if !cands.is_empty() {
                    let w = cands[rng.random_range(0..cands.len())];
                    nbrs[source].insert(w);
                    nbrs[w].insert(source);
                    repeated.push(w);
                    count += 1;
                    linked = true;
                }
            }
            if !linked {
                target = pa_pick(&repeated, source, &nbrs, rng);
                nbrs[source].insert(target);
                nbrs[target].insert(source);
                repeated.push(target);
                count += 1;
            }
        }
        repeated.extend(std::iter::repeat_n(source, m));
    }
    collect_edges(&nbrs)
}

fn collect_edges(nbrs: &[BTreeSet<usize>]) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for (u, set) in nbrs.iter().enumerate() {
        for &v in set {
            if v > u {
                edges.push((u, v));
            }
        }
    }
    edges
}

/// Generates `count` connected graphs, cycling the four models uniformly and
/// drawing sizes uniformly from `size_range`. Per-graph randomness depends
/// only on `(master_seed, index)`, so generation parallelizes without
/// affecting the output.
pub fn generate_dataset(
    count: usize,
    size_range: (usize, usize),
    master_seed: u64,
) -> Result<Vec<(GeneratorSpec, Graph)>, GenError> {
    let specs: Vec<GeneratorSpec> = (0..count).map(|i| dataset_spec(i, size_range, master_seed)).collect();
    parallel::map_slice(&specs, |spec| generate(spec).map(|g| (*spec, g)))
        .into_iter()
        .collect()
}

/// The spec of the `index`-th dataset entry under `master_seed`.
pub fn dataset_spec(index: usize, size_range: (usize, usize), master_seed: u64) -> GeneratorSpec {
    let (lo, hi) = size_range;
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(master_seed, index as u64));
    let n = rng.random_range(lo..=hi);
    let seed = rng.random::<u64>();
    GeneratorSpec::with_defaults(GenModel::ALL[index % 4], n, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ws_without_rewiring_is_a_ring_lattice() {
        let g = generate(&GeneratorSpec::ws(20, 4, 0.0, 1)).unwrap();
        assert_eq!(g.edge_count(), 40);
        for i in 0..20 {
            assert_eq!(g.degree(i), 4);
        }
    }

    #[test]
    fn ba_edge_count_is_closed_form() {
        for seed in 0..5 {
            let g = generate(&GeneratorSpec::ba(20, 3, seed)).unwrap();
            assert_eq!(g.edge_count(), 3 * (20 - 3));
        }
    }

    #[test]
    fn ba_non_seed_nodes_have_degree_at_least_m() {
        let g = generate(&GeneratorSpec::ba(30, 3, 9)).unwrap();
        for i in 3..30 {
            assert!(g.degree(i) >= 3);
        }
        let g = generate(&GeneratorSpec::plc(30, 3, 0.05, 9)).unwrap();
        for i in 3..30 {
            assert!(g.degree(i) >= 3);
        }
    }

    #[test]
    fn er_is_deterministic_for_fixed_seed() {
        let spec = GeneratorSpec::er(25, 0.1, 42);
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a.edges().collect::<Vec<_>>(), b.edges().collect::<Vec<_>>());
    }

    #[test]
    fn generated_graphs_are_connected_and_simple() {
        for (i, model) in GenModel::ALL.iter().enumerate() {
            let spec = GeneratorSpec::with_defaults(*model, 24, 100 + i as u64);
            let g = generate(&spec).unwrap();
            assert!(g.is_connected(), "{spec} not connected");
            let degree_sum: usize = (0..g.node_count()).map(|v| g.degree(v)).sum();
            assert_eq!(degree_sum, 2 * g.edge_count());
        }
    }

    #[test]
    fn er_mean_edge_count_matches_expectation() {
        // raw draws, no connectivity filter; p large enough that filtering
        // would be rare anyway
        let n = 20;
        let p = 0.3;
        let samples = 2000;
        let mut total = 0usize;
        for i in 0..samples {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(777, i));
            total += sample_unfiltered(&GeneratorSpec::er(n, p, 0), &mut rng).edge_count();
        }
        let mean = total as f64 / samples as f64;
        let expected = p * (n * (n - 1)) as f64 / 2.0;
        assert!(
            (mean - expected).abs() / expected < 0.05,
            "mean {mean} vs expected {expected}"
        );
    }

    #[test]
    fn dataset_cycles_models_and_respects_sizes() {
        let data = generate_dataset(4, (20, 30), 5).unwrap();
        let models: Vec<GenModel> = data.iter().map(|(s, _)| s.model).collect();
        assert_eq!(models, GenModel::ALL.to_vec());

        let data = generate_dataset(40, (20, 30), 5).unwrap();
        for (spec, g) in &data {
            assert!(g.node_count() >= 20 && g.node_count() <= 30);
            assert_eq!(spec.n, g.node_count());
        }
    }

    #[test]
    fn dataset_is_deterministic() {
        let a = generate_dataset(12, (20, 30), 99).unwrap();
        let b = generate_dataset(12, (20, 30), 99).unwrap();
        for ((sa, ga), (sb, gb)) in a.iter().zip(&b) {
            assert_eq!(sa, sb);
            assert_eq!(ga.edges().collect::<Vec<_>>(), gb.edges().collect::<Vec<_>>());
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(GeneratorSpec::er(10, 1.5, 0).validate().is_err());
        assert!(GeneratorSpec::ws(10, 3, 0.1, 0).validate().is_err());
        assert!(GeneratorSpec::ws(4, 4, 0.1, 0).validate().is_err());
        assert!(GeneratorSpec::ba(5, 5, 0).validate().is_err());
        assert!(GeneratorSpec::ba(5, 0, 0).validate().is_err());
    }
}
