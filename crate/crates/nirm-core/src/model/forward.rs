//! Forward pipeline: feature scoring, stacked multi-head attention layers,
//! local and global scoring, and their fused dismantling score.
//!
//! Neighborhood reductions (softmax denominators, attention aggregates,
//! pooled embeddings, local dot-product means) sum their terms in a
//! canonical value-sorted order. The summands themselves are per-node
//! quantities, so the whole eval-mode pipeline is exactly permutation
//! equivariant, not just up to floating-point reassociation.

use std::cmp::Ordering;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{build_features, ModelParameters, FEATURE_DIM};
use crate::graph::{Graph, NodeMask};
use crate::NEVER_SELECTED;

/// All per-node score vectors produced by one forward pass. Removed nodes
/// hold zeros in the intermediate stages and the never-selected sentinel in
/// `s_dis`.
#[derive(Debug, Clone)]
pub struct ForwardState {
    pub s_init: Vec<f64>,
    /// Final-layer embeddings, row-major `n x final_dim`.
    pub embeddings: Vec<f64>,
    pub s_local: Vec<f64>,
    pub s_global: Vec<f64>,
    pub s_dis: Vec<f64>,
}

/// Which intermediate stage to rank by in ablation runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntermediateScore {
    Init,
    Local,
    Global,
}

pub(crate) struct Topology {
    pub alive: Vec<usize>,
    /// Alive neighbors of each alive node, ascending.
    pub nbrs: Vec<Vec<usize>>,
    pub sdeg: Vec<usize>,
    pub d_max: usize,
}

pub(crate) fn topology(g: &Graph, mask: &NodeMask) -> Topology {
    assert_eq!(mask.len(), g.node_count());
    let n = g.node_count();
    let mut nbrs = vec![Vec::new(); n];
    let mut sdeg = vec![0usize; n];
    let mut alive = Vec::with_capacity(mask.alive_count());
    let mut d_max = 0;
    for i in 0..n {
        if mask.is_removed(i) {
            continue;
        }
        alive.push(i);
        let mine: Vec<usize> = g
            .neighbors(i)
            .iter()
            .copied()
            .filter(|&j| !mask.is_removed(j))
            .collect();
        sdeg[i] = mine.len();
        d_max = d_max.max(mine.len());
        nbrs[i] = mine;
    }
    Topology {
        alive,
        nbrs,
        sdeg,
        d_max,
    }
}

pub(crate) struct ForwardTrace {
    pub features: Vec<f64>,
    /// Pre-activations of the scorer hidden layer, `n x scorer_hidden`.
    pub scorer_u: Vec<f64>,
    /// Pre-activation of the scorer output, per node.
    pub scorer_v: Vec<f64>,
    pub layers: Vec<LayerTrace>,
}

pub(crate) struct LayerTrace {
    /// The input actually consumed by the layer (post hidden-dropout).
    pub input: Vec<f64>,
    /// Multiplier applied to the raw input (0 or 1/(1-p)); None without dropout.
    pub drop_mult: Option<Vec<f64>>,
    pub heads: Vec<HeadTrace>,
}

pub(crate) struct HeadTrace {
    /// Transformed embeddings `z = W2 * input`, `n x head_dim`.
    pub z: Vec<f64>,
    /// Attention row per node, over `[node] + alive neighbors`.
    pub rows: Vec<RowTrace>,
}

#[derive(Default)]
pub(crate) struct RowTrace {
    /// Pre-LeakyReLU logits.
    pub raw: Vec<f64>,
    /// Softmax coefficients.
    pub alpha: Vec<f64>,
    /// Attention-dropout keep flags, when drawn.
    pub keep: Option<Vec<bool>>,
    /// Coefficients actually used in aggregation (renormalized after
    /// dropout; equal to `alpha` otherwise or when everything was dropped).
    pub alpha_used: Vec<f64>,
    /// Kept attention mass; 0 marks the everything-dropped fallback.
    pub kept_sum: f64,
    /// Pre-ReLU aggregate.
    pub m: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sum_canonical(mut terms: Vec<f64>) -> f64 {
    terms.sort_unstable_by(f64::total_cmp);
    terms.iter().sum()
}

fn sum_vectors_canonical(mut contribs: Vec<Vec<f64>>, dim: usize) -> Vec<f64> {
    contribs.sort_unstable_by(|a, b| {
        for t in 0..dim {
            match a[t].total_cmp(&b[t]) {
                Ordering::Equal => continue,
                other => return other,
            }
        }
        Ordering::Equal
    });
    let mut out = vec![0.0; dim];
    for c in &contribs {
        for t in 0..dim {
            out[t] += c[t];
        }
    }
    out
}

fn leaky(x: f64, slope: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        slope * x
    }
}

/// The shared feature-scoring kernel applied to every row of `features`:
/// `s_init = ReLU(w1b . ReLU(w1a x + b1a) + b1b)`. Pure in the features; the
/// pipeline zeroes removed nodes before the attention layers.
pub fn feature_score(features: &[f64], params: &ModelParameters) -> Vec<f64> {
    assert_eq!(features.len() % FEATURE_DIM, 0, "features must be n x 5");
    let n = features.len() / FEATURE_DIM;
    let layout = params.layout();
    let theta = params.values();
    let hidden = params.config().scorer_hidden;
    let w1a = &theta[layout.w1a..layout.w1a + hidden * FEATURE_DIM];
    let b1a = &theta[layout.b1a..layout.b1a + hidden];
    let w1b = &theta[layout.w1b..layout.w1b + hidden];
    let b1b = theta[layout.b1b];

    let mut out = vec![0.0; n];
    for i in 0..n {
        let x = &features[i * FEATURE_DIM..(i + 1) * FEATURE_DIM];
        let mut v = b1b;
        for r in 0..hidden {
            let mut u = b1a[r];
            for f in 0..FEATURE_DIM {
                u += w1a[r * FEATURE_DIM + f] * x[f];
            }
            v += w1b[r] * u.max(0.0);
        }
        out[i] = v.max(0.0);
    }
    out
}

/// Runs the attention stack from the given initial scores and returns the
/// final embeddings (eval mode, no dropout).
pub fn gat_forward(
    g: &Graph,
    mask: &NodeMask,
    s_init: &[f64],
    params: &ModelParameters,
) -> Vec<f64> {
    let topo = topology(g, mask);
    let (layers, embeddings) = run_layers(&topo, params, s_init, &mut None);
    drop(layers);
    embeddings
}

/// One attention layer stack pass; returns per-layer traces plus the final
/// embedding matrix.
fn run_layers(
    topo: &Topology,
    params: &ModelParameters,
    s_init: &[f64],
    dropout_rng: &mut Option<&mut ChaCha8Rng>,
) -> (Vec<LayerTrace>, Vec<f64>) {
    let cfg = params.config();
    let layout = params.layout();
    let theta = params.values();
    let n = s_init.len();
    let slope = cfg.leaky_slope;

    let mut layers = Vec::with_capacity(cfg.layers());
    let mut cur: Vec<f64> = s_init.to_vec();
    let mut cur_dim = 1usize;

    for l in 0..cfg.layers() {
        let hd = cfg.head_dim(l);
        let head_count = cfg.heads[l];
        let out_dim = cfg.layer_dims[l];

        // hidden dropout on the layer input, alive rows only
        let (input, drop_mult) = match dropout_rng.as_deref_mut() {
            Some(rng) if cfg.hidden_dropout > 0.0 => {
                let p = cfg.hidden_dropout;
                let scale = 1.0 / (1.0 - p);
                let mut mult = vec![0.0; n * cur_dim];
                let mut dropped = vec![0.0; n * cur_dim];
                for &i in &topo.alive {
                    for d in 0..cur_dim {
                        let m = if rng.random::<f64>() >= p { scale } else { 0.0 };
                        mult[i * cur_dim + d] = m;
                        dropped[i * cur_dim + d] = cur[i * cur_dim + d] * m;
                    }
                }
                (dropped, Some(mult))
            }
            _ => (std::mem::take(&mut cur), None),
        };

        let mut heads = Vec::with_capacity(head_count);
        let mut output = vec![0.0; n * out_dim];
        for h in 0..head_count {
            let a = &theta[layout.attention[l][h]..][..2 * hd];
            let (a_src, a_dst) = a.split_at(hd);
            let w2 = &theta[layout.transform[l][h]..][..hd * cur_dim];

            let mut z = vec![0.0; n * hd];
            for &i in &topo.alive {
                for r in 0..hd {
                    let mut acc = 0.0;
                    for c in 0..cur_dim {
                        acc += w2[r * cur_dim + c] * input[i * cur_dim + c];
                    }
                    z[i * hd + r] = acc;
                }
            }

            let mut rows: Vec<RowTrace> = (0..n).map(|_| RowTrace::default()).collect();
            for &i in &topo.alive {
                let zi = &z[i * hd..(i + 1) * hd];
                let src_term = dot(a_src, zi);
                let row_len = 1 + topo.nbrs[i].len();
                let mut raw = Vec::with_capacity(row_len);
                raw.push(src_term + dot(a_dst, zi));
                for &j in &topo.nbrs[i] {
                    raw.push(src_term + dot(a_dst, &z[j * hd..(j + 1) * hd]));
                }

                let e: Vec<f64> = raw.iter().map(|&r| leaky(r, slope)).collect();
                let max_e = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let exps: Vec<f64> = e.iter().map(|&t| (t - max_e).exp()).collect();
                let denom = sum_canonical(exps.clone());
                let alpha: Vec<f64> = exps.iter().map(|&t| t / denom).collect();

                let (keep, alpha_used, kept_sum) = match dropout_rng.as_deref_mut() {
                    Some(rng) if cfg.attention_dropout > 0.0 => {
                        let p = cfg.attention_dropout;
                        let keep: Vec<bool> =
                            (0..row_len).map(|_| rng.random::<f64>() >= p).collect();
                        let kept: Vec<f64> = keep
                            .iter()
                            .zip(&alpha)
                            .map(|(&k, &a)| if k { a } else { 0.0 })
                            .collect();
                        let s = sum_canonical(kept);
                        if s > 0.0 {
                            let used: Vec<f64> = keep
                                .iter()
                                .zip(&alpha)
                                .map(|(&k, &a)| if k { a / s } else { 0.0 })
                                .collect();
                            (Some(keep), used, s)
                        } else {
                            // everything dropped: keep the undropped row
                            (Some(keep), alpha.clone(), 0.0)
                        }
                    }
                    _ => (None, alpha.clone(), 1.0),
                };

                let mut contribs = Vec::with_capacity(row_len);
                contribs.push(zi.iter().map(|&t| alpha_used[0] * t).collect::<Vec<f64>>());
                for (t, &j) in topo.nbrs[i].iter().enumerate() {
                    let zj = &z[j * hd..(j + 1) * hd];
                    contribs.push(zj.iter().map(|&v| alpha_used[t + 1] * v).collect());
                }
                let m = sum_vectors_canonical(contribs, hd);
                for r in 0..hd {
                    output[i * out_dim + h * hd + r] = m[r].max(0.0);
                }
                rows[i] = RowTrace {
                    raw,
                    alpha,
                    keep,
                    alpha_used,
                    kept_sum,
                    m,
                };
            }
            heads.push(HeadTrace { z, rows });
        }
        layers.push(LayerTrace {
            input,
            drop_mult,
            heads,
        });
        cur = output;
        cur_dim = out_dim;
    }
    (layers, cur)
}

/// `s_local_i = mean over neighbors of <h_i, h_j> + deg_i / d_max`;
/// 0 for surviving degree-0 nodes.
pub fn local_score(g: &Graph, mask: &NodeMask, embeddings: &[f64], d_max: usize) -> Vec<f64> {
    let topo = topology(g, mask);
    local_score_with(&topo, embeddings, d_max, g.node_count())
}

fn local_score_with(topo: &Topology, embeddings: &[f64], d_max: usize, n: usize) -> Vec<f64> {
    let dim = if n == 0 { 0 } else { embeddings.len() / n };
    let mut out = vec![0.0; n];
    for &i in &topo.alive {
        let deg = topo.sdeg[i];
        if deg == 0 {
            continue;
        }
        let hi = &embeddings[i * dim..(i + 1) * dim];
        let dots: Vec<f64> = topo.nbrs[i]
            .iter()
            .map(|&j| dot(hi, &embeddings[j * dim..(j + 1) * dim]))
            .collect();
        out[i] = sum_canonical(dots) / deg as f64 + deg as f64 / d_max as f64;
    }
    out
}

/// Degree-normalized neighborhood pooling `hhat_i = sum over N(i)+{i} of h_j
/// / sqrt(deg_i + 1)`, projected: `s_global_i = <p, hhat_i>`.
pub fn global_score(g: &Graph, mask: &NodeMask, embeddings: &[f64], projection: &[f64]) -> Vec<f64> {
    let topo = topology(g, mask);
    global_score_with(&topo, embeddings, projection, g.node_count())
}

fn global_score_with(
    topo: &Topology,
    embeddings: &[f64],
    projection: &[f64],
    n: usize,
) -> Vec<f64> {
    let dim = projection.len();
    let mut out = vec![0.0; n];
    for &i in &topo.alive {
        let pooled = pooled_neighborhood(topo, embeddings, dim, i);
        out[i] = dot(projection, &pooled);
    }
    out
}

pub(crate) fn pooled_neighborhood(
    topo: &Topology,
    embeddings: &[f64],
    dim: usize,
    i: usize,
) -> Vec<f64> {
    let mut contribs = Vec::with_capacity(1 + topo.nbrs[i].len());
    contribs.push(embeddings[i * dim..(i + 1) * dim].to_vec());
    for &j in &topo.nbrs[i] {
        contribs.push(embeddings[j * dim..(j + 1) * dim].to_vec());
    }
    let mut pooled = sum_vectors_canonical(contribs, dim);
    let scale = 1.0 / ((topo.sdeg[i] + 1) as f64).sqrt();
    for t in &mut pooled {
        *t *= scale;
    }
    pooled
}

/// Elementwise `s_local + s_global`; removed nodes get the sentinel.
pub fn fuse(s_local: &[f64], s_global: &[f64], mask: &NodeMask) -> Vec<f64> {
    assert_eq!(s_local.len(), s_global.len());
    assert_eq!(s_local.len(), mask.len());
    s_local
        .iter()
        .zip(s_global)
        .enumerate()
        .map(|(i, (&l, &g))| {
            if mask.is_removed(i) {
                NEVER_SELECTED
            } else {
                l + g
            }
        })
        .collect()
}

pub(crate) fn forward_traced(
    g: &Graph,
    mask: &NodeMask,
    params: &ModelParameters,
    mut dropout_rng: Option<&mut ChaCha8Rng>,
) -> (ForwardState, ForwardTrace) {
    let cfg = params.config();
    let layout = params.layout();
    let theta = params.values();
    let n = g.node_count();
    let topo = topology(g, mask);
    let hidden = cfg.scorer_hidden;

    let features = build_features(g, mask);
    let w1a = &theta[layout.w1a..layout.w1a + hidden * FEATURE_DIM];
    let b1a = &theta[layout.b1a..layout.b1a + hidden];
    let w1b = &theta[layout.w1b..layout.w1b + hidden];
    let b1b = theta[layout.b1b];

    let mut scorer_u = vec![0.0; n * hidden];
    let mut scorer_v = vec![0.0; n];
    let mut s_init = vec![0.0; n];
    for &i in &topo.alive {
        let x = &features[i * FEATURE_DIM..(i + 1) * FEATURE_DIM];
        let mut v = b1b;
        for r in 0..hidden {
            let mut u = b1a[r];
            for f in 0..FEATURE_DIM {
                u += w1a[r * FEATURE_DIM + f] * x[f];
            }
            scorer_u[i * hidden + r] = u;
            v += w1b[r] * u.max(0.0);
        }
        scorer_v[i] = v;
        s_init[i] = v.max(0.0);
    }

    let (layers, embeddings) = run_layers(&topo, params, &s_init, &mut dropout_rng);

    let fd = cfg.final_dim();
    let projection = &theta[layout.projection..][..fd];
    let s_local = local_score_with(&topo, &embeddings, topo.d_max, n);
    let s_global = global_score_with(&topo, &embeddings, projection, n);
    let s_dis = fuse(&s_local, &s_global, mask);

    (
        ForwardState {
            s_init,
            embeddings,
            s_local,
            s_global,
            s_dis,
        },
        ForwardTrace {
            features,
            scorer_u,
            scorer_v,
            layers,
        },
    )
}

/// Eval-mode forward pass (no dropout).
pub fn forward(g: &Graph, mask: &NodeMask, params: &ModelParameters) -> ForwardState {
    forward_traced(g, mask, params, None).0
}

/// Full eval-mode ranking: the fused dismantling score per node, sentinel on
/// removed nodes. Deterministic.
pub fn nirm_rank(g: &Graph, mask: &NodeMask, params: &ModelParameters) -> Vec<f64> {
    forward(g, mask, params).s_dis
}

/// Ranking by one intermediate stage (initial, local, or global score), used
/// by the ablation dismantling modes.
pub fn ablation_scores(
    g: &Graph,
    mask: &NodeMask,
    params: &ModelParameters,
    which: IntermediateScore,
) -> Vec<f64> {
    let state = forward(g, mask, params);
    let mut scores = match which {
        IntermediateScore::Init => state.s_init,
        IntermediateScore::Local => state.s_local,
        IntermediateScore::Global => state.s_global,
    };
    for (i, s) in scores.iter_mut().enumerate() {
        if mask.is_removed(i) {
            *s = NEVER_SELECTED;
        }
    }
    scores
}

/// Attention coefficients of an eval-mode forward pass as
/// `(layer, head, node, row)` entries, where each row spans
/// `[node] + alive neighbors` in ascending order.
pub fn attention_coefficients(
    g: &Graph,
    mask: &NodeMask,
    params: &ModelParameters,
) -> Vec<(usize, usize, usize, Vec<f64>)> {
    let (_, trace) = forward_traced(g, mask, params, None);
    let mut out = Vec::new();
    for (l, layer) in trace.layers.iter().enumerate() {
        for (h, head) in layer.heads.iter().enumerate() {
            for (i, row) in head.rows.iter().enumerate() {
                if !row.alpha.is_empty() {
                    out.push((l, h, i, row.alpha.clone()));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;
    use crate::train::init_parameters;

    fn cycle(n: usize) -> Graph {
        Graph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n))).unwrap()
    }

    fn tiny_params(seed: u64) -> ModelParameters {
        init_parameters(&ModelConfig::default(), seed)
    }

    #[test]
    fn zero_parameters_give_zero_initial_scores() {
        let params = ModelParameters::zeros(ModelConfig::default()).unwrap();
        let g = cycle(6);
        let features = build_features(&g, &NodeMask::all_alive(6));
        assert_eq!(feature_score(&features, &params), vec![0.0; 6]);
    }

    #[test]
    fn positive_degree_path_is_monotone() {
        // route feature 0 (degree) through one hidden unit with weight 1
        let mut params = ModelParameters::zeros(ModelConfig::default()).unwrap();
        let layout = params.layout();
        let (w1a, w1b) = (layout.w1a, layout.w1b);
        params.values_mut()[w1a] = 1.0; // hidden unit 0 reads feature 0
        params.values_mut()[w1b] = 1.0; // output reads hidden unit 0
        let g = Graph::from_edges(5, [(0, 1), (0, 2), (0, 3), (3, 4)]).unwrap();
        let features = build_features(&g, &NodeMask::all_alive(5));
        let s = feature_score(&features, &params);
        assert!(s[0] > s[3] && s[3] > s[1]);
        assert_eq!(s[0], 3.0);
    }

    #[test]
    fn feature_score_matches_straight_line_reimplementation() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let params = tiny_params(31);
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let features: Vec<f64> = (0..4 * FEATURE_DIM).map(|_| rng.random::<f64>() * 3.0).collect();
        let got = feature_score(&features, &params);

        let layout = params.layout();
        let theta = params.values();
        let hidden = params.config().scorer_hidden;
        for i in 0..4 {
            let x = &features[i * FEATURE_DIM..(i + 1) * FEATURE_DIM];
            let mut acc = theta[layout.b1b];
            for r in 0..hidden {
                let mut u = theta[layout.b1a + r];
                for f in 0..FEATURE_DIM {
                    u += theta[layout.w1a + r * FEATURE_DIM + f] * x[f];
                }
                acc += theta[layout.w1b + r] * u.max(0.0);
            }
            let expect = acc.max(0.0);
            assert!((got[i] - expect).abs() <= 1e-12);
        }
    }

    #[test]
    fn attention_rows_sum_to_one() {
        let g = cycle(7);
        let mask = NodeMask::all_alive(7);
        let params = tiny_params(33);
        for (_, _, _, row) in attention_coefficients(&g, &mask, &params) {
            let sum: f64 = row.iter().sum();
            assert!((sum - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn isolated_node_attends_only_to_itself() {
        let g = Graph::from_edges(3, [(1, 2)]).unwrap();
        let mask = NodeMask::all_alive(3);
        let params = tiny_params(34);
        let rows = attention_coefficients(&g, &mask, &params);
        for (_, _, node, row) in rows {
            if node == 0 {
                assert_eq!(row, vec![1.0]);
            }
        }
    }

    #[test]
    fn equal_embeddings_split_attention_evenly() {
        // two connected nodes have identical inputs by symmetry
        let g = Graph::from_edges(2, [(0, 1)]).unwrap();
        let mask = NodeMask::all_alive(2);
        let params = tiny_params(35);
        for (_, _, _, row) in attention_coefficients(&g, &mask, &params) {
            assert_eq!(row.len(), 2);
            assert!((row[0] - 0.5).abs() <= 1e-12);
            assert!((row[1] - 0.5).abs() <= 1e-12);
        }
    }

    #[test]
    fn final_embedding_shape_is_n_by_final_dim() {
        let g = cycle(9);
        let params = tiny_params(36);
        let state = forward(&g, &NodeMask::all_alive(9), &params);
        assert_eq!(state.embeddings.len(), 9 * params.config().final_dim());
    }

    #[test]
    fn local_score_reduces_to_degree_share_on_zero_embeddings() {
        let g = Graph::from_edges(4, [(0, 1), (0, 2), (0, 3), (1, 2)]).unwrap();
        let mask = NodeMask::all_alive(4);
        let h = vec![0.0; 4 * 8];
        let scores = local_score(&g, &mask, &h, 3);
        assert_eq!(scores[0], 1.0); // max-degree node
        assert_eq!(scores[3], 1.0 / 3.0);
    }

    #[test]
    fn global_score_examples() {
        let g = Graph::from_edges(4, [(0, 1), (0, 2), (0, 3)]).unwrap();
        let mask = NodeMask::all_alive(4);
        // all embeddings equal h, projection p
        let h: Vec<f64> = (0..4).flat_map(|_| [0.5, -1.0]).collect();
        let p = vec![2.0, 1.0];
        let scores = global_score(&g, &mask, &h, &p);
        // degree-3 node: 4 h / sqrt(4) = 2 h
        let expect = 2.0 * (2.0 * 0.5 + 1.0 * -1.0);
        assert!((scores[0] - expect).abs() <= 1e-12);

        let zero_p = vec![0.0, 0.0];
        assert_eq!(global_score(&g, &mask, &h, &zero_p), vec![0.0; 4]);

        let iso = Graph::from_edges(2, []).unwrap();
        let hh = vec![1.0, 2.0, 3.0, 4.0];
        let s = global_score(&iso, &NodeMask::all_alive(2), &hh, &p);
        assert!((s[0] - (2.0 * 1.0 + 1.0 * 2.0)).abs() <= 1e-12);
    }

    #[test]
    fn fuse_adds_and_masks() {
        let mask = NodeMask::from_removed(3, [2]);
        let fused = fuse(&[0.3, 0.1, 9.0], &[0.5, -0.2, 9.0], &mask);
        assert!((fused[0] - 0.8).abs() <= 1e-15);
        assert!((fused[1] - (-0.1)).abs() <= 1e-15);
        assert_eq!(fused[2], NEVER_SELECTED);
    }

    #[test]
    fn vertex_transitive_graph_scores_are_equal_and_decomposed() {
        let g = cycle(6);
        let mask = NodeMask::all_alive(6);
        let params = tiny_params(37);
        let state = forward(&g, &mask, &params);
        for v in 1..6 {
            assert_eq!(state.s_dis[v], state.s_dis[0]);
        }
        for v in 0..6 {
            assert_eq!(state.s_dis[v] - state.s_local[v] - state.s_global[v], 0.0);
        }
    }

    #[test]
    fn forward_is_exactly_permutation_equivariant() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(39);
        let n = 11;
        let edges: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
            .filter(|_| rng.random::<f64>() < 0.3)
            .collect();
        let g = Graph::from_edges(n, edges.clone()).unwrap();
        let mut pi: Vec<usize> = (0..n).collect();
        pi.rotate_left(4);
        pi.swap(0, 3);
        let h = Graph::from_edges(n, edges.iter().map(|&(u, v)| (pi[u], pi[v]))).unwrap();
        let params = tiny_params(40);
        let mask = NodeMask::all_alive(n);
        let a = forward(&g, &mask, &params);
        let b = forward(&h, &mask, &params);
        for v in 0..n {
            assert_eq!(a.s_dis[v], b.s_dis[pi[v]], "node {v}");
            assert_eq!(a.s_init[v], b.s_init[pi[v]]);
            assert_eq!(a.s_local[v], b.s_local[pi[v]]);
            assert_eq!(a.s_global[v], b.s_global[pi[v]]);
        }
    }

    #[test]
    fn forward_is_bit_deterministic() {
        let g = cycle(8);
        let mask = NodeMask::all_alive(8);
        let params = tiny_params(41);
        let a = forward(&g, &mask, &params);
        let b = forward(&g, &mask, &params);
        assert_eq!(a.s_dis, b.s_dis);
    }

    #[test]
    fn ablation_local_with_zero_params_ranks_like_degree() {
        let g = Graph::from_edges(5, [(0, 1), (0, 2), (0, 3), (3, 4)]).unwrap();
        let mask = NodeMask::all_alive(5);
        let params = ModelParameters::zeros(ModelConfig::default()).unwrap();
        let local = ablation_scores(&g, &mask, &params, IntermediateScore::Local);
        let degrees: Vec<f64> = (0..5).map(|i| g.degree(i) as f64 / 3.0).collect();
        for v in 0..5 {
            assert!((local[v] - degrees[v]).abs() <= 1e-15);
        }
    }

    #[test]
    fn ablation_init_on_vertex_transitive_graph_is_uniform() {
        let g = cycle(5);
        let mask = NodeMask::all_alive(5);
        let params = tiny_params(42);
        let init = ablation_scores(&g, &mask, &params, IntermediateScore::Init);
        for v in 1..5 {
            assert_eq!(init[v], init[0]);
        }
    }
}
