//! Reverse-mode differentiation of the full forward pipeline and the
//! mean-squared-error objective, by hand, over the flat parameter buffer.
//!
//! The differentiated function is `MSE(labels, s_dis) + l2 * sum(theta^2)`
//! for one graph, for a fixed dropout realization drawn from the given seed
//! (or with dropout disabled when no seed is supplied).

use rand_chacha::ChaCha8Rng;

use super::forward::{forward_traced, pooled_neighborhood, topology};
use super::{ModelParameters, FEATURE_DIM};
use crate::graph::{Graph, NodeMask};

fn seeded_rng(seed: Option<u64>) -> Option<ChaCha8Rng> {
    use rand::SeedableRng;
    seed.map(ChaCha8Rng::seed_from_u64)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn canonical_mean_sq(residuals: Vec<f64>) -> f64 {
    let count = residuals.len();
    let mut sq: Vec<f64> = residuals.iter().map(|r| r * r).collect();
    sq.sort_unstable_by(f64::total_cmp);
    sq.iter().sum::<f64>() / count as f64
}

/// The objective value alone, sharing the exact forward path used by
/// [`loss_and_gradients`]; this is what finite differences probe.
pub fn loss_value(
    g: &Graph,
    mask: &NodeMask,
    labels: &[f64],
    params: &ModelParameters,
    l2: f64,
    dropout_seed: Option<u64>,
) -> f64 {
    assert_eq!(labels.len(), g.node_count());
    let mut rng = seeded_rng(dropout_seed);
    let (state, _) = forward_traced(g, mask, params, rng.as_mut());
    let residuals: Vec<f64> = mask
        .alive_nodes()
        .map(|i| state.s_dis[i] - labels[i])
        .collect();
    let mut loss = canonical_mean_sq(residuals);
    if l2 != 0.0 {
        loss += l2 * params.values().iter().map(|t| t * t).sum::<f64>();
    }
    loss
}

/// Returns `(data MSE, gradient of MSE + l2 * sum(theta^2))` with the
/// gradient laid out like the flat parameter buffer.
pub fn loss_and_gradients(
    g: &Graph,
    mask: &NodeMask,
    labels: &[f64],
    params: &ModelParameters,
    l2: f64,
    dropout_seed: Option<u64>,
) -> (f64, Vec<f64>) {
    assert_eq!(labels.len(), g.node_count());
    let cfg = params.config();
    let layout = params.layout();
    let theta = params.values();
    let n = g.node_count();
    let slope = cfg.leaky_slope;
    let hidden = cfg.scorer_hidden;

    let mut rng = seeded_rng(dropout_seed);
    let (state, trace) = forward_traced(g, mask, params, rng.as_mut());
    let topo = topology(g, mask);
    let alive_count = topo.alive.len();

    let mut grads = vec![0.0; theta.len()];
    if alive_count == 0 {
        if l2 != 0.0 {
            for (gr, &th) in grads.iter_mut().zip(theta) {
                *gr += 2.0 * l2 * th;
            }
        }
        return (0.0, grads);
    }

    let residuals: Vec<f64> = topo.alive.iter().map(|&i| state.s_dis[i] - labels[i]).collect();
    let data_loss = canonical_mean_sq(residuals);

    let mut ds = vec![0.0; n];
    for &i in &topo.alive {
        ds[i] = 2.0 * (state.s_dis[i] - labels[i]) / alive_count as f64;
    }

    // ----- local + global scoring backward: fills d(embeddings) and dP -----
    let fd = cfg.final_dim();
    let emb = &state.embeddings;
    let proj = &theta[layout.projection..][..fd];
    let mut d_emb = vec![0.0; n * fd];
    for &i in &topo.alive {
        let dsi = ds[i];
        let deg = topo.sdeg[i];
        if deg > 0 {
            let w = dsi / deg as f64;
            for &j in &topo.nbrs[i] {
                for t in 0..fd {
                    d_emb[i * fd + t] += w * emb[j * fd + t];
                    d_emb[j * fd + t] += w * emb[i * fd + t];
                }
            }
        }
        let pooled = pooled_neighborhood(&topo, emb, fd, i);
        for t in 0..fd {
            grads[layout.projection + t] += dsi * pooled[t];
        }
        let scale = 1.0 / ((deg + 1) as f64).sqrt();
        for t in 0..fd {
            d_emb[i * fd + t] += dsi * scale * proj[t];
        }
        for &j in &topo.nbrs[i] {
            for t in 0..fd {
                d_emb[j * fd + t] += dsi * scale * proj[t];
            }
        }
    }

    // ----- attention layers, last to first -----
    let mut d_out = d_emb;
    for l in (0..cfg.layers()).rev() {
        let lt = &trace.layers[l];
        let in_dim = cfg.layer_input_dim(l);
        let out_dim = cfg.layer_dims[l];
        let hd = cfg.head_dim(l);
        let mut d_input = vec![0.0; n * in_dim];

        for h in 0..cfg.heads[l] {
            let ht = &lt.heads[h];
            let a_off = layout.attention[l][h];
            let w2_off = layout.transform[l][h];
            let a = &theta[a_off..][..2 * hd];
            let (a_src, a_dst) = a.split_at(hd);
            let w2 = &theta[w2_off..][..hd * in_dim];

            let mut dz = vec![0.0; n * hd];
            let mut da = vec![0.0; 2 * hd];

            for &i in &topo.alive {
                let row = &ht.rows[i];
                let row_len = row.alpha.len();

                let mut dm = vec![0.0; hd];
                for r in 0..hd {
                    if row.m[r] > 0.0 {
                        dm[r] = d_out[i * out_dim + h * hd + r];
                    }
                }

                // aggregation backward: m = sum alpha_used[t] * z[J_t]
                let mut d_alpha_used = vec![0.0; row_len];
                for t in 0..row_len {
                    let j = if t == 0 { i } else { topo.nbrs[i][t - 1] };
                    let zj = &ht.z[j * hd..(j + 1) * hd];
                    d_alpha_used[t] = dot(&dm, zj);
                    for r in 0..hd {
                        dz[j * hd + r] += row.alpha_used[t] * dm[r];
                    }
                }

                // renormalized-dropout backward (identity without dropout or
                // in the everything-dropped fallback)
                let d_alpha: Vec<f64> = match (&row.keep, row.kept_sum) {
                    (Some(keep), s) if s > 0.0 => {
                        let inner: f64 = d_alpha_used
                            .iter()
                            .zip(&row.alpha_used)
                            .map(|(d, a)| d * a)
                            .sum();
                        keep.iter()
                            .zip(&d_alpha_used)
                            .map(|(&k, &d)| if k { (d - inner) / s } else { 0.0 })
                            .collect()
                    }
                    _ => d_alpha_used,
                };

                // softmax + LeakyReLU backward
                let inner2: f64 = d_alpha.iter().zip(&row.alpha).map(|(d, a)| d * a).sum();
                let mut sum_draw = 0.0;
                for t in 0..row_len {
                    let de = row.alpha[t] * (d_alpha[t] - inner2);
                    let draw = if row.raw[t] > 0.0 { de } else { de * slope };
                    sum_draw += draw;
                    let j = if t == 0 { i } else { topo.nbrs[i][t - 1] };
                    let zj = &ht.z[j * hd..(j + 1) * hd];
                    for r in 0..hd {
                        da[hd + r] += draw * zj[r];
                        dz[j * hd + r] += draw * a_dst[r];
                    }
                }
                let zi = &ht.z[i * hd..(i + 1) * hd];
                for r in 0..hd {
                    da[r] += sum_draw * zi[r];
                    dz[i * hd + r] += sum_draw * a_src[r];
                }
            }

            // transform backward: z = W2 * input
            for &j in &topo.alive {
                let dzj = &dz[j * hd..(j + 1) * hd];
                let gj = &lt.input[j * in_dim..(j + 1) * in_dim];
                for r in 0..hd {
                    let d = dzj[r];
                    if d == 0.0 {
                        continue;
                    }
                    for c in 0..in_dim {
                        grads[w2_off + r * in_dim + c] += d * gj[c];
                        d_input[j * in_dim + c] += w2[r * in_dim + c] * d;
                    }
                }
            }
            for r in 0..2 * hd {
                grads[a_off + r] += da[r];
            }
        }

        if let Some(mult) = &lt.drop_mult {
            for (di, m) in d_input.iter_mut().zip(mult) {
                *di *= m;
            }
        }
        d_out = d_input;
    }

    // ----- feature scorer backward: d_out is now d(s_init), n x 1 -----
    for &i in &topo.alive {
        if trace.scorer_v[i] <= 0.0 {
            continue;
        }
        let dv = d_out[i];
        grads[layout.b1b] += dv;
        let x = &trace.features[i * FEATURE_DIM..(i + 1) * FEATURE_DIM];
        for r in 0..hidden {
            let u = trace.scorer_u[i * hidden + r];
            grads[layout.w1b + r] += dv * u.max(0.0);
            if u > 0.0 {
                let du = dv * theta[layout.w1b + r];
                grads[layout.b1a + r] += du;
                for f in 0..FEATURE_DIM {
                    grads[layout.w1a + r * FEATURE_DIM + f] += du * x[f];
                }
            }
        }
    }

    if l2 != 0.0 {
        for (gr, &th) in grads.iter_mut().zip(theta) {
            *gr += 2.0 * l2 * th;
        }
    }
    (data_loss, grads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;
    use crate::train::init_parameters;
    use rand::prelude::*;

    fn random_graph(n: usize, p: f64, seed: u64) -> Graph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        loop {
            let edges: Vec<(usize, usize)> = (0..n)
                .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
                .filter(|_| rng.random::<f64>() < p)
                .collect();
            let g = Graph::from_edges(n, edges).unwrap();
            if g.is_connected() {
                return g;
            }
        }
    }

    fn random_labels(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random::<f64>()).collect()
    }

    fn check_against_finite_differences(
        g: &Graph,
        labels: &[f64],
        params: &ModelParameters,
        l2: f64,
        dropout_seed: Option<u64>,
    ) {
        let mask = NodeMask::all_alive(g.node_count());
        let (_, grads) = loss_and_gradients(g, &mask, labels, params, l2, dropout_seed);
        let step = 1e-5;
        let mut probe = params.clone();
        for k in 0..grads.len() {
            let original = probe.values()[k];
            probe.values_mut()[k] = original + step;
            let plus = loss_value(g, &mask, labels, &probe, l2, dropout_seed);
            probe.values_mut()[k] = original - step;
            let minus = loss_value(g, &mask, labels, &probe, l2, dropout_seed);
            probe.values_mut()[k] = original;
            let fd = (plus - minus) / (2.0 * step);
            let diff = (grads[k] - fd).abs();
            let rel = diff / grads[k].abs().max(fd.abs()).max(1e-300);
            assert!(
                rel <= 1e-4 || diff <= 1e-8,
                "coordinate {k}: analytic {} vs fd {fd} (rel {rel:.3e})",
                grads[k]
            );
        }
    }

    #[test]
    fn gradients_match_finite_differences_without_dropout() {
        for trial in 0..3u64 {
            let g = random_graph(10, 0.3, 50 + trial);
            let labels = random_labels(10, 60 + trial);
            let params = init_parameters(&ModelConfig::default(), 70 + trial);
            check_against_finite_differences(&g, &labels, &params, 1e-4, None);
        }
    }

    #[test]
    fn gradients_match_finite_differences_with_dropout_realization() {
        let g = random_graph(9, 0.35, 90);
        let labels = random_labels(9, 91);
        let params = init_parameters(&ModelConfig::default(), 92);
        check_against_finite_differences(&g, &labels, &params, 0.0, Some(1234));
    }

    #[test]
    fn projection_gradient_is_zero_when_embeddings_are_zero() {
        // zero parameters: embeddings vanish, predictions reduce to the
        // degree share, so nothing flows into the projection
        let g = random_graph(8, 0.4, 95);
        let params = ModelParameters::zeros(ModelConfig::default()).unwrap();
        let labels = vec![0.5; 8];
        let mask = NodeMask::all_alive(8);
        let (_, grads) = loss_and_gradients(&g, &mask, &labels, &params, 0.0, None);
        let layout = params.layout();
        let fd = params.config().final_dim();
        for t in 0..fd {
            assert_eq!(grads[layout.projection + t], 0.0);
        }
    }

    #[test]
    fn l2_term_alone_gives_two_lambda_theta() {
        // zero params predict d/d_max exactly; matching labels kill the data term
        let g = random_graph(8, 0.4, 96);
        let params = ModelParameters::zeros(ModelConfig::default()).unwrap();
        let mask = NodeMask::all_alive(8);
        let d_max = (0..8).map(|i| g.degree(i)).max().unwrap() as f64;
        let labels: Vec<f64> = (0..8).map(|i| g.degree(i) as f64 / d_max).collect();
        let l2 = 1e-4;
        let (data_loss, grads) = loss_and_gradients(&g, &mask, &labels, &params, l2, None);
        assert_eq!(data_loss, 0.0);
        for (k, (&gr, &th)) in grads.iter().zip(params.values()).enumerate() {
            assert_eq!(gr, 2.0 * l2 * th, "coordinate {k}");
        }
    }

    #[test]
    fn gradients_are_deterministic_per_seed() {
        let g = random_graph(10, 0.3, 97);
        let labels = random_labels(10, 98);
        let params = init_parameters(&ModelConfig::default(), 99);
        let mask = NodeMask::all_alive(10);
        let (la, ga) = loss_and_gradients(&g, &mask, &labels, &params, 1e-4, Some(7));
        let (lb, gb) = loss_and_gradients(&g, &mask, &labels, &params, 1e-4, Some(7));
        assert_eq!(la, lb);
        assert_eq!(ga, gb);
        let (_, gc) = loss_and_gradients(&g, &mask, &labels, &params, 1e-4, Some(8));
        assert_ne!(ga, gc);
    }

    #[test]
    fn loss_is_invariant_under_relabeling() {
        let g = random_graph(9, 0.35, 100);
        let labels = random_labels(9, 101);
        let params = init_parameters(&ModelConfig::default(), 102);
        let mask = NodeMask::all_alive(9);
        let base = loss_value(&g, &mask, &labels, &params, 0.0, None);

        let mut pi: Vec<usize> = (0..9).collect();
        pi.rotate_left(3);
        pi.swap(1, 7);
        let edges: Vec<(usize, usize)> = g.edges().map(|(u, v)| (pi[u], pi[v])).collect();
        let h = Graph::from_edges(9, edges).unwrap();
        let mut relabeled = vec![0.0; 9];
        for i in 0..9 {
            relabeled[pi[i]] = labels[i];
        }
        let permuted = loss_value(&h, &mask, &relabeled, &params, 0.0, None);
        assert_eq!(base, permuted);
    }
}
