//! Per-node local feature vectors over the surviving subgraph.

use crate::graph::{Graph, NodeMask};

/// Feature vector per node: `[degree, two-hop count, mean neighbor degree,
/// local clustering, 1]`, all measured on the surviving subgraph.
pub const FEATURE_DIM: usize = 5;

/// Row-major `n x FEATURE_DIM` feature matrix. Removed nodes get all-zero
/// rows (including the constant) and are excluded from every neighborhood
/// statistic; a surviving degree-0 node has mean neighbor degree 0.
pub fn build_features(g: &Graph, mask: &NodeMask) -> Vec<f64> {
    assert_eq!(mask.len(), g.node_count());
    let n = g.node_count();
    let mut out = vec![0.0; n * FEATURE_DIM];

    let sdeg: Vec<usize> = (0..n)
        .map(|i| {
            if mask.is_removed(i) {
                0
            } else {
                g.neighbors(i).iter().filter(|&&j| !mask.is_removed(j)).count()
            }
        })
        .collect();

    let mut seen = vec![0u32; n];
    let mut nbr_mark = vec![0u32; n];
    let mut epoch = 0u32;

    for i in 0..n {
        if mask.is_removed(i) {
            continue;
        }
        epoch += 1;
        let row = &mut out[i * FEATURE_DIM..(i + 1) * FEATURE_DIM];
        let deg = sdeg[i];
        row[0] = deg as f64;
        row[4] = 1.0;

        seen[i] = epoch;
        let mut nbr_deg_sum = 0usize;
        for &j in g.neighbors(i) {
            if mask.is_removed(j) {
                continue;
            }
            seen[j] = epoch;
            nbr_mark[j] = epoch;
            nbr_deg_sum += sdeg[j];
        }
        if deg > 0 {
            row[2] = nbr_deg_sum as f64 / deg as f64;
        }

        let mut two_hop = 0usize;
        let mut links = 0usize;
        for &j in g.neighbors(i) {
            if mask.is_removed(j) {
                continue;
            }
            for &l in g.neighbors(j) {
                if mask.is_removed(l) {
                    continue;
                }
                if seen[l] != epoch {
                    seen[l] = epoch;
                    two_hop += 1;
                }
                if l > j && nbr_mark[l] == epoch {
                    links += 1;
                }
            }
        }
        row[1] = two_hop as f64;
        if deg >= 2 {
            row[3] = 2.0 * links as f64 / (deg as f64 * (deg as f64 - 1.0));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn feature_row(g: &Graph, mask: &NodeMask, i: usize) -> Vec<f64> {
        let f = build_features(g, mask);
        f[i * FEATURE_DIM..(i + 1) * FEATURE_DIM].to_vec()
    }

    #[test]
    fn star_center_features() {
        let g = Graph::from_edges(5, (1..5).map(|v| (0, v))).unwrap();
        let row = feature_row(&g, &NodeMask::all_alive(5), 0);
        assert_eq!(row, vec![4.0, 0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn triangle_node_features() {
        let g = Graph::from_edges(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        let row = feature_row(&g, &NodeMask::all_alive(3), 0);
        assert_eq!(row, vec![2.0, 0.0, 2.0, 1.0, 1.0]);
    }

    #[test]
    fn path_endpoint_features() {
        let g = Graph::from_edges(5, (0..4).map(|i| (i, i + 1))).unwrap();
        let row = feature_row(&g, &NodeMask::all_alive(5), 0);
        assert_eq!(row, vec![1.0, 1.0, 2.0, 0.0, 1.0]);
    }

    #[test]
    fn removed_nodes_zero_out_and_vanish_from_statistics() {
        let g = Graph::from_edges(5, (1..5).map(|v| (0, v))).unwrap();
        let mask = NodeMask::from_removed(5, [0]);
        let f = build_features(&g, &mask);
        assert_eq!(&f[0..FEATURE_DIM], &[0.0; FEATURE_DIM]);
        // leaves lose their only neighbor: degree 0, mean neighbor degree 0
        let row = &f[FEATURE_DIM..2 * FEATURE_DIM];
        assert_eq!(row, &[0.0, 0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn features_match_unmasked_graph_ops() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let n = 20;
        let edges: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
            .filter(|_| rng.random::<f64>() < 0.2)
            .collect();
        let g = Graph::from_edges(n, edges).unwrap();
        let f = build_features(&g, &NodeMask::all_alive(n));
        for i in 0..n {
            let row = &f[i * FEATURE_DIM..(i + 1) * FEATURE_DIM];
            assert_eq!(row[0], g.degree(i) as f64);
            assert_eq!(row[1], g.two_hop_count(i).unwrap() as f64);
            assert_eq!(row[3], g.local_clustering(i));
        }
    }
}
