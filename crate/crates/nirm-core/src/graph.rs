//! Undirected simple graphs with node-removal masks.
//!
//! Graphs are immutable after construction; node removal during dismantling
//! is tracked by a [`NodeMask`] so the residual network is never copied.
//! All traversals are iterative.

use std::collections::VecDeque;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("node id {id} out of range for graph with {n} nodes")]
    InvalidNode { id: usize, n: usize },
    #[error("mask has {got} entries but graph has {expected} nodes")]
    MaskLength { expected: usize, got: usize },
    #[error("edge ({u}, {v}) references a node outside 0..{n}")]
    EdgeOutOfRange { u: usize, v: usize, n: usize },
}

/// Immutable undirected simple graph over node ids `0..n`.
///
/// Self-loops are dropped and duplicate edges collapsed at construction,
/// so `sum(degree) == 2 * edge_count()` always holds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
    edge_count: usize,
}

impl Graph {
    pub fn from_edges(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, GraphError> {
        let mut pairs = Vec::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(GraphError::EdgeOutOfRange { u, v, n });
            }
            if u == v {
                continue;
            }
            pairs.push((u.min(v), u.max(v)));
        }
        pairs.sort_unstable();
        pairs.dedup();

        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &pairs {
            adj[u].push(v);
            adj[v].push(u);
        }
        for nbrs in &mut adj {
            nbrs.sort_unstable();
        }
        Ok(Graph {
            adj,
            edge_count: pairs.len(),
        })
    }

    pub fn empty(n: usize) -> Self {
        Graph {
            adj: vec![Vec::new(); n],
            edge_count: 0,
        }
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].len()
    }

    /// Sorted neighbor list of `i`.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adj[i]
    }

    /// All edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, nbrs)| nbrs.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn is_connected(&self) -> bool {
        let n = self.node_count();
        if n == 0 {
            return true;
        }
        let mask = NodeMask::all_alive(n);
        self.gcc_size(&mask).expect("mask sized to graph") == n
    }

    fn check_mask(&self, mask: &NodeMask) -> Result<(), GraphError> {
        if mask.len() != self.node_count() {
            return Err(GraphError::MaskLength {
                expected: self.node_count(),
                got: mask.len(),
            });
        }
        Ok(())
    }

    fn check_node(&self, i: usize) -> Result<(), GraphError> {
        if i >= self.node_count() {
            return Err(GraphError::InvalidNode {
                id: i,
                n: self.node_count(),
            });
        }
        Ok(())
    }

    /// Size of the largest connected component of the subgraph induced on
    /// non-removed nodes; 0 when everything is removed.
    pub fn gcc_size(&self, mask: &NodeMask) -> Result<usize, GraphError> {
        self.check_mask(mask)?;
        let n = self.node_count();
        let mut visited = vec![false; n];
        let mut queue = VecDeque::new();
        let mut best = 0;
        for start in 0..n {
            if visited[start] || mask.is_removed(start) {
                continue;
            }
            visited[start] = true;
            queue.push_back(start);
            let mut size = 0;
            while let Some(u) = queue.pop_front() {
                size += 1;
                for &v in &self.adj[u] {
                    if !visited[v] && !mask.is_removed(v) {
                        visited[v] = true;
                        queue.push_back(v);
                    }
                }
            }
            best = best.max(size);
        }
        Ok(best)
    }

    /// Partition of the surviving nodes into connected components. Each
    /// component is sorted ascending; components are ordered by smallest
    /// member.
    pub fn components(&self, mask: &NodeMask) -> Result<Vec<Vec<usize>>, GraphError> {
        self.check_mask(mask)?;
        let n = self.node_count();
        let mut visited = vec![false; n];
        let mut queue = VecDeque::new();
        let mut out = Vec::new();
        for start in 0..n {
            if visited[start] || mask.is_removed(start) {
                continue;
            }
            visited[start] = true;
            queue.push_back(start);
            let mut comp = Vec::new();
            while let Some(u) = queue.pop_front() {
                comp.push(u);
                for &v in &self.adj[u] {
                    if !visited[v] && !mask.is_removed(v) {
                        visited[v] = true;
                        queue.push_back(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        Ok(out)
    }

    /// Mask marking as removed every node NOT in the k-core of the surviving
    /// subgraph (nodes removed by the input mask stay removed).
    pub fn k_core(&self, mask: &NodeMask, k: usize) -> Result<NodeMask, GraphError> {
        self.check_mask(mask)?;
        let n = self.node_count();
        let mut out = mask.clone();
        let mut deg = vec![0usize; n];
        for i in 0..n {
            if !out.is_removed(i) {
                deg[i] = self.adj[i].iter().filter(|&&j| !out.is_removed(j)).count();
            }
        }
        let mut queue: VecDeque<usize> = (0..n)
            .filter(|&i| !out.is_removed(i) && deg[i] < k)
            .collect();
        while let Some(u) = queue.pop_front() {
            if out.is_removed(u) {
                continue;
            }
            out.remove(u);
            for &v in &self.adj[u] {
                if !out.is_removed(v) {
                    deg[v] -= 1;
                    if deg[v] + 1 == k {
                        queue.push_back(v);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Number of nodes at shortest-path distance exactly 2 from `i`.
    pub fn two_hop_count(&self, i: usize) -> Result<usize, GraphError> {
        self.check_node(i)?;
        let mut seen = vec![false; self.node_count()];
        seen[i] = true;
        for &j in &self.adj[i] {
            seen[j] = true;
        }
        let mut count = 0;
        for &j in &self.adj[i] {
            for &l in &self.adj[j] {
                if !seen[l] {
                    seen[l] = true;
                    count += 1;
                }
            }
        }
        Ok(count)
    }

    /// Local clustering coefficient `2 * triangles / (d * (d - 1))`;
    /// 0 when the degree is below 2.
    pub fn local_clustering(&self, i: usize) -> f64 {
        let d = self.degree(i);
        if d < 2 {
            return 0.0;
        }
        let mut is_nbr = vec![false; self.node_count()];
        for &j in &self.adj[i] {
            is_nbr[j] = true;
        }
        let mut links = 0usize;
        for &j in &self.adj[i] {
            for &l in &self.adj[j] {
                if l > j && is_nbr[l] {
                    links += 1;
                }
            }
        }
        2.0 * links as f64 / (d as f64 * (d as f64 - 1.0))
    }
}

/// Per-node removal flags for a specific graph; length must equal the node
/// count. No interior synchronization: one mask per caller.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeMask {
    removed: Vec<bool>,
    removed_count: usize,
}

impl NodeMask {
    pub fn all_alive(n: usize) -> Self {
        NodeMask {
            removed: vec![false; n],
            removed_count: 0,
        }
    }

    pub fn from_removed(n: usize, removed: impl IntoIterator<Item = usize>) -> Self {
        let mut mask = NodeMask::all_alive(n);
        for i in removed {
            mask.remove(i);
        }
        mask
    }

    pub fn len(&self) -> usize {
        self.removed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.removed.is_empty()
    }

    pub fn is_removed(&self, i: usize) -> bool {
        self.removed[i]
    }

    pub fn is_alive(&self, i: usize) -> bool {
        !self.removed[i]
    }

    /// Marks `i` removed; returns true when it was alive before.
    pub fn remove(&mut self, i: usize) -> bool {
        if self.removed[i] {
            false
        } else {
            self.removed[i] = true;
            self.removed_count += 1;
            true
        }
    }

    pub fn restore(&mut self, i: usize) {
        if self.removed[i] {
            self.removed[i] = false;
            self.removed_count -= 1;
        }
    }

    pub fn removed_count(&self) -> usize {
        self.removed_count
    }

    pub fn alive_count(&self) -> usize {
        self.removed.len() - self.removed_count
    }

    pub fn alive_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.removed
            .iter()
            .enumerate()
            .filter(|(_, &r)| !r)
            .map(|(i, _)| i)
    }
}
