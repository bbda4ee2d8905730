//! Minimum spanning trees and the shape statistics measured on them.
//!
//! A tree is summarized from its least-connected node (minimal closeness
//! centrality). Unweighted BFS depths from that node split the tree into
//! levels; the mean depth is the tree's length `a`, half the mean level
//! width is its width `b`, and `eta = a / b` is its elongation. A path over
//! `N` nodes reaches the maximum `eta = N - 1`.

use std::cmp::Ordering;
use std::collections::VecDeque;
use std::fmt::Write as _;

use crate::error::{Result, SequencerError};
use crate::metrics::DistanceMatrix;
use crate::scalar::Scalar;

/// Above this node count closeness uses the linear-time tree recurrence.
pub const CLOSENESS_BFS_LIMIT: usize = 2000;

/// Undirected weighted edge with `a < b`.
///
/// `tie` is a secondary weight consulted only when two weights are equal,
/// before falling back to node indices. It is zero for plain distance matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge<T> {
    pub a: usize,
    pub b: usize,
    pub weight: T,
    pub tie: T,
}

impl<T: Scalar> Edge<T> {
    pub fn new(i: usize, j: usize, weight: T) -> Self {
        Self::with_tie(i, j, weight, T::zero())
    }

    pub fn with_tie(i: usize, j: usize, weight: T, tie: T) -> Self {
        Self {
            a: i.min(j),
            b: i.max(j),
            weight,
            tie,
        }
    }

    fn key_cmp(&self, other: &Self) -> Ordering {
        self.weight
            .cmp_total(&other.weight)
            .then_with(|| self.tie.cmp_total(&other.tie))
            .then_with(|| self.a.cmp(&other.a))
            .then_with(|| self.b.cmp(&other.b))
    }
}

#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Merges the sets of `x` and `y`; false if they were already joined.
    pub fn union(&mut self, x: usize, y: usize) -> bool {
        let (rx, ry) = (self.find(x), self.find(y));
        if rx == ry {
            return false;
        }
        match self.rank[rx].cmp(&self.rank[ry]) {
            Ordering::Less => self.parent[rx] = ry,
            Ordering::Greater => self.parent[ry] = rx,
            Ordering::Equal => {
                self.parent[ry] = rx;
                self.rank[rx] += 1;
            }
        }
        true
    }
}

/// Connected acyclic graph over `n_nodes` nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct SpanningTree<T> {
    n_nodes: usize,
    edges: Vec<Edge<T>>,
    // neighbor lists sorted by (weight, tie, node)
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl<T: Scalar> SpanningTree<T> {
    pub fn from_edges(n_nodes: usize, edges: Vec<Edge<T>>) -> Result<Self> {
        if n_nodes == 0 {
            return Err(SequencerError::InvalidTree("no nodes".into()));
        }
        if edges.len() != n_nodes - 1 {
            return Err(SequencerError::InvalidTree(format!(
                "{} edges for {} nodes",
                edges.len(),
                n_nodes
            )));
        }
        let mut uf = UnionFind::new(n_nodes);
        for e in &edges {
            if e.a >= n_nodes || e.b >= n_nodes {
                return Err(SequencerError::NodeOutOfRange {
                    node: e.b.max(e.a),
                    n_nodes,
                });
            }
            if !(e.weight >= T::zero()) || !e.weight.is_finite() {
                return Err(SequencerError::InvalidTree(format!(
                    "edge ({}, {}) has weight {}",
                    e.a, e.b, e.weight
                )));
            }
            if !uf.union(e.a, e.b) {
                return Err(SequencerError::InvalidTree(format!(
                    "edge ({}, {}) closes a cycle",
                    e.a, e.b
                )));
            }
        }
        let mut adjacency = vec![Vec::new(); n_nodes];
        for (k, e) in edges.iter().enumerate() {
            adjacency[e.a].push((e.b, k));
            adjacency[e.b].push((e.a, k));
        }
        for list in &mut adjacency {
            list.sort_by(|&(u, ku), &(v, kv)| {
                let (eu, ev) = (&edges[ku], &edges[kv]);
                eu.weight
                    .cmp_total(&ev.weight)
                    .then_with(|| eu.tie.cmp_total(&ev.tie))
                    .then_with(|| u.cmp(&v))
            });
        }
        Ok(Self {
            n_nodes,
            edges,
            adjacency,
        })
    }

    /// Unit-weight path 0-1-...-(n-1).
    pub fn path(n: usize) -> Result<Self> {
        Self::from_edges(n, (1..n).map(|i| Edge::new(i - 1, i, T::one())).collect())
    }

    /// Unit-weight star with `center` joined to every other node.
    pub fn star(n: usize, center: usize) -> Result<Self> {
        Self::from_edges(
            n,
            (0..n)
                .filter(|&v| v != center)
                .map(|v| Edge::new(center, v, T::one()))
                .collect(),
        )
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn edges(&self) -> &[Edge<T>] {
        &self.edges
    }

    pub fn total_weight(&self) -> T {
        self.edges.iter().map(|e| e.weight).sum()
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Neighbors with their edges, nearest first.
    pub fn neighbors(&self, node: usize) -> impl Iterator<Item = (usize, &Edge<T>)> + '_ {
        self.adjacency[node].iter().map(|&(v, k)| (v, &self.edges[k]))
    }

    pub fn contains_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i].iter().any(|&(v, _)| v == j)
    }

    /// Sorted `(min, max)` node pairs.
    pub fn edge_set(&self) -> Vec<(usize, usize)> {
        let mut s: Vec<_> = self.edges.iter().map(|e| (e.a, e.b)).collect();
        s.sort_unstable();
        s
    }

    /// One `i j weight` line per edge.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for e in &self.edges {
            let _ = writeln!(out, "{} {} {}", e.a, e.b, e.weight);
        }
        out
    }

    fn check_node(&self, node: usize) -> Result<()> {
        if node >= self.n_nodes {
            return Err(SequencerError::NodeOutOfRange {
                node,
                n_nodes: self.n_nodes,
            });
        }
        Ok(())
    }

    fn unweighted_depths(&self, start: usize) -> Vec<usize> {
        let mut depth = vec![usize::MAX; self.n_nodes];
        let mut queue = VecDeque::from([start]);
        depth[start] = 0;
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &self.adjacency[u] {
                if depth[v] == usize::MAX {
                    depth[v] = depth[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        depth
    }

    /// Sum over all nodes of the (weight, tie) path length from `start`.
    fn weighted_farness(&self, start: usize) -> (T, T) {
        let mut dist = vec![None; self.n_nodes];
        dist[start] = Some((T::zero(), T::zero()));
        let mut stack = vec![start];
        let (mut sw, mut st) = (T::zero(), T::zero());
        while let Some(u) = stack.pop() {
            let (du, tu) = dist[u].expect("visited");
            sw += du;
            st += tu;
            for &(v, k) in &self.adjacency[u] {
                if dist[v].is_none() {
                    let e = &self.edges[k];
                    dist[v] = Some((du + e.weight, tu + e.tie));
                    stack.push(v);
                }
            }
        }
        (sw, st)
    }
}

fn kruskal<T: Scalar>(n: usize, mut edges: Vec<Edge<T>>) -> Result<SpanningTree<T>> {
    edges.sort_by(Edge::key_cmp);
    let mut uf = UnionFind::new(n);
    let mut chosen = Vec::with_capacity(n.saturating_sub(1));
    for e in edges {
        if chosen.len() + 1 == n {
            break;
        }
        if uf.union(e.a, e.b) {
            chosen.push(e);
        }
    }
    if chosen.len() + 1 != n {
        return Err(SequencerError::Disconnected(n));
    }
    SpanningTree::from_edges(n, chosen)
}

/// Kruskal over an explicit edge list. Ties are broken by `(tie, min node, max node)`.
/// Non-finite weights count as missing edges.
pub fn minimum_spanning_tree_from_edges<T: Scalar>(
    n: usize,
    edges: impl IntoIterator<Item = Edge<T>>,
) -> Result<SpanningTree<T>> {
    if n == 0 {
        return Err(SequencerError::InvalidTree("no nodes".into()));
    }
    let edges: Vec<Edge<T>> = edges
        .into_iter()
        .filter(|e| e.weight.is_finite() && e.a != e.b)
        .collect();
    if let Some(e) = edges.iter().find(|e| e.b >= n) {
        return Err(SequencerError::NodeOutOfRange {
            node: e.b,
            n_nodes: n,
        });
    }
    kruskal(n, edges)
}

/// Minimum spanning tree of the complete graph described by `d`.
pub fn minimum_spanning_tree<T: Scalar>(d: &DistanceMatrix<T>) -> Result<SpanningTree<T>> {
    let n = d.size();
    let edges = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)));
    minimum_spanning_tree_from_edges(n, edges.map(|(i, j)| Edge::new(i, j, d.get(i, j))))
}

/// Sum of unweighted distances from each node, by one BFS per node.
pub fn farness_by_bfs<T: Scalar>(tree: &SpanningTree<T>) -> Vec<u64> {
    (0..tree.n_nodes)
        .map(|s| tree.unweighted_depths(s).iter().map(|&d| d as u64).sum())
        .collect()
}

/// Sum of unweighted distances from each node in O(N): root at 0, then re-root
/// along each edge using `far(child) = far(parent) + N - 2 * size(child)`.
pub fn farness_by_rerooting<T: Scalar>(tree: &SpanningTree<T>) -> Vec<u64> {
    let n = tree.n_nodes;
    let mut order = Vec::with_capacity(n);
    let mut parent = vec![usize::MAX; n];
    let mut depth = vec![0u64; n];
    let mut seen = vec![false; n];
    seen[0] = true;
    let mut stack = vec![0];
    while let Some(u) = stack.pop() {
        order.push(u);
        for &(v, _) in &tree.adjacency[u] {
            if !seen[v] {
                seen[v] = true;
                parent[v] = u;
                depth[v] = depth[u] + 1;
                stack.push(v);
            }
        }
    }
    let mut size = vec![1u64; n];
    for &u in order.iter().rev() {
        if parent[u] != usize::MAX {
            size[parent[u]] += size[u];
        }
    }
    let mut far = vec![0u64; n];
    far[0] = depth.iter().sum();
    for &u in &order[1..] {
        far[u] = far[parent[u]] + n as u64 - 2 * size[u];
    }
    far
}

pub fn farness<T: Scalar>(tree: &SpanningTree<T>) -> Vec<u64> {
    if tree.n_nodes <= CLOSENESS_BFS_LIMIT {
        farness_by_bfs(tree)
    } else {
        farness_by_rerooting(tree)
    }
}

/// Freeman closeness `(N - 1) / sum_j dist(i, j)` with unweighted distances.
pub fn closeness_centrality<T: Scalar>(tree: &SpanningTree<T>) -> Vec<T> {
    let n1 = T::from_usize_lossy(tree.n_nodes.saturating_sub(1));
    farness(tree)
        .into_iter()
        .map(|f| {
            if f == 0 {
                T::zero()
            } else {
                n1 / T::from_u64(f).expect("farness fits scalar")
            }
        })
        .collect()
}

fn nearly_equal<T: Scalar>(x: T, y: T) -> bool {
    let scale = x.abs().max(y.abs()).max(T::one());
    (x - y).abs() <= T::epsilon() * T::lit(64.0) * scale
}

/// Node of minimal closeness centrality. Equal closeness is resolved by the larger
/// weighted path sum (weights, then tie weights), then by the smaller index.
pub fn least_connected_node<T: Scalar>(tree: &SpanningTree<T>) -> usize {
    let far = farness(tree);
    let best = *far.iter().max().expect("tree has nodes");
    let candidates: Vec<usize> = (0..tree.n_nodes).filter(|&v| far[v] == best).collect();
    if candidates.len() == 1 {
        return candidates[0];
    }
    let mut winner = candidates[0];
    let mut wf = tree.weighted_farness(winner);
    for &v in &candidates[1..] {
        let f = tree.weighted_farness(v);
        let better = if nearly_equal(f.0, wf.0) {
            !nearly_equal(f.1, wf.1) && f.1 > wf.1
        } else {
            f.0 > wf.0
        };
        if better {
            winner = v;
            wf = f;
        }
    }
    winner
}

/// Unweighted BFS depths from a start node, grouped into levels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelAssignment {
    pub start: usize,
    pub depth: Vec<usize>,
    pub levels: Vec<Vec<usize>>,
}

impl LevelAssignment {
    pub fn widths(&self) -> Vec<usize> {
        self.levels.iter().map(Vec::len).collect()
    }
}

pub fn level_assignment<T: Scalar>(tree: &SpanningTree<T>, start: usize) -> Result<LevelAssignment> {
    tree.check_node(start)?;
    let depth = tree.unweighted_depths(start);
    let max = depth.iter().copied().max().unwrap_or(0);
    let mut levels = vec![Vec::new(); max + 1];
    for (v, &d) in depth.iter().enumerate() {
        levels[d].push(v);
    }
    Ok(LevelAssignment {
        start,
        depth,
        levels,
    })
}

/// Length `a`, half-width `b` and elongation `eta = a / b` of a tree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElongationStats<T> {
    pub a: T,
    pub b: T,
    pub eta: T,
}

impl<T: Scalar> ElongationStats<T> {
    pub fn from_levels(levels: &LevelAssignment) -> Self {
        let n = T::from_usize_lossy(levels.depth.len());
        let depth_sum: usize = levels.depth.iter().sum();
        let a = T::from_usize_lossy(depth_sum) / n;
        let mean_width = n / T::from_usize_lossy(levels.levels.len());
        let b = mean_width / T::lit(2.0);
        Self { a, b, eta: a / b }
    }
}

/// Elongation measured from `start`, or from the least-connected node when `None`.
pub fn elongation<T: Scalar>(tree: &SpanningTree<T>, start: Option<usize>) -> Result<ElongationStats<T>> {
    let start = match start {
        Some(s) => s,
        None => least_connected_node(tree),
    };
    Ok(ElongationStats::from_levels(&level_assignment(tree, start)?))
}

/// Breadth-first visiting order from `start`; each node's children are queued
/// nearest first.
pub fn bfs_walk<T: Scalar>(tree: &SpanningTree<T>, start: usize) -> Result<Vec<usize>> {
    tree.check_node(start)?;
    let mut seen = vec![false; tree.n_nodes];
    let mut order = Vec::with_capacity(tree.n_nodes);
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    while let Some(u) = queue.pop_front() {
        order.push(u);
        for &(v, _) in &tree.adjacency[u] {
            if !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    Ok(order)
}
