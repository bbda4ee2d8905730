//! Independent reference implementations shared by the integration suites.
#![allow(dead_code)]

use rand::Rng;
use sequencer_core::graph::{Edge, SpanningTree};

/// Uniform random labeled tree via a random Prüfer sequence.
pub fn random_tree<R: Rng>(n: usize, rng: &mut R) -> Vec<(usize, usize)> {
    if n == 2 {
        return vec![(0, 1)];
    }
    let seq: Vec<usize> = (0..n - 2).map(|_| rng.random_range(0..n)).collect();
    let mut degree = vec![1usize; n];
    for &s in &seq {
        degree[s] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    for &s in &seq {
        let leaf = (0..n).find(|&v| degree[v] == 1).unwrap();
        edges.push((leaf.min(s), leaf.max(s)));
        degree[leaf] -= 1;
        degree[s] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    edges.push((rest[0], rest[1]));
    edges
}

pub fn unit_tree(n: usize, edges: &[(usize, usize)]) -> SpanningTree<f64> {
    SpanningTree::from_edges(n, edges.iter().map(|&(a, b)| Edge::new(a, b, 1.0)).collect()).unwrap()
}

fn connects_all(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Minimum total weight over every labeled spanning tree of a dense matrix,
/// by enumerating all (n-1)-edge subsets of the complete graph.
pub fn brute_force_mst_weight(n: usize, w: &[f64]) -> f64 {
    let all: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let m = all.len();
    let mut best = f64::INFINITY;
    let mut pick: Vec<usize> = (0..n - 1).collect();
    loop {
        let edges: Vec<(usize, usize)> = pick.iter().map(|&k| all[k]).collect();
        if connects_all(n, &edges) {
            let total: f64 = edges.iter().map(|&(a, b)| w[a * n + b]).sum();
            best = best.min(total);
        }
        // next combination in lexicographic order
        let k = pick.len();
        let Some(i) = (0..k).rev().find(|&i| pick[i] < m - k + i) else {
            break;
        };
        pick[i] += 1;
        for j in i + 1..k {
            pick[j] = pick[j - 1] + 1;
        }
    }
    best
}

/// Every length-`len` vector of non-negative integers summing to `total`.
pub fn compositions(total: usize, len: usize) -> Vec<Vec<usize>> {
    if len == 1 {
        return vec![vec![total]];
    }
    (0..=total)
        .flat_map(|first| {
            compositions(total - first, len - 1).into_iter().map(move |mut rest| {
                rest.insert(0, first);
                rest
            })
        })
        .collect()
}

/// Minimum cost of moving the unit masses of `p` onto those of `q` (both with
/// the same total), at cost |i - j| per unit, by exhaustive assignment DP over
/// bitmasks of the destination units. Returned in units of the total mass.
pub fn transport_oracle(p: &[usize], q: &[usize]) -> f64 {
    let src: Vec<usize> = p.iter().enumerate().flat_map(|(i, &c)| std::iter::repeat_n(i, c)).collect();
    let dst: Vec<usize> = q.iter().enumerate().flat_map(|(i, &c)| std::iter::repeat_n(i, c)).collect();
    assert_eq!(src.len(), dst.len());
    let k = src.len();
    let mut dp = vec![usize::MAX; 1 << k];
    dp[0] = 0;
    for mask in 0..(1usize << k) {
        if dp[mask] == usize::MAX {
            continue;
        }
        let s = mask.count_ones() as usize;
        if s == k {
            continue;
        }
        for d in 0..k {
            if mask & (1 << d) == 0 {
                let c = dp[mask] + src[s].abs_diff(dst[d]);
                let next = mask | (1 << d);
                dp[next] = dp[next].min(c);
            }
        }
    }
    dp[(1 << k) - 1] as f64 / k as f64
}

/// Spearman correlation computed from scratch with average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            for &k in &idx[i..=j] {
                r[k] = (i + j) as f64 / 2.0;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

/// Spearman between recovered sequence position and true rank of each object.
pub fn recovery(ordering: &[usize], true_rank: &[usize]) -> f64 {
    let pos: Vec<f64> = (0..ordering.len()).map(|t| t as f64).collect();
    let truth: Vec<f64> = ordering.iter().map(|&j| true_rank[j] as f64).collect();
    spearman(&pos, &truth)
}
