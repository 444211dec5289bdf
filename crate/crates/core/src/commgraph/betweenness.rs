//! Shortest-path betweenness on directed graphs (Brandes accumulation).

use std::collections::VecDeque;

use super::degree::centralization;
use super::CommGraph;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BetweennessMetrics {
    /// Centralization of normalized node betweenness.
    pub node_group: f64,
    /// Centralization of normalized edge betweenness.
    pub edge_group: f64,
    /// Mean normalized edge betweenness, kept as a diagnostic.
    pub edge_mean: f64,
}

struct Accumulated {
    node: Vec<f64>,
    /// Indexed like `CommGraph::edges()`.
    edge: Vec<f64>,
}

fn accumulate(g: &CommGraph) -> Accumulated {
    let n = g.node_count();
    // edge id lookup, aligned with g.edges()
    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0);
    for v in 0..n {
        offsets.push(offsets[v] + g.out_neighbors(v).len());
    }
    let edge_id = |from: usize, to: usize| -> usize {
        let pos = g.out_neighbors(from).binary_search(&to).expect("edge exists");
        offsets[from] + pos
    };

    let mut node = vec![0.0; n];
    let mut edge = vec![0.0; g.edge_count()];
    let mut sigma = vec![0u64; n];
    let mut dist = vec![usize::MAX; n];
    let mut delta = vec![0.0f64; n];
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::with_capacity(n);

    for s in 0..n {
        sigma.iter_mut().for_each(|x| *x = 0);
        dist.iter_mut().for_each(|x| *x = usize::MAX);
        delta.iter_mut().for_each(|x| *x = 0.0);
        preds.iter_mut().for_each(Vec::clear);
        order.clear();

        sigma[s] = 1;
        dist[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in g.out_neighbors(v) {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    preds[w].push(v);
                }
            }
        }

        while let Some(w) = order.pop() {
            for &v in &preds[w] {
                let share = sigma[v] as f64 / sigma[w] as f64 * (1.0 + delta[w]);
                edge[edge_id(v, w)] += share;
                delta[v] += share;
            }
            if w != s {
                node[w] += delta[w];
            }
        }
    }
    Accumulated { node, edge }
}

/// Node betweenness normalized by `(n-1)(n-2)`; zeros when `n < 3`.
pub fn node_betweenness(g: &CommGraph) -> Vec<f64> {
    let n = g.node_count();
    if n < 3 {
        return vec![0.0; n];
    }
    let norm = ((n - 1) * (n - 2)) as f64;
    accumulate(g).node.into_iter().map(|b| b / norm).collect()
}

/// Edge betweenness normalized by `n(n-1)`, in `CommGraph::edges()` order.
pub fn edge_betweenness(g: &CommGraph) -> Vec<f64> {
    let n = g.node_count();
    if n < 2 {
        return vec![0.0; g.edge_count()];
    }
    let norm = (n * (n - 1)) as f64;
    accumulate(g).edge.into_iter().map(|b| b / norm).collect()
}

pub fn betweenness_metrics(g: &CommGraph) -> BetweennessMetrics {
    let n = g.node_count();
    if n < 3 {
        return BetweennessMetrics::default();
    }
    let acc = accumulate(g);
    let node_norm = ((n - 1) * (n - 2)) as f64;
    let node: Vec<f64> = acc.node.iter().map(|b| b / node_norm).collect();
    let edge_norm = (n * (n - 1)) as f64;
    let edge: Vec<f64> = acc.edge.iter().map(|b| b / edge_norm).collect();

    let (edge_group, edge_mean) = if edge.is_empty() {
        (0.0, 0.0)
    } else {
        let m = edge.len() as f64;
        let max = edge.iter().copied().fold(0.0_f64, f64::max);
        let spread: f64 = edge.iter().map(|c| max - c).sum();
        (
            (spread / m).clamp(0.0, 1.0),
            edge.iter().sum::<f64>() / m,
        )
    };
    BetweennessMetrics {
        node_group: centralization(&node),
        edge_group,
        edge_mean,
    }
}
