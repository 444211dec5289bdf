//! Random-walk (Markov) centrality from mean first-passage times.
//!
//! The walk follows a uniformly chosen out-edge with probability
//! `1 - TELEPORT_PROBABILITY` and otherwise jumps to a uniformly chosen node.
//! Nodes without out-edges always jump. The chain is therefore ergodic and
//! every first-passage time is finite.

use nalgebra::{DMatrix, DVector};

use super::CommGraph;
use crate::error::{Error, Result};

pub const TELEPORT_PROBABILITY: f64 = 0.15;

fn transition_matrix(g: &CommGraph) -> DMatrix<f64> {
    let n = g.node_count();
    let uniform = 1.0 / n as f64;
    DMatrix::from_fn(n, n, |u, w| {
        let outs = g.out_neighbors(u);
        if outs.is_empty() {
            uniform
        } else {
            let follow = if outs.binary_search(&w).is_ok() {
                (1.0 - TELEPORT_PROBABILITY) / outs.len() as f64
            } else {
                0.0
            };
            follow + TELEPORT_PROBABILITY * uniform
        }
    })
}

/// Mean first-passage times into `target` from every other node:
/// `m(u) = 1 + sum_{w != target} P(u, w) m(w)`.
fn first_passage_into(p: &DMatrix<f64>, target: usize) -> Result<Vec<f64>> {
    let n = p.nrows();
    let others: Vec<usize> = (0..n).filter(|&u| u != target).collect();
    let k = others.len();
    let system = DMatrix::from_fn(k, k, |i, j| {
        let identity = if i == j { 1.0 } else { 0.0 };
        identity - p[(others[i], others[j])]
    });
    let rhs = DVector::from_element(k, 1.0);
    let solution = system
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerics(format!("first-passage system for node {target} is singular")))?;
    let mut m = vec![0.0; n];
    for (i, &u) in others.iter().enumerate() {
        m[u] = solution[i];
    }
    if m.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::Numerics(format!(
            "non-finite first-passage time into node {target}"
        )));
    }
    Ok(m)
}

/// Node-level centralities `c_v = n / sum_{u != v} m(u, v)`.
pub fn markov_centralities(g: &CommGraph) -> Result<Vec<f64>> {
    let n = g.node_count();
    if n <= 1 {
        return Ok(vec![0.0; n]);
    }
    let p = transition_matrix(g);
    (0..n)
        .map(|v| {
            let total: f64 = first_passage_into(&p, v)?.iter().sum();
            Ok(n as f64 / total)
        })
        .collect()
}

/// Group Markov centrality `sum(c_max - c_v) / ((n-1) c_max)`, clamped to [0, 1].
pub fn markov_group_centrality(g: &CommGraph) -> Result<f64> {
    let n = g.node_count();
    if n <= 1 {
        return Ok(0.0);
    }
    Ok(group_from_centralities(&markov_centralities(g)?))
}

pub(crate) fn group_from_centralities(c: &[f64]) -> f64 {
    let n = c.len();
    let max = c.iter().copied().fold(0.0_f64, f64::max);
    if n <= 1 || max <= 0.0 {
        return 0.0;
    }
    let spread: f64 = c.iter().map(|x| max - x).sum();
    (spread / ((n - 1) as f64 * max)).clamp(0.0, 1.0)
}
