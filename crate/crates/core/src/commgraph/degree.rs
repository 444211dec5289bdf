//! Degree centralities and their Freeman-style group centralization.

use super::CommGraph;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DegreeMetrics {
    pub group_in: f64,
    pub group_out: f64,
    pub group_inout: f64,
    pub highest_in: f64,
    pub highest_out: f64,
}

/// `sum(max - c_i) / (n - 1)` over normalized node scores.
pub(crate) fn centralization(scores: &[f64]) -> f64 {
    let n = scores.len();
    if n <= 1 {
        return 0.0;
    }
    let max = scores.iter().copied().fold(0.0_f64, f64::max);
    let spread: f64 = scores.iter().map(|c| max - c).sum();
    (spread / (n - 1) as f64).clamp(0.0, 1.0)
}

pub fn degree_metrics(g: &CommGraph) -> DegreeMetrics {
    let n = g.node_count();
    if n <= 1 {
        return DegreeMetrics::default();
    }
    let denom = (n - 1) as f64;
    let in_c: Vec<f64> = (0..n)
        .map(|v| g.in_neighbors(v).len() as f64 / denom)
        .collect();
    let out_c: Vec<f64> = (0..n)
        .map(|v| g.out_neighbors(v).len() as f64 / denom)
        .collect();
    let inout_c: Vec<f64> = (0..n)
        .map(|v| (g.in_neighbors(v).len() + g.out_neighbors(v).len()) as f64 / (2.0 * denom))
        .collect();
    let max = |xs: &[f64]| xs.iter().copied().fold(0.0_f64, f64::max);
    DegreeMetrics {
        group_in: centralization(&in_c),
        group_out: centralization(&out_c),
        group_inout: centralization(&inout_c),
        highest_in: max(&in_c),
        highest_out: max(&out_c),
    }
}
