use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    betweenness_metrics, degree_metrics, graph_from_items, markov_group_centrality,
    resolve_items, structural_holes, CommGraph,
};
use crate::error::{Error, Result};
use crate::records::{BuildRecord, WorkItemRecord};

pub const FEATURE_COUNT: usize = 15;

/// Column names, in vector order.
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "group_in_degree",
    "group_out_degree",
    "group_inout_degree",
    "highest_in_degree",
    "highest_out_degree",
    "node_group_betweenness",
    "edge_group_betweenness",
    "group_markov",
    "effective_size",
    "efficiency",
    "density",
    "vertex_count",
    "edge_count",
    "work_item_count",
    "change_set_count",
];

/// The communication metrics describing one build.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureVector {
    pub group_in_degree: f64,
    pub group_out_degree: f64,
    pub group_inout_degree: f64,
    pub highest_in_degree: f64,
    pub highest_out_degree: f64,
    pub node_group_betweenness: f64,
    pub edge_group_betweenness: f64,
    pub group_markov: f64,
    pub effective_size: f64,
    pub efficiency: f64,
    pub density: f64,
    pub vertex_count: u64,
    pub edge_count: u64,
    pub work_item_count: u64,
    pub change_set_count: u64,
}

impl FeatureVector {
    pub fn to_array(&self) -> [f64; FEATURE_COUNT] {
        [
            self.group_in_degree,
            self.group_out_degree,
            self.group_inout_degree,
            self.highest_in_degree,
            self.highest_out_degree,
            self.node_group_betweenness,
            self.edge_group_betweenness,
            self.group_markov,
            self.effective_size,
            self.efficiency,
            self.density,
            self.vertex_count as f64,
            self.edge_count as f64,
            self.work_item_count as f64,
            self.change_set_count as f64,
        ]
    }

    /// Inverse of [`to_array`](Self::to_array). Ratio metrics must lie in
    /// [0, 1] and counts must be non-negative integers.
    pub fn from_array(values: [f64; FEATURE_COUNT]) -> Result<Self> {
        for (name, v) in FEATURE_NAMES.iter().zip(values) {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::schema(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        for i in (0..=7).chain(9..=10) {
            if values[i] > 1.0 {
                return Err(Error::schema(format!("{} must be <= 1, got {}", FEATURE_NAMES[i], values[i])));
            }
        }
        let count = |i: usize| -> Result<u64> {
            let v = values[i];
            if v.fract() != 0.0 {
                return Err(Error::schema(format!("{} must be an integer, got {v}", FEATURE_NAMES[i])));
            }
            Ok(v as u64)
        };
        Ok(FeatureVector {
            group_in_degree: values[0],
            group_out_degree: values[1],
            group_inout_degree: values[2],
            highest_in_degree: values[3],
            highest_out_degree: values[4],
            node_group_betweenness: values[5],
            edge_group_betweenness: values[6],
            group_markov: values[7],
            effective_size: values[8],
            efficiency: values[9],
            density: values[10],
            vertex_count: count(11)?,
            edge_count: count(12)?,
            work_item_count: count(13)?,
            change_set_count: count(14)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BasicMetrics {
    pub density: f64,
    pub vertex_count: u64,
    pub edge_count: u64,
    pub work_item_count: u64,
    pub change_set_count: u64,
}

pub fn basic_metrics(
    g: &CommGraph,
    build: &BuildRecord,
    items: &[WorkItemRecord],
) -> Result<BasicMetrics> {
    let resolved = resolve_items(build, items)?;
    Ok(basic_from_resolved(g, &resolved))
}

fn basic_from_resolved(g: &CommGraph, items: &[&WorkItemRecord]) -> BasicMetrics {
    let n = g.node_count();
    let density = if n <= 1 {
        0.0
    } else {
        g.edge_count() as f64 / (n * (n - 1)) as f64
    };
    BasicMetrics {
        density,
        vertex_count: n as u64,
        edge_count: g.edge_count() as u64,
        work_item_count: items.len() as u64,
        change_set_count: items.iter().map(|w| w.change_set_count).sum(),
    }
}

/// Computes every metric of one build from a single graph construction.
pub fn feature_vector(build: &BuildRecord, items: &[WorkItemRecord]) -> Result<FeatureVector> {
    let resolved = resolve_items(build, items)?;
    let g = graph_from_items(&resolved)?;
    let degree = degree_metrics(&g);
    let betweenness = betweenness_metrics(&g);
    let markov = markov_group_centrality(&g)?;
    let holes = structural_holes(&g);
    let basic = basic_from_resolved(&g, &resolved);
    Ok(FeatureVector {
        group_in_degree: degree.group_in,
        group_out_degree: degree.group_out,
        group_inout_degree: degree.group_inout,
        highest_in_degree: degree.highest_in,
        highest_out_degree: degree.highest_out,
        node_group_betweenness: betweenness.node_group,
        edge_group_betweenness: betweenness.edge_group,
        group_markov: markov,
        effective_size: holes.effective_size,
        efficiency: holes.efficiency,
        density: basic.density,
        vertex_count: basic.vertex_count,
        edge_count: basic.edge_count,
        work_item_count: basic.work_item_count,
        change_set_count: basic.change_set_count,
    })
}

/// Feature vectors for many builds, computed in parallel; output order
/// follows `builds`.
pub fn extract_features(
    builds: &[BuildRecord],
    items: &[WorkItemRecord],
) -> Result<Vec<FeatureVector>> {
    builds.par_iter().map(|b| feature_vector(b, items)).collect()
}
