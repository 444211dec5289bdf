//! Per-build communication networks and the metrics computed over them.
//!
//! A build's network is the union of the networks of its work items. Each
//! contributor appears once and each directed edge appears once, however
//! many work items mention them.

mod betweenness;
mod degree;
mod features;
mod holes;
mod markov;

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::records::{BuildRecord, ContributorId, WorkItemRecord};

pub use betweenness::{betweenness_metrics, edge_betweenness, node_betweenness, BetweennessMetrics};
pub use degree::{degree_metrics, DegreeMetrics};
pub use features::{
    basic_metrics, extract_features, feature_vector, BasicMetrics, FeatureVector, FEATURE_COUNT,
    FEATURE_NAMES,
};
pub use holes::{structural_holes, StructuralHoles};
pub use markov::{markov_centralities, markov_group_centrality, TELEPORT_PROBABILITY};

/// Directed, simple communication graph. Nodes are kept sorted by id so that
/// every derived quantity is independent of input order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommGraph {
    nodes: Vec<ContributorId>,
    out_adj: Vec<Vec<usize>>,
    in_adj: Vec<Vec<usize>>,
    edge_count: usize,
}

impl CommGraph {
    /// Builds a graph from contributor ids and id-pairs. Self-loops and
    /// duplicates are dropped; edge endpoints are added as nodes.
    pub fn from_edges<I, E>(nodes: I, edges: E) -> Self
    where
        I: IntoIterator<Item = ContributorId>,
        E: IntoIterator<Item = (ContributorId, ContributorId)>,
    {
        let mut node_set: BTreeSet<ContributorId> = nodes.into_iter().collect();
        let edge_set: BTreeSet<(ContributorId, ContributorId)> =
            edges.into_iter().filter(|(a, b)| a != b).collect();
        for (a, b) in &edge_set {
            node_set.insert(a.clone());
            node_set.insert(b.clone());
        }
        let nodes: Vec<ContributorId> = node_set.into_iter().collect();
        let index: BTreeMap<&ContributorId, usize> =
            nodes.iter().enumerate().map(|(i, id)| (id, i)).collect();
        let pairs: Vec<(usize, usize)> = edge_set
            .iter()
            .map(|(a, b)| (index[a], index[b]))
            .collect();
        Self::from_index_pairs(nodes, &pairs)
    }

    /// Graph on `n` anonymous nodes named `v00`, `v01`, ...
    pub fn from_index_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let nodes = (0..n)
            .map(|i| ContributorId::new(format!("v{i:02}")).expect("non-empty"))
            .collect();
        Self::from_index_pairs(nodes, edges)
    }

    fn from_index_pairs(nodes: Vec<ContributorId>, edges: &[(usize, usize)]) -> Self {
        let n = nodes.len();
        let mut out_sets = vec![BTreeSet::new(); n];
        for &(a, b) in edges {
            assert!(a < n && b < n, "edge endpoint out of range");
            if a != b {
                out_sets[a].insert(b);
            }
        }
        let mut in_adj = vec![Vec::new(); n];
        let mut edge_count = 0;
        let out_adj: Vec<Vec<usize>> = out_sets
            .into_iter()
            .enumerate()
            .map(|(a, set)| {
                for &b in &set {
                    in_adj[b].push(a);
                }
                edge_count += set.len();
                set.into_iter().collect()
            })
            .collect();
        CommGraph {
            nodes,
            out_adj,
            in_adj,
            edge_count,
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn nodes(&self) -> &[ContributorId] {
        &self.nodes
    }

    pub fn out_neighbors(&self, v: usize) -> &[usize] {
        &self.out_adj[v]
    }

    pub fn in_neighbors(&self, v: usize) -> &[usize] {
        &self.in_adj[v]
    }

    pub fn contains_edge(&self, from: usize, to: usize) -> bool {
        self.out_adj[from].binary_search(&to).is_ok()
    }

    /// Edges as index pairs in (from, to) lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.out_adj
            .iter()
            .enumerate()
            .flat_map(|(a, outs)| outs.iter().map(move |&b| (a, b)))
    }

    /// Edges as id pairs.
    pub fn edge_ids(&self) -> impl Iterator<Item = (&ContributorId, &ContributorId)> + '_ {
        self.edges().map(|(a, b)| (&self.nodes[a], &self.nodes[b]))
    }
}

/// Looks up the work items of a build, failing on any dangling reference.
pub fn resolve_items<'a>(
    build: &BuildRecord,
    items: &'a [WorkItemRecord],
) -> Result<Vec<&'a WorkItemRecord>> {
    let by_id: BTreeMap<&str, &WorkItemRecord> =
        items.iter().map(|w| (w.work_item_id.as_str(), w)).collect();
    let mut seen = BTreeSet::new();
    let mut resolved = Vec::with_capacity(build.work_item_ids.len());
    for wid in &build.work_item_ids {
        let item = by_id.get(wid.as_str()).ok_or_else(|| Error::Ingest {
            build_id: build.build_id.clone(),
            work_item_id: wid.clone(),
        })?;
        if seen.insert(wid.as_str()) {
            resolved.push(*item);
        }
    }
    Ok(resolved)
}

/// Directed edges contributed by a single work item.
///
/// The creator points at every subscriber and committer. Each commenter
/// points at the creator, at every earlier commenter and at every subscriber.
pub fn work_item_edges(item: &WorkItemRecord) -> BTreeSet<(ContributorId, ContributorId)> {
    let mut edges = BTreeSet::new();
    let mut push = |from: &ContributorId, to: &ContributorId| {
        if from != to {
            edges.insert((from.clone(), to.clone()));
        }
    };
    for target in item.subscribers.iter().chain(&item.committers) {
        push(&item.creator, target);
    }
    for (i, comment) in item.comments.iter().enumerate() {
        push(&comment.author, &item.creator);
        for earlier in &item.comments[..i] {
            push(&comment.author, &earlier.author);
        }
        for sub in &item.subscribers {
            push(&comment.author, sub);
        }
    }
    edges
}

/// Builds the deduplicated communication network of one build.
pub fn build_graph(build: &BuildRecord, items: &[WorkItemRecord]) -> Result<CommGraph> {
    let resolved = resolve_items(build, items)?;
    graph_from_items(&resolved)
}

pub(crate) fn graph_from_items(items: &[&WorkItemRecord]) -> Result<CommGraph> {
    let mut nodes = BTreeSet::new();
    let mut edges = BTreeSet::new();
    for item in items {
        item.validate()?;
        nodes.extend(item.participants().cloned());
        edges.extend(work_item_edges(item));
    }
    Ok(CommGraph::from_edges(nodes, edges))
}
