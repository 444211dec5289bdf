//! Burt's effective size and efficiency on the undirected projection.

use std::collections::BTreeSet;

use super::CommGraph;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StructuralHoles {
    pub effective_size: f64,
    pub efficiency: f64,
}

/// Undirected, binary neighbour sets.
pub(crate) fn undirected_neighbors(g: &CommGraph) -> Vec<BTreeSet<usize>> {
    let mut nbrs = vec![BTreeSet::new(); g.node_count()];
    for (a, b) in g.edges() {
        nbrs[a].insert(b);
        nbrs[b].insert(a);
    }
    nbrs
}

/// Per node `ES = d - 2t/d` with `t` the ties among the node's neighbours;
/// graph values average over nodes with at least one tie.
pub fn structural_holes(g: &CommGraph) -> StructuralHoles {
    let nbrs = undirected_neighbors(g);
    let mut es_total = 0.0;
    let mut eff_total = 0.0;
    let mut counted = 0usize;
    for set in &nbrs {
        let d = set.len();
        if d == 0 {
            continue;
        }
        let ties = set
            .iter()
            .map(|&j| nbrs[j].iter().filter(|q| set.contains(q) && **q > j).count())
            .sum::<usize>();
        let df = d as f64;
        let es = df - 2.0 * ties as f64 / df;
        es_total += es;
        eff_total += es / df;
        counted += 1;
    }
    if counted == 0 {
        return StructuralHoles::default();
    }
    StructuralHoles {
        effective_size: es_total / counted as f64,
        efficiency: eff_total / counted as f64,
    }
}
