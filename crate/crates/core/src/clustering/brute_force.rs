use std::collections::BTreeMap;

use super::{edge_cost, Clustering};
use crate::error::{Error, Result};
use crate::graph::{NodeId, UsageGraph};

pub const BRUTE_FORCE_LIMIT: usize = 12;

struct Search<'a> {
    /// For node i, its weighted edges to nodes with a smaller index.
    back_edges: &'a [Vec<(usize, f64)>],
    labels: Vec<usize>,
    best: Option<(f64, usize, Vec<usize>)>,
}

impl Search<'_> {
    fn visit(&mut self, i: usize, max_label: usize, partial: f64) {
        if let Some((best, _, _)) = &self.best {
            if partial > *best {
                return;
            }
        }
        if i == self.labels.len() {
            let count = max_label + 1;
            let improves = match &self.best {
                None => true,
                Some((l, c, _)) => (partial, count) < (*l, *c),
            };
            if improves {
                self.best = Some((partial, count, self.labels.clone()));
            }
            return;
        }
        // Restricted growth strings enumerate each set partition exactly once,
        // in lexicographic order.
        for label in 0..=max_label + 1 {
            let cost: f64 = self.back_edges[i].iter().map(|&(u, w)| edge_cost(self.labels[u] == label, w)).sum();
            self.labels[i] = label;
            self.visit(i + 1, max_label.max(label), partial + cost);
        }
    }
}

/// Exact minimizer of the conflict loss over every partition of the graph's
/// nodes. Ties go to fewer clusters, then to the lexicographically smallest
/// labelling.
pub fn brute_force_cluster(graph: &UsageGraph) -> Result<Clustering> {
    let n = graph.node_count();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::NodeLimitExceeded { limit: BRUTE_FORCE_LIMIT, got: n });
    }
    if n == 0 {
        return Ok(Clustering::default());
    }
    let ids: Vec<NodeId> = graph.node_ids().cloned().collect();
    let index: BTreeMap<&NodeId, usize> = ids.iter().enumerate().map(|(i, id)| (id, i)).collect();
    let mut back_edges = vec![Vec::new(); n];
    for (pair, w) in graph.weighted_edges() {
        let (a, b) = (index[pair.first()], index[pair.second()]);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        back_edges[hi].push((lo, w));
    }
    let mut search = Search { back_edges: &back_edges, labels: vec![0; n], best: None };
    search.visit(1, 0, 0.0);
    let (_, _, labels) = search.best.expect("at least one partition exists");
    Ok(Clustering::from_assignment(ids.into_iter().zip(labels)))
}
