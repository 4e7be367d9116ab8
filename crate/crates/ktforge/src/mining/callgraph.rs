//! Static call graph over resolved call sites, with shortest-chain caller
//! discovery from externally accessible entry points.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::frontend::model::{CallableId, Span};
use crate::kb::FunctionIndex;

/// Directed caller -> callee graph. Multiple call sites between the same
/// pair collapse into one edge carrying all site spans.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CallGraph {
    /// Node set with external accessibility (public/protected).
    pub nodes: BTreeMap<CallableId, bool>,
    pub edges: BTreeMap<CallableId, BTreeMap<CallableId, Vec<Span>>>,
}

impl CallGraph {
    pub fn edge_count(&self) -> usize {
        self.edges.values().map(|m| m.len()).sum()
    }

    pub fn callees(&self, caller: &CallableId) -> Vec<&CallableId> {
        self.edges.get(caller).map(|m| m.keys().collect()).unwrap_or_default()
    }

    pub fn callers(&self, callee: &CallableId) -> Vec<&CallableId> {
        self.edges
            .iter()
            .filter(|(_, callees)| callees.contains_key(callee))
            .map(|(caller, _)| caller)
            .collect()
    }

    pub fn contains(&self, id: &CallableId) -> bool {
        self.nodes.contains_key(id)
    }
}

/// Build the call graph from the knowledge base's resolved call sites.
pub fn build_call_graph(index: &FunctionIndex) -> CallGraph {
    let mut graph = CallGraph::default();
    for (id, decl) in &index.model.callables {
        graph.nodes.insert(id.clone(), decl.visibility.externally_accessible());
    }
    for (caller, deps) in &index.deps {
        for site in &deps.resolved_calls {
            graph
                .edges
                .entry(caller.clone())
                .or_default()
                .entry(site.callee.clone())
                .or_default()
                .push(site.span);
        }
    }
    for callees in graph.edges.values_mut() {
        for spans in callees.values_mut() {
            spans.sort();
            spans.dedup();
        }
    }
    graph
}

/// One direct caller of a focal method together with the shortest call
/// chain from an externally accessible callable down to the focal method:
/// `[entry, ..., caller, focal]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallerChain {
    pub caller: CallableId,
    pub chain: Vec<CallableId>,
}

/// All direct callers of `focal`, each with its shortest entry chain.
///
/// The chain is found by breadth-first search backwards over call edges;
/// ties at each frontier break by lexicographic callable id. A caller with
/// no accessible ancestor keeps the bare `[caller, focal]` chain.
pub fn discover_callers(focal: &CallableId, graph: &CallGraph) -> Vec<CallerChain> {
    let mut results: Vec<CallerChain> = graph
        .callers(focal)
        .into_iter()
        .map(|caller| {
            let mut chain = shortest_entry_chain(caller, graph);
            chain.push(focal.clone());
            CallerChain { caller: caller.clone(), chain }
        })
        .collect();
    results.sort_by(|a, b| {
        a.chain.len().cmp(&b.chain.len()).then_with(|| a.caller.cmp(&b.caller))
    });
    results
}

/// Shortest `[entry, ..., caller]` path where `entry` is externally
/// accessible, or `[caller]` when no accessible ancestor exists.
fn shortest_entry_chain(caller: &CallableId, graph: &CallGraph) -> Vec<CallableId> {
    if graph.nodes.get(caller).copied().unwrap_or(false) {
        return vec![caller.clone()];
    }
    // BFS backwards: from `caller` towards its callers, level by level,
    // with each level visited in lexicographic order.
    let mut parent: BTreeMap<CallableId, CallableId> = BTreeMap::new();
    let mut visited: BTreeSet<CallableId> = BTreeSet::new();
    visited.insert(caller.clone());
    let mut frontier: Vec<CallableId> = vec![caller.clone()];

    while !frontier.is_empty() {
        frontier.sort();
        // First accessible node in this frontier wins.
        if let Some(hit) = frontier.iter().find(|id| graph.nodes.get(*id).copied().unwrap_or(false))
        {
            let mut chain = vec![hit.clone()];
            let mut cur = hit;
            while let Some(next) = parent.get(cur) {
                chain.push(next.clone());
                cur = next;
            }
            return chain;
        }
        let mut next_frontier = Vec::new();
        for node in &frontier {
            let mut preds: Vec<&CallableId> = graph.callers(node);
            preds.sort();
            for pred in preds {
                if visited.insert(pred.clone()) {
                    parent.insert(pred.clone(), node.clone());
                    next_frontier.push(pred.clone());
                }
            }
        }
        frontier = next_frontier;
    }
    vec![caller.clone()]
}

/// BFS distance (in nodes) from any accessible callable to `target`,
/// counting `target` itself; 1 when target is accessible. Used as the
/// independent oracle contract for chain lengths.
pub fn bfs_entry_distance(target: &CallableId, graph: &CallGraph) -> Option<usize> {
    if graph.nodes.get(target).copied().unwrap_or(false) {
        return Some(1);
    }
    let mut dist: BTreeMap<&CallableId, usize> = BTreeMap::new();
    let mut queue = VecDeque::new();
    for (id, accessible) in &graph.nodes {
        if *accessible {
            dist.insert(id, 1);
            queue.push_back(id);
        }
    }
    while let Some(node) = queue.pop_front() {
        let d = dist[node];
        if node == target {
            return Some(d);
        }
        if let Some(callees) = graph.edges.get(node) {
            for callee in callees.keys() {
                if !dist.contains_key(callee) {
                    dist.insert(callee, d + 1);
                    queue.push_back(callee);
                }
            }
        }
    }
    dist.get(target).copied()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(s: &str) -> CallableId {
        CallableId(s.to_string())
    }

    fn graph(nodes: &[(&str, bool)], edges: &[(&str, &str)]) -> CallGraph {
        let mut g = CallGraph::default();
        for (n, acc) in nodes {
            g.nodes.insert(id(n), *acc);
        }
        for (a, b) in edges {
            g.edges
                .entry(id(a))
                .or_default()
                .entry(id(b))
                .or_default()
                .push(Span::new(0, 0));
        }
        g
    }

    #[test]
    fn two_calls_two_edges() {
        let g = graph(
            &[("a", true), ("b", true), ("c", true)],
            &[("a", "b"), ("b", "c")],
        );
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn recursion_is_one_self_edge() {
        let g = graph(&[("f", true)], &[("f", "f"), ("f", "f")]);
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn private_focal_with_public_caller() {
        let g = graph(&[("q", true), ("p", false)], &[("q", "p")]);
        let callers = discover_callers(&id("p"), &g);
        assert_eq!(callers.len(), 1);
        assert_eq!(callers[0].caller, id("q"));
        assert_eq!(callers[0].chain, vec![id("q"), id("p")]);
    }

    #[test]
    fn shortest_chain_is_chosen() {
        // public a -> b -> p and public c -> p: c's chain is shorter
        let g = graph(
            &[("a", true), ("b", false), ("c", true), ("p", false)],
            &[("a", "b"), ("b", "p"), ("c", "p")],
        );
        let callers = discover_callers(&id("p"), &g);
        assert_eq!(callers.len(), 2);
        assert_eq!(callers[0].caller, id("c"));
        assert_eq!(callers[0].chain, vec![id("c"), id("p")]);
        assert_eq!(callers[1].caller, id("b"));
        assert_eq!(callers[1].chain, vec![id("a"), id("b"), id("p")]);
    }

    #[test]
    fn public_focal_with_three_callers() {
        let g = graph(
            &[("x", true), ("y", true), ("z", true), ("f", true)],
            &[("x", "f"), ("y", "f"), ("z", "f")],
        );
        let callers = discover_callers(&id("f"), &g);
        assert_eq!(callers.len(), 3);
        assert!(callers.iter().all(|c| c.chain.len() == 2));
    }

    #[test]
    fn zero_callers_is_empty_list() {
        let g = graph(&[("f", true)], &[]);
        assert!(discover_callers(&id("f"), &g).is_empty());
    }

    #[test]
    fn frontier_tie_breaks_lexicographically() {
        // both `m` and `n` are accessible callers of `h` at distance 2;
        // `m` must win the tie
        let g = graph(
            &[("m", true), ("n", true), ("h", false), ("p", false)],
            &[("m", "h"), ("n", "h"), ("h", "p")],
        );
        let callers = discover_callers(&id("p"), &g);
        assert_eq!(callers[0].chain, vec![id("m"), id("h"), id("p")]);
    }

    #[test]
    fn caller_without_accessible_ancestor_keeps_bare_chain() {
        let g = graph(&[("h", false), ("p", false)], &[("h", "p")]);
        let callers = discover_callers(&id("p"), &g);
        assert_eq!(callers[0].chain, vec![id("h"), id("p")]);
    }
}
