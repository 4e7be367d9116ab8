//! Usage mining: call graph, caller discovery, control flow graphs, and
//! pruned usage traces for focal methods.

pub mod callgraph;
pub mod cfg;
pub mod slice;

pub use callgraph::{bfs_entry_distance, build_call_graph, discover_callers, CallGraph, CallerChain};
pub use cfg::{build_cfg, CfgError, CfgNode, ControlFlowGraph, EdgeLabel, NodeId};
pub use slice::{compute_slice, extract_usage_trace, render_trace, SliceError, UsageTrace};

use crate::frontend::model::CallableId;
use crate::kb::FunctionIndex;

/// Mine up to `max_traces` usage traces for a focal method, ranked by
/// shorter entry chain, then shorter retained length, then caller id.
/// One trace is extracted per call site.
pub fn mine_usage_traces(
    focal: &CallableId,
    index: &FunctionIndex,
    graph: &CallGraph,
    max_traces: usize,
) -> Vec<UsageTrace> {
    let mut traces = Vec::new();
    for caller_chain in discover_callers(focal, graph) {
        let Some(decl) = index.model.callable(&caller_chain.caller) else { continue };
        let Some(deps) = index.deps.get(&caller_chain.caller) else { continue };
        let Ok(cfg) = build_cfg(&index.model, decl, deps) else { continue };
        // chain for the trace runs entry -> caller (the focal is implicit)
        let chain: Vec<CallableId> = caller_chain
            .chain
            .iter()
            .take(caller_chain.chain.len().saturating_sub(1))
            .cloned()
            .collect();
        for callsite in cfg.call_nodes_targeting(focal) {
            if let Ok(trace) = extract_usage_trace(&cfg, callsite, focal, chain.clone()) {
                traces.push(trace);
            }
        }
    }
    traces.sort_by(|a, b| {
        a.chain
            .len()
            .cmp(&b.chain.len())
            .then_with(|| a.retained.len().cmp(&b.retained.len()))
            .then_with(|| a.caller.cmp(&b.caller))
            .then_with(|| a.callsite_span.cmp(&b.callsite_span))
    });
    traces.truncate(max_traces);
    traces
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_units;
    use crate::kb::build_index;
    use std::path::PathBuf;

    #[test]
    fn traces_are_capped_and_ranked() {
        let src = r#"
            package p;
            public class A {
                void focal(int x) { }
                public void c1() { focal(1); }
                public void c2() { int a = 1; focal(a); }
                public void c3() { int a = 1; int b = a; focal(b); }
                public void c4() { int a = 1; int b = a; int c = b; focal(c); }
            }
        "#;
        let model = parse_units(vec![(PathBuf::from("A.java"), src.to_string())]);
        let index = build_index(model).unwrap();
        let graph = build_call_graph(&index);
        let focal = crate::frontend::model::CallableId("p.A#focal(int)".into());
        let traces = mine_usage_traces(&focal, &index, &graph, 3);
        assert_eq!(traces.len(), 3);
        // all chains length 1 (public callers); ranked by retained length
        assert!(traces[0].retained.len() <= traces[1].retained.len());
        assert!(traces[1].retained.len() <= traces[2].retained.len());
        assert_eq!(traces[0].caller.as_str(), "p.A#c1()");
    }
}
