//! Path-sensitive usage trace extraction: intra-procedural slicing over the
//! caller's CFG, keeping only what the focal invocation needs.
//!
//! A trace retains, in original statement order:
//!   1. the callsite itself (always last),
//!   2. statements defining variables in the transitive backward data slice
//!      of the callsite's receiver and arguments, restricted to nodes lying
//!      on an entry-to-callsite path and textually preceding the callsite,
//!   3. branch conditions that decide whether the callsite or a retained
//!      statement is reached: conditions with exactly one out-edge leading
//!      to the target (this keeps loop conditions whose bodies feed the
//!      slice and prunes branches both of whose arms rejoin before it).
//!
//! Exception edges are ignored during reachability unless the callsite
//! itself sits inside a catch block.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontend::model::{CallableId, Span};

use super::cfg::{CfgNode, ControlFlowGraph, EdgeLabel, NodeId};

/// A pruned statement sequence from a caller's entry to the focal
/// invocation, showing real construction and argument preparation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UsageTrace {
    pub caller: CallableId,
    pub focal: CallableId,
    /// Retained statement/branch texts in source order; the final element
    /// is the focal invocation.
    pub retained: Vec<String>,
    pub callsite_span: Span,
    /// Call chain from a public entry down to the caller (length 1 when the
    /// caller is itself accessible).
    pub chain: Vec<CallableId>,
}

#[derive(Debug, Error)]
pub enum SliceError {
    #[error("node {0:?} is not a call node targeting the focal method")]
    NotACallsite(NodeId),
    #[error("callsite {0:?} is unreachable from entry")]
    UnreachableCallsite(NodeId),
}

/// Retained node set of a slice, before rendering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SliceResult {
    pub retained: Vec<NodeId>,
    pub callsite: NodeId,
}

/// Forward reachability over allowed edges from every node.
fn reach_sets(cfg: &ControlFlowGraph, allow_exception: bool) -> Vec<BTreeSet<usize>> {
    let n = cfg.nodes.len();
    let mut reach = vec![BTreeSet::new(); n];
    for start in 0..n {
        let mut seen = BTreeSet::new();
        let mut stack = vec![start];
        seen.insert(start);
        while let Some(cur) = stack.pop() {
            for e in cfg.edges.iter().filter(|e| e.from.0 == cur) {
                if e.label == Some(EdgeLabel::Exception) && !allow_exception {
                    continue;
                }
                if seen.insert(e.to.0) {
                    stack.push(e.to.0);
                }
            }
        }
        reach[start] = seen;
    }
    reach
}

/// Compute the slice for the call site at `callsite` targeting `focal`.
pub fn compute_slice(
    cfg: &ControlFlowGraph,
    callsite: NodeId,
    focal: &CallableId,
) -> Result<SliceResult, SliceError> {
    let CfgNode::Call { sites, stmt: callsite_stmt } = cfg.node(callsite) else {
        return Err(SliceError::NotACallsite(callsite));
    };
    let site = sites
        .iter()
        .find(|s| &s.callee == focal)
        .ok_or(SliceError::NotACallsite(callsite))?;

    let allow_exception = cfg.in_catch.contains(&callsite);
    let reach = reach_sets(cfg, allow_exception);

    if !reach[cfg.entry.0].contains(&callsite.0) {
        return Err(SliceError::UnreachableCallsite(callsite));
    }

    let callsite_start = callsite_stmt.span.start;
    let on_path = |n: usize| -> bool {
        reach[cfg.entry.0].contains(&n) && reach[n].contains(&callsite.0)
    };

    // Backward data slice: statements on an entry->callsite path, textually
    // before the callsite, defining a variable in the transitive closure of
    // the call's receiver/argument uses.
    let mut vars: BTreeSet<String> = site.seed_uses.clone();
    let mut retained_stmts: BTreeSet<usize> = BTreeSet::new();
    loop {
        let mut changed = false;
        for (i, node) in cfg.nodes.iter().enumerate() {
            if i == callsite.0 || retained_stmts.contains(&i) || !on_path(i) {
                continue;
            }
            let Some(defs) = node.defs() else { continue };
            if node.span_start() >= callsite_start {
                continue;
            }
            if defs.iter().any(|d| vars.contains(d)) {
                retained_stmts.insert(i);
                if let Some(uses) = node.uses() {
                    vars.extend(uses.iter().cloned());
                }
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    // Controlling branches: exactly one out-edge reaches the target.
    let mut targets: Vec<usize> = vec![callsite.0];
    targets.extend(retained_stmts.iter().copied());
    let mut retained_branches: BTreeSet<usize> = BTreeSet::new();
    for (i, node) in cfg.nodes.iter().enumerate() {
        if !node.is_branch() || node.span_start() >= callsite_start {
            continue;
        }
        if !reach[cfg.entry.0].contains(&i) {
            continue;
        }
        for &t in &targets {
            let reaching_edges = cfg
                .edges
                .iter()
                .filter(|e| {
                    e.from.0 == i
                        && !(e.label == Some(EdgeLabel::Exception) && !allow_exception)
                        && reach[e.to.0].contains(&t)
                })
                .count();
            let total_out = cfg
                .edges
                .iter()
                .filter(|e| {
                    e.from.0 == i
                        && !(e.label == Some(EdgeLabel::Exception) && !allow_exception)
                })
                .count();
            if reaching_edges == 1 && total_out >= 2 {
                retained_branches.insert(i);
                break;
            }
        }
    }

    let mut retained: Vec<NodeId> = retained_stmts
        .iter()
        .chain(retained_branches.iter())
        .map(|&i| NodeId(i))
        .collect();
    retained.push(callsite);
    retained.sort_by_key(|id| (cfg.node(*id).span_start(), id.0));
    Ok(SliceResult { retained, callsite })
}

/// Slice and render a usage trace for one callsite.
pub fn extract_usage_trace(
    cfg: &ControlFlowGraph,
    callsite: NodeId,
    focal: &CallableId,
    chain: Vec<CallableId>,
) -> Result<UsageTrace, SliceError> {
    let slice = compute_slice(cfg, callsite, focal)?;
    let callsite_span = match cfg.node(callsite) {
        CfgNode::Call { sites, .. } => sites
            .iter()
            .find(|s| &s.callee == focal)
            .map(|s| s.span)
            .unwrap_or(Span::new(0, 0)),
        _ => Span::new(0, 0),
    };
    let retained = slice
        .retained
        .iter()
        .map(|id| {
            let node = cfg.node(*id);
            if node.is_branch() {
                format!("[branch] {}", node.text())
            } else {
                node.text().to_string()
            }
        })
        .collect();
    Ok(UsageTrace {
        caller: cfg.owner.clone(),
        focal: focal.clone(),
        retained,
        callsite_span,
        chain,
    })
}

/// Render a trace as a short annotated snippet for prompts and CLI output.
pub fn render_trace(trace: &UsageTrace) -> String {
    let chain = trace
        .chain
        .iter()
        .map(|c| c.as_str())
        .collect::<Vec<_>>()
        .join(" -> ");
    let mut out = format!("// call chain: {} -> {}\n", chain, trace.focal);
    for line in &trace.retained {
        out.push_str(line);
        out.push('\n');
    }
    out
}
