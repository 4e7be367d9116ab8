//! Intra-procedural control flow graphs with per-node def/use sets.
//!
//! Supported constructs: sequencing, if/else, while, classic and enhanced
//! for, switch (desugared to an if-chain), return, throw, break/continue,
//! and try/catch (catch bodies as exception-labeled alternative successors
//! of the try region). Anything else enters the graph as an opaque
//! statement node.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontend::model::{
    CallableDecl, CallableId, CodeModel, Expr, Span, Stmt,
};
use crate::kb::DepInfo;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StmtInfo {
    pub span: Span,
    pub text: String,
    pub defs: BTreeSet<String>,
    pub uses: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchInfo {
    pub span: Span,
    pub text: String,
    pub uses: BTreeSet<String>,
}

/// A resolved call site inside a call node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CfgCallSite {
    pub callee: CallableId,
    pub span: Span,
    /// Variables used by the call's receiver and arguments: the slicing seed.
    pub seed_uses: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum CfgNode {
    Entry,
    Exit,
    Statement(StmtInfo),
    Branch(BranchInfo),
    /// Statement containing at least one resolved call site.
    Call { stmt: StmtInfo, sites: Vec<CfgCallSite> },
}

impl CfgNode {
    pub fn text(&self) -> &str {
        match self {
            CfgNode::Entry => "<entry>",
            CfgNode::Exit => "<exit>",
            CfgNode::Statement(s) => &s.text,
            CfgNode::Branch(b) => &b.text,
            CfgNode::Call { stmt, .. } => &stmt.text,
        }
    }

    pub fn span_start(&self) -> usize {
        match self {
            CfgNode::Entry => 0,
            CfgNode::Exit => usize::MAX,
            CfgNode::Statement(s) => s.span.start,
            CfgNode::Branch(b) => b.span.start,
            CfgNode::Call { stmt, .. } => stmt.span.start,
        }
    }

    pub fn defs(&self) -> Option<&BTreeSet<String>> {
        match self {
            CfgNode::Statement(s) | CfgNode::Call { stmt: s, .. } => Some(&s.defs),
            _ => None,
        }
    }

    pub fn uses(&self) -> Option<&BTreeSet<String>> {
        match self {
            CfgNode::Statement(s) | CfgNode::Call { stmt: s, .. } => Some(&s.uses),
            CfgNode::Branch(b) => Some(&b.uses),
            _ => None,
        }
    }

    pub fn is_branch(&self) -> bool {
        matches!(self, CfgNode::Branch(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeLabel {
    True,
    False,
    Case(usize),
    Exception,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CfgEdge {
    pub from: NodeId,
    pub to: NodeId,
    pub label: Option<EdgeLabel>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ControlFlowGraph {
    pub owner: CallableId,
    pub nodes: Vec<CfgNode>,
    pub edges: Vec<CfgEdge>,
    pub entry: NodeId,
    pub exit: NodeId,
    /// Nodes that live inside a catch block.
    pub in_catch: BTreeSet<NodeId>,
}

impl ControlFlowGraph {
    pub fn node(&self, id: NodeId) -> &CfgNode {
        &self.nodes[id.0]
    }

    pub fn successors(&self, id: NodeId) -> impl Iterator<Item = &CfgEdge> {
        self.edges.iter().filter(move |e| e.from == id)
    }

    /// Call nodes whose site list targets `callee`, in source order.
    pub fn call_nodes_targeting(&self, callee: &CallableId) -> Vec<NodeId> {
        let mut out: Vec<NodeId> = self
            .nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| match n {
                CfgNode::Call { sites, .. } => sites.iter().any(|s| &s.callee == callee),
                _ => false,
            })
            .map(|(i, _)| NodeId(i))
            .collect();
        out.sort_by_key(|id| self.node(*id).span_start());
        out
    }

    /// Render the graph in DOT format for debug export.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph cfg {\n");
        out.push_str(&format!("  label=\"{}\";\n", self.owner));
        for (i, node) in self.nodes.iter().enumerate() {
            let shape = match node {
                CfgNode::Entry | CfgNode::Exit => "ellipse",
                CfgNode::Branch(_) => "diamond",
                _ => "box",
            };
            out.push_str(&format!(
                "  n{} [shape={}, label=\"{}\"];\n",
                i,
                shape,
                node.text().replace('"', "\\\"")
            ));
        }
        for e in &self.edges {
            let label = match e.label {
                Some(EdgeLabel::True) => " [label=\"true\"]",
                Some(EdgeLabel::False) => " [label=\"false\"]",
                Some(EdgeLabel::Exception) => " [label=\"exception\", style=dashed]",
                Some(EdgeLabel::Case(_)) => " [label=\"case\"]",
                None => "",
            };
            out.push_str(&format!("  n{} -> n{}{};\n", e.from.0, e.to.0, label));
        }
        out.push_str("}\n");
        out
    }
}

#[derive(Debug, Error)]
pub enum CfgError {
    #[error("callable {0} has no body")]
    NoBody(CallableId),
    #[error("callable {0} not found in the model")]
    UnknownCallable(CallableId),
}

/// Build the CFG for a callable with a body.
///
/// `deps` supplies resolved call sites (keyed by span) so statements that
/// invoke project callables become call nodes.
pub fn build_cfg(
    model: &CodeModel,
    decl: &CallableDecl,
    deps: &DepInfo,
) -> Result<ControlFlowGraph, CfgError> {
    let body = decl.body.as_ref().ok_or_else(|| CfgError::NoBody(decl.id.clone()))?;
    let text = model.unit_text(&decl.source_unit).unwrap_or("");
    let site_map: BTreeMap<(usize, usize), CallableId> = deps
        .resolved_calls
        .iter()
        .map(|c| ((c.span.start, c.span.end), c.callee.clone()))
        .collect();

    let mut b = Builder {
        text,
        site_map,
        nodes: vec![CfgNode::Entry, CfgNode::Exit],
        edges: Vec::new(),
        in_catch: BTreeSet::new(),
        catch_depth: 0,
        loop_stack: Vec::new(),
    };
    let frontier = b.build_stmts(&body.stmts, vec![(ENTRY, None)]);
    for (from, label) in frontier {
        b.edge(from, EXIT, label);
    }
    let mut cfg = ControlFlowGraph {
        owner: decl.id.clone(),
        nodes: b.nodes,
        edges: b.edges,
        entry: ENTRY,
        exit: EXIT,
        in_catch: b.in_catch,
    };
    prune_unreachable(&mut cfg);
    Ok(cfg)
}

const ENTRY: NodeId = NodeId(0);
const EXIT: NodeId = NodeId(1);

type Frontier = Vec<(NodeId, Option<EdgeLabel>)>;

struct LoopCtx {
    break_exits: Frontier,
    continue_target: Option<NodeId>,
}

struct Builder<'a> {
    text: &'a str,
    site_map: BTreeMap<(usize, usize), CallableId>,
    nodes: Vec<CfgNode>,
    edges: Vec<CfgEdge>,
    in_catch: BTreeSet<NodeId>,
    catch_depth: usize,
    loop_stack: Vec<LoopCtx>,
}

impl<'a> Builder<'a> {
    fn push(&mut self, node: CfgNode) -> NodeId {
        let id = NodeId(self.nodes.len());
        self.nodes.push(node);
        if self.catch_depth > 0 {
            self.in_catch.insert(id);
        }
        id
    }

    fn edge(&mut self, from: NodeId, to: NodeId, label: Option<EdgeLabel>) {
        self.edges.push(CfgEdge { from, to, label });
    }

    fn connect(&mut self, frontier: Frontier, to: NodeId) {
        for (from, label) in frontier {
            self.edge(from, to, label);
        }
    }

    fn snippet(&self, span: Span) -> String {
        span.slice(self.text)
            .split_whitespace()
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Statement node, upgraded to a call node when the statement contains
    /// resolved call sites.
    fn stmt_node(&mut self, span: Span, defs: BTreeSet<String>, uses: BTreeSet<String>, exprs: &[&Expr]) -> NodeId {
        let info = StmtInfo { span, text: self.snippet(span), defs, uses };
        let mut sites = Vec::new();
        for expr in exprs {
            expr.walk(&mut |e| {
                let es = e.span();
                if let Some(callee) = self.site_map.get(&(es.start, es.end)) {
                    let mut seed = BTreeSet::new();
                    match e {
                        Expr::MethodCall { receiver, args, .. } => {
                            if let Some(r) = receiver {
                                expr_uses(r, &mut seed);
                            }
                            for a in args {
                                expr_uses(a, &mut seed);
                            }
                        }
                        Expr::New { args, .. } => {
                            for a in args {
                                expr_uses(a, &mut seed);
                            }
                        }
                        _ => {}
                    }
                    sites.push(CfgCallSite { callee: callee.clone(), span: es, seed_uses: seed });
                }
            });
        }
        if sites.is_empty() {
            self.push(CfgNode::Statement(info))
        } else {
            sites.sort_by_key(|s| s.span.start);
            self.push(CfgNode::Call { stmt: info, sites })
        }
    }

    fn branch_node(&mut self, span: Span, uses: BTreeSet<String>) -> NodeId {
        let info = BranchInfo { span, text: self.snippet(span), uses };
        self.push(CfgNode::Branch(info))
    }

    fn build_stmts(&mut self, stmts: &[Stmt], mut frontier: Frontier) -> Frontier {
        for stmt in stmts {
            frontier = self.build_stmt(stmt, frontier);
        }
        frontier
    }

    fn build_stmt(&mut self, stmt: &Stmt, frontier: Frontier) -> Frontier {
        match stmt {
            Stmt::Block(b) => self.build_stmts(&b.stmts, frontier),
            Stmt::LocalVar { declarators, span, .. } => {
                let mut defs = BTreeSet::new();
                let mut uses = BTreeSet::new();
                let mut exprs: Vec<&Expr> = Vec::new();
                for d in declarators {
                    defs.insert(d.name.clone());
                    if let Some(init) = &d.init {
                        expr_uses(init, &mut uses);
                        exprs.push(init);
                    }
                }
                let node = self.stmt_node(*span, defs, uses, &exprs);
                self.connect(frontier, node);
                vec![(node, None)]
            }
            Stmt::ExprStmt { expr, span } => {
                let (defs, uses) = stmt_defs_uses(expr);
                let node = self.stmt_node(*span, defs, uses, &[expr]);
                self.connect(frontier, node);
                vec![(node, None)]
            }
            Stmt::Return { value, span } => {
                let mut uses = BTreeSet::new();
                let mut exprs: Vec<&Expr> = Vec::new();
                if let Some(v) = value {
                    expr_uses(v, &mut uses);
                    exprs.push(v);
                }
                let node = self.stmt_node(*span, BTreeSet::new(), uses, &exprs);
                self.connect(frontier, node);
                self.edge(node, EXIT, None);
                Vec::new()
            }
            Stmt::Throw { value, span } => {
                let mut uses = BTreeSet::new();
                expr_uses(value, &mut uses);
                let node = self.stmt_node(*span, BTreeSet::new(), uses, &[value]);
                self.connect(frontier, node);
                self.edge(node, EXIT, None);
                Vec::new()
            }
            Stmt::If { cond, cond_span, then_branch, else_branch, .. } => {
                let mut uses = BTreeSet::new();
                expr_uses(cond, &mut uses);
                let branch = self.branch_node(*cond_span, uses);
                self.connect(frontier, branch);
                let mut out =
                    self.build_stmt(then_branch, vec![(branch, Some(EdgeLabel::True))]);
                match else_branch {
                    Some(e) => {
                        let else_out =
                            self.build_stmt(e, vec![(branch, Some(EdgeLabel::False))]);
                        out.extend(else_out);
                    }
                    None => out.push((branch, Some(EdgeLabel::False))),
                }
                out
            }
            Stmt::While { cond, cond_span, body, .. } => {
                let mut uses = BTreeSet::new();
                expr_uses(cond, &mut uses);
                let branch = self.branch_node(*cond_span, uses);
                self.connect(frontier, branch);
                self.loop_stack.push(LoopCtx {
                    break_exits: Vec::new(),
                    continue_target: Some(branch),
                });
                let body_out = self.build_stmt(body, vec![(branch, Some(EdgeLabel::True))]);
                self.connect(body_out, branch);
                let ctx = self.loop_stack.pop().unwrap();
                let mut out = vec![(branch, Some(EdgeLabel::False))];
                out.extend(ctx.break_exits);
                out
            }
            Stmt::For { init, cond, cond_span, update, body, span } => {
                let mut frontier = frontier;
                if let Some(init) = init {
                    frontier = self.build_stmt(init, frontier);
                }
                let mut uses = BTreeSet::new();
                let branch_span = match (cond, cond_span) {
                    (Some(c), Some(s)) => {
                        expr_uses(c, &mut uses);
                        *s
                    }
                    // condition-less `for(;;)`: a synthetic always-true branch
                    _ => Span::new(span.start, span.start + 3),
                };
                let branch = self.branch_node(branch_span, uses);
                self.connect(frontier, branch);

                // the update node exists before the body so `continue` can
                // target it directly
                let back_target = if update.is_empty() {
                    branch
                } else {
                    let span = Span::new(
                        update.first().unwrap().span().start,
                        update.last().unwrap().span().end,
                    );
                    let mut defs = BTreeSet::new();
                    let mut uses = BTreeSet::new();
                    let mut exprs: Vec<&Expr> = Vec::new();
                    for u in update {
                        let (d, us) = stmt_defs_uses(u);
                        defs.extend(d);
                        uses.extend(us);
                        exprs.push(u);
                    }
                    let node = self.stmt_node(span, defs, uses, &exprs);
                    self.edge(node, branch, None);
                    node
                };
                self.loop_stack.push(LoopCtx {
                    break_exits: Vec::new(),
                    continue_target: Some(back_target),
                });
                let body_out = self.build_stmt(body, vec![(branch, Some(EdgeLabel::True))]);
                self.connect(body_out, back_target);
                let ctx = self.loop_stack.pop().unwrap();
                let mut out = vec![(branch, Some(EdgeLabel::False))];
                out.extend(ctx.break_exits);
                out
            }
            Stmt::ForEach { var_name, iterable, header_span, body, .. } => {
                let mut iter_uses = BTreeSet::new();
                expr_uses(iterable, &mut iter_uses);
                let mut defs = BTreeSet::new();
                defs.insert(var_name.clone());
                let header =
                    self.stmt_node(*header_span, defs, iter_uses.clone(), &[iterable]);
                self.connect(frontier, header);
                let branch = self.branch_node(*header_span, iter_uses);
                self.edge(header, branch, None);
                self.loop_stack.push(LoopCtx {
                    break_exits: Vec::new(),
                    continue_target: Some(branch),
                });
                let body_out = self.build_stmt(body, vec![(branch, Some(EdgeLabel::True))]);
                self.connect(body_out, branch);
                let ctx = self.loop_stack.pop().unwrap();
                let mut out = vec![(branch, Some(EdgeLabel::False))];
                out.extend(ctx.break_exits);
                out
            }
            Stmt::Switch { scrutinee, scrutinee_span, cases, .. } => {
                let mut scrut_uses = BTreeSet::new();
                expr_uses(scrutinee, &mut scrut_uses);
                // desugar to an if-chain; `break` exits the switch
                self.loop_stack.push(LoopCtx { break_exits: Vec::new(), continue_target: None });
                let mut out: Frontier = Vec::new();
                let mut chain = frontier;
                let mut default_case: Option<&crate::frontend::model::SwitchCase> = None;
                let mut case_idx = 0usize;
                for case in cases {
                    match &case.label {
                        None => default_case = Some(case),
                        Some(label) => {
                            let mut uses = scrut_uses.clone();
                            expr_uses(label, &mut uses);
                            let span =
                                Span::new(scrutinee_span.start, label.span().end.max(scrutinee_span.end));
                            let branch = self.branch_node(span, uses);
                            self.connect(chain, branch);
                            let body_out = self.build_stmts(
                                &case.body,
                                vec![(branch, Some(EdgeLabel::Case(case_idx)))],
                            );
                            out.extend(body_out);
                            chain = vec![(branch, Some(EdgeLabel::False))];
                            case_idx += 1;
                        }
                    }
                }
                match default_case {
                    Some(case) => {
                        let body_out = self.build_stmts(&case.body, chain);
                        out.extend(body_out);
                    }
                    None => out.extend(chain),
                }
                let ctx = self.loop_stack.pop().unwrap();
                out.extend(ctx.break_exits);
                out
            }
            Stmt::Try { body, catches, finally, .. } => {
                // first node of the try region carries the exception edges
                let before = self.nodes.len();
                let body_out = self.build_stmts(&body.stmts, frontier.clone());
                let try_entry =
                    if self.nodes.len() > before { Some(NodeId(before)) } else { None };
                let mut out = if self.nodes.len() > before {
                    body_out
                } else {
                    frontier // empty try body
                };
                for catch in catches {
                    let mut defs = BTreeSet::new();
                    defs.insert(catch.param_name.clone());
                    let header_span = Span::new(
                        catch.span.start,
                        catch.body.span.start.max(catch.span.start),
                    );
                    self.catch_depth += 1;
                    let header = self.stmt_node(header_span, defs, BTreeSet::new(), &[]);
                    if let Some(te) = try_entry {
                        self.edge(te, header, Some(EdgeLabel::Exception));
                    }
                    let catch_out =
                        self.build_stmts(&catch.body.stmts, vec![(header, None)]);
                    self.catch_depth -= 1;
                    out.extend(catch_out);
                }
                if let Some(f) = finally {
                    out = self.build_stmts(&f.stmts, out);
                }
                out
            }
            Stmt::Break { span } => {
                let node = self.stmt_node(*span, BTreeSet::new(), BTreeSet::new(), &[]);
                self.connect(frontier, node);
                if let Some(ctx) = self.loop_stack.last_mut() {
                    ctx.break_exits.push((node, None));
                } else {
                    self.edge(node, EXIT, None);
                }
                Vec::new()
            }
            Stmt::Continue { span } => {
                let node = self.stmt_node(*span, BTreeSet::new(), BTreeSet::new(), &[]);
                self.connect(frontier, node);
                let target = self
                    .loop_stack
                    .iter()
                    .rev()
                    .find_map(|ctx| ctx.continue_target);
                match target {
                    Some(t) => self.edge(node, t, None),
                    None => self.edge(node, EXIT, None),
                }
                Vec::new()
            }
            Stmt::Raw { span } => {
                let node = self.stmt_node(*span, BTreeSet::new(), BTreeSet::new(), &[]);
                self.connect(frontier, node);
                vec![(node, None)]
            }
        }
    }
}

/// Drop nodes unreachable from entry (code after return, dead branches of
/// raw recovery) and remap ids.
fn prune_unreachable(cfg: &mut ControlFlowGraph) {
    let n = cfg.nodes.len();
    let mut reachable = vec![false; n];
    let mut stack = vec![cfg.entry];
    reachable[cfg.entry.0] = true;
    while let Some(cur) = stack.pop() {
        for e in cfg.edges.iter().filter(|e| e.from == cur) {
            if !reachable[e.to.0] {
                reachable[e.to.0] = true;
                stack.push(e.to);
            }
        }
    }
    // exit stays even if unreachable so the graph shape is stable
    reachable[cfg.exit.0] = true;
    if reachable.iter().all(|r| *r) {
        return;
    }
    let mut remap = vec![usize::MAX; n];
    let mut kept = Vec::new();
    for (i, node) in cfg.nodes.drain(..).enumerate() {
        if reachable[i] {
            remap[i] = kept.len();
            kept.push(node);
        }
    }
    cfg.nodes = kept;
    cfg.edges.retain(|e| remap[e.from.0] != usize::MAX && remap[e.to.0] != usize::MAX);
    for e in &mut cfg.edges {
        e.from = NodeId(remap[e.from.0]);
        e.to = NodeId(remap[e.to.0]);
    }
    cfg.entry = NodeId(remap[cfg.entry.0]);
    cfg.exit = NodeId(remap[cfg.exit.0]);
    cfg.in_catch = cfg
        .in_catch
        .iter()
        .filter(|id| remap[id.0] != usize::MAX)
        .map(|id| NodeId(remap[id.0]))
        .collect();
}

// ---------------------------------------------------------------------------
// def/use extraction
// ---------------------------------------------------------------------------

/// Variables read by an expression: every simple name in a use position.
pub fn expr_uses(expr: &Expr, uses: &mut BTreeSet<String>) {
    match expr {
        Expr::Name { name, .. } => {
            uses.insert(name.clone());
        }
        Expr::Assign { target, op, value, .. } => {
            // simple `=` does not read its target name; compound ops do
            if op != "=" {
                expr_uses(target, uses);
            } else {
                write_target_reads(target, uses);
            }
            expr_uses(value, uses);
        }
        Expr::Unary { op, operand, .. } if op == "++" || op == "--" => {
            expr_uses(operand, uses);
        }
        Expr::FieldAccess { target, .. } => expr_uses(target, uses),
        Expr::MethodCall { receiver, args, .. } => {
            if let Some(r) = receiver {
                expr_uses(r, uses);
            }
            for a in args {
                expr_uses(a, uses);
            }
        }
        Expr::New { args, .. } | Expr::ArrayInit { elements: args, .. } => {
            for a in args {
                expr_uses(a, uses);
            }
        }
        Expr::Unary { operand, .. } => expr_uses(operand, uses),
        Expr::Binary { lhs, rhs, .. } => {
            expr_uses(lhs, uses);
            expr_uses(rhs, uses);
        }
        Expr::InstanceOf { value, .. } | Expr::Cast { value, .. } => expr_uses(value, uses),
        Expr::Index { target, index, .. } => {
            expr_uses(target, uses);
            expr_uses(index, uses);
        }
        Expr::Ternary { cond, then_value, else_value, .. } => {
            expr_uses(cond, uses);
            expr_uses(then_value, uses);
            expr_uses(else_value, uses);
        }
        Expr::Literal { .. } | Expr::This { .. } | Expr::Raw { .. } => {}
    }
}

/// Names read when writing through a target: `a[i] = x` reads `a` and `i`,
/// `o.f = x` reads `o`; a bare `x = ...` reads nothing.
fn write_target_reads(target: &Expr, uses: &mut BTreeSet<String>) {
    match target {
        Expr::Name { .. } => {}
        Expr::Index { target, index, .. } => {
            expr_uses(target, uses);
            expr_uses(index, uses);
        }
        Expr::FieldAccess { target, .. } => expr_uses(target, uses),
        other => expr_uses(other, uses),
    }
}

/// Names defined by writing through a target.
fn write_target_defs(target: &Expr, defs: &mut BTreeSet<String>) {
    match target {
        Expr::Name { name, .. } => {
            defs.insert(name.clone());
        }
        // array element store: weak update of the base variable
        Expr::Index { target, .. } => write_target_defs(target, defs),
        // `this.f = x` defines field f in the local frame
        Expr::FieldAccess { target, name, .. } => {
            if matches!(target.as_ref(), Expr::This { .. }) {
                defs.insert(name.clone());
            }
        }
        _ => {}
    }
}

/// Defs and uses of a full expression statement.
pub fn stmt_defs_uses(expr: &Expr) -> (BTreeSet<String>, BTreeSet<String>) {
    let mut defs = BTreeSet::new();
    let mut uses = BTreeSet::new();
    collect_defs(expr, &mut defs);
    expr_uses(expr, &mut uses);
    (defs, uses)
}

fn collect_defs(expr: &Expr, defs: &mut BTreeSet<String>) {
    expr.walk(&mut |e| match e {
        Expr::Assign { target, .. } => write_target_defs(target, defs),
        Expr::Unary { op, operand, .. } if op == "++" || op == "--" => {
            write_target_defs(operand, defs)
        }
        _ => {}
    });
}
