use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use super::{DsModel, NodeId, NodeStats, SplitRule, Task};

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    MissingRoot(NodeId),
    RootHasParents(NodeId),
    DanglingChild { node: NodeId, child: NodeId },
    DanglingParent { node: NodeId, parent: NodeId },
    ParentMissingEdge { parent: NodeId, child: NodeId },
    ChildMissingParent { parent: NodeId, child: NodeId },
    Orphan(NodeId),
    Cycle,
    Unreachable(NodeId),
    RuleWithoutChildren(NodeId),
    ChildrenWithoutRule(NodeId),
    TerminalWithRule(NodeId),
    ArityMismatch { node: NodeId, rule: usize, children: usize },
    MalformedRule { node: NodeId, reason: String },
    StatsMismatch(NodeId),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            MissingRoot(id) => write!(f, "root {id} not in node map"),
            RootHasParents(id) => write!(f, "root {id} has parents"),
            DanglingChild { node, child } => write!(f, "node {node} references missing child {child}"),
            DanglingParent { node, parent } => write!(f, "node {node} references missing parent {parent}"),
            ParentMissingEdge { parent, child } => {
                write!(f, "node {child} lists parent {parent} but {parent} has no edge to it")
            }
            ChildMissingParent { parent, child } => {
                write!(
                    f,
                    "edge {parent} -> {child} but {child} does not list {parent} as parent"
                )
            }
            Orphan(id) => write!(f, "non-root node {id} has no parents"),
            Cycle => write!(f, "graph contains a cycle"),
            Unreachable(id) => write!(f, "node {id} unreachable from root"),
            RuleWithoutChildren(id) => write!(f, "node {id} has a rule but no children"),
            ChildrenWithoutRule(id) => write!(f, "node {id} has children but no rule"),
            TerminalWithRule(id) => write!(f, "terminal node {id} carries a rule"),
            ArityMismatch { node, rule, children } => {
                write!(f, "node {node}: rule arity {rule} but {children} children")
            }
            MalformedRule { node, reason } => write!(f, "node {node}: {reason}"),
            StatsMismatch(id) => write!(f, "node {id}: statistics do not match the model task"),
        }
    }
}

/// Topological order of all nodes (Kahn, FIFO from the root first), or
/// `None` if the graph has a cycle.
pub(crate) fn topological_order(model: &DsModel) -> Option<Vec<NodeId>> {
    let mut indegree: BTreeMap<NodeId, usize> = model.nodes.keys().map(|&k| (k, 0)).collect();
    for node in model.nodes.values() {
        for c in distinct(&node.children) {
            if let Some(d) = indegree.get_mut(&c) {
                *d += 1;
            }
        }
    }
    let mut queue: VecDeque<NodeId> = VecDeque::new();
    if indegree.get(&model.root) == Some(&0) {
        queue.push_back(model.root);
    }
    queue.extend(
        indegree
            .iter()
            .filter(|(&k, &d)| d == 0 && k != model.root)
            .map(|(&k, _)| k),
    );
    let mut order = Vec::with_capacity(model.nodes.len());
    while let Some(id) = queue.pop_front() {
        order.push(id);
        for c in distinct(&model.nodes[&id].children) {
            if let Some(d) = indegree.get_mut(&c) {
                *d -= 1;
                if *d == 0 {
                    queue.push_back(c);
                }
            }
        }
    }
    (order.len() == model.nodes.len()).then_some(order)
}

/// Children in order with repeats removed.
pub(crate) fn distinct(children: &[NodeId]) -> Vec<NodeId> {
    let mut seen = BTreeSet::new();
    children.iter().copied().filter(|c| seen.insert(*c)).collect()
}

fn check_rule(id: NodeId, rule: &SplitRule, num_features: usize, out: &mut Vec<Violation>) {
    let bad = |reason: &str| Violation::MalformedRule {
        node: id,
        reason: reason.to_string(),
    };
    if rule.feature() >= num_features {
        out.push(bad("rule references a feature outside the schema"));
    }
    match rule {
        SplitRule::Threshold { value, .. } if !value.is_finite() => out.push(bad("non-finite threshold")),
        SplitRule::CategoryMap { map, .. } => {
            if map.windows(2).any(|w| w[0].0 >= w[1].0) {
                out.push(bad("category map codes not strictly increasing"));
            }
            let used: BTreeSet<usize> = map.iter().map(|&(_, o)| o).collect();
            if used.len() != rule.arity() {
                out.push(bad("category map ordinals are not contiguous"));
            }
        }
        SplitRule::RangePartition {
            boundaries, targets, ..
        } => {
            if boundaries.windows(2).any(|w| w[0] >= w[1]) || boundaries.iter().any(|b| !b.is_finite()) {
                out.push(bad("range boundaries not strictly increasing"));
            }
            if targets.len() != boundaries.len() + 1 {
                out.push(bad("range partition needs one target per interval"));
            }
            let used: BTreeSet<usize> = targets.iter().copied().collect();
            if used.len() != rule.arity() {
                out.push(bad("range targets are not contiguous"));
            }
            if rule.arity() < 2 {
                out.push(bad("range partition routes to fewer than 2 children"));
            }
        }
        _ => {}
    }
}

/// Checks every structural invariant of a model; an empty list means valid.
pub fn validate_dag(model: &DsModel) -> Vec<Violation> {
    let mut out = Vec::new();
    match model.nodes.get(&model.root) {
        None => out.push(Violation::MissingRoot(model.root)),
        Some(r) if !r.parents.is_empty() => out.push(Violation::RootHasParents(model.root)),
        _ => {}
    }
    for node in model.nodes.values() {
        for &c in &node.children {
            match model.nodes.get(&c) {
                None => out.push(Violation::DanglingChild {
                    node: node.id,
                    child: c,
                }),
                Some(child) if !child.parents.contains(&node.id) => out.push(Violation::ChildMissingParent {
                    parent: node.id,
                    child: c,
                }),
                _ => {}
            }
        }
        for &p in &node.parents {
            match model.nodes.get(&p) {
                None => out.push(Violation::DanglingParent {
                    node: node.id,
                    parent: p,
                }),
                Some(parent) if !parent.children.contains(&node.id) => out.push(Violation::ParentMissingEdge {
                    parent: p,
                    child: node.id,
                }),
                _ => {}
            }
        }
        if node.id != model.root && node.parents.is_empty() {
            out.push(Violation::Orphan(node.id));
        }
        match (&node.rule, node.children.is_empty()) {
            (Some(_), true) => out.push(Violation::RuleWithoutChildren(node.id)),
            (None, false) => out.push(Violation::ChildrenWithoutRule(node.id)),
            (Some(rule), false) => {
                if rule.arity() != node.children.len() {
                    out.push(Violation::ArityMismatch {
                        node: node.id,
                        rule: rule.arity(),
                        children: node.children.len(),
                    });
                }
                check_rule(node.id, rule, model.num_features, &mut out);
            }
            (None, true) => {}
        }
        if node.terminal && node.rule.is_some() {
            out.push(Violation::TerminalWithRule(node.id));
        }
        let stats_ok = match (&node.stats, model.task) {
            (NodeStats::Class { histogram }, Task::Classification { num_classes }) => histogram.len() == num_classes,
            (NodeStats::Real { m2, .. }, Task::Regression) => *m2 >= 0.0,
            _ => false,
        };
        if !stats_ok {
            out.push(Violation::StatsMismatch(node.id));
        }
    }
    if topological_order(model).is_none() {
        out.push(Violation::Cycle);
    }
    if model.nodes.contains_key(&model.root) {
        let mut seen = BTreeSet::from([model.root]);
        let mut stack = vec![model.root];
        while let Some(id) = stack.pop() {
            for c in &model.nodes[&id].children {
                if model.nodes.contains_key(c) && seen.insert(*c) {
                    stack.push(*c);
                }
            }
        }
        out.extend(
            model
                .nodes
                .keys()
                .filter(|k| !seen.contains(k))
                .map(|&k| Violation::Unreachable(k)),
        );
    }
    out
}
