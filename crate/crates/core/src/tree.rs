//! The interview tree: nodes, branch rules, parsing, validation and traversal.
//!
//! A tree is a DAG of [`InterviewNode`]s. Each non-terminal node branches on a
//! conclusive judgment (`met` / `not_met`) to another node or to the
//! `TERMINAL` sentinel. Clarification loops on a node are session bookkeeping
//! and never appear as edges, so every walk terminates.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const TERMINAL: &str = "TERMINAL";

/// Case-sensitive node identifier as printed on the interview form ("a1a", "A2b", "N1a").
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

/// Disorder module a node belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModuleTag {
    Depression,
    GeneralizedAnxiety,
    SocialAnxiety,
    Suicide,
}

impl ModuleTag {
    pub const ALL: [ModuleTag; 4] = [
        ModuleTag::Depression,
        ModuleTag::Suicide,
        ModuleTag::GeneralizedAnxiety,
        ModuleTag::SocialAnxiety,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModuleTag::Depression => "depression",
            ModuleTag::GeneralizedAnxiety => "generalized_anxiety",
            ModuleTag::SocialAnxiety => "social_anxiety",
            ModuleTag::Suicide => "suicide",
        }
    }
}

impl fmt::Display for ModuleTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ModuleTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "depression" | "mdd" => Ok(ModuleTag::Depression),
            "generalized_anxiety" | "gad" => Ok(ModuleTag::GeneralizedAnxiety),
            "social_anxiety" | "sad" => Ok(ModuleTag::SocialAnxiety),
            "suicide" => Ok(ModuleTag::Suicide),
            other => Err(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Screening,
    Symptom,
    Gate,
    Terminal,
}

/// Three-way judgment tag. Only `Met` and `NotMet` drive transitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Met,
    NotMet,
    Ambiguous,
}

impl Verdict {
    pub fn is_conclusive(self) -> bool {
        !matches!(self, Verdict::Ambiguous)
    }
}

/// Branch destination: another node or the end of the interview.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Target {
    Node(NodeId),
    Terminal,
}

impl Target {
    pub fn node(&self) -> Option<&NodeId> {
        match self {
            Target::Node(id) => Some(id),
            Target::Terminal => None,
        }
    }
}

impl Serialize for Target {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Target::Node(id) => s.serialize_str(id.as_str()),
            Target::Terminal => s.serialize_str(TERMINAL),
        }
    }
}

impl<'de> Deserialize<'de> for Target {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(if s == TERMINAL {
            Target::Terminal
        } else {
            Target::Node(NodeId(s))
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Branches {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub met: Option<Target>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub not_met: Option<Target>,
}

impl Branches {
    pub fn get(&self, verdict: Verdict) -> Option<&Target> {
        match verdict {
            Verdict::Met => self.met.as_ref(),
            Verdict::NotMet => self.not_met.as_ref(),
            Verdict::Ambiguous => None,
        }
    }

    fn targets(&self) -> impl Iterator<Item = &Target> {
        self.met.iter().chain(self.not_met.iter())
    }

    pub fn is_empty(&self) -> bool {
        self.met.is_none() && self.not_met.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterviewNode {
    pub id: NodeId,
    pub module: ModuleTag,
    pub kind: NodeKind,
    /// 1-based criterion index into the module's diagnosis rule.
    pub criterion: Option<usize>,
    /// Interview-form wording; becomes option A of a forced choice.
    pub canonical: String,
    /// What the question must establish (the form's question text).
    pub hint: String,
    pub mandatory: bool,
    pub branches: Branches,
}

impl InterviewNode {
    pub fn is_terminal(&self) -> bool {
        self.kind == NodeKind::Terminal
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterviewTree {
    pub entry: NodeId,
    pub suicide_gate: Option<NodeId>,
    nodes: Vec<InterviewNode>,
    index: HashMap<NodeId, usize>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("malformed tree document at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("duplicate node id {0}")]
    DuplicateNodeId(NodeId),
    #[error("unknown reference {0}")]
    UnknownReference(String),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("ambiguous outcome cannot drive a transition")]
    AmbiguousOutcomeRejected,
    #[error("terminal node {0} has no branches")]
    TerminalHasNoBranches(NodeId),
    #[error("node {node} has no branch for {verdict:?}")]
    MissingBranch { node: NodeId, verdict: Verdict },
}

// Wire form. Field order is the serializer's key order.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TreeDoc {
    entry: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    suicide_gate: Option<String>,
    nodes: Vec<NodeDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDoc {
    id: String,
    module: ModuleTag,
    kind: NodeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    criterion: Option<usize>,
    canonical: String,
    hint: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mandatory: Option<bool>,
    #[serde(default, skip_serializing_if = "Branches::is_empty")]
    branches: Branches,
}

pub fn parse_tree(document: &str) -> Result<InterviewTree, TreeError> {
    let doc: TreeDoc = serde_json::from_str(document).map_err(|e| TreeError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;

    let mut nodes = Vec::with_capacity(doc.nodes.len());
    let mut index = HashMap::new();
    for raw in doc.nodes {
        let id = NodeId(raw.id);
        if index.insert(id.clone(), nodes.len()).is_some() {
            return Err(TreeError::DuplicateNodeId(id));
        }
        let mandatory = raw.mandatory.unwrap_or(raw.kind == NodeKind::Symptom);
        nodes.push(InterviewNode {
            id,
            module: raw.module,
            kind: raw.kind,
            criterion: raw.criterion,
            canonical: raw.canonical,
            hint: raw.hint,
            mandatory,
            branches: raw.branches,
        });
    }

    let known = |id: &str| index.contains_key(&NodeId(id.to_string()));
    if !known(&doc.entry) {
        return Err(TreeError::UnknownReference(doc.entry));
    }
    if let Some(gate) = &doc.suicide_gate {
        if !known(gate) {
            return Err(TreeError::UnknownReference(gate.clone()));
        }
    }
    for node in &nodes {
        for target in node.branches.targets() {
            if let Target::Node(id) = target {
                if !index.contains_key(id) {
                    return Err(TreeError::UnknownReference(id.0.clone()));
                }
            }
        }
    }

    Ok(InterviewTree {
        entry: NodeId(doc.entry),
        suicide_gate: doc.suicide_gate.map(NodeId),
        nodes,
        index,
    })
}

/// The tree shipped with the crate: depression, suicide gate, generalized
/// anxiety and social anxiety modules in that order.
pub fn bundled_tree() -> InterviewTree {
    parse_tree(BUNDLED_TREE).expect("bundled tree parses")
}

pub const BUNDLED_TREE: &str = include_str!("../data/mini_tree.json");

impl InterviewTree {
    pub fn node(&self, id: &NodeId) -> Option<&InterviewNode> {
        self.index.get(id).map(|&i| &self.nodes[i])
    }

    pub fn nodes(&self) -> &[InterviewNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn entry_node(&self) -> &InterviewNode {
        self.node(&self.entry).expect("entry resolved at parse time")
    }

    /// Modules in order of first appearance in the document.
    pub fn modules(&self) -> Vec<ModuleTag> {
        let mut seen = Vec::new();
        for n in &self.nodes {
            if !seen.contains(&n.module) {
                seen.push(n.module);
            }
        }
        seen
    }

    /// Nodes that carry a given criterion of a module.
    pub fn criterion_nodes(&self, module: ModuleTag, criterion: usize) -> Vec<&InterviewNode> {
        self.nodes
            .iter()
            .filter(|n| n.module == module && n.criterion == Some(criterion))
            .collect()
    }

    /// Deterministic serialization; keys appear in the documented order.
    pub fn to_document(&self) -> String {
        let doc = TreeDoc {
            entry: self.entry.0.clone(),
            suicide_gate: self.suicide_gate.as_ref().map(|g| g.0.clone()),
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeDoc {
                    id: n.id.0.clone(),
                    module: n.module,
                    kind: n.kind,
                    criterion: n.criterion,
                    canonical: n.canonical.clone(),
                    hint: n.hint.clone(),
                    mandatory: Some(n.mandatory),
                    branches: n.branches.clone(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("tree serializes")
    }

    /// Content digest used to tie session snapshots to the tree they ran on.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_document().as_bytes()))
    }

    /// Mutable access for building defect fixtures in tests and tools.
    pub fn node_mut(&mut self, id: &NodeId) -> Option<&mut InterviewNode> {
        self.index.get(id).map(|&i| &mut self.nodes[i])
    }

    pub fn push_node(&mut self, node: InterviewNode) -> Result<(), TreeError> {
        if self.index.contains_key(&node.id) {
            return Err(TreeError::DuplicateNodeId(node.id));
        }
        self.index.insert(node.id.clone(), self.nodes.len());
        self.nodes.push(node);
        Ok(())
    }
}

pub fn entry_node(tree: &InterviewTree) -> &InterviewNode {
    tree.entry_node()
}

/// Pure transition function.
pub fn next_node(
    tree: &InterviewTree,
    current: &NodeId,
    outcome: Verdict,
) -> Result<Target, TreeError> {
    let node = tree
        .node(current)
        .ok_or_else(|| TreeError::UnknownNode(current.clone()))?;
    if node.is_terminal() {
        return Err(TreeError::TerminalHasNoBranches(current.clone()));
    }
    if outcome == Verdict::Ambiguous {
        return Err(TreeError::AmbiguousOutcomeRejected);
    }
    node.branches
        .get(outcome)
        .cloned()
        .ok_or(TreeError::MissingBranch {
            node: current.clone(),
            verdict: outcome,
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    UnreachableNode,
    Cycle,
    MissingConclusiveBranch,
    TerminalHasBranches,
    MissingCriterion,
    SuicideRouteBroken,
    SkippableMandatoryNode,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub nodes: Vec<NodeId>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ids: Vec<&str> = self.nodes.iter().map(NodeId::as_str).collect();
        write!(f, "{:?} [{}]: {}", self.kind, ids.join(", "), self.detail)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn kinds(&self) -> BTreeSet<ViolationKind> {
        self.violations.iter().map(|v| v.kind).collect()
    }
}

/// Lists every violated structural invariant. Never fails.
///
/// A module counts as *entered* by a walk once the walk reaches one of the
/// module's symptom nodes; screening and gate nodes are its doorway. Mandatory
/// nodes of a module must lie on every entry-to-TERMINAL walk that enters it.
pub fn validate_tree(tree: &InterviewTree) -> ValidationReport {
    let mut violations = Vec::new();

    for node in &tree.nodes {
        if node.is_terminal() {
            if !node.branches.is_empty() {
                violations.push(Violation {
                    kind: ViolationKind::TerminalHasBranches,
                    nodes: vec![node.id.clone()],
                    detail: "terminal nodes take no branches".into(),
                });
            }
        } else {
            for (verdict, label) in [(Verdict::Met, "met"), (Verdict::NotMet, "not_met")] {
                if node.branches.get(verdict).is_none() {
                    violations.push(Violation {
                        kind: ViolationKind::MissingConclusiveBranch,
                        nodes: vec![node.id.clone()],
                        detail: format!("no {label} branch"),
                    });
                }
            }
        }
        let criterion_ok = match node.kind {
            NodeKind::Symptom => node.criterion.is_some(),
            NodeKind::Terminal => node.criterion.is_none(),
            _ => true,
        };
        if !criterion_ok {
            violations.push(Violation {
                kind: ViolationKind::MissingCriterion,
                nodes: vec![node.id.clone()],
                detail: if node.is_terminal() {
                    "terminal node carries a criterion".into()
                } else {
                    "symptom node lacks a criterion".into()
                },
            });
        }
    }

    // reachability
    let mut seen = HashSet::new();
    let mut queue = VecDeque::from([tree.entry.clone()]);
    while let Some(id) = queue.pop_front() {
        if !seen.insert(id.clone()) {
            continue;
        }
        if let Some(node) = tree.node(&id) {
            queue.extend(node.branches.targets().filter_map(|t| t.node().cloned()));
        }
    }
    for node in &tree.nodes {
        if !seen.contains(&node.id) {
            violations.push(Violation {
                kind: ViolationKind::UnreachableNode,
                nodes: vec![node.id.clone()],
                detail: format!("not reachable from entry {}", tree.entry),
            });
        }
    }

    violations.extend(find_cycles(tree));

    if let Some(gate_id) = &tree.suicide_gate {
        let gate = tree.node(gate_id).expect("gate resolved at parse time");
        let ok = match gate.branches.met.as_ref().and_then(Target::node) {
            Some(target) => tree
                .node(target)
                .is_some_and(|n| n.module == ModuleTag::Suicide && !n.is_terminal()),
            None => false,
        };
        if !ok {
            violations.push(Violation {
                kind: ViolationKind::SuicideRouteBroken,
                nodes: vec![gate_id.clone()],
                detail: "met branch of the suicide gate must lead into the suicide module".into(),
            });
        }
    }

    violations.extend(skippable_mandatory(tree));
    ValidationReport { violations }
}

fn find_cycles(tree: &InterviewTree) -> Vec<Violation> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Open,
        Done,
    }
    let mut marks = vec![Mark::New; tree.nodes.len()];
    let mut out = Vec::new();
    for root in 0..tree.nodes.len() {
        if marks[root] != Mark::New {
            continue;
        }
        // iterative DFS: (node index, next child position)
        let mut stack = vec![(root, 0usize)];
        marks[root] = Mark::Open;
        while let Some(&mut (at, ref mut child)) = stack.last_mut() {
            let targets: Vec<usize> = tree.nodes[at]
                .branches
                .targets()
                .filter_map(|t| t.node().and_then(|id| tree.index.get(id).copied()))
                .collect();
            if *child < targets.len() {
                let next = targets[*child];
                *child += 1;
                match marks[next] {
                    Mark::New => {
                        marks[next] = Mark::Open;
                        stack.push((next, 0));
                    }
                    Mark::Open => out.push(Violation {
                        kind: ViolationKind::Cycle,
                        nodes: vec![tree.nodes[at].id.clone(), tree.nodes[next].id.clone()],
                        detail: "back edge closes a cycle".into(),
                    }),
                    Mark::Done => {}
                }
            } else {
                marks[at] = Mark::Done;
                stack.pop();
            }
        }
    }
    out
}

fn skippable_mandatory(tree: &InterviewTree) -> Vec<Violation> {
    let mut out = Vec::new();
    for mandatory in tree.nodes.iter().filter(|n| n.mandatory) {
        let module = mandatory.module;
        let enters = |n: &InterviewNode| n.module == module && n.kind == NodeKind::Symptom;
        if tree.entry == mandatory.id {
            continue;
        }
        // search (node, entered) states while avoiding the mandatory node
        let mut seen = HashSet::new();
        let entry = tree.entry_node();
        let mut queue = VecDeque::from([(entry.id.clone(), enters(entry))]);
        let mut skipped = false;
        while let Some((id, entered)) = queue.pop_front() {
            if !seen.insert((id.clone(), entered)) {
                continue;
            }
            let node = tree.node(&id).expect("resolved");
            if node.is_terminal() {
                if entered {
                    skipped = true;
                    break;
                }
                continue;
            }
            for target in node.branches.targets() {
                match target {
                    Target::Terminal => {
                        if entered {
                            skipped = true;
                        }
                    }
                    Target::Node(next) if *next != mandatory.id => {
                        let n = tree.node(next).expect("resolved");
                        queue.push_back((next.clone(), entered || enters(n)));
                    }
                    Target::Node(_) => {}
                }
            }
            if skipped {
                break;
            }
        }
        if skipped {
            out.push(Violation {
                kind: ViolationKind::SkippableMandatoryNode,
                nodes: vec![mandatory.id.clone()],
                detail: format!("a walk through the {module} module can bypass it"),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "entry": "s1",
        "nodes": [
            {"id": "s1", "module": "depression", "kind": "screening", "canonical": "feeling low",
             "hint": "Have you felt low?", "branches": {"met": "end", "not_met": "end"}},
            {"id": "end", "module": "depression", "kind": "terminal", "canonical": "", "hint": ""}
        ]
    }"#;

    #[test]
    fn minimal_tree_parses() {
        let tree = parse_tree(MINIMAL).unwrap();
        assert_eq!(tree.len(), 2);
        assert_eq!(tree.entry, NodeId::from("s1"));
        assert_eq!(entry_node(&tree).kind, NodeKind::Screening);
        assert!(validate_tree(&tree).is_valid());
    }

    #[test]
    fn dangling_reference_is_reported() {
        let doc = MINIMAL.replace(r#""met": "end""#, r#""met": "zz9""#);
        assert_eq!(
            parse_tree(&doc),
            Err(TreeError::UnknownReference("zz9".into()))
        );
    }

    #[test]
    fn duplicate_ids_rejected() {
        let doc = MINIMAL.replace(r#""id": "end""#, r#""id": "s1""#);
        assert!(matches!(
            parse_tree(&doc),
            Err(TreeError::DuplicateNodeId(_))
        ));
    }

    #[test]
    fn unknown_keys_are_syntax_errors_with_position() {
        let doc = MINIMAL.replace(r#""kind": "terminal""#, r#""kind": "terminal", "colour": "red""#);
        match parse_tree(&doc) {
            Err(TreeError::Syntax { line, .. }) => assert_eq!(line, 6),
            other => panic!("expected syntax error, got {other:?}"),
        }
        assert!(matches!(
            parse_tree("{\"entry\": "),
            Err(TreeError::Syntax { .. })
        ));
    }

    #[test]
    fn mandatory_defaults_by_kind() {
        let tree = bundled_tree();
        let n = tree.node(&"A3a".into()).unwrap();
        assert!(n.mandatory);
        let doc = MINIMAL;
        let t = parse_tree(doc).unwrap();
        assert!(!t.node(&"s1".into()).unwrap().mandatory);
    }

    #[test]
    fn terminal_nodes_have_no_transitions() {
        let tree = parse_tree(MINIMAL).unwrap();
        assert_eq!(
            next_node(&tree, &"end".into(), Verdict::Met),
            Err(TreeError::TerminalHasNoBranches("end".into()))
        );
        assert_eq!(
            next_node(&tree, &"s1".into(), Verdict::Ambiguous),
            Err(TreeError::AmbiguousOutcomeRejected)
        );
        assert_eq!(
            next_node(&tree, &"nope".into(), Verdict::Met),
            Err(TreeError::UnknownNode("nope".into()))
        );
    }

    #[test]
    fn missing_not_met_branch_is_flagged() {
        let doc = MINIMAL.replace(r#", "not_met": "end""#, "");
        let tree = parse_tree(&doc).unwrap();
        let report = validate_tree(&tree);
        assert_eq!(
            report.kinds(),
            BTreeSet::from([ViolationKind::MissingConclusiveBranch])
        );
    }

    #[test]
    fn serializer_round_trips() {
        let tree = bundled_tree();
        let again = parse_tree(&tree.to_document()).unwrap();
        assert_eq!(tree, again);
        assert_eq!(tree.to_document(), again.to_document());
    }
}
