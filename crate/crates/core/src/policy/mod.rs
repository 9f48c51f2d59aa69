//! Access trees with threshold gates.
//!
//! Interior nodes are k-of-n gates (k = 1 is OR, k = n is AND), leaves are
//! attribute labels. Nodes are identified by their preorder position, which
//! is also the order in which leaves are laid out in tokens and ciphertexts.

mod encode;
mod parse;
mod shares;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

pub use parse::parse_policy;
pub use shares::{assign_shares, lagrange_coeff, ShareAssignment};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PolicyError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("threshold {threshold} out of range for {children} children")]
    ThresholdOutOfRange { threshold: usize, children: usize },
    #[error("gate has no children")]
    EmptyGate,
    #[error("invalid attribute label {0:?}")]
    InvalidLabel(String),
    #[error("index {index} not in interpolation set")]
    IndexNotInSet { index: u64 },
    #[error("malformed policy encoding: {0}")]
    Malformed(&'static str),
}

impl PolicyError {
    pub fn code(&self) -> &'static str {
        match self {
            PolicyError::Syntax { .. } => "syntax-error",
            PolicyError::ThresholdOutOfRange { .. } => "threshold-out-of-range",
            PolicyError::EmptyGate => "empty-gate",
            PolicyError::InvalidLabel(_) => "invalid-label",
            PolicyError::IndexNotInSet { .. } => "invalid-input",
            PolicyError::Malformed(_) => "malformed-encoding",
        }
    }
}

fn is_label_char(c: char) -> bool {
    !c.is_whitespace() && !matches!(c, '(' | ')' | ',' | ';' | '/')
}

/// An attribute, canonically rendered `authority/name`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AttributeLabel {
    authority: String,
    name: String,
}

impl AttributeLabel {
    pub fn new(authority: impl Into<String>, name: impl Into<String>) -> Result<Self, PolicyError> {
        let (authority, name) = (authority.into(), name.into());
        if authority.is_empty() || name.is_empty() || !authority.chars().all(is_label_char) || !name.chars().all(is_label_char) {
            return Err(PolicyError::InvalidLabel(format!("{authority}/{name}")));
        }
        Ok(AttributeLabel { authority, name })
    }

    pub fn authority(&self) -> &str {
        &self.authority
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Bytes fed to the attribute hash.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        self.to_string().into_bytes()
    }
}

impl fmt::Display for AttributeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.authority, self.name)
    }
}

impl FromStr for AttributeLabel {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once('/') {
            Some((authority, name)) => AttributeLabel::new(authority, name),
            None => Err(PolicyError::InvalidLabel(s.to_string())),
        }
    }
}

/// How a gate's children recombine into the gate's own share.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateKind {
    /// Shamir sharing with a degree `k - 1` polynomial; Lagrange recombination.
    Threshold,
    /// n-of-n additive sharing; every child coefficient is 1. Only produced by
    /// [`AccessTree::compose`] when two independently shared subtrees are
    /// joined, so that the root secret is the sum of the subtree secrets.
    Additive,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gate {
    threshold: usize,
    kind: GateKind,
    children: Vec<Node>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Leaf(AttributeLabel),
    Gate(Gate),
}

impl Gate {
    pub fn new(threshold: usize, children: Vec<Node>) -> Result<Self, PolicyError> {
        if children.is_empty() {
            return Err(PolicyError::EmptyGate);
        }
        if threshold == 0 || threshold > children.len() {
            return Err(PolicyError::ThresholdOutOfRange {
                threshold,
                children: children.len(),
            });
        }
        Ok(Gate {
            threshold,
            kind: GateKind::Threshold,
            children,
        })
    }

    fn additive(children: Vec<Node>) -> Self {
        Gate {
            threshold: children.len(),
            kind: GateKind::Additive,
            children,
        }
    }

    pub fn threshold(&self) -> usize {
        self.threshold
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn children(&self) -> &[Node] {
        &self.children
    }

    /// Picks `k` successful children, lowest indices first. Indices are
    /// 1-based. `None` when fewer than `k` children succeeded.
    pub fn select_satisfying_children<T>(&self, child_results: &[Option<T>]) -> Option<Vec<u64>> {
        let chosen: Vec<u64> = child_results
            .iter()
            .enumerate()
            .filter(|(_, r)| r.is_some())
            .map(|(i, _)| i as u64 + 1)
            .take(self.threshold)
            .collect();
        (chosen.len() == self.threshold).then_some(chosen)
    }

    /// Coefficients that recombine the shares of `chosen` children into this
    /// gate's share.
    pub fn recombination_coefficients<S: crate::group::ScalarField>(&self, chosen: &[u64]) -> Vec<S> {
        match self.kind {
            GateKind::Additive => vec![S::one(); chosen.len()],
            GateKind::Threshold => chosen
                .iter()
                .map(|&i| lagrange_coeff(i, chosen).expect("chosen index is in the chosen set"))
                .collect(),
        }
    }
}

impl Node {
    pub fn leaf(label: AttributeLabel) -> Node {
        Node::Leaf(label)
    }

    pub fn threshold(k: usize, children: Vec<Node>) -> Result<Node, PolicyError> {
        Gate::new(k, children).map(Node::Gate)
    }

    pub fn and(children: Vec<Node>) -> Result<Node, PolicyError> {
        Node::threshold(children.len(), children)
    }

    pub fn or(children: Vec<Node>) -> Result<Node, PolicyError> {
        Node::threshold(1, children)
    }

    /// `k_x`; 1 for leaves.
    pub fn k(&self) -> usize {
        match self {
            Node::Leaf(_) => 1,
            Node::Gate(g) => g.threshold,
        }
    }

    fn size(&self) -> usize {
        match self {
            Node::Leaf(_) => 1,
            Node::Gate(g) => 1 + g.children.iter().map(Node::size).sum::<usize>(),
        }
    }

    fn depth(&self) -> usize {
        match self {
            Node::Leaf(_) => 1,
            Node::Gate(g) => 1 + g.children.iter().map(Node::depth).max().unwrap_or(0),
        }
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a AttributeLabel>) {
        match self {
            Node::Leaf(l) => out.push(l),
            Node::Gate(g) => g.children.iter().for_each(|c| c.collect_leaves(out)),
        }
    }

    fn satisfied_by(&self, has: &dyn Fn(&AttributeLabel) -> bool) -> bool {
        match self {
            Node::Leaf(l) => has(l),
            Node::Gate(g) => g.children.iter().filter(|c| c.satisfied_by(has)).count() >= g.threshold,
        }
    }
}

/// A validated access tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessTree {
    root: Node,
}

impl AccessTree {
    /// Every gate in `root` was validated on construction.
    pub fn new(root: Node) -> Self {
        AccessTree { root }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// Joins two independently shared subtrees under an additive AND root:
    /// the composed secret is the sum of the subtree secrets.
    pub fn compose(first: &AccessTree, second: &AccessTree) -> AccessTree {
        AccessTree {
            root: Node::Gate(Gate::additive(vec![first.root.clone(), second.root.clone()])),
        }
    }

    pub fn node_count(&self) -> usize {
        self.root.size()
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    /// Leaves in preorder.
    pub fn leaves(&self) -> Vec<&AttributeLabel> {
        let mut out = Vec::new();
        self.root.collect_leaves(&mut out);
        out
    }

    /// Issuers whose attributes appear anywhere in the tree.
    pub fn authorities(&self) -> BTreeSet<String> {
        self.leaves().into_iter().map(|l| l.authority().to_string()).collect()
    }

    /// `T_R(attrs)`: a leaf holds iff its attribute is present, a gate holds
    /// iff at least `k` of its children hold.
    pub fn satisfies(&self, attrs: &BTreeSet<AttributeLabel>) -> bool {
        self.satisfied_by(|l| attrs.contains(l))
    }

    pub fn satisfied_by(&self, has: impl Fn(&AttributeLabel) -> bool) -> bool {
        self.root.satisfied_by(&has)
    }

    /// Nodes in preorder, paired with the index of the first leaf at or below
    /// each node.
    pub fn preorder(&self) -> Vec<(&Node, usize)> {
        fn walk<'a>(n: &'a Node, leaf: &mut usize, out: &mut Vec<(&'a Node, usize)>) {
            out.push((n, *leaf));
            match n {
                Node::Leaf(_) => *leaf += 1,
                Node::Gate(g) => g.children.iter().for_each(|c| walk(c, leaf, out)),
            }
        }
        let mut out = Vec::with_capacity(self.node_count());
        walk(&self.root, &mut 0, &mut out);
        out
    }
}

impl FromStr for AccessTree {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_policy(s)
    }
}

fn render(n: &Node, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let join = |g: &Gate, sep: &str, f: &mut fmt::Formatter<'_>| -> fmt::Result {
        for (i, c) in g.children.iter().enumerate() {
            if i > 0 {
                f.write_str(sep)?;
            }
            render(c, f)?;
        }
        Ok(())
    };
    match n {
        Node::Leaf(l) => write!(f, "{l}"),
        Node::Gate(g) => {
            let n = g.children.len();
            if n >= 2 && g.threshold == n {
                f.write_str("(")?;
                join(g, " AND ", f)?;
                f.write_str(")")
            } else if n >= 2 && g.threshold == 1 {
                f.write_str("(")?;
                join(g, " OR ", f)?;
                f.write_str(")")
            } else {
                write!(f, "THRESHOLD({}; ", g.threshold)?;
                join(g, ", ", f)?;
                f.write_str(")")
            }
        }
    }
}

/// Canonical policy string. Composed (additive) roots render as AND, which
/// is their satisfaction semantics.
impl fmt::Display for AccessTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        render(&self.root, f)
    }
}
