//! Reduced-AST representation: the pre-order sequence of non-terminal node
//! kinds, dropping every leaf. This compresses a tree to its structural
//! skeleton while keeping the hierarchy readable top-down.

use crate::parser::{is_nonterminal, Node, NodeKind, SyntaxTree};

/// Pre-order sequence of non-terminal kinds extracted from one tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReducedAstSequence {
    kinds: Vec<NodeKind>,
    origin: String,
}

impl ReducedAstSequence {
    pub fn kinds(&self) -> &[NodeKind] {
        &self.kinds
    }

    pub fn origin(&self) -> &str {
        &self.origin
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    /// Whitespace-joined kind names, the serialization used in pre-training
    /// sequences and for inspection.
    pub fn to_text(&self) -> String {
        self.kinds
            .iter()
            .map(NodeKind::name)
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Collects the kinds of all nodes with at least one child, in pre-order
/// (parent first, children left to right).
pub fn extract_nonterminals(tree: &SyntaxTree, origin: impl Into<String>) -> ReducedAstSequence {
    let mut kinds = Vec::new();
    let mut stack: Vec<&Node> = vec![tree.root()];
    while let Some(node) = stack.pop() {
        if is_nonterminal(node) {
            kinds.push(node.kind().clone());
        }
        stack.extend(node.children().iter().rev());
    }
    ReducedAstSequence {
        kinds,
        origin: origin.into(),
    }
}

/// Fraction of nodes that are non-terminal: |non-terminals| / |all nodes|.
pub fn reduction_ratio(tree: &SyntaxTree) -> f64 {
    let mut total = 0usize;
    let mut nonterminal = 0usize;
    for node in tree.root().preorder() {
        total += 1;
        if is_nonterminal(node) {
            nonterminal += 1;
        }
    }
    nonterminal as f64 / total as f64
}
