//! Error-tolerant parser for a C-like language subset.
//!
//! The parser produces full-fidelity syntax trees: every token of the input
//! appears as a leaf, in order, so concatenating leaf texts reproduces the
//! token stream. Regions the grammar cannot interpret are wrapped in
//! `ErrorNode` subtrees instead of aborting the parse. Trees produced by
//! external frontends can be ingested through the tree-exchange format (see
//! [`import_tree`]), which maps unknown kind names to structural nodes.
//!
//! The grammar and the construct-to-kind mapping are documented in
//! `docs/grammar.md`.

mod exchange;
mod grammar;
mod kind;
mod lexer;

pub use exchange::{export_tree, import_tree, ExchangeError};
pub use kind::{KindCategory, NodeKind};
pub use lexer::{lex, Token, TokenKind};

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("empty input: nothing to parse")]
    EmptyInput,
    #[error("no recognizable function in input")]
    NoFunction,
}

/// One node of a syntax tree. Leaves carry text; internal nodes carry
/// children. Exactly one of the two is ever present.
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    kind: NodeKind,
    span: (usize, usize),
    children: Vec<Node>,
    text: Option<String>,
}

impl Node {
    pub(crate) fn leaf(kind: NodeKind, text: impl Into<String>, span: (usize, usize)) -> Node {
        Node {
            kind,
            span,
            children: Vec::new(),
            text: Some(text.into()),
        }
    }

    /// Builds an internal node spanning its children. `children` must be
    /// non-empty; internal nodes without children cannot exist.
    pub(crate) fn internal(kind: NodeKind, children: Vec<Node>) -> Node {
        assert!(!children.is_empty(), "internal node requires children");
        let span = (
            children.first().unwrap().span.0,
            children.last().unwrap().span.1,
        );
        Node {
            kind,
            span,
            children,
            text: None,
        }
    }

    pub fn kind(&self) -> &NodeKind {
        &self.kind
    }

    /// Byte span `(start, end)` into the source this node covers.
    pub fn span(&self) -> (usize, usize) {
        self.span
    }

    pub fn children(&self) -> &[Node] {
        &self.children
    }

    /// Leaf text; `None` on internal nodes.
    pub fn text(&self) -> Option<&str> {
        self.text.as_deref()
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// Depth-first pre-order traversal (parent before children, left to
    /// right), implemented with an explicit stack.
    pub fn preorder(&self) -> Preorder<'_> {
        Preorder { stack: vec![self] }
    }

    /// Total number of nodes in this subtree, including `self`.
    pub fn count_nodes(&self) -> usize {
        self.preorder().count()
    }
}

pub struct Preorder<'a> {
    stack: Vec<&'a Node>,
}

impl<'a> Iterator for Preorder<'a> {
    type Item = &'a Node;

    fn next(&mut self) -> Option<&'a Node> {
        let node = self.stack.pop()?;
        self.stack.extend(node.children.iter().rev());
        Some(node)
    }
}

/// A parsed or imported syntax tree. `source` is present only for trees
/// produced by [`parse`].
#[derive(Debug, Clone, PartialEq)]
pub struct SyntaxTree {
    root: Node,
    source: Option<String>,
}

impl SyntaxTree {
    pub(crate) fn new(root: Node, source: Option<String>) -> SyntaxTree {
        SyntaxTree { root, source }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn source(&self) -> Option<&str> {
        self.source.as_deref()
    }
}

/// True iff the node has at least one child.
pub fn is_nonterminal(node: &Node) -> bool {
    !node.children().is_empty()
}

/// Parses one function (or a small translation unit) of the C-like subset.
///
/// Unparseable regions inside the input become `ErrorNode` subtrees. The
/// call fails only when the input is empty or contains no function at all.
pub fn parse(source: &str) -> Result<SyntaxTree, ParseError> {
    let tokens = lexer::lex(source);
    if tokens.is_empty() {
        return Err(ParseError::EmptyInput);
    }
    let mut root = grammar::parse_tokens(tokens);
    let has_function = root.preorder().any(|n| {
        matches!(
            n.kind(),
            NodeKind::FunctionDefinition
                | NodeKind::MethodDeclaration
                | NodeKind::ConstructorDeclaration
        )
    });
    if !has_function {
        return Err(ParseError::NoFunction);
    }
    // A single top-level function is rooted directly at its definition.
    if root.children.len() == 1 && root.children[0].kind == NodeKind::FunctionDefinition {
        root = root.children.pop().unwrap();
    }
    Ok(SyntaxTree::new(root, Some(source.to_string())))
}
