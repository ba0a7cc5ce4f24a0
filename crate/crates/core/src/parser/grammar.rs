//! Recursive-descent grammar over the token stream.
//!
//! Every path either consumes tokens into typed nodes or falls back to
//! [`Parser::recover`], which collects the offending tokens into an
//! `ErrorNode`. The parser therefore always produces a tree covering the
//! whole token stream.

use super::kind::NodeKind;
use super::lexer::{Token, TokenKind};
use super::Node;

type PResult = Result<Node, ()>;

const BUILTIN_TYPE_KEYWORDS: &[&str] = &[
    "void", "bool", "char", "short", "int", "long", "float", "double", "signed", "unsigned",
];
const QUALIFIER_KEYWORDS: &[&str] = &["const", "static", "extern", "inline", "volatile"];
const ASSIGN_OPS: &[&str] = &["=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>="];
const MEMBER_OPS: &[&str] = &[".", "->", "::"];

/// Binary operator precedence levels, loosest first.
const BINARY_LEVELS: &[&[&str]] = &[
    &["||"],
    &["&&"],
    &["|"],
    &["^"],
    &["&"],
    &["==", "!="],
    &["<", ">", "<=", ">="],
    &["<<", ">>"],
    &["+", "-"],
    &["*", "/", "%"],
];

pub(super) fn parse_tokens(tokens: Vec<Token>) -> Node {
    let mut parser = Parser { tokens, pos: 0 };
    parser.translation_unit()
}

/// How the head of a declaration spelled its type.
enum TypeShape {
    /// Builtin keywords (`unsigned long`, `int`, ...).
    Builtin(Vec<Node>),
    /// Tagged or named record reference (`struct S`, `MyType`).
    Record(Vec<Node>),
}

/// Leading qualifiers, the type spelling, and trailing qualifiers of a
/// declaration, kept as flat leaves so callers decide whether the type
/// becomes a node (variable-like declarations) or stays as plain leaves
/// (function signatures).
struct DeclHead {
    leading: Vec<Node>,
    shape: TypeShape,
    trailing: Vec<Node>,
    is_const: bool,
}

impl DeclHead {
    /// Leaves only; used for function signatures.
    fn into_leaves(self) -> Vec<Node> {
        let mut out = self.leading;
        match self.shape {
            TypeShape::Builtin(leaves) | TypeShape::Record(leaves) => out.extend(leaves),
        }
        out.extend(self.trailing);
        out
    }

    /// Qualifier leaves plus a `BuiltinType`/`RecordType` node.
    fn into_typed(self) -> Vec<Node> {
        let mut out = self.leading;
        match self.shape {
            TypeShape::Builtin(leaves) => out.push(Node::internal(NodeKind::BuiltinType, leaves)),
            TypeShape::Record(leaves) => out.push(Node::internal(NodeKind::RecordType, leaves)),
        }
        out.extend(self.trailing);
        out
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    // ------------------------------------------------------------------
    // Token helpers
    // ------------------------------------------------------------------

    fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_at(&self, offset: usize) -> Option<&Token> {
        self.tokens.get(self.pos + offset)
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(t) if t.kind == TokenKind::Keyword && t.text == kw)
    }

    fn at_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Some(t) if t.kind == TokenKind::Punct && t.text == p)
    }

    fn at_op(&self, op: &str) -> bool {
        matches!(self.peek(), Some(t) if t.kind == TokenKind::Operator && t.text == op)
    }

    fn at_op_in(&self, ops: &[&str]) -> bool {
        matches!(self.peek(), Some(t) if t.kind == TokenKind::Operator
            && ops.iter().any(|op| t.text == *op))
    }

    fn bump(&mut self) -> Node {
        let token = self.tokens[self.pos].clone();
        self.pos += 1;
        leaf_for(&token)
    }

    fn expect_punct(&mut self, p: &str) -> PResult {
        if self.at_punct(p) {
            Ok(self.bump())
        } else {
            Err(())
        }
    }

    fn expect_op(&mut self, op: &str) -> PResult {
        if self.at_op(op) {
            Ok(self.bump())
        } else {
            Err(())
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> PResult {
        if self.at_keyword(kw) {
            Ok(self.bump())
        } else {
            Err(())
        }
    }

    fn expect_identifier(&mut self) -> PResult {
        if matches!(self.peek(), Some(t) if t.kind == TokenKind::Identifier) {
            Ok(self.bump())
        } else {
            Err(())
        }
    }

    // ------------------------------------------------------------------
    // Top level
    // ------------------------------------------------------------------

    fn translation_unit(&mut self) -> Node {
        let mut children = Vec::new();
        while !self.at_end() {
            children.push(self.top_level());
        }
        Node::internal(NodeKind::TranslationUnit, children)
    }

    fn top_level(&mut self) -> Node {
        let start = self.pos;
        match self.try_top_level() {
            Ok(node) => node,
            Err(()) => {
                self.pos = start;
                self.recover(false)
            }
        }
    }

    fn statement(&mut self) -> Node {
        let start = self.pos;
        match self.try_statement() {
            Ok(node) => node,
            Err(()) => {
                self.pos = start;
                self.recover(true)
            }
        }
    }

    fn try_top_level(&mut self) -> PResult {
        if self.at_keyword("namespace") {
            return self.namespace_decl();
        }
        if self.at_keyword("typedef") {
            return self.typedef_decl();
        }
        if self.at_record_definition() {
            return self.record_decl();
        }
        if self.at_enum_definition() {
            return self.enum_decl();
        }
        self.function_or_variable()
    }

    /// `struct`/`class`/`union` followed by a name and `{` starts a record
    /// definition; without the brace it is a type reference inside an
    /// ordinary declaration.
    fn at_record_definition(&self) -> bool {
        let tag = matches!(self.peek(), Some(t) if t.kind == TokenKind::Keyword
            && matches!(t.text.as_str(), "struct" | "class" | "union"));
        tag && matches!(self.peek_at(1), Some(t) if t.kind == TokenKind::Identifier)
            && matches!(self.peek_at(2), Some(t) if t.text == "{")
    }

    fn at_enum_definition(&self) -> bool {
        if !self.at_keyword("enum") {
            return false;
        }
        match self.peek_at(1) {
            Some(t) if t.text == "{" => true,
            Some(t) if t.kind == TokenKind::Identifier => {
                matches!(self.peek_at(2), Some(t) if t.text == "{")
            }
            _ => false,
        }
    }

    fn namespace_decl(&mut self) -> PResult {
        let mut children = vec![self.expect_keyword("namespace")?];
        children.push(self.expect_identifier()?);
        children.push(self.expect_punct("{")?);
        while !self.at_end() && !self.at_punct("}") {
            children.push(self.top_level());
        }
        children.push(self.expect_punct("}")?);
        Ok(Node::internal(NodeKind::PackageDeclaration, children))
    }

    fn typedef_decl(&mut self) -> PResult {
        let mut children = vec![self.expect_keyword("typedef")?];
        let head = self.decl_head(true)?;
        children.extend(head.into_typed());
        if let Some(stars) = self.pointer_stars() {
            children.push(stars);
        }
        children.push(self.expect_identifier()?);
        while self.at_punct("[") {
            children.push(self.array_suffix()?);
        }
        children.push(self.expect_punct(";")?);
        Ok(Node::internal(NodeKind::TypeDeclaration, children))
    }

    fn record_decl(&mut self) -> PResult {
        let tag = self.bump();
        let name = self.expect_identifier()?;
        let record_name = name.text().unwrap_or_default().to_string();
        let mut children = vec![tag, name, self.expect_punct("{")?];
        while !self.at_end() && !self.at_punct("}") {
            let start = self.pos;
            match self.record_member(&record_name) {
                Ok(member) => children.push(member),
                Err(()) => {
                    self.pos = start;
                    children.push(self.recover(true));
                }
            }
        }
        children.push(self.expect_punct("}")?);
        if self.at_punct(";") {
            children.push(self.bump());
        }
        Ok(Node::internal(NodeKind::ClassDeclaration, children))
    }

    fn record_member(&mut self, record_name: &str) -> PResult {
        // Constructor: member whose name repeats the record name.
        if matches!(self.peek(), Some(t) if t.kind == TokenKind::Identifier && t.text == record_name)
            && matches!(self.peek_at(1), Some(t) if t.text == "(")
        {
            let mut children = vec![self.bump(), self.expect_punct("(")?];
            self.parameter_list(&mut children)?;
            children.push(self.expect_punct(")")?);
            if self.at_punct("{") {
                children.push(self.block()?);
            } else {
                children.push(self.expect_punct(";")?);
            }
            return Ok(Node::internal(NodeKind::ConstructorDeclaration, children));
        }

        let head = self.decl_head(true)?;
        let mut stars = Vec::new();
        while self.at_op("*") {
            stars.push(self.bump());
        }
        let name = self.expect_identifier()?;

        if self.at_punct("(") {
            // Member function: signature leaves plus optional body.
            let mut children = head.into_leaves();
            children.extend(stars);
            children.push(name);
            children.push(self.bump());
            self.parameter_list(&mut children)?;
            children.push(self.expect_punct(")")?);
            if self.at_punct("{") {
                children.push(self.block()?);
            } else {
                children.push(self.expect_punct(";")?);
            }
            Ok(Node::internal(NodeKind::MethodDeclaration, children))
        } else {
            let mut children = head.into_typed();
            children.push(self.var_declarator_from(stars, name)?);
            while self.at_punct(",") {
                children.push(self.bump());
                children.push(self.var_declarator()?);
            }
            children.push(self.expect_punct(";")?);
            Ok(Node::internal(NodeKind::FieldDeclaration, children))
        }
    }

    fn enum_decl(&mut self) -> PResult {
        let mut children = vec![self.expect_keyword("enum")?];
        if matches!(self.peek(), Some(t) if t.kind == TokenKind::Identifier) {
            children.push(self.bump());
        }
        children.push(self.expect_punct("{")?);
        while !self.at_end() && !self.at_punct("}") {
            children.push(self.enumerator()?);
            if self.at_punct(",") {
                children.push(self.bump());
            } else {
                break;
            }
        }
        children.push(self.expect_punct("}")?);
        if self.at_punct(";") {
            children.push(self.bump());
        }
        Ok(Node::internal(NodeKind::EnumDeclaration, children))
    }

    fn enumerator(&mut self) -> PResult {
        let mut children = vec![self.expect_identifier()?];
        if self.at_op("=") {
            children.push(self.bump());
            children.push(self.assignment_expr()?);
        }
        Ok(Node::internal(NodeKind::EnumConstantDeclaration, children))
    }

    /// Shared path for file-scope declarations: after the head and the first
    /// declarator name, `(` selects the function form.
    fn function_or_variable(&mut self) -> PResult {
        if !self.at_declaration_start(true) {
            return Err(());
        }
        let head = self.decl_head(true)?;
        let mut stars = Vec::new();
        while self.at_op("*") {
            stars.push(self.bump());
        }
        let name = self.expect_identifier()?;

        if self.at_punct("(") {
            let mut children = head.into_leaves();
            children.extend(stars);
            children.push(name);
            children.push(self.bump());
            self.parameter_list(&mut children)?;
            children.push(self.expect_punct(")")?);
            let signature = Node::internal(NodeKind::MethodDeclaration, children);
            if self.at_punct("{") {
                let body = self.block()?;
                Ok(Node::internal(
                    NodeKind::FunctionDefinition,
                    vec![signature, body],
                ))
            } else if self.at_punct(";") {
                let mut children = match signature {
                    Node { children, .. } => children,
                };
                children.push(self.bump());
                Ok(Node::internal(NodeKind::MethodDeclaration, children))
            } else {
                Err(())
            }
        } else {
            let kind = if head.is_const {
                NodeKind::ConstantDeclaration
            } else {
                NodeKind::VariableDeclaration
            };
            self.finish_variable_declaration(head, stars, name, kind)
        }
    }

    fn finish_variable_declaration(
        &mut self,
        head: DeclHead,
        stars: Vec<Node>,
        name: Node,
        kind: NodeKind,
    ) -> PResult {
        let mut children = head.into_typed();
        children.push(self.var_declarator_from(stars, name)?);
        while self.at_punct(",") {
            children.push(self.bump());
            children.push(self.var_declarator()?);
        }
        children.push(self.expect_punct(";")?);
        Ok(Node::internal(kind, children))
    }

    // ------------------------------------------------------------------
    // Declaration heads and declarators
    // ------------------------------------------------------------------

    /// Parses qualifiers and the type spelling. With `allow_bare_ident`, a
    /// lone identifier is accepted as a named type reference; callers gate
    /// this with [`Parser::at_declaration_start`] where the grammar would
    /// otherwise be ambiguous.
    fn decl_head(&mut self, allow_bare_ident: bool) -> Result<DeclHead, ()> {
        let mut leading = Vec::new();
        let mut is_const = false;
        while matches!(self.peek(), Some(t) if t.kind == TokenKind::Keyword
            && QUALIFIER_KEYWORDS.contains(&t.text.as_str()))
        {
            if self.at_keyword("const") {
                is_const = true;
            }
            leading.push(self.bump());
        }

        let shape = if matches!(self.peek(), Some(t) if t.kind == TokenKind::Keyword
            && BUILTIN_TYPE_KEYWORDS.contains(&t.text.as_str()))
        {
            let mut leaves = Vec::new();
            while matches!(self.peek(), Some(t) if t.kind == TokenKind::Keyword
                && BUILTIN_TYPE_KEYWORDS.contains(&t.text.as_str()))
            {
                leaves.push(self.bump());
            }
            TypeShape::Builtin(leaves)
        } else if matches!(self.peek(), Some(t) if t.kind == TokenKind::Keyword
            && matches!(t.text.as_str(), "struct" | "class" | "union" | "enum"))
        {
            let tag = self.bump();
            let name = self.expect_identifier()?;
            TypeShape::Record(vec![tag, name])
        } else if allow_bare_ident
            && matches!(self.peek(), Some(t) if t.kind == TokenKind::Identifier)
        {
            TypeShape::Record(vec![self.bump()])
        } else {
            return Err(());
        };

        let mut trailing = Vec::new();
        while self.at_keyword("const") || self.at_keyword("volatile") {
            is_const |= self.at_keyword("const");
            trailing.push(self.bump());
        }

        Ok(DeclHead {
            leading,
            shape,
            trailing,
            is_const,
        })
    }

    fn pointer_stars(&mut self) -> Option<Node> {
        let mut stars = Vec::new();
        while self.at_op("*") {
            stars.push(self.bump());
        }
        if stars.is_empty() {
            None
        } else {
            Some(Node::internal(NodeKind::PointerType, stars))
        }
    }

    fn var_declarator(&mut self) -> PResult {
        let mut stars = Vec::new();
        while self.at_op("*") {
            stars.push(self.bump());
        }
        let name = self.expect_identifier()?;
        self.var_declarator_from(stars, name)
    }

    fn var_declarator_from(&mut self, stars: Vec<Node>, name: Node) -> PResult {
        let mut children = Vec::new();
        if !stars.is_empty() {
            children.push(Node::internal(NodeKind::PointerType, stars));
        }
        children.push(name);
        while self.at_punct("[") {
            children.push(self.array_suffix()?);
        }
        if self.at_op("=") {
            children.push(self.bump());
            if self.at_punct("{") {
                children.push(self.initializer_list()?);
            } else {
                children.push(self.assignment_expr()?);
            }
        }
        Ok(Node::internal(NodeKind::VariableDeclarator, children))
    }

    fn array_suffix(&mut self) -> PResult {
        let mut children = vec![self.expect_punct("[")?];
        if !self.at_punct("]") {
            children.push(self.expression()?);
        }
        children.push(self.expect_punct("]")?);
        Ok(Node::internal(NodeKind::ConstantArrayType, children))
    }

    fn initializer_list(&mut self) -> PResult {
        let mut children = vec![self.expect_punct("{")?];
        while !self.at_end() && !self.at_punct("}") {
            if self.at_punct("{") {
                children.push(self.initializer_list()?);
            } else {
                children.push(self.assignment_expr()?);
            }
            if self.at_punct(",") {
                children.push(self.bump());
            } else {
                break;
            }
        }
        children.push(self.expect_punct("}")?);
        Ok(Node::internal(NodeKind::InitializerList, children))
    }

    fn parameter_list(&mut self, children: &mut Vec<Node>) -> Result<(), ()> {
        if self.at_punct(")") {
            return Ok(());
        }
        children.push(self.parameter()?);
        while self.at_punct(",") {
            children.push(self.bump());
            children.push(self.parameter()?);
        }
        Ok(())
    }

    fn parameter(&mut self) -> PResult {
        if self.at_op("...") {
            return Ok(Node::internal(NodeKind::Parameter, vec![self.bump()]));
        }
        let head = self.decl_head(true)?;
        let mut children = head.into_typed();
        if let Some(stars) = self.pointer_stars() {
            children.push(stars);
        }
        if matches!(self.peek(), Some(t) if t.kind == TokenKind::Identifier) {
            children.push(self.bump());
        }
        while self.at_punct("[") {
            children.push(self.array_suffix()?);
        }
        Ok(Node::internal(NodeKind::Parameter, children))
    }

    // ------------------------------------------------------------------
    // Statements
    // ------------------------------------------------------------------

    fn block(&mut self) -> PResult {
        let mut children = vec![self.expect_punct("{")?];
        while !self.at_end() && !self.at_punct("}") {
            children.push(self.statement());
        }
        children.push(self.expect_punct("}")?);
        Ok(Node::internal(NodeKind::BlockStatement, children))
    }

    fn try_statement(&mut self) -> PResult {
        if let Some(token) = self.peek() {
            if token.kind == TokenKind::Keyword {
                match token.text.as_str() {
                    "if" => return self.if_statement(),
                    "while" => return self.while_statement(),
                    "do" => return self.do_statement(),
                    "for" => return self.for_statement(),
                    "switch" => return self.switch_statement(),
                    "return" => return self.return_statement(),
                    "break" => return self.jump_statement(NodeKind::BreakStatement, "break"),
                    "continue" => {
                        return self.jump_statement(NodeKind::ContinueStatement, "continue")
                    }
                    "throw" => return self.throw_statement(),
                    "try" => return self.try_statement_node(),
                    "assert" => return self.assert_statement(),
                    _ => {}
                }
            }
        }
        if self.at_punct("{") {
            return self.block();
        }
        if self.at_punct(";") {
            return Ok(self.bump());
        }
        if self.at_declaration_start(false) {
            return self.local_declaration();
        }
        self.expression_statement()
    }

    /// Declaration detection inside blocks. Type keywords always start a
    /// declaration. A bare identifier starts one only for the shapes
    /// `T name ...` and `T * name ...` followed by `;`, `=`, `,` or `[` —
    /// so `a * b;` is read as a declaration of `b`, never a product.
    fn at_declaration_start(&self, top_level: bool) -> bool {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Keyword => {
                BUILTIN_TYPE_KEYWORDS.contains(&t.text.as_str())
                    || QUALIFIER_KEYWORDS.contains(&t.text.as_str())
                    || matches!(t.text.as_str(), "struct" | "class" | "union" | "enum")
            }
            Some(t) if t.kind == TokenKind::Identifier => {
                let mut offset = 1;
                while matches!(self.peek_at(offset), Some(t) if t.text == "*") {
                    offset += 1;
                }
                // At top level a plain identifier pair can also open a
                // function definition: `T f(...)`.
                match (self.peek_at(offset), self.peek_at(offset + 1)) {
                    (Some(name), Some(next)) if name.kind == TokenKind::Identifier => {
                        matches!(next.text.as_str(), ";" | "=" | "," | "[")
                            || (top_level && next.text == "(")
                    }
                    _ => false,
                }
            }
            _ => false,
        }
    }

    fn local_declaration(&mut self) -> PResult {
        let head = self.decl_head(true)?;
        let mut stars = Vec::new();
        while self.at_op("*") {
            stars.push(self.bump());
        }
        let name = self.expect_identifier()?;
        let kind = if head.is_const {
            NodeKind::ConstantDeclaration
        } else {
            NodeKind::LocalVariableDeclaration
        };
        self.finish_variable_declaration(head, stars, name, kind)
    }

    fn expression_statement(&mut self) -> PResult {
        let expr = self.expression()?;
        let semi = self.expect_punct(";")?;
        Ok(Node::internal(
            NodeKind::StatementExpression,
            vec![expr, semi],
        ))
    }

    fn if_statement(&mut self) -> PResult {
        let mut children = vec![self.expect_keyword("if")?, self.expect_punct("(")?];
        children.push(self.expression()?);
        children.push(self.expect_punct(")")?);
        children.push(self.statement());
        if self.at_keyword("else") {
            children.push(self.bump());
            children.push(self.statement());
        }
        Ok(Node::internal(NodeKind::IfStatement, children))
    }

    fn while_statement(&mut self) -> PResult {
        let mut children = vec![self.expect_keyword("while")?, self.expect_punct("(")?];
        children.push(self.expression()?);
        children.push(self.expect_punct(")")?);
        children.push(self.statement());
        Ok(Node::internal(NodeKind::WhileStatement, children))
    }

    fn do_statement(&mut self) -> PResult {
        let mut children = vec![self.expect_keyword("do")?];
        children.push(self.statement());
        children.push(self.expect_keyword("while")?);
        children.push(self.expect_punct("(")?);
        children.push(self.expression()?);
        children.push(self.expect_punct(")")?);
        children.push(self.expect_punct(";")?);
        Ok(Node::internal(NodeKind::DoStatement, children))
    }

    fn for_statement(&mut self) -> PResult {
        let mut children = vec![self.expect_keyword("for")?, self.expect_punct("(")?];
        if self.at_declaration_start(false) {
            children.push(self.local_declaration()?);
        } else {
            if !self.at_punct(";") {
                children.push(self.expression()?);
            }
            children.push(self.expect_punct(";")?);
        }
        if !self.at_punct(";") {
            children.push(self.expression()?);
        }
        children.push(self.expect_punct(";")?);
        if !self.at_punct(")") {
            children.push(self.expression()?);
        }
        children.push(self.expect_punct(")")?);
        children.push(self.statement());
        Ok(Node::internal(NodeKind::ForStatement, children))
    }

    fn switch_statement(&mut self) -> PResult {
        let mut children = vec![self.expect_keyword("switch")?, self.expect_punct("(")?];
        children.push(self.expression()?);
        children.push(self.expect_punct(")")?);
        children.push(self.expect_punct("{")?);
        while self.at_keyword("case") || self.at_keyword("default") {
            children.push(self.switch_case()?);
        }
        children.push(self.expect_punct("}")?);
        Ok(Node::internal(NodeKind::SwitchStatement, children))
    }

    fn switch_case(&mut self) -> PResult {
        let mut children = Vec::new();
        if self.at_keyword("case") {
            children.push(self.bump());
            children.push(self.expression()?);
        } else {
            children.push(self.expect_keyword("default")?);
        }
        children.push(self.expect_op(":")?);
        while !self.at_end()
            && !self.at_punct("}")
            && !self.at_keyword("case")
            && !self.at_keyword("default")
        {
            children.push(self.statement());
        }
        Ok(Node::internal(NodeKind::SwitchCase, children))
    }

    fn return_statement(&mut self) -> PResult {
        let mut children = vec![self.expect_keyword("return")?];
        if !self.at_punct(";") {
            children.push(self.expression()?);
        }
        children.push(self.expect_punct(";")?);
        Ok(Node::internal(NodeKind::ReturnStatement, children))
    }

    fn jump_statement(&mut self, kind: NodeKind, kw: &str) -> PResult {
        let children = vec![self.expect_keyword(kw)?, self.expect_punct(";")?];
        Ok(Node::internal(kind, children))
    }

    fn throw_statement(&mut self) -> PResult {
        let mut children = vec![self.expect_keyword("throw")?];
        if !self.at_punct(";") {
            children.push(self.expression()?);
        }
        children.push(self.expect_punct(";")?);
        Ok(Node::internal(NodeKind::ThrowStatement, children))
    }

    fn try_statement_node(&mut self) -> PResult {
        let mut children = vec![self.expect_keyword("try")?, self.block()?];
        children.push(self.catch_clause()?);
        while self.at_keyword("catch") {
            children.push(self.catch_clause()?);
        }
        Ok(Node::internal(NodeKind::TryStatement, children))
    }

    fn catch_clause(&mut self) -> PResult {
        let mut children = vec![self.expect_keyword("catch")?, self.expect_punct("(")?];
        if self.at_op("...") {
            children.push(self.bump());
        } else {
            children.push(self.parameter()?);
        }
        children.push(self.expect_punct(")")?);
        children.push(self.block()?);
        Ok(Node::internal(NodeKind::CatchClause, children))
    }

    fn assert_statement(&mut self) -> PResult {
        let mut children = vec![self.expect_keyword("assert")?, self.expect_punct("(")?];
        children.push(self.expression()?);
        while self.at_punct(",") {
            children.push(self.bump());
            children.push(self.expression()?);
        }
        children.push(self.expect_punct(")")?);
        children.push(self.expect_punct(";")?);
        Ok(Node::internal(NodeKind::AssertStatement, children))
    }

    // ------------------------------------------------------------------
    // Expressions
    // ------------------------------------------------------------------

    fn expression(&mut self) -> PResult {
        self.assignment_expr()
    }

    fn assignment_expr(&mut self) -> PResult {
        let lhs = self.ternary_expr()?;
        if self.at_op_in(ASSIGN_OPS) {
            let op = self.bump();
            let rhs = self.assignment_expr()?;
            return Ok(Node::internal(
                NodeKind::BinaryOperation,
                vec![lhs, op, rhs],
            ));
        }
        Ok(lhs)
    }

    fn ternary_expr(&mut self) -> PResult {
        let cond = self.binary_expr(0)?;
        if self.at_op("?") {
            let question = self.bump();
            let then_expr = self.expression()?;
            let colon = self.expect_op(":")?;
            let else_expr = self.assignment_expr()?;
            return Ok(Node::internal(
                NodeKind::TernaryExpression,
                vec![cond, question, then_expr, colon, else_expr],
            ));
        }
        Ok(cond)
    }

    fn binary_expr(&mut self, level: usize) -> PResult {
        if level >= BINARY_LEVELS.len() {
            return self.unary_expr();
        }
        let mut lhs = self.binary_expr(level + 1)?;
        while self.at_op_in(BINARY_LEVELS[level]) {
            let op = self.bump();
            let rhs = self.binary_expr(level + 1)?;
            lhs = Node::internal(NodeKind::BinaryOperation, vec![lhs, op, rhs]);
        }
        Ok(lhs)
    }

    fn unary_expr(&mut self) -> PResult {
        if self.at_op_in(&["+", "-", "!", "~", "*", "&", "++", "--"]) {
            let op = self.bump();
            let operand = self.unary_expr()?;
            return Ok(Node::internal(NodeKind::UnaryOperation, vec![op, operand]));
        }
        self.postfix_expr()
    }

    fn postfix_expr(&mut self) -> PResult {
        let mut expr = self.primary_expr()?;
        loop {
            if self.at_punct("(") {
                let mut children = vec![expr, self.bump()];
                if !self.at_punct(")") {
                    children.push(self.assignment_expr()?);
                    while self.at_punct(",") {
                        children.push(self.bump());
                        children.push(self.assignment_expr()?);
                    }
                }
                children.push(self.expect_punct(")")?);
                expr = Node::internal(NodeKind::MethodInvocation, children);
            } else if self.at_punct("[") {
                let children = vec![
                    expr,
                    self.bump(),
                    self.expression()?,
                    self.expect_punct("]")?,
                ];
                expr = Node::internal(NodeKind::ArrayAccess, children);
            } else if self.at_op_in(MEMBER_OPS) {
                let op = self.bump();
                let member = self.expect_identifier()?;
                expr = Node::internal(NodeKind::BinaryOperation, vec![expr, op, member]);
            } else if self.at_op("++") || self.at_op("--") {
                let op = self.bump();
                expr = Node::internal(NodeKind::UnaryOperation, vec![expr, op]);
            } else {
                break;
            }
        }
        Ok(expr)
    }

    fn primary_expr(&mut self) -> PResult {
        match self.peek() {
            Some(t)
                if matches!(
                    t.kind,
                    TokenKind::Identifier
                        | TokenKind::Integer
                        | TokenKind::Float
                        | TokenKind::Char
                        | TokenKind::Str
                ) =>
            {
                Ok(self.bump())
            }
            Some(t)
                if t.kind == TokenKind::Keyword && matches!(t.text.as_str(), "true" | "false") =>
            {
                Ok(self.bump())
            }
            Some(t) if t.text == "(" => {
                let children = vec![self.bump(), self.expression()?, self.expect_punct(")")?];
                Ok(Node::internal(NodeKind::ParenExpression, children))
            }
            _ => Err(()),
        }
    }

    // ------------------------------------------------------------------
    // Recovery
    // ------------------------------------------------------------------

    /// Collects tokens into an `ErrorNode` until a statement boundary. With
    /// `stop_at_close_brace` the sweep never consumes the `}` closing the
    /// enclosing block. Balanced `{...}` runs are swallowed whole so a broken
    /// construct with a body becomes a single error subtree.
    fn recover(&mut self, stop_at_close_brace: bool) -> Node {
        let mut leaves = Vec::new();
        let mut depth = 0usize;
        while let Some(token) = self.peek() {
            if depth == 0 && stop_at_close_brace && token.text == "}" {
                break;
            }
            let text = token.text.clone();
            leaves.push(self.bump());
            match text.as_str() {
                "{" => depth += 1,
                "}" => {
                    depth = depth.saturating_sub(1);
                    if depth == 0 {
                        if self.at_punct(";") {
                            leaves.push(self.bump());
                        }
                        break;
                    }
                }
                ";" if depth == 0 => break,
                _ => {}
            }
        }
        if leaves.is_empty() && !self.at_end() {
            // Recovery only starts on a token that is not a closing brace,
            // so this keeps the loop progressing even if that changes.
            leaves.push(self.bump());
        }
        Node::internal(NodeKind::ErrorNode, leaves)
    }
}

fn leaf_for(token: &Token) -> Node {
    let kind = match token.kind {
        TokenKind::Identifier => NodeKind::Identifier,
        TokenKind::Keyword => NodeKind::Keyword,
        TokenKind::Integer => NodeKind::IntegerLiteral,
        TokenKind::Float => NodeKind::FloatingLiteral,
        TokenKind::Char => NodeKind::CharacterLiteral,
        TokenKind::Str => NodeKind::StringLiteral,
        TokenKind::Operator => NodeKind::Operator,
        TokenKind::Punct => NodeKind::Punctuation,
    };
    Node::leaf(kind, token.text.clone(), token.span)
}
