//! Canonical node-kind taxonomy shared by the parser, the tree-exchange
//! importer, and the feature extractor.

use std::fmt;

/// Broad role of a node kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KindCategory {
    Statement,
    Expression,
    Type,
    Declaration,
    Invocation,
    Structural,
    Terminal,
}

/// Canonical syntax-tree node kinds.
///
/// The statement/expression/type/declaration kinds form the fixed feature
/// universe used by stylometry extraction. Structural kinds glue trees
/// together but never contribute features; terminal kinds label leaf tokens
/// only. `Foreign` carries kind names that arrive through tree import and are
/// not part of the canonical set.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum NodeKind {
    // Statements
    IfStatement,
    WhileStatement,
    DoStatement,
    AssertStatement,
    SwitchStatement,
    ForStatement,
    ContinueStatement,
    ReturnStatement,
    ThrowStatement,
    SynchronizedStatement,
    TryStatement,
    BreakStatement,
    BlockStatement,
    BinaryOperation,
    CatchClause,
    // Expressions
    StatementExpression,
    TernaryExpression,
    LambdaExpression,
    // Types
    RecordType,
    BuiltinType,
    ConstantArrayType,
    PointerType,
    // Declarations
    TypeDeclaration,
    FieldDeclaration,
    MethodDeclaration,
    ConstructorDeclaration,
    PackageDeclaration,
    ClassDeclaration,
    EnumDeclaration,
    InterfaceDeclaration,
    AnnotationDeclaration,
    ConstantDeclaration,
    VariableDeclaration,
    LocalVariableDeclaration,
    EnumConstantDeclaration,
    VariableDeclarator,
    // Invocations
    MethodInvocation,
    // Structural
    TranslationUnit,
    FunctionDefinition,
    Parameter,
    SwitchCase,
    UnaryOperation,
    ParenExpression,
    ArrayAccess,
    InitializerList,
    ErrorNode,
    // Terminals
    Identifier,
    Keyword,
    IntegerLiteral,
    FloatingLiteral,
    CharacterLiteral,
    StringLiteral,
    Operator,
    Punctuation,
    /// Kind name imported from an external tree that is not canonical.
    Foreign(String),
}

impl NodeKind {
    /// Canonical display name of the kind.
    pub fn name(&self) -> &str {
        use NodeKind::*;
        match self {
            IfStatement => "IfStatement",
            WhileStatement => "WhileStatement",
            DoStatement => "DoStatement",
            AssertStatement => "AssertStatement",
            SwitchStatement => "SwitchStatement",
            ForStatement => "ForStatement",
            ContinueStatement => "ContinueStatement",
            ReturnStatement => "ReturnStatement",
            ThrowStatement => "ThrowStatement",
            SynchronizedStatement => "SynchronizedStatement",
            TryStatement => "TryStatement",
            BreakStatement => "BreakStatement",
            BlockStatement => "BlockStatement",
            BinaryOperation => "BinaryOperation",
            CatchClause => "CatchClause",
            StatementExpression => "StatementExpression",
            TernaryExpression => "TernaryExpression",
            LambdaExpression => "LambdaExpression",
            RecordType => "RecordType",
            BuiltinType => "BuiltinType",
            ConstantArrayType => "ConstantArrayType",
            PointerType => "PointerType",
            TypeDeclaration => "TypeDeclaration",
            FieldDeclaration => "FieldDeclaration",
            MethodDeclaration => "MethodDeclaration",
            ConstructorDeclaration => "ConstructorDeclaration",
            PackageDeclaration => "PackageDeclaration",
            ClassDeclaration => "ClassDeclaration",
            EnumDeclaration => "EnumDeclaration",
            InterfaceDeclaration => "InterfaceDeclaration",
            AnnotationDeclaration => "AnnotationDeclaration",
            ConstantDeclaration => "ConstantDeclaration",
            VariableDeclaration => "VariableDeclaration",
            LocalVariableDeclaration => "LocalVariableDeclaration",
            EnumConstantDeclaration => "EnumConstantDeclaration",
            VariableDeclarator => "VariableDeclarator",
            MethodInvocation => "MethodInvocation",
            TranslationUnit => "TranslationUnit",
            FunctionDefinition => "FunctionDefinition",
            Parameter => "Parameter",
            SwitchCase => "SwitchCase",
            UnaryOperation => "UnaryOperation",
            ParenExpression => "ParenExpression",
            ArrayAccess => "ArrayAccess",
            InitializerList => "InitializerList",
            ErrorNode => "ErrorNode",
            Identifier => "Identifier",
            Keyword => "Keyword",
            IntegerLiteral => "IntegerLiteral",
            FloatingLiteral => "FloatingLiteral",
            CharacterLiteral => "CharacterLiteral",
            StringLiteral => "StringLiteral",
            Operator => "Operator",
            Punctuation => "Punctuation",
            Foreign(name) => name,
        }
    }

    /// Look up a canonical kind by name. `CompoundStatement` is accepted as
    /// an alias for `BlockStatement` (the C spelling of the same construct).
    pub fn parse_name(name: &str) -> Option<NodeKind> {
        use NodeKind::*;
        let kind = match name {
            "IfStatement" => IfStatement,
            "WhileStatement" => WhileStatement,
            "DoStatement" => DoStatement,
            "AssertStatement" => AssertStatement,
            "SwitchStatement" => SwitchStatement,
            "ForStatement" => ForStatement,
            "ContinueStatement" => ContinueStatement,
            "ReturnStatement" => ReturnStatement,
            "ThrowStatement" => ThrowStatement,
            "SynchronizedStatement" => SynchronizedStatement,
            "TryStatement" => TryStatement,
            "BreakStatement" => BreakStatement,
            "BlockStatement" | "CompoundStatement" => BlockStatement,
            "BinaryOperation" => BinaryOperation,
            "CatchClause" => CatchClause,
            "StatementExpression" => StatementExpression,
            "TernaryExpression" => TernaryExpression,
            "LambdaExpression" => LambdaExpression,
            "RecordType" => RecordType,
            "BuiltinType" => BuiltinType,
            "ConstantArrayType" => ConstantArrayType,
            "PointerType" => PointerType,
            "TypeDeclaration" => TypeDeclaration,
            "FieldDeclaration" => FieldDeclaration,
            "MethodDeclaration" => MethodDeclaration,
            "ConstructorDeclaration" => ConstructorDeclaration,
            "PackageDeclaration" => PackageDeclaration,
            "ClassDeclaration" => ClassDeclaration,
            "EnumDeclaration" => EnumDeclaration,
            "InterfaceDeclaration" => InterfaceDeclaration,
            "AnnotationDeclaration" => AnnotationDeclaration,
            "ConstantDeclaration" => ConstantDeclaration,
            "VariableDeclaration" => VariableDeclaration,
            "LocalVariableDeclaration" => LocalVariableDeclaration,
            "EnumConstantDeclaration" => EnumConstantDeclaration,
            "VariableDeclarator" => VariableDeclarator,
            "MethodInvocation" => MethodInvocation,
            "TranslationUnit" => TranslationUnit,
            "FunctionDefinition" => FunctionDefinition,
            "Parameter" => Parameter,
            "SwitchCase" => SwitchCase,
            "UnaryOperation" => UnaryOperation,
            "ParenExpression" => ParenExpression,
            "ArrayAccess" => ArrayAccess,
            "InitializerList" => InitializerList,
            "ErrorNode" => ErrorNode,
            "Identifier" => Identifier,
            "Keyword" => Keyword,
            "IntegerLiteral" => IntegerLiteral,
            "FloatingLiteral" => FloatingLiteral,
            "CharacterLiteral" => CharacterLiteral,
            "StringLiteral" => StringLiteral,
            "Operator" => Operator,
            "Punctuation" => Punctuation,
            _ => return None,
        };
        Some(kind)
    }

    pub fn category(&self) -> KindCategory {
        use NodeKind::*;
        match self {
            IfStatement | WhileStatement | DoStatement | AssertStatement | SwitchStatement
            | ForStatement | ContinueStatement | ReturnStatement | ThrowStatement
            | SynchronizedStatement | TryStatement | BreakStatement | BlockStatement
            | BinaryOperation | CatchClause => KindCategory::Statement,
            StatementExpression | TernaryExpression | LambdaExpression => {
                KindCategory::Expression
            }
            RecordType | BuiltinType | ConstantArrayType | PointerType => KindCategory::Type,
            TypeDeclaration | FieldDeclaration | MethodDeclaration | ConstructorDeclaration
            | PackageDeclaration | ClassDeclaration | EnumDeclaration | InterfaceDeclaration
            | AnnotationDeclaration | ConstantDeclaration | VariableDeclaration
            | LocalVariableDeclaration | EnumConstantDeclaration | VariableDeclarator => {
                KindCategory::Declaration
            }
            MethodInvocation => KindCategory::Invocation,
            TranslationUnit | FunctionDefinition | Parameter | SwitchCase | UnaryOperation
            | ParenExpression | ArrayAccess | InitializerList | ErrorNode | Foreign(_) => {
                KindCategory::Structural
            }
            Identifier | Keyword | IntegerLiteral | FloatingLiteral | CharacterLiteral
            | StringLiteral | Operator | Punctuation => KindCategory::Terminal,
        }
    }

    /// True for kinds that only ever label leaf tokens.
    pub fn is_terminal(&self) -> bool {
        self.category() == KindCategory::Terminal
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip_for_canonical_kinds() {
        let kinds = [
            NodeKind::IfStatement,
            NodeKind::BlockStatement,
            NodeKind::MethodInvocation,
            NodeKind::VariableDeclarator,
            NodeKind::ErrorNode,
            NodeKind::Punctuation,
        ];
        for kind in kinds {
            assert_eq!(NodeKind::parse_name(kind.name()), Some(kind.clone()));
        }
    }

    #[test]
    fn compound_statement_is_an_alias_for_block_statement() {
        assert_eq!(
            NodeKind::parse_name("CompoundStatement"),
            Some(NodeKind::BlockStatement)
        );
    }

    #[test]
    fn unknown_names_are_not_canonical() {
        assert_eq!(NodeKind::parse_name("FancyStatement"), None);
    }

    #[test]
    fn terminal_category_matches_leaf_kinds() {
        assert!(NodeKind::Identifier.is_terminal());
        assert!(NodeKind::IntegerLiteral.is_terminal());
        assert!(!NodeKind::IfStatement.is_terminal());
        assert!(!NodeKind::Foreign("Thing".into()).is_terminal());
    }
}
