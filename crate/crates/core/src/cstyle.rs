//! Code stylometry (CStyle) features: counts of syntactic node kinds
//! (statements, expressions, types) and lexical node kinds (declarations,
//! invocations) over a fixed, ordered feature universe, so every vector has
//! identical dimensionality.

use crate::parser::{NodeKind, SyntaxTree};
use thiserror::Error;

/// The fixed feature universe, in canonical order: statement kinds,
/// expression kinds, type kinds, declaration kinds, then invocation.
pub const FEATURE_UNIVERSE: [NodeKind; 37] = [
    NodeKind::IfStatement,
    NodeKind::WhileStatement,
    NodeKind::DoStatement,
    NodeKind::AssertStatement,
    NodeKind::SwitchStatement,
    NodeKind::ForStatement,
    NodeKind::ContinueStatement,
    NodeKind::ReturnStatement,
    NodeKind::ThrowStatement,
    NodeKind::SynchronizedStatement,
    NodeKind::TryStatement,
    NodeKind::BreakStatement,
    NodeKind::BlockStatement,
    NodeKind::BinaryOperation,
    NodeKind::CatchClause,
    NodeKind::StatementExpression,
    NodeKind::TernaryExpression,
    NodeKind::LambdaExpression,
    NodeKind::RecordType,
    NodeKind::BuiltinType,
    NodeKind::ConstantArrayType,
    NodeKind::PointerType,
    NodeKind::TypeDeclaration,
    NodeKind::FieldDeclaration,
    NodeKind::MethodDeclaration,
    NodeKind::ConstructorDeclaration,
    NodeKind::PackageDeclaration,
    NodeKind::ClassDeclaration,
    NodeKind::EnumDeclaration,
    NodeKind::InterfaceDeclaration,
    NodeKind::AnnotationDeclaration,
    NodeKind::ConstantDeclaration,
    NodeKind::VariableDeclaration,
    NodeKind::LocalVariableDeclaration,
    NodeKind::EnumConstantDeclaration,
    NodeKind::VariableDeclarator,
    NodeKind::MethodInvocation,
];

/// Index of a kind within [`FEATURE_UNIVERSE`], if it is a feature kind.
pub fn universe_index(kind: &NodeKind) -> Option<usize> {
    FEATURE_UNIVERSE.iter().position(|k| k == kind)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CStyleError {
    #[error("feature matrix requires a non-empty corpus")]
    EmptyCorpus,
}

/// Per-function feature counts over the fixed universe. Kinds that never
/// occur are stored as zero, so all vectors share one dimensionality.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CStyleVector {
    counts: [u32; FEATURE_UNIVERSE.len()],
    origin: String,
}

impl CStyleVector {
    pub fn zero(origin: impl Into<String>) -> CStyleVector {
        CStyleVector {
            counts: [0; FEATURE_UNIVERSE.len()],
            origin: origin.into(),
        }
    }

    pub fn origin(&self) -> &str {
        &self.origin
    }

    /// Count for one universe kind; zero for kinds outside the universe.
    pub fn count(&self, kind: &NodeKind) -> u32 {
        universe_index(kind).map_or(0, |i| self.counts[i])
    }

    /// Counts in universe order.
    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn is_zero(&self) -> bool {
        self.counts.iter().all(|&c| c == 0)
    }
}

/// Serialized annotation tokens of the form `KIND=COUNT`, in universe order,
/// omitting zero counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CStyleAnnotation {
    tokens: Vec<String>,
}

impl CStyleAnnotation {
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Whitespace-joined token text, the payload appended to fine-tuning
    /// sequences.
    pub fn to_text(&self) -> String {
        self.tokens.join(" ")
    }
}

/// Counts every node of each universe kind in the tree. Kinds outside the
/// universe (structural glue, terminals, imported foreign kinds) are ignored.
pub fn extract_features(tree: &SyntaxTree, origin: impl Into<String>) -> CStyleVector {
    let mut vector = CStyleVector::zero(origin);
    for node in tree.root().preorder() {
        if let Some(index) = universe_index(node.kind()) {
            vector.counts[index] += 1;
        }
    }
    vector
}

/// Fixed-order `KIND=COUNT` serialization of a vector, omitting zeros.
pub fn to_annotation(vector: &CStyleVector) -> CStyleAnnotation {
    let tokens = FEATURE_UNIVERSE
        .iter()
        .zip(vector.counts.iter())
        .filter(|(_, &count)| count > 0)
        .map(|(kind, count)| format!("{}={}", kind.name(), count))
        .collect();
    CStyleAnnotation { tokens }
}

/// Stacks vectors into a row-per-record matrix with columns in universe
/// order.
pub fn feature_matrix(vectors: &[CStyleVector]) -> Result<Vec<Vec<u32>>, CStyleError> {
    if vectors.is_empty() {
        return Err(CStyleError::EmptyCorpus);
    }
    Ok(vectors.iter().map(|v| v.counts.to_vec()).collect())
}

/// Renders a feature matrix as tab-separated text with a header row naming
/// the universe columns, preceded by an `origin` column.
pub fn matrix_to_tsv(vectors: &[CStyleVector]) -> Result<String, CStyleError> {
    if vectors.is_empty() {
        return Err(CStyleError::EmptyCorpus);
    }
    let mut out = String::from("origin");
    for kind in FEATURE_UNIVERSE.iter() {
        out.push('\t');
        out.push_str(kind.name());
    }
    out.push('\n');
    for vector in vectors {
        out.push_str(vector.origin());
        for count in vector.counts.iter() {
            out.push('\t');
            out.push_str(&count.to_string());
        }
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{import_tree, parse, KindCategory, Node};
    use std::collections::BTreeMap;

    /// Brute-force oracle: recursive whole-tree count per kind name.
    fn oracle_counts(node: &Node, out: &mut BTreeMap<String, u32>) {
        *out.entry(node.kind().name().to_string()).or_insert(0) += 1;
        for child in node.children() {
            oracle_counts(child, out);
        }
    }

    fn assert_matches_oracle(tree: &SyntaxTree) {
        let vector = extract_features(tree, "t");
        let mut oracle = BTreeMap::new();
        oracle_counts(tree.root(), &mut oracle);
        for kind in FEATURE_UNIVERSE.iter() {
            let expected = oracle.get(kind.name()).copied().unwrap_or(0);
            assert_eq!(vector.count(kind), expected, "kind {}", kind.name());
        }
    }

    #[test]
    fn universe_has_no_duplicates_and_only_feature_categories() {
        let mut seen = std::collections::BTreeSet::new();
        for kind in FEATURE_UNIVERSE.iter() {
            assert!(seen.insert(kind.name()), "duplicate {}", kind.name());
            assert!(matches!(
                kind.category(),
                KindCategory::Statement
                    | KindCategory::Expression
                    | KindCategory::Type
                    | KindCategory::Declaration
                    | KindCategory::Invocation
            ));
        }
    }

    #[test]
    fn counts_ifs_and_returns() {
        let source = "int f(int a){if(a>0){if(a>1){return 2;}}return 0;}";
        let tree = parse(source).unwrap();
        let vector = extract_features(&tree, "f");
        assert_eq!(vector.count(&NodeKind::IfStatement), 2);
        assert_eq!(vector.count(&NodeKind::ReturnStatement), 2);
        assert_eq!(vector.count(&NodeKind::MethodDeclaration), 1);
        assert_eq!(vector.count(&NodeKind::ForStatement), 0);
        assert_matches_oracle(&tree);
    }

    #[test]
    fn minimal_function_counts_declaration_and_block_only() {
        let tree = parse("void f(){}").unwrap();
        let vector = extract_features(&tree, "f");
        assert_eq!(vector.count(&NodeKind::MethodDeclaration), 1);
        assert_eq!(vector.count(&NodeKind::BlockStatement), 1);
        let nonzero: Vec<&NodeKind> = FEATURE_UNIVERSE
            .iter()
            .filter(|k| vector.count(k) > 0)
            .collect();
        assert_eq!(
            nonzero,
            vec![&NodeKind::BlockStatement, &NodeKind::MethodDeclaration]
        );
    }

    #[test]
    fn foreign_kinds_from_imported_trees_are_ignored() {
        let doc = r#"{"kind":"MysteryStmt","span":[0,4],"children":[
            {"kind":"IfStatement","span":[0,4],"children":[
                {"kind":"Keyword","text":"if","span":[0,2]},
                {"kind":"Identifier","text":"x","span":[2,3]},
                {"kind":"Punctuation","text":";","span":[3,4]}]}]}"#;
        let tree = import_tree(doc).unwrap();
        let vector = extract_features(&tree, "import");
        assert_eq!(vector.count(&NodeKind::IfStatement), 1);
        let total: u32 = vector.counts().iter().sum();
        assert_eq!(total, 1);
    }

    #[test]
    fn syntactic_counts_match_category_tally() {
        let source = "int f(int n){int s=0;for(int i=0;i<n;i=i+1){s=s+i>1?i:0;}return s;}";
        let tree = parse(source).unwrap();
        let vector = extract_features(&tree, "f");
        let syntactic_sum: u32 = FEATURE_UNIVERSE
            .iter()
            .filter(|k| {
                matches!(
                    k.category(),
                    KindCategory::Statement | KindCategory::Expression | KindCategory::Type
                )
            })
            .map(|k| vector.count(k))
            .sum();
        let by_category = tree
            .root()
            .preorder()
            .filter(|n| {
                matches!(
                    n.kind().category(),
                    KindCategory::Statement | KindCategory::Expression | KindCategory::Type
                )
            })
            .count() as u32;
        assert_eq!(syntactic_sum, by_category);
    }

    #[test]
    fn annotations_serialize_in_fixed_order_and_omit_zeros() {
        let source = "int f(int a){if(a>0){return 1;}if(a<0){return -1;}return 0;}";
        let tree = parse(source).unwrap();
        let annotation = to_annotation(&extract_features(&tree, "f"));
        let text = annotation.to_text();
        assert!(text.contains("IfStatement=2"));
        assert!(text.contains("ReturnStatement=3"));
        assert!(!text.contains("=0"));
        // Universe order: IfStatement (statements) precedes MethodDeclaration
        // (declarations).
        let if_pos = text.find("IfStatement").unwrap();
        let decl_pos = text.find("MethodDeclaration").unwrap();
        assert!(if_pos < decl_pos);
    }

    #[test]
    fn zero_vector_serializes_to_an_empty_annotation() {
        let annotation = to_annotation(&CStyleVector::zero("none"));
        assert!(annotation.is_empty());
        assert_eq!(annotation.to_text(), "");
    }

    #[test]
    fn equal_vectors_produce_identical_annotations() {
        let a = extract_features(&parse("int f(){return 0;}").unwrap(), "a");
        let b = extract_features(&parse("int f(){return 0;}").unwrap(), "b");
        assert_eq!(to_annotation(&a), to_annotation(&b));
    }

    #[test]
    fn annotation_is_injective_on_nonzero_support() {
        let sources = [
            "int f(){return 0;}",
            "int f(){if(1){return 0;}return 1;}",
            "int f(){while(1){return 0;}}",
            "void f(){int x = call();}",
        ];
        let mut seen = std::collections::BTreeSet::new();
        for source in sources {
            let text = to_annotation(&extract_features(&parse(source).unwrap(), "s")).to_text();
            assert!(seen.insert(text), "distinct vectors must not collide");
        }
    }

    #[test]
    fn matrix_shape_and_column_sums() {
        let sources = [
            "int f(){return 0;}",
            "int g(int a){if(a){return 1;}return 0;}",
        ];
        let vectors: Vec<CStyleVector> = sources
            .iter()
            .enumerate()
            .map(|(i, s)| extract_features(&parse(s).unwrap(), format!("r{i}")))
            .collect();
        let matrix = feature_matrix(&vectors).unwrap();
        assert_eq!(matrix.len(), 2);
        assert!(matrix.iter().all(|row| row.len() == FEATURE_UNIVERSE.len()));

        for (column, kind) in FEATURE_UNIVERSE.iter().enumerate() {
            let column_sum: u32 = matrix.iter().map(|row| row[column]).sum();
            let direct_sum: u32 = vectors.iter().map(|v| v.count(kind)).sum();
            assert_eq!(column_sum, direct_sum);
        }
    }

    #[test]
    fn zero_vector_becomes_an_all_zero_row() {
        let matrix = feature_matrix(&[CStyleVector::zero("empty")]).unwrap();
        assert!(matrix[0].iter().all(|&c| c == 0));
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert_eq!(feature_matrix(&[]), Err(CStyleError::EmptyCorpus));
        assert!(matrix_to_tsv(&[]).is_err());
    }

    #[test]
    fn tsv_export_has_header_and_rows() {
        let vector = extract_features(&parse("int f(){return 0;}").unwrap(), "r0");
        let tsv = matrix_to_tsv(&[vector]).unwrap();
        let mut lines = tsv.lines();
        let header = lines.next().unwrap();
        assert!(header.starts_with("origin\tIfStatement\t"));
        assert!(header.ends_with("MethodInvocation"));
        let row = lines.next().unwrap();
        assert!(row.starts_with("r0\t"));
        assert_eq!(row.split('\t').count(), FEATURE_UNIVERSE.len() + 1);
    }
}
