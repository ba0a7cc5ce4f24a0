//! Tokenizer for the C-like subset.
//!
//! Whitespace, `//` and `/* */` comments, and preprocessor lines (`#` to end
//! of line, honoring backslash continuations) are trivia and produce no
//! tokens. Everything else becomes a token carrying its byte span, so leaf
//! text concatenated in order reproduces the token stream of the source.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Identifier,
    Keyword,
    Integer,
    Float,
    Char,
    Str,
    Operator,
    Punct,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub span: (usize, usize),
}

const KEYWORDS: &[&str] = &[
    "assert", "bool", "break", "case", "catch", "char", "class", "const", "continue", "default",
    "do", "double", "else", "enum", "extern", "false", "float", "for", "if", "inline", "int",
    "long", "namespace", "return", "short", "signed", "static", "struct", "switch", "throw",
    "true", "try", "typedef", "union", "unsigned", "void", "volatile", "while",
];

pub fn is_keyword(text: &str) -> bool {
    KEYWORDS.contains(&text)
}

/// Multi-character operators, longest first so maximal munch works by scan
/// order.
const OPERATORS: &[&str] = &[
    "<<=", ">>=", "...", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "+=",
    "-=", "*=", "/=", "%=", "&=", "|=", "^=", "::", "+", "-", "*", "/", "%", "=", "<", ">", "!",
    "&", "|", "^", "~", "?", ":", ".",
];

pub fn lex(source: &str) -> Vec<Token> {
    let bytes = source.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        // Trivia.
        if b.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if b == b'#' {
            i = skip_preprocessor_line(bytes, i);
            continue;
        }
        if b == b'/' && i + 1 < bytes.len() {
            match bytes[i + 1] {
                b'/' => {
                    while i < bytes.len() && bytes[i] != b'\n' {
                        i += 1;
                    }
                    continue;
                }
                b'*' => {
                    i += 2;
                    while i + 1 < bytes.len() && !(bytes[i] == b'*' && bytes[i + 1] == b'/') {
                        i += 1;
                    }
                    i = (i + 2).min(bytes.len());
                    continue;
                }
                _ => {}
            }
        }

        let start = i;
        if b.is_ascii_alphabetic() || b == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let text = &source[start..i];
            let kind = if is_keyword(text) {
                TokenKind::Keyword
            } else {
                TokenKind::Identifier
            };
            tokens.push(token(kind, source, start, i));
        } else if b.is_ascii_digit() {
            let (end, kind) = lex_number(bytes, start);
            i = end;
            tokens.push(token(kind, source, start, i));
        } else if b == b'"' || b == b'\'' {
            i = lex_quoted(bytes, start);
            let kind = if b == b'"' {
                TokenKind::Str
            } else {
                TokenKind::Char
            };
            tokens.push(token(kind, source, start, i));
        } else if let Some(op) = match_operator(&source[i..]) {
            i += op.len();
            tokens.push(token(TokenKind::Operator, source, start, i));
        } else if matches!(b, b'(' | b')' | b'{' | b'}' | b'[' | b']' | b';' | b',') {
            i += 1;
            tokens.push(token(TokenKind::Punct, source, start, i));
        } else {
            // Bytes outside the subset (stray `@`, `$`, non-ASCII, ...) become
            // single punct tokens; the grammar's recovery path absorbs them.
            let mut end = i + 1;
            while end < bytes.len() && !source.is_char_boundary(end) {
                end += 1;
            }
            i = end;
            tokens.push(token(TokenKind::Punct, source, start, i));
        }
    }
    tokens
}

fn token(kind: TokenKind, source: &str, start: usize, end: usize) -> Token {
    Token {
        kind,
        text: source[start..end].to_string(),
        span: (start, end),
    }
}

fn skip_preprocessor_line(bytes: &[u8], mut i: usize) -> usize {
    while i < bytes.len() {
        if bytes[i] == b'\\' && i + 1 < bytes.len() && bytes[i + 1] == b'\n' {
            i += 2;
            continue;
        }
        if bytes[i] == b'\n' {
            return i + 1;
        }
        i += 1;
    }
    i
}

fn lex_number(bytes: &[u8], start: usize) -> (usize, TokenKind) {
    let mut i = start;
    let mut is_float = false;
    if bytes[i] == b'0' && i + 1 < bytes.len() && matches!(bytes[i + 1], b'x' | b'X') {
        i += 2;
        while i < bytes.len() && bytes[i].is_ascii_hexdigit() {
            i += 1;
        }
    } else {
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        if i < bytes.len() && bytes[i] == b'.' && i + 1 < bytes.len() && bytes[i + 1].is_ascii_digit()
        {
            is_float = true;
            i += 1;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
        }
        if i < bytes.len() && matches!(bytes[i], b'e' | b'E') {
            let mut j = i + 1;
            if j < bytes.len() && matches!(bytes[j], b'+' | b'-') {
                j += 1;
            }
            if j < bytes.len() && bytes[j].is_ascii_digit() {
                is_float = true;
                i = j;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
        }
    }
    // Integer/float suffixes.
    while i < bytes.len() && matches!(bytes[i], b'u' | b'U' | b'l' | b'L' | b'f' | b'F') {
        if matches!(bytes[i], b'f' | b'F') {
            is_float = true;
        }
        i += 1;
    }
    let kind = if is_float {
        TokenKind::Float
    } else {
        TokenKind::Integer
    };
    (i, kind)
}

/// Scans a quoted literal. Unterminated literals end at the line break (or
/// end of input) so lexing always makes progress.
fn lex_quoted(bytes: &[u8], start: usize) -> usize {
    let quote = bytes[start];
    let mut i = start + 1;
    while i < bytes.len() {
        match bytes[i] {
            b'\\' if i + 1 < bytes.len() => i += 2,
            b if b == quote => return i + 1,
            b'\n' => return i,
            _ => i += 1,
        }
    }
    i
}

fn match_operator(rest: &str) -> Option<&'static str> {
    OPERATORS.iter().find(|op| rest.starts_with(**op)).copied()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(source: &str) -> Vec<String> {
        lex(source).into_iter().map(|t| t.text).collect()
    }

    #[test]
    fn lexes_a_small_function() {
        assert_eq!(
            texts("int f(){return 0;}"),
            ["int", "f", "(", ")", "{", "return", "0", ";", "}"]
        );
    }

    #[test]
    fn comments_and_preprocessor_lines_are_trivia() {
        let src = "#include <stdio.h>\nint x; // tail\n/* block */ int y;";
        assert_eq!(texts(src), ["int", "x", ";", "int", "y", ";"]);
    }

    #[test]
    fn maximal_munch_on_operators() {
        assert_eq!(texts("a<<=b->c"), ["a", "<<=", "b", "->", "c"]);
    }

    #[test]
    fn string_escapes_and_unterminated_literals() {
        assert_eq!(texts(r#""a\"b""#), [r#""a\"b""#]);
        // Unterminated literal stops at the newline and lexing continues.
        assert_eq!(texts("\"open\nx"), ["\"open", "x"]);
    }

    #[test]
    fn numbers_with_suffixes_and_exponents() {
        let toks = lex("10UL 1.5 2e-3 0x1F 3.0f");
        let kinds: Vec<TokenKind> = toks.iter().map(|t| t.kind).collect();
        assert_eq!(
            kinds,
            [
                TokenKind::Integer,
                TokenKind::Float,
                TokenKind::Float,
                TokenKind::Integer,
                TokenKind::Float
            ]
        );
    }

    #[test]
    fn spans_cover_the_source_tokens() {
        let src = "int  f ;";
        for tok in lex(src) {
            assert_eq!(&src[tok.span.0..tok.span.1], tok.text);
        }
    }
}
