use super::{Diagnostic, Span};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Int(String),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Eq,
    At,
    RegionOpen,
    RegionClose,
    Newline,
    Eof,
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

/// Line starts, for offset → (line, column) conversion.
pub struct LineIndex {
    starts: Vec<usize>,
}

impl LineIndex {
    pub fn new(text: &str) -> Self {
        let mut starts = vec![0];
        starts.extend(text.match_indices('\n').map(|(i, _)| i + 1));
        LineIndex { starts }
    }

    pub fn span(&self, text: &str, offset: usize, len: usize) -> Span {
        let line = self.starts.partition_point(|&s| s <= offset) - 1;
        let col = text[self.starts[line]..offset].chars().count() + 1;
        Span { offset, len, line: line + 1, column: col }
    }
}

/// Whether the next non-blank, non-comment line starts with `+` or `-`.
fn continues(rest: &[u8]) -> bool {
    let mut i = 0;
    while i < rest.len() {
        match rest[i] {
            b' ' | b'\t' | b'\r' | b'\n' => i += 1,
            b'#' => {
                while i < rest.len() && rest[i] != b'\n' {
                    i += 1;
                }
            }
            b'+' | b'-' => return true,
            _ => return false,
        }
    }
    false
}

/// Splits `text` into tokens. Newlines inside `( )` and `:[ ]:`, and before
/// a line starting with `+` or `-`, are dropped so long expressions can wrap.
pub fn lex(text: &str, diags: &mut Vec<Diagnostic>) -> Vec<Token> {
    let idx = LineIndex::new(text);
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut depth: usize = 0;
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let single = |t: Tok| (t, 1usize);
        let (tok, len) = match c {
            b' ' | b'\t' | b'\r' => {
                i += 1;
                continue;
            }
            b'#' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
                continue;
            }
            b'\n' => {
                i += 1;
                if depth == 0 && !continues(&bytes[i..]) {
                    out.push(Token { tok: Tok::Newline, span: idx.span(text, start, 1) });
                }
                continue;
            }
            b'0'..=b'9' => {
                let mut j = i;
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                (Tok::Int(text[i..j].to_string()), j - i)
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let mut j = i;
                while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_') {
                    j += 1;
                }
                (Tok::Ident(text[i..j].to_string()), j - i)
            }
            b'+' => single(Tok::Plus),
            b'-' => single(Tok::Minus),
            b'*' => single(Tok::Star),
            b'/' => single(Tok::Slash),
            b'^' => single(Tok::Caret),
            b'(' => {
                depth += 1;
                single(Tok::LParen)
            }
            b')' => {
                depth = depth.saturating_sub(1);
                single(Tok::RParen)
            }
            b'[' => single(Tok::LBracket),
            b']' if bytes.get(i + 1) == Some(&b':') => {
                depth = depth.saturating_sub(1);
                (Tok::RegionClose, 2)
            }
            b']' => single(Tok::RBracket),
            b':' if bytes.get(i + 1) == Some(&b'[') => {
                depth += 1;
                (Tok::RegionOpen, 2)
            }
            b',' => single(Tok::Comma),
            b'=' => single(Tok::Eq),
            b'@' => single(Tok::At),
            _ => {
                let ch = text[i..].chars().next().unwrap();
                let n = ch.len_utf8();
                diags.push(Diagnostic::error(
                    idx.span(text, i, n),
                    format!("unexpected character `{}`", ch.escape_debug()),
                ));
                i += n;
                continue;
            }
        };
        out.push(Token { tok, span: idx.span(text, start, len) });
        i += len;
    }
    out.push(Token { tok: Tok::Eof, span: idx.span(text, text.len(), 0) });
    out
}
