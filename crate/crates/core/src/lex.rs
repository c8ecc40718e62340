//! A small, allocation-light C++ token scanner.
//!
//! This is not a parser. It understands just enough lexical structure
//! (comments, string/char literals including raw strings, numbers,
//! identifiers and punctuators) to let text rules operate on code without
//! being fooled by braces inside strings or keywords inside comments.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Ident,
    Number,
    Str,
    Char,
    Punct,
    LineComment,
    BlockComment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub start: usize,
    pub end: usize,
    /// Set for string/char literals and block comments that reach end of input.
    pub unterminated: bool,
}

impl Token {
    pub fn text<'a>(&self, src: &'a str) -> &'a str {
        &src[self.start..self.end]
    }

    pub fn is_comment(&self) -> bool {
        matches!(self.kind, TokenKind::LineComment | TokenKind::BlockComment)
    }
}

const TWO_CHAR_PUNCT: &[&str] = &[
    "::", "->", "&&", "||", "==", "!=", "<=", ">=", "++", "--", "<<", ">>", "+=", "-=", "*=", "/=",
    "%=", "&=", "|=", "^=", "##",
];

/// Tokenizes `src`. Whitespace is dropped; comments are kept as tokens.
pub fn tokenize(src: &str) -> Vec<Token> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c == b'/' && bytes.get(i + 1) == Some(&b'/') {
            while i < bytes.len() && bytes[i] != b'\n' {
                // line splice continues a line comment
                if bytes[i] == b'\\' && bytes.get(i + 1) == Some(&b'\n') {
                    i += 2;
                    continue;
                }
                i += 1;
            }
            out.push(tok(TokenKind::LineComment, start, i, false));
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'*') {
            i += 2;
            let mut closed = false;
            while i < bytes.len() {
                if bytes[i] == b'*' && bytes.get(i + 1) == Some(&b'/') {
                    i += 2;
                    closed = true;
                    break;
                }
                i += 1;
            }
            out.push(tok(TokenKind::BlockComment, start, i, !closed));
            continue;
        }
        if let Some(end) = raw_string_end(bytes, i) {
            let (end, closed) = end;
            out.push(tok(TokenKind::Str, start, end, !closed));
            i = end;
            continue;
        }
        if c == b'"' || c == b'\'' {
            let (end, closed) = quoted_end(bytes, i);
            let kind = if c == b'"' {
                TokenKind::Str
            } else {
                TokenKind::Char
            };
            out.push(tok(kind, start, end, !closed));
            i = end;
            continue;
        }
        // encoding prefixes on ordinary literals: u8"", L'', U"", u""
        if is_ident_start(c) {
            let mut j = i;
            while j < bytes.len() && is_ident_continue(bytes[j]) {
                j += 1;
            }
            let word = &src[i..j];
            if matches!(word, "u8" | "u" | "U" | "L")
                && j < bytes.len()
                && (bytes[j] == b'"' || bytes[j] == b'\'')
            {
                let (end, closed) = quoted_end(bytes, j);
                let kind = if bytes[j] == b'"' {
                    TokenKind::Str
                } else {
                    TokenKind::Char
                };
                out.push(tok(kind, start, end, !closed));
                i = end;
                continue;
            }
            out.push(tok(TokenKind::Ident, start, j, false));
            i = j;
            continue;
        }
        if c.is_ascii_digit() || (c == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            let mut j = i + 1;
            while j < bytes.len() {
                let d = bytes[j];
                let hex = src[i..j].starts_with("0x") || src[i..j].starts_with("0X");
                // Digit separators, and exponent signs: `e` in decimal, `p` in hex.
                let separator =
                    d == b'\'' && bytes.get(j + 1).is_some_and(u8::is_ascii_alphanumeric);
                let exponent_sign = (d == b'+' || d == b'-')
                    && match bytes[j - 1] {
                        b'e' | b'E' => !hex,
                        b'p' | b'P' => hex,
                        _ => false,
                    };
                if d.is_ascii_alphanumeric() || d == b'_' || d == b'.' || separator || exponent_sign
                {
                    j += 1;
                } else {
                    break;
                }
            }
            out.push(tok(TokenKind::Number, start, j, false));
            i = j;
            continue;
        }
        let rest = &src[i..];
        let len = if rest.starts_with("...") {
            3
        } else if TWO_CHAR_PUNCT.iter().any(|p| rest.starts_with(p)) {
            2
        } else {
            rest.chars().next().map_or(1, char::len_utf8)
        };
        out.push(tok(TokenKind::Punct, start, i + len, false));
        i += len;
    }
    out
}

fn tok(kind: TokenKind, start: usize, end: usize, unterminated: bool) -> Token {
    Token {
        kind,
        start,
        end,
        unterminated,
    }
}

fn is_ident_start(c: u8) -> bool {
    c.is_ascii_alphabetic() || c == b'_' || c >= 0x80
}

fn is_ident_continue(c: u8) -> bool {
    c.is_ascii_alphanumeric() || c == b'_' || c >= 0x80
}

fn quoted_end(bytes: &[u8], open: usize) -> (usize, bool) {
    let quote = bytes[open];
    let mut i = open + 1;
    while i < bytes.len() {
        match bytes[i] {
            b'\\' => i += 2,
            b'\n' => return (i, false),
            c if c == quote => return (i + 1, true),
            _ => i += 1,
        }
    }
    (bytes.len(), false)
}

/// Recognizes `R"delim( ... )delim"` with optional u8/u/U/L prefix.
fn raw_string_end(bytes: &[u8], i: usize) -> Option<(usize, bool)> {
    let prefix_len = [&b"u8R\""[..], b"uR\"", b"UR\"", b"LR\"", b"R\""]
        .iter()
        .find(|p| bytes[i..].starts_with(p))
        .map(|p| p.len())?;
    if i > 0 && is_ident_continue(bytes[i - 1]) {
        return None;
    }
    let delim_start = i + prefix_len;
    let paren = bytes[delim_start..].iter().position(|&b| b == b'(')? + delim_start;
    let delim = &bytes[delim_start..paren];
    if delim.len() > 16 || delim.iter().any(|b| b.is_ascii_whitespace() || *b == b')') {
        return None;
    }
    let mut j = paren + 1;
    while j < bytes.len() {
        if bytes[j] == b')'
            && bytes[j + 1..].starts_with(delim)
            && bytes.get(j + 1 + delim.len()) == Some(&b'"')
        {
            return Some((j + delim.len() + 2, true));
        }
        j += 1;
    }
    Some((bytes.len(), false))
}

/// Tokens with comments removed.
pub fn code_tokens(src: &str) -> Vec<Token> {
    tokenize(src)
        .into_iter()
        .filter(|t| !t.is_comment())
        .collect()
}

/// 1-based line number of a byte offset.
pub fn line_of(src: &str, offset: usize) -> usize {
    src.as_bytes()[..offset.min(src.len())]
        .iter()
        .filter(|&&b| b == b'\n')
        .count()
        + 1
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds_and_text(src: &str) -> Vec<(TokenKind, &str)> {
        tokenize(src)
            .iter()
            .map(|t| (t.kind, t.text(src)))
            .collect()
    }

    #[test]
    fn braces_inside_strings_and_comments_are_not_punctuation() {
        let src = r#"f("{", '}'); // }
        /* { */ R"x(})x";"#;
        let puncts: Vec<_> = tokenize(src)
            .into_iter()
            .filter(|t| t.kind == TokenKind::Punct)
            .map(|t| t.text(src).to_string())
            .collect();
        assert_eq!(puncts, ["(", ",", ")", ";", ";"]);
    }

    #[test]
    fn two_char_operators() {
        let toks = kinds_and_text("a && b || c::d ? e : f");
        let p: Vec<_> = toks
            .iter()
            .filter(|(k, _)| *k == TokenKind::Punct)
            .map(|(_, t)| *t)
            .collect();
        assert_eq!(p, ["&&", "||", "::", "?", ":"]);
    }

    #[test]
    fn numbers() {
        let toks = kinds_and_text("1 3.5 1e-3 0x1F 1'000 .5f 2u");
        assert!(toks.iter().all(|(k, _)| *k == TokenKind::Number));
        assert_eq!(toks.len(), 7);
        assert_eq!(toks[2].1, "1e-3");
        // `e` is a hex digit, so `0x1e+2` is a sum; `p` introduces a hex exponent.
        let toks = kinds_and_text("0x1e+2 0x1p+3");
        let text: Vec<&str> = toks.iter().map(|(_, t)| *t).collect();
        assert_eq!(text, ["0x1e", "+", "2", "0x1p+3"]);
    }

    #[test]
    fn unterminated_block_comment_is_flagged() {
        let t = tokenize("int x; /* open");
        assert!(t.last().unwrap().unterminated);
    }

    #[test]
    fn prefixed_literals() {
        let toks = kinds_and_text(r#"u8"a" L'b' x"#);
        assert_eq!(toks[0].0, TokenKind::Str);
        assert_eq!(toks[1].0, TokenKind::Char);
        assert_eq!(toks[2].0, TokenKind::Ident);
    }

    #[test]
    fn line_numbers() {
        let src = "a\nb\nc";
        assert_eq!(line_of(src, 0), 1);
        assert_eq!(line_of(src, 2), 2);
        assert_eq!(line_of(src, 4), 3);
    }
}
