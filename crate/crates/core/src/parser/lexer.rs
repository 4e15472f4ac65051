use super::{ParseError, Pos};

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Sym(&'static str),
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

// Longest symbols first.
const SYMBOLS: &[&str] = &[
    "..", "/\\", ":=", "<:", "(", ")", "{", "}", ":", ".", "=", ";", "!",
];

pub(crate) fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

pub(crate) fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\''
}

pub(crate) fn lex(src: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let mut out = Vec::new();
    let mut pos = Pos::start();
    let mut rest = src;
    loop {
        // Whitespace and comments.
        loop {
            if let Some(c) = rest.chars().next().filter(|c| c.is_whitespace()) {
                pos.advance(c);
                rest = &rest[c.len_utf8()..];
            } else if rest.starts_with("//") {
                let end = rest.find('\n').unwrap_or(rest.len());
                for c in rest[..end].chars() {
                    pos.advance(c);
                }
                rest = &rest[end..];
            } else {
                break;
            }
        }
        let Some(c) = rest.chars().next() else {
            out.push((Tok::Eof, pos));
            return Ok(out);
        };
        if is_ident_start(c) {
            let end = rest.find(|c| !is_ident_char(c)).unwrap_or(rest.len());
            let word = &rest[..end];
            out.push((Tok::Ident(word.to_string()), pos));
            for c in word.chars() {
                pos.advance(c);
            }
            rest = &rest[end..];
            continue;
        }
        if rest.starts_with("<loc") {
            return Err(ParseError::LocationLiteral { pos });
        }
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(sym) => {
                out.push((Tok::Sym(sym), pos));
                for c in sym.chars() {
                    pos.advance(c);
                }
                rest = &rest[sym.len()..];
            }
            None => {
                return Err(ParseError::Syntax {
                    pos,
                    expected: vec!["a term or type".to_string()],
                    found: format!("`{c}`"),
                })
            }
        }
    }
}
