use std::fmt;

use super::{Diagnostic, Span};

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Int(i64),
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Colon,
    Slash,
    Assign,
    Eq,
    Ne,
    Plus,
    Minus,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(i) => write!(f, "`{i}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBracket => f.write_str("`[`"),
            Tok::RBracket => f.write_str("`]`"),
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::Slash => f.write_str("`/`"),
            Tok::Assign => f.write_str("`:=`"),
            Tok::Eq => f.write_str("`=`"),
            Tok::Ne => f.write_str("`!=`"),
            Tok::Plus => f.write_str("`+`"),
            Tok::Minus => f.write_str("`-`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

pub(crate) fn lex(text: &str) -> Result<Vec<(Tok, Span)>, Diagnostic> {
    let mut out = Vec::new();
    let mut line = 1;
    let mut col = 1;
    let mut chars = text.char_indices().peekable();
    while let Some(&(off, c)) = chars.peek() {
        let span = Span {
            offset: off,
            line,
            col,
        };
        let mut advance = |chars: &mut std::iter::Peekable<std::str::CharIndices>| {
            let (_, c) = chars.next().unwrap();
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
        };
        if c.is_whitespace() {
            advance(&mut chars);
            continue;
        }
        if c == '/' && text[off..].starts_with("//") {
            while chars.peek().is_some_and(|&(_, c)| c != '\n') {
                advance(&mut chars);
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut end = off;
            while let Some(&(o, c)) = chars.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    end = o + c.len_utf8();
                    advance(&mut chars);
                } else {
                    break;
                }
            }
            out.push((Tok::Ident(text[off..end].to_string()), span));
            continue;
        }
        if c.is_ascii_digit() {
            let mut end = off;
            while let Some(&(o, c)) = chars.peek() {
                if c.is_ascii_digit() {
                    end = o + 1;
                    advance(&mut chars);
                } else {
                    break;
                }
            }
            let v = text[off..end]
                .parse()
                .map_err(|_| Diagnostic::new(span, "integer literal out of range"))?;
            out.push((Tok::Int(v), span));
            continue;
        }
        let two = |s: &str| text[off..].starts_with(s);
        let (tok, len) = if two(":=") {
            (Tok::Assign, 2)
        } else if two("!=") {
            (Tok::Ne, 2)
        } else {
            let t = match c {
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '[' => Tok::LBracket,
                ']' => Tok::RBracket,
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                ',' => Tok::Comma,
                ':' => Tok::Colon,
                '/' => Tok::Slash,
                '=' => Tok::Eq,
                '≠' => Tok::Ne,
                '+' => Tok::Plus,
                '-' | '−' => Tok::Minus,
                _ => {
                    return Err(Diagnostic::new(span, format!("unexpected character `{c}`")));
                }
            };
            (t, 1)
        };
        for _ in 0..len {
            advance(&mut chars);
        }
        out.push((tok, span));
    }
    out.push((
        Tok::Eof,
        Span {
            offset: text.len(),
            line,
            col,
        },
    ));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        lex(s).unwrap().into_iter().map(|(t, _)| t).collect()
    }

    #[test]
    fn unicode_operators() {
        assert_eq!(
            toks("a ≠ 1 − b"),
            vec![
                Tok::Ident("a".into()),
                Tok::Ne,
                Tok::Int(1),
                Tok::Minus,
                Tok::Ident("b".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn positions_and_comments() {
        let ts = lex("// header\n  x := 1").unwrap();
        assert_eq!(ts[0].1.line, 2);
        assert_eq!(ts[0].1.col, 3);
        assert_eq!(ts[1].0, Tok::Assign);
        assert_eq!(ts[1].1.col, 5);
    }

    #[test]
    fn bad_character() {
        let e = lex("x := @").unwrap_err();
        assert_eq!((e.span.line, e.span.col), (1, 6));
    }
}
