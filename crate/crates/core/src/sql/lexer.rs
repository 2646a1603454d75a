use crate::error::{Error, Result};
use crate::value::{parse_decimal, Decimal};

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    Str(String),
    Num(Decimal),
    Comma,
    Dot,
    Star,
    LParen,
    RParen,
    Semi,
    Eq,
    Ge,
    Le,
    /// Comparison operators outside the dialect: `<`, `>`, `<>`, `!=`.
    OtherOp(&'static str),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub offset: usize,
}

impl Token {
    pub fn is_keyword(&self, kw: &str) -> bool {
        matches!(&self.tok, Tok::Ident(s) if s.eq_ignore_ascii_case(kw))
    }
}

pub fn tokenize(src: &str) -> Result<Vec<Token>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        match c {
            b' ' | b'\t' | b'\r' | b'\n' => {
                i += 1;
                continue;
            }
            b'-' if bytes.get(i + 1) == Some(&b'-') => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
                continue;
            }
            b',' => push(&mut out, Tok::Comma, start, &mut i, 1),
            b'.' if !bytes.get(i + 1).is_some_and(u8::is_ascii_digit) => {
                push(&mut out, Tok::Dot, start, &mut i, 1)
            }
            b'*' => push(&mut out, Tok::Star, start, &mut i, 1),
            b'(' => push(&mut out, Tok::LParen, start, &mut i, 1),
            b')' => push(&mut out, Tok::RParen, start, &mut i, 1),
            b';' => push(&mut out, Tok::Semi, start, &mut i, 1),
            b'=' => push(&mut out, Tok::Eq, start, &mut i, 1),
            b'>' if bytes.get(i + 1) == Some(&b'=') => push(&mut out, Tok::Ge, start, &mut i, 2),
            b'<' if bytes.get(i + 1) == Some(&b'=') => push(&mut out, Tok::Le, start, &mut i, 2),
            b'<' if bytes.get(i + 1) == Some(&b'>') => {
                push(&mut out, Tok::OtherOp("<>"), start, &mut i, 2)
            }
            b'!' if bytes.get(i + 1) == Some(&b'=') => {
                push(&mut out, Tok::OtherOp("!="), start, &mut i, 2)
            }
            b'<' => push(&mut out, Tok::OtherOp("<"), start, &mut i, 1),
            b'>' => push(&mut out, Tok::OtherOp(">"), start, &mut i, 1),
            b'\'' => {
                let mut s = String::new();
                i += 1;
                loop {
                    match src[i..].find('\'') {
                        None => {
                            return Err(Error::Syntax {
                                offset: start,
                                expected: vec!["closing '".into()],
                            })
                        }
                        Some(j) => {
                            s.push_str(&src[i..i + j]);
                            i += j + 1;
                            if bytes.get(i) == Some(&b'\'') {
                                s.push('\'');
                                i += 1;
                            } else {
                                break;
                            }
                        }
                    }
                }
                out.push(Token {
                    tok: Tok::Str(s),
                    offset: start,
                });
            }
            b'0'..=b'9' | b'.' | b'-' => {
                i += 1;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                let text = &src[start..i];
                let n = parse_decimal(text).ok_or_else(|| Error::Syntax {
                    offset: start,
                    expected: vec!["number".into()],
                })?;
                out.push(Token {
                    tok: Tok::Num(n),
                    offset: start,
                });
            }
            b'"' => {
                let end = src[i + 1..].find('"').ok_or_else(|| Error::Syntax {
                    offset: start,
                    expected: vec!["closing \"".into()],
                })?;
                out.push(Token {
                    tok: Tok::Ident(src[i + 1..i + 1 + end].to_owned()),
                    offset: start,
                });
                i += end + 2;
            }
            c if c.is_ascii_alphabetic() || c == b'_' || c >= 0x80 => {
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] >= 0x80)
                {
                    i += 1;
                }
                out.push(Token {
                    tok: Tok::Ident(src[start..i].to_owned()),
                    offset: start,
                });
            }
            _ => {
                return Err(Error::Syntax {
                    offset: start,
                    expected: vec!["identifier".into(), "literal".into(), "punctuation".into()],
                })
            }
        }
    }
    Ok(out)
}

fn push(out: &mut Vec<Token>, tok: Tok, offset: usize, i: &mut usize, len: usize) {
    out.push(Token { tok, offset });
    *i += len;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens() {
        let t = tokenize("a.gpa>=e.gpa_start and b.study='it''s' -- note\n;").unwrap();
        let kinds: Vec<&Tok> = t.iter().map(|t| &t.tok).collect();
        assert_eq!(kinds[1], &Tok::Dot);
        assert_eq!(kinds[3], &Tok::Ge);
        assert!(kinds.contains(&&Tok::Str("it's".into())));
        assert_eq!(kinds.last(), Some(&&Tok::Semi));
        assert_eq!(t[3].offset, 5);
    }

    #[test]
    fn numbers_and_errors() {
        let t = tokenize("3.5 -2 .25").unwrap();
        assert_eq!(t.len(), 3);
        assert!(matches!(tokenize("'open"), Err(Error::Syntax { offset: 0, .. })));
        assert!(matches!(tokenize("a ? b"), Err(Error::Syntax { offset: 2, .. })));
    }
}
