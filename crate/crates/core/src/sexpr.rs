//! S-expression reader shared by every textual grammar in the crate.
//!
//! Atoms are bare words, unsigned integers, or double-quoted bit strings;
//! lists are parenthesized. Errors carry the byte offset of the offending
//! token.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexpr {
    /// Bare word, e.g. `card`, `x0`.
    Word(String),
    /// Unsigned integer literal.
    Num(u64),
    /// Double-quoted string, used for bit strings.
    Str(String),
    List(Vec<Sexpr>),
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("parse error at byte {pos}: {msg}")]
pub struct SexprError {
    pub pos: usize,
    pub msg: String,
}

impl SexprError {
    pub fn new(pos: usize, msg: impl Into<String>) -> Self {
        SexprError { pos, msg: msg.into() }
    }
}

impl Sexpr {
    pub fn parse(text: &str) -> Result<Sexpr, SexprError> {
        let mut p = Reader { text: text.as_bytes(), pos: 0 };
        p.skip_ws();
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.text.len() {
            return Err(SexprError::new(p.pos, "trailing input after expression"));
        }
        Ok(e)
    }

    /// Parses a whitespace-separated sequence of expressions.
    pub fn parse_many(text: &str) -> Result<Vec<Sexpr>, SexprError> {
        let mut p = Reader { text: text.as_bytes(), pos: 0 };
        let mut out = Vec::new();
        loop {
            p.skip_ws();
            if p.pos == p.text.len() {
                return Ok(out);
            }
            out.push(p.expr()?);
        }
    }

    pub fn as_word(&self) -> Option<&str> {
        match self {
            Sexpr::Word(w) => Some(w),
            _ => None,
        }
    }

    pub fn as_num(&self) -> Option<u64> {
        match self {
            Sexpr::Num(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Sexpr::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexpr]> {
        match self {
            Sexpr::List(items) => Some(items),
            _ => None,
        }
    }

    /// The head word of a list form, e.g. `union` in `(union a b)`.
    pub fn head(&self) -> Option<&str> {
        self.as_list().and_then(|items| items.first()).and_then(Sexpr::as_word)
    }
}

impl fmt::Display for Sexpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexpr::Word(w) => write!(f, "{w}"),
            Sexpr::Num(n) => write!(f, "{n}"),
            Sexpr::Str(s) => write!(f, "\"{s}\""),
            Sexpr::List(items) => {
                write!(f, "(")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{item}")?;
                }
                write!(f, ")")
            }
        }
    }
}

struct Reader<'a> {
    text: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.text.len() {
            match self.text[self.pos] {
                b' ' | b'\t' | b'\n' | b'\r' => self.pos += 1,
                b';' => {
                    while self.pos < self.text.len() && self.text[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                _ => break,
            }
        }
    }

    fn expr(&mut self) -> Result<Sexpr, SexprError> {
        if self.pos >= self.text.len() {
            return Err(SexprError::new(self.pos, "unexpected end of input"));
        }
        match self.text[self.pos] {
            b'(' => {
                self.pos += 1;
                let mut items = Vec::new();
                loop {
                    self.skip_ws();
                    if self.pos >= self.text.len() {
                        return Err(SexprError::new(self.pos, "unclosed parenthesis"));
                    }
                    if self.text[self.pos] == b')' {
                        self.pos += 1;
                        return Ok(Sexpr::List(items));
                    }
                    items.push(self.expr()?);
                }
            }
            b')' => Err(SexprError::new(self.pos, "unexpected ')'")),
            b'"' => {
                let start = self.pos;
                self.pos += 1;
                let from = self.pos;
                while self.pos < self.text.len() && self.text[self.pos] != b'"' {
                    self.pos += 1;
                }
                if self.pos >= self.text.len() {
                    return Err(SexprError::new(start, "unterminated string"));
                }
                let s = std::str::from_utf8(&self.text[from..self.pos])
                    .map_err(|_| SexprError::new(start, "invalid utf-8 in string"))?
                    .to_string();
                self.pos += 1;
                Ok(Sexpr::Str(s))
            }
            _ => {
                let from = self.pos;
                while self.pos < self.text.len()
                    && !matches!(self.text[self.pos], b' ' | b'\t' | b'\n' | b'\r' | b'(' | b')' | b'"')
                {
                    self.pos += 1;
                }
                let word = std::str::from_utf8(&self.text[from..self.pos])
                    .map_err(|_| SexprError::new(from, "invalid utf-8 in token"))?;
                if word.bytes().all(|b| b.is_ascii_digit()) {
                    word.parse::<u64>()
                        .map(Sexpr::Num)
                        .map_err(|_| SexprError::new(from, "integer literal out of range"))
                } else {
                    Ok(Sexpr::Word(word.to_string()))
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_nested_lists() {
        let e = Sexpr::parse("(union (prog 0 2) (fin 1 2 3))").unwrap();
        assert_eq!(e.head(), Some("union"));
        let items = e.as_list().unwrap();
        assert_eq!(items[1].head(), Some("prog"));
        assert_eq!(items[2].as_list().unwrap()[3].as_num(), Some(3));
    }

    #[test]
    fn parses_strings_and_comments() {
        let e = Sexpr::parse("(periodic \"0110\" \"10\") ; tail comment").unwrap();
        assert_eq!(e.as_list().unwrap()[1].as_str(), Some("0110"));
    }

    #[test]
    fn reports_positions() {
        let err = Sexpr::parse("(a b").unwrap_err();
        assert_eq!(err.pos, 4);
        let err = Sexpr::parse("a)").unwrap_err();
        assert!(err.msg.contains("trailing"));
    }

    #[test]
    fn roundtrips_display() {
        let text = "(meet (card) (const 3))";
        let e = Sexpr::parse(text).unwrap();
        assert_eq!(e.to_string(), text);
    }
}
