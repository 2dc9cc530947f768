//! Line-oriented text model files.
//!
//! All model formats share the same lexical rules: one record per line,
//! whitespace separated tokens, `#` starts a comment, blank lines are
//! ignored. Errors carry the 1-based physical line number.

use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            message: message.into(),
        }
    }
}

pub(crate) struct Records<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    last_line: usize,
}

#[derive(Debug)]
pub(crate) struct Record<'a> {
    pub line: usize,
    pub tokens: Vec<&'a str>,
}

impl<'a> Records<'a> {
    pub fn new(text: &'a str) -> Self {
        Self {
            lines: text.lines().enumerate(),
            last_line: 0,
        }
    }

    /// Next non-empty record, or an "unexpected end of file" error.
    pub fn expect(&mut self, what: &str) -> Result<Record<'a>, ParseError> {
        match self.next() {
            Some(r) => Ok(r),
            None => Err(ParseError::new(
                self.last_line + 1,
                format!("unexpected end of file, expected {what}"),
            )),
        }
    }

    /// Errors if any record remains.
    pub fn finish(mut self) -> Result<(), ParseError> {
        match self.next() {
            Some(r) => Err(ParseError::new(r.line, "unexpected trailing record")),
            None => Ok(()),
        }
    }
}

impl<'a> Iterator for Records<'a> {
    type Item = Record<'a>;

    fn next(&mut self) -> Option<Record<'a>> {
        for (i, raw) in self.lines.by_ref() {
            self.last_line = i + 1;
            let content = raw.split('#').next().unwrap_or("");
            let tokens: Vec<&str> = content.split_whitespace().collect();
            if !tokens.is_empty() {
                return Some(Record {
                    line: i + 1,
                    tokens,
                });
            }
        }
        None
    }
}

impl<'a> Record<'a> {
    /// Checks the leading keyword and the total token count.
    pub fn keyword(&self, kw: &str, arity: usize) -> Result<(), ParseError> {
        if self.tokens[0] != kw {
            return Err(ParseError::new(
                self.line,
                format!("expected `{kw}`, found `{}`", self.tokens[0]),
            ));
        }
        if self.tokens.len() != arity + 1 {
            return Err(ParseError::new(
                self.line,
                format!(
                    "`{kw}` takes {arity} fields, found {}",
                    self.tokens.len() - 1
                ),
            ));
        }
        Ok(())
    }

    pub fn parse<T: FromStr>(&self, idx: usize, what: &str) -> Result<T, ParseError> {
        let tok = self
            .tokens
            .get(idx)
            .ok_or_else(|| ParseError::new(self.line, format!("missing {what}")))?;
        tok.parse::<T>()
            .map_err(|_| ParseError::new(self.line, format!("invalid {what} `{tok}`")))
    }

    pub fn parse_all_f64(&self) -> Result<Vec<f64>, ParseError> {
        (0..self.tokens.len())
            .map(|i| self.parse::<f64>(i, "number"))
            .collect()
    }
}

/// Formats an `f64` so that parsing it back yields the same bits.
pub(crate) fn fmt_f64(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:?}")
    }
}
