//! Line-oriented key/value format shared by scene files and experiment
//! config files.
//!
//! Each non-blank line is a key followed by whitespace-separated arguments.
//! `#` starts a comment that runs to the end of the line.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
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

/// One meaningful line of a key/value file.
#[derive(Debug, Clone, PartialEq)]
pub struct Line<'a> {
    /// 1-based line number in the source text.
    pub number: usize,
    pub key: &'a str,
    pub args: Vec<&'a str>,
}

impl<'a> Line<'a> {
    pub fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError::new(self.number, message)
    }

    pub fn expect_args(&self, count: usize) -> Result<(), ParseError> {
        if self.args.len() != count {
            return Err(self.error(format!(
                "`{}` expects {} argument(s), found {}",
                self.key,
                count,
                self.args.len()
            )));
        }
        Ok(())
    }

    pub fn arg<T>(&self, index: usize) -> Result<T, ParseError>
    where
        T: FromStr,
        T::Err: fmt::Display,
    {
        let raw = self.args.get(index).ok_or_else(|| {
            self.error(format!("`{}` is missing argument {}", self.key, index + 1))
        })?;
        raw.parse::<T>()
            .map_err(|e| self.error(format!("`{}`: cannot parse `{raw}`: {e}", self.key)))
    }

    /// Parses a single-argument line.
    pub fn single<T>(&self) -> Result<T, ParseError>
    where
        T: FromStr,
        T::Err: fmt::Display,
    {
        self.expect_args(1)?;
        self.arg(0)
    }

    pub fn single_float(&self) -> Result<f64, ParseError> {
        self.expect_args(1)?;
        self.float(0)
    }

    /// Parses a finite float argument.
    pub fn float(&self, index: usize) -> Result<f64, ParseError> {
        let value: f64 = self.arg(index)?;
        if !value.is_finite() {
            return Err(self.error(format!("`{}`: value must be finite", self.key)));
        }
        Ok(value)
    }
}

pub fn lines(text: &str) -> Vec<Line<'_>> {
    text.lines()
        .enumerate()
        .filter_map(|(idx, raw)| {
            let content = raw.split('#').next().unwrap_or("");
            let mut tokens = content.split_whitespace();
            let key = tokens.next()?;
            Some(Line {
                number: idx + 1,
                key,
                args: tokens.collect(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn skips_comments_and_blank_lines() {
        let parsed = lines("# header\n\nbounds 0 0 10 10 # trailing\n  end\n");
        assert_eq!(parsed.len(), 2);
        assert_eq!(parsed[0].number, 3);
        assert_eq!(parsed[0].key, "bounds");
        assert_eq!(parsed[0].args, vec!["0", "0", "10", "10"]);
        assert_eq!(parsed[1].key, "end");
        assert!(parsed[1].args.is_empty());
    }

    #[test]
    fn argument_errors_carry_line_numbers() {
        let parsed = lines("\nmax_steps abc\n");
        let err = parsed[0].single::<usize>().unwrap_err();
        assert_eq!(err.line, 2);
        let err = parsed[0].expect_args(2).unwrap_err();
        assert!(err.message.contains("expects 2"));
    }

    #[test]
    fn rejects_non_finite_floats() {
        let parsed = lines("gamma inf");
        assert!(parsed[0].float(0).is_err());
    }
}
