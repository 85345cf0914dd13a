//! Shared plain-text parameter format.
//!
//! A file is a header line `kind key=value key=value ...` followed by one
//! hex-float value per line in a fixed, kind-specific order.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::hexfloat;

pub(crate) struct Header {
    pub kind: String,
    fields: BTreeMap<String, String>,
}

impl Header {
    pub fn field(&self, key: &str) -> Result<&str> {
        self.fields.get(key).map(String::as_str).ok_or_else(|| Error::Parse {
            line: 1,
            msg: format!("header is missing `{key}`"),
        })
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        self.field(key)?.parse().map_err(|_| Error::Parse {
            line: 1,
            msg: format!("`{key}` is not an integer"),
        })
    }

    pub fn usize_list(&self, key: &str) -> Result<Vec<usize>> {
        self.field(key)?
            .split(',')
            .map(|t| {
                t.parse().map_err(|_| Error::Parse {
                    line: 1,
                    msg: format!("`{key}` is not a list of integers"),
                })
            })
            .collect()
    }

    pub fn float(&self, key: &str) -> Result<f64> {
        hexfloat::parse(self.field(key)?).map_err(|e| Error::Parse {
            line: 1,
            msg: e.to_string(),
        })
    }
}

pub(crate) fn write_header(kind: &str, fields: &[(&str, String)]) -> String {
    let mut s = kind.to_string();
    for (k, v) in fields {
        s.push(' ');
        s.push_str(k);
        s.push('=');
        s.push_str(v);
    }
    s.push('\n');
    s
}

pub(crate) fn join_usize(values: &[usize]) -> String {
    values.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

pub(crate) fn write_values(out: &mut String, values: impl IntoIterator<Item = f64>) {
    for v in values {
        out.push_str(&hexfloat::format(v));
        out.push('\n');
    }
}

/// Splits a document into its header and the value lines that follow.
pub(crate) fn read(text: &str) -> Result<(Header, ValueReader<'_>)> {
    let mut lines = text.lines().enumerate();
    let (_, first) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty document".into(),
    })?;
    let mut tokens = first.split_whitespace();
    let kind = tokens
        .next()
        .ok_or(Error::Parse {
            line: 1,
            msg: "missing kind".into(),
        })?
        .to_string();
    let mut fields = BTreeMap::new();
    for tok in tokens {
        let (k, v) = tok.split_once('=').ok_or_else(|| Error::Parse {
            line: 1,
            msg: format!("expected key=value, got `{tok}`"),
        })?;
        fields.insert(k.to_string(), v.to_string());
    }
    Ok((Header { kind, fields }, ValueReader { lines }))
}

pub(crate) struct ValueReader<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl ValueReader<'_> {
    pub fn next(&mut self) -> Result<f64> {
        let (i, line) = self.lines.next().ok_or(Error::Parse {
            line: 0,
            msg: "unexpected end of parameters".into(),
        })?;
        hexfloat::parse(line).map_err(|e| Error::Parse {
            line: i + 1,
            msg: e.to_string(),
        })
    }

    pub fn take(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.next()).collect()
    }

    pub fn finish(mut self) -> Result<()> {
        match self.lines.find(|(_, l)| !l.trim().is_empty()) {
            None => Ok(()),
            Some((i, _)) => Err(Error::Parse {
                line: i + 1,
                msg: "trailing data after parameters".into(),
            }),
        }
    }
}
