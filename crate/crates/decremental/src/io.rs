//! Plain-text graph and deletion-trace files.
//!
//! Graph file: a header line `n m`, then `m` lines `u v` with 0-based ids.
//! Trace file: one `u v` per line. Blank lines and `#` comments are ignored.

use std::fmt::Write as _;

use thiserror::Error;

use crate::graph::Edge;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

pub(crate) fn err(line: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        message: message.into(),
    }
}

pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

pub(crate) fn parse_pair(line: usize, text: &str) -> Result<(usize, usize), ParseError> {
    let mut parts = text.split_whitespace();
    let a = parts.next().ok_or_else(|| err(line, "expected two integers"))?;
    let b = parts.next().ok_or_else(|| err(line, "expected two integers"))?;
    if parts.next().is_some() {
        return Err(err(line, "expected exactly two integers"));
    }
    let a = a
        .parse()
        .map_err(|_| err(line, format!("not a nonnegative integer: {a:?}")))?;
    let b = b
        .parse()
        .map_err(|_| err(line, format!("not a nonnegative integer: {b:?}")))?;
    Ok((a, b))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphFile {
    pub n: usize,
    pub edges: Vec<Edge>,
}

pub fn parse_graph(text: &str) -> Result<GraphFile, ParseError> {
    let mut lines = content_lines(text);
    let (hl, header) = lines.next().ok_or_else(|| err(1, "missing header `n m`"))?;
    let (n, m) = parse_pair(hl, header)?;
    let mut edges = Vec::with_capacity(m);
    for (line, l) in lines {
        let (u, v) = parse_pair(line, l)?;
        if u >= n || v >= n {
            return Err(err(line, format!("vertex out of range for n={n}")));
        }
        edges.push(Edge::new(u, v));
    }
    if edges.len() != m {
        return Err(err(
            hl,
            format!("header announces {m} edges but {} were listed", edges.len()),
        ));
    }
    Ok(GraphFile { n, edges })
}

pub fn parse_trace(text: &str) -> Result<Vec<Edge>, ParseError> {
    content_lines(text)
        .map(|(line, l)| parse_pair(line, l).map(|(u, v)| Edge::new(u, v)))
        .collect()
}

pub fn format_graph(n: usize, edges: &[Edge]) -> String {
    let mut out = format!("{} {}\n", n, edges.len());
    for e in edges {
        let _ = writeln!(out, "{} {}", e.u, e.v);
    }
    out
}

pub fn format_trace(trace: &[Edge]) -> String {
    let mut out = String::new();
    for e in trace {
        let _ = writeln!(out, "{} {}", e.u, e.v);
    }
    out
}
