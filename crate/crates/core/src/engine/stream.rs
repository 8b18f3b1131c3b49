use std::fmt;
use std::path::Path;

use crate::error::{parse_err, Result};
use crate::graph::{content_lines, VertexId};

/// One line of an update stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Update {
    /// Un-annotated flip; the maintained cost becomes unknown until the next
    /// rebuild in amortized mode.
    Flip(VertexId, VertexId),
    Insert(VertexId, VertexId),
    Delete(VertexId, VertexId),
    Query,
}

impl Update {
    pub fn pair(&self) -> Option<(VertexId, VertexId)> {
        match *self {
            Update::Flip(u, v) | Update::Insert(u, v) | Update::Delete(u, v) => Some((u, v)),
            Update::Query => None,
        }
    }
}

impl fmt::Display for Update {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Update::Flip(u, v) => write!(f, "F {u} {v}"),
            Update::Insert(u, v) => write!(f, "+ {u} {v}"),
            Update::Delete(u, v) => write!(f, "- {u} {v}"),
            Update::Query => f.write_str("Q"),
        }
    }
}

/// Parses `F u v`, `+ u v`, `- u v` and `Q` lines; `#` starts a comment.
pub fn parse_stream(text: &str) -> Result<Vec<Update>> {
    let mut out = Vec::new();
    for (ln, line) in content_lines(text) {
        let mut it = line.split_whitespace();
        let op = it.next().expect("content lines are non-empty");
        let mut vertex = || -> Result<VertexId> {
            let t = it.next().ok_or_else(|| parse_err(ln, "expected two vertices"))?;
            t.parse().map_err(|_| parse_err(ln, format!("bad vertex {t:?}")))
        };
        let up = match op {
            "Q" => Update::Query,
            "F" | "+" | "-" => {
                let (u, v) = (vertex()?, vertex()?);
                match op {
                    "F" => Update::Flip(u, v),
                    "+" => Update::Insert(u, v),
                    _ => Update::Delete(u, v),
                }
            }
            _ => return Err(parse_err(ln, format!("unknown operation {op:?}"))),
        };
        if it.next().is_some() {
            return Err(parse_err(ln, "trailing tokens"));
        }
        out.push(up);
    }
    Ok(out)
}

pub fn read_stream(path: &Path) -> Result<Vec<Update>> {
    parse_stream(&std::fs::read_to_string(path)?)
}

pub fn format_stream(updates: &[Update]) -> String {
    let mut s = String::new();
    for u in updates {
        s.push_str(&u.to_string());
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let ups = vec![Update::Flip(0, 1), Update::Insert(2, 3), Update::Delete(1, 0), Update::Query];
        assert_eq!(parse_stream(&format_stream(&ups)).unwrap(), ups);
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(parse_stream("F 1").is_err());
        assert!(parse_stream("X 1 2").is_err());
        assert!(parse_stream("Q 1").is_err());
        assert!(parse_stream("+ 1 a").is_err());
        assert_eq!(parse_stream("# header\n\nQ # trailing\n").unwrap(), vec![Update::Query]);
    }
}
