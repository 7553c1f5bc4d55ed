//! Built-in coupling-graph families.

use std::fmt;
use std::str::FromStr;

use crate::topology::{CouplingGraph, Edge, TopologyError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopologyFamily {
    Line(u32),
    Ring(u32),
    Star(u32),
    Grid {
        width: u32,
        height: u32,
    },
    /// Brick-wall patch: rows of `cols` nodes, with a vertical bond below
    /// `(r, c)` whenever `r + c` is even.
    Honeycomb {
        rows: u32,
        cols: u32,
    },
    /// Complete `arity`-ary tree of the given height, numbered breadth-first.
    KaryTree {
        arity: u32,
        height: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FamilyError {
    #[error("cannot parse family `{0}`; expected e.g. line(5), grid(3,3), kary(2,3)")]
    Syntax(String),
    #[error("unknown family `{0}`")]
    Unknown(String),
    #[error("family `{name}` takes {expected} parameter(s), got {got}")]
    Arity { name: String, expected: usize, got: usize },
    #[error("{0}")]
    Parameter(String),
}

impl TopologyFamily {
    pub fn node_count(&self) -> u32 {
        match *self {
            TopologyFamily::Line(n) | TopologyFamily::Ring(n) | TopologyFamily::Star(n) => n,
            TopologyFamily::Grid { width, height } => width * height,
            TopologyFamily::Honeycomb { rows, cols } => rows * cols,
            TopologyFamily::KaryTree { arity, height } => kary_size(arity, height),
        }
    }

    fn check(&self) -> Result<(), FamilyError> {
        let bad = |m: &str| Err(FamilyError::Parameter(m.to_string()));
        match *self {
            TopologyFamily::Line(0) | TopologyFamily::Star(0) => bad("node count must be positive"),
            TopologyFamily::Ring(n) if n < 3 => bad("a ring needs at least 3 nodes"),
            TopologyFamily::Grid { width, height } if width == 0 || height == 0 => bad("grid sides must be positive"),
            TopologyFamily::Honeycomb { rows, cols } if rows == 0 || cols == 0 => {
                bad("honeycomb sides must be positive")
            }
            TopologyFamily::Honeycomb { rows, cols: 1 } if rows > 1 => {
                bad("a honeycomb patch with several rows needs at least 2 columns")
            }
            TopologyFamily::KaryTree { arity: 0, .. } => bad("tree arity must be positive"),
            _ => Ok(()),
        }
    }

    pub fn edges(&self) -> Vec<Edge> {
        match *self {
            TopologyFamily::Line(n) => (1..n).map(|i| Edge::of(i, i + 1)).collect(),
            TopologyFamily::Ring(n) => {
                let mut e: Vec<Edge> = (1..n).map(|i| Edge::of(i, i + 1)).collect();
                e.push(Edge::of(1, n));
                e
            }
            TopologyFamily::Star(n) => (2..=n).map(|i| Edge::of(1, i)).collect(),
            TopologyFamily::Grid { width, height } => {
                let id = |r: u32, c: u32| r * width + c + 1;
                let mut e = Vec::new();
                for r in 0..height {
                    for c in 0..width {
                        if c + 1 < width {
                            e.push(Edge::of(id(r, c), id(r, c + 1)));
                        }
                        if r + 1 < height {
                            e.push(Edge::of(id(r, c), id(r + 1, c)));
                        }
                    }
                }
                e
            }
            TopologyFamily::Honeycomb { rows, cols } => {
                let id = |r: u32, c: u32| r * cols + c + 1;
                let mut e = Vec::new();
                for r in 0..rows {
                    for c in 0..cols {
                        if c + 1 < cols {
                            e.push(Edge::of(id(r, c), id(r, c + 1)));
                        }
                        if r + 1 < rows && (r + c) % 2 == 0 {
                            e.push(Edge::of(id(r, c), id(r + 1, c)));
                        }
                    }
                }
                e
            }
            TopologyFamily::KaryTree { arity, height } => {
                (2..=kary_size(arity, height)).map(|i| Edge::of((i - 2) / arity + 1, i)).collect()
            }
        }
    }

    pub fn graph(&self) -> Result<CouplingGraph, TopologyError> {
        CouplingGraph::from_edges(self.node_count(), self.edges())
    }

    /// Smallest instance of the family with `n` nodes, if the family has one.
    /// `template` fixes the shape parameter that is not swept (grid width,
    /// honeycomb rows, tree arity).
    pub fn with_nodes(template: &TopologyFamily, n: u32) -> Option<TopologyFamily> {
        let f = match *template {
            TopologyFamily::Line(_) => TopologyFamily::Line(n),
            TopologyFamily::Ring(_) => TopologyFamily::Ring(n),
            TopologyFamily::Star(_) => TopologyFamily::Star(n),
            TopologyFamily::Grid { width, .. } if n.is_multiple_of(width) => {
                TopologyFamily::Grid { width, height: n / width }
            }
            TopologyFamily::Honeycomb { rows, .. } if n.is_multiple_of(rows) => {
                TopologyFamily::Honeycomb { rows, cols: n / rows }
            }
            TopologyFamily::KaryTree { arity, .. } => {
                let height = (0..n).find(|&h| kary_size(arity, h) >= n)?;
                if kary_size(arity, height) != n {
                    return None;
                }
                TopologyFamily::KaryTree { arity, height }
            }
            _ => return None,
        };
        f.check().ok().map(|_| f)
    }
}

fn kary_size(arity: u32, height: u32) -> u32 {
    (0..=height).map(|l| arity.saturating_pow(l)).fold(0u32, u32::saturating_add)
}

impl fmt::Display for TopologyFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            TopologyFamily::Line(n) => write!(f, "line({n})"),
            TopologyFamily::Ring(n) => write!(f, "ring({n})"),
            TopologyFamily::Star(n) => write!(f, "star({n})"),
            TopologyFamily::Grid { width, height } => write!(f, "grid({width},{height})"),
            TopologyFamily::Honeycomb { rows, cols } => write!(f, "honeycomb({rows},{cols})"),
            TopologyFamily::KaryTree { arity, height } => write!(f, "kary({arity},{height})"),
        }
    }
}

/// Family name plus however many parameters were given, e.g. `grid(3)`.
pub(crate) fn split_spec(s: &str) -> Result<(String, Vec<u32>), FamilyError> {
    let s = s.trim();
    let syntax = || FamilyError::Syntax(s.to_string());
    let (name, params) = match s.find('(') {
        None => (s, Vec::new()),
        Some(open) => {
            let inner = s[open + 1..].strip_suffix(')').ok_or_else(syntax)?;
            let params = inner
                .split(',')
                .map(|p| p.trim().parse::<u32>().map_err(|_| syntax()))
                .collect::<Result<Vec<_>, _>>()?;
            (&s[..open], params)
        }
    };
    let name = match name.trim() {
        "line" | "path" => "line",
        "ring" | "cycle" => "ring",
        "star" => "star",
        "grid" => "grid",
        "honeycomb" | "honeycomb_patch" => "honeycomb",
        "kary" | "complete_kary_tree" => "kary",
        other => return Err(FamilyError::Unknown(other.to_string())),
    };
    Ok((name.to_string(), params))
}

/// Builds a family from a name and a possibly partial parameter list; the
/// missing node-count parameter defaults to 1 for sweep templates.
pub(crate) fn build(name: &str, params: &[u32], partial: bool) -> Result<TopologyFamily, FamilyError> {
    let expected = match name {
        "line" | "ring" | "star" => 1,
        _ => 2,
    };
    let got = params.len();
    if got != expected && !(partial && got + 1 == expected) {
        return Err(FamilyError::Arity { name: name.to_string(), expected, got });
    }
    let p = |i: usize| params.get(i).copied().unwrap_or(1);
    let f = match name {
        "line" => TopologyFamily::Line(p(0)),
        "ring" => TopologyFamily::Ring(if got == 0 { 3 } else { p(0) }),
        "star" => TopologyFamily::Star(p(0)),
        "grid" => TopologyFamily::Grid { width: p(0), height: p(1) },
        "honeycomb" => TopologyFamily::Honeycomb { rows: p(0), cols: if got < 2 { 2 } else { p(1) } },
        "kary" => TopologyFamily::KaryTree { arity: p(0), height: p(1) },
        _ => unreachable!("names are normalized by split_spec"),
    };
    if !partial {
        f.check()?;
    }
    Ok(f)
}

impl FromStr for TopologyFamily {
    type Err = FamilyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, params) = split_spec(s)?;
        build(&name, &params, false)
    }
}
