use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Network;
use crate::error::{Error, Result};

/// Canonical network families. Vertices are labeled by integers; the origin is
/// vertex 0 (the root for trees).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// `n` vertices `0..n` in a line.
    Path(usize),
    /// `n` vertices `0..n` in a ring.
    Cycle(usize),
    /// The truncation `{0, …, n}` of the integer lattice.
    IntegerSegment(usize),
    /// Complete binary tree with `2^(depth+1) − 1` vertices, heap-labeled.
    BinaryTree(usize),
}

impl FromStr for Family {
    type Err = Error;

    /// Parses `path:3`, `cycle:5`, `integer_segment:8`, `binary_tree:2`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, size) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidArgument(format!("generator '{s}' needs the form family:size")))?;
        let size: usize = size
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad generator size in '{s}'")))?;
        match name.trim() {
            "path" => Ok(Family::Path(size)),
            "cycle" => Ok(Family::Cycle(size)),
            "integer_segment" | "segment" => Ok(Family::IntegerSegment(size)),
            "binary_tree" | "tree" => Ok(Family::BinaryTree(size)),
            other => Err(Error::InvalidArgument(format!("unknown family '{other}'"))),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Path(n) => write!(f, "path:{n}"),
            Family::Cycle(n) => write!(f, "cycle:{n}"),
            Family::IntegerSegment(n) => write!(f, "integer_segment:{n}"),
            Family::BinaryTree(d) => write!(f, "binary_tree:{d}"),
        }
    }
}

/// How edge conductances are assigned by the generators.
#[derive(Debug, Clone, PartialEq)]
pub enum ConductanceProfile {
    Unit,
    Constant(f64),
    /// Independent uniform draws from `[lo, hi)`, seeded.
    Uniform { lo: f64, hi: f64, seed: u64 },
}

impl FromStr for ConductanceProfile {
    type Err = Error;

    /// Parses `unit`, `const:2.5`, `uniform:0.5:2:42`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let num = |t: &str| {
            t.parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("bad number '{t}' in profile '{s}'")))
        };
        match parts.as_slice() {
            ["unit"] => Ok(ConductanceProfile::Unit),
            ["const", c] => Ok(ConductanceProfile::Constant(num(c)?)),
            ["uniform", lo, hi, seed] => Ok(ConductanceProfile::Uniform {
                lo: num(lo)?,
                hi: num(hi)?,
                seed: seed
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("bad seed in '{s}'")))?,
            }),
            _ => Err(Error::InvalidArgument(format!("unknown conductance profile '{s}'"))),
        }
    }
}

impl ConductanceProfile {
    fn weights(&self) -> Result<Box<dyn FnMut() -> f64>> {
        match *self {
            ConductanceProfile::Unit => Ok(Box::new(|| 1.0)),
            ConductanceProfile::Constant(c) => {
                if !(c.is_finite() && c > 0.0) {
                    return Err(Error::InvalidArgument(format!("conductance {c} must be positive")));
                }
                Ok(Box::new(move || c))
            }
            ConductanceProfile::Uniform { lo, hi, seed } => {
                if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
                    return Err(Error::InvalidArgument(format!(
                        "uniform profile needs 0 < lo <= hi, got [{lo}, {hi})"
                    )));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                Ok(Box::new(move || {
                    if hi > lo {
                        rng.random_range(lo..hi)
                    } else {
                        lo
                    }
                }))
            }
        }
    }
}

pub(super) fn build(family: Family, profile: &ConductanceProfile) -> Result<Network> {
    let mut w = profile.weights()?;
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    match family {
        Family::Path(n) => {
            if n < 2 {
                return Err(Error::InvalidSize(format!("path needs n >= 2, got {n}")));
            }
            edges.extend((0..n - 1).map(|i| (i, i + 1, w())));
        }
        Family::Cycle(n) => {
            if n < 3 {
                return Err(Error::InvalidSize(format!("cycle needs n >= 3, got {n}")));
            }
            edges.extend((0..n).map(|i| (i, (i + 1) % n, w())));
        }
        Family::IntegerSegment(n) => {
            if n < 1 {
                return Err(Error::InvalidSize(format!(
                    "integer segment needs n >= 1, got {n}"
                )));
            }
            edges.extend((0..n).map(|i| (i, i + 1, w())));
        }
        Family::BinaryTree(depth) => {
            if depth < 1 {
                return Err(Error::InvalidSize(format!(
                    "binary tree needs depth >= 1, got {depth}"
                )));
            }
            let n = (1usize << (depth + 1)) - 1;
            edges.extend((1..n).map(|i| ((i - 1) / 2, i, w())));
        }
    }
    Network::new(edges, 0usize)
}

/// A seeded random connected network: a random spanning tree on `n` vertices
/// plus `extra_edges` additional distinct edges, conductances uniform in
/// `[lo, hi)`. Origin is vertex 0.
pub fn random_connected(n: usize, extra_edges: usize, lo: f64, hi: f64, seed: u64) -> Result<Network> {
    if n < 2 {
        return Err(Error::InvalidSize(format!("random network needs n >= 2, got {n}")));
    }
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidArgument(format!("need 0 < lo < hi, got [{lo}, {hi})")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    let mut edges = Vec::new();
    for i in 1..n {
        let j = rng.random_range(0..i);
        seen.insert((j, i));
        edges.push((j, i, rng.random_range(lo..hi)));
    }
    let max_extra = n * (n - 1) / 2 - (n - 1);
    let target = extra_edges.min(max_extra);
    let mut added = 0;
    while added < target {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a == b {
            continue;
        }
        let key = (a.min(b), a.max(b));
        if seen.insert(key) {
            edges.push((key.0, key.1, rng.random_range(lo..hi)));
            added += 1;
        }
    }
    Network::new(edges, 0usize)
}
