//! Resistance networks: a finite connected graph with symmetric positive
//! conductances and a distinguished origin vertex.
//!
//! Vertices carry opaque identifiers (integers or strings) that are mapped to
//! dense indices `0..n` in order of first appearance in the edge list. Every
//! matrix and vector elsewhere in the crate is indexed by these dense indices.

mod generate;
mod io;

pub use generate::{random_connected, ConductanceProfile, Family};
pub use io::{load_network, load_network_csv, parse_network_csv, parse_network_json, save_network};

use std::collections::hash_map::DefaultHasher;
use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::{AddAssign, Mul, Sub};
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Opaque vertex identifier as it appears in input files.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VertexId {
    Int(i64),
    Name(String),
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VertexId::Int(i) => write!(f, "{i}"),
            VertexId::Name(s) => f.write_str(s),
        }
    }
}

impl FromStr for VertexId {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.trim().parse::<i64>() {
            Ok(i) => VertexId::Int(i),
            Err(_) => VertexId::Name(s.trim().to_string()),
        })
    }
}

impl From<i64> for VertexId {
    fn from(i: i64) -> Self {
        VertexId::Int(i)
    }
}

impl From<i32> for VertexId {
    fn from(i: i32) -> Self {
        VertexId::Int(i64::from(i))
    }
}

impl From<usize> for VertexId {
    fn from(i: usize) -> Self {
        VertexId::Int(i as i64)
    }
}

impl From<&str> for VertexId {
    fn from(s: &str) -> Self {
        VertexId::Name(s.to_string())
    }
}

impl From<String> for VertexId {
    fn from(s: String) -> Self {
        VertexId::Name(s)
    }
}

/// An undirected edge between dense vertex indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub conductance: f64,
}

/// A validated, immutable resistance network.
#[derive(Debug, Clone)]
pub struct Network {
    ids: Vec<VertexId>,
    index: HashMap<VertexId, usize>,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<(usize, f64)>>,
    total: Vec<f64>,
    origin: usize,
    fingerprint: u64,
}

impl PartialEq for Network {
    fn eq(&self, other: &Self) -> bool {
        self.ids == other.ids && self.edges == other.edges && self.origin == other.origin
    }
}

impl Network {
    /// Builds and validates a network from `(x, y, c_xy)` triples.
    ///
    /// Repeated edges (in either orientation) are merged when their
    /// conductances agree and rejected otherwise.
    pub fn new<I, V>(edge_list: I, origin: impl Into<VertexId>) -> Result<Self>
    where
        I: IntoIterator<Item = (V, V, f64)>,
        V: Into<VertexId>,
    {
        let origin = origin.into();
        let mut ids: Vec<VertexId> = Vec::new();
        let mut index: HashMap<VertexId, usize> = HashMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        let mut seen: HashMap<(usize, usize), usize> = HashMap::new();

        let mut intern = |id: VertexId, ids: &mut Vec<VertexId>| -> usize {
            *index.entry(id.clone()).or_insert_with(|| {
                ids.push(id);
                ids.len() - 1
            })
        };

        for (x, y, c) in edge_list {
            let (x, y) = (x.into(), y.into());
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::NonPositiveConductance {
                    x: x.to_string(),
                    y: y.to_string(),
                    conductance: c,
                });
            }
            if x == y {
                return Err(Error::SelfLoop(x.to_string()));
            }
            let a = intern(x, &mut ids);
            let b = intern(y, &mut ids);
            let key = (a.min(b), a.max(b));
            match seen.get(&key) {
                Some(&k) => {
                    let first = edges[k].conductance;
                    if (first - c).abs() > 1e-12 * first.max(c) {
                        return Err(Error::AsymmetricInput {
                            x: ids[a].to_string(),
                            y: ids[b].to_string(),
                            first,
                            second: c,
                        });
                    }
                }
                None => {
                    seen.insert(key, edges.len());
                    edges.push(Edge { a, b, conductance: c });
                }
            }
        }
        drop(intern);

        if edges.is_empty() {
            return Err(Error::EmptyEdgeList);
        }
        let origin = *index
            .get(&origin)
            .ok_or_else(|| Error::OriginMissing(origin.to_string()))?;

        let n = ids.len();
        let mut adjacency = vec![Vec::new(); n];
        let mut total = vec![0.0; n];
        for e in &edges {
            adjacency[e.a].push((e.b, e.conductance));
            adjacency[e.b].push((e.a, e.conductance));
            total[e.a] += e.conductance;
            total[e.b] += e.conductance;
        }

        let mut reached = vec![false; n];
        let mut queue = VecDeque::from([origin]);
        reached[origin] = true;
        while let Some(v) = queue.pop_front() {
            for &(w, _) in &adjacency[v] {
                if !reached[w] {
                    reached[w] = true;
                    queue.push_back(w);
                }
            }
        }
        if let Some(v) = reached.iter().position(|r| !r) {
            return Err(Error::Disconnected(ids[v].to_string()));
        }

        let mut hasher = DefaultHasher::new();
        ids.hash(&mut hasher);
        origin.hash(&mut hasher);
        for e in &edges {
            (e.a, e.b, e.conductance.to_bits()).hash(&mut hasher);
        }
        let fingerprint = hasher.finish();

        Ok(Network {
            ids,
            index,
            edges,
            adjacency,
            total,
            origin,
            fingerprint,
        })
    }

    /// Generates a canonical network family with the given conductance profile.
    pub fn generate(family: Family, profile: &ConductanceProfile) -> Result<Self> {
        generate::build(family, profile)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Dense index of the origin `o`.
    pub fn origin(&self) -> usize {
        self.origin
    }

    pub fn ids(&self) -> &[VertexId] {
        &self.ids
    }

    pub fn id(&self, i: usize) -> &VertexId {
        &self.ids[i]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Neighbors of `i` with the conductance of the connecting edge.
    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    /// Conductance `c_xy` between two dense indices (0 when not adjacent).
    pub fn conductance(&self, x: usize, y: usize) -> f64 {
        self.adjacency[x]
            .iter()
            .find(|&&(w, _)| w == y)
            .map_or(0.0, |&(_, c)| c)
    }

    /// Identifies the network; operands built on different networks have
    /// different fingerprints.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn index_of(&self, id: &VertexId) -> Result<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownVertex(id.to_string()))
    }

    /// Resolves a vertex written as text. Integer-looking text matches integer
    /// identifiers first, then string identifiers with the same spelling.
    pub fn resolve(&self, text: &str) -> Result<usize> {
        let id: VertexId = text.parse().unwrap_or_else(|e| match e {});
        if let Some(&i) = self.index.get(&id) {
            return Ok(i);
        }
        self.index
            .get(&VertexId::Name(text.trim().to_string()))
            .copied()
            .ok_or_else(|| Error::UnknownVertex(text.to_string()))
    }

    pub fn check_index(&self, i: usize) -> Result<()> {
        if i < self.len() {
            Ok(())
        } else {
            Err(Error::UnknownVertex(format!("#{i}")))
        }
    }

    /// Total conductance `c(x) = Σ_{y~x} c_xy`.
    pub fn total_conductance(&self, x: usize) -> Result<f64> {
        self.check_index(x)?;
        Ok(self.total[x])
    }

    /// Indices of `X = G \ {o}` in canonical order.
    pub fn non_origin(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| i != self.origin).collect()
    }

    /// `(Δu)(x) = Σ_{y~x} c_xy (u(x) − u(y))`.
    pub fn laplacian_apply<T>(&self, u: &[T]) -> Result<Vec<T>>
    where
        T: Copy + Default + Sub<Output = T> + Mul<f64, Output = T> + AddAssign,
    {
        if u.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: u.len(),
            });
        }
        Ok((0..self.len())
            .map(|x| {
                let mut acc = T::default();
                for &(y, c) in &self.adjacency[x] {
                    acc += (u[x] - u[y]) * c;
                }
                acc
            })
            .collect())
    }

    /// The Laplacian as a dense matrix: `c(x)` on the diagonal, `−c_xy` off it.
    pub fn laplacian_matrix(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut l = DMatrix::zeros(n, n);
        for e in &self.edges {
            l[(e.a, e.b)] -= e.conductance;
            l[(e.b, e.a)] -= e.conductance;
            l[(e.a, e.a)] += e.conductance;
            l[(e.b, e.b)] += e.conductance;
        }
        l
    }
}

/// A complex-valued function on the vertices of a specific network.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexFunction {
    values: Vec<Complex64>,
    fingerprint: u64,
}

impl VertexFunction {
    pub fn new(net: &Network, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != net.len() {
            return Err(Error::DimensionMismatch {
                expected: net.len(),
                got: values.len(),
            });
        }
        Ok(VertexFunction {
            values,
            fingerprint: net.fingerprint(),
        })
    }

    pub fn from_real(net: &Network, values: &[f64]) -> Result<Self> {
        Self::new(net, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn constant(net: &Network, c: Complex64) -> Self {
        VertexFunction {
            values: vec![c; net.len()],
            fingerprint: net.fingerprint(),
        }
    }

    /// Indicator `δ_x`.
    pub fn dirac(net: &Network, x: usize) -> Result<Self> {
        net.check_index(x)?;
        let mut values = vec![Complex64::new(0.0, 0.0); net.len()];
        values[x] = Complex64::new(1.0, 0.0);
        Ok(VertexFunction {
            values,
            fingerprint: net.fingerprint(),
        })
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn belongs_to(&self, net: &Network) -> Result<()> {
        if self.fingerprint == net.fingerprint() {
            Ok(())
        } else {
            Err(Error::NetworkMismatch)
        }
    }

    /// Applies the network Laplacian pointwise.
    pub fn laplacian(&self, net: &Network) -> Result<VertexFunction> {
        self.belongs_to(net)?;
        Ok(VertexFunction {
            values: net.laplacian_apply(&self.values)?,
            fingerprint: self.fingerprint,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p3() -> Network {
        Network::new([(0, 1, 1.0), (1, 2, 1.0)], 0).unwrap()
    }

    #[test]
    fn path_three_totals() {
        let net = p3();
        assert_eq!(net.len(), 3);
        assert_eq!(net.total_conductance(1).unwrap(), 2.0);
        assert_eq!(net.total_conductance(0).unwrap(), 1.0);
    }

    #[test]
    fn triangle_has_uniform_totals() {
        let net = Network::new([(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)], 0).unwrap();
        for x in 0..3 {
            assert_eq!(net.total_conductance(x).unwrap(), 2.0);
        }
    }

    #[test]
    fn duplicate_with_different_weight_is_rejected() {
        let err = Network::new([(0, 1, 2.0), (1, 2, 2.0), (0, 1, 3.0)], 0).unwrap_err();
        assert!(matches!(err, Error::AsymmetricInput { .. }), "{err}");
    }

    #[test]
    fn equal_duplicates_merge() {
        let net = Network::new([(0, 1, 2.0), (1, 0, 2.0), (1, 2, 1.0)], 0).unwrap();
        assert_eq!(net.edges().len(), 2);
        assert_eq!(net.total_conductance(1).unwrap(), 3.0);
    }

    #[test]
    fn validation_errors() {
        assert!(matches!(
            Network::new([(0, 1, -1.0)], 0),
            Err(Error::NonPositiveConductance { .. })
        ));
        assert!(matches!(
            Network::new([(0, 1, 0.0)], 0),
            Err(Error::NonPositiveConductance { .. })
        ));
        assert!(matches!(Network::new([(1, 1, 1.0)], 1), Err(Error::SelfLoop(_))));
        assert!(matches!(
            Network::new([(0, 1, 1.0), (2, 3, 1.0)], 0),
            Err(Error::Disconnected(_))
        ));
        assert!(matches!(
            Network::new([(0, 1, 1.0)], 7),
            Err(Error::OriginMissing(_))
        ));
        assert!(matches!(
            Network::new(Vec::<(i64, i64, f64)>::new(), 0),
            Err(Error::EmptyEdgeList)
        ));
    }

    #[test]
    fn unknown_vertex() {
        assert!(matches!(p3().total_conductance(9), Err(Error::UnknownVertex(_))));
        assert!(p3().resolve("q").is_err());
    }

    #[test]
    fn insertion_order_is_stable() {
        let net = Network::new([("b", "a", 1.0), ("a", "c", 2.0)], "a").unwrap();
        let ids: Vec<String> = net.ids().iter().map(|v| v.to_string()).collect();
        assert_eq!(ids, ["b", "a", "c"]);
        assert_eq!(net.origin(), 1);
        assert_eq!(net.resolve("c").unwrap(), 2);
    }

    #[test]
    fn laplacian_examples() {
        let net = p3();
        assert_eq!(net.laplacian_apply(&[1.0, 1.0, 1.0]).unwrap(), vec![0.0; 3]);
        assert_eq!(
            net.laplacian_apply(&[0.0, 1.0, 1.0]).unwrap(),
            vec![-1.0, 1.0, 0.0]
        );
        assert_eq!(
            net.laplacian_apply(&[0.0, 1.0, 2.0]).unwrap(),
            vec![-1.0, 0.0, 1.0]
        );
        assert!(net.laplacian_apply(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn laplacian_diagonal_is_total_conductance() {
        let net = Network::new([(0, 1, 2.5), (1, 2, 0.5), (2, 0, 1.0), (2, 3, 4.0)], 0).unwrap();
        let l = net.laplacian_matrix();
        for x in 0..net.len() {
            let mut e = vec![0.0; net.len()];
            e[x] = 1.0;
            let col = net.laplacian_apply(&e).unwrap();
            assert_eq!(col[x], net.total_conductance(x).unwrap());
            assert_eq!(l[(x, x)], col[x]);
        }
    }

    #[test]
    fn vertex_function_mismatch() {
        let a = p3();
        let b = Network::new([(0, 1, 1.0), (1, 2, 2.0)], 0).unwrap();
        let f = VertexFunction::from_real(&a, &[0.0, 1.0, 2.0]).unwrap();
        assert!(matches!(f.laplacian(&b), Err(Error::NetworkMismatch)));
        let lf = f.laplacian(&a).unwrap();
        assert_eq!(lf.values()[2], Complex64::new(1.0, 0.0));
    }
}
