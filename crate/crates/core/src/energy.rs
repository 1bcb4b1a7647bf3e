//! The energy Hilbert space of a network.
//!
//! Elements are stored by their grounded representative (value 0 at the
//! origin). Energies are always evaluated by the edge sum
//! `E(u, v) = Σ_{edges} c_xy conj(u(x) − u(y)) (v(x) − v(y))`, never through
//! `⟨u, Δu⟩`.
//!
//! [`EnergySpace`] wraps a network together with a factorization of the
//! grounded Laplacian and a cache of energy-kernel vectors `v_x`, which solve
//! `Δ v_x = δ_x − δ_o`.

use std::collections::{HashMap, HashSet};
use std::sync::{Arc, OnceLock, RwLock};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::network::{Network, VertexFunction};
use crate::numkernel::{spd_solve, sqrtm_psd, Cholesky, SymMatrix};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Grounded representative of a finite-energy class, with its energy.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyVector {
    values: Vec<Complex64>,
    energy: f64,
    fingerprint: u64,
}

impl EnergyVector {
    /// Grounds `values` at the origin and computes the energy.
    pub fn new(net: &Network, mut values: Vec<Complex64>) -> Result<Self> {
        if values.len() != net.len() {
            return Err(Error::DimensionMismatch {
                expected: net.len(),
                got: values.len(),
            });
        }
        let at_origin = values[net.origin()];
        if at_origin != ZERO {
            values.iter_mut().for_each(|v| *v -= at_origin);
        }
        let energy = energy_sum(net, &values, &values).re;
        Ok(EnergyVector {
            values,
            energy,
            fingerprint: net.fingerprint(),
        })
    }

    pub fn from_real(net: &Network, values: &[f64]) -> Result<Self> {
        Self::new(net, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn from_function(net: &Network, f: &VertexFunction) -> Result<Self> {
        f.belongs_to(net)?;
        Self::new(net, f.values().to_vec())
    }

    pub fn zero(net: &Network) -> Self {
        EnergyVector {
            values: vec![ZERO; net.len()],
            energy: 0.0,
            fingerprint: net.fingerprint(),
        }
    }

    /// Grounded values, indexed by dense vertex index.
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn get(&self, x: usize) -> Complex64 {
        self.values[x]
    }

    /// `E(u, u)`.
    pub fn energy(&self) -> f64 {
        self.energy
    }

    /// `‖u‖_E`.
    pub fn norm(&self) -> f64 {
        self.energy.max(0.0).sqrt()
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

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }

    /// `‖u‖_∞ = sup_x |u(x) − u(o)|`.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `‖u‖_A = ‖u‖_∞ + ‖u‖_E`.
    pub fn banach_norm(&self) -> f64 {
        self.sup_norm() + self.norm()
    }

    pub fn to_json(&self, net: &Network) -> Value {
        let mut map = Map::new();
        for (i, v) in self.values.iter().enumerate() {
            map.insert(net.id(i).to_string(), scalar_to_json(*v));
        }
        let mut doc = Map::new();
        doc.insert("values".into(), Value::Object(map));
        Value::Object(doc)
    }

    /// Parses `{"values": {<vertex>: <float|[re,im]>}}`; every vertex is required.
    pub fn from_json(net: &Network, text: &str) -> Result<Self> {
        let values = parse_vertex_map(net, text, "values", true)?;
        Self::new(net, values)
    }
}

pub(crate) fn scalar_to_json(v: Complex64) -> Value {
    if v.im == 0.0 {
        Value::from(v.re)
    } else {
        Value::from(vec![v.re, v.im])
    }
}

fn scalar_from_json(v: &Value, context: &str) -> Result<Complex64> {
    let bad = || Error::Parse {
        context: context.to_string(),
        message: "expected a number or [re, im]".into(),
    };
    match v {
        Value::Number(n) => n.as_f64().map(|re| Complex64::new(re, 0.0)).ok_or_else(bad),
        Value::Array(a) if a.len() == 2 => {
            let re = a[0].as_f64().ok_or_else(bad)?;
            let im = a[1].as_f64().ok_or_else(bad)?;
            Ok(Complex64::new(re, im))
        }
        _ => Err(bad()),
    }
}

/// Reads `{key: {<vertex>: <float|[re,im]>}}` into dense order. Missing
/// vertices are an error when `require_all`, zero otherwise.
pub(crate) fn parse_vertex_map(
    net: &Network,
    text: &str,
    key: &str,
    require_all: bool,
) -> Result<Vec<Complex64>> {
    let doc: Value = serde_json::from_str(text).map_err(|e| Error::Parse {
        context: format!("line {} column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    let map = doc
        .get(key)
        .ok_or_else(|| Error::Parse {
            context: key.to_string(),
            message: format!("missing key \"{key}\""),
        })?
        .as_object()
        .ok_or_else(|| Error::Parse {
            context: key.to_string(),
            message: "expected an object keyed by vertex".into(),
        })?;
    let mut values = vec![ZERO; net.len()];
    let mut seen = vec![false; net.len()];
    for (vertex, v) in map {
        let i = net.resolve(vertex)?;
        values[i] = scalar_from_json(v, &format!("{key}.{vertex}"))?;
        seen[i] = true;
    }
    if require_all {
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::Parse {
                context: key.to_string(),
                message: format!("no value for vertex {}", net.id(i)),
            });
        }
    }
    Ok(values)
}

/// Raw edge-sum form on arbitrary (not necessarily grounded) vectors.
pub(crate) fn energy_sum(net: &Network, u: &[Complex64], v: &[Complex64]) -> Complex64 {
    net.edges()
        .iter()
        .map(|e| (u[e.a] - u[e.b]).conj() * (v[e.a] - v[e.b]) * e.conductance)
        .sum()
}

/// `E(u, v)`: conjugate-linear in `u`, linear in `v`.
pub fn energy_form(net: &Network, u: &EnergyVector, v: &EnergyVector) -> Result<Complex64> {
    u.belongs_to(net)?;
    v.belongs_to(net)?;
    Ok(energy_sum(net, &u.values, &v.values))
}

/// Effective resistance between a vertex and the origin, by both routes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveResistance {
    /// `v_x(x) − v_x(o)`.
    pub voltage_drop: f64,
    /// `E(v_x, v_x)`.
    pub energy: f64,
}

impl EffectiveResistance {
    pub fn value(&self) -> f64 {
        self.voltage_drop
    }
}

/// Report for the pointwise product estimate of two bounded finite-energy
/// functions.
#[derive(Debug, Clone)]
pub struct ProductEstimate {
    pub product: EnergyVector,
    /// `‖u₁u₂‖²_E`.
    pub lhs: f64,
    /// `‖u₂²‖_∞‖u₁‖²_E + 2‖u₁‖_∞‖u₂‖_∞|⟨u₁,u₂⟩_E| + ‖u₁²‖_∞‖u₂‖²_E`.
    pub rhs: f64,
}

impl ProductEstimate {
    pub fn slack(&self) -> f64 {
        self.rhs - self.lhs
    }

    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs + 1e-9
    }
}

/// Gram matrix `V_xy = ⟨v_x, v_y⟩_E` over an ordered vertex subset of `X`.
#[derive(Debug)]
pub struct GramMatrix {
    vertices: Vec<usize>,
    v: SymMatrix<f64>,
    reproducing_defect: f64,
    sqrt: OnceLock<SymMatrix<f64>>,
    cholesky: OnceLock<Cholesky<f64>>,
}

impl GramMatrix {
    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn matrix(&self) -> &SymMatrix<f64> {
        &self.v
    }

    pub fn dim(&self) -> usize {
        self.vertices.len()
    }

    /// `max |⟨v_x, v_y⟩_E − v_x(y)|` found while building.
    pub fn reproducing_defect(&self) -> f64 {
        self.reproducing_defect
    }

    /// Cached psd square root `V^{1/2}`.
    pub fn sqrt(&self) -> Result<&SymMatrix<f64>> {
        if let Some(s) = self.sqrt.get() {
            return Ok(s);
        }
        let s = sqrtm_psd(&self.v, None)?;
        Ok(self.sqrt.get_or_init(|| s))
    }

    /// Cached Cholesky factor of `V`.
    pub fn cholesky(&self) -> Result<&Cholesky<f64>> {
        if let Some(c) = self.cholesky.get() {
            return Ok(c);
        }
        let c = Cholesky::new(&self.v)?;
        Ok(self.cholesky.get_or_init(|| c))
    }

    /// Principal submatrix on the leading `k` vertices.
    pub fn leading(&self, k: usize) -> Result<GramMatrix> {
        if k == 0 || k > self.dim() {
            return Err(Error::InvalidArgument(format!(
                "leading block size {k} outside 1..={}",
                self.dim()
            )));
        }
        let m = self.v.matrix().view((0, 0), (k, k)).into_owned();
        Ok(GramMatrix {
            vertices: self.vertices[..k].to_vec(),
            v: SymMatrix::new(m)?,
            reproducing_defect: self.reproducing_defect,
            sqrt: OnceLock::new(),
            cholesky: OnceLock::new(),
        })
    }

    /// Principal submatrix on the listed vertices, in the listed order.
    pub fn restrict(&self, set: &[usize]) -> Result<GramMatrix> {
        if set.is_empty() {
            return Err(Error::EmptyVertexSet);
        }
        let pos = set
            .iter()
            .map(|x| {
                self.vertices.iter().position(|v| v == x).ok_or_else(|| {
                    Error::InvalidArgument(format!("vertex index {x} is not in the Gram set"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let m = self.v.matrix().select_rows(&pos).select_columns(&pos);
        Ok(GramMatrix {
            vertices: set.to_vec(),
            v: SymMatrix::new(m)?,
            reproducing_defect: self.reproducing_defect,
            sqrt: OnceLock::new(),
            cholesky: OnceLock::new(),
        })
    }

    /// CSV with a header row of vertex ids.
    pub fn to_csv(&self, net: &Network) -> String {
        matrix_csv(net, &self.vertices, self.v.matrix())
    }
}

pub fn matrix_csv(net: &Network, vertices: &[usize], m: &DMatrix<f64>) -> String {
    let mut out = vertices
        .iter()
        .map(|&x| net.id(x).to_string())
        .collect::<Vec<_>>()
        .join(",");
    out.push('\n');
    for row in m.row_iter() {
        let line = row.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(",");
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// A network together with its grounded-Laplacian factorization and a
/// concurrent cache of energy-kernel vectors.
#[derive(Debug)]
pub struct EnergySpace {
    net: Arc<Network>,
    /// Position of each vertex within `X = G \ {o}`.
    position: Vec<Option<usize>>,
    grounded: OnceLock<Cholesky<f64>>,
    kernels: RwLock<HashMap<usize, Arc<[f64]>>>,
}

impl EnergySpace {
    pub fn new(net: impl Into<Arc<Network>>) -> Self {
        let net = net.into();
        let mut position = vec![None; net.len()];
        for (k, x) in net.non_origin().into_iter().enumerate() {
            position[x] = Some(k);
        }
        EnergySpace {
            net,
            position,
            grounded: OnceLock::new(),
            kernels: RwLock::new(HashMap::new()),
        }
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn network_arc(&self) -> Arc<Network> {
        Arc::clone(&self.net)
    }

    fn grounded_laplacian(&self) -> Result<&Cholesky<f64>> {
        if let Some(c) = self.grounded.get() {
            return Ok(c);
        }
        let xs = self.net.non_origin();
        let full = self.net.laplacian_matrix();
        let m = DMatrix::from_fn(xs.len(), xs.len(), |i, j| full[(xs[i], xs[j])]);
        let c = Cholesky::new(&SymMatrix::new(m)?)?;
        Ok(self.grounded.get_or_init(|| c))
    }

    /// Real grounded values of `v_x`; `v_o ≡ 0`.
    pub fn kernel_values(&self, x: usize) -> Result<Arc<[f64]>> {
        self.net.check_index(x)?;
        if let Some(v) = self.kernels.read().expect("kernel cache poisoned").get(&x) {
            return Ok(Arc::clone(v));
        }
        let n = self.net.len();
        let values: Arc<[f64]> = match self.position[x] {
            None => vec![0.0; n].into(),
            Some(p) => {
                let chol = self.grounded_laplacian()?;
                let mut rhs = DVector::zeros(n - 1);
                rhs[p] = 1.0;
                let w = chol.solve(&rhs);
                let mut full = vec![0.0; n];
                for (y, slot) in self.position.iter().enumerate() {
                    if let Some(k) = slot {
                        full[y] = w[*k];
                    }
                }
                full.into()
            }
        };
        let mut cache = self.kernels.write().expect("kernel cache poisoned");
        Ok(Arc::clone(cache.entry(x).or_insert(values)))
    }

    /// The energy kernel `v_x` as an element of the energy space.
    pub fn energy_kernel(&self, x: usize) -> Result<EnergyVector> {
        let v = self.kernel_values(x)?;
        EnergyVector::from_real(&self.net, &v)
    }

    /// `R(x) = v_x(x) − v_x(o) = E(v_x)`.
    pub fn effective_resistance(&self, x: usize) -> Result<EffectiveResistance> {
        let v = self.kernel_values(x)?;
        if x == self.net.origin() {
            return Err(Error::InvalidArgument(
                "effective resistance is defined for x != origin".into(),
            ));
        }
        let ev = EnergyVector::from_real(&self.net, &v)?;
        Ok(EffectiveResistance {
            voltage_drop: v[x] - v[self.net.origin()],
            energy: ev.energy(),
        })
    }

    fn check_subset(&self, f: &[usize], allow_origin: bool) -> Result<()> {
        if f.is_empty() {
            return Err(Error::EmptyVertexSet);
        }
        let mut seen = HashSet::new();
        for &x in f {
            self.net.check_index(x)?;
            if !allow_origin && x == self.net.origin() {
                return Err(Error::OriginInF(self.net.id(x).to_string()));
            }
            if !seen.insert(x) {
                return Err(Error::DuplicateVertex(self.net.id(x).to_string()));
            }
        }
        Ok(())
    }

    /// `V_F` with entries `E(v_x, v_y)`, cross-checked against `v_x(y)`.
    pub fn gram_matrix(&self, f: &[usize]) -> Result<GramMatrix> {
        self.check_subset(f, false)?;
        let kernels: Vec<Vec<Complex64>> = f
            .iter()
            .map(|&x| {
                self.kernel_values(x)
                    .map(|v| v.iter().map(|&r| Complex64::new(r, 0.0)).collect())
            })
            .collect::<Result<_>>()?;
        let k = f.len();
        let mut m = DMatrix::zeros(k, k);
        let mut defect: f64 = 0.0;
        for i in 0..k {
            for j in i..k {
                let e = energy_sum(&self.net, &kernels[i], &kernels[j]).re;
                m[(i, j)] = e;
                m[(j, i)] = e;
                defect = defect
                    .max((e - kernels[i][f[j]].re).abs())
                    .max((e - kernels[j][f[i]].re).abs());
            }
        }
        Ok(GramMatrix {
            vertices: f.to_vec(),
            v: SymMatrix::new(m)?,
            reproducing_defect: defect,
            sqrt: OnceLock::new(),
            cholesky: OnceLock::new(),
        })
    }

    /// Gram matrix over all of `X` in canonical order.
    pub fn full_gram(&self) -> Result<GramMatrix> {
        self.gram_matrix(&self.net.non_origin())
    }

    /// `⟨δ_x, δ_y⟩_E`: `c(x)` on the diagonal and `−c_xy` off it.
    pub fn delta_gram(&self, f: &[usize]) -> Result<SymMatrix<f64>> {
        self.check_subset(f, true)?;
        let net = &self.net;
        SymMatrix::from_fn(f.len(), |i, j| {
            if i == j {
                net.total_conductance(f[i]).unwrap_or(0.0)
            } else {
                -net.conductance(f[i], f[j])
            }
        })
    }

    /// `|⟨v_x, u⟩_E − (u(x) − u(o))|`.
    pub fn reproducing_check(&self, x: usize, u: &EnergyVector) -> Result<f64> {
        u.belongs_to(&self.net)?;
        let v = self.energy_kernel(x)?;
        let lhs = energy_form(&self.net, &v, u)?;
        Ok((lhs - (u.get(x) - u.get(self.net.origin()))).norm())
    }

    /// `|⟨δ_x, u⟩_E − (Δu)(x)|`.
    pub fn lap_pairing_check(&self, x: usize, u: &EnergyVector) -> Result<f64> {
        u.belongs_to(&self.net)?;
        let delta = VertexFunction::dirac(&self.net, x)?;
        let lhs = energy_sum(&self.net, delta.values(), u.values());
        let lap = self.net.laplacian_apply(u.values())?;
        Ok((lhs - lap[x]).norm())
    }

    /// Energy-orthogonal projection of `u` onto `span{δ_x : x ∈ F}`.
    ///
    /// When `F` is the whole vertex set the origin is dropped: the Dirac
    /// masses of a finite network sum to a constant.
    pub fn fin_projection(&self, u: &EnergyVector, f: &[usize]) -> Result<EnergyVector> {
        u.belongs_to(&self.net)?;
        self.check_subset(f, true)?;
        let f: Vec<usize> = if f.len() == self.net.len() {
            f.iter().copied().filter(|&x| x != self.net.origin()).collect()
        } else {
            f.to_vec()
        };
        let g = self.delta_gram(&f)?;
        let g = SymMatrix::new(g.matrix().map(|v| Complex64::new(v, 0.0)))?;
        let rhs = f
            .iter()
            .map(|&x| {
                VertexFunction::dirac(&self.net, x).map(|d| energy_sum(&self.net, d.values(), u.values()))
            })
            .collect::<Result<Vec<_>>>()?;
        let coeffs = spd_solve(&g, &DVector::from_vec(rhs))?;
        let mut values = vec![ZERO; self.net.len()];
        for (k, &x) in f.iter().enumerate() {
            values[x] += coeffs[k];
        }
        EnergyVector::new(&self.net, values)
    }

    /// Pointwise product with the energy estimate of the product.
    pub fn pointwise_product(&self, u1: &EnergyVector, u2: &EnergyVector) -> Result<ProductEstimate> {
        u1.belongs_to(&self.net)?;
        u2.belongs_to(&self.net)?;
        let values = u1.values.iter().zip(&u2.values).map(|(a, b)| a * b).collect();
        let product = EnergyVector::new(&self.net, values)?;
        let (s1, s2) = (u1.sup_norm(), u2.sup_norm());
        let cross = energy_form(&self.net, u1, u2)?.norm();
        let rhs = s2 * s2 * u1.energy() + 2.0 * s1 * s2 * cross + s1 * s1 * u2.energy();
        Ok(ProductEstimate {
            lhs: product.energy(),
            rhs,
            product,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{ConductanceProfile, Family};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p3() -> EnergySpace {
        EnergySpace::new(Network::new([(0, 1, 1.0), (1, 2, 1.0)], 0).unwrap())
    }

    fn close(a: &[f64], b: &[f64]) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < 1e-13, "{a:?} vs {b:?}");
        }
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn energy_form_examples() {
        let s = p3();
        let net = s.network();
        let one = EnergyVector::from_real(net, &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(energy_form(net, &one, &one).unwrap(), ZERO);
        let u = EnergyVector::from_real(net, &[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(energy_form(net, &u, &u).unwrap(), c(2.0));
        let tree = Network::generate(Family::BinaryTree(2), &ConductanceProfile::Uniform { lo: 0.5, hi: 2.0, seed: 9 }).unwrap();
        for x in 0..tree.len() {
            let d = EnergyVector::from_function(&tree, &VertexFunction::dirac(&tree, x).unwrap()).unwrap();
            assert_relative_eq!(d.energy(), tree.total_conductance(x).unwrap(), epsilon = 1e-12);
        }
    }

    #[test]
    fn energy_form_is_conjugate_symmetric() {
        let s = p3();
        let net = s.network();
        let u = EnergyVector::new(net, vec![c(0.0), Complex64::new(1.0, 2.0), Complex64::new(-1.0, 0.5)]).unwrap();
        let v = EnergyVector::new(net, vec![c(3.0), Complex64::new(0.0, 1.0), c(2.0)]).unwrap();
        let uv = energy_form(net, &u, &v).unwrap();
        let vu = energy_form(net, &v, &u).unwrap();
        assert!((uv - vu.conj()).norm() < 1e-15);
    }

    #[test]
    fn grounding_subtracts_origin_value() {
        let s = p3();
        let u = EnergyVector::from_real(s.network(), &[5.0, 6.0, 7.0]).unwrap();
        assert_eq!(u.values(), &[c(0.0), c(1.0), c(2.0)]);
    }

    #[test]
    fn kernel_examples() {
        let s = p3();
        close(&s.kernel_values(1).unwrap(), &[0.0, 1.0, 1.0]);
        close(&s.kernel_values(2).unwrap(), &[0.0, 1.0, 2.0]);
        assert_eq!(&*s.kernel_values(0).unwrap(), &[0.0, 0.0, 0.0]);
        let lap = s.network().laplacian_apply(&s.kernel_values(2).unwrap()).unwrap();
        close(&lap, &[-1.0, 0.0, 1.0]);
        assert!(s.kernel_values(3).is_err());
    }

    #[test]
    fn resistance_examples() {
        let s = p3();
        assert_relative_eq!(s.effective_resistance(1).unwrap().value(), 1.0, epsilon = 1e-14);
        let r2 = s.effective_resistance(2).unwrap();
        assert_relative_eq!(r2.voltage_drop, 2.0, epsilon = 1e-15);
        assert_relative_eq!(r2.energy, 2.0, epsilon = 1e-15);
        let seg = EnergySpace::new(Network::generate(Family::IntegerSegment(10), &ConductanceProfile::Unit).unwrap());
        for k in 1..=10 {
            assert_relative_eq!(seg.effective_resistance(k).unwrap().value(), k as f64, epsilon = 1e-12);
        }
    }

    #[test]
    fn gram_examples() {
        let seg = EnergySpace::new(Network::generate(Family::IntegerSegment(8), &ConductanceProfile::Unit).unwrap());
        let g = seg.gram_matrix(&[1, 2, 3]).unwrap();
        let expected = nalgebra::dmatrix![1.0, 1.0, 1.0; 1.0, 2.0, 2.0; 1.0, 2.0, 3.0];
        assert!((g.matrix().matrix() - expected).amax() < 1e-12);
        assert!(g.reproducing_defect() < 1e-12);

        let s = p3();
        let g = s.gram_matrix(&[1, 2]).unwrap();
        assert!((g.matrix().matrix() - nalgebra::dmatrix![1.0, 1.0; 1.0, 2.0]).amax() < 1e-14);
        let g = s.gram_matrix(&[2]).unwrap();
        assert_relative_eq!(g.matrix().matrix()[(0, 0)], 2.0, epsilon = 1e-14);

        assert!(matches!(s.gram_matrix(&[0, 1]), Err(Error::OriginInF(_))));
        assert!(matches!(s.gram_matrix(&[1, 1]), Err(Error::DuplicateVertex(_))));
        assert!(matches!(s.gram_matrix(&[]), Err(Error::EmptyVertexSet)));
        assert!(matches!(s.gram_matrix(&[7]), Err(Error::UnknownVertex(_))));
    }

    #[test]
    fn gram_csv_has_id_header() {
        let s = p3();
        let csv = s.gram_matrix(&[1, 2]).unwrap().to_csv(s.network());
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("1,2"));
        let rows: Vec<Vec<f64>> = lines
            .map(|l| l.split(',').map(|t| t.parse().unwrap()).collect())
            .collect();
        close(&rows.concat(), &[1.0, 1.0, 1.0, 2.0]);
    }

    #[test]
    fn delta_gram_examples() {
        let s = p3();
        let d = s.delta_gram(&[1, 2]).unwrap();
        assert_eq!(d.matrix(), &nalgebra::dmatrix![2.0, -1.0; -1.0, 1.0]);
        let d = s.delta_gram(&[0, 2]).unwrap();
        assert_eq!(d.matrix()[(0, 1)], 0.0);
        assert_eq!(s.delta_gram(&[1]).unwrap().matrix()[(0, 0)], 2.0);
        let full = s.network().laplacian_matrix();
        let all = s.delta_gram(&[0, 1, 2]).unwrap();
        assert_eq!(all.matrix(), &full);
    }

    #[test]
    fn reproducing_and_pairing_examples() {
        let s = p3();
        let net = s.network();
        for x in 0..3 {
            for y in 1..3 {
                let vy = s.energy_kernel(y).unwrap();
                assert!(s.reproducing_check(x, &vy).unwrap() < 1e-14);
                let dy = EnergyVector::from_function(net, &VertexFunction::dirac(net, y).unwrap()).unwrap();
                // ⟨v_x, δ_y⟩ = δ_y(x) − δ_y(o)
                assert!(s.reproducing_check(x, &dy).unwrap() < 1e-14);
                // Δv_y = δ_y − δ_o
                assert!(s.lap_pairing_check(x, &vy).unwrap() < 1e-14);
            }
        }
        let one = EnergyVector::from_real(net, &[1.0; 3]).unwrap();
        assert_eq!(s.lap_pairing_check(1, &one).unwrap(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = EnergyVector::new(
            net,
            (0..3).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect(),
        )
        .unwrap();
        // oracle: ⟨v_1, u⟩ evaluated directly from v_1 = (0,1,1): one edge (0,1)
        let direct = (Complex64::new(1.0, 0.0)) * (u.get(1) - u.get(0));
        assert!((energy_form(net, &s.energy_kernel(1).unwrap(), &u).unwrap() - direct).norm() < 1e-15);
        assert!(s.reproducing_check(1, &u).unwrap() <= 1e-12);
    }

    #[test]
    fn fin_projection_examples() {
        let s = p3();
        let net = s.network();
        let v2 = s.energy_kernel(2).unwrap();
        let p = s.fin_projection(&v2, &[1]).unwrap();
        assert!(p.values().iter().all(|v| v.norm() < 1e-15));
        let v1 = s.energy_kernel(1).unwrap();
        let p = s.fin_projection(&v1, &[1]).unwrap();
        assert!((p.get(1) - c(0.5)).norm() < 1e-15);
        assert!(p.get(2).norm() < 1e-15);
        let d = EnergyVector::from_real(net, &[0.0, 3.0, -1.0]).unwrap();
        let p = s.fin_projection(&d, &[1, 2]).unwrap();
        assert!(p.values().iter().zip(d.values()).all(|(a, b)| (a - b).norm() < 1e-14));
        let p = s.fin_projection(&v1, &[0, 1, 2]).unwrap();
        assert!(p.values().iter().zip(v1.values()).all(|(a, b)| (a - b).norm() < 1e-14));
    }

    #[test]
    fn norms() {
        let s = p3();
        let v1 = s.energy_kernel(1).unwrap();
        assert_relative_eq!(v1.sup_norm(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(v1.norm(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(v1.banach_norm(), 2.0, epsilon = 1e-14);
        let one = EnergyVector::from_real(s.network(), &[1.0; 3]).unwrap();
        assert_eq!(one.banach_norm(), 0.0);
    }

    #[test]
    fn product_examples() {
        let s = p3();
        let net = s.network();
        let z = EnergyVector::zero(net);
        let v1 = s.energy_kernel(1).unwrap();
        let v2 = s.energy_kernel(2).unwrap();
        let pz = s.pointwise_product(&v1, &z).unwrap();
        assert_eq!(pz.lhs, 0.0);
        assert!(pz.holds());
        let p = s.pointwise_product(&v1, &v2).unwrap();
        let re: Vec<f64> = p.product.values().iter().map(|v| v.re).collect();
        close(&re, &[0.0, 1.0, 2.0]);
        assert_relative_eq!(p.lhs, 2.0, epsilon = 1e-13);
        assert!(p.holds());
    }

    #[test]
    fn vector_json_round_trip() {
        let s = p3();
        let net = s.network();
        let u = EnergyVector::new(net, vec![c(0.0), Complex64::new(1.5, -2.0), c(0.25)]).unwrap();
        let text = u.to_json(net).to_string();
        assert_eq!(text, r#"{"values":{"0":0.0,"1":[1.5,-2.0],"2":0.25}}"#);
        assert_eq!(EnergyVector::from_json(net, &text).unwrap(), u);
        assert!(EnergyVector::from_json(net, r#"{"values":{"0":1}}"#).is_err());
        assert!(EnergyVector::from_json(net, r#"{"vals":{}}"#).is_err());
    }

    #[test]
    fn mismatched_networks() {
        let a = p3();
        let b = Network::new([(0, 1, 2.0), (1, 2, 1.0)], 0).unwrap();
        let u = EnergyVector::zero(&b);
        assert!(matches!(a.reproducing_check(1, &u), Err(Error::NetworkMismatch)));
        assert!(matches!(energy_form(a.network(), &u, &u), Err(Error::NetworkMismatch)));
    }
}
