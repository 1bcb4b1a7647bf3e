//! Multiplication operators `(M_f u)(x) = f(x) u(x)` on the energy space.
//!
//! `M_f` is bounded by `b` exactly when every finite matrix
//! `s_f(x, y) = (b² − f(x) conj f(y)) V_xy` is positive semidefinite, and the
//! norm is the supremum over finite `F ⊆ X` of the restricted norms
//! `ρ_F² = λ_max(D_F V_F D̄_F, V_F)`. Point masses have the closed form
//! `‖M_x‖ = √(c(x) R(x))` and every finitely supported `f` is dominated by
//! `Σ |f(x)| √(c(x) R(x))`.
//!
//! Values of `f` at the origin never matter: energy vectors are grounded, so
//! `u(o) = 0` and `(f u)(o) = 0` whatever `f(o)` is.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::energy::{energy_form, energy_sum, parse_vertex_map, scalar_to_json, EnergySpace, EnergyVector, GramMatrix};
use crate::error::{Error, Result};
use crate::network::{Network, VertexFunction};
use crate::numkernel::{
    default_psd_tolerance, gen_eig_max, gram_schmidt_v, psd_check, spectral_norm, Cholesky, PsdVerdict, Scalar,
    SymMatrix,
};
use crate::randwalk::escape_prob_exact;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// The symbol `f` of a multiplication operator.
#[derive(Debug, Clone, PartialEq)]
pub struct Multiplier {
    f: Vec<Complex64>,
    fingerprint: u64,
}

impl Multiplier {
    pub fn new(net: &Network, f: Vec<Complex64>) -> Result<Self> {
        if f.len() != net.len() {
            return Err(Error::DimensionMismatch {
                expected: net.len(),
                got: f.len(),
            });
        }
        Ok(Multiplier {
            f,
            fingerprint: net.fingerprint(),
        })
    }

    pub fn from_real(net: &Network, f: &[f64]) -> Result<Self> {
        Self::new(net, f.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn from_function(net: &Network, f: &VertexFunction) -> Result<Self> {
        f.belongs_to(net)?;
        Self::new(net, f.values().to_vec())
    }

    /// `f = δ_x`, giving `M_x`.
    pub fn delta(net: &Network, x: usize) -> Result<Self> {
        Self::from_function(net, &VertexFunction::dirac(net, x)?)
    }

    /// `f = v_x`, the energy kernel used as a symbol.
    pub fn kernel(space: &EnergySpace, x: usize) -> Result<Self> {
        let v = space.kernel_values(x)?;
        Self::from_real(space.network(), &v)
    }

    pub fn constant(net: &Network, c: Complex64) -> Self {
        Multiplier {
            f: vec![c; net.len()],
            fingerprint: net.fingerprint(),
        }
    }

    /// Parses `{"f": {<vertex>: <float|[re,im]>}}`; missing vertices are 0.
    pub fn from_json(net: &Network, text: &str) -> Result<Self> {
        Self::new(net, parse_vertex_map(net, text, "f", false)?)
    }

    pub fn to_json(&self, net: &Network) -> Value {
        let map: serde_json::Map<String, Value> = self
            .f
            .iter()
            .enumerate()
            .map(|(i, v)| (net.id(i).to_string(), scalar_to_json(*v)))
            .collect();
        json!({ "f": map })
    }

    pub fn values(&self) -> &[Complex64] {
        &self.f
    }

    pub fn get(&self, x: usize) -> Complex64 {
        self.f[x]
    }

    pub fn is_real(&self) -> bool {
        self.f.iter().all(|v| v.im == 0.0)
    }

    /// Constant on `X` (the origin value is ignored).
    pub fn is_constant_on(&self, net: &Network) -> bool {
        let xs = net.non_origin();
        xs.iter().all(|&x| (self.f[x] - self.f[xs[0]]).norm() == 0.0)
    }

    /// `f · χ_F`.
    pub fn restrict(&self, set: &[usize]) -> Multiplier {
        let mut f = vec![ZERO; self.f.len()];
        for &x in set {
            f[x] = self.f[x];
        }
        Multiplier {
            f,
            fingerprint: self.fingerprint,
        }
    }

    /// Pointwise product `f₁ f₂`.
    pub fn product(&self, other: &Multiplier) -> Result<Multiplier> {
        if self.fingerprint != other.fingerprint {
            return Err(Error::NetworkMismatch);
        }
        Ok(Multiplier {
            f: self.f.iter().zip(&other.f).map(|(a, b)| a * b).collect(),
            fingerprint: self.fingerprint,
        })
    }

    pub fn belongs_to(&self, net: &Network) -> Result<()> {
        if self.fingerprint == net.fingerprint() {
            Ok(())
        } else {
            Err(Error::NetworkMismatch)
        }
    }
}

/// `M_f u`, grounded.
pub fn apply(space: &EnergySpace, m: &Multiplier, u: &EnergyVector) -> Result<EnergyVector> {
    let net = space.network();
    m.belongs_to(net)?;
    u.belongs_to(net)?;
    let values = m.f.iter().zip(u.values()).map(|(f, u)| f * u).collect();
    EnergyVector::new(net, values)
}

/// `M_f* u` from the defining relation: its value at `y` is
/// `⟨v_y, M_f* u⟩_E = ⟨M_f v_y, u⟩_E`, evaluated by the edge sum.
pub fn adjoint_apply(space: &EnergySpace, m: &Multiplier, u: &EnergyVector) -> Result<EnergyVector> {
    let net = space.network();
    m.belongs_to(net)?;
    u.belongs_to(net)?;
    let mut values = vec![ZERO; net.len()];
    for y in net.non_origin() {
        let vy = space.kernel_values(y)?;
        let mvy: Vec<Complex64> = vy.iter().zip(&m.f).map(|(v, f)| f * *v).collect();
        values[y] = energy_sum(net, &mvy, u.values());
    }
    EnergyVector::new(net, values)
}

/// `M_f* v_x = conj(f(x)) v_x`.
pub fn adjoint_on_kernel(space: &EnergySpace, m: &Multiplier, x: usize) -> Result<EnergyVector> {
    m.belongs_to(space.network())?;
    let v = space.kernel_values(x)?;
    let s = m.f[x].conj();
    EnergyVector::new(space.network(), v.iter().map(|&r| s * r).collect())
}

/// `⟨M u, v⟩_E − ⟨u, M v⟩_E`.
pub fn hermitian_defect(space: &EnergySpace, m: &Multiplier, u: &EnergyVector, v: &EnergyVector) -> Result<Complex64> {
    let net = space.network();
    let mu = apply(space, m, u)?;
    let mv = apply(space, m, v)?;
    Ok(energy_form(net, &mu, v)? - energy_form(net, u, &mv)?)
}

fn symbol_on<T: Scalar>(m: &Multiplier, set: &[usize], convert: impl Fn(Complex64) -> T) -> Vec<T> {
    set.iter().map(|&x| convert(m.f[x])).collect()
}

/// `D_F V_F D̄_F`.
fn sandwich<T: Scalar>(v: &DMatrix<f64>, d: &[T]) -> Result<SymMatrix<T>> {
    let n = d.len();
    SymMatrix::new(DMatrix::from_fn(n, n, |i, j| d[i] * T::from_real(v[(i, j)]) * d[j].conjugate()))
}

/// `(b² − f(x) conj f(y)) V_xy` from an existing Gram matrix.
pub fn s_matrix_from_gram(gram: &GramMatrix, m: &Multiplier, b: f64) -> Result<SymMatrix<Complex64>> {
    if !(b >= 0.0) {
        return Err(Error::InvalidArgument(format!("bound must be nonnegative, got {b}")));
    }
    let d = symbol_on(m, gram.vertices(), |z| z);
    let v = gram.matrix().matrix();
    let n = d.len();
    let b2 = b * b;
    SymMatrix::new(DMatrix::from_fn(n, n, |i, j| (b2 - d[i] * d[j].conj()) * v[(i, j)]))
}

pub fn s_matrix(space: &EnergySpace, m: &Multiplier, b: f64, set: &[usize]) -> Result<SymMatrix<Complex64>> {
    m.belongs_to(space.network())?;
    s_matrix_from_gram(&space.gram_matrix(set)?, m, b)
}

/// `b² V_F − D_F V_F D̄_F`, assembled as a matrix product.
pub fn s_matrix_product_form(gram: &GramMatrix, m: &Multiplier, b: f64) -> Result<SymMatrix<Complex64>> {
    let d = symbol_on(m, gram.vertices(), |z| z);
    let v = gram.matrix().matrix().map(|r| Complex64::new(r, 0.0));
    let dm = DMatrix::from_diagonal(&DVector::from_vec(d));
    let prod = &dm * &v * dm.adjoint();
    SymMatrix::new(v * Complex64::new(b * b, 0.0) - prod)
}

/// Checks that each set contains its predecessor.
pub fn check_nested(exhaustion: &[Vec<usize>]) -> Result<()> {
    for (k, pair) in exhaustion.windows(2).enumerate() {
        if !pair[0].iter().all(|x| pair[1].contains(x)) {
            return Err(Error::NotNested { index: k + 1 });
        }
    }
    Ok(())
}

/// Gram matrices for every set of a nested exhaustion, sliced from the
/// Gram matrix of the largest set.
pub fn exhaustion_grams(space: &EnergySpace, exhaustion: &[Vec<usize>]) -> Result<Vec<GramMatrix>> {
    if exhaustion.is_empty() {
        return Err(Error::EmptyVertexSet);
    }
    check_nested(exhaustion)?;
    let outer = space.gram_matrix(exhaustion.last().expect("nonempty"))?;
    exhaustion.iter().map(|set| outer.restrict(set)).collect()
}

/// psd test of `s_f` at bound `b` on every set of the exhaustion.
pub fn certify_bound(
    space: &EnergySpace,
    m: &Multiplier,
    b: f64,
    exhaustion: &[Vec<usize>],
    tol: Option<f64>,
) -> Result<Vec<PsdVerdict<Complex64>>> {
    m.belongs_to(space.network())?;
    let grams = exhaustion_grams(space, exhaustion)?;
    certify_on_grams(&grams, m, b, tol)
}

fn certify_on_grams(grams: &[GramMatrix], m: &Multiplier, b: f64, tol: Option<f64>) -> Result<Vec<PsdVerdict<Complex64>>> {
    grams
        .iter()
        .map(|g| {
            let s = s_matrix_from_gram(g, m, b)?;
            psd_check(&s, tol)
        })
        .collect()
}

fn pencil_norm<T: Scalar>(gram: &GramMatrix, d: &[T]) -> Result<f64> {
    let v = gram.matrix().matrix();
    let a = sandwich(v, d)?;
    let b = SymMatrix::new(v.map(T::from_real))?;
    Ok(gen_eig_max(&a, &b)?.value.max(0.0).sqrt())
}

/// `ρ_F = √λ_max(D_F V_F D̄_F, V_F)` for a prepared Gram matrix.
pub fn restricted_norm_from_gram(gram: &GramMatrix, m: &Multiplier) -> Result<f64> {
    if m.is_real() {
        pencil_norm(gram, &symbol_on(m, gram.vertices(), |z| z.re))
    } else {
        pencil_norm(gram, &symbol_on(m, gram.vertices(), |z| z))
    }
}

/// Norm of `M_f*` restricted to `span{v_x : x ∈ F}`.
pub fn restricted_norm(space: &EnergySpace, m: &Multiplier, set: &[usize]) -> Result<f64> {
    m.belongs_to(space.network())?;
    restricted_norm_from_gram(&space.gram_matrix(set)?, m)
}

/// `T_F = V_F^{1/2} D̄_F V_F^{-1/2}`, formed literally.
pub fn transfer_operator(gram: &GramMatrix, m: &Multiplier) -> Result<DMatrix<Complex64>> {
    let root = gram.sqrt()?;
    let root_c = SymMatrix::new(root.matrix().map(|r| Complex64::new(r, 0.0)))?;
    let n = gram.dim();
    let chol = Cholesky::new(&root_c)?;
    let inv_root = chol.solve_upper_adjoint(&chol.solve_lower(&DMatrix::identity(n, n)));
    let d = DMatrix::from_diagonal(&DVector::from_vec(symbol_on(m, gram.vertices(), |z| z.conj())));
    Ok(root_c.matrix() * d * inv_root)
}

/// `‖T_F‖₂`; equals the restricted norm.
pub fn transfer_operator_norm(gram: &GramMatrix, m: &Multiplier) -> Result<f64> {
    spectral_norm(&transfer_operator(gram, m)?)
}

/// `‖M_x‖` by the closed form and by the rank-one factorization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointMassNorm {
    /// `√(c(x) R(x))`.
    pub value: f64,
    pub conductance: f64,
    pub resistance: f64,
    /// `‖δ_x‖_E`.
    pub delta_norm: f64,
    /// `‖v_x‖_E`.
    pub kernel_norm: f64,
}

impl PointMassNorm {
    pub fn factored(&self) -> f64 {
        self.delta_norm * self.kernel_norm
    }
}

pub fn point_mass_norm(space: &EnergySpace, x: usize) -> Result<PointMassNorm> {
    let net = space.network();
    let conductance = net.total_conductance(x)?;
    let r = space.effective_resistance(x)?;
    let dirac = VertexFunction::dirac(net, x)?;
    let delta_energy = energy_sum(net, dirac.values(), dirac.values()).re;
    Ok(PointMassNorm {
        value: (conductance * r.value()).sqrt(),
        conductance,
        resistance: r.value(),
        delta_norm: delta_energy.sqrt(),
        kernel_norm: r.energy.sqrt(),
    })
}

/// `Σ_{x ∈ X} |f(x)| √(c(x) R(x))`.
pub fn sufficiency_bound(space: &EnergySpace, m: &Multiplier) -> Result<f64> {
    let net = space.network();
    m.belongs_to(net)?;
    let mut total = 0.0;
    for x in net.non_origin() {
        let a = m.f[x].norm();
        if a > 0.0 {
            total += a * point_mass_norm(space, x)?.value;
        }
    }
    Ok(total)
}

fn require_x(net: &Network, x: usize) -> Result<()> {
    net.check_index(x)?;
    if x == net.origin() {
        return Err(Error::OriginInF(net.id(x).to_string()));
    }
    Ok(())
}

fn scaled(net: &Network, s: Complex64, u: &[Complex64]) -> Result<EnergyVector> {
    EnergyVector::new(net, u.iter().map(|v| s * v).collect())
}

fn diff_norm(net: &Network, a: &EnergyVector, b: &EnergyVector) -> f64 {
    let d: Vec<Complex64> = a.values().iter().zip(b.values()).map(|(x, y)| x - y).collect();
    energy_sum(net, &d, &d).re.max(0.0).sqrt()
}

/// Largest discrepancy found while checking operator identities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityResidual {
    pub max_residual: f64,
    /// Largest energy norm among the right-hand sides compared.
    pub scale: f64,
}

/// Checks, on each sample and on every kernel vector `v_z`:
/// `M_x = |δ_x⟩⟨v_x|`, `M_x* = |v_x⟩⟨δ_x|`,
/// `M_x* M_y = ⟨δ_x, δ_y⟩ |v_x⟩⟨v_y|` and `M_x M_y* = ⟨v_x, v_y⟩ |δ_x⟩⟨δ_y|`.
/// Left sides use pointwise multiplication and [`adjoint_apply`].
pub fn rank_one_identities(space: &EnergySpace, x: usize, y: usize, samples: &[EnergyVector]) -> Result<IdentityResidual> {
    let net = space.network();
    require_x(net, x)?;
    require_x(net, y)?;
    let mx = Multiplier::delta(net, x)?;
    let my = Multiplier::delta(net, y)?;
    let vx = space.energy_kernel(x)?;
    let vy = space.energy_kernel(y)?;
    let dx = VertexFunction::dirac(net, x)?;
    let dy = VertexFunction::dirac(net, y)?;
    let dxe = EnergyVector::from_function(net, &dx)?;
    let dxdy = energy_sum(net, dx.values(), dy.values());
    let vxvy = energy_form(net, &vx, &vy)?;

    let mut basis: Vec<EnergyVector> = samples.to_vec();
    for z in net.non_origin() {
        basis.push(space.energy_kernel(z)?);
    }

    let mut out = IdentityResidual {
        max_residual: 0.0,
        scale: 0.0,
    };
    let mut record = |lhs: &EnergyVector, rhs: &EnergyVector| {
        out.max_residual = out.max_residual.max(diff_norm(net, lhs, rhs));
        out.scale = out.scale.max(rhs.norm());
    };
    for u in &basis {
        u.belongs_to(net)?;
        let lhs = apply(space, &mx, u)?;
        let rhs = scaled(net, energy_form(net, &vx, u)?, dxe.values())?;
        record(&lhs, &rhs);

        let lhs = adjoint_apply(space, &mx, u)?;
        let rhs = scaled(net, energy_sum(net, dx.values(), u.values()), vx.values())?;
        record(&lhs, &rhs);

        let lhs = adjoint_apply(space, &mx, &apply(space, &my, u)?)?;
        let rhs = scaled(net, dxdy * energy_form(net, &vy, u)?, vx.values())?;
        record(&lhs, &rhs);

        let lhs = apply(space, &mx, &adjoint_apply(space, &my, u)?)?;
        let rhs = scaled(net, vxvy * energy_sum(net, dy.values(), u.values()), dxe.values())?;
        record(&lhs, &rhs);
    }
    Ok(out)
}

/// Residuals of the normalized rank-one projection relations.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionRelations {
    pub residuals: Vec<(&'static str, f64)>,
    /// `⟨δ_x, δ_y⟩ / √(c(x) c(y))`.
    pub dd_coefficient: f64,
    /// `⟨v_x, v_y⟩ / √(R(x) R(y))`.
    pub uu_coefficient: f64,
}

impl ProjectionRelations {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().map(|r| r.1).fold(0.0, f64::max)
    }
}

/// Operators on grounded vectors in the coordinate basis `{δ_z}_{z ∈ X}`,
/// where the energy Gram matrix is the grounded Laplacian.
struct CoordinateOps {
    xs: Vec<usize>,
    gram: SymMatrix<f64>,
}

impl CoordinateOps {
    fn new(net: &Network) -> Result<Self> {
        let xs = net.non_origin();
        let l = net.laplacian_matrix();
        let gram = SymMatrix::new(DMatrix::from_fn(xs.len(), xs.len(), |i, j| l[(xs[i], xs[j])]))?;
        Ok(CoordinateOps { xs, gram })
    }

    fn coords(&self, u: &EnergyVector) -> DVector<f64> {
        DVector::from_iterator(self.xs.len(), self.xs.iter().map(|&x| u.get(x).re))
    }

    /// `|a⟩⟨b|` acting by `u ↦ ⟨b, u⟩_E a`.
    fn ket_bra(&self, a: &DVector<f64>, b: &DVector<f64>) -> DMatrix<f64> {
        a * (self.gram.matrix() * b).transpose()
    }

    fn inner(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        a.dot(&(self.gram.matrix() * b))
    }

    /// Energy adjoint `G⁻¹ Aᵀ G`.
    fn adjoint(&self, a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let chol = Cholesky::new(&self.gram)?;
        let rhs = a.transpose() * self.gram.matrix();
        Ok(chol.solve_upper_adjoint(&chol.solve_lower(&rhs)))
    }

    /// Operator norm with respect to the energy inner product.
    fn norm(&self, a: &DMatrix<f64>) -> Result<f64> {
        if a.amax() == 0.0 {
            return Ok(0.0);
        }
        let top = SymMatrix::symmetrized(a.transpose() * self.gram.matrix() * a)?;
        Ok(gen_eig_max(&top, &self.gram)?.value.max(0.0).sqrt())
    }

    fn position(&self, x: usize) -> usize {
        self.xs.iter().position(|&z| z == x).expect("vertex in X")
    }
}

/// Builds `U_x = |u_x⟩⟨u_x|` and `D_x = |d_x⟩⟨d_x|` for normalized `u_x = v_x/‖v_x‖`
/// and `d_x = δ_x/‖δ_x‖` and checks idempotence, the scalings against
/// `P[x→o] M_x* M_x` and `P[x→o] M_x M_x*`, and the four product relations.
pub fn normalized_projections(space: &EnergySpace, x: usize, y: usize) -> Result<ProjectionRelations> {
    let net = space.network();
    require_x(net, x)?;
    require_x(net, y)?;
    let ops = CoordinateOps::new(net)?;
    let n = ops.xs.len();

    let kernel = |z: usize| space.energy_kernel(z).map(|v| ops.coords(&v));
    let dirac = |z: usize| {
        let mut d = DVector::zeros(n);
        d[ops.position(z)] = 1.0;
        d
    };
    let unit = |v: DVector<f64>| {
        let len = ops.inner(&v, &v).sqrt();
        v / len
    };
    let (ux, uy) = (unit(kernel(x)?), unit(kernel(y)?));
    let (dx, dy) = (unit(dirac(x)), unit(dirac(y)));

    let big_u = |u: &DVector<f64>| ops.ket_bra(u, u);
    let (ux_op, uy_op) = (big_u(&ux), big_u(&uy));
    let (dx_op, dy_op) = (big_u(&dx), big_u(&dy));

    let mult = |z: usize| {
        let mut m = DMatrix::zeros(n, n);
        let p = ops.position(z);
        m[(p, p)] = 1.0;
        m
    };
    let mx = mult(x);
    let mx_adj = ops.adjoint(&mx)?;
    let escape = escape_prob_exact(net, x)?;

    let (rx, ry) = (
        space.effective_resistance(x)?.value(),
        space.effective_resistance(y)?.value(),
    );
    let (cx, cy) = (net.total_conductance(x)?, net.total_conductance(y)?);
    let vxy = ops.inner(&kernel(x)?, &kernel(y)?);
    let dxy = ops.inner(&dirac(x), &dirac(y));
    let uu_coefficient = vxy / (rx * ry).sqrt();
    let dd_coefficient = dxy / (cx * cy).sqrt();

    let residuals = vec![
        ("U_x^2 = U_x", ops.norm(&(&ux_op * &ux_op - &ux_op))?),
        ("U_y^2 = U_y", ops.norm(&(&uy_op * &uy_op - &uy_op))?),
        ("D_x^2 = D_x", ops.norm(&(&dx_op * &dx_op - &dx_op))?),
        ("D_y^2 = D_y", ops.norm(&(&dy_op * &dy_op - &dy_op))?),
        ("U_x = P[x->o] M_x* M_x", ops.norm(&(&ux_op - &mx_adj * &mx * escape))?),
        ("D_x = P[x->o] M_x M_x*", ops.norm(&(&dx_op - &mx * &mx_adj * escape))?),
        (
            "U_x U_y",
            ops.norm(&(&ux_op * &uy_op - ops.ket_bra(&ux, &uy) * uu_coefficient))?,
        ),
        (
            "U_x D_y",
            ops.norm(&(&ux_op * &dy_op - ops.ket_bra(&ux, &dy) * ops.inner(&ux, &dy)))?,
        ),
        (
            "D_x U_y",
            ops.norm(&(&dx_op * &uy_op - ops.ket_bra(&dx, &uy) * ops.inner(&dx, &uy)))?,
        ),
        (
            "D_x D_y",
            ops.norm(&(&dx_op * &dy_op - ops.ket_bra(&dx, &dy) * dd_coefficient))?,
        ),
    ];
    Ok(ProjectionRelations {
        residuals,
        dd_coefficient,
        uu_coefficient,
    })
}

/// Orthogonal projection onto `span{v_x : x ∈ F}` using the Gram–Schmidt basis.
struct KernelProjection {
    set: Vec<usize>,
    change: DMatrix<f64>,
    kernels: Vec<std::sync::Arc<[f64]>>,
}

impl KernelProjection {
    fn new(space: &EnergySpace, set: &[usize]) -> Result<Self> {
        let gram = space.gram_matrix(set)?;
        let change = gram_schmidt_v(gram.matrix())?;
        let kernels = set.iter().map(|&x| space.kernel_values(x)).collect::<Result<_>>()?;
        Ok(KernelProjection {
            set: set.to_vec(),
            change,
            kernels,
        })
    }

    fn apply(&self, net: &Network, u: &EnergyVector) -> Result<EnergyVector> {
        // ⟨e_j, u⟩ = Σ_i C_ij ⟨v_i, u⟩ = Σ_i C_ij u(F_i)
        let k = self.set.len();
        let at_set = DVector::from_iterator(k, self.set.iter().map(|&x| u.get(x)));
        let c = self.change.map(|r| Complex64::new(r, 0.0));
        let coeff = &c * (c.transpose() * at_set);
        let mut values = vec![ZERO; net.len()];
        for (i, v) in self.kernels.iter().enumerate() {
            for (slot, &r) in values.iter_mut().zip(v.iter()) {
                *slot += coeff[i] * r;
            }
        }
        EnergyVector::new(net, values)
    }
}

/// `max ‖P_n M_f P_n u − P_n M_{f_m} P_n u‖_E` over samples and the kernel
/// basis of the inner set, with `f_m = f χ_{F_m}`.
///
/// The outer set must contain the inner set and all of its neighbors in `X`.
pub fn truncation_consistency(
    space: &EnergySpace,
    m: &Multiplier,
    inner: &[usize],
    outer: &[usize],
    samples: &[EnergyVector],
) -> Result<f64> {
    let net = space.network();
    m.belongs_to(net)?;
    for &x in inner {
        let needed = std::iter::once(x).chain(net.neighbors(x).iter().map(|&(y, _)| y));
        for y in needed {
            if y != net.origin() && !outer.contains(&y) {
                return Err(Error::InsufficientEnclosure {
                    missing: net.id(y).to_string(),
                });
            }
        }
    }
    let proj = KernelProjection::new(space, inner)?;
    let truncated = m.restrict(outer);
    let mut basis: Vec<EnergyVector> = samples.to_vec();
    for &x in inner {
        basis.push(space.energy_kernel(x)?);
    }
    let mut worst: f64 = 0.0;
    for u in &basis {
        let pu = proj.apply(net, u)?;
        let lhs = proj.apply(net, &apply(space, m, &pu)?)?;
        let rhs = proj.apply(net, &apply(space, &truncated, &pu)?)?;
        worst = worst.max(diff_norm(net, &lhs, &rhs));
    }
    Ok(worst)
}

/// Outcome of a multiplier analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Verdict {
    /// `‖M_f‖ ≤ b` holds on every set of the exhaustion.
    Certified(f64),
    /// The psd test failed at this `b`: `‖M_f‖ > b` on the exhaustion.
    Exceeded(f64),
    /// The restricted norms are still strictly growing at the end of the
    /// exhaustion.
    UnboundedGrowth,
    Inconclusive,
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Certified(_) => "certified",
            Verdict::Exceeded(_) => "fail",
            Verdict::UnboundedGrowth => "unbounded_growth",
            Verdict::Inconclusive => "inconclusive",
        }
    }

    pub fn is_failure(&self) -> bool {
        matches!(self, Verdict::Exceeded(_))
    }
}

/// Result of testing one bound over a whole exhaustion.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCertificate {
    pub b: f64,
    pub psd: bool,
    /// Smallest eigenvalue over the exhaustion.
    pub lambda_min: f64,
    /// Size of the set where the smallest eigenvalue occurred.
    pub set_size: usize,
}

/// A vector `ξ` with `ξ* s_f ξ < 0`; equivalently
/// `u = Σ ξ_x v_x` satisfies `‖M_f* u‖_E > b ‖u‖_E`.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub b: f64,
    pub set: Vec<usize>,
    pub xi: Vec<Complex64>,
    pub quadratic_form: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierReport {
    /// `(|F|, ρ_F)` along the exhaustion.
    pub lower_trace: Vec<(usize, f64)>,
    pub best_lower: f64,
    /// The sufficiency sum.
    pub upper: f64,
    pub certs: Vec<BoundCertificate>,
    /// Smallest bound found by bisection, when estimating.
    pub estimate: Option<f64>,
    pub witness: Option<Witness>,
    pub verdict: Verdict,
    /// `best_lower` exceeded `upper` beyond tolerance.
    pub inconsistent: bool,
}

/// What [`analyze`] should do besides tracing restricted norms.
#[derive(Debug, Clone, Default)]
pub struct AnalysisOptions {
    /// Bounds to certify directly.
    pub bounds: Vec<f64>,
    /// Bisect for the smallest certified bound.
    pub estimate: bool,
    /// psd tolerance; `None` uses the default for each matrix.
    pub psd_tolerance: Option<f64>,
    /// Absolute bisection tolerance (default `1e-8`).
    pub bisection_tolerance: Option<f64>,
}

fn summarize(b: f64, verdicts: &[PsdVerdict<Complex64>], grams: &[GramMatrix]) -> (BoundCertificate, Option<Witness>) {
    let (k, worst) = verdicts
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.min_eigenvalue.total_cmp(&b.1.min_eigenvalue))
        .expect("nonempty exhaustion");
    let psd = verdicts.iter().all(|v| v.is_psd);
    let cert = BoundCertificate {
        b,
        psd,
        lambda_min: worst.min_eigenvalue,
        set_size: grams[k].dim(),
    };
    let witness = verdicts.iter().zip(grams).find(|(v, _)| !v.is_psd).map(|(v, g)| Witness {
        b,
        set: g.vertices().to_vec(),
        xi: v.witness.iter().copied().collect(),
        quadratic_form: v.min_eigenvalue,
    });
    (cert, witness)
}

/// Smallest `b` (to `tol`) for which `s_f` is psd on every set, bracketed by
/// `[lo, hi]`; `hi` is doubled until it certifies.
pub fn bisect_bound(
    grams: &[GramMatrix],
    m: &Multiplier,
    lo: f64,
    hi: f64,
    tol: f64,
    psd_tol: Option<f64>,
) -> Result<f64> {
    let passes = |b: f64| -> Result<bool> { Ok(certify_on_grams(grams, m, b, psd_tol)?.iter().all(|v| v.is_psd)) };
    let mut lo = lo.max(0.0);
    let mut hi = hi.max(lo);
    let mut guard = 0;
    while !passes(hi)? {
        lo = hi;
        hi = if hi > 0.0 { 2.0 * hi } else { 1.0 };
        guard += 1;
        if guard > 200 {
            return Err(Error::ConvergenceFailure);
        }
    }
    if passes(lo)? {
        return Ok(lo);
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if passes(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Restricted-norm trace, sufficiency bound, direct certificates and an
/// optional bisection estimate, over a nested exhaustion.
pub fn analyze(
    space: &EnergySpace,
    m: &Multiplier,
    exhaustion: &[Vec<usize>],
    options: &AnalysisOptions,
) -> Result<MultiplierReport> {
    m.belongs_to(space.network())?;
    let grams = exhaustion_grams(space, exhaustion)?;
    let lower_trace = grams
        .iter()
        .map(|g| restricted_norm_from_gram(g, m).map(|r| (g.dim(), r)))
        .collect::<Result<Vec<_>>>()?;
    let best_lower = lower_trace.iter().map(|t| t.1).fold(0.0, f64::max);
    let upper = sufficiency_bound(space, m)?;
    let inconsistent = best_lower > upper + 1e-8 * upper.max(1.0);

    let mut certs = Vec::new();
    let mut witness = None;
    let mut failed = None;
    let mut passed: Option<f64> = None;
    for &b in &options.bounds {
        let verdicts = certify_on_grams(&grams, m, b, options.psd_tolerance)?;
        let (cert, w) = summarize(b, &verdicts, &grams);
        if cert.psd {
            passed = Some(passed.map_or(b, |p| p.min(b)));
        } else if failed.is_none() {
            failed = Some(b);
            witness = w;
        }
        certs.push(cert);
    }

    let mut estimate = None;
    if options.estimate {
        let tol = options.bisection_tolerance.unwrap_or(1e-8);
        let b = bisect_bound(&grams, m, best_lower, upper.max(best_lower), tol, options.psd_tolerance)?;
        let verdicts = certify_on_grams(&grams, m, b, options.psd_tolerance)?;
        let (cert, _) = summarize(b, &verdicts, &grams);
        if cert.psd {
            passed = Some(passed.map_or(b, |p| p.min(b)));
        }
        certs.push(cert);
        estimate = Some(b);
    }

    let growing = lower_trace.len() >= 3
        && lower_trace.windows(2).all(|w| w[1].1 > w[0].1 * (1.0 + 1e-9))
        && !options.estimate
        && options.bounds.is_empty();

    let verdict = if inconsistent {
        Verdict::Inconclusive
    } else if let Some(b) = failed {
        Verdict::Exceeded(b)
    } else if growing {
        Verdict::UnboundedGrowth
    } else if let Some(b) = passed {
        Verdict::Certified(b)
    } else if options.bounds.is_empty() && !options.estimate {
        Verdict::Certified(best_lower)
    } else {
        Verdict::Inconclusive
    };

    Ok(MultiplierReport {
        lower_trace,
        best_lower,
        upper,
        certs,
        estimate,
        witness,
        verdict,
        inconsistent,
    })
}

/// `F_k` = the first `k` vertices of `X` in canonical order, for each size.
pub fn prefix_exhaustion(net: &Network, sizes: &[usize]) -> Result<Vec<Vec<usize>>> {
    let xs = net.non_origin();
    let mut out = Vec::with_capacity(sizes.len());
    let mut last = 0;
    for &k in sizes {
        if k == 0 || k > xs.len() {
            return Err(Error::InvalidArgument(format!(
                "exhaustion size {k} outside 1..={}",
                xs.len()
            )));
        }
        if k <= last {
            return Err(Error::NotNested { index: out.len() });
        }
        last = k;
        out.push(xs[..k].to_vec());
    }
    Ok(out)
}

impl MultiplierReport {
    pub fn to_json(&self, net: &Network) -> Value {
        let trace: Vec<Value> = self.lower_trace.iter().map(|&(k, r)| json!([k, r])).collect();
        let certs: Vec<Value> = self
            .certs
            .iter()
            .map(|c| {
                json!({
                    "b": c.b,
                    "psd": c.psd,
                    "lambda_min": c.lambda_min,
                    "set_size": c.set_size,
                })
            })
            .collect();
        let witness = self.witness.as_ref().map(|w| {
            json!({
                "b": w.b,
                "set": w.set.iter().map(|&x| net.id(x).clone()).collect::<Vec<_>>(),
                "xi": w.xi.iter().map(|z| json!([z.re, z.im])).collect::<Vec<_>>(),
                "quadratic_form": w.quadratic_form,
            })
        });
        let bound = match self.verdict {
            Verdict::Certified(b) | Verdict::Exceeded(b) => Some(b),
            _ => None,
        };
        json!({
            "lower_trace": trace,
            "best_lower": self.best_lower,
            "upper": self.upper,
            "certs": certs,
            "estimate": self.estimate,
            "verdict": self.verdict.label(),
            "verdict_bound": bound,
            "inconsistent": self.inconsistent,
            "witness": witness,
        })
    }
}

/// Convenience: default psd tolerance used for `s_f` at bound `b` on `F`.
pub fn s_matrix_tolerance(s: &SymMatrix<Complex64>) -> f64 {
    default_psd_tolerance(s)
}
