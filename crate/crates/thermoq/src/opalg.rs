//! Dense operator algebra with explicit tolerances: spectra, ranks, supports,
//! and closure / commutant / center computations for finite *-algebras.

use faer::complex_native::c64;
use crate::error::{Error, Result};
use crate::matser::{self, RawMatrix};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub use num_complex::Complex64 as C64;
pub type CMatrix = DMatrix<C64>;

/// Seed used for "generic element" draws when the caller gives none.
pub const GENERIC_SEED: u64 = 0x7e57_a1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub herm_tol: f64,
    pub psd_tol: f64,
    pub trace_tol: f64,
    pub proj_tol: f64,
    pub span_tol: f64,
    /// Relative eigenvalue threshold: counted iff `λ > rank_tol · max(1, λ_max)`.
    pub rank_tol: f64,
    pub fixed_tol: f64,
    pub eff_tol: f64,
    pub ds_eps: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            herm_tol: 1e-9,
            psd_tol: 1e-9,
            trace_tol: 1e-9,
            proj_tol: 1e-8,
            span_tol: 1e-8,
            rank_tol: 1e-9,
            fixed_tol: 1e-8,
            eff_tol: 1e-9,
            ds_eps: 1e-6,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("herm_tol", self.herm_tol),
            ("psd_tol", self.psd_tol),
            ("trace_tol", self.trace_tol),
            ("proj_tol", self.proj_tol),
            ("span_tol", self.span_tol),
            ("rank_tol", self.rank_tol),
            ("fixed_tol", self.fixed_tol),
            ("eff_tol", self.eff_tol),
            ("ds_eps", self.ds_eps),
        ];
        for (name, v) in all {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::PreconditionUnmet(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn rank_threshold(&self, lambda_max: f64) -> f64 {
        self.rank_tol * lambda_max.max(1.0)
    }
}

// ---------------------------------------------------------------------------
// plain matrix helpers

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn eye(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn diag(values: &[f64]) -> CMatrix {
    let n = values.len();
    CMatrix::from_fn(n, n, |i, j| if i == j { c(values[i], 0.0) } else { C64::default() })
}

pub fn ket(n: usize, i: usize) -> CMatrix {
    let mut v = CMatrix::zeros(n, 1);
    v[(i, 0)] = c(1.0, 0.0);
    v
}

/// `|a⟩⟨b|` for column vectors a, b.
pub fn outer(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b.adjoint()
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn fro_norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Frobenius inner product tr(a† b).
pub fn inner(a: &CMatrix, b: &CMatrix) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s = to_faer(m).singular_values();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

/// Largest singular value.
pub fn op_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    singular_values(m).first().copied().unwrap_or(0.0)
}

pub fn trace_norm(m: &CMatrix) -> f64 {
    singular_values(m).iter().sum()
}

pub fn herm_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5, 0.0)
}

pub fn anti_herm_part(m: &CMatrix) -> CMatrix {
    (m - m.adjoint()) * c(0.0, -0.5)
}

pub fn herm_deviation(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

fn to_faer(m: &CMatrix) -> faer::Mat<c64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| {
        let z = m[(i, j)];
        c64::new(z.re, z.im)
    })
}

fn from_faer(m: faer::MatRef<'_, c64>) -> CMatrix {
    CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
        let z = m.read(i, j);
        c(z.re, z.im)
    })
}

/// Hermitian eigendecomposition, eigenvalues ascending, columns matching.
pub fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let e = to_faer(&herm_part(m)).selfadjoint_eigendecomposition(faer::Side::Lower);
    let s = e.s().column_vector();
    let vals: Vec<f64> = (0..n).map(|i| s.read(i).re).collect();
    let vecs = from_faer(e.u());
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    let sorted = idx.iter().map(|&i| vals[i]).collect();
    let cols = CMatrix::from_fn(n, n, |r, k| vecs[(r, idx[k])]);
    (sorted, cols)
}

pub fn eigvalsh(m: &CMatrix) -> Vec<f64> {
    eigh(m).0
}

/// `V f(Λ) V†` for a Hermitian matrix.
pub fn herm_fn(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (vals, v) = eigh(m);
    let n = vals.len();
    let d = CMatrix::from_fn(n, n, |i, j| if i == j { c(f(vals[i]), 0.0) } else { C64::default() });
    &v * d * v.adjoint()
}

pub fn psd_sqrt(m: &CMatrix) -> CMatrix {
    herm_fn(m, |x| x.max(0.0).sqrt())
}

/// Projector onto the span of the given orthonormal columns.
pub fn projector_from_columns(v: &CMatrix) -> CMatrix {
    v * v.adjoint()
}

/// Select eigenvector columns by predicate on the eigenvalue.
pub fn eigvec_columns(vals: &[f64], vecs: &CMatrix, keep: impl Fn(f64) -> bool) -> CMatrix {
    let cols: Vec<usize> = (0..vals.len()).filter(|&k| keep(vals[k])).collect();
    CMatrix::from_fn(vecs.nrows(), cols.len(), |r, k| vecs[(r, cols[k])])
}

/// Orthonormal basis (columns) of the null space of `m`, singular values
/// counted as zero when `σ ≤ tol · max(1, σ_max)`.
pub fn null_space(m: &CMatrix, tol: f64) -> CMatrix {
    let n = m.ncols();
    let work = if m.nrows() < n {
        let mut p = CMatrix::zeros(n, n);
        p.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
        p
    } else {
        m.clone()
    };
    if work.is_empty() {
        return CMatrix::identity(n, n);
    }
    let svd = to_faer(&work).svd();
    let sv = svd.s_diagonal();
    let v = svd.v();
    let smax = (0..n).map(|k| sv.read(k).re).fold(0.0, f64::max);
    let thr = tol * smax.max(1.0);
    let cols: Vec<usize> = (0..n).filter(|&k| sv.read(k).re <= thr).collect();
    CMatrix::from_fn(n, cols.len(), |r, k| {
        let z = v.read(r, cols[k]);
        c(z.re, z.im)
    })
}

/// Null space through the Gram matrix `m† m`; cheaper for tall stacks.
/// Singular values `σ = √λ` are compared against `tol · max(1, σ_max)`.
pub fn null_space_gram(m: &CMatrix, tol: f64) -> CMatrix {
    let g = m.adjoint() * m;
    let (vals, vecs) = eigh(&g);
    let smax = vals.last().copied().unwrap_or(0.0).max(0.0).sqrt();
    let thr = tol * smax.max(1.0);
    eigvec_columns(&vals, &vecs, |l| l.max(0.0).sqrt() <= thr)
}

/// Column-major vectorization, so `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.
pub fn vec_col(m: &CMatrix) -> CMatrix {
    CMatrix::from_iterator(m.len(), 1, m.iter().copied())
}

pub fn unvec(v: &[C64], rows: usize) -> CMatrix {
    CMatrix::from_column_slice(rows, v.len() / rows, v)
}

/// Partial trace of an operator on A⊗B, keeping A.
pub fn trace_out_second(x: &CMatrix, da: usize, db: usize) -> CMatrix {
    CMatrix::from_fn(da, da, |i, j| (0..db).map(|k| x[(i * db + k, j * db + k)]).sum())
}

/// Partial trace of an operator on A⊗B, keeping B.
pub fn trace_out_first(x: &CMatrix, da: usize, db: usize) -> CMatrix {
    CMatrix::from_fn(db, db, |k, l| (0..da).map(|i| x[(i * db + k, i * db + l)]).sum())
}

/// Gram-Schmidt insertion into an orthonormal (Frobenius) family.
/// Returns true when `m` added a new direction.
pub fn gs_insert(basis: &mut Vec<CMatrix>, m: &CMatrix, tol: f64) -> bool {
    let scale = fro_norm(m);
    if scale == 0.0 {
        return false;
    }
    let mut v = m.clone();
    for _ in 0..2 {
        for b in basis.iter() {
            let p = inner(b, &v);
            v -= b * p;
        }
    }
    let r = fro_norm(&v);
    if r > tol * scale.max(1.0) {
        basis.push(v / c(r, 0.0));
        true
    } else {
        false
    }
}

// ---------------------------------------------------------------------------
// validated operator types

fn check_square(m: &CMatrix) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::DimMismatch(format!(
            "expected a nonempty square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if !is_finite(m) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix", into = "RawMatrix")]
pub struct HermitianOp {
    matrix: CMatrix,
}

impl HermitianOp {
    /// Symmetrizes inputs within `herm_tol`; larger deviations are an error.
    pub fn new(m: CMatrix, tol: &Tolerances) -> Result<Self> {
        check_square(&m)?;
        let dev = herm_deviation(&m);
        if dev > tol.herm_tol * max_abs(&m).max(1.0) {
            return Err(Error::NotHermitian(dev));
        }
        Ok(HermitianOp { matrix: herm_part(&m) })
    }

    pub fn from_diag(values: &[f64]) -> Self {
        HermitianOp { matrix: diag(values) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn eigh(&self) -> (Vec<f64>, CMatrix) {
        eigh(&self.matrix)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        eigvalsh(&self.matrix)
    }
}

impl TryFrom<RawMatrix> for HermitianOp {
    type Error = String;
    fn try_from(raw: RawMatrix) -> std::result::Result<Self, String> {
        let m = matser::from_raw(&raw)?;
        HermitianOp::new(m, &Tolerances::default()).map_err(crate::error::tagged)
    }
}

impl From<HermitianOp> for RawMatrix {
    fn from(h: HermitianOp) -> RawMatrix {
        matser::to_raw(&h.matrix)
    }
}

macro_rules! herm_newtype {
    ($name:ident) => {
        impl $name {
            pub fn dim(&self) -> usize {
                self.0.dim()
            }
            pub fn matrix(&self) -> &CMatrix {
                self.0.matrix()
            }
            pub fn as_hermitian(&self) -> &HermitianOp {
                &self.0
            }
            pub fn eigenvalues(&self) -> Vec<f64> {
                self.0.eigenvalues()
            }
        }

        impl TryFrom<RawMatrix> for $name {
            type Error = String;
            fn try_from(raw: RawMatrix) -> std::result::Result<Self, String> {
                let m = matser::from_raw(&raw)?;
                $name::new(m, &Tolerances::default()).map_err(crate::error::tagged)
            }
        }

        impl From<$name> for RawMatrix {
            fn from(h: $name) -> RawMatrix {
                matser::to_raw(h.matrix())
            }
        }
    };
}

/// Effect `𝕆 ≤ E ≤ 𝟙`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix", into = "RawMatrix")]
pub struct Effect(HermitianOp);
herm_newtype!(Effect);

impl Effect {
    /// Eigenvalues within `eff_tol` outside [0, 1] are clamped.
    pub fn new(m: CMatrix, tol: &Tolerances) -> Result<Self> {
        let h = HermitianOp::new(m, tol)?;
        let (vals, _) = h.eigh();
        let lo = vals[0];
        let hi = vals[vals.len() - 1];
        if lo < -tol.eff_tol || hi > 1.0 + tol.eff_tol {
            return Err(Error::InvalidEffect(format!("spectrum [{lo}, {hi}] leaves [0, 1]")));
        }
        if lo < 0.0 || hi > 1.0 {
            let clamped = herm_fn(h.matrix(), |x| x.clamp(0.0, 1.0));
            return Ok(Effect(HermitianOp { matrix: clamped }));
        }
        Ok(Effect(h))
    }

    pub fn identity(d: usize) -> Self {
        Effect(HermitianOp { matrix: eye(d) })
    }
}

/// Density operator: PSD with unit trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix", into = "RawMatrix")]
pub struct State(HermitianOp);
herm_newtype!(State);

impl State {
    pub fn new(m: CMatrix, tol: &Tolerances) -> Result<Self> {
        let h = HermitianOp::new(m, tol)?;
        let lo = h.eigenvalues()[0];
        if lo < -tol.psd_tol {
            return Err(Error::InvalidState(format!("min eigenvalue {lo:e}")));
        }
        let tr = h.matrix().trace().re;
        if (tr - 1.0).abs() > tol.trace_tol {
            return Err(Error::InvalidState(format!("trace {tr}")));
        }
        Ok(State(h))
    }

    /// Normalize a nonzero PSD matrix to unit trace.
    pub fn from_psd(m: &CMatrix, tol: &Tolerances) -> Result<Self> {
        let tr = m.trace().re;
        if !(tr > 0.0) {
            return Err(Error::InvalidState(format!("trace {tr} is not positive")));
        }
        State::new(m / c(tr, 0.0), tol)
    }

    pub fn maximally_mixed(d: usize) -> Self {
        State(HermitianOp { matrix: eye(d) / c(d as f64, 0.0) })
    }

    pub fn pure(v: &CMatrix) -> Self {
        let n = fro_norm(v);
        let u = v / c(n, 0.0);
        State(HermitianOp { matrix: outer(&u, &u) })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix", into = "RawMatrix")]
pub struct Projection(HermitianOp);
herm_newtype!(Projection);

impl Projection {
    pub fn new(m: CMatrix, tol: &Tolerances) -> Result<Self> {
        let h = HermitianOp::new(m, tol)?;
        let p = h.matrix();
        let dev = max_abs(&(p * p - p));
        if dev > tol.proj_tol {
            return Err(Error::InvalidProjection(format!("‖P²−P‖ = {dev:e}")));
        }
        Ok(Projection(h))
    }

    /// Projection onto the span of orthonormal columns (trusted input).
    pub fn from_columns(v: &CMatrix) -> Self {
        Projection(HermitianOp { matrix: herm_part(&projector_from_columns(v)) })
    }

    pub fn zero(d: usize) -> Self {
        Projection(HermitianOp { matrix: CMatrix::zeros(d, d) })
    }

    pub fn rank(&self) -> usize {
        self.matrix().trace().re.round().max(0.0) as usize
    }

    /// Orthonormal columns spanning the range.
    pub fn range_basis(&self) -> CMatrix {
        let (vals, vecs) = self.0.eigh();
        eigvec_columns(&vals, &vecs, |l| l > 0.5)
    }
}

/// Orthonormal (Frobenius) basis of a subspace of `dim × dim` matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgebraBasis {
    pub dim: usize,
    #[serde(with = "matser::vec")]
    pub basis: Vec<CMatrix>,
}

impl AlgebraBasis {
    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    /// Distance from `m` to the span, relative to ‖m‖.
    pub fn span_residual(&self, m: &CMatrix) -> f64 {
        let mut v = m.clone();
        for b in &self.basis {
            let p = inner(b, &v);
            v -= b * p;
        }
        fro_norm(&v) / fro_norm(m).max(1e-300)
    }

    pub fn contains(&self, m: &CMatrix, tol: f64) -> bool {
        fro_norm(m) == 0.0 || self.span_residual(m) <= tol
    }

    /// Hermitian spanning family: Hermitian and anti-Hermitian parts of each element.
    pub fn hermitian_parts(&self) -> Vec<CMatrix> {
        let mut out = Vec::new();
        for b in &self.basis {
            out.push(herm_part(b));
            out.push(anti_herm_part(b));
        }
        out
    }
}

// ---------------------------------------------------------------------------
// spectral operations

pub fn rank_tol(a: &HermitianOp, tol: &Tolerances) -> Result<usize> {
    let vals = a.eigenvalues();
    let lmax = vals[vals.len() - 1];
    if vals[0] < -tol.psd_tol * lmax.max(1.0) {
        return Err(Error::NotPSD(vals[0]));
    }
    let thr = tol.rank_threshold(lmax);
    Ok(vals.iter().filter(|&&l| l > thr).count())
}

/// Rank of a PSD matrix given as a raw matrix (symmetrized first).
pub fn rank_of(m: &CMatrix, tol: &Tolerances) -> Result<usize> {
    let h = HermitianOp { matrix: herm_part(m) };
    rank_tol(&h, tol)
}

pub fn support_projection(a: &HermitianOp, tol: &Tolerances) -> Result<Projection> {
    let (vals, vecs) = a.eigh();
    let lmax = vals[vals.len() - 1];
    if vals[0] < -tol.psd_tol * lmax.max(1.0) {
        return Err(Error::NotPSD(vals[0]));
    }
    let thr = tol.rank_threshold(lmax);
    Ok(Projection::from_columns(&eigvec_columns(&vals, &vecs, |l| l > thr)))
}

pub fn support_of(m: &CMatrix, tol: &Tolerances) -> Result<Projection> {
    support_projection(&HermitianOp { matrix: herm_part(m) }, tol)
}

/// Min eigenvalue minus the rank threshold; positive iff strictly positive.
pub fn positivity_margin(a: &HermitianOp, tol: &Tolerances) -> f64 {
    let vals = a.eigenvalues();
    vals[0] - tol.rank_threshold(vals[vals.len() - 1])
}

pub fn is_strictly_positive_op(a: &HermitianOp, tol: &Tolerances) -> bool {
    positivity_margin(a, tol) > 0.0
}

pub fn is_strictly_positive_matrix(m: &CMatrix, tol: &Tolerances) -> bool {
    is_strictly_positive_op(&HermitianOp { matrix: herm_part(m) }, tol)
}

// ---------------------------------------------------------------------------
// algebras

/// Smallest unital *-algebra containing the generators.
pub fn algebra_closure(generators: &[CMatrix], dim: usize, tol: &Tolerances) -> Result<AlgebraBasis> {
    for g in generators {
        if g.nrows() != dim || g.ncols() != dim {
            return Err(Error::DimMismatch(format!(
                "generator {}x{} in dimension {dim}",
                g.nrows(),
                g.ncols()
            )));
        }
    }
    let mut gens: Vec<CMatrix> = Vec::new();
    for g in generators {
        if fro_norm(g) > 0.0 {
            gens.push(g.clone());
            gens.push(g.adjoint());
        }
    }
    let mut basis = Vec::new();
    gs_insert(&mut basis, &eye(dim), tol.span_tol);
    for g in &gens {
        gs_insert(&mut basis, g, tol.span_tol);
    }
    // words in the generators are reached by left multiplication
    let cap = dim * dim;
    let mut i = 0;
    while i < basis.len() && basis.len() < cap {
        let b = basis[i].clone();
        for g in &gens {
            gs_insert(&mut basis, &(g * &b), tol.span_tol);
            if basis.len() >= cap {
                break;
            }
        }
        i += 1;
    }
    Ok(AlgebraBasis { dim, basis })
}

/// Stacked commutator superoperator `X ↦ [X, A]` over the given matrices.
fn commutator_stack(mats: &[CMatrix], dim: usize) -> CMatrix {
    let n = dim * dim;
    let id = eye(dim);
    let mut m = CMatrix::zeros(n * mats.len().max(1), n);
    for (k, a) in mats.iter().enumerate() {
        // vec(XA - AX) = (Aᵀ ⊗ I − I ⊗ A) vec(X)
        let block = kron(&a.transpose(), &id) - kron(&id, a);
        m.view_mut((k * n, 0), (n, n)).copy_from(&block);
    }
    m
}

/// Relative singular-value cutoff for commutator null spaces.
const COMMUTANT_TOL: f64 = 1e-7;

/// Matrices commuting with every given matrix (no *-closure implied).
pub fn commutant_of_set(mats: &[CMatrix], dim: usize) -> AlgebraBasis {
    let stack = commutator_stack(mats, dim);
    let ns = null_space(&stack, COMMUTANT_TOL);
    let basis = (0..ns.ncols())
        .map(|k| unvec(ns.column(k).as_slice(), dim))
        .collect();
    AlgebraBasis { dim, basis }
}

pub fn commutant(alg: &AlgebraBasis, _tol: &Tolerances) -> AlgebraBasis {
    commutant_of_set(&alg.basis, alg.dim)
}

/// Unit of a *-algebra: support of Σ B B†.
pub fn algebra_unit(alg: &AlgebraBasis, tol: &Tolerances) -> Projection {
    let mut s = CMatrix::zeros(alg.dim, alg.dim);
    for b in &alg.basis {
        s += b * b.adjoint();
    }
    support_of(&s, tol).unwrap_or_else(|_| Projection::zero(alg.dim))
}

/// Center `alg ∩ alg′` as a basis.
pub fn center(alg: &AlgebraBasis) -> AlgebraBasis {
    let dim = alg.dim;
    let k = alg.basis.len();
    if k == 0 {
        return AlgebraBasis { dim, basis: vec![] };
    }
    let n = dim * dim;
    // columns: vec([B_j, A_i]) stacked over i
    let mut m = CMatrix::zeros(n * k, k);
    for (j, bj) in alg.basis.iter().enumerate() {
        for (i, ai) in alg.basis.iter().enumerate() {
            let cm = commutator(bj, ai);
            for (r, z) in cm.iter().enumerate() {
                m[(i * n + r, j)] = *z;
            }
        }
    }
    let ns = null_space_gram(&m, COMMUTANT_TOL);
    let mut basis = Vec::new();
    for col in 0..ns.ncols() {
        let mut z = CMatrix::zeros(dim, dim);
        for (j, bj) in alg.basis.iter().enumerate() {
            z += bj * ns[(j, col)];
        }
        gs_insert(&mut basis, &z, 1e-9);
    }
    AlgebraBasis { dim, basis }
}

/// Eigenvalue clusters of a Hermitian matrix, as orthonormal column blocks.
/// Returns `None` when some gap is neither clearly zero nor clearly open.
fn cluster_eigenspaces(h: &CMatrix) -> Option<Vec<CMatrix>> {
    let (vals, vecs) = eigh(h);
    let n = vals.len();
    let scale = vals.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
    let same = 1e-7 * scale;
    let open = 1e-4 * scale;
    let mut groups: Vec<Vec<usize>> = vec![vec![0]];
    for k in 1..n {
        let gap = vals[k] - vals[k - 1];
        if gap <= same {
            groups.last_mut().unwrap().push(k);
        } else if gap >= open {
            groups.push(vec![k]);
        } else {
            return None;
        }
    }
    Some(
        groups
            .into_iter()
            .map(|g| CMatrix::from_fn(n, g.len(), |r, q| vecs[(r, g[q])]))
            .collect(),
    )
}

/// Random real combination of a Hermitian spanning family.
pub(crate) fn generic_hermitian(family: &[CMatrix], dim: usize, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h = CMatrix::zeros(dim, dim);
    for f in family {
        let r: f64 = StandardNormal.sample(&mut rng);
        h += f * c(r, 0.0);
    }
    herm_part(&h)
}

/// Random complex combination of a basis.
pub(crate) fn generic_element(family: &[CMatrix], dim: usize, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h = CMatrix::zeros(dim, dim);
    for f in family {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        h += f * c(re, im);
    }
    h
}

/// Eigenspaces of a generic Hermitian element of span(family), restricted
/// to the range of `unit` (columns of `unit_basis`). Up to 4 draws.
pub(crate) fn generic_eigenspaces(
    family: &[CMatrix],
    unit_basis: &CMatrix,
    seed: u64,
) -> Result<Vec<CMatrix>> {
    let dim = unit_basis.nrows();
    if unit_basis.ncols() == 0 {
        return Ok(vec![]);
    }
    for attempt in 0..4u64 {
        let h = generic_hermitian(family, dim, seed.wrapping_add(attempt));
        let hr = unit_basis.adjoint() * &h * unit_basis;
        if let Some(groups) = cluster_eigenspaces(&hr) {
            return Ok(groups.into_iter().map(|g| unit_basis * g).collect());
        }
    }
    Err(Error::DegenerateCenter)
}

/// Minimal projections of the center, summing to the unit of the algebra.
pub fn center_projections(alg: &AlgebraBasis, tol: &Tolerances) -> Result<Vec<Projection>> {
    center_projections_seeded(alg, tol, GENERIC_SEED)
}

pub fn center_projections_seeded(
    alg: &AlgebraBasis,
    tol: &Tolerances,
    seed: u64,
) -> Result<Vec<Projection>> {
    let z = center(alg);
    let unit = algebra_unit(alg, tol);
    let ub = unit.range_basis();
    let family: Vec<CMatrix> = z.hermitian_parts();
    let spaces = generic_eigenspaces(&family, &ub, seed)?;
    Ok(spaces.iter().map(Projection::from_columns).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn sx() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
    }

    fn sz() -> CMatrix {
        diag(&[1.0, -1.0])
    }

    #[test]
    fn rank_examples() {
        let t = tol();
        assert_eq!(rank_tol(&HermitianOp::new(eye(3), &t).unwrap(), &t).unwrap(), 3);
        assert_eq!(rank_tol(&HermitianOp::from_diag(&[1.0, 0.0]), &t).unwrap(), 1);
        assert_eq!(rank_tol(&HermitianOp::from_diag(&[0.5, 0.5, 0.0]), &t).unwrap(), 2);
        assert!(matches!(
            rank_tol(&HermitianOp::from_diag(&[1.0, -0.1]), &t),
            Err(Error::NotPSD(_))
        ));
    }

    #[test]
    fn support_examples() {
        let t = tol();
        let p = support_projection(&HermitianOp::from_diag(&[0.7, 0.3, 0.0]), &t).unwrap();
        assert!(max_abs(&(p.matrix() - diag(&[1.0, 1.0, 0.0]))) < 1e-12);
        let z = support_projection(&HermitianOp::from_diag(&[0.0, 0.0]), &t).unwrap();
        assert!(max_abs(z.matrix()) < 1e-15);
        let plus = CMatrix::from_element(2, 2, c(0.5, 0.0));
        let p = support_projection(&HermitianOp::new(plus.clone(), &t).unwrap(), &t).unwrap();
        assert!(max_abs(&(p.matrix() - plus)) < 1e-12);
    }

    #[test]
    fn strict_positivity_examples() {
        let t = tol();
        assert!(is_strictly_positive_op(&HermitianOp::new(eye(3) / c(3.0, 0.0), &t).unwrap(), &t));
        assert!(!is_strictly_positive_op(&HermitianOp::from_diag(&[1.0, 0.0]), &t));
        assert!(is_strictly_positive_op(&HermitianOp::from_diag(&[0.5, 0.3, 0.2]), &t));
    }

    #[test]
    fn non_hermitian_rejected() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(1., 0.), c(0., 0.), c(1., 0.)]);
        assert!(matches!(HermitianOp::new(m, &tol()), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn closure_examples() {
        let t = tol();
        assert_eq!(algebra_closure(&[eye(3)], 3, &t).unwrap().len(), 1);
        assert_eq!(algebra_closure(&[sx(), sz()], 2, &t).unwrap().len(), 4);
        assert_eq!(algebra_closure(&[diag(&[1.0, 2.0])], 2, &t).unwrap().len(), 2);
    }

    #[test]
    fn commutant_examples() {
        let t = tol();
        let full = algebra_closure(&[sx(), sz()], 2, &t).unwrap();
        assert_eq!(commutant(&full, &t).len(), 1);
        let unit = algebra_closure(&[], 3, &t).unwrap();
        assert_eq!(commutant(&unit, &t).len(), 9);
        let dg = algebra_closure(&[diag(&[1.0, 2.0])], 2, &t).unwrap();
        let cm = commutant(&dg, &t);
        assert_eq!(cm.len(), 2);
        assert!(cm.contains(&diag(&[1.0, 0.0]), 1e-10));
    }

    #[test]
    fn center_examples() {
        let t = tol();
        let full = algebra_closure(&[sx(), sz()], 2, &t).unwrap();
        let ps = center_projections(&full, &t).unwrap();
        assert_eq!(ps.len(), 1);
        assert!(max_abs(&(ps[0].matrix() - eye(2))) < 1e-10);

        let dg = algebra_closure(&[diag(&[1.0, 2.0, 3.0])], 3, &t).unwrap();
        let ps = center_projections(&dg, &t).unwrap();
        assert_eq!(ps.len(), 3);
        for p in &ps {
            assert_eq!(p.rank(), 1);
            let m = p.matrix();
            assert!((0..3).any(|i| (m[(i, i)].re - 1.0).abs() < 1e-10));
        }

        // M2 ⊕ M1
        let mut a = CMatrix::zeros(3, 3);
        a[(0, 1)] = c(1.0, 0.0);
        let b = diag(&[1.0, -1.0, 0.0]);
        let blk = algebra_closure(&[a, b, diag(&[0.0, 0.0, 1.0])], 3, &t).unwrap();
        assert_eq!(blk.len(), 5);
        let mut ps = center_projections(&blk, &t).unwrap();
        ps.sort_by_key(|p| p.rank());
        assert_eq!(ps.len(), 2);
        assert!(max_abs(&(ps[0].matrix() - diag(&[0.0, 0.0, 1.0]))) < 1e-10);
        assert!(max_abs(&(ps[1].matrix() - diag(&[1.0, 1.0, 0.0]))) < 1e-10);
    }

    #[test]
    fn partial_traces() {
        let a = diag(&[0.25, 0.75]);
        let b = diag(&[0.5, 0.3, 0.2]);
        let ab = kron(&a, &b);
        assert!(max_abs(&(trace_out_second(&ab, 2, 3) - &a)) < 1e-14);
        assert!(max_abs(&(trace_out_first(&ab, 2, 3) - &b)) < 1e-14);
    }

    #[test]
    fn vec_identity() {
        let a = CMatrix::from_fn(2, 2, |i, j| c(i as f64 + 1.0, j as f64));
        let x = CMatrix::from_fn(2, 2, |i, j| c(j as f64 - i as f64, 0.5));
        let b = CMatrix::from_fn(2, 2, |i, j| c(0.3 * i as f64, 1.0 - j as f64));
        let lhs = vec_col(&(&a * &x * &b));
        let rhs = kron(&b.transpose(), &a) * vec_col(&x);
        assert!(max_abs(&(lhs - rhs)) < 1e-12);
    }
}
