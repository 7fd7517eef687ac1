//! Fixed points of channels: fixed-point spaces, the average channel, block
//! decompositions with classical actions, and the factor structure of the
//! fixed-point algebra.

use crate::error::{Error, Result};
use crate::generators;
use crate::matser;
use crate::opalg::*;
use crate::qmaps::{kraus_from_choi, CPMap};
use nalgebra::DMatrix;
use petgraph::algo::kosaraju_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

/// Transition weights above this count as graph edges.
const EDGE_TOL: f64 = 1e-10;
/// Residual allowed when checking the factor form of the average channel.
const FACTOR_TOL: f64 = 1e-8;

fn check_square(map: &CPMap) -> Result<usize> {
    if !map.is_square() {
        return Err(Error::DimMismatch(format!(
            "expected a square map, got {} -> {}",
            map.dim_in(),
            map.dim_out()
        )));
    }
    Ok(map.dim_in())
}

fn check_tp(map: &CPMap, tol: &Tolerances) -> Result<usize> {
    let d = check_square(map)?;
    let dev = max_abs(&(map.dual_unit() - eye(d)));
    if dev > tol.trace_tol {
        return Err(Error::NotTracePreserving(dev));
    }
    Ok(d)
}

/// Right and left null vectors of `S − 𝟙`.
fn unit_eigenspaces(map: &CPMap, tol: &Tolerances) -> (CMatrix, CMatrix) {
    let s = map.superoperator();
    let n = s.nrows();
    let a = s - eye(n);
    (null_space(&a, tol.fixed_tol), null_space(&a.adjoint(), tol.fixed_tol))
}

/// Basis of `{X : Φ(X) = X}`, Hermitian where possible.
pub fn fixed_point_basis(map: &CPMap, tol: &Tolerances) -> Result<AlgebraBasis> {
    let d = check_square(map)?;
    let (r, _) = unit_eigenspaces(map, tol);
    let mut basis = Vec::new();
    for k in 0..r.ncols() {
        let x = unvec(r.column(k).as_slice(), d);
        for h in [herm_part(&x), anti_herm_part(&x)] {
            gs_insert(&mut basis, &h, tol.span_tol);
        }
    }
    Ok(AlgebraBasis { dim: d, basis })
}

fn superop_to_map(s: &CMatrix, d: usize, tol: &Tolerances) -> Result<CPMap> {
    let n = d * d;
    // S[m + n·d, i + j·d] = J[(m,i), (n,j)]
    let j = CMatrix::from_fn(n, n, |row, col| {
        let (m, i) = (row / d, row % d);
        let (nn, jj) = (col / d, col % d);
        s[(m + nn * d, i + jj * d)]
    });
    kraus_from_choi(&herm_part(&j), d, d, tol)
}

/// Spectral projection of the superoperator onto its eigenvalue-1 space.
pub fn average_channel(ch: &CPMap, tol: &Tolerances) -> Result<CPMap> {
    let d = check_tp(ch, tol)?;
    let (r, l) = unit_eigenspaces(ch, tol);
    if r.ncols() == 0 || r.ncols() != l.ncols() {
        return Err(Error::Numerical(format!(
            "eigenvalue-1 space: {} right vs {} left vectors",
            r.ncols(),
            l.ncols()
        )));
    }
    let g = (l.adjoint() * &r)
        .try_inverse()
        .ok_or_else(|| Error::Numerical("eigenvalue 1 is not semisimple".into()))?;
    let p = &r * g * l.adjoint();
    superop_to_map(&p, d, tol)
}

/// Support of `ℐ_av(𝟙/d)`.
pub fn minimal_support_projection(ch: &CPMap, tol: &Tolerances) -> Result<Projection> {
    let av = average_channel(ch, tol)?;
    let d = ch.dim_in();
    support_of(&av.apply_unchecked(&(eye(d) / c(d as f64, 0.0))), tol)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassicalAction {
    pub dim: usize,
    #[serde(with = "matser::real")]
    pub t_matrix: DMatrix<f64>,
    /// Orthonormal basis vectors as columns.
    #[serde(with = "matser")]
    pub basis: CMatrix,
}

fn action_matrix(kraus: &[CMatrix], basis: &CMatrix) -> DMatrix<f64> {
    let n = basis.ncols();
    let mut t = DMatrix::zeros(n, n);
    for k in kraus {
        let kb = basis.adjoint() * k * basis;
        for m in 0..n {
            for j in 0..n {
                t[(m, j)] += kb[(m, j)].norm_sqr();
            }
        }
    }
    t
}

/// `T_{mn} = ⟨φ_m|Φ(|φ_n⟩⟨φ_n|)|φ_m⟩` for an orthonormal basis given as columns.
pub fn classical_action(ch: &CPMap, basis: &CMatrix, tol: &Tolerances) -> Result<ClassicalAction> {
    let d = check_tp(ch, tol)?;
    if basis.nrows() != d || basis.ncols() != d {
        return Err(Error::DimMismatch(format!("basis must be {d}x{d}")));
    }
    let dev = max_abs(&(basis.adjoint() * basis - eye(d)));
    if dev > tol.span_tol {
        return Err(Error::PreconditionUnmet(format!("basis not orthonormal ({dev:.2e})")));
    }
    Ok(ClassicalAction { dim: d, t_matrix: action_matrix(ch.kraus(), basis), basis: basis.clone() })
}

/// Strong connectivity of the transition graph `n → m` when `T_{mn} > tol`.
pub fn is_irreducible(t: &ClassicalAction, tol: f64) -> bool {
    let n = t.dim;
    if n <= 1 {
        return true;
    }
    let mut g = DiGraph::<(), ()>::new();
    let nodes: Vec<_> = (0..n).map(|_| g.add_node(())).collect();
    for m in 0..n {
        for j in 0..n {
            if m != j && t.t_matrix[(m, j)] > tol {
                g.add_edge(nodes[j], nodes[m], ());
            }
        }
    }
    kosaraju_scc(&g).len() == 1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockDecomposition {
    pub projections: Vec<Projection>,
    pub per_block_actions: Vec<ClassicalAction>,
    pub per_block_fixed_states: Vec<State>,
}

struct Block {
    /// Isometry onto the block, `d × n`.
    iso: CMatrix,
    /// Stationary state of the restricted channel, in block coordinates.
    sigma: CMatrix,
    action: ClassicalAction,
    irreducible: bool,
}

fn restricted(kraus: &[CMatrix], w: &CMatrix) -> Vec<CMatrix> {
    kraus.iter().map(|k| w.adjoint() * k * w).collect()
}

fn build_block(kraus: &[CMatrix], iso: CMatrix, tol: &Tolerances) -> Result<Block> {
    let n = iso.ncols();
    let local = CPMap::new_unchecked_norm(n, n, kraus.to_vec())?;
    let av = average_channel(&local, tol)?;
    let sigma = av.apply_unchecked(&(eye(n) / c(n as f64, 0.0)));
    let sigma = herm_part(&sigma);
    let (_, vecs) = eigh(&sigma);
    let t = action_matrix(kraus, &vecs);
    let action = ClassicalAction { dim: n, t_matrix: t, basis: &iso * &vecs };
    let irreducible = is_irreducible(&action, EDGE_TOL);
    Ok(Block { iso, sigma, action, irreducible })
}

fn refine(
    kraus: &[CMatrix],
    iso: CMatrix,
    tol: &Tolerances,
    seed: u64,
    depth: usize,
    out: &mut Vec<Block>,
    stall: &mut Option<usize>,
) -> Result<()> {
    let n = iso.ncols();
    let split = if n > 1 && depth > 0 {
        let mut gens: Vec<CMatrix> = kraus.to_vec();
        gens.extend(kraus.iter().map(|k| k.adjoint()));
        let comm = commutant_of_set(&gens, n);
        generic_eigenspaces(&comm.hermitian_parts(), &eye(n), seed)?
    } else {
        vec![eye(n)]
    };
    if split.len() <= 1 {
        let b = build_block(kraus, iso, tol)?;
        if !b.irreducible && stall.is_none() {
            *stall = Some(out.len());
        }
        out.push(b);
        return Ok(());
    }
    for w in split {
        let sub = restricted(kraus, &w);
        refine(&sub, &iso * &w, tol, seed, depth - 1, out, stall)?;
    }
    Ok(())
}

fn blocks_of(ch: &CPMap, tol: &Tolerances, seed: u64) -> Result<(Vec<Block>, Option<usize>)> {
    let d = check_tp(ch, tol)?;
    let mut out = Vec::new();
    let mut stall = None;
    refine(ch.kraus(), eye(d), tol, seed, d, &mut out, &mut stall)?;
    for (bi, b) in out.iter().enumerate() {
        let p = projector_from_columns(&b.iso);
        for k in ch.kraus() {
            let r = max_abs(&commutator(k, &p));
            if r > tol.span_tol {
                return Err(Error::Numerical(format!("block {bi} does not commute with a Kraus operator ({r:.2e})")));
            }
        }
    }
    Ok((out, stall))
}

/// Finest commuting orthocomplete projections with irreducible classical actions.
pub fn kraus_block_decomposition(ch: &CPMap, tol: &Tolerances, seed: u64) -> Result<BlockDecomposition> {
    let (blocks, stall) = blocks_of(ch, tol, seed)?;
    if let Some(block) = stall {
        return Err(Error::RefinementStall { block });
    }
    let mut dec = BlockDecomposition { projections: vec![], per_block_actions: vec![], per_block_fixed_states: vec![] };
    for b in blocks {
        dec.projections.push(Projection::from_columns(&b.iso));
        let full = &b.iso * &b.sigma * b.iso.adjoint();
        dec.per_block_fixed_states.push(State::from_psd(&full, tol)?);
        dec.per_block_actions.push(b.action);
    }
    Ok(dec)
}

/// `Σ_β p_β σ_β` when every block stationary state has full rank in its block.
pub fn strictly_positive_fixed_state(
    ch: &CPMap,
    weights: Option<&[f64]>,
    tol: &Tolerances,
) -> Result<Option<State>> {
    let (blocks, _) = blocks_of(ch, tol, GENERIC_SEED)?;
    let nb = blocks.len();
    let w: Vec<f64> = match weights {
        Some(w) => {
            if w.len() != nb {
                return Err(Error::DimMismatch(format!("{} weights for {nb} blocks", w.len())));
            }
            let s: f64 = w.iter().sum();
            if w.iter().any(|&x| !(x >= 0.0)) || (s - 1.0).abs() > tol.trace_tol {
                return Err(Error::NotNormalized("block weights must be a probability vector".into()));
            }
            w.to_vec()
        }
        None => vec![1.0 / nb as f64; nb],
    };
    let d = ch.dim_in();
    let mut rho = CMatrix::zeros(d, d);
    for (b, p) in blocks.iter().zip(&w) {
        if rank_of(&b.sigma, tol)? < b.iso.ncols() {
            return Ok(None);
        }
        rho += &b.iso * &b.sigma * b.iso.adjoint() * c(*p, 0.0);
    }
    if !is_strictly_positive_matrix(&rho, tol) {
        return Ok(None);
    }
    Ok(Some(State::from_psd(&rho, tol)?))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixedPointStructure {
    pub min_support: Projection,
    pub central_projections: Vec<Projection>,
    /// `(k_α, r_α)` per block.
    pub factor_dims: Vec<(usize, usize)>,
    pub block_states: Vec<State>,
    /// `d × k_α r_α` isometries; column `i·r_α + j` is `|i⟩ ⊗ |j⟩`.
    #[serde(with = "matser::vec")]
    pub factor_isometries: Vec<CMatrix>,
}

fn polar_unitary(m: &CMatrix) -> Option<CMatrix> {
    let g = m.adjoint() * m;
    let vals = eigvalsh(&g);
    if vals[0] <= 1e-12 * vals[vals.len() - 1].max(1e-300) {
        return None;
    }
    Some(m * herm_fn(&g, |x| 1.0 / x.sqrt()))
}

/// Matrix units of a block algebra `≅ M_k ⊗ 𝟙_r` on `ℂⁿ`; returns the unitary
/// whose columns realize the tensor factorization, with `(k, r)`.
fn factorize_block(alg: &[CMatrix], n: usize, seed: u64) -> Result<(CMatrix, usize, usize)> {
    let dim_a = alg.len();
    let k = (dim_a as f64).sqrt().round() as usize;
    if k == 0 || k * k != dim_a || !n.is_multiple_of(k) {
        return Err(Error::FactorizationFailed(format!(
            "block algebra of dimension {dim_a} on C^{n} is not a full matrix factor"
        )));
    }
    let r = n / k;
    let herm: Vec<CMatrix> = alg.iter().flat_map(|b| [herm_part(b), anti_herm_part(b)]).collect();
    let spaces = generic_eigenspaces(&herm, &eye(n), seed)?;
    if spaces.len() != k || spaces.iter().any(|q| q.ncols() != r) {
        return Err(Error::FactorizationFailed(format!(
            "expected {k} minimal projections of rank {r}, found ranks {:?}",
            spaces.iter().map(|q| q.ncols()).collect::<Vec<_>>()
        )));
    }
    let x = generic_element(alg, n, seed ^ 0x9e37);
    let q1 = &spaces[0];
    let mut y = CMatrix::zeros(n, n);
    for (i, qi) in spaces.iter().enumerate() {
        let m = qi.adjoint() * &x * q1;
        let u = if i == 0 {
            eye(r)
        } else {
            polar_unitary(&m).ok_or_else(|| {
                Error::FactorizationFailed(format!("partial isometry {i} -> 0 is singular"))
            })?
        };
        y.view_mut((0, i * r), (n, r)).copy_from(&(qi * u));
    }
    for a in alg {
        let t = y.adjoint() * a * &y;
        let m = CMatrix::from_fn(k, k, |i, j| (0..r).map(|q| t[(i * r + q, j * r + q)]).sum::<C64>() / c(r as f64, 0.0));
        let res = fro_norm(&(&t - kron(&m, &eye(r)))) / fro_norm(a).max(1e-300);
        if res > 1e-6 {
            return Err(Error::FactorizationFailed(format!("matrix units off by {res:.2e}")));
        }
    }
    Ok((y, k, r))
}

/// Central decomposition of `𝒫 ℱ(Φ*) 𝒫` with tensor factorization of each block.
pub fn fixed_algebra_decomposition(ch: &CPMap, tol: &Tolerances) -> Result<FixedPointStructure> {
    let d = check_tp(ch, tol)?;
    let av = average_channel(ch, tol)?;
    let rho0 = herm_part(&av.apply_unchecked(&(eye(d) / c(d as f64, 0.0))));
    let min_support = support_of(&rho0, tol)?;
    let v = min_support.range_basis();
    let p = v.ncols();
    let dual_fixed = fixed_point_basis(&ch.dual(), tol)?;
    let compressed: Vec<CMatrix> = dual_fixed.basis.iter().map(|f| v.adjoint() * f * &v).collect();
    let alg = algebra_closure(&compressed, p, tol)?;
    let cps = center_projections(&alg, tol)?;

    let mut out = FixedPointStructure {
        min_support: min_support.clone(),
        central_projections: vec![],
        factor_dims: vec![],
        block_states: vec![],
        factor_isometries: vec![],
    };
    for (bi, pa) in cps.iter().enumerate() {
        let w = pa.range_basis();
        let n = w.ncols();
        let mut local = Vec::new();
        for b in &alg.basis {
            gs_insert(&mut local, &(w.adjoint() * b * &w), tol.span_tol);
        }
        let (y, k, r) = factorize_block(&local, n, GENERIC_SEED.wrapping_add(bi as u64))?;
        let iso = &v * &w * y;
        let block = iso.adjoint() * &rho0 * &iso;
        let omega = trace_out_first(&block, k, r);
        let tr = omega.trace().re;
        if !(tr > 0.0) {
            return Err(Error::FactorizationFailed(format!("block {bi} carries no weight of the average state")));
        }
        let omega = State::from_psd(&(omega / c(tr, 0.0)), tol)?;
        out.central_projections.push(Projection::from_columns(&(&v * &w)));
        out.factor_dims.push((k, r));
        out.block_states.push(omega);
        out.factor_isometries.push(iso);
    }
    let res = factor_form_residual(&av, &out, 8, GENERIC_SEED);
    if res > FACTOR_TOL {
        return Err(Error::FactorizationFailed(format!("factor form of the average channel off by {res:.2e}")));
    }
    Ok(out)
}

/// `Σ_α Y_α (tr_ℛ[Y_α† X Y_α] ⊗ ω_α) Y_α†`.
pub fn factor_form_apply(s: &FixedPointStructure, x: &CMatrix) -> CMatrix {
    let d = x.nrows();
    let mut out = CMatrix::zeros(d, d);
    for ((y, &(k, r)), w) in s.factor_isometries.iter().zip(&s.factor_dims).zip(&s.block_states) {
        let inner = trace_out_second(&(y.adjoint() * x * y), k, r);
        out += y * kron(&inner, w.matrix()) * y.adjoint();
    }
    out
}

/// Largest relative deviation between the average channel and its factor form
/// on random inputs compressed to the minimal support.
pub fn factor_form_residual(av: &CPMap, s: &FixedPointStructure, samples: usize, seed: u64) -> f64 {
    let d = av.dim_in();
    let mut rng = generators::rng(seed);
    let p = s.min_support.matrix();
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let g = generators::gaussian_matrix(&mut rng, d, d);
        let x = p * g * p;
        let a = av.apply_unchecked(&x);
        let b = factor_form_apply(s, &x);
        worst = worst.max(fro_norm(&(a - b)) / fro_norm(&x).max(1e-300));
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::*;
    use crate::qmaps::{compose, convex_mix};

    fn t() -> Tolerances {
        Tolerances::default()
    }

    fn same_map(a: &CPMap, b: &CPMap) -> f64 {
        max_abs(&(a.choi() - b.choi()))
    }

    #[test]
    fn fixed_basis_examples() {
        assert_eq!(fixed_point_basis(&CPMap::identity(2), &t()).unwrap().len(), 4);
        let phi = ket(2, 0);
        let mix = depolarize_to_pure(0.5, &phi).unwrap();
        let fb = fixed_point_basis(&mix, &t()).unwrap();
        assert_eq!(fb.len(), 1);
        assert!(fb.contains(&outer(&phi, &phi), 1e-8));
        let e = Effect::new(diag(&[1.0, 0.5]), &t()).unwrap();
        let fb = fixed_point_basis(&CPMap::luders(&e), &t()).unwrap();
        assert_eq!(fb.len(), 1);
        assert!(fb.contains(&diag(&[1.0, 0.0]), 1e-8));
    }

    #[test]
    fn average_channel_examples() {
        let id = CPMap::identity(3);
        assert!(same_map(&average_channel(&id, &t()).unwrap(), &id) < 1e-10);
        let prep = CPMap::prepare(2, &State::pure(&ket(2, 1)));
        assert!(same_map(&average_channel(&prep, &t()).unwrap(), &prep) < 1e-10);

        let inst = qutrit_remark_instrument();
        let ix = inst.channel();
        let av = average_channel(&ix, &t()).unwrap();
        assert!(same_map(&compose(&av, &ix).unwrap(), &av) < 1e-8);
        assert!(same_map(&compose(&av, &av).unwrap(), &av) < 1e-8);
        // Cesàro oracle
        let mut acc = CMatrix::zeros(9, 9);
        let mut pw = CPMap::identity(3);
        let n = 400;
        for _ in 0..n {
            pw = compose(&ix, &pw).unwrap().canonical(&t());
            acc += pw.choi();
        }
        acc /= c(n as f64, 0.0);
        assert!(max_abs(&(acc - av.choi())) < 1e-2);
        assert!(av.is_trace_preserving(&Tolerances { trace_tol: 1e-8, ..t() }));
    }

    #[test]
    fn minimal_support_examples() {
        let mut r = rng(3);
        let b = random_bistochastic(&mut r, 3, 2);
        let p = minimal_support_projection(&b, &t()).unwrap();
        assert!(max_abs(&(p.matrix() - eye(3))) < 1e-8);
        let ix = qutrit_remark_instrument().channel();
        let p = minimal_support_projection(&ix, &t()).unwrap();
        assert!(max_abs(&(p.matrix() - diag(&[0.0, 1.0, 1.0]))) < 1e-8);
        let phi = ket(2, 1);
        let p = minimal_support_projection(&CPMap::prepare(2, &State::pure(&phi)), &t()).unwrap();
        assert!(max_abs(&(p.matrix() - outer(&phi, &phi))) < 1e-8);
    }

    #[test]
    fn classical_action_examples() {
        let ca = classical_action(&CPMap::identity(2), &eye(2), &t()).unwrap();
        assert!(!is_irreducible(&ca, 1e-10));
        assert!((ca.t_matrix.clone() - DMatrix::identity(2, 2)).abs().max() < 1e-12);
        let h = CPMap::unitary(&hadamard()).unwrap();
        let ca = classical_action(&h, &eye(2), &t()).unwrap();
        assert!(ca.t_matrix.iter().all(|x| (x - 0.5).abs() < 1e-12));
        assert!(is_irreducible(&ca, 1e-10));
        let mut r = rng(9);
        let b = random_bistochastic(&mut r, 3, 3);
        let ca = classical_action(&b, &eye(3), &t()).unwrap();
        for i in 0..3 {
            assert!((ca.t_matrix.row(i).sum() - 1.0).abs() < 1e-10);
            assert!((ca.t_matrix.column(i).sum() - 1.0).abs() < 1e-10);
        }
        let bd = block_depolarizing(&[2, 2]);
        let ca = classical_action(&bd, &eye(4), &t()).unwrap();
        assert!(!is_irreducible(&ca, 1e-10));
    }

    #[test]
    fn block_decomposition_examples() {
        let z = CPMap::unitary(&sigma_z()).unwrap();
        let dec = kraus_block_decomposition(&z, &t(), GENERIC_SEED).unwrap();
        assert_eq!(dec.projections.len(), 2);
        let mut got: Vec<f64> = dec.projections.iter().map(|p| p.matrix()[(0, 0)].re).collect();
        got.sort_by(f64::total_cmp);
        assert!((got[0]).abs() < 1e-10 && (got[1] - 1.0).abs() < 1e-10);

        let dec = kraus_block_decomposition(&completely_depolarizing(3), &t(), GENERIC_SEED).unwrap();
        assert_eq!(dec.projections.len(), 1);

        let dec = kraus_block_decomposition(&block_depolarizing(&[2, 2]), &t(), GENERIC_SEED).unwrap();
        assert_eq!(dec.projections.len(), 2);
        for p in &dec.projections {
            assert_eq!(p.rank(), 2);
            let m = p.matrix();
            let lo = m.view((0, 0), (2, 2)).into_owned();
            assert!(max_abs(&(lo.clone() - eye(2))) < 1e-8 || max_abs(&lo) < 1e-8);
        }

        assert!(matches!(
            kraus_block_decomposition(&amplitude_damping(0.3), &t(), GENERIC_SEED),
            Err(Error::RefinementStall { .. })
        ));
    }

    #[test]
    fn fixed_state_examples() {
        let mut r = rng(5);
        let b = random_bistochastic(&mut r, 3, 3);
        let s = strictly_positive_fixed_state(&b, None, &t()).unwrap().unwrap();
        assert!(max_abs(&(b.apply(s.matrix()).unwrap() - s.matrix())) < 1e-8);
        let z = CPMap::unitary(&sigma_z()).unwrap();
        let s = strictly_positive_fixed_state(&z, None, &t()).unwrap().unwrap();
        assert!(max_abs(&(s.matrix() - eye(2) / c(2.0, 0.0))) < 1e-10);
        let mix = depolarize_to_pure(0.5, &ket(2, 0)).unwrap();
        assert!(strictly_positive_fixed_state(&mix, None, &t()).unwrap().is_none());
        assert!(strictly_positive_fixed_state(&amplitude_damping(0.4), None, &t()).unwrap().is_none());
    }

    #[test]
    fn factor_decomposition_examples() {
        let u = CPMap::unitary(&diag(&[1.0, -1.0])).unwrap();
        let s = fixed_algebra_decomposition(&u, &t()).unwrap();
        assert!(max_abs(&(s.min_support.matrix() - eye(2))) < 1e-8);
        assert_eq!(s.factor_dims, vec![(1, 1), (1, 1)]);

        let s = fixed_algebra_decomposition(&completely_depolarizing(3), &t()).unwrap();
        assert_eq!(s.factor_dims, vec![(1, 3)]);
        assert!(max_abs(&(s.block_states[0].matrix() - eye(3) / c(3.0, 0.0))) < 1e-8);

        let ix = qutrit_remark_instrument().channel();
        let s = fixed_algebra_decomposition(&ix, &t()).unwrap();
        assert!(max_abs(&(s.min_support.matrix() - diag(&[0.0, 1.0, 1.0]))) < 1e-8);
        assert_eq!(s.factor_dims, vec![(1, 1), (1, 1)]);

        let mix = convex_mix(&CPMap::identity(2), &completely_depolarizing(2), 0.0).unwrap();
        let s = fixed_algebra_decomposition(&mix, &t()).unwrap();
        assert_eq!(s.factor_dims, vec![(1, 2)]);

        let id = CPMap::identity(2);
        let s = fixed_algebra_decomposition(&id, &t()).unwrap();
        assert_eq!(s.factor_dims, vec![(2, 1)]);
    }
}
