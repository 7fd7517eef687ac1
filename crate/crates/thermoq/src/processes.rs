//! Measurement processes `(apparatus, ξ, ℰ, 𝖹)`: evaluation, induced
//! instruments, conjugate channels, tier validation and dilation constructions.
//!
//! Composite spaces are ordered system first: `ℋ_S ⊗ ℋ_A`.

use crate::error::{Error, Result};
use crate::hierarchy::classify_effect;
use crate::measurements::{Instrument, Observable};
use crate::opalg::*;
use crate::qmaps::{self, classify_map, CPMap, MapClassification};
use crate::scaling::{decide_rank_nondecreasing, Config, RankDecision, Verdict};
use serde::{Deserialize, Serialize};

/// Label of the single outcome of an operation-valued process.
pub const EFFECT_LABEL: &str = "z";

#[derive(Debug, Clone, PartialEq)]
pub enum Pointer {
    Observable(Observable),
    /// Single pointer effect: the process implements one operation.
    Effect { label: String, effect: Effect },
}

#[derive(Serialize, Deserialize)]
struct PointerEntry {
    label: String,
    effect: Effect,
}

impl Serialize for Pointer {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let entries: Vec<PointerEntry> = self
            .entries()
            .into_iter()
            .map(|(label, effect)| PointerEntry { label, effect })
            .collect();
        entries.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Pointer {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let entries = Vec::<PointerEntry>::deserialize(d)?;
        if entries.is_empty() {
            return Err(D::Error::custom("pointer needs at least one effect"));
        }
        let tol = Tolerances::default();
        if entries.len() == 1 {
            let e = &entries[0].effect;
            if max_abs(&(e.matrix() - eye(e.dim()))) > tol.eff_tol {
                let PointerEntry { label, effect } = entries.into_iter().next().unwrap();
                return Ok(Pointer::Effect { label, effect });
            }
        }
        let (labels, effects) = entries.into_iter().map(|e| (e.label, e.effect)).unzip();
        Observable::new(labels, effects, &tol).map(Pointer::Observable).map_err(D::Error::custom)
    }
}

impl Pointer {
    pub fn observable(obs: Observable) -> Self {
        Pointer::Observable(obs)
    }

    pub fn effect(effect: Effect) -> Self {
        Pointer::Effect { label: EFFECT_LABEL.into(), effect }
    }

    pub fn dim(&self) -> usize {
        match self {
            Pointer::Observable(o) => o.dim(),
            Pointer::Effect { effect, .. } => effect.dim(),
        }
    }

    pub fn labels(&self) -> Vec<String> {
        match self {
            Pointer::Observable(o) => o.labels.clone(),
            Pointer::Effect { label, .. } => vec![label.clone()],
        }
    }

    pub fn entries(&self) -> Vec<(String, Effect)> {
        match self {
            Pointer::Observable(o) => o.labels.iter().cloned().zip(o.effects.iter().cloned()).collect(),
            Pointer::Effect { label, effect } => vec![(label.clone(), effect.clone())],
        }
    }

    pub fn get(&self, label: &str) -> Option<Effect> {
        self.entries().into_iter().find(|(l, _)| l == label).map(|(_, e)| e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProcess")]
pub struct MeasurementProcess {
    pub sys_dim: usize,
    pub app_dim: usize,
    pub xi: State,
    pub interaction: CPMap,
    pub pointer: Pointer,
}

#[derive(Deserialize)]
struct RawProcess {
    sys_dim: usize,
    app_dim: usize,
    xi: State,
    interaction: CPMap,
    pointer: Pointer,
}

impl TryFrom<RawProcess> for MeasurementProcess {
    type Error = String;
    fn try_from(r: RawProcess) -> std::result::Result<Self, String> {
        MeasurementProcess::new(r.sys_dim, r.app_dim, r.xi, r.interaction, r.pointer, &Tolerances::default())
            .map_err(crate::error::tagged)
    }
}

impl MeasurementProcess {
    pub fn new(
        sys_dim: usize,
        app_dim: usize,
        xi: State,
        interaction: CPMap,
        pointer: Pointer,
        tol: &Tolerances,
    ) -> Result<Self> {
        let n = sys_dim * app_dim;
        if n == 0 {
            return Err(Error::DimMismatch("dimensions must be positive".into()));
        }
        if xi.dim() != app_dim || pointer.dim() != app_dim {
            return Err(Error::DimMismatch(format!(
                "apparatus dimension {app_dim}, but ξ is {} and the pointer {}",
                xi.dim(),
                pointer.dim()
            )));
        }
        if interaction.dim_in() != n || interaction.dim_out() != n {
            return Err(Error::DimMismatch(format!(
                "interaction must act on dimension {n}, got {} -> {}",
                interaction.dim_in(),
                interaction.dim_out()
            )));
        }
        let dev = max_abs(&(interaction.dual_unit() - eye(n)));
        if dev > tol.trace_tol.max(1e-9) {
            return Err(Error::NotTracePreserving(dev));
        }
        Ok(MeasurementProcess { sys_dim, app_dim, xi, interaction, pointer })
    }

    fn pointer_effect(&self, outcome: &str) -> Result<Effect> {
        self.pointer.get(outcome).ok_or_else(|| Error::UnknownOutcome(outcome.to_string()))
    }
}

/// Weighted eigen-decomposition of a PSD matrix, dropping null directions.
fn weighted_vectors(m: &CMatrix) -> Vec<(f64, CMatrix)> {
    let (vals, vecs) = eigh(m);
    let top = vals.last().copied().unwrap_or(0.0).max(0.0);
    vals.iter()
        .enumerate()
        .filter(|(_, &l)| l > 1e-14 * top.max(1.0))
        .map(|(k, &l)| (l, vecs.columns(k, 1).into_owned()))
        .collect()
}

/// `tr_A[(𝟙 ⊗ Z_x) ℰ(ρ ⊗ ξ)]`.
pub fn evaluate_process(p: &MeasurementProcess, outcome: &str, rho: &State) -> Result<CMatrix> {
    if rho.dim() != p.sys_dim {
        return Err(Error::DimMismatch(format!("state of dimension {}, system is {}", rho.dim(), p.sys_dim)));
    }
    let z = p.pointer_effect(outcome)?;
    let out = p.interaction.apply(&kron(rho.matrix(), p.xi.matrix()))?;
    let w = kron(&eye(p.sys_dim), z.matrix()) * out;
    Ok(herm_part(&trace_out_second(&w, p.sys_dim, p.app_dim)))
}

/// Kraus operators of the operation induced by pointer effect `z`.
fn induced_kraus(p: &MeasurementProcess, z: &Effect) -> Vec<CMatrix> {
    let s = p.sys_dim;
    let id = eye(s);
    let xs = weighted_vectors(p.xi.matrix());
    let zs = weighted_vectors(z.matrix());
    let mut out = Vec::new();
    for (q, xk) in &xs {
        let right = kron(&id, xk);
        for (w, zl) in &zs {
            let left = kron(&id, &zl.adjoint());
            let f = c((q * w).sqrt(), 0.0);
            for k in p.interaction.kraus() {
                out.push(&left * k * &right * f);
            }
        }
    }
    if out.is_empty() {
        out.push(CMatrix::zeros(s, s));
    }
    out
}

pub fn induced_operation(p: &MeasurementProcess, outcome: &str, tol: &Tolerances) -> Result<CPMap> {
    let z = p.pointer_effect(outcome)?;
    let s = p.sys_dim;
    Ok(CPMap::new_unchecked_norm(s, s, induced_kraus(p, &z))?.compressed(tol))
}

pub fn induced_instrument(p: &MeasurementProcess, tol: &Tolerances) -> Result<Instrument> {
    let labels = p.pointer.labels();
    let ops = labels
        .iter()
        .map(|l| induced_operation(p, l, tol))
        .collect::<Result<Vec<_>>>()?;
    Instrument::new(labels, ops, tol)
}

/// `Λ(ρ) = tr_S[ℰ(ρ ⊗ ξ)]`, system to apparatus.
pub fn conjugate_channel(p: &MeasurementProcess, tol: &Tolerances) -> Result<CPMap> {
    let (s, a) = (p.sys_dim, p.app_dim);
    let ida = eye(a);
    let ids = eye(s);
    let mut kraus = Vec::new();
    for (q, xk) in weighted_vectors(p.xi.matrix()) {
        let right = kron(&ids, &xk) * c(q.sqrt(), 0.0);
        for l in 0..s {
            let left = kron(&ket(s, l).adjoint(), &ida);
            for k in p.interaction.kraus() {
                kraus.push(&left * k * &right);
            }
        }
    }
    Ok(CPMap::new_unchecked_norm(s, a, kraus)?.compressed(tol))
}

/// `Γ_ξ ∘ ℰ*` with `Γ_ξ(B) = tr_A[(𝟙 ⊗ ξ) B]`; maps `S⊗A → S`.
pub fn restriction_map(p: &MeasurementProcess, tol: &Tolerances) -> Result<CPMap> {
    let s = p.sys_dim;
    let ids = eye(s);
    let mut kraus = Vec::new();
    for (q, xk) in weighted_vectors(p.xi.matrix()) {
        let left = kron(&ids, &xk.adjoint()) * c(q.sqrt(), 0.0);
        for k in p.interaction.kraus() {
            kraus.push(&left * k.adjoint());
        }
    }
    Ok(CPMap::new_unchecked_norm(s * p.app_dim, s, kraus)?.compressed(tol))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Tier {
    I,
    II,
    III,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProcessClassReport {
    pub xi_strictly_positive: bool,
    pub strictly_positive: bool,
    pub rank_nondecreasing: Verdict,
    pub bistochastic: bool,
    pub interaction: MapClassification,
    pub rank_decision: RankDecision,
    pub admissible_tiers: Vec<Tier>,
}

impl ProcessClassReport {
    pub fn admits(&self, t: Tier) -> bool {
        self.admissible_tiers.contains(&t)
    }
}

pub fn validate_process_class(p: &MeasurementProcess, cfg: &Config) -> Result<ProcessClassReport> {
    let tol = &cfg.tol;
    let xi_pos = is_strictly_positive_op(p.xi.as_hermitian(), tol);
    let cls = classify_map(&p.interaction, tol)?;
    let dec = decide_rank_nondecreasing(&p.interaction, cfg)?;
    let mut tiers = Vec::new();
    if xi_pos && cls.strictly_positive {
        tiers.push(Tier::I);
    }
    if xi_pos && dec.verdict == Verdict::Yes {
        tiers.push(Tier::II);
    }
    if xi_pos && cls.bistochastic {
        tiers.push(Tier::III);
    }
    Ok(ProcessClassReport {
        xi_strictly_positive: xi_pos,
        strictly_positive: cls.strictly_positive,
        rank_nondecreasing: dec.verdict,
        bistochastic: cls.bistochastic,
        interaction: cls,
        rank_decision: dec,
        admissible_tiers: tiers,
    })
}

/// `ℰ(A ⊗ B) = Σ_x ℐ_x(A) ⊗ tr[B] |x⟩⟨x|` with `ξ = 𝟙/N` and `Z_x = |x⟩⟨x|`.
fn outcome_register_process(inst: &Instrument, tol: &Tolerances) -> Result<MeasurementProcess> {
    let d = inst.dim();
    let n = inst.len();
    let mut kraus = Vec::new();
    for (x, op) in inst.operations.iter().enumerate() {
        for k in op.kraus() {
            for j in 0..n {
                kraus.push(kron(k, &outer(&ket(n, x), &ket(n, j))));
            }
        }
    }
    let interaction = CPMap::new_unchecked_norm(d * n, d * n, kraus)?;
    let effects = (0..n)
        .map(|x| Effect::new(outer(&ket(n, x), &ket(n, x)), tol))
        .collect::<Result<Vec<_>>>()?;
    let pointer = Observable::new(inst.labels.clone(), effects, tol)?;
    MeasurementProcess::new(d, n, State::maximally_mixed(n), interaction, Pointer::observable(pointer), tol)
}

pub fn dilate_weak_third(inst: &Instrument, tol: &Tolerances) -> Result<MeasurementProcess> {
    for (l, op) in inst.labels.iter().zip(&inst.operations) {
        if !is_strictly_positive_matrix(&op.image_of_unit(), tol) {
            return Err(Error::NotStrictlyPositiveOperation(l.clone()));
        }
    }
    outcome_register_process(inst, tol)
}

pub fn dilate_strong_third(inst: &Instrument, cfg: &Config) -> Result<MeasurementProcess> {
    let tol = &cfg.tol;
    for (l, op) in inst.labels.iter().zip(&inst.operations) {
        let e = Effect::new(op.dual_unit(), tol)?;
        if !classify_effect(&e, tol).indefinite {
            return Err(Error::PreconditionUnmet(format!("effect of outcome {l:?} is not indefinite")));
        }
        let dec = decide_rank_nondecreasing(op, cfg)?;
        if dec.verdict != Verdict::Yes {
            return Err(Error::PreconditionUnmet(format!(
                "operation {l:?} not certified rank non-decreasing ({:?})",
                dec.verdict
            )));
        }
    }
    let p = outcome_register_process(inst, tol)?;
    let rep = validate_process_class(&p, cfg)?;
    if !rep.admits(Tier::II) {
        return Err(Error::PreconditionUnmet(format!(
            "interaction not certified rank non-decreasing ({:?})",
            rep.rank_nondecreasing
        )));
    }
    Ok(p)
}

fn swap_unitary(d: usize) -> CMatrix {
    let mut u = CMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            u[(j * d + i, i * d + j)] = c(1.0, 0.0);
        }
    }
    u
}

fn swap_with_pointer(xi: &State, pointer: Pointer, tol: &Tolerances) -> Result<MeasurementProcess> {
    let d = xi.dim();
    if !is_strictly_positive_op(xi.as_hermitian(), tol) {
        return Err(Error::XiNotStrictlyPositive);
    }
    if pointer.dim() != d {
        return Err(Error::DimMismatch(format!("pointer of dimension {}, system is {d}", pointer.dim())));
    }
    MeasurementProcess::new(d, d, xi.clone(), CPMap::unitary(&swap_unitary(d))?, pointer, tol)
}

/// Unitary swap with pointer effect `E`; implements `tr[E·] ξ`.
pub fn swap_process(e: &Effect, xi: &State, tol: &Tolerances) -> Result<MeasurementProcess> {
    swap_with_pointer(xi, Pointer::effect(e.clone()), tol)
}

/// Swap with a full pointer observable; implements `{tr[Z_x·] ξ}`.
pub fn swap_process_observable(obs: &Observable, xi: &State, tol: &Tolerances) -> Result<MeasurementProcess> {
    swap_with_pointer(xi, Pointer::observable(obs.clone()), tol)
}

/// Permutation `|s, b, a⟩ ↦ |s, a, b⟩` from `S⊗B⊗A` to `S⊗A⊗B`.
fn reorder(s: usize, a: usize, b: usize) -> CMatrix {
    let n = s * a * b;
    let mut p = CMatrix::zeros(n, n);
    for i in 0..s {
        for x in 0..a {
            for y in 0..b {
                p[((i * a + x) * b + y, (i * b + y) * a + x)] = c(1.0, 0.0);
            }
        }
    }
    p
}

/// `K` on `S⊗B` lifted to `S⊗A⊗B`, identity on `A`.
fn lift_second(k: &CMatrix, s: usize, a: usize, b: usize) -> CMatrix {
    let p = reorder(s, a, b);
    &p * kron(k, &eye(a)) * p.adjoint()
}

fn check_same_system(p1: &MeasurementProcess, p2: &MeasurementProcess) -> Result<usize> {
    if p1.sys_dim != p2.sys_dim {
        return Err(Error::DimMismatch(format!("system dimensions {} and {}", p1.sys_dim, p2.sys_dim)));
    }
    Ok(p1.sys_dim)
}

/// Controlled mixture on apparatus `A₁⊗A₂⊗ℂ²`.
pub fn convex_combine_processes(
    p1: &MeasurementProcess,
    p2: &MeasurementProcess,
    lambda: f64,
    tol: &Tolerances,
) -> Result<MeasurementProcess> {
    let s = check_same_system(p1, p2)?;
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::PreconditionUnmet(format!("λ = {lambda} outside [0, 1]")));
    }
    let (a1, a2) = (p1.app_dim, p2.app_dim);
    let ctl = |k: usize| outer(&ket(2, k), &ket(2, k));
    let mut kraus = Vec::new();
    for k in p1.interaction.kraus() {
        kraus.push(kron(&kron(k, &eye(a2)), &ctl(0)));
    }
    for k in p2.interaction.kraus() {
        kraus.push(kron(&lift_second(k, s, a1, a2), &ctl(1)));
    }
    let app = a1 * a2 * 2;
    let interaction = CPMap::new_unchecked_norm(s * app, s * app, kraus)?;
    let xi_m = kron(&kron(p1.xi.matrix(), p2.xi.matrix()), &diag(&[lambda, 1.0 - lambda]));
    let xi = State::from_psd(&xi_m, tol)?;
    let combine = |z1: &Effect, z2: &Effect| {
        let m = kron(&kron(z1.matrix(), &eye(a2)), &ctl(0)) + kron(&kron(&eye(a1), z2.matrix()), &ctl(1));
        Effect::new(m, tol)
    };
    let pointer = match (&p1.pointer, &p2.pointer) {
        (Pointer::Effect { label, effect: z1 }, Pointer::Effect { effect: z2, .. }) => {
            Pointer::Effect { label: label.clone(), effect: combine(z1, z2)? }
        }
        (Pointer::Observable(o1), Pointer::Observable(o2)) => {
            let mut effects = Vec::new();
            for (l, z1) in o1.labels.iter().zip(&o1.effects) {
                let z2 = o2
                    .effect(l)
                    .ok_or_else(|| Error::PreconditionUnmet(format!("outcome {l:?} missing from the second process")))?;
                effects.push(combine(z1, z2)?);
            }
            if o1.len() != o2.len() {
                return Err(Error::PreconditionUnmet("processes have different outcome sets".into()));
            }
            Pointer::observable(Observable::new(o1.labels.clone(), effects, tol)?)
        }
        _ => return Err(Error::PreconditionUnmet("cannot mix an operation process with an instrument process".into())),
    };
    MeasurementProcess::new(s, app, xi, interaction, pointer, tol)
}

/// `ℰ = ℰ₂' ∘ (ℰ₁ ⊗ id)` on apparatus `A₁⊗A₂`; implements `Φ₂ ∘ Φ₁` with labels `"x,y"`.
pub fn compose_processes(
    p1: &MeasurementProcess,
    p2: &MeasurementProcess,
    tol: &Tolerances,
) -> Result<MeasurementProcess> {
    let s = check_same_system(p1, p2)?;
    let (a1, a2) = (p1.app_dim, p2.app_dim);
    let first = CPMap::new_unchecked_norm(
        s * a1 * a2,
        s * a1 * a2,
        p1.interaction.kraus().iter().map(|k| kron(k, &eye(a2))).collect(),
    )?;
    let second = CPMap::new_unchecked_norm(
        s * a1 * a2,
        s * a1 * a2,
        p2.interaction.kraus().iter().map(|k| lift_second(k, s, a1, a2)).collect(),
    )?;
    let interaction = qmaps::compose(&second, &first)?.compressed(tol);
    let xi = State::from_psd(&kron(p1.xi.matrix(), p2.xi.matrix()), tol)?;
    let pointer = match (&p1.pointer, &p2.pointer) {
        (Pointer::Observable(o1), Pointer::Observable(o2)) => {
            let mut labels = Vec::new();
            let mut effects = Vec::new();
            for (x, z1) in o1.labels.iter().zip(&o1.effects) {
                for (y, z2) in o2.labels.iter().zip(&o2.effects) {
                    labels.push(format!("{x},{y}"));
                    effects.push(Effect::new(kron(z1.matrix(), z2.matrix()), tol)?);
                }
            }
            Pointer::observable(Observable::new(labels, effects, tol)?)
        }
        (a, b) => {
            let ea = a.entries();
            let eb = b.entries();
            if ea.len() != 1 || eb.len() != 1 {
                return Err(Error::PreconditionUnmet(
                    "cannot compose an operation process with a multi-outcome process".into(),
                ));
            }
            Pointer::Effect {
                label: format!("{},{}", ea[0].0, eb[0].0),
                effect: Effect::new(kron(ea[0].1.matrix(), eb[0].1.matrix()), tol)?,
            }
        }
    };
    MeasurementProcess::new(s, a1 * a2, xi, interaction, pointer, tol)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InteriorApproximation {
    pub process: MeasurementProcess,
    /// Induced operations of the perturbed process, by outcome.
    pub operations: Vec<(String, CPMap)>,
    /// Largest Choi trace-norm distance to the original operations.
    pub choi_distance: f64,
    /// `2 ε d`.
    pub bound: f64,
}

/// Replace the pure `ξ` by `(ξ + ε Ω)/(1 + ε)`.
pub fn interior_approximation(
    p: &MeasurementProcess,
    eps: f64,
    omega: &State,
    tol: &Tolerances,
) -> Result<InteriorApproximation> {
    if !(eps > 0.0) {
        return Err(Error::PreconditionUnmet(format!("ε = {eps} must be positive")));
    }
    if omega.dim() != p.app_dim || !is_strictly_positive_op(omega.as_hermitian(), tol) {
        return Err(Error::PreconditionUnmet("Ω must be a strictly positive apparatus state".into()));
    }
    if rank_tol(p.xi.as_hermitian(), tol)? != 1 {
        return Err(Error::PreconditionUnmet("ξ is not pure".into()));
    }
    let canon = p.interaction.canonical(tol);
    let n = p.sys_dim * p.app_dim;
    let unitary = canon.kraus().len() == 1 && max_abs(&(&canon.kraus()[0] * canon.kraus()[0].adjoint() - eye(n))) <= 1e-9;
    if !unitary {
        return Err(Error::PreconditionUnmet("interaction is not unitary".into()));
    }
    let xi = State::from_psd(&((p.xi.matrix() + omega.matrix() * c(eps, 0.0)) / c(1.0 + eps, 0.0)), tol)?;
    let pert = MeasurementProcess::new(p.sys_dim, p.app_dim, xi, p.interaction.clone(), p.pointer.clone(), tol)?;
    let mut ops = Vec::new();
    let mut dist: f64 = 0.0;
    for l in p.pointer.labels() {
        let a = induced_operation(p, &l, tol)?;
        let b = induced_operation(&pert, &l, tol)?;
        dist = dist.max(trace_norm(&(a.choi() - b.choi())));
        ops.push((l, b));
    }
    Ok(InteriorApproximation {
        process: pert,
        operations: ops,
        choi_distance: dist,
        bound: 2.0 * eps * p.sys_dim as f64,
    })
}
