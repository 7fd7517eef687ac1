//! Observables, instruments, the four non-disturbance properties and the
//! cross-audit against the no-go results for constrained instruments.

use crate::error::{Error, Result};
use crate::fixedpoints::fixed_point_basis;
use crate::hierarchy::{classify_effect, HierarchyVerdict, Membership};
use crate::opalg::*;
use crate::qmaps::CPMap;
use serde::{Deserialize, Serialize};

fn check_labels(labels: &[String], n: usize) -> Result<()> {
    if labels.is_empty() {
        return Err(Error::PreconditionUnmet("at least one outcome required".into()));
    }
    if labels.len() != n {
        return Err(Error::DimMismatch(format!("{} labels for {n} entries", labels.len())));
    }
    let mut seen = std::collections::HashSet::new();
    for l in labels {
        if !seen.insert(l) {
            return Err(Error::PreconditionUnmet(format!("duplicate outcome label {l:?}")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawObservable")]
pub struct Observable {
    pub labels: Vec<String>,
    pub effects: Vec<Effect>,
}

#[derive(Deserialize)]
struct RawObservable {
    labels: Vec<String>,
    effects: Vec<Effect>,
}

impl TryFrom<RawObservable> for Observable {
    type Error = String;
    fn try_from(r: RawObservable) -> std::result::Result<Self, String> {
        Observable::new(r.labels, r.effects, &Tolerances::default()).map_err(crate::error::tagged)
    }
}

impl Observable {
    pub fn new(labels: Vec<String>, effects: Vec<Effect>, tol: &Tolerances) -> Result<Self> {
        check_labels(&labels, effects.len())?;
        let d = effects[0].dim();
        let mut sum = CMatrix::zeros(d, d);
        for (l, e) in labels.iter().zip(&effects) {
            if e.dim() != d {
                return Err(Error::DimMismatch(format!("effect {l:?} has dimension {}, expected {d}", e.dim())));
            }
            if op_norm(e.matrix()) <= tol.eff_tol {
                return Err(Error::InvalidEffect(format!("effect {l:?} vanishes")));
            }
            sum += e.matrix();
        }
        let dev = max_abs(&(sum - eye(d)));
        if dev > tol.eff_tol.max(tol.trace_tol) {
            return Err(Error::NotNormalized(format!("effects sum to the unit only within {dev:.2e}")));
        }
        Ok(Observable { labels, effects })
    }

    pub fn dim(&self) -> usize {
        self.effects[0].dim()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn effect(&self, label: &str) -> Option<&Effect> {
        self.labels.iter().position(|l| l == label).map(|i| &self.effects[i])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInstrument")]
pub struct Instrument {
    pub labels: Vec<String>,
    pub operations: Vec<CPMap>,
}

#[derive(Deserialize)]
struct RawInstrument {
    labels: Vec<String>,
    operations: Vec<CPMap>,
}

impl TryFrom<RawInstrument> for Instrument {
    type Error = String;
    fn try_from(r: RawInstrument) -> std::result::Result<Self, String> {
        Instrument::new(r.labels, r.operations, &Tolerances::default()).map_err(crate::error::tagged)
    }
}

impl Instrument {
    pub fn new(labels: Vec<String>, operations: Vec<CPMap>, tol: &Tolerances) -> Result<Self> {
        check_labels(&labels, operations.len())?;
        let d = operations[0].dim_in();
        let mut sum = CMatrix::zeros(d, d);
        for (l, op) in labels.iter().zip(&operations) {
            if op.dim_in() != d || op.dim_out() != d {
                return Err(Error::DimMismatch(format!(
                    "operation {l:?} is {} -> {}, expected {d} -> {d}",
                    op.dim_in(),
                    op.dim_out()
                )));
            }
            let e = op.dual_unit();
            if op_norm(&e) <= tol.eff_tol {
                return Err(Error::InvalidEffect(format!("operation {l:?} has a vanishing effect")));
            }
            sum += e;
        }
        let dev = max_abs(&(sum - eye(d)));
        if dev > tol.trace_tol {
            return Err(Error::NotNormalized(format!("operations sum to a channel only within {dev:.2e}")));
        }
        Ok(Instrument { labels, operations })
    }

    pub fn dim(&self) -> usize {
        self.operations[0].dim_in()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn operation(&self, label: &str) -> Option<&CPMap> {
        self.labels.iter().position(|l| l == label).map(|i| &self.operations[i])
    }

    /// `ℐ_X = Σ_x ℐ_x`.
    pub fn channel(&self) -> CPMap {
        let d = self.dim();
        let kraus = self.operations.iter().flat_map(|o| o.kraus().iter().cloned()).collect();
        CPMap::new_unchecked_norm(d, d, kraus).expect("operations share dimensions")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservableClass {
    pub commutative: bool,
    pub sharp: bool,
    pub norm_one: bool,
    pub indefinite: bool,
    pub trivial: bool,
}

pub fn classify_observable(obs: &Observable, tol: &Tolerances) -> ObservableClass {
    let es: Vec<&CMatrix> = obs.effects.iter().map(|e| e.matrix()).collect();
    let mut commutative = true;
    let mut sharp = true;
    for (i, a) in es.iter().enumerate() {
        for (j, b) in es.iter().enumerate() {
            if op_norm(&commutator(a, b)) > tol.span_tol {
                commutative = false;
            }
            let target = if i == j { (*a).clone() } else { CMatrix::zeros(a.nrows(), a.ncols()) };
            if op_norm(&(*a * *b - target)) > tol.proj_tol {
                sharp = false;
            }
        }
    }
    let classes: Vec<_> = obs.effects.iter().map(|e| classify_effect(e, tol)).collect();
    ObservableClass {
        commutative,
        sharp,
        norm_one: classes.iter().all(|c| c.norm_one),
        indefinite: classes.iter().all(|c| c.indefinite),
        trivial: obs.len() == 1 || classes.iter().all(|c| c.trivial),
    }
}

/// `E_x = ℐ_x*(𝟙)`.
pub fn compatible_observable(inst: &Instrument, tol: &Tolerances) -> Result<Observable> {
    let mut effects = Vec::with_capacity(inst.len());
    for op in &inst.operations {
        let e = op.dual_unit();
        let top = *eigvalsh(&e).last().unwrap();
        if top > 1.0 + tol.eff_tol {
            return Err(Error::NotSubunital(top));
        }
        effects.push(Effect::new(e, tol)?);
    }
    Observable::new(inst.labels.clone(), effects, tol)
}

/// Outcome of one operator-identity property check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub holds: bool,
    /// Max operator-norm deviation per outcome.
    pub residuals: Vec<f64>,
    pub reason: Option<String>,
}

impl PropertyCheck {
    fn from_residuals(residuals: Vec<f64>, tol: f64) -> Self {
        PropertyCheck { holds: residuals.iter().all(|&r| r <= tol), residuals, reason: None }
    }

    fn not_norm_one() -> Self {
        PropertyCheck { holds: false, residuals: vec![], reason: Some("NotNormOne".into()) }
    }
}

/// Projection onto the eigenvalue-1 space of an effect, threshold `1 − proj_tol`.
fn eig1_basis(e: &CMatrix, tol: &Tolerances) -> CMatrix {
    let (vals, vecs) = eigh(e);
    eigvec_columns(&vals, &vecs, |l| l >= 1.0 - tol.proj_tol)
}

fn norm_one(obs: &Observable, tol: &Tolerances) -> bool {
    classify_observable(obs, tol).norm_one
}

fn dual_apply(op: &CPMap, a: &CMatrix) -> CMatrix {
    op.apply_dual(a).expect("square operation")
}

/// `ℐ_x*(E_y) = δ_{xy} E_x`.
pub fn is_repeatable(inst: &Instrument, tol: &Tolerances) -> Result<PropertyCheck> {
    let obs = compatible_observable(inst, tol)?;
    if !norm_one(&obs, tol) {
        return Ok(PropertyCheck::not_norm_one());
    }
    let d = inst.dim();
    let res = inst
        .operations
        .iter()
        .enumerate()
        .map(|(x, op)| {
            obs.effects
                .iter()
                .enumerate()
                .map(|(y, ey)| {
                    let target = if x == y { obs.effects[x].matrix().clone() } else { CMatrix::zeros(d, d) };
                    op_norm(&(dual_apply(op, ey.matrix()) - target))
                })
                .fold(0.0, f64::max)
        })
        .collect();
    Ok(PropertyCheck::from_residuals(res, tol.span_tol))
}

/// `ℐ_X*(E_x) = E_x`.
pub fn is_first_kind(inst: &Instrument, tol: &Tolerances) -> Result<PropertyCheck> {
    let obs = compatible_observable(inst, tol)?;
    let ch = inst.channel();
    let res = obs
        .effects
        .iter()
        .map(|e| op_norm(&(dual_apply(&ch, e.matrix()) - e.matrix())))
        .collect();
    Ok(PropertyCheck::from_residuals(res, tol.span_tol))
}

/// `P_x ℐ_X*(E_x) P_x = P_x` with `P_x` the eigenvalue-1 projection of `E_x`.
pub fn is_value_reproducible(inst: &Instrument, tol: &Tolerances) -> Result<PropertyCheck> {
    let obs = compatible_observable(inst, tol)?;
    if !norm_one(&obs, tol) {
        return Ok(PropertyCheck::not_norm_one());
    }
    let ch = inst.channel();
    let res = obs
        .effects
        .iter()
        .map(|e| {
            let v = eig1_basis(e.matrix(), tol);
            let m = v.adjoint() * dual_apply(&ch, e.matrix()) * &v;
            op_norm(&(m - eye(v.ncols())))
        })
        .collect();
    Ok(PropertyCheck::from_residuals(res, tol.span_tol))
}

/// `ℐ_x(P_x A P_x) = P_x A P_x` on the matrix units of each `P_x` block.
pub fn is_ideal(inst: &Instrument, tol: &Tolerances) -> Result<PropertyCheck> {
    let obs = compatible_observable(inst, tol)?;
    if !norm_one(&obs, tol) {
        return Ok(PropertyCheck::not_norm_one());
    }
    let res = obs
        .effects
        .iter()
        .zip(&inst.operations)
        .map(|(e, op)| {
            let v = eig1_basis(e.matrix(), tol);
            let mut worst: f64 = 0.0;
            for i in 0..v.ncols() {
                for j in 0..v.ncols() {
                    let a = v.column(i) * v.column(j).adjoint();
                    worst = worst.max(op_norm(&(op.apply_unchecked(&a) - a)));
                }
            }
            worst
        })
        .collect();
    Ok(PropertyCheck::from_residuals(res, tol.span_tol))
}

/// Implication of the no-go results that a set of verdicts can violate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NogoClause {
    /// class I instruments are not repeatable
    ClassINotRepeatable,
    /// class I instruments of sharp observables are neither first-kind, value reproducible nor ideal
    ClassISharpDisturbs,
    /// class II instruments are not ideal
    ClassIINotIdeal,
    /// class II instruments are not value reproducible
    ClassIINotValueReproducible,
    /// first-kind class II instruments measure indefinite observables
    ClassIIFirstKindIndefinite,
    /// first-kind class III instruments measure indefinite commutative observables
    ClassIIIFirstKindIndefiniteCommutative,
    /// class II with a rank-1 effect leaves only multiples of the unit invariant
    ClassIIRankOneTrivialFixedAlgebra,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conflict {
    pub clause: NogoClause,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceReport {
    pub repeatable: PropertyCheck,
    pub first_kind: PropertyCheck,
    pub value_reproducible: PropertyCheck,
    pub ideal: PropertyCheck,
    pub nogo_conflicts: Vec<Conflict>,
}

pub fn disturbance_report(inst: &Instrument, tol: &Tolerances) -> Result<DisturbanceReport> {
    Ok(DisturbanceReport {
        repeatable: is_repeatable(inst, tol)?,
        first_kind: is_first_kind(inst, tol)?,
        value_reproducible: is_value_reproducible(inst, tol)?,
        ideal: is_ideal(inst, tol)?,
        nogo_conflicts: vec![],
    })
}

/// Instrument-level tier membership: a tier holds when every operation is in it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct InstrumentTiers {
    pub class_i: bool,
    pub class_ii: bool,
    pub class_iii: bool,
}

impl InstrumentTiers {
    pub fn from_verdicts(verdicts: &[HierarchyVerdict]) -> Self {
        let all = |f: fn(&HierarchyVerdict) -> Membership| {
            !verdicts.is_empty() && verdicts.iter().all(|v| f(v) == Membership::InClass)
        };
        InstrumentTiers {
            class_i: all(|v| v.class_i),
            class_ii: all(|v| v.class_ii),
            class_iii: all(|v| v.class_iii),
        }
    }
}

pub fn nogo_audit(
    inst: &Instrument,
    verdicts: &[HierarchyVerdict],
    report: &DisturbanceReport,
    tol: &Tolerances,
) -> Result<Vec<Conflict>> {
    if verdicts.len() != inst.len() {
        return Err(Error::DimMismatch(format!("{} verdicts for {} operations", verdicts.len(), inst.len())));
    }
    nogo_audit_tiers(inst, InstrumentTiers::from_verdicts(verdicts), report, tol)
}

/// The implications only constrain non-trivial observables.
pub fn nogo_audit_tiers(
    inst: &Instrument,
    tiers: InstrumentTiers,
    report: &DisturbanceReport,
    tol: &Tolerances,
) -> Result<Vec<Conflict>> {
    let obs = compatible_observable(inst, tol)?;
    let cls = classify_observable(&obs, tol);
    let mut out = Vec::new();
    if cls.trivial {
        return Ok(out);
    }
    let mut flag = |clause, detail: &str| out.push(Conflict { clause, detail: detail.to_string() });
    let r = report;
    if tiers.class_i && r.repeatable.holds {
        flag(NogoClause::ClassINotRepeatable, "class I instrument reported repeatable");
    }
    if tiers.class_i && cls.sharp {
        for (name, p) in [("first-kind", &r.first_kind), ("value reproducible", &r.value_reproducible), ("ideal", &r.ideal)] {
            if p.holds {
                flag(NogoClause::ClassISharpDisturbs, &format!("class I instrument of a sharp observable reported {name}"));
            }
        }
    }
    if tiers.class_ii && r.ideal.holds {
        flag(NogoClause::ClassIINotIdeal, "class II instrument reported ideal");
    }
    if tiers.class_ii && r.value_reproducible.holds {
        flag(NogoClause::ClassIINotValueReproducible, "class II instrument reported value reproducible");
    }
    if tiers.class_ii && r.first_kind.holds && !cls.indefinite {
        flag(NogoClause::ClassIIFirstKindIndefinite, "first-kind class II instrument of a non-indefinite observable");
    }
    if tiers.class_iii && r.first_kind.holds && !(cls.indefinite && cls.commutative) {
        flag(
            NogoClause::ClassIIIFirstKindIndefiniteCommutative,
            "first-kind class III instrument of an observable that is not indefinite and commutative",
        );
    }
    if tiers.class_ii {
        let rank_one = obs.effects.iter().any(|e| rank_tol(e.as_hermitian(), tol).ok() == Some(1));
        if rank_one {
            let fixed = fixed_point_basis(&inst.channel().dual(), tol)?;
            let trivial = fixed.len() == 1 && fixed.contains(&eye(inst.dim()), tol.span_tol);
            if !trivial {
                flag(
                    NogoClause::ClassIIRankOneTrivialFixedAlgebra,
                    &format!("dual fixed-point space has dimension {}", fixed.len()),
                );
            }
        }
    }
    Ok(out)
}
