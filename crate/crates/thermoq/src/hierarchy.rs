//! Effect taxonomy and the three-tier classification of channels and
//! operations, each verdict carrying its certificates.

use crate::error::{Error, Result};
use crate::fixedpoints::strictly_positive_fixed_state;
use crate::opalg::*;
use crate::processes::{induced_operation, swap_process, validate_process_class, MeasurementProcess, Tier};
use crate::qmaps::{choi_distance_max, classify_map, CPMap, MapClassification};
use crate::scaling::{decide_rank_nondecreasing, Config, RankDecision, Verdict};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectClass {
    pub trivial: bool,
    pub norm_one: bool,
    pub indefinite: bool,
    pub projection: bool,
    pub strictly_positive: bool,
    pub eig1_projection: Option<Projection>,
}

pub fn classify_effect(e: &Effect, tol: &Tolerances) -> EffectClass {
    let m = e.matrix();
    let d = e.dim();
    let (vals, vecs) = eigh(m);
    let lo = vals[0];
    let hi = vals[d - 1];
    let norm_one = (hi - 1.0).abs() <= tol.eff_tol;
    let mean = m.trace() / c(d as f64, 0.0);
    EffectClass {
        trivial: max_abs(&(m - eye(d) * mean)) <= tol.eff_tol,
        norm_one,
        indefinite: lo > tol.eff_tol && hi < 1.0 - tol.eff_tol,
        projection: max_abs(&(m * m - m)) <= tol.proj_tol,
        strictly_positive: is_strictly_positive_op(e.as_hermitian(), tol),
        eig1_projection: norm_one
            .then(|| Projection::from_columns(&eigvec_columns(&vals, &vecs, |l| l >= 1.0 - tol.proj_tol))),
    }
}

/// Cutoff for `(𝟙 − Q) K v = 0` in the invariant-subspace search.
const INVARIANCE_TOL: f64 = 1e-7;

/// Largest subspace of the eigenvalue-1 space of `E = Φ*(𝟙)` mapped into
/// itself by every Kraus operator; nonzero iff `Φ` has a nonzero fixed point.
pub fn operation_fixed_point_exists(op: &CPMap, tol: &Tolerances) -> Result<(bool, Option<Projection>)> {
    if !op.is_square() {
        return Err(Error::DimMismatch("operation must be square".into()));
    }
    let e = op.dual_unit();
    let (vals, vecs) = eigh(&e);
    let d = vals.len();
    if vals[d - 1] > 1.0 + tol.eff_tol {
        return Err(Error::NotSubunital(vals[d - 1]));
    }
    if vals[d - 1] < 1.0 - tol.eff_tol {
        return Ok((false, None));
    }
    let mut q = eigvec_columns(&vals, &vecs, |l| l >= 1.0 - tol.proj_tol);
    for _ in 0..=d {
        let m = q.ncols();
        if m == 0 {
            return Ok((false, None));
        }
        let comp = eye(d) - projector_from_columns(&q);
        let nk = op.kraus().len();
        let mut stack = CMatrix::zeros(d * nk, m);
        for (a, k) in op.kraus().iter().enumerate() {
            stack.view_mut((a * d, 0), (d, m)).copy_from(&(&comp * k * &q));
        }
        let ns = null_space_gram(&stack, INVARIANCE_TOL);
        if ns.ncols() == m {
            return Ok((true, Some(Projection::from_columns(&q))));
        }
        q = &q * ns;
    }
    Ok((q.ncols() > 0, (q.ncols() > 0).then(|| Projection::from_columns(&q))))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Membership {
    InClass,
    NotInClass,
    Unknown,
}

/// One necessary or sufficient condition evaluated for a tier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionRecord {
    pub tier: Tier,
    pub condition: String,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Witness {
    /// Unital and trace preserving: implemented by a bistochastic interaction directly.
    Bistochastic,
    /// Smallest eigenvalue of a strictly positive Choi matrix.
    StrictlyPositiveChoi { min_eigenvalue: f64 },
    /// A measurement process with a class-III report implementing the operation.
    Process { process: MeasurementProcess, outcome: String, distance: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Certificates {
    pub map: MapClassification,
    pub rank: RankDecision,
    pub effect: EffectClass,
    pub fixed_point: Option<Projection>,
    pub fixed_state: Option<State>,
    pub witness: Option<Witness>,
    pub conditions: Vec<ConditionRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HierarchyVerdict {
    pub class_i: Membership,
    pub class_ii: Membership,
    pub class_iii: Membership,
    pub certificates: Certificates,
}

impl HierarchyVerdict {
    pub fn tiers(&self) -> [Membership; 3] {
        [self.class_i, self.class_ii, self.class_iii]
    }

    /// Never a higher tier `InClass` with a lower tier `NotInClass`.
    pub fn is_monotone(&self) -> bool {
        let t = self.tiers();
        (0..3).all(|k| (k + 1..3).all(|j| !(t[j] == Membership::InClass && t[k] == Membership::NotInClass)))
    }

    fn propagate(&mut self) {
        use Membership::*;
        if self.class_i == NotInClass {
            for t in [&mut self.class_ii, &mut self.class_iii] {
                if *t == Unknown {
                    *t = NotInClass;
                }
            }
        }
        if self.class_ii == NotInClass && self.class_iii == Unknown {
            self.class_iii = NotInClass;
        }
        if self.class_iii == InClass && self.class_ii == Unknown {
            self.class_ii = InClass;
        }
        if self.class_ii == InClass && self.class_i == Unknown {
            self.class_i = InClass;
        }
    }
}

fn membership(b: bool) -> Membership {
    if b {
        Membership::InClass
    } else {
        Membership::NotInClass
    }
}

fn from_verdict(v: Verdict) -> Membership {
    match v {
        Verdict::Yes => Membership::InClass,
        Verdict::No => Membership::NotInClass,
        Verdict::Inconclusive => Membership::Unknown,
    }
}

/// Smallest Choi eigenvalue and its slack over the rank threshold.
fn choi_margin(map: &CPMap, tol: &Tolerances) -> (f64, f64) {
    let vals = eigvalsh(&map.choi());
    (vals[0], vals[0] - tol.rank_threshold(*vals.last().unwrap()))
}

fn cond(tier: Tier, condition: &str, holds: bool) -> ConditionRecord {
    ConditionRecord { tier, condition: condition.into(), holds }
}

pub fn channel_hierarchy(ch: &CPMap, cfg: &Config) -> Result<HierarchyVerdict> {
    let tol = &cfg.tol;
    let map = classify_map(ch, tol)?;
    if !map.trace_preserving {
        return Err(Error::NotTracePreserving(map.margins.trace_deviation));
    }
    let rank = decide_rank_nondecreasing(ch, cfg)?;
    let effect = classify_effect(&map.compatible_effect, tol);
    let mut conditions = vec![
        cond(Tier::I, "strictly positive", map.strictly_positive),
        cond(Tier::II, "rank non-decreasing decision is Yes", rank.verdict == Verdict::Yes),
        cond(Tier::III, "bistochastic", map.bistochastic),
    ];
    let class_i = membership(map.strictly_positive);
    let class_ii = from_verdict(rank.verdict);
    let mut witness = None;
    let mut fixed_state = None;
    let (min_eigenvalue, margin) = choi_margin(ch, tol);
    conditions.push(cond(Tier::III, "Choi matrix strictly positive", margin > 0.0));
    let class_iii = if map.bistochastic {
        witness = Some(Witness::Bistochastic);
        Membership::InClass
    } else if margin > 0.0 {
        witness = Some(Witness::StrictlyPositiveChoi { min_eigenvalue });
        Membership::InClass
    } else if class_ii == Membership::NotInClass {
        Membership::NotInClass
    } else {
        fixed_state = strictly_positive_fixed_state(ch, None, tol)?;
        conditions.push(cond(Tier::III, "strictly positive fixed state exists", fixed_state.is_some()));
        if fixed_state.is_none() {
            Membership::NotInClass
        } else {
            Membership::Unknown
        }
    };
    let mut v = HierarchyVerdict {
        class_i,
        class_ii,
        class_iii,
        certificates: Certificates {
            map,
            rank,
            effect,
            fixed_point: None,
            fixed_state,
            witness,
            conditions,
        },
    };
    v.propagate();
    Ok(v)
}

/// Distance between the operation and the one induced by a tier-III process.
fn check_witness(op: &CPMap, p: &MeasurementProcess, outcome: &str, cfg: &Config) -> Result<Option<f64>> {
    let rep = validate_process_class(p, cfg)?;
    if !rep.admits(Tier::III) || p.sys_dim != op.dim_in() {
        return Ok(None);
    }
    let got = induced_operation(p, outcome, &cfg.tol)?;
    let dist = choi_distance_max(&got, op);
    Ok((dist <= 1e-9).then_some(dist))
}

/// `J = ξ ⊗ Eᵀ` with `ξ > 𝕆`: the operation is `tr[E·] ξ`.
fn measure_prepare_form(op: &CPMap, e: &Effect, tol: &Tolerances) -> Option<State> {
    let (din, dout) = (op.dim_in(), op.dim_out());
    let tr_e = e.matrix().trace().re;
    if tr_e <= tol.eff_tol {
        return None;
    }
    let j = op.choi();
    let xi = trace_out_second(&j, dout, din) / c(tr_e, 0.0);
    if max_abs(&(&j - kron(&xi, &e.matrix().transpose()))) > 1e-9 {
        return None;
    }
    let xi = State::from_psd(&herm_part(&xi), tol).ok()?;
    is_strictly_positive_op(xi.as_hermitian(), tol).then_some(xi)
}

/// Classify an operation; `witness` is an optional process and outcome
/// claimed to implement it in class III.
pub fn operation_hierarchy(
    op: &CPMap,
    cfg: &Config,
    witness: Option<(&MeasurementProcess, &str)>,
) -> Result<HierarchyVerdict> {
    let tol = &cfg.tol;
    if !op.is_square() {
        return Err(Error::DimMismatch("operation must be square".into()));
    }
    let map = classify_map(op, tol)?;
    let rank = decide_rank_nondecreasing(op, cfg)?;
    let effect = classify_effect(&map.compatible_effect, tol);
    let (fp, fp_proj) = operation_fixed_point_exists(op, tol)?;
    let e_is_unit = max_abs(&(map.compatible_effect.matrix() - eye(op.dim_in()))) <= tol.eff_tol;

    let mut conditions = vec![cond(Tier::I, "strictly positive", map.strictly_positive)];
    let class_i = membership(map.strictly_positive);

    let rnd = rank.verdict == Verdict::Yes;
    conditions.push(cond(Tier::II, "rank non-decreasing decision is Yes", rnd));
    conditions.push(cond(Tier::II, "compatible effect indefinite", effect.indefinite));
    conditions.push(cond(Tier::II, "nonzero fixed point with effect other than the unit", fp && !e_is_unit));
    let class_ii = if (fp && !e_is_unit) || (map.trace_preserving && rank.verdict == Verdict::No) {
        Membership::NotInClass
    } else if rnd && (effect.indefinite || map.trace_preserving) {
        Membership::InClass
    } else {
        Membership::Unknown
    };

    let purity = map.purity_preserving && !effect.trivial;
    conditions.push(cond(Tier::III, "purity preserving with non-trivial effect", purity));
    let mut found = None;
    if let Some((p, outcome)) = witness {
        if let Some(distance) = check_witness(op, p, outcome, cfg)? {
            found = Some(Witness::Process { process: p.clone(), outcome: outcome.into(), distance });
        }
    }
    if found.is_none() {
        if let Some(xi) = measure_prepare_form(op, &map.compatible_effect, tol) {
            let p = swap_process(&map.compatible_effect, &xi, tol)?;
            let outcome = p.pointer.labels()[0].clone();
            if let Some(distance) = check_witness(op, &p, &outcome, cfg)? {
                found = Some(Witness::Process { process: p, outcome, distance });
            }
        }
    }
    conditions.push(cond(Tier::III, "class-III process witness", found.is_some()));
    let class_iii = if purity || class_ii == Membership::NotInClass {
        Membership::NotInClass
    } else if found.is_some() {
        Membership::InClass
    } else {
        Membership::Unknown
    };
    let mut v = HierarchyVerdict {
        class_i,
        class_ii,
        class_iii,
        certificates: Certificates {
            map,
            rank,
            effect,
            fixed_point: fp_proj,
            fixed_state: None,
            witness: found,
            conditions,
        },
    };
    v.propagate();
    Ok(v)
}

/// For states supported in the eigenvalue-1 space of a non-trivial norm-1
/// effect, a class-II operation strictly increases rank.
pub fn lemma1_rank_increase_check(op: &CPMap, tol: &Tolerances) -> Result<bool> {
    let e = Effect::new(op.dual_unit(), tol)?;
    let cls = classify_effect(&e, tol);
    if !cls.norm_one || cls.trivial {
        return Err(Error::PreconditionUnmet("compatible effect must be norm-1 and non-trivial".into()));
    }
    let v = cls.eig1_projection.expect("norm-one effect").range_basis();
    let m = v.ncols();
    let mut states: Vec<CMatrix> = Vec::new();
    let col = |i: usize| v.columns(i, 1).into_owned();
    for i in 0..m {
        states.push(outer(&col(i), &col(i)));
        for j in i + 1..m {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            let a = (col(i) + col(j)) * c(s, 0.0);
            let b = (col(i) + col(j) * c(0.0, 1.0)) * c(s, 0.0);
            states.push(outer(&a, &a));
            states.push(outer(&b, &b));
        }
    }
    states.push(projector_from_columns(&v) / c(m as f64, 0.0));
    for rho in &states {
        let rin = rank_of(rho, tol)?;
        let rout = rank_of(&op.apply(rho)?, tol)?;
        if rout <= rin {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::*;
    use Membership::*;

    fn t() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn effect_examples() {
        let (k0, kp, _) = qutrit_kets();
        let e = Effect::new(outer(&kp, &kp) + outer(&k0, &k0) * c(0.5, 0.0), &t()).unwrap();
        let cl = classify_effect(&e, &t());
        assert!(cl.norm_one && !cl.indefinite && !cl.strictly_positive && !cl.projection);
        let cl = classify_effect(&Effect::new(eye(2) * c(0.5, 0.0), &t()).unwrap(), &t());
        assert!(cl.trivial && cl.indefinite);
        let cl = classify_effect(&Effect::new(diag(&[1.0, 0.0]), &t()).unwrap(), &t());
        assert!(cl.projection && cl.norm_one && !cl.strictly_positive);
    }

    #[test]
    fn fixed_point_examples() {
        let e = Effect::new(diag(&[1.0, 0.5]), &t()).unwrap();
        let (ok, p) = operation_fixed_point_exists(&CPMap::luders(&e), &t()).unwrap();
        assert!(ok);
        assert!(max_abs(&(p.unwrap().matrix() - diag(&[1.0, 0.0]))) < 1e-10);
        let e = Effect::new(diag(&[0.9, 0.3]), &t()).unwrap();
        assert_eq!(operation_fixed_point_exists(&CPMap::luders(&e), &t()).unwrap(), (false, None));
        let inst = qutrit_remark_instrument();
        let (ok, p) = operation_fixed_point_exists(&inst.operations[0], &t()).unwrap();
        let (_, kp, _) = qutrit_kets();
        assert!(ok);
        assert!(max_abs(&(p.unwrap().matrix() - outer(&kp, &kp))) < 1e-10);
    }

    #[test]
    fn channel_examples() {
        let cfg = Config::default();
        let mut r = rng(11);
        let u = CPMap::unitary(&haar_unitary(&mut r, 3)).unwrap();
        assert_eq!(channel_hierarchy(&u, &cfg).unwrap().tiers(), [InClass, InClass, InClass]);
        let mix = depolarize_to_pure(0.5, &ket(2, 0)).unwrap();
        assert_eq!(channel_hierarchy(&mix, &cfg).unwrap().tiers(), [InClass, InClass, NotInClass]);
        let full = random_full_choi_channel(&mut r, 2);
        assert_eq!(channel_hierarchy(&full, &cfg).unwrap().class_iii, InClass);
        let ad = amplitude_damping(0.3);
        assert_eq!(channel_hierarchy(&ad, &cfg).unwrap().tiers()[..2], [InClass, InClass]);
        let drop = rank_drop_d3();
        assert_eq!(channel_hierarchy(&drop, &cfg).unwrap().tiers(), [InClass, NotInClass, NotInClass]);
        let reset = CPMap::prepare(2, &State::pure(&ket(2, 0)));
        assert_eq!(channel_hierarchy(&reset, &cfg).unwrap().class_i, NotInClass);
    }

    #[test]
    fn operation_examples() {
        let cfg = Config::default();
        let e = Effect::new(diag(&[0.75, 0.25]), &t()).unwrap();
        let v = operation_hierarchy(&CPMap::luders(&e), &cfg, None).unwrap();
        assert_eq!(v.tiers(), [InClass, InClass, NotInClass]);
        let e = Effect::new(diag(&[1.0, 0.5]), &t()).unwrap();
        let v = operation_hierarchy(&CPMap::luders(&e), &cfg, None).unwrap();
        assert_eq!((v.class_i, v.class_ii), (InClass, NotInClass));
        let e = Effect::new(diag(&[0.6, 0.1]), &t()).unwrap();
        let xi = State::new(diag(&[0.3, 0.7]), &t()).unwrap();
        let v = operation_hierarchy(&CPMap::measure_prepare(&e, &xi), &cfg, None).unwrap();
        assert_eq!(v.class_iii, InClass);
        assert!(matches!(v.certificates.witness, Some(Witness::Process { .. })));
        assert!(v.is_monotone());
    }

    #[test]
    fn lemma1_examples() {
        let e = Effect::new(diag(&[1.0, 0.5]), &t()).unwrap();
        assert!(!lemma1_rank_increase_check(&CPMap::luders(&e), &t()).unwrap());
        assert!(matches!(
            lemma1_rank_increase_check(&CPMap::identity(2), &t()),
            Err(Error::PreconditionUnmet(_))
        ));
        let e = Effect::new(diag(&[1.0, 0.0]), &t()).unwrap();
        let xi = State::new(diag(&[0.75, 0.25]), &t()).unwrap();
        let p = swap_process(&e, &xi, &t()).unwrap();
        let op = induced_operation(&p, crate::processes::EFFECT_LABEL, &t()).unwrap();
        assert!(lemma1_rank_increase_check(&op, &t()).unwrap());
    }
}
