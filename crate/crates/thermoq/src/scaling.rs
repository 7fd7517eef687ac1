//! Operator scaling: the DS functional, alternating normalization, and the
//! three-way rank non-decreasing decision with counterexample search.

use crate::error::{Error, Result};
use crate::generators;
use crate::matser;
use crate::opalg::*;
use crate::qmaps::{self, CPMap};
use serde::{Deserialize, Serialize};

/// Smallest admissible normalizer eigenvalue.
pub const EIGEN_FLOOR: f64 = 1e-14;
/// Scaling pairs beyond this condition product are treated as divergent.
const COND_LIMIT: f64 = 1e13;
/// First extrapolation attempt; later attempts at doubling iteration counts.
const FIRST_JUMP: usize = 16;
const JUMP_POWERS: usize = 20;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Config {
    pub tol: Tolerances,
    pub max_iter: usize,
    pub samples_per_rank: usize,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Config { tol: Tolerances::default(), max_iter: 10_000, samples_per_rank: 64, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    Converged,
    MaxIterations,
    SingularNormalizer,
    IllConditioned,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingReport {
    #[serde(with = "matser")]
    pub c1: CMatrix,
    #[serde(with = "matser")]
    pub c2: CMatrix,
    pub ds_value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub stop: StopReason,
    /// Accepted extrapolation jumps.
    pub extrapolations: usize,
    /// DS after each full round (index 0 is the unscaled map).
    #[serde(skip)]
    pub history: Vec<f64>,
}

fn scaled_kraus(kraus: &[CMatrix], c1: &CMatrix, c2: &CMatrix) -> Vec<CMatrix> {
    kraus.iter().map(|k| c1 * k * c2).collect()
}

fn unit_images(kraus: &[CMatrix]) -> (CMatrix, CMatrix) {
    let d = kraus[0].nrows();
    let mut t = CMatrix::zeros(d, d);
    let mut ts = CMatrix::zeros(d, d);
    for k in kraus {
        t += k * k.adjoint();
        ts += k.adjoint() * k;
    }
    (t, ts)
}

fn ds_of(kraus: &[CMatrix], c1: &CMatrix, c2: &CMatrix) -> f64 {
    let ks = scaled_kraus(kraus, c1, c2);
    let (t, ts) = unit_images(&ks);
    let d = t.nrows();
    let a = fro_norm(&(t - eye(d)));
    let b = fro_norm(&(ts - eye(d)));
    a * a + b * b
}

fn check_square(map: &CPMap) -> Result<usize> {
    if !map.is_square() {
        return Err(Error::DimMismatch(format!(
            "scaling needs a square map, got {} -> {}",
            map.dim_in(),
            map.dim_out()
        )));
    }
    Ok(map.dim_in())
}

/// `tr[(Φ_{C₁,C₂}(𝟙) − 𝟙)²] + tr[(Φ*_{C₁,C₂}(𝟙) − 𝟙)²]`.
pub fn ds_value(map: &CPMap, c1: &CMatrix, c2: &CMatrix) -> Result<f64> {
    let d = check_square(map)?;
    for m in [c1, c2] {
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::DimMismatch(format!("scaling matrices must be {d}x{d}")));
        }
    }
    Ok(ds_of(map.kraus(), c1, c2))
}

fn inv_sqrt_floored(m: &CMatrix) -> Option<CMatrix> {
    let (vals, v) = eigh(m);
    if !(vals[0] >= EIGEN_FLOOR) || vals.iter().any(|x| !x.is_finite()) {
        return None;
    }
    let n = vals.len();
    let d = CMatrix::from_fn(n, n, |i, j| if i == j { c(1.0 / vals[i].sqrt(), 0.0) } else { C64::default() });
    Some(&v * d * v.adjoint())
}

/// One full round: `C₁ ← T(𝟙)^{-1/2} C₁`, then `C₂ ← C₂ T*(𝟙)^{-1/2}`.
fn round(kraus: &[CMatrix], c1: &CMatrix, c2: &CMatrix) -> Option<(CMatrix, CMatrix)> {
    let ks = scaled_kraus(kraus, c1, c2);
    let d = c1.nrows();
    let mut t = CMatrix::zeros(d, d);
    for k in &ks {
        t += k * k.adjoint();
    }
    let n1 = inv_sqrt_floored(&t)? * c1;
    let ks = scaled_kraus(kraus, &n1, c2);
    let mut ts = CMatrix::zeros(d, d);
    for k in &ks {
        ts += k.adjoint() * k;
    }
    let n2 = c2 * inv_sqrt_floored(&ts)?;
    Some((n1, n2))
}

/// `C₁ → aC₁, C₂ → C₂/a` leaves the scaled map unchanged; equalize norms.
fn balance(c1: &mut CMatrix, c2: &mut CMatrix) {
    let a = (fro_norm(c2) / fro_norm(c1)).sqrt();
    if a.is_finite() && a > 0.0 {
        *c1 *= c(a, 0.0);
        *c2 /= c(a, 0.0);
    }
}

fn condition(m: &CMatrix) -> f64 {
    let s = singular_values(m);
    let lo = *s.last().unwrap();
    if lo > 0.0 {
        s[0] / lo
    } else {
        f64::INFINITY
    }
}

fn usable(p1: &CMatrix, p2: &CMatrix) -> bool {
    is_finite(p1) && is_finite(p2) && condition(p1) * condition(p2) <= COND_LIMIT
}

/// Geometric extrapolation of the accumulated growth since `saved`:
/// try `G₁^m C₁`, `C₂ G₂^m` and keep the best candidate after two rounds.
fn extrapolate(
    kraus: &[CMatrix],
    c1: &CMatrix,
    c2: &CMatrix,
    saved: &(CMatrix, CMatrix),
) -> Option<(f64, CMatrix, CMatrix)> {
    let g1 = c1 * saved.0.clone().try_inverse()?;
    let g2 = saved.1.clone().try_inverse()? * c2;
    let mut p1 = c1.clone();
    let mut p2 = c2.clone();
    let mut best: Option<(f64, CMatrix, CMatrix)> = None;
    for _ in 0..JUMP_POWERS {
        p1 = &g1 * &p1;
        p2 = &p2 * &g2;
        balance(&mut p1, &mut p2);
        if !usable(&p1, &p2) {
            break;
        }
        let Some((a1, a2)) = round(kraus, &p1, &p2) else { break };
        let Some((b1, b2)) = round(kraus, &a1, &a2) else { break };
        let v = ds_of(kraus, &b1, &b2);
        if !v.is_finite() {
            break;
        }
        if best.as_ref().is_none_or(|b| v < b.0) {
            best = Some((v, b1, b2));
        }
    }
    best
}

/// Alternating normalization until `DS ≤ eps²` or `max_iter` rounds.
pub fn sinkhorn_scale(map: &CPMap, eps: f64, max_iter: usize) -> Result<ScalingReport> {
    let d = check_square(map)?;
    let kraus = map.kraus();
    let target = eps * eps;
    let mut c1 = eye(d);
    let mut c2 = eye(d);
    let mut v = ds_of(kraus, &c1, &c2);
    let mut history = vec![v];
    let report = |c1: CMatrix, c2: CMatrix, v: f64, it: usize, stop: StopReason, ex: usize, h: Vec<f64>| {
        ScalingReport {
            c1,
            c2,
            ds_value: v,
            iterations: it,
            converged: stop == StopReason::Converged,
            stop,
            extrapolations: ex,
            history: h,
        }
    };
    if v <= target {
        return Ok(report(c1, c2, v, 0, StopReason::Converged, 0, history));
    }
    let (t, ts) = unit_images(kraus);
    if eigvalsh(&t)[0] < EIGEN_FLOOR || eigvalsh(&ts)[0] < EIGEN_FLOOR {
        return Ok(report(c1, c2, v, 0, StopReason::SingularNormalizer, 0, history));
    }
    let mut saved: Option<(CMatrix, CMatrix)> = None;
    let mut next_jump = FIRST_JUMP;
    let mut jumps = 0;
    for it in 1..=max_iter {
        let Some((mut n1, mut n2)) = round(kraus, &c1, &c2) else {
            return Ok(report(c1, c2, v, it - 1, StopReason::SingularNormalizer, jumps, history));
        };
        balance(&mut n1, &mut n2);
        if !usable(&n1, &n2) {
            return Ok(report(c1, c2, v, it - 1, StopReason::IllConditioned, jumps, history));
        }
        c1 = n1;
        c2 = n2;
        v = ds_of(kraus, &c1, &c2);
        if v <= target {
            history.push(v);
            return Ok(report(c1, c2, v, it, StopReason::Converged, jumps, history));
        }
        if it == next_jump / 2 {
            saved = Some((c1.clone(), c2.clone()));
        }
        if it == next_jump {
            if let Some(s) = saved.take() {
                if let Some((bv, b1, b2)) = extrapolate(kraus, &c1, &c2, &s) {
                    if bv < v {
                        c1 = b1;
                        c2 = b2;
                        v = bv;
                        jumps += 1;
                    }
                }
            }
            next_jump *= 2;
        }
        history.push(v);
        if v <= target {
            return Ok(report(c1, c2, v, it, StopReason::Converged, jumps, history));
        }
    }
    Ok(report(c1, c2, v, max_iter, StopReason::MaxIterations, jumps, history))
}

// ---------------------------------------------------------------------------
// counterexample search

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MapSide {
    Map,
    Dual,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Counterexample {
    pub state: State,
    pub rank_in: usize,
    pub rank_out: usize,
    /// Which map the state is fed to: the map itself or its dual.
    pub side: MapSide,
}

impl Counterexample {
    /// Recompute both ranks against the map.
    pub fn reverify(&self, map: &CPMap, tol: &Tolerances) -> bool {
        let m = match self.side {
            MapSide::Map => map.clone(),
            MapSide::Dual => map.dual(),
        };
        let rin = rank_tol(self.state.as_hermitian(), tol).ok();
        let rout = m.apply(self.state.matrix()).ok().and_then(|o| rank_of(&o, tol).ok());
        matches!((rin, rout), (Some(a), Some(b)) if b < a && a == self.rank_in && b == self.rank_out)
    }
}

/// Cap on enumerated coordinate subsets per basis and rank.
const MAX_SUBSETS: usize = 64;

fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k);
    let mut r: usize = 1;
    for i in 0..k {
        r = r.saturating_mul(n - i) / (i + 1);
    }
    r
}

fn subsets(n: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..r).collect();
    loop {
        out.push(cur.clone());
        let mut i = r;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] != i + n - r {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        cur[i] += 1;
        for j in i + 1..r {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// Candidate orthonormal bases where rank drops concentrate.
fn candidate_bases(map: &CPMap) -> Vec<CMatrix> {
    let d = map.dim_in();
    let mut bases = vec![eye(d)];
    bases.push(eigh(&map.dual_unit()).1);
    bases.push(eigh(&map.image_of_unit()).1);
    for k in map.kraus().iter().take(16) {
        bases.push(eigh(&(k.adjoint() * k)).1);
        bases.push(eigh(&(k * k.adjoint())).1);
    }
    bases
}

struct Probe<'a> {
    map: &'a CPMap,
    tol: &'a Tolerances,
    tested: usize,
}

impl Probe<'_> {
    fn test(&mut self, rho: CMatrix) -> Option<(CMatrix, usize, usize)> {
        self.tested += 1;
        let rin = rank_of(&rho, self.tol).ok()?;
        let rout = rank_of(&self.map.apply_unchecked(&rho), self.tol).ok()?;
        (rout < rin).then_some((rho, rin, rout))
    }
}

/// First state found with `rank Φ(ρ) < rank ρ`, with the number of candidates tested.
pub fn rank_drop_search_counted(
    map: &CPMap,
    samples_per_rank: usize,
    seed: u64,
    tol: &Tolerances,
) -> (Option<(State, usize, usize)>, usize) {
    let d = map.dim_in();
    let mut probe = Probe { map, tol, tested: 0 };
    let bases = candidate_bases(map);
    let mut rng = generators::rng(seed);
    let mut found = None;
    'ranks: for r in 1..=d {
        for b in &bases {
            let sets: Vec<Vec<usize>> = if binomial(d, r) <= MAX_SUBSETS {
                subsets(d, r)
            } else {
                vec![(0..r).collect(), (d - r..d).collect()]
            };
            for s in sets {
                let cols = CMatrix::from_fn(d, r, |i, k| b[(i, s[k])]);
                let rho = projector_from_columns(&cols) / c(r as f64, 0.0);
                if let Some(hit) = probe.test(rho) {
                    found = Some(hit);
                    break 'ranks;
                }
            }
        }
        for _ in 0..samples_per_rank {
            let rho = generators::random_rank_state(&mut rng, d, r);
            if let Some(hit) = probe.test(rho) {
                found = Some(hit);
                break 'ranks;
            }
        }
    }
    let tested = probe.tested;
    let out = found.and_then(|(rho, a, b)| State::from_psd(&rho, tol).ok().map(|s| (s, a, b)));
    (out, tested)
}

pub fn rank_drop_search(
    map: &CPMap,
    samples_per_rank: usize,
    seed: u64,
    tol: &Tolerances,
) -> Option<(State, usize, usize)> {
    rank_drop_search_counted(map, samples_per_rank, seed, tol).0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Yes,
    No,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankDecision {
    pub verdict: Verdict,
    pub witness: Option<ScalingReport>,
    pub counterexample: Option<Counterexample>,
    pub candidates_tested: usize,
}

pub fn decide_rank_nondecreasing(map: &CPMap, cfg: &Config) -> Result<RankDecision> {
    check_square(map)?;
    let target = cfg.tol.ds_eps * cfg.tol.ds_eps;
    // bistochastic up to ds_eps: no counterexample can exist
    if ds_of(map.kraus(), &eye(map.dim_in()), &eye(map.dim_in())) <= target {
        let w = sinkhorn_scale(map, cfg.tol.ds_eps, cfg.max_iter)?;
        return Ok(RankDecision { verdict: Verdict::Yes, witness: Some(w), counterexample: None, candidates_tested: 0 });
    }
    let mut tested = 0;
    for (side, m) in [(MapSide::Map, map.clone()), (MapSide::Dual, map.dual())] {
        let (hit, n) = rank_drop_search_counted(&m, cfg.samples_per_rank, cfg.seed, &cfg.tol);
        tested += n;
        if let Some((state, rank_in, rank_out)) = hit {
            return Ok(RankDecision {
                verdict: Verdict::No,
                witness: None,
                counterexample: Some(Counterexample { state, rank_in, rank_out, side }),
                candidates_tested: tested,
            });
        }
    }
    let w = sinkhorn_scale(map, cfg.tol.ds_eps, cfg.max_iter)?;
    let verdict = if w.converged { Verdict::Yes } else { Verdict::Inconclusive };
    Ok(RankDecision { verdict, witness: Some(w), counterexample: None, candidates_tested: tested })
}

/// Decision for `map ⊗ id_anc`.
pub fn check_extension_rank_nondec(map: &CPMap, anc_dim: usize, cfg: &Config) -> Result<RankDecision> {
    let ext = qmaps::tensor(map, &CPMap::identity(anc_dim));
    decide_rank_nondecreasing(&ext, cfg)
}
