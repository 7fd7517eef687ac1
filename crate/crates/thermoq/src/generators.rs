//! Named builders and seeded random constructions.

use crate::error::{Error, Result};
use crate::measurements::{Instrument, Observable};
use crate::opalg::*;
use crate::processes::{self, MeasurementProcess};
use crate::qmaps::{self, CPMap};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

pub type Rng64 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng64 {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        c(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// Haar unitary: QR of a Ginibre matrix with the phases of R's diagonal removed.
pub fn haar_unitary(rng: &mut impl Rng, d: usize) -> CMatrix {
    let g = gaussian_matrix(rng, d, d);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        let rj = r[(j, j)];
        let ph = if rj.norm() > 0.0 { rj / rj.norm() } else { c(1.0, 0.0) };
        for i in 0..d {
            q[(i, j)] *= ph;
        }
    }
    q
}

/// First `r` columns of a Haar unitary.
pub fn haar_isometry(rng: &mut impl Rng, d: usize, r: usize) -> CMatrix {
    haar_unitary(rng, d).columns(0, r).into_owned()
}

pub fn random_weights(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect::<Vec<f64>>();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

/// Rank-`r` state on a Haar-random subspace with random weights.
pub fn random_rank_state(rng: &mut impl Rng, d: usize, r: usize) -> CMatrix {
    let w = haar_isometry(rng, d, r);
    let p = random_weights(rng, r);
    let mut rho = CMatrix::zeros(d, d);
    for (k, pk) in p.iter().enumerate() {
        let v = w.columns(k, 1).into_owned();
        rho += outer(&v, &v) * c(*pk, 0.0);
    }
    herm_part(&rho)
}

pub fn random_state(rng: &mut impl Rng, d: usize) -> CMatrix {
    random_rank_state(rng, d, d)
}

pub fn random_hermitian(rng: &mut impl Rng, d: usize) -> CMatrix {
    herm_part(&gaussian_matrix(rng, d, d))
}

/// Random pure state vector.
pub fn random_ket(rng: &mut impl Rng, d: usize) -> CMatrix {
    haar_isometry(rng, d, 1)
}

/// Split a column stack `G` (n·d_out × d_in) into an isometric Kraus family.
fn isometric_kraus(g: &CMatrix, n: usize, d_out: usize) -> Vec<CMatrix> {
    let gram = g.adjoint() * g;
    let inv_sqrt = herm_fn(&gram, |x| 1.0 / x.max(1e-300).sqrt());
    let v = g * inv_sqrt;
    (0..n).map(|a| v.rows(a * d_out, d_out).into_owned()).collect()
}

pub fn random_channel(rng: &mut impl Rng, d: usize, n_kraus: usize) -> CPMap {
    let g = gaussian_matrix(rng, n_kraus * d, d);
    CPMap::new(d, d, isometric_kraus(&g, n_kraus, d)).expect("isometric Kraus family")
}

/// Generic channel with `d²` Kraus operators; its Choi matrix has full rank.
pub fn random_full_choi_channel(rng: &mut impl Rng, d: usize) -> CPMap {
    random_channel(rng, d, d * d)
}

/// Random mixture of `n` Haar unitaries.
pub fn random_bistochastic(rng: &mut impl Rng, d: usize, n: usize) -> CPMap {
    let p = random_weights(rng, n);
    let kraus = p
        .iter()
        .map(|pk| haar_unitary(rng, d) * c(pk.sqrt(), 0.0))
        .collect();
    CPMap::new(d, d, kraus).expect("mixture of unitaries")
}

/// Random instrument: a random channel with `outcomes · per_outcome` Kraus
/// operators dealt out to the outcomes.
pub fn random_instrument(rng: &mut impl Rng, d: usize, outcomes: usize, per_outcome: usize) -> Instrument {
    let n = outcomes * per_outcome;
    let g = gaussian_matrix(rng, n * d, d);
    let ks = isometric_kraus(&g, n, d);
    let ops = (0..outcomes)
        .map(|x| {
            CPMap::new(d, d, ks[x * per_outcome..(x + 1) * per_outcome].to_vec())
                .expect("sub-family of an isometry")
        })
        .collect();
    Instrument::new(outcome_labels(outcomes), ops, &Tolerances::default()).expect("normalized")
}

/// Random observable whose effects are all strictly inside (0, 1).
pub fn random_indefinite_observable(rng: &mut impl Rng, d: usize, outcomes: usize) -> Observable {
    let mut parts: Vec<CMatrix> = (0..outcomes)
        .map(|_| {
            let g = gaussian_matrix(rng, d, d);
            &g * g.adjoint() + eye(d) * c(0.2, 0.0)
        })
        .collect();
    let total: CMatrix = parts.iter().fold(CMatrix::zeros(d, d), |a, b| a + b);
    let inv = herm_fn(&total, |x| 1.0 / x.sqrt());
    for p in parts.iter_mut() {
        *p = herm_part(&(&inv * &*p * &inv));
    }
    let tol = Tolerances::default();
    let effects = parts.into_iter().map(|m| Effect::new(m, &tol).expect("effect")).collect();
    Observable::new(outcome_labels(outcomes), effects, &tol).expect("normalized")
}

pub fn outcome_labels(n: usize) -> Vec<String> {
    (0..n).map(|x| x.to_string()).collect()
}

// ---------------------------------------------------------------------------
// named builders

pub fn identity(d: usize) -> CPMap {
    CPMap::identity(d)
}

pub fn sigma_z() -> CMatrix {
    diag(&[1.0, -1.0])
}

pub fn hadamard() -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_row_slice(2, 2, &[c(s, 0.), c(s, 0.), c(s, 0.), c(-s, 0.)])
}

/// `λ id + (1−λ) tr[·] |φ⟩⟨φ|`.
pub fn depolarize_to_pure(lambda: f64, phi: &CMatrix) -> Result<CPMap> {
    let d = phi.nrows();
    qmaps::convex_mix(&CPMap::identity(d), &CPMap::prepare(d, &State::pure(phi)), lambda)
}

/// `Φ(ρ) = tr[P₀₁ ρ] |0⟩⟨0| + ⟨2|ρ|2⟩ 𝟙/3`: strictly positive, but drops
/// the rank of `P₀₁/2`.
pub fn rank_drop_d3() -> CPMap {
    let e = |i, j| outer(&ket(3, i), &ket(3, j));
    let s = c((1.0f64 / 3.0).sqrt(), 0.0);
    let kraus = vec![e(0, 0), e(0, 1), e(0, 2) * s, e(1, 2) * s, e(2, 2) * s];
    CPMap::new(3, 3, kraus).expect("rank_drop_d3 is a channel")
}

pub fn amplitude_damping(gamma: f64) -> CPMap {
    let k0 = diag(&[1.0, (1.0 - gamma).sqrt()]);
    let k1 = outer(&ket(2, 0), &ket(2, 1)) * c(gamma.sqrt(), 0.0);
    CPMap::new(2, 2, vec![k0, k1]).expect("amplitude damping")
}

/// Completely depolarizing channel restricted to each of the given blocks
/// of consecutive basis vectors.
pub fn block_depolarizing(blocks: &[usize]) -> CPMap {
    let d: usize = blocks.iter().sum();
    let mut kraus = Vec::new();
    let mut off = 0;
    for &n in blocks {
        let s = c(1.0 / (n as f64).sqrt(), 0.0);
        for i in 0..n {
            for j in 0..n {
                kraus.push(outer(&ket(d, off + i), &ket(d, off + j)) * s);
            }
        }
        off += n;
    }
    CPMap::new(d, d, kraus).expect("block depolarizing")
}

pub fn completely_depolarizing(d: usize) -> CPMap {
    block_depolarizing(&[d])
}

/// Basis layout of the qutrit example: `|0⟩ = e₀`, `|+⟩ = e₁`, `|−⟩ = e₂`.
pub fn qutrit_kets() -> (CMatrix, CMatrix, CMatrix) {
    (ket(3, 0), ket(3, 1), ket(3, 2))
}

/// `ℐ±(ρ) = ⟨±|ρ|±⟩ |±⟩⟨±| + ⟨0|ρ|0⟩ 𝟙/6`.
pub fn qutrit_remark_instrument() -> Instrument {
    let (k0, kp, km) = qutrit_kets();
    let s = c((1.0f64 / 6.0).sqrt(), 0.0);
    let op = |v: &CMatrix| {
        let mut kraus = vec![outer(v, v)];
        for i in 0..3 {
            kraus.push(outer(&ket(3, i), &k0) * s);
        }
        CPMap::new(3, 3, kraus).expect("qutrit operation")
    };
    Instrument::new(vec!["+".into(), "-".into()], vec![op(&kp), op(&km)], &Tolerances::default())
        .expect("qutrit instrument")
}

pub fn luders_instrument(obs: &Observable) -> Instrument {
    let ops = obs.effects.iter().map(CPMap::luders).collect();
    Instrument::new(obs.labels.clone(), ops, &Tolerances::default()).expect("Lüders instrument")
}

/// `{diag(¾,¼), diag(¼,¾)}`.
pub fn binary_indefinite_observable() -> Observable {
    let t = Tolerances::default();
    Observable::new(
        vec!["0".into(), "1".into()],
        vec![
            Effect::new(diag(&[0.75, 0.25]), &t).unwrap(),
            Effect::new(diag(&[0.25, 0.75]), &t).unwrap(),
        ],
        &t,
    )
    .unwrap()
}

pub fn computational_observable(d: usize) -> Observable {
    let t = Tolerances::default();
    let effects = (0..d)
        .map(|i| Effect::new(outer(&ket(d, i), &ket(d, i)), &t).unwrap())
        .collect();
    Observable::new(outcome_labels(d), effects, &t).unwrap()
}

/// Unitary `|s, a⟩ ↦ |s, a + s mod d⟩` with pointer `|0⟩⟨0|` readout on
/// a pure apparatus: a pure dilation of the projective Lüders instrument.
pub fn pure_luders_process(d: usize) -> MeasurementProcess {
    let n = d * d;
    let mut u = CMatrix::zeros(n, n);
    for s in 0..d {
        for a in 0..d {
            u[(s * d + (a + s) % d, s * d + a)] = c(1.0, 0.0);
        }
    }
    let tol = Tolerances::default();
    let pointer = computational_observable(d);
    MeasurementProcess::new(
        d,
        d,
        State::pure(&ket(d, 0)),
        CPMap::unitary(&u).unwrap(),
        processes::Pointer::observable(pointer),
        &tol,
    )
    .expect("pure Lüders dilation")
}

// ---------------------------------------------------------------------------
// catalog

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Generated {
    Map(CPMap),
    Instrument(Instrument),
    Process(MeasurementProcess),
}

/// Builder parameters; matrices given as `[re, im]` nested arrays.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct GenParams {
    pub dim: Option<usize>,
    pub lambda: Option<f64>,
    pub outcomes: Option<usize>,
    pub seed: Option<u64>,
    #[serde(with = "crate::matser::opt")]
    pub matrix: Option<CMatrix>,
    #[serde(with = "crate::matser::opt")]
    pub state: Option<CMatrix>,
    #[serde(with = "crate::matser::vec")]
    pub effects: Vec<CMatrix>,
}

pub const CATALOG: &[&str] = &[
    "identity",
    "unitary",
    "luders",
    "prepare",
    "swap_process",
    "depolarize_to_pure",
    "qutrit_remark_instrument",
    "rank_drop_d3",
    "random_channel",
    "random_bistochastic",
    "random_instrument",
];

pub fn generators() -> &'static [&'static str] {
    CATALOG
}

pub fn build(name: &str, p: &GenParams) -> Result<Generated> {
    let tol = Tolerances::default();
    let dim = p.dim.unwrap_or(2);
    let seed = p.seed.unwrap_or(0);
    Ok(match name.replace('-', "_").as_str() {
        "identity" => Generated::Map(identity(dim)),
        "unitary" => {
            let u = p.matrix.clone().unwrap_or_else(hadamard);
            Generated::Map(CPMap::unitary(&u)?)
        }
        "luders" => {
            if !p.effects.is_empty() {
                let effects = p
                    .effects
                    .iter()
                    .map(|m| Effect::new(m.clone(), &tol))
                    .collect::<Result<Vec<_>>>()?;
                let obs = Observable::new(outcome_labels(effects.len()), effects, &tol)?;
                Generated::Instrument(luders_instrument(&obs))
            } else {
                let e = p.matrix.clone().unwrap_or_else(|| diag(&[1.0, 0.5]));
                Generated::Map(CPMap::luders(&Effect::new(e, &tol)?))
            }
        }
        "prepare" => {
            let s = p.state.clone().unwrap_or_else(|| outer(&ket(dim, 0), &ket(dim, 0)));
            let sigma = State::new(s, &tol)?;
            Generated::Map(CPMap::prepare(sigma.dim(), &sigma))
        }
        "swap_process" => {
            let e = p.matrix.clone().unwrap_or_else(|| eye(dim));
            let xi = p.state.clone().unwrap_or_else(|| eye(dim) / c(dim as f64, 0.0));
            Generated::Process(processes::swap_process(
                &Effect::new(e, &tol)?,
                &State::new(xi, &tol)?,
                &tol,
            )?)
        }
        "depolarize_to_pure" => {
            let phi = p.state.clone().map(|s| {
                let (vals, vecs) = eigh(&s);
                vecs.columns(vals.len() - 1, 1).into_owned()
            });
            let phi = phi.unwrap_or_else(|| ket(dim, 0));
            Generated::Map(depolarize_to_pure(p.lambda.unwrap_or(0.5), &phi)?)
        }
        "qutrit_remark_instrument" | "qutrit_instrument" => Generated::Instrument(qutrit_remark_instrument()),
        "rank_drop_d3" => Generated::Map(rank_drop_d3()),
        "random_channel" => {
            let mut r = rng(seed);
            Generated::Map(random_channel(&mut r, dim, p.outcomes.unwrap_or(dim)))
        }
        "random_bistochastic" => {
            let mut r = rng(seed);
            Generated::Map(random_bistochastic(&mut r, dim, 3))
        }
        "random_instrument" => {
            let mut r = rng(seed);
            Generated::Instrument(random_instrument(&mut r, dim, p.outcomes.unwrap_or(2), dim))
        }
        other => return Err(Error::UnknownGenerator(other.to_string())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmaps::classify_map;

    #[test]
    fn haar_unitary_is_unitary() {
        let mut r = rng(3);
        let u = haar_unitary(&mut r, 4);
        assert!(max_abs(&(u.adjoint() * &u - eye(4))) < 1e-12);
    }

    #[test]
    fn random_channel_is_trace_preserving() {
        let mut r = rng(5);
        let m = random_channel(&mut r, 3, 2);
        assert!(m.is_trace_preserving(&Tolerances::default()));
        let b = random_bistochastic(&mut r, 3, 3);
        assert!(classify_map(&b, &Tolerances::default()).unwrap().bistochastic);
    }

    #[test]
    fn luders_generator() {
        let g = build("luders", &GenParams::default()).unwrap();
        let Generated::Map(m) = g else { panic!() };
        assert_eq!(m.kraus().len(), 1);
        assert!(max_abs(&(&m.kraus()[0] - diag(&[1.0, 0.5f64.sqrt()]))) < 1e-12);
    }

    #[test]
    fn rank_drop_d3_definition() {
        let m = rank_drop_d3();
        let t = Tolerances::default();
        assert!(m.is_trace_preserving(&t));
        let p01 = diag(&[0.5, 0.5, 0.0]);
        let out = m.apply(&p01).unwrap();
        assert!(max_abs(&(out - diag(&[1.0, 0.0, 0.0]))) < 1e-14);
        let out = m.apply(&diag(&[0.0, 0.0, 1.0])).unwrap();
        assert!(max_abs(&(out - eye(3) / c(3.0, 0.0))) < 1e-14);
    }

    #[test]
    fn unknown_generator() {
        assert!(matches!(build("nope", &GenParams::default()), Err(Error::UnknownGenerator(_))));
    }
}
