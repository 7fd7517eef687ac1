//! Completely positive maps in Kraus form.

use crate::error::{Error, Result};
use crate::matser;
use crate::opalg::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCPMap", into = "RawCPMap")]
pub struct CPMap {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<CMatrix>,
}

#[derive(Serialize, Deserialize)]
pub struct RawCPMap {
    pub dim_in: usize,
    pub dim_out: usize,
    #[serde(with = "matser::vec")]
    pub kraus: Vec<CMatrix>,
}

impl TryFrom<RawCPMap> for CPMap {
    type Error = String;
    fn try_from(r: RawCPMap) -> std::result::Result<Self, String> {
        CPMap::new(r.dim_in, r.dim_out, r.kraus).map_err(crate::error::tagged)
    }
}

impl From<CPMap> for RawCPMap {
    fn from(m: CPMap) -> Self {
        RawCPMap { dim_in: m.dim_in, dim_out: m.dim_out, kraus: m.kraus }
    }
}

/// Slack allowed on `Σ K†K ≤ 𝟙` at construction.
const SUBUNITAL_SLACK: f64 = 1e-8;

impl CPMap {
    /// Validates Kraus shapes, finiteness and the operation contract `Σ K†K ≤ 𝟙`.
    pub fn new(dim_in: usize, dim_out: usize, kraus: Vec<CMatrix>) -> Result<Self> {
        let m = CPMap::new_unchecked_norm(dim_in, dim_out, kraus)?;
        let top = *eigvalsh(&m.dual_unit()).last().unwrap();
        if top > 1.0 + SUBUNITAL_SLACK {
            return Err(Error::NotSubunital(top));
        }
        Ok(m)
    }

    /// Shape checks only: admits maps that are CP but not trace non-increasing,
    /// such as scaled maps or duals of operations.
    pub fn new_unchecked_norm(dim_in: usize, dim_out: usize, kraus: Vec<CMatrix>) -> Result<Self> {
        if dim_in == 0 || dim_out == 0 {
            return Err(Error::DimMismatch("dimensions must be positive".into()));
        }
        if kraus.is_empty() {
            return Err(Error::DimMismatch("at least one Kraus operator required".into()));
        }
        for (k, op) in kraus.iter().enumerate() {
            if op.nrows() != dim_out || op.ncols() != dim_in {
                return Err(Error::DimMismatch(format!(
                    "Kraus operator {k} is {}x{}, expected {dim_out}x{dim_in}",
                    op.nrows(),
                    op.ncols()
                )));
            }
            if !is_finite(op) {
                return Err(Error::NonFinite);
            }
        }
        Ok(CPMap { dim_in, dim_out, kraus })
    }

    pub fn identity(d: usize) -> Self {
        CPMap { dim_in: d, dim_out: d, kraus: vec![eye(d)] }
    }

    pub fn unitary(u: &CMatrix) -> Result<Self> {
        let d = u.nrows();
        if max_abs(&(u.adjoint() * u - eye(d))) > 1e-9 {
            return Err(Error::PreconditionUnmet("matrix is not unitary".into()));
        }
        CPMap::new(d, d, vec![u.clone()])
    }

    /// Lüders operation `√E · √E`.
    pub fn luders(e: &Effect) -> Self {
        let d = e.dim();
        CPMap { dim_in: d, dim_out: d, kraus: vec![psd_sqrt(e.matrix())] }
    }

    /// `Φ(·) = tr[E ·] σ`.
    pub fn measure_prepare(e: &Effect, sigma: &State) -> Self {
        let d_in = e.dim();
        let d_out = sigma.dim();
        let (ev, evec) = eigh(e.matrix());
        let (sv, svec) = eigh(sigma.matrix());
        let mut kraus = Vec::new();
        for (i, &l) in ev.iter().enumerate() {
            for (j, &s) in sv.iter().enumerate() {
                let w = (l.max(0.0) * s.max(0.0)).sqrt();
                if w > 1e-15 {
                    let k = outer(&svec.columns(j, 1).into_owned(), &evec.columns(i, 1).into_owned());
                    kraus.push(k * c(w, 0.0));
                }
            }
        }
        if kraus.is_empty() {
            kraus.push(CMatrix::zeros(d_out, d_in));
        }
        CPMap { dim_in: d_in, dim_out: d_out, kraus }
    }

    /// Prepare-σ channel `tr[·] σ`.
    pub fn prepare(d_in: usize, sigma: &State) -> Self {
        CPMap::measure_prepare(&Effect::identity(d_in), sigma)
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn is_square(&self) -> bool {
        self.dim_in == self.dim_out
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn apply(&self, a: &CMatrix) -> Result<CMatrix> {
        if a.nrows() != self.dim_in || a.ncols() != self.dim_in {
            return Err(Error::DimMismatch(format!(
                "input {}x{}, map expects {}x{}",
                a.nrows(),
                a.ncols(),
                self.dim_in,
                self.dim_in
            )));
        }
        Ok(self.apply_unchecked(a))
    }

    pub(crate) fn apply_unchecked(&self, a: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim_out, self.dim_out);
        for k in &self.kraus {
            out += k * a * k.adjoint();
        }
        out
    }

    /// Heisenberg action `Φ*(A) = Σ K† A K`.
    pub fn apply_dual(&self, a: &CMatrix) -> Result<CMatrix> {
        if a.nrows() != self.dim_out || a.ncols() != self.dim_out {
            return Err(Error::DimMismatch("dual input has wrong size".into()));
        }
        let mut out = CMatrix::zeros(self.dim_in, self.dim_in);
        for k in &self.kraus {
            out += k.adjoint() * a * k;
        }
        Ok(out)
    }

    /// `Φ(𝟙)`.
    pub fn image_of_unit(&self) -> CMatrix {
        self.apply_unchecked(&eye(self.dim_in))
    }

    /// `Φ*(𝟙) = Σ K†K`.
    pub fn dual_unit(&self) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim_in, self.dim_in);
        for k in &self.kraus {
            out += k.adjoint() * k;
        }
        out
    }

    pub fn dual(&self) -> CPMap {
        CPMap {
            dim_in: self.dim_out,
            dim_out: self.dim_in,
            kraus: self.kraus.iter().map(|k| k.adjoint()).collect(),
        }
    }

    /// `(Φ ⊗ id)(|Ω⟩⟨Ω|)` with output factor first; size `dim_out·dim_in`.
    pub fn choi(&self) -> CMatrix {
        let n = self.dim_out * self.dim_in;
        let mut j = CMatrix::zeros(n, n);
        for k in &self.kraus {
            let v = row_major_vec(k);
            j += &v * v.adjoint();
        }
        j
    }

    /// Superoperator on column-major vectorizations: `vec(Φ(X)) = S vec(X)`.
    pub fn superoperator(&self) -> CMatrix {
        let mut s = CMatrix::zeros(self.dim_out * self.dim_out, self.dim_in * self.dim_in);
        for k in &self.kraus {
            s += kron(&k.map(|z| z.conj()), k);
        }
        s
    }

    pub fn scaled(&self, factor: f64) -> CPMap {
        let r = c(factor.max(0.0).sqrt(), 0.0);
        CPMap {
            dim_in: self.dim_in,
            dim_out: self.dim_out,
            kraus: self.kraus.iter().map(|k| k * r).collect(),
        }
    }

    /// Canonical Kraus form through the Choi matrix.
    pub fn canonical(&self, tol: &Tolerances) -> CPMap {
        kraus_from_choi_unchecked(&self.choi(), self.dim_in, self.dim_out, tol)
    }

    /// Re-express with at most `dim_in·dim_out` Kraus operators when larger.
    pub fn compressed(self, tol: &Tolerances) -> CPMap {
        if self.kraus.len() > self.dim_in * self.dim_out {
            self.canonical(tol)
        } else {
            self
        }
    }

    pub fn is_trace_preserving(&self, tol: &Tolerances) -> bool {
        max_abs(&(self.dual_unit() - eye(self.dim_in))) <= tol.trace_tol
    }
}

fn row_major_vec(k: &CMatrix) -> CMatrix {
    let (r, cl) = k.shape();
    CMatrix::from_fn(r * cl, 1, |idx, _| k[(idx / cl, idx % cl)])
}

pub fn apply(map: &CPMap, a: &CMatrix) -> Result<CMatrix> {
    map.apply(a)
}

pub fn dual(map: &CPMap) -> CPMap {
    map.dual()
}

pub fn choi(map: &CPMap) -> CMatrix {
    map.choi()
}

/// Kraus operators from a Choi matrix (output factor first).
pub fn kraus_from_choi(choi: &CMatrix, dim_in: usize, dim_out: usize, tol: &Tolerances) -> Result<CPMap> {
    let n = dim_in * dim_out;
    if choi.nrows() != n || choi.ncols() != n {
        return Err(Error::DimMismatch(format!("Choi must be {n}x{n}")));
    }
    let h = HermitianOp::new(choi.clone(), tol)?;
    let vals = h.eigenvalues();
    let lmax = vals[vals.len() - 1];
    if vals[0] < -tol.psd_tol * lmax.max(1.0) {
        return Err(Error::NotPSD(vals[0]));
    }
    Ok(kraus_from_choi_unchecked(h.matrix(), dim_in, dim_out, tol))
}

/// Descending eigenvalues; phase fixed so the first significant entry is
/// real positive; ties ordered lexicographically on the fixed eigenvectors.
fn kraus_from_choi_unchecked(choi: &CMatrix, dim_in: usize, dim_out: usize, tol: &Tolerances) -> CPMap {
    let (vals, vecs) = eigh(choi);
    let lmax = vals.last().copied().unwrap_or(0.0);
    let thr = tol.rank_threshold(lmax);
    let mut items: Vec<(f64, Vec<C64>)> = Vec::new();
    for (k, &l) in vals.iter().enumerate() {
        if l <= thr {
            continue;
        }
        let mut v: Vec<C64> = vecs.column(k).iter().copied().collect();
        if let Some(z) = v.iter().find(|z| z.norm() > 1e-12).copied() {
            let ph = z.conj() / z.norm();
            for x in v.iter_mut() {
                *x *= ph;
            }
        }
        items.push((l, v));
    }
    items.sort_by(|a, b| {
        let tie = (a.0 - b.0).abs() <= 1e-12 * lmax.max(1.0);
        if !tie {
            return b.0.partial_cmp(&a.0).unwrap();
        }
        for (x, y) in a.1.iter().zip(&b.1) {
            let o = x.re.partial_cmp(&y.re).unwrap().then(x.im.partial_cmp(&y.im).unwrap());
            if o != std::cmp::Ordering::Equal && (x - y).norm() > 1e-12 {
                return o;
            }
        }
        std::cmp::Ordering::Equal
    });
    let mut kraus: Vec<CMatrix> = items
        .iter()
        .map(|(l, v)| CMatrix::from_fn(dim_out, dim_in, |i, j| v[i * dim_in + j] * l.sqrt()))
        .collect();
    if kraus.is_empty() {
        kraus.push(CMatrix::zeros(dim_out, dim_in));
    }
    CPMap { dim_in, dim_out, kraus }
}

pub fn tensor(m1: &CPMap, m2: &CPMap) -> CPMap {
    let mut kraus = Vec::with_capacity(m1.kraus.len() * m2.kraus.len());
    for k in &m1.kraus {
        for l in &m2.kraus {
            kraus.push(kron(k, l));
        }
    }
    CPMap { dim_in: m1.dim_in * m2.dim_in, dim_out: m1.dim_out * m2.dim_out, kraus }
}

/// `m2 ∘ m1`.
pub fn compose(m2: &CPMap, m1: &CPMap) -> Result<CPMap> {
    if m1.dim_out != m2.dim_in {
        return Err(Error::DimMismatch(format!(
            "compose: first map outputs {}, second expects {}",
            m1.dim_out, m2.dim_in
        )));
    }
    let mut kraus = Vec::with_capacity(m1.kraus.len() * m2.kraus.len());
    for k in &m1.kraus {
        for l in &m2.kraus {
            kraus.push(l * k);
        }
    }
    Ok(CPMap { dim_in: m1.dim_in, dim_out: m2.dim_out, kraus })
}

/// `λ m1 + (1−λ) m2`.
pub fn convex_mix(m1: &CPMap, m2: &CPMap, lambda: f64) -> Result<CPMap> {
    if m1.dim_in != m2.dim_in || m1.dim_out != m2.dim_out {
        return Err(Error::DimMismatch("convex_mix requires equal dimensions".into()));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::PreconditionUnmet(format!("λ = {lambda} outside [0, 1]")));
    }
    let a = c(lambda.sqrt(), 0.0);
    let b = c((1.0 - lambda).sqrt(), 0.0);
    let mut kraus: Vec<CMatrix> = Vec::new();
    if lambda > 0.0 {
        kraus.extend(m1.kraus.iter().map(|k| k * a));
    }
    if lambda < 1.0 {
        kraus.extend(m2.kraus.iter().map(|k| k * b));
    }
    Ok(CPMap { dim_in: m1.dim_in, dim_out: m1.dim_out, kraus })
}

/// Max-entry distance between Choi matrices.
pub fn choi_distance_max(a: &CPMap, b: &CPMap) -> f64 {
    if a.dim_in != b.dim_in || a.dim_out != b.dim_out {
        return f64::INFINITY;
    }
    max_abs(&(a.choi() - b.choi()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapMargins {
    /// `max |Σ K†K − 𝟙|`
    pub trace_deviation: f64,
    /// `max |Φ(𝟙) − 𝟙|` (infinite for non-square maps)
    pub unit_deviation: f64,
    /// smallest eigenvalue of `Φ(𝟙)` minus the rank threshold
    pub positivity_margin: f64,
    /// largest eigenvalue of `Φ*(𝟙)`
    pub effect_norm: f64,
    pub choi_rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapClassification {
    pub trace_preserving: bool,
    pub unital: bool,
    pub bistochastic: bool,
    pub strictly_positive: bool,
    pub compatible_effect: Effect,
    pub purity_preserving: bool,
    pub margins: MapMargins,
}

pub fn classify_map(map: &CPMap, tol: &Tolerances) -> Result<MapClassification> {
    let e = map.dual_unit();
    let ev = eigvalsh(&e);
    let top = ev[ev.len() - 1];
    if top > 1.0 + tol.eff_tol {
        return Err(Error::NotSubunital(top));
    }
    let compatible_effect = Effect::new(e.clone(), tol)?;
    let trace_deviation = max_abs(&(&e - eye(map.dim_in)));
    let trace_preserving = trace_deviation <= tol.trace_tol;
    let phi1 = map.image_of_unit();
    let unit_deviation = if map.is_square() {
        max_abs(&(&phi1 - eye(map.dim_out)))
    } else {
        f64::INFINITY
    };
    let unital = unit_deviation <= tol.trace_tol;
    let pos = HermitianOp::new(phi1, tol)?;
    let positivity_margin = positivity_margin(&pos, tol);
    let choi_rank = rank_of(&map.choi(), tol)?;
    Ok(MapClassification {
        trace_preserving,
        unital,
        bistochastic: trace_preserving && unital,
        strictly_positive: positivity_margin > 0.0,
        compatible_effect,
        purity_preserving: choi_rank == 1,
        margins: MapMargins {
            trace_deviation,
            unit_deviation,
            positivity_margin,
            effect_norm: top,
            choi_rank,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t() -> Tolerances {
        Tolerances::default()
    }

    fn hadamard() -> CMatrix {
        let s = 1.0 / 2f64.sqrt();
        CMatrix::from_row_slice(2, 2, &[c(s, 0.), c(s, 0.), c(s, 0.), c(-s, 0.)])
    }

    fn phase_u() -> CMatrix {
        let s = 1.0 / 2f64.sqrt();
        CMatrix::from_row_slice(2, 2, &[c(s, 0.), c(0., s), c(0., s), c(s, 0.)])
    }

    #[test]
    fn apply_examples() {
        let a = CMatrix::from_fn(2, 2, |i, j| c(i as f64, j as f64));
        assert_eq!(CPMap::identity(2).apply(&a).unwrap(), a);
        let xi = State::new(diag(&[0.75, 0.25]), &t()).unwrap();
        let e = Effect::new(eye(2) * c(0.5, 0.), &t()).unwrap();
        let phi = CPMap::measure_prepare(&e, &xi);
        let out = phi.apply(&eye(2)).unwrap();
        assert!(max_abs(&(out - xi.matrix())) < 1e-14);
        assert!(matches!(phi.apply(&eye(3)), Err(Error::DimMismatch(_))));
    }

    #[test]
    fn dual_examples() {
        let u = phase_u();
        let d = CPMap::unitary(&u).unwrap().dual();
        assert!(max_abs(&(&d.kraus()[0] - u.adjoint())) < 1e-15);

        let e = Effect::new(diag(&[1.0, 0.5]), &t()).unwrap();
        let xi = State::new(diag(&[0.75, 0.25]), &t()).unwrap();
        let phi = CPMap::measure_prepare(&e, &xi);
        let a = CMatrix::from_fn(2, 2, |i, j| c(1.0 + i as f64, j as f64 - 0.5));
        let lhs = phi.dual().apply_unchecked(&a);
        let rhs = e.matrix() * (xi.matrix() * &a).trace();
        assert!(max_abs(&(lhs - rhs)) < 1e-13);

        assert!(choi_distance_max(&phi.dual().dual(), &phi) < 1e-12);
    }

    #[test]
    fn choi_examples() {
        let j = CPMap::identity(2).choi();
        assert_eq!(rank_of(&j, &t()).unwrap(), 1);
        assert!((j.trace().re - 2.0).abs() < 1e-14);

        let dep = CPMap::prepare(2, &State::maximally_mixed(2));
        assert!(max_abs(&(dep.choi() - eye(4) * c(0.5, 0.))) < 1e-14);

        let j = CPMap::unitary(&hadamard()).unwrap().choi();
        assert_eq!(rank_of(&j, &t()).unwrap(), 1);
    }

    #[test]
    fn kraus_from_choi_examples() {
        let m = kraus_from_choi(&CPMap::identity(2).choi(), 2, 2, &t()).unwrap();
        assert_eq!(m.kraus().len(), 1);
        assert!(max_abs(&(&m.kraus()[0] - eye(2))) < 1e-12);

        let m = kraus_from_choi(&(eye(4) * c(0.5, 0.)), 2, 2, &t()).unwrap();
        assert_eq!(m.kraus().len(), 4);
        for k in m.kraus() {
            assert!((fro_norm(k).powi(2) - 0.5).abs() < 1e-12);
        }
        assert!(max_abs(&(m.choi() - eye(4) * c(0.5, 0.))) < 1e-12);

        let deph = convex_mix(&CPMap::identity(2), &CPMap::unitary(&diag(&[1.0, -1.0])).unwrap(), 0.7)
            .unwrap();
        let m = kraus_from_choi(&deph.choi(), 2, 2, &t()).unwrap();
        assert_eq!(m.kraus().len(), 2);
        assert!(choi_distance_max(&m, &deph) < 1e-12);

        assert!(matches!(
            kraus_from_choi(&diag(&[1.0, -0.5, 0.0, 0.0]), 2, 2, &t()),
            Err(Error::NotPSD(_))
        ));
    }

    #[test]
    fn combinators() {
        let id6 = tensor(&CPMap::identity(2), &CPMap::identity(3));
        assert!(choi_distance_max(&id6, &CPMap::identity(6)) < 1e-14);

        let u = CPMap::unitary(&phase_u()).unwrap();
        let back = compose(&u.dual(), &u).unwrap();
        assert!(choi_distance_max(&back, &CPMap::identity(2)) < 1e-12);
        assert!(compose(&CPMap::identity(3), &CPMap::identity(2)).is_err());
        assert!(convex_mix(&CPMap::identity(2), &CPMap::identity(3), 0.5).is_err());
    }

    #[test]
    fn depolarize_to_pure_matches_definition() {
        let phi0 = State::pure(&ket(2, 0));
        let mix = convex_mix(&CPMap::identity(2), &CPMap::prepare(2, &phi0), 0.5).unwrap();
        let rho = CMatrix::from_row_slice(2, 2, &[c(0.3, 0.), c(0.1, 0.2), c(0.1, -0.2), c(0.7, 0.)]);
        let want = &rho * c(0.5, 0.) + phi0.matrix() * c(0.5, 0.);
        assert!(max_abs(&(mix.apply(&rho).unwrap() - want)) < 1e-14);
    }

    #[test]
    fn classify_examples() {
        let u = CPMap::unitary(&phase_u()).unwrap();
        let cl = classify_map(&u, &t()).unwrap();
        assert!(cl.trace_preserving && cl.unital && cl.bistochastic);
        assert!(cl.strictly_positive && cl.purity_preserving);

        let reset = CPMap::prepare(2, &State::pure(&ket(2, 0)));
        let cl = classify_map(&reset, &t()).unwrap();
        assert!(cl.trace_preserving && !cl.unital && !cl.strictly_positive);

        let over = CPMap::new_unchecked_norm(2, 2, vec![eye(2) * c(1.1, 0.)]).unwrap();
        assert!(matches!(classify_map(&over, &t()), Err(Error::NotSubunital(_))));
        assert!(matches!(CPMap::new(2, 2, vec![eye(2) * c(1.1, 0.)]), Err(Error::NotSubunital(_))));
    }
}
