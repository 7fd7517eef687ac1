//! Serde helpers: complex matrices as row-major nested arrays of `[re, im]`.

use crate::opalg::{CMatrix, C64};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub type RawMatrix = Vec<Vec<[f64; 2]>>;

pub fn to_raw(m: &CMatrix) -> RawMatrix {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn from_raw(raw: &RawMatrix) -> std::result::Result<CMatrix, String> {
    let rows = raw.len();
    if rows == 0 {
        return Err("matrix has no rows".into());
    }
    let cols = raw[0].len();
    if cols == 0 {
        return Err("matrix has no columns".into());
    }
    if let Some(i) = raw.iter().position(|r| r.len() != cols) {
        return Err(format!("row {i} has {} entries, expected {cols}", raw[i].len()));
    }
    let mut m = CMatrix::zeros(rows, cols);
    for (i, r) in raw.iter().enumerate() {
        for (j, z) in r.iter().enumerate() {
            if !z[0].is_finite() || !z[1].is_finite() {
                return Err(format!("entry ({i},{j}) is not finite"));
            }
            m[(i, j)] = C64::new(z[0], z[1]);
        }
    }
    Ok(m)
}

pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
    to_raw(m).serialize(s)
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMatrix, D::Error> {
    let raw = RawMatrix::deserialize(d)?;
    from_raw(&raw).map_err(D::Error::custom)
}

pub mod vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[CMatrix], s: S) -> std::result::Result<S::Ok, S::Error> {
        v.iter().map(to_raw).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<CMatrix>, D::Error> {
        let raw = Vec::<RawMatrix>::deserialize(d)?;
        raw.iter()
            .enumerate()
            .map(|(k, r)| from_raw(r).map_err(|e| D::Error::custom(format!("[{k}]: {e}"))))
            .collect()
    }
}

pub mod opt {
    use super::*;

    pub fn serialize<S: Serializer>(
        v: &Option<CMatrix>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        v.as_ref().map(to_raw).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Option<CMatrix>, D::Error> {
        let raw = Option::<RawMatrix>::deserialize(d)?;
        raw.map(|r| from_raw(&r).map_err(D::Error::custom)).transpose()
    }
}

/// Real matrices (classical actions) as row-major nested arrays.
pub mod real {
    use nalgebra::DMatrix;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
            .collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != m) {
            return Err(D::Error::custom("ragged real matrix"));
        }
        Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
    }
}
