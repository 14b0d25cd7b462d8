//! JSON encoding of complex matrices: a list of rows, each entry either a bare
//! number (zero imaginary part) or an `[re, im]` pair.

use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::linmat::MatrixData;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

impl From<Complex64> for Entry {
    fn from(z: Complex64) -> Self {
        if z.im == 0.0 {
            Entry::Real(z.re)
        } else {
            Entry::Complex([z.re, z.im])
        }
    }
}

impl From<Entry> for Complex64 {
    fn from(e: Entry) -> Self {
        match e {
            Entry::Real(x) => Complex64::new(x, 0.0),
            Entry::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

pub fn to_rows(m: &MatrixData) -> Vec<Vec<Entry>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)].into()).collect())
        .collect()
}

/// Builds a matrix from rows; `cols_hint` fixes the width of an empty list.
pub fn from_rows(rows: &[Vec<Entry>], cols_hint: usize) -> Result<MatrixData, String> {
    let r = rows.len();
    let cols = rows.first().map(|row| row.len()).unwrap_or(cols_hint);
    if let Some((i, row)) = rows.iter().enumerate().find(|(_, row)| row.len() != cols) {
        return Err(format!("row {i} has {} entries, expected {cols}", row.len()));
    }
    Ok(MatrixData::from_fn(r, cols, |i, j| rows[i][j].into()))
}

pub fn serialize<S: Serializer>(m: &MatrixData, s: S) -> Result<S::Ok, S::Error> {
    to_rows(m).serialize(s)
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<MatrixData, D::Error> {
    let rows = Vec::<Vec<Entry>>::deserialize(d)?;
    from_rows(&rows, 0).map_err(D::Error::custom)
}

/// Same encoding for optional matrices.
pub mod option {
    use super::*;

    pub fn serialize<S: Serializer>(m: &Option<MatrixData>, s: S) -> Result<S::Ok, S::Error> {
        m.as_ref().map(to_rows).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<MatrixData>, D::Error> {
        let rows = Option::<Vec<Vec<Entry>>>::deserialize(d)?;
        rows.map(|r| from_rows(&r, 0).map_err(D::Error::custom))
            .transpose()
    }
}

/// Encoding for complex vectors as flat entry lists.
pub mod vector {
    use super::*;
    use crate::linmat::VectorData;

    pub fn serialize<S: Serializer>(v: &VectorData, s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|&z| Entry::from(z)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<VectorData, D::Error> {
        let e = Vec::<Entry>::deserialize(d)?;
        Ok(VectorData::from_iterator(e.len(), e.into_iter().map(Complex64::from)))
    }
}
