//! System files: JSON with complex entries as `[re, im]` pairs.

use std::path::Path;

use kypc::linmat::{self, MatrixData};
use kypc::serde_matrix::{self, Entry};
use kypc::{CostWeight, LinearPlant, StochPlant};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest `|X − X*|` entry tolerated before symmetrization.
pub const HERMITIAN_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Deterministic,
    Stochastic,
}

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("{0} not Hermitian (deviation {1:e})")]
    NotHermitian(&'static str, f64),
    #[error("R not positive definite")]
    RNotPositive,
}

impl BundleError {
    /// Process exit code for this error.
    pub fn code(&self) -> i32 {
        match self {
            Self::Io { .. } => 3,
            Self::Schema(_) => 4,
            Self::Dimension(_) => 5,
            Self::NotHermitian(..) => 6,
            Self::RNotPositive => 7,
        }
    }
}

type Rows = Vec<Vec<Entry>>;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CostFile {
    #[serde(rename = "W")]
    w: Rows,
    #[serde(rename = "V", default, skip_serializing_if = "Option::is_none")]
    v: Option<Rows>,
    #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
    r: Option<Rows>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    kind: Kind,
    #[serde(rename = "A")]
    a: Rows,
    #[serde(rename = "B")]
    b: Rows,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    n: Option<Rows>,
    cost: CostFile,
}

/// Validated system description.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemBundle {
    pub name: Option<String>,
    pub kind: Kind,
    pub a: MatrixData,
    pub b: MatrixData,
    /// Noise matrix; `None` for deterministic systems.
    pub n: Option<MatrixData>,
    pub cost: CostWeight,
}

fn matrix(field: &str, rows: &Rows, cols_hint: usize) -> Result<MatrixData, BundleError> {
    let m = serde_matrix::from_rows(rows, cols_hint).map_err(|e| BundleError::Schema(format!("{field}: {e}")))?;
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(BundleError::Schema(format!("{field}: non-finite entry")));
    }
    Ok(m)
}

fn expect_shape(field: &str, m: &MatrixData, rows: usize, cols: usize) -> Result<(), BundleError> {
    if m.nrows() != rows {
        return Err(BundleError::Dimension(format!("{field} rows: got {}, expected {rows}", m.nrows())));
    }
    if m.ncols() != cols {
        return Err(BundleError::Dimension(format!("{field} cols: got {}, expected {cols}", m.ncols())));
    }
    Ok(())
}

fn hermitian(field: &'static str, m: &MatrixData) -> Result<MatrixData, BundleError> {
    let dev = linmat::max_abs_diff(m, &m.adjoint());
    if dev > HERMITIAN_TOL {
        return Err(BundleError::NotHermitian(field, dev));
    }
    Ok(linmat::symmetrize(m))
}

impl SystemBundle {
    fn from_file(f: SystemFile) -> Result<Self, BundleError> {
        let a = matrix("A", &f.a, 0)?;
        let n = a.nrows();
        expect_shape("A", &a, n, n)?;
        if n == 0 {
            return Err(BundleError::Schema("A: empty".into()));
        }
        let b = matrix("B", &f.b, 0)?;
        if b.nrows() != n {
            return Err(BundleError::Dimension(format!("B rows: got {}, expected {n}", b.nrows())));
        }
        let m = b.ncols();
        let noise = match (f.kind, &f.n) {
            (Kind::Stochastic, Some(rows)) => {
                let nm = matrix("N", rows, n)?;
                expect_shape("N", &nm, n, n)?;
                Some(nm)
            }
            (Kind::Stochastic, None) => return Err(BundleError::Schema("missing field `N` for stochastic system".into())),
            (Kind::Deterministic, Some(_)) => return Err(BundleError::Schema("field `N` given for deterministic system".into())),
            (Kind::Deterministic, None) => None,
        };
        let w = matrix("W", &f.cost.w, n)?;
        expect_shape("W", &w, n, n)?;
        let w = hermitian("W", &w)?;
        let v = match &f.cost.v {
            Some(rows) => {
                let v = matrix("V", rows, n)?;
                expect_shape("V", &v, m, n)?;
                v
            }
            None => linmat::zeros(m, n),
        };
        let r = match &f.cost.r {
            Some(rows) => {
                let r = matrix("R", rows, m)?;
                expect_shape("R", &r, m, m)?;
                hermitian("R", &r)?
            }
            None => linmat::identity(m),
        };
        if m > 0 && linmat::min_eig_hermitian(&r) <= 0.0 {
            return Err(BundleError::RNotPositive);
        }
        let cost = CostWeight::new(w, v, r).map_err(|e| BundleError::Schema(e.to_string()))?;
        Ok(Self { name: f.name, kind: f.kind, a, b, n: noise, cost })
    }

    pub fn states(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn linear_plant(&self) -> kypc::Result<LinearPlant> {
        LinearPlant::new(self.a.clone(), self.b.clone())
    }

    /// Stochastic plant; deterministic systems get `N = 0`.
    pub fn stoch_plant(&self) -> kypc::Result<StochPlant> {
        let n = self.n.clone().unwrap_or_else(|| linmat::zeros(self.states(), self.states()));
        StochPlant::new(self.a.clone(), n, self.b.clone())
    }

    /// Whether the weight is `diag(W, I)`.
    pub fn state_weight_only(&self) -> bool {
        self.cost.v.iter().all(|z| *z == linmat::c(0.0)) && self.cost.r == linmat::identity(self.inputs())
    }
}

pub fn parse_system_str(text: &str) -> Result<SystemBundle, BundleError> {
    let file: SystemFile = serde_json::from_str(text).map_err(|e| BundleError::Schema(e.to_string()))?;
    SystemBundle::from_file(file)
}

pub fn parse_system_file(path: &Path) -> Result<SystemBundle, BundleError> {
    let text = std::fs::read_to_string(path).map_err(|source| BundleError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_system_str(&text)
}

/// Serializes a bundle in the input schema.
pub fn emit_system_file(bundle: &SystemBundle) -> String {
    let file = SystemFile {
        name: bundle.name.clone(),
        kind: bundle.kind,
        a: serde_matrix::to_rows(&bundle.a),
        b: serde_matrix::to_rows(&bundle.b),
        n: bundle.n.as_ref().map(serde_matrix::to_rows),
        cost: CostFile {
            w: serde_matrix::to_rows(&bundle.cost.w),
            v: Some(serde_matrix::to_rows(&bundle.cost.v)),
            r: Some(serde_matrix::to_rows(&bundle.cost.r)),
        },
    };
    serde_json::to_string_pretty(&file).expect("bundle serializes")
}
