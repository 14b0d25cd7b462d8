//! Spectral and mean-square stability measures, stabilizability tests and
//! stabilizing feedback constructions.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linmat::{self, c, identity, MatrixData};
use crate::stoch_lq;

/// Rank tolerance (relative to the largest singular value) of the Hautus test.
pub const HAUTUS_RANK_TOL: f64 = 1e-9;
/// Bass-method retries with doubled shift.
const BASS_RETRIES: usize = 8;

/// Deterministic plant `ẋ = Ax + Bu`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearPlant {
    #[serde(with = "crate::serde_matrix")]
    pub a: MatrixData,
    #[serde(with = "crate::serde_matrix")]
    pub b: MatrixData,
}

impl LinearPlant {
    pub fn new(a: MatrixData, b: MatrixData) -> Result<Self> {
        let n = linmat::ensure_square(&a)?;
        if b.nrows() != n {
            return Err(Error::DimensionMismatch(format!(
                "B rows: B has {} rows, A is {n}x{n}",
                b.nrows()
            )));
        }
        linmat::ensure_finite(&a, "A")?;
        linmat::ensure_finite(&b, "B")?;
        Ok(Self { a, b })
    }

    pub fn states(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    /// `A + BF`.
    pub fn closed_loop(&self, f: &MatrixData) -> MatrixData {
        &self.a + &self.b * f
    }
}

/// Itô plant `dx = (Ax + Bu)dt + Nx dw` with a scalar Wiener process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochPlant {
    #[serde(with = "crate::serde_matrix")]
    pub a: MatrixData,
    #[serde(with = "crate::serde_matrix")]
    pub n: MatrixData,
    #[serde(with = "crate::serde_matrix")]
    pub b: MatrixData,
}

impl StochPlant {
    pub fn new(a: MatrixData, n: MatrixData, b: MatrixData) -> Result<Self> {
        let dim = linmat::ensure_square(&a)?;
        if n.shape() != (dim, dim) {
            return Err(Error::DimensionMismatch(format!(
                "N is {}x{}, A is {dim}x{dim}",
                n.nrows(),
                n.ncols()
            )));
        }
        if b.nrows() != dim {
            return Err(Error::DimensionMismatch(format!(
                "B rows: B has {} rows, A is {dim}x{dim}",
                b.nrows()
            )));
        }
        linmat::ensure_finite(&a, "A")?;
        linmat::ensure_finite(&n, "N")?;
        linmat::ensure_finite(&b, "B")?;
        Ok(Self { a, n, b })
    }

    pub fn states(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn deterministic(&self) -> LinearPlant {
        LinearPlant {
            a: self.a.clone(),
            b: self.b.clone(),
        }
    }

    pub fn closed_loop(&self, f: &MatrixData) -> MatrixData {
        &self.a + &self.b * f
    }
}

/// Largest real part over the spectrum.
pub fn spectral_abscissa(a: &MatrixData) -> Result<f64> {
    Ok(linmat::eigenvalues(a)?
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Spectral abscissa of the lift `I⊗A + Ā⊗I + N̄⊗N`, the generator of the
/// second-moment dynamics `P ↦ AP + PA* + NPN*`. Negative iff `(A, N)` is
/// mean-square asymptotically stable.
pub fn ms_abscissa(a: &MatrixData, n: &MatrixData) -> Result<f64> {
    let dim = linmat::ensure_square(a)?;
    if n.shape() != (dim, dim) {
        return Err(Error::DimensionMismatch("N must match A".into()));
    }
    spectral_abscissa(&linmat::lift_forward(a, Some(n)))
}

/// Hautus test: `rank [λI − A, B] = n` for every eigenvalue with `Re λ ≥ 0`.
pub fn is_stabilizable_det(plant: &LinearPlant) -> Result<bool> {
    let n = plant.states();
    let m = plant.inputs();
    for lam in linmat::eigenvalues(&plant.a)? {
        if lam.re < -1e-10 {
            continue;
        }
        let mut pencil = linmat::zeros(n, n + m);
        pencil
            .view_mut((0, 0), (n, n))
            .copy_from(&(identity(n) * lam - &plant.a));
        pencil.view_mut((0, n), (n, m)).copy_from(&plant.b);
        if linmat::rank(&pencil, HAUTUS_RANK_TOL) < n {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Stabilizing state feedback by the Bass method: with `β = ‖A‖_F + 1`, solve
/// `(A+βI)X + X(A+βI)* = 2BB*` and set `F = −B*X†`. The result is verified
/// and `β` doubled on failure.
pub fn stabilize_det(plant: &LinearPlant) -> Result<MatrixData> {
    if !is_stabilizable_det(plant)? {
        return Err(Error::NotStabilizable);
    }
    let n = plant.states();
    let bb2 = &plant.b * plant.b.adjoint() * c(2.0);
    let mut beta = linmat::fro(&plant.a) + 1.0;
    let mut last = f64::INFINITY;
    for _ in 0..=BASS_RETRIES {
        let shifted = &plant.a + identity(n) * c(beta);
        // (A+βI)X + X(A+βI)* − 2BB* = 0 in the form Ã*X + XÃ + Q = 0
        if let Ok(x) = linmat::solve_lyapunov(&shifted.adjoint(), &(-&bb2)) {
            let f = -(plant.b.adjoint() * linmat::pinv(&x));
            let abscissa = spectral_abscissa(&plant.closed_loop(&f))?;
            if abscissa < 0.0 {
                return Ok(f);
            }
            last = abscissa;
        }
        beta *= 2.0;
    }
    Err(Error::StabilizationFailed {
        retries: BASS_RETRIES,
        abscissa: last,
    })
}

/// Searches for `F` with `(A+BF, N)` mean-square stable: first `F = 0`, then
/// the feedback of the Wonham Riccati equation with unit state weight reached
/// by noise homotopy. `None` means "not certified", not "not stabilizable".
pub fn certify_stabilizable_stoch(plant: &StochPlant) -> Result<Option<MatrixData>> {
    let m = plant.inputs();
    let n = plant.states();
    let zero = linmat::zeros(m, n);
    if ms_abscissa(&plant.a, &plant.n)? < 0.0 {
        return Ok(Some(zero));
    }
    if m == 0 {
        return Ok(None);
    }
    match stoch_lq::wonham_homotopy(plant, &identity(n)) {
        Some(f) if ms_abscissa(&plant.closed_loop(&f), &plant.n)? < 0.0 => Ok(Some(f)),
        _ => Ok(None),
    }
}

/// Distance from `iω` to the closest eigenvalue, with that eigenvalue.
pub(crate) fn closest_eigenvalue(eigs: &[Complex64], omega: f64) -> Option<(Complex64, f64)> {
    eigs.iter()
        .map(|&l| (l, (Complex64::new(0.0, omega) - l).norm()))
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
}
