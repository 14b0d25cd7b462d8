//! Popov frequency function and the strict / nonstrict frequency-domain
//! conditions, checked on a refined frequency grid.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linmat::{self, c, identity, MatrixData};
use crate::par;
use crate::stability::{closest_eigenvalue, LinearPlant};

/// `iω` closer than this to an eigenvalue of `A` counts as a pole.
pub const POLE_TOL: f64 = 1e-9;
/// Shift applied to grid points that land on a pole.
pub const POLE_NUDGE: f64 = 1e-6;
/// Tolerance of the nonstrict check `λ_min(Φ(ω)) ≥ −tol`.
pub const NONSTRICT_TOL: f64 = 1e-9;
/// Regularization added to `G*G` in the strict-margin pencil.
pub const PENCIL_REG: f64 = 1e-14;

/// Hermitian weight `M = [[W, V*], [V, R]]` with `R ≻ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostWeight {
    #[serde(with = "crate::serde_matrix")]
    pub w: MatrixData,
    #[serde(with = "crate::serde_matrix")]
    pub v: MatrixData,
    #[serde(with = "crate::serde_matrix")]
    pub r: MatrixData,
}

impl CostWeight {
    /// Validates dimensions, symmetrizes `W` and `R`, and checks `R ≻ 0`.
    pub fn new(w: MatrixData, v: MatrixData, r: MatrixData) -> Result<Self> {
        let n = linmat::ensure_square(&w)?;
        let m = linmat::ensure_square(&r)?;
        if v.shape() != (m, n) {
            return Err(Error::DimensionMismatch(format!(
                "V is {}x{}, expected {m}x{n}",
                v.nrows(),
                v.ncols()
            )));
        }
        linmat::ensure_finite(&w, "W")?;
        linmat::ensure_finite(&v, "V")?;
        linmat::ensure_finite(&r, "R")?;
        let r = linmat::symmetrize(&r);
        if m > 0 && linmat::min_eig_hermitian(&r) <= 0.0 {
            return Err(Error::InvalidArgument("R not positive definite".into()));
        }
        Ok(Self {
            w: linmat::symmetrize(&w),
            v,
            r,
        })
    }

    /// `M = I` of size `(n+m)`.
    pub fn identity(n: usize, m: usize) -> Self {
        Self {
            w: identity(n),
            v: linmat::zeros(m, n),
            r: identity(m),
        }
    }

    /// `W` with `V = 0`, `R = I`.
    pub fn state_weight(w: MatrixData, m: usize) -> Result<Self> {
        let n = w.nrows();
        Self::new(w, linmat::zeros(m, n), identity(m))
    }

    pub fn states(&self) -> usize {
        self.w.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.r.nrows()
    }

    /// Assembled `(n+m)×(n+m)` matrix.
    pub fn assembled(&self) -> MatrixData {
        let n = self.states();
        let m = self.inputs();
        let mut full = linmat::zeros(n + m, n + m);
        full.view_mut((0, 0), (n, n)).copy_from(&self.w);
        full.view_mut((0, n), (n, m)).copy_from(&self.v.adjoint());
        full.view_mut((n, 0), (m, n)).copy_from(&self.v);
        full.view_mut((n, n), (m, m)).copy_from(&self.r);
        full
    }

    /// Quadratic form `[x; u]* M [x; u]`.
    pub fn form(&self, x: &linmat::VectorData, u: &linmat::VectorData) -> f64 {
        let wx = &self.w * x;
        let vx = &self.v * x;
        let ru = &self.r * u;
        (x.dotc(&wx) + vx.dotc(u) + u.dotc(&vx) + u.dotc(&ru)).re
    }

    pub(crate) fn check_plant(&self, plant: &LinearPlant) -> Result<()> {
        if self.states() != plant.states() || self.inputs() != plant.inputs() {
            return Err(Error::DimensionMismatch(format!(
                "cost is for n={}, m={} but plant has n={}, m={}",
                self.states(),
                self.inputs(),
                plant.states(),
                plant.inputs()
            )));
        }
        Ok(())
    }
}

/// `M_ε = M − diag(ε²I, 0)`.
pub fn shift_weight(m: &CostWeight, eps: f64) -> Result<CostWeight> {
    if !(eps >= 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be >= 0, got {eps}")));
    }
    let n = m.states();
    Ok(CostWeight {
        w: &m.w - identity(n) * c(eps * eps),
        v: m.v.clone(),
        r: m.r.clone(),
    })
}

fn check_pole(eigs: &[Complex64], omega: f64) -> Result<()> {
    match closest_eigenvalue(eigs, omega) {
        Some((lam, d)) if d <= POLE_TOL => Err(Error::PoleOnGrid {
            omega,
            eigenvalue: lam,
            distance: d,
        }),
        _ => Ok(()),
    }
}

/// `(iωI − A)⁻¹B`.
pub fn transfer(plant: &LinearPlant, omega: f64) -> Result<MatrixData> {
    let n = plant.states();
    let pencil = identity(n) * Complex64::new(0.0, omega) - &plant.a;
    pencil
        .lu()
        .solve(&plant.b)
        .ok_or_else(|| Error::InvalidArgument(format!("iωI − A singular at ω = {omega}")))
}

fn popov_unchecked(plant: &LinearPlant, m: &CostWeight, omega: f64) -> Result<(MatrixData, MatrixData)> {
    let g = transfer(plant, omega)?;
    let vg = &m.v * &g;
    let phi = g.adjoint() * &m.w * &g + vg.adjoint() + vg + &m.r;
    Ok((linmat::symmetrize(&phi), g))
}

/// Popov function `Φ(ω) = [G; I]* M [G; I]`, `G = (iωI − A)⁻¹B`.
pub fn popov(plant: &LinearPlant, m: &CostWeight, omega: f64) -> Result<MatrixData> {
    m.check_plant(plant)?;
    check_pole(&linmat::eigenvalues(&plant.a)?, omega)?;
    Ok(popov_unchecked(plant, m, omega)?.0)
}

/// Frequency grid settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    /// Number of nonzero grid points (split evenly between ±ω).
    pub points: usize,
    pub omega_min: f64,
    pub omega_max: f64,
    pub refine_passes: usize,
    pub refine_points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            points: 2048,
            omega_min: 1e-3,
            omega_max: 1e3,
            refine_passes: 4,
            refine_points: 16,
        }
    }
}

impl GridConfig {
    /// `{0} ∪ ±logspace(omega_min, omega_max)`, strictly increasing.
    pub fn base_grid(&self) -> Vec<f64> {
        let half = (self.points / 2).max(1);
        let (lo, hi) = (self.omega_min.log10(), self.omega_max.log10());
        let pos: Vec<f64> = (0..half)
            .map(|k| {
                let t = if half == 1 { 1.0 } else { k as f64 / (half - 1) as f64 };
                10f64.powf(lo + t * (hi - lo))
            })
            .collect();
        let mut grid: Vec<f64> = pos.iter().rev().map(|w| -w).collect();
        grid.push(0.0);
        grid.extend(pos);
        grid
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyScan {
    pub grid: Vec<f64>,
    /// `λ_min(Φ(ω))` per grid point.
    pub min_eigs: Vec<f64>,
    /// `λ_min(Φ(ω), G*G)` per grid point; its minimum is the signed `ε*²`.
    pub ratios: Vec<f64>,
    pub nonstrict_ok: bool,
    /// Strict margin `ε*`; `None` when the nonstrict condition fails.
    pub strict_margin: Option<f64>,
    /// `sign(r)·√|r|` with `r` the minimal pencil eigenvalue.
    pub signed_margin: f64,
    pub argmin_omega: f64,
    pub min_eig: f64,
    pub argmin_eig_omega: f64,
    /// Grid points moved off the spectrum: `(requested, used)`.
    pub nudged: Vec<(f64, f64)>,
    /// Spacing of the final refinement pass around the margin minimizer.
    pub resolution: f64,
}

struct Sample {
    omega: f64,
    min_eig: f64,
    ratio: f64,
}

fn evaluate(plant: &LinearPlant, m: &CostWeight, omega: f64) -> Result<Sample> {
    let (phi, g) = popov_unchecked(plant, m, omega)?;
    let gg = g.adjoint() * &g + identity(g.ncols()) * c(PENCIL_REG);
    Ok(Sample {
        omega,
        min_eig: linmat::min_eig_hermitian(&phi),
        ratio: linmat::min_generalized_eig(&phi, &gg),
    })
}

fn placed(eigs: &[Complex64], omega: f64, nudged: &mut Vec<(f64, f64)>) -> Result<f64> {
    if check_pole(eigs, omega).is_ok() {
        return Ok(omega);
    }
    let moved = omega + POLE_NUDGE;
    check_pole(eigs, moved)?;
    nudged.push((omega, moved));
    Ok(moved)
}

fn evaluate_all(
    plant: &LinearPlant,
    m: &CostWeight,
    eigs: &[Complex64],
    omegas: &[f64],
    nudged: &mut Vec<(f64, f64)>,
) -> Result<Vec<Sample>> {
    let placed_omegas = omegas
        .iter()
        .map(|&w| placed(eigs, w, nudged))
        .collect::<Result<Vec<_>>>()?;
    par::map_slice(&placed_omegas, |&w| evaluate(plant, m, w))
        .into_iter()
        .collect()
}

/// Evaluates `λ_min(Φ)` and the strict-margin pencil on exactly `grid`.
pub fn fdc_scan(plant: &LinearPlant, m: &CostWeight, grid: &[f64]) -> Result<FrequencyScan> {
    scan_with(plant, m, grid, 0, 0)
}

/// Scan on the default logarithmic-symmetric grid with local refinement
/// around the minimizers.
pub fn fdc_scan_default(plant: &LinearPlant, m: &CostWeight, cfg: &GridConfig) -> Result<FrequencyScan> {
    scan_with(plant, m, &cfg.base_grid(), cfg.refine_passes, cfg.refine_points)
}

/// Strict margin `ε*`: the largest `ε ≥ 0` with `Φ(ω) − ε²G*G ⪰ 0` on the
/// grid; `None` if the nonstrict condition already fails.
pub fn strict_margin(plant: &LinearPlant, m: &CostWeight, grid: &[f64]) -> Result<Option<f64>> {
    Ok(fdc_scan(plant, m, grid)?.strict_margin)
}

fn argmin_by(samples: &[Sample], key: impl Fn(&Sample) -> f64) -> usize {
    let mut best = 0;
    for (i, s) in samples.iter().enumerate() {
        if key(s) < key(&samples[best]) {
            best = i;
        }
    }
    best
}

fn scan_with(
    plant: &LinearPlant,
    m: &CostWeight,
    grid: &[f64],
    passes: usize,
    per_pass: usize,
) -> Result<FrequencyScan> {
    m.check_plant(plant)?;
    if grid.is_empty() {
        return Err(Error::InvalidArgument("frequency grid is empty".into()));
    }
    if grid.iter().any(|w| !w.is_finite()) {
        return Err(Error::InvalidArgument("frequency grid has non-finite entries".into()));
    }
    let eigs = linmat::eigenvalues(&plant.a)?;
    let mut nudged = Vec::new();
    let mut sorted = grid.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sorted.dedup();
    let mut samples = evaluate_all(plant, m, &eigs, &sorted, &mut nudged)?;

    let mut resolution = if sorted.len() > 1 {
        sorted.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    } else {
        0.0
    };
    if passes > 0 && per_pass > 0 && samples.len() > 1 {
        let keys: [fn(&Sample) -> f64; 2] = [|s| s.ratio, |s| s.min_eig];
        for (which, key) in keys.iter().enumerate() {
            let mut local: Vec<Sample> = Vec::new();
            let mut lo_hi = {
                let i = argmin_by(&samples, key);
                let lo = samples[i.saturating_sub(1)].omega;
                let hi = samples[(i + 1).min(samples.len() - 1)].omega;
                (lo, hi)
            };
            for _ in 0..passes {
                let (lo, hi) = lo_hi;
                let step = (hi - lo) / (per_pass + 1) as f64;
                if !(step > 0.0) {
                    break;
                }
                let pts: Vec<f64> = (1..=per_pass).map(|k| lo + step * k as f64).collect();
                let mut new = evaluate_all(plant, m, &eigs, &pts, &mut nudged)?;
                local.append(&mut new);
                // best of bracket endpoints and local points
                let best = local
                    .iter()
                    .chain(samples.iter().filter(|s| s.omega == lo || s.omega == hi))
                    .min_by(|a, b| key(a).partial_cmp(&key(b)).unwrap())
                    .map(|s| s.omega)
                    .unwrap();
                lo_hi = ((best - step).max(lo), (best + step).min(hi));
                if which == 0 {
                    resolution = step;
                }
            }
            samples.append(&mut local);
        }
        samples.sort_by(|a, b| a.omega.partial_cmp(&b.omega).unwrap());
        samples.dedup_by(|a, b| a.omega == b.omega);
    }

    let i_ratio = argmin_by(&samples, |s| s.ratio);
    let i_eig = argmin_by(&samples, |s| s.min_eig);
    let min_eig = samples[i_eig].min_eig;
    let min_ratio = samples[i_ratio].ratio;
    let nonstrict_ok = samples.iter().all(|s| s.min_eig >= -NONSTRICT_TOL);
    let strict_margin = nonstrict_ok.then(|| min_ratio.max(0.0).sqrt());
    Ok(FrequencyScan {
        grid: samples.iter().map(|s| s.omega).collect(),
        min_eigs: samples.iter().map(|s| s.min_eig).collect(),
        ratios: samples.iter().map(|s| s.ratio).collect(),
        nonstrict_ok,
        strict_margin,
        signed_margin: min_ratio.signum() * min_ratio.abs().sqrt(),
        argmin_omega: samples[i_ratio].omega,
        min_eig,
        argmin_eig_omega: samples[i_eig].omega,
        nudged,
        resolution,
    })
}

impl FrequencyScan {
    /// `omega,min_eig` CSV for plotting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("omega,min_eig\n");
        for (w, e) in self.grid.iter().zip(&self.min_eigs) {
            out.push_str(&format!("{w:.17e},{e:.17e}\n"));
        }
        out
    }
}

/// Unit-norm eigenvector of `Φ(ω)` for its smallest eigenvalue, with that
/// eigenvalue; used to build violation witnesses.
pub fn most_violating_direction(
    plant: &LinearPlant,
    m: &CostWeight,
    omega: f64,
) -> Result<(f64, linmat::VectorData)> {
    let phi = popov(plant, m, omega)?;
    let (vals, vecs) = linmat::hermitian_eigen(&phi);
    Ok((vals[0], vecs.column(0).clone_owned()))
}
