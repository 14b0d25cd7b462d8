//! Deterministic algebraic Riccati equation
//! `A*P + PA + W − (B*P + V)* R⁻¹ (B*P + V) = 0`.

use log::debug;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frequency::CostWeight;
use crate::linmat::{self, MatrixData};
use crate::stability::{self, spectral_abscissa, LinearPlant};

/// Closed-loop abscissa below this counts as stabilizing.
pub const STABLE_EDGE: f64 = -1e-9;
/// Upper edge of the almost-stabilizing band.
pub const MARGINAL_EDGE: f64 = 1e-7;
/// Relative residual at which Newton–Kleinman stops.
pub const NK_TOL: f64 = 1e-11;
pub const NK_MAX_ITER: usize = 50;
/// Iteration cap when creeping towards an almost-stabilizing solution.
pub const NK_MARGINAL_MAX_ITER: usize = 200;
/// Relative residual required to accept an iterate as a solution.
pub const ACCEPT_TOL: f64 = 1e-8;
/// Hamiltonian eigenvalues with `|Re λ| ≤ AXIS_TOL·(1+‖H‖)` count as imaginary.
pub const AXIS_TOL: f64 = 1e-7;
/// `X₁` with reciprocal condition below this is not a graph basis.
pub const GRAPH_RCOND: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Stabilizing,
    AlmostStabilizing,
    NonStabilizing,
    NoSolution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiccatiReport {
    #[serde(with = "crate::serde_matrix::option")]
    pub p: Option<MatrixData>,
    /// Frobenius norm of the Riccati operator at `P`.
    pub residual: Option<f64>,
    /// Spectral abscissa of `A + BF`, `F = −R⁻¹(B*P + V)`.
    pub closed_loop_measure: Option<f64>,
    pub classification: Classification,
    #[serde(with = "crate::serde_matrix::option")]
    pub feedback: Option<MatrixData>,
    pub iterations: usize,
    /// Set when the Hamiltonian had eigenvalues within tolerance of the axis.
    pub marginal: bool,
}

impl RiccatiReport {
    fn no_solution(iterations: usize, marginal: bool) -> Self {
        Self {
            p: None,
            residual: None,
            closed_loop_measure: None,
            classification: Classification::NoSolution,
            feedback: None,
            iterations,
            marginal,
        }
    }
}

fn riccati_operator(plant: &LinearPlant, m: &CostWeight, p: &MatrixData, r_inv: &MatrixData) -> MatrixData {
    let k = plant.b.adjoint() * p + &m.v;
    plant.a.adjoint() * p + p * &plant.a + &m.w - k.adjoint() * r_inv * k
}

/// Frobenius norm of `A*P + PA + W − (B*P+V)*R⁻¹(B*P+V)`.
pub fn are_residual(plant: &LinearPlant, m: &CostWeight, p: &MatrixData) -> Result<f64> {
    m.check_plant(plant)?;
    if p.shape() != plant.a.shape() {
        return Err(Error::DimensionMismatch("P must be n×n".into()));
    }
    let r_inv = linmat::inverse(&m.r)?;
    Ok(linmat::fro(&riccati_operator(plant, m, p, &r_inv)))
}

/// `F = −R⁻¹(B*P + V)`.
pub fn optimal_feedback(plant: &LinearPlant, m: &CostWeight, p: &MatrixData) -> Result<MatrixData> {
    let r_inv = linmat::inverse(&m.r)?;
    Ok(-(r_inv * (plant.b.adjoint() * p + &m.v)))
}

pub(crate) fn classify(measure: f64) -> Classification {
    if measure < STABLE_EDGE {
        Classification::Stabilizing
    } else if measure <= MARGINAL_EDGE {
        Classification::AlmostStabilizing
    } else {
        Classification::NonStabilizing
    }
}

pub(crate) fn scale_of(p: &MatrixData) -> f64 {
    1.0 + linmat::fro(p)
}

struct NkState {
    p: MatrixData,
    f: MatrixData,
    residual: f64,
    measure: f64,
    iterations: usize,
}

/// Newton–Kleinman from a stabilizing `f0`. With `creep` set, keeps going
/// while the closed loop approaches the axis and returns the last good iterate
/// instead of failing on a singular Lyapunov solve.
fn nk_core(
    plant: &LinearPlant,
    m: &CostWeight,
    f0: &MatrixData,
    max_iter: usize,
    creep: bool,
) -> Result<NkState> {
    let r_inv = linmat::inverse(&m.r)?;
    let mut f = f0.clone();
    let mut best: Option<NkState> = None;
    let mut prev_residual = f64::INFINITY;
    let mut polished = false;
    for it in 1..=max_iter {
        let acl = plant.closed_loop(&f);
        let q = &m.w + m.v.adjoint() * &f + f.adjoint() * &m.v + f.adjoint() * &m.r * &f;
        let p = match linmat::solve_lyapunov(&acl, &q) {
            Ok(p) => p,
            Err(e) => {
                if creep {
                    if let Some(s) = best {
                        return Ok(s);
                    }
                }
                debug!("newton-kleinman: lyapunov solve failed at iteration {it}: {e}");
                let measure = spectral_abscissa(&acl)?;
                return Err(Error::LeftStabilizingSet { iteration: it, measure });
            }
        };
        let residual = linmat::fro(&riccati_operator(plant, m, &p, &r_inv));
        let f_next = -(&r_inv * (plant.b.adjoint() * &p + &m.v));
        let measure = spectral_abscissa(&plant.closed_loop(&f_next))?;
        debug!("newton-kleinman it={it} residual={residual:.3e} abscissa={measure:.3e}");
        let state = NkState {
            p,
            f: f_next.clone(),
            residual,
            measure,
            iterations: it,
        };
        let converged = residual <= NK_TOL * scale_of(&state.p);
        if measure >= 0.0 && !(creep && measure <= MARGINAL_EDGE) && !converged {
            if creep {
                if let Some(s) = best {
                    return Ok(s);
                }
            }
            return Err(Error::LeftStabilizingSet { iteration: it, measure });
        }
        let stalled = it > 2 && residual >= prev_residual && residual <= 1e-6 * scale_of(&state.p);
        if creep {
            // linear convergence towards the axis; stop at the roundoff floor
            if measure >= STABLE_EDGE || stalled {
                return Ok(best.filter(|b| b.residual < residual).unwrap_or(state));
            }
        } else if converged {
            // one extra step past the tolerance, keeping the better iterate
            if polished || residual <= 1e-14 * scale_of(&state.p) {
                return Ok(best.filter(|b| b.residual < residual).unwrap_or(state));
            }
            polished = true;
        } else if stalled {
            return Ok(best.filter(|b| b.residual < residual).unwrap_or(state));
        }
        prev_residual = residual;
        f = f_next;
        best = Some(state);
    }
    best.ok_or(Error::LeftStabilizingSet { iteration: max_iter, measure: f64::NAN })
}

fn report_from(state: NkState, marginal: bool) -> RiccatiReport {
    let accepted = state.residual <= ACCEPT_TOL * scale_of(&state.p);
    if !accepted {
        return RiccatiReport::no_solution(state.iterations, marginal);
    }
    RiccatiReport {
        classification: classify(state.measure),
        residual: Some(state.residual),
        closed_loop_measure: Some(state.measure),
        p: Some(state.p),
        feedback: Some(state.f),
        iterations: state.iterations,
        marginal,
    }
}

/// Newton–Kleinman refinement from a stabilizing feedback `f0`.
pub fn newton_kleinman(plant: &LinearPlant, m: &CostWeight, f0: &MatrixData) -> Result<RiccatiReport> {
    m.check_plant(plant)?;
    if f0.shape() != (plant.inputs(), plant.states()) {
        return Err(Error::DimensionMismatch("F0 must be m×n".into()));
    }
    let measure = spectral_abscissa(&plant.closed_loop(f0))?;
    if measure >= 0.0 {
        return Err(Error::NotStabilizingStart { measure });
    }
    let state = nk_core(plant, m, f0, NK_MAX_ITER, false)?;
    Ok(report_from(state, false))
}

/// Hamiltonian of the normalized problem.
pub fn hamiltonian(plant: &LinearPlant, m: &CostWeight) -> Result<MatrixData> {
    let n = plant.states();
    let r_inv = linmat::inverse(&m.r)?;
    let a_t = &plant.a - &plant.b * &r_inv * &m.v;
    let s = &plant.b * &r_inv * plant.b.adjoint();
    let q_t = &m.w - m.v.adjoint() * &r_inv * &m.v;
    let mut h = linmat::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(&a_t);
    h.view_mut((0, n), (n, n)).copy_from(&(-s));
    h.view_mut((n, 0), (n, n)).copy_from(&(-q_t));
    h.view_mut((n, n), (n, n)).copy_from(&(-a_t.adjoint()));
    Ok(h)
}

/// Hamiltonian stable-subspace solution, or why it is unavailable.
enum Subspace {
    Graph(MatrixData),
    NotGraph(f64),
    Marginal,
}

fn stable_subspace(plant: &LinearPlant, m: &CostWeight) -> Result<Subspace> {
    let n = plant.states();
    let h = hamiltonian(plant, m)?;
    let (lam, vecs) = linmat::eigen_decomposition(&h)?;
    let axis = AXIS_TOL * (1.0 + linmat::fro(&h));
    if lam.iter().any(|l| l.re.abs() <= axis) {
        return Ok(Subspace::Marginal);
    }
    let stable: Vec<usize> = (0..2 * n).filter(|&i| lam[i].re < 0.0).collect();
    if stable.len() != n {
        return Ok(Subspace::Marginal);
    }
    let x = vecs.select_columns(&stable);
    let x1 = x.rows(0, n).clone_owned();
    let x2 = x.rows(n, n).clone_owned();
    let sv = linmat::singular_values(&x1);
    let rcond = match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if hi > 0.0 => lo / hi,
        _ => 0.0,
    };
    if rcond < GRAPH_RCOND {
        return Ok(Subspace::NotGraph(rcond));
    }
    let x1_inv = linmat::inverse(&x1)?;
    Ok(Subspace::Graph(linmat::symmetrize(&(x2 * x1_inv))))
}

/// Solves the ARE: Hamiltonian eigenvector method, then Newton–Kleinman
/// refinement. Falls back to Newton–Kleinman from a Bass feedback when the
/// eigenvector basis is unusable, and creeps towards the almost-stabilizing
/// solution when the Hamiltonian has eigenvalues on the imaginary axis.
pub fn solve_are(plant: &LinearPlant, m: &CostWeight) -> Result<RiccatiReport> {
    m.check_plant(plant)?;
    let n = plant.states();
    if n == 0 {
        return Ok(RiccatiReport {
            p: Some(linmat::zeros(0, 0)),
            residual: Some(0.0),
            closed_loop_measure: Some(f64::NEG_INFINITY),
            classification: Classification::Stabilizing,
            feedback: Some(linmat::zeros(plant.inputs(), 0)),
            iterations: 0,
            marginal: false,
        });
    }
    let f_bass = stability::stabilize_det(plant)?;
    match stable_subspace(plant, m)? {
        Subspace::Graph(p0) => {
            let f0 = optimal_feedback(plant, m, &p0)?;
            let start_ok = spectral_abscissa(&plant.closed_loop(&f0))? < 0.0;
            let from_subspace = if start_ok {
                nk_core(plant, m, &f0, NK_MAX_ITER, false).ok()
            } else {
                None
            };
            let state = match from_subspace {
                Some(s) => s,
                None => match nk_core(plant, m, &f_bass, NK_MAX_ITER, false) {
                    Ok(s) => s,
                    Err(_) => return Ok(RiccatiReport::no_solution(0, false)),
                },
            };
            Ok(report_from(state, false))
        }
        Subspace::NotGraph(rcond) => match nk_core(plant, m, &f_bass, NK_MAX_ITER, false) {
            Ok(s) => Ok(report_from(s, false)),
            Err(_) => Err(Error::SubspaceNotGraph { rcond }),
        },
        Subspace::Marginal => match nk_core(plant, m, &f_bass, NK_MARGINAL_MAX_ITER, true) {
            Ok(s) => {
                let mut report = report_from(s, true);
                // axis eigenvalues of the Hamiltonian stay in the closed loop
                report.classification = match report.classification {
                    Classification::NonStabilizing => {
                        report = RiccatiReport::no_solution(report.iterations, true);
                        Classification::NoSolution
                    }
                    Classification::NoSolution => Classification::NoSolution,
                    _ => Classification::AlmostStabilizing,
                };
                Ok(report)
            }
            Err(_) => Ok(RiccatiReport::no_solution(0, true)),
        },
    }
}
