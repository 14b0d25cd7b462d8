//! Stochastic LQ pipeline for `dx = (Ax + Bu)dt + Nx dw`: Wonham and
//! indefinite stochastic Riccati equations, the bounded-real margin, the
//! input-to-state gain and the constructive coercivity decision.

use log::debug;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frequency::CostWeight;
use crate::linmat::{self, c, identity, MatrixData};
use crate::par;
use crate::riccati_det::{classify, scale_of, Classification, RiccatiReport, ACCEPT_TOL, NK_MAX_ITER, NK_TOL};
use crate::stability::{self, ms_abscissa, StochPlant};

/// Half-width of the band around unit gain where no verdict is issued.
pub const GAIN_TOL: f64 = 1e-6;
pub const GAIN_BRACKET: (f64, f64) = (1e-6, 1e6);
/// Relative bracket width at which gain bisection stops.
pub const GAIN_REL_TOL: f64 = 1e-6;
pub const MULTISTART_COUNT: usize = 20;
pub const MULTISTART_SEED: u64 = 0x005e_ed0f_57a7;

/// `W = W1 − W2` with `W2 = cI`, `c = max(0, −λ_min(W)) + 1 + extra`.
pub fn split_weight_with(w: &MatrixData, extra: f64) -> Result<(MatrixData, MatrixData, f64)> {
    let n = linmat::ensure_square(w)?;
    let w = linmat::symmetrize(w);
    let lmin = if n == 0 { 0.0 } else { linmat::min_eig_hermitian(&w) };
    let cst = (-lmin).max(0.0) + 1.0 + extra;
    let w2 = identity(n) * c(cst);
    Ok((&w + &w2, w2, cst))
}

/// `W = W1 − W2` with both parts positive definite.
pub fn split_weight(w: &MatrixData) -> Result<(MatrixData, MatrixData)> {
    split_weight_with(w, 0.0).map(|(w1, w2, _)| (w1, w2))
}

struct StochNk {
    p: MatrixData,
    f: MatrixData,
    residual: f64,
    measure: f64,
    iterations: usize,
}

fn stoch_operator(
    plant: &StochPlant,
    q: &MatrixData,
    r_inv: &MatrixData,
    p: &MatrixData,
) -> MatrixData {
    plant.a.adjoint() * p + p * &plant.a + plant.n.adjoint() * p * &plant.n + q
        - p * &plant.b * r_inv * plant.b.adjoint() * p
}

/// Newton iteration for `A*P + PA + N*PN + Q − PBR⁻¹B*P = 0` from an
/// MS-stabilizing `f0`; every iterate keeps `(A+BF, N)` MS-stable.
fn stoch_nk(plant: &StochPlant, q: &MatrixData, r: &MatrixData, f0: &MatrixData, max_iter: usize) -> Result<StochNk> {
    let r_inv = linmat::inverse(r)?;
    let mut f = f0.clone();
    let mut prev: Option<StochNk> = None;
    let mut polished = false;
    for it in 1..=max_iter {
        let acl = plant.closed_loop(&f);
        let qf = q + f.adjoint() * r * &f;
        let p = linmat::solve_glyap(&acl, &plant.n, &qf).map_err(|_| Error::LeftStabilizingSet {
            iteration: it,
            measure: ms_abscissa(&acl, &plant.n).unwrap_or(f64::NAN),
        })?;
        let residual = linmat::fro(&stoch_operator(plant, q, &r_inv, &p));
        let f_next = -(&r_inv * plant.b.adjoint() * &p);
        let measure = ms_abscissa(&plant.closed_loop(&f_next), &plant.n)?;
        let scale = scale_of(&p);
        let converged = residual <= NK_TOL * scale;
        if measure >= 0.0 && !converged {
            return Err(Error::LeftStabilizingSet { iteration: it, measure });
        }
        let state = StochNk {
            p,
            f: f_next.clone(),
            residual,
            measure,
            iterations: it,
        };
        if converged {
            // one extra step past the tolerance, keeping the better iterate
            if polished || residual <= 1e-14 * scale {
                return Ok(match prev {
                    Some(pr) if pr.residual < state.residual => pr,
                    _ => state,
                });
            }
            polished = true;
        } else if let Some(pr) = &prev {
            if it > 2 && residual >= pr.residual && residual <= 1e-6 * scale {
                return Ok(if pr.residual < residual { prev.unwrap() } else { state });
            }
        }
        f = f_next;
        prev = Some(state);
    }
    prev.ok_or(Error::LeftStabilizingSet { iteration: max_iter, measure: f64::NAN })
}

fn report_of(out: StochNk) -> RiccatiReport {
    let accepted = out.residual <= ACCEPT_TOL * scale_of(&out.p);
    if !accepted {
        return no_solution(out.iterations);
    }
    RiccatiReport {
        classification: classify(out.measure),
        residual: Some(out.residual),
        closed_loop_measure: Some(out.measure),
        p: Some(out.p),
        feedback: Some(out.f),
        iterations: out.iterations,
        marginal: false,
    }
}

fn no_solution(iterations: usize) -> RiccatiReport {
    RiccatiReport {
        p: None,
        residual: None,
        closed_loop_measure: None,
        classification: Classification::NoSolution,
        feedback: None,
        iterations,
        marginal: false,
    }
}

/// Wonham equation `A*P + PA + N*PN + W1 − PBB*P = 0` by Newton–Kleinman from
/// a given MS-stabilizing feedback.
pub fn solve_wonham_from(plant: &StochPlant, w1: &MatrixData, f0: &MatrixData) -> Result<RiccatiReport> {
    check_weight(plant, w1)?;
    let measure = ms_abscissa(&plant.closed_loop(f0), &plant.n)?;
    if measure >= 0.0 {
        return Err(Error::NotStabilizingStart { measure });
    }
    let out = stoch_nk(plant, w1, &identity(plant.inputs()), f0, NK_MAX_ITER)?;
    Ok(report_of(out))
}

/// Wonham equation with the start feedback taken from
/// [`stability::certify_stabilizable_stoch`].
pub fn solve_wonham(plant: &StochPlant, w1: &MatrixData) -> Result<RiccatiReport> {
    let f0 = stability::certify_stabilizable_stoch(plant)?.ok_or(Error::NotCertified)?;
    solve_wonham_from(plant, w1, &f0)
}

fn check_weight(plant: &StochPlant, w: &MatrixData) -> Result<()> {
    let n = plant.states();
    if w.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!(
            "W is {}x{}, expected {n}x{n}",
            w.nrows(),
            w.ncols()
        )));
    }
    linmat::ensure_finite(w, "W")
}

/// Continuation in the noise intensity: solves the Wonham equation for `σN`,
/// `σ` from 0 to 1, warm-starting each stage from the previous feedback.
/// Returns the final feedback `−B*P`, or `None` if continuation stalls.
pub fn wonham_homotopy(plant: &StochPlant, w1: &MatrixData) -> Option<MatrixData> {
    check_weight(plant, w1).ok()?;
    let mut f = stability::stabilize_det(&plant.deterministic()).ok()?;
    let mut sigma = 0.0;
    let mut step = 1.0;
    while step >= 1.0 / 1024.0 {
        let target = f64::min(sigma + step, 1.0);
        let staged = StochPlant {
            a: plant.a.clone(),
            n: &plant.n * c(target),
            b: plant.b.clone(),
        };
        let stable = ms_abscissa(&staged.closed_loop(&f), &staged.n).is_ok_and(|m| m < 0.0);
        let solved = stable
            .then(|| stoch_nk(&staged, w1, &identity(plant.inputs()), &f, NK_MAX_ITER).ok())
            .flatten();
        match solved {
            Some(out) => {
                debug!("wonham homotopy: reached sigma={target}");
                f = out.f;
                sigma = target;
                if sigma >= 1.0 {
                    return Some(f);
                }
                step *= 2.0;
            }
            None => step /= 2.0,
        }
    }
    None
}

/// Stabilizing solution of the bounded-real equation
/// `A*P + PA + N*PN − C*C − γ⁻²PBB*P = 0` (so `P ⪯ 0`), if any.
fn bounded_real_solution(a: &MatrixData, n: &MatrixData, b: &MatrixData, cmat: &MatrixData, gamma: f64) -> Option<MatrixData> {
    let plant = StochPlant {
        a: a.clone(),
        n: n.clone(),
        b: b.clone(),
    };
    let q = -(cmat.adjoint() * cmat);
    let r = identity(b.ncols()) * c(gamma * gamma);
    let f0 = linmat::zeros(b.ncols(), a.nrows());
    let out = stoch_nk(&plant, &q, &r, &f0, NK_MAX_ITER).ok()?;
    (out.residual <= ACCEPT_TOL * scale_of(&out.p) && out.measure < 0.0).then_some(out.p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainResult {
    /// Smallest feasible level found (an upper bound on the true gain).
    pub gain: f64,
    /// Set when even the top of the bracket was infeasible.
    pub bracket_exhausted: bool,
}

fn check_msstable(a: &MatrixData, n: &MatrixData, b: &MatrixData) -> Result<()> {
    let dim = linmat::ensure_square(a)?;
    if n.shape() != (dim, dim) || b.nrows() != dim {
        return Err(Error::DimensionMismatch("A, N, B sizes disagree".into()));
    }
    let measure = ms_abscissa(a, n)?;
    if measure >= 0.0 {
        return Err(Error::NotStabilizingStart { measure });
    }
    Ok(())
}

/// Mean-square L² gain of `u ↦ y = Cx` for `dx = (Ax + Bu)dt + Nx dw`, by
/// log-scale bisection on solvability of the bounded-real equation.
pub fn gain_bisection(a: &MatrixData, n: &MatrixData, b: &MatrixData, cmat: &MatrixData) -> Result<GainResult> {
    check_msstable(a, n, b)?;
    if cmat.ncols() != a.nrows() {
        return Err(Error::DimensionMismatch("C must have n columns".into()));
    }
    if linmat::fro(b) == 0.0 || linmat::fro(cmat) == 0.0 {
        return Ok(GainResult { gain: 0.0, bracket_exhausted: false });
    }
    let feasible = |g: f64| bounded_real_solution(a, n, b, cmat, g).is_some();
    let (mut lo, mut hi) = GAIN_BRACKET;
    if !feasible(hi) {
        return Ok(GainResult { gain: hi, bracket_exhausted: true });
    }
    if feasible(lo) {
        return Ok(GainResult { gain: lo, bracket_exhausted: false });
    }
    while hi / lo > 1.0 + GAIN_REL_TOL {
        let mid = (lo * hi).sqrt();
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(GainResult { gain: hi, bracket_exhausted: false })
}

/// Input-to-state gain `γ` with `‖x‖ ≤ γ‖u‖` (the `C = I` gain).
pub fn input_state_gain(a_cl: &MatrixData, n: &MatrixData, b: &MatrixData) -> Result<GainResult> {
    gain_bisection(a_cl, n, b, &identity(a_cl.nrows()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrlMargin {
    /// `δ = √(1 − g²)`.
    pub delta: f64,
    /// Gain of `u ↦ C2 x`.
    pub gain: f64,
    /// Stabilizing solution of `A*P + PA + N*PN − C2*C2 − PBB*P = 0`.
    #[serde(with = "crate::serde_matrix")]
    pub p2: MatrixData,
}

/// Bounded-real margin: feasible iff the gain `g` of `u ↦ C2 x` is below 1,
/// in which case `δ = √(1−g²)` and the unit-level solution `P2 ⪯ 0` are
/// returned.
pub fn brl_margin(a_cl: &MatrixData, n: &MatrixData, b: &MatrixData, c2: &MatrixData) -> Result<Option<BrlMargin>> {
    let g = gain_bisection(a_cl, n, b, c2)?;
    if g.bracket_exhausted || g.gain >= 1.0 {
        return Ok(None);
    }
    let Some(p2) = bounded_real_solution(a_cl, n, b, c2, 1.0) else {
        return Ok(None);
    };
    Ok(Some(BrlMargin {
        delta: (1.0 - g.gain * g.gain).sqrt(),
        gain: g.gain,
        p2,
    }))
}

/// Relative residual of `A*P + PA + N*PN + W − PBB*P` at `P`.
pub fn stoch_residual(plant: &StochPlant, w: &MatrixData, p: &MatrixData) -> f64 {
    let r = stoch_operator(plant, w, &identity(plant.inputs()), p);
    linmat::fro(&r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StochOptions {
    /// Added to the split constant; the verdict must not depend on it.
    pub split_extra: f64,
    pub starts: usize,
    pub seed: u64,
}

impl Default for StochOptions {
    fn default() -> Self {
        Self {
            split_extra: 0.0,
            starts: MULTISTART_COUNT,
            seed: MULTISTART_SEED,
        }
    }
}

struct Chain {
    f_cert: MatrixData,
    w1: MatrixData,
    w2: MatrixData,
    split_constant: f64,
    wonham: RiccatiReport,
    gamma: GainResult,
    brl_gain: Option<f64>,
    brl: Option<BrlMargin>,
}

/// Split, Wonham solve, closed loop, bounded-real margin and gain.
fn constructive_chain(plant: &StochPlant, w: &MatrixData, opts: &StochOptions) -> Result<Chain> {
    check_weight(plant, w)?;
    let f_cert = stability::certify_stabilizable_stoch(plant)?.ok_or(Error::NotCertified)?;
    let (w1, w2, split_constant) = split_weight_with(w, opts.split_extra)?;
    let wonham = solve_wonham_from(plant, &w1, &f_cert)?;
    let p1 = wonham.p.clone().ok_or(Error::NotCertified)?;
    let a_cl = &plant.a - &plant.b * plant.b.adjoint() * &p1;
    let gamma = input_state_gain(&a_cl, &plant.n, &plant.b)?;
    let c2 = w2
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidArgument("W2 not positive definite".into()))?
        .l()
        .adjoint();
    let g = gain_bisection(&a_cl, &plant.n, &plant.b, &c2)?;
    let brl = if !g.bracket_exhausted && g.gain < 1.0 {
        brl_margin(&a_cl, &plant.n, &plant.b, &c2)?
    } else {
        None
    };
    Ok(Chain {
        f_cert,
        w1,
        w2,
        split_constant,
        wonham,
        gamma,
        brl_gain: (!g.bracket_exhausted).then_some(g.gain),
        brl,
    })
}

/// Newton on `A*P + PA + N*PN + W − PBB*P = 0` from seeded MS-stabilizing
/// starts around the certificate; first stabilizing hit in start order.
fn multistart(plant: &StochPlant, w: &MatrixData, chain: &Chain, opts: &StochOptions) -> Option<RiccatiReport> {
    let m = plant.inputs();
    let n = plant.states();
    let base = chain.f_cert.clone();
    let wonham_f = chain.wonham.feedback.clone();
    let scale = 1.0 + linmat::fro(&base);
    let reports = par::map_indexed(opts.starts, |j| {
        let f0 = match j {
            0 => base.clone(),
            1 => wonham_f.clone()?,
            _ => {
                let mut rng = ChaCha8Rng::seed_from_u64(crate::sim::mix64(opts.seed, j as u64));
                let amp = scale * j as f64 / opts.starts as f64;
                let pert = MatrixData::from_fn(m, n, |_, _| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    c(amp * z)
                });
                &base + pert
            }
        };
        if ms_abscissa(&plant.closed_loop(&f0), &plant.n).ok()? >= 0.0 {
            return None;
        }
        let out = stoch_nk(plant, w, &identity(m), &f0, NK_MAX_ITER).ok()?;
        let rep = report_of(out);
        (rep.classification == Classification::Stabilizing).then_some(rep)
    });
    reports.into_iter().flatten().next()
}

/// Stabilizing solution of `A*P + PA + N*PN + W − PBB*P = 0`: the
/// constructive `P1 + P2` route refined by Newton, with a seeded multi-start
/// Newton search when the constructive route is infeasible.
pub fn solve_stoch_riccati(plant: &StochPlant, w: &MatrixData) -> Result<RiccatiReport> {
    solve_stoch_riccati_with(plant, w, &StochOptions::default())
}

pub fn solve_stoch_riccati_with(plant: &StochPlant, w: &MatrixData, opts: &StochOptions) -> Result<RiccatiReport> {
    let chain = constructive_chain(plant, w, opts)?;
    Ok(riccati_from_chain(plant, w, &chain, opts))
}

fn riccati_from_chain(plant: &StochPlant, w: &MatrixData, chain: &Chain, opts: &StochOptions) -> RiccatiReport {
    if let (Some(p1), Some(brl)) = (&chain.wonham.p, &chain.brl) {
        let p = p1 + &brl.p2;
        let f = -(plant.b.adjoint() * &p);
        if let Ok(out) = stoch_nk(plant, w, &identity(plant.inputs()), &f, NK_MAX_ITER) {
            let rep = report_of(out);
            if rep.classification == Classification::Stabilizing {
                return rep;
            }
        }
    }
    multistart(plant, w, chain, opts).unwrap_or_else(|| no_solution(0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StochVerdict {
    Coercive,
    NotCoercive,
    NotCertified,
}

/// Input change `u = L^{-*}u' − R⁻¹Vx` with `R = LL*` that reduces a
/// general weight to `V = 0`, `R = I`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputTransform {
    #[serde(with = "crate::serde_matrix")]
    pub l_inv_adj: MatrixData,
    #[serde(with = "crate::serde_matrix")]
    pub r_inv_v: MatrixData,
}

impl InputTransform {
    /// Feedback for the original input from one for the normalized input.
    pub fn map_feedback(&self, f_normalized: &MatrixData) -> MatrixData {
        &self.l_inv_adj * f_normalized - &self.r_inv_v
    }
}

/// Rewrites `(plant, M)` as an equivalent problem with `V = 0`, `R = I`.
pub fn normalize_input(plant: &StochPlant, m: &CostWeight) -> Result<(StochPlant, MatrixData, InputTransform)> {
    m.check_plant(&plant.deterministic())?;
    let l = m
        .r
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidArgument("R not positive definite".into()))?
        .l();
    let l_inv_adj = linmat::inverse(&l.adjoint())?;
    let r_inv = linmat::inverse(&m.r)?;
    let r_inv_v = &r_inv * &m.v;
    let a = &plant.a - &plant.b * &r_inv_v;
    let w = linmat::symmetrize(&(&m.w - m.v.adjoint() * &r_inv_v));
    let b = &plant.b * &l_inv_adj;
    Ok((StochPlant::new(a, plant.n.clone(), b)?, w, InputTransform { l_inv_adj, r_inv_v }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochCoercivityReport {
    #[serde(with = "crate::serde_matrix::option")]
    pub stabilizing_p: Option<MatrixData>,
    #[serde(with = "crate::serde_matrix")]
    pub p1: MatrixData,
    #[serde(with = "crate::serde_matrix::option")]
    pub p2: Option<MatrixData>,
    #[serde(with = "crate::serde_matrix")]
    pub w1: MatrixData,
    #[serde(with = "crate::serde_matrix")]
    pub w2: MatrixData,
    pub split_constant: f64,
    /// Gain of `u₂ ↦ C2 x` for the Wonham closed loop.
    pub brl_gain: Option<f64>,
    pub delta: Option<f64>,
    pub gamma: f64,
    pub gamma_bracket_exhausted: bool,
    /// `δ/γ`; infinite when the input does not reach the state.
    pub eps: Option<f64>,
    /// Relative residual of the stochastic Riccati equation at `P1 + P2`.
    pub composition_residual: Option<f64>,
    pub riccati: RiccatiReport,
    pub verdict: StochVerdict,
    pub input_transform: Option<InputTransform>,
}

/// Stochastic coercivity decision for `M = diag(W, I)`.
pub fn coercivity_stoch(plant: &StochPlant, w: &MatrixData) -> Result<StochCoercivityReport> {
    coercivity_stoch_with(plant, w, &StochOptions::default())
}

pub fn coercivity_stoch_with(plant: &StochPlant, w: &MatrixData, opts: &StochOptions) -> Result<StochCoercivityReport> {
    let chain = constructive_chain(plant, w, opts)?;
    let p1 = chain.wonham.p.clone().ok_or(Error::NotCertified)?;
    let composed = chain.brl.as_ref().map(|brl| &p1 + &brl.p2);
    let composition_residual = composed
        .as_ref()
        .map(|p| stoch_residual(plant, w, p) / scale_of(p));
    let g = chain.brl_gain;
    let coercive_gain = g.is_some_and(|g| g < 1.0 - GAIN_TOL) && chain.brl.is_some();
    let riccati = riccati_from_chain(plant, w, &chain, opts);
    let found = riccati.classification == Classification::Stabilizing;
    let verdict = if coercive_gain && found {
        StochVerdict::Coercive
    } else if g.is_none_or(|g| g > 1.0 + GAIN_TOL) && !found {
        StochVerdict::NotCoercive
    } else {
        StochVerdict::NotCertified
    };
    let delta = chain.brl.as_ref().map(|b| b.delta);
    let eps = delta.map(|d| if chain.gamma.gain > 0.0 { d / chain.gamma.gain } else { f64::INFINITY });
    Ok(StochCoercivityReport {
        stabilizing_p: found.then(|| riccati.p.clone()).flatten(),
        p1,
        p2: chain.brl.as_ref().map(|b| b.p2.clone()),
        w1: chain.w1,
        w2: chain.w2,
        split_constant: chain.split_constant,
        brl_gain: g,
        delta,
        gamma: chain.gamma.gain,
        gamma_bracket_exhausted: chain.gamma.bracket_exhausted,
        eps,
        composition_residual,
        riccati,
        verdict,
        input_transform: None,
    })
}

/// Stochastic coercivity decision for a general weight with `R ≻ 0`; the
/// report's matrices refer to the normalized input.
pub fn coercivity_stoch_weighted(plant: &StochPlant, m: &CostWeight) -> Result<StochCoercivityReport> {
    let (normalized, w, transform) = normalize_input(plant, m)?;
    let mut rep = coercivity_stoch(&normalized, &w)?;
    rep.input_transform = Some(transform);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linmat::{real, scalar, zeros};
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn sp(a: f64, n: f64, b: f64) -> StochPlant {
        StochPlant::new(scalar(a), scalar(n), scalar(b)).unwrap()
    }

    const GOLDEN: f64 = 0.618_033_988_749_894_9;

    #[test]
    fn split_examples() {
        let (w1, w2) = split_weight(&scalar(-1.0)).unwrap();
        assert_eq!((w1[(0, 0)].re, w2[(0, 0)].re), (1.0, 2.0));
        let (w1, w2) = split_weight(&scalar(3.0)).unwrap();
        assert_eq!((w1[(0, 0)].re, w2[(0, 0)].re), (4.0, 1.0));
        let (w1, w2) = split_weight(&zeros(2, 2)).unwrap();
        assert_eq!(w1, identity(2));
        assert_eq!(w2, identity(2));
    }

    #[test]
    fn wonham_examples() {
        let rep = solve_wonham(&sp(-1.0, 1.0, 1.0), &scalar(1.0)).unwrap();
        let p = rep.p.unwrap()[(0, 0)].re;
        assert_abs_diff_eq!(p, GOLDEN, epsilon = 1e-12);
        assert_abs_diff_eq!(rep.closed_loop_measure.unwrap(), 2.0 * (-1.0 - p) + 1.0, epsilon = 1e-10);
        let rep = solve_wonham(&sp(-1.0, 0.0, 1.0), &scalar(1.0)).unwrap();
        assert_abs_diff_eq!(rep.p.unwrap()[(0, 0)].re, 2f64.sqrt() - 1.0, epsilon = 1e-12);
        let rep = solve_wonham(&sp(-1.0, 1.0, 0.0), &scalar(1.0)).unwrap();
        assert_abs_diff_eq!(rep.p.unwrap()[(0, 0)].re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn homotopy_reaches_unstable_noise() {
        // A = 0.5 is deterministically unstable, noise adds 1 to the lift rate
        let plant = sp(0.5, 1.0, 1.0);
        let f = wonham_homotopy(&plant, &scalar(1.0)).unwrap();
        assert!(ms_abscissa(&plant.closed_loop(&f), &plant.n).unwrap() < 0.0);
    }

    #[test]
    fn stoch_riccati_examples() {
        let rep = solve_stoch_riccati(&sp(-1.0, 1.0, 1.0), &scalar(1.0)).unwrap();
        assert_eq!(rep.classification, Classification::Stabilizing);
        assert_abs_diff_eq!(rep.p.unwrap()[(0, 0)].re, GOLDEN, epsilon = 1e-10);
        let rep = solve_stoch_riccati(&sp(-1.0, 1.0, 1.0), &scalar(-5.0)).unwrap();
        assert_eq!(rep.classification, Classification::NoSolution);
        let rep = solve_stoch_riccati(&sp(-1.0, 1.0, 1.0), &scalar(0.0)).unwrap();
        assert_eq!(rep.classification, Classification::Stabilizing);
        assert!(rep.p.unwrap()[(0, 0)].norm() < 1e-10);
    }

    #[test]
    fn gain_examples() {
        let g = input_state_gain(&scalar(-1.0), &scalar(0.0), &scalar(1.0)).unwrap();
        assert_abs_diff_eq!(g.gain, 1.0, epsilon = 1e-5);
        let g = input_state_gain(&scalar(-1.0), &scalar(1.0), &scalar(1.0)).unwrap();
        assert_abs_diff_eq!(g.gain, 2.0, epsilon = 1e-5);
        let g = input_state_gain(&scalar(-1.0), &scalar(1.0), &scalar(0.0)).unwrap();
        assert_eq!(g.gain, 0.0);
    }

    #[test]
    fn brl_examples() {
        let d = (0.75f64).sqrt();
        let b = brl_margin(&scalar(-1.0), &scalar(0.0), &scalar(1.0), &scalar(0.5)).unwrap().unwrap();
        assert_abs_diff_eq!(b.delta, d, epsilon = 1e-5);
        let b = brl_margin(&scalar(-1.0), &scalar(1.0), &scalar(1.0), &scalar(0.25)).unwrap().unwrap();
        assert_abs_diff_eq!(b.delta, d, epsilon = 1e-5);
        assert!(b.p2[(0, 0)].re <= 0.0);
        assert!(brl_margin(&scalar(-1.0), &scalar(0.0), &scalar(1.0), &scalar(2.0)).unwrap().is_none());
        assert!(brl_margin(&scalar(0.0), &scalar(1.0), &scalar(1.0), &scalar(1.0)).is_err());
    }

    #[test]
    fn brl_feasibility_monotone_in_output_scale() {
        let a = real(2, 2, &[-1.0, 0.5, 0.0, -2.0]);
        let n = real(2, 2, &[0.3, 0.0, 0.2, 0.4]);
        let b = real(2, 1, &[1.0, 0.5]);
        let cm = real(1, 2, &[1.0, 1.0]);
        let mut was_feasible = true;
        for k in 1..30 {
            let s = 0.25 * k as f64;
            let feasible = brl_margin(&a, &n, &b, &(&cm * c(s))).unwrap().is_some();
            assert!(!feasible || was_feasible, "feasible at {s} after infeasible");
            was_feasible = feasible;
        }
        assert!(!was_feasible);
    }

    #[test]
    fn scalar_coercivity_chain() {
        let rep = coercivity_stoch(&sp(-1.0, 1.0, 1.0), &scalar(1.0)).unwrap();
        assert_eq!(rep.verdict, StochVerdict::Coercive);
        let p = rep.stabilizing_p.as_ref().unwrap()[(0, 0)].re;
        assert_abs_diff_eq!(p, GOLDEN, epsilon = 1e-10);
        assert!(rep.composition_residual.unwrap() <= 1e-8);
        let composed = &rep.p1 + rep.p2.as_ref().unwrap();
        assert!(linmat::max_abs_diff(&composed, rep.stabilizing_p.as_ref().unwrap()) < 1e-8);
        // W1 = 2, W2 = 1: P1 = 1, closed loop −2, gains 2/3, δ² = 5/9
        assert_abs_diff_eq!(rep.p1[(0, 0)].re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rep.gamma, 2.0 / 3.0, epsilon = 1e-5);
        let delta = rep.delta.unwrap();
        assert_abs_diff_eq!(delta * delta, 5.0 / 9.0, epsilon = 1e-5);
        // α = 1/(1−δ²) = 9/4 from the gain bound
        assert_abs_diff_eq!(delta * delta, 1.0 - 1.0 / 2.25, epsilon = 1e-5);
        let eps = rep.eps.unwrap();
        assert!(eps > 0.0 && eps <= delta / rep.gamma + 1e-9);
        assert_abs_diff_eq!(eps * eps, 1.25, epsilon = 1e-4);

        let rep = coercivity_stoch(&sp(-1.0, 1.0, 1.0), &scalar(-5.0)).unwrap();
        assert_eq!(rep.verdict, StochVerdict::NotCoercive);
    }

    #[test]
    fn definite_weight_reduces_to_wonham() {
        let plant = StochPlant::new(
            real(2, 2, &[0.2, 1.0, -1.0, -0.5]),
            real(2, 2, &[0.3, 0.0, 0.1, 0.3]),
            real(2, 1, &[0.0, 1.0]),
        )
        .unwrap();
        let w = real(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let rep = coercivity_stoch(&plant, &w).unwrap();
        assert_eq!(rep.verdict, StochVerdict::Coercive);
        let direct = solve_wonham(&plant, &w).unwrap().p.unwrap();
        assert!(linmat::max_abs_diff(rep.stabilizing_p.as_ref().unwrap(), &direct) < 1e-8);
        let composed = &rep.p1 + rep.p2.as_ref().unwrap();
        assert!(linmat::max_abs_diff(&composed, &direct) < 1e-8);
    }

    #[test]
    fn split_constant_does_not_change_answer() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..8 {
            let n = rng.random_range(1..=2);
            let a = MatrixData::from_fn(n, n, |_, _| c(rng.random_range(-1.5..0.5)));
            let nn = MatrixData::from_fn(n, n, |_, _| c(rng.random_range(-0.5..0.5)));
            let b = MatrixData::from_fn(n, 1, |_, _| c(rng.random_range(-1.0..1.0)));
            let w = linmat::symmetrize(&MatrixData::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0))));
            let plant = StochPlant::new(a, nn, b).unwrap();
            let Ok(base) = coercivity_stoch(&plant, &w) else { continue };
            let opts = StochOptions { split_extra: 1.0, ..Default::default() };
            let shifted = coercivity_stoch_with(&plant, &w, &opts).unwrap();
            assert_eq!(base.verdict, shifted.verdict);
            if let (Some(p), Some(q)) = (&base.stabilizing_p, &shifted.stabilizing_p) {
                assert!(linmat::max_abs_diff(p, q) < 1e-6);
            }
        }
    }

    #[test]
    fn weighted_normalization_matches_riccati() {
        let plant = StochPlant::new(
            real(2, 2, &[-1.0, 0.4, 0.0, -0.7]),
            real(2, 2, &[0.3, 0.0, 0.0, 0.2]),
            real(2, 1, &[0.5, 1.0]),
        )
        .unwrap();
        let m = CostWeight::new(real(2, 2, &[1.0, 0.0, 0.0, 0.5]), real(1, 2, &[0.2, -0.1]), scalar(2.0)).unwrap();
        let rep = coercivity_stoch_weighted(&plant, &m).unwrap();
        assert_eq!(rep.verdict, StochVerdict::Coercive);
        let p = rep.stabilizing_p.clone().unwrap();
        // general-weight equation A*P+PA+N*PN+W − (B*P+V)*R⁻¹(B*P+V) = 0
        let k = plant.b.adjoint() * &p + &m.v;
        let res = plant.a.adjoint() * &p + &p * &plant.a + plant.n.adjoint() * &p * &plant.n + &m.w
            - k.adjoint() * linmat::inverse(&m.r).unwrap() * &k;
        assert!(linmat::fro(&res) < 1e-9);
        let t = rep.input_transform.unwrap();
        let f = t.map_feedback(&-(t.l_inv_adj.adjoint() * plant.b.adjoint() * &p));
        let expected = -(linmat::inverse(&m.r).unwrap() * k);
        assert!(linmat::max_abs_diff(&f, &expected) < 1e-9);
    }
}
