//! Time-domain coercivity oracle, resonance witness, Gramian steering and the
//! Fourier coefficient relation.
//!
//! Inputs are parametrized as `u = Fx + v` with `v` piecewise constant on
//! `K` stages of length `dt`; `F = 0` for clearly Hurwitz `A`, otherwise the
//! LQR gain of a positive definite shift of `M`. After the horizon `v = 0` and the remaining cost and state
//! energy are added exactly through Lyapunov equations, so every discretized
//! input is admissible.

use log::debug;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frequency::{self, CostWeight};
use crate::linmat::{self, c, identity, zeros, MatrixData, VectorData};
use crate::par;
use crate::riccati_det::{self, Classification};
use crate::stability::{self, spectral_abscissa, LinearPlant};

/// Verdict tolerance on the signed margin `ε̂`.
pub const COERCIVITY_TOL: f64 = 1e-6;
/// Regularization added to the state form.
pub const STATE_REG: f64 = 1e-12;
/// `A` with abscissa below this is used without stabilizing feedback.
const HURWITZ_MARGIN: f64 = -0.1;
const HORIZON_START: f64 = 10.0;
const HORIZON_CAP: f64 = 160.0;
const DECAY_TARGET: f64 = 1e-8;
/// Largest `|ε̂²|` searched.
const LAMBDA_CAP: f64 = 1e12;
pub const CYCLE_CAP: usize = 10_000;
/// Simulation steps per period of the oscillatory segment.
const STEPS_PER_CYCLE: usize = 64;
/// Subintervals for the steering segment, per 4 time units.
const STEER_INTERVALS: usize = 2000;
const STEER_WINDOWS: [f64; 6] = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0];

/// One-stage model of the sampled problem.
#[derive(Debug, Clone)]
pub struct StageModel {
    pub dt: f64,
    /// Feedback in `u = Fx + v`.
    pub f: MatrixData,
    pub phi: MatrixData,
    pub gamma: MatrixData,
    /// Stage cost weight on `[x_j; v_j]`.
    pub l: MatrixData,
    /// Stage state-energy weight on `[x_j; v_j]`.
    pub s: MatrixData,
    /// Exact cost after the horizon, `x_K* P x_K`.
    pub p_tail: MatrixData,
    /// Exact state energy after the horizon.
    pub y_tail: MatrixData,
}

impl StageModel {
    fn n(&self) -> usize {
        self.phi.nrows()
    }

    fn m(&self) -> usize {
        self.gamma.ncols()
    }
}

/// Moderate-gain stabilizing feedback: the LQR gain for `M` shifted to be
/// positive definite, falling back to a Bass feedback.
pub fn lqr_feedback(plant: &LinearPlant, m: &CostWeight) -> Result<MatrixData> {
    let shift = (1.0 - linmat::min_eig_hermitian(&m.assembled())).max(0.0);
    let shifted = CostWeight::new(
        &m.w + identity(plant.states()) * c(shift),
        m.v.clone(),
        &m.r + identity(plant.inputs()) * c(shift),
    )?;
    let rep = riccati_det::solve_are(plant, &shifted)?;
    match (rep.classification, rep.feedback) {
        (Classification::Stabilizing, Some(f)) => Ok(f),
        _ => stability::stabilize_det(plant),
    }
}

/// Feedback used for the input parametrization.
pub fn parametrizing_feedback(plant: &LinearPlant, m: &CostWeight) -> Result<MatrixData> {
    if spectral_abscissa(&plant.a)? <= HURWITZ_MARGIN {
        Ok(zeros(plant.inputs(), plant.states()))
    } else {
        lqr_feedback(plant, m)
    }
}

fn blocks(tl: &MatrixData, tr: &MatrixData, bl: &MatrixData, br: &MatrixData) -> MatrixData {
    let (r1, c1) = tl.shape();
    let (r2, c2) = br.shape();
    let mut out = zeros(r1 + r2, c1 + c2);
    out.view_mut((0, 0), (r1, c1)).copy_from(tl);
    out.view_mut((0, c1), (r1, c2)).copy_from(tr);
    out.view_mut((r1, 0), (r2, c1)).copy_from(bl);
    out.view_mut((r1, c1), (r2, c2)).copy_from(br);
    out
}

/// `[I; F]* M [I; F]`.
fn closed_loop_weight(m: &CostWeight, f: &MatrixData) -> MatrixData {
    linmat::symmetrize(&(&m.w + m.v.adjoint() * f + f.adjoint() * &m.v + f.adjoint() * &m.r * f))
}

pub fn stage_model(plant: &LinearPlant, m: &CostWeight, dt: f64) -> Result<StageModel> {
    m.check_plant(plant)?;
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be > 0, got {dt}")));
    }
    let n = plant.states();
    let k = plant.inputs();
    let f = parametrizing_feedback(plant, m)?;
    let acl = plant.closed_loop(&f);
    let aug = linmat::matexp(&blocks(&acl, &plant.b, &zeros(k, n), &zeros(k, k)), dt);
    let phi = aug.view((0, 0), (n, n)).clone_owned();
    let gamma = aug.view((0, n), (n, k)).clone_owned();
    let ef = blocks(&identity(n), &zeros(n, k), &f, &identity(k));
    let mf = ef.adjoint() * m.assembled() * &ef;
    let t = blocks(&phi, &gamma, &zeros(k, n), &identity(k));
    let half = c(0.5 * dt);
    let l = linmat::symmetrize(&((&mf + t.adjoint() * &mf * &t) * half));
    let e = blocks(&identity(n), &zeros(n, k), &zeros(k, n), &zeros(k, k));
    let s = linmat::symmetrize(&((&e + t.adjoint() * &e * &t) * half));
    let p_tail = linmat::solve_lyapunov(&acl, &closed_loop_weight(m, &f))?;
    let y_tail = linmat::solve_lyapunov(&acl, &identity(n))?;
    Ok(StageModel {
        dt,
        f,
        phi,
        gamma,
        l,
        s,
        p_tail,
        y_tail,
    })
}

/// Horizon with `‖e^{(A+BF)T}‖ ≤ 1e−8`, doubling from 10 up to 160.
pub fn auto_horizon(plant: &LinearPlant, m: &CostWeight) -> Result<f64> {
    let acl = plant.closed_loop(&parametrizing_feedback(plant, m)?);
    let mut t = HORIZON_START;
    while t < HORIZON_CAP && linmat::norm2(&linmat::matexp(&acl, t)) > DECAY_TARGET {
        t *= 2.0;
    }
    Ok(t.min(HORIZON_CAP))
}

fn stage_count(horizon: f64, dt: f64) -> Result<usize> {
    if !(horizon >= 10.0 * dt) {
        return Err(Error::InvalidArgument(format!("horizon {horizon} shorter than 10 dt")));
    }
    let k = (horizon / dt).round();
    if ((k * dt) - horizon).abs() > 1e-9 * horizon {
        return Err(Error::InvalidArgument(format!("horizon {horizon} is not a multiple of dt {dt}")));
    }
    Ok(k as usize)
}

/// Explicit quadratic forms of the sampled problem over the stacked inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizedCost {
    pub horizon: f64,
    pub dt: f64,
    pub stages: usize,
    /// `v ↦ J(0, u)`.
    #[serde(with = "crate::serde_matrix")]
    pub hessian: MatrixData,
    /// `v ↦ ‖x(·, 0, u)‖²_{L²}`.
    #[serde(with = "crate::serde_matrix")]
    pub state_map_gram: MatrixData,
    #[serde(with = "crate::serde_matrix")]
    pub feedback: MatrixData,
}

/// Dense form `Σ_j z_j* L z_j + x_K* Ω x_K`, `z_j = [x_j; v_j]`, `x_0 = 0`.
fn dense_form(model: &StageModel, l: &MatrixData, terminal: &MatrixData, stages: usize) -> MatrixData {
    let n = model.n();
    let m = model.m();
    let lxx = l.view((0, 0), (n, n)).clone_owned();
    let lxv = l.view((0, n), (n, m)).clone_owned();
    let lvv = l.view((n, n), (m, m)).clone_owned();
    // Λ_k = Σ_{j>k} (Φ^{j−1−k})* Ω_j Φ^{j−1−k}, with Ω_K terminal and Ω_j = Lxx
    let mut lam = vec![zeros(n, n); stages];
    if stages > 0 {
        lam[stages - 1] = terminal.clone();
        for k in (0..stages - 1).rev() {
            lam[k] = &lxx + model.phi.adjoint() * &lam[k + 1] * &model.phi;
        }
    }
    let phi_adj = model.phi.adjoint();
    let gamma_adj = model.gamma.adjoint();
    // column k: blocks (i, k) for i ≤ k
    let columns = par::map_indexed(stages, |k| {
        let mut col = Vec::with_capacity(k + 1);
        let mut y = &lam[k] * &model.gamma;
        let mut cross = lxv.clone();
        col.push(&gamma_adj * &y + &lvv);
        for _ in 1..=k {
            y = &phi_adj * &y;
            let block = &gamma_adj * (&y + &cross);
            cross = &phi_adj * &cross;
            col.push(block);
        }
        col
    });
    let mut h = zeros(stages * m, stages * m);
    for (k, col) in columns.into_iter().enumerate() {
        for (d, block) in col.into_iter().enumerate() {
            let i = k - d;
            h.view_mut((i * m, k * m), (m, m)).copy_from(&block);
            if d > 0 {
                h.view_mut((k * m, i * m), (m, m)).copy_from(&block.adjoint());
            }
        }
    }
    linmat::symmetrize(&h)
}

/// Explicit Hessian and state Gram matrix on `K = T/dt` stages.
pub fn discretize_cost(plant: &LinearPlant, m: &CostWeight, horizon: f64, dt: f64) -> Result<DiscretizedCost> {
    let stages = stage_count(horizon, dt)?;
    let model = stage_model(plant, m, dt)?;
    Ok(DiscretizedCost {
        horizon,
        dt,
        stages,
        hessian: dense_form(&model, &model.l, &model.p_tail, stages),
        state_map_gram: dense_form(&model, &model.s, &model.y_tail, stages),
        feedback: model.f,
    })
}

impl DiscretizedCost {
    /// `λ_min(H, G + 1e−12 I)`.
    pub fn min_ratio(&self) -> f64 {
        let k = self.state_map_gram.nrows();
        linmat::min_generalized_eig(&self.hessian, &(&self.state_map_gram + identity(k) * c(STATE_REG)))
    }
}

enum Pivot {
    Pass,
    /// Pivot at `stage` is not positive; `w` is its most negative direction
    /// and `gains[j]` the optimal `v_j = −gains[j]·x_j` for `j > stage`.
    Fail {
        stage: usize,
        w: VectorData,
        gains: Vec<Option<MatrixData>>,
    },
}

/// Backward Riccati recursion deciding `H − λ(G + 1e−12 I) ≻ 0`; equivalent
/// to a block LDL* factorization of the Hessian in reverse stage order.
fn pivot_test(model: &StageModel, stages: usize, lambda: f64, keep_gains: bool) -> Pivot {
    let n = model.n();
    let m = model.m();
    let mut reg = zeros(n + m, n + m);
    reg.view_mut((n, n), (m, m)).copy_from(&identity(m));
    let l_lam = &model.l - &model.s * c(lambda) - reg * c(lambda * STATE_REG);
    let mut tm = zeros(n, n + m);
    tm.view_mut((0, 0), (n, n)).copy_from(&model.phi);
    tm.view_mut((0, n), (n, m)).copy_from(&model.gamma);
    let tm_adj = tm.adjoint();
    let mut p = &model.p_tail - &model.y_tail * c(lambda);
    let mut gains: Vec<Option<MatrixData>> = if keep_gains { vec![None; stages] } else { Vec::new() };
    for j in (0..stages).rev() {
        let z = &l_lam + &tm_adj * &p * &tm;
        let zvv = linmat::symmetrize(&z.view((n, n), (m, m)).clone_owned());
        let zvx = z.view((n, 0), (m, n)).clone_owned();
        let Some(chol) = linmat::cholesky_pd(&zvv) else {
            let (_, vecs) = linmat::hermitian_eigen(&zvv);
            return Pivot::Fail {
                stage: j,
                w: vecs.column(0).clone_owned(),
                gains,
            };
        };
        let gain = linmat::cholesky_solve(&chol, &zvx);
        let zxx = z.view((0, 0), (n, n)).clone_owned();
        p = linmat::symmetrize(&(zxx - zvx.adjoint() * &gain));
        if keep_gains {
            gains[j] = Some(gain);
        }
    }
    Pivot::Pass
}

/// Sampled input `v` of the parametrization, `K × m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteWitness {
    pub dt: f64,
    pub horizon: f64,
    /// Row `j` is `v_j`; the applied input is `u = Fx + v`.
    #[serde(with = "crate::serde_matrix")]
    pub v: MatrixData,
    #[serde(with = "crate::serde_matrix")]
    pub feedback: MatrixData,
    /// `J(0, u)` for the unit-L²-norm `v`.
    pub total_cost: f64,
    /// `‖x(·, 0, u)‖²_{L²}`.
    pub state_energy: f64,
}

impl DiscreteWitness {
    /// `t,Re v_1,Im v_1,...` CSV.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for i in 0..self.v.ncols() {
            out.push_str(&format!(",re_u{},im_u{}", i + 1, i + 1));
        }
        out.push('\n');
        for j in 0..self.v.nrows() {
            out.push_str(&format!("{:.17e}", j as f64 * self.dt));
            for i in 0..self.v.ncols() {
                out.push_str(&format!(",{:.17e},{:.17e}", self.v[(j, i)].re, self.v[(j, i)].im));
            }
            out.push('\n');
        }
        out
    }
}

/// Evaluates both forms at the stacked input by forward propagation.
pub fn evaluate_forms(model: &StageModel, v: &MatrixData) -> (f64, f64) {
    let n = model.n();
    let m = model.m();
    let mut x = VectorData::zeros(n);
    let mut j_cost = 0.0;
    let mut g = 0.0;
    for j in 0..v.nrows() {
        let vj = v.row(j).transpose();
        let mut z = VectorData::zeros(n + m);
        z.rows_mut(0, n).copy_from(&x);
        z.rows_mut(n, m).copy_from(&vj);
        j_cost += z.dotc(&(&model.l * &z)).re;
        g += z.dotc(&(&model.s * &z)).re;
        x = &model.phi * &x + &model.gamma * &vj;
    }
    j_cost += x.dotc(&(&model.p_tail * &x)).re;
    g += x.dotc(&(&model.y_tail * &x)).re;
    (j_cost, g)
}

fn build_witness(model: &StageModel, stages: usize, horizon: f64, stage: usize, w: VectorData, gains: &[Option<MatrixData>]) -> DiscreteWitness {
    let n = model.n();
    let m = model.m();
    let mut v = zeros(stages, m);
    v.set_row(stage, &w.transpose());
    let mut x = &model.gamma * &w;
    for j in stage + 1..stages {
        let gain = gains[j].as_ref().expect("gain stored past failing stage");
        let vj = -(gain * &x);
        v.set_row(j, &vj.transpose());
        x = &model.phi * &x + &model.gamma * &vj;
    }
    debug_assert_eq!(x.len(), n);
    let norm = (v.iter().map(|z| z.norm_sqr()).sum::<f64>() * model.dt).sqrt();
    if norm > 0.0 {
        v /= c(norm);
    }
    let (total_cost, state_energy) = evaluate_forms(model, &v);
    DiscreteWitness {
        dt: model.dt,
        horizon,
        v,
        feedback: model.f.clone(),
        total_cost,
        state_energy,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleSettings {
    pub horizon: f64,
    pub dt: f64,
    pub stages: usize,
    pub tol: f64,
    /// Relative accuracy of `ε̂²`.
    pub lambda_rel_tol: f64,
    /// Whether a stabilizing feedback parametrizes the inputs.
    pub feedback_parametrized: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum CoercivityCertificate {
    Coercive { eps_hat: f64, settings: OracleSettings },
    NonstrictOnly { eps_hat: f64, settings: OracleSettings },
    NotCoercive { eps_hat: f64, witness: DiscreteWitness, settings: OracleSettings },
}

impl CoercivityCertificate {
    /// Signed margin `sign(ε̂²)·√|ε̂²|`.
    pub fn eps_hat(&self) -> f64 {
        match self {
            Self::Coercive { eps_hat, .. } | Self::NonstrictOnly { eps_hat, .. } | Self::NotCoercive { eps_hat, .. } => *eps_hat,
        }
    }

    /// Whether the nonstrict condition `J(0,u) ≥ 0` holds on the sampled class.
    pub fn nonstrict_holds(&self) -> bool {
        !matches!(self, Self::NotCoercive { .. })
    }

    pub fn settings(&self) -> &OracleSettings {
        match self {
            Self::Coercive { settings, .. } | Self::NonstrictOnly { settings, .. } | Self::NotCoercive { settings, .. } => settings,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoercivityOptions {
    pub tol: f64,
    pub lambda_rel_tol: f64,
}

impl Default for CoercivityOptions {
    fn default() -> Self {
        Self {
            tol: COERCIVITY_TOL,
            lambda_rel_tol: 1e-6,
        }
    }
}

fn signed_sqrt(x: f64) -> f64 {
    x.signum() * x.abs().sqrt()
}

/// Largest `λ` in `(lo, hi)` with a passing pivot test; `lo` passes, `hi` fails.
fn bisect(model: &StageModel, stages: usize, mut lo: f64, mut hi: f64, rel: f64) -> (f64, f64) {
    while hi - lo > rel * lo.abs().max(hi.abs()) + 1e-300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if matches!(pivot_test(model, stages, mid, false), Pivot::Pass) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

/// Decides the sampled coercivity condition: `ε̂²` is the largest `λ` with
/// `H − λ(G + 1e−12 I) ⪰ 0`, found by bisection on a pivot test.
pub fn check_coercivity(plant: &LinearPlant, m: &CostWeight, horizon: f64, dt: f64) -> Result<CoercivityCertificate> {
    check_coercivity_with(plant, m, horizon, dt, &CoercivityOptions::default())
}

/// As [`check_coercivity`] with the horizon from [`auto_horizon`].
pub fn check_coercivity_auto(plant: &LinearPlant, m: &CostWeight, dt: f64) -> Result<CoercivityCertificate> {
    let horizon = auto_horizon(plant, m)?;
    let horizon = (horizon / dt).round() * dt;
    check_coercivity(plant, m, horizon, dt)
}

pub fn check_coercivity_with(
    plant: &LinearPlant,
    m: &CostWeight,
    horizon: f64,
    dt: f64,
    opts: &CoercivityOptions,
) -> Result<CoercivityCertificate> {
    let stages = stage_count(horizon, dt)?;
    let model = stage_model(plant, m, dt)?;
    let settings = OracleSettings {
        horizon,
        dt,
        stages,
        tol: opts.tol,
        lambda_rel_tol: opts.lambda_rel_tol,
        feedback_parametrized: linmat::fro(&model.f) > 0.0,
    };
    let t2 = opts.tol * opts.tol;
    let passes = |lam: f64| matches!(pivot_test(&model, stages, lam, false), Pivot::Pass);
    let rel = opts.lambda_rel_tol;
    if passes(t2) {
        let mut hi = 1.0f64.max(2.0 * t2);
        let mut lo = t2;
        while passes(hi) {
            lo = hi;
            hi *= 4.0;
            if hi > LAMBDA_CAP {
                return Ok(CoercivityCertificate::Coercive {
                    eps_hat: LAMBDA_CAP.sqrt(),
                    settings,
                });
            }
        }
        let (lo, _) = bisect(&model, stages, lo, hi, rel);
        debug!("coercive: eps_hat^2 = {lo}");
        return Ok(CoercivityCertificate::Coercive {
            eps_hat: lo.sqrt(),
            settings,
        });
    }
    if passes(-t2) {
        let (lo, _) = bisect(&model, stages, -t2, t2, rel);
        return Ok(CoercivityCertificate::NonstrictOnly {
            eps_hat: signed_sqrt(lo),
            settings,
        });
    }
    let mut hi = -t2;
    let mut lo = -1.0f64.max(2.0 * t2);
    while !passes(lo) {
        hi = lo;
        lo *= 4.0;
        if lo < -LAMBDA_CAP {
            break;
        }
    }
    let (lo, hi) = if lo < -LAMBDA_CAP { (lo, hi) } else { bisect(&model, stages, lo, hi, rel) };
    let witness = match pivot_test(&model, stages, hi, true) {
        Pivot::Fail { stage, w, gains } => build_witness(&model, stages, horizon, stage, w, &gains),
        Pivot::Pass => unreachable!("upper bracket passes pivot test"),
    };
    Ok(CoercivityCertificate::NotCoercive {
        eps_hat: signed_sqrt(lo.max(-LAMBDA_CAP)),
        witness,
        settings,
    })
}

/// Sampled control with its state trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteeringControl {
    pub tau: f64,
    pub times: Vec<f64>,
    #[serde(with = "crate::serde_matrix")]
    pub u: MatrixData,
    #[serde(with = "crate::serde_matrix")]
    pub x: MatrixData,
    /// `‖u‖²_{L²}` from the Gramian quadratic form.
    pub energy: f64,
    /// `‖u‖²_{L²}` integrated from the samples.
    pub sampled_energy: f64,
    pub endpoint_error: f64,
}

/// Minimum-energy control moving `x0` to `x1` over `[0, τ]`:
/// `u(t) = B*e^{A*(τ−t)}P_τ†(x1 − e^{Aτ}x0)`.
fn transfer_control(plant: &LinearPlant, x0: &VectorData, x1: &VectorData, tau: f64, intervals: usize) -> Result<SteeringControl> {
    let n = plant.states();
    let k = plant.inputs();
    if x0.len() != n || x1.len() != n {
        return Err(Error::DimensionMismatch("target must have n entries".into()));
    }
    let gram = linmat::finite_gramian(&plant.a, &plant.b, tau)?;
    let gram_pinv = linmat::pinv(&gram);
    let eat = linmat::matexp(&plant.a, tau);
    let z = x1 - &eat * x0;
    let projected = &gram * (&gram_pinv * &z);
    let residual = (&projected - &z).norm();
    let scale = x0.norm().max(x1.norm());
    if residual > 1e-8 * scale.max(f64::MIN_POSITIVE) && residual > 0.0 {
        return Err(Error::TargetUnreachable { residual });
    }
    let coef = &gram_pinv * &z;
    let energy = z.dotc(&coef).re;
    // [ẋ; ẏ] = [[A, BB*], [0, −A*]] [x; y], u = B*y, y(t) = e^{A*(τ−t)}coef
    let bb = &plant.b * plant.b.adjoint();
    let gen = blocks(&plant.a, &bb, &zeros(n, n), &(-plant.a.adjoint()));
    let h = tau / intervals as f64;
    let step = linmat::matexp(&gen, h);
    let mut state = VectorData::zeros(2 * n);
    state.rows_mut(0, n).copy_from(x0);
    state.rows_mut(n, n).copy_from(&(linmat::matexp(&plant.a.adjoint(), tau) * &coef));
    let mut u = zeros(intervals + 1, k);
    let mut x = zeros(intervals + 1, n);
    let mut times = Vec::with_capacity(intervals + 1);
    for j in 0..=intervals {
        times.push(j as f64 * h);
        let uj = plant.b.adjoint() * state.rows(n, n);
        u.set_row(j, &uj.transpose());
        x.set_row(j, &state.rows(0, n).transpose());
        if j < intervals {
            state = &step * &state;
        }
    }
    let norms: Vec<f64> = (0..=intervals).map(|j| u.row(j).iter().map(|v| v.norm_sqr()).sum()).collect();
    let sampled_energy = simpson(&norms, h);
    let endpoint_error = (x.row(intervals).transpose() - x1).norm();
    Ok(SteeringControl {
        tau,
        times,
        u,
        x,
        energy,
        sampled_energy,
        endpoint_error,
    })
}

/// Composite Simpson rule on equally spaced samples (odd count), falling
/// back to the trapezoid rule for the last interval of an even count.
fn simpson(y: &[f64], h: f64) -> f64 {
    let n = y.len();
    if n < 2 {
        return 0.0;
    }
    let pairs = (n - 1) / 2;
    let mut s = 0.0;
    for p in 0..pairs {
        s += y[2 * p] + 4.0 * y[2 * p + 1] + y[2 * p + 2];
    }
    let mut total = s * h / 3.0;
    if (n - 1) % 2 == 1 {
        total += 0.5 * h * (y[n - 2] + y[n - 1]);
    }
    total
}

/// Minimum-energy control steering `x_target` to 0 over `[0, τ]`:
/// `u(t) = −B*e^{A*(τ−t)}P_τ†e^{Aτ}x_target`.
pub fn steering_control(plant: &LinearPlant, x_target: &VectorData, tau: f64) -> Result<SteeringControl> {
    transfer_control(plant, x_target, &VectorData::zeros(plant.states()), tau, STEER_INTERVALS)
}

/// Three-segment input driving `J(0, u) < 0` at a violating frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessControl {
    pub omega: f64,
    #[serde(with = "crate::serde_matrix::vector")]
    pub eta: VectorData,
    #[serde(with = "crate::serde_matrix::vector")]
    pub xi: VectorData,
    pub ramp_cycles: usize,
    /// Length `τ` of the steering segment.
    pub steer_window: f64,
    /// End of the oscillatory segment.
    pub t_k: f64,
    pub u0_times: Vec<f64>,
    /// Steering segment on `[0, τ]`, one row per time.
    #[serde(with = "crate::serde_matrix")]
    pub u0_samples: MatrixData,
    /// `u∞ = F x` on `]T_k, ∞[`.
    #[serde(with = "crate::serde_matrix")]
    pub tail_feedback: MatrixData,
    pub uinf_times: Vec<f64>,
    #[serde(with = "crate::serde_matrix")]
    pub uinf_samples: MatrixData,
    pub steer_cost: f64,
    pub middle_cost: f64,
    /// `middle_cost / (T_k − τ)`.
    pub middle_rate: f64,
    /// `η*Φ(ω)η`.
    pub popov_value: f64,
    pub tail_cost: f64,
    pub total_cost: f64,
    /// `‖x(τ) − ξ‖` after steering.
    pub steer_error: f64,
    /// Whether the middle segment was simulated (Hurwitz `A`) or evaluated
    /// on the closed-form resonance solution.
    pub middle_simulated: bool,
}

fn segment_end(omega: f64, k: usize, tau: f64) -> f64 {
    if omega == 0.0 {
        k as f64 + tau
    } else {
        2.0 * std::f64::consts::PI * k as f64 / omega.abs() + tau
    }
}

struct Segments {
    tau: f64,
    steer: SteeringControl,
    steer_cost: f64,
    tail_feedback: MatrixData,
    p_tail: MatrixData,
    acl: MatrixData,
}

fn running_cost(m: &CostWeight, x: &VectorData, u: &VectorData) -> f64 {
    m.form(x, u)
}

#[allow(clippy::too_many_arguments)]
fn middle_cost(plant: &LinearPlant, m: &CostWeight, omega: f64, eta: &VectorData, xi: &VectorData, x1: &VectorData, len: f64, simulate: bool) -> Result<f64> {
    let n = plant.states();
    let steps = if omega == 0.0 {
        (len * STEPS_PER_CYCLE as f64).ceil() as usize
    } else {
        (len * omega.abs() / (2.0 * std::f64::consts::PI) * STEPS_PER_CYCLE as f64).round() as usize
    }
    .max(1);
    let h = len / steps as f64;
    let rot = Complex64::new(0.0, omega * h).exp();
    let mut vals = Vec::with_capacity(steps + 1);
    if simulate {
        let eah = linmat::matexp(&plant.a, h);
        let resolvent = linmat::inverse(&(identity(n) * Complex64::new(0.0, omega) - &plant.a))?;
        let forcing = resolvent * (identity(n) * rot - &eah) * &plant.b * eta;
        let mut x = x1.clone();
        let mut phase = linmat::ONE;
        for j in 0..=steps {
            let u = eta * phase;
            vals.push(running_cost(m, &x, &u));
            if j < steps {
                x = &eah * &x + &forcing * phase;
                phase *= rot;
            }
        }
    } else {
        let mut phase = linmat::ONE;
        for _ in 0..=steps {
            vals.push(running_cost(m, &(xi * phase), &(eta * phase)));
            phase *= rot;
        }
    }
    Ok(par::pairwise_sum(&vals.windows(2).map(|w| 0.5 * h * (w[0] + w[1])).collect::<Vec<_>>()))
}

/// Builds the proof's witness input at a violating `(ω, η)`: steer from 0
/// to `ξ = (iωI − A)⁻¹Bη` on `[0, τ]`, apply `ηe^{iω(t−τ)}` on `[τ, T_k]`,
/// then stabilize. The window `τ ∈ {1, 2, …, 32}` with the cheapest
/// steering cost is used. Doubles the cycle count until the cost is negative.
pub fn resonance_witness(plant: &LinearPlant, m: &CostWeight, omega: f64, eta: &VectorData, k: usize) -> Result<WitnessControl> {
    m.check_plant(plant)?;
    if eta.len() != plant.inputs() {
        return Err(Error::DimensionMismatch("eta must have m entries".into()));
    }
    let phi = frequency::popov(plant, m, omega)?;
    let popov_value = eta.dotc(&(&phi * eta)).re;
    if popov_value >= 0.0 {
        return Err(Error::EtaNotViolating { value: popov_value });
    }
    let xi = frequency::transfer(plant, omega)? * eta;
    let tail_feedback = lqr_feedback(plant, m)?;
    let acl = plant.closed_loop(&tail_feedback);
    let p_tail = linmat::solve_lyapunov(&acl, &closed_loop_weight(m, &tail_feedback))?;
    let mut best: Option<(f64, f64, SteeringControl)> = None;
    for tau in STEER_WINDOWS {
        let intervals = STEER_INTERVALS * (tau as usize).div_ceil(4);
        let steer = match transfer_control(plant, &VectorData::zeros(plant.states()), &xi, tau, intervals) {
            Ok(s) if s.endpoint_error <= 1e-6 * xi.norm().max(1.0) => s,
            Ok(_) | Err(Error::TargetUnreachable { .. }) if best.is_some() => continue,
            Ok(s) => return Err(Error::TargetUnreachable { residual: s.endpoint_error }),
            Err(e) => return Err(e),
        };
        let h = tau / intervals as f64;
        let vals: Vec<f64> = (0..=intervals)
            .map(|j| running_cost(m, &steer.x.row(j).transpose(), &steer.u.row(j).transpose()))
            .collect();
        let cost = simpson(&vals, h);
        if best.as_ref().is_none_or(|b| cost < b.1) {
            best = Some((tau, cost, steer));
        }
    }
    let (tau, steer_cost, steer) = best.expect("at least one steering window");
    let seg = Segments {
        tau,
        steer_cost,
        steer,
        tail_feedback,
        p_tail,
        acl,
    };
    let x1 = seg.steer.x.row(seg.steer.x.nrows() - 1).transpose();
    let steer_error = (&x1 - &xi).norm();
    let simulate = spectral_abscissa(&plant.a)? < 0.0;
    let mut cycles = k.max(1);
    loop {
        let w = witness_at(plant, m, omega, eta, &xi, &x1, cycles, &seg, simulate, popov_value, steer_error)?;
        if w.total_cost < 0.0 {
            return Ok(w);
        }
        if cycles >= CYCLE_CAP {
            return Err(Error::CycleCapExceeded { cycles, cost: w.total_cost });
        }
        cycles = (cycles * 2).min(CYCLE_CAP);
    }
}

#[allow(clippy::too_many_arguments)]
fn witness_at(
    plant: &LinearPlant,
    m: &CostWeight,
    omega: f64,
    eta: &VectorData,
    xi: &VectorData,
    x1: &VectorData,
    cycles: usize,
    seg: &Segments,
    simulate: bool,
    popov_value: f64,
    steer_error: f64,
) -> Result<WitnessControl> {
    let t_k = segment_end(omega, cycles, seg.tau);
    let middle = middle_cost(plant, m, omega, eta, xi, x1, t_k - seg.tau, simulate)?;
    let x_end = xi * Complex64::new(0.0, omega * (t_k - seg.tau)).exp();
    let tail_cost = x_end.dotc(&(&seg.p_tail * &x_end)).re;
    let uinf_times: Vec<f64> = (0..=200).map(|j| t_k + 0.05 * j as f64).collect();
    let mut uinf = zeros(uinf_times.len(), plant.inputs());
    for (j, t) in uinf_times.iter().enumerate() {
        let x = linmat::matexp(&seg.acl, t - t_k) * &x_end;
        uinf.set_row(j, &(&seg.tail_feedback * x).transpose());
    }
    Ok(WitnessControl {
        omega,
        eta: eta.clone(),
        xi: xi.clone(),
        ramp_cycles: cycles,
        steer_window: seg.tau,
        t_k,
        u0_times: seg.steer.times.clone(),
        u0_samples: seg.steer.u.clone(),
        tail_feedback: seg.tail_feedback.clone(),
        uinf_times,
        uinf_samples: uinf,
        steer_cost: seg.steer_cost,
        middle_cost: middle,
        middle_rate: middle / (t_k - seg.tau),
        popov_value,
        tail_cost,
        total_cost: seg.steer_cost + middle + tail_cost,
        steer_error,
        middle_simulated: simulate,
    })
}

impl WitnessControl {
    /// Samples of the full input, `t,re_u1,im_u1,...`; the oscillatory
    /// segment is sampled at 16 points per unit time, at most 20000 rows.
    pub fn to_csv(&self) -> String {
        let m = self.eta.len();
        let mut out = String::from("t");
        for i in 0..m {
            out.push_str(&format!(",re_u{},im_u{}", i + 1, i + 1));
        }
        out.push('\n');
        let mut row = |t: f64, u: &VectorData| {
            out.push_str(&format!("{t:.17e}"));
            for z in u.iter() {
                out.push_str(&format!(",{:.17e},{:.17e}", z.re, z.im));
            }
            out.push('\n');
        };
        for (j, t) in self.u0_times.iter().enumerate() {
            if *t < self.steer_window {
                row(*t, &self.u0_samples.row(j).transpose());
            }
        }
        let len = self.t_k - self.steer_window;
        let count = ((len * 16.0).ceil() as usize).clamp(1, 20_000);
        for j in 0..=count {
            let t = self.steer_window + len * j as f64 / count as f64;
            row(t, &(&self.eta * Complex64::new(0.0, self.omega * (t - self.steer_window)).exp()));
        }
        for (j, t) in self.uinf_times.iter().enumerate().skip(1) {
            row(*t, &self.uinf_samples.row(j).transpose());
        }
        out
    }
}

/// Largest violation of `(iω_k I − A)ξ_k = Bη_k` over the retained Fourier
/// modes `|k| ≤ K/4` of a `T`-periodic sampled pair. Samples are at
/// `t_j = jT/K`, `j = 0..=K`, one row per time.
pub fn fourier_check(plant: &LinearPlant, input_samples: &MatrixData, state_samples: &MatrixData, horizon: f64) -> Result<f64> {
    let n = plant.states();
    let m = plant.inputs();
    let rows = state_samples.nrows();
    if input_samples.nrows() != rows || state_samples.ncols() != n || input_samples.ncols() != m {
        return Err(Error::DimensionMismatch("samples must be (K+1)×n and (K+1)×m".into()));
    }
    if rows < 5 {
        return Err(Error::InvalidArgument("need at least 5 samples".into()));
    }
    let gap = (state_samples.row(0) - state_samples.row(rows - 1)).norm();
    if gap > 1e-6 {
        return Err(Error::NonPeriodic { gap });
    }
    let kk = rows - 1;
    let kmax = (kk / 4) as i64;
    let modes: Vec<i64> = (-kmax..=kmax).collect();
    let residuals = par::map_slice(&modes, |&k| {
        let mut xi = VectorData::zeros(n);
        let mut eta = VectorData::zeros(m);
        for j in 0..kk {
            let ang = -2.0 * std::f64::consts::PI * (k as f64) * (j as f64) / kk as f64;
            let e = Complex64::new(0.0, ang).exp();
            xi += state_samples.row(j).transpose() * e;
            eta += input_samples.row(j).transpose() * e;
        }
        xi /= c(kk as f64);
        eta /= c(kk as f64);
        let wk = 2.0 * std::f64::consts::PI * k as f64 / horizon;
        ((identity(n) * Complex64::new(0.0, wk) - &plant.a) * xi - &plant.b * eta).norm()
    });
    Ok(residuals.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frequency::{fdc_scan_default, strict_margin, GridConfig};
    use crate::linmat::{real, scalar};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn splant(a: f64, b: f64) -> LinearPlant {
        LinearPlant::new(scalar(a), scalar(b)).unwrap()
    }

    fn scost(w: f64, v: f64, r: f64) -> CostWeight {
        CostWeight::new(scalar(w), scalar(v), scalar(r)).unwrap()
    }

    fn one() -> VectorData {
        VectorData::from_element(1, linmat::ONE)
    }

    #[test]
    fn dense_forms_are_hermitian_and_psd() {
        let d = discretize_cost(&splant(-1.0, 1.0), &CostWeight::identity(1, 1), 2.0, 0.05).unwrap();
        assert_eq!(d.stages, 40);
        assert!(linmat::max_abs_diff(&d.hessian, &d.hessian.adjoint()) < 1e-12);
        assert!(linmat::min_eig_hermitian(&d.state_map_gram) >= -1e-12);
        assert!(linmat::min_eig_hermitian(&d.hessian) > 0.0);
    }

    #[test]
    fn dense_examples() {
        let d = discretize_cost(&splant(-1.0, 0.0), &CostWeight::identity(1, 1), 1.0, 0.1).unwrap();
        assert!(linmat::max_abs_diff(&d.hessian, &(identity(10) * c(0.1))) < 1e-14);
        assert!(linmat::fro(&d.state_map_gram) == 0.0);
        let d = discretize_cost(&splant(-1.0, 1.0), &scost(0.0, 0.0, 1.0), 1.0, 0.1).unwrap();
        assert!(linmat::max_abs_diff(&d.hessian, &(identity(10) * c(0.1))) < 1e-14);
    }

    #[test]
    fn dense_matches_forward_evaluation() {
        let plant = LinearPlant::new(real(2, 2, &[0.3, 1.0, -1.0, -0.4]), real(2, 1, &[0.0, 1.0])).unwrap();
        let m = CostWeight::new(real(2, 2, &[1.0, 0.2, 0.2, -0.5]), real(1, 2, &[0.1, 0.3]), scalar(1.5)).unwrap();
        let d = discretize_cost(&plant, &m, 1.5, 0.05).unwrap();
        assert!(linmat::fro(&d.feedback) > 0.0);
        let model = stage_model(&plant, &m, 0.05).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let v = MatrixData::from_fn(d.stages, 1, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let stacked = VectorData::from_iterator(d.stages, v.iter().cloned());
        let (j, g) = evaluate_forms(&model, &v);
        assert_abs_diff_eq!(stacked.dotc(&(&d.hessian * &stacked)).re, j, epsilon = 1e-10 * (1.0 + j.abs()));
        assert_abs_diff_eq!(stacked.dotc(&(&d.state_map_gram * &stacked)).re, g, epsilon = 1e-10 * (1.0 + g.abs()));
    }

    #[test]
    fn recursion_matches_dense_eigenvalue() {
        let cases = [
            (splant(-1.0, 1.0), CostWeight::identity(1, 1)),
            (splant(-1.0, 1.0), scost(-2.0, 0.0, 1.0)),
            (splant(0.5, 1.0), scost(-0.3, 0.2, 1.0)),
        ];
        for (plant, m) in cases {
            let d = discretize_cost(&plant, &m, 3.0, 0.05).unwrap();
            let dense = d.min_ratio();
            let opts = CoercivityOptions { lambda_rel_tol: 1e-10, ..Default::default() };
            let cert = check_coercivity_with(&plant, &m, 3.0, 0.05, &opts).unwrap();
            let rec = cert.eps_hat().signum() * cert.eps_hat().powi(2);
            assert_abs_diff_eq!(rec, dense, epsilon = 1e-7 * (1.0 + dense.abs()));
        }
    }

    #[test]
    fn coercivity_examples() {
        let plant = splant(-1.0, 1.0);
        let cert = check_coercivity(&plant, &CostWeight::identity(1, 1), 20.0, 0.01).unwrap();
        assert!(matches!(cert, CoercivityCertificate::Coercive { .. }));
        assert!((cert.eps_hat() - 2f64.sqrt()).abs() < 0.02 * 2f64.sqrt());

        let cert = check_coercivity(&plant, &scost(0.0, 0.0, 1.0), 20.0, 0.01).unwrap();
        assert!(matches!(cert, CoercivityCertificate::Coercive { .. }));
        assert!((cert.eps_hat() - 1.0).abs() < 0.02);

        match check_coercivity(&plant, &scost(-2.0, 0.0, 1.0), 20.0, 0.01).unwrap() {
            CoercivityCertificate::NotCoercive { witness, eps_hat, .. } => {
                assert!(eps_hat < 0.0);
                assert!(witness.total_cost < 0.0);
                let l2: f64 = witness.v.iter().map(|z| z.norm_sqr()).sum::<f64>() * witness.dt;
                assert_abs_diff_eq!(l2, 1.0, epsilon = 1e-12);
            }
            other => panic!("expected not coercive, got {other:?}"),
        }
    }

    #[test]
    fn unstable_plant_uses_feedback() {
        // A=1, B=1, W=−0.9: Φ(ω) = 1 − 0.9/(1+ω²) > 0
        let cert = check_coercivity(&splant(1.0, 1.0), &scost(-0.9, 0.0, 1.0), 80.0, 0.02).unwrap();
        assert!(cert.settings().feedback_parametrized);
        assert!(matches!(cert, CoercivityCertificate::Coercive { .. }));
        let eps = strict_margin(&splant(1.0, 1.0), &scost(-0.9, 0.0, 1.0), &GridConfig::default().base_grid())
            .unwrap()
            .unwrap();
        assert!((cert.eps_hat() - eps).abs() < 0.05 * eps, "{} vs {eps}", cert.eps_hat());
    }

    #[test]
    fn refinement_approaches_strict_margin() {
        let plant = splant(-1.0, 1.0);
        let m = CostWeight::identity(1, 1);
        let target = 2f64.sqrt();
        let mut errs = Vec::new();
        let (mut dt, mut t) = (0.1, 2.5);
        for _ in 0..4 {
            let e = check_coercivity(&plant, &m, t, dt).unwrap().eps_hat();
            errs.push((e - target).abs());
            dt /= 2.0;
            t *= 2.0;
        }
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    }

    #[test]
    fn pair_condition_when_coercive() {
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let mut seen = 0;
        for _ in 0..20 {
            let n = rng.random_range(1..=3);
            let a = MatrixData::from_fn(n, n, |_, _| c(rng.random_range(-2.0..1.0)));
            let b = MatrixData::from_fn(n, 1, |_, _| c(rng.random_range(-1.0..1.0)));
            let w = linmat::symmetrize(&MatrixData::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.5))));
            let plant = LinearPlant::new(a, b).unwrap();
            if !stability::is_stabilizable_det(&plant).unwrap() {
                continue;
            }
            let m = CostWeight::state_weight(w, 1).unwrap();
            let cert = check_coercivity(&plant, &m, 20.0, 0.05).unwrap();
            // outside the discretization band
            if cert.eps_hat() < 0.2 {
                continue;
            }
            seen += 1;
            for _ in 0..50 {
                let om = rng.random_range(-30.0..30.0);
                let eta = VectorData::from_element(1, Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
                let Ok(g) = frequency::transfer(&plant, om) else { continue };
                let xi = g * &eta;
                assert!(m.form(&xi, &eta) >= -1e-8);
            }
        }
        assert!(seen > 3);
    }

    #[test]
    fn steering_examples() {
        let plant = splant(0.0, 1.0);
        let s = steering_control(&plant, &one(), 1.0).unwrap();
        assert!(s.u.iter().all(|z| (z.re + 1.0).abs() < 1e-10 && z.im.abs() < 1e-12));
        assert!(s.endpoint_error < 1e-6);
        assert_abs_diff_eq!(s.energy, 1.0, epsilon = 1e-10);
        let s = steering_control(&plant, &VectorData::zeros(1), 1.0).unwrap();
        assert!(s.u.iter().all(|z| z.norm() == 0.0));
        let p2 = LinearPlant::new(zeros(2, 2), real(2, 1, &[1.0, 0.0])).unwrap();
        let target = VectorData::from_vec(vec![c(0.0), c(1.0)]);
        assert!(matches!(steering_control(&p2, &target, 1.0), Err(Error::TargetUnreachable { .. })));
    }

    #[test]
    fn steering_energy_scales_quadratically() {
        let plant = LinearPlant::new(real(2, 2, &[0.0, 1.0, -2.0, -0.5]), real(2, 1, &[0.0, 1.0])).unwrap();
        let x = VectorData::from_vec(vec![c(1.0), c(-0.5)]);
        let s = steering_control(&plant, &x, 1.0).unwrap();
        assert!(s.endpoint_error <= 1e-6 * x.norm().max(1.0));
        assert!((s.sampled_energy - s.energy).abs() <= 1e-6 * s.energy);
        let s3 = steering_control(&plant, &(&x * c(3.0)), 1.0).unwrap();
        assert!((s3.energy - 9.0 * s.energy).abs() <= 1e-9 * s3.energy);
    }

    #[test]
    fn witness_examples() {
        let plant = splant(-1.0, 1.0);
        let m = scost(-2.0, 0.0, 1.0);
        let w = resonance_witness(&plant, &m, 0.0, &one(), 1).unwrap();
        assert!(w.total_cost < 0.0);
        assert_abs_diff_eq!(w.popov_value, -1.0, epsilon = 1e-12);
        assert!((w.middle_rate - w.popov_value).abs() < 0.05);
        let w2 = resonance_witness(&plant, &m, 0.0, &one(), 2 * w.ramp_cycles).unwrap();
        let slope = (w2.total_cost - w.total_cost) / (w2.t_k - w.t_k);
        assert!((slope - w.popov_value).abs() <= 0.05 * w.popov_value.abs());
        assert!(matches!(
            resonance_witness(&plant, &CostWeight::identity(1, 1), 0.0, &one(), 1),
            Err(Error::EtaNotViolating { .. })
        ));
    }

    #[test]
    fn witness_oscillatory() {
        // lightly damped oscillator with a negative state weight near resonance
        let plant = LinearPlant::new(real(2, 2, &[0.0, 1.0, -4.0, -0.2]), real(2, 1, &[0.0, 1.0])).unwrap();
        let m = CostWeight::new(real(2, 2, &[-0.5, 0.0, 0.0, 0.0]), zeros(1, 2), identity(1)).unwrap();
        let scan = fdc_scan_default(&plant, &m, &GridConfig { points: 256, ..Default::default() }).unwrap();
        assert!(!scan.nonstrict_ok);
        let om = scan.argmin_eig_omega;
        let (_, eta) = frequency::most_violating_direction(&plant, &m, om).unwrap();
        let w = resonance_witness(&plant, &m, om, &eta, 1).unwrap();
        assert!(w.total_cost < 0.0);
        assert!(w.middle_simulated);
        assert!((w.middle_rate - w.popov_value).abs() <= 0.05 * w.popov_value.abs());
        let csv = w.to_csv();
        assert!(csv.starts_with("t,re_u1,im_u1\n"));
    }

    #[test]
    fn fourier_examples() {
        let plant = LinearPlant::new(real(2, 2, &[-1.0, 2.0, -2.0, -0.5]), real(2, 1, &[0.0, 1.0])).unwrap();
        let z = fourier_check(&plant, &zeros(65, 1), &zeros(65, 2), 3.0).unwrap();
        assert_eq!(z, 0.0);
        let t = 3.0;
        let om = 2.0 * std::f64::consts::PI / t;
        let eta = VectorData::from_element(1, Complex64::new(0.7, -0.2));
        let xi = frequency::transfer(&plant, om).unwrap() * &eta;
        let kk = 256;
        let mut us = zeros(kk + 1, 1);
        let mut xs = zeros(kk + 1, 2);
        for j in 0..=kk {
            let e = Complex64::new(0.0, om * t * j as f64 / kk as f64).exp();
            us.set_row(j, &(&eta * e).transpose());
            xs.set_row(j, &(&xi * e).transpose());
        }
        assert!(fourier_check(&plant, &us, &xs, t).unwrap() <= 1e-6);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut noise = MatrixData::from_fn(kk + 1, 2, |_, _| c(rng.random_range(-1.0..1.0)));
        let first = noise.row(0).clone_owned();
        noise.set_row(kk, &first);
        assert!(fourier_check(&plant, &us, &noise, t).unwrap() > 1e-2);
        let mut open = xs.clone();
        open[(kk, 0)] += c(1.0);
        assert!(matches!(fourier_check(&plant, &us, &open, t), Err(Error::NonPeriodic { .. })));
    }

    #[test]
    fn auto_horizon_bounds() {
        assert_eq!(auto_horizon(&splant(-5.0, 1.0), &CostWeight::identity(1, 1)).unwrap(), 10.0);
        let t = auto_horizon(&splant(-0.2, 0.0), &CostWeight::identity(1, 1)).unwrap();
        assert!((80.0..=160.0).contains(&t));
    }
}
