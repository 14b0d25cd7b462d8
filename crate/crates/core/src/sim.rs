//! Euler–Maruyama Monte Carlo for `dx = (A + BF)x dt + Nx dw` with a scalar
//! Wiener process. Complex systems are simulated in realified form.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linmat::{self, MatrixData, VectorData};
use crate::par;
use crate::stability::{ms_abscissa, StochPlant};

/// Paths per reduction block; blocks are fixed by path index so the
/// partition never depends on the thread count.
const BLOCK: usize = 64;
/// Squared norm treated as divergence.
const EXPLODE: f64 = 1e200;

/// SplitMix64 finalizer applied to `seed + (idx+1)·φ`; per-path substream seed.
pub fn mix64(seed: u64, idx: u64) -> u64 {
    let mut z = seed.wrapping_add(idx.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub horizon: f64,
    pub paths: usize,
    pub seed: u64,
    /// Pair path `2k+1` with the negated increments of path `2k`.
    pub antithetic: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            horizon: 10.0,
            paths: 10_000,
            seed: 1,
            antithetic: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidArgument(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.horizon >= 100.0 * self.dt) || !self.horizon.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "horizon must be at least 100 dt, got {}",
                self.horizon
            )));
        }
        if self.paths < 2 {
            return Err(Error::InvalidArgument("need at least 2 paths".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }
}

/// Real row-major system for the stepping loop.
struct RealSystem {
    dim: usize,
    /// `I + (A+BF)dt`.
    drift: Vec<f64>,
    noise: Vec<f64>,
    /// Running-cost weight, if any.
    weight: Option<Vec<f64>>,
}

fn is_real(m: &MatrixData) -> bool {
    m.iter().all(|z| z.im == 0.0)
}

/// `[[Re, −Im], [Im, Re]]` in row-major order, or just `Re` when `real`.
fn realify(m: &MatrixData, real: bool) -> Vec<f64> {
    let (r, cdim) = m.shape();
    if real {
        return (0..r).flat_map(|i| (0..cdim).map(move |j| m[(i, j)].re)).collect();
    }
    let mut out = vec![0.0; 4 * r * cdim];
    let w = 2 * cdim;
    for i in 0..r {
        for j in 0..cdim {
            let z = m[(i, j)];
            out[i * w + j] = z.re;
            out[i * w + j + cdim] = -z.im;
            out[(i + r) * w + j] = z.im;
            out[(i + r) * w + j + cdim] = z.re;
        }
    }
    out
}

fn realify_vec(v: &VectorData, real: bool) -> Vec<f64> {
    let mut out: Vec<f64> = v.iter().map(|z| z.re).collect();
    if !real {
        out.extend(v.iter().map(|z| z.im));
    }
    out
}

fn build_system(
    acl: &MatrixData,
    n: &MatrixData,
    weight: Option<&MatrixData>,
    x0: &VectorData,
    dt: f64,
) -> (RealSystem, Vec<f64>) {
    let real = is_real(acl)
        && is_real(n)
        && weight.is_none_or(is_real)
        && x0.iter().all(|z| z.im == 0.0);
    let dim = if real { acl.nrows() } else { 2 * acl.nrows() };
    let mut drift = realify(acl, real);
    for v in drift.iter_mut() {
        *v *= dt;
    }
    for i in 0..dim {
        drift[i * dim + i] += 1.0;
    }
    (
        RealSystem {
            dim,
            drift,
            noise: realify(n, real),
            weight: weight.map(|w| realify(w, real)),
        },
        realify_vec(x0, real),
    )
}

fn quad(w: &[f64], x: &[f64]) -> f64 {
    let d = x.len();
    let mut s = 0.0;
    for i in 0..d {
        let mut row = 0.0;
        for j in 0..d {
            row += w[i * d + j] * x[j];
        }
        s += x[i] * row;
    }
    s
}

fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// Output of one path.
struct PathOut {
    /// Integral of the running cost (trapezoid), if a weight was given.
    cost: f64,
    /// Step at which the path diverged.
    exploded_at: Option<usize>,
}

/// Runs one path, adding `‖x_j‖²` into `moments[j]`.
fn run_path(sys: &RealSystem, x0: &[f64], steps: usize, dt: f64, seed: u64, negate: bool, moments: &mut [f64]) -> PathOut {
    let d = sys.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sq = dt.sqrt();
    let mut x = x0.to_vec();
    let mut next = vec![0.0; d];
    let mut cost = 0.0;
    let mut prev_run = sys.weight.as_ref().map_or(0.0, |w| quad(w, &x));
    moments[0] += norm_sq(&x);
    for j in 1..=steps {
        let z: f64 = StandardNormal.sample(&mut rng);
        let dw = if negate { -z * sq } else { z * sq };
        for i in 0..d {
            let mut acc = 0.0;
            let row = i * d;
            for k in 0..d {
                acc += (sys.drift[row + k] + sys.noise[row + k] * dw) * x[k];
            }
            next[i] = acc;
        }
        std::mem::swap(&mut x, &mut next);
        let ns = norm_sq(&x);
        if !(ns < EXPLODE) {
            return PathOut { cost: f64::INFINITY, exploded_at: Some(j) };
        }
        moments[j] += ns;
        if let Some(w) = &sys.weight {
            let run = quad(w, &x);
            cost += 0.5 * dt * (prev_run + run);
            prev_run = run;
        }
    }
    PathOut { cost, exploded_at: None }
}

fn path_seed(seed: u64, idx: usize, antithetic: bool) -> (u64, bool) {
    if antithetic {
        (mix64(seed, (idx / 2) as u64), idx % 2 == 1)
    } else {
        (mix64(seed, idx as u64), false)
    }
}

struct Ensemble {
    /// Pairwise-summed `Σ‖x_j‖²` over paths.
    moment_sums: Vec<f64>,
    /// Per-path cost integrals in path order.
    costs: Vec<f64>,
    exploded_at: Option<usize>,
}

fn run_ensemble(sys: &RealSystem, x0: &[f64], cfg: &SimConfig, seed: u64) -> Ensemble {
    let steps = cfg.steps();
    let blocks = cfg.paths.div_ceil(BLOCK);
    let outs = par::map_indexed(blocks, |b| {
        let mut moments = vec![0.0; steps + 1];
        let mut costs = Vec::with_capacity(BLOCK);
        let mut exploded: Option<usize> = None;
        for idx in b * BLOCK..((b + 1) * BLOCK).min(cfg.paths) {
            let (s, neg) = path_seed(seed, idx, cfg.antithetic);
            let out = run_path(sys, x0, steps, cfg.dt, s, neg, &mut moments);
            if let Some(j) = out.exploded_at {
                exploded = Some(exploded.map_or(j, |e: usize| e.min(j)));
            }
            costs.push(out.cost);
        }
        (moments, costs, exploded)
    });
    let exploded_at = outs.iter().filter_map(|o| o.2).min();
    let moment_vecs: Vec<Vec<f64>> = outs.iter().map(|o| o.0.clone()).collect();
    let moment_sums = par::pairwise_sum_vecs(&moment_vecs);
    let costs = outs.into_iter().flat_map(|o| o.1).collect();
    Ensemble {
        moment_sums,
        costs,
        exploded_at,
    }
}

/// Sampled `E‖x(t)‖²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTrajectory {
    pub times: Vec<f64>,
    pub second_moments: Vec<f64>,
    /// Set when some path diverged; the trajectory then stops before that step.
    pub exploded: bool,
    pub paths: usize,
}

impl MomentTrajectory {
    fn from_sums(sums: &[f64], paths: usize, dt: f64, exploded_at: Option<usize>) -> Self {
        let len = exploded_at.unwrap_or(sums.len());
        Self {
            times: (0..len).map(|j| j as f64 * dt).collect(),
            second_moments: sums[..len].iter().map(|s| s / paths as f64).collect(),
            exploded: exploded_at.is_some(),
            paths,
        }
    }

    /// `t,second_moment` CSV.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,second_moment\n");
        for (t, m) in self.times.iter().zip(&self.second_moments) {
            out.push_str(&format!("{t:.17e},{m:.17e}\n"));
        }
        out
    }
}

fn check_inputs(plant: &StochPlant, f: &MatrixData, x0: &VectorData) -> Result<()> {
    if f.shape() != (plant.inputs(), plant.states()) {
        return Err(Error::DimensionMismatch("F must be m×n".into()));
    }
    if x0.len() != plant.states() {
        return Err(Error::DimensionMismatch("x0 must have n entries".into()));
    }
    Ok(())
}

/// Ensemble second moment `E‖x(t)‖²` under `u = Fx`.
pub fn simulate(plant: &StochPlant, f: &MatrixData, x0: &VectorData, cfg: &SimConfig) -> Result<MomentTrajectory> {
    cfg.validate()?;
    check_inputs(plant, f, x0)?;
    let (sys, x) = build_system(&plant.closed_loop(f), &plant.n, None, x0, cfg.dt);
    let ens = run_ensemble(&sys, &x, cfg, cfg.seed);
    Ok(MomentTrajectory::from_sums(&ens.moment_sums, cfg.paths, cfg.dt, ens.exploded_at))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostEstimate {
    /// Sample mean of the truncated cost `∫₀^T x*(W + F*F)x dt`.
    pub mean: f64,
    /// 95% normal-approximation half-width.
    pub half_width: f64,
    pub paths_used: usize,
    /// Exact expected cost beyond the horizon for the continuous system,
    /// `tr(P_cost E[x(T)x(T)*])`; `None` when the closed loop is MS-unstable.
    pub truncation_tail: Option<f64>,
    pub ms_stable: bool,
    pub config: SimConfig,
}

/// Mean and 95% half-width of i.i.d. samples with pairwise summation.
fn mean_ci(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = par::pairwise_sum(samples) / n;
    let dev: Vec<f64> = samples.iter().map(|s| (s - mean) * (s - mean)).collect();
    let var = par::pairwise_sum(&dev) / (n - 1.0).max(1.0);
    (mean, 1.96 * (var / n).sqrt())
}

/// Second moment `E[x(T)x(T)*]` of the continuous system via the lift.
fn exact_moment(acl: &MatrixData, n: &MatrixData, x0: &VectorData, t: f64) -> MatrixData {
    let lift = linmat::lift_forward(acl, Some(n));
    let v = linmat::vec_of(&(x0 * x0.adjoint()));
    let d = acl.nrows();
    linmat::unvec(&(linmat::matexp(&lift, t) * v), d, d)
}

/// Cost estimate plus the moment trajectory of the same run.
pub fn run_cost(
    plant: &StochPlant,
    f: &MatrixData,
    w: &MatrixData,
    x0: &VectorData,
    cfg: &SimConfig,
) -> Result<(CostEstimate, MomentTrajectory)> {
    cfg.validate()?;
    check_inputs(plant, f, x0)?;
    if w.shape() != plant.a.shape() {
        return Err(Error::DimensionMismatch("W must be n×n".into()));
    }
    let acl = plant.closed_loop(f);
    let q = linmat::symmetrize(&(w + f.adjoint() * f));
    let ms_stable = ms_abscissa(&acl, &plant.n)? < 0.0;
    let (sys, x) = build_system(&acl, &plant.n, Some(&q), x0, cfg.dt);
    let ens = run_ensemble(&sys, &x, cfg, cfg.seed);
    if let Some(j) = ens.exploded_at {
        return Err(Error::Exploded { time: j as f64 * cfg.dt });
    }
    let samples: Vec<f64> = if cfg.antithetic {
        ens.costs.chunks(2).map(|p| p.iter().sum::<f64>() / p.len() as f64).collect()
    } else {
        ens.costs.clone()
    };
    let (mean, half_width) = mean_ci(&samples);
    let truncation_tail = if ms_stable {
        linmat::solve_glyap(&acl, &plant.n, &q).ok().map(|p| {
            let xt = exact_moment(&acl, &plant.n, x0, cfg.horizon);
            (p * xt).trace().re
        })
    } else {
        None
    };
    let estimate = CostEstimate {
        mean,
        half_width,
        paths_used: cfg.paths,
        truncation_tail,
        ms_stable,
        config: *cfg,
    };
    let traj = MomentTrajectory::from_sums(&ens.moment_sums, cfg.paths, cfg.dt, None);
    Ok((estimate, traj))
}

/// Monte Carlo estimate of `E∫₀^T x*(W + F*F)x dt` under `u = Fx`.
pub fn estimate_cost(
    plant: &StochPlant,
    f: &MatrixData,
    w: &MatrixData,
    x0: &VectorData,
    cfg: &SimConfig,
) -> Result<CostEstimate> {
    run_cost(plant, f, w, x0, cfg).map(|r| r.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MsCheck {
    /// Least-squares slope of `log E‖x(t)‖²` over the last half of the horizon.
    pub decay_rate_estimate: f64,
    /// 95% half-width from independent path batches.
    pub half_width: f64,
    pub stable: bool,
    pub exploded: bool,
}

const MS_BATCHES: usize = 16;

fn ls_slope(t: &[f64], y: &[f64]) -> f64 {
    let n = t.len() as f64;
    let tm = t.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let num: f64 = t.iter().zip(y).map(|(a, b)| (a - tm) * (b - ym)).sum();
    let den: f64 = t.iter().map(|a| (a - tm) * (a - tm)).sum();
    num / den
}

/// Empirical mean-square decay rate from canonical-basis initial states.
pub fn empirical_ms_check(plant: &StochPlant, f: &MatrixData, cfg: &SimConfig) -> Result<MsCheck> {
    cfg.validate()?;
    check_inputs(plant, f, &VectorData::zeros(plant.states()))?;
    if cfg.paths < 2 * MS_BATCHES {
        return Err(Error::InvalidArgument(format!("need at least {} paths", 2 * MS_BATCHES)));
    }
    let acl = plant.closed_loop(f);
    let n = plant.states();
    let steps = cfg.steps();
    // batch b holds paths [b·P/16, (b+1)·P/16), kept pair-aligned
    let per_batch = (cfg.paths / MS_BATCHES) & !1;
    let batch_cfg = SimConfig { paths: per_batch, ..*cfg };
    let mut batch_sums = vec![vec![0.0; steps + 1]; MS_BATCHES];
    let mut exploded_at: Option<usize> = None;
    for i in 0..n {
        let mut e = VectorData::zeros(n);
        e[i] = linmat::ONE;
        let (sys, x) = build_system(&acl, &plant.n, None, &e, cfg.dt);
        let runs = par::map_indexed(MS_BATCHES, |b| {
            run_ensemble(&sys, &x, &batch_cfg, mix64(mix64(cfg.seed, i as u64), b as u64))
        });
        for (b, ens) in runs.into_iter().enumerate() {
            if let Some(j) = ens.exploded_at {
                exploded_at = Some(exploded_at.map_or(j, |e| e.min(j)));
            }
            for (acc, v) in batch_sums[b].iter_mut().zip(ens.moment_sums) {
                *acc += v;
            }
        }
    }
    let end = exploded_at.unwrap_or(steps + 1);
    let start = end / 2;
    if end - start < 2 {
        return Ok(MsCheck {
            decay_rate_estimate: f64::INFINITY,
            half_width: 0.0,
            stable: false,
            exploded: true,
        });
    }
    let t: Vec<f64> = (start..end).map(|j| j as f64 * cfg.dt).collect();
    let slope_of = |sums: &[f64]| {
        let y: Vec<f64> = sums[start..end].iter().map(|v| v.max(f64::MIN_POSITIVE).ln()).collect();
        ls_slope(&t, &y)
    };
    let total = par::pairwise_sum_vecs(&batch_sums);
    let slope = slope_of(&total);
    let batch_slopes: Vec<f64> = batch_sums.iter().map(|s| slope_of(s)).collect();
    let (_, half_width) = mean_ci(&batch_slopes);
    Ok(MsCheck {
        decay_rate_estimate: slope,
        half_width,
        stable: exploded_at.is_none() && slope + half_width < 0.0,
        exploded: exploded_at.is_some(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linmat::{scalar, zeros};

    fn sp(a: f64, n: f64, b: f64) -> StochPlant {
        StochPlant::new(scalar(a), scalar(n), scalar(b)).unwrap()
    }

    fn x1() -> VectorData {
        VectorData::from_element(1, linmat::ONE)
    }

    fn cfg(paths: usize, horizon: f64) -> SimConfig {
        SimConfig {
            dt: 1e-3,
            horizon,
            paths,
            seed: 7,
            antithetic: false,
        }
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig { dt: 0.0, ..Default::default() }.validate().is_err());
        assert!(SimConfig { horizon: 0.05, ..Default::default() }.validate().is_err());
        assert!(SimConfig { paths: 1, ..Default::default() }.validate().is_err());
        assert!(SimConfig::default().validate().is_ok());
    }

    #[test]
    fn deterministic_decay() {
        let traj = simulate(&sp(-1.0, 0.0, 0.0), &zeros(1, 1), &x1(), &cfg(4, 2.0)).unwrap();
        // Euler: (1 − dt)^{2j}
        for (t, m) in traj.times.iter().zip(&traj.second_moments).step_by(250) {
            let euler = (1.0f64 - 1e-3).powf(2.0 * t / 1e-3);
            assert!((m - euler).abs() < 1e-12);
            assert!((m - (-2.0 * t).exp()).abs() < 2e-3);
        }
    }

    #[test]
    fn zero_state_stays_zero() {
        let traj = simulate(&sp(-1.0, 1.0, 1.0), &zeros(1, 1), &VectorData::zeros(1), &cfg(8, 1.0)).unwrap();
        assert!(traj.second_moments.iter().all(|&m| m == 0.0));
        let est = estimate_cost(&sp(-1.0, 1.0, 0.0), &zeros(1, 1), &scalar(1.0), &VectorData::zeros(1), &cfg(8, 1.0)).unwrap();
        assert_eq!((est.mean, est.half_width), (0.0, 0.0));
    }

    #[test]
    fn noisy_second_moment() {
        let traj = simulate(&sp(-1.0, 1.0, 0.0), &zeros(1, 1), &x1(), &cfg(20_000, 1.0)).unwrap();
        let m = *traj.second_moments.last().unwrap();
        assert!((m - (-1.0f64).exp()).abs() < 0.03, "{m}");
    }

    #[test]
    fn cost_matches_glyap() {
        let mut cf = cfg(10_000, 10.0);
        cf.dt = 2e-3;
        let est = estimate_cost(&sp(-1.0, 1.0, 0.0), &zeros(1, 1), &scalar(1.0), &x1(), &cf).unwrap();
        let total = est.mean + est.truncation_tail.unwrap();
        assert!((total - 1.0).abs() <= 3.0 * est.half_width, "{est:?}");
        assert!(est.truncation_tail.unwrap() < 1e-3);
    }

    #[test]
    fn antithetic_reduces_width() {
        let plant = sp(-1.0, 0.5, 0.0);
        let plain = estimate_cost(&plant, &zeros(1, 1), &scalar(1.0), &x1(), &cfg(4000, 4.0)).unwrap();
        let anti = estimate_cost(&plant, &zeros(1, 1), &scalar(1.0), &x1(), &SimConfig { antithetic: true, ..cfg(4000, 4.0) }).unwrap();
        assert!(anti.half_width < plain.half_width);
        assert!((anti.mean - plain.mean).abs() < plain.half_width + anti.half_width);
    }

    #[test]
    fn complex_system_realified() {
        // rotation at rate 1 with damping: E|x|² = e^{−2t} for deterministic
        let plant = StochPlant::new(
            MatrixData::from_element(1, 1, num_complex::Complex64::new(-1.0, 1.0)),
            scalar(0.0),
            scalar(0.0),
        )
        .unwrap();
        let traj = simulate(&plant, &zeros(1, 1), &x1(), &cfg(2, 1.0)).unwrap();
        let m = *traj.second_moments.last().unwrap();
        assert!((m - (-2.0f64).exp()).abs() < 2e-3);
    }

    #[test]
    fn ms_slopes() {
        let quick = SimConfig { dt: 1e-3, horizon: 2.0, paths: 20_000, seed: 3, antithetic: true };
        let chk = empirical_ms_check(&sp(-1.0, 0.0, 0.0), &zeros(1, 1), &quick).unwrap();
        assert!((chk.decay_rate_estimate + 2.0).abs() < 0.01);
        assert!(chk.stable);
        // heavy-tailed moments: short horizon, more paths
        let noisy = SimConfig { horizon: 1.0, paths: 100_000, ..quick };
        let chk = empirical_ms_check(&sp(-1.0, 1.0, 0.0), &zeros(1, 1), &noisy).unwrap();
        assert!((chk.decay_rate_estimate + 1.0).abs() < 0.15, "{chk:?}");
        assert!(chk.stable);
    }

    #[test]
    fn explosion_flagged() {
        let traj = simulate(&sp(400.0, 0.0, 0.0), &zeros(1, 1), &x1(), &SimConfig { horizon: 10.0, dt: 0.01, paths: 2, ..Default::default() }).unwrap();
        assert!(traj.exploded);
        assert!(traj.times.len() < 1001);
        let err = estimate_cost(&sp(400.0, 0.0, 0.0), &zeros(1, 1), &scalar(1.0), &x1(), &SimConfig { horizon: 10.0, dt: 0.01, paths: 2, ..Default::default() });
        assert!(matches!(err, Err(Error::Exploded { .. })));
    }

    #[test]
    fn seeds_reproduce_bitwise() {
        let plant = sp(-0.5, 0.7, 1.0);
        let f = scalar(-0.3);
        let cf = SimConfig { dt: 1e-2, horizon: 2.0, paths: 300, seed: 11, antithetic: true };
        let a = estimate_cost(&plant, &f, &scalar(1.0), &x1(), &cf).unwrap();
        let b = estimate_cost(&plant, &f, &scalar(1.0), &x1(), &cf).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.half_width.to_bits(), b.half_width.to_bits());
        let other = estimate_cost(&plant, &f, &scalar(1.0), &x1(), &SimConfig { seed: 12, ..cf }).unwrap();
        assert_ne!(a.mean, other.mean);
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn thread_count_does_not_change_results() {
        let plant = StochPlant::new(
            crate::linmat::real(2, 2, &[-1.0, 0.3, 0.0, -0.6]),
            crate::linmat::real(2, 2, &[0.4, 0.0, 0.1, 0.2]),
            crate::linmat::real(2, 1, &[0.0, 1.0]),
        )
        .unwrap();
        let f = crate::linmat::real(1, 2, &[-0.2, -0.5]);
        let x0 = VectorData::from_vec(vec![crate::linmat::c(1.0), crate::linmat::c(-0.5)]);
        let cf = SimConfig { dt: 1e-2, horizon: 3.0, paths: 700, seed: 5, antithetic: false };
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| {
                let (est, traj) = run_cost(&plant, &f, &identity2(), &x0, &cf).unwrap();
                (est.mean.to_bits(), traj.second_moments.iter().map(|v| v.to_bits()).collect::<Vec<_>>())
            })
        };
        assert_eq!(run(1), run(4));
    }

    #[cfg(feature = "parallel")]
    fn identity2() -> MatrixData {
        crate::linmat::identity(2)
    }

    #[test]
    fn mix64_spreads_indices() {
        let a = mix64(1, 0);
        let b = mix64(1, 1);
        assert_ne!(a, b);
        assert_ne!(mix64(0, 0), 0);
        assert_eq!(mix64(42, 7), mix64(42, 7));
    }
}
