//! Analysis commands. Each returns the text destined for standard output.

use std::path::Path;

use kypc::coercivity::{self, CoercivityCertificate, CoercivityOptions};
use kypc::frequency::{self, FrequencyScan, GridConfig};
use kypc::linmat::{self, MatrixData, VectorData};
use kypc::riccati_det::{self, Classification, RiccatiReport};
use kypc::sim::{self, CostEstimate, SimConfig};
use kypc::stability;
use kypc::stoch_lq::{self, StochCoercivityReport, StochOptions};
use kypc::serde_matrix;
use log::{info, warn};
use serde::Serialize;
use thiserror::Error;

use crate::bundle::{BundleError, Kind, SystemBundle};

/// Strict margin below this counts as zero.
pub const MARGIN_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum CommandError {
    #[error(transparent)]
    Bundle(#[from] BundleError),
    #[error("analysis failed: {0}")]
    Analysis(#[from] kypc::Error),
    #[error("invalid option: {0}")]
    Usage(String),
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: std::io::Error },
}

impl CommandError {
    /// Process exit code for this error.
    pub fn code(&self) -> i32 {
        match self {
            Self::Bundle(e) => e.code(),
            Self::Analysis(_) => 1,
            Self::Usage(_) => 2,
            Self::Write { .. } => 3,
        }
    }
}

pub type CmdResult = Result<String, CommandError>;

fn write_file(path: &Path, text: &str) -> Result<(), CommandError> {
    std::fs::write(path, text).map_err(|source| CommandError::Write {
        path: path.display().to_string(),
        source,
    })
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serializes") + "\n"
}

#[derive(Debug, Clone, Copy)]
pub struct GridArgs {
    pub points: usize,
    pub omega_max: f64,
}

impl GridArgs {
    fn config(&self) -> Result<GridConfig, CommandError> {
        let base = GridConfig::default();
        if self.points < 3 {
            return Err(CommandError::Usage("--grid-points must be at least 3".into()));
        }
        if !(self.omega_max > base.omega_min) {
            return Err(CommandError::Usage(format!("--grid-max must exceed {}", base.omega_min)));
        }
        Ok(GridConfig { points: self.points, omega_max: self.omega_max, ..base })
    }
}

impl Default for GridArgs {
    fn default() -> Self {
        let g = GridConfig::default();
        Self { points: g.points, omega_max: g.omega_max }
    }
}

#[derive(Debug, Serialize)]
struct ScanSummary {
    nonstrict_ok: bool,
    strict_margin: Option<f64>,
    signed_margin: f64,
    min_eig: f64,
    argmin_eig_omega: f64,
    argmin_omega: f64,
    resolution: f64,
    grid_points: usize,
    nudged: Vec<(f64, f64)>,
}

impl From<&FrequencyScan> for ScanSummary {
    fn from(s: &FrequencyScan) -> Self {
        Self {
            nonstrict_ok: s.nonstrict_ok,
            strict_margin: s.strict_margin,
            signed_margin: s.signed_margin,
            min_eig: s.min_eig,
            argmin_eig_omega: s.argmin_eig_omega,
            argmin_omega: s.argmin_omega,
            resolution: s.resolution,
            grid_points: s.grid.len(),
            nudged: s.nudged.clone(),
        }
    }
}

#[derive(Debug, Serialize, PartialEq, Eq, Clone, Copy)]
#[serde(rename_all = "snake_case")]
pub enum CrossCheck {
    Consistent,
    /// Disagreement with a margin inside the boundary band.
    Boundary,
    Inconsistent,
}

#[derive(Debug, Serialize)]
struct CrossCheckReport {
    /// Frequency scan and time-domain oracle agree on the nonstrict condition.
    nonstrict_agree: bool,
    /// Stabilizing Riccati solution exactly when the strict margin is positive.
    strict_agree: bool,
    /// Riccati solvability agrees with the nonstrict frequency condition.
    solvable_agree: bool,
    band: f64,
    verdict: CrossCheck,
}

#[derive(Debug, Serialize)]
struct DetSettings {
    grid: GridConfig,
    nonstrict_tol: f64,
    margin_tol: f64,
    coercivity: CoercivityOptions,
    riccati_accept_tol: f64,
}

#[derive(Debug, Serialize)]
struct DetReport {
    name: Option<String>,
    kind: Kind,
    states: usize,
    inputs: usize,
    settings: DetSettings,
    frequency: ScanSummary,
    riccati: RiccatiReport,
    coercivity: CoercivityCertificate,
    cross_check: CrossCheckReport,
}

fn cross_check(scan: &FrequencyScan, are: &RiccatiReport, cert: &CoercivityCertificate) -> CrossCheckReport {
    let s = cert.settings();
    let band = (10.0 * f64::max(s.dt, 1.0 / s.horizon)).max(10.0 * scan.resolution);
    let nonstrict_agree = cert.nonstrict_holds() == scan.nonstrict_ok;
    let strict = scan.strict_margin.is_some_and(|e| e > MARGIN_TOL);
    let strict_agree = (are.classification == Classification::Stabilizing) == strict;
    let solvable = matches!(are.classification, Classification::Stabilizing | Classification::AlmostStabilizing);
    let solvable_agree = solvable == scan.nonstrict_ok;
    let near_boundary = scan.signed_margin.abs() < band || cert.eps_hat().abs() < band;
    let verdict = match (nonstrict_agree && strict_agree && solvable_agree, near_boundary) {
        (true, _) => CrossCheck::Consistent,
        (false, true) => CrossCheck::Boundary,
        (false, false) => CrossCheck::Inconsistent,
    };
    CrossCheckReport { nonstrict_agree, strict_agree, solvable_agree, band, verdict }
}

#[derive(Debug, Clone, Copy)]
pub struct DetArgs {
    pub grid: GridArgs,
    pub dt: f64,
    /// Oracle horizon; chosen from the plant when absent.
    pub horizon: Option<f64>,
}

impl Default for DetArgs {
    fn default() -> Self {
        Self { grid: GridArgs::default(), dt: 0.02, horizon: None }
    }
}

pub fn analyze_det(bundle: &SystemBundle, args: &DetArgs) -> CmdResult {
    if bundle.kind == Kind::Stochastic {
        warn!("analyze-det ignores the noise matrix N");
    }
    let plant = bundle.linear_plant()?;
    let m = &bundle.cost;
    let grid = args.grid.config()?;
    let scan = frequency::fdc_scan_default(&plant, m, &grid)?;
    info!("frequency scan: nonstrict {} margin {:e}", scan.nonstrict_ok, scan.signed_margin);
    let riccati = riccati_det::solve_are(&plant, m)?;
    info!("riccati: {:?} after {} iterations", riccati.classification, riccati.iterations);
    if !(args.dt > 0.0) {
        return Err(CommandError::Usage("--dt must be positive".into()));
    }
    let cert = match args.horizon {
        Some(t) => coercivity::check_coercivity(&plant, m, t, args.dt)?,
        None => coercivity::check_coercivity_auto(&plant, m, args.dt)?,
    };
    info!("coercivity: eps_hat {:e}", cert.eps_hat());
    let cross = cross_check(&scan, &riccati, &cert);
    let report = DetReport {
        name: bundle.name.clone(),
        kind: bundle.kind,
        states: bundle.states(),
        inputs: bundle.inputs(),
        settings: DetSettings {
            grid,
            nonstrict_tol: frequency::NONSTRICT_TOL,
            margin_tol: MARGIN_TOL,
            coercivity: CoercivityOptions::default(),
            riccati_accept_tol: riccati_det::ACCEPT_TOL,
        },
        frequency: ScanSummary::from(&scan),
        riccati,
        coercivity: cert,
        cross_check: cross,
    };
    Ok(to_json(&report))
}

#[derive(Debug, Serialize)]
struct MsData {
    spectral_abscissa: f64,
    ms_abscissa: f64,
    /// Feedback certifying mean-square stabilizability.
    #[serde(with = "serde_matrix::option")]
    stabilizing_feedback: Option<MatrixData>,
    certified_ms_abscissa: Option<f64>,
}

#[derive(Debug, Serialize)]
struct StochSettings {
    options: StochOptions,
    gain_tol: f64,
    gain_bracket: (f64, f64),
    gain_rel_tol: f64,
    riccati_accept_tol: f64,
}

#[derive(Debug, Serialize)]
struct StochReport {
    name: Option<String>,
    kind: Kind,
    states: usize,
    inputs: usize,
    settings: StochSettings,
    mean_square: MsData,
    /// Matrices refer to the input normalized to `V = 0`, `R = I` when
    /// `input_transform` is present.
    analysis: StochCoercivityReport,
}

pub fn analyze_stoch(bundle: &SystemBundle) -> CmdResult {
    let plant = bundle.stoch_plant()?;
    let stabilizing = stability::certify_stabilizable_stoch(&plant)?;
    let certified = stabilizing
        .as_ref()
        .map(|f| stability::ms_abscissa(&plant.closed_loop(f), &plant.n))
        .transpose()?;
    let ms = MsData {
        spectral_abscissa: stability::spectral_abscissa(&plant.a)?,
        ms_abscissa: stability::ms_abscissa(&plant.a, &plant.n)?,
        stabilizing_feedback: stabilizing,
        certified_ms_abscissa: certified,
    };
    let analysis = if bundle.state_weight_only() {
        stoch_lq::coercivity_stoch(&plant, &bundle.cost.w)?
    } else {
        stoch_lq::coercivity_stoch_weighted(&plant, &bundle.cost)?
    };
    info!("stochastic verdict {:?}, gamma {}", analysis.verdict, analysis.gamma);
    let report = StochReport {
        name: bundle.name.clone(),
        kind: bundle.kind,
        states: bundle.states(),
        inputs: bundle.inputs(),
        settings: StochSettings {
            options: StochOptions::default(),
            gain_tol: stoch_lq::GAIN_TOL,
            gain_bracket: stoch_lq::GAIN_BRACKET,
            gain_rel_tol: stoch_lq::GAIN_REL_TOL,
            riccati_accept_tol: riccati_det::ACCEPT_TOL,
        },
        mean_square: ms,
        analysis,
    };
    Ok(to_json(&report))
}

#[derive(Debug, Serialize)]
struct ScanFileReport {
    csv: String,
    grid: GridConfig,
    summary: ScanSummary,
}

/// Frequency scan as CSV, or a JSON summary when the CSV goes to a file.
pub fn scan_frequency(bundle: &SystemBundle, grid: &GridArgs, csv: Option<&Path>) -> CmdResult {
    let plant = bundle.linear_plant()?;
    let cfg = grid.config()?;
    let scan = frequency::fdc_scan_default(&plant, &bundle.cost, &cfg)?;
    match csv {
        None => Ok(scan.to_csv()),
        Some(path) => {
            write_file(path, &scan.to_csv())?;
            Ok(to_json(&ScanFileReport {
                csv: path.display().to_string(),
                grid: cfg,
                summary: ScanSummary::from(&scan),
            }))
        }
    }
}

/// Parses a vector given as a JSON list of numbers or `[re, im]` pairs.
pub fn parse_vector(text: &str, what: &str) -> Result<VectorData, CommandError> {
    let entries: Vec<serde_matrix::Entry> =
        serde_json::from_str(text).map_err(|e| CommandError::Usage(format!("{what}: {e}")))?;
    Ok(VectorData::from_iterator(entries.len(), entries.into_iter().map(Into::into)))
}

#[derive(Debug, Serialize)]
struct WitnessReport {
    omega: f64,
    #[serde(with = "serde_matrix::vector")]
    eta: VectorData,
    popov_value: f64,
    ramp_cycles: usize,
    steer_window: f64,
    t_k: f64,
    steer_cost: f64,
    middle_cost: f64,
    middle_rate: f64,
    /// `|middle_rate − popov_value| / |popov_value|`.
    rate_rel_error: f64,
    tail_cost: f64,
    total_cost: f64,
    steer_error: f64,
    middle_simulated: bool,
    csv: Option<String>,
}

/// Input driving `J(0, u) < 0` at a frequency where the Popov function has
/// a negative direction `eta`; the eigenvector of its smallest eigenvalue
/// when `eta` is absent.
pub fn witness(bundle: &SystemBundle, omega: f64, eta: Option<VectorData>, cycles: usize, csv: Option<&Path>) -> CmdResult {
    let plant = bundle.linear_plant()?;
    let eta = match eta {
        Some(e) => e,
        None => frequency::most_violating_direction(&plant, &bundle.cost, omega)?.1,
    };
    if eta.len() != bundle.inputs() {
        return Err(CommandError::Usage(format!("--eta has {} entries, expected {}", eta.len(), bundle.inputs())));
    }
    if cycles == 0 {
        return Err(CommandError::Usage("--cycles must be positive".into()));
    }
    let w = coercivity::resonance_witness(&plant, &bundle.cost, omega, &eta, cycles)?;
    if let Some(path) = csv {
        write_file(path, &w.to_csv())?;
    }
    let report = WitnessReport {
        omega: w.omega,
        eta: w.eta.clone(),
        popov_value: w.popov_value,
        ramp_cycles: w.ramp_cycles,
        steer_window: w.steer_window,
        t_k: w.t_k,
        steer_cost: w.steer_cost,
        middle_cost: w.middle_cost,
        middle_rate: w.middle_rate,
        rate_rel_error: (w.middle_rate - w.popov_value).abs() / w.popov_value.abs(),
        tail_cost: w.tail_cost,
        total_cost: w.total_cost,
        steer_error: w.steer_error,
        middle_simulated: w.middle_simulated,
        csv: csv.map(|p| p.display().to_string()),
    };
    Ok(to_json(&report))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackKind {
    Zero,
    /// Optimal feedback for the positive part of the split weight.
    Wonham,
    /// Stabilizing solution of the full stochastic Riccati equation.
    Riccati,
}

#[derive(Debug, Serialize)]
struct SimReport {
    feedback_kind: FeedbackKind,
    #[serde(with = "serde_matrix")]
    feedback: MatrixData,
    #[serde(with = "serde_matrix::vector")]
    x0: VectorData,
    closed_loop_ms_abscissa: f64,
    /// `x0* P x0` for the continuous closed loop.
    exact_cost: Option<f64>,
    estimate: CostEstimate,
    csv: Option<String>,
}

/// Feedback for the original input from `−B'*P` on the normalized problem.
fn feedback_from(bundle: &SystemBundle, kind: FeedbackKind) -> Result<MatrixData, CommandError> {
    let plant = bundle.stoch_plant()?;
    if kind == FeedbackKind::Zero {
        return Ok(linmat::zeros(bundle.inputs(), bundle.states()));
    }
    let (normalized, w, transform) = stoch_lq::normalize_input(&plant, &bundle.cost)?;
    let p = match kind {
        FeedbackKind::Wonham => {
            let (w1, _) = stoch_lq::split_weight(&w)?;
            stoch_lq::solve_wonham(&normalized, &w1)?.p
        }
        _ => {
            let rep = stoch_lq::solve_stoch_riccati(&normalized, &w)?;
            (rep.classification == Classification::Stabilizing).then_some(rep.p).flatten()
        }
    };
    let p = p.ok_or_else(|| kypc::Error::InvalidArgument(format!("no stabilizing {kind:?} solution")))?;
    Ok(transform.map_feedback(&(-normalized.b.adjoint() * p)))
}

/// Monte Carlo cost of `u = Fx` and the second-moment trajectory.
pub fn simulate(bundle: &SystemBundle, kind: FeedbackKind, x0: Option<VectorData>, cfg: &SimConfig, csv: Option<&Path>) -> CmdResult {
    let n = bundle.states();
    let x0 = x0.unwrap_or_else(|| {
        let mut e1 = VectorData::zeros(n);
        e1[0] = linmat::c(1.0);
        e1
    });
    if x0.len() != n {
        return Err(CommandError::Usage(format!("--x0 has {} entries, expected {n}", x0.len())));
    }
    cfg.validate()?;
    let plant = bundle.stoch_plant()?;
    let f = feedback_from(bundle, kind)?;
    let m = &bundle.cost;
    // integrand x*(W + V*F + F*V + F*RF)x written as x*(W_eff + F*F)x
    let w_eff = linmat::symmetrize(
        &(&m.w + m.v.adjoint() * &f + f.adjoint() * &m.v + f.adjoint() * (&m.r - linmat::identity(bundle.inputs())) * &f),
    );
    let acl = plant.closed_loop(&f);
    let ms = stability::ms_abscissa(&acl, &plant.n)?;
    let exact_cost = if ms < 0.0 {
        let q = linmat::symmetrize(&(&w_eff + f.adjoint() * &f));
        linmat::solve_glyap(&acl, &plant.n, &q)
            .ok()
            .map(|p| (x0.adjoint() * p * &x0)[(0, 0)].re)
    } else {
        None
    };
    let (estimate, traj) = sim::run_cost(&plant, &f, &w_eff, &x0, cfg)?;
    if let Some(path) = csv {
        write_file(path, &traj.to_csv())?;
    }
    info!("estimate {} ± {}", estimate.mean, estimate.half_width);
    Ok(to_json(&SimReport {
        feedback_kind: kind,
        feedback: f,
        x0,
        closed_loop_ms_abscissa: ms,
        exact_cost,
        estimate,
        csv: csv.map(|p| p.display().to_string()),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::parse_system_str;

    fn scalar_det() -> SystemBundle {
        parse_system_str(r#"{"kind":"deterministic","A":[[-1]],"B":[[1]],"cost":{"W":[[1]]}}"#).unwrap()
    }

    #[test]
    fn det_report_scalar() {
        let out = analyze_det(&scalar_det(), &DetArgs::default()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["riccati"]["classification"], "stabilizing");
        assert_eq!(v["coercivity"]["verdict"], "coercive");
        assert_eq!(v["cross_check"]["verdict"], "consistent");
        let p = v["riccati"]["p"][0][0].as_f64().unwrap();
        assert!((p - (2f64.sqrt() - 1.0)).abs() < 1e-10);
        assert!(v["settings"]["grid"]["points"].as_u64().is_some());
    }

    #[test]
    fn vector_parsing() {
        let v = parse_vector("[1, [0, 2]]", "eta").unwrap();
        assert_eq!((v[0].re, v[1].im), (1.0, 2.0));
        assert!(parse_vector("[1,", "eta").is_err());
    }

    #[test]
    fn weighted_feedback_matches_scalar_riccati() {
        // R = 4 scales the input: u = u'/2 gives the unit-weight problem with B/2
        let b = parse_system_str(r#"{"kind":"stochastic","A":[[-1]],"B":[[2]],"N":[[1]],"cost":{"W":[[1]],"R":[[4]]}}"#).unwrap();
        let f = feedback_from(&b, FeedbackKind::Riccati).unwrap();
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        assert!((f[(0, 0)].re + golden / 2.0).abs() < 1e-9, "{f}");
    }
}
