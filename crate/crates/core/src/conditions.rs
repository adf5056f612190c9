//! Sufficient conditions for the ASE plateau.
//!
//! The plateau holds when the interference `I` seen beyond the nearest base
//! station has a finite second negative moment. This module evaluates that
//! moment through the Laplace transform of `I`, checks the simpler
//! Rayleigh-fading conditions (ratio bound `ζ` and the `r / L² e^(-πλ0 r²)`
//! integral), and provides a Monte Carlo oracle for `E[I^-2]`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::analytic::gamma_integral;
use crate::fading::FadingModel;
use crate::models::{check_feasibility, log_grid, ModelError, PathLossModel, SCAN_POINTS_PER_DECADE};
use crate::numerics::{
    integrate_finite, integrate_nested, integrate_semi_infinite_with, QuadSettings, QuadratureError,
    QuadratureResult, QuadratureStatus, CONDITION_TOL,
};
use crate::sim::{Estimate, Moments, Network, SimError, Window};

/// Upper end of every distance scan.
pub const SCAN_MAX: f64 = 1e6;

/// Smallest `ζ` accepted as bounded away from zero.
pub const ZETA_FLOOR: f64 = 1e-6;

/// `e^(-NEAREST_EXPONENT)` bounds the neglected nearest-distance mass.
const NEAREST_EXPONENT: f64 = 60.0;

/// Uniform cells on the nearest-distance range for the tail table.
const CELLS: usize = 48;

const INNER_TOL: f64 = 1e-10;

/// Realizations per work item of the oracle.
const ORACLE_CHUNK: usize = 1024;

/// Default window cap (expected base stations) for the oracle.
pub const ORACLE_MAX_EXPECTED_POINTS: f64 = 512.0;

/// Probe densities `10^(-1 + k/4)`, `k = 0..=12`.
pub fn default_lambda0_grid() -> Vec<f64> {
    (0..=12).map(|k| 10f64.powf(-1.0 + k as f64 / 4.0)).collect()
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConditionError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Corollary {
    /// Double integral of the Laplace transform.
    C1a,
    /// Double integral of the largest-interferer distribution.
    C1b,
    /// Ratio bound and `r / L²` integral under Rayleigh fading.
    C2,
    /// Corollary-2 conditions on a lower bound `L̃ <= L`.
    C5,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Holds {
    Holds,
    Fails,
    Inconclusive,
}

/// One probed density and its integral.
#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    pub lambda0: f64,
    pub result: QuadratureResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionVerdict {
    pub corollary: Corollary,
    pub holds: Holds,
    pub lambda0_grid: Vec<f64>,
    pub probes: Vec<Probe>,
    /// Start of the distance range actually checked.
    pub r0: Option<f64>,
    /// Infimum of `r L / (-L')` over the scan.
    pub zeta: Option<f64>,
    /// Smallest probe from which every larger probe converged.
    pub lambda_c: Option<f64>,
    /// Exact threshold of the `r / L²` integral, where known.
    pub analytic_lambda_c: Option<f64>,
    /// `1 / (πζ)`: density above which the textbook bound applies.
    pub proof_threshold: Option<f64>,
    /// Distance at which a pointwise condition failed.
    pub witness: Option<f64>,
    pub notes: Vec<String>,
}

impl ConditionVerdict {
    fn new(corollary: Corollary, grid: &[f64]) -> Self {
        Self {
            corollary,
            holds: Holds::Inconclusive,
            lambda0_grid: grid.to_vec(),
            probes: Vec::new(),
            r0: None,
            zeta: None,
            lambda_c: None,
            analytic_lambda_c: None,
            proof_threshold: None,
            witness: None,
            notes: Vec::new(),
        }
    }

    pub fn holds(&self) -> bool {
        self.holds == Holds::Holds
    }
}

/// Interference beyond the nearest point of a PPP of density `lambda0`.
#[derive(Debug, Clone, PartialEq)]
pub struct InterferenceFunctional {
    pub model: PathLossModel,
    pub fading: FadingModel,
    pub lambda0: f64,
    gamma: f64,
}

/// Which per-link functional enters the exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kernel {
    /// `E[1 - e^(-t h L)]`
    Laplace,
    /// `P(h L >= t^(-1/2))`
    LargestInterferer,
}

impl InterferenceFunctional {
    /// Checks `lambda0 > 0`, valid fading and a feasible model.
    pub fn new(model: PathLossModel, fading: FadingModel, lambda0: f64) -> Result<Self, ConditionError> {
        if !(lambda0.is_finite() && lambda0 > 0.0) {
            return Err(ConditionError::Precondition(format!("lambda0 must be positive, got {lambda0}")));
        }
        fading.validate()?;
        let report = check_feasibility(&model, &QuadSettings::with_tol(1e-10))?;
        if let Some(p) = report.failed_property {
            return Err(ConditionError::Precondition(format!(
                "model is not physically feasible: property {p} fails"
            )));
        }
        let gamma = gamma_integral(&model, 1e-10)
            .map_err(|e| ConditionError::Precondition(e.to_string()))?
            .value;
        Ok(Self {
            model,
            fading,
            lambda0,
            gamma,
        })
    }

    pub fn with_lambda0(&self, lambda0: f64) -> Result<Self, ConditionError> {
        if !(lambda0.is_finite() && lambda0 > 0.0) {
            return Err(ConditionError::Precondition(format!("lambda0 must be positive, got {lambda0}")));
        }
        Ok(Self { lambda0, ..self.clone() })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    fn psi(&self, kernel: Kernel, t: f64, x: f64) -> f64 {
        let per_gain = |g: f64| {
            if g <= 0.0 || t == 0.0 {
                return 0.0;
            }
            match kernel {
                Kernel::Laplace => self.fading.laplace_complement(t * g),
                Kernel::LargestInterferer => self.fading.ccdf(1.0 / (t.sqrt() * g)),
            }
        };
        match self.model.branches(x) {
            Some((p, los, nlos)) => p * per_gain(los) + (1.0 - p) * per_gain(nlos),
            None => per_gain(self.model.gain(x)),
        }
    }

    /// `∫_0^∞ 2πλ0 r exp(-πλ0 r² - 2πλ0 ∫_r^∞ x ψ_t(x) dx) dr`.
    fn nearest_average(&self, kernel: Kernel, t: f64) -> Result<QuadratureResult, QuadratureError> {
        let lambda0 = self.lambda0;
        let xpsi = |x: f64| x * self.psi(kernel, t, x);
        let breakpoints = self.model.breakpoints();
        let radius = (NEAREST_EXPONENT / (PI * lambda0)).sqrt();

        let mut edges: Vec<f64> = (0..=CELLS).map(|k| radius * k as f64 / CELLS as f64).collect();
        edges.extend(breakpoints.iter().copied().filter(|&b| b > 0.0 && b < radius));
        edges.sort_by(f64::total_cmp);
        edges.dedup();

        let mut evaluations = 0;
        let mut inconclusive = false;
        let tail_settings = QuadSettings::with_tol(INNER_TOL)
            .scale(radius)
            .breakpoints(breakpoints.clone());
        let tail = integrate_semi_infinite_with(xpsi, radius, &tail_settings)?;
        evaluations += tail.evaluations;
        inconclusive |= tail.status == QuadratureStatus::Inconclusive;
        let last = edges.len() - 1;
        let mut suffix = vec![0.0; edges.len()];
        suffix[last] = if tail.is_diverged() { f64::INFINITY } else { tail.value };
        for k in (0..last).rev() {
            let q = integrate_finite(xpsi, edges[k], edges[k + 1], INNER_TOL, 1e-300, 200)?;
            evaluations += q.evaluations;
            inconclusive |= q.status != QuadratureStatus::Converged;
            suffix[k] = suffix[k + 1] + q.value;
        }

        let inner_flag = std::cell::Cell::new(false);
        let inner_evals = std::cell::Cell::new(0usize);
        let tail_from = |r: f64| {
            let k = (edges.partition_point(|&e| e <= r).max(1) - 1).min(last - 1);
            match integrate_finite(xpsi, r, edges[k + 1], INNER_TOL, 1e-300, 200) {
                Ok(q) => {
                    inner_evals.set(inner_evals.get() + q.evaluations);
                    if q.status != QuadratureStatus::Converged {
                        inner_flag.set(true);
                    }
                    suffix[k + 1] + q.value
                }
                Err(_) => f64::NAN,
            }
        };
        let outer = |r: f64| {
            let g = tail_from(r);
            2.0 * PI * lambda0 * r * (-PI * lambda0 * r * r - 2.0 * PI * lambda0 * g).exp()
        };
        let mut q = integrate_finite(outer, 0.0, radius, INNER_TOL, 1e-300, 400)?;
        q.evaluations += evaluations + inner_evals.get();
        if (inconclusive || inner_flag.get()) && q.status == QuadratureStatus::Converged {
            q.status = QuadratureStatus::Inconclusive;
        }
        Ok(q)
    }

    /// Typical interference scale `min(2πλ0γ, L(d₂))`, with `d₂` the
    /// typical distance of the second-nearest point.
    fn typical_interference(&self) -> f64 {
        let d2 = 1.5 / (PI * self.lambda0).sqrt();
        (2.0 * PI * self.lambda0 * self.gamma).min(self.model.gain(d2))
    }

    fn double_integral(&self, kernel: Kernel, tol: f64) -> Result<QuadratureResult, ConditionError> {
        let typical = self.typical_interference().max(f64::MIN_POSITIVE);
        let scale = match kernel {
            Kernel::Laplace => 16.0 / typical,
            Kernel::LargestInterferer => 16.0 / (typical * typical),
        };
        let settings = QuadSettings::with_tol(tol).scale(scale);
        let inner = |t: f64| {
            let mut q = self.nearest_average(kernel, t)?;
            if kernel == Kernel::Laplace {
                q.value *= t;
                q.abs_error_estimate *= t;
            }
            Ok(q)
        };
        Ok(integrate_nested(inner, &settings)?)
    }
}

/// `M_I(-t) = E[e^(-t I)]`.
pub fn interference_laplace(f: &InterferenceFunctional, t: f64) -> Result<f64, ConditionError> {
    if !(t >= 0.0) {
        return Err(ConditionError::Precondition(format!("t must be >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(1.0);
    }
    let q = f.nearest_average(Kernel::Laplace, t)?;
    if q.status != QuadratureStatus::Converged {
        return Err(ConditionError::Precondition(format!(
            "laplace transform quadrature {:?} at t={t}",
            q.status
        )));
    }
    Ok(q.value.min(1.0))
}

/// `E[I^-2] = ∫_0^∞ t M_I(-t) dt`.
pub fn second_negative_moment(f: &InterferenceFunctional) -> Result<QuadratureResult, ConditionError> {
    f.double_integral(Kernel::Laplace, CONDITION_TOL)
}

/// `E[M^-2]` for the largest single interferer `M`; bounds `E[I^-2]` above.
pub fn largest_interferer_moment(f: &InterferenceFunctional) -> Result<QuadratureResult, ConditionError> {
    f.double_integral(Kernel::LargestInterferer, CONDITION_TOL)
}

/// Smallest probe from which every larger probe converged, with the
/// verdict that implies.
fn empirical_threshold(probes: &[Probe]) -> (Option<f64>, Holds) {
    let mut lambda_c = None;
    for p in probes.iter().rev() {
        if p.result.status == QuadratureStatus::Converged {
            lambda_c = Some(p.lambda0);
        } else {
            break;
        }
    }
    match (lambda_c, probes.last()) {
        (Some(_), _) => (lambda_c, Holds::Holds),
        (None, Some(p)) if p.result.status == QuadratureStatus::Inconclusive => (None, Holds::Inconclusive),
        (None, Some(_)) => (None, Holds::Fails),
        (None, None) => (None, Holds::Inconclusive),
    }
}

fn check_grid(grid: &[f64]) -> Result<(), ConditionError> {
    if grid.is_empty() {
        return Err(ConditionError::Precondition("lambda0 grid is empty".into()));
    }
    if !grid.iter().all(|l| l.is_finite() && *l > 0.0) {
        return Err(ConditionError::Precondition("lambda0 probes must be positive".into()));
    }
    if !grid.windows(2).all(|w| w[0] < w[1]) {
        return Err(ConditionError::Precondition("lambda0 grid must be ascending".into()));
    }
    Ok(())
}

/// Corollary-1 double integrals at every probe density. `largest = true`
/// selects the largest-interferer form.
pub fn check_corollary1(
    model: &PathLossModel,
    fading: &FadingModel,
    largest: bool,
    lambda0_grid: &[f64],
) -> Result<ConditionVerdict, ConditionError> {
    check_grid(lambda0_grid)?;
    let base = InterferenceFunctional::new(model.clone(), fading.clone(), lambda0_grid[0])?;
    let (corollary, kernel) = if largest {
        (Corollary::C1b, Kernel::LargestInterferer)
    } else {
        (Corollary::C1a, Kernel::Laplace)
    };
    let mut verdict = ConditionVerdict::new(corollary, lambda0_grid);
    for &lambda0 in lambda0_grid {
        let f = base.with_lambda0(lambda0)?;
        let result = f.double_integral(kernel, CONDITION_TOL)?;
        verdict.probes.push(Probe { lambda0, result });
    }
    let (lambda_c, holds) = empirical_threshold(&verdict.probes);
    verdict.lambda_c = lambda_c;
    verdict.holds = holds;
    Ok(verdict)
}

/// `d ln L / dr`: analytic where available, else a central difference
/// with step `1e-6 max(r, 1)`. At a kink the right derivative is used.
fn log_slope(model: &PathLossModel, r: f64) -> f64 {
    if let Some(s) = model.log_slope(r) {
        return s;
    }
    let right = r * (1.0 + 1e-12) + 1e-300;
    if let Some(s) = model.log_slope(right) {
        return s;
    }
    let h = 1e-6 * r.max(1.0);
    let lo = (r - h).max(0.0);
    (model.ln_gain(r + h) - model.ln_gain(lo)) / (r + h - lo)
}

/// Exact `λc` of the `r / L²` integral: `2α/π` for the Gaussian stretched
/// exponential, zero for every law whose `1 / L²` grows slower than any
/// Gaussian.
pub fn analytic_lambda_c(model: &PathLossModel) -> Option<f64> {
    use PathLossModel::*;
    match *model {
        StretchedExp { alpha, beta, .. } if beta == 2.0 => Some(2.0 * alpha / PI),
        LosNlos(_) => None,
        _ => Some(0.0),
    }
}

/// Ratio-bound scan: `(ζ, argmin, tail non-decreasing, first non-decreasing point)`.
struct RatioScan {
    zeta: f64,
    argmin: f64,
    tail_monotone: bool,
    not_decreasing_at: Option<f64>,
}

fn scan_ratio(model: &PathLossModel, r0: f64) -> RatioScan {
    let mut grid = log_grid(r0, SCAN_MAX, SCAN_POINTS_PER_DECADE);
    grid.extend(model.breakpoints().into_iter().filter(|&b| b >= r0 && b <= SCAN_MAX));
    grid.sort_by(f64::total_cmp);
    let mut zeta = f64::INFINITY;
    let mut argmin = r0;
    let mut not_decreasing_at = None;
    let tail_start = SCAN_MAX / 100.0;
    let mut tail_monotone = true;
    let mut prev_tail: Option<f64> = None;
    for &r in &grid {
        let slope = log_slope(model, r);
        if !(slope < 0.0) {
            not_decreasing_at.get_or_insert(r);
            continue;
        }
        let ratio = -r / slope;
        if ratio < zeta {
            zeta = ratio;
            argmin = r;
        }
        if r >= tail_start {
            if let Some(p) = prev_tail {
                if ratio < p * (1.0 - 1e-9) {
                    tail_monotone = false;
                }
            }
            prev_tail = Some(ratio);
        }
    }
    RatioScan {
        zeta,
        argmin,
        tail_monotone,
        not_decreasing_at,
    }
}

/// `∫_r0^∞ r / L(r)² e^(-πλ0 r²) dr`, evaluated in the log domain.
fn inverse_square_integral(model: &PathLossModel, r0: f64, lambda0: f64) -> Result<QuadratureResult, QuadratureError> {
    let f = |r: f64| {
        if r == 0.0 {
            return 0.0;
        }
        (r.ln() - 2.0 * model.ln_gain(r) - PI * lambda0 * r * r).exp()
    };
    let settings = QuadSettings::with_tol(CONDITION_TOL)
        .scale((1.0 / (PI * lambda0)).sqrt().max(1e-3))
        .breakpoints(model.breakpoints());
    integrate_semi_infinite_with(f, r0, &settings)
}

fn corollary2_core(
    model: &PathLossModel,
    r0: f64,
    lambda0_grid: &[f64],
    corollary: Corollary,
) -> Result<ConditionVerdict, ConditionError> {
    check_grid(lambda0_grid)?;
    if !(r0.is_finite() && r0 > 0.0) {
        return Err(ConditionError::Precondition(format!("r0 must be positive, got {r0}")));
    }
    if !model.is_deterministic() {
        return Err(ConditionError::Precondition(
            "the ratio conditions need a path loss that is deterministic in distance".into(),
        ));
    }
    model.validate()?;
    let mut verdict = ConditionVerdict::new(corollary, lambda0_grid);
    verdict.analytic_lambda_c = analytic_lambda_c(model);

    let mut r0 = r0;
    if let PathLossModel::MinPowerLaw { c0, eta, .. } = *model {
        let kink = c0.powf(-1.0 / eta);
        if r0 < kink {
            verdict.notes.push(format!("r0 moved from {r0} to the kink at {kink}"));
            r0 = kink;
        }
    }
    verdict.r0 = Some(r0);

    let scan = scan_ratio(model, r0);
    let ratio_ok = if let Some(r) = scan.not_decreasing_at {
        verdict.witness = Some(r);
        verdict.notes.push(format!("L is not decreasing at r={r}"));
        false
    } else {
        verdict.zeta = Some(scan.zeta);
        verdict.notes.push(format!("zeta attained at r={}", scan.argmin));
        if scan.zeta < ZETA_FLOOR {
            verdict.witness = Some(scan.argmin);
            verdict.notes.push(format!("zeta {} below {ZETA_FLOOR}", scan.zeta));
        }
        scan.zeta >= ZETA_FLOOR
    };
    if ratio_ok {
        verdict.proof_threshold = Some(1.0 / (PI * scan.zeta));
        if scan.tail_monotone {
            verdict.notes.push(format!("ratio non-decreasing on [{}, {SCAN_MAX}]", SCAN_MAX / 100.0));
        } else {
            verdict.notes.push("ratio still decreasing at the end of the scan".into());
        }
    }

    for &lambda0 in lambda0_grid {
        let result = inverse_square_integral(model, r0, lambda0)?;
        verdict.probes.push(Probe { lambda0, result });
    }
    let (lambda_c, integral_holds) = empirical_threshold(&verdict.probes);
    verdict.lambda_c = lambda_c;
    verdict.holds = match (ratio_ok, integral_holds) {
        (false, _) => Holds::Fails,
        (true, Holds::Holds) if scan.tail_monotone => Holds::Holds,
        (true, Holds::Holds) => Holds::Inconclusive,
        (true, other) => other,
    };
    Ok(verdict)
}

/// Both Rayleigh-fading conditions on `[r0, ∞)`.
pub fn check_corollary2(model: &PathLossModel, r0: f64, lambda0_grid: &[f64]) -> Result<ConditionVerdict, ConditionError> {
    corollary2_core(model, r0, lambda0_grid, Corollary::C2)
}

/// `L̃ <= L` on `[r0, 10⁶]` for every link state, then the Corollary-2
/// conditions on `L̃`.
pub fn check_corollary5(
    model: &PathLossModel,
    lower_bound: &PathLossModel,
    r0: f64,
    lambda0_grid: &[f64],
) -> Result<ConditionVerdict, ConditionError> {
    model.validate()?;
    let mut verdict = corollary2_core(lower_bound, r0, lambda0_grid, Corollary::C5)?;
    let start = verdict.r0.unwrap_or(r0).min(r0);
    let mut grid = log_grid(start, SCAN_MAX, SCAN_POINTS_PER_DECADE);
    grid.extend(model.breakpoints().into_iter().filter(|&b| b >= start && b <= SCAN_MAX));
    for r in grid {
        let lower = lower_bound.ln_gain(r);
        let floor = if model.is_deterministic() {
            model.ln_gain(r)
        } else {
            model.min_gain(r).ln()
        };
        if lower > floor + 1e-12 * floor.abs().max(1.0) {
            verdict.holds = Holds::Fails;
            verdict.witness = Some(r);
            verdict.notes.push(format!("lower bound exceeds the path loss at r={r}"));
            break;
        }
    }
    Ok(verdict)
}

/// The `(L̃, r0)` pair under which each built-in bounded model satisfies
/// the lower-bound conditions.
pub fn table1_condition_pair(model: &PathLossModel) -> Option<(PathLossModel, f64)> {
    use PathLossModel::*;
    match model {
        MinPowerLaw { a, c0, eta } => Some((UnboundedPowerLaw { a: *a, eta: *eta }, 1f64.max(c0.powf(-1.0 / eta)))),
        ShiftedPowerLaw { .. } | ElevatedPowerLaw { .. } | StretchedExp { .. } => Some((model.clone(), 1.0)),
        InversePoly { c0, eta, .. } => Some((model.clone(), c0 * (eta - 2.0) / 2.0)),
        MultiSlope(m) => {
            let tail = m.tail();
            let r0 = 1f64.max(*m.boundaries.last()?);
            let lower = if m.elevation == 0.0 {
                UnboundedPowerLaw { a: tail.a, eta: tail.eta }
            } else {
                ElevatedPowerLaw { a: tail.a, c0: m.elevation, eta: tail.eta }
            };
            Some((lower, r0))
        }
        LosNlos(c) => {
            let tail = c.nlos.tail();
            let r0 = 1f64.max(*c.nlos.boundaries.last()?);
            Some((ElevatedPowerLaw { a: tail.a, c0: c.c0, eta: tail.eta }, r0))
        }
        UnboundedPowerLaw { .. } => None,
    }
}

/// Monte Carlo estimate of `E[I^-2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentOracle {
    pub estimate: Estimate,
    pub n: u64,
    /// Realizations redrawn for an empty interferer set in the window.
    pub redraws: u64,
    pub window: Window,
    /// `e^(-λ0 π R²)`: probability of an empty window per draw.
    pub empty_window_bound: f64,
}

/// Averages `I^-2` over `n` realizations. Realization `i` uses stream
/// `(seed, i)`; results do not depend on the thread count.
pub fn mc_negative_moment_oracle(f: &InterferenceFunctional, n: usize, seed: u64) -> Result<MomentOracle, ConditionError> {
    mc_negative_moment_oracle_with(f, n, seed, ORACLE_MAX_EXPECTED_POINTS)
}

/// [`mc_negative_moment_oracle`] with an explicit window cap.
pub fn mc_negative_moment_oracle_with(
    f: &InterferenceFunctional,
    n: usize,
    seed: u64,
    max_expected_points: f64,
) -> Result<MomentOracle, ConditionError> {
    if n < 1000 {
        return Err(ConditionError::Precondition(format!("oracle needs n >= 1000, got {n}")));
    }
    let window = Window::auto(&f.model, &f.fading, f.lambda0, f.gamma, max_expected_points);
    let l0 = f.model.l_zero();
    let net = Network::new(&f.model, &f.fading, f.lambda0, 1e-6 * l0, window, f.gamma);
    let chunks = n.div_ceil(ORACLE_CHUNK);
    let parts: Vec<(Moments, u64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut m = Moments::default();
            let mut redraws = 0;
            for i in c * ORACLE_CHUNK..((c + 1) * ORACLE_CHUNK).min(n) {
                let mut rng = Network::stream(seed, i as u64);
                let (s, r) = net.sample_with_min(&mut rng, 2);
                redraws += r;
                m.push(s.interference.powi(-2));
            }
            (m, redraws)
        })
        .collect();
    let (moments, redraws) = reduce(&parts);
    Ok(MomentOracle {
        estimate: moments.estimate(n as u64),
        n: n as u64,
        redraws,
        window,
        empty_window_bound: (-window.expected_points).exp(),
    })
}

fn reduce(parts: &[(Moments, u64)]) -> (Moments, u64) {
    match parts.len() {
        1 => parts[0],
        len => {
            let (l, r) = parts.split_at(len / 2);
            let (a, x) = reduce(l);
            let (b, y) = reduce(r);
            (a.merge(&b), x + y)
        }
    }
}
