//! Monte Carlo engine for the typical user of a Poisson downlink.
//!
//! Each realization places a Poisson number of base stations uniformly in a
//! disc of radius `R` around the user at the origin, associates the user to
//! the nearest one and treats everything else as interference. The field
//! beyond `R` is an aggregate of very many weak contributions; it is drawn
//! as a Gaussian with the exact mean `2πλ ∫_R^∞ r E[L] dr` and variance
//! `2πλ E[h²] ∫_R^∞ r E[L²] dr` (clamped at zero).
//!
//! Realization `i` draws from its own ChaCha stream `(seed, i)`, and chunk
//! sums are reduced in a fixed pairwise tree, so estimates depend only on
//! the configuration, never on the number of worker threads.

use std::f64::consts::{LN_2, PI};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use thiserror::Error;

use crate::analytic::{gamma_integral, AnalyticError};
use crate::fading::{FadingModel, FadingSampler};
use crate::models::{check_feasibility, PathLossModel};
use crate::numerics::{integrate_semi_infinite_with, QuadSettings};

/// Realizations per work item.
const CHUNK: usize = 2048;

/// Target tail fraction of the mean received power beyond the window.
pub const TAIL_FRACTION: f64 = 1e-3;

/// Minimum expected number of base stations in the window.
pub const MIN_EXPECTED_POINTS: f64 = 50.0;

/// Default cap on the expected number of base stations in the window.
pub const DEFAULT_MAX_EXPECTED_POINTS: f64 = 2048.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub model: PathLossModel,
    pub fading: FadingModel,
    /// Base-station density per unit area.
    pub lambda: f64,
    /// Noise power, same units as the gain.
    pub n0: f64,
    /// Explicit window radius; `None` applies the auto rule.
    pub window_radius: Option<f64>,
    /// Cap on `λπR²` used by the auto rule.
    pub max_expected_points: f64,
    pub realizations: usize,
    pub seed: u64,
    /// SINR thresholds, linear scale.
    pub theta0: Vec<f64>,
}

impl SimConfig {
    /// Defaults: `n0 = 1e-6 L0` (or `1e-6` when `L0` is unbounded), 1e5
    /// realizations, seed 0, `θ0 = [1]`.
    pub fn new(model: PathLossModel, fading: FadingModel, lambda: f64) -> Self {
        let l0 = model.l_zero();
        let n0 = if l0.is_finite() { 1e-6 * l0 } else { 1e-6 };
        Self {
            model,
            fading,
            lambda,
            n0,
            window_radius: None,
            max_expected_points: DEFAULT_MAX_EXPECTED_POINTS,
            realizations: 100_000,
            seed: 0,
            theta0: vec![1.0],
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        if let Err(e) = self.model.validate() {
            return bad(e.to_string());
        }
        if let Err(e) = self.fading.validate() {
            return bad(e.to_string());
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return bad(format!("lambda must be positive, got {}", self.lambda));
        }
        if !(self.n0.is_finite() && self.n0 > 0.0) {
            return bad(format!("n0 must be positive, got {}", self.n0));
        }
        if self.realizations < 100 {
            return bad(format!("realizations must be >= 100, got {}", self.realizations));
        }
        if let Some(r) = self.window_radius {
            if !(r.is_finite() && r > 0.0) {
                return bad(format!("window_radius must be positive, got {r}"));
            }
            if self.lambda * PI * r * r < MIN_EXPECTED_POINTS {
                return bad(format!(
                    "window_radius {r} holds fewer than {MIN_EXPECTED_POINTS} expected base stations"
                ));
            }
        }
        if !(self.max_expected_points >= MIN_EXPECTED_POINTS) {
            return bad(format!("max_expected_points must be >= {MIN_EXPECTED_POINTS}"));
        }
        if let Some(t) = self.theta0.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
            return bad(format!("theta0 entries must be finite and >= 0, got {t}"));
        }
        Ok(())
    }
}

/// Simulation window and the statistics of the field beyond it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub radius: f64,
    pub expected_points: f64,
    /// Mean received power from beyond the window.
    pub tail_mean: f64,
    /// Standard deviation of the received power from beyond the window.
    pub tail_std: f64,
    /// `tail_mean / (2πλγ)`.
    pub tail_fraction: f64,
    /// `tail_std / (2πλγ)`.
    pub tail_cv: f64,
}

fn tail_integral<F: Fn(f64) -> f64>(f: F, model: &PathLossModel, from: f64) -> f64 {
    let settings = QuadSettings::with_tol(1e-9)
        .scale(from.max(1e-3))
        .breakpoints(model.breakpoints());
    integrate_semi_infinite_with(f, from, &settings)
        .map(|q| q.value)
        .unwrap_or(f64::NAN)
}

/// `E_state[L(r)²]`.
fn mean_square_gain(model: &PathLossModel, r: f64) -> f64 {
    match model.branches(r) {
        Some((p, los, nlos)) => p * los * los + (1.0 - p) * nlos * nlos,
        None => model.gain(r).powi(2),
    }
}

impl Window {
    /// Window of radius `radius` for density `lambda`.
    pub fn with_radius(model: &PathLossModel, fading: &FadingModel, lambda: f64, gamma: f64, radius: f64) -> Self {
        let mean_tail = 2.0 * PI * lambda * tail_integral(|r| r * model.gain(r), model, radius);
        let var_tail = 2.0 * PI * lambda * fading.second_moment()
            * tail_integral(|r| r * mean_square_gain(model, r), model, radius);
        let total = 2.0 * PI * lambda * gamma;
        Self {
            radius,
            expected_points: lambda * PI * radius * radius,
            tail_mean: mean_tail,
            tail_std: var_tail.max(0.0).sqrt(),
            tail_fraction: mean_tail / total,
            tail_cv: var_tail.max(0.0).sqrt() / total,
        }
    }

    /// Smallest radius whose tail fraction is below [`TAIL_FRACTION`] and
    /// that holds at least [`MIN_EXPECTED_POINTS`], capped at
    /// `max_expected_points`.
    pub fn auto(model: &PathLossModel, fading: &FadingModel, lambda: f64, gamma: f64, max_expected_points: f64) -> Self {
        let fraction = |r: f64| tail_integral(|x| x * model.gain(x), model, r) / gamma;
        let mut hi = 1.0;
        while fraction(hi) >= TAIL_FRACTION && hi < 1e12 {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if fraction(mid) < TAIL_FRACTION {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let floor = (MIN_EXPECTED_POINTS / (lambda * PI)).sqrt();
        let cap = (max_expected_points / (lambda * PI)).sqrt();
        let radius = hi.min(cap).max(floor);
        Self::with_radius(model, fading, lambda, gamma, radius)
    }
}

/// Signal and interference seen by the typical user in one realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrSample {
    /// Distance to the serving (nearest) base station.
    pub r0: f64,
    pub signal: f64,
    /// Interference from all other base stations, including the far field.
    pub interference: f64,
    pub sinr: f64,
    /// Base stations inside the window, serving one included.
    pub in_window: usize,
}

impl SinrSample {
    /// SINR from an explicit point set of `(distance, fading power)` pairs.
    /// Returns `None` for an empty set.
    pub fn from_points(model: &PathLossModel, points: &[(f64, f64)], n0: f64, extra_interference: f64) -> Option<Self> {
        let mut best: Option<(f64, f64)> = None;
        let mut interference = extra_interference;
        for &(r, h) in points {
            let p = h * model.gain(r);
            match best {
                Some((br, bp)) if r >= br => {
                    let _ = bp;
                    interference += p;
                }
                Some((_, bp)) => {
                    interference += bp;
                    best = Some((r, p));
                }
                None => best = Some((r, p)),
            }
        }
        let (r0, signal) = best?;
        Some(Self {
            r0,
            signal,
            interference,
            sinr: signal / (interference + n0),
            in_window: points.len(),
        })
    }

    /// Total received power from every base station.
    pub fn total_power(&self) -> f64 {
        self.signal + self.interference
    }
}

/// A resolved configuration ready for sampling.
#[derive(Debug, Clone)]
pub struct Network {
    pub model: PathLossModel,
    pub fading: FadingModel,
    pub lambda: f64,
    pub n0: f64,
    pub window: Window,
    pub gamma: f64,
    sampler: FadingSampler,
    poisson: Poisson<f64>,
}

impl Network {
    pub fn new(model: &PathLossModel, fading: &FadingModel, lambda: f64, n0: f64, window: Window, gamma: f64) -> Self {
        Self {
            model: model.clone(),
            fading: fading.clone(),
            lambda,
            n0,
            window,
            gamma,
            sampler: fading.sampler(),
            poisson: Poisson::new(window.expected_points).expect("positive expected count"),
        }
    }

    /// Resolves `γ` and the window for a validated config.
    pub fn from_config(cfg: &SimConfig) -> Result<Self, SimError> {
        cfg.validate()?;
        let report = check_feasibility(&cfg.model, &QuadSettings::with_tol(1e-10)).map_err(AnalyticError::from)?;
        if let Some(property) = report.failed_property {
            return Err(AnalyticError::Infeasible { property }.into());
        }
        let gamma = gamma_integral(&cfg.model, 1e-10)?.value;
        let window = match cfg.window_radius {
            Some(r) => Window::with_radius(&cfg.model, &cfg.fading, cfg.lambda, gamma, r),
            None => Window::auto(&cfg.model, &cfg.fading, cfg.lambda, gamma, cfg.max_expected_points),
        };
        Ok(Self::new(&cfg.model, &cfg.fading, cfg.lambda, cfg.n0, window, gamma))
    }

    /// Random stream of realization `index`.
    pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        rng
    }

    fn far_field<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        (self.window.tail_mean + self.window.tail_std * z).max(0.0)
    }

    /// One realization with at least `min_points` base stations in the
    /// window; returns the sample and the number of redraws.
    pub fn sample_with_min<R: Rng + ?Sized>(&self, rng: &mut R, min_points: usize) -> (SinrSample, u64) {
        let radius = self.window.radius;
        let mut redraws = 0;
        loop {
            let n = self.poisson.sample(rng) as usize;
            if n < min_points.max(1) {
                redraws += 1;
                continue;
            }
            let mut best_r = f64::INFINITY;
            let mut best_p = 0.0;
            let mut interference = 0.0;
            for _ in 0..n {
                let r = radius * rng.gen::<f64>().sqrt();
                let p = self.sampler.sample(rng) * self.model.sample_link_gain(r, rng);
                if r < best_r {
                    interference += best_p;
                    best_r = r;
                    best_p = p;
                } else {
                    interference += p;
                }
            }
            interference += self.far_field(rng);
            let sample = SinrSample {
                r0: best_r,
                signal: best_p,
                interference,
                sinr: best_p / (interference + self.n0),
                in_window: n,
            };
            return (sample, redraws);
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (SinrSample, u64) {
        self.sample_with_min(rng, 1)
    }
}

/// One realization of the network described by `cfg`.
pub fn sample_realization<R: Rng + ?Sized>(cfg: &SimConfig, rng: &mut R) -> Result<SinrSample, SimError> {
    Ok(Network::from_config(cfg)?.sample(rng).0)
}

/// Running sum and sum of squares.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    #[inline]
    pub(crate) fn push(&mut self, x: f64) {
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub(crate) fn merge(&self, other: &Self) -> Self {
        Self {
            sum: self.sum + other.sum,
            sum_sq: self.sum_sq + other.sum_sq,
        }
    }

    pub(crate) fn estimate(&self, n: u64) -> Estimate {
        let nf = n as f64;
        let mean = self.sum / nf;
        let var = ((self.sum_sq - self.sum * mean) / (nf - 1.0)).max(0.0);
        Estimate {
            mean,
            std_error: (var / nf).sqrt(),
        }
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

impl Estimate {
    /// Half-width of the normal confidence interval for `|a - b|`.
    pub fn combined_ci(&self, other: &Self, z: f64) -> f64 {
        z * (self.std_error.powi(2) + other.std_error.powi(2)).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Accumulator {
    n: u64,
    redraws: u64,
    ase: Moments,
    constrained: Vec<Moments>,
    potential: Vec<Moments>,
    covered: Vec<u64>,
    scaled_sinr: Moments,
    total_power: Moments,
}

impl Accumulator {
    fn new(k: usize) -> Self {
        Self {
            n: 0,
            redraws: 0,
            ase: Moments::default(),
            constrained: vec![Moments::default(); k],
            potential: vec![Moments::default(); k],
            covered: vec![0; k],
            scaled_sinr: Moments::default(),
            total_power: Moments::default(),
        }
    }

    fn merge(&self, other: &Self) -> Self {
        let zip = |a: &[Moments], b: &[Moments]| a.iter().zip(b).map(|(x, y)| x.merge(y)).collect();
        Self {
            n: self.n + other.n,
            redraws: self.redraws + other.redraws,
            ase: self.ase.merge(&other.ase),
            constrained: zip(&self.constrained, &other.constrained),
            potential: zip(&self.potential, &other.potential),
            covered: self.covered.iter().zip(&other.covered).map(|(a, b)| a + b).collect(),
            scaled_sinr: self.scaled_sinr.merge(&other.scaled_sinr),
            total_power: self.total_power.merge(&other.total_power),
        }
    }
}

/// Pairwise reduction with a tree fixed by the slice length.
fn tree_reduce(parts: &[Accumulator]) -> Accumulator {
    match parts.len() {
        1 => parts[0].clone(),
        n => {
            let (l, r) = parts.split_at(n / 2);
            tree_reduce(l).merge(&tree_reduce(r))
        }
    }
}

/// Throughput metrics at one density.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricEstimate {
    pub lambda: f64,
    pub theta0: Vec<f64>,
    /// `λ E[log2(1 + SINR)]`.
    pub ase: Estimate,
    /// `λ E[log2(1 + SINR) 1{SINR ≥ θ0}]`, per threshold.
    pub constrained_ase: Vec<Estimate>,
    /// `λ log2(1 + θ0) P(SINR ≥ θ0)`, per threshold.
    pub potential_throughput: Vec<Estimate>,
    /// `P(SINR ≥ θ0)`, per threshold.
    pub coverage: Vec<Estimate>,
    /// Exact coverage counts behind `coverage`.
    pub covered: Vec<u64>,
    /// `λ E[SINR]`.
    pub scaled_sinr: Estimate,
    /// Total received power from all base stations.
    pub total_power: Estimate,
    pub n: u64,
    /// Realizations redrawn because the window was empty.
    pub redraws: u64,
    pub window: Window,
    pub gamma: f64,
}

/// Runs `cfg.realizations` independent realizations and aggregates the
/// three throughput metrics. Uses the ambient rayon pool.
pub fn estimate_metrics(cfg: &SimConfig) -> Result<MetricEstimate, SimError> {
    let net = Network::from_config(cfg)?;
    Ok(run(&net, cfg))
}

fn run(net: &Network, cfg: &SimConfig) -> MetricEstimate {
    let k = cfg.theta0.len();
    let lambda = cfg.lambda;
    let fixed_rate: Vec<f64> = cfg.theta0.iter().map(|t| lambda * t.ln_1p() / LN_2).collect();
    let chunks = cfg.realizations.div_ceil(CHUNK);

    let parts: Vec<Accumulator> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = Accumulator::new(k);
            let start = c * CHUNK;
            let end = (start + CHUNK).min(cfg.realizations);
            for i in start..end {
                let mut rng = Network::stream(cfg.seed, i as u64);
                let (s, redraws) = net.sample(&mut rng);
                acc.n += 1;
                acc.redraws += redraws;
                let ase = lambda * s.sinr.ln_1p() / LN_2;
                acc.ase.push(ase);
                for j in 0..k {
                    let hit = s.sinr >= cfg.theta0[j];
                    acc.constrained[j].push(if hit { ase } else { 0.0 });
                    acc.potential[j].push(if hit { fixed_rate[j] } else { 0.0 });
                    acc.covered[j] += hit as u64;
                }
                acc.scaled_sinr.push(lambda * s.sinr);
                acc.total_power.push(s.total_power());
            }
            acc
        })
        .collect();
    let acc = tree_reduce(&parts);
    let n = acc.n;
    let coverage = acc
        .covered
        .iter()
        .map(|&c| {
            let p = c as f64 / n as f64;
            Estimate {
                mean: p,
                std_error: (p * (1.0 - p) / (n as f64 - 1.0)).sqrt(),
            }
        })
        .collect();
    MetricEstimate {
        lambda,
        theta0: cfg.theta0.clone(),
        ase: acc.ase.estimate(n),
        constrained_ase: acc.constrained.iter().map(|m| m.estimate(n)).collect(),
        potential_throughput: acc.potential.iter().map(|m| m.estimate(n)).collect(),
        coverage,
        covered: acc.covered.clone(),
        scaled_sinr: acc.scaled_sinr.estimate(n),
        total_power: acc.total_power.estimate(n),
        n,
        redraws: acc.redraws,
        window: net.window,
        gamma: net.gamma,
    }
}

/// One point of a density sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub lambda: f64,
    pub metrics: MetricEstimate,
}

/// Runs the template at every density of `lambda_grid` with the same
/// model, fading, thresholds and seed.
pub fn lambda_sweep(template: &SimConfig, lambda_grid: &[f64]) -> Result<Vec<SweepPoint>, SimError> {
    validate_grid(lambda_grid)?;
    lambda_grid
        .iter()
        .map(|&lambda| {
            let cfg = SimConfig {
                lambda,
                ..template.clone()
            };
            Ok(SweepPoint {
                lambda,
                metrics: estimate_metrics(&cfg)?,
            })
        })
        .collect()
}

/// Sweep grids are ascending, have at least four points and span at least
/// three decades.
pub fn validate_grid(grid: &[f64]) -> Result<(), SimError> {
    let bad = |m: &str| Err(SimError::InvalidConfig(m.to_string()));
    if grid.len() < 4 {
        return bad("sweep grid needs at least 4 densities");
    }
    if !grid.iter().all(|l| l.is_finite() && *l > 0.0) {
        return bad("sweep densities must be positive");
    }
    if !grid.windows(2).all(|w| w[0] < w[1]) {
        return bad("sweep grid must be strictly ascending");
    }
    if grid[grid.len() - 1] / grid[0] < 1e3 * (1.0 - 1e-12) {
        return bad("sweep grid must span at least three decades");
    }
    Ok(())
}

/// Runs `f` on a dedicated pool with `threads` workers.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .expect("thread pool")
        .install(f)
}
