//! Path-loss models and the feasibility gate.
//!
//! Gains are dimensionless linear power ratios and distances are in
//! normalized units. A model is *feasible* when it has a finite gain at the
//! origin, never exceeds that gain, and has a finite area integral
//! `γ = ∫_0^∞ r L(r) dr`.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{integrate_semi_infinite_with, QuadSettings, QuadratureError, QuadratureStatus};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("distance must be non-negative, got {0}")]
    NegativeDistance(f64),
    #[error("area integral did not converge (status {status:?}, value {value})")]
    GammaInconclusive { status: QuadratureStatus, value: f64 },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// One segment of a multi-slope model: `A (r² + c²)^(-η/2)` on its interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub a: f64,
    pub eta: f64,
}

/// Piecewise power law `Σ A_i (r² + c²)^(-η_i/2) 1{r_(i-1) ≤ r < r_i}`
/// with `r_0 = 0` and `r_n = ∞`. `elevation = 0` gives the plain
/// multi-slope law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiSlope {
    pub segments: Vec<Segment>,
    /// Interior boundaries `r_1 < … < r_(n-1)`.
    pub boundaries: Vec<f64>,
    #[serde(default)]
    pub elevation: f64,
}

/// Adjacent multi-slope segments that disagree at their shared boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuityWarning {
    pub boundary: f64,
    pub left: f64,
    pub right: f64,
    pub relative_mismatch: f64,
}

impl MultiSlope {
    pub fn new(segments: Vec<Segment>, boundaries: Vec<f64>) -> Self {
        Self {
            segments,
            boundaries,
            elevation: 0.0,
        }
    }

    pub fn with_elevation(mut self, elevation: f64) -> Self {
        self.elevation = elevation;
        self
    }

    /// Builds a continuous profile from exponents and boundaries, choosing
    /// each amplitude so adjacent segments meet.
    pub fn continuous(a1: f64, exponents: &[f64], boundaries: &[f64]) -> Self {
        let mut segments = vec![Segment { a: a1, eta: exponents[0] }];
        for (i, &eta) in exponents.iter().enumerate().skip(1) {
            let b = boundaries[i - 1];
            let prev = &segments[i - 1];
            let a = prev.a * b.powf(eta - prev.eta);
            segments.push(Segment { a, eta });
        }
        Self::new(segments, boundaries.to_vec())
    }

    fn validate(&self) -> Result<(), ModelError> {
        let n = self.segments.len();
        if n < 2 {
            return Err(invalid("multi-slope needs at least two segments"));
        }
        if self.boundaries.len() != n - 1 {
            return Err(invalid(format!(
                "multi-slope with {n} segments needs {} boundaries, got {}",
                n - 1,
                self.boundaries.len()
            )));
        }
        if !self.boundaries.iter().all(|b| b.is_finite() && *b > 0.0) {
            return Err(invalid("multi-slope boundaries must be positive and finite"));
        }
        if !self.boundaries.windows(2).all(|w| w[0] < w[1]) {
            return Err(invalid("multi-slope boundaries must be strictly increasing"));
        }
        for (i, s) in self.segments.iter().enumerate() {
            positive(&format!("segments[{i}].a"), s.a)?;
            if !(s.eta.is_finite() && s.eta >= 0.0) {
                return Err(invalid(format!("segments[{i}].eta must be >= 0, got {}", s.eta)));
            }
        }
        if !(self.elevation.is_finite() && self.elevation >= 0.0) {
            return Err(invalid("elevation must be >= 0"));
        }
        Ok(())
    }

    fn segment_index(&self, r: f64) -> usize {
        self.boundaries.partition_point(|&b| b <= r)
    }

    pub fn gain_with_elevation(&self, r: f64, elevation: f64) -> f64 {
        let s = &self.segments[self.segment_index(r)];
        if elevation == 0.0 {
            s.a * pow(r, -s.eta)
        } else {
            s.a * pow(r * r + elevation * elevation, -0.5 * s.eta)
        }
    }

    pub fn gain(&self, r: f64) -> f64 {
        self.gain_with_elevation(r, self.elevation)
    }

    fn log_slope(&self, r: f64) -> f64 {
        let s = &self.segments[self.segment_index(r)];
        let c = self.elevation;
        -s.eta * r / (r * r + c * c)
    }

    pub fn continuity_warnings(&self) -> Vec<ContinuityWarning> {
        self.boundaries
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| {
                let seg = |s: &Segment| {
                    if self.elevation == 0.0 {
                        s.a * pow(b, -s.eta)
                    } else {
                        s.a * pow(b * b + self.elevation * self.elevation, -0.5 * s.eta)
                    }
                };
                let left = seg(&self.segments[i]);
                let right = seg(&self.segments[i + 1]);
                let mismatch = (left - right).abs() / left.abs().max(right.abs());
                (mismatch > 0.01).then_some(ContinuityWarning {
                    boundary: b,
                    left,
                    right,
                    relative_mismatch: mismatch,
                })
            })
            .collect()
    }

    pub fn tail(&self) -> &Segment {
        self.segments.last().expect("validated multi-slope has segments")
    }
}

/// Line-of-sight probability as a function of distance. All shapes are
/// non-increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum LosProbability {
    /// `e^(-r/μ)`
    ExpDecay { mu: f64 },
    /// `min(d/r, 1)`
    Clamp { d: f64 },
    Constant { p: f64 },
}

impl LosProbability {
    pub fn at(&self, r: f64) -> f64 {
        match *self {
            LosProbability::ExpDecay { mu } => (-r / mu).exp(),
            LosProbability::Clamp { d } => {
                if r <= d {
                    1.0
                } else {
                    d / r
                }
            }
            LosProbability::Constant { p } => p,
        }
    }

    fn validate(&self) -> Result<(), ModelError> {
        match *self {
            LosProbability::ExpDecay { mu } => positive("p_los.mu", mu),
            LosProbability::Clamp { d } => positive("p_los.d", d),
            LosProbability::Constant { p } => {
                if (0.0..=1.0).contains(&p) {
                    Ok(())
                } else {
                    Err(invalid(format!("p_los.p must lie in [0, 1], got {p}")))
                }
            }
        }
    }
}

/// Links are LoS with probability `p_los(r)`, independently per link.
/// Both branches are evaluated with the common elevation `c0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LosNlosComposite {
    pub los: MultiSlope,
    pub nlos: MultiSlope,
    pub p_los: LosProbability,
    pub c0: f64,
}

impl LosNlosComposite {
    pub fn new(los: MultiSlope, nlos: MultiSlope, p_los: LosProbability, c0: f64) -> Self {
        Self {
            los: los.with_elevation(c0),
            nlos: nlos.with_elevation(c0),
            p_los,
            c0,
        }
    }

    pub fn los_gain(&self, r: f64) -> f64 {
        self.los.gain_with_elevation(r, self.c0)
    }

    pub fn nlos_gain(&self, r: f64) -> f64 {
        self.nlos.gain_with_elevation(r, self.c0)
    }

    fn validate(&self) -> Result<(), ModelError> {
        self.los.validate()?;
        self.nlos.validate()?;
        self.p_los.validate()?;
        positive("c0", self.c0)?;
        for (name, branch) in [("los", &self.los), ("nlos", &self.nlos)] {
            if branch.elevation != 0.0 && branch.elevation != self.c0 {
                return Err(invalid(format!(
                    "{name}.elevation {} conflicts with composite c0 {}",
                    branch.elevation, self.c0
                )));
            }
        }
        Ok(())
    }
}

/// The path-loss family. Every variant except [`UnboundedPowerLaw`] is
/// bounded for valid parameters (multi-slope only when its first exponent
/// is zero or it has an elevation).
///
/// [`UnboundedPowerLaw`]: PathLossModel::UnboundedPowerLaw
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PathLossModel {
    /// `A r^(-η)`; reference only, never feasible.
    UnboundedPowerLaw { a: f64, eta: f64 },
    /// `A min(c0, r^(-η))`
    MinPowerLaw { a: f64, c0: f64, eta: f64 },
    /// `A (c0 + r)^(-η)`
    ShiftedPowerLaw { a: f64, c0: f64, eta: f64 },
    /// `A (c0 + r^η)^(-1)`
    InversePoly { a: f64, c0: f64, eta: f64 },
    /// `A (c0² + r²)^(-η/2)`
    ElevatedPowerLaw { a: f64, c0: f64, eta: f64 },
    /// `A exp(-α r^β)`
    StretchedExp { a: f64, alpha: f64, beta: f64 },
    MultiSlope(MultiSlope),
    LosNlos(LosNlosComposite),
}

fn invalid(msg: impl Into<String>) -> ModelError {
    ModelError::InvalidParameter(msg.into())
}

fn positive(name: &str, v: f64) -> Result<(), ModelError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

/// `x^e`, through `powi` for small integral exponents.
#[inline]
pub(crate) fn pow(x: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else if e.fract() == 0.0 && e.abs() <= 32.0 {
        x.powi(e as i32)
    } else {
        x.powf(e)
    }
}

impl PathLossModel {
    pub fn validate(&self) -> Result<(), ModelError> {
        use PathLossModel::*;
        match self {
            UnboundedPowerLaw { a, eta } => {
                positive("a", *a)?;
                positive("eta", *eta)
            }
            MinPowerLaw { a, c0, eta }
            | ShiftedPowerLaw { a, c0, eta }
            | InversePoly { a, c0, eta }
            | ElevatedPowerLaw { a, c0, eta } => {
                positive("a", *a)?;
                positive("c0", *c0)?;
                positive("eta", *eta)
            }
            StretchedExp { a, alpha, beta } => {
                positive("a", *a)?;
                positive("alpha", *alpha)?;
                positive("beta", *beta)?;
                if *beta > 2.0 {
                    return Err(invalid(format!("beta must lie in (0, 2], got {beta}")));
                }
                Ok(())
            }
            MultiSlope(m) => m.validate(),
            LosNlos(c) => c.validate(),
        }
    }

    /// Mean channel gain at distance `r`; composites return the
    /// state-averaged gain.
    pub fn eval(&self, r: f64) -> Result<f64, ModelError> {
        if r.is_nan() || r < 0.0 {
            return Err(ModelError::NegativeDistance(r));
        }
        Ok(self.gain(r))
    }

    /// Unchecked [`eval`](Self::eval) for hot loops; `r` must be `>= 0`.
    #[inline]
    pub fn gain(&self, r: f64) -> f64 {
        use PathLossModel::*;
        match self {
            UnboundedPowerLaw { a, eta } => a * pow(r, -eta),
            MinPowerLaw { a, c0, eta } => a * c0.min(pow(r, -eta)),
            ShiftedPowerLaw { a, c0, eta } => a * pow(c0 + r, -eta),
            InversePoly { a, c0, eta } => a / (c0 + pow(r, *eta)),
            ElevatedPowerLaw { a, c0, eta } => a * pow(c0 * c0 + r * r, -0.5 * eta),
            StretchedExp { a, alpha, beta } => a * (-alpha * pow(r, *beta)).exp(),
            MultiSlope(m) => m.gain(r),
            LosNlos(c) => {
                let p = c.p_los.at(r);
                p * c.los_gain(r) + (1.0 - p) * c.nlos_gain(r)
            }
        }
    }

    /// `ln L(r)`, evaluated without forming `L(r)` where that would
    /// underflow.
    pub fn ln_gain(&self, r: f64) -> f64 {
        use PathLossModel::*;
        match self {
            UnboundedPowerLaw { a, eta } => a.ln() - eta * r.ln(),
            MinPowerLaw { a, c0, eta } => a.ln() + c0.ln().min(-eta * r.ln()),
            ShiftedPowerLaw { a, c0, eta } => a.ln() - eta * (c0 + r).ln(),
            InversePoly { a, c0, eta } => {
                let t = eta * r.ln();
                // ln(c0 + r^η) without overflowing r^η
                let ln_den = if t > c0.ln() {
                    t + (1.0 + c0 * (-t).exp()).ln()
                } else {
                    c0.ln() + (1.0 + (t - c0.ln()).exp()).ln()
                };
                a.ln() - ln_den
            }
            ElevatedPowerLaw { a, c0, eta } => a.ln() - 0.5 * eta * (c0 * c0 + r * r).ln(),
            StretchedExp { a, alpha, beta } => a.ln() - alpha * pow(r, *beta),
            MultiSlope(_) | LosNlos(_) => self.gain(r).ln(),
        }
    }

    /// Analytic `d ln L / dr` for models that are deterministic and
    /// differentiable at `r`.
    pub fn log_slope(&self, r: f64) -> Option<f64> {
        use PathLossModel::*;
        match self {
            UnboundedPowerLaw { eta, .. } => Some(-eta / r),
            MinPowerLaw { c0, eta, .. } => {
                let crossover = c0.powf(-1.0 / eta);
                if r > crossover {
                    Some(-eta / r)
                } else if r < crossover {
                    Some(0.0)
                } else {
                    None
                }
            }
            ShiftedPowerLaw { c0, eta, .. } => Some(-eta / (c0 + r)),
            InversePoly { c0, eta, .. } => {
                let re = pow(r, *eta);
                if re.is_infinite() {
                    Some(-eta / r)
                } else {
                    Some(-eta * re / (r * (c0 + re)))
                }
            }
            ElevatedPowerLaw { c0, eta, .. } => Some(-eta * r / (c0 * c0 + r * r)),
            StretchedExp { alpha, beta, .. } => Some(-alpha * beta * pow(r, beta - 1.0)),
            MultiSlope(m) => {
                if m.boundaries.contains(&r) {
                    None
                } else {
                    Some(m.log_slope(r))
                }
            }
            LosNlos(_) => None,
        }
    }

    /// `L(0)`; infinite for the unbounded power law.
    pub fn l_zero(&self) -> f64 {
        match self {
            PathLossModel::UnboundedPowerLaw { .. } => f64::INFINITY,
            _ => self.gain(0.0),
        }
    }

    /// Kinks and jumps of `L`, used as quadrature breakpoints.
    pub fn breakpoints(&self) -> Vec<f64> {
        use PathLossModel::*;
        match self {
            MinPowerLaw { c0, eta, .. } => vec![c0.powf(-1.0 / eta)],
            MultiSlope(m) => m.boundaries.clone(),
            LosNlos(c) => {
                let mut v: Vec<f64> = c.los.boundaries.iter().chain(&c.nlos.boundaries).copied().collect();
                if let LosProbability::Clamp { d } = c.p_los {
                    v.push(d);
                }
                v.sort_by(f64::total_cmp);
                v.dedup();
                v
            }
            _ => Vec::new(),
        }
    }

    pub fn is_deterministic(&self) -> bool {
        !matches!(self, PathLossModel::LosNlos(_))
    }

    /// Smallest gain any link state can produce at `r`.
    pub fn min_gain(&self, r: f64) -> f64 {
        match self {
            PathLossModel::LosNlos(c) => c.los_gain(r).min(c.nlos_gain(r)),
            _ => self.gain(r),
        }
    }

    /// Largest gain any link state can produce at `r`.
    pub fn max_gain(&self, r: f64) -> f64 {
        match self {
            PathLossModel::LosNlos(c) => c.los_gain(r).max(c.nlos_gain(r)),
            _ => self.gain(r),
        }
    }

    /// Link-state branches `(p_los, los gain, nlos gain)`; `None` for
    /// deterministic models.
    pub fn branches(&self, r: f64) -> Option<(f64, f64, f64)> {
        match self {
            PathLossModel::LosNlos(c) => Some((c.p_los.at(r), c.los_gain(r), c.nlos_gain(r))),
            _ => None,
        }
    }

    /// Gain of one link: draws the LoS state for composites, otherwise the
    /// deterministic gain.
    #[inline]
    pub fn sample_link_gain<R: Rng + ?Sized>(&self, r: f64, rng: &mut R) -> f64 {
        match self {
            PathLossModel::LosNlos(c) => {
                if rng.gen::<f64>() < c.p_los.at(r) {
                    c.los_gain(r)
                } else {
                    c.nlos_gain(r)
                }
            }
            _ => self.gain(r),
        }
    }

    /// Quadrature settings tuned to this model's kinks.
    pub fn quad_settings(&self, tol: f64) -> QuadSettings {
        QuadSettings::with_tol(tol).breakpoints(self.breakpoints())
    }

    /// Short human-readable label.
    pub fn label(&self) -> String {
        use PathLossModel::*;
        match self {
            UnboundedPowerLaw { a, eta } => format!("UnboundedPowerLaw{{A={a}, eta={eta}}}"),
            MinPowerLaw { a, c0, eta } => format!("MinPowerLaw{{A={a}, c0={c0}, eta={eta}}}"),
            ShiftedPowerLaw { a, c0, eta } => format!("ShiftedPowerLaw{{A={a}, c0={c0}, eta={eta}}}"),
            InversePoly { a, c0, eta } => format!("InversePoly{{A={a}, c0={c0}, eta={eta}}}"),
            ElevatedPowerLaw { a, c0, eta } => format!("ElevatedPowerLaw{{A={a}, c0={c0}, eta={eta}}}"),
            StretchedExp { a, alpha, beta } => {
                format!("StretchedExp{{A={a}, alpha={alpha}, beta={beta}}}")
            }
            MultiSlope(m) => format!("MultiSlope{{n={}}}", m.segments.len()),
            LosNlos(c) => format!(
                "LosNlos{{c0={}, n_los={}, n_nlos={}}}",
                c.c0,
                c.los.segments.len(),
                c.nlos.segments.len()
            ),
        }
    }
}

/// Outcome of the three-property feasibility test.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub l_zero: f64,
    pub bounded: bool,
    /// Non-increasing by a per-variant argument (the scan runs regardless).
    pub analytic_monotone: bool,
    /// `Some(γ)` when the area integral converged to a positive value.
    pub gamma: Option<f64>,
    pub gamma_status: Option<QuadratureStatus>,
    pub feasible: bool,
    /// First failing property (1, 2 or 3).
    pub failed_property: Option<u8>,
    /// Distance at which the bound `L(r) <= L0` was violated.
    pub bound_witness: Option<f64>,
}

/// Points per decade of the boundedness scan.
pub const SCAN_POINTS_PER_DECADE: usize = 1000;

/// Log grid on `[lo, hi]` with `per_decade` points per decade.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let n = (decades * per_decade as f64).ceil() as usize;
    (0..=n)
        .map(|i| lo * 10f64.powf(decades * i as f64 / n as f64))
        .collect()
}

fn analytically_nonincreasing(model: &PathLossModel) -> bool {
    use PathLossModel::*;
    match model {
        MinPowerLaw { .. }
        | ShiftedPowerLaw { .. }
        | InversePoly { .. }
        | ElevatedPowerLaw { .. }
        | StretchedExp { .. } => true,
        // non-increasing iff every segment is and no boundary jumps up
        MultiSlope(m) => m.continuity_warnings().iter().all(|w| w.right <= w.left),
        _ => false,
    }
}

/// Checks finite `L0`, `L(r) <= L0` and finite positive `γ`.
///
/// Boundedness uses the analytic argument where one exists and always a
/// scan of `r = 0` plus a log grid over `[1e-6, 1e6]`. For composites every
/// link state is scanned. Divergence of `γ` fails property 3; an
/// inconclusive quadrature is an error.
pub fn check_feasibility(
    model: &PathLossModel,
    quad: &QuadSettings,
) -> Result<FeasibilityReport, ModelError> {
    model.validate()?;
    let l_zero = model.l_zero();
    let finite_l0 = l_zero.is_finite() && l_zero > 0.0;

    let analytic_monotone = finite_l0 && analytically_nonincreasing(model);
    let mut bounded = finite_l0;
    let mut bound_witness = None;
    if finite_l0 {
        let limit = l_zero * (1.0 + 1e-12);
        let mut grid = vec![0.0];
        grid.extend(log_grid(1e-6, 1e6, SCAN_POINTS_PER_DECADE));
        grid.extend(model.breakpoints());
        for r in grid {
            if model.max_gain(r) > limit || model.gain(r) > limit {
                bounded = false;
                bound_witness = Some(r);
                break;
            }
        }
    }

    let (gamma, gamma_status) = if matches!(model, PathLossModel::UnboundedPowerLaw { .. }) {
        // ∫ r^(1-η) diverges at 0 or ∞ for every η
        (None, Some(QuadratureStatus::Diverged))
    } else {
        let settings = QuadSettings {
            breakpoints: model.breakpoints(),
            ..quad.clone()
        };
        let q = integrate_semi_infinite_with(|r| r * model.gain(r), 0.0, &settings)?;
        match q.status {
            QuadratureStatus::Converged if q.value > 0.0 => (Some(q.value), Some(q.status)),
            QuadratureStatus::Converged | QuadratureStatus::Diverged => (None, Some(q.status)),
            QuadratureStatus::Inconclusive => {
                return Err(ModelError::GammaInconclusive {
                    status: q.status,
                    value: q.value,
                })
            }
        }
    };

    let failed_property = if !finite_l0 {
        Some(1)
    } else if !bounded {
        Some(2)
    } else if gamma.is_none() {
        Some(3)
    } else {
        None
    };
    Ok(FeasibilityReport {
        l_zero,
        bounded,
        analytic_monotone,
        gamma,
        gamma_status,
        feasible: failed_property.is_none(),
        failed_property,
        bound_witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn quad() -> QuadSettings {
        QuadSettings::default()
    }

    #[test]
    fn eval_examples() {
        let m = PathLossModel::MinPowerLaw { a: 1.0, c0: 1.0, eta: 4.0 };
        assert_eq!(m.eval(0.5).unwrap(), 1.0);
        assert_eq!(m.eval(2.0).unwrap(), 0.0625);
        let s = PathLossModel::StretchedExp { a: 1.0, alpha: 1.0, beta: 1.0 };
        assert_eq!(s.eval(0.0).unwrap(), 1.0);
        assert!(matches!(m.eval(-1.0), Err(ModelError::NegativeDistance(_))));
    }

    #[test]
    fn l_zero_examples() {
        let m = PathLossModel::ShiftedPowerLaw { a: 2.0, c0: 1.0, eta: 4.0 };
        assert_eq!(m.l_zero(), 2.0);
        let m = PathLossModel::ElevatedPowerLaw { a: 1.0, c0: 2.0, eta: 4.0 };
        assert_eq!(m.l_zero(), 0.0625);
        let m = PathLossModel::UnboundedPowerLaw { a: 1.0, eta: 4.0 };
        assert!(m.l_zero().is_infinite());
    }

    #[test]
    fn feasibility_examples() {
        let r = check_feasibility(&PathLossModel::UnboundedPowerLaw { a: 1.0, eta: 4.0 }, &quad()).unwrap();
        assert!(!r.feasible);
        assert_eq!(r.failed_property, Some(1));

        let r = check_feasibility(
            &PathLossModel::ShiftedPowerLaw { a: 1.0, c0: 1.0, eta: 2.0 },
            &quad(),
        )
        .unwrap();
        assert!(!r.feasible);
        assert_eq!(r.failed_property, Some(3));
        assert_eq!(r.gamma_status, Some(QuadratureStatus::Diverged));

        let r = check_feasibility(
            &PathLossModel::ShiftedPowerLaw { a: 1.0, c0: 1.0, eta: 4.0 },
            &quad(),
        )
        .unwrap();
        assert!(r.feasible);
        // closed form A c0^(2-η) / ((η-1)(η-2)) = 1/6
        assert!((r.gamma.unwrap() - 1.0 / 6.0).abs() < 1e-10 / 6.0);
    }

    #[test]
    fn multislope_without_flat_first_segment_is_unbounded() {
        let m = PathLossModel::MultiSlope(MultiSlope::new(
            vec![Segment { a: 1.0, eta: 2.0 }, Segment { a: 1.0, eta: 4.0 }],
            vec![1.0],
        ));
        let r = check_feasibility(&m, &quad()).unwrap();
        assert_eq!(r.failed_property, Some(1));
    }

    #[test]
    fn upward_jump_breaks_boundedness() {
        let m = PathLossModel::MultiSlope(MultiSlope::new(
            vec![Segment { a: 1.0, eta: 0.0 }, Segment { a: 8.0, eta: 4.0 }],
            vec![1.0],
        ));
        let r = check_feasibility(&m, &quad()).unwrap();
        assert_eq!(r.failed_property, Some(2));
        assert!(r.bound_witness.unwrap() >= 1.0);
    }

    #[test]
    fn invalid_parameters_rejected() {
        let bad = [
            PathLossModel::ShiftedPowerLaw { a: -1.0, c0: 1.0, eta: 4.0 },
            PathLossModel::StretchedExp { a: 1.0, alpha: 1.0, beta: 2.5 },
            PathLossModel::MultiSlope(MultiSlope::new(
                vec![Segment { a: 1.0, eta: 0.0 }, Segment { a: 1.0, eta: 4.0 }, Segment { a: 1.0, eta: 5.0 }],
                vec![2.0, 1.0],
            )),
            PathLossModel::MultiSlope(MultiSlope::new(vec![Segment { a: 1.0, eta: 0.0 }], vec![])),
        ];
        for m in bad {
            assert!(matches!(m.validate(), Err(ModelError::InvalidParameter(_))), "{m:?}");
        }
    }

    #[test]
    fn continuity_warning_fires_on_mismatch() {
        let m = MultiSlope::new(
            vec![Segment { a: 1.0, eta: 0.0 }, Segment { a: 2.0, eta: 4.0 }],
            vec![1.0],
        );
        let w = m.continuity_warnings();
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].boundary, 1.0);
        assert!(MultiSlope::continuous(1.0, &[0.0, 3.0, 4.0], &[1.0, 10.0])
            .continuity_warnings()
            .is_empty());
    }

    #[test]
    fn min_power_law_continuous_at_crossover() {
        for (c0, eta) in [(1.0, 4.0), (0.5, 3.0), (2.0, 2.5)] {
            let a = 3.0;
            let m = PathLossModel::MinPowerLaw { a, c0, eta };
            let rc: f64 = c0.powf(-1.0 / eta);
            let below = m.gain(rc * (1.0 - 1e-12));
            let above = m.gain(rc * (1.0 + 1e-12));
            assert!((below - a * c0).abs() < 1e-9 * a * c0);
            assert!((above - a * c0).abs() < 1e-9 * a * c0);
        }
    }

    #[test]
    fn two_slope_reproduces_min_power_law() {
        let (a, c0, eta) = (2.0_f64, 1.5_f64, 3.5_f64);
        let rc = c0.powf(-1.0 / eta);
        let ms = PathLossModel::MultiSlope(MultiSlope::continuous(a * c0, &[0.0, eta], &[rc]));
        let l1 = PathLossModel::MinPowerLaw { a, c0, eta };
        let mut grid = log_grid(1e-3, 1e3, 166);
        grid.truncate(1000);
        for r in grid {
            let (x, y) = (ms.gain(r), l1.gain(r));
            assert!((x - y).abs() <= 1e-12 * y, "r={r} {x} {y}");
        }
    }

    fn composite(p: LosProbability) -> PathLossModel {
        let los = MultiSlope::new(
            vec![Segment { a: 1.0, eta: 2.0 }, Segment { a: 1.0, eta: 2.5 }],
            vec![10.0],
        );
        let nlos = MultiSlope::new(
            vec![Segment { a: 0.5, eta: 3.0 }, Segment { a: 0.5, eta: 4.0 }],
            vec![5.0],
        );
        PathLossModel::LosNlos(LosNlosComposite::new(los, nlos, p, 1.0))
    }

    #[test]
    fn composite_average_between_branches() {
        let m = composite(LosProbability::ExpDecay { mu: 20.0 });
        for r in log_grid(1e-3, 1e4, 50) {
            let avg = m.gain(r);
            let (lo, hi) = (m.min_gain(r), m.max_gain(r));
            assert!(lo <= avg * (1.0 + 1e-14) && avg <= hi * (1.0 + 1e-14), "r={r}");
        }
        let r = check_feasibility(&m, &quad()).unwrap();
        assert!(r.feasible, "{r:?}");
    }

    #[test]
    fn link_gain_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let det = PathLossModel::ShiftedPowerLaw { a: 1.0, c0: 1.0, eta: 4.0 };
        assert_eq!(det.sample_link_gain(1.0, &mut rng), det.gain(1.0));

        let always = composite(LosProbability::Constant { p: 1.0 });
        let PathLossModel::LosNlos(c) = &always else { unreachable!() };
        for r in [0.0, 1.0, 30.0] {
            assert_eq!(always.sample_link_gain(r, &mut rng), c.los_gain(r));
        }

        // P_LoS(ln 2) = 1/2
        let m = composite(LosProbability::ExpDecay { mu: 1.0 });
        let PathLossModel::LosNlos(c) = &m else { unreachable!() };
        let r = std::f64::consts::LN_2;
        let n = 100_000;
        let los = (0..n)
            .filter(|_| m.sample_link_gain(r, &mut rng) == c.los_gain(r))
            .count();
        let frac = los as f64 / n as f64;
        assert!((frac - 0.5).abs() < 0.01, "{frac}");
    }

    #[test]
    fn ln_gain_matches_gain() {
        let models = [
            PathLossModel::MinPowerLaw { a: 2.0, c0: 1.0, eta: 4.0 },
            PathLossModel::ShiftedPowerLaw { a: 2.0, c0: 1.0, eta: 4.0 },
            PathLossModel::InversePoly { a: 2.0, c0: 3.0, eta: 3.0 },
            PathLossModel::ElevatedPowerLaw { a: 2.0, c0: 1.0, eta: 4.0 },
            PathLossModel::StretchedExp { a: 2.0, alpha: 0.5, beta: 1.5 },
        ];
        for m in &models {
            for r in [0.1, 0.9, 1.0, 3.0, 40.0] {
                assert!((m.ln_gain(r) - m.gain(r).ln()).abs() < 1e-12, "{m:?} {r}");
            }
        }
        // stays finite where the gain underflows
        let s = PathLossModel::StretchedExp { a: 1.0, alpha: 1.0, beta: 1.0 };
        assert_eq!(s.gain(1e6), 0.0);
        assert_eq!(s.ln_gain(1e6), -1e6);
    }

    #[test]
    fn log_slope_matches_finite_difference() {
        let models = [
            PathLossModel::ShiftedPowerLaw { a: 2.0, c0: 1.0, eta: 4.0 },
            PathLossModel::InversePoly { a: 2.0, c0: 3.0, eta: 3.0 },
            PathLossModel::ElevatedPowerLaw { a: 2.0, c0: 1.0, eta: 4.0 },
            PathLossModel::StretchedExp { a: 2.0, alpha: 0.5, beta: 1.5 },
            PathLossModel::MinPowerLaw { a: 1.0, c0: 1.0, eta: 4.0 },
        ];
        for m in &models {
            for r in [1.5, 3.0, 20.0] {
                let h = 1e-6 * r;
                let fd = (m.ln_gain(r + h) - m.ln_gain(r - h)) / (2.0 * h);
                let an = m.log_slope(r).unwrap();
                assert!((fd - an).abs() < 1e-6 * an.abs().max(1e-3), "{m:?} {r} {fd} {an}");
            }
        }
    }

    fn single_law_strategy() -> impl Strategy<Value = PathLossModel> {
        (0usize..5, 0.1f64..10.0, 0.5f64..2.0, 2.5f64..6.0, 0.2f64..2.0).prop_map(|(k, a, c0, eta, beta)| {
            match k {
                0 => PathLossModel::MinPowerLaw { a, c0, eta },
                1 => PathLossModel::ShiftedPowerLaw { a, c0, eta },
                2 => PathLossModel::InversePoly { a, c0, eta },
                3 => PathLossModel::ElevatedPowerLaw { a, c0, eta },
                _ => PathLossModel::StretchedExp { a, alpha: c0, beta },
            }
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn feasible_models_bounded_by_l_zero(m in single_law_strategy()) {
            let l0 = m.l_zero();
            let mut grid = vec![0.0];
            grid.extend(log_grid(1e-6, 1e6, 83));
            for r in grid {
                let g = m.gain(r);
                prop_assert!(g >= 0.0 && g <= l0 * (1.0 + 1e-12));
            }
        }
    }
}
