//! Adaptive quadrature over finite and semi-infinite ranges.
//!
//! Every integral in this crate (the path-loss area integral, the Laplace
//! functional of the interference, the condition integrals) runs through
//! [`integrate_semi_infinite`] or one of its siblings. The semi-infinite
//! driver walks dyadic windows `[a + s 2^k, a + s 2^(k+1)]` away from the
//! lower limit. The window contributions serve two purposes:
//!
//! * once they decay geometrically, the remaining tail is mapped onto
//!   `(0, 1]` through `r = b + s (1 - u) / u` and integrated adaptively;
//! * when they fail to decay over [`DIVERGENCE_WINDOWS`] consecutive
//!   windows the integral is declared divergent.
//!
//! Integrands are assumed positive and eventually monotone. Oscillatory
//! integrands are not supported.

use std::cell::Cell;
use std::collections::BinaryHeap;

use thiserror::Error;

/// Number of consecutive non-decaying dyadic windows that signals divergence.
pub const DIVERGENCE_WINDOWS: usize = 8;

/// Window ratio above which a window is counted as "not decaying".
pub const DECAY_RATIO: f64 = 0.98;

/// Default relative tolerance for the area integral and ASE limits.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Default relative tolerance for the condition double integrals.
pub const CONDITION_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("integrand returned NaN at x = {0}")]
    NotANumber(f64),
    #[error("relative tolerance {0} outside (1e-14, 1e-2)")]
    BadTolerance(f64),
    #[error("invalid integration range [{0}, {1}]")]
    BadRange(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureStatus {
    Converged,
    Diverged,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub status: QuadratureStatus,
    pub evaluations: usize,
}

impl QuadratureResult {
    pub fn is_converged(&self) -> bool {
        self.status == QuadratureStatus::Converged
    }

    pub fn is_diverged(&self) -> bool {
        self.status == QuadratureStatus::Diverged
    }

    fn diverged(evaluations: usize) -> Self {
        Self {
            value: f64::INFINITY,
            abs_error_estimate: f64::INFINITY,
            status: QuadratureStatus::Diverged,
            evaluations,
        }
    }
}

/// Knobs for the semi-infinite driver.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadSettings {
    /// Relative tolerance.
    pub tol: f64,
    /// Length of the first window; sets the natural length scale.
    pub scale: f64,
    /// Points where the integrand has a kink or jump.
    pub breakpoints: Vec<f64>,
    pub max_windows: usize,
    pub max_subdivisions: usize,
}

impl Default for QuadSettings {
    fn default() -> Self {
        Self::with_tol(DEFAULT_TOL)
    }
}

impl QuadSettings {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            scale: 1.0,
            breakpoints: Vec::new(),
            max_windows: 400,
            max_subdivisions: 1000,
        }
    }

    pub fn scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn breakpoints(mut self, breakpoints: Vec<f64>) -> Self {
        self.breakpoints = breakpoints;
        self
    }

    pub fn validate(&self) -> Result<(), QuadratureError> {
        if !(self.tol > 1e-14 && self.tol < 1e-2) {
            return Err(QuadratureError::BadTolerance(self.tol));
        }
        Ok(())
    }
}

// Gauss-Kronrod 7/15 abscissae and weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// One 15-point Kronrod panel with the QUADPACK error heuristic.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Panel, QuadratureError> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let eval = |x: f64| -> Result<f64, QuadratureError> {
        let y = f(x);
        if y.is_nan() {
            Err(QuadratureError::NotANumber(x))
        } else {
            Ok(y)
        }
    };

    let fc = eval(center)?;
    let mut res_g = fc * WG[3];
    let mut res_k = fc * WGK[7];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = eval(center - dx)?;
        let f2 = eval(center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut error = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    if !value.is_finite() {
        error = f64::INFINITY;
    }
    Ok(Panel { a, b, value, error })
}

/// Globally adaptive Gauss-Kronrod integration on `[a, b]`.
///
/// Stops when the summed error estimate is below
/// `max(abs_tol, rel_tol * |value|)`.
pub fn integrate_finite<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
    max_subdivisions: usize,
) -> Result<QuadratureResult, QuadratureError> {
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(QuadratureError::BadRange(a, b));
    }
    if a == b {
        return Ok(QuadratureResult {
            value: 0.0,
            abs_error_estimate: 0.0,
            status: QuadratureStatus::Converged,
            evaluations: 0,
        });
    }
    let first = gk15(&f, a, b)?;
    let mut evaluations = 15;
    let mut value = first.value;
    let mut error = first.error;
    if !value.is_finite() {
        return Ok(QuadratureResult::diverged(evaluations));
    }
    let mut heap = BinaryHeap::new();
    heap.push(first);
    let mut subdivisions = 1;
    while error > abs_tol.max(rel_tol * value.abs()) {
        if subdivisions >= max_subdivisions {
            return Ok(QuadratureResult {
                value,
                abs_error_estimate: error,
                status: QuadratureStatus::Inconclusive,
                evaluations,
            });
        }
        let worst = heap.pop().expect("heap holds every panel");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // panel cannot be split further in floating point
            heap.push(Panel { error: 0.0, ..worst });
            error -= worst.error;
            if heap.iter().all(|p| p.error == 0.0) {
                break;
            }
            continue;
        }
        let left = gk15(&f, worst.a, mid)?;
        let right = gk15(&f, mid, worst.b)?;
        evaluations += 30;
        subdivisions += 1;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        if !value.is_finite() {
            return Ok(QuadratureResult::diverged(evaluations));
        }
        heap.push(left);
        heap.push(right);
        // resum periodically to shed accumulated cancellation error
        if subdivisions % 64 == 0 {
            value = heap.iter().map(|p| p.value).sum();
            error = heap.iter().map(|p| p.error).sum();
        }
    }
    let value: f64 = heap.iter().map(|p| p.value).sum();
    let error: f64 = heap.iter().map(|p| p.error).sum();
    let status = if error <= abs_tol.max(rel_tol * value.abs()) {
        QuadratureStatus::Converged
    } else {
        QuadratureStatus::Inconclusive
    };
    Ok(QuadratureResult {
        value,
        abs_error_estimate: error,
        status,
        evaluations,
    })
}

/// Integrates a window piecewise across any breakpoints that fall inside it.
fn integrate_window<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    settings: &QuadSettings,
    abs_tol: f64,
) -> Result<QuadratureResult, QuadratureError> {
    let mut cuts: Vec<f64> = settings
        .breakpoints
        .iter()
        .copied()
        .filter(|&x| x > a && x < b)
        .collect();
    cuts.sort_by(f64::total_cmp);
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(a);
    edges.extend(cuts);
    edges.push(b);

    let mut acc = QuadratureResult {
        value: 0.0,
        abs_error_estimate: 0.0,
        status: QuadratureStatus::Converged,
        evaluations: 0,
    };
    let pieces = (edges.len() - 1) as f64;
    for pair in edges.windows(2) {
        let r = integrate_finite(
            f,
            pair[0],
            pair[1],
            settings.tol,
            abs_tol / pieces,
            settings.max_subdivisions,
        )?;
        acc.value += r.value;
        acc.abs_error_estimate += r.abs_error_estimate;
        acc.evaluations += r.evaluations;
        acc.status = worse(acc.status, r.status);
    }
    Ok(acc)
}

fn worse(a: QuadratureStatus, b: QuadratureStatus) -> QuadratureStatus {
    use QuadratureStatus::*;
    match (a, b) {
        (Diverged, _) | (_, Diverged) => Diverged,
        (Inconclusive, _) | (_, Inconclusive) => Inconclusive,
        _ => Converged,
    }
}

/// Integrates `f` over `(a, ∞)` with relative tolerance `tol`.
pub fn integrate_semi_infinite<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    tol: f64,
) -> Result<QuadratureResult, QuadratureError> {
    integrate_semi_infinite_with(f, a, &QuadSettings::with_tol(tol))
}

/// Semi-infinite integration with explicit settings (scale, breakpoints).
pub fn integrate_semi_infinite_with<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    settings: &QuadSettings,
) -> Result<QuadratureResult, QuadratureError> {
    settings.validate()?;
    if !a.is_finite() {
        return Err(QuadratureError::BadRange(a, f64::INFINITY));
    }
    let scale = if settings.scale > 0.0 && settings.scale.is_finite() {
        settings.scale
    } else {
        1.0
    };
    let tol = settings.tol;

    let mut total = 0.0_f64;
    let mut error = 0.0_f64;
    let mut evaluations = 0;
    let mut status = QuadratureStatus::Converged;
    let mut previous: Option<f64> = None;
    let mut non_decaying = 0;
    let mut decaying = 0;
    let mut lo = a;
    let mut hi = a + scale;

    for _ in 0..settings.max_windows {
        let floor = 1e-3 * tol * total.abs();
        let w = integrate_window(&f, lo, hi, settings, floor)?;
        evaluations += w.evaluations;
        if w.is_diverged() || !w.value.is_finite() {
            return Ok(QuadratureResult::diverged(evaluations));
        }
        status = worse(status, w.status);
        total += w.value;
        error += w.abs_error_estimate;

        let mag = w.value.abs();
        if let Some(prev) = previous {
            if mag > 0.0 && mag > DECAY_RATIO * prev {
                non_decaying += 1;
                decaying = 0;
            } else {
                non_decaying = 0;
                decaying += 1;
            }
        }
        previous = Some(mag);
        if non_decaying >= DIVERGENCE_WINDOWS {
            return Ok(QuadratureResult::diverged(evaluations));
        }

        lo = hi;
        hi = a + 2.0 * (hi - a);

        let small = mag <= 0.05 * total.abs();
        if decaying >= 2 && small {
            let tail = integrate_tail(&f, lo, lo - a, settings, 1e-3 * tol * total.abs())?;
            evaluations += tail.evaluations;
            let consistent = tail.value.is_finite()
                && tail.value.abs() <= 100.0 * mag + 1e-3 * tol * total.abs();
            if tail.status == QuadratureStatus::Converged && consistent {
                let value = total + tail.value;
                let err = error + tail.abs_error_estimate;
                let converged = status == QuadratureStatus::Converged
                    && (err <= tol * value.abs() || (value == 0.0 && err == 0.0));
                return Ok(QuadratureResult {
                    value,
                    abs_error_estimate: err,
                    status: if converged {
                        QuadratureStatus::Converged
                    } else {
                        QuadratureStatus::Inconclusive
                    },
                    evaluations,
                });
            }
        }
        if !lo.is_finite() || lo > 1e300 {
            break;
        }
    }
    Ok(QuadratureResult {
        value: total,
        abs_error_estimate: error,
        status: QuadratureStatus::Inconclusive,
        evaluations,
    })
}

/// `∫_b^∞ f` through `r = b + s (1 - u) / u`, `u ∈ (0, 1]`.
fn integrate_tail<F: Fn(f64) -> f64>(
    f: &F,
    b: f64,
    s: f64,
    settings: &QuadSettings,
    abs_tol: f64,
) -> Result<QuadratureResult, QuadratureError> {
    let g = |u: f64| {
        if u <= 0.0 {
            return 0.0;
        }
        let r = b + s * (1.0 - u) / u;
        if !r.is_finite() {
            return 0.0;
        }
        let y = f(r);
        if y == 0.0 {
            0.0
        } else {
            y * s / (u * u)
        }
    };
    integrate_finite(g, 0.0, 1.0, settings.tol, abs_tol, settings.max_subdivisions)
}

/// Iterated integral `∫_0^∞ ∫_0^∞ f(r, t) dr dt`, inner in `r`, outer in `t`.
pub fn integrate_double<F: Fn(f64, f64) -> f64>(
    f: F,
    tol: f64,
) -> Result<QuadratureResult, QuadratureError> {
    let inner_settings = QuadSettings::with_tol((tol * 1e-2).max(1e-13));
    integrate_nested(
        |t| integrate_semi_infinite_with(|r| f(r, t), 0.0, &inner_settings),
        &QuadSettings::with_tol(tol),
    )
}

/// Outer semi-infinite integral of an inner quadrature.
///
/// Divergence of any inner integral makes the outer integrand infinite,
/// which the outer driver reports as divergence. Inconclusive inner results
/// downgrade an otherwise converged outer result.
pub fn integrate_nested<G>(inner: G, outer: &QuadSettings) -> Result<QuadratureResult, QuadratureError>
where
    G: Fn(f64) -> Result<QuadratureResult, QuadratureError>,
{
    let inner_error: Cell<Option<QuadratureError>> = Cell::new(None);
    let inner_inconclusive = Cell::new(false);
    let inner_evals = Cell::new(0usize);
    let outer_fn = |t: f64| match inner(t) {
        Ok(r) => {
            inner_evals.set(inner_evals.get() + r.evaluations);
            match r.status {
                QuadratureStatus::Diverged => f64::INFINITY,
                QuadratureStatus::Inconclusive => {
                    inner_inconclusive.set(true);
                    r.value
                }
                QuadratureStatus::Converged => r.value,
            }
        }
        Err(e) => {
            inner_error.set(Some(e));
            f64::NAN
        }
    };
    let result = integrate_semi_infinite_with(outer_fn, 0.0, outer);
    if let Some(e) = inner_error.take() {
        return Err(e);
    }
    let mut result = result?;
    result.evaluations += inner_evals.get();
    if inner_inconclusive.get() && result.status == QuadratureStatus::Converged {
        result.status = QuadratureStatus::Inconclusive;
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn assert_close(r: &QuadratureResult, expected: f64, tol: f64) {
        assert!(r.is_converged(), "status {:?}", r.status);
        let rel = (r.value - expected).abs() / expected.abs();
        assert!(rel <= tol, "value {} expected {} rel {}", r.value, expected, rel);
    }

    #[test]
    fn gamma_two_is_one() {
        let r = integrate_semi_infinite(|x| x * (-x).exp(), 0.0, 1e-10).unwrap();
        assert_close(&r, 1.0, 1e-10);
        assert!(r.abs_error_estimate <= 1e-10 * r.value.abs());
    }

    #[test]
    fn shifted_quartic_is_one_sixth() {
        let r = integrate_semi_infinite(|x| x * (1.0 + x).powi(-4), 0.0, 1e-10).unwrap();
        assert_close(&r, 1.0 / 6.0, 1e-10);
    }

    #[test]
    fn logarithmic_divergence_is_flagged() {
        let r = integrate_semi_infinite(|x| x * (1.0 + x).powi(-2), 0.0, 1e-10).unwrap();
        assert_eq!(r.status, QuadratureStatus::Diverged);
    }

    #[test]
    fn growing_integrand_is_flagged() {
        let r = integrate_semi_infinite(|x| (0.3 * x * x).exp(), 0.0, 1e-8).unwrap();
        assert_eq!(r.status, QuadratureStatus::Diverged);
    }

    #[test]
    fn slow_power_tail_converges() {
        // ∫_0^∞ r (1+r)^-2.5 dr = 1/((1.5)(0.5)) = 4/3
        let r = integrate_semi_infinite(|x| x * (1.0 + x).powf(-2.5), 0.0, 1e-10).unwrap();
        assert_close(&r, 4.0 / 3.0, 1e-9);
    }

    #[test]
    fn lower_limit_and_breakpoints() {
        // ∫_2^∞ min(1, r^-3) dr = 1/8 with the kink at r = 1 outside the range
        let s = QuadSettings::with_tol(1e-10).breakpoints(vec![1.0]);
        let r = integrate_semi_infinite_with(|x| x.powi(-3).min(1.0), 2.0, &s).unwrap();
        assert_close(&r, 0.125, 1e-10);
        // ∫_0^∞ r min(1, r^-4) dr = 1
        let r = integrate_semi_infinite_with(|x| x * x.powi(-4).min(1.0), 0.0, &s).unwrap();
        assert_close(&r, 1.0, 1e-10);
    }

    #[test]
    fn identically_zero_integrand() {
        let r = integrate_semi_infinite(|_| 0.0, 0.0, 1e-8).unwrap();
        assert!(r.is_converged());
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn nan_reports_abscissa() {
        let e = integrate_semi_infinite(|x| if x > 3.0 { f64::NAN } else { (-x).exp() }, 0.0, 1e-8)
            .unwrap_err();
        match e {
            QuadratureError::NotANumber(x) => assert!(x > 3.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn tolerance_is_validated() {
        assert!(matches!(
            integrate_semi_infinite(|x| (-x).exp(), 0.0, 0.5),
            Err(QuadratureError::BadTolerance(_))
        ));
        assert!(matches!(
            integrate_semi_infinite(|x| (-x).exp(), 0.0, 1e-15),
            Err(QuadratureError::BadTolerance(_))
        ));
    }

    #[test]
    fn iteration_budget_gives_inconclusive() {
        let mut s = QuadSettings::with_tol(1e-10);
        s.max_windows = 3;
        let r = integrate_semi_infinite_with(|x| x * (1.0 + x).powi(-4), 0.0, &s).unwrap();
        assert_eq!(r.status, QuadratureStatus::Inconclusive);
    }

    #[test]
    fn double_separable_gaussians() {
        let r = integrate_double(|r, t| r * t * (-r * r - t * t).exp(), 1e-8).unwrap();
        assert_close(&r, 0.25, 1e-8);
    }

    #[test]
    fn double_exponential() {
        let r = integrate_double(|r, t| (-r - t).exp(), 1e-8).unwrap();
        assert_close(&r, 1.0, 1e-8);
    }

    #[test]
    fn double_divergent_outer() {
        let r = integrate_double(|r, t| (-r).exp() / (1.0 + t), 1e-6).unwrap();
        assert_eq!(r.status, QuadratureStatus::Diverged);
    }

    #[test]
    fn double_divergent_inner() {
        let r = integrate_double(|r, t| (-t).exp() / (1.0 + r), 1e-6).unwrap();
        assert_eq!(r.status, QuadratureStatus::Diverged);
    }

    #[test]
    fn linearity() {
        let f = |x: f64| x * (1.0 + x).powi(-4);
        let tol = 1e-10;
        let base = integrate_semi_infinite(f, 0.0, tol).unwrap().value;
        for c in [0.5, 3.0] {
            let scaled = integrate_semi_infinite(|x| c * f(x), 0.0, tol).unwrap().value;
            assert!((scaled - c * base).abs() <= 2.0 * tol * (c * base).abs());
        }
    }

    #[test]
    fn substitution_invariance() {
        // ∫ r L(r) dr = ∫ L(√u) / 2 du with u = r²
        let l = |r: f64| (1.0 + r * r).powi(-2);
        let tol = 1e-10;
        let direct = integrate_semi_infinite(|r| r * l(r), 0.0, tol).unwrap().value;
        let mapped = integrate_semi_infinite(|u| 0.5 * l(u.sqrt()), 0.0, tol).unwrap().value;
        assert!((direct - mapped).abs() <= 4.0 * tol * direct);
        assert!((direct - 0.5).abs() < 1e-10);
        let _ = PI;
    }

    #[test]
    fn finite_interval_basic() {
        let r = integrate_finite(|x| x.sin(), 0.0, PI, 1e-12, 0.0, 100).unwrap();
        assert!((r.value - 2.0).abs() < 1e-12);
        assert!(matches!(
            integrate_finite(|x| x, 1.0, 0.0, 1e-8, 0.0, 10),
            Err(QuadratureError::BadRange(..))
        ));
    }
}
