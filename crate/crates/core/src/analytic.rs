//! The area integral `γ` and the asymptotic ASE limit `L0 / (2π ln2 γ)`.
//!
//! The limit is always computed from `L0` and `γ`. The per-model closed
//! forms ([`table1_limit`], [`multislope_limit`]) are kept as independent
//! cross-checks.

use std::f64::consts::{LN_2, PI};

use statrs::function::gamma::gamma;
use thiserror::Error;

use crate::models::{check_feasibility, ModelError, MultiSlope, PathLossModel};
use crate::numerics::{integrate_semi_infinite_with, QuadSettings, QuadratureResult, QuadratureStatus};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error("model is not physically feasible: property {property} fails")]
    Infeasible { property: u8 },
    #[error("area integral diverges")]
    DivergentGamma,
    #[error("area integral quadrature inconclusive (value {0})")]
    Inconclusive(f64),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// `γ` with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaIntegral {
    /// Closed form when available, else the quadrature value.
    pub value: f64,
    pub closed_form: Option<f64>,
    pub quadrature: QuadratureResult,
    /// `|closed - quadrature| / closed` when both exist.
    pub relative_difference: Option<f64>,
}

/// Asymptotic ASE limit in bits/s/Hz per unit area.
#[derive(Debug, Clone, PartialEq)]
pub struct AseLimit {
    /// `L0 / (2π ln2 γ)`.
    pub general_value: f64,
    /// Same formula with the quadrature `γ`.
    pub quadrature_value: f64,
    /// Per-model closed form, where one exists.
    pub closed_form_value: Option<f64>,
    pub gamma: f64,
    pub l_zero: f64,
    /// `|general - closed| / closed`.
    pub agreement: Option<f64>,
}

/// `∫ r (r² + c²)^(-η/2) dr` over `[lo, hi)`; `hi` may be infinite.
fn elevated_power_area(eta: f64, c: f64, lo: f64, hi: f64) -> f64 {
    let ulo = lo * lo + c * c;
    let uhi = hi * hi + c * c;
    if eta == 2.0 {
        if ulo == 0.0 || hi.is_infinite() {
            return f64::INFINITY;
        }
        return 0.5 * (uhi / ulo).ln();
    }
    let e = 1.0 - 0.5 * eta;
    if hi.is_infinite() {
        if eta <= 2.0 {
            return f64::INFINITY;
        }
        return ulo.powf(e) / (eta - 2.0);
    }
    if ulo == 0.0 && eta > 2.0 {
        return f64::INFINITY;
    }
    (uhi.powf(e) - ulo.powf(e)) / (2.0 - eta)
}

/// Piecewise-analytic `γ` of a multi-slope profile.
pub fn multislope_gamma(m: &MultiSlope) -> f64 {
    let n = m.segments.len();
    (0..n)
        .map(|i| {
            let lo = if i == 0 { 0.0 } else { m.boundaries[i - 1] };
            let hi = if i == n - 1 { f64::INFINITY } else { m.boundaries[i] };
            let s = &m.segments[i];
            s.a * elevated_power_area(s.eta, m.elevation, lo, hi)
        })
        .sum()
}

/// Closed-form `γ`; `Some(∞)` when it diverges, `None` when no closed form
/// is implemented.
pub fn gamma_closed_form(model: &PathLossModel) -> Option<f64> {
    use PathLossModel::*;
    let divergent = |eta: f64| eta <= 2.0;
    Some(match *model {
        UnboundedPowerLaw { .. } => f64::INFINITY,
        MinPowerLaw { a, c0, eta } => {
            if divergent(eta) {
                f64::INFINITY
            } else {
                a * c0.powf(1.0 - 2.0 / eta) * eta / (2.0 * (eta - 2.0))
            }
        }
        ShiftedPowerLaw { a, c0, eta } => {
            if divergent(eta) {
                f64::INFINITY
            } else {
                a * c0.powf(2.0 - eta) / ((eta - 1.0) * (eta - 2.0))
            }
        }
        InversePoly { a, c0, eta } => {
            if divergent(eta) {
                f64::INFINITY
            } else {
                a * c0.powf(2.0 / eta - 1.0) * (PI / eta) / (2.0 * PI / eta).sin()
            }
        }
        ElevatedPowerLaw { a, c0, eta } => a * elevated_power_area(eta, c0, 0.0, f64::INFINITY),
        StretchedExp { a, alpha, beta } => a * gamma(2.0 / beta) / (beta * alpha.powf(2.0 / beta)),
        MultiSlope(ref m) => multislope_gamma(m),
        LosNlos(_) => return None,
    })
}

/// `γ = ∫_0^∞ r L(r) dr` by quadrature, cross-checked against the closed
/// form where one exists. Composites use the state-averaged gain.
pub fn gamma_integral(model: &PathLossModel, tol: f64) -> Result<GammaIntegral, AnalyticError> {
    model.validate()?;
    let closed = gamma_closed_form(model);
    if closed.is_some_and(f64::is_infinite) {
        return Err(AnalyticError::DivergentGamma);
    }
    let settings = model.quad_settings(tol);
    let quadrature = integrate_semi_infinite_with(|r| r * model.gain(r), 0.0, &settings)
        .map_err(ModelError::from)?;
    match quadrature.status {
        QuadratureStatus::Diverged => return Err(AnalyticError::DivergentGamma),
        QuadratureStatus::Inconclusive if closed.is_none() => {
            return Err(AnalyticError::Inconclusive(quadrature.value))
        }
        _ => {}
    }
    let value = closed.unwrap_or(quadrature.value);
    Ok(GammaIntegral {
        value,
        closed_form: closed,
        quadrature,
        relative_difference: closed.map(|c| (c - quadrature.value).abs() / c),
    })
}

/// Closed form of the limit for the five single-law models,
/// evaluated as printed. `None` for any other variant.
pub fn table1_limit(model: &PathLossModel) -> Option<f64> {
    use PathLossModel::*;
    let k = PI * LN_2;
    match *model {
        MinPowerLaw { c0, eta, .. } => Some((eta - 2.0) * c0.powf(2.0 / eta) / (eta * k)),
        ShiftedPowerLaw { c0, eta, .. } => Some((eta * eta - 3.0 * eta + 2.0) / (2.0 * k * c0 * c0)),
        InversePoly { c0, eta, .. } => {
            Some(eta * (2.0 * PI / eta).sin() / (2.0 * PI * k * c0.powf(2.0 / eta)))
        }
        ElevatedPowerLaw { c0, eta, .. } => Some((eta - 2.0) / (2.0 * k * c0 * c0)),
        StretchedExp { alpha, beta, .. } => {
            Some(beta * alpha.powf(2.0 / beta) / (2.0 * k * gamma(2.0 / beta)))
        }
        _ => None,
    }
}

/// Multi-slope limit from the piecewise `γ`, alongside the published
/// summation formula.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiSlopeLimit {
    /// `A_1 / (2π ln2 γ)` with the piecewise-analytic `γ`.
    pub value: f64,
    /// The published summation formula, whose final term divides by `η_n`.
    pub printed_formula: f64,
    /// `|printed - value| / value`.
    pub printed_relative_difference: f64,
}

/// Limit of a bounded multi-slope profile (`η_1 = 0`, `η_n > 2`).
pub fn multislope_limit(m: &MultiSlope) -> Result<MultiSlopeLimit, AnalyticError> {
    PathLossModel::MultiSlope(m.clone()).validate()?;
    if m.segments[0].eta != 0.0 {
        return Err(AnalyticError::Precondition(format!(
            "first exponent must be 0, got {}",
            m.segments[0].eta
        )));
    }
    if m.tail().eta <= 2.0 {
        return Err(AnalyticError::DivergentGamma);
    }
    let gamma = multislope_gamma(m);
    let l0 = m.gain(0.0);
    let value = l0 / (2.0 * PI * LN_2 * gamma);

    let n = m.segments.len();
    let s = &m.segments;
    let r = &m.boundaries;
    let mut bracket = s[0].a * r[0] * r[0] / 2.0;
    bracket += s[n - 1].a * r[n - 2].powf(2.0 - s[n - 1].eta) / s[n - 1].eta;
    for i in 1..n - 1 {
        let eta = s[i].eta;
        bracket += s[i].a
            * (r[i].powf(2.0 - eta) / (2.0 - eta) + r[i - 1].powf(2.0 - eta) / (eta - 2.0));
    }
    let printed = s[0].a / (2.0 * PI * LN_2) / bracket;
    Ok(MultiSlopeLimit {
        value,
        printed_formula: printed,
        printed_relative_difference: (printed - value).abs() / value,
    })
}

/// Asymptotic ASE limit of a feasible model.
pub fn ase_limit(model: &PathLossModel, tol: f64) -> Result<AseLimit, AnalyticError> {
    let report = check_feasibility(model, &QuadSettings::with_tol(tol))?;
    if let Some(property) = report.failed_property {
        return Err(AnalyticError::Infeasible { property });
    }
    let g = gamma_integral(model, tol)?;
    let l_zero = report.l_zero;
    let k = 2.0 * PI * LN_2;
    let general_value = l_zero / (k * g.value);
    let closed_form_value = match model {
        PathLossModel::MultiSlope(m) if m.segments[0].eta == 0.0 && m.elevation == 0.0 => {
            Some(multislope_limit(m)?.value)
        }
        _ => table1_limit(model),
    };
    Ok(AseLimit {
        general_value,
        quadrature_value: l_zero / (k * g.quadrature.value),
        closed_form_value,
        gamma: g.value,
        l_zero,
        agreement: closed_form_value.map(|c| (general_value - c).abs() / c),
    })
}

/// Limit of `λ · E[SINR]`, `L0 / (2π γ)`.
pub fn scaled_sinr_limit(model: &PathLossModel, tol: f64) -> Result<f64, AnalyticError> {
    let g = gamma_integral(model, tol)?;
    Ok(model.l_zero() / (2.0 * PI * g.value))
}

/// Mean total received power `2π λ γ`.
pub fn mean_received_power(model: &PathLossModel, lambda: f64, tol: f64) -> Result<f64, AnalyticError> {
    Ok(2.0 * PI * lambda * gamma_integral(model, tol)?.value)
}
