//! Plain-text reports and CSV tables.

use std::fmt::Write as _;

use ase_lab::analytic::AseLimit;
use ase_lab::conditions::{ConditionVerdict, Holds};
use ase_lab::sim::MetricEstimate;
use ase_lab::FeasibilityReport;

pub const CONFIG_BEGIN: &str = "--- resolved config ---";
pub const CONFIG_END: &str = "--- end resolved config ---";

/// Threshold in dB for column names: two decimals, trailing zeros
/// trimmed, `-inf` for zero.
pub fn db_label(theta0: f64) -> String {
    if theta0 == 0.0 {
        return "-inf".into();
    }
    let db = 10.0 * theta0.log10();
    let s = format!("{db:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

/// `x` to six significant digits.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = 5 - mag;
    if (0..=15).contains(&decimals) {
        format!("{x:.*}", decimals as usize)
    } else {
        format!("{x:.5e}")
    }
}

pub fn csv_header(theta0: &[f64]) -> String {
    let mut h = String::from("lambda,ase,ase_se,");
    for &t in theta0 {
        let d = db_label(t);
        let _ = write!(h, "case_{d},pt_{d},cov_{d},");
    }
    h.push_str("limit,n");
    h
}

pub fn csv_row(m: &MetricEstimate, limit: f64) -> String {
    let mut row = format!("{},{},{},", m.lambda, m.ase.mean, m.ase.std_error);
    for j in 0..m.theta0.len() {
        let _ = write!(
            row,
            "{},{},{},",
            m.constrained_ase[j].mean, m.potential_throughput[j].mean, m.coverage[j].mean
        );
    }
    let _ = write!(row, "{limit},{}", m.n);
    row
}

pub fn csv_table(rows: &[MetricEstimate], limit: f64) -> String {
    let theta0 = rows.first().map(|m| m.theta0.clone()).unwrap_or_default();
    let mut out = csv_header(&theta0);
    out.push('\n');
    for m in rows {
        out.push_str(&csv_row(m, limit));
        out.push('\n');
    }
    out
}

/// Embedded config block; re-running from it reproduces the outputs.
pub fn config_block(toml: &str) -> String {
    format!("{CONFIG_BEGIN}\n{}{CONFIG_END}\n", toml)
}

/// The config text between the markers of a report.
pub fn extract_config(report: &str) -> Option<String> {
    let start = report.find(CONFIG_BEGIN)? + CONFIG_BEGIN.len() + 1;
    let end = report[start..].find(CONFIG_END)? + start;
    Some(report[start..end].to_string())
}

pub fn feasibility_lines(r: &FeasibilityReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "L0: {}", r.l_zero);
    let _ = writeln!(s, "bounded by L0: {}", r.bounded);
    if let Some(w) = r.bound_witness {
        let _ = writeln!(s, "bound violated at r = {w}");
    }
    match r.gamma {
        Some(g) => {
            let _ = writeln!(s, "gamma: {g}");
        }
        None => {
            let _ = writeln!(s, "gamma: {:?}", r.gamma_status);
        }
    }
    match r.failed_property {
        None => s.push_str("FEASIBLE\n"),
        Some(p) => {
            let _ = writeln!(s, "INFEASIBLE: property {p}");
        }
    }
    s
}

pub fn limit_lines(l: &AseLimit) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "L0: {}", l.l_zero);
    let _ = writeln!(s, "gamma: {}", l.gamma);
    let _ = writeln!(s, "ASE limit: {} ({})", sig6(l.general_value), l.general_value);
    let _ = writeln!(s, "ASE limit from quadrature gamma: {}", l.quadrature_value);
    if let Some(c) = l.closed_form_value {
        let _ = writeln!(s, "closed form: {c}");
    }
    if let Some(a) = l.agreement {
        let _ = writeln!(s, "relative agreement: {a:e}");
    }
    s
}

fn holds_word(h: Holds) -> &'static str {
    match h {
        Holds::Holds => "HOLDS",
        Holds::Fails => "FAILS",
        Holds::Inconclusive => "INCONCLUSIVE",
    }
}

pub fn verdict_lines(v: &ConditionVerdict) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:?}: {}", v.corollary, holds_word(v.holds));
    if let Some(r0) = v.r0 {
        let _ = writeln!(s, "  r0: {r0}");
    }
    if let Some(z) = v.zeta {
        let _ = writeln!(s, "  zeta: {z}");
    }
    if let Some(l) = v.lambda_c {
        let _ = writeln!(s, "  empirical lambda_c: {l}");
    }
    if let Some(l) = v.analytic_lambda_c {
        let _ = writeln!(s, "  analytic lambda_c: {l}");
    }
    if let Some(p) = v.proof_threshold {
        let _ = writeln!(s, "  1/(pi zeta): {p}");
    }
    if let Some(w) = v.witness {
        let _ = writeln!(s, "  witness r: {w}");
    }
    for p in &v.probes {
        let _ = writeln!(s, "  lambda0 {}: {:?} {:e}", p.lambda0, p.result.status, p.result.value);
    }
    for n in &v.notes {
        let _ = writeln!(s, "  note: {n}");
    }
    s
}

pub fn metrics_lines(m: &MetricEstimate) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "lambda {}: ase {} ± {} (n = {})", m.lambda, m.ase.mean, m.ase.std_error, m.n);
    for (j, &t) in m.theta0.iter().enumerate() {
        let _ = writeln!(
            s,
            "  theta0 {} dB: constrained {} ± {}, potential {} ± {}, coverage {}",
            db_label(t),
            m.constrained_ase[j].mean,
            m.constrained_ase[j].std_error,
            m.potential_throughput[j].mean,
            m.potential_throughput[j].std_error,
            m.coverage[j].mean
        );
    }
    let _ = writeln!(s, "  lambda E[SINR]: {} ± {}", m.scaled_sinr.mean, m.scaled_sinr.std_error);
    let _ = writeln!(
        s,
        "  window radius {} ({} expected base stations), far-field fraction {:e}, redraws {}",
        m.window.radius, m.window.expected_points, m.window.tail_fraction, m.redraws
    );
    s
}
