//! The machine-readable report: constants, condition checks, certificate,
//! and solve results, serialized deterministically (numbers as decimal
//! strings at fifteen significant digits).

use serde::Serialize;

use crate::certify::Certificate;
use crate::cone::{build_cross_matrix, spectral_radius};
use crate::eigen::{discretize, spectral_radius_op, KernelRole};
use crate::error::Result;
use crate::functional::h2_lip_bound;
use crate::index::{lower_resolved, upper_resolved, ConditionResult};
use crate::kernel::{big_m_constant, m_constant};
use crate::problem::ProblemSpec;
use crate::solver::SolveReport;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Fifteen significant digits, stable across platforms.
pub fn decimal(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.14e}")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportedValue {
    pub name: String,
    pub value: String,
    /// Operation that produced the number.
    pub source: String,
    /// Tolerance the producing operation guarantees.
    pub tolerance: String,
}

impl ReportedValue {
    fn new(name: &str, value: f64, source: &str, tolerance: f64) -> ReportedValue {
        ReportedValue {
            name: name.to_string(),
            value: decimal(value),
            source: source.to_string(),
            tolerance: decimal(tolerance),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CurvePoint {
    pub t: String,
    pub value: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstantsBlock {
    pub values: Vec<ReportedValue>,
    /// Principal eigenfunction of the window comparison operator.
    pub eigenfunction: Vec<CurvePoint>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionBlock {
    pub kind: String,
    pub rho: Option<String>,
    pub lhs: String,
    pub threshold: String,
    pub holds: bool,
    pub advisory: bool,
    pub constants: Vec<ReportedValue>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ShellBlock {
    pub inner_rho: String,
    pub inner_boundary: String,
    pub outer_rho: String,
    pub outer_boundary: String,
    pub sup_lower: String,
    pub sup_upper: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateBlock {
    pub pattern: String,
    pub solution_count: usize,
    pub shells: Vec<ShellBlock>,
    pub provenance: Vec<String>,
    pub advisory: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverBlock {
    pub converged: bool,
    pub residual: String,
    pub iterations: usize,
    pub cone_ok: bool,
    pub shell: Option<(String, String)>,
    pub nodes: usize,
    pub solution: Vec<CurvePoint>,
    /// A failed solve never contradicts a certificate: the iteration is
    /// heuristic, the certificate is not.
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportDocument {
    pub tool_version: String,
    pub config_hash: String,
    pub timestamp: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constants: Option<ConstantsBlock>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub conditions: Vec<ConditionBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverBlock>,
}

impl ReportDocument {
    pub fn new(config_hash: &str) -> ReportDocument {
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs().to_string())
            .unwrap_or_default();
        ReportDocument {
            tool_version: TOOL_VERSION.to_string(),
            config_hash: config_hash.to_string(),
            timestamp,
            constants: None,
            conditions: Vec::new(),
            certificate: None,
            solver: None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| crate::Error::Config(format!("report serialization: {e}")))
    }
}

/// Aggregates the constant table: cone constants, kernel integral bounds,
/// cross-matrix spectral radii, resolvent vectors, operator norm bounds,
/// and the principal comparison eigenvalue.
pub fn constants_block(problem: &ProblemSpec) -> Result<ConstantsBlock> {
    let kernel = &problem.kernel;
    let (a, b) = kernel.window();
    let mut values = vec![
        ReportedValue::new("c1", kernel.c1(), "envelope_ratio_scan", 1e-9),
        ReportedValue::new("c", kernel.c(), "declared_or_envelope", 1e-15),
    ];
    let m = m_constant(kernel)?;
    values.push(ReportedValue::new(
        "m",
        m,
        "reciprocal_sup_kernel_integral",
        1e-9,
    ));
    values.push(ReportedValue::new(
        "l2_norm_bound",
        1.0 / m,
        "sup_kernel_integral",
        1e-9,
    ));
    values.push(ReportedValue::new(
        "big_m",
        big_m_constant(kernel)?,
        "reciprocal_inf_window_integral",
        1e-9,
    ));

    if !problem.lower.is_empty() {
        let (psis, w, r1) = lower_resolved(problem)?;
        let matrix = build_cross_matrix(kernel, &problem.lower)?;
        values.push(ReportedValue::new(
            "spectral_radius_lower",
            spectral_radius(&matrix)?,
            "cross_matrix_power_iteration",
            1e-12,
        ));
        let _ = r1;
        for (j, psi) in psis.iter().enumerate() {
            let label = format!("lower_psi_{}_window_min", j + 1);
            values.push(ReportedValue::new(
                &label,
                psi.window_min,
                "psi_window_scan",
                1e-9,
            ));
            if j == 0 {
                values.push(ReportedValue::new(
                    "m1",
                    psi.window_min,
                    "psi_window_scan",
                    1e-9,
                ));
            }
        }
        for (j, wj) in w.iter().enumerate() {
            values.push(ReportedValue::new(
                &format!("lower_resolvent_{}", j + 1),
                *wj,
                "scaled_resolvent_solve",
                1e-10,
            ));
        }
    }

    if !problem.upper.is_empty() {
        let (psis, v, r2) = upper_resolved(problem)?;
        values.push(ReportedValue::new(
            "spectral_radius_upper",
            r2,
            "cross_matrix_power_iteration",
            1e-12,
        ));
        for (j, psi) in psis.iter().enumerate() {
            let max = psi.curve.max_on(a, b);
            values.push(ReportedValue::new(
                &format!("upper_psi_{}_window_max", j + 1),
                max,
                "psi_window_scan",
                1e-9,
            ));
            if j == 0 {
                values.push(ReportedValue::new("m2", max, "psi_window_scan", 1e-9));
            }
        }
        for (j, vj) in v.iter().enumerate() {
            values.push(ReportedValue::new(
                &format!("upper_resolvent_{}", j + 1),
                *vj,
                "resolvent_solve",
                1e-10,
            ));
        }
        values.push(ReportedValue::new(
            "h2_lip_bound",
            h2_lip_bound(kernel, &problem.upper)?,
            "psi_norm_sum",
            1e-9,
        ));
    }

    let op = discretize(kernel, KernelRole::L1, 65)?;
    let est = spectral_radius_op(&op)?;
    values.push(ReportedValue::new(
        "spectral_radius_l1",
        est.radius,
        "product_integration_power_iteration",
        est.richardson_error.max(1e-12),
    ));
    values.push(ReportedValue::new(
        "mu_l1",
        est.mu,
        "reciprocal_spectral_radius",
        est.richardson_error.max(1e-12),
    ));
    let eigenfunction = est
        .eigenfunction
        .nodes()
        .iter()
        .zip(est.eigenfunction.values())
        .map(|(&t, &v)| CurvePoint {
            t: decimal(t),
            value: decimal(v),
        })
        .collect();

    Ok(ConstantsBlock {
        values,
        eigenfunction,
    })
}

pub fn condition_block(result: &ConditionResult) -> ConditionBlock {
    ConditionBlock {
        kind: result.kind.label().to_string(),
        rho: result.rho.map(decimal),
        lhs: decimal(result.lhs),
        threshold: decimal(result.threshold),
        holds: result.holds,
        advisory: result.advisory,
        constants: result
            .constants
            .iter()
            .map(|(name, value)| ReportedValue::new(name, *value, "condition_check", 1e-9))
            .collect(),
    }
}

pub fn certificate_block(certificate: &Certificate) -> CertificateBlock {
    CertificateBlock {
        pattern: certificate.pattern.label().to_string(),
        solution_count: certificate.solution_count,
        shells: certificate
            .shells
            .iter()
            .map(|s| ShellBlock {
                inner_rho: decimal(s.inner_rho),
                inner_boundary: s.inner_kind.label().to_string(),
                outer_rho: decimal(s.outer_rho),
                outer_boundary: s.outer_kind.label().to_string(),
                sup_lower: decimal(s.sup_lower),
                sup_upper: decimal(s.sup_upper),
            })
            .collect(),
        provenance: certificate.provenance.clone(),
        advisory: certificate.advisory,
    }
}

pub fn solver_block(report: &SolveReport, note: Option<String>) -> SolverBlock {
    SolverBlock {
        converged: report.converged,
        residual: decimal(report.residual),
        iterations: report.iterations,
        cone_ok: report.cone_ok,
        shell: report.shell.map(|(lo, hi)| (decimal(lo), decimal(hi))),
        nodes: report.solution.len(),
        solution: report
            .solution
            .nodes()
            .iter()
            .zip(report.solution.values())
            .map(|(&t, &v)| CurvePoint {
                t: decimal(t),
                value: decimal(v),
            })
            .collect(),
        note,
    }
}

/// CSV rendering of a solution curve: `node,value` rows.
pub fn solution_csv(report: &SolveReport) -> String {
    let mut out = String::from("node,value\n");
    for (&t, &v) in report
        .solution
        .nodes()
        .iter()
        .zip(report.solution.values())
    {
        out.push_str(&decimal(t));
        out.push(',');
        out.push_str(&decimal(v));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::tests::example1_problem;

    #[test]
    fn decimal_strings_are_fifteen_digits_and_stable() {
        assert_eq!(decimal(1.0 / 3.0), "3.33333333333333e-1");
        assert_eq!(decimal(0.0), "0.00000000000000e0");
        assert_eq!(decimal(f64::INFINITY), "inf");
        assert_eq!(decimal(f64::NEG_INFINITY), "-inf");
        assert_eq!(decimal(-12345.678), "-1.23456780000000e4");
    }

    #[test]
    fn constants_block_carries_the_worked_values() {
        let problem = example1_problem();
        let block = constants_block(&problem).unwrap();
        let get = |name: &str| -> f64 {
            block
                .values
                .iter()
                .find(|v| v.name == name)
                .unwrap_or_else(|| panic!("missing {name}"))
                .value
                .parse()
                .unwrap()
        };
        assert!((get("m1") - 43.0 / 1024.0).abs() < 1e-9);
        assert!((get("m2") - 11.0 / 192.0).abs() < 1e-9);
        assert!((get("spectral_radius_upper") - 107.0 / 192.0).abs() < 1e-12);
        assert!((get("c") - 0.25).abs() < 1e-15);
        assert!((get("m") - 8.0).abs() < 1e-8);
        assert!((get("big_m") - 16.0).abs() < 1e-8);
        assert!(!block.eigenfunction.is_empty());
    }

    #[test]
    fn reports_differ_only_in_timestamp() {
        let problem = example1_problem();
        let block = constants_block(&problem).unwrap();
        let mut doc1 = ReportDocument::new("hash");
        doc1.constants = Some(block.clone());
        let mut doc2 = ReportDocument::new("hash");
        doc2.constants = Some(block);
        doc1.timestamp = String::new();
        doc2.timestamp = String::new();
        assert_eq!(doc1.to_json().unwrap(), doc2.to_json().unwrap());
    }
}
