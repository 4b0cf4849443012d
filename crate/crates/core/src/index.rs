//! The per-radius sufficient conditions driving the fixed-point-index
//! certificates: the index-one test on sup-norm balls, the index-zero test
//! on window-minimum sets, their coarser easy-to-check variants, and the
//! non-existence tests.

use crate::cone::{resolve_positive, build_cross_matrix};
use crate::error::{Error, Result};
use crate::functional::{build_psi, k_phi, PsiFunction};
use crate::kernel::{big_m_constant, m_constant, sigma, window_integral};
use crate::problem::ProblemSpec;
use crate::quad::{extremize, integrate, ExtremumMode, ExtremumRequest, IntegrationRequest};

/// Margin enforced on every strict certification inequality.
pub const CERT_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionKind {
    I1,
    I0,
    I1Strong,
    I0Strong,
    Nonexist1,
    Nonexist2,
    Eig1,
    Eig2,
    Eig3,
}

impl ConditionKind {
    pub fn label(&self) -> &'static str {
        match self {
            ConditionKind::I1 => "index_one",
            ConditionKind::I0 => "index_zero",
            ConditionKind::I1Strong => "index_one_strong",
            ConditionKind::I0Strong => "index_zero_strong",
            ConditionKind::Nonexist1 => "nonexistence_upper",
            ConditionKind::Nonexist2 => "nonexistence_lower",
            ConditionKind::Eig1 => "asymptotic_small_amplitude",
            ConditionKind::Eig2 => "asymptotic_crossing_at_zero",
            ConditionKind::Eig3 => "asymptotic_crossing_at_infinity",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundsSource {
    Analytic,
    Sampled,
}

#[derive(Debug, Clone)]
pub struct ConditionResult {
    pub kind: ConditionKind,
    pub rho: Option<f64>,
    pub lhs: f64,
    /// The value the lhs is compared against (strictly, with margin).
    pub threshold: f64,
    pub holds: bool,
    /// Named intermediate constants for the report.
    pub constants: Vec<(String, f64)>,
    /// True when a sampled (non-analytic) bound entered the check.
    pub advisory: bool,
}

/// Envelope of the upper nonlinearity part: the supremum of f2(t,u)/rho
/// over [0,1] x [-rho, rho]. Uses the declared closed form when present,
/// otherwise samples a grid with local polish.
pub fn f2_upper_bound(problem: &ProblemSpec, rho: f64) -> Result<(f64, BoundsSource)> {
    if let Some(expr) = &problem.bounds.f2_upper {
        return Ok((expr.eval(&[rho, problem.kernel.c()]), BoundsSource::Analytic));
    }
    let objective = |t: f64, u: f64| problem.f2_eval(t, u) / rho;
    let value = sampled_extremum(&objective, (0.0, 1.0), (-rho, rho), true);
    if !value.is_finite() {
        return Err(Error::NonFinite {
            which: "f2 upper envelope",
        });
    }
    Ok((value, BoundsSource::Sampled))
}

/// Envelope of the lower nonlinearity part: the infimum of f1(t,u)/rho
/// over [a,b] x [rho, rho/c].
pub fn f1_lower_bound(problem: &ProblemSpec, rho: f64) -> Result<(f64, BoundsSource)> {
    if let Some(expr) = &problem.bounds.f1_lower {
        return Ok((expr.eval(&[rho, problem.kernel.c()]), BoundsSource::Analytic));
    }
    let (a, b) = problem.kernel.window();
    let objective = |t: f64, u: f64| problem.f1_eval(t, u) / rho;
    let value = sampled_extremum(&objective, (a, b), (rho, rho / problem.kernel.c()), false);
    if !value.is_finite() {
        return Err(Error::NonFinite {
            which: "f1 lower envelope",
        });
    }
    Ok((value, BoundsSource::Sampled))
}

const SAMPLE_AXIS: usize = 257;

fn sampled_extremum(
    f: &dyn Fn(f64, f64) -> f64,
    t_range: (f64, f64),
    u_range: (f64, f64),
    want_max: bool,
) -> f64 {
    let sign = if want_max { -1.0 } else { 1.0 };
    let mut best = f64::INFINITY;
    let mut best_at = (t_range.0, u_range.0);
    for i in 0..SAMPLE_AXIS {
        let t = t_range.0 + (t_range.1 - t_range.0) * i as f64 / (SAMPLE_AXIS - 1) as f64;
        for j in 0..SAMPLE_AXIS {
            let u =
                u_range.0 + (u_range.1 - u_range.0) * j as f64 / (SAMPLE_AXIS - 1) as f64;
            let v = sign * f(t, u);
            if v < best {
                best = v;
                best_at = (t, u);
            }
        }
    }
    // coordinate polish around the best sample
    let (mut t, mut u) = best_at;
    for _ in 0..3 {
        let ht = (t_range.1 - t_range.0) / (SAMPLE_AXIS - 1) as f64;
        let hu = (u_range.1 - u_range.0) / (SAMPLE_AXIS - 1) as f64;
        let section_t = |x: f64| sign * f(x, u);
        let lo = (t - ht).max(t_range.0);
        let hi = (t + ht).min(t_range.1);
        let (tt, _) = crate::quad::extremize(&ExtremumRequest::new(
            &section_t,
            lo,
            hi,
            ExtremumMode::Inf,
        ));
        t = tt;
        let section_u = |x: f64| sign * f(t, x);
        let lo = (u - hu).max(u_range.0);
        let hi = (u + hu).min(u_range.1);
        let (uu, vv) = crate::quad::extremize(&ExtremumRequest::new(
            &section_u,
            lo,
            hi,
            ExtremumMode::Inf,
        ));
        u = uu;
        best = best.min(vv);
    }
    sign * best
}

/// Integral over [0,1] of the kernel section of one functional against the
/// weight, with a sign scan first.
pub(crate) fn k_phi_integral(
    problem: &ProblemSpec,
    phi: &crate::functional::FunctionalSpec,
) -> Result<f64> {
    let kernel = &problem.kernel;
    // surface sign violations on a scan before integrating
    for i in 0..=100 {
        let s = i as f64 / 100.0;
        k_phi(phi, kernel, s)?;
    }
    let f = |s: f64| k_phi(phi, kernel, s).unwrap_or(f64::NAN) * kernel.g(s);
    let (a, b) = kernel.window();
    let req = IntegrationRequest::new(&f, 0.0, 1.0).with_breakpoints(vec![a, b]);
    let (value, _) = integrate(&req)?;
    if !value.is_finite() {
        return Err(Error::NegativeKphi { s: f64::NAN, value });
    }
    Ok(value)
}

/// Shared state of the index-one checks: upper psi functions and the
/// resolved coefficient vector.
pub fn upper_resolved(problem: &ProblemSpec) -> Result<(Vec<PsiFunction>, Vec<f64>, f64)> {
    let psis = build_psi(&problem.kernel, &problem.upper)?;
    let matrix = build_cross_matrix(&problem.kernel, &problem.upper)?;
    let r2 = crate::cone::spectral_radius(&matrix)?;
    let mut rhs = Vec::with_capacity(psis.len());
    for phi in problem.upper.functionals() {
        rhs.push(k_phi_integral(problem, phi)?);
    }
    let v = resolve_positive(&matrix, 1.0, &rhs)?;
    Ok((psis, v.values, r2))
}

/// Shared state of the index-zero checks, resolved at scale c1.
pub fn lower_resolved(problem: &ProblemSpec) -> Result<(Vec<PsiFunction>, Vec<f64>, f64)> {
    let psis = build_psi(&problem.kernel, &problem.lower)?;
    let matrix = build_cross_matrix(&problem.kernel, &problem.lower)?;
    let r1 = crate::cone::spectral_radius(&matrix)?;
    let mut rhs = Vec::with_capacity(psis.len());
    for phi in problem.lower.functionals() {
        rhs.push(k_phi_integral(problem, phi)?);
    }
    let w = resolve_positive(&matrix, problem.kernel.c1(), &rhs)?;
    Ok((psis, w.values, r1))
}

/// Index-one condition at radius rho: the sup over [0,1] of the resolved
/// psi bracket plus sigma, scaled by the f2 envelope, must stay below 1.
pub fn check_i1(problem: &ProblemSpec, rho: f64) -> Result<ConditionResult> {
    let (psis, v, r2) = upper_resolved(problem)?;
    let kernel = &problem.kernel;
    let bracket = |t: f64| {
        let mut acc = 0.0;
        for (psi, vj) in psis.iter().zip(&v) {
            acc += psi.curve.eval(t).abs() * vj;
        }
        acc + sigma(kernel, t).unwrap_or(f64::NAN)
    };
    let req = ExtremumRequest::new(&bracket, 0.0, 1.0, ExtremumMode::Sup)
        .with_seeds(kernel.t_seeds());
    let (arg, sup) = extremize(&req);
    let (envelope, source) = f2_upper_bound(problem, rho)?;
    let lhs = envelope * sup;
    Ok(ConditionResult {
        kind: ConditionKind::I1,
        rho: Some(rho),
        lhs,
        threshold: 1.0,
        holds: lhs.is_finite() && lhs < 1.0 - CERT_MARGIN,
        constants: vec![
            ("sup_bracket".into(), sup),
            ("sup_arg".into(), arg),
            ("f2_envelope".into(), envelope),
            ("r_m2".into(), r2),
        ],
        advisory: source == BoundsSource::Sampled,
    })
}

/// Coarser index-one condition using psi norms and the global 1/m constant.
/// Implies the pointwise condition whenever it holds.
pub fn check_i1_strong(problem: &ProblemSpec, rho: f64) -> Result<ConditionResult> {
    let (psis, v, r2) = upper_resolved(problem)?;
    let m = m_constant(&problem.kernel)?;
    let inv_m = if m.is_infinite() { 0.0 } else { 1.0 / m };
    let mut bracket = inv_m;
    for (psi, vj) in psis.iter().zip(&v) {
        bracket += psi.norm * vj;
    }
    let (envelope, source) = f2_upper_bound(problem, rho)?;
    let lhs = envelope * bracket;
    Ok(ConditionResult {
        kind: ConditionKind::I1Strong,
        rho: Some(rho),
        lhs,
        threshold: 1.0,
        holds: lhs.is_finite() && lhs < 1.0 - CERT_MARGIN,
        constants: vec![
            ("norm_bracket".into(), bracket),
            ("inv_m".into(), inv_m),
            ("f2_envelope".into(), envelope),
            ("r_m2".into(), r2),
        ],
        advisory: source == BoundsSource::Sampled,
    })
}

/// Index-zero condition at radius rho: the inf over the window of the
/// resolved psi bracket plus the doubled windowed kernel integral, scaled
/// by the f1 envelope, must exceed 1.
pub fn check_i0(problem: &ProblemSpec, rho: f64) -> Result<ConditionResult> {
    let (psis, w, r1) = lower_resolved(problem)?;
    let kernel = &problem.kernel;
    let (a, b) = kernel.window();
    let bracket = |t: f64| {
        let mut acc = 0.0;
        for (psi, wj) in psis.iter().zip(&w) {
            acc += psi.curve.eval(t) * wj;
        }
        // doubled window term; on symmetric windows the doubling matches
        // the sharp constant of the worked Green's-function reduction
        acc + 2.0 * window_integral(kernel, t).unwrap_or(f64::NAN)
    };
    let req =
        ExtremumRequest::new(&bracket, a, b, ExtremumMode::Inf).with_seeds(kernel.t_seeds());
    let (arg, inf) = extremize(&req);
    let (envelope, source) = f1_lower_bound(problem, rho)?;
    let lhs = envelope * inf;
    Ok(ConditionResult {
        kind: ConditionKind::I0,
        rho: Some(rho),
        lhs,
        threshold: 1.0,
        holds: lhs.is_finite() && lhs > 1.0 + CERT_MARGIN,
        constants: vec![
            ("inf_bracket".into(), inf),
            ("inf_arg".into(), arg),
            ("f1_envelope".into(), envelope),
            ("r_m1".into(), r1),
        ],
        advisory: source == BoundsSource::Sampled,
    })
}

/// Coarser index-zero condition using the separated infima and M(a,b).
/// Implies the pointwise condition whenever it holds.
pub fn check_i0_strong(problem: &ProblemSpec, rho: f64) -> Result<ConditionResult> {
    let (psis, w, r1) = lower_resolved(problem)?;
    let kernel = &problem.kernel;
    let (a, b) = kernel.window();
    let psi_sum = |t: f64| {
        psis.iter()
            .zip(&w)
            .map(|(psi, wj)| psi.curve.eval(t) * wj)
            .sum::<f64>()
    };
    let req =
        ExtremumRequest::new(&psi_sum, a, b, ExtremumMode::Inf).with_seeds(kernel.t_seeds());
    let (_, inf_psi) = extremize(&req);
    let big_m = big_m_constant(kernel)?;
    let bracket = inf_psi + 1.0 / big_m;
    let (envelope, source) = f1_lower_bound(problem, rho)?;
    let lhs = envelope * bracket;
    Ok(ConditionResult {
        kind: ConditionKind::I0Strong,
        rho: Some(rho),
        lhs,
        threshold: 1.0,
        holds: lhs.is_finite() && lhs > 1.0 + CERT_MARGIN,
        constants: vec![
            ("inf_psi_sum".into(), inf_psi),
            ("inv_big_m".into(), 1.0 / big_m),
            ("f1_envelope".into(), envelope),
            ("r_m1".into(), r1),
        ],
        advisory: source == BoundsSource::Sampled,
    })
}

/// The two non-existence clauses, verified on sample grids. Without an
/// analytic attestation in the problem the outcome stays advisory.
pub fn check_nonexistence(
    problem: &ProblemSpec,
) -> Result<(ConditionResult, ConditionResult)> {
    let kernel = &problem.kernel;
    let advisory = !problem.nonexist_attested;

    // clause on the upper part: f2(t,u) < m (1 - sum ||psi|| ||phi||) |u|
    let m = m_constant(kernel)?;
    let lip = crate::functional::h2_lip_bound(kernel, &problem.upper)?;
    let slack = m * (1.0 - lip);
    let mut worst_ratio: f64 = 0.0;
    if slack > 0.0 && m.is_finite() {
        for i in 0..=32 {
            let t = i as f64 / 32.0;
            for u in signed_magnitudes() {
                let ratio = problem.f2_eval(t, u) / (slack * u.abs());
                worst_ratio = worst_ratio.max(ratio);
            }
        }
    } else {
        worst_ratio = f64::INFINITY;
    }
    let clause1 = ConditionResult {
        kind: ConditionKind::Nonexist1,
        rho: None,
        lhs: worst_ratio,
        threshold: 1.0,
        holds: worst_ratio.is_finite() && worst_ratio < 1.0 - CERT_MARGIN,
        constants: vec![("m".into(), m), ("h2_lip_bound".into(), lip)],
        advisory,
    };

    // clause on the lower part: f1(t,u) > M(a,b) u on the window
    let (a, b) = kernel.window();
    let big_m = big_m_constant(kernel)?;
    let mut least_ratio = f64::INFINITY;
    for i in 0..=32 {
        let t = a + (b - a) * i as f64 / 32.0;
        for u in positive_magnitudes() {
            let ratio = problem.f1_eval(t, u) / (big_m * u);
            least_ratio = least_ratio.min(ratio);
        }
    }
    let clause2 = ConditionResult {
        kind: ConditionKind::Nonexist2,
        rho: None,
        lhs: least_ratio,
        threshold: 1.0,
        holds: least_ratio.is_finite() && least_ratio > 1.0 + CERT_MARGIN,
        constants: vec![("big_m".into(), big_m)],
        advisory,
    };
    Ok((clause1, clause2))
}

fn positive_magnitudes() -> Vec<f64> {
    let mut out = Vec::with_capacity(49);
    for k in -24..=24 {
        out.push(10f64.powf(k as f64 / 4.0));
    }
    out
}

fn signed_magnitudes() -> Vec<f64> {
    let mut out = positive_magnitudes();
    let neg: Vec<f64> = out.iter().map(|x| -x).collect();
    out.extend(neg);
    out
}
