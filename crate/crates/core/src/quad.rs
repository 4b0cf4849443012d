//! Deterministic adaptive integration and one-dimensional extremum search.
//!
//! The base rule is 15-point Gauss-Legendre per panel, refined by bisection
//! with a two-estimate difference as the error indicator. Declared
//! breakpoints become panel boundaries so that panels never straddle a kink.

use crate::error::{Error, Result};
use std::sync::OnceLock;

pub const DEFAULT_REL_TOL: f64 = 1e-10;
pub const DEFAULT_ABS_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_SUBDIVISIONS: usize = 2048;

const GL_POINTS: usize = 15;

/// Gauss-Legendre nodes and weights on [-1, 1], generated once by Newton
/// iteration on the Legendre polynomial so no literal tables are needed.
fn gauss_rule() -> &'static ([f64; GL_POINTS], [f64; GL_POINTS]) {
    static RULE: OnceLock<([f64; GL_POINTS], [f64; GL_POINTS])> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_POINTS;
        let mut nodes = [0.0; GL_POINTS];
        let mut weights = [0.0; GL_POINTS];
        for i in 0..n {
            // Chebyshev-style initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre(n, x);
            nodes[n - 1 - i] = x;
            weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        (nodes, weights)
    })
}

/// Legendre polynomial P_n and derivative at x via the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

fn gl15<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> f64 {
    let (nodes, weights) = gauss_rule();
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut acc = 0.0;
    for i in 0..GL_POINTS {
        acc += weights[i] * f(mid + half * nodes[i]);
    }
    acc * half
}

/// One definite integral with declared interior breakpoints.
pub struct IntegrationRequest<'a> {
    pub integrand: &'a dyn Fn(f64) -> f64,
    pub interval: (f64, f64),
    /// Sorted points strictly inside the interval that panels must not cross.
    pub breakpoints: Vec<f64>,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl<'a> IntegrationRequest<'a> {
    pub fn new(integrand: &'a dyn Fn(f64) -> f64, lo: f64, hi: f64) -> Self {
        IntegrationRequest {
            integrand,
            interval: (lo, hi),
            breakpoints: Vec::new(),
            rel_tol: DEFAULT_REL_TOL,
            abs_tol: DEFAULT_ABS_TOL,
            max_subdivisions: DEFAULT_MAX_SUBDIVISIONS,
        }
    }

    pub fn with_breakpoints(mut self, mut points: Vec<f64>) -> Self {
        let (lo, hi) = self.interval;
        points.retain(|p| *p > lo && *p < hi);
        points.sort_by(|a, b| a.partial_cmp(b).unwrap());
        points.dedup();
        self.breakpoints = points;
        self
    }
}

/// Adaptive integration. Returns the value and an error estimate satisfying
/// the requested tolerances, or fails once the subdivision budget is spent.
pub fn integrate(req: &IntegrationRequest) -> Result<(f64, f64)> {
    let (lo, hi) = req.interval;
    if !(hi > lo) {
        return Ok((0.0, 0.0));
    }
    let total_len = hi - lo;
    let mut edges = Vec::with_capacity(req.breakpoints.len() + 2);
    edges.push(lo);
    edges.extend_from_slice(&req.breakpoints);
    edges.push(hi);

    let mut budget = req.max_subdivisions as isize;
    let mut value = 0.0;
    let mut err = 0.0;
    for pair in edges.windows(2) {
        let (v, e) = adapt_segment(req, pair[0], pair[1], total_len, &mut budget)?;
        value += v;
        err += e;
    }
    Ok((value, err))
}

fn adapt_segment(
    req: &IntegrationRequest,
    lo: f64,
    hi: f64,
    total_len: f64,
    budget: &mut isize,
) -> Result<(f64, f64)> {
    let whole = gl15(&req.integrand, lo, hi);
    // Explicit stack, processed left to right for a deterministic sum order.
    let mut stack = vec![(lo, hi, whole)];
    let mut out: Vec<(f64, f64)> = Vec::new();
    while let Some((a, b, est)) = stack.pop() {
        let mid = 0.5 * (a + b);
        let left = gl15(&req.integrand, a, mid);
        let right = gl15(&req.integrand, mid, b);
        let refined = left + right;
        let diff = (refined - est).abs();
        let share = (b - a) / total_len;
        let tol = f64::max(req.abs_tol * share, req.rel_tol * refined.abs() * share.max(1e-3));
        if diff <= tol || b - a < 1e-14 {
            out.push((refined, diff));
            continue;
        }
        *budget -= 1;
        if *budget < 0 {
            let partial: f64 = out.iter().map(|(v, _)| v).sum();
            return Err(Error::QuadratureFailure {
                value: partial + refined,
                error_estimate: diff,
                subdivisions: req.max_subdivisions,
            });
        }
        stack.push((mid, b, right));
        stack.push((a, mid, left));
    }
    let value = out.iter().map(|(v, _)| v).sum();
    let err = out.iter().map(|(_, e)| e).sum();
    Ok((value, err))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExtremumMode {
    Sup,
    Inf,
}

/// One-dimensional extremum search over an interval.
pub struct ExtremumRequest<'a> {
    pub objective: &'a dyn Fn(f64) -> f64,
    pub interval: (f64, f64),
    pub mode: ExtremumMode,
    pub tol: f64,
    /// Extra seed points, e.g. declared kinks of the objective.
    pub seeds: Vec<f64>,
}

impl<'a> ExtremumRequest<'a> {
    pub fn new(objective: &'a dyn Fn(f64) -> f64, lo: f64, hi: f64, mode: ExtremumMode) -> Self {
        ExtremumRequest {
            objective,
            interval: (lo, hi),
            mode,
            tol: 1e-9,
            seeds: Vec::new(),
        }
    }

    pub fn with_seeds(mut self, seeds: Vec<f64>) -> Self {
        self.seeds = seeds;
        self
    }
}

const SEED_SAMPLES: usize = 257;

/// Seed scan on a Chebyshev-distributed grid followed by golden-section
/// polish around the best three seeds. Endpoints and declared seeds are
/// always evaluated exactly, so extrema attained there are exact.
pub fn extremize(req: &ExtremumRequest) -> (f64, f64) {
    let (lo, hi) = req.interval;
    if hi <= lo {
        return (lo, (req.objective)(lo));
    }
    let sign = match req.mode {
        ExtremumMode::Sup => -1.0,
        ExtremumMode::Inf => 1.0,
    };
    // Work in minimization form.
    let f = |x: f64| sign * (req.objective)(x);

    let mut xs: Vec<f64> = Vec::with_capacity(SEED_SAMPLES + 2 + req.seeds.len());
    for i in 0..SEED_SAMPLES {
        let theta = std::f64::consts::PI * (i as f64 + 0.5) / SEED_SAMPLES as f64;
        xs.push(0.5 * (lo + hi) - 0.5 * (hi - lo) * theta.cos());
    }
    xs.push(lo);
    xs.push(hi);
    for s in &req.seeds {
        if *s >= lo && *s <= hi {
            xs.push(*s);
        }
    }
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs.dedup();

    let vals: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&i, &j| vals[i].partial_cmp(&vals[j]).unwrap_or(std::cmp::Ordering::Equal));

    let mut best_x = xs[order[0]];
    let mut best_v = vals[order[0]];
    for &i in order.iter().take(3) {
        let a = if i == 0 { xs[0] } else { xs[i - 1] };
        let b = if i + 1 == xs.len() { xs[xs.len() - 1] } else { xs[i + 1] };
        let (x, v) = golden_min(&f, a, b, req.tol);
        if v < best_v {
            best_v = v;
            best_x = x;
        }
    }
    (best_x, sign * best_v)
}

fn golden_min<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exactness_of_base_rule() {
        // one GL15 panel integrates degree <= 29 exactly
        let f = |x: f64| x.powi(28);
        let got = gl15(&f, 0.0, 1.0);
        assert!((got - 1.0 / 29.0).abs() < 1e-14 / 29.0 + 1e-16);
        let f = |x: f64| 7.0 * x.powi(3) - x + 2.0;
        let got = gl15(&f, -1.0, 3.0);
        assert!((got - (7.0 / 4.0 * (81.0 - 1.0) - (9.0 - 1.0) / 2.0 + 8.0)).abs() < 1e-12);
    }

    #[test]
    fn simple_integrals() {
        let f = |s: f64| s * (1.0 - s);
        let (v, e) = integrate(&IntegrationRequest::new(&f, 0.0, 1.0)).unwrap();
        assert!((v - 1.0 / 6.0).abs() < 1e-14);
        assert!(e < 1e-12);

        let z = |_s: f64| 0.0;
        let (v, _) = integrate(&IntegrationRequest::new(&z, 0.0, 1.0)).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn breakpoint_respected_for_kink() {
        let f = |s: f64| (s - 0.5).abs();
        let req = IntegrationRequest::new(&f, 0.0, 1.0).with_breakpoints(vec![0.5]);
        let (v, _) = integrate(&req).unwrap();
        assert!((v - 0.25).abs() < 1e-12);
        // without the declaration it still converges, just less directly
        let req = IntegrationRequest::new(&f, 0.0, 1.0);
        let (v, _) = integrate(&req).unwrap();
        assert!((v - 0.25).abs() < 1e-10);
    }

    #[test]
    fn budget_exhaustion_reports_failure() {
        let f = |s: f64| if s > 0.0 { s.powf(-0.5) } else { 0.0 };
        let mut req = IntegrationRequest::new(&f, 0.0, 1.0);
        req.max_subdivisions = 4;
        req.rel_tol = 1e-14;
        req.abs_tol = 1e-15;
        assert!(matches!(
            integrate(&req),
            Err(Error::QuadratureFailure { .. })
        ));
    }

    #[test]
    fn determinism() {
        let f = |s: f64| (10.0 * s).sin() * s.exp();
        let req = IntegrationRequest::new(&f, 0.0, 1.0);
        let (v1, e1) = integrate(&req).unwrap();
        let (v2, e2) = integrate(&IntegrationRequest::new(&f, 0.0, 1.0)).unwrap();
        assert_eq!(v1.to_bits(), v2.to_bits());
        assert_eq!(e1.to_bits(), e2.to_bits());
    }

    #[test]
    fn extremum_of_parabola() {
        let f = |t: f64| t * (1.0 - t) / 2.0;
        let (arg, val) = extremize(&ExtremumRequest::new(&f, 0.0, 1.0, ExtremumMode::Sup));
        assert!((arg - 0.5).abs() < 1e-7);
        assert!((val - 0.125).abs() < 1e-14);
    }

    #[test]
    fn extremum_at_endpoint_is_exact() {
        let f = |t: f64| t;
        let (arg, val) = extremize(&ExtremumRequest::new(&f, 0.25, 0.75, ExtremumMode::Inf));
        assert_eq!(arg, 0.25);
        assert_eq!(val, 0.25);
    }

    #[test]
    fn kink_seed_finds_spike() {
        // narrow tent at 0.3137 would be easy to miss without the seed
        let c = 0.3137;
        let f = move |t: f64| (1.0 - 5000.0 * (t - c).abs()).max(0.0);
        let req =
            ExtremumRequest::new(&f, 0.0, 1.0, ExtremumMode::Sup).with_seeds(vec![c]);
        let (_, val) = extremize(&req);
        assert!((val - 1.0).abs() < 1e-12);
    }
}
