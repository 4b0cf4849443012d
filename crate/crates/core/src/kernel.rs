//! Kernels of the integral operator together with their envelopes, windows,
//! weights and the derived comparison constants.
//!
//! A kernel spec carries everything the cone construction needs: the kernel
//! k(t,s) itself, an envelope with |k(t,s)| <= Phi(s), a window [a, b] on
//! which k(t,s) >= c1 * Phi(s), and a weight g. Two classic boundary value
//! problem kernels ship as presets.

use crate::error::{Error, Result};
use crate::quad::{extremize, integrate, ExtremumMode, ExtremumRequest, IntegrationRequest};
use std::sync::Arc;

pub type Map1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type Map2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignClass {
    Nonnegative,
    Signed,
}

pub const DEFAULT_GRID_DENSITY: usize = 201;
pub const DEFAULT_C1_TOL: f64 = 1e-9;
/// Windows narrower than this are rejected outright.
pub const MIN_WINDOW: f64 = 1e-6;
/// Envelopes may vanish at the endpoints, so ratio scans stay this far
/// inside the interval.
const EDGE_CLIP: f64 = 1e-9;

#[derive(Clone)]
pub struct KernelSpec {
    evaluate: Map2,
    envelope: Map1,
    window: (f64, f64),
    c1: f64,
    c: f64,
    weight: Map1,
    sign_class: SignClass,
    /// The kernel has a derivative jump across t = s.
    diagonal_kink: bool,
    s_kinks: Vec<f64>,
    t_kinks: Vec<f64>,
}

impl std::fmt::Debug for KernelSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KernelSpec")
            .field("window", &self.window)
            .field("c1", &self.c1)
            .field("c", &self.c)
            .field("sign_class", &self.sign_class)
            .finish()
    }
}

impl KernelSpec {
    /// Build a spec, computing c1 from the kernel and envelope. The default
    /// cone constant is c = c1, the largest admissible choice.
    pub fn new(
        evaluate: Map2,
        envelope: Map1,
        window: (f64, f64),
        weight: Map1,
        sign_class: SignClass,
        diagonal_kink: bool,
    ) -> Result<KernelSpec> {
        let (a, b) = window;
        if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) || b - a < MIN_WINDOW {
            return Err(Error::DegenerateWindow { a, b });
        }
        let c1 = compute_c1(
            evaluate.as_ref(),
            envelope.as_ref(),
            window,
            diagonal_kink,
            DEFAULT_GRID_DENSITY,
            DEFAULT_C1_TOL,
        )?;
        Ok(KernelSpec {
            evaluate,
            envelope,
            window,
            c1,
            c: c1,
            weight,
            sign_class,
            diagonal_kink,
            s_kinks: Vec::new(),
            t_kinks: Vec::new(),
        })
    }

    /// Build a spec with a user-declared c1 instead of the computed one.
    /// The envelope scan still runs; the declared constant is trusted and
    /// only clamped into (0, 1]. Useful when the window touches a kernel
    /// zero and the computed infimum would degenerate.
    pub fn with_declared_c1(
        evaluate: Map2,
        envelope: Map1,
        window: (f64, f64),
        weight: Map1,
        sign_class: SignClass,
        diagonal_kink: bool,
        c1: f64,
    ) -> Result<KernelSpec> {
        let (a, b) = window;
        if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) || b - a < MIN_WINDOW {
            return Err(Error::DegenerateWindow { a, b });
        }
        if !(c1 > 0.0) {
            return Err(Error::NonPositiveC1 { value: c1 });
        }
        let c1 = c1.min(1.0);
        Ok(KernelSpec {
            evaluate,
            envelope,
            window,
            c1,
            c: c1,
            weight,
            sign_class,
            diagonal_kink,
            s_kinks: Vec::new(),
            t_kinks: Vec::new(),
        })
    }

    /// Override the cone constant; values are clamped into (0, c1].
    pub fn with_c(mut self, c: f64) -> KernelSpec {
        self.c = c.clamp(f64::MIN_POSITIVE, self.c1);
        self
    }

    /// Replace the weight, declaring any kink locations it introduces.
    pub fn with_weight(mut self, weight: Map1, s_kinks: Vec<f64>) -> KernelSpec {
        self.weight = weight;
        self.s_kinks = s_kinks;
        self
    }

    /// Declare extra kink locations of t -> k(t, s).
    pub fn with_t_kinks(mut self, t_kinks: Vec<f64>) -> KernelSpec {
        self.t_kinks = t_kinks;
        self
    }

    pub fn k(&self, t: f64, s: f64) -> f64 {
        (self.evaluate)(t, s)
    }

    pub fn phi(&self, s: f64) -> f64 {
        (self.envelope)(s)
    }

    pub fn g(&self, s: f64) -> f64 {
        (self.weight)(s)
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn sign_class(&self) -> SignClass {
        self.sign_class
    }

    pub fn has_diagonal_kink(&self) -> bool {
        self.diagonal_kink
    }

    /// Quadrature breakpoints of s -> k(t, s) g(s) for fixed t.
    pub fn s_breakpoints(&self, t: f64) -> Vec<f64> {
        let mut pts = self.s_kinks.clone();
        if self.diagonal_kink {
            pts.push(t);
        }
        pts
    }

    /// Seed points for extremum scans over t.
    pub fn t_seeds(&self) -> Vec<f64> {
        self.t_kinks.clone()
    }
}

/// Computes c1 = inf over s of (inf over t in [a,b] of k(t,s)) / Phi(s),
/// while also checking |k| <= Phi on the scanned grid.
pub fn compute_c1(
    evaluate: &dyn Fn(f64, f64) -> f64,
    envelope: &dyn Fn(f64) -> f64,
    window: (f64, f64),
    diagonal_kink: bool,
    grid_density: usize,
    tol: f64,
) -> Result<f64> {
    let (a, b) = window;
    if b - a < MIN_WINDOW {
        return Err(Error::DegenerateWindow { a, b });
    }

    // envelope domination scan over the full square
    for i in 0..grid_density {
        let t = i as f64 / (grid_density - 1) as f64;
        for j in 0..grid_density {
            let s = EDGE_CLIP + (1.0 - 2.0 * EDGE_CLIP) * j as f64 / (grid_density - 1) as f64;
            let kv = evaluate(t, s).abs();
            let ev = envelope(s);
            if kv > ev * (1.0 + tol) + 1e-14 {
                return Err(Error::EnvelopeViolated {
                    t,
                    s,
                    kernel: kv,
                    envelope: ev,
                });
            }
        }
    }

    let ratio = |s: f64| {
        let section = |t: f64| evaluate(t, s);
        let mut req = ExtremumRequest::new(&section, a, b, ExtremumMode::Inf);
        if diagonal_kink {
            req = req.with_seeds(vec![s]);
        }
        let (_, inf_t) = extremize(&req);
        let ev = envelope(s);
        if ev <= 0.0 {
            f64::INFINITY
        } else {
            inf_t / ev
        }
    };

    let req = ExtremumRequest::new(&ratio, EDGE_CLIP, 1.0 - EDGE_CLIP, ExtremumMode::Inf);
    let (_, c1) = extremize(&req);
    if !c1.is_finite() || c1 <= tol {
        return Err(Error::NonPositiveC1 { value: c1 });
    }
    Ok(c1.min(1.0))
}

/// sigma(t) = integral over [0,1] of |k(t,s)| g(s) ds.
pub fn sigma(kernel: &KernelSpec, t: f64) -> Result<f64> {
    let f = |s: f64| kernel.k(t, s).abs() * kernel.g(s);
    let req = IntegrationRequest::new(&f, 0.0, 1.0).with_breakpoints(kernel.s_breakpoints(t));
    integrate(&req).map(|(v, _)| v)
}

/// m with 1/m = sup over t in [0,1] of sigma(t). Returns infinity for a
/// vanishing weight.
pub fn m_constant(kernel: &KernelSpec) -> Result<f64> {
    let obj = |t: f64| sigma(kernel, t).unwrap_or(f64::NAN);
    let req =
        ExtremumRequest::new(&obj, 0.0, 1.0, ExtremumMode::Sup).with_seeds(kernel.t_seeds());
    let (_, sup) = extremize(&req);
    if sup.is_nan() {
        // re-run once at the top to surface the underlying quadrature error
        sigma(kernel, 0.5)?;
    }
    if sup <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(1.0 / sup)
}

/// Windowed kernel integral: integral over [a,b] of k(t,s) g(s) ds.
pub fn window_integral(kernel: &KernelSpec, t: f64) -> Result<f64> {
    let (a, b) = kernel.window();
    let f = |s: f64| kernel.k(t, s) * kernel.g(s);
    let req = IntegrationRequest::new(&f, a, b).with_breakpoints(kernel.s_breakpoints(t));
    integrate(&req).map(|(v, _)| v)
}

/// M(a,b) with 1/M = inf over t in [a,b] of the windowed kernel integral.
pub fn big_m_constant(kernel: &KernelSpec) -> Result<f64> {
    let (a, b) = kernel.window();
    if b - a < MIN_WINDOW {
        return Err(Error::DegenerateWindow { a, b });
    }
    let obj = |t: f64| window_integral(kernel, t).unwrap_or(f64::NAN);
    let req = ExtremumRequest::new(&obj, a, b, ExtremumMode::Inf).with_seeds(kernel.t_seeds());
    let (_, inf) = extremize(&req);
    if !(inf > 0.0) {
        return Err(Error::DegenerateWindow { a, b });
    }
    Ok(1.0 / inf)
}

/// Built-in kernels with closed-form reference formulas attached.
pub mod presets {
    use super::*;

    pub const DIRICHLET_MAX: &str = "dirichlet_max";
    pub const PERIODIC_DEVIATION: &str = "periodic_deviation";

    /// Green's function of -u'' with zero boundary values:
    /// k(t,s) = s(1-t) for s <= t and t(1-s) for t <= s, with unit weight.
    pub fn dirichlet_max(window: (f64, f64)) -> Result<KernelSpec> {
        let evaluate: Map2 = Arc::new(|t: f64, s: f64| {
            if s <= t {
                s * (1.0 - t)
            } else {
                t * (1.0 - s)
            }
        });
        let envelope: Map1 = Arc::new(|s: f64| s * (1.0 - s));
        let weight: Map1 = Arc::new(|_s: f64| 1.0);
        KernelSpec::new(
            evaluate,
            envelope,
            window,
            weight,
            SignClass::Nonnegative,
            true,
        )
    }

    /// Green's function of -u'' + u with periodic boundary conditions.
    /// Depends only on |t - s|; strictly positive.
    pub fn periodic_deviation(window: (f64, f64)) -> Result<KernelSpec> {
        let evaluate: Map2 = Arc::new(|t: f64, s: f64| periodic_profile((t - s).abs()));
        let sup = periodic_profile(0.0);
        let envelope: Map1 = Arc::new(move |_s: f64| sup);
        let weight: Map1 = Arc::new(|_s: f64| 1.0);
        KernelSpec::new(
            evaluate,
            envelope,
            window,
            weight,
            SignClass::Nonnegative,
            true,
        )
    }

    pub fn by_id(id: &str, window: (f64, f64)) -> Result<KernelSpec> {
        match id {
            DIRICHLET_MAX => dirichlet_max(window),
            PERIODIC_DEVIATION => periodic_deviation(window),
            other => Err(Error::Config(format!("unknown kernel preset `{other}`"))),
        }
    }

    /// Profile of the periodic kernel as a function of d = |t - s|:
    /// (e^d + e^(1-d)) / (2e - 2).
    pub fn periodic_profile(d: f64) -> f64 {
        (d.exp() + (1.0 - d).exp()) / (2.0 * std::f64::consts::E - 2.0)
    }

    /// Closed form of inf over t in [a,b] of the Dirichlet kernel section:
    /// s(1-b) up to the crossover a / (1 - (b - a)), then a(1-s).
    pub fn dirichlet_inf_section(a: f64, b: f64, s: f64) -> f64 {
        let crossover = a / (1.0 - (b - a));
        if s <= crossover {
            s * (1.0 - b)
        } else {
            a * (1.0 - s)
        }
    }

    /// Closed form of sigma for the Dirichlet kernel with unit weight.
    pub fn dirichlet_sigma(t: f64) -> f64 {
        0.5 * t * (1.0 - t)
    }
}
