//! Boundary functionals, the psi functions they pair with, and the derived
//! kernel sections and norm bounds.
//!
//! A problem carries two families of functionals. The lower family enters
//! superadditive lower estimates on the window, the upper family enters
//! subadditive upper estimates on the whole interval. Each functional phi
//! pairs with a function psi: either a kernel-smoothed coefficient
//! t -> integral of |k(t,s)| g(s) gamma(s) ds, or a boundary coefficient
//! delta taken as-is.

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::kernel::{KernelSpec, Map1};
use crate::quad::{extremize, integrate, ExtremumMode, ExtremumRequest, IntegrationRequest};
use crate::rng::XorShift;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Lower,
    Upper,
}

impl Family {
    pub fn label(&self) -> &'static str {
        match self {
            Family::Lower => "lower",
            Family::Upper => "upper",
        }
    }
}

#[derive(Clone)]
pub enum FunctionalKind {
    /// Minimum of the argument over the kernel window.
    MinWindow,
    /// Maximum of the argument over the kernel window.
    MaxWindow,
    /// Point evaluation at tau.
    PointEval(f64),
    /// Integral against a density plus point masses.
    Stieltjes {
        density: Option<Map1>,
        atoms: Vec<(f64, f64)>,
    },
}

impl std::fmt::Debug for FunctionalKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FunctionalKind::MinWindow => write!(f, "MinWindow"),
            FunctionalKind::MaxWindow => write!(f, "MaxWindow"),
            FunctionalKind::PointEval(tau) => write!(f, "PointEval({tau})"),
            FunctionalKind::Stieltjes { atoms, .. } => {
                write!(f, "Stieltjes({} atoms)", atoms.len())
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct FunctionalSpec {
    pub kind: FunctionalKind,
    pub family: Family,
    /// Smallest declared constant with |phi[u]| <= norm_bound * ||u||.
    pub norm_bound: Option<f64>,
}

impl FunctionalSpec {
    pub fn new(kind: FunctionalKind, family: Family) -> FunctionalSpec {
        // min and max over a window are 1-Lipschitz and attain the bound on
        // constants, so their norm is exactly 1; same for point evaluation
        let norm_bound = match &kind {
            FunctionalKind::MinWindow
            | FunctionalKind::MaxWindow
            | FunctionalKind::PointEval(_) => Some(1.0),
            FunctionalKind::Stieltjes { .. } => None,
        };
        FunctionalSpec {
            kind,
            family,
            norm_bound,
        }
    }

    pub fn with_norm_bound(mut self, bound: f64) -> FunctionalSpec {
        self.norm_bound = Some(bound);
        self
    }
}

/// Applies a functional to a sampled function.
pub fn apply_functional(
    phi: &FunctionalSpec,
    window: (f64, f64),
    u: &GridFunction,
) -> f64 {
    let (a, b) = window;
    match &phi.kind {
        FunctionalKind::MinWindow => u.min_on(a, b),
        FunctionalKind::MaxWindow => u.max_on(a, b),
        FunctionalKind::PointEval(tau) => u.eval(*tau),
        FunctionalKind::Stieltjes { density, atoms } => {
            let mut acc = 0.0;
            if let Some(w) = density {
                let f = |t: f64| u.eval(t) * w(t);
                let req = IntegrationRequest::new(&f, 0.0, 1.0)
                    .with_breakpoints(u.nodes().to_vec());
                acc += integrate(&req).map(|(v, _)| v).unwrap_or(f64::NAN);
            }
            for (tau, mass) in atoms {
                acc += mass * u.eval(*tau);
            }
            acc
        }
    }
}

/// Applies a functional to a continuous callable. Used where interpolation
/// accuracy matters, e.g. for kernel sections.
pub fn apply_functional_fn(
    phi: &FunctionalSpec,
    window: (f64, f64),
    seeds: &[f64],
    u: &dyn Fn(f64) -> f64,
) -> f64 {
    let (a, b) = window;
    match &phi.kind {
        FunctionalKind::MinWindow => {
            let req = ExtremumRequest::new(&u, a, b, ExtremumMode::Inf)
                .with_seeds(seeds.to_vec());
            extremize(&req).1
        }
        FunctionalKind::MaxWindow => {
            let req = ExtremumRequest::new(&u, a, b, ExtremumMode::Sup)
                .with_seeds(seeds.to_vec());
            extremize(&req).1
        }
        FunctionalKind::PointEval(tau) => u(*tau),
        FunctionalKind::Stieltjes { density, atoms } => {
            let mut acc = 0.0;
            if let Some(w) = density {
                let f = |t: f64| u(t) * w(t);
                let req = IntegrationRequest::new(&f, 0.0, 1.0)
                    .with_breakpoints(seeds.to_vec());
                acc += integrate(&req).map(|(v, _)| v).unwrap_or(f64::NAN);
            }
            for (tau, mass) in atoms {
                acc += mass * u(*tau);
            }
            acc
        }
    }
}

/// One functional family of a problem: the functionals phi paired with the
/// coefficients that generate their psi partners. `alphas` pair with kernel
/// coefficients gamma, `betas` pair with boundary coefficients delta.
#[derive(Clone)]
pub struct FamilySpec {
    pub family: Family,
    pub alphas: Vec<FunctionalSpec>,
    pub gammas: Vec<Map1>,
    pub betas: Vec<FunctionalSpec>,
    pub deltas: Vec<Map1>,
}

impl FamilySpec {
    pub fn empty(family: Family) -> FamilySpec {
        FamilySpec {
            family,
            alphas: Vec::new(),
            gammas: Vec::new(),
            betas: Vec::new(),
            deltas: Vec::new(),
        }
    }

    /// All functionals in psi order: alphas first, then betas.
    pub fn functionals(&self) -> Vec<&FunctionalSpec> {
        self.alphas.iter().chain(self.betas.iter()).collect()
    }

    pub fn len(&self) -> usize {
        self.alphas.len() + self.betas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A validated psi function: sampled curve plus cached norms.
#[derive(Debug, Clone)]
pub struct PsiFunction {
    pub curve: GridFunction,
    pub norm: f64,
    pub window_min: f64,
}

pub const PSI_NODES: usize = 257;
const CONE_TOL: f64 = 1e-9;
const ZERO_TOL: f64 = 1e-12;

/// Builds and validates the psi functions of one family, in the order
/// (smoothed gammas, then deltas).
pub fn build_psi(kernel: &KernelSpec, spec: &FamilySpec) -> Result<Vec<PsiFunction>> {
    let (a, b) = kernel.window();
    let mut out = Vec::with_capacity(spec.len());
    for gamma in &spec.gammas {
        let f = |t: f64| {
            let integrand = |s: f64| kernel.k(t, s).abs() * kernel.g(s) * gamma(s);
            let req = IntegrationRequest::new(&integrand, 0.0, 1.0)
                .with_breakpoints(kernel.s_breakpoints(t));
            integrate(&req).map(|(v, _)| v).unwrap_or(f64::NAN)
        };
        out.push(GridFunction::sample(PSI_NODES, f));
    }
    for delta in &spec.deltas {
        out.push(GridFunction::sample(PSI_NODES, |t| delta(t)));
    }

    let mut validated = Vec::with_capacity(out.len());
    for (index, curve) in out.into_iter().enumerate() {
        let norm = curve.max_on(0.0, 1.0).max(-curve.min_on(0.0, 1.0));
        if norm < ZERO_TOL {
            return Err(Error::PsiZero {
                family: spec.family.label(),
                index,
            });
        }
        let window_min = curve.min_on(a, b);
        let required = kernel.c() * norm;
        if window_min < required - CONE_TOL {
            return Err(Error::PsiNotInCone {
                family: spec.family.label(),
                index,
                min: window_min,
                required,
            });
        }
        validated.push(PsiFunction {
            curve,
            norm,
            window_min,
        });
    }
    Ok(validated)
}

/// Kernel section of a functional: the lower family applies phi to
/// t -> k(t, s), the upper family to t -> |k(t, s)|.
pub fn k_phi(phi: &FunctionalSpec, kernel: &KernelSpec, s: f64) -> Result<f64> {
    let seeds = if kernel.has_diagonal_kink() {
        vec![s]
    } else {
        Vec::new()
    };
    let value = match phi.family {
        Family::Lower => {
            let section = |t: f64| kernel.k(t, s);
            apply_functional_fn(phi, kernel.window(), &seeds, &section)
        }
        Family::Upper => {
            let section = |t: f64| kernel.k(t, s).abs();
            apply_functional_fn(phi, kernel.window(), &seeds, &section)
        }
    };
    if value < -1e-10 {
        return Err(Error::NegativeKphi { s, value });
    }
    Ok(value)
}

/// Upper bound on the Lipschitz seminorm of the boundary perturbation:
/// the sum over the upper family of ||psi|| * ||phi||.
pub fn h2_lip_bound(kernel: &KernelSpec, upper: &FamilySpec) -> Result<f64> {
    let psis = build_psi(kernel, upper)?;
    let mut acc = 0.0;
    for (index, (phi, psi)) in upper.functionals().iter().zip(&psis).enumerate() {
        let bound = phi
            .norm_bound
            .ok_or(Error::MissingNormBound { index })?;
        acc += psi.norm * bound;
    }
    Ok(acc)
}

/// Randomized structural validation of a functional: monotonicity, the
/// scaling-with-additivity estimate of its family, and (upper family) the
/// triangle property. Samples are deterministic for reproducibility.
pub fn validate_functional(
    phi: &FunctionalSpec,
    window: (f64, f64),
    samples: usize,
) -> Result<()> {
    let mut rng = XorShift::new(0x5eed_cafe);
    for trial in 0..samples {
        let u = random_cone_sample(&mut rng);
        let v = random_cone_sample(&mut rng);
        let fu = apply_functional(phi, window, &u);
        let fv = apply_functional(phi, window, &v);

        if fu < -1e-10 || fv < -1e-10 {
            return Err(Error::FunctionalValidation(format!(
                "negative value on a nonnegative sample (trial {trial}): {fu}"
            )));
        }

        let t1 = rng.in_range(0.0, 2.0);
        let t2 = rng.in_range(0.0, 2.0);
        let mix = GridFunction::new(
            u.nodes().to_vec(),
            u.values()
                .iter()
                .zip(v.values())
                .map(|(x, y)| t1 * x + t2 * y)
                .collect(),
        );
        let fmix = apply_functional(phi, window, &mix);
        match phi.family {
            Family::Lower => {
                if fmix < t1 * fu + t2 * fv - 1e-8 {
                    return Err(Error::FunctionalValidation(format!(
                        "superadditivity failed (trial {trial}): {fmix} < {}",
                        t1 * fu + t2 * fv
                    )));
                }
            }
            Family::Upper => {
                if fmix > t1 * fu + t2 * fv + 1e-8 {
                    return Err(Error::FunctionalValidation(format!(
                        "subadditivity failed (trial {trial}): {fmix} > {}",
                        t1 * fu + t2 * fv
                    )));
                }
                let diff = GridFunction::new(
                    u.nodes().to_vec(),
                    u.values()
                        .iter()
                        .zip(v.values())
                        .map(|(x, y)| (x - y).abs())
                        .collect(),
                );
                let fdiff = apply_functional(phi, window, &diff);
                if (fu - fv).abs() > fdiff + 1e-8 {
                    return Err(Error::FunctionalValidation(format!(
                        "triangle property failed (trial {trial})"
                    )));
                }
            }
        }

        // monotone dominance: u + nonnegative bump never decreases phi
        let bump = random_cone_sample(&mut rng);
        let dominating = GridFunction::new(
            u.nodes().to_vec(),
            u.values()
                .iter()
                .zip(bump.values())
                .map(|(x, y)| x + y)
                .collect(),
        );
        if apply_functional(phi, window, &dominating) < fu - 1e-10 {
            return Err(Error::FunctionalValidation(format!(
                "monotonicity failed (trial {trial})"
            )));
        }
    }
    Ok(())
}

/// Smooth random nonnegative function on a fixed 65-node grid.
pub(crate) fn random_cone_sample(rng: &mut XorShift) -> GridFunction {
    let c0 = rng.in_range(0.0, 2.0);
    let c1 = rng.in_range(-1.0, 1.0);
    let c2 = rng.in_range(-1.0, 1.0);
    let c3 = rng.in_range(-1.0, 1.0);
    let raw = |t: f64| {
        c0 + c1 * t
            + c2 * (std::f64::consts::PI * t).sin()
            + c3 * t * (1.0 - t) * 4.0
    };
    // shift up so the sample stays nonnegative between nodes as well
    let mut min = f64::INFINITY;
    for i in 0..=1024 {
        min = min.min(raw(i as f64 / 1024.0));
    }
    let shift = if min < 1e-6 { 1e-6 - min } else { 0.0 };
    GridFunction::sample(65, |t| raw(t) + shift)
}
