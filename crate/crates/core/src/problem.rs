//! The full problem description: kernel, functional families, nonlinearity
//! decomposition, boundary and deviation operators, and solver settings.

use crate::expr::Expr;
use crate::functional::{FamilySpec, FunctionalSpec};
use crate::kernel::{KernelSpec, Map1};

/// Boundary operator: a sum of coefficient functions times functionals,
/// Bu(t) = sum of delta_j(t) * phi_j[u].
#[derive(Clone, Default)]
pub struct BoundaryOp {
    pub terms: Vec<(Map1, FunctionalSpec)>,
}

impl BoundaryOp {
    pub fn none() -> BoundaryOp {
        BoundaryOp { terms: Vec::new() }
    }
}

/// Deviation operator feeding the third nonlinearity argument.
#[derive(Clone)]
pub enum DeviationOp {
    /// The nonlinearity ignores its third argument.
    None,
    /// Du = u.
    Identity,
    /// Du = u composed with eta; eta is an expression in t.
    Compose(Expr),
}

/// Declared closed-form bounds for the per-rho nonlinearity envelopes,
/// as expressions in (rho, c).
#[derive(Clone, Default)]
pub struct DeclaredBounds {
    pub f2_upper: Option<Expr>,
    pub f1_lower: Option<Expr>,
}

/// Declared asymptotic limits of f2(t,u)/|u| and f1(t,u)/u.
#[derive(Clone, Copy, Default)]
pub struct DeclaredLimits {
    pub f2_at_0: Option<f64>,
    pub f1_at_0: Option<f64>,
    pub f2_at_inf: Option<f64>,
    pub f1_at_inf: Option<f64>,
}

impl DeclaredLimits {
    pub fn any(&self) -> bool {
        self.f2_at_0.is_some()
            || self.f1_at_0.is_some()
            || self.f2_at_inf.is_some()
            || self.f1_at_inf.is_some()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SolverParams {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Depth of the acceleration history; zero disables acceleration.
    pub anderson_depth: usize,
    pub nodes: usize,
    /// Starting constant; the shell geometric mean is used when absent.
    pub u0: Option<f64>,
}

impl Default for SolverParams {
    fn default() -> SolverParams {
        SolverParams {
            damping: 0.5,
            tol: 1e-10,
            max_iter: 2000,
            anderson_depth: 3,
            nodes: 129,
            u0: None,
        }
    }
}

pub struct ProblemSpec {
    pub kernel: KernelSpec,
    pub lower: FamilySpec,
    pub upper: FamilySpec,
    /// Full nonlinearity f(t, u, v); v receives the deviated argument.
    pub f: Expr,
    /// Lower comparison part f1(t, u).
    pub f1: Expr,
    /// Upper comparison part f2(t, u).
    pub f2: Expr,
    pub bounds: DeclaredBounds,
    pub limits: DeclaredLimits,
    pub b_op: BoundaryOp,
    pub d_op: DeviationOp,
    pub rho_list: Vec<f64>,
    pub solver: SolverParams,
    /// Set when the user vouches analytically for the open non-existence
    /// inequalities; sampled verification alone stays advisory.
    pub nonexist_attested: bool,
}

impl ProblemSpec {
    pub fn f_eval(&self, t: f64, u: f64, v: f64) -> f64 {
        self.f.eval(&[t, u, v])
    }

    pub fn f1_eval(&self, t: f64, u: f64) -> f64 {
        self.f1.eval(&[t, u])
    }

    pub fn f2_eval(&self, t: f64, u: f64) -> f64 {
        self.f2.eval(&[t, u])
    }
}
