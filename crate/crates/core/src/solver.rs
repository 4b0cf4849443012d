//! Fixed-point iteration for the perturbed integral operator: exhibits the
//! solutions whose existence the certificates guarantee.

use crate::certify::{match_patterns, ConditionLedger};
use crate::error::{Error, Result};
use crate::functional::{apply_functional, FunctionalKind, FunctionalSpec};
use crate::grid::GridFunction;
use crate::index::ConditionKind;
use crate::linalg;
use crate::problem::{DeviationOp, ProblemSpec};
use crate::quad::{integrate, IntegrationRequest};

/// Cone-membership slack for the computed (inexact) solution.
const CONE_TOL: f64 = 1e-8;
/// Sup-norm ceiling beyond which the iteration counts as divergent.
const DIVERGENCE_NORM: f64 = 1e6;

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: GridFunction,
    pub residual: f64,
    pub iterations: usize,
    pub cone_ok: bool,
    /// Sup-norm bounds of the certified shell containing the solution.
    pub shell: Option<(f64, f64)>,
    pub converged: bool,
}

/// Checks the deviation map on a dense grid and returns a clamped
/// evaluator for the deviated argument.
fn deviation_eval<'a>(
    problem: &'a ProblemSpec,
    u: &'a GridFunction,
) -> Result<Box<dyn Fn(f64) -> f64 + 'a>> {
    match &problem.d_op {
        DeviationOp::None => Ok(Box::new(|_s| 0.0)),
        DeviationOp::Identity => Ok(Box::new(|s| u.eval(s))),
        DeviationOp::Compose(eta) => {
            for i in 0..=2048 {
                let t = i as f64 / 2048.0;
                let value = eta.eval(&[t]);
                if !(-1e-12..=1.0 + 1e-12).contains(&value) {
                    return Err(Error::DomainViolation { t, value });
                }
            }
            Ok(Box::new(move |s| u.eval(eta.eval(&[s]).clamp(0.0, 1.0))))
        }
    }
}

/// One application of the operator: boundary term plus the kernel integral
/// of the nonlinearity composed with the interpolant of `u`.
pub fn apply_t(problem: &ProblemSpec, u: &GridFunction) -> Result<GridFunction> {
    let kernel = &problem.kernel;
    let window = kernel.window();
    let deviated = deviation_eval(problem, u)?;

    let mut boundary_maps = Vec::new();
    for (delta, phi) in &problem.b_op.terms {
        let value = apply_functional(phi, window, u);
        boundary_maps.push((delta.clone(), value));
    }

    let mut values = Vec::with_capacity(u.len());
    for &t in u.nodes() {
        let integrand = |s: f64| {
            kernel.k(t, s) * kernel.g(s) * problem.f_eval(s, u.eval(s), deviated(s))
        };
        let req = IntegrationRequest::new(&integrand, 0.0, 1.0)
            .with_breakpoints(kernel.s_breakpoints(t));
        let (integral, _) = integrate(&req)?;
        let boundary: f64 = boundary_maps
            .iter()
            .map(|(delta, value)| delta(t) * value)
            .sum();
        values.push(boundary + integral);
    }
    Ok(GridFunction::new(u.nodes().to_vec(), values))
}

/// Whether `u` sits in the cone up to tolerance: the window minimum
/// dominates c times the sup-norm and every declared functional of `u`
/// is nonnegative.
pub fn cone_membership(problem: &ProblemSpec, u: &GridFunction) -> bool {
    let kernel = &problem.kernel;
    let (a, b) = kernel.window();
    if u.min_on(a, b) < kernel.c() * u.sup_norm() - CONE_TOL {
        return false;
    }
    problem
        .lower
        .functionals()
        .iter()
        .chain(problem.upper.functionals().iter())
        .all(|phi| apply_functional(phi, (a, b), u) >= -CONE_TOL)
}

/// Anderson step: combines the damped-iteration history to extrapolate the
/// next iterate; falls back to the plain damped step when the least-squares
/// system degenerates.
fn anderson_step(gs: &[Vec<f64>], rs: &[Vec<f64>]) -> Option<Vec<f64>> {
    let m = gs.len() - 1;
    if m == 0 {
        return None;
    }
    let k = m;
    let n = gs[0].len();
    // Columns: residual differences over the history window.
    let dr: Vec<Vec<f64>> = (0..m)
        .map(|j| (0..n).map(|i| rs[j + 1][i] - rs[j][i]).collect())
        .collect();
    // Normal equations for min over gamma of |r_k - DR gamma|.
    let mut gram = vec![vec![0.0; m]; m];
    let mut rhs = vec![0.0; m];
    for p in 0..m {
        for q in 0..m {
            gram[p][q] = dr[p].iter().zip(&dr[q]).map(|(x, y)| x * y).sum();
        }
        rhs[p] = dr[p].iter().zip(&rs[k]).map(|(x, y)| x * y).sum();
        gram[p][p] += 1e-14;
    }
    let gamma = linalg::solve_dense(&gram, &rhs)?;
    if gamma.iter().any(|g| !g.is_finite() || g.abs() > 1e3) {
        return None;
    }
    // Extrapolated iterate: g_k minus the history combination of dg.
    let mut next = gs[k].clone();
    for j in 0..m {
        for i in 0..n {
            next[i] -= gamma[j] * (gs[j + 1][i] - gs[j][i]);
        }
    }
    Some(next)
}

/// Norm below which a computed fixed point counts as the trivial solution.
const TRIVIAL_NORM: f64 = 1e-6;

/// Damped fixed-point iteration with optional Anderson extrapolation.
/// Stops when the sup-norm update drops below the tolerance; the residual
/// of the returned report is measured against a fresh operator application.
///
/// Fixed points with a repelling direction are unreachable for any damped
/// iteration, so two escalations are built in: when the iteration collapses
/// onto the trivial solution from a nontrivial start, or fails outright, a
/// quasi-Newton pass (with the trivial solution deflated away in the first
/// case) retries from the same start.
pub fn picard_solve(problem: &ProblemSpec, u0: &GridFunction) -> Result<SolveReport> {
    match accelerated_iteration(problem, u0) {
        Ok(report) => {
            if report.solution.sup_norm() < TRIVIAL_NORM && u0.sup_norm() > 1e-3 {
                if let Ok(newton) = newton_solve(problem, u0, true) {
                    return Ok(newton);
                }
            }
            Ok(report)
        }
        Err(err) => match newton_solve(problem, u0, false) {
            Ok(report) => Ok(report),
            Err(_) => Err(err),
        },
    }
}

fn accelerated_iteration(problem: &ProblemSpec, u0: &GridFunction) -> Result<SolveReport> {
    let params = &problem.solver;
    let damping = params.damping;
    assert!(damping > 0.0 && damping <= 1.0);
    let depth = params.anderson_depth;

    let mut u = u0.clone();
    let mut gs: Vec<Vec<f64>> = Vec::new();
    let mut rs: Vec<Vec<f64>> = Vec::new();

    for iter in 1..=params.max_iter {
        let tu = apply_t(problem, &u)?;
        let g: Vec<f64> = u
            .values()
            .iter()
            .zip(tu.values())
            .map(|(ui, ti)| ui + damping * (ti - ui))
            .collect();
        let r: Vec<f64> = g
            .iter()
            .zip(u.values())
            .map(|(gi, ui)| gi - ui)
            .collect();

        gs.push(g.clone());
        rs.push(r);
        if gs.len() > depth + 1 {
            gs.remove(0);
            rs.remove(0);
        }

        let next_values = if depth > 0 {
            anderson_step(&gs, &rs).unwrap_or(g)
        } else {
            g
        };
        let next = GridFunction::new(u.nodes().to_vec(), next_values);

        let update = next.distance(&u);
        let norm = next.sup_norm();
        if !norm.is_finite() || norm > DIVERGENCE_NORM {
            return Err(Error::Diverged {
                norm,
                iterations: iter,
            });
        }
        u = next;

        if update < params.tol {
            let tu = apply_t(problem, &u)?;
            let residual = u.distance(&tu);
            if residual >= params.tol.max(1e-8) {
                // The update stalled without reaching a fixed point
                // (Anderson can contract steps prematurely); keep going
                // unless the budget is gone.
                if iter == params.max_iter {
                    return Err(Error::SolverStalled {
                        residual,
                        iterations: iter,
                    });
                }
                continue;
            }
            return Ok(SolveReport {
                solution: u.clone(),
                residual,
                iterations: iter,
                cone_ok: cone_membership(problem, &u),
                shell: None,
                converged: true,
            });
        }
    }
    let tu = apply_t(problem, &u)?;
    Err(Error::SolverStalled {
        residual: u.distance(&tu),
        iterations: params.max_iter,
    })
}

/// Product-integration matrix of the signed weighted kernel against the
/// piecewise-linear nodal basis: row i applied to nodal values approximates
/// the kernel integral at node i.
fn product_matrix(problem: &ProblemSpec, nodes: &[f64]) -> Result<Vec<Vec<f64>>> {
    let kernel = &problem.kernel;
    let n = nodes.len();
    let mut w = vec![vec![0.0; n]; n];
    for (i, &t) in nodes.iter().enumerate() {
        for j in 0..n {
            let s_left = if j == 0 { nodes[0] } else { nodes[j - 1] };
            let s_right = if j + 1 == n { nodes[n - 1] } else { nodes[j + 1] };
            let center = nodes[j];
            let hat = move |s: f64| {
                if s <= center {
                    if j == 0 {
                        1.0
                    } else {
                        (s - s_left) / (center - s_left)
                    }
                } else if j + 1 == n {
                    1.0
                } else {
                    (s_right - s) / (s_right - center)
                }
            };
            let integrand = |s: f64| kernel.k(t, s) * kernel.g(s) * hat(s);
            let mut breaks = kernel.s_breakpoints(t);
            breaks.push(center);
            let req = IntegrationRequest::new(&integrand, s_left, s_right)
                .with_breakpoints(breaks);
            w[i][j] = integrate(&req)?.0;
        }
    }
    Ok(w)
}

/// Index and fractional position of `x` between two consecutive nodes.
fn linear_weights(nodes: &[f64], x: f64) -> (usize, f64) {
    let n = nodes.len();
    let x = x.clamp(nodes[0], nodes[n - 1]);
    let mut i = match nodes.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
        Ok(i) => i,
        Err(i) => i.saturating_sub(1),
    };
    i = i.min(n - 2);
    let lam = (x - nodes[i]) / (nodes[i + 1] - nodes[i]);
    (i, lam.clamp(0.0, 1.0))
}

/// Nodal gradient of a functional at `u` (a subgradient for the window
/// extrema).
fn functional_gradient(phi: &FunctionalSpec, window: (f64, f64), u: &GridFunction) -> Vec<f64> {
    let n = u.len();
    let mut grad = vec![0.0; n];
    let (a, b) = window;
    match &phi.kind {
        FunctionalKind::MinWindow | FunctionalKind::MaxWindow => {
            let minimizing = matches!(phi.kind, FunctionalKind::MinWindow);
            let mut best: Option<(usize, f64)> = None;
            for (j, (&t, &v)) in u.nodes().iter().zip(u.values()).enumerate() {
                if t < a - 1e-12 || t > b + 1e-12 {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((_, bv)) => {
                        if minimizing {
                            v < bv
                        } else {
                            v > bv
                        }
                    }
                };
                if better {
                    best = Some((j, v));
                }
            }
            if let Some((j, _)) = best {
                grad[j] = 1.0;
            }
        }
        FunctionalKind::PointEval(tau) => {
            let (i, lam) = linear_weights(u.nodes(), *tau);
            grad[i] = 1.0 - lam;
            grad[i + 1] = lam;
        }
        FunctionalKind::Stieltjes { density, atoms } => {
            if let Some(w) = density {
                // Lumped nodal quadrature of the density against the hats.
                let nodes = u.nodes();
                for j in 0..n {
                    let left = if j == 0 { nodes[0] } else { nodes[j - 1] };
                    let right = if j + 1 == n { nodes[n - 1] } else { nodes[j + 1] };
                    grad[j] = w(nodes[j]) * (right - left) / 2.0;
                }
            }
            for (tau, mass) in atoms {
                let (i, lam) = linear_weights(u.nodes(), *tau);
                grad[i] += mass * (1.0 - lam);
                grad[i + 1] += mass * lam;
            }
        }
    }
    grad
}

/// Central-difference partial derivatives of the nonlinearity.
fn nonlinearity_partials(problem: &ProblemSpec, s: f64, u: f64, v: f64) -> (f64, f64) {
    let hu = 1e-6 * (1.0 + u.abs());
    let fu = (problem.f_eval(s, u + hu, v) - problem.f_eval(s, u - hu, v)) / (2.0 * hu);
    let hv = 1e-6 * (1.0 + v.abs());
    let fv = (problem.f_eval(s, u, v + hv) - problem.f_eval(s, u, v - hv)) / (2.0 * hv);
    (fu, fv)
}

/// Approximate Fréchet derivative of the operator at `u`, discretized via
/// the product-integration matrix.
fn operator_jacobian(
    problem: &ProblemSpec,
    u: &GridFunction,
    w: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>> {
    let nodes = u.nodes();
    let n = nodes.len();
    let deviated = deviation_eval(problem, u)?;
    let mut jt = vec![vec![0.0; n]; n];
    for q in 0..n {
        let s = nodes[q];
        let (fu, fv) = nonlinearity_partials(problem, s, u.values()[q], deviated(s));
        for i in 0..n {
            jt[i][q] += w[i][q] * fu;
        }
        match &problem.d_op {
            DeviationOp::None => {}
            DeviationOp::Identity => {
                for i in 0..n {
                    jt[i][q] += w[i][q] * fv;
                }
            }
            DeviationOp::Compose(eta) => {
                let x = eta.eval(&[s]).clamp(0.0, 1.0);
                let (idx, lam) = linear_weights(nodes, x);
                for i in 0..n {
                    jt[i][idx] += w[i][q] * fv * (1.0 - lam);
                    jt[i][idx + 1] += w[i][q] * fv * lam;
                }
            }
        }
    }
    drop(deviated);
    let window = problem.kernel.window();
    for (delta, phi) in &problem.b_op.terms {
        let grad = functional_gradient(phi, window, u);
        for i in 0..n {
            let d = delta(nodes[i]);
            if d == 0.0 {
                continue;
            }
            for j in 0..n {
                jt[i][j] += d * grad[j];
            }
        }
    }
    Ok(jt)
}

/// Quasi-Newton iteration on the fixed-point residual, with an optional
/// deflation factor that makes the trivial solution unreachable. The
/// residual uses the exact quadrature operator; the Jacobian uses the
/// product-integration surrogate, which costs accuracy nothing at the
/// solution and only bends the Newton path.
fn newton_solve(problem: &ProblemSpec, u0: &GridFunction, deflate: bool) -> Result<SolveReport> {
    let params = &problem.solver;
    // The residual of the exact-quadrature operator bottoms out near the
    // integration tolerance; demanding more than that loops forever.
    let tol = params.tol.max(1e-9);
    let w = product_matrix(problem, u0.nodes())?;
    let n = u0.len();
    let mut u = u0.clone();
    let max_newton = 40;

    let mut residual = f64::INFINITY;
    let mut stagnant = 0usize;
    for iter in 1..=max_newton {
        let tu = apply_t(problem, &u)?;
        let f: Vec<f64> = u
            .values()
            .iter()
            .zip(tu.values())
            .map(|(ui, ti)| ui - ti)
            .collect();
        let prev_residual = residual;
        residual = f.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
        if residual > 0.5 * prev_residual {
            stagnant += 1;
        } else {
            stagnant = 0;
        }
        let norm2: f64 = u.values().iter().map(|x| x * x).sum();
        let at_floor = stagnant >= 3 && residual < 1e-8;
        if (residual < tol || at_floor) && (!deflate || norm2.sqrt() > TRIVIAL_NORM) {
            return Ok(SolveReport {
                solution: u.clone(),
                residual,
                iterations: iter,
                cone_ok: cone_membership(problem, &u),
                shell: None,
                converged: true,
            });
        }

        let jt = operator_jacobian(problem, &u, &w)?;
        let sigma = if deflate {
            1.0 + 1.0 / norm2.max(1e-30)
        } else {
            1.0
        };
        let mut jg = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                let jf = if i == j { 1.0 - jt[i][j] } else { -jt[i][j] };
                let dsigma_j = if deflate {
                    -2.0 * u.values()[j] / (norm2.max(1e-30) * norm2.max(1e-30))
                } else {
                    0.0
                };
                jg[i][j] = sigma * jf + f[i] * dsigma_j;
            }
        }
        let g: Vec<f64> = f.iter().map(|x| sigma * x).collect();
        let Some(step) = linalg::solve_dense(&jg, &g) else {
            return Err(Error::SolverStalled {
                residual,
                iterations: iter,
            });
        };

        // Backtracking on the (deflated) residual.
        let merit_now = sigma * residual;
        let mut lambda = 1.0;
        loop {
            let trial_values: Vec<f64> = u
                .values()
                .iter()
                .zip(&step)
                .map(|(ui, si)| ui - lambda * si)
                .collect();
            let trial = GridFunction::new(u.nodes().to_vec(), trial_values);
            let trial_tu = apply_t(problem, &trial)?;
            let trial_res = trial.distance(&trial_tu);
            let trial_norm2: f64 = trial.values().iter().map(|x| x * x).sum();
            let trial_sigma = if deflate {
                1.0 + 1.0 / trial_norm2.max(1e-30)
            } else {
                1.0
            };
            if trial_sigma * trial_res < merit_now || lambda < 0.2 {
                u = trial;
                break;
            }
            lambda *= 0.5;
        }

        let norm = u.sup_norm();
        if !norm.is_finite() || norm > DIVERGENCE_NORM {
            return Err(Error::Diverged {
                norm,
                iterations: iter,
            });
        }
    }
    Err(Error::SolverStalled {
        residual,
        iterations: max_newton,
    })
}

/// Annotates the report with the certified shell containing the solution,
/// if any: index-one boundaries cut by the sup-norm, index-zero boundaries
/// by the window minimum.
pub fn shell_check(
    problem: &ProblemSpec,
    mut report: SolveReport,
    ledger: &ConditionLedger,
) -> SolveReport {
    let certificate = match_patterns(ledger);
    report.shell = None;
    let u = &report.solution;
    let (a, b) = problem.kernel.window();
    for shell in &certificate.shells {
        let above_inner = match shell.inner_kind {
            ConditionKind::I0 => u.min_on(a, b) > shell.inner_rho,
            _ => u.sup_norm() > shell.inner_rho,
        };
        let below_outer = match shell.outer_kind {
            ConditionKind::I0 => u.min_on(a, b) < shell.outer_rho,
            _ => u.sup_norm() < shell.outer_rho,
        };
        if above_inner && below_outer {
            report.shell = Some((shell.sup_lower, shell.sup_upper));
            break;
        }
    }
    report
}

/// Default starting iterate: the constant at the geometric mean of the
/// certified shell bounds, or the configured constant when declared.
pub fn default_start(problem: &ProblemSpec, ledger: Option<&ConditionLedger>) -> GridFunction {
    let n = problem.solver.nodes;
    if let Some(u0) = problem.solver.u0 {
        return GridFunction::constant(n, u0);
    }
    if let Some(ledger) = ledger {
        let certificate = match_patterns(ledger);
        if let Some(shell) = certificate.shells.first() {
            let upper = if shell.sup_upper.is_finite() {
                shell.sup_upper
            } else {
                shell.sup_lower.max(1.0) * 100.0
            };
            return GridFunction::constant(n, (shell.sup_lower * upper).sqrt());
        }
    }
    GridFunction::constant(n, 1.0)
}
