//! Problem definition files: a TOML surface that parses into a full
//! `ProblemSpec` and serializes back without loss.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::functional::{Family, FamilySpec, FunctionalKind, FunctionalSpec};
use crate::kernel::{presets, Map1};
use crate::problem::{
    BoundaryOp, DeclaredBounds, DeclaredLimits, DeviationOp, ProblemSpec, SolverParams,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FunctionalConfig {
    MinWindow,
    MaxWindow,
    PointEval {
        tau: f64,
    },
    Stieltjes {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        density: Option<String>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        atoms: Vec<(f64, f64)>,
        norm_bound: f64,
    },
}

/// One functional together with the coefficient curve it pairs with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedFunctionalConfig {
    #[serde(flatten)]
    pub functional: FunctionalConfig,
    /// Expression in t.
    pub coefficient: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FamilyConfig {
    /// Functionals paired with kernel-smoothed coefficient curves.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alphas: Vec<PairedFunctionalConfig>,
    /// Functionals paired with boundary coefficient curves taken as-is.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub betas: Vec<PairedFunctionalConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub preset: String,
    pub window: (f64, f64),
    /// Cone constant; defaults to the computed envelope constant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    /// Weight expression in s; defaults to 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<String>,
    /// Interior kink locations of the weight.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub weight_kinks: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BoundsConfig {
    /// Expression in (rho, c) dominating sup f2 / rho on [-rho, rho].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f2_upper: Option<String>,
    /// Expression in (rho, c) minorizing inf f1 / rho on [rho, rho/c].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f1_lower: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LimitsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f2_at_0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f1_at_0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f2_at_inf: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f1_at_inf: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonlinearityConfig {
    /// Expression in (t, u, v); v receives the deviated argument.
    pub f: String,
    /// Lower comparison part, expression in (t, u).
    pub f1: String,
    /// Upper comparison part, expression in (t, u).
    pub f2: String,
    #[serde(default, skip_serializing_if = "is_default_bounds")]
    pub bounds: BoundsConfig,
    #[serde(default, skip_serializing_if = "is_default_limits")]
    pub limits: LimitsConfig,
}

fn is_default_bounds(b: &BoundsConfig) -> bool {
    *b == BoundsConfig::default()
}

fn is_default_limits(l: &LimitsConfig) -> bool {
    *l == LimitsConfig::default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryTermConfig {
    /// Coefficient expression in t.
    pub coefficient: String,
    #[serde(flatten)]
    pub functional: FunctionalConfig,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OperatorsConfig {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub boundary: Vec<BoundaryTermConfig>,
    /// "none", "identity", or an expression in t composing the argument.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deviation: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub anderson_depth: usize,
    pub nodes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u0: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> SolverConfig {
        let p = SolverParams::default();
        SolverConfig {
            damping: p.damping,
            tol: p.tol,
            max_iter: p.max_iter,
            anderson_depth: p.anderson_depth,
            nodes: p.nodes,
            u0: p.u0,
        }
    }
}

fn default_solver() -> SolverConfig {
    SolverConfig::default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemConfig {
    pub kernel: KernelConfig,
    #[serde(default)]
    pub lower: FamilyConfig,
    #[serde(default)]
    pub upper: FamilyConfig,
    pub nonlinearity: NonlinearityConfig,
    #[serde(default)]
    pub operators: OperatorsConfig,
    #[serde(default)]
    pub rho: Vec<f64>,
    #[serde(default)]
    pub nonexist_attested: bool,
    #[serde(default = "default_solver")]
    pub solver: SolverConfig,
}

fn parse_map1(source: &str, var: &'static str) -> Result<Map1> {
    let expr = Expr::parse(source, &[var])?;
    Ok(Arc::new(move |t: f64| expr.eval(&[t])))
}

impl FunctionalConfig {
    fn build(&self, family: Family) -> Result<FunctionalSpec> {
        Ok(match self {
            FunctionalConfig::MinWindow => {
                FunctionalSpec::new(FunctionalKind::MinWindow, family)
            }
            FunctionalConfig::MaxWindow => {
                FunctionalSpec::new(FunctionalKind::MaxWindow, family)
            }
            FunctionalConfig::PointEval { tau } => {
                FunctionalSpec::new(FunctionalKind::PointEval(*tau), family)
            }
            FunctionalConfig::Stieltjes {
                density,
                atoms,
                norm_bound,
            } => {
                let density = match density {
                    Some(src) => Some(parse_map1(src, "t")?),
                    None => None,
                };
                FunctionalSpec::new(
                    FunctionalKind::Stieltjes {
                        density,
                        atoms: atoms.clone(),
                    },
                    family,
                )
                .with_norm_bound(*norm_bound)
            }
        })
    }
}

impl FamilyConfig {
    fn build(&self, family: Family) -> Result<FamilySpec> {
        let mut spec = FamilySpec::empty(family);
        for paired in &self.alphas {
            spec.alphas.push(paired.functional.build(family)?);
            spec.gammas.push(parse_map1(&paired.coefficient, "t")?);
        }
        for paired in &self.betas {
            spec.betas.push(paired.functional.build(family)?);
            spec.deltas.push(parse_map1(&paired.coefficient, "t")?);
        }
        Ok(spec)
    }
}

impl ProblemConfig {
    pub fn from_toml(text: &str) -> Result<ProblemConfig> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<ProblemConfig> {
        let text = std::fs::read_to_string(path)?;
        ProblemConfig::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn build(&self) -> Result<ProblemSpec> {
        let mut kernel = presets::by_id(&self.kernel.preset, self.kernel.window)?;
        if let Some(weight) = &self.kernel.weight {
            kernel = kernel.with_weight(
                parse_map1(weight, "s")?,
                self.kernel.weight_kinks.clone(),
            );
        }
        if let Some(c) = self.kernel.c {
            kernel = kernel.with_c(c);
        }

        let lower = self.lower.build(Family::Lower)?;
        let upper = self.upper.build(Family::Upper)?;

        let f = Expr::parse(&self.nonlinearity.f, &["t", "u", "v"])?;
        let f1 = Expr::parse(&self.nonlinearity.f1, &["t", "u"])?;
        let f2 = Expr::parse(&self.nonlinearity.f2, &["t", "u"])?;

        let bounds = DeclaredBounds {
            f2_upper: match &self.nonlinearity.bounds.f2_upper {
                Some(src) => Some(Expr::parse(src, &["rho", "c"])?),
                None => None,
            },
            f1_lower: match &self.nonlinearity.bounds.f1_lower {
                Some(src) => Some(Expr::parse(src, &["rho", "c"])?),
                None => None,
            },
        };
        let limits = DeclaredLimits {
            f2_at_0: self.nonlinearity.limits.f2_at_0,
            f1_at_0: self.nonlinearity.limits.f1_at_0,
            f2_at_inf: self.nonlinearity.limits.f2_at_inf,
            f1_at_inf: self.nonlinearity.limits.f1_at_inf,
        };

        let mut b_op = BoundaryOp::none();
        for term in &self.operators.boundary {
            b_op.terms.push((
                parse_map1(&term.coefficient, "t")?,
                term.functional.build(Family::Upper)?,
            ));
        }
        let d_op = match self.operators.deviation.as_deref() {
            None | Some("none") => DeviationOp::None,
            Some("identity") => DeviationOp::Identity,
            Some(src) => DeviationOp::Compose(Expr::parse(src, &["t"])?),
        };

        Ok(ProblemSpec {
            kernel,
            lower,
            upper,
            f,
            f1,
            f2,
            bounds,
            limits,
            b_op,
            d_op,
            rho_list: self.rho.clone(),
            solver: SolverParams {
                damping: self.solver.damping,
                tol: self.solver.tol,
                max_iter: self.solver.max_iter,
                anderson_depth: self.solver.anderson_depth,
                nodes: self.solver.nodes,
                u0: self.solver.u0,
            },
            nonexist_attested: self.nonexist_attested,
        })
    }

    /// Content digest of the canonical serialized form.
    pub fn digest(&self) -> Result<String> {
        use sha2::{Digest, Sha256};
        let canonical = self.to_toml()?;
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        Ok(format!("{:x}", hasher.finalize()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
rho = [1.0, 28.0]

[kernel]
preset = "dirichlet_max"
window = [0.25, 0.75]
c = 0.25

[[lower.alphas]]
kind = "min_window"
coefficient = "t*(1-t) + 1/4"

[[lower.betas]]
kind = "min_window"
coefficient = "1/2"

[[upper.alphas]]
kind = "max_window"
coefficient = "t*(1-t) + 1/4"

[[upper.betas]]
kind = "max_window"
coefficient = "1/2"

[nonlinearity]
f = "t*u^2 + (t*(1-t) + 1/4)*v"
f1 = "t*u^2 + (t*(1-t) + 1/4)*u"
f2 = "t*u^2 + (t*(1-t) + 1/4)*u"

[nonlinearity.bounds]
f2_upper = "rho"
f1_lower = "rho*c"

[operators]
deviation = "(1 + 2*t)/4"

[[operators.boundary]]
coefficient = "1/2"
kind = "max_window"

[solver]
u0 = 5.0
"#;

    fn sample_text() -> String {
        SAMPLE.to_string()
    }

    #[test]
    fn parses_and_builds() {
        let config = ProblemConfig::from_toml(&sample_text()).unwrap();
        let problem = config.build().unwrap();
        assert_eq!(problem.rho_list, vec![1.0, 28.0]);
        assert_eq!(problem.solver.u0, Some(5.0));
        assert!((problem.kernel.c() - 0.25).abs() < 1e-15);
        assert_eq!(problem.lower.len(), 2);
        assert_eq!(problem.b_op.terms.len(), 1);
        assert!(matches!(problem.d_op, DeviationOp::Compose(_)));
        assert!((problem.f_eval(0.5, 2.0, 1.0) - 2.5) < 1e-12);
    }

    #[test]
    fn round_trips_through_toml() {
        let config = ProblemConfig::from_toml(&sample_text()).unwrap();
        let text = config.to_toml().unwrap();
        let reparsed = ProblemConfig::from_toml(&text).unwrap();
        assert_eq!(config, reparsed);
        assert_eq!(config.digest().unwrap(), reparsed.digest().unwrap());
    }

    #[test]
    fn infinite_limits_survive_the_round_trip() {
        let mut config = ProblemConfig::from_toml(&sample_text()).unwrap();
        config.nonlinearity.limits.f2_at_inf = Some(f64::INFINITY);
        config.nonlinearity.limits.f2_at_0 = Some(0.0);
        let text = config.to_toml().unwrap();
        let reparsed = ProblemConfig::from_toml(&text).unwrap();
        assert_eq!(reparsed.nonlinearity.limits.f2_at_inf, Some(f64::INFINITY));
    }

    #[test]
    fn unknown_preset_is_a_config_error() {
        let text = sample_text().replace("dirichlet_max", "mystery_kernel");
        let config = ProblemConfig::from_toml(&text).unwrap();
        assert!(matches!(config.build(), Err(Error::Config(_))));
    }
}
