use serde::{Deserialize, Serialize};
use sl_iosp::forward::{eigenvalue, SampledPotential};
use sl_iosp::reconstruct::{lp_norm_direct, reconstruct_closed_form, solve_u_ode, PotentialProfile};
use sl_iosp::spectral_error::{error_value, unrooted_prior_constant, ErrorOptions};
use sl_iosp::{IospError, ProblemSpec, Regime};

use crate::args::Method;
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_EIG_TOL: f64 = 1e-4;
pub const DEFAULT_NORM_TOL: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub schema: u32,
    pub regime: String,
    pub epsilon: i8,
    pub gap: f64,
    pub m: u32,
    pub p: f64,
    pub method: String,
    pub a_m: f64,
    pub k: f64,
    pub error_formula: f64,
    pub error_direct: f64,
    pub lambda_recovered: f64,
    pub eig_residual: f64,
    pub conservation_residual: f64,
    /// alternative gap = 0 constant, for comparison; AtPrior only
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unrooted_prior_constant: Option<f64>,
}

impl ErrorReport {
    pub fn eig_ok(&self, lambda_star: f64, eig_tol: f64) -> bool {
        self.eig_residual <= eig_tol * lambda_star.abs().max(1.0)
    }

    pub fn norm_mismatch(&self) -> f64 {
        (self.error_formula - self.error_direct).abs()
    }

    pub fn norm_ok(&self, norm_tol: f64) -> bool {
        self.norm_mismatch() <= norm_tol * self.error_formula.max(1.0)
    }
}

pub fn choose_method(spec: &ProblemSpec, method: Method) -> CliResult<Method> {
    let closed_ok = spec.p == 2.0 && spec.m == 1;
    match method {
        Method::Auto if closed_ok => Ok(Method::ClosedForm),
        Method::Auto => Ok(Method::Ode),
        Method::ClosedForm if !closed_ok => Err(CliError::Solver(IospError::UnsupportedExponent {
            p: spec.p,
            m: spec.m,
        })),
        m => Ok(m),
    }
}

pub fn method_name(method: Method) -> &'static str {
    match method {
        Method::Auto => "auto",
        Method::Ode => "ode",
        Method::ClosedForm => "closed-form",
    }
}

pub fn reconstruct(cfg: &RunConfig, method: Method) -> CliResult<(Method, PotentialProfile)> {
    let method = choose_method(&cfg.spec, method)?;
    let profile = match method {
        Method::ClosedForm => reconstruct_closed_form(&cfg.spec, cfg.grid_n)?,
        _ => solve_u_ode(&cfg.spec, cfg.grid_n)?,
    };
    Ok((method, profile))
}

/// Bisection width for the recovered eigenvalue.
fn eigen_width(lambda_star: f64) -> f64 {
    1e-10 * lambda_star.abs().max(1.0)
}

pub fn build_report(cfg: &RunConfig, method: Method) -> CliResult<ErrorReport> {
    let spec = &cfg.spec;
    let (method, profile) = reconstruct(cfg, method)?;
    let opts = ErrorOptions {
        tol: cfg.tol,
        boundary_tol: 0.0,
    };
    let formula = error_value(spec.gap(), spec.m, spec.p, &opts)?;
    let direct = lp_norm_direct(&profile);
    let potential = SampledPotential::new(profile.q_hat.clone())?;
    let lambda_recovered = eigenvalue(&potential, spec.m, eigen_width(spec.lambda_star))?;
    let (a_m, k) = profile.amplitude.map_or((0.0, 0.0), |a| (a.a_m, a.k));
    let unrooted = match profile.branch.regime {
        Regime::AtPrior => Some(unrooted_prior_constant(spec.m, spec.p, cfg.tol)?),
        _ => None,
    };
    Ok(ErrorReport {
        schema: SCHEMA_VERSION,
        regime: profile.branch.regime.name().to_string(),
        epsilon: profile.branch.epsilon,
        gap: spec.gap(),
        m: spec.m,
        p: spec.p,
        method: method_name(method).to_string(),
        a_m,
        k,
        error_formula: formula.value,
        error_direct: direct,
        lambda_recovered,
        eig_residual: (lambda_recovered - spec.lambda_star).abs(),
        conservation_residual: profile.conservation_residual,
        unrooted_prior_constant: unrooted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(q0: f64, ls: f64, m: i64, p: f64) -> RunConfig {
        RunConfig {
            spec: ProblemSpec::new(q0, ls, m, p).unwrap(),
            grid_n: 2048,
            tol: 1e-10,
            output_path: None,
            format: None,
        }
    }

    #[test]
    fn auto_method_selection() {
        assert_eq!(choose_method(&cfg(0.0, 20.0, 1, 2.0).spec, Method::Auto).unwrap(), Method::ClosedForm);
        assert_eq!(choose_method(&cfg(0.0, 20.0, 2, 2.0).spec, Method::Auto).unwrap(), Method::Ode);
        let e = choose_method(&cfg(0.0, 20.0, 1, 3.0).spec, Method::ClosedForm).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn above_round_trip() {
        let c = cfg(0.0, 20.0, 1, 2.0);
        let r = build_report(&c, Method::Auto).unwrap();
        assert_eq!(r.regime, "Above");
        assert!(r.eig_ok(20.0, DEFAULT_EIG_TOL), "{r:?}");
        assert!(r.norm_ok(DEFAULT_NORM_TOL), "{r:?}");
        assert!(r.unrooted_prior_constant.is_none());
    }

    #[test]
    fn resonant_report_is_trivial() {
        let c = cfg(1.0, 1.0 + std::f64::consts::PI.powi(2), 1, 2.0);
        let r = build_report(&c, Method::Auto).unwrap();
        assert_eq!((r.error_formula, r.error_direct, r.a_m, r.k), (0.0, 0.0, 0.0, 0.0));
        assert!(r.eig_ok(c.spec.lambda_star, DEFAULT_EIG_TOL));
    }

    #[test]
    fn json_keys() {
        let r = build_report(&cfg(0.0, 0.0, 1, 2.0), Method::Ode).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        for key in [
            "schema",
            "regime",
            "epsilon",
            "a_m",
            "k",
            "error_formula",
            "error_direct",
            "lambda_recovered",
            "eig_residual",
            "conservation_residual",
            "unrooted_prior_constant",
        ] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["schema"], 1);
    }
}
