//! The optimal potential `q̂ = q0 + ε|u|^{2p*-2}` and the critical-equation
//! solution `u` on a uniform grid.
//!
//! Two paths: RK4 integration of `u'' = -gap·u + ε|u|^{2p*-2}u` from
//! `u(0) = 0, u'(0) = √k` for any `(m, p)`, and Jacobi-elliptic closed forms
//! for `p = 2, m = 1`.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use crate::critical::{amplitude_for, FirstIntegral};
use crate::elliptic::{jacobi, quarter_period};
use crate::error::{IospError, Result};
use crate::problem::{classify, AmplitudeSolution, ProblemSpec, Regime, RegimeClass};
use crate::quadrature::DEFAULT_TOL;

pub const MIN_GRID: usize = 256;
pub const DEFAULT_GRID: usize = 8192;
/// Conservation failure threshold, relative to `max(1, k)`.
pub const CONSERVATION_LIMIT: f64 = 1e-6;
/// Boundary failure threshold for `|u(1)|`, relative to `max|u|`.
pub const BOUNDARY_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialProfile {
    /// grid intervals
    pub n: usize,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    /// `u'` samples
    pub du: Vec<f64>,
    pub q_hat: Vec<f64>,
    pub spec: ProblemSpec,
    pub branch: RegimeClass,
    /// `None` for the resonant profile, which has no amplitude.
    pub amplitude: Option<AmplitudeSolution>,
    /// max over the grid of the first-integral residual
    pub conservation_residual: f64,
}

impl PotentialProfile {
    fn resonant(spec: ProblemSpec, branch: RegimeClass, n: usize) -> Self {
        PotentialProfile {
            n,
            x: grid(n),
            u: vec![0.0; n + 1],
            du: vec![0.0; n + 1],
            q_hat: vec![spec.q0; n + 1],
            spec,
            branch,
            amplitude: None,
            conservation_residual: 0.0,
        }
    }

    fn from_samples(
        spec: ProblemSpec,
        branch: RegimeClass,
        amplitude: AmplitudeSolution,
        u: Vec<f64>,
        du: Vec<f64>,
    ) -> Self {
        let n = u.len() - 1;
        let first = FirstIntegral {
            epsilon: branch.epsilon,
            p_star: spec.p_star(),
            gap: branch.gap,
            k: amplitude.k,
        };
        let conservation_residual = u
            .iter()
            .zip(&du)
            .map(|(&u, &d)| first.residual(u, d).abs())
            .fold(0.0, f64::max);
        let q_hat = u.iter().map(|&v| potential_at(&spec, branch.epsilon, v)).collect();
        PotentialProfile {
            n,
            x: grid(n),
            u,
            du,
            q_hat,
            spec,
            branch,
            amplitude: Some(amplitude),
            conservation_residual,
        }
    }

    pub fn max_abs_u(&self) -> f64 {
        self.u.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Interior sign changes of `u`, located by linear interpolation between
    /// the bracketing samples. Samples below `1e-9·max|u|` count as zero.
    pub fn zero_crossings(&self) -> Vec<f64> {
        let floor = 1e-9 * self.max_abs_u();
        let mut out = Vec::new();
        let mut last: Option<usize> = None;
        for (i, &v) in self.u.iter().enumerate() {
            if v.abs() <= floor {
                continue;
            }
            if let Some(j) = last {
                let w = self.u[j];
                if (w > 0.0) != (v > 0.0) {
                    out.push(self.x[j] + (self.x[i] - self.x[j]) * w / (w - v));
                }
            }
            last = Some(i);
        }
        out
    }
}

fn grid(n: usize) -> Vec<f64> {
    (0..=n).map(|i| i as f64 / n as f64).collect()
}

/// `q0 + ε|u|^{2p*-2}`.
pub fn potential_at(spec: &ProblemSpec, epsilon: i8, u: f64) -> f64 {
    spec.q0 + epsilon as f64 * u.abs().powf(2.0 * spec.p_star() - 2.0)
}

fn check_grid(n: usize) -> Result<()> {
    if n < MIN_GRID {
        return Err(IospError::InvalidGrid { got: n, min: MIN_GRID });
    }
    Ok(())
}

/// Integrates the critical equation with classical RK4 on `n` uniform steps.
pub fn solve_u_ode(spec: &ProblemSpec, n: usize) -> Result<PotentialProfile> {
    let spec = spec.validate()?;
    check_grid(n)?;
    let branch = classify(&spec);
    if branch.regime == Regime::Resonant {
        return Ok(PotentialProfile::resonant(spec, branch, n));
    }
    let amplitude = amplitude_for(&branch, spec.m, spec.p, DEFAULT_TOL)?;
    let gap = branch.gap;
    let eps = branch.epsilon as f64;
    let power = 2.0 * spec.p_star() - 1.0;
    let accel = |u: f64| -gap * u + eps * u.signum() * u.abs().powf(power);

    let h = 1.0 / n as f64;
    let mut u = Vec::with_capacity(n + 1);
    let mut du = Vec::with_capacity(n + 1);
    let (mut y, mut v) = (0.0_f64, amplitude.k.sqrt());
    u.push(y);
    du.push(v);
    for _ in 0..n {
        let (k1y, k1v) = (v, accel(y));
        let (k2y, k2v) = (v + 0.5 * h * k1v, accel(y + 0.5 * h * k1y));
        let (k3y, k3v) = (v + 0.5 * h * k2v, accel(y + 0.5 * h * k2y));
        let (k4y, k4v) = (v + h * k3v, accel(y + h * k3y));
        y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        u.push(y);
        du.push(v);
    }

    let profile = PotentialProfile::from_samples(spec, branch, amplitude, u, du);
    let limit = CONSERVATION_LIMIT * amplitude.k.max(1.0);
    if !(profile.conservation_residual <= limit) {
        return Err(IospError::ConservationViolated {
            residual: profile.conservation_residual,
            limit,
        });
    }
    let end = profile.u[n].abs();
    let limit = BOUNDARY_LIMIT * profile.max_abs_u();
    if !(end <= limit) {
        return Err(IospError::BoundaryMiss { value: end, limit });
    }
    Ok(profile)
}

/// Which elliptic function carries the `p = 2, m = 1` solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EllipticForm {
    /// `a·sn(ω x; k)`
    Sn,
    /// `a·cn(ω x - K(k); k)` with `ω = 2K(k)`
    Cn,
    /// `(a/√2)·sn(ω x; 1/√2) / dn(ω x; 1/√2)` with `ω = a`
    SnOverDn,
}

/// Constants of the closed-form `p = 2, m = 1` solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipticReconstruction {
    pub a1: f64,
    /// elliptic modulus
    pub modulus: f64,
    /// angular frequency of the argument
    pub omega1: f64,
    pub form: EllipticForm,
    pub amplitude: AmplitudeSolution,
    pub branch: RegimeClass,
}

impl EllipticReconstruction {
    /// Returns `None` for the resonant spec.
    pub fn new(spec: &ProblemSpec) -> Result<Option<Self>> {
        let spec = spec.validate()?;
        if spec.p != 2.0 || spec.m != 1 {
            return Err(IospError::UnsupportedExponent { p: spec.p, m: spec.m });
        }
        let branch = classify(&spec);
        if branch.regime == Regime::Resonant {
            return Ok(None);
        }
        let amplitude = amplitude_for(&branch, 1, 2.0, DEFAULT_TOL)?;
        let a = amplitude.a_m;
        let g = branch.gap;
        let a2 = a * a;
        let (modulus, omega1, form) = match branch.regime {
            Regime::Above => {
                let k2 = a2 / (2.0 * g - a2);
                (k2.sqrt(), (g - 0.5 * a2).sqrt(), EllipticForm::Sn)
            }
            Regime::Interior | Regime::Below => {
                let k = (a2 / (2.0 * (g + a2))).sqrt();
                (k, 2.0 * quarter_period(k)?, EllipticForm::Cn)
            }
            Regime::AtPrior => (FRAC_1_SQRT_2, a, EllipticForm::SnOverDn),
            Regime::Resonant => unreachable!(),
        };
        if !(modulus > 0.0 && modulus < 1.0 && omega1 > 0.0) {
            return Err(IospError::DomainError(format!(
                "closed form constants out of range: modulus {modulus}, frequency {omega1}"
            )));
        }
        Ok(Some(EllipticReconstruction {
            a1: a,
            modulus,
            omega1,
            form,
            amplitude,
            branch,
        }))
    }

    /// `(u(x), u'(x))`.
    pub fn eval(&self, x: f64) -> Result<(f64, f64)> {
        let (a, k, w) = (self.a1, self.modulus, self.omega1);
        Ok(match self.form {
            EllipticForm::Sn => {
                let (sn, cn, dn) = jacobi(w * x, k)?;
                (a * sn, a * w * cn * dn)
            }
            EllipticForm::Cn => {
                let (sn, cn, dn) = jacobi(w * x - 0.5 * w, k)?;
                (a * cn, -a * w * sn * dn)
            }
            EllipticForm::SnOverDn => {
                let (sn, cn, dn) = jacobi(w * x, k)?;
                let s = a * FRAC_1_SQRT_2;
                (s * sn / dn, s * w * cn / (dn * dn))
            }
        })
    }
}

/// Samples the elliptic closed form (`p = 2, m = 1` only).
pub fn reconstruct_closed_form(spec: &ProblemSpec, n: usize) -> Result<PotentialProfile> {
    let spec = spec.validate()?;
    check_grid(n)?;
    let Some(form) = EllipticReconstruction::new(&spec)? else {
        return Ok(PotentialProfile::resonant(spec, classify(&spec), n));
    };
    let mut u = Vec::with_capacity(n + 1);
    let mut du = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let (v, d) = form.eval(i as f64 / n as f64)?;
        u.push(v);
        du.push(d);
    }
    Ok(PotentialProfile::from_samples(spec, form.branch, form.amplitude, u, du))
}

/// `(∫₀¹ |q̂ - q0|^p dx)^{1/p}` by the trapezoid rule on the profile grid.
pub fn lp_norm_direct(profile: &PotentialProfile) -> f64 {
    let p = profile.spec.p;
    let q0 = profile.spec.q0;
    let f: Vec<f64> = profile.q_hat.iter().map(|&q| (q - q0).abs().powf(p)).collect();
    let n = profile.n;
    let inner: f64 = f[1..n].iter().sum();
    let integral = (inner + 0.5 * (f[0] + f[n])) / n as f64;
    integral.powf(1.0 / p)
}
