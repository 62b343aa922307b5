//! Problem instances and regime classification.
//!
//! Every quantity downstream depends on the prior `q0` and the target
//! eigenvalue `lambda_star` only through the gap `lambda_star - q0`, and
//! the five regimes split the real line at `0` and `m²π²`.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{IospError, Result};

/// One inverse problem instance: constant prior, target eigenvalue, index and norm exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub q0: f64,
    pub lambda_star: f64,
    pub m: u32,
    pub p: f64,
}

impl ProblemSpec {
    /// Builds and validates a spec. `m` is taken signed so that negative
    /// indices coming from user input are reported rather than wrapped.
    pub fn new(q0: f64, lambda_star: f64, m: i64, p: f64) -> Result<Self> {
        if m < 1 || m > u32::MAX as i64 {
            return Err(IospError::InvalidIndex(m));
        }
        ProblemSpec {
            q0,
            lambda_star,
            m: m as u32,
            p,
        }
        .validate()
    }

    /// Returns the spec unchanged when all invariants hold.
    pub fn validate(self) -> Result<Self> {
        if !self.q0.is_finite() {
            return Err(IospError::NonFiniteInput("q0"));
        }
        if !self.lambda_star.is_finite() {
            return Err(IospError::NonFiniteInput("lambda_star"));
        }
        validate_exponent(self.p)?;
        if self.m < 1 {
            return Err(IospError::InvalidIndex(self.m as i64));
        }
        if !self.gap().is_finite() {
            return Err(IospError::NonFiniteInput("lambda_star - q0"));
        }
        Ok(self)
    }

    pub fn gap(&self) -> f64 {
        self.lambda_star - self.q0
    }

    pub fn p_star(&self) -> f64 {
        conjugate_exponent(self.p)
    }
}

pub(crate) fn validate_exponent(p: f64) -> Result<()> {
    // NaN fails the comparison as well.
    if !(p.is_finite() && p > 1.0) {
        return Err(IospError::InvalidExponent(p));
    }
    Ok(())
}

/// `p* = p / (p - 1)`.
pub fn conjugate_exponent(p: f64) -> f64 {
    p / (p - 1.0)
}

/// `m²π²`, the m-th Dirichlet eigenvalue of the free string.
pub fn resonance(m: u32) -> f64 {
    let mp = m as f64 * PI;
    mp * mp
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    /// gap > m²π²
    Above,
    /// gap = m²π², the prior already has the target eigenvalue
    Resonant,
    /// 0 < gap < m²π²
    Interior,
    /// gap = 0
    AtPrior,
    /// gap < 0
    Below,
}

impl Regime {
    /// Sign of the nonlinear term in the critical equation; 0 for the resonant sentinel.
    pub fn epsilon(self) -> i8 {
        match self {
            Regime::Above => 1,
            Regime::Resonant => 0,
            Regime::Interior | Regime::AtPrior | Regime::Below => -1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Regime::Above => "Above",
            Regime::Resonant => "Resonant",
            Regime::Interior => "Interior",
            Regime::AtPrior => "AtPrior",
            Regime::Below => "Below",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeClass {
    pub regime: Regime,
    pub epsilon: i8,
    pub gap: f64,
}

/// Classifies with exact boundary comparison.
pub fn classify(spec: &ProblemSpec) -> RegimeClass {
    classify_gap(spec.gap(), spec.m, 0.0)
}

/// Classifies with an absolute tolerance around the two boundaries `0` and `m²π²`.
pub fn classify_with_tol(spec: &ProblemSpec, boundary_tol: f64) -> RegimeClass {
    classify_gap(spec.gap(), spec.m, boundary_tol)
}

/// Classification on the gap alone. `boundary_tol = 0` compares bitwise.
pub fn classify_gap(gap: f64, m: u32, boundary_tol: f64) -> RegimeClass {
    let res = resonance(m);
    let tol = boundary_tol.max(0.0);
    let regime = if (gap - res).abs() <= tol {
        Regime::Resonant
    } else if gap.abs() <= tol {
        Regime::AtPrior
    } else if gap > res {
        Regime::Above
    } else if gap > 0.0 {
        Regime::Interior
    } else {
        Regime::Below
    };
    RegimeClass {
        regime,
        epsilon: regime.epsilon(),
        gap,
    }
}

/// Amplitude of the critical-equation solution and its first-integral constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeSolution {
    /// max |u_m| over one period
    pub a_m: f64,
    /// first-integral constant, equal to u_m'(0)²
    pub k: f64,
    /// Inversion bracket. Degenerate (`lo == hi == a_m`) when the amplitude
    /// comes from a closed form rather than a root search.
    pub bracket_lo: f64,
    pub bracket_hi: f64,
    pub iterations: usize,
}
