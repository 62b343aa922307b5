//! The minimal reconstruction error `Z_m(x) = ‖q̂ - q0‖_{L^p}` as a function
//! of the gap `x = λ* - q0`, and the dilation `Z₁(x/m²) = Z_m(x)/m²`.

use serde::{Deserialize, Serialize};

use crate::critical::{amplitude_for, prior_integrals, Kernel, KernelFamily};
use crate::error::{IospError, Result};
use crate::problem::{classify_gap, conjugate_exponent, validate_exponent, Regime, RegimeClass};
use crate::quadrature::DEFAULT_TOL;

/// Gaps this close to zero use the closed-form `gap = 0` branch; the
/// inversion targets `√|x|/(2m)` degenerate below this.
pub const PRIOR_SNAP: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorValue {
    pub x: f64,
    pub m: u32,
    pub p: f64,
    pub value: f64,
    pub branch: RegimeClass,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorOptions {
    /// absolute quadrature tolerance
    pub tol: f64,
    /// absolute tolerance for snapping the gap onto `0` or `m²π²`
    pub boundary_tol: f64,
}

impl Default for ErrorOptions {
    fn default() -> Self {
        ErrorOptions {
            tol: DEFAULT_TOL,
            boundary_tol: 0.0,
        }
    }
}

/// `Z_m(x)` with default options.
pub fn z_m(x: f64, m: u32, p: f64) -> Result<f64> {
    error_value(x, m, p, &ErrorOptions::default()).map(|e| e.value)
}

pub fn error_value(x: f64, m: u32, p: f64, opts: &ErrorOptions) -> Result<ErrorValue> {
    validate_exponent(p)?;
    if m < 1 {
        return Err(IospError::InvalidIndex(m as i64));
    }
    if !x.is_finite() {
        return Err(IospError::NonFiniteInput("gap"));
    }
    let mut branch = classify_gap(x, m, opts.boundary_tol);
    if x.abs() <= PRIOR_SNAP && branch.regime != Regime::Resonant {
        branch.regime = Regime::AtPrior;
        branch.epsilon = Regime::AtPrior.epsilon();
    }
    let value = match branch.regime {
        Regime::Resonant => 0.0,
        Regime::AtPrior => prior_error(m, p, opts.tol)?,
        regime => {
            let which = Kernel::period_for(regime).expect("regime has a period kernel");
            let amplitude = amplitude_for(&branch, m, p, opts.tol)?;
            let family = KernelFamily::new(x, p, opts.tol)?;
            let u = family.u(which.moment(), amplitude.a_m)?;
            (2.0 * m as f64 * x.abs().powf(p - 0.5) * u).powf(1.0 / p)
        }
    };
    Ok(ErrorValue {
        x,
        m,
        p,
        value,
        branch,
    })
}

/// Error at `gap = 0`: `4m²p*·(I^{2p-1}·J)^{1/p}`.
pub fn prior_error(m: u32, p: f64, tol: f64) -> Result<f64> {
    let p_star = conjugate_exponent(p);
    let (i, j) = prior_integrals(p_star, tol)?;
    let mm = m as f64;
    Ok(4.0 * mm * mm * p_star * (i.powf(2.0 * p - 1.0) * j).powf(1.0 / p))
}

/// `(4m²/p*)^p·I^{2p-1}·J`, the alternative `gap = 0` expression without the
/// outer root. Reported for comparison only; it does not match the limits of
/// the neighbouring branches.
pub fn unrooted_prior_constant(m: u32, p: f64, tol: f64) -> Result<f64> {
    let p_star = conjugate_exponent(p);
    let (i, j) = prior_integrals(p_star, tol)?;
    let mm = m as f64;
    Ok((4.0 * mm * mm / p_star).powf(p) * i.powf(2.0 * p - 1.0) * j)
}

/// `R_m(x) = x / m²`.
pub fn r_m(x: f64, m: u32) -> f64 {
    let mm = m as f64;
    x / (mm * mm)
}

/// `Z₁(R_m(x)) - R_m(Z_m(x))`, zero up to numerical error.
pub fn dilation_residual(x: f64, m: u32, p: f64) -> Result<f64> {
    dilation_residual_with(x, m, p, &ErrorOptions::default())
}

pub fn dilation_residual_with(x: f64, m: u32, p: f64, opts: &ErrorOptions) -> Result<f64> {
    let principal = error_value(r_m(x, m), 1, p, opts)?.value;
    let higher = error_value(x, m, p, opts)?.value;
    Ok(principal - r_m(higher, m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::resonance;
    use std::f64::consts::PI;

    #[test]
    fn resonance_is_exactly_zero() {
        for m in 1..=5 {
            for &p in &[1.5, 2.0, 3.0] {
                assert_eq!(z_m(resonance(m), m, p).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn r_m_examples() {
        assert_eq!(r_m(PI * PI, 1), PI * PI);
        assert!((r_m(4.0 * PI * PI, 2) - PI * PI).abs() < 1e-15);
        assert_eq!(r_m(-9.0, 3), -1.0);
    }

    #[test]
    fn dilation_examples() {
        assert_eq!(dilation_residual(resonance(3), 3, 2.0).unwrap(), 0.0);
        for m in 1..=4 {
            assert!(dilation_residual(PI * PI, m, 2.0).unwrap().abs() <= 1e-8);
        }
        assert!(dilation_residual(-5.0, 2, 2.0).unwrap().abs() <= 1e-8);
        assert_eq!(dilation_residual(17.3, 1, 3.0).unwrap(), 0.0);
    }

    #[test]
    fn prior_constant_is_the_limit_of_both_sides() {
        for &p in &[1.5, 2.0, 3.0] {
            for m in 1..=3 {
                let at = z_m(0.0, m, p).unwrap();
                let right = z_m(1e-7, m, p).unwrap();
                let left = z_m(-1e-7, m, p).unwrap();
                assert!((right - at).abs() < 1e-4 * at, "p={p} m={m}: {right} vs {at}");
                assert!((left - at).abs() < 1e-4 * at, "p={p} m={m}: {left} vs {at}");
                let alt = unrooted_prior_constant(m, p, DEFAULT_TOL).unwrap();
                assert!((alt - at).abs() > 1e-3 * at);
            }
        }
    }

    #[test]
    fn continuity_cauchy_decrease() {
        for &p in &[1.5, 2.0, 3.0] {
            for m in 1..=3 {
                for &b in &[0.0, resonance(m)] {
                    let zb = z_m(b, m, p).unwrap();
                    let mut prev = f64::INFINITY;
                    for &d in &[1e-3, 1e-4, 1e-5] {
                        let jump = (z_m(b + d, m, p).unwrap() - zb)
                            .abs()
                            .max((z_m(b - d, m, p).unwrap() - zb).abs());
                        assert!(jump < prev, "p={p} m={m} b={b} d={d}");
                        prev = jump;
                    }
                }
            }
        }
    }

    #[test]
    fn fig_shape_m1_p2() {
        let mut prev = f64::INFINITY;
        let res = resonance(1);
        for i in 0..=40 {
            let x = -10.0 + i as f64 * (res - 0.2 + 10.0) / 40.0;
            let z = z_m(x, 1, 2.0).unwrap();
            assert!(z > 0.0 && z < prev, "x={x}");
            prev = z;
        }
        let mut prev = 0.0;
        for i in 1..=30 {
            let x = res + i as f64;
            let z = z_m(x, 1, 2.0).unwrap();
            assert!(z > prev, "x={x}");
            prev = z;
        }
    }

    #[test]
    fn snapping_reclassifies() {
        let opts = ErrorOptions { tol: DEFAULT_TOL, boundary_tol: 0.01 };
        let e = error_value(resonance(1) + 0.005, 1, 2.0, &opts).unwrap();
        assert_eq!(e.branch.regime, Regime::Resonant);
        assert_eq!(e.value, 0.0);
        let e = error_value(1e-11, 2, 2.0, &ErrorOptions::default()).unwrap();
        assert_eq!(e.branch.regime, Regime::AtPrior);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(z_m(1.0, 0, 2.0).is_err());
        assert!(z_m(1.0, 1, 1.0).is_err());
        assert!(z_m(f64::NAN, 1, 2.0).is_err());
    }
}
