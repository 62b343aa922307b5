//! Complete elliptic integrals and Jacobi elliptic functions.
//!
//! Conventions: [`e1`] and [`e2`] take the *parameter* `s` (multiplying `t²`
//! under the root, `s = k²`), and may be negative. [`jacobi`] takes the
//! *modulus* `k`.

use std::f64::consts::FRAC_PI_2;

use crate::error::{IospError, Result};
use crate::quadrature::{integrate_arcsine, DEFAULT_TOL};

const AGM_MAX_ITER: usize = 40;
const AGM_REL_TOL: f64 = 1e-15;

/// Returns (K, E) for parameter `s ∈ [0, 1)` via the arithmetic-geometric mean.
fn agm_complete(s: f64) -> (f64, f64) {
    let mut a = 1.0_f64;
    let mut b = (1.0 - s).sqrt();
    let mut weight = 0.5;
    let mut sum = 0.5 * s;
    for _ in 0..AGM_MAX_ITER {
        if (a - b).abs() <= AGM_REL_TOL * a {
            break;
        }
        let c = 0.5 * (a - b);
        let next_a = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = next_a;
        weight *= 2.0;
        sum += weight * c * c;
    }
    let k = FRAC_PI_2 / a;
    (k, k * (1.0 - sum))
}

fn check_parameter(s: f64) -> Result<()> {
    if !(s < 1.0) || s.is_nan() || s == f64::NEG_INFINITY {
        return Err(IospError::DomainError(format!("elliptic parameter s = {s} must be finite and below 1")));
    }
    Ok(())
}

/// `∫₀¹ dt / √((1-t²)(1-s·t²))`, the complete first-kind integral for parameter `s < 1`.
pub fn e1(s: f64) -> Result<f64> {
    check_parameter(s)?;
    if s >= 0.0 {
        Ok(agm_complete(s).0)
    } else {
        e1_by_quadrature(s, DEFAULT_TOL)
    }
}

/// `∫₀¹ √(1-s·t²) / √(1-t²) dt`, the complete second-kind integral for parameter `s < 1`.
pub fn e2(s: f64) -> Result<f64> {
    check_parameter(s)?;
    if s >= 0.0 {
        Ok(agm_complete(s).1)
    } else {
        e2_by_quadrature(s, DEFAULT_TOL)
    }
}

/// First-kind integral by desingularized quadrature, valid for any `s < 1`.
pub fn e1_by_quadrature(s: f64, tol: f64) -> Result<f64> {
    check_parameter(s)?;
    integrate_arcsine(|t| (1.0 - s * t * t).sqrt().recip(), tol)
}

/// Second-kind integral by desingularized quadrature, valid for any `s < 1`.
pub fn e2_by_quadrature(s: f64, tol: f64) -> Result<f64> {
    check_parameter(s)?;
    integrate_arcsine(|t| (1.0 - s * t * t).sqrt(), tol)
}

/// Quarter period `K(k)` for modulus `k`.
pub fn quarter_period(k: f64) -> Result<f64> {
    check_modulus(k)?;
    e1(k * k)
}

fn check_modulus(k: f64) -> Result<()> {
    if !(0.0..1.0).contains(&k) {
        return Err(IospError::DomainError(format!("elliptic modulus k = {k} must lie in [0, 1)")));
    }
    Ok(())
}

/// Jacobi elliptic functions `(sn, cn, dn)` at `z` for modulus `k ∈ [0, 1)`,
/// by descending Landen transformation.
pub fn jacobi(z: f64, k: f64) -> Result<(f64, f64, f64)> {
    check_modulus(k)?;
    if !z.is_finite() {
        return Err(IospError::NonFiniteInput("jacobi argument"));
    }
    if k == 0.0 {
        return Ok((z.sin(), z.cos(), 1.0));
    }

    let mut a = [0.0_f64; AGM_MAX_ITER + 1];
    let mut c = [0.0_f64; AGM_MAX_ITER + 1];
    a[0] = 1.0;
    c[0] = k;
    let mut b = (1.0 - k * k).sqrt();
    let mut n = 0;
    while c[n].abs() > AGM_REL_TOL * a[n] && n < AGM_MAX_ITER {
        let (an, bn) = (a[n], b);
        a[n + 1] = 0.5 * (an + bn);
        c[n + 1] = 0.5 * (an - bn);
        b = (an * bn).sqrt();
        n += 1;
    }

    let mut phi = (1u64 << n) as f64 * a[n] * z;
    for j in (1..=n).rev() {
        phi = 0.5 * (phi + (c[j] / a[j] * phi.sin()).asin());
    }
    let sn = phi.sin();
    let cn = phi.cos();
    // dn² = k'² + k²cn² has no cancellation, unlike 1 - k²sn².
    let dn = ((1.0 - k) * (1.0 + k) + k * k * cn * cn).sqrt();
    Ok((sn, cn, dn))
}
