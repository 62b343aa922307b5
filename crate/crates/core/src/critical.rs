//! Period kernels of the critical equation and the amplitude inversion.
//!
//! Writing the quarter period of the critical equation in the variable
//! `t = u / a` gives `1/(2m) = V(a) / √|gap|`, where `V` is one of three
//! monotone kernels depending on the regime. The companion `U` kernels
//! carry the `t^{2p*}` moment that enters the `L^p` error.

use serde::{Deserialize, Serialize};

use crate::error::{IospError, Result};
use crate::problem::{
    classify, conjugate_exponent, validate_exponent, AmplitudeSolution, ProblemSpec, Regime,
    RegimeClass,
};
use crate::quadrature::{integrate_arcsine, kernel_integral, h_ratio, KernelSpec, SignMode, DEFAULT_TOL};

pub const ROOT_MAX_ITER: usize = 200;
pub const ROOT_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Kernel {
    V1,
    V2,
    V3,
    U1,
    U2,
    U3,
}

impl Kernel {
    fn sign_mode(self) -> SignMode {
        match self {
            Kernel::V1 | Kernel::U1 => SignMode::OnePlusCH,
            Kernel::V2 | Kernel::U2 => SignMode::OneMinusCH,
            Kernel::V3 | Kernel::U3 => SignMode::CHMinusOne,
        }
    }

    fn is_period(self) -> bool {
        matches!(self, Kernel::V1 | Kernel::V2 | Kernel::V3)
    }

    /// The period kernel governing a regime, if it has one.
    pub fn period_for(regime: Regime) -> Option<Kernel> {
        match regime {
            Regime::Interior => Some(Kernel::V1),
            Regime::Above => Some(Kernel::V2),
            Regime::Below => Some(Kernel::V3),
            Regime::AtPrior | Regime::Resonant => None,
        }
    }

    /// The moment kernel paired with a period kernel.
    pub fn moment(self) -> Kernel {
        match self {
            Kernel::V1 | Kernel::U1 => Kernel::U1,
            Kernel::V2 | Kernel::U2 => Kernel::U2,
            Kernel::V3 | Kernel::U3 => Kernel::U3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelValue {
    pub which: Kernel,
    pub alpha: f64,
    pub value: f64,
}

/// The six kernels for a fixed gap and exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelFamily {
    gap: f64,
    p: f64,
    p_star: f64,
    tol: f64,
}

impl KernelFamily {
    pub fn new(gap: f64, p: f64, tol: f64) -> Result<Self> {
        validate_exponent(p)?;
        if !gap.is_finite() {
            return Err(IospError::NonFiniteInput("gap"));
        }
        Ok(KernelFamily {
            gap,
            p,
            p_star: conjugate_exponent(p),
            tol,
        })
    }

    pub fn from_spec(spec: &ProblemSpec, tol: f64) -> Result<Self> {
        Self::new(spec.gap(), spec.p, tol)
    }

    pub fn gap(&self) -> f64 {
        self.gap
    }

    pub fn p_star(&self) -> f64 {
        self.p_star
    }

    /// Open interval of admissible amplitudes for `which`.
    pub fn domain(&self, which: Kernel) -> Result<(f64, f64)> {
        let g = self.gap;
        match which.sign_mode() {
            SignMode::OnePlusCH if g > 0.0 => Ok((0.0, f64::INFINITY)),
            SignMode::OneMinusCH if g > 0.0 => Ok((0.0, g.powf(0.5 * (self.p - 1.0)))),
            SignMode::CHMinusOne if g < 0.0 => {
                Ok(((-g * self.p_star).powf(0.5 * (self.p - 1.0)), f64::INFINITY))
            }
            _ => Err(IospError::DomainError(format!(
                "{which:?} is not defined for gap {g}"
            ))),
        }
    }

    /// `c = α^{2p*-2} / (p*·|gap|)`.
    pub fn coupling(&self, alpha: f64) -> f64 {
        alpha.powf(2.0 * self.p_star - 2.0) / (self.p_star * self.gap.abs())
    }

    fn kernel_spec(&self, which: Kernel, alpha: f64) -> Result<KernelSpec> {
        let (lo, hi) = self.domain(which)?;
        if !(alpha > lo && alpha < hi) {
            return Err(IospError::DomainError(format!(
                "alpha = {alpha} outside ({lo}, {hi}) for {which:?}"
            )));
        }
        Ok(KernelSpec {
            weight_power: if which.is_period() { 0.0 } else { 2.0 * self.p_star },
            c: self.coupling(alpha),
            sign_mode: which.sign_mode(),
            p_star: self.p_star,
        })
    }

    /// Period kernel `V_i(α)`.
    pub fn v(&self, which: Kernel, alpha: f64) -> Result<f64> {
        if !which.is_period() {
            return Err(IospError::DomainError(format!("{which:?} is not a period kernel")));
        }
        kernel_integral(&self.kernel_spec(which, alpha)?, self.tol)
    }

    /// Moment kernel `U_i(α) = α^{2p*} |gap|^{-p} ∫ t^{2p*} / √(…)`.
    pub fn u(&self, which: Kernel, alpha: f64) -> Result<f64> {
        if which.is_period() {
            return Err(IospError::DomainError(format!("{which:?} is not a moment kernel")));
        }
        let integral = kernel_integral(&self.kernel_spec(which, alpha)?, self.tol)?;
        Ok(alpha.powf(2.0 * self.p_star) * self.gap.abs().powf(-self.p) * integral)
    }

    pub fn evaluate(&self, which: Kernel, alpha: f64) -> Result<KernelValue> {
        let value = if which.is_period() {
            self.v(which, alpha)?
        } else {
            self.u(which, alpha)?
        };
        Ok(KernelValue { which, alpha, value })
    }
}

/// `V_i(α)` for the gap and exponent of `spec`.
pub fn v_kernel(which: Kernel, alpha: f64, spec: &ProblemSpec) -> Result<f64> {
    KernelFamily::from_spec(spec, DEFAULT_TOL)?.v(which, alpha)
}

/// `U_i(α)` for the gap and exponent of `spec`.
pub fn u_kernel(which: Kernel, alpha: f64, spec: &ProblemSpec) -> Result<f64> {
    KernelFamily::from_spec(spec, DEFAULT_TOL)?.u(which, alpha)
}

/// `I = ∫₀¹ dt/√(1-t^{2p*})` and `J = ∫₀¹ t^{2p*} dt/√(1-t^{2p*})`, the two
/// constants of the `gap = 0` regime.
pub fn prior_integrals(p_star: f64, tol: f64) -> Result<(f64, f64)> {
    let i = integrate_arcsine(|t| h_ratio(t, p_star).sqrt().recip(), tol)?;
    let j = integrate_arcsine(|t| t.powf(2.0 * p_star) / h_ratio(t, p_star).sqrt(), tol)?;
    Ok((i, j))
}

/// Amplitude for `gap = 0`: `a = (2m √p* I)^{p-1}`.
pub fn prior_amplitude(m: u32, p: f64, tol: f64) -> Result<f64> {
    let p_star = conjugate_exponent(p);
    let (i, _) = prior_integrals(p_star, tol)?;
    Ok((2.0 * m as f64 * p_star.sqrt() * i).powf(p - 1.0))
}

/// `k = -ε a^{2p*}/p* + gap·a²`, the first-integral level at amplitude `a`.
pub fn energy_level(a: f64, epsilon: i8, gap: f64, p_star: f64) -> f64 {
    -(epsilon as f64) * a.powf(2.0 * p_star) / p_star + gap * a * a
}

/// Inverts the period kernel of the spec's regime to get the amplitude `a_m`.
pub fn invert_v(spec: &ProblemSpec) -> Result<AmplitudeSolution> {
    amplitude_for(&classify(spec), spec.m, spec.p, DEFAULT_TOL)
}

/// Amplitude for an already classified gap.
pub fn amplitude_for(class: &RegimeClass, m: u32, p: f64, tol: f64) -> Result<AmplitudeSolution> {
    let family = KernelFamily::new(class.gap, p, tol)?;
    let p_star = family.p_star();
    let finish = |a: f64, lo: f64, hi: f64, iterations: usize| AmplitudeSolution {
        a_m: a,
        k: energy_level(a, class.epsilon, class.gap, p_star),
        bracket_lo: lo,
        bracket_hi: hi,
        iterations,
    };

    let which = match class.regime {
        Regime::Resonant => return Err(IospError::RegimeMismatch(Regime::Resonant)),
        Regime::AtPrior => {
            let a = prior_amplitude(m, p, tol)?;
            return Ok(finish(a, a, a, 0));
        }
        r => Kernel::period_for(r).expect("regime has a period kernel"),
    };
    let target = class.gap.abs().sqrt() / (2.0 * m as f64);
    let f = |alpha: f64| family.v(which, alpha).map(|v| v - target);
    let (lo, hi) = match which {
        Kernel::V1 => bracket_unbounded(&f, (p_star * class.gap).powf(0.5 * (p - 1.0)))?,
        Kernel::V2 => bracket_below_cap(&f, family.domain(which)?.1)?,
        Kernel::V3 => bracket_above_floor(&f, family.domain(which)?.0)?,
        _ => unreachable!("moment kernels are never inverted"),
    };
    let (a, iterations) = brent(&f, lo.0, hi.0, lo.1, hi.1)?;
    Ok(finish(a, lo.0.min(hi.0), lo.0.max(hi.0), iterations))
}

type Probe = (f64, f64);

fn sign_differs(a: f64, b: f64) -> bool {
    (a > 0.0 && b < 0.0) || (a < 0.0 && b > 0.0)
}

/// Decreasing kernel on `(0, ∞)` with values in `(0, π/2)`.
fn bracket_unbounded<F: Fn(f64) -> Result<f64>>(f: &F, scale: f64) -> Result<(Probe, Probe)> {
    let mut lo = (scale, f(scale)?);
    let mut hi = lo;
    for _ in 0..400 {
        if lo.1 > 0.0 {
            break;
        }
        lo.0 *= 0.25;
        lo.1 = f(lo.0)?;
    }
    for _ in 0..400 {
        if hi.1 < 0.0 {
            break;
        }
        hi.0 *= 4.0;
        hi.1 = f(hi.0)?;
    }
    if !sign_differs(lo.1, hi.1) {
        return Err(IospError::BracketFailure(format!(
            "no sign change between {} and {}",
            lo.0, hi.0
        )));
    }
    Ok((lo, hi))
}

/// Increasing kernel on `(0, cap)` blowing up at the cap.
fn bracket_below_cap<F: Fn(f64) -> Result<f64>>(f: &F, cap: f64) -> Result<(Probe, Probe)> {
    let mid = 0.5 * cap;
    let fm = f(mid)?;
    if fm > 0.0 {
        let mut lo = (mid, fm);
        for _ in 0..200 {
            lo.0 *= 0.0625;
            lo.1 = f(lo.0)?;
            if lo.1 < 0.0 {
                return Ok((lo, (mid, fm)));
            }
        }
        return Err(IospError::BracketFailure("period kernel never drops below target".into()));
    }
    let mut gap = 1e-3;
    while gap * cap > 4.0 * f64::EPSILON * cap {
        let alpha = cap * (1.0 - gap);
        match f(alpha) {
            Ok(v) if v > 0.0 => return Ok(((mid, fm), (alpha, v))),
            Ok(_) => {}
            // Rounding at the cap can push the radicand through zero.
            Err(IospError::RadicandNonpositive { .. }) | Err(IospError::DomainError(_)) => break,
            Err(e) => return Err(e),
        }
        gap *= 0.1;
    }
    Err(IospError::BracketFailure(format!(
        "target not reached before the amplitude cap {cap}"
    )))
}

/// Decreasing kernel on `(floor, ∞)` blowing up at the floor.
fn bracket_above_floor<F: Fn(f64) -> Result<f64>>(f: &F, floor: f64) -> Result<(Probe, Probe)> {
    let mut hi = (2.0 * floor, f(2.0 * floor)?);
    let mut lo = None;
    if hi.1 > 0.0 {
        let prev = hi;
        for _ in 0..400 {
            hi.0 *= 2.0;
            hi.1 = f(hi.0)?;
            if hi.1 < 0.0 {
                break;
            }
        }
        lo = Some(prev);
    }
    if hi.1 >= 0.0 {
        return Err(IospError::BracketFailure("period kernel never drops below target".into()));
    }
    if let Some(lo) = lo {
        return Ok((lo, hi));
    }
    let mut gap = 1e-3;
    while gap > 4.0 * f64::EPSILON {
        let alpha = floor * (1.0 + gap);
        match f(alpha) {
            Ok(v) if v > 0.0 => return Ok(((alpha, v), hi)),
            Ok(_) => {}
            Err(IospError::RadicandNonpositive { .. }) | Err(IospError::DomainError(_)) => break,
            Err(e) => return Err(e),
        }
        gap *= 0.1;
    }
    Err(IospError::BracketFailure(format!(
        "target not reached above the amplitude floor {floor}"
    )))
}

/// Brent's method on a sign-changing bracket. Stops when the bracket is
/// narrower than `1e-12·max(1, |x|)`.
fn brent<F: Fn(f64) -> Result<f64>>(f: &F, x0: f64, x1: f64, f0: f64, f1: f64) -> Result<(f64, usize)> {
    let (mut a, mut b, mut fa, mut fb) = (x0, x1, f0, f1);
    if fa == 0.0 {
        return Ok((a, 0));
    }
    if fb == 0.0 {
        return Ok((b, 0));
    }
    if !sign_differs(fa, fb) {
        return Err(IospError::BracketFailure(format!("f({a}) and f({b}) share a sign")));
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for iter in 1..=ROOT_MAX_ITER {
        if !sign_differs(fb, fc) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 0.5 * ROOT_REL_TOL * b.abs().max(1.0);
        let half = 0.5 * (c - b);
        if half.abs() <= tol || fb == 0.0 {
            return Ok((b, iter));
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            // inverse quadratic interpolation, or secant when a == c
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * half * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * half * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * half * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = half;
                e = d;
            }
        } else {
            d = half;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(half) };
        fb = f(b)?;
    }
    Err(IospError::NoConvergence { iterations: ROOT_MAX_ITER })
}

/// The conserved quantity `(u')² - (ε/p*)|u|^{2p*} + gap·u²` minus its level `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstIntegral {
    pub epsilon: i8,
    pub p_star: f64,
    pub gap: f64,
    pub k: f64,
}

impl FirstIntegral {
    pub fn new(spec: &ProblemSpec, k: f64) -> Self {
        let class = classify(spec);
        FirstIntegral {
            epsilon: class.epsilon,
            p_star: spec.p_star(),
            gap: class.gap,
            k,
        }
    }

    pub fn residual(&self, u: f64, du: f64) -> f64 {
        du * du - (self.epsilon as f64 / self.p_star) * u.abs().powf(2.0 * self.p_star)
            + self.gap * u * u
            - self.k
    }
}

/// Residual of the first integral at `(u, u')` for the spec's regime.
pub fn first_integral_residual(u: f64, du: f64, spec: &ProblemSpec, k: f64) -> f64 {
    FirstIntegral::new(spec, k).residual(u, du)
}
