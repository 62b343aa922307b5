//! Adaptive Gauss-Kronrod quadrature and the endpoint-singular kernel integrals.
//!
//! All kernels share the shape `∫₀¹ tʷ / √((1-t²)·G(t)) dt` with
//! `G = 1 + c·h`, `1 - c·h` or `c·h - 1` and `h(t) = (1 - t^{2p*}) / (1 - t²)`.
//! The substitution `t = sin θ` removes the inverse square root at `t = 1`
//! and leaves `sin(θ)ʷ / √G(sin θ)` on `[0, π/2]`, which is smooth whenever
//! `G` stays away from zero.

use std::cell::Cell;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{IospError, Result};

pub const DEFAULT_TOL: f64 = 1e-12;
pub const MAX_PANELS: usize = 1_000_000;

// Kronrod abscissae, the odd-indexed ones are the 7-point Gauss nodes.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// One 15-point Kronrod panel: (estimate, |K15 - G7|).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

/// Globally adaptive G7/K15 quadrature of `f` over `[a, b]`.
///
/// The panel with the largest error estimate is bisected until the summed
/// estimate drops below `tol` (or below the round-off floor of the result).
pub fn integrate_adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(IospError::DomainError(format!(
            "integration interval [{a}, {b}] is empty or not finite"
        )));
    }
    if !(tol > 0.0) {
        return Err(IospError::DomainError(format!("tolerance {tol} must be positive")));
    }

    let (value, error) = gk15(&f, a, b);
    let mut total = value;
    let mut total_err = error;
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value, error });

    loop {
        if !total.is_finite() || !total_err.is_finite() {
            return Err(IospError::DomainError("integrand is not finite".into()));
        }
        let floor = 50.0 * f64::EPSILON * total.abs();
        if total_err <= tol.max(floor) {
            // Re-sum to shed accumulated drift from the running total.
            return Ok(heap.iter().map(|p| p.value).sum());
        }
        if heap.len() >= MAX_PANELS {
            return Err(IospError::ToleranceNotMet {
                tol,
                panels: heap.len(),
                estimate: total_err,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(IospError::ToleranceNotMet {
                tol,
                panels: heap.len() + 1,
                estimate: total_err,
            });
        }
        let (lv, le) = gk15(&f, worst.a, mid);
        let (rv, re) = gk15(&f, mid, worst.b);
        total += lv + rv - worst.value;
        total_err += le + re - worst.error;
        heap.push(Panel { a: worst.a, b: mid, value: lv, error: le });
        heap.push(Panel { a: mid, b: worst.b, value: rv, error: re });
    }
}

/// `∫₀¹ g(t) / √(1 - t²) dt`, evaluated as `∫₀^{π/2} g(sin θ) dθ`.
pub fn integrate_arcsine<F: Fn(f64) -> f64>(g: F, tol: f64) -> Result<f64> {
    integrate_adaptive(|theta: f64| g(theta.sin()), 0.0, FRAC_PI_2, tol)
}

/// `h(t) = (1 - t^{2p*}) / (1 - t²)` on `[0, 1]`, with `h(1) = p*`.
pub fn h_ratio(t: f64, p_star: f64) -> f64 {
    let two_ps = 2.0 * p_star;
    if two_ps.fract() == 0.0 && (two_ps as i64) % 2 == 0 && two_ps <= 64.0 {
        // 1 + t² + t⁴ + … + t^{2p*-2}
        let t2 = t * t;
        let mut acc = 1.0;
        for _ in 1..(p_star as i64) {
            acc = acc * t2 + 1.0;
        }
        return acc;
    }
    if t >= 1.0 {
        return p_star;
    }
    if t < 0.5 {
        return (1.0 - t.powf(two_ps)) / (1.0 - t * t);
    }
    let lt = t.ln();
    (two_ps * lt).exp_m1() / (2.0 * lt).exp_m1()
}

/// `h(t) - 1`, accurate for small `t`.
fn h_minus_one(t: f64, p_star: f64) -> f64 {
    if t < 0.5 {
        let t2 = t * t;
        (t2 - t.powf(2.0 * p_star)) / (1.0 - t2)
    } else {
        h_ratio(t, p_star) - 1.0
    }
}

/// `p* - h(t)` with `s = 1 - t²`, accurate as `t → 1`.
fn p_star_minus_h(t: f64, s: f64, p_star: f64) -> f64 {
    if s >= 0.25 {
        return p_star - h_ratio(t, p_star);
    }
    // (1-s)^{p*} = Σ C(p*,n)(-s)^n, so p* - h = Σ_{n≥2} C(p*,n)(-s)^n / s.
    let mut term = -p_star * s;
    let mut sum = 0.0;
    for n in 2..400 {
        term *= (p_star - (n - 1) as f64) / n as f64 * (-s);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    if s > 0.0 {
        sum / s
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignMode {
    /// `G = 1 + c·h`
    OnePlusCH,
    /// `G = 1 - c·h`
    OneMinusCH,
    /// `G = c·h - 1`
    CHMinusOne,
}

/// Integrand family `tʷ / √((1-t²)·G(t))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub weight_power: f64,
    pub c: f64,
    pub sign_mode: SignMode,
    pub p_star: f64,
}

impl KernelSpec {
    pub fn radicand(&self, t: f64) -> f64 {
        self.radicand_split(t, (1.0 - t) * (1.0 + t))
    }

    /// `G(t)` given `t` and `1 - t²` separately, written so that the small
    /// quantities near the blow-up endpoints are formed without cancellation.
    fn radicand_split(&self, t: f64, one_minus_t2: f64) -> f64 {
        let c = self.c;
        match self.sign_mode {
            SignMode::OnePlusCH => 1.0 + c * h_ratio(t, self.p_star),
            SignMode::OneMinusCH => {
                (1.0 - c * self.p_star) + c * p_star_minus_h(t, one_minus_t2, self.p_star)
            }
            SignMode::CHMinusOne => (c - 1.0) + c * h_minus_one(t, self.p_star),
        }
    }

    /// Checks that `G > 0` on all of `[0, 1]`. `h` increases from 1 to `p*`,
    /// so only the endpoint where `G` is smallest needs testing.
    pub fn check(&self) -> Result<()> {
        if !(self.p_star > 1.0) || !self.p_star.is_finite() {
            return Err(IospError::DomainError(format!("p* = {} must exceed 1", self.p_star)));
        }
        if !(self.weight_power >= 0.0) || !self.weight_power.is_finite() {
            return Err(IospError::DomainError(format!(
                "weight power {} must be nonnegative",
                self.weight_power
            )));
        }
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(IospError::DomainError(format!("coupling c = {} must be positive", self.c)));
        }
        let (t, value) = match self.sign_mode {
            SignMode::OnePlusCH => return Ok(()),
            SignMode::OneMinusCH => (1.0, 1.0 - self.c * self.p_star),
            SignMode::CHMinusOne => (0.0, self.c - 1.0),
        };
        if value <= 0.0 {
            return Err(IospError::RadicandNonpositive { t, value });
        }
        Ok(())
    }
}

/// `∫₀¹ tʷ / √((1-t²)·G(t)) dt` to absolute accuracy `tol`.
pub fn kernel_integral(k: &KernelSpec, tol: f64) -> Result<f64> {
    k.check()?;
    let bad = Cell::new(None);
    let w = k.weight_power;
    let value = integrate_adaptive(
        |theta: f64| {
            let (t, cos) = theta.sin_cos();
            let g = k.radicand_split(t, cos * cos);
            if g <= 0.0 {
                if bad.get().is_none() {
                    bad.set(Some((t, g)));
                }
                return 0.0;
            }
            let num = if w == 0.0 { 1.0 } else { t.powf(w) };
            num / g.sqrt()
        },
        0.0,
        FRAC_PI_2,
        tol,
    );
    if let Some((t, value)) = bad.get() {
        return Err(IospError::RadicandNonpositive { t, value });
    }
    value
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Raw t-form oracle: adaptive quadrature on `[0, 1-δ]` plus the leading
    /// endpoint term `tʷ/√(2(1-t)G(1))` integrated analytically on the tail.
    fn raw_oracle(k: &KernelSpec) -> f64 {
        let delta = 1e-10;
        let body = integrate_adaptive(
            |t| t.powf(k.weight_power) / ((1.0 - t * t) * k.radicand(t)).sqrt(),
            0.0,
            1.0 - delta,
            1e-11,
        )
        .unwrap();
        let tail = (2.0 * delta / k.radicand(1.0)).sqrt();
        body + tail
    }

    #[test]
    fn h_ratio_examples() {
        assert_eq!(h_ratio(0.0, 2.0), 1.0);
        assert_eq!(h_ratio(1.0, 2.0), 2.0);
        assert_eq!(h_ratio(0.5, 2.0), 1.25);
        assert_eq!(h_ratio(1.0, 1.5), 1.5);
        assert_eq!(h_ratio(0.0, 1.5), 1.0);
    }

    #[test]
    fn h_ratio_general_matches_direct() {
        for &ps in &[1.25, 1.5, 3.0, 2.7] {
            for i in 1..100 {
                let t = i as f64 / 100.0;
                let direct = (1.0 - t.powf(2.0 * ps)) / (1.0 - t * t);
                assert!((h_ratio(t, ps) - direct).abs() < 1e-12 * direct.max(1.0));
            }
            let near = h_ratio(1.0 - 1e-12, ps);
            assert!((near - ps).abs() < 1e-9);
            let mut prev = 0.0;
            for i in 0..=1000 {
                let v = h_ratio(i as f64 / 1000.0, ps);
                assert!(v >= prev);
                prev = v;
            }
        }
    }

    #[test]
    fn split_radicand_matches_direct_form() {
        for &ps in &[1.5, 2.0, 3.0, 1.3] {
            for mode in [SignMode::OnePlusCH, SignMode::OneMinusCH, SignMode::CHMinusOne] {
                let k = KernelSpec { weight_power: 0.0, c: 0.3, sign_mode: mode, p_star: ps };
                for i in 0..=200 {
                    let t = i as f64 / 200.0;
                    let h = (1.0 - t.powf(2.0 * ps)) / (1.0 - t * t);
                    let h = if t == 1.0 { ps } else { h };
                    let direct = match mode {
                        SignMode::OnePlusCH => 1.0 + 0.3 * h,
                        SignMode::OneMinusCH => 1.0 - 0.3 * h,
                        SignMode::CHMinusOne => 0.3 * h - 1.0,
                    };
                    assert!((k.radicand(t) - direct).abs() < 1e-12, "{mode:?} p*={ps} t={t}");
                }
            }
        }
    }

    #[test]
    fn adaptive_basics() {
        assert!((integrate_adaptive(|_| 1.0, 0.0, 1.0, 1e-12).unwrap() - 1.0).abs() < 1e-14);
        assert!((integrate_adaptive(f64::sin, 0.0, PI, 1e-12).unwrap() - 2.0).abs() < 1e-12);
        assert!(integrate_adaptive(|_| 1.0, 1.0, 0.0, 1e-12).is_err());
        assert!(integrate_adaptive(|_| f64::NAN, 0.0, 1.0, 1e-12).is_err());
    }

    #[test]
    fn adaptive_near_singular_tolerance_levels_agree() {
        let f = |t: f64| t.powi(4) / (1.0 - t.powi(4)).sqrt();
        let a = integrate_adaptive(f, 0.0, 1.0 - 1e-8, 1e-9).unwrap();
        let b = integrate_adaptive(f, 0.0, 1.0 - 1e-8, 1e-12).unwrap();
        assert!((a - b).abs() < 1e-8);
        assert!(a.is_finite() && a > 0.0);
    }

    #[test]
    fn adaptive_is_deterministic() {
        let f = |t: f64| (1.0 - t * t).sqrt().recip().min(1e6);
        let a = integrate_adaptive(f, 0.0, 0.999, 1e-10).unwrap();
        let b = integrate_adaptive(f, 0.0, 0.999, 1e-10).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn kernel_small_coupling_is_arcsine() {
        for mode in [SignMode::OnePlusCH, SignMode::OneMinusCH] {
            let k = KernelSpec { weight_power: 0.0, c: 1e-14, sign_mode: mode, p_star: 2.0 };
            assert!((kernel_integral(&k, 1e-12).unwrap() - FRAC_PI_2).abs() < 1e-12);
        }
    }

    #[test]
    fn kernel_matches_raw_oracle() {
        let cases = [
            KernelSpec { weight_power: 0.0, c: 1.0, sign_mode: SignMode::OnePlusCH, p_star: 2.0 },
            KernelSpec { weight_power: 4.0, c: 0.5 * 0.9, sign_mode: SignMode::OneMinusCH, p_star: 2.0 },
        ];
        for k in &cases {
            let v = kernel_integral(k, 1e-12).unwrap();
            let o = raw_oracle(k);
            assert!((v - o).abs() < 1e-7, "{k:?}: {v} vs {o}");
        }
    }

    #[test]
    fn kernel_random_tuples_match_raw_oracle() {
        // Fixed pseudo-random tuples (LCG), covering all three modes.
        let mut state: u64 = 0x2545_f491_4f6c_dd1d;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for i in 0..10 {
            let p_star = 1.2 + 2.5 * next();
            let w = if next() < 0.5 { 0.0 } else { 2.0 * p_star };
            let (mode, c) = match i % 3 {
                0 => (SignMode::OnePlusCH, 0.05 + 5.0 * next()),
                1 => (SignMode::OneMinusCH, (0.05 + 0.9 * next()) / p_star),
                _ => (SignMode::CHMinusOne, 1.05 + 5.0 * next()),
            };
            let k = KernelSpec { weight_power: w, c, sign_mode: mode, p_star };
            let v = kernel_integral(&k, 1e-12).unwrap();
            let o = raw_oracle(&k);
            assert!((v - o).abs() < 1e-7, "{k:?}: {v} vs {o}");
        }
    }

    #[test]
    fn kernel_monotone_in_coupling() {
        let mut prev_plus = f64::INFINITY;
        let mut prev_minus = 0.0;
        for i in 1..40 {
            let c = i as f64 / 80.0;
            let plus = kernel_integral(
                &KernelSpec { weight_power: 0.0, c: c * 4.0, sign_mode: SignMode::OnePlusCH, p_star: 2.0 },
                1e-12,
            )
            .unwrap();
            let minus = kernel_integral(
                &KernelSpec { weight_power: 0.0, c, sign_mode: SignMode::OneMinusCH, p_star: 2.0 },
                1e-12,
            )
            .unwrap();
            assert!(plus < prev_plus);
            assert!(minus > prev_minus);
            prev_plus = plus;
            prev_minus = minus;
        }
    }

    #[test]
    fn kernel_blows_up_at_cap() {
        let p_star = 2.0;
        let c = (1.0 - 1e-6) / p_star;
        let v = kernel_integral(
            &KernelSpec { weight_power: 0.0, c, sign_mode: SignMode::OneMinusCH, p_star },
            1e-12,
        )
        .unwrap();
        assert!(v > 10.0, "value {v}");
        let closer = kernel_integral(
            &KernelSpec { weight_power: 0.0, c: (1.0 - 1e-12) / p_star, sign_mode: SignMode::OneMinusCH, p_star },
            1e-12,
        )
        .unwrap();
        assert!(closer > 10.0, "value {closer}");
    }

    #[test]
    fn kernel_rejects_boundary() {
        let k = KernelSpec { weight_power: 0.0, c: 0.5, sign_mode: SignMode::OneMinusCH, p_star: 2.0 };
        assert!(matches!(kernel_integral(&k, 1e-12), Err(IospError::RadicandNonpositive { .. })));
        let k = KernelSpec { weight_power: 0.0, c: 1.0, sign_mode: SignMode::CHMinusOne, p_star: 2.0 };
        assert!(matches!(kernel_integral(&k, 1e-12), Err(IospError::RadicandNonpositive { .. })));
        let k = KernelSpec { weight_power: 0.0, c: 0.0, sign_mode: SignMode::OnePlusCH, p_star: 2.0 };
        assert!(kernel_integral(&k, 1e-12).is_err());
    }
}
