//! Dirichlet eigenvalues of `-y'' + q(x)y = λy` on `[0, 1]` by Prüfer shooting.
//!
//! Independent of the reconstruction code: it only sees grid samples of `q`.

use std::f64::consts::PI;

use crate::error::{IospError, Result};

/// Lower bound on integration steps, so that coarse potentials still get an
/// accurate phase.
pub const MIN_STEPS: usize = 16384;
const BISECTION_MAX_ITER: usize = 200;

/// A potential sampled on the uniform grid `x_i = i/n`, linear in between.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPotential {
    values: Vec<f64>,
}

impl SampledPotential {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 3 {
            return Err(IospError::InvalidGrid {
                got: values.len().saturating_sub(1),
                min: 2,
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(IospError::NonFiniteInput("potential sample"));
        }
        Ok(SampledPotential { values })
    }

    pub fn constant(c: f64, n: usize) -> Result<Self> {
        Self::new(vec![c; n + 1])
    }

    /// Number of grid intervals.
    pub fn n(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, x: f64) -> f64 {
        let n = self.n();
        let s = (x * n as f64).clamp(0.0, n as f64);
        let i = (s.floor() as usize).min(n - 1);
        let f = s - i as f64;
        self.values[i] + f * (self.values[i + 1] - self.values[i])
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Step count used by [`eigenvalue`]: a multiple of `n`, at least [`MIN_STEPS`].
    pub fn default_steps(&self) -> usize {
        let n = self.n();
        let per_cell = MIN_STEPS.div_ceil(n).max(4);
        per_cell * n
    }
}

/// `θ(1)` for `θ' = cos²θ + (λ - q)sin²θ`, `θ(0) = 0`, by classical RK4.
/// `steps` below `4n` is raised to `4n`.
pub fn prufer_angle(lambda: f64, q: &SampledPotential, steps: usize) -> f64 {
    let steps = steps.max(4 * q.n());
    let h = 1.0 / steps as f64;
    let rhs = |x: f64, th: f64| {
        let (s, c) = th.sin_cos();
        c * c + (lambda - q.at(x)) * s * s
    };
    let mut th = 0.0_f64;
    for i in 0..steps {
        let x = i as f64 * h;
        let k1 = rhs(x, th);
        let k2 = rhs(x + 0.5 * h, th + 0.5 * h * k1);
        let k3 = rhs(x + 0.5 * h, th + 0.5 * h * k2);
        let k4 = rhs(x + h, th + h * k3);
        th += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    th
}

/// The m-th Dirichlet eigenvalue, bisected to bracket width `tol`.
pub fn eigenvalue(q: &SampledPotential, m: u32, tol: f64) -> Result<f64> {
    if m < 1 {
        return Err(IospError::InvalidIndex(m as i64));
    }
    if !(tol > 0.0) {
        return Err(IospError::DomainError(format!("bisection width {tol} must be positive")));
    }
    let steps = q.default_steps();
    let target = m as f64 * PI;
    let mm = m as f64;
    let mut lo = q.min() + (mm - 1.0) * (mm - 1.0) * PI * PI - 1.0;
    let mut hi = q.max() + mm * mm * PI * PI + 1.0;
    let (th_lo, th_hi) = (prufer_angle(lo, q, steps), prufer_angle(hi, q, steps));
    if !(th_lo < target && th_hi > target) {
        return Err(IospError::BracketFailure(format!(
            "phase {th_lo}..{th_hi} at λ ∈ [{lo}, {hi}] does not straddle {target}"
        )));
    }
    for _ in 0..BISECTION_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        if prufer_angle(mid, q, steps) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(IospError::NoConvergence {
        iterations: BISECTION_MAX_ITER,
    })
}
