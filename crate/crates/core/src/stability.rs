//! Characteristic roots of the second-order retarded loop
//!
//! ```text
//! d(s) = s² + a₁s + a₀ + (b₁s + b₀) e^{-τs}
//! ```
//!
//! by Chebyshev collocation of the infinitesimal generator, followed by Newton
//! polishing on `d(s)`. An analytic imaginary-axis crossing serves as an
//! independent check on the critical delay.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::control::{DEFAULT_KI, DEFAULT_KP};
use crate::netsim::{MOTOR_GAIN, MOTOR_POLE};

pub const DEFAULT_ORDER: usize = 32;
pub const MIN_ORDER: usize = 8;
const MAX_ORDER: usize = 512;
/// Rightmost roots at `N` and `2N` must agree this closely.
pub const ORDER_TOLERANCE: f64 = 1e-4;
const POLISH_TOLERANCE: f64 = 1e-10;
const BISECTION_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub enum StabilityError {
    OrderTooLow(usize),
    NonPositiveDelay(f64),
    LeadingCoefficient(f64),
    /// The rightmost root did not polish; a larger order may help.
    PolishFailed { order: usize, residual: f64 },
    OrderNotConverged { order: usize, change: f64 },
    NoSignChange { lo: f64, hi: f64 },
    NoCrossing,
}

impl fmt::Display for StabilityError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StabilityError::OrderTooLow(n) => write!(f, "approximation order must be at least {MIN_ORDER}, got {n}"),
            StabilityError::NonPositiveDelay(t) => write!(f, "delay must be positive, got {t}"),
            StabilityError::LeadingCoefficient(c) => write!(f, "leading coefficient must be 1, got {c}"),
            StabilityError::PolishFailed { order, residual } => {
                write!(f, "rightmost root did not converge at order {order} (residual {residual:e})")
            }
            StabilityError::OrderNotConverged { order, change } => {
                write!(f, "rightmost root still moving by {change:e} at order {order}")
            }
            StabilityError::NoSignChange { lo, hi } => {
                write!(f, "rightmost real part has the same sign at {lo} s and {hi} s")
            }
            StabilityError::NoCrossing => write!(f, "no imaginary-axis crossing"),
        }
    }
}

impl core::error::Error for StabilityError {}

/// `s² + a₁s + a₀ + (b₁s + b₀)e^{-τs}`; `a2` is kept explicit and must be 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarDde {
    pub a2: f64,
    pub a1: f64,
    pub a0: f64,
    pub b1: f64,
    pub b0: f64,
    pub delay: f64,
}

impl ScalarDde {
    /// Loop of a first-order plant `k/(s + a)` under PI control `kp + ki/s`
    /// with the whole round trip `delay` in the loop.
    pub fn pi_first_order(kp: f64, ki: f64, k: f64, a: f64, delay: f64) -> Self {
        ScalarDde { a2: 1.0, a1: a, a0: 0.0, b1: kp * k, b0: ki * k, delay }
    }

    /// The servomotor speed loop with the default PI gains.
    pub fn speed_loop(delay: f64) -> Self {
        Self::pi_first_order(DEFAULT_KP, DEFAULT_KI, MOTOR_GAIN, MOTOR_POLE, delay)
    }

    pub fn with_delay(self, delay: f64) -> Self {
        ScalarDde { delay, ..self }
    }

    fn validate(&self) -> Result<(), StabilityError> {
        if self.a2 != 1.0 {
            return Err(StabilityError::LeadingCoefficient(self.a2));
        }
        if !(self.delay > 0.0) {
            return Err(StabilityError::NonPositiveDelay(self.delay));
        }
        Ok(())
    }

    pub fn characteristic(&self, s: Complex64) -> Complex64 {
        let e = (-s * self.delay).exp();
        s * s + s * self.a1 + self.a0 + (s * self.b1 + self.b0) * e
    }

    fn derivative(&self, s: Complex64) -> Complex64 {
        let e = (-s * self.delay).exp();
        s * 2.0 + self.a1 + e * self.b1 - (s * self.b1 + self.b0) * e * self.delay
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    pub order: usize,
    /// Sorted by real part, descending.
    pub roots: Vec<Complex64>,
    pub residuals: Vec<f64>,
}

impl SpectrumResult {
    pub fn rightmost(&self) -> Complex64 {
        self.roots[0]
    }
}

/// Chebyshev differentiation matrix on `cos(jπ/N)`, `j = 0..N`.
fn cheb_matrix(n: usize) -> (Vec<f64>, DMatrix<f64>) {
    let x: Vec<f64> = (0..=n).map(|j| libm::cos(PI * j as f64 / n as f64)).collect();
    let c = |i: usize| {
        let base = if i == 0 || i == n { 2.0 } else { 1.0 };
        if i.is_multiple_of(2) { base } else { -base }
    };
    let mut d = DMatrix::<f64>::zeros(n + 1, n + 1);
    for i in 0..=n {
        for j in 0..=n {
            if i != j {
                d[(i, j)] = c(i) / c(j) / (x[i] - x[j]);
            }
        }
        let row: f64 = (0..=n).filter(|&j| j != i).map(|j| d[(i, j)]).sum();
        d[(i, i)] = -row;
    }
    (x, d)
}

/// Collocated generator of the delay system written in first-order form
/// `x' = A₀x + A₁x(t - τ)`, `x = [q, q']`.
fn generator(dde: &ScalarDde, n: usize) -> DMatrix<f64> {
    let (_, d) = cheb_matrix(n);
    let scale = 2.0 / dde.delay;
    let m = 2 * (n + 1);
    let mut g = DMatrix::<f64>::zeros(m, m);
    // node 0 is θ = 0: the ODE itself
    g[(0, 1)] = 1.0;
    g[(1, 0)] = -dde.a0;
    g[(1, 1)] = -dde.a1;
    g[(1, 2 * n)] = -dde.b0;
    g[(1, 2 * n + 1)] = -dde.b1;
    for i in 1..=n {
        for j in 0..=n {
            let v = scale * d[(i, j)];
            g[(2 * i, 2 * j)] = v;
            g[(2 * i + 1, 2 * j + 1)] = v;
        }
    }
    g
}

fn polish(dde: &ScalarDde, start: Complex64) -> Option<(Complex64, f64)> {
    let mut s = start;
    for _ in 0..60 {
        let f = dde.characteristic(s);
        let df = dde.derivative(s);
        if df.norm() == 0.0 || !f.re.is_finite() || !f.im.is_finite() {
            return None;
        }
        let step = f / df;
        s -= step;
        if step.norm() <= 1e-15 * (1.0 + s.norm()) {
            break;
        }
    }
    let r = dde.characteristic(s).norm();
    r.is_finite().then_some((s, r))
}

/// Approximate characteristic roots at collocation order `n`.
///
/// Every generator eigenvalue is Newton-polished on `d(s)`; the ones that land
/// on a root are kept, without duplicates.
pub fn characteristic_roots(dde: &ScalarDde, n: usize) -> Result<SpectrumResult, StabilityError> {
    if n < MIN_ORDER {
        return Err(StabilityError::OrderTooLow(n));
    }
    dde.validate()?;
    let eig = generator(dde, n).complex_eigenvalues();
    let mut seeds: Vec<Complex64> = eig.iter().copied().collect();
    seeds.sort_by(|a, b| b.re.total_cmp(&a.re));

    let mut found: Vec<(Complex64, f64)> = Vec::new();
    for seed in seeds {
        let Some((s, r)) = polish(dde, seed) else { continue };
        if r >= 1e-6 * (1.0 + s.norm_sqr()) {
            continue;
        }
        if found.iter().any(|(q, _)| (q - s).norm() < 1e-7 * (1.0 + s.norm())) {
            continue;
        }
        found.push((s, r));
    }
    found.sort_by(|a, b| b.0.re.total_cmp(&a.0.re).then(b.0.im.total_cmp(&a.0.im)));
    found.truncate(n);

    match found.first() {
        Some(&(_, r)) if r < POLISH_TOLERANCE => {}
        Some(&(_, r)) => return Err(StabilityError::PolishFailed { order: n, residual: r }),
        None => return Err(StabilityError::PolishFailed { order: n, residual: f64::INFINITY }),
    }
    let (roots, residuals) = found.into_iter().unzip();
    Ok(SpectrumResult { order: n, roots, residuals })
}

/// Starts at the default order and doubles until the rightmost root moves by
/// less than [`ORDER_TOLERANCE`].
pub fn converged_spectrum(dde: &ScalarDde) -> Result<SpectrumResult, StabilityError> {
    let mut n = DEFAULT_ORDER;
    let mut prev = characteristic_roots(dde, n)?;
    loop {
        let next = characteristic_roots(dde, 2 * n);
        match next {
            Ok(next) => {
                let change = (next.rightmost() - prev.rightmost()).norm();
                if change < ORDER_TOLERANCE {
                    return Ok(prev);
                }
                if 2 * n >= MAX_ORDER {
                    return Err(StabilityError::OrderNotConverged { order: 2 * n, change });
                }
                prev = next;
            }
            Err(e) if 2 * n >= MAX_ORDER => return Err(e),
            Err(_) => {}
        }
        n *= 2;
    }
}

pub fn rightmost_real_part(dde: &ScalarDde) -> Result<f64, StabilityError> {
    converged_spectrum(dde).map(|s| s.rightmost().re)
}

/// Smallest delay in `[lo, hi]` where the rightmost root reaches the
/// imaginary axis, by bisection to 1e-4 s.
pub fn critical_delay(template: &ScalarDde, lo: f64, hi: f64) -> Result<f64, StabilityError> {
    let f = |t: f64| rightmost_real_part(&template.with_delay(t));
    let (mut a, mut b) = (lo, hi);
    let fa = f(a)?;
    let fb = f(b)?;
    if fa.signum() == fb.signum() {
        return Err(StabilityError::NoSignChange { lo, hi });
    }
    while b - a > BISECTION_TOLERANCE {
        let m = 0.5 * (a + b);
        if f(m)?.signum() == fa.signum() {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Analytic crossing `(ω_c, τ_c)`: magnitude match of the delayed and
/// undelayed parts on `s = jω`, then the phase condition on the principal
/// branch.
pub fn crossing_oracle(template: &ScalarDde) -> Result<(f64, f64), StabilityError> {
    let ScalarDde { a1, a0, b1, b0, .. } = *template;
    // ω⁴ + pω² + q = 0
    let p = a1 * a1 - b1 * b1 - 2.0 * a0;
    let q = a0 * a0 - b0 * b0;
    let disc = p * p - 4.0 * q;
    if disc < 0.0 {
        return Err(StabilityError::NoCrossing);
    }
    let u = (-p + libm::sqrt(disc)) / 2.0;
    if !(u > 0.0) {
        return Err(StabilityError::NoCrossing);
    }
    let w = libm::sqrt(u);
    let delayed = Complex64::new(b0, b1 * w);
    let plain = Complex64::new(a0 - w * w, a1 * w);
    let mut phase = PI + delayed.arg() - plain.arg();
    while phase <= 0.0 {
        phase += 2.0 * PI;
    }
    while phase > 2.0 * PI {
        phase -= 2.0 * PI;
    }
    Ok((w, phase / w))
}
