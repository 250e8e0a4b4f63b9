//! Rational transfer functions, discretization and difference-equation evaluation.
//!
//! Polynomials are stored in **descending** powers of `s` (or `z`):
//! `[c_n, c_{n-1}, ..., c_0]` is `c_n x^n + ... + c_0`.
//!
//! Discrete transfer functions are always kept monic in the denominator, so the
//! difference equation reads
//! `y[n] = b_0 u[n] + ... + b_k u[n-k] - a_1 y[n-1] - ... - a_k y[n-k]`.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

use crate::poly;

/// Time domain of a transfer function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Continuous,
    /// Discrete with sample period in seconds.
    Discrete { period: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum LtiError {
    /// Denominator is empty or its leading coefficient is zero.
    ZeroDenominator,
    /// Numerator degree exceeds denominator degree.
    Improper { num_degree: usize, den_degree: usize },
    NonFiniteCoefficient,
    ExpectedContinuous,
    ExpectedDiscrete,
    InvalidPeriod(f64),
    /// Only first-order `k/(s + a)` with `a != 0` has a closed-form ZOH here.
    UnsupportedOrder,
    /// Evaluation point is a root of the denominator.
    EvaluationAtPole,
    DimensionMismatch { expected: usize, found: usize },
}

impl fmt::Display for LtiError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LtiError::ZeroDenominator => write!(f, "denominator leading coefficient is zero"),
            LtiError::Improper { num_degree, den_degree } => write!(
                f,
                "improper transfer function: numerator degree {num_degree} > denominator degree {den_degree}"
            ),
            LtiError::NonFiniteCoefficient => write!(f, "coefficient is NaN or infinite"),
            LtiError::ExpectedContinuous => write!(f, "expected a continuous-time transfer function"),
            LtiError::ExpectedDiscrete => write!(f, "expected a discrete-time transfer function"),
            LtiError::InvalidPeriod(t) => write!(f, "sample period must be positive, got {t}"),
            LtiError::UnsupportedOrder => {
                write!(f, "zero-order hold supports only k/(s + a) with a != 0")
            }
            LtiError::EvaluationAtPole => write!(f, "evaluation at a pole"),
            LtiError::DimensionMismatch { expected, found } => {
                write!(f, "state order {found} does not match transfer function order {expected}")
            }
        }
    }
}

impl core::error::Error for LtiError {}

/// A SISO rational transfer function `num(x) / den(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalTf {
    num: Vec<f64>,
    den: Vec<f64>,
    domain: Domain,
}

impl RationalTf {
    pub fn continuous(num: &[f64], den: &[f64]) -> Result<Self, LtiError> {
        Self::build(num, den, Domain::Continuous)
    }

    /// Builds a discrete transfer function, normalized so `den[0] == 1`.
    pub fn discrete(num: &[f64], den: &[f64], period: f64) -> Result<Self, LtiError> {
        check_period(period)?;
        Self::build(num, den, Domain::Discrete { period })
    }

    /// Static gain in the continuous domain.
    pub fn gain(k: f64) -> Self {
        RationalTf { num: vec![k], den: vec![1.0], domain: Domain::Continuous }
    }

    pub fn unity() -> Self {
        Self::gain(1.0)
    }

    fn build(num: &[f64], den: &[f64], domain: Domain) -> Result<Self, LtiError> {
        if num.iter().chain(den).any(|c| !c.is_finite()) {
            return Err(LtiError::NonFiniteCoefficient);
        }
        let den = poly::trim(den);
        if den.is_empty() || den[0] == 0.0 {
            return Err(LtiError::ZeroDenominator);
        }
        let mut num = poly::trim(num);
        if num.is_empty() {
            num.push(0.0);
        }
        if num.len() > den.len() {
            return Err(LtiError::Improper { num_degree: num.len() - 1, den_degree: den.len() - 1 });
        }
        let mut tf = RationalTf { num, den, domain };
        if matches!(domain, Domain::Discrete { .. }) {
            tf.normalize();
        }
        Ok(tf)
    }

    fn normalize(&mut self) {
        let lead = self.den[0];
        if lead != 1.0 {
            self.num.iter_mut().for_each(|c| *c /= lead);
            self.den.iter_mut().for_each(|c| *c /= lead);
        }
    }

    pub fn num(&self) -> &[f64] {
        &self.num
    }

    pub fn den(&self) -> &[f64] {
        &self.den
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn period(&self) -> Option<f64> {
        match self.domain {
            Domain::Discrete { period } => Some(period),
            Domain::Continuous => None,
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self.domain, Domain::Discrete { .. })
    }

    /// Denominator degree.
    pub fn order(&self) -> usize {
        self.den.len() - 1
    }

    /// Numerator coefficients left-padded with zeros to the denominator length.
    pub fn num_padded(&self) -> Vec<f64> {
        poly::pad_front(&self.num, self.den.len())
    }

    pub fn eval(&self, point: Complex64) -> Result<Complex64, LtiError> {
        let d = poly::eval_complex(&self.den, point);
        let scale: f64 = {
            let r = point.norm();
            let mut acc = 0.0;
            let mut p = 1.0;
            for c in self.den.iter().rev() {
                acc += c.abs() * p;
                p *= r;
            }
            acc
        };
        if d.norm() <= 1e-12 * scale {
            return Err(LtiError::EvaluationAtPole);
        }
        Ok(poly::eval_complex(&self.num, point) / d)
    }

    pub fn eval_real(&self, point: f64) -> Result<f64, LtiError> {
        self.eval(Complex64::new(point, 0.0)).map(|c| c.re)
    }

    /// Value at the zero-frequency point (`s = 0` or `z = 1`).
    pub fn dc_gain(&self) -> Result<f64, LtiError> {
        match self.domain {
            Domain::Continuous => self.eval_real(0.0),
            Domain::Discrete { .. } => self.eval_real(1.0),
        }
    }

    /// Series connection. Both operands must share the same domain.
    pub fn series(&self, other: &RationalTf) -> Result<RationalTf, LtiError> {
        let num = poly::mul(&self.num, &other.num);
        let den = poly::mul(&self.den, &other.den);
        Self::same_domain(self, other)?;
        Self::build(&num, &den, self.domain)
    }

    /// `1 - self`.
    pub fn one_minus(&self) -> RationalTf {
        let num = poly::sub(&self.den, &self.num);
        // den unchanged, so validity holds by construction
        let mut num = poly::trim(&num);
        if num.is_empty() {
            num.push(0.0);
        }
        RationalTf { num, den: self.den.clone(), domain: self.domain }
    }

    fn same_domain(a: &RationalTf, b: &RationalTf) -> Result<(), LtiError> {
        match (a.domain, b.domain) {
            (Domain::Continuous, Domain::Continuous) => Ok(()),
            (Domain::Discrete { .. }, Domain::Discrete { .. }) => Ok(()),
            (Domain::Continuous, _) => Err(LtiError::ExpectedContinuous),
            _ => Err(LtiError::ExpectedDiscrete),
        }
    }

    fn require_continuous(&self) -> Result<(), LtiError> {
        match self.domain {
            Domain::Continuous => Ok(()),
            Domain::Discrete { .. } => Err(LtiError::ExpectedContinuous),
        }
    }

    /// Forward-Euler discretization, `s -> (z - 1)/T`.
    pub fn discretize_forward_euler(&self, period: f64) -> Result<RationalTf, LtiError> {
        self.require_continuous()?;
        check_period(period)?;
        let n = self.order();
        let z_minus_1 = [1.0, -1.0];
        // c(s) T^n = sum_k c_k (z - 1)^k T^(n - k)
        let map = |p: &[f64]| -> Vec<f64> {
            let deg = p.len() - 1;
            let mut out = vec![0.0; n + 1];
            for (idx, &c) in p.iter().enumerate() {
                let k = deg - idx;
                let term = poly::scale(&poly::pow(&z_minus_1, k), c * libm::pow(period, (n - k) as f64));
                out = poly::add(&out, &term);
            }
            out
        };
        Self::discrete(&map(&self.num), &map(&self.den), period)
    }

    /// Exact zero-order-hold discretization of `k/(s + a)`:
    /// `(k/a)(1 - e^{-aT}) / (z - e^{-aT})`.
    pub fn discretize_zoh(&self, period: f64) -> Result<RationalTf, LtiError> {
        self.require_continuous()?;
        check_period(period)?;
        if self.den.len() != 2 || self.num.len() != 1 {
            return Err(LtiError::UnsupportedOrder);
        }
        let k = self.num[0] / self.den[0];
        let a = self.den[1] / self.den[0];
        if a == 0.0 {
            return Err(LtiError::UnsupportedOrder);
        }
        let pole = libm::exp(-a * period);
        let gain = k / a * (1.0 - pole);
        Self::discrete(&[gain], &[1.0, -pole], period)
    }

    /// Bilinear (Tustin) transform, `s -> (2/T)(z - 1)/(z + 1)`.
    pub fn bilinear(&self, period: f64) -> Result<RationalTf, LtiError> {
        self.require_continuous()?;
        check_period(period)?;
        let n = self.order();
        let w = 2.0 / period;
        let map = |p: &[f64]| -> Vec<f64> {
            let deg = p.len() - 1;
            let mut out = vec![0.0; n + 1];
            for (idx, &c) in p.iter().enumerate() {
                let k = deg - idx;
                let term = poly::mul(&poly::pow(&[1.0, -1.0], k), &poly::pow(&[1.0, 1.0], n - k));
                out = poly::add(&out, &poly::scale(&term, c * libm::pow(w, k as f64)));
            }
            out
        };
        Self::discrete(&map(&self.num), &map(&self.den), period)
    }

    /// Advances `state` by one sample with input `u` and returns `y[n]`.
    pub fn step(&self, state: &mut DifferenceEqState, u: f64) -> Result<f64, LtiError> {
        if !self.is_discrete() {
            return Err(LtiError::ExpectedDiscrete);
        }
        if state.order() != self.order() {
            return Err(LtiError::DimensionMismatch { expected: self.order(), found: state.order() });
        }
        let b = self.num_padded();
        Ok(state.advance(&b, &self.den, u))
    }
}

fn check_period(period: f64) -> Result<(), LtiError> {
    if period > 0.0 && period.is_finite() {
        Ok(())
    } else {
        Err(LtiError::InvalidPeriod(period))
    }
}

/// Input and output history of a direct-form difference equation.
///
/// `x[0]` holds `u[n-1]`, `x[1]` holds `u[n-2]`, and so on; same for `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceEqState {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl DifferenceEqState {
    pub fn zeroed(order: usize) -> Self {
        DifferenceEqState { x: vec![0.0; order], y: vec![0.0; order] }
    }

    pub fn for_tf(tf: &RationalTf) -> Self {
        Self::zeroed(tf.order())
    }

    pub fn order(&self) -> usize {
        self.x.len()
    }

    pub fn inputs(&self) -> &[f64] {
        &self.x
    }

    pub fn outputs(&self) -> &[f64] {
        &self.y
    }

    /// Output for input `u` given monic `a` and aligned `b`, without advancing.
    pub(crate) fn peek(&self, b: &[f64], a: &[f64], u: f64) -> f64 {
        let mut acc = b[0] * u;
        for k in 1..b.len() {
            acc += b[k] * self.x[k - 1] - a[k] * self.y[k - 1];
        }
        acc
    }

    pub(crate) fn push(&mut self, u: f64, y: f64) {
        if self.x.is_empty() {
            return;
        }
        self.x.rotate_right(1);
        self.y.rotate_right(1);
        self.x[0] = u;
        self.y[0] = y;
    }

    pub(crate) fn advance(&mut self, b: &[f64], a: &[f64], u: f64) -> f64 {
        let y = self.peek(b, a, u);
        self.push(u, y);
        y
    }
}

/// Unit-step response of a continuous transfer function sampled every `dt`
/// for `samples` points starting at `t = 0`.
///
/// Uses the controllable canonical realization integrated with classical RK4;
/// the input is constant so RK4 is exact up to its truncation order.
pub fn step_response(tf: &RationalTf, dt: f64, samples: usize) -> Result<Vec<f64>, LtiError> {
    tf.require_continuous()?;
    let n = tf.order();
    let lead = tf.den[0];
    let a: Vec<f64> = tf.den.iter().map(|c| c / lead).collect();
    let b: Vec<f64> = tf.num_padded().iter().map(|c| c / lead).collect();
    let d = b[0];
    if n == 0 {
        return Ok(vec![d; samples]);
    }
    // strictly proper remainder: c_k = b_k - d a_k, k = 1..n
    let c: Vec<f64> = (1..=n).map(|k| b[k] - d * a[k]).collect();
    // x' = A x + e_n u with x = [x_1 .. x_n], x_i' = x_{i+1}, x_n' = u - sum a_k x_{n+1-k}
    // y = sum_k c_k x_{n+1-k} + d u
    let deriv = |x: &[f64], out: &mut [f64]| {
        out[..n - 1].copy_from_slice(&x[1..]);
        let mut last = 1.0;
        for k in 1..=n {
            last -= a[k] * x[n - k];
        }
        out[n - 1] = last;
    };
    let output = |x: &[f64]| -> f64 {
        let mut y = d;
        for k in 1..=n {
            y += c[k - 1] * x[n - k];
        }
        y
    };
    let mut x = vec![0.0; n];
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    let mut out = Vec::with_capacity(samples);
    for _ in 0..samples {
        out.push(output(&x));
        deriv(&x, &mut k1);
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * dt * k1[i];
        }
        deriv(&tmp, &mut k2);
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * dt * k2[i];
        }
        deriv(&tmp, &mut k3);
        for i in 0..n {
            tmp[i] = x[i] + dt * k3[i];
        }
        deriv(&tmp, &mut k4);
        for i in 0..n {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    Ok(out)
}
