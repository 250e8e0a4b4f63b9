//! Digital Smith predictor built from a delay approximant and a first-order
//! nominal plant.
//!
//! The compensator is `G_sp(z) = (1 - G_dm(z)) Ĝ(z)` written as
//!
//! ```text
//!            f z^-1 + g z^-3
//! G_sp(z) = -------------------------------
//!           1 + h z^-1 + i z^-2 + j z^-3
//! ```
//!
//! where `G_dm(z)` is the bilinear image of a second-order all-pass delay
//! approximant. Because the approximant is all-pass, `1 - G_dm` has zeros at
//! `z = ±1`, so `g = -f` and the compensator has no DC gain.

use alloc::collections::VecDeque;
use core::fmt;

use crate::approx::{self, SeriesKind};
use crate::lti::{LtiError, RationalTf};

#[derive(Debug, Clone, PartialEq)]
pub enum PredictorError {
    /// Only DFR and Pade approximants are used for compensation.
    UnsupportedSeries(SeriesKind),
    NegativeDelay(f64),
    /// Nominal model must be a discrete strictly proper first-order system.
    UnsupportedNominal,
    Lti(LtiError),
}

impl fmt::Display for PredictorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PredictorError::UnsupportedSeries(k) => write!(f, "series {k} is not supported by the predictor"),
            PredictorError::NegativeDelay(t) => write!(f, "delay model must be non-negative, got {t}"),
            PredictorError::UnsupportedNominal => {
                write!(f, "nominal model must be discrete b/(z - a)")
            }
            PredictorError::Lti(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for PredictorError {}

impl From<LtiError> for PredictorError {
    fn from(e: LtiError) -> Self {
        PredictorError::Lti(e)
    }
}

/// Coefficients of the third-order compensator recursion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AspCoefficients {
    pub f: f64,
    pub g: f64,
    pub h: f64,
    pub i: f64,
    pub j: f64,
    pub series: SeriesKind,
    /// Delay model in seconds.
    pub t_m: f64,
}

impl AspCoefficients {
    /// Denominator `[1, h, i, j]` in descending powers of `z`.
    pub fn denominator(&self) -> [f64; 4] {
        [1.0, self.h, self.i, self.j]
    }

    /// Numerator `[0, f, 0, g]` in descending powers of `z`.
    pub fn numerator(&self) -> [f64; 4] {
        [0.0, self.f, 0.0, self.g]
    }
}

/// The nominal model used by the predictor, `0.0831/(z - 0.92)` at 20 ms.
pub fn nominal_model() -> RationalTf {
    RationalTf::discrete(&[0.0831], &[1.0, -0.92], 0.02).expect("valid nominal model")
}

fn check_nominal(nominal: &RationalTf) -> Result<(), PredictorError> {
    if nominal.is_discrete() && nominal.order() == 1 && nominal.num().len() == 1 {
        Ok(())
    } else {
        Err(PredictorError::UnsupportedNominal)
    }
}

/// Expands `(1 - bilinear(approximant(series, t_m), period)) * nominal` into
/// the monic third-order form.
pub fn asp_coefficients(
    series: SeriesKind,
    t_m: f64,
    nominal: &RationalTf,
    period: f64,
) -> Result<AspCoefficients, PredictorError> {
    if !matches!(series, SeriesKind::Dfr | SeriesKind::Pade) {
        return Err(PredictorError::UnsupportedSeries(series));
    }
    if !(t_m >= 0.0) {
        return Err(PredictorError::NegativeDelay(t_m));
    }
    check_nominal(nominal)?;
    let approx = approx::approximant(series, t_m).map_err(|_| PredictorError::NegativeDelay(t_m))?;
    let delay_model = approx.bilinear(period)?;
    let sp = delay_model.one_minus().series(nominal)?;

    // at t_m = 0 the difference vanishes exactly and sp is 0/(z - a)
    let den = pad_to(sp.den(), 4);
    let num = pad_to(&sp.num_padded(), 4);
    debug_assert!(num[0] == 0.0 && libm::fabs(num[2]) < 1e-12);
    Ok(AspCoefficients { f: num[1], g: num[3], h: den[1], i: den[2], j: den[3], series, t_m })
}

/// Classical (fixed-delay) predictor coefficients. Same formula, computed once.
pub fn csp_coefficients(
    fixed_t_m: f64,
    series: SeriesKind,
    nominal: &RationalTf,
    period: f64,
) -> Result<AspCoefficients, PredictorError> {
    asp_coefficients(series, fixed_t_m, nominal, period)
}

/// Pads a descending polynomial on the *right* (lower powers), which is what
/// multiplying by `z^-k` and reading off negative powers amounts to.
fn pad_to(p: &[f64], len: usize) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (k, c) in p.iter().take(len).enumerate() {
        out[k] = *c;
    }
    out
}

/// Second comparator: `e2 = e1 - y`.
pub fn residual(e1: f64, y_asp: f64) -> f64 {
    e1 - y_asp
}

/// Anything that can sit in the predictor slot of the loop.
///
/// The output for sample `n` depends only on inputs up to `n - 1`, so the loop
/// can read it before computing the drive and push the drive afterwards.
pub trait Compensator {
    fn output(&self) -> f64;
    fn push(&mut self, x: f64);

    fn step(&mut self, x: f64) -> f64 {
        let y = self.output();
        self.push(x);
        y
    }
}

/// Recursion state of the (adaptive) digital Smith predictor.
#[derive(Debug, Clone, PartialEq)]
pub struct AspState {
    coefficients: AspCoefficients,
    nominal: RationalTf,
    period: f64,
    /// `x[n-1], x[n-2], x[n-3]`
    x: [f64; 3],
    /// `y[n-1], y[n-2], y[n-3]`
    y: [f64; 3],
}

impl AspState {
    pub fn new(
        series: SeriesKind,
        t_m: f64,
        nominal: RationalTf,
        period: f64,
    ) -> Result<Self, PredictorError> {
        let coefficients = asp_coefficients(series, t_m, &nominal, period)?;
        Ok(AspState { coefficients, nominal, period, x: [0.0; 3], y: [0.0; 3] })
    }

    pub fn coefficients(&self) -> &AspCoefficients {
        &self.coefficients
    }

    pub fn inputs(&self) -> [f64; 3] {
        self.x
    }

    pub fn outputs(&self) -> [f64; 3] {
        self.y
    }

    /// Recomputes coefficients for a new delay model (seconds); histories are kept.
    pub fn retune(&mut self, t_m: f64) -> Result<(), PredictorError> {
        if t_m == self.coefficients.t_m {
            return Ok(());
        }
        self.coefficients = asp_coefficients(self.coefficients.series, t_m, &self.nominal, self.period)?;
        Ok(())
    }

    /// Retune from an estimator value in milliseconds.
    pub fn retune_ms(&mut self, t_m_ms: u64) -> Result<(), PredictorError> {
        self.retune(t_m_ms as f64 / 1000.0)
    }

    /// `y[n]` and history shift with `x_n` as the next `x[n-1]`.
    pub fn asp_step(&mut self, x_n: f64) -> f64 {
        Compensator::step(self, x_n)
    }
}

impl Compensator for AspState {
    fn output(&self) -> f64 {
        let c = &self.coefficients;
        c.f * self.x[0] + c.g * self.x[2] - c.h * self.y[0] - c.i * self.y[1] - c.j * self.y[2]
    }

    fn push(&mut self, x: f64) {
        let y = self.output();
        self.x = [x, self.x[0], self.x[1]];
        self.y = [y, self.y[0], self.y[1]];
    }
}

/// No compensation: output is always zero.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NullCompensator;

impl Compensator for NullCompensator {
    fn output(&self) -> f64 {
        0.0
    }

    fn push(&mut self, _x: f64) {}
}

/// Ideal predictor with an exact integer-sample delay:
/// `y[n] = ŷ[n] - ŷ[n - k]` where `ŷ` is the nominal model output.
///
/// Used to check the Smith structure itself, free of approximation error.
#[derive(Debug, Clone)]
pub struct ExactDelayPredictor {
    b: f64,
    a: f64,
    /// `ŷ[n]`, already a function of `x[n-1]`
    model_now: f64,
    /// `ŷ[n-1] .. ŷ[n-k]`, most recent first
    past: VecDeque<f64>,
    delay: usize,
}

impl ExactDelayPredictor {
    pub fn new(nominal: &RationalTf, delay_samples: usize) -> Result<Self, PredictorError> {
        check_nominal(nominal)?;
        let mut past = VecDeque::with_capacity(delay_samples + 1);
        past.extend(core::iter::repeat_n(0.0, delay_samples));
        Ok(ExactDelayPredictor {
            b: nominal.num()[0],
            a: -nominal.den()[1],
            model_now: 0.0,
            past,
            delay: delay_samples,
        })
    }
}

impl Compensator for ExactDelayPredictor {
    fn output(&self) -> f64 {
        let delayed = if self.delay == 0 { self.model_now } else { self.past[self.delay - 1] };
        self.model_now - delayed
    }

    fn push(&mut self, x: f64) {
        let next = self.a * self.model_now + self.b * x;
        if self.delay > 0 {
            self.past.push_front(self.model_now);
            self.past.truncate(self.delay);
        }
        self.model_now = next;
    }
}
