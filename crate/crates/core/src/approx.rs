//! Second-order rational approximations of the pure delay `e^{-sτ}` and their
//! step-response ISE scores.

use core::fmt;

use crate::lti::{self, RationalTf};

/// The six tabulated second-order delay approximations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SeriesKind {
    Pade,
    Marshall,
    Product,
    Laguerre,
    Paynter,
    Dfr,
}

impl SeriesKind {
    pub const ALL: [SeriesKind; 6] = [
        SeriesKind::Pade,
        SeriesKind::Marshall,
        SeriesKind::Product,
        SeriesKind::Laguerre,
        SeriesKind::Paynter,
        SeriesKind::Dfr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SeriesKind::Pade => "Pade",
            SeriesKind::Marshall => "Marshall",
            SeriesKind::Product => "Product",
            SeriesKind::Laguerre => "Laguerre",
            SeriesKind::Paynter => "Paynter",
            SeriesKind::Dfr => "DFR",
        }
    }

    /// `(num, den)` coefficients of `1, sτ, s²τ²`, ascending.
    fn coefficients(self) -> ([f64; 3], [f64; 3]) {
        match self {
            SeriesKind::Pade => ([1.0, -0.5, 0.0833], [1.0, 0.5, 0.0833]),
            SeriesKind::Marshall => ([1.0, 0.0, -0.0625], [1.0, 0.0, 0.0625]),
            SeriesKind::Product => ([1.0, -0.5, 0.125], [1.0, 0.5, 0.125]),
            SeriesKind::Laguerre => ([1.0, -0.5, 0.0625], [1.0, 0.5, 0.0625]),
            SeriesKind::Paynter => ([1.0, 0.0, 0.0], [1.0, 1.0, 0.405]),
            SeriesKind::Dfr => ([1.0, -0.49, 0.0954], [1.0, 0.49, 0.0954]),
        }
    }

    /// True when the numerator is the denominator evaluated at `-s`, which
    /// gives unit magnitude on the imaginary axis.
    ///
    /// Marshall flips the sign of the even `s²` term instead, so it is not
    /// all-pass.
    pub fn is_all_pass(self) -> bool {
        let (num, den) = self.coefficients();
        num[0] == den[0] && num[1] == -den[1] && num[2] == den[2]
    }
}

impl fmt::Display for SeriesKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl core::str::FromStr for SeriesKind {
    type Err = ApproxError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SeriesKind::ALL
            .iter()
            .copied()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or(ApproxError::UnknownSeries)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ApproxError {
    NegativeDelay(f64),
    /// Horizon shorter than ten delays.
    HorizonTooShort { horizon: f64, delay: f64 },
    /// Integration step coarser than a hundredth of the delay.
    StepTooCoarse { dt: f64, delay: f64 },
    UnknownSeries,
}

impl fmt::Display for ApproxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ApproxError::NegativeDelay(t) => write!(f, "delay must be non-negative, got {t}"),
            ApproxError::HorizonTooShort { horizon, delay } => {
                write!(f, "horizon {horizon} s is shorter than 10 x delay {delay} s")
            }
            ApproxError::StepTooCoarse { dt, delay } => {
                write!(f, "step {dt} s is coarser than delay/100 for delay {delay} s")
            }
            ApproxError::UnknownSeries => write!(f, "unknown approximation series"),
        }
    }
}

impl core::error::Error for ApproxError {}

/// Continuous-time approximant of `e^{-sτ}`. Zero delay gives unity.
pub fn approximant(kind: SeriesKind, delay: f64) -> Result<RationalTf, ApproxError> {
    if !(delay >= 0.0) {
        return Err(ApproxError::NegativeDelay(delay));
    }
    if delay == 0.0 {
        return Ok(RationalTf::unity());
    }
    let (n, d) = kind.coefficients();
    let t2 = delay * delay;
    let num = [n[2] * t2, n[1] * delay, n[0]];
    let den = [d[2] * t2, d[1] * delay, d[0]];
    // coefficients are finite and den[0] != 0 for every kind when delay > 0
    Ok(RationalTf::continuous(&num, &den).expect("tabulated approximant is proper"))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxScore {
    pub kind: SeriesKind,
    pub delay: f64,
    pub ise: f64,
    pub horizon: f64,
}

/// ISE between the ideal delayed unit step and the approximant's step
/// response, left Riemann sum on a `dt` grid over `[0, horizon)`.
pub fn ise_error(kind: SeriesKind, delay: f64, horizon: f64, dt: f64) -> Result<ApproxScore, ApproxError> {
    if !(delay >= 0.0) {
        return Err(ApproxError::NegativeDelay(delay));
    }
    if delay == 0.0 {
        return Ok(ApproxScore { kind, delay, ise: 0.0, horizon });
    }
    if !(horizon >= 10.0 * delay * (1.0 - 1e-12)) {
        return Err(ApproxError::HorizonTooShort { horizon, delay });
    }
    if !(dt > 0.0 && dt <= delay / 100.0 * (1.0 + 1e-12)) {
        return Err(ApproxError::StepTooCoarse { dt, delay });
    }
    let tf = approximant(kind, delay)?;
    let samples = libm::round(horizon / dt) as usize;
    let response = lti::step_response(&tf, dt, samples).expect("continuous approximant");
    // integer comparison avoids k*dt rounding just below the delay
    let delay_index = libm::round(delay / dt) as usize;
    let ise = response
        .iter()
        .enumerate()
        .map(|(k, &y)| {
            let ideal = if k >= delay_index { 1.0 } else { 0.0 };
            let e = ideal - y;
            dt * e * e
        })
        .sum();
    Ok(ApproxScore { kind, delay, ise, horizon })
}

/// ISE with the default procedure: horizon `10τ`, step `τ/1000`.
pub fn ise_default(kind: SeriesKind, delay: f64) -> Result<ApproxScore, ApproxError> {
    ise_error(kind, delay, 10.0 * delay, delay / 1000.0)
}
