//! Closed-loop harness: controller, network relay and plant node on one
//! millisecond clock, plus run metrics.
//!
//! Each controller sample polls feedback, classifies it, updates the delay
//! estimate, retunes the predictor, computes `e1 = r - y_d`, `e2 = e1 - y_asp`,
//! runs the PI step and sends the drive. The plant node applies each drive on
//! arrival and immediately answers with the current speed, echoing the drive's
//! send stamp. The plant itself integrates at 1 ms.

use alloc::vec::Vec;
use core::fmt;

use crate::approx::SeriesKind;
use crate::control::{self, ControlError, PiConfig, PiState, DRIVE_MAX};
use crate::estimator::{EstimatorState, Feedback, Rule};
use crate::lti::RationalTf;
use crate::netsim::{ChannelConfig, DelayBounds, Network, TruePlant};
use crate::predictor::{self, AspState, Compensator, NullCompensator, PredictorError};

/// Controller period in milliseconds.
pub const PERIOD_MS: u64 = 20;
const PLANT_STEP_MS: u64 = 1;
/// Share of the metrics window excluded as transient.
pub const TRANSIENT_FRACTION: f64 = 0.4;
const STEADY_FRACTION: f64 = 0.1;
const OSCILLATION_CROSSINGS: usize = 6;
const OSCILLATION_AMPLITUDE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Plain PI loop.
    NoSp,
    /// Smith predictor with a fixed delay model.
    Csp,
    /// Smith predictor retuned from the online estimate.
    Asp,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::NoSp => "no-sp",
            Mode::Csp => "csp",
            Mode::Asp => "asp",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl core::str::FromStr for Mode {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "no-sp" | "nosp" | "none" => Ok(Mode::NoSp),
            "csp" => Ok(Mode::Csp),
            "asp" => Ok(Mode::Asp),
            _ => Err(ScenarioError::UnknownMode),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioError {
    NonPositiveDuration(f64),
    InvalidDelayBounds { lo: f64, hi: f64 },
    InvalidSplit { lo: f64, hi: f64 },
    MissingFixedDelay,
    NegativeInitialDelay(f64),
    EmptyProfile,
    /// Profile times must start at 0 and not decrease.
    InvalidProfile,
    UnknownMode,
    Control(ControlError),
    Predictor(PredictorError),
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioError::NonPositiveDuration(d) => write!(f, "duration must be positive, got {d}"),
            ScenarioError::InvalidDelayBounds { lo, hi } => {
                write!(f, "delay bounds must satisfy 0 <= lo <= hi, got [{lo}, {hi}]")
            }
            ScenarioError::InvalidSplit { lo, hi } => {
                write!(f, "forward split must satisfy 0 <= lo <= hi <= 1, got [{lo}, {hi}]")
            }
            ScenarioError::MissingFixedDelay => write!(f, "csp mode requires a fixed delay model"),
            ScenarioError::NegativeInitialDelay(t) => write!(f, "initial delay model must be non-negative, got {t}"),
            ScenarioError::EmptyProfile => write!(f, "reference profile is empty"),
            ScenarioError::InvalidProfile => {
                write!(f, "reference profile must start at 0 s with non-decreasing finite times")
            }
            ScenarioError::UnknownMode => write!(f, "mode must be one of no-sp, csp, asp"),
            ScenarioError::Control(e) => write!(f, "{e}"),
            ScenarioError::Predictor(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for ScenarioError {}

impl From<ControlError> for ScenarioError {
    fn from(e: ControlError) -> Self {
        ScenarioError::Control(e)
    }
}

impl From<PredictorError> for ScenarioError {
    fn from(e: PredictorError) -> Self {
        ScenarioError::Predictor(e)
    }
}

/// One closed-loop run.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub mode: Mode,
    pub series: SeriesKind,
    /// Delay model of the fixed predictor (s).
    pub fixed_t_m: Option<f64>,
    /// Round-trip delay bounds (s); each command draws uniformly from them.
    pub delay_lo: f64,
    pub delay_hi: f64,
    /// Forward share of each round trip, uniform in this range.
    pub forward_split: (f64, f64),
    /// `(time s, setpoint)`, piecewise constant.
    pub profile: Vec<(f64, f64)>,
    pub duration: f64,
    pub seed: u64,
    /// Delay model the adaptive predictor starts from (s).
    pub initial_t_m: f64,
    /// Keep the adaptive predictor at `initial_t_m`.
    pub pin_t_m: bool,
    pub pi: PiConfig,
    /// Round the drive to the 8-bit PWM code.
    pub quantize: bool,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            mode: Mode::Asp,
            series: SeriesKind::Dfr,
            fixed_t_m: None,
            delay_lo: 0.03,
            delay_hi: 0.13,
            forward_split: (0.3, 0.7),
            profile: default_profile(),
            duration: 20.0,
            seed: 1,
            initial_t_m: 0.0,
            pin_t_m: false,
            pi: PiConfig::default(),
            quantize: true,
        }
    }
}

/// Step up, step down to half, step back up.
pub fn default_profile() -> Vec<(f64, f64)> {
    alloc::vec![(0.0, 100.0), (4.0, 50.0), (8.0, 100.0)]
}

impl Scenario {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.duration > 0.0) || !self.duration.is_finite() {
            return Err(ScenarioError::NonPositiveDuration(self.duration));
        }
        if !(self.delay_lo >= 0.0 && self.delay_lo <= self.delay_hi && self.delay_hi.is_finite()) {
            return Err(ScenarioError::InvalidDelayBounds { lo: self.delay_lo, hi: self.delay_hi });
        }
        let (a, b) = self.forward_split;
        if !(0.0 <= a && a <= b && b <= 1.0) {
            return Err(ScenarioError::InvalidSplit { lo: a, hi: b });
        }
        if !(self.initial_t_m >= 0.0) {
            return Err(ScenarioError::NegativeInitialDelay(self.initial_t_m));
        }
        match (self.mode, self.fixed_t_m) {
            (Mode::Csp, None) => return Err(ScenarioError::MissingFixedDelay),
            (Mode::Csp, Some(t)) if !(t >= 0.0) => return Err(ScenarioError::NegativeInitialDelay(t)),
            _ => {}
        }
        let first = self.profile.first().ok_or(ScenarioError::EmptyProfile)?;
        if first.0 != 0.0 {
            return Err(ScenarioError::InvalidProfile);
        }
        let sorted = self.profile.windows(2).all(|w| w[0].0 <= w[1].0);
        if !sorted || self.profile.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
            return Err(ScenarioError::InvalidProfile);
        }
        self.pi.validate()?;
        Ok(())
    }

    pub fn reference_at(&self, t: f64) -> f64 {
        self.profile.iter().take_while(|(ts, _)| *ts <= t).last().map_or(0.0, |p| p.1)
    }

    fn delay_bounds_ms(&self) -> DelayBounds {
        let lo = libm::round(self.delay_lo * 1000.0) as u64;
        let hi = libm::round(self.delay_hi * 1000.0) as u64;
        DelayBounds { lo, hi }
    }
}

/// One controller sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub t: f64,
    pub r: f64,
    pub y: f64,
    pub y_d: f64,
    /// Round trip drawn for the command sent at this sample.
    pub td_ms: u64,
    /// Estimated delay.
    pub tm_ms: u64,
    pub rule: Rule,
    pub e1: f64,
    pub e2: f64,
    pub y_asp: f64,
    pub drive: f64,
    pub duty_pct: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimTrace {
    pub records: Vec<TraceRecord>,
}

impl SimTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

#[derive(Debug, Clone, Copy)]
struct DriveMsg {
    drive: f64,
    sent_ms: u64,
    back_ms: u64,
}

#[derive(Debug, Clone, Copy)]
struct EchoMsg {
    speed: f64,
    sent_ms: u64,
}

enum Slot {
    Null(NullCompensator),
    Smith(AspState),
}

impl Slot {
    fn compensator(&mut self) -> &mut dyn Compensator {
        match self {
            Slot::Null(c) => c,
            Slot::Smith(c) => c,
        }
    }
}

fn ms_to_s(ms: u64) -> f64 {
    ms as f64 / 1000.0
}

/// Runs one scenario to completion. Deterministic for a fixed scenario.
pub fn run_scenario(s: &Scenario) -> Result<SimTrace, ScenarioError> {
    s.validate()?;
    let nominal = predictor::nominal_model();
    let period = ms_to_s(PERIOD_MS);
    let mut slot = match s.mode {
        Mode::NoSp => Slot::Null(NullCompensator),
        Mode::Csp => {
            let t = s.fixed_t_m.ok_or(ScenarioError::MissingFixedDelay)?;
            Slot::Smith(AspState::new(s.series, t, nominal, period)?)
        }
        Mode::Asp => Slot::Smith(AspState::new(s.series, s.initial_t_m, nominal, period)?),
    };

    let bounds = s.delay_bounds_ms();
    let mut net: Network<DriveMsg, EchoMsg> = Network::new(ChannelConfig::new(bounds, bounds, s.seed));
    let mut est = EstimatorState::new(PERIOD_MS);
    let mut pi = PiState::default();
    let mut plant = TruePlant::new(ms_to_s(PLANT_STEP_MS));
    let mut applied = 0.0;
    let mut y_d = 0.0;
    let initial_tm_ms = libm::round(s.initial_t_m * 1000.0) as u64;

    let end_ms = libm::round(s.duration * 1000.0) as u64;
    let mut records = Vec::with_capacity((end_ms / PERIOD_MS + 1) as usize);
    let mut now = 0;
    while now < end_ms {
        if now % PERIOD_MS == 0 {
            let deliveries: Vec<Feedback> = net
                .poll_backward(now)
                .into_iter()
                .map(|m| Feedback { value: m.payload.speed, sent_ms: m.payload.sent_ms, received_ms: m.deliver_ms })
                .collect();
            let m = est.classify_and_measure(&deliveries, now);
            if let Some(fb) = m.accepted {
                y_d = fb.value;
            }
            // before the first receipt there is no estimate, only the start value
            let t_m = if est.estimate().is_ok() { m.t_m } else { initial_tm_ms };
            if let (Mode::Asp, false, Slot::Smith(asp)) = (s.mode, s.pin_t_m, &mut slot) {
                asp.retune_ms(t_m)?;
            }

            let t = ms_to_s(now);
            let r = s.reference_at(t);
            let comp = slot.compensator();
            let y_asp = comp.output();
            let e1 = r - y_d;
            let e2 = predictor::residual(e1, y_asp);
            let mut drive = control::pi_step(&s.pi, &mut pi, e2);
            if s.quantize {
                drive = control::quantize_drive(drive);
            }
            comp.push(drive);

            est.on_send(now).expect("clock is monotone");
            let (t1, t2) = net.draw_round_trip(bounds, s.forward_split);
            net.send_forward_after(DriveMsg { drive, sent_ms: now, back_ms: t2 }, now, t1);

            records.push(TraceRecord {
                t,
                r,
                y: plant.speed(),
                y_d,
                td_ms: t1 + t2,
                tm_ms: t_m,
                rule: m.rule,
                e1,
                e2,
                y_asp,
                drive,
                duty_pct: 100.0 * drive.clamp(0.0, DRIVE_MAX) / DRIVE_MAX,
            });
        }

        for msg in net.poll_forward(now) {
            applied = msg.payload.drive;
            let echo = EchoMsg { speed: plant.speed(), sent_ms: msg.payload.sent_ms };
            net.send_backward_after(echo, now, msg.payload.back_ms);
        }
        plant.plant_tick(applied);
        now += PLANT_STEP_MS;
    }
    Ok(SimTrace { records })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunMetrics {
    /// Over the post-transient window.
    pub max_duty: f64,
    pub min_duty: f64,
    /// Mean `|r - y|` over the last tenth, in percent of the setpoint.
    pub sse_pct: f64,
    pub oscillation: bool,
    /// Time after the last setpoint change until `|r - y|` stays within 5 %.
    pub settling_time: Option<f64>,
}

fn window(trace: &SimTrace, fraction_kept: f64) -> &[TraceRecord] {
    let n = trace.records.len();
    let kept = libm::ceil(n as f64 * fraction_kept) as usize;
    &trace.records[n - kept.min(n)..]
}

fn mean_abs_reference(recs: &[TraceRecord]) -> f64 {
    recs.iter().map(|r| r.r.abs()).sum::<f64>() / recs.len().max(1) as f64
}

/// Sustained oscillation: enough sign changes of the error and a large enough
/// swing relative to the setpoint.
pub fn is_oscillating(errors: &[f64], setpoint: f64) -> bool {
    let mut crossings = 0;
    let mut last_sign = 0.0;
    for &e in errors {
        if e != 0.0 {
            let sign = e.signum();
            if last_sign != 0.0 && sign != last_sign {
                crossings += 1;
            }
            last_sign = sign;
        }
    }
    let max = errors.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = errors.iter().copied().fold(f64::INFINITY, f64::min);
    crossings >= OSCILLATION_CROSSINGS && max - min > OSCILLATION_AMPLITUDE * setpoint.abs()
}

pub fn compute_metrics(trace: &SimTrace) -> RunMetrics {
    if trace.is_empty() {
        return RunMetrics { max_duty: 0.0, min_duty: 0.0, sse_pct: 0.0, oscillation: false, settling_time: None };
    }
    let post = window(trace, 1.0 - TRANSIENT_FRACTION);
    let max_duty = post.iter().map(|r| r.duty_pct).fold(f64::NEG_INFINITY, f64::max);
    let min_duty = post.iter().map(|r| r.duty_pct).fold(f64::INFINITY, f64::min);

    let tail = window(trace, STEADY_FRACTION);
    let ref_tail = mean_abs_reference(tail);
    let err_tail = tail.iter().map(|r| (r.r - r.y).abs()).sum::<f64>() / tail.len() as f64;
    let sse_pct = if ref_tail > 0.0 { 100.0 * err_tail / ref_tail } else { 0.0 };

    let osc_window = window(trace, TRANSIENT_FRACTION);
    let errors: Vec<f64> = osc_window.iter().map(|r| r.r - r.y).collect();
    let oscillation = is_oscillating(&errors, mean_abs_reference(osc_window));

    let recs = &trace.records;
    let last_change = (1..recs.len()).rev().find(|&k| recs[k].r != recs[k - 1].r).unwrap_or(0);
    let outside = |r: &TraceRecord| (r.r - r.y).abs() > 0.05 * r.r.abs();
    let settling_time = match recs[last_change..].iter().rposition(outside) {
        None => Some(0.0),
        Some(k) if last_change + k + 1 < recs.len() => Some(recs[last_change + k + 1].t - recs[last_change].t),
        Some(_) => None,
    };

    RunMetrics { max_duty, min_duty, sse_pct, oscillation, settling_time }
}

/// Sample-level loop on a matched discrete plant with integer-sample
/// delays, for checking the Smith structure. Returns the plant output per
/// sample.
///
/// The plant equals `nominal`; commands reach it `forward` samples late and
/// its output reaches the controller `backward` samples late.
pub fn matched_model_loop(
    nominal: &RationalTf,
    pi_cfg: &PiConfig,
    reference: &[f64],
    forward: usize,
    backward: usize,
    comp: &mut dyn Compensator,
) -> Result<Vec<f64>, PredictorError> {
    if !(nominal.is_discrete() && nominal.order() == 1 && nominal.num().len() == 1) {
        return Err(PredictorError::UnsupportedNominal);
    }
    let b = nominal.num()[0];
    let a = -nominal.den()[1];
    let mut pi = PiState::default();
    let mut y = 0.0;
    let mut outputs: Vec<f64> = Vec::with_capacity(reference.len());
    let mut commands: Vec<f64> = Vec::with_capacity(reference.len());
    for (n, &r) in reference.iter().enumerate() {
        outputs.push(y);
        let y_d = if n >= backward { outputs[n - backward] } else { 0.0 };
        let e2 = predictor::residual(r - y_d, comp.output());
        let x = control::pi_step(pi_cfg, &mut pi, e2);
        comp.push(x);
        commands.push(x);
        let u = if n >= forward { commands[n - forward] } else { 0.0 };
        y = a * y + b * u;
    }
    Ok(outputs)
}
