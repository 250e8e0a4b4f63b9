//! Discrete-event delay channel between the controller and the plant node.
//!
//! All timestamps are integer milliseconds on one shared clock. Each message
//! draws its own delay, so messages may be delivered out of send order.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::lti::RationalTf;

#[derive(Debug, Clone, PartialEq)]
pub enum NetError {
    InvalidBounds { lo: u64, hi: u64 },
    InvalidSplit { lo: f64, hi: f64 },
}

impl fmt::Display for NetError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NetError::InvalidBounds { lo, hi } => write!(f, "delay bounds must satisfy lo <= hi, got [{lo}, {hi}]"),
            NetError::InvalidSplit { lo, hi } => {
                write!(f, "forward split must satisfy 0 <= lo <= hi <= 1, got [{lo}, {hi}]")
            }
        }
    }
}

impl core::error::Error for NetError {}

/// Inclusive delay range in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DelayBounds {
    pub lo: u64,
    pub hi: u64,
}

impl DelayBounds {
    pub fn new(lo: u64, hi: u64) -> Result<Self, NetError> {
        if lo > hi {
            return Err(NetError::InvalidBounds { lo, hi });
        }
        Ok(DelayBounds { lo, hi })
    }

    pub fn constant(ms: u64) -> Self {
        DelayBounds { lo: ms, hi: ms }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Controller to plant.
    Forward,
    /// Sensor to controller.
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Distribution {
    #[default]
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    pub forward: DelayBounds,
    pub backward: DelayBounds,
    pub seed: u64,
    pub distribution: Distribution,
}

impl ChannelConfig {
    pub fn new(forward: DelayBounds, backward: DelayBounds, seed: u64) -> Self {
        ChannelConfig { forward, backward, seed, distribution: Distribution::Uniform }
    }

    pub fn bounds(&self, direction: Direction) -> DelayBounds {
        match direction {
            Direction::Forward => self.forward,
            Direction::Backward => self.backward,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimedMessage<P> {
    pub payload: P,
    pub seq: u64,
    pub sent_ms: u64,
    pub deliver_ms: u64,
}

impl<P> TimedMessage<P> {
    pub fn delay_ms(&self) -> u64 {
        self.deliver_ms - self.sent_ms
    }
}

/// Pending messages of one direction, keyed by delivery time then sequence.
#[derive(Debug, Clone)]
pub struct MessageQueue<P> {
    pending: BTreeMap<(u64, u64), TimedMessage<P>>,
    next_seq: u64,
}

impl<P> Default for MessageQueue<P> {
    fn default() -> Self {
        MessageQueue { pending: BTreeMap::new(), next_seq: 0 }
    }
}

impl<P: Clone> MessageQueue<P> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn enqueue(&mut self, payload: P, now: u64, delay: u64) -> TimedMessage<P> {
        let msg = TimedMessage { payload, seq: self.next_seq, sent_ms: now, deliver_ms: now + delay };
        self.next_seq += 1;
        self.pending.insert((msg.deliver_ms, msg.seq), msg.clone());
        msg
    }

    /// Removes and returns every message due at or before `now`, in delivery
    /// order with ties broken by sequence number.
    pub fn poll(&mut self, now: u64) -> Vec<TimedMessage<P>> {
        let mut out = Vec::new();
        while let Some(entry) = self.pending.first_entry() {
            if entry.key().0 > now {
                break;
            }
            out.push(entry.remove());
        }
        out
    }

    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }
}

/// Both directions of the relay node plus the seeded delay source.
#[derive(Debug, Clone)]
pub struct Network<F, B> {
    cfg: ChannelConfig,
    rng: ChaCha8Rng,
    forward: MessageQueue<F>,
    backward: MessageQueue<B>,
}

impl<F: Clone, B: Clone> Network<F, B> {
    pub fn new(cfg: ChannelConfig) -> Self {
        Network {
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            cfg,
            forward: MessageQueue::new(),
            backward: MessageQueue::new(),
        }
    }

    pub fn config(&self) -> &ChannelConfig {
        &self.cfg
    }

    /// Draws one delay for `direction` from its configured bounds.
    pub fn draw_delay(&mut self, direction: Direction) -> u64 {
        let b = self.cfg.bounds(direction);
        match self.cfg.distribution {
            Distribution::Uniform => self.rng.gen_range(b.lo..=b.hi),
        }
    }

    /// Draws a round-trip delay from `total` and splits it, the forward share
    /// uniform in `split`.
    pub fn draw_round_trip(&mut self, total: DelayBounds, split: (f64, f64)) -> (u64, u64) {
        let td = match self.cfg.distribution {
            Distribution::Uniform => self.rng.gen_range(total.lo..=total.hi),
        };
        let frac = if split.0 == split.1 { split.0 } else { self.rng.gen_range(split.0..=split.1) };
        let t1 = (libm::round(frac * td as f64) as u64).min(td);
        (t1, td - t1)
    }

    pub fn send_forward(&mut self, payload: F, now: u64) -> TimedMessage<F> {
        let delay = self.draw_delay(Direction::Forward);
        self.forward.enqueue(payload, now, delay)
    }

    pub fn send_forward_after(&mut self, payload: F, now: u64, delay: u64) -> TimedMessage<F> {
        self.forward.enqueue(payload, now, delay)
    }

    pub fn send_backward(&mut self, payload: B, now: u64) -> TimedMessage<B> {
        let delay = self.draw_delay(Direction::Backward);
        self.backward.enqueue(payload, now, delay)
    }

    pub fn send_backward_after(&mut self, payload: B, now: u64, delay: u64) -> TimedMessage<B> {
        self.backward.enqueue(payload, now, delay)
    }

    pub fn poll_forward(&mut self, now: u64) -> Vec<TimedMessage<F>> {
        self.forward.poll(now)
    }

    pub fn poll_backward(&mut self, now: u64) -> Vec<TimedMessage<B>> {
        self.backward.poll(now)
    }

    pub fn in_flight(&self) -> usize {
        self.forward.len() + self.backward.len()
    }
}

/// Shared millisecond clock: plant integrates every `step_ms`, controller
/// samples every `period_ms`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimClock {
    now_ms: u64,
    period_ms: u64,
    step_ms: u64,
}

impl SimClock {
    pub fn new(period_ms: u64, step_ms: u64) -> Option<Self> {
        if step_ms == 0 || period_ms == 0 || !period_ms.is_multiple_of(step_ms) {
            return None;
        }
        Some(SimClock { now_ms: 0, period_ms, step_ms })
    }

    pub fn now(&self) -> u64 {
        self.now_ms
    }

    pub fn period_ms(&self) -> u64 {
        self.period_ms
    }

    pub fn step_ms(&self) -> u64 {
        self.step_ms
    }

    pub fn is_controller_sample(&self) -> bool {
        self.now_ms.is_multiple_of(self.period_ms)
    }

    pub fn tick(&mut self) {
        self.now_ms += self.step_ms;
    }
}

impl Default for SimClock {
    fn default() -> Self {
        SimClock { now_ms: 0, period_ms: 20, step_ms: 1 }
    }
}

pub const MOTOR_GAIN: f64 = 4.159;
pub const MOTOR_POLE: f64 = 3.888;

/// Continuous motor model `4.159/(s + 3.888)`.
pub fn motor_model() -> RationalTf {
    RationalTf::continuous(&[MOTOR_GAIN], &[1.0, MOTOR_POLE]).expect("valid motor model")
}

/// Fine-step "true" plant: ZOH discretization of the motor at `dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruePlant {
    pole: f64,
    gain: f64,
    speed: f64,
}

impl TruePlant {
    pub fn new(dt: f64) -> Self {
        let d = motor_model().discretize_zoh(dt).expect("first-order motor");
        TruePlant { pole: -d.den()[1], gain: d.num()[0], speed: 0.0 }
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    /// Holds `input` for one step and returns the speed at the end of it.
    pub fn plant_tick(&mut self, input: f64) -> f64 {
        self.speed = self.pole * self.speed + self.gain * input;
        self.speed
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net(fwd: (u64, u64), bwd: (u64, u64), seed: u64) -> Network<u32, u32> {
        Network::new(ChannelConfig::new(
            DelayBounds::new(fwd.0, fwd.1).unwrap(),
            DelayBounds::new(bwd.0, bwd.1).unwrap(),
            seed,
        ))
    }

    #[test]
    fn zero_bounds_deliver_now() {
        let mut n = net((0, 0), (0, 0), 1);
        let m = n.send_forward(7, 40);
        assert_eq!(m.deliver_ms, 40);
        assert_eq!(n.poll_forward(40).len(), 1);
    }

    #[test]
    fn uniform_draws_in_range() {
        let mut n = net((30, 130), (0, 0), 99);
        let draws: Vec<u64> = (0..100_000).map(|_| n.draw_delay(Direction::Forward)).collect();
        assert!(*draws.iter().min().unwrap() >= 30);
        assert!(*draws.iter().max().unwrap() <= 130);
        let mean = draws.iter().sum::<u64>() as f64 / draws.len() as f64;
        assert!((mean - 80.0).abs() / 80.0 < 0.02, "mean {mean}");
    }

    #[test]
    fn same_seed_same_sequence() {
        let mut a = net((5, 500), (5, 500), 1234);
        let mut b = net((5, 500), (5, 500), 1234);
        for _ in 0..1000 {
            assert_eq!(a.draw_delay(Direction::Backward), b.draw_delay(Direction::Backward));
            assert_eq!(
                a.draw_round_trip(DelayBounds::new(293, 389).unwrap(), (0.3, 0.7)),
                b.draw_round_trip(DelayBounds::new(293, 389).unwrap(), (0.3, 0.7))
            );
        }
    }

    #[test]
    fn poll_orders_and_filters() {
        let mut q: MessageQueue<&str> = MessageQueue::new();
        assert!(q.poll(100).is_empty());
        q.enqueue("late", 0, 50);
        q.enqueue("a", 10, 10);
        q.enqueue("b", 15, 5);
        let got = q.poll(20);
        assert_eq!(got.iter().map(|m| m.payload).collect::<Vec<_>>(), ["a", "b"]);
        assert_eq!(got[0].seq + 1, got[1].seq);
        assert_eq!(q.len(), 1);
        assert!(q.poll(49).is_empty());
        assert_eq!(q.poll(50)[0].payload, "late");
    }

    #[test]
    fn round_trip_split_sums() {
        let mut n = net((0, 0), (0, 0), 8);
        let total = DelayBounds::new(370, 636).unwrap();
        for _ in 0..1000 {
            let (t1, t2) = n.draw_round_trip(total, (0.3, 0.7));
            let td = t1 + t2;
            assert!((370..=636).contains(&td));
            assert!(t1 as f64 >= 0.3 * td as f64 - 0.5 && t1 as f64 <= 0.7 * td as f64 + 0.5);
        }
    }

    #[test]
    fn bad_bounds() {
        assert_eq!(DelayBounds::new(10, 5).unwrap_err(), NetError::InvalidBounds { lo: 10, hi: 5 });
    }

    #[test]
    fn clock_validation() {
        assert!(SimClock::new(20, 3).is_none());
        let mut c = SimClock::new(20, 1).unwrap();
        assert!(c.is_controller_sample());
        c.tick();
        assert!(!c.is_controller_sample());
    }

    #[test]
    fn plant_rest_and_steady_state() {
        let mut p = TruePlant::new(0.001);
        assert_eq!(p.plant_tick(0.0), 0.0);
        let mut y = 0.0;
        for _ in 0..20_000 {
            y = p.plant_tick(1.0);
        }
        assert!((y - 4.159 / 3.888).abs() < 1e-9);
    }

    #[test]
    fn plant_time_constant() {
        let mut p = TruePlant::new(0.001);
        let target = 0.632 * 4.159 / 3.888;
        let mut hit = None;
        for k in 1..=2000 {
            if p.plant_tick(1.0) >= target {
                hit = Some(k as f64 * 0.001);
                break;
            }
        }
        let t = hit.unwrap();
        assert!((t - 1.0 / 3.888).abs() <= 0.001 + 1e-9, "t={t}");
    }
}
