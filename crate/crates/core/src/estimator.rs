//! Round-trip measurement and online delay estimation on the controller side.
//!
//! Every feedback message echoes the send stamp of the drive command it
//! answers, so `t2pr - t1pr` is the round trip of that command. The estimate is
//!
//! ```text
//! t_m = (t2pr - t1pr) + sum_{i=2..v_s} t_pa[i]
//! ```
//!
//! where `t_pa[1]` is the current round trip, `t_pa[2..]` are earlier ones
//! (most recent first) and `v_s` is the number of vacant samples that preceded
//! this receipt.

use alloc::collections::VecDeque;
use core::fmt;

/// Number of past round-trip differences retained.
pub const PAST_DEPTH: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub enum EstimatorError {
    NonMonotoneSend { previous: u64, got: u64 },
    NoReceiveYet,
}

impl fmt::Display for EstimatorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimatorError::NonMonotoneSend { previous, got } => {
                write!(f, "send timestamp {got} ms precedes previous {previous} ms")
            }
            EstimatorError::NoReceiveYet => write!(f, "no feedback received yet"),
        }
    }
}

impl core::error::Error for EstimatorError {}

/// Which measurement rule produced the estimate at a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    /// One message, round trip below one period.
    Normal,
    /// Nothing usable arrived.
    Vacant,
    /// Several messages arrived; only the newest is kept.
    Rejection,
    /// One message with round trip of a period or more.
    Delayed,
}

impl Rule {
    pub fn as_str(self) -> &'static str {
        match self {
            Rule::Normal => "normal",
            Rule::Vacant => "vacant",
            Rule::Rejection => "rejection",
            Rule::Delayed => "delayed",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl core::str::FromStr for Rule {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "normal" => Ok(Rule::Normal),
            "vacant" => Ok(Rule::Vacant),
            "rejection" => Ok(Rule::Rejection),
            "delayed" => Ok(Rule::Delayed),
            _ => Err(()),
        }
    }
}

/// A feedback message as seen by the controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feedback {
    pub value: f64,
    /// Send stamp of the drive command this message answers.
    pub sent_ms: u64,
    pub received_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub rule: Rule,
    pub t_m: u64,
    /// The message the controller should use, if any.
    pub accepted: Option<Feedback>,
    pub discarded: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    period_ms: u64,
    t1pr: Option<u64>,
    t2pr: Option<u64>,
    /// `t2pr - t1pr` of the latest receipt.
    rtt: Option<u64>,
    last_send: Option<u64>,
    past: VecDeque<u64>,
    /// A receipt not yet moved into `past`.
    unpushed: bool,
    /// Vacant samples since the last receipt.
    vacant: u32,
    /// Vacant samples that preceded the current receipt.
    v_s: u32,
    last_td: u64,
    last_tm: u64,
    seen_nonzero: bool,
}

impl EstimatorState {
    pub fn new(period_ms: u64) -> Self {
        EstimatorState {
            period_ms,
            t1pr: None,
            t2pr: None,
            rtt: None,
            last_send: None,
            past: VecDeque::with_capacity(PAST_DEPTH),
            unpushed: false,
            vacant: 0,
            v_s: 0,
            last_td: 0,
            last_tm: 0,
            seen_nonzero: false,
        }
    }

    pub fn t1pr(&self) -> Option<u64> {
        self.t1pr
    }

    pub fn t2pr(&self) -> Option<u64> {
        self.t2pr
    }

    /// Past round-trip differences, most recent first.
    pub fn past(&self) -> impl Iterator<Item = u64> + '_ {
        self.past.iter().copied()
    }

    pub fn vacant_samples(&self) -> u32 {
        self.vacant
    }

    pub fn last_td(&self) -> u64 {
        self.last_td
    }

    pub fn last_tm(&self) -> u64 {
        self.last_tm
    }

    /// Registers a drive command sent at `timestamp`.
    pub fn on_send(&mut self, timestamp: u64) -> Result<(), EstimatorError> {
        if let Some(prev) = self.last_send {
            if timestamp < prev {
                return Err(EstimatorError::NonMonotoneSend { previous: prev, got: timestamp });
            }
        }
        if self.unpushed {
            if let Some(rtt) = self.rtt {
                self.past.push_front(rtt);
                self.past.truncate(PAST_DEPTH);
            }
            self.unpushed = false;
        }
        self.last_send = Some(timestamp);
        self.t1pr = Some(timestamp);
        Ok(())
    }

    /// Applies the measurement rules to the messages delivered at this sample
    /// (in delivery order) and updates the estimate.
    pub fn classify_and_measure(&mut self, deliveries: &[Feedback], _now: u64) -> Measurement {
        // zero readings before the first real one count as vacancies
        let usable = if self.seen_nonzero {
            deliveries
        } else {
            match deliveries.iter().position(|d| d.value != 0.0) {
                Some(first) => &deliveries[first..],
                None => &[],
            }
        };

        let Some(&newest) = usable.last() else {
            self.vacant += 1;
            self.last_tm = self.last_td + u64::from(self.vacant) * self.period_ms;
            return Measurement { rule: Rule::Vacant, t_m: self.last_tm, accepted: None, discarded: deliveries.len() };
        };

        self.seen_nonzero = true;
        self.t1pr = Some(newest.sent_ms);
        self.t2pr = Some(newest.received_ms.max(newest.sent_ms));
        self.unpushed = true;
        self.v_s = self.vacant;
        self.vacant = 0;

        let td = self.t2pr.unwrap() - newest.sent_ms;
        self.rtt = Some(td);
        self.last_td = td;
        self.last_tm = self.estimate().expect("receipt registered");
        let rule = if usable.len() > 1 {
            Rule::Rejection
        } else if td < self.period_ms {
            Rule::Normal
        } else {
            Rule::Delayed
        };
        Measurement { rule, t_m: self.last_tm, accepted: Some(newest), discarded: deliveries.len() - 1 }
    }

    /// Current estimate from the latest receipt.
    pub fn estimate(&self) -> Result<u64, EstimatorError> {
        let rtt = self.rtt.ok_or(EstimatorError::NoReceiveYet)?;
        let extra: u64 = self.past.iter().take(self.v_s.saturating_sub(1) as usize).sum();
        Ok(rtt + extra)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    fn fb(value: f64, sent: u64, recv: u64) -> Feedback {
        Feedback { value, sent_ms: sent, received_ms: recv }
    }

    /// Replays the send/receive stamps of the worked illustration.
    fn replay_until(est: &mut EstimatorState, pairs: &[(u64, u64)], vacancies_before_last: u32) -> Measurement {
        let mut m = None;
        for (k, &(s, r)) in pairs.iter().enumerate() {
            est.on_send(s).unwrap();
            if k + 1 == pairs.len() {
                for _ in 0..vacancies_before_last {
                    est.classify_and_measure(&[], r);
                }
            }
            m = Some(est.classify_and_measure(&[fb(50.0 + k as f64, s, r)], r));
        }
        m.unwrap()
    }

    #[test]
    fn worked_example_seventy() {
        let mut est = EstimatorState::new(20);
        let m = replay_until(&mut est, &[(0, 23), (23, 45), (45, 74), (74, 93)], 3);
        assert_eq!(m.t_m, 70);
        assert_eq!(est.estimate().unwrap(), 70);
    }

    #[test]
    fn worked_example_fifty() {
        let mut est = EstimatorState::new(20);
        let m = replay_until(&mut est, &[(0, 23), (23, 45), (45, 74), (74, 93), (93, 108), (108, 124)], 3);
        assert_eq!(m.t_m, 50);
    }

    #[test]
    fn first_send_and_queue() {
        let mut est = EstimatorState::new(20);
        est.on_send(0).unwrap();
        assert_eq!(est.t1pr(), Some(0));
        est.classify_and_measure(&[fb(1.0, 0, 23)], 23);
        est.on_send(23).unwrap();
        assert_eq!(est.t1pr(), Some(23));
        assert_eq!(est.past().collect::<Vec<_>>(), [23]);
    }

    #[test]
    fn double_send_engages_vacancy() {
        let mut est = EstimatorState::new(20);
        est.on_send(0).unwrap();
        est.on_send(20).unwrap();
        assert_eq!(est.past().count(), 0);
        let m = est.classify_and_measure(&[], 20);
        assert_eq!(m.rule, Rule::Vacant);
        assert_eq!(est.vacant_samples(), 1);
    }

    #[test]
    fn non_monotone_send() {
        let mut est = EstimatorState::new(20);
        est.on_send(40).unwrap();
        assert_eq!(est.on_send(39).unwrap_err(), EstimatorError::NonMonotoneSend { previous: 40, got: 39 });
    }

    #[test]
    fn rules() {
        let mut est = EstimatorState::new(20);
        est.on_send(0).unwrap();
        let m = est.classify_and_measure(&[fb(3.0, 0, 12)], 20);
        assert_eq!((m.rule, m.t_m), (Rule::Normal, 12));

        let m = est.classify_and_measure(&[], 40);
        assert_eq!((m.rule, m.t_m), (Rule::Vacant, 12 + 20));

        let m = est.classify_and_measure(&[fb(4.0, 20, 45), fb(5.0, 40, 58)], 60);
        assert_eq!(m.rule, Rule::Rejection);
        assert_eq!(m.accepted.unwrap().value, 5.0);
        assert_eq!(m.discarded, 1);
        assert_eq!(m.t_m, 18);

        let m = est.classify_and_measure(&[fb(6.0, 20, 75)], 80);
        assert_eq!((m.rule, m.t_m), (Rule::Delayed, 55));
    }

    #[test]
    fn startup_zero_is_vacancy() {
        let mut est = EstimatorState::new(20);
        est.on_send(0).unwrap();
        let m = est.classify_and_measure(&[fb(0.0, 0, 10)], 20);
        assert_eq!(m.rule, Rule::Vacant);
        assert!(m.accepted.is_none());
        assert_eq!(est.estimate().unwrap_err(), EstimatorError::NoReceiveYet);
        let m = est.classify_and_measure(&[fb(2.0, 0, 30)], 40);
        assert_eq!(m.rule, Rule::Delayed);
        // once motion was seen, zero is an ordinary value
        let m = est.classify_and_measure(&[fb(0.0, 40, 55)], 60);
        assert_eq!(m.rule, Rule::Normal);
    }

    #[test]
    fn estimate_before_receive() {
        let est = EstimatorState::new(20);
        assert_eq!(est.estimate().unwrap_err(), EstimatorError::NoReceiveYet);
    }

    #[test]
    fn no_vacancy_is_plain_rtt() {
        let mut est = EstimatorState::new(20);
        for k in 0..10u64 {
            est.on_send(20 * k).unwrap();
            let m = est.classify_and_measure(&[fb(1.0, 20 * k, 20 * k + 23)], 20 * k + 40);
            assert_eq!(m.t_m, 23);
        }
    }
}
