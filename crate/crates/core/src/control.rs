//! Position-form discrete PI controller with integral clamping and actuator
//! saturation.

use core::fmt;

pub const DEFAULT_KP: f64 = 1.69;
pub const DEFAULT_KI: f64 = 0.1488;
pub const DRIVE_MAX: f64 = 255.0;

#[derive(Debug, Clone, PartialEq)]
pub enum ControlError {
    InvalidLimits { min: f64, max: f64 },
    InvalidIntegralClamp(f64),
    DriveOutOfRange(f64),
}

impl fmt::Display for ControlError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ControlError::InvalidLimits { min, max } => {
                write!(f, "drive limits must satisfy min < max, got [{min}, {max}]")
            }
            ControlError::InvalidIntegralClamp(t) => write!(f, "integral clamp must be positive, got {t}"),
            ControlError::DriveOutOfRange(d) => write!(f, "drive {d} outside [0, 255]"),
        }
    }
}

impl core::error::Error for ControlError {}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiConfig {
    pub kp: f64,
    pub ki: f64,
    /// Clamp on the accumulated error sum, symmetric.
    pub i_thres: f64,
    pub drive_min: f64,
    pub drive_max: f64,
}

impl Default for PiConfig {
    fn default() -> Self {
        PiConfig {
            kp: DEFAULT_KP,
            ki: DEFAULT_KI,
            i_thres: DRIVE_MAX / DEFAULT_KI,
            drive_min: 0.0,
            drive_max: DRIVE_MAX,
        }
    }
}

impl PiConfig {
    pub fn validate(&self) -> Result<(), ControlError> {
        if !(self.drive_min < self.drive_max) {
            return Err(ControlError::InvalidLimits { min: self.drive_min, max: self.drive_max });
        }
        if !(self.i_thres > 0.0) {
            return Err(ControlError::InvalidIntegralClamp(self.i_thres));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PiState {
    pub i_sum: f64,
    pub last_drive: f64,
}

/// One controller sample.
///
/// The integral term uses the sum *before* this error is added, so
/// `u(n) = Kp e(n) + Ki sum_{k<n} e(k)` while nothing saturates.
pub fn pi_step(cfg: &PiConfig, state: &mut PiState, e2: f64) -> f64 {
    let p = e2 * cfg.kp;
    let i = state.i_sum * cfg.ki;
    let drive = (p + i).clamp(cfg.drive_min, cfg.drive_max);
    state.i_sum = (state.i_sum + e2).clamp(-cfg.i_thres, cfg.i_thres);
    state.last_drive = drive;
    drive
}

/// Drive code to duty ratio in percent.
pub fn duty_ratio(drive: f64) -> Result<f64, ControlError> {
    if !(0.0..=DRIVE_MAX).contains(&drive) {
        return Err(ControlError::DriveOutOfRange(drive));
    }
    Ok(100.0 * drive / DRIVE_MAX)
}

/// Drive code to actuator volts (255 is 5 V).
pub fn drive_volts(drive: f64) -> Result<f64, ControlError> {
    duty_ratio(drive).map(|d| 5.0 * d / 100.0)
}

/// Rounds to the nearest 8-bit PWM code.
pub fn quantize_drive(drive: f64) -> f64 {
    libm::round(drive.clamp(0.0, DRIVE_MAX))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_error_zero_drive() {
        let mut st = PiState::default();
        assert_eq!(pi_step(&PiConfig::default(), &mut st, 0.0), 0.0);
    }

    #[test]
    fn first_step_proportional_only() {
        let mut st = PiState::default();
        let d = pi_step(&PiConfig::default(), &mut st, 100.0);
        assert!((d - 169.0).abs() < 1e-12);
        assert_eq!(st.i_sum, 100.0);
    }

    #[test]
    fn large_error_saturates() {
        let cfg = PiConfig::default();
        let mut st = PiState { i_sum: -500.0, last_drive: 0.0 };
        assert_eq!(pi_step(&cfg, &mut st, 1000.0), 255.0);
        let mut st = PiState::default();
        assert_eq!(pi_step(&cfg, &mut st, -1000.0), 0.0);
    }

    #[test]
    fn integral_clamped_both_sides() {
        let cfg = PiConfig { i_thres: 50.0, ..PiConfig::default() };
        let mut st = PiState::default();
        for _ in 0..10 {
            pi_step(&cfg, &mut st, 30.0);
        }
        assert_eq!(st.i_sum, 50.0);
        for _ in 0..10 {
            pi_step(&cfg, &mut st, -30.0);
        }
        assert_eq!(st.i_sum, -50.0);
    }

    #[test]
    fn config_validation() {
        assert!(PiConfig::default().validate().is_ok());
        let bad = PiConfig { drive_min: 10.0, drive_max: 10.0, ..PiConfig::default() };
        assert!(matches!(bad.validate(), Err(ControlError::InvalidLimits { .. })));
        let bad = PiConfig { i_thres: 0.0, ..PiConfig::default() };
        assert_eq!(bad.validate(), Err(ControlError::InvalidIntegralClamp(0.0)));
        assert!((PiConfig::default().i_thres - 1713.7).abs() < 0.1);
    }

    #[test]
    fn duty_mapping() {
        assert_eq!(duty_ratio(255.0).unwrap(), 100.0);
        assert_eq!(drive_volts(255.0).unwrap(), 5.0);
        assert_eq!(duty_ratio(0.0).unwrap(), 0.0);
        assert_eq!(drive_volts(0.0).unwrap(), 0.0);
        assert!((duty_ratio(145.0).unwrap() - 56.86).abs() < 0.01);
        assert!(duty_ratio(256.0).is_err());
        assert!(duty_ratio(-1.0).is_err());
    }

    #[test]
    fn quantization() {
        assert_eq!(quantize_drive(168.6), 169.0);
        assert_eq!(quantize_drive(-3.0), 0.0);
        assert_eq!(quantize_drive(300.0), 255.0);
    }
}
