//! Flat `key = value` scenario files.
//!
//! One entry per line, `#` starts a comment, blank lines are ignored. Unknown
//! or repeated keys are errors. Every key is optional and falls back to
//! [`Scenario::default`]. See `docs/scenario-format.md` for the key list.

use std::fs;
use std::path::Path;

use wncs_core::approx::SeriesKind;
use wncs_core::sim::{Mode, Scenario, ScenarioError};

pub const KEYS: [&str; 18] = [
    "mode",
    "series",
    "fixed_t_m",
    "delay_lo",
    "delay_hi",
    "split_lo",
    "split_hi",
    "profile",
    "duration",
    "seed",
    "initial_t_m",
    "pin_t_m",
    "kp",
    "ki",
    "i_thres",
    "drive_min",
    "drive_max",
    "quantize",
];

#[derive(Debug, thiserror::Error)]
pub enum ScenarioFileError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: bad value `{value}` for `{key}`")]
    BadValue { line: usize, key: String, value: String },
    #[error(transparent)]
    Invalid(#[from] ScenarioError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn parse_profile(v: &str) -> Option<Vec<(f64, f64)>> {
    v.split(',')
        .map(|pair| {
            let (t, r) = pair.split_once(':')?;
            Some((t.trim().parse().ok()?, r.trim().parse().ok()?))
        })
        .collect()
}

fn parse_bool(v: &str) -> Option<bool> {
    match v {
        "true" | "yes" | "1" => Some(true),
        "false" | "no" | "0" => Some(false),
        _ => None,
    }
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioFileError> {
    let mut s = Scenario::default();
    let mut seen: Vec<&str> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body.split_once('=').ok_or(ScenarioFileError::Syntax { line })?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(ScenarioFileError::UnknownKey { line, key: key.to_string() });
        }
        if seen.contains(&key) {
            return Err(ScenarioFileError::DuplicateKey { line, key: key.to_string() });
        }
        seen.push(key);

        let bad = || ScenarioFileError::BadValue { line, key: key.to_string(), value: value.to_string() };
        let num = || value.parse::<f64>().map_err(|_| bad());
        match key {
            "mode" => s.mode = value.parse::<Mode>().map_err(|_| bad())?,
            "series" => s.series = value.parse::<SeriesKind>().map_err(|_| bad())?,
            "fixed_t_m" => s.fixed_t_m = Some(num()?),
            "delay_lo" => s.delay_lo = num()?,
            "delay_hi" => s.delay_hi = num()?,
            "split_lo" => s.forward_split.0 = num()?,
            "split_hi" => s.forward_split.1 = num()?,
            "profile" => s.profile = parse_profile(value).ok_or_else(bad)?,
            "duration" => s.duration = num()?,
            "seed" => s.seed = value.parse().map_err(|_| bad())?,
            "initial_t_m" => s.initial_t_m = num()?,
            "pin_t_m" => s.pin_t_m = parse_bool(value).ok_or_else(bad)?,
            "kp" => s.pi.kp = num()?,
            "ki" => s.pi.ki = num()?,
            "i_thres" => s.pi.i_thres = num()?,
            "drive_min" => s.pi.drive_min = num()?,
            "drive_max" => s.pi.drive_max = num()?,
            "quantize" => s.quantize = parse_bool(value).ok_or_else(bad)?,
            _ => unreachable!("key list checked above"),
        }
    }
    s.validate()?;
    Ok(s)
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioFileError> {
    parse_scenario(&fs::read_to_string(path)?)
}

/// Writes every key, so `parse_scenario(&to_text(s)) == s`.
pub fn to_text(s: &Scenario) -> String {
    let mut out = String::new();
    let mut put = |k: &str, v: String| {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(&v);
        out.push('\n');
    };
    put("mode", s.mode.to_string());
    put("series", s.series.to_string());
    if let Some(t) = s.fixed_t_m {
        put("fixed_t_m", t.to_string());
    }
    put("delay_lo", s.delay_lo.to_string());
    put("delay_hi", s.delay_hi.to_string());
    put("split_lo", s.forward_split.0.to_string());
    put("split_hi", s.forward_split.1.to_string());
    let profile: Vec<String> = s.profile.iter().map(|(t, r)| format!("{t}:{r}")).collect();
    put("profile", profile.join(", "));
    put("duration", s.duration.to_string());
    put("seed", s.seed.to_string());
    put("initial_t_m", s.initial_t_m.to_string());
    put("pin_t_m", s.pin_t_m.to_string());
    put("kp", s.pi.kp.to_string());
    put("ki", s.pi.ki.to_string());
    put("i_thres", s.pi.i_thres.to_string());
    put("drive_min", s.pi.drive_min.to_string());
    put("drive_max", s.pi.drive_max.to_string());
    put("quantize", s.quantize.to_string());
    out
}
