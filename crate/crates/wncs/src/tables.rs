//! Delay-approximant ISE table and stability sweep output.

use std::fmt::Write as _;
use std::io::{self, Write};

use wncs_core::approx::{self, ApproxError, SeriesKind};
use wncs_core::stability::{self, ScalarDde, StabilityError};

pub const TABLE_DELAYS: [f64; 3] = [0.04, 0.24, 1.0];

#[derive(Debug, Clone, PartialEq)]
pub struct IseRow {
    pub kind: SeriesKind,
    pub values: [f64; 3],
    pub average: f64,
}

pub fn ise_table() -> Result<Vec<IseRow>, ApproxError> {
    SeriesKind::ALL
        .iter()
        .map(|&kind| {
            let mut values = [0.0; 3];
            for (v, &tau) in values.iter_mut().zip(&TABLE_DELAYS) {
                *v = approx::ise_default(kind, tau)?.ise;
            }
            let average = values.iter().sum::<f64>() / values.len() as f64;
            Ok(IseRow { kind, values, average })
        })
        .collect()
}

pub fn format_ise_table(rows: &[IseRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<10}{:>12}{:>12}{:>12}{:>14}", "Series", "tau = 0.04", "tau = 0.24", "tau = 1", "Average ISE");
    for r in rows {
        let _ = writeln!(
            out,
            "{:<10}{:>12.4}{:>12.4}{:>12.4}{:>14.4}",
            r.kind.name(),
            r.values[0],
            r.values[1],
            r.values[2],
            r.average
        );
    }
    out
}

/// `(t_d, rightmost real part)` on an even grid of `steps` points.
pub fn stability_sweep(template: &ScalarDde, td_min: f64, td_max: f64, steps: usize) -> Result<Vec<(f64, f64)>, StabilityError> {
    let steps = steps.max(1);
    (0..steps)
        .map(|k| {
            let raw = if steps == 1 { td_min } else { td_min + (td_max - td_min) * k as f64 / (steps - 1) as f64 };
            // keep grid values like 0.3 printable as 0.3
            let td = (raw * 1e12).round() / 1e12;
            Ok((td, stability::rightmost_real_part(&template.with_delay(td))?))
        })
        .collect()
}

pub fn write_sweep<W: Write>(points: &[(f64, f64)], mut out: W) -> io::Result<()> {
    out.write_all(b"t_d,rightmost_re\n")?;
    for (td, re) in points {
        writeln!(out, "{td},{re}")?;
    }
    out.flush()
}
