use std::fmt::Write as _;
use std::path::Path;

use super::run::{mean, SummaryRow, SUMMARY_CSV_HEADER};
use crate::error::{Error, Result};

/// Percent change from `a` to `b`; `None` when `a` is zero.
pub fn ratio_percent(a: f64, b: f64) -> Option<f64> {
    if a == 0.0 {
        None
    } else {
        Some((b - a) / a.abs() * 100.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonRow {
    pub checkpoint: usize,
    pub frames: u64,
    pub mean_a: f64,
    pub mean_b: f64,
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    /// Number of trailing checkpoints in the final window.
    pub window: usize,
    pub final_mean_a: f64,
    pub final_mean_b: f64,
    pub final_ratio: Option<f64>,
}

impl Comparison {
    pub fn to_table(&self) -> String {
        let fmt = |r: Option<f64>| r.map_or_else(|| "NA".to_string(), |v| format!("{v:.2}"));
        let mut s = String::from("checkpoint,frames,mean_a,mean_b,ratio_pct\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                r.checkpoint,
                r.frames,
                r.mean_a,
                r.mean_b,
                fmt(r.ratio)
            );
        }
        let _ = writeln!(
            s,
            "final_window(last {}),,{},{},{}",
            self.window,
            self.final_mean_a,
            self.final_mean_b,
            fmt(self.final_ratio)
        );
        s
    }
}

pub fn parse_summary(text: &str) -> Result<Vec<SummaryRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == SUMMARY_CSV_HEADER => {}
        other => {
            return Err(Error::Runtime(format!(
                "summary header must be `{SUMMARY_CSV_HEADER}`, got `{}`",
                other.unwrap_or("")
            )))
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let bad = || Error::Runtime(format!("summary line {} is malformed: `{line}`", i + 2));
        if cols.len() != 5 {
            return Err(bad());
        }
        rows.push(SummaryRow {
            checkpoint: cols[0].parse().map_err(|_| bad())?,
            frames: cols[1].parse().map_err(|_| bad())?,
            mean: cols[2].parse().map_err(|_| bad())?,
            stdev: cols[3].parse().map_err(|_| bad())?,
            moving_avg_10: cols[4].parse().map_err(|_| bad())?,
        });
    }
    Ok(rows)
}

/// Per-checkpoint means side by side, with the percent change over the
/// last 10% of checkpoints (at least one).
pub fn compare(a: &[SummaryRow], b: &[SummaryRow]) -> Result<Comparison> {
    if a.is_empty() || a.len() != b.len() {
        return Err(Error::Runtime(format!(
            "checkpoints are misaligned: {} vs {} rows",
            a.len(),
            b.len()
        )));
    }
    let mut rows = Vec::with_capacity(a.len());
    for (ra, rb) in a.iter().zip(b) {
        if ra.frames != rb.frames || ra.checkpoint != rb.checkpoint {
            return Err(Error::Runtime(format!(
                "checkpoints are misaligned: checkpoint {} at frame {} vs checkpoint {} at frame {}",
                ra.checkpoint, ra.frames, rb.checkpoint, rb.frames
            )));
        }
        rows.push(ComparisonRow {
            checkpoint: ra.checkpoint,
            frames: ra.frames,
            mean_a: ra.mean,
            mean_b: rb.mean,
            ratio: ratio_percent(ra.mean, rb.mean),
        });
    }
    let window = a.len().div_ceil(10);
    let tail = &rows[rows.len() - window..];
    let final_mean_a = mean(&tail.iter().map(|r| r.mean_a).collect::<Vec<_>>());
    let final_mean_b = mean(&tail.iter().map(|r| r.mean_b).collect::<Vec<_>>());
    Ok(Comparison {
        rows,
        window,
        final_mean_a,
        final_mean_b,
        final_ratio: ratio_percent(final_mean_a, final_mean_b),
    })
}

pub fn compare_files(a: &Path, b: &Path) -> Result<Comparison> {
    let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| Error::io(p, e));
    compare(&parse_summary(&read(a)?)?, &parse_summary(&read(b)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(means: &[f64]) -> Vec<SummaryRow> {
        means
            .iter()
            .enumerate()
            .map(|(i, &m)| SummaryRow {
                checkpoint: i + 1,
                frames: (i as u64 + 1) * 100,
                mean: m,
                stdev: 0.0,
                moving_avg_10: m,
            })
            .collect()
    }

    #[test]
    fn identical_and_doubled() {
        let a = rows(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(compare(&a, &a).unwrap().final_ratio, Some(0.0));
        let b = rows(&[2.0, 4.0, 6.0, 8.0]);
        let c = compare(&a, &b).unwrap();
        assert_eq!(c.final_ratio, Some(100.0));
        assert!(c.rows.iter().all(|r| r.ratio == Some(100.0)));
    }

    #[test]
    fn final_window_is_last_tenth() {
        let a = rows(&[1.0; 20]);
        let mut bm = vec![1.0; 18];
        bm.extend([3.0, 5.0]);
        let c = compare(&a, &rows(&bm)).unwrap();
        assert_eq!(c.window, 2);
        assert_eq!(c.final_mean_b, 4.0);
        assert_eq!(c.final_ratio, Some(300.0));
    }

    #[test]
    fn misaligned_is_an_error() {
        assert!(compare(&rows(&[1.0, 2.0]), &rows(&[1.0])).is_err());
        let mut b = rows(&[1.0, 2.0]);
        b[1].frames = 250;
        assert!(compare(&rows(&[1.0, 2.0]), &b).is_err());
    }

    #[test]
    fn zero_baseline_has_no_ratio() {
        assert_eq!(ratio_percent(0.0, 1.0), None);
    }

    #[test]
    fn summary_text_round_trips() {
        let r = rows(&[0.25, 1.5]);
        let text = crate::harness::summary_csv(&r);
        assert_eq!(parse_summary(&text).unwrap(), r);
    }
}
