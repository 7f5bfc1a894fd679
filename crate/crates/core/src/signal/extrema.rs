use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Which extrema delimit a cycle when measuring periods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PeriodBasis {
    #[default]
    Maxima,
    Minima,
}

/// Detected motion cycles of one signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleSet {
    pub minima_idx: Vec<usize>,
    pub maxima_idx: Vec<usize>,
    /// Seconds between consecutive extrema of the period basis.
    pub periods: Vec<f64>,
    /// Peak-to-trough difference of every adjacent minimum/maximum pair.
    pub amplitudes: Vec<f64>,
}

impl CycleSet {
    /// `(start, end)` frame pairs between consecutive maxima.
    pub fn cycle_windows(&self) -> Vec<(usize, usize)> {
        self.maxima_idx.windows(2).map(|w| (w[0], w[1])).collect()
    }
}

/// Local maxima with plateau handling: a flat top reports its middle sample.
/// Endpoints are never peaks.
fn local_maxima(x: &[f64]) -> Vec<usize> {
    let n = x.len();
    let mut peaks = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if x[i - 1] < x[i] {
            let mut j = i;
            while j + 1 < n && x[j + 1] == x[i] {
                j += 1;
            }
            if j + 1 < n && x[j + 1] < x[i] {
                peaks.push((i + j) / 2);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    peaks
}

/// Height of a peak above the higher of its two bases. Each base is the
/// lowest point between the peak and the nearest strictly higher sample
/// (or the series end) on that side.
fn prominence(x: &[f64], peak: usize) -> f64 {
    let h = x[peak];
    let mut left_min = h;
    for &v in x[..peak].iter().rev() {
        if v > h {
            break;
        }
        left_min = left_min.min(v);
    }
    let mut right_min = h;
    for &v in &x[peak + 1..] {
        if v > h {
            break;
        }
        right_min = right_min.min(v);
    }
    h - left_min.max(right_min)
}

fn prominent_maxima(x: &[f64], min_prominence: f64) -> Vec<usize> {
    local_maxima(x).into_iter().filter(|&p| prominence(x, p) >= min_prominence).collect()
}

/// Prominence-filtered extrema with enforced min/max alternation.
pub fn find_extrema(series: &TimeSeries, prominence_frac: f64) -> Result<CycleSet> {
    find_extrema_with(series, prominence_frac, PeriodBasis::Maxima)
}

pub fn find_extrema_with(series: &TimeSeries, prominence_frac: f64, basis: PeriodBasis) -> Result<CycleSet> {
    if series.len() < 3 {
        return Err(Error::Value(format!("extrema need at least 3 samples, got {}", series.len())));
    }
    if !(prominence_frac > 0.0 && prominence_frac < 1.0) {
        return Err(Error::Value(format!("prominence fraction must lie in (0, 1), got {prominence_frac}")));
    }
    let x = series.samples();
    let (lo, hi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let range = hi - lo;
    if range <= 0.0 {
        return Err(Error::NoCycles("signal is constant".into()));
    }
    let threshold = prominence_frac * range;
    let neg: Vec<f64> = x.iter().map(|v| -v).collect();

    // (index, is_max), merged in time order.
    let mut events: Vec<(usize, bool)> = prominent_maxima(x, threshold)
        .into_iter()
        .map(|i| (i, true))
        .chain(prominent_maxima(&neg, threshold).into_iter().map(|i| (i, false)))
        .collect();
    events.sort_unstable();

    let mut kept: Vec<(usize, bool)> = Vec::with_capacity(events.len());
    for ev in events {
        match kept.last_mut() {
            Some(last) if last.1 == ev.1 => {
                let better = if ev.1 { x[ev.0] > x[last.0] } else { x[ev.0] < x[last.0] };
                if better {
                    *last = ev;
                }
            }
            _ => kept.push(ev),
        }
    }

    let maxima_idx: Vec<usize> = kept.iter().filter(|e| e.1).map(|e| e.0).collect();
    let minima_idx: Vec<usize> = kept.iter().filter(|e| !e.1).map(|e| e.0).collect();
    if maxima_idx.len() < 2 {
        return Err(Error::NoCycles(format!("{} maxima survived prominence filtering", maxima_idx.len())));
    }
    let basis_idx = match basis {
        PeriodBasis::Maxima => &maxima_idx,
        PeriodBasis::Minima => &minima_idx,
    };
    if basis_idx.len() < 2 {
        return Err(Error::NoCycles(format!("{} minima survived prominence filtering", basis_idx.len())));
    }
    let fps = series.fps();
    let periods = basis_idx.windows(2).map(|w| (w[1] - w[0]) as f64 / fps).collect();
    let amplitudes = kept.windows(2).map(|w| (x[w[0].0] - x[w[1].0]).abs()).collect();
    Ok(CycleSet { minima_idx, maxima_idx, periods, amplitudes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn ts(v: Vec<f64>) -> TimeSeries {
        TimeSeries::new(v, 60.0).unwrap()
    }

    fn sine(f: f64, secs: f64, fps: f64) -> Vec<f64> {
        (0..(secs * fps) as usize).map(|i| (2.0 * PI * f * i as f64 / fps).sin()).collect()
    }

    #[test]
    fn sinusoid_period_and_amplitude() {
        let c = find_extrema(&ts(sine(2.0, 5.0, 60.0)), 0.2).unwrap();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!((mean(&c.periods) - 0.5).abs() <= 1.0 / 60.0);
        assert!((mean(&c.amplitudes) - 2.0).abs() <= 0.02);
        assert_eq!(c.maxima_idx.len(), 10);
        assert_eq!(c.periods.len(), c.maxima_idx.len() - 1);
    }

    #[test]
    fn ramp_has_no_cycles() {
        let r: Vec<f64> = (0..100).map(|i| i as f64).collect();
        assert!(matches!(find_extrema(&ts(r), 0.2), Err(Error::NoCycles(_))));
        assert!(matches!(find_extrema(&ts(vec![1.0; 10]), 0.2), Err(Error::NoCycles(_))));
    }

    #[test]
    fn ripple_is_rejected() {
        // ripple of amplitude 0.05 rides on a unit sinusoid
        let x: Vec<f64> = (0..300)
            .map(|i| {
                let t = i as f64 / 60.0;
                (2.0 * PI * t).sin() + 0.05 * (2.0 * PI * 9.0 * t).sin()
            })
            .collect();
        let c = find_extrema(&ts(x), 0.2).unwrap();
        assert_eq!(c.maxima_idx.len(), 5);
        assert_eq!(c.minima_idx.len(), 5);
        for p in &c.periods {
            assert!((p - 1.0).abs() < 0.05);
        }
    }

    #[test]
    fn plateau_reports_midpoint() {
        let x = vec![0.0, 1.0, 3.0, 3.0, 3.0, 1.0, 0.0, 2.0, 3.0, 2.0, 0.0];
        let c = find_extrema(&ts(x), 0.2).unwrap();
        assert_eq!(c.maxima_idx, vec![3, 8]);
        assert_eq!(c.minima_idx, vec![6]);
    }

    #[test]
    fn prominence_matches_hand_value() {
        let x = [0.0, 4.0, 1.0, 3.0, 2.0, 5.0, 0.0];
        assert_eq!(prominence(&x, 1), 3.0);
        assert_eq!(prominence(&x, 3), 1.0);
        assert_eq!(prominence(&x, 5), 5.0);
    }

    #[test]
    fn minima_basis_periods() {
        let c = find_extrema_with(&ts(sine(1.5, 4.0, 60.0)), 0.2, PeriodBasis::Minima).unwrap();
        assert_eq!(c.periods.len(), c.minima_idx.len() - 1);
        for p in &c.periods {
            assert!((p - 1.0 / 1.5).abs() <= 1.0 / 60.0);
        }
    }

    #[test]
    fn alternation_holds() {
        let x: Vec<f64> = (0..400).map(|i| ((i * 7919) % 101) as f64 / 10.0 + (i as f64 / 9.0).sin() * 8.0).collect();
        if let Ok(c) = find_extrema(&ts(x), 0.05) {
            let mut all: Vec<(usize, bool)> =
                c.maxima_idx.iter().map(|&i| (i, true)).chain(c.minima_idx.iter().map(|&i| (i, false))).collect();
            all.sort_unstable();
            assert!(all.windows(2).all(|w| w[0].1 != w[1].1));
        }
    }
}
