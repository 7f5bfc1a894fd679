//! Signal primitives shared by the feature extractors.

mod extrema;

use std::f64::consts::PI;

pub use extrema::{find_extrema, find_extrema_with, CycleSet, PeriodBasis};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// `|fr - fl| / (fr + fl)`.
pub fn asymmetry(fr: f64, fl: f64) -> Result<f64> {
    if !(fr >= 0.0 && fl >= 0.0) {
        return Err(Error::Value(format!("asymmetry needs non-negative inputs, got ({fr}, {fl})")));
    }
    let sum = fr + fl;
    if sum <= 0.0 {
        return Err(Error::Value("asymmetry of two zeros is undefined".into()));
    }
    Ok((fr - fl).abs() / sum)
}

/// Pearson correlation of two equally long slices.
pub fn pearson(x1: &[f64], x2: &[f64]) -> Result<f64> {
    if x1.len() != x2.len() {
        return Err(Error::Value(format!("correlation of lengths {} and {}", x1.len(), x2.len())));
    }
    if x1.len() < 2 {
        return Err(Error::Value("correlation needs at least 2 samples".into()));
    }
    let n = x1.len() as f64;
    let m1 = x1.iter().sum::<f64>() / n;
    let m2 = x2.iter().sum::<f64>() / n;
    let (mut dot, mut s1, mut s2) = (0.0, 0.0, 0.0);
    for (a, b) in x1.iter().zip(x2) {
        let (da, db) = (a - m1, b - m2);
        dot += da * db;
        s1 += da * da;
        s2 += db * db;
    }
    let denom = (s1 * s2).sqrt();
    if denom <= f64::EPSILON * f64::EPSILON * n || !denom.is_finite() {
        return Err(Error::Degenerate("correlation with a constant series".into()));
    }
    Ok((dot / denom).clamp(-1.0, 1.0))
}

pub fn pearson_cc(x1: &TimeSeries, x2: &TimeSeries) -> Result<f64> {
    pearson(x1.samples(), x2.samples())
}

/// Central differences scaled by the sample rate, one-sided at both ends.
/// Order 2 applies the first-order operator twice.
pub fn derivative(series: &TimeSeries, order: u8) -> Result<TimeSeries> {
    if series.len() < 3 {
        return Err(Error::Value(format!("derivative needs at least 3 samples, got {}", series.len())));
    }
    match order {
        1 => series.with_samples(first_difference(series.samples(), series.fps())),
        2 => {
            let d = first_difference(series.samples(), series.fps());
            series.with_samples(first_difference(&d, series.fps()))
        }
        _ => Err(Error::Value(format!("derivative order must be 1 or 2, got {order}"))),
    }
}

fn first_difference(x: &[f64], fps: f64) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| match i {
            0 => (x[1] - x[0]) * fps,
            _ if i == n - 1 => (x[n - 1] - x[n - 2]) * fps,
            _ => (x[i + 1] - x[i - 1]) * fps / 2.0,
        })
        .collect()
}

/// Direction of travel per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityAngle {
    /// Radians in (-pi, pi].
    pub angle: TimeSeries,
    /// False where the speed is zero to rounding (at most `STILL_RATIO` of
    /// the peak speed); the angle there is reported as 0.
    pub valid: Vec<bool>,
}

pub const STILL_RATIO: f64 = 1e-9;

pub fn velocity_angle(x: &TimeSeries, y: &TimeSeries) -> Result<VelocityAngle> {
    if x.len() != y.len() {
        return Err(Error::Value(format!("trajectory axes have lengths {} and {}", x.len(), y.len())));
    }
    let dx = derivative(x, 1)?;
    let dy = derivative(y, 1)?;
    let speed: Vec<f64> = dx.samples().iter().zip(dy.samples()).map(|(a, b)| a.hypot(*b)).collect();
    let still = STILL_RATIO * speed.iter().cloned().fold(0.0, f64::max);
    let mut valid = Vec::with_capacity(x.len());
    let angle = dx
        .samples()
        .iter()
        .zip(dy.samples())
        .zip(&speed)
        .map(|((&vx, &vy), &v)| {
            let moving = v > still;
            valid.push(moving);
            if !moving {
                return 0.0;
            }
            let a = vy.atan2(vx);
            if a <= -PI {
                PI
            } else {
                a
            }
        })
        .collect();
    Ok(VelocityAngle { angle: x.with_samples(angle)?, valid })
}

/// Finds the shift of `b` relative to `a` (`b[i] ≈ a[i - lag]`) within
/// `±max_lag` that maximises the signed correlation of the overlap.
pub fn align_by_lag(a: &TimeSeries, b: &TimeSeries, max_lag: usize) -> Result<(isize, f64)> {
    align_slices(a.samples(), b.samples(), max_lag)
}

pub fn align_slices(a: &[f64], b: &[f64], max_lag: usize) -> Result<(isize, f64)> {
    if a.len() != b.len() {
        return Err(Error::Value(format!("alignment of lengths {} and {}", a.len(), b.len())));
    }
    let n = a.len();
    if 2 * max_lag >= n {
        return Err(Error::Value(format!("max lag {max_lag} must be below half the length {n}")));
    }
    let mut best: Option<(isize, f64)> = None;
    for lag in -(max_lag as isize)..=max_lag as isize {
        let k = lag.unsigned_abs();
        let (sa, sb) = if lag >= 0 { (&a[..n - k], &b[k..]) } else { (&a[k..], &b[..n - k]) };
        match pearson(sa, sb) {
            Ok(cc) if best.is_none_or(|(_, c)| cc > c) => best = Some((lag, cc)),
            Ok(_) | Err(Error::Degenerate(_)) => {}
            Err(e) => return Err(e),
        }
    }
    best.ok_or_else(|| Error::Degenerate("every overlap is constant".into()))
}

/// Linear interpolation onto `n` evenly spaced points spanning the original
/// time extent. The result keeps `t0` and gets the matching sample rate.
pub fn resample_linear(series: &TimeSeries, n: usize) -> Result<TimeSeries> {
    if n < 2 || series.len() < 2 {
        return Err(Error::Value(format!("resampling {} samples onto {n} points", series.len())));
    }
    let x = series.samples();
    let last = (x.len() - 1) as f64;
    let step = last / (n - 1) as f64;
    let out = (0..n)
        .map(|j| {
            let p = (j as f64 * step).min(last);
            let i = (p.floor() as usize).min(x.len() - 2);
            let w = p - i as f64;
            x[i] + w * (x[i + 1] - x[i])
        })
        .collect();
    let fps = series.fps() / step;
    TimeSeries::with_start(out, fps, series.t0())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ts(v: Vec<f64>) -> TimeSeries {
        TimeSeries::new(v, 60.0).unwrap()
    }

    #[test]
    fn asymmetry_values() {
        assert_eq!(asymmetry(2.0, 2.0).unwrap(), 0.0);
        assert_eq!(asymmetry(3.0, 1.0).unwrap(), 0.5);
        assert_eq!(asymmetry(1.0, 0.0).unwrap(), 1.0);
        assert!(asymmetry(0.0, 0.0).is_err());
        assert!(asymmetry(-1.0, 2.0).is_err());
    }

    #[test]
    fn pearson_values() {
        let x = ts(vec![1.0, 2.0, 3.0]);
        let y = ts(vec![1.0, 2.0, 3.5]);
        // centred x = (-1, 0, 1), centred y = (-7/6, -1/6, 4/3)
        let oracle = 2.5 / (2.0f64.sqrt() * (49.0f64 / 36.0 + 1.0 / 36.0 + 16.0 / 9.0).sqrt());
        assert!((pearson_cc(&x, &y).unwrap() - oracle).abs() < 1e-12);
        assert!((oracle - 0.99340).abs() < 1e-5);
        assert!((pearson_cc(&x, &x).unwrap() - 1.0).abs() < 1e-12);
        let neg = x.map(|v| -v).unwrap();
        assert!((pearson_cc(&x, &neg).unwrap() + 1.0).abs() < 1e-12);
        assert!(matches!(pearson_cc(&x, &ts(vec![2.0; 3])), Err(Error::Degenerate(_))));
    }

    #[test]
    fn derivative_of_linear_and_constant() {
        let lin = ts((0..20).map(|i| 0.5 * i as f64).collect());
        assert!(derivative(&lin, 1).unwrap().samples().iter().all(|v| (v - 30.0).abs() < 1e-9));
        assert!(derivative(&lin, 2).unwrap().samples().iter().all(|v| v.abs() < 1e-9));
        assert!(derivative(&ts(vec![3.0; 5]), 1).unwrap().samples().iter().all(|&v| v == 0.0));
        assert!(derivative(&ts(vec![1.0, 2.0]), 1).is_err());
        assert!(derivative(&lin, 3).is_err());
    }

    #[test]
    fn derivative_peak_of_sinusoid() {
        for &(f, fps) in &[(1.0, 30.0), (2.0, 60.0), (3.0, 120.0)] {
            let s = TimeSeries::new((0..(4.0 * fps) as usize).map(|i| (2.0 * PI * f * i as f64 / fps).sin()).collect(), fps)
                .unwrap();
            let d = derivative(&s, 1).unwrap();
            let peak = d.samples().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!((peak / (2.0 * PI * f) - 1.0).abs() < 0.02, "f={f} fps={fps}");
        }
    }

    #[test]
    fn velocity_angle_axes_and_circle() {
        let t: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let zero = ts(vec![0.0; 30]);
        let a = velocity_angle(&ts(t.clone()), &zero).unwrap();
        assert!(a.angle.samples().iter().all(|&v| v == 0.0));
        let a = velocity_angle(&zero, &ts(t)).unwrap();
        assert!(a.angle.samples().iter().all(|v| (v - PI / 2.0).abs() < 1e-12));
        let still = velocity_angle(&zero, &zero).unwrap();
        assert!(still.valid.iter().all(|v| !v));

        // counter-clockwise circle: heading = phase + pi/2, wrapped
        let w = 0.1;
        let x = ts((0..200).map(|i| (w * i as f64).cos()).collect());
        let y = ts((0..200).map(|i| (w * i as f64).sin()).collect());
        let a = velocity_angle(&x, &y).unwrap();
        for i in 1..199 {
            let expect = (w * i as f64 + PI / 2.0 + PI).rem_euclid(2.0 * PI) - PI;
            let mut diff = (a.angle[i] - expect).abs();
            diff = diff.min(2.0 * PI - diff);
            assert!(diff < 1e-9, "i={i}");
            assert!(a.angle[i] > -PI && a.angle[i] <= PI);
        }
    }

    #[test]
    fn align_recovers_shift() {
        let period = 40.0;
        let a: Vec<f64> = (0..200).map(|i| (2.0 * PI * i as f64 / period).sin()).collect();
        let b: Vec<f64> = (0..200).map(|i| (2.0 * PI * (i as f64 - 5.0) / period).sin()).collect();
        let (lag, cc) = align_by_lag(&ts(a.clone()), &ts(b), 10).unwrap();
        assert_eq!(lag, 5);
        assert!((cc - 1.0).abs() < 1e-12);
        let (lag, cc) = align_by_lag(&ts(a.clone()), &ts(a.clone()), 10).unwrap();
        assert_eq!((lag, (cc * 1e9).round()), (0, 1e9));
        let neg: Vec<f64> = a.iter().map(|v| -v).collect();
        let (lag0, _) = align_slices(&a, &neg, 0).unwrap();
        assert_eq!(lag0, 0);
        assert!((align_slices(&a, &neg, 0).unwrap().1 + 1.0).abs() < 1e-12);
        assert!(align_slices(&a, &a, 100).is_err());
    }

    #[test]
    fn resample_cases() {
        let s = ts((0..25).map(|i| (i as f64 * 0.3).sin()).collect());
        let same = resample_linear(&s, 25).unwrap();
        for (a, b) in same.samples().iter().zip(s.samples()) {
            assert!((a - b).abs() < 1e-12);
        }
        let ramp = ts((0..10).map(|i| 2.0 * i as f64 + 1.0).collect());
        let r = resample_linear(&ramp, 37).unwrap();
        for j in 0..37 {
            let p = j as f64 * 9.0 / 36.0;
            assert!((r[j] - (2.0 * p + 1.0)).abs() < 1e-12);
        }
        assert!((r.duration() - r.len() as f64 / r.fps()).abs() < 1e-12);
        assert!(resample_linear(&ramp, 1).is_err());

        // 3 cycles, 600 samples -> 60 -> 600, unit amplitude
        let sine: Vec<f64> = (0..600).map(|i| (2.0 * PI * 3.0 * i as f64 / 599.0).sin()).collect();
        let down = resample_linear(&ts(sine.clone()), 60).unwrap();
        let up = resample_linear(&down, 600).unwrap();
        let rms = (up.samples().iter().zip(&sine).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / 600.0).sqrt();
        assert!(rms < 0.01, "rms {rms}");
    }

    proptest! {
        #[test]
        fn asymmetry_symmetric_and_scale_invariant(a in 0.0f64..100.0, b in 0.01f64..100.0, c in 0.01f64..50.0) {
            let v = asymmetry(a, b).unwrap();
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert!((v - asymmetry(b, a).unwrap()).abs() < 1e-12);
            prop_assert!((v - asymmetry(c * a, c * b).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn pearson_bounded_and_affine_invariant(
            v in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 3..50),
            s in 0.1f64..10.0, o in -5.0f64..5.0,
        ) {
            let (x, y): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
            if let Ok(cc) = pearson(&x, &y) {
                prop_assert!(cc.abs() <= 1.0);
                let y2: Vec<f64> = y.iter().map(|v| s * v + o).collect();
                if let Ok(cc2) = pearson(&x, &y2) {
                    prop_assert!((cc - cc2).abs() < 1e-9);
                }
            }
        }

        #[test]
        fn extrema_invariant_under_positive_affine(
            f in 0.5f64..3.0, alpha in 0.1f64..20.0, beta in -10.0f64..10.0, phase in 0.0f64..6.0,
        ) {
            let x: Vec<f64> = (0..300).map(|i| (2.0 * PI * f * i as f64 / 60.0 + phase).sin()
                + 0.3 * (2.0 * PI * 2.3 * f * i as f64 / 60.0).cos()).collect();
            let y: Vec<f64> = x.iter().map(|v| alpha * v + beta).collect();
            match (find_extrema(&ts(x), 0.2), find_extrema(&ts(y), 0.2)) {
                (Ok(a), Ok(b)) => {
                    prop_assert_eq!(&a.maxima_idx, &b.maxima_idx);
                    prop_assert_eq!(&a.minima_idx, &b.minima_idx);
                    for (p, q) in a.amplitudes.iter().zip(&b.amplitudes) {
                        prop_assert!((alpha * p - q).abs() < 1e-9 * alpha.max(1.0));
                    }
                }
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "detection differs under affine map"),
            }
        }

        #[test]
        fn velocity_angle_translation_invariant(dx in -50.0f64..50.0, dy in -50.0f64..50.0) {
            let x: Vec<f64> = (0..40).map(|i| (i as f64 * 0.2).cos() * 3.0).collect();
            let y: Vec<f64> = (0..40).map(|i| (i as f64 * 0.35).sin()).collect();
            let a = velocity_angle(&ts(x.clone()), &ts(y.clone())).unwrap();
            let b = velocity_angle(
                &ts(x.iter().map(|v| v + dx).collect()),
                &ts(y.iter().map(|v| v + dy).collect()),
            ).unwrap();
            for (p, q) in a.angle.samples().iter().zip(b.angle.samples()) {
                let d = (p - q).abs();
                prop_assert!(d.min(2.0 * PI - d) < 1e-6);
            }
        }

        #[test]
        fn align_recovers_any_shift(k in -12isize..=12, period in 15usize..40) {
            let a: Vec<f64> = (0..240).map(|i| (2.0 * PI * i as f64 / period as f64).sin()
                + 0.4 * (4.0 * PI * i as f64 / period as f64).cos()).collect();
            let b: Vec<f64> = (0..240).map(|i| {
                let t = i as f64 - k as f64;
                (2.0 * PI * t / period as f64).sin() + 0.4 * (4.0 * PI * t / period as f64).cos()
            }).collect();
            let max_lag = (period / 2 - 1).max(k.unsigned_abs());
            let (lag, cc) = align_slices(&a, &b, max_lag).unwrap();
            // for periodic signals the shift is unique modulo the period
            prop_assert_eq!((lag - k).rem_euclid(period as isize), 0);
            prop_assert!((cc - 1.0).abs() < 1e-9);
        }
    }
}
