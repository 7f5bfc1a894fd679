use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Running median over a centred window; the window shrinks symmetrically at
/// the edges so that sample `i` always sits in the middle of its neighbourhood.
pub fn median_filter(series: &TimeSeries, window: usize) -> Result<TimeSeries> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(Error::Value(format!("median window must be odd and positive, got {window}")));
    }
    let x = series.samples();
    let n = x.len();
    let half = window / 2;
    let mut buf = Vec::with_capacity(window);
    let out = (0..n)
        .map(|i| {
            let h = half.min(i).min(n - 1 - i);
            buf.clear();
            buf.extend_from_slice(&x[i - h..=i + h]);
            buf.sort_by(f64::total_cmp);
            buf[h]
        })
        .collect();
    series.with_samples(out)
}

/// Savitzky-Golay smoothing: each output sample is the value at that sample of
/// the least-squares polynomial of degree `order` fitted over `window` samples.
///
/// Interior samples use the centred window. The first and last `window / 2`
/// samples use the first/last full window, evaluated off-centre, so any
/// polynomial of degree <= `order` is reproduced at every sample. Series
/// shorter than the window fall back to the longest odd window that fits.
pub fn savgol_filter(series: &TimeSeries, window: usize, order: usize) -> Result<TimeSeries> {
    if window < 3 || window.is_multiple_of(2) {
        return Err(Error::Value(format!("Savitzky-Golay window must be odd and >= 3, got {window}")));
    }
    if order >= window {
        return Err(Error::Value(format!("polynomial order {order} must be below window {window}")));
    }
    let x = series.samples();
    let n = x.len();
    let window = if n >= window { window } else if n % 2 == 1 { n } else { n.saturating_sub(1) };
    if window <= 1 {
        return Ok(series.clone());
    }
    let order = order.min(window - 1);
    let hat = hat_matrix(window, order);
    let half = window / 2;

    let apply = |row: usize, start: usize| -> f64 { (0..window).map(|j| hat[(row, j)] * x[start + j]).sum() };
    let out = (0..n)
        .map(|i| {
            if i < half {
                apply(i, 0)
            } else if i + half >= n {
                apply(i + window - n, n - window)
            } else {
                apply(half, i - half)
            }
        })
        .collect();
    series.with_samples(out)
}

/// Projection onto degree-`order` polynomials over `window` equally spaced
/// points; row `r` holds the weights that produce the fitted value at point `r`.
fn hat_matrix(window: usize, order: usize) -> DMatrix<f64> {
    let half = (window / 2) as f64;
    let vander = DMatrix::from_fn(window, order + 1, |i, p| ((i as f64 - half) / half).powi(p as i32));
    let q = vander.qr().q();
    &q * q.transpose()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ts(v: Vec<f64>) -> TimeSeries {
        TimeSeries::new(v, 60.0).unwrap()
    }

    #[test]
    fn median_window_one_is_identity() {
        let s = ts(vec![3.0, -1.0, 7.0, 2.0]);
        assert_eq!(median_filter(&s, 1).unwrap(), s);
    }

    #[test]
    fn median_removes_single_spike() {
        let s = ts(vec![0.0, 0.0, 10.0, 0.0, 0.0]);
        assert_eq!(median_filter(&s, 3).unwrap().samples(), &[0.0; 5]);
    }

    #[test]
    fn median_rejects_even_window() {
        assert!(median_filter(&ts(vec![1.0, 2.0]), 4).is_err());
        assert!(median_filter(&ts(vec![1.0, 2.0]), 0).is_err());
    }

    #[test]
    fn median_matches_brute_force_on_monotone_series() {
        let x: Vec<f64> = (0..40).map(|i| (i as f64).powf(1.3) - 0.2 * i as f64).collect();
        let out = median_filter(&ts(x.clone()), 5).unwrap();
        for i in 0..x.len() {
            let h = 2usize.min(i).min(x.len() - 1 - i);
            let mut w = x[i - h..=i + h].to_vec();
            w.sort_by(f64::total_cmp);
            assert_eq!(out[i], w[h]);
        }
        assert_eq!(out.samples(), x.as_slice());
    }

    #[test]
    fn savgol_reproduces_cubic_everywhere() {
        let x: Vec<f64> = (0..50)
            .map(|i| {
                let t = i as f64 / 60.0;
                1.5 - 2.0 * t + 3.0 * t * t - 0.7 * t * t * t
            })
            .collect();
        let out = savgol_filter(&ts(x.clone()), 11, 3).unwrap();
        for (a, b) in out.samples().iter().zip(&x) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn savgol_constant_unchanged() {
        let out = savgol_filter(&ts(vec![4.25; 30]), 11, 3).unwrap();
        assert!(out.samples().iter().all(|v| (v - 4.25).abs() < 1e-12));
    }

    #[test]
    fn savgol_reduces_noise_on_sinusoid() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let clean: Vec<f64> = (0..300).map(|i| (2.0 * std::f64::consts::PI * 1.5 * i as f64 / 60.0).sin()).collect();
        let noisy: Vec<f64> = clean.iter().map(|c| c + rng.random_range(-0.1..0.1)).collect();
        let out = savgol_filter(&ts(noisy.clone()), 11, 3).unwrap();
        let rms = |a: &[f64]| (a.iter().zip(&clean).map(|(x, c)| (x - c).powi(2)).sum::<f64>() / a.len() as f64).sqrt();
        assert!(rms(out.samples()) < rms(&noisy));
    }

    #[test]
    fn savgol_parameter_errors() {
        let s = ts(vec![0.0; 20]);
        assert!(savgol_filter(&s, 10, 3).is_err());
        assert!(savgol_filter(&s, 1, 0).is_err());
        assert!(savgol_filter(&s, 5, 5).is_err());
    }

    #[test]
    fn savgol_short_series_falls_back() {
        let s = ts(vec![1.0, 2.0, 3.0, 4.0]);
        let out = savgol_filter(&s, 11, 3).unwrap();
        for (a, b) in out.samples().iter().zip(s.samples()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn filters_preserve_length_and_rate(v in prop::collection::vec(-10.0f64..10.0, 1..80)) {
            let s = ts(v);
            let m = median_filter(&s, 5).unwrap();
            let g = savgol_filter(&s, 11, 3).unwrap();
            prop_assert_eq!(m.len(), s.len());
            prop_assert_eq!(g.len(), s.len());
            prop_assert_eq!(m.fps(), s.fps());
            prop_assert_eq!(g.fps(), s.fps());
        }

        #[test]
        fn savgol_reproduces_random_cubics(c in prop::array::uniform4(-5.0f64..5.0), n in 11usize..60) {
            let x: Vec<f64> = (0..n).map(|i| {
                let t = i as f64 / 30.0;
                c[0] + c[1] * t + c[2] * t * t + c[3] * t * t * t
            }).collect();
            let out = savgol_filter(&ts(x.clone()), 11, 3).unwrap();
            for (a, b) in out.samples().iter().zip(&x) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }

        #[test]
        fn median_output_has_no_isolated_spike(v in prop::collection::vec(-10.0f64..10.0, 3..60)) {
            let out = median_filter(&ts(v.clone()), 3).unwrap();
            for i in 1..v.len() - 1 {
                let lo = v[i - 1].min(v[i + 1]);
                let hi = v[i - 1].max(v[i + 1]);
                prop_assert!(out[i] >= lo && out[i] <= hi);
            }
        }
    }
}
