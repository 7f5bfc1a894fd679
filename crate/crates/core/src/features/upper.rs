//! Finger tapping, finger-to-finger and forearm-roll features.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{asym, FeatureConfig, FeatureMap, StatSummary, MS, MSM, SIDES};
use crate::error::{Error, Result};
use crate::pose::{body, hand, PoseRecording, Side, Skeleton, TestKind};
use crate::series::TimeSeries;
use crate::signal::{self, find_extrema_with, CycleSet, PeriodBasis};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UpperConfig {
    /// Minimum extremum prominence as a fraction of the signal range.
    pub prominence_frac: f64,
    pub period_basis: PeriodBasis,
    /// Common length of per-cycle velocity-angle series before comparison.
    pub resample_points: usize,
    /// Cycles whose horizontal extent is below this are skipped by the
    /// path-smoothness fit (reference-length units).
    pub min_fit_x_range: f64,
}

impl Default for UpperConfig {
    fn default() -> Self {
        Self { prominence_frac: 0.2, period_basis: PeriodBasis::Maxima, resample_points: 100, min_fit_x_range: 1e-6 }
    }
}

impl UpperConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.prominence_frac > 0.0 && self.prominence_frac < 1.0) {
            return Err(Error::Value("upper.prominence_frac must lie in (0, 1)".into()));
        }
        if self.resample_points < 2 {
            return Err(Error::Value("upper.resample_points must be at least 2".into()));
        }
        if !(self.min_fit_x_range >= 0.0) {
            return Err(Error::Value("upper.min_fit_x_range must be non-negative".into()));
        }
        Ok(())
    }
}

/// Thumb-tip to index-tip distance of one hand, per frame.
pub fn ft_distance(rec: &PoseRecording, side: Side) -> Result<TimeSeries> {
    let thumb = rec.track2d(Skeleton::Hand2D, hand::THUMB_TIP, side)?;
    let index = rec.track2d(Skeleton::Hand2D, hand::INDEX_TIP, side)?;
    TimeSeries::new(thumb.iter().zip(&index).map(|(a, b)| a.distance(b)).collect(), rec.fps())
}

/// Per-frame `|s_r - s_l| / |s_r|` for a body joint, summarised over frames.
pub fn stability(rec: &PoseRecording, joint: usize) -> Result<StatSummary> {
    let right = rec.track2d(Skeleton::Body2D, joint, Side::Right)?;
    let left = rec.track2d(Skeleton::Body2D, joint, Side::Left)?;
    let mut ratios = Vec::with_capacity(right.len());
    for (i, (r, l)) in right.iter().zip(&left).enumerate() {
        let norm = r.norm();
        if norm <= 0.0 {
            return Err(Error::Degenerate(format!("right joint {joint} sits at the origin in frame {i}")));
        }
        ratios.push(r.distance(l) / norm);
    }
    StatSummary::from_values(&ratios).ok_or_else(|| Error::Degenerate("no frames".into()))
}

fn smoothed(cfg: &FeatureConfig, kind: TestKind, series: &TimeSeries) -> Result<TimeSeries> {
    cfg.preprocess.smooth_for(kind, series)
}

fn cycles_of(cfg: &FeatureConfig, series: &TimeSeries) -> Result<CycleSet> {
    find_extrema_with(series, cfg.upper.prominence_frac, cfg.upper.period_basis)
}

fn abs_max(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn abs_mean(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs()).sum::<f64>() / x.len() as f64
}

fn mean(x: &[f64]) -> Option<f64> {
    (!x.is_empty()).then(|| x.iter().sum::<f64>() / x.len() as f64)
}

/// Per-cycle values of `f` over each window between consecutive maxima.
fn per_cycle(cycles: &CycleSet, x: &[f64], f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    cycles.cycle_windows().into_iter().map(|(a, b)| f(&x[a..=b])).collect()
}

struct TapSide {
    amplitude: Vec<f64>,
    period: Vec<f64>,
    freq: Vec<f64>,
    mean_speed: Option<f64>,
    max_speed: Vec<f64>,
    mean_accel: Option<f64>,
    max_accel: Vec<f64>,
    rate: f64,
}

fn tap_side(rec: &PoseRecording, side: Side, cfg: &FeatureConfig) -> Result<TapSide> {
    let d = smoothed(cfg, TestKind::FingerTap, &ft_distance(rec, side)?)?;
    let cycles = cycles_of(cfg, &d)?;
    let v = signal::derivative(&d, 1)?;
    let a = signal::derivative(&d, 2)?;
    Ok(TapSide {
        amplitude: cycles.amplitudes.clone(),
        freq: cycles.periods.iter().map(|p| 1.0 / p).collect(),
        period: cycles.periods.clone(),
        mean_speed: mean(&per_cycle(&cycles, v.samples(), abs_mean)),
        max_speed: per_cycle(&cycles, v.samples(), abs_max),
        mean_accel: mean(&per_cycle(&cycles, a.samples(), abs_mean)),
        max_accel: per_cycle(&cycles, a.samples(), abs_max),
        rate: cycles.maxima_idx.len() as f64 / rec.duration(),
    })
}

pub(crate) fn ft_feature_map(rec: &PoseRecording, cfg: &FeatureConfig) -> Result<FeatureMap> {
    let [r, l] = [tap_side(rec, Side::Right, cfg)?, tap_side(rec, Side::Left, cfg)?];
    let mut m = FeatureMap::default();
    let quantities: [(&str, fn(&TapSide) -> &Vec<f64>); 3] =
        [("amplitude", |t| &t.amplitude), ("period", |t| &t.period), ("freq", |t| &t.freq)];
    for (name, get) in quantities {
        let sr = StatSummary::from_values(get(&r));
        let sl = StatSummary::from_values(get(&l));
        m.summary(&format!("ft.{name}.right"), sr, MSM);
        m.summary(&format!("ft.{name}.left"), sl, MSM);
        m.put(format!("ft.{name}.asym"), asym(sr.map(|s| s.mean), sl.map(|s| s.mean)));
    }
    m.put("ft.mean_speed.right", r.mean_speed);
    m.put("ft.mean_speed.left", l.mean_speed);
    m.put("ft.max_speed.right.mean", mean(&r.max_speed));
    m.put("ft.max_speed.left.mean", mean(&l.max_speed));
    m.put("ft.max_speed.asym", asym(mean(&r.max_speed), mean(&l.max_speed)));
    m.put("ft.mean_accel.right", r.mean_accel);
    m.put("ft.mean_accel.left", l.mean_accel);
    m.summary("ft.max_accel.right", StatSummary::from_values(&r.max_accel), MSM);
    m.summary("ft.max_accel.left", StatSummary::from_values(&l.max_accel), MSM);
    m.put("ft.max_accel.asym", asym(mean(&r.max_accel), mean(&l.max_accel)));
    m.put("ft.tap_rate.right", Some(r.rate));
    m.put("ft.tap_rate.left", Some(l.rate));
    m.summary("ft.wrist_stability", Some(stability(rec, body::WRIST)?), MSM);
    m.summary("ft.elbow_stability", Some(stability(rec, body::ELBOW)?), MSM);
    Ok(m)
}

/// Smoothed INDEX_MID trajectory of one hand.
fn finger_track(rec: &PoseRecording, side: Side, cfg: &FeatureConfig) -> Result<(TimeSeries, TimeSeries)> {
    let x = rec.keypoint_series(Skeleton::Hand2D, hand::INDEX_MID, side, crate::pose::Axis::X)?;
    let y = rec.keypoint_series(Skeleton::Hand2D, hand::INDEX_MID, side, crate::pose::Axis::Y)?;
    Ok((smoothed(cfg, TestKind::FingerToFinger, &x)?, smoothed(cfg, TestKind::FingerToFinger, &y)?))
}

/// `(CC(left x, -right x), CC(left y, right y))` over the whole recording.
pub fn ftf_symmetry(rec: &PoseRecording, cfg: &FeatureConfig) -> Result<(f64, f64)> {
    let (rx, ry) = finger_track(rec, Side::Right, cfg)?;
    let (lx, ly) = finger_track(rec, Side::Left, cfg)?;
    let neg_rx: Vec<f64> = rx.samples().iter().map(|v| -v).collect();
    Ok((signal::pearson(lx.samples(), &neg_rx)?, signal::pearson(ly.samples(), ry.samples())?))
}

fn polyline_length(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2).zip(y.windows(2)).map(|(a, b)| (a[1] - a[0]).hypot(b[1] - b[0])).sum()
}

/// Least-squares `y = c0 + c1 z + c2 z^2` with `z` the centred, scaled `x`.
/// Returns a closure evaluating the fit at any `x`.
fn fit_quadratic(x: &[f64], y: &[f64]) -> Result<impl Fn(f64) -> f64> {
    let (lo, hi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let centre = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let a = DMatrix::from_fn(x.len(), 3, |i, p| ((x[i] - centre) / half).powi(p as i32));
    let b = DVector::from_column_slice(y);
    let coef = a
        .svd(true, true)
        .solve(&b, 1e-12)
        .map_err(|e| Error::Fit(format!("least-squares solve failed: {e}")))?;
    Ok(move |v: f64| {
        let z = (v - centre) / half;
        coef[0] + z * (coef[1] + z * coef[2])
    })
}

/// Ratio of the trajectory length to the length of the fitted `y(x)`
/// parabola traced through the same abscissae.
pub fn path_smoothness(x: &[f64], y: &[f64], min_x_range: f64) -> Result<f64> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(Error::Fit(format!("path smoothness needs at least 3 points, got {}", x.len())));
    }
    let (lo, hi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if hi - lo < min_x_range.max(f64::MIN_POSITIVE) {
        return Err(Error::Fit(format!("horizontal extent {} is below {min_x_range}", hi - lo)));
    }
    let f = fit_quadratic(x, y)?;
    let fitted: Vec<f64> = x.iter().map(|&v| f(v)).collect();
    let reference = polyline_length(x, &fitted);
    if reference <= 0.0 {
        return Err(Error::Fit("fitted curve has zero length".into()));
    }
    Ok(polyline_length(x, y) / reference)
}

pub fn ftf_path_smoothness(rec: &PoseRecording, side: Side, cfg: &FeatureConfig) -> Result<Option<StatSummary>> {
    let (x, y) = finger_track(rec, side, cfg)?;
    let cycles = cycles_of(cfg, &y)?;
    Ok(path_smoothness_per_cycle(&cycles, &x, &y, cfg.upper.min_fit_x_range))
}

fn path_smoothness_per_cycle(cycles: &CycleSet, x: &TimeSeries, y: &TimeSeries, min_range: f64) -> Option<StatSummary> {
    let mut values = Vec::new();
    for (a, b) in cycles.cycle_windows() {
        match path_smoothness(&x.samples()[a..=b], &y.samples()[a..=b], min_range) {
            Ok(ps) => values.push(ps),
            Err(e) => log::warn!("skipping cycle [{a}, {b}] in path smoothness: {e}"),
        }
    }
    StatSummary::from_values(&values)
}

/// Mean and spread of the pairwise correlation between per-cycle velocity
/// angle series, each resampled to `points` samples.
pub fn velocity_angle_symmetry(
    cycles: &CycleSet,
    x: &TimeSeries,
    y: &TimeSeries,
    points: usize,
) -> Result<StatSummary> {
    let windows = cycles.cycle_windows();
    if windows.len() < 2 {
        return Err(Error::NoCycles(format!("velocity-angle symmetry needs 2 cycles, got {}", windows.len())));
    }
    let theta = signal::velocity_angle(x, y)?.angle;
    let per_cycle: Vec<TimeSeries> = windows
        .iter()
        .map(|&(a, b)| signal::resample_linear(&theta.slice(a, b + 1)?, points))
        .collect::<Result<_>>()?;
    let mut ccs = Vec::new();
    for i in 0..per_cycle.len() {
        for j in i + 1..per_cycle.len() {
            match signal::pearson_cc(&per_cycle[i], &per_cycle[j]) {
                Ok(cc) => ccs.push(cc),
                Err(Error::Degenerate(_)) => log::warn!("constant velocity angle in cycle pair ({i}, {j})"),
                Err(e) => return Err(e),
            }
        }
    }
    StatSummary::from_values(&ccs).ok_or_else(|| Error::Degenerate("every cycle pair has a constant angle".into()))
}

/// The left track is mirrored first so both hands share one angle convention.
pub fn ftf_velocity_angle_symmetry(rec: &PoseRecording, side: Side, cfg: &FeatureConfig) -> Result<StatSummary> {
    let (mut x, y) = finger_track(rec, side, cfg)?;
    if side == Side::Left {
        x = x.with_samples(x.samples().iter().map(|v| -v).collect())?;
    }
    let cycles = cycles_of(cfg, &y)?;
    velocity_angle_symmetry(&cycles, &x, &y, cfg.upper.resample_points)
}

/// Path length over each half cycle divided by its duration.
fn half_cycle_speeds(cycles: &CycleSet, x: &TimeSeries, y: &TimeSeries) -> Vec<f64> {
    let mut ext: Vec<usize> = cycles.maxima_idx.iter().chain(&cycles.minima_idx).copied().collect();
    ext.sort_unstable();
    ext.windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            polyline_length(&x.samples()[a..=b], &y.samples()[a..=b]) * x.fps() / (b - a) as f64
        })
        .collect()
}

pub(crate) fn ftf_feature_map(rec: &PoseRecording, cfg: &FeatureConfig) -> Result<FeatureMap> {
    let mut m = FeatureMap::default();
    let (sx, sy) = ftf_symmetry(rec, cfg)?;
    m.put("ftf.sx", Some(sx));
    m.put("ftf.sy", Some(sy));
    for side in SIDES {
        let (x, y) = finger_track(rec, side, cfg)?;
        let cycles = cycles_of(cfg, &y)?;
        m.summary(&format!("ftf.period.{side}"), StatSummary::from_values(&cycles.periods), MS);
        m.summary(&format!("ftf.speed.{side}"), StatSummary::from_values(&half_cycle_speeds(&cycles, &x, &y)), MS);
        m.summary(
            &format!("ftf.path_smoothness.{side}"),
            path_smoothness_per_cycle(&cycles, &x, &y, cfg.upper.min_fit_x_range),
            MS,
        );
        let vas = velocity_angle_symmetry(&cycles, &x, &y, cfg.upper.resample_points)?;
        m.summary(&format!("ftf.velocity_angle_sym.{side}"), Some(vas), MS);
    }
    Ok(m)
}

struct RollSide {
    amplitude: Vec<f64>,
    period: Vec<f64>,
    max_speed: Vec<f64>,
    max_accel: Vec<f64>,
    roll_speed: Vec<f64>,
    rate: f64,
}

fn roll_side(rec: &PoseRecording, side: Side, cfg: &FeatureConfig) -> Result<RollSide> {
    let raw = rec.keypoint_series(Skeleton::Body2D, body::WRIST, side, crate::pose::Axis::Y)?;
    let y = smoothed(cfg, TestKind::ForearmRoll, &raw)?;
    let cycles = cycles_of(cfg, &y)?;
    let v = signal::derivative(&y, 1)?;
    let a = signal::derivative(&y, 2)?;
    let amplitude = per_cycle(&cycles, y.samples(), |w| {
        let (lo, hi) = w.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        hi - lo
    });
    let windows = cycles.cycle_windows();
    let period: Vec<f64> = windows.iter().map(|&(a, b)| (b - a) as f64 / rec.fps()).collect();
    let roll_speed = amplitude.iter().zip(&period).map(|(amp, p)| amp / (0.5 * p)).collect();
    Ok(RollSide {
        amplitude,
        period,
        max_speed: per_cycle(&cycles, v.samples(), abs_max),
        max_accel: per_cycle(&cycles, a.samples(), abs_max),
        roll_speed,
        rate: cycles.maxima_idx.len() as f64 / rec.duration(),
    })
}

pub(crate) fn fr_feature_map(rec: &PoseRecording, cfg: &FeatureConfig) -> Result<FeatureMap> {
    let [r, l] = [roll_side(rec, Side::Right, cfg)?, roll_side(rec, Side::Left, cfg)?];
    let mut m = FeatureMap::default();
    let quantities: [(&str, fn(&RollSide) -> &Vec<f64>); 4] = [
        ("amplitude", |s| &s.amplitude),
        ("period", |s| &s.period),
        ("max_speed", |s| &s.max_speed),
        ("max_accel", |s| &s.max_accel),
    ];
    for (name, get) in quantities {
        let sr = StatSummary::from_values(get(&r));
        let sl = StatSummary::from_values(get(&l));
        m.summary(&format!("fr.{name}.right"), sr, MSM);
        m.summary(&format!("fr.{name}.left"), sl, MSM);
        m.put(format!("fr.{name}.asym"), asym(sr.map(|s| s.mean), sl.map(|s| s.mean)));
    }
    m.summary("fr.roll_speed.right", StatSummary::from_values(&r.roll_speed), MSM);
    m.summary("fr.roll_speed.left", StatSummary::from_values(&l.roll_speed), MSM);
    m.put("fr.roll_rate.right", Some(r.rate));
    m.put("fr.roll_rate.left", Some(l.rate));
    m.summary("fr.elbow_stability", Some(stability(rec, body::ELBOW)?), MSM);
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parabola_and_line_have_unit_smoothness() {
        let x: Vec<f64> = (0..50).map(|i| -1.0 + 0.04 * i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 0.3 - 1.7 * v * v + 0.2 * v).collect();
        assert!((path_smoothness(&x, &y, 1e-6).unwrap() - 1.0).abs() < 1e-3);
        let line: Vec<f64> = x.iter().map(|v| 2.0 * v - 1.0).collect();
        assert!((path_smoothness(&x, &line, 1e-6).unwrap() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn retraced_arc_has_unit_smoothness() {
        // down and back along the same parabola, as in one finger-to-finger cycle
        let u: Vec<f64> = (0..=60).map(|i| (1.0 - (2.0 * std::f64::consts::PI * i as f64 / 60.0).cos()) / 2.0).collect();
        let x: Vec<f64> = u.iter().map(|u| 0.2 + 0.8 * u).collect();
        let y: Vec<f64> = u.iter().map(|u| 1.0 - 0.9 * u * u).collect();
        let ps = path_smoothness(&x, &y, 1e-6).unwrap();
        assert!((ps - 1.0).abs() < 1e-12, "{ps}");
    }

    #[test]
    fn zigzag_raises_smoothness_monotonically() {
        let x: Vec<f64> = (0..80).map(|i| -1.0 + 0.025 * i as f64).collect();
        let ps: Vec<f64> = [0.0, 0.005, 0.01, 0.02]
            .iter()
            .map(|eps| {
                let y: Vec<f64> = x
                    .iter()
                    .enumerate()
                    .map(|(i, v)| v * v + if i % 2 == 0 { *eps } else { -eps })
                    .collect();
                // brute-force oracle for the noise-free case: polyline on the parabola
                path_smoothness(&x, &y, 1e-6).unwrap()
            })
            .collect();
        assert!((ps[0] - 1.0).abs() < 1e-12);
        assert!(ps.windows(2).all(|w| w[1] > w[0]), "{ps:?}");
    }

    #[test]
    fn vertical_path_is_a_fit_error() {
        let x = vec![0.5; 20];
        let y: Vec<f64> = (0..20).map(|i| i as f64).collect();
        assert!(matches!(path_smoothness(&x, &y, 1e-6), Err(Error::Fit(_))));
    }

    fn cycles_from(maxima: Vec<usize>) -> CycleSet {
        CycleSet { minima_idx: vec![], periods: vec![], amplitudes: vec![], maxima_idx: maxima }
    }

    #[test]
    fn repeated_cycles_have_unit_angle_symmetry() {
        let n = 181;
        let t = |i: usize| 2.0 * std::f64::consts::PI * i as f64 / 60.0;
        let x = TimeSeries::new((0..n).map(|i| t(i).cos() + 0.3 * (2.0 * t(i)).sin()).collect(), 60.0).unwrap();
        let y = TimeSeries::new((0..n).map(|i| t(i).sin()).collect(), 60.0).unwrap();
        let s = velocity_angle_symmetry(&cycles_from(vec![15, 75, 135]), &x, &y, 100).unwrap();
        assert!((s.mean - 1.0).abs() < 1e-9);
        assert!(s.std < 1e-9);
        let two = velocity_angle_symmetry(&cycles_from(vec![15, 75]), &x, &y, 100);
        assert!(matches!(two, Err(Error::NoCycles(_))));
    }
}
