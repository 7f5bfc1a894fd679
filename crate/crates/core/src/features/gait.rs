//! Stand-up-and-walk segmentation and gait features.
//!
//! Global travel comes from the 2D pelvis; foot distance and knee angles
//! come from the pelvis-relative 3D body.

use serde::{Deserialize, Serialize};

use super::{FeatureConfig, FeatureMap, StatSummary, MS, MSM};
use crate::error::{Error, Result};
use crate::pose::{body, Axis, PoseRecording, Side, Skeleton, TestKind};
use crate::preprocess;
use crate::series::TimeSeries;
use crate::signal;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaitConfig {
    /// Pelvis vertical speed (reference lengths/s) that marks a stand-up effort.
    pub stand_threshold: f64,
    /// Fraction of `stand_threshold` treated as rest when refining the
    /// stand-up boundaries.
    pub rest_fraction: f64,
    /// Time (s) the vertical speed must stay below threshold to count as standing.
    pub hold_duration: f64,
    /// Pelvis horizontal speed (reference lengths/s) that counts as walking.
    pub turn_threshold: f64,
    /// Shortest run of walking motion (s) kept as a walking segment.
    pub min_walk_duration: f64,
    pub prominence_frac: f64,
}

impl Default for GaitConfig {
    fn default() -> Self {
        Self {
            stand_threshold: 0.5,
            rest_fraction: 0.1,
            hold_duration: 0.3,
            turn_threshold: 0.25,
            min_walk_duration: 0.5,
            prominence_frac: 0.2,
        }
    }
}

impl GaitConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("gait.stand_threshold", self.stand_threshold),
            ("gait.hold_duration", self.hold_duration),
            ("gait.turn_threshold", self.turn_threshold),
            ("gait.min_walk_duration", self.min_walk_duration),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Value(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.rest_fraction > 0.0 && self.rest_fraction < 1.0) {
            return Err(Error::Value("gait.rest_fraction must lie in (0, 1)".into()));
        }
        if !(self.prominence_frac > 0.0 && self.prominence_frac < 1.0) {
            return Err(Error::Value("gait.prominence_frac must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SegmentKind {
    SU,
    W,
    TU,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "+x")]
    Positive,
    #[serde(rename = "-x")]
    Negative,
    #[serde(rename = "none")]
    None,
}

/// A frame range `[start, end)` of one activity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentLabel {
    pub kind: SegmentKind,
    pub start: usize,
    pub end: usize,
    pub direction: Direction,
}

impl SegmentLabel {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }

    pub fn contains(&self, i: usize) -> bool {
        (self.start..self.end).contains(&i)
    }
}

/// One step, centred on a maximum of the foot distance inside a walk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaitStep {
    /// Preceding minimum, or the walk start when none lies inside the walk.
    pub start_idx: usize,
    pub peak_idx: usize,
    /// Following minimum, or the last walk frame when none lies inside the walk.
    pub end_idx: usize,
    /// Seconds since the previous step's peak in the same walk.
    pub step_time: Option<f64>,
    pub step_length: f64,
    /// Foot distance at the preceding minimum, when it lies inside the walk.
    pub step_width: Option<f64>,
}

/// Smoothed pelvis track and its velocity.
struct PelvisMotion {
    x: TimeSeries,
    y: TimeSeries,
    vx: TimeSeries,
    vy: TimeSeries,
}

fn pelvis_motion(rec: &PoseRecording, cfg: &FeatureConfig) -> Result<PelvisMotion> {
    let smooth = |axis| -> Result<TimeSeries> {
        let s = rec.keypoint_series(Skeleton::Body2D, body::PELVIS, Side::Center, axis)?;
        cfg.preprocess.smooth_for(TestKind::StandAndWalk, &s)
    };
    let (x, y) = (smooth(Axis::X)?, smooth(Axis::Y)?);
    let vx = signal::derivative(&x, 1)?;
    let vy = signal::derivative(&y, 1)?;
    Ok(PelvisMotion { x, y, vx, vy })
}

/// Stand-up interval `[start, end)` searched before frame `limit`.
///
/// The effort begins at the first sample whose vertical speed exceeds the
/// threshold, extended back while the speed stays above the rest level. It
/// ends once the speed has stayed below threshold for the hold time, then
/// extended forward while the speed stays above the rest level.
pub fn stand_up_range(vy: &[f64], fps: f64, limit: usize, cfg: &GaitConfig) -> Option<(usize, usize)> {
    let limit = limit.min(vy.len());
    let thr = cfg.stand_threshold;
    let rest = cfg.rest_fraction * thr;
    let onset = (0..limit).find(|&i| vy[i].abs() > thr)?;
    let mut start = onset;
    while start > 0 && vy[start - 1].abs() > rest {
        start -= 1;
    }
    let hold = ((cfg.hold_duration * fps).round() as usize).max(1);
    let mut quiet = onset;
    let mut run = 0;
    let mut i = onset;
    while i < limit {
        if vy[i].abs() < thr {
            if run == 0 {
                quiet = i;
            }
            run += 1;
            if run >= hold {
                break;
            }
        } else {
            run = 0;
        }
        i += 1;
    }
    if run == 0 {
        quiet = limit;
    }
    let mut end = quiet;
    while end < limit && vy[end].abs() > rest {
        end += 1;
    }
    Some((start, end.max(onset + 1)))
}

/// Runs of sustained one-directional horizontal motion.
fn walking_runs(vx: &[f64], fps: f64, cfg: &GaitConfig) -> Vec<(usize, usize, Direction)> {
    let min_len = (cfg.min_walk_duration * fps).round() as usize;
    let dir_of = |v: f64| {
        if v >= cfg.turn_threshold {
            Direction::Positive
        } else if v <= -cfg.turn_threshold {
            Direction::Negative
        } else {
            Direction::None
        }
    };
    let mut runs = Vec::new();
    let mut i = 0;
    while i < vx.len() {
        let d = dir_of(vx[i]);
        let mut j = i + 1;
        while j < vx.len() && dir_of(vx[j]) == d {
            j += 1;
        }
        if d != Direction::None && j - i >= min_len {
            runs.push((i, j, d));
        }
        i = j;
    }
    let mut merged: Vec<(usize, usize, Direction)> = Vec::new();
    for run in runs {
        match merged.last_mut() {
            Some(last) if last.2 == run.2 => last.1 = run.1,
            _ => merged.push(run),
        }
    }
    merged
}

/// Segments from pelvis velocities. The analysed range runs from the stand-up
/// start (or the first walk) to the end of the last walk; the pause between
/// standing and walking joins the first walk.
pub fn segment_from_velocity(vx: &[f64], vy: &[f64], fps: f64, cfg: &GaitConfig) -> Result<Vec<SegmentLabel>> {
    let walks = walking_runs(vx, fps, cfg);
    let Some(first) = walks.first() else {
        return Err(Error::Segmentation("no walking detected".into()));
    };
    let mut segments = Vec::new();
    let mut walk_start = first.0;
    if let Some((s, e)) = stand_up_range(vy, fps, first.0, cfg) {
        let e = e.min(first.0);
        if e > s {
            segments.push(SegmentLabel { kind: SegmentKind::SU, start: s, end: e, direction: Direction::None });
            walk_start = e;
        }
    }
    for (k, &(s, e, d)) in walks.iter().enumerate() {
        let start = if k == 0 { walk_start } else { s };
        if k > 0 {
            let prev_end = walks[k - 1].1;
            segments.push(SegmentLabel { kind: SegmentKind::TU, start: prev_end, end: s, direction: Direction::None });
        }
        segments.push(SegmentLabel { kind: SegmentKind::W, start, end: e, direction: d });
    }
    Ok(segments)
}

pub fn segment_saw(rec: &PoseRecording, cfg: &FeatureConfig) -> Result<Vec<SegmentLabel>> {
    let m = pelvis_motion(rec, cfg)?;
    segment_from_velocity(m.vx.samples(), m.vy.samples(), rec.fps(), &cfg.gait)
}

pub fn time_to_stand(rec: &PoseRecording, segments: &[SegmentLabel]) -> Result<f64> {
    segments
        .iter()
        .find(|s| s.kind == SegmentKind::SU)
        .map(|s| s.len() as f64 / rec.fps())
        .ok_or(Error::NoStandUp)
}

/// Distance between the two feet in the 3D body, per frame.
pub fn feet_distance(rec: &PoseRecording) -> Result<TimeSeries> {
    let r = rec.track3d(body::FOOT, Side::Right)?;
    let l = rec.track3d(body::FOOT, Side::Left)?;
    TimeSeries::new(r.iter().zip(&l).map(|(a, b)| a.distance(b)).collect(), rec.fps())
}

fn smooth_joint3d(rec: &PoseRecording, cfg: &FeatureConfig, joint: usize, side: Side, axis: Axis) -> Result<TimeSeries> {
    let s = rec.keypoint_series(Skeleton::Body3D, joint, side, axis)?;
    cfg.preprocess.smooth_for(TestKind::StandAndWalk, &s)
}

fn smoothed_feet_distance(rec: &PoseRecording, cfg: &FeatureConfig) -> Result<TimeSeries> {
    let mut sq = vec![0.0; rec.len()];
    for axis in [Axis::X, Axis::Y, Axis::Z] {
        let r = smooth_joint3d(rec, cfg, body::FOOT, Side::Right, axis)?;
        let l = smooth_joint3d(rec, cfg, body::FOOT, Side::Left, axis)?;
        for (acc, (a, b)) in sq.iter_mut().zip(r.samples().iter().zip(l.samples())) {
            *acc += (a - b).powi(2);
        }
    }
    TimeSeries::new(sq.into_iter().map(f64::sqrt).collect(), rec.fps())
}

fn walks(segments: &[SegmentLabel]) -> impl Iterator<Item = &SegmentLabel> {
    segments.iter().filter(|s| s.kind == SegmentKind::W)
}

/// Steps and foot-distance minima retained inside walking segments.
struct StepScan {
    steps: Vec<GaitStep>,
    /// Minima inside walks, grouped per walk.
    minima: Vec<Vec<usize>>,
}

fn scan_steps(d: &TimeSeries, segments: &[SegmentLabel], cfg: &FeatureConfig) -> Result<StepScan> {
    let cycles = signal::find_extrema(d, cfg.gait.prominence_frac)?;
    let mut steps = Vec::new();
    let mut minima = Vec::new();
    for w in walks(segments) {
        let mins: Vec<usize> = cycles.minima_idx.iter().copied().filter(|&i| w.contains(i)).collect();
        let mut prev_peak = None;
        for &p in cycles.maxima_idx.iter().filter(|&&i| w.contains(i)) {
            let before = mins.iter().rev().find(|&&m| m < p).copied();
            let after = mins.iter().find(|&&m| m > p).copied();
            steps.push(GaitStep {
                start_idx: before.unwrap_or(w.start),
                peak_idx: p,
                end_idx: after.unwrap_or(w.end - 1),
                step_time: prev_peak.map(|q: usize| (p - q) as f64 / d.fps()),
                step_length: d[p],
                step_width: before.map(|m| d[m]),
            });
            prev_peak = Some(p);
        }
        minima.push(mins);
    }
    if steps.is_empty() {
        return Err(Error::NoCycles("no foot-distance maxima inside walking segments".into()));
    }
    Ok(StepScan { steps, minima })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSummaries {
    pub length: Option<StatSummary>,
    pub width: Option<StatSummary>,
    pub time: Option<StatSummary>,
}

pub fn step_features(
    rec: &PoseRecording,
    segments: &[SegmentLabel],
    cfg: &FeatureConfig,
) -> Result<(Vec<GaitStep>, StepSummaries)> {
    let d = smoothed_feet_distance(rec, cfg)?;
    let scan = scan_steps(&d, segments, cfg)?;
    let summaries = summarize_steps(&scan.steps);
    Ok((scan.steps, summaries))
}

fn summarize_steps(steps: &[GaitStep]) -> StepSummaries {
    let lengths: Vec<f64> = steps.iter().map(|s| s.step_length).collect();
    let widths: Vec<f64> = steps.iter().filter_map(|s| s.step_width).collect();
    let times: Vec<f64> = steps.iter().filter_map(|s| s.step_time).collect();
    StepSummaries {
        length: StatSummary::from_values(&lengths),
        width: StatSummary::from_values(&widths),
        time: StatSummary::from_values(&times),
    }
}

/// Per-walk cadence (steps/s) and pelvis speed (path length / duration).
pub fn cadence_and_speed(
    rec: &PoseRecording,
    segments: &[SegmentLabel],
    steps: &[GaitStep],
    cfg: &FeatureConfig,
) -> Result<(StatSummary, StatSummary)> {
    let m = pelvis_motion(rec, cfg)?;
    let fps = rec.fps();
    let (mut cadence, mut speed) = (Vec::new(), Vec::new());
    for w in walks(segments) {
        let duration = w.len() as f64 / fps;
        let count = steps.iter().filter(|s| w.contains(s.peak_idx)).count();
        cadence.push(count as f64 / duration);
        let x = &m.x.samples()[w.start..w.end];
        let y = &m.y.samples()[w.start..w.end];
        let path: f64 = x.windows(2).zip(y.windows(2)).map(|(a, b)| (a[1] - a[0]).hypot(b[1] - b[0])).sum();
        let elapsed = (w.len() - 1) as f64 / fps;
        if elapsed > 0.0 {
            speed.push(path / elapsed);
        }
    }
    let none = || Error::Segmentation("no walking segment".into());
    Ok((StatSummary::from_values(&cadence).ok_or_else(none)?, StatSummary::from_values(&speed).ok_or_else(none)?))
}

/// Angle at the knee between the thigh and the shank, per frame, in [0, pi].
pub fn knee_angle(rec: &PoseRecording, side: Side) -> Result<TimeSeries> {
    let hip = rec.track3d(body::HIP, side)?;
    let knee = rec.track3d(body::KNEE, side)?;
    let foot = rec.track3d(body::FOOT, side)?;
    let mut out = Vec::with_capacity(rec.len());
    for (i, ((h, k), f)) in hip.iter().zip(&knee).zip(&foot).enumerate() {
        let a = k.sub(h);
        let b = k.sub(f);
        let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        if na == 0.0 || nb == 0.0 {
            return Err(Error::Degenerate(format!("zero-length {side} limb segment in frame {i}")));
        }
        let cos = a.iter().zip(&b).map(|(p, q)| p * q).sum::<f64>() / (na * nb);
        out.push(cos.clamp(-1.0, 1.0).acos());
    }
    TimeSeries::new(out, rec.fps())
}

fn median_step_frames(steps: &[GaitStep], fps: f64) -> Option<usize> {
    let times: Vec<f64> = steps.iter().filter_map(|s| s.step_time).collect();
    preprocess::median(&times).map(|t| (t * fps).round() as usize)
}

fn clamp_lag(lag: usize, len: usize) -> usize {
    lag.min(len.saturating_sub(1) / 2).max(1)
}

/// Per walk, the correlation of right and left knee angles after lag
/// alignment within one gait cycle.
pub fn knee_angle_symmetry(
    rec: &PoseRecording,
    segments: &[SegmentLabel],
    steps: &[GaitStep],
    cfg: &FeatureConfig,
) -> Result<StatSummary> {
    let smooth = |side| knee_angle(rec, side).and_then(|a| cfg.preprocess.smooth_for(TestKind::StandAndWalk, &a));
    let (right, left) = (smooth(Side::Right)?, smooth(Side::Left)?);
    let cycle = median_step_frames(steps, rec.fps()).map(|f| 2 * f);
    let mut values = Vec::new();
    for w in walks(segments) {
        if w.len() < 4 {
            continue;
        }
        let lag = clamp_lag(cycle.unwrap_or(w.len() / 4), w.len());
        let (_, cc) = signal::align_slices(&right.samples()[w.start..w.end], &left.samples()[w.start..w.end], lag)?;
        values.push(cc);
    }
    StatSummary::from_values(&values).ok_or_else(|| Error::Segmentation("no walking segment long enough".into()))
}

/// Per stride (three consecutive foot-distance minima inside a walk), the
/// correlation of right and left horizontal foot positions after lag
/// alignment within half the stride.
pub fn step_symmetry(rec: &PoseRecording, segments: &[SegmentLabel], cfg: &FeatureConfig) -> Result<StatSummary> {
    let d = smoothed_feet_distance(rec, cfg)?;
    let scan = scan_steps(&d, segments, cfg)?;
    stride_symmetry(rec, &scan, cfg)
}

fn stride_symmetry(rec: &PoseRecording, scan: &StepScan, cfg: &FeatureConfig) -> Result<StatSummary> {
    let rx = smooth_joint3d(rec, cfg, body::FOOT, Side::Right, Axis::X)?;
    let lx = smooth_joint3d(rec, cfg, body::FOOT, Side::Left, Axis::X)?;
    let mut values = Vec::new();
    for mins in &scan.minima {
        for w in mins.windows(3) {
            let (a, b) = (w[0], w[2] + 1);
            let lag = clamp_lag((b - a) / 2, b - a);
            match signal::align_slices(&rx.samples()[a..b], &lx.samples()[a..b], lag) {
                Ok((_, cc)) => values.push(cc),
                Err(Error::Degenerate(_)) => log::warn!("constant foot position in stride [{a}, {b})"),
                Err(e) => return Err(e),
            }
        }
    }
    StatSummary::from_values(&values).ok_or_else(|| Error::NoCycles("no complete stride inside a walk".into()))
}

pub(crate) fn saw_feature_map(rec: &PoseRecording, cfg: &FeatureConfig) -> Result<FeatureMap> {
    let segments = segment_saw(rec, cfg)?;
    let d = smoothed_feet_distance(rec, cfg)?;
    let scan = scan_steps(&d, &segments, cfg)?;
    let steps = summarize_steps(&scan.steps);
    let mut m = FeatureMap::default();
    m.summary("saw.knee_angle_sym", Some(knee_angle_symmetry(rec, &segments, &scan.steps, cfg)?), MSM);
    m.summary("saw.step_sym", Some(stride_symmetry(rec, &scan, cfg)?), MSM);
    m.summary("saw.step_length", steps.length, MSM);
    m.summary("saw.step_width", steps.width, MSM);
    m.summary("saw.step_time", steps.time, MSM);
    match time_to_stand(rec, &segments) {
        Ok(t) => m.put("saw.time_to_stand", Some(t)),
        Err(Error::NoStandUp) => {
            log::warn!("no stand-up phase found; time to stand left empty");
            m.put("saw.time_to_stand", None);
        }
        Err(e) => return Err(e),
    }
    let turns: Vec<f64> =
        segments.iter().filter(|s| s.kind == SegmentKind::TU).map(|s| s.len() as f64 / rec.fps()).collect();
    m.summary("saw.turn_time", StatSummary::from_values(&turns), MSM);
    let (cadence, speed) = cadence_and_speed(rec, &segments, &scan.steps, cfg)?;
    m.summary("saw.walk_speed", Some(speed), MS);
    m.summary("saw.cadence", Some(cadence), MS);
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_frame_spike_is_one_frame_stand_up() {
        let mut vy = vec![0.0; 50];
        vy[10] = 30.0;
        let (s, e) = stand_up_range(&vy, 60.0, 50, &GaitConfig::default()).unwrap();
        assert_eq!((s, e), (10, 11));
        assert!(stand_up_range(&[0.0; 20], 60.0, 20, &GaitConfig::default()).is_none());
    }

    #[test]
    fn stand_up_boundaries_follow_rest_level() {
        let cfg = GaitConfig::default();
        // raised-cosine rise over 90 frames starting at frame 20
        let vy: Vec<f64> = (0..200)
            .map(|i| {
                let t = i as f64 - 20.0;
                if (0.0..90.0).contains(&t) {
                    (std::f64::consts::PI * t / 90.0).sin()
                } else {
                    0.0
                }
            })
            .collect();
        let (s, e) = stand_up_range(&vy, 60.0, 200, &cfg).unwrap();
        assert!((s as i64 - 20).abs() <= 2 && (e as i64 - 110).abs() <= 2, "{s} {e}");
    }

    #[test]
    fn stationary_is_segmentation_error() {
        let z = vec![0.0; 100];
        assert!(matches!(segment_from_velocity(&z, &z, 60.0, &GaitConfig::default()), Err(Error::Segmentation(_))));
    }

    #[test]
    fn segments_partition_walks_and_turns() {
        let mut vx = vec![0.0; 30];
        vx.extend(vec![1.0; 60]);
        vx.extend(vec![0.0; 40]);
        vx.extend(vec![-1.0; 60]);
        vx.extend(vec![0.1; 10]);
        vx.extend(vec![-1.0; 40]);
        let vy = vec![0.0; vx.len()];
        let segs = segment_from_velocity(&vx, &vy, 60.0, &GaitConfig::default()).unwrap();
        let kinds: Vec<SegmentKind> = segs.iter().map(|s| s.kind).collect();
        // the brief slow-down keeps the same direction and is merged
        assert_eq!(kinds, vec![SegmentKind::W, SegmentKind::TU, SegmentKind::W]);
        assert!(segs.windows(2).all(|w| w[0].end == w[1].start));
        assert_eq!((segs[0].start, segs[2].end), (30, vx.len()));
        assert_eq!(segs[1].len(), 40);
        assert_eq!(segs[2].direction, Direction::Negative);
    }
}
