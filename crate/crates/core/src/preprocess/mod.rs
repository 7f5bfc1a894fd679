//! Truncation, reference-length normalisation, confidence repair and smoothing.
//!
//! The fixed order is repair, then normalise, then filter. Filtering is done
//! on the signals each extractor consumes (see [`PreprocessConfig::smooth`]),
//! not on the stored recording.

mod filter;

use serde::{Deserialize, Serialize};

pub use filter::{median_filter, savgol_filter};

use crate::error::{Error, Result};
use crate::pose::{body, hand, Frame, Keypoint2D, PoseRecording, Side, Skeleton, TestKind};
use crate::series::TimeSeries;

/// Window lengths are stated at 60 fps and rescaled for other rates.
pub const REFERENCE_FPS: f64 = 60.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    pub median_window: usize,
    pub savgol_window: usize,
    pub savgol_order: usize,
    pub confidence_threshold: f64,
    /// Half-open frame interval `[start, end)` kept before any processing.
    pub truncate_range: Option<(usize, usize)>,
    /// Run the median stage on upper-limb signals too. Off by default: the
    /// running median clips sampled extrema to their neighbours, which biases
    /// tapping amplitudes at a few samples per half cycle.
    pub median_on_upper_limb: bool,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            median_window: 5,
            savgol_window: 11,
            savgol_order: 3,
            confidence_threshold: 0.3,
            truncate_range: None,
            median_on_upper_limb: false,
        }
    }
}

fn odd_above(n: usize) -> usize {
    if n.is_multiple_of(2) { n + 1 } else { n + 2 }
}

fn round_to_odd(x: f64) -> usize {
    let k = ((x - 1.0) / 2.0).round().max(0.0);
    2 * k as usize + 1
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, w) in [("median_window", self.median_window), ("savgol_window", self.savgol_window)] {
            if w < 3 || w % 2 == 0 {
                return Err(Error::Value(format!("{name} must be odd and >= 3, got {w}")));
            }
        }
        if self.savgol_order >= self.savgol_window {
            return Err(Error::Value("savgol_order must be below savgol_window".into()));
        }
        if !(0.0..=1.0).contains(&self.confidence_threshold) {
            return Err(Error::Value("confidence_threshold must lie in [0, 1]".into()));
        }
        Ok(())
    }

    /// Windows rescaled to `fps`, kept odd and at least 3 (and above the SG order).
    pub fn windows_for(&self, fps: f64) -> (usize, usize) {
        let scale = fps / REFERENCE_FPS;
        let median = round_to_odd(self.median_window as f64 * scale).max(3);
        let savgol = round_to_odd(self.savgol_window as f64 * scale).max(3).max(odd_above(self.savgol_order));
        (median, savgol)
    }

    /// Median (optional) followed by Savitzky-Golay at the series' rate.
    pub fn smooth(&self, series: &TimeSeries, with_median: bool) -> Result<TimeSeries> {
        let (median, savgol) = self.windows_for(series.fps());
        let series = if with_median { median_filter(series, median)? } else { series.clone() };
        savgol_filter(&series, savgol, self.savgol_order)
    }

    /// Smoothing for signals of the given test.
    pub fn smooth_for(&self, kind: TestKind, series: &TimeSeries) -> Result<TimeSeries> {
        let with_median = !kind.is_upper_limb() || self.median_on_upper_limb;
        self.smooth(series, with_median)
    }
}

pub fn truncate(rec: &PoseRecording, start: usize, end: usize) -> Result<PoseRecording> {
    if start >= end || end > rec.len() {
        return Err(Error::Range(format!("invalid frame range [{start}, {end}) for {} frames", rec.len())));
    }
    rec.with_frames(rec.frames()[start..end].to_vec())
}

/// Per-frame reference distance: right forearm for upper-limb tests,
/// pelvis to neck for stand-and-walk.
pub fn reference_distances(rec: &PoseRecording) -> Result<Vec<f64>> {
    let (a, b) = match rec.test_kind() {
        TestKind::StandAndWalk => (
            rec.track2d(Skeleton::Body2D, body::PELVIS, Side::Center)?,
            rec.track2d(Skeleton::Body2D, body::NECK, Side::Center)?,
        ),
        _ => (
            rec.track2d(Skeleton::Body2D, body::WRIST, Side::Right)?,
            rec.track2d(Skeleton::Body2D, body::ELBOW, Side::Right)?,
        ),
    };
    Ok(a.iter().zip(&b).map(|(p, q)| p.distance(q)).collect())
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Median across frames of the per-frame reference distance.
pub fn reference_length(rec: &PoseRecording) -> Result<f64> {
    let d = reference_distances(rec)?;
    let m = median(&d).unwrap_or(0.0);
    if m > 0.0 && m.is_finite() {
        Ok(m)
    } else {
        Err(Error::Degenerate(format!("reference length is {m}")))
    }
}

/// Divides every 2D and 3D coordinate by `reference`; confidences are kept.
pub fn normalize(rec: &PoseRecording, reference: f64) -> Result<PoseRecording> {
    if !(reference.is_finite() && reference > 0.0) {
        return Err(Error::Value(format!("reference length must be positive, got {reference}")));
    }
    rec.map_coords(
        |k| Keypoint2D::new(k.x / reference, k.y / reference, k.confidence),
        |k| crate::pose::Keypoint3D::new(k.x / reference, k.y / reference, k.z / reference),
    )
}

/// Replaces samples whose confidence is below `threshold` by linear
/// interpolation between the nearest confident neighbours. Leading and
/// trailing gaps take the nearest confident value.
pub fn repair_low_confidence(series: &TimeSeries, conf: &TimeSeries, threshold: f64) -> Result<TimeSeries> {
    if series.len() != conf.len() {
        return Err(Error::Value(format!(
            "series length {} differs from confidence length {}",
            series.len(),
            conf.len()
        )));
    }
    let x = series.samples();
    let good: Vec<usize> = (0..x.len()).filter(|&i| conf[i] >= threshold).collect();
    let (Some(&first), Some(&last)) = (good.first(), good.last()) else {
        return Err(Error::AllLowConfidence { threshold });
    };
    let mut out = x.to_vec();
    out[..first].fill(x[first]);
    out[last + 1..].fill(x[last]);
    for pair in good.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        for (i, slot) in out.iter_mut().enumerate().take(b).skip(a + 1) {
            let w = (i - a) as f64 / (b - a) as f64;
            *slot = x[a] + w * (x[b] - x[a]);
        }
    }
    series.with_samples(out)
}

/// Joints a test's features read, as `(skeleton, joint, side)`.
pub fn required_joints(kind: TestKind) -> Vec<(Skeleton, usize, Side)> {
    let both = [Side::Right, Side::Left];
    let mut joints = Vec::new();
    match kind {
        TestKind::FingerTap => {
            for s in both {
                joints.push((Skeleton::Hand2D, hand::THUMB_TIP, s));
                joints.push((Skeleton::Hand2D, hand::INDEX_TIP, s));
                joints.push((Skeleton::Body2D, body::WRIST, s));
                joints.push((Skeleton::Body2D, body::ELBOW, s));
            }
        }
        TestKind::FingerToFinger => {
            for s in both {
                joints.push((Skeleton::Hand2D, hand::INDEX_MID, s));
            }
            joints.push((Skeleton::Body2D, body::WRIST, Side::Right));
            joints.push((Skeleton::Body2D, body::ELBOW, Side::Right));
        }
        TestKind::ForearmRoll => {
            for s in both {
                joints.push((Skeleton::Body2D, body::WRIST, s));
                joints.push((Skeleton::Body2D, body::ELBOW, s));
            }
        }
        TestKind::StandAndWalk => {
            joints.push((Skeleton::Body2D, body::PELVIS, Side::Center));
            joints.push((Skeleton::Body2D, body::NECK, Side::Center));
        }
    }
    joints
}

#[derive(Clone, Copy, PartialEq)]
enum Group2D {
    Body,
    Hand(Side),
}

impl Group2D {
    fn get(self, f: &Frame) -> Option<&Vec<Keypoint2D>> {
        match self {
            Group2D::Body => f.body2d.as_ref(),
            Group2D::Hand(side) => match side {
                Side::Left => f.hand2d_left.as_ref(),
                _ => f.hand2d_right.as_ref(),
            },
        }
    }

    fn get_mut(self, f: &mut Frame) -> Option<&mut Vec<Keypoint2D>> {
        match self {
            Group2D::Body => f.body2d.as_mut(),
            Group2D::Hand(side) => match side {
                Side::Left => f.hand2d_left.as_mut(),
                _ => f.hand2d_right.as_mut(),
            },
        }
    }

    fn holds(self, skeleton: Skeleton, joint: usize, side: Side, slot: usize) -> bool {
        match (self, skeleton) {
            (Group2D::Body, Skeleton::Body2D) => skeleton.slot(joint, side).ok() == Some(slot),
            (Group2D::Hand(h), Skeleton::Hand2D) => h == side && joint == slot,
            _ => false,
        }
    }
}

/// Repairs low-confidence samples of every 2D keypoint. Joints the test
/// needs must have at least one confident frame; other joints are left as
/// they are when they have none.
pub fn repair_recording(rec: &PoseRecording, threshold: f64) -> Result<PoseRecording> {
    let required = required_joints(rec.test_kind());
    let mut frames = rec.frames().to_vec();
    for group in [Group2D::Body, Group2D::Hand(Side::Left), Group2D::Hand(Side::Right)] {
        if frames.iter().any(|f| group.get(f).is_none()) {
            continue;
        }
        let slots = group.get(&frames[0]).map_or(0, Vec::len);
        for slot in 0..slots {
            let column: Vec<Keypoint2D> = frames.iter().filter_map(|f| group.get(f).map(|l| l[slot])).collect();
            if column.iter().all(|k| k.confidence >= threshold) {
                continue;
            }
            let conf = TimeSeries::new(column.iter().map(|k| k.confidence).collect(), rec.fps())?;
            let xs = TimeSeries::new(column.iter().map(|k| k.x).collect(), rec.fps())?;
            let ys = TimeSeries::new(column.iter().map(|k| k.y).collect(), rec.fps())?;
            let needed = required.iter().any(|&(sk, joint, side)| group.holds(sk, joint, side, slot));
            match (repair_low_confidence(&xs, &conf, threshold), repair_low_confidence(&ys, &conf, threshold)) {
                (Ok(x), Ok(y)) => {
                    for (i, f) in frames.iter_mut().enumerate() {
                        if let Some(list) = group.get_mut(f) {
                            list[slot].x = x[i];
                            list[slot].y = y[i];
                        }
                    }
                }
                (Err(e), _) | (_, Err(e)) if needed => return Err(e),
                _ => log::debug!("2D slot {slot} has no confident frame; left unrepaired"),
            }
        }
    }
    rec.with_frames(frames)
}

/// A recording after truncation, repair and normalisation.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub recording: PoseRecording,
    /// Reference length in the original units.
    pub reference_length: f64,
}

pub fn prepare(rec: &PoseRecording, cfg: &PreprocessConfig) -> Result<Prepared> {
    cfg.validate()?;
    let rec = match cfg.truncate_range {
        Some((start, end)) => truncate(rec, start, end)?,
        None => rec.clone(),
    };
    let rec = repair_recording(&rec, cfg.confidence_threshold)?;
    let reference = reference_length(&rec)?;
    Ok(Prepared { recording: normalize(&rec, reference)?, reference_length: reference })
}
