//! Pose recordings: keypoint types, frames, validation and coordinate access.

mod io;
pub mod skeleton;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use io::{load_recording, load_recording_path, save_recording, save_recording_path, Format, RecordingMeta};
pub use skeleton::{body, hand, Axis, Side, Skeleton};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Keypoint2D {
    pub x: f64,
    pub y: f64,
    pub confidence: f64,
}

impl Keypoint2D {
    pub fn new(x: f64, y: f64, confidence: f64) -> Self {
        Self { x, y, confidence }
    }

    pub fn distance(&self, other: &Keypoint2D) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

impl From<[f64; 3]> for Keypoint2D {
    fn from([x, y, confidence]: [f64; 3]) -> Self {
        Self { x, y, confidence }
    }
}

impl From<Keypoint2D> for [f64; 3] {
    fn from(k: Keypoint2D) -> Self {
        [k.x, k.y, k.confidence]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Keypoint3D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Keypoint3D {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn sub(&self, other: &Keypoint3D) -> [f64; 3] {
        [self.x - other.x, self.y - other.y, self.z - other.z]
    }

    pub fn distance(&self, other: &Keypoint3D) -> f64 {
        let [dx, dy, dz] = self.sub(other);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

impl From<[f64; 3]> for Keypoint3D {
    fn from([x, y, z]: [f64; 3]) -> Self {
        Self { x, y, z }
    }
}

impl From<Keypoint3D> for [f64; 3] {
    fn from(k: Keypoint3D) -> Self {
        [k.x, k.y, k.z]
    }
}

/// Keypoints detected in one video frame. Absent groups are `None`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Frame {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body2d: Option<Vec<Keypoint2D>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hand2d_left: Option<Vec<Keypoint2D>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hand2d_right: Option<Vec<Keypoint2D>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body3d: Option<Vec<Keypoint3D>>,
}

impl Frame {
    pub fn hand(&self, side: Side) -> Option<&[Keypoint2D]> {
        match side {
            Side::Left => self.hand2d_left.as_deref(),
            Side::Right => self.hand2d_right.as_deref(),
            Side::Center => None,
        }
    }

    /// The 2D list holding `skeleton` for `side` (the side only matters for hands).
    fn group2d(&self, skeleton: Skeleton, side: Side) -> Option<&[Keypoint2D]> {
        match skeleton {
            Skeleton::Hand2D => self.hand(side),
            Skeleton::Body2D => self.body2d.as_deref(),
            Skeleton::Body3D => None,
        }
    }

    fn map_coords(&self, f2: impl Fn(&Keypoint2D) -> Keypoint2D, f3: impl Fn(&Keypoint3D) -> Keypoint3D) -> Frame {
        let map2 = |v: &Option<Vec<Keypoint2D>>| v.as_ref().map(|ks| ks.iter().map(&f2).collect());
        Frame {
            body2d: map2(&self.body2d),
            hand2d_left: map2(&self.hand2d_left),
            hand2d_right: map2(&self.hand2d_right),
            body3d: self.body3d.as_ref().map(|ks| ks.iter().map(&f3).collect()),
        }
    }

    fn validate(&self, index: usize) -> Result<()> {
        let check2 = |name: &str, ks: &Option<Vec<Keypoint2D>>, len: usize| -> Result<()> {
            let Some(ks) = ks else { return Ok(()) };
            if ks.len() != len {
                return Err(Error::Schema(format!(
                    "frame {index}: {name} has {} keypoints, expected {len}",
                    ks.len()
                )));
            }
            for (j, k) in ks.iter().enumerate() {
                if !(k.x.is_finite() && k.y.is_finite()) {
                    return Err(Error::Value(format!("frame {index}: {name}[{j}] is not finite")));
                }
                if !(0.0..=1.0).contains(&k.confidence) {
                    return Err(Error::Value(format!(
                        "frame {index}: {name}[{j}] confidence {} outside [0, 1]",
                        k.confidence
                    )));
                }
            }
            Ok(())
        };
        check2("body2d", &self.body2d, Skeleton::Body2D.len())?;
        check2("hand2d_left", &self.hand2d_left, Skeleton::Hand2D.len())?;
        check2("hand2d_right", &self.hand2d_right, Skeleton::Hand2D.len())?;
        if let Some(ks) = &self.body3d {
            if ks.len() != Skeleton::Body3D.len() {
                return Err(Error::Schema(format!(
                    "frame {index}: body3d has {} keypoints, expected {}",
                    ks.len(),
                    Skeleton::Body3D.len()
                )));
            }
            if let Some(j) = ks.iter().position(|k| !(k.x.is_finite() && k.y.is_finite() && k.z.is_finite())) {
                return Err(Error::Value(format!("frame {index}: body3d[{j}] is not finite")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TestKind {
    #[serde(rename = "FT")]
    FingerTap,
    #[serde(rename = "FTF")]
    FingerToFinger,
    #[serde(rename = "FR")]
    ForearmRoll,
    #[serde(rename = "SAW")]
    StandAndWalk,
}

impl TestKind {
    pub const ALL: [TestKind; 4] = [
        TestKind::FingerTap,
        TestKind::FingerToFinger,
        TestKind::ForearmRoll,
        TestKind::StandAndWalk,
    ];

    pub fn code(self) -> &'static str {
        match self {
            TestKind::FingerTap => "FT",
            TestKind::FingerToFinger => "FTF",
            TestKind::ForearmRoll => "FR",
            TestKind::StandAndWalk => "SAW",
        }
    }

    pub fn is_upper_limb(self) -> bool {
        self != TestKind::StandAndWalk
    }
}

impl fmt::Display for TestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for TestKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TestKind::ALL
            .into_iter()
            .find(|k| k.code().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Parse(format!("unknown test kind '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Normal,
    Abnormal,
    Unlabeled,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Normal => "normal",
            Label::Abnormal => "abnormal",
            Label::Unlabeled => "unlabeled",
        }
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "normal" | "0" => Ok(Label::Normal),
            "abnormal" | "1" => Ok(Label::Abnormal),
            "unlabeled" | "" => Ok(Label::Unlabeled),
            other => Err(Error::Parse(format!("unknown label '{other}'"))),
        }
    }
}

/// A validated, immutable pose recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RecordingDoc")]
pub struct PoseRecording {
    fps: f64,
    test_kind: TestKind,
    label: Label,
    subject_id: String,
    device: String,
    frames: Vec<Frame>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct RecordingDoc {
    fps: f64,
    test_kind: TestKind,
    label: Label,
    subject_id: String,
    device: String,
    frames: Vec<Frame>,
}

impl TryFrom<RecordingDoc> for PoseRecording {
    type Error = Error;

    fn try_from(doc: RecordingDoc) -> Result<Self> {
        PoseRecording::new(
            RecordingMeta {
                fps: doc.fps,
                test_kind: doc.test_kind,
                label: doc.label,
                subject_id: doc.subject_id,
                device: doc.device,
            },
            doc.frames,
        )
    }
}

impl PoseRecording {
    pub fn new(meta: RecordingMeta, frames: Vec<Frame>) -> Result<Self> {
        let rec = Self {
            fps: meta.fps,
            test_kind: meta.test_kind,
            label: meta.label,
            subject_id: meta.subject_id,
            device: meta.device,
            frames,
        };
        rec.validate()?;
        Ok(rec)
    }

    fn validate(&self) -> Result<()> {
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(Error::Value(format!("fps must be positive, got {}", self.fps)));
        }
        if self.frames.is_empty() {
            return Err(Error::Value("recording has no frames".into()));
        }
        for (i, frame) in self.frames.iter().enumerate() {
            frame.validate(i)?;
            let missing = match self.test_kind {
                TestKind::StandAndWalk => {
                    [("body2d", frame.body2d.is_none()), ("body3d", frame.body3d.is_none())].to_vec()
                }
                _ => [
                    ("body2d", frame.body2d.is_none()),
                    ("hand2d_left", frame.hand2d_left.is_none()),
                    ("hand2d_right", frame.hand2d_right.is_none()),
                ]
                .to_vec(),
            };
            if let Some((name, _)) = missing.into_iter().find(|(_, absent)| *absent) {
                return Err(Error::Schema(format!(
                    "frame {i}: {} recording requires {name}",
                    self.test_kind
                )));
            }
        }
        Ok(())
    }

    pub fn meta(&self) -> RecordingMeta {
        RecordingMeta {
            fps: self.fps,
            test_kind: self.test_kind,
            label: self.label,
            subject_id: self.subject_id.clone(),
            device: self.device.clone(),
        }
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn test_kind(&self) -> TestKind {
        self.test_kind
    }

    pub fn label(&self) -> Label {
        self.label
    }

    pub fn subject_id(&self) -> &str {
        &self.subject_id
    }

    pub fn device(&self) -> &str {
        &self.device
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.frames.len() as f64 / self.fps
    }

    /// New recording with the same metadata and different frames.
    pub fn with_frames(&self, frames: Vec<Frame>) -> Result<Self> {
        Self::new(self.meta(), frames)
    }

    /// Applies coordinate maps to every 2D and 3D keypoint.
    pub fn map_coords(
        &self,
        f2: impl Fn(&Keypoint2D) -> Keypoint2D,
        f3: impl Fn(&Keypoint3D) -> Keypoint3D,
    ) -> Result<Self> {
        self.with_frames(self.frames.iter().map(|fr| fr.map_coords(&f2, &f3)).collect())
    }

    pub fn point2d(&self, frame: usize, skeleton: Skeleton, joint: usize, side: Side) -> Result<Keypoint2D> {
        let slot = skeleton.slot(joint, side)?;
        self.frames[frame]
            .group2d(skeleton, side)
            .map(|ks| ks[slot])
            .ok_or_else(|| Error::Schema(format!("frame {frame} has no {skeleton:?} {side} keypoints")))
    }

    pub fn point3d(&self, frame: usize, joint: usize, side: Side) -> Result<Keypoint3D> {
        let slot = Skeleton::Body3D.slot(joint, side)?;
        self.frames[frame]
            .body3d
            .as_ref()
            .map(|ks| ks[slot])
            .ok_or_else(|| Error::Schema(format!("frame {frame} has no body3d keypoints")))
    }

    /// All frames of one 2D joint.
    pub fn track2d(&self, skeleton: Skeleton, joint: usize, side: Side) -> Result<Vec<Keypoint2D>> {
        (0..self.frames.len()).map(|i| self.point2d(i, skeleton, joint, side)).collect()
    }

    /// All frames of one 3D joint.
    pub fn track3d(&self, joint: usize, side: Side) -> Result<Vec<Keypoint3D>> {
        (0..self.frames.len()).map(|i| self.point3d(i, joint, side)).collect()
    }

    /// One coordinate of one joint over all frames.
    pub fn keypoint_series(&self, skeleton: Skeleton, joint: usize, side: Side, axis: Axis) -> Result<TimeSeries> {
        if !skeleton.has_axis(axis) {
            return Err(Error::Index(format!("{skeleton:?} has no {} axis", axis.as_str())));
        }
        let samples = match skeleton {
            Skeleton::Body3D => self
                .track3d(joint, side)?
                .into_iter()
                .map(|k| match axis {
                    Axis::X => k.x,
                    Axis::Y => k.y,
                    Axis::Z => k.z,
                })
                .collect(),
            _ => self
                .track2d(skeleton, joint, side)?
                .into_iter()
                .map(|k| if axis == Axis::X { k.x } else { k.y })
                .collect(),
        };
        TimeSeries::new(samples, self.fps)
    }

    /// Confidence of one 2D joint over all frames.
    pub fn confidence_series(&self, skeleton: Skeleton, joint: usize, side: Side) -> Result<TimeSeries> {
        let samples = self.track2d(skeleton, joint, side)?.into_iter().map(|k| k.confidence).collect();
        TimeSeries::new(samples, self.fps)
    }
}

/// Free-standing constructor for one keypoint series: `rec.keypoint_series(...)`.
pub fn keypoint_series(
    rec: &PoseRecording,
    skeleton: Skeleton,
    joint: usize,
    side: Side,
    axis: Axis,
) -> Result<TimeSeries> {
    rec.keypoint_series(skeleton, joint, side, axis)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kp(x: f64, y: f64) -> Keypoint2D {
        Keypoint2D::new(x, y, 1.0)
    }

    fn ft_frame(v: f64) -> Frame {
        Frame {
            body2d: Some(vec![kp(v, 0.5); 25]),
            hand2d_left: Some(vec![kp(0.1, v); 21]),
            hand2d_right: Some((0..21).map(|j| kp(j as f64, v * 2.0)).collect()),
            body3d: None,
        }
    }

    fn meta(kind: TestKind) -> RecordingMeta {
        RecordingMeta {
            fps: 30.0,
            test_kind: kind,
            label: Label::Normal,
            subject_id: "s1".into(),
            device: "phone".into(),
        }
    }

    #[test]
    fn constant_pose_gives_constant_series() {
        let rec = PoseRecording::new(meta(TestKind::FingerTap), vec![ft_frame(0.3); 10]).unwrap();
        let s = rec.keypoint_series(Skeleton::Body2D, body::WRIST, Side::Right, Axis::X).unwrap();
        assert_eq!(s.len(), 10);
        assert!(s.samples().iter().all(|&v| v == 0.3));
        assert_eq!(s.fps(), 30.0);
    }

    #[test]
    fn series_matches_stored_values_exhaustively() {
        let frames: Vec<Frame> = (0..6).map(|i| ft_frame(i as f64 * 0.1)).collect();
        let rec = PoseRecording::new(meta(TestKind::FingerTap), frames.clone()).unwrap();
        for joint in 0..21 {
            for side in [Side::Left, Side::Right] {
                for axis in [Axis::X, Axis::Y] {
                    let s = rec.keypoint_series(Skeleton::Hand2D, joint, side, axis).unwrap();
                    for (i, f) in frames.iter().enumerate() {
                        let k = f.hand(side).unwrap()[joint];
                        let expected = if axis == Axis::X { k.x } else { k.y };
                        assert_eq!(s[i], expected);
                    }
                }
            }
        }
    }

    #[test]
    fn z_axis_on_hand_is_an_index_error() {
        let rec = PoseRecording::new(meta(TestKind::FingerTap), vec![ft_frame(0.0); 2]).unwrap();
        let err = rec.keypoint_series(Skeleton::Hand2D, hand::THUMB_TIP, Side::Left, Axis::Z);
        assert!(matches!(err, Err(Error::Index(_))));
    }

    #[test]
    fn validation_rules() {
        let mut no_hands = ft_frame(0.0);
        no_hands.hand2d_left = None;
        assert!(matches!(
            PoseRecording::new(meta(TestKind::FingerTap), vec![no_hands]),
            Err(Error::Schema(_))
        ));
        assert!(matches!(PoseRecording::new(meta(TestKind::FingerTap), vec![]), Err(Error::Value(_))));
        let mut m = meta(TestKind::FingerTap);
        m.fps = 0.0;
        assert!(matches!(PoseRecording::new(m, vec![ft_frame(0.0)]), Err(Error::Value(_))));
        let mut bad_conf = ft_frame(0.0);
        bad_conf.body2d.as_mut().unwrap()[3].confidence = 1.5;
        assert!(PoseRecording::new(meta(TestKind::FingerTap), vec![bad_conf]).is_err());
        let mut short = ft_frame(0.0);
        short.hand2d_right.as_mut().unwrap().pop();
        assert!(matches!(
            PoseRecording::new(meta(TestKind::FingerTap), vec![short]),
            Err(Error::Schema(_))
        ));
        // SAW needs body3d
        assert!(matches!(
            PoseRecording::new(meta(TestKind::StandAndWalk), vec![ft_frame(0.0)]),
            Err(Error::Schema(_))
        ));
        // low confidence is accepted at load time
        let mut low = ft_frame(0.0);
        low.hand2d_left.as_mut().unwrap()[3].confidence = 0.0;
        assert!(PoseRecording::new(meta(TestKind::FingerTap), vec![low]).is_ok());
    }
}
