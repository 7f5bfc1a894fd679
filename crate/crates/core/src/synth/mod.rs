//! Seeded synthetic recordings with known motion parameters.
//!
//! All geometry is laid out in reference lengths (right forearm for the
//! upper-limb tests, pelvis to neck for stand-and-walk) and scaled to pixels
//! on output, so normalised features recover the configured values directly.

mod cohort;
mod gait;
mod upper;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pose::{Keypoint2D, Keypoint3D, Label, PoseRecording, RecordingMeta, Side, Skeleton, TestKind};

pub use cohort::{gen_cohort, CohortConfig, CohortMember, ImpairmentProfile};
pub use gait::gen_saw;
pub use upper::{gen_fr, gen_ft, gen_ftf};

/// A value per body side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerSide {
    pub right: f64,
    pub left: f64,
}

impl PerSide {
    pub const fn both(v: f64) -> Self {
        Self { right: v, left: v }
    }

    pub fn get(&self, side: Side) -> f64 {
        match side {
            Side::Left => self.left,
            _ => self.right,
        }
    }

    pub fn set(&mut self, side: Side, v: f64) {
        match side {
            Side::Left => self.left = v,
            _ => self.right = v,
        }
    }

}

/// Gait timing and geometry, in reference lengths and seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaitParams {
    /// Peak 3D distance between the feet.
    pub step_length: f64,
    pub step_time: f64,
    /// Lateral foot separation.
    pub stance_width: f64,
    pub passes: usize,
    /// Steps per pass; rounded up to an even count.
    pub steps_per_pass: usize,
    /// Stand-up duration; `None` starts the recording already standing.
    pub stand_up: Option<f64>,
    pub turn_time: f64,
    /// Knee flexion cap (rad). Flexion lost to the cap reappears as a
    /// compensation bump in stance.
    pub knee_rom: PerSide,
    /// Forward reach of each foot relative to `step_length`.
    pub reach: PerSide,
    /// Phase skew of each foot's swing, in [0, 1).
    pub swing_skew: PerSide,
    pub rest: f64,
    /// Relative spread of step time, step length and turn time between passes.
    pub pass_jitter: f64,
}

impl Default for GaitParams {
    fn default() -> Self {
        Self {
            step_length: 0.6,
            step_time: 0.55,
            stance_width: 0.2,
            passes: 4,
            steps_per_pass: 8,
            stand_up: Some(1.5),
            turn_time: 1.2,
            knee_rom: PerSide::both(1.0),
            reach: PerSide::both(1.0),
            swing_skew: PerSide::both(0.0),
            rest: 0.5,
            pass_jitter: 0.0,
        }
    }
}

/// Everything needed to generate one recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthParams {
    pub test_kind: TestKind,
    pub fps: f64,
    /// Recording length (s) for the upper-limb tests.
    pub duration: f64,
    /// Movement frequency (Hz) for the upper-limb tests.
    pub freq: PerSide,
    /// Tap opening, horizontal finger travel or wrist peak-to-peak, by test.
    pub amplitude: PerSide,
    /// Starting phase (rad) of each side's movement.
    pub phase: PerSide,
    /// RMS of the 4-8 Hz tremor added to the tracked finger.
    pub tremor: PerSide,
    /// RMS relative wander of the movement frequency over time.
    pub rhythm: f64,
    /// RMS slow drift of each arm (reference lengths, per axis).
    pub sway: f64,
    pub gait: GaitParams,
    /// Keypoint jitter (reference lengths, Gaussian sigma).
    pub noise: f64,
    /// Pixels per reference length.
    pub scale: f64,
    pub confidence: f64,
    pub label: Label,
    pub subject_id: String,
    pub device: String,
    pub seed: u64,
    /// Seed for keypoint jitter alone; defaults to `seed`.
    pub noise_seed: Option<u64>,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            test_kind: TestKind::FingerTap,
            fps: 60.0,
            duration: 10.0,
            freq: PerSide::both(2.0),
            amplitude: PerSide::both(0.5),
            phase: PerSide::both(0.0),
            tremor: PerSide::both(0.0),
            rhythm: 0.0,
            sway: 0.0,
            gait: GaitParams::default(),
            noise: 0.0,
            scale: 200.0,
            confidence: 0.95,
            label: Label::Unlabeled,
            subject_id: "synthetic".into(),
            device: "sim".into(),
            seed: 0,
            noise_seed: None,
        }
    }
}

impl SynthParams {
    /// Defaults suited to one test.
    pub fn for_test(kind: TestKind) -> Self {
        let mut p = Self { test_kind: kind, ..Self::default() };
        match kind {
            TestKind::FingerTap => {}
            TestKind::FingerToFinger => {
                p.freq = PerSide::both(0.8);
                p.amplitude = PerSide::both(1.0);
            }
            TestKind::ForearmRoll => {
                p.freq = PerSide::both(1.6);
                p.amplitude = PerSide::both(0.4);
                p.phase = PerSide { right: 0.0, left: std::f64::consts::PI };
            }
            TestKind::StandAndWalk => {}
        }
        p
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("fps", self.fps),
            ("duration", self.duration),
            ("scale", self.scale),
            ("freq.right", self.freq.right),
            ("freq.left", self.freq.left),
            ("amplitude.right", self.amplitude.right),
            ("amplitude.left", self.amplitude.left),
            ("gait.step_length", self.gait.step_length),
            ("gait.step_time", self.gait.step_time),
            ("gait.stance_width", self.gait.stance_width),
            ("gait.turn_time", self.gait.turn_time),
            ("gait.reach.right", self.gait.reach.right),
            ("gait.reach.left", self.gait.reach.left),
            ("gait.rest", self.gait.rest),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Value(format!("synth {name} must be positive, got {v}")));
            }
        }
        let non_negative = [
            ("noise", self.noise),
            ("sway", self.sway),
            ("tremor.right", self.tremor.right),
            ("tremor.left", self.tremor.left),
            ("gait.knee_rom.right", self.gait.knee_rom.right),
            ("gait.knee_rom.left", self.gait.knee_rom.left),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Value(format!("synth {name} must be non-negative, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err(Error::Value("synth confidence must lie in [0, 1]".into()));
        }
        for v in [self.gait.swing_skew.right, self.gait.swing_skew.left] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::Value("synth gait.swing_skew must lie in [0, 1)".into()));
            }
        }
        if !(0.0..=0.2).contains(&self.rhythm) {
            return Err(Error::Value(format!("synth rhythm must lie in [0, 0.2], got {}", self.rhythm)));
        }
        if !(0.0..0.3).contains(&self.gait.pass_jitter) {
            return Err(Error::Value(format!("synth gait.pass_jitter must lie in [0, 0.3), got {}", self.gait.pass_jitter)));
        }
        let j = self.gait.pass_jitter;
        if self.gait.stance_width * (1.0 + j) >= self.gait.step_length * (1.0 - j) {
            return Err(Error::Value("synth gait.stance_width must be below step_length".into()));
        }
        if self.gait.passes == 0 || self.gait.steps_per_pass == 0 {
            return Err(Error::Value("synth gait needs at least one pass and one step".into()));
        }
        if let Some(su) = self.gait.stand_up {
            if !(su.is_finite() && su > 0.0) {
                return Err(Error::Value(format!("synth gait.stand_up must be positive, got {su}")));
            }
        }
        Ok(())
    }

    fn meta(&self) -> RecordingMeta {
        RecordingMeta {
            fps: self.fps,
            test_kind: self.test_kind,
            label: self.label,
            subject_id: self.subject_id.clone(),
            device: self.device.clone(),
        }
    }

    fn jitter(&self) -> Jitter {
        Jitter::new(self.noise, stream(self.noise_seed.unwrap_or(self.seed), 1))
    }

    fn frame_count(&self) -> usize {
        (self.duration * self.fps).round() as usize
    }
}

/// Generates a recording for `params.test_kind`.
pub fn generate(params: &SynthParams) -> Result<PoseRecording> {
    params.validate()?;
    match params.test_kind {
        TestKind::FingerTap => gen_ft(params),
        TestKind::FingerToFinger => gen_ftf(params),
        TestKind::ForearmRoll => gen_fr(params),
        TestKind::StandAndWalk => gen_saw(params),
    }
}

/// Independent random stream for one purpose of one recording.
fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Band-limited tremor: a sum of sinusoids with random frequencies in 4-8 Hz.
struct Tremor {
    parts: Vec<(f64, f64, f64)>,
}

impl Tremor {
    const PARTS: usize = 8;

    fn new(rms: f64, rng: &mut ChaCha8Rng) -> Self {
        Self::band(rms, 4.0, 8.0, rng)
    }

    /// Sum of sinusoids with frequencies drawn from `[lo, hi)` Hz.
    fn band(rms: f64, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Self {
        let freq = Uniform::new(lo, hi).expect("valid range");
        let phase = Uniform::new(0.0, std::f64::consts::TAU).expect("valid range");
        let amp = rms * (2.0 / Self::PARTS as f64).sqrt();
        let parts = (0..Self::PARTS).map(|_| (amp, freq.sample(rng), phase.sample(rng))).collect();
        Self { parts }
    }

    fn at(&self, t: f64) -> f64 {
        self.parts.iter().map(|&(a, f, p)| a * (std::f64::consts::TAU * f * t + p).sin()).sum()
    }

    /// Integral of [`Tremor::at`] from 0 to `t`.
    fn integral(&self, t: f64) -> f64 {
        use std::f64::consts::TAU;
        self.parts.iter().map(|&(a, f, p)| a * (p.cos() - (TAU * f * t + p).cos()) / (TAU * f)).sum()
    }
}

/// Gaussian keypoint jitter; a zero sigma draws nothing.
struct Jitter {
    normal: Option<Normal<f64>>,
    rng: ChaCha8Rng,
}

impl Jitter {
    fn new(sigma: f64, rng: ChaCha8Rng) -> Self {
        let normal = (sigma > 0.0).then(|| Normal::new(0.0, sigma).expect("finite sigma"));
        Self { normal, rng }
    }

    fn draw(&mut self) -> f64 {
        match &self.normal {
            Some(n) => n.sample(&mut self.rng),
            None => 0.0,
        }
    }

    fn p2(&mut self, p: [f64; 2]) -> [f64; 2] {
        [p[0] + self.draw(), p[1] + self.draw()]
    }

    fn p3(&mut self, p: [f64; 3]) -> [f64; 3] {
        [p[0] + self.draw(), p[1] + self.draw(), p[2] + self.draw()]
    }
}

/// Semantic 2D body positions; extra slots (face, toes, heels) are derived.
#[derive(Clone, Copy, Default)]
struct Body2 {
    pelvis: [f64; 2],
    neck: [f64; 2],
    right: Limbs2,
    left: Limbs2,
}

#[derive(Clone, Copy, Default)]
struct Limbs2 {
    foot: [f64; 2],
    knee: [f64; 2],
    hip: [f64; 2],
    shoulder: [f64; 2],
    elbow: [f64; 2],
    wrist: [f64; 2],
}

fn add(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] + b[0], a[1] + b[1]]
}

impl Body2 {
    fn limbs(&self, side: Side) -> &Limbs2 {
        if side == Side::Left {
            &self.left
        } else {
            &self.right
        }
    }

    fn point(&self, side: Side, name: &str) -> [f64; 2] {
        let l = self.limbs(side);
        let mirror = if side == Side::Left { 1.0 } else { -1.0 };
        match name {
            "pelvis" => self.pelvis,
            "neck" => self.neck,
            "foot" => l.foot,
            "knee" => l.knee,
            "hip" => l.hip,
            "shoulder" => l.shoulder,
            "elbow" => l.elbow,
            "wrist" => l.wrist,
            "nose" => add(self.neck, [0.0, -0.35]),
            "eye" => add(self.neck, [0.07 * mirror, -0.42]),
            "ear" => add(self.neck, [0.13 * mirror, -0.38]),
            "big_toe" => add(l.foot, [0.15, 0.04]),
            "small_toe" => add(l.foot, [0.12, 0.05]),
            "heel" => add(l.foot, [-0.05, 0.04]),
            other => unreachable!("unknown body slot {other}"),
        }
    }

    fn keypoints(&self, out: &Output, jitter: &mut Jitter) -> Vec<Keypoint2D> {
        Skeleton::Body2D
            .slots()
            .into_iter()
            .map(|(side, name)| out.k2(jitter.p2(self.point(side, name))))
            .collect()
    }
}

/// Semantic 3D positions relative to the pelvis.
#[derive(Clone, Copy, Default)]
struct Body3 {
    neck: [f64; 3],
    right: Limbs3,
    left: Limbs3,
}

#[derive(Clone, Copy, Default)]
struct Limbs3 {
    foot: [f64; 3],
    knee: [f64; 3],
    hip: [f64; 3],
}

impl Body3 {
    fn point(&self, side: Side, name: &str) -> [f64; 3] {
        let l = if side == Side::Left { &self.left } else { &self.right };
        let lateral = if side == Side::Left { -1.0 } else { 1.0 };
        let n = self.neck;
        match name {
            "pelvis" => [0.0; 3],
            "hip" => l.hip,
            "knee" => l.knee,
            "foot" => l.foot,
            "spine" => [n[0] * 0.5, n[1] * 0.5, n[2] * 0.5],
            "neck" => n,
            "nose" => [n[0] + 0.1, n[1] - 0.2, n[2]],
            "head" => [n[0], n[1] - 0.35, n[2]],
            "shoulder" => [n[0], n[1] + 0.05, n[2] + 0.2 * lateral],
            "elbow" => [n[0], n[1] + 0.5, n[2] + 0.25 * lateral],
            "wrist" => [n[0] + 0.1, n[1] + 0.95, n[2] + 0.25 * lateral],
            other => unreachable!("unknown body slot {other}"),
        }
    }

    fn keypoints(&self, out: &Output, jitter: &mut Jitter) -> Vec<Keypoint3D> {
        Skeleton::Body3D
            .slots()
            .into_iter()
            .map(|(side, name)| out.k3(jitter.p3(self.point(side, name))))
            .collect()
    }
}

/// Hand keypoints laid out around a wrist: five fingers fanning upwards.
/// The right hand's thumb points towards the body midline (+x in the image).
fn hand_layout(side: Side) -> [[f64; 2]; 21] {
    const FINGERS: [([usize; 4], f64); 5] = [
        ([1, 2, 19, 3], 1.0),
        ([4, 5, 20, 6], 0.35),
        ([7, 8, 9, 10], 0.1),
        ([11, 12, 13, 14], -0.15),
        ([15, 16, 17, 18], -0.4),
    ];
    let mirror = if side == Side::Left { -1.0 } else { 1.0 };
    let mut pts = [[0.0; 2]; 21];
    for (slots, angle) in FINGERS {
        for (k, &slot) in slots.iter().enumerate() {
            let r = 0.12 * (k + 1) as f64;
            pts[slot] = [mirror * r * f64::sin(angle), -r * f64::cos(angle)];
        }
    }
    pts
}

/// Scales reference-length geometry to pixels.
struct Output {
    scale: f64,
    origin: [f64; 2],
    confidence: f64,
}

impl Output {
    fn new(p: &SynthParams) -> Self {
        Self { scale: p.scale, origin: [3.0, 2.5], confidence: p.confidence }
    }

    fn k2(&self, p: [f64; 2]) -> Keypoint2D {
        Keypoint2D::new((p[0] + self.origin[0]) * self.scale, (p[1] + self.origin[1]) * self.scale, self.confidence)
    }

    fn k3(&self, p: [f64; 3]) -> Keypoint3D {
        Keypoint3D::new(p[0] * self.scale, p[1] * self.scale, p[2] * self.scale)
    }
}

/// Standing upper body facing the camera, centred on x = 0. The subject's
/// right side appears at negative x.
fn upper_body(right_wrist: [f64; 2], right_elbow: [f64; 2], left_wrist: [f64; 2], left_elbow: [f64; 2]) -> Body2 {
    let side = |wrist, elbow, dir: f64| Limbs2 {
        foot: [0.2 * dir, 2.6],
        knee: [0.2 * dir, 1.8],
        hip: [0.2 * dir, 1.0],
        shoulder: [0.45 * dir, -0.6],
        elbow,
        wrist,
    };
    Body2 {
        pelvis: [0.0, 1.0],
        neck: [0.0, -0.6],
        right: side(right_wrist, right_elbow, -1.0),
        left: side(left_wrist, left_elbow, 1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess;

    #[test]
    fn params_validate() {
        assert!(SynthParams::default().validate().is_ok());
        let mut p = SynthParams::default();
        p.freq.left = 0.0;
        assert!(p.validate().is_err());
        let mut p = SynthParams::for_test(TestKind::StandAndWalk);
        p.gait.swing_skew.right = 1.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn same_seed_same_recording() {
        for kind in TestKind::ALL {
            let p = SynthParams { noise: 0.01, seed: 9, ..SynthParams::for_test(kind) };
            let a = generate(&p).unwrap();
            let b = generate(&p).unwrap();
            assert_eq!(a, b, "{kind}");
            let c = generate(&SynthParams { seed: 10, ..p }).unwrap();
            assert_ne!(a, c, "{kind}");
        }
    }

    #[test]
    fn reference_length_is_the_scale() {
        for kind in TestKind::ALL {
            let p = SynthParams::for_test(kind);
            let rec = generate(&p).unwrap();
            let r = preprocess::reference_length(&rec).unwrap();
            assert!((r - p.scale).abs() < 1e-9 * p.scale, "{kind}: {r}");
        }
    }

    #[test]
    fn hand_layout_mirrors() {
        let r = hand_layout(Side::Right);
        let l = hand_layout(Side::Left);
        for (a, b) in r.iter().zip(&l) {
            assert_eq!(a[0], -b[0]);
            assert_eq!(a[1], b[1]);
        }
        assert_eq!(r[0], [0.0, 0.0]);
    }
}
