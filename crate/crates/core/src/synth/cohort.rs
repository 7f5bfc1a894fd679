//! Paired cohorts: each subject performs a test normally and with a
//! simulated impairment, each attempt filmed by two devices.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{stream, PerSide, SynthParams};
use crate::error::{Error, Result};
use crate::pose::{Label, PoseRecording, TestKind};

/// Changes applied to a subject's normal parameters for the impaired attempt.
/// Multipliers default to 1 and additive terms to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImpairmentProfile {
    pub freq: PerSide,
    pub amplitude: PerSide,
    /// Added tremor RMS (reference lengths).
    pub tremor: PerSide,
    pub knee_rom: PerSide,
    pub reach: PerSide,
    /// Added swing skew.
    pub swing_skew: PerSide,
    pub stand_up: f64,
}

impl Default for ImpairmentProfile {
    fn default() -> Self {
        Self {
            freq: PerSide::both(1.0),
            amplitude: PerSide::both(1.0),
            tremor: PerSide::both(0.0),
            knee_rom: PerSide::both(1.0),
            reach: PerSide::both(1.0),
            swing_skew: PerSide::both(0.0),
            stand_up: 1.0,
        }
    }
}

impl ImpairmentProfile {
    /// Profile mimicking the braces used for each test: a slowed, smaller
    /// left tap; a left tremor; two stiffened wrists; a braced right knee.
    pub fn for_test(kind: TestKind) -> Self {
        let mut p = Self::default();
        match kind {
            TestKind::FingerTap => {
                p.freq.left = 0.5;
                p.amplitude.left = 0.6;
            }
            TestKind::FingerToFinger => p.tremor.left = 0.03,
            TestKind::ForearmRoll => {
                p.freq = PerSide { right: 0.8, left: 0.6 };
                p.amplitude = PerSide { right: 0.85, left: 0.7 };
            }
            TestKind::StandAndWalk => {
                p.knee_rom.right = 0.5;
                p.reach.right = 0.75;
                p.swing_skew.right = 0.5;
                p.stand_up = 1.4;
            }
        }
        p
    }

    fn apply(&self, p: &mut SynthParams) {
        let mul = |a: PerSide, b: PerSide| PerSide { right: a.right * b.right, left: a.left * b.left };
        let sum = |a: PerSide, b: PerSide| PerSide { right: a.right + b.right, left: a.left + b.left };
        p.freq = mul(p.freq, self.freq);
        p.amplitude = mul(p.amplitude, self.amplitude);
        p.tremor = sum(p.tremor, self.tremor);
        p.gait.knee_rom = mul(p.gait.knee_rom, self.knee_rom);
        p.gait.reach = mul(p.gait.reach, self.reach);
        p.gait.swing_skew = sum(p.gait.swing_skew, self.swing_skew);
        p.gait.stand_up = p.gait.stand_up.map(|s| s * self.stand_up);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CohortConfig {
    pub test_kind: TestKind,
    pub subjects: usize,
    pub profile: ImpairmentProfile,
    /// Scales what differs between two devices filming one attempt: relative
    /// parameter jitter, pixel scale spread (x2.5) and keypoint jitter (/10,
    /// reference lengths). Zero makes both devices' recordings identical.
    pub device_noise: f64,
    /// Scales how much two performances by one subject differ: relative
    /// parameter jitter, rhythm wander, arm sway, physiological tremor and
    /// pass-to-pass gait variation. Both devices share each performance.
    pub attempt_variability: f64,
    pub fps: f64,
    pub seed: u64,
}

impl Default for CohortConfig {
    fn default() -> Self {
        Self {
            test_kind: TestKind::FingerTap,
            subjects: 10,
            profile: ImpairmentProfile::for_test(TestKind::FingerTap),
            device_noise: 0.02,
            attempt_variability: 0.08,
            fps: 60.0,
            seed: 0,
        }
    }
}

impl CohortConfig {
    pub fn for_test(kind: TestKind, subjects: usize, seed: u64) -> Self {
        Self { test_kind: kind, subjects, profile: ImpairmentProfile::for_test(kind), seed, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CohortMember {
    /// `<subject>_<N|A>_<device>`.
    pub recording_id: String,
    pub recording: PoseRecording,
}

pub const DEVICES: [&str; 2] = ["P", "T"];

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

/// A subject's normal-attempt parameters.
fn subject_params(kind: TestKind, rng: &mut ChaCha8Rng) -> SynthParams {
    let mut p = SynthParams::for_test(kind);
    let paired = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| {
        let v = uniform(rng, lo, hi);
        PerSide { right: v * uniform(rng, 0.95, 1.05), left: v * uniform(rng, 0.95, 1.05) }
    };
    match kind {
        TestKind::FingerTap => {
            p.freq = paired(rng, 1.5, 3.5);
            p.amplitude = paired(rng, 0.3, 0.8);
        }
        TestKind::FingerToFinger => {
            p.freq = PerSide::both(uniform(rng, 0.6, 1.2));
            p.amplitude = paired(rng, 0.8, 1.2);
            p.phase.left = uniform(rng, -0.2, 0.2);
        }
        TestKind::ForearmRoll => {
            p.freq = paired(rng, 1.2, 2.2);
            p.amplitude = paired(rng, 0.3, 0.6);
        }
        TestKind::StandAndWalk => {
            let g = &mut p.gait;
            g.step_length = uniform(rng, 0.5, 0.7);
            g.step_time = uniform(rng, 0.5, 0.65);
            g.stance_width = uniform(rng, 0.15, 0.25);
            g.stand_up = Some(uniform(rng, 1.2, 1.8));
            g.turn_time = uniform(rng, 1.0, 1.5);
        }
    }
    p
}

/// One performance of the subject's task.
fn attempt_view(p: &SynthParams, v: f64, rng: &mut ChaCha8Rng) -> SynthParams {
    let mut q = p.clone();
    if v == 0.0 {
        return q;
    }
    let mut j = |x: f64| x * (1.0 + v * uniform(rng, -1.0, 1.0));
    q.freq = PerSide { right: j(q.freq.right), left: j(q.freq.left) };
    q.amplitude = PerSide { right: j(q.amplitude.right), left: j(q.amplitude.left) };
    q.gait.step_length = j(q.gait.step_length);
    q.gait.step_time = j(q.gait.step_time);
    q.gait.stance_width = j(q.gait.stance_width);
    q.gait.turn_time = j(q.gait.turn_time);
    q.gait.stand_up = q.gait.stand_up.map(&mut j);
    q.rhythm = uniform(rng, 0.2, 1.0) * v;
    q.sway = uniform(rng, 0.1, 0.5) * v;
    let shake = uniform(rng, 0.0, 0.1) * v;
    q.tremor = PerSide { right: q.tremor.right + shake, left: q.tremor.left + shake };
    q.gait.pass_jitter = uniform(rng, 0.25, 1.0) * v;
    q
}

/// Perturbs the physical parameters as a second camera would see them.
fn device_view(p: &SynthParams, noise: f64, rng: &mut ChaCha8Rng) -> SynthParams {
    let mut q = p.clone();
    if noise == 0.0 {
        return q;
    }
    let mut j = |v: f64| v * (1.0 + noise * uniform(rng, -1.0, 1.0));
    q.freq = PerSide { right: j(q.freq.right), left: j(q.freq.left) };
    q.amplitude = PerSide { right: j(q.amplitude.right), left: j(q.amplitude.left) };
    q.gait.step_length = j(q.gait.step_length);
    q.gait.step_time = j(q.gait.step_time);
    q.gait.stance_width = j(q.gait.stance_width);
    q.gait.turn_time = j(q.gait.turn_time);
    q.gait.stand_up = q.gait.stand_up.map(&mut j);
    q.scale *= 1.0 + 2.5 * noise * uniform(rng, -1.0, 1.0);
    q.noise = noise / 10.0;
    q
}

/// Four recordings per subject, ordered subject, condition (N then A), device.
pub fn gen_cohort(cfg: &CohortConfig) -> Result<Vec<CohortMember>> {
    if cfg.subjects == 0 {
        return Err(Error::Value("cohort needs at least one subject".into()));
    }
    if !(cfg.device_noise.is_finite() && (0.0..0.2).contains(&cfg.device_noise)) {
        return Err(Error::Value(format!("device_noise must lie in [0, 0.2), got {}", cfg.device_noise)));
    }
    if !(cfg.attempt_variability.is_finite() && (0.0..0.2).contains(&cfg.attempt_variability)) {
        return Err(Error::Value(format!(
            "attempt_variability must lie in [0, 0.2), got {}",
            cfg.attempt_variability
        )));
    }
    let mut out = Vec::with_capacity(cfg.subjects * 4);
    for s in 0..cfg.subjects {
        let subject = format!("S{:03}", s + 1);
        let mut rng = stream(cfg.seed, 1000 + s as u64);
        let mut base = subject_params(cfg.test_kind, &mut rng);
        base.fps = cfg.fps;
        base.subject_id = subject.clone();
        for (c, (code, label)) in [("N", Label::Normal), ("A", Label::Abnormal)].into_iter().enumerate() {
            let mut attempt = attempt_view(&base, cfg.attempt_variability, &mut rng);
            attempt.label = label;
            attempt.seed = cfg.seed.wrapping_mul(1_000_003).wrapping_add((s * 2 + c) as u64);
            if label == Label::Abnormal {
                cfg.profile.apply(&mut attempt);
            }
            for (d, device) in DEVICES.iter().enumerate() {
                let mut view = device_view(&attempt, cfg.device_noise, &mut rng);
                view.device = (*device).into();
                view.noise_seed = Some(attempt.seed.wrapping_add(((d as u64) + 1) << 40));
                let recording = super::generate(&view)?;
                out.push(CohortMember { recording_id: format!("{subject}_{code}_{device}"), recording });
            }
        }
    }
    Ok(out)
}
