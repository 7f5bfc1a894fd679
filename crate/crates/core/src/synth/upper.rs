//! Finger tapping, finger-to-finger and forearm rolling generators.

use std::f64::consts::TAU;

use super::{add, hand_layout, stream, upper_body, Jitter, Output, SynthParams, Tremor};
use crate::error::{Error, Result};
use crate::pose::{hand, Frame, Keypoint2D, PoseRecording, Side, TestKind};

const SIDES: [Side; 2] = [Side::Right, Side::Left];
const TAP_REST: f64 = 0.03;
const FTF_GAP: f64 = 0.05;
const FTF_TOUCH_Y: f64 = -0.2;
const FTF_RISE: f64 = 0.6;

fn check_kind(p: &SynthParams, kind: TestKind) -> Result<()> {
    p.validate()?;
    if p.test_kind != kind {
        return Err(Error::Value(format!("{kind} generator called with test_kind {}", p.test_kind)));
    }
    Ok(())
}

/// +1 towards the body midline for `side` in image x.
fn inward(side: Side) -> f64 {
    if side == Side::Left {
        -1.0
    } else {
        1.0
    }
}

fn tremors(p: &SynthParams) -> [[Tremor; 2]; 2] {
    let mut rng = stream(p.seed, 2);
    SIDES.map(|s| [Tremor::new(p.tremor.get(s), &mut rng), Tremor::new(p.tremor.get(s), &mut rng)])
}

fn hand_points(pts: &[[f64; 2]; 21], out: &Output, jitter: &mut Jitter) -> Vec<Keypoint2D> {
    pts.iter().map(|&q| out.k2(jitter.p2(q))).collect()
}

/// Slow variation within one performance: frequency wander and arm drift.
struct Performance {
    wander: [Tremor; 2],
    sway: [[Tremor; 2]; 2],
}

impl Performance {
    fn new(p: &SynthParams) -> Self {
        let mut rng = stream(p.seed, 3);
        let wander = SIDES.map(|_| Tremor::band(p.rhythm, 0.1, 0.5, &mut rng));
        let sway = SIDES.map(|_| [0, 1].map(|_| Tremor::band(p.sway, 0.05, 0.4, &mut rng)));
        Self { wander, sway }
    }

    /// Movement angle of one side, `2 pi f t + phase` under the wander.
    fn angle(&self, p: &SynthParams, k: usize, t: f64) -> f64 {
        let side = SIDES[k];
        TAU * p.freq.get(side) * (t + self.wander[k].integral(t)) + p.phase.get(side)
    }

    /// Raised-cosine movement phase in [0, 1], zero at `t = 0` for zero phase.
    fn opening(&self, p: &SynthParams, k: usize, t: f64) -> f64 {
        0.5 * (1.0 - self.angle(p, k, t).cos())
    }

    fn drift(&self, k: usize, t: f64) -> [f64; 2] {
        [self.sway[k][0].at(t), self.sway[k][1].at(t)]
    }
}

/// Thumb-index distance follows `rest + amplitude * opening(t)` on each hand.
pub fn gen_ft(p: &SynthParams) -> Result<PoseRecording> {
    check_kind(p, TestKind::FingerTap)?;
    let out = Output::new(p);
    let mut jitter = p.jitter();
    let tremor = tremors(p);
    let perf = Performance::new(p);
    let frames = (0..p.frame_count())
        .map(|i| {
            let t = i as f64 / p.fps;
            let [(rw, re), (lw, le)] = [0, 1].map(|k| {
                let x = -inward(SIDES[k]);
                let d = perf.drift(k, t);
                (add([x, -0.5], d), add([x, 0.5], d))
            });
            let body = upper_body(rw, re, lw, le);
            let [right, left] = [0, 1].map(|k| {
                let side = SIDES[k];
                let wrist = if k == 0 { rw } else { lw };
                let mut pts = hand_layout(side).map(|q| add(q, wrist));
                let d = TAP_REST + p.amplitude.get(side) * perf.opening(p, k, t);
                let dir = [-0.6 * inward(side), -0.8];
                let tip = pts[hand::THUMB_TIP];
                pts[hand::INDEX_TIP] = [
                    tip[0] + d * dir[0] + tremor[k][0].at(t),
                    tip[1] + d * dir[1] + tremor[k][1].at(t),
                ];
                pts
            });
            Frame {
                body2d: Some(body.keypoints(&out, &mut jitter)),
                hand2d_right: Some(hand_points(&right, &out, &mut jitter)),
                hand2d_left: Some(hand_points(&left, &out, &mut jitter)),
                body3d: None,
            }
        })
        .collect();
    PoseRecording::new(p.meta(), frames)
}

/// Index fingers travel on mirrored parabolic arcs and meet near the midline.
/// Horizontal distance from the midline is `gap + amplitude * opening(t)`;
/// height rises with the square of that travel.
pub fn gen_ftf(p: &SynthParams) -> Result<PoseRecording> {
    check_kind(p, TestKind::FingerToFinger)?;
    let out = Output::new(p);
    let mut jitter = p.jitter();
    let tremor = tremors(p);
    let perf = Performance::new(p);
    let frames = (0..p.frame_count())
        .map(|i| {
            let t = i as f64 / p.fps;
            let [(right, rw), (left, lw)] = [0, 1].map(|k| {
                let side = SIDES[k];
                let u = perf.opening(p, k, t);
                let travel = p.amplitude.get(side) * u;
                let target = [
                    -inward(side) * (FTF_GAP + travel) + tremor[k][0].at(t),
                    FTF_TOUCH_Y - FTF_RISE * travel * travel + tremor[k][1].at(t),
                ];
                let layout = hand_layout(side);
                let shift = [target[0] - layout[hand::INDEX_MID][0], target[1] - layout[hand::INDEX_MID][1]];
                (layout.map(|q| add(q, shift)), shift)
            });
            let body = upper_body(rw, add(rw, [0.0, 1.0]), lw, add(lw, [0.0, 1.0]));
            Frame {
                body2d: Some(body.keypoints(&out, &mut jitter)),
                hand2d_right: Some(hand_points(&right, &out, &mut jitter)),
                hand2d_left: Some(hand_points(&left, &out, &mut jitter)),
                body3d: None,
            }
        })
        .collect();
    PoseRecording::new(p.meta(), frames)
}

/// Wrists circle static elbows so the forearm length stays fixed while each
/// wrist's height follows a sinusoid of the given peak-to-peak amplitude.
pub fn gen_fr(p: &SynthParams) -> Result<PoseRecording> {
    check_kind(p, TestKind::ForearmRoll)?;
    if p.amplitude.right > 2.0 || p.amplitude.left > 2.0 {
        return Err(Error::Value("forearm roll amplitude cannot exceed twice the forearm".into()));
    }
    let out = Output::new(p);
    let mut jitter = p.jitter();
    let perf = Performance::new(p);
    let frames = (0..p.frame_count())
        .map(|i| {
            let t = i as f64 / p.fps;
            let [(rw, re), (lw, le)] = [0, 1].map(|k| {
                let side = SIDES[k];
                let s = 0.5 * p.amplitude.get(side) * perf.angle(p, k, t).sin();
                let e = add([-inward(side) * 1.1, 0.0], perf.drift(k, t));
                ([e[0] + inward(side) * (1.0 - s * s).sqrt(), e[1] + s], e)
            });
            let body = upper_body(rw, re, lw, le);
            let right = hand_layout(Side::Right).map(|q| add(q, rw));
            let left = hand_layout(Side::Left).map(|q| add(q, lw));
            Frame {
                body2d: Some(body.keypoints(&out, &mut jitter)),
                hand2d_right: Some(hand_points(&right, &out, &mut jitter)),
                hand2d_left: Some(hand_points(&left, &out, &mut jitter)),
                body3d: None,
            }
        })
        .collect();
    PoseRecording::new(p.meta(), frames)
}
