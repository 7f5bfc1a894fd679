//! Stand-up-and-walk generator.
//!
//! The 3D body is pelvis-relative with x forward, y down and z towards the
//! subject's right. The 2D body is a side view whose pelvis carries the
//! global travel.

use std::f64::consts::{PI, TAU};

use rand::Rng;

use super::{stream, Body2, Body3, Limbs2, Limbs3, Output, SynthParams};
use crate::error::{Error, Result};
use crate::pose::{Frame, PoseRecording, Side, TestKind};

const LEG: f64 = 1.8;
const RISE: f64 = 1.0;
/// Knee angle (rad) with no flexion.
const KNEE_STRAIGHT: f64 = 2.9;
const KNEE_SEATED: f64 = PI / 2.0;
/// Peak swing flexion (rad).
const SWING_FLEX: f64 = 0.9;

/// Where the subject is in the protocol at one instant.
#[derive(Debug, Clone, Copy)]
enum Phase {
    /// Seated before the stand-up, or standing still; `rise` in [0, 1].
    Still { rise: f64 },
    Walk { pass: usize, t: f64 },
    /// Turning after `pass`, `t` seconds in.
    Turn { pass: usize, t: f64 },
}

/// One walking pass.
struct Pass {
    start: f64,
    step_time: f64,
    step_length: f64,
    stance_width: f64,
    /// Forward reach factor of each step.
    reach: Vec<f64>,
    /// Pelvis x at the start of the pass.
    origin: f64,
    dir: f64,
}

impl Pass {
    fn speed(&self) -> f64 {
        self.step_length / self.step_time
    }
}

struct Timeline {
    stand_start: f64,
    walk_start: f64,
    steps: usize,
    passes: Vec<Pass>,
    end: f64,
    seated: bool,
}

impl Timeline {
    fn new(p: &SynthParams) -> Self {
        let g = &p.gait;
        let stand_start = g.rest;
        let walk_start = stand_start + g.stand_up.unwrap_or(0.0);
        let steps = steps_per_pass(p);
        let mut rng = stream(p.seed, 5);
        let mut vary = |v: f64| v * (1.0 + g.pass_jitter * rng.random_range(-1.0..=1.0));
        let mut passes: Vec<Pass> = Vec::with_capacity(g.passes);
        let (mut start, mut origin) = (walk_start, 0.0);
        for k in 0..g.passes {
            if k > 0 {
                start += vary(g.turn_time);
            }
            let pass = Pass {
                start,
                step_time: vary(g.step_time),
                step_length: vary(g.step_length),
                stance_width: vary(g.stance_width),
                reach: (0..steps).map(|_| vary(1.0)).collect(),
                origin,
                dir: if k % 2 == 0 { 1.0 } else { -1.0 },
            };
            start += steps as f64 * pass.step_time;
            origin += pass.dir * steps as f64 * pass.step_time * pass.speed();
            passes.push(pass);
        }
        let end = start + g.rest;
        Self { stand_start, walk_start, steps, passes, end, seated: g.stand_up.is_some() }
    }

    fn at(&self, t: f64) -> Phase {
        if t < self.walk_start {
            let rise = match (self.seated, t < self.stand_start) {
                (false, _) => 1.0,
                (true, true) => 0.0,
                (true, false) => {
                    let u = (t - self.stand_start) / (self.walk_start - self.stand_start);
                    0.5 * (1.0 - (PI * u).cos())
                }
            };
            return Phase::Still { rise };
        }
        let k = self.passes.partition_point(|q| q.start <= t).saturating_sub(1);
        let within = t - self.passes[k].start;
        let walk = self.steps as f64 * self.passes[k].step_time;
        if within < walk {
            Phase::Walk { pass: k, t: within }
        } else {
            Phase::Turn { pass: k, t: within - walk }
        }
    }

    /// Lateral foot separation; it shifts to the next pass's width during a turn.
    fn stance_width(&self, phase: Phase) -> f64 {
        match phase {
            Phase::Still { .. } => self.passes[0].stance_width,
            Phase::Walk { pass, .. } => self.passes[pass].stance_width,
            Phase::Turn { pass, t } => {
                let from = &self.passes[pass];
                let Some(to) = self.passes.get(pass + 1) else { return from.stance_width };
                let span = to.start - from.start - self.steps as f64 * from.step_time;
                let u = 0.5 * (1.0 - (PI * (t / span).min(1.0)).cos());
                from.stance_width + (to.stance_width - from.stance_width) * u
            }
        }
    }

    /// Pelvis x at the end of pass `k`.
    fn pass_end(&self, k: usize) -> f64 {
        let q = &self.passes[k];
        q.origin + q.dir * self.steps as f64 * q.step_length
    }
}

fn steps_per_pass(p: &SynthParams) -> usize {
    let k = p.gait.steps_per_pass;
    k + k % 2
}

fn bump(phase: f64, centre: f64, width: f64) -> f64 {
    let d = (phase - centre + 0.5).rem_euclid(1.0) - 0.5;
    if d.abs() >= width {
        0.0
    } else {
        0.5 * (1.0 + (PI * d / width).cos())
    }
}

/// Knee flexion over one stride; `phase` 0 is the start of that leg's stance.
fn knee_flexion(phase: f64, rom: f64) -> f64 {
    let f = 0.3 * SWING_FLEX * bump(phase, 0.2, 0.12) + SWING_FLEX * bump(phase, 0.75, 0.2);
    f.min(rom) + (SWING_FLEX - rom).max(0.0) * bump(phase, 0.35, 0.12)
}

/// Monotone warp of a step's phase that keeps its ends and midpoint fixed.
fn warp(f: f64, skew: f64) -> f64 {
    f - skew * (TAU * f).sin() / TAU
}

/// Forward offset of the right foot minus the left foot at `t` into a pass.
fn foot_split(p: &SynthParams, q: &Pass, t: f64) -> f64 {
    let g = &p.gait;
    let forward = (q.step_length.powi(2) - q.stance_width.powi(2)).sqrt();
    let s = t / q.step_time;
    let step = s.floor();
    // even steps lead with the right foot
    let lead = if step as i64 % 2 == 0 { Side::Right } else { Side::Left };
    let phase = step + warp(s - step, g.swing_skew.get(lead));
    let sine = (PI * phase).sin();
    let reach = g.reach.get(if sine >= 0.0 { Side::Right } else { Side::Left });
    let vary = q.reach[(step.max(0.0) as usize).min(q.reach.len() - 1)];
    forward * reach * vary * sine
}

/// Knee placed on the perpendicular bisector of hip and foot so the angle at
/// the knee equals `angle`, bending forward.
fn place_knee(hip: [f64; 3], foot: [f64; 3], angle: f64) -> [f64; 3] {
    let (dx, dy) = (foot[0] - hip[0], foot[1] - hip[1]);
    let len = dx.hypot(dy);
    let offset = 0.5 * len / (0.5 * angle).tan();
    let n = [dy / len, -dx / len];
    [0.5 * (hip[0] + foot[0]) + offset * n[0], 0.5 * (hip[1] + foot[1]) + offset * n[1], hip[2]]
}

fn body3(p: &SynthParams, tl: &Timeline, phase: Phase) -> Body3 {
    let g = &p.gait;
    let half = 0.5 * tl.stance_width(phase);
    let (split, angles) = match phase {
        Phase::Still { rise } => (0.0, [KNEE_SEATED + (KNEE_STRAIGHT - KNEE_SEATED) * rise; 2]),
        Phase::Turn { .. } => (0.0, [KNEE_STRAIGHT; 2]),
        Phase::Walk { pass, t } => {
            let q = &tl.passes[pass];
            let stride = t / (2.0 * q.step_time);
            let angle = |side: Side, offset: f64| KNEE_STRAIGHT - knee_flexion(stride + offset, g.knee_rom.get(side));
            (foot_split(p, q, t), [angle(Side::Right, 0.0), angle(Side::Left, 0.5)])
        }
    };
    let leg = |z: f64, x: f64, angle: f64| {
        let hip = [0.0, 0.0, z];
        let foot = [x, LEG, z];
        Limbs3 { foot, knee: place_knee(hip, foot, angle), hip }
    };
    Body3 {
        neck: [0.0, -1.0, 0.0],
        right: leg(half, 0.5 * split, angles[0]),
        left: leg(-half, -0.5 * split, angles[1]),
    }
}

/// Side-view projection of the pelvis-relative body around a 2D pelvis.
fn body2(b3: &Body3, pelvis: [f64; 2], dir: f64) -> Body2 {
    let project = |q: [f64; 3]| [pelvis[0] + dir * q[0], pelvis[1] + q[1]];
    let limbs = |side: Side| {
        let l = if side == Side::Left { &b3.left } else { &b3.right };
        Limbs2 {
            foot: project(l.foot),
            knee: project(l.knee),
            hip: project(l.hip),
            shoulder: project(b3.point(side, "shoulder")),
            elbow: project(b3.point(side, "elbow")),
            wrist: project(b3.point(side, "wrist")),
        }
    };
    Body2 { pelvis, neck: project(b3.neck), right: limbs(Side::Right), left: limbs(Side::Left) }
}

/// Pelvis travel is `step_length / step_time` during passes, alternating
/// direction, and zero otherwise.
pub fn gen_saw(p: &SynthParams) -> Result<PoseRecording> {
    p.validate()?;
    if p.test_kind != TestKind::StandAndWalk {
        return Err(Error::Value(format!("SAW generator called with test_kind {}", p.test_kind)));
    }
    let tl = Timeline::new(p);
    let out = Output::new(p);
    let mut jitter = p.jitter();
    let n = (tl.end * p.fps).round() as usize;
    let frames = (0..n)
        .map(|i| {
            let t = i as f64 / p.fps;
            let phase = tl.at(t);
            let (x, dir, rise) = match phase {
                Phase::Still { rise } => (0.0, 1.0, rise),
                Phase::Walk { pass, t } => {
                    let q = &tl.passes[pass];
                    (q.origin + q.dir * q.speed() * t, q.dir, 1.0)
                }
                Phase::Turn { pass, .. } => (tl.pass_end(pass), tl.passes[pass].dir, 1.0),
            };
            let b3 = body3(p, &tl, phase);
            let b2 = body2(&b3, [x, RISE * (1.0 - rise)], dir);
            Frame {
                body2d: Some(b2.keypoints(&out, &mut jitter)),
                body3d: Some(b3.keypoints(&out, &mut jitter)),
                hand2d_left: None,
                hand2d_right: None,
            }
        })
        .collect();
    PoseRecording::new(p.meta(), frames)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::SynthParams;

    #[test]
    fn knee_flexion_is_zero_at_half_strides() {
        for rom in [0.3, 0.5, 1.0] {
            assert_eq!(knee_flexion(0.0, rom), 0.0);
            assert_eq!(knee_flexion(0.5, rom), 0.0);
        }
        let peak = (0..1000).map(|i| knee_flexion(i as f64 / 1000.0, 1.0)).fold(0.0, f64::max);
        assert!((peak - SWING_FLEX).abs() < 1e-6);
    }

    #[test]
    fn knee_placement_gives_requested_angle() {
        let hip = [0.0, 0.0, 0.1];
        let foot = [0.3, 1.8, 0.1];
        for angle in [1.6, 2.0, 2.9] {
            let k = place_knee(hip, foot, angle);
            let a = [hip[0] - k[0], hip[1] - k[1]];
            let b = [foot[0] - k[0], foot[1] - k[1]];
            let cos = (a[0] * b[0] + a[1] * b[1]) / (a[0].hypot(a[1]) * b[0].hypot(b[1]));
            assert!((cos.acos() - angle).abs() < 1e-12);
            assert!(k[0] > 0.15, "knee bends forward");
        }
    }

    #[test]
    fn warp_is_monotone_with_fixed_points() {
        for skew in [0.0, 0.5, 0.9] {
            assert_eq!(warp(0.0, skew), 0.0);
            assert!((warp(0.5, skew) - 0.5).abs() < 1e-15);
            assert!((warp(1.0, skew) - 1.0).abs() < 1e-15);
            let mut last = -1.0;
            for i in 0..=100 {
                let w = warp(i as f64 / 100.0, skew);
                assert!(w > last);
                last = w;
            }
        }
    }

    #[test]
    fn foot_split_peaks_at_configured_step_length() {
        let p = SynthParams::for_test(TestKind::StandAndWalk);
        let g = &p.gait;
        let tl = Timeline::new(&p);
        let q = &tl.passes[0];
        let t = 0.5 * g.step_time;
        let d = foot_split(&p, q, t).hypot(g.stance_width);
        assert!((d - g.step_length).abs() < 1e-12);
        assert!(foot_split(&p, q, 1.5 * g.step_time) < 0.0);
    }

    #[test]
    fn timeline_covers_protocol() {
        let p = SynthParams::for_test(TestKind::StandAndWalk);
        let rec = gen_saw(&p).unwrap();
        let g = &p.gait;
        let expected = 2.0 * g.rest + g.stand_up.unwrap() + 4.0 * 8.0 * g.step_time + 3.0 * g.turn_time;
        assert!((rec.duration() - expected).abs() < 2.0 / p.fps);
    }
}
