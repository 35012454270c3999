//! Moves, pose evaluation and certified validation of motion plans.
//!
//! A move changes at most five joint rotations, each monotone in `t`.
//! Validation is by conservative advancement: over each time step the
//! maximum vertex displacement is bounded from the angular speeds and the
//! distances to the rotation axes, and the step is accepted only when that
//! bound is below half the clearance at the step start.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{ChainConfig, LinkLengths};
use crate::error::{Error, Result};
use crate::geom::{self, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Prefix,
    Suffix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Driver {
    #[default]
    First,
    Last,
}

/// Detour of a coupled lift: elevation (radians above the horizontal,
/// negative below) the edge dips to, and its turn about `up` at that
/// elevation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiftDetour {
    pub dip: f64,
    pub turn: f64,
}

/// One reconfiguration step. Angles are radians; axes are world-frame
/// directions at the start of the move (they stay fixed in the frame of the
/// part of the chain that does not move).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Move {
    /// Rotate one side of an open chain about an axis through `joint`.
    SingleJoint { joint: usize, axis: [f64; 3], side: Side, angle: f64 },
    /// Rotate the vertices strictly between `a` and `b` (forward, cyclic for
    /// closed chains) about the line through `v[a]` and `v[b]`.
    SubchainAboutLine { a: usize, b: usize, angle: f64 },
    /// Swing edge `joint-1 -> joint` about `v[joint-1]`, inside the plane
    /// spanned by the edge and `up`, until it points along `up`; the suffix
    /// beyond `joint` must already lie on the ray from `v[joint]` along `up`
    /// and rides along rigidly. With a `detour`, the edge first swings down
    /// to the elevation `dip`, then turns by `turn` about `up`, and only then
    /// swings up.
    CoupledLift {
        joint: usize,
        up: [f64; 3],
        #[serde(default, skip_serializing_if = "Option::is_none")]
        detour: Option<LiftDetour>,
    },
    /// Closed chain split at `joints = [p, q, r, s]` (forward cyclic order)
    /// into blocks `p..q` (turns about `v[p]` and `axis_first`), `q..r`
    /// (coupler), `r..s` (turns about `v[s]` and `axis_last`) and the fixed
    /// block `s..p`. The driver pivot turns by `angle`; the other follows
    /// from closure.
    FourBar {
        joints: [usize; 4],
        axis_first: [f64; 3],
        axis_last: [f64; 3],
        #[serde(default)]
        driver: Driver,
        angle: f64,
    },
}

impl Move {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Move::SingleJoint { .. } => "single-joint",
            Move::SubchainAboutLine { .. } => "subchain-about-line",
            Move::CoupledLift { .. } => "coupled-lift",
            Move::FourBar { .. } => "four-bar",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotionPlan {
    pub initial: ChainConfig,
    pub moves: Vec<Move>,
}

impl MotionPlan {
    pub fn new(initial: ChainConfig) -> Self {
        MotionPlan { initial, moves: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }
}

fn unit(a: [f64; 3], what: &str) -> Result<Point> {
    let p = Point::from_array(a);
    if !p.is_finite() {
        return Err(Error::NonFinite);
    }
    p.normalized().ok_or_else(|| Error::InvalidMove(format!("{what} axis is zero")))
}

fn wrap_angle(a: f64) -> f64 {
    let mut r = a % TAU;
    if r > PI {
        r -= TAU;
    } else if r <= -PI {
        r += TAU;
    }
    r
}

/// Pivot circle of a point turning about an axis.
#[derive(Debug, Clone, Copy)]
struct Circle {
    center: Point,
    radius: f64,
    e1: Point,
    e2: Point,
}

impl Circle {
    fn new(p: Point, pivot: Point, axis: Point) -> Option<Circle> {
        let w = p - pivot;
        let par = axis * axis.dot(w);
        let perp = w - par;
        let radius = perp.norm();
        if radius <= 0.0 {
            return None;
        }
        let e1 = perp / radius;
        Some(Circle { center: pivot + par, radius, e1, e2: axis.cross(e1) })
    }

    /// Angles at which the circle point is at distance `len` from `x`:
    /// `phi + acos(ratio)` and `phi - acos(ratio)`, or `None` if unreachable.
    fn solve(&self, x: Point, len: f64) -> Option<(f64, f64)> {
        let d = x - self.center;
        let a = d.dot(self.e1);
        let b = d.dot(self.e2);
        let r = a.hypot(b);
        let rhs = (d.norm2() + self.radius * self.radius - len * len) / (2.0 * self.radius);
        if r == 0.0 {
            return None;
        }
        let mut ratio = rhs / r;
        if ratio.abs() > 1.0 {
            if ratio.abs() > 1.0 + 1e-10 {
                return None;
            }
            ratio = ratio.signum();
        }
        Some((b.atan2(a), ratio.acos()))
    }
}

#[derive(Debug, Clone)]
enum Kin {
    Rotation {
        origin: Point,
        axis: Point,
        angle: f64,
        radius: f64,
    },
    Lift {
        base: Point,
        horiz: Point,
        up: Point,
        len: f64,
        phi0: f64,
        /// Dip elevation and turn angle; no detour is a zero-length dip and
        /// no turn.
        dip: f64,
        turn: f64,
        offsets: Vec<Point>,
    },
    FourBar(Box<FourBarKin>),
}

#[derive(Debug, Clone)]
struct FourBarKin {
    joints: [usize; 4],
    first: Point,
    last: Point,
    axis_first: Point,
    axis_last: Point,
    driver: Driver,
    angle: f64,
    /// Circle of `v[q]` about the first pivot, and of `v[r]` about the last.
    circle_q: Circle,
    circle_r: Circle,
    coupler_len: f64,
    /// +1 or -1: which closure branch passes through the start pose.
    branch: f64,
    block_a: Vec<usize>,
    block_b: Vec<usize>,
    block_c: Vec<usize>,
    radius_a: f64,
    radius_b: f64,
    radius_c: f64,
    planar: bool,
    q0: Point,
    r0: Point,
}

/// A move bound to the configuration it starts from.
#[derive(Debug, Clone)]
pub struct PreparedMove {
    start: Vec<Point>,
    moving: Vec<usize>,
    kin: Kin,
}

fn forward_range(from: usize, to: usize, n: usize) -> Vec<usize> {
    // Indices strictly after `from` up to and including `to`.
    let mut out = Vec::new();
    let mut k = from;
    loop {
        k = (k + 1) % n;
        out.push(k);
        if k == to {
            break;
        }
    }
    out
}

impl PreparedMove {
    pub fn new(mv: &Move, config: &ChainConfig) -> Result<Self> {
        let v = config.vertices();
        let n = v.len();
        let closed = config.is_closed();
        let check = |i: usize| {
            if i < n {
                Ok(())
            } else {
                Err(Error::InvalidMove(format!("vertex index {i} out of range (n = {n})")))
            }
        };
        let (moving, kin) = match *mv {
            Move::SingleJoint { joint, axis, side, angle } => {
                check(joint)?;
                if closed {
                    return Err(Error::InvalidMove("single-joint move on a closed chain".into()));
                }
                let axis = unit(axis, "single-joint")?;
                let moving: Vec<usize> = match side {
                    Side::Suffix => (joint + 1..n).collect(),
                    Side::Prefix => (0..joint).collect(),
                };
                let origin = v[joint];
                let radius = moving.iter().map(|&k| v[k].dist_to_line(origin, axis)).fold(0.0, f64::max);
                (moving, Kin::Rotation { origin, axis, angle, radius })
            }
            Move::SubchainAboutLine { a, b, angle } => {
                check(a)?;
                check(b)?;
                if a == b || (!closed && a > b) {
                    return Err(Error::InvalidMove(format!("bad subchain range {a}..{b}")));
                }
                let mut moving = forward_range(a, b, n);
                moving.pop();
                let axis = (v[b] - v[a])
                    .normalized()
                    .ok_or_else(|| Error::InvalidMove("subchain axis endpoints coincide".into()))?;
                let origin = v[a];
                let radius = moving.iter().map(|&k| v[k].dist_to_line(origin, axis)).fold(0.0, f64::max);
                (moving, Kin::Rotation { origin, axis, angle, radius })
            }
            Move::CoupledLift { joint, up, detour } => {
                check(joint)?;
                if closed || joint == 0 {
                    return Err(Error::InvalidMove("coupled-lift needs an open chain and joint >= 1".into()));
                }
                let up = unit(up, "coupled-lift")?;
                let base = v[joint - 1];
                let pivot = v[joint];
                let tol = 1e-9 * config.diameter().max(f64::MIN_POSITIVE);
                let offsets: Vec<Point> = (joint + 1..n).map(|k| v[k] - pivot).collect();
                for (k, o) in offsets.iter().enumerate() {
                    if (*o - up * o.dot(up)).norm() > tol || o.dot(up) <= 0.0 {
                        return Err(Error::InvalidMove(format!(
                            "coupled-lift suffix vertex {} is not on the ray above joint {joint}",
                            joint + 1 + k
                        )));
                    }
                }
                let d = pivot - base;
                let len = d.norm();
                let h = d - up * d.dot(up);
                let horiz = h
                    .normalized()
                    .ok_or_else(|| Error::InvalidMove("coupled-lift edge is already parallel to up".into()))?;
                let phi0 = d.dot(up).atan2(h.norm());
                let (dip, turn) = match detour {
                    None => (phi0, 0.0),
                    Some(LiftDetour { dip, turn }) => {
                        if !(dip.is_finite() && turn.is_finite()) {
                            return Err(Error::NonFinite);
                        }
                        if !(dip > -FRAC_PI_2 && dip <= phi0) {
                            return Err(Error::InvalidMove(format!(
                                "coupled-lift dip {dip} must lie in (-pi/2, {phi0}]"
                            )));
                        }
                        (dip, turn)
                    }
                };
                let moving: Vec<usize> = (joint..n).collect();
                (moving, Kin::Lift { base, horiz, up, len, phi0, dip, turn, offsets })
            }
            Move::FourBar { joints, axis_first, axis_last, driver, angle } => {
                if !closed {
                    return Err(Error::InvalidMove("four-bar move needs a closed chain".into()));
                }
                for &j in &joints {
                    check(j)?;
                }
                let [p, q, r, s] = joints;
                let pos = |k: usize| (k + n - p) % n;
                if !(pos(q) > 0 && pos(r) > pos(q) && pos(s) > pos(r)) {
                    return Err(Error::InvalidMove(format!("four-bar joints {joints:?} are not in cyclic order")));
                }
                let axis_first = unit(axis_first, "four-bar first")?;
                let axis_last = unit(axis_last, "four-bar last")?;
                let block_a = forward_range(p, q, n);
                let mut block_b = forward_range(q, r, n);
                block_b.pop();
                let mut block_c = vec![r];
                block_c.extend(forward_range(r, s, n));
                block_c.pop();
                let planar = axis_first.cross(axis_last).norm() < 1e-12 && axis_first.dot(axis_last) > 0.0;
                if !block_b.is_empty() && !planar {
                    return Err(Error::InvalidMove("a spatial four-bar needs a single-bar coupler".into()));
                }
                let first = v[p];
                let last = v[s];
                let circle_q = Circle::new(v[q], first, axis_first)
                    .ok_or_else(|| Error::InvalidMove("four-bar joint q lies on the first axis".into()))?;
                let circle_r = Circle::new(v[r], last, axis_last)
                    .ok_or_else(|| Error::InvalidMove("four-bar joint r lies on the last axis".into()))?;
                let coupler_len = v[q].dist(v[r]);
                let (fixed_pt, circle) = match driver {
                    Driver::First => (v[q], &circle_r),
                    Driver::Last => (v[r], &circle_q),
                };
                let (phi, acos) = circle.solve(fixed_pt, coupler_len).ok_or(Error::ClosureUnreachable {
                    t: 0.0,
                    angle: "start pose".into(),
                })?;
                let branch = if wrap_angle(phi + acos).abs() <= wrap_angle(phi - acos).abs() { 1.0 } else { -1.0 };
                let radius = |block: &[usize], o: Point, ax: Point| {
                    block.iter().map(|&k| v[k].dist_to_line(o, ax)).fold(0.0, f64::max)
                };
                let radius_a = radius(&block_a, first, axis_first);
                let radius_c = radius(&block_c, last, axis_last);
                let radius_b = block_b.iter().map(|&k| v[k].dist(v[q])).fold(0.0, f64::max);
                let mut moving = block_a.clone();
                moving.extend(&block_b);
                moving.extend(&block_c);
                moving.sort_unstable();
                let kin = FourBarKin {
                    joints,
                    first,
                    last,
                    axis_first,
                    axis_last,
                    driver,
                    angle,
                    circle_q,
                    circle_r,
                    coupler_len,
                    branch,
                    block_a,
                    block_b,
                    block_c,
                    radius_a,
                    radius_b,
                    radius_c,
                    planar,
                    q0: v[q],
                    r0: v[r],
                };
                (moving, Kin::FourBar(Box::new(kin)))
            }
        };
        Ok(PreparedMove { start: v.to_vec(), moving, kin })
    }

    /// Vertex indices that move.
    pub fn moving(&self) -> &[usize] {
        &self.moving
    }

    pub fn start(&self) -> &[Point] {
        &self.start
    }

    /// Joint parameters at `t`: rotation angles of the varying joints.
    pub fn schedule(&self, t: f64) -> Result<Vec<f64>> {
        Ok(match &self.kin {
            Kin::Rotation { angle, .. } => vec![angle * t],
            Kin::Lift { .. } => {
                let (down, turned, raised) = self.lift_progress(t);
                // The edge dips, turns and rises; the joint above it turns
                // back by the dip and by the rise, keeping the suffix along up.
                vec![-down, turned, raised, down, -raised]
            }
            Kin::FourBar(fb) => {
                let (alpha, gamma) = fb.pivot_angles(t)?;
                if fb.planar {
                    let beta = fb.coupler_angle(alpha, gamma);
                    vec![alpha, beta - alpha, gamma - beta, gamma]
                } else {
                    vec![alpha, gamma]
                }
            }
        })
    }

    pub fn pose(&self, t: f64) -> Result<Vec<Point>> {
        let mut out = self.start.clone();
        match &self.kin {
            Kin::Rotation { origin, axis, angle, .. } => {
                let a = angle * t;
                for &k in &self.moving {
                    out[k] = self.start[k].rotate_about(*origin, *axis, a);
                }
            }
            Kin::Lift { base, horiz, up, len, phi0, offsets, .. } => {
                let (down, turned, raised) = self.lift_progress(t);
                let phi = phi0 - down + raised;
                let (s, c) = phi.sin_cos();
                let h = horiz.rotate_about(Point::default(), *up, turned);
                let pivot = *base + (h * c + *up * s) * *len;
                let j = self.moving[0];
                out[j] = pivot;
                for (k, o) in offsets.iter().enumerate() {
                    out[j + 1 + k] = pivot + *o;
                }
            }
            Kin::FourBar(fb) => {
                let (alpha, gamma) = fb.pivot_angles(t)?;
                for &k in &fb.block_a {
                    out[k] = self.start[k].rotate_about(fb.first, fb.axis_first, alpha);
                }
                for &k in &fb.block_c {
                    out[k] = self.start[k].rotate_about(fb.last, fb.axis_last, gamma);
                }
                if !fb.block_b.is_empty() {
                    let beta = fb.coupler_angle(alpha, gamma);
                    let q_new = out[fb.joints[1]];
                    for &k in &fb.block_b {
                        out[k] = q_new + (self.start[k] - fb.q0).rotate_about(Point::default(), fb.axis_first, beta);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Path lengths of the moving joint in the dip, turn and rise phases.
    fn lift_weights(&self) -> [f64; 3] {
        match &self.kin {
            Kin::Lift { len, phi0, dip, turn, .. } => {
                [len * (phi0 - dip), len * dip.cos() * turn.abs(), len * (FRAC_PI_2 - dip)]
            }
            _ => [0.0; 3],
        }
    }

    /// Dip, turn (signed) and rise angles completed at `t`; the phases run
    /// one after another at constant joint speed.
    fn lift_progress(&self, t: f64) -> (f64, f64, f64) {
        let Kin::Lift { phi0, dip, turn, .. } = &self.kin else { return (0.0, 0.0, 0.0) };
        let w = self.lift_weights();
        let total: f64 = w.iter().sum();
        if total <= 0.0 {
            return (0.0, 0.0, 0.0);
        }
        // A phase of zero length also has a zero angle, so its fraction is moot.
        let mut s = t.clamp(0.0, 1.0) * total;
        let mut frac = |w: f64| {
            let done = s.min(w);
            s -= done;
            if w > 0.0 { done / w } else { 0.0 }
        };
        let (f0, f1, f2) = (frac(w[0]), frac(w[1]), frac(w[2]));
        ((phi0 - dip) * f0, turn * f1, (FRAC_PI_2 - dip) * f2)
    }

    /// Upper bound on how far any vertex travels during `[t0, t1]`.
    pub fn displacement_bound(&self, t0: f64, t1: f64) -> Result<f64> {
        let dt = (t1 - t0).abs();
        Ok(match &self.kin {
            Kin::Rotation { angle, radius, .. } => angle.abs() * dt * radius,
            Kin::Lift { .. } => self.lift_weights().iter().sum::<f64>() * dt,
            Kin::FourBar(fb) => {
                let tm = 0.5 * (t0 + t1);
                let s0 = self.schedule(t0)?;
                let sm = self.schedule(tm)?;
                let s1 = self.schedule(t1)?;
                let var = |k: usize| wrap_angle(sm[k] - s0[k]).abs() + wrap_angle(s1[k] - sm[k]).abs();
                let last = s0.len() - 1;
                let d_alpha = var(0);
                let d_gamma = var(last);
                let mut bound = (d_alpha * fb.radius_a).max(d_gamma * fb.radius_c);
                if fb.planar && !fb.block_b.is_empty() {
                    // Coupler orientation is alpha + (beta - alpha).
                    let d_beta = d_alpha + var(1);
                    let q_disp = d_alpha * fb.circle_q.radius;
                    bound = bound.max(q_disp + d_beta * fb.radius_b);
                }
                bound
            }
        })
    }
}

impl FourBarKin {
    fn pivot_angles(&self, t: f64) -> Result<(f64, f64)> {
        let driven = self.angle * t;
        let unreachable = |which: &str| Error::ClosureUnreachable { t, angle: format!("{which} pivot angle") };
        match self.driver {
            Driver::First => {
                let q = self.q0.rotate_about(self.first, self.axis_first, driven);
                let (phi, ac) = self.circle_r.solve(q, self.coupler_len).ok_or_else(|| unreachable("last"))?;
                Ok((driven, wrap_angle(phi + self.branch * ac)))
            }
            Driver::Last => {
                let r = self.r0.rotate_about(self.last, self.axis_last, driven);
                let (phi, ac) = self.circle_q.solve(r, self.coupler_len).ok_or_else(|| unreachable("first"))?;
                Ok((wrap_angle(phi + self.branch * ac), driven))
            }
        }
    }

    /// Rotation of the coupler about the (shared) axis, planar case.
    fn coupler_angle(&self, alpha: f64, gamma: f64) -> f64 {
        let q = self.q0.rotate_about(self.first, self.axis_first, alpha);
        let r = self.r0.rotate_about(self.last, self.axis_last, gamma);
        let n = self.axis_first;
        let flat = |d: Point| d - n * n.dot(d);
        let d0 = flat(self.r0 - self.q0);
        let d1 = flat(r - q);
        d0.cross(d1).dot(n).atan2(d0.dot(d1))
    }
}

/// Configuration reached by `mv` at time `t` from `config`.
pub fn pose_at(mv: &Move, config: &ChainConfig, t: f64) -> Result<ChainConfig> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidMove(format!("time {t} outside [0, 1]")));
    }
    let prepared = PreparedMove::new(mv, config)?;
    Ok(ChainConfig::from_raw(prepared.pose(t)?, config.is_closed()))
}

/// Configuration after every move of the plan.
pub fn apply(plan: &MotionPlan) -> Result<ChainConfig> {
    let mut cur = plan.initial.clone();
    for mv in &plan.moves {
        cur = pose_at(mv, &cur, 1.0)?;
    }
    Ok(cur)
}

/// Start configuration of every move, plus the final one.
pub fn move_starts(plan: &MotionPlan) -> Result<Vec<ChainConfig>> {
    let mut out = Vec::with_capacity(plan.moves.len() + 1);
    out.push(plan.initial.clone());
    for mv in &plan.moves {
        let next = pose_at(mv, out.last().unwrap(), 1.0)?;
        out.push(next);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationPolicy {
    /// Distance tolerance; defaults to 1e-9 times the diameter.
    pub tol: Option<f64>,
    pub initial_samples: usize,
    /// Cap on time steps (accepted or halved) per move.
    pub max_steps: usize,
    pub max_length_drift: f64,
}

impl Default for ValidationPolicy {
    fn default() -> Self {
        ValidationPolicy { tol: None, initial_samples: 64, max_steps: 1 << 16, max_length_drift: 1e-9 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureKind {
    InvalidMove,
    ClearanceViolation,
    LengthDrift,
    NonMonotone,
    BudgetExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub move_index: usize,
    pub t: f64,
    pub kind: FailureKind,
    pub witness: Option<(usize, usize)>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoveRecord {
    pub samples: usize,
    pub min_clearance: f64,
    pub max_length_drift: f64,
    /// Smallest value of `1 - bound / (clearance / 2)` over accepted steps.
    pub margin: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub certified: bool,
    pub moves: Vec<MoveRecord>,
    pub failure: Option<Failure>,
}

/// Moving-pair filter: an edge pair matters if either edge has a moving endpoint.
fn moving_edges(n: usize, closed: bool, moving: &[usize]) -> Vec<bool> {
    let mut is_moving = vec![false; n];
    for &k in moving {
        is_moving[k] = true;
    }
    (0..geom::edge_count(n, closed))
        .map(|e| {
            let (a, b) = geom::edge_ends(e, n, closed);
            is_moving[a] || is_moving[b]
        })
        .collect()
}

fn validate_move(
    index: usize,
    mv: &Move,
    start: &ChainConfig,
    lengths: &LinkLengths,
    tol: f64,
    policy: &ValidationPolicy,
) -> (MoveRecord, Option<Failure>) {
    let mut record = MoveRecord {
        samples: 0,
        min_clearance: f64::INFINITY,
        max_length_drift: 0.0,
        margin: 1.0,
        passed: false,
    };
    let fail = |t: f64, kind: FailureKind, witness, message: String| Failure { move_index: index, t, kind, witness, message };
    let prepared = match PreparedMove::new(mv, start) {
        Ok(p) => p,
        Err(e) => return (record, Some(fail(0.0, FailureKind::InvalidMove, None, e.to_string()))),
    };
    let closed = start.is_closed();
    let n = start.len();
    let mask = moving_edges(n, closed, prepared.moving());
    let clearance = |verts: &[Point]| geom::clearance_filtered(verts, closed, |i, j| mask[i] || mask[j]);

    let (mut clear, pair) = clearance(start.vertices());
    if clear <= tol {
        return (record, Some(fail(0.0, FailureKind::ClearanceViolation, pair, format!("clearance {clear:e} at move start"))));
    }
    record.min_clearance = clear;
    let mut prev_sched = match prepared.schedule(0.0) {
        Ok(s) => s,
        Err(e) => return (record, Some(fail(0.0, FailureKind::InvalidMove, None, e.to_string()))),
    };
    let mut trend = vec![0i8; prev_sched.len()];

    let h_max = 1.0 / policy.initial_samples.max(1) as f64;
    let mut h = h_max;
    let mut t = 0.0;
    let mut steps = 0usize;
    while t < 1.0 {
        if steps >= policy.max_steps {
            return (record, Some(fail(t, FailureKind::BudgetExhausted, None, format!("step budget exhausted at t = {t}"))));
        }
        steps += 1;
        let t1 = (t + h).min(1.0);
        let bound = match prepared.displacement_bound(t, t1) {
            Ok(b) => b,
            Err(e) => return (record, Some(fail(t1, FailureKind::InvalidMove, None, e.to_string()))),
        };
        if bound >= 0.5 * clear {
            h *= 0.5;
            continue;
        }
        record.margin = record.margin.min(1.0 - bound / (0.5 * clear));
        let pose = match prepared.pose(t1) {
            Ok(p) => p,
            Err(e) => return (record, Some(fail(t1, FailureKind::InvalidMove, None, e.to_string()))),
        };
        let cfg = ChainConfig::from_raw(pose, closed);
        let drift = lengths.max_relative_drift(&cfg.link_lengths());
        record.max_length_drift = record.max_length_drift.max(drift);
        if drift > policy.max_length_drift {
            return (record, Some(fail(t1, FailureKind::LengthDrift, None, format!("relative length drift {drift:e}"))));
        }
        let sched = match prepared.schedule(t1) {
            Ok(s) => s,
            Err(e) => return (record, Some(fail(t1, FailureKind::InvalidMove, None, e.to_string()))),
        };
        for (k, (a, b)) in prev_sched.iter().zip(&sched).enumerate() {
            let d = wrap_angle(b - a);
            if d.abs() <= 1e-12 {
                continue;
            }
            let s = if d > 0.0 { 1 } else { -1 };
            if trend[k] == 0 {
                trend[k] = s;
            } else if trend[k] != s {
                return (record, Some(fail(t1, FailureKind::NonMonotone, None, format!("joint parameter {k} reverses"))));
            }
        }
        prev_sched = sched;
        let (c, pair) = clearance(cfg.vertices());
        record.min_clearance = record.min_clearance.min(c);
        if c <= tol {
            return (record, Some(fail(t1, FailureKind::ClearanceViolation, pair, format!("clearance {c:e}"))));
        }
        clear = c;
        t = t1;
        record.samples += 1;
        h = (2.0 * h).min(h_max);
    }
    record.passed = true;
    (record, None)
}

/// Certify a plan: lengths preserved and clearance positive throughout.
pub fn validate(plan: &MotionPlan, policy: &ValidationPolicy) -> ValidationReport {
    let tol = policy.tol.unwrap_or_else(|| plan.initial.default_tol());
    let initial_clear = geom::min_clearance_with_pair(&plan.initial);
    if initial_clear.0 <= tol {
        return ValidationReport {
            certified: false,
            moves: Vec::new(),
            failure: Some(Failure {
                move_index: 0,
                t: 0.0,
                kind: FailureKind::ClearanceViolation,
                witness: initial_clear.1,
                message: "initial configuration is not simple".into(),
            }),
        };
    }
    // Start poses are cheap; compute them up front so moves validate in parallel.
    let mut starts = vec![plan.initial.clone()];
    let mut setup_failure = None;
    for (k, mv) in plan.moves.iter().enumerate() {
        match pose_at(mv, starts.last().unwrap(), 1.0) {
            Ok(c) => starts.push(c),
            Err(e) => {
                setup_failure = Some(Failure {
                    move_index: k,
                    t: 1.0,
                    kind: FailureKind::InvalidMove,
                    witness: None,
                    message: e.to_string(),
                });
                break;
            }
        }
    }
    let lengths = plan.initial.link_lengths();
    let usable = starts.len() - 1;
    let results: Vec<(MoveRecord, Option<Failure>)> = plan.moves[..usable]
        .par_iter()
        .enumerate()
        .map(|(k, mv)| validate_move(k, mv, &starts[k], &lengths, tol, policy))
        .collect();
    let mut failure = results.iter().find_map(|(_, f)| f.clone());
    if failure.is_none() {
        failure = setup_failure;
    }
    ValidationReport {
        certified: failure.is_none(),
        moves: results.into_iter().map(|(r, _)| r).collect(),
        failure,
    }
}

/// Uniform re-sampling of every move at `factor` times the number of
/// certified samples; returns the smallest full clearance seen.
pub fn dense_recheck(plan: &MotionPlan, report: &ValidationReport, factor: usize) -> Result<f64> {
    let starts = move_starts(plan)?;
    let mins: Vec<f64> = plan
        .moves
        .par_iter()
        .enumerate()
        .map(|(k, mv)| -> Result<f64> {
            let prepared = PreparedMove::new(mv, &starts[k])?;
            let samples = report.moves.get(k).map_or(64, |r| r.samples.max(1)) * factor;
            let mut best = f64::INFINITY;
            for s in 0..=samples {
                let t = s as f64 / samples as f64;
                let verts = prepared.pose(t)?;
                best = best.min(geom::clearance_filtered(&verts, plan.initial.is_closed(), |_, _| true).0);
            }
            Ok(best)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(mins.into_iter().fold(geom::min_clearance(&plan.initial), f64::min))
}

/// Snapshots along the plan; the timestamp of move `k` at local time `t` is `k + t`.
pub fn sample_frames(plan: &MotionPlan, per_move: usize) -> Result<Vec<(f64, ChainConfig)>> {
    let per_move = per_move.max(1);
    let mut frames = vec![(0.0, plan.initial.clone())];
    let mut cur = plan.initial.clone();
    for (k, mv) in plan.moves.iter().enumerate() {
        let prepared = PreparedMove::new(mv, &cur)?;
        for s in 1..=per_move {
            let t = s as f64 / per_move as f64;
            let cfg = ChainConfig::from_raw(prepared.pose(t)?, cur.is_closed());
            frames.push((k as f64 + t, cfg));
        }
        cur = frames.last().unwrap().1.clone();
    }
    Ok(frames)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::make_chain;

    fn chain(v: &[[f64; 3]], closed: bool) -> ChainConfig {
        make_chain(v.iter().map(|&a| Point::from_array(a)).collect(), closed).unwrap()
    }

    fn pentagon() -> ChainConfig {
        chain(&[[0., 0., 0.], [2., 1., 0.], [4., 0., 0.], [4., 4., 0.], [0., 4., 0.]], true)
    }

    #[test]
    fn zero_angle_single_joint_is_identity() {
        let c = chain(&[[0., 0., 0.], [1., 0., 0.], [1., 1., 0.]], false);
        let mv = Move::SingleJoint { joint: 1, axis: [0., 0., 1.], side: Side::Suffix, angle: 0.0 };
        for t in [0.0, 0.3, 1.0] {
            assert_eq!(pose_at(&mv, &c, t).unwrap(), c);
        }
    }

    #[test]
    fn half_turn_about_lid_reflects_apex() {
        let mv = Move::SubchainAboutLine { a: 0, b: 2, angle: PI };
        let out = pose_at(&mv, &pentagon(), 1.0).unwrap();
        assert!(out.vertices()[1].dist(Point::new(2., -1., 0.)) < 1e-12);
    }

    #[test]
    fn coupled_lift_closed_form() {
        let c = chain(&[[0., 0., 0.], [1., 0., 0.], [1., 0., 1.]], false);
        let mv = Move::CoupledLift { joint: 1, up: [0., 0., 1.], detour: None };
        let out = pose_at(&mv, &c, 1.0).unwrap();
        let v = out.vertices();
        assert!(v[0].dist(Point::new(0., 0., 0.)) < 1e-15);
        assert!(v[1].dist(Point::new(0., 0., 1.)) < 1e-15);
        assert!(v[2].dist(Point::new(0., 0., 2.)) < 1e-15);
        // Halfway the edge is at 45 degrees in the x-z plane.
        let mid = pose_at(&mv, &c, 0.5).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!(mid.vertices()[1].dist(Point::new(s, 0., s)) < 1e-15);
        assert!(mid.vertices()[2].dist(Point::new(s, 0., s + 1.0)) < 1e-15);
    }

    #[test]
    fn coupled_lift_requires_vertical_suffix() {
        let c = chain(&[[0., 0., 0.], [1., 0., 0.], [2., 0., 0.]], false);
        let mv = Move::CoupledLift { joint: 1, up: [0., 0., 1.], detour: None };
        assert!(matches!(pose_at(&mv, &c, 0.5), Err(Error::InvalidMove(_))));
    }

    #[test]
    fn apply_examples() {
        let plan = MotionPlan::new(pentagon());
        assert_eq!(apply(&plan).unwrap(), pentagon());
        let flip = Move::SubchainAboutLine { a: 0, b: 2, angle: PI };
        let back = Move::SubchainAboutLine { a: 0, b: 2, angle: -PI };
        let plan = MotionPlan { initial: pentagon(), moves: vec![flip, back] };
        let out = apply(&plan).unwrap();
        for (a, b) in out.vertices().iter().zip(pentagon().vertices()) {
            assert!(a.dist(*b) < 1e-9);
        }
    }

    #[test]
    fn four_bar_square_keeps_lengths_and_closes() {
        let sq = chain(&[[0., 0., 0.], [1., 0., 0.], [1., 1., 0.], [0., 1., 0.]], true);
        let z = [0., 0., 1.];
        let mv = Move::FourBar { joints: [0, 1, 2, 3], axis_first: z, axis_last: z, driver: Driver::First, angle: -0.3 };
        let lengths = sq.link_lengths();
        for k in 0..=10 {
            let c = pose_at(&mv, &sq, k as f64 / 10.0).unwrap();
            assert!(lengths.max_relative_drift(&c.link_lengths()) < 1e-12);
            // The fixed block never moves.
            assert_eq!(c.vertices()[0], sq.vertices()[0]);
            assert_eq!(c.vertices()[3], sq.vertices()[3]);
        }
        // Parallelogram motion: v1 turns about v0 by the driving angle.
        let end = pose_at(&mv, &sq, 1.0).unwrap();
        let expect = Point::new((-0.3f64).cos(), (-0.3f64).sin(), 0.);
        assert!(end.vertices()[1].dist(expect) < 1e-12);
    }

    #[test]
    fn four_bar_unreachable_reports_error() {
        let sq = chain(&[[0., 0., 0.], [1., 0., 0.], [1., 1., 0.], [0., 1., 0.]], true);
        let z = [0., 0., 1.];
        // Driving a square far enough forces the coupler past its reach.
        let mv = Move::FourBar { joints: [0, 1, 2, 3], axis_first: z, axis_last: z, driver: Driver::First, angle: 3.0 };
        assert!(matches!(pose_at(&mv, &sq, 1.0), Err(Error::ClosureUnreachable { .. })) || {
            // Either unreachable or it passed through a non-simple configuration.
            let plan = MotionPlan { initial: sq.clone(), moves: vec![mv.clone()] };
            !validate(&plan, &ValidationPolicy::default()).certified
        });
    }

    #[test]
    fn zero_moves_certify_with_zero_drift() {
        let mv = Move::SubchainAboutLine { a: 0, b: 2, angle: 0.0 };
        let plan = MotionPlan { initial: pentagon(), moves: vec![mv.clone(), mv] };
        let r = validate(&plan, &ValidationPolicy::default());
        assert!(r.certified, "{:?}", r.failure);
        assert!(r.moves.iter().all(|m| m.max_length_drift == 0.0));
    }

    #[test]
    fn wrong_flip_is_rejected() {
        // Rotating (4,4) about the line (4,0)-(0,4) lands it on (0,0).
        let mv = Move::SubchainAboutLine { a: 2, b: 4, angle: PI };
        let plan = MotionPlan { initial: pentagon(), moves: vec![mv] };
        let r = validate(&plan, &ValidationPolicy::default());
        assert!(!r.certified);
        assert!(r.failure.is_some());
    }

    #[test]
    fn true_flip_is_certified() {
        let mv = Move::SubchainAboutLine { a: 0, b: 2, angle: -PI };
        let plan = MotionPlan { initial: pentagon(), moves: vec![mv] };
        let r = validate(&plan, &ValidationPolicy::default());
        assert!(r.certified, "{:?}", r.failure);
        let dense = dense_recheck(&plan, &r, 10).unwrap();
        assert!(dense > 0.0);
    }

    #[test]
    fn move_json_shape() {
        let mv = Move::SubchainAboutLine { a: 0, b: 2, angle: 1.5 };
        let s = serde_json::to_string(&mv).unwrap();
        assert_eq!(s, r#"{"kind":"subchain-about-line","a":0,"b":2,"angle":1.5}"#);
    }
}
