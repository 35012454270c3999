//! In-plane convexification of barbed polygons.
//!
//! A barbed polygon is a convex polygon with one ear glued on. Here it is
//! the sub-polygon `Q = (v_0, ..., v_m)` of a closed chain lying in a
//! horizontal plane, where the closing edge `v_m -> v_0` is held fixed (in
//! the arch algorithm it is a virtual edge and everything past `v_m` is
//! attached to the ground). Each step is a planar four-bar move whose
//! pivots are the first and last non-straight joints of `Q`; the two
//! coupler-end joints are searched over, and each move is driven until a
//! joint straightens (it is then frozen inside a rigid block for good), a
//! joint angle would stop being monotone, or the in-plane clearance drops
//! below a floor. With at most three non-straight joints left the polygon
//! is a triangle, hence convex. Pocket flips through the half-space above
//! the plane serve as a fallback.

use std::f64::consts::PI;

use crate::chain::ChainConfig;
use crate::error::{Error, Result};
use crate::geom::{self, Point};
use crate::motion::{pose_at, Driver, Move, PreparedMove};

/// Joints within this angle of π count as straight (frozen).
const STRAIGHT: f64 = 1e-9;
/// Driving step of the event search, radians.
const DRIVE_STEP: f64 = 0.02;
/// In-plane clearance floor, as a fraction of the clearance at the start
/// of each move.
const CLEARANCE_FLOOR: f64 = 0.25;
/// Fallback flip cap.
const MAX_FALLBACK_FLIPS: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct BarbedPolygon {
    pub config: ChainConfig,
    /// Ear apex; the barbed polygon is `v_0..=v_apex` closed by the fixed edge `v_apex -> v_0`.
    pub apex: usize,
}

#[derive(Debug, Clone, Default)]
pub struct BarbedOutcome {
    pub moves: Vec<Move>,
    pub four_bar_moves: usize,
    pub fallback_flips: usize,
}

/// Working view of `Q` inside the full chain.
struct View {
    m: usize,
    /// +1 if `Q` is counterclockwise seen from +z.
    orient: f64,
}

impl View {
    fn new(verts: &[Point], m: usize) -> View {
        let q: Vec<Point> = verts[..=m].to_vec();
        let area = crate::flips::signed_area(&q);
        View { m, orient: if area >= 0.0 { 1.0 } else { -1.0 } }
    }

    fn prev(&self, k: usize) -> usize {
        if k == 0 {
            self.m
        } else {
            k - 1
        }
    }

    fn next(&self, k: usize) -> usize {
        if k == self.m {
            0
        } else {
            k + 1
        }
    }

    /// Interior angle of `Q` at joint `k`, in `(0, 2π)`.
    fn interior(&self, v: &[Point], k: usize) -> f64 {
        let a = v[k] - v[self.prev(k)];
        let b = v[self.next(k)] - v[k];
        let turn = (a.x * b.y - a.y * b.x).atan2(a.x * b.x + a.y * b.y);
        PI - self.orient * turn
    }

    fn angles(&self, v: &[Point]) -> Vec<f64> {
        (0..=self.m).map(|k| self.interior(v, k)).collect()
    }

    fn excess(angles: &[f64]) -> f64 {
        angles.iter().map(|&a| (a - PI - STRAIGHT).max(0.0)).sum()
    }

    fn live(angles: &[f64]) -> Vec<usize> {
        (0..angles.len()).filter(|&k| (angles[k] - PI).abs() > STRAIGHT).collect()
    }

    /// 2D clearance of `Q` (the fixed closing edge included).
    fn clearance(&self, v: &[Point]) -> f64 {
        let q: Vec<Point> = v[..=self.m].iter().map(|p| Point::planar(p.x, p.y)).collect();
        geom::clearance_filtered(&q, true, |_, _| true).0
    }
}

#[derive(Debug, Clone)]
struct Trial {
    angle: f64,
    froze: bool,
    excess: f64,
}

/// Driving angles probed by the event search: geometric near zero (so a
/// joint turning back right at the start is seen), then uniform.
fn drive_samples() -> impl Iterator<Item = f64> {
    let head = (0..).map(|k| 1e-6 * 2f64.powi(k)).take_while(|&x| x < DRIVE_STEP);
    let tail = (1..).map(|k| k as f64 * DRIVE_STEP).take_while(|&x| x < PI).chain(std::iter::once(PI));
    head.chain(tail)
}

/// Bisect `[lo, hi]` for the boundary of `inside`, which holds at `lo` and
/// fails at `hi`; returns `(last inside, first outside)`.
fn bisect<F: Fn(f64) -> bool>(mut lo: f64, mut hi: f64, inside: F) -> (f64, f64) {
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if inside(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

/// Drive the four-bar `joints` in direction `dir` until the first event:
/// a joint reaching π (it freezes), a joint angle turning back (the move
/// ends just past the turning point; the next move can carry on), the
/// clearance floor, or the end of the closure range.
fn simulate(config: &ChainConfig, view: &View, joints: [usize; 4], dir: f64, floor: f64) -> Option<Trial> {
    let z = [0.0, 0.0, 1.0];
    let mv = Move::FourBar { joints, axis_first: z, axis_last: z, driver: Driver::First, angle: dir * PI };
    let prepared = PreparedMove::new(&mv, config).ok()?;
    let angles_at = |psi: f64| -> Option<[f64; 4]> {
        let verts = prepared.pose(psi / PI).ok()?;
        Some(joints.map(|k| view.interior(&verts, k)))
    };
    let start = angles_at(0.0)?;
    let side = start.map(|a| (a - PI).signum());
    let crossed = |a: &[f64; 4]| (0..4).any(|j| (a[j] - PI).signum() != side[j]);
    let mut trend = [0.0f64; 4];
    let (mut pp_psi, mut prev_psi) = (0.0f64, 0.0f64);
    let mut prev = start;
    let mut stop: Option<(f64, bool)> = None;
    for psi in drive_samples() {
        let Some(cur) = angles_at(psi) else {
            stop = Some((prev_psi, false));
            break;
        };
        let mut best: Option<(f64, bool)> = None;
        if crossed(&cur) {
            let (lo, _) = bisect(prev_psi, psi, |x| angles_at(x).is_some_and(|a| !crossed(&a)));
            best = Some((lo, true));
        }
        for j in 0..4 {
            let d = cur[j] - prev[j];
            if d.abs() < 1e-15 {
                continue;
            }
            if trend[j] != 0.0 && d.signum() != trend[j] {
                let t = trend[j];
                let rising = |x: f64| {
                    let h = 1e-9;
                    match (angles_at(x - h), angles_at(x + h)) {
                        (Some(a), Some(b)) => (b[j] - a[j]).signum() == t,
                        _ => false,
                    }
                };
                let (_, hi) = bisect(pp_psi.max(1e-9), psi, rising);
                if best.is_none_or(|(b, _)| hi < b) {
                    best = Some((hi, false));
                }
            }
            trend[j] = d.signum();
        }
        if let Some(b) = best {
            stop = Some(b);
            break;
        }
        let verts = prepared.pose(psi / PI).ok()?;
        if view.clearance(&verts) < floor {
            stop = Some((prev_psi, false));
            break;
        }
        pp_psi = prev_psi;
        prev_psi = psi;
        prev = cur;
    }
    let (psi, froze) = stop.unwrap_or((PI, false));
    if psi <= 1e-12 {
        return None;
    }
    let verts = prepared.pose(psi / PI).ok()?;
    if view.clearance(&verts) < floor {
        return None;
    }
    Some(Trial { angle: dir * psi, froze, excess: View::excess(&view.angles(&verts)) })
}

/// Pocket flip of `Q` that keeps `v_0` and `v_m` in place, rising into +z.
fn fallback_flip(config: &ChainConfig, view: &View) -> Result<Option<Move>> {
    let v = config.vertices();
    let q: Vec<Point> = v[..=view.m].iter().map(|p| Point::planar(p.x, p.y)).collect();
    let hull = geom::convex_hull2(&q)?;
    let h = hull.len();
    for k in 0..h {
        let (h0, h1) = (hull[k], hull[(k + 1) % h]);
        let (a, b) = if view.orient > 0.0 { (h0, h1) } else { (h1, h0) };
        if a >= b || b == a + 1 {
            continue;
        }
        let u = (v[b] - v[a]).normalized().ok_or(Error::DegenerateSegment)?;
        let far = (a + 1..b)
            .max_by(|&i, &j| v[i].dist_to_line(v[a], u).total_cmp(&v[j].dist_to_line(v[a], u)))
            .unwrap();
        // A pocket of straight joints has no area; flipping it changes nothing.
        if v[far].dist_to_line(v[a], u) <= 1e-9 * v[a].dist(v[b]) {
            continue;
        }
        let rise = u.cross(v[far] - v[a]).z;
        return Ok(Some(Move::SubchainAboutLine { a, b, angle: if rise >= 0.0 { PI } else { -PI } }));
    }
    Ok(None)
}

/// Convexify `Q = v_0..=v_m` of a closed chain in its (horizontal) plane,
/// holding `v_m`, `v_0` and everything after `v_m` fixed. Returns the
/// moves and the final configuration.
pub fn convexify_sub(config: &ChainConfig, m: usize) -> Result<(BarbedOutcome, ChainConfig)> {
    if !config.is_closed() {
        return Err(Error::NotClosed);
    }
    if m < 2 || m >= config.len() {
        return Err(Error::InvalidParams(format!("barbed apex {m} out of range")));
    }
    let mut cur = config.clone();
    let mut out = BarbedOutcome::default();
    let view = View::new(cur.vertices(), m);
    let budget = 4 * (m + 1) + 8;
    loop {
        let angles = view.angles(cur.vertices());
        let excess = View::excess(&angles);
        let live = View::live(&angles);
        if excess == 0.0 || live.len() <= 3 {
            return Ok((out, cur));
        }
        let mut best: Option<(Trial, [usize; 4])> = None;
        let floor = CLEARANCE_FLOOR * view.clearance(cur.vertices());
        if out.four_bar_moves < budget {
            let (p, s) = (live[0], live[live.len() - 1]);
            let inner = &live[1..live.len() - 1];
            for (x, &q) in inner.iter().enumerate() {
                for &r in &inner[x + 1..] {
                    for dir in [1.0, -1.0] {
                        let Some(trial) = simulate(&cur, &view, [p, q, r, s], dir, floor) else { continue };
                        let gain = excess - trial.excess;
                        let ok = if trial.froze { gain >= -1e-12 } else { gain > 1e-9 };
                        if !ok {
                            continue;
                        }
                        let better = match &best {
                            None => true,
                            Some((b, _)) => {
                                (trial.froze && !b.froze) || (trial.froze == b.froze && trial.excess < b.excess - 1e-12)
                            }
                        };
                        if better {
                            best = Some((trial, [p, q, r, s]));
                        }
                    }
                }
            }
        }
        let mv = match best {
            Some((trial, joints)) => {
                out.four_bar_moves += 1;
                let z = [0.0, 0.0, 1.0];
                Move::FourBar { joints, axis_first: z, axis_last: z, driver: Driver::First, angle: trial.angle }
            }
            None => {
                if out.fallback_flips >= MAX_FALLBACK_FLIPS {
                    return Err(Error::Planning(format!(
                        "barbed convexification did not converge (m = {m}, live joints {}, reflex excess {excess:e}, {} four-bar moves)",
                        live.len(),
                        out.four_bar_moves
                    )));
                }
                out.fallback_flips += 1;
                fallback_flip(&cur, &view)?
                    .ok_or_else(|| Error::Planning("barbed polygon has no admissible pocket".into()))?
            }
        };
        cur = pose_at(&mv, &cur, 1.0)?;
        out.moves.push(mv);
    }
}

fn rotate_moves(moves: &mut [Move], shift: usize, n: usize) {
    let f = |k: usize| (k + shift) % n;
    for mv in moves {
        match mv {
            Move::FourBar { joints, .. } => *joints = joints.map(f),
            Move::SubchainAboutLine { a, b, .. } => {
                *a = f(*a);
                *b = f(*b);
            }
            _ => {}
        }
    }
}

/// Convexify a planar barbed polygon (closed, in a horizontal plane) in its
/// plane, holding the edge from the ear apex to its successor fixed.
pub fn convexify_barbed(barbed: &BarbedPolygon) -> Result<(BarbedOutcome, ChainConfig)> {
    let c = &barbed.config;
    if !c.is_closed() {
        return Err(Error::NotClosed);
    }
    let n = c.len();
    if barbed.apex >= n {
        return Err(Error::InvalidParams(format!("apex {} out of range", barbed.apex)));
    }
    if n == 3 {
        return Ok((BarbedOutcome::default(), c.clone()));
    }
    // Relabel so the apex is last and its successor first.
    let shift = (barbed.apex + 1) % n;
    let verts: Vec<Point> = (0..n).map(|k| c.vertices()[(k + shift) % n]).collect();
    let rotated = ChainConfig::from_raw(verts, true);
    let (mut out, end) = convexify_sub(&rotated, n - 1)?;
    rotate_moves(&mut out.moves, shift, n);
    let back: Vec<Point> = (0..n).map(|k| end.vertices()[(k + n - shift) % n]).collect();
    Ok((out, ChainConfig::from_raw(back, true)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{make_chain, shape_classify, Shape};
    use crate::motion::{validate, MotionPlan, ValidationPolicy};

    fn poly(v: &[[f64; 2]]) -> ChainConfig {
        make_chain(v.iter().map(|a| Point::planar(a[0], a[1])).collect(), true).unwrap()
    }

    #[test]
    fn convex_input_needs_no_moves() {
        let sq = poly(&[[0., 0.], [1., 0.], [1., 1.], [0., 1.]]);
        let (out, _) = convexify_barbed(&BarbedPolygon { config: sq, apex: 2 }).unwrap();
        assert!(out.moves.is_empty());
    }

    #[test]
    fn dart_with_ear_apex() {
        let dart = poly(&[[0., 0.], [2., 1.], [4., 0.], [4., 4.], [0., 4.]]);
        let barbed = BarbedPolygon { config: dart.clone(), apex: 1 };
        let (out, end) = convexify_barbed(&barbed).unwrap();
        assert!(!out.moves.is_empty());
        assert_eq!(shape_classify(&end, None), Shape::ConvexPlanar);
        let plan = MotionPlan { initial: dart, moves: out.moves.clone() };
        let r = validate(&plan, &ValidationPolicy::default());
        assert!(r.certified, "{:?}", r.failure);
    }
}

#[cfg(test)]
mod random_tests {
    use super::*;
    use crate::chain::{shape_classify, Shape};
    use crate::gen;
    use crate::motion::{validate, MotionPlan, ValidationPolicy};

    #[test]
    fn random_barbed_polygons_convexify() {
        let mut total = 0;
        let mut flips = 0;
        for k in [4usize, 8, 16] {
            for seed in 0..20 {
                let b = gen::random_barbed(k, &mut gen::rng(seed));
                let (out, end) = convexify_barbed(&b).unwrap_or_else(|e| panic!("k={k} seed={seed}: {e}"));
                assert_eq!(shape_classify(&end, None), Shape::ConvexPlanar, "k={k} seed={seed}");
                let plan = MotionPlan { initial: b.config.clone(), moves: out.moves.clone() };
                let r = validate(&plan, &ValidationPolicy::default());
                assert!(r.certified, "k={k} seed={seed}: {:?}", r.failure);
                total += out.moves.len();
                flips += out.fallback_flips;
                eprintln!("k={k} seed={seed} moves={} flips={}", out.moves.len(), out.fallback_flips);
            }
        }
        eprintln!("total moves {total}, fallback flips {flips}");
    }
}
