//! The "St. Louis Arch" convexification of planar polygons.
//!
//! Vertices are picked up one at a time into a convex arch standing in a
//! vertical half-plane above the plane `z = ε`:
//!
//! * pre-phase: `v_0` is rotated about the line `v_{n-1} v_1` up to `z = ε`;
//! * round 0: `v_1` is rotated about the line `v'_0 v_2` up to `z = ε`;
//! * round `i >= 1`: a four-bar move lifts `v_{i+1}` to `z = ε` by turning
//!   its ground link about `v_{i+2}` while the arch follows by turning about
//!   the vertical through `v'_0`; the arch is then laid down into `z = ε` on
//!   the far side of its base from `v'_{i+1}`, the resulting barbed polygon
//!   `v'_0 .. v'_{i+1}` is convexified in that plane, and raised again into
//!   the vertical half-plane over the new base `v'_0 v'_{i+1}`;
//! * final phase: `v_{n-1}` is rotated about the base line up to `z = ε`,
//!   the arch is laid down and the last barbed polygon convexified.
//!
//! That makes `n - 2` rounds. `ε` is chosen adaptively: every phase is
//! validated and `ε` is halved whenever validation fails.

use std::f64::consts::{FRAC_PI_2, TAU};

use crate::barbed::{convexify_sub, BarbedPolygon};
use crate::chain::{shape_classify, ChainConfig, Shape};
use crate::error::{Error, Result};
use crate::geom::{self, Point};
use crate::motion::{pose_at, validate, Driver, Move, MotionPlan, PreparedMove, ValidationPolicy};

/// Starting value of `ε` as a fraction of the polygon's clearance.
pub const EPSILON_FRACTION: f64 = 0.1;
pub const MAX_HALVINGS: usize = 40;

/// Arch `P[0, top]` lifted (`v'_0`, `v'_top` in `z = ε`), the rest on the ground.
#[derive(Debug, Clone, PartialEq)]
pub struct ArchState {
    pub epsilon: f64,
    pub config: ChainConfig,
    pub top: usize,
}

#[derive(Debug, Clone)]
pub struct ArchOutcome {
    pub plan: MotionPlan,
    pub epsilon: f64,
    /// Rounds executed (`n - 2`, or 0 for convex input).
    pub rounds: usize,
    /// Moves per phase: pre-phase, rounds, final phase.
    pub phase_moves: Vec<usize>,
    /// Pocket flips used by the barbed fallback (not `O(k)`).
    pub fallback_flips: usize,
    pub convex: bool,
}

enum Fail {
    /// Fixable by a smaller ε.
    Epsilon(String),
    Hard(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        match e {
            Error::ClosureUnreachable { .. } => Fail::Epsilon(e.to_string()),
            other => Fail::Hard(other),
        }
    }
}

/// Angle for `SubchainAboutLine { a, b }` that first brings vertex `k` to
/// height `z`, turning in whichever sense raises it initially.
fn rotation_to_height(v: &[Point], a: usize, b: usize, k: usize, z: f64) -> Result<f64> {
    let u = (v[b] - v[a]).normalized().ok_or(Error::DegenerateSegment)?;
    let w = v[k] - v[a];
    let center = v[a] + u * u.dot(w);
    let perp = v[k] - center;
    let rho = perp.norm();
    if rho == 0.0 {
        return Err(Error::Planning(format!("vertex {k} lies on its rotation axis")));
    }
    let e1 = perp / rho;
    let e2 = u.cross(e1);
    let (ca, cb) = (rho * e1.z, rho * e2.z);
    let r = ca.hypot(cb);
    let target = z - center.z;
    if r == 0.0 || target.abs() > r {
        return Err(Error::Planning(format!("vertex {k} cannot reach height {z}")));
    }
    let phi = cb.atan2(ca);
    let ac = (target / r).acos();
    let dir = if cb >= 0.0 { 1.0 } else { -1.0 };
    let first = [phi + ac, phi - ac]
        .iter()
        .map(|&x| {
            // Smallest angle with sign `dir` that reaches the target.
            let y = (dir * x).rem_euclid(TAU);
            dir * y
        })
        .filter(|x| x.abs() > 0.0)
        .min_by(|x, y| x.abs().total_cmp(&y.abs()))
        .unwrap();
    Ok(first)
}

fn apply_moves(cur: &ChainConfig, moves: &[Move]) -> Result<ChainConfig> {
    let mut c = cur.clone();
    for mv in moves {
        c = pose_at(mv, &c, 1.0)?;
    }
    Ok(c)
}

/// Validate one phase from `cur`; returns the configuration after it.
fn certify(cur: &ChainConfig, moves: &[Move], phase: &str) -> std::result::Result<ChainConfig, Fail> {
    let plan = MotionPlan { initial: cur.clone(), moves: moves.to_vec() };
    let report = validate(&plan, &ValidationPolicy::default());
    if !report.certified {
        let msg = report
            .failure
            .map(|f| format!("move {} ({}) at t = {}: {}", f.move_index, moves[f.move_index].kind_name(), f.t, f.message))
            .unwrap_or_default();
        return Err(Fail::Epsilon(format!("{phase}: {msg}")));
    }
    Ok(apply_moves(cur, moves)?)
}

/// Lay the arch `P(0, top)` down into `z = ε` on the side of its base away
/// from `v'_{top+1}`.
fn flatten(v: &[Point], top: usize) -> Option<Move> {
    if top < 2 {
        return None;
    }
    let u = (v[top] - v[0]).normalized()?;
    let side = u.cross(Point::new(0.0, 0.0, 1.0)).dot(v[top + 1] - v[0]);
    let angle = if side > 0.0 { -FRAC_PI_2 } else { FRAC_PI_2 };
    Some(Move::SubchainAboutLine { a: 0, b: top, angle })
}

/// Lift step: bring `v_{top+1}` up to `z = ε` and lay the arch down. The
/// result is the barbed polygon `v'_0 .. v'_{top+1}` in `z = ε`.
pub fn lift_step(state: &ArchState) -> Result<(Vec<Move>, BarbedPolygon)> {
    let v = state.config.vertices();
    let n = v.len();
    let top = state.top;
    let eps = state.epsilon;
    if top + 1 >= n {
        return Err(Error::InvalidParams("nothing left on the ground".into()));
    }
    let lift = if top == 0 {
        Move::SubchainAboutLine { a: 0, b: 2 % n, angle: rotation_to_height(v, 0, 2 % n, 1, eps)? }
    } else if top + 1 == n - 1 {
        Move::SubchainAboutLine { a: top, b: 0, angle: rotation_to_height(v, top, 0, n - 1, eps)? }
    } else {
        let (q, r, s) = (top, top + 1, top + 2);
        let ground = v[r] - v[s];
        let len = ground.norm();
        if eps >= len {
            return Err(Error::ClosureUnreachable { t: 0.0, angle: "epsilon exceeds link length".into() });
        }
        let u = ground / len;
        let up = Point::new(0.0, 0.0, 1.0);
        let mv = |angle: f64| Move::FourBar {
            joints: [0, q, r, s],
            axis_first: up.to_array(),
            axis_last: u.cross(up).to_array(),
            driver: Driver::Last,
            angle,
        };
        let total = (eps / len).asin();
        return monotone_lift(&state.config, total, mv, top);
    };
    finish_lift(&state.config, vec![lift], top)
}

/// Append the flatten move and package the barbed polygon.
fn finish_lift(start: &ChainConfig, mut moves: Vec<Move>, top: usize) -> Result<(Vec<Move>, BarbedPolygon)> {
    let lifted = apply_moves(start, &moves)?;
    if let Some(mv) = flatten(lifted.vertices(), top) {
        moves.push(mv);
    }
    let config = apply_moves(start, &moves)?;
    Ok((moves, BarbedPolygon { config, apex: top + 1 }))
}

/// The arch's turn about the vertical through `v'_0` need not be monotone
/// over the whole lift (the link to the arch first lengthens horizontally
/// while the lifted vertex later creeps towards its ground neighbour), so
/// the crank sweep is cut at the turning points of that angle; each piece
/// is a separate four-bar move with all joint angles monotone.
fn monotone_lift<F: Fn(f64) -> Move>(
    start: &ChainConfig,
    total: f64,
    make: F,
    top: usize,
) -> Result<(Vec<Move>, BarbedPolygon)> {
    const SAMPLES: usize = 256;
    let prepared = PreparedMove::new(&make(total), start)?;
    let alpha = |t: f64| -> Result<f64> { Ok(prepared.schedule(t)?[0]) };
    let mut cuts = Vec::new();
    let mut prev_a = alpha(0.0)?;
    let mut trend = 0.0f64;
    for k in 1..=SAMPLES {
        let t = k as f64 / SAMPLES as f64;
        let a = alpha(t)?;
        let d = a - prev_a;
        if d != 0.0 {
            if trend != 0.0 && d.signum() != trend {
                // Turning point in [t - 2h, t]: bisect on the local slope.
                let h = 1.0 / SAMPLES as f64;
                let (mut lo, mut hi) = ((t - 2.0 * h).max(0.0), t);
                let slope = |x: f64| -> Result<f64> {
                    let dx = 1e-7;
                    Ok(alpha((x + dx).min(1.0))? - alpha((x - dx).max(0.0))?)
                };
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if slope(mid)?.signum() == trend {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                cuts.push(0.5 * (lo + hi));
            }
            trend = d.signum();
        }
        prev_a = a;
    }
    cuts.push(1.0);
    let mut moves = Vec::new();
    let mut cur = start.clone();
    let mut done = 0.0;
    for c in cuts {
        let mv = make(total * (c - done));
        cur = pose_at(&mv, &cur, 1.0)?;
        moves.push(mv);
        done = c;
    }
    finish_lift(start, moves, top)
}

/// Raise the convexified polygon `v'_0 .. v'_apex` into the vertical
/// half-plane above its base `v'_0 v'_apex`.
pub fn raise_arch(barbed: &BarbedPolygon, epsilon: f64) -> Result<(Option<Move>, ArchState)> {
    let v = barbed.config.vertices();
    let m = barbed.apex;
    if m < 2 {
        return Ok((None, ArchState { epsilon, config: barbed.config.clone(), top: m }));
    }
    let u = (v[m] - v[0]).normalized().ok_or(Error::DegenerateSegment)?;
    let far = (1..m)
        .max_by(|&i, &j| v[i].dist_to_line(v[0], u).total_cmp(&v[j].dist_to_line(v[0], u)))
        .unwrap();
    let rise = u.cross(v[far] - v[0]).z;
    let mv = Move::SubchainAboutLine { a: 0, b: m, angle: if rise >= 0.0 { FRAC_PI_2 } else { -FRAC_PI_2 } };
    let config = pose_at(&mv, &barbed.config, 1.0)?;
    Ok((Some(mv), ArchState { epsilon, config, top: m }))
}

fn plan_with_epsilon(polygon: &ChainConfig, eps: f64) -> std::result::Result<ArchOutcome, Fail> {
    let n = polygon.len();
    let mut plan = MotionPlan::new(polygon.clone());
    let mut phase_moves = Vec::new();
    let mut fallback_flips = 0;

    // Pre-phase: v_0 up to z = ε.
    let angle = rotation_to_height(polygon.vertices(), n - 1, 1, 0, eps)?;
    let pre = vec![Move::SubchainAboutLine { a: n - 1, b: 1, angle }];
    let mut cur = certify(polygon, &pre, "lift v_0")?;
    phase_moves.push(pre.len());
    plan.moves.extend(pre);
    let mut state = ArchState { epsilon: eps, config: cur.clone(), top: 0 };

    let mut rounds = 0;
    while state.top + 1 < n {
        let (mut moves, barbed) = lift_step(&state)?;
        let is_final = barbed.apex == n - 1;
        if barbed.apex >= 2 {
            let (out, done) = convexify_sub(&barbed.config, barbed.apex)?;
            fallback_flips += out.fallback_flips;
            moves.extend(out.moves);
            let barbed = BarbedPolygon { config: done, apex: barbed.apex };
            if !is_final {
                let (raise, next) = raise_arch(&barbed, eps)?;
                moves.extend(raise);
                state = next;
            }
        } else {
            state = ArchState { epsilon: eps, config: barbed.config, top: barbed.apex };
        }
        cur = certify(&cur, &moves, &format!("pick up v_{}", state.top.max(1)))?;
        if !is_final {
            rounds += 1;
            // Keep the bookkeeping state bit-identical to the validated poses.
            state.config = cur.clone();
        }
        phase_moves.push(moves.len());
        plan.moves.extend(moves);
        if is_final {
            break;
        }
    }
    let convex = shape_classify(&cur, None) == Shape::ConvexPlanar;
    if !convex {
        return Err(Fail::Hard(Error::Planning("final polygon is not convex".into())));
    }
    Ok(ArchOutcome { plan, epsilon: eps, rounds, phase_moves, fallback_flips, convex })
}

fn check_input(polygon: &ChainConfig) -> Result<()> {
    if !polygon.is_closed() {
        return Err(Error::NotClosed);
    }
    let tol = polygon.default_tol();
    if polygon.vertices().iter().any(|p| p.z.abs() > tol) {
        return Err(Error::NotPlanar);
    }
    let (c, pair) = geom::min_clearance_with_pair(polygon);
    if c <= tol {
        let (i, j) = pair.unwrap_or((0, 0));
        return Err(Error::NotSimple(i, j));
    }
    Ok(())
}

/// Convexify a planar simple polygon with the arch algorithm.
pub fn convexify_arch(polygon: &ChainConfig) -> Result<ArchOutcome> {
    check_input(polygon)?;
    if shape_classify(polygon, None) == Shape::ConvexPlanar {
        return Ok(ArchOutcome {
            plan: MotionPlan::new(polygon.clone()),
            epsilon: 0.0,
            rounds: 0,
            phase_moves: Vec::new(),
            fallback_flips: 0,
            convex: true,
        });
    }
    let mut eps = EPSILON_FRACTION * geom::min_clearance(polygon);
    let mut last = String::new();
    for _ in 0..=MAX_HALVINGS {
        match plan_with_epsilon(polygon, eps) {
            Ok(out) => return Ok(out),
            Err(Fail::Epsilon(msg)) => last = msg,
            Err(Fail::Hard(e)) => return Err(e),
        }
        eps *= 0.5;
    }
    Err(Error::Planning(format!("no valid epsilon after {MAX_HALVINGS} halvings; last failure: {last}")))
}

/// The `ε` the arch planner settles on (0 for convex input).
pub fn choose_epsilon(polygon: &ChainConfig) -> Result<f64> {
    Ok(convexify_arch(polygon)?.epsilon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::make_chain;
    use crate::gen;

    fn poly(v: &[[f64; 2]]) -> ChainConfig {
        make_chain(v.iter().map(|a| Point::planar(a[0], a[1])).collect(), true).unwrap()
    }

    fn check(p: &ChainConfig) -> ArchOutcome {
        let out = convexify_arch(p).unwrap();
        let r = validate(&out.plan, &ValidationPolicy::default());
        assert!(r.certified, "{:?}", r.failure);
        assert_eq!(shape_classify(&crate::motion::apply(&out.plan).unwrap(), None), Shape::ConvexPlanar);
        out
    }

    #[test]
    fn convex_input_is_untouched() {
        let sq = poly(&[[0., 0.], [1., 0.], [1., 1.], [0., 1.]]);
        let out = convexify_arch(&sq).unwrap();
        assert!(out.plan.is_empty());
    }

    #[test]
    fn dart_quadrilateral() {
        let dart = poly(&[[0., 0.], [2., 1.], [4., 0.], [2., 4.]]);
        let out = check(&dart);
        assert_eq!(out.rounds, 2);
        assert!(out.epsilon > 0.0 && out.epsilon <= 0.1 * geom::min_clearance(&dart));
    }

    #[test]
    fn pentagon_and_random_polygons() {
        check(&poly(&[[0., 0.], [2., 1.], [4., 0.], [4., 4.], [0., 4.]]));
        for n in [5usize, 8] {
            for seed in 0..3 {
                let p = gen::random_simple_polygon(n, &mut gen::rng(seed));
                let out = check(&p);
                if !out.plan.is_empty() {
                    assert_eq!(out.rounds, n - 2);
                }
            }
        }
    }

    #[test]
    fn epsilon_scales_with_polygon() {
        let p = poly(&[[0., 0.], [2., 1.], [4., 0.], [4., 4.], [0., 4.]]);
        let big = p.map_vertices(|q| q * 10.0);
        let (e1, e2) = (choose_epsilon(&p).unwrap(), choose_epsilon(&big).unwrap());
        assert!((e2 / e1 - 10.0).abs() < 1e-9);
    }
}

#[cfg(test)]
mod stats {
    use super::*;
    use crate::gen;

    #[test]
    #[ignore]
    fn arch_stats() {
        for n in [4usize, 6, 8, 12, 16] {
            for seed in 0..5 {
                let p = gen::random_simple_polygon(n, &mut gen::rng(seed));
                let t = std::time::Instant::now();
                let out = convexify_arch(&p).unwrap();
                let t1 = t.elapsed();
                let r = validate(&out.plan, &ValidationPolicy::default());
                eprintln!(
                    "n={n} seed={seed} moves={} rounds={} eps={:.2e} flips={} plan={:?} valid={} ({:?})",
                    out.plan.len(), out.rounds, out.epsilon, out.fallback_flips, t1, r.certified, t.elapsed()
                );
            }
        }
    }
}
