//! Property tests for the geometric and motion invariants.

use std::f64::consts::{FRAC_PI_2, PI};

use linkfold::chain::{is_simple, make_chain, project, shape_classify, Shape};
use linkfold::flips::{convexify_flips, signed_area, DEFAULT_MAX_FLIPS};
use linkfold::geom::{self, ContactClass, Segment};
use linkfold::motion::{move_starts, pose_at, LiftDetour, Move, PreparedMove, Side};
use linkfold::straighten::{straighten_auto, DEFAULT_BUDGET};
use linkfold::{gen, Point};
use proptest::prelude::*;

fn point() -> impl Strategy<Value = Point> {
    (-10.0..10.0f64, -10.0..10.0f64, -10.0..10.0f64).prop_map(|(x, y, z)| Point::new(x, y, z))
}

fn planar() -> impl Strategy<Value = Point> {
    (-10.0..10.0f64, -10.0..10.0f64).prop_map(|(x, y)| Point::planar(x, y))
}

fn unit() -> impl Strategy<Value = Point> {
    point().prop_filter_map("zero vector", |p| if p.norm() > 1e-3 { p.normalized() } else { None })
}

fn is_monotone(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] >= w[0] - 1e-12) || xs.windows(2).all(|w| w[1] <= w[0] + 1e-12)
}

/// Length drift and per-joint monotonicity of `mv` from `config`, over 100 random times.
fn check_move(mv: &Move, config: &linkfold::ChainConfig, times: &[f64]) -> Result<(), TestCaseError> {
    let lengths = config.link_lengths();
    let prepared = PreparedMove::new(mv, config).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let mut ts = times.to_vec();
    ts.sort_by(f64::total_cmp);
    let mut schedules: Vec<Vec<f64>> = Vec::new();
    for &t in &ts {
        let pose = pose_at(mv, config, t).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert!(pose.link_lengths().max_relative_drift(&lengths) <= 1e-12);
        schedules.push(prepared.schedule(t).map_err(|e| TestCaseError::fail(e.to_string()))?);
    }
    for k in 0..schedules[0].len() {
        let series: Vec<f64> = schedules.iter().map(|s| s[k]).collect();
        prop_assert!(is_monotone(&series), "joint parameter {k} is not monotone: {series:?}");
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn orient_is_antisymmetric(p in point(), q in point(), r in point(), s in point()) {
        prop_assert_eq!(geom::orient2d(p, q, r), -geom::orient2d(q, p, r));
        prop_assert_eq!(geom::orient3d(p, q, r, s), -geom::orient3d(q, p, r, s));
    }

    #[test]
    fn segment_distance_is_symmetric_and_matches_contact(a in planar(), b in planar(), c in planar(), d in planar()) {
        let (s1, s2) = (Segment::new(a, b).unwrap(), Segment::new(c, d).unwrap());
        let (d12, d21) = (geom::seg_seg_distance3(&s1, &s2), geom::seg_seg_distance3(&s2, &s1));
        prop_assert!((d12 - d21).abs() <= 1e-12 * (1.0 + d12));
        let touching = geom::seg_seg_contact2(&s1, &s2) != ContactClass::Disjoint;
        prop_assert_eq!(touching, d12 == 0.0);
    }

    #[test]
    fn hull_is_convex_and_contains_all_points(pts in prop::collection::vec(planar(), 3..30)) {
        let Ok(hull) = geom::convex_hull2(&pts) else { return Ok(()) };
        let h = hull.len();
        for k in 0..h {
            let (a, b, c) = (pts[hull[k]], pts[hull[(k + 1) % h]], pts[hull[(k + 2) % h]]);
            prop_assert_eq!(geom::orient2d(a, b, c), 1);
            for &p in &pts {
                prop_assert!(geom::orient2d(a, b, p) >= 0);
            }
        }
    }

    #[test]
    fn simplicity_is_invariant_under_rigid_motions(seed in 0u64..1000, axis in unit(), angle in -PI..PI, shift in point()) {
        let chain = gen::random_lifted_chain(7, &mut gen::rng(seed));
        let moved = chain.map_vertices(|p| p.rotate_about(Point::default(), axis, angle) + shift);
        prop_assert_eq!(is_simple(&chain, None).simple, is_simple(&moved, None).simple);
        let (c0, c1) = (geom::min_clearance(&chain), geom::min_clearance(&moved));
        prop_assert!((c0 - c1).abs() <= 1e-9 * c0.max(1e-300));
    }

    #[test]
    fn clearance_is_positive_iff_simple(pts in prop::collection::vec(planar(), 3..9), closed in any::<bool>()) {
        // Random planar point sequences are often self-crossing.
        let Ok(chain) = make_chain(pts, closed) else { return Ok(()) };
        prop_assert_eq!(geom::min_clearance(&chain) > 0.0, is_simple(&chain, None).simple);
    }

    #[test]
    fn straight_chains_span_their_length(n in 2usize..12, dir in unit(), start in point(), lens in prop::collection::vec(0.1..3.0f64, 11)) {
        let mut v = vec![start];
        for l in &lens[..n - 1] {
            let last = *v.last().unwrap();
            v.push(last + dir * *l);
        }
        let chain = make_chain(v, false).unwrap();
        prop_assert_eq!(shape_classify(&chain, None), Shape::Straight);
        let span = chain.vertices()[0].dist(*chain.vertices().last().unwrap());
        prop_assert!((chain.link_lengths().total() - span).abs() <= n as f64 * chain.default_tol());
    }

    #[test]
    fn projection_is_idempotent(seed in 0u64..1000, dir in unit()) {
        let chain = gen::random_lifted_chain(6, &mut gen::rng(seed));
        let Ok(once) = project(&chain, dir) else { return Ok(()) };
        // The output lies in the plane z = 0, so the same direction, seen in
        // the output's frame, is +z.
        let Ok(twice) = project(&once.chain, Point::new(0.0, 0.0, 1.0)) else {
            return Err(TestCaseError::fail("second projection failed"));
        };
        for (a, b) in once.chain.vertices().iter().zip(twice.chain.vertices()) {
            prop_assert!(a.dist(*b) <= 1e-12 * (1.0 + a.norm()));
        }
    }

    #[test]
    fn single_joint_moves_keep_lengths(seed in 0u64..1000, joint in 1usize..5, axis in unit(), angle in -PI..PI,
                                       prefix in any::<bool>(), times in prop::collection::vec(0.0..=1.0f64, 100)) {
        let chain = gen::random_lifted_chain(6, &mut gen::rng(seed));
        let side = if prefix { Side::Prefix } else { Side::Suffix };
        check_move(&Move::SingleJoint { joint, axis: axis.to_array(), side, angle }, &chain, &times)?;
    }

    #[test]
    fn subchain_moves_keep_lengths(seed in 0u64..1000, a in 0usize..3, span in 2usize..4, angle in -PI..PI,
                                   times in prop::collection::vec(0.0..=1.0f64, 100)) {
        let chain = gen::random_simple_polygon(7, &mut gen::rng(seed));
        check_move(&Move::SubchainAboutLine { a, b: a + span, angle }, &chain, &times)?;
    }

    #[test]
    fn coupled_lifts_keep_lengths(base in point(), d in unit(), len in 0.2..3.0f64, stack in prop::collection::vec(0.2..2.0f64, 0..4),
                                  detour in any::<bool>(), dip_frac in 0.0..0.95f64, turn in -3.0..3.0f64,
                                  times in prop::collection::vec(0.0..=1.0f64, 100)) {
        prop_assume!(d.z.abs() < 0.99);
        let up = Point::new(0.0, 0.0, 1.0);
        let mut v = vec![base, base + d * len];
        for s in &stack {
            let last = *v.last().unwrap();
            v.push(last + up * *s);
        }
        let chain = make_chain(v, false).unwrap();
        let phi0 = d.z.asin();
        let detour = detour.then(|| LiftDetour { dip: phi0 - dip_frac * (phi0 + FRAC_PI_2), turn });
        check_move(&Move::CoupledLift { joint: 1, up: up.to_array(), detour }, &chain, &times)?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn straightening_is_short_and_lifts_stay_on_their_segment(seed in 0u64..10_000, n in 3usize..13) {
        let chain = gen::random_lifted_chain(n + 1, &mut gen::rng(seed));
        let plan = straighten_auto(&chain, DEFAULT_BUDGET, seed).unwrap();
        prop_assert!(plan.len() <= n);
        let starts = move_starts(&plan).unwrap();
        for (mv, start) in plan.moves.iter().zip(&starts) {
            let Move::CoupledLift { joint, up, detour: None } = *mv else { continue };
            let up = Point::from_array(up);
            let flat = |p: Point| p - up * p.dot(up);
            // The moving joint slides along its projected edge; an edge
            // pointing down passes the horizontal, so the segment reaches out
            // to the full link length.
            let (v0, v1) = (start.vertices()[joint - 1], start.vertices()[joint]);
            let a = flat(v0);
            let b = a + (flat(v1) - a).normalized().unwrap() * v0.dist(v1);
            for k in 0..=20 {
                let pose = pose_at(mv, start, k as f64 / 20.0).unwrap();
                for &p in &pose.vertices()[joint..] {
                    prop_assert!(geom::point_segment_distance(flat(p), a, b) <= 1e-9 * (1.0 + a.dist(b)));
                }
            }
        }
        let end = linkfold::apply(&plan).unwrap();
        prop_assert_eq!(shape_classify(&end, None), Shape::Straight);
        prop_assert!(end.link_lengths().max_relative_drift(&chain.link_lengths()) <= n as f64 * 1e-9);
    }

    #[test]
    fn flips_grow_area_and_hull(seed in 0u64..10_000, n in 4usize..10) {
        let polygon = gen::random_simple_polygon(n, &mut gen::rng(seed));
        let out = convexify_flips(&polygon, DEFAULT_MAX_FLIPS).unwrap();
        prop_assert!(out.areas.windows(2).all(|w| w[1] > w[0]));
        let hull_area = |c: &linkfold::ChainConfig| {
            let hull = geom::convex_hull2(c.vertices()).unwrap();
            signed_area(&hull.iter().map(|&k| c.vertices()[k]).collect::<Vec<_>>()).abs()
        };
        let configs = move_starts(&out.plan).unwrap();
        let hulls: Vec<f64> = configs.iter().map(hull_area).collect();
        prop_assert!(hulls.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12)));
    }
}
