//! Knot diagrams of closed chains and the knot determinant.
//!
//! A regular projection of a closed chain is turned into a crossing
//! diagram; the determinant is evaluated from the Goeritz matrix of a
//! checkerboard colouring of the diagram's faces. The Fox colouring matrix
//! gives an independent evaluation used as a cross-check.

use rand::Rng;

use crate::chain::{is_simple, projection_basis, ChainConfig};
use crate::error::{Error, Result};
use crate::gen;
use crate::geom::Point;

/// Number of random directions tried before giving up on a regular projection.
pub const DEFAULT_DIRECTION_BUDGET: usize = 256;

/// Minimum sine of the angle between two crossing strands.
const MIN_CROSSING_SINE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    /// Edge index and parameter along it of the upper strand (nearer the viewer).
    pub over: (usize, f64),
    pub under: (usize, f64),
    /// +1 for a right-handed crossing, -1 for a left-handed one.
    pub sign: i8,
    /// Projected position in the image plane.
    pub point: [f64; 2],
    over_dir: [f64; 2],
    under_dir: [f64; 2],
}

/// One passage through a crossing while walking along the knot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Passage {
    pub crossing: usize,
    pub over: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnotDiagram {
    /// Viewing direction; the viewer sits at `+direction`.
    pub direction: Point,
    pub crossings: Vec<Crossing>,
    /// Passages in the order met when walking the chain from vertex 0.
    pub strand: Vec<Passage>,
}

impl KnotDiagram {
    pub fn writhe(&self) -> i64 {
        self.crossings.iter().map(|c| c.sign as i64).sum()
    }
}

fn cross2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn sub2(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn norm2(a: [f64; 2]) -> f64 {
    a[0].hypot(a[1])
}

fn point_seg_dist2(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = sub2(b, a);
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 { ((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2 } else { 0.0 };
    let t = t.clamp(0.0, 1.0);
    norm2(sub2(p, [a[0] + t * ab[0], a[1] + t * ab[1]]))
}

/// Build the crossing diagram seen from `+direction`. Fails with
/// `DegenerateProjection` unless the projection is regular: no vertex on a
/// non-incident edge, transverse crossings, no triple points.
pub fn diagram(config: &ChainConfig, direction: Point) -> Result<KnotDiagram> {
    if !config.is_closed() {
        return Err(Error::NotClosed);
    }
    let d = direction
        .normalized()
        .ok_or_else(|| Error::DegenerateProjection("zero direction".into()))?;
    let (e1, e2) = projection_basis(d);
    let v = config.vertices();
    let n = v.len();
    let p: Vec<[f64; 2]> = v.iter().map(|q| [q.dot(e1), q.dot(e2)]).collect();
    let h: Vec<f64> = v.iter().map(|q| q.dot(d)).collect();
    let tol = config.default_tol();
    let degenerate = |msg: String| Err(Error::DegenerateProjection(msg));

    for k in 0..n {
        if norm2(sub2(p[(k + 1) % n], p[k])) <= tol {
            return degenerate(format!("edge {k} is parallel to the direction"));
        }
    }
    for i in 0..n {
        for j in 0..n {
            if j == i || (j + 1) % n == i {
                continue;
            }
            if point_seg_dist2(p[i], p[j], p[(j + 1) % n]) <= tol {
                return degenerate(format!("vertex {i} projects onto edge {j}"));
            }
        }
    }

    let mut crossings = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (a0, a1, b0, b1) = (p[i], p[(i + 1) % n], p[j], p[(j + 1) % n]);
            let (da, db) = (sub2(a1, a0), sub2(b1, b0));
            let denom = cross2(da, db);
            if denom.abs() <= MIN_CROSSING_SINE * norm2(da) * norm2(db) {
                // Near-parallel; with every vertex clear of the other edge
                // they can only cross if the projection is degenerate.
                let w = sub2(b0, a0);
                if cross2(w, da).abs() <= tol * norm2(da) {
                    let (s0, s1) = (
                        (w[0] * da[0] + w[1] * da[1]) / (norm2(da) * norm2(da)),
                        ((b1[0] - a0[0]) * da[0] + (b1[1] - a0[1]) * da[1]) / (norm2(da) * norm2(da)),
                    );
                    if s0.max(s1) > 0.0 && s0.min(s1) < 1.0 {
                        return degenerate(format!("edges {i} and {j} overlap"));
                    }
                }
                continue;
            }
            let w = sub2(b0, a0);
            let s = cross2(w, db) / denom;
            let t = cross2(w, da) / denom;
            if !(0.0..=1.0).contains(&s) || !(0.0..=1.0).contains(&t) {
                continue;
            }
            let hi = h[i] + s * (h[(i + 1) % n] - h[i]);
            let hj = h[j] + t * (h[(j + 1) % n] - h[j]);
            if (hi - hj).abs() <= tol {
                return degenerate(format!("edges {i} and {j} meet in space"));
            }
            let point = [a0[0] + s * da[0], a0[1] + s * da[1]];
            let ((over, odir), (under, udir)) =
                if hi > hj { (((i, s), da), ((j, t), db)) } else { (((j, t), db), ((i, s), da)) };
            let sign = if cross2(odir, udir) > 0.0 { 1 } else { -1 };
            crossings.push(Crossing { over, under, sign, point, over_dir: odir, under_dir: udir });
        }
    }
    for a in 0..crossings.len() {
        for b in a + 1..crossings.len() {
            if norm2(sub2(crossings[a].point, crossings[b].point)) <= tol {
                return degenerate(format!("crossings {a} and {b} coincide"));
            }
        }
    }

    let mut events: Vec<((usize, f64), Passage)> = Vec::with_capacity(2 * crossings.len());
    for (k, c) in crossings.iter().enumerate() {
        events.push((c.over, Passage { crossing: k, over: true }));
        events.push((c.under, Passage { crossing: k, over: false }));
    }
    events.sort_by(|a, b| a.0 .0.cmp(&b.0 .0).then(a.0 .1.total_cmp(&b.0 .1)));
    let strand = events.into_iter().map(|e| e.1).collect();
    Ok(KnotDiagram { direction: d, crossings, strand })
}

/// Exact integer determinant by fraction-free (Bareiss) elimination.
pub fn bareiss_det(mut m: Vec<Vec<i128>>) -> i128 {
    let n = m.len();
    if n == 0 {
        return 1;
    }
    let mut sign = 1;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if m[k][k] == 0 {
            match (k + 1..n).find(|&r| m[r][k] != 0) {
                Some(r) => {
                    m.swap(k, r);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
            }
        }
        prev = m[k][k];
    }
    sign * m[n - 1][n - 1]
}

fn reduced_abs_det(mut m: Vec<Vec<i128>>) -> u64 {
    m.pop();
    for row in &mut m {
        row.pop();
    }
    bareiss_det(m).unsigned_abs() as u64
}

/// Knot determinant from the Goeritz matrix of a checkerboard colouring.
pub fn goeritz_determinant(diagram: &KnotDiagram) -> Result<u64> {
    let c = diagram.crossings.len();
    if c == 0 {
        return Ok(1);
    }
    let strand = &diagram.strand;
    let e = strand.len();
    // Half-edge 2k leaves passage k forwards along diagram edge k (passage
    // k to k+1); half-edge 2k+1 leaves passage k+1 backwards along it.
    let mut rot = vec![Vec::with_capacity(4); c];
    for (k, pass) in strand.iter().enumerate() {
        let cr = &diagram.crossings[pass.crossing];
        let t = if pass.over { cr.over_dir } else { cr.under_dir };
        let back = 2 * ((k + e - 1) % e) + 1;
        rot[pass.crossing].push((t[1].atan2(t[0]), 2 * k, pass.over));
        rot[pass.crossing].push(((-t[1]).atan2(-t[0]), back, pass.over));
    }
    let mut pos = vec![(0usize, 0usize); 2 * e];
    let mut is_over = vec![vec![false; 4]; c];
    for (x, r) in rot.iter_mut().enumerate() {
        r.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (k, &(_, h, over)) in r.iter().enumerate() {
            pos[h] = (x, k);
            is_over[x][k] = over;
        }
    }
    // Corner k at a crossing is the sector from rot[k] counterclockwise to
    // rot[k+1]. Trace faces, recording which face owns each corner.
    let mut face_of_edge = vec![usize::MAX; 2 * e];
    let mut corner_face = vec![[usize::MAX; 4]; c];
    let mut faces = 0;
    for start in 0..2 * e {
        if face_of_edge[start] != usize::MAX {
            continue;
        }
        let mut h = start;
        while face_of_edge[h] == usize::MAX {
            face_of_edge[h] = faces;
            let (x, k) = pos[h ^ 1];
            let corner = (k + 3) % 4;
            corner_face[x][corner] = faces;
            h = rot[x][corner].1;
        }
        faces += 1;
    }
    // Checkerboard colouring: corners adjacent around a crossing differ.
    let mut adj = vec![Vec::new(); faces];
    for cf in &corner_face {
        for k in 0..4 {
            adj[cf[k]].push(cf[(k + 1) % 4]);
        }
    }
    let mut colour = vec![u8::MAX; faces];
    for s in 0..faces {
        if colour[s] != u8::MAX {
            continue;
        }
        colour[s] = 0;
        let mut stack = vec![s];
        while let Some(f) = stack.pop() {
            for &g in &adj[f] {
                if colour[g] == u8::MAX {
                    colour[g] = 1 - colour[f];
                    stack.push(g);
                } else if colour[g] == colour[f] {
                    return Err(Error::DegenerateProjection("diagram is not checkerboard colourable".into()));
                }
            }
        }
    }
    let mut index = vec![usize::MAX; faces];
    let mut shaded = 0;
    for f in 0..faces {
        if colour[f] == 0 {
            index[f] = shaded;
            shaded += 1;
        }
    }
    let mut g = vec![vec![0i128; shaded]; shaded];
    for x in 0..c {
        let k = (0..4).find(|&k| colour[corner_face[x][k]] == 0).expect("two shaded corners");
        let (a, b) = (index[corner_face[x][k]], index[corner_face[x][(k + 2) % 4]]);
        let eta: i128 = if is_over[x][k] { 1 } else { -1 };
        if a != b {
            g[a][b] -= eta;
            g[b][a] -= eta;
            g[a][a] += eta;
            g[b][b] += eta;
        }
    }
    Ok(reduced_abs_det(g))
}

/// Knot determinant from the Fox colouring matrix (arcs × crossings).
pub fn colouring_determinant(diagram: &KnotDiagram) -> u64 {
    let c = diagram.crossings.len();
    if c == 0 {
        return 1;
    }
    let strand = &diagram.strand;
    let e = strand.len();
    // arc[k]: arc carrying diagram edge k (from passage k to k+1).
    let first_under = strand.iter().position(|p| !p.over).expect("every crossing has an under passage");
    let mut arc = vec![0usize; e];
    let mut current = 0;
    for step in 0..e {
        let k = (first_under + step) % e;
        if !strand[k].over && step > 0 {
            current += 1;
        }
        arc[k] = current;
    }
    let arcs = current + 1;
    let mut m = vec![vec![0i128; arcs]; c];
    for (k, pass) in strand.iter().enumerate() {
        let row = &mut m[pass.crossing];
        if pass.over {
            row[arc[k]] += 2;
        } else {
            row[arc[(k + e - 1) % e]] -= 1;
            row[arc[k]] -= 1;
        }
    }
    reduced_abs_det(m)
}

/// Regular projection directions, in the order tried for `seed`.
fn candidate_directions(seed: u64) -> impl Iterator<Item = Point> {
    let mut rng = gen::rng(seed);
    std::iter::repeat_with(move || loop {
        let p = Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let r = p.norm();
        if r > 1e-3 && r <= 1.0 {
            break p / r;
        }
    })
}

/// The first `count` regular diagrams found among seeded random directions.
pub fn regular_diagrams(config: &ChainConfig, count: usize, seed: u64) -> Result<Vec<KnotDiagram>> {
    if !config.is_closed() {
        return Err(Error::NotClosed);
    }
    let s = is_simple(config, None);
    if !s.simple {
        let (i, j) = s.witness.unwrap_or((0, 0));
        return Err(Error::NotSimple(i, j));
    }
    let mut out = Vec::new();
    for d in candidate_directions(seed).take(DEFAULT_DIRECTION_BUDGET) {
        if let Ok(dg) = diagram(config, d) {
            out.push(dg);
            if out.len() == count {
                return Ok(out);
            }
        }
    }
    Err(Error::NoRegularProjection)
}

/// Knot determinant along one regular projection.
pub fn knot_determinant(config: &ChainConfig) -> Result<u64> {
    let dg = regular_diagrams(config, 1, 0)?.remove(0);
    goeritz_determinant(&dg)
}

/// Knot determinants along `count` independent regular projections.
pub fn knot_determinants(config: &ChainConfig, count: usize, seed: u64) -> Result<Vec<u64>> {
    regular_diagrams(config, count, seed)?.iter().map(goeritz_determinant).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::make_chain;

    fn closed(pts: &[[f64; 3]]) -> ChainConfig {
        make_chain(pts.iter().map(|&a| Point::from_array(a)).collect(), true).unwrap()
    }

    /// Polygonal trefoil sampled from the torus knot (2, 3).
    fn torus_knot(p: i32, q: i32, samples: usize) -> ChainConfig {
        let pts: Vec<[f64; 3]> = (0..samples)
            .map(|k| {
                let t = k as f64 * std::f64::consts::TAU / samples as f64;
                let r = 2.0 + (q as f64 * t).cos();
                [r * (p as f64 * t).cos(), r * (p as f64 * t).sin(), -(q as f64 * t).sin()]
            })
            .collect();
        closed(&pts)
    }

    fn figure_eight() -> ChainConfig {
        let pts: Vec<[f64; 3]> = (0..60)
            .map(|k| {
                let t = k as f64 * std::f64::consts::TAU / 60.0;
                [
                    (2.0 + (2.0 * t).cos()) * (3.0 * t).cos(),
                    (2.0 + (2.0 * t).cos()) * (3.0 * t).sin(),
                    (4.0 * t).sin(),
                ]
            })
            .collect();
        closed(&pts)
    }

    #[test]
    fn bareiss_matches_hand_computation() {
        assert_eq!(bareiss_det(vec![vec![2, 1], vec![1, 2]]), 3);
        assert_eq!(bareiss_det(vec![vec![0, 1], vec![1, 0]]), -1);
        assert_eq!(bareiss_det(vec![vec![1, 2, 3], vec![4, 5, 6], vec![7, 8, 10]]), -3);
        assert_eq!(bareiss_det(vec![]), 1);
    }

    #[test]
    fn unknot_has_determinant_one() {
        let square = closed(&[[0., 0., 0.], [1., 0., 0.], [1., 1., 0.], [0., 1., 0.]]);
        assert_eq!(knot_determinants(&square, 3, 0).unwrap(), vec![1, 1, 1]);
    }

    #[test]
    fn goeritz_agrees_with_colouring_matrix() {
        // Random closed walks: whatever knot they form, both evaluations agree.
        let mut checked = 0;
        for seed in 0..40 {
            let mut rng = gen::rng(seed);
            let pts: Vec<[f64; 3]> = (0..12)
                .map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
                .collect();
            let c = closed(&pts);
            let Ok(dgs) = regular_diagrams(&c, 3, seed) else { continue };
            let dets: Vec<u64> = dgs.iter().map(|dg| goeritz_determinant(dg).unwrap()).collect();
            for (dg, &det) in dgs.iter().zip(&dets) {
                assert_eq!(det, colouring_determinant(dg));
            }
            assert!(dets.iter().all(|&d| d == dets[0]), "{dets:?}");
            checked += 1;
        }
        assert!(checked >= 30);
    }

    #[test]
    fn trefoil_and_figure_eight() {
        let tref = torus_knot(2, 3, 48);
        for dg in regular_diagrams(&tref, 3, 7).unwrap() {
            assert_eq!(goeritz_determinant(&dg).unwrap(), 3);
            assert_eq!(colouring_determinant(&dg), 3);
        }
        let fig8 = figure_eight();
        assert_eq!(knot_determinants(&fig8, 3, 0).unwrap(), vec![5, 5, 5]);
        let cinq = torus_knot(2, 5, 80);
        assert_eq!(knot_determinants(&cinq, 3, 0).unwrap(), vec![5, 5, 5]);
    }

    #[test]
    fn open_or_self_intersecting_input_is_rejected() {
        let open = make_chain(vec![Point::new(0., 0., 0.), Point::new(1., 0., 0.), Point::new(1., 1., 0.)], false).unwrap();
        assert!(matches!(knot_determinant(&open), Err(Error::NotClosed)));
        let bow = closed(&[[0., 0., 0.], [1., 1., 0.], [1., 0., 0.], [0., 1., 0.]]);
        assert!(matches!(knot_determinant(&bow), Err(Error::NotSimple(_, _))));
    }
}
