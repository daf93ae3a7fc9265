//! Convex polygon clipping, areas and fan triangulation.

use crate::mesh::Point;

/// Vertices closer than this are merged.
pub const MERGE_TOL: f64 = 1e-12;

/// Signed shoelace area; positive for counter-clockwise polygons.
pub fn polygon_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..n {
        let (p, q) = (poly[i], poly[(i + 1) % n]);
        s += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * s
}

/// Returns the polygon in counter-clockwise order.
pub fn counter_clockwise(poly: &[Point]) -> Vec<Point> {
    let mut out = poly.to_vec();
    if polygon_area(&out) < 0.0 {
        out.reverse();
    }
    out
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn merge_duplicates(poly: Vec<Point>) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::with_capacity(poly.len());
    for p in poly {
        if let Some(last) = out.last() {
            if (last[0] - p[0]).abs() <= MERGE_TOL && (last[1] - p[1]).abs() <= MERGE_TOL {
                continue;
            }
        }
        out.push(p);
    }
    while out.len() > 1 {
        let (f, l) = (out[0], out[out.len() - 1]);
        if (f[0] - l[0]).abs() <= MERGE_TOL && (f[1] - l[1]).abs() <= MERGE_TOL {
            out.pop();
        } else {
            break;
        }
    }
    out
}

/// Sutherland–Hodgman clipping of `subject` against the convex polygon `clip`.
/// Both inputs may have either orientation; the result is counter-clockwise
/// and empty when the overlap has no area.
pub fn clip_convex(subject: &[Point], clip: &[Point]) -> Vec<Point> {
    let clip = counter_clockwise(clip);
    let mut out = counter_clockwise(subject);
    let n = clip.len();
    for i in 0..n {
        if out.is_empty() {
            break;
        }
        let (a, b) = (clip[i], clip[(i + 1) % n]);
        let scale = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        // Signed distance of p to the edge line, positive inside.
        let side = |p: Point| cross(a, b, p) / scale;
        let input = std::mem::take(&mut out);
        let m = input.len();
        for j in 0..m {
            let (p, q) = (input[j], input[(j + 1) % m]);
            let (dp, dq) = (side(p), side(q));
            let p_in = dp >= -MERGE_TOL;
            let q_in = dq >= -MERGE_TOL;
            if p_in {
                out.push(p);
            }
            if p_in != q_in && (dp.abs() > MERGE_TOL || dq.abs() > MERGE_TOL) {
                let t = dp / (dp - dq);
                let x = [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])];
                out.push(x);
            }
        }
        out = merge_duplicates(out);
    }
    if out.len() < 3 || polygon_area(&out).abs() <= MERGE_TOL * MERGE_TOL {
        return Vec::new();
    }
    out
}

/// Fan triangulation from the first vertex of a convex polygon.
pub fn fan_triangulate(poly: &[Point]) -> Vec<[Point; 3]> {
    if poly.len() < 3 {
        return Vec::new();
    }
    (1..poly.len() - 1).map(|i| [poly[0], poly[i], poly[i + 1]]).collect()
}

/// Overlap of the intervals `[a0, a1]` and `[b0, b1]` (either orientation).
pub fn clip_interval(a: [f64; 2], b: [f64; 2]) -> Option<[f64; 2]> {
    let lo = a[0].min(a[1]).max(b[0].min(b[1]));
    let hi = a[0].max(a[1]).min(b[0].max(b[1]));
    (hi - lo > MERGE_TOL).then_some([lo, hi])
}
