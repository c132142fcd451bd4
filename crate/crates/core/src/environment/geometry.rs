//! Planar segment predicates.

use super::Position;

/// Twice the signed area of the triangle (a, b, c).
fn orient(a: Position, b: Position, c: Position) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// True iff the open segments (p1, p2) and (q1, q2) intersect in a single
/// interior point of both.
///
/// Touching at an endpoint, an endpoint lying on the other segment, and
/// collinear overlap all return false. The predicate is symmetric in the two
/// segments and in the orientation of each.
pub fn segments_cross(p1: Position, p2: Position, q1: Position, q2: Position) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    strictly_opposite(d1, d2) && strictly_opposite(d3, d4)
}

fn strictly_opposite(a: f64, b: f64) -> bool {
    (a > 0.0 && b < 0.0) || (a < 0.0 && b > 0.0)
}
