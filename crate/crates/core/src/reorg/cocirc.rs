use crate::error::{Error, Result};
use crate::geom::{angle_between, Point3, Vec3};

/// Weight of the out-of-plane (torsion) term.
pub const TORSION_WEIGHT: f64 = 1.0;

/// Good-continuation measure between two point/tangent pairs, in radians.
///
/// Tangents point along the direction of travel: out of the first curve at
/// `p1`, into the second at `p2`. The in-plane term is `|alpha - beta|` with
/// `alpha = angle(t1, u)`, `beta = angle(u, t2)` and `u` the unit chord. The
/// torsion term is the part of the mismatch between `t2` and the mirror image of
/// `t1` across the chord's bisector plane that the in-plane term does not
/// explain; it vanishes smoothly as the configuration becomes collinear, unlike
/// the raw angle between the two tangent planes.
///
/// The result is zero exactly when both pairs lie on a common circle or line
/// with consistent orientation.
pub fn cocircularity(p1: &Point3, t1: &Vec3, p2: &Point3, t2: &Vec3) -> Result<f64> {
    let chord = p2 - p1;
    let len = chord.norm();
    if len <= f64::EPSILON * (p1.coords.norm() + p2.coords.norm()).max(1.0) {
        return Err(Error::CoincidentPoints);
    }
    let u = chord / len;
    let alpha = angle_between(t1, &u);
    let beta = angle_between(&u, t2);
    let in_plane = (alpha - beta).abs();
    let mirrored = 2.0 * t1.dot(&u) * u - t1;
    let total = angle_between(&mirrored, t2);
    let torsion = (total - in_plane).max(0.0);
    Ok(in_plane + TORSION_WEIGHT * torsion)
}

/// Continuity at a shared junction point: the turning angle between the travel directions.
pub fn junction_continuity(t1: &Vec3, t2: &Vec3) -> f64 {
    angle_between(t1, t2)
}
