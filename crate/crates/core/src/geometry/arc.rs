use crate::model::Point2;

use super::GeometryError;

/// Center and radius of an arc given by its endpoints and sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArcGeom {
    pub center: Point2,
    pub radius: f64,
    /// Polar angle of the start point about the center, radians.
    pub start_angle: f64,
    /// Signed sweep in radians; negative when clockwise.
    pub signed_sweep: f64,
}

impl ArcGeom {
    pub fn point_at(&self, t: f64) -> Point2 {
        let a = self.start_angle + self.signed_sweep * t;
        Point2::new(self.center.x + self.radius * a.cos(), self.center.y + self.radius * a.sin())
    }
}

/// Solves the circle through `start` and `end` that subtends `sweep_deg`
/// when travelled in the given direction.
///
/// The center sits on the chord's perpendicular bisector at signed distance
/// `r cos(sweep/2)`, to the left of the chord for counter-clockwise travel.
pub fn solve_arc(
    start: Point2,
    end: Point2,
    sweep_deg: f64,
    clockwise: bool,
) -> Result<ArcGeom, GeometryError> {
    if !(sweep_deg > 0.0 && sweep_deg < 360.0) || !sweep_deg.is_finite() {
        return Err(GeometryError::DegenerateArc(format!("sweep {sweep_deg} outside (0, 360)")));
    }
    let chord = end - start;
    let len = chord.norm();
    if !(len > 1e-12) {
        return Err(GeometryError::DegenerateArc("arc start and end coincide".into()));
    }
    let half = sweep_deg.to_radians() / 2.0;
    let radius = len / (2.0 * half.sin());
    let u = chord * (1.0 / len);
    let left = Point2::new(-u.y, u.x);
    let mid = (start + end) * 0.5;
    // exact midpoint for semicircles, where cos(half) is only ~6e-17
    let offset = if sweep_deg == 180.0 { 0.0 } else { radius * half.cos() };
    let center = if clockwise { mid - left * offset } else { mid + left * offset };
    let d = start - center;
    let sweep = sweep_deg.to_radians();
    Ok(ArcGeom {
        center,
        radius,
        start_angle: d.y.atan2(d.x),
        signed_sweep: if clockwise { -sweep } else { sweep },
    })
}
