use crate::error::SimError;

/// Planar silhouettes swept along the trajectories. `half` is the
/// half-extent in meters: square half-side, circle radius, diamond
/// half-diagonal, star outer radius. Shapes stay axis-aligned; only their
/// paths rotate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ShapeKind {
    Square,
    Circle,
    Diamond,
    Star,
}

impl ShapeKind {
    pub const ALL: [ShapeKind; 4] = [
        ShapeKind::Square,
        ShapeKind::Circle,
        ShapeKind::Diamond,
        ShapeKind::Star,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ShapeKind::Square => "square",
            ShapeKind::Circle => "circle",
            ShapeKind::Diamond => "diamond",
            ShapeKind::Star => "star",
        }
    }

    pub fn parse(s: &str) -> Result<Self, SimError> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| SimError::UnknownShape(s.to_string()))
    }

    /// Membership of the offset `(dy, dz)` meters from the shape center.
    pub fn contains(self, dy: f64, dz: f64, half: f64) -> bool {
        match self {
            ShapeKind::Square => dy.abs() <= half && dz.abs() <= half,
            ShapeKind::Circle => dy * dy + dz * dz <= half * half,
            ShapeKind::Diamond => dy.abs() + dz.abs() <= half,
            ShapeKind::Star => point_in_polygon(dy, dz, &star_vertices(half)),
        }
    }
}

/// Five-pointed star, one point up, inner radius 0.42 of the outer.
fn star_vertices(outer: f64) -> [(f64, f64); 10] {
    let inner = 0.42 * outer;
    let mut v = [(0.0, 0.0); 10];
    for (i, out) in v.iter_mut().enumerate() {
        let r = if i % 2 == 0 { outer } else { inner };
        let a = std::f64::consts::FRAC_PI_2 + i as f64 * std::f64::consts::PI / 5.0;
        *out = (r * a.cos(), r * a.sin());
    }
    v
}

/// Even-odd crossing test.
fn point_in_polygon(py: f64, pz: f64, verts: &[(f64, f64)]) -> bool {
    let mut inside = false;
    let mut j = verts.len() - 1;
    for i in 0..verts.len() {
        let (yi, zi) = verts[i];
        let (yj, zj) = verts[j];
        if (zi > pz) != (zj > pz) {
            let cross_y = yi + (pz - zi) / (zj - zi) * (yj - yi);
            if py < cross_y {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Monte-Carlo-free area estimate on a fine grid.
    fn grid_area(shape: ShapeKind, half: f64) -> f64 {
        let n = 600;
        let step = 2.5 * half / n as f64;
        let mut hits = 0usize;
        for iy in 0..n {
            for iz in 0..n {
                let dy = -1.25 * half + (iy as f64 + 0.5) * step;
                let dz = -1.25 * half + (iz as f64 + 0.5) * step;
                if shape.contains(dy, dz, half) {
                    hits += 1;
                }
            }
        }
        hits as f64 * step * step
    }

    #[test]
    fn circle_area_within_five_percent() {
        let half = 0.016;
        let want = std::f64::consts::PI * half * half;
        let got = grid_area(ShapeKind::Circle, half);
        assert!((got - want).abs() / want < 0.05, "{got} vs {want}");
    }

    #[test]
    fn square_area_is_exact_on_grid() {
        let half = 0.016;
        let got = grid_area(ShapeKind::Square, half);
        let want = 4.0 * half * half;
        assert!((got - want).abs() / want < 0.01);
    }

    #[test]
    fn diamond_is_half_of_square() {
        let half = 0.016;
        let got = grid_area(ShapeKind::Diamond, half);
        assert!((got - 2.0 * half * half).abs() / (2.0 * half * half) < 0.02);
    }

    #[test]
    fn star_contains_center_and_points_not_waist_tips() {
        let h = 1.0;
        assert!(ShapeKind::Star.contains(0.0, 0.0, h));
        // the top point
        assert!(ShapeKind::Star.contains(0.0, 0.98, h));
        // just outside an inner notch along the downward axis: the star has
        // a concave notch between the two lower points
        assert!(!ShapeKind::Star.contains(0.0, -0.9, h));
        // far outside
        assert!(!ShapeKind::Star.contains(1.2, 0.0, h));
    }

    #[test]
    fn membership_respects_half_extent() {
        for shape in ShapeKind::ALL {
            assert!(shape.contains(0.0, 0.0, 0.016));
            assert!(!shape.contains(0.017, 0.017, 0.016));
        }
    }

    #[test]
    fn names_round_trip() {
        for shape in ShapeKind::ALL {
            assert_eq!(ShapeKind::parse(shape.name()).unwrap(), shape);
        }
        assert!(ShapeKind::parse("hexagon").is_err());
    }
}
