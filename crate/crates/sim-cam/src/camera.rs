use crate::error::SimError;

/// Pinhole camera looking down its optical axis at a scene plane a fixed
/// distance away. Scene coordinates on that plane are `(y, z)` in meters:
/// `y` to the right, `z` up. Image coordinates put the origin at the top
/// left with `v` growing downward, so `z` flips sign.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CameraModel {
    pub width: u16,
    pub height: u16,
    pub fov_deg: f64,
    pub depth_m: f64,
}

impl CameraModel {
    pub fn new(width: u16, height: u16, fov_deg: f64, depth_m: f64) -> Result<Self, SimError> {
        if width == 0 || height == 0 {
            return Err(SimError::InvalidConfig("sensor size must be nonzero".into()));
        }
        if !(fov_deg > 0.0 && fov_deg < 180.0) {
            return Err(SimError::InvalidConfig(format!(
                "field of view must lie in (0, 180) degrees, got {fov_deg}"
            )));
        }
        if depth_m.is_nan() || depth_m <= 0.0 {
            return Err(SimError::InvalidConfig(format!(
                "scene depth must be positive, got {depth_m}"
            )));
        }
        Ok(CameraModel {
            width,
            height,
            fov_deg,
            depth_m,
        })
    }

    /// Focal length in pixels; the horizontal field of view spans the sensor
    /// width.
    pub fn focal_px(&self) -> f64 {
        (self.width as f64 / 2.0) / (self.fov_deg.to_radians() / 2.0).tan()
    }

    pub fn cx(&self) -> f64 {
        self.width as f64 / 2.0
    }

    pub fn cy(&self) -> f64 {
        self.height as f64 / 2.0
    }

    /// Pixels per scene-plane meter.
    pub fn px_per_m(&self) -> f64 {
        self.focal_px() / self.depth_m
    }

    /// Scene-plane point to (possibly off-sensor) image coordinates.
    pub fn project(&self, y_m: f64, z_m: f64) -> (f64, f64) {
        let k = self.px_per_m();
        (self.cx() + k * y_m, self.cy() - k * z_m)
    }

    /// Scene-plane coordinates of the center of pixel `(x, y)`.
    pub fn pixel_center_scene(&self, x: u16, y: u16) -> (f64, f64) {
        let k = self.px_per_m();
        (
            (x as f64 + 0.5 - self.cx()) / k,
            -(y as f64 + 0.5 - self.cy()) / k,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sixty_degree_focal_length() {
        let cam = CameraModel::new(64, 64, 60.0, 0.2).unwrap();
        // 32 / tan(30 deg)
        assert!((cam.focal_px() - 55.425_625_842_204_07).abs() < 1e-9);
    }

    #[test]
    fn center_projects_to_image_center() {
        let cam = CameraModel::new(64, 64, 60.0, 0.2).unwrap();
        let (u, v) = cam.project(0.0, 0.0);
        assert_eq!((u, v), (32.0, 32.0));
    }

    #[test]
    fn up_in_scene_is_down_in_image() {
        let cam = CameraModel::new(64, 64, 60.0, 0.2).unwrap();
        let (_, v) = cam.project(0.0, 0.05);
        assert!(v < 32.0);
        let (u, _) = cam.project(0.05, 0.0);
        assert!(u > 32.0);
    }

    #[test]
    fn pixel_center_round_trips_through_projection() {
        let cam = CameraModel::new(64, 48, 60.0, 0.2).unwrap();
        for &(x, y) in &[(0u16, 0u16), (31, 17), (63, 47)] {
            let (sy, sz) = cam.pixel_center_scene(x, y);
            let (u, v) = cam.project(sy, sz);
            assert!((u - (x as f64 + 0.5)).abs() < 1e-9);
            assert!((v - (y as f64 + 0.5)).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_degenerate_parameters() {
        assert!(CameraModel::new(0, 64, 60.0, 0.2).is_err());
        assert!(CameraModel::new(64, 64, 0.0, 0.2).is_err());
        assert!(CameraModel::new(64, 64, 180.0, 0.2).is_err());
        assert!(CameraModel::new(64, 64, 60.0, 0.0).is_err());
    }
}
