use cascade_infer::ObjectFlow;

/// The three per-window error measures: center distance in pixels, wrapped
/// absolute direction difference in degrees, and absolute speed difference
/// in m/s (the prediction side of the speed is the claiming bin's
/// representative speed, since the cascade only ever reports bins).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowErrors {
    pub pix_e: f64,
    pub dir_e: f64,
    pub speed_e: f64,
}

impl WindowErrors {
    pub const ZERO: WindowErrors = WindowErrors {
        pix_e: 0.0,
        dir_e: 0.0,
        speed_e: 0.0,
    };
}

/// Absolute angular separation in degrees, wrapped into [0, 180].
pub fn angle_err_deg(pred_rad: f64, gt_rad: f64) -> f64 {
    let d = (pred_rad - gt_rad).to_degrees().rem_euclid(360.0);
    if d > 180.0 {
        360.0 - d
    } else {
        d
    }
}

/// Errors of one predicted flow against the window's midpoint ground truth.
pub fn window_errors(
    pred: &ObjectFlow,
    gt_pose_px: (f64, f64),
    gt_dir_rad: f64,
    gt_speed: f64,
) -> WindowErrors {
    WindowErrors {
        pix_e: (pred.pose_px.0 - gt_pose_px.0).hypot(pred.pose_px.1 - gt_pose_px.1),
        dir_e: angle_err_deg(pred.dir_rad, gt_dir_rad),
        speed_e: (pred.speed - gt_speed).abs(),
    }
}
