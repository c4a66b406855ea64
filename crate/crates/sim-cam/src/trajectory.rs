use crate::error::SimError;

use std::f64::consts::TAU;

/// Closed planar loops with period 1 in the path parameter `s` and analytic
/// derivatives. Amplitudes are chosen so every loop (plus the largest shape)
/// stays inside a 60-degree, 64-pixel frame at 0.2 m depth, and so the speed
/// ratio `max|p'| / min|p'|` stays below ~1.36 — narrow enough that a lap
/// centered on a band's representative speed keeps the whole lap strictly
/// inside that band.
///
/// The first three loops are the training paths; `RoundedSquare` and `Bean`
/// are held out for testing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TrajectoryKind {
    Circle,
    Oval,
    Lemniscate,
    RoundedSquare,
    Bean,
}

const CIRCLE_A: f64 = 0.085;

const OVAL_A: f64 = 0.075;
const OVAL_KY: f64 = 0.85;
const OVAL_KZ: f64 = 1.15;

const LEM_A: f64 = 0.066;
const LEM_KY: f64 = 1.3;
const LEM_KZ: f64 = 0.375;
/// Phase warp flattening the lemniscate speed profile: the unwarped curve is
/// twice as fast at the crossing as at the lobe tips.
const LEM_WARP: f64 = -0.17;

const RSQ_A: f64 = 0.082;
const RSQ_EPS: f64 = 0.05;

const BEAN_A: f64 = 0.082;
const BEAN_KZ: f64 = 1.05;
const BEAN_C: f64 = 0.06;

impl TrajectoryKind {
    pub const TRAIN: [TrajectoryKind; 3] = [
        TrajectoryKind::Circle,
        TrajectoryKind::Oval,
        TrajectoryKind::Lemniscate,
    ];
    pub const TEST: [TrajectoryKind; 2] = [TrajectoryKind::RoundedSquare, TrajectoryKind::Bean];
    pub const ALL: [TrajectoryKind; 5] = [
        TrajectoryKind::Circle,
        TrajectoryKind::Oval,
        TrajectoryKind::Lemniscate,
        TrajectoryKind::RoundedSquare,
        TrajectoryKind::Bean,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TrajectoryKind::Circle => "circle",
            TrajectoryKind::Oval => "oval",
            TrajectoryKind::Lemniscate => "lemniscate",
            TrajectoryKind::RoundedSquare => "rounded-square",
            TrajectoryKind::Bean => "bean",
        }
    }

    pub fn parse(s: &str) -> Result<Self, SimError> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| SimError::UnknownTrajectory(s.to_string()))
    }

    /// Scene-plane position in meters at path parameter `s` (any real; the
    /// loop has period 1).
    pub fn position(self, s: f64) -> (f64, f64) {
        match self {
            TrajectoryKind::Circle => {
                let t = TAU * s;
                (CIRCLE_A * t.cos(), CIRCLE_A * t.sin())
            }
            TrajectoryKind::Oval => {
                let t = TAU * s;
                (OVAL_A * OVAL_KY * t.cos(), OVAL_A * OVAL_KZ * t.sin())
            }
            TrajectoryKind::Lemniscate => {
                let t = lem_tau(s);
                (LEM_A * LEM_KY * t.sin(), LEM_A * LEM_KZ * (2.0 * t).sin())
            }
            TrajectoryKind::RoundedSquare => {
                let t = TAU * s;
                (
                    RSQ_A * (t.sin() + RSQ_EPS * (3.0 * t).sin()),
                    RSQ_A * (t.cos() - RSQ_EPS * (3.0 * t).cos()),
                )
            }
            TrajectoryKind::Bean => {
                let t = TAU * s;
                (
                    BEAN_A * (t.sin() + BEAN_C * (2.0 * t).sin()),
                    BEAN_A * BEAN_KZ * t.cos(),
                )
            }
        }
    }

    /// Analytic `d position / d s` in meters per unit path parameter.
    pub fn velocity_ds(self, s: f64) -> (f64, f64) {
        match self {
            TrajectoryKind::Circle => {
                let t = TAU * s;
                (-TAU * CIRCLE_A * t.sin(), TAU * CIRCLE_A * t.cos())
            }
            TrajectoryKind::Oval => {
                let t = TAU * s;
                (
                    -TAU * OVAL_A * OVAL_KY * t.sin(),
                    TAU * OVAL_A * OVAL_KZ * t.cos(),
                )
            }
            TrajectoryKind::Lemniscate => {
                let t = lem_tau(s);
                let dtau = lem_dtau_ds(s);
                (
                    LEM_A * LEM_KY * t.cos() * dtau,
                    LEM_A * LEM_KZ * 2.0 * (2.0 * t).cos() * dtau,
                )
            }
            TrajectoryKind::RoundedSquare => {
                let t = TAU * s;
                (
                    TAU * RSQ_A * (t.cos() + 3.0 * RSQ_EPS * (3.0 * t).cos()),
                    TAU * RSQ_A * (-t.sin() + 3.0 * RSQ_EPS * (3.0 * t).sin()),
                )
            }
            TrajectoryKind::Bean => {
                let t = TAU * s;
                (
                    TAU * BEAN_A * (t.cos() + 2.0 * BEAN_C * (2.0 * t).cos()),
                    -TAU * BEAN_A * BEAN_KZ * t.sin(),
                )
            }
        }
    }

    /// Numeric extrema of `|p'(s)|` over one lap, meters per unit `s`.
    pub fn speed_extrema(self) -> (f64, f64) {
        let n = 8192;
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for i in 0..n {
            let (dy, dz) = self.velocity_ds(i as f64 / n as f64);
            let q = dy.hypot(dz);
            lo = lo.min(q);
            hi = hi.max(q);
        }
        (lo, hi)
    }

    /// Numeric maximum of `|p(s)|` over one lap, meters.
    pub fn max_radius(self) -> f64 {
        let n = 8192;
        (0..n)
            .map(|i| {
                let (y, z) = self.position(i as f64 / n as f64);
                y.hypot(z)
            })
            .fold(0.0, f64::max)
    }

    /// Lap time in seconds that puts the lap's mean speed (geometric mean of
    /// its extrema) at the midpoint of `[lo, hi]` m/s — the band's
    /// representative speed, which is also the speed the cascade will report
    /// for it. The profiles above are narrow enough (ratio <= 1.36) that the
    /// whole lap stays inside any band wider than ~1.5x; `generate_sequence`
    /// re-checks every sample against the band regardless.
    pub fn lap_time_s(self, lo: f64, hi: f64) -> f64 {
        assert!(lo > 0.0 && hi > lo);
        let (q_min, q_max) = self.speed_extrema();
        (q_min * q_max).sqrt() / (0.5 * (lo + hi))
    }
}

fn lem_tau(s: f64) -> f64 {
    TAU * s + LEM_WARP * (2.0 * TAU * s).sin()
}

fn lem_dtau_ds(s: f64) -> f64 {
    TAU * (1.0 + 2.0 * LEM_WARP * (2.0 * TAU * s).cos())
}
