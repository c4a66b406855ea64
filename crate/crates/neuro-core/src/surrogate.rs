/// Shape of the derivative proxy substituted for the spike Heaviside.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SurrogateKind {
    /// `max(0, 1 - |z| / width)` — peak 1 at z = 0, support `[-width, width]`.
    Triangular,
    /// Straight-through window: 1 on `(-width, width)`, 0 outside.
    BoxCar,
}

/// Surrogate gradient for the spike nonlinearity of Eq-style LIF dynamics:
/// spikes fire on `z > 0` where `z = u / v_th - 1`, and the backward pass
/// replaces the Heaviside derivative with `grad(z)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Surrogate {
    pub kind: SurrogateKind,
    pub width: f64,
}

impl Default for Surrogate {
    fn default() -> Self {
        Surrogate {
            kind: SurrogateKind::Triangular,
            width: 1.0,
        }
    }
}

impl Surrogate {
    pub fn triangular(width: f64) -> Self {
        assert!(width > 0.0, "surrogate width must be positive");
        Surrogate {
            kind: SurrogateKind::Triangular,
            width,
        }
    }

    /// Derivative proxy at normalized membrane offset `z`.
    pub fn grad(&self, z: f64) -> f64 {
        match self.kind {
            SurrogateKind::Triangular => (1.0 - z.abs() / self.width).max(0.0),
            SurrogateKind::BoxCar => {
                if z.abs() < self.width {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Exact antiderivative of [`Surrogate::grad`] with value 0 far left of
    /// the support. Used as the smoothed spike forward when checking tape
    /// gradients against finite differences.
    pub fn smoothed_step(&self, z: f64) -> f64 {
        let w = self.width;
        match self.kind {
            SurrogateKind::Triangular => {
                if z <= -w {
                    0.0
                } else if z < 0.0 {
                    (z + w) * (z + w) / (2.0 * w)
                } else if z < w {
                    w - (w - z) * (w - z) / (2.0 * w)
                } else {
                    w
                }
            }
            SurrogateKind::BoxCar => (z + w).clamp(0.0, 2.0 * w),
        }
    }
}
