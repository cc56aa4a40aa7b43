use std::f64::consts::PI;

/// Vector fields with known data for the mixed vector Laplace problem.
/// `f = −Δu`; `u·n = 0` and `curl u ≈ 0` hold on the boundary of the unit
/// square.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Manufactured {
    /// `u = (x(1−x), 0)`.
    Polynomial,
    /// `u_k = sin(π x_k) tanh(100((x−½)² + (y−½)² − 0.09))`.
    TanhRing,
    /// `u = 0`.
    Zero,
}

struct Ring {
    t: f64,
    tx: f64,
    ty: f64,
    lap: f64,
}

fn ring(x: f64, y: f64) -> Ring {
    let (dx, dy) = (x - 0.5, y - 0.5);
    let g = 100.0 * (dx * dx + dy * dy - 0.09);
    let t = g.tanh();
    let sech2 = 1.0 - t * t;
    let (gx, gy) = (200.0 * dx, 200.0 * dy);
    Ring { t, tx: sech2 * gx, ty: sech2 * gy, lap: sech2 * 400.0 - 2.0 * t * sech2 * (gx * gx + gy * gy) }
}

impl Manufactured {
    pub fn name(self) -> &'static str {
        match self {
            Self::Polynomial => "polynomial",
            Self::TanhRing => "tanh-ring",
            Self::Zero => "zero",
        }
    }

    pub fn u(self, x: f64, y: f64) -> [f64; 2] {
        match self {
            Self::Polynomial => [x * (1.0 - x), 0.0],
            Self::TanhRing => {
                let r = ring(x, y);
                [(PI * x).sin() * r.t, (PI * y).sin() * r.t]
            }
            Self::Zero => [0.0, 0.0],
        }
    }

    pub fn f(self, x: f64, y: f64) -> [f64; 2] {
        match self {
            Self::Polynomial => [2.0, 0.0],
            Self::TanhRing => {
                let r = ring(x, y);
                let lap = |s: f64, c: f64, tk: f64| -PI * PI * s * r.t + 2.0 * PI * c * tk + s * r.lap;
                [
                    -lap((PI * x).sin(), (PI * x).cos(), r.tx),
                    -lap((PI * y).sin(), (PI * y).cos(), r.ty),
                ]
            }
            Self::Zero => [0.0, 0.0],
        }
    }

    /// `∂x u₂ − ∂y u₁`.
    pub fn curl(self, x: f64, y: f64) -> f64 {
        match self {
            Self::Polynomial | Self::Zero => 0.0,
            Self::TanhRing => {
                let r = ring(x, y);
                (PI * y).sin() * r.tx - (PI * x).sin() * r.ty
            }
        }
    }
}
