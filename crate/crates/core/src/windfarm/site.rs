use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Analytic speed-up field over the site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Terrain {
    /// Speed-up factor identically one.
    Flat,
    /// Two rotated anisotropic Gaussian ridges whose orientation turns with
    /// the wind direction.
    #[default]
    Ridges,
}

/// One ridge of the terrain field, in coordinates normalised to the site
/// (`[-0.5, 0.5]` on each axis).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ridge {
    pub center: [f64; 2],
    pub amplitude: f64,
    /// Standard deviation along the ridge.
    pub along: f64,
    /// Standard deviation across the ridge.
    pub across: f64,
    /// Orientation at a wind direction of 90 degrees, radians.
    pub orientation: f64,
}

pub const RIDGES: [Ridge; 2] = [
    Ridge {
        center: [0.0, 0.0],
        amplitude: 2.0,
        along: 0.45,
        across: 0.12,
        orientation: 0.0,
    },
    Ridge {
        center: [0.2, -0.25],
        amplitude: 1.2,
        along: 0.25,
        across: 0.08,
        orientation: std::f64::consts::FRAC_PI_3,
    },
];

/// Subtracted from the ridge sum so that low ground slows the wind.
pub const RIDGE_BASELINE: f64 = 0.5;

/// Ridge rotation per degree of wind direction.
pub const RIDGE_TURN_RATE: f64 = 2.0;

/// Rectangular site `[0, width] x [0, height]` in metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub width: f64,
    pub height: f64,
    pub terrain: Terrain,
}

impl Default for Site {
    fn default() -> Self {
        Self {
            width: 1200.0,
            height: 1200.0,
            terrain: Terrain::Ridges,
        }
    }
}

impl Site {
    pub fn new(width: f64, height: f64, terrain: Terrain) -> Result<Self> {
        if !(width.is_finite() && width > 0.0 && height.is_finite() && height > 0.0) {
            return Err(invalid("site dimensions must be positive"));
        }
        Ok(Self { width, height, terrain })
    }

    pub fn flat(width: f64, height: f64) -> Result<Self> {
        Self::new(width, height, Terrain::Flat)
    }

    pub fn center(&self) -> [f64; 2] {
        [0.5 * self.width, 0.5 * self.height]
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        (0.0..=self.width).contains(&p[0]) && (0.0..=self.height).contains(&p[1])
    }

    pub fn check(&self, p: [f64; 2]) -> Result<()> {
        for (dim, (v, hi)) in p.iter().zip([self.width, self.height]).enumerate() {
            if !(*v >= 0.0 && *v <= hi) {
                return Err(Error::OutOfBounds {
                    dim,
                    value: *v,
                    lower: 0.0,
                    upper: hi,
                });
            }
        }
        Ok(())
    }

    /// Terrain speed-up factor `1 + 0.5 tanh(G)`, in `(0.5, 1.5)`.
    pub fn speed_up(&self, p: [f64; 2], direction: f64) -> f64 {
        match self.terrain {
            Terrain::Flat => 1.0,
            Terrain::Ridges => 1.0 + 0.5 * self.ridge_field(p, direction).tanh(),
        }
    }

    fn ridge_field(&self, p: [f64; 2], direction: f64) -> f64 {
        let q = [p[0] / self.width - 0.5, p[1] / self.height - 0.5];
        let turn = RIDGE_TURN_RATE * (direction - 90.0).to_radians();
        let mut g = -RIDGE_BASELINE;
        for r in &RIDGES {
            let (s, c) = (r.orientation + turn).sin_cos();
            let dx = q[0] - r.center[0];
            let dy = q[1] - r.center[1];
            let u = c * dx + s * dy;
            let v = -s * dx + c * dy;
            g += r.amplitude * (-0.5 * (u * u / (r.along * r.along) + v * v / (r.across * r.across))).exp();
        }
        g
    }
}

/// Ambient speed scaled by the terrain at `p`.
pub fn local_speed(site: &Site, p: [f64; 2], direction: f64, ambient_speed: f64) -> Result<f64> {
    site.check(p)?;
    Ok(ambient_speed * site.speed_up(p, direction))
}
