use serde::{Deserialize, Serialize};

use super::site::Site;
use super::turbine::TurbineSpec;
use crate::acqopt::{ConstraintSet, Domain};
use crate::error::{invalid, Error, Result};

pub const N_TURBINES: usize = 4;
pub const MIN_SPACING: f64 = 160.0;
pub const DIRECTION_RANGE: (f64, f64) = (90.0, 135.0);
pub const AMBIENT_SPEED: f64 = 6.0;
pub const WAKE_DECAY: f64 = 0.05;
/// Hours per year, leap years included.
pub const HOURS_PER_YEAR: f64 = 8766.0;

/// Turbine positions in metres and the wind direction in degrees (the
/// direction the wind comes from, clockwise from north).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarmLayout {
    pub positions: Vec<[f64; 2]>,
    pub wind_direction: f64,
    pub wind_speed: f64,
}

impl FarmLayout {
    /// Reads `[x1, y1, .., x4, y4, direction]`.
    pub fn from_vector(x: &[f64]) -> Result<Self> {
        if x.len() != 2 * N_TURBINES + 1 {
            return Err(Error::DimensionMismatch {
                expected: 2 * N_TURBINES + 1,
                got: x.len(),
            });
        }
        Ok(Self {
            positions: positions_of(x),
            wind_direction: x[2 * N_TURBINES],
            wind_speed: AMBIENT_SPEED,
        })
    }

    pub fn to_vector(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.positions.iter().flat_map(|p| [p[0], p[1]]).collect();
        v.push(self.wind_direction);
        v
    }

    pub fn min_spacing(&self) -> f64 {
        min_pairwise_distance(&self.positions)
    }

    pub fn is_feasible(&self) -> bool {
        self.min_spacing() >= MIN_SPACING - 1e-6
    }
}

fn positions_of(x: &[f64]) -> Vec<[f64; 2]> {
    x.chunks_exact(2).take(N_TURBINES).map(|c| [c[0], c[1]]).collect()
}

pub fn min_pairwise_distance(p: &[[f64; 2]]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            best = best.min(distance(p[i], p[j]));
        }
    }
    best
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Unit vector the wind blows along for a direction it comes from.
pub fn flow_vector(direction: f64) -> [f64; 2] {
    let (s, c) = direction.to_radians().sin_cos();
    [-s, -c]
}

/// Jensen top-hat deficit behind a rotor with induction `induction` and
/// diameter `diameter`: `2a / (1 + 2 k x / D)^2` inside the cone of radius
/// `D / 2 + k x`, zero elsewhere and upstream.
pub fn wake_deficit(upstream: [f64; 2], point: [f64; 2], direction: f64, induction: f64, diameter: f64) -> f64 {
    let f = flow_vector(direction);
    let d = [point[0] - upstream[0], point[1] - upstream[1]];
    let x = d[0] * f[0] + d[1] * f[1];
    if x <= 0.0 {
        return 0.0;
    }
    let lateral = (d[0] - x * f[0]).hypot(d[1] - x * f[1]);
    if lateral > 0.5 * diameter + WAKE_DECAY * x {
        return 0.0;
    }
    let expansion = 1.0 + 2.0 * WAKE_DECAY * x / diameter;
    2.0 * induction / (expansion * expansion)
}

/// Site, turbine model and ambient wind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindFarm {
    pub site: Site,
    pub turbine: TurbineSpec,
}

impl Default for WindFarm {
    fn default() -> Self {
        Self {
            site: Site::default(),
            turbine: TurbineSpec::v80(),
        }
    }
}

impl WindFarm {
    pub fn new(site: Site, turbine: TurbineSpec) -> Self {
        Self { site, turbine }
    }

    /// Hub-height speed at each turbine after terrain and wakes. Turbines
    /// are resolved from upstream to downstream; deficits combine by root
    /// sum of squares and are capped at one.
    pub fn effective_speeds(&self, layout: &FarmLayout) -> Result<Vec<f64>> {
        let (p, theta) = (&layout.positions, layout.wind_direction);
        if !theta.is_finite() || !(layout.wind_speed >= 0.0) {
            return Err(invalid("wind direction and speed must be finite"));
        }
        for &q in p {
            self.site.check(q)?;
        }
        let f = flow_vector(theta);
        let mut order: Vec<usize> = (0..p.len()).collect();
        order.sort_by(|&i, &j| (p[i][0] * f[0] + p[i][1] * f[1]).total_cmp(&(p[j][0] * f[0] + p[j][1] * f[1])));
        let mut speed = vec![0.0; p.len()];
        let mut induction = vec![0.0; p.len()];
        for (k, &i) in order.iter().enumerate() {
            let free = layout.wind_speed * self.site.speed_up(p[i], theta);
            let sq: f64 = order[..k]
                .iter()
                .map(|&j| wake_deficit(p[j], p[i], theta, induction[j], self.turbine.rotor_diameter).powi(2))
                .sum();
            speed[i] = free * (1.0 - sq.sqrt().min(1.0));
            induction[i] = self.turbine.induction(speed[i]);
        }
        Ok(speed)
    }

    /// Annual energy production in GWh.
    pub fn aep(&self, layout: &FarmLayout) -> Result<f64> {
        let speeds = self.effective_speeds(layout)?;
        let kw: f64 = speeds.iter().map(|&v| self.turbine.power(v)).sum();
        Ok(kw * HOURS_PER_YEAR * 1e-6)
    }

    /// AEP of `[x1, y1, .., x4, y4, direction]`.
    pub fn aep_vector(&self, x: &[f64]) -> Result<f64> {
        self.aep(&FarmLayout::from_vector(x)?)
    }

    /// Turbine coordinates controllable, wind direction environmental.
    pub fn domain(&self) -> Domain {
        let mut lower = vec![0.0; 2 * N_TURBINES];
        let mut upper: Vec<f64> = (0..N_TURBINES).flat_map(|_| [self.site.width, self.site.height]).collect();
        lower.push(DIRECTION_RANGE.0);
        upper.push(DIRECTION_RANGE.1);
        Domain::new(lower, upper, vec![2 * N_TURBINES]).expect("site box is valid")
    }

    /// Domain of the turbine coordinates alone, for fixed-direction runs.
    pub fn layout_domain(&self) -> Domain {
        let upper: Vec<f64> = (0..N_TURBINES).flat_map(|_| [self.site.width, self.site.height]).collect();
        Domain::controllable(vec![0.0; 2 * N_TURBINES], upper).expect("site box is valid")
    }
}

/// One constraint `|p_i - p_j| - 160 >= 0` per turbine pair, reading the
/// first eight coordinates of a point.
pub fn spacing_constraints() -> ConstraintSet {
    let mut set = ConstraintSet::new();
    for i in 0..N_TURBINES {
        for j in i + 1..N_TURBINES {
            set = set.with(format!("spacing_{}_{}", i + 1, j + 1), move |x: &[f64]| {
                distance([x[2 * i], x[2 * i + 1]], [x[2 * j], x[2 * j + 1]]) - MIN_SPACING
            });
        }
    }
    set
}
