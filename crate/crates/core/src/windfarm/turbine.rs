use serde::{Deserialize, Serialize};

/// Tabulated turbine: power in kW and thrust coefficient against hub-height
/// wind speed, interpolated linearly between the entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurbineSpec {
    pub name: String,
    pub rated_power_kw: f64,
    pub rotor_diameter: f64,
    pub cut_in: f64,
    pub rated_speed: f64,
    pub cut_out: f64,
    /// `(speed, kW)`, increasing in speed, spanning `[cut_in, cut_out]`.
    pub power_curve: Vec<(f64, f64)>,
    /// `(speed, C_T)` over the same span.
    pub thrust_curve: Vec<(f64, f64)>,
}

fn interpolate(table: &[(f64, f64)], v: f64) -> f64 {
    let k = table.partition_point(|&(s, _)| s <= v);
    if k == 0 {
        return table[0].1;
    }
    if k == table.len() {
        return table[k - 1].1;
    }
    let (v0, p0) = table[k - 1];
    let (v1, p1) = table[k];
    p0 + (p1 - p0) * (v - v0) / (v1 - v0)
}

impl TurbineSpec {
    /// Vestas V80 2 MW, 80 m rotor.
    pub fn v80() -> Self {
        let power = [
            (4.0, 66.6),
            (5.0, 154.0),
            (6.0, 282.0),
            (7.0, 460.0),
            (8.0, 696.0),
            (9.0, 996.0),
            (10.0, 1341.0),
            (11.0, 1661.0),
            (12.0, 1866.0),
            (13.0, 1958.0),
            (14.0, 1988.0),
            (15.0, 2000.0),
            (25.0, 2000.0),
        ];
        let thrust = [
            (4.0, 0.818),
            (5.0, 0.806),
            (6.0, 0.804),
            (7.0, 0.805),
            (8.0, 0.806),
            (9.0, 0.807),
            (10.0, 0.793),
            (11.0, 0.739),
            (12.0, 0.709),
            (13.0, 0.409),
            (14.0, 0.314),
            (15.0, 0.249),
            (16.0, 0.202),
            (17.0, 0.167),
            (18.0, 0.140),
            (19.0, 0.119),
            (20.0, 0.102),
            (21.0, 0.088),
            (22.0, 0.077),
            (23.0, 0.067),
            (24.0, 0.060),
            (25.0, 0.053),
        ];
        Self {
            name: "V80".into(),
            rated_power_kw: 2000.0,
            rotor_diameter: 80.0,
            cut_in: 4.0,
            rated_speed: 15.0,
            cut_out: 25.0,
            power_curve: power.to_vec(),
            thrust_curve: thrust.to_vec(),
        }
    }

    fn operating(&self, v: f64) -> bool {
        v >= self.cut_in && v <= self.cut_out
    }

    /// Electrical power in kW; zero outside `[cut_in, cut_out]`.
    pub fn power(&self, v: f64) -> f64 {
        if !self.operating(v) {
            return 0.0;
        }
        interpolate(&self.power_curve, v).clamp(0.0, self.rated_power_kw)
    }

    /// Thrust coefficient; zero when the rotor is idle.
    pub fn thrust(&self, v: f64) -> f64 {
        if !self.operating(v) {
            return 0.0;
        }
        interpolate(&self.thrust_curve, v).clamp(0.0, 1.0)
    }

    /// Axial induction `a` with `C_T = 4 a (1 - a)`.
    pub fn induction(&self, v: f64) -> f64 {
        0.5 * (1.0 - (1.0 - self.thrust(v)).max(0.0).sqrt())
    }
}
