//! Desk-scale wind-farm simulator: four turbines on a site with an
//! analytic terrain speed-up field, Jensen wakes and a tabulated V80 power
//! curve, plus drivers comparing ENVBO, fixed-direction BO and direct local
//! search on it.

mod experiment;
mod farm;
mod site;
mod turbine;

pub use experiment::{
    envbo_prediction, random_baseline, random_feasible_layout, run_bo_farm, run_direct_search, run_envbo_farm,
    run_windfarm_experiment, DirectionResult, WindMethod, WindfarmConfig, WindfarmReport,
};
pub use farm::{
    flow_vector, min_pairwise_distance, spacing_constraints, wake_deficit, FarmLayout, WindFarm, AMBIENT_SPEED,
    DIRECTION_RANGE, HOURS_PER_YEAR, MIN_SPACING, N_TURBINES, WAKE_DECAY,
};
pub use site::{local_speed, Ridge, Site, Terrain, RIDGES, RIDGE_BASELINE, RIDGE_TURN_RATE};
pub use turbine::TurbineSpec;

#[cfg(test)]
mod tests {
    use super::*;

    fn probe_grid(site: &Site, n: usize) -> Vec<[f64; 2]> {
        let mut pts = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                pts.push([site.width * i as f64 / (n - 1) as f64, site.height * j as f64 / (n - 1) as f64]);
            }
        }
        pts
    }

    #[test]
    fn speed_up_is_bounded() {
        let site = Site::default();
        for theta in [90.0, 100.0, 112.5, 135.0] {
            for p in probe_grid(&site, 100) {
                let s = site.speed_up(p, theta);
                assert!((0.5..=1.5).contains(&s), "{s} at {p:?}");
            }
        }
    }

    #[test]
    fn field_turns_with_direction() {
        let site = Site::default();
        let l2: f64 = probe_grid(&site, 100)
            .iter()
            .map(|&p| (site.speed_up(p, 90.0) - site.speed_up(p, 135.0)).powi(2))
            .sum();
        assert!(l2 > 0.0);
    }

    #[test]
    fn field_is_lipschitz() {
        // |d/dq 0.5 tanh(G)| <= 0.5 sum_k A_k / (min(sigma_k) sqrt(e)) in
        // normalised coordinates.
        let site = Site::default();
        let bound: f64 = RIDGES
            .iter()
            .map(|r| 0.5 * r.amplitude / (r.along.min(r.across) * std::f64::consts::E.sqrt()))
            .sum();
        let n = 100;
        let h = 1.0 / (n - 1) as f64;
        // A grid step moves one normalised coordinate by h.
        let grid = probe_grid(&site, n);
        for theta in [90.0, 120.0] {
            for i in 0..n {
                for j in 0..n - 1 {
                    let a = site.speed_up(grid[i * n + j], theta);
                    let b = site.speed_up(grid[i * n + j + 1], theta);
                    assert!((a - b).abs() <= bound * h + 1e-12);
                    let c = site.speed_up(grid[j * n + i], theta);
                    let d = site.speed_up(grid[(j + 1) * n + i], theta);
                    assert!((c - d).abs() <= bound * h + 1e-12);
                }
            }
        }
    }

    #[test]
    fn local_speed_rejects_outside_points() {
        let site = Site::default();
        assert!(local_speed(&site, [-1.0, 10.0], 100.0, 6.0).is_err());
        assert_eq!(local_speed(&Site::flat(10.0, 10.0).unwrap(), [5.0, 5.0], 100.0, 6.0).unwrap(), 6.0);
    }

    #[test]
    fn power_curve_limits() {
        let t = TurbineSpec::v80();
        assert_eq!(t.power(3.9), 0.0);
        assert_eq!(t.power(25.1), 0.0);
        assert_eq!(t.power(6.0), 282.0);
        for k in 0..3000 {
            let v = k as f64 * 0.01;
            assert!(t.power(v) <= t.rated_power_kw);
        }
        assert_eq!(t.thrust(2.0), 0.0);
    }

    #[test]
    fn wake_geometry() {
        let a = 0.3;
        // Wind from the east (90 degrees) blows towards negative x.
        let up = [500.0, 500.0];
        assert_eq!(wake_deficit(up, [600.0, 500.0], 90.0, a, 80.0), 0.0);
        let near = wake_deficit(up, [500.0 - 1e-9, 500.0], 90.0, a, 80.0);
        assert!((near - 2.0 * a).abs() < 1e-9);
        let mut prev = f64::INFINITY;
        for k in 1..100 {
            let d = wake_deficit(up, [500.0 - 5.0 * k as f64, 500.0], 90.0, a, 80.0);
            assert!(d < prev);
            prev = d;
        }
        // Outside the cone.
        assert_eq!(wake_deficit(up, [400.0, 600.0], 90.0, a, 80.0), 0.0);
    }

    fn flat_farm() -> WindFarm {
        WindFarm::new(Site::flat(4000.0, 4000.0).unwrap(), TurbineSpec::v80())
    }

    fn layout(positions: Vec<[f64; 2]>, direction: f64) -> FarmLayout {
        FarmLayout {
            positions,
            wind_direction: direction,
            wind_speed: AMBIENT_SPEED,
        }
    }

    #[test]
    fn single_turbine_aep() {
        let farm = flat_farm();
        let aep = farm.aep(&layout(vec![[2000.0, 2000.0]], 100.0)).unwrap();
        assert_eq!(aep, 282.0 * 8766.0 * 1e-6);
    }

    #[test]
    fn aligned_pair_loses_energy() {
        let farm = flat_farm();
        let single = farm.aep(&layout(vec![[1700.0, 2000.0]], 90.0)).unwrap();
        let pair = farm.aep(&layout(vec![[2000.0, 2000.0], [1700.0, 2000.0]], 90.0)).unwrap();
        assert!(pair < 2.0 * single);
    }

    #[test]
    fn wakes_rotate_with_the_layout() {
        let farm = flat_farm();
        let c = [2000.0, 2000.0];
        let base = vec![[2300.0, 2000.0], [2000.0, 2050.0], [1700.0, 1980.0], [1850.0, 2200.0]];
        for (theta, alpha) in [(90.0, 0.3f64), (120.0, 1.1), (100.0, -0.7)] {
            let (s, co) = alpha.sin_cos();
            let rotated: Vec<[f64; 2]> = base
                .iter()
                .map(|p| {
                    let (dx, dy) = (p[0] - c[0], p[1] - c[1]);
                    [c[0] + co * dx - s * dy, c[1] + s * dx + co * dy]
                })
                .collect();
            let a = farm.aep(&layout(base.clone(), theta)).unwrap();
            let b = farm.aep(&layout(rotated, theta - alpha.to_degrees())).unwrap();
            assert!((a - b).abs() <= 1e-9 * a.max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn aep_is_bounded() {
        let farm = WindFarm::default();
        let cap = 4.0 * farm.turbine.rated_power_kw * HOURS_PER_YEAR * 1e-6;
        for s in 0..200 {
            let x = random_feasible_layout(&farm, s);
            for theta in [90.0, 112.0, 135.0] {
                let v = farm.aep(&layout(x.chunks_exact(2).map(|c| [c[0], c[1]]).collect(), theta)).unwrap();
                assert!((0.0..=cap).contains(&v));
            }
            for v in farm.effective_speeds(&FarmLayout::from_vector(&[x.clone(), vec![100.0]].concat()).unwrap()).unwrap() {
                assert!(v >= 0.0);
            }
        }
    }

    #[test]
    fn feasibility_matches_brute_force() {
        let constraints = spacing_constraints();
        let farm = WindFarm::default();
        let mut rng = crate::rng::rng_from_seed(3);
        use rand::Rng as _;
        for _ in 0..2000 {
            let x: Vec<f64> = (0..8).map(|_| rng.random::<f64>() * 600.0).collect();
            let mut ok = true;
            for i in 0..4 {
                for j in 0..4 {
                    if i != j {
                        let d = ((x[2 * i] - x[2 * j]).powi(2) + (x[2 * i + 1] - x[2 * j + 1]).powi(2)).sqrt();
                        ok &= d >= 160.0 - 1e-6;
                    }
                }
            }
            let mut full = x.clone();
            full.push(100.0);
            assert_eq!(constraints.is_feasible(&x), ok);
            assert_eq!(FarmLayout::from_vector(&full).unwrap().is_feasible(), constraints.is_feasible(&x));
        }
        assert_eq!(farm.domain().dim(), 9);
    }
}
