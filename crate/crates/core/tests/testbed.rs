mod common;

use rand::Rng;

use envbo::acqopt::{maximize_with, ConstraintSet, Domain, MultiStartOptions};
use envbo::envloop::{observe, CampaignState, LoopSettings};
use envbo::testbed::*;

fn grid_slice_max(problem: &BenchmarkProblem, env: f64, points: usize) -> f64 {
    let (lo, hi) = (problem.domain.ctrl_lower()[0], problem.domain.ctrl_upper()[0]);
    (0..points)
        .map(|k| problem.eval(&problem.domain.embed(&[lo + (hi - lo) * k as f64 / (points - 1) as f64], &[env])))
        .fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn levy_optimum_slice() {
    let p = BenchmarkProblem::levy();
    let (x, v) = truth_conditional_max(&p, &[1.0], 0).unwrap();
    assert!(v.abs() < 1e-12);
    assert!((x[0] - 1.0).abs() < 1e-4);
}

#[test]
fn levy_slices_agree_with_dense_grid() {
    let p = BenchmarkProblem::levy();
    let mut r = common::rng(11);
    for k in 0..20 {
        let env = r.random_range(-10.0..10.0);
        let grid = grid_slice_max(&p, env, 200_001);
        let ascent = maximize_with(|x| p.eval(x), &p.domain, &[env], &ConstraintSet::new(), k, &MultiStartOptions::default()).unwrap();
        assert!((ascent.value - grid).abs() <= 1e-3, "env {env}: {} vs {grid}", ascent.value);
        let (_, truth) = truth_conditional_max(&p, &[env], k).unwrap();
        assert!((truth - grid).abs() <= 1e-3);
    }
}

#[test]
fn hartmann_optimum_slice() {
    let p = BenchmarkProblem::hartmann(1).unwrap();
    let (_, v) = truth_conditional_max(&p, &[0.66], 0).unwrap();
    assert!(v >= 3.31, "{v}");
}

#[test]
fn mann_whitney_examples() {
    let a: Vec<f64> = (1..=10).map(f64::from).collect();
    assert!(mann_whitney_u(&a, &a).unwrap().p >= 0.99);
    let b: Vec<f64> = (11..=20).map(f64::from).collect();
    let t = mann_whitney_u(&a, &b).unwrap();
    assert_eq!(t.u, 0.0);
    assert!(t.p < 0.01);
}

#[test]
fn mann_whitney_matches_enumeration() {
    let gap = common::mann_whitney_max_gap(300);
    assert!(gap <= 0.02, "{gap}");
}

#[test]
fn mann_whitney_with_ties_is_close_to_enumeration() {
    let a = [1.0, 2.0, 2.0, 3.0, 5.0, 5.0];
    let b = [2.0, 4.0, 5.0, 6.0, 7.0, 7.0, 8.0];
    let p = mann_whitney_u(&a, &b).unwrap().p;
    let exact = common::enumerated_mann_whitney_p(&a, &b);
    assert!((p - exact).abs() < 0.05, "{p} vs {exact}");
}

#[test]
fn ard_flags_inert_input() {
    let domain = Domain::new(vec![0.0; 3], vec![1.0; 3], vec![2]).unwrap();
    let p = BenchmarkProblem::new("inert", |x: &[f64]| (3.0 * x[0]).sin() + x[2] * x[2], domain, vec![0.1]).unwrap();
    let r = ard_variability_probe(&p, 120, 4, &ProbeOptions::default()).unwrap();
    let l = &r.lengthscales;
    let mut others = [l[0], l[2]];
    others.sort_by(f64::total_cmp);
    let median = 0.5 * (others[0] + others[1]);
    assert!(l[1] > 2.0 * median, "{l:?}");
}

fn smooth_problem() -> BenchmarkProblem {
    let domain = Domain::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![1]).unwrap();
    BenchmarkProblem::new("smooth", |x: &[f64]| 2.0 - (x[0] - 0.3).powi(2) + 0.5 * x[1], domain, vec![0.1]).unwrap()
}

#[test]
fn dense_campaign_scores_near_zero() {
    let p = smooth_problem();
    let mut state = CampaignState::new(p.domain.clone(), LoopSettings::default(), 200, 1).unwrap();
    let design = envbo::design::maximin_lhs(150, 2, 5, 20).unwrap();
    for row in design.rows() {
        // Environmental values confined to [0.2, 0.8].
        let x = [row[0], 0.2 + 0.6 * row[1]];
        observe(&mut state, &x, p.eval(&x)).unwrap();
    }
    let report = evaluate_campaign(&state, &p, 3, &EvalOptions::default()).unwrap();
    assert!(report.final_mape <= 0.02, "{}", report.final_mape);
    let env: Vec<f64> = state.dataset.inputs.iter().map(|x| x[1]).collect();
    let lo = env.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = env.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(report.effective_lower, vec![lo]);
    assert_eq!(report.effective_upper, vec![hi]);
    assert!(report.test_points.iter().all(|t| t[0] >= lo && t[0] <= hi));
    assert_eq!(report.test_points.len(), 25);
    assert_eq!(report.checkpoints.len(), 15);
}

#[test]
fn mape_examples() {
    assert_eq!(mape(&[1.0, 1.0], &[2.0, 4.0]).unwrap(), 0.625);
    assert_eq!(mape(&[3.0, -2.0], &[3.0, -2.0]).unwrap(), 0.0);
    let a = mape(&[1.2, 3.1], &[1.0, 3.0]).unwrap();
    let b = mape(&[-6.0, -15.5], &[-5.0, -15.0]).unwrap();
    assert!((a - b).abs() < 1e-12);
    assert!(mape(&[1.0], &[0.0]).is_err());
}
