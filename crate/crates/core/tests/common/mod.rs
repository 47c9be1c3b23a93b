//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use envbo::acquisition::{eval_ei, eval_log_ei};
use envbo::design::maximin_lhs;
use envbo::gp::{
    log_marginal_likelihood, log_marginal_likelihood_grad, Dataset, GpModel, Hyperparameters, InputScaling, KernelFamily,
    KernelSpec, OutputScaling,
};
use envbo::testbed::mann_whitney_u;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Matérn-5/2 written out directly.
pub fn matern52(x: &[f64], y: &[f64], ls: &[f64], sf2: f64) -> f64 {
    let r = x
        .iter()
        .zip(y)
        .enumerate()
        .map(|(k, (a, b))| ((a - b) / ls[k.min(ls.len() - 1)]).powi(2))
        .sum::<f64>()
        .sqrt();
    let s5 = 5f64.sqrt() * r;
    sf2 * (1.0 + s5 + 5.0 * r * r / 3.0) * (-s5).exp()
}

pub struct Instance {
    pub data: Dataset,
    pub hp: Hyperparameters,
}

/// Random dataset and hyperparameters with well-conditioned covariance.
pub fn random_instance(seed: u64) -> Instance {
    let mut r = rng(seed);
    let n = r.random_range(5..30);
    let d = r.random_range(1..5);
    let inputs: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| r.random::<f64>()).collect()).collect();
    let outputs: Vec<f64> = inputs.iter().map(|x| x.iter().map(|v| (4.0 * v).sin()).sum::<f64>() + r.random::<f64>()).collect();
    let ard = r.random_bool(0.5);
    let ls: Vec<f64> = (0..if ard { d } else { 1 }).map(|_| 0.1 + r.random::<f64>()).collect();
    let hp = Hyperparameters {
        mean_constant: r.random_range(-1.0..1.0),
        kernel: KernelSpec::new(KernelFamily::Matern52, ls, 0.5 + 2.0 * r.random::<f64>()).unwrap(),
        noise_variance: 1e-3 + 0.1 * r.random::<f64>(),
    };
    Instance {
        data: Dataset::new(inputs, outputs).unwrap(),
        hp,
    }
}

fn oracle_matrix(inst: &Instance, extra_diag: f64) -> DMatrix<f64> {
    let x = &inst.data.inputs;
    let n = x.len();
    let ls = &inst.hp.kernel.lengthscales;
    let sf2 = inst.hp.kernel.output_scale;
    DMatrix::from_fn(n, n, |i, j| matern52(&x[i], &x[j], ls, sf2) + if i == j { extra_diag } else { 0.0 })
}

/// LML through an LU factorisation, with the same initial jitter.
pub fn oracle_lml(inst: &Instance) -> f64 {
    let n = inst.data.len();
    let sf2 = inst.hp.kernel.output_scale;
    let noise = inst.hp.noise_variance;
    let jitter = 1e-8 * (sf2 + noise);
    let k = oracle_matrix(inst, noise + jitter);
    let r = DVector::from_iterator(n, inst.data.outputs.iter().map(|y| y - inst.hp.mean_constant));
    let lu = k.clone().lu();
    let alpha = lu.solve(&r).unwrap();
    let logdet = lu.determinant().ln();
    -0.5 * r.dot(&alpha) - 0.5 * logdet - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln()
}

/// Largest absolute difference between library and oracle LML over
/// `count` instances.
pub fn lml_max_error(count: u64) -> f64 {
    (0..count)
        .map(|s| {
            let inst = random_instance(100 + s);
            (log_marginal_likelihood(&inst.hp, &inst.data).unwrap() - oracle_lml(&inst)).abs()
        })
        .fold(0.0, f64::max)
}

/// Largest absolute difference of posterior mean and variance against the
/// dense solve, over `count` instances and 20 test inputs each.
pub fn posterior_max_error(count: u64) -> f64 {
    let mut worst = 0.0f64;
    for s in 0..count {
        let inst = random_instance(200 + s);
        let d = inst.data.dim();
        let model = GpModel::new(&inst.data, inst.hp.clone(), InputScaling::identity(d), OutputScaling::identity()).unwrap();
        let n = inst.data.len();
        let k = oracle_matrix(&inst, inst.hp.noise_variance + model.jitter());
        let lu = k.lu();
        let r = DVector::from_iterator(n, inst.data.outputs.iter().map(|y| y - inst.hp.mean_constant));
        let alpha = lu.solve(&r).unwrap();
        let mut g = rng(300 + s);
        for _ in 0..20 {
            let x: Vec<f64> = (0..d).map(|_| g.random_range(-0.2..1.2)).collect();
            let ls = &inst.hp.kernel.lengthscales;
            let sf2 = inst.hp.kernel.output_scale;
            let ks = DVector::from_iterator(n, inst.data.inputs.iter().map(|xi| matern52(&x, xi, ls, sf2)));
            let mean = inst.hp.mean_constant + ks.dot(&alpha);
            let var = sf2 - ks.dot(&lu.solve(&ks).unwrap());
            let (m, v) = model.predict(&x);
            worst = worst.max((m - mean).abs()).max((v - var.max(0.0)).abs());
        }
    }
    worst
}

/// Largest relative error of the analytic LML gradient against central
/// differences in log-parameter space, over `count` instances.
pub fn gradient_max_rel_error(count: u64) -> f64 {
    let mut worst = 0.0f64;
    for s in 0..count {
        let inst = random_instance(400 + s);
        let (_, g) = log_marginal_likelihood_grad(&inst.hp, &inst.data).unwrap();
        let p = inst.hp.to_log_params();
        for k in 0..p.len() {
            let h = 1e-5;
            let eval = |delta: f64| {
                let mut q = p.clone();
                q[k] += delta;
                log_marginal_likelihood(&Hyperparameters::from_log_params(KernelFamily::Matern52, &q), &inst.data).unwrap()
            };
            let fd = (eval(h) - eval(-h)) / (2.0 * h);
            worst = worst.max((g[k] - fd).abs() / fd.abs().max(1.0));
        }
    }
    worst
}

/// Largest relative error between `exp(LogEI)` and EI with `z` on
/// `[-1 + 1e-6, 6]`.
pub fn logei_max_rel_error(points: usize) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..points {
        let z = -1.0 + 1e-6 + (7.0 - 1e-6) * i as f64 / (points - 1) as f64;
        for sd in [0.01, 1.0, 37.0] {
            let y_best = 2.0;
            let mean = y_best + z * sd;
            let ei = eval_ei(mean, sd, y_best);
            let lei = eval_log_ei(mean, sd, y_best).unwrap().exp();
            worst = worst.max((lei - ei).abs() / ei);
        }
    }
    worst
}

/// Every dimension of the design hits each of the `n` strata exactly once.
pub fn is_stratified(n: usize, d: usize, seed: u64) -> bool {
    let design = maximin_lhs(n, d, seed, 20).unwrap();
    (0..d).all(|j| {
        let mut hits = vec![0usize; n];
        for row in design.rows() {
            let v = row[j];
            if !(0.0..1.0).contains(&v) {
                return false;
            }
            hits[(v * n as f64) as usize] += 1;
        }
        hits.iter().all(|&h| h == 1)
    })
}

/// Number of the `count` random `(n, d, seed)` triples whose design is not
/// stratified.
pub fn lhs_failures(count: u64) -> usize {
    let mut r = rng(500);
    (0..count)
        .filter(|_| {
            let n = r.random_range(1..60);
            let d = r.random_range(1..8);
            let seed = r.random::<u64>();
            !is_stratified(n, d, seed)
        })
        .count()
}

/// Two-sided p-value by enumerating every split of the pooled sample.
pub fn enumerated_mann_whitney_p(a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let n = pooled.len();
    let na = a.len();
    let u_of = |mask: u32| -> f64 {
        let mut u = 0.0;
        for i in 0..n {
            if mask & (1 << i) == 0 {
                continue;
            }
            for j in 0..n {
                if mask & (1 << j) != 0 {
                    continue;
                }
                u += if pooled[i] > pooled[j] {
                    1.0
                } else if pooled[i] == pooled[j] {
                    0.5
                } else {
                    0.0
                };
            }
        }
        u
    };
    let observed = u_of((1u32 << na) - 1);
    let center = (na * (n - na)) as f64 / 2.0;
    let dev = (observed - center).abs();
    let (mut hits, mut total) = (0u64, 0u64);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != na {
            continue;
        }
        total += 1;
        if (u_of(mask) - center).abs() >= dev - 1e-9 {
            hits += 1;
        }
    }
    hits as f64 / total as f64
}

/// Largest gap between the library p-value and enumeration over random
/// tie-free samples with sizes up to 8.
pub fn mann_whitney_max_gap(count: u64) -> f64 {
    let mut r = rng(600);
    (0..count)
        .map(|_| {
            let na = r.random_range(1..=8);
            let nb = r.random_range(1..=8);
            let shift = r.random_range(0.0..2.0);
            let a: Vec<f64> = (0..na).map(|_| r.random::<f64>() + shift).collect();
            let b: Vec<f64> = (0..nb).map(|_| r.random::<f64>()).collect();
            let p = mann_whitney_u(&a, &b).unwrap().p;
            (p - enumerated_mann_whitney_p(&a, &b)).abs()
        })
        .fold(0.0, f64::max)
}
