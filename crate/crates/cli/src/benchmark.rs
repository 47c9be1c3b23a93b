use std::path::Path;

use anyhow::Result;
use rayon::prelude::*;
use serde::Serialize;

use envbo::testbed::{
    evaluate_campaign, mann_whitney_u, mean, replication_seed, run_method, Method, ReplicationResult,
};

use crate::config::{config_hash, BenchmarkConfig, Variant};
use crate::output::{output_dir, CsvOut, FORMAT_VERSION};
use crate::Failure;

#[derive(Serialize)]
struct CheckpointRow<'a> {
    format_version: u32,
    config_hash: &'a str,
    seed: u64,
    variant: &'a str,
    replication: usize,
    method: &'static str,
    evaluations: usize,
    mape: f64,
    effective_size: f64,
    is_final: bool,
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    format_version: u32,
    config_hash: &'a str,
    seed: u64,
    variant: &'a str,
    method: &'static str,
    replications: usize,
    mean_final_mape: f64,
    sd_final_mape: f64,
    median_final_mape: f64,
    mean_effective_size: f64,
    u_vs_random: Option<f64>,
    p_vs_random: Option<f64>,
}

pub struct Overrides<'a> {
    pub output: Option<&'a Path>,
    pub replications: Option<usize>,
    pub budget: Option<usize>,
}

pub fn run(mut cfg: BenchmarkConfig, ov: &Overrides) -> Result<(), Failure> {
    if let Some(r) = ov.replications {
        cfg.replications = r;
    }
    if let Some(b) = ov.budget {
        cfg.budget = b;
    }
    let variants = cfg.validate().map_err(Failure::Config)?;
    let methods = cfg.methods().map_err(Failure::Config)?;
    let hash = config_hash(&cfg).map_err(Failure::Config)?;
    let dir = output_dir(ov.output, cfg.output.as_deref());

    let mut checkpoints = CsvOut::create(&dir, &format!("{}-checkpoints.csv", cfg.name)).map_err(Failure::Runtime)?;
    let mut summary = CsvOut::create(&dir, &format!("{}-summary.csv", cfg.name)).map_err(Failure::Runtime)?;
    println!("config {} hash {hash}", cfg.name);
    let mut first_error = None;
    for variant in &variants {
        let (results, error) = run_variant(&cfg, variant, &methods);
        for r in &results {
            let last = r.report.checkpoints.len() - 1;
            for (k, &(evaluations, mape)) in r.report.checkpoints.iter().enumerate() {
                checkpoints
                    .row(&CheckpointRow {
                        format_version: FORMAT_VERSION,
                        config_hash: &hash,
                        seed: r.seed,
                        variant: &variant.label,
                        replication: r.replication,
                        method: r.method.name(),
                        evaluations,
                        mape,
                        effective_size: r.report.effective_size,
                        is_final: k == last,
                    })
                    .map_err(Failure::Runtime)?;
            }
        }
        checkpoints.flush().map_err(Failure::Runtime)?;
        if let Some(e) = error {
            first_error = Some(e.context(format!("variant {}", variant.label)));
            break;
        }
        for row in summarise(&cfg, &hash, &variant.label, &methods, &results) {
            println!(
                "{:<14} {:<12} mean final MAPE {:.4} (sd {:.4}){}",
                row.variant,
                row.method,
                row.mean_final_mape,
                row.sd_final_mape,
                row.p_vs_random.map(|p| format!(", p vs random {p:.3e}")).unwrap_or_default()
            );
            summary.row(&row).map_err(Failure::Runtime)?;
        }
        summary.flush().map_err(Failure::Runtime)?;
    }
    println!("wrote {} and {}", checkpoints.path.display(), summary.path.display());
    match first_error {
        Some(e) => Err(Failure::Runtime(e)),
        None => Ok(()),
    }
}

/// Runs every (replication, method) pair of one variant. Successful results
/// come back in replication-then-method order alongside the first error.
fn run_variant(cfg: &BenchmarkConfig, variant: &Variant, methods: &[Method]) -> (Vec<ReplicationResult>, Option<anyhow::Error>) {
    let jobs: Vec<(usize, Method)> = (0..cfg.replications)
        .flat_map(|r| methods.iter().map(move |&m| (r, m)))
        .collect();
    let outcomes: Vec<Result<ReplicationResult>> = jobs
        .par_iter()
        .map(|&(replication, method)| {
            let seed = replication_seed(cfg.seed, replication);
            let state = run_method(&variant.problem, method, &cfg.settings, cfg.budget, seed)?;
            let report = evaluate_campaign(&state, &variant.problem, seed, &cfg.evaluation)?;
            Ok(ReplicationResult {
                replication,
                method,
                seed,
                report,
            })
        })
        .collect();
    let mut results = Vec::new();
    let mut error = None;
    for o in outcomes {
        match o {
            Ok(r) => results.push(r),
            Err(e) if error.is_none() => error = Some(e),
            Err(_) => {}
        }
    }
    (results, error)
}

fn summarise<'a>(
    cfg: &BenchmarkConfig,
    hash: &'a str,
    variant: &'a str,
    methods: &[Method],
    results: &[ReplicationResult],
) -> Vec<SummaryRow<'a>> {
    let finals = |m: Method| -> Vec<f64> { results.iter().filter(|r| r.method == m).map(|r| r.report.final_mape).collect() };
    let random = methods.contains(&Method::Random).then(|| finals(Method::Random));
    methods
        .iter()
        .map(|&m| {
            let v = finals(m);
            let mu = mean(&v);
            let sd = if v.len() > 1 {
                (v.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
            } else {
                0.0
            };
            let mut sorted = v.clone();
            sorted.sort_by(f64::total_cmp);
            let n = sorted.len();
            let median = if n % 2 == 1 { sorted[n / 2] } else { 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]) };
            let sizes: Vec<f64> = results.iter().filter(|r| r.method == m).map(|r| r.report.effective_size).collect();
            let test = random
                .as_ref()
                .filter(|_| m != Method::Random)
                .and_then(|rv| mann_whitney_u(&v, rv).ok());
            SummaryRow {
                format_version: FORMAT_VERSION,
                config_hash: hash,
                seed: cfg.seed,
                variant,
                method: m.name(),
                replications: n,
                mean_final_mape: mu,
                sd_final_mape: sd,
                median_final_mape: median,
                mean_effective_size: mean(&sizes),
                u_vs_random: test.as_ref().map(|t| t.u),
                p_vs_random: test.map(|t| t.p),
            }
        })
        .collect()
}
