use std::path::Path;

use serde::Serialize;

use envbo::windfarm::{run_windfarm_experiment, DirectionResult, WindFarm};

use crate::config::{config_hash, WindfarmFile};
use crate::output::{output_dir, write_json, CsvOut, FORMAT_VERSION};
use crate::Failure;

#[derive(Serialize)]
struct ResultRow<'a> {
    format_version: u32,
    config_hash: &'a str,
    seed: u64,
    table: &'static str,
    method: &'static str,
    direction: f64,
    aep_gwh: f64,
    predicted_gwh: Option<f64>,
    evaluations: Option<usize>,
    feasible: bool,
}

#[derive(Serialize)]
struct Layouts<'a> {
    format_version: u32,
    config_hash: &'a str,
    seed: u64,
    min_spacing: f64,
    results: &'a [DirectionResult],
    grid: &'a [DirectionResult],
}

fn method_name(r: &DirectionResult) -> &'static str {
    match r.method {
        envbo::windfarm::WindMethod::Envbo => "envbo",
        envbo::windfarm::WindMethod::Bo => "bo",
        envbo::windfarm::WindMethod::DirectSearch => "direct-search",
    }
}

pub fn run(mut file: WindfarmFile, budget: Option<usize>, output: Option<&Path>) -> Result<(), Failure> {
    if let Some(b) = budget {
        file = file.scaled(b);
        file.name = format!("{}-budget{b}", file.name);
    }
    file.validate().map_err(Failure::Config)?;
    let hash = config_hash(&file).map_err(Failure::Config)?;
    let seed = file.experiment.seed;
    let dir = output_dir(output, file.output.as_deref());
    let farm = WindFarm::default();
    let report = run_windfarm_experiment(&farm, &file.experiment).map_err(|e| Failure::Runtime(e.into()))?;

    let runtime = Failure::Runtime;
    let mut csv = CsvOut::create(&dir, &format!("{}-results.csv", file.name)).map_err(runtime)?;
    let row = |table, r: &DirectionResult, evaluations| ResultRow {
        format_version: FORMAT_VERSION,
        config_hash: &hash,
        seed,
        table,
        method: method_name(r),
        direction: r.direction,
        aep_gwh: r.aep,
        predicted_gwh: r.predicted,
        evaluations,
        feasible: r.feasible,
    };
    for r in &report.results {
        csv.row(&row("comparison", r, Some(r.evaluations))).map_err(Failure::Runtime)?;
    }
    for (d, aep) in &report.random_baseline {
        csv.row(&ResultRow {
            format_version: FORMAT_VERSION,
            config_hash: &hash,
            seed,
            table: "baseline",
            method: "random-layout",
            direction: *d,
            aep_gwh: *aep,
            predicted_gwh: None,
            evaluations: None,
            feasible: true,
        })
        .map_err(Failure::Runtime)?;
    }
    for r in &report.grid {
        csv.row(&row("grid", r, None)).map_err(Failure::Runtime)?;
    }
    csv.flush().map_err(Failure::Runtime)?;
    let layouts = Layouts {
        format_version: FORMAT_VERSION,
        config_hash: &hash,
        seed,
        min_spacing: envbo::windfarm::MIN_SPACING,
        results: &report.results,
        grid: &report.grid,
    };
    let json = write_json(&dir, &format!("{}-layouts.json", file.name), &layouts).map_err(Failure::Runtime)?;

    println!("config {} hash {hash}", file.name);
    for r in &report.results {
        println!("{:<14} {:>6.1} deg  AEP {:.3} GWh  evaluations {}", method_name(r), r.direction, r.aep, r.evaluations);
    }
    for (d, aep) in &report.random_baseline {
        println!("{:<14} {:>6.1} deg  AEP {:.3} GWh", "random-layout", d, aep);
    }
    println!(
        "evaluations: envbo {}, bo {}, direct-search {}; {} grid layouts",
        report.envbo_evaluations,
        report.bo_evaluations,
        report.direct_evaluations,
        report.grid.len()
    );
    println!("wrote {} and {}", csv.path.display(), json.display());
    Ok(())
}
