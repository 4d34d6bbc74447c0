//! Executes a resolved `ExperimentSpec`: one strided sampler run per method
//! block, CSV trajectories, a JSON manifest, and an optional SVG overlay.
//! All file I/O lives here; the sampler crate never touches the filesystem.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use adavol::samplers::{run_strided, RunError, TrajectoryRecord};
use serde::Serialize;

use crate::config::ExperimentSpec;
use crate::svg;
use crate::CliError;

#[derive(Serialize)]
struct Manifest<'a> {
    name: &'a str,
    version: &'static str,
    /// Fully resolved spec as TOML; parsing it back reproduces this run.
    resolved_config: String,
    total_wall_clock_seconds: f64,
    methods: BTreeMap<&'a str, MethodReport>,
}

#[derive(Serialize)]
struct MethodReport {
    csv: String,
    seed: u64,
    iterations_requested: u64,
    records_written: usize,
    wall_clock_seconds: f64,
    diverged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    final_min_objective: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    final_mean_objective: Option<f64>,
}

const CSV_HEADER: &str = "iteration,min_objective,mean_objective,threshold,delta_hat\n";

/// 17 significant digits: a lossless f64 round trip, so re-running a config
/// yields byte-identical CSVs.
fn csv_rows(records: &[TrajectoryRecord]) -> String {
    let mut out = String::with_capacity(CSV_HEADER.len() + records.len() * 110);
    out.push_str(CSV_HEADER);
    for r in records {
        writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.iteration, r.min_objective, r.mean_objective, r.threshold, r.delta_hat
        )
        .expect("string write");
    }
    out
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents)
        .map_err(|e| CliError::Runtime(format!("writing {}: {e}", path.display())))
}

/// Runs every method block sequentially. A diverged sampler keeps its
/// partial CSV and manifest entry, the remaining methods still run, and the
/// whole command reports failure.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<(), CliError> {
    let objective = spec
        .objective
        .build()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let out_dir = spec.output_dir.as_deref().expect("resolved spec");
    fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Runtime(format!("creating {}: {e}", out_dir.display())))?;

    let total_start = Instant::now();
    let mut methods = BTreeMap::new();
    let mut series: Vec<(String, Vec<(u64, f64)>)> = Vec::new();
    let mut failures = Vec::new();

    for (name, method) in &spec.method {
        let cfg = method
            .to_sampler_config()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        let csv_name = format!("{name}.csv");
        log::info!("running method \"{name}\" ({} iterations)", cfg.iterations);
        let start = Instant::now();
        let (records, error) = match run_strided(&cfg, objective.as_ref(), spec.record_stride) {
            Ok(out) => (out.records, None),
            Err(RunError::Diverged { source, records }) => (records, Some(source.to_string())),
            Err(RunError::Config(e)) => return Err(CliError::Usage(e.to_string())),
        };
        let elapsed = start.elapsed().as_secs_f64();

        write_file(&out_dir.join(&csv_name), &csv_rows(&records))?;
        series.push((
            name.clone(),
            records.iter().map(|r| (r.iteration, r.mean_objective)).collect(),
        ));
        if let Some(msg) = &error {
            log::error!("method \"{name}\" diverged: {msg}");
            failures.push(format!("method \"{name}\": {msg}"));
        }
        methods.insert(
            name.as_str(),
            MethodReport {
                csv: csv_name,
                seed: method.seed,
                iterations_requested: method.iterations,
                records_written: records.len(),
                wall_clock_seconds: elapsed,
                diverged: error.is_some(),
                error,
                final_min_objective: records.last().map(|r| r.min_objective),
                final_mean_objective: records.last().map(|r| r.mean_objective),
            },
        );
    }

    let manifest = Manifest {
        name: &spec.name,
        version: env!("CARGO_PKG_VERSION"),
        resolved_config: toml::to_string_pretty(spec)
            .map_err(|e| CliError::Runtime(format!("serializing resolved config: {e}")))?,
        total_wall_clock_seconds: total_start.elapsed().as_secs_f64(),
        methods,
    };
    let manifest_json =
        serde_json::to_string_pretty(&manifest).expect("manifest serialization is infallible");
    write_file(&out_dir.join("manifest.json"), &manifest_json)?;

    if spec.emit_svg {
        write_file(
            &out_dir.join(format!("{}.svg", spec.name)),
            &svg::mean_objective_plot(&spec.name, &series),
        )?;
    }

    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Runtime(failures.join("; ")))
    }
}
