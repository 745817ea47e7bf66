//! Grid sweeps: run one subcommand at every point of a cartesian parameter
//! grid, writing one JSON file per point plus `index.csv`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use clap::Parser;
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::Value;

use crate::commands::{self, Cli, SweepArgs};
use crate::{CliError, Output};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub subcommand: String,
    pub grid: BTreeMap<String, Vec<Value>>,
    #[serde(default)]
    pub fixed: BTreeMap<String, Value>,
}

/// Outcome of a single grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub file: String,
    pub status: String,
    pub params: String,
}

fn render(value: &Value) -> String {
    match value {
        Value::String(s) => s.clone(),
        Value::Array(items) => items.iter().map(render).collect::<Vec<_>>().join(","),
        other => other.to_string(),
    }
}

fn sanitize(text: &str) -> String {
    text.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '+' | '-') {
                c
            } else {
                '-'
            }
        })
        .collect()
}

/// Every combination of grid values, keys in sorted order.
pub fn expand(grid: &BTreeMap<String, Vec<Value>>) -> Vec<Vec<(String, Value)>> {
    let mut points = vec![Vec::new()];
    for (key, values) in grid {
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push((key.clone(), v.clone()));
                    q
                })
            })
            .collect();
    }
    points
}

pub fn point_name(subcommand: &str, point: &[(String, Value)]) -> String {
    let params: Vec<String> = point
        .iter()
        .map(|(k, v)| format!("{}={}", sanitize(k), sanitize(&render(v))))
        .collect();
    format!("{subcommand}_{}.json", params.join(","))
}

fn argv(subcommand: &str, fixed: &BTreeMap<String, Value>, point: &[(String, Value)]) -> Vec<String> {
    let mut args = vec!["qsl".to_string(), subcommand.to_string()];
    let pairs = fixed.iter().chain(point.iter().map(|(k, v)| (k, v)));
    for (key, value) in pairs {
        let flag = format!("--{}", key.trim_start_matches('-'));
        match value {
            Value::Bool(true) => args.push(flag),
            Value::Bool(false) | Value::Null => {}
            Value::Array(items) if !items.is_empty() && items.iter().all(Value::is_string) => {
                for item in items {
                    args.push(flag.clone());
                    args.push(render(item));
                }
            }
            other => args.push(format!("{flag}={}", render(other))),
        }
    }
    args
}

fn run_point(subcommand: &str, fixed: &BTreeMap<String, Value>, point: &[(String, Value)]) -> (String, Option<String>) {
    let cli = match Cli::try_parse_from(argv(subcommand, fixed, point)) {
        Ok(cli) => cli,
        Err(e) => return (format!("error: {}", e.kind()), None),
    };
    if let Some(path) = cli.out {
        return (format!("error: --out={} not allowed inside a sweep", path.display()), None);
    }
    match commands::run(cli.command) {
        Ok(Output { stdout, violation, files }) => {
            let mut status = match violation {
                Some(msg) => format!("violation: {msg}"),
                None => "ok".to_string(),
            };
            for (path, text) in files {
                if let Err(e) = fs::write(&path, text) {
                    status = format!("error: {e}");
                }
            }
            (status, Some(stdout))
        }
        Err(e) => (format!("error: {e}"), None),
    }
}

pub fn load_config(path: &Path) -> Result<SweepConfig, CliError> {
    let text = fs::read_to_string(path)?;
    let config: SweepConfig = serde_json::from_str(&text)?;
    if config.subcommand == "sweep" {
        return Err(CliError::Usage("a sweep cannot run another sweep".into()));
    }
    if config.grid.is_empty() || config.grid.values().any(Vec::is_empty) {
        return Err(CliError::Usage("sweep grid must list at least one value per parameter".into()));
    }
    Ok(config)
}

/// Runs every grid point and writes the outputs into `out_dir`.
pub fn execute(config: &SweepConfig, out_dir: &Path, jobs: usize) -> Result<Vec<PointResult>, CliError> {
    if jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    fs::create_dir_all(out_dir)?;
    let points = expand(&config.grid);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let outcomes: Vec<(String, Option<String>)> = pool.install(|| {
        points
            .par_iter()
            .map(|p| run_point(&config.subcommand, &config.fixed, p))
            .collect()
    });

    let mut results = Vec::with_capacity(points.len());
    for (point, (mut status, stdout)) in points.iter().zip(outcomes) {
        let file = point_name(&config.subcommand, point);
        if let Some(text) = stdout {
            if let Err(e) = fs::write(out_dir.join(&file), format!("{text}\n")) {
                status = format!("error: {e}");
            }
        }
        let params = point
            .iter()
            .map(|(k, v)| format!("{k}={}", render(v)))
            .collect::<Vec<_>>()
            .join(";");
        results.push(PointResult { file, status, params });
    }

    let mut index = csv::Writer::from_path(out_dir.join("index.csv"))?;
    index.write_record(["file", "status", "params"])?;
    for r in &results {
        index.write_record([&r.file, &r.status, &r.params])?;
    }
    index.flush()?;
    Ok(results)
}

pub fn run(args: SweepArgs) -> Result<Output, CliError> {
    let config = load_config(&args.config)?;
    let results = execute(&config, &args.out_dir, args.jobs)?;
    let failed = results.iter().filter(|r| r.status != "ok").count();
    let violations = results.iter().filter(|r| r.status.starts_with("violation")).count();
    Ok(Output {
        stdout: qsl_core::report::to_json(&serde_json::json!({
            "failed": failed,
            "index": args.out_dir.join("index.csv"),
            "points": results.len(),
            "subcommand": config.subcommand,
        }))?,
        violation: (violations > 0).then(|| format!("{violations} sweep points violated a bound")),
        ..Output::default()
    })
}
