//! Experiment orchestration and result emission.
//!
//! Each (grid kind, N_g) combination produces one JSON `ResultRecord` plus an
//! appended row in `summary.csv`. Records are written atomically (temp file +
//! rename) and floats are printed with 17 significant digits so every value
//! round-trips exactly.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use clkan::data::{gen_formula, Dataset};
use clkan::network::param_count;
use clkan::training::cross_validate;
use clkan::{CrossValResult, GridKind};

use crate::config::ExperimentConfig;

/// Environment variable overriding the output root directory.
pub const OUT_DIR_ENV: &str = "CLKAN_OUT_DIR";

/// One completed run; self-describing and re-runnable from the `config` and
/// `grid` fields alone.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultRecord {
    pub config: ExperimentConfig,
    pub grid_kind: GridKind,
    pub grid_points: usize,
    pub param_count: usize,
    pub result: CrossValResult,
    pub wall_clock_s: f64,
    pub library_version: String,
}

/// Writes `bytes` to `path` via a temp file in the same directory plus an
/// atomic rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp-{}",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("out"),
        std::process::id()
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Output directory: CLI flag wins, then the env var, then the config, then
/// `./results`.
pub fn output_dir(config: &ExperimentConfig, cli_override: Option<&Path>) -> PathBuf {
    if let Some(p) = cli_override {
        return p.to_path_buf();
    }
    if let Ok(p) = std::env::var(OUT_DIR_ENV) {
        if !p.is_empty() {
            return PathBuf::from(p);
        }
    }
    config
        .experiment
        .output_dir
        .as_deref()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("results"))
}

fn fmt17(x: f64) -> String {
    format!("{x:.17e}")
}

const CSV_HEADER: &str = "name,task,signature,widths,grid_kind,grid_points,rbf,norm,\
                          param_count,test_mse_mean,test_mse_std,test_mae_mean,test_mae_std,\
                          best_fold_mse,wall_clock_s";

fn csv_row(record: &ResultRecord) -> String {
    let c = &record.config;
    let [p, q, r] = c.model.signature;
    let widths = c
        .model
        .widths
        .iter()
        .map(|w| w.to_string())
        .collect::<Vec<_>>()
        .join("-");
    let best = record
        .result
        .folds
        .iter()
        .map(|f| f.test_mse)
        .fold(f64::INFINITY, f64::min);
    let mut row = String::new();
    write!(
        row,
        "{},{},{}-{}-{},{},{:?},{},{:?},{:?},{},{},{},{},{},{},{}",
        c.experiment.name,
        c.experiment.task,
        p,
        q,
        r,
        widths,
        record.grid_kind,
        record.grid_points,
        c.model.rbf,
        c.model.norm,
        record.param_count,
        fmt17(record.result.test_mse_mean),
        fmt17(record.result.test_mse_std),
        fmt17(record.result.test_mae_mean),
        fmt17(record.result.test_mae_std),
        fmt17(best),
        fmt17(record.wall_clock_s)
    )
    .unwrap();
    row
}

fn append_csv(dir: &Path, record: &ResultRecord) -> Result<()> {
    fs::create_dir_all(dir)?;
    let path = dir.join("summary.csv");
    let fresh = !path.exists();
    let mut f = fs::OpenOptions::new().create(true).append(true).open(&path)?;
    if fresh {
        writeln!(f, "{}", CSV_HEADER.split_whitespace().collect::<String>())?;
    }
    writeln!(f, "{}", csv_row(record))?;
    Ok(())
}

/// Generates data, cross-validates, and returns the record for one grid
/// combination without touching the file system.
pub fn run_one(
    config: &ExperimentConfig,
    kind: GridKind,
    points: usize,
) -> Result<ResultRecord> {
    let task = config.task()?;
    let sig = config.signature();
    let (n_train, n_test) = config.samples()?;
    let seed = config.experiment.data_seed;
    let train: Dataset = gen_formula(task, sig, n_train, seed.wrapping_add(1))?;
    let test: Dataset = gen_formula(task, sig, n_test, seed.wrapping_add(2))?;

    let (model_config, train_config) = config.resolve(kind, points);
    let np = param_count(&model_config)?;

    let t0 = Instant::now();
    let result = cross_validate(&model_config, &train_config, &train, &test)
        .with_context(|| format!("cross-validation failed for {kind:?}-{points}"))?;
    Ok(ResultRecord {
        config: config.clone(),
        grid_kind: kind,
        grid_points: points,
        param_count: np,
        result,
        wall_clock_s: t0.elapsed().as_secs_f64(),
        library_version: env!("CARGO_PKG_VERSION").to_string(),
    })
}

/// Runs every grid combination of the config, writing one JSON record each
/// plus a `summary.csv` row, and prints a one-line summary per run.
pub fn run(config: &ExperimentConfig, out_override: Option<&Path>) -> Result<Vec<ResultRecord>> {
    config.validate()?;
    let dir = output_dir(config, out_override);
    let mut records = Vec::new();
    for (kind, points) in config.grid_combinations() {
        let record = run_one(config, kind, points)?;
        let stem = format!(
            "{}_{}{}",
            config.experiment.name,
            match kind {
                GridKind::Full => "F",
                GridKind::Sobol => "S",
            },
            points
        );
        let json_path = dir.join(format!("{stem}.json"));
        write_atomic(&json_path, serde_json::to_string_pretty(&record)?.as_bytes())?;
        append_csv(&dir, &record)?;
        println!(
            "{stem}: N_p = {}, test MSE {:.6} +- {:.6} ({:.1}s) -> {}",
            record.param_count,
            record.result.test_mse_mean,
            record.result.test_mse_std,
            record.wall_clock_s,
            json_path.display()
        );
        records.push(record);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_is_17_significant_digits_and_round_trips() {
        for &x in &[0.1, 1.0 / 3.0, 2.049e-3, 1e17, f64::MIN_POSITIVE] {
            let s = fmt17(x);
            // 1 leading digit + 17 decimals = 18 significant, always >= 17
            assert!(s.contains('e'));
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
    }

    #[test]
    fn csv_header_and_row_have_same_field_count() {
        let header_fields = CSV_HEADER.split_whitespace().collect::<String>();
        assert_eq!(header_fields.split(',').count(), 15);
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.json");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "two");
        // no temp droppings left behind
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
