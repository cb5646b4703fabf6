//! Static plot-data emission: turns result records into a CSV that plots MSE
//! (mean, std, best fold) against grid size per grid kind, ready for any
//! external plotting tool.

use std::path::Path;

use anyhow::{Context, Result};

use crate::runner::{write_atomic, ResultRecord};

pub fn plot(records: &[&Path], out: &Path) -> Result<()> {
    let mut rows: Vec<(String, usize, usize, f64, f64, f64)> = Vec::new();
    for path in records {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading record {}", path.display()))?;
        let record: ResultRecord = serde_json::from_str(&text)
            .with_context(|| format!("parsing record {}", path.display()))?;
        let best = record
            .result
            .folds
            .iter()
            .map(|f| f.test_mse)
            .fold(f64::INFINITY, f64::min);
        rows.push((
            format!("{:?}", record.grid_kind).to_lowercase(),
            record.grid_points,
            record.param_count,
            record.result.test_mse_mean,
            record.result.test_mse_std,
            best,
        ));
    }
    rows.sort_by(|a, b| (&a.0, a.1).cmp(&(&b.0, b.1)));

    let mut csv = String::from("grid_kind,grid_points,param_count,mse_mean,mse_std,mse_best\n");
    for (kind, points, np, mean, std, best) in rows {
        csv.push_str(&format!("{kind},{points},{np},{mean:.17e},{std:.17e},{best:.17e}\n"));
    }
    write_atomic(out, csv.as_bytes())?;
    println!("wrote plot data for {} record(s) to {}", records.len(), out.display());
    Ok(())
}
