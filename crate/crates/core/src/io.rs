//! Trajectory directories: `summary.json`, `series.csv` and one
//! `mu_NNNNNN.json` per checkpoint (indexed by step).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward_solver::{Checkpoint, SimConfig, Trajectory};
use crate::measures::AtomicMeasure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CheckpointSummary {
    step: usize,
    t: f64,
    mass: f64,
    atoms: usize,
    error_bound: f64,
    file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Summary {
    config: SimConfig,
    ingredient_hash: String,
    checkpoints: Vec<CheckpointSummary>,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::InvalidParameter(format!("{}: {e}", path.display()))
}

pub fn measure_file_name(step: usize) -> String {
    format!("mu_{step:06}.json")
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn read_measure(path: &Path) -> Result<AtomicMeasure> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| io_err(path, e))
}

/// Write `traj` into `dir` (created if missing) and return the written paths.
pub fn save_trajectory(dir: &Path, traj: &Trajectory) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut written = Vec::with_capacity(traj.checkpoints.len() + 2);
    let mut rows = Vec::with_capacity(traj.checkpoints.len());
    for c in &traj.checkpoints {
        let file = measure_file_name(c.step);
        let path = dir.join(&file);
        write_json(&path, &c.measure)?;
        written.push(path);
        rows.push(CheckpointSummary {
            step: c.step,
            t: c.t,
            mass: c.mass,
            atoms: c.measure.len(),
            error_bound: c.error_bound,
            file,
        });
    }
    let summary = Summary {
        config: traj.config.clone(),
        ingredient_hash: traj.ingredient_hash.clone(),
        checkpoints: rows,
    };
    let path = dir.join("summary.json");
    write_json(&path, &summary)?;
    written.push(path);
    let path = dir.join("series.csv");
    fs::write(&path, traj.series_csv()).map_err(|e| io_err(&path, e))?;
    written.push(path);
    Ok(written)
}

pub fn load_trajectory(dir: &Path) -> Result<Trajectory> {
    let path = dir.join("summary.json");
    let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    let summary: Summary = serde_json::from_str(&text).map_err(|e| io_err(&path, e))?;
    if summary.checkpoints.is_empty() {
        return Err(io_err(&path, "no checkpoints"));
    }
    let checkpoints = summary
        .checkpoints
        .iter()
        .map(|row| {
            Ok(Checkpoint {
                step: row.step,
                t: row.t,
                measure: read_measure(&dir.join(&row.file))?,
                mass: row.mass,
                error_bound: row.error_bound,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        checkpoints,
        config: summary.config,
        ingredient_hash: summary.ingredient_hash,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward_solver::simulate;
    use crate::model_config::ModelIngredients;

    #[test]
    fn round_trip_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let ing = ModelIngredients::lotka(1.0, 0.5);
        let cfg = SimConfig {
            checkpoint_every: 7,
            ..SimConfig::new(0.01, 0.5)
        };
        let mu0 = AtomicMeasure::from_atoms([(0.1, 1.0 / 3.0), (2.0, 0.7)]).unwrap();
        let traj = simulate(&mu0, &ing, &cfg).unwrap();
        let files = save_trajectory(dir.path(), &traj).unwrap();
        assert_eq!(files.len(), traj.checkpoints.len() + 2);
        let back = load_trajectory(dir.path()).unwrap();
        assert_eq!(back, traj);
        assert!(load_trajectory(&dir.path().join("missing")).is_err());
    }
}
