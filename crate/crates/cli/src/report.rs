//! Report files written to `<out>/<run-id>/`.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use ecomdo_core::energy::MassBreakdown;
use ecomdo_core::materials::AshbyIndices;
use ecomdo_core::optimizer::{Evaluation, RunResult, RunStatus, SweepResult};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Metadata {
    pub command: String,
    pub run_id: String,
    pub config_hash: String,
    pub timestamp: String,
    pub seed: u64,
    pub jobs: usize,
    pub version: String,
}

/// One optimization, without its history.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub index: usize,
    pub status: RunStatus,
    pub objective: Option<f64>,
    /// Absent when the analysis never produced constraint values.
    pub max_violation: Option<f64>,
    pub spar_material: Option<String>,
    pub skin_material: Option<String>,
    pub phase_iterations: Vec<usize>,
    pub history_len: usize,
}

impl RunSummary {
    pub fn new(index: usize, r: &RunResult) -> Self {
        Self {
            index,
            status: r.status,
            objective: r.objective(),
            max_violation: r.max_violation.is_finite().then_some(r.max_violation),
            spar_material: r.spar_material.clone(),
            skin_material: r.skin_material.clone(),
            phase_iterations: r.phase_iterations.clone(),
            history_len: r.history.len(),
        }
    }
}

/// Mass fractions of the total.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MassShares {
    pub wing: f64,
    pub batteries: f64,
    pub solar_panels: f64,
    pub propulsion: f64,
    pub mppt: f64,
    pub fixed: f64,
    pub extra: f64,
}

impl MassShares {
    pub fn new(m: &MassBreakdown<f64>) -> Self {
        let f = |x: f64| x / m.total;
        Self {
            wing: f(m.wing),
            batteries: f(m.batteries),
            solar_panels: f(m.solar_panels),
            propulsion: f(m.propulsion),
            mppt: f(m.mppt),
            fixed: f(m.fixed),
            extra: f(m.extra),
        }
    }

    pub fn sum(&self) -> f64 {
        self.wing + self.batteries + self.solar_panels + self.propulsion + self.mppt + self.fixed + self.extra
    }
}

/// Reported optimum with the result of re-running the analysis on it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Optimum {
    pub run: usize,
    pub status: RunStatus,
    pub spar_material: Option<String>,
    pub skin_material: Option<String>,
    pub evaluation: Evaluation,
    pub mass_shares: MassShares,
    pub revalidated_objective: f64,
    pub revalidation_error: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IndexRow {
    pub name: String,
    pub density_kg_m3: f64,
    pub co2_kg_per_kg: f64,
    #[serde(flatten)]
    pub indices: AshbyIndices,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub metadata: Metadata,
    pub objective: String,
    pub runs: Vec<RunSummary>,
    pub best: Option<Optimum>,
    /// Best feasible objective after each completed run.
    pub best_so_far: Vec<Option<f64>>,
    pub sweep: Option<SweepResult>,
    pub flip_threshold: Option<f64>,
    pub indices: Vec<IndexRow>,
    pub diagnostic: Option<String>,
}

#[derive(Serialize)]
struct HistoryRow {
    run: usize,
    phase: usize,
    iteration: usize,
    objective: f64,
    max_violation: f64,
    spar_density: f64,
    skin_density: f64,
}

/// Write `report.json`, `history.csv`, the resolved configuration and, when
/// present, `sweep.csv` and `indices.csv`.
pub fn write_report(dir: &Path, report: &Report, runs: &[RunResult], config_toml: &str) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();

    let path = dir.join("report.json");
    fs::write(&path, serde_json::to_string_pretty(report)?)?;
    files.push(path);

    let path = dir.join("config.toml");
    fs::write(&path, config_toml)?;
    files.push(path);

    if !runs.is_empty() {
        let path = dir.join("history.csv");
        let mut w = csv::Writer::from_path(&path)?;
        for (k, r) in runs.iter().enumerate() {
            for h in &r.history {
                w.serialize(HistoryRow {
                    run: k,
                    phase: h.phase,
                    iteration: h.iteration,
                    objective: h.objective,
                    max_violation: h.max_violation,
                    spar_density: h.spar_density,
                    skin_density: h.skin_density,
                })?;
            }
        }
        w.flush()?;
        files.push(path);
    }

    if let Some(s) = &report.sweep {
        let path = dir.join("sweep.csv");
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["ratio", "spar_material", "skin_material", "objective"])?;
        for p in &s.points {
            w.write_record([
                p.ratio.to_string(),
                p.spar_material.clone().unwrap_or_default(),
                p.skin_material.clone().unwrap_or_default(),
                p.objective.to_string(),
            ])?;
        }
        w.flush()?;
        files.push(path);
    }

    if !report.indices.is_empty() {
        let path = dir.join("indices.csv");
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["name", "density_kg_m3", "co2_kg_per_kg", "buckling", "strength"])?;
        for r in &report.indices {
            w.write_record([
                r.name.clone(),
                r.density_kg_m3.to_string(),
                r.co2_kg_per_kg.to_string(),
                r.indices.buckling.to_string(),
                r.indices.strength.to_string(),
            ])?;
        }
        w.flush()?;
        files.push(path);
    }
    Ok(files)
}
