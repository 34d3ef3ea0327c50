//! Scenario × variant benchmark with per-scenario and averaged tables.

use std::path::Path;

use rayon::prelude::*;

use crate::competency::CompetencyEstimator;
use crate::error::{config, Result};
use crate::planner::PlannerVariant;
use crate::world::TerrainPalette;

use super::config::{RunConfig, Scenario};
use super::episode::{run_episode, write_episodes_csv, EpisodeResult, Outcome};

const BUILTIN: [&str; 5] = [
    include_str!("../../scenarios/scenario_1.ini"),
    include_str!("../../scenarios/scenario_2.ini"),
    include_str!("../../scenarios/scenario_3.ini"),
    include_str!("../../scenarios/scenario_4.ini"),
    include_str!("../../scenarios/scenario_5.ini"),
];

/// The five bundled scenario analogs, ordered by id.
pub fn builtin_scenarios(palette: &TerrainPalette) -> Result<Vec<Scenario>> {
    BUILTIN.iter().map(|t| Scenario::from_ini_str(t, palette)).collect()
}

/// Every `*.ini` file in `dir`, ordered by scenario id.
pub fn load_scenario_dir(dir: impl AsRef<Path>, palette: &TerrainPalette) -> Result<Vec<Scenario>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir.as_ref())? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "ini") {
            out.push(Scenario::from_file(&path, palette)?);
        }
    }
    if out.is_empty() {
        return Err(config(format!("no scenario files in {}", dir.as_ref().display())));
    }
    out.sort_by_key(|s| s.id);
    Ok(out)
}

/// Scenarios with the requested ids, in request order.
pub fn select_scenarios(all: &[Scenario], ids: &[usize]) -> Result<Vec<Scenario>> {
    ids.iter()
        .map(|id| {
            all.iter()
                .find(|s| s.id == *id)
                .cloned()
                .ok_or_else(|| config(format!("scenario {id} is not defined")))
        })
        .collect()
}

/// Aggregate of one (variant, scenario) cell, or of a variant across
/// scenarios when `scenario_id` is `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellStats {
    pub variant: PlannerVariant,
    pub scenario_id: Option<usize>,
    pub trials: usize,
    /// Percentages.
    pub success_rate: f64,
    pub timeout_rate: f64,
    pub collision_rate: f64,
    /// Over all trials; timeouts count at the limit.
    pub mean_nav_time: f64,
    /// Over successful trials only; `None` when none succeeded.
    pub mean_path_length: Option<f64>,
}

impl CellStats {
    pub fn from_results(variant: PlannerVariant, scenario_id: Option<usize>, results: &[&EpisodeResult]) -> Self {
        let n = results.len();
        let pct = |k: usize| if n == 0 { 0.0 } else { 100.0 * k as f64 / n as f64 };
        let successes: Vec<&&EpisodeResult> = results.iter().filter(|r| r.outcome == Outcome::Success).collect();
        let collisions = results.iter().filter(|r| r.collided).count();
        Self {
            variant,
            scenario_id,
            trials: n,
            success_rate: pct(successes.len()),
            timeout_rate: pct(n - successes.len()),
            collision_rate: pct(collisions),
            mean_nav_time: if n == 0 { f64::NAN } else { results.iter().map(|r| r.nav_time).sum::<f64>() / n as f64 },
            mean_path_length: (!successes.is_empty())
                .then(|| successes.iter().map(|r| r.path_length).sum::<f64>() / successes.len() as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkTable {
    pub per_scenario: Vec<CellStats>,
    /// Pooled over all scenarios, one row per variant.
    pub averaged: Vec<CellStats>,
}

impl BenchmarkTable {
    pub fn from_results(results: &[EpisodeResult], variants: &[PlannerVariant], scenario_ids: &[usize]) -> Self {
        let mut per_scenario = Vec::new();
        for &sid in scenario_ids {
            for &v in variants {
                let cell: Vec<&EpisodeResult> = results.iter().filter(|r| r.variant == v && r.scenario_id == sid).collect();
                per_scenario.push(CellStats::from_results(v, Some(sid), &cell));
            }
        }
        let averaged = variants
            .iter()
            .map(|&v| {
                let all: Vec<&EpisodeResult> = results.iter().filter(|r| r.variant == v).collect();
                CellStats::from_results(v, None, &all)
            })
            .collect();
        Self { per_scenario, averaged }
    }

    pub fn cell(&self, variant: PlannerVariant, scenario_id: usize) -> Option<&CellStats> {
        self.per_scenario.iter().find(|c| c.variant == variant && c.scenario_id == Some(scenario_id))
    }

    pub fn averaged_for(&self, variant: PlannerVariant) -> Option<&CellStats> {
        self.averaged.iter().find(|c| c.variant == variant)
    }

    /// Writes `scenario_<id>.csv` per scenario and `summary.csv`.
    pub fn write_csvs(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let mut ids: Vec<usize> = self.per_scenario.iter().filter_map(|c| c.scenario_id).collect();
        ids.dedup();
        for id in ids {
            let rows: Vec<&CellStats> = self.per_scenario.iter().filter(|c| c.scenario_id == Some(id)).collect();
            write_table(&rows, dir.join(format!("scenario_{id}.csv")))?;
        }
        write_table(&self.averaged.iter().collect::<Vec<_>>(), dir.join("summary.csv"))
    }

    /// Plain-text rendering of the averaged table.
    pub fn summary_text(&self) -> String {
        let mut s = format!(
            "{:<20} {:>8} {:>8} {:>10} {:>10} {:>10}\n",
            "variant", "success%", "timeout%", "collision%", "time_s", "length_m"
        );
        for c in &self.averaged {
            s.push_str(&format!(
                "{:<20} {:>8.1} {:>8.1} {:>10.1} {:>10.2} {:>10}\n",
                c.variant.name(),
                c.success_rate,
                c.timeout_rate,
                c.collision_rate,
                c.mean_nav_time,
                c.mean_path_length.map_or("--".to_string(), |v| format!("{v:.2}"))
            ));
        }
        s
    }
}

fn write_table(rows: &[&CellStats], path: impl AsRef<Path>) -> Result<()> {
    let mut wr = csv::Writer::from_path(path)?;
    wr.write_record([
        "variant",
        "scenario",
        "trials",
        "success_rate",
        "timeout_rate",
        "collision_rate",
        "mean_nav_time",
        "mean_path_length",
    ])?;
    for c in rows {
        wr.write_record([
            c.variant.name().to_string(),
            c.scenario_id.map_or("all".to_string(), |i| i.to_string()),
            c.trials.to_string(),
            format!("{:.1}", c.success_rate),
            format!("{:.1}", c.timeout_rate),
            format!("{:.1}", c.collision_rate),
            format!("{:.2}", c.mean_nav_time),
            c.mean_path_length.map_or("--".to_string(), |v| format!("{v:.3}")),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

/// Seed of trial `i`; shared by all variants so cells are paired.
pub fn trial_seed(base_seed: u64, trial: usize) -> u64 {
    base_seed.wrapping_mul(1_000).wrapping_add(trial as u64)
}

/// Runs every (scenario, variant, trial) episode; results come back in
/// scenario, variant, trial order regardless of scheduling.
pub fn run_benchmark(
    scenarios: &[Scenario],
    variants: &[PlannerVariant],
    estimator: Option<&CompetencyEstimator>,
    cfg: &RunConfig,
    trials_per_cell: usize,
    base_seed: u64,
) -> Result<(BenchmarkTable, Vec<EpisodeResult>)> {
    if scenarios.is_empty() || variants.is_empty() || trials_per_cell == 0 {
        return Err(config("benchmark needs scenarios, variants and at least one trial"));
    }
    let jobs: Vec<(usize, PlannerVariant, usize)> = (0..scenarios.len())
        .flat_map(|s| variants.iter().flat_map(move |&v| (0..trials_per_cell).map(move |t| (s, v, t))))
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(s, v, t)| run_episode(&scenarios[s], v, estimator, cfg, trial_seed(base_seed, t)))
        .collect::<Result<Vec<_>>>()?;
    let ids: Vec<usize> = scenarios.iter().map(|s| s.id).collect();
    Ok((BenchmarkTable::from_results(&results, variants, &ids), results))
}

/// Writes the tables plus `episodes.csv` with every raw result.
pub fn write_benchmark(table: &BenchmarkTable, results: &[EpisodeResult], dir: impl AsRef<Path>) -> Result<()> {
    table.write_csvs(dir.as_ref())?;
    write_episodes_csv(results, dir.as_ref().join("episodes.csv"))
}
