//! Paired detector-off / detector-on batches over a configuration matrix.
//!
//! Each seed of a scenario (layout, student count) gets one placement seed
//! and one behaviour seed, shared by the detector-off and detector-on runs so
//! both start from identical positions. Runtimes are horizons over the same
//! trajectories: the 7-minute result of a seed is the 6-minute run continued
//! for another minute.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::behavior::BehaviorParams;
use crate::engine::{
    run, run_horizons, EngineError, RunOutcome, SimConfig, Speeds, DEFAULT_OFFICER_ENTRY,
};
use crate::layout::FloorLayout;
use crate::maps::{self, LoadError};

pub const REFERENCE_LAYOUTS: [&str; 3] = ["structure1", "gyte_floor1", "sulb_floor3"];
pub const REFERENCE_STUDENT_COUNTS: [usize; 4] = [50, 100, 150, 200];
pub const REFERENCE_RUNTIMES: [u32; 4] = [360, 420, 480, 540];
pub const DEFAULT_SEEDS_PER_CELL: usize = 100;
pub const DEFAULT_BASE_SEED: u64 = 2024;

/// Everything in a run configuration that is not layout, population, runtime or seed.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSettings {
    pub params: BehaviorParams,
    pub tick: u32,
    pub officer_entry: u32,
    pub speeds: Speeds,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            params: BehaviorParams::default(),
            tick: 1,
            officer_entry: DEFAULT_OFFICER_ENTRY,
            speeds: Speeds::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatrixSpec {
    pub layouts: Vec<String>,
    pub student_counts: Vec<usize>,
    pub runtimes: Vec<u32>,
    pub seeds_per_cell: usize,
    pub base_seed: u64,
    pub settings: RunSettings,
}

impl MatrixSpec {
    /// Three layouts × four populations × four runtimes = 48 cells.
    pub fn reference_preset(seeds_per_cell: usize) -> Self {
        MatrixSpec {
            layouts: REFERENCE_LAYOUTS.iter().map(|s| s.to_string()).collect(),
            student_counts: REFERENCE_STUDENT_COUNTS.to_vec(),
            runtimes: REFERENCE_RUNTIMES.to_vec(),
            seeds_per_cell,
            base_seed: DEFAULT_BASE_SEED,
            settings: RunSettings::default(),
        }
    }

    pub fn cell_count(&self) -> usize {
        self.layouts.len() * self.student_counts.len() * self.runtimes.len()
    }

    /// Parses the `key = value` spec format. Blank lines and `#` comments
    /// are ignored; list values are comma separated.
    pub fn parse(text: &str) -> Result<Self, SpecError> {
        let mut spec = MatrixSpec {
            layouts: Vec::new(),
            student_counts: Vec::new(),
            runtimes: Vec::new(),
            seeds_per_cell: DEFAULT_SEEDS_PER_CELL,
            base_seed: DEFAULT_BASE_SEED,
            settings: RunSettings::default(),
        };
        let mut seen = HashSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |message: String| SpecError { line, message };
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got {content:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(err(format!("duplicate key `{key}`")));
            }
            let num = |v: &str| -> Result<f64, SpecError> {
                v.parse::<f64>()
                    .map_err(|_| err(format!("`{key}`: {v:?} is not a number")))
            };
            let int = |v: &str| -> Result<u64, SpecError> {
                v.parse::<u64>()
                    .map_err(|_| err(format!("`{key}`: {v:?} is not a non-negative integer")))
            };
            let list = |v: &str| -> Vec<String> {
                v.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(str::to_string)
                    .collect()
            };
            let to_u32 = |v: u64| -> Result<u32, SpecError> {
                u32::try_from(v).map_err(|_| err(format!("`{key}`: {v} is too large")))
            };
            match key {
                "layouts" => spec.layouts = list(value),
                "student_counts" => {
                    spec.student_counts = list(value)
                        .iter()
                        .map(|v| int(v).map(|n| n as usize))
                        .collect::<Result<_, _>>()?
                }
                "runtimes" => {
                    spec.runtimes = list(value)
                        .iter()
                        .map(|v| int(v).and_then(to_u32))
                        .collect::<Result<_, _>>()?
                }
                "seeds_per_cell" => spec.seeds_per_cell = int(value)? as usize,
                "base_seed" => spec.base_seed = int(value)?,
                "alpha" => spec.settings.params.alpha = num(value)?,
                "beta" => spec.settings.params.beta = num(value)?,
                "gamma" => spec.settings.params.gamma = num(value)?,
                "gamma_officer" => spec.settings.params.gamma_officer = num(value)?,
                "sigma" => spec.settings.params.sigma = num(value)?,
                "epsilon" => spec.settings.params.epsilon = num(value)?,
                "tick" => spec.settings.tick = to_u32(int(value)?)?,
                "officer_entry" => spec.settings.officer_entry = to_u32(int(value)?)?,
                "speed_student" => spec.settings.speeds.student = to_u32(int(value)?)?,
                "speed_shooter" => spec.settings.speeds.shooter = to_u32(int(value)?)?,
                "speed_officer" => spec.settings.speeds.officer = to_u32(int(value)?)?,
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }
        for required in ["layouts", "student_counts", "runtimes"] {
            if !seen.contains(required) {
                return Err(SpecError {
                    line: text.lines().count(),
                    message: format!("missing required key `{required}`"),
                });
            }
        }
        spec.validate().map_err(|message| SpecError {
            line: text.lines().count(),
            message,
        })?;
        Ok(spec)
    }

    fn validate(&self) -> Result<(), String> {
        if self.seeds_per_cell == 0 {
            return Err("seeds_per_cell must be at least 1".into());
        }
        if self.student_counts.contains(&0) {
            return Err("student counts must be positive".into());
        }
        if self.settings.tick == 0 {
            return Err("tick must be positive".into());
        }
        self.settings.params.validate().map_err(|e| e.to_string())?;
        let dup = |v: Vec<String>| {
            let mut seen = HashSet::new();
            v.into_iter().find(|x| !seen.insert(x.clone()))
        };
        if let Some(d) = dup(self.layouts.clone()) {
            return Err(format!("layout {d} listed twice"));
        }
        if let Some(d) = dup(self.student_counts.iter().map(|n| n.to_string()).collect()) {
            return Err(format!("student count {d} listed twice"));
        }
        if let Some(d) = dup(self.runtimes.iter().map(|n| n.to_string()).collect()) {
            return Err(format!("runtime {d} listed twice"));
        }
        Ok(())
    }

    /// Canonical text form; `parse(to_text())` reproduces the spec.
    pub fn to_text(&self) -> String {
        let join = |v: Vec<String>| v.join(", ");
        let p = &self.settings.params;
        let mut out = String::new();
        let _ = writeln!(out, "layouts = {}", join(self.layouts.clone()));
        let _ = writeln!(
            out,
            "student_counts = {}",
            join(self.student_counts.iter().map(|n| n.to_string()).collect())
        );
        let _ = writeln!(
            out,
            "runtimes = {}",
            join(self.runtimes.iter().map(|n| n.to_string()).collect())
        );
        let _ = writeln!(out, "seeds_per_cell = {}", self.seeds_per_cell);
        let _ = writeln!(out, "base_seed = {}", self.base_seed);
        for (k, v) in [
            ("alpha", p.alpha),
            ("beta", p.beta),
            ("gamma", p.gamma),
            ("gamma_officer", p.gamma_officer),
            ("sigma", p.sigma),
            ("epsilon", p.epsilon),
        ] {
            let _ = writeln!(out, "{k} = {v:?}");
        }
        let _ = writeln!(out, "tick = {}", self.settings.tick);
        let _ = writeln!(out, "officer_entry = {}", self.settings.officer_entry);
        let _ = writeln!(out, "speed_student = {}", self.settings.speeds.student);
        let _ = writeln!(out, "speed_shooter = {}", self.settings.speeds.shooter);
        let _ = writeln!(out, "speed_officer = {}", self.settings.speeds.officer);
        out
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct SpecError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error("{layout}, {students} students: {source}")]
    Engine {
        layout: String,
        students: usize,
        #[source]
        source: EngineError,
    },
}

/// Seeds for one paired run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SeedPair {
    pub placement_seed: u64,
    pub seed: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn absorb(state: u64, value: u64) -> u64 {
    splitmix64(state ^ splitmix64(value))
}

/// Seeds for seed `seed_index` of the scenario (layout, student count).
/// Runtime is deliberately not an input: runtimes are horizons of one run.
pub fn derive_seeds(
    base_seed: u64,
    layout_index: usize,
    student_count: usize,
    seed_index: usize,
) -> SeedPair {
    let scenario = absorb(
        absorb(absorb(base_seed, layout_index as u64), student_count as u64),
        seed_index as u64,
    );
    SeedPair {
        placement_seed: absorb(scenario, 0x504C_4143_454D_454E),
        seed: absorb(scenario, 0x4245_4841_5649_4F52),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Stat {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub sd: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Stat::default();
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Stat { mean, sd }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeedOutcome {
    pub seed_index: usize,
    pub seeds: SeedPair,
    /// Result 1: no detection system.
    pub off: RunOutcome,
    /// Result 2: detection system installed.
    pub on: RunOutcome,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellResult {
    pub layout: String,
    pub student_count: usize,
    pub runtime: u32,
    pub off_casualty: Stat,
    pub off_evacuation: Stat,
    pub on_casualty: Stat,
    pub on_evacuation: Stat,
    /// Percentage points, on minus off; negative is an improvement.
    pub casualty_change: f64,
    /// Percentage points, on minus off; positive is an improvement.
    pub evacuation_efficiency_change: f64,
    pub outcomes: Vec<SeedOutcome>,
}

impl CellResult {
    pub fn seeds(&self) -> usize {
        self.outcomes.len()
    }

    fn from_outcomes(
        layout: &str,
        student_count: usize,
        runtime: u32,
        outcomes: Vec<SeedOutcome>,
    ) -> Self {
        let col =
            |f: &dyn Fn(&SeedOutcome) -> f64| Stat::of(&outcomes.iter().map(f).collect::<Vec<_>>());
        let off_casualty = col(&|o| o.off.casualty_pct);
        let off_evacuation = col(&|o| o.off.evacuation_pct);
        let on_casualty = col(&|o| o.on.casualty_pct);
        let on_evacuation = col(&|o| o.on.evacuation_pct);
        CellResult {
            layout: layout.to_string(),
            student_count,
            runtime,
            casualty_change: on_casualty.mean - off_casualty.mean,
            evacuation_efficiency_change: on_evacuation.mean - off_evacuation.mean,
            off_casualty,
            off_evacuation,
            on_casualty,
            on_evacuation,
            outcomes,
        }
    }
}

/// The two configurations of one paired run. They differ only in the detector flag.
pub fn paired_configs(
    layout: &Arc<FloorLayout>,
    student_count: usize,
    runtime: u32,
    seeds: SeedPair,
    settings: &RunSettings,
) -> (SimConfig, SimConfig) {
    let off = SimConfig {
        layout: Arc::clone(layout),
        student_count,
        runtime,
        tick: settings.tick,
        detector_enabled: false,
        officer_entry: settings.officer_entry,
        speeds: settings.speeds,
        params: settings.params,
        seed: seeds.seed,
        placement_seed: seeds.placement_seed,
    };
    let on = SimConfig {
        detector_enabled: true,
        ..off.clone()
    };
    (off, on)
}

/// Identifies a cell's scenario inside a matrix.
#[derive(Clone, Debug)]
pub struct CellSpec {
    pub layout: Arc<FloorLayout>,
    pub layout_index: usize,
    pub student_count: usize,
    pub runtime: u32,
}

/// Runs `seeds` paired runs of one cell.
pub fn run_cell(
    cell: &CellSpec,
    seeds: usize,
    base_seed: u64,
    settings: &RunSettings,
) -> Result<CellResult, EngineError> {
    let outcomes = (0..seeds)
        .into_par_iter()
        .map(|seed_index| {
            let pair = derive_seeds(base_seed, cell.layout_index, cell.student_count, seed_index);
            let (off, on) = paired_configs(
                &cell.layout,
                cell.student_count,
                cell.runtime,
                pair,
                settings,
            );
            Ok(SeedOutcome {
                seed_index,
                seeds: pair,
                off: run(&off)?.outcome,
                on: run(&on)?.outcome,
            })
        })
        .collect::<Result<Vec<_>, EngineError>>()?;
    Ok(CellResult::from_outcomes(
        cell.layout.name(),
        cell.student_count,
        cell.runtime,
        outcomes,
    ))
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayoutAverage {
    pub layout: String,
    pub cells: usize,
    pub mean_casualty_change: f64,
    pub mean_evacuation_change: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub spec: MatrixSpec,
    /// Hex SHA-256 of the spec and the layouts it resolved to.
    pub fingerprint: String,
    pub cells: Vec<CellResult>,
    pub layout_averages: Vec<LayoutAverage>,
}

pub fn layout_averages(cells: &[CellResult]) -> Vec<LayoutAverage> {
    let mut order: Vec<&str> = Vec::new();
    for c in cells {
        if !order.contains(&c.layout.as_str()) {
            order.push(&c.layout);
        }
    }
    order
        .into_iter()
        .map(|layout| {
            let mine: Vec<&CellResult> = cells.iter().filter(|c| c.layout == layout).collect();
            let n = mine.len() as f64;
            LayoutAverage {
                layout: layout.to_string(),
                cells: mine.len(),
                mean_casualty_change: mine.iter().map(|c| c.casualty_change).sum::<f64>() / n,
                mean_evacuation_change: mine
                    .iter()
                    .map(|c| c.evacuation_efficiency_change)
                    .sum::<f64>()
                    / n,
            }
        })
        .collect()
}

pub fn fingerprint(spec: &MatrixSpec, layouts: &[Arc<FloorLayout>]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(spec.to_text().as_bytes());
    for layout in layouts {
        hasher.update(layout.name().as_bytes());
        hasher.update(layout.to_map_string().as_bytes());
    }
    hex::encode(hasher.finalize())
}

/// Resolves and runs every cell. Layout names resolve to bundled maps or to
/// files relative to `base_dir`. Any failure aborts the whole report.
pub fn run_matrix(
    spec: &MatrixSpec,
    base_dir: Option<&Path>,
) -> Result<ExperimentReport, ExperimentError> {
    let layouts = spec
        .layouts
        .iter()
        .map(|name| maps::resolve(name, base_dir).map(Arc::new))
        .collect::<Result<Vec<_>, _>>()?;
    run_matrix_with(spec, &layouts)
}

/// Like [`run_matrix`] with layouts already loaded, in spec order.
pub fn run_matrix_with(
    spec: &MatrixSpec,
    layouts: &[Arc<FloorLayout>],
) -> Result<ExperimentReport, ExperimentError> {
    let scenarios: Vec<(usize, usize, usize)> = (0..layouts.len())
        .flat_map(|l| {
            spec.student_counts
                .iter()
                .flat_map(move |&n| (0..spec.seeds_per_cell).map(move |s| (l, n, s)))
        })
        .collect();

    let runtimes = &spec.runtimes;
    let results: Vec<(usize, usize, usize, Vec<SeedOutcome>)> = if runtimes.is_empty() {
        Vec::new()
    } else {
        scenarios
            .par_iter()
            .map(|&(l, n, s)| {
                let pair = derive_seeds(spec.base_seed, l, n, s);
                let (off, on) = paired_configs(&layouts[l], n, 0, pair, &spec.settings);
                let wrap = |source| ExperimentError::Engine {
                    layout: layouts[l].name().to_string(),
                    students: n,
                    source,
                };
                let off = run_horizons(&off, runtimes).map_err(wrap)?;
                let on = run_horizons(&on, runtimes).map_err(wrap)?;
                let per_runtime = off
                    .into_iter()
                    .zip(on)
                    .map(|(off, on)| SeedOutcome {
                        seed_index: s,
                        seeds: pair,
                        off,
                        on,
                    })
                    .collect();
                Ok((l, n, s, per_runtime))
            })
            .collect::<Result<_, ExperimentError>>()?
    };

    // merge in canonical order: layout, student count, runtime, seed
    let mut cells = Vec::with_capacity(spec.cell_count());
    let mut cursor = results.into_iter().peekable();
    for (l, layout) in layouts.iter().enumerate() {
        for &n in &spec.student_counts {
            let mut by_runtime: Vec<Vec<SeedOutcome>> = vec![Vec::new(); runtimes.len()];
            while let Some((_, _, _, per_runtime)) =
                cursor.next_if(|(rl, rn, _, _)| *rl == l && *rn == n)
            {
                for (r, o) in per_runtime.into_iter().enumerate() {
                    by_runtime[r].push(o);
                }
            }
            for (r, outcomes) in by_runtime.into_iter().enumerate() {
                cells.push(CellResult::from_outcomes(
                    layout.name(),
                    n,
                    runtimes[r],
                    outcomes,
                ));
            }
        }
    }

    Ok(ExperimentReport {
        spec: spec.clone(),
        fingerprint: fingerprint(spec, layouts),
        layout_averages: layout_averages(&cells),
        cells,
    })
}
