//! Factory-count sweeps and sensitivity grids.
//!
//! Every `(F, trial)` cell is an independent simulation seeded with
//! [`trial_seed`]`(base_seed, F, trial)`, so cells can run in any order on any
//! number of threads and adding F values leaves existing cells untouched.
//! Results are joined in `(F, trial)` order before aggregation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit_ir::{static_profile, CircuitDag};
use crate::production::MechanismConfig;
use crate::rng::trial_seed;
use crate::scheduler::{c_static, simulate, SimConfig, SimError, SimResult, SimulationMode};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SweepError {
    #[error("invalid sweep: {0}")]
    Config(String),
    #[error("trial {trial} at F = {units} failed: {source}")]
    Trial {
        units: u32,
        trial: u32,
        #[source]
        source: SimError,
    },
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// `⌈gamma · t_prod⌉`.
pub fn f_naive(gamma: f64, t_prod: f64) -> u32 {
    if gamma <= 0.0 {
        return 0;
    }
    // Absorb rounding noise in products that are mathematically integral.
    (gamma * t_prod - 1e-9).ceil().max(0.0) as u32
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricStats {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single sample.
    pub stddev: f64,
    pub min: f64,
    pub max: f64,
}

impl MetricStats {
    pub fn of(xs: &[f64]) -> Option<Self> {
        if xs.is_empty() {
            return None;
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let stddev = if xs.len() > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(MetricStats {
            mean,
            stddev,
            min: xs.iter().copied().fold(f64::INFINITY, f64::min),
            max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }
}

/// The per-trial numbers a sweep keeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub cycles: u64,
    pub volume: u64,
    pub peak_demand: u32,
    pub fixups: u64,
    pub stalls: u64,
    pub injections: u64,
}

impl From<&SimResult> for TrialSummary {
    fn from(r: &SimResult) -> Self {
        TrialSummary {
            cycles: r.cycles,
            volume: r.volume,
            peak_demand: r.peak_demand,
            fixups: r.fixup_count,
            stalls: r.stall_total(),
            injections: r.injection_count,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub trials: usize,
    /// Set when only one trial was aggregated and the deviations are 0 by
    /// convention.
    pub single_sample: bool,
    pub cycles: MetricStats,
    pub volume: MetricStats,
    pub peak_demand: MetricStats,
    pub fixups: MetricStats,
    pub stalls: MetricStats,
    pub injections: MetricStats,
}

pub fn aggregate_trials(results: &[TrialSummary]) -> Result<Aggregate, SweepError> {
    if results.is_empty() {
        return Err(SweepError::Config("cannot aggregate zero trials".into()));
    }
    let stat = |f: &dyn Fn(&TrialSummary) -> f64| {
        MetricStats::of(&results.iter().map(f).collect::<Vec<_>>()).expect("non-empty")
    };
    Ok(Aggregate {
        trials: results.len(),
        single_sample: results.len() == 1,
        cycles: stat(&|r| r.cycles as f64),
        volume: stat(&|r| r.volume as f64),
        peak_demand: stat(&|r| f64::from(r.peak_demand)),
        fixups: stat(&|r| r.fixups as f64),
        stalls: stat(&|r| r.stalls as f64),
        injections: stat(&|r| r.injections as f64),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Template for every cell; `units` and `trial_seed` are overwritten.
    pub sim: SimConfig,
    pub f_min: u32,
    pub f_max: u32,
    pub trials: u32,
    pub base_seed: u64,
    pub epsilon: f64,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), SweepError> {
        if self.f_min > self.f_max {
            return Err(SweepError::Config(format!(
                "f_min = {} exceeds f_max = {}",
                self.f_min, self.f_max
            )));
        }
        if self.trials == 0 {
            return Err(SweepError::Config("trials must be at least 1".into()));
        }
        if self.epsilon.is_nan() || self.epsilon < 0.0 {
            return Err(SweepError::Config("epsilon must be non-negative".into()));
        }
        self.sim.validate()?;
        Ok(())
    }
}

/// One CSV row: statistics over the trials at one F.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub mechanism: String,
    pub mode: SimulationMode,
    #[serde(rename = "F")]
    pub units: u32,
    pub trials: u32,
    #[serde(rename = "mean_C")]
    pub mean_c: f64,
    #[serde(rename = "std_C")]
    pub std_c: f64,
    #[serde(rename = "mean_V")]
    pub mean_v: f64,
    #[serde(rename = "std_V")]
    pub std_v: f64,
    pub mean_peak_demand: f64,
    pub mean_fixups: f64,
    pub mean_stalls: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct SweepSummary {
    pub F_star: u32,
    pub F_plateau: u32,
    pub F_det: u32,
    /// Volume-optimal F of the deterministic curve.
    pub F_star_det: u32,
    pub F_naive_peak: u32,
    pub F_naive_avg: u32,
    /// `F_det - F_star`.
    pub savings: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    /// Rows of the configured mode.
    pub rows: Vec<SweepRow>,
    /// Mode-A rows, one trial each.
    pub det_rows: Vec<SweepRow>,
    pub summary: SweepSummary,
    pub c_static: u64,
    pub gamma_peak: u32,
    pub gamma_avg: f64,
    /// Expected cycles per state of one unit.
    pub t_prod: f64,
    pub trials: u32,
    pub base_seed: u64,
    pub epsilon: f64,
}

/// Smallest F whose mean C is within `(1 + eps)` of the mean C at the
/// largest F.
pub fn plateau(rows: &[SweepRow], eps: f64) -> u32 {
    let limit = rows.last().expect("rows are non-empty").mean_c;
    rows.iter()
        .find(|r| r.mean_c <= (1.0 + eps) * limit)
        .expect("the last row qualifies")
        .units
}

/// Argmin of mean V, ties to the smaller F.
pub fn f_star(rows: &[SweepRow]) -> u32 {
    rows.iter()
        .fold(None::<&SweepRow>, |best, r| match best {
            Some(b) if b.mean_v <= r.mean_v => Some(b),
            _ => Some(r),
        })
        .expect("rows are non-empty")
        .units
}

fn run_cells(
    dag: &CircuitDag,
    template: &SimConfig,
    mode: SimulationMode,
    cells: &[(u32, u32)],
    base_seed: u64,
) -> Result<Vec<TrialSummary>, SweepError> {
    cells
        .par_iter()
        .map(|&(units, trial)| {
            let cfg = SimConfig {
                units,
                mode,
                trial_seed: trial_seed(base_seed, units, trial),
                ..template.clone()
            };
            simulate(dag, &cfg)
                .map(|r| TrialSummary::from(&r))
                .map_err(|source| SweepError::Trial {
                    units,
                    trial,
                    source,
                })
        })
        .collect()
}

fn rows_for(
    mechanism: &str,
    mode: SimulationMode,
    units: &[u32],
    trials: u32,
    summaries: &[TrialSummary],
) -> Result<Vec<SweepRow>, SweepError> {
    units
        .iter()
        .zip(summaries.chunks(trials as usize))
        .map(|(&f, chunk)| {
            let a = aggregate_trials(chunk)?;
            Ok(SweepRow {
                mechanism: mechanism.to_string(),
                mode,
                units: f,
                trials,
                mean_c: a.cycles.mean,
                std_c: a.cycles.stddev,
                mean_v: a.volume.mean,
                std_v: a.volume.stddev,
                mean_peak_demand: a.peak_demand.mean,
                mean_fixups: a.fixups.mean,
                mean_stalls: a.stalls.mean,
            })
        })
        .collect()
}

/// Runs `trials` simulations at every F in `f_min ..= f_max` in the
/// configured mode, plus one Mode-A simulation per F for the deterministic
/// curve.
pub fn sweep_factories(dag: &CircuitDag, cfg: &SweepConfig) -> Result<SweepResult, SweepError> {
    cfg.validate()?;
    let units: Vec<u32> = (cfg.f_min..=cfg.f_max).collect();
    let mech = cfg.sim.mechanism.name();

    let cells: Vec<(u32, u32)> = units
        .iter()
        .flat_map(|&f| (0..cfg.trials).map(move |t| (f, t)))
        .collect();
    let stoch = run_cells(dag, &cfg.sim, cfg.sim.mode, &cells, cfg.base_seed)?;
    let rows = rows_for(mech, cfg.sim.mode, &units, cfg.trials, &stoch)?;

    let det_cells: Vec<(u32, u32)> = units.iter().map(|&f| (f, 0)).collect();
    let det = run_cells(dag, &cfg.sim, SimulationMode::A, &det_cells, cfg.base_seed)?;
    let det_rows = rows_for(mech, SimulationMode::A, &units, 1, &det)?;

    let profile = static_profile(dag).map_err(SimError::from)?;
    let t_prod = cfg.sim.mechanism.expected_time_per_state();
    let summary = SweepSummary {
        F_star: f_star(&rows),
        F_plateau: plateau(&rows, cfg.epsilon),
        F_det: plateau(&det_rows, cfg.epsilon),
        F_star_det: f_star(&det_rows),
        F_naive_peak: f_naive(f64::from(profile.gamma_peak), t_prod),
        F_naive_avg: f_naive(profile.gamma_avg, t_prod),
        savings: i64::from(plateau(&det_rows, cfg.epsilon)) - i64::from(f_star(&rows)),
    };
    Ok(SweepResult {
        rows,
        det_rows,
        summary,
        c_static: c_static(dag, &cfg.sim)?,
        gamma_peak: profile.gamma_peak,
        gamma_avg: profile.gamma_avg,
        t_prod,
        trials: cfg.trials,
        base_seed: cfg.base_seed,
        epsilon: cfg.epsilon,
    })
}

/// One cell of a sensitivity grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub p: f64,
    /// Code distance; absent for distillation.
    pub d: Option<u32>,
    #[serde(rename = "F")]
    pub units: u32,
    /// Infinite when no production attempt can ever succeed at this
    /// `(p, d)`.
    #[serde(rename = "mean_V")]
    pub mean_v: f64,
    #[serde(rename = "std_V")]
    pub std_v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub per_list: Vec<f64>,
    /// Code distances; ignored for distillation.
    pub distance_list: Vec<u32>,
    pub f_list: Vec<u32>,
    pub trials: u32,
    pub base_seed: u64,
}

/// True when some per-round failure probability of `mech` reaches 1.
fn saturated(mech: &MechanismConfig) -> bool {
    match mech {
        MechanismConfig::Distillation(c) => c.abort_rate() >= 1.0,
        MechanismConfig::Cultivation(c) => c.q1() >= 1.0 || c.q2() >= 1.0,
        MechanismConfig::Rz(c) => c.q_round() >= 1.0,
    }
}

/// Mean volume for every `(p, d, F)` with the mechanism's error-dependent
/// parameters re-derived per cell.
pub fn sensitivity_grid(
    dag: &CircuitDag,
    template: &SimConfig,
    spec: &GridSpec,
) -> Result<Vec<GridRow>, SweepError> {
    if spec.per_list.is_empty() || spec.f_list.is_empty() {
        return Err(SweepError::Config("grid lists must be non-empty".into()));
    }
    if spec.trials == 0 {
        return Err(SweepError::Config("trials must be at least 1".into()));
    }
    let distances: Vec<Option<u32>> = match template.mechanism {
        MechanismConfig::Distillation(_) => vec![None],
        _ if spec.distance_list.is_empty() => {
            return Err(SweepError::Config("distance list must be non-empty".into()))
        }
        _ => spec.distance_list.iter().copied().map(Some).collect(),
    };

    let mut out = Vec::new();
    for &p in &spec.per_list {
        for &d in &distances {
            let mech = template.mechanism.rederived(p, d);
            let base = SimConfig {
                mechanism: mech.clone(),
                ..template.clone()
            };
            for &f in &spec.f_list {
                let (mean_v, std_v) = if saturated(&mech) && f > 0 {
                    (f64::INFINITY, 0.0)
                } else {
                    base.validate()?;
                    let cells: Vec<(u32, u32)> = (0..spec.trials).map(|t| (f, t)).collect();
                    let s = run_cells(dag, &base, base.mode, &cells, spec.base_seed)?;
                    let a = aggregate_trials(&s)?;
                    (a.volume.mean, a.volume.stddev)
                };
                out.push(GridRow {
                    p,
                    d,
                    units: f,
                    mean_v,
                    std_v,
                });
            }
        }
    }
    Ok(out)
}
