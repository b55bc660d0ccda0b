use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use magicsim_core::circuit_ir::DurationTable;
use magicsim_core::metrics::overhead_ratio;
use magicsim_core::rng::trial_seed;
use magicsim_core::scheduler::c_static;
use magicsim_core::sweep::{
    aggregate_trials, sensitivity_grid, sweep_factories, Aggregate, GridSpec, MetricStats,
    SweepConfig, SweepSummary, TrialSummary,
};
use magicsim_core::{
    parse_qasm_with, simulate, static_profile, CircuitDag, DecompositionTable, ParseOptions,
    SimConfig, SimResult, SimulationMode,
};

use crate::config::{resolve, FileConfig, FlagOverrides, ResolvedConfig};
use crate::manifest::{Command, HashedInput, RunManifest};
use crate::{write_file, CliError, Cmd, InputArgs, SimArgs};

struct Inputs {
    circuit: HashedInput,
    decomposition: Option<HashedInput>,
    durations: Option<HashedInput>,
    dag: CircuitDag,
}

fn input_err(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Input(e.into())
}

fn build_dag(
    circuit: &HashedInput,
    text: &[u8],
    decomposition: Option<(&HashedInput, Vec<u8>)>,
    durations: Option<(&HashedInput, Vec<u8>)>,
) -> Result<CircuitDag, CliError> {
    let mut opts = ParseOptions::default();
    if let Some((h, bytes)) = decomposition {
        let text = String::from_utf8(bytes).map_err(input_err)?;
        let user = DecompositionTable::from_json(&text)
            .with_context(|| format!("{}", h.path.display()))
            .map_err(input_err)?;
        opts.table = DecompositionTable::builtin().with_overrides(user);
    }
    if let Some((h, bytes)) = durations {
        opts.durations = serde_json::from_slice::<DurationTable>(&bytes)
            .with_context(|| format!("invalid duration table {}", h.path.display()))
            .map_err(input_err)?;
    }
    let text = std::str::from_utf8(text)
        .with_context(|| format!("{} is not UTF-8", circuit.path.display()))
        .map_err(input_err)?;
    parse_qasm_with(text, &opts)
        .with_context(|| format!("{}", circuit.path.display()))
        .map_err(input_err)
}

fn load_inputs(args: &InputArgs) -> Result<Inputs, CliError> {
    let (circuit, text) = HashedInput::read(&args.circuit)?;
    let decomposition = args
        .decomposition
        .as_deref()
        .map(HashedInput::read)
        .transpose()?;
    let durations = args
        .durations
        .as_deref()
        .map(HashedInput::read)
        .transpose()?;
    let dag = build_dag(
        &circuit,
        &text,
        decomposition.as_ref().map(|(h, b)| (h, b.clone())),
        durations.as_ref().map(|(h, b)| (h, b.clone())),
    )?;
    Ok(Inputs {
        circuit,
        decomposition: decomposition.map(|(h, _)| h),
        durations: durations.map(|(h, _)| h),
        dag,
    })
}

fn reload_inputs(m: &RunManifest) -> Result<Inputs, CliError> {
    let text = m.circuit.verify()?;
    let decomposition = m
        .decomposition
        .as_ref()
        .map(|h| h.verify().map(|b| (h, b)))
        .transpose()?;
    let durations = m
        .durations
        .as_ref()
        .map(|h| h.verify().map(|b| (h, b)))
        .transpose()?;
    let dag = build_dag(&m.circuit, &text, decomposition, durations)?;
    Ok(Inputs {
        circuit: m.circuit.clone(),
        decomposition: m.decomposition.clone(),
        durations: m.durations.clone(),
        dag,
    })
}

fn overrides(sim: &SimArgs) -> FlagOverrides {
    FlagOverrides {
        mechanism: sim.mechanism.clone(),
        mode: sim.mode,
        trials: sim.trials,
        seed: sim.seed,
        rz_handling: sim.rz_handling,
        priority_update: sim.priority_update,
        cost_mode: sim.cost_mode,
        max_cycles: sim.max_cycles,
        ..Default::default()
    }
}

fn resolved(input: &InputArgs, flags: &FlagOverrides) -> Result<ResolvedConfig, CliError> {
    let file = match &input.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    resolve(&file, flags).map_err(input_err)
}

pub(crate) fn dispatch(cmd: Cmd) -> Result<(), CliError> {
    let (command, input, flags) = match cmd {
        Cmd::Replay { manifest, out } => return replay(&manifest, out),
        Cmd::Analyze { input } => (Command::Analyze, input, FlagOverrides::default()),
        Cmd::Simulate {
            input,
            sim,
            units,
            trace,
        } => {
            let flags = FlagOverrides {
                units,
                trace,
                ..overrides(&sim)
            };
            (Command::Simulate, input, flags)
        }
        Cmd::Sweep {
            input,
            sim,
            f_min,
            f_max,
            eps,
        } => {
            let flags = FlagOverrides {
                f_min,
                f_max,
                eps,
                ..overrides(&sim)
            };
            (Command::Sweep, input, flags)
        }
        Cmd::Sensitivity {
            input,
            sim,
            per_list,
            d_list,
            f_list,
        } => {
            let flags = FlagOverrides {
                per_list: per_list.map(|l| l.0),
                d_list: d_list.map(|l| l.0),
                f_list: f_list.map(|l| l.0),
                ..overrides(&sim)
            };
            (Command::Sensitivity, input, flags)
        }
    };
    let cfg = resolved(&input, &flags)?;
    let inputs = load_inputs(&input)?;
    run_recorded(command, cfg, &inputs, input.out.as_deref())
}

fn replay(manifest_path: &Path, out: Option<PathBuf>) -> Result<(), CliError> {
    let m = RunManifest::load(manifest_path)?;
    let inputs = reload_inputs(&m)?;
    let dir = out.unwrap_or_else(|| {
        manifest_path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."))
    });
    run_recorded(m.command, m.config, &inputs, Some(&dir))
}

fn run_recorded(
    command: Command,
    cfg: ResolvedConfig,
    inputs: &Inputs,
    out: Option<&Path>,
) -> Result<(), CliError> {
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("cannot create {}", dir.display()))
            .map_err(input_err)?;
    }
    let outputs = match command {
        Command::Analyze => analyze(&inputs.dag, out)?,
        Command::Simulate => simulate_cmd(&inputs.dag, &cfg, out)?,
        Command::Sweep => sweep_cmd(&inputs.dag, &cfg, out)?,
        Command::Sensitivity => sensitivity_cmd(&inputs.dag, &cfg, out)?,
    };
    if let Some(dir) = out {
        RunManifest {
            command,
            base_seed: cfg.base_seed,
            config: cfg,
            circuit: inputs.circuit.clone(),
            decomposition: inputs.decomposition.clone(),
            durations: inputs.durations.clone(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            outputs,
        }
        .write(dir)?;
    }
    Ok(())
}

/// Rounds to four significant figures for human-readable summaries.
pub(crate) fn sig4(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    let scale = 10f64.powi(mag - 3);
    let r = (x / scale).round() * scale;
    if !(-4..6).contains(&mag) {
        return format!("{r:.3e}");
    }
    format!("{:.*}", (3 - mag).max(0) as usize, r)
}

fn json_text<T: Serialize>(v: &T) -> String {
    format!(
        "{}\n",
        serde_json::to_string_pretty(v).expect("output serializes")
    )
}

fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(input_err)?;
    }
    w.into_inner().map_err(|e| input_err(anyhow!("{e}")))
}

fn analyze(dag: &CircuitDag, out: Option<&Path>) -> Result<Vec<String>, CliError> {
    let profile = static_profile(dag).map_err(input_err)?;
    let text = json_text(&profile);
    let Some(dir) = out else {
        print!("{text}");
        return Ok(Vec::new());
    };
    #[derive(Serialize)]
    struct Layer {
        layer: usize,
        nonclifford_count: u32,
    }
    let layers: Vec<Layer> = profile
        .per_layer_demand
        .iter()
        .enumerate()
        .map(|(layer, &nonclifford_count)| Layer {
            layer,
            nonclifford_count,
        })
        .collect();
    write_file(&dir.join("profile.json"), text.as_bytes())?;
    write_file(&dir.join("layers.csv"), &csv_bytes(&layers)?)?;
    println!(
        "{} qubits, {} gates, depth {} cycles, gamma_peak {}, gamma_avg {}, T {}, rz {}",
        profile.qubit_count,
        profile.gate_count,
        profile.depth_cycles,
        profile.gamma_peak,
        sig4(profile.gamma_avg),
        profile.t_count,
        profile.rz_count
    );
    Ok(vec!["profile.json".into(), "layers.csv".into()])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u32,
    pub seed: u64,
    pub cycles: u64,
    pub volume: u64,
    pub peak_demand: u32,
    pub injections: u64,
    pub fixups: u64,
    pub aborts: u64,
    pub stalls: u64,
    pub max_concurrent_rz_units: u32,
}

/// `simulate` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateReport {
    pub mechanism: String,
    pub mode: SimulationMode,
    #[serde(rename = "F")]
    pub units: u32,
    pub trials: u32,
    pub base_seed: u64,
    pub q_total: u64,
    /// Mode-A cycles with unlimited production.
    pub c_static: u64,
    pub aggregate: Aggregate,
    /// `C / c_static` per trial; absent for an empty circuit.
    pub overhead_ratio: Option<MetricStats>,
    pub per_trial: Vec<TrialRecord>,
}

fn simulate_cmd(
    dag: &CircuitDag,
    cfg: &ResolvedConfig,
    out: Option<&Path>,
) -> Result<Vec<String>, CliError> {
    if cfg.trials == 0 {
        return Err(input_err(anyhow!("--trials must be at least 1")));
    }
    let units = cfg.sim.units;
    let results: Vec<(u32, SimResult)> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let sim = SimConfig {
                trial_seed: trial_seed(cfg.base_seed, units, t),
                ..cfg.sim.clone()
            };
            simulate(dag, &sim).map(|r| (t, r))
        })
        .collect::<Result<_, _>>()?;
    let summaries: Vec<TrialSummary> = results.iter().map(|(_, r)| r.into()).collect();
    let c_stat = c_static(dag, &cfg.sim)?;
    let ratios: Vec<f64> = results
        .iter()
        .filter_map(|(_, r)| overhead_ratio(r.cycles, c_stat).ok())
        .collect();
    let report = SimulateReport {
        mechanism: cfg.sim.mechanism.name().to_string(),
        mode: cfg.sim.mode,
        units,
        trials: cfg.trials,
        base_seed: cfg.base_seed,
        q_total: results[0].1.q_total,
        c_static: c_stat,
        aggregate: aggregate_trials(&summaries)?,
        overhead_ratio: MetricStats::of(&ratios),
        per_trial: results
            .iter()
            .map(|(t, r)| TrialRecord {
                trial: *t,
                seed: r.trial_seed,
                cycles: r.cycles,
                volume: r.volume,
                peak_demand: r.peak_demand,
                injections: r.injection_count,
                fixups: r.fixup_count,
                aborts: r.abort_count,
                stalls: r.stall_total(),
                max_concurrent_rz_units: r.max_concurrent_rz_units,
            })
            .collect(),
    };
    let Some(dir) = out else {
        print!("{}", json_text(&report));
        return Ok(Vec::new());
    };
    write_file(&dir.join("result.json"), json_text(&report).as_bytes())?;
    let mut outputs = vec!["result.json".to_string()];
    if cfg.trace {
        #[derive(Serialize)]
        struct TraceRow {
            trial: u32,
            cycle: usize,
            demand: u32,
            stalls: u32,
        }
        let rows: Vec<TraceRow> = results
            .iter()
            .flat_map(|(t, r)| {
                r.demand_trace.iter().zip(&r.stall_trace).enumerate().map(
                    move |(i, (&demand, &stalls))| TraceRow {
                        trial: *t,
                        cycle: i + 1,
                        demand,
                        stalls,
                    },
                )
            })
            .collect();
        write_file(&dir.join("trace.csv"), &csv_bytes(&rows)?)?;
        outputs.push("trace.csv".into());
    }
    let a = &report.aggregate;
    println!(
        "{} mode {} F={} trials={}: C mean {} (sd {}), V mean {} (sd {}), peak demand {}, fixups {}, ratio {}",
        report.mechanism,
        report.mode,
        units,
        cfg.trials,
        sig4(a.cycles.mean),
        sig4(a.cycles.stddev),
        sig4(a.volume.mean),
        sig4(a.volume.stddev),
        sig4(a.peak_demand.mean),
        sig4(a.fixups.mean),
        report.overhead_ratio.map_or("n/a".into(), |r| sig4(r.mean)),
    );
    Ok(outputs)
}

/// `summary.json` of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummaryFile {
    #[serde(flatten)]
    pub summary: SweepSummary,
    pub mechanism: String,
    pub mode: SimulationMode,
    pub f_min: u32,
    pub f_max: u32,
    pub trials: u32,
    pub base_seed: u64,
    pub eps: f64,
    pub c_static: u64,
    pub gamma_peak: u32,
    pub gamma_avg: f64,
    pub t_prod: f64,
}

fn sweep_cmd(
    dag: &CircuitDag,
    cfg: &ResolvedConfig,
    out: Option<&Path>,
) -> Result<Vec<String>, CliError> {
    let sc = SweepConfig {
        sim: cfg.sim.clone(),
        f_min: cfg.f_min,
        f_max: cfg.f_max,
        trials: cfg.trials,
        base_seed: cfg.base_seed,
        epsilon: cfg.eps,
    };
    let r = sweep_factories(dag, &sc)?;
    let file = SweepSummaryFile {
        summary: r.summary,
        mechanism: cfg.sim.mechanism.name().to_string(),
        mode: cfg.sim.mode,
        f_min: cfg.f_min,
        f_max: cfg.f_max,
        trials: cfg.trials,
        base_seed: cfg.base_seed,
        eps: cfg.eps,
        c_static: r.c_static,
        gamma_peak: r.gamma_peak,
        gamma_avg: r.gamma_avg,
        t_prod: r.t_prod,
    };
    let Some(dir) = out else {
        print!("{}", json_text(&file));
        return Ok(Vec::new());
    };
    let mut rows = r.rows.clone();
    rows.extend(r.det_rows.iter().cloned());
    write_file(&dir.join("sweep.csv"), &csv_bytes(&rows)?)?;
    write_file(&dir.join("summary.json"), json_text(&file).as_bytes())?;
    let s = &r.summary;
    println!(
        "F_star {} F_plateau {} F_det {} savings {} (F_naive peak {}, avg {})",
        s.F_star, s.F_plateau, s.F_det, s.savings, s.F_naive_peak, s.F_naive_avg
    );
    Ok(vec!["sweep.csv".into(), "summary.json".into()])
}

fn sensitivity_cmd(
    dag: &CircuitDag,
    cfg: &ResolvedConfig,
    out: Option<&Path>,
) -> Result<Vec<String>, CliError> {
    let need = |name: &str, empty: bool| {
        if empty {
            Err(input_err(anyhow!(
                "--{name} is required and must not be empty"
            )))
        } else {
            Ok(())
        }
    };
    need("per-list", cfg.per_list.is_empty())?;
    need("f-list", cfg.f_list.is_empty())?;
    need(
        "d-list",
        cfg.d_list.is_empty()
            && !matches!(
                cfg.sim.mechanism,
                magicsim_core::MechanismConfig::Distillation(_)
            ),
    )?;
    if cfg.trials == 0 {
        return Err(input_err(anyhow!("--trials must be at least 1")));
    }
    let spec = GridSpec {
        per_list: cfg.per_list.clone(),
        distance_list: cfg.d_list.clone(),
        f_list: cfg.f_list.clone(),
        trials: cfg.trials,
        base_seed: cfg.base_seed,
    };
    let rows = sensitivity_grid(dag, &cfg.sim, &spec)?;
    let bytes = csv_bytes(&rows)?;
    let Some(dir) = out else {
        print!("{}", String::from_utf8_lossy(&bytes));
        return Ok(Vec::new());
    };
    write_file(&dir.join("grid.csv"), &bytes)?;
    println!("{} grid cells", rows.len());
    Ok(vec!["grid.csv".into()])
}
