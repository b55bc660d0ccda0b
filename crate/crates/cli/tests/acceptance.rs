//! Acceptance suite. Prints one line per criterion:
//!
//! ```text
//! [PASS] 3 distillation abort rate: ...
//! ```
//!
//! Hard criteria exit non-zero on failure. Soft bounds and the documented
//! cultivation plateau gap print `FAIL (soft)` / `FAIL (known)` without
//! failing the target.

use std::collections::HashSet;
use std::path::Path;
use std::process::Command;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use magicsim_core::circuit_ir::synthetic::{parallel_rz, BurstyCircuit};
use magicsim_core::production::{CultivationConfig, DistillationConfig};
use magicsim_core::rng::trial_seed;
use magicsim_core::sweep::{sweep_factories, SweepError, SweepResult};
use magicsim_core::{
    parse_qasm, simulate, CircuitDag, MechanismConfig, ProductionBank, SimConfig, SimError,
    SimResult, SimulationMode, SweepConfig,
};

// Tolerances.
const ORACLE_DAGS: usize = 200;
const INJECTION_BAND: (f64, f64) = (0.495, 0.505);
const ABORT_TARGET: f64 = 0.0015105;
const ABORT_REL_TOL: f64 = 0.25;
const RZ_INJECTIONS_TARGET: f64 = 2.0;
const RZ_INJECTIONS_REL_TOL: f64 = 0.02;
const CULTIVATION_REL_TOL: f64 = 0.05;
const SMOOTHING_TRIALS: u32 = 200;
const SMOOTHING_FRACTION: f64 = 0.95;
const SWEEP_TRIALS: u32 = 100;
const SWEEP_EPS: f64 = 0.01;
/// The Rz Mode-D tail is flat to within 1%, so 100 trials leave the plateau
/// at the mercy of sampling noise in C(F_max).
const RZ_SWEEP_TRIALS: u32 = 1000;
const DISTILLATION_RATIO: (f64, f64) = (1.0, 1.5);
const CULTIVATION_RATIO: (f64, f64) = (1.0, 3.0);
const RZ_RATIO_AT_ONE: f64 = 3.0;

static RUNS: AtomicU64 = AtomicU64::new(0);
static INVARIANT_ERRORS: AtomicU64 = AtomicU64::new(0);

fn note_error(e: &SimError) {
    if matches!(e, SimError::Invariant { .. }) {
        INVARIANT_ERRORS.fetch_add(1, Ordering::Relaxed);
    }
}

fn sim(dag: &CircuitDag, cfg: &SimConfig) -> SimResult {
    RUNS.fetch_add(1, Ordering::Relaxed);
    simulate(dag, cfg).unwrap_or_else(|e| {
        note_error(&e);
        panic!("simulation failed: {e}")
    })
}

fn sweep(dag: &CircuitDag, cfg: &SweepConfig) -> SweepResult {
    let cells = u64::from(cfg.f_max - cfg.f_min + 1) * u64::from(cfg.trials + 1);
    RUNS.fetch_add(cells, Ordering::Relaxed);
    sweep_factories(dag, cfg).unwrap_or_else(|e| {
        if let SweepError::Trial { source, .. } | SweepError::Sim(source) = &e {
            note_error(source);
        }
        panic!("sweep failed: {e}")
    })
}

#[derive(Clone, Copy, PartialEq)]
enum Status {
    Pass,
    Fail,
    Soft,
    Known,
    Skip,
}

struct Report {
    hard_failures: u32,
}

impl Report {
    fn line(&mut self, id: &str, status: Status, text: String, started: Instant) {
        let tag = match status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Soft => "FAIL (soft)",
            Status::Known => "FAIL (known)",
            Status::Skip => "SKIP",
        };
        if status == Status::Fail {
            self.hard_failures += 1;
        }
        println!(
            "[{tag}] {id} {text} ({:.1} s)",
            started.elapsed().as_secs_f64()
        );
    }

    fn check(&mut self, id: &str, ok: bool, text: String, started: Instant) {
        let status = if ok { Status::Pass } else { Status::Fail };
        self.line(id, status, text, started);
    }
}

fn distillation(t_prod: u32, abort: f64) -> MechanismConfig {
    MechanismConfig::Distillation(DistillationConfig {
        t_prod,
        abort_rate: Some(abort),
        ..Default::default()
    })
}

fn bursty() -> CircuitDag {
    parse_qasm(&BurstyCircuit::default().to_qasm()).unwrap()
}

// ---------------------------------------------------------------------------
// 1. Brute-force oracle.

#[derive(Clone, Copy)]
enum OracleGate {
    Clifford1(&'static str, u32),
    Clifford2(&'static str, u32, u32),
    T(&'static str, u32),
}

impl OracleGate {
    fn qubits(&self) -> Vec<u32> {
        match *self {
            OracleGate::Clifford1(_, q) | OracleGate::T(_, q) => vec![q],
            OracleGate::Clifford2(_, a, b) => vec![a, b],
        }
    }

    fn qasm(&self) -> String {
        match *self {
            OracleGate::Clifford1(g, q) | OracleGate::T(g, q) => format!("{g} q[{q}];\n"),
            OracleGate::Clifford2(g, a, b) => format!("{g} q[{a}], q[{b}];\n"),
        }
    }
}

fn random_gates(rng: &mut StdRng) -> (u32, Vec<OracleGate>) {
    let qubits = rng.gen_range(1..=4u32);
    let n = rng.gen_range(1..=12);
    let gates = (0..n)
        .map(|_| {
            let q = rng.gen_range(0..qubits);
            match rng.gen_range(0..6) {
                0 | 1 => OracleGate::T(["t", "tdg"][rng.gen_range(0..2)], q),
                2 if qubits > 1 => {
                    let mut r = rng.gen_range(0..qubits - 1);
                    if r >= q {
                        r += 1;
                    }
                    OracleGate::Clifford2(["cx", "cz"][rng.gen_range(0..2)], q, r)
                }
                _ => OracleGate::Clifford1(["h", "s", "x"][rng.gen_range(0..3)], q),
            }
        })
        .collect();
    (qubits, gates)
}

/// Event-driven reference for unit-duration gates fed by `units` staggered,
/// never-failing factories. Time jumps straight to the next state arrival
/// whenever the circuit is blocked on supply.
fn oracle_cycles(qubits: u32, gates: &[OracleGate], t_prod: u64, units: u64) -> u64 {
    let n = gates.len();
    let mut last: Vec<Option<usize>> = vec![None; qubits as usize];
    let mut succs: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut pending = vec![0usize; n];
    for (i, g) in gates.iter().enumerate() {
        let preds: HashSet<usize> = g
            .qubits()
            .iter()
            .filter_map(|&q| last[q as usize])
            .collect();
        for p in preds {
            succs[p].push(i);
            pending[i] += 1;
        }
        for q in g.qubits() {
            last[q as usize] = Some(i);
        }
    }
    // Longest path to a sink, in gates.
    let mut height = vec![1u64; n];
    for i in (0..n).rev() {
        height[i] = 1 + succs[i].iter().map(|&s| height[s]).max().unwrap_or(0);
    }
    // Factory i finishes at offset_i + k·t_prod and the state is usable one
    // cycle later.
    let mut arrivals: Vec<u64> = (0..units)
        .flat_map(|i| {
            let offset = i * t_prod / units;
            (1..=n as u64).map(move |k| offset + k * t_prod + 1)
        })
        .collect();
    arrivals.sort_unstable();

    let mut ready_at: Vec<Option<u64>> = pending.iter().map(|&p| (p == 0).then_some(1)).collect();
    let mut waiting: Vec<usize> = Vec::new();
    let mut next_arrival = 0;
    let mut pool = 0u64;
    let mut finished = 0;
    let mut t = 1u64;
    loop {
        let mut done_now = Vec::new();
        for i in 0..n {
            if ready_at[i] == Some(t) {
                match gates[i] {
                    OracleGate::T(..) => waiting.push(i),
                    _ => done_now.push(i),
                }
            }
        }
        while next_arrival < arrivals.len() && arrivals[next_arrival] <= t {
            pool += 1;
            next_arrival += 1;
        }
        waiting.sort_by_key(|&i| (std::cmp::Reverse(height[i]), i));
        let take = (pool as usize).min(waiting.len());
        pool -= take as u64;
        done_now.extend(waiting.drain(..take));

        for &i in &done_now {
            finished += 1;
            for &s in &succs[i] {
                pending[s] -= 1;
                if pending[s] == 0 {
                    ready_at[s] = Some(t + 1);
                }
            }
        }
        if finished == n {
            return t;
        }
        t = if ready_at.contains(&Some(t + 1)) {
            t + 1
        } else {
            arrivals[next_arrival]
        };
    }
}

fn criterion_1(r: &mut Report) {
    let started = Instant::now();
    let mut rng = StdRng::seed_from_u64(0x0A11);
    let mut mismatches = Vec::new();
    for k in 0..ORACLE_DAGS {
        let (qubits, gates) = random_gates(&mut rng);
        let t_prod = rng.gen_range(1..=3u32);
        let units = rng.gen_range(1..=4u32);
        let text: String = std::iter::once(format!("OPENQASM 2.0;\nqreg q[{qubits}];\n"))
            .chain(gates.iter().map(OracleGate::qasm))
            .collect();
        let dag = parse_qasm(&text).unwrap();
        let cfg = SimConfig {
            mechanism: distillation(t_prod, 0.0),
            units,
            mode: SimulationMode::A,
            ..Default::default()
        };
        let got = sim(&dag, &cfg).cycles;
        let want = oracle_cycles(qubits, &gates, u64::from(t_prod), u64::from(units));
        if got != want {
            mismatches.push(format!("#{k}: {got} != {want}"));
        }
    }
    r.check(
        "1 oracle equivalence:",
        mismatches.is_empty(),
        format!(
            "{}/{ORACLE_DAGS} random DAGs match the brute-force simulator {:?}",
            ORACLE_DAGS - mismatches.len(),
            mismatches.iter().take(3).collect::<Vec<_>>()
        ),
        started,
    );
}

// ---------------------------------------------------------------------------

fn criterion_2(r: &mut Report) {
    let started = Instant::now();
    let mut text = String::from("OPENQASM 2.0;\nqreg q[25];\n");
    for _ in 0..40 {
        for q in 0..25 {
            text.push_str(&format!("t q[{q}];\n"));
        }
    }
    let dag = parse_qasm(&text).unwrap();
    let (mut injections, mut failures) = (0u64, 0u64);
    for t in 0..100 {
        let cfg = SimConfig {
            units: 50,
            mode: SimulationMode::C,
            trial_seed: trial_seed(2, 50, t),
            ..Default::default()
        };
        let res = sim(&dag, &cfg);
        injections += res.injection_count;
        failures += res.fixup_count;
    }
    let frac = failures as f64 / injections as f64;
    r.check(
        "2 injection failure rate:",
        injections >= 100_000 && (INJECTION_BAND.0..=INJECTION_BAND.1).contains(&frac),
        format!(
            "{failures}/{injections} = {frac:.5} in [{}, {}]",
            INJECTION_BAND.0, INJECTION_BAND.1
        ),
        started,
    );
}

fn criterion_3(r: &mut Report) {
    let started = Instant::now();
    let cfg = MechanismConfig::Distillation(DistillationConfig::default());
    let mut bank = ProductionBank::new(&cfg, 100, 3, 1);
    for c in 1..=18 * 2001u64 {
        bank.step(c).unwrap();
        bank.request(c, u64::MAX, None);
    }
    let s = bank.stats();
    let rate = s.aborts as f64 / s.attempts as f64;
    let rel = (rate / ABORT_TARGET - 1.0).abs();
    r.check(
        "3 distillation abort rate:",
        s.attempts >= 200_000 && rel <= ABORT_REL_TOL,
        format!(
            "{}/{} rounds = {rate:.6} vs {ABORT_TARGET} (rel. error {:.1}%, tol {}%)",
            s.aborts,
            s.attempts,
            100.0 * rel,
            100.0 * ABORT_REL_TOL
        ),
        started,
    );
}

fn criterion_4(r: &mut Report) {
    let started = Instant::now();
    let gates_per_trial = 1000u32;
    let dag = parse_qasm(&parallel_rz(gates_per_trial, 1.0)).unwrap();
    let (mut gates, mut injections, mut clifford_fixups) = (0u64, 0u64, 0u64);
    for t in 0..10 {
        let cfg = SimConfig {
            mechanism: MechanismConfig::Rz(Default::default()),
            units: gates_per_trial,
            mode: SimulationMode::C,
            trial_seed: trial_seed(4, gates_per_trial, t),
            ..Default::default()
        };
        let res = sim(&dag, &cfg);
        gates += u64::from(gates_per_trial);
        injections += res.injection_count;
        // Every fixup is another Rz injection unless a cascade hit a Clifford
        // angle.
        clifford_fixups += res.fixup_count - (res.injection_count - u64::from(gates_per_trial));
    }
    let mean = injections as f64 / gates as f64;
    let rel = (mean / RZ_INJECTIONS_TARGET - 1.0).abs();
    r.check(
        "4 Rz injections per gate:",
        gates >= 10_000 && clifford_fixups == 0 && rel <= RZ_INJECTIONS_REL_TOL,
        format!(
            "{injections}/{gates} = {mean:.4} vs {RZ_INJECTIONS_TARGET} ± {}%, {clifford_fixups} Clifford-terminated cascades",
            100.0 * RZ_INJECTIONS_REL_TOL
        ),
        started,
    );
}

fn criterion_5(r: &mut Report) {
    let started = Instant::now();
    let units = 200u32;
    let mut ok = true;
    let mut parts = Vec::new();
    for (q1, q2) in [(0.0, 0.0), (0.05, 0.04), (0.09, 0.49)] {
        let cfg = MechanismConfig::Cultivation(CultivationConfig {
            q1: Some(q1),
            q2: Some(q2),
            ..Default::default()
        });
        let rate = cfg.expected_throughput();
        let cycles = (12_000.0 / (rate * f64::from(units))).ceil() as u64;
        let mut bank = ProductionBank::new(&cfg, units, 5, 1);
        let mut got = 0;
        for c in 1..=cycles {
            bank.step(c).unwrap();
            got += bank.request(c, u64::MAX, None);
        }
        let expected = rate * f64::from(units) * cycles as f64;
        let rel = (got as f64 / expected - 1.0).abs();
        ok &= got >= 10_000 && rel <= CULTIVATION_REL_TOL;
        parts.push(format!(
            "q=({q1},{q2}): {got} vs {expected:.0} ({:.2}%)",
            100.0 * rel
        ));
    }
    r.check(
        "5 cultivation throughput:",
        ok,
        format!(
            "{} (tol {}%)",
            parts.join("; "),
            100.0 * CULTIVATION_REL_TOL
        ),
        started,
    );
}

fn distillation_sweep(dag: &CircuitDag) -> SweepResult {
    sweep(
        dag,
        &SweepConfig {
            sim: SimConfig {
                mode: SimulationMode::D,
                ..Default::default()
            },
            f_min: 1,
            f_max: 300,
            trials: SWEEP_TRIALS,
            base_seed: 7,
            epsilon: SWEEP_EPS,
        },
    )
}

fn criterion_6(r: &mut Report, dag: &CircuitDag, dist: &SweepResult) {
    let started = Instant::now();
    let f_det = dist.summary.F_det;
    let base = SimConfig {
        units: f_det,
        ..Default::default()
    };
    let det_peak = sim(
        dag,
        &SimConfig {
            mode: SimulationMode::A,
            ..base.clone()
        },
    )
    .peak_demand;
    let peaks: Vec<u32> = (0..SMOOTHING_TRIALS)
        .map(|t| {
            let cfg = SimConfig {
                mode: SimulationMode::D,
                trial_seed: trial_seed(6, f_det, t),
                ..base.clone()
            };
            sim(dag, &cfg).peak_demand
        })
        .collect();
    let below = peaks.iter().filter(|&&p| p < det_peak).count();
    let mean = peaks.iter().map(|&p| f64::from(p)).sum::<f64>() / peaks.len() as f64;
    r.check(
        "6 demand smoothing:",
        below as f64 >= SMOOTHING_FRACTION * f64::from(SMOOTHING_TRIALS),
        format!(
            "F_det = {f_det}, deterministic peak {det_peak}, {below}/{SMOOTHING_TRIALS} trials below it, mean stochastic peak {mean:.2}"
        ),
        started,
    );
    r.line(
        "6b knn_n25 peak 13 vs 15:",
        Status::Skip,
        "circuits/knn_n25.qasm is not in the repository".into(),
        started,
    );
}

fn criterion_7_8(r: &mut Report, dag: &CircuitDag, dist: &SweepResult, started: Instant) {
    let s = &dist.summary;
    r.check(
        "7a distillation payoff ordering:",
        s.F_plateau <= s.F_det && s.F_star <= s.F_star_det,
        format!(
            "F_plateau D {} <= A {}, F_star D {} <= A {} ({SWEEP_TRIALS} trials per F, F in 1..=300)",
            s.F_plateau, s.F_det, s.F_star, s.F_star_det
        ),
        started,
    );

    let started = Instant::now();
    let rz = sweep(
        dag,
        &SweepConfig {
            sim: SimConfig {
                mechanism: MechanismConfig::Rz(Default::default()),
                mode: SimulationMode::D,
                ..Default::default()
            },
            f_min: 1,
            f_max: 40,
            trials: RZ_SWEEP_TRIALS,
            base_seed: 7,
            epsilon: SWEEP_EPS,
        },
    );
    let gap = i64::from(rz.summary.F_plateau) - i64::from(rz.summary.F_det);
    r.check(
        "7b Rz plateaus agree:",
        gap.abs() <= 1,
        format!(
            "F_plateau D {} vs A {} ({RZ_SWEEP_TRIALS} trials per F, F in 1..=40)",
            rz.summary.F_plateau, rz.summary.F_det
        ),
        started,
    );

    let started = Instant::now();
    let cult = sweep(
        dag,
        &SweepConfig {
            sim: SimConfig {
                mechanism: MechanismConfig::Cultivation(Default::default()).rederived(1e-4, None),
                mode: SimulationMode::D,
                ..Default::default()
            },
            f_min: 1,
            f_max: 100,
            trials: SWEEP_TRIALS,
            base_seed: 7,
            epsilon: SWEEP_EPS,
        },
    );
    let gap = i64::from(cult.summary.F_plateau) - i64::from(cult.summary.F_det);
    r.line(
        "7c cultivation plateaus agree:",
        if gap.abs() <= 1 { Status::Pass } else { Status::Known },
        format!(
            "F_plateau D {} vs A {} at p = 1e-4 (F in 1..=100); retry-driven arrival jitter pushes the Mode-D plateau past the Mode-A one",
            cult.summary.F_plateau, cult.summary.F_det
        ),
        started,
    );

    // 8. Soft price bounds.
    let started = Instant::now();
    let ratio_at = |res: &SweepResult, f: u32| {
        res.rows
            .iter()
            .find(|row| row.units == f)
            .map(|row| row.mean_c / res.c_static as f64)
    };
    let fa = s.F_naive_avg;
    let d_ratio = ratio_at(dist, fa).expect("F_naive_avg is inside the sweep");
    let in_band = |x: f64, b: (f64, f64)| (b.0..=b.1).contains(&x);
    r.line(
        "8a distillation price:",
        if in_band(d_ratio, DISTILLATION_RATIO) {
            Status::Pass
        } else {
            Status::Soft
        },
        format!("overhead ratio {d_ratio:.3} at F_naive_avg = {fa}, band {DISTILLATION_RATIO:?}"),
        started,
    );

    let started = Instant::now();
    let mech = MechanismConfig::Cultivation(Default::default());
    let profile = magicsim_core::static_profile(dag).unwrap();
    let fa = magicsim_core::sweep::f_naive(profile.gamma_avg, mech.expected_time_per_state());
    let base = SimConfig {
        mechanism: mech,
        units: fa,
        mode: SimulationMode::D,
        ..Default::default()
    };
    let c_static = magicsim_core::scheduler::c_static(dag, &base).unwrap();
    let mean_c = (0..SWEEP_TRIALS)
        .map(|t| {
            let cfg = SimConfig {
                trial_seed: trial_seed(8, fa, t),
                ..base.clone()
            };
            sim(dag, &cfg).cycles as f64
        })
        .sum::<f64>()
        / f64::from(SWEEP_TRIALS);
    let c_ratio = mean_c / c_static as f64;
    r.line(
        "8b cultivation price:",
        if in_band(c_ratio, CULTIVATION_RATIO) { Status::Pass } else { Status::Soft },
        format!(
            "overhead ratio {c_ratio:.3} at F_naive_avg = {fa} (default calibration), band {CULTIVATION_RATIO:?}"
        ),
        started,
    );

    let started = Instant::now();
    let rz_ratio = ratio_at(&rz, 1).expect("F = 1 is inside the sweep");
    r.line(
        "8c Rz price at F = 1:",
        if rz_ratio >= RZ_RATIO_AT_ONE {
            Status::Pass
        } else {
            Status::Soft
        },
        format!("overhead ratio {rz_ratio:.3}, bound >= {RZ_RATIO_AT_ONE}"),
        started,
    );
}

// ---------------------------------------------------------------------------
// 9. Determinism.

fn magicsim(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_magicsim"))
        .args(args)
        .output()
        .expect("binary runs")
        .status
        .success()
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().into_string().unwrap(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    v.sort();
    v
}

fn criterion_9(r: &mut Report, dag: &CircuitDag) {
    let started = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let circuit = tmp.path().join("bursty.qasm");
    std::fs::write(&circuit, BurstyCircuit::default().to_qasm()).unwrap();
    let c = circuit.to_str().unwrap();
    let runs: [(&str, Vec<&str>); 4] = [
        ("analyze", vec!["analyze", c]),
        (
            "simulate",
            vec![
                "simulate", c, "-F", "20", "--trials", "10", "--seed", "5", "--trace",
            ],
        ),
        (
            "sweep",
            vec![
                "sweep", c, "--f-min", "10", "--f-max", "30", "--trials", "5", "--seed", "5",
            ],
        ),
        (
            "sensitivity",
            vec![
                "sensitivity",
                c,
                "--per-list",
                "1e-4,1e-3",
                "--f-list",
                "20,40",
                "--trials",
                "3",
            ],
        ),
    ];
    let mut bad = Vec::new();
    for (name, args) in &runs {
        let first = tmp.path().join(format!("{name}-1"));
        let again = tmp.path().join(format!("{name}-2"));
        let mut a = args.clone();
        a.extend(["--out", first.to_str().unwrap()]);
        let manifest = first.join("manifest.json");
        let ok = magicsim(&a)
            && magicsim(&[
                "replay",
                manifest.to_str().unwrap(),
                "--out",
                again.to_str().unwrap(),
            ])
            && dir_bytes(&first) == dir_bytes(&again);
        if !ok {
            bad.push(*name);
        }
    }
    let cfg = SimConfig {
        units: 20,
        mode: SimulationMode::A,
        ..Default::default()
    };
    let reference = sim(dag, &cfg);
    let seed_free = (1..20u64).all(|seed| {
        let res = sim(
            dag,
            &SimConfig {
                trial_seed: seed * 0x9E37,
                ..cfg.clone()
            },
        );
        SimResult {
            trial_seed: reference.trial_seed,
            ..res
        } == reference
    });
    r.check(
        "9 determinism:",
        bad.is_empty() && seed_free,
        format!(
            "replay byte-identical for {}/4 commands (failed: {bad:?}); Mode A identical across 20 seeds: {seed_free}",
            4 - bad.len()
        ),
        started,
    );
}

fn criterion_10(r: &mut Report, started: Instant) {
    let checks_on = cfg!(debug_assertions);
    let runs = RUNS.load(Ordering::Relaxed);
    let errors = INVARIANT_ERRORS.load(Ordering::Relaxed);
    r.check(
        "10 conservation:",
        checks_on && errors == 0,
        format!("runtime invariant checks enabled: {checks_on}; {runs} simulations, {errors} invariant violations"),
        started,
    );
}

fn main() {
    let all = Instant::now();
    let mut r = Report { hard_failures: 0 };
    criterion_1(&mut r);
    criterion_2(&mut r);
    criterion_3(&mut r);
    criterion_4(&mut r);
    criterion_5(&mut r);

    let dag = bursty();
    let started = Instant::now();
    let dist = distillation_sweep(&dag);
    criterion_6(&mut r, &dag, &dist);
    criterion_7_8(&mut r, &dag, &dist, started);
    criterion_9(&mut r, &dag);
    criterion_10(&mut r, all);

    println!(
        "acceptance: {} hard failure(s) in {:.1} s",
        r.hard_failures,
        all.elapsed().as_secs_f64()
    );
    if r.hard_failures > 0 {
        std::process::exit(1);
    }
}
