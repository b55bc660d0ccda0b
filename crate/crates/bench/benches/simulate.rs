use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use magicsim_core::circuit_ir::synthetic::BurstyCircuit;
use magicsim_core::sweep::sweep_factories;
use magicsim_core::{
    parse_qasm, simulate, MechanismConfig, SimConfig, SimulationMode, SweepConfig,
};

fn parse(c: &mut Criterion) {
    let text = BurstyCircuit::default().to_qasm();
    c.bench_function("parse bursty_25q", |b| {
        b.iter(|| parse_qasm(black_box(&text)).unwrap())
    });
}

fn single_trial(c: &mut Criterion) {
    let dag = parse_qasm(&BurstyCircuit::default().to_qasm()).unwrap();
    let mut g = c.benchmark_group("simulate bursty_25q mode D");
    for (name, mechanism, units) in [
        ("distillation F=25", MechanismConfig::default(), 25),
        (
            "cultivation F=685",
            MechanismConfig::from_name("cultivation").unwrap(),
            685,
        ),
        ("rz F=5", MechanismConfig::from_name("rz").unwrap(), 5),
    ] {
        let mut seed = 0u64;
        g.bench_function(name, |b| {
            b.iter_batched(
                || {
                    seed += 1;
                    SimConfig {
                        mechanism: mechanism.clone(),
                        units,
                        mode: SimulationMode::D,
                        trial_seed: seed,
                        ..Default::default()
                    }
                },
                |cfg| simulate(&dag, &cfg).unwrap(),
                BatchSize::SmallInput,
            )
        });
    }
    g.finish();
}

fn small_sweep(c: &mut Criterion) {
    let dag = parse_qasm(&BurstyCircuit::default().to_qasm()).unwrap();
    let cfg = SweepConfig {
        sim: SimConfig {
            mode: SimulationMode::D,
            ..Default::default()
        },
        f_min: 10,
        f_max: 40,
        trials: 10,
        base_seed: 1,
        epsilon: 0.01,
    };
    let mut g = c.benchmark_group("sweep");
    g.sample_size(10);
    g.bench_function("distillation F 10..=40 x 10 trials", |b| {
        b.iter(|| sweep_factories(&dag, &cfg).unwrap())
    });
    g.finish();
}

criterion_group!(benches, parse, single_trial, small_sweep);
criterion_main!(benches);
