use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use mol_bench::{discrete_stream, keydoor_frames, looped_trajectory};
use mol_core::agent::{Agent, AgentConfig, AgentMode};
use mol_core::density::{observe_and_count, FactoredPixelModel, TabularCountModel};
use mol_core::envs::{KeyDoor, KeyDoorSpec};
use mol_core::importance::{optimal_path_states, PathMode};
use mol_core::sampling::{dissimilar_sample, DissimilarConfig};
use mol_core::shaping::ShapingConfig;

fn density(c: &mut Criterion) {
    let stream = discrete_stream(10_000, 300, 1);
    c.bench_function("tabular observe_and_count 10k", |b| {
        b.iter(|| {
            let mut m = TabularCountModel::new();
            stream
                .iter()
                .map(|s| observe_and_count(&mut m, s))
                .sum::<f64>()
        })
    });
    let frames = keydoor_frames(200, 2);
    c.bench_function("pixel observe_and_count 200 frames", |b| {
        b.iter(|| {
            let mut m = FactoredPixelModel::default();
            frames
                .iter()
                .map(|s| observe_and_count(&mut m, s))
                .sum::<f64>()
        })
    });
}

fn sampling(c: &mut Criterion) {
    let frames = keydoor_frames(500, 3);
    let cfg = DissimilarConfig {
        min_diff: 1.0,
        ..DissimilarConfig::default()
    };
    c.bench_function("dissimilar_sample 500 frames", |b| {
        b.iter(|| dissimilar_sample(black_box(&frames), &cfg).unwrap())
    });
}

fn importance(c: &mut Criterion) {
    let traj = looped_trajectory(200, 4);
    c.bench_function("optimal_path_states looped 200", |b| {
        b.iter(|| optimal_path_states(black_box(&traj), PathMode::AnyShortest))
    });
}

fn agent(c: &mut Criterion) {
    c.bench_function("mol keydoor 20 episodes", |b| {
        b.iter(|| {
            let cfg = AgentConfig {
                mode: AgentMode::Mol,
                ..AgentConfig::default()
            };
            let mut agent = Agent::new(
                cfg,
                ShapingConfig::default(),
                DissimilarConfig::default(),
                4,
                5,
            )
            .unwrap();
            let mut env = KeyDoor::new(KeyDoorSpec::default()).unwrap();
            (0..20)
                .map(|ep| agent.run_episode(&mut env, ep).unwrap().score)
                .sum::<f64>()
        })
    });
}

criterion_group!(benches, density, sampling, importance, agent);
criterion_main!(benches);
