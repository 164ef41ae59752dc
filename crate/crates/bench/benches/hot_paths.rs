use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use heavytail_core::env::{scan, Point};
use heavytail_core::estimator::estimate_gradient;
use heavytail_core::rng::seeded;
use heavytail_core::trainer::rollout_with_horizon;
use heavytail_core::{generate_world, GenerationKnobs, Scenario, TrainConfig};

fn bench_scan(c: &mut Criterion) {
    let world = generate_world(Scenario::ObstacleAvoidance, 3, &GenerationKnobs::default()).unwrap();
    let targets = world.scan_targets();
    let origin = Point::new(world.start.x, world.start.y);
    c.bench_function("scan_720_beams", |b| {
        b.iter(|| scan(black_box(&targets), black_box(origin), black_box(world.start.psi)))
    });
}

fn bench_score(c: &mut Criterion) {
    let cfg = TrainConfig::default();
    let params = cfg.initial_policy(0).unwrap();
    let obs = [0.8, -0.3, 0.1, 0.4];
    c.bench_function("score_mlp_4_64_2", |b| {
        b.iter(|| params.score(black_box(&obs), black_box([0.3, -0.2])).unwrap())
    });
}

fn bench_rollout(c: &mut Criterion) {
    let cfg = TrainConfig::default();
    let world = cfg.world(0, 0).unwrap();
    let params = cfg.initial_policy(0).unwrap();
    c.bench_function("rollout_300_steps_goal_reaching", |b| {
        b.iter(|| {
            let mut rng = seeded(1);
            rollout_with_horizon(&world, &params, &cfg, 299, &mut rng).unwrap()
        })
    });
    let mut rng = seeded(1);
    let traj = rollout_with_horizon(&world, &params, &cfg, 299, &mut rng).unwrap();
    c.bench_function("estimate_gradient_300_steps", |b| {
        b.iter(|| estimate_gradient(&params, black_box(&traj), cfg.gamma).unwrap())
    });
}

criterion_group!(benches, bench_scan, bench_score, bench_rollout);
criterion_main!(benches);
