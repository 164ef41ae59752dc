use heavytail_core::env::{scan, Obstacle, Point, SCAN_BEAMS};
use heavytail_core::estimator::{clip_gradient, estimate_gradient, sample_horizon};
use heavytail_core::rng::seeded;
use heavytail_core::trajectory::{TerminationCause, Trajectory, TrajectoryStep};
use heavytail_core::{
    generate_world, project_action, ApproximatorSpec, Family, GenerationKnobs, PolicyParameters, RewardComponents,
    RobotPose, Scenario,
};
use proptest::prelude::*;

fn density_integral(family: Family, sigma: f64) -> f64 {
    // Substituting x = σ·tan(u) keeps the Cauchy mass on a finite interval.
    let n = 200_000;
    let h = std::f64::consts::PI / n as f64;
    (0..n)
        .map(|i| {
            let u = -std::f64::consts::FRAC_PI_2 + (i as f64 + 0.5) * h;
            let x = sigma * u.tan();
            family.log_density_1d(x, sigma).exp() * sigma / u.cos().powi(2) * h
        })
        .sum()
}

#[test]
fn densities_integrate_to_one() {
    for family in [Family::Cauchy, Family::Gaussian] {
        for sigma in [0.1, 0.25, 1.0] {
            let total = density_integral(family, sigma);
            assert!((total - 1.0).abs() < 1e-6, "{family} σ={sigma}: {total}");
        }
    }
}

#[test]
fn cauchy_tail_dominates_gaussian() {
    for k in [3.0, 5.0, 10.0] {
        let sigma = 0.25;
        let x = k * sigma;
        assert!(Family::Cauchy.log_density_1d(x, sigma) > Family::Gaussian.log_density_1d(x, sigma));
    }
}

#[test]
fn horizon_mean_and_variance_match_geometric() {
    let gamma: f64 = 0.95;
    let q = gamma.sqrt();
    let p = 1.0 - q;
    let (mean_true, var_true) = (q / p, q / (p * p));
    let n = 100_000;
    let mut rng = seeded(17);
    let draws: Vec<f64> = (0..n).map(|_| sample_horizon(gamma, &mut rng).unwrap() as f64).collect();
    let mean = draws.iter().sum::<f64>() / n as f64;
    let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    assert!((mean - mean_true).abs() < 3.0 * (var_true / n as f64).sqrt());
    // Standard error of the sample variance from the fourth central moment.
    let m4 = draws.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n as f64;
    let var_se = ((m4 - var * var) / n as f64).sqrt();
    assert!((var - var_true).abs() < 3.0 * var_se, "{var} vs {var_true}");
}

fn trajectory(features: &[Vec<f64>], raws: &[[f64; 2]], rewards: &[f64]) -> Trajectory {
    let steps = features
        .iter()
        .zip(raws)
        .zip(rewards)
        .map(|((f, &raw), &r)| TrajectoryStep {
            features: f.clone(),
            raw,
            projected: project_action(raw, 1.0),
            rewards: RewardComponents {
                total: r,
                ..Default::default()
            },
            pose: RobotPose::default(),
            cause: TerminationCause::Running,
        })
        .collect();
    Trajectory::from_steps(steps, rewards.len() as u64)
}

fn mirror(o: Obstacle) -> Obstacle {
    let flip = |p: Point| Point::new(p.x, -p.y);
    match o {
        Obstacle::Circle { center, radius } => Obstacle::Circle {
            center: flip(center),
            radius,
        },
        Obstacle::Segment { p1, p2, thickness } => Obstacle::Segment {
            p1: flip(p1),
            p2: flip(p2),
            thickness,
        },
    }
}

fn obstacle() -> impl Strategy<Value = Obstacle> {
    prop_oneof![
        (-8.0f64..8.0, -8.0f64..8.0, 0.2f64..1.5).prop_map(|(x, y, r)| Obstacle::Circle {
            center: Point::new(x, y),
            radius: r
        }),
        (-8.0f64..8.0, -8.0f64..8.0, -8.0f64..8.0, -8.0f64..8.0, 0.0f64..0.5)
            .prop_filter("distinct endpoints", |(a, b, c, d, _)| (a - c).hypot(b - d) > 0.1)
            .prop_map(|(a, b, c, d, t)| Obstacle::Segment {
                p1: Point::new(a, b),
                p2: Point::new(c, d),
                thickness: t
            }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_is_idempotent_and_bounded(a in -50.0f64..50.0, b in -50.0f64..50.0, delta in 0.01f64..5.0) {
        let once = project_action([a, b], delta);
        prop_assert_eq!(project_action(once, delta), once);
        prop_assert!(once.iter().all(|x| x.abs() <= delta));
    }

    #[test]
    fn estimate_is_linear_in_rewards(
        seed in 0u64..1000,
        rewards in prop::collection::vec(-5.0f64..5.0, 1..12),
        c in -4.0f64..4.0,
    ) {
        let mut rng = seeded(seed);
        let p = PolicyParameters::initialize(ApproximatorSpec::mlp(3, vec![5], 2), 0.25, Family::Cauchy, &mut rng).unwrap();
        let features: Vec<Vec<f64>> = (0..rewards.len()).map(|i| vec![0.1 * i as f64, -0.3, 0.7]).collect();
        let raws: Vec<[f64; 2]> = features
            .iter()
            .map(|f| p.sample_action(f, 1.0, &mut rng).unwrap().raw)
            .collect();
        let scaled: Vec<f64> = rewards.iter().map(|r| c * r).collect();
        let g = estimate_gradient(&p, &trajectory(&features, &raws, &rewards), 0.9).unwrap();
        let gc = estimate_gradient(&p, &trajectory(&features, &raws, &scaled), 0.9).unwrap();
        for (a, b) in g.iter().zip(&gc) {
            prop_assert!((c * a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn clipping_preserves_sign(g in prop::collection::vec(-1e6f64..1e6, 1..40), phi in 0.01f64..100.0) {
        for (x, y) in g.iter().zip(clip_gradient(&g, phi)) {
            prop_assert!(y.abs() <= phi);
            prop_assert!(x.signum() == y.signum() || *x == 0.0);
        }
    }

    #[test]
    fn scan_mirrors_with_layout(obstacles in prop::collection::vec(obstacle(), 1..6)) {
        let origin = Point::new(0.0, 0.0);
        prop_assume!(obstacles.iter().all(|o| o.clearance(origin) > 0.05));
        let mirrored: Vec<Obstacle> = obstacles.iter().copied().map(mirror).collect();
        let a = scan(&obstacles, origin, 0.0);
        let b = scan(&mirrored, origin, 0.0);
        for i in 0..SCAN_BEAMS {
            let j = (SCAN_BEAMS - i) % SCAN_BEAMS;
            prop_assert!((a[i] - b[j]).abs() < 1e-9, "beam {}: {} vs {}", i, a[i], b[j]);
        }
    }

    #[test]
    fn uneven_terrain_gain_is_bounded(seed in 0u64..10_000) {
        let world = generate_world(Scenario::UnevenTerrain, seed, &GenerationKnobs::default()).unwrap();
        let (lo, hi) = world.heightmap.min_max();
        prop_assert!(hi - lo <= 4.0 + 1e-9);
        prop_assert_eq!(generate_world(Scenario::UnevenTerrain, seed, &GenerationKnobs::default()).unwrap(), world);
    }
}
