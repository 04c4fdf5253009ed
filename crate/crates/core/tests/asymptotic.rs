use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use moebiuskit::asymptotic::{trace_asymptotic, HeightGrid, RandomDevelopable, StopReason, SurfacePatch};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn developable_traces_are_straight(seed in any::<u64>(), r in 0.0..0.4f64, a in 0.0..std::f64::consts::TAU) {
        let surf = RandomDevelopable::random(&mut ChaCha8Rng::seed_from_u64(seed));
        let tr = trace_asymptotic(&surf.patch(1e-4), [r * a.cos(), r * a.sin()], 0.01, 0.5).unwrap();
        prop_assert!(tr.chord_deviation() < 1e-6, "{surf:?}: {}", tr.chord_deviation());
        prop_assert!(tr.normal_spread() < 1e-6);
        prop_assert!(tr.length > 0.0);
    }
}

#[test]
fn traces_stop_at_the_patch_boundary() {
    let surf = RandomDevelopable::Cylinder { a: 0.4, b: 0.0, c: 1.0, theta: 0.3 };
    let tr = trace_asymptotic(&surf.patch(1e-4), [0.0, 0.0], 0.01, 10.0).unwrap();
    assert_eq!(tr.stop, StopReason::Boundary);
    assert!(tr.length < 2.0);
}

#[test]
fn grid_patch_survives_csv_round_trip() {
    let grid = HeightGrid::sample(|_, y| 0.5 * y * y, -1.0, -1.0, 0.05, 41, 41);
    let back = HeightGrid::from_csv(&grid.to_csv()).unwrap();
    assert_eq!((back.nx, back.ny), (41, 41));
    assert!((back.spacing - 0.05).abs() < 1e-12);
    let patch = SurfacePatch::from_grid(back).unwrap();
    let tr = trace_asymptotic(&patch, [0.1, 0.1], 0.01, 0.5).unwrap();
    // Grid interpolation keeps the rulings straight to interpolation accuracy.
    assert!(tr.chord_deviation() < 1e-3, "{}", tr.chord_deviation());
    assert!(tr.points.iter().all(|p| (p.y - 0.1).abs() < 1e-3));
}
