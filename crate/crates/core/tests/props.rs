//! Property tests for the module invariants that hold on all inputs.

use ntklab_core::dataset::{gen_random_sphere, Dataset, LabelMode};
use ntklab_core::kernel::{self, KernelMatrix, Provenance};
use ntklab_core::linalg::{norm2, Mat};
use ntklab_core::margin::{cos_sum, vbar_eval, VBarMap};
use proptest::prelude::*;

fn finite_unit_range() -> impl Strategy<Value = f64> {
    (-3.0f64..3.0).prop_filter("nonzero", |v| v.abs() > 1e-6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn circle_map_stays_in_ball_and_is_homogeneous(
        zx in finite_unit_range(),
        zy in finite_unit_range(),
        n_quarter in 1usize..32,
        c in prop_oneof![Just(0.1f64), Just(10.0)],
    ) {
        let map = VBarMap::circle_rz(4 * n_quarter).unwrap();
        let z = [zx, zy];
        let v = vbar_eval(&map, &z).unwrap();
        prop_assert!(norm2(&v) <= 1.0 + 1e-12);
        let zc = [zx * c, zy * c];
        let vc = vbar_eval(&map, &zc).unwrap();
        for (a, b) in v.iter().zip(&vc) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn natural_v0_stays_in_ball(
        zs in prop::collection::vec(finite_unit_range(), 3),
        seed in 0u64..500,
    ) {
        let ds = gen_random_sphere(6, 3, LabelMode::RandomSigns, seed).unwrap();
        let map = VBarMap::natural_v0(&ds);
        let v = vbar_eval(&map, &zs).unwrap();
        prop_assert!(norm2(&v) <= 1.0 + 1e-12);
    }

    #[test]
    fn cos_sum_closed_form_matches_direct_sum(
        a in -6.0f64..6.0,
        b in -3.0f64..3.0,
        nt in 1usize..50,
    ) {
        prop_assume!((b / 2.0).sin().abs() > 1e-3);
        let direct: f64 = (0..nt).map(|k| (a + k as f64 * b).cos()).sum();
        let closed = cos_sum(a, b, nt).unwrap();
        prop_assert!((direct - closed).abs() < 1e-9, "direct {direct} closed {closed}");
    }

    #[test]
    fn min_eig_shifts_with_the_diagonal(
        seed in 0u64..200,
        shift in -0.5f64..0.5,
    ) {
        let ds = gen_random_sphere(5, 3, LabelMode::RandomSigns, seed).unwrap();
        let k = kernel::h_cts(&ds).unwrap();
        let base = kernel::min_eig(&k).unwrap();
        let mut shifted = k.clone();
        for i in 0..5 {
            let v = shifted.entries.get(i, i) + shift;
            shifted.entries.set(i, i, v);
        }
        let moved = kernel::min_eig(&shifted).unwrap();
        prop_assert!((moved - (base + shift)).abs() < 1e-9);
    }

    #[test]
    fn h_dis_is_invariant_under_pair_duplication(
        seed in 0u64..200,
        half_rows in 1usize..24,
    ) {
        let ds = gen_random_sphere(5, 3, LabelMode::RandomSigns, seed).unwrap();
        let mut rng = ntklab_core::rng::substream(seed, &[7]);
        let mut half = Mat::zeros(half_rows, 3);
        for r in 0..half_rows {
            let row = ntklab_core::rng::gaussian_vec(&mut rng, 3);
            half.row_mut(r).copy_from_slice(&row);
        }
        let mut doubled = Mat::zeros(2 * half_rows, 3);
        for r in 0..half_rows {
            doubled.row_mut(2 * r).copy_from_slice(half.row(r));
            doubled.row_mut(2 * r + 1).copy_from_slice(half.row(r));
        }
        let a = kernel::h_dis(&ds, &half).unwrap();
        let b = kernel::h_dis(&ds, &doubled).unwrap();
        prop_assert_eq!(a.entries.data, b.entries.data);
    }

    #[test]
    fn dataset_json_round_trips_exactly(
        n in 1usize..12,
        d in 1usize..6,
        seed in 0u64..500,
    ) {
        let ds = gen_random_sphere(n, d, LabelMode::RandomSigns, seed).unwrap();
        let back = Dataset::from_json(&ds.to_json()).unwrap();
        prop_assert_eq!(ds, back);
    }

    #[test]
    fn symmetric_matrices_keep_min_eig_under_transpose_noise(
        seed in 0u64..200,
    ) {
        // matrices asymmetric beyond the guard are rejected
        let ds = gen_random_sphere(4, 3, LabelMode::RandomSigns, seed).unwrap();
        let k = kernel::h_cts(&ds).unwrap();
        let mut bad = KernelMatrix {
            entries: k.entries.clone(),
            provenance: Provenance::Dis,
            min_eig_cache: None,
        };
        bad.entries.set(0, 1, bad.entries.get(0, 1) + 1e-4);
        prop_assert!(kernel::min_eig(&bad).is_err());
    }
}
