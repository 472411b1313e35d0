mod common;

use std::collections::HashMap;

use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zonodpp::zonotope::{extract_basis, tile_offset, tile_point, TileExtractor};
use zonodpp::{Error, FeatureMatrix64, TilingObjective64, Zonotope64};

fn round_trip_failures(
    a: &FeatureMatrix64,
    objective_seed: u64,
    per_basis: usize,
) -> (usize, usize) {
    let c = TilingObjective64::gaussian(a.len(), objective_seed);
    let mut ex = TileExtractor::new(a.clone(), c.clone()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut failures, mut total) = (0, 0);
    for b in a.enumerate_bases(1_000_000).unwrap() {
        let xi = tile_offset(a, &c, &b).unwrap();
        for _ in 0..per_basis {
            let u: Vec<f64> = (0..b.len())
                .map(|_| rng.random_range(0.001..0.999))
                .collect();
            let x = tile_point(a, &b, &xi, &u).unwrap();
            total += 1;
            match ex.extract(&x) {
                Ok(t) if t.basis == b && t.offset == xi => {
                    assert!(t.coords.iter().zip(&u).all(|(p, q)| (p - q).abs() < 1e-8));
                }
                _ => failures += 1,
            }
        }
    }
    (failures, total)
}

#[test]
fn chord_from_vertex_along_first_axis() {
    // the origin is a vertex of Z(A); the horizontal chord is u·(1, 0)
    let z = Zonotope64::new(fig1());
    let ch = z.chord(&[0.0, 0.0], &[1.0, 0.0], None).unwrap();
    assert!(ch.alpha_min.abs() < 1e-12);
    assert!((ch.alpha_max - 1.0).abs() < 1e-12);
}

#[test]
fn chord_through_interior_point() {
    // x = (1, 2) = A·½; the line y = 2 meets Z(A) for first coordinate in [-1, 3]
    let z = Zonotope64::new(fig1());
    let ch = z.chord(&[1.0, 2.0], &[1.0, 0.0], None).unwrap();
    assert!((ch.alpha_min + 2.0).abs() < 1e-10);
    assert!((ch.alpha_max - 2.0).abs() < 1e-10);
    assert!(z.contains(&ch.point_at(ch.alpha_max)).unwrap());
    assert!(!z.contains(&ch.point_at(ch.alpha_max + 1e-6)).unwrap());
}

#[test]
fn chord_from_outside_is_rejected() {
    let z = Zonotope64::new(fig1());
    assert_eq!(
        z.chord(&[-5.0, 1.0], &[1.0, 0.0], None),
        Err(Error::NotInZonotope)
    );
}

#[test]
fn bounding_box_and_membership() {
    let z = Zonotope64::new(fig1());
    assert_eq!(z.bounding_box(), (vec![-1.0, 0.0], vec![3.0, 4.0]));
    assert!(z.contains(&[1.0, 2.0]).unwrap());
    assert!(!z.contains(&[3.0, 0.0]).unwrap());
}

#[test]
fn tiling_round_trip_fig1_and_k5() {
    for a in [fig1(), k5()] {
        let (failures, total) = round_trip_failures(&a, 5, 100);
        assert_eq!(failures, 0, "{failures} of {total}");
    }
}

#[test]
fn rejection_sampled_tiles_follow_volumes() {
    let a = fig1();
    let z = Zonotope64::new(a.clone());
    let c = TilingObjective64::gaussian(4, 21);
    let mut ex = TileExtractor::new(a.clone(), c).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut freq: HashMap<Vec<usize>, f64> = HashMap::new();
    let n = 10_000;
    let mut kept = 0;
    while kept < n {
        let x = [rng.random_range(-1.0..3.0), rng.random_range(0.0..4.0)];
        if !z.contains(&x).unwrap() {
            continue;
        }
        kept += 1;
        *freq
            .entry(ex.extract(&x).unwrap().basis.indices().to_vec())
            .or_default() += 1.0 / n as f64;
    }
    let law: Vec<(Vec<usize>, f64)> = subsets(4, 2)
        .into_iter()
        .zip([1.0, 2.0, 1.0, 4.0, 3.0, 2.0])
        .map(|(s, v)| (s, v / 13.0))
        .collect();
    let tv = tv_against(&freq, &law);
    assert!(tv < 0.02, "tv {tv}");
}

#[test]
fn monte_carlo_volume_of_fig1() {
    let z = Zonotope64::new(fig1());
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (v, se) = z.monte_carlo_volume(20_000, &mut rng).unwrap();
    assert!((v - 13.0).abs() < 3.0 * se, "{v} ± {se}");
}

#[test]
fn extraction_outside_is_rejected() {
    let c = TilingObjective64::gaussian(4, 1);
    assert!(matches!(
        extract_basis(&fig1(), &c, &[10.0, 10.0]),
        Err(Error::NotInZonotope)
    ));
}

#[test]
fn f32_extraction_round_trip() {
    let a = fig1().cast::<f32>();
    let c = zonodpp::zonotope::TilingObjective::<f32>::gaussian(4, 9);
    for b in a.enumerate_bases(100).unwrap() {
        let xi = tile_offset(&a, &c, &b).unwrap();
        let x = tile_point(&a, &b, &xi, &[0.3, 0.6]).unwrap();
        assert_eq!(extract_basis(&a, &c, &x).unwrap().basis, b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chord_is_symmetric_under_reversal(
        u in prop::collection::vec(0.0f64..1.0, 10),
        d in prop::collection::vec(-1.0f64..1.0, 4),
    ) {
        prop_assume!(d.iter().map(|v| v * v).sum::<f64>() > 1e-3);
        let a = k5();
        let z = Zonotope64::new(a.clone());
        let x = a.apply(&u).unwrap();
        let neg: Vec<f64> = d.iter().map(|v| -v).collect();
        let fwd = z.chord(&x, &d, None).unwrap();
        let back = z.chord(&x, &neg, None).unwrap();
        prop_assert!((fwd.alpha_max + back.alpha_min).abs() < 1e-8);
        prop_assert!((fwd.alpha_min + back.alpha_max).abs() < 1e-8);
        prop_assert!(fwd.alpha_min <= 0.0 && fwd.alpha_max >= 0.0);
        let mid = fwd.point_at(0.5 * (fwd.alpha_min + fwd.alpha_max));
        prop_assert!(z.contains(&mid).unwrap());
    }

    #[test]
    fn warm_and_cold_extraction_agree(
        us in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 10), 1..20),
        seed in any::<u64>(),
    ) {
        let a = k5();
        let c = TilingObjective64::gaussian(10, seed);
        let mut warm = TileExtractor::new(a.clone(), c.clone()).unwrap();
        for u in us {
            let x = a.apply(&u).unwrap();
            let cold = extract_basis(&a, &c, &x);
            let hot = warm.extract(&x);
            match (cold, hot) {
                (Ok(p), Ok(q)) => {
                    prop_assert_eq!(p.basis, q.basis);
                    prop_assert_eq!(p.offset, q.offset);
                }
                (Err(Error::TilingTie { .. }), _) | (_, Err(Error::TilingTie { .. })) => {}
                (p, q) => prop_assert!(false, "{:?} vs {:?}", p.err(), q.err()),
            }
        }
    }
}
