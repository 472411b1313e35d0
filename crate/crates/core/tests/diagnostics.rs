mod common;

use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zonodpp::diagnostics::*;
use zonodpp::samplers::{run_chain, SamplerConfig, SamplerKind};
use zonodpp::Model64;

/// Deterministic binary chains shared with the numpy reference.
pub fn psrf_reference_input() -> Vec<Vec<f64>> {
    (0..4)
        .map(|m: usize| {
            (0..50)
                .map(|t: usize| {
                    if (m * 7 + t * 13 + (t * t) % 5) % 11 < 4 + m {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

#[test]
fn psrf_matches_reference_implementation() {
    let rep = psrf(&psrf_reference_input()).unwrap();
    assert!((rep.psrf - 1.0212090503556566).abs() < 1e-6);
    assert!((rep.between - 0.7650000000000001).abs() < 1e-9);
    assert!((rep.within - 0.2433673469387755).abs() < 1e-9);
}

#[test]
fn psrf_of_iid_bernoulli_is_near_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let chains: Vec<Vec<f64>> = (0..100)
        .map(|_| {
            (0..10_000)
                .map(|_| f64::from(u8::from(rng.random::<bool>())))
                .collect()
        })
        .collect();
    let rep = psrf(&chains).unwrap();
    assert!((1.0 - 1e-3..=1.01).contains(&rep.psrf), "{}", rep.psrf);
}

#[test]
fn brute_force_law_agrees_with_enumeration() {
    for (a, w) in [
        (fig1(), None),
        (fig1(), Some(vec![1.0, 1.0, 1.0, 4.0])),
        (k5(), None),
    ] {
        let law = enumerate_law(&a, w.as_deref()).unwrap();
        let brute = brute_law(&rows_of(&a), w.as_deref());
        assert_eq!(law.len(), brute.len());
        for (s, p) in brute {
            assert!((law.probability(&zonodpp::Basis::from_indices(s)) - p).abs() < 1e-12);
        }
    }
}

#[test]
fn inclusion_examples() {
    let law = enumerate_law(&fig1(), None).unwrap();
    assert!((law.inclusion(&[1]) - 26.0 / 35.0).abs() < 1e-12);
    assert_eq!(law.inclusion(&[]), 1.0);
    assert_eq!(law.inclusion(&[0, 1, 2]), 0.0);
}

#[test]
fn relative_error_decays_on_fig1() {
    let model = Model64::new(fig1());
    let t = run_chain(
        &SamplerConfig::new(SamplerKind::VolZonotope, 100_000, 3),
        &model,
        0,
    )
    .unwrap();
    let est = running_inclusion(&t, &[1], 0);
    let err = relative_error_trace(&est, 26.0 / 35.0).unwrap();
    assert!(*err.last().unwrap() < 0.05);
    assert!(relative_error_trace(&est, 0.0).is_err());
}

#[test]
fn decile_band_narrows_with_steps() {
    let model = Model64::new(fig1());
    let curves: Vec<Vec<f64>> = (0..30)
        .map(|c| {
            let t =
                run_chain(&SamplerConfig::new(SamplerKind::Exact, 4_000, 8), &model, c).unwrap();
            relative_error_trace(&running_inclusion(&t, &[1], 0), 26.0 / 35.0).unwrap()
        })
        .collect();
    let band = decile_band(&curves);
    let width = |b: &Band| b.high - b.low;
    assert!(width(&band[4_000]) < width(&band[100]));
    assert!(band[4_000].median < band[100].median);
}
