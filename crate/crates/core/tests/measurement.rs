use dictcs::dictionary::dct_basis;
use dictcs::measurement::{
    chaos_second_moment, draw, empirical_chaos_second_moment, empirical_norm_concentration_grid, Ensemble,
    EnsembleKind, EnsembleSpec, DEFAULT_CONCENTRATION_C,
};
use dictcs::numerics::{norm2, RngStream};
use proptest::prelude::*;

fn unit(seed: u64, d: usize) -> Vec<f64> {
    let v = RngStream::new(seed).gaussian_vec(d);
    let n = norm2(&v);
    v.into_iter().map(|x| x / n).collect()
}

#[test]
fn transformed_bernoulli_passes_norm_suite() {
    let d = 32;
    let v = unit(11, d);
    for n in [32usize, 64, 128] {
        for (label, ensemble) in [
            ("plain", Ensemble::Bernoulli),
            (
                "transformed",
                Ensemble::BasisTransformed {
                    base: EnsembleKind::Bernoulli,
                    u: dct_basis(d),
                },
            ),
        ] {
            let spec = EnsembleSpec::new(ensemble, n, d, RngStream::new(5)).unwrap();
            let reports =
                empirical_norm_concentration_grid(&spec, &v, &[0.1, 0.2, 0.3], 4_000, DEFAULT_CONCENTRATION_C).unwrap();
            for r in reports {
                assert!(r.satisfied, "{label} n = {n}: {r:?}");
            }
        }
    }
}

#[test]
fn chaos_moment_single_pair() {
    let d = 16;
    let x = unit(1, d);
    let y: Vec<f64> = unit(2, d).iter().map(|v| 0.7 * v).collect();
    for kind in [EnsembleKind::Gaussian, EnsembleKind::Bernoulli] {
        let spec = EnsembleSpec::new(kind, 16, d, RngStream::new(9)).unwrap();
        let est = empirical_chaos_second_moment(&spec, &x, &y, 10_000).unwrap();
        let expect = chaos_second_moment(&x, &y, kind);
        assert!((est.value - expect).abs() <= 5.0 * est.std_error, "{kind:?}: {est:?} vs {expect}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn draws_are_deterministic_and_scaled(n in 1usize..12, d in 1usize..12, seed in any::<u64>()) {
        let spec = EnsembleSpec::bernoulli(n, d, seed);
        let a = draw(&spec);
        prop_assert_eq!(&a, &draw(&spec));
        let scale = 1.0 / (n as f64).sqrt();
        prop_assert!(a.as_slice().iter().all(|v| (v.abs() - scale).abs() < 1e-15));
        prop_assert_eq!(draw(&EnsembleSpec::gaussian(n, d, seed)), draw(&EnsembleSpec::gaussian(n, d, seed)));
    }

    #[test]
    fn bernoulli_moment_never_exceeds_gaussian(seed in any::<u64>(), d in 1usize..20) {
        let x = unit(seed, d);
        let y = unit(seed ^ 0x5555, d);
        prop_assert!(
            chaos_second_moment(&x, &y, EnsembleKind::Bernoulli)
                <= chaos_second_moment(&x, &y, EnsembleKind::Gaussian) + 1e-15
        );
    }
}
