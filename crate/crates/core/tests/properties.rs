use proptest::prelude::*;

use lpscalar::active_scalar::velocity;
use lpscalar::cli_io::initial::random_spectrum;
use lpscalar::cli_io::snapshot::{decode_snapshot, encode_snapshot, SnapshotMeta};
use lpscalar::cli_io::{fmt_real, parse_config, Mode};
use lpscalar::function_spaces::{
    besov_norm, log_lipschitz_norm, log_lipschitz_norm_vec, BesovParams, PairSampler,
};
use lpscalar::littlewood_paley::{build_family, DyadicFamily};
use lpscalar::spectral::{gradient, inverse_transform, Grid2D, PhysicalField, SpectralField};
use lpscalar::verifier::{
    bernstein_check, commutator_residuals, embedding_check, lemma1_rhs, FAMILY_TOLERANCE,
};

fn fam(n: usize) -> (Grid2D, DyadicFamily) {
    let g = Grid2D::new(n).unwrap();
    (g, build_family(g, FAMILY_TOLERANCE).unwrap())
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn snapshots_round_trip(values in prop::collection::vec(-1e6f64..1e6, 64), beta in 0.0f64..2.0, time in 0.0f64..100.0) {
        let field = PhysicalField::new(Grid2D::new(8).unwrap(), values).unwrap();
        let meta = SnapshotMeta { beta, time };
        let bytes = encode_snapshot(&field, meta);
        prop_assert_eq!(bytes.len(), 30 + 8 * 64);
        let back = decode_snapshot(&bytes).unwrap();
        prop_assert_eq!(back.meta, meta);
        prop_assert_eq!(back.field, field);
    }

    #[test]
    fn csv_numbers_parse_back_exactly(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        prop_assert_eq!(fmt_real(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
    }

    #[test]
    fn out_of_range_beta_is_rejected(beta in prop_oneof![-10.0f64..-1e-9, 2.0000001f64..10.0]) {
        let err = parse_config(r#"{"n": 32, "t_end": 1}"#, Some(Mode::Simulate), &[format!("beta={beta}")]).unwrap_err();
        prop_assert!(err.to_string().contains("`beta`"));
    }

    #[test]
    fn besov_norm_is_absolutely_homogeneous(seed in 0u64..1000, lambda in -8.0f64..8.0, s in -1.0f64..3.0) {
        let (g, fam) = fam(32);
        let theta = random_spectrum(g, 2.0, 10, 1.0, seed);
        for (p, q) in [(2.0, 1.0), (1.0, 2.0), (f64::INFINITY, f64::INFINITY)] {
            let prm = BesovParams::new(s, p, q).unwrap();
            let a = besov_norm(&theta, prm, &fam).total;
            let b = besov_norm(&theta.scaled(lambda), prm, &fam).total;
            prop_assert!(close(b, lambda.abs() * a, 1e-12));
        }
    }

    #[test]
    fn log_lipschitz_norm_is_homogeneous(seed in 0u64..1000, lambda in 0.1f64..10.0) {
        let (g, _) = fam(32);
        let f = inverse_transform(&random_spectrum(g, 3.0, 10, 1.0, seed)).unwrap();
        let scaled = PhysicalField::new(g, f.values().iter().map(|v| lambda * v).collect()).unwrap();
        let sampler = PairSampler::new(seed, 2048);
        let a = log_lipschitz_norm(&f, 0.0, sampler).unwrap();
        let b = log_lipschitz_norm(&scaled, 0.0, sampler).unwrap();
        prop_assert!(close(b, lambda * a, 1e-13));
    }

    #[test]
    fn velocity_is_divergence_free(seed in 0u64..1000, beta in 0.0f64..2.0) {
        let g = Grid2D::new(64).unwrap();
        let (u1, u2) = velocity(&random_spectrum(g, 3.0, 21, 1.0, seed), beta).unwrap();
        let (d1, _) = gradient(&u1);
        let (_, d2) = gradient(&u2);
        prop_assert!(inverse_transform(&(&d1 + &d2)).unwrap().max_abs() <= 1e-13);
    }

    #[test]
    fn verification_ratios_are_scale_invariant(seed in 0u64..1000, lambda in 0.05f64..20.0, beta in 1.0f64..2.0) {
        let (g, fam) = fam(32);
        let theta = random_spectrum(g, 3.0, 10, 1.0, seed);
        let scaled = theta.scaled(lambda);

        let a = bernstein_check(&theta, beta, &fam).unwrap().ratio;
        let b = bernstein_check(&scaled, beta, &fam).unwrap().ratio;
        prop_assert!(close(a, b, 1e-12));

        let sampler = PairSampler::new(seed, 1024);
        let (ua1, ua2) = velocity(&theta, beta).unwrap();
        let (ub1, ub2) = velocity(&scaled, beta).unwrap();
        let a = embedding_check(&[ua1, ua2], 2.0, 1.0, sampler, &fam).unwrap().2;
        let b = embedding_check(&[ub1, ub2], 2.0, 1.0, sampler, &fam).unwrap().2;
        prop_assert!(close(a, b, 1e-12));

        let ll = |t: &SpectralField| {
            let (v1, v2) = velocity(t, beta).unwrap();
            let comps = [inverse_transform(&v1).unwrap(), inverse_transform(&v2).unwrap()];
            log_lipschitz_norm_vec(&comps, 0.0, sampler).unwrap()
        };
        let (lla, llb) = (ll(&theta), ll(&scaled));
        let ra = commutator_residuals(&theta, beta, 2.0, &fam).unwrap();
        let rb = commutator_residuals(&scaled, beta, 2.0, &fam).unwrap();
        let mut ratios = Vec::new();
        for ((j, x), (_, y)) in ra.iter().zip(&rb) {
            let bound_a = lemma1_rhs(&theta, lla, *j, 2.0, f64::INFINITY, 4, &fam).unwrap();
            let bound_b = lemma1_rhs(&scaled, llb, *j, 2.0, f64::INFINITY, 4, &fam).unwrap();
            if bound_a > 0.0 {
                ratios.push((x / bound_a, y / bound_b));
            }
        }
        let max_a = ratios.iter().fold(0.0f64, |m, r| m.max(r.0));
        let max_b = ratios.iter().fold(0.0f64, |m, r| m.max(r.1));
        prop_assert!(close(max_a, max_b, 1e-11));
        for (x, y) in ratios {
            prop_assert!((x - y).abs() <= 1e-11 * max_a);
        }
    }
}
