use leosm::modem::{ConstellationKind, SchemeConfig};
use leosm::montecarlo::{run_sweep, SweepConfig};
use leosm::report::detector_oracle_mismatches;
use proptest::prelude::*;

fn schemes() -> Vec<SchemeConfig> {
    vec![
        SchemeConfig::sm(4, 4, 2),
        SchemeConfig::ssk(16, 2),
        SchemeConfig::trad(16, 2).with_constellation(ConstellationKind::Qam),
        SchemeConfig::sm(2, 2, 1),
    ]
}

/// With perfect CSI the BER must not rise with SNR beyond sampling noise.
#[test]
fn perfect_csi_ber_is_monotone() {
    for (k, scheme) in schemes().into_iter().enumerate() {
        let grid: Vec<f64> = (0..6).map(|i| 4.0 * i as f64).collect();
        let r = run_sweep(&SweepConfig::new(scheme, grid, 20_000, 500 + k as u64)).unwrap();
        for w in r.points.windows(2) {
            let slack = 3.0 * (w[0].std_error().powi(2) + w[1].std_error().powi(2)).sqrt();
            assert!(
                w[1].ber <= w[0].ber + slack,
                "{scheme:?}: BER {} at {} dB above {} at {} dB",
                w[1].ber,
                w[1].snr_db,
                w[0].ber,
                w[0].snr_db
            );
        }
        assert!(r.points[0].ber > r.points[5].ber);
    }
}

#[test]
fn csi_error_raises_the_floor() {
    let run = |delta: f64| {
        let mut cfg = SweepConfig::new(SchemeConfig::sm(4, 4, 2), vec![30.0], 20_000, 600);
        cfg.delta_e2_sq = delta;
        run_sweep(&cfg).unwrap().points[0].ber
    };
    let (a, b, c) = (run(0.0), run(0.2), run(0.5));
    assert!(a < b && b < c, "{a} {b} {c}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn detector_matches_oracle(
        nt_log in 1u32..4,
        m_log in 1u32..4,
        nr in 1usize..4,
        snr in -5.0f64..25.0,
        seed in any::<u64>(),
        ssk in any::<bool>(),
    ) {
        let nt = 1usize << nt_log;
        let cfg = if ssk { SchemeConfig::ssk(nt, nr) } else { SchemeConfig::sm(nt, 1 << m_log, nr) };
        prop_assert_eq!(detector_oracle_mismatches(&cfg, snr, 50, seed).unwrap(), 0);
    }

    #[test]
    fn noiseless_runs_are_error_free(seed in any::<u64>(), ssk in any::<bool>()) {
        let scheme = if ssk { SchemeConfig::ssk(8, 2) } else { SchemeConfig::sm(4, 4, 2) };
        let mut cfg = SweepConfig::new(scheme, vec![10.0], 200, seed);
        cfg.noiseless = true;
        prop_assert_eq!(run_sweep(&cfg).unwrap().points[0].bit_errors, 0);
    }
}
