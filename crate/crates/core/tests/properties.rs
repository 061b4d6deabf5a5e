mod common;

use proptest::prelude::*;
use uav_secrecy::analytic::{delta_max_strong, EveMode, NomaConfig, StrongLink};
use uav_secrecy::distributions::ordered_cdf_value;
use uav_secrecy::geometry::{angle_range, zone_area, ProtectedZone, ZoneKind};
use uav_secrecy::montecarlo::{evaluate_trial, Deployment};
use uav_secrecy::propagation::{fejer_gain, GainKernel, LinkGeometry, RfConfig};

fn kind() -> impl Strategy<Value = ZoneKind> {
    prop::sample::select(ZoneKind::ALL.to_vec())
}

fn link() -> impl Strategy<Value = LinkGeometry> {
    (-0.15f64..0.15, 5.0f64..150.0, 0.0f64..6.0).prop_map(|(theta, distance, fading)| LinkGeometry {
        theta,
        distance,
        fading,
    })
}

fn log2(x: f64) -> f64 {
    x.ln_1p() / std::f64::consts::LN_2
}

proptest! {
    #[test]
    fn fraction_round_trips(kind in kind(), q in 0.001f64..0.3, t in 0.0f64..=1.0, kappa in 1.5f64..4.0) {
        let reg = common::region(kappa);
        if let Some((lo, hi)) = angle_range(kind, q, &reg).unwrap() {
            let zone = ProtectedZone::with_fraction(kind, lo + t * (hi - lo), q, &reg).unwrap();
            prop_assert!((zone.fraction(&reg) / q - 1.0).abs() < 1e-10);
            prop_assert!((0.0..=1.0).contains(&zone.fraction(&reg)));
        }
    }

    #[test]
    fn area_grows_with_angle_and_radius(kind in kind(), s in 0.0f64..1.0, t in 0.0f64..1.0, ds in 0.0f64..0.2, dt in 0.0f64..0.2) {
        let reg = common::region(3.0);
        let (a0, a1) = kind.angle_bounds(&reg);
        let (r0, r1) = kind.radius_bounds(&reg);
        let at = |s: f64, t: f64| {
            let zone = ProtectedZone::new(kind, a0 + s.min(1.0) * (a1 - a0), r0 + t.min(1.0) * (r1 - r0), &reg).unwrap();
            zone_area(&zone, &reg).unwrap()
        };
        let base = at(s, t);
        prop_assert!(at(s + ds, t) >= base - 1e-9);
        prop_assert!(at(s, t + dt) >= base - 1e-9);
    }

    #[test]
    fn ordered_cdf_is_a_cdf_ranked_by_strength(f in 0.0f64..=1.0, df in 0.0f64..0.5, population in 1usize..40) {
        let g = (f + df).min(1.0);
        let mut previous = 0.0;
        for rank in 1..=population {
            let v = ordered_cdf_value(f, rank, population);
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert!(ordered_cdf_value(g, rank, population) >= v - 1e-12);
            // rank 1 is the strongest, so its CDF is the smallest
            prop_assert!(v >= previous - 1e-12);
            previous = v;
        }
    }

    #[test]
    fn kernel_bound_dominates_gain(theta in -0.5f64..0.5, d in 0.0f64..200.0, h in 10.0f64..100.0) {
        let rf = RfConfig { altitude_m: h, ..RfConfig::default() };
        let kernel = GainKernel::new(&rf);
        prop_assert!(kernel.mean_gain_bound(theta, d * d) >= kernel.mean_gain(theta, d * d) * (1.0 - 1e-12));
    }

    #[test]
    fn fejer_is_even_and_bounded(theta in -3.0f64..3.0, antennas in 1u32..200) {
        let g = fejer_gain(0.0, theta, antennas);
        prop_assert!((g - fejer_gain(0.0, -theta, antennas)).abs() <= 1e-9 * g.max(1.0));
        prop_assert!(g >= 0.0 && g <= antennas as f64 * (1.0 + 1e-12));
    }

    #[test]
    fn strong_threshold_rises_with_eve_gain(y in 0.0f64..1e-9, dy in 0.0f64..1e-9, p in -20.0f64..50.0) {
        let rf = RfConfig { tx_power_dbm: p, ..RfConfig::default() };
        let cfg = NomaConfig::default();
        for link in [StrongLink::Noma(EveMode::WorstCase), StrongLink::Noma(EveMode::BestCase), StrongLink::Sut] {
            let rho = rf.snr_scale();
            prop_assert!(delta_max_strong(y + dy, rho, &cfg, link) >= delta_max_strong(y, rho, &cfg, link));
        }
    }

    #[test]
    fn trial_rates_lie_between_zero_and_eve_free_rate(
        users in prop::collection::vec(link(), 1..14),
        eves in prop::collection::vec(link(), 1..5),
        p in -20.0f64..50.0,
    ) {
        let rf = RfConfig { tx_power_dbm: p, ..RfConfig::default() };
        let cfg = NomaConfig::default();
        let rho = rf.snr_scale();
        let dep = Deployment { users, eves };
        for mode in [EveMode::WorstCase, EveMode::BestCase] {
            let out = evaluate_trial(&dep, &cfg, &rf, mode).unwrap();
            prop_assert!(out.user_gains.windows(2).all(|w| w[0] >= w[1]));
            let gj = out.user_gains[cfg.strong_rank - 1];
            if let Some(s) = out.strong {
                let power = if out.weak.is_some() { cfg.strong_power } else { 1.0 };
                prop_assert!(s.secrecy_rate >= 0.0);
                prop_assert!(s.secrecy_rate <= log2(rho * gj * power) + 1e-12);
            }
            if let Some(w) = out.weak {
                let gi = out.user_gains[cfg.weak_rank - 1];
                prop_assert!(w.secrecy_rate >= 0.0);
                let own = log2(rho * gi * cfg.weak_power / (rho * gi * cfg.strong_power + 1.0));
                prop_assert!(w.secrecy_rate <= own + 1e-12);
                // the decoding-chain minimum collapses to the weak user's own SINR
                let y = out.eve_gain;
                let eve = log2(rho * y * cfg.weak_power / (rho * y * cfg.strong_power + 1.0));
                prop_assert!((w.secrecy_rate - (own - eve).max(0.0)).abs() <= 1e-9);
            }
            prop_assert!(out.rate >= 0.0 && out.oma_rate >= 0.0);
        }
    }
}
