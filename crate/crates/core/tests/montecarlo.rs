mod common;

use common::ks;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use uav_secrecy::analytic::{Analytic, EveMode, StrongLink};
use uav_secrecy::geometry::{min_angle_zone, ProtectedZone};
use uav_secrecy::montecarlo::{draw_deployment, simulate, simulate_stratum};
use uav_secrecy::scenario::Scenario;

fn scenario(altitude_m: f64, ptx_dbm: f64) -> Scenario {
    let mut scn = Scenario::reference(altitude_m, 3.0).unwrap().with_power(ptx_dbm);
    scn.rf.apply_antenna_gain = true;
    scn
}

#[test]
fn deployments_follow_the_point_process() {
    let scn = scenario(20.0, 45.0);
    let zone = min_angle_zone(0.2, &scn.region).unwrap();
    let pop = scn.population(&zone).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let (mut users, mut eves, mut radii) = (0usize, Vec::new(), Vec::new());
    let draws = 100_000;
    for _ in 0..draws {
        let dep = draw_deployment(&scn.region, &zone, &pop, &mut rng);
        users += dep.users.len();
        radii.extend(dep.users.iter().map(|u| u.distance));
        if eves.len() < 1_000_000 {
            eves.extend(dep.eves);
        }
    }
    let mean = users as f64 / draws as f64;
    assert!(
        (mean / pop.mean_users - 1.0).abs() < 0.01,
        "{mean} vs {}",
        pop.mean_users
    );

    assert!(eves.len() >= 1_000_000);
    assert!(eves.iter().all(|e| !zone.contains(e.theta, e.distance, &scn.region)));

    radii.truncate(1_000_000);
    let (lo, hi) = (scn.region.inner_radius(), scn.region.user_radius());
    let d = ks(radii, |r| (r * r - lo * lo) / (hi * hi - lo * lo));
    assert!(d <= 0.005, "KS {d}");
}

#[test]
fn stratum_outage_matches_analytic() {
    let scn = scenario(20.0, 0.0);
    let zone = min_angle_zone(0.2, &scn.region).unwrap();
    let tables = scn.tables().unwrap();
    let eve = tables.eve(&zone).unwrap();
    let sim = simulate_stratum(&scn, &zone, 10, 3, 1_000_000, 5).unwrap();
    let analytic = Analytic::new(tables.user(), &eve, scn.rf.snr_scale(), scn.noma).unwrap();
    for mode in [EveMode::WorstCase, EveMode::BestCase] {
        let m = sim.mode(mode);
        let strong = analytic.outage_strong(10, 3, StrongLink::Noma(mode)).unwrap();
        assert!(
            (m.p_strong.mean - strong).abs() <= 0.01,
            "{mode:?}: {} vs {strong}",
            m.p_strong.mean
        );
        assert!((m.p_strong.mean - strong).abs() <= 3.0 * m.p_strong.half_width.max(1e-4));
    }
    let weak = analytic.outage_weak(10, 3).unwrap();
    let m = sim.mode(EveMode::WorstCase);
    assert!(
        (m.p_weak.mean - weak).abs() <= 3.0 * m.p_weak.half_width,
        "{} vs {weak}",
        m.p_weak.mean
    );
}

#[test]
fn half_width_shrinks_like_root_trials() {
    let scn = scenario(20.0, 0.0);
    let zone = min_angle_zone(0.2, &scn.region).unwrap();
    let small = simulate(&scn, &zone, 40_000, 3).unwrap();
    let large = simulate(&scn, &zone, 80_000, 3).unwrap();
    let ratio = large.worst.total.half_width / small.worst.total.half_width;
    assert!((ratio * 2f64.sqrt() - 1.0).abs() < 0.1, "ratio {ratio}");
}

#[test]
fn single_trial_is_reproducible() {
    let scn = scenario(50.0, 10.0);
    let zone = min_angle_zone(0.05, &scn.region).unwrap();
    let a = simulate(&scn, &zone, 1, 99).unwrap();
    assert_eq!(a, simulate(&scn, &zone, 1, 99).unwrap());
}

#[test]
fn saturated_rate_near_four_bpcu() {
    let scn = scenario(20.0, 45.0);
    let zone = min_angle_zone(0.2, &scn.region).unwrap();
    let total = simulate(&scn, &zone, 100_000, 4).unwrap().worst.total.mean;
    assert!((3.5..=4.0).contains(&total), "{total}");
}

#[test]
fn hybrid_beats_time_split_at_fifty_meters() {
    let scn = scenario(50.0, 45.0);
    let zone = min_angle_zone(0.2, &scn.region).unwrap();
    let sim = simulate(&scn, &zone, 100_000, 6).unwrap();
    assert!(
        sim.oma.mean <= sim.worst.total.mean,
        "{} vs {}",
        sim.oma.mean,
        sim.worst.total.mean
    );
}

#[test]
fn removing_the_zone_never_helps() {
    for (h, p) in [(20.0, 0.0), (20.0, 45.0), (50.0, 45.0)] {
        let scn = scenario(h, p);
        let zoned = simulate(&scn, &min_angle_zone(0.2, &scn.region).unwrap(), 50_000, 8).unwrap();
        let open = simulate(&scn, &ProtectedZone::none(&scn.region), 50_000, 8).unwrap();
        for mode in [EveMode::WorstCase, EveMode::BestCase] {
            let (z, o) = (zoned.mode(mode), open.mode(mode));
            assert!(o.total.mean <= z.total.mean, "h={h} P={p} {mode:?}");
            assert!(o.noma.mean <= z.noma.mean);
            assert!(o.p_strong.mean >= z.p_strong.mean);
        }
    }
}
