use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uav_secrecy::geometry::{angle_range, min_angle_zone, ProtectedZone, ZoneKind};
use uav_secrecy::optimizer::{optimize_shape, sweep, Axis, Evaluator, ZoneRule};
use uav_secrecy::scenario::Scenario;

fn scenario(altitude_m: f64) -> Scenario {
    let mut scn = Scenario::reference(altitude_m, 3.0).unwrap();
    scn.rf.apply_antenna_gain = true;
    scn
}

#[test]
fn optimum_beats_random_shapes_and_survives_refinement() {
    let scn = scenario(20.0);
    let tables = scn.tables().unwrap();
    let q = 0.03;
    let coarse = optimize_shape(&scn, &tables, q, Evaluator::Analytic, 32).unwrap();
    let fine = optimize_shape(&scn, &tables, q, Evaluator::Analytic, 64).unwrap();
    assert!((coarse.best.objective - fine.best.objective).abs() <= 0.02);

    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut tried = 0;
    while tried < 20 {
        let kind = ZoneKind::ALL[rng.random_range(0..3)];
        let Some((lo, hi)) = angle_range(kind, q, &scn.region).unwrap() else {
            continue;
        };
        let zone = ProtectedZone::with_fraction(kind, rng.random_range(lo..=hi), q, &scn.region).unwrap();
        let rate = scn.analytic(&tables, &zone).unwrap().total;
        // the grid optimum may miss the continuous one by less than a grid step
        assert!(
            coarse.best.objective >= rate - 0.02,
            "{kind:?} {:.4}: {rate}",
            zone.half_angle
        );
        tried += 1;
    }
}

#[test]
fn shape_advantage_fades_as_the_zone_grows() {
    let scn = scenario(20.0);
    let qs = [0.03, 0.2];
    let optimal = sweep(
        &scn,
        Axis::Q,
        &qs,
        0.0,
        ZoneRule::Optimal { resolution: 32 },
        Evaluator::Analytic,
    )
    .unwrap();
    let narrow = sweep(&scn, Axis::Q, &qs, 0.0, ZoneRule::MinAngle, Evaluator::Analytic).unwrap();
    let diff: Vec<f64> = optimal
        .iter()
        .zip(&narrow)
        .map(|(o, n)| o.evaluation.as_ref().unwrap().total - n.evaluation.as_ref().unwrap().total)
        .collect();
    assert!(diff.iter().all(|&d| d >= 0.0));
    assert!(diff[1] <= diff[0], "{diff:?}");
}

#[test]
fn higher_altitude_never_helps() {
    for q in [0.05, 0.2] {
        for p in [0.0, 45.0] {
            let rates: Vec<f64> = [20.0, 50.0]
                .iter()
                .map(|&h| {
                    let scn = scenario(h).with_power(p);
                    let zone = min_angle_zone(q, &scn.region).unwrap();
                    scn.analytic(&scn.tables().unwrap(), &zone).unwrap().total
                })
                .collect();
            assert!(rates[1] <= rates[0], "q={q} P={p}: {rates:?}");
        }
    }
}

#[test]
fn singleton_sweep_equals_direct_evaluation() {
    let scn = scenario(50.0);
    let zone = min_angle_zone(0.1, &scn.region).unwrap();
    let direct = scn.analytic(&scn.tables().unwrap(), &zone).unwrap().total;
    let record = &sweep(&scn, Axis::Q, &[0.1], 0.0, ZoneRule::MinAngle, Evaluator::Analytic).unwrap()[0];
    assert_eq!(record.evaluation.as_ref().unwrap().total, direct);
}
