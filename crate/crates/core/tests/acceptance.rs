//! Acceptance criteria 1 to 9. Runs without the libtest harness and prints
//! one PASS/FAIL line per criterion; exits nonzero if any fails.

mod common;

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use uav_secrecy::analytic::EveMode;
use uav_secrecy::config::{ConfigFile, ExperimentKind, Resolved};
use uav_secrecy::distributions::{ordered_user_cdf, GainTables};
use uav_secrecy::experiment::{self, validation_gaps};
use uav_secrecy::geometry::{angle_range, min_angle_zone, zone_area, ProtectedZone, ZoneKind};
use uav_secrecy::optimizer::{optimize_shape, sweep, Axis, Evaluator, Regime, SweepRecord, ZoneRule};
use uav_secrecy::propagation::fejer_gain;
use uav_secrecy::quadrature::integrate;
use uav_secrecy::Result;

type Outcome = Result<(bool, String)>;
type Criterion = (&'static str, fn() -> Outcome);

fn preset(name: &str) -> Resolved {
    ConfigFile {
        preset: Some(name.into()),
        ..ConfigFile::default()
    }
    .resolve()
    .expect("preset resolves")
}

fn power_sweep(res: &Resolved, q: f64) -> Result<Vec<SweepRecord>> {
    sweep(
        &res.scenario,
        Axis::PtxDbm,
        &res.plan.ptx_values_dbm,
        q,
        ZoneRule::MinAngle,
        Evaluator::Analytic,
    )
}

fn total(r: &SweepRecord) -> f64 {
    r.evaluation.as_ref().map_or(f64::NAN, |e| e.total)
}

fn agreement() -> Outcome {
    let res = preset("fig6");
    let started = Instant::now();
    let gaps = validation_gaps(&res.scenario, &res.plan.validate_points, 1_000_000, 1)?;
    let secs = started.elapsed().as_secs_f64();
    let worst = |rate: bool| {
        gaps.iter()
            .filter(|g| (g.quantity == "total_bpcu") == rate)
            .map(|g| g.gap())
            .fold(0.0, f64::max)
    };
    let points = res.plan.validate_points.len();
    let pass = gaps.iter().all(|g| g.passed()) && secs <= 600.0 && points == 6;
    Ok((
        pass,
        format!(
            "{points} points x 2 modes, max outage gap {:.4}, max rate gap {:.4} BPCU, {secs:.0} s",
            worst(false),
            worst(true)
        ),
    ))
}

fn saturation() -> Outcome {
    let res = preset("fig5");
    let tables = res.scenario.tables()?;
    let mut rates = Vec::new();
    for q in [0.1, 0.15, 0.2] {
        let zone = min_angle_zone(q, &res.scenario.region)?;
        rates.push(res.scenario.analytic(&tables, &zone)?.total);
    }
    let spread = rates.iter().cloned().fold(f64::MIN, f64::max) - rates.iter().cloned().fold(f64::MAX, f64::min);
    let pass = rates.iter().all(|r| (3.5..=4.0).contains(r)) && spread <= 0.2;
    Ok((pass, format!("rates {rates:.3?} BPCU, spread {spread:.3}")))
}

fn power_peak() -> Outcome {
    let res = preset("fig6");
    let wide = power_sweep(&res, 0.2)?;
    let narrow = power_sweep(&res, 0.05)?;
    let peak = wide
        .iter()
        .max_by(|a, b| total(a).total_cmp(&total(b)))
        .expect("points");
    let narrow_max = narrow.iter().map(total).fold(f64::MIN, f64::max);
    let pass = total(peak) > 4.0 && (-5.0..=2.0).contains(&peak.ptx_dbm) && narrow_max <= 4.0;
    Ok((
        pass,
        format!(
            "q=0.2 peak {:.3} BPCU at {} dBm; q=0.05 max {narrow_max:.3}",
            total(peak),
            peak.ptx_dbm
        ),
    ))
}

fn weak_outage() -> Outcome {
    let res = preset("fig6");
    let mut lowest = f64::MAX;
    for q in [0.05, 0.2] {
        for r in power_sweep(&res, q)?.iter().filter(|r| r.ptx_dbm >= 5.0) {
            lowest = lowest.min(r.evaluation.as_ref().map_or(f64::NAN, |e| e.outage.p_weak));
        }
    }
    Ok((lowest >= 0.99, format!("min weak outage over P >= 5 dBm: {lowest:.4}")))
}

fn shape_gain() -> Outcome {
    let res = preset("fig4");
    let tables = res.scenario.tables()?;
    let opt = optimize_shape(&res.scenario, &tables, 0.03, Evaluator::Analytic, res.plan.grid_points)?;
    let at_min = opt.at_min_angle().expect("minimum angle is on the grid").objective;
    let ratio = opt.best.objective / at_min;
    let pass = opt.best.half_angle > opt.min_angle && ratio >= 1.15;
    Ok((
        pass,
        format!(
            "opt {:.3} deg vs min {:.3} deg, objective ratio {ratio:.3}",
            opt.best.half_angle.to_degrees(),
            opt.min_angle.to_degrees()
        ),
    ))
}

fn regimes() -> Outcome {
    let res = preset("fig3");
    let tables = res.scenario.tables()?;
    let mut pass = true;
    let mut seen = Vec::new();
    for (q, expected) in [
        (0.01, Regime::ShapeLimited),
        (0.03, Regime::ShapeLimited),
        (0.05, Regime::ShapeLimited),
        (0.09, Regime::SpaceLimited),
        (0.13, Regime::SpaceLimited),
    ] {
        let opt = optimize_shape(&res.scenario, &tables, q, Evaluator::Analytic, res.plan.grid_points)?;
        pass &= opt.regime == expected;
        seen.push(format!("{q}:{}", opt.regime.name()));
    }
    Ok((pass, seen.join(" ")))
}

fn best_case_asymptote() -> Outcome {
    let res = preset("fig9");
    let mut pass = true;
    let mut notes = Vec::new();
    for &h in &res.plan.altitude_values_m {
        let mut scn = res.scenario;
        scn.rf.altitude_m = h;
        scn.noma.eve_mode = EveMode::BestCase;
        let tables = scn.tables()?;
        let mut strong_max: f64 = 0.0;
        let mut gap_max: f64 = 0.0;
        let zones = [min_angle_zone(0.05, &scn.region)?, min_angle_zone(0.2, &scn.region)?];
        for &p in res.plan.ptx_values_dbm.iter().filter(|&&p| p >= 5.0) {
            let at = scn.with_power(p);
            let narrow = at.analytic(&tables, &zones[0])?;
            let wide = at.analytic(&tables, &zones[1])?;
            gap_max = gap_max.max((narrow.total - wide.total).abs());
            if p == 45.0 {
                strong_max = narrow.outage.p_strong.max(wide.outage.p_strong);
            }
        }
        pass &= strong_max < 1e-3 && gap_max <= 0.2;
        notes.push(format!(
            "h={h}: strong outage at 45 dBm {strong_max:.2e}, max q gap {gap_max:.3}"
        ));
    }
    Ok((pass, notes.join("; ")))
}

fn properties() -> Outcome {
    let mut failures = Vec::new();

    let reg = common::region(3.0);
    let mut worst_round_trip: f64 = 0.0;
    for k in 1..=20 {
        let q = 0.01 * k as f64;
        for kind in ZoneKind::ALL {
            if let Some((lo, hi)) = angle_range(kind, q, &reg)? {
                for t in [0.0, 0.5, 1.0] {
                    let zone = ProtectedZone::with_fraction(kind, lo + t * (hi - lo), q, &reg)?;
                    worst_round_trip =
                        worst_round_trip.max((zone_area(&zone, &reg)? / (q * reg.eve_area()) - 1.0).abs());
                }
            }
        }
    }
    if worst_round_trip > 1e-10 {
        failures.push(format!("geometry round trip {worst_round_trip:.1e}"));
    }

    for m in 1..=16u32 {
        let breaks: Vec<f64> = (1..m).map(|k| -1.0 + 2.0 * k as f64 / m as f64).collect();
        let est = integrate(|d| fejer_gain(0.0, d, m), -1.0, 1.0, &breaks, 1e-12, 2000)?;
        if (0.5 * est.value - 1.0).abs() > 1e-8 {
            failures.push(format!("Fejer mean M={m}"));
        }
    }

    let rf = common::rf(20.0, 45.0);
    let tables = GainTables::new(&reg, &rf)?;
    let mut rng = ChaCha8Rng::seed_from_u64(81);
    let draws = (0..1_000_000)
        .map(|_| {
            let mut g = [0.0; 3].map(|_| common::user_gain(&mut rng, &reg, &rf));
            g.sort_by(|a, b| b.total_cmp(a));
            g[1]
        })
        .collect();
    let ks = common::ks(draws, |z| ordered_user_cdf(tables.user(), z, 2, 3).unwrap());
    if ks > 0.005 {
        failures.push(format!("order statistics KS {ks:.4}"));
    }

    let eves: Vec<_> = [0.01, 0.05, 0.1, 0.2]
        .iter()
        .map(|&q| tables.eve(&min_angle_zone(q, &reg)?))
        .collect::<Result<_>>()?;
    let hint = eves[0].support_hint();
    let mut fd_worst: f64 = 0.0;
    for k in 0..50 {
        let y = hint * 10f64.powf(-5.0 + 4.5 * k as f64 / 49.0);
        let dist = &eves[1];
        let h = 1e-4 * y;
        let fd = (dist.cdf(y + h) - dist.cdf(y - h)) / (2.0 * h);
        let p = dist.pdf(y);
        if p > 1e-3 / hint {
            fd_worst = fd_worst.max((fd / p - 1.0).abs());
        }
        if eves.windows(2).any(|w| w[1].cdf(y) < w[0].cdf(y) - 1e-12) {
            failures.push(format!("Eve CDF dominance at y={y:.3e}"));
        }
    }
    if fd_worst > 1e-4 {
        failures.push(format!("CDF/PDF finite differences {fd_worst:.1e}"));
    }

    let dir = tempfile::tempdir()?;
    let mut file = ConfigFile::parse("altitude_m = 50.0\nptx_dbm = 0.0\nq_values = [0.2]\ntrials = 20000\nseed = 5\n")?;
    file.experiment = Some(ExperimentKind::Simulate);
    let resolved = file.resolve()?;
    let bytes: Vec<Vec<u8>> = ["a.csv", "b.csv"]
        .iter()
        .map(|name| {
            let path = dir.path().join(name);
            experiment::run(&resolved, None, &path)?;
            Ok(std::fs::read(&path)?)
        })
        .collect::<Result<_>>()?;
    if bytes[0] != bytes[1] {
        failures.push("seeded CSV differs between reruns".into());
    }

    let detail = if failures.is_empty() {
        format!(
            "round trip {worst_round_trip:.1e}, order-statistic KS {ks:.4}, FD {fd_worst:.1e}, CSV reruns identical"
        )
    } else {
        failures.join("; ")
    };
    Ok((failures.is_empty(), detail))
}

fn altitude_penalty() -> Outcome {
    let res = preset("fig7");
    let mut drops = Vec::new();
    for h in [20.0, 50.0] {
        let mut scn = res.scenario;
        scn.rf.altitude_m = h;
        let tables = scn.tables()?;
        let opt = optimize_shape(&scn, &tables, 0.03, Evaluator::Analytic, res.plan.grid_points)?;
        let widest = opt
            .frontier
            .iter()
            .filter(|c| c.feasible)
            .max_by(|a, b| a.half_angle.total_cmp(&b.half_angle))
            .expect("feasible candidates");
        drops.push((opt.best.objective - widest.objective) / opt.best.objective);
    }
    Ok((
        drops[1] > drops[0],
        format!("relative drop h=20 {:.3}, h=50 {:.3}", drops[0], drops[1]),
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("analytic vs Monte Carlo agreement", agreement),
        ("sum rate saturates near 4 BPCU", saturation),
        ("power sweep peak for q = 0.2", power_peak),
        ("weak user in outage above 5 dBm", weak_outage),
        ("optimal shape beats minimum angle", shape_gain),
        ("shape- and space-limited regimes", regimes),
        ("best-case asymptote and convergence", best_case_asymptote),
        ("property suites", properties),
        ("altitude penalty away from the optimum", altitude_penalty),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let (pass, detail) = check().unwrap_or_else(|e| (false, format!("error: {e}")));
        failed += usize::from(!pass);
        println!(
            "criterion {}: {} {name}: {detail} [{:.1} s]",
            k + 1,
            if pass { "PASS" } else { "FAIL" },
            started.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
