//! Experiment orchestration: runs a resolved configuration and writes one
//! CSV table plus a `<out>.manifest.toml` run manifest.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::analytic::EveMode;
use crate::config::{ConfigFile, EvaluatorKind, ExperimentKind, ExperimentPlan, Resolved, RuleKind};
use crate::distributions::GainTables;
use crate::error::{Error, Result};
use crate::geometry::{min_angle_zone, ProtectedZone};
use crate::montecarlo::simulate;
use crate::optimizer::{optimize_shape, shape_grid, sweep, Axis, Evaluator, SweepRecord, ZoneRule};
use crate::scenario::Scenario;

/// Largest analytic-vs-Monte-Carlo outage gap `validate` accepts.
pub const OUTAGE_GAP: f64 = 0.02;
/// Largest sum-rate gap in BPCU `validate` accepts.
pub const RATE_GAP: f64 = 0.1;

/// Note attached to every output that carries the OMA column.
pub const OMA_NOTE: &str =
    "oma_bpcu: two equal half slots, each giving one ranked user full power; this baseline convention is ours";

/// Formats a number with 12 significant digits; `NaN` becomes an empty field.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x:.11e}")
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, fmt_num)
}

/// A header row and string cells, written with the `csv` crate.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
        w.write_record(&self.header).map_err(csv_error)?;
        for row in &self.rows {
            w.write_record(row).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Config(format!("csv: {other:?}")),
    }
}

/// Outcome of [`run`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub table: Table,
    pub csv: PathBuf,
    pub manifest: PathBuf,
    /// False when `validate` found a gap above tolerance.
    pub passed: bool,
    pub notes: Vec<String>,
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.toml");
    PathBuf::from(name)
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    experiment: &'static str,
    csv: String,
    rows: usize,
    passed: bool,
    threads: usize,
    wall_time_s: f64,
    notes: &'a [String],
    config: &'a ConfigFile,
}

/// Tables per altitude; the transmit power does not enter them.
#[derive(Default)]
struct TableCache(HashMap<u64, GainTables>);

impl TableCache {
    fn get(&mut self, scn: &Scenario) -> Result<&GainTables> {
        let key = scn.rf.altitude_m.to_bits();
        if let Entry::Vacant(slot) = self.0.entry(key) {
            slot.insert(scn.tables()?);
        }
        Ok(&self.0[&key])
    }
}

fn evaluator(plan: &ExperimentPlan) -> Evaluator {
    match plan.evaluator {
        EvaluatorKind::Analytic => Evaluator::Analytic,
        EvaluatorKind::Mc => Evaluator::MonteCarlo {
            trials: plan.trials,
            seed: plan.seed,
        },
    }
}

/// Scenario copies for every configured altitude and Eve mode.
fn variants(scn: &Scenario, plan: &ExperimentPlan) -> Vec<Scenario> {
    let mut out = Vec::new();
    for &h in &plan.altitude_values_m {
        for &mode in &plan.eve_modes {
            let mut v = *scn;
            v.rf.altitude_m = h;
            v.noma.eve_mode = mode;
            out.push(v);
        }
    }
    out
}

const SWEEP_HEADER: [&str; 21] = [
    "experiment",
    "altitude_m",
    "eve_mode",
    "zone_rule",
    "axis",
    "value",
    "q",
    "ptx_dbm",
    "zone_kind",
    "delta_p_deg",
    "radius_m",
    "total_bpcu",
    "noma_bpcu",
    "sut_bpcu",
    "p_weak",
    "p_strong",
    "p_sut",
    "oma_bpcu",
    "half_width_bpcu",
    "evaluator",
    "error",
];

fn sweep_row(kind: ExperimentKind, rule: &str, r: &SweepRecord) -> Vec<String> {
    let e = r.evaluation.as_ref();
    vec![
        kind.name().into(),
        fmt_num(r.altitude_m),
        r.eve_mode.name().into(),
        rule.into(),
        r.axis.column().into(),
        fmt_num(r.value),
        fmt_num(r.q),
        fmt_num(r.ptx_dbm),
        r.zone_kind.map_or_else(String::new, |k| k.name().into()),
        fmt_num(r.delta_p_deg),
        fmt_num(r.radius_m),
        fmt_opt(e.map(|e| e.total)),
        fmt_opt(e.map(|e| e.noma)),
        fmt_opt(e.map(|e| e.sut)),
        fmt_opt(e.map(|e| e.outage.p_weak)),
        fmt_opt(e.map(|e| e.outage.p_strong)),
        fmt_opt(e.and_then(|e| e.outage.p_sut)),
        fmt_opt(e.and_then(|e| e.oma)),
        fmt_opt(e.and_then(|e| e.half_width)),
        r.evaluator.name().into(),
        r.error.clone().unwrap_or_default(),
    ]
}

fn zone_rule(rule: RuleKind, plan: &ExperimentPlan) -> ZoneRule {
    match rule {
        RuleKind::MinAngle => ZoneRule::MinAngle,
        RuleKind::Optimal => ZoneRule::Optimal {
            resolution: plan.grid_points,
        },
        RuleKind::None => ZoneRule::None,
    }
}

fn run_sweeps(kind: ExperimentKind, scn: &Scenario, plan: &ExperimentPlan, cache: &mut TableCache) -> Result<Table> {
    let mut table = Table::new(&SWEEP_HEADER);
    let ev = evaluator(plan);
    for v in variants(scn, plan) {
        match kind {
            ExperimentKind::SweepShape => {
                for &q in &plan.q_values {
                    let angles: Vec<f64> = shape_grid(q, &v.region, plan.grid_points)?
                        .iter()
                        .map(|g| g.1.to_degrees())
                        .collect();
                    for r in sweep(&v, Axis::DeltaP, &angles, q, ZoneRule::MinAngle, ev)? {
                        table.push(sweep_row(kind, "angle", &r));
                    }
                }
            }
            ExperimentKind::SweepQ => {
                for &rule in &plan.zone_rules {
                    for r in sweep(&v, Axis::Q, &plan.q_values, plan.q, zone_rule(rule, plan), ev)? {
                        table.push(sweep_row(kind, rule.name(), &r));
                    }
                }
            }
            ExperimentKind::SweepPower => {
                for &q in &plan.q_values {
                    for &rule in &plan.zone_rules {
                        // the optimal shape is found once, at the configured power
                        let point_rule = match rule {
                            RuleKind::Optimal => {
                                let tables = cache.get(&v)?;
                                let opt = optimize_shape(&v, tables, q, Evaluator::Analytic, plan.grid_points)?;
                                ZoneRule::Angle {
                                    delta_p_deg: opt.best.half_angle.to_degrees(),
                                }
                            }
                            other => zone_rule(other, plan),
                        };
                        for r in sweep(&v, Axis::PtxDbm, &plan.ptx_values_dbm, q, point_rule, ev)? {
                            table.push(sweep_row(kind, rule.name(), &r));
                        }
                    }
                }
            }
            _ => unreachable!("not a sweep"),
        }
    }
    Ok(table)
}

fn run_optimize(scn: &Scenario, plan: &ExperimentPlan, cache: &mut TableCache) -> Result<Table> {
    let mut table = Table::new(&[
        "altitude_m",
        "eve_mode",
        "q",
        "role",
        "zone_kind",
        "delta_p_deg",
        "radius_m",
        "objective_bpcu",
        "feasible",
        "regime",
        "min_delta_p_deg",
        "grid_step_deg",
        "evaluator",
    ]);
    let ev = evaluator(plan);
    for v in variants(scn, plan) {
        let tables = cache.get(&v)?;
        for &q in &plan.q_values {
            let opt = optimize_shape(&v, tables, q, ev, plan.grid_points)?;
            let rows = opt
                .frontier
                .iter()
                .map(|c| ("frontier", c))
                .chain(std::iter::once(("optimum", &opt.best)));
            for (role, c) in rows {
                table.push(vec![
                    fmt_num(v.rf.altitude_m),
                    v.noma.eve_mode.name().into(),
                    fmt_num(q),
                    role.into(),
                    c.kind.name().into(),
                    fmt_num(c.half_angle.to_degrees()),
                    fmt_num(c.radius),
                    fmt_num(c.objective),
                    c.feasible.to_string(),
                    opt.regime.name().into(),
                    fmt_num(opt.min_angle.to_degrees()),
                    fmt_num(opt.grid_step.to_degrees()),
                    ev.name().into(),
                ]);
            }
        }
    }
    Ok(table)
}

fn rule_zone(
    v: &Scenario,
    q: f64,
    rule: RuleKind,
    plan: &ExperimentPlan,
    cache: &mut TableCache,
) -> Result<ProtectedZone> {
    match rule {
        RuleKind::MinAngle => min_angle_zone(q, &v.region),
        RuleKind::None => Ok(ProtectedZone::none(&v.region)),
        RuleKind::Optimal => {
            let opt = optimize_shape(v, cache.get(v)?, q, Evaluator::Analytic, plan.grid_points)?;
            ProtectedZone::new(opt.best.kind, opt.best.half_angle, opt.best.radius, &v.region)
        }
    }
}

fn run_simulate(scn: &Scenario, plan: &ExperimentPlan, cache: &mut TableCache) -> Result<Table> {
    let mut table = Table::new(&[
        "altitude_m",
        "q",
        "ptx_dbm",
        "zone_rule",
        "zone_kind",
        "delta_p_deg",
        "radius_m",
        "eve_mode",
        "p_weak",
        "p_weak_half_width",
        "p_strong",
        "p_strong_half_width",
        "p_sut",
        "p_sut_half_width",
        "total_bpcu",
        "total_half_width_bpcu",
        "noma_bpcu",
        "sut_bpcu",
        "oma_bpcu",
        "oma_half_width_bpcu",
        "trials",
        "seed",
    ]);
    for &h in &plan.altitude_values_m {
        let mut v = *scn;
        v.rf.altitude_m = h;
        for &q in &plan.q_values {
            for &rule in &plan.zone_rules {
                let zone = rule_zone(&v, q, rule, plan, cache)?;
                let sim = simulate(&v, &zone, plan.trials, plan.seed)?;
                for mode in [EveMode::WorstCase, EveMode::BestCase] {
                    let m = sim.mode(mode);
                    table.push(vec![
                        fmt_num(h),
                        fmt_num(q),
                        fmt_num(v.rf.tx_power_dbm),
                        rule.name().into(),
                        zone.kind.name().into(),
                        fmt_num(zone.half_angle.to_degrees()),
                        fmt_num(zone.radius),
                        mode.name().into(),
                        fmt_num(m.p_weak.mean),
                        fmt_num(m.p_weak.half_width),
                        fmt_num(m.p_strong.mean),
                        fmt_num(m.p_strong.half_width),
                        fmt_num(m.p_sut.mean),
                        fmt_num(m.p_sut.half_width),
                        fmt_num(m.total.mean),
                        fmt_num(m.total.half_width),
                        fmt_num(m.noma.mean),
                        fmt_num(m.sut.mean),
                        fmt_num(sim.oma.mean),
                        fmt_num(sim.oma.half_width),
                        plan.trials.to_string(),
                        plan.seed.to_string(),
                    ]);
                }
            }
        }
    }
    Ok(table)
}

/// One analytic-vs-Monte-Carlo comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gap {
    pub altitude_m: f64,
    pub q: f64,
    pub ptx_dbm: f64,
    pub eve_mode: EveMode,
    pub quantity: &'static str,
    pub analytic: f64,
    pub mc: f64,
    pub half_width: f64,
    pub tolerance: f64,
}

impl Gap {
    pub fn gap(&self) -> f64 {
        (self.analytic - self.mc).abs()
    }

    pub fn passed(&self) -> bool {
        self.gap() <= self.tolerance
    }
}

/// Analytic and Monte Carlo outages and sum rates at `[h, q, P_tx]`
/// points, both Eve modes from the same simulated deployments.
pub fn validation_gaps(scn: &Scenario, points: &[[f64; 3]], trials: u64, seed: u64) -> Result<Vec<Gap>> {
    let mut cache = TableCache::default();
    let mut gaps = Vec::new();
    for &[h, q, p] in points {
        let mut v = scn.with_power(p);
        v.rf.altitude_m = h;
        let zone = min_angle_zone(q, &v.region)?;
        let sim = simulate(&v, &zone, trials, seed)?;
        for mode in [EveMode::WorstCase, EveMode::BestCase] {
            let mut vm = v;
            vm.noma.eve_mode = mode;
            let a = vm.analytic(cache.get(&vm)?, &zone)?;
            let m = sim.mode(mode);
            let mut push = |quantity, analytic, est: crate::montecarlo::Estimate, tolerance| {
                gaps.push(Gap {
                    altitude_m: h,
                    q,
                    ptx_dbm: p,
                    eve_mode: mode,
                    quantity,
                    analytic,
                    mc: est.mean,
                    half_width: est.half_width,
                    tolerance,
                })
            };
            push("p_weak", a.outage.p_weak, m.p_weak, OUTAGE_GAP);
            push("p_strong", a.outage.p_strong, m.p_strong, OUTAGE_GAP);
            if let Some(ps) = a.outage.p_sut.filter(|_| m.p_sut.samples > 0) {
                push("p_sut", ps, m.p_sut, OUTAGE_GAP);
            }
            push("total_bpcu", a.total, m.total, RATE_GAP);
        }
    }
    Ok(gaps)
}

fn run_validate(scn: &Scenario, plan: &ExperimentPlan) -> Result<(Table, bool)> {
    let mut table = Table::new(&[
        "altitude_m",
        "q",
        "ptx_dbm",
        "eve_mode",
        "quantity",
        "analytic",
        "mc",
        "half_width",
        "gap",
        "tolerance",
        "pass",
    ]);
    let gaps = validation_gaps(scn, &plan.validate_points, plan.trials, plan.seed)?;
    for g in &gaps {
        table.push(vec![
            fmt_num(g.altitude_m),
            fmt_num(g.q),
            fmt_num(g.ptx_dbm),
            g.eve_mode.name().into(),
            g.quantity.into(),
            fmt_num(g.analytic),
            fmt_num(g.mc),
            fmt_num(g.half_width),
            fmt_num(g.gap()),
            fmt_num(g.tolerance),
            g.passed().to_string(),
        ]);
    }
    Ok((table, gaps.iter().all(Gap::passed)))
}

/// Runs `kind` (or the configured experiment) and writes `out` and its manifest.
pub fn run(resolved: &Resolved, kind: Option<ExperimentKind>, out: &Path) -> Result<RunOutput> {
    let kind = kind
        .or(resolved.plan.experiment)
        .ok_or_else(|| Error::Config("no experiment selected".into()))?;
    let started = Instant::now();
    let (scn, plan) = (&resolved.scenario, &resolved.plan);
    let mut cache = TableCache::default();
    let mut notes = Vec::new();
    let (table, passed) = match kind {
        ExperimentKind::Validate => run_validate(scn, plan)?,
        ExperimentKind::SweepShape | ExperimentKind::SweepQ | ExperimentKind::SweepPower => {
            (run_sweeps(kind, scn, plan, &mut cache)?, true)
        }
        ExperimentKind::Optimize => (run_optimize(scn, plan, &mut cache)?, true),
        ExperimentKind::Simulate => (run_simulate(scn, plan, &mut cache)?, true),
    };
    if table.header.iter().any(|h| h.starts_with("oma_")) {
        notes.push(OMA_NOTE.to_string());
    }
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    table.write(out)?;
    let mut config = resolved.file.clone();
    config.experiment = Some(kind);
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        experiment: kind.name(),
        csv: out.display().to_string(),
        rows: table.rows.len(),
        passed,
        threads: rayon::current_num_threads(),
        wall_time_s: started.elapsed().as_secs_f64(),
        notes: &notes,
        config: &config,
    };
    let manifest_file = manifest_path(out);
    let text = toml::to_string(&manifest).map_err(|e| Error::Config(format!("manifest: {e}")))?;
    std::fs::write(&manifest_file, text)?;
    Ok(RunOutput {
        table,
        csv: out.to_path_buf(),
        manifest: manifest_file,
        passed,
        notes,
    })
}
