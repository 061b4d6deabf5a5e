//! Protected-zone shape search at a fixed area fraction, and parameter
//! sweeps over the zone angle, the area fraction, the transmit power and
//! the altitude.

use std::collections::hash_map::Entry;
use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{EveMode, OutageResult};
use crate::distributions::GainTables;
use crate::error::{Error, Result};
use crate::geometry::{angle_range, min_angle_zone, zone_at_angle, ProtectedZone, RegionSpec, ZoneKind};
use crate::montecarlo::simulate;
use crate::scenario::Scenario;

/// Default grid points per zone kind.
pub const DEFAULT_RESOLUTION: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Evaluator {
    Analytic,
    MonteCarlo { trials: u64, seed: u64 },
}

impl Evaluator {
    pub fn name(&self) -> &'static str {
        match self {
            Evaluator::Analytic => "analytic",
            Evaluator::MonteCarlo { .. } => "mc",
        }
    }
}

/// Rates and outages of one scenario point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub total: f64,
    pub noma: f64,
    pub sut: f64,
    pub outage: OutageResult,
    /// Monte Carlo only.
    pub oma: Option<f64>,
    /// 95% half-width of `total`, Monte Carlo only.
    pub half_width: Option<f64>,
}

/// Evaluates `zone` under `scn`. `tables` must match the scenario's region
/// and radio; the analytic route uses them, the Monte Carlo route ignores them.
pub fn evaluate(scn: &Scenario, tables: &GainTables, zone: &ProtectedZone, evaluator: Evaluator) -> Result<Evaluation> {
    match evaluator {
        Evaluator::Analytic => {
            let r = scn.analytic(tables, zone)?;
            Ok(Evaluation {
                total: r.total,
                noma: r.noma,
                sut: r.sut,
                outage: r.outage,
                oma: None,
                half_width: None,
            })
        }
        Evaluator::MonteCarlo { trials, seed } => {
            let sim = simulate(scn, zone, trials, seed)?;
            let m = sim.mode(scn.noma.eve_mode);
            Ok(Evaluation {
                total: m.total.mean,
                noma: m.noma.mean,
                sut: m.sut.mean,
                outage: m.outage(crate::analytic::Condition::Marginalized),
                oma: Some(sim.oma.mean),
                half_width: Some(m.total.half_width),
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeCandidate {
    pub kind: ZoneKind,
    /// `Δ_p` in radians.
    pub half_angle: f64,
    /// `L_p` in meters.
    pub radius: f64,
    /// Sum secrecy rate in BPCU; `NaN` when infeasible.
    pub objective: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    ShapeLimited,
    SpaceLimited,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::ShapeLimited => "shape-limited",
            Regime::SpaceLimited => "space-limited",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeOptimum {
    pub best: ShapeCandidate,
    /// Every grid candidate, by increasing `Δ_p`.
    pub frontier: Vec<ShapeCandidate>,
    pub regime: Regime,
    /// Smallest feasible `Δ_p` over all kinds.
    pub min_angle: f64,
    /// First grid step above `min_angle`, the regime tolerance.
    pub grid_step: f64,
}

impl ShapeOptimum {
    /// The candidate at the smallest feasible angle.
    pub fn at_min_angle(&self) -> Option<&ShapeCandidate> {
        self.frontier.iter().find(|c| c.feasible)
    }
}

/// Per kind, `points` half-angles log-spaced over the kind's feasible
/// interval, denser toward its lower end.
pub fn shape_grid(q: f64, reg: &RegionSpec, points: usize) -> Result<Vec<(ZoneKind, f64)>> {
    if points < 8 {
        return Err(Error::Argument(format!(
            "need at least 8 points per kind, got {points}"
        )));
    }
    let mut grid = Vec::new();
    for kind in ZoneKind::ALL {
        let Some((lo, hi)) = angle_range(kind, q, reg)? else {
            continue;
        };
        if hi <= lo {
            grid.push((kind, lo));
            continue;
        }
        let ratio = hi / lo;
        for k in 0..points {
            let angle = if k + 1 == points {
                hi
            } else {
                lo * ratio.powf(k as f64 / (points - 1) as f64)
            };
            grid.push((kind, angle));
        }
    }
    Ok(grid)
}

/// Exhaustive grid search over zone kind and `Δ_p` at fraction `q`,
/// maximizing the sum secrecy rate. Ties go to the smaller `Δ_p`.
pub fn optimize_shape(
    scn: &Scenario,
    tables: &GainTables,
    q: f64,
    evaluator: Evaluator,
    resolution: usize,
) -> Result<ShapeOptimum> {
    let reg = &scn.region;
    let grid = shape_grid(q, reg, resolution)?;
    if grid.is_empty() {
        return Err(Error::InfeasibleZone {
            kind: "any",
            constraint: format!("no zone kind realizes q = {q}"),
        });
    }
    let mut frontier: Vec<ShapeCandidate> = grid
        .par_iter()
        .map(|&(kind, angle)| {
            let zone = ProtectedZone::with_fraction(kind, angle, q, reg).ok();
            let objective = zone
                .and_then(|z| evaluate(scn, tables, &z, evaluator).ok())
                .map(|e| e.total);
            ShapeCandidate {
                kind,
                half_angle: angle,
                radius: zone.map_or(f64::NAN, |z| z.radius),
                objective: objective.unwrap_or(f64::NAN),
                feasible: objective.is_some(),
            }
        })
        .collect();
    // stable sort keeps kind order among equal angles
    frontier.sort_by(|a, b| a.half_angle.total_cmp(&b.half_angle));
    let mut best: Option<ShapeCandidate> = None;
    for c in frontier.iter().filter(|c| c.feasible) {
        if best.is_none_or(|b| c.objective > b.objective) {
            best = Some(*c);
        }
    }
    let best = best.ok_or_else(|| Error::InfeasibleZone {
        kind: "any",
        constraint: format!("every candidate at q = {q} failed"),
    })?;
    let feasible: Vec<&ShapeCandidate> = frontier.iter().filter(|c| c.feasible).collect();
    let min_angle = feasible[0].half_angle;
    let grid_step = feasible
        .iter()
        .find(|c| c.kind == feasible[0].kind && c.half_angle > min_angle)
        .map_or(0.0, |c| c.half_angle - min_angle);
    let regime = if (best.half_angle - min_angle).abs() <= grid_step {
        Regime::SpaceLimited
    } else {
        Regime::ShapeLimited
    };
    Ok(ShapeOptimum {
        best,
        frontier,
        regime,
        min_angle,
        grid_step,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axis {
    /// Zone half-angle in degrees.
    DeltaP,
    Q,
    PtxDbm,
    AltitudeM,
}

impl Axis {
    pub fn column(self) -> &'static str {
        match self {
            Axis::DeltaP => "delta_p_deg",
            Axis::Q => "q",
            Axis::PtxDbm => "ptx_dbm",
            Axis::AltitudeM => "altitude_m",
        }
    }
}

/// How each sweep point picks its zone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "rule")]
pub enum ZoneRule {
    /// The zone at the smallest feasible half-angle.
    MinAngle,
    /// The shape optimum at this point.
    Optimal { resolution: usize },
    /// A fixed half-angle in degrees; the kind follows from `q`.
    Angle { delta_p_deg: f64 },
    /// No protected zone.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub axis: Axis,
    pub value: f64,
    pub q: f64,
    pub ptx_dbm: f64,
    pub altitude_m: f64,
    pub eve_mode: EveMode,
    pub zone_kind: Option<ZoneKind>,
    pub delta_p_deg: f64,
    pub radius_m: f64,
    pub evaluation: Option<Evaluation>,
    pub evaluator: Evaluator,
    /// Why the point could not be evaluated.
    pub error: Option<String>,
}

fn rule_zone(
    scn: &Scenario,
    tables: &GainTables,
    q: f64,
    rule: ZoneRule,
    evaluator: Evaluator,
) -> Result<ProtectedZone> {
    match rule {
        ZoneRule::MinAngle => min_angle_zone(q, &scn.region),
        ZoneRule::Optimal { resolution } => {
            let opt = optimize_shape(scn, tables, q, evaluator, resolution)?;
            ProtectedZone::new(opt.best.kind, opt.best.half_angle, opt.best.radius, &scn.region)
        }
        ZoneRule::Angle { delta_p_deg } => zone_at_angle(delta_p_deg.to_radians(), q, &scn.region),
        ZoneRule::None => Ok(ProtectedZone::none(&scn.region)),
    }
}

/// Evaluates one record per axis value. Infeasible points are recorded with
/// their error and the sweep continues.
pub fn sweep(
    scn: &Scenario,
    axis: Axis,
    values: &[f64],
    q: f64,
    rule: ZoneRule,
    evaluator: Evaluator,
) -> Result<Vec<SweepRecord>> {
    if values.is_empty() {
        return Err(Error::Argument("sweep needs at least one value".into()));
    }
    let mut tables: HashMap<u64, GainTables> = HashMap::new();
    let mut records = Vec::with_capacity(values.len());
    for &value in values {
        let (mut point, mut point_q, mut point_rule) = (*scn, q, rule);
        match axis {
            Axis::DeltaP => point_rule = ZoneRule::Angle { delta_p_deg: value },
            Axis::Q => point_q = value,
            Axis::PtxDbm => point.rf.tx_power_dbm = value,
            Axis::AltitudeM => point.rf.altitude_m = value,
        }
        let mut record = SweepRecord {
            axis,
            value,
            q: point_q,
            ptx_dbm: point.rf.tx_power_dbm,
            altitude_m: point.rf.altitude_m,
            eve_mode: point.noma.eve_mode,
            zone_kind: None,
            delta_p_deg: f64::NAN,
            radius_m: f64::NAN,
            evaluation: None,
            evaluator,
            error: None,
        };
        let outcome = (|| -> Result<(ProtectedZone, Evaluation)> {
            point.validate()?;
            let key = point.rf.altitude_m.to_bits();
            if let Entry::Vacant(slot) = tables.entry(key) {
                slot.insert(point.tables()?);
            }
            let t = &tables[&key];
            let zone = rule_zone(&point, t, point_q, point_rule, evaluator)?;
            Ok((zone, evaluate(&point, t, &zone, evaluator)?))
        })();
        match outcome {
            Ok((zone, eval)) => {
                if !matches!(point_rule, ZoneRule::None) {
                    record.zone_kind = Some(zone.kind);
                }
                record.delta_p_deg = zone.half_angle.to_degrees();
                record.radius_m = zone.radius;
                record.evaluation = Some(eval);
            }
            Err(e) => record.error = Some(e.to_string()),
        }
        records.push(record);
    }
    Ok(records)
}
