//! Annular-sector geometry of the user region, the Eve region and the
//! protected zone.
//!
//! All sectors are centred on the beam azimuth, which is fixed at zero.
//! Half-angles are in radians and radii in meters. Every region is
//! symmetric about the beam axis, so integration domains are described on
//! the upper half-plane (`θ ≥ 0`) only and carry an implicit factor of two.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack for feasibility checks on computed radii and angles.
const SLACK: f64 = 1e-12;

/// The user sector and the surrounding Eve sector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionSpec {
    inner_radius: f64,
    user_radius: f64,
    user_half_angle: f64,
    expansion: f64,
}

impl RegionSpec {
    pub fn new(inner_radius: f64, user_radius: f64, user_half_angle: f64, expansion: f64) -> Result<Self> {
        if !(inner_radius > 0.0) {
            return Err(Error::Config("inner radius must be positive".into()));
        }
        if !(user_radius > inner_radius) {
            return Err(Error::Config("user radius must exceed inner radius".into()));
        }
        if !(user_half_angle > 0.0) {
            return Err(Error::Config("user half-angle must be positive".into()));
        }
        if !(expansion > 1.0) {
            return Err(Error::Config("expansion ratio must exceed 1".into()));
        }
        if expansion * user_half_angle > std::f64::consts::PI {
            return Err(Error::Config("Eve half-angle must not exceed pi".into()));
        }
        Ok(Self {
            inner_radius,
            user_radius,
            user_half_angle,
            expansion,
        })
    }

    pub fn inner_radius(&self) -> f64 {
        self.inner_radius
    }

    pub fn user_radius(&self) -> f64 {
        self.user_radius
    }

    pub fn user_half_angle(&self) -> f64 {
        self.user_half_angle
    }

    pub fn expansion(&self) -> f64 {
        self.expansion
    }

    pub fn eve_radius(&self) -> f64 {
        self.expansion * self.user_radius
    }

    pub fn eve_half_angle(&self) -> f64 {
        self.expansion * self.user_half_angle
    }

    /// `(L_u² − L_i²)·Δ_u`
    pub fn user_area(&self) -> f64 {
        (self.user_radius.powi(2) - self.inner_radius.powi(2)) * self.user_half_angle
    }

    /// Area of the Eve sector minus the user sector.
    pub fn eve_area(&self) -> f64 {
        (self.eve_radius().powi(2) - self.inner_radius.powi(2)) * self.eve_half_angle() - self.user_area()
    }

    pub fn in_user_region(&self, theta: f64, r: f64) -> bool {
        theta.abs() <= self.user_half_angle && r >= self.inner_radius && r <= self.user_radius
    }

    pub fn in_eve_sector(&self, theta: f64, r: f64) -> bool {
        theta.abs() <= self.eve_half_angle() && r >= self.inner_radius && r <= self.eve_radius()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ZoneKind {
    /// Narrow zone beyond the user region: `Δ_p ≤ Δ_u`, `L_u ≤ L_p`.
    TypeI,
    /// Side wedges flanking the user region: `Δ_u ≤ Δ_p`, `L_p ≤ L_u`.
    TypeII,
    /// Wide zone enclosing the user region: `Δ_u ≤ Δ_p`, `L_u ≤ L_p`.
    TypeIII,
}

impl ZoneKind {
    pub const ALL: [ZoneKind; 3] = [ZoneKind::TypeI, ZoneKind::TypeII, ZoneKind::TypeIII];

    pub fn name(self) -> &'static str {
        match self {
            ZoneKind::TypeI => "Type-I",
            ZoneKind::TypeII => "Type-II",
            ZoneKind::TypeIII => "Type-III",
        }
    }

    pub fn short(self) -> &'static str {
        match self {
            ZoneKind::TypeI => "I",
            ZoneKind::TypeII => "II",
            ZoneKind::TypeIII => "III",
        }
    }

    /// Closed angular bounds `[lo, hi]` of the kind.
    pub fn angle_bounds(self, reg: &RegionSpec) -> (f64, f64) {
        match self {
            ZoneKind::TypeI => (0.0, reg.user_half_angle()),
            ZoneKind::TypeII | ZoneKind::TypeIII => (reg.user_half_angle(), reg.eve_half_angle()),
        }
    }

    /// Closed radial bounds `[lo, hi]` of the kind.
    pub fn radius_bounds(self, reg: &RegionSpec) -> (f64, f64) {
        match self {
            ZoneKind::TypeI | ZoneKind::TypeIII => (reg.user_radius(), reg.eve_radius()),
            ZoneKind::TypeII => (reg.inner_radius(), reg.user_radius()),
        }
    }
}

impl fmt::Display for ZoneKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ZoneKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "i" | "1" | "type-i" | "typei" => Ok(ZoneKind::TypeI),
            "ii" | "2" | "type-ii" | "typeii" => Ok(ZoneKind::TypeII),
            "iii" | "3" | "type-iii" | "typeiii" => Ok(ZoneKind::TypeIII),
            other => Err(Error::Config(format!("unknown zone kind `{other}`"))),
        }
    }
}

fn within(x: f64, lo: f64, hi: f64) -> bool {
    let tol = SLACK * hi.abs().max(lo.abs()).max(1.0);
    x >= lo - tol && x <= hi + tol
}

/// A protected zone described by its kind and its `(Δ_p, L_p)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtectedZone {
    pub kind: ZoneKind,
    pub half_angle: f64,
    pub radius: f64,
}

impl ProtectedZone {
    /// Validated constructor.
    pub fn new(kind: ZoneKind, half_angle: f64, radius: f64, reg: &RegionSpec) -> Result<Self> {
        let zone = Self {
            kind,
            half_angle,
            radius,
        };
        zone.check(reg)?;
        Ok(zone)
    }

    /// The empty zone (`q = 0`).
    pub fn none(reg: &RegionSpec) -> Self {
        Self {
            kind: ZoneKind::TypeI,
            half_angle: 0.0,
            radius: reg.user_radius(),
        }
    }

    /// Zone of `kind` with half-angle `half_angle` covering the fraction `q`
    /// of the Eve region.
    pub fn with_fraction(kind: ZoneKind, half_angle: f64, q: f64, reg: &RegionSpec) -> Result<Self> {
        let radius = radius_for_fraction(kind, half_angle, q, reg)?;
        Self::new(kind, half_angle, radius, reg)
    }

    pub fn check(&self, reg: &RegionSpec) -> Result<()> {
        let (alo, ahi) = self.kind.angle_bounds(reg);
        let (rlo, rhi) = self.kind.radius_bounds(reg);
        let infeasible = |constraint: String| Error::InfeasibleZone {
            kind: self.kind.name(),
            constraint,
        };
        if !self.half_angle.is_finite() || !within(self.half_angle, alo, ahi) {
            return Err(infeasible(format!(
                "{alo:.6} <= delta_p <= {ahi:.6} rad violated by delta_p = {:.6}",
                self.half_angle
            )));
        }
        if !self.radius.is_finite() || !within(self.radius, rlo, rhi) {
            return Err(infeasible(format!(
                "{rlo:.6} <= L_p <= {rhi:.6} m violated by L_p = {:.6}",
                self.radius
            )));
        }
        Ok(())
    }

    /// Protected area; see [`zone_area`].
    pub fn area(&self, reg: &RegionSpec) -> f64 {
        let li2 = reg.inner_radius().powi(2);
        let lu2 = reg.user_radius().powi(2);
        let lp2 = self.radius.powi(2);
        let area = match self.kind {
            ZoneKind::TypeI => (lp2 - lu2) * self.half_angle,
            ZoneKind::TypeII => (lp2 - li2) * (self.half_angle - reg.user_half_angle()),
            ZoneKind::TypeIII => (lp2 - li2) * self.half_angle - reg.user_area(),
        };
        area.max(0.0)
    }

    /// Area fraction `q = A_p / A_e`.
    pub fn fraction(&self, reg: &RegionSpec) -> f64 {
        (self.area(reg) / reg.eve_area()).clamp(0.0, 1.0)
    }

    /// Whether a point lies in the protected zone. Zone edges count as protected.
    pub fn contains(&self, theta: f64, r: f64, reg: &RegionSpec) -> bool {
        theta.abs() <= self.half_angle
            && r >= reg.inner_radius()
            && r <= self.radius
            && !(theta.abs() < reg.user_half_angle() && r < reg.user_radius())
    }
}

/// Area of a protected zone after validating it against its kind's box.
pub fn zone_area(zone: &ProtectedZone, reg: &RegionSpec) -> Result<f64> {
    zone.check(reg)?;
    Ok(zone.area(reg))
}

fn check_fraction(q: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Argument(format!("area fraction must lie in [0, 1], got {q}")));
    }
    Ok(())
}

/// Radius `L_p` for which a zone of `kind` and half-angle `half_angle`
/// covers the fraction `q` of the Eve region.
pub fn radius_for_fraction(kind: ZoneKind, half_angle: f64, q: f64, reg: &RegionSpec) -> Result<f64> {
    check_fraction(q)?;
    let (alo, ahi) = kind.angle_bounds(reg);
    let infeasible = |constraint: String| Error::InfeasibleZone {
        kind: kind.name(),
        constraint,
    };
    if !within(half_angle, alo, ahi) {
        return Err(infeasible(format!(
            "{alo:.6} <= delta_p <= {ahi:.6} rad violated by delta_p = {half_angle:.6}"
        )));
    }
    let target = q * reg.eve_area();
    let li2 = reg.inner_radius().powi(2);
    let lu2 = reg.user_radius().powi(2);
    let radius = match kind {
        ZoneKind::TypeI => {
            if target == 0.0 {
                reg.user_radius()
            } else if half_angle <= 0.0 {
                return Err(infeasible("positive area needs delta_p > 0".into()));
            } else {
                (lu2 + target / half_angle).sqrt()
            }
        }
        ZoneKind::TypeII => {
            let width = half_angle - reg.user_half_angle();
            if target == 0.0 {
                reg.inner_radius()
            } else if width <= 0.0 {
                return Err(infeasible("positive area needs delta_p > delta_u".into()));
            } else {
                (li2 + target / width).sqrt()
            }
        }
        ZoneKind::TypeIII => (li2 + (target + reg.user_area()) / half_angle).sqrt(),
    };
    let (rlo, rhi) = kind.radius_bounds(reg);
    if !within(radius, rlo, rhi) {
        return Err(infeasible(format!(
            "{rlo:.6} <= L_p <= {rhi:.6} m violated by L_p = {radius:.6} (q = {q}, delta_p = {half_angle:.6})"
        )));
    }
    Ok(radius.clamp(rlo, rhi))
}

/// Smallest radius a zone of `kind` can have while covering fraction `q`,
/// attained at the kind's widest half-angle.
pub fn min_radius(kind: ZoneKind, q: f64, reg: &RegionSpec) -> Result<f64> {
    check_fraction(q)?;
    let k = reg.expansion();
    let li2 = reg.inner_radius().powi(2);
    let lu2 = reg.user_radius().powi(2);
    let squared = match kind {
        ZoneKind::TypeI => (1.0 + q * (k.powi(3) - 1.0)) * lu2 - q * (k - 1.0) * li2,
        ZoneKind::TypeII => q * (1.0 + k + k * k) * lu2 + (1.0 - q) * li2,
        ZoneKind::TypeIII => ((1.0 + q * (k.powi(3) - 1.0)) * lu2 + (1.0 - q) * (k - 1.0) * li2) / k,
    };
    Ok(squared.sqrt())
}

/// Smallest half-angle a zone of `kind` can have while covering fraction
/// `q`, attained at the kind's largest radius (`L_e` for Types I and III,
/// `L_u` for Type II).
pub fn min_angle(kind: ZoneKind, q: f64, reg: &RegionSpec) -> Result<f64> {
    check_fraction(q)?;
    let k = reg.expansion();
    let li2 = reg.inner_radius().powi(2);
    let lu2 = reg.user_radius().powi(2);
    let du = reg.user_half_angle();
    let angle = match kind {
        ZoneKind::TypeI => q / ((k + 1.0) * lu2) * ((1.0 + k + k * k) * lu2 - li2) * du,
        ZoneKind::TypeII => (1.0 + q * ((k.powi(3) - 1.0) * lu2 - (k - 1.0) * li2) / (lu2 - li2)) * du,
        ZoneKind::TypeIII => {
            let denom = k * k * lu2 - li2;
            // the bracket is written out so that q = 0 stays finite
            (1.0 + (q * (k.powi(3) - 1.0) + (1.0 - k * k)) * lu2 / denom) * du - q * (k - 1.0) * li2 / denom * du
        }
    };
    Ok(angle)
}

/// Feasible half-angle interval `[lo, hi]` of `kind` at fraction `q`, or
/// `None` when the kind cannot realize `q`.
pub fn angle_range(kind: ZoneKind, q: f64, reg: &RegionSpec) -> Result<Option<(f64, f64)>> {
    check_fraction(q)?;
    let (alo, ahi) = kind.angle_bounds(reg);
    let (lo, hi) = match kind {
        ZoneKind::TypeI | ZoneKind::TypeII => (min_angle(kind, q, reg)?.max(alo), ahi),
        ZoneKind::TypeIII => {
            let li2 = reg.inner_radius().powi(2);
            let lu2 = reg.user_radius().powi(2);
            // L_p >= L_u caps the half-angle from above
            let cap = (q * reg.eve_area() + reg.user_area()) / (lu2 - li2);
            (min_angle(kind, q, reg)?.max(alo), cap.min(ahi))
        }
    };
    if lo <= hi * (1.0 + SLACK) {
        Ok(Some((lo, hi.max(lo))))
    } else {
        Ok(None)
    }
}

/// Smallest feasible half-angle over all kinds at fraction `q`.
pub fn min_feasible_angle(q: f64, reg: &RegionSpec) -> Result<Option<(ZoneKind, f64)>> {
    let mut best: Option<(ZoneKind, f64)> = None;
    for kind in ZoneKind::ALL {
        if let Some((lo, _)) = angle_range(kind, q, reg)? {
            if best.is_none_or(|(_, b)| lo < b) {
                best = Some((kind, lo));
            }
        }
    }
    Ok(best)
}

/// The zone with half-angle `half_angle` covering fraction `q`, trying the
/// kinds in the order I, III, II. The union of the three kinds traces one
/// continuous curve in `(Δ_p, L_p)`, so at most one kind applies away from
/// the seams.
pub fn zone_at_angle(half_angle: f64, q: f64, reg: &RegionSpec) -> Result<ProtectedZone> {
    let mut last = None;
    for kind in [ZoneKind::TypeI, ZoneKind::TypeIII, ZoneKind::TypeII] {
        match ProtectedZone::with_fraction(kind, half_angle, q, reg) {
            Ok(zone) => return Ok(zone),
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("three kinds tried"))
}

/// The zone at the smallest feasible half-angle for fraction `q`.
pub fn min_angle_zone(q: f64, reg: &RegionSpec) -> Result<ProtectedZone> {
    match min_feasible_angle(q, reg)? {
        Some((kind, angle)) => ProtectedZone::with_fraction(kind, angle, q, reg),
        None => Err(Error::InfeasibleZone {
            kind: "any",
            constraint: format!("no zone kind realizes q = {q}"),
        }),
    }
}

/// Whether `(θ, r)` lies in the Eve region outside the protected zone.
pub fn in_unprotected_eve_region(theta: f64, r: f64, reg: &RegionSpec, zone: &ProtectedZone) -> bool {
    reg.in_eve_sector(theta, r) && !reg.in_user_region(theta, r) && !zone.contains(theta, r, reg)
}

/// An axis-aligned rectangle in `(θ, r)` on the upper half-plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarRect {
    pub theta: (f64, f64),
    pub radius: (f64, f64),
}

impl PolarRect {
    /// Area of the rectangle and its mirror image below the beam axis.
    pub fn area(&self) -> f64 {
        (self.theta.1 - self.theta.0) * (self.radius.1.powi(2) - self.radius.0.powi(2))
    }

    fn nonempty(&self) -> bool {
        self.theta.1 > self.theta.0 && self.radius.1 > self.radius.0
    }
}

pub fn user_rects(reg: &RegionSpec) -> Vec<PolarRect> {
    vec![PolarRect {
        theta: (0.0, reg.user_half_angle()),
        radius: (reg.inner_radius(), reg.user_radius()),
    }]
}

/// Unprotected Eve region split so that each rectangle's radial range is
/// constant over its angular range.
pub fn unprotected_eve_rects(reg: &RegionSpec, zone: &ProtectedZone) -> Vec<PolarRect> {
    let (li, lu, le) = (reg.inner_radius(), reg.user_radius(), reg.eve_radius());
    let (du, de) = (reg.user_half_angle(), reg.eve_half_angle());
    let dp = zone.half_angle.min(de);
    let lp = zone.radius.min(le);
    let mut cuts = vec![0.0, du, de];
    if dp > 0.0 && lp > li {
        cuts.push(dp);
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts.windows(2)
        .filter_map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            let mut low = li;
            if mid < du {
                low = low.max(lu);
            }
            if mid < dp {
                low = low.max(lp);
            }
            let rect = PolarRect {
                theta: (w[0], w[1]),
                radius: (low, le),
            };
            rect.nonempty().then_some(rect)
        })
        .collect()
}

/// Protected zone as rectangles; complements [`unprotected_eve_rects`]
/// within the Eve region.
pub fn zone_rects(reg: &RegionSpec, zone: &ProtectedZone) -> Vec<PolarRect> {
    let (li, lu) = (reg.inner_radius(), reg.user_radius());
    let du = reg.user_half_angle();
    let dp = zone.half_angle.min(reg.eve_half_angle());
    let lp = zone.radius.min(reg.eve_radius());
    let mut rects = Vec::new();
    let inner = PolarRect {
        theta: (0.0, dp.min(du)),
        radius: (lu, lp),
    };
    if inner.nonempty() {
        rects.push(inner);
    }
    let side = PolarRect {
        theta: (du, dp),
        radius: (li, lp),
    };
    if side.nonempty() {
        rects.push(side);
    }
    rects
}

/// Eve region without any protected zone.
pub fn eve_rects(reg: &RegionSpec) -> Vec<PolarRect> {
    unprotected_eve_rects(reg, &ProtectedZone::none(reg))
}
