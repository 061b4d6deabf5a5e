//! Effective-gain distributions of users and Eves, their order statistics,
//! and Poisson population weights.
//!
//! A point dropped uniformly in a region with exponential fading has the
//! gain CDF `F(z) = (1/A)·∬ (1 − exp(−z/ḡ(θ, r))) r dr dθ`, where
//! `ḡ = F_M(θ)/PL(√(r² + h²))` is the mean gain at that point. A fixed tensor
//! Gauss–Legendre rule turns the double integral into a finite mixture of
//! exponentials; [`GainTables`] evaluates that mixture on a log-spaced grid
//! once and [`GainDistribution`] interpolates it. The direct nested adaptive
//! integrals ([`user_unordered_cdf`] and friends) are kept for validation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, PolarRect, ProtectedZone, RegionSpec};
use crate::propagation::{fejer_gain, mean_gain, path_loss_linear, RfConfig};
use crate::quadrature::{gauss_legendre, integrate};

/// Tail mass left above the support hint.
const TAIL_MASS: f64 = 1e-12;
/// Width of the tabulated gain range, in decades below the support hint.
const GRID_DECADES: f64 = 16.0;
const POINTS_PER_DECADE: f64 = 32.0;
const GL_ORDER: usize = 6;
/// Geometric grading toward Fejér nulls: first panel fraction and shrink factor.
const GRADE_START: f64 = 0.1;
const GRADE_RATIO: f64 = 0.25;
const GRADE_LEVELS: usize = 9;
/// Ratio between consecutive radial panel edges.
const RADIAL_RATIO: f64 = 1.6;

const DIRECT_INNER_TOL: f64 = 1e-9;
const DIRECT_OUTER_TOL: f64 = 1e-8;
const DIRECT_SEGMENTS: usize = 4000;

/// Largest mean gain anywhere in the regions: boresight at the inner radius.
fn peak_mean_gain(reg: &RegionSpec, rf: &RfConfig) -> f64 {
    let x = (reg.inner_radius().powi(2) + rf.altitude_m.powi(2)).sqrt();
    rf.antennas as f64 / path_loss_linear(x, rf.carrier_ghz).expect("positive distance")
}

/// Log-spaced abscissae shared by every table built for one `(reg, rf)`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct ZGrid {
    u0: f64,
    du: f64,
    len: usize,
}

impl ZGrid {
    fn new(support: f64) -> Self {
        let len = (GRID_DECADES * POINTS_PER_DECADE) as usize + 1;
        let u_hi = support.ln();
        let u0 = u_hi - GRID_DECADES * std::f64::consts::LN_10;
        Self {
            u0,
            du: (u_hi - u0) / (len - 1) as f64,
            len,
        }
    }

    fn z(&self, k: usize) -> f64 {
        (self.u0 + self.du * k as f64).exp()
    }

    fn lo(&self) -> f64 {
        self.u0.exp()
    }

    fn hi(&self) -> f64 {
        self.z(self.len - 1)
    }
}

/// Nodes of a mixture of exponentials: quadrature weight (area) and mean gain.
#[derive(Debug, Clone, Default)]
struct Mixture {
    weight: Vec<f64>,
    gain: Vec<f64>,
}

/// Panel edges on `[a, b]`, graded geometrically toward ends that sit on a
/// Fejér null where the integrand has a narrow feature for small gains.
fn graded_edges(a: f64, b: f64, left_null: bool, right_null: bool) -> Vec<f64> {
    let len = b - a;
    let mut edges = vec![a, b];
    for k in 1..4 {
        edges.push(a + len * k as f64 / 4.0);
    }
    let mut step = GRADE_START * len;
    for _ in 0..GRADE_LEVELS {
        if left_null {
            edges.push(a + step);
        }
        if right_null {
            edges.push(b - step);
        }
        step *= GRADE_RATIO;
    }
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    edges
}

fn is_null(theta: f64, antennas: u32) -> bool {
    if antennas <= 1 {
        return false;
    }
    let k = theta * antennas as f64 / 2.0;
    k.round() >= 1.0 && (k - k.round()).abs() < 1e-9
}

/// Angular panel edges over `[a, b]`, split at every Fejér null.
fn theta_edges(a: f64, b: f64, antennas: u32) -> Vec<f64> {
    let mut cuts = vec![a, b];
    if antennas > 1 {
        let spacing = 2.0 / antennas as f64;
        let first = (a / spacing).floor() as i64 + 1;
        let mut k = first;
        while (k as f64) * spacing < b {
            cuts.push(k as f64 * spacing);
            k += 1;
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut edges = Vec::new();
    for w in cuts.windows(2) {
        let (c, d) = (w[0], w[1]);
        if d <= c {
            continue;
        }
        let panel = graded_edges(c, d, is_null(c, antennas), is_null(d, antennas));
        if edges.is_empty() {
            edges.extend(panel);
        } else {
            edges.extend(panel.into_iter().skip(1));
        }
    }
    edges
}

fn radial_edges(a: f64, b: f64) -> Vec<f64> {
    let panels = ((b / a).ln() / RADIAL_RATIO.ln()).ceil().max(2.0) as usize;
    let ratio = (b / a).powf(1.0 / panels as f64);
    (0..=panels)
        .map(|k| if k == panels { b } else { a * ratio.powi(k as i32) })
        .collect()
}

fn rule_on(edges: &[f64], x: &[f64], w: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(edges.len() * x.len());
    let mut weights = Vec::with_capacity(edges.len() * x.len());
    for e in edges.windows(2) {
        let c = 0.5 * (e[0] + e[1]);
        let h = 0.5 * (e[1] - e[0]);
        for (xi, wi) in x.iter().zip(w) {
            nodes.push(c + h * xi);
            weights.push(h * wi);
        }
    }
    (nodes, weights)
}

impl Mixture {
    fn from_rects(rects: &[PolarRect], rf: &RfConfig) -> Self {
        let (x, w) = gauss_legendre(GL_ORDER);
        let mut mix = Mixture::default();
        for rect in rects.iter().filter(|r| r.area() > 0.0) {
            let (tn, tw) = rule_on(&theta_edges(rect.theta.0, rect.theta.1, rf.antennas), &x, &w);
            let (rn, rw) = rule_on(&radial_edges(rect.radius.0, rect.radius.1), &x, &w);
            let pl: Vec<f64> = rn
                .iter()
                .map(|r| {
                    let d = (r * r + rf.altitude_m * rf.altitude_m).sqrt();
                    path_loss_linear(d, rf.carrier_ghz).expect("positive distance")
                })
                .collect();
            for (t, wt) in tn.iter().zip(&tw) {
                let f = fejer_gain(0.0, *t, rf.antennas);
                for ((r, wr), pl) in rn.iter().zip(&rw).zip(&pl) {
                    // factor 2 for the mirror image below the beam axis
                    mix.weight.push(2.0 * wt * wr * r);
                    mix.gain.push(f / pl);
                }
            }
        }
        mix
    }

    fn total(&self) -> f64 {
        self.weight.iter().sum()
    }
}

/// Unnormalized CDF and log-slope sums of a mixture on the grid.
#[derive(Debug, Clone)]
struct Sums {
    weight: f64,
    cdf: Vec<f64>,
    slope: Vec<f64>,
}

impl Sums {
    fn tabulate(mix: &Mixture, grid: &ZGrid) -> Self {
        let pairs: Vec<(f64, f64)> = (0..grid.len)
            .into_par_iter()
            .map(|k| {
                let z = grid.z(k);
                let mut c = 0.0;
                let mut s = 0.0;
                for (&w, &g) in mix.weight.iter().zip(&mix.gain) {
                    if g <= 0.0 {
                        c += w;
                        continue;
                    }
                    let x = z / g;
                    if x > 745.0 {
                        c += w;
                    } else {
                        let e = (-x).exp();
                        c -= w * (-x).exp_m1();
                        s += w * x * e;
                    }
                }
                (c, s)
            })
            .collect();
        Self {
            weight: mix.total(),
            cdf: pairs.iter().map(|p| p.0).collect(),
            slope: pairs.iter().map(|p| p.1).collect(),
        }
    }

    fn minus(&self, other: &Sums) -> Sums {
        Sums {
            weight: self.weight - other.weight,
            cdf: self.cdf.iter().zip(&other.cdf).map(|(a, b)| a - b).collect(),
            slope: self.slope.iter().zip(&other.slope).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Evaluable CDF/PDF of an unordered effective gain.
///
/// Values come from a monotone cubic Hermite interpolant in `ln z`, so the
/// PDF is the exact derivative of the CDF.
#[derive(Debug, Clone)]
pub struct GainDistribution {
    grid: ZGrid,
    cdf: Vec<f64>,
    /// `dF/d(ln z)` at the grid points.
    slope: Vec<f64>,
    /// Power-law exponent used below the grid.
    low_exponent: f64,
}

impl GainDistribution {
    fn from_sums(sums: &Sums, grid: ZGrid) -> Result<Self> {
        if !(sums.weight > 0.0) {
            return Err(Error::Degenerate("region has no area".into()));
        }
        let mut cdf: Vec<f64> = sums.cdf.iter().map(|c| (c / sums.weight).clamp(0.0, 1.0)).collect();
        for k in 1..cdf.len() {
            if cdf[k] < cdf[k - 1] {
                cdf[k] = cdf[k - 1];
            }
        }
        let mut slope: Vec<f64> = sums.slope.iter().map(|s| (s / sums.weight).max(0.0)).collect();
        limit_slopes(&cdf, &mut slope, grid.du);
        let low_exponent = if cdf[0] > 0.0 { slope[0] / cdf[0] } else { 1.0 };
        Ok(Self {
            grid,
            cdf,
            slope,
            low_exponent,
        })
    }

    /// Gain beyond which the tail mass is below `1e-12`.
    pub fn support_hint(&self) -> f64 {
        self.grid.hi()
    }

    /// Smallest tabulated gain; a power law takes over below it.
    pub fn table_floor(&self) -> f64 {
        self.grid.lo()
    }

    pub fn cdf(&self, z: f64) -> f64 {
        self.cdf_pdf(z).0
    }

    pub fn pdf(&self, z: f64) -> f64 {
        self.cdf_pdf(z).1
    }

    /// CDF and PDF together.
    pub fn cdf_pdf(&self, z: f64) -> (f64, f64) {
        if !(z > 0.0) {
            return (0.0, 0.0);
        }
        let u = z.ln();
        let t = (u - self.grid.u0) / self.grid.du;
        if t < 0.0 {
            let f = self.cdf[0] * (self.low_exponent * (u - self.grid.u0)).exp();
            return (f, self.low_exponent * f / z);
        }
        let last = self.grid.len - 1;
        if t >= last as f64 {
            return (1.0, 0.0);
        }
        let k = (t.floor() as usize).min(last - 1);
        let s = t - k as f64;
        let h = self.grid.du;
        let (y0, y1) = (self.cdf[k], self.cdf[k + 1]);
        let (m0, m1) = (self.slope[k] * h, self.slope[k + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        let value =
            (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * m0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * m1;
        let dval = (6.0 * s2 - 6.0 * s) * y0
            + (3.0 * s2 - 4.0 * s + 1.0) * m0
            + (-6.0 * s2 + 6.0 * s) * y1
            + (3.0 * s2 - 2.0 * s) * m1;
        // dF/dz = (dF/ds)/(h·z)
        (value.clamp(0.0, 1.0), (dval / (h * z)).max(0.0))
    }
}

/// Fritsch–Carlson limiter on Hermite slopes so every cubic piece is monotone.
fn limit_slopes(values: &[f64], slopes: &mut [f64], h: f64) {
    for k in 0..values.len() - 1 {
        let secant = (values[k + 1] - values[k]) / h;
        if secant <= 0.0 {
            slopes[k] = 0.0;
            slopes[k + 1] = 0.0;
            continue;
        }
        let a = slopes[k] / secant;
        let b = slopes[k + 1] / secant;
        let r = a * a + b * b;
        if r > 9.0 {
            let tau = 3.0 / r.sqrt();
            slopes[k] = tau * a * secant;
            slopes[k + 1] = tau * b * secant;
        }
    }
}

/// Memoized gain distributions for one region and radio configuration.
///
/// The Eve-sector sums are computed once; each protected zone only needs
/// the sums over its own rectangles, which are subtracted.
#[derive(Debug, Clone)]
pub struct GainTables {
    reg: RegionSpec,
    rf: RfConfig,
    grid: ZGrid,
    user: GainDistribution,
    eve_sector: Sums,
}

impl GainTables {
    pub fn new(reg: &RegionSpec, rf: &RfConfig) -> Result<Self> {
        rf.validate()?;
        let grid = ZGrid::new(TAIL_MASS.recip().ln() * peak_mean_gain(reg, rf));
        let user_sums = Sums::tabulate(&Mixture::from_rects(&geometry::user_rects(reg), rf), &grid);
        let user = GainDistribution::from_sums(&user_sums, grid)?;
        let eve_sector = Sums::tabulate(&Mixture::from_rects(&geometry::eve_rects(reg), rf), &grid);
        Ok(Self {
            reg: *reg,
            rf: *rf,
            grid,
            user,
            eve_sector,
        })
    }

    pub fn region(&self) -> &RegionSpec {
        &self.reg
    }

    pub fn rf(&self) -> &RfConfig {
        &self.rf
    }

    /// Unordered gain of a user dropped uniformly in the user sector.
    pub fn user(&self) -> &GainDistribution {
        &self.user
    }

    /// Unordered gain of an Eve dropped uniformly in the unprotected-Eve region.
    pub fn eve(&self, zone: &ProtectedZone) -> Result<GainDistribution> {
        zone.check(&self.reg)?;
        let free_area = self.reg.eve_area() - zone.area(&self.reg);
        if free_area <= 1e-9 * self.reg.eve_area() {
            return Err(Error::Degenerate(
                "the protected zone covers the whole Eve region".into(),
            ));
        }
        let rects = geometry::zone_rects(&self.reg, zone);
        if rects.is_empty() {
            return GainDistribution::from_sums(&self.eve_sector, self.grid);
        }
        let zone_sums = Sums::tabulate(&Mixture::from_rects(&rects, &self.rf), &self.grid);
        GainDistribution::from_sums(&self.eve_sector.minus(&zone_sums), self.grid)
    }
}

/// Normalized double integral of `kernel(ḡ)` over `rects`, by nested
/// adaptive quadrature. Tolerances are relative to `scale`, the size of `kernel`.
fn direct_integral<K: Fn(f64) -> f64>(
    rects: &[PolarRect],
    rf: &RfConfig,
    area: f64,
    scale: f64,
    kernel: K,
) -> Result<f64> {
    let mut total = 0.0;
    // slivers left by rounding at a kind's edge carry no mass
    for rect in rects.iter().filter(|r| r.area() > 1e-12 * area) {
        let (ra, rb) = rect.radius;
        let radial_norm = 0.5 * (rb * rb - ra * ra);
        let nulls: Vec<f64> = theta_edges(rect.theta.0, rect.theta.1, rf.antennas)
            .into_iter()
            .filter(|&t| is_null(t, rf.antennas))
            .collect();
        let inner_err = std::cell::Cell::new(None);
        let outer = integrate(
            |theta| {
                let est = integrate(
                    |r| kernel(mean_gain(theta, r, rf)) * r,
                    ra,
                    rb,
                    &[],
                    DIRECT_INNER_TOL * scale * radial_norm,
                    DIRECT_SEGMENTS,
                );
                match est {
                    Ok(e) => e.value,
                    Err(e) => {
                        inner_err.set(Some(e.to_string()));
                        f64::NAN
                    }
                }
            },
            rect.theta.0,
            rect.theta.1,
            &nulls,
            DIRECT_OUTER_TOL * scale * 0.5 * area / rects.len() as f64,
            DIRECT_SEGMENTS,
        );
        if let Some(msg) = inner_err.take() {
            return Err(Error::Domain(format!("inner radial integral failed: {msg}")));
        }
        total += 2.0 * outer?.value;
    }
    Ok(total / area)
}

/// User gain CDF by direct nested quadrature.
pub fn user_unordered_cdf(z: f64, reg: &RegionSpec, rf: &RfConfig) -> Result<f64> {
    if z < 0.0 {
        return Err(Error::Argument(format!("gain must be nonnegative, got {z}")));
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    direct_integral(&geometry::user_rects(reg), rf, reg.user_area(), 1.0, |g| {
        cdf_kernel(z, g)
    })
}

fn free_eve_area(reg: &RegionSpec, zone: &ProtectedZone) -> Result<f64> {
    zone.check(reg)?;
    let free = reg.eve_area() - zone.area(reg);
    if free <= 1e-9 * reg.eve_area() {
        return Err(Error::Degenerate(
            "the protected zone covers the whole Eve region".into(),
        ));
    }
    Ok(free)
}

/// Eve gain CDF by direct nested quadrature over the unprotected-Eve region.
pub fn eve_unordered_cdf(y: f64, reg: &RegionSpec, zone: &ProtectedZone, rf: &RfConfig) -> Result<f64> {
    if y < 0.0 {
        return Err(Error::Argument(format!("gain must be nonnegative, got {y}")));
    }
    let area = free_eve_area(reg, zone)?;
    if y == 0.0 {
        return Ok(0.0);
    }
    direct_integral(&geometry::unprotected_eve_rects(reg, zone), rf, area, 1.0, |g| {
        cdf_kernel(y, g)
    })
}

/// Eve gain PDF by direct nested quadrature over the unprotected-Eve region.
pub fn eve_unordered_pdf(y: f64, reg: &RegionSpec, zone: &ProtectedZone, rf: &RfConfig) -> Result<f64> {
    if y < 0.0 {
        return Err(Error::Argument(format!("gain must be nonnegative, got {y}")));
    }
    let area = free_eve_area(reg, zone)?;
    if y == 0.0 {
        return Err(Error::Argument(
            "the density is evaluated at positive gains only".into(),
        ));
    }
    // the kernel peaks at 1/(e·y)
    direct_integral(&geometry::unprotected_eve_rects(reg, zone), rf, area, 1.0 / y, |g| {
        if g > 0.0 {
            (-y / g).exp() / g
        } else {
            0.0
        }
    })
}

fn cdf_kernel(z: f64, g: f64) -> f64 {
    if g > 0.0 {
        -(-z / g).exp_m1()
    } else {
        1.0
    }
}

fn check_rank(k: usize, population: usize) -> Result<()> {
    if k < 1 || k > population {
        return Err(Error::Argument(format!("rank {k} outside 1..={population}")));
    }
    Ok(())
}

/// CDF of the rank-`k` (1 = strongest) of `population` i.i.d. gains whose
/// common CDF value is `f`: the probability that fewer than `k` exceed.
pub fn ordered_cdf_value(f: f64, k: usize, population: usize) -> f64 {
    if f <= 0.0 {
        return 0.0;
    }
    if f >= 1.0 {
        return 1.0;
    }
    let (ln_f, ln_c) = (f.ln(), (-f).ln_1p());
    let n = population as f64;
    let mut ln_binom = 0.0;
    let mut total = 0.0;
    for m in 0..k {
        if m > 0 {
            ln_binom += ((n - m as f64 + 1.0) / m as f64).ln();
        }
        total += (ln_binom + (n - m as f64) * ln_f + m as f64 * ln_c).exp();
    }
    total.min(1.0)
}

/// Density of the rank-`k` gain given the unordered CDF value `f` and density `pdf`.
pub fn ordered_pdf_value(f: f64, pdf: f64, k: usize, population: usize) -> f64 {
    if pdf <= 0.0 || f <= 0.0 || (f >= 1.0 && k > 1) {
        return 0.0;
    }
    let n = population as f64;
    let kf = k as f64;
    // ln c_k = ln K! − ln (k−1)! − ln (K−k)!
    let mut ln_c = n.ln();
    for t in 1..k {
        ln_c += ((n - t as f64) / t as f64).ln();
    }
    let ln_terms = (n - kf) * f.ln() + if k > 1 { (kf - 1.0) * (-f).ln_1p() } else { 0.0 };
    pdf * (ln_c + ln_terms).exp()
}

pub fn ordered_user_cdf(dist: &GainDistribution, z: f64, k: usize, population: usize) -> Result<f64> {
    check_rank(k, population)?;
    Ok(ordered_cdf_value(dist.cdf(z), k, population))
}

pub fn ordered_user_pdf(dist: &GainDistribution, z: f64, k: usize, population: usize) -> Result<f64> {
    check_rank(k, population)?;
    let (f, p) = dist.cdf_pdf(z);
    Ok(ordered_pdf_value(f, p, k, population))
}

/// CDF of the strongest of `eves` i.i.d. Eve gains.
pub fn detrimental_eve_cdf(dist: &GainDistribution, y: f64, eves: usize) -> Result<f64> {
    if eves < 1 {
        return Err(Error::Argument("need at least one Eve".into()));
    }
    Ok(dist.cdf(y).powi(eves as i32))
}

pub fn detrimental_eve_pdf(dist: &GainDistribution, y: f64, eves: usize) -> Result<f64> {
    if eves < 1 {
        return Err(Error::Argument("need at least one Eve".into()));
    }
    let (f, p) = dist.cdf_pdf(y);
    Ok(eves as f64 * p * f.powi(eves as i32 - 1))
}

/// Poisson pmf `μⁿ e^(−μ) / n!`, evaluated in log space.
pub fn poisson_weight(n: usize, mu: f64) -> f64 {
    if mu <= 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let ln_fact: f64 = (2..=n).map(|t| (t as f64).ln()).sum();
    (n as f64 * mu.ln() - mu - ln_fact).exp()
}

/// Pmf values for `n = 0..=upto`, by the ratio recurrence in log space.
pub fn poisson_weights(mu: f64, upto: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(upto + 1);
    let mut ln_p = -mu;
    let ln_mu = mu.ln();
    for n in 0..=upto {
        if n > 0 {
            ln_p += ln_mu - (n as f64).ln();
        }
        out.push(ln_p.exp());
    }
    out
}

/// Smallest `N` with `P(X > N) < eps` for `X ~ Poisson(μ)`.
///
/// Past the mode the tail is dominated by a geometric series, which gives
/// a rigorous bound without subtracting from one.
pub fn truncation_bound(mu: f64, eps: f64) -> usize {
    let mut ln_p = -mu;
    let ln_mu = mu.ln();
    let mut n = 0usize;
    loop {
        let next = n + 1;
        let ln_next = ln_p + ln_mu - (next as f64).ln();
        let ratio = mu / (next as f64 + 1.0);
        if ratio < 1.0 {
            let tail = ln_next.exp() / (1.0 - ratio);
            if tail < eps {
                return n;
            }
        }
        ln_p = ln_next;
        n = next;
    }
}

/// Which area the Eve count is drawn over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum EvePopulation {
    /// Thinned process: only the unprotected-Eve area `A_e − A_p`.
    #[default]
    Unprotected,
    /// The whole Eve region `A_e`, as if the zone removed no Eves.
    Full,
}

/// Poisson means of the user and Eve counts and the NOMA/SUT thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopulationModel {
    pub user_density: f64,
    pub eve_density: f64,
    pub mean_users: f64,
    pub mean_eves: f64,
    /// Smallest user count for NOMA (the weak rank `i`).
    pub noma_min: usize,
    /// Smallest user count for SUT (the strong rank `j`).
    pub sut_min: usize,
}

impl PopulationModel {
    pub fn new(
        reg: &RegionSpec,
        zone: &ProtectedZone,
        user_density: f64,
        eve_density: f64,
        weak_rank: usize,
        strong_rank: usize,
        eves: EvePopulation,
    ) -> Result<Self> {
        if !(user_density > 0.0) || !(eve_density > 0.0) {
            return Err(Error::Config("densities must be positive".into()));
        }
        if strong_rank < 1 || strong_rank >= weak_rank {
            return Err(Error::Config("ranks must satisfy 1 <= strong rank < weak rank".into()));
        }
        let eve_area = match eves {
            EvePopulation::Unprotected => reg.eve_area() - zone.area(reg),
            EvePopulation::Full => reg.eve_area(),
        };
        let mean_eves = eve_area * eve_density;
        if !(mean_eves > 0.0) {
            return Err(Error::Degenerate("no unprotected Eve area".into()));
        }
        Ok(Self {
            user_density,
            eve_density,
            mean_users: reg.user_area() * user_density,
            mean_eves,
            noma_min: weak_rank,
            sut_min: strong_rank,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ZoneKind;

    fn reference(kappa: f64) -> RegionSpec {
        RegionSpec::new(5.0, 50.0, 2.5f64.to_radians(), kappa).unwrap()
    }

    #[test]
    fn poisson_basics() {
        for mu in [0.5, 3.0, 108.0] {
            assert!((poisson_weight(0, mu) - (-mu).exp()).abs() < 1e-15);
            let table = poisson_weights(mu, 40);
            for (n, p) in table.iter().enumerate() {
                assert!((p - poisson_weight(n, mu)).abs() <= 1e-12 * p.max(1e-300));
            }
        }
    }

    #[test]
    fn truncation_covers_mass() {
        for mu in [1.0, 10.0, 108.0] {
            let n = truncation_bound(mu, 1e-12);
            let mass: f64 = poisson_weights(mu, n).iter().sum();
            assert!(mass >= 1.0 - 1e-12, "mu={mu} n={n} mass={mass}");
            // one fewer term is not enough by the same bound
            assert!(n > mu as usize);
        }
    }

    #[test]
    fn reference_mean_users() {
        let reg = reference(3.0);
        let zone = ProtectedZone::none(&reg);
        let pop = PopulationModel::new(&reg, &zone, 1.0, 0.1, 10, 1, EvePopulation::Unprotected).unwrap();
        assert!((pop.mean_users - 108.0).abs() < 0.05);
        assert!((pop.mean_eves - 0.1 * reg.eve_area()).abs() < 1e-9);
    }

    #[test]
    fn ordered_values_reduce_to_unordered_for_one_user() {
        for f in [0.0, 0.1, 0.5, 0.999] {
            assert!((ordered_cdf_value(f, 1, 1) - f).abs() < 1e-15);
            assert!((ordered_pdf_value(f, 2.5, 1, 1) - 2.5).abs() < 1e-12 || f == 0.0);
        }
    }

    #[test]
    fn ordered_cdf_matches_regularized_beta_by_quadrature() {
        // rank-k CDF equals the integral of its density in F
        let (k, n) = (3, 7);
        for f in [0.2, 0.6, 0.9] {
            let est = integrate(|t| ordered_pdf_value(t, 1.0, k, n), 0.0, f, &[], 1e-13, 200).unwrap();
            assert!((est.value - ordered_cdf_value(f, k, n)).abs() < 1e-12);
        }
    }

    #[test]
    fn mixture_identity_of_order_statistics() {
        for f in [0.05, 0.3, 0.7, 0.95] {
            let n = 6;
            let sum: f64 = (1..=n).map(|k| ordered_pdf_value(f, 1.7, k, n)).sum::<f64>() / n as f64;
            assert!((sum - 1.7).abs() < 1e-12);
        }
    }

    #[test]
    fn ordered_cdf_nondecreasing_in_rank() {
        for f in [0.01, 0.2, 0.5, 0.8, 0.99] {
            let values: Vec<f64> = (1..=4).map(|k| ordered_cdf_value(f, k, 4)).collect();
            assert!(values.windows(2).all(|w| w[0] <= w[1] + 1e-15), "{values:?}");
        }
    }

    #[test]
    fn rank_checks() {
        let reg = reference(3.0);
        let tables = GainTables::new(&reg, &RfConfig::default()).unwrap();
        assert!(ordered_user_cdf(tables.user(), 1e-9, 0, 3).is_err());
        assert!(ordered_user_cdf(tables.user(), 1e-9, 4, 3).is_err());
        assert!(detrimental_eve_cdf(tables.user(), 1e-9, 0).is_err());
    }

    #[test]
    fn graded_edges_hit_nulls() {
        let edges = theta_edges(0.0, 0.05, 100);
        for null in [0.02, 0.04] {
            assert!(edges.iter().any(|&e| (e - null).abs() < 1e-15));
        }
        assert!(edges.windows(2).all(|w| w[1] > w[0]));
        let closest = edges
            .iter()
            .map(|&e| (e - 0.02).abs())
            .filter(|&d| d > 0.0)
            .fold(1.0, f64::min);
        assert!(closest < 1e-6);
    }

    #[test]
    fn tables_normalize_and_bound() {
        let reg = reference(3.0);
        let rf = RfConfig::default();
        let tables = GainTables::new(&reg, &rf).unwrap();
        let user = tables.user();
        assert_eq!(user.cdf(0.0), 0.0);
        assert!(user.cdf(user.support_hint()) > 1.0 - 1e-9);
        assert_eq!(user.cdf(2.0 * user.support_hint()), 1.0);
        let zone = ProtectedZone::none(&reg);
        let eve = tables.eve(&zone).unwrap();
        let mut last = 0.0;
        for k in 0..400 {
            let z = eve.table_floor() * 10f64.powf(k as f64 * 0.045);
            let c = eve.cdf(z);
            assert!(c >= last && c <= 1.0);
            last = c;
        }
    }

    #[test]
    fn full_coverage_is_degenerate() {
        let reg = reference(3.0);
        let tables = GainTables::new(&reg, &RfConfig::default()).unwrap();
        let full = ProtectedZone::new(ZoneKind::TypeIII, reg.eve_half_angle(), reg.eve_radius(), &reg).unwrap();
        assert!(matches!(tables.eve(&full), Err(Error::Degenerate(_))));
        assert!(matches!(
            eve_unordered_cdf(1e-9, &reg, &full, &RfConfig::default()),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn tables_match_direct_quadrature() {
        let reg = reference(3.0);
        let rf = RfConfig::default();
        let tables = GainTables::new(&reg, &rf).unwrap();
        let q = 0.05;
        let zone = geometry::min_angle_zone(q, &reg).unwrap();
        let eve = tables.eve(&zone).unwrap();
        for z in [1e-14, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8, 1e-7] {
            let direct_u = user_unordered_cdf(z, &reg, &rf).unwrap();
            let direct_e = eve_unordered_cdf(z, &reg, &zone, &rf).unwrap();
            assert!(
                (tables.user().cdf(z) - direct_u).abs() < 2e-7,
                "user z={z}: {} vs {direct_u}",
                tables.user().cdf(z)
            );
            assert!(
                (eve.cdf(z) - direct_e).abs() < 2e-7,
                "eve z={z}: {} vs {direct_e}",
                eve.cdf(z)
            );
        }
        for y in [1e-11, 1e-10, 1e-9] {
            let direct = eve_unordered_pdf(y, &reg, &zone, &rf).unwrap();
            assert!(
                (eve.pdf(y) / direct - 1.0).abs() < 1e-4,
                "pdf y={y}: {} vs {direct}",
                eve.pdf(y)
            );
        }
    }

    #[test]
    fn pdf_matches_central_differences() {
        let reg = reference(3.0);
        let rf = RfConfig::default();
        let tables = GainTables::new(&reg, &rf).unwrap();
        let zone = geometry::min_angle_zone(0.2, &reg).unwrap();
        let eve = tables.eve(&zone).unwrap();
        for dist in [tables.user(), &eve] {
            for k in 0..100 {
                let z = dist.table_floor() * 1e2 * 10f64.powf(k as f64 * 0.135);
                let h = z * 1e-4;
                let fd = (dist.cdf(z + h) - dist.cdf(z - h)) / (2.0 * h);
                let p = dist.pdf(z);
                // near F = 1 the differences drown in rounding
                if p * z > 1e-6 {
                    assert!((fd / p - 1.0).abs() < 1e-4, "z={z}: fd={fd} pdf={p}");
                }
            }
        }
    }
}
