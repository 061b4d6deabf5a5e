//! Conditional secrecy outage of the strong, weak and SUT users and the
//! Poisson-weighted hybrid NOMA/SUT sum secrecy rate.
//!
//! Every outage is an expectation over the most detrimental Eve's gain `y`
//! of an ordered-user CDF evaluated at a threshold `δ(y)`. Two routes
//! compute it:
//!
//! * [`Analytic::outage_strong`] and [`Analytic::outage_weak`] integrate one
//!   `(K, K_e)` pair with adaptive Gauss–Kronrod in `ln y`;
//! * [`Analytic::rates`] uses one fixed rule in `y` for all pairs at once.
//!   The Eve-count sum is folded into the node weights, and the unordered
//!   user CDF at each node's threshold is shared across user counts.

use serde::{Deserialize, Serialize};

use crate::distributions::{ordered_cdf_value, poisson_weights, truncation_bound, GainDistribution, PopulationModel};
use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, integrate};

/// Poisson tail mass dropped from each population sum.
const POPULATION_TAIL: f64 = 1e-10;
/// User counts whose probability is below this are skipped.
const NEGLIGIBLE_WEIGHT: f64 = 1e-18;
/// Panels per decade and nodes per panel of the fixed rule in `ln y`.
const PANELS_PER_DECADE: f64 = 8.0;
const PANEL_ORDER: usize = 8;
/// The weak-user integral stops this close (relative) to its pole.
const POLE_GAP: f64 = 1e-9;
const ADAPTIVE_TOL: f64 = 1e-8;
const ADAPTIVE_SEGMENTS: usize = 4000;

/// Decoding capability of the most detrimental Eve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum EveMode {
    /// The Eve has already removed the weak user's message before decoding
    /// the strong user's.
    #[default]
    WorstCase,
    /// The Eve treats the other message as noise.
    BestCase,
}

impl EveMode {
    pub fn name(self) -> &'static str {
        match self {
            EveMode::WorstCase => "worst-case",
            EveMode::BestCase => "best-case",
        }
    }
}

impl std::str::FromStr for EveMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "worst-case" | "worst" | "worstcase" => Ok(EveMode::WorstCase),
            "best-case" | "best" | "bestcase" => Ok(EveMode::BestCase),
            other => Err(Error::Config(format!("unknown Eve mode `{other}`"))),
        }
    }
}

/// Which link the strong-user threshold describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StrongLink {
    Noma(EveMode),
    /// Single-user transmission: all power to the scheduled user.
    Sut,
}

/// How the Eve-count sum treats the conditioning on at least one Eve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum EveConditioning {
    /// Weights `Pr(K_e = m) / (1 − e^(−μ_e))` for `m ≥ 1`.
    #[default]
    Renormalized,
    /// Unconditioned Poisson weights for `m ≥ 1`.
    Literal,
}

/// Two-user NOMA pair and its targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NomaConfig {
    /// Rank `i` of the weak user (1 = strongest).
    pub weak_rank: usize,
    /// Rank `j` of the strong user.
    pub strong_rank: usize,
    /// `β_i²`
    pub weak_power: f64,
    /// `β_j²`
    pub strong_power: f64,
    /// `R̄_i` in BPCU.
    pub weak_target: f64,
    /// `R̄_j` in BPCU.
    pub strong_target: f64,
    pub eve_mode: EveMode,
}

impl Default for NomaConfig {
    fn default() -> Self {
        Self {
            weak_rank: 10,
            strong_rank: 1,
            weak_power: 0.75,
            strong_power: 0.25,
            weak_target: 1.0,
            strong_target: 4.0,
            eve_mode: EveMode::WorstCase,
        }
    }
}

impl NomaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.strong_rank < 1 || self.weak_rank <= self.strong_rank {
            return Err(Error::Config("ranks must satisfy 1 <= strong rank < weak rank".into()));
        }
        if (self.weak_power + self.strong_power - 1.0).abs() > 1e-9 {
            return Err(Error::Config("power fractions must sum to 1".into()));
        }
        if !(self.weak_power > self.strong_power) || !(self.strong_power > 0.0) {
            return Err(Error::Config(
                "the weak user must get the larger, and the strong user a positive, power fraction".into(),
            ));
        }
        if !(self.weak_target >= 0.0) || !(self.strong_target >= 0.0) {
            return Err(Error::Config("target rates must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Largest strong-user gain that is still in outage against an Eve gain `y`.
pub fn delta_max_strong(y: f64, rho: f64, cfg: &NomaConfig, link: StrongLink) -> f64 {
    let two_r = cfg.strong_target.exp2();
    match link {
        StrongLink::Noma(EveMode::WorstCase) => (two_r - 1.0) / (rho * cfg.strong_power) + two_r * y,
        StrongLink::Noma(EveMode::BestCase) => {
            (two_r - 1.0) / (rho * cfg.strong_power) + two_r * y / (1.0 + rho * y * cfg.weak_power)
        }
        StrongLink::Sut => (two_r - 1.0) / rho + two_r * y,
    }
}

/// Eve gain `ϱ` at and above which the weak user is always in outage.
/// Zero when even a silent Eve leaves the target out of reach.
pub fn weak_pole(rho: f64, cfg: &NomaConfig) -> f64 {
    let two_r = cfg.weak_target.exp2();
    let num = 1.0 - two_r * cfg.strong_power;
    if num <= 0.0 {
        return 0.0;
    }
    num / (rho * cfg.strong_power * (two_r - 1.0))
}

/// Weak-user threshold `δ_i(y)` and pole `ϱ`. The threshold is `+∞` at and
/// beyond the pole.
pub fn weak_integration_limits(y: f64, rho: f64, cfg: &NomaConfig) -> (f64, f64) {
    let pole = weak_pole(rho, cfg);
    if y >= pole {
        return (f64::INFINITY, pole);
    }
    let two_r = cfg.weak_target.exp2();
    let bj = cfg.strong_power;
    let num = two_r * (1.0 + rho * y) - (1.0 + rho * bj * y);
    let den = rho * ((1.0 + rho * bj * y) - two_r * bj * (1.0 + rho * y));
    if den <= 0.0 {
        return (f64::INFINITY, pole);
    }
    (num / den, pole)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Analytic,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Condition {
    Stratum { users: usize, eves: usize },
    Marginalized,
}

/// Per-user secrecy outage probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutageResult {
    pub p_weak: f64,
    pub p_strong: f64,
    /// `None` when no SUT population contributes.
    pub p_sut: Option<f64>,
    pub method: Method,
    pub condition: Condition,
}

/// Hybrid sum secrecy rate and the outages behind it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateBreakdown {
    pub noma: f64,
    pub sut: f64,
    pub total: f64,
    /// Outages averaged over the NOMA (weak, strong) and SUT populations.
    pub outage: OutageResult,
}

/// Fixed quadrature nodes with weights already multiplied by the Jacobian.
#[derive(Debug, Clone, Default)]
struct Nodes {
    y: Vec<f64>,
    w: Vec<f64>,
}

impl Nodes {
    /// Composite Gauss–Legendre in `ln y` over `[a, b]`.
    fn log_spaced(a: f64, b: f64) -> Self {
        let mut nodes = Nodes::default();
        if !(b > a) || !(a > 0.0) {
            return nodes;
        }
        let (x, w) = gauss_legendre(PANEL_ORDER);
        let (ua, ub) = (a.ln(), b.ln());
        let panels = ((ub - ua) / std::f64::consts::LN_10 * PANELS_PER_DECADE)
            .ceil()
            .max(1.0) as usize;
        let h = (ub - ua) / panels as f64;
        for p in 0..panels {
            let c = ua + h * (p as f64 + 0.5);
            for (xi, wi) in x.iter().zip(&w) {
                let y = (c + 0.5 * h * xi).exp();
                nodes.y.push(y);
                nodes.w.push(0.5 * h * wi * y);
            }
        }
        nodes
    }

    /// Nodes on `[start, pole·(1 − gap)]` clustered toward `pole` through
    /// `y = pole − e^v`.
    fn toward_pole(start: f64, pole: f64) -> Self {
        let mut nodes = Nodes::default();
        let (va, vb) = ((pole * POLE_GAP).ln(), (pole - start).ln());
        if !(vb > va) {
            return nodes;
        }
        let inner = Nodes::log_spaced(va.exp(), vb.exp());
        for (gap, w) in inner.y.iter().zip(&inner.w) {
            nodes.y.push(pole - gap);
            nodes.w.push(*w);
        }
        nodes
    }
}

/// Eve-count weights `p_m`, `m ≥ 1`.
fn eve_count_weights(mean_eves: f64, conditioning: EveConditioning) -> Vec<(usize, f64)> {
    let upto = truncation_bound(mean_eves, POPULATION_TAIL).max(1);
    let pmf = poisson_weights(mean_eves, upto);
    let norm = match conditioning {
        EveConditioning::Renormalized => 1.0 / -(-mean_eves).exp_m1(),
        EveConditioning::Literal => 1.0,
    };
    (1..=upto).map(|m| (m, pmf[m] * norm)).collect()
}

/// Outage model for one user distribution, one Eve distribution and one
/// transmit SNR scale `ρ = P/N₀`.
#[derive(Debug, Clone, Copy)]
pub struct Analytic<'a> {
    pub user: &'a GainDistribution,
    pub eve: &'a GainDistribution,
    pub rho: f64,
    pub cfg: NomaConfig,
}

impl<'a> Analytic<'a> {
    pub fn new(user: &'a GainDistribution, eve: &'a GainDistribution, rho: f64, cfg: NomaConfig) -> Result<Self> {
        cfg.validate()?;
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::Argument(format!(
                "SNR scale must be positive and finite, got {rho}"
            )));
        }
        Ok(Self { user, eve, rho, cfg })
    }

    fn y_lo(&self) -> f64 {
        self.eve.table_floor()
    }

    fn y_hi(&self) -> f64 {
        self.eve.support_hint()
    }

    /// `∫ G(y) dF_E(y)^{K_e}` over `[0, top]` with `G` bounded by one.
    fn expect_over_eve(&self, eves: usize, top: f64, g: impl Fn(f64) -> f64) -> Result<f64> {
        let lo = self.y_lo();
        let top = top.min(self.y_hi());
        let ke = eves as i32;
        // mass below the table sits at the floor
        let floor_mass = self.eve.cdf(lo.min(top)).powi(ke);
        let mut total = g(lo.min(top)) * floor_mass;
        if top > lo {
            let (ua, ub) = (lo.ln(), top.ln());
            let decades: Vec<f64> = (1..)
                .map(|k| ua + k as f64 * std::f64::consts::LN_10)
                .take_while(|&u| u < ub)
                .collect();
            let est = integrate(
                |u| {
                    let y = u.exp();
                    let (f, p) = self.eve.cdf_pdf(y);
                    if p <= 0.0 {
                        return 0.0;
                    }
                    g(y) * eves as f64 * p * f.powi(ke - 1) * y
                },
                ua,
                ub,
                &decades,
                ADAPTIVE_TOL,
                ADAPTIVE_SEGMENTS,
            )?;
            total += est.value;
        }
        Ok(total)
    }

    fn check_counts(users: usize, eves: usize, min_users: usize) -> Result<()> {
        if users < min_users {
            return Err(Error::Argument(format!("need at least {min_users} users, got {users}")));
        }
        if eves < 1 {
            return Err(Error::Argument("need at least one Eve".into()));
        }
        Ok(())
    }

    /// Conditional outage of the strong user (or the SUT user) given `K`
    /// users and `K_e` Eves.
    pub fn outage_strong(&self, users: usize, eves: usize, link: StrongLink) -> Result<f64> {
        let j = self.cfg.strong_rank;
        match link {
            StrongLink::Noma(_) => Self::check_counts(users, eves, self.cfg.weak_rank)?,
            StrongLink::Sut => {
                Self::check_counts(users, eves, j)?;
                if users >= self.cfg.weak_rank {
                    return Err(Error::Argument(format!(
                        "SUT applies to {j} <= K < {}, got K = {users}",
                        self.cfg.weak_rank
                    )));
                }
            }
        }
        let value = self.expect_over_eve(eves, f64::INFINITY, |y| {
            ordered_cdf_value(self.user.cdf(delta_max_strong(y, self.rho, &self.cfg, link)), j, users)
        })?;
        Ok(value.clamp(0.0, 1.0))
    }

    /// Conditional outage of the weak user given `K ≥ i` users and `K_e` Eves.
    pub fn outage_weak(&self, users: usize, eves: usize) -> Result<f64> {
        let i = self.cfg.weak_rank;
        Self::check_counts(users, eves, i)?;
        let pole = weak_pole(self.rho, &self.cfg);
        if pole <= 0.0 {
            return Ok(1.0);
        }
        let edge = pole * (1.0 - POLE_GAP);
        let below = self.expect_over_eve(eves, edge, |y| {
            let (delta, _) = weak_integration_limits(y, self.rho, &self.cfg);
            ordered_cdf_value(self.user.cdf(delta), i, users)
        })?;
        // past the pole the weak user is always in outage
        let above = 1.0 - self.eve.cdf(edge.min(self.y_hi())).powi(eves as i32);
        Ok((below + above).clamp(0.0, 1.0))
    }

    /// Conditional outage of the SUT user given `j ≤ K < i` users.
    pub fn outage_sut(&self, users: usize, eves: usize) -> Result<f64> {
        self.outage_strong(users, eves, StrongLink::Sut)
    }

    /// Folded Eve weights `Σ_m p_m·d/dy[F_E(y)^m]` times the node weight, plus
    /// the mass below the first node.
    fn folded(&self, nodes: &Nodes, counts: &[(usize, f64)]) -> (Vec<f64>, f64) {
        let weights = nodes
            .y
            .iter()
            .zip(&nodes.w)
            .map(|(&y, &w)| {
                let (f, p) = self.eve.cdf_pdf(y);
                if p <= 0.0 {
                    return 0.0;
                }
                let mut power = 1.0;
                let mut sum = 0.0;
                let mut next = 1;
                for &(m, pm) in counts {
                    while next < m {
                        power *= f;
                        next += 1;
                    }
                    sum += pm * m as f64 * power;
                }
                w * p * sum
            })
            .collect();
        let f_lo = self.eve.cdf(self.y_lo());
        let floor = counts.iter().map(|&(m, pm)| pm * f_lo.powi(m as i32)).sum();
        (weights, floor)
    }

    /// Poisson-weighted hybrid NOMA/SUT sum secrecy rate.
    pub fn rates(&self, pop: &PopulationModel, conditioning: EveConditioning) -> Result<RateBreakdown> {
        let cfg = &self.cfg;
        if pop.noma_min != cfg.weak_rank || pop.sut_min != cfg.strong_rank {
            return Err(Error::Argument(
                "population thresholds must match the NOMA ranks".into(),
            ));
        }
        let counts = eve_count_weights(pop.mean_eves, conditioning);
        let eve_mass: f64 = counts.iter().map(|c| c.1).sum();
        let n_max = truncation_bound(pop.mean_users, POPULATION_TAIL).max(cfg.weak_rank);
        let user_pmf = poisson_weights(pop.mean_users, n_max);

        // strong and SUT thresholds share the nodes over the full Eve range
        let strong_nodes = Nodes::log_spaced(self.y_lo(), self.y_hi());
        let (strong_w, strong_floor) = self.folded(&strong_nodes, &counts);
        let at = |link: StrongLink| -> (Vec<f64>, f64) {
            let f = strong_nodes
                .y
                .iter()
                .map(|&y| self.user.cdf(delta_max_strong(y, self.rho, cfg, link)))
                .collect();
            (f, self.user.cdf(delta_max_strong(self.y_lo(), self.rho, cfg, link)))
        };
        let (f_strong, f_strong_floor) = at(StrongLink::Noma(cfg.eve_mode));
        let (f_sut, f_sut_floor) = at(StrongLink::Sut);

        // weak user: nodes stop at the pole, where the threshold diverges
        let pole = weak_pole(self.rho, cfg);
        let mut weak_nodes = Nodes::default();
        let mut weak_tail = eve_mass;
        let mut f_weak_floor = 0.0;
        if pole > 0.0 {
            let split = (0.5 * pole).max(self.y_lo());
            if split < pole {
                let mut first = Nodes::log_spaced(self.y_lo(), split.min(self.y_hi()));
                let second = Nodes::toward_pole(split, pole.min(self.y_hi() / (1.0 - POLE_GAP)));
                first.y.extend(second.y);
                first.w.extend(second.w);
                weak_nodes = first;
            }
            let edge = (pole * (1.0 - POLE_GAP)).min(self.y_hi());
            let f_edge = self.eve.cdf(edge);
            weak_tail = counts.iter().map(|&(m, pm)| pm * (1.0 - f_edge.powi(m as i32))).sum();
            let (delta_lo, _) = weak_integration_limits(self.y_lo().min(edge), self.rho, cfg);
            f_weak_floor = self.user.cdf(delta_lo);
        }
        let (weak_w, weak_floor) = self.folded(&weak_nodes, &counts);
        let f_weak: Vec<f64> = weak_nodes
            .y
            .iter()
            .map(|&y| self.user.cdf(weak_integration_limits(y, self.rho, cfg).0))
            .collect();
        let weak_floor = if pole > 0.0 { weak_floor } else { 0.0 };

        let expect = |f: &[f64], w: &[f64], f_floor: f64, floor: f64, rank: usize, n: usize| -> f64 {
            let body: f64 = f
                .iter()
                .zip(w)
                .map(|(&fv, &wv)| ordered_cdf_value(fv, rank, n) * wv)
                .sum();
            body + ordered_cdf_value(f_floor, rank, n) * floor
        };

        let (mut noma, mut sut) = (0.0, 0.0);
        let (mut noma_mass, mut sut_mass) = (0.0, 0.0);
        let (mut weak_out, mut strong_out, mut sut_out) = (0.0, 0.0, 0.0);
        for (n, &pn) in user_pmf.iter().enumerate() {
            if n < cfg.strong_rank || pn < NEGLIGIBLE_WEIGHT {
                continue;
            }
            if n >= cfg.weak_rank {
                let ps = expect(&f_strong, &strong_w, f_strong_floor, strong_floor, cfg.strong_rank, n);
                let pw = expect(&f_weak, &weak_w, f_weak_floor, weak_floor, cfg.weak_rank, n) + weak_tail;
                let (ps, pw) = (ps.clamp(0.0, eve_mass), pw.clamp(0.0, eve_mass));
                noma += pn * ((eve_mass - pw) * cfg.weak_target + (eve_mass - ps) * cfg.strong_target);
                noma_mass += pn;
                weak_out += pn * pw;
                strong_out += pn * ps;
            } else {
                let po = expect(&f_sut, &strong_w, f_sut_floor, strong_floor, cfg.strong_rank, n).clamp(0.0, eve_mass);
                sut += pn * (eve_mass - po) * cfg.strong_target;
                sut_mass += pn;
                sut_out += pn * po;
            }
        }
        let avg = |x: f64, mass: f64| {
            if mass > 0.0 {
                (x / (mass * eve_mass)).clamp(0.0, 1.0)
            } else {
                0.0
            }
        };
        Ok(RateBreakdown {
            noma,
            sut,
            total: noma + sut,
            outage: OutageResult {
                p_weak: avg(weak_out, noma_mass),
                p_strong: avg(strong_out, noma_mass),
                p_sut: (sut_mass > 0.0).then(|| avg(sut_out, sut_mass)),
                method: Method::Analytic,
                condition: Condition::Marginalized,
            },
        })
    }

    pub fn sum_secrecy_noma(&self, pop: &PopulationModel, conditioning: EveConditioning) -> Result<f64> {
        Ok(self.rates(pop, conditioning)?.noma)
    }

    pub fn sum_secrecy_sut(&self, pop: &PopulationModel, conditioning: EveConditioning) -> Result<f64> {
        Ok(self.rates(pop, conditioning)?.sut)
    }

    pub fn sum_secrecy_total(&self, pop: &PopulationModel, conditioning: EveConditioning) -> Result<f64> {
        Ok(self.rates(pop, conditioning)?.total)
    }

    /// Outages for one `(K, K_e)` stratum by the adaptive route.
    pub fn stratum(&self, users: usize, eves: usize) -> Result<OutageResult> {
        let (p_weak, p_strong, p_sut) = if users >= self.cfg.weak_rank {
            (
                self.outage_weak(users, eves)?,
                self.outage_strong(users, eves, StrongLink::Noma(self.cfg.eve_mode))?,
                None,
            )
        } else {
            (0.0, 0.0, Some(self.outage_sut(users, eves)?))
        };
        Ok(OutageResult {
            p_weak,
            p_strong,
            p_sut,
            method: Method::Analytic,
            condition: Condition::Stratum { users, eves },
        })
    }
}
