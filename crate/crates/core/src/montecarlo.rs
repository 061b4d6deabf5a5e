//! Monte Carlo simulation of deployments, SIC decoding and eavesdropping.
//!
//! Trials are grouped into fixed-size batches. Batch `b` draws from a
//! ChaCha8 stream seeded with the run seed and switched to stream `b`, and
//! batch tallies are merged in batch order, so results depend only on the
//! seed and the trial count.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{Condition, EveMode, Method, NomaConfig, OutageResult};
use crate::distributions::PopulationModel;
use crate::error::{Error, Result};
use crate::geometry::{in_unprotected_eve_region, ProtectedZone, RegionSpec};
use crate::propagation::{effective_gain, sample_fading, GainKernel, LinkGeometry, RfConfig};
use crate::scenario::Scenario;

/// Trials per random stream.
pub const BATCH: u64 = 4096;

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959963984540054;

/// One sampled population.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Deployment {
    pub users: Vec<LinkGeometry>,
    pub eves: Vec<LinkGeometry>,
}

/// Which transmission the trial used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Noma,
    Sut,
    /// Fewer users than the strong rank: nothing is sent.
    Idle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkOutcome {
    /// `[user rate − Eve rate]⁺` in BPCU.
    pub secrecy_rate: f64,
    pub outage: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    /// User gains, strongest first.
    pub user_gains: Vec<f64>,
    /// Gain of the most detrimental Eve (zero without Eves).
    pub eve_gain: f64,
    pub scheme: Scheme,
    pub weak: Option<LinkOutcome>,
    /// The strong NOMA user, or the scheduled user under SUT.
    pub strong: Option<LinkOutcome>,
    /// Hybrid rate delivered in this trial.
    pub rate: f64,
    /// Time-split OMA rate delivered in this trial.
    pub oma_rate: f64,
}

/// Area-uniform radius on `[lo, hi]` by inversion.
fn uniform_radius<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    let u: f64 = rng.random();
    (lo * lo + u * (hi * hi - lo * lo)).sqrt()
}

fn uniform_angle<R: Rng + ?Sized>(rng: &mut R, half: f64) -> f64 {
    half * (2.0 * rng.random::<f64>() - 1.0)
}

/// Poisson count, optionally conditioned to be at least one.
fn poisson_count<R: Rng + ?Sized>(rng: &mut R, mean: f64, at_least_one: bool) -> usize {
    if !(mean > 0.0) {
        return usize::from(at_least_one);
    }
    if at_least_one && mean < 30.0 {
        // invert the zero-truncated CDF
        let p0 = (-mean).exp();
        let u = p0 + rng.random::<f64>() * (1.0 - p0);
        let (mut n, mut p, mut cum) = (0usize, p0, p0);
        while cum < u && n < 10_000 {
            n += 1;
            p *= mean / n as f64;
            cum += p;
        }
        return n.max(1);
    }
    let dist = Poisson::new(mean).expect("positive mean");
    loop {
        let n = dist.sample(rng) as usize;
        if n >= 1 || !at_least_one {
            return n;
        }
    }
}

fn draw_user<R: Rng + ?Sized>(rng: &mut R, reg: &RegionSpec) -> LinkGeometry {
    LinkGeometry {
        distance: uniform_radius(rng, reg.inner_radius(), reg.user_radius()),
        theta: uniform_angle(rng, reg.user_half_angle()),
        fading: sample_fading(rng),
    }
}

/// Uniform point of the unprotected Eve region by rejection from the Eve sector.
fn draw_eve<R: Rng + ?Sized>(rng: &mut R, reg: &RegionSpec, zone: &ProtectedZone) -> LinkGeometry {
    loop {
        let distance = uniform_radius(rng, reg.inner_radius(), reg.eve_radius());
        let theta = uniform_angle(rng, reg.eve_half_angle());
        if in_unprotected_eve_region(theta, distance, reg, zone) {
            return LinkGeometry {
                theta,
                distance,
                fading: sample_fading(rng),
            };
        }
    }
}

fn fill_deployment<R: Rng + ?Sized>(
    rng: &mut R,
    reg: &RegionSpec,
    zone: &ProtectedZone,
    users: usize,
    eves: usize,
    dep: &mut Deployment,
) {
    dep.users.clear();
    dep.eves.clear();
    dep.users.extend((0..users).map(|_| draw_user(rng, reg)));
    dep.eves.extend((0..eves).map(|_| draw_eve(rng, reg, zone)));
}

/// Draws user and Eve counts from `pop` (the Eve count conditioned on at
/// least one) and places them uniformly.
pub fn draw_deployment<R: Rng + ?Sized>(
    reg: &RegionSpec,
    zone: &ProtectedZone,
    pop: &PopulationModel,
    rng: &mut R,
) -> Deployment {
    let mut dep = Deployment::default();
    let users = poisson_count(rng, pop.mean_users, false);
    let eves = poisson_count(rng, pop.mean_eves, true);
    fill_deployment(rng, reg, zone, users, eves, &mut dep);
    dep
}

fn rate(sinr: f64) -> f64 {
    sinr.ln_1p() / std::f64::consts::LN_2
}

/// Secrecy outcome against a target; the boundary counts as success.
fn secrecy(user: f64, eve: f64, target: f64) -> LinkOutcome {
    let secrecy_rate = (user - eve).max(0.0);
    LinkOutcome {
        secrecy_rate,
        outage: secrecy_rate < target,
    }
}

/// NOMA outcomes `(weak, strong)` for strong gain `gj ≥` weak gain `gi`.
fn noma_links(gj: f64, gi: f64, y: f64, rho: f64, cfg: &NomaConfig, mode: EveMode) -> (LinkOutcome, LinkOutcome) {
    let (bi, bj) = (cfg.weak_power, cfg.strong_power);
    // the weak message must be decodable at both users; the strong user
    // sees it at least as clearly as the weak user does
    let at_weak = rho * gi * bi / (rho * gi * bj + 1.0);
    let at_strong = rho * gj * bi / (rho * gj * bj + 1.0);
    let weak_rate = rate(at_weak.min(at_strong));
    let eve_weak = rate(rho * y * bi / (rho * y * bj + 1.0));
    let strong_rate = rate(rho * gj * bj);
    let eve_strong = match mode {
        EveMode::WorstCase => rate(rho * y * bj),
        EveMode::BestCase => rate(rho * y * bj / (1.0 + rho * y * bi)),
    };
    (
        secrecy(weak_rate, eve_weak, cfg.weak_target),
        secrecy(strong_rate, eve_strong, cfg.strong_target),
    )
}

fn sut_link(gj: f64, y: f64, rho: f64, cfg: &NomaConfig) -> LinkOutcome {
    secrecy(rate(rho * gj), rate(rho * y), cfg.strong_target)
}

/// Two half slots, each giving one user the full power.
fn oma_rate(gains: &[f64], y: f64, rho: f64, cfg: &NomaConfig) -> f64 {
    let eve = rate(rho * y);
    let mut total = 0.0;
    for (g, target) in gains.iter().zip([cfg.strong_target, cfg.weak_target]) {
        if !secrecy(rate(rho * g), eve, target).outage {
            total += 0.5 * target;
        }
    }
    total
}

fn classify(users: usize, cfg: &NomaConfig) -> Scheme {
    if users >= cfg.weak_rank {
        Scheme::Noma
    } else if users >= cfg.strong_rank {
        Scheme::Sut
    } else {
        Scheme::Idle
    }
}

/// Hybrid NOMA/SUT outcome of one deployment.
pub fn evaluate_trial(dep: &Deployment, cfg: &NomaConfig, rf: &RfConfig, mode: EveMode) -> Result<TrialOutcome> {
    cfg.validate()?;
    let mut user_gains = dep
        .users
        .iter()
        .map(|u| effective_gain(u, rf))
        .collect::<Result<Vec<_>>>()?;
    user_gains.sort_by(|a, b| b.total_cmp(a));
    let mut eve_gain: f64 = 0.0;
    for e in &dep.eves {
        eve_gain = eve_gain.max(effective_gain(e, rf)?);
    }
    let rho = rf.snr_scale();
    let scheme = classify(user_gains.len(), cfg);
    let (i, j) = (cfg.weak_rank, cfg.strong_rank);
    let (weak, strong, rate, oma) = match scheme {
        Scheme::Noma => {
            let (w, s) = noma_links(user_gains[j - 1], user_gains[i - 1], eve_gain, rho, cfg, mode);
            let r =
                f64::from(u8::from(!w.outage)) * cfg.weak_target + f64::from(u8::from(!s.outage)) * cfg.strong_target;
            let oma = oma_rate(&[user_gains[j - 1], user_gains[i - 1]], eve_gain, rho, cfg);
            (Some(w), Some(s), r, oma)
        }
        Scheme::Sut => {
            let s = sut_link(user_gains[j - 1], eve_gain, rho, cfg);
            let r = if s.outage { 0.0 } else { cfg.strong_target };
            (None, Some(s), r, r)
        }
        Scheme::Idle => (None, None, 0.0, 0.0),
    };
    Ok(TrialOutcome {
        user_gains,
        eve_gain,
        scheme,
        weak,
        strong,
        rate,
        oma_rate: oma,
    })
}

/// Running sums of a 0/1 or bounded per-trial quantity.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Moments {
    n: u64,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    fn merge(&mut self, other: &Moments) {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    fn estimate(&self) -> Estimate {
        if self.n == 0 {
            return Estimate {
                mean: 0.0,
                half_width: 0.0,
                samples: 0,
            };
        }
        let n = self.n as f64;
        let mean = self.sum / n;
        let var = if self.n > 1 {
            ((self.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        Estimate {
            mean,
            half_width: Z95 * (var / n).sqrt(),
            samples: self.n,
        }
    }
}

/// Sample mean with a 95% normal-approximation half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub half_width: f64,
    pub samples: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct ModeTally {
    weak: Moments,
    strong: Moments,
    sut: Moments,
    noma_rate: Moments,
    sut_rate: Moments,
    rate: Moments,
}

impl ModeTally {
    fn merge(&mut self, o: &ModeTally) {
        self.weak.merge(&o.weak);
        self.strong.merge(&o.strong);
        self.sut.merge(&o.sut);
        self.noma_rate.merge(&o.noma_rate);
        self.sut_rate.merge(&o.sut_rate);
        self.rate.merge(&o.rate);
    }

    fn finish(&self) -> ModeEstimate {
        ModeEstimate {
            p_weak: self.weak.estimate(),
            p_strong: self.strong.estimate(),
            p_sut: self.sut.estimate(),
            noma: self.noma_rate.estimate(),
            sut: self.sut_rate.estimate(),
            total: self.rate.estimate(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Tally {
    worst: ModeTally,
    best: ModeTally,
    oma: Moments,
}

impl Tally {
    fn mode(&mut self, mode: EveMode) -> &mut ModeTally {
        match mode {
            EveMode::WorstCase => &mut self.worst,
            EveMode::BestCase => &mut self.best,
        }
    }

    fn merge(mut self, o: &Tally) -> Tally {
        self.worst.merge(&o.worst);
        self.best.merge(&o.best);
        self.oma.merge(&o.oma);
        self
    }
}

/// Estimates for one Eve decoding mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeEstimate {
    /// Weak-user outage over NOMA trials.
    pub p_weak: Estimate,
    /// Strong-user outage over NOMA trials.
    pub p_strong: Estimate,
    /// Scheduled-user outage over SUT trials.
    pub p_sut: Estimate,
    /// NOMA part of the hybrid rate, averaged over all trials.
    pub noma: Estimate,
    /// SUT part of the hybrid rate, averaged over all trials.
    pub sut: Estimate,
    pub total: Estimate,
}

impl ModeEstimate {
    pub fn outage(&self, condition: Condition) -> OutageResult {
        OutageResult {
            p_weak: self.p_weak.mean,
            p_strong: self.p_strong.mean,
            p_sut: (self.p_sut.samples > 0).then_some(self.p_sut.mean),
            method: Method::MonteCarlo,
            condition,
        }
    }
}

/// Both Eve modes evaluated on the same deployments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub trials: u64,
    pub seed: u64,
    pub worst: ModeEstimate,
    pub best: ModeEstimate,
    /// Time-split OMA baseline under the hybrid population rule. The
    /// convention (two half slots, full power each) is ours.
    pub oma: Estimate,
}

impl SimulationResult {
    pub fn mode(&self, mode: EveMode) -> &ModeEstimate {
        match mode {
            EveMode::WorstCase => &self.worst,
            EveMode::BestCase => &self.best,
        }
    }
}

/// Mean gains of a deployment, reusing buffers across trials.
#[derive(Default)]
struct Scratch {
    dep: Deployment,
    gains: Vec<f64>,
}

impl Scratch {
    /// Strongest `need` user gains in descending order and the maximum Eve gain.
    fn gains(&mut self, kernel: &GainKernel, need: usize) -> (&[f64], f64) {
        let top = &mut self.gains;
        top.clear();
        for u in &self.dep.users {
            let d2 = u.distance * u.distance;
            let full = top.len() == need;
            if full && u.fading * kernel.mean_gain_bound(u.theta, d2) <= top[need - 1] {
                continue;
            }
            let g = u.fading * kernel.mean_gain(u.theta, d2);
            if full {
                if g <= top[need - 1] {
                    continue;
                }
                top.pop();
            }
            let at = top.partition_point(|&x| x >= g);
            top.insert(at, g);
        }
        let mut y: f64 = 0.0;
        for e in &self.dep.eves {
            let d2 = e.distance * e.distance;
            if e.fading * kernel.mean_gain_bound(e.theta, d2) > y {
                y = y.max(e.fading * kernel.mean_gain(e.theta, d2));
            }
        }
        (&self.gains[..need], y)
    }
}

fn tally_trial(scratch: &mut Scratch, scn: &Scenario, kernel: &GainKernel, rho: f64, tally: &mut Tally) {
    let cfg = &scn.noma;
    let (i, j) = (cfg.weak_rank, cfg.strong_rank);
    let users = scratch.dep.users.len();
    let (top, y) = scratch.gains(kernel, i);
    match classify(users, cfg) {
        Scheme::Noma => {
            let (gj, gi) = (top[j - 1], top[i - 1]);
            for mode in [EveMode::WorstCase, EveMode::BestCase] {
                let (w, s) = noma_links(gj, gi, y, rho, cfg, mode);
                let r = if w.outage { 0.0 } else { cfg.weak_target } + if s.outage { 0.0 } else { cfg.strong_target };
                let t = tally.mode(mode);
                t.weak.push(f64::from(u8::from(w.outage)));
                t.strong.push(f64::from(u8::from(s.outage)));
                t.noma_rate.push(r);
                t.sut_rate.push(0.0);
                t.rate.push(r);
            }
            tally.oma.push(oma_rate(&[gj, gi], y, rho, cfg));
        }
        Scheme::Sut => {
            let s = sut_link(top[j - 1], y, rho, cfg);
            let r = if s.outage { 0.0 } else { cfg.strong_target };
            for mode in [EveMode::WorstCase, EveMode::BestCase] {
                let t = tally.mode(mode);
                t.sut.push(f64::from(u8::from(s.outage)));
                t.noma_rate.push(0.0);
                t.sut_rate.push(r);
                t.rate.push(r);
            }
            tally.oma.push(r);
        }
        Scheme::Idle => {
            for mode in [EveMode::WorstCase, EveMode::BestCase] {
                let t = tally.mode(mode);
                t.noma_rate.push(0.0);
                t.sut_rate.push(0.0);
                t.rate.push(0.0);
            }
            tally.oma.push(0.0);
        }
    }
}

fn run_batches(trials: u64, seed: u64, body: impl Fn(&mut ChaCha8Rng, u64, &mut Tally) + Sync) -> Tally {
    let batches = trials.div_ceil(BATCH);
    let tallies: Vec<Tally> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b);
            let count = BATCH.min(trials - b * BATCH);
            let mut tally = Tally::default();
            body(&mut rng, count, &mut tally);
            tally
        })
        .collect();
    tallies.iter().fold(Tally::default(), |acc, t| acc.merge(t))
}

fn check_run(scn: &Scenario, zone: &ProtectedZone, trials: u64) -> Result<()> {
    if trials < 1 {
        return Err(Error::Argument("need at least one trial".into()));
    }
    scn.validate()?;
    zone.check(&scn.region)
}

/// Marginal simulation with Poisson user and Eve counts.
pub fn simulate(scn: &Scenario, zone: &ProtectedZone, trials: u64, seed: u64) -> Result<SimulationResult> {
    check_run(scn, zone, trials)?;
    let pop = scn.population(zone)?;
    let rho = scn.rf.snr_scale();
    let kernel = GainKernel::new(&scn.rf);
    let tally = run_batches(trials, seed, |rng, count, tally| {
        let mut scratch = Scratch::default();
        for _ in 0..count {
            let users = poisson_count(rng, pop.mean_users, false);
            let eves = poisson_count(rng, pop.mean_eves, true);
            fill_deployment(rng, &scn.region, zone, users, eves, &mut scratch.dep);
            tally_trial(&mut scratch, scn, &kernel, rho, tally);
        }
    });
    Ok(SimulationResult {
        trials,
        seed,
        worst: tally.worst.finish(),
        best: tally.best.finish(),
        oma: tally.oma.estimate(),
    })
}

/// Simulation conditioned on exactly `users` users and `eves` Eves.
pub fn simulate_stratum(
    scn: &Scenario,
    zone: &ProtectedZone,
    users: usize,
    eves: usize,
    trials: u64,
    seed: u64,
) -> Result<SimulationResult> {
    check_run(scn, zone, trials)?;
    if users < scn.noma.strong_rank || eves < 1 {
        return Err(Error::Argument(format!(
            "stratum needs at least {} users and one Eve",
            scn.noma.strong_rank
        )));
    }
    let rho = scn.rf.snr_scale();
    let kernel = GainKernel::new(&scn.rf);
    let tally = run_batches(trials, seed, |rng, count, tally| {
        let mut scratch = Scratch::default();
        for _ in 0..count {
            fill_deployment(rng, &scn.region, zone, users, eves, &mut scratch.dep);
            tally_trial(&mut scratch, scn, &kernel, rho, tally);
        }
    });
    Ok(SimulationResult {
        trials,
        seed,
        worst: tally.worst.finish(),
        best: tally.best.finish(),
        oma: tally.oma.estimate(),
    })
}
