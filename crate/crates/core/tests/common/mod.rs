#![allow(dead_code)]

use rand::Rng;
use uav_secrecy::geometry::{in_unprotected_eve_region, ProtectedZone, RegionSpec};
use uav_secrecy::propagation::RfConfig;

pub fn region(kappa: f64) -> RegionSpec {
    RegionSpec::new(5.0, 50.0, 2.5f64.to_radians(), kappa).unwrap()
}

pub fn rf(altitude_m: f64, tx_power_dbm: f64) -> RfConfig {
    RfConfig {
        altitude_m,
        tx_power_dbm,
        ..RfConfig::default()
    }
}

/// Array factor as an explicit phasor sum, normalized by the element count.
pub fn array_gain(theta: f64, antennas: u32) -> f64 {
    let (s, c) = (std::f64::consts::PI * theta).sin_cos();
    let (mut re, mut im, mut pr, mut pi) = (0.0, 0.0, 1.0, 0.0);
    for _ in 0..antennas {
        re += pr;
        im += pi;
        (pr, pi) = (pr * c - pi * s, pr * s + pi * c);
    }
    (re * re + im * im) / antennas as f64
}

/// Faded gain from first principles: array sum over UMi LoS path loss.
pub fn gain(theta: f64, r: f64, fading: f64, rf: &RfConfig) -> f64 {
    let x = (r * r + rf.altitude_m * rf.altitude_m).sqrt();
    let pl_db = 32.4 + 21.0 * x.log10() + 20.0 * rf.carrier_ghz.log10();
    fading * array_gain(theta, rf.antennas) * 10f64.powf(-pl_db / 10.0)
}

pub fn exponential<R: Rng>(rng: &mut R) -> f64 {
    -(1.0 - rng.random::<f64>()).ln()
}

pub fn polar_point<R: Rng>(rng: &mut R, lo: f64, hi: f64, half_angle: f64) -> (f64, f64) {
    let r = (lo * lo + rng.random::<f64>() * (hi * hi - lo * lo)).sqrt();
    let theta = half_angle * (2.0 * rng.random::<f64>() - 1.0);
    (theta, r)
}

pub fn user_gain<R: Rng>(rng: &mut R, reg: &RegionSpec, rf: &RfConfig) -> f64 {
    let (theta, r) = polar_point(rng, reg.inner_radius(), reg.user_radius(), reg.user_half_angle());
    gain(theta, r, exponential(rng), rf)
}

pub fn eve_gain<R: Rng>(rng: &mut R, reg: &RegionSpec, zone: &ProtectedZone, rf: &RfConfig) -> f64 {
    loop {
        let (theta, r) = polar_point(rng, reg.inner_radius(), reg.eve_radius(), reg.eve_half_angle());
        if in_unprotected_eve_region(theta, r, reg, zone) {
            return gain(theta, r, exponential(rng), rf);
        }
    }
}

/// Kolmogorov-Smirnov distance between `samples` and `cdf`.
pub fn ks(mut samples: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let f = cdf(x);
            (f - k as f64 / n).abs().max((f - (k + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}
