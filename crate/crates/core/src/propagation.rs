//! Line-of-sight mmWave link model: UMi path loss, Fejér-kernel array gain,
//! Rayleigh fading and receiver noise.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{db_to_linear, dbm_to_watts};

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Offsets closer than this to a multiple of two use the boresight limit.
const FEJER_GUARD: f64 = 1e-9;

/// Radio parameters of the UAV base station.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RfConfig {
    pub antennas: u32,
    pub carrier_ghz: f64,
    pub bandwidth_hz: f64,
    pub thermal_noise_dbm_per_hz: f64,
    pub noise_figure_db: f64,
    pub altitude_m: f64,
    pub tx_power_dbm: f64,
    /// Peak element gain. Only added to the transmit power when
    /// `apply_antenna_gain` is set; the array gain comes from the Fejér kernel.
    pub antenna_gain_dbi: f64,
    pub apply_antenna_gain: bool,
}

impl Default for RfConfig {
    fn default() -> Self {
        Self {
            antennas: 100,
            carrier_ghz: 28.0,
            bandwidth_hz: 100e6,
            thermal_noise_dbm_per_hz: -174.0,
            noise_figure_db: 9.0,
            altitude_m: 20.0,
            tx_power_dbm: 45.0,
            antenna_gain_dbi: 8.0,
            apply_antenna_gain: false,
        }
    }
}

impl RfConfig {
    pub fn validate(&self) -> Result<()> {
        if self.antennas < 1 {
            return Err(Error::Config("antenna count must be at least 1".into()));
        }
        if !(self.carrier_ghz > 0.0) {
            return Err(Error::Config("carrier frequency must be positive".into()));
        }
        if !(self.bandwidth_hz > 0.0) {
            return Err(Error::Config("bandwidth must be positive".into()));
        }
        if !(self.altitude_m > 0.0) {
            return Err(Error::Config("altitude must be positive".into()));
        }
        for (name, v) in [
            ("thermal noise", self.thermal_noise_dbm_per_hz),
            ("noise figure", self.noise_figure_db),
            ("transmit power", self.tx_power_dbm),
            ("antenna gain", self.antenna_gain_dbi),
        ] {
            if !v.is_finite() {
                return Err(Error::Config(format!("{name} must be finite")));
            }
        }
        Ok(())
    }

    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / (self.carrier_ghz * 1e9)
    }

    /// Critically spaced array: half a wavelength.
    pub fn element_spacing_m(&self) -> f64 {
        0.5 * self.wavelength_m()
    }

    /// Transmit power in dBm including the optional antenna gain offset.
    pub fn effective_tx_dbm(&self) -> f64 {
        if self.apply_antenna_gain {
            self.tx_power_dbm + self.antenna_gain_dbi
        } else {
            self.tx_power_dbm
        }
    }

    /// Transmit SNR scale `ρ = P / N₀`.
    pub fn snr_scale(&self) -> f64 {
        dbm_to_watts(self.effective_tx_dbm()) / noise_power_watts(self)
    }
}

/// One transmitter-to-ground link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGeometry {
    /// Azimuth relative to the beam axis, radians.
    pub theta: f64,
    /// Horizontal distance, meters.
    pub distance: f64,
    /// Small-scale fading power `|α|²`.
    pub fading: f64,
}

/// UMi line-of-sight path loss in dB at 3D distance `x` meters.
pub fn path_loss_db(x: f64, carrier_ghz: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("path-loss distance must be positive, got {x}")));
    }
    Ok(32.4 + 21.0 * x.log10() + 20.0 * carrier_ghz.log10())
}

pub fn path_loss_linear(x: f64, carrier_ghz: f64) -> Result<f64> {
    path_loss_db(x, carrier_ghz).map(db_to_linear)
}

/// Normalized Fejér kernel `(1/M)·|sin(πMδ/2) / sin(πδ/2)|²` at offset
/// `δ = beam − theta`.
pub fn fejer_gain(beam: f64, theta: f64, antennas: u32) -> f64 {
    let m = antennas as f64;
    if antennas <= 1 {
        return 1.0;
    }
    // the kernel has period 2 in the offset
    let offset = (beam - theta).rem_euclid(2.0);
    let reduced = if offset > 1.0 { offset - 2.0 } else { offset };
    if reduced.abs() < FEJER_GUARD {
        return m;
    }
    let half = 0.5 * std::f64::consts::PI * reduced;
    let ratio = (m * half).sin() / half.sin();
    ratio * ratio / m
}

/// Mean effective gain `F(θ) / PL(√(d² + h²))` before fading.
pub fn mean_gain(theta: f64, distance: f64, rf: &RfConfig) -> f64 {
    let x = (distance * distance + rf.altitude_m * rf.altitude_m).sqrt();
    // altitude is positive, so the distance is too
    let pl = path_loss_linear(x, rf.carrier_ghz).expect("positive distance");
    fejer_gain(0.0, theta, rf.antennas) / pl
}

/// Precomputed form of [`mean_gain`] for hot loops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainKernel {
    antennas: u32,
    /// `10^(−(32.4 + 20·log10 f_c)/10)`
    scale: f64,
    altitude_sq: f64,
    /// `h^(−0.1)`, bounding the part of the path-loss exponent above two.
    excess: f64,
}

impl GainKernel {
    pub fn new(rf: &RfConfig) -> Self {
        Self {
            antennas: rf.antennas,
            scale: db_to_linear(-(32.4 + 20.0 * rf.carrier_ghz.log10())),
            altitude_sq: rf.altitude_m * rf.altitude_m,
            excess: rf.altitude_m.powf(-0.1),
        }
    }

    /// Cheap upper bound on [`GainKernel::mean_gain`], using
    /// `sin(π|δ|/2) ≥ |δ|` on `|δ| ≤ 1`.
    pub fn mean_gain_bound(&self, theta: f64, distance_sq: f64) -> f64 {
        let m = self.antennas as f64;
        let t2 = theta * theta;
        let array = if t2 <= 1.0 && t2 * m * m > 1.0 {
            1.0 / (m * t2)
        } else {
            m
        };
        array * self.scale * self.excess / (distance_sq + self.altitude_sq)
    }

    /// Mean gain at azimuth `theta` and squared horizontal distance `distance_sq`.
    pub fn mean_gain(&self, theta: f64, distance_sq: f64) -> f64 {
        fejer_gain(0.0, theta, self.antennas) * self.scale * (distance_sq + self.altitude_sq).powf(-1.05)
    }
}

/// `|α|²·F(θ) / PL(√(d² + h²))`
pub fn effective_gain(link: &LinkGeometry, rf: &RfConfig) -> Result<f64> {
    if !(link.distance >= 0.0) || !(link.fading >= 0.0) {
        return Err(Error::Domain(
            "link distance and fading power must be nonnegative".into(),
        ));
    }
    if link.fading == 0.0 {
        return Ok(0.0);
    }
    Ok(link.fading * mean_gain(link.theta, link.distance, rf))
}

/// Receiver noise `N₀` in watts.
pub fn noise_power_watts(rf: &RfConfig) -> f64 {
    dbm_to_watts(rf.thermal_noise_dbm_per_hz + 10.0 * rf.bandwidth_hz.log10() + rf.noise_figure_db)
}

/// Unit-mean exponential fading power.
pub fn sample_fading<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Exp1.sample(rng)
}
