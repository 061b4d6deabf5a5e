//! A complete evaluation scenario: geometry, radio, NOMA pair and
//! population model switches.

use serde::{Deserialize, Serialize};

use crate::analytic::{Analytic, EveConditioning, NomaConfig, RateBreakdown};
use crate::distributions::{EvePopulation, GainTables, PopulationModel};
use crate::error::Result;
use crate::geometry::{ProtectedZone, RegionSpec};
use crate::propagation::RfConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub region: RegionSpec,
    pub rf: RfConfig,
    pub noma: NomaConfig,
    /// `λ_u` in users per m².
    pub user_density: f64,
    /// `λ_e` in Eves per m².
    pub eve_density: f64,
    pub eve_population: EvePopulation,
    pub conditioning: EveConditioning,
}

impl Default for Scenario {
    fn default() -> Self {
        Self::reference(20.0, 3.0).expect("valid defaults")
    }
}

impl Scenario {
    /// Reference deployment at altitude `h` with expansion ratio `κ`.
    pub fn reference(altitude_m: f64, expansion: f64) -> Result<Self> {
        let scn = Self {
            region: RegionSpec::new(5.0, 50.0, 2.5f64.to_radians(), expansion)?,
            rf: RfConfig {
                altitude_m,
                ..RfConfig::default()
            },
            noma: NomaConfig::default(),
            user_density: 1.0,
            eve_density: 0.1,
            eve_population: EvePopulation::Unprotected,
            conditioning: EveConditioning::Renormalized,
        };
        scn.validate()?;
        Ok(scn)
    }

    pub fn validate(&self) -> Result<()> {
        self.rf.validate()?;
        self.noma.validate()?;
        if !(self.user_density > 0.0) || !(self.eve_density > 0.0) {
            return Err(crate::Error::Config("densities must be positive".into()));
        }
        Ok(())
    }

    pub fn population(&self, zone: &ProtectedZone) -> Result<PopulationModel> {
        PopulationModel::new(
            &self.region,
            zone,
            self.user_density,
            self.eve_density,
            self.noma.weak_rank,
            self.noma.strong_rank,
            self.eve_population,
        )
    }

    pub fn with_power(&self, tx_power_dbm: f64) -> Self {
        Self {
            rf: RfConfig {
                tx_power_dbm,
                ..self.rf
            },
            ..*self
        }
    }

    pub fn tables(&self) -> Result<GainTables> {
        GainTables::new(&self.region, &self.rf)
    }

    /// Analytic rates for `zone`. `tables` must have been built for this
    /// scenario's region and radio apart from the transmit power, which the
    /// tables do not depend on.
    pub fn analytic(&self, tables: &GainTables, zone: &ProtectedZone) -> Result<RateBreakdown> {
        let eve = tables.eve(zone)?;
        let pop = self.population(zone)?;
        Analytic::new(tables.user(), &eve, self.rf.snr_scale(), self.noma)?.rates(&pop, self.conditioning)
    }
}
