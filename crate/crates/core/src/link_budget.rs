//! Large-scale path loss for the satellite-to-ground link.
//!
//! Total loss is `L = L_b + L_g + L_s` with basic loss
//! `L_b = FSPL + SF + CL`. Everything is in dB; only the shadow-fading term
//! is random and it is drawn by the caller.

use crate::error::{domain, Result};

/// Mean Earth radius in km.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGeometry {
    /// Satellite altitude in km.
    pub altitude_km: f64,
    /// Elevation angle from the terminal to the satellite, in degrees.
    pub elevation_deg: f64,
    /// Carrier frequency in GHz.
    pub carrier_ghz: f64,
    /// Earth radius in km.
    pub earth_radius_km: f64,
}

impl Default for LinkGeometry {
    fn default() -> Self {
        LinkGeometry {
            altitude_km: 780.0,
            elevation_deg: 60.0,
            carrier_ghz: 28.0,
            earth_radius_km: EARTH_RADIUS_KM,
        }
    }
}

impl LinkGeometry {
    pub fn validate(&self) -> Result<()> {
        if !(self.altitude_km > 0.0 && self.altitude_km.is_finite()) {
            return domain(format!("altitude must be positive, got {} km", self.altitude_km));
        }
        check_elevation(self.elevation_deg)?;
        if !(self.carrier_ghz > 0.0 && self.carrier_ghz.is_finite()) {
            return domain(format!("carrier frequency must be positive, got {} GHz", self.carrier_ghz));
        }
        if !(self.earth_radius_km > 0.0 && self.earth_radius_km.is_finite()) {
            return domain(format!("earth radius must be positive, got {} km", self.earth_radius_km));
        }
        Ok(())
    }
}

/// Atmospheric and environment losses, all in dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtmosphereParams {
    /// Zenith attenuation due to atmospheric gases.
    pub zenith_attenuation_db: f64,
    /// Standard deviation of log-normal shadow fading.
    pub shadow_sigma_db: f64,
    pub clutter_loss_db: f64,
    /// Ionospheric/tropospheric scintillation, treated as a clear-sky constant.
    pub scintillation_loss_db: f64,
}

impl Default for AtmosphereParams {
    fn default() -> Self {
        AtmosphereParams {
            zenith_attenuation_db: 0.22,
            shadow_sigma_db: 1.0,
            clutter_loss_db: 0.0,
            scintillation_loss_db: 0.13,
        }
    }
}

impl AtmosphereParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("zenith attenuation", self.zenith_attenuation_db),
            ("shadow fading sigma", self.shadow_sigma_db),
            ("clutter loss", self.clutter_loss_db),
            ("scintillation loss", self.scintillation_loss_db),
        ];
        for (name, v) in fields {
            if !(v >= 0.0 && v.is_finite()) {
                return domain(format!("{name} must be non-negative, got {v} dB"));
            }
        }
        Ok(())
    }
}

/// Components of the total path loss in dB.
///
/// Only constructible through [`total_path_loss`], which keeps the sums
/// `basic = fspl + shadow + clutter` and `total = basic + gas + scintillation`
/// exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLossBreakdown {
    fspl: f64,
    shadow: f64,
    clutter: f64,
    basic: f64,
    gas: f64,
    scintillation: f64,
    total: f64,
}

impl PathLossBreakdown {
    pub fn fspl(&self) -> f64 {
        self.fspl
    }
    pub fn shadow(&self) -> f64 {
        self.shadow
    }
    pub fn clutter(&self) -> f64 {
        self.clutter
    }
    pub fn basic(&self) -> f64 {
        self.basic
    }
    pub fn gas(&self) -> f64 {
        self.gas
    }
    pub fn scintillation(&self) -> f64 {
        self.scintillation
    }
    pub fn total(&self) -> f64 {
        self.total
    }
}

fn check_elevation(elevation_deg: f64) -> Result<()> {
    if !(elevation_deg > 0.0 && elevation_deg <= 90.0) {
        return domain(format!("elevation must lie in (0, 90] degrees, got {elevation_deg}"));
    }
    Ok(())
}

/// Slant range in km from the terminal to the satellite.
pub fn slant_distance(geo: &LinkGeometry) -> Result<f64> {
    geo.validate()?;
    let re = geo.earth_radius_km;
    let h0 = geo.altitude_km;
    let s = geo.elevation_deg.to_radians().sin();
    Ok(((re * s).powi(2) + h0 * h0 + 2.0 * h0 * re).sqrt() - re * s)
}

/// Free-space path loss in dB, with the distance in meters and the carrier
/// in GHz.
pub fn free_space_path_loss(distance_m: f64, carrier_ghz: f64) -> Result<f64> {
    if !(distance_m > 0.0 && distance_m.is_finite()) {
        return domain(format!("distance must be positive, got {distance_m} m"));
    }
    if !(carrier_ghz > 0.0 && carrier_ghz.is_finite()) {
        return domain(format!("carrier frequency must be positive, got {carrier_ghz} GHz"));
    }
    Ok(32.45 + 20.0 * carrier_ghz.log10() + 20.0 * distance_m.log10())
}

/// Gas attenuation along the slant path, `A_zenith / sin(elevation)`.
pub fn atmospheric_gas_loss(atm: &AtmosphereParams, elevation_deg: f64) -> Result<f64> {
    check_elevation(elevation_deg)?;
    Ok(atm.zenith_attenuation_db / elevation_deg.to_radians().sin())
}

/// Full path-loss chain for one realization. `shadow_db` is the shadow-fading
/// draw (zero for a deterministic budget).
pub fn total_path_loss(
    geo: &LinkGeometry,
    atm: &AtmosphereParams,
    shadow_db: f64,
) -> Result<PathLossBreakdown> {
    atm.validate()?;
    if !shadow_db.is_finite() {
        return domain(format!("shadow fading sample must be finite, got {shadow_db}"));
    }
    let d_km = slant_distance(geo)?;
    let fspl = free_space_path_loss(d_km * 1e3, geo.carrier_ghz)?;
    let gas = atmospheric_gas_loss(atm, geo.elevation_deg)?;
    let clutter = atm.clutter_loss_db;
    let scintillation = atm.scintillation_loss_db;
    let basic = fspl + shadow_db + clutter;
    Ok(PathLossBreakdown {
        fspl,
        shadow: shadow_db,
        clutter,
        basic,
        gas,
        scintillation,
        total: basic + gas + scintillation,
    })
}

/// Amplitude factor `sqrt(10^(-loss/10))` applied to the transmitted signal.
pub fn db_to_linear_amplitude(loss_db: f64) -> f64 {
    10f64.powf(-loss_db / 20.0)
}
