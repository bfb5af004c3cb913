//! Box model of the carbon cycle (atmosphere, ocean, vegetation, soil) with
//! a zero-dimensional radiation balance.
//!
//! Carbon state variables are deviations from the pre-industrial reservoirs
//! and temperature is the anomaly against `t0_abs`. Kinetics that need a
//! Kelvin temperature (both respirations, water vapour, Stefan-Boltzmann)
//! use `T + t0_abs`; the photosynthesis window uses the anomaly directly.

use serde::Serialize;
use thiserror::Error;

use crate::config::{ClimateParams, TippingParams};

/// Photosynthesis is zero outside this anomaly window, K.
pub const PHOTO_T_MIN: f64 = -15.0;
pub const PHOTO_T_MAX: f64 = 25.0;
/// `(15 + 0)^2 (25 - 0)`; normalises the temperature factor to 1 at zero anomaly.
const PHOTO_T_NORM: f64 = 5625.0;

/// Soil respiration activation constants, K.
pub const SOIL_ACTIVATION: f64 = 308.56;
pub const SOIL_T_SINGULAR: f64 = 227.13;

const TAU_CO2_COEF: f64 = 1.73;
const TAU_CO2_EXP: f64 = 0.263;
const TAU_H2O_COEF: f64 = 0.0126;
const TAU_H2O_EXP: f64 = 0.503;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EarthSystemError {
    #[error("soil respiration undefined at absolute temperature {t_abs} K (must exceed {SOIL_T_SINGULAR} K)")]
    SoilSingularity { t_abs: f64 },
}

/// Carbon deviations from pre-industrial (GtC) and the temperature anomaly (K).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ClimateState {
    pub c_at: f64,
    pub c_oc: f64,
    pub c_veg: f64,
    pub c_so: f64,
    pub t: f64,
}

impl ClimateState {
    pub fn is_finite(&self) -> bool {
        [self.c_at, self.c_oc, self.c_veg, self.c_so, self.t]
            .iter()
            .all(|v| v.is_finite())
    }
}

/// Diagnostic fluxes at one state. Carbon fluxes in GtC/yr, radiation in W/m^2.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct FluxSet {
    pub photosynthesis: f64,
    pub r_veg: f64,
    pub r_so: f64,
    pub turnover: f64,
    pub f_oc: f64,
    pub r_tip: f64,
    pub f_down: f64,
    pub f_up: f64,
    pub tau_total: f64,
    pub pco2a: f64,
}

/// Atmospheric CO2 mole fraction.
pub fn pco2a(c_at: f64, p: &ClimateParams) -> f64 {
    p.f_gtm * (c_at + p.c_at0) / p.atm_moles
}

pub fn photosynthesis(c_at: f64, t: f64, p: &ClimateParams) -> f64 {
    let pco2 = pco2a(c_at, p);
    if pco2 < p.k_c || !(PHOTO_T_MIN..=PHOTO_T_MAX).contains(&t) {
        return 0.0;
    }
    let saturation = (pco2 - p.k_c) / (p.k_m + pco2 - p.k_c);
    let thermal = (15.0 + t).powi(2) * (25.0 - t) / PHOTO_T_NORM;
    p.k_p * p.c_veg0 * p.k_mm * saturation * thermal
}

pub fn plant_respiration(c_veg: f64, t: f64, p: &ClimateParams) -> f64 {
    let t_abs = t + p.t0_abs;
    p.k_r * (c_veg + p.c_veg0) * p.k_plant_norm * (-p.e_a / (p.r_gas * t_abs)).exp()
}

pub fn soil_respiration(c_so: f64, t: f64, p: &ClimateParams) -> Result<f64, EarthSystemError> {
    let t_abs = t + p.t0_abs;
    let margin = t_abs - SOIL_T_SINGULAR;
    if margin <= 0.0 || margin.is_nan() {
        return Err(EarthSystemError::SoilSingularity { t_abs });
    }
    Ok(p.k_sr * (c_so + p.c_so0) * p.k_soil_norm * (-SOIL_ACTIVATION / margin).exp())
}

/// Litter flux from vegetation to soil.
pub fn turnover(c_veg: f64, p: &ClimateParams) -> f64 {
    p.k_t * (c_veg + p.c_veg0)
}

/// Net atmosphere-to-ocean carbon flux; positive is uptake by the ocean.
pub fn ocean_flux(c_at: f64, c_oc: f64, p: &ClimateParams) -> f64 {
    p.f0 * p.chi * (c_at - p.zeta * (p.c_at0 / p.c_oc0) * c_oc)
}

/// CO2, water vapour and methane opacities, in that order.
pub fn opacity_components(c_at: f64, t: f64, p: &ClimateParams) -> [f64; 3] {
    let t_abs = t + p.t0_abs;
    let co2 = TAU_CO2_COEF * pco2a(c_at, p).powf(TAU_CO2_EXP);
    let vapour = p.humidity * p.p0 * (-p.l_latent / (p.r_gas * t_abs)).exp();
    let h2o = TAU_H2O_COEF * vapour.powf(TAU_H2O_EXP);
    [co2, h2o, p.tau_ch4]
}

pub fn opacity_total(c_at: f64, t: f64, p: &ClimateParams) -> f64 {
    opacity_components(c_at, t, p).iter().sum()
}

/// Absorbed downward flux and emitted upward flux at the surface, W/m^2.
pub fn radiation_balance(c_at: f64, t: f64, p: &ClimateParams) -> (f64, f64) {
    let tau = opacity_total(c_at, t, p);
    let f_down = (1.0 - p.albedo) * p.s_flux / 4.0 * (1.0 + 0.75 * tau);
    let f_up = p.sigma_sb * (t + p.t0_abs).powi(4);
    (f_down, f_up)
}

/// Runaway-carbon flux. Activates as the anomaly rises through `t_c`.
pub fn tipping_flux(t: f64, tip: &TippingParams) -> f64 {
    if !tip.enabled {
        return 0.0;
    }
    tip.r_max / (1.0 + (-tip.r0 * (t - tip.t_c)).exp())
}

pub fn fluxes(
    state: &ClimateState,
    climate: &ClimateParams,
    tipping: &TippingParams,
) -> Result<FluxSet, EarthSystemError> {
    let (f_down, f_up) = radiation_balance(state.c_at, state.t, climate);
    Ok(FluxSet {
        photosynthesis: photosynthesis(state.c_at, state.t, climate),
        r_veg: plant_respiration(state.c_veg, state.t, climate),
        r_so: soil_respiration(state.c_so, state.t, climate)?,
        turnover: turnover(state.c_veg, climate),
        f_oc: ocean_flux(state.c_at, state.c_oc, climate),
        r_tip: tipping_flux(state.t, tipping),
        f_down,
        f_up,
        tau_total: opacity_total(state.c_at, state.t, climate),
        pco2a: pco2a(state.c_at, climate),
    })
}

/// Time derivatives of the five climate variables (per year) given the
/// already-mitigated anthropogenic emission `eps_eff`.
pub fn climate_derivatives(
    state: &ClimateState,
    eps_eff: f64,
    climate: &ClimateParams,
    tipping: &TippingParams,
) -> Result<(ClimateState, FluxSet), EarthSystemError> {
    let fx = fluxes(state, climate, tipping)?;
    let heating = climate.a_e * climate.seconds_per_year / climate.c_heat;
    let d = ClimateState {
        c_at: eps_eff - fx.photosynthesis + fx.r_veg + fx.r_so - fx.f_oc + fx.r_tip,
        c_oc: fx.f_oc,
        c_veg: fx.photosynthesis - fx.r_veg - fx.turnover,
        c_so: fx.turnover - fx.r_so,
        t: (fx.f_down - fx.f_up) * heating,
    };
    Ok((d, fx))
}
