//! Model constants, scenario presets and the run schedule.
//!
//! Configuration documents use a flat `section.field = value` grammar with
//! `#` comments. Every key that is not given falls back to the baseline
//! value from [`ModelParams::default`].

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::numfmt::fmt_g17;

/// Parameters of the opinion dynamics and the perceived warming cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SocialParams {
    /// Social learning rate, 1/yr.
    pub kappa: f64,
    /// Net cost of mitigation.
    pub beta: f64,
    /// Strength of social norms.
    pub delta: f64,
    /// Maximum perceived warming cost.
    pub f_max: f64,
    /// Nonlinearity of the cost sigmoid, 1/K.
    pub omega: f64,
    /// Anomaly at which the cost sigmoid is steepest, K.
    pub t_lim: f64,
    /// Mitigator fraction when social dynamics switch on.
    pub x0: f64,
}

/// The additional runaway-carbon flux that turns the baseline model into
/// the modified one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TippingParams {
    pub enabled: bool,
    /// Saturation value of the flux, GtC/yr.
    pub r_max: f64,
    /// Sigmoid steepness, 1/K.
    pub r0: f64,
    /// Critical temperature anomaly, K.
    pub t_c: f64,
}

/// Earth-system constants: carbon reservoirs, vegetation and soil
/// kinetics, ocean exchange and the radiation budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClimateParams {
    /// Pre-industrial atmospheric carbon, GtC.
    pub c_at0: f64,
    /// Pre-industrial ocean carbon, GtC.
    pub c_oc0: f64,
    /// Pre-industrial vegetation carbon, GtC.
    pub c_veg0: f64,
    /// Pre-industrial soil carbon, GtC.
    pub c_so0: f64,
    /// Photosynthesis rate constant, 1/yr.
    pub k_p: f64,
    /// Plant respiration rate constant, 1/yr.
    pub k_r: f64,
    /// Soil respiration rate constant, 1/yr.
    pub k_sr: f64,
    /// Vegetation turnover rate constant, 1/yr.
    pub k_t: f64,
    /// Photosynthesis normalising constant.
    pub k_mm: f64,
    /// Photosynthesis compensation point (mole fraction).
    pub k_c: f64,
    /// Photosynthesis half-saturation point (mole fraction).
    pub k_m: f64,
    /// Plant respiration normalising constant.
    pub k_plant_norm: f64,
    /// Soil respiration normalising constant.
    pub k_soil_norm: f64,
    /// Moles of molecules in the atmosphere.
    pub atm_moles: f64,
    /// Plant respiration activation energy, J/mol.
    pub e_a: f64,
    /// Heat capacity of the surface, J/K.
    pub c_heat: f64,
    /// Surface area of the Earth, m^2.
    pub a_e: f64,
    /// Latent heat per mole of water, J/mol.
    pub l_latent: f64,
    /// Molar gas constant, J/mol/K.
    pub r_gas: f64,
    /// Relative humidity.
    pub humidity: f64,
    /// Surface albedo.
    pub albedo: f64,
    /// Characteristic CO2 solubility.
    pub chi: f64,
    /// Ocean evasion factor.
    pub zeta: f64,
    /// Incoming solar flux, W/m^2.
    pub s_flux: f64,
    /// Methane opacity.
    pub tau_ch4: f64,
    /// Water vapour saturation constant, Pa.
    pub p0: f64,
    /// Ocean flux rate constant, 1/yr.
    pub f0: f64,
    /// Stefan-Boltzmann constant, W/m^2/K^4.
    pub sigma_sb: f64,
    /// Freezing point of water, K. Carried for completeness; no flux uses it.
    pub t_r: f64,
    /// Absolute pre-industrial surface temperature, K.
    pub t0_abs: f64,
    /// GtC to moles of carbon.
    pub f_gtm: f64,
    pub seconds_per_year: f64,
}

/// Post-pivot emission projection `eps(pivot) + s*eps_max/(s + s_half)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmissionProjectionParams {
    /// Saturation increment, GtC/yr.
    pub eps_max: f64,
    /// Half-saturation time, yr.
    pub s_half: f64,
    /// Last year of the historical record; the projection starts here.
    pub t_pivot: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunSchedule {
    pub t_start: f64,
    /// Year at which the social dynamics are switched on.
    pub t_social_on: f64,
    pub t_end: f64,
    /// Integrator step, yr.
    pub dt: f64,
    /// Sampling interval of the trajectory, yr.
    pub output_stride: f64,
}

/// Every input of a coupled run. Immutable once built and `Sync`, so it can
/// be shared across sweep workers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    pub social: SocialParams,
    pub tipping: TippingParams,
    pub climate: ClimateParams,
    pub emission: EmissionProjectionParams,
    pub schedule: RunSchedule,
}

impl Default for SocialParams {
    fn default() -> Self {
        Self {
            kappa: 0.05,
            beta: 1.0,
            delta: 1.0,
            f_max: 5.0,
            omega: 3.0,
            t_lim: 1.5,
            x0: 0.05,
        }
    }
}

impl Default for TippingParams {
    fn default() -> Self {
        Self {
            enabled: true,
            r_max: 5.0,
            r0: 5.0,
            t_c: 2.0,
        }
    }
}

impl Default for ClimateParams {
    fn default() -> Self {
        Self {
            c_at0: 596.0,
            c_oc0: 1.5e5,
            c_veg0: 550.0,
            c_so0: 1500.0,
            k_p: 0.184,
            k_r: 0.092,
            k_sr: 0.034,
            k_t: 0.092,
            k_mm: 1.478,
            k_c: 29e-6,
            k_m: 120e-6,
            k_plant_norm: 8.7039e9,
            k_soil_norm: 157.072,
            atm_moles: 1.773e20,
            e_a: 54_830.0,
            c_heat: 4.69e23,
            a_e: 5.101e14,
            l_latent: 43_655.0,
            r_gas: 8.314,
            humidity: 0.5915,
            albedo: 0.225,
            chi: 0.3,
            zeta: 50.0,
            s_flux: 1368.0,
            tau_ch4: 0.0231,
            p0: 1.4e11,
            f0: 2.5e-2,
            sigma_sb: 5.67e-8,
            t_r: 273.15,
            t0_abs: 288.15,
            f_gtm: 8.3259e13,
            seconds_per_year: 3.1536e7,
        }
    }
}

impl Default for EmissionProjectionParams {
    fn default() -> Self {
        Self {
            eps_max: 7.0,
            s_half: 50.0,
            t_pivot: 2017.0,
        }
    }
}

impl Default for RunSchedule {
    fn default() -> Self {
        Self {
            t_start: 1800.0,
            t_social_on: 2017.0,
            t_end: 2200.0,
            dt: 0.05,
            output_stride: 1.0,
        }
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        default_params()
    }
}

/// Baseline parameter set.
pub fn default_params() -> ModelParams {
    ModelParams {
        social: SocialParams::default(),
        tipping: TippingParams::default(),
        climate: ClimateParams::default(),
        emission: EmissionProjectionParams::default(),
        schedule: RunSchedule::default(),
    }
}

macro_rules! numeric_fields {
    ($( $key:literal => $section:ident . $field:ident ),* $(,)?) => {
        /// Dotted keys of every numeric scalar, in document order.
        pub const NUMERIC_KEYS: &[&str] = &[$($key),*];

        impl ModelParams {
            /// Reads a numeric field by dotted key.
            pub fn get(&self, key: &str) -> Option<f64> {
                match key {
                    $($key => Some(self.$section.$field),)*
                    _ => None,
                }
            }

            /// Writes a numeric field by dotted key. Returns `false` for an
            /// unknown or non-numeric key.
            pub fn set(&mut self, key: &str, value: f64) -> bool {
                match key {
                    $($key => { self.$section.$field = value; true })*
                    _ => false,
                }
            }
        }
    };
}

numeric_fields! {
    "social.kappa" => social.kappa,
    "social.beta" => social.beta,
    "social.delta" => social.delta,
    "social.f_max" => social.f_max,
    "social.omega" => social.omega,
    "social.T_lim" => social.t_lim,
    "social.x0" => social.x0,
    "tipping.R_max" => tipping.r_max,
    "tipping.R0" => tipping.r0,
    "tipping.T_c" => tipping.t_c,
    "climate.C_at0" => climate.c_at0,
    "climate.C_oc0" => climate.c_oc0,
    "climate.C_veg0" => climate.c_veg0,
    "climate.C_so0" => climate.c_so0,
    "climate.k_p" => climate.k_p,
    "climate.k_r" => climate.k_r,
    "climate.k_sr" => climate.k_sr,
    "climate.k_t" => climate.k_t,
    "climate.k_MM" => climate.k_mm,
    "climate.k_c" => climate.k_c,
    "climate.k_M" => climate.k_m,
    "climate.k_A" => climate.k_plant_norm,
    "climate.k_B" => climate.k_soil_norm,
    "climate.k_a" => climate.atm_moles,
    "climate.E_a" => climate.e_a,
    "climate.c_heat" => climate.c_heat,
    "climate.a_E" => climate.a_e,
    "climate.L_latent" => climate.l_latent,
    "climate.R_gas" => climate.r_gas,
    "climate.H" => climate.humidity,
    "climate.A_albedo" => climate.albedo,
    "climate.chi" => climate.chi,
    "climate.zeta" => climate.zeta,
    "climate.S_flux" => climate.s_flux,
    "climate.tau_CH4" => climate.tau_ch4,
    "climate.P0" => climate.p0,
    "climate.F0" => climate.f0,
    "climate.sigma_SB" => climate.sigma_sb,
    "climate.T_R" => climate.t_r,
    "climate.T0_abs" => climate.t0_abs,
    "climate.f_gtm" => climate.f_gtm,
    "climate.seconds_per_year" => climate.seconds_per_year,
    "emission.eps_max" => emission.eps_max,
    "emission.s_half" => emission.s_half,
    "emission.t_pivot" => emission.t_pivot,
    "schedule.t_start" => schedule.t_start,
    "schedule.t_social_on" => schedule.t_social_on,
    "schedule.t_end" => schedule.t_end,
    "schedule.dt" => schedule.dt,
    "schedule.output_stride" => schedule.output_stride,
}

/// Boolean keys.
pub const FLAG_KEYS: &[&str] = &["tipping.enabled"];

/// A broken invariant, named by the dotted key of the offending field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("invalid parameters: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// Checks every field invariant. An empty list means the parameters are valid.
pub fn validate(params: &ModelParams) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut check = |key: &str, ok: bool, message: &str| {
        if !ok {
            out.push(Violation {
                field: key.to_string(),
                message: message.to_string(),
            });
        }
    };

    for key in NUMERIC_KEYS {
        let v = params.get(key).expect("registered key");
        check(key, v.is_finite(), "must be finite");
    }

    let s = &params.social;
    check("social.kappa", s.kappa >= 0.0, "must be >= 0");
    check("social.delta", s.delta >= 0.0, "must be >= 0");
    check("social.f_max", s.f_max >= 0.0, "must be >= 0");
    check("social.omega", s.omega > 0.0, "must be > 0");
    check(
        "social.x0",
        (0.0..=1.0).contains(&s.x0),
        "must lie in [0, 1]",
    );

    let tp = &params.tipping;
    check("tipping.R_max", tp.r_max >= 0.0, "must be >= 0");
    check("tipping.R0", tp.r0 > 0.0, "must be > 0");

    for key in NUMERIC_KEYS.iter().filter(|k| k.starts_with("climate.")) {
        let v = params.get(key).expect("registered key");
        check(key, v > 0.0, "must be > 0");
    }
    check(
        "climate.T0_abs",
        (250.0..=330.0).contains(&params.climate.t0_abs),
        "must lie in [250, 330] K",
    );

    let e = &params.emission;
    check("emission.eps_max", e.eps_max >= 0.0, "must be >= 0");
    check("emission.s_half", e.s_half > 0.0, "must be > 0");

    let r = &params.schedule;
    check(
        "schedule.t_social_on",
        r.t_start < r.t_social_on && r.t_social_on < r.t_end,
        "must satisfy t_start < t_social_on < t_end",
    );
    check("schedule.dt", r.dt > 0.0, "must be > 0");
    check(
        "schedule.output_stride",
        r.output_stride >= r.dt,
        "must be >= dt",
    );
    out
}

/// Parses a configuration document on top of the defaults and validates
/// the result.
pub fn load_config(text: &str) -> Result<ModelParams, ConfigError> {
    load_config_onto(default_params(), text)
}

/// Like [`load_config`], but overrides start from `base` instead of the
/// defaults.
pub fn load_config_onto(base: ModelParams, text: &str) -> Result<ModelParams, ConfigError> {
    let mut params = base;
    let mut seen: Vec<&str> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Parse {
            line,
            message: format!("expected `key = value`, found `{content}`"),
        })?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError::Parse {
                line,
                message: "empty key or value".into(),
            });
        }
        if seen.contains(&key) {
            return Err(ConfigError::Parse {
                line,
                message: format!("duplicate key `{key}`"),
            });
        }

        if FLAG_KEYS.contains(&key) {
            params.tipping.enabled = match value {
                "true" => true,
                "false" => false,
                other => {
                    return Err(ConfigError::Parse {
                        line,
                        message: format!("expected `true` or `false` for `{key}`, found `{other}`"),
                    })
                }
            };
        } else if NUMERIC_KEYS.contains(&key) {
            let v: f64 = value.parse().map_err(|_| ConfigError::Parse {
                line,
                message: format!("expected a number for `{key}`, found `{value}`"),
            })?;
            params.set(key, v);
        } else {
            return Err(ConfigError::UnknownKey {
                line,
                key: key.to_string(),
            });
        }
        seen.push(key);
    }

    let violations = validate(&params);
    if violations.is_empty() {
        Ok(params)
    } else {
        Err(ConfigError::Invalid(violations))
    }
}

/// Writes every key in the configuration grammar. Numbers carry 17
/// significant digits, so `load_config(&to_config_string(p)) == p`.
pub fn to_config_string(params: &ModelParams) -> String {
    let mut out = String::new();
    let mut section = "";
    for key in FLAG_KEYS.iter().chain(NUMERIC_KEYS) {
        let sec = key.split('.').next().unwrap_or_default();
        if sec != section {
            if !section.is_empty() {
                out.push('\n');
            }
            out.push_str(&format!("# {sec}\n"));
            section = sec;
        }
        match params.get(key) {
            Some(v) => out.push_str(&format!("{key} = {}\n", fmt_g17(v))),
            None => out.push_str(&format!("{key} = {}\n", params.tipping.enabled)),
        }
    }
    out
}

impl ModelParams {
    /// Short stable hash of the full parameter set.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let digest = Sha256::digest(to_config_string(self).as_bytes());
        hex::encode(&digest[..8])
    }

    /// Copy with a single numeric field replaced. Unknown keys are an error.
    pub fn with(&self, key: &str, value: f64) -> Result<ModelParams, String> {
        let mut p = *self;
        if p.set(key, value) {
            Ok(p)
        } else {
            Err(format!("unknown numeric parameter `{key}`"))
        }
    }
}
