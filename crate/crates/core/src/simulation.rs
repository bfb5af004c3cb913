//! Fixed-step RK4 integration of the coupled social-climate system.

use serde::Serialize;
use thiserror::Error;

use crate::config::{validate, ModelParams, Violation};
use crate::earth_system::{climate_derivatives, ClimateState, EarthSystemError, FluxSet};
use crate::emissions::{EmissionSeries, Emissions, EmissionsError};
use crate::social::{social_derivative, SocialState};

/// Relative slack used when matching schedule times to the step grid.
const GRID_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Tipping flux switched off.
    Baseline,
    /// Tipping flux switched on.
    Modified,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Baseline => "baseline",
            Variant::Modified => "modified",
        }
    }

    /// `params` with the tipping flag this variant implies.
    pub fn apply(self, params: &ModelParams) -> ModelParams {
        let mut p = *params;
        p.tipping.enabled = self == Variant::Modified;
        p
    }
}

impl std::str::FromStr for Variant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "baseline" => Ok(Variant::Baseline),
            "modified" => Ok(Variant::Modified),
            other => Err(format!(
                "unknown variant `{other}` (expected baseline|modified)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct CoupledState {
    pub climate: ClimateState,
    pub social: SocialState,
    pub t: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimulationError {
    #[error("invalid parameters: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidParams(Vec<Violation>),
    #[error("schedule mismatch: {0}")]
    Schedule(String),
    #[error(transparent)]
    Emissions(#[from] EmissionsError),
    #[error("integration failed at t = {t}: {reason} (state {state:?})")]
    Integration {
        t: f64,
        state: Box<CoupledState>,
        reason: String,
    },
}

impl SimulationError {
    fn integration(state: &CoupledState, reason: impl Into<String>) -> Self {
        SimulationError::Integration {
            t: state.t,
            state: Box::new(*state),
            reason: reason.into(),
        }
    }
}

/// Sampled output of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<CoupledState>,
    pub fluxes: Vec<FluxSet>,
    pub fingerprint: String,
    pub variant: Variant,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn temperatures(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.climate.t).collect()
    }

    pub fn mitigators(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.social.x).collect()
    }

    pub fn last(&self) -> &CoupledState {
        self.states.last().expect("trajectory is never empty")
    }
}

fn social_active(t: f64, params: &ModelParams) -> bool {
    let s = &params.schedule;
    t >= s.t_social_on - GRID_TOL * s.dt.max(1.0)
}

/// Full coupled vector field. Returns the climate derivatives, dx/dt and
/// the fluxes at `state`.
fn vector_field(
    state: &CoupledState,
    params: &ModelParams,
    emissions: &Emissions,
    active: bool,
) -> Result<(ClimateState, f64, FluxSet), SimulationError> {
    let eps = emissions.rate_unchecked(state.t);
    let x = state.social.x;
    let (eps_eff, dx) = if active {
        (
            eps * (1.0 - x),
            social_derivative(x, state.climate.t, &params.social),
        )
    } else {
        (eps, 0.0)
    };
    let (dc, fx) =
        climate_derivatives(&state.climate, eps_eff, &params.climate, &params.tipping)
            .map_err(|e: EarthSystemError| SimulationError::integration(state, e.to_string()))?;
    if !dc.is_finite() || !dx.is_finite() {
        return Err(SimulationError::integration(state, "non-finite derivative"));
    }
    Ok((dc, dx, fx))
}

fn offset(base: &CoupledState, dc: &ClimateState, dx: f64, h: f64) -> CoupledState {
    CoupledState {
        climate: ClimateState {
            c_at: base.climate.c_at + h * dc.c_at,
            c_oc: base.climate.c_oc + h * dc.c_oc,
            c_veg: base.climate.c_veg + h * dc.c_veg,
            c_so: base.climate.c_so + h * dc.c_so,
            t: base.climate.t + h * dc.t,
        },
        social: SocialState {
            x: base.social.x + h * dx,
        },
        t: base.t + h,
    }
}

/// One classical RK4 step of length `h`. The social equation is frozen
/// when the step starts before `t_social_on`; `x` is clamped to `[0, 1]`.
pub fn rk4_step(
    state: &CoupledState,
    h: f64,
    params: &ModelParams,
    emissions: &Emissions,
) -> Result<CoupledState, SimulationError> {
    if !(h > 0.0) {
        return Err(SimulationError::integration(
            state,
            format!("step size {h} is not positive"),
        ));
    }
    let active = social_active(state.t, params);
    let half = 0.5 * h;

    let (k1, x1, _) = vector_field(state, params, emissions, active)?;
    let (k2, x2, _) = vector_field(&offset(state, &k1, x1, half), params, emissions, active)?;
    let (k3, x3, _) = vector_field(&offset(state, &k2, x2, half), params, emissions, active)?;
    let (k4, x4, _) = vector_field(&offset(state, &k3, x3, h), params, emissions, active)?;

    let w = h / 6.0;
    let comb = |a: f64, b: f64, c: f64, d: f64| w * (a + 2.0 * b + 2.0 * c + d);
    let c = &state.climate;
    let next = CoupledState {
        climate: ClimateState {
            c_at: c.c_at + comb(k1.c_at, k2.c_at, k3.c_at, k4.c_at),
            c_oc: c.c_oc + comb(k1.c_oc, k2.c_oc, k3.c_oc, k4.c_oc),
            c_veg: c.c_veg + comb(k1.c_veg, k2.c_veg, k3.c_veg, k4.c_veg),
            c_so: c.c_so + comb(k1.c_so, k2.c_so, k3.c_so, k4.c_so),
            t: c.t + comb(k1.t, k2.t, k3.t, k4.t),
        },
        social: SocialState {
            x: (state.social.x + comb(x1, x2, x3, x4)).clamp(0.0, 1.0),
        },
        t: state.t + h,
    };
    if !next.climate.is_finite() || !next.social.x.is_finite() {
        return Err(SimulationError::integration(
            state,
            "non-finite state after step",
        ));
    }
    Ok(next)
}

/// Number of whole `dt` steps in `span`, or `None` if `span` is not on the grid.
fn steps_in(span: f64, dt: f64) -> Option<usize> {
    let n = span / dt;
    let r = n.round();
    if r >= 0.0 && (n - r).abs() <= GRID_TOL * r.max(1.0) {
        Some(r as usize)
    } else {
        None
    }
}

struct Grid {
    n_steps: usize,
    onset_step: usize,
    stride_steps: usize,
}

fn grid(params: &ModelParams) -> Result<Grid, SimulationError> {
    let s = &params.schedule;
    let n_steps = steps_in(s.t_end - s.t_start, s.dt).ok_or_else(|| {
        SimulationError::Schedule(format!(
            "t_end - t_start is not a multiple of dt = {}",
            s.dt
        ))
    })?;
    let onset_step = steps_in(s.t_social_on - s.t_start, s.dt).ok_or_else(|| {
        SimulationError::Schedule(format!("t_social_on is not on the dt = {} grid", s.dt))
    })?;
    let stride_steps = steps_in(s.output_stride, s.dt)
        .filter(|&k| k > 0)
        .ok_or_else(|| {
            SimulationError::Schedule(format!("output_stride is not a multiple of dt = {}", s.dt))
        })?;
    Ok(Grid {
        n_steps,
        onset_step,
        stride_steps,
    })
}

/// Integrates one variant from `t_start` to `t_end`.
///
/// Before `t_social_on` the mitigator fraction is held at 0 and the full
/// baseline emission applies; at `t_social_on` it is set to `x0` and
/// emissions are scaled by `1 - x` from then on.
pub fn simulate(
    params: &ModelParams,
    series: &EmissionSeries,
    variant: Variant,
) -> Result<Trajectory, SimulationError> {
    let violations = validate(params);
    if !violations.is_empty() {
        return Err(SimulationError::InvalidParams(violations));
    }
    let emissions = Emissions::for_params(series.clone(), params)?;
    let run = variant.apply(params);
    let g = grid(&run)?;
    let sched = run.schedule;

    let capacity = g.n_steps / g.stride_steps + 1;
    let mut times = Vec::with_capacity(capacity);
    let mut states = Vec::with_capacity(capacity);
    let mut fluxes = Vec::with_capacity(capacity);

    let mut state = CoupledState {
        t: sched.t_start,
        ..CoupledState::default()
    };

    for k in 0..=g.n_steps {
        state.t = sched.t_start + k as f64 * sched.dt;
        if k == g.onset_step {
            state.social.x = run.social.x0;
        }
        if k % g.stride_steps == 0 {
            let active = k >= g.onset_step;
            let (_, _, fx) = vector_field(&state, &run, &emissions, active)?;
            times.push(state.t);
            states.push(state);
            fluxes.push(fx);
        }
        if k < g.n_steps {
            state = rk4_step(&state, sched.dt, &run, &emissions)?;
        }
    }

    Ok(Trajectory {
        times,
        states,
        fluxes,
        fingerprint: params.fingerprint(),
        variant,
    })
}

/// Baseline and modified runs on the same emissions and grid.
pub fn run_pair(
    params: &ModelParams,
    series: &EmissionSeries,
) -> Result<(Trajectory, Trajectory), SimulationError> {
    let base = simulate(params, series, Variant::Baseline)?;
    let modified = simulate(params, series, Variant::Modified)?;
    Ok((base, modified))
}
