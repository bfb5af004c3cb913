//! Parameter-plane sweeps and one-at-a-time sensitivity analysis.
//!
//! Every grid point is an independent baseline/modified pair. Points run on
//! a rayon pool of the requested size and are collected by index, so the
//! output order is row-major regardless of scheduling.

use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::config::{validate, ModelParams, TippingParams, NUMERIC_KEYS};
use crate::emissions::EmissionSeries;
use crate::metrics::{compute_metrics, MetricRecord, DEFAULT_AUC_THRESHOLD, DEFAULT_D_VALUES};
use crate::numfmt::{ser_g17, ser_opt_g17};
use crate::simulation::run_pair;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SweepError {
    #[error("invalid axis `{spec}`: {reason}")]
    Axis { spec: String, reason: String },
    #[error("both axes vary `{0}`")]
    SameParameter(String),
    #[error("unknown scenario preset `{0}` (expected high_risk|low_risk)")]
    UnknownPreset(String),
    #[error("perturbation fraction must lie in (0, 1), got {0}")]
    Fraction(f64),
    #[error("invalid sweep options: {0}")]
    Options(String),
    #[error("reference run failed: {0}")]
    Reference(String),
}

/// One linearly spaced sweep axis over a numeric parameter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxisSpec {
    pub path: String,
    #[serde(serialize_with = "ser_g17")]
    pub lo: f64,
    #[serde(serialize_with = "ser_g17")]
    pub hi: f64,
    pub n: usize,
}

impl AxisSpec {
    pub fn new(path: &str, lo: f64, hi: f64, n: usize) -> Result<Self, SweepError> {
        let axis = Self {
            path: path.to_string(),
            lo,
            hi,
            n,
        };
        axis.check()?;
        Ok(axis)
    }

    fn check(&self) -> Result<(), SweepError> {
        let fail = |reason: &str| {
            Err(SweepError::Axis {
                spec: self.to_string(),
                reason: reason.to_string(),
            })
        };
        if !NUMERIC_KEYS.contains(&self.path.as_str()) {
            return fail("path does not name a numeric parameter");
        }
        if self.n < 2 {
            return fail("need at least 2 points");
        }
        if !(self.lo < self.hi) || !self.lo.is_finite() || !self.hi.is_finite() {
            return fail("need finite lo < hi");
        }
        Ok(())
    }

    /// Axis value at index `i`; the last point is exactly `hi`.
    pub fn value(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.hi
        } else {
            self.lo + (self.hi - self.lo) * i as f64 / (self.n - 1) as f64
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.value(i)).collect()
    }
}

impl std::fmt::Display for AxisSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}:{}:{}", self.path, self.lo, self.hi, self.n)
    }
}

impl FromStr for AxisSpec {
    type Err = SweepError;

    /// `path:lo:hi:n`
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |reason: &str| SweepError::Axis {
            spec: s.to_string(),
            reason: reason.to_string(),
        };
        let parts: Vec<&str> = s.split(':').collect();
        let [path, lo, hi, n] = parts.as_slice() else {
            return Err(bad("expected path:lo:hi:n"));
        };
        let lo: f64 = lo.parse().map_err(|_| bad("lo is not a number"))?;
        let hi: f64 = hi.parse().map_err(|_| bad("hi is not a number"))?;
        let n: usize = n.parse().map_err(|_| bad("n is not a count"))?;
        AxisSpec::new(path, lo, hi, n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    HighRisk,
    LowRisk,
    Custom,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::HighRisk => "high_risk",
            Scenario::LowRisk => "low_risk",
            Scenario::Custom => "custom",
        }
    }

    /// Critical temperature of the preset, if any.
    pub fn critical_temperature(self) -> Option<f64> {
        match self {
            Scenario::HighRisk => Some(2.0),
            Scenario::LowRisk => Some(3.0),
            Scenario::Custom => None,
        }
    }

    pub fn apply(self, params: &ModelParams) -> ModelParams {
        let mut p = *params;
        if let Some(t_c) = self.critical_temperature() {
            p.tipping.t_c = t_c;
        }
        p
    }
}

impl FromStr for Scenario {
    type Err = SweepError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "high_risk" => Ok(Scenario::HighRisk),
            "low_risk" => Ok(Scenario::LowRisk),
            other => Err(SweepError::UnknownPreset(other.to_string())),
        }
    }
}

/// Tipping parameters with the named preset's critical temperature.
pub fn scenario_preset(name: &str, tipping: &TippingParams) -> Result<TippingParams, SweepError> {
    let scenario: Scenario = name.parse()?;
    Ok(TippingParams {
        t_c: scenario
            .critical_temperature()
            .expect("named presets fix T_c"),
        ..*tipping
    })
}

/// Settings shared by sweep-style runs.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub d_values: Vec<f64>,
    /// AUC-difference classification threshold, K*yr.
    pub threshold: f64,
    /// Worker threads; 0 lets rayon decide.
    pub workers: usize,
    /// Tag carried into each record. The caller applies the preset to the
    /// parameters.
    pub scenario: Scenario,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            d_values: DEFAULT_D_VALUES.to_vec(),
            threshold: DEFAULT_AUC_THRESHOLD,
            workers: 0,
            scenario: Scenario::Custom,
        }
    }
}

impl SweepOptions {
    fn check(&self) -> Result<(), SweepError> {
        if let Some(d) = self.d_values.iter().find(|d| !(**d > 1.0)) {
            return Err(SweepError::Options(format!("d must exceed 1, got {d}")));
        }
        if !(self.threshold > 0.0) {
            return Err(SweepError::Options(format!(
                "threshold must be positive, got {}",
                self.threshold
            )));
        }
        Ok(())
    }
}

/// Runs `f` over `0..n` on a pool with `workers` threads, preserving index order.
pub fn parallel_map<T, F>(n: usize, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("thread pool");
    pool.install(|| (0..n).into_par_iter().map(&f).collect())
}

/// One grid point of a two-parameter sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub i: usize,
    pub j: usize,
    #[serde(serialize_with = "ser_g17")]
    pub x_value: f64,
    #[serde(serialize_with = "ser_g17")]
    pub y_value: f64,
    pub scenario: Scenario,
    pub metrics: Option<MetricRecord>,
    pub error: Option<String>,
}

impl SweepRecord {
    pub fn tipped(&self) -> bool {
        self.metrics.as_ref().is_some_and(|m| m.tipped)
    }
}

/// Metrics of one baseline/modified pair at `params`.
pub fn evaluate_point(
    params: &ModelParams,
    series: &EmissionSeries,
    opts: &SweepOptions,
) -> Result<MetricRecord, String> {
    let violations = validate(params);
    if !violations.is_empty() {
        return Err(violations
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join("; "));
    }
    let (base, modified) = run_pair(params, series).map_err(|e| e.to_string())?;
    compute_metrics(
        &modified,
        &base,
        &opts.d_values,
        opts.threshold,
        params.schedule.t_social_on,
    )
    .map_err(|e| e.to_string())
}

/// Two-parameter grid. Records are row-major: `x` index outer, `y` inner.
/// Failed points carry an error message and no metrics.
pub fn run_sweep(
    params: &ModelParams,
    series: &EmissionSeries,
    x_axis: &AxisSpec,
    y_axis: &AxisSpec,
    opts: &SweepOptions,
) -> Result<Vec<SweepRecord>, SweepError> {
    x_axis.check()?;
    y_axis.check()?;
    if x_axis.path == y_axis.path {
        return Err(SweepError::SameParameter(x_axis.path.clone()));
    }
    opts.check()?;

    let ny = y_axis.n;
    Ok(parallel_map(x_axis.n * ny, opts.workers, |k| {
        let (i, j) = (k / ny, k % ny);
        let (xv, yv) = (x_axis.value(i), y_axis.value(j));
        let mut p = *params;
        p.set(&x_axis.path, xv);
        p.set(&y_axis.path, yv);
        let (metrics, error) = match evaluate_point(&p, series, opts) {
            Ok(m) => (Some(m), None),
            Err(e) => (None, Some(e)),
        };
        SweepRecord {
            i,
            j,
            x_value: xv,
            y_value: yv,
            scenario: opts.scenario,
            metrics,
            error,
        }
    }))
}

/// Critical temperature against social learning rate at fixed `R_max`.
pub fn tc_kappa_scan(
    params: &ModelParams,
    series: &EmissionSeries,
    tc_axis: &AxisSpec,
    kappa_axis: &AxisSpec,
    opts: &SweepOptions,
) -> Result<Vec<SweepRecord>, SweepError> {
    let axis_err = |axis: &AxisSpec, reason: &str| SweepError::Axis {
        spec: axis.to_string(),
        reason: reason.to_string(),
    };
    if tc_axis.path != "tipping.T_c" {
        return Err(axis_err(tc_axis, "first axis must be tipping.T_c"));
    }
    if kappa_axis.path != "social.kappa" {
        return Err(axis_err(kappa_axis, "second axis must be social.kappa"));
    }
    if tc_axis.lo > 1.5 || tc_axis.hi < 5.0 {
        return Err(axis_err(tc_axis, "must span at least [1.5, 5]"));
    }
    run_sweep(params, series, tc_axis, kappa_axis, opts)
}

/// Counts 4-connected regions of tipped and of non-tipped points in a
/// row-major `nx x ny` grid. Failed points belong to neither.
pub fn region_counts(records: &[SweepRecord], nx: usize, ny: usize) -> (usize, usize) {
    assert_eq!(records.len(), nx * ny, "record count does not match grid");
    let label = |k: usize| -> Option<bool> { records[k].metrics.as_ref().map(|m| m.tipped) };
    let mut seen = vec![false; nx * ny];
    let (mut tipped, mut untipped) = (0, 0);
    for start in 0..nx * ny {
        let Some(class) = label(start) else { continue };
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![start];
        while let Some(k) = stack.pop() {
            let (i, j) = (k / ny, k % ny);
            let mut near = Vec::with_capacity(4);
            if i > 0 {
                near.push(k - ny);
            }
            if i + 1 < nx {
                near.push(k + ny);
            }
            if j > 0 {
                near.push(k - 1);
            }
            if j + 1 < ny {
                near.push(k + 1);
            }
            for nb in near {
                if !seen[nb] && label(nb) == Some(class) {
                    seen[nb] = true;
                    stack.push(nb);
                }
            }
        }
        if class {
            tipped += 1;
        } else {
            untipped += 1;
        }
    }
    (tipped, untipped)
}

/// Parameters perturbed by the tornado analysis: every physical constant
/// of the climate and social models plus the tipping and projection
/// parameters. Schedule entries, unit conversions and the unused freezing
/// point are left out. `climate.T0_abs` stands in for the initial
/// temperature.
pub const SENSITIVITY_KEYS: &[&str] = &[
    "social.kappa",
    "social.beta",
    "social.delta",
    "social.f_max",
    "social.omega",
    "social.T_lim",
    "social.x0",
    "tipping.R_max",
    "tipping.R0",
    "tipping.T_c",
    "climate.C_at0",
    "climate.C_oc0",
    "climate.C_veg0",
    "climate.C_so0",
    "climate.k_p",
    "climate.k_r",
    "climate.k_sr",
    "climate.k_t",
    "climate.k_MM",
    "climate.k_c",
    "climate.k_M",
    "climate.k_A",
    "climate.k_B",
    "climate.k_a",
    "climate.E_a",
    "climate.c_heat",
    "climate.a_E",
    "climate.L_latent",
    "climate.R_gas",
    "climate.H",
    "climate.A_albedo",
    "climate.chi",
    "climate.zeta",
    "climate.S_flux",
    "climate.tau_CH4",
    "climate.P0",
    "climate.F0",
    "climate.sigma_SB",
    "climate.T0_abs",
    "emission.eps_max",
    "emission.s_half",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Bound {
    Upper,
    Lower,
}

impl Bound {
    pub fn as_str(self) -> &'static str {
        match self {
            Bound::Upper => "upper",
            Bound::Lower => "lower",
        }
    }
}

/// Which change orders the tornado.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TornadoMetric {
    #[default]
    PeakT,
    AucDiff,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityRecord {
    pub path: String,
    pub bound: Bound,
    #[serde(serialize_with = "ser_g17")]
    pub value: f64,
    /// Change in AUC difference against the unperturbed pair, K*yr.
    #[serde(serialize_with = "ser_opt_g17")]
    pub delta_auc_diff: Option<f64>,
    /// Change in peak anomaly of the modified run, K.
    #[serde(serialize_with = "ser_opt_g17")]
    pub delta_peak_t: Option<f64>,
    pub error: Option<String>,
}

impl SensitivityRecord {
    fn magnitude(&self, metric: TornadoMetric) -> Option<f64> {
        match metric {
            TornadoMetric::PeakT => self.delta_peak_t,
            TornadoMetric::AucDiff => self.delta_auc_diff,
        }
        .map(f64::abs)
    }
}

/// Perturbs each whitelisted parameter to `(1 +/- fraction) x` its value
/// and records the change in AUC difference and peak anomaly. Output is
/// grouped per parameter (upper then lower) and ordered by the larger of
/// the two absolute changes in `metric`, descending; failed runs sort last.
pub fn sensitivity_tornado(
    params: &ModelParams,
    series: &EmissionSeries,
    fraction: f64,
    opts: &SweepOptions,
    metric: TornadoMetric,
) -> Result<Vec<SensitivityRecord>, SweepError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(SweepError::Fraction(fraction));
    }
    opts.check()?;
    let reference = evaluate_point(params, series, opts).map_err(SweepError::Reference)?;

    let jobs: Vec<(&str, Bound)> = SENSITIVITY_KEYS
        .iter()
        .flat_map(|&k| [(k, Bound::Upper), (k, Bound::Lower)])
        .collect();
    let records = parallel_map(jobs.len(), opts.workers, |k| {
        let (path, bound) = jobs[k];
        let base = params.get(path).expect("whitelisted key");
        let value = match bound {
            Bound::Upper => base * (1.0 + fraction),
            Bound::Lower => base * (1.0 - fraction),
        };
        let p = params.with(path, value).expect("whitelisted key");
        match evaluate_point(&p, series, opts) {
            Ok(m) => SensitivityRecord {
                path: path.to_string(),
                bound,
                value,
                delta_auc_diff: Some(m.auc_diff - reference.auc_diff),
                delta_peak_t: Some(m.peak_t - reference.peak_t),
                error: None,
            },
            Err(e) => SensitivityRecord {
                path: path.to_string(),
                bound,
                value,
                delta_auc_diff: None,
                delta_peak_t: None,
                error: Some(e),
            },
        }
    });

    let mut groups: Vec<(f64, Vec<SensitivityRecord>)> = records
        .chunks(2)
        .map(|pair| {
            let key = pair
                .iter()
                .map(|r| r.magnitude(metric).unwrap_or(f64::NEG_INFINITY))
                .fold(f64::NEG_INFINITY, f64::max);
            (key, pair.to_vec())
        })
        .collect();
    groups.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then_with(|| a.1[0].path.cmp(&b.1[0].path))
    });
    Ok(groups.into_iter().flat_map(|(_, g)| g).collect())
}

/// Parameter paths in tornado order, one per parameter.
pub fn tornado_order(records: &[SensitivityRecord]) -> Vec<&str> {
    let mut out: Vec<&str> = Vec::new();
    for r in records {
        if out.last() != Some(&r.path.as_str()) {
            out.push(&r.path);
        }
    }
    out
}
