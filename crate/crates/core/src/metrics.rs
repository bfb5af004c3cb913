//! Scalar diagnostics of a baseline/modified trajectory pair.

use serde::Serialize;
use thiserror::Error;

use crate::numfmt::{ser_g17, ser_opt_g17};
use crate::simulation::Trajectory;

/// Baseline anomaly below which the ratio test for time-to-tipping is skipped, K.
pub const T_FLOOR: f64 = 0.1;

/// Default AUC-difference threshold separating tipped from non-tipped pairs, K*yr.
pub const DEFAULT_AUC_THRESHOLD: f64 = 20.0;

/// Default ratio thresholds for time-to-tipping.
pub const DEFAULT_D_VALUES: [f64; 3] = [1.1, 1.25, 1.5];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("trajectories are sampled on different grids")]
    GridMismatch,
    #[error("empty trajectory")]
    Empty,
    #[error("ratio threshold d must exceed 1, got {0}")]
    InvalidRatio(f64),
    #[error("classification threshold must be positive, got {0}")]
    InvalidThreshold(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeToTip {
    #[serde(serialize_with = "ser_g17")]
    pub d: f64,
    /// First year the modified anomaly reaches `d` times the baseline, if ever.
    #[serde(serialize_with = "ser_opt_g17")]
    pub year: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRecord {
    /// Integral of `T_mod - T_base` over the run, K*yr.
    #[serde(serialize_with = "ser_g17")]
    pub auc_diff: f64,
    pub time_to_tip: Vec<TimeToTip>,
    /// Peak anomaly of the modified run, K.
    #[serde(serialize_with = "ser_g17")]
    pub peak_t: f64,
    #[serde(serialize_with = "ser_g17")]
    pub peak_t_year: f64,
    /// Peak anomaly of the baseline run, K.
    #[serde(serialize_with = "ser_g17")]
    pub peak_t_base: f64,
    /// Largest pointwise `T_mod - T_base`, K.
    #[serde(serialize_with = "ser_g17")]
    pub max_t_gap: f64,
    /// Mitigator fraction at the end of the modified run.
    #[serde(serialize_with = "ser_g17")]
    pub final_x: f64,
    pub tipped: bool,
    #[serde(serialize_with = "ser_g17")]
    pub threshold: f64,
    pub fingerprint: String,
}

impl MetricRecord {
    pub fn time_to_tip_for(&self, d: f64) -> Option<f64> {
        self.time_to_tip
            .iter()
            .find(|r| r.d == d)
            .and_then(|r| r.year)
    }
}

fn same_grid(a: &Trajectory, b: &Trajectory) -> Result<(), MetricsError> {
    if a.is_empty() || b.is_empty() {
        return Err(MetricsError::Empty);
    }
    if a.times != b.times {
        return Err(MetricsError::GridMismatch);
    }
    Ok(())
}

/// Trapezoidal integral of `y` over `t`.
pub fn trapezoid(t: &[f64], y: &[f64]) -> f64 {
    t.windows(2)
        .zip(y.windows(2))
        .map(|(tw, yw)| 0.5 * (tw[1] - tw[0]) * (yw[0] + yw[1]))
        .sum()
}

/// Trapezoidal integral of `T_mod - T_base` over the full run, K*yr.
pub fn auc_difference(modified: &Trajectory, base: &Trajectory) -> Result<f64, MetricsError> {
    same_grid(modified, base)?;
    let diff: Vec<f64> = modified
        .states
        .iter()
        .zip(&base.states)
        .map(|(m, b)| m.climate.t - b.climate.t)
        .collect();
    Ok(trapezoid(&modified.times, &diff))
}

/// First time at or after `t_from` with `T_mod >= d * T_base` and
/// `T_base >= floor`, linearly interpolated when the previous sample was
/// also eligible.
pub fn first_ratio_crossing(
    times: &[f64],
    t_mod: &[f64],
    t_base: &[f64],
    d: f64,
    t_from: f64,
    floor: f64,
) -> Option<f64> {
    let eligible = |i: usize| times[i] >= t_from && t_base[i] >= floor;
    let gap = |i: usize| t_mod[i] - d * t_base[i];
    (0..times.len())
        .find(|&i| eligible(i) && gap(i) >= 0.0)
        .map(|i| {
            if i > 0 && eligible(i - 1) {
                let (g0, g1) = (gap(i - 1), gap(i));
                let w = -g0 / (g1 - g0);
                times[i - 1] + w * (times[i] - times[i - 1])
            } else {
                times[i]
            }
        })
}

/// Time to tipping for ratio threshold `d > 1`, searched from `t_from`
/// (normally the social switch-on year).
pub fn time_to_tipping(
    modified: &Trajectory,
    base: &Trajectory,
    d: f64,
    t_from: f64,
) -> Result<Option<f64>, MetricsError> {
    if !(d > 1.0) {
        return Err(MetricsError::InvalidRatio(d));
    }
    same_grid(modified, base)?;
    Ok(first_ratio_crossing(
        &modified.times,
        &modified.temperatures(),
        &base.temperatures(),
        d,
        t_from,
        T_FLOOR,
    ))
}

/// Maximum of `values` and its time; ties go to the earliest sample.
pub fn argmax(times: &[f64], values: &[f64]) -> Option<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    for (&t, &v) in times.iter().zip(values) {
        match best {
            Some((bv, _)) if v <= bv => {}
            _ => best = Some((v, t)),
        }
    }
    best
}

/// Peak anomaly and the year it is reached.
pub fn peak_temperature(traj: &Trajectory) -> Result<(f64, f64), MetricsError> {
    argmax(&traj.times, &traj.temperatures()).ok_or(MetricsError::Empty)
}

pub fn classify_tipping(auc_diff: f64, threshold: f64) -> Result<bool, MetricsError> {
    if !(threshold > 0.0) {
        return Err(MetricsError::InvalidThreshold(threshold));
    }
    Ok(auc_diff >= threshold)
}

/// All diagnostics of a pair.
pub fn compute_metrics(
    modified: &Trajectory,
    base: &Trajectory,
    d_values: &[f64],
    threshold: f64,
    t_from: f64,
) -> Result<MetricRecord, MetricsError> {
    let auc_diff = auc_difference(modified, base)?;
    let time_to_tip = d_values
        .iter()
        .map(|&d| time_to_tipping(modified, base, d, t_from).map(|year| TimeToTip { d, year }))
        .collect::<Result<Vec<_>, _>>()?;
    let (peak_t, peak_t_year) = peak_temperature(modified)?;
    let (peak_t_base, _) = peak_temperature(base)?;
    let max_t_gap = modified
        .states
        .iter()
        .zip(&base.states)
        .map(|(m, b)| m.climate.t - b.climate.t)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(MetricRecord {
        auc_diff,
        time_to_tip,
        peak_t,
        peak_t_year,
        peak_t_base,
        max_t_gap,
        final_x: modified.last().social.x,
        tipped: classify_tipping(auc_diff, threshold)?,
        threshold,
        fingerprint: modified.fingerprint.clone(),
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::earth_system::ClimateState;
    use crate::simulation::{CoupledState, Variant};
    use proptest::prelude::*;

    pub(crate) fn synthetic(times: &[f64], temps: &[f64], variant: Variant) -> Trajectory {
        Trajectory {
            times: times.to_vec(),
            states: times
                .iter()
                .zip(temps)
                .map(|(&t, &temp)| CoupledState {
                    climate: ClimateState {
                        t: temp,
                        ..ClimateState::default()
                    },
                    t,
                    ..CoupledState::default()
                })
                .collect(),
            fluxes: vec![Default::default(); times.len()],
            fingerprint: "test".into(),
            variant,
        }
    }

    fn years(n: usize) -> Vec<f64> {
        (0..n).map(|i| 1800.0 + i as f64).collect()
    }

    #[test]
    fn auc_cases() {
        let t = years(401);
        let base = synthetic(&t, &vec![1.0; 401], Variant::Baseline);
        assert_eq!(auc_difference(&base, &base).unwrap(), 0.0);

        let shifted = synthetic(&t, &vec![2.0; 401], Variant::Modified);
        assert!((auc_difference(&shifted, &base).unwrap() - 400.0).abs() < 1e-9);

        let ramp: Vec<f64> = (0..401).map(|i| 1.0 + i as f64 / 400.0).collect();
        let ramped = synthetic(&t, &ramp, Variant::Modified);
        assert!((auc_difference(&ramped, &base).unwrap() - 200.0).abs() < 1e-9);
    }

    #[test]
    fn grid_mismatch() {
        let a = synthetic(&years(10), &[0.0; 10], Variant::Baseline);
        let b = synthetic(&years(11), &[0.0; 11], Variant::Baseline);
        assert_eq!(auc_difference(&a, &b), Err(MetricsError::GridMismatch));
        assert_eq!(
            time_to_tipping(&a, &b, 1.5, 1800.0),
            Err(MetricsError::GridMismatch)
        );
    }

    #[test]
    fn time_to_tipping_cases() {
        let t = years(401);
        let base_t: Vec<f64> = (0..401).map(|i| i as f64 / 200.0).collect();
        let mod_t: Vec<f64> = base_t.iter().map(|v| 2.0 * v).collect();
        let base = synthetic(&t, &base_t, Variant::Baseline);
        let modified = synthetic(&t, &mod_t, Variant::Modified);
        // 2017 sample has T_base = 1.085 above the floor, the previous one is
        // before t_from, so no interpolation.
        assert_eq!(
            time_to_tipping(&modified, &base, 1.5, 2017.0).unwrap(),
            Some(2017.0)
        );
        // Without a start year, the floor (0.1 K) gates the first sample: 1820.
        assert_eq!(
            time_to_tipping(&modified, &base, 1.5, 1800.0).unwrap(),
            Some(1820.0)
        );

        assert_eq!(time_to_tipping(&base, &base, 1.1, 2017.0).unwrap(), None);
        assert_eq!(
            time_to_tipping(&modified, &base, 1.0, 2017.0),
            Err(MetricsError::InvalidRatio(1.0))
        );
    }

    #[test]
    fn interpolates_between_eligible_samples() {
        let t = [2017.0, 2018.0, 2019.0];
        let base = [1.0, 1.0, 1.0];
        let modified = [1.0, 1.2, 1.6];
        // gap at d=1.4: -0.2, +0.2 -> halfway between 2018 and 2019
        let got = first_ratio_crossing(&t, &modified, &base, 1.4, 2017.0, T_FLOOR).unwrap();
        assert!((got - 2018.5).abs() < 1e-12);
    }

    #[test]
    fn peak_cases() {
        let t = years(5);
        let rising = synthetic(&t, &[0.0, 1.0, 2.0, 3.0, 4.0], Variant::Baseline);
        assert_eq!(peak_temperature(&rising).unwrap(), (4.0, 1804.0));
        let flat = synthetic(&t, &[1.5; 5], Variant::Baseline);
        assert_eq!(peak_temperature(&flat).unwrap(), (1.5, 1800.0));
        let hump = synthetic(&t, &[0.0, 2.0, 3.0, 2.0, 1.0], Variant::Baseline);
        assert_eq!(peak_temperature(&hump).unwrap(), (3.0, 1802.0));
        let empty = synthetic(&[], &[], Variant::Baseline);
        assert_eq!(peak_temperature(&empty), Err(MetricsError::Empty));
    }

    #[test]
    fn classification() {
        assert!(!classify_tipping(0.0, 20.0).unwrap());
        assert!(classify_tipping(20.0, 20.0).unwrap());
        assert!(classify_tipping(1.0, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn auc_antisymmetric(a in prop::collection::vec(-3.0..3.0f64, 20), b in prop::collection::vec(-3.0..3.0f64, 20)) {
            let t = years(20);
            let ta = synthetic(&t, &a, Variant::Modified);
            let tb = synthetic(&t, &b, Variant::Baseline);
            let ab = auc_difference(&ta, &tb).unwrap();
            let ba = auc_difference(&tb, &ta).unwrap();
            prop_assert!((ab + ba).abs() < 1e-12);
        }

        #[test]
        fn time_to_tip_monotone_in_d(
            base in prop::collection::vec(0.0..3.0f64, 40),
            excess in prop::collection::vec(0.0..2.0f64, 40),
            d1 in 1.01..2.0f64,
            dd in 0.0..1.0f64,
        ) {
            let t = years(40);
            let modified: Vec<f64> = base.iter().zip(&excess).map(|(b, e)| b + e).collect();
            let lo = first_ratio_crossing(&t, &modified, &base, d1, 1805.0, T_FLOOR);
            let hi = first_ratio_crossing(&t, &modified, &base, d1 + dd, 1805.0, T_FLOOR);
            match (lo, hi) {
                (Some(a), Some(b)) => prop_assert!(a <= b + 1e-9),
                (None, Some(_)) => prop_assert!(false, "larger d crossed but smaller did not"),
                _ => {}
            }
            if let Some(y) = lo {
                prop_assert!((1805.0..=1839.0).contains(&y));
            }
        }

        #[test]
        fn classification_monotone_in_threshold(auc in 0.0..200.0f64, t1 in 0.1..100.0f64, dt in 0.0..100.0f64) {
            let a = classify_tipping(auc, t1).unwrap();
            let b = classify_tipping(auc, t1 + dt).unwrap();
            prop_assert!(a || !b);
        }
    }
}
