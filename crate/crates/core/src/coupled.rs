//! Climate tipping that triggers the social tipping element: with strong
//! social norms, post-tipping warming can push `psi` past `delta`, which
//! destabilises `x = 0` and sends the population to full mitigation.

use serde::Serialize;
use thiserror::Error;

use crate::config::ModelParams;
use crate::emissions::EmissionSeries;
use crate::metrics::auc_difference;
use crate::numfmt::{ser_g17, ser_opt_g17};
use crate::simulation::{run_pair, simulate, SimulationError, Variant};
use crate::sweeps::parallel_map;

/// `x(t_end)` above this counts as a social tip to full mitigation.
pub const SOCIAL_TIP_CUTOFF: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoupledError {
    #[error(
        "beta bracket [{lo}, {hi}] does not straddle the boundary (both ends tipped = {tipped})"
    )]
    Bracket { lo: f64, hi: f64, tipped: bool },
    #[error("tolerance must be positive, got {0}")]
    Tolerance(f64),
    #[error(transparent)]
    Simulation(#[from] SimulationError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SocialTriggerRecord {
    #[serde(serialize_with = "ser_g17")]
    pub beta: f64,
    /// Mitigator fraction at the end of the modified run.
    #[serde(serialize_with = "ser_opt_g17")]
    pub final_x: Option<f64>,
    #[serde(serialize_with = "ser_opt_g17")]
    pub auc_diff: Option<f64>,
    pub tipped_social: bool,
    pub error: Option<String>,
}

/// Runs the pair at each `beta` and reports where the modified run ends up.
pub fn social_trigger_experiment(
    params: &ModelParams,
    series: &EmissionSeries,
    beta_values: &[f64],
    workers: usize,
) -> Vec<SocialTriggerRecord> {
    parallel_map(beta_values.len(), workers, |k| {
        let beta = beta_values[k];
        let mut p = *params;
        p.social.beta = beta;
        let outcome = run_pair(&p, series).and_then(|(base, modified)| {
            let auc = auc_difference(&modified, &base)
                .map_err(|e| SimulationError::Schedule(e.to_string()))?;
            Ok((modified.last().social.x, auc))
        });
        match outcome {
            Ok((x, auc)) => SocialTriggerRecord {
                beta,
                final_x: Some(x),
                auc_diff: Some(auc),
                tipped_social: x > SOCIAL_TIP_CUTOFF,
                error: None,
            },
            Err(e) => SocialTriggerRecord {
                beta,
                final_x: None,
                auc_diff: None,
                tipped_social: false,
                error: Some(e.to_string()),
            },
        }
    })
}

/// Betas at which the population tips although a smaller beta earlier in
/// the scan did not. An empty result means the classification is monotone.
pub fn monotonicity_violations(records: &[SocialTriggerRecord]) -> Vec<f64> {
    let mut sorted: Vec<&SocialTriggerRecord> =
        records.iter().filter(|r| r.error.is_none()).collect();
    sorted.sort_by(|a, b| a.beta.total_cmp(&b.beta));
    let mut seen_untipped = false;
    let mut out = Vec::new();
    for r in sorted {
        if r.tipped_social && seen_untipped {
            out.push(r.beta);
        }
        seen_untipped |= !r.tipped_social;
    }
    out
}

fn tipped_social(
    params: &ModelParams,
    series: &EmissionSeries,
    beta: f64,
) -> Result<bool, CoupledError> {
    let mut p = *params;
    p.social.beta = beta;
    let traj = simulate(&p, series, Variant::Modified)?;
    Ok(traj.last().social.x > SOCIAL_TIP_CUTOFF)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaThreshold {
    /// Midpoint of the final bracket.
    #[serde(serialize_with = "ser_g17")]
    pub beta_star: f64,
    #[serde(serialize_with = "ser_g17")]
    pub lo: f64,
    #[serde(serialize_with = "ser_g17")]
    pub hi: f64,
    /// Modified-model runs performed, including the two bracket checks.
    pub evaluations: usize,
}

/// Bisects the social-tip classification boundary in beta until the
/// bracket is no wider than `tol`.
pub fn beta_threshold(
    params: &ModelParams,
    series: &EmissionSeries,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<BetaThreshold, CoupledError> {
    if !(tol > 0.0) {
        return Err(CoupledError::Tolerance(tol));
    }
    let (mut lo, mut hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let at_lo = tipped_social(params, series, lo)?;
    let at_hi = tipped_social(params, series, hi)?;
    let mut evaluations = 2;
    if at_lo == at_hi {
        return Err(CoupledError::Bracket {
            lo,
            hi,
            tipped: at_lo,
        });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        evaluations += 1;
        if tipped_social(params, series, mid)? == at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(BetaThreshold {
        beta_star: 0.5 * (lo + hi),
        lo,
        hi,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(beta: f64, tipped: bool) -> SocialTriggerRecord {
        SocialTriggerRecord {
            beta,
            final_x: Some(if tipped { 1.0 } else { 0.0 }),
            auc_diff: Some(0.0),
            tipped_social: tipped,
            error: None,
        }
    }

    #[test]
    fn monotone_scan_has_no_violations() {
        let recs = vec![
            rec(0.0, true),
            rec(1.0, true),
            rec(2.0, false),
            rec(3.0, false),
        ];
        assert!(monotonicity_violations(&recs).is_empty());
    }

    #[test]
    fn violations_are_reported() {
        let recs = vec![rec(2.0, false), rec(0.0, true), rec(3.0, true)];
        assert_eq!(monotonicity_violations(&recs), vec![3.0]);
    }

    #[test]
    fn rejects_nonpositive_tolerance() {
        let p = ModelParams::default();
        let s = EmissionSeries::bundled();
        assert_eq!(
            beta_threshold(&p, &s, 0.0, 1.0, 0.0),
            Err(CoupledError::Tolerance(0.0))
        );
    }
}
