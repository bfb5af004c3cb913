//! Imitation dynamics of the mitigator fraction and the equilibrium
//! structure of the social model.

use serde::Serialize;

use crate::config::SocialParams;
use crate::numfmt::ser_g17;

/// Fraction of the population that mitigates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct SocialState {
    #[serde(serialize_with = "ser_g17")]
    pub x: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Stable,
    Unstable,
    /// Linearisation vanishes: an interior point has merged with a boundary.
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Equilibrium {
    #[serde(serialize_with = "ser_g17")]
    pub x_star: f64,
    pub stability: Stability,
}

/// Fixed points of `dx/dt = x(1-x)(psi + delta(2x-1))` with their stability.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumReport {
    #[serde(serialize_with = "ser_g17")]
    pub psi: f64,
    #[serde(serialize_with = "ser_g17")]
    pub delta: f64,
    pub points: Vec<Equilibrium>,
}

impl EquilibriumReport {
    pub fn stable_points(&self) -> impl Iterator<Item = f64> + '_ {
        self.points
            .iter()
            .filter(|e| e.stability == Stability::Stable)
            .map(|e| e.x_star)
    }

    pub fn interior(&self) -> Option<&Equilibrium> {
        self.points
            .iter()
            .find(|e| e.x_star > 0.0 && e.x_star < 1.0)
    }
}

/// Perceived cost of warming at anomaly `t`.
pub fn warming_cost(t: f64, social: &SocialParams) -> f64 {
    social.f_max / (1.0 + (-social.omega * (t - social.t_lim)).exp())
}

/// Net incentive to mitigate, ignoring social norms.
pub fn psi(beta: f64, t: f64, social: &SocialParams) -> f64 {
    -beta + warming_cost(t, social)
}

pub fn social_derivative(x: f64, t: f64, social: &SocialParams) -> f64 {
    let drive = psi(social.beta, t, social) + social.delta * (2.0 * x - 1.0);
    social.kappa * x * (1.0 - x) * drive
}

/// Equilibria and their stability for a given `psi` and `delta >= 0`.
///
/// The boundary eigenvalues are `psi - delta` at `x = 0` and
/// `-(psi + delta)` at `x = 1`; a zero eigenvalue is reported as
/// [`Stability::Degenerate`]. The interior point exists for
/// `-delta < psi < delta` and is always a repeller.
pub fn equilibria(psi: f64, delta: f64) -> EquilibriumReport {
    let classify = |eig: f64| {
        if eig < 0.0 {
            Stability::Stable
        } else if eig > 0.0 {
            Stability::Unstable
        } else {
            Stability::Degenerate
        }
    };

    let mut points = vec![Equilibrium {
        x_star: 0.0,
        stability: classify(psi - delta),
    }];
    if delta > 0.0 && -delta < psi && psi < delta {
        points.push(Equilibrium {
            x_star: (delta - psi) / (2.0 * delta),
            stability: Stability::Unstable,
        });
    }
    points.push(Equilibrium {
        x_star: 1.0,
        stability: classify(-(psi + delta)),
    });
    EquilibriumReport { psi, delta, points }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn defaults() -> SocialParams {
        SocialParams::default()
    }

    #[test]
    fn warming_cost_values() {
        let s = defaults();
        assert!((warming_cost(s.t_lim, &s) - 2.5).abs() < 1e-12);
        assert!((warming_cost(1e3, &s) - 5.0).abs() < 1e-12);
        // 5 / (1 + e^4.5)
        assert!((warming_cost(0.0, &s) - 0.0549).abs() < 1e-4);
    }

    #[test]
    fn social_derivative_values() {
        let s = SocialParams {
            kappa: 0.1,
            beta: 1.0,
            delta: 0.7,
            ..defaults()
        };
        assert_eq!(social_derivative(0.0, 2.0, &s), 0.0);
        assert_eq!(social_derivative(1.0, 2.0, &s), 0.0);
        // warming_cost(T_lim) = 2.5: 0.1 * 0.25 * 1.5
        assert!((social_derivative(0.5, s.t_lim, &s) - 0.0375).abs() < 1e-12);
    }

    #[test]
    fn psi_values() {
        let s = defaults();
        assert!(psi(warming_cost(0.7, &s), 0.7, &s).abs() < 1e-15);
        assert!((psi(1.0, s.t_lim, &s) - 1.5).abs() < 1e-12);
        assert!((psi(5.0, -1e3, &s) + 5.0).abs() < 1e-12);
    }

    fn stabilities(r: &EquilibriumReport) -> Vec<(f64, Stability)> {
        r.points.iter().map(|e| (e.x_star, e.stability)).collect()
    }

    #[test]
    fn symmetric_bistability() {
        let r = equilibria(0.0, 1.0);
        assert_eq!(
            stabilities(&r),
            vec![
                (0.0, Stability::Stable),
                (0.5, Stability::Unstable),
                (1.0, Stability::Stable)
            ]
        );
    }

    #[test]
    fn high_psi_destabilises_zero() {
        let r = equilibria(2.0, 1.0);
        assert_eq!(
            stabilities(&r),
            vec![(0.0, Stability::Unstable), (1.0, Stability::Stable)]
        );
    }

    #[test]
    fn low_psi_destabilises_one() {
        let r = equilibria(-2.0, 1.0);
        assert_eq!(
            stabilities(&r),
            vec![(0.0, Stability::Stable), (1.0, Stability::Unstable)]
        );
    }

    #[test]
    fn degenerate_boundaries() {
        let r = equilibria(1.0, 1.0);
        assert_eq!(
            stabilities(&r),
            vec![(0.0, Stability::Degenerate), (1.0, Stability::Stable)]
        );
        let r = equilibria(-1.0, 1.0);
        assert_eq!(
            stabilities(&r),
            vec![(0.0, Stability::Stable), (1.0, Stability::Degenerate)]
        );
    }

    #[test]
    fn no_norms_means_no_interior_point() {
        let r = equilibria(0.5, 0.0);
        assert_eq!(r.points.len(), 2);
        assert!(r.interior().is_none());
    }

    proptest! {
        #[test]
        fn report_invariants(psi in -5.0..5.0f64, delta in 0.0..4.0f64) {
            let r = equilibria(psi, delta);
            prop_assert_eq!(r.points.first().unwrap().x_star, 0.0);
            prop_assert_eq!(r.points.last().unwrap().x_star, 1.0);
            let interior_expected = delta > 0.0 && -delta < psi && psi < delta;
            prop_assert_eq!(r.interior().is_some(), interior_expected);
            for e in &r.points {
                prop_assert!((0.0..=1.0).contains(&e.x_star));
            }
            if let Some(e) = r.interior() {
                let s = SocialParams { kappa: 1.0, beta: -psi, delta, f_max: 0.0, ..SocialParams::default() };
                prop_assert!(social_derivative(e.x_star, 0.0, &s).abs() < 1e-12);
            }
        }

        #[test]
        fn derivative_sign_structure(x in 0.001..0.999f64, t in -3.0..8.0f64, beta in -1.0..3.0f64, delta in 0.0..3.0f64, kappa in 0.001..0.5f64) {
            let s = SocialParams { kappa, beta, delta, ..SocialParams::default() };
            let drive = psi(beta, t, &s) + delta * (2.0 * x - 1.0);
            let d = social_derivative(x, t, &s);
            prop_assert!(d == 0.0 || d.signum() == drive.signum());
        }

        #[test]
        fn forward_euler_step_stays_in_unit_interval(x in 0.0..=1.0f64, t in -3.0..8.0f64, beta in 0.0..2.0f64, delta in 0.0..3.0f64, kappa in 0.001..0.2f64, frac in 0.0..1.0f64) {
            let s = SocialParams { kappa, beta, delta, ..SocialParams::default() };
            let h = frac / (kappa * (s.f_max + beta + delta) + 1e-12);
            let next = x + h * social_derivative(x, t, &s);
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&next));
        }
    }
}
