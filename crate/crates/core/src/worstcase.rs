//! The three-state worst-case instance certifying that the quadratic
//! horizon factor in the cloning value-gap bound cannot be improved.
//!
//! From the start state, one action leads to a +1 absorbing state and the
//! other to a -1 absorbing state. A 0.9/0.1 expert against a 0.85/0.15
//! imitator gives closed-form values, so the gap-to-error ratio is an exact
//! function of the discount.

use ndarray::{Array1, Array2, Array3};

use crate::mdp::{Policy, TabularMdp};
use crate::{Error, Result};

/// The worst-case MDP together with its expert and imitator policies.
#[derive(Debug, Clone)]
pub struct HardInstance {
    pub mdp: TabularMdp,
    pub pi_e: Policy,
    pub pi_i: Policy,
    pub gamma: f64,
}

/// Closed-form values on the hard instance.
#[derive(Debug, Clone, Copy)]
pub struct ClosedForms {
    pub v_e: f64,
    pub v_i: f64,
    pub gap: f64,
    pub epsilon: f64,
}

/// `KL((0.9, 0.1), (0.85, 0.15))`, the per-decision error constant.
pub fn kl_constant() -> f64 {
    0.9 * (0.9_f64 / 0.85).ln() + 0.1 * (0.1_f64 / 0.15).ln()
}

/// Build the hard instance at a given discount. `R_max = 1`.
pub fn hard_instance(gamma: f64) -> Result<HardInstance> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::InvalidParameter(format!(
            "gamma must lie in [0, 1), got {gamma}"
        )));
    }
    let mut transition = Array3::zeros((3, 2, 3));
    // Start state: action 0 reaches the +1 state, action 1 the -1 state.
    transition[[0, 0, 1]] = 1.0;
    transition[[0, 1, 2]] = 1.0;
    // Both sinks absorb under either action.
    for a in 0..2 {
        transition[[1, a, 1]] = 1.0;
        transition[[2, a, 2]] = 1.0;
    }
    let mut reward = Array2::zeros((3, 2));
    for a in 0..2 {
        reward[[1, a]] = 1.0;
        reward[[2, a]] = -1.0;
    }
    let mdp = TabularMdp::new(
        transition,
        reward,
        1.0,
        gamma,
        Array1::from_vec(vec![1.0, 0.0, 0.0]),
    )?;
    // The sink rows are shared by both policies so the only decision, and
    // the only divergence, is at the start state.
    let pi_e = Policy::new(ndarray::arr2(&[[0.9, 0.1], [0.5, 0.5], [0.5, 0.5]]))?;
    let pi_i = Policy::new(ndarray::arr2(&[[0.85, 0.15], [0.5, 0.5], [0.5, 0.5]]))?;
    Ok(HardInstance {
        mdp,
        pi_e,
        pi_i,
        gamma,
    })
}

/// Closed-form expert/imitator values, their gap, and the expected
/// per-decision KL under the expert's state distribution.
pub fn closed_forms(gamma: f64) -> Result<ClosedForms> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::InvalidParameter(format!(
            "gamma must lie in [0, 1), got {gamma}"
        )));
    }
    Ok(ClosedForms {
        v_e: 4.0 * gamma / (5.0 * (1.0 - gamma)),
        v_i: 7.0 * gamma / (10.0 * (1.0 - gamma)),
        gap: gamma / (10.0 * (1.0 - gamma)),
        epsilon: (1.0 - gamma) * kl_constant(),
    })
}

/// `gap * (1 - gamma)^2 / epsilon`, which reduces to `gamma / (10 kappa)`:
/// the gap carries the full squared-horizon factor, so the ratio has no
/// residual discount dependence beyond the linear `gamma`.
pub fn tightness_ratio(gamma: f64) -> Result<f64> {
    if gamma <= 0.0 || gamma >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "tightness ratio needs gamma in (0, 1), got {gamma}"
        )));
    }
    let forms = closed_forms(gamma)?;
    Ok(forms.gap * (1.0 - gamma).powi(2) / forms.epsilon)
}

/// Discount sweep in CSV form:
/// `gamma, v_e, v_i, gap, epsilon, thm1_rhs, ratio` (ratio empty at zero).
pub fn sweep_csv(gammas: &[f64]) -> Result<String> {
    let mut out = String::from("gamma,v_e,v_i,gap,epsilon,thm1_rhs,ratio\n");
    for &gamma in gammas {
        let f = closed_forms(gamma)?;
        let rhs = crate::bounds::thm1_rhs(1.0, gamma, f.epsilon);
        let ratio = if gamma > 0.0 {
            format!("{}", tightness_ratio(gamma)?)
        } else {
            String::new()
        };
        out.push_str(&format!(
            "{gamma},{},{},{},{},{rhs},{ratio}\n",
            f.v_e, f.v_i, f.gap, f.epsilon
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{policy_value, state_occupancy};
    use approx::assert_abs_diff_eq;

    #[test]
    fn expert_state_distribution_matches_closed_form() {
        for gamma in [0.0, 0.5, 0.9, 0.99, 0.999] {
            let hard = hard_instance(gamma).unwrap();
            let d = state_occupancy(&hard.mdp, &hard.pi_e).unwrap();
            assert_abs_diff_eq!(d[0], 1.0 - gamma, epsilon = 1e-12);
            assert_abs_diff_eq!(d[1], 0.9 * gamma, epsilon = 1e-12);
            assert_abs_diff_eq!(d[2], 0.1 * gamma, epsilon = 1e-12);
        }
    }

    #[test]
    fn absorbing_rows_are_identity() {
        let hard = hard_instance(0.9).unwrap();
        assert_eq!(hard.mdp.transition()[[1, 0, 1]], 1.0);
        assert_eq!(hard.mdp.transition()[[1, 1, 1]], 1.0);
        assert_eq!(hard.mdp.transition()[[2, 0, 2]], 1.0);
        assert_eq!(hard.mdp.transition()[[2, 1, 2]], 1.0);
    }

    #[test]
    fn closed_forms_at_nine_tenths() {
        let f = closed_forms(0.9).unwrap();
        assert_abs_diff_eq!(f.v_e, 7.2, epsilon = 1e-12);
        assert_abs_diff_eq!(f.v_i, 6.3, epsilon = 1e-12);
        assert_abs_diff_eq!(f.gap, 0.9, epsilon = 1e-12);
        assert_abs_diff_eq!(f.epsilon, 0.00108961, epsilon = 1e-7);
    }

    #[test]
    fn closed_forms_vanish_at_gamma_zero() {
        let f = closed_forms(0.0).unwrap();
        assert_eq!(f.v_e, 0.0);
        assert_eq!(f.v_i, 0.0);
        assert_eq!(f.gap, 0.0);
        let hard = hard_instance(0.0).unwrap();
        assert_eq!(policy_value(&hard.mdp, &hard.pi_e).unwrap(), 0.0);
    }

    #[test]
    fn engine_values_match_closed_forms_across_gammas() {
        for gamma in [0.0, 0.5, 0.9, 0.99, 0.999] {
            let hard = hard_instance(gamma).unwrap();
            let f = closed_forms(gamma).unwrap();
            let v_e = policy_value(&hard.mdp, &hard.pi_e).unwrap();
            let v_i = policy_value(&hard.mdp, &hard.pi_i).unwrap();
            assert_abs_diff_eq!(v_e, f.v_e, epsilon = 1e-10);
            assert_abs_diff_eq!(v_i, f.v_i, epsilon = 1e-10);
        }
    }

    #[test]
    fn tightness_ratio_values() {
        assert_abs_diff_eq!(
            tightness_ratio(0.9).unwrap(),
            0.9 / (10.0 * kl_constant()),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(tightness_ratio(0.9).unwrap(), 8.260, epsilon = 1e-3);
        assert_abs_diff_eq!(tightness_ratio(0.99).unwrap(), 9.0858, epsilon = 1e-3);
    }

    #[test]
    fn tightness_ratio_over_gamma_is_constant() {
        let base = tightness_ratio(0.5).unwrap() / 0.5;
        for gamma in [0.9, 0.99, 0.999] {
            let r = tightness_ratio(gamma).unwrap() / gamma;
            assert_abs_diff_eq!(r, base, epsilon = 1e-9);
        }
    }

    #[test]
    fn tightness_ratio_rejects_gamma_zero() {
        assert!(tightness_ratio(0.0).is_err());
    }

    #[test]
    fn rounded_kl_figure_is_close() {
        assert!((kl_constant() - 0.011).abs() < 2e-4);
    }

    #[test]
    fn quadratic_bound_holds_with_positive_slack_on_grid() {
        // The bound pays a sqrt on the error, so it is strictly loose here.
        for gamma in [0.0, 0.5, 0.9, 0.99, 0.999] {
            let hard = hard_instance(gamma).unwrap();
            let report = crate::bounds::check_thm1(&hard.mdp, &hard.pi_e, &hard.pi_i).unwrap();
            assert!(report.holds);
            assert!(report.slack > 0.0, "slack {} at gamma {gamma}", report.slack);
        }
    }
}
