//! Distribution discrepancies: the f-divergence family, total variation,
//! discriminator-class (integral probability metric) distances, Wasserstein-1,
//! empirical Rademacher complexity, and the compatible coefficient.
//!
//! All of them operate on finite distributions, so suprema are enumerations
//! or small LPs and every value is exact up to solver precision. `+inf` is a
//! first-class divergence value, not an error.

mod discriminator;
mod transport;

pub use discriminator::{
    compatible_coefficient, empirical_rademacher, estm_confidence_term, estm_term,
    estm_term_detailed, nn_distance, DiscriminatorClass, EstmBreakdown, RademacherEstimate,
    RademacherMode, SpanCertificate,
};
pub use transport::{wasserstein_1, MetricTable, Wasserstein1};

use serde::{Deserialize, Serialize};

use crate::mdp::{state_occupancy, Policy, TabularMdp};
use crate::{Error, Result};

/// The divergence family used by the bound checks. TV is the bridging metric
/// the value-gap lemmas run through; the rest follow the standard integrand
/// table with natural logarithms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FDivKind {
    Kl,
    ReverseKl,
    PearsonChi2,
    Js,
    SquaredHellinger,
    Tv,
}

impl FDivKind {
    pub const ALL: [FDivKind; 6] = [
        FDivKind::Kl,
        FDivKind::ReverseKl,
        FDivKind::PearsonChi2,
        FDivKind::Js,
        FDivKind::SquaredHellinger,
        FDivKind::Tv,
    ];

    /// The five kinds with per-divergence value-gap constants.
    pub const GAP_KINDS: [FDivKind; 5] = [
        FDivKind::Js,
        FDivKind::Kl,
        FDivKind::ReverseKl,
        FDivKind::PearsonChi2,
        FDivKind::SquaredHellinger,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            FDivKind::Kl => "KL",
            FDivKind::ReverseKl => "ReverseKL",
            FDivKind::PearsonChi2 => "PearsonChi2",
            FDivKind::Js => "JS",
            FDivKind::SquaredHellinger => "SquaredHellinger",
            FDivKind::Tv => "TV",
        }
    }
}

impl std::fmt::Display for FDivKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

fn check_same_len(mu: &[f64], nu: &[f64]) -> Result<()> {
    if mu.len() != nu.len() {
        return Err(Error::ShapeMismatch(format!(
            "distributions have {} and {} entries",
            mu.len(),
            nu.len()
        )));
    }
    Ok(())
}

/// `sum_x mu(x) ln(mu(x)/nu(x))` with `0 ln 0 = 0` and `0 ln(0/0) = 0`;
/// `+inf` where `mu > 0` on a `nu`-null point.
///
/// Summed in the generalized form `m ln(m/n) - m + n`, whose terms are
/// individually nonnegative and which coincides with KL on normalized
/// inputs; with `ln_1p` this keeps divergences near the rounding floor
/// from being cancelled away (or driven negative) by the linear parts.
pub(crate) fn kl(mu: &[f64], nu: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&m, &n) in mu.iter().zip(nu) {
        if m == 0.0 {
            total += n;
            continue;
        }
        if n == 0.0 {
            return f64::INFINITY;
        }
        let d = m - n;
        total += m * (d / n).ln_1p() - d;
    }
    total.max(0.0)
}

pub(crate) fn total_variation(mu: &[f64], nu: &[f64]) -> f64 {
    0.5 * mu.iter().zip(nu).map(|(m, n)| (m - n).abs()).sum::<f64>()
}

/// Jensen-Shannon divergence in nats: `(KL(mu, avg) + KL(nu, avg)) / 2`,
/// with `ln(2m/(m+n))` evaluated as `ln_1p((m-n)/(m+n))` for accuracy near
/// equal distributions.
pub(crate) fn jensen_shannon(mu: &[f64], nu: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&m, &n) in mu.iter().zip(nu) {
        if m > 0.0 {
            total += 0.5 * m * ((m - n) / (m + n)).ln_1p();
        }
        if n > 0.0 {
            total += 0.5 * n * ((n - m) / (m + n)).ln_1p();
        }
    }
    total.max(0.0)
}

/// Evaluate one divergence between two distributions on the same space.
pub fn f_divergence(kind: FDivKind, mu: &[f64], nu: &[f64]) -> Result<f64> {
    check_same_len(mu, nu)?;
    let value = match kind {
        FDivKind::Kl => kl(mu, nu),
        FDivKind::ReverseKl => kl(nu, mu),
        FDivKind::PearsonChi2 => {
            let mut total = 0.0;
            for (&m, &n) in mu.iter().zip(nu) {
                if m == 0.0 {
                    if n == 0.0 {
                        continue;
                    }
                    return Ok(f64::INFINITY);
                }
                let diff = m - n;
                total += diff * diff / m;
            }
            total
        }
        FDivKind::Js => jensen_shannon(mu, nu),
        FDivKind::SquaredHellinger => mu
            .iter()
            .zip(nu)
            .map(|(&m, &n)| {
                let diff = m.sqrt() - n.sqrt();
                diff * diff
            })
            .sum(),
        FDivKind::Tv => total_variation(mu, nu),
    };
    Ok(value)
}

/// `E_{s ~ d_weighting}[D_kind(pi_ref(.|s), pi(.|s))]`, with the weighting
/// policy's exact state occupancy. Zero-mass states contribute nothing even
/// when their per-state divergence is infinite.
pub fn expected_policy_divergence(
    kind: FDivKind,
    mdp: &TabularMdp,
    pi_ref: &Policy,
    pi: &Policy,
    weighting: &Policy,
) -> Result<f64> {
    if pi_ref.table().dim() != pi.table().dim() {
        return Err(Error::ShapeMismatch("policy tables differ in shape".into()));
    }
    let d = state_occupancy(mdp, weighting)?;
    let mut total = 0.0;
    for s in 0..pi.n_states() {
        let w = d[s];
        if w == 0.0 {
            continue;
        }
        let per_state = f_divergence(
            kind,
            pi_ref.row(s).as_slice().expect("layout"),
            pi.row(s).as_slice().expect("layout"),
        )?;
        if per_state.is_infinite() {
            return Ok(f64::INFINITY);
        }
        total += w * per_state;
    }
    Ok(total)
}

/// `max_s D_kind(pi(.|s), pi_ref(.|s))` over all states.
pub fn max_policy_divergence(kind: FDivKind, pi: &Policy, pi_ref: &Policy) -> Result<f64> {
    if pi_ref.table().dim() != pi.table().dim() {
        return Err(Error::ShapeMismatch("policy tables differ in shape".into()));
    }
    let mut worst: f64 = 0.0;
    for s in 0..pi.n_states() {
        let per_state = f_divergence(
            kind,
            pi.row(s).as_slice().expect("layout"),
            pi_ref.row(s).as_slice().expect("layout"),
        )?;
        worst = worst.max(per_state);
        if worst.is_infinite() {
            break;
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::worstcase;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identical_distributions_have_zero_divergence() {
        let p = [0.2, 0.5, 0.3];
        for kind in FDivKind::ALL {
            assert_abs_diff_eq!(f_divergence(kind, &p, &p).unwrap(), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn kl_of_expert_vs_imitator_rows() {
        // 0.9 ln(18/17) + 0.1 ln(2/3)
        let v = f_divergence(FDivKind::Kl, &[0.9, 0.1], &[0.85, 0.15]).unwrap();
        let direct = 0.9 * (18.0_f64 / 17.0).ln() + 0.1 * (2.0_f64 / 3.0).ln();
        assert_abs_diff_eq!(v, direct, epsilon = 1e-15);
        assert_abs_diff_eq!(v, 0.0108961, epsilon = 1e-6);
    }

    #[test]
    fn js_of_disjoint_point_masses_is_ln_two() {
        let v = f_divergence(FDivKind::Js, &[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_abs_diff_eq!(v, std::f64::consts::LN_2, epsilon = 1e-15);
    }

    #[test]
    fn support_violations_yield_infinity() {
        let mu = [0.5, 0.5];
        let nu = [1.0, 0.0];
        assert!(f_divergence(FDivKind::Kl, &mu, &nu).unwrap().is_infinite());
        assert!(f_divergence(FDivKind::ReverseKl, &nu, &mu)
            .unwrap()
            .is_infinite());
        assert!(f_divergence(FDivKind::PearsonChi2, &nu, &mu)
            .unwrap()
            .is_infinite());
        // JS, Hellinger, TV stay finite.
        assert!(f_divergence(FDivKind::Js, &mu, &nu).unwrap().is_finite());
        assert!(f_divergence(FDivKind::SquaredHellinger, &mu, &nu)
            .unwrap()
            .is_finite());
    }

    #[test]
    fn expected_divergence_of_identical_policies_is_zero() {
        let hard = worstcase::hard_instance(0.9).unwrap();
        let v = expected_policy_divergence(
            FDivKind::Kl,
            &hard.mdp,
            &hard.pi_e,
            &hard.pi_e,
            &hard.pi_e,
        )
        .unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn expected_kl_on_hard_instance_matches_closed_form() {
        let hard = worstcase::hard_instance(0.9).unwrap();
        let v = expected_policy_divergence(
            FDivKind::Kl,
            &hard.mdp,
            &hard.pi_e,
            &hard.pi_i,
            &hard.pi_e,
        )
        .unwrap();
        let kappa = 0.9 * (18.0_f64 / 17.0).ln() + 0.1 * (2.0_f64 / 3.0).ln();
        assert_abs_diff_eq!(v, 0.1 * kappa, epsilon = 1e-8);
        assert_abs_diff_eq!(v, 0.00108961, epsilon = 1e-8);
    }

    #[test]
    fn tv_of_deterministic_policies_is_disagreement_mass() {
        let hard = worstcase::hard_instance(0.9).unwrap();
        let pi_a = crate::mdp::Policy::deterministic(&[0, 0, 0], 2).unwrap();
        let pi_b = crate::mdp::Policy::deterministic(&[1, 0, 0], 2).unwrap();
        let v =
            expected_policy_divergence(FDivKind::Tv, &hard.mdp, &pi_a, &pi_b, &hard.pi_e).unwrap();
        // They disagree only at s0, which has weight 1 - gamma under d_E.
        assert_abs_diff_eq!(v, 1.0 - 0.9, epsilon = 1e-12);
    }

    #[test]
    fn max_dominates_expected_divergence() {
        let hard = worstcase::hard_instance(0.7).unwrap();
        let max = max_policy_divergence(FDivKind::Kl, &hard.pi_e, &hard.pi_i).unwrap();
        let mean = expected_policy_divergence(
            FDivKind::Kl,
            &hard.mdp,
            &hard.pi_e,
            &hard.pi_i,
            &hard.pi_e,
        )
        .unwrap();
        assert!(max + 1e-15 >= mean);
    }

    #[test]
    fn single_state_max_divergence_equals_row_divergence() {
        let pi = crate::mdp::Policy::new(ndarray::arr2(&[[0.7, 0.3]])).unwrap();
        let pi_ref = crate::mdp::Policy::new(ndarray::arr2(&[[0.4, 0.6]])).unwrap();
        let v = max_policy_divergence(FDivKind::Js, &pi, &pi_ref).unwrap();
        let row = f_divergence(FDivKind::Js, &[0.7, 0.3], &[0.4, 0.6]).unwrap();
        assert_eq!(v, row);
    }
}
