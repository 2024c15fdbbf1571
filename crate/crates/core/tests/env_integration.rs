//! Environment-learning checks: gradient oracle on the dual construction,
//! realizable convergence, maximum-likelihood optimality, and the
//! alternating learner's iterate validity.

mod common;

use approx::assert_abs_diff_eq;
use imlab_core::divergences::DiscriminatorClass;
use imlab_core::env_learning::{
    bc_env_fit, gail_env_fit, joint_distribution, model_kl_error, EnvFitMode, LearnedModel,
};
use imlab_core::imitators::js_occupancy_gradient;
use imlab_core::lab::{derive_seed, random_mdp_with_gamma, random_policy, MdpFamily};
use imlab_core::mdp::{dual_mdp, sample_occupancy, state_action_occupancy};
use ndarray::Array2;

fn family(n_states: usize, n_actions: usize, gamma: f64) -> MdpFamily {
    MdpFamily {
        n_states,
        n_actions,
        gammas: vec![gamma],
        dirichlet_alpha: 1.0,
        reward_scale: 1.0,
    }
}

#[test]
fn env_gradient_matches_finite_differences_on_dual() {
    // The model learner descends dual-policy logits; check that gradient
    // against central finite differences of the same objective.
    for trial in 0..50u64 {
        let seed = derive_seed(0xE5D, trial);
        let gamma = [0.5, 0.8, 0.9][trial as usize % 3];
        let mdp = random_mdp_with_gamma(&family(3, 2, gamma), gamma, seed).unwrap();
        let pi_d = random_policy(3, 2, 1.0, derive_seed(seed, 1));
        let dual = dual_mdp(&mdp, &pi_d).unwrap();
        let truth = LearnedModel::from_mdp(&mdp).to_dual_policy();
        let target = state_action_occupancy(&dual, &truth).unwrap().rho;

        let other = random_mdp_with_gamma(&family(3, 2, gamma), gamma, derive_seed(seed, 2))
            .unwrap();
        let at = LearnedModel::from_mdp(&other).to_dual_policy();

        let analytic = js_occupancy_gradient(&dual, &at, &target).unwrap();
        let numeric = common::fd_js_logit_gradient(&dual, &target, &at, 1e-5);
        for (a, b) in analytic.iter().zip(numeric.iter()) {
            assert!(
                (a - b).abs() <= 1e-5,
                "trial {trial}: analytic {a} vs numeric {b}"
            );
        }
    }
}

#[test]
fn direct_js_converges_on_realizable_four_state_instance() {
    let mdp = random_mdp_with_gamma(&family(4, 2, 0.9), 0.9, 2024).unwrap();
    let pi_d = random_policy(4, 2, 1.0, 55);
    let fit = gail_env_fit(
        &mdp,
        &pi_d,
        EnvFitMode::DirectJs {
            steps: 5000,
            step_size: 4.0,
            seed: 0,
        },
        None,
    )
    .unwrap();
    assert!(fit.js <= 1e-5, "joint JS {} above 1e-5", fit.js);
}

#[test]
fn direct_js_never_returns_worse_than_initialization() {
    for trial in 0..20u64 {
        let seed = derive_seed(0xE22, trial);
        let mdp = random_mdp_with_gamma(&family(4, 2, 0.9), 0.9, seed).unwrap();
        let pi_d = random_policy(4, 2, 1.0, derive_seed(seed, 1));
        let other =
            random_mdp_with_gamma(&family(4, 2, 0.9), 0.9, derive_seed(seed, 2)).unwrap();
        let init = LearnedModel::from_mdp(&other);
        let init_js = {
            let mu_star =
                joint_distribution(&LearnedModel::from_mdp(&mdp), &mdp, &pi_d).unwrap();
            let mu_init = joint_distribution(&init, &mdp, &pi_d).unwrap();
            imlab_core::divergences::f_divergence(
                imlab_core::divergences::FDivKind::Js,
                &mu_star.flat(),
                &mu_init.flat(),
            )
            .unwrap()
        };
        let fit = gail_env_fit(
            &mdp,
            &pi_d,
            EnvFitMode::DirectJs {
                steps: 40,
                step_size: 2.0,
                seed: 0,
            },
            Some(&init),
        )
        .unwrap();
        assert!(fit.js <= init_js + 1e-12);
    }
}

#[test]
fn bc_env_fit_minimizes_empirical_prediction_loss() {
    // Probe-perturbation check of one-step maximum likelihood.
    let mdp = random_mdp_with_gamma(&family(4, 2, 0.9), 0.9, 31).unwrap();
    let pi_d = random_policy(4, 2, 1.0, 32);
    let demos = sample_occupancy(&mdp, &pi_d, 600, 33).unwrap();
    let fit = bc_env_fit(&demos).unwrap();
    let triples = demos.triples.as_ref().unwrap();
    let objective = |model: &LearnedModel| -> f64 {
        triples
            .iter()
            .map(|&(s, a, s2)| -model.transition()[[s, a, s2]].max(1e-300).ln())
            .sum::<f64>()
            / triples.len() as f64
    };
    let base = objective(&fit);
    let mut rng = common::rng(12);
    use rand::Rng;
    for _ in 0..5_000 {
        let mut t = fit.transition().clone();
        for v in t.iter_mut() {
            *v = (*v + rng.random_range(0.0..0.2)).max(1e-9);
        }
        for s in 0..4 {
            for a in 0..2 {
                let mut row = t.slice_mut(ndarray::s![s, a, ..]);
                let sum = row.sum();
                row.mapv_inplace(|v| v / sum);
            }
        }
        let candidate = LearnedModel::new(t).unwrap();
        assert!(objective(&candidate) + 1e-12 >= base);
    }
}

#[test]
fn model_kl_error_matches_direct_summation() {
    for trial in 0..50u64 {
        let seed = derive_seed(0x3E1, trial);
        let mdp = random_mdp_with_gamma(&family(5, 2, 0.9), 0.9, seed).unwrap();
        let other =
            random_mdp_with_gamma(&family(5, 2, 0.9), 0.9, derive_seed(seed, 1)).unwrap();
        let model = LearnedModel::from_mdp(&other);
        let pi_d = random_policy(5, 2, 1.0, derive_seed(seed, 2));
        let value = model_kl_error(&mdp, &model, &pi_d).unwrap();

        let occ = state_action_occupancy(&mdp, &pi_d).unwrap();
        let mut direct = 0.0;
        for s in 0..5 {
            for a in 0..2 {
                let mut kl = 0.0;
                for s2 in 0..5 {
                    let p = mdp.transition()[[s, a, s2]];
                    if p > 0.0 {
                        kl += p * (p / model.transition()[[s, a, s2]]).ln();
                    }
                }
                direct += occ.rho[[s, a]] * kl;
            }
        }
        assert_abs_diff_eq!(value, direct, epsilon = 1e-10);
    }
}

#[test]
fn alternating_learner_improves_and_keeps_models_valid() {
    let mdp = random_mdp_with_gamma(&family(3, 2, 0.9), 0.9, 420).unwrap();
    let pi_d = random_policy(3, 2, 1.0, 43);
    let class = DiscriminatorClass::random_bounded(3 * 2 * 3, 1.0, 15, 44);
    let init = LearnedModel::uniform(3, 2);
    let init_js = {
        let mu_star = joint_distribution(&LearnedModel::from_mdp(&mdp), &mdp, &pi_d).unwrap();
        let mu_init = joint_distribution(&init, &mdp, &pi_d).unwrap();
        imlab_core::divergences::f_divergence(
            imlab_core::divergences::FDivKind::Js,
            &mu_star.flat(),
            &mu_init.flat(),
        )
        .unwrap()
    };
    let fit = gail_env_fit(
        &mdp,
        &pi_d,
        EnvFitMode::Alternating {
            class,
            outer: 25,
            model_iters: 2,
            disc_iters: 1,
            batch: 400,
            seed: 45,
        },
        Some(&init),
    )
    .unwrap();
    // Best-iterate selection can never regress past the start.
    assert!(fit.js <= init_js + 1e-12);
    // Returned tensor is row-stochastic to construction tolerance.
    for s in 0..3 {
        for a in 0..2 {
            let sum: f64 = fit.model.transition().slice(ndarray::s![s, a, ..]).sum();
            assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-12);
        }
    }
}

#[test]
fn alternating_learner_is_deterministic_given_seed() {
    let mdp = random_mdp_with_gamma(&family(3, 2, 0.9), 0.9, 88).unwrap();
    let pi_d = random_policy(3, 2, 1.0, 89);
    let class = DiscriminatorClass::random_bounded(18, 1.0, 10, 90);
    let run = || {
        gail_env_fit(
            &mdp,
            &pi_d,
            EnvFitMode::Alternating {
                class: class.clone(),
                outer: 8,
                model_iters: 1,
                disc_iters: 1,
                batch: 200,
                seed: 91,
            },
            None,
        )
        .unwrap()
    };
    let a = run();
    let b = run();
    assert_eq!(a.model.transition(), b.model.transition());
    assert_eq!(a.js.to_bits(), b.js.to_bits());
}

/// Dual-policy logits produced by the descent must reshape into valid
/// models at every scale; spot-check by running a short fit from several
/// initializations.
#[test]
fn descent_iterates_reshape_into_valid_models() {
    let mdp = random_mdp_with_gamma(&family(4, 3, 0.9), 0.9, 300).unwrap();
    let pi_d = random_policy(4, 3, 1.0, 301);
    for trial in 0..5u64 {
        let other =
            random_mdp_with_gamma(&family(4, 3, 0.9), 0.9, derive_seed(302, trial)).unwrap();
        let fit = gail_env_fit(
            &mdp,
            &pi_d,
            EnvFitMode::DirectJs {
                steps: 30,
                step_size: 3.0,
                seed: 0,
            },
            Some(&LearnedModel::from_mdp(&other)),
        )
        .unwrap();
        for s in 0..4 {
            for a in 0..3 {
                let row = fit.model.transition().slice(ndarray::s![s, a, ..]);
                let sum: f64 = row.sum();
                assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-12);
                assert!(row.iter().all(|&v| v >= 0.0));
            }
        }
    }
}

#[test]
fn empty_class_or_bad_counts_are_rejected() {
    let mdp = random_mdp_with_gamma(&family(3, 2, 0.9), 0.9, 1).unwrap();
    let pi_d = random_policy(3, 2, 1.0, 2);
    let empty = DiscriminatorClass::new(vec![], 1.0).unwrap();
    assert!(gail_env_fit(
        &mdp,
        &pi_d,
        EnvFitMode::Alternating {
            class: empty,
            outer: 1,
            model_iters: 1,
            disc_iters: 1,
            batch: 10,
            seed: 0,
        },
        None,
    )
    .is_err());
    assert!(gail_env_fit(
        &mdp,
        &pi_d,
        EnvFitMode::DirectJs {
            steps: 0,
            step_size: 1.0,
            seed: 0
        },
        None,
    )
    .is_err());
}

#[test]
fn eval_in_model_matches_truncated_rollout_oracle() {
    // V = sum_t gamma^t E[r(s_t, a_t)], accumulated by distribution
    // iteration inside the learned model until the tail is negligible.
    for trial in 0..50u64 {
        let seed = derive_seed(0xE7A1, trial);
        let gamma = [0.5, 0.8, 0.9][trial as usize % 3];
        let mdp = random_mdp_with_gamma(&family(5, 2, gamma), gamma, seed).unwrap();
        let other =
            random_mdp_with_gamma(&family(5, 2, gamma), gamma, derive_seed(seed, 1)).unwrap();
        let model = LearnedModel::from_mdp(&other);
        let pi = random_policy(5, 2, 1.0, derive_seed(seed, 2));
        let value = imlab_core::env_learning::eval_in_model(&model, &mdp, &pi).unwrap();

        let t_max = ((1e-12f64).ln() / gamma.ln()).ceil() as usize;
        let mut prob = mdp.init_dist().clone();
        let mut oracle = 0.0;
        let mut weight = 1.0;
        for _ in 0..=t_max {
            let mut step_reward = 0.0;
            let mut next = ndarray::Array1::zeros(5);
            for s in 0..5 {
                for a in 0..2 {
                    let w = prob[s] * pi.table()[[s, a]];
                    step_reward += w * mdp.reward()[[s, a]];
                    for s2 in 0..5 {
                        next[s2] += w * model.transition()[[s, a, s2]];
                    }
                }
            }
            oracle += weight * step_reward;
            weight *= gamma;
            prob = next;
        }
        assert!(
            (value - oracle).abs() <= 1e-7,
            "trial {trial}: solve {value} vs rollout {oracle}"
        );
    }
}

#[test]
fn joint_distribution_uses_model_occupancy_not_reward_mdp() {
    let mdp = random_mdp_with_gamma(&family(4, 2, 0.9), 0.9, 61).unwrap();
    let other = random_mdp_with_gamma(&family(4, 2, 0.9), 0.9, 62).unwrap();
    let model = LearnedModel::from_mdp(&other);
    let pi_d = random_policy(4, 2, 1.0, 63);
    let mu = joint_distribution(&model, &mdp, &pi_d).unwrap();
    // Marginalizing next states recovers the occupancy inside the model.
    let swapped = mdp.with_transition(model.transition().clone()).unwrap();
    let occ = state_action_occupancy(&swapped, &pi_d).unwrap();
    let marginal: Array2<f64> = mu.pair_marginal();
    for (a, b) in marginal.iter().zip(occ.rho.iter()) {
        assert_abs_diff_eq!(a, b, epsilon = 1e-12);
    }
}
