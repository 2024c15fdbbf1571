//! Transition-model imitation.
//!
//! A transition model is a policy on the dual MDP whose states are source
//! state-action pairs and whose actions are successor states, so every
//! policy-imitation tool applies verbatim: counting gives the one-step
//! maximum-likelihood model, and occupancy matching on the dual gives the
//! adversarial model learner. Evaluation inside a learned model is the same
//! exact linear solve with the transition tensor swapped.

use ndarray::{Array2, Array3};
use serde::{Deserialize, Serialize};

use crate::divergences::{jensen_shannon, DiscriminatorClass};
use crate::imitators::{js_descent, scale_rewards, soft_policy_step};
use crate::mdp::{
    array3_from_nested, array3_to_nested, dual_mdp, pair_index, sample_occupancy,
    state_action_occupancy, Demonstrations, Policy, TabularMdp,
};
use crate::{tol, Error, Result};

/// A learned transition tensor with the same row-stochasticity contract as
/// the true one.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<Vec<f64>>>", into = "Vec<Vec<Vec<f64>>>")]
pub struct LearnedModel {
    transition: Array3<f64>,
}

impl TryFrom<Vec<Vec<Vec<f64>>>> for LearnedModel {
    type Error = Error;
    fn try_from(v: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let d0 = v.len();
        let d1 = v.first().map(|p| p.len()).unwrap_or(0);
        let d2 = v
            .first()
            .and_then(|p| p.first())
            .map(|r| r.len())
            .unwrap_or(0);
        LearnedModel::new(array3_from_nested(&v, d0, d1, d2)?)
    }
}

impl From<LearnedModel> for Vec<Vec<Vec<f64>>> {
    fn from(m: LearnedModel) -> Self {
        array3_to_nested(&m.transition)
    }
}

impl LearnedModel {
    pub fn new(transition: Array3<f64>) -> Result<Self> {
        let (ns, na, ns2) = transition.dim();
        if ns2 != ns {
            return Err(Error::ShapeMismatch(format!(
                "model tensor is ({ns}, {na}, {ns2}), want ({ns}, {na}, {ns})"
            )));
        }
        for s in 0..ns {
            for a in 0..na {
                let row = transition.slice(ndarray::s![s, a, ..]);
                let sum: f64 = row.sum();
                if (sum - 1.0).abs() > tol::PROB_INPUT {
                    return Err(Error::InvalidDistribution {
                        what: format!("model row ({s}, {a})"),
                        sum,
                    });
                }
                if row.iter().any(|&v| v < 0.0) {
                    return Err(Error::NegativeEntry {
                        what: format!("model row ({s}, {a})"),
                        value: row.iter().cloned().fold(f64::INFINITY, f64::min),
                    });
                }
            }
        }
        Ok(Self { transition })
    }

    /// The true transitions of an MDP, as a model.
    pub fn from_mdp(mdp: &TabularMdp) -> Self {
        Self {
            transition: mdp.transition().clone(),
        }
    }

    /// Reshape a dual-MDP policy table `(s*a) x s'` back into a tensor.
    pub fn from_dual_policy(table: &Array2<f64>, n_states: usize, n_actions: usize) -> Result<Self> {
        if table.dim() != (n_states * n_actions, n_states) {
            return Err(Error::ShapeMismatch(format!(
                "dual policy is {:?}, want ({}, {n_states})",
                table.dim(),
                n_states * n_actions
            )));
        }
        let mut transition = Array3::zeros((n_states, n_actions, n_states));
        for s in 0..n_states {
            for a in 0..n_actions {
                for s2 in 0..n_states {
                    transition[[s, a, s2]] = table[[pair_index(s, a, n_actions), s2]];
                }
            }
        }
        Self::new(transition)
    }

    /// The model as a dual-MDP policy table.
    pub fn to_dual_policy(&self) -> Policy {
        let (ns, na, _) = self.transition.dim();
        let mut table = Array2::zeros((ns * na, ns));
        for s in 0..ns {
            for a in 0..na {
                for s2 in 0..ns {
                    table[[pair_index(s, a, na), s2]] = self.transition[[s, a, s2]];
                }
            }
        }
        Policy::new(table).expect("model rows are stochastic")
    }

    pub fn transition(&self) -> &Array3<f64> {
        &self.transition
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        Self {
            transition: Array3::from_elem(
                (n_states, n_actions, n_states),
                1.0 / n_states as f64,
            ),
        }
    }
}

/// Distribution over (s, a, s') triples induced by a data-collecting policy
/// inside some transition model.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<Vec<f64>>>", into = "Vec<Vec<Vec<f64>>>")]
pub struct JointDistribution {
    table: Array3<f64>,
}

impl TryFrom<Vec<Vec<Vec<f64>>>> for JointDistribution {
    type Error = Error;
    fn try_from(v: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let d0 = v.len();
        let d1 = v.first().map(|p| p.len()).unwrap_or(0);
        let d2 = v
            .first()
            .and_then(|p| p.first())
            .map(|r| r.len())
            .unwrap_or(0);
        JointDistribution::new(array3_from_nested(&v, d0, d1, d2)?)
    }
}

impl From<JointDistribution> for Vec<Vec<Vec<f64>>> {
    fn from(j: JointDistribution) -> Self {
        array3_to_nested(&j.table)
    }
}

impl JointDistribution {
    pub fn new(table: Array3<f64>) -> Result<Self> {
        let sum: f64 = table.sum();
        if (sum - 1.0).abs() > tol::OCCUPANCY {
            return Err(Error::InvalidDistribution {
                what: "joint distribution".into(),
                sum,
            });
        }
        if table.iter().any(|&v| v < -tol::OCCUPANCY) {
            return Err(Error::NegativeEntry {
                what: "joint distribution".into(),
                value: table.iter().cloned().fold(f64::INFINITY, f64::min),
            });
        }
        let mut table = table;
        let mut total = 0.0;
        for v in table.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
            total += *v;
        }
        if total > 0.0 {
            table.mapv_inplace(|v| v / total);
        }
        Ok(Self { table })
    }

    pub fn table(&self) -> &Array3<f64> {
        &self.table
    }

    /// Row-major flattening over (s, a, s').
    pub fn flat(&self) -> Vec<f64> {
        self.table.iter().copied().collect()
    }

    /// Marginal over next states: the state-action occupancy it came from.
    pub fn pair_marginal(&self) -> Array2<f64> {
        let (ns, na, _) = self.table.dim();
        let mut out = Array2::zeros((ns, na));
        for s in 0..ns {
            for a in 0..na {
                out[[s, a]] = self.table.slice(ndarray::s![s, a, ..]).sum();
            }
        }
        out
    }
}

/// `mu(s, a, s') = model(s'|s, a) rho^model_pi(s, a)`, with the occupancy
/// computed inside the supplied model. `reward_mdp` contributes only its
/// discount and initial distribution.
pub fn joint_distribution(
    model: &LearnedModel,
    reward_mdp: &TabularMdp,
    pi_d: &Policy,
) -> Result<JointDistribution> {
    let swapped = reward_mdp.with_transition(model.transition().clone())?;
    let occ = state_action_occupancy(&swapped, pi_d)?;
    let (ns, na, _) = model.transition().dim();
    let mut table = Array3::zeros((ns, na, ns));
    for s in 0..ns {
        for a in 0..na {
            for s2 in 0..ns {
                table[[s, a, s2]] = model.transition()[[s, a, s2]] * occ.rho[[s, a]];
            }
        }
    }
    JointDistribution::new(table)
}

/// One-step maximum likelihood: `M(s'|s, a) = count(s, a, s') / count(s, a)`,
/// uniform rows on unvisited pairs.
pub fn bc_env_fit(triples: &Demonstrations) -> Result<LearnedModel> {
    let ts = triples
        .triples
        .as_ref()
        .filter(|ts| !ts.is_empty())
        .ok_or(Error::EmptyDemonstrations)?;
    let ns = triples.n_states;
    let na = triples.n_actions;
    let mut counts = Array3::<f64>::zeros((ns, na, ns));
    for &(s, a, s2) in ts {
        counts[[s, a, s2]] += 1.0;
    }
    let mut transition = Array3::zeros((ns, na, ns));
    for s in 0..ns {
        for a in 0..na {
            let total: f64 = counts.slice(ndarray::s![s, a, ..]).sum();
            if total == 0.0 {
                transition
                    .slice_mut(ndarray::s![s, a, ..])
                    .fill(1.0 / ns as f64);
            } else {
                for s2 in 0..ns {
                    transition[[s, a, s2]] = counts[[s, a, s2]] / total;
                }
            }
        }
    }
    LearnedModel::new(transition)
}

/// How the adversarial model learner runs.
#[derive(Debug, Clone)]
pub enum EnvFitMode {
    /// The listed alternating procedure: sample buffers from the true and
    /// learned models, score triples with the best-response discriminator,
    /// improve the dual policy on those rewards.
    Alternating {
        class: DiscriminatorClass,
        outer: usize,
        model_iters: usize,
        disc_iters: usize,
        batch: usize,
        seed: u64,
    },
    /// Exact gradient descent on the JS between joint distributions, the
    /// quantity the model-bias bound is stated in.
    DirectJs {
        steps: usize,
        step_size: f64,
        seed: u64,
    },
}

/// Outcome of [`gail_env_fit`]: the best iterate by measured joint JS.
#[derive(Debug, Clone)]
pub struct EnvFitResult {
    pub model: LearnedModel,
    /// Joint JS of the returned model.
    pub js: f64,
    /// Joint JS of the last iterate.
    pub js_final: f64,
    pub iterations: usize,
    pub notes: Vec<String>,
}

/// Reward for a scored triple, clipped so the dual soft policy iteration
/// stays finite.
fn triple_reward(score: f64) -> f64 {
    let p = 1.0 / (1.0 + (-score).exp());
    (-(1.0 - p).ln()).clamp(-30.0, 30.0)
}

/// Adversarial environment learning on the dual MDP.
pub fn gail_env_fit(
    true_mdp: &TabularMdp,
    pi_d: &Policy,
    mode: EnvFitMode,
    init: Option<&LearnedModel>,
) -> Result<EnvFitResult> {
    let ns = true_mdp.n_states();
    let na = true_mdp.n_actions();
    let dual = dual_mdp(true_mdp, pi_d)?;
    // The dual occupancy of a model-as-policy is exactly its joint
    // distribution, flattened; computing the target through the same dual
    // route makes a true-model initialization an exact fixed point.
    let truth = LearnedModel::from_mdp(true_mdp).to_dual_policy();
    let target = state_action_occupancy(&dual, &truth)?.rho;
    let mu_star_flat: Vec<f64> = target.iter().copied().collect();

    let default_init = LearnedModel::uniform(ns, na);
    let init = init.unwrap_or(&default_init);

    let js_of = |model: &LearnedModel| -> Result<f64> {
        let mu = joint_distribution(model, true_mdp, pi_d)?;
        Ok(jensen_shannon(&mu_star_flat, &mu.flat()))
    };

    match mode {
        EnvFitMode::DirectJs {
            steps,
            step_size,
            seed: _,
        } => {
            if steps == 0 || step_size <= 0.0 {
                return Err(Error::InvalidParameter(
                    "steps must be >= 1 and step size positive".into(),
                ));
            }
            let outcome = js_descent(&dual, &target, steps, step_size, &init.to_dual_policy())?;
            let best = LearnedModel::from_dual_policy(outcome.best_policy.table(), ns, na)?;
            Ok(EnvFitResult {
                js: outcome.best_js,
                js_final: outcome.final_js,
                model: best,
                iterations: steps,
                notes: Vec::new(),
            })
        }
        EnvFitMode::Alternating {
            class,
            outer,
            model_iters,
            disc_iters,
            batch,
            seed,
        } => {
            if outer == 0 || model_iters == 0 || disc_iters == 0 || batch == 0 {
                return Err(Error::InvalidParameter(
                    "iteration and batch counts must be >= 1".into(),
                ));
            }
            if class.is_empty() {
                return Err(Error::EmptyClass);
            }
            if class.space_size() != ns * na * ns {
                return Err(Error::ShapeMismatch(format!(
                    "class space is {}, triple space is {}",
                    class.space_size(),
                    ns * na * ns
                )));
            }
            let expert_buffer = sample_occupancy(true_mdp, pi_d, batch, seed)?
                .triple_indices()
                .expect("sampler records triples");

            let mut model = init.clone();
            let mut best = model.clone();
            let mut best_js = js_of(&model)?;
            let mut discriminator = 0usize;
            let mut notes = Vec::new();

            for k in 0..outer {
                let mut model_buffer = Vec::new();
                for j in 0..model_iters {
                    let swapped = true_mdp.with_transition(model.transition().clone())?;
                    let round_seed = seed
                        .wrapping_add(1)
                        .wrapping_add((k * model_iters + j) as u64);
                    model_buffer = sample_occupancy(&swapped, pi_d, batch, round_seed)?
                        .triple_indices()
                        .expect("sampler records triples");

                    // Dual reward table from the current discriminator,
                    // centered and range-scaled like the policy variant.
                    let member = &class.members()[discriminator];
                    let raw = Array2::from_shape_vec(
                        (ns * na, ns),
                        member.iter().map(|&v| triple_reward(v)).collect::<Vec<f64>>(),
                    )
                    .expect("shape");
                    let (reward, skipped) = scale_rewards(&raw);
                    if skipped && notes.is_empty() {
                        notes.push("reward scaling skipped: zero range after centering".into());
                    }
                    let eta = 2.0 * (1.0 - true_mdp.gamma()) / ((k + 1) as f64).sqrt();
                    let dual_policy =
                        soft_policy_step(&dual, &reward, &model.to_dual_policy(), eta)?;
                    model = LearnedModel::from_dual_policy(dual_policy.table(), ns, na)?;
                }
                // Exact logistic best response; further iterations are
                // idempotent, so disc_iters collapses to one evaluation.
                let mut best_score = f64::NEG_INFINITY;
                for (idx, member) in class.members().iter().enumerate() {
                    let mut score = 0.0;
                    for &z in &model_buffer {
                        let p = 1.0 / (1.0 + (-member[z]).exp());
                        score += p.max(1e-12).ln();
                    }
                    for &z in &expert_buffer {
                        let p = 1.0 / (1.0 + (-member[z]).exp());
                        score += (1.0 - p).max(1e-12).ln();
                    }
                    if score > best_score {
                        best_score = score;
                        discriminator = idx;
                    }
                }
                let js = js_of(&model)?;
                if js < best_js {
                    best_js = js;
                    best = model.clone();
                }
            }
            let js_final = js_of(&model)?;
            Ok(EnvFitResult {
                model: best,
                js: best_js,
                js_final,
                iterations: outer,
                notes,
            })
        }
    }
}

/// Value of a policy inside a learned model, under the true reward.
pub fn eval_in_model(model: &LearnedModel, reward_mdp: &TabularMdp, pi: &Policy) -> Result<f64> {
    let swapped = reward_mdp.with_transition(model.transition().clone())?;
    crate::mdp::policy_value(&swapped, pi)
}

/// Expected per-pair KL between true and learned next-state rows, weighted
/// by the data-collecting policy's occupancy in the true model.
pub fn model_kl_error(true_mdp: &TabularMdp, model: &LearnedModel, pi_d: &Policy) -> Result<f64> {
    if model.transition().dim() != true_mdp.transition().dim() {
        return Err(Error::ShapeMismatch("model tensor shape".into()));
    }
    let occ = state_action_occupancy(true_mdp, pi_d)?;
    let mut total = 0.0;
    for s in 0..true_mdp.n_states() {
        for a in 0..true_mdp.n_actions() {
            let w = occ.rho[[s, a]];
            if w == 0.0 {
                continue;
            }
            let true_row = true_mdp.transition().slice(ndarray::s![s, a, ..]);
            let model_row = model.transition().slice(ndarray::s![s, a, ..]);
            let kl = crate::divergences::kl(
                true_row.as_slice().expect("layout"),
                model_row.as_slice().expect("layout"),
            );
            if kl.is_infinite() {
                return Ok(f64::INFINITY);
            }
            total += w * kl;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::worstcase;
    use approx::assert_abs_diff_eq;

    fn hard() -> worstcase::HardInstance {
        worstcase::hard_instance(0.9).unwrap()
    }

    #[test]
    fn joint_marginal_recovers_occupancy() {
        let hard = hard();
        let model = LearnedModel::from_mdp(&hard.mdp);
        let mu = joint_distribution(&model, &hard.mdp, &hard.pi_e).unwrap();
        let occ = state_action_occupancy(&hard.mdp, &hard.pi_e).unwrap();
        for (a, b) in mu.pair_marginal().iter().zip(occ.rho.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn deterministic_model_joint_support() {
        let hard = hard();
        let model = LearnedModel::from_mdp(&hard.mdp);
        let mu = joint_distribution(&model, &hard.mdp, &hard.pi_e).unwrap();
        for s in 0..3 {
            for a in 0..2 {
                let nonzero = (0..3)
                    .filter(|&s2| mu.table()[[s, a, s2]] > 0.0)
                    .count();
                assert!(nonzero <= 1);
            }
        }
    }

    #[test]
    fn joint_entry_on_hard_instance() {
        // mu(s0, a0, s1) = d(s0) pi(a0|s0) = (1 - gamma) * 0.9.
        let hard = hard();
        let model = LearnedModel::from_mdp(&hard.mdp);
        let mu = joint_distribution(&model, &hard.mdp, &hard.pi_e).unwrap();
        assert_abs_diff_eq!(mu.table()[[0, 0, 1]], 0.1 * 0.9, epsilon = 1e-12);
    }

    #[test]
    fn bc_env_fit_count_ratio() {
        let triples = vec![(0, 0, 1), (0, 0, 1), (0, 0, 1), (0, 0, 2)];
        let demos = Demonstrations::new(3, 2, vec![(0, 0); 4], Some(triples)).unwrap();
        let model = bc_env_fit(&demos).unwrap();
        assert_abs_diff_eq!(model.transition()[[0, 0, 1]], 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(model.transition()[[0, 0, 2]], 0.25, epsilon = 1e-15);
        // Unvisited pairs are uniform.
        assert_abs_diff_eq!(model.transition()[[1, 1, 0]], 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn bc_env_fit_recovers_deterministic_dynamics() {
        let hard = hard();
        let demos = sample_occupancy(&hard.mdp, &hard.pi_e, 2000, 3).unwrap();
        let model = bc_env_fit(&demos).unwrap();
        // Every visited pair has deterministic truth, so rows match exactly.
        for &(s, a) in demos.pairs.iter() {
            for s2 in 0..3 {
                assert_abs_diff_eq!(
                    model.transition()[[s, a, s2]],
                    hard.mdp.transition()[[s, a, s2]],
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn bc_env_fit_requires_triples() {
        let demos = Demonstrations::new(2, 2, vec![(0, 0)], None).unwrap();
        assert!(matches!(
            bc_env_fit(&demos),
            Err(Error::EmptyDemonstrations)
        ));
    }

    #[test]
    fn direct_js_keeps_true_model_fixed() {
        let hard = hard();
        let truth = LearnedModel::from_mdp(&hard.mdp);
        let fit = gail_env_fit(
            &hard.mdp,
            &hard.pi_e,
            EnvFitMode::DirectJs {
                steps: 3,
                step_size: 1.0,
                seed: 0,
            },
            Some(&truth),
        )
        .unwrap();
        assert_eq!(fit.js, 0.0);
        assert_eq!(fit.model.transition(), truth.transition());
    }

    #[test]
    fn eval_in_true_model_matches_policy_value() {
        let hard = hard();
        let model = LearnedModel::from_mdp(&hard.mdp);
        let v = eval_in_model(&model, &hard.mdp, &hard.pi_e).unwrap();
        let direct = crate::mdp::policy_value(&hard.mdp, &hard.pi_e).unwrap();
        assert_abs_diff_eq!(v, direct, epsilon = 1e-10);
    }

    #[test]
    fn eval_with_zero_reward_is_zero() {
        let hard = hard();
        let zeroed = hard
            .mdp
            .with_reward(Array2::zeros((3, 2)), 0.0)
            .unwrap();
        let model = LearnedModel::uniform(3, 2);
        assert_eq!(eval_in_model(&model, &zeroed, &hard.pi_e).unwrap(), 0.0);
    }

    #[test]
    fn model_kl_error_zero_for_truth_and_infinite_on_support_violation() {
        let hard = hard();
        let truth = LearnedModel::from_mdp(&hard.mdp);
        assert_eq!(model_kl_error(&hard.mdp, &truth, &hard.pi_e).unwrap(), 0.0);

        // A model that forbids the visited arc (s0, a0) -> s1.
        let mut t = hard.mdp.transition().clone();
        t[[0, 0, 1]] = 0.0;
        t[[0, 0, 0]] = 1.0;
        let bad = LearnedModel::new(t).unwrap();
        assert!(model_kl_error(&hard.mdp, &bad, &hard.pi_e)
            .unwrap()
            .is_infinite());
    }

    #[test]
    fn dual_policy_round_trip() {
        let hard = hard();
        let model = LearnedModel::from_mdp(&hard.mdp);
        let back = LearnedModel::from_dual_policy(model.to_dual_policy().table(), 3, 2).unwrap();
        assert_eq!(back.transition(), model.transition());
    }
}
