//! Policy imitation at tabular scale.
//!
//! Cloning is exact maximum likelihood over counts. Adversarial occupancy
//! matching is solved two ways: exactly, as an LP over the occupancy
//! polytope, and iteratively, to exercise the alternating structure of the
//! sampled algorithms. The gradient variant descends per-state softmax
//! logits with the exact derivative through the occupancy linear solve.

use ndarray::{Array1, Array2};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::divergences::{jensen_shannon, nn_distance, DiscriminatorClass};
use crate::lp::LinearProgram;
use crate::mdp::{
    policy_transition_matrix, sample_occupancy, solve_state_values, state_action_occupancy,
    Demonstrations, Policy, TabularMdp,
};
use crate::{tol, Error, Result};

/// Rule for states that never appear in the demonstrations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BcFallback {
    /// Uniform rows on unvisited states, exact MLE elsewhere.
    Uniform,
    /// Additive smoothing with this pseudocount on every state; unvisited
    /// states degenerate to uniform. Zero reproduces the exact MLE.
    Smoothed(f64),
}

/// A fitted policy plus training diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImitationResult {
    pub policy: Policy,
    /// Objective value of the returned policy (empirical KL for cloning,
    /// class distance or JS for the adversarial fits).
    pub train_metric: f64,
    pub iterations: usize,
    pub converged: bool,
    pub algorithm: String,
    pub seed: u64,
    /// Last-iterate metric, when it differs from the returned one.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub final_metric: Option<f64>,
    /// Best-iterate metric seen during training.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub best_metric: Option<f64>,
    /// Max-abs gradient component at the returned point (gradient fits).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub grad_norm: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

// ---------------------------------------------------------------------------
// Behavioral cloning
// ---------------------------------------------------------------------------

/// Tabular maximum likelihood: `pi(a|s) = count(s, a) / count(s)`.
///
/// `train_metric` is the empirical conditional-KL objective of the returned
/// policy (zero for the exact MLE); when `reference` is given the objective
/// is measured against that policy's rows instead of the empirical ones.
pub fn bc_fit(
    demos: &Demonstrations,
    fallback: BcFallback,
    reference: Option<&Policy>,
) -> Result<ImitationResult> {
    if demos.pairs.is_empty() {
        return Err(Error::EmptyDemonstrations);
    }
    let ns = demos.n_states;
    let na = demos.n_actions;
    let mut counts = Array2::<f64>::zeros((ns, na));
    for &(s, a) in &demos.pairs {
        counts[[s, a]] += 1.0;
    }

    let alpha = match fallback {
        BcFallback::Uniform => 0.0,
        BcFallback::Smoothed(alpha) => {
            if alpha < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "smoothing pseudocount must be nonnegative, got {alpha}"
                )));
            }
            alpha
        }
    };

    let mut table = Array2::zeros((ns, na));
    for s in 0..ns {
        let total: f64 = counts.row(s).sum();
        if total + alpha * na as f64 == 0.0 {
            table.row_mut(s).fill(1.0 / na as f64);
        } else {
            for a in 0..na {
                table[[s, a]] = (counts[[s, a]] + alpha) / (total + alpha * na as f64);
            }
        }
    }
    let policy = Policy::new(table)?;

    // Empirical objective: sum_s (count(s)/m) KL(ref(.|s), pi(.|s)).
    let m = demos.pairs.len() as f64;
    let mut objective = 0.0;
    for s in 0..ns {
        let total: f64 = counts.row(s).sum();
        if total == 0.0 {
            continue;
        }
        let target_row: Vec<f64> = match reference {
            Some(r) => r.row(s).to_vec(),
            None => counts.row(s).iter().map(|c| c / total).collect(),
        };
        let kl = crate::divergences::kl(&target_row, policy.row(s).as_slice().expect("layout"));
        if kl.is_infinite() {
            objective = f64::INFINITY;
            break;
        }
        objective += total / m * kl;
    }

    Ok(ImitationResult {
        policy,
        train_metric: objective,
        iterations: 1,
        converged: true,
        algorithm: "bc".into(),
        seed: 0,
        final_metric: None,
        best_metric: None,
        grad_norm: None,
        notes: Vec::new(),
    })
}

// ---------------------------------------------------------------------------
// DAgger
// ---------------------------------------------------------------------------

/// Mixing schedule for the rollout policy, one weight on the expert per round.
#[derive(Debug, Clone)]
pub enum MixSchedule {
    /// Expert on the first round, learner afterwards.
    ExpertFirst,
    /// Fixed expert weight every round.
    Constant(f64),
    /// Explicit per-round weights (reused cyclically if short).
    Custom(Vec<f64>),
}

impl MixSchedule {
    fn beta(&self, round: usize) -> f64 {
        match self {
            MixSchedule::ExpertFirst => {
                if round == 0 {
                    1.0
                } else {
                    0.0
                }
            }
            MixSchedule::Constant(b) => *b,
            MixSchedule::Custom(bs) => bs[round % bs.len()],
        }
    }
}

/// Iterative aggregation: roll out the mixed policy, label the visited
/// states with expert actions, refit cloning on everything seen so far.
pub fn dagger_fit(
    mdp: &TabularMdp,
    expert: &Policy,
    rounds: usize,
    per_round: usize,
    schedule: MixSchedule,
    seed: u64,
) -> Result<ImitationResult> {
    if rounds == 0 || per_round == 0 {
        return Err(Error::InvalidParameter(
            "rounds and per_round must be >= 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut learner = Policy::uniform(mdp.n_states(), mdp.n_actions());
    let mut aggregate: Vec<(usize, usize)> = Vec::with_capacity(rounds * per_round);

    let expert_draws: Vec<WeightedIndex<f64>> = (0..mdp.n_states())
        .map(|s| WeightedIndex::new(expert.row(s).iter().copied()).expect("valid rows"))
        .collect();

    for round in 0..rounds {
        let beta = schedule.beta(round);
        let mixed = expert.mix(&learner, beta)?;
        let rollout = sample_occupancy(mdp, &mixed, per_round, rng.random::<u64>())?;
        for &(s, _) in &rollout.pairs {
            let label = expert_draws[s].sample(&mut rng);
            aggregate.push((s, label));
        }
        let demos = Demonstrations::new(
            mdp.n_states(),
            mdp.n_actions(),
            aggregate.clone(),
            None,
        )?;
        learner = bc_fit(&demos, BcFallback::Uniform, None)?.policy;
    }

    Ok(ImitationResult {
        policy: learner,
        train_metric: 0.0,
        iterations: rounds,
        converged: true,
        algorithm: "dagger".into(),
        seed,
        final_metric: None,
        best_metric: None,
        grad_norm: None,
        notes: Vec::new(),
    })
}

// ---------------------------------------------------------------------------
// Occupancy-matching LP
// ---------------------------------------------------------------------------

fn check_target_shape(mdp: &TabularMdp, target: &Array2<f64>) -> Result<()> {
    if target.dim() != (mdp.n_states(), mdp.n_actions()) {
        return Err(Error::ShapeMismatch(format!(
            "target occupancy is {:?}, MDP wants ({}, {})",
            target.dim(),
            mdp.n_states(),
            mdp.n_actions()
        )));
    }
    let sum = target.sum();
    if (sum - 1.0).abs() > tol::OCCUPANCY {
        return Err(Error::InvalidDistribution {
            what: "target occupancy".into(),
            sum,
        });
    }
    Ok(())
}

/// Exact one-sided class-distance minimization over the occupancy polytope:
/// minimize `t` subject to `<D_i, target> - <D_i, rho> <= t` for every
/// member, `rho >= 0`, and the stationarity (flow) equalities; then read the
/// policy off the optimal `rho` (uniform on zero-mass states).
pub fn gail_fit_lp(
    mdp: &TabularMdp,
    class: &DiscriminatorClass,
    target_rho: &Array2<f64>,
) -> Result<ImitationResult> {
    if class.is_empty() {
        return Err(Error::EmptyClass);
    }
    check_target_shape(mdp, target_rho)?;
    let ns = mdp.n_states();
    let na = mdp.n_actions();
    let n_pairs = ns * na;
    if class.space_size() != n_pairs {
        return Err(Error::ShapeMismatch(format!(
            "class space is {}, state-action space is {n_pairs}",
            class.space_size()
        )));
    }
    let target_flat: Vec<f64> = target_rho.iter().copied().collect();

    // Variables: rho (n_pairs), then t split into positive/negative parts.
    let mut objective = vec![0.0; n_pairs];
    objective.extend_from_slice(&[1.0, -1.0]);
    let mut lp = LinearProgram::minimize(objective);

    for s in 0..ns {
        let mut row = vec![0.0; n_pairs + 2];
        for sb in 0..ns {
            for ab in 0..na {
                let mut coeff = -mdp.gamma() * mdp.transition()[[sb, ab, s]];
                if sb == s {
                    coeff += 1.0;
                }
                row[sb * na + ab] = coeff;
            }
        }
        lp.eq_constraint(row, (1.0 - mdp.gamma()) * mdp.init_dist()[s]);
    }
    for member in class.members() {
        let mut row = vec![0.0; n_pairs + 2];
        for (z, &dz) in member.iter().enumerate() {
            row[z] = -dz;
        }
        row[n_pairs] = -1.0;
        row[n_pairs + 1] = 1.0;
        let target_mean: f64 = member.iter().zip(&target_flat).map(|(d, p)| d * p).sum();
        lp.le_constraint(row, -target_mean);
    }

    let sol = lp.solve()?;
    let mut t = sol.x[n_pairs] - sol.x[n_pairs + 1];
    if class.includes_zero() && t < 0.0 && t > -tol::LP_FEASIBILITY {
        t = 0.0;
    }

    let rho = Array2::from_shape_vec((ns, na), sol.x[..n_pairs].to_vec()).expect("shape");
    // The vertex itself must sit on the flow polytope to solver precision.
    for s in 0..ns {
        let outflow: f64 = rho.row(s).sum();
        let mut inflow = 0.0;
        for sb in 0..ns {
            for ab in 0..na {
                inflow += mdp.transition()[[sb, ab, s]] * rho[[sb, ab]];
            }
        }
        let residual =
            (outflow - (1.0 - mdp.gamma()) * mdp.init_dist()[s] - mdp.gamma() * inflow).abs();
        if residual > tol::FLOW_RESIDUAL {
            return Err(Error::LpNumerical(format!(
                "flow residual {residual:.3e} at state {s}"
            )));
        }
    }
    let mut table = Array2::zeros((ns, na));
    for s in 0..ns {
        let mass: f64 = rho.row(s).sum();
        if mass > 1e-12 {
            for a in 0..na {
                table[[s, a]] = (rho[[s, a]] / mass).max(0.0);
            }
        } else {
            table.row_mut(s).fill(1.0 / na as f64);
        }
    }
    let policy = Policy::new(table)?;

    // The recovered occupancy must sit on the flow polytope.
    let occ = state_action_occupancy(mdp, &policy)?;
    debug_assert!(occ.flow_residual(mdp) <= tol::FLOW_RESIDUAL);

    Ok(ImitationResult {
        policy,
        train_metric: t,
        iterations: sol.pivots,
        converged: true,
        algorithm: "gail_lp".into(),
        seed: 0,
        final_metric: None,
        best_metric: None,
        grad_norm: None,
        notes: Vec::new(),
    })
}

// ---------------------------------------------------------------------------
// Direct JS descent
// ---------------------------------------------------------------------------

fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

/// `JS(target, rho_pi)` with the occupancy computed exactly.
pub fn js_occupancy_objective(
    mdp: &TabularMdp,
    pi: &Policy,
    target_rho: &Array2<f64>,
) -> Result<f64> {
    check_target_shape(mdp, target_rho)?;
    let occ = state_action_occupancy(mdp, pi)?;
    Ok(jensen_shannon(
        target_rho.as_slice().expect("layout"),
        &occ.rho_flat(),
    ))
}

/// Exact gradient of the JS objective with respect to per-state softmax
/// logits, differentiated through the occupancy linear solve by the adjoint
/// system `(I - gamma P_pi) lambda = dJ/dd`.
pub fn js_occupancy_gradient(
    mdp: &TabularMdp,
    pi: &Policy,
    target_rho: &Array2<f64>,
) -> Result<Array2<f64>> {
    check_target_shape(mdp, target_rho)?;
    let ns = mdp.n_states();
    let na = mdp.n_actions();
    let occ = state_action_occupancy(mdp, pi)?;

    // dJ/drho, needed only where pi > 0 and d > 0 (rho > 0 there).
    let mut g = Array2::zeros((ns, na));
    for s in 0..ns {
        if occ.d[s] == 0.0 {
            continue;
        }
        for a in 0..na {
            let rho = occ.rho[[s, a]];
            if rho == 0.0 {
                continue;
            }
            let mu = target_rho[[s, a]];
            g[[s, a]] = 0.5 * (2.0 * rho / (mu + rho)).ln();
        }
    }

    // Adjoint pass for the dependence through d.
    let p = policy_transition_matrix(mdp, pi)?;
    let u = Array1::from_iter((0..ns).map(|s| g.row(s).dot(&pi.row(s))));
    let lambda = solve_state_values(&p, &u, mdp.gamma());

    let mut grad = Array2::zeros((ns, na));
    for s in 0..ns {
        if occ.d[s] == 0.0 {
            continue;
        }
        // dJ/dpi(a|s), then the softmax chain rule per row.
        let mut dpi = vec![0.0; na];
        for (a, slot) in dpi.iter_mut().enumerate() {
            let mut next = 0.0;
            for s2 in 0..ns {
                next += mdp.transition()[[s, a, s2]] * lambda[s2];
            }
            *slot = occ.d[s] * (g[[s, a]] + mdp.gamma() * next);
        }
        let mean: f64 = (0..na).map(|a| pi.table()[[s, a]] * dpi[a]).sum();
        for a in 0..na {
            grad[[s, a]] = pi.table()[[s, a]] * (dpi[a] - mean);
        }
    }
    Ok(grad)
}

pub(crate) struct JsDescent {
    pub final_policy: Policy,
    pub final_js: f64,
    pub best_policy: Policy,
    pub best_js: f64,
    pub grad_norm: f64,
}

/// Fixed-step gradient descent on per-state logits. The exact initial policy
/// is kept as a candidate so a realizable start is returned untouched.
pub(crate) fn js_descent(
    mdp: &TabularMdp,
    target_rho: &Array2<f64>,
    steps: usize,
    step_size: f64,
    init: &Policy,
) -> Result<JsDescent> {
    let init_js = js_occupancy_objective(mdp, init, target_rho)?;
    let mut best_policy = init.clone();
    let mut best_js = init_js;

    let mut logits = init.table().mapv(f64::ln);
    let mut pi = init.clone();
    let mut grad_norm = 0.0;
    for step in 0..steps {
        let grad = js_occupancy_gradient(mdp, &pi, target_rho)?;
        grad_norm = grad.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if grad.iter().any(|v| !v.is_finite()) {
            let component = grad.iter().position(|v| !v.is_finite()).unwrap_or(0);
            return Err(Error::NonFiniteGradient { step, component });
        }
        logits = &logits - &(grad * step_size);
        pi = Policy::new(softmax_rows(&logits))?;
        let js = js_occupancy_objective(mdp, &pi, target_rho)?;
        if js < best_js {
            best_js = js;
            best_policy = pi.clone();
        }
    }
    let final_js = js_occupancy_objective(mdp, &pi, target_rho)?;
    Ok(JsDescent {
        final_policy: pi,
        final_js,
        best_policy,
        best_js,
        grad_norm,
    })
}

/// First-order JS minimization over softmax-parameterized policies.
///
/// Returns the last iterate unless it regressed past the starting value, in
/// which case the best iterate is returned (noted in the result), so the
/// reported objective never exceeds the initial one.
pub fn gail_fit_js(
    mdp: &TabularMdp,
    target_rho: &Array2<f64>,
    steps: usize,
    step_size: f64,
    init: Option<&Policy>,
    seed: u64,
) -> Result<ImitationResult> {
    if steps == 0 {
        return Err(Error::InvalidParameter("steps must be >= 1".into()));
    }
    if step_size <= 0.0 {
        return Err(Error::InvalidParameter("step size must be positive".into()));
    }
    let uniform = Policy::uniform(mdp.n_states(), mdp.n_actions());
    let init = init.unwrap_or(&uniform);
    let init_js = js_occupancy_objective(mdp, init, target_rho)?;
    let outcome = js_descent(mdp, target_rho, steps, step_size, init)?;

    let mut notes = Vec::new();
    let (policy, train_metric) = if outcome.final_js <= init_js {
        (outcome.final_policy, outcome.final_js)
    } else {
        notes.push("final iterate regressed past the start; returning best iterate".into());
        (outcome.best_policy.clone(), outcome.best_js)
    };
    Ok(ImitationResult {
        policy,
        train_metric,
        iterations: steps,
        converged: outcome.grad_norm <= 1e-6,
        algorithm: "gail_js".into(),
        seed,
        final_metric: Some(outcome.final_js),
        best_metric: Some(outcome.best_js),
        grad_norm: Some(outcome.grad_norm),
        notes,
    })
}

// ---------------------------------------------------------------------------
// Soft policy iteration and the alternating adversarial loop
// ---------------------------------------------------------------------------

/// One multiplicative-weights policy improvement step on an explicit reward
/// table: `pi'(a|s) ∝ pi(a|s) exp(eta Q(s,a))`. Depends on the reward only
/// through per-state differences, so it is invariant to constant shifts.
pub(crate) fn soft_policy_step(
    mdp: &TabularMdp,
    reward: &Array2<f64>,
    pi: &Policy,
    eta: f64,
) -> Result<Policy> {
    let ns = mdp.n_states();
    let na = mdp.n_actions();
    let p = policy_transition_matrix(mdp, pi)?;
    let r_pi = Array1::from_iter((0..ns).map(|s| pi.row(s).dot(&reward.row(s))));
    let v = solve_state_values(&p, &r_pi, mdp.gamma());

    let mut table = Array2::zeros((ns, na));
    for s in 0..ns {
        let mut q = vec![0.0; na];
        for (a, slot) in q.iter_mut().enumerate() {
            let mut next = 0.0;
            for s2 in 0..ns {
                next += mdp.transition()[[s, a, s2]] * v[s2];
            }
            *slot = reward[[s, a]] + mdp.gamma() * next;
        }
        let q_max = q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for a in 0..na {
            let w = pi.table()[[s, a]] * (eta * (q[a] - q_max)).exp();
            table[[s, a]] = w;
            sum += w;
        }
        for a in 0..na {
            table[[s, a]] /= sum;
        }
    }
    Policy::new(table)
}

/// Center to zero mean and divide by the value range; when the range is
/// zero the division is skipped and reported.
pub(crate) fn scale_rewards(reward: &Array2<f64>) -> (Array2<f64>, bool) {
    let mean = reward.mean().unwrap_or(0.0);
    let centered = reward.mapv(|v| v - mean);
    let max = centered.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = centered.iter().cloned().fold(f64::INFINITY, f64::min);
    let range = max - min;
    if range > 0.0 {
        (centered.mapv(|v| v / range), false)
    } else {
        (centered, true)
    }
}

/// Alternating adversarial loop: the discriminator step is the exact best
/// response within the class against the current policy occupancy versus the
/// demonstrations' empirical occupancy; the policy step is soft policy
/// iteration on the negated, centered, range-scaled discriminator output.
/// Returns the iterate with the smallest measured class distance.
///
/// With the best response computed in closed form, extra discriminator
/// iterations are idempotent; `disc_iters` is kept for interface parity.
pub fn wgail_fit_iterative(
    mdp: &TabularMdp,
    class: &DiscriminatorClass,
    demos: &Demonstrations,
    outer: usize,
    policy_iters: usize,
    disc_iters: usize,
    seed: u64,
) -> Result<ImitationResult> {
    if outer == 0 || policy_iters == 0 || disc_iters == 0 {
        return Err(Error::InvalidParameter(
            "iteration counts must be >= 1".into(),
        ));
    }
    if class.is_empty() {
        return Err(Error::EmptyClass);
    }
    if demos.pairs.is_empty() {
        return Err(Error::EmptyDemonstrations);
    }
    let ns = mdp.n_states();
    let na = mdp.n_actions();
    if class.space_size() != ns * na {
        return Err(Error::ShapeMismatch(format!(
            "class space is {}, state-action space is {}",
            class.space_size(),
            ns * na
        )));
    }
    let target = demos.empirical_pairs();
    let target_flat: Vec<f64> = target.iter().copied().collect();

    let mut pi = Policy::uniform(ns, na);
    let mut scaling_skipped = false;

    let measure = |pi: &Policy| -> Result<f64> {
        let occ = state_action_occupancy(mdp, pi)?;
        Ok(nn_distance(class, &target_flat, &occ.rho_flat())?.0)
    };

    let mut best_metric = measure(&pi)?;
    let mut best_policy = pi.clone();

    for k in 0..outer {
        let occ = state_action_occupancy(mdp, &pi)?;
        // Best response: the member scoring the policy highest against the
        // demonstrations.
        let (_, arg) = nn_distance(class, &occ.rho_flat(), &target_flat)?;
        let member = &class.members()[arg];
        let raw = Array2::from_shape_vec(
            (ns, na),
            member.iter().map(|v| -v).collect::<Vec<f64>>(),
        )
        .expect("shape");
        let (reward, skipped) = scale_rewards(&raw);
        scaling_skipped |= skipped;

        // Decaying step keeps the multiplicative-weights updates no-regret.
        let eta = 2.0 * (1.0 - mdp.gamma()) / ((k + 1) as f64).sqrt();
        for _ in 0..policy_iters {
            pi = soft_policy_step(mdp, &reward, &pi, eta)?;
        }
        let metric = measure(&pi)?;
        if metric < best_metric {
            best_metric = metric;
            best_policy = pi.clone();
        }
    }

    let final_metric = measure(&pi)?;
    let mut notes = Vec::new();
    if scaling_skipped {
        notes.push("reward scaling skipped: zero range after centering".into());
    }
    Ok(ImitationResult {
        policy: best_policy,
        train_metric: best_metric,
        iterations: outer,
        converged: true,
        algorithm: "wgail".into(),
        seed,
        final_metric: Some(final_metric),
        best_metric: Some(best_metric),
        grad_norm: None,
        notes,
    })
}
