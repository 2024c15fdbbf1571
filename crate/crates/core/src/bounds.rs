//! LHS/RHS evaluation for every value-gap and model-bias inequality, with a
//! `BoundReport` verdict per check.
//!
//! The RHS formulas are also exposed as plain functions of their scalar
//! inputs so formula-level scaling claims (horizon factors, constants) can
//! be examined without building instances.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::divergences::{
    compatible_coefficient, estm_term_detailed, expected_policy_divergence, f_divergence,
    max_policy_divergence, nn_distance, total_variation, DiscriminatorClass, FDivKind,
    RademacherMode,
};
use crate::env_learning::{
    eval_in_model, joint_distribution, model_kl_error, LearnedModel,
};
use crate::mdp::{policy_value, state_action_occupancy, state_occupancy, Demonstrations, Policy, TabularMdp};
use crate::{tol, Error, Result};

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Which inequality a report is about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BoundId {
    Thm1,
    Cor1,
    LemAState,
    LemASa,
    LemAValue,
    Lem1Js,
    Lem1Kl,
    Lem1Rkl,
    Lem1Chi2,
    Lem1Hellinger,
    Lem2,
    Thm2,
    LemC1,
    Lem3,
    Thm3,
    Pinsker,
    JsTv,
}

impl BoundId {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundId::Thm1 => "THM1",
            BoundId::Cor1 => "COR1",
            BoundId::LemAState => "LEM_A_STATE",
            BoundId::LemASa => "LEM_A_SA",
            BoundId::LemAValue => "LEM_A_VALUE",
            BoundId::Lem1Js => "LEM1_JS",
            BoundId::Lem1Kl => "LEM1_KL",
            BoundId::Lem1Rkl => "LEM1_RKL",
            BoundId::Lem1Chi2 => "LEM1_CHI2",
            BoundId::Lem1Hellinger => "LEM1_HELLINGER",
            BoundId::Lem2 => "LEM2",
            BoundId::Thm2 => "THM2",
            BoundId::LemC1 => "LEM_C1",
            BoundId::Lem3 => "LEM3",
            BoundId::Thm3 => "THM3",
            BoundId::Pinsker => "PINSKER",
            BoundId::JsTv => "JS_TV",
        }
    }

    /// Bounds that only hold with some confidence; their verdicts are
    /// aggregated over resampling trials, never asserted per trial.
    pub fn is_probabilistic(&self) -> bool {
        matches!(self, BoundId::Cor1 | BoundId::Lem2 | BoundId::Thm2)
    }

    pub const ALL: [BoundId; 17] = [
        BoundId::Thm1,
        BoundId::Cor1,
        BoundId::LemAState,
        BoundId::LemASa,
        BoundId::LemAValue,
        BoundId::Lem1Js,
        BoundId::Lem1Kl,
        BoundId::Lem1Rkl,
        BoundId::Lem1Chi2,
        BoundId::Lem1Hellinger,
        BoundId::Lem2,
        BoundId::Thm2,
        BoundId::LemC1,
        BoundId::Lem3,
        BoundId::Thm3,
        BoundId::Pinsker,
        BoundId::JsTv,
    ];
}

impl fmt::Display for BoundId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BoundId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        BoundId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown bound id {s:?}")))
    }
}

impl Serialize for BoundId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for BoundId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        BoundId::from_str(&s).map_err(D::Error::custom)
    }
}

/// One inequality check: both sides, the slack, the verdict, and a snapshot
/// of every quantity that entered the formula.
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub bound_id: BoundId,
    pub lhs: f64,
    /// `+inf` means the hypothesis blew up and the bound holds vacuously.
    pub rhs: f64,
    pub slack: f64,
    pub holds: bool,
    pub inputs: BTreeMap<String, f64>,
}

impl BoundReport {
    pub fn new(bound_id: BoundId, lhs: f64, rhs: f64, inputs: BTreeMap<String, f64>) -> Self {
        let slack = rhs - lhs;
        let holds = rhs.is_infinite() || lhs <= rhs + tol::BOUND_SLACK;
        Self {
            bound_id,
            lhs,
            rhs,
            slack,
            holds,
            inputs,
        }
    }

    /// CSV row form: `bound_id, seed, gamma, lhs, rhs, slack, holds`.
    pub fn csv_row(&self, seed: u64, gamma: f64) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.bound_id,
            seed,
            fmt_float(gamma),
            fmt_float(self.lhs),
            fmt_float(self.rhs),
            fmt_float(self.slack),
            self.holds
        )
    }
}

/// Shortest-round-trip float text, with infinities spelled `+inf`/`-inf`.
pub(crate) fn fmt_float(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "+inf".into() } else { "-inf".into() }
    } else {
        format!("{v}")
    }
}

fn parse_float(s: &str) -> std::result::Result<f64, String> {
    match s {
        "+inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        other => other
            .parse::<f64>()
            .map_err(|e| format!("bad float {other:?}: {e}")),
    }
}

#[derive(Serialize, Deserialize)]
struct BoundReportJson {
    bound_id: BoundId,
    lhs: f64,
    rhs: serde_json::Value,
    slack: serde_json::Value,
    holds: bool,
    inputs: BTreeMap<String, serde_json::Value>,
}

fn value_of(v: f64) -> serde_json::Value {
    if v.is_finite() {
        serde_json::json!(v)
    } else {
        serde_json::Value::String(fmt_float(v))
    }
}

fn float_of(v: &serde_json::Value) -> std::result::Result<f64, String> {
    match v {
        serde_json::Value::Number(n) => n.as_f64().ok_or_else(|| "non-f64 number".into()),
        serde_json::Value::String(s) => parse_float(s),
        other => Err(format!("expected number or inf string, got {other}")),
    }
}

impl Serialize for BoundReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        BoundReportJson {
            bound_id: self.bound_id,
            lhs: self.lhs,
            rhs: value_of(self.rhs),
            slack: value_of(self.slack),
            holds: self.holds,
            inputs: self
                .inputs
                .iter()
                .map(|(k, &v)| (k.clone(), value_of(v)))
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for BoundReport {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = BoundReportJson::deserialize(d)?;
        let mut inputs = BTreeMap::new();
        for (k, v) in &j.inputs {
            inputs.insert(k.clone(), float_of(v).map_err(D::Error::custom)?);
        }
        Ok(BoundReport {
            bound_id: j.bound_id,
            lhs: j.lhs,
            rhs: float_of(&j.rhs).map_err(D::Error::custom)?,
            slack: float_of(&j.slack).map_err(D::Error::custom)?,
            holds: j.holds,
            inputs,
        })
    }
}

// ---------------------------------------------------------------------------
// RHS formulas
// ---------------------------------------------------------------------------

/// `2 sqrt(2) R / (1-gamma)^2 * sqrt(eps)`.
pub fn thm1_rhs(r_max: f64, gamma: f64, eps: f64) -> f64 {
    2.0 * SQRT2 * r_max / (1.0 - gamma).powi(2) * eps.sqrt()
}

/// `2 R / (1-gamma)^2 * (ln|Pi|/m + ln(1/delta)/m)`.
pub fn cor1_rhs(pi_class_size: usize, m: usize, delta: f64, r_max: f64, gamma: f64) -> f64 {
    let m = m as f64;
    2.0 * r_max / (1.0 - gamma).powi(2)
        * ((pi_class_size as f64).ln() / m + (1.0 / delta).ln() / m)
}

/// Per-divergence constant in the linear-horizon gap bound.
pub fn lemma1_constant(kind: FDivKind) -> Result<f64> {
    match kind {
        FDivKind::Js => Ok(2.0 * SQRT2),
        FDivKind::Kl | FDivKind::ReverseKl => Ok(SQRT2),
        FDivKind::PearsonChi2 => Ok(1.0),
        FDivKind::SquaredHellinger => Ok(2.0),
        FDivKind::Tv => Err(Error::InvalidParameter(
            "TV has no divergence-family constant; use the value lemma".into(),
        )),
    }
}

/// `c_kind * R / (1-gamma) * sqrt(eps)`.
pub fn lemma1_rhs(kind: FDivKind, r_max: f64, gamma: f64, eps: f64) -> Result<f64> {
    Ok(lemma1_constant(kind)? * r_max / (1.0 - gamma) * eps.sqrt())
}

/// `sqrt(2) R gamma / (1-gamma)^2 * sqrt(eps_m)`.
pub fn lemma_c1_rhs(r_max: f64, gamma: f64, eps_m: f64) -> f64 {
    SQRT2 * r_max * gamma / (1.0 - gamma).powi(2) * eps_m.sqrt()
}

/// `sqrt(2) R gamma/(1-gamma)^2 sqrt(eps_m) + 2 sqrt(2) R/(1-gamma)^2 sqrt(eps_pi)`.
pub fn lemma3_rhs(r_max: f64, gamma: f64, eps_m: f64, eps_pi: f64) -> f64 {
    lemma_c1_rhs(r_max, gamma, eps_m)
        + 2.0 * SQRT2 * r_max / (1.0 - gamma).powi(2) * eps_pi.sqrt()
}

/// `2 sqrt(2) R/(1-gamma) sqrt(eps_m) + 2 sqrt(2) R/(1-gamma)^2 sqrt(eps_pi)`.
pub fn thm3_rhs(r_max: f64, gamma: f64, eps_m: f64, eps_pi: f64) -> f64 {
    2.0 * SQRT2 * r_max / (1.0 - gamma) * eps_m.sqrt()
        + 2.0 * SQRT2 * r_max / (1.0 - gamma).powi(2) * eps_pi.sqrt()
}

// ---------------------------------------------------------------------------
// Checks
// ---------------------------------------------------------------------------

fn base_inputs(mdp: &TabularMdp) -> BTreeMap<String, f64> {
    let mut inputs = BTreeMap::new();
    inputs.insert("gamma".into(), mdp.gamma());
    inputs.insert("r_max".into(), mdp.r_max());
    inputs
}

/// Quadratic-horizon cloning bound: the value gap against
/// `eps = E_{d_E}[KL(pi_E, pi_I)]`.
pub fn check_thm1(mdp: &TabularMdp, pi_e: &Policy, pi_i: &Policy) -> Result<BoundReport> {
    let eps = expected_policy_divergence(FDivKind::Kl, mdp, pi_e, pi_i, pi_e)?;
    let lhs = policy_value(mdp, pi_e)? - policy_value(mdp, pi_i)?;
    let rhs = if eps.is_infinite() {
        f64::INFINITY
    } else {
        thm1_rhs(mdp.r_max(), mdp.gamma(), eps)
    };
    let mut inputs = base_inputs(mdp);
    inputs.insert("eps".into(), eps);
    Ok(BoundReport::new(BoundId::Thm1, lhs, rhs, inputs))
}

/// RHS of the finite-sample cloning bound (the experiment side supplies the
/// LHS distribution over resamples).
pub fn check_cor1(
    pi_class_size: usize,
    m: usize,
    delta: f64,
    r_max: f64,
    gamma: f64,
) -> Result<f64> {
    if m == 0 || pi_class_size == 0 {
        return Err(Error::InvalidParameter(
            "sample count and policy class size must be >= 1".into(),
        ));
    }
    if !(0.0..1.0).contains(&delta) || delta == 0.0 {
        return Err(Error::InvalidParameter(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::InvalidParameter(format!(
            "gamma must lie in [0, 1), got {gamma}"
        )));
    }
    Ok(cor1_rhs(pi_class_size, m, delta, r_max, gamma))
}

/// The three error-propagation steps: state distributions, state-action
/// distributions, and values, each against the per-state TV error.
pub fn check_lemma_a_chain(
    mdp: &TabularMdp,
    pi_e: &Policy,
    pi: &Policy,
) -> Result<[BoundReport; 3]> {
    let gamma = mdp.gamma();
    let tv_per_state = expected_policy_divergence(FDivKind::Tv, mdp, pi, pi_e, pi_e)?;

    let d_e = state_occupancy(mdp, pi_e)?;
    let d_pi = state_occupancy(mdp, pi)?;
    let occ_e = state_action_occupancy(mdp, pi_e)?;
    let occ_pi = state_action_occupancy(mdp, pi)?;

    let state_lhs = total_variation(
        d_pi.as_slice().expect("layout"),
        d_e.as_slice().expect("layout"),
    );
    let state_rhs = gamma / (1.0 - gamma) * tv_per_state;

    let sa_lhs = total_variation(&occ_pi.rho_flat(), &occ_e.rho_flat());
    let sa_rhs = 1.0 / (1.0 - gamma) * tv_per_state;

    let value_lhs = (policy_value(mdp, pi)? - policy_value(mdp, pi_e)?).abs();
    let value_rhs = 2.0 * mdp.r_max() / (1.0 - gamma) * sa_lhs;

    let mut inputs = base_inputs(mdp);
    inputs.insert("eps_tv".into(), tv_per_state);
    let mut sa_inputs = inputs.clone();
    sa_inputs.insert("tv_rho".into(), sa_lhs);

    Ok([
        BoundReport::new(BoundId::LemAState, state_lhs, state_rhs, inputs.clone()),
        BoundReport::new(BoundId::LemASa, sa_lhs, sa_rhs, inputs),
        BoundReport::new(BoundId::LemAValue, value_lhs, value_rhs, sa_inputs),
    ])
}

fn lemma1_id(kind: FDivKind) -> Result<BoundId> {
    match kind {
        FDivKind::Js => Ok(BoundId::Lem1Js),
        FDivKind::Kl => Ok(BoundId::Lem1Kl),
        FDivKind::ReverseKl => Ok(BoundId::Lem1Rkl),
        FDivKind::PearsonChi2 => Ok(BoundId::Lem1Chi2),
        FDivKind::SquaredHellinger => Ok(BoundId::Lem1Hellinger),
        FDivKind::Tv => Err(Error::InvalidParameter(
            "TV is covered by the value lemma, not the divergence family".into(),
        )),
    }
}

/// Linear-horizon gap bound for one divergence of the family, evaluated at
/// `D_f(rho_I, rho_E)`.
pub fn check_lemma1(
    mdp: &TabularMdp,
    pi_e: &Policy,
    pi_i: &Policy,
    kind: FDivKind,
) -> Result<BoundReport> {
    let id = lemma1_id(kind)?;
    let occ_e = state_action_occupancy(mdp, pi_e)?;
    let occ_i = state_action_occupancy(mdp, pi_i)?;
    let eps = f_divergence(kind, &occ_i.rho_flat(), &occ_e.rho_flat())?;
    let lhs = policy_value(mdp, pi_e)? - policy_value(mdp, pi_i)?;
    let rhs = if eps.is_infinite() {
        f64::INFINITY
    } else {
        lemma1_rhs(kind, mdp.r_max(), mdp.gamma(), eps)?
    };
    let mut inputs = base_inputs(mdp);
    inputs.insert("eps".into(), eps);
    inputs.insert("constant".into(), lemma1_constant(kind)?);
    Ok(BoundReport::new(id, lhs, rhs, inputs))
}

/// Generalization of the class distance: population distance against
/// approximation + estimation + optimization error. Holds with probability
/// `1 - delta`, so callers aggregate over resamples.
#[allow(clippy::too_many_arguments)]
pub fn check_lemma2(
    class: &DiscriminatorClass,
    sample_e: &Demonstrations,
    sample_i: &Demonstrations,
    rho_e: &[f64],
    rho_i: &[f64],
    appr: f64,
    eps_hat: f64,
    delta: f64,
    mode: RademacherMode,
) -> Result<BoundReport> {
    let (lhs, _) = nn_distance(class, rho_e, rho_i)?;
    let estm = estm_term_detailed(
        class,
        &sample_e.pair_indices(),
        &sample_i.pair_indices(),
        delta,
        mode,
    )?;
    let rhs = appr + estm.total + eps_hat;

    let emp_e: Vec<f64> = sample_e.empirical_pairs().iter().copied().collect();
    let emp_i: Vec<f64> = sample_i.empirical_pairs().iter().copied().collect();
    let (emp_nn, _) = nn_distance(class, &emp_e, &emp_i)?;
    let hypothesis_ok = emp_nn - appr <= eps_hat + tol::BOUND_SLACK;

    let mut inputs = BTreeMap::new();
    inputs.insert("m".into(), sample_e.count() as f64);
    inputs.insert("delta".into(), delta);
    inputs.insert("Delta".into(), class.delta());
    inputs.insert("appr".into(), appr);
    inputs.insert("estm".into(), estm.total);
    inputs.insert("rademacher_e".into(), estm.rademacher_e);
    inputs.insert("rademacher_i".into(), estm.rademacher_i);
    inputs.insert("confidence_term".into(), estm.confidence);
    inputs.insert("eps_hat".into(), eps_hat);
    inputs.insert("emp_nn".into(), emp_nn);
    inputs.insert("hypothesis_ok".into(), if hypothesis_ok { 1.0 } else { 0.0 });
    Ok(BoundReport::new(BoundId::Lem2, lhs, rhs, inputs))
}

/// Value-gap form of the generalization bound, scaled by the compatible
/// coefficient. Errors when the reward leaves the affine span of the class.
#[allow(clippy::too_many_arguments)]
pub fn check_thm2(
    mdp: &TabularMdp,
    class: &DiscriminatorClass,
    pi_e: &Policy,
    pi_i: &Policy,
    sample_e: &Demonstrations,
    sample_i: &Demonstrations,
    appr: f64,
    eps_hat: f64,
    delta: f64,
    mode: RademacherMode,
) -> Result<BoundReport> {
    let reward_flat: Vec<f64> = mdp.reward().iter().copied().collect();
    let cert = compatible_coefficient(class, &reward_flat)?;
    let occ_e = state_action_occupancy(mdp, pi_e)?;
    let occ_i = state_action_occupancy(mdp, pi_i)?;
    let inner = check_lemma2(
        class,
        sample_e,
        sample_i,
        &occ_e.rho_flat(),
        &occ_i.rho_flat(),
        appr,
        eps_hat,
        delta,
        mode,
    )?;
    let lhs = policy_value(mdp, pi_e)? - policy_value(mdp, pi_i)?;
    let rhs = cert.norm / (1.0 - mdp.gamma()) * inner.rhs;
    let mut inputs = inner.inputs;
    inputs.insert("gamma".into(), mdp.gamma());
    inputs.insert("r_max".into(), mdp.r_max());
    inputs.insert("r_norm".into(), cert.norm);
    inputs.insert("population_nn".into(), inner.lhs);
    Ok(BoundReport::new(BoundId::Thm2, lhs, rhs, inputs))
}

/// Model-bias evaluation error for the data-collecting policy itself.
pub fn check_lemma_c1(
    true_mdp: &TabularMdp,
    model: &LearnedModel,
    pi_d: &Policy,
) -> Result<BoundReport> {
    let eps_m = model_kl_error(true_mdp, model, pi_d)?;
    let lhs = (eval_in_model(model, true_mdp, pi_d)? - policy_value(true_mdp, pi_d)?).abs();
    let rhs = if eps_m.is_infinite() {
        f64::INFINITY
    } else {
        lemma_c1_rhs(true_mdp.r_max(), true_mdp.gamma(), eps_m)
    };
    let mut inputs = base_inputs(true_mdp);
    inputs.insert("eps_m".into(), eps_m);
    Ok(BoundReport::new(BoundId::LemC1, lhs, rhs, inputs))
}

/// Evaluation error of an arbitrary policy in a cloned model: per-pair KL
/// model error plus the policy's divergence from the data collector.
pub fn check_lemma3(
    true_mdp: &TabularMdp,
    model: &LearnedModel,
    pi_d: &Policy,
    pi: &Policy,
) -> Result<BoundReport> {
    let eps_m = model_kl_error(true_mdp, model, pi_d)?;
    let eps_pi = max_policy_divergence(FDivKind::Kl, pi, pi_d)?;
    let lhs = (policy_value(true_mdp, pi)? - eval_in_model(model, true_mdp, pi)?).abs();
    let rhs = if eps_m.is_infinite() || eps_pi.is_infinite() {
        f64::INFINITY
    } else {
        lemma3_rhs(true_mdp.r_max(), true_mdp.gamma(), eps_m, eps_pi)
    };
    let mut inputs = base_inputs(true_mdp);
    inputs.insert("eps_m".into(), eps_m);
    inputs.insert("eps_pi".into(), eps_pi);
    Ok(BoundReport::new(BoundId::Lem3, lhs, rhs, inputs))
}

/// Evaluation error with the model bias measured by the JS of joint
/// (s, a, s') distributions: linear in the horizon on the model term.
pub fn check_thm3(
    true_mdp: &TabularMdp,
    model: &LearnedModel,
    pi_d: &Policy,
    pi: &Policy,
) -> Result<BoundReport> {
    let mu_theta = joint_distribution(model, true_mdp, pi_d)?;
    let mu_star = joint_distribution(&LearnedModel::from_mdp(true_mdp), true_mdp, pi_d)?;
    let eps_m = f_divergence(FDivKind::Js, &mu_theta.flat(), &mu_star.flat())?;
    let eps_pi = max_policy_divergence(FDivKind::Kl, pi, pi_d)?;
    let lhs = (policy_value(true_mdp, pi)? - eval_in_model(model, true_mdp, pi)?).abs();
    let rhs = if eps_pi.is_infinite() {
        f64::INFINITY
    } else {
        thm3_rhs(true_mdp.r_max(), true_mdp.gamma(), eps_m, eps_pi)
    };
    let mut inputs = base_inputs(true_mdp);
    inputs.insert("eps_m".into(), eps_m);
    inputs.insert("eps_pi".into(), eps_pi);
    Ok(BoundReport::new(BoundId::Thm3, lhs, rhs, inputs))
}

/// The proof-form Pinsker step: `TV <= sqrt(2 KL)`.
pub fn check_pinsker(mu: &[f64], nu: &[f64]) -> Result<BoundReport> {
    let lhs = f_divergence(FDivKind::Tv, mu, nu)?;
    let kl = f_divergence(FDivKind::Kl, mu, nu)?;
    let rhs = if kl.is_infinite() {
        f64::INFINITY
    } else {
        (2.0 * kl).sqrt()
    };
    let mut inputs = BTreeMap::new();
    inputs.insert("kl".into(), kl);
    Ok(BoundReport::new(BoundId::Pinsker, lhs, rhs, inputs))
}

/// The TV-through-JS step: `TV^2 / 2 <= JS`.
pub fn check_js_tv(mu: &[f64], nu: &[f64]) -> Result<BoundReport> {
    let tv = f_divergence(FDivKind::Tv, mu, nu)?;
    let js = f_divergence(FDivKind::Js, mu, nu)?;
    let mut inputs = BTreeMap::new();
    inputs.insert("tv".into(), tv);
    Ok(BoundReport::new(BoundId::JsTv, 0.5 * tv * tv, js, inputs))
}
