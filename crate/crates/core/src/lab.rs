//! Config-driven experiment campaigns: random MDP families, learner sweeps,
//! inequality verification, and CSV/JSON report emission.
//!
//! Determinism contract: a campaign's rows are a pure function of its config.
//! Per-trial seeds come from a counter-based split of the master seed, trials
//! may run on any number of threads, and aggregation is order-preserving, so
//! reruns produce byte-identical CSV output.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use ndarray::{Array1, Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    check_cor1, check_js_tv, check_lemma1, check_lemma3, check_lemma_a_chain, check_lemma_c1,
    check_pinsker, check_thm1, check_thm3, fmt_float, BoundReport,
};
use crate::divergences::{DiscriminatorClass, FDivKind};
use crate::env_learning::{bc_env_fit, gail_env_fit, EnvFitMode};
use crate::imitators::{bc_fit, gail_fit_js, gail_fit_lp, BcFallback};
use crate::mdp::{policy_value, sample_occupancy, state_action_occupancy, Policy, TabularMdp};
use crate::worstcase;
use crate::{Error, Result};

/// Probabilistic bounds are flagged when their empirical violation frequency
/// exceeds `delta` by more than this margin.
const FREQUENCY_MARGIN: f64 = 0.05;

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

/// Random family: transition rows and the initial distribution are
/// symmetric-Dirichlet, rewards are uniform in `[-reward_scale, reward_scale]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MdpFamily {
    pub n_states: usize,
    pub n_actions: usize,
    pub gammas: Vec<f64>,
    pub dirichlet_alpha: f64,
    pub reward_scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Campaign {
    BcPolicy,
    GailPolicy,
    EnvBc,
    EnvGail,
    BoundsAll,
    Worstcase,
    PacCor1,
}

impl Campaign {
    pub fn as_str(&self) -> &'static str {
        match self {
            Campaign::BcPolicy => "bc_policy",
            Campaign::GailPolicy => "gail_policy",
            Campaign::EnvBc => "env_bc",
            Campaign::EnvGail => "env_gail",
            Campaign::BoundsAll => "bounds_all",
            Campaign::Worstcase => "worstcase",
            Campaign::PacCor1 => "pac_cor1",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputSpec {
    pub path: PathBuf,
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub mdp_family: MdpFamily,
    pub campaign: Campaign,
    pub trials: usize,
    pub sample_sizes: Vec<usize>,
    pub delta: f64,
    #[serde(default)]
    pub output: Option<OutputSpec>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let fam = &self.mdp_family;
        if fam.n_states == 0 || fam.n_actions == 0 {
            return Err(Error::Config("state and action counts must be >= 1".into()));
        }
        if fam.gammas.is_empty() {
            return Err(Error::Config("gamma list must be nonempty".into()));
        }
        for &g in &fam.gammas {
            if !(0.0..1.0).contains(&g) {
                return Err(Error::Config(format!("gamma {g} outside [0, 1)")));
            }
        }
        if fam.dirichlet_alpha <= 0.0 {
            return Err(Error::Config("dirichlet_alpha must be positive".into()));
        }
        if fam.reward_scale < 0.0 {
            return Err(Error::Config("reward_scale must be nonnegative".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        if self.sample_sizes.is_empty() || self.sample_sizes.contains(&0) {
            return Err(Error::Config("sample sizes must be nonempty and >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.delta) || self.delta == 0.0 {
            return Err(Error::Config(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        if self.campaign == Campaign::PacCor1 {
            let class_size = (fam.n_actions as f64).powi(fam.n_states as i32);
            if class_size > 4096.0 {
                return Err(Error::Config(format!(
                    "deterministic policy class has {class_size} members; cap is 4096"
                )));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Random instances
// ---------------------------------------------------------------------------

/// Counter-based seed split (splitmix64), so parallel trials cannot reorder
/// randomness.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ (index.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Symmetric Dirichlet draw via normalized Gamma variates.
fn dirichlet_row(rng: &mut ChaCha8Rng, n: usize, alpha: f64) -> Vec<f64> {
    let gamma = Gamma::new(alpha, 1.0).expect("alpha > 0");
    let mut row: Vec<f64> = (0..n).map(|_| gamma.sample(rng)).collect();
    let sum: f64 = row.iter().sum();
    if sum <= 0.0 {
        return vec![1.0 / n as f64; n];
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
    row
}

pub fn random_policy(n_states: usize, n_actions: usize, alpha: f64, seed: u64) -> Policy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table = Array2::zeros((n_states, n_actions));
    for s in 0..n_states {
        let row = dirichlet_row(&mut rng, n_actions, alpha);
        for (a, v) in row.into_iter().enumerate() {
            table[[s, a]] = v;
        }
    }
    Policy::new(table).expect("rows normalized")
}

/// Nudge every row multiplicatively; keeps full support so the divergence
/// from the base policy stays finite.
pub fn perturbed_policy(base: &Policy, magnitude: f64, seed: u64) -> Policy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table = base.table().clone();
    for mut row in table.rows_mut() {
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v).max(1e-9) * (magnitude * rng.random_range(-1.0..1.0)).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    Policy::new(table).expect("rows normalized")
}

pub fn random_mdp_with_gamma(family: &MdpFamily, gamma: f64, seed: u64) -> Result<TabularMdp> {
    let ns = family.n_states;
    let na = family.n_actions;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut transition = Array3::zeros((ns, na, ns));
    for s in 0..ns {
        for a in 0..na {
            let row = dirichlet_row(&mut rng, ns, family.dirichlet_alpha);
            for (s2, v) in row.into_iter().enumerate() {
                transition[[s, a, s2]] = v;
            }
        }
    }
    let scale = family.reward_scale;
    let reward = Array2::from_shape_fn((ns, na), |_| {
        if scale > 0.0 {
            rng.random_range(-scale..=scale)
        } else {
            0.0
        }
    });
    let init = Array1::from_vec(dirichlet_row(&mut rng, ns, family.dirichlet_alpha));
    TabularMdp::new(transition, reward, scale, gamma, init)
}

/// Family sample with the discount picked from the family's list by seed.
pub fn random_mdp(family: &MdpFamily, seed: u64) -> Result<TabularMdp> {
    let gamma = family.gammas[(seed as usize) % family.gammas.len()];
    random_mdp_with_gamma(family, gamma, seed)
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

/// One emitted check, with the trial context needed for the CSV row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportRow {
    pub trial: usize,
    pub seed: u64,
    /// NaN on aggregate rows that span discounts (prints empty).
    pub gamma: f64,
    pub report: BoundReport,
    pub m: Option<usize>,
    pub delta: Option<f64>,
    pub algorithm: String,
    pub train_metric: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CampaignReport {
    pub config: ExperimentConfig,
    pub rows: Vec<ReportRow>,
    /// Finite-RHS failures of per-instance bounds plus failed frequency
    /// checks of the probabilistic ones.
    pub violations: usize,
    /// Largest |slack| among the counted failures.
    pub max_violation_slack: f64,
    pub runtime_secs: f64,
}

pub const CSV_HEADER: &str =
    "campaign,trial,seed,gamma,bound_id,lhs,rhs,slack,holds,m,delta,algorithm,train_metric";

fn fmt_gamma(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        fmt_float(v)
    }
}

pub fn report_csv(report: &CampaignReport) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            report.config.campaign.as_str(),
            row.trial,
            row.seed,
            fmt_gamma(row.gamma),
            row.report.bound_id,
            fmt_float(row.report.lhs),
            fmt_float(row.report.rhs),
            fmt_float(row.report.slack),
            row.report.holds,
            row.m.map(|m| m.to_string()).unwrap_or_default(),
            row.delta.map(fmt_float).unwrap_or_default(),
            row.algorithm,
            fmt_float(row.train_metric),
        ));
    }
    out
}

pub fn report_json(report: &CampaignReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)?)
}

/// Write the report to its destination in the requested format.
pub fn emit_report(report: &CampaignReport, spec: &OutputSpec) -> Result<()> {
    let body = match spec.format {
        OutputFormat::Csv => report_csv(report),
        OutputFormat::Json => report_json(report)?,
    };
    if let Some(parent) = spec.path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(&spec.path, body)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Instance-level check batteries
// ---------------------------------------------------------------------------

/// Which learner batteries a trial runs.
#[derive(Debug, Clone, Copy)]
pub struct TrialParts {
    pub bc: bool,
    pub gail: bool,
    pub env_bc: bool,
    pub env_gail: bool,
    pub props: bool,
}

impl TrialParts {
    pub fn all() -> Self {
        Self {
            bc: true,
            gail: true,
            env_bc: true,
            env_gail: true,
            props: true,
        }
    }

    pub fn none() -> Self {
        Self {
            bc: false,
            gail: false,
            env_bc: false,
            env_gail: false,
            props: false,
        }
    }
}

/// One verified inequality with its provenance.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub report: BoundReport,
    pub algorithm: String,
    pub train_metric: f64,
}

fn outcome(report: BoundReport, algorithm: &str, train_metric: f64) -> CheckOutcome {
    CheckOutcome {
        report,
        algorithm: algorithm.to_string(),
        train_metric,
    }
}

/// Run the selected learners on one instance and check every applicable
/// inequality. This is the engine behind the fuzzing campaigns.
pub fn instance_checks(
    mdp: &TabularMdp,
    seed: u64,
    m: usize,
    parts: &TrialParts,
) -> Result<Vec<CheckOutcome>> {
    let ns = mdp.n_states();
    let na = mdp.n_actions();
    let expert = random_policy(ns, na, 1.0, derive_seed(seed, 11));
    let mut out = Vec::new();

    let demos = sample_occupancy(mdp, &expert, m, derive_seed(seed, 13))?;
    let occ_e = state_action_occupancy(mdp, &expert)?;

    if parts.bc {
        // Light smoothing keeps the per-state KL finite when a rare expert
        // action goes unsampled, so the cloning rows stay non-vacuous.
        let fit = bc_fit(&demos, BcFallback::Smoothed(0.1), None)?;
        out.push(outcome(
            check_thm1(mdp, &expert, &fit.policy)?,
            "bc",
            fit.train_metric,
        ));
        for report in check_lemma_a_chain(mdp, &expert, &fit.policy)? {
            out.push(outcome(report, "bc", fit.train_metric));
        }
    }

    if parts.gail {
        let class = DiscriminatorClass::indicators(ns * na, 1.0);
        let lp = gail_fit_lp(mdp, &class, &occ_e.rho)?;
        out.push(outcome(
            check_thm1(mdp, &expert, &lp.policy)?,
            "gail_lp",
            lp.train_metric,
        ));
        for kind in FDivKind::GAP_KINDS {
            out.push(outcome(
                check_lemma1(mdp, &expert, &lp.policy, kind)?,
                "gail_lp",
                lp.train_metric,
            ));
        }
        let js = gail_fit_js(mdp, &occ_e.rho, 150, 4.0, None, derive_seed(seed, 17))?;
        for kind in FDivKind::GAP_KINDS {
            out.push(outcome(
                check_lemma1(mdp, &expert, &js.policy, kind)?,
                "gail_js",
                js.train_metric,
            ));
        }
        if parts.props {
            let occ_js = state_action_occupancy(mdp, &js.policy)?;
            out.push(outcome(
                check_pinsker(&occ_js.rho_flat(), &occ_e.rho_flat())?,
                "gail_js",
                js.train_metric,
            ));
            out.push(outcome(
                check_js_tv(&occ_js.rho_flat(), &occ_e.rho_flat())?,
                "gail_js",
                js.train_metric,
            ));
        }
    }

    if parts.env_bc || parts.env_gail {
        let pi_d = perturbed_policy(&expert, 0.4, derive_seed(seed, 19));
        let probe = perturbed_policy(&pi_d, 0.3, derive_seed(seed, 23));
        if parts.env_bc {
            // Mix the one-step MLE slightly toward uniform: unseen successor
            // states get mass, so the per-pair KL error stays finite and the
            // model-bias rows are informative instead of vacuous.
            let raw = bc_env_fit(&demos)?;
            let uniform = 1.0 / ns as f64;
            let model = crate::env_learning::LearnedModel::new(
                raw.transition().mapv(|v| 0.95 * v + 0.05 * uniform),
            )?;
            out.push(outcome(check_lemma_c1(mdp, &model, &expert)?, "env_bc", 0.0));
            out.push(outcome(
                check_lemma3(mdp, &model, &expert, &probe)?,
                "env_bc",
                0.0,
            ));
            out.push(outcome(
                check_lemma3(mdp, &model, &expert, &expert)?,
                "env_bc",
                0.0,
            ));
        }
        if parts.env_gail {
            let fit = gail_env_fit(
                mdp,
                &pi_d,
                EnvFitMode::DirectJs {
                    steps: 120,
                    step_size: 2.0,
                    seed: derive_seed(seed, 29),
                },
                None,
            )?;
            out.push(outcome(
                check_thm3(mdp, &fit.model, &pi_d, &pi_d)?,
                "env_gail",
                fit.js,
            ));
            out.push(outcome(
                check_thm3(mdp, &fit.model, &pi_d, &probe)?,
                "env_gail",
                fit.js,
            ));
            out.push(outcome(
                check_lemma_c1(mdp, &fit.model, &pi_d)?,
                "env_gail",
                fit.js,
            ));
        }
    }

    Ok(out)
}

// ---------------------------------------------------------------------------
// Campaign trials
// ---------------------------------------------------------------------------

fn learner_trial(config: &ExperimentConfig, trial: usize, parts: &TrialParts) -> Result<Vec<ReportRow>> {
    let seed = derive_seed(config.seed, trial as u64);
    let m = config.sample_sizes[trial % config.sample_sizes.len()];
    let mut rows = Vec::new();
    for (gi, &gamma) in config.mdp_family.gammas.iter().enumerate() {
        let mdp = random_mdp_with_gamma(&config.mdp_family, gamma, seed)?;
        let checks = instance_checks(&mdp, derive_seed(seed, 1000 + gi as u64), m, parts)?;
        for c in checks {
            rows.push(ReportRow {
                trial,
                seed,
                gamma,
                report: c.report,
                m: Some(m),
                delta: Some(config.delta),
                algorithm: c.algorithm,
                train_metric: c.train_metric,
            });
        }
    }
    Ok(rows)
}

fn worstcase_trial(config: &ExperimentConfig, trial: usize) -> Result<Vec<ReportRow>> {
    let seed = derive_seed(config.seed, trial as u64);
    let mut rows = Vec::new();
    for &gamma in &config.mdp_family.gammas {
        let hard = worstcase::hard_instance(gamma)?;
        let report = check_thm1(&hard.mdp, &hard.pi_e, &hard.pi_i)?;
        let ratio = if gamma > 0.0 {
            worstcase::tightness_ratio(gamma)?
        } else {
            0.0
        };
        rows.push(ReportRow {
            trial,
            seed,
            gamma,
            report,
            m: None,
            delta: None,
            algorithm: "hard_instance".into(),
            train_metric: ratio,
        });
    }
    Ok(rows)
}

/// Enumerate deterministic policies as base-`n_actions` digit strings.
fn deterministic_actions(index: usize, n_states: usize, n_actions: usize) -> Vec<usize> {
    let mut digits = Vec::with_capacity(n_states);
    let mut rest = index;
    for _ in 0..n_states {
        digits.push(rest % n_actions);
        rest /= n_actions;
    }
    digits
}

fn pac_cor1_trial(config: &ExperimentConfig, trial: usize) -> Result<Vec<ReportRow>> {
    let fam = &config.mdp_family;
    let seed = derive_seed(config.seed, trial as u64);
    let gamma = fam.gammas[trial % fam.gammas.len()];
    let mdp = random_mdp_with_gamma(fam, gamma, seed)?;
    let class_size = fam.n_actions.pow(fam.n_states as u32);

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 3));
    let expert_actions: Vec<usize> = (0..fam.n_states)
        .map(|_| rng.random_range(0..fam.n_actions))
        .collect();
    let expert = Policy::deterministic(&expert_actions, fam.n_actions)?;
    let v_e = policy_value(&mdp, &expert)?;

    // Candidate values are shared across sample sizes.
    let candidates: Vec<(Vec<usize>, f64)> = (0..class_size)
        .map(|idx| {
            let actions = deterministic_actions(idx, fam.n_states, fam.n_actions);
            let pi = Policy::deterministic(&actions, fam.n_actions)?;
            Ok((actions, policy_value(&mdp, &pi)?))
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for (mi, &m) in config.sample_sizes.iter().enumerate() {
        let demos = sample_occupancy(&mdp, &expert, m, derive_seed(seed, 50 + mi as u64))?;
        // The adversarial empirical-risk minimizer: the worst deterministic
        // policy consistent with every demonstrated label.
        let mut worst_gap = f64::NEG_INFINITY;
        for (actions, value) in &candidates {
            let consistent = demos.pairs.iter().all(|&(s, a)| actions[s] == a);
            if consistent {
                worst_gap = worst_gap.max(v_e - value);
            }
        }
        let rhs = check_cor1(class_size, m, config.delta, mdp.r_max(), gamma)?;
        let mut inputs = BTreeMap::new();
        inputs.insert("pi_class_size".into(), class_size as f64);
        inputs.insert("m".into(), m as f64);
        inputs.insert("delta".into(), config.delta);
        inputs.insert("gamma".into(), gamma);
        inputs.insert("r_max".into(), mdp.r_max());
        rows.push(ReportRow {
            trial,
            seed,
            gamma,
            report: BoundReport::new(crate::bounds::BoundId::Cor1, worst_gap, rhs, inputs),
            m: Some(m),
            delta: Some(config.delta),
            algorithm: "bc_erm_worst".into(),
            train_metric: 0.0,
        });
    }
    Ok(rows)
}

fn run_trial(config: &ExperimentConfig, trial: usize) -> Result<Vec<ReportRow>> {
    match config.campaign {
        Campaign::BcPolicy => learner_trial(
            config,
            trial,
            &TrialParts {
                bc: true,
                ..TrialParts::none()
            },
        ),
        Campaign::GailPolicy => learner_trial(
            config,
            trial,
            &TrialParts {
                gail: true,
                props: true,
                ..TrialParts::none()
            },
        ),
        Campaign::EnvBc => learner_trial(
            config,
            trial,
            &TrialParts {
                env_bc: true,
                ..TrialParts::none()
            },
        ),
        Campaign::EnvGail => learner_trial(
            config,
            trial,
            &TrialParts {
                env_gail: true,
                ..TrialParts::none()
            },
        ),
        Campaign::BoundsAll => learner_trial(config, trial, &TrialParts::all()),
        Campaign::Worstcase => worstcase_trial(config, trial),
        Campaign::PacCor1 => pac_cor1_trial(config, trial),
    }
}

/// Frequency verdicts for the probabilistic bounds, one per (bound, m).
fn frequency_rows(config: &ExperimentConfig, rows: &[ReportRow]) -> Vec<ReportRow> {
    let mut groups: BTreeMap<(crate::bounds::BoundId, Option<usize>), (usize, usize)> =
        BTreeMap::new();
    for row in rows {
        if row.report.bound_id.is_probabilistic() {
            let entry = groups.entry((row.report.bound_id, row.m)).or_insert((0, 0));
            entry.0 += 1;
            if !row.report.holds && row.report.rhs.is_finite() {
                entry.1 += 1;
            }
        }
    }
    groups
        .into_iter()
        .map(|((bound_id, m), (count, failures))| {
            let freq = failures as f64 / count as f64;
            let threshold = config.delta + FREQUENCY_MARGIN;
            let mut inputs = BTreeMap::new();
            inputs.insert("resamples".into(), count as f64);
            inputs.insert("failures".into(), failures as f64);
            ReportRow {
                trial: config.trials,
                seed: config.seed,
                gamma: f64::NAN,
                report: BoundReport::new(bound_id, freq, threshold, inputs),
                m,
                delta: Some(config.delta),
                algorithm: "frequency".into(),
                train_metric: failures as f64,
            }
        })
        .collect()
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("LAB_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n >= 1 => builder = builder.num_threads(n),
            _ => {
                return Err(Error::Config(format!(
                    "LAB_THREADS must be a positive integer, got {v:?}"
                )))
            }
        }
    }
    builder
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

/// Run every trial (in parallel when allowed), aggregate frequency verdicts,
/// count violations, and persist to the configured output.
pub fn run_campaign(config: &ExperimentConfig) -> Result<CampaignReport> {
    config.validate()?;
    let start = Instant::now();
    let pool = thread_pool()?;
    let per_trial: Result<Vec<Vec<ReportRow>>> = pool.install(|| {
        (0..config.trials)
            .into_par_iter()
            .map(|t| run_trial(config, t))
            .collect()
    });
    let mut rows: Vec<ReportRow> = per_trial?.into_iter().flatten().collect();
    rows.extend(frequency_rows(config, &rows));

    let mut violations = 0;
    let mut max_violation_slack: f64 = 0.0;
    for row in &rows {
        let counted = if row.report.bound_id.is_probabilistic() {
            row.algorithm == "frequency"
        } else {
            true
        };
        if counted && !row.report.holds && row.report.rhs.is_finite() {
            violations += 1;
            max_violation_slack = max_violation_slack.max(row.report.slack.abs());
        }
    }

    let report = CampaignReport {
        config: config.clone(),
        rows,
        violations,
        max_violation_slack,
        runtime_secs: start.elapsed().as_secs_f64(),
    };
    if let Some(spec) = &config.output {
        emit_report(&report, spec)?;
    }
    Ok(report)
}
