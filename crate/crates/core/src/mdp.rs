//! Tabular MDPs, policies, and exact occupancy measures.
//!
//! Occupancies are computed by dense LU solves of the stationarity system,
//! never by iteration, so downstream inequality checks are exact up to solver
//! precision. Sampling from a discounted occupancy uses the geometric-horizon
//! construction (draw the stopping time first), which makes the emitted pairs
//! unbiased i.i.d. draws rather than truncated-trajectory approximations.

use ndarray::{Array1, Array2, Array3, Axis};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Geometric;
use serde::{Deserialize, Serialize};

use crate::{tol, Error, Result};

/// Flat index of a state-action pair, row-major over (s, a).
pub fn pair_index(s: usize, a: usize, n_actions: usize) -> usize {
    s * n_actions + a
}

/// Inverse of [`pair_index`].
pub fn unpair_index(k: usize, n_actions: usize) -> (usize, usize) {
    (k / n_actions, k % n_actions)
}

/// Flat index of a state-action-next-state triple, row-major over (s, a, s').
pub fn triple_index(s: usize, a: usize, s_next: usize, n_actions: usize, n_states: usize) -> usize {
    (s * n_actions + a) * n_states + s_next
}

fn check_prob_slice(what: &str, p: &[f64], tolerance: f64) -> Result<()> {
    for &v in p {
        if v < -tolerance {
            return Err(Error::NegativeEntry {
                what: what.to_string(),
                value: v,
            });
        }
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > tolerance {
        return Err(Error::InvalidDistribution {
            what: what.to_string(),
            sum,
        });
    }
    Ok(())
}

/// Clamp in-tolerance negatives to zero and rescale to an exact unit sum.
/// For solver outputs only; validated inputs are kept bit-identical so the
/// JSON interchange round-trips exactly.
fn normalize_prob_slice(p: &mut [f64]) {
    for v in p.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let sum: f64 = p.iter().sum();
    if sum > 0.0 {
        for v in p.iter_mut() {
            *v /= sum;
        }
    }
}

/// Zero out in-tolerance negatives without touching anything else; this is
/// idempotent, unlike rescaling.
fn clamp_tiny_negatives(p: &mut [f64]) {
    for v in p.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

// ---------------------------------------------------------------------------
// TabularMdp
// ---------------------------------------------------------------------------

/// A finite MDP: transition tensor `(s, a, s')`, bounded reward table,
/// discount, and initial state distribution.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "MdpJson", into = "MdpJson")]
pub struct TabularMdp {
    n_states: usize,
    n_actions: usize,
    transition: Array3<f64>,
    reward: Array2<f64>,
    r_max: f64,
    gamma: f64,
    init_dist: Array1<f64>,
}

impl TabularMdp {
    /// Validate and normalize all probability slices.
    ///
    /// Rows that sum to one within `tol::PROB_INPUT` are rescaled exactly;
    /// anything further off is rejected.
    pub fn new(
        transition: Array3<f64>,
        reward: Array2<f64>,
        r_max: f64,
        gamma: f64,
        init_dist: Array1<f64>,
    ) -> Result<Self> {
        let (ns, na, ns2) = transition.dim();
        if ns == 0 || na == 0 {
            return Err(Error::InvalidParameter(
                "state and action counts must be positive".into(),
            ));
        }
        if ns2 != ns {
            return Err(Error::ShapeMismatch(format!(
                "transition tensor is ({ns}, {na}, {ns2}), want ({ns}, {na}, {ns})"
            )));
        }
        if reward.dim() != (ns, na) {
            return Err(Error::ShapeMismatch(format!(
                "reward table is {:?}, want ({ns}, {na})",
                reward.dim()
            )));
        }
        if init_dist.len() != ns {
            return Err(Error::ShapeMismatch(format!(
                "init_dist has {} entries, want {ns}",
                init_dist.len()
            )));
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::InvalidParameter(format!(
                "gamma must lie in [0, 1), got {gamma}"
            )));
        }
        if r_max < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "r_max must be nonnegative, got {r_max}"
            )));
        }
        for ((s, a), &r) in reward.indexed_iter() {
            if r.abs() > r_max + tol::PROB_INPUT {
                return Err(Error::InvalidParameter(format!(
                    "|r({s}, {a})| = {} exceeds r_max = {r_max}",
                    r.abs()
                )));
            }
        }

        let mut transition = transition;
        for s in 0..ns {
            for a in 0..na {
                let mut row = transition.slice_mut(ndarray::s![s, a, ..]);
                check_prob_slice(
                    &format!("transition({s}, {a}, .)"),
                    row.as_slice().expect("standard layout"),
                    tol::PROB_INPUT,
                )?;
                clamp_tiny_negatives(row.as_slice_mut().expect("standard layout"));
            }
        }
        let mut init_dist = init_dist;
        check_prob_slice(
            "init_dist",
            init_dist.as_slice().expect("standard layout"),
            tol::PROB_INPUT,
        )?;
        clamp_tiny_negatives(init_dist.as_slice_mut().expect("standard layout"));

        Ok(Self {
            n_states: ns,
            n_actions: na,
            transition,
            reward,
            r_max,
            gamma,
            init_dist,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn transition(&self) -> &Array3<f64> {
        &self.transition
    }

    pub fn reward(&self) -> &Array2<f64> {
        &self.reward
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn init_dist(&self) -> &Array1<f64> {
        &self.init_dist
    }

    /// Same MDP with the transition tensor replaced (evaluating a learned
    /// model under the true reward).
    pub fn with_transition(&self, transition: Array3<f64>) -> Result<Self> {
        Self::new(
            transition,
            self.reward.clone(),
            self.r_max,
            self.gamma,
            self.init_dist.clone(),
        )
    }

    /// Same MDP with a different reward table (and bound).
    pub fn with_reward(&self, reward: Array2<f64>, r_max: f64) -> Result<Self> {
        Self::new(
            self.transition.clone(),
            reward,
            r_max,
            self.gamma,
            self.init_dist.clone(),
        )
    }

    /// Same MDP with a different discount.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(
            self.transition.clone(),
            self.reward.clone(),
            self.r_max,
            gamma,
            self.init_dist.clone(),
        )
    }
}

/// JSON interchange form shared by all modules and the CLI.
#[derive(Serialize, Deserialize, Clone)]
struct MdpJson {
    n_states: usize,
    n_actions: usize,
    gamma: f64,
    r_max: f64,
    init_dist: Vec<f64>,
    reward: Vec<Vec<f64>>,
    transition: Vec<Vec<Vec<f64>>>,
}

impl TryFrom<MdpJson> for TabularMdp {
    type Error = Error;

    fn try_from(j: MdpJson) -> Result<Self> {
        let transition = array3_from_nested(&j.transition, j.n_states, j.n_actions, j.n_states)?;
        let reward = array2_from_nested(&j.reward, j.n_states, j.n_actions)?;
        TabularMdp::new(
            transition,
            reward,
            j.r_max,
            j.gamma,
            Array1::from_vec(j.init_dist),
        )
    }
}

impl From<TabularMdp> for MdpJson {
    fn from(m: TabularMdp) -> Self {
        MdpJson {
            n_states: m.n_states,
            n_actions: m.n_actions,
            gamma: m.gamma,
            r_max: m.r_max,
            init_dist: m.init_dist.to_vec(),
            reward: array2_to_nested(&m.reward),
            transition: array3_to_nested(&m.transition),
        }
    }
}

pub(crate) fn array2_to_nested(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

pub(crate) fn array3_to_nested(a: &Array3<f64>) -> Vec<Vec<Vec<f64>>> {
    a.axis_iter(Axis(0))
        .map(|plane| plane.rows().into_iter().map(|r| r.to_vec()).collect())
        .collect()
}

pub(crate) fn array2_from_nested(v: &[Vec<f64>], rows: usize, cols: usize) -> Result<Array2<f64>> {
    if v.len() != rows || v.iter().any(|r| r.len() != cols) {
        return Err(Error::ShapeMismatch(format!(
            "nested array is not {rows} x {cols}"
        )));
    }
    let flat: Vec<f64> = v.iter().flatten().copied().collect();
    Ok(Array2::from_shape_vec((rows, cols), flat).expect("shape checked"))
}

pub(crate) fn array3_from_nested(
    v: &[Vec<Vec<f64>>],
    d0: usize,
    d1: usize,
    d2: usize,
) -> Result<Array3<f64>> {
    if v.len() != d0 || v.iter().any(|p| p.len() != d1 || p.iter().any(|r| r.len() != d2)) {
        return Err(Error::ShapeMismatch(format!(
            "nested tensor is not {d0} x {d1} x {d2}"
        )));
    }
    let flat: Vec<f64> = v.iter().flatten().flatten().copied().collect();
    Ok(Array3::from_shape_vec((d0, d1, d2), flat).expect("shape checked"))
}

// ---------------------------------------------------------------------------
// Policy
// ---------------------------------------------------------------------------

/// Row-stochastic state-to-action table.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    table: Array2<f64>,
}

impl Policy {
    pub fn new(table: Array2<f64>) -> Result<Self> {
        let mut table = table;
        for (s, mut row) in table.rows_mut().into_iter().enumerate() {
            check_prob_slice(
                &format!("policy row {s}"),
                row.as_slice().expect("standard layout"),
                tol::PROB_INPUT,
            )?;
            clamp_tiny_negatives(row.as_slice_mut().expect("standard layout"));
        }
        Ok(Self { table })
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        Self {
            table: Array2::from_elem((n_states, n_actions), 1.0 / n_actions as f64),
        }
    }

    /// One action per state with probability one.
    pub fn deterministic(actions: &[usize], n_actions: usize) -> Result<Self> {
        let mut table = Array2::zeros((actions.len(), n_actions));
        for (s, &a) in actions.iter().enumerate() {
            if a >= n_actions {
                return Err(Error::IndexOutOfRange(format!(
                    "action {a} at state {s} (n_actions = {n_actions})"
                )));
            }
            table[[s, a]] = 1.0;
        }
        Ok(Self { table })
    }

    pub fn table(&self) -> &Array2<f64> {
        &self.table
    }

    pub fn n_states(&self) -> usize {
        self.table.nrows()
    }

    pub fn n_actions(&self) -> usize {
        self.table.ncols()
    }

    pub fn row(&self, s: usize) -> ndarray::ArrayView1<'_, f64> {
        self.table.row(s)
    }

    /// Convex mixture `beta * self + (1 - beta) * other`, row by row.
    pub fn mix(&self, other: &Policy, beta: f64) -> Result<Policy> {
        if self.table.dim() != other.table.dim() {
            return Err(Error::ShapeMismatch(
                "policy mixture dimensions differ".into(),
            ));
        }
        Policy::new(&self.table * beta + &other.table * (1.0 - beta))
    }
}

impl Serialize for Policy {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        array2_to_nested(&self.table).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Policy {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(deserializer)?;
        if rows.is_empty() {
            return Err(serde::de::Error::custom("policy table is empty"));
        }
        let cols = rows[0].len();
        let table = array2_from_nested(&rows, rows.len(), cols).map_err(serde::de::Error::custom)?;
        Policy::new(table).map_err(serde::de::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// OccupancyMeasure
// ---------------------------------------------------------------------------

/// Discounted stationary state and state-action distributions of a policy.
#[derive(Debug, Clone)]
pub struct OccupancyMeasure {
    pub d: Array1<f64>,
    pub rho: Array2<f64>,
    pub gamma: f64,
}

impl OccupancyMeasure {
    /// Validate sums, nonnegativity, and the marginal identity, then clean
    /// up solver noise (clamp in-tolerance negatives, rescale to unit mass).
    pub fn new(d: Array1<f64>, rho: Array2<f64>, gamma: f64) -> Result<Self> {
        if rho.nrows() != d.len() {
            return Err(Error::ShapeMismatch(
                "rho rows do not match state count".into(),
            ));
        }
        check_prob_slice("occupancy d", d.as_slice().expect("layout"), tol::OCCUPANCY)?;
        check_prob_slice(
            "occupancy rho",
            rho.as_slice().expect("layout"),
            tol::OCCUPANCY,
        )?;
        for (s, row) in rho.rows().into_iter().enumerate() {
            let marginal: f64 = row.sum();
            if (marginal - d[s]).abs() > tol::OCCUPANCY {
                return Err(Error::InvalidDistribution {
                    what: format!("rho marginal at state {s} vs d"),
                    sum: marginal - d[s],
                });
            }
        }
        let mut d = d;
        let mut rho = rho;
        normalize_prob_slice(d.as_slice_mut().expect("layout"));
        normalize_prob_slice(rho.as_slice_mut().expect("layout"));
        Ok(Self { d, rho, gamma })
    }

    /// Max-abs residual of the stationarity identity
    /// `sum_a rho(s, a) = (1 - gamma) d0(s) + gamma sum_{s',a'} M(s|s',a') rho(s',a')`
    /// against the generating MDP.
    pub fn flow_residual(&self, mdp: &TabularMdp) -> f64 {
        let ns = mdp.n_states();
        let na = mdp.n_actions();
        let gamma = self.gamma;
        let mut worst: f64 = 0.0;
        for s in 0..ns {
            let lhs: f64 = self.rho.row(s).sum();
            let mut inflow = 0.0;
            for sb in 0..ns {
                for ab in 0..na {
                    inflow += mdp.transition()[[sb, ab, s]] * self.rho[[sb, ab]];
                }
            }
            let rhs = (1.0 - gamma) * mdp.init_dist()[s] + gamma * inflow;
            worst = worst.max((lhs - rhs).abs());
        }
        worst
    }

    /// Row-major flattening of `rho` over the state-action space.
    pub fn rho_flat(&self) -> Vec<f64> {
        self.rho.iter().copied().collect()
    }
}

// ---------------------------------------------------------------------------
// Demonstrations
// ---------------------------------------------------------------------------

/// A finite sample of state-action pairs (optionally with next states).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Demonstrations {
    pub n_states: usize,
    pub n_actions: usize,
    pub pairs: Vec<(usize, usize)>,
    pub triples: Option<Vec<(usize, usize, usize)>>,
}

impl Demonstrations {
    pub fn new(
        n_states: usize,
        n_actions: usize,
        pairs: Vec<(usize, usize)>,
        triples: Option<Vec<(usize, usize, usize)>>,
    ) -> Result<Self> {
        for &(s, a) in &pairs {
            if s >= n_states || a >= n_actions {
                return Err(Error::IndexOutOfRange(format!("pair ({s}, {a})")));
            }
        }
        if let Some(ts) = &triples {
            if ts.len() != pairs.len() {
                return Err(Error::ShapeMismatch(
                    "triples length differs from pairs length".into(),
                ));
            }
            for &(s, a, s2) in ts {
                if s >= n_states || a >= n_actions || s2 >= n_states {
                    return Err(Error::IndexOutOfRange(format!("triple ({s}, {a}, {s2})")));
                }
            }
        }
        Ok(Self {
            n_states,
            n_actions,
            pairs,
            triples,
        })
    }

    /// Sample size m.
    pub fn count(&self) -> usize {
        self.pairs.len()
    }

    /// Flat sample-space indices of the pairs.
    pub fn pair_indices(&self) -> Vec<usize> {
        self.pairs
            .iter()
            .map(|&(s, a)| pair_index(s, a, self.n_actions))
            .collect()
    }

    /// Flat sample-space indices of the triples, if recorded.
    pub fn triple_indices(&self) -> Option<Vec<usize>> {
        self.triples.as_ref().map(|ts| {
            ts.iter()
                .map(|&(s, a, s2)| triple_index(s, a, s2, self.n_actions, self.n_states))
                .collect()
        })
    }

    /// Empirical state-action frequency table.
    pub fn empirical_pairs(&self) -> Array2<f64> {
        let mut table = Array2::zeros((self.n_states, self.n_actions));
        for &(s, a) in &self.pairs {
            table[[s, a]] += 1.0;
        }
        let m = self.pairs.len().max(1) as f64;
        table / m
    }

    /// Empirical (s, a, s') frequency tensor, if triples were recorded.
    pub fn empirical_triples(&self) -> Option<Array3<f64>> {
        let ts = self.triples.as_ref()?;
        let mut table = Array3::zeros((self.n_states, self.n_actions, self.n_states));
        for &(s, a, s2) in ts {
            table[[s, a, s2]] += 1.0;
        }
        let m = ts.len().max(1) as f64;
        Some(table / m)
    }
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// State-to-state chain induced by a policy:
/// `P(s'|s) = sum_a M(s'|s, a) pi(a|s)`. Rows are source states.
pub fn policy_transition_matrix(mdp: &TabularMdp, pi: &Policy) -> Result<Array2<f64>> {
    check_policy_shape(mdp, pi)?;
    let ns = mdp.n_states();
    let na = mdp.n_actions();
    let mut p = Array2::zeros((ns, ns));
    for s in 0..ns {
        for a in 0..na {
            let w = pi.table()[[s, a]];
            if w == 0.0 {
                continue;
            }
            for s2 in 0..ns {
                p[[s, s2]] += w * mdp.transition()[[s, a, s2]];
            }
        }
    }
    debug_assert!(p
        .rows()
        .into_iter()
        .all(|r: ndarray::ArrayView1<f64>| (r.sum() - 1.0).abs() <= 1e-12));
    Ok(p)
}

fn check_policy_shape(mdp: &TabularMdp, pi: &Policy) -> Result<()> {
    if pi.n_states() != mdp.n_states() || pi.n_actions() != mdp.n_actions() {
        return Err(Error::ShapeMismatch(format!(
            "policy is {} x {}, MDP wants {} x {}",
            pi.n_states(),
            pi.n_actions(),
            mdp.n_states(),
            mdp.n_actions()
        )));
    }
    Ok(())
}

/// Solve `(I - gamma P^T) d = (1 - gamma) d0` by dense LU.
pub(crate) fn solve_state_occupancy(
    p: &Array2<f64>,
    init_dist: &Array1<f64>,
    gamma: f64,
) -> Array1<f64> {
    let n = p.nrows();
    let a = nalgebra::DMatrix::from_fn(n, n, |i, j| {
        let eye = if i == j { 1.0 } else { 0.0 };
        eye - gamma * p[[j, i]]
    });
    let b = nalgebra::DVector::from_fn(n, |i, _| (1.0 - gamma) * init_dist[i]);
    let x = a
        .lu()
        .solve(&b)
        .expect("I - gamma P is nonsingular for gamma < 1");
    Array1::from_iter(x.iter().copied())
}

/// Solve `(I - gamma P) v = r_pi` for the state value function.
pub(crate) fn solve_state_values(p: &Array2<f64>, r_pi: &Array1<f64>, gamma: f64) -> Array1<f64> {
    let n = p.nrows();
    let a = nalgebra::DMatrix::from_fn(n, n, |i, j| {
        let eye = if i == j { 1.0 } else { 0.0 };
        eye - gamma * p[[i, j]]
    });
    let b = nalgebra::DVector::from_fn(n, |i, _| r_pi[i]);
    let x = a
        .lu()
        .solve(&b)
        .expect("I - gamma P is nonsingular for gamma < 1");
    Array1::from_iter(x.iter().copied())
}

/// Discounted stationary state distribution, by dense linear solve.
pub fn state_occupancy(mdp: &TabularMdp, pi: &Policy) -> Result<Array1<f64>> {
    let p = policy_transition_matrix(mdp, pi)?;
    let mut d = solve_state_occupancy(&p, mdp.init_dist(), mdp.gamma());
    check_prob_slice("state occupancy", d.as_slice().expect("layout"), tol::OCCUPANCY)?;
    normalize_prob_slice(d.as_slice_mut().expect("layout"));
    Ok(d)
}

/// Discounted stationary state-action distribution:
/// `rho(s, a) = pi(a|s) d(s)`, packaged with its marginal.
pub fn state_action_occupancy(mdp: &TabularMdp, pi: &Policy) -> Result<OccupancyMeasure> {
    let d = state_occupancy(mdp, pi)?;
    let mut rho = Array2::zeros((mdp.n_states(), mdp.n_actions()));
    for s in 0..mdp.n_states() {
        for a in 0..mdp.n_actions() {
            rho[[s, a]] = pi.table()[[s, a]] * d[s];
        }
    }
    let occ = OccupancyMeasure::new(d, rho, mdp.gamma())?;
    debug_assert!(occ.flow_residual(mdp) <= tol::FLOW_RESIDUAL);
    Ok(occ)
}

/// Policy value `V = (1/(1-gamma)) <rho, r>`, cross-checked against the
/// value-function linear solve `<d0, v>`.
pub fn policy_value(mdp: &TabularMdp, pi: &Policy) -> Result<f64> {
    let occ = state_action_occupancy(mdp, pi)?;
    let via_occupancy = (&occ.rho * mdp.reward()).sum() / (1.0 - mdp.gamma());

    let p = policy_transition_matrix(mdp, pi)?;
    let r_pi = Array1::from_iter(
        (0..mdp.n_states()).map(|s| pi.row(s).dot(&mdp.reward().row(s))),
    );
    let v = solve_state_values(&p, &r_pi, mdp.gamma());
    let via_values = mdp.init_dist().dot(&v);

    let scale = 1.0 + via_occupancy.abs().max(via_values.abs());
    assert!(
        (via_occupancy - via_values).abs() <= tol::VALUE_CROSS_CHECK * scale,
        "policy value routes disagree: {via_occupancy} vs {via_values}"
    );
    Ok(via_occupancy)
}

/// Draw `m` i.i.d. samples from the discounted state-action occupancy.
///
/// Each sample draws a stopping time `t` with `P(t) = (1-gamma) gamma^t`,
/// rolls the chain for `t` steps, and emits the step-`t` pair together with
/// the successor state, so pairs and triples are exact occupancy draws.
pub fn sample_occupancy(mdp: &TabularMdp, pi: &Policy, m: usize, seed: u64) -> Result<Demonstrations> {
    check_policy_shape(mdp, pi)?;
    if m == 0 {
        return Err(Error::InvalidParameter("sample count must be >= 1".into()));
    }
    let ns = mdp.n_states();
    let na = mdp.n_actions();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let init = WeightedIndex::new(mdp.init_dist().iter().copied())
        .map_err(|e| Error::InvalidParameter(format!("init_dist: {e}")))?;
    let mut action_draws = Vec::with_capacity(ns);
    for s in 0..ns {
        action_draws.push(
            WeightedIndex::new(pi.row(s).iter().copied())
                .map_err(|e| Error::InvalidParameter(format!("policy row {s}: {e}")))?,
        );
    }
    let mut next_draws = Vec::with_capacity(ns * na);
    for s in 0..ns {
        for a in 0..na {
            next_draws.push(
                WeightedIndex::new(mdp.transition().slice(ndarray::s![s, a, ..]).iter().copied())
                    .map_err(|e| Error::InvalidParameter(format!("transition ({s}, {a}): {e}")))?,
            );
        }
    }
    let horizon = Geometric::new(1.0 - mdp.gamma())
        .map_err(|e| Error::InvalidParameter(format!("geometric horizon: {e}")))?;

    let mut pairs = Vec::with_capacity(m);
    let mut triples = Vec::with_capacity(m);
    for _ in 0..m {
        let t = horizon.sample(&mut rng);
        let mut s = init.sample(&mut rng);
        for _ in 0..t {
            let a = action_draws[s].sample(&mut rng);
            s = next_draws[pair_index(s, a, na)].sample(&mut rng);
        }
        let a = action_draws[s].sample(&mut rng);
        let s2 = next_draws[pair_index(s, a, na)].sample(&mut rng);
        pairs.push((s, a));
        triples.push((s, a, s2));
    }
    Demonstrations::new(ns, na, pairs, Some(triples))
}

/// Reinterpret the transition model as the agent of an augmented MDP.
///
/// Dual states are source `(s, a)` pairs, dual actions are source states.
/// Taking dual action `s'` from any dual state lands on `(s', a')` with
/// probability `pi_d(a'|s')`; the dual initial distribution is
/// `d0(s) pi_d(a|s)`. The dual reward is left identically zero so callers
/// (the adversarial model learner) can assign their own.
pub fn dual_mdp(mdp: &TabularMdp, pi_d: &Policy) -> Result<TabularMdp> {
    check_policy_shape(mdp, pi_d)?;
    let ns = mdp.n_states();
    let na = mdp.n_actions();
    let dual_states = ns * na;
    let dual_actions = ns;

    let mut transition = Array3::zeros((dual_states, dual_actions, dual_states));
    for k in 0..dual_states {
        for s2 in 0..dual_actions {
            for a2 in 0..na {
                transition[[k, s2, pair_index(s2, a2, na)]] = pi_d.table()[[s2, a2]];
            }
        }
    }
    let mut init = Array1::zeros(dual_states);
    for s in 0..ns {
        for a in 0..na {
            init[pair_index(s, a, na)] = mdp.init_dist()[s] * pi_d.table()[[s, a]];
        }
    }
    TabularMdp::new(
        transition,
        Array2::zeros((dual_states, dual_actions)),
        0.0,
        mdp.gamma(),
        init,
    )
}
