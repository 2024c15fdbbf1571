//! Finite discriminator classes and the quantities defined over them:
//! the induced distance, empirical Rademacher complexity, the estimation
//! term of the generalization bound, and the compatible coefficient.
//!
//! Classes are explicit bounded tables over a finite sample space, so the
//! supremum over the class is literal enumeration and the compatible
//! coefficient is a small L1-minimization LP.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::transport::MetricTable;
use crate::lp::LinearProgram;
use crate::{tol, Error, Result};

/// Exact enumeration is capped at `2^20` sign patterns.
const EXACT_RADEMACHER_MAX: usize = 20;

/// A finite family of bounded real-valued tables over a flat sample space
/// (state-action pairs, or state-action-next-state triples).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ClassJson", into = "ClassJson")]
pub struct DiscriminatorClass {
    members: Vec<Vec<f64>>,
    delta: f64,
    includes_zero: bool,
}

#[derive(Serialize, Deserialize, Clone)]
struct ClassJson {
    delta: f64,
    includes_zero: bool,
    members: Vec<Vec<f64>>,
}

impl TryFrom<ClassJson> for DiscriminatorClass {
    type Error = Error;
    fn try_from(j: ClassJson) -> Result<Self> {
        let class = DiscriminatorClass::new(j.members, j.delta)?;
        if j.includes_zero && !class.includes_zero {
            return Err(Error::InvalidParameter(
                "includes_zero set but no member is identically zero".into(),
            ));
        }
        Ok(class)
    }
}

impl From<DiscriminatorClass> for ClassJson {
    fn from(c: DiscriminatorClass) -> Self {
        ClassJson {
            delta: c.delta,
            includes_zero: c.includes_zero,
            members: c.members,
        }
    }
}

impl DiscriminatorClass {
    /// Validate member bounds and detect the zero member.
    pub fn new(members: Vec<Vec<f64>>, delta: f64) -> Result<Self> {
        if delta < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "delta must be nonnegative, got {delta}"
            )));
        }
        let space = members.first().map(|m| m.len()).unwrap_or(0);
        let mut includes_zero = false;
        for (index, member) in members.iter().enumerate() {
            if member.len() != space {
                return Err(Error::ShapeMismatch(format!(
                    "member {index} has {} entries, want {space}",
                    member.len()
                )));
            }
            for &value in member {
                if value.abs() > delta + 1e-12 {
                    return Err(Error::MemberOutOfBounds {
                        index,
                        value,
                        delta,
                    });
                }
            }
            includes_zero |= member.iter().all(|&v| v == 0.0);
        }
        Ok(Self {
            members,
            delta,
            includes_zero,
        })
    }

    /// Append the zero function when absent.
    pub fn with_zero(mut self) -> Self {
        if !self.includes_zero {
            let space = self.space_size();
            self.members.push(vec![0.0; space]);
            self.includes_zero = true;
        }
        self
    }

    /// `{ +delta e_z, -delta e_z : z }` plus the zero function; separates any
    /// two distributions that differ anywhere.
    pub fn indicators(space: usize, delta: f64) -> Self {
        let mut members = Vec::with_capacity(2 * space + 1);
        for z in 0..space {
            for sign in [1.0, -1.0] {
                let mut m = vec![0.0; space];
                m[z] = sign * delta;
                members.push(m);
            }
        }
        Self::new(members, delta)
            .expect("indicator members are in range")
            .with_zero()
    }

    /// Every `{-delta, +delta}`-valued table on the space (2^space members).
    /// The induced distance equals `delta * ||mu - nu||_1`.
    pub fn sign_tables(space: usize, delta: f64) -> Result<Self> {
        if space > 20 {
            return Err(Error::InvalidParameter(format!(
                "sign-table class on {space} points would have 2^{space} members"
            )));
        }
        let mut members = Vec::with_capacity(1 << space);
        for mask in 0u32..(1u32 << space) {
            let m: Vec<f64> = (0..space)
                .map(|z| if mask >> z & 1 == 1 { delta } else { -delta })
                .collect();
            members.push(m);
        }
        Self::new(members, delta)
    }

    /// `count` tables drawn uniformly from `[-delta, delta]`, plus zero.
    pub fn random_bounded(space: usize, delta: f64, count: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let members: Vec<Vec<f64>> = (0..count)
            .map(|_| {
                (0..space)
                    .map(|_| rng.random_range(-delta..=delta))
                    .collect()
            })
            .collect();
        Self::new(members, delta)
            .expect("sampled members are in range")
            .with_zero()
    }

    /// Discretized 1-Lipschitz ball: the anchor potentials `±d(., z)` for
    /// each point `z`, plus zero. Each anchor is 1-Lipschitz by the triangle
    /// inequality, and they are exactly the potentials that attain the dual
    /// transport optimum between point masses.
    pub fn lipschitz_anchors(metric: &MetricTable) -> Self {
        let n = metric.len();
        let delta = metric.diameter();
        let mut members = Vec::with_capacity(2 * n + 1);
        for z in 0..n {
            let anchor: Vec<f64> = (0..n).map(|i| metric.get(i, z)).collect();
            members.push(anchor.iter().map(|v| -v).collect());
            members.push(anchor);
        }
        Self::new(members, delta)
            .expect("anchors bounded by diameter")
            .with_zero()
    }

    pub fn members(&self) -> &[Vec<f64>] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn space_size(&self) -> usize {
        self.members.first().map(|m| m.len()).unwrap_or(0)
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn includes_zero(&self) -> bool {
        self.includes_zero
    }

    /// Mean of a member under a distribution given as a flat table.
    fn mean(&self, member: usize, dist: &[f64]) -> f64 {
        self.members[member]
            .iter()
            .zip(dist)
            .map(|(d, p)| d * p)
            .sum()
    }
}

/// `sup_D E_mu[D] - E_nu[D]` over the class, with the attaining member index.
pub fn nn_distance(class: &DiscriminatorClass, mu: &[f64], nu: &[f64]) -> Result<(f64, usize)> {
    if class.is_empty() {
        return Err(Error::EmptyClass);
    }
    if mu.len() != class.space_size() || nu.len() != class.space_size() {
        return Err(Error::ShapeMismatch(format!(
            "distributions on {} and {} points, class on {}",
            mu.len(),
            nu.len(),
            class.space_size()
        )));
    }
    let mut best = f64::NEG_INFINITY;
    let mut arg = 0;
    for k in 0..class.len() {
        let value = class.mean(k, mu) - class.mean(k, nu);
        if value > best {
            best = value;
            arg = k;
        }
    }
    Ok((best, arg))
}

/// How the expectation over sign patterns is evaluated.
#[derive(Debug, Clone, Copy)]
pub enum RademacherMode {
    /// Exact enumeration of all `2^m` patterns (m <= 20).
    Exact,
    /// Sample mean over `draws` patterns, with a reported standard error.
    MonteCarlo { draws: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy)]
pub struct RademacherEstimate {
    pub value: f64,
    pub std_error: Option<f64>,
}

/// Empirical Rademacher complexity of the class on a sample of flat
/// sample-space indices: `E_sigma[sup_D (1/m) sum_i sigma_i D(z_i)]`.
pub fn empirical_rademacher(
    class: &DiscriminatorClass,
    sample: &[usize],
    mode: RademacherMode,
) -> Result<RademacherEstimate> {
    if class.is_empty() {
        return Err(Error::EmptyClass);
    }
    let m = sample.len();
    if m == 0 {
        return Err(Error::EmptyDemonstrations);
    }
    let space = class.space_size();
    for &z in sample {
        if z >= space {
            return Err(Error::IndexOutOfRange(format!(
                "sample index {z} (space size {space})"
            )));
        }
    }
    // values[k][i] = D_k(z_i)
    let values: Vec<Vec<f64>> = class
        .members()
        .iter()
        .map(|member| sample.iter().map(|&z| member[z]).collect())
        .collect();

    match mode {
        RademacherMode::Exact => {
            if m > EXACT_RADEMACHER_MAX {
                return Err(Error::RademacherCapacity {
                    max: EXACT_RADEMACHER_MAX,
                    got: m,
                });
            }
            // Gray-code walk over sign patterns: one sign flips per step, so
            // each member's signed sum updates in O(1).
            let mut signs = vec![1.0; m];
            let mut sums: Vec<f64> = values.iter().map(|v| v.iter().sum()).collect();
            let sup = |sums: &[f64]| sums.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut total = sup(&sums);
            let patterns = 1u64 << m;
            for g in 1..patterns {
                let bit = g.trailing_zeros() as usize;
                signs[bit] = -signs[bit];
                for (k, v) in values.iter().enumerate() {
                    sums[k] += 2.0 * signs[bit] * v[bit];
                }
                total += sup(&sums);
            }
            Ok(RademacherEstimate {
                value: total / (patterns as f64 * m as f64),
                std_error: None,
            })
        }
        RademacherMode::MonteCarlo { draws, seed } => {
            if draws == 0 {
                return Err(Error::InvalidParameter(
                    "monte_carlo draws must be >= 1".into(),
                ));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut mean = 0.0;
            let mut sq = 0.0;
            for draw in 0..draws {
                let signs: Vec<f64> = (0..m)
                    .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
                    .collect();
                let mut best = f64::NEG_INFINITY;
                for v in &values {
                    let s: f64 = v.iter().zip(&signs).map(|(a, b)| a * b).sum();
                    best = best.max(s);
                }
                let x = best / m as f64;
                // Welford running moments.
                let delta = x - mean;
                mean += delta / (draw + 1) as f64;
                sq += delta * (x - mean);
            }
            let std_error = if draws > 1 {
                Some((sq / (draws - 1) as f64).sqrt() / (draws as f64).sqrt())
            } else {
                None
            };
            Ok(RademacherEstimate {
                value: mean,
                std_error,
            })
        }
    }
}

/// Closed-form confidence slice of the estimation term:
/// `12 delta sqrt(ln(2/conf) / m)`.
pub fn estm_confidence_term(delta_bound: f64, m: usize, confidence: f64) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidParameter("m must be >= 1".into()));
    }
    if !(0.0..1.0).contains(&confidence) || confidence == 0.0 {
        return Err(Error::InvalidParameter(format!(
            "confidence level must lie in (0, 1), got {confidence}"
        )));
    }
    Ok(12.0 * delta_bound * ((2.0 / confidence).ln() / m as f64).sqrt())
}

#[derive(Debug, Clone, Copy)]
pub struct EstmBreakdown {
    pub rademacher_e: f64,
    pub rademacher_i: f64,
    pub confidence: f64,
    pub total: f64,
}

/// Estimation term of the generalization bound:
/// `2 R_e + 2 R_i + 12 delta sqrt(ln(2/conf)/m)` over two equal-size samples.
pub fn estm_term_detailed(
    class: &DiscriminatorClass,
    sample_e: &[usize],
    sample_i: &[usize],
    confidence: f64,
    mode: RademacherMode,
) -> Result<EstmBreakdown> {
    if sample_e.len() != sample_i.len() {
        return Err(Error::ShapeMismatch(format!(
            "sample sizes differ: {} vs {}",
            sample_e.len(),
            sample_i.len()
        )));
    }
    let mode_i = match mode {
        RademacherMode::Exact => RademacherMode::Exact,
        RademacherMode::MonteCarlo { draws, seed } => RademacherMode::MonteCarlo {
            draws,
            seed: seed.wrapping_add(0x9E37_79B9),
        },
    };
    let r_e = empirical_rademacher(class, sample_e, mode)?.value;
    let r_i = empirical_rademacher(class, sample_i, mode_i)?.value;
    let confidence_term = estm_confidence_term(class.delta(), sample_e.len(), confidence)?;
    Ok(EstmBreakdown {
        rademacher_e: r_e,
        rademacher_i: r_i,
        confidence: confidence_term,
        total: 2.0 * r_e + 2.0 * r_i + confidence_term,
    })
}

pub fn estm_term(
    class: &DiscriminatorClass,
    sample_e: &[usize],
    sample_i: &[usize],
    confidence: f64,
    mode: RademacherMode,
) -> Result<f64> {
    Ok(estm_term_detailed(class, sample_e, sample_i, confidence, mode)?.total)
}

/// L1-minimal representation of a reward in the affine span of the class.
#[derive(Debug, Clone)]
pub struct SpanCertificate {
    /// `sum_i |c_i|` at the optimum.
    pub norm: f64,
    /// One coefficient per member.
    pub coefficients: Vec<f64>,
    /// The free constant.
    pub intercept: f64,
    /// Max-abs reconstruction residual.
    pub residual: f64,
}

/// `min sum |c_i|` subject to `sum_i c_i D_i + c_0 = r` pointwise.
///
/// Infeasibility means the reward is outside the affine span, which is the
/// hypothesis failure the caller needs to surface.
pub fn compatible_coefficient(
    class: &DiscriminatorClass,
    reward: &[f64],
) -> Result<SpanCertificate> {
    if class.is_empty() {
        return Err(Error::EmptyClass);
    }
    let space = class.space_size();
    if reward.len() != space {
        return Err(Error::ShapeMismatch(format!(
            "reward has {} entries, class space is {space}",
            reward.len()
        )));
    }
    let k = class.len();
    // Variables: c_i split into +/- parts, then the free intercept split.
    let n_vars = 2 * k + 2;
    let mut objective = vec![1.0; 2 * k];
    objective.extend_from_slice(&[0.0, 0.0]);
    let mut lp = LinearProgram::minimize(objective);
    for z in 0..space {
        let mut row = vec![0.0; n_vars];
        for (i, member) in class.members().iter().enumerate() {
            row[i] = member[z];
            row[k + i] = -member[z];
        }
        row[2 * k] = 1.0;
        row[2 * k + 1] = -1.0;
        lp.eq_constraint(row, reward[z]);
    }
    let sol = match lp.solve() {
        Ok(sol) => sol,
        Err(Error::LpInfeasible(_)) => return Err(Error::SpanInfeasible),
        Err(e) => return Err(e),
    };

    let coefficients: Vec<f64> = (0..k).map(|i| sol.x[i] - sol.x[k + i]).collect();
    let intercept = sol.x[2 * k] - sol.x[2 * k + 1];
    let mut residual: f64 = 0.0;
    for z in 0..space {
        let mut recon = intercept;
        for (i, member) in class.members().iter().enumerate() {
            recon += coefficients[i] * member[z];
        }
        residual = residual.max((recon - reward[z]).abs());
    }
    if residual > tol::SPAN_RESIDUAL {
        return Err(Error::LpInfeasible(format!(
            "span certificate residual {residual:.3e}"
        )));
    }
    Ok(SpanCertificate {
        norm: coefficients.iter().map(|c| c.abs()).sum(),
        coefficients,
        intercept,
        residual,
    })
}
