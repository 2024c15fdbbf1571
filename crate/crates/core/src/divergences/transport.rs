//! Ground metrics and exact Wasserstein-1 via the transport LP.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::lp::LinearProgram;
use crate::mdp::{array2_from_nested, array2_to_nested};
use crate::{Error, Result};

/// Pairwise distances over a finite sample space: symmetric, zero diagonal,
/// triangle inequality within `1e-9`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct MetricTable {
    d: Array2<f64>,
}

impl TryFrom<Vec<Vec<f64>>> for MetricTable {
    type Error = Error;
    fn try_from(v: Vec<Vec<f64>>) -> Result<Self> {
        let n = v.len();
        MetricTable::new(array2_from_nested(&v, n, n)?)
    }
}

impl From<MetricTable> for Vec<Vec<f64>> {
    fn from(m: MetricTable) -> Self {
        array2_to_nested(&m.d)
    }
}

impl MetricTable {
    pub fn new(d: Array2<f64>) -> Result<Self> {
        let n = d.nrows();
        if d.ncols() != n {
            return Err(Error::InvalidMetric("squareness".into()));
        }
        for i in 0..n {
            if d[[i, i]].abs() > 1e-12 {
                return Err(Error::InvalidMetric(format!("zero diagonal at {i}")));
            }
            for j in 0..n {
                if d[[i, j]] < 0.0 {
                    return Err(Error::InvalidMetric(format!("nonnegativity at ({i}, {j})")));
                }
                if (d[[i, j]] - d[[j, i]]).abs() > 1e-9 {
                    return Err(Error::InvalidMetric(format!("symmetry at ({i}, {j})")));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if d[[i, j]] > d[[i, k]] + d[[k, j]] + 1e-9 {
                        return Err(Error::InvalidMetric(format!(
                            "triangle inequality at ({i}, {j}) via {k}"
                        )));
                    }
                }
            }
        }
        let mut d = d;
        for i in 0..n {
            d[[i, i]] = 0.0;
        }
        Ok(Self { d })
    }

    /// The 0/1 discrete metric on `n` points.
    pub fn discrete(n: usize) -> Self {
        let mut d = Array2::from_elem((n, n), 1.0);
        for i in 0..n {
            d[[i, i]] = 0.0;
        }
        Self { d }
    }

    /// Absolute-difference metric of points on a line.
    pub fn from_line(points: &[f64]) -> Self {
        let n = points.len();
        let d = Array2::from_shape_fn((n, n), |(i, j)| (points[i] - points[j]).abs());
        Self { d }
    }

    pub fn len(&self) -> usize {
        self.d.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.d.nrows() == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[[i, j]]
    }

    pub fn diameter(&self) -> f64 {
        self.d.iter().cloned().fold(0.0, f64::max)
    }
}

/// Exact Wasserstein-1 between two distributions, with the dual value for a
/// reported duality gap.
#[derive(Debug, Clone, Copy)]
pub struct Wasserstein1 {
    pub cost: f64,
    pub dual_value: f64,
    pub duality_gap: f64,
}

/// Solve the transport LP (primal) and the potential LP (dual).
pub fn wasserstein_1(metric: &MetricTable, mu: &[f64], nu: &[f64]) -> Result<Wasserstein1> {
    let n = metric.len();
    if mu.len() != n || nu.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "distributions on {} and {} points, metric on {n}",
            mu.len(),
            nu.len()
        )));
    }

    // Primal: min sum c_ij x_ij with row sums mu and column sums nu.
    let mut objective = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            objective.push(metric.get(i, j));
        }
    }
    let mut lp = LinearProgram::minimize(objective);
    for i in 0..n {
        let mut row = vec![0.0; n * n];
        for j in 0..n {
            row[i * n + j] = 1.0;
        }
        lp.eq_constraint(row, mu[i]);
    }
    for j in 0..n {
        let mut row = vec![0.0; n * n];
        for i in 0..n {
            row[i * n + j] = 1.0;
        }
        lp.eq_constraint(row, nu[j]);
    }
    let primal = lp.solve()?;

    // Dual: max sum f_i (mu_i - nu_i) with f_i - f_j <= c_ij; f free via split.
    let mut objective = Vec::with_capacity(2 * n);
    for i in 0..n {
        objective.push(-(mu[i] - nu[i]));
    }
    for i in 0..n {
        objective.push(mu[i] - nu[i]);
    }
    let mut dual_lp = LinearProgram::minimize(objective);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let mut row = vec![0.0; 2 * n];
            row[i] = 1.0;
            row[n + i] = -1.0;
            row[j] = -1.0;
            row[n + j] = 1.0;
            dual_lp.le_constraint(row, metric.get(i, j));
        }
    }
    let dual = dual_lp.solve()?;
    let dual_value = -dual.objective;

    Ok(Wasserstein1 {
        cost: primal.objective,
        dual_value,
        duality_gap: (primal.objective - dual_value).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identical_distributions_cost_nothing() {
        let metric = MetricTable::from_line(&[0.0, 1.0, 3.0]);
        let p = [0.5, 0.25, 0.25];
        let w = wasserstein_1(&metric, &p, &p).unwrap();
        assert_abs_diff_eq!(w.cost, 0.0, epsilon = 1e-9);
        assert!(w.duality_gap <= crate::tol::TRANSPORT_DUALITY_GAP);
    }

    #[test]
    fn point_masses_pay_their_distance() {
        let metric = MetricTable::from_line(&[0.0, 2.5]);
        let w = wasserstein_1(&metric, &[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_abs_diff_eq!(w.cost, 2.5, epsilon = 1e-9);
        assert_abs_diff_eq!(w.dual_value, 2.5, epsilon = 1e-9);
    }

    #[test]
    fn discrete_metric_transport_is_total_variation() {
        let metric = MetricTable::discrete(4);
        let mu = [0.4, 0.3, 0.2, 0.1];
        let nu = [0.1, 0.2, 0.3, 0.4];
        let w = wasserstein_1(&metric, &mu, &nu).unwrap();
        let tv = super::super::total_variation(&mu, &nu);
        assert_abs_diff_eq!(w.cost, tv, epsilon = 1e-9);
    }

    #[test]
    fn line_metric_transport_matches_cdf_formula() {
        // On the line, W1 = integral |CDF_mu - CDF_nu|.
        let points = [0.0, 1.0, 2.0, 5.0];
        let metric = MetricTable::from_line(&points);
        let mu = [0.4, 0.1, 0.3, 0.2];
        let nu = [0.2, 0.3, 0.1, 0.4];
        let w = wasserstein_1(&metric, &mu, &nu).unwrap();
        let mut cdf_gap = 0.0;
        let mut acc = 0.0;
        for i in 0..3 {
            acc += mu[i] - nu[i];
            cdf_gap += acc.abs() * (points[i + 1] - points[i]);
        }
        assert_abs_diff_eq!(w.cost, cdf_gap, epsilon = 1e-9);
        assert!(w.duality_gap <= crate::tol::TRANSPORT_DUALITY_GAP);
    }

    #[test]
    fn metric_validation_catches_triangle_violation() {
        let mut d = Array2::zeros((3, 3));
        d[[0, 1]] = 1.0;
        d[[1, 0]] = 1.0;
        d[[1, 2]] = 1.0;
        d[[2, 1]] = 1.0;
        d[[0, 2]] = 5.0;
        d[[2, 0]] = 5.0;
        assert!(matches!(
            MetricTable::new(d),
            Err(Error::InvalidMetric(_))
        ));
    }
}
