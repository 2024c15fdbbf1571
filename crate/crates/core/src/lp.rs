//! Dense two-phase tableau simplex.
//!
//! Shared by the transport LP, the compatible-coefficient LP, and the
//! occupancy-matching LP. Problem sizes here stay in the low thousands of
//! variables, where an exact vertex certificate from a dense tableau beats
//! an interior-point method that would only get close to the face.
//!
//! Pivoting uses Dantzig's rule with a largest-element tie-break while the
//! objective makes progress, and falls back to Bland's rule (smallest
//! indices) once it stalls, which restores the termination guarantee on
//! the highly degenerate flow polytopes. Every returned vertex is audited
//! against the original constraints.

use crate::{tol, Error, Result};

/// Minimum pivot magnitude before a row is considered blocking; a second
/// pass at the feasibility tolerance runs before declaring unboundedness.
const PIVOT_TOL: f64 = 1e-7;

/// Pivots without objective progress before switching to Bland's rule.
const STALL_LIMIT: usize = 64;

/// `min c . x` subject to `A_eq x = b_eq`, `A_le x <= b_le`, `x >= 0`.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    n_vars: usize,
    objective: Vec<f64>,
    eq: Vec<(Vec<f64>, f64)>,
    le: Vec<(Vec<f64>, f64)>,
}

/// Optimal vertex returned by [`LinearProgram::solve`].
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

impl LinearProgram {
    pub fn minimize(objective: Vec<f64>) -> Self {
        Self {
            n_vars: objective.len(),
            objective,
            eq: Vec::new(),
            le: Vec::new(),
        }
    }

    pub fn eq_constraint(&mut self, coeffs: Vec<f64>, rhs: f64) {
        assert_eq!(coeffs.len(), self.n_vars, "constraint width");
        self.eq.push((coeffs, rhs));
    }

    pub fn le_constraint(&mut self, coeffs: Vec<f64>, rhs: f64) {
        assert_eq!(coeffs.len(), self.n_vars, "constraint width");
        self.le.push((coeffs, rhs));
    }

    pub fn solve(&self) -> Result<LpSolution> {
        let sol = Tableau::build(self)?.run()?;
        self.audit(&sol)?;
        Ok(sol)
    }

    /// Residual check of the returned vertex against the original data; a
    /// violation means the tableau degraded numerically.
    fn audit(&self, sol: &LpSolution) -> Result<()> {
        for (coeffs, rhs) in &self.eq {
            let dot: f64 = coeffs.iter().zip(&sol.x).map(|(a, x)| a * x).sum();
            let scale = 1.0 + rhs.abs() + dot.abs();
            if (dot - rhs).abs() > 1e-6 * scale {
                return Err(Error::LpNumerical(format!(
                    "equality residual {:.3e}",
                    (dot - rhs).abs()
                )));
            }
        }
        for (coeffs, rhs) in &self.le {
            let dot: f64 = coeffs.iter().zip(&sol.x).map(|(a, x)| a * x).sum();
            let scale = 1.0 + rhs.abs() + dot.abs();
            if dot - rhs > 1e-6 * scale {
                return Err(Error::LpNumerical(format!(
                    "inequality residual {:.3e}",
                    dot - rhs
                )));
            }
        }
        Ok(())
    }
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    m: usize,
    n_total: usize,
    artificial_start: usize,
    basis: Vec<usize>,
    objective: Vec<f64>,
    pivots: usize,
    max_pivots: usize,
}

impl Tableau {
    fn build(p: &LinearProgram) -> Result<Tableau> {
        let n = p.n_vars;
        let n_slack = p.le.len();
        let m = p.eq.len() + p.le.len();
        let n_structural = n + n_slack;

        // Row form: [structural | slack | rhs], rhs kept nonnegative.
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut slack_col = n;
        let mut slack_usable = Vec::with_capacity(m);
        for (coeffs, rhs) in &p.eq {
            let mut row = vec![0.0; n_structural + 1];
            row[..n].copy_from_slice(coeffs);
            row[n_structural] = *rhs;
            if *rhs < 0.0 {
                for v in row.iter_mut() {
                    *v = -*v;
                }
            }
            rows.push(row);
            slack_usable.push(None);
        }
        for (coeffs, rhs) in &p.le {
            let mut row = vec![0.0; n_structural + 1];
            row[..n].copy_from_slice(coeffs);
            row[slack_col] = 1.0;
            row[n_structural] = *rhs;
            let usable = if *rhs < 0.0 {
                for v in row.iter_mut() {
                    *v = -*v;
                }
                None
            } else {
                Some(slack_col)
            };
            rows.push(row);
            slack_usable.push(usable);
            slack_col += 1;
        }

        // Artificial variables for rows whose slack cannot seed the basis.
        let mut basis = vec![usize::MAX; m];
        let mut n_total = n_structural;
        let mut columns_to_add = Vec::new();
        for (i, usable) in slack_usable.iter().enumerate() {
            match usable {
                Some(col) => basis[i] = *col,
                None => {
                    basis[i] = n_total;
                    columns_to_add.push(i);
                    n_total += 1;
                }
            }
        }
        for row in rows.iter_mut() {
            let rhs = row.pop().expect("rhs present");
            row.resize(n_total, 0.0);
            row.push(rhs);
        }
        for (k, &i) in columns_to_add.iter().enumerate() {
            rows[i][n_structural + k] = 1.0;
        }

        let max_pivots = 200 * (m + n_total + 16);
        Ok(Tableau {
            rows,
            m,
            n_total,
            artificial_start: n_structural,
            basis,
            objective: p.objective.clone(),
            pivots: 0,
            max_pivots,
        })
    }

    fn run(mut self) -> Result<LpSolution> {
        if self.artificial_start < self.n_total {
            self.phase_one()?;
        }
        self.phase_two()
    }

    /// Minimize the sum of artificials, then purge them from the basis.
    fn phase_one(&mut self) -> Result<()> {
        let mut cost = vec![0.0; self.n_total];
        for c in cost[self.artificial_start..].iter_mut() {
            *c = 1.0;
        }
        let value = self.optimize(&cost, Some(self.artificial_start))?;
        if value > 1e-7 {
            return Err(Error::LpInfeasible(format!(
                "phase-1 residual {value:.3e}"
            )));
        }
        // Drive zero-level artificials out on the largest available pivot;
        // rows with no structural entry left are redundant and dropped.
        let mut i = 0;
        while i < self.m {
            if self.basis[i] >= self.artificial_start {
                let pivot_col = (0..self.artificial_start)
                    .filter(|&j| self.rows[i][j].abs() > tol::LP_FEASIBILITY)
                    .max_by(|&a, &b| {
                        self.rows[i][a]
                            .abs()
                            .partial_cmp(&self.rows[i][b].abs())
                            .expect("finite")
                    });
                match pivot_col {
                    Some(j) => self.pivot(i, j),
                    None => {
                        self.rows.remove(i);
                        self.basis.remove(i);
                        self.m -= 1;
                        continue;
                    }
                }
            }
            i += 1;
        }
        // Remove artificial columns.
        for row in self.rows.iter_mut() {
            let rhs = row[self.n_total];
            row.truncate(self.artificial_start);
            row.push(rhs);
        }
        self.n_total = self.artificial_start;
        Ok(())
    }

    fn phase_two(&mut self) -> Result<LpSolution> {
        let mut cost = self.objective.clone();
        cost.resize(self.n_total, 0.0);
        let objective = self.optimize(&cost, None)?;
        let mut x = vec![0.0; self.objective.len()];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < x.len() {
                x[b] = self.rows[i][self.n_total];
            }
        }
        Ok(LpSolution {
            x,
            objective,
            pivots: self.pivots,
        })
    }

    /// Reduced costs priced from scratch against the current tableau, which
    /// avoids incremental drift over long pivot sequences.
    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut z: Vec<f64> = cost.to_vec();
        z.push(0.0);
        for (i, &b) in self.basis.iter().enumerate() {
            let c_b = cost[b];
            if c_b != 0.0 {
                for (zj, row_j) in z.iter_mut().zip(&self.rows[i]) {
                    *zj -= c_b * row_j;
                }
            }
        }
        z
    }

    /// `block_from`: when set (phase 1), artificial columns at or past that
    /// index may never re-enter the basis.
    fn optimize(&mut self, cost: &[f64], block_from: Option<usize>) -> Result<f64> {
        let rhs_col = self.n_total;
        let enterable = block_from.unwrap_or(usize::MAX).min(self.n_total);
        let mut stall = 0usize;
        let mut last_objective = f64::INFINITY;

        loop {
            let z = self.reduced_costs(cost);
            let objective = -z[rhs_col];
            if objective < last_objective - 1e-12 {
                stall = 0;
                last_objective = objective;
            } else {
                stall += 1;
            }
            let bland = stall > STALL_LIMIT;

            let col = if bland {
                (0..enterable).find(|&j| z[j] < -tol::LP_FEASIBILITY)
            } else {
                let mut best: Option<usize> = None;
                for j in 0..enterable {
                    if z[j] < -tol::LP_FEASIBILITY && best.is_none_or(|b| z[j] < z[b]) {
                        best = Some(j);
                    }
                }
                best
            };
            let Some(col) = col else {
                return Ok(objective);
            };

            let Some(row) = self.leaving_row(col, bland) else {
                return Err(Error::LpUnbounded);
            };
            self.pivot(row, col);
            self.pivots += 1;
            if self.pivots > self.max_pivots {
                return Err(Error::LpIterationLimit(self.pivots));
            }
        }
    }

    /// Ratio test. Rows become blocking at `PIVOT_TOL`; if none qualify, a
    /// second pass at the feasibility tolerance runs before the caller may
    /// conclude unboundedness. Ties go to the largest pivot element, or to
    /// the smallest basis index under Bland's rule.
    fn leaving_row(&self, col: usize, bland: bool) -> Option<usize> {
        let rhs_col = self.n_total;
        for eligibility in [PIVOT_TOL, tol::LP_FEASIBILITY] {
            let mut min_ratio = f64::INFINITY;
            for i in 0..self.m {
                let a = self.rows[i][col];
                if a > eligibility {
                    min_ratio = min_ratio.min(self.rows[i][rhs_col].max(0.0) / a);
                }
            }
            if !min_ratio.is_finite() {
                continue;
            }
            let cutoff = min_ratio + 1e-9 * (1.0 + min_ratio.abs());
            let mut choice: Option<usize> = None;
            for i in 0..self.m {
                let a = self.rows[i][col];
                if a > eligibility && self.rows[i][rhs_col].max(0.0) / a <= cutoff {
                    let better = match choice {
                        None => true,
                        Some(prev) => {
                            if bland {
                                self.basis[i] < self.basis[prev]
                            } else {
                                a > self.rows[prev][col]
                            }
                        }
                    };
                    if better {
                        choice = Some(i);
                    }
                }
            }
            if choice.is_some() {
                return choice;
            }
        }
        None
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let rhs_col = self.n_total;
        let inv = 1.0 / self.rows[row][col];
        for v in self.rows[row].iter_mut() {
            *v *= inv;
        }
        self.rows[row][col] = 1.0;
        for i in 0..self.m {
            if i == row {
                continue;
            }
            let factor = self.rows[i][col];
            if factor == 0.0 {
                continue;
            }
            for j in 0..=rhs_col {
                let update = self.rows[row][j];
                self.rows[i][j] -= factor * update;
            }
            self.rows[i][col] = 0.0;
        }
        // Feasibility can dip by rounding on degenerate pivots; clamp.
        for i in 0..self.m {
            if self.rows[i][rhs_col] < 0.0 && self.rows[i][rhs_col] > -1e-11 {
                self.rows[i][rhs_col] = 0.0;
            }
        }
        self.basis[row] = col;
    }
}
