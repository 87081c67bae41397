//! Linear feasibility programs `A x <= b, x >= 0` and a dense phase-1
//! simplex with Bland's rule to decide them.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const DEFAULT_FEASIBILITY_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_PIVOTS: usize = 100_000;
const PIVOT_EPS: f64 = 1e-12;

/// What a row of the power-control program encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    /// Objective-level row of untrusted link `k`.
    Link(usize),
    /// Per-MN power budget.
    Power(usize),
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpRow {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
    pub kind: RowKind,
}

/// `rows[i].coeffs . x <= rows[i].rhs` for all `i`, with `x >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityLP {
    pub num_vars: usize,
    pub rows: Vec<LpRow>,
    /// `(mn, link)` of every variable when built from a power-control
    /// program; empty otherwise.
    pub var_map: Vec<(usize, usize)>,
}

impl FeasibilityLP {
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            rows: Vec::new(),
            var_map: Vec::new(),
        }
    }

    pub fn push(&mut self, coeffs: Vec<f64>, rhs: f64, kind: RowKind) {
        assert_eq!(coeffs.len(), self.num_vars, "row width mismatch");
        self.rows.push(LpRow { coeffs, rhs, kind });
    }

    pub fn is_well_formed(&self) -> bool {
        self.rows.iter().all(|r| {
            r.coeffs.len() == self.num_vars
                && r.rhs.is_finite()
                && r.coeffs.iter().all(|c| c.is_finite())
        })
    }

    /// Largest `A x - b` over the rows, each row divided by its largest
    /// absolute entry (coefficients times `|x|` and rhs).
    pub fn scaled_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for r in &self.rows {
            let lhs: f64 = r.coeffs.iter().zip(x).map(|(c, v)| c * v).sum();
            let scale = r
                .coeffs
                .iter()
                .zip(x)
                .map(|(c, v)| (c * v).abs())
                .fold(r.rhs.abs(), f64::max);
            if scale > 0.0 {
                worst = worst.max((lhs - r.rhs) / scale);
            }
        }
        for v in x {
            worst = worst.max(-v);
        }
        worst
    }
}

impl fmt::Display for FeasibilityLP {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# {} variables, {} rows, x >= 0", self.num_vars, self.rows.len())?;
        for (j, (m, k)) in self.var_map.iter().enumerate() {
            writeln!(f, "# x{j} = theta[{m}][{k}]")?;
        }
        for (i, row) in self.rows.iter().enumerate() {
            match row.kind {
                RowKind::Link(k) => write!(f, "r{i} link {k}:")?,
                RowKind::Power(m) => write!(f, "r{i} power {m}:")?,
                RowKind::Other => write!(f, "r{i}:")?,
            }
            let mut any = false;
            for (j, c) in row.coeffs.iter().enumerate() {
                if *c != 0.0 {
                    write!(f, " {c:+.6e} x{j}")?;
                    any = true;
                }
            }
            if !any {
                write!(f, " 0")?;
            }
            writeln!(f, " <= {:.6e}", row.rhs)?;
        }
        Ok(())
    }
}

/// Outcome of a feasibility check.
#[derive(Debug, Clone, PartialEq)]
pub enum Feasibility {
    /// A nonnegative point satisfying every row within tolerance.
    Feasible { witness: Vec<f64> },
    /// Minimum total violation (equilibrated units) stayed above tolerance.
    Infeasible { min_violation: f64 },
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible { .. })
    }

    pub fn witness(&self) -> Option<&[f64]> {
        match self {
            Feasibility::Feasible { witness } => Some(witness),
            Feasibility::Infeasible { .. } => None,
        }
    }
}

/// Decides feasibility of `lp` with the default pivot cap.
pub fn check_feasible(lp: &FeasibilityLP, tol: f64) -> Result<Feasibility> {
    check_feasible_with(lp, tol, DEFAULT_MAX_PIVOTS)
}

/// Phase-1 simplex on the equilibrated program: columns are scaled to unit
/// max-coefficient, then rows to unit max-entry (rhs included). The program is
/// feasible iff the minimum total violation is at most `tol`.
pub fn check_feasible_with(lp: &FeasibilityLP, tol: f64, max_pivots: usize) -> Result<Feasibility> {
    let n = lp.num_vars;
    let col_scale: Vec<f64> = (0..n)
        .map(|j| {
            let mx = lp.rows.iter().map(|r| r.coeffs[j].abs()).fold(0.0, f64::max);
            if mx > 0.0 {
                1.0 / mx
            } else {
                1.0
            }
        })
        .collect();

    let mut a = Vec::with_capacity(lp.rows.len());
    let mut b = Vec::with_capacity(lp.rows.len());
    for row in &lp.rows {
        let scaled: Vec<f64> = row.coeffs.iter().zip(&col_scale).map(|(c, s)| c * s).collect();
        let mx = scaled.iter().map(|c| c.abs()).fold(row.rhs.abs(), f64::max);
        if mx == 0.0 {
            continue;
        }
        a.push(scaled.iter().map(|c| c / mx).collect::<Vec<_>>());
        b.push(row.rhs / mx);
    }

    let (violation, y) = Tableau::new(&a, &b, n).minimize_violation(tol, max_pivots)?;
    if violation > tol {
        return Ok(Feasibility::Infeasible {
            min_violation: violation,
        });
    }
    let witness = y.iter().zip(&col_scale).map(|(v, s)| v * s).collect();
    Ok(Feasibility::Feasible { witness })
}

/// Dense tableau over columns `[x | slack | artificial]` plus the rhs.
struct Tableau {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    /// Phase-1 reduced costs per column.
    cost: Vec<f64>,
    objective: f64,
    num_structural: usize,
}

impl Tableau {
    fn new(a: &[Vec<f64>], b: &[f64], num_vars: usize) -> Self {
        let r = a.len();
        let flipped: Vec<usize> = (0..r).filter(|i| b[*i] < 0.0).collect();
        let width = num_vars + r + flipped.len();
        let mut rows = vec![vec![0.0; width]; r];
        let mut rhs = vec![0.0; r];
        let mut basis = vec![0; r];
        let mut cost = vec![0.0; width];
        let mut objective = 0.0;
        let mut next_art = num_vars + r;
        for i in 0..r {
            let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
            for j in 0..num_vars {
                rows[i][j] = sign * a[i][j];
            }
            rows[i][num_vars + i] = sign;
            rhs[i] = sign * b[i];
            if sign > 0.0 {
                basis[i] = num_vars + i;
            } else {
                rows[i][next_art] = 1.0;
                basis[i] = next_art;
                next_art += 1;
                // artificial costs 1; pricing out the basic artificial
                for j in 0..width {
                    cost[j] -= rows[i][j];
                }
                cost[basis[i]] += 1.0;
                objective += rhs[i];
            }
        }
        Self {
            rows,
            rhs,
            basis,
            cost,
            objective,
            num_structural: num_vars,
        }
    }

    fn minimize_violation(mut self, tol: f64, max_pivots: usize) -> Result<(f64, Vec<f64>)> {
        let mut pivots = 0;
        while self.objective > tol {
            // Bland: lowest-index improving column
            let Some(enter) = self.cost.iter().position(|c| *c < -PIVOT_EPS) else {
                break;
            };
            let mut leave: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            for i in 0..self.rows.len() {
                let p = self.rows[i][enter];
                if p > PIVOT_EPS {
                    let ratio = self.rhs[i] / p;
                    let better = match leave {
                        None => true,
                        Some(l) => {
                            ratio < best_ratio - 1e-15
                                || (ratio <= best_ratio + 1e-15 && self.basis[i] < self.basis[l])
                        }
                    };
                    if better {
                        best_ratio = best_ratio.min(ratio);
                        leave = Some(i);
                    }
                }
            }
            // phase-1 objective is bounded below, so a column with no
            // positive entry cannot improve it; drop it from pricing
            let Some(leave) = leave else {
                self.cost[enter] = 0.0;
                continue;
            };
            if pivots >= max_pivots {
                return Err(Error::NumericalBreakdown { iterations: pivots });
            }
            self.pivot(leave, enter);
            pivots += 1;
        }
        let mut x = vec![0.0; self.num_structural];
        for (i, var) in self.basis.iter().enumerate() {
            if *var < self.num_structural {
                x[*var] = self.rhs[i].max(0.0);
            }
        }
        Ok((self.objective.max(0.0), x))
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.rows[row][col];
        for v in self.rows[row].iter_mut() {
            *v /= p;
        }
        self.rhs[row] /= p;
        let pivot_row = self.rows[row].clone();
        let pivot_rhs = self.rhs[row];
        for i in 0..self.rows.len() {
            if i == row {
                continue;
            }
            let factor = self.rows[i][col];
            if factor != 0.0 {
                for (v, pv) in self.rows[i].iter_mut().zip(&pivot_row) {
                    *v -= factor * pv;
                }
                self.rows[i][col] = 0.0;
                self.rhs[i] = (self.rhs[i] - factor * pivot_rhs).max(0.0);
            }
        }
        let factor = self.cost[col];
        for (c, pv) in self.cost.iter_mut().zip(&pivot_row) {
            *c -= factor * pv;
        }
        self.cost[col] = 0.0;
        self.objective += factor * pivot_rhs;
        self.basis[row] = col;
    }
}
