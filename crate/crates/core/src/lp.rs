//! Dense two-phase simplex for the small linear programs used by membership
//! tests, intersection checks and cutting-plane loops.
//!
//! Problems here have at most a few hundred variables and constraints, so a
//! dense tableau with Bland's anti-cycling rule is both adequate and easy to
//! audit. All variables are nonnegative; callers split free variables.

use crate::error::{Error, Result};

const PIVOT_EPS: f64 = 1e-11;
const COST_EPS: f64 = 1e-11;
const FEAS_EPS: f64 = 1e-9;
const MAX_PIVOTS: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
struct Row {
    coeffs: Vec<f64>,
    relation: Relation,
    rhs: f64,
}

/// `minimize c·x subject to rows, x ≥ 0`.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    num_vars: usize,
    objective: Vec<f64>,
    rows: Vec<Row>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

impl LinearProgram {
    pub fn minimize(objective: Vec<f64>) -> Self {
        LinearProgram {
            num_vars: objective.len(),
            objective,
            rows: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn add_constraint(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) {
        assert_eq!(coeffs.len(), self.num_vars, "constraint width must match variable count");
        self.rows.push(Row {
            coeffs,
            relation,
            rhs,
        });
    }

    pub fn solve(&self) -> Result<LpOutcome> {
        Tableau::build(self).run(self)
    }
}

struct Tableau {
    // m rows of width `cols + 1`; the last entry is the right-hand side.
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
    artificial_start: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.num_vars;
        let m = lp.rows.len();
        // Normalize every row to a nonnegative right-hand side.
        let rows: Vec<Row> = lp
            .rows
            .iter()
            .map(|r| {
                if r.rhs < 0.0 {
                    Row {
                        coeffs: r.coeffs.iter().map(|c| -c).collect(),
                        relation: match r.relation {
                            Relation::Le => Relation::Ge,
                            Relation::Ge => Relation::Le,
                            Relation::Eq => Relation::Eq,
                        },
                        rhs: -r.rhs,
                    }
                } else {
                    r.clone()
                }
            })
            .collect();
        let slack_count = rows.iter().filter(|r| r.relation != Relation::Eq).count();
        let artificial_count = rows.iter().filter(|r| r.relation != Relation::Le).count();
        let artificial_start = n + slack_count;
        let cols = artificial_start + artificial_count;
        let mut t = vec![vec![0.0; cols + 1]; m];
        let mut basis = vec![0; m];
        let (mut s, mut a) = (n, artificial_start);
        for (i, r) in rows.iter().enumerate() {
            t[i][..n].copy_from_slice(&r.coeffs);
            t[i][cols] = r.rhs;
            match r.relation {
                Relation::Le => {
                    t[i][s] = 1.0;
                    basis[i] = s;
                    s += 1;
                }
                Relation::Ge => {
                    t[i][s] = -1.0;
                    s += 1;
                    t[i][a] = 1.0;
                    basis[i] = a;
                    a += 1;
                }
                Relation::Eq => {
                    t[i][a] = 1.0;
                    basis[i] = a;
                    a += 1;
                }
            }
        }
        Tableau {
            t,
            basis,
            cols,
            artificial_start,
        }
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut r = cost.to_vec();
        r.push(0.0);
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                for (rj, tij) in r.iter_mut().zip(&self.t[i]) {
                    *rj -= cb * tij;
                }
            }
        }
        r
    }

    fn pivot(&mut self, obj: &mut [f64], row: usize, col: usize) {
        let p = self.t[row][col];
        for v in self.t[row].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.t[row].clone();
        for (i, r) in self.t.iter_mut().enumerate() {
            if i != row {
                let f = r[col];
                if f != 0.0 {
                    for (v, pv) in r.iter_mut().zip(&pivot_row) {
                        *v -= f * pv;
                    }
                    r[col] = 0.0;
                }
            }
        }
        let f = obj[col];
        if f != 0.0 {
            for (v, pv) in obj.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            obj[col] = 0.0;
        }
        self.basis[row] = col;
    }

    /// Bland's rule iterations; returns false if unbounded.
    fn iterate(&mut self, obj: &mut [f64], allowed: usize, budget: &mut usize) -> Result<bool> {
        let rhs = self.cols;
        loop {
            let Some(enter) = (0..allowed).find(|&j| obj[j] < -COST_EPS) else {
                return Ok(true);
            };
            let mut best: Option<(usize, f64)> = None;
            for i in 0..self.t.len() {
                let a = self.t[i][enter];
                if a > PIVOT_EPS {
                    let ratio = self.t[i][rhs].max(0.0) / a;
                    best = match best {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - 1e-14
                                || (ratio <= br + 1e-14 && self.basis[i] < self.basis[bi])
                            {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            let Some((leave, _)) = best else {
                return Ok(false);
            };
            self.pivot(obj, leave, enter);
            *budget = budget.checked_sub(1).ok_or_else(|| {
                Error::Lp(format!("pivot budget of {MAX_PIVOTS} exhausted"))
            })?;
        }
    }

    fn run(mut self, lp: &LinearProgram) -> Result<LpOutcome> {
        let mut budget = MAX_PIVOTS;
        let n = lp.num_vars;
        let rhs = self.cols;

        if self.artificial_start < self.cols {
            let mut cost = vec![0.0; self.cols];
            for c in cost.iter_mut().skip(self.artificial_start) {
                *c = 1.0;
            }
            let mut obj = self.reduced_costs(&cost);
            self.iterate(&mut obj, self.cols, &mut budget)?;
            let infeasibility = -obj[rhs];
            let scale = 1.0 + lp.rows.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max);
            if infeasibility > FEAS_EPS * scale {
                return Ok(LpOutcome::Infeasible);
            }
            // Drive remaining (zero-level) artificials out of the basis.
            let mut i = 0;
            while i < self.t.len() {
                if self.basis[i] >= self.artificial_start {
                    let col = (0..self.artificial_start)
                        .filter(|&j| self.t[i][j].abs() > 1e-9)
                        .max_by(|&a, &b| self.t[i][a].abs().total_cmp(&self.t[i][b].abs()));
                    match col {
                        Some(j) => {
                            self.pivot(&mut obj, i, j);
                            i += 1;
                        }
                        None => {
                            // Redundant constraint.
                            self.t.remove(i);
                            self.basis.remove(i);
                        }
                    }
                } else {
                    i += 1;
                }
            }
        }

        let mut cost = vec![0.0; self.cols];
        cost[..n].copy_from_slice(&lp.objective);
        let mut obj = self.reduced_costs(&cost);
        if !self.iterate(&mut obj, self.artificial_start, &mut budget)? {
            return Ok(LpOutcome::Unbounded);
        }
        let mut x = vec![0.0; n];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < n {
                x[b] = self.t[i][rhs].max(0.0);
            }
        }
        let value = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok(LpOutcome::Optimal { x, value })
    }
}

/// Minimum ℓ∞ distance between two generated polytopes:
/// `min t` over simplex weights `a`, `b` with `|V a − W b|∞ ≤ t`.
///
/// `left` and `right` are lists of points of equal dimension. Returns the
/// distance together with optimal weights.
pub fn polytope_linf_distance(left: &[&[f64]], right: &[&[f64]]) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let ka = left.len();
    let kb = right.len();
    let dim = left.first().map(|v| v.len()).unwrap_or(0);
    let nv = ka + kb + 1;
    let t_idx = ka + kb;
    let mut obj = vec![0.0; nv];
    obj[t_idx] = 1.0;
    let mut lp = LinearProgram::minimize(obj);
    let mut row = vec![0.0; nv];
    row[..ka].fill(1.0);
    lp.add_constraint(row, Relation::Eq, 1.0);
    let mut row = vec![0.0; nv];
    row[ka..ka + kb].fill(1.0);
    lp.add_constraint(row, Relation::Eq, 1.0);
    for x in 0..dim {
        for sign in [1.0, -1.0] {
            let mut row = vec![0.0; nv];
            for (i, v) in left.iter().enumerate() {
                row[i] = sign * v[x];
            }
            for (j, w) in right.iter().enumerate() {
                row[ka + j] = -sign * w[x];
            }
            row[t_idx] = -1.0;
            lp.add_constraint(row, Relation::Le, 0.0);
        }
    }
    match lp.solve()? {
        LpOutcome::Optimal { x, value } => {
            let a = normalize(&x[..ka]);
            let b = normalize(&x[ka..ka + kb]);
            Ok((value.max(0.0), a, b))
        }
        other => Err(Error::Lp(format!("distance program returned {other:?}"))),
    }
}

/// Projects LP output (which may carry 1e-16 noise) back onto the simplex.
pub(crate) fn normalize(w: &[f64]) -> Vec<f64> {
    let clipped: Vec<f64> = w.iter().map(|v| v.max(0.0)).collect();
    let s: f64 = clipped.iter().sum();
    if s > 0.0 {
        clipped.iter().map(|v| v / s).collect()
    } else {
        vec![1.0 / w.len() as f64; w.len()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn optimal(o: LpOutcome) -> (Vec<f64>, f64) {
        match o {
            LpOutcome::Optimal { x, value } => (x, value),
            other => panic!("expected optimum, got {other:?}"),
        }
    }

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y s.t. x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18  → (2, 6), 36
        let mut lp = LinearProgram::minimize(vec![-3.0, -5.0]);
        lp.add_constraint(vec![1.0, 0.0], Relation::Le, 4.0);
        lp.add_constraint(vec![0.0, 2.0], Relation::Le, 12.0);
        lp.add_constraint(vec![3.0, 2.0], Relation::Le, 18.0);
        let (x, v) = optimal(lp.solve().unwrap());
        assert!((v + 36.0).abs() < 1e-9);
        assert!((x[0] - 2.0).abs() < 1e-9 && (x[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn equality_and_ge_rows() {
        // min x + 2y s.t. x + y = 1, x ≥ 0.25, y ≥ 0.5  → (0.5, 0.5), 1.5
        let mut lp = LinearProgram::minimize(vec![1.0, 2.0]);
        lp.add_constraint(vec![1.0, 1.0], Relation::Eq, 1.0);
        lp.add_constraint(vec![1.0, 0.0], Relation::Ge, 0.25);
        lp.add_constraint(vec![0.0, 1.0], Relation::Ge, 0.5);
        let (_, v) = optimal(lp.solve().unwrap());
        assert!((v - 1.5).abs() < 1e-9);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::minimize(vec![1.0]);
        lp.add_constraint(vec![1.0], Relation::Le, 1.0);
        lp.add_constraint(vec![1.0], Relation::Ge, 2.0);
        assert_eq!(lp.solve().unwrap(), LpOutcome::Infeasible);
        let mut lp = LinearProgram::minimize(vec![-1.0]);
        lp.add_constraint(vec![1.0], Relation::Ge, 0.0);
        assert_eq!(lp.solve().unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::minimize(vec![1.0, 1.0]);
        lp.add_constraint(vec![1.0, 1.0], Relation::Eq, 1.0);
        lp.add_constraint(vec![2.0, 2.0], Relation::Eq, 2.0);
        let (_, v) = optimal(lp.solve().unwrap());
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn segment_distances() {
        let a0 = [0.0, 1.0];
        let a1 = [1.0 / 3.0, 2.0 / 3.0];
        let b0 = [2.0 / 3.0, 1.0 / 3.0];
        let b1 = [1.0, 0.0];
        let (d, wa, _) = polytope_linf_distance(&[&a0, &a1], &[&b0, &b1]).unwrap();
        assert!((d - 1.0 / 3.0).abs() < 1e-12);
        assert!(wa[1] > 1.0 - 1e-9);
        let c = [0.5, 0.5];
        let (d, _, _) = polytope_linf_distance(&[&a1, &b0], &[&c]).unwrap();
        assert!(d < 1e-12);
    }
}
