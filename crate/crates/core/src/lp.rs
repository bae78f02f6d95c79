//! Dense two-phase primal simplex with Bland's rule.
//!
//! Problems are stated as `min cᵀx` over rows with `≤`, `≥` or `=` relations
//! and per-variable bounds. Variables default to `[0, ∞)`.

use std::cell::Cell;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{ForwardProblem, Vector};
use crate::tol;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    objective: Vec<f64>,
    constraints: Vec<Constraint>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl LpProblem {
    /// A minimization over `objective.len()` nonnegative variables.
    pub fn minimize(objective: Vec<f64>) -> Self {
        let n = objective.len();
        LpProblem { objective, constraints: Vec::new(), lower: vec![0.0; n], upper: vec![f64::INFINITY; n] }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn bounds(&self, j: usize) -> (f64, f64) {
        (self.lower[j], self.upper[j])
    }

    pub fn add(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) -> &mut Self {
        assert_eq!(coeffs.len(), self.num_vars(), "constraint width");
        self.constraints.push(Constraint { coeffs, relation, rhs });
        self
    }

    pub fn add_ge(&mut self, coeffs: Vec<f64>, rhs: f64) -> &mut Self {
        self.add(coeffs, Relation::Ge, rhs)
    }

    pub fn add_le(&mut self, coeffs: Vec<f64>, rhs: f64) -> &mut Self {
        self.add(coeffs, Relation::Le, rhs)
    }

    pub fn add_eq(&mut self, coeffs: Vec<f64>, rhs: f64) -> &mut Self {
        self.add(coeffs, Relation::Eq, rhs)
    }

    pub fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) -> &mut Self {
        self.lower[j] = lower;
        self.upper[j] = upper;
        self
    }

    pub fn set_free(&mut self, j: usize) -> &mut Self {
        self.set_bounds(j, f64::NEG_INFINITY, f64::INFINITY)
    }

    fn check(&self) -> Result<()> {
        let n = self.num_vars();
        if self.objective.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("non-finite LP objective".into()));
        }
        for c in &self.constraints {
            if c.coeffs.len() != n || c.coeffs.iter().any(|v| !v.is_finite()) || !c.rhs.is_finite() {
                return Err(Error::Invalid("malformed LP constraint".into()));
            }
        }
        for j in 0..n {
            let (lo, hi) = (self.lower[j], self.upper[j]);
            if lo.is_nan() || hi.is_nan() || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(Error::Invalid(format!("bad bounds on LP variable {j}")));
            }
        }
        Ok(())
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for c in &self.constraints {
            let lhs: f64 = c.coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
            let v = match c.relation {
                Relation::Le => lhs - c.rhs,
                Relation::Ge => c.rhs - lhs,
                Relation::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(v);
        }
        for (j, v) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Iteration cap reached; only possible through floating-point cycling.
    Stalled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal point; empty unless optimal.
    pub x: Vec<f64>,
    pub objective: f64,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

thread_local! {
    static LP_CALLS: Cell<usize> = const { Cell::new(0) };
}

/// Number of `solve_lp` calls made on this thread so far.
pub fn lp_call_count() -> usize {
    LP_CALLS.with(|c| c.get())
}

pub fn reset_lp_call_count() {
    LP_CALLS.with(|c| c.set(0));
}

const MAX_ITERATIONS: usize = 200_000;

enum VarMap {
    Shift { col: usize, lower: f64 },
    Mirror { col: usize, upper: f64 },
    Split { pos: usize, neg: usize },
}

/// Solves the LP. Panics on malformed input (non-finite data, width mismatch).
pub fn solve_lp(p: &LpProblem) -> LpSolution {
    LP_CALLS.with(|c| c.set(c.get() + 1));
    if let Err(e) = p.check() {
        panic!("solve_lp: {e}");
    }
    StandardForm::build(p).solve(p)
}

struct StandardForm {
    maps: Vec<VarMap>,
    n_struct: usize,
    rows: Vec<Vec<f64>>,
    rels: Vec<Relation>,
    rhs: Vec<f64>,
    cost: Vec<f64>,
}

impl StandardForm {
    fn build(p: &LpProblem) -> Self {
        let mut maps = Vec::with_capacity(p.num_vars());
        let mut n_struct = 0;
        for j in 0..p.num_vars() {
            let (lo, hi) = p.bounds(j);
            if lo.is_finite() {
                maps.push(VarMap::Shift { col: n_struct, lower: lo });
                n_struct += 1;
            } else if hi.is_finite() {
                maps.push(VarMap::Mirror { col: n_struct, upper: hi });
                n_struct += 1;
            } else {
                maps.push(VarMap::Split { pos: n_struct, neg: n_struct + 1 });
                n_struct += 2;
            }
        }
        let mut cost = vec![0.0; n_struct];
        for (j, m) in maps.iter().enumerate() {
            let c = p.objective[j];
            match *m {
                VarMap::Shift { col, .. } => cost[col] += c,
                VarMap::Mirror { col, .. } => cost[col] -= c,
                VarMap::Split { pos, neg } => {
                    cost[pos] += c;
                    cost[neg] -= c;
                }
            }
        }
        let mut rows = Vec::new();
        let mut rels = Vec::new();
        let mut rhs = Vec::new();
        for con in p.constraints() {
            let mut row = vec![0.0; n_struct];
            let mut r = con.rhs;
            for (j, m) in maps.iter().enumerate() {
                let a = con.coeffs[j];
                if a == 0.0 {
                    continue;
                }
                match *m {
                    VarMap::Shift { col, lower } => {
                        row[col] += a;
                        r -= a * lower;
                    }
                    VarMap::Mirror { col, upper } => {
                        row[col] -= a;
                        r -= a * upper;
                    }
                    VarMap::Split { pos, neg } => {
                        row[pos] += a;
                        row[neg] -= a;
                    }
                }
            }
            rows.push(row);
            rels.push(con.relation);
            rhs.push(r);
        }
        for (j, m) in maps.iter().enumerate() {
            let (_, hi) = p.bounds(j);
            if let VarMap::Shift { col, lower } = *m {
                if hi.is_finite() {
                    let mut row = vec![0.0; n_struct];
                    row[col] = 1.0;
                    rows.push(row);
                    rels.push(Relation::Le);
                    rhs.push(hi - lower);
                }
            }
        }
        for i in 0..rows.len() {
            if rhs[i] < 0.0 {
                rhs[i] = -rhs[i];
                rows[i].iter_mut().for_each(|v| *v = -*v);
                rels[i] = match rels[i] {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
            }
        }
        StandardForm { maps, n_struct, rows, rels, rhs, cost }
    }

    fn solve(self, p: &LpProblem) -> LpSolution {
        let m = self.rows.len();
        let n_slack = self.rels.iter().filter(|r| **r != Relation::Eq).count();
        let n_art = self.rels.iter().filter(|r| **r != Relation::Le).count();
        let n_real = self.n_struct + n_slack;
        let ncols = n_real + n_art;
        let mut tab = Tableau::new(m, ncols);
        let mut basis = vec![0usize; m];
        let (mut s, mut a) = (self.n_struct, n_real);
        for i in 0..m {
            tab.row_mut(i)[..self.n_struct].copy_from_slice(&self.rows[i]);
            tab.set_rhs(i, self.rhs[i]);
            match self.rels[i] {
                Relation::Le => {
                    tab.set(i, s, 1.0);
                    basis[i] = s;
                    s += 1;
                }
                Relation::Ge => {
                    tab.set(i, s, -1.0);
                    s += 1;
                    tab.set(i, a, 1.0);
                    basis[i] = a;
                    a += 1;
                }
                Relation::Eq => {
                    tab.set(i, a, 1.0);
                    basis[i] = a;
                    a += 1;
                }
            }
        }
        // Standard-form matrix of the real columns, kept for refinement.
        let original = tab.clone();

        let mut phase1 = vec![0.0; ncols];
        phase1[n_real..].iter_mut().for_each(|v| *v = 1.0);
        let mut allowed = vec![true; ncols];
        if n_art > 0 {
            match tab.run(&mut basis, &phase1, &allowed) {
                Outcome::Optimal => {}
                Outcome::Unbounded => unreachable!("phase one is bounded below"),
                Outcome::Stalled => return LpSolution { status: LpStatus::Stalled, x: vec![], objective: f64::NAN },
            }
            let infeas: f64 = (0..tab.m).filter(|&r| basis[r] >= n_real).map(|r| tab.rhs(r)).sum();
            let scale = 1.0 + self.rhs.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
            if infeas > tol::LP * scale {
                return LpSolution { status: LpStatus::Infeasible, x: vec![], objective: f64::NAN };
            }
            // Pivot remaining artificials out, dropping rows that turn out redundant.
            let mut keep: Vec<usize> = (0..tab.m).collect();
            let mut r = 0;
            while r < tab.m {
                if basis[r] >= n_real {
                    let row = tab.row(r);
                    let mut best: Option<usize> = None;
                    for j in 0..n_real {
                        if row[j].abs() > tol::PIVOT && best.is_none_or(|b| row[j].abs() > row[b].abs()) {
                            best = Some(j);
                        }
                    }
                    match best {
                        Some(j) => {
                            tab.pivot(r, j);
                            basis[r] = j;
                            r += 1;
                        }
                        None => {
                            tab.remove_row(r);
                            basis.remove(r);
                            keep.remove(r);
                        }
                    }
                } else {
                    r += 1;
                }
            }
            allowed[n_real..].iter_mut().for_each(|v| *v = false);
            self.finish(p, tab, basis, &allowed, original.select_rows(&keep))
        } else {
            self.finish(p, tab, basis, &allowed, original)
        }
    }

    fn finish(
        &self,
        p: &LpProblem,
        mut tab: Tableau,
        mut basis: Vec<usize>,
        allowed: &[bool],
        original: Tableau,
    ) -> LpSolution {
        let mut cost = vec![0.0; tab.ncols];
        cost[..self.n_struct].copy_from_slice(&self.cost);
        match tab.run(&mut basis, &cost, allowed) {
            Outcome::Optimal => {}
            Outcome::Unbounded => {
                return LpSolution { status: LpStatus::Unbounded, x: vec![], objective: f64::NEG_INFINITY };
            }
            Outcome::Stalled => return LpSolution { status: LpStatus::Stalled, x: vec![], objective: f64::NAN },
        }
        let mut values = vec![0.0; tab.ncols];
        for (r, &j) in basis.iter().enumerate() {
            values[j] = tab.rhs(r).max(0.0);
        }
        if let Some(refined) = refine(&original, &basis) {
            for (r, &j) in basis.iter().enumerate() {
                values[j] = refined[r].max(0.0);
            }
        }
        let x: Vec<f64> = self
            .maps
            .iter()
            .map(|m| match *m {
                VarMap::Shift { col, lower } => lower + values[col],
                VarMap::Mirror { col, upper } => upper - values[col],
                VarMap::Split { pos, neg } => values[pos] - values[neg],
            })
            .collect();
        let objective = p.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        LpSolution { status: LpStatus::Optimal, x, objective }
    }
}

/// Re-solves `B x_B = rhs` from the untouched standard-form rows to shed
/// accumulated pivoting error. Returns `None` if B is numerically singular
/// or the refined point is worse.
fn refine(original: &Tableau, basis: &[usize]) -> Option<Vec<f64>> {
    let m = original.m;
    if m == 0 {
        return Some(vec![]);
    }
    let bmat = DMatrix::from_fn(m, m, |r, k| original.get(r, basis[k]));
    let rhs = DVector::from_fn(m, |r, _| original.rhs(r));
    let sol = bmat.clone().lu().solve(&rhs)?;
    let resid = (&bmat * &sol - &rhs).amax();
    if !sol.iter().all(|v| v.is_finite()) || resid > 1e-9 * (1.0 + rhs.amax()) || sol.iter().any(|v| *v < -1e-7) {
        return None;
    }
    Some(sol.iter().copied().collect())
}

enum Outcome {
    Optimal,
    Unbounded,
    Stalled,
}

#[derive(Clone)]
struct Tableau {
    m: usize,
    ncols: usize,
    /// Row-major, each row `ncols` coefficients followed by the rhs.
    data: Vec<f64>,
}

impl Tableau {
    fn new(m: usize, ncols: usize) -> Self {
        Tableau { m, ncols, data: vec![0.0; m * (ncols + 1)] }
    }

    fn width(&self) -> usize {
        self.ncols + 1
    }

    fn row(&self, r: usize) -> &[f64] {
        let w = self.width();
        &self.data[r * w..(r + 1) * w]
    }

    fn row_mut(&mut self, r: usize) -> &mut [f64] {
        let w = self.width();
        &mut self.data[r * w..(r + 1) * w]
    }

    fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width() + c]
    }

    fn set(&mut self, r: usize, c: usize, v: f64) {
        let w = self.width();
        self.data[r * w + c] = v;
    }

    fn rhs(&self, r: usize) -> f64 {
        self.get(r, self.ncols)
    }

    fn set_rhs(&mut self, r: usize, v: f64) {
        let c = self.ncols;
        self.set(r, c, v);
    }

    fn remove_row(&mut self, r: usize) {
        let w = self.width();
        self.data.drain(r * w..(r + 1) * w);
        self.m -= 1;
    }

    fn select_rows(&self, keep: &[usize]) -> Tableau {
        let mut out = Tableau::new(keep.len(), self.ncols);
        for (k, &r) in keep.iter().enumerate() {
            out.row_mut(k).copy_from_slice(self.row(r));
        }
        out
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width();
        let pv = self.get(pr, pc);
        for v in self.row_mut(pr) {
            *v /= pv;
        }
        let prow: Vec<f64> = self.row(pr).to_vec();
        for r in 0..self.m {
            if r == pr {
                continue;
            }
            let f = self.data[r * w + pc];
            if f != 0.0 {
                let row = &mut self.data[r * w..(r + 1) * w];
                for (v, p) in row.iter_mut().zip(&prow) {
                    *v -= f * p;
                }
                row[pc] = 0.0;
            }
        }
    }

    /// Primal simplex from the current basis with Bland's rule.
    fn run(&mut self, basis: &mut [usize], cost: &[f64], allowed: &[bool]) -> Outcome {
        let w = self.width();
        // Reduced costs d_j = c_j − c_Bᵀ T_j.
        let mut d = cost.to_vec();
        d.push(0.0);
        for r in 0..self.m {
            let cb = cost[basis[r]];
            if cb != 0.0 {
                for (j, v) in self.row(r).iter().enumerate() {
                    d[j] -= cb * v;
                }
            }
        }
        for _ in 0..MAX_ITERATIONS {
            let entering = (0..self.ncols).find(|&j| allowed[j] && d[j] < -tol::LP);
            let Some(pc) = entering else {
                return Outcome::Optimal;
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.m {
                let a = self.data[r * w + pc];
                if a > tol::PIVOT {
                    let ratio = self.data[r * w + self.ncols] / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((br, bratio)) => {
                            let slack = 1e-12 * (1.0 + bratio.abs());
                            if ratio < bratio - slack || (ratio <= bratio + slack && basis[r] < basis[br]) {
                                Some((r, ratio))
                            } else {
                                Some((br, bratio))
                            }
                        }
                    };
                }
            }
            let Some((pr, _)) = leave else {
                return Outcome::Unbounded;
            };
            self.pivot(pr, pc);
            let f = d[pc];
            let prow = self.row(pr);
            for (dj, p) in d.iter_mut().zip(prow) {
                *dj -= f * p;
            }
            d[pc] = 0.0;
            basis[pr] = pc;
        }
        Outcome::Stalled
    }
}

/// `min cᵀx  s.t.  Ax ≥ b`, plus `x ≥ 0` when the problem asks for it.
pub fn solve_forward(fp: &ForwardProblem, c: &Vector) -> Result<LpSolution> {
    if c.len() != fp.n() {
        return Err(Error::Invalid(format!("cost has length {} but n = {}", c.len(), fp.n())));
    }
    let mut lp = LpProblem::minimize(c.iter().copied().collect());
    if !fp.x_nonneg() {
        for j in 0..fp.n() {
            lp.set_free(j);
        }
    }
    for i in 0..fp.m() {
        lp.add_ge(fp.a().row(i).iter().copied().collect(), fp.b()[i]);
    }
    Ok(solve_lp(&lp))
}

/// Minimizes `Σ|v_q − t|` over `t ∈ [lo, hi]`: the lower median, clamped.
pub fn min_abs_deviation(values: &[f64], lo: f64, hi: f64) -> (f64, f64) {
    assert!(!values.is_empty(), "min_abs_deviation of no values");
    assert!(lo <= hi, "empty interval");
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let t = sorted[(sorted.len() - 1) / 2].clamp(lo, hi);
    let loss = values.iter().map(|v| (v - t).abs()).sum();
    (t, loss)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> ForwardProblem {
        ForwardProblem::from_rows(
            &[vec![-1.0, 0.0], vec![0.0, -1.0], vec![1.0, 0.0], vec![0.0, 1.0]],
            &[-7.0, -7.0, 1.0, 1.0],
        )
    }

    #[test]
    fn facet_optimum() {
        let s = solve_forward(&square(), &Vector::from_vec(vec![0.0, 1.0])).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 1.0).abs() < 1e-12);
        assert!((s.x[1] - 1.0).abs() < 1e-12);
        assert!(s.x[0] >= 1.0 - 1e-12 && s.x[0] <= 7.0 + 1e-12);
    }

    #[test]
    fn top_of_square() {
        let s = solve_forward(&square(), &Vector::from_vec(vec![0.0, -1.0])).unwrap();
        assert!((s.objective + 7.0).abs() < 1e-12);
    }

    #[test]
    fn zero_cost_returns_feasible_point() {
        let s = solve_forward(&square(), &Vector::zeros(2)).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_eq!(s.objective, 0.0);
        assert!(square().is_feasible(&Vector::from_vec(s.x), 1e-9));
    }

    #[test]
    fn unbounded_ray() {
        let mut lp = LpProblem::minimize(vec![-1.0]);
        lp.set_free(0).add_ge(vec![1.0], 1.0);
        assert_eq!(solve_lp(&lp).status, LpStatus::Unbounded);
    }

    #[test]
    fn infeasible_box() {
        let mut lp = LpProblem::minimize(vec![0.0]);
        lp.set_free(0).add_ge(vec![1.0], 1.0).add_le(vec![1.0], 0.0);
        assert_eq!(solve_lp(&lp).status, LpStatus::Infeasible);
    }

    #[test]
    fn bounds_and_equalities() {
        // min x0 + 2 x1 with x0 ∈ [-3, 5], x1 ≤ 4 free below, x0 + x1 = 1, x1 ≥ -2
        let mut lp = LpProblem::minimize(vec![1.0, 2.0]);
        lp.set_bounds(0, -3.0, 5.0).set_bounds(1, f64::NEG_INFINITY, 4.0);
        lp.add_eq(vec![1.0, 1.0], 1.0).add_ge(vec![0.0, 1.0], -2.0);
        let s = solve_lp(&lp);
        assert_eq!(s.status, LpStatus::Optimal);
        // x1 = 1 - x0, objective = x0 + 2 - 2x0 = 2 - x0, so x0 = 3 at x1 = -2.
        assert!((s.x[0] - 3.0).abs() < 1e-12 && (s.x[1] + 2.0).abs() < 1e-12);
        assert!((s.objective + 1.0).abs() < 1e-12);
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LpProblem::minimize(vec![1.0, 1.0]);
        lp.add_eq(vec![1.0, 1.0], 2.0).add_eq(vec![2.0, 2.0], 4.0).add_ge(vec![1.0, 0.0], 0.5);
        let s = solve_lp(&lp);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 2.0).abs() < 1e-12);
        assert!(lp.max_violation(&s.x) < 1e-9);
    }

    #[test]
    fn call_counter_counts() {
        reset_lp_call_count();
        let lp = LpProblem::minimize(vec![1.0]);
        solve_lp(&lp);
        solve_lp(&lp);
        assert_eq!(lp_call_count(), 2);
    }

    #[test]
    fn median_examples() {
        let inf = f64::INFINITY;
        assert_eq!(min_abs_deviation(&[1.0, 2.0, 9.0], -inf, inf), (2.0, 8.0));
        assert_eq!(min_abs_deviation(&[1.0, 2.0, 9.0], -inf, 1.0), (1.0, 9.0));
        assert_eq!(min_abs_deviation(&[5.0], 0.0, 3.0), (3.0, 2.0));
    }
}
