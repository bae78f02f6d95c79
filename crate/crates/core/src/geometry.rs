//! Hyperplane projections, dual norms and projections onto faces of P.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::lp::{solve_lp, LpProblem, LpStatus};
use crate::model::{ForwardProblem, Norm, Vector};

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    pub point: Vector,
    /// `x̂ − point`.
    pub eps: Vector,
    /// Signed `(a_iᵀx̂ − b_i)/‖a_i‖_dual` for hyperplane projections;
    /// `‖eps‖_p` for feasible projections.
    pub distance: f64,
}

pub fn dual_norm(norm: Norm, v: &[f64]) -> f64 {
    norm.dual().eval(v)
}

/// A unit vector `u` (in `norm`) maximizing `uᵀa`.
pub fn unit_maximizer(norm: Norm, a: &[f64]) -> Result<Vector> {
    if a.iter().all(|v| *v == 0.0) {
        return Err(Error::ZeroVector);
    }
    let n = a.len();
    Ok(match norm {
        Norm::Linf => Vector::from_iterator(n, a.iter().map(|v| if *v < 0.0 { -1.0 } else { 1.0 })),
        Norm::L1 => {
            let mut j = 0;
            for k in 1..n {
                if a[k].abs() > a[j].abs() {
                    j = k;
                }
            }
            let mut u = Vector::zeros(n);
            u[j] = a[j].signum();
            u
        }
        Norm::L2 => {
            let v = Vector::from_column_slice(a);
            let len = v.norm();
            v / len
        }
    })
}

/// Closest point to `x` on `{aᵀx = b}` measured in `loss_norm`.
pub fn project_to_hyperplane(x: &Vector, a: &Vector, b: f64, loss_norm: Norm) -> Result<ProjectionResult> {
    let u = unit_maximizer(loss_norm, a.as_slice())?;
    let distance = (a.dot(x) - b) / dual_norm(loss_norm, a.as_slice());
    let point = x - &u * distance;
    Ok(ProjectionResult { eps: x - &point, point, distance })
}

/// Some point of the face `{x ∈ P : a_iᵀx = b_i}`, or `None` if it is empty.
pub fn face_point(fp: &ForwardProblem, row: usize) -> Option<Vector> {
    let n = fp.n();
    let mut lp = LpProblem::minimize(vec![0.0; n]);
    for j in 0..n {
        lp.set_free(j);
    }
    add_face_rows(&mut lp, fp, row, n);
    let sol = solve_lp(&lp);
    sol.is_optimal().then(|| Vector::from_vec(sol.x))
}

fn add_face_rows(lp: &mut LpProblem, fp: &ForwardProblem, row: usize, width: usize) {
    let n = fp.n();
    for k in 0..fp.m() {
        let mut coeffs = vec![0.0; width];
        coeffs[..n].copy_from_slice(fp.row(k).as_slice());
        if k == row {
            lp.add_eq(coeffs, fp.b()[k]);
        } else {
            lp.add_ge(coeffs, fp.b()[k]);
        }
    }
}

/// Nearest point to `x` in `p`-norm on the face of P cut out by `row`.
pub fn feasible_project(fp: &ForwardProblem, x: &Vector, row: usize, p: Norm) -> Result<ProjectionResult> {
    match p {
        Norm::L2 => {
            let start = face_point(fp, row).ok_or(Error::EmptyFace { row })?;
            project_l2_from(fp, x, row, &start)
        }
        _ => project_polyhedral(fp, x, row, p),
    }
}

/// p ∈ {1, ∞}: linearize the norm with auxiliary variables.
fn project_polyhedral(fp: &ForwardProblem, x: &Vector, row: usize, p: Norm) -> Result<ProjectionResult> {
    let n = fp.n();
    let n_aux = if p == Norm::L1 { n } else { 1 };
    let width = n + n_aux;
    let mut obj = vec![0.0; width];
    obj[n..].iter_mut().for_each(|v| *v = 1.0);
    let mut lp = LpProblem::minimize(obj);
    for j in 0..n {
        lp.set_free(j);
    }
    add_face_rows(&mut lp, fp, row, width);
    for j in 0..n {
        let t = if p == Norm::L1 { n + j } else { n };
        // t ≥ x̂_j − x_j and t ≥ x_j − x̂_j
        let mut up = vec![0.0; width];
        up[j] = 1.0;
        up[t] = 1.0;
        lp.add_ge(up, x[j]);
        let mut down = vec![0.0; width];
        down[j] = -1.0;
        down[t] = 1.0;
        lp.add_ge(down, -x[j]);
    }
    let sol = solve_lp(&lp);
    match sol.status {
        LpStatus::Optimal => {
            let point = Vector::from_column_slice(&sol.x[..n]);
            let eps = x - &point;
            Ok(ProjectionResult { distance: p.eval(eps.as_slice()), point, eps })
        }
        LpStatus::Infeasible => Err(Error::EmptyFace { row }),
        s => Err(Error::NumericFailure(format!("projection LP ended {s:?}"))),
    }
}

const ACTIVE_SET_ITERATIONS: usize = 100;

/// Euclidean projection onto the face by a primal active-set method started
/// from a feasible point of the face.
pub fn project_l2_from(fp: &ForwardProblem, x: &Vector, row: usize, start: &Vector) -> Result<ProjectionResult> {
    let m = fp.m();
    let scale = 1.0 + x.amax() + start.amax();
    let mut cur = start.clone();
    let mut working: Vec<usize> = vec![row];
    for _ in 0..ACTIVE_SET_ITERATIONS {
        let aw = DMatrix::from_fn(working.len(), fp.n(), |r, j| fp.a()[(working[r], j)]);
        let gram = &aw * aw.transpose();
        let g = &cur - x;
        let lambda = gram
            .clone()
            .lu()
            .solve(&(&aw * &g))
            .ok_or_else(|| Error::NumericFailure("singular working set".into()))?;
        // Step to the minimizer on the working-set subspace.
        let mut step = -&g + aw.transpose() * &lambda;
        if working.len() >= fp.n() {
            step.fill(0.0);
        }
        if step.amax() <= 1e-10 * (scale + g.amax()) {
            // Multipliers of the inequality rows in the working set.
            let mut worst: Option<(usize, f64)> = None;
            for (k, &r) in working.iter().enumerate() {
                if r == row {
                    continue;
                }
                if lambda[k] < -1e-12 && worst.is_none_or(|(_, v)| lambda[k] < v) {
                    worst = Some((k, lambda[k]));
                }
            }
            match worst {
                None => {
                    let eps = x - &cur;
                    return Ok(ProjectionResult { distance: eps.norm(), point: cur, eps });
                }
                Some((k, _)) => {
                    working.remove(k);
                }
            }
            continue;
        }
        let mut alpha = 1.0;
        let mut blocking = None;
        for k in 0..m {
            if working.contains(&k) {
                continue;
            }
            let ak = fp.row(k);
            let slope = ak.dot(&step);
            if slope < -1e-14 * scale {
                let a_k = ((fp.b()[k] - ak.dot(&cur)) / slope).max(0.0);
                if a_k < alpha {
                    alpha = a_k;
                    blocking = Some(k);
                }
            }
        }
        cur += &step * alpha;
        if let Some(k) = blocking {
            working.push(k);
        }
    }
    Err(Error::NumericFailure(format!("active-set projection on row {row} did not converge")))
}
