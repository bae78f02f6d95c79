//! Cost-cone mode: the cost is `c = Cᵀα` with weights `α ≥ 0` over K known
//! objectives, so the fit imputes weights instead of a raw cost vector.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::lp::{lp_call_count, solve_forward, solve_lp, LpProblem, LpStatus};
use crate::model::{CostStructure, Diagnostics, EnsembleData, ForwardProblem, Matrix, Variant, Vector};
use crate::tol;

/// Observed data in either of the two accepted shapes.
#[derive(Debug, Clone, PartialEq)]
pub enum Observations {
    /// Decision vectors `x̂_q` of length n.
    Decisions(EnsembleData),
    /// Objective values `ẑ_q = C x̂_q` of length K.
    Objectives(EnsembleData),
}

impl Observations {
    pub fn len(&self) -> usize {
        match self {
            Observations::Decisions(d) | Observations::Objectives(d) => d.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The objective-value vectors, computing `C x̂_q` where needed.
    pub fn objective_values(&self, cs: &CostStructure) -> Result<Vec<Vector>> {
        let (data, want) = match self {
            Observations::Decisions(d) => (d, cs.c.ncols()),
            Observations::Objectives(d) => (d, cs.c.nrows()),
        };
        if let Some(q) = data.points().iter().position(|p| p.len() != want) {
            return Err(Error::Invalid(format!("observation {q} has length {}, expected {want}", data.points()[q].len())));
        }
        Ok(match self {
            Observations::Decisions(d) => d.points().iter().map(|x| &cs.c * x).collect(),
            Observations::Objectives(d) => d.points().to_vec(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructuredFit {
    pub variant: Variant,
    pub alpha: Vector,
    pub c_star: Vector,
    pub y_star: Vector,
    /// Per-point gaps (ADG) or value ratios (RDG).
    pub eps: Vec<f64>,
    pub z_star: f64,
    pub diagnostics: Diagnostics,
}

fn structure(fp: &ForwardProblem) -> Result<&CostStructure> {
    let cs = fp.cost_structure().ok_or(Error::MissingCostStructure)?;
    if cs.c.ncols() != fp.n() {
        return Err(Error::Invalid(format!("C has {} columns but n = {}", cs.c.ncols(), fp.n())));
    }
    Ok(cs)
}

/// Adds dual feasibility `Cᵀα − Aᵀy ≥ 0` (or `= 0` for free x) over
/// variables `[α (K), y (m), …]`.
fn add_dual_rows(lp: &mut LpProblem, fp: &ForwardProblem, c: &Matrix, width: usize) {
    let (k, m) = (c.nrows(), fp.m());
    for j in 0..fp.n() {
        let mut row = vec![0.0; width];
        for r in 0..k {
            row[r] = c[(r, j)];
        }
        for i in 0..m {
            row[k + i] = -fp.a()[(i, j)];
        }
        if fp.x_nonneg() {
            lp.add_ge(row, 0.0);
        } else {
            lp.add_eq(row, 0.0);
        }
    }
}

fn snap(v: f64) -> f64 {
    if v.abs() <= tol::ZERO_RHS {
        0.0
    } else {
        v
    }
}

/// Single LP with `(Cᵀα)ᵀ1 = 1`, which is `‖Cᵀα‖₁ = 1` when C and α are nonnegative.
pub fn solve_structured_adg(fp: &ForwardProblem, obs: &Observations) -> Result<StructuredFit> {
    let cs = structure(fp)?;
    if cs.c.iter().any(|v| *v < 0.0) {
        return Err(Error::StructureNotNonneg);
    }
    let zhat = obs.objective_values(cs)?;
    let calls0 = lp_call_count();
    let (k, m, q) = (cs.c.nrows(), fp.m(), zhat.len());
    let width = k + m + q;
    let mut obj = vec![0.0; width];
    obj[k + m..].iter_mut().for_each(|v| *v = 1.0);
    let mut lp = LpProblem::minimize(obj);
    add_dual_rows(&mut lp, fp, &cs.c, width);
    for (t, z) in zhat.iter().enumerate() {
        // τ_q ≥ ±(αᵀẑ_q − bᵀy)
        let mut gap = vec![0.0; width];
        for r in 0..k {
            gap[r] = z[r];
        }
        for i in 0..m {
            gap[k + i] = -fp.b()[i];
        }
        let mut up: Vec<f64> = gap.iter().map(|v| -v).collect();
        up[k + m + t] = 1.0;
        gap[k + m + t] = 1.0;
        lp.add_ge(up, 0.0);
        lp.add_ge(gap, 0.0);
    }
    let mut norm_row = vec![0.0; width];
    for r in 0..k {
        norm_row[r] = cs.c.row(r).sum();
    }
    lp.add_eq(norm_row, 1.0);
    let sol = solve_lp(&lp);
    if sol.status != LpStatus::Optimal {
        return Err(Error::NoFiniteSolution);
    }
    let alpha = Vector::from_iterator(k, sol.x[..k].iter().map(|v| v.max(0.0)));
    let y = Vector::from_iterator(m, sol.x[k..k + m].iter().map(|v| v.max(0.0)));
    let by = fp.b().dot(&y);
    let eps: Vec<f64> = zhat.iter().map(|z| snap(alpha.dot(z) - by)).collect();
    Ok(StructuredFit {
        variant: Variant::Adg,
        c_star: cs.c.transpose() * &alpha,
        alpha,
        y_star: y,
        z_star: eps.iter().map(|e| e.abs()).sum(),
        eps,
        diagnostics: Diagnostics { lp_calls: lp_call_count() - calls0, branches: 1, notes: Vec::new() },
    })
}

/// LP relaxation with `bᵀy = 1`, minimizing `Σ|αᵀẑ_q − 1|`; the answer is then
/// scaled to `‖Cᵀα‖₁ = 1`, which leaves the ratios `αᵀẑ_q / bᵀy` unchanged.
pub fn solve_structured_rdg(fp: &ForwardProblem, obs: &Observations) -> Result<StructuredFit> {
    let cs = structure(fp)?;
    let zhat = obs.objective_values(cs)?;
    let calls0 = lp_call_count();
    let (k, m, q) = (cs.c.nrows(), fp.m(), zhat.len());
    let width = k + m + q;
    let mut obj = vec![0.0; width];
    obj[k + m..].iter_mut().for_each(|v| *v = 1.0);
    let mut lp = LpProblem::minimize(obj);
    add_dual_rows(&mut lp, fp, &cs.c, width);
    for (t, z) in zhat.iter().enumerate() {
        // τ_q ≥ ±(αᵀẑ_q − 1)
        let mut up = vec![0.0; width];
        let mut down = vec![0.0; width];
        for r in 0..k {
            up[r] = -z[r];
            down[r] = z[r];
        }
        up[k + m + t] = 1.0;
        down[k + m + t] = 1.0;
        lp.add_ge(up, -1.0);
        lp.add_ge(down, 1.0);
    }
    let mut by = vec![0.0; width];
    for i in 0..m {
        by[k + i] = fp.b()[i];
    }
    lp.add_eq(by, 1.0);
    let sol = solve_lp(&lp);
    if sol.status != LpStatus::Optimal {
        return Err(Error::NoFiniteSolution);
    }
    let alpha = Vector::from_iterator(k, sol.x[..k].iter().map(|v| v.max(0.0)));
    let y = Vector::from_iterator(m, sol.x[k..k + m].iter().map(|v| v.max(0.0)));
    let c = cs.c.transpose() * &alpha;
    let size: f64 = c.iter().map(|v| v.abs()).sum();
    if alpha.iter().all(|v| *v <= tol::ZERO_COST) || size <= tol::ZERO_COST {
        return Err(Error::StructuredDegenerate);
    }
    let by = fp.b().dot(&y);
    let eps: Vec<f64> = zhat.iter().map(|z| alpha.dot(z) / by).collect();
    Ok(StructuredFit {
        variant: Variant::Rdg,
        alpha: alpha / size,
        c_star: c / size,
        y_star: y / size,
        z_star: eps.iter().map(|e| snap(e - 1.0).abs()).sum(),
        eps,
        diagnostics: Diagnostics { lp_calls: lp_call_count() - calls0, branches: 1, notes: Vec::new() },
    })
}

/// Forward solve for the cost `Cᵀα`.
pub fn forward_with_alpha(fp: &ForwardProblem, alpha: &Vector) -> Result<Vector> {
    let cs = structure(fp)?;
    if alpha.len() != cs.c.nrows() {
        return Err(Error::Invalid(format!("alpha has length {}, expected {}", alpha.len(), cs.c.nrows())));
    }
    let sol = solve_forward(fp, &(cs.c.transpose() * alpha))?;
    match sol.status {
        LpStatus::Optimal => Ok(Vector::from_vec(sol.x)),
        LpStatus::Infeasible => Err(Error::InfeasibleForward),
        LpStatus::Unbounded => Err(Error::UnboundedForward),
        LpStatus::Stalled => Err(Error::NumericFailure("forward LP stalled".into())),
    }
}

/// Q forward optima under weights `normalize(max(0, α + noise·g_q))`, with
/// `g_q` standard normal from a ChaCha8 stream seeded by `seed`.
pub fn gen_ensemble(fp: &ForwardProblem, true_alpha: &Vector, q: usize, noise: f64, seed: u64) -> Result<EnsembleData> {
    if q == 0 {
        return Err(Error::Invalid("need at least one observation".into()));
    }
    if !noise.is_finite() || noise < 0.0 {
        return Err(Error::Invalid("noise must be a finite nonnegative number".into()));
    }
    if true_alpha.iter().any(|v| !v.is_finite() || *v < 0.0) || true_alpha.sum() <= 0.0 {
        return Err(Error::Invalid("true weights must be nonnegative and not all zero".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(q);
    for _ in 0..q {
        let mut a = true_alpha.map(|v| v);
        for v in a.iter_mut() {
            let g: f64 = StandardNormal.sample(&mut rng);
            *v = (*v + noise * g).max(0.0);
        }
        let total = a.sum();
        let a = if total > 0.0 { a / total } else { true_alpha / true_alpha.sum() };
        points.push(forward_with_alpha(fp, &a)?);
    }
    Ok(EnsembleData::new(points))
}
