//! Relative duality gap: minimize `Σ_q |cᵀx̂_q / bᵀy − 1|` over dual-feasible
//! `(c, y)` with `c ≠ 0`.
//!
//! The general path first solves three LPs with the norm constraint dropped
//! (`bᵀy = 1`, `bᵀy = −1`, and `bᵀy = 0` with the points on the hyperplane).
//! When all three return `c = 0`, a norm floor `K*` from an auxiliary LP
//! battery is imposed branch by branch.

use serde::{Deserialize, Serialize};

use crate::adg::mixed_point_construction;
use crate::branches::{add_branch, equality_branches, floor_branches, masked_out, Branch};
use crate::error::{Error, Result};
use crate::lp::{lp_call_count, solve_lp, LpProblem, LpStatus};
use crate::model::{
    classify, Diagnostics, EnsembleData, FeasibilityTag, FitConfig, FitResult, ForwardProblem, Norm, PointErrors,
    SolutionPath, Variant, Vector,
};
use crate::tol;

/// Norm floor used when the auxiliary battery is unbounded.
pub const HEURISTIC_DELTA: f64 = 1e-6;

/// The three ways `bᵀy` can be pinned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RdgKind {
    /// `bᵀy = 1`.
    Plus,
    /// `bᵀy = −1`.
    Minus,
    /// `bᵀy = 0`, `1ᵀy = 1`, every point on `cᵀx = 0`.
    Zero,
}

impl RdgKind {
    pub const ALL: [RdgKind; 3] = [RdgKind::Plus, RdgKind::Minus, RdgKind::Zero];
}

pub fn solve_rdg(fp: &ForwardProblem, data: &EnsembleData, cfg: &FitConfig) -> Result<FitResult> {
    cfg.check(fp.n())?;
    if fp.b().iter().all(|v| v.abs() <= tol::ZERO_RHS) {
        return Err(Error::BIsZero);
    }
    if cfg.unconstrained() {
        match classify(fp, data, tol::FEAS).tag {
            FeasibilityTag::AllFeasible => return rdg_row_fit(fp, data, cfg.normalization, SolutionPath::FeasibleCentroid),
            // The reversed problem has the same ratios a_iᵀx̂/b_i, so the row
            // choice is made on the original rows directly.
            FeasibilityTag::AllBelow => return rdg_row_fit(fp, data, cfg.normalization, SolutionPath::ReversedCentroid),
            FeasibilityTag::Mixed if data.len() == 1 => {
                match mixed_point_construction(fp, &data.points()[0], cfg.normalization) {
                    Ok(fit) => {
                        return Ok(FitResult {
                            variant: Variant::Rdg,
                            eps: PointErrors::Scalar(vec![1.0]),
                            z_star: 0.0,
                            ..fit
                        })
                    }
                    Err(Error::DegeneratePair) => {}
                    Err(e) => return Err(e),
                }
            }
            FeasibilityTag::Mixed => {}
        }
    }
    solve_rdg_general(fp, data, cfg)
}

/// Best single row by `Σ_q |a_iᵀx̂_q/b_i − 1|`. Rows with `b_i = 0` only
/// qualify when every point lies on their hyperplane (zero loss).
pub(crate) fn rdg_row_fit(fp: &ForwardProblem, data: &EnsembleData, norm: Norm, path: SolutionPath) -> Result<FitResult> {
    let mut best: Option<(usize, f64)> = None;
    for i in 0..fp.m() {
        let bi = fp.b()[i];
        let value = if bi.abs() > tol::ZERO_RHS {
            data.points().iter().map(|x| (fp.row(i).dot(x) / bi - 1.0).abs()).sum()
        } else if data.points().iter().all(|x| fp.row(i).dot(x).abs() <= tol::FEAS) {
            0.0
        } else {
            continue;
        };
        if best.is_none_or(|(_, v)| value < v) {
            best = Some((i, value));
        }
    }
    let (i, _) = best.ok_or(Error::NoFiniteSolution)?;
    let scale = norm.eval(fp.row(i).as_slice());
    let c = fp.row(i) / scale;
    let mut y = Vector::zeros(fp.m());
    y[i] = 1.0 / scale;
    let eps = relative_errors(fp, data, &c, &y)?;
    Ok(FitResult {
        variant: Variant::Rdg,
        z_star: eps.iter().map(|e| (e - 1.0).abs()).sum(),
        c_star: c,
        y_star: y,
        eps: PointErrors::Scalar(eps),
        active_row: Some(i),
        path,
        diagnostics: Diagnostics::default(),
    })
}

/// `ε_q = cᵀx̂_q / bᵀy`, with `ε_q = 1` when `bᵀy = 0` (which then requires `cᵀx̂_q = 0`).
pub fn relative_errors(fp: &ForwardProblem, data: &EnsembleData, c: &Vector, y: &Vector) -> Result<Vec<f64>> {
    let t = fp.b().dot(y);
    data.points()
        .iter()
        .map(|x| {
            let s = c.dot(x);
            if t.abs() > tol::ZERO_RHS {
                Ok(s / t)
            } else if s.abs() <= 1e-9 * (1.0 + c.amax() * x.amax()) {
                Ok(1.0)
            } else {
                Err(Error::NumericFailure(format!("bᵀy = 0 but cᵀx̂ = {s}")))
            }
        })
        .collect()
}

/// Outcome of the three norm-free relaxations.
#[derive(Debug, Clone, PartialEq)]
pub struct Relaxation {
    pub kind: RdgKind,
    /// Unnormalized solution; `c_star` may be zero.
    pub fit: FitResult,
}

pub fn solve_rdg_relaxations(fp: &ForwardProblem, data: &EnsembleData, cfg: &FitConfig) -> Result<Relaxation> {
    cfg.check(fp.n())?;
    let no_norm = masked_out(cfg, fp.n());
    let calls0 = lp_call_count();
    let mut best: Option<(RdgKind, f64, Vector)> = None;
    for kind in RdgKind::ALL {
        if let Some((value, y)) = kind_lp(fp, data, kind, &no_norm)? {
            if best.as_ref().is_none_or(|(_, v, _)| value < v - 1e-12 * (1.0 + v.abs())) {
                best = Some((kind, value, y));
            }
        }
    }
    let (kind, _, y) = best.ok_or(Error::AllBranchesInfeasible)?;
    let c = fp.a().transpose() * &y;
    let mut fit = assemble(fp, data, c, y, SolutionPath::RdgRelaxation)?;
    fit.diagnostics.lp_calls = lp_call_count() - calls0;
    fit.diagnostics.branches = 3;
    Ok(Relaxation { kind, fit })
}

/// Solves one kind's LP with extra cost rows; `None` if infeasible.
fn kind_lp(fp: &ForwardProblem, data: &EnsembleData, kind: RdgKind, extra: &Branch) -> Result<Option<(f64, Vector)>> {
    let (m, q) = (fp.m(), data.len());
    let ax: Vec<Vector> = data.points().iter().map(|x| fp.a() * x).collect();
    let lp = match kind {
        RdgKind::Plus | RdgKind::Minus => {
            let sigma = if kind == RdgKind::Plus { 1.0 } else { -1.0 };
            let width = m + q;
            let mut obj = vec![0.0; width];
            obj[m..].iter_mut().for_each(|v| *v = 1.0);
            let mut lp = LpProblem::minimize(obj);
            for (k, v) in ax.iter().enumerate() {
                // ε_q = σ (Ax̂_q)ᵀy; τ_q ≥ ε_q − 1 and τ_q ≥ 1 − ε_q.
                let mut up = vec![0.0; width];
                let mut down = vec![0.0; width];
                for i in 0..m {
                    up[i] = -sigma * v[i];
                    down[i] = sigma * v[i];
                }
                up[m + k] = 1.0;
                down[m + k] = 1.0;
                lp.add_ge(up, -1.0);
                lp.add_ge(down, 1.0);
            }
            let mut bt = vec![0.0; width];
            bt[..m].copy_from_slice(fp.b().as_slice());
            lp.add_eq(bt, sigma);
            add_branch(&mut lp, fp.a(), extra, width);
            lp
        }
        RdgKind::Zero => {
            let mut lp = LpProblem::minimize(vec![0.0; m]);
            lp.add_eq(fp.b().iter().copied().collect(), 0.0);
            lp.add_eq(vec![1.0; m], 1.0);
            for v in &ax {
                lp.add_eq(v.iter().copied().collect(), 0.0);
            }
            add_branch(&mut lp, fp.a(), extra, m);
            lp
        }
    };
    let sol = solve_lp(&lp);
    match sol.status {
        LpStatus::Optimal => {
            let y = Vector::from_column_slice(&sol.x[..m]);
            let value = match kind {
                RdgKind::Zero => 0.0,
                _ => {
                    let sigma = if kind == RdgKind::Plus { 1.0 } else { -1.0 };
                    ax.iter().map(|v| (sigma * v.dot(&y) - 1.0).abs()).sum()
                }
            };
            Ok(Some((value, y)))
        }
        LpStatus::Infeasible => Ok(None),
        LpStatus::Unbounded => Ok(None),
        LpStatus::Stalled => Err(Error::NumericFailure(format!("{kind:?} LP stalled"))),
    }
}

fn assemble(fp: &ForwardProblem, data: &EnsembleData, c: Vector, y: Vector, path: SolutionPath) -> Result<FitResult> {
    let eps = relative_errors(fp, data, &c, &y)?;
    Ok(FitResult {
        variant: Variant::Rdg,
        z_star: eps.iter().map(|e| (e - 1.0).abs()).sum(),
        c_star: c,
        y_star: y,
        eps: PointErrors::Scalar(eps),
        active_row: None,
        path,
        diagnostics: Diagnostics::default(),
    })
}

fn normalize(mut fit: FitResult, norm: Norm) -> FitResult {
    let size = norm.eval(fit.c_star.as_slice());
    fit.c_star /= size;
    fit.y_star /= size;
    fit
}

/// Result of the auxiliary battery `max {bᵀy, −bᵀy, 1ᵀy : ‖Aᵀy‖′ = 1, y ≥ 0}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AuxBound {
    /// `k_star` is the reciprocal of the largest of the three maxima.
    Finite { k_star: f64 },
    Unbounded,
}

pub fn solve_aux_k(fp: &ForwardProblem, cfg: &FitConfig) -> Result<AuxBound> {
    let m = fp.m();
    let branches = equality_branches(fp.n(), &FitConfig { nonneg_cost: false, ..cfg.clone() })?;
    let objectives: [Vec<f64>; 3] = [
        fp.b().iter().map(|v| -v).collect(),
        fp.b().iter().copied().collect(),
        vec![-1.0; m],
    ];
    let mut unbounded = false;
    let mut best = f64::NEG_INFINITY;
    for obj in &objectives {
        for branch in &branches {
            let mut lp = LpProblem::minimize(obj.clone());
            add_branch(&mut lp, fp.a(), branch, m);
            let sol = solve_lp(&lp);
            match sol.status {
                LpStatus::Optimal => best = best.max(-sol.objective),
                LpStatus::Unbounded => unbounded = true,
                LpStatus::Infeasible => {}
                LpStatus::Stalled => return Err(Error::NumericFailure("auxiliary LP stalled".into())),
            }
        }
    }
    if unbounded {
        Ok(AuxBound::Unbounded)
    } else if best > 0.0 {
        Ok(AuxBound::Finite { k_star: 1.0 / best })
    } else {
        Err(Error::NoFiniteSolution)
    }
}

/// Every kind under every piece of `‖c‖′ ≥ k`; the best is normalized.
pub fn solve_rdg_subproblems(fp: &ForwardProblem, data: &EnsembleData, cfg: &FitConfig, k: f64) -> Result<FitResult> {
    if k.is_nan() || k <= 0.0 {
        return Err(Error::Invalid(format!("norm floor must be positive, got {k}")));
    }
    let branches = floor_branches(fp.n(), cfg, k)?;
    let calls0 = lp_call_count();
    let mut best: Option<(f64, Vector)> = None;
    for kind in RdgKind::ALL {
        for branch in &branches {
            if let Some((value, y)) = kind_lp(fp, data, kind, branch)? {
                if best.as_ref().is_none_or(|(v, _)| value < v - 1e-12 * (1.0 + v.abs())) {
                    best = Some((value, y));
                }
            }
        }
    }
    let (_, y) = best.ok_or(Error::NoFiniteSolution)?;
    let c = fp.a().transpose() * &y;
    let mut fit = normalize(assemble(fp, data, c, y, SolutionPath::RdgSubproblem)?, cfg.normalization);
    fit.diagnostics.lp_calls = lp_call_count() - calls0;
    fit.diagnostics.branches = 3 * branches.len();
    Ok(fit)
}

/// The relaxation-first pipeline without the analytic fast paths.
pub fn solve_rdg_general(fp: &ForwardProblem, data: &EnsembleData, cfg: &FitConfig) -> Result<FitResult> {
    let calls0 = lp_call_count();
    let relax = solve_rdg_relaxations(fp, data, cfg)?;
    if cfg.normalization.eval(relax.fit.c_star.as_slice()) > tol::ZERO_COST {
        let mut fit = normalize(relax.fit, cfg.normalization);
        fit.diagnostics.notes.push(format!("relaxation winner {:?}", relax.kind));
        return Ok(fit);
    }
    let mut fit = match solve_aux_k(fp, cfg)? {
        AuxBound::Finite { k_star } => {
            let mut fit = solve_rdg_subproblems(fp, data, cfg, k_star)?;
            fit.diagnostics.notes.push(format!("norm floor {k_star:e}"));
            fit
        }
        AuxBound::Unbounded => {
            let mut fit = solve_rdg_subproblems(fp, data, cfg, HEURISTIC_DELTA)?;
            fit.path = SolutionPath::HeuristicDelta;
            fit.diagnostics.notes.push("auxiliary problem unbounded; used fixed norm floor".into());
            fit
        }
    };
    fit.diagnostics.lp_calls = lp_call_count() - calls0;
    Ok(fit)
}
