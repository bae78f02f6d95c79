//! Decision-space loss: move each point by `ε_q` onto a common face of P and
//! minimize `Σ_q ‖ε_q‖_p`. Some optimal cost is always a constraint row, so
//! the search is one battery of feasible projections per row.

use crate::error::{Error, Result};
use crate::geometry::{face_point, feasible_project, project_l2_from, ProjectionResult};
use crate::lp::{lp_call_count, solve_lp, LpProblem};
use crate::model::{Diagnostics, EnsembleData, FitConfig, FitResult, ForwardProblem, Norm, PointErrors, SolutionPath, Variant, Vector};

fn project_all(fp: &ForwardProblem, data: &EnsembleData, row: usize, p: Norm, start: &Vector) -> Result<Vec<ProjectionResult>> {
    data.points()
        .iter()
        .map(|x| match p {
            Norm::L2 => project_l2_from(fp, x, row, start),
            _ => feasible_project(fp, x, row, p),
        })
        .collect()
}

fn check_nonempty(fp: &ForwardProblem) -> Result<()> {
    let mut lp = LpProblem::minimize(vec![0.0; fp.n()]);
    for j in 0..fp.n() {
        lp.set_free(j);
    }
    for i in 0..fp.m() {
        lp.add_ge(fp.row(i).iter().copied().collect(), fp.b()[i]);
    }
    if solve_lp(&lp).is_optimal() {
        Ok(())
    } else {
        Err(Error::InfeasibleForward)
    }
}

/// `V_i = Σ_q ‖x̂_q − Φ_i(x̂_q)‖_p` for every row; `∞` where the face is empty.
pub fn dsp_row_values(fp: &ForwardProblem, data: &EnsembleData, p: Norm) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(fp.m());
    for i in 0..fp.m() {
        out.push(match face_point(fp, i) {
            None => f64::INFINITY,
            Some(start) => project_all(fp, data, i, p, &start)?.iter().map(|r| r.distance).sum(),
        });
    }
    Ok(out)
}

/// Uses `cfg.ds_p` as the loss and `cfg.normalization` to scale the winning row.
pub fn solve_dsp(fp: &ForwardProblem, data: &EnsembleData, cfg: &FitConfig) -> Result<FitResult> {
    solve_dsp_with_values(fp, data, cfg).map(|(fit, _)| fit)
}

/// `solve_dsp` together with the per-row values it compared.
pub fn solve_dsp_with_values(fp: &ForwardProblem, data: &EnsembleData, cfg: &FitConfig) -> Result<(FitResult, Vec<f64>)> {
    cfg.check(fp.n())?;
    if !cfg.unconstrained() {
        return Err(Error::Unsupported("support masks and sign limits with the decision-space loss".into()));
    }
    let calls0 = lp_call_count();
    check_nonempty(fp)?;
    let values = dsp_row_values(fp, data, cfg.ds_p)?;
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.iter().enumerate() {
        if v.is_finite() && best.is_none_or(|(_, b)| *v < b) {
            best = Some((i, *v));
        }
    }
    let (i, _) = best.ok_or(Error::NoFiniteSolution)?;
    let start = face_point(fp, i).ok_or(Error::EmptyFace { row: i })?;
    let proj = project_all(fp, data, i, cfg.ds_p, &start)?;
    let scale = cfg.normalization.eval(fp.row(i).as_slice());
    let mut y = Vector::zeros(fp.m());
    y[i] = 1.0 / scale;
    let empty = values.iter().filter(|v| v.is_infinite()).count();
    let mut notes = Vec::new();
    if empty > 0 {
        notes.push(format!("{empty} rows with empty faces skipped"));
    }
    let fit = FitResult {
        variant: Variant::Dsp,
        c_star: fp.row(i) / scale,
        y_star: y,
        z_star: proj.iter().map(|r| r.distance).sum(),
        eps: PointErrors::Vector(proj.iter().map(|r| r.eps.iter().copied().collect()).collect()),
        active_row: Some(i),
        path: SolutionPath::RowBattery,
        diagnostics: Diagnostics { lp_calls: lp_call_count() - calls0, branches: fp.m(), notes },
    };
    Ok((fit, values))
}
