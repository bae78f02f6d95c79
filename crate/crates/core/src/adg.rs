//! Absolute duality gap: minimize `Σ_q |cᵀx̂_q − bᵀy|` over dual-feasible
//! `(c, y)` with `‖c‖′ = 1`.

use crate::branches::{add_branch, equality_branches};
use crate::error::{Error, Result};
use crate::lp::{lp_call_count, solve_lp, LpProblem, LpStatus};
use crate::model::{
    classify, AdgConfig, Diagnostics, EnsembleData, FeasibilityTag, FitResult, ForwardProblem, Norm, PointErrors,
    SolutionPath, Variant, Vector,
};
use crate::tol;

/// Dispatches to the analytic paths when they apply, else the decomposition.
pub fn solve_adg(fp: &ForwardProblem, data: &EnsembleData, cfg: &AdgConfig) -> Result<FitResult> {
    cfg.check(fp.n())?;
    if !cfg.unconstrained() {
        return solve_adg_general(fp, data, cfg);
    }
    match classify(fp, data, tol::FEAS).tag {
        FeasibilityTag::AllFeasible => solve_adg_feasible(fp, data, cfg),
        FeasibilityTag::AllBelow => solve_adg_all_below(fp, data, cfg),
        FeasibilityTag::Mixed if data.len() == 1 => {
            match mixed_point_construction(fp, &data.points()[0], cfg.normalization) {
                Err(Error::DegeneratePair) => solve_adg_general(fp, data, cfg),
                other => other,
            }
        }
        FeasibilityTag::Mixed => solve_adg_general(fp, data, cfg),
    }
}

/// Row with the smallest summed normalized slack; valid when every point is in P.
pub fn solve_adg_feasible(fp: &ForwardProblem, data: &EnsembleData, cfg: &AdgConfig) -> Result<FitResult> {
    cfg.check(fp.n())?;
    let norm = cfg.normalization;
    let mut best: Option<(usize, f64)> = None;
    for i in 0..fp.m() {
        let scale = norm.eval(fp.a().row(i).transpose().as_slice());
        let total: f64 = data.points().iter().map(|x| fp.residual(i, x)).sum::<f64>() / scale;
        if best.is_none_or(|(_, v)| total < v) {
            best = Some((i, total));
        }
    }
    let (i, _) = best.ok_or_else(|| Error::Invalid("no constraint rows".into()))?;
    Ok(row_fit(fp, data, i, norm, SolutionPath::FeasibleCentroid))
}

/// `c = a_i/‖a_i‖′, y = e_i/‖a_i‖′` with the resulting gaps.
pub(crate) fn row_fit(fp: &ForwardProblem, data: &EnsembleData, i: usize, norm: Norm, path: SolutionPath) -> FitResult {
    let scale = norm.eval(fp.a().row(i).transpose().as_slice());
    let c = fp.row(i) / scale;
    let mut y = Vector::zeros(fp.m());
    y[i] = 1.0 / scale;
    let eps: Vec<f64> = data.points().iter().map(|x| fp.residual(i, x) / scale).collect();
    FitResult {
        variant: Variant::Adg,
        c_star: c,
        y_star: y,
        z_star: eps.iter().map(|e| e.abs()).sum(),
        eps: PointErrors::Scalar(eps),
        active_row: Some(i),
        path,
        diagnostics: Diagnostics::default(),
    }
}

/// Points all satisfy `Ax ≤ b`: solve the reversed problem at its feasible
/// data and map the row back.
pub fn solve_adg_all_below(fp: &ForwardProblem, data: &EnsembleData, cfg: &AdgConfig) -> Result<FitResult> {
    let rev = solve_adg_feasible(&fp.reversed(), data, cfg)?;
    let eps: Vec<f64> = rev.eps_scalars().iter().map(|e| -e).collect();
    Ok(FitResult {
        c_star: -rev.c_star,
        eps: PointErrors::Scalar(eps),
        path: SolutionPath::ReversedCentroid,
        ..rev
    })
}

/// Zero-gap certificate for one point violating some rows and strictly
/// satisfying others: combine one row of each kind so the gaps cancel.
pub fn mixed_point_construction(fp: &ForwardProblem, x: &Vector, norm: Norm) -> Result<FitResult> {
    let r = fp.residuals(x);
    let above: Vec<usize> = (0..fp.m()).filter(|&i| r[i] > tol::FEAS).collect();
    let below: Vec<usize> = (0..fp.m()).filter(|&i| r[i] < -tol::FEAS).collect();
    for &i in &above {
        for &j in &below {
            let mut y = Vector::zeros(fp.m());
            y[i] = 1.0 / r[i];
            y[j] = 1.0 / -r[j];
            let c = fp.a().transpose() * &y;
            let size = norm.eval(c.as_slice());
            if size > tol::ZERO_COST {
                return Ok(FitResult {
                    variant: Variant::Adg,
                    c_star: c / size,
                    y_star: y / size,
                    eps: PointErrors::Scalar(vec![0.0]),
                    z_star: 0.0,
                    active_row: None,
                    path: SolutionPath::MixedPoint,
                    diagnostics: Diagnostics { notes: vec![format!("rows {i} and {j}")], ..Diagnostics::default() },
                });
            }
        }
    }
    Err(Error::DegeneratePair)
}

/// One LP per piece of the normalization constraint; best value wins,
/// earliest piece on ties.
pub fn solve_adg_general(fp: &ForwardProblem, data: &EnsembleData, cfg: &AdgConfig) -> Result<FitResult> {
    let branches = equality_branches(fp.n(), cfg)?;
    let calls0 = lp_call_count();
    let (m, q) = (fp.m(), data.len());
    let width = m + q;
    let residuals: Vec<Vector> = data.points().iter().map(|x| fp.residuals(x)).collect();
    let mut best: Option<(f64, Vector)> = None;
    let mut stalled = 0;
    for branch in &branches {
        let mut obj = vec![0.0; width];
        obj[m..].iter_mut().for_each(|v| *v = 1.0);
        let mut lp = LpProblem::minimize(obj);
        for (k, r) in residuals.iter().enumerate() {
            // τ_q ≥ ±(r_qᵀy)
            let mut up = vec![0.0; width];
            let mut down = vec![0.0; width];
            for i in 0..m {
                up[i] = -r[i];
                down[i] = r[i];
            }
            up[m + k] = 1.0;
            down[m + k] = 1.0;
            lp.add_ge(up, 0.0);
            lp.add_ge(down, 0.0);
        }
        add_branch(&mut lp, fp.a(), branch, width);
        let sol = solve_lp(&lp);
        match sol.status {
            LpStatus::Optimal => {
                let y = Vector::from_column_slice(&sol.x[..m]);
                let z: f64 = residuals.iter().map(|r| r.dot(&y).abs()).sum();
                if best.as_ref().is_none_or(|(bz, _)| z < bz - 1e-12 * (1.0 + bz.abs())) {
                    best = Some((z, y));
                }
            }
            LpStatus::Stalled => stalled += 1,
            _ => {}
        }
    }
    let (z, y) = best.ok_or(Error::NoFiniteSolution)?;
    let eps: Vec<f64> = residuals.iter().map(|r| r.dot(&y)).collect();
    let mut notes = Vec::new();
    if stalled > 0 {
        notes.push(format!("{stalled} branch LPs stalled"));
    }
    Ok(FitResult {
        variant: Variant::Adg,
        c_star: fp.a().transpose() * &y,
        y_star: y,
        eps: PointErrors::Scalar(eps),
        z_star: z,
        active_row: None,
        path: SolutionPath::Decomposition,
        diagnostics: Diagnostics { lp_calls: lp_call_count() - calls0, branches: branches.len(), notes },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn square() -> ForwardProblem {
        ForwardProblem::from_rows(
            &[vec![-1.0, 0.0], vec![0.0, -1.0], vec![1.0, 0.0], vec![0.0, 1.0]],
            &[-7.0, -7.0, 1.0, 1.0],
        )
    }

    fn cone() -> ForwardProblem {
        ForwardProblem::from_rows(&[vec![1.0, -1.0], vec![-1.0, -1.0]], &[0.0, 0.0])
    }

    fn x1() -> EnsembleData {
        EnsembleData::from_rows(&[vec![3.75, 2.0], vec![4.0, 2.25], vec![4.25, 2.0]])
    }

    #[test]
    fn feasible_path_on_square() {
        let fit = solve_adg(&square(), &x1(), &AdgConfig::default()).unwrap();
        assert_eq!(fit.path, SolutionPath::FeasibleCentroid);
        assert_eq!(fit.c_star, Vector::from_vec(vec![0.0, 1.0]));
        assert_abs_diff_eq!(fit.z_star, 3.25, epsilon = 1e-12);
    }

    #[test]
    fn general_matches_feasible() {
        for norm in [Norm::L1, Norm::Linf] {
            let cfg = AdgConfig::default().with_normalization(norm);
            let g = solve_adg_general(&square(), &x1(), &cfg).unwrap();
            let f = solve_adg_feasible(&square(), &x1(), &cfg).unwrap();
            assert_abs_diff_eq!(g.z_star, f.z_star, epsilon = 1e-9);
        }
    }

    #[test]
    fn nonneg_single_lp() {
        let cfg = AdgConfig { nonneg_cost: true, ..AdgConfig::default() };
        let fit = solve_adg(&square(), &x1(), &cfg).unwrap();
        assert_eq!(fit.diagnostics.lp_calls, 1);
        assert_abs_diff_eq!(fit.c_star, Vector::from_vec(vec![0.0, 1.0]), epsilon = 1e-9);
    }

    #[test]
    fn mixed_cone_point() {
        let x = Vector::from_vec(vec![3.0, 0.0]);
        let fit = mixed_point_construction(&cone(), &x, Norm::L1).unwrap();
        assert_abs_diff_eq!(fit.c_star, Vector::from_vec(vec![0.0, -1.0]), epsilon = 1e-12);
        assert_abs_diff_eq!(fit.y_star, Vector::from_vec(vec![0.5, 0.5]), epsilon = 1e-12);
        assert_eq!(fit.z_star, 0.0);
        assert_eq!(fit.eps_scalars(), &[0.0]);
        let gap = fit.c_star.dot(&x) - cone().b().dot(&fit.y_star);
        assert!(gap.abs() < 1e-9);
    }

    #[test]
    fn all_below_cone() {
        let data = EnsembleData::from_rows(&[vec![1.0, 3.0]]);
        let fit = solve_adg(&cone(), &data, &AdgConfig::default()).unwrap();
        assert_eq!(fit.path, SolutionPath::ReversedCentroid);
        assert_abs_diff_eq!(fit.c_star, Vector::from_vec(vec![0.5, -0.5]), epsilon = 1e-12);
        assert_abs_diff_eq!(fit.z_star, 1.0, epsilon = 1e-12);
        let two = EnsembleData::from_rows(&[vec![1.0, 3.0], vec![3.0, 5.0]]);
        let fit2 = solve_adg(&cone(), &two, &AdgConfig::default()).unwrap();
        let gen = solve_adg_general(&cone(), &two, &AdgConfig::default()).unwrap();
        assert_eq!(fit2.active_row, Some(0));
        assert_abs_diff_eq!(fit2.z_star, gen.z_star, epsilon = 1e-9);
    }

    #[test]
    fn mixed_pair_on_cone_has_zero_loss() {
        let data = EnsembleData::from_rows(&[vec![3.0, 0.0], vec![5.0, 0.0]]);
        let fit = solve_adg(&cone(), &data, &AdgConfig::default()).unwrap();
        assert_eq!(fit.path, SolutionPath::Decomposition);
        assert_abs_diff_eq!(fit.z_star, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn masked_fit_respects_mask() {
        let cfg = AdgConfig::default().with_mask(vec![true, false]);
        let fit = solve_adg(&square(), &x1(), &cfg).unwrap();
        assert_eq!(fit.c_star[1], 0.0);
        assert_abs_diff_eq!(fit.c_star[0].abs(), 1.0, epsilon = 1e-9);
    }
}
