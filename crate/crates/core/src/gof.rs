//! Goodness of fit: the coefficient of complementarity
//! `ρ = 1 − z* / mean_i(baseline_i)`, where baseline_i is the loss of the
//! cost vector `a_i` with every point kept where it is.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adg::solve_adg;
use crate::dsp::solve_dsp_with_values;
use crate::error::{Error, Result};
use crate::lp::{solve_forward, LpStatus};
use crate::model::{classify, EnsembleData, FeasibilityTag, FitConfig, FitResult, ForwardProblem, Variant, Vector};
use crate::rdg::solve_rdg;
use crate::tol;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub variant: Variant,
    /// Clamped to `[0, 1]`.
    pub rho: f64,
    /// Masked or sign-limited fits can score below their baseline.
    pub rho_unclamped: f64,
    pub numerator: f64,
    /// Per-row baseline loss; `None` for rows left out of the mean.
    pub baselines: Vec<Option<f64>>,
    pub denominator: f64,
    pub excluded_rows: Vec<usize>,
}

pub fn fit(fp: &ForwardProblem, data: &EnsembleData, variant: Variant, cfg: &FitConfig) -> Result<FitResult> {
    match variant {
        Variant::Adg => solve_adg(fp, data, cfg),
        Variant::Rdg => solve_rdg(fp, data, cfg),
        Variant::Dsp => crate::dsp::solve_dsp(fp, data, cfg),
    }
}

/// Baseline for ADG: `Σ_q |a_iᵀx̂_q − b_i| / ‖a_i‖′`.
pub fn adg_baselines(fp: &ForwardProblem, data: &EnsembleData, cfg: &FitConfig) -> Vec<f64> {
    (0..fp.m())
        .map(|i| {
            let scale = cfg.normalization.eval(fp.row(i).as_slice());
            data.points().iter().map(|x| fp.residual(i, x).abs()).sum::<f64>() / scale
        })
        .collect()
}

/// Baseline for RDG: `Σ_q |a_iᵀx̂_q / b_i − 1|`; `None` where `b_i = 0`.
pub fn rdg_baselines(fp: &ForwardProblem, data: &EnsembleData) -> Vec<Option<f64>> {
    (0..fp.m())
        .map(|i| {
            let bi = fp.b()[i];
            (bi.abs() > tol::ZERO_RHS)
                .then(|| data.points().iter().map(|x| (fp.row(i).dot(x) / bi - 1.0).abs()).sum())
        })
        .collect()
}

pub fn rho(fp: &ForwardProblem, data: &EnsembleData, variant: Variant, cfg: &FitConfig) -> Result<GofReport> {
    rho_with_fit(fp, data, variant, cfg).map(|(_, r)| r)
}

/// ρ together with the fit that supplied its numerator.
pub fn rho_with_fit(
    fp: &ForwardProblem,
    data: &EnsembleData,
    variant: Variant,
    cfg: &FitConfig,
) -> Result<(FitResult, GofReport)> {
    let (fit, baselines) = match variant {
        Variant::Adg => {
            let fit = solve_adg(fp, data, cfg)?;
            (fit, adg_baselines(fp, data, cfg).into_iter().map(Some).collect::<Vec<_>>())
        }
        Variant::Rdg => {
            let base = rdg_baselines(fp, data);
            if !cfg.skip_zero_rhs {
                if let Some(row) = base.iter().position(|b| b.is_none()) {
                    return Err(Error::BaselineUndefined { row });
                }
            }
            (solve_rdg(fp, data, cfg)?, base)
        }
        Variant::Dsp => {
            let (fit, values) = solve_dsp_with_values(fp, data, cfg)?;
            (fit, values.into_iter().map(|v| v.is_finite().then_some(v)).collect())
        }
    };
    let report = report(variant, fit.z_star, baselines)?;
    Ok((fit, report))
}

/// Assembles a report from a loss and per-row baselines.
pub fn report(variant: Variant, numerator: f64, baselines: Vec<Option<f64>>) -> Result<GofReport> {
    let admitted: Vec<f64> = baselines.iter().flatten().copied().collect();
    let excluded_rows = baselines.iter().enumerate().filter(|(_, b)| b.is_none()).map(|(i, _)| i).collect();
    if admitted.is_empty() {
        return Err(Error::DegenerateBaseline);
    }
    let denominator = admitted.iter().sum::<f64>() / admitted.len() as f64;
    if denominator <= 1e-12 {
        return Err(Error::DegenerateBaseline);
    }
    let rho_unclamped = 1.0 - numerator / denominator;
    Ok(GofReport {
        variant,
        rho: rho_unclamped.clamp(0.0, 1.0),
        rho_unclamped,
        numerator,
        baselines,
        denominator,
        excluded_rows,
    })
}

/// Evenly spaced axis values, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, steps: usize) -> Self {
        Axis { lo, hi, steps }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.lo];
        }
        let h = (self.hi - self.lo) / (self.steps - 1) as f64;
        (0..self.steps).map(|k| self.lo + h * k as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub gamma1: Vec<f64>,
    pub gamma2: Vec<f64>,
    /// `rho[i][j]` belongs to `(gamma1[i], gamma2[j])`; failed cells hold NaN.
    pub rho: Vec<Vec<f64>>,
}

impl SweepGrid {
    /// Cells in row-major order as `(gamma1, gamma2, rho)`.
    pub fn cells(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.gamma1
            .iter()
            .enumerate()
            .flat_map(move |(i, g1)| self.gamma2.iter().enumerate().map(move |(j, g2)| (*g1, *g2, self.rho[i][j])))
    }
}

/// ρ of `fixed ∪ {(γ₁, γ₂)}` over a grid.
pub fn rho_sweep(
    fp: &ForwardProblem,
    fixed: &EnsembleData,
    g1: Axis,
    g2: Axis,
    variant: Variant,
    cfg: &FitConfig,
) -> Result<SweepGrid> {
    if fp.n() != 2 {
        return Err(Error::Invalid("sweeps need n = 2".into()));
    }
    if ![g1.lo, g1.hi, g2.lo, g2.hi].iter().all(|v| v.is_finite()) || g1.steps == 0 || g2.steps == 0 {
        return Err(Error::Invalid("grid bounds must be finite with at least one step".into()));
    }
    let (gamma1, gamma2) = (g1.values(), g2.values());
    let rho = gamma1
        .par_iter()
        .map(|a| {
            gamma2
                .iter()
                .map(|b| {
                    let data = fixed.with_point(Vector::from_vec(vec![*a, *b]));
                    rho(fp, &data, variant, cfg).map_or(f64::NAN, |r| r.rho)
                })
                .collect()
        })
        .collect();
    Ok(SweepGrid { gamma1, gamma2, rho })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub z_adg: f64,
    pub z_rdg: f64,
    pub z_dsp: f64,
    /// Forward optimum under the ADG cost.
    pub f_adg: f64,
    /// Forward optimum under the RDG cost.
    pub f_rdg: f64,
    pub all_feasible: bool,
    /// `z_dsp ≥ z_adg`; only checked for feasible data.
    pub dsp_dominates: Option<bool>,
    /// `|f_rdg|·z_rdg ≥ z_adg`.
    pub upper_holds: bool,
    /// `z_adg ≥ |f_adg|·z_rdg`.
    pub lower_holds: bool,
}

const DOMINANCE_SLACK: f64 = 1e-7;

fn forward_value(fp: &ForwardProblem, c: &Vector) -> Result<f64> {
    let sol = solve_forward(&fp.clone().with_x_nonneg(false), c)?;
    match sol.status {
        LpStatus::Optimal => Ok(sol.objective),
        LpStatus::Infeasible => Err(Error::InfeasibleForward),
        LpStatus::Unbounded => Err(Error::UnboundedForward),
        LpStatus::Stalled => Err(Error::NumericFailure("forward LP stalled".into())),
    }
}

pub fn check_dominance(fp: &ForwardProblem, data: &EnsembleData, cfg: &FitConfig) -> Result<DominanceReport> {
    let a = solve_adg(fp, data, cfg)?;
    let r = solve_rdg(fp, data, cfg)?;
    let p = crate::dsp::solve_dsp(fp, data, cfg)?;
    let f_adg = forward_value(fp, &a.c_star)?;
    let f_rdg = forward_value(fp, &r.c_star)?;
    let all_feasible = classify(fp, data, tol::FEAS).tag == FeasibilityTag::AllFeasible;
    Ok(DominanceReport {
        z_adg: a.z_star,
        z_rdg: r.z_star,
        z_dsp: p.z_star,
        f_adg,
        f_rdg,
        all_feasible,
        dsp_dominates: all_feasible.then_some(p.z_star >= a.z_star - DOMINANCE_SLACK),
        upper_holds: f_rdg.abs() * r.z_star >= a.z_star - DOMINANCE_SLACK,
        lower_holds: a.z_star >= f_adg.abs() * r.z_star - DOMINANCE_SLACK,
    })
}
