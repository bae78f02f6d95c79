//! Linear pieces of the normalization constraint `‖c‖′ = 1`.
//!
//! For the ∞-norm a piece fixes one coordinate to ±1 and boxes the rest;
//! for the 1-norm a piece fixes an orthant `s` with `s∘c ≥ 0, sᵀc = 1`.

use crate::error::{Error, Result};
use crate::lp::{LpProblem, Relation};
use crate::model::{FitConfig, Matrix, Norm};

pub const MAX_L1_DIM: usize = 16;

/// One linear constraint on the cost vector c.
#[derive(Debug, Clone)]
pub struct CostRow {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

impl CostRow {
    fn unit(n: usize, j: usize, w: f64, relation: Relation, rhs: f64) -> Self {
        let mut coeffs = vec![0.0; n];
        coeffs[j] = w;
        CostRow { coeffs, relation, rhs }
    }
}

pub type Branch = Vec<CostRow>;

fn allowed(cfg: &FitConfig, n: usize) -> Vec<usize> {
    match &cfg.support_mask {
        Some(mask) => (0..n).filter(|&k| mask[k]).collect(),
        None => (0..n).collect(),
    }
}

/// `c_k = 0` for every coordinate outside the support mask.
pub fn masked_out(cfg: &FitConfig, n: usize) -> Branch {
    match &cfg.support_mask {
        Some(mask) => (0..n).filter(|&k| !mask[k]).map(|k| CostRow::unit(n, k, 1.0, Relation::Eq, 0.0)).collect(),
        None => Vec::new(),
    }
}

/// Every piece of `‖c‖′ = 1` (with mask and sign limits) in branch order.
pub fn equality_branches(n: usize, cfg: &FitConfig) -> Result<Vec<Branch>> {
    cfg.check(n)?;
    let support = allowed(cfg, n);
    let fixed = masked_out(cfg, n);
    let mut out = Vec::new();
    match cfg.normalization {
        Norm::Linf => {
            let signs: &[f64] = if cfg.nonneg_cost { &[1.0] } else { &[1.0, -1.0] };
            for &j in &support {
                for &s in signs {
                    let mut b = fixed.clone();
                    b.push(CostRow::unit(n, j, s, Relation::Eq, 1.0));
                    for &k in &support {
                        if k == j {
                            continue;
                        }
                        b.push(CostRow::unit(n, k, 1.0, Relation::Le, 1.0));
                        let lo = if cfg.nonneg_cost { 0.0 } else { -1.0 };
                        b.push(CostRow::unit(n, k, 1.0, Relation::Ge, lo));
                    }
                    out.push(b);
                }
            }
        }
        Norm::L1 => {
            let patterns: Vec<Vec<f64>> = if cfg.nonneg_cost {
                vec![vec![1.0; support.len()]]
            } else {
                if support.len() > MAX_L1_DIM {
                    return Err(Error::DimensionTooLarge { n: support.len() });
                }
                orthants(support.len())
            };
            for s in patterns {
                let mut b = fixed.clone();
                let mut sum = vec![0.0; n];
                for (idx, &k) in support.iter().enumerate() {
                    b.push(CostRow::unit(n, k, s[idx], Relation::Ge, 0.0));
                    sum[k] = s[idx];
                }
                b.push(CostRow { coeffs: sum, relation: Relation::Eq, rhs: 1.0 });
                out.push(b);
            }
        }
        Norm::L2 => unreachable!("rejected by FitConfig::check"),
    }
    Ok(out)
}

/// Pieces of `‖c‖′ ≥ k`: `σ c_j ≥ k` for the ∞-norm, `sᵀc ≥ k` for the 1-norm.
pub fn floor_branches(n: usize, cfg: &FitConfig, k: f64) -> Result<Vec<Branch>> {
    cfg.check(n)?;
    let support = allowed(cfg, n);
    let fixed = masked_out(cfg, n);
    let mut out = Vec::new();
    match cfg.normalization {
        Norm::Linf => {
            for &j in &support {
                for s in [1.0, -1.0] {
                    let mut b = fixed.clone();
                    b.push(CostRow::unit(n, j, s, Relation::Ge, k));
                    out.push(b);
                }
            }
        }
        Norm::L1 => {
            if support.len() > MAX_L1_DIM {
                return Err(Error::DimensionTooLarge { n: support.len() });
            }
            for s in orthants(support.len()) {
                let mut b = fixed.clone();
                let mut coeffs = vec![0.0; n];
                for (idx, &j) in support.iter().enumerate() {
                    coeffs[j] = s[idx];
                }
                b.push(CostRow { coeffs, relation: Relation::Ge, rhs: k });
                out.push(b);
            }
        }
        Norm::L2 => unreachable!("rejected by FitConfig::check"),
    }
    Ok(out)
}

/// Sign patterns in binary order; bit k set means `s_k = −1`.
fn orthants(d: usize) -> Vec<Vec<f64>> {
    (0..1usize << d)
        .map(|mask| (0..d).map(|k| if mask >> k & 1 == 1 { -1.0 } else { 1.0 }).collect())
        .collect()
}

/// Adds the branch rows to an LP whose first `m` variables are y, with `c = Aᵀy`.
pub fn add_branch(lp: &mut LpProblem, a: &Matrix, branch: &Branch, width: usize) {
    let m = a.nrows();
    for row in branch {
        let mut coeffs = vec![0.0; width];
        for i in 0..m {
            coeffs[i] = (0..a.ncols()).map(|k| row.coeffs[k] * a[(i, k)]).sum();
        }
        lp.add(coeffs, row.relation, row.rhs);
    }
}
