//! Domain types shared by every solver: the forward problem, the observed
//! ensemble, norm choices, fit results and the feasibility classification.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::tol;

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// The norms used for normalization, projection losses and duality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    L1,
    L2,
    Linf,
}

impl Norm {
    pub fn eval(self, v: &[f64]) -> f64 {
        match self {
            Norm::L1 => v.iter().map(|x| x.abs()).sum(),
            Norm::L2 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            Norm::Linf => v.iter().fold(0.0, |m, x| m.max(x.abs())),
        }
    }

    pub fn dual(self) -> Norm {
        match self {
            Norm::L1 => Norm::Linf,
            Norm::L2 => Norm::L2,
            Norm::Linf => Norm::L1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Norm::L1 => "l1",
            Norm::L2 => "l2",
            Norm::Linf => "linf",
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which loss the inverse problem minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Absolute duality gap.
    Adg,
    /// Relative duality gap.
    Rdg,
    /// Decision-space perturbation.
    Dsp,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Adg => "adg",
            Variant::Rdg => "rdg",
            Variant::Dsp => "dsp",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Hyperparameters of a fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NormSpec {
    /// Norm fixed to one on the imputed cost; `L1` or `Linf`.
    pub normalization: Norm,
    /// p of the decision-space loss; only read for `Variant::Dsp`.
    pub ds_p: Norm,
    pub variant: Variant,
}

impl NormSpec {
    pub fn new(variant: Variant) -> Self {
        NormSpec { normalization: Norm::L1, ds_p: Norm::L2, variant }
    }
}

/// Objective matrix restricting costs to the cone `{Cᵀα : α ≥ 0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostStructure {
    /// K objectives by n variables.
    pub c: Matrix,
    pub require_nonnegative: bool,
}

/// `min cᵀx  s.t.  Ax ≥ b` with an unknown cost.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardProblem {
    a: Matrix,
    b: Vector,
    cost_structure: Option<CostStructure>,
    row_labels: Option<Vec<String>>,
    x_nonneg: bool,
}

impl ForwardProblem {
    pub fn new(a: Matrix, b: Vector) -> Self {
        ForwardProblem { a, b, cost_structure: None, row_labels: None, x_nonneg: false }
    }

    /// Builds from row slices; panics if rows have unequal length.
    pub fn from_rows(rows: &[Vec<f64>], b: &[f64]) -> Self {
        let n = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == n), "ragged constraint rows");
        let a = Matrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
        ForwardProblem::new(a, Vector::from_column_slice(b))
    }

    pub fn with_cost_structure(mut self, cs: CostStructure) -> Self {
        self.cost_structure = Some(cs);
        self
    }

    pub fn with_row_labels(mut self, labels: Vec<String>) -> Self {
        self.row_labels = Some(labels);
        self
    }

    /// Adds `x ≥ 0` as variable bounds in forward solves.
    pub fn with_x_nonneg(mut self, on: bool) -> Self {
        self.x_nonneg = on;
        self
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }
    pub fn b(&self) -> &Vector {
        &self.b
    }
    pub fn cost_structure(&self) -> Option<&CostStructure> {
        self.cost_structure.as_ref()
    }
    pub fn row_labels(&self) -> Option<&[String]> {
        self.row_labels.as_deref()
    }
    pub fn x_nonneg(&self) -> bool {
        self.x_nonneg
    }
    pub fn m(&self) -> usize {
        self.a.nrows()
    }
    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    pub fn row(&self, i: usize) -> Vector {
        self.a.row(i).transpose()
    }

    /// `a_iᵀx − b_i`.
    pub fn residual(&self, i: usize, x: &Vector) -> f64 {
        self.a.row(i).dot(&x.transpose()) - self.b[i]
    }

    pub fn residuals(&self, x: &Vector) -> Vector {
        &self.a * x - &self.b
    }

    pub fn is_feasible(&self, x: &Vector, tol: f64) -> bool {
        self.residuals(x).iter().all(|r| *r >= -tol)
    }

    /// The problem with every inequality flipped: `{x : Ax ≤ b}` written as `−Ax ≥ −b`.
    pub fn reversed(&self) -> ForwardProblem {
        ForwardProblem {
            a: -&self.a,
            b: -&self.b,
            cost_structure: None,
            row_labels: self.row_labels.clone(),
            x_nonneg: false,
        }
    }

    /// A copy with a different right-hand side.
    pub fn with_rhs(&self, b: Vector) -> ForwardProblem {
        let mut out = self.clone();
        out.b = b;
        out
    }
}

/// The observed decisions `x̂_1 … x̂_Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleData {
    points: Vec<Vector>,
}

impl EnsembleData {
    pub fn new(points: Vec<Vector>) -> Self {
        EnsembleData { points }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        EnsembleData::new(rows.iter().map(|r| Vector::from_column_slice(r)).collect())
    }

    pub fn points(&self) -> &[Vector] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, |p| p.len())
    }

    pub fn singleton(x: Vector) -> Self {
        EnsembleData::new(vec![x])
    }

    pub fn with_point(&self, x: Vector) -> Self {
        let mut points = self.points.clone();
        points.push(x);
        EnsembleData::new(points)
    }
}

/// Componentwise mean of the observed points.
pub fn centroid(data: &EnsembleData) -> Vector {
    assert!(!data.is_empty(), "centroid of an empty ensemble");
    let mut sum = Vector::zeros(data.dim());
    for p in data.points() {
        sum += p;
    }
    sum / data.len() as f64
}

/// Problems found by `validate_problem`; empty means the input is usable.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub issues: Vec<String>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.issues.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok() {
            f.write_str("ok")
        } else {
            f.write_str(&self.issues.join("; "))
        }
    }
}

/// Checks shapes, zero rows and finiteness. Full-dimensionality and
/// non-redundancy of P are the caller's contract and are not checked.
pub fn validate_problem(fp: &ForwardProblem, data: &EnsembleData) -> ValidationReport {
    let mut issues = Vec::new();
    let (m, n) = (fp.m(), fp.n());
    if m == 0 || n == 0 {
        issues.push(format!("constraint matrix is {m}x{n}"));
    }
    if fp.b().len() != m {
        issues.push(format!("b has length {} but A has {m} rows", fp.b().len()));
    }
    if fp.a().iter().any(|v| !v.is_finite()) {
        issues.push("non-finite entry in A".into());
    }
    if fp.b().iter().any(|v| !v.is_finite()) {
        issues.push("non-finite entry in b".into());
    }
    for i in 0..m {
        if fp.a().row(i).iter().map(|v| v.abs()).fold(0.0, f64::max) <= tol::ZERO_ROW {
            issues.push(format!("zero row {i}"));
        }
    }
    if let Some(cs) = fp.cost_structure() {
        if cs.c.ncols() != n {
            issues.push(format!("C has {} columns but A has {n}", cs.c.ncols()));
        }
        if cs.c.iter().any(|v| !v.is_finite()) {
            issues.push("non-finite entry in C".into());
        }
        if cs.require_nonnegative && cs.c.iter().any(|v| *v < 0.0) {
            issues.push("C has a negative entry".into());
        }
    }
    if let Some(labels) = fp.row_labels() {
        if labels.len() != m {
            issues.push(format!("{} row labels for {m} rows", labels.len()));
        }
    }
    if data.is_empty() {
        issues.push("no observed points".into());
    }
    for (q, p) in data.points().iter().enumerate() {
        if p.len() != n {
            issues.push(format!("dimension mismatch: point {q} has length {} but n = {n}", p.len()));
        }
        if p.iter().any(|v| !v.is_finite()) {
            issues.push(format!("non-finite entry in point {q}"));
        }
    }
    ValidationReport { issues }
}

/// Where the observed points sit relative to P.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeasibilityTag {
    /// Every point lies in P.
    AllFeasible,
    /// Every point satisfies `Ax ≤ b` and at least one is outside P.
    AllBelow,
    Mixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityClass {
    pub tag: FeasibilityTag,
    /// Entry `(i, q)` is `a_iᵀx̂_q − b_i`.
    pub residuals: Matrix,
}

pub fn classify(fp: &ForwardProblem, data: &EnsembleData, tol: f64) -> FeasibilityClass {
    let q = data.len();
    let mut residuals = Matrix::zeros(fp.m(), q);
    for (k, x) in data.points().iter().enumerate() {
        residuals.set_column(k, &fp.residuals(x));
    }
    let all_feasible = residuals.iter().all(|r| *r >= -tol);
    let all_below = residuals.iter().all(|r| *r <= tol);
    let tag = if all_feasible {
        FeasibilityTag::AllFeasible
    } else if all_below {
        FeasibilityTag::AllBelow
    } else {
        FeasibilityTag::Mixed
    };
    FeasibilityClass { tag, residuals }
}

/// Which route produced a fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolutionPath {
    /// Analytic row choice at the centroid of feasible data.
    FeasibleCentroid,
    /// Analytic row choice on the reversed problem.
    ReversedCentroid,
    /// Closed-form two-row construction for one infeasible point.
    MixedPoint,
    /// Branch-and-compare over the normalization decomposition.
    Decomposition,
    /// Winner of the three relative-gap relaxations.
    RdgRelaxation,
    /// Norm-bounded relative-gap sub-problems.
    RdgSubproblem,
    /// Sub-problems with a small fixed norm floor because the bound was unavailable.
    HeuristicDelta,
    /// Per-row feasible projections.
    RowBattery,
    /// Single LP in the structured cost cone.
    Structured,
}

/// Per-point errors: a gap (or ratio) per point, or a perturbation vector per point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointErrors {
    Scalar(Vec<f64>),
    Vector(Vec<Vec<f64>>),
}

impl PointErrors {
    pub fn scalars(&self) -> Option<&[f64]> {
        match self {
            PointErrors::Scalar(v) => Some(v),
            PointErrors::Vector(_) => None,
        }
    }

    pub fn vectors(&self) -> Option<&[Vec<f64>]> {
        match self {
            PointErrors::Vector(v) => Some(v),
            PointErrors::Scalar(_) => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub lp_calls: usize,
    pub branches: usize,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub variant: Variant,
    pub c_star: Vector,
    pub y_star: Vector,
    pub eps: PointErrors,
    pub z_star: f64,
    pub active_row: Option<usize>,
    pub path: SolutionPath,
    pub diagnostics: Diagnostics,
}

impl FitResult {
    pub fn eps_scalars(&self) -> &[f64] {
        self.eps.scalars().expect("scalar per-point errors")
    }
}

/// Options shared by the solvers and by ρ.
#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    /// `L1` or `Linf`.
    pub normalization: Norm,
    /// Restrict the imputed cost to the nonnegative orthant (ADG only).
    pub nonneg_cost: bool,
    /// Coordinates of c allowed to be nonzero; `None` allows all.
    pub support_mask: Option<Vec<bool>>,
    /// p of the decision-space loss.
    pub ds_p: Norm,
    /// Drop `b_i = 0` rows from the relative-gap baseline instead of failing.
    pub skip_zero_rhs: bool,
}

pub type AdgConfig = FitConfig;

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig { normalization: Norm::L1, nonneg_cost: false, support_mask: None, ds_p: Norm::L2, skip_zero_rhs: false }
    }
}

impl FitConfig {
    pub fn with_normalization(mut self, norm: Norm) -> Self {
        self.normalization = norm;
        self
    }

    pub fn with_mask(mut self, mask: Vec<bool>) -> Self {
        self.support_mask = Some(mask);
        self
    }

    pub fn check(&self, n: usize) -> crate::Result<()> {
        if self.normalization == Norm::L2 {
            return Err(crate::Error::Invalid("normalization norm must be l1 or linf".into()));
        }
        if let Some(mask) = &self.support_mask {
            if mask.len() != n {
                return Err(crate::Error::Invalid(format!("support mask has length {} but n = {n}", mask.len())));
            }
            if !mask.iter().any(|b| *b) {
                return Err(crate::Error::Invalid("support mask excludes every coordinate".into()));
            }
        }
        Ok(())
    }

    /// Whether the analytic row paths apply (they ignore masks and sign limits).
    pub fn unconstrained(&self) -> bool {
        !self.nonneg_cost && self.support_mask.as_ref().is_none_or(|m| m.iter().all(|b| *b))
    }
}
