//! JSON problem and report files, and the sweep CSV.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::gof::{GofReport, SweepGrid};
use crate::model::{CostStructure, EnsembleData, FitResult, ForwardProblem, Matrix, Vector};
use crate::structured::{Observations, StructuredFit};

#[derive(Debug, thiserror::Error)]
pub enum FileError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("malformed problem file: {0}")]
    Format(#[from] serde_json::Error),
}

/// On-disk problem description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub points: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub points_are_objectives: bool,
    #[serde(default, skip_serializing_if = "is_false")]
    pub x_nonneg: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub row_labels: Option<Vec<String>>,
}

fn is_false(v: &bool) -> bool {
    !*v
}

fn matrix(rows: &[Vec<f64>], what: &str) -> Result<Matrix> {
    let cols = rows.first().map_or(0, |r| r.len());
    if let Some(i) = rows.iter().position(|r| r.len() != cols) {
        return Err(Error::Invalid(format!("{what} row {i} has length {}, expected {cols}", rows[i].len())));
    }
    Ok(Matrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

impl ProblemFile {
    pub fn parse(text: &str) -> std::result::Result<Self, FileError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: &Path) -> std::result::Result<Self, FileError> {
        let text = std::fs::read_to_string(path).map_err(|source| FileError::Read { path: path.into(), source })?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    pub fn from_parts(fp: &ForwardProblem, data: &EnsembleData) -> Self {
        let rows = |m: &Matrix| (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect();
        ProblemFile {
            a: rows(fp.a()),
            b: fp.b().iter().copied().collect(),
            c: fp.cost_structure().map(|cs| rows(&cs.c)),
            points: data.points().iter().map(|p| p.iter().copied().collect()).collect(),
            points_are_objectives: false,
            x_nonneg: fp.x_nonneg(),
            row_labels: fp.row_labels().map(|l| l.to_vec()),
        }
    }

    pub fn problem(&self) -> Result<ForwardProblem> {
        let a = matrix(&self.a, "A")?;
        if a.nrows() != self.b.len() {
            return Err(Error::Invalid(format!("A has {} rows but b has {} entries", a.nrows(), self.b.len())));
        }
        let mut fp = ForwardProblem::new(a, Vector::from_column_slice(&self.b)).with_x_nonneg(self.x_nonneg);
        if let Some(c) = &self.c {
            let c = matrix(c, "C")?;
            let require_nonnegative = c.iter().all(|v| *v >= 0.0);
            fp = fp.with_cost_structure(CostStructure { c, require_nonnegative });
        }
        if let Some(labels) = &self.row_labels {
            fp = fp.with_row_labels(labels.clone());
        }
        Ok(fp)
    }

    pub fn data(&self) -> EnsembleData {
        EnsembleData::new(self.points.iter().map(|p| Vector::from_column_slice(p)).collect())
    }

    pub fn observations(&self) -> Observations {
        if self.points_are_objectives {
            Observations::Objectives(self.data())
        } else {
            Observations::Decisions(self.data())
        }
    }
}

fn vec_json(v: &Vector) -> Value {
    json!(v.iter().copied().collect::<Vec<f64>>())
}

pub fn fit_json(fit: &FitResult) -> Value {
    json!({
        "variant": fit.variant,
        "c_star": vec_json(&fit.c_star),
        "y_star": vec_json(&fit.y_star),
        "eps": fit.eps,
        "z_star": fit.z_star,
        "path": fit.path,
        "diagnostics": fit.diagnostics,
    })
}

pub fn gof_json(fit: &FitResult, gof: &GofReport) -> Value {
    let mut v = fit_json(fit);
    let obj = v.as_object_mut().expect("object");
    obj.insert("rho".into(), json!(gof.rho));
    obj.insert("rho_unclamped".into(), json!(gof.rho_unclamped));
    obj.insert("baselines".into(), json!(gof.baselines));
    obj.insert("excluded_rows".into(), json!(gof.excluded_rows));
    v
}

pub fn structured_json(fit: &StructuredFit) -> Value {
    json!({
        "variant": fit.variant,
        "alpha": vec_json(&fit.alpha),
        "c_star": vec_json(&fit.c_star),
        "y_star": vec_json(&fit.y_star),
        "eps": fit.eps,
        "z_star": fit.z_star,
        "path": crate::model::SolutionPath::Structured,
        "diagnostics": fit.diagnostics,
    })
}

fn csv_num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        v.to_string()
    }
}

pub fn sweep_csv(grid: &SweepGrid) -> String {
    let mut out = String::from("gamma1,gamma2,rho\n");
    for (g1, g2, r) in grid.cells() {
        writeln!(out, "{},{},{}", csv_num(g1), csv_num(g2), csv_num(r)).expect("writing to a String");
    }
    out
}
