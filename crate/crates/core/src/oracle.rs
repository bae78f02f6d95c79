//! Brute-force reference values for the three losses.
//!
//! Nothing here calls the LP engine or the solvers. The set of attainable
//! dual values `T(c) = {bᵀy : y ≥ 0, Aᵀy = c}` comes from enumerating basic
//! solutions and extreme rays with dense linear algebra, and the searches
//! over c are exhaustive over breakpoint directions plus an angular sweep.
//! Forward problems are read as `min cᵀx s.t. Ax ≥ b` with x free.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::model::{EnsembleData, ForwardProblem, Norm, Vector};

pub const DEFAULT_ANGULAR_STEP: f64 = 1e-3;
pub const DEFAULT_GRID_STEP: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleAnswer {
    pub value: f64,
    /// Best cost direction found, scaled to unit normalization norm for ADG
    /// and unit 2-norm for RDG.
    pub direction: Option<Vector>,
}

fn subsets(m: usize, size: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, m: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            cur.push(i);
            rec(i + 1, m, size, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, m, size, &mut Vec::with_capacity(size), &mut out);
    out
}

fn columns(fp: &ForwardProblem, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(fp.n(), rows.len(), |r, k| fp.a()[(rows[k], r)])
}

struct Basis {
    rows: Vec<usize>,
    cols: DMatrix<f64>,
    pinv: DMatrix<f64>,
}

/// Basic solutions and recession directions of `{y ≥ 0, Aᵀy = c}`.
struct DualSet {
    bases: Vec<Basis>,
    b: Vector,
    up_unbounded: bool,
    down_unbounded: bool,
}

impl DualSet {
    fn new(fp: &ForwardProblem) -> Self {
        let (m, n) = (fp.m(), fp.n());
        let mut bases = Vec::new();
        for size in 1..=n.min(m) {
            for rows in subsets(m, size) {
                let cols = columns(fp, &rows);
                let gram = cols.transpose() * &cols;
                let eig = SymmetricEigen::new(gram.clone());
                let hi = eig.eigenvalues.amax();
                if eig.eigenvalues.min() <= 1e-12 * hi.max(1.0) {
                    continue;
                }
                let pinv = gram.try_inverse().expect("well-conditioned Gram matrix") * cols.transpose();
                bases.push(Basis { rows, cols, pinv });
            }
        }
        let (mut up_unbounded, mut down_unbounded) = (false, false);
        for size in 2..=(n + 1).min(m) {
            for rows in subsets(m, size) {
                let cols = columns(fp, &rows);
                let eig = SymmetricEigen::new(cols.transpose() * &cols);
                let hi = eig.eigenvalues.amax().max(1.0);
                let null: Vec<usize> = (0..size).filter(|&k| eig.eigenvalues[k] <= 1e-12 * hi).collect();
                if null.len() != 1 {
                    continue;
                }
                let mut r = eig.eigenvectors.column(null[0]).into_owned();
                if r.sum() < 0.0 {
                    r = -r;
                }
                if r.iter().all(|v| *v > 1e-9) {
                    let br: f64 = rows.iter().zip(r.iter()).map(|(&i, v)| fp.b()[i] * v).sum();
                    up_unbounded |= br > 1e-12;
                    down_unbounded |= br < -1e-12;
                }
            }
        }
        DualSet { bases, b: fp.b().clone(), up_unbounded, down_unbounded }
    }

    /// `[min T(c), max T(c)]`, or `None` when c is not dual feasible.
    fn range(&self, c: &Vector) -> Option<(f64, f64)> {
        let scale = 1.0 + c.amax();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for basis in &self.bases {
            let y = &basis.pinv * c;
            if y.iter().any(|v| *v < -1e-10 * scale) {
                continue;
            }
            if (&basis.cols * &y - c).amax() > 1e-9 * scale {
                continue;
            }
            let t: f64 = basis.rows.iter().zip(y.iter()).map(|(&i, v)| self.b[i] * v).sum();
            lo = lo.min(t);
            hi = hi.max(t);
        }
        if lo > hi {
            return None;
        }
        if self.up_unbounded {
            hi = f64::INFINITY;
        }
        if self.down_unbounded {
            lo = f64::NEG_INFINITY;
        }
        Some((lo, hi))
    }
}

fn adg_value(values: &[f64], lo: f64, hi: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let t = v[(v.len() - 1) / 2].clamp(lo, hi);
    values.iter().map(|s| (s - t).abs()).sum()
}

/// `min Σ|u·v_q − 1|` over `u = 1/t`, `t ∈ [lo, hi]`, `t ≠ 0`, with the
/// limits `t → ±∞` included; zero if `t = 0` is attainable and every `v_q = 0`.
fn rdg_value(values: &[f64], lo: f64, hi: f64) -> f64 {
    const TINY: f64 = 1e-12;
    let flat = values.iter().all(|v| v.abs() <= 1e-9);
    if flat && lo <= TINY && hi >= -TINY {
        return 0.0;
    }
    let inv = |t: f64| if t.is_infinite() { 0.0 } else { 1.0 / t };
    let mut intervals = Vec::new();
    if lo > TINY || hi < -TINY {
        intervals.push((inv(hi), inv(lo)));
    } else {
        if lo < -TINY {
            intervals.push((f64::NEG_INFINITY, inv(lo)));
        }
        if hi > TINY {
            intervals.push((inv(hi), f64::INFINITY));
        }
    }
    let g = |u: f64| values.iter().map(|v| (u * v - 1.0).abs()).sum::<f64>();
    let mut best = f64::INFINITY;
    for (a, b) in intervals {
        let mut cands: Vec<f64> = [a, b].into_iter().filter(|u| u.is_finite()).collect();
        cands.extend(values.iter().filter(|v| v.abs() > 1e-300).map(|v| 1.0 / v).filter(|u| *u >= a && *u <= b));
        if cands.is_empty() {
            cands.push(if a.is_finite() { a } else if b.is_finite() { b } else { 0.0 });
        }
        for u in cands {
            best = best.min(g(u));
        }
    }
    best
}

fn scaled(c: Vector, norm: Norm) -> Option<Vector> {
    let s = norm.eval(c.as_slice());
    (s > 1e-12).then(|| c / s)
}

fn perp(v: &Vector) -> Vector {
    Vector::from_vec(vec![-v[1], v[0]])
}

/// Directions at which the loss can change slope in the plane: normals of
/// segments between data points, the origin and pairwise row intersections;
/// row normals; and the corners of the normalization ball.
fn plane_candidates(fp: &ForwardProblem, data: &EnsembleData, norm: Norm) -> Vec<Vector> {
    let mut pts: Vec<Vector> = data.points().to_vec();
    pts.push(Vector::zeros(2));
    for pair in subsets(fp.m(), 2) {
        let m = DMatrix::from_fn(2, 2, |r, k| fp.a()[(pair[r], k)]);
        if m.determinant().abs() > 1e-12 {
            let rhs = Vector::from_vec(vec![fp.b()[pair[0]], fp.b()[pair[1]]]);
            if let Some(x) = m.lu().solve(&rhs) {
                pts.push(x);
            }
        }
    }
    let mut dirs = Vec::new();
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let d = perp(&(&pts[j] - &pts[i]));
            if d.norm() > 1e-12 {
                dirs.push(-&d);
                dirs.push(d);
            }
        }
    }
    for i in 0..fp.m() {
        let a = fp.row(i);
        dirs.push(perp(&a));
        dirs.push(-perp(&a));
        dirs.push(-&a);
        dirs.push(a);
    }
    let corners: &[[f64; 2]] = match norm {
        Norm::Linf => &[[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]],
        _ => &[[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]],
    };
    dirs.extend(corners.iter().map(|c| Vector::from_vec(c.to_vec())));
    dirs
}

fn sweep(step: f64) -> Vec<Vector> {
    let k = (std::f64::consts::TAU / step).ceil() as usize;
    (0..k).map(|s| {
        let th = s as f64 * step;
        Vector::from_vec(vec![th.cos(), th.sin()])
    })
    .collect()
}

fn check_step(step: f64) -> Result<()> {
    if step.is_finite() && step > 0.0 {
        Ok(())
    } else {
        Err(Error::Invalid("step must be positive".into()))
    }
}

fn best_over<F: Fn(&Vector) -> Option<f64>>(dirs: impl IntoIterator<Item = Vector>, f: F) -> OracleAnswer {
    let mut best = OracleAnswer { value: f64::INFINITY, direction: None };
    for c in dirs {
        if let Some(v) = f(&c) {
            if v < best.value {
                best = OracleAnswer { value: v, direction: Some(c) };
            }
        }
    }
    best
}

/// ADG loss minimized over rows `c = a_i/‖a_i‖′` with the optimal dual value.
pub fn oracle_adg_rows(fp: &ForwardProblem, data: &EnsembleData, norm: Norm) -> Result<OracleAnswer> {
    let duals = DualSet::new(fp);
    let dirs = (0..fp.m()).filter_map(|i| scaled(fp.row(i), norm));
    Ok(best_over(dirs, |c| adg_at(&duals, data, c)))
}

fn adg_at(duals: &DualSet, data: &EnsembleData, c: &Vector) -> Option<f64> {
    let (lo, hi) = duals.range(c)?;
    let v: Vec<f64> = data.points().iter().map(|x| c.dot(x)).collect();
    Some(adg_value(&v, lo, hi))
}

/// Exact ADG optimum for n = 2 (breakpoint directions plus a sweep at
/// `angular_step`); row candidates for other n.
pub fn oracle_adg(fp: &ForwardProblem, data: &EnsembleData, norm: Norm, angular_step: f64) -> Result<OracleAnswer> {
    check_step(angular_step)?;
    if norm == Norm::L2 {
        return Err(Error::Invalid("normalization must be l1 or linf".into()));
    }
    if fp.n() != 2 {
        return oracle_adg_rows(fp, data, norm);
    }
    let duals = DualSet::new(fp);
    let dirs = plane_candidates(fp, data, norm).into_iter().chain(sweep(angular_step)).filter_map(|c| scaled(c, norm));
    Ok(best_over(dirs, |c| adg_at(&duals, data, c)))
}

fn rdg_at(duals: &DualSet, data: &EnsembleData, c: &Vector) -> Option<f64> {
    let (lo, hi) = duals.range(c)?;
    let v: Vec<f64> = data.points().iter().map(|x| c.dot(x)).collect();
    Some(rdg_value(&v, lo, hi))
}

/// RDG optimum; the loss is scale free so directions are unit 2-norm.
pub fn oracle_rdg(fp: &ForwardProblem, data: &EnsembleData, angular_step: f64) -> Result<OracleAnswer> {
    check_step(angular_step)?;
    let duals = DualSet::new(fp);
    if fp.n() != 2 {
        let dirs = (0..fp.m()).filter_map(|i| scaled(fp.row(i), Norm::L2));
        return Ok(best_over(dirs, |c| rdg_at(&duals, data, c)));
    }
    let dirs = plane_candidates(fp, data, Norm::L2).into_iter().chain(sweep(angular_step)).filter_map(|c| scaled(c, Norm::L2));
    Ok(best_over(dirs, |c| rdg_at(&duals, data, c)))
}

/// The face `{x : a_iᵀx = b_i, Ax ≥ b}` of a planar region as
/// `x0 + s·d` with `s ∈ [lo, hi]` and `‖d‖₂ = 1`.
struct Segment {
    x0: Vector,
    d: Vector,
    lo: f64,
    hi: f64,
}

fn face_segment(fp: &ForwardProblem, i: usize) -> Option<Segment> {
    let a = fp.row(i);
    let x0 = &a * (fp.b()[i] / a.norm_squared());
    let d = perp(&a) / a.norm();
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for j in (0..fp.m()).filter(|&j| j != i) {
        let aj = fp.row(j);
        let slope = aj.dot(&d);
        let base = aj.dot(&x0) - fp.b()[j];
        let scale = 1.0 + aj.amax() * (1.0 + x0.amax()) + fp.b()[j].abs();
        if slope.abs() <= 1e-12 * aj.norm() {
            if base < -1e-9 * scale {
                return None;
            }
        } else if slope > 0.0 {
            lo = lo.max(-base / slope);
        } else {
            hi = hi.min(-base / slope);
        }
    }
    (lo <= hi + 1e-12).then(|| Segment { x0, d, lo, hi: hi.max(lo) })
}

fn dist(e: &Vector, p: Norm) -> f64 {
    p.eval(e.as_slice())
}

fn point_to_segment(seg: &Segment, x: &Vector, p: Norm, grid_step: f64) -> f64 {
    let r = x - &seg.x0;
    let clamp = |s: f64| s.clamp(seg.lo, seg.hi);
    let err = |s: f64| dist(&(&r - &seg.d * s), p);
    let s2 = clamp(r.dot(&seg.d));
    let mut cands = vec![s2];
    cands.extend([seg.lo, seg.hi].into_iter().filter(|s| s.is_finite()));
    let (d1, d2) = (seg.d[0], seg.d[1]);
    let mut push = |num: f64, den: f64| {
        if den.abs() > 1e-15 {
            cands.push(clamp(num / den));
        }
    };
    match p {
        Norm::L1 => {
            push(r[0], d1);
            push(r[1], d2);
        }
        Norm::Linf => {
            push(r[0] - r[1], d1 - d2);
            push(r[0] + r[1], d1 + d2);
        }
        Norm::L2 => {}
    }
    let mut best = cands.iter().map(|s| err(*s)).fold(f64::INFINITY, f64::min);
    let window = std::f64::consts::SQRT_2 * err(s2) + grid_step;
    let (a, b) = ((s2 - window).max(seg.lo), (s2 + window).min(seg.hi));
    let steps = ((b - a) / grid_step).ceil() as usize;
    for k in 0..=steps {
        best = best.min(err((a + k as f64 * grid_step).min(b)));
    }
    best
}

/// Decision-space optimum for n = 2: every face, every point, exact
/// breakpoints along the face plus a grid at `grid_step`.
pub fn oracle_dsp(fp: &ForwardProblem, data: &EnsembleData, p: Norm, grid_step: f64) -> Result<f64> {
    check_step(grid_step)?;
    if fp.n() != 2 {
        return Err(Error::Unsupported("decision-space oracle needs n = 2".into()));
    }
    let mut best = f64::INFINITY;
    for i in 0..fp.m() {
        if let Some(seg) = face_segment(fp, i) {
            let v: f64 = data.points().iter().map(|x| point_to_segment(&seg, x, p, grid_step)).sum();
            best = best.min(v);
        }
    }
    Ok(best)
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
    fn dual_range_on_square() {
        let d = DualSet::new(&square());
        let (lo, hi) = d.range(&Vector::from_vec(vec![0.0, 1.0])).unwrap();
        assert_abs_diff_eq!(hi, 1.0, epsilon = 1e-12);
        // y = e₀ + e₂ is a ray with bᵀy = −6.
        assert_eq!(lo, f64::NEG_INFINITY);
        assert!(!d.up_unbounded && d.down_unbounded);
    }

    #[test]
    fn cone_rays() {
        let d = DualSet::new(&cone());
        assert!(d.range(&Vector::from_vec(vec![0.0, 1.0])).is_none());
        assert_eq!(d.range(&Vector::from_vec(vec![0.0, -1.0])), Some((0.0, 0.0)));
    }

    #[test]
    fn adg_square() {
        for norm in [Norm::L1, Norm::Linf] {
            let a = oracle_adg(&square(), &x1(), norm, DEFAULT_ANGULAR_STEP).unwrap();
            assert_abs_diff_eq!(a.value, 3.25, epsilon = 1e-9);
            assert_abs_diff_eq!(a.direction.unwrap(), Vector::from_vec(vec![0.0, 1.0]), epsilon = 1e-9);
        }
        let rows = oracle_adg_rows(&square(), &x1(), Norm::L1).unwrap();
        assert_abs_diff_eq!(rows.value, 3.25, epsilon = 1e-12);
    }

    #[test]
    fn adg_cone_mixed_point() {
        let data = EnsembleData::from_rows(&[vec![3.0, 0.0]]);
        let a = oracle_adg(&cone(), &data, Norm::L1, DEFAULT_ANGULAR_STEP).unwrap();
        assert_abs_diff_eq!(a.value, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(a.direction.unwrap(), Vector::from_vec(vec![0.0, -1.0]), epsilon = 1e-12);
    }

    #[test]
    fn facet_data_is_zero() {
        let data = EnsembleData::from_rows(&[vec![2.0, 1.0], vec![5.0, 1.0]]);
        assert_abs_diff_eq!(oracle_adg(&square(), &data, Norm::L1, 1e-2).unwrap().value, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(oracle_rdg(&square(), &data, 1e-2).unwrap().value, 0.0, epsilon = 1e-12);
        for p in [Norm::L1, Norm::L2, Norm::Linf] {
            assert_abs_diff_eq!(oracle_dsp(&square(), &data, p, 1e-2).unwrap(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn rdg_square() {
        let a = oracle_rdg(&square(), &x1(), DEFAULT_ANGULAR_STEP).unwrap();
        assert_abs_diff_eq!(a.value, 9.0 / 7.0, epsilon = 1e-9);
        let c = a.direction.unwrap();
        assert_abs_diff_eq!(c, Vector::from_vec(vec![-1.0, 0.0]), epsilon = 1e-9);
    }

    #[test]
    fn rdg_cone_mixed_point() {
        let data = EnsembleData::from_rows(&[vec![3.0, 0.0]]);
        assert_eq!(oracle_rdg(&cone(), &data, DEFAULT_ANGULAR_STEP).unwrap().value, 0.0);
    }

    #[test]
    fn dsp_square() {
        let v = oracle_dsp(&square(), &x1(), Norm::Linf, DEFAULT_GRID_STEP).unwrap();
        assert_abs_diff_eq!(v, 3.25, epsilon = 1e-12);
        let x2 = EnsembleData::from_rows(&[vec![1.5, 2.0], vec![4.0, 6.25], vec![6.5, 2.0]]);
        let v = oracle_dsp(&square(), &x2, Norm::Linf, DEFAULT_GRID_STEP).unwrap();
        assert_abs_diff_eq!(v, 7.25, epsilon = 1e-12);
    }

    #[test]
    fn median_and_ratio_helpers() {
        assert_eq!(adg_value(&[1.0, 2.0, 10.0], 3.0, 5.0), 2.0 + 1.0 + 7.0);
        assert_eq!(rdg_value(&[2.0, 4.0], 1.0, 2.0), 1.0);
        assert_eq!(rdg_value(&[2.0, 4.0], 1.0, f64::INFINITY), 0.5);
        assert_eq!(rdg_value(&[2.0, 4.0], -1.0, 1.0), 4.0);
    }
}
