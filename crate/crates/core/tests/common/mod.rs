#![allow(dead_code)]

use invlp::model::{EnsembleData, ForwardProblem, Matrix, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A region whose every facet touches a ball, so the ball lies inside it.
pub struct Instance {
    pub fp: ForwardProblem,
    pub center: Vector,
    pub radius: f64,
}

fn unit(rng: &mut ChaCha8Rng, n: usize) -> Vector {
    if n == 2 {
        let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        return Vector::from_vec(vec![th.cos(), th.sin()]);
    }
    loop {
        let v = Vector::from_fn(n, |_, _| StandardNormal.sample(rng));
        if v.norm() > 1e-3 {
            return v.normalize();
        }
    }
}

/// Planar instances spread the normals around the circle so the region is bounded.
pub fn polytope(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Instance {
    let center = Vector::from_fn(n, |_, _| rng.gen_range(-3.0..3.0));
    let radius = rng.gen_range(0.5..2.0);
    let mut rows = Vec::with_capacity(m);
    for i in 0..m {
        let dir = if n == 2 {
            let th = std::f64::consts::TAU * (i as f64 + rng.gen_range(0.1..0.9)) / m as f64;
            Vector::from_vec(vec![th.cos(), th.sin()])
        } else {
            unit(rng, n)
        };
        let scale = rng.gen_range(0.5..2.0);
        rows.push(dir * scale);
    }
    let a = Matrix::from_fn(m, n, |i, j| rows[i][j]);
    let b = Vector::from_fn(m, |i, _| rows[i].dot(&center) - radius * rows[i].norm());
    Instance { fp: ForwardProblem::new(a, b), center, radius }
}

/// Points strictly inside the inscribed ball.
pub fn inside(rng: &mut ChaCha8Rng, inst: &Instance, q: usize) -> EnsembleData {
    let n = inst.center.len();
    EnsembleData::new(
        (0..q)
            .map(|_| {
                let u: f64 = rng.gen_range(0.0..0.95);
                let d = unit(rng, n);
                &inst.center + d * (inst.radius * u)
            })
            .collect(),
    )
}

/// Points scattered around the region, some inside and some outside.
pub fn scattered(rng: &mut ChaCha8Rng, inst: &Instance, q: usize) -> EnsembleData {
    let n = inst.center.len();
    EnsembleData::new(
        (0..q).map(|_| &inst.center + Vector::from_fn(n, |_, _| rng.gen_range(-4.0..4.0) * inst.radius)).collect(),
    )
}

pub fn square() -> ForwardProblem {
    ForwardProblem::from_rows(
        &[vec![-1.0, 0.0], vec![0.0, -1.0], vec![1.0, 0.0], vec![0.0, 1.0]],
        &[-7.0, -7.0, 1.0, 1.0],
    )
}

pub fn cone() -> ForwardProblem {
    ForwardProblem::from_rows(&[vec![1.0, -1.0], vec![-1.0, -1.0]], &[0.0, 0.0])
}

pub fn x_hat_1() -> EnsembleData {
    EnsembleData::from_rows(&[vec![3.75, 2.0], vec![4.0, 2.25], vec![4.25, 2.0]])
}

pub fn x_hat_2() -> EnsembleData {
    EnsembleData::from_rows(&[vec![1.5, 2.0], vec![4.0, 6.25], vec![6.5, 2.0]])
}
