mod common;

use common::*;
use invlp::adg::solve_adg;
use invlp::geometry::{feasible_project, project_to_hyperplane};
use invlp::lp::{solve_forward, solve_lp, LpProblem};
use invlp::model::{centroid, classify, EnsembleData, FeasibilityTag, FitConfig, ForwardProblem, Matrix, Norm, Vector};
use invlp::rdg::solve_rdg;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn config() -> ProptestConfig {
    ProptestConfig { cases: 64, ..ProptestConfig::default() }
}

fn instance(seed: u64) -> (Instance, rand_chacha::ChaCha8Rng) {
    let mut r = rng(seed);
    let n = r.gen_range(2..=4);
    let m = r.gen_range(n + 2..=8);
    (polytope(&mut r, n, m), r)
}

fn norm_strategy() -> impl Strategy<Value = Norm> {
    prop_oneof![Just(Norm::L1), Just(Norm::L2), Just(Norm::Linf)]
}

/// Smallest Euclidean distance from `x` to a feasible point of the form
/// "projection onto the affine hull of an active set containing `row`".
fn brute_l2(fp: &ForwardProblem, x: &Vector, row: usize) -> f64 {
    let (m, n) = (fp.m(), fp.n());
    let others: Vec<usize> = (0..m).filter(|&i| i != row).collect();
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << others.len()) {
        if mask.count_ones() as usize >= n {
            continue;
        }
        let mut active = vec![row];
        active.extend(others.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, i)| *i));
        let a = DMatrix::from_fn(active.len(), n, |r, c| fp.a()[(active[r], c)]);
        let resid = Vector::from_fn(active.len(), |r, _| fp.a().row(active[r]).dot(&x.transpose()) - fp.b()[active[r]]);
        let Ok(gram_inv) = (&a * a.transpose()).pseudo_inverse(1e-12) else { continue };
        let p = x - a.transpose() * (gram_inv * resid);
        if fp.is_feasible(&p, 1e-9) && (fp.residual(row, &p)).abs() <= 1e-9 {
            best = best.min((x - p).norm());
        }
    }
    best
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn classification_ignores_point_order(seed in any::<u64>(), q in 1usize..6) {
        let (inst, mut r) = instance(seed);
        let data = scattered(&mut r, &inst, q);
        let mut shuffled = data.points().to_vec();
        shuffled.shuffle(&mut r);
        let a = classify(&inst.fp, &data, invlp::tol::FEAS).tag;
        let b = classify(&inst.fp, &EnsembleData::new(shuffled), invlp::tol::FEAS).tag;
        prop_assert_eq!(a, b);
    }

    #[test]
    fn centroid_of_feasible_points_is_feasible(seed in any::<u64>(), q in 1usize..8) {
        let (inst, mut r) = instance(seed);
        let data = inside(&mut r, &inst, q);
        prop_assert_eq!(classify(&inst.fp, &data, invlp::tol::FEAS).tag, FeasibilityTag::AllFeasible);
        prop_assert!(inst.fp.is_feasible(&centroid(&data), invlp::tol::FEAS));
    }

    #[test]
    fn hyperplane_projection_lands_on_plane(seed in any::<u64>(), p in norm_strategy()) {
        let (inst, mut r) = instance(seed);
        let x = scattered(&mut r, &inst, 1).points()[0].clone();
        let x = &x;
        let i = r.gen_range(0..inst.fp.m());
        let a = inst.fp.row(i);
        let proj = project_to_hyperplane(x, &a, inst.fp.b()[i], p).unwrap();
        prop_assert!((a.dot(&proj.point) - inst.fp.b()[i]).abs() <= 1e-9 * (1.0 + x.amax()));
        prop_assert!((p.eval(proj.eps.as_slice()) - proj.distance.abs()).abs() <= 1e-9 * (1.0 + proj.distance.abs()));
    }

    #[test]
    fn face_projection_is_on_face_and_beyond_plane(seed in any::<u64>(), p in norm_strategy()) {
        let (inst, mut r) = instance(seed);
        let x = scattered(&mut r, &inst, 1).points()[0].clone();
        let x = &x;
        let i = r.gen_range(0..inst.fp.m());
        let proj = feasible_project(&inst.fp, x, i, p).unwrap();
        prop_assert!(inst.fp.is_feasible(&proj.point, 1e-8));
        prop_assert!(inst.fp.residual(i, &proj.point).abs() <= 1e-8);
        prop_assert!((p.eval(proj.eps.as_slice()) - proj.distance).abs() <= 1e-9 * (1.0 + proj.distance));
        let plane = project_to_hyperplane(x, &inst.fp.row(i), inst.fp.b()[i], p).unwrap();
        prop_assert!(proj.distance >= plane.distance.abs() - 1e-9);
    }

    #[test]
    fn euclidean_face_projection_matches_enumeration(seed in any::<u64>()) {
        let (inst, mut r) = instance(seed);
        let x = scattered(&mut r, &inst, 1).points()[0].clone();
        let x = &x;
        let i = r.gen_range(0..inst.fp.m());
        let proj = feasible_project(&inst.fp, x, i, Norm::L2).unwrap();
        let brute = brute_l2(&inst.fp, x, i);
        prop_assert!((proj.distance - brute).abs() <= 1e-7 * (1.0 + brute), "{} vs {}", proj.distance, brute);
    }

    #[test]
    fn lp_strong_duality(seed in any::<u64>()) {
        let (inst, mut r) = instance(seed);
        let fp = &inst.fp;
        let y0 = Vector::from_fn(fp.m(), |_, _| r.gen_range(0.0..1.0));
        let c = fp.a().transpose() * y0;
        let primal = solve_forward(fp, &c).unwrap();
        prop_assert!(primal.is_optimal());
        let mut dual = LpProblem::minimize(fp.b().iter().map(|v| -v).collect());
        for j in 0..fp.n() {
            dual.add_eq(fp.a().column(j).iter().copied().collect(), c[j]);
        }
        let dual = solve_lp(&dual);
        prop_assert!(dual.is_optimal());
        prop_assert!((primal.objective + dual.objective).abs() <= 1e-7 * (1.0 + primal.objective.abs()));
        prop_assert_eq!(solve_forward(fp, &c).unwrap(), primal);
    }

    #[test]
    fn absolute_fit_certificate(seed in any::<u64>(), q in 1usize..5, linf in any::<bool>(), mixed in any::<bool>()) {
        let (inst, mut r) = instance(seed);
        let data = if mixed { scattered(&mut r, &inst, q) } else { inside(&mut r, &inst, q) };
        let norm = if linf { Norm::Linf } else { Norm::L1 };
        let fit = solve_adg(&inst.fp, &data, &FitConfig::default().with_normalization(norm)).unwrap();
        let (c, y) = (&fit.c_star, &fit.y_star);
        prop_assert!((norm.eval(c.as_slice()) - 1.0).abs() <= 1e-9);
        prop_assert!((inst.fp.a().transpose() * y - c).amax() <= 1e-9);
        prop_assert!(y.iter().all(|v| *v >= -1e-12));
        let by = inst.fp.b().dot(y);
        let z: f64 = data.points().iter().map(|x| (c.dot(x) - by).abs()).sum();
        prop_assert!((z - fit.z_star).abs() <= 1e-8 * (1.0 + z));
    }

    #[test]
    fn relative_fit_is_scale_free(seed in any::<u64>(), q in 1usize..5, s in 0.1f64..10.0) {
        let (inst, mut r) = instance(seed);
        let data = scattered(&mut r, &inst, q);
        let base = solve_rdg(&inst.fp, &data, &FitConfig::default()).unwrap().z_star;
        let scaled_fp = inst.fp.with_rhs(inst.fp.b() * s);
        let scaled = EnsembleData::new(data.points().iter().map(|x| x * s).collect());
        let z = solve_rdg(&scaled_fp, &scaled, &FitConfig::default()).unwrap().z_star;
        let rows = Matrix::from_fn(inst.fp.m(), inst.fp.n(), |i, j| inst.fp.a()[(i, j)] * (1.0 + i as f64));
        let b = Vector::from_fn(inst.fp.m(), |i, _| inst.fp.b()[i] * (1.0 + i as f64));
        let w = solve_rdg(&ForwardProblem::new(rows, b), &data, &FitConfig::default()).unwrap().z_star;
        prop_assert!((z - base).abs() <= 1e-7 * (1.0 + base));
        prop_assert!((w - base).abs() <= 1e-7 * (1.0 + base));
    }
}
