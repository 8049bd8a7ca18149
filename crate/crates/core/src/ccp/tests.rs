use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::certify::ConvexityCone;
use crate::conic::MatrixCone;
use crate::dcd::dominates;
use crate::linalg;
use crate::poly::{exponents_up_to_degree, Exponent, FloatPoly};

fn uni(terms: &[(u32, i64)]) -> RatPoly {
    RatPoly::from_terms(
        1,
        terms
            .iter()
            .map(|&(e, c)| (Exponent::new(vec![e]), BigRational::from_integer(c.into()))),
    )
}

fn funi(terms: &[(u32, f64)]) -> FloatPoly {
    FloatPoly::from_terms(1, terms.iter().map(|&(e, c)| (Exponent::new(vec![e]), c)))
}

#[test]
fn convexify_examples() {
    // Affine h: linearization is exact.
    let g = uni(&[(4, 1), (2, 3)]);
    let h = uni(&[(1, 5), (0, -2)]);
    for x in [-1.5, 0.0, 2.25] {
        assert_eq!(convexify(&g, &h, &[x]).unwrap(), &g - &h);
    }
    assert_eq!(convexify(&uni(&[(2, 1)]), &RatPoly::zero(1), &[0.7]).unwrap(), uni(&[(2, 1)]));

    let g = uni(&[(12, 1), (6, 1)]);
    let h = uni(&[(10, 1), (4, 1)]);
    let fk = convexify(&g, &h, &[1.0]).unwrap();
    // x¹² + x⁶ − (2 + 14(x − 1))
    assert_eq!(fk, uni(&[(12, 1), (6, 1), (1, -14), (0, 12)]));
    let one = [BigRational::from_integer(BigInt::from(1))];
    assert_eq!(fk.eval(&one).unwrap(), (&g - &h).eval(&one).unwrap());
}

#[test]
fn majorization_at_random_points() {
    let f = random_instance(2, 4, 9);
    let d = decompose(&f, &DecompositionRequest::new(Objective::Feasibility, ConvexityCone::Sos)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let xk = [0.4, -1.1];
    let fk = convexify(&d.g, &d.h, &xk).unwrap().to_f64();
    let ff = f.to_f64();
    assert!((fk.eval_f64(&xk).unwrap() - ff.eval_f64(&xk).unwrap()).abs() < 1e-9);
    for _ in 0..1000 {
        let x: Vec<f64> = (0..2).map(|_| rng.random_range(-3.0..3.0)).collect();
        let (a, b) = (fk.eval_f64(&x).unwrap(), ff.eval_f64(&x).unwrap());
        assert!(a >= b - 1e-9 * (1.0 + b.abs()), "{a} < {b} at {x:?}");
    }
}

#[test]
fn dominance_transfers_to_models() {
    // f = x¹² − x¹⁰ + x⁶ − x⁴ with g = x¹² + x⁶ dominated by g′ = x¹² − x⁸ + x⁶.
    let f = uni(&[(12, 1), (10, -1), (6, 1), (4, -1)]);
    let g = uni(&[(12, 1), (6, 1)]);
    let gp = uni(&[(12, 1), (8, -1), (6, 1)]);
    assert!(dominates(&g, &gp, ConvexityCone::Sos).unwrap().dominated);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for x0 in [-0.8, 0.3, 1.1] {
        let fg = convexify(&g, &(&g - &f), &[x0]).unwrap().to_f64();
        let fgp = convexify(&gp, &(&gp - &f), &[x0]).unwrap().to_f64();
        for _ in 0..1000 {
            let x = [rng.random_range(-1.5..1.5)];
            let (a, b) = (fgp.eval_f64(&x).unwrap(), fg.eval_f64(&x).unwrap());
            assert!(a <= b + 1e-9 * (1.0 + b.abs()), "{a} > {b}");
        }
    }
}

#[test]
fn subroutine_examples() {
    let s = convex_subroutine(&funi(&[(2, 1.0)]), &[], &[3.0], 1e-8).unwrap();
    assert!(s.gamma.abs() < 1e-6 && s.x_next[0].abs() < 1e-6);

    let s = convex_subroutine(&funi(&[(2, 1.0), (1, -2.0)]), &[funi(&[(2, 1.0), (0, -1.0)])], &[0.0], 1e-8).unwrap();
    assert!((s.gamma + 1.0).abs() < 1e-6, "{}", s.gamma);
    assert!((s.x_next[0] - 1.0).abs() < 1e-4, "{:?}", s.x_next);
    assert!(s.gap.abs() < 1e-6);

    let ball = ball_constraint(2, 3.0).to_f64();
    let f0 = FloatPoly::from_terms(2, [(Exponent::new(vec![2, 0]), 1.0), (Exponent::new(vec![0, 2]), 1.0)]);
    let s = convex_subroutine(&f0, &[ball], &[1.0, 1.0], 1e-8).unwrap();
    assert!(s.gamma.abs() < 1e-6);

    // Lower bound with an active constraint and a linear objective.
    let s = convex_subroutine(&funi(&[(1, 1.0)]), &[funi(&[(2, 1.0), (0, -1.0)])], &[0.5], 1e-8).unwrap();
    assert!((s.gamma + 1.0).abs() < 1e-6 && (s.x_next[0] + 1.0).abs() < 1e-3);
}

#[test]
fn subroutine_starts_from_the_boundary() {
    let s = convex_subroutine(&funi(&[(2, 1.0), (1, -4.0)]), &[funi(&[(2, 1.0), (0, -1.0)])], &[-1.0], 1e-8).unwrap();
    assert!((s.gamma + 3.0).abs() < 1e-6);
    assert!((s.x_next[0] - 1.0).abs() < 1e-4);
}

#[test]
fn unbounded_subproblem_is_reported() {
    let r = convex_subroutine(&funi(&[(1, 1.0)]), &[], &[0.0], 1e-8);
    // x − γ is never sos; the solver may call this infeasible or fail numerically.
    assert!(matches!(r, Err(Error::Subproblem(_) | Error::Solver { .. })), "{r:?}");
}

#[test]
fn convex_objective_converges_at_once() {
    let f0 = uni(&[(4, 1), (2, 1), (1, -3)]);
    let inst = ProblemInstance::unconstrained(f0);
    // The undominated decomposition of a convex polynomial has h = 0.
    let cfg = CcpConfig::new(DecompositionRequest::new(Objective::UndominatedSphereTrace, ConvexityCone::Sos));
    let tr = ccp(&inst, &cfg, &[2.0]).unwrap();
    assert!(tr.iterations() <= 2, "{}", tr.iterations());
    // f′ = 4x³ + 2x − 3 vanishes at the optimum.
    let x = tr.iterates.last().unwrap().x[0];
    assert!((4.0 * x.powi(3) + 2.0 * x - 3.0).abs() < 1e-5);
}

#[test]
fn double_well_on_ball() {
    let inst = ProblemInstance::new(uni(&[(4, 1), (2, -1)]), vec![ball_constraint(1, 2.0)]).unwrap();
    let cfg = CcpConfig::new(DecompositionRequest::new(Objective::Feasibility, ConvexityCone::Sos));
    let tr = ccp(&inst, &cfg, &[0.9]).unwrap();
    assert!(tr.max_ascent() <= 1e-6);
    let last = tr.iterates.last().unwrap();
    assert!((last.objective + 0.25).abs() < 1e-4, "{}", last.objective);
    assert!((last.x[0] - 0.5f64.sqrt()).abs() < 1e-2);
    assert!(tr.iterates.iter().all(|it| it.max_violation <= 1e-6));
    assert_eq!(tr.to_json_lines().lines().count(), tr.iterates.len());
}

#[test]
fn infeasible_start_is_rejected() {
    let inst = ProblemInstance::new(uni(&[(4, 1), (2, -1)]), vec![ball_constraint(1, 1.0)]).unwrap();
    let cfg = CcpConfig::new(DecompositionRequest::new(Objective::Feasibility, ConvexityCone::Sos));
    assert!(matches!(ccp(&inst, &cfg, &[1.5]), Err(Error::InvalidInput(_))));
}

#[test]
fn random_ensemble_descent() {
    for seed in 0..2u64 {
        let f0 = random_instance(2, 4, seed);
        let inst = ProblemInstance::unconstrained(f0);
        let x0 = random_start(2, seed, None);
        let cfg = CcpConfig::new(DecompositionRequest::new(Objective::UndominatedSphereTrace, ConvexityCone::Sdsos));
        let tr = ccp(&inst, &cfg, &x0).unwrap();
        assert!(tr.max_ascent() <= 1e-6);

        let cfg = CcpConfig {
            max_iterations: 20,
            ..CcpConfig::new(
                DecompositionRequest::new(Objective::Feasibility, ConvexityCone::Dsos)
                    .with_lambda_bound_cone(MatrixCone::Dd),
            )
        };
        let tr = multi_decomp_ccp(&inst, &cfg, &x0).unwrap();
        assert!(tr.max_ascent() <= 1e-6);
        for it in &tr.iterates[..tr.iterates.len() - 1] {
            let hh = it.h[0].to_f64().hessian().eval_f64(&it.x).unwrap();
            assert!(it.lambda_bounds[0] >= linalg::max_eigenvalue(&hh) - 1e-6);
        }
    }
}

#[test]
fn random_instance_contract() {
    let a = random_instance(3, 4, 42);
    assert_eq!(a, random_instance(3, 4, 42));
    assert_ne!(a, random_instance(3, 4, 43));
    for i in 0..3 {
        let mut e = vec![0u32; 3];
        e[i] = 4;
        assert_eq!(a.coeff(&Exponent::new(e)), BigRational::from_integer(1.into()));
    }
    let thirty = BigRational::from_integer(30.into());
    for e in exponents_up_to_degree(3, 3) {
        let c = a.coeff(&e);
        assert!(c.is_integer() && c <= thirty && c >= -thirty.clone());
    }
    assert_eq!(a.degree(), 4);
    let x = random_start(4, 1, Some(1.0));
    assert!(x.iter().map(|v| v * v).sum::<f64>().sqrt() <= 0.9 + 1e-12);
}
