use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::linalg;

fn quad_example() -> RatPoly {
    RatPoly::from_terms(
        3,
        [
            (Exponent::new(vec![2, 0, 0]), BigRational::from_integer(8.into())),
            (Exponent::new(vec![0, 2, 0]), BigRational::from_integer((-2).into())),
            (Exponent::new(vec![0, 0, 2]), BigRational::from_integer((-8).into())),
        ],
    )
}

fn uni(terms: &[(u32, i64)]) -> RatPoly {
    RatPoly::from_terms(
        1,
        terms
            .iter()
            .map(|&(e, c)| (Exponent::new(vec![e]), BigRational::from_integer(c.into()))),
    )
}

fn random_quartic(rng: &mut ChaCha8Rng, n: usize) -> FloatPoly {
    let terms: Vec<(Exponent, f64)> = exponents_up_to_degree(n, 4)
        .into_iter()
        .map(|e| (e, rng.random_range(-5..=5) as f64))
        .collect();
    FloatPoly::from_terms(n, terms)
}

#[test]
fn quadratic_lambda_max_example() {
    let f = quad_example();
    for point in [vec![0.0; 3], vec![1.0, -2.0, 0.5]] {
        let req = DecompositionRequest::new(Objective::LambdaMaxAtPoint { point }, ConvexityCone::Sos)
            .with_lambda_bound_cone(MatrixCone::Psd);
        let d = decompose(&f, &req).unwrap();
        assert!((d.objective_value - 16.0).abs() < 1e-4, "{}", d.objective_value);
        d.verify().unwrap();
        let hh = d.h.to_f64().hessian().eval_f64(&[0.0; 3]).unwrap();
        assert!((linalg::max_eigenvalue(&hh) - 16.0).abs() < 1e-4);
    }
}

#[test]
fn univariate_trace_example() {
    let f = uni(&[(12, 1), (10, -1), (6, 1), (4, -1)]);
    let req = DecompositionRequest::new(Objective::TraceAtPoint { point: vec![0.0] }, ConvexityCone::Sos);
    let d = decompose(&f, &req).unwrap();
    assert!(d.objective_value.abs() < 1e-6, "{}", d.objective_value);
    d.verify().unwrap();
    assert_eq!(&d.g - &d.h, f);
}

#[test]
fn dominance_examples() {
    let v = dominates(&uni(&[(12, 1), (6, 1)]), &uni(&[(12, 1), (8, -1), (6, 1)]), ConvexityCone::Sos).unwrap();
    assert!(v.dominated);
    assert_eq!(v.witness.unwrap().c, uni(&[(8, 1)]));

    let g = RatPoly::from_terms(
        3,
        [
            (Exponent::new(vec![2, 0, 0]), BigRational::from_integer(8.into())),
            (Exponent::new(vec![0, 2, 0]), BigRational::from_integer(6.into())),
        ],
    );
    let gp = RatPoly::from_terms(3, [(Exponent::new(vec![2, 0, 0]), BigRational::from_integer(8.into()))]);
    for cone in ConvexityCone::ALL {
        let v = dominates(&g, &gp, cone).unwrap();
        assert!(v.dominated);
        let w = v.witness.unwrap();
        assert!(w.nonaffine);
        assert_eq!(w.c.coeff(&Exponent::new(vec![0, 2, 0])).to_f64(), 6.0);
    }

    let affine = &g + &RatPoly::from_terms(3, [(Exponent::new(vec![1, 0, 0]), BigRational::from_integer(3.into()))]);
    assert!(!dominates(&affine, &g, ConvexityCone::Sos).unwrap().dominated);
    // Not convex, so not a dominance.
    assert!(!dominates(&gp, &g, ConvexityCone::Sos).unwrap().dominated);
}

#[test]
fn constant_and_affine_inputs() {
    let f = RatPoly::from_terms(
        2,
        [
            (Exponent::zero(2), BigRational::from_integer(4.into())),
            (Exponent::new(vec![0, 1]), BigRational::from_integer((-1).into())),
        ],
    );
    let d = decompose(&f, &DecompositionRequest::new(Objective::Feasibility, ConvexityCone::Dsos)).unwrap();
    assert_eq!(d.g, f);
    assert!(d.h.is_zero());
    d.verify().unwrap();
}

#[test]
fn convex_input_feasibility() {
    let f = interior_full(2, 4).p;
    for cone in ConvexityCone::ALL {
        let d = decompose(&f, &DecompositionRequest::new(Objective::Feasibility, cone)).unwrap();
        d.verify().unwrap();
        assert_eq!(&d.g - &d.h, f);
        assert!(d.h.affine_part().is_zero());
    }
}

#[test]
fn objective_ordering_across_cones() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..3 {
        let f = random_quartic(&mut rng, 3);
        let obj = |cone| {
            decompose(&f, &DecompositionRequest::new(Objective::UndominatedSphereTrace, cone))
                .unwrap()
                .objective_value
        };
        let (dsos, sdsos, sos) = (obj(ConvexityCone::Dsos), obj(ConvexityCone::Sdsos), obj(ConvexityCone::Sos));
        let tol = |x: f64| 1e-5 * (1.0 + x.abs());
        assert!(sos <= sdsos + tol(sdsos), "{sos} {sdsos}");
        assert!(sdsos <= dsos + tol(dsos), "{sdsos} {dsos}");
    }
}

#[test]
fn undominated_beats_feasible() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let f = random_quartic(&mut rng, 2);
    for cone in ConvexityCone::ALL {
        let star = decompose(&f, &DecompositionRequest::new(Objective::UndominatedSphereTrace, cone)).unwrap();
        let feas = decompose(&f, &DecompositionRequest::new(Objective::Feasibility, cone)).unwrap();
        let phi = avg_trace_hessian_functional(2, 4);
        let a = phi.apply(&star.g).to_f64();
        let b = phi.apply(&feas.g).to_f64();
        assert!(a <= b + 1e-6, "{a} > {b}");
        assert!((a - star.objective_value).abs() < 1e-9);
    }
}

#[test]
fn lambda_bounds_are_upper_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let f = random_quartic(&mut rng, 2);
    let x0 = vec![0.3, -0.7];
    let mut vals = Vec::new();
    for cone in [MatrixCone::Dd, MatrixCone::Sdd, MatrixCone::Psd] {
        let req = DecompositionRequest::new(Objective::LambdaMaxAtPoint { point: x0.clone() }, ConvexityCone::Sos)
            .with_lambda_bound_cone(cone);
        let d = decompose(&f, &req).unwrap();
        let hh = d.h.to_f64().hessian().eval_f64(&x0).unwrap();
        assert!(d.objective_value >= linalg::max_eigenvalue(&hh) - 1e-6);
        vals.push(d.objective_value);
    }
    assert!(vals[2] <= vals[1] + 1e-5 && vals[1] <= vals[0] + 1e-5, "{vals:?}");
}

#[test]
fn ball_objective_bounds_hessian_on_ball() {
    let f = uni(&[(4, 1), (2, -3)]);
    let req = DecompositionRequest::new(Objective::LambdaMaxOnBall { radius: 1.0 }, ConvexityCone::Sos)
        .with_lambda_bound_cone(MatrixCone::Psd);
    let d = decompose(&f, &req).unwrap();
    d.verify().unwrap();
    assert_eq!(d.bound_certificates.len(), 2);
    let h = d.h.to_f64();
    for k in 0..=20 {
        let x = -1.0 + 0.1 * k as f64;
        let v = h.hessian().eval_f64(&[x]).unwrap()[(0, 0)];
        assert!(v <= d.objective_value + 1e-6);
    }
}

#[test]
fn point_length_is_validated() {
    let req = DecompositionRequest::new(Objective::TraceAtPoint { point: vec![0.0] }, ConvexityCone::Sos);
    assert!(matches!(decompose(&quad_example(), &req), Err(Error::DimensionMismatch { .. })));
    let req = DecompositionRequest::new(Objective::LambdaMaxOnBall { radius: 0.0 }, ConvexityCone::Sos);
    assert!(matches!(decompose(&quad_example(), &req), Err(Error::InvalidInput(_))));
}

#[test]
fn json_output_has_fields() {
    let d = decompose(&quad_example(), &DecompositionRequest::new(Objective::Feasibility, ConvexityCone::Dsos)).unwrap();
    let v = d.to_json_value();
    for k in ["f", "g", "h", "objective", "objective_value", "cone", "g_margin", "h_margin"] {
        assert!(v.get(k).is_some(), "{k}");
    }
    assert_eq!(v["objective"]["kind"], "feas");
}

#[test]
fn interior_constructions_are_dsos_convex() {
    for n in 2..=3 {
        for deg in [2u32, 4, 6] {
            let c = interior_full(n, deg);
            check_convexity(&c.p, ConvexityCone::Dsos).unwrap();
        }
    }
}

#[test]
fn interior_is_robust_to_small_perturbations() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for (n, deg) in [(2usize, 4u32), (3, 4), (2, 6)] {
        let c = interior_full(n, deg);
        let eps = c.dd_margin.to_f64() / (10.0 * c.basis.len() as f64);
        for _ in 0..3 {
            let p = FloatPoly::from_terms(
                n,
                exponents_up_to_degree(n, deg)
                    .into_iter()
                    .map(|e| {
                        let base = c.p.coeff(&e).to_f64();
                        (e, base + rng.random_range(-eps..=eps))
                    }),
            );
            check_convexity(&p, ConvexityCone::Dsos).unwrap();
        }
    }
}
