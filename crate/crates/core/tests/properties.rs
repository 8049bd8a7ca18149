use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use proptest::prelude::*;

use dcpoly::ccp::convexify;
use dcpoly::dcd::interior_homogeneous;
use dcpoly::linalg::{dd_margin, min_eigenvalue, sdd_margin};
use dcpoly::poly::{exponents_up_to_degree, Exponent, RatPoly};
use dcpoly::sphere::{avg_trace_hessian_functional, monomial_sphere_integral, normalized_moment, sphere_area};

fn r(a: i64, b: i64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

fn arb_poly(n: usize, max_deg: u32) -> impl Strategy<Value = RatPoly> {
    let exps = exponents_up_to_degree(n, max_deg);
    let len = exps.len();
    proptest::collection::vec((0..len, -9i64..=9, 1i64..=4), 0..10)
        .prop_map(move |ts| RatPoly::from_terms(n, ts.into_iter().map(|(k, a, b)| (exps[k].clone(), r(a, b)))))
}

fn arb_exponent(max_n: usize, max_pow: u32) -> impl Strategy<Value = Exponent> {
    (1..=max_n).prop_flat_map(move |n| proptest::collection::vec(0..=max_pow, n).prop_map(Exponent::new))
}

fn arb_sym(k: usize) -> impl Strategy<Value = DMatrix<f64>> {
    proptest::collection::vec(-3.0f64..3.0, k * k).prop_map(move |v| {
        let m = DMatrix::from_vec(k, k, v);
        (&m + m.transpose()) * 0.5
    })
}

/// `Σ_i (a_i · x)² + Σ_i x_i⁴`, convex for any integer `a`.
fn convex_poly(n: usize, rows: &[Vec<i64>]) -> RatPoly {
    let mut p = RatPoly::zero(n);
    for a in rows {
        let mut lin = RatPoly::zero(n);
        for (i, &c) in a.iter().enumerate() {
            lin = &lin + &RatPoly::var(n, i).scale(&r(c, 1));
        }
        p = &p + &(&lin * &lin);
    }
    for i in 0..n {
        let mut e = vec![0u32; n];
        e[i] = 4;
        p = &p + &RatPoly::monomial(Exponent::new(e), r(1, 1));
    }
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sphere_moments_sum_over_squares(alpha in arb_exponent(5, 4)) {
        let n = alpha.len();
        let mut total = BigRational::zero();
        for i in 0..n {
            total += normalized_moment(&alpha.add(&Exponent::unit(n, i).add(&Exponent::unit(n, i))));
        }
        prop_assert_eq!(total, normalized_moment(&alpha));
    }

    #[test]
    fn odd_moments_vanish(alpha in arb_exponent(5, 5)) {
        let v = monomial_sphere_integral(&alpha);
        if alpha.powers().iter().any(|p| p % 2 == 1) {
            prop_assert!(v.coeff.is_zero());
        } else {
            prop_assert!(v.coeff.is_positive());
            prop_assert_eq!(v.sqrt_pi_power, sphere_area(alpha.len()).sqrt_pi_power);
        }
    }

    #[test]
    fn trace_functional_is_linear(
        (p, q, a, b) in (1usize..=3).prop_flat_map(|n| (arb_poly(n, 4), arb_poly(n, 4), -5i64..=5, -5i64..=5))
    ) {
        let phi = avg_trace_hessian_functional(p.nvars(), 4);
        let (a, b) = (r(a, 1), r(b, 2));
        let combo = &p.scale(&a) + &q.scale(&b);
        prop_assert_eq!(phi.apply(&combo), a * phi.apply(&p) + b * phi.apply(&q));
        // Affine parts carry no weight.
        prop_assert_eq!(phi.apply(&p.affine_part()), BigRational::zero());
    }

    #[test]
    fn margins_respect_cone_inclusions(m in (2usize..=6).prop_flat_map(arb_sym)) {
        let (dd, sdd, psd) = (dd_margin(&m), sdd_margin(&m), min_eigenvalue(&m));
        if dd >= 0.0 {
            prop_assert!(sdd >= -1e-9, "dd {dd} but sdd {sdd}");
        }
        if sdd >= 0.0 {
            prop_assert!(psd >= -1e-9, "sdd {sdd} but psd {psd}");
        }
        // Gershgorin: the dd margin never exceeds the smallest eigenvalue.
        prop_assert!(dd <= psd + 1e-9);
    }

    #[test]
    fn convexified_model_majorizes_and_touches(
        (n, rows, g_extra, xk, pts) in (1usize..=3).prop_flat_map(|n| (
            Just(n),
            proptest::collection::vec(proptest::collection::vec(-3i64..=3, n), 1..=3),
            arb_poly(n, 4),
            proptest::collection::vec(-2.0f64..2.0, n),
            proptest::collection::vec(proptest::collection::vec(-3.0f64..3.0, n), 8),
        ))
    ) {
        let h = convex_poly(n, &rows);
        let g = &g_extra + &h;
        let f = &g - &h;
        let model = convexify(&g, &h, &xk).unwrap();
        let exact = |x: &[f64]| -> Vec<BigRational> {
            x.iter().map(|&v| BigRational::from_float(v).unwrap()).collect()
        };
        let at = exact(&xk);
        prop_assert_eq!(model.eval(&at).unwrap(), f.eval(&at).unwrap());
        for x in &pts {
            let p = exact(x);
            prop_assert!(model.eval(&p).unwrap() >= f.eval(&p).unwrap());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn interior_forms_satisfy_their_gram_identity((n, d) in (2usize..=3, 1u32..=3)) {
        let c = interior_homogeneous(n, d);
        prop_assert!(c.identity_holds());
        prop_assert!(c.dd_margin.is_positive());
        prop_assert!(c.p.is_homogeneous());
        prop_assert_eq!(c.p.degree(), 2 * d);
    }
}
