use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::poly::{exponents_up_to_degree, Exponent, RatPoly};

/// `Σ x_i^{2d} + g` where every monomial of degree `<= 2d − 1` in `g` gets an
/// independent uniform integer coefficient in `[−30, 30]`. Coefficients are
/// drawn from ChaCha8 seeded with `seed`, in graded order of the monomials.
pub fn random_instance(n: usize, degree: u32, seed: u64) -> RatPoly {
    assert!(n >= 1 && degree >= 2 && degree % 2 == 0, "need n >= 1 and positive even degree");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut terms: Vec<(Exponent, BigRational)> = exponents_up_to_degree(n, degree - 1)
        .into_iter()
        .map(|e| {
            let c: i64 = rng.random_range(-30..=30);
            (e, BigRational::from_integer(BigInt::from(c)))
        })
        .collect();
    for i in 0..n {
        let mut e = vec![0u32; n];
        e[i] = degree;
        terms.push((Exponent::new(e), BigRational::from_integer(BigInt::from(1))));
    }
    RatPoly::from_terms(n, terms).with_ambient_degree(degree)
}

/// `Σ x_i² − R²`.
pub fn ball_constraint(n: usize, radius: f64) -> RatPoly {
    let r = BigRational::from_float(radius).expect("finite radius");
    let mut p = -RatPoly::constant(n, &r * &r);
    for i in 0..n {
        p = &p + &(&RatPoly::var(n, i) * &RatPoly::var(n, i));
    }
    p
}

/// Standard Gaussian point from ChaCha8 seeded with `seed`; with a radius,
/// points outside `0.9·R` are scaled back onto that sphere.
pub fn random_start(n: usize, seed: u64, radius: Option<f64>) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    if let Some(r) = radius {
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.9 * r {
            let k = 0.9 * r / norm;
            x.iter_mut().for_each(|v| *v *= k);
        }
    }
    x
}
