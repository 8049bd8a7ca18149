//! Exact integrals of monomials over the unit sphere `S^{n-1}` and the
//! average-trace-of-Hessian functional.
//!
//! Integrals are with respect to the unnormalized surface measure, so the
//! constant `1` integrates to the area `A_n`. Every value has the form
//! `r · π^{k/2}` with `r` rational; normalized quantities (divided by `A_n`)
//! are plain rationals.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::poly::{exponents_up_to_degree, Exponent, FloatPoly, RatPoly};

/// The number `coeff · π^{sqrt_pi_power / 2}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SphereValue {
    pub coeff: BigRational,
    pub sqrt_pi_power: u32,
}

impl SphereValue {
    pub fn zero() -> Self {
        SphereValue {
            coeff: BigRational::zero(),
            sqrt_pi_power: 0,
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.coeff.to_f64().unwrap_or(f64::NAN)
            * std::f64::consts::PI.powf(f64::from(self.sqrt_pi_power) / 2.0)
    }

    /// Ratio of two values; exact when the π powers agree.
    pub fn ratio(&self, other: &SphereValue) -> Option<BigRational> {
        if self.coeff.is_zero() {
            return Some(BigRational::zero());
        }
        (self.sqrt_pi_power == other.sqrt_pi_power).then(|| &self.coeff / &other.coeff)
    }
}

impl fmt::Display for SphereValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.sqrt_pi_power;
        match (self.coeff.is_zero(), p) {
            (true, _) | (false, 0) => write!(f, "{}", self.coeff),
            (false, _) if p % 2 == 0 => write!(f, "{}*pi^{}", self.coeff, p / 2),
            _ => write!(f, "{}*pi^({p}/2)", self.coeff),
        }
    }
}

fn factorial(k: u64) -> BigInt {
    (1..=k).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

/// `Γ(m/2)` for a positive integer `m`, as `(rational, has √π factor)`.
fn gamma_half(m: u64) -> (BigRational, bool) {
    assert!(m > 0, "gamma pole");
    if m % 2 == 0 {
        (BigRational::from_integer(factorial(m / 2 - 1)), false)
    } else {
        // Γ(k + 1/2) = (2k)! / (4^k k!) √π
        let k = (m - 1) / 2;
        let num = factorial(2 * k);
        let den = BigInt::from(4u32).pow(k as u32) * factorial(k);
        (BigRational::new(num, den), true)
    }
}

/// `∫_{S^{n-1}} x^α dσ`: zero if some `α_j` is odd, otherwise
/// `2 Π_j Γ(β_j) / Γ(Σ_j β_j)` with `β_j = (α_j + 1)/2`.
pub fn monomial_sphere_integral(alpha: &Exponent) -> SphereValue {
    let n = alpha.len();
    assert!(n >= 1, "sphere integrals need n >= 1");
    if !alpha.is_even() {
        return SphereValue::zero();
    }
    let mut coeff = BigRational::from_integer(BigInt::from(2));
    let mut sqrt_pi = 0i64;
    for &a in alpha.powers() {
        let (g, half) = gamma_half(u64::from(a) + 1);
        coeff *= g;
        sqrt_pi += i64::from(half);
    }
    let total = u64::from(alpha.degree()) + n as u64;
    let (g, half) = gamma_half(total);
    coeff /= g;
    sqrt_pi -= i64::from(half);
    SphereValue {
        coeff,
        sqrt_pi_power: sqrt_pi as u32,
    }
}

/// Surface area `A_n = 2 π^{n/2} / Γ(n/2)` of `S^{n-1}`.
pub fn sphere_area(n: usize) -> SphereValue {
    monomial_sphere_integral(&Exponent::zero(n))
}

/// `(1/A_n) ∫_{S^{n-1}} x^α dσ`, exactly.
pub fn normalized_moment(alpha: &Exponent) -> BigRational {
    monomial_sphere_integral(alpha)
        .ratio(&sphere_area(alpha.len()))
        .expect("π powers cancel for equal n")
}

/// `g ↦ (1/A_n) ∫_{S^{n-1}} Tr H_g dσ` as weights on the coefficients of `g`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SphereFunctional {
    n: usize,
    degree: u32,
    #[serde(skip)]
    weights: BTreeMap<Exponent, BigRational>,
}

impl SphereFunctional {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn weight(&self, e: &Exponent) -> BigRational {
        self.weights.get(e).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn weights(&self) -> impl Iterator<Item = (&Exponent, &BigRational)> {
        self.weights.iter()
    }

    pub fn apply(&self, g: &RatPoly) -> BigRational {
        g.terms()
            .filter_map(|(e, c)| self.weights.get(e).map(|w| w * c))
            .fold(BigRational::zero(), |a, b| a + b)
    }

    pub fn apply_f64(&self, g: &FloatPoly) -> f64 {
        g.terms()
            .filter_map(|(e, c)| self.weights.get(e).map(|w| w.to_f64().unwrap_or(f64::NAN) * c))
            .sum()
    }
}

/// The functional on polynomials in `n` variables of degree at most `degree`.
/// The weight of `x^α` is `Σ_i α_i(α_i−1) · (1/A_n) ∫ x^{α−2e_i} dσ`.
pub fn avg_trace_hessian_functional(n: usize, degree: u32) -> SphereFunctional {
    let mut weights = BTreeMap::new();
    for alpha in exponents_up_to_degree(n, degree) {
        if alpha.degree() < 2 {
            continue;
        }
        let mut w = BigRational::zero();
        for i in 0..n {
            let a = alpha.powers()[i];
            if a < 2 {
                continue;
            }
            let mut p = alpha.powers().to_vec();
            p[i] -= 2;
            let m = normalized_moment(&Exponent::new(p));
            w += m * BigRational::from_integer(BigInt::from(a * (a - 1)));
        }
        if !w.is_zero() {
            weights.insert(alpha, w);
        }
    }
    SphereFunctional { n, degree, weights }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn examples() {
        assert_eq!(monomial_sphere_integral(&Exponent::new(vec![1, 0])), SphereValue::zero());
        assert_eq!(normalized_moment(&Exponent::new(vec![2, 0, 0])), q(1, 3));
        let v = monomial_sphere_integral(&Exponent::new(vec![2, 2, 0]));
        assert_eq!(v.coeff, q(4, 15));
        assert_eq!(v.sqrt_pi_power, 2);
        assert_eq!(normalized_moment(&Exponent::new(vec![2, 2, 0])), q(1, 15));
    }

    #[test]
    fn areas() {
        let a2 = sphere_area(2);
        assert_eq!((a2.coeff.clone(), a2.sqrt_pi_power), (q(2, 1), 2));
        let a3 = sphere_area(3);
        assert_eq!((a3.coeff.clone(), a3.sqrt_pi_power), (q(4, 1), 2));
        let a4 = sphere_area(4);
        assert_eq!((a4.coeff.clone(), a4.sqrt_pi_power), (q(2, 1), 4));
        assert!((sphere_area(1).to_f64() - 2.0).abs() < 1e-15);
        assert!((a3.to_f64() - 4.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn functional_examples() {
        for n in 1..5 {
            let f = avg_trace_hessian_functional(n, 4);
            let g = RatPoly::from_terms(n, (0..n).map(|i| (Exponent::unit(n, i).add(&Exponent::unit(n, i)), q(1, 1))));
            assert_eq!(f.apply(&g), q(2 * n as i64, 1));
        }
        let f = avg_trace_hessian_functional(2, 4);
        assert_eq!(f.weight(&Exponent::new(vec![4, 0])), q(6, 1));
        let affine = RatPoly::from_terms(2, [(Exponent::new(vec![1, 0]), q(3, 1)), (Exponent::zero(2), q(1, 1))]);
        assert_eq!(f.apply(&affine), q(0, 1));
    }
}
