//! Sparse multivariate polynomials over exact rationals or `f64`.
//!
//! A [`Polynomial`] stores only its nonzero terms, keyed by [`Exponent`] in
//! graded-lexicographic order. The ambient degree is explicit metadata so that
//! odd-degree inputs can live inside an even-degree space.

mod json;
mod scalar;

pub use json::{parse_rational, AnyPolynomial, CoeffMode, PolyWireError};
pub use scalar::Coefficient;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_rational::BigRational;

use crate::error::{Error, Result};

/// Exact-rational polynomial.
pub type RatPoly = Polynomial<BigRational>;
/// Floating-point polynomial.
pub type FloatPoly = Polynomial<f64>;

/// Exponent vector of a monomial, one power per variable.
///
/// Ordering is graded lexicographic: total degree first, then `x1` before
/// `x2` within a degree (so `x1^2 < x1*x2 < x2^2`).
#[derive(Clone, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct Exponent(Vec<u32>);

impl Exponent {
    pub fn new(powers: Vec<u32>) -> Self {
        Exponent(powers)
    }

    pub fn zero(n: usize) -> Self {
        Exponent(vec![0; n])
    }

    /// The exponent of the single variable `x_i`.
    pub fn unit(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        Exponent(e)
    }

    pub fn powers(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_even(&self) -> bool {
        self.0.iter().all(|p| p % 2 == 0)
    }

    /// Componentwise sum (monomial product).
    pub fn add(&self, other: &Exponent) -> Exponent {
        debug_assert_eq!(self.len(), other.len());
        Exponent(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Lowers the power of `x_i` by one, or `None` if it is already zero.
    pub fn lower(&self, i: usize) -> Option<Exponent> {
        if self.0[i] == 0 {
            return None;
        }
        let mut e = self.0.clone();
        e[i] -= 1;
        Some(Exponent(e))
    }

    /// Concatenates two exponent vectors (`x` block then `y` block).
    pub fn concat(&self, other: &Exponent) -> Exponent {
        let mut e = self.0.clone();
        e.extend_from_slice(&other.0);
        Exponent(e)
    }

    /// Number of variables with a nonzero power.
    pub fn support_size(&self) -> usize {
        self.0.iter().filter(|&&p| p > 0).count()
    }

    /// Evaluates `x^alpha` in floating point.
    pub fn eval_f64(&self, point: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(point)
            .map(|(&p, &x)| x.powi(p as i32))
            .product()
    }
}

impl Ord for Exponent {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Exponent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// All exponents in `n` variables of total degree exactly `d`, graded-lex order.
pub fn exponents_of_degree(n: usize, d: u32) -> Vec<Exponent> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; n];
    fn rec(i: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Exponent>) {
        let n = cur.len();
        if i + 1 == n {
            cur[i] = left;
            out.push(Exponent(cur.clone()));
            cur[i] = 0;
            return;
        }
        for p in (0..=left).rev() {
            cur[i] = p;
            rec(i + 1, left - p, cur, out);
        }
        cur[i] = 0;
    }
    if n == 0 {
        if d == 0 {
            out.push(Exponent(Vec::new()));
        }
        return out;
    }
    rec(0, d, &mut cur, &mut out);
    out
}

/// All exponents in `n` variables of total degree at most `d`, graded-lex order.
pub fn exponents_up_to_degree(n: usize, d: u32) -> Vec<Exponent> {
    (0..=d).flat_map(|k| exponents_of_degree(n, k)).collect()
}

/// A sparse polynomial in `n` positional variables `x1..xn`.
///
/// Equality compares variables and terms; the ambient degree is ignored.
#[derive(Clone)]
pub struct Polynomial<C> {
    nvars: usize,
    ambient_degree: u32,
    terms: BTreeMap<Exponent, C>,
}

impl<C: PartialEq> PartialEq for Polynomial<C> {
    fn eq(&self, other: &Self) -> bool {
        self.nvars == other.nvars && self.terms == other.terms
    }
}

impl<C: Coefficient> Polynomial<C> {
    pub fn zero(nvars: usize) -> Self {
        Polynomial {
            nvars,
            ambient_degree: 0,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: C) -> Self {
        Self::from_terms(nvars, [(Exponent::zero(nvars), c)])
    }

    /// The coordinate polynomial `x_i` (zero-based index).
    pub fn var(nvars: usize, i: usize) -> Self {
        Self::from_terms(nvars, [(Exponent::unit(nvars, i), C::one())])
    }

    pub fn monomial(exp: Exponent, c: C) -> Self {
        let n = exp.len();
        Self::from_terms(n, [(exp, c)])
    }

    /// Builds a polynomial from `(exponent, coefficient)` pairs, collecting
    /// repeated exponents and dropping zeros.
    ///
    /// Panics if an exponent has the wrong length.
    pub fn from_terms<I>(nvars: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (Exponent, C)>,
    {
        let mut map: BTreeMap<Exponent, C> = BTreeMap::new();
        for (e, c) in terms {
            assert_eq!(e.len(), nvars, "exponent length must equal nvars");
            if c.is_zero() {
                continue;
            }
            match map.get_mut(&e) {
                Some(v) => {
                    let s = v.clone() + c;
                    if s.is_zero() {
                        map.remove(&e);
                    } else {
                        *v = s;
                    }
                }
                None => {
                    map.insert(e, c);
                }
            }
        }
        let mut p = Polynomial {
            nvars,
            ambient_degree: 0,
            terms: map,
        };
        p.ambient_degree = p.degree();
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Maximum total degree of the stored terms (0 for the zero polynomial).
    pub fn degree(&self) -> u32 {
        self.terms.keys().next_back().map_or(0, Exponent::degree)
    }

    /// Declared degree of the space the polynomial lives in; never below
    /// [`degree`](Self::degree).
    pub fn ambient_degree(&self) -> u32 {
        self.ambient_degree.max(self.degree())
    }

    /// Returns the same polynomial declared in a space of degree `d`.
    /// Declarations below the actual degree are clamped up.
    pub fn with_ambient_degree(mut self, d: u32) -> Self {
        self.ambient_degree = d.max(self.degree());
        self
    }

    /// Rounds the ambient degree up to the next even integer.
    pub fn pad_to_even_degree(&self) -> Self {
        let d = self.ambient_degree();
        self.clone().with_ambient_degree(d + d % 2)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Exponent, &C)> + '_ {
        self.terms.iter()
    }

    pub fn coeff(&self, exp: &Exponent) -> C {
        self.terms.get(exp).cloned().unwrap_or_else(C::zero)
    }

    /// True if every stored term has the same total degree. The zero
    /// polynomial counts as homogeneous.
    pub fn is_homogeneous(&self) -> bool {
        let mut degs = self.terms.keys().map(Exponent::degree);
        match degs.next() {
            None => true,
            Some(d0) => degs.all(|d| d == d0),
        }
    }

    /// Terms of total degree at most one.
    pub fn affine_part(&self) -> Self {
        self.filter_terms(|e| e.degree() <= 1)
    }

    /// Keeps only terms whose exponent satisfies `keep`.
    pub fn filter_terms(&self, keep: impl Fn(&Exponent) -> bool) -> Self {
        Polynomial {
            nvars: self.nvars,
            ambient_degree: self.ambient_degree,
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| keep(e))
                .map(|(e, c)| (e.clone(), c.clone()))
                .collect(),
        }
    }

    pub fn eval(&self, point: &[C]) -> Result<C> {
        self.check_point(point.len())?;
        let mut acc = C::zero();
        for (e, c) in &self.terms {
            let mut m = c.clone();
            for (&p, x) in e.powers().iter().zip(point) {
                for _ in 0..p {
                    m = m * x.clone();
                }
            }
            acc = acc + m;
        }
        Ok(acc)
    }

    /// Floating-point evaluation regardless of coefficient mode.
    pub fn eval_f64(&self, point: &[f64]) -> Result<f64> {
        self.check_point(point.len())?;
        Ok(self
            .terms
            .iter()
            .map(|(e, c)| c.to_f64() * e.eval_f64(point))
            .sum())
    }

    fn check_point(&self, len: usize) -> Result<()> {
        if len != self.nvars {
            return Err(Error::DimensionMismatch {
                expected: self.nvars,
                found: len,
            });
        }
        Ok(())
    }

    fn check_same_space(&self, other: &Self) -> Result<()> {
        if self.nvars != other.nvars {
            return Err(Error::DimensionMismatch {
                expected: self.nvars,
                found: other.nvars,
            });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check_same_space(other)?;
        let mut out = Self::from_terms(
            self.nvars,
            self.terms
                .iter()
                .chain(other.terms.iter())
                .map(|(e, c)| (e.clone(), c.clone())),
        );
        out.ambient_degree = out
            .degree()
            .max(self.ambient_degree)
            .max(other.ambient_degree);
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.checked_add(&other.neg())
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.check_same_space(other)?;
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                terms.push((ea.add(eb), ca.clone() * cb.clone()));
            }
        }
        let mut out = Self::from_terms(self.nvars, terms);
        out.ambient_degree = out
            .degree()
            .max(self.ambient_degree + other.ambient_degree);
        Ok(out)
    }

    pub fn scale(&self, k: &C) -> Self {
        if k.is_zero() {
            return Polynomial {
                terms: BTreeMap::new(),
                ..self.clone()
            };
        }
        Polynomial {
            nvars: self.nvars,
            ambient_degree: self.ambient_degree,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (e.clone(), c.clone() * k.clone()))
                .filter(|(_, c)| !c.is_zero())
                .collect(),
        }
    }

    pub fn neg(&self) -> Self {
        Polynomial {
            nvars: self.nvars,
            ambient_degree: self.ambient_degree,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (e.clone(), -c.clone()))
                .collect(),
        }
    }

    /// Partial derivative with respect to `x_i`.
    pub fn derivative(&self, i: usize) -> Self {
        assert!(i < self.nvars, "variable index out of range");
        Self::from_terms(
            self.nvars,
            self.terms.iter().filter_map(|(e, c)| {
                let p = e.powers()[i];
                e.lower(i)
                    .map(|lo| (lo, c.clone() * C::from_i64(i64::from(p))))
            }),
        )
    }

    pub fn gradient(&self) -> Vec<Self> {
        (0..self.nvars).map(|i| self.derivative(i)).collect()
    }

    pub fn hessian(&self) -> PolynomialMatrix<C> {
        let grad = self.gradient();
        let n = self.nvars;
        let mut entries = vec![Self::zero(n); n * n];
        for i in 0..n {
            for j in i..n {
                let h = grad[i].derivative(j);
                entries[j * n + i] = h.clone();
                entries[i * n + j] = h;
            }
        }
        PolynomialMatrix { dim: n, entries }
    }

    /// `y^T H_p(x) y` as a polynomial in `2n` variables: `x` occupies indices
    /// `0..n` and `y` occupies `n..2n`.
    pub fn hessian_form(&self) -> Self {
        let n = self.nvars;
        let mut terms = Vec::new();
        for (e, c) in &self.terms {
            for (k, w) in hessian_form_of_monomial(e) {
                terms.push((k, c.clone() * C::from_i64(w)));
            }
        }
        Self::from_terms(2 * n, terms)
    }

    /// Rewrites the polynomial in `new_n` variables, sending `x_j` to
    /// `x_{map[j]}`. Repeated targets multiply together.
    pub fn substitute_vars(&self, map: &[usize], new_n: usize) -> Self {
        assert_eq!(map.len(), self.nvars);
        Self::from_terms(
            new_n,
            self.terms.iter().map(|(e, c)| {
                let mut out = vec![0u32; new_n];
                for (j, &p) in e.powers().iter().enumerate() {
                    out[map[j]] += p;
                }
                (Exponent(out), c.clone())
            }),
        )
    }

    /// Converts coefficients with `f`, dropping any that become zero.
    pub fn map_coeffs<D: Coefficient>(&self, f: impl Fn(&C) -> D) -> Polynomial<D> {
        let mut out = Polynomial::<D>::from_terms(
            self.nvars,
            self.terms.iter().map(|(e, c)| (e.clone(), f(c))),
        );
        out.ambient_degree = self.ambient_degree.max(out.degree());
        out
    }

    pub fn to_f64(&self) -> FloatPoly {
        self.map_coeffs(|c| c.to_f64())
    }

    pub fn to_rational_poly(&self) -> RatPoly {
        self.map_coeffs(|c| c.to_rational())
    }

    /// Largest coefficient magnitude (0 for the zero polynomial).
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms
            .values()
            .map(|c| c.to_f64().abs())
            .fold(0.0, f64::max)
    }
}

impl FloatPoly {
    /// Exact conversion of every `f64` coefficient to a rational.
    pub fn to_rational(&self) -> RatPoly {
        self.map_coeffs(|c| BigRational::from_float(*c).expect("finite coefficient"))
    }
}

/// Weight of the `y_i y_j` term in the Hessian form of a single monomial:
/// `a_i(a_i-1)` on the diagonal and `2 a_i a_j` off it.
pub(crate) fn hessian_weight(e: &Exponent, i: usize, j: usize) -> i64 {
    let p = e.powers();
    if i == j {
        i64::from(p[i]) * (i64::from(p[i]) - 1)
    } else {
        2 * i64::from(p[i]) * i64::from(p[j])
    }
}

/// `(i, j, x-part)` for every nonzero `y_i y_j` (with `i <= j`) term of the
/// Hessian form of `x^e`.
pub(crate) fn hessian_monomial_terms(e: &Exponent) -> Vec<(usize, usize, Exponent)> {
    let n = e.len();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i..n {
            if hessian_weight(e, i, j) == 0 {
                continue;
            }
            let x = if i == j {
                e.lower(i).and_then(|l| l.lower(i))
            } else {
                e.lower(i).and_then(|l| l.lower(j))
            };
            if let Some(x) = x {
                out.push((i, j, x));
            }
        }
    }
    out
}

/// Hessian-form contributions of a single monomial as `(2n-exponent, weight)`.
pub(crate) fn hessian_form_of_monomial(e: &Exponent) -> Vec<(Exponent, i64)> {
    let n = e.len();
    hessian_monomial_terms(e)
        .into_iter()
        .map(|(i, j, x)| {
            let mut y = vec![0u32; n];
            y[i] += 1;
            y[j] += 1;
            (x.concat(&Exponent(y)), hessian_weight(e, i, j))
        })
        .collect()
}

macro_rules! forward_binop {
    ($tr:ident, $m:ident, $checked:ident) => {
        impl<C: Coefficient> std::ops::$tr<&Polynomial<C>> for &Polynomial<C> {
            type Output = Polynomial<C>;
            /// Panics on a variable-count mismatch; use the `checked_*`
            /// methods to get an error instead.
            fn $m(self, rhs: &Polynomial<C>) -> Polynomial<C> {
                self.$checked(rhs).expect("polynomial variable counts differ")
            }
        }
        impl<C: Coefficient> std::ops::$tr for Polynomial<C> {
            type Output = Polynomial<C>;
            fn $m(self, rhs: Polynomial<C>) -> Polynomial<C> {
                (&self).$m(&rhs)
            }
        }
    };
}

forward_binop!(Add, add, checked_add);
forward_binop!(Sub, sub, checked_sub);
forward_binop!(Mul, mul, checked_mul);

impl<C: Coefficient> std::ops::Neg for Polynomial<C> {
    type Output = Polynomial<C>;
    fn neg(self) -> Polynomial<C> {
        Polynomial::neg(&self)
    }
}

impl<C: Coefficient + fmt::Display> fmt::Display for Polynomial<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (e, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c})")?;
            for (i, &p) in e.powers().iter().enumerate() {
                match p {
                    0 => {}
                    1 => write!(f, "*x{}", i + 1)?,
                    _ => write!(f, "*x{}^{}", i + 1, p)?,
                }
            }
        }
        Ok(())
    }
}

impl<C: Coefficient> fmt::Debug for Polynomial<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Polynomial")
            .field("nvars", &self.nvars)
            .field("ambient_degree", &self.ambient_degree())
            .field("terms", &self.terms)
            .finish()
    }
}

/// A symmetric `dim x dim` matrix of polynomials, stored row-major.
#[derive(Clone, PartialEq)]
pub struct PolynomialMatrix<C> {
    dim: usize,
    entries: Vec<Polynomial<C>>,
}

impl<C: Coefficient> fmt::Debug for PolynomialMatrix<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries(self.entries.chunks(self.dim.max(1)))
            .finish()
    }
}

impl<C: Coefficient> PolynomialMatrix<C> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> &Polynomial<C> {
        &self.entries[i * self.dim + j]
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.dim).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn eval(&self, point: &[C]) -> Result<Vec<Vec<C>>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j).eval(point)).collect())
            .collect()
    }

    pub fn eval_f64(&self, point: &[f64]) -> Result<nalgebra::DMatrix<f64>> {
        let mut m = nalgebra::DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[(i, j)] = self.get(i, j).eval_f64(point)?;
            }
        }
        Ok(m)
    }
}
