//! Exact construction of forms whose Hessian form has a strictly diagonally
//! dominant Gram matrix.
//!
//! The bivariate forms come from an explicit palindromic coefficient
//! sequence; more variables are added one at a time by symmetrizing over all
//! index tuples and adding a small multiple of the sum of all even monomials
//! with full support.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::certify::{MonomialBasis, TensorBasis};
use crate::poly::{hessian_form_of_monomial, Exponent, RatPoly};

type Q = BigRational;

fn int(v: i64) -> Q {
    Q::from_integer(BigInt::from(v))
}

/// Values of the coefficient sequences used by the bivariate construction,
/// indexed by `k = 0..=K` with `K = ⌊d/2⌋` (entries outside a sequence's
/// natural range are still given by its closed form).
#[derive(Clone, Debug, PartialEq)]
pub struct BivariateSequences {
    pub a: Vec<Q>,
    pub beta: Vec<Q>,
    pub gamma: Vec<Q>,
    pub delta: Vec<Q>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InteriorConstruction {
    pub n: usize,
    pub degree: u32,
    pub p: RatPoly,
    pub basis: TensorBasis,
    /// Dense symmetric Gram matrix over `basis`.
    pub q: Vec<Vec<Q>>,
    /// `min_i (Q_ii − Σ_{j≠i} |Q_ij|)`, strictly positive.
    pub dd_margin: Q,
    /// Present for the bivariate base case.
    pub sequences: Option<BivariateSequences>,
    /// Multipliers of the full-support term, one per induction step.
    pub alphas: Vec<Q>,
}

impl InteriorConstruction {
    /// `basisᵀ Q basis` expanded exactly.
    pub fn gram_polynomial(&self) -> RatPoly {
        gram_polynomial(&self.basis, &self.q)
    }

    /// True when `yᵀ H_p y` equals the Gram expansion coefficient by coefficient.
    pub fn identity_holds(&self) -> bool {
        self.gram_polynomial() == self.p.hessian_form()
    }

    pub fn q_f64(&self) -> nalgebra::DMatrix<f64> {
        use num_traits::ToPrimitive;
        let k = self.q.len();
        nalgebra::DMatrix::from_fn(k, k, |i, j| self.q[i][j].to_f64().unwrap_or(f64::NAN))
    }
}

fn gram_polynomial(basis: &TensorBasis, q: &[Vec<Q>]) -> RatPoly {
    let n = basis.base.n;
    let el: Vec<Exponent> = basis
        .monomials
        .iter()
        .map(|(k, m)| m.concat(&Exponent::unit(n, *k)))
        .collect();
    let mut terms = Vec::new();
    for i in 0..el.len() {
        for j in i..el.len() {
            if q[i][j].is_zero() {
                continue;
            }
            let w = if i == j { q[i][j].clone() } else { &q[i][j] * int(2) };
            terms.push((el[i].add(&el[j]), w));
        }
    }
    RatPoly::from_terms(2 * n, terms)
}

/// Exact dd margin of a dense rational matrix (`+∞` is never returned; an
/// empty matrix has margin 0).
pub(crate) fn exact_dd_margin(q: &[Vec<Q>]) -> Q {
    q.iter()
        .enumerate()
        .map(|(i, row)| {
            let off = row
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .fold(Q::zero(), |acc, (_, v)| acc + v.abs());
            &row[i] - off
        })
        .min()
        .unwrap_or_else(Q::zero)
}

fn zeros(k: usize) -> Vec<Vec<Q>> {
    vec![vec![Q::zero(); k]; k]
}

fn add_sym(q: &mut [Vec<Q>], i: usize, j: usize, v: &Q) {
    q[i][j] += v;
    if i != j {
        q[j][i] += v;
    }
}

fn finish(
    n: usize,
    degree: u32,
    p: RatPoly,
    basis: TensorBasis,
    q: Vec<Vec<Q>>,
    sequences: Option<BivariateSequences>,
    alphas: Vec<Q>,
) -> InteriorConstruction {
    let dd_margin = exact_dd_margin(&q);
    let c = InteriorConstruction {
        n,
        degree,
        p,
        basis,
        q,
        dd_margin,
        sequences,
        alphas,
    };
    assert!(c.identity_holds(), "Gram identity fails for n = {n}, degree {degree}");
    assert!(c.dd_margin.is_positive(), "Gram matrix not strictly dd for n = {n}, degree {degree}");
    c
}

/// Bivariate form of degree `2d` with a strictly dd Gram matrix over
/// `w_{2,d-1}`.
pub fn interior_bivariate(d: u32) -> InteriorConstruction {
    assert!(d >= 1, "degree must be positive");
    let basis = TensorBasis::new(MonomialBasis::new(2, d - 1, true));
    if d == 1 {
        let p = RatPoly::from_terms(2, [(Exponent::new(vec![2, 0]), int(1)), (Exponent::new(vec![0, 2]), int(1))]);
        let mut q = zeros(2);
        q[0][0] = int(2);
        q[1][1] = int(2);
        return finish(2, 2, p, basis, q, None, Vec::new());
    }

    let di = i64::from(d);
    let kmax = (d / 2) as usize;
    let mut a = vec![Q::zero(); kmax + 1];
    a[1] = int(1);
    for k in 1..kmax {
        let ki = k as i64;
        a[k + 1] = &a[k] * Q::new(BigInt::from(2 * di - 2 * ki), BigInt::from(2 * ki + 2));
    }
    a[0] = if d % 2 == 0 {
        Q::new(BigInt::one(), BigInt::from(di)) + Q::new(BigInt::from(di), BigInt::from(2 * (2 * di - 1))) * &a[kmax]
    } else {
        int(1) + Q::new(BigInt::from(2 * (2 * di - 2)), BigInt::from(2 * di * (2 * di - 1)))
    };
    let seq = |f: &dyn Fn(i64) -> i64| -> Vec<Q> {
        (0..=kmax).map(|k| &a[k] * int(f(k as i64))).collect()
    };
    let sequences = BivariateSequences {
        beta: seq(&|k| (2 * di - 2 * k) * (2 * di - 2 * k - 1)),
        gamma: seq(&|k| 2 * k * (2 * k - 1)),
        delta: seq(&|k| (2 * di - 2 * k) * 2 * k),
        a: a.clone(),
    };

    // p = Σ_j c_j x1^{2d-2j} x2^{2j}, c_j = a_{min(j, d-j)}
    let dd = d as usize;
    let c: Vec<Q> = (0..=dd).map(|j| a[j.min(dd - j)].clone()).collect();
    let p = RatPoly::from_terms(
        2,
        (0..=d).map(|j| (Exponent::new(vec![2 * d - 2 * j, 2 * j]), c[j as usize].clone())),
    );

    // Basis index of y_k x1^{d-1-i} x2^i is k*d + i.
    let idx = |k: usize, i: usize| k * dd + i;
    let mut q = zeros(2 * dd);
    for j in 0..dd {
        let ji = j as i64;
        // y1² x2^{2j} and y2² x1^{2d-2j-2} x2^{2j} are matched on the diagonal.
        q[idx(0, j)][idx(0, j)] = &c[j] * int((2 * di - 2 * ji) * (2 * di - 2 * ji - 1));
        q[idx(1, j)][idx(1, j)] = &c[j + 1] * int((2 * ji + 2) * (2 * ji + 1));
    }
    // y1 y2 x1^{2d-2j-1} x2^{2j-1} needs Σ_{i+l=2j-1} Q[(1,i),(2,l)] = c_j (2d-2j)(2j).
    for j in 1..dd {
        let ji = j as i64;
        let v = &c[j] * int((2 * di - 2 * ji) * 2 * ji);
        let (i, l) = if d % 2 == 0 && 2 * j == dd { (0, dd - 1) } else { (j - 1, j) };
        add_sym(&mut q, idx(0, i), idx(1, l), &v);
    }
    finish(2, 2 * d, p, basis, q, Some(sequences), Vec::new())
}

/// Compositions of `total` into `parts` positive integers.
fn positive_compositions(total: u32, parts: usize) -> Vec<Vec<u32>> {
    fn rec(left: u32, parts: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if parts == 1 {
            if left >= 1 {
                cur.push(left);
                out.push(cur.clone());
                cur.pop();
            }
            return;
        }
        for first in 1..left {
            if left - first < parts as u32 - 1 {
                break;
            }
            cur.push(first);
            rec(left - first, parts - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if parts > 0 && total as usize >= parts {
        rec(total, parts, &mut Vec::new(), &mut out);
    }
    out
}

/// Splits `μ` (total `2(d-1)`) as `m' + m''` with both of degree `d-1`, `x_a`
/// wholly in `m'`, `x_b` wholly in `m''`, and the Gram rows of `y_j m'` and
/// `y_k m''` lying in the symmetrized block. Returns `(m', m'', swapped)`;
/// when `swapped`, the pairing is `(y_k m', y_j m'')`.
fn split_cross(mu: &[u32], j: usize, k: usize, half: u32) -> (Vec<u32>, Vec<u32>, bool) {
    let nv = mu.len();
    let small: Vec<usize> = (0..nv).filter(|&v| mu[v] <= half).collect();
    for &a in &small {
        for &b in &small {
            if a == b {
                continue;
            }
            for swapped in [false, true] {
                let (first, second) = if swapped { (k, j) } else { (j, k) };
                if first == b || second == a {
                    continue;
                }
                // Fill m' with x_a, then greedily from the lowest index, never using x_b.
                let mut m1 = vec![0u32; nv];
                m1[a] = mu[a];
                let mut need = half - mu[a];
                for v in 0..nv {
                    if v == a || v == b || need == 0 {
                        continue;
                    }
                    let take = mu[v].min(need);
                    m1[v] = take;
                    need -= take;
                }
                if need != 0 {
                    continue;
                }
                let m2: Vec<u32> = (0..nv).map(|v| mu[v] - m1[v]).collect();
                return (m1, m2, swapped);
            }
        }
    }
    unreachable!("a full-support cross term always admits a split")
}

fn step(prev: &InteriorConstruction, d: u32) -> InteriorConstruction {
    let n = prev.n;
    let m = n + 1;
    let basis = TensorBasis::new(MonomialBasis::new(m, d - 1, true));
    let size = basis.len();
    let index = |k: usize, e: &Exponent| basis.index_of(k, e).expect("monomial in basis");

    // q = Σ_t p(x_{t_1}, …, x_{t_n}) over all t ∈ {0..n}^n; its Gram matrix merges
    // the old rows along the substitution.
    let mut q_poly = RatPoly::zero(m);
    let mut qq = zeros(size);
    let mut tuple = vec![0usize; n];
    loop {
        q_poly = &q_poly + &prev.p.substitute_vars(&tuple, m);
        let image: Vec<usize> = prev
            .basis
            .monomials
            .iter()
            .map(|(k, e)| {
                let mut out = vec![0u32; m];
                for (v, &pw) in e.powers().iter().enumerate() {
                    out[tuple[v]] += pw;
                }
                index(tuple[*k], &Exponent::new(out))
            })
            .collect();
        for (a, row) in prev.q.iter().enumerate() {
            for (b, v) in row.iter().enumerate() {
                if !v.is_zero() {
                    qq[image[a]][image[b]] += v;
                }
            }
        }
        // next tuple
        let mut pos = 0;
        while pos < n {
            tuple[pos] += 1;
            if tuple[pos] <= n {
                break;
            }
            tuple[pos] = 0;
            pos += 1;
        }
        if pos == n {
            break;
        }
    }

    // v = Σ x^{2i} over i ∈ ℤ_{>0}^{n+1}, |i| = d.
    let comps = positive_compositions(d, m);
    if comps.is_empty() {
        let mut alphas = prev.alphas.clone();
        alphas.push(Q::zero());
        return finish(m, 2 * d, q_poly, basis, qq, None, alphas);
    }
    let v_poly = RatPoly::from_terms(
        m,
        comps
            .iter()
            .map(|i| (Exponent::new(i.iter().map(|x| 2 * x).collect()), int(1))),
    );
    let mut qv = zeros(size);
    let half = d - 1;
    for (e, _) in v_poly.terms() {
        for (hf, w) in hessian_form_of_monomial(e) {
            let p = hf.powers();
            let (x, y) = p.split_at(m);
            let ys: Vec<usize> = (0..m).flat_map(|v| std::iter::repeat(v).take(y[v] as usize)).collect();
            let (j, k) = (ys[0], ys[1]);
            if j == k {
                let mid = Exponent::new(x.iter().map(|v| v / 2).collect());
                let r = index(j, &mid);
                qv[r][r] += int(w);
            } else {
                let (m1, m2, swapped) = split_cross(x, j, k, half);
                let (yj, yk) = if swapped { (k, j) } else { (j, k) };
                let r = index(yj, &Exponent::new(m1));
                let s = index(yk, &Exponent::new(m2));
                add_sym(&mut qv, r, s, &Q::new(BigInt::from(w), BigInt::from(2)));
            }
        }
    }

    // α = m_q / (2 (1 + max row sum of |Q_v|)), m_q the margin over the rows q reaches.
    let touched: Vec<bool> = qq.iter().map(|row| row.iter().any(|v| !v.is_zero())).collect();
    let m_q = qq
        .iter()
        .enumerate()
        .filter(|&(i, _)| touched[i])
        .map(|(i, row)| {
            let off = row
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .fold(Q::zero(), |acc, (_, v)| acc + v.abs());
            &row[i] - off
        })
        .min()
        .expect("q reaches some row");
    assert!(m_q.is_positive(), "symmetrized Gram matrix not strictly dd");
    let r_v = qv
        .iter()
        .map(|row| row.iter().fold(Q::zero(), |acc, v| acc + v.abs()))
        .max()
        .unwrap_or_else(Q::zero);
    let alpha = m_q / (int(2) * (int(1) + r_v));

    for (row, vrow) in qq.iter_mut().zip(&qv) {
        for (a, b) in row.iter_mut().zip(vrow) {
            if !b.is_zero() {
                *a += &alpha * b;
            }
        }
    }
    let p = &q_poly + &v_poly.scale(&alpha);
    let mut alphas = prev.alphas.clone();
    alphas.push(alpha);
    finish(m, 2 * d, p, basis, qq, None, alphas)
}

/// Form in `n ≥ 2` variables of degree `2d` with a strictly dd Gram matrix
/// over `w_{n,d-1}`.
pub fn interior_homogeneous(n: usize, d: u32) -> InteriorConstruction {
    assert!(n >= 2, "need at least two variables");
    let mut c = interior_bivariate(d);
    while c.n < n {
        c = step(&c, d);
    }
    c
}

/// `Σ_{k=1}^{d} p_{n,2k}`, inhomogeneous of degree `2d`, with a strictly dd
/// Gram matrix over `w̃_{n,d-1}` (block diagonal by degree).
pub fn interior_full(n: usize, degree: u32) -> InteriorConstruction {
    assert!(n >= 2 && degree >= 2 && degree % 2 == 0, "need n >= 2 and positive even degree");
    let d = degree / 2;
    let basis = TensorBasis::new(MonomialBasis::new(n, d - 1, false));
    let mut q = zeros(basis.len());
    let mut p = RatPoly::zero(n);
    let mut alphas = Vec::new();
    let mut blocks: BTreeMap<u32, Q> = BTreeMap::new();
    for k in 1..=d {
        let c = interior_homogeneous(n, k);
        p = &p + &c.p;
        let map: Vec<usize> = c
            .basis
            .monomials
            .iter()
            .map(|(y, e)| basis.index_of(*y, e).expect("form basis inside full basis"))
            .collect();
        for (a, row) in c.q.iter().enumerate() {
            for (b, v) in row.iter().enumerate() {
                if !v.is_zero() {
                    q[map[a]][map[b]] = v.clone();
                }
            }
        }
        blocks.insert(k, c.dd_margin.clone());
        alphas.extend(c.alphas);
    }
    let c = finish(n, degree, p.with_ambient_degree(degree), basis, q, None, alphas);
    debug_assert_eq!(Some(&c.dd_margin), blocks.values().min());
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(a: i64, b: i64) -> Q {
        Q::new(BigInt::from(a), BigInt::from(b))
    }

    #[test]
    fn bivariate_base_cases() {
        let c = interior_bivariate(1);
        assert_eq!(c.dd_margin, int(2));
        assert_eq!(c.q, vec![vec![int(2), int(0)], vec![int(0), int(2)]]);

        let c = interior_bivariate(2);
        let s = c.sequences.as_ref().unwrap();
        assert_eq!(s.a[1], int(1));
        assert_eq!(s.a[0], r(5, 6));
        assert_eq!((s.beta[0].clone(), s.gamma[1].clone(), s.delta[1].clone()), (int(10), int(2), int(4)));
        assert_eq!(c.p.coeff(&Exponent::new(vec![4, 0])), r(5, 6));
        assert_eq!(c.p.coeff(&Exponent::new(vec![2, 2])), int(1));

        let c = interior_bivariate(3);
        let s = c.sequences.as_ref().unwrap();
        assert_eq!(s.a[0], r(19, 15));
        assert_eq!(s.a[1], int(1));
    }

    #[test]
    fn bivariate_inequalities_up_to_degree_twenty() {
        for d in 2..=10u32 {
            let c = interior_bivariate(d);
            let s = c.sequences.unwrap();
            let (beta, gamma, delta) = (&s.beta, &s.gamma, &s.delta);
            if d % 2 == 0 {
                let h = (d / 2) as usize;
                assert!(beta[0] > &delta[1] + &delta[h], "d = {d}");
                for k in 1..h.saturating_sub(1) {
                    assert!(beta[k] > delta[k + 1], "d = {d}, k = {k}");
                }
                assert!(beta[h - 1].is_positive() && gamma[1].is_positive());
                for k in 1..h {
                    assert!(gamma[k + 1] > delta[k], "d = {d}, k = {k}");
                }
            } else {
                let h = ((d - 1) / 2) as usize;
                for k in 0..h {
                    assert!(beta[k] > delta[k + 1], "d = {d}, k = {k}");
                }
                for k in 2..=h {
                    assert!(gamma[k] > delta[k - 1], "d = {d}, k = {k}");
                }
                assert!(gamma[1].is_positive());
            }
            assert!(c.dd_margin.is_positive());
        }
    }

    #[test]
    fn compositions() {
        assert!(positive_compositions(2, 3).is_empty());
        assert_eq!(positive_compositions(3, 3), vec![vec![1, 1, 1]]);
        assert_eq!(positive_compositions(4, 3).len(), 3);
    }

    #[test]
    fn induction_examples() {
        let c = interior_homogeneous(3, 2);
        assert_eq!(c.alphas, vec![int(0)]);
        let c = interior_homogeneous(3, 3);
        assert!(c.alphas[0].is_positive());
        assert!(c.identity_holds());
    }

    #[test]
    fn full_construction_margin_is_block_minimum() {
        for n in 2..=3 {
            for deg in [2u32, 4, 6] {
                let c = interior_full(n, deg);
                let m = (1..=deg / 2).map(|k| interior_homogeneous(n, k).dd_margin).min().unwrap();
                assert_eq!(c.dd_margin, m);
            }
        }
        let c = interior_full(2, 4);
        let expect = &interior_bivariate(1).p + &interior_bivariate(2).p;
        assert_eq!(c.p, expect);
    }
}
