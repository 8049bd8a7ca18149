use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::GramBasis;
use crate::conic::{ConicProgram, ConicSolution, LinExpr, MatrixCone, SymMatExpr};
use crate::error::{Error, Result};
use crate::linalg;
use crate::poly::{Exponent, FloatPoly};

/// Polynomial whose coefficients are affine expressions in program variables.
#[derive(Clone, Debug, Default)]
pub struct LinPoly {
    nvars: usize,
    terms: BTreeMap<Exponent, LinExpr>,
}

impl LinPoly {
    pub fn new(nvars: usize) -> Self {
        LinPoly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn from_poly(p: &FloatPoly) -> Self {
        let mut out = LinPoly::new(p.nvars());
        out.add_poly(p, 1.0);
        out
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn add_term(&mut self, e: Exponent, coeff: &LinExpr) {
        assert_eq!(e.len(), self.nvars, "exponent length");
        *self.terms.entry(e).or_default() += coeff;
    }

    /// `self += k · p`.
    pub fn add_poly(&mut self, p: &FloatPoly, k: f64) {
        for (e, c) in p.terms() {
            self.add_term(e.clone(), &LinExpr::constant(k * c));
        }
    }

    /// `self += coeff · p` for an affine scalar `coeff`.
    pub fn add_scaled_poly(&mut self, p: &FloatPoly, coeff: &LinExpr) {
        for (e, c) in p.terms() {
            self.add_term(e.clone(), &coeff.scaled(*c));
        }
    }

    pub fn add_linpoly(&mut self, other: &LinPoly, k: f64) {
        for (e, c) in &other.terms {
            self.add_term(e.clone(), &c.scaled(k));
        }
    }

    /// Product with a constant polynomial in the same variables.
    pub fn mul_poly(&self, p: &FloatPoly) -> LinPoly {
        assert_eq!(p.nvars(), self.nvars, "variable count");
        let mut out = LinPoly::new(self.nvars);
        for (e, c) in &self.terms {
            for (m, k) in p.terms() {
                out.add_term(e.add(m), &c.scaled(*k));
            }
        }
        out
    }

    pub fn get(&self, e: &Exponent) -> Option<&LinExpr> {
        self.terms.get(e)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &LinExpr)> {
        self.terms.iter()
    }

    pub fn eval(&self, sol: &ConicSolution) -> FloatPoly {
        FloatPoly::from_terms(
            self.nvars,
            self.terms.iter().map(|(e, c)| (e.clone(), sol.eval(c))),
        )
    }
}

/// For every monomial of `basisᵀ Q basis`, the Gram positions `(i, j)` with
/// `i <= j` that produce it.
pub fn gram_expansion(basis: &GramBasis) -> BTreeMap<Exponent, Vec<(usize, usize)>> {
    let el = basis.elements();
    let mut map: BTreeMap<Exponent, Vec<(usize, usize)>> = BTreeMap::new();
    for i in 0..el.len() {
        for j in i..el.len() {
            map.entry(el[i].add(&el[j])).or_default().push((i, j));
        }
    }
    map
}

/// Appends `coeff_m(basisᵀ Q basis) = coeff_m(target)` for every monomial `m`
/// of the Gram expansion. Target monomials outside the expansion must vanish;
/// a nonzero constant one is a structural infeasibility.
pub fn gram_equalities(
    target: &LinPoly,
    basis: &GramBasis,
    q: &SymMatExpr,
    prog: &mut ConicProgram,
) -> Result<()> {
    assert_eq!(q.dim(), basis.len(), "Gram matrix does not match basis");
    if target.nvars() != basis.poly_vars() {
        return Err(Error::DimensionMismatch {
            expected: basis.poly_vars(),
            found: target.nvars(),
        });
    }
    let expansion = gram_expansion(basis);
    for (m, c) in target.terms() {
        if expansion.contains_key(m) {
            continue;
        }
        let c = c.normalized();
        if c.is_constant() {
            if c.constant_part() != 0.0 {
                return Err(Error::StructuralInfeasibility(format!("{m:?}")));
            }
        } else {
            prog.add_eq(c, 0.0);
        }
    }
    for (m, pairs) in &expansion {
        let mut e = LinExpr::zero();
        for &(i, j) in pairs {
            e += &q.get(i, j).scaled(if i == j { 1.0 } else { 2.0 });
        }
        if let Some(t) = target.get(m) {
            e -= t;
        }
        prog.add_eq(e, 0.0);
    }
    Ok(())
}

/// Gram matrix witnessing `p = basisᵀ Q basis` with `Q` in `cone`.
#[derive(Clone, Debug, PartialEq)]
pub struct GramCertificate {
    pub basis: GramBasis,
    pub q: DMatrix<f64>,
    pub cone: MatrixCone,
    /// Cone slack of `Q`: smallest dd row slack, smallest eigenvalue of the
    /// comparison matrix (sdd), or smallest eigenvalue (psd).
    pub margin: f64,
}

pub(crate) fn cone_margin(q: &DMatrix<f64>, cone: MatrixCone) -> f64 {
    if q.nrows() == 0 {
        return f64::INFINITY;
    }
    match cone {
        MatrixCone::Dd => linalg::dd_margin(q),
        MatrixCone::Sdd => linalg::sdd_margin(q),
        MatrixCone::Psd => linalg::min_eigenvalue(q),
    }
}

impl GramCertificate {
    pub fn new(basis: GramBasis, q: DMatrix<f64>, cone: MatrixCone) -> Self {
        let margin = cone_margin(&q, cone);
        GramCertificate {
            basis,
            q,
            cone,
            margin,
        }
    }

    /// `basisᵀ Q basis` as a polynomial.
    pub fn reconstruct(&self) -> FloatPoly {
        let el = self.basis.elements();
        let mut terms = Vec::with_capacity(el.len() * el.len());
        for i in 0..el.len() {
            for j in i..el.len() {
                let w = if i == j { 1.0 } else { 2.0 };
                terms.push((el[i].add(&el[j]), w * self.q[(i, j)]));
            }
        }
        FloatPoly::from_terms(self.basis.poly_vars(), terms)
    }

    /// Moves the reconstruction residual `target − basisᵀQbasis` into `Q`, one
    /// entry per monomial (a diagonal entry when one produces the monomial),
    /// then refreshes the margin. Monomials the basis cannot produce are left
    /// alone.
    pub fn absorb_residual(&mut self, target: &FloatPoly) {
        let recon = self.reconstruct();
        for (m, pairs) in gram_expansion(&self.basis) {
            let r = target.coeff(&m) - recon.coeff(&m);
            if r == 0.0 {
                continue;
            }
            let &(i, j) = pairs.iter().find(|(i, j)| i == j).unwrap_or(&pairs[0]);
            if i == j {
                self.q[(i, i)] += r;
            } else {
                self.q[(i, j)] += r / 2.0;
                self.q[(j, i)] += r / 2.0;
            }
        }
        self.margin = cone_margin(&self.q, self.cone);
    }

    /// Checks `target ≡ basisᵀ Q basis` within `tol·(1 + |c|)` per coefficient
    /// and cone membership up to `-tol·(1 + max|Q_ij|)`.
    pub fn verify(&self, target: &FloatPoly, tol: f64) -> Result<()> {
        if target.nvars() != self.basis.poly_vars() {
            return Err(Error::DimensionMismatch {
                expected: self.basis.poly_vars(),
                found: target.nvars(),
            });
        }
        if !self.q.iter().all(|v| v.is_finite()) {
            return Err(Error::Certificate("non-finite Gram entry".into()));
        }
        let recon = self.reconstruct();
        let diff = &recon - target;
        for (m, d) in diff.terms() {
            let c = target.coeff(m);
            if d.abs() > tol * (1.0 + c.abs()) {
                return Err(Error::Certificate(format!(
                    "coefficient of {m:?}: Gram gives {}, expected {c}",
                    recon.coeff(m)
                )));
            }
        }
        let scale = 1.0 + self.q.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let margin = cone_margin(&self.q, self.cone);
        if margin < -tol * scale {
            return Err(Error::Certificate(format!(
                "Gram matrix leaves the {} cone (margin {margin:e})",
                self.cone
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("certificate serializes")
    }
}

#[derive(Serialize, Deserialize)]
struct CertificateWire {
    basis: GramBasis,
    q: Vec<Vec<f64>>,
    cone: MatrixCone,
    margin: f64,
}

impl Serialize for GramCertificate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CertificateWire {
            basis: self.basis.clone(),
            q: (0..self.q.nrows())
                .map(|i| self.q.row(i).iter().copied().collect())
                .collect(),
            cone: self.cone,
            margin: self.margin,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for GramCertificate {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let w = CertificateWire::deserialize(d)?;
        w.basis.validate().map_err(D::Error::custom)?;
        let n = w.q.len();
        if n != w.basis.len() || w.q.iter().any(|r| r.len() != n) {
            return Err(D::Error::custom("Gram matrix shape does not match basis"));
        }
        let q = DMatrix::from_fn(n, n, |i, j| w.q[i][j]);
        Ok(GramCertificate {
            basis: w.basis,
            q,
            cone: w.cone,
            margin: w.margin,
        })
    }
}
