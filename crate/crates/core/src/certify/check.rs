use rayon::prelude::*;
use serde::Serialize;

use super::{ConvexityCone, GramBasis, GramCertificate, LinPoly, MonomialBasis, TensorBasis};
use crate::conic::{self, add_membership, ConicProgram};
use crate::error::{Error, Result};
use crate::linalg;
use crate::poly::{Coefficient, Exponent, FloatPoly, Polynomial, RatPoly};

/// Reconstruction and cone tolerance used when re-verifying solver output.
const VERIFY_TOL: f64 = 1e-6;

fn even_degree<C: Coefficient>(p: &Polynomial<C>) -> u32 {
    p.pad_to_even_degree().ambient_degree().max(p.degree())
}

/// Tensor basis for the Hessian form of `p`: `w_{n,d-1}` for a nonzero form
/// of degree `2d`, `w̃_{n,d-1}` otherwise.
pub fn convexity_basis<C: Coefficient>(p: &Polynomial<C>) -> TensorBasis {
    let deg = even_degree(p).max(2);
    let homogeneous = !p.is_zero() && p.is_homogeneous() && p.degree() == deg;
    TensorBasis::new(MonomialBasis::new(p.nvars(), deg / 2 - 1, homogeneous))
}

pub(crate) fn certify_gram(
    target: &FloatPoly,
    basis: GramBasis,
    level: ConvexityCone,
    context: &str,
) -> Result<GramCertificate> {
    let mut prog = ConicProgram::new();
    let q = prog.new_sym_mat(basis.len());
    let qe = q.to_expr();
    gram_equalities_for(&mut prog, target, &basis, &qe)?;
    add_membership(&mut prog, &qe, level.matrix_cone());
    let sol = conic::solve(&prog, conic::default_tolerance());
    if !sol.is_optimal() {
        return Err(Error::solver(sol.status, format!("{context} at {level} level ({})", sol.raw_status)));
    }
    let mut cert = GramCertificate::new(basis, q.value(&sol), level.matrix_cone());
    cert.absorb_residual(target);
    cert.verify(target, VERIFY_TOL)?;
    Ok(cert)
}

fn gram_equalities_for(
    prog: &mut ConicProgram,
    target: &FloatPoly,
    basis: &GramBasis,
    q: &conic::SymMatExpr,
) -> Result<()> {
    super::gram_equalities(&LinPoly::from_poly(target), basis, q, prog)
}

/// Gram certificate that `p` is dsos, sdsos or sos, over `z_{n,d}` for forms
/// of degree `2d` and `z̃_{n,d}` otherwise.
pub fn check_membership<C: Coefficient>(p: &Polynomial<C>, cone: ConvexityCone) -> Result<GramCertificate> {
    if p.degree() % 2 == 1 {
        return Err(Error::InvalidInput(format!(
            "odd degree {} cannot be a sum of squares",
            p.degree()
        )));
    }
    let deg = even_degree(p);
    let homogeneous = !p.is_zero() && p.is_homogeneous() && p.degree() == deg;
    let basis = GramBasis::Monomial(MonomialBasis::new(p.nvars(), deg / 2, homogeneous));
    certify_gram(&p.to_f64(), basis, cone, "membership")
}

/// Gram certificate that `yᵀ H_p(x) y` is dsos, sdsos or sos, i.e. that `p` is
/// dsos-, sdsos- or sos-convex.
pub fn check_convexity<C: Coefficient>(p: &Polynomial<C>, cone: ConvexityCone) -> Result<GramCertificate> {
    let basis = GramBasis::Tensor(convexity_basis(p));
    certify_gram(&p.to_f64().hessian_form(), basis, cone, "convexity")
}

fn constant_hessian_rational(p: &RatPoly) -> Vec<Vec<num_rational::BigRational>> {
    let zero = vec![num_rational::BigRational::from_integer(0.into()); p.nvars()];
    p.hessian().eval(&zero).expect("point has the right length")
}

/// For quadratics `f` and `g`: is `g` a dcd of `f`, i.e. `H_g ⪰ 0` and
/// `H_{g−f} ⪰ 0`? Decided by exact rational elimination.
pub fn quadratic_dcd_check(f: &RatPoly, g: &RatPoly) -> Result<bool> {
    if f.degree() > 2 || g.degree() > 2 {
        return Err(Error::InvalidInput("quadratic_dcd_check needs degree <= 2".into()));
    }
    let h = g.checked_sub(f)?;
    Ok(linalg::is_psd_exact(&constant_hessian_rational(g))
        && linalg::is_psd_exact(&constant_hessian_rational(&h)))
}

/// Floating-point variant of [`quadratic_dcd_check`]: eigenvalues must be at
/// least `-1e-9`.
pub fn quadratic_dcd_check_f64(f: &FloatPoly, g: &FloatPoly) -> Result<bool> {
    if f.degree() > 2 || g.degree() > 2 {
        return Err(Error::InvalidInput("quadratic_dcd_check needs degree <= 2".into()));
    }
    let h = g.checked_sub(f)?;
    let zero = vec![0.0; f.nvars()];
    let ok = |p: &FloatPoly| -> Result<bool> {
        Ok(linalg::min_eigenvalue(&p.hessian().eval_f64(&zero)?) >= -1e-9)
    };
    Ok(ok(g)? && ok(&h)?)
}

/// `lo, lo + step, …` up to `hi` (inclusive, with a little slack for rounding).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridRange {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl GridRange {
    pub fn new(lo: f64, hi: f64, step: f64) -> Self {
        GridRange { lo, hi, step }
    }

    pub fn points(&self) -> Vec<f64> {
        if !(self.step > 0.0) || self.hi < self.lo {
            return Vec::new();
        }
        let count = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|k| self.lo + k as f64 * self.step).collect()
    }
}

/// `2x₁⁴ + 2x₂⁴ + a x₁³x₂ + b x₁²x₂² + c x₁x₂³`.
pub fn family_polynomial(a: f64, b: f64, c: f64) -> FloatPoly {
    FloatPoly::from_terms(
        2,
        [
            (Exponent::new(vec![4, 0]), 2.0),
            (Exponent::new(vec![0, 4]), 2.0),
            (Exponent::new(vec![3, 1]), a),
            (Exponent::new(vec![2, 2]), b),
            (Exponent::new(vec![1, 3]), c),
        ],
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScanPoint {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub dsos: bool,
    pub sdsos: bool,
    pub sos: bool,
}

impl ScanPoint {
    /// Strongest level certified, `None` if not even sos-convex.
    pub fn level(&self) -> Option<ConvexityCone> {
        [
            (self.dsos, ConvexityCone::Dsos),
            (self.sdsos, ConvexityCone::Sdsos),
            (self.sos, ConvexityCone::Sos),
        ]
        .into_iter()
        .find_map(|(ok, l)| ok.then_some(l))
    }

    /// `dsos ⇒ sdsos ⇒ sos`.
    pub fn is_nested(&self) -> bool {
        (!self.dsos || self.sdsos) && (!self.sdsos || self.sos)
    }
}

/// Certifies every grid point of the family at all three levels.
pub fn scan_parametric_family(c: f64, a: GridRange, b: GridRange) -> Vec<ScanPoint> {
    let grid: Vec<(f64, f64)> = a
        .points()
        .into_iter()
        .flat_map(|x| b.points().into_iter().map(move |y| (x, y)))
        .collect();
    grid.into_par_iter()
        .map(|(a, b)| {
            let p = family_polynomial(a, b, c);
            let ok = |l| check_convexity(&p, l).is_ok();
            ScanPoint {
                a,
                b,
                c,
                dsos: ok(ConvexityCone::Dsos),
                sdsos: ok(ConvexityCone::Sdsos),
                sos: ok(ConvexityCone::Sos),
            }
        })
        .collect()
}

/// CSV with columns `a,b,c,level`; level is `none`, `dsos`, `sdsos` or `sos`.
pub fn scan_csv(points: &[ScanPoint]) -> String {
    let mut out = String::from("a,b,c,level\n");
    for p in points {
        let level = p.level().map_or("none".to_string(), |l| l.to_string());
        out.push_str(&format!("{},{},{},{level}\n", p.a, p.b, p.c));
    }
    out
}
