//! Difference-of-convex decompositions `f = g − h`.
//!
//! [`decompose`] searches for `g` with both `g` and `h = g − f` certified
//! convex at a chosen [`ConvexityCone`] level, under one of five objectives.
//! The unknowns are the coefficients of `g` of degree at least two; the affine
//! part of `g` is copied from `f`, so `h` never carries affine terms. After
//! the solve `g` is rounded to exact rationals and `h` is recomputed exactly.
//!
//! [`interior_full`] and friends build, in exact arithmetic, a polynomial whose
//! Hessian form has a strictly diagonally dominant Gram matrix.

mod interior;

use std::time::Instant;

use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::certify::{
    check_convexity, gram_equalities, ConvexityCone, GramBasis, GramCertificate, LinPoly,
    MonomialBasis, TensorBasis,
};
use crate::conic::{self, add_lambda_bound, add_membership, ConicProgram, LinExpr, MatrixCone, SolveStatus, SymMatExpr};
use crate::error::{Error, Result};
use crate::poly::{
    exponents_up_to_degree, hessian_form_of_monomial, hessian_monomial_terms, hessian_weight,
    Coefficient, Exponent, FloatPoly, Polynomial, RatPoly,
};
use crate::sphere::avg_trace_hessian_functional;

pub use self::interior::{interior_bivariate, interior_full, interior_homogeneous, InteriorConstruction};

/// Tolerance for re-verifying solver certificates.
const VERIFY_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Objective {
    /// Any feasible decomposition.
    #[serde(rename = "feas")]
    Feasibility,
    /// Minimize the sphere average of `Tr H_g`.
    #[serde(rename = "undom")]
    UndominatedSphereTrace,
    /// Minimize `Tr H_h(x̄)`.
    #[serde(rename = "trace-point")]
    TraceAtPoint { point: Vec<f64> },
    /// Minimize an upper bound on `λmax(H_h(x₀))`.
    #[serde(rename = "lmax-point")]
    LambdaMaxAtPoint { point: Vec<f64> },
    /// Minimize an upper bound on `λmax(H_h(x))` over `|x| ≤ R`.
    #[serde(rename = "lmax-ball")]
    LambdaMaxOnBall { radius: f64 },
}

impl Objective {
    pub fn name(&self) -> &'static str {
        match self {
            Objective::Feasibility => "feas",
            Objective::UndominatedSphereTrace => "undom",
            Objective::TraceAtPoint { .. } => "trace-point",
            Objective::LambdaMaxAtPoint { .. } => "lmax-point",
            Objective::LambdaMaxOnBall { .. } => "lmax-ball",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionRequest {
    pub objective: Objective,
    pub cone: ConvexityCone,
    /// Cone for the `λmax` bound certificates.
    pub lambda_bound_cone: MatrixCone,
    pub solver_tolerance: f64,
    /// Seconds before the solver gives up; `None` is unlimited.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_limit: Option<f64>,
}

impl DecompositionRequest {
    /// Request with the `λmax` bound at the same level as `cone`.
    pub fn new(objective: Objective, cone: ConvexityCone) -> Self {
        DecompositionRequest {
            objective,
            cone,
            lambda_bound_cone: cone.matrix_cone(),
            solver_tolerance: conic::default_tolerance(),
            time_limit: None,
        }
    }

    pub fn with_lambda_bound_cone(mut self, c: MatrixCone) -> Self {
        self.lambda_bound_cone = c;
        self
    }

    pub fn with_tolerance(mut self, eps: f64) -> Self {
        self.solver_tolerance = eps;
        self
    }

    pub fn with_time_limit(mut self, seconds: f64) -> Self {
        self.time_limit = Some(seconds);
        self
    }

    fn validate(&self, n: usize) -> Result<()> {
        match &self.objective {
            Objective::TraceAtPoint { point } | Objective::LambdaMaxAtPoint { point } => {
                if point.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: point.len(),
                    });
                }
                if point.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidInput("point has non-finite entries".into()));
                }
            }
            Objective::LambdaMaxOnBall { radius } => {
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(Error::InvalidInput(format!("ball radius must be positive, got {radius}")));
                }
            }
            _ => {}
        }
        if !(self.solver_tolerance > 0.0) {
            return Err(Error::InvalidInput("solver tolerance must be positive".into()));
        }
        if self.time_limit.is_some_and(|t| !(t > 0.0)) {
            return Err(Error::InvalidInput("time limit must be positive".into()));
        }
        Ok(())
    }
}

/// `f = g − h` with both parts certified convex.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub f: RatPoly,
    pub g: RatPoly,
    pub h: RatPoly,
    pub g_certificate: GramCertificate,
    pub h_certificate: GramCertificate,
    /// For ball objectives: certificates of `yᵀ(tI − H_h + f₁τ)y` and `yᵀτy`.
    pub bound_certificates: Vec<GramCertificate>,
    pub objective_value: f64,
    pub request: DecompositionRequest,
    /// Seconds spent in the conic solver.
    pub solve_time: f64,
}

impl Decomposition {
    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::json!({
            "f": self.f,
            "g": self.g,
            "h": self.h,
            "objective": self.request.objective,
            "objective_value": self.objective_value,
            "cone": self.request.cone,
            "lambda_bound_cone": self.request.lambda_bound_cone,
            "g_margin": self.g_certificate.margin,
            "h_margin": self.h_certificate.margin,
            "solve_time_ms": (self.solve_time * 1000.0).round() as u64,
        })
    }

    pub fn to_json(&self) -> String {
        self.to_json_value().to_string()
    }

    /// Re-checks both certificates against the stored polynomials.
    pub fn verify(&self) -> Result<()> {
        if &self.g - &self.h != self.f {
            return Err(Error::Certificate("g - h differs from f".into()));
        }
        self.g_certificate.verify(&self.g.to_f64().hessian_form(), VERIFY_TOL)?;
        self.h_certificate.verify(&self.h.to_f64().hessian_form(), VERIFY_TOL)?;
        Ok(())
    }
}

/// Hessian entries `(i, j, ∂²x^e/∂x_i∂x_j (x))` with `i <= j`.
fn monomial_hessian_at(e: &Exponent, x: &[f64]) -> Vec<(usize, usize, f64)> {
    hessian_monomial_terms(e)
        .into_iter()
        .map(|(i, j, m)| {
            let w = hessian_weight(e, i, j) as f64;
            let w = if i == j { w } else { w / 2.0 };
            (i, j, w * m.eval_f64(x))
        })
        .collect()
}

fn even_degree(f: &RatPoly) -> u32 {
    let d = f.pad_to_even_degree().ambient_degree().max(f.degree());
    d + d % 2
}

fn hessian_basis(n: usize, deg: u32) -> GramBasis {
    GramBasis::Tensor(TensorBasis::new(MonomialBasis::new(n, deg / 2 - 1, false)))
}

fn to_rational(v: f64) -> BigRational {
    BigRational::from_float(v).unwrap_or_else(BigRational::zero)
}

/// A zero Gram matrix certifies the zero Hessian form at any level.
fn zero_certificate(n: usize, deg: u32, cone: ConvexityCone) -> GramCertificate {
    let basis = hessian_basis(n, deg.max(2));
    let k = basis.len();
    GramCertificate::new(basis, nalgebra::DMatrix::zeros(k, k), cone.matrix_cone())
}

/// Decomposes `f` (padded to even degree `2d`) as `g − h` with `g`, `h` in
/// the requested convexity cone and `g` of degree at most `2d`.
pub fn decompose<C: Coefficient>(f: &Polynomial<C>, req: &DecompositionRequest) -> Result<Decomposition> {
    let f = f.to_rational_poly();
    let n = f.nvars();
    req.validate(n)?;
    let deg = even_degree(&f);
    if f.degree() <= 1 {
        return Ok(Decomposition {
            g: f.clone(),
            h: RatPoly::zero(n),
            g_certificate: zero_certificate(n, deg, req.cone),
            h_certificate: zero_certificate(n, deg, req.cone),
            bound_certificates: Vec::new(),
            objective_value: 0.0,
            request: req.clone(),
            solve_time: 0.0,
            f,
        });
    }
    let ff = f.to_f64();
    let hf = ff.hessian_form();

    let mut prog = ConicProgram::new();
    let monos: Vec<Exponent> = exponents_up_to_degree(n, deg)
        .into_iter()
        .filter(|m| m.degree() >= 2)
        .collect();
    let cvars = prog.new_vars(monos.len());
    let mut hg = LinPoly::new(2 * n);
    for (m, &v) in monos.iter().zip(&cvars) {
        for (k, w) in hessian_form_of_monomial(m) {
            hg.add_term(k, &LinExpr::term(v, w as f64));
        }
    }
    let mut hh = hg.clone();
    hh.add_poly(&hf, -1.0);

    let basis = hessian_basis(n, deg);
    let mcone = req.cone.matrix_cone();
    let qg = prog.new_sym_mat(basis.len());
    gram_equalities(&hg, &basis, &qg.to_expr(), &mut prog)?;
    add_membership(&mut prog, &qg.to_expr(), mcone);
    let qh = prog.new_sym_mat(basis.len());
    gram_equalities(&hh, &basis, &qh.to_expr(), &mut prog)?;
    add_membership(&mut prog, &qh.to_expr(), mcone);

    let mut t_var = None;
    let mut ball: Option<BallParts> = None;
    match &req.objective {
        Objective::Feasibility => {}
        Objective::UndominatedSphereTrace => {
            let phi = avg_trace_hessian_functional(n, deg);
            let mut obj = LinExpr::zero();
            for (m, &v) in monos.iter().zip(&cvars) {
                let w = phi.weight(m);
                if !w.is_zero() {
                    obj.add_term(v, w.to_f64());
                }
            }
            prog.set_objective(obj);
        }
        Objective::TraceAtPoint { point } => {
            let mut obj = LinExpr::zero();
            for (m, &v) in monos.iter().zip(&cvars) {
                let tr: f64 = monomial_hessian_at(m, point)
                    .iter()
                    .filter(|(i, j, _)| i == j)
                    .map(|&(_, _, val)| val)
                    .sum();
                obj.add_term(v, tr);
            }
            obj.add_constant(-ff.hessian().eval_f64(point)?.trace());
            prog.set_objective(obj);
        }
        Objective::LambdaMaxAtPoint { point } => {
            let mut a = SymMatExpr::zeros(n);
            for (m, &v) in monos.iter().zip(&cvars) {
                for (i, j, val) in monomial_hessian_at(m, point) {
                    a.get_mut(i, j).add_term(v, val);
                }
            }
            let hfx = ff.hessian().eval_f64(point)?;
            for i in 0..n {
                for j in i..n {
                    a.get_mut(i, j).add_constant(-hfx[(i, j)]);
                }
            }
            let t = prog.new_var();
            add_lambda_bound(&mut prog, t, &a, req.lambda_bound_cone);
            prog.set_objective(t.into());
            t_var = Some(t);
        }
        Objective::LambdaMaxOnBall { radius } => {
            let t = prog.new_var();
            ball = Some(add_ball_bound(&mut prog, &hh, t, n, deg, *radius, req.lambda_bound_cone)?);
            prog.set_objective(t.into());
            t_var = Some(t);
        }
    }

    let started = Instant::now();
    let mut sol = conic::solve_within(&prog, req.solver_tolerance, req.time_limit);
    if sol.status == SolveStatus::NumericalFailure {
        // Certificates are re-verified below, so a looser solve is still checked.
        sol = conic::solve_within(&prog, req.solver_tolerance * 100.0, req.time_limit);
    }
    let solve_time = started.elapsed().as_secs_f64();
    if !sol.is_optimal() {
        return Err(Error::solver(
            sol.status,
            format!(
                "{} decomposition at {} level ({})",
                req.objective.name(),
                req.cone,
                sol.raw_status
            ),
        ));
    }

    let mut g = f.affine_part();
    let gq = RatPoly::from_terms(
        n,
        monos
            .iter()
            .zip(&cvars)
            .map(|(m, &v)| (m.clone(), to_rational(sol.value(v)))),
    );
    g = &g + &gq;
    let g = g.with_ambient_degree(deg);
    let h = (&g - &f).with_ambient_degree(deg);

    let certify = |q: &conic::SymMatVar, target: &FloatPoly, cone: MatrixCone, basis: &GramBasis| {
        let mut c = GramCertificate::new(basis.clone(), q.value(&sol), cone);
        c.absorb_residual(target);
        c.verify(target, VERIFY_TOL).map(|_| c)
    };
    let hg_exact = g.to_f64().hessian_form();
    let hh_exact = h.to_f64().hessian_form();
    let g_certificate = certify(&qg, &hg_exact, mcone, &basis)?;
    let h_certificate = certify(&qh, &hh_exact, mcone, &basis)?;

    let mut bound_certificates = Vec::new();
    if let (Some(parts), Some(t)) = (&ball, t_var) {
        let tau = parts.tau.eval(&sol);
        let mut target = &tau * &parts.f1;
        target = &target - &hh_exact;
        for i in 0..n {
            let mut e = vec![0u32; 2 * n];
            e[n + i] = 2;
            target = &target + &FloatPoly::monomial(Exponent::new(e), sol.value(t));
        }
        bound_certificates.push(certify(&parts.bound_q, &target, req.lambda_bound_cone, &parts.bound_basis)?);
        if let (Some(q), Some(b)) = (&parts.tau_q, &parts.tau_basis) {
            bound_certificates.push(certify(q, &tau, req.lambda_bound_cone, b)?);
        }
    }

    let objective_value = match &req.objective {
        Objective::Feasibility => 0.0,
        Objective::UndominatedSphereTrace => avg_trace_hessian_functional(n, deg)
            .apply(&g)
            .to_f64(),
        Objective::TraceAtPoint { point } => h.to_f64().hessian().eval_f64(point)?.trace(),
        Objective::LambdaMaxAtPoint { .. } | Objective::LambdaMaxOnBall { .. } => {
            sol.value(t_var.expect("bound variable"))
        }
    };

    Ok(Decomposition {
        f,
        g,
        h,
        g_certificate,
        h_certificate,
        bound_certificates,
        objective_value,
        request: req.clone(),
        solve_time,
    })
}

struct BallParts {
    f1: FloatPoly,
    tau: LinPoly,
    bound_q: conic::SymMatVar,
    bound_basis: GramBasis,
    tau_q: Option<conic::SymMatVar>,
    tau_basis: Option<GramBasis>,
}

/// `yᵀ(tI − H_h(x) + f₁(x)τ(x))y` and `yᵀτ(x)y` in `cone`, where
/// `f₁ = |x|² − R²` and the entries of `τ` are free polynomials of degree at
/// most `2d − 4`.
fn add_ball_bound(
    prog: &mut ConicProgram,
    hh: &LinPoly,
    t: conic::VarRef,
    n: usize,
    deg: u32,
    radius: f64,
    cone: MatrixCone,
) -> Result<BallParts> {
    let mut f1_terms: Vec<(Exponent, f64)> = (0..n)
        .map(|i| {
            let mut e = vec![0u32; 2 * n];
            e[i] = 2;
            (Exponent::new(e), 1.0)
        })
        .collect();
    f1_terms.push((Exponent::zero(2 * n), -radius * radius));
    let f1 = FloatPoly::from_terms(2 * n, f1_terms);

    let mut bound = LinPoly::new(2 * n);
    for i in 0..n {
        let mut e = vec![0u32; 2 * n];
        e[n + i] = 2;
        bound.add_term(Exponent::new(e), &LinExpr::from(t));
    }
    bound.add_linpoly(hh, -1.0);

    let mut tau = LinPoly::new(2 * n);
    let (mut tau_q, mut tau_basis) = (None, None);
    if deg >= 4 {
        for mu in exponents_up_to_degree(n, deg - 4) {
            for i in 0..n {
                for j in i..n {
                    let mut e = mu.powers().to_vec();
                    e.extend(std::iter::repeat(0).take(n));
                    e[n + i] += 1;
                    e[n + j] += 1;
                    let v = prog.new_var();
                    tau.add_term(Exponent::new(e), &LinExpr::from(v));
                }
            }
        }
        bound.add_linpoly(&tau.mul_poly(&f1), 1.0);
        let b = hessian_basis(n, deg - 2);
        let q = prog.new_sym_mat(b.len());
        gram_equalities(&tau, &b, &q.to_expr(), prog)?;
        add_membership(prog, &q.to_expr(), cone);
        tau_q = Some(q);
        tau_basis = Some(b);
    }
    let bound_basis = hessian_basis(n, deg);
    let bound_q = prog.new_sym_mat(bound_basis.len());
    gram_equalities(&bound, &bound_basis, &bound_q.to_expr(), prog)?;
    add_membership(prog, &bound_q.to_expr(), cone);
    Ok(BallParts {
        f1,
        tau,
        bound_q,
        bound_basis,
        tau_q,
        tau_basis,
    })
}

/// `c = g − g′` certified convex at `cone` with a term of degree ≥ 2.
#[derive(Clone, Debug)]
pub struct DominanceWitness {
    pub c: RatPoly,
    pub certificate: GramCertificate,
    pub nonaffine: bool,
}

#[derive(Clone, Debug)]
pub struct DominanceVerdict {
    pub dominated: bool,
    pub witness: Option<DominanceWitness>,
}

/// Does `g_prime` dominate `g`, i.e. is `g − g′` cone-convex and nonaffine?
pub fn dominates<C: Coefficient>(g: &Polynomial<C>, g_prime: &Polynomial<C>, cone: ConvexityCone) -> Result<DominanceVerdict> {
    let c = g.to_rational_poly().checked_sub(&g_prime.to_rational_poly())?;
    let nonaffine = c.degree() >= 2;
    if !nonaffine {
        return Ok(DominanceVerdict {
            dominated: false,
            witness: None,
        });
    }
    Ok(match check_convexity(&c, cone) {
        Ok(certificate) => DominanceVerdict {
            dominated: true,
            witness: Some(DominanceWitness {
                c,
                certificate,
                nonaffine,
            }),
        },
        Err(_) => DominanceVerdict {
            dominated: false,
            witness: None,
        },
    })
}

#[cfg(test)]
mod tests;
