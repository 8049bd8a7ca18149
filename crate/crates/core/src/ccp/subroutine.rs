//! The convex subproblem of one CCP iteration.
//!
//! The optimal value comes from the sos program
//! `max γ  s.t.  f₀ − γ + Σ λ_j f_j = σ₀,  σ₀ sos,  λ ≥ 0`, which is exact
//! when every input is sos-convex. A minimizer is found separately by a
//! log-barrier Newton method started at the current iterate.

use nalgebra::{DMatrix, DVector};

use crate::certify::{gram_equalities, GramBasis, LinPoly, MonomialBasis};
use crate::conic::{self, add_psd_membership, ConicProgram, LinExpr, SolveStatus};
use crate::error::{Error, Result};
use crate::poly::{FloatPoly, PolynomialMatrix};

/// Outcome of [`convex_subroutine`].
#[derive(Clone, Debug, PartialEq)]
pub struct SubproblemSolution {
    pub x_next: Vec<f64>,
    /// Optimal value certified by the sos program.
    pub gamma: f64,
    pub multipliers: Vec<f64>,
    /// `f₀(x_next) − γ`.
    pub gap: f64,
    pub newton_steps: usize,
}

/// Polynomial with its gradient and Hessian ready for repeated evaluation.
struct Compiled {
    p: FloatPoly,
    grad: Vec<FloatPoly>,
    hess: PolynomialMatrix<f64>,
}

impl Compiled {
    fn new(p: &FloatPoly) -> Self {
        Compiled {
            p: p.clone(),
            grad: p.gradient(),
            hess: p.hessian(),
        }
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.p.eval_f64(x).expect("point length checked")
    }

    fn eval(&self, x: &[f64]) -> (f64, DVector<f64>, DMatrix<f64>) {
        let g = DVector::from_iterator(x.len(), self.grad.iter().map(|d| d.eval_f64(x).expect("length")));
        (self.value(x), g, self.hess.eval_f64(x).expect("length"))
    }
}

/// Smooth convex function on the barrier variables.
trait Smooth {
    fn value(&self, z: &[f64]) -> f64;
    fn eval(&self, z: &[f64]) -> (f64, DVector<f64>, DMatrix<f64>);
}

impl Smooth for Compiled {
    fn value(&self, z: &[f64]) -> f64 {
        Compiled::value(self, z)
    }
    fn eval(&self, z: &[f64]) -> (f64, DVector<f64>, DMatrix<f64>) {
        Compiled::eval(self, z)
    }
}

/// `(x, s) ↦ c(x) − s` for phase I.
struct Shifted<'a>(&'a Compiled);

impl Smooth for Shifted<'_> {
    fn value(&self, z: &[f64]) -> f64 {
        let n = z.len() - 1;
        self.0.value(&z[..n]) - z[n]
    }
    fn eval(&self, z: &[f64]) -> (f64, DVector<f64>, DMatrix<f64>) {
        let n = z.len() - 1;
        let (v, g, h) = self.0.eval(&z[..n]);
        let mut gz = DVector::zeros(n + 1);
        gz.rows_mut(0, n).copy_from(&g);
        gz[n] = -1.0;
        let mut hz = DMatrix::zeros(n + 1, n + 1);
        hz.view_mut((0, 0), (n, n)).copy_from(&h);
        (v - z[n], gz, hz)
    }
}

/// `(x, s) ↦ s`.
struct LastCoordinate;

impl Smooth for LastCoordinate {
    fn value(&self, z: &[f64]) -> f64 {
        z[z.len() - 1]
    }
    fn eval(&self, z: &[f64]) -> (f64, DVector<f64>, DMatrix<f64>) {
        let m = z.len();
        let mut g = DVector::zeros(m);
        g[m - 1] = 1.0;
        (z[m - 1], g, DMatrix::zeros(m, m))
    }
}

/// Solves `H d = -g`, adding a growing ridge when `H` is not numerically
/// positive definite.
fn newton_direction(h: &DMatrix<f64>, g: &DVector<f64>) -> DVector<f64> {
    let scale = 1.0 + h.amax();
    let mut ridge = 0.0;
    loop {
        let mut hh = h.clone();
        for i in 0..hh.nrows() {
            hh[(i, i)] += ridge;
        }
        if let Some(ch) = hh.cholesky() {
            let d = ch.solve(&(-g));
            if d.iter().all(|v| v.is_finite()) {
                return d;
            }
        }
        ridge = if ridge == 0.0 { 1e-12 * scale } else { ridge * 10.0 };
        if ridge > 1e12 * scale {
            return -g;
        }
    }
}

const MAX_CENTERING: usize = 200;

/// Minimizes `t·f(z) − Σ log(−c_j(z))` from a strictly feasible `z` with a
/// backtracking Newton method. Returns the number of steps taken.
fn center(f: &dyn Smooth, cons: &[&dyn Smooth], t: f64, z: &mut Vec<f64>, stop: &dyn Fn(&[f64]) -> bool) -> usize {
    let phi = |z: &[f64]| -> Option<f64> {
        let mut v = t * f.value(z);
        for c in cons {
            let cv = c.value(z);
            if !(cv < 0.0) {
                return None;
            }
            v -= (-cv).ln();
        }
        v.is_finite().then_some(v)
    };
    let mut steps = 0;
    for _ in 0..MAX_CENTERING {
        if stop(z) {
            break;
        }
        let (_, fg, fh) = f.eval(z);
        let mut g = fg * t;
        let mut h = fh * t;
        for c in cons {
            let (cv, cg, ch) = c.eval(z);
            let inv = -1.0 / cv;
            g += &cg * inv;
            h += ch * inv + (&cg * cg.transpose()) * (inv * inv);
        }
        let d = newton_direction(&h, &g);
        let slope = g.dot(&d);
        if !(slope < 0.0) || -slope / 2.0 <= 1e-12 {
            break;
        }
        let Some(base) = phi(z) else { break };
        let mut alpha = 1.0;
        let mut moved = false;
        while alpha > 1e-14 {
            let cand: Vec<f64> = z.iter().zip(d.iter()).map(|(a, b)| a + alpha * b).collect();
            if let Some(v) = phi(&cand) {
                if v <= base + 0.25 * alpha * slope {
                    *z = cand;
                    moved = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        steps += 1;
        if !moved {
            break;
        }
    }
    steps
}

/// Barrier method: centers for `t = 1, 10, 100, …` until `m / t < gap_tol`.
fn barrier(
    f: &dyn Smooth,
    cons: &[&dyn Smooth],
    z: &mut Vec<f64>,
    gap_tol: f64,
    stop: &dyn Fn(&[f64]) -> bool,
) -> usize {
    let m = cons.len() as f64;
    let mut t = 1.0;
    let mut steps = 0;
    loop {
        steps += center(f, cons, t, z, stop);
        if stop(z) || m / t < gap_tol {
            return steps;
        }
        t *= 10.0;
    }
}

/// Damped Newton for an unconstrained convex `f`, stopping at gradient norm
/// `1e-8` or when no decrease is possible.
fn damped_newton(f: &Compiled, x: &mut Vec<f64>) -> usize {
    let mut steps = 0;
    for _ in 0..MAX_CENTERING * 2 {
        let (v, g, h) = f.eval(x);
        if g.norm() <= 1e-8 {
            break;
        }
        let d = newton_direction(&h, &g);
        let slope = g.dot(&d);
        if !(slope < 0.0) {
            break;
        }
        let mut alpha = 1.0;
        let mut moved = false;
        while alpha > 1e-14 {
            let cand: Vec<f64> = x.iter().zip(d.iter()).map(|(a, b)| a + alpha * b).collect();
            if f.value(&cand) <= v + 0.25 * alpha * slope {
                *x = cand;
                moved = true;
                break;
            }
            alpha *= 0.5;
        }
        steps += 1;
        if !moved {
            break;
        }
    }
    steps
}

/// Optimal value of `min f0 s.t. f_j <= 0` via the sos program above, with
/// the multipliers `λ_j`. A numerical failure is retried once at a 100×
/// looser tolerance.
pub fn sos_lower_bound(f0: &FloatPoly, constraints: &[FloatPoly], tol: f64) -> Result<(f64, Vec<f64>)> {
    let n = f0.nvars();
    let deg = constraints.iter().map(|c| c.degree()).chain([f0.degree()]).max().unwrap_or(0);
    let deg = deg + deg % 2;
    let mut prog = ConicProgram::new();
    let gamma = prog.new_var();
    let lambdas = prog.new_vars(constraints.len());
    let mut target = LinPoly::from_poly(f0);
    target.add_term(crate::poly::Exponent::zero(n), &LinExpr::term(gamma, -1.0));
    for (c, &l) in constraints.iter().zip(&lambdas) {
        target.add_scaled_poly(c, &LinExpr::from(l));
        prog.add_nonneg(l.into());
    }
    let basis = GramBasis::Monomial(MonomialBasis::new(n, deg / 2, false));
    let q = prog.new_sym_mat(basis.len());
    gram_equalities(&target, &basis, &q.to_expr(), &mut prog)?;
    add_psd_membership(&mut prog, &q.to_expr());
    prog.set_objective(LinExpr::term(gamma, -1.0));
    let eps = tol.min(conic::default_tolerance());
    let mut sol = conic::solve(&prog, eps);
    if sol.status == SolveStatus::NumericalFailure {
        sol = conic::solve(&prog, eps * 100.0);
    }
    match sol.status {
        SolveStatus::Optimal => Ok((sol.value(gamma), lambdas.iter().map(|&l| sol.value(l).max(0.0)).collect())),
        SolveStatus::Infeasible => Err(Error::Subproblem(format!(
            "sos program infeasible ({}): the convex model has no sos lower bound",
            sol.raw_status
        ))),
        SolveStatus::Unbounded => Err(Error::Subproblem("convex model is unbounded below".into())),
        s => Err(Error::solver(s, format!("sos lower bound ({})", sol.raw_status))),
    }
}

/// Minimizes `f0k` subject to `f_jk(x) <= 0` for convex inputs, starting at
/// `x_start`. A phase I step finds a strictly feasible point when `x_start`
/// lies on or slightly outside the boundary.
pub fn convex_subroutine(
    f0k: &FloatPoly,
    constraints_k: &[FloatPoly],
    x_start: &[f64],
    tol: f64,
) -> Result<SubproblemSolution> {
    let n = f0k.nvars();
    if x_start.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: x_start.len(),
        });
    }
    if let Some(c) = constraints_k.iter().find(|c| c.nvars() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: c.nvars(),
        });
    }
    let (gamma, multipliers) = sos_lower_bound(f0k, constraints_k, tol)?;

    let f = Compiled::new(f0k);
    let cons: Vec<Compiled> = constraints_k.iter().map(Compiled::new).collect();
    let mut x = x_start.to_vec();
    let mut steps = 0;
    if cons.is_empty() {
        steps += damped_newton(&f, &mut x);
    } else {
        let worst = cons.iter().map(|c| c.value(&x)).fold(f64::NEG_INFINITY, f64::max);
        if !(worst < 0.0) {
            let mut z = x.clone();
            z.push(worst + 1.0);
            let shifted: Vec<Shifted> = cons.iter().map(Shifted).collect();
            let refs: Vec<&dyn Smooth> = shifted.iter().map(|s| s as &dyn Smooth).collect();
            let strictly = |z: &[f64]| z[n] < 0.0 && cons.iter().all(|c| c.value(&z[..n]) < 0.0);
            steps += barrier(&LastCoordinate, &refs, &mut z, tol * 0.1, &strictly);
            if !strictly(&z) {
                return Err(Error::Subproblem(format!(
                    "no strictly feasible point found (max constraint {:e})",
                    z[n]
                )));
            }
            z.truncate(n);
            x = z;
        }
        let refs: Vec<&dyn Smooth> = cons.iter().map(|c| c as &dyn Smooth).collect();
        steps += barrier(&f, &refs, &mut x, tol * 0.1, &|_| false);
    }
    // Never return a point worse than a feasible start.
    let start_ok = cons.iter().all(|c| c.value(x_start) <= 0.0);
    if start_ok && f.value(x_start) < f.value(&x) {
        x = x_start.to_vec();
    }
    let gap = f.value(&x) - gamma;
    Ok(SubproblemSolution {
        x_next: x,
        gamma,
        multipliers,
        gap,
        newton_steps: steps,
    })
}
