//! Solver-agnostic cone programs.
//!
//! A [`ConicProgram`] holds scalar variables, linear equalities, and
//! memberships of affine expressions in the nonnegative orthant, rotated
//! quadratic cones and the positive semidefinite cone. Programs are always
//! minimizations and are solved through the [`ConicSolver`] trait; the
//! default backend is [`ClarabelSolver`].
//!
//! Matrix cones used by the certificates are layered on top:
//! [`add_dd_membership`] expands to linear rows, [`add_sdd_membership`] to
//! 2×2 blocks in rotated quadratic cones, and [`add_psd_membership`] to a
//! single semidefinite block.

mod cbf;
mod clarabel;

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use self::cbf::write_cbf;
pub use self::clarabel::ClarabelSolver;

/// Solver tolerance used when nothing else is requested.
pub const DEFAULT_TOLERANCE: f64 = 1e-8;

/// Environment variable overriding [`DEFAULT_TOLERANCE`].
pub const TOLERANCE_ENV: &str = "DCPOLY_SOLVER_TOL";

/// `DCPOLY_SOLVER_TOL` if set to a positive number, else [`DEFAULT_TOLERANCE`].
pub fn default_tolerance() -> f64 {
    std::env::var(TOLERANCE_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<f64>().ok())
        .filter(|t| t.is_finite() && *t > 0.0)
        .unwrap_or(DEFAULT_TOLERANCE)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarRef(pub(crate) usize);

impl VarRef {
    pub fn id(self) -> usize {
        self.0
    }
}

/// Affine expression `Σ c_i x_i + constant`. Repeated variables are allowed
/// and summed.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinExpr {
    terms: Vec<(usize, f64)>,
    constant: f64,
}

impl LinExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        LinExpr {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn term(v: VarRef, c: f64) -> Self {
        LinExpr {
            terms: vec![(v.0, c)],
            constant: 0.0,
        }
    }

    pub fn add_term(&mut self, v: VarRef, c: f64) {
        if c != 0.0 {
            self.terms.push((v.0, c));
        }
    }

    pub fn add_constant(&mut self, c: f64) {
        self.constant += c;
    }

    pub fn constant_part(&self) -> f64 {
        self.constant
    }

    pub fn raw_terms(&self) -> &[(usize, f64)] {
        &self.terms
    }

    /// Terms sorted by variable, merged, exact zeros dropped.
    pub fn normalized(&self) -> LinExpr {
        let mut t = self.terms.clone();
        t.sort_by_key(|&(v, _)| v);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(t.len());
        for (v, c) in t {
            match out.last_mut() {
                Some((w, d)) if *w == v => *d += c,
                _ => out.push((v, c)),
            }
        }
        out.retain(|&(_, c)| c != 0.0);
        LinExpr {
            terms: out,
            constant: self.constant,
        }
    }

    /// True when no variable has a nonzero net coefficient.
    pub fn is_constant(&self) -> bool {
        self.normalized().terms.is_empty()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, c)| c * x[v]).sum::<f64>() + self.constant
    }

    pub fn scaled(&self, k: f64) -> LinExpr {
        LinExpr {
            terms: self.terms.iter().map(|&(v, c)| (v, c * k)).collect(),
            constant: self.constant * k,
        }
    }

    fn max_var(&self) -> Option<usize> {
        self.terms.iter().map(|&(v, _)| v).max()
    }
}

impl From<VarRef> for LinExpr {
    fn from(v: VarRef) -> Self {
        LinExpr::term(v, 1.0)
    }
}

impl From<f64> for LinExpr {
    fn from(c: f64) -> Self {
        LinExpr::constant(c)
    }
}

impl AddAssign<&LinExpr> for LinExpr {
    fn add_assign(&mut self, rhs: &LinExpr) {
        self.terms.extend_from_slice(&rhs.terms);
        self.constant += rhs.constant;
    }
}

impl SubAssign<&LinExpr> for LinExpr {
    fn sub_assign(&mut self, rhs: &LinExpr) {
        self.terms.extend(rhs.terms.iter().map(|&(v, c)| (v, -c)));
        self.constant -= rhs.constant;
    }
}

impl<T: Into<LinExpr>> Add<T> for LinExpr {
    type Output = LinExpr;
    fn add(mut self, rhs: T) -> LinExpr {
        self += &rhs.into();
        self
    }
}

impl<T: Into<LinExpr>> Sub<T> for LinExpr {
    type Output = LinExpr;
    fn sub(mut self, rhs: T) -> LinExpr {
        self -= &rhs.into();
        self
    }
}

impl Mul<f64> for LinExpr {
    type Output = LinExpr;
    fn mul(self, k: f64) -> LinExpr {
        self.scaled(k)
    }
}

impl Neg for LinExpr {
    type Output = LinExpr;
    fn neg(self) -> LinExpr {
        self.scaled(-1.0)
    }
}

impl fmt::Display for LinExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let e = self.normalized();
        for (k, (v, c)) in e.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}*x{v}")?;
        }
        if e.terms.is_empty() || e.constant != 0.0 {
            if !e.terms.is_empty() {
                write!(f, " + ")?;
            }
            write!(f, "{}", e.constant)?;
        }
        Ok(())
    }
}

/// Packed index of `(i, j)` in an upper triangle stored row by row.
fn packed(dim: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * dim - i * (i + 1) / 2 + j
}

/// Symmetric matrix of decision variables; `(i, j)` and `(j, i)` share a variable.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatVar {
    dim: usize,
    vars: Vec<VarRef>,
}

impl SymMatVar {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> VarRef {
        self.vars[packed(self.dim, i, j)]
    }

    pub fn to_expr(&self) -> SymMatExpr {
        SymMatExpr {
            dim: self.dim,
            entries: self.vars.iter().map(|&v| LinExpr::from(v)).collect(),
        }
    }

    /// Value of the matrix in a solution.
    pub fn value(&self, sol: &ConicSolution) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| sol.value(self.get(i, j)))
    }
}

/// Symmetric matrix of affine expressions.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatExpr {
    dim: usize,
    entries: Vec<LinExpr>,
}

impl SymMatExpr {
    pub fn zeros(dim: usize) -> Self {
        SymMatExpr {
            dim,
            entries: vec![LinExpr::zero(); dim * (dim + 1) / 2],
        }
    }

    /// Constant matrix; only the upper triangle of `m` is read.
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "matrix must be square");
        let mut out = SymMatExpr::zeros(m.nrows());
        for i in 0..m.nrows() {
            for j in i..m.nrows() {
                *out.get_mut(i, j) = LinExpr::constant(m[(i, j)]);
            }
        }
        out
    }

    /// `t · I` for a scalar variable `t`.
    pub fn scaled_identity(dim: usize, t: VarRef) -> Self {
        let mut out = SymMatExpr::zeros(dim);
        for i in 0..dim {
            *out.get_mut(i, i) = LinExpr::from(t);
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> &LinExpr {
        &self.entries[packed(self.dim, i, j)]
    }

    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut LinExpr {
        let k = packed(self.dim, i, j);
        &mut self.entries[k]
    }

    pub fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.get(i, j).eval(x))
    }

    pub fn sub(&self, other: &SymMatExpr) -> SymMatExpr {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let mut out = self.clone();
        for (a, b) in out.entries.iter_mut().zip(&other.entries) {
            *a -= b;
        }
        out
    }

    pub fn add(&self, other: &SymMatExpr) -> SymMatExpr {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let mut out = self.clone();
        for (a, b) in out.entries.iter_mut().zip(&other.entries) {
            *a += b;
        }
        out
    }
}

impl From<&SymMatVar> for SymMatExpr {
    fn from(m: &SymMatVar) -> Self {
        m.to_expr()
    }
}

/// Matrix cone for Gram and eigenvalue-bound constraints.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixCone {
    Dd,
    Sdd,
    Psd,
}

impl fmt::Display for MatrixCone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MatrixCone::Dd => "dd",
            MatrixCone::Sdd => "sdd",
            MatrixCone::Psd => "psd",
        })
    }
}

impl std::str::FromStr for MatrixCone {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "dd" => Ok(MatrixCone::Dd),
            "sdd" => Ok(MatrixCone::Sdd),
            "psd" => Ok(MatrixCone::Psd),
            _ => Err(format!("unknown matrix cone {s:?} (expected dd, sdd or psd)")),
        }
    }
}

/// Identifies a labeled nonnegativity row, e.g. row `row` of the `group`-th
/// dd membership.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RowLabel {
    pub group: usize,
    pub row: usize,
}

#[derive(Clone, Debug)]
pub(crate) struct RotatedQuad {
    pub u: LinExpr,
    pub v: LinExpr,
    pub w: Vec<LinExpr>,
}

/// A minimization problem over affine cone constraints.
#[derive(Clone, Debug, Default)]
pub struct ConicProgram {
    num_vars: usize,
    objective: LinExpr,
    pub(crate) equalities: Vec<LinExpr>,
    pub(crate) nonneg: Vec<(LinExpr, Option<RowLabel>)>,
    pub(crate) rotated: Vec<RotatedQuad>,
    pub(crate) psd: Vec<SymMatExpr>,
    /// Constant equalities that do not hold, e.g. `0 = 1`.
    inconsistent: Vec<String>,
    next_group: usize,
}

impl ConicProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_equalities(&self) -> usize {
        self.equalities.len()
    }

    pub fn new_var(&mut self) -> VarRef {
        self.num_vars += 1;
        VarRef(self.num_vars - 1)
    }

    pub fn new_vars(&mut self, k: usize) -> Vec<VarRef> {
        (0..k).map(|_| self.new_var()).collect()
    }

    pub fn new_sym_mat(&mut self, dim: usize) -> SymMatVar {
        let vars = self.new_vars(dim * (dim + 1) / 2);
        SymMatVar { dim, vars }
    }

    /// `expr = rhs`. An equality without variables is checked immediately and,
    /// if it fails, makes the program infeasible.
    pub fn add_eq(&mut self, expr: LinExpr, rhs: f64) {
        let mut e = expr.normalized();
        e.constant -= rhs;
        if e.terms.is_empty() {
            if e.constant != 0.0 {
                self.inconsistent.push(format!("constant equality {} = 0", e.constant));
            }
            return;
        }
        self.check_range(&e);
        self.equalities.push(e);
    }

    pub fn pin(&mut self, v: VarRef, value: f64) {
        self.add_eq(LinExpr::from(v), value);
    }

    /// `expr ≥ 0`.
    pub fn add_nonneg(&mut self, expr: LinExpr) {
        self.check_range(&expr);
        self.nonneg.push((expr, None));
    }

    pub fn add_nonneg_labeled(&mut self, expr: LinExpr, label: RowLabel) {
        self.check_range(&expr);
        self.nonneg.push((expr, Some(label)));
    }

    /// `u ≥ 0, v ≥ 0, u·v ≥ Σ w_k²`.
    pub fn add_rotated_quad(&mut self, u: LinExpr, v: LinExpr, w: Vec<LinExpr>) {
        self.check_range(&u);
        self.check_range(&v);
        w.iter().for_each(|e| self.check_range(e));
        self.rotated.push(RotatedQuad { u, v, w });
    }

    pub fn add_psd(&mut self, m: SymMatExpr) {
        m.entries.iter().for_each(|e| self.check_range(e));
        self.psd.push(m);
    }

    pub fn set_objective(&mut self, obj: LinExpr) {
        self.check_range(&obj);
        self.objective = obj;
    }

    pub fn objective(&self) -> &LinExpr {
        &self.objective
    }

    pub(crate) fn inconsistencies(&self) -> &[String] {
        &self.inconsistent
    }

    fn next_label_group(&mut self) -> usize {
        self.next_group += 1;
        self.next_group - 1
    }

    fn check_range(&self, e: &LinExpr) {
        if let Some(v) = e.max_var() {
            assert!(v < self.num_vars, "variable x{v} not allocated in this program");
        }
    }

    /// Largest constraint violation of `x`: equality residuals, negative parts
    /// of nonnegative rows, rotated-cone gaps and negative eigenvalues.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for e in &self.equalities {
            worst = worst.max(e.eval(x).abs());
        }
        for (e, _) in &self.nonneg {
            worst = worst.max(-e.eval(x));
        }
        for q in &self.rotated {
            let (u, v) = (q.u.eval(x), q.v.eval(x));
            let w2: f64 = q.w.iter().map(|e| e.eval(x).powi(2)).sum();
            let norm = ((u - v).powi(2) + 4.0 * w2).sqrt();
            worst = worst.max(0.5 * (norm - (u + v)));
        }
        for m in &self.psd {
            worst = worst.max(-crate::linalg::min_eigenvalue(&m.eval(x)));
        }
        worst
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
    TimeLimit,
}

/// Scaled residuals as reported by the backend, plus the absolute constraint
/// violation of the returned point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
    pub max_violation: f64,
}

#[derive(Clone, Debug)]
pub struct ConicSolution {
    pub status: SolveStatus,
    pub values: Vec<f64>,
    pub objective_value: f64,
    pub residuals: Residuals,
    /// Labeled nonnegativity rows blamed by the infeasibility certificate.
    pub violated_rows: Vec<RowLabel>,
    /// Backend status string, for diagnostics.
    pub raw_status: String,
    pub iterations: u32,
    pub solve_time: f64,
}

impl ConicSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn value(&self, v: VarRef) -> f64 {
        self.values[v.0]
    }

    pub fn eval(&self, e: &LinExpr) -> f64 {
        e.eval(&self.values)
    }
}

pub trait ConicSolver {
    fn solve(&self, prog: &ConicProgram) -> ConicSolution;
}

/// Solves with the default backend at tolerance `eps`.
pub fn solve(prog: &ConicProgram, eps: f64) -> ConicSolution {
    ClarabelSolver::with_tolerance(eps).solve(prog)
}

/// As [`solve`], giving up after `time_limit` seconds.
pub fn solve_within(prog: &ConicProgram, eps: f64, time_limit: Option<f64>) -> ConicSolution {
    ClarabelSolver {
        time_limit,
        ..ClarabelSolver::with_tolerance(eps)
    }
    .solve(prog)
}

/// `Q` diagonally dominant: `s_ij ≥ ±Q_ij`, `Q_ii ≥ Σ_{j≠i} s_ij`. Returns the
/// label group of the row constraints.
pub fn add_dd_membership(prog: &mut ConicProgram, q: &SymMatExpr) -> usize {
    let n = q.dim();
    let group = prog.next_label_group();
    let mut rows: Vec<LinExpr> = (0..n).map(|i| q.get(i, i).clone()).collect();
    for i in 0..n {
        for j in i + 1..n {
            let e = q.get(i, j).normalized();
            if e.terms.is_empty() {
                let a = e.constant.abs();
                rows[i].add_constant(-a);
                rows[j].add_constant(-a);
                continue;
            }
            let s = prog.new_var();
            prog.add_nonneg(LinExpr::from(s) - e.clone());
            prog.add_nonneg(LinExpr::from(s) + e);
            rows[i].add_term(s, -1.0);
            rows[j].add_term(s, -1.0);
        }
    }
    for (i, r) in rows.into_iter().enumerate() {
        prog.add_nonneg_labeled(r, RowLabel { group, row: i });
    }
    group
}

/// `Q` scaled diagonally dominant: a sum of psd matrices supported on 2×2
/// principal blocks, each block psd through a rotated quadratic cone.
pub fn add_sdd_membership(prog: &mut ConicProgram, q: &SymMatExpr) {
    let n = q.dim();
    let mut rows: Vec<LinExpr> = (0..n).map(|i| q.get(i, i).clone()).collect();
    for i in 0..n {
        for j in i + 1..n {
            let e = q.get(i, j).normalized();
            if e.terms.is_empty() && e.constant == 0.0 {
                continue;
            }
            let a = prog.new_var();
            let b = prog.new_var();
            rows[i].add_term(a, -1.0);
            rows[j].add_term(b, -1.0);
            prog.add_rotated_quad(a.into(), b.into(), vec![e]);
        }
    }
    // The leftover diagonal is itself a psd (diagonal) contribution.
    for r in rows {
        prog.add_nonneg(r);
    }
}

pub fn add_psd_membership(prog: &mut ConicProgram, q: &SymMatExpr) {
    match q.dim() {
        0 => {}
        1 => prog.add_nonneg(q.get(0, 0).clone()),
        _ => prog.add_psd(q.clone()),
    }
}

pub fn add_membership(prog: &mut ConicProgram, q: &SymMatExpr, cone: MatrixCone) {
    match cone {
        MatrixCone::Dd => {
            add_dd_membership(prog, q);
        }
        MatrixCone::Sdd => add_sdd_membership(prog, q),
        MatrixCone::Psd => add_psd_membership(prog, q),
    }
}

/// `t·I − A` in `cone`, so that `t ≥ λmax(A)`.
pub fn add_lambda_bound(prog: &mut ConicProgram, t: VarRef, a: &SymMatExpr, cone: MatrixCone) {
    let m = SymMatExpr::scaled_identity(a.dim(), t).sub(a);
    add_membership(prog, &m, cone);
}

#[cfg(test)]
mod tests;
