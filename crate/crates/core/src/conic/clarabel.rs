use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};

use super::{ConicProgram, ConicSolution, ConicSolver, LinExpr, Residuals, RowLabel, SolveStatus};

/// Interior-point backend built on Clarabel.
#[derive(Clone, Debug)]
pub struct ClarabelSolver {
    pub tolerance: f64,
    pub max_iter: u32,
    /// Seconds; `None` means unlimited.
    pub time_limit: Option<f64>,
    pub verbose: bool,
}

impl Default for ClarabelSolver {
    fn default() -> Self {
        Self::with_tolerance(super::default_tolerance())
    }
}

impl ClarabelSolver {
    pub fn with_tolerance(tolerance: f64) -> Self {
        ClarabelSolver {
            tolerance,
            max_iter: 400,
            time_limit: None,
            verbose: std::env::var_os("DCPOLY_SOLVER_VERBOSE").is_some(),
        }
    }
}

/// Sparse rows `s = b - A x` collected cone by cone.
struct Rows {
    ai: Vec<usize>,
    aj: Vec<usize>,
    av: Vec<f64>,
    b: Vec<f64>,
}

impl Rows {
    /// Appends the row `s = e(x)`, i.e. `A = -coeffs`, `b = constant`.
    fn push(&mut self, e: &LinExpr, scale: f64) {
        let r = self.b.len();
        for &(v, c) in e.raw_terms() {
            self.ai.push(r);
            self.aj.push(v);
            self.av.push(-c * scale);
        }
        self.b.push(e.constant_part() * scale);
    }

    fn push_combo(&mut self, parts: &[(&LinExpr, f64)]) {
        let mut e = LinExpr::zero();
        for (p, k) in parts {
            e += &p.scaled(*k);
        }
        self.push(&e, 1.0);
    }
}

impl ConicSolver for ClarabelSolver {
    fn solve(&self, prog: &ConicProgram) -> ConicSolution {
        let n = prog.num_vars();
        if !prog.inconsistencies().is_empty() {
            return trivial(prog, SolveStatus::Infeasible, prog.inconsistencies().join("; "));
        }
        if n == 0 {
            let status = if prog.max_violation(&[]) <= self.tolerance {
                SolveStatus::Optimal
            } else {
                SolveStatus::Infeasible
            };
            return trivial(prog, status, "no variables".into());
        }

        let mut rows = Rows {
            ai: Vec::new(),
            aj: Vec::new(),
            av: Vec::new(),
            b: Vec::new(),
        };
        let mut cones = Vec::new();
        for e in &prog.equalities {
            rows.push(e, 1.0);
        }
        if !prog.equalities.is_empty() {
            cones.push(SupportedConeT::ZeroConeT(prog.equalities.len()));
        }
        let nonneg_start = rows.b.len();
        for (e, _) in &prog.nonneg {
            rows.push(e, 1.0);
        }
        if !prog.nonneg.is_empty() {
            cones.push(SupportedConeT::NonnegativeConeT(prog.nonneg.len()));
        }
        // u v ≥ |w|²  ⇔  |(u − v, 2w)| ≤ u + v.
        for q in &prog.rotated {
            rows.push_combo(&[(&q.u, 1.0), (&q.v, 1.0)]);
            rows.push_combo(&[(&q.u, 1.0), (&q.v, -1.0)]);
            for w in &q.w {
                rows.push(w, 2.0);
            }
            cones.push(SupportedConeT::SecondOrderConeT(2 + q.w.len()));
        }
        // Upper triangle by columns, off-diagonals scaled by √2.
        for m in &prog.psd {
            let k = m.dim();
            for j in 0..k {
                for i in 0..=j {
                    let s = if i == j { 1.0 } else { std::f64::consts::SQRT_2 };
                    rows.push(m.get(i, j), s);
                }
            }
            cones.push(SupportedConeT::PSDTriangleConeT(k));
        }

        let m = rows.b.len();
        let a = CscMatrix::new_from_triplets(m, n, rows.ai, rows.aj, rows.av);
        let p = CscMatrix::<f64>::zeros((n, n));
        let mut q = vec![0.0; n];
        for &(v, c) in prog.objective().raw_terms() {
            q[v] += c;
        }

        let mut builder = DefaultSettingsBuilder::default();
        builder
            .verbose(self.verbose)
            .max_iter(self.max_iter)
            .tol_feas(self.tolerance)
            .tol_gap_abs(self.tolerance)
            .tol_gap_rel(self.tolerance)
            .direct_solve_method("faer".into());
        if let Some(t) = self.time_limit {
            builder.time_limit(t);
        }
        let settings = builder.build().expect("valid solver settings");

        let mut solver = match DefaultSolver::new(&p, &q, &a, &rows.b, &cones, settings) {
            Ok(s) => s,
            Err(e) => {
                return trivial(prog, SolveStatus::NumericalFailure, format!("setup failed: {e}"))
            }
        };
        solver.solve();
        let sol = &solver.solution;

        let status = match sol.status {
            SolverStatus::Solved => SolveStatus::Optimal,
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
                SolveStatus::Infeasible
            }
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
                SolveStatus::Unbounded
            }
            SolverStatus::MaxTime => SolveStatus::TimeLimit,
            _ => SolveStatus::NumericalFailure,
        };

        let violated_rows = if status == SolveStatus::Infeasible {
            blame_rows(prog, &sol.z[nonneg_start..nonneg_start + prog.nonneg.len()])
        } else {
            Vec::new()
        };
        let values = sol.x.clone();
        let max_violation = prog.max_violation(&values);
        let gap = (sol.obj_val - sol.obj_val_dual).abs();
        ConicSolution {
            status,
            objective_value: prog.objective().eval(&values),
            values,
            residuals: Residuals {
                primal: sol.r_prim,
                dual: sol.r_dual,
                gap,
                max_violation,
            },
            violated_rows,
            raw_status: format!("{:?}", sol.status),
            iterations: sol.iterations,
            solve_time: sol.solve_time,
        }
    }
}

/// Labeled rows carrying weight in the Farkas certificate `z`.
fn blame_rows(prog: &ConicProgram, z: &[f64]) -> Vec<RowLabel> {
    let labeled: Vec<(RowLabel, f64)> = prog
        .nonneg
        .iter()
        .zip(z)
        .filter_map(|((_, l), &zi)| l.map(|l| (l, zi)))
        .collect();
    let zmax = labeled.iter().map(|&(_, zi)| zi).fold(0.0f64, f64::max);
    if labeled.is_empty() {
        return Vec::new();
    }
    let mut out: Vec<RowLabel> = labeled
        .iter()
        .filter(|&&(_, zi)| zmax > 0.0 && zi > 1e-6 * zmax)
        .map(|&(l, _)| l)
        .collect();
    if out.is_empty() {
        let best = labeled
            .iter()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|&(l, _)| l)
            .unwrap();
        out.push(best);
    }
    out
}

fn trivial(prog: &ConicProgram, status: SolveStatus, why: String) -> ConicSolution {
    let values = vec![0.0; prog.num_vars()];
    ConicSolution {
        status,
        objective_value: prog.objective().eval(&values),
        residuals: Residuals {
            max_violation: prog.max_violation(&values),
            ..Residuals::default()
        },
        values,
        violated_rows: Vec::new(),
        raw_status: why,
        iterations: 0,
        solve_time: 0.0,
    }
}
