use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::linalg;

const EPS: f64 = 1e-8;

fn pinned(prog: &mut ConicProgram, m: &DMatrix<f64>) -> SymMatVar {
    let q = prog.new_sym_mat(m.nrows());
    for i in 0..m.nrows() {
        for j in i..m.nrows() {
            prog.pin(q.get(i, j), m[(i, j)]);
        }
    }
    q
}

fn feasible_under(m: &DMatrix<f64>, cone: MatrixCone) -> bool {
    let mut prog = ConicProgram::new();
    let q = pinned(&mut prog, m);
    add_membership(&mut prog, &q.to_expr(), cone);
    let sol = solve(&prog, EPS);
    assert!(
        matches!(sol.status, SolveStatus::Optimal | SolveStatus::Infeasible),
        "unexpected status {:?}",
        sol.raw_status
    );
    sol.is_optimal()
}

fn min_lambda_bound(a: &DMatrix<f64>, cone: MatrixCone) -> f64 {
    let mut prog = ConicProgram::new();
    let am = pinned(&mut prog, a);
    let t = prog.new_var();
    add_lambda_bound(&mut prog, t, &am.to_expr(), cone);
    prog.set_objective(t.into());
    let sol = solve(&prog, EPS);
    assert!(sol.is_optimal(), "{}", sol.raw_status);
    sol.objective_value
}

fn m2(a: f64, b: f64, c: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[a, b, b, c])
}

#[test]
fn min_x_nonneg() {
    let mut prog = ConicProgram::new();
    let x = prog.new_var();
    prog.add_nonneg(x.into());
    prog.set_objective(x.into());
    let sol = solve(&prog, EPS);
    assert!(sol.is_optimal());
    assert!(sol.objective_value.abs() < 1e-7);
}

#[test]
fn min_t_two_by_two_psd() {
    let mut prog = ConicProgram::new();
    let t = prog.new_var();
    let mut m = SymMatExpr::scaled_identity(2, t);
    *m.get_mut(0, 1) = LinExpr::constant(1.0);
    prog.add_psd(m);
    prog.set_objective(t.into());
    let sol = solve(&prog, EPS);
    assert!(sol.is_optimal());
    assert!((sol.objective_value - 1.0).abs() < 1e-6);
}

#[test]
fn lambda_bound_of_quadratic_example() {
    let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.0, 2.0, 8.0]));
    assert!((min_lambda_bound(&a, MatrixCone::Psd) - 8.0).abs() < 1e-6);
}

#[test]
fn dd_membership_examples() {
    assert!(feasible_under(&DMatrix::identity(2, 2), MatrixCone::Dd));
    assert!(!feasible_under(&m2(1.0, 2.0, 1.0), MatrixCone::Dd));
    assert!(feasible_under(&m2(2.0, 1.0, 2.0), MatrixCone::Dd));
}

#[test]
fn sdd_membership_examples() {
    assert!(!feasible_under(&m2(1.0, 2.0, 1.0), MatrixCone::Sdd));
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.0, 3.0, 1.5]));
    assert!(feasible_under(&d, MatrixCone::Sdd));
    assert!(feasible_under(&m2(4.0, 2.0, 4.0), MatrixCone::Sdd));
    // sdd but not dd
    assert!(feasible_under(&m2(1.0, 2.0, 5.0), MatrixCone::Sdd));
    assert!(!feasible_under(&m2(1.0, 2.0, 5.0), MatrixCone::Dd));
}

#[test]
fn lambda_bound_examples() {
    let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 5.0]));
    assert!((min_lambda_bound(&a, MatrixCone::Psd) - 5.0).abs() < 1e-6);
    assert!((min_lambda_bound(&m2(0.0, 1.0, 0.0), MatrixCone::Dd) - 1.0).abs() < 1e-6);
    assert!((min_lambda_bound(&m2(2.0, -3.0, 2.0), MatrixCone::Dd) - 5.0).abs() < 1e-6);
}

fn random_sym(rng: &mut ChaCha8Rng, n: usize, shift: f64) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = rng.random_range(-1.0..1.0);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        m[(i, i)] += shift;
    }
    m
}

#[test]
fn cone_chain_on_random_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut counts = [0usize; 3];
    for _ in 0..200 {
        let shift = rng.random_range(-0.5..4.5);
        let m = random_sym(&mut rng, 5, shift);
        let dd = feasible_under(&m, MatrixCone::Dd);
        let sdd = feasible_under(&m, MatrixCone::Sdd);
        let psd = feasible_under(&m, MatrixCone::Psd);
        assert!(!dd || sdd, "dd but not sdd: {m}");
        assert!(!sdd || psd, "sdd but not psd: {m}");
        // Oracles away from the boundary.
        if linalg::dd_margin(&m).abs() > 1e-6 {
            assert_eq!(dd, linalg::dd_margin(&m) > 0.0);
        }
        if linalg::min_eigenvalue(&m).abs() > 1e-6 {
            assert_eq!(psd, linalg::min_eigenvalue(&m) > 0.0);
        }
        counts[0] += dd as usize;
        counts[1] += sdd as usize;
        counts[2] += psd as usize;
    }
    // The ensemble must exercise every level, including strict gaps.
    assert!(counts[0] > 0 && counts[0] < counts[1] && counts[1] < counts[2] && counts[2] < 200);
}

#[test]
fn lambda_bound_ordering() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..30 {
        let a = random_sym(&mut rng, 5, 0.0);
        let tp = min_lambda_bound(&a, MatrixCone::Psd);
        let ts = min_lambda_bound(&a, MatrixCone::Sdd);
        let td = min_lambda_bound(&a, MatrixCone::Dd);
        assert!(tp <= ts + 1e-6 && ts <= td + 1e-6, "{tp} {ts} {td}");
        assert!((tp - linalg::max_eigenvalue(&a)).abs() < 1e-6);
        // dd bound is the largest Gershgorin right end.
        let gersh = (0..5)
            .map(|i| a[(i, i)] + (0..5).filter(|&j| j != i).map(|j| a[(i, j)].abs()).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((td - gersh).abs() < 1e-6);
    }
}

#[test]
fn repeated_solves_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a = random_sym(&mut rng, 5, 0.0);
    for cone in [MatrixCone::Dd, MatrixCone::Sdd, MatrixCone::Psd] {
        let x = min_lambda_bound(&a, cone);
        let y = min_lambda_bound(&a, cone);
        assert!((x - y).abs() <= 2.0 * EPS);
    }
}

#[test]
fn infeasible_dd_reports_rows() {
    let mut prog = ConicProgram::new();
    let q = pinned(&mut prog, &m2(1.0, 2.0, 1.0));
    let group = add_dd_membership(&mut prog, &q.to_expr());
    let sol = solve(&prog, EPS);
    assert_eq!(sol.status, SolveStatus::Infeasible);
    assert!(!sol.violated_rows.is_empty());
    assert!(sol.violated_rows.iter().all(|r| r.group == group && r.row < 2));
}

#[test]
fn optimal_solutions_respect_tolerance() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = random_sym(&mut rng, 4, 0.0);
    for cone in [MatrixCone::Dd, MatrixCone::Sdd, MatrixCone::Psd] {
        let mut prog = ConicProgram::new();
        let am = pinned(&mut prog, &a);
        let t = prog.new_var();
        add_lambda_bound(&mut prog, t, &am.to_expr(), cone);
        prog.set_objective(t.into());
        let sol = solve(&prog, EPS);
        assert!(sol.is_optimal());
        assert!(sol.residuals.primal <= EPS && sol.residuals.dual <= EPS);
        assert!(sol.residuals.max_violation <= 1e-6);
    }
}

#[test]
fn unbounded_and_inconsistent_programs() {
    let mut prog = ConicProgram::new();
    let x = prog.new_var();
    prog.set_objective(x.into());
    assert_eq!(solve(&prog, EPS).status, SolveStatus::Unbounded);

    let mut prog = ConicProgram::new();
    prog.add_eq(LinExpr::constant(1.0), 0.0);
    assert_eq!(solve(&prog, EPS).status, SolveStatus::Infeasible);
}

#[test]
fn linexpr_normalizes() {
    let mut p = ConicProgram::new();
    let x = p.new_var();
    let y = p.new_var();
    let e = LinExpr::from(x) + y - x + 2.0;
    let n = e.normalized();
    assert_eq!(n.raw_terms(), &[(1, 1.0)]);
    assert_eq!(n.constant_part(), 2.0);
    assert!((LinExpr::from(x) - x).is_constant());
}

#[test]
fn cbf_dump_lists_all_blocks() {
    let mut prog = ConicProgram::new();
    let q = prog.new_sym_mat(3);
    add_dd_membership(&mut prog, &q.to_expr());
    add_sdd_membership(&mut prog, &q.to_expr());
    add_psd_membership(&mut prog, &q.to_expr());
    prog.pin(q.get(0, 1), 0.5);
    prog.set_objective(LinExpr::from(q.get(0, 0)) + 1.0);
    let text = write_cbf(&prog);
    for key in ["VER", "OBJSENSE", "VAR", "CON", "L=", "L+", "QR", "PSDCON", "HCOORD", "ACOORD", "BCOORD", "OBJACOORD", "OBJBCOORD"] {
        assert!(text.contains(key), "missing {key}");
    }
    // Row count in the CON header matches the scalar rows.
    let rows = prog.num_equalities() + prog.nonneg.len() + prog.rotated.iter().map(|q| 2 + q.w.len()).sum::<usize>();
    assert!(text.contains(&format!("CON\n{rows} ")));
}
