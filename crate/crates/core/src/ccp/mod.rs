//! The convex-concave procedure for `min f₀(x) s.t. f_i(x) <= 0`.
//!
//! Every `f_i = g_i − h_i` is replaced by the convex majorant obtained by
//! linearizing `h_i` at the current iterate, and the resulting convex problem
//! is solved. [`ccp`] decomposes once up front; [`multi_decomp_ccp`]
//! re-decomposes at every iterate, minimizing a dd/sdd bound on `λmax` of the
//! concave part's Hessian.

mod instance;
mod subroutine;

use std::time::{Duration, Instant};

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::dcd::{decompose, Decomposition, DecompositionRequest, Objective};
use crate::error::{Error, Result};
use crate::poly::{Coefficient, Polynomial, RatPoly};

pub use self::instance::{ball_constraint, random_instance, random_start};
pub use self::subroutine::{convex_subroutine, sos_lower_bound, SubproblemSolution};

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemInstance {
    pub n: usize,
    pub f0: RatPoly,
    /// Each `f_i` means `f_i(x) <= 0`.
    pub constraints: Vec<RatPoly>,
}

impl ProblemInstance {
    pub fn new(f0: RatPoly, constraints: Vec<RatPoly>) -> Result<Self> {
        let n = f0.nvars();
        if let Some(c) = constraints.iter().find(|c| c.nvars() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: c.nvars(),
            });
        }
        Ok(ProblemInstance { n, f0, constraints })
    }

    pub fn unconstrained(f0: RatPoly) -> Self {
        ProblemInstance {
            n: f0.nvars(),
            f0,
            constraints: Vec::new(),
        }
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.f0.eval_f64(x).unwrap_or(f64::NAN)
    }

    /// `max_i f_i(x)`, or `-∞` without constraints.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.constraints
            .iter()
            .map(|c| c.eval_f64(x).unwrap_or(f64::NAN))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CcpConfig {
    pub max_iterations: usize,
    /// Seconds.
    pub time_budget: f64,
    pub objective_tolerance: f64,
    pub step_tolerance: f64,
    /// Decomposition for [`ccp`]; for [`multi_decomp_ccp`] only its cone and
    /// `lambda_bound_cone` are used.
    pub decomposition: DecompositionRequest,
    pub subroutine_tolerance: f64,
}

impl CcpConfig {
    pub fn new(decomposition: DecompositionRequest) -> Self {
        CcpConfig {
            max_iterations: 500,
            time_budget: 240.0,
            objective_tolerance: 1e-6,
            step_tolerance: 1e-8,
            decomposition,
            subroutine_tolerance: 1e-7,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 && !(self.time_budget > 0.0) {
            return Err(Error::InvalidInput("no stopping criterion active".into()));
        }
        if !(self.subroutine_tolerance > 0.0) {
            return Err(Error::InvalidInput("subroutine tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    ObjectiveTolerance,
    StepTolerance,
    MaxIterations,
    TimeBudget,
}

/// One CCP iterate. Iterate 0 is the starting point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CcpIterate {
    pub k: usize,
    pub x: Vec<f64>,
    pub objective: f64,
    /// Optimal value of the convex subproblem that produced `x`.
    pub gamma: Option<f64>,
    pub max_violation: f64,
    pub wall_ms: u64,
    pub decomposition: String,
    /// Bound values `t` of the per-iterate decompositions (multi-decomposition only).
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub lambda_bounds: Vec<f64>,
    /// Concave parts `h_i` used from this iterate on (multi-decomposition only).
    #[serde(skip)]
    pub h: Vec<RatPoly>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CcpTrace {
    pub iterates: Vec<CcpIterate>,
    pub stop_reason: StopReason,
}

impl CcpTrace {
    pub fn final_objective(&self) -> f64 {
        self.iterates.last().map_or(f64::NAN, |it| it.objective)
    }

    /// Number of subproblems solved.
    pub fn iterations(&self) -> usize {
        self.iterates.len().saturating_sub(1)
    }

    /// One JSON object per iterate.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for it in &self.iterates {
            out.push_str(&serde_json::to_string(it).expect("iterate serializes"));
            out.push('\n');
        }
        out
    }

    /// Largest increase `f₀(x_{k+1}) − f₀(x_k)` along the trace (0 when monotone).
    pub fn max_ascent(&self) -> f64 {
        self.iterates
            .windows(2)
            .map(|w| w[1].objective - w[0].objective)
            .fold(0.0, f64::max)
    }
}

/// `g(x) − h(x_k) − ∇h(x_k)ᵀ(x − x_k)`, computed exactly at the rational
/// value of `x_k`. It majorizes `g − h` when `h` is convex and agrees with it
/// at `x_k`.
pub fn convexify<C: Coefficient>(g: &Polynomial<C>, h: &Polynomial<C>, x_k: &[f64]) -> Result<RatPoly> {
    let g = g.to_rational_poly();
    let h = h.to_rational_poly();
    let n = g.nvars();
    if h.nvars() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: h.nvars(),
        });
    }
    if x_k.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: x_k.len(),
        });
    }
    let xr: Vec<BigRational> = x_k
        .iter()
        .map(|&v| {
            BigRational::from_float(v).ok_or_else(|| Error::InvalidInput("non-finite point".into()))
        })
        .collect::<Result<_>>()?;
    let mut lin = RatPoly::constant(n, h.eval(&xr)?);
    for (i, d) in h.gradient().iter().enumerate() {
        let gi = d.eval(&xr)?;
        lin = &lin + &(&RatPoly::var(n, i) - &RatPoly::constant(n, xr[i].clone())).scale(&gi);
    }
    Ok((&g - &lin).with_ambient_degree(g.ambient_degree()))
}

fn check_start(instance: &ProblemInstance, x0: &[f64], tol: f64) -> Result<()> {
    if x0.len() != instance.n {
        return Err(Error::DimensionMismatch {
            expected: instance.n,
            found: x0.len(),
        });
    }
    let v = instance.max_violation(x0);
    if v > tol {
        return Err(Error::InvalidInput(format!("starting point infeasible (max constraint {v:e})")));
    }
    Ok(())
}

struct Loop<'a> {
    instance: &'a ProblemInstance,
    config: &'a CcpConfig,
    started: Instant,
    iterates: Vec<CcpIterate>,
}

impl<'a> Loop<'a> {
    fn new(instance: &'a ProblemInstance, config: &'a CcpConfig, x0: &[f64], label: String) -> Self {
        let it = CcpIterate {
            k: 0,
            x: x0.to_vec(),
            objective: instance.objective(x0),
            gamma: None,
            max_violation: instance.max_violation(x0),
            wall_ms: 0,
            decomposition: label,
            lambda_bounds: Vec::new(),
            h: Vec::new(),
        };
        Loop {
            instance,
            config,
            started: Instant::now(),
            iterates: vec![it],
        }
    }

    fn budget_left(&self) -> bool {
        self.started.elapsed() < Duration::from_secs_f64(self.config.time_budget.max(0.0))
    }

    fn current(&self) -> &CcpIterate {
        self.iterates.last().expect("nonempty")
    }

    /// Solves the convex model at the current iterate and records the step.
    /// Returns a stop reason if the step triggers one.
    fn step(&mut self, parts: &[(RatPoly, RatPoly)], label: String) -> Result<Option<StopReason>> {
        let t0 = Instant::now();
        let x = self.current().x.clone();
        let mut models = Vec::with_capacity(parts.len());
        for (g, h) in parts {
            models.push(convexify(g, h, &x)?.to_f64());
        }
        let sol = convex_subroutine(&models[0], &models[1..], &x, self.config.subroutine_tolerance)?;
        let prev = self.current().objective;
        let obj = self.instance.objective(&sol.x_next);
        let step: f64 = sol.x_next.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        self.iterates.push(CcpIterate {
            k: self.iterates.len(),
            max_violation: self.instance.max_violation(&sol.x_next),
            x: sol.x_next,
            objective: obj,
            gamma: Some(sol.gamma),
            wall_ms: t0.elapsed().as_millis() as u64,
            decomposition: label,
            lambda_bounds: Vec::new(),
            h: Vec::new(),
        });
        Ok(if prev - obj < self.config.objective_tolerance {
            Some(StopReason::ObjectiveTolerance)
        } else if step < self.config.step_tolerance {
            Some(StopReason::StepTolerance)
        } else {
            None
        })
    }

    fn run(mut self, mut parts_at: impl FnMut(&mut Self) -> Result<(Vec<(RatPoly, RatPoly)>, String)>) -> Result<CcpTrace> {
        let stop_reason = loop {
            if self.iterations() >= self.config.max_iterations {
                break StopReason::MaxIterations;
            }
            if !self.budget_left() {
                break StopReason::TimeBudget;
            }
            let (parts, label) = parts_at(&mut self)?;
            if let Some(r) = self.step(&parts, label)? {
                break r;
            }
        };
        Ok(CcpTrace {
            iterates: self.iterates,
            stop_reason,
        })
    }

    fn iterations(&self) -> usize {
        self.iterates.len() - 1
    }

    fn functions(&self) -> impl Iterator<Item = &'a RatPoly> {
        std::iter::once(&self.instance.f0).chain(&self.instance.constraints)
    }
}

fn request_label(req: &DecompositionRequest) -> String {
    format!("{}/{}", req.objective.name(), req.cone)
}

/// Plain CCP: decompose every `f_i` once with `config.decomposition`, then
/// iterate the convexified subproblem from the feasible point `x0`.
/// Point objectives without a matching point are evaluated at `x0`.
pub fn ccp(instance: &ProblemInstance, config: &CcpConfig, x0: &[f64]) -> Result<CcpTrace> {
    config.validate()?;
    check_start(instance, x0, config.subroutine_tolerance)?;
    let mut req = config.decomposition.clone();
    match &mut req.objective {
        Objective::TraceAtPoint { point } | Objective::LambdaMaxAtPoint { point } if point.is_empty() => {
            *point = x0.to_vec();
        }
        _ => {}
    }
    let label = request_label(&req);
    let mut parts = Vec::new();
    for f in std::iter::once(&instance.f0).chain(&instance.constraints) {
        let d: Decomposition = decompose(f, &req)?;
        parts.push((d.g, d.h));
    }
    let lp = Loop::new(instance, config, x0, label.clone());
    lp.run(|_| Ok((parts.clone(), label.clone())))
}

/// Multi-decomposition CCP: before every subproblem, re-decompose each `f_i` to minimize
/// a `lambda_bound_cone` bound on `λmax(H_h(x_k))`.
///
/// When the solver fails on a re-decomposition after the first iterate, the
/// last decomposition of that function is reused (it is still a valid dcd);
/// its bound is recorded as NaN and the label notes the iterate it came from.
pub fn multi_decomp_ccp(instance: &ProblemInstance, config: &CcpConfig, x0: &[f64]) -> Result<CcpTrace> {
    config.validate()?;
    check_start(instance, x0, config.subroutine_tolerance)?;
    let base = &config.decomposition;
    let lp = Loop::new(instance, config, x0, "initial".into());
    let mut last: Vec<Option<(usize, RatPoly, RatPoly)>> = vec![None; 1 + instance.constraints.len()];
    lp.run(|lp| {
        let k = lp.iterations();
        let x = lp.current().x.clone();
        let req = DecompositionRequest::new(Objective::LambdaMaxAtPoint { point: x.clone() }, base.cone)
            .with_lambda_bound_cone(base.lambda_bound_cone)
            .with_tolerance(base.solver_tolerance);
        let mut label = format!("lmax-point/{}/{}@{k}", req.cone, req.lambda_bound_cone);
        let mut parts = Vec::new();
        let mut bounds = Vec::new();
        for (i, f) in lp.functions().enumerate() {
            match (decompose(f, &req), &last[i]) {
                (Ok(d), _) => {
                    bounds.push(d.objective_value);
                    last[i] = Some((k, d.g.clone(), d.h.clone()));
                    parts.push((d.g, d.h));
                }
                (Err(Error::Solver { .. }), Some((j, g, h))) => {
                    bounds.push(f64::NAN);
                    label.push_str(&format!(";f{i}@{j}"));
                    parts.push((g.clone(), h.clone()));
                }
                (Err(e), _) => {
                    return Err(Error::Subproblem(format!("decomposition of f{i} at iterate {k} failed: {e}")));
                }
            }
        }
        let cur = lp.iterates.last_mut().expect("nonempty");
        cur.lambda_bounds = bounds;
        cur.h = parts.iter().map(|(_, h)| h.clone()).collect();
        Ok((parts, label))
    })
}

#[cfg(test)]
mod tests;
