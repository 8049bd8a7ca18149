//! Experiment harness: decomposition sweeps over random instances and CCP
//! comparisons across decomposition strategies.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::ccp::{self, ball_constraint, random_instance, random_start, CcpConfig, ProblemInstance};
use crate::certify::ConvexityCone;
use crate::conic::MatrixCone;
use crate::dcd::{decompose, DecompositionRequest, Objective};
use crate::error::{Error, Result};

/// One cell of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRecord {
    pub seed: u64,
    pub n: usize,
    pub degree: u32,
    pub decomposition: String,
    pub cone: ConvexityCone,
    pub solve_time_ms: u64,
    pub objective_value: Option<f64>,
    pub ccp_final: Option<f64>,
    pub iterations: Option<usize>,
    pub error: Option<String>,
}

/// Means over the completed seeds of one `(n, decomposition, cone)` group.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AggregateRow {
    pub n: usize,
    pub decomposition: String,
    pub cone: ConvexityCone,
    pub completed: usize,
    pub mean_time_ms: f64,
    pub mean_objective: Option<f64>,
    pub mean_ccp_final: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchReport {
    pub experiment: String,
    pub records: Vec<BenchRecord>,
    pub aggregates: Vec<AggregateRow>,
    /// Instances where `sos <= sdsos <= dsos` failed (decomposition sweeps only).
    pub ordering_violations: Vec<String>,
}

const CSV_HEADER: &str = "experiment,seed,n,degree,decomposition,cone,solve_time_ms,objective_value,ccp_final,iterations,error";

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or(String::new(), |x| x.to_string())
}

impl BenchReport {
    fn new(experiment: &str, records: Vec<BenchRecord>) -> Self {
        let aggregates = aggregate(&records);
        BenchReport {
            experiment: experiment.into(),
            records,
            aggregates,
            ordering_violations: Vec::new(),
        }
    }

    /// Per-record CSV; times are integer milliseconds.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{CSV_HEADER}\n");
        for r in &self.records {
            let err = r.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                self.experiment,
                r.seed,
                r.n,
                r.degree,
                r.decomposition,
                r.cone,
                r.solve_time_ms,
                opt(&r.objective_value),
                opt(&r.ccp_final),
                opt(&r.iterations),
                err
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn mean(v: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, k) = v.fold((0.0, 0usize), |(s, k), x| (s + x, k + 1));
    (k > 0).then(|| s / k as f64)
}

/// Aggregates are recomputed from the records alone.
pub fn aggregate(records: &[BenchRecord]) -> Vec<AggregateRow> {
    let mut groups: BTreeMap<(usize, String, ConvexityCone), Vec<&BenchRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.n, r.decomposition.clone(), r.cone)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((n, decomposition, cone), rs)| {
            let done: Vec<&&BenchRecord> = rs.iter().filter(|r| r.error.is_none()).collect();
            AggregateRow {
                n,
                decomposition,
                cone,
                completed: done.len(),
                mean_time_ms: mean(done.iter().map(|r| r.solve_time_ms as f64)).unwrap_or(0.0),
                mean_objective: mean(done.iter().filter_map(|r| r.objective_value)),
                mean_ccp_final: mean(done.iter().filter_map(|r| r.ccp_final)),
            }
        })
        .collect()
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))
}

/// `obj_SOS <= obj_SDSOS <= obj_DSOS` within `1e-5` relative.
pub fn ordered_within(lower: f64, upper: f64) -> bool {
    lower <= upper + 1e-5 * upper.abs().max(lower.abs()).max(1.0)
}

/// Solves the undominated (sphere-trace) decomposition for every
/// `(n, cone, seed)` on `random_instance(n, degree, seed)`. Cells run on a
/// pool of `threads` workers; per-cell failures are recorded.
pub fn bench_decomp(
    ns: &[usize],
    degree: u32,
    cones: &[ConvexityCone],
    seeds: &[u64],
    threads: usize,
) -> Result<BenchReport> {
    if degree < 2 || degree % 2 == 1 {
        return Err(Error::InvalidInput(format!("degree must be even and >= 2, got {degree}")));
    }
    let cells: Vec<(usize, u64, ConvexityCone)> = ns
        .iter()
        .flat_map(|&n| seeds.iter().flat_map(move |&s| cones.iter().map(move |&c| (n, s, c))))
        .collect();
    let records: Vec<BenchRecord> = pool(threads)?.install(|| {
        cells
            .par_iter()
            .map(|&(n, seed, cone)| {
                let f = random_instance(n, degree, seed);
                let req = DecompositionRequest::new(Objective::UndominatedSphereTrace, cone);
                let t0 = Instant::now();
                let res = decompose(&f, &req);
                let ms = t0.elapsed().as_millis() as u64;
                let (objective_value, error) = match res {
                    Ok(d) => (Some(d.objective_value), None),
                    Err(e) => (None, Some(e.to_string())),
                };
                BenchRecord {
                    seed,
                    n,
                    degree,
                    decomposition: "undom".into(),
                    cone,
                    solve_time_ms: ms,
                    objective_value,
                    ccp_final: None,
                    iterations: None,
                    error,
                }
            })
            .collect()
    });
    let mut report = BenchReport::new("bench-decomp", records);
    report.ordering_violations = ordering_violations(&report.records);
    Ok(report)
}

fn ordering_violations(records: &[BenchRecord]) -> Vec<String> {
    let mut by_instance: BTreeMap<(usize, u64), BTreeMap<ConvexityCone, f64>> = BTreeMap::new();
    for r in records {
        if let Some(v) = r.objective_value {
            by_instance.entry((r.n, r.seed)).or_default().insert(r.cone, v);
        }
    }
    let mut out = Vec::new();
    for ((n, seed), vals) in by_instance {
        let chain: Vec<(ConvexityCone, f64)> = [ConvexityCone::Sos, ConvexityCone::Sdsos, ConvexityCone::Dsos]
            .into_iter()
            .filter_map(|c| vals.get(&c).map(|&v| (c, v)))
            .collect();
        for w in chain.windows(2) {
            if !ordered_within(w[0].1, w[1].1) {
                out.push(format!("n={n} seed={seed}: {} {} > {} {}", w[0].0, w[0].1, w[1].0, w[1].1));
            }
        }
    }
    out
}

/// Ball radius for a CCP seed: a uniform integer in `[lo, hi]` (inclusive).
pub fn seeded_radius(seed: u64, lo: u32, hi: u32) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_ba11);
    rng.random_range(lo..=hi) as f64
}

#[derive(Clone, Debug, PartialEq)]
pub struct CcpBenchConfig {
    pub n: usize,
    pub degree: u32,
    pub seeds: Vec<u64>,
    pub cone: ConvexityCone,
    /// Per-arm CCP budget in seconds.
    pub budget: f64,
    /// Fixed radius, or `None` for a seeded integer in `[20, 50]`.
    pub radius: Option<f64>,
    pub max_iterations: usize,
    pub threads: usize,
}

/// Minimizes `random_instance(n, degree, seed)` over a ball with CCP under the
/// four decompositions (feasibility, `λmax` at `x₀`, `λmax` on the ball,
/// undominated) and with the multi-decomposition variant, all from the same
/// Gaussian `x₀`.
pub fn bench_ccp(cfg: &CcpBenchConfig) -> Result<BenchReport> {
    let arms = ["feas", "lmax-point", "lmax-ball", "undom", "multi-ccp"];
    let cells: Vec<(u64, &str)> = cfg
        .seeds
        .iter()
        .flat_map(|&s| arms.iter().map(move |&a| (s, a)))
        .collect();
    let records: Vec<BenchRecord> = pool(cfg.threads)?.install(|| {
        cells
            .par_iter()
            .map(|&(seed, arm)| run_arm(cfg, seed, arm))
            .collect()
    });
    Ok(BenchReport::new("bench-ccp", records))
}

fn run_arm(cfg: &CcpBenchConfig, seed: u64, arm: &str) -> BenchRecord {
    let radius = cfg.radius.unwrap_or_else(|| seeded_radius(seed, 20, 50));
    let f0 = random_instance(cfg.n, cfg.degree, seed);
    let x0 = random_start(cfg.n, seed, Some(radius));
    let inst = ProblemInstance {
        n: cfg.n,
        f0,
        constraints: vec![ball_constraint(cfg.n, radius)],
    };
    let objective = match arm {
        "lmax-point" => Objective::LambdaMaxAtPoint { point: x0.clone() },
        "lmax-ball" => Objective::LambdaMaxOnBall { radius },
        "undom" => Objective::UndominatedSphereTrace,
        _ => Objective::Feasibility,
    };
    let mut req = DecompositionRequest::new(objective, cfg.cone);
    if arm == "multi-ccp" {
        req = req.with_lambda_bound_cone(if cfg.cone == ConvexityCone::Sdsos { MatrixCone::Sdd } else { MatrixCone::Dd });
    }
    let ccfg = CcpConfig {
        max_iterations: cfg.max_iterations,
        time_budget: cfg.budget,
        ..CcpConfig::new(req)
    };
    let t0 = Instant::now();
    let res = if arm == "multi-ccp" {
        ccp::multi_decomp_ccp(&inst, &ccfg, &x0)
    } else {
        ccp::ccp(&inst, &ccfg, &x0)
    };
    let ms = t0.elapsed().as_millis() as u64;
    let (ccp_final, iterations, error) = match res {
        Ok(tr) if tr.max_ascent() > 10.0 * ccfg.subroutine_tolerance * (1.0 + tr.final_objective().abs()) => (
            Some(tr.final_objective()),
            Some(tr.iterations()),
            Some(format!("trace not monotone (ascent {:e})", tr.max_ascent())),
        ),
        Ok(tr) => (Some(tr.final_objective()), Some(tr.iterations()), None),
        Err(e) => (None, None, Some(e.to_string())),
    };
    BenchRecord {
        seed,
        n: cfg.n,
        degree: cfg.degree,
        decomposition: arm.into(),
        cone: cfg.cone,
        solve_time_ms: ms,
        objective_value: None,
        ccp_final,
        iterations,
        error,
    }
}
