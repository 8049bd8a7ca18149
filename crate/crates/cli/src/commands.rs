use std::io::Read;

use dcpoly::bench::{self, CcpBenchConfig};
use dcpoly::ccp::{self, ball_constraint, random_instance, random_start, CcpConfig, ProblemInstance};
use dcpoly::certify::{check_convexity, scan_csv, scan_parametric_family, ConvexityCone, GridRange};
use dcpoly::conic::MatrixCone;
use dcpoly::dcd::{decompose, interior_full, interior_homogeneous, DecompositionRequest, Objective};
use dcpoly::poly::{AnyPolynomial, Exponent, RatPoly};
use dcpoly::sphere::{monomial_sphere_integral, normalized_moment, sphere_area};
use dcpoly::Error;
use num_traits::ToPrimitive;
use serde_json::json;

use crate::*;

pub struct CliError {
    kind: &'static str,
    message: String,
    code: u8,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            kind: "usage",
            message: message.into(),
            code: 2,
        }
    }

    fn parse(message: impl Into<String>) -> Self {
        CliError {
            kind: "parse",
            message: message.into(),
            code: 2,
        }
    }

    fn io(message: impl Into<String>) -> Self {
        CliError {
            kind: "io",
            message: message.into(),
            code: 2,
        }
    }

    pub fn to_json(&self) -> String {
        json!({"error": self.kind, "message": self.message}).to_string()
    }

    pub fn exit_code(&self) -> u8 {
        self.code
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let (kind, code) = match &e {
            Error::Wire(_) => ("parse", 2),
            Error::InvalidInput(_) | Error::DimensionMismatch { .. } => ("usage", 2),
            Error::StructuralInfeasibility(_) => ("infeasible", 1),
            Error::Solver { .. } => ("solver", 1),
            Error::Certificate(_) => ("certificate", 1),
            Error::Subproblem(_) => ("subproblem", 1),
        };
        CliError {
            kind,
            message: e.to_string(),
            code,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Decompose(a) => cmd_decompose(a),
        Command::CheckConvexity(a) => cmd_check(a),
        Command::ConstructInterior(a) => cmd_interior(a),
        Command::IntegrateSphere(a) => cmd_sphere(a),
        Command::GenInstance(a) => emit(&a.output, &random_instance(a.n, check_degree(a.degree)?, a.seed).to_json()),
        Command::Minimize(a) => cmd_minimize(a),
        Command::BenchDecomp(a) => cmd_bench_decomp(a),
        Command::BenchCcp(a) => cmd_bench_ccp(a),
        Command::ScanFamily(a) => cmd_scan(a),
    }
}

fn emit(out: &Output, text: &str) -> Result<()> {
    let mut s = text.to_string();
    if !s.ends_with('\n') {
        s.push('\n');
    }
    match &out.out {
        Some(p) => std::fs::write(p, s).map_err(|e| CliError::io(format!("{}: {e}", p.display()))),
        None => {
            print!("{s}");
            Ok(())
        }
    }
}

fn read_input(path: &str) -> Result<String> {
    if path == "-" {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| CliError::io(format!("stdin: {e}")))?;
        Ok(s)
    } else {
        std::fs::read_to_string(path).map_err(|e| CliError::io(format!("{path}: {e}")))
    }
}

fn read_poly(path: &str) -> Result<RatPoly> {
    let text = read_input(path)?;
    AnyPolynomial::from_json(&text)
        .map(AnyPolynomial::into_rational)
        .map_err(|e| CliError::parse(e.to_string()))
}

fn check_degree(d: u32) -> Result<u32> {
    if d >= 2 && d % 2 == 0 {
        Ok(d)
    } else {
        Err(CliError::usage(format!("--degree must be even and >= 2, got {d}")))
    }
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| CliError::usage(format!("bad {what} entry {t:?}"))))
        .collect()
}

fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    if let Some((a, b)) = s.split_once("..") {
        let lo: u64 = a.trim().parse().map_err(|_| CliError::usage(format!("bad seed range {s:?}")))?;
        let hi: u64 = b.trim().parse().map_err(|_| CliError::usage(format!("bad seed range {s:?}")))?;
        Ok((lo..hi).collect())
    } else {
        parse_list(s, "seed")
    }
}

fn parse_grid(s: &str) -> Result<GridRange> {
    let v: Vec<f64> = s
        .split(':')
        .map(|t| t.trim().parse().map_err(|_| CliError::usage(format!("bad range {s:?}, want lo:hi:step"))))
        .collect::<Result<_>>()?;
    match v[..] {
        [lo, hi, step] if step > 0.0 => Ok(GridRange::new(lo, hi, step)),
        _ => Err(CliError::usage(format!("bad range {s:?}, want lo:hi:step with step > 0"))),
    }
}

fn cone(c: ConeArg) -> ConvexityCone {
    match c {
        ConeArg::Dsos => ConvexityCone::Dsos,
        ConeArg::Sdsos => ConvexityCone::Sdsos,
        ConeArg::Sos => ConvexityCone::Sos,
    }
}

fn lambda_cone(c: LambdaConeArg) -> MatrixCone {
    match c {
        LambdaConeArg::Dd => MatrixCone::Dd,
        LambdaConeArg::Sdd => MatrixCone::Sdd,
        LambdaConeArg::Psd => MatrixCone::Psd,
    }
}

fn objective(o: ObjectiveArg, point: Vec<f64>, radius: f64) -> Objective {
    match o {
        ObjectiveArg::Feas => Objective::Feasibility,
        ObjectiveArg::Undom => Objective::UndominatedSphereTrace,
        ObjectiveArg::TracePoint => Objective::TraceAtPoint { point },
        ObjectiveArg::LmaxPoint => Objective::LambdaMaxAtPoint { point },
        ObjectiveArg::LmaxBall => Objective::LambdaMaxOnBall { radius },
    }
}

fn request(o: ObjectiveArg, c: ConeArg, lc: Option<LambdaConeArg>, point: Vec<f64>, radius: f64) -> DecompositionRequest {
    let mut req = DecompositionRequest::new(objective(o, point, radius), cone(c));
    if let Some(l) = lc {
        req = req.with_lambda_bound_cone(lambda_cone(l));
    }
    req
}

fn cmd_decompose(a: DecomposeArgs) -> Result<()> {
    let f = read_poly(&a.input)?;
    let point = match &a.point {
        Some(p) => parse_list(p, "point")?,
        None => vec![0.0; f.nvars()],
    };
    let mut req = request(a.objective, a.cone, a.lambda_cone, point, a.radius);
    req.time_limit = a.time_limit;
    let d = decompose(&f, &req)?;
    emit(&a.output, &d.to_json())
}

fn cmd_check(a: CheckArgs) -> Result<()> {
    let p = read_poly(&a.input)?;
    let c = cone(a.cone);
    match check_convexity(&p, c) {
        Ok(cert) => {
            let mut v = json!({"certified": true, "cone": c, "margin": cert.margin, "basis_size": cert.basis.len()});
            if a.certificate {
                v["certificate"] = serde_json::to_value(&cert).expect("certificate serializes");
            }
            emit(&a.output, &v.to_string())
        }
        Err(e @ (Error::InvalidInput(_) | Error::DimensionMismatch { .. })) => Err(e.into()),
        Err(e) => {
            emit(&a.output, &json!({"certified": false, "cone": c, "reason": e.to_string()}).to_string())?;
            Err(CliError {
                kind: "not-certified",
                message: format!("not {c}-convex: {e}"),
                code: 1,
            })
        }
    }
}

fn cmd_interior(a: InteriorArgs) -> Result<()> {
    if a.n < 2 {
        return Err(CliError::usage("--n must be at least 2"));
    }
    let deg = check_degree(a.degree)?;
    let c = match a.kind {
        InteriorKind::Full => interior_full(a.n, deg),
        InteriorKind::Homogeneous => interior_homogeneous(a.n, deg / 2),
    };
    let mut v = json!({
        "n": c.n,
        "degree": c.degree,
        "p": c.p,
        "basis_size": c.basis.len(),
        "dd_margin": c.dd_margin.to_string(),
        "dd_margin_f64": c.dd_margin.to_f64(),
        "identity_holds": c.identity_holds(),
        "alphas": c.alphas.iter().map(|x| x.to_string()).collect::<Vec<_>>(),
    });
    if let Some(s) = &c.sequences {
        let strs = |x: &[num_rational::BigRational]| x.iter().map(|v| v.to_string()).collect::<Vec<_>>();
        v["sequences"] = json!({"a": strs(&s.a), "beta": strs(&s.beta), "gamma": strs(&s.gamma), "delta": strs(&s.delta)});
    }
    if a.gram {
        v["gram"] = json!(c
            .q
            .iter()
            .map(|row| row.iter().map(|x| x.to_string()).collect::<Vec<_>>())
            .collect::<Vec<_>>());
    }
    emit(&a.output, &v.to_string())
}

fn cmd_sphere(a: SphereArgs) -> Result<()> {
    let v = match (&a.exp, &a.input) {
        (Some(e), _) => {
            let powers: Vec<u32> = parse_list(e, "exponent")?;
            if powers.is_empty() {
                return Err(CliError::usage("--exp needs at least one entry"));
            }
            let alpha = Exponent::new(powers);
            let i = monomial_sphere_integral(&alpha);
            let area = sphere_area(alpha.len());
            json!({
                "integral": i.to_string(),
                "integral_f64": i.to_f64(),
                "area": area.to_string(),
                "normalized": normalized_moment(&alpha).to_string(),
            })
        }
        (None, Some(path)) => {
            let p = read_poly(path)?;
            let avg = p
                .terms()
                .fold(num_rational::BigRational::from_integer(0.into()), |acc, (e, c)| acc + c * normalized_moment(e));
            json!({"normalized": avg.to_string(), "normalized_f64": avg.to_f64()})
        }
        (None, None) => return Err(CliError::usage("give --exp or --input")),
    };
    emit(&a.output, &v.to_string())
}

fn cmd_minimize(a: MinimizeArgs) -> Result<()> {
    let f0 = match (&a.input, a.n) {
        (Some(p), _) => read_poly(p)?,
        (None, Some(n)) if n >= 1 => random_instance(n, check_degree(a.degree)?, a.seed),
        _ => return Err(CliError::usage("give --input or --n")),
    };
    let n = f0.nvars();
    let constraints = a.radius.map(|r| vec![ball_constraint(n, r)]).unwrap_or_default();
    if a.radius.is_some_and(|r| !(r > 0.0)) {
        return Err(CliError::usage("--radius must be positive"));
    }
    let inst = ProblemInstance::new(f0, constraints)?;
    let x0 = match &a.x0 {
        Some(s) => parse_list(s, "x0")?,
        None => random_start(n, a.seed, a.radius),
    };
    let req = request(a.objective, a.cone, a.lambda_cone, x0.clone(), a.radius.unwrap_or(1.0));
    let cfg = CcpConfig {
        max_iterations: a.max_iter,
        time_budget: a.budget_s,
        ..CcpConfig::new(req)
    };
    let trace = match a.algorithm {
        Algorithm::Ccp => ccp::ccp(&inst, &cfg, &x0)?,
        Algorithm::MultiCcp => ccp::multi_decomp_ccp(&inst, &cfg, &x0)?,
    };
    eprintln!(
        "stopped ({:?}) after {} iterations, f0 = {}",
        trace.stop_reason,
        trace.iterations(),
        trace.final_objective()
    );
    emit(&a.output, &trace.to_json_lines())
}

fn report_out(out: &Output, fmt: Format, r: &bench::BenchReport) -> Result<()> {
    match fmt {
        Format::Json => emit(out, &r.to_json()),
        Format::Csv => emit(out, &r.to_csv()),
    }
}

fn cmd_bench_decomp(a: BenchDecompArgs) -> Result<()> {
    let ns: Vec<usize> = parse_list(&a.n, "n")?;
    let cones: Vec<ConvexityCone> = parse_list(&a.cones, "cone")?;
    let seeds = parse_seeds(&a.seeds)?;
    let r = bench::bench_decomp(&ns, check_degree(a.degree)?, &cones, &seeds, a.threads.max(1))?;
    for v in &r.ordering_violations {
        eprintln!("ordering violation: {v}");
    }
    report_out(&a.output, a.format, &r)
}

fn cmd_bench_ccp(a: BenchCcpArgs) -> Result<()> {
    let cfg = CcpBenchConfig {
        n: a.n,
        degree: check_degree(a.degree)?,
        seeds: parse_seeds(&a.seeds)?,
        cone: cone(a.cone),
        budget: a.budget_s,
        radius: a.radius,
        max_iterations: a.max_iter,
        threads: a.threads.max(1),
    };
    let r = bench::bench_ccp(&cfg)?;
    report_out(&a.output, a.format, &r)
}

fn cmd_scan(a: ScanArgs) -> Result<()> {
    let pts = scan_parametric_family(a.c, parse_grid(&a.a_range)?, parse_grid(&a.b_range)?);
    match a.format {
        Format::Csv => emit(&a.output, &scan_csv(&pts)),
        Format::Json => emit(&a.output, &serde_json::to_string(&pts).expect("points serialize")),
    }
}
