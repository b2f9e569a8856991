use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sasaki_core::extremal::{profile_csv, GradientMethod};
use sasaki_core::structure::FrameResiduals;
use sasaki_core::{
    classify, curvature_fd, futaki_numeric, random_sphere_point, run_flow, run_suite, sasaki_metric, scalar_closed,
    BasicProfile, FlowConfig, FutakiInput, FutakiMethod, QuadratureSpec, Suite, Weight,
};
use serde_json::{json, Value};

use crate::args::{parse_reals, Command, GlobalArgs, GradientArg, MethodArg, SuiteArg};
use crate::output::{Cell, Outcome, Table};

pub enum RunError {
    Usage(String),
    Compute(String),
}

impl From<sasaki_core::Error> for RunError {
    fn from(e: sasaki_core::Error) -> Self {
        RunError::Compute(e.to_string())
    }
}

const IDENTITY_TOL: f64 = 1e-10;

/// Validated numerical settings shared by every subcommand.
pub struct Settings {
    pub weight: Weight,
    pub fd_step: f64,
    pub quad_order: usize,
    pub seed: u64,
}

impl Settings {
    pub fn from_args(g: &GlobalArgs) -> Result<Self, RunError> {
        if g.n == Some(0) {
            return Err(RunError::Usage("--n: must be at least 1".into()));
        }
        let weight = match &g.weights {
            None => Weight::standard(g.n.unwrap_or(1)),
            Some(text) => {
                let vals = parse_reals("--weights", text).map_err(usage)?;
                if let Some(n) = g.n {
                    if vals.len() != n + 1 {
                        return Err(RunError::Usage(format!(
                            "--weights: expected n+1 = {} entries, got {}",
                            n + 1,
                            vals.len()
                        )));
                    }
                }
                if vals.len() < 2 {
                    return Err(RunError::Usage("--weights: need at least two entries".into()));
                }
                if let Some((i, v)) = vals.iter().enumerate().find(|(_, v)| **v <= 0.0) {
                    return Err(RunError::Usage(format!("--weights: entry {i} is {v}; weights must be positive")));
                }
                Weight::new(vals).map_err(|e| RunError::Usage(format!("--weights: {e}")))?
            }
        };
        if !(1e-5..=1e-2).contains(&g.fd_step) {
            return Err(RunError::Usage(format!("--fd-step: {} outside [1e-5, 1e-2]", g.fd_step)));
        }
        if g.quad_order < 2 {
            return Err(RunError::Usage(format!("--quad-order: {} < 2", g.quad_order)));
        }
        if g.threads == Some(0) {
            return Err(RunError::Usage("--threads: must be at least 1".into()));
        }
        Ok(Settings { weight, fd_step: g.fd_step, quad_order: g.quad_order, seed: g.seed })
    }

    fn n(&self) -> usize {
        self.weight.n()
    }

    fn weights(&self) -> &[f64] {
        self.weight.entries()
    }

    /// Seed of the `k`-th sampled point.
    fn point_seed(&self, k: usize) -> u64 {
        self.seed.wrapping_mul(1_000_003).wrapping_add(k as u64)
    }
}

fn usage(e: crate::args::CliError) -> RunError {
    match e {
        crate::args::CliError::Usage(m) => RunError::Usage(m),
        crate::args::CliError::Clap(e) => RunError::Usage(e.to_string()),
    }
}

pub fn run(command: &Command, s: &Settings) -> Result<Outcome, RunError> {
    match command {
        Command::StructureCheck { points } => structure_check(s, *points),
        Command::Curvature { points } => curvature(s, *points),
        Command::Volume => volume(s),
        Command::Futaki { b, method, mc_samples } => futaki(s, b, *method, *mc_samples),
        Command::Classify { scale } => classify_cmd(s, *scale),
        Command::Flow { perturb, basis_size, tol, max_iter, gradient, out, profile_csv, csv_rows } => flow(
            s,
            FlowArgs {
                perturb: *perturb,
                k: *basis_size,
                tol: *tol,
                max_iter: *max_iter,
                gradient: *gradient,
                out: out.as_deref(),
                csv: profile_csv.as_deref(),
                rows: *csv_rows,
            },
        ),
        Command::Verify { suite } => verify(*suite),
    }
}

fn structure_check(s: &Settings, points: usize) -> Result<Outcome, RunError> {
    if points == 0 {
        return Err(RunError::Usage("--points: must be at least 1".into()));
    }
    let mut worst = FrameResiduals::EMPTY;
    for k in 0..points {
        let p = random_sphere_point(s.n(), s.point_seed(k))?;
        worst = worst.merge(sasaki_metric(&s.weight, &p)?.residuals());
    }
    let max = worst.worst();
    let passed = max < IDENTITY_TOL && worst.min_eigenvalue > 0.0;
    let json = json!({
        "command": "structure-check",
        "n": s.n(),
        "weights": s.weights(),
        "points": points,
        "residuals": worst,
        "worst": max,
        "tolerance": IDENTITY_TOL,
        "passed": passed,
    });
    let mut table = Table::new(&[
        "n", "points", "eta_xi", "phi_squared", "phi_xi", "eta_phi", "compatibility", "tkf", "min_eigenvalue", "worst",
        "passed",
    ]);
    table.push(vec![
        Cell::Int(s.n() as u64),
        Cell::Int(points as u64),
        Cell::Real(worst.eta_xi),
        Cell::Real(worst.phi_squared),
        Cell::Real(worst.phi_xi),
        Cell::Real(worst.eta_phi),
        Cell::Real(worst.compatibility),
        Cell::Real(worst.tkf),
        Cell::Real(worst.min_eigenvalue),
        Cell::Real(max),
        Cell::Bool(passed),
    ]);
    let human = format!(
        "structure-check n={} w={:?} points={points}\n  eta(xi)-1      {:.3e}\n  Phi^2+I-eta xi {:.3e}\n  Phi xi         {:.3e}\n  eta Phi        {:.3e}\n  compatibility  {:.3e}\n  d eta vs g Phi {:.3e}\n  min eig g      {:.6}\n  {}\n",
        s.n(),
        s.weights(),
        worst.eta_xi,
        worst.phi_squared,
        worst.phi_xi,
        worst.eta_phi,
        worst.compatibility,
        worst.tkf,
        worst.min_eigenvalue,
        if passed { "PASS" } else { "FAIL" },
    );
    Ok(Outcome { json, human, table, passed })
}

fn curvature(s: &Settings, points: usize) -> Result<Outcome, RunError> {
    let two_n = 2.0 * s.n() as f64;
    let mut rows = Vec::new();
    let mut table = Table::new(&["index", "s_fd", "s_closed", "s_transverse_fd", "s_transverse_closed", "rel_err"]);
    let mut human = format!("curvature n={} w={:?} h={}\n  {:>5} {:>14} {:>14} {:>10}\n", s.n(), s.weights(), s.fd_step, "index", "s_fd", "s_closed", "rel_err");
    let mut max_rel = 0.0f64;
    for k in 0..points {
        let p = random_sphere_point(s.n(), s.point_seed(k))?;
        let closed = scalar_closed(&s.weight, &p);
        let fd = curvature_fd(|q| Ok(sasaki_metric(&s.weight, q)?.g), &p, s.fd_step)?.s;
        let rel = ((fd + two_n) - closed.s_transverse).abs() / closed.s_transverse.abs();
        max_rel = max_rel.max(rel);
        rows.push(json!({
            "index": k,
            "radii": p.radii(),
            "s_fd": fd,
            "s_closed": closed.s,
            "s_transverse_fd": fd + two_n,
            "s_transverse_closed": closed.s_transverse,
            "rel_err": rel,
        }));
        table.push(vec![
            Cell::Int(k as u64),
            Cell::Real(fd),
            Cell::Real(closed.s),
            Cell::Real(fd + two_n),
            Cell::Real(closed.s_transverse),
            Cell::Real(rel),
        ]);
        let _ = writeln!(human, "  {k:>5} {fd:>14.8} {:>14.8} {rel:>10.2e}", closed.s);
    }
    let _ = writeln!(human, "  max rel_err {max_rel:.3e}");
    let json = json!({
        "command": "curvature",
        "n": s.n(),
        "weights": s.weights(),
        "fd_step": s.fd_step,
        "rows": rows,
        "max_rel_err": max_rel,
    });
    Ok(Outcome { json, human, table, passed: true })
}

fn volume(s: &Settings) -> Result<Outcome, RunError> {
    let rep = sasaki_core::quadrature::volume_with(&s.weight, &QuadratureSpec::gauss(s.quad_order))?;
    let json = json!({
        "command": "volume",
        "n": s.n(),
        "weights": s.weights(),
        "closed": rep.closed,
        "numeric": rep.numeric,
        "relative_error": rep.relative_error(),
    });
    let mut table = Table::new(&["n", "closed", "numeric", "relative_error"]);
    table.push(vec![
        Cell::Int(s.n() as u64),
        Cell::Real(rep.closed),
        Cell::Real(rep.numeric),
        Cell::Real(rep.relative_error()),
    ]);
    let human = format!(
        "volume n={} w={:?}\n  closed   {:.15}\n  numeric  {:.15}\n  rel err  {:.3e}\n",
        s.n(),
        s.weights(),
        rep.closed,
        rep.numeric,
        rep.relative_error()
    );
    Ok(Outcome { json, human, table, passed: true })
}

fn futaki(s: &Settings, b: &str, method: MethodArg, mc: Option<usize>) -> Result<Outcome, RunError> {
    let b = parse_reals("--b", b).map_err(usage)?;
    if b.len() != s.n() + 1 {
        return Err(RunError::Usage(format!("--b: expected n+1 = {} entries, got {}", s.n() + 1, b.len())));
    }
    let input = FutakiInput::new(b.clone()).map_err(|e| RunError::Usage(format!("--b: {e}")))?;
    let gauss = QuadratureSpec::gauss(s.quad_order);
    let sphere_spec = match mc {
        Some(samples) => QuadratureSpec::monte_carlo(samples, s.seed),
        None => gauss,
    };
    sphere_spec.validate().map_err(|e| RunError::Usage(format!("--mc-samples: {e}")))?;
    let wanted = |m: MethodArg| method == MethodArg::All || method == m;
    let eval = |m: MethodArg, fm: FutakiMethod, spec: &QuadratureSpec| -> Result<Option<f64>, RunError> {
        if wanted(m) {
            Ok(Some(futaki_numeric(&s.weight, &input, fm, spec)?))
        } else {
            Ok(None)
        }
    };
    let closed = eval(MethodArg::Closed, FutakiMethod::Closed, &gauss)?;
    let chart = eval(MethodArg::Chart, FutakiMethod::Chart, &gauss)?;
    let sphere = eval(MethodArg::Sphere, FutakiMethod::Sphere, &sphere_spec)?;
    let json = json!({
        "command": "futaki",
        "n": s.n(),
        "weights": s.weights(),
        "b": b,
        "values": { "closed": closed, "chart": chart, "sphere": sphere },
    });
    let mut table = Table::new(&["method", "value"]);
    let mut human = format!("futaki n={} w={:?} b={:?}\n", s.n(), s.weights(), b);
    for (name, v) in [("closed", closed), ("chart", chart), ("sphere", sphere)] {
        if let Some(v) = v {
            table.push(vec![Cell::Text(name.into()), Cell::Real(v)]);
            let _ = writeln!(human, "  {name:<7} {v:.12}");
        }
    }
    Ok(Outcome { json, human, table, passed: true })
}

fn classify_cmd(s: &Settings, scale: f64) -> Result<Outcome, RunError> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(RunError::Usage(format!("--scale: {scale} must be positive")));
    }
    let rep = classify(&s.weight, scale)?;
    let mut json = json!({ "command": "classify", "n": s.n(), "weights": s.weights(), "scale": scale });
    if let (Value::Object(dst), Ok(Value::Object(src))) = (&mut json, serde_json::to_value(&rep)) {
        dst.extend(src);
    }
    let mut table = Table::new(&["n", "scale", "csc", "einstein", "futaki_norm", "einstein_residual", "A"]);
    let a_text = rep.a.iter().map(|v| format!("{v:.16e}")).collect::<Vec<_>>().join(";");
    table.push(vec![
        Cell::Int(s.n() as u64),
        Cell::Real(scale),
        Cell::Bool(rep.csc),
        Cell::Bool(rep.einstein),
        Cell::Real(rep.futaki_norm),
        Cell::Real(rep.einstein_residual),
        Cell::Text(a_text),
    ]);
    let human = format!(
        "classify n={} w={:?} scale={scale}\n  A                 {:?}\n  csc               {}\n  einstein          {}\n  |F|_max           {:.6e}\n  einstein residual {:.3e}\n",
        s.n(),
        s.weights(),
        rep.a,
        rep.csc,
        rep.einstein,
        rep.futaki_norm,
        rep.einstein_residual
    );
    Ok(Outcome { json, human, table, passed: true })
}

struct FlowArgs<'a> {
    perturb: f64,
    k: usize,
    tol: f64,
    max_iter: usize,
    gradient: GradientArg,
    out: Option<&'a Path>,
    csv: Option<&'a Path>,
    rows: usize,
}

fn flow(s: &Settings, a: FlowArgs<'_>) -> Result<Outcome, RunError> {
    if s.n() != 1 {
        return Err(RunError::Usage(format!("--n: flow supports n = 1 only, got {}", s.n())));
    }
    if a.k == 0 || a.k > sasaki_core::extremal::profile::MAX_PROFILE_LEN {
        return Err(RunError::Usage(format!("--basis-size: {} outside 1..=16", a.k)));
    }
    if !(a.tol > 0.0) {
        return Err(RunError::Usage(format!("--tol: {} must be positive", a.tol)));
    }
    if a.rows < 2 {
        return Err(RunError::Usage("--csv-rows: need at least 2".into()));
    }
    let cfg = FlowConfig {
        tol: a.tol,
        max_iter: a.max_iter,
        k: a.k,
        gradient: match a.gradient {
            GradientArg::Fd => GradientMethod::CentralDifference,
            GradientArg::FirstVariation => GradientMethod::FirstVariation,
        },
        quad_order: s.quad_order,
        ..FlowConfig::default()
    };
    let phi0 = BasicProfile::single(a.k, 1, a.perturb)?;
    let rep = run_flow(&s.weight, &phi0, &cfg)?;
    let json = json!({
        "command": "flow",
        "n": 1,
        "weights": s.weights(),
        "perturb": a.perturb,
        "config": cfg,
        "report": rep,
    });
    let csv = profile_csv(&s.weight, &rep.final_profile, a.rows)?;
    if let Some(path) = a.out {
        let text = serde_json::to_string_pretty(&json).expect("reports serialise");
        write_file(path, &(text + "\n"))?;
    }
    if let Some(path) = a.csv {
        write_file(path, &csv)?;
    }
    let mut table = Table::new(&["sigma", "phi", "s_deformed", "s_closed_baseline"]);
    for line in csv.lines().skip(1) {
        let cells = line.split(',').map(|v| Cell::Real(v.parse().expect("profile CSV holds reals"))).collect();
        table.push(cells);
    }
    let last = rep.energies.last().copied().unwrap_or(f64::NAN);
    let human = format!(
        "flow w={:?} perturb={} K={}\n  iterations        {}\n  stop              {:?}\n  E initial         {:.12}\n  E final           {:.12}\n  E baseline        {:.12}\n  |grad|_inf        {:.3e}\n  extremal residual {:.3e}\n  final coeffs      {:?}\n",
        s.weights(),
        a.perturb,
        a.k,
        rep.iterations,
        rep.stop_reason,
        rep.energies[0],
        last,
        rep.baseline_energy,
        rep.grad_norms.last().copied().unwrap_or(f64::NAN),
        rep.extremal_residual,
        rep.final_profile.coeffs,
    );
    Ok(Outcome { json, human, table, passed: rep.converged })
}

fn write_file(path: &Path, text: &str) -> Result<(), RunError> {
    fs::write(path, text).map_err(|e| RunError::Compute(format!("cannot write {}: {e}", path.display())))
}

fn verify(suite: SuiteArg) -> Result<Outcome, RunError> {
    let (suite, name) = match suite {
        SuiteArg::Identities => (Suite::Identities, "identities"),
        SuiteArg::Curvature => (Suite::Curvature, "curvature"),
        SuiteArg::Futaki => (Suite::Futaki, "futaki"),
        SuiteArg::Variational => (Suite::Variational, "variational"),
        SuiteArg::All => (Suite::All, "all"),
    };
    let results = run_suite(suite);
    let passed = results.iter().all(|r| r.passed);
    let mut human = String::new();
    let mut table = Table::new(&["id", "name", "passed", "residual", "detail"]);
    for r in &results {
        let _ = writeln!(human, "{r}");
        table.push(vec![
            Cell::Int(r.id as u64),
            Cell::Text(r.name.into()),
            Cell::Bool(r.passed),
            Cell::Real(r.residual),
            Cell::Text(r.detail.clone()),
        ]);
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    let _ = writeln!(human, "suite {name}: {} passed, {failed} failed", results.len() - failed);
    let json = json!({ "command": "verify", "suite": name, "results": results, "passed": passed });
    Ok(Outcome { json, human, table, passed })
}
