//! Command implementations. Each produces a JSON report, optional CSV text
//! and a status telling whether the analysis came out negative.

use kcone_core::analysis::{analyze, perturbation_experiment, Analysis, AnalysisOptions, PerturbationSpec};
use kcone_core::cone::{ApproximationOrder, BlowUpFrame, ConeConfig, EpsGrid, GateReport, RemainderSolution, Route};
use kcone_core::jordan::{ConeDecomposition, NotSurjective, SurjectivityOrder};
use kcone_core::newton::NewtonConfig;
use kcone_core::scalar::norm;
use kcone_core::series::{composition_determined_through, linearization_determined_through};
use kcone_core::topology::{
    classical_newton_check, default_transversal, half_cone_degree, milnor_number, transversal_determinant, DegreeSigns,
};
use kcone_core::{ComplexRational, CurveSeries, Error, Field, Poly, PolyMap, Rational, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::emit::{self, Scalar};
use crate::problem::{parse_complex, FieldKind, GridSpec, Options, Problem, ProblemFile};
use crate::CliError;

pub const SCHEMA: &str = "kcone.report/v1";
const MAX_CURVE_ORDER: usize = 96;
const MAX_LEVELSET_ROWS: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Float,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Clause {
    I,
    Ii,
    Iii,
}

/// Fully resolved numerical settings, echoed into every report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub mode: Mode,
    pub shift: Option<usize>,
    pub eta: f64,
    pub newton_tol: f64,
    pub tau_rank: f64,
    pub max_k: Option<usize>,
    pub cone_radius: f64,
    pub eps_grid: GridSpec,
}

/// Command line values that take precedence over the problem file options.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub mode: Option<Mode>,
    pub shift: Option<usize>,
    pub eta: Option<f64>,
    pub newton_tol: Option<f64>,
    pub max_k: Option<usize>,
    pub grid_min: Option<f64>,
    pub grid_max: Option<f64>,
    pub grid_points: Option<usize>,
}

impl Settings {
    pub fn resolve(opts: &Options, o: &Overrides) -> Result<Settings, CliError> {
        let cone = ConeConfig::default();
        let grid = opts.eps_grid.unwrap_or(GridSpec { min: cone.grid.min, max: cone.grid.max, points: cone.grid.points });
        let s = Settings {
            mode: o.mode.unwrap_or(Mode::Exact),
            shift: o.shift.or(opts.shift),
            eta: o.eta.or(opts.eta).unwrap_or(cone.eta),
            newton_tol: o.newton_tol.or(opts.newton_tol).unwrap_or(cone.newton.tol),
            tau_rank: opts.tau_rank.unwrap_or(cone.tau_rank),
            max_k: o.max_k.or(opts.max_k),
            cone_radius: opts.cone_radius.unwrap_or(cone.cone_radius),
            eps_grid: GridSpec {
                min: o.grid_min.unwrap_or(grid.min),
                max: o.grid_max.unwrap_or(grid.max),
                points: o.grid_points.unwrap_or(grid.points),
            },
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let positive = [("eta", self.eta), ("newton_tol", self.newton_tol), ("tau_rank", self.tau_rank), ("cone_radius", self.cone_radius)];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
            return Err(CliError::Input(format!("{name} must be positive, got {v}")));
        }
        let g = &self.eps_grid;
        if !(g.min > 0.0 && g.max >= g.min && g.points >= 1) {
            return Err(CliError::Input("eps grid needs 0 < min <= max and at least one point".into()));
        }
        Ok(())
    }

    fn analysis_options(&self) -> AnalysisOptions {
        AnalysisOptions { max_k: self.max_k, tau_rank: self.tau_rank }
    }

    fn cone(&self) -> ConeConfig {
        ConeConfig {
            eta: self.eta,
            newton: NewtonConfig { tol: self.newton_tol, ..NewtonConfig::default() },
            tau_rank: self.tau_rank,
            cone_radius: self.cone_radius,
            grid: EpsGrid { min: self.eps_grid.min, max: self.eps_grid.max, points: self.eps_grid.points },
        }
    }
}

/// A command bound to a problem file, with its own arguments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Task {
    Analyze,
    Gate,
    Solve { route: Option<String>, w: Option<Vec<String>> },
    Levelset { lattice: usize, phi_lattice: usize },
    Degree,
    Perturb { clause: Clause, order: u32, alpha: String, count: usize, seed: u64, refine: bool },
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Analyze => "analyze",
            Task::Gate => "gate",
            Task::Solve { .. } => "solve",
            Task::Levelset { .. } => "levelset",
            Task::Degree => "degree",
            Task::Perturb { .. } => "perturb",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    Negative,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub report: Value,
    pub csv: Option<String>,
    pub status: Status,
}

fn is_input_error(e: &Error) -> bool {
    matches!(
        e,
        Error::DimensionMismatch { .. }
            | Error::ZeroMap
            | Error::NotHomogeneous { .. }
            | Error::CurveNotCentered
            | Error::InsufficientTruncation { .. }
            | Error::InvalidShift { .. }
            | Error::RouteShiftMismatch { .. }
    )
}

fn error_json(e: &Error) -> Value {
    let dbg = format!("{e:?}");
    let kind = dbg.split(|c: char| !c.is_alphanumeric()).next().unwrap_or_default().to_string();
    json!({ "kind": kind, "message": e.to_string() })
}

struct Ctx<'a, K: Field> {
    file: &'a ProblemFile,
    task: &'a Task,
    settings: &'a Settings,
    problem: Problem<K>,
    report: Map<String, Value>,
    warnings: Vec<String>,
}

impl<'a, K: Scalar> Ctx<'a, K> {
    fn tol(&self) -> f64 {
        if K::EXACT {
            0.0
        } else {
            self.settings.tau_rank
        }
    }

    fn finish(mut self, status: Status, csv: Option<String>) -> Outcome {
        let label = match status {
            Status::Ok => "ok",
            Status::Negative => "negative",
        };
        self.report.insert("status".into(), json!(label));
        self.report.insert("warnings".into(), json!(self.warnings));
        Outcome { report: Value::Object(self.report), csv, status }
    }

    /// Records a core error: input errors abort, others yield a negative report.
    fn fail(mut self, e: Error) -> Result<Outcome, CliError> {
        if is_input_error(&e) {
            return Err(CliError::Input(e.to_string()));
        }
        self.report.insert("error".into(), error_json(&e));
        Ok(self.finish(Status::Negative, None))
    }

    fn analyze(&self) -> Result<Analysis<K>, Error> {
        analyze(&self.problem.map, &self.problem.curve, &self.settings.analysis_options())
    }

    /// Frame at the requested shift, or at the smallest shift with a passing
    /// route when none was requested.
    fn frame(&self, a: &Analysis<K>, shift: Option<usize>) -> Result<(BlowUpFrame<K>, GateReport<K>), Error> {
        let (g, z, eta) = (&self.problem.map, &self.problem.curve, self.settings.eta);
        let shift = match shift.or(self.settings.shift) {
            Some(s) => s,
            None => {
                let f0 = a.frame(g, z, 0)?;
                let g0 = f0.gate(eta);
                match g0.preferred() {
                    Some(r) if r.shift() != 0 => r.shift(),
                    _ => return Ok((f0, g0)),
                }
            }
        };
        let f = a.frame(g, z, shift)?;
        let gr = f.gate(eta);
        Ok((f, gr))
    }
}

fn order_json(o: &SurjectivityOrder) -> Value {
    match o {
        SurjectivityOrder::Surjective(k) => json!({ "status": "surjective", "k": k }),
        SurjectivityOrder::NotKSurjective(NotSurjective::Stabilized { dims, generic_rank }) => {
            json!({ "status": "stabilized", "dims": dims, "generic_rank": generic_rank })
        }
        SurjectivityOrder::NotKSurjective(NotSurjective::Exhausted { max_k, dims }) => {
            json!({ "status": "exhausted", "max_k": max_k, "dims": dims })
        }
    }
}

fn decomposition_json<K: Scalar>(d: &ConeDecomposition<K>) -> Value {
    json!({
        "k": d.k,
        "block_dims": d.block_dims(),
        "kernel_dim": d.kernel_dim(),
        "nc_bases": d.nc_bases.iter().map(emit::columns).collect::<Vec<_>>(),
        "kernel_basis": emit::columns(&d.kernel_basis),
        "r_bases": d.r_bases.iter().map(emit::columns).collect::<Vec<_>>(),
        "s_ops": d.s_ops.iter().map(emit::matrix).collect::<Vec<_>>(),
        "s_tilde": emit::matrix(&d.s_tilde()),
        "phi": d.phi.iter().map(emit::matrix).collect::<Vec<_>>(),
    })
}

fn approximation_json<K: Scalar>(a: &ApproximationOrder<K>) -> Value {
    match a {
        ApproximationOrder::Order { q, bbar } => json!({
            "q": q,
            "bbar0": emit::vector(&bbar.coeff(0)),
            "bbar": emit::vec_series(bbar),
        }),
        ApproximationOrder::ExactThroughT { t } => json!({ "q": null, "exact_through": t }),
    }
}

fn analysis_json<K: Scalar>(a: &Analysis<K>) -> Value {
    json!({
        "truncation": a.truncation,
        "linearization": emit::mat_series(&a.linearization),
        "filtration_dims": a.filtration.dims,
        "max_k": a.max_k,
        "k": a.k(),
        "order": order_json(&a.order),
        "decomposition": a.decomposition.as_ref().map(decomposition_json),
        "approximation": approximation_json(&a.approximation),
        "approximation_truncation": a.approximation_truncation,
    })
}

fn gate_json<K: Scalar>(gr: &GateReport<K>, frame: &BlowUpFrame<K>) -> Value {
    let verdicts: Vec<Value> = gr
        .verdicts
        .iter()
        .map(|v| {
            let conds: Vec<Value> = v
                .conditions
                .iter()
                .map(|c| json!({ "name": c.name, "passed": c.passed, "value": c.value.map(emit::float) }))
                .collect();
            json!({ "route": v.route.name(), "shift": v.route.shift(), "passed": v.passed, "conditions": conds })
        })
        .collect();
    json!({
        "k": gr.k,
        "frame_shift": gr.frame_shift,
        "scale_order": frame.scale_order,
        "q": gr.q,
        "eta": emit::float(gr.eta),
        "bbar0": gr.bbar.as_ref().map(|b| emit::vector(&b.coeff(0))),
        "verdicts": verdicts,
        "selected": gr.selected().map(|r| r.name()),
        "preferred": gr.preferred().map(|r| r.name()),
        "no_zero_in_cone": gr.no_zero_in_cone,
        "limit_violation": frame.violation().map(|e| e.to_string()),
    })
}

fn solution_json<K: Scalar>(s: &RemainderSolution<K>) -> Value {
    let samples: Vec<Value> = s
        .samples
        .iter()
        .map(|p| {
            json!({
                "eps": emit::float(p.eps),
                "c": emit::approx_vector::<K>(&p.c),
                "newton_residual": emit::float(p.newton_residual),
                "z": emit::vector(&p.z),
                "g_norm": emit::float(p.g_norm),
                "lipschitz": emit::float(p.lipschitz),
                "bound": emit::float(p.bound),
            })
        })
        .collect();
    json!({
        "route": s.route.name(),
        "shift": s.shift,
        "zero": {
            "w": emit::vector(&s.zero.w),
            "c": emit::approx_vector::<K>(&s.zero.c),
            "c_exact": s.zero.c_exact.as_ref().map(|c| emit::vector(c)),
            "residual": emit::float(s.zero.residual),
            "iterations": s.zero.iterations,
        },
        "samples": samples,
        "refined": emit::vec_series(&s.refined),
        "refined_exact": s.refined_exact,
        "c_series": emit::vec_series(&s.c_series),
        "max_newton_residual": emit::float(s.max_newton_residual),
        "max_lipschitz": emit::float(s.max_lipschitz),
        "all_within_bound": s.all_within_bound,
    })
}

fn summary<K: Scalar>(a: &Analysis<K>) -> Value {
    json!({
        "truncation": a.truncation,
        "k": a.k(),
        "q": a.approximation.q(),
        "block_dims": a.decomposition.as_ref().map(|d| d.block_dims()),
    })
}

fn parse_scalars<K: Field>(values: &[String], what: &str) -> Result<Vec<K>, CliError> {
    values
        .iter()
        .map(|s| {
            let (re, im) = parse_complex(s).ok_or_else(|| CliError::Input(format!("{what}: cannot parse `{s}`")))?;
            K::from_rational_parts(&re, &im).ok_or_else(|| CliError::Input(format!("{what}: `{s}` is not real")))
        })
        .collect()
}

/// Runs a task on a problem file over the field selected by the file and mode.
pub fn execute(task: &Task, file: &ProblemFile, settings: &Settings) -> Result<Outcome, CliError> {
    match (file.field, settings.mode) {
        (FieldKind::Real, Mode::Exact) => execute_in::<Rational>(task, file, settings),
        (FieldKind::Real, Mode::Float) => execute_in::<f64>(task, file, settings),
        (FieldKind::Complex, Mode::Exact) => execute_in::<ComplexRational>(task, file, settings),
        (FieldKind::Complex, Mode::Float) => execute_in::<C64>(task, file, settings),
    }
}

fn execute_in<K: Scalar>(task: &Task, file: &ProblemFile, settings: &Settings) -> Result<Outcome, CliError> {
    let problem = file.build::<K>()?;
    let mut report = Map::new();
    report.insert("schema".into(), json!(SCHEMA));
    report.insert("command".into(), json!(task.name()));
    report.insert("task".into(), serde_json::to_value(task).expect("task serializes"));
    report.insert("input".into(), serde_json::to_value(file).expect("problem serializes"));
    report.insert("settings".into(), serde_json::to_value(settings).expect("settings serialize"));
    let ctx = Ctx { file, task, settings, problem, report, warnings: Vec::new() };
    match task {
        Task::Analyze => run_analyze(ctx),
        Task::Gate => run_gate(ctx),
        Task::Solve { route, w } => run_solve(ctx, route.as_deref(), w.as_deref()),
        Task::Levelset { lattice, phi_lattice } => run_levelset(ctx, *lattice, *phi_lattice),
        Task::Degree => run_degree(ctx),
        Task::Perturb { .. } => run_perturb(ctx),
    }
}

fn run_analyze<K: Scalar>(mut ctx: Ctx<'_, K>) -> Result<Outcome, CliError> {
    let a = match ctx.analyze() {
        Ok(a) => a,
        Err(e) => return ctx.fail(e),
    };
    ctx.report.insert("analysis".into(), analysis_json(&a));
    if a.k().is_none() {
        ctx.report.insert("error".into(), error_json(&Error::NotKSurjective { max_k: a.max_k }));
        return Ok(ctx.finish(Status::Negative, None));
    }
    Ok(ctx.finish(Status::Ok, None))
}

fn run_gate<K: Scalar>(mut ctx: Ctx<'_, K>) -> Result<Outcome, CliError> {
    let a = match ctx.analyze() {
        Ok(a) => a,
        Err(e) => return ctx.fail(e),
    };
    ctx.report.insert("analysis".into(), summary(&a));
    match ctx.frame(&a, None) {
        Ok((f, gr)) => {
            ctx.report.insert("gate".into(), gate_json(&gr, &f));
            Ok(ctx.finish(Status::Ok, None))
        }
        Err(e) => ctx.fail(e),
    }
}

fn route_order(shift: usize) -> Vec<Route> {
    match shift {
        0 => vec![Route::Corollary1, Route::Corollary2Small, Route::Corollary2Curvature],
        1 => vec![Route::Corollary3, Route::Corollary4(1)],
        s => vec![Route::Corollary4(s)],
    }
}

type Solved<K> = (BlowUpFrame<K>, GateReport<K>, Route, Vec<K>);

fn solve_frame<K: Scalar>(
    ctx: &Ctx<'_, K>,
    a: &Analysis<K>,
    route: Option<&str>,
    w: Option<&[String]>,
) -> Result<Result<Solved<K>, Error>, CliError> {
    let explicit = match route {
        Some(name) => Some(Route::parse(name).ok_or_else(|| CliError::Input(format!("unknown route `{name}`")))?),
        None => None,
    };
    let (f, gr) = match ctx.frame(a, explicit.map(|r| r.shift())) {
        Ok(v) => v,
        Err(e) => return Ok(Err(e)),
    };
    let route = explicit.or_else(|| gr.selected()).unwrap_or_else(|| route_order(f.shift)[0]);
    let nk = f.decomposition.kernel_dim();
    let w = match w {
        Some(vals) => parse_scalars::<K>(vals, "w")?,
        None => vec![K::zero(); nk],
    };
    if w.len() != nk {
        return Err(CliError::Input(format!("w has {} entries, the kernel has dimension {nk}", w.len())));
    }
    Ok(Ok((f, gr, route, w)))
}

fn run_solve<K: Scalar>(mut ctx: Ctx<'_, K>, route: Option<&str>, w: Option<&[String]>) -> Result<Outcome, CliError> {
    let a = match ctx.analyze() {
        Ok(a) => a,
        Err(e) => return ctx.fail(e),
    };
    ctx.report.insert("analysis".into(), summary(&a));
    let (f, gr, route, w) = match solve_frame(&ctx, &a, route, w)? {
        Ok(v) => v,
        Err(e) => return ctx.fail(e),
    };
    ctx.report.insert("gate".into(), gate_json(&gr, &f));
    if !gr.passed(route) {
        ctx.warnings.push(format!("route {route} did not pass the gate; accepted only if Newton converges"));
    }
    match f.continue_in_epsilon(route, &w, &ctx.settings.cone()) {
        Ok(sol) => {
            ctx.report.insert("solution".into(), solution_json(&sol));
            Ok(ctx.finish(Status::Ok, None))
        }
        Err(e) => ctx.fail(e),
    }
}

fn lattice(points: usize, radius: f64) -> Vec<f64> {
    if points <= 1 {
        return vec![0.0];
    }
    let half = radius / 2.0;
    (0..points).map(|i| -half + 2.0 * half * i as f64 / (points - 1) as f64).collect()
}

fn product(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    axes.iter().fold(vec![Vec::new()], |acc, axis| {
        acc.iter()
            .flat_map(|prefix| {
                axis.iter().map(move |x| {
                    let mut v = prefix.clone();
                    v.push(*x);
                    v
                })
            })
            .collect()
    })
}

fn cell<K: Field>(x: &K) -> String {
    if K::COMPLEX {
        format!("{:e}{:+e}i", x.real_f64(), x.imag_f64())
    } else {
        format!("{:e}", x.real_f64())
    }
}

fn run_levelset<K: Scalar>(mut ctx: Ctx<'_, K>, w_points: usize, phi_points: usize) -> Result<Outcome, CliError> {
    let a = match ctx.analyze() {
        Ok(a) => a,
        Err(e) => return ctx.fail(e),
    };
    ctx.report.insert("analysis".into(), summary(&a));
    let (f, gr) = match ctx.frame(&a, None) {
        Ok(v) => v,
        Err(e) => return ctx.fail(e),
    };
    ctx.report.insert("gate".into(), gate_json(&gr, &f));
    let cfg = ctx.settings.cone();
    let s = f.decomposition.s_tilde();
    let (m, nk) = (s.cols(), f.decomposition.kernel_dim());
    let radius = ctx.settings.cone_radius;
    let mut axes = vec![lattice(phi_points, radius); m];
    axes.extend(vec![lattice(w_points, radius); nk]);
    let combos = product(&axes);
    let eps_values = cfg.grid.signed();
    if combos.len() * eps_values.len() > MAX_LEVELSET_ROWS {
        return Err(CliError::Input(format!("level-set lattice too large: {} rows", combos.len() * eps_values.len())));
    }
    let mut header = vec!["eps".to_string()];
    header.extend((1..=m).map(|i| format!("phi_{i}")));
    header.extend((1..=nk).map(|i| format!("nk1_{i}")));
    header.extend(ctx.file.variables.iter().map(|v| format!("z_{v}")));
    header.extend((1..=f.map.m_out()).map(|i| format!("G_{i}")));
    header.push("residual".into());
    let mut out = csv::Writer::from_writer(Vec::new());
    out.write_record(&header).map_err(|e| CliError::Io(e.to_string()))?;
    let r = f.scale_order as i32;
    let (mut rows, mut skipped, mut worst) = (0usize, 0usize, 0.0f64);
    for &eps in &eps_values {
        let e = K::from_f64(eps);
        let gz = match f.map.eval(&f.curve.eval(&e)) {
            Ok(v) => v,
            Err(err) => return ctx.fail(err),
        };
        let er = e.pow(r as u32);
        for combo in &combos {
            let phi: Vec<K> = combo[..m].iter().map(|x| K::from_f64(*x)).collect();
            let w: Vec<K> = combo[m..].iter().map(|x| K::from_f64(*x)).collect();
            let Ok(pt) = f.level_set_point(&e, &phi, &w, &cfg) else {
                skipped += 1;
                continue;
            };
            let gp = match f.map.eval(&pt) {
                Ok(v) => v,
                Err(err) => return ctx.fail(err),
            };
            let diff: Vec<K> = gp
                .iter()
                .zip(&gz)
                .zip(s.mul_vec(&phi))
                .map(|((a, b), sp)| a.clone() - b.clone() - er.clone() * sp)
                .collect();
            let residual = norm(&diff);
            worst = worst.max(residual);
            let mut record = vec![format!("{eps:e}")];
            record.extend(combo.iter().map(|x| format!("{x:e}")));
            record.extend(pt.iter().map(cell));
            record.extend(gp.iter().map(cell));
            record.push(format!("{residual:e}"));
            out.write_record(&record).map_err(|e| CliError::Io(e.to_string()))?;
            rows += 1;
        }
    }
    let bytes = out.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    let csv = String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))?;
    ctx.report.insert(
        "levelset".into(),
        json!({
            "columns": header,
            "rows": rows,
            "skipped": skipped,
            "shift": f.shift,
            "scale_order": f.scale_order,
            "max_residual": emit::float(worst),
        }),
    );
    Ok(ctx.finish(Status::Ok, Some(csv)))
}

fn run_degree<K: Scalar>(mut ctx: Ctx<'_, K>) -> Result<Outcome, CliError> {
    if K::COMPLEX {
        return Err(CliError::Input("degree signs are only defined over the real field".into()));
    }
    let (g, z) = (&ctx.problem.map, &ctx.problem.curve);
    let (n, m) = (g.n_in(), g.m_out());
    let b = ctx.problem.transversal.clone().unwrap_or_else(|| default_transversal(z, m));
    if b.rows() != n || b.cols() != m {
        return Err(CliError::Input(format!("transversal must have {m} columns of length {n}")));
    }
    let cap = z.truncation().min(MAX_CURVE_ORDER);
    let t = linearization_determined_through(g, z).min(cap);
    let td = match transversal_determinant(g, z, &b, t, ctx.tol()) {
        Ok(td) => td,
        Err(e) => return ctx.fail(e),
    };
    let signs = match half_cone_degree(&td) {
        DegreeSigns::Signs { positive, negative } => json!({ "positive": positive, "negative": negative }),
        DegreeSigns::Undefined => Value::Null,
    };
    let tq = composition_determined_through(g, z).min(cap);
    let classical = match classical_newton_check(g, z, &td, tq, ctx.tol()) {
        Ok(v) => json!({ "q": v.q, "required": v.required, "holds": v.holds, "truncation": tq }),
        Err(e) => return ctx.fail(e),
    };
    let k = match ctx.analyze() {
        Ok(a) => {
            if let Some(d) = &a.decomposition {
                if d.kernel_dim() > 1 {
                    ctx.warnings.push(format!(
                        "dim N_{{k+1}} = {} > 1: the signs describe the chosen transversal slice only",
                        d.kernel_dim()
                    ));
                }
            }
            if let (Some(k), Some(q)) = (a.k(), a.approximation.q()) {
                if q <= 2 * k {
                    ctx.warnings.push(format!(
                        "G[z] vanishes only to order {q} <= 2k = {}: the degree may vary with eps",
                        2 * k
                    ));
                }
            }
            a.k()
        }
        Err(_) => None,
    };
    ctx.report.insert(
        "degree".into(),
        json!({
            "truncation": t,
            "transversal": emit::columns(&b),
            "chi": td.chi,
            "r0": td.r0().emit(),
            "r": emit::vector(&td.r),
            "det": emit::vector(&td.det),
            "signs": signs,
            "classical": classical,
            "k": k,
        }),
    );
    Ok(ctx.finish(Status::Ok, None))
}

/// Exponent vectors of total degree `d` in `n` variables.
fn exponents(n: usize, d: u32) -> Vec<Vec<u32>> {
    if n == 1 {
        return vec![vec![d]];
    }
    (0..=d)
        .rev()
        .flat_map(|a| {
            exponents(n - 1, d - a).into_iter().map(move |mut rest| {
                rest.insert(0, a);
                rest
            })
        })
        .collect()
}

fn random_tensor<K: Field>(rng: &mut ChaCha8Rng, n: usize, m: usize, d: u32) -> Result<PolyMap<K>, Error> {
    let comps = (0..m)
        .map(|_| {
            let terms: Vec<(Vec<u32>, K)> =
                exponents(n, d).into_iter().map(|e| (e, K::from_i64(rng.gen_range(-3..=3)))).collect();
            Poly::from_terms(n, terms)
        })
        .collect::<Result<Vec<_>, _>>()?;
    PolyMap::new(n, comps)
}

fn random_vector<K: Field>(rng: &mut ChaCha8Rng, n: usize) -> Vec<K> {
    (0..n).map(|_| K::from_i64(rng.gen_range(-3..=3))).collect()
}

fn perturb_center<K: Scalar>(ctx: &Ctx<'_, K>) -> Result<CurveSeries<K>, Error> {
    let a = ctx.analyze()?;
    let (f, gr) = ctx.frame(&a, None)?;
    let route = gr.selected().ok_or(Error::RouteNotGated)?;
    let w = vec![K::zero(); f.decomposition.kernel_dim()];
    let sol = f.continue_in_epsilon(route, &w, &ctx.settings.cone())?;
    CurveSeries::new(sol.refined)
}

fn run_perturb<K: Scalar>(mut ctx: Ctx<'_, K>) -> Result<Outcome, CliError> {
    let Task::Perturb { clause, order, alpha, count, seed, refine } = ctx.task.clone() else {
        unreachable!("perturb task");
    };
    let alpha = parse_scalars::<K>(&[alpha], "alpha")?.remove(0);
    let (n, m) = (ctx.problem.map.n_in(), ctx.problem.map.m_out());
    if clause != Clause::Iii && order == 0 {
        return Err(CliError::Input("perturbation order must be at least 1".into()));
    }
    let center = if refine {
        match perturb_center(&ctx) {
            Ok(c) => c,
            Err(e) => return ctx.fail(e),
        }
    } else {
        ctx.problem.curve.clone()
    };
    let opts = ctx.settings.analysis_options();
    let two_k = match clause {
        Clause::Iii => match analyze(&ctx.problem.map, &center, &opts) {
            Ok(a) => match a.k() {
                Some(k) => 2 * k,
                None => return ctx.fail(Error::NotKSurjective { max_k: a.max_k }),
            },
            Err(e) => return ctx.fail(e),
        },
        _ => 0,
    };
    let top = ctx.problem.map.degree().max(order);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut experiments = Vec::with_capacity(count);
    let mut all_hold = true;
    for index in 0..count {
        let spec = match clause {
            Clause::I => {
                let tensors = (order..=top)
                    .map(|d| random_tensor::<K>(&mut rng, n, m, d).map(|t| (d, t)))
                    .collect::<Result<Vec<_>, _>>();
                match tensors {
                    Ok(tensors) => PerturbationSpec::Map { order, tensors },
                    Err(e) => return ctx.fail(e),
                }
            }
            Clause::Ii => {
                let i = order as usize;
                let terms = (i..=i + 3).map(|j| (j, random_vector::<K>(&mut rng, n))).collect();
                PerturbationSpec::Curve { order: i, terms }
            }
            Clause::Iii => match random_tensor::<K>(&mut rng, n, m, two_k as u32) {
                Ok(tensor) => {
                    PerturbationSpec::Joint { tensor, curve_term: random_vector::<K>(&mut rng, n), curve_order: two_k }
                }
                Err(e) => return ctx.fail(e),
            },
        };
        let r = match perturbation_experiment(&ctx.problem.map, &center, &spec, &alpha, &opts, &ctx.settings.cone()) {
            Ok(r) => r,
            Err(e) => return ctx.fail(e),
        };
        all_hold &= r.contract_holds;
        experiments.push(json!({
            "index": index,
            "k_before": r.k_before,
            "k_after": r.k_after,
            "lower": r.lower,
            "gate_before": r.gate_before.as_ref().map(|g| g.passed(Route::Corollary1)),
            "gate_after": r.gate_after.as_ref().map(|g| g.passed(Route::Corollary1)),
            "contract_holds": r.contract_holds,
            "violations": r.violations,
        }));
    }
    ctx.report.insert(
        "perturbation".into(),
        json!({
            "center": emit::vec_series(center.series()),
            "experiments": experiments,
            "all_hold": all_hold,
        }),
    );
    Ok(ctx.finish(if all_hold { Status::Ok } else { Status::Negative }, None))
}

/// Milnor number from per-curve orders; `ord` defaults to the map's order.
pub fn milnor(ks: &[usize], ord: Option<u32>, file: Option<&ProblemFile>) -> Result<Outcome, CliError> {
    let ord = match (ord, file) {
        (Some(o), _) => o,
        (None, Some(f)) => f.build::<Rational>()?.map.ord().map_err(|e| CliError::Input(e.to_string()))?,
        (None, None) => return Err(CliError::Input("either --ord or a problem file is required".into())),
    };
    let mut report = Map::new();
    report.insert("schema".into(), json!(SCHEMA));
    report.insert("command".into(), json!("milnor"));
    report.insert("ks".into(), json!(ks));
    report.insert("ord".into(), json!(ord));
    let status = match milnor_number(ks, ord) {
        Ok(mu) => {
            report.insert("mu".into(), json!(mu));
            Status::Ok
        }
        Err(e) => {
            report.insert("error".into(), error_json(&e));
            Status::Negative
        }
    };
    report.insert("status".into(), json!(if status == Status::Ok { "ok" } else { "negative" }));
    Ok(Outcome { report: Value::Object(report), csv: None, status })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_enumeration() {
        assert_eq!(exponents(2, 2), vec![vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert_eq!(exponents(3, 1).len(), 3);
        assert_eq!(exponents(3, 3).len(), 10);
    }

    #[test]
    fn lattice_points() {
        assert_eq!(lattice(1, 0.5), vec![0.0]);
        assert_eq!(lattice(3, 0.5), vec![-0.25, 0.0, 0.25]);
        assert_eq!(product(&[vec![0.0, 1.0], vec![2.0]]), vec![vec![0.0, 2.0], vec![1.0, 2.0]]);
    }
}
