//! Command-line front end.
//!
//! Five subcommands cover the pipeline: `validate` checks a model file,
//! `graph` unfolds it into a task graph, `plan` classifies and allocates,
//! `simulate` executes the plan with fault injection, and `sweep` repeats
//! plan+simulate across a parameter range, emitting CSV.
//!
//! Exit codes are a stable contract: 0 ok, 1 invalid model or data,
//! 2 I/O or syntax error, 3 ambiguous classification, 4 simulation abort.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::engine::{
    emit_middleware_config, parse_machine_file, plan as build_plan, simulate, ExecutionPlan,
    MachineModel, PlanOptions, SimError,
};
use crate::model::{
    parse_model_with_map, validate_model, MultiscaleModel, RoleHint, SourceMap, Subject,
};
use crate::patterns::{
    classify, dominant_submodel, embed_es, embed_hmc, embed_rc, ClassifyError, PatternEmbedding,
    PatternKind, Role, DEFAULT_THETA_ES,
};
use crate::perf::{
    es_efficiency, parse_perf_file, ExecMode, PerfModel, SerialStack, DEFAULT_R_SEQ,
};
use crate::taskgraph::{
    detect_deadlock, to_dot, unfold, DeadlockCheck, Phase, TaskGraph,
};

#[derive(Parser, Debug)]
#[command(
    name = "mcplan",
    version,
    about = "Plan and simulate multiscale computing applications"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug)]
struct ModelArgs {
    /// Model description file (MMD)
    model: PathBuf,
    /// Instance counts for dynamic submodels, e.g. --instances pore=8
    #[arg(long, value_name = "SUB=N", value_delimiter = ',')]
    instances: Vec<String>,
}

#[derive(Args, Debug)]
struct PlanArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Performance sidecar file (perf <ref> <kind> ... lines)
    #[arg(long)]
    perf: PathBuf,
    /// Machine description file (key=value lines)
    #[arg(long)]
    machine: PathBuf,
    /// Force a pattern (ES, HMC, RC-static, RC-dynamic, RC-exchange)
    /// instead of classifying
    #[arg(long)]
    pattern: Option<String>,
    /// Cost-share threshold for ES classification
    #[arg(long, default_value_t = DEFAULT_THETA_ES)]
    theta_es: f64,
    /// Aux-to-primary time ratio below which interleaving is skipped
    #[arg(long, default_value_t = DEFAULT_R_SEQ)]
    r_seq: f64,
    /// Fractional period stretch allowed when downclocking for energy
    #[arg(long, default_value_t = 0.0)]
    slack_tol: f64,
    /// RC quality threshold: surviving replica fraction that must remain
    #[arg(long, default_value_t = 0.9)]
    q: f64,
    /// Keep an HMC micro slot warm even with no expected micro tasks
    #[arg(long)]
    precompute: bool,
    /// Force the ES execution mode (sequential or interleaved)
    #[arg(long)]
    mode: Option<String>,
    /// Cores per RC replica task
    #[arg(long, default_value_t = 1)]
    replica_cores: u32,
    /// Abort a simulation when one task fails this many times
    #[arg(long, default_value_t = 10)]
    max_retries: u32,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Parse and validate a model; diagnostics carry line numbers
    Validate {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Unfold the model into a task graph; print node/edge counts
    Graph {
        #[command(flatten)]
        model: ModelArgs,
        /// Number of coupled cycles to unfold
        #[arg(long, default_value_t = 1)]
        cycles: u32,
        /// Write Graphviz DOT to this file ("-" for stdout)
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Classify the model, build an execution plan, print its summary
    Plan {
        #[command(flatten)]
        args: PlanArgs,
        /// Number of coupled cycles to plan for
        #[arg(long, default_value_t = 1)]
        cycles: u32,
        /// Directory for the manifest and launch documents
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plan, then execute with stochastic fault injection
    Simulate {
        #[command(flatten)]
        args: PlanArgs,
        /// Number of coupled cycles (jobs) to run
        #[arg(long, default_value_t = 1)]
        jobs: u32,
        /// Failure sampling seed
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the full JSON report to this file
        #[arg(long)]
        report: Option<PathBuf>,
        /// Print the JSON report instead of the one-line summary
        #[arg(long)]
        json: bool,
    },
    /// Re-plan and simulate across a parameter range; CSV output
    Sweep {
        #[command(flatten)]
        args: PlanArgs,
        /// P=<lo>..<hi>, f=<v,...> (values in (0,1]), or lambda=<v,...>
        #[arg(long)]
        param: String,
        /// Number of coupled cycles per point
        #[arg(long, default_value_t = 1)]
        jobs: u32,
        /// Failure sampling seed
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write CSV to this file instead of stdout
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Failure { code, message: message.into() }
    }
}

type CmdResult = Result<(), Failure>;

/// Entry point for the binary; returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // help/version exit 0; usage errors match the I/O-or-syntax code
            let code = if e.exit_code() == 0 { 0 } else { 2 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.cmd {
        Cmd::Validate { model } => cmd_validate(&model),
        Cmd::Graph { model, cycles, dot } => cmd_graph(&model, cycles, dot.as_deref()),
        Cmd::Plan { args, cycles, out } => cmd_plan(&args, cycles, out.as_deref()),
        Cmd::Simulate { args, jobs, seed, report, json } => {
            cmd_simulate(&args, jobs, seed, report.as_deref(), json)
        }
        Cmd::Sweep { args, param, jobs, seed, csv } => {
            cmd_sweep(&args, &param, jobs, seed, csv.as_deref())
        }
    };
    match outcome {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::new(2, format!("cannot read {}: {e}", path.display())))
}

fn parse_instances(specs: &[String]) -> Result<BTreeMap<String, u32>, Failure> {
    let mut out = BTreeMap::new();
    for spec in specs {
        let (name, count) = spec
            .split_once('=')
            .ok_or_else(|| Failure::new(2, format!("bad --instances entry `{spec}`, want SUB=N")))?;
        let n: u32 = count
            .parse()
            .map_err(|_| Failure::new(2, format!("bad instance count in `{spec}`")))?;
        out.insert(name.to_string(), n);
    }
    Ok(out)
}

fn load_model(args: &ModelArgs) -> Result<(MultiscaleModel, SourceMap), Failure> {
    let text = read_file(&args.model)?;
    parse_model_with_map(&text).map_err(|e| {
        Failure::new(
            2,
            format!("{}:{}:{}: {}", args.model.display(), e.line, e.column, e.message),
        )
    })
}

/// Prints validation diagnostics (line-addressed) and the deadlock check to
/// standard error. An invalid model is exit code 1.
fn check_model(m: &MultiscaleModel, map: &SourceMap, path: &Path) -> CmdResult {
    let diags = validate_model(m);
    if !diags.is_empty() {
        for d in &diags {
            let line = match &d.subject {
                Subject::Model => map.model_line,
                Subject::Submodel(id) => map.submodel_lines.get(id).copied().unwrap_or(0),
                Subject::Coupling(i) => map.coupling_lines.get(*i).copied().unwrap_or(0),
            };
            eprintln!("{}:{}: {}", path.display(), line, d.message);
        }
        return Err(Failure::new(1, format!("model failed validation ({} problems)", diags.len())));
    }
    if let DeadlockCheck::Deadlock { cycle } = detect_deadlock(m) {
        return Err(Failure::new(
            1,
            format!("coupling deadlock: cycle {} has no entry point", cycle.join(" -> ")),
        ));
    }
    Ok(())
}

fn cmd_validate(args: &ModelArgs) -> CmdResult {
    let (m, map) = load_model(args)?;
    check_model(&m, &map, &args.model)?;
    println!("ok: model '{}' ({} submodels, {} couplings)", m.name, m.submodels.len(), m.couplings.len());
    Ok(())
}

fn cmd_graph(args: &ModelArgs, cycles: u32, dot: Option<&Path>) -> CmdResult {
    let (m, map) = load_model(args)?;
    check_model(&m, &map, &args.model)?;
    let instances = parse_instances(&args.instances)?;
    let g = unfold(&m, cycles, &instances).map_err(|e| Failure::new(1, e.to_string()))?;
    match dot {
        Some(p) if p.as_os_str() == "-" => print!("{}", to_dot(&g)),
        Some(p) => {
            fs::write(p, to_dot(&g))
                .map_err(|e| Failure::new(2, format!("cannot write {}: {e}", p.display())))?;
            println!("nodes={} edges={}", g.nodes().len(), g.edges().len());
        }
        None => println!("nodes={} edges={}", g.nodes().len(), g.edges().len()),
    }
    Ok(())
}

/// Everything `plan`, `simulate`, and `sweep` share: parsed inputs, the
/// unfolded graph, the chosen pattern with its embedding, and per-role
/// performance models.
struct Prepared {
    model: MultiscaleModel,
    graph: TaskGraph,
    embedding: PatternEmbedding,
    perf_by_ref: BTreeMap<String, PerfModel>,
    perf_by_role: BTreeMap<Role, PerfModel>,
    machine: MachineModel,
    options: PlanOptions,
}

fn submodel_costs(
    m: &MultiscaleModel,
    perf_by_ref: &BTreeMap<String, PerfModel>,
) -> Result<BTreeMap<String, f64>, Failure> {
    use crate::perf::TimeModel;
    let mut costs = BTreeMap::new();
    for s in &m.submodels {
        let reference = s.perf.as_ref().ok_or_else(|| {
            Failure::new(
                1,
                format!("submodel `{}` has no perf= reference; needed to classify by cost", s.id),
            )
        })?;
        let pm = perf_by_ref.get(reference).ok_or_else(|| {
            Failure::new(1, format!("submodel `{}` references unknown perf model `{reference}`", s.id))
        })?;
        costs.insert(s.id.clone(), pm.eval_time(1).map_err(|e| Failure::new(1, e.to_string()))?);
    }
    Ok(costs)
}

fn pick_primary(
    m: &MultiscaleModel,
    costs: Option<&BTreeMap<String, f64>>,
) -> Result<String, Failure> {
    if let Some(s) = m.submodels.iter().find(|s| s.role_hint == Some(RoleHint::Primary)) {
        return Ok(s.id.clone());
    }
    match costs {
        Some(c) => dominant_submodel(m, c)
            .map(|(id, _)| id)
            .map_err(|e| Failure::new(1, e.to_string())),
        None => Err(Failure::new(
            1,
            "cannot identify the primary submodel; add role=primary or perf references",
        )),
    }
}

fn classify_failure(e: ClassifyError) -> Failure {
    match e {
        ClassifyError::Ambiguous { .. } => Failure::new(3, e.to_string()),
        _ => Failure::new(1, e.to_string()),
    }
}

fn prepare(args: &PlanArgs, cycles: u32) -> Result<Prepared, Failure> {
    let (m, map) = load_model(&args.model)?;
    check_model(&m, &map, &args.model.model)?;
    let instances = parse_instances(&args.model.instances)?;

    let perf_text = read_file(&args.perf)?;
    let perf_by_ref = parse_perf_file(&perf_text)
        .map_err(|e| Failure::new(2, format!("{}:{}: {}", args.perf.display(), e.line, e.message)))?;
    let machine_text = read_file(&args.machine)?;
    let machine = parse_machine_file(&machine_text)
        .map_err(|e| Failure::new(2, format!("{}: {e}", args.machine.display())))?;

    let g = unfold(&m, cycles, &instances).map_err(|e| Failure::new(1, e.to_string()))?;

    let forced = match &args.pattern {
        Some(name) => Some(
            name.parse::<PatternKind>().map_err(|e| Failure::new(2, e))?,
        ),
        None => None,
    };
    let costs = if forced.is_none() || forced == Some(PatternKind::Es) {
        // Needed to classify and to pick an unhinted ES primary; both have
        // role-hint escape hatches, so failure to cost is not always fatal.
        match submodel_costs(&m, &perf_by_ref) {
            Ok(c) => Some(c),
            Err(e) if forced.is_some() => {
                let _ = e;
                None
            }
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    let kind = match forced {
        Some(k) => k,
        None => classify(&m, costs.as_ref().expect("computed above"), args.theta_es)
            .map_err(classify_failure)?,
    };

    let embedding = match kind {
        PatternKind::Es => {
            let primary = pick_primary(&m, costs.as_ref())?;
            embed_es(&g, &m, &primary).map_err(|e| Failure::new(1, e.to_string()))?
        }
        PatternKind::Hmc => embed_hmc(&g, &m).map_err(|e| Failure::new(1, e.to_string()))?,
        PatternKind::RcStatic | PatternKind::RcDynamic | PatternKind::RcExchange => {
            embed_rc(&g, &m).map_err(|e| Failure::new(1, e.to_string()))?
        }
    };

    let mut perf_by_role: BTreeMap<Role, PerfModel> = BTreeMap::new();
    for (sub, role) in &embedding.role_of {
        let s = m.submodel(sub).expect("embedding names model submodels");
        let Some(reference) = s.perf.as_ref() else { continue };
        let pm = perf_by_ref.get(reference).ok_or_else(|| {
            Failure::new(1, format!("submodel `{sub}` references unknown perf model `{reference}`"))
        })?;
        if let Some(prev) = perf_by_role.get(role) {
            if prev != pm {
                return Err(Failure::new(
                    1,
                    format!("role {role} maps to conflicting performance models"),
                ));
            }
        }
        perf_by_role.insert(*role, pm.clone());
    }

    let mode_override = match args.mode.as_deref() {
        None => None,
        Some("sequential") => Some(ExecMode::Sequential),
        Some("interleaved") => Some(ExecMode::Interleaved),
        Some(other) => {
            return Err(Failure::new(2, format!("unknown mode `{other}`, want sequential or interleaved")))
        }
    };
    let options = PlanOptions {
        r_seq: args.r_seq,
        slack_tol: args.slack_tol,
        q: args.q,
        precompute: args.precompute,
        mode_override,
        max_retries: args.max_retries,
        replica_cores: args.replica_cores,
    };

    Ok(Prepared { model: m, graph: g, embedding, perf_by_ref, perf_by_role, machine, options })
}

fn make_plan(p: &Prepared) -> Result<ExecutionPlan, Failure> {
    build_plan(&p.embedding, &p.graph, &p.perf_by_role, &p.machine, &p.options)
        .map_err(|e| Failure::new(1, e.to_string()))
}

/// Per-role serial stacks over every cycle instance, for the efficiency
/// summary. Returns (primary stack, auxiliary stack).
fn efficiency_stacks<'a>(
    p: &'a Prepared,
) -> (SerialStack<'a>, SerialStack<'a>) {
    let mut counts: BTreeMap<&str, BTreeMap<u32, ()>> = BTreeMap::new();
    for n in p.graph.nodes() {
        if n.phase == Phase::Cycle {
            counts.entry(n.submodel.as_str()).or_default().insert(n.instance, ());
        }
    }
    let mut pr = Vec::new();
    let mut aux = Vec::new();
    for (sub, role) in &p.embedding.role_of {
        let Some(s) = p.model.submodel(sub) else { continue };
        let Some(reference) = s.perf.as_ref() else { continue };
        let Some(pm) = p.perf_by_ref.get(reference) else { continue };
        let n = counts.get(sub.as_str()).map_or(0, |m| m.len());
        let bucket: &mut Vec<&PerfModel> = match role {
            Role::Primary => &mut pr,
            Role::SerialAux | Role::ParallelAux => &mut aux,
            _ => continue,
        };
        for _ in 0..n.max(if *role == Role::Primary { 1 } else { 0 }) {
            bucket.push(pm);
        }
    }
    (SerialStack::new(pr), SerialStack::new(aux))
}

fn plan_summary(p: &Prepared, plan: &ExecutionPlan) -> String {
    let mut line = format!("pattern={} mode={}", plan.pattern, plan.mode);
    match plan.pattern {
        PatternKind::Es => {
            if let Some(es) = &plan.es {
                let _ = write!(line, " P1={} P2={}", es.p1, es.p2);
            } else {
                let _ = write!(line, " P={}", plan.allocated_cores());
            }
            let _ = write!(line, " period={}", plan.period);
            let (pr, aux) = efficiency_stacks(p);
            if !pr.is_empty() {
                if let Ok(eff) = es_efficiency(&pr, &aux, p.machine.total_cores()) {
                    let _ = write!(
                        line,
                        " efficiency_exact={} efficiency_eq2={}",
                        eff.exact, eff.approx
                    );
                }
            }
        }
        PatternKind::Hmc => {
            let _ = write!(line, " period={}", plan.period);
        }
        PatternKind::RcStatic | PatternKind::RcDynamic | PatternKind::RcExchange => {
            let n = plan.replica_slots.len();
            let mut distinct: Vec<_> = plan.replica_slots.values().collect();
            distinct.sort();
            distinct.dedup();
            let slots = distinct.len().max(1);
            let _ = write!(
                line,
                " replicas={n} slots={slots} waves={} period={}",
                n.div_ceil(slots),
                plan.period
            );
        }
    }
    line
}

fn cmd_plan(args: &PlanArgs, cycles: u32, out: Option<&Path>) -> CmdResult {
    let p = prepare(args, cycles)?;
    let plan = make_plan(&p)?;
    println!("{}", plan_summary(&p, &plan));
    if let Some(dir) = out {
        fs::create_dir_all(dir)
            .map_err(|e| Failure::new(2, format!("cannot create {}: {e}", dir.display())))?;
        let docs = emit_middleware_config(&plan);
        let count = docs.len();
        for (name, text) in docs {
            let path = dir.join(&name);
            fs::write(&path, text)
                .map_err(|e| Failure::new(2, format!("cannot write {}: {e}", path.display())))?;
        }
        eprintln!("wrote {count} launch documents to {}", dir.display());
    }
    Ok(())
}

fn cmd_simulate(
    args: &PlanArgs,
    jobs: u32,
    seed: u64,
    report_path: Option<&Path>,
    json: bool,
) -> CmdResult {
    let p = prepare(args, jobs)?;
    let plan = make_plan(&p)?;
    let report = simulate(&plan, &p.graph, &p.perf_by_role, &p.machine, seed).map_err(|e| {
        let code = if matches!(e, SimError::Livelock { .. }) { 4 } else { 1 };
        Failure::new(code, e.to_string())
    })?;
    if let Some(path) = report_path {
        fs::write(path, report.to_json())
            .map_err(|e| Failure::new(2, format!("cannot write {}: {e}", path.display())))?;
    }
    if json {
        print!("{}", report.to_json());
    } else {
        println!(
            "makespan={} energy={} efficiency={} failures={}",
            report.makespan,
            report.energy_joules,
            report.efficiency_observed,
            report.failures.len()
        );
    }
    Ok(())
}

enum SweepParam {
    Cores(Vec<u32>),
    Frequency(Vec<f64>),
    Lambda(Vec<f64>),
}

fn parse_sweep_param(spec: &str) -> Result<SweepParam, Failure> {
    let bad = |msg: String| Failure::new(2, msg);
    let (name, rest) = match spec.split_once('=') {
        Some((n, r)) => (n, Some(r)),
        None => (spec, None),
    };
    match (name, rest) {
        ("P", Some(r)) => {
            let (lo, hi) = r
                .split_once("..")
                .ok_or_else(|| bad(format!("bad P range `{r}`, want lo..hi")))?;
            let lo: u32 = lo.parse().map_err(|_| bad(format!("bad P bound `{lo}`")))?;
            let hi: u32 = hi.parse().map_err(|_| bad(format!("bad P bound `{hi}`")))?;
            if lo < 1 || hi < lo {
                return Err(bad(format!("empty P range {lo}..{hi}")));
            }
            Ok(SweepParam::Cores((lo..=hi).collect()))
        }
        ("f", Some(r)) => {
            let mut vals = Vec::new();
            for tok in r.split(',') {
                let f: f64 = tok.parse().map_err(|_| bad(format!("bad frequency `{tok}`")))?;
                if !(f > 0.0 && f <= 1.0) {
                    return Err(bad(format!("frequency {f} outside (0, 1]")));
                }
                vals.push(f);
            }
            Ok(SweepParam::Frequency(vals))
        }
        ("lambda", Some(r)) => {
            let mut vals = Vec::new();
            for tok in r.split(',') {
                let l: f64 = tok.parse().map_err(|_| bad(format!("bad lambda `{tok}`")))?;
                if !(l >= 0.0) {
                    return Err(bad(format!("lambda {l} must be nonnegative")));
                }
                vals.push(l);
            }
            Ok(SweepParam::Lambda(vals))
        }
        _ => Err(bad(format!(
            "unknown sweep parameter `{spec}`; want P=lo..hi, f=v[,v...], or lambda=v[,v...]"
        ))),
    }
}

fn cmd_sweep(
    args: &PlanArgs,
    param: &str,
    jobs: u32,
    seed: u64,
    csv: Option<&Path>,
) -> CmdResult {
    let sweep = parse_sweep_param(param)?;
    let base = prepare(args, jobs)?;
    if base.embedding.kind != PatternKind::Es {
        return Err(Failure::new(
            1,
            format!("sweep handles ES models; this one classified as {}", base.embedding.kind),
        ));
    }

    let mut out = String::from("param,mode,period,makespan,energy,efficiency_exact,efficiency_eq2\n");
    let mut emit_row = |param_text: String,
                        p: &Prepared,
                        plan: &ExecutionPlan,
                        machine: &MachineModel|
     -> Result<(), Failure> {
        let report = simulate(plan, &p.graph, &p.perf_by_role, machine, seed).map_err(|e| {
            let code = if matches!(e, SimError::Livelock { .. }) { 4 } else { 1 };
            Failure::new(code, e.to_string())
        })?;
        let (pr, aux) = efficiency_stacks(p);
        let eff = es_efficiency(&pr, &aux, machine.total_cores())
            .map_err(|e| Failure::new(1, e.to_string()))?;
        let _ = writeln!(
            out,
            "{param_text},{},{},{},{},{},{}",
            plan.mode, plan.period, report.makespan, report.energy_joules, eff.exact, eff.approx
        );
        Ok(())
    };

    match sweep {
        SweepParam::Cores(values) => {
            for p_total in values {
                // Reliability classes are tied to the base topology; a core
                // sweep rebuilds the machine as P uniform single-core nodes.
                let machine = MachineModel::new(
                    p_total,
                    1,
                    base.machine.energy.clone(),
                    base.machine.lambda_core,
                    Vec::new(),
                )
                .map_err(|e| Failure::new(1, e.to_string()))?;
                let p = Prepared { machine, ..clone_prepared(&base) };
                let plan = make_plan(&p)?;
                emit_row(p_total.to_string(), &p, &plan, &p.machine)?;
            }
        }
        SweepParam::Frequency(values) => {
            let plan = make_plan(&base)?;
            for f in values {
                let mut forced = plan.clone();
                for a in forced.assignments.values_mut() {
                    a.frequency = f;
                }
                forced.period = plan.period / f;
                emit_row(f.to_string(), &base, &forced, &base.machine)?;
            }
        }
        SweepParam::Lambda(values) => {
            for lambda in values {
                let machine = MachineModel::new(
                    base.machine.nodes,
                    base.machine.cores_per_node,
                    base.machine.energy.clone(),
                    lambda,
                    base.machine.reliability.clone(),
                )
                .map_err(|e| Failure::new(1, e.to_string()))?;
                let p = Prepared { machine, ..clone_prepared(&base) };
                let plan = make_plan(&p)?;
                emit_row(lambda.to_string(), &p, &plan, &p.machine)?;
            }
        }
    }

    match csv {
        Some(path) => fs::write(path, out)
            .map_err(|e| Failure::new(2, format!("cannot write {}: {e}", path.display())))?,
        None => print!("{out}"),
    }
    Ok(())
}

fn clone_prepared(p: &Prepared) -> Prepared {
    Prepared {
        model: p.model.clone(),
        graph: p.graph.clone(),
        embedding: p.embedding.clone(),
        perf_by_ref: p.perf_by_ref.clone(),
        perf_by_role: p.perf_by_role.clone(),
        machine: p.machine.clone(),
        options: p.options.clone(),
    }
}
