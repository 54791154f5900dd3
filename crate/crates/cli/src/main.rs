//! `bipkit`: check, instantiate, encode, run and cross-check `.bip` models.
//!
//! Exit codes: 0 ok, 1 validation or encodability failure, 2 parse error,
//! 3 capacity or livelock, 4 usage or I/O error.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bipkit::diagram::{self, DiagramError, EncodabilityReport, EndReport, DEFAULT_MAX_NODES};
use bipkit::dsl::parse_model_bytes;
use bipkit::encoder;
use bipkit::engine::{self, AllowedSource, EngineConfig, EngineError, EventScript, Policy, DEFAULT_MAX_CYCLES};
use bipkit::logic::LogicError;
use bipkit::model::validate::{has_errors, validate_model, ValidationIssue};
use bipkit::model::CardExpr;
use bipkit::{ArchitectureDiagram, Binding, Configuration};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

const OK: u8 = 0;
const INVALID: u8 = 1;
const PARSE: u8 = 2;
const CAPACITY: u8 = 3;
const USAGE: u8 = 4;

/// Upper bound on oracle sweep points, independent of the node cap.
const MAX_SWEEP_POINTS: u64 = 1_000_000;

#[derive(Parser)]
#[command(name = "bipkit", version, about = "Parameterized BIP architecture diagrams: check, instantiate, encode, run")]
struct Cli {
    /// Print machine-readable JSON on stdout instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Bindings {
    /// Parameter value, e.g. `--bind n=3` (repeatable; `n=3,m=1` also works).
    #[arg(long = "bind", value_name = "NAME=VALUE")]
    bind: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a model; with every parameter bound, also check encodability.
    Check {
        file: PathBuf,
        #[command(flatten)]
        bindings: Bindings,
    },
    /// List the configurations a diagram denotes under a binding.
    Instantiate {
        file: PathBuf,
        #[command(flatten)]
        bindings: Bindings,
        /// Stop after this many configurations.
        #[arg(long, default_value_t = 1000)]
        limit: usize,
    },
    /// Generate Require/Accept macros, glue XML or behavior JSON.
    Encode {
        file: PathBuf,
        #[command(flatten)]
        bindings: Bindings,
        #[arg(long, value_enum, default_value_t = Format::Macros)]
        format: Format,
        /// Write the artifact here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overwrite an existing `--out` file.
        #[arg(long)]
        force: bool,
    },
    /// Execute the instantiated system and record a trace.
    Run {
        file: PathBuf,
        #[command(flatten)]
        bindings: Bindings,
        #[arg(long, default_value_t = 10)]
        cycles: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Event script (JSON) feeding spontaneous events and guard values.
        #[arg(long, value_name = "SCRIPT")]
        events: Option<PathBuf>,
        /// uniform-random or lexicographic-first.
        #[arg(long, default_value_t = Policy::UniformRandom)]
        policy: Policy,
        #[arg(long, value_enum, default_value_t = Source::Diagram)]
        source: Source,
        /// Write the trace here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
    /// Compare enumeration against the uniqueness conditions, point by point.
    Oracle {
        file: PathBuf,
        #[command(flatten)]
        bindings: Bindings,
        /// Parameter classes and bound, e.g. "n,m,d<=3": every unbound
        /// cardinality (n), multiplicity (m) or degree (d) ranges over 1..=K.
        #[arg(long)]
        sweep: Option<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Macros,
    Xml,
    BehaviorJson,
}

#[derive(Clone, Copy, ValueEnum)]
enum Source {
    Diagram,
    Macros,
}

/// A failure to report on stderr, with its exit code. An empty message
/// means the details were already printed.
struct Fail {
    code: u8,
    msg: String,
}

impl Fail {
    fn new(code: u8, msg: impl Into<String>) -> Self {
        Fail { code, msg: msg.into() }
    }

    fn quiet(code: u8) -> Self {
        Fail { code, msg: String::new() }
    }
}

impl From<DiagramError> for Fail {
    fn from(e: DiagramError) -> Self {
        let code = match e {
            DiagramError::Unbound(_) => USAGE,
            DiagramError::Capacity { .. } => CAPACITY,
            _ => INVALID,
        };
        Fail::new(code, e.to_string())
    }
}

impl From<EngineError> for Fail {
    fn from(e: EngineError) -> Self {
        let code = match &e {
            EngineError::Diagram(d) => return Fail::from(d.clone()),
            EngineError::Logic(LogicError::Capacity { .. }) => CAPACITY,
            EngineError::Livelock { .. } | EngineError::TooManyCycles { .. } => CAPACITY,
            EngineError::Script(_) => USAGE,
            _ => INVALID,
        };
        Fail::new(code, e.to_string())
    }
}

type Outcome = Result<u8, Fail>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { OK });
        }
    };
    let json = cli.json;
    let outcome = match cli.command {
        Command::Check { file, bindings } => cmd_check(&file, &bindings, json),
        Command::Instantiate { file, bindings, limit } => cmd_instantiate(&file, &bindings, limit, json),
        Command::Encode { file, bindings, format, out, force } => cmd_encode(&file, &bindings, format, out.as_deref(), force, json),
        Command::Run { file, bindings, cycles, seed, events, policy, source, out, force } => {
            let cfg = EngineConfig { cycles, seed, policy, max_cycles: DEFAULT_MAX_CYCLES };
            let source = match source {
                Source::Diagram => AllowedSource::Diagram,
                Source::Macros => AllowedSource::Macros,
            };
            cmd_run(&file, &bindings, &cfg, events.as_deref(), source, out.as_deref(), force, json)
        }
        Command::Oracle { file, bindings, sweep } => cmd_oracle(&file, &bindings, sweep.as_deref(), json),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            if !f.msg.is_empty() {
                eprintln!("bipkit: error: {}", f.msg);
            }
            ExitCode::from(f.code)
        }
    }
}

// ---------------------------------------------------------------------------
// shared plumbing

struct Loaded {
    name: String,
    diagram: ArchitectureDiagram,
    issues: Vec<ValidationIssue>,
}

/// Read, parse and validate. Parse errors are printed here.
fn load(path: &Path) -> Result<Loaded, Fail> {
    let name = path.display().to_string();
    let bytes = fs::read(path).map_err(|e| Fail::new(USAGE, format!("cannot read {name}: {e}")))?;
    let diagram = parse_model_bytes(&bytes).map_err(|errs| {
        for e in errs {
            eprintln!("{name}:{}: error: expected {}, found {}", e.span, e.expected, e.found);
        }
        Fail::quiet(PARSE)
    })?;
    let issues = validate_model(&diagram);
    Ok(Loaded { name, diagram, issues })
}

fn issue_line(file: &str, i: &ValidationIssue) -> String {
    if i.span.is_unknown() {
        format!("{file}: {i}")
    } else {
        format!("{file}:{}: {i}", i.span)
    }
}

/// Commands other than `check` refuse invalid models; warnings go to stderr.
fn load_valid(path: &Path) -> Result<Loaded, Fail> {
    let l = load(path)?;
    for i in &l.issues {
        eprintln!("{}", issue_line(&l.name, i));
    }
    if has_errors(&l.issues) {
        return Err(Fail::new(INVALID, format!("{} has validation errors", l.name)));
    }
    Ok(l)
}

fn parse_bindings(b: &Bindings) -> Result<Binding, Fail> {
    let mut out = Binding::new();
    for arg in &b.bind {
        let part: Binding = arg.parse().map_err(|e| Fail::new(USAGE, format!("--bind {arg}: {e}")))?;
        out.0.extend(part.0);
    }
    Ok(out)
}

fn full_binding(d: &ArchitectureDiagram, b: &Bindings) -> Result<Binding, Fail> {
    let binding = parse_bindings(b)?;
    let missing = binding.missing(d);
    if !missing.is_empty() {
        return Err(Fail::new(USAGE, format!("unbound parameters: {} (pass --bind NAME=VALUE)", missing.join(", "))));
    }
    Ok(binding)
}

fn max_nodes() -> Result<u64, Fail> {
    match std::env::var("BIPKIT_MAX_NODES") {
        Ok(v) => v.trim().parse().map_err(|_| Fail::new(USAGE, format!("BIPKIT_MAX_NODES: `{v}` is not a number"))),
        Err(_) => Ok(DEFAULT_MAX_NODES),
    }
}

/// Write `text` to `path`, refusing to replace an existing file unless forced.
fn write_out(path: &Path, text: &str, force: bool) -> Result<(), Fail> {
    let shown = path.display();
    let mut file = if force {
        fs::File::create(path)
    } else {
        fs::OpenOptions::new().write(true).create_new(true).open(path)
    }
    .map_err(|e| match e.kind() {
        std::io::ErrorKind::AlreadyExists => Fail::new(USAGE, format!("{shown} exists; pass --force to overwrite")),
        _ => Fail::new(USAGE, format!("cannot write {shown}: {e}")),
    })?;
    file.write_all(text.as_bytes()).map_err(|e| Fail::new(USAGE, format!("cannot write {shown}: {e}")))
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("JSON values always serialize"));
}

fn plural(n: usize, word: &str) -> String {
    if n == 1 {
        format!("1 {word}")
    } else {
        format!("{n} {word}s")
    }
}

// ---------------------------------------------------------------------------
// check

fn cmd_check(path: &Path, b: &Bindings, json: bool) -> Outcome {
    let l = load(path)?;
    let binding = parse_bindings(b)?;
    let missing = binding.missing(&l.diagram);
    if !b.bind.is_empty() && !missing.is_empty() {
        return Err(Fail::new(USAGE, format!("unbound parameters: {}", missing.join(", "))));
    }
    let invalid = has_errors(&l.issues);
    let report = if invalid || !missing.is_empty() {
        None
    } else {
        Some(diagram::check_encodable(&l.diagram, &binding)?)
    };

    if json {
        let issues: Vec<Value> = l
            .issues
            .iter()
            .map(|i| {
                json!({
                    "severity": i.severity.to_string(),
                    "code": i.code.as_str(),
                    "message": i.message,
                    "location": i.location.to_string(),
                    "line": i.span.start_line,
                    "column": i.span.start_col,
                })
            })
            .collect();
        print_json(&json!({
            "file": l.name,
            "issues": issues,
            "binding": binding.0,
            "encodability": report.as_ref().map(report_json),
        }));
    } else {
        for i in &l.issues {
            println!("{}", issue_line(&l.name, i));
        }
        if invalid {
            println!("{}: {}", l.name, plural(l.issues.iter().filter(|i| i.is_error()).count(), "error"));
        } else if let Some(r) = &report {
            print_report(r, &binding);
        } else {
            println!("{}: valid; bind {} to check encodability", l.name, missing.join(", "));
        }
    }

    let encodable = report.as_ref().is_none_or(|r| r.overall);
    Ok(if invalid || !encodable { INVALID } else { OK })
}

fn end_verdicts(e: &EndReport) -> (String, String) {
    let c1 = if e.condition1 { "ok".to_string() } else { format!("FAIL (m={} > n={})", e.m, e.n) };
    let s = e.s.map_or_else(|| "-".to_string(), |r| r.to_string());
    let c2 = if e.condition2 { "ok".to_string() } else { format!("FAIL (s={s}, required {})", e.max_connectors) };
    (c1, c2)
}

fn print_report(r: &EncodabilityReport, b: &Binding) {
    let header = ["end", "typing", "n", "m", "d", "s", "max", "m<=n", "s=max"];
    for m in &r.motifs {
        let rows: Vec<[String; 9]> = m
            .ends
            .iter()
            .map(|e| {
                let (c1, c2) = end_verdicts(e);
                [
                    e.port.to_string(),
                    e.typing.to_string(),
                    e.n.to_string(),
                    e.m.to_string(),
                    e.d.to_string(),
                    e.s.map_or_else(|| "-".to_string(), |r| r.to_string()),
                    e.max_connectors.to_string(),
                    c1,
                    c2,
                ]
            })
            .collect();
        let mut widths = header.map(str::len);
        for row in &rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let line = |cells: &[&str]| {
            let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
            println!("  {}", padded.join("  ").trim_end());
        };
        println!("motif {}: {}", m.motif, if m.unique() { "unique configuration" } else { "not encodable" });
        line(&header);
        for row in &rows {
            line(&row.iter().map(String::as_str).collect::<Vec<_>>());
        }
        if m.unique() && !m.macro_exact {
            println!("  note: trigger with 1 < m < n; the Require/Accept macros admit extra interactions");
        }
    }
    let verdict = if r.overall { "encodable" } else { "not encodable" };
    println!("{verdict} under {b}");
}

fn report_json(r: &EncodabilityReport) -> Value {
    let motifs: Vec<Value> = r
        .motifs
        .iter()
        .map(|m| {
            let ends: Vec<Value> = m
                .ends
                .iter()
                .map(|e| {
                    json!({
                        "port": e.port.to_string(),
                        "typing": e.typing.to_string(),
                        "n": e.n,
                        "m": e.m,
                        "d": e.d,
                        "s": e.s.map(|r| r.to_string()),
                        "maxConnectors": e.max_connectors.to_string(),
                        "condition1": e.condition1,
                        "condition2": e.condition2,
                    })
                })
                .collect();
            json!({ "motif": m.motif, "unique": m.unique(), "macroExact": m.macro_exact, "ends": ends })
        })
        .collect();
    json!({ "overall": r.overall, "motifs": motifs })
}

// ---------------------------------------------------------------------------
// instantiate

fn configuration_json(c: &Configuration) -> Value {
    let mut groups = serde_json::Map::new();
    for g in &c.groups {
        let conns: Vec<Vec<String>> = g.connectors.iter().map(|k| k.ports().map(|p| p.to_string()).collect()).collect();
        groups.insert(g.motif.clone(), json!(conns));
    }
    Value::Object(groups)
}

fn cmd_instantiate(path: &Path, b: &Bindings, limit: usize, json: bool) -> Outcome {
    let l = load_valid(path)?;
    let binding = full_binding(&l.diagram, b)?;
    let e = diagram::enumerate_diagram(&l.diagram, &binding, limit, max_nodes()?)?;
    if json {
        print_json(&json!({
            "model": l.diagram.name,
            "binding": binding.0,
            "configurations": e.configurations.iter().map(configuration_json).collect::<Vec<_>>(),
            "count": e.configurations.len(),
            "truncated": e.truncated,
        }));
        return Ok(OK);
    }
    for (i, c) in e.configurations.iter().enumerate() {
        println!("configuration {} ({}):", i + 1, plural(c.connector_count(), "connector"));
        for g in &c.groups {
            let conns: Vec<String> = g.connectors.iter().map(|k| k.to_string()).collect();
            println!("  {}: {}", g.motif, conns.join(" "));
        }
    }
    let mut footer = plural(e.configurations.len(), "configuration");
    if e.truncated {
        footer.push_str(&format!(" (truncated at --limit {limit})"));
    }
    println!("{footer}");
    Ok(OK)
}

// ---------------------------------------------------------------------------
// encode

fn cmd_encode(path: &Path, b: &Bindings, format: Format, out: Option<&Path>, force: bool, json: bool) -> Outcome {
    let l = load_valid(path)?;
    let d = &l.diagram;
    let binding = parse_bindings(b)?;
    let text = match format {
        Format::BehaviorJson => encoder::export_behavior_json(&d.component_types),
        Format::Macros | Format::Xml => {
            let spec = encoder::encode_macros_with(d, &binding)?;
            warn_macro_fidelity(d, &binding)?;
            match format {
                Format::Macros => encoder::emit_macros_text(&spec),
                _ => encoder::emit_xml(&spec),
            }
        }
    };
    match out {
        Some(p) => {
            write_out(p, &text, force)?;
            if json {
                print_json(&json!({ "artifacts": [p.display().to_string()] }));
            } else {
                println!("{}", p.display());
            }
        }
        None => print!("{text}"),
    }
    Ok(OK)
}

/// Warn when the emitted macros may not denote the diagram's interactions:
/// under a full binding this is decided exactly, otherwise any motif mixing
/// a trigger with a non-unit multiplicity is flagged.
fn warn_macro_fidelity(d: &ArchitectureDiagram, b: &Binding) -> Result<(), Fail> {
    if b.missing(d).is_empty() {
        let r = diagram::check_encodable(d, b)?;
        for m in &r.motifs {
            if !m.unique() {
                eprintln!("warning: motif `{}` has no unique configuration under {b}; the macros do not describe its meaning", m.motif);
            } else if !m.macro_exact {
                eprintln!("warning: motif `{}` combines a trigger with 1 < m < n under {b}; the macros allow interactions its connectors do not", m.motif);
            }
        }
    } else {
        for m in &d.motifs {
            let non_unit = m.ends.iter().any(|e| e.multiplicity != CardExpr::Literal(1));
            if m.has_trigger() && non_unit {
                eprintln!("warning: motif `{}` combines a trigger with a multiplicity that may exceed 1; the macros are exact only when each multiplicity is 1 or the full cardinality", m.name);
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// run

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    path: &Path,
    b: &Bindings,
    cfg: &EngineConfig,
    events: Option<&Path>,
    source: AllowedSource,
    out: Option<&Path>,
    force: bool,
    json: bool,
) -> Outcome {
    let l = load_valid(path)?;
    let binding = full_binding(&l.diagram, b)?;
    let script = match events {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Fail::new(USAGE, format!("cannot read {}: {e}", p.display())))?;
            EventScript::from_json(&text).map_err(|e| Fail::new(USAGE, format!("{}: {e}", p.display())))?
        }
        None => EventScript::default(),
    };
    if let Some(p) = out {
        if p.exists() && !force {
            return Err(Fail::new(USAGE, format!("{} exists; pass --force to overwrite", p.display())));
        }
    }
    let trace = engine::run(&l.diagram, &binding, cfg, &script, source)?;
    let text = trace.to_json();
    if let Some(p) = out {
        write_out(p, &text, force)?;
    }
    if json {
        print!("{text}");
        return Ok(OK);
    }
    println!(
        "{} run, {} fired, {} idle",
        plural(trace.cycles.len(), "cycle"),
        plural(trace.fired_interactions(), "interaction"),
        plural(trace.idle_cycles(), "cycle"),
    );
    match out {
        Some(p) => println!("trace written to {}", p.display()),
        None => println!("trace not saved (pass --out FILE or --json)"),
    }
    Ok(OK)
}

// ---------------------------------------------------------------------------
// oracle

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum ParamClass {
    Cardinality,
    Multiplicity,
    Degree,
}

struct Sweep {
    classes: BTreeSet<ParamClass>,
    bound: u64,
}

fn parse_sweep(text: &str) -> Result<Sweep, Fail> {
    let bad = || Fail::new(USAGE, format!("--sweep `{text}`: expected e.g. \"n,m,d<=3\""));
    let (names, bound) = text.split_once("<=").ok_or_else(bad)?;
    let bound: u64 = bound.trim().parse().map_err(|_| bad())?;
    if bound == 0 {
        return Err(bad());
    }
    let mut classes = BTreeSet::new();
    for name in names.split(',').map(str::trim) {
        classes.insert(match name {
            "n" => ParamClass::Cardinality,
            "m" => ParamClass::Multiplicity,
            "d" => ParamClass::Degree,
            _ => return Err(bad()),
        });
    }
    Ok(Sweep { classes, bound })
}

fn param_classes(d: &ArchitectureDiagram) -> BTreeMap<String, BTreeSet<ParamClass>> {
    let mut out: BTreeMap<String, BTreeSet<ParamClass>> = BTreeMap::new();
    let mut note = |e: &CardExpr, c: ParamClass| {
        if let CardExpr::Param(p) = e {
            out.entry(p.clone()).or_default().insert(c);
        }
    };
    for ct in &d.component_types {
        note(&ct.cardinality, ParamClass::Cardinality);
    }
    for m in &d.motifs {
        for e in &m.ends {
            note(&e.multiplicity, ParamClass::Multiplicity);
            note(&e.degree, ParamClass::Degree);
        }
    }
    out
}

struct Point {
    binding: Binding,
    count: usize,
    unique: bool,
}

impl Point {
    fn agrees(&self) -> bool {
        self.unique == (self.count == 1)
    }
}

fn cmd_oracle(path: &Path, b: &Bindings, sweep: Option<&str>, json: bool) -> Outcome {
    let l = load_valid(path)?;
    let d = &l.diagram;
    if d.motifs.is_empty() {
        return Err(Fail::new(INVALID, format!("{} declares no connector motifs", l.name)));
    }
    let fixed = parse_bindings(b)?;
    let (swept, bound): (Vec<String>, u64) = match sweep {
        Some(text) => {
            let s = parse_sweep(text)?;
            let names = param_classes(d)
                .into_iter()
                .filter(|(name, cs)| fixed.get(name).is_none() && !cs.is_disjoint(&s.classes))
                .map(|(name, _)| name)
                .collect();
            (names, s.bound)
        }
        None => (Vec::new(), 0),
    };
    let missing: Vec<String> = fixed.missing(d).into_iter().filter(|p| !swept.contains(p)).collect();
    if !missing.is_empty() {
        return Err(Fail::new(USAGE, format!("unbound parameters outside the sweep: {}", missing.join(", "))));
    }
    let total = bound
        .max(1)
        .checked_pow(swept.len() as u32)
        .filter(|&t| t <= MAX_SWEEP_POINTS)
        .ok_or_else(|| Fail::new(CAPACITY, format!("sweep has more than {MAX_SWEEP_POINTS} points")))?;

    let cap = max_nodes()?;
    let mut points = Vec::with_capacity(total as usize);
    let mut values = vec![1u64; swept.len()];
    for _ in 0..total {
        let mut binding = fixed.clone();
        for (name, v) in swept.iter().zip(&values) {
            binding.set(name.clone(), *v);
        }
        let unique = diagram::check_encodable(d, &binding)?.overall;
        let count = diagram::enumerate_diagram(d, &binding, usize::MAX, cap)?.configurations.len();
        points.push(Point { binding, count, unique });
        // Odometer over 1..=bound, last parameter fastest.
        for v in values.iter_mut().rev() {
            if *v < bound {
                *v += 1;
                break;
            }
            *v = 1;
        }
    }

    let disagreements = points.iter().filter(|p| !p.agrees()).count();
    let unique = points.iter().filter(|p| p.unique).count();
    if json {
        let rows: Vec<Value> = points
            .iter()
            .map(|p| json!({ "binding": p.binding.0, "count": p.count, "unique": p.unique, "agree": p.agrees() }))
            .collect();
        print_json(&json!({ "points": rows, "unique": unique, "disagreements": disagreements }));
    } else {
        let rows: Vec<String> = points.iter().map(|p| p.binding.to_string()).collect();
        let w = rows.iter().map(String::len).max().unwrap_or(0).max("binding".len());
        println!("{:<w$}  {:>7}  {:<10}  agree", "binding", "configs", "verdict");
        for (p, label) in points.iter().zip(&rows) {
            let verdict = if p.unique { "unique" } else { "non-unique" };
            let agree = if p.agrees() { "yes" } else { "NO" };
            println!("{label:<w$}  {:>7}  {verdict:<10}  {agree}", p.count);
        }
        println!("{}, {unique} unique, {}", plural(points.len(), "point"), plural(disagreements, "disagreement"));
    }
    Ok(if disagreements == 0 { OK } else { INVALID })
}
