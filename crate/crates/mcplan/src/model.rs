//! MMD model descriptions: parsing, validation, scale separation.
//!
//! MMD is a line-oriented plain-text format. Lines are directives; `#` starts
//! a comment; blank lines are ignored. The grammar:
//!
//! ```text
//! model <name>
//! submodel <id> dt=<float><unit> total=<float><unit> dx=<float><unit> extent=<float><unit>
//!          [multiplicity=<int>|multiplicity=dynamic] [role=<hint>] [perf=<ref>]
//! couple <from> -> <to> kind=<init|per_cycle|final> [bytes=<int>]
//! pattern <ES|HMC|RC-static|RC-dynamic|RC-exchange|auto>
//! ```
//!
//! Time unit suffixes: `s`, `ms`, `us`, `d` (days). Space: `m`, `mm`, `um`.
//! All quantities are stored in base units (seconds, meters, bytes).
//! Parsing is total over the grammar: unknown directives, unknown keys and
//! duplicate keys are rejected, never skipped.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

/// A complete multiscale application description.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiscaleModel {
    pub name: String,
    pub submodels: Vec<Submodel>,
    pub couplings: Vec<Coupling>,
    pub pattern_hint: Option<PatternHint>,
}

impl MultiscaleModel {
    pub fn submodel(&self, id: &str) -> Option<&Submodel> {
        self.submodels.iter().find(|s| s.id == id)
    }
}

/// One single-scale submodel with its temporal and spatial scale box.
#[derive(Debug, Clone, PartialEq)]
pub struct Submodel {
    pub id: String,
    /// Time step in seconds, > 0.
    pub dt: f64,
    /// Total simulated time span in seconds, >= dt.
    pub t_total: f64,
    /// Grid spacing in meters, > 0.
    pub dx: f64,
    /// Spatial extent in meters, >= dx.
    pub x_total: f64,
    pub multiplicity: Multiplicity,
    pub role_hint: Option<RoleHint>,
    /// Name of a performance model in the perf sidecar file.
    pub perf: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Multiplicity {
    Fixed(u32),
    /// Instance count decided at plan time (on-the-fly spawning).
    Dynamic,
}

impl Multiplicity {
    pub fn is_dynamic(&self) -> bool {
        matches!(self, Multiplicity::Dynamic)
    }
}

impl Default for Multiplicity {
    fn default() -> Self {
        Multiplicity::Fixed(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoleHint {
    Primary,
    Auxiliary,
    Macro,
    Micro,
    Replica,
    Master,
    None,
}

impl RoleHint {
    fn as_str(&self) -> &'static str {
        match self {
            RoleHint::Primary => "primary",
            RoleHint::Auxiliary => "auxiliary",
            RoleHint::Macro => "macro",
            RoleHint::Micro => "micro",
            RoleHint::Replica => "replica",
            RoleHint::Master => "master",
            RoleHint::None => "none",
        }
    }
}

/// Pattern named in the source, if any. `Auto` requests classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatternHint {
    Auto,
    Es,
    Hmc,
    RcStatic,
    RcDynamic,
    RcExchange,
}

impl PatternHint {
    fn as_str(&self) -> &'static str {
        match self {
            PatternHint::Auto => "auto",
            PatternHint::Es => "ES",
            PatternHint::Hmc => "HMC",
            PatternHint::RcStatic => "RC-static",
            PatternHint::RcDynamic => "RC-dynamic",
            PatternHint::RcExchange => "RC-exchange",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CouplingKind {
    /// Once, before the target's loop starts.
    Init,
    /// Every iteration of the coupled loop.
    PerCycle,
    /// Once, after the source's loop completes.
    Final,
}

impl CouplingKind {
    fn as_str(&self) -> &'static str {
        match self {
            CouplingKind::Init => "init",
            CouplingKind::PerCycle => "per_cycle",
            CouplingKind::Final => "final",
        }
    }
}

impl fmt::Display for CouplingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    pub from: String,
    pub to: String,
    pub kind: CouplingKind,
    pub payload_bytes: u64,
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Error, PartialEq)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        ParseError { line, column, message: message.into() }
    }
}

/// Maps parsed entities back to their source lines, for line-addressed
/// diagnostics after validation.
#[derive(Debug, Clone, Default)]
pub struct SourceMap {
    pub model_line: usize,
    pub submodel_lines: BTreeMap<String, usize>,
    pub coupling_lines: Vec<usize>,
}

pub fn parse_model(text: &str) -> Result<MultiscaleModel, ParseError> {
    parse_model_with_map(text).map(|(m, _)| m)
}

pub fn parse_model_with_map(text: &str) -> Result<(MultiscaleModel, SourceMap), ParseError> {
    let mut name: Option<String> = None;
    let mut submodels: Vec<Submodel> = Vec::new();
    let mut couplings: Vec<Coupling> = Vec::new();
    let mut pattern_hint: Option<PatternHint> = None;
    let mut map = SourceMap::default();

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        let toks = tokenize(line);
        let Some(&(col0, word0)) = toks.first() else { continue };

        match word0 {
            "model" => {
                if name.is_some() {
                    return Err(ParseError::new(lineno, col0, "duplicate model declaration"));
                }
                let (_, id) = expect_ident(&toks, 1, lineno, "model name")?;
                expect_end(&toks, 2, lineno)?;
                name = Some(id.to_string());
                map.model_line = lineno;
            }
            "submodel" => {
                if name.is_none() {
                    return Err(ParseError::new(lineno, col0, "expected `model <name>` before other directives"));
                }
                let (_, id) = expect_ident(&toks, 1, lineno, "submodel id")?;
                if submodels.iter().any(|s| s.id == id) {
                    return Err(ParseError::new(lineno, col0, format!("duplicate submodel id `{id}`")));
                }
                let sub = parse_submodel_args(id, &toks[2..], lineno)?;
                map.submodel_lines.insert(sub.id.clone(), lineno);
                submodels.push(sub);
            }
            "couple" => {
                if name.is_none() {
                    return Err(ParseError::new(lineno, col0, "expected `model <name>` before other directives"));
                }
                let (_, from) = expect_ident(&toks, 1, lineno, "coupling source")?;
                let (acol, arrow) = tok(&toks, 2, lineno, "`->`")?;
                if arrow != "->" {
                    return Err(ParseError::new(lineno, acol, format!("expected `->`, found `{arrow}`")));
                }
                let (_, to) = expect_ident(&toks, 3, lineno, "coupling target")?;
                let c = parse_couple_args(from, to, &toks[4..], lineno)?;
                map.coupling_lines.push(lineno);
                couplings.push(c);
            }
            "pattern" => {
                if name.is_none() {
                    return Err(ParseError::new(lineno, col0, "expected `model <name>` before other directives"));
                }
                if pattern_hint.is_some() {
                    return Err(ParseError::new(lineno, col0, "duplicate pattern declaration"));
                }
                let (pcol, word) = tok(&toks, 1, lineno, "pattern name")?;
                pattern_hint = Some(match word {
                    "auto" => PatternHint::Auto,
                    "ES" => PatternHint::Es,
                    "HMC" => PatternHint::Hmc,
                    "RC-static" => PatternHint::RcStatic,
                    "RC-dynamic" => PatternHint::RcDynamic,
                    "RC-exchange" => PatternHint::RcExchange,
                    other => {
                        return Err(ParseError::new(
                            lineno,
                            pcol,
                            format!("unknown pattern `{other}` (expected ES, HMC, RC-static, RC-dynamic, RC-exchange or auto)"),
                        ))
                    }
                });
                expect_end(&toks, 2, lineno)?;
            }
            other => {
                return Err(ParseError::new(
                    lineno,
                    col0,
                    format!("unknown directive `{other}` (expected model, submodel, couple or pattern)"),
                ));
            }
        }
    }

    let Some(name) = name else {
        return Err(ParseError::new(1, 1, "missing model declaration"));
    };

    // Endpoint existence is a parse-level guarantee: a coupling may name a
    // submodel declared later in the file, so the check runs at the end.
    for (i, c) in couplings.iter().enumerate() {
        let lineno = map.coupling_lines[i];
        for end in [&c.from, &c.to] {
            if !submodels.iter().any(|s| &s.id == end) {
                return Err(ParseError::new(lineno, 1, format!("unknown coupling endpoint `{end}`")));
            }
        }
    }

    Ok((MultiscaleModel { name, submodels, couplings, pattern_hint }, map))
}

fn tokenize(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut chars = line.char_indices().peekable();
    while let Some(&(i, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        let start = i;
        let mut end = i + c.len_utf8();
        chars.next();
        while let Some(&(j, d)) = chars.peek() {
            if d.is_whitespace() {
                break;
            }
            end = j + d.len_utf8();
            chars.next();
        }
        out.push((start + 1, &line[start..end]));
    }
    out
}

fn tok<'a>(
    toks: &[(usize, &'a str)],
    i: usize,
    lineno: usize,
    what: &str,
) -> Result<(usize, &'a str), ParseError> {
    toks.get(i).copied().ok_or_else(|| {
        let col = toks.last().map(|&(c, t)| c + t.len()).unwrap_or(1);
        ParseError::new(lineno, col, format!("expected {what}"))
    })
}

fn expect_ident<'a>(
    toks: &[(usize, &'a str)],
    i: usize,
    lineno: usize,
    what: &str,
) -> Result<(usize, &'a str), ParseError> {
    let (col, word) = tok(toks, i, lineno, what)?;
    if !is_ident(word) {
        return Err(ParseError::new(lineno, col, format!("expected {what}, found `{word}`")));
    }
    Ok((col, word))
}

fn expect_end(toks: &[(usize, &str)], i: usize, lineno: usize) -> Result<(), ParseError> {
    if let Some(&(col, word)) = toks.get(i) {
        return Err(ParseError::new(lineno, col, format!("unexpected token `{word}`")));
    }
    Ok(())
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn split_kv(tokcol: usize, token: &str, lineno: usize) -> Result<(&str, &str), ParseError> {
    match token.split_once('=') {
        Some((k, v)) if !k.is_empty() && !v.is_empty() => Ok((k, v)),
        _ => Err(ParseError::new(lineno, tokcol, format!("expected key=value, found `{token}`"))),
    }
}

fn parse_submodel_args(id: &str, args: &[(usize, &str)], lineno: usize) -> Result<Submodel, ParseError> {
    let mut dt = None;
    let mut t_total = None;
    let mut dx = None;
    let mut x_total = None;
    let mut multiplicity = None;
    let mut role_hint = None;
    let mut perf = None;

    for &(col, token) in args {
        let (key, value) = split_kv(col, token, lineno)?;
        let dup = |name: &str| ParseError::new(lineno, col, format!("duplicate key `{name}`"));
        match key {
            "dt" => set(&mut dt, parse_scaled(value, TIME_UNITS, lineno, col)?, || dup("dt"))?,
            "total" => set(&mut t_total, parse_scaled(value, TIME_UNITS, lineno, col)?, || dup("total"))?,
            "dx" => set(&mut dx, parse_scaled(value, SPACE_UNITS, lineno, col)?, || dup("dx"))?,
            "extent" => set(&mut x_total, parse_scaled(value, SPACE_UNITS, lineno, col)?, || dup("extent"))?,
            "multiplicity" => {
                let m = if value == "dynamic" {
                    Multiplicity::Dynamic
                } else {
                    let k: u32 = value.parse().map_err(|_| {
                        ParseError::new(lineno, col, format!("invalid multiplicity `{value}`"))
                    })?;
                    Multiplicity::Fixed(k)
                };
                set(&mut multiplicity, m, || dup("multiplicity"))?;
            }
            "role" => {
                let r = match value {
                    "primary" => RoleHint::Primary,
                    "auxiliary" => RoleHint::Auxiliary,
                    "macro" => RoleHint::Macro,
                    "micro" => RoleHint::Micro,
                    "replica" => RoleHint::Replica,
                    "master" => RoleHint::Master,
                    "none" => RoleHint::None,
                    other => {
                        return Err(ParseError::new(lineno, col, format!("unknown role `{other}`")))
                    }
                };
                set(&mut role_hint, r, || dup("role"))?;
            }
            "perf" => {
                if !is_ident(value) {
                    return Err(ParseError::new(lineno, col, format!("invalid perf reference `{value}`")));
                }
                set(&mut perf, value.to_string(), || dup("perf"))?;
            }
            other => return Err(ParseError::new(lineno, col, format!("unknown key `{other}`"))),
        }
    }

    let require = |v: Option<f64>, name: &str| {
        v.ok_or_else(|| ParseError::new(lineno, 1, format!("submodel `{id}` is missing `{name}`")))
    };
    Ok(Submodel {
        id: id.to_string(),
        dt: require(dt, "dt")?,
        t_total: require(t_total, "total")?,
        dx: require(dx, "dx")?,
        x_total: require(x_total, "extent")?,
        multiplicity: multiplicity.unwrap_or_default(),
        role_hint,
        perf,
    })
}

fn parse_couple_args(from: &str, to: &str, args: &[(usize, &str)], lineno: usize) -> Result<Coupling, ParseError> {
    let mut kind = None;
    let mut bytes = None;
    for &(col, token) in args {
        let (key, value) = split_kv(col, token, lineno)?;
        match key {
            "kind" => {
                let k = match value {
                    "init" => CouplingKind::Init,
                    "per_cycle" => CouplingKind::PerCycle,
                    "final" => CouplingKind::Final,
                    other => {
                        return Err(ParseError::new(
                            lineno,
                            col,
                            format!("unknown coupling kind `{other}` (expected init, per_cycle or final)"),
                        ))
                    }
                };
                set(&mut kind, k, || ParseError::new(lineno, col, "duplicate key `kind`"))?;
            }
            "bytes" => {
                let b: u64 = value
                    .parse()
                    .map_err(|_| ParseError::new(lineno, col, format!("invalid byte count `{value}`")))?;
                set(&mut bytes, b, || ParseError::new(lineno, col, "duplicate key `bytes`"))?;
            }
            other => return Err(ParseError::new(lineno, col, format!("unknown key `{other}`"))),
        }
    }
    let kind = kind.ok_or_else(|| ParseError::new(lineno, 1, "coupling is missing `kind`"))?;
    Ok(Coupling {
        from: from.to_string(),
        to: to.to_string(),
        kind,
        payload_bytes: bytes.unwrap_or(0),
    })
}

fn set<T>(slot: &mut Option<T>, value: T, err: impl FnOnce() -> ParseError) -> Result<(), ParseError> {
    if slot.is_some() {
        return Err(err());
    }
    *slot = Some(value);
    Ok(())
}

const TIME_UNITS: &[(&str, f64)] = &[("ms", 1e-3), ("us", 1e-6), ("d", 86_400.0), ("s", 1.0)];
const SPACE_UNITS: &[(&str, f64)] = &[("mm", 1e-3), ("um", 1e-6), ("m", 1.0)];

fn parse_scaled(value: &str, units: &[(&str, f64)], lineno: usize, col: usize) -> Result<f64, ParseError> {
    for (suffix, factor) in units {
        if let Some(num) = value.strip_suffix(suffix) {
            let x: f64 = num
                .parse()
                .map_err(|_| ParseError::new(lineno, col, format!("invalid number `{num}`")))?;
            if !x.is_finite() || x <= 0.0 {
                return Err(ParseError::new(lineno, col, format!("nonpositive scale value `{value}`")));
            }
            return Ok(x * factor);
        }
    }
    Err(ParseError::new(
        lineno,
        col,
        format!("missing or unknown unit suffix in `{value}`"),
    ))
}

// ---------------------------------------------------------------------------
// Rendering (canonical inverse of the parser)
// ---------------------------------------------------------------------------

/// Renders the model in canonical MMD: base units, declaration order kept.
/// `parse_model(&render(m)) == *m` for any model that validates.
pub fn render(m: &MultiscaleModel) -> String {
    use fmt::Write;
    let mut out = String::new();
    let _ = writeln!(out, "model {}", m.name);
    for s in &m.submodels {
        // {:?} is shortest round-trip float formatting, so re-parsing is exact.
        let _ = write!(
            out,
            "submodel {} dt={:?}s total={:?}s dx={:?}m extent={:?}m",
            s.id, s.dt, s.t_total, s.dx, s.x_total
        );
        match s.multiplicity {
            Multiplicity::Fixed(1) => {}
            Multiplicity::Fixed(k) => {
                let _ = write!(out, " multiplicity={k}");
            }
            Multiplicity::Dynamic => out.push_str(" multiplicity=dynamic"),
        }
        if let Some(r) = s.role_hint {
            let _ = write!(out, " role={}", r.as_str());
        }
        if let Some(p) = &s.perf {
            let _ = write!(out, " perf={p}");
        }
        out.push('\n');
    }
    for c in &m.couplings {
        let _ = write!(out, "couple {} -> {} kind={}", c.from, c.to, c.kind.as_str());
        if c.payload_bytes != 0 {
            let _ = write!(out, " bytes={}", c.payload_bytes);
        }
        out.push('\n');
    }
    if let Some(p) = m.pattern_hint {
        let _ = writeln!(out, "pattern {}", p.as_str());
    }
    out
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

/// What a diagnostic talks about; used by the CLI to attach source lines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Subject {
    Model,
    Submodel(String),
    Coupling(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub subject: Subject,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl Diagnostic {
    fn model(message: impl Into<String>) -> Self {
        Diagnostic { subject: Subject::Model, message: message.into() }
    }
    fn submodel(id: &str, message: impl Into<String>) -> Self {
        Diagnostic { subject: Subject::Submodel(id.to_string()), message: message.into() }
    }
    /// Attaches the source line for this diagnostic's subject, if known.
    pub fn line(&self, map: &SourceMap) -> Option<usize> {
        match &self.subject {
            Subject::Model => Some(map.model_line).filter(|&l| l != 0),
            Subject::Submodel(id) => map.submodel_lines.get(id).copied(),
            Subject::Coupling(i) => map.coupling_lines.get(*i).copied(),
        }
    }
}

/// Checks every model invariant. Returns an empty list iff the model is
/// well-formed and has at least one place execution can start. Pure: the
/// same model always yields the same diagnostics in the same order.
pub fn validate_model(m: &MultiscaleModel) -> Vec<Diagnostic> {
    let mut diags = Vec::new();

    if m.submodels.is_empty() {
        diags.push(Diagnostic::model("model has no submodels"));
    }

    let mut seen = BTreeSet::new();
    for s in &m.submodels {
        if !seen.insert(s.id.as_str()) {
            diags.push(Diagnostic::submodel(&s.id, format!("duplicate submodel id `{}`", s.id)));
        }
        if !(s.dt > 0.0) {
            diags.push(Diagnostic::submodel(&s.id, format!("submodel `{}`: dt must be positive", s.id)));
        } else if s.t_total < s.dt {
            diags.push(Diagnostic::submodel(
                &s.id,
                format!("submodel `{}`: total time span is smaller than dt", s.id),
            ));
        }
        if !(s.dx > 0.0) {
            diags.push(Diagnostic::submodel(&s.id, format!("submodel `{}`: dx must be positive", s.id)));
        } else if s.x_total < s.dx {
            diags.push(Diagnostic::submodel(
                &s.id,
                format!("submodel `{}`: spatial extent is smaller than dx", s.id),
            ));
        }
        if s.multiplicity == Multiplicity::Fixed(0) {
            diags.push(Diagnostic::submodel(
                &s.id,
                format!("submodel `{}`: fixed multiplicity must be at least 1", s.id),
            ));
        }
    }

    let exists = |id: &str| m.submodels.iter().any(|s| s.id == id);
    for (i, c) in m.couplings.iter().enumerate() {
        let mut bad = |msg: String| diags.push(Diagnostic { subject: Subject::Coupling(i), message: msg });
        if !exists(&c.from) {
            bad(format!("coupling references unknown submodel `{}`", c.from));
        }
        if !exists(&c.to) {
            bad(format!("coupling references unknown submodel `{}`", c.to));
        }
        if c.from == c.to {
            bad(format!("coupling from `{}` to itself", c.from));
        }
        let dynamic = |id: &str| m.submodel(id).map(|s| s.multiplicity.is_dynamic()).unwrap_or(false);
        if dynamic(&c.from) && dynamic(&c.to) {
            bad(format!(
                "coupling `{}` -> `{}` connects two dynamic-multiplicity submodels, which is not supported",
                c.from, c.to
            ));
        }
    }

    // A final coupling gates its consumer on the producer's completion. If
    // the consumer also feeds the producer, directly or through further
    // per_cycle or final hops, some iteration count makes the two wait on
    // each other, so the shape is rejected outright.
    let mut flows: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for c in &m.couplings {
        if c.kind != CouplingKind::Init && c.from != c.to {
            flows.entry(c.from.as_str()).or_default().insert(c.to.as_str());
        }
    }
    for (i, c) in m.couplings.iter().enumerate() {
        if c.kind != CouplingKind::Final || c.from == c.to {
            continue;
        }
        if reaches(&flows, &c.to, &c.from) {
            diags.push(Diagnostic {
                subject: Subject::Coupling(i),
                message: format!(
                    "final coupling `{}` -> `{}` can never fire: `{}` transitively feeds `{}`",
                    c.from, c.to, c.to, c.from
                ),
            });
        }
    }

    // Initial data cannot mutually depend. Every member of an init-coupling
    // cycle is an init target and therefore starts, so such a cycle always
    // materializes as a dependency cycle.
    let mut init_flows: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for c in &m.couplings {
        if c.kind == CouplingKind::Init && c.from != c.to {
            init_flows.entry(c.from.as_str()).or_default().insert(c.to.as_str());
        }
    }
    for (i, c) in m.couplings.iter().enumerate() {
        if c.kind != CouplingKind::Init || c.from == c.to {
            continue;
        }
        if reaches(&init_flows, &c.to, &c.from) {
            diags.push(Diagnostic {
                subject: Subject::Coupling(i),
                message: format!(
                    "init coupling `{}` -> `{}` sits on a cycle of initial data",
                    c.from, c.to
                ),
            });
        }
    }

    // A submodel can start iff it has no per_cycle predecessor or an init
    // coupling hands it an initial state. A model where neither holds for any
    // submodel can never begin its first iteration.
    if !m.submodels.is_empty() && starting_submodels(m).is_empty() {
        diags.push(Diagnostic::model(
            "no starting point: every submodel waits on a per_cycle predecessor and no init coupling exists",
        ));
    }

    diags
}

fn reaches(adj: &BTreeMap<&str, BTreeSet<&str>>, from: &str, to: &str) -> bool {
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    let mut stack = vec![from];
    while let Some(u) = stack.pop() {
        if u == to {
            return true;
        }
        if !seen.insert(u) {
            continue;
        }
        if let Some(next) = adj.get(u) {
            stack.extend(next.iter().copied());
        }
    }
    false
}

/// Submodels able to run their first iteration without waiting on another
/// submodel's cycle output: init-coupling targets plus submodels with no
/// per_cycle predecessor.
pub(crate) fn starting_submodels(m: &MultiscaleModel) -> BTreeSet<&str> {
    let mut start: BTreeSet<&str> = BTreeSet::new();
    for s in &m.submodels {
        let has_pc_pred = m
            .couplings
            .iter()
            .any(|c| c.kind == CouplingKind::PerCycle && c.to == s.id);
        if !has_pc_pred {
            start.insert(&s.id);
        }
    }
    for c in &m.couplings {
        if c.kind == CouplingKind::Init && m.submodel(&c.to).is_some() {
            start.insert(&c.to);
        }
    }
    start
}

// ---------------------------------------------------------------------------
// Scale separation map
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScaleRelation {
    Separated,
    Contiguous,
    Overlapping,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleBox {
    /// Temporal interval [dt, t_total] in seconds.
    pub t: (f64, f64),
    /// Spatial interval [dx, x_total] in meters.
    pub x: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaleSeparationMap {
    pub entries: BTreeMap<String, ScaleBox>,
    relations: BTreeMap<(String, String), ScaleRelation>,
}

impl ScaleSeparationMap {
    /// Temporal relation between two submodels. Symmetric.
    pub fn relation(&self, a: &str, b: &str) -> Option<ScaleRelation> {
        let key = if a <= b { (a.to_string(), b.to_string()) } else { (b.to_string(), a.to_string()) };
        self.relations.get(&key).copied()
    }

    pub fn relations(&self) -> impl Iterator<Item = (&str, &str, ScaleRelation)> {
        self.relations.iter().map(|((a, b), r)| (a.as_str(), b.as_str(), *r))
    }
}

/// Classifies interval overlap. Closed intervals: a shared endpoint alone is
/// contiguous, positive-length intersection is overlapping.
fn interval_relation(a: (f64, f64), b: (f64, f64)) -> ScaleRelation {
    let lo = a.0.max(b.0);
    let hi = a.1.min(b.1);
    if lo > hi {
        ScaleRelation::Separated
    } else if lo == hi {
        ScaleRelation::Contiguous
    } else {
        ScaleRelation::Overlapping
    }
}

pub fn scale_separation_map(m: &MultiscaleModel) -> ScaleSeparationMap {
    let mut entries = BTreeMap::new();
    for s in &m.submodels {
        entries.insert(s.id.clone(), ScaleBox { t: (s.dt, s.t_total), x: (s.dx, s.x_total) });
    }
    let mut relations = BTreeMap::new();
    let ids: Vec<&String> = entries.keys().collect();
    for (i, a) in ids.iter().enumerate() {
        for b in &ids[i + 1..] {
            let ra = entries[a.as_str()];
            let rb = entries[b.as_str()];
            relations.insert(((*a).clone(), (*b).clone()), interval_relation(ra.t, rb.t));
        }
    }
    ScaleSeparationMap { entries, relations }
}
