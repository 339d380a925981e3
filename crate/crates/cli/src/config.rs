//! Scenario documents: TOML parsed into validated, solver-ready parameters.
//!
//! Validation collects every problem it finds instead of stopping at the
//! first, and each problem names the offending field by its dotted path.

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use sha2::{Digest, Sha256};
use toml::{Table, Value};

use qline_core::fdtd::{Boundary, FdtdConfig, SignConvention};
use qline_core::field::Grid1D;
use qline_core::franck_condon::FrequencySchedule;
use qline_core::harmonic::PhaseLaw;
use qline_core::line::{Axis, LineSpec, Modulation};
use qline_core::scattering::{ScatteringStack, Segment};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Telegrapher,
    Evolve,
    Modes,
    Scatter,
    FranckCondon,
    Parametric,
}

impl Kind {
    pub const ALL: [Kind; 6] =
        [Kind::Telegrapher, Kind::Evolve, Kind::Modes, Kind::Scatter, Kind::FranckCondon, Kind::Parametric];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Telegrapher => "telegrapher",
            Kind::Evolve => "evolve",
            Kind::Modes => "modes",
            Kind::Scatter => "scatter",
            Kind::FranckCondon => "franck-condon",
            Kind::Parametric => "parametric",
        }
    }

    fn expected() -> String {
        let names: Vec<_> = Kind::ALL.iter().map(|k| format!("\"{}\"", k.name())).collect();
        format!("one of {}", names.join(", "))
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kind {
    type Err = FieldError;

    fn from_str(s: &str) -> Result<Self, FieldError> {
        Kind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| FieldError::new("kind", Kind::expected(), format!("\"{s}\"")))
    }
}

/// One validation failure: where, what was wanted, what was found.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub path: String,
    pub expected: String,
    pub got: String,
}

impl FieldError {
    fn new(path: impl Into<String>, expected: impl Into<String>, got: impl Into<String>) -> Self {
        Self { path: path.into(), expected: expected.into(), got: got.into() }
    }
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: expected {}, got {}", self.path, self.expected, self.got)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<FieldError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub kind: Kind,
    pub params: Params,
    /// SHA-256 of the document text, hex encoded.
    pub hash: String,
}

#[derive(Debug, Clone)]
pub enum Params {
    Telegrapher(TelegrapherParams),
    Evolve(EvolveParams),
    Modes(ModesParams),
    Scatter(ScatterParams),
    FranckCondon(FranckCondonParams),
    Parametric(ParametricParams),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn build(&self) -> qline_core::Result<Grid1D> {
        Grid1D::new(self.min, self.max, self.points)
    }
}

#[derive(Debug, Clone)]
pub struct TelegrapherParams {
    pub line: LineSpec,
    pub domain: FdtdConfig,
    pub initial: LineInitial,
    pub t_end: f64,
    pub carrier: f64,
    pub stride: usize,
    pub probes: Vec<f64>,
    pub snapshots: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LineInitial {
    /// Forward-travelling Gaussian pulse of the line current.
    Pulse { amplitude: f64, center: f64, width: f64, omega: f64 },
    /// Current amplitude·cos(wavenumber·x), voltage zero.
    Standing { amplitude: f64, wavenumber: f64 },
}

#[derive(Debug, Clone)]
pub enum PotentialSpec {
    Zero,
    Harmonic { k: f64 },
    HarmonicJump { k_before: f64, k_after: f64, s_jump: f64 },
    Rectangle { value: f64, start: f64, end: f64 },
    Line { line: LineSpec, omega: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialEnvelope {
    /// Hermite–Gauss mode n; the stationary one for k when `sigma` is unset.
    Mode { n: usize, k: f64, sigma: Option<f64>, sigma_prime: f64, phi: f64 },
    Displaced { sigma: f64, sigma_prime: f64, k: f64, a: f64, b: f64 },
    /// Gaussian with intensity rms `width` and carrier momentum.
    Gaussian { center: f64, width: f64, momentum: f64 },
}

#[derive(Debug, Clone)]
pub struct EvolveParams {
    pub grid: GridSpec,
    pub potential: PotentialSpec,
    pub initial: InitialEnvelope,
    pub ds: Option<f64>,
    pub s_end: f64,
    pub stride: usize,
    pub sponge: usize,
    pub dump_all: bool,
    /// Report the probability found beyond this τ.
    pub beyond: Option<f64>,
    /// Project the final field on the stationary modes of this k, n ≤ n_max.
    pub projection: Option<(f64, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModesParams {
    pub grid: GridSpec,
    pub k: f64,
    pub sigma: Option<f64>,
    pub sigma_prime: f64,
    pub phi: f64,
    pub s_end: f64,
    pub ds: Option<f64>,
    pub n_max: usize,
    pub phase_law: PhaseLaw,
    pub stride: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterParams {
    pub stack: ScatteringStack,
    pub e_min: f64,
    pub e_max: f64,
    pub points: usize,
    pub resonances: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FranckCondonParams {
    pub omega1: f64,
    pub omega2: f64,
    pub n_max: usize,
    pub grid: Option<GridSpec>,
    pub wigner_check: bool,
    pub p_points: Option<usize>,
    pub dump_first: Vec<usize>,
    pub dump_second: Vec<usize>,
}

#[derive(Clone)]
pub struct ParametricParams {
    pub schedule: FrequencySchedule,
    pub t_end: f64,
    pub dt: Option<f64>,
    pub n: usize,
    pub n_max: usize,
    pub stride: usize,
    pub grid: Option<GridSpec>,
}

impl fmt::Debug for ParametricParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParametricParams")
            .field("t_end", &self.t_end)
            .field("dt", &self.dt)
            .field("n", &self.n)
            .field("n_max", &self.n_max)
            .field("stride", &self.stride)
            .field("grid", &self.grid)
            .finish_non_exhaustive()
    }
}

/// Parses a document that names its own `kind`.
pub fn parse_scenario(text: &str) -> Result<Scenario, ConfigErrors> {
    parse(text, None)
}

/// Parses a document run as `kind`; a `kind` key in the document, if any,
/// must agree.
pub fn parse_scenario_as(text: &str, kind: Kind) -> Result<Scenario, ConfigErrors> {
    parse(text, Some(kind))
}

fn parse(text: &str, requested: Option<Kind>) -> Result<Scenario, ConfigErrors> {
    let table: Table = text.parse().map_err(|e: toml::de::Error| {
        ConfigErrors(vec![FieldError::new("document", "valid TOML", e.message().to_string())])
    })?;
    let ctx = Ctx::default();
    let root = Node::root(&ctx, &table);
    let declared = root.opt_word("kind", &Kind::ALL.map(Kind::name));
    let kind = match (declared, requested) {
        (Some(d), Some(r)) if d != r.name() => {
            ctx.push("kind", format!("\"{}\" to match the command line", r.name()), format!("\"{d}\""));
            None
        }
        (Some(d), _) => d.parse().ok(),
        (None, Some(r)) => Some(r),
        (None, None) => {
            if !ctx.has_errors() {
                ctx.push("kind", Kind::expected(), "nothing (field missing)");
            }
            None
        }
    };
    let params = kind.map(|kind| match kind {
        Kind::Telegrapher => Params::Telegrapher(telegrapher(&root)),
        Kind::Evolve => Params::Evolve(evolve(&root)),
        Kind::Modes => Params::Modes(modes(&root)),
        Kind::Scatter => Params::Scatter(scatter(&root)),
        Kind::FranckCondon => Params::FranckCondon(franck_condon(&root)),
        Kind::Parametric => Params::Parametric(parametric(&root)),
    });
    root.finish();
    let errors = ctx.errors.into_inner();
    match (kind, params) {
        (Some(kind), Some(params)) if errors.is_empty() => {
            let hash = format!("{:x}", Sha256::digest(text.as_bytes()));
            Ok(Scenario { kind, params, hash })
        }
        _ => Err(ConfigErrors(errors)),
    }
}

#[derive(Clone, Copy)]
struct Rule {
    expected: &'static str,
    ok: fn(f64) -> bool,
}

const ANY: Rule = Rule { expected: "a finite number", ok: f64::is_finite };
const POSITIVE: Rule = Rule { expected: "a number > 0", ok: |v| v.is_finite() && v > 0.0 };
const NON_NEGATIVE: Rule = Rule { expected: "a number >= 0", ok: |v| v.is_finite() && v >= 0.0 };

#[derive(Default)]
struct Ctx {
    errors: RefCell<Vec<FieldError>>,
}

impl Ctx {
    fn push(&self, path: impl Into<String>, expected: impl Into<String>, got: impl Into<String>) {
        self.errors.borrow_mut().push(FieldError::new(path, expected, got));
    }

    fn has_errors(&self) -> bool {
        !self.errors.borrow().is_empty()
    }
}

fn describe(v: &Value) -> String {
    match v {
        Value::String(s) => format!("\"{s}\""),
        Value::Integer(i) => i.to_string(),
        Value::Float(f) => format!("{f:?}"),
        Value::Boolean(b) => b.to_string(),
        Value::Datetime(d) => d.to_string(),
        Value::Array(_) => "an array".into(),
        Value::Table(_) => "a table".into(),
    }
}

fn as_number(v: &Value) -> Option<f64> {
    match v {
        Value::Integer(i) => Some(*i as f64),
        Value::Float(f) => Some(*f),
        _ => None,
    }
}

/// A table being read. Absent tables (already reported missing) answer
/// every query with a placeholder and report nothing further.
struct Node<'a> {
    ctx: &'a Ctx,
    table: Option<&'a Table>,
    path: String,
    asked: RefCell<BTreeSet<String>>,
}

impl<'a> Node<'a> {
    fn root(ctx: &'a Ctx, table: &'a Table) -> Self {
        Self { ctx, table: Some(table), path: String::new(), asked: RefCell::default() }
    }

    fn key_path(&self, key: &str) -> String {
        if self.path.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.path)
        }
    }

    fn get(&self, key: &str) -> Option<&'a Value> {
        self.asked.borrow_mut().insert(key.to_string());
        self.table?.get(key)
    }

    fn missing(&self, key: &str, expected: &str) {
        if self.table.is_some() {
            self.ctx.push(self.key_path(key), expected, "nothing (field missing)");
        }
    }

    fn bad(&self, key: &str, expected: &str, v: &Value) {
        self.ctx.push(self.key_path(key), expected, describe(v));
    }

    fn opt_num(&self, key: &str, rule: Rule) -> Option<f64> {
        let v = self.get(key)?;
        match as_number(v) {
            Some(x) if (rule.ok)(x) => Some(x),
            _ => {
                self.bad(key, rule.expected, v);
                None
            }
        }
    }

    fn num(&self, key: &str, rule: Rule) -> f64 {
        if self.table.is_some() && self.get(key).is_none() {
            self.missing(key, rule.expected);
        }
        self.opt_num(key, rule).unwrap_or(f64::NAN)
    }

    fn num_or(&self, key: &str, default: f64, rule: Rule) -> f64 {
        if self.get(key).is_none() {
            return default;
        }
        self.opt_num(key, rule).unwrap_or(f64::NAN)
    }

    fn opt_count(&self, key: &str, min: usize) -> Option<usize> {
        let v = self.get(key)?;
        match v {
            Value::Integer(i) if *i >= min as i64 => Some(*i as usize),
            _ => {
                self.bad(key, &format!("an integer >= {min}"), v);
                None
            }
        }
    }

    fn count(&self, key: &str, min: usize) -> usize {
        if self.table.is_some() && self.get(key).is_none() {
            self.missing(key, &format!("an integer >= {min}"));
        }
        self.opt_count(key, min).unwrap_or(min)
    }

    fn count_or(&self, key: &str, default: usize, min: usize) -> usize {
        self.opt_count(key, min).unwrap_or(default)
    }

    fn opt_word(&self, key: &str, choices: &[&'static str]) -> Option<&'static str> {
        let v = self.get(key)?;
        let found = v.as_str().and_then(|s| choices.iter().find(|c| **c == s).copied());
        if found.is_none() {
            let names: Vec<_> = choices.iter().map(|c| format!("\"{c}\"")).collect();
            self.bad(key, &format!("one of {}", names.join(", ")), v);
        }
        found
    }

    fn word(&self, key: &str, choices: &[&'static str]) -> Option<&'static str> {
        if self.table.is_some() && self.get(key).is_none() {
            let names: Vec<_> = choices.iter().map(|c| format!("\"{c}\"")).collect();
            self.missing(key, &format!("one of {}", names.join(", ")));
        }
        self.opt_word(key, choices)
    }

    fn flag_or(&self, key: &str, default: bool) -> bool {
        match self.get(key) {
            None => default,
            Some(Value::Boolean(b)) => *b,
            Some(v) => {
                self.bad(key, "true or false", v);
                default
            }
        }
    }

    fn array(&self, key: &str) -> Option<&'a Vec<Value>> {
        let v = self.get(key)?;
        match v {
            Value::Array(a) => Some(a),
            _ => {
                self.bad(key, "an array", v);
                None
            }
        }
    }

    fn numbers(&self, key: &str, rule: Rule) -> Vec<f64> {
        let Some(items) = self.array(key) else { return Vec::new() };
        let mut out = Vec::new();
        for (i, v) in items.iter().enumerate() {
            match as_number(v) {
                Some(x) if (rule.ok)(x) => out.push(x),
                _ => self.ctx.push(format!("{}[{i}]", self.key_path(key)), rule.expected, describe(v)),
            }
        }
        out
    }

    fn counts(&self, key: &str) -> Vec<usize> {
        let Some(items) = self.array(key) else { return Vec::new() };
        let mut out = Vec::new();
        for (i, v) in items.iter().enumerate() {
            match v {
                Value::Integer(n) if *n >= 0 => out.push(*n as usize),
                _ => self.ctx.push(format!("{}[{i}]", self.key_path(key)), "an integer >= 0", describe(v)),
            }
        }
        out
    }

    fn sub(&self, path: String, table: Option<&'a Table>) -> Node<'a> {
        Node { ctx: self.ctx, table, path, asked: RefCell::default() }
    }

    fn opt_child(&self, key: &str) -> Option<Node<'a>> {
        let v = self.get(key)?;
        match v {
            Value::Table(t) => Some(self.sub(self.key_path(key), Some(t))),
            _ => {
                self.bad(key, "a table", v);
                Some(self.sub(self.key_path(key), None))
            }
        }
    }

    fn child(&self, key: &str) -> Node<'a> {
        if self.table.is_some() && self.get(key).is_none() {
            self.missing(key, "a table");
        }
        self.opt_child(key).unwrap_or_else(|| self.sub(self.key_path(key), None))
    }

    /// Reports keys present in the table that nothing asked for.
    fn finish(&self) {
        let Some(table) = self.table else { return };
        let asked = self.asked.borrow();
        for key in table.keys().filter(|k| !asked.contains(*k)) {
            let known: Vec<_> = asked.iter().map(String::as_str).collect();
            let expected =
                if known.is_empty() { "no fields here".to_string() } else { format!("one of {}", known.join(", ")) };
            self.ctx.push(self.key_path(key), expected, "an unknown field");
        }
    }

    /// Wraps a solver-side validation failure as a field error on this table.
    fn reject(&self, expected: &str, err: impl fmt::Display) {
        if self.table.is_some() {
            self.ctx.push(self.path.clone(), expected, err.to_string());
        }
    }
}

fn grid(node: &Node) -> GridSpec {
    let g = GridSpec { min: node.num("min", ANY), max: node.num("max", ANY), points: node.count("points", 3) };
    if g.max <= g.min {
        node.ctx.push(node.key_path("max"), format!("a number > min ({:?})", g.min), format!("{:?}", g.max));
    }
    node.finish();
    g
}

fn axis(node: &Node) -> Axis {
    match node.opt_word("axis", &["space", "time"]) {
        Some("time") => Axis::Time,
        _ => Axis::Space,
    }
}

fn modulation(parent: &Node, key: &str) -> Modulation {
    if let Some(v) = parent.get(key) {
        if let Some(x) = as_number(v) {
            if !(x > 0.0 && x.is_finite()) {
                parent.bad(key, "a number > 0 or a modulation table", v);
            }
            return Modulation::Constant(x);
        }
    } else {
        return Modulation::Constant(1.0);
    }
    let node = parent.child(key);
    let m = match node.word("type", &["constant", "step", "rectangle", "parabola", "bump", "piecewise"]) {
        Some("constant") => Modulation::Constant(node.num("value", POSITIVE)),
        Some("step") => Modulation::Step {
            axis: axis(&node),
            at: node.num("at", ANY),
            before: node.num("before", POSITIVE),
            after: node.num("after", POSITIVE),
        },
        Some("rectangle") => Modulation::Rectangle {
            axis: axis(&node),
            start: node.num("start", ANY),
            end: node.num("end", ANY),
            inside: node.num("inside", POSITIVE),
            outside: node.num("outside", POSITIVE),
        },
        Some("parabola") => Modulation::Parabola {
            axis: axis(&node),
            center: node.num("center", ANY),
            base: node.num("base", POSITIVE),
            curvature: node.num("curvature", ANY),
        },
        Some("bump") => Modulation::Bump {
            axis: axis(&node),
            center: node.num("center", ANY),
            width: node.num("width", POSITIVE),
            base: node.num("base", POSITIVE),
            amplitude: node.num("amplitude", ANY),
        },
        Some("piecewise") => {
            let mut knots = Vec::new();
            for (i, v) in node.array("knots").into_iter().flatten().enumerate() {
                match v.as_array().map(|p| p.iter().filter_map(as_number).collect::<Vec<_>>()) {
                    Some(p) if p.len() == 2 && p[0].is_finite() && p[1] > 0.0 => knots.push((p[0], p[1])),
                    _ => node.ctx.push(format!("{}[{i}]", node.key_path("knots")), "a pair [u, f] with f > 0", describe(v)),
                }
            }
            if knots.is_empty() {
                node.missing("knots", "a non-empty array of [u, f] pairs");
            }
            Modulation::Piecewise { axis: axis(&node), knots }
        }
        _ => Modulation::Constant(1.0),
    };
    node.finish();
    m
}

fn line(node: &Node) -> Option<LineSpec> {
    let l0 = node.num("l0", POSITIVE);
    let c0 = node.num("c0", POSITIVE);
    let r0 = node.num_or("r0", 0.0, NON_NEGATIVE);
    let f1 = modulation(node, "f1");
    let f2 = modulation(node, "f2");
    node.finish();
    if node.table.is_none() || node.ctx.has_errors() {
        return None;
    }
    match LineSpec::new(l0, c0, r0, f1, f2) {
        Ok(spec) => Some(spec),
        Err(e) => {
            node.reject("a valid line", e);
            None
        }
    }
}

fn placeholder_line() -> LineSpec {
    LineSpec::homogeneous(1.0, 1.0).expect("unit line is valid")
}

fn telegrapher(root: &Node) -> TelegrapherParams {
    let spec = line(&root.child("line"));

    let d = root.child("domain");
    let mut domain = FdtdConfig {
        x_min: d.num("x_min", ANY),
        x_max: d.num("x_max", ANY),
        dx: d.num("dx", POSITIVE),
        courant: d.num_or("courant", qline_core::fdtd::DEFAULT_COURANT, POSITIVE),
        boundary: Boundary::Absorbing,
        sign: SignConvention::Standard,
    };
    if d.opt_word("boundary", &["absorbing", "periodic"]) == Some("periodic") {
        domain.boundary = Boundary::Periodic;
    }
    if d.opt_word("sign", &["standard", "flipped"]) == Some("flipped") {
        domain.sign = SignConvention::Flipped;
    }
    d.finish();
    if d.table.is_some() && !d.ctx.has_errors() {
        if let Err(e) = domain.validate() {
            d.reject("a valid domain", e);
        }
    }

    let i = root.child("initial");
    let initial = match i.opt_word("type", &["pulse", "standing"]) {
        Some("standing") => LineInitial::Standing {
            amplitude: i.num("amplitude", ANY),
            wavenumber: i.num("wavenumber", ANY),
        },
        _ => LineInitial::Pulse {
            amplitude: i.num("amplitude", ANY),
            center: i.num("center", ANY),
            width: i.num("width", POSITIVE),
            omega: i.num("omega", POSITIVE),
        },
    };
    i.finish();

    let r = root.child("run");
    let t_end = r.num("t_end", POSITIVE);
    let carrier = match (r.opt_num("carrier", POSITIVE), initial) {
        (Some(c), _) => c,
        (None, LineInitial::Pulse { omega, .. }) => omega,
        (None, LineInitial::Standing { .. }) => {
            r.missing("carrier", "a number > 0 (no pulse to take it from)");
            f64::NAN
        }
    };
    let stride = r.count_or("stride", 1, 1);
    let probes = r.numbers("probes", ANY);
    let snapshots = r.numbers("snapshots", NON_NEGATIVE);
    r.finish();

    TelegrapherParams {
        line: spec.unwrap_or_else(placeholder_line),
        domain,
        initial,
        t_end,
        carrier,
        stride,
        probes,
        snapshots,
    }
}

fn potential(root: &Node) -> PotentialSpec {
    let p = root.child("potential");
    let spec = match p.word("type", &["zero", "harmonic", "harmonic_jump", "rectangle", "line"]) {
        Some("harmonic") => PotentialSpec::Harmonic { k: p.num("k", POSITIVE) },
        Some("harmonic_jump") => PotentialSpec::HarmonicJump {
            k_before: p.num("k_before", POSITIVE),
            k_after: p.num("k_after", POSITIVE),
            s_jump: p.num("s_jump", ANY),
        },
        Some("rectangle") => PotentialSpec::Rectangle {
            value: p.num("value", ANY),
            start: p.num("start", ANY),
            end: p.num("end", ANY),
        },
        Some("line") => {
            let omega = p.num("omega", POSITIVE);
            let line = line(&root.child("line"));
            PotentialSpec::Line { line: line.unwrap_or_else(placeholder_line), omega }
        }
        _ => PotentialSpec::Zero,
    };
    p.finish();
    spec
}

fn initial_envelope(node: &Node) -> InitialEnvelope {
    let init = match node.opt_word("type", &["mode", "displaced", "gaussian"]) {
        Some("displaced") => InitialEnvelope::Displaced {
            sigma: node.num("sigma", POSITIVE),
            sigma_prime: node.num_or("sigma_prime", 0.0, ANY),
            k: node.num("k", POSITIVE),
            a: node.num_or("a", 0.0, ANY),
            b: node.num_or("b", 0.0, ANY),
        },
        Some("gaussian") => InitialEnvelope::Gaussian {
            center: node.num_or("center", 0.0, ANY),
            width: node.num("width", POSITIVE),
            momentum: node.num_or("momentum", 0.0, ANY),
        },
        _ => InitialEnvelope::Mode {
            n: node.count_or("n", 0, 0),
            k: node.num("k", POSITIVE),
            sigma: node.opt_num("sigma", POSITIVE),
            sigma_prime: node.num_or("sigma_prime", 0.0, ANY),
            phi: node.num_or("phi", 0.0, ANY),
        },
    };
    node.finish();
    init
}

fn evolve(root: &Node) -> EvolveParams {
    let grid = grid(&root.child("grid"));
    let potential = potential(root);
    let initial = initial_envelope(&root.child("initial"));

    let e = root.child("evolution");
    let ds = e.opt_num("ds", POSITIVE);
    let s_end = e.num("s_end", POSITIVE);
    let stride = e.count_or("stride", 1, 1);
    let sponge = e.count_or("sponge", 0, 0);
    let dump_all = e.opt_word("dump", &["final", "all"]) == Some("all");
    e.finish();

    let (beyond, projection) = match root.opt_child("analysis") {
        Some(a) => {
            let beyond = a.opt_num("beyond", ANY);
            let projection = a.opt_num("project_k", POSITIVE).map(|k| (k, a.count_or("project_n_max", 8, 0)));
            a.finish();
            (beyond, projection)
        }
        None => (None, None),
    };

    EvolveParams { grid, potential, initial, ds, s_end, stride, sponge, dump_all, beyond, projection }
}

fn modes(root: &Node) -> ModesParams {
    let params = ModesParams {
        grid: grid(&root.child("grid")),
        k: root.num("k", POSITIVE),
        sigma: root.opt_num("sigma", POSITIVE),
        sigma_prime: root.num_or("sigma_prime", 0.0, ANY),
        phi: root.num_or("phi", 0.0, ANY),
        s_end: root.num("s_end", POSITIVE),
        ds: root.opt_num("ds", POSITIVE),
        n_max: root.count_or("n_max", 4, 0),
        phase_law: match root.opt_word("phase_law", &["gouy", "inverse-cube"]) {
            Some("inverse-cube") => PhaseLaw::InverseCube,
            _ => PhaseLaw::Gouy,
        },
        stride: root.count_or("stride", 1, 1),
    };
    if params.n_max > qline_core::field::HERMITE_MAX_ORDER {
        root.ctx.push(
            "n_max",
            format!("an integer <= {}", qline_core::field::HERMITE_MAX_ORDER),
            params.n_max.to_string(),
        );
    }
    params
}

fn scatter(root: &Node) -> ScatterParams {
    let mass = root.num_or("mass", 1.0, POSITIVE);
    let u_left = root.num_or("u_left", 0.0, ANY);
    let u_right = root.num_or("u_right", 0.0, ANY);
    let mut segments = Vec::new();
    if root.get("segments").is_none() {
        root.missing("segments", "an array of {length, u} tables");
    }
    match root.array("segments") {
        None => {}
        Some(items) => {
            for (i, v) in items.iter().enumerate() {
                let path = format!("segments[{i}]");
                match v {
                    Value::Table(t) => {
                        let node = root.sub(path, Some(t));
                        segments.push(Segment { length: node.num("length", NON_NEGATIVE), u: node.num("u", ANY) });
                        node.finish();
                    }
                    _ => root.ctx.push(path, "a table {length, u}", describe(v)),
                }
            }
        }
    }

    let s = root.child("scan");
    let e_min = s.num("e_min", ANY);
    let e_max = s.num("e_max", ANY);
    let points = s.count("points", 1);
    if e_max < e_min {
        s.ctx.push(s.key_path("e_max"), format!("a number >= e_min ({e_min:?})"), format!("{e_max:?}"));
    }
    s.finish();

    let resonances = root.opt_child("resonances").map(|r| {
        let n_max = r.count("n_max", 1);
        r.finish();
        let single_well = segments.len() == 1 && segments[0].u < 0.0 && u_left == 0.0 && u_right == 0.0;
        if !single_well {
            r.reject("a single segment with u < 0 between zero leads", "another stack");
        }
        n_max
    });

    let stack = if root.ctx.has_errors() {
        ScatteringStack::default()
    } else {
        match ScatteringStack::new(segments).and_then(|s| s.with_leads(u_left, u_right)).and_then(|s| s.with_mass(mass)) {
            Ok(stack) => stack,
            Err(e) => {
                root.ctx.push("segments", "a valid stack", e.to_string());
                ScatteringStack::default()
            }
        }
    };
    ScatterParams { stack, e_min, e_max, points, resonances }
}

fn franck_condon(root: &Node) -> FranckCondonParams {
    let grid = root.opt_child("grid").map(|g| grid(&g));
    let mut params = FranckCondonParams {
        omega1: root.num("omega1", POSITIVE),
        omega2: root.num("omega2", POSITIVE),
        n_max: root.count("n_max", 0),
        grid,
        wigner_check: false,
        p_points: None,
        dump_first: Vec::new(),
        dump_second: Vec::new(),
    };
    if let Some(w) = root.opt_child("wigner") {
        params.wigner_check = w.flag_or("check", false);
        params.p_points = w.opt_count("p_points", 3);
        params.dump_first = w.counts("dump_first");
        params.dump_second = w.counts("dump_second");
        for (key, list) in [("dump_first", &params.dump_first), ("dump_second", &params.dump_second)] {
            if let Some(n) = list.iter().find(|n| **n > params.n_max) {
                w.ctx.push(w.key_path(key), format!("mode indices <= n_max ({})", params.n_max), n.to_string());
            }
        }
        w.finish();
    }
    params
}

fn parametric(root: &Node) -> ParametricParams {
    let s = root.child("schedule");
    let schedule = match s.word("type", &["constant", "jump", "ramp"]) {
        Some("jump") => FrequencySchedule::Jump {
            before: s.num("before", POSITIVE),
            after: s.num("after", POSITIVE),
            t_jump: s.num("t_jump", ANY),
        },
        Some("ramp") => FrequencySchedule::Ramp {
            from: s.num("from", POSITIVE),
            to: s.num("to", POSITIVE),
            t_start: s.num("t_start", ANY),
            t_end: s.num("t_end", ANY),
        },
        Some(_) => FrequencySchedule::Constant(s.num("omega", POSITIVE)),
        None => FrequencySchedule::Constant(1.0),
    };
    s.finish();
    ParametricParams {
        schedule,
        t_end: root.num("t_end", POSITIVE),
        dt: root.opt_num("dt", POSITIVE),
        n: root.count_or("n", 0, 0),
        n_max: root.count_or("n_max", 8, 0),
        stride: root.count_or("stride", 1, 1),
        grid: root.opt_child("grid").map(|g| grid(&g)),
    }
}
