//! Runtime family selection. A [`FamilySpec`] names a family and its
//! parameters; [`Family`] holds the built space and runs norms, witnesses,
//! profiles and oracle checks without the caller knowing the vertex type.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bs::{BSLabel, BaumslagSolitar};
use crate::divergence::{
    self, min_detour, verify_witness, AvoidanceMode, DivergenceParams, Extended, GrowthSample, Strategy, WitnessReport,
};
use crate::dl::{DLMove, DiestelLeader};
use crate::error::{Error, Result};
use crate::graph_wreath::{GWLabel, Graph, GraphDriver, GraphWreath};
use crate::houghton::{H2Label, HmLabel, Houghton2, HoughtonM};
use crate::search;
use crate::space::{self, Limits, MarkedSpace, Path, Rational};
use crate::wreath::{witness_path as wreath_witness, Case4Route, WitnessTarget};
use crate::wreath::{BaseAction, LampGroup, Wreath, WreathLabel};

/// A family and its parameters, e.g. `dl:p=2,q=3`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum FamilySpec {
    /// `Z_2 wr Z`.
    Lamplighter,
    /// `H wr_X Z`; `lamp` is `z` or `z<k>`, `action` one of `regular`,
    /// `translation`, `two-orbit`, `cyclic<k>`.
    Wreath {
        lamp: String,
        action: String,
    },
    /// `B wr A` over the built-in graphs `line`, `grid`, `tree<k>`, `cycle<k>`.
    GraphWreath {
        a: String,
        b: String,
    },
    Dl {
        p: u8,
        q: u8,
    },
    Houghton {
        m: u8,
    },
    Bs {
        p: u32,
        q: u32,
    },
}

pub fn parse_lamp(s: &str) -> Result<LampGroup> {
    let s = s.trim().to_ascii_lowercase();
    let lamp = match s.as_str() {
        "z" | "integers" => LampGroup::Integers,
        _ => match s.strip_prefix('z').and_then(|k| k.parse().ok()) {
            Some(k) => LampGroup::Cyclic(k),
            None => return Err(Error::Parse(format!("unknown lamp group '{s}'"))),
        },
    };
    lamp.validate()
}

pub fn parse_action(s: &str) -> Result<BaseAction> {
    let s = s.trim().to_ascii_lowercase();
    let action = match s.as_str() {
        "regular" => BaseAction::Regular,
        "translation" => BaseAction::Translation,
        "two-orbit" | "two-orbits" => BaseAction::TwoOrbits,
        _ => match s.strip_prefix("cyclic").and_then(|k| k.parse().ok()) {
            Some(k) => BaseAction::Cyclic(k),
            None => return Err(Error::Parse(format!("unknown base action '{s}'"))),
        },
    };
    action.validate()
}

pub fn parse_graph(s: &str) -> Result<Graph> {
    let s = s.trim().to_ascii_lowercase();
    let g = match s.as_str() {
        "line" | "z" => Graph::Line,
        "grid" | "z2" => Graph::Grid,
        _ => {
            if let Some(k) = s.strip_prefix("tree").and_then(|k| k.parse().ok()) {
                Graph::Tree(k)
            } else if let Some(k) = s.strip_prefix("cycle").and_then(|k| k.parse().ok()) {
                Graph::Cycle(k)
            } else {
                return Err(Error::Parse(format!("unknown graph '{s}'")));
            }
        }
    };
    g.validate()
}

fn num<T: FromStr>(key: &str, v: Option<&String>) -> Result<T> {
    let v = v.ok_or_else(|| Error::Parse(format!("missing parameter '{key}'")))?;
    v.parse().map_err(|_| Error::Parse(format!("bad value '{v}' for '{key}'")))
}

impl FromStr for FamilySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut kv: HashMap<String, String> = HashMap::new();
        for part in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) =
                part.split_once('=').ok_or_else(|| Error::Parse(format!("expected key=value, got '{part}'")))?;
            kv.insert(k.trim().to_ascii_lowercase(), v.trim().to_string());
        }
        let get = |k: &str, default: &str| kv.get(k).cloned().unwrap_or_else(|| default.to_string());
        let spec = match name.to_ascii_lowercase().as_str() {
            "lamplighter" => FamilySpec::Lamplighter,
            "wreath" => FamilySpec::Wreath { lamp: get("lamp", "z2"), action: get("action", "regular") },
            "graph-wreath" | "graphwreath" => FamilySpec::GraphWreath { a: get("a", "line"), b: get("b", "line") },
            "dl" | "diestel-leader" => FamilySpec::Dl { p: num("p", kv.get("p"))?, q: num("q", kv.get("q"))? },
            "houghton" => FamilySpec::Houghton { m: num("m", kv.get("m"))? },
            "bs" | "baumslag-solitar" => FamilySpec::Bs { p: num("p", kv.get("p"))?, q: num("q", kv.get("q"))? },
            "partition" | "partition-wreath" | "block-wreath" => {
                return Err(Error::UnsupportedParams(
                    "wreath products over a partition of the base graph are not implemented".into(),
                ))
            }
            other => return Err(Error::Parse(format!("unknown family '{other}'"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilySpec::Lamplighter => f.write_str("lamplighter"),
            FamilySpec::Wreath { lamp, action } => write!(f, "wreath:lamp={lamp},action={action}"),
            FamilySpec::GraphWreath { a, b } => write!(f, "graph-wreath:a={a},b={b}"),
            FamilySpec::Dl { p, q } => write!(f, "dl:p={p},q={q}"),
            FamilySpec::Houghton { m } => write!(f, "houghton:m={m}"),
            FamilySpec::Bs { p, q } => write!(f, "bs:p={p},q={q}"),
        }
    }
}

impl FamilySpec {
    pub fn validate(&self) -> Result<()> {
        self.build().map(|_| ())
    }

    pub fn build(&self) -> Result<Family> {
        Ok(match self {
            FamilySpec::Lamplighter => Family::Wreath(Wreath::lamplighter()),
            FamilySpec::Wreath { lamp, action } => {
                Family::Wreath(Wreath::new(parse_lamp(lamp)?, parse_action(action)?)?)
            }
            FamilySpec::GraphWreath { a, b } => Family::GraphWreath(GraphWreath::new(parse_graph(a)?, parse_graph(b)?)),
            FamilySpec::Dl { p, q } => Family::Dl(DiestelLeader::new(*p, *q)?),
            FamilySpec::Houghton { m: 2 } => Family::H2(Houghton2),
            FamilySpec::Houghton { m } => Family::Hm(HoughtonM::new(*m)?),
            FamilySpec::Bs { p, q } => Family::Bs(BaumslagSolitar::new(*p, *q)?),
        })
    }
}

/// One line per family for `families`.
pub fn catalog() -> Vec<Value> {
    vec![
        json!({"family": "lamplighter", "example": "lamplighter", "generators": "t t^-1 h0",
               "metric": "closed form", "witness": "length <= 6n outside B(1, n/6)"}),
        json!({"family": "wreath", "example": "wreath:lamp=z3,action=translation",
               "generators": "t t^-1 h0 h0^-1 (h0@1 for the second orbit)",
               "parameters": "lamp in {z, z<k>}; action in {regular, translation, two-orbit, cyclic<k>}",
               "metric": "closed form", "witness": "length <= 6n outside B(1, n/6); cyclic<k>: radius n/2 - 2M"}),
        json!({"family": "graph-wreath", "example": "graph-wreath:a=line,b=line",
               "generators": "m<i> l<i> (i-th neighbor of the cursor / of the lamp value); t h on line drivers",
               "parameters": "a, b in {line, grid, tree<k>, cycle<k>}; a infinite for witnesses",
               "metric": "closed form when a = line, BFS otherwise", "witness": "length <= 6n outside B(1, n/6)"}),
        json!({"family": "dl", "example": "dl:p=2,q=3", "generators": "u<d> d<d>; <o1o2> is the root",
               "metric": "closed form", "witness": "length <= 6n outside B(o, n/2), endpoint a1 a2"}),
        json!({"family": "houghton", "example": "houghton:m=2",
               "generators": "m=2: t t^-1 a; m>=3: g1..g<m-1> and ^-1",
               "metric": "BFS with certificate", "witness": "length <= 18n outside B(1, n/2)"}),
        json!({"family": "bs", "example": "bs:p=2,q=4", "generators": "a a^-1 t t^-1 (a^k allowed)",
               "metric": "BFS with certificate", "witness": "BS(2,4): length 6n-2l+4 (k >= 0), <= 10n+8 otherwise"}),
    ]
}

/// A raw witness before verification.
pub struct RawWitness<V, L> {
    pub n: u64,
    pub radius: Rational,
    pub length_bound: u64,
    pub target: V,
    pub path: Path<V, L>,
    pub detail: Value,
}

/// Family-specific glue: word syntax and the witness construction.
pub trait FamilySpace: MarkedSpace {
    fn parse_word(&self, s: &str) -> Result<Vec<Self::Label>>;

    /// Whether [`FamilySpace::witness`] reads the geodesic word; if not it
    /// gets an empty word and only the norm.
    fn witness_uses_word(&self) -> bool {
        true
    }

    /// Witness for `g` of norm `n`, given a geodesic word for it.
    fn witness(
        &self,
        g: &Self::Vertex,
        n: u64,
        word: &[Self::Label],
        mode: AvoidanceMode,
        limits: Limits,
    ) -> Result<RawWitness<Self::Vertex, Self::Label>>;

    fn has_closed_form(&self) -> bool {
        self.exact_norm(&self.basepoint()).is_some()
    }
}

fn is_identity_token(t: &str) -> bool {
    matches!(t, "1" | "e" | "id")
}

impl FamilySpace for Wreath {
    fn parse_word(&self, s: &str) -> Result<Vec<WreathLabel>> {
        s.split_whitespace().filter(|t| !is_identity_token(t)).map(|t| self.parse_label(t)).collect()
    }

    fn witness_uses_word(&self) -> bool {
        false
    }

    fn witness(
        &self,
        g: &Self::Vertex,
        n: u64,
        _word: &[WreathLabel],
        _mode: AvoidanceMode,
        _limits: Limits,
    ) -> Result<RawWitness<Self::Vertex, WreathLabel>> {
        let target = WitnessTarget::new(self, n)?;
        let out = wreath_witness(self, g, &target, Case4Route::Auto)?;
        Ok(RawWitness {
            n,
            radius: target.radius(),
            length_bound: target.length_bound(),
            target: target.endpoint().clone(),
            path: out.path,
            detail: json!({ "case": out.case }),
        })
    }
}

impl FamilySpace for GraphWreath<Graph, Graph> {
    /// `m<i>` moves the cursor to its `i`-th neighbor in `A`, `l<i>` moves
    /// the lamp under the cursor to its `i`-th neighbor in `B`. On a line
    /// driver `t`/`t^-1` and `h`/`h^-1` step by `+-1`.
    fn parse_word(&self, s: &str) -> Result<Vec<GWLabel<crate::graph_wreath::GPoint, crate::graph_wreath::GPoint>>> {
        let mut cur = self.basepoint();
        let mut out = Vec::new();
        for tok in s.split_whitespace().filter(|t| !is_identity_token(t)) {
            let (kind, idx) = match tok {
                "t" => ('m', 0),
                "t^-1" => ('m', 1),
                "h" => ('l', 0),
                "h^-1" => ('l', 1),
                _ => {
                    let (k, i) = tok.split_at(1);
                    let i: usize = i.parse().map_err(|_| Error::Parse(format!("bad graph-wreath token '{tok}'")))?;
                    (k.chars().next().unwrap_or(' '), i)
                }
            };
            let line_alias = matches!(tok, "t" | "t^-1" | "h" | "h^-1");
            let label = match kind {
                'm' => {
                    if line_alias && self.base.line_coordinate(&self.base.basepoint()).is_none() {
                        return Err(Error::Parse(format!("'{tok}' needs a line base graph")));
                    }
                    self.base.neighbors(&cur.a).get(idx).cloned().map(GWLabel::Move)
                }
                'l' => {
                    if line_alias && self.lamps.line_coordinate(&self.lamps.basepoint()).is_none() {
                        return Err(Error::Parse(format!("'{tok}' needs a line lamp graph")));
                    }
                    self.lamps.neighbors(&self.value(&cur, &cur.a)).get(idx).cloned().map(GWLabel::Lamp)
                }
                _ => return Err(Error::Parse(format!("bad graph-wreath token '{tok}'"))),
            }
            .ok_or_else(|| Error::Parse(format!("neighbor index out of range in '{tok}'")))?;
            cur = self.apply(&cur, &label).expect("label taken from the neighbor list");
            out.push(label);
        }
        Ok(out)
    }

    fn witness_uses_word(&self) -> bool {
        false
    }

    fn witness(
        &self,
        g: &Self::Vertex,
        n: u64,
        _word: &[Self::Label],
        _mode: AvoidanceMode,
        _limits: Limits,
    ) -> Result<RawWitness<Self::Vertex, Self::Label>> {
        let target = self.target(n)?;
        let (case, path) = self.witness_path(g, &target, n)?;
        Ok(RawWitness {
            n,
            radius: target.radius(),
            length_bound: target.length_bound(),
            target: target.g_star,
            path,
            detail: json!({ "case": case }),
        })
    }
}

impl FamilySpace for DiestelLeader {
    fn parse_word(&self, s: &str) -> Result<Vec<DLMove>> {
        s.split_whitespace().filter(|t| !is_identity_token(t) && *t != "<o1o2>").map(|t| self.parse_move(t)).collect()
    }

    fn witness_uses_word(&self) -> bool {
        false
    }

    fn witness(
        &self,
        g: &Self::Vertex,
        n: u64,
        _word: &[DLMove],
        _mode: AvoidanceMode,
        _limits: Limits,
    ) -> Result<RawWitness<Self::Vertex, DLMove>> {
        if n == 0 {
            return Err(Error::InvalidInput("witness needs n >= 1".into()));
        }
        Ok(RawWitness {
            n,
            radius: Self::witness_radius(n),
            length_bound: Self::witness_length_bound(n),
            target: self.target(n),
            path: self.witness_path(g, n)?,
            detail: json!({ "level": g.level() }),
        })
    }
}

impl FamilySpace for Houghton2 {
    fn parse_word(&self, s: &str) -> Result<Vec<H2Label>> {
        s.split_whitespace().filter(|t| !is_identity_token(t)).map(Self::parse_label).collect()
    }

    fn witness(
        &self,
        _g: &Self::Vertex,
        n: u64,
        word: &[H2Label],
        mode: AvoidanceMode,
        limits: Limits,
    ) -> Result<RawWitness<Self::Vertex, H2Label>> {
        let (k, path) = self.witness_path(word, mode, limits)?;
        Ok(RawWitness {
            n,
            radius: Self::witness_radius(n),
            length_bound: Self::witness_length_bound(n),
            target: Self::target(n),
            path,
            detail: json!({ "k": k }),
        })
    }
}

impl FamilySpace for HoughtonM {
    fn parse_word(&self, s: &str) -> Result<Vec<HmLabel>> {
        s.split_whitespace().filter(|t| !is_identity_token(t)).map(|t| self.parse_label(t)).collect()
    }

    fn witness(
        &self,
        _g: &Self::Vertex,
        n: u64,
        word: &[HmLabel],
        mode: AvoidanceMode,
        limits: Limits,
    ) -> Result<RawWitness<Self::Vertex, HmLabel>> {
        let w = self.witness_path(word, mode, limits)?;
        Ok(RawWitness {
            n,
            radius: Self::witness_radius(n),
            length_bound: Self::witness_length_bound(n),
            target: self.target(n),
            path: w.path,
            detail: json!({ "k": w.k, "far_ray": w.far.0, "far_depth": w.far.1 }),
        })
    }
}

impl FamilySpace for BaumslagSolitar {
    fn parse_word(&self, s: &str) -> Result<Vec<BSLabel>> {
        let s: Vec<&str> = s.split_whitespace().filter(|t| !is_identity_token(t)).collect();
        Self::parse_word(&s.join(" "))
    }

    fn witness(
        &self,
        _g: &Self::Vertex,
        _n: u64,
        word: &[BSLabel],
        mode: AvoidanceMode,
        limits: Limits,
    ) -> Result<RawWitness<Self::Vertex, BSLabel>> {
        let w = self.witness_path(word, mode, limits)?;
        let n = w.n as i64;
        let length_bound = if w.negative_branch { 10 * n + 8 } else { 6 * n - 2 * w.t_level + 4 };
        Ok(RawWitness {
            n: w.n,
            radius: Rational::from_integer(w.radius as i64),
            length_bound: length_bound.max(0) as u64,
            target: self.target(w.n)?,
            detail: json!({
                "norm": word.len(),
                "t_level": w.t_level,
                "negative_branch": w.negative_branch,
                "ray_sign": w.ray_sign,
                "predicted_length": w.predicted_length(),
            }),
            path: w.path,
        })
    }
}

/// A built family.
#[derive(Debug, Clone)]
pub enum Family {
    Wreath(Wreath),
    GraphWreath(GraphWreath<Graph, Graph>),
    Dl(DiestelLeader),
    H2(Houghton2),
    Hm(HoughtonM),
    Bs(BaumslagSolitar),
}

macro_rules! dispatch {
    ($self:expr, $s:ident => $body:expr) => {
        match $self {
            Family::Wreath($s) => $body,
            Family::GraphWreath($s) => $body,
            Family::Dl($s) => $body,
            Family::H2($s) => $body,
            Family::Hm($s) => $body,
            Family::Bs($s) => $body,
        }
    };
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NormReport {
    pub element: String,
    pub word_length: u64,
    pub norm: u64,
    /// `closed-form` or `bfs`.
    pub method: &'static str,
    pub closed_form: Option<u64>,
    pub bfs: Option<u64>,
    pub certificate: u64,
    /// Certificate below the norm, and closed form equal to BFS when both ran.
    pub agree: bool,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct WitnessOptions {
    pub verify: bool,
    pub inject_fault: bool,
    pub certificate_only: bool,
    /// Also run `min_detour` between the same endpoints.
    pub detour: bool,
    pub bound_multiplier: Option<u64>,
}

impl WitnessOptions {
    fn mode(&self) -> AvoidanceMode {
        if self.certificate_only {
            AvoidanceMode::CertificateOnly
        } else {
            AvoidanceMode::Auto
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessOutput {
    pub element: String,
    pub n: u64,
    pub radius: String,
    pub length_bound: u64,
    pub target: String,
    pub length: u64,
    pub labels: Vec<String>,
    pub detail: Value,
    pub fault_injected: bool,
    pub report: Option<WitnessReport>,
    pub detour: Option<Extended>,
}

impl WitnessOutput {
    /// Verified and passing (an unverified output never passes).
    pub fn passed(&self) -> bool {
        self.report.as_ref().is_some_and(|r| r.overall_pass)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SphereSummary {
    pub n: u64,
    pub total: u64,
    pub passed: u64,
    pub failed: u64,
    pub errors: u64,
    pub max_length: u64,
    /// First few failing elements with a reason.
    pub failures: Vec<(String, String)>,
}

impl SphereSummary {
    pub fn all_pass(&self) -> bool {
        self.failed == 0 && self.errors == 0
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub max_norm: u64,
    pub checked: u64,
    pub pairs_checked: u64,
    pub mismatches: u64,
    pub examples: Vec<String>,
}

const MAX_LISTED: usize = 20;

fn geodesic_word<S: MarkedSpace>(s: &S, g: &S::Vertex, word: Vec<S::Label>, limits: Limits) -> Result<Vec<S::Label>> {
    if s.certificate(g) == word.len() as u64 {
        return Ok(word);
    }
    let base = s.basepoint();
    search::bidirectional(s, &base, g, &|_, _, _| Ok(true), limits)?
        .map(|p| p.labels)
        .ok_or_else(|| Error::Invariant("element unreachable from the basepoint".into()))
}

fn corrupt<S: MarkedSpace>(s: &S, path: &mut Path<S::Vertex, S::Label>) {
    if path.labels.is_empty() {
        if let Some((l, _)) = s.neighbors(&path.start).into_iter().next() {
            path.labels.push(l);
        }
        return;
    }
    let i = path.labels.len() / 2;
    let other = s.neighbors(&path.vertices[i]).into_iter().map(|(l, _)| l).find(|l| *l != path.labels[i]);
    match other {
        Some(l) => path.labels[i] = l,
        None => {
            path.labels.remove(i);
        }
    }
}

fn run_norm<S: FamilySpace>(s: &S, word: &str, limits: Limits) -> Result<NormReport> {
    let labels = s.parse_word(word)?;
    let g = Path::from_labels(s, s.basepoint(), labels.clone()).map_err(|e| Error::Parse(e.to_string()))?.end().clone();
    let closed_form = s.exact_norm(&g);
    let base = s.basepoint();
    let bfs = match search::bidirectional(s, &base, &g, &|_, _, _| Ok(true), limits) {
        Ok(p) => p.map(|p| p.labels.len() as u64),
        Err(Error::BudgetExceeded { .. }) if closed_form.is_some() => None,
        Err(e) => return Err(e),
    };
    let (norm, method) = match (closed_form, bfs) {
        (Some(c), _) => (c, "closed-form"),
        (None, Some(b)) => (b, "bfs"),
        (None, None) => return Err(Error::Invariant("element unreachable from the basepoint".into())),
    };
    let certificate = s.certificate(&g);
    let agree = certificate <= norm && bfs.is_none_or(|b| b == norm);
    Ok(NormReport {
        element: s.canonical(&g),
        word_length: labels.len() as u64,
        norm,
        method,
        closed_form,
        bfs,
        certificate,
        agree,
    })
}

/// Build, optionally corrupt and verify the witness for `g`. `word` is any
/// word for `g`; a geodesic one is found by BFS when the family needs it.
pub fn witness_for<S: FamilySpace>(
    s: &S,
    g: &S::Vertex,
    word: Vec<S::Label>,
    opts: WitnessOptions,
    limits: Limits,
) -> Result<WitnessOutput> {
    let (n, word) = if s.witness_uses_word() {
        let w = geodesic_word(s, g, word, limits)?;
        (w.len() as u64, w)
    } else {
        (space::Metric::new(s, limits).norm(g)?, Vec::new())
    };
    let raw = s.witness(g, n, &word, opts.mode(), limits)?;
    let mut path = raw.path;
    if opts.inject_fault {
        corrupt(s, &mut path);
    }
    let base = s.basepoint();
    let report = opts
        .verify
        .then(|| verify_witness(s, &path, &base, raw.radius, &raw.target, raw.length_bound, opts.mode(), limits));
    let detour = if opts.detour {
        let mult = opts.bound_multiplier.unwrap_or(divergence::DEFAULT_BOUND_MULTIPLIER);
        Some(min_detour(s, g, &raw.target, &base, raw.radius, mult * raw.n.max(1), limits)?.length())
    } else {
        None
    };
    Ok(WitnessOutput {
        element: s.canonical(g),
        n: raw.n,
        radius: raw.radius.to_string(),
        length_bound: raw.length_bound,
        target: s.canonical(&raw.target),
        length: path.labels.len() as u64,
        labels: path.labels.iter().map(|l| s.label_name(l)).collect(),
        detail: raw.detail,
        fault_injected: opts.inject_fault,
        report,
        detour,
    })
}

fn run_witness_word<S: FamilySpace>(s: &S, word: &str, opts: WitnessOptions, limits: Limits) -> Result<WitnessOutput> {
    let labels = s.parse_word(word)?;
    let g = Path::from_labels(s, s.basepoint(), labels.clone()).map_err(|e| Error::Parse(e.to_string()))?.end().clone();
    witness_for(s, &g, labels, opts, limits)
}

/// `f(g, geodesic word)` for every `g` on the sphere of radius `n`, in
/// sorted order of `g`.
pub fn sphere_map<S, T, F>(s: &S, n: u64, limits: Limits, f: F) -> Result<Vec<T>>
where
    S: MarkedSpace,
    T: Send,
    F: Fn(&S::Vertex, Vec<S::Label>) -> T + Sync,
{
    let ball = space::ball(s, n, limits)?;
    let sphere = ball.sphere(n);
    Ok(sphere.par_iter().map(|g| f(g, ball.word_to(g).expect("sphere vertex lies in the ball"))).collect())
}

/// Short reason a witness output does not pass.
pub fn failure_reason(out: &WitnessOutput) -> String {
    match &out.report {
        None => "not verified".into(),
        Some(rep) => format!(
            "length {} (bound {}), endpoint {}, edges {}, inside/unverified {}",
            rep.length,
            rep.length_bound,
            rep.endpoints_verified,
            rep.edge_validity,
            rep.avoidance.len() - rep.count(divergence::Verdict::Exact) - rep.count(divergence::Verdict::Certified)
        ),
    }
}

fn run_sphere<S: FamilySpace>(s: &S, n: u64, opts: WitnessOptions, limits: Limits) -> Result<SphereSummary> {
    let opts = WitnessOptions { verify: true, ..opts };
    let results = sphere_map(s, n, limits, |g, word| match witness_for(s, g, word, opts, limits) {
        Ok(out) if out.passed() => Ok((out.length, None)),
        Ok(out) => Ok((out.length, Some((s.canonical(g), failure_reason(&out))))),
        Err(e @ Error::BudgetExceeded { .. }) => Err(e),
        Err(e) => Ok((0, Some((s.canonical(g), format!("error: {e}"))))),
    })?;
    let mut sum = SphereSummary { n, total: 0, passed: 0, failed: 0, errors: 0, max_length: 0, failures: Vec::new() };
    for r in results {
        let (len, fail) = r?;
        sum.total += 1;
        sum.max_length = sum.max_length.max(len);
        match fail {
            None => sum.passed += 1,
            Some((elem, why)) => {
                if why.starts_with("error: ") {
                    sum.errors += 1;
                } else {
                    sum.failed += 1;
                }
                if sum.failures.len() < MAX_LISTED {
                    sum.failures.push((elem, why));
                }
            }
        }
    }
    Ok(sum)
}

fn wrong_formula(v: u64) -> u64 {
    v + v % 2
}

/// Closed-form norms against BFS on `ball(max_norm)`; with `pairs`, also
/// closed-form distances against BFS for every pair in the ball.
fn run_oracle<S: FamilySpace>(s: &S, max_norm: u64, wrong: bool, pairs: bool, limits: Limits) -> Result<OracleReport> {
    if !s.has_closed_form() {
        return Err(Error::UnsupportedParams("this family has no closed-form metric".into()));
    }
    let formula = |v: u64| if wrong { wrong_formula(v) } else { v };
    let ball = space::ball(s, max_norm, limits)?;
    let mut rep = OracleReport { max_norm, checked: 0, pairs_checked: 0, mismatches: 0, examples: Vec::new() };
    for (v, d) in ball.iter() {
        rep.checked += 1;
        let c = s.exact_norm(v).map(formula);
        if c != Some(d) {
            rep.mismatches += 1;
            if rep.examples.len() < MAX_LISTED {
                rep.examples.push(format!("{}: formula {:?}, bfs {d}", s.canonical(v), c));
            }
        }
    }
    if pairs {
        let (count, bad, examples) = all_pairs(s, max_norm, &formula, limits)?;
        rep.pairs_checked = count;
        rep.mismatches += bad;
        rep.examples.extend(examples.into_iter().take(MAX_LISTED.saturating_sub(rep.examples.len())));
    }
    Ok(rep)
}

/// BFS distance from every `u` in `ball(r)` to every `v` in `ball(r)`.
/// A geodesic from `u` to `v` only visits `w` with
/// `d(u,w) + |w| <= |u| + 2r`, so each search is pruned to that ellipse
/// using BFS norms from `ball(2r)`.
fn all_pairs<S: MarkedSpace>(
    s: &S,
    r: u64,
    formula: &(dyn Fn(u64) -> u64 + Sync),
    limits: Limits,
) -> Result<(u64, u64, Vec<String>)> {
    let big = space::ball(s, 2 * r, limits)?.to_map();
    let small: Vec<(S::Vertex, u64)> = big.iter().filter(|(_, &d)| d <= r).map(|(v, &d)| (v.clone(), d)).collect();
    let results: Vec<(u64, u64, Vec<String>)> = small
        .par_iter()
        .map(|(u, nu)| {
            let budget = nu + 2 * r;
            let mut dist: HashMap<S::Vertex, u64> = HashMap::new();
            dist.insert(u.clone(), 0);
            let mut queue = VecDeque::from([u.clone()]);
            while let Some(w) = queue.pop_front() {
                let dw = dist[&w];
                for (_, x) in s.neighbors(&w) {
                    if dist.contains_key(&x) {
                        continue;
                    }
                    match big.get(&x) {
                        Some(&nx) if dw + 1 + nx <= budget => {
                            dist.insert(x.clone(), dw + 1);
                            queue.push_back(x);
                        }
                        _ => {}
                    }
                }
            }
            let mut count = 0;
            let mut bad = 0;
            let mut ex = Vec::new();
            for (v, _) in &small {
                count += 1;
                let c = s.exact_distance(u, v).map(formula);
                let b = dist.get(v).copied();
                if c != b {
                    bad += 1;
                    if ex.len() < 3 {
                        ex.push(format!("d({}, {}): formula {:?}, bfs {:?}", s.canonical(u), s.canonical(v), c, b));
                    }
                }
            }
            (count, bad, ex)
        })
        .collect();
    let mut out = (0, 0, Vec::new());
    for (c, b, e) in results {
        out.0 += c;
        out.1 += b;
        out.2.extend(e);
    }
    Ok(out)
}

impl Family {
    pub fn from_spec(spec: &FamilySpec) -> Result<Self> {
        spec.build()
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Wreath(_) => "wreath",
            Family::GraphWreath(_) => "graph-wreath",
            Family::Dl(_) => "dl",
            Family::H2(_) | Family::Hm(_) => "houghton",
            Family::Bs(_) => "bs",
        }
    }

    pub fn has_closed_form(&self) -> bool {
        dispatch!(self, s => s.has_closed_form())
    }

    /// Canonical form of the element a word spells.
    pub fn element(&self, word: &str) -> Result<String> {
        dispatch!(self, s => {
            let labels = s.parse_word(word)?;
            let p = Path::from_labels(s, s.basepoint(), labels).map_err(|e| Error::Parse(e.to_string()))?;
            Ok(s.canonical(p.end()))
        })
    }

    pub fn norm(&self, word: &str, limits: Limits) -> Result<NormReport> {
        dispatch!(self, s => run_norm(s, word, limits))
    }

    /// The certificate alone; never runs BFS.
    pub fn certificate(&self, word: &str) -> Result<u64> {
        dispatch!(self, s => {
            let labels = s.parse_word(word)?;
            let p = Path::from_labels(s, s.basepoint(), labels).map_err(|e| Error::Parse(e.to_string()))?;
            Ok(s.certificate(p.end()))
        })
    }

    pub fn witness(&self, word: &str, opts: WitnessOptions, limits: Limits) -> Result<WitnessOutput> {
        dispatch!(self, s => run_witness_word(s, word, opts, limits))
    }

    pub fn witness_sphere(&self, n: u64, opts: WitnessOptions, limits: Limits) -> Result<SphereSummary> {
        dispatch!(self, s => run_sphere(s, n, opts, limits))
    }

    pub fn profile(
        &self,
        n: u64,
        params: DivergenceParams,
        strategy: Strategy,
        bound_multiplier: u64,
        limits: Limits,
    ) -> Result<GrowthSample> {
        dispatch!(self, s => divergence::div_profile(s, n, params, strategy, bound_multiplier, limits))
    }

    pub fn oracle(&self, max_norm: u64, wrong_formula: bool, pairs: bool, limits: Limits) -> Result<OracleReport> {
        dispatch!(self, s => run_oracle(s, max_norm, wrong_formula, pairs, limits))
    }

    pub fn sphere_size(&self, n: u64, limits: Limits) -> Result<usize> {
        dispatch!(self, s => Ok(space::sphere(s, n, limits)?.len()))
    }
}

/// `delta` and `gamma` from strings like `1/6` or `0.5`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let a: i64 = a.trim().parse().map_err(|_| Error::Parse(format!("bad rational '{s}'")))?;
        let b: i64 = b.trim().parse().map_err(|_| Error::Parse(format!("bad rational '{s}'")))?;
        if b == 0 {
            return Err(Error::Parse(format!("zero denominator in '{s}'")));
        }
        return Ok(Ratio::new(a, b));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let digits = frac.len() as u32;
        if digits > 12 {
            return Err(Error::Parse(format!("too many decimals in '{s}'")));
        }
        let den = 10i64.pow(digits);
        let neg = int.starts_with('-');
        let i: i64 = if int.is_empty() || int == "-" {
            0
        } else {
            int.parse().map_err(|_| Error::Parse(format!("bad rational '{s}'")))?
        };
        let f: i64 =
            if frac.is_empty() { 0 } else { frac.parse().map_err(|_| Error::Parse(format!("bad rational '{s}'")))? };
        let num = i.abs() * den + f;
        return Ok(Ratio::new(if neg { -num } else { num }, den));
    }
    s.parse::<i64>().map(Ratio::from_integer).map_err(|_| Error::Parse(format!("bad rational '{s}'")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_roundtrip() {
        for s in [
            "lamplighter",
            "wreath:lamp=z3,action=translation",
            "wreath:lamp=z,action=cyclic4",
            "graph-wreath:a=line,b=cycle2",
            "dl:p=2,q=3",
            "houghton:m=2",
            "houghton:m=3",
            "bs:p=2,q=4",
        ] {
            let spec: FamilySpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
            let json = serde_json::to_string(&spec).unwrap();
            assert_eq!(serde_json::from_str::<FamilySpec>(&json).unwrap(), spec);
        }
    }

    #[test]
    fn spec_rejects() {
        assert!(matches!("partition".parse::<FamilySpec>(), Err(Error::UnsupportedParams(_))));
        assert!(matches!("nope".parse::<FamilySpec>(), Err(Error::Parse(_))));
        assert!(matches!("dl:p=2".parse::<FamilySpec>(), Err(Error::Parse(_))));
        assert!("wreath:lamp=z1".parse::<FamilySpec>().is_err());
        assert!("houghton:m=1".parse::<FamilySpec>().is_err());
    }

    #[test]
    fn norms_from_words() {
        let lim = Limits::default();
        let f = FamilySpec::Lamplighter.build().unwrap();
        let r = f.norm("t t t t h0", lim).unwrap();
        assert_eq!((r.norm, r.bfs, r.agree), (5, Some(5), true));
        let f = FamilySpec::Dl { p: 2, q: 3 }.build().unwrap();
        assert_eq!(f.norm("<o1o2>", lim).unwrap().norm, 0);
        let f = FamilySpec::Bs { p: 2, q: 4 }.build().unwrap();
        let r = f.norm("t a a t^-1", lim).unwrap();
        assert_eq!(r.element, f.element("a a a a").unwrap());
        assert_eq!(r.norm, f.norm("a^4", lim).unwrap().norm);
        assert_eq!(r.method, "bfs");
    }

    #[test]
    fn graph_wreath_tokens() {
        let f = "graph-wreath:a=line,b=line".parse::<FamilySpec>().unwrap().build().unwrap();
        let lim = Limits::default();
        assert_eq!(f.norm("t t h", lim).unwrap().norm, 3);
        assert_eq!(f.norm("m0 m0 l0", lim).unwrap().norm, 3);
        assert!(matches!(f.norm("m7", lim), Err(Error::Parse(_))));
        let f = "graph-wreath:a=tree3,b=line".parse::<FamilySpec>().unwrap().build().unwrap();
        assert!(matches!(f.norm("t", lim), Err(Error::Parse(_))));
    }

    #[test]
    fn witness_and_fault() {
        let f = FamilySpec::Lamplighter.build().unwrap();
        let lim = Limits::default();
        let opts = WitnessOptions { verify: true, ..Default::default() };
        let ok = f.witness("t t t t h0", opts, lim).unwrap();
        assert!(ok.passed());
        let bad = f.witness("t t t t h0", WitnessOptions { inject_fault: true, ..opts }, lim).unwrap();
        assert!(!bad.passed());
        assert!(!bad.report.unwrap().edge_validity);
    }

    #[test]
    fn oracle_and_control() {
        let f = FamilySpec::Lamplighter.build().unwrap();
        let lim = Limits::default();
        assert_eq!(f.oracle(5, false, true, lim).unwrap().mismatches, 0);
        assert!(f.oracle(5, true, false, lim).unwrap().mismatches > 0);
        let h = FamilySpec::Houghton { m: 2 }.build().unwrap();
        assert!(matches!(h.oracle(3, false, false, lim), Err(Error::UnsupportedParams(_))));
    }

    #[test]
    fn rationals() {
        assert_eq!(parse_rational("1/6").unwrap(), Ratio::new(1, 6));
        assert_eq!(parse_rational("0.5").unwrap(), Ratio::new(1, 2));
        assert_eq!(parse_rational("2").unwrap(), Ratio::from_integer(2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
    }
}
