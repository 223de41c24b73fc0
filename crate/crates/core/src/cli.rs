//! The `lindiv` command line. Every output carries a `meta` block with the
//! library version, the seed, the resolved configuration and the family.
//!
//! Exit codes: 0 success, 1 other error, 2 verification failure,
//! 3 budget exceeded, 4 parse or usage error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::divergence::{DivergenceParams, Strategy, DEFAULT_BOUND_MULTIPLIER};
use crate::error::Error;
use crate::family::{self, FamilySpec, WitnessOptions};
use crate::space::{Limits, DEFAULT_BFS_CAP};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_VERIFY: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_PARSE: i32 = 4;

/// Environment variable holding the default BFS vertex cap.
pub const BFS_CAP_ENV: &str = "LINDIV_BFS_CAP";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "lindiv", version, about = "Word metrics, detours and divergence witnesses")]
pub struct Cli {
    /// TOML file with default settings; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Vertex cap for every BFS.
    #[arg(long, global = true, env = BFS_CAP_ENV)]
    pub bfs_cap: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct FamilyArgs {
    /// Family name, or a full spec such as `dl:p=2,q=3`.
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub p: Option<u32>,
    #[arg(long)]
    pub q: Option<u32>,
    #[arg(long)]
    pub m: Option<u8>,
    /// Lamp group: `z` or `z<k>`.
    #[arg(long)]
    pub lamp: Option<String>,
    /// Base action: `regular`, `translation`, `two-orbit`, `cyclic<k>`.
    #[arg(long)]
    pub action: Option<String>,
    /// Base graph of a graph wreath product.
    #[arg(long)]
    pub a_graph: Option<String>,
    /// Lamp graph of a graph wreath product.
    #[arg(long)]
    pub b_graph: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the supported families and their word syntax.
    Families,
    /// Norm, certificate and agreement flag of an element.
    Norm {
        #[command(flatten)]
        family: FamilyArgs,
        /// Whitespace-separated word.
        #[arg(long)]
        element: String,
    },
    /// Build the divergence witness for an element or a whole sphere.
    Witness {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, required_unless_present = "all_sphere")]
        element: Option<String>,
        /// Run every element of the sphere of radius `--n`.
        #[arg(long, requires = "n")]
        all_sphere: bool,
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        verify: bool,
        /// Corrupt one label before verification (negative control).
        #[arg(long)]
        inject_fault: bool,
        /// Verify avoidance with the family certificate only.
        #[arg(long)]
        certificate_only: bool,
        /// Also compute the minimal detour between the same endpoints.
        #[arg(long)]
        detour: bool,
        #[arg(long)]
        bound_mult: Option<u64>,
    },
    /// Divergence profile rows `n, value, pairs, exhaustive, wall_time_ms`.
    Divergence {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value_t = 0)]
        n_min: u64,
        #[arg(long, default_value_t = 3)]
        n_max: u64,
        /// `delta` in (0,1), as `1/6` or `0.5`.
        #[arg(long)]
        delta: Option<String>,
        #[arg(long)]
        gamma: Option<String>,
        /// Sample this many pairs per sphere instead of all of them.
        #[arg(long)]
        samples: Option<u64>,
        /// Search every pair instead of one pair per symmetry orbit.
        #[arg(long)]
        no_symmetry: bool,
        #[arg(long)]
        bound_mult: Option<u64>,
    },
    /// Closed-form metric against BFS.
    Oracle {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value_t = 6)]
        max_norm: u64,
        /// Also check every pair of the ball.
        #[arg(long)]
        pairs: bool,
        /// Perturb the formula (negative control; must fail).
        #[arg(long)]
        wrong_formula: bool,
    },
}

/// Settings read from `--config`. Every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub family: Option<String>,
    pub p: Option<u32>,
    pub q: Option<u32>,
    pub m: Option<u8>,
    pub lamp: Option<String>,
    pub action: Option<String>,
    pub a_graph: Option<String>,
    pub b_graph: Option<String>,
    pub seed: Option<u64>,
    pub bfs_cap: Option<usize>,
    pub bound_mult: Option<u64>,
    pub samples: Option<u64>,
    pub delta: Option<String>,
    pub gamma: Option<String>,
    pub format: Option<Format>,
    pub output: Option<PathBuf>,
}

/// Fully resolved settings, echoed in every output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub family: Option<FamilySpec>,
    pub seed: u64,
    pub bfs_cap: usize,
    pub bound_mult: u64,
    pub samples: Option<u64>,
    pub delta: String,
    pub gamma: String,
    pub format: Format,
    pub output: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Lib(Error),
    Verify(String),
    Usage(String),
    Io(std::io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Lib(Error::BudgetExceeded { .. }) => EXIT_BUDGET,
            Failure::Lib(Error::Parse(_)) | Failure::Usage(_) => EXIT_PARSE,
            Failure::Verify(_) => EXIT_VERIFY,
            Failure::Lib(_) | Failure::Io(_) => EXIT_ERROR,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Lib(e) => e.to_string(),
            Failure::Verify(m) => format!("verification failed: {m}"),
            Failure::Usage(m) => m.clone(),
            Failure::Io(e) => format!("i/o error: {e}"),
        }
    }
}

fn family_spec(args: &FamilyArgs, file: &FileConfig) -> Result<FamilySpec, Failure> {
    let name = args
        .family
        .clone()
        .or_else(|| file.family.clone())
        .ok_or_else(|| Failure::Usage("--family is required".into()))?;
    if name.contains(':') {
        return Ok(name.parse()?);
    }
    let mut kv = Vec::new();
    let mut push = |k: &str, v: Option<String>| {
        if let Some(v) = v {
            kv.push(format!("{k}={v}"));
        }
    };
    push("p", args.p.or(file.p).map(|v| v.to_string()));
    push("q", args.q.or(file.q).map(|v| v.to_string()));
    push("m", args.m.or(file.m).map(|v| v.to_string()));
    push("lamp", args.lamp.clone().or_else(|| file.lamp.clone()));
    push("action", args.action.clone().or_else(|| file.action.clone()));
    push("a", args.a_graph.clone().or_else(|| file.a_graph.clone()));
    push("b", args.b_graph.clone().or_else(|| file.b_graph.clone()));
    let full = if kv.is_empty() { name } else { format!("{name}:{}", kv.join(",")) };
    Ok(full.parse()?)
}

fn load_file(path: Option<&PathBuf>) -> Result<FileConfig, Failure> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p)?;
            toml::from_str(&text).map_err(|e| Failure::Lib(Error::Parse(format!("config {}: {e}", p.display()))))
        }
    }
}

fn resolve(cli: &Cli, file: &FileConfig) -> Result<RunConfig, Failure> {
    let (fam, bound_mult, samples, delta, gamma) = match &cli.command {
        Command::Families => (None, None, None, None, None),
        Command::Norm { family, .. } | Command::Oracle { family, .. } => {
            (Some(family_spec(family, file)?), None, None, None, None)
        }
        Command::Witness { family, bound_mult, .. } => {
            (Some(family_spec(family, file)?), *bound_mult, None, None, None)
        }
        Command::Divergence { family, bound_mult, samples, delta, gamma, .. } => {
            (Some(family_spec(family, file)?), *bound_mult, *samples, delta.clone(), gamma.clone())
        }
    };
    let cfg = RunConfig {
        family: fam,
        seed: cli.seed.or(file.seed).unwrap_or(0),
        bfs_cap: cli.bfs_cap.or(file.bfs_cap).unwrap_or(DEFAULT_BFS_CAP),
        bound_mult: bound_mult.or(file.bound_mult).unwrap_or(DEFAULT_BOUND_MULTIPLIER),
        samples: samples.or(file.samples),
        delta: delta.or_else(|| file.delta.clone()).unwrap_or_else(|| "1/6".into()),
        gamma: gamma.or_else(|| file.gamma.clone()).unwrap_or_else(|| "0".into()),
        format: cli.format.or(file.format).unwrap_or_default(),
        output: cli.output.clone().or_else(|| file.output.clone()),
    };
    if cfg.bfs_cap == 0 || cfg.bound_mult == 0 || cfg.samples == Some(0) {
        return Err(Failure::Usage("budgets must be positive".into()));
    }
    Ok(cfg)
}

fn meta(cfg: &RunConfig) -> Value {
    json!({
        "version": env!("CARGO_PKG_VERSION"),
        "seed": cfg.seed,
        "family": cfg.family.as_ref().map(|f| f.to_string()),
        "config": cfg,
    })
}

fn csv_header(cfg: &RunConfig) -> String {
    let mut s = format!("# lindiv {}\n# seed={}\n", env!("CARGO_PKG_VERSION"), cfg.seed);
    if let Some(f) = &cfg.family {
        s.push_str(&format!("# family={f}\n"));
    }
    s.push_str(&format!(
        "# bfs_cap={} bound_mult={} samples={} delta={} gamma={}\n",
        cfg.bfs_cap,
        cfg.bound_mult,
        cfg.samples.map_or("all".into(), |k| k.to_string()),
        cfg.delta,
        cfg.gamma
    ));
    s
}

fn json_doc(cfg: &RunConfig, result: Value) -> String {
    let doc = json!({ "meta": meta(cfg), "result": result });
    serde_json::to_string_pretty(&doc).expect("serializable") + "\n"
}

fn execute(cli: &Cli, cfg: &RunConfig) -> Result<(String, Option<Failure>), Failure> {
    let limits = Limits::with_cap(cfg.bfs_cap);
    let fam = || cfg.family.as_ref().expect("resolved").build();
    match &cli.command {
        Command::Families => {
            if cfg.format == Format::Csv {
                return Err(Failure::Usage("families has no csv form".into()));
            }
            Ok((json_doc(cfg, Value::Array(family::catalog())), None))
        }
        Command::Norm { element, .. } => {
            let r = fam()?.norm(element, limits)?;
            let out = match cfg.format {
                Format::Json => json_doc(cfg, serde_json::to_value(&r).expect("serializable")),
                Format::Csv => format!(
                    "{}element,norm,method,certificate,agree\n\"{}\",{},{},{},{}\n",
                    csv_header(cfg),
                    r.element,
                    r.norm,
                    r.method,
                    r.certificate,
                    r.agree
                ),
            };
            let fail = (!r.agree).then(|| Failure::Verify("certificate or BFS disagrees with the norm".into()));
            Ok((out, fail))
        }
        Command::Witness { element, all_sphere, n, verify, inject_fault, certificate_only, detour, .. } => {
            if cfg.format == Format::Csv {
                return Err(Failure::Usage("witness output is json only".into()));
            }
            let opts = WitnessOptions {
                verify: *verify || *all_sphere,
                inject_fault: *inject_fault,
                certificate_only: *certificate_only,
                detour: *detour,
                bound_multiplier: Some(cfg.bound_mult),
            };
            let f = fam()?;
            if *all_sphere {
                let n = n.expect("clap requires --n");
                let sum = f.witness_sphere(n, opts, limits)?;
                let fail = (!sum.all_pass()).then(|| {
                    Failure::Verify(format!("{} of {} sphere elements failed", sum.failed + sum.errors, sum.total))
                });
                return Ok((json_doc(cfg, serde_json::to_value(&sum).expect("serializable")), fail));
            }
            let out = f.witness(element.as_deref().expect("clap requires --element"), opts, limits)?;
            let fail = (opts.verify && !out.passed()).then(|| Failure::Verify("witness report does not pass".into()));
            Ok((json_doc(cfg, serde_json::to_value(&out).expect("serializable")), fail))
        }
        Command::Divergence { n_min, n_max, no_symmetry, .. } => {
            let params =
                DivergenceParams::new(family::parse_rational(&cfg.delta)?, family::parse_rational(&cfg.gamma)?)?;
            let strategy = match cfg.samples {
                Some(k) => Strategy::Sample { k, seed: cfg.seed },
                None if *no_symmetry => Strategy::AllPairs,
                None => Strategy::Exhaustive,
            };
            let f = fam()?;
            let mut rows = Vec::new();
            let mut over_budget = false;
            for n in *n_min..=*n_max {
                let t = Instant::now();
                let r = f.profile(n, params, strategy, cfg.bound_mult, limits);
                let ms = t.elapsed().as_millis() as u64;
                match r {
                    Ok(s) => rows.push(json!({"n": n, "value": s.value, "pairs": s.pairs_examined,
                                                "exhaustive": s.exhaustive, "searches": s.searches,
                                                "wall_time_ms": ms})),
                    Err(Error::BudgetExceeded { .. }) => {
                        over_budget = true;
                        rows.push(json!({"n": n, "value": "budget-exceeded", "pairs": 0,
                                         "exhaustive": false, "searches": 0, "wall_time_ms": ms}));
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            let out = match cfg.format {
                Format::Json => json_doc(cfg, Value::Array(rows)),
                Format::Csv => {
                    let mut s = csv_header(cfg);
                    s.push_str("n,value,pairs,exhaustive,wall_time_ms\n");
                    for r in &rows {
                        let v = match &r["value"] {
                            Value::String(x) => x.clone(),
                            x => x.to_string(),
                        };
                        s.push_str(&format!(
                            "{},{},{},{},{}\n",
                            r["n"], v, r["pairs"], r["exhaustive"], r["wall_time_ms"]
                        ));
                    }
                    s
                }
            };
            let fail = over_budget.then(|| Failure::Lib(Error::budget("divergence profile", cfg.bfs_cap)));
            Ok((out, fail))
        }
        Command::Oracle { max_norm, pairs, wrong_formula, .. } => {
            if cfg.format == Format::Csv {
                return Err(Failure::Usage("oracle output is json only".into()));
            }
            let r = fam()?.oracle(*max_norm, *wrong_formula, *pairs, limits)?;
            let fail = (r.mismatches > 0).then(|| Failure::Verify(format!("{} mismatches", r.mismatches)));
            Ok((json_doc(cfg, serde_json::to_value(&r).expect("serializable")), fail))
        }
    }
}

/// Parse `args`, run, write the output to `--output` or `out`, and return
/// the exit code. Diagnostics go to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    let result = load_file(cli.config.as_ref())
        .and_then(|file| resolve(&cli, &file))
        .and_then(|cfg| execute(&cli, &cfg).map(|r| (cfg, r)));
    match result {
        Ok((cfg, (text, fail))) => {
            let written = match &cfg.output {
                Some(p) => fs::write(p, &text),
                None => out.write_all(text.as_bytes()),
            };
            if let Err(e) = written {
                let _ = writeln!(err, "lindiv: i/o error: {e}");
                return EXIT_ERROR;
            }
            match fail {
                Some(f) => {
                    let _ = writeln!(err, "lindiv: {}", f.message());
                    f.code()
                }
                None => EXIT_OK,
            }
        }
        Err(f) => {
            let _ = writeln!(err, "lindiv: {}", f.message());
            f.code()
        }
    }
}
