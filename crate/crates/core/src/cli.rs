//! Command-line front end. `main.rs` only parses arguments and maps the
//! result of [`run`] to an exit code.

use std::cell::OnceCell;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::coxeter::{CoxeterError, CoxeterSystem, CoxeterType, ParabolicQuotient, DEFAULT_MAX_GROUP_SIZE, MAX_GROUP_SIZE_ENV};
use crate::hecke::{HeckeContext, ModuleVector};
use crate::klpoly::{
    brenti_identity, check_pkernel, check_updown, kls_polynomials, r_polynomials, verify_pircon_system,
    verify_r_properties, PirconSystem, PolyTable, XParam,
};
use crate::matchings::{check_lifting, dircon_violation, enumerate_spms, orbits, pircon_violation, Refinement};
use crate::poly::HalfLaurent;
use crate::poset::GradedPoset;
use crate::twisted::{TwistedError, TwistedIdentities};

#[derive(Parser, Debug)]
#[command(name = "pircon", version, about = "Kazhdan–Lusztig polynomials and Hecke modules of pircons")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Compute R- and P-tables and Kazhdan–Lusztig basis elements.
    Compute {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated subset of r, p, klbasis.
        #[arg(long, value_delimiter = ',')]
        outputs: Option<Vec<String>>,
    },
    /// Run verification checks and write a JSON report.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated subset of updown, pkernel, system, dircon, duality,
        /// recursion, properties, brenti, lifting. Defaults to all that apply.
        #[arg(long, value_delimiter = ',')]
        checks: Option<Vec<String>>,
    },
    /// List every special partial matching of one element's lower ideal.
    EnumerateSpm {
        #[command(flatten)]
        common: CommonArgs,
        /// Element label; defaults to the top element.
        #[arg(long)]
        w: Option<String>,
    },
    /// Write the Hasse diagram as Graphviz DOT.
    ExportDot {
        #[command(flatten)]
        common: CommonArgs,
        /// Name or index of a system matching to highlight.
        #[arg(long)]
        matching: Option<String>,
    },
}

#[derive(Args, Debug, Default)]
pub struct CommonArgs {
    /// JSON job file; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Coxeter type: A, B, D with --rank, or a full name such as A3, I2(5), A1xB2.
    #[arg(long = "type")]
    pub coxeter_type: Option<String>,
    #[arg(long)]
    pub rank: Option<usize>,
    /// Generators of the parabolic subgroup, 1-based, comma-separated (e.g. 2,3 or s2,s3).
    #[arg(long = "H", value_delimiter = ',')]
    pub h: Option<Vec<String>>,
    /// q, -1 or both.
    #[arg(long = "x", allow_hyphen_values = true)]
    pub x: Option<String>,
    #[arg(long)]
    pub twisted_n: Option<usize>,
    #[arg(long)]
    pub poset_file: Option<PathBuf>,
    #[arg(long)]
    pub refinement_file: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long, env = MAX_GROUP_SIZE_ENV, default_value_t = DEFAULT_MAX_GROUP_SIZE)]
    pub max_group_size: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Dot,
}

/// Job file contents. Exactly one instance kind may be given.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    #[serde(rename = "type")]
    pub coxeter_type: Option<String>,
    pub rank: Option<usize>,
    pub matrix: Option<Vec<Vec<u32>>>,
    #[serde(rename = "H")]
    pub h: Option<Vec<usize>>,
    pub twisted_n: Option<usize>,
    pub poset_file: Option<PathBuf>,
    pub refinement_file: Option<PathBuf>,
    pub x: Option<String>,
    pub outputs: Option<Vec<String>>,
    pub verify: Option<Vec<String>>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub w: Option<String>,
    pub matching: Option<String>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("unsupported group: {0}")]
    Unsupported(String),
    #[error("size bound exceeded: {0}")]
    TooLarge(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Unsupported(_) => 3,
            CliError::TooLarge(_) => 4,
            CliError::Other(_) => 1,
        }
    }
}

impl From<CoxeterError> for CliError {
    fn from(e: CoxeterError) -> Self {
        match e {
            CoxeterError::Unsupported(_) => CliError::Unsupported(e.to_string()),
            CoxeterError::TooLarge { .. } => CliError::TooLarge(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<TwistedError> for CliError {
    fn from(e: TwistedError) -> Self {
        match e {
            TwistedError::Coxeter(c) => c.into(),
            TwistedError::ZeroN => CliError::Config(e.to_string()),
            other => CliError::Other(other.to_string()),
        }
    }
}

/// Verification classes; the exit code of a failed run is 10 plus the index
/// of the first failing class in this order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Check {
    Updown,
    Pkernel,
    System,
    Dircon,
    Duality,
    Recursion,
    Properties,
    Brenti,
    Lifting,
}

impl Check {
    pub const ALL: [Check; 9] = [
        Check::Updown,
        Check::Pkernel,
        Check::System,
        Check::Dircon,
        Check::Duality,
        Check::Recursion,
        Check::Properties,
        Check::Brenti,
        Check::Lifting,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Check::Updown => "updown",
            Check::Pkernel => "pkernel",
            Check::System => "system",
            Check::Dircon => "dircon",
            Check::Duality => "duality",
            Check::Recursion => "recursion",
            Check::Properties => "properties",
            Check::Brenti => "brenti",
            Check::Lifting => "lifting",
        }
    }

    pub fn exit_code(self) -> i32 {
        10 + Check::ALL.iter().position(|&c| c == self).expect("listed") as i32
    }
}

impl FromStr for Check {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        Check::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| CliError::Config(format!("unknown verification {s:?}")))
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

/// One line of a verification report.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub identity: String,
    pub instance: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

enum Source {
    Quotient(ParabolicQuotient),
    Twisted,
    File,
}

/// A built instance: the poset, its system when it has one, and lazily
/// computed tables.
pub struct Instance {
    pub name: String,
    poset: Arc<GradedPoset>,
    system: Option<PirconSystem>,
    refinement: Option<Refinement>,
    source: Source,
    r: [OnceCell<PolyTable>; 2],
    p: [OnceCell<Result<PolyTable, String>>; 2],
    hecke: OnceCell<Result<HeckeContext, String>>,
}

fn slot(x: XParam) -> usize {
    match x {
        XParam::Q => 0,
        XParam::MinusOne => 1,
    }
}

impl Instance {
    pub fn poset(&self) -> &Arc<GradedPoset> {
        &self.poset
    }

    pub fn system(&self) -> Option<&PirconSystem> {
        self.system.as_ref()
    }

    pub fn r_table(&self, x: XParam) -> &PolyTable {
        self.r[slot(x)].get_or_init(|| match (&self.refinement, &self.system) {
            (Some(r), _) => r_polynomials(&self.poset, r, x),
            (None, Some(s)) => s.r_table(x),
            (None, None) => unreachable!("instances without a system carry a refinement"),
        })
    }

    pub fn p_table(&self, x: XParam) -> Result<&PolyTable, CliError> {
        self.p[slot(x)]
            .get_or_init(|| kls_polynomials(self.r_table(x)).map_err(|e| e.to_string()))
            .as_ref()
            .map_err(|e| CliError::Other(format!("{}: {e}", self.name)))
    }

    fn hecke(&self) -> Result<&HeckeContext, String> {
        self.hecke
            .get_or_init(|| {
                let s = self.system.clone().ok_or("the instance has no pircon system")?;
                HeckeContext::new(s).map_err(|e| e.to_string())
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    fn label(&self, u: usize) -> &str {
        self.poset.label(u)
    }
}

fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Parse `A3`, `I2(5)`, `A1xB2`, or a bare family letter combined with `rank`.
pub fn parse_type(s: &str, rank: Option<usize>) -> Result<CoxeterType, CliError> {
    let s = s.trim();
    if s.contains('x') {
        let factors = s.split('x').map(|f| parse_type(f, None)).collect::<Result<Vec<_>, _>>()?;
        return Ok(CoxeterType::Product(factors));
    }
    let bad = || CliError::Config(format!("cannot parse Coxeter type {s:?}"));
    if let Some(rest) = s.strip_prefix("I2") {
        let m = rest
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(bad)?
            .parse()
            .map_err(|_| bad())?;
        return Ok(CoxeterType::I2(m));
    }
    let (family, digits) = s.split_at(s.chars().next().map_or(0, char::len_utf8));
    let n = if digits.is_empty() {
        rank.ok_or_else(|| CliError::Config(format!("type {s} needs --rank")))?
    } else {
        let n: usize = digits.parse().map_err(|_| bad())?;
        if rank.is_some_and(|r| r != n) {
            return Err(CliError::Config(format!("--rank disagrees with type {s}")));
        }
        n
    };
    match family {
        "A" => Ok(CoxeterType::A(n)),
        "B" | "C" => Ok(CoxeterType::B(n)),
        "D" => Ok(CoxeterType::D(n)),
        _ => Err(CliError::Unsupported(s.to_string())),
    }
}

fn parse_generator(s: &str) -> Result<usize, CliError> {
    let t = s.trim();
    let digits = t.strip_prefix('s').unwrap_or(t);
    match digits.parse::<usize>() {
        Ok(i) if i >= 1 => Ok(i - 1),
        _ => Err(CliError::Config(format!("bad generator {s:?} in H"))),
    }
}

fn parse_xs(s: Option<&str>) -> Result<Vec<XParam>, CliError> {
    match s.unwrap_or("both") {
        "both" => Ok(XParam::BOTH.to_vec()),
        other => other.parse::<XParam>().map(|x| vec![x]).map_err(|_| CliError::Config(format!("bad x {other:?}"))),
    }
}

/// Fold flags over the job file.
pub fn merge(common: &CommonArgs) -> Result<JobConfig, CliError> {
    let mut cfg: JobConfig = match &common.config {
        Some(path) => serde_json::from_value(read_json(path)?).map_err(|e| CliError::Config(e.to_string()))?,
        None => JobConfig::default(),
    };
    if let Some(t) = &common.coxeter_type {
        cfg.coxeter_type = Some(t.clone());
    }
    if common.rank.is_some() {
        cfg.rank = common.rank;
    }
    if let Some(h) = &common.h {
        cfg.h = Some(
            h.iter().filter(|s| !s.trim().is_empty()).map(|s| parse_generator(s).map(|i| i + 1)).collect::<Result<_, _>>()?,
        );
    }
    if common.x.is_some() {
        cfg.x = common.x.clone();
    }
    if common.twisted_n.is_some() {
        cfg.twisted_n = common.twisted_n;
    }
    if common.poset_file.is_some() {
        cfg.poset_file = common.poset_file.clone();
    }
    if common.refinement_file.is_some() {
        cfg.refinement_file = common.refinement_file.clone();
    }
    if common.out.is_some() {
        cfg.out = common.out.clone();
    }
    if common.format.is_some() {
        cfg.format = common.format;
    }
    Ok(cfg)
}

pub fn build_instance(cfg: &JobConfig, bound: usize) -> Result<Instance, CliError> {
    let coxeter = cfg.coxeter_type.is_some() || cfg.matrix.is_some();
    let kinds = [coxeter, cfg.twisted_n.is_some(), cfg.poset_file.is_some()];
    match kinds.iter().filter(|&&k| k).count() {
        1 => {}
        0 => return Err(CliError::Config("no instance given (--type, --twisted-n or --poset-file)".into())),
        _ => return Err(CliError::Config("give exactly one of --type/matrix, --twisted-n, --poset-file".into())),
    }
    if cfg.rank.is_some() && cfg.coxeter_type.is_none() {
        return Err(CliError::Config("--rank needs --type".into()));
    }
    if cfg.h.is_some() && !coxeter {
        return Err(CliError::Config("--H applies only to Coxeter instances".into()));
    }
    let (name, poset, system, source) = if coxeter {
        let group = match (&cfg.coxeter_type, &cfg.matrix) {
            (Some(_), Some(_)) => return Err(CliError::Config("give either a type or a matrix".into())),
            (Some(t), None) => CoxeterSystem::build_with_bound(&parse_type(t, cfg.rank)?, bound)?,
            (None, Some(m)) => CoxeterSystem::from_matrix_with_bound(m, bound)?,
            (None, None) => unreachable!(),
        };
        let h: Vec<usize> = cfg
            .h
            .clone()
            .unwrap_or_default()
            .into_iter()
            .map(|i| i.checked_sub(1).ok_or_else(|| CliError::Config("generators are numbered from 1".into())))
            .collect::<Result<_, _>>()?;
        let quot = Arc::new(group).quotient(&h)?;
        let hs: Vec<String> = quot.h().iter().map(|s| format!("s{}", s + 1)).collect();
        let name = format!("{}/H={{{}}}", quot.system().description(), hs.join(","));
        let system = PirconSystem::from_quotient(&quot).map_err(|e| CliError::Other(e.to_string()))?;
        (name, Arc::clone(quot.poset()), Some(system), Source::Quotient(quot))
    } else if let Some(n) = cfg.twisted_n {
        let t = TwistedIdentities::build_with_bound(n, bound)?;
        (format!("twisted-{n}"), Arc::clone(t.poset()), Some(t.into_system()), Source::Twisted)
    } else {
        let path = cfg.poset_file.as_ref().expect("checked above");
        let poset = GradedPoset::from_json(&read_json(path)?).map_err(|e| CliError::Config(e.to_string()))?;
        let name = path.file_stem().map_or_else(|| "poset".into(), |s| s.to_string_lossy().into_owned());
        (name, Arc::new(poset), None, Source::File)
    };
    let refinement = match &cfg.refinement_file {
        Some(path) => Some(
            Refinement::from_json(&poset, &read_json(path)?).map_err(|e| CliError::Config(e.to_string()))?,
        ),
        None if system.is_none() => Some(
            Refinement::first_spm(&poset).map_err(|e| CliError::Other(format!("{name} is not a pircon: {e}")))?,
        ),
        None => None,
    };
    Ok(Instance {
        name,
        poset,
        system,
        refinement,
        source,
        r: Default::default(),
        p: Default::default(),
        hecke: OnceCell::new(),
    })
}

/// Write atomically to `out`, or to stdout.
pub fn write_output(out: Option<&Path>, content: &str) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Other(format!("writing output: {e}"));
    match out {
        None => std::io::stdout().write_all(content.as_bytes()).map_err(io),
        Some(path) => {
            let dir = match path.parent() {
                Some(d) if !d.as_os_str().is_empty() => d,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
            tmp.write_all(content.as_bytes()).map_err(io)?;
            tmp.persist(path).map_err(|e| io(e.error))?;
            Ok(())
        }
    }
}

fn tables_csv(tables: &[(&str, &PolyTable)]) -> String {
    let mut wr = csv::Writer::from_writer(Vec::new());
    wr.write_record(["table", "x", "u", "w", "rank", "coefficients"]).expect("in-memory write");
    for (kind, t) in tables {
        let p = t.poset();
        for (u, w) in t.pairs() {
            let coeffs: Vec<String> = t.value(u, w).coeffs().iter().map(BigInt::to_string).collect();
            wr.write_record([kind, t.x().as_str(), p.label(u), p.label(w), &p.rank_between(u, w).to_string(), &coeffs.join(" ")])
                .expect("in-memory write");
        }
    }
    String::from_utf8(wr.into_inner().expect("in-memory flush")).expect("labels are UTF-8")
}

fn compute(inst: &Instance, cfg: &JobConfig) -> Result<String, CliError> {
    let xs = parse_xs(cfg.x.as_deref())?;
    let outputs = cfg.outputs.clone().unwrap_or_else(|| vec!["r".into(), "p".into()]);
    for o in &outputs {
        if !["r", "p", "klbasis"].contains(&o.as_str()) {
            return Err(CliError::Config(format!("unknown output {o:?}")));
        }
    }
    let want = |k: &str| outputs.iter().any(|o| o == k);
    match cfg.format.unwrap_or(Format::Json) {
        Format::Dot => Ok(inst.poset.to_dot(None)),
        Format::Csv => {
            if want("klbasis") {
                return Err(CliError::Config("klbasis has no CSV form".into()));
            }
            let mut tables = Vec::new();
            for &x in &xs {
                if want("r") {
                    tables.push(("R", inst.r_table(x)));
                }
                if want("p") {
                    tables.push(("P", inst.p_table(x)?));
                }
            }
            Ok(tables_csv(&tables))
        }
        Format::Json => {
            let mut doc = serde_json::Map::new();
            doc.insert("instance".into(), json!(inst.name));
            doc.insert("poset".into(), inst.poset.to_json());
            if want("r") {
                doc.insert("R".into(), Value::Array(xs.iter().map(|&x| inst.r_table(x).to_json(&inst.name)).collect()));
            }
            if want("p") {
                let ps = xs.iter().map(|&x| inst.p_table(x).map(|t| t.to_json(&inst.name))).collect::<Result<_, _>>()?;
                doc.insert("P".into(), Value::Array(ps));
            }
            if want("klbasis") {
                let ctx = inst.hecke().map_err(CliError::Other)?;
                let mut items = Vec::new();
                for &x in &xs {
                    for w in 0..inst.poset.len() {
                        items.push(json!({
                            "x": x.as_str(),
                            "w": inst.label(w),
                            "C": ctx.kl_element_c(w, x).to_json(&inst.poset),
                            "Cprime": ctx.kl_element_cprime(w, x).to_json(&inst.poset),
                        }));
                    }
                }
                doc.insert("klbasis".into(), Value::Array(items));
            }
            Ok(pretty(&Value::Object(doc)))
        }
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON serializes");
    s.push('\n');
    s
}

fn applicable(inst: &Instance, check: Check) -> bool {
    match check {
        Check::Updown | Check::Duality | Check::Recursion => inst.system.is_some(),
        Check::Brenti => matches!(inst.source, Source::Quotient(_)),
        _ => true,
    }
}

fn run_check(inst: &Instance, check: Check, xs: &[XParam]) -> Vec<Report> {
    let mut out = Vec::new();
    let mut push = |identity: &str, instance: String, result: Result<(), String>| {
        out.push(Report {
            identity: identity.to_string(),
            instance,
            status: if result.is_ok() { Status::Pass } else { Status::Fail },
            witness: result.err(),
        });
    };
    let at = |x: XParam| format!("{} x={x}", inst.name);
    let pair = |u: usize, w: usize| format!("({}, {})", inst.label(u), inst.label(w));
    let p = inst.poset.as_ref();
    match check {
        Check::Updown => {
            let sys = inst.system.as_ref().expect("applicable");
            for &x in xs {
                let res = check_updown(sys, inst.r_table(x)).map_err(|w| {
                    let m = w.matching.map_or(String::new(), |m| format!("{}, ", sys.names()[m]));
                    format!("{m}pair {}: expected {}, got {}", pair(w.u, w.w), w.expected, w.actual)
                });
                push("updown", at(x), res);
            }
        }
        Check::Pkernel => {
            for &x in xs {
                push("pkernel", at(x), check_pkernel(inst.r_table(x)).map_err(|(u, v)| pair(u, v)));
            }
        }
        Check::System => {
            let res = match &inst.system {
                Some(s) => verify_pircon_system(p, s.matchings()).map_err(|e| e.to_string()),
                None => match pircon_violation(p) {
                    Some(w) => Err(format!("no SPM below {}", inst.label(w))),
                    None => Ok(()),
                },
            };
            push("system", inst.name.clone(), res);
        }
        Check::Dircon => {
            let res = match dircon_violation(p) {
                Some(w) => Err(format!("incoherent SPMs below {}", inst.label(w))),
                None => Ok(()),
            };
            push("dircon", inst.name.clone(), res);
        }
        Check::Duality => match inst.hecke() {
            Err(e) => push("hecke-context", inst.name.clone(), Err(e)),
            Ok(ctx) => {
                for &x in xs {
                    push("hecke-relations", at(x), ctx.verify_hecke_relations(x).map_err(|f| f.to_string()));
                }
                push("duality", inst.name.clone(), ctx.verify_duality().map_err(|f| f.to_string()));
            }
        },
        Check::Recursion => match inst.hecke() {
            Err(e) => push("hecke-context", inst.name.clone(), Err(e)),
            Ok(ctx) => {
                for &x in xs {
                    push("recursion", at(x), ctx.verify_recursions(x).map_err(|f| f.to_string()));
                    push("characterization", at(x), characterization_battery(ctx, x));
                }
            }
        },
        Check::Properties => {
            let res = verify_r_properties(inst.r_table(XParam::MinusOne), inst.r_table(XParam::Q))
                .map_err(|(prop, u, w)| format!("{prop:?} at {}", pair(u, w)));
            push("properties", inst.name.clone(), res);
        }
        Check::Brenti => {
            let Source::Quotient(quot) = &inst.source else { unreachable!("applicable") };
            for &x in xs {
                let res = brenti_identity(quot, inst.r_table(x))
                    .map_err(|(s, u, w)| format!("s{}, {}", s + 1, pair(u, w)));
                push("brenti", at(x), res);
            }
        }
        Check::Lifting => {
            push("lifting", inst.name.clone(), lifting_and_orbits(inst));
        }
    }
    out
}

/// `characterize` accepts every `C'` and rejects perturbed vectors.
pub fn characterization_battery(ctx: &HeckeContext, x: XParam) -> Result<(), String> {
    let p = ctx.poset();
    for w in 0..p.len() {
        let c = ctx.kl_element_cprime(w, x);
        let label = p.label(w);
        match ctx.characterize(&c, w, x) {
            Ok(true) => {}
            Ok(false) => return Err(format!("C' of {label} rejected")),
            Err(f) => return Err(f.to_string()),
        }
        if Some(w) == p.bottom() {
            continue;
        }
        let r = p.rank(w) as i64;
        let mut perturbed = vec![ModuleVector::basis(w), c.scale(&HalfLaurent::constant(2))];
        for u in p.below_set(w).ones().filter(|&u| u != w) {
            // q^{-rho(w)/2} q^d with d >= rho(u,w)/2 breaks the degree bound.
            let d = (r - p.rank(u) as i64 + 1) / 2;
            let high = HalfLaurent::monomial(BigInt::from(1), 2 * d - r);
            perturbed.push(&c + &ModuleVector::term(u, high));
        }
        for d in perturbed {
            match ctx.characterize(&d, w, x) {
                Ok(false) => {}
                Ok(true) => return Err(format!("perturbed vector accepted for {label}")),
                Err(f) => return Err(f.to_string()),
            }
        }
    }
    Ok(())
}

fn lifting_and_orbits(inst: &Instance) -> Result<(), String> {
    let p = inst.poset.as_ref();
    for w in 0..p.len() {
        if Some(w) == p.bottom() {
            continue;
        }
        for m in enumerate_spms(p, w) {
            check_lifting(p, &m).map_err(|v| format!("SPM of {}: {v}", inst.label(w)))?;
        }
    }
    if let Some(sys) = &inst.system {
        let ms = sys.matchings();
        for (i, m) in ms.iter().enumerate() {
            check_lifting(p, m).map_err(|v| format!("{}: {v}", sys.names()[i]))?;
            for (j, n) in ms.iter().enumerate().skip(i + 1) {
                orbits(p, m, n).map_err(|e| format!("{}, {}: {e}", sys.names()[i], sys.names()[j]))?;
            }
        }
    }
    Ok(())
}

fn verify(inst: &Instance, cfg: &JobConfig) -> Result<(String, i32), CliError> {
    let xs = parse_xs(cfg.x.as_deref())?;
    let checks: Vec<Check> = match &cfg.verify {
        Some(list) => {
            let mut checks = list.iter().map(|s| s.parse()).collect::<Result<Vec<Check>, _>>()?;
            let n = checks.len();
            checks.sort();
            checks.dedup();
            if checks.len() != n {
                return Err(CliError::Config("verification list has duplicates".into()));
            }
            if let Some(c) = checks.iter().find(|&&c| !applicable(inst, c)) {
                return Err(CliError::Config(format!("{c} does not apply to {}", inst.name)));
            }
            checks
        }
        None => Check::ALL.into_iter().filter(|&c| applicable(inst, c)).collect(),
    };
    let results: Vec<(Check, Vec<Report>)> = checks.iter().map(|&c| (c, run_check(inst, c, &xs))).collect();
    let code = results
        .iter()
        .find(|(_, rs)| rs.iter().any(|r| r.status == Status::Fail))
        .map_or(0, |(c, _)| c.exit_code());
    let reports: Vec<&Report> = results.iter().flat_map(|(_, rs)| rs).collect();
    for r in reports.iter().filter(|r| r.status == Status::Fail) {
        eprintln!("FAIL {} [{}]: {}", r.identity, r.instance, r.witness.as_deref().unwrap_or(""));
    }
    Ok((pretty(&serde_json::to_value(&reports).expect("reports serialize")), code))
}

fn find_element(inst: &Instance, label: Option<&str>) -> Result<usize, CliError> {
    match label {
        Some(l) => inst.poset.index_of(l).ok_or_else(|| CliError::Config(format!("unknown element {l:?}"))),
        None => inst.poset.top().ok_or_else(|| CliError::Config("the poset has no top; give --w".into())),
    }
}

fn enumerate(inst: &Instance, cfg: &JobConfig) -> Result<String, CliError> {
    let w = find_element(inst, cfg.w.as_deref())?;
    let spms = enumerate_spms(&inst.poset, w);
    match cfg.format.unwrap_or(Format::Json) {
        Format::Json => Ok(pretty(&json!({
            "poset": inst.name,
            "w": inst.label(w),
            "count": spms.len(),
            "matchings": spms.iter().map(|m| m.to_json(&inst.name)).collect::<Vec<_>>(),
        }))),
        Format::Dot => Ok(spms.iter().map(|m| inst.poset.order_ideal(w).to_dot(Some(&restrict_images(&inst.poset, w, m.images())))).collect()),
        Format::Csv => Err(CliError::Config("enumerate-spm supports json and dot".into())),
    }
}

// Images of a matching on the host poset, renumbered into the ideal of `w`.
fn restrict_images(p: &GradedPoset, w: usize, images: &[Option<usize>]) -> Vec<Option<usize>> {
    let members = p.ideal_members(w);
    let pos = |x: usize| members.iter().position(|&m| m == x);
    members.iter().map(|&x| images[x].and_then(pos)).collect()
}

fn export_dot(inst: &Instance, cfg: &JobConfig) -> Result<String, CliError> {
    if cfg.format.is_some_and(|f| f != Format::Dot) {
        return Err(CliError::Config("export-dot writes dot only".into()));
    }
    let Some(name) = &cfg.matching else { return Ok(inst.poset.to_dot(None)) };
    let sys = inst.system.as_ref().ok_or_else(|| CliError::Config("the instance has no matchings".into()))?;
    let idx = sys
        .names()
        .iter()
        .position(|n| n == name)
        .or_else(|| name.parse::<usize>().ok().filter(|&i| i < sys.matchings().len()))
        .ok_or_else(|| CliError::Config(format!("unknown matching {name:?}; have {}", sys.names().join(", "))))?;
    Ok(inst.poset.to_dot(Some(sys.matchings()[idx].images())))
}

/// Run a parsed command. `Ok` carries the exit code: zero, or `10 + k` for
/// the first failing verification class `k`.
pub fn run(cli: Cli) -> Result<i32, CliError> {
    let (common, mut cfg) = match &cli.command {
        Command::Compute { common, outputs } => {
            let mut cfg = merge(common)?;
            if outputs.is_some() {
                cfg.outputs = outputs.clone();
            }
            (common, cfg)
        }
        Command::Verify { common, checks } => {
            let mut cfg = merge(common)?;
            if checks.is_some() {
                cfg.verify = checks.clone();
            }
            (common, cfg)
        }
        Command::EnumerateSpm { common, w } => {
            let mut cfg = merge(common)?;
            if w.is_some() {
                cfg.w = w.clone();
            }
            (common, cfg)
        }
        Command::ExportDot { common, matching } => {
            let mut cfg = merge(common)?;
            if matching.is_some() {
                cfg.matching = matching.clone();
            }
            (common, cfg)
        }
    };
    let inst = build_instance(&cfg, common.max_group_size)?;
    let out = cfg.out.take();
    let (text, code) = match cli.command {
        Command::Compute { .. } => (compute(&inst, &cfg)?, 0),
        Command::Verify { .. } => verify(&inst, &cfg)?,
        Command::EnumerateSpm { .. } => (enumerate(&inst, &cfg)?, 0),
        Command::ExportDot { .. } => (export_dot(&inst, &cfg)?, 0),
    };
    write_output(out.as_deref(), &text)?;
    Ok(code)
}
