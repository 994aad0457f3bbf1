//! Command-line front end: run configurations, dispatch, JSON and CSV
//! reports.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::boundarycycles::{boundary_localization, boundary_of, check_boundary_identity, check_hecke_generation};
use crate::cosets::SubgroupSpec;
use crate::error::{Error, Result};
use crate::exactlinalg::ring::{is_prime, RingSpec};
use crate::foxhomology::compute_h1;
use crate::heckeops::{beta_matrix, double_coset, factor, format_poly};
use crate::ordinary::{cycle_quotient_report, ordinary_part, verify_main_theorem, Budget, Verdict};
use crate::psl2words::{decompose_word, quadratic_form, Mat2, ProjectiveMatrix};
use crate::symcoeffs::Poly2k;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Exit code for errors.
pub const EXIT_ERROR: i32 = 3;

const COMMANDS: [&str; 8] = ["h1", "cycle", "hecke", "ordinary", "verify-main", "quotient", "boundary", "check-identity"];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct BudgetConfig {
    pub max_word_len: usize,
    pub max_generators: usize,
    pub patience: usize,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        let b = Budget::default();
        Self { max_word_len: b.max_word_len, max_generators: b.max_generators, patience: b.patience }
    }
}

/// One run. Every report embeds the configuration that produced it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,
    pub group: String,
    pub k: usize,
    pub ring: String,
    pub p: Option<u64>,
    #[serde(rename = "M")]
    pub m: u32,
    /// `Tp`, `Up` or `diamond:d` for `hecke`.
    pub op: Option<String>,
    /// Matrix `[[a,b],[c,d]]` for `cycle`.
    pub gamma: Option<String>,
    /// `N` for `check-identity` (the group is `Γ₁(N²)`).
    pub n: Option<u64>,
    pub localize: bool,
    pub generation: bool,
    pub budget: BudgetConfig,
    pub seed: u64,
    pub output: Option<String>,
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: "h1".into(),
            group: "gamma0:1".into(),
            k: 0,
            ring: "Z".into(),
            p: None,
            m: 2,
            op: None,
            gamma: None,
            n: None,
            localize: false,
            generation: false,
            budget: BudgetConfig::default(),
            seed: 0,
            output: None,
            format: Format::Json,
        }
    }
}

enum HeckeOp {
    T(u64),
    U(u64),
    Diamond(u64),
}

impl RunConfig {
    pub fn spec(&self) -> Result<SubgroupSpec> {
        self.group.parse()
    }

    pub fn ring_spec(&self) -> Result<RingSpec> {
        let r: RingSpec = self.ring.parse()?;
        r.validate()?;
        Ok(r)
    }

    pub fn budget(&self) -> Budget {
        Budget {
            max_word_len: self.budget.max_word_len,
            max_generators: self.budget.max_generators,
            patience: self.budget.patience,
            seed: self.seed,
        }
    }

    fn prime(&self) -> Result<u64> {
        let p = self.p.ok_or_else(|| Error::InvalidInput(format!("`{}` needs --p", self.command)))?;
        if !is_prime(p) {
            return Err(Error::InvalidInput(format!("{p} is not prime")));
        }
        Ok(p)
    }

    fn hecke_op(&self, level: u64) -> Result<HeckeOp> {
        let op = self.op.as_deref().ok_or_else(|| Error::InvalidInput("`hecke` needs --op".into()))?;
        match op {
            "Tp" | "Up" => {
                let p = self.prime()?;
                let divides = level.is_multiple_of(p);
                if op == "Tp" && divides {
                    return Err(Error::WrongDivisibility(format!("T_{p} needs {p} ∤ {level}; use Up")));
                }
                if op == "Up" && !divides {
                    return Err(Error::WrongDivisibility(format!("U_{p} needs {p} | {level}; use Tp")));
                }
                Ok(if divides { HeckeOp::U(p) } else { HeckeOp::T(p) })
            }
            _ => {
                let d = op
                    .strip_prefix("diamond:")
                    .and_then(|d| d.parse::<u64>().ok())
                    .ok_or_else(|| Error::InvalidInput(format!("unknown operator `{op}`; expected Tp, Up or diamond:d")))?;
                if d.gcd(&level) != 1 {
                    return Err(Error::WrongDivisibility(format!("⟨{d}⟩ needs gcd({d}, {level}) = 1")));
                }
                Ok(HeckeOp::Diamond(d))
            }
        }
    }

    /// Checks parameter combinations before any computation.
    pub fn validate(&self) -> Result<()> {
        if !COMMANDS.contains(&self.command.as_str()) {
            return Err(Error::InvalidInput(format!("unknown command `{}`", self.command)));
        }
        let spec = self.spec()?;
        self.ring_spec()?;
        match self.command.as_str() {
            "cycle" => {
                let g = self.gamma.as_deref().ok_or_else(|| Error::InvalidInput("`cycle` needs --gamma".into()))?;
                g.parse::<ProjectiveMatrix>()?;
            }
            "hecke" => {
                self.hecke_op(spec.level())?;
            }
            "ordinary" | "verify-main" => {
                self.prime()?;
                if self.m == 0 {
                    return Err(Error::InvalidInput("M must be at least 1".into()));
                }
            }
            "check-identity" => {
                let p = self.prime()?;
                let n = self.n.ok_or_else(|| Error::InvalidInput("`check-identity` needs --n".into()))?;
                if n == 0 || n % p == 0 {
                    return Err(Error::WrongDivisibility(format!("the identity needs {p} ∤ N = {n}")));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// A finished run: the report body and the exit code it implies.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub report: Value,
    pub verdict: Option<Verdict>,
    pub exit_code: i32,
}

impl Outcome {
    fn ok(report: Value) -> Self {
        Self { report, verdict: None, exit_code: 0 }
    }

    fn judged(report: Value, verdict: Verdict) -> Self {
        Self { report, verdict: Some(verdict), exit_code: verdict.exit_code() }
    }
}

fn strings(v: &[BigInt]) -> Vec<String> {
    v.iter().map(|x| x.to_string()).collect()
}

fn to_value<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("reports serialize")
}

/// Additive order of a class with coordinates `c` (0 when infinite).
fn class_order(c: &[BigInt], moduli: &[BigInt]) -> BigInt {
    let mut order = BigInt::one();
    for (x, m) in c.iter().zip(moduli) {
        if x.is_zero() {
            continue;
        }
        if m.is_zero() {
            return BigInt::zero();
        }
        order = order.lcm(&(m / m.gcd(x)));
    }
    order
}

fn run_h1(cfg: &RunConfig) -> Result<Outcome> {
    let spec = cfg.spec()?;
    let h = compute_h1(&spec, cfg.k, cfg.ring_spec()?)?;
    Ok(Outcome::ok(json!({
        "level": spec.level(),
        "group": spec.to_string(),
        "k": cfg.k,
        "ring": h.ring().to_string(),
        "invariant_factors": strings(h.module().invariant_factors()),
        "rank": h.module().free_rank(),
        "index": h.table().index(),
    })))
}

fn run_cycle(cfg: &RunConfig) -> Result<Outcome> {
    let spec = cfg.spec()?;
    let gamma: ProjectiveMatrix = cfg.gamma.as_deref().unwrap_or_default().parse()?;
    let h = compute_h1(&spec, cfg.k, cfg.ring_spec()?)?;
    let in_group = h.table().contains(&gamma);
    if !in_group {
        return Err(Error::InvalidInput(format!("{gamma} is not in {spec}")));
    }
    let q = quadratic_form(&gamma)?;
    let coords = h.z_coords(&gamma)?;
    let moduli = h.module().moduli();
    let reduced: Vec<BigInt> = coords.iter().zip(moduli).map(|(x, m)| if m.is_zero() { x.clone() } else { x.mod_floor(m) }).collect();
    let coefficient = Poly2k::quad_power(&q, cfg.k);
    Ok(Outcome::ok(json!({
        "group": spec.to_string(),
        "k": cfg.k,
        "ring": h.ring().to_string(),
        "gamma": gamma.to_string(),
        "class": format!("{:?}", gamma.classify()),
        "trace": gamma.rep().trace().to_string(),
        "word": decompose_word(&gamma).to_string(),
        "quadratic_form": q.to_string(),
        "coefficient": crate::psl2words::format_form(coefficient.coeffs()),
        "invariant_factors": strings(h.module().invariant_factors()),
        "coordinates": strings(&reduced),
        "order": class_order(&reduced, moduli).to_string(),
    })))
}

fn run_hecke(cfg: &RunConfig) -> Result<Outcome> {
    let spec = cfg.spec()?;
    let ring = cfg.ring_spec()?;
    let h = compute_h1(&spec, cfg.k, ring)?;
    let (name, alpha): (String, Mat2) = match cfg.hecke_op(spec.level())? {
        HeckeOp::T(p) => (format!("T{p}"), Mat2::diag(1, p as i64)),
        HeckeOp::U(p) => (format!("U{p}"), Mat2::diag(1, p as i64)),
        HeckeOp::Diamond(d) => (format!("<{d}>"), beta_matrix(spec.level(), d)?),
    };
    let op = double_coset(&h, &h, &alpha)?;
    let (charpoly, coefficients, factorization) = match op.charpoly(h.module()) {
        Ok(f) => {
            let modulus = match ring {
                RingSpec::PrimeField(p) => Some(p),
                _ => None,
            };
            (Some(format_poly(&f)), Some(strings(&f)), Some(factor(&f, modulus).to_string()))
        }
        Err(_) => (None, None, None),
    };
    let matrix: Vec<Vec<String>> = op.matrix.to_nested().iter().map(|r| strings(r)).collect();
    Ok(Outcome::ok(json!({
        "group": spec.to_string(),
        "k": cfg.k,
        "ring": ring.to_string(),
        "op": name,
        "alpha": alpha.to_string(),
        "cosets": op.cosets,
        "invariant_factors": strings(h.module().invariant_factors()),
        "matrix": matrix,
        "charpoly": charpoly,
        "charpoly_coefficients": coefficients,
        "factorization": factorization,
    })))
}

fn run_ordinary(cfg: &RunConfig) -> Result<Outcome> {
    let spec = cfg.spec()?;
    let p = cfg.prime()?;
    let o = ordinary_part(&spec, cfg.k, p, cfg.m)?;
    let d = &o.decomposition;
    Ok(Outcome::ok(json!({
        "group": spec.to_string(),
        "k": cfg.k,
        "p": p,
        "M": cfg.m,
        "ring": o.homology.ring().to_string(),
        "invariant_factors": strings(o.homology.module().invariant_factors()),
        "ordinary_rank": d.ordinary_rank,
        "ordinary_invariant_factors": strings(&d.ordinary.invariant_factors()),
        "nilpotent_rank": d.nilpotent_rank,
        "idempotent_exponent": d.exponent.to_string(),
        "stabilization_exponent": d.stabilization_exponent,
    })))
}

fn run_boundary(cfg: &RunConfig) -> Result<Outcome> {
    let spec = cfg.spec()?;
    let ring = cfg.ring_spec()?;
    let h = compute_h1(&spec, cfg.k, ring)?;
    let b = boundary_of(&h)?;
    let cusps: Vec<Value> = b
        .cusps
        .iter()
        .map(|c| {
            json!({
                "representative": c.representative.to_string(),
                "width": c.width,
                "stabilizer_generator": c.stabilizer_generator.to_string(),
            })
        })
        .collect();
    let mut report = json!({
        "group": spec.to_string(),
        "k": cfg.k,
        "ring": ring.to_string(),
        "cusps": cusps,
        "invariant_factors": strings(&b.invariant_factors()),
        "rank": b.rank(),
        "homology_invariant_factors": strings(h.module().invariant_factors()),
    });
    let mut verdicts = Vec::new();
    if cfg.localize {
        let r = boundary_localization(&spec, cfg.k, &cfg.budget())?;
        verdicts.push(r.verdict);
        report["localization"] = to_value(&r);
    }
    if cfg.generation {
        let r = check_hecke_generation(&spec, cfg.k, ring, &cfg.budget())?;
        verdicts.push(r.verdict);
        report["generation"] = to_value(&r);
    }
    Ok(match worst(&verdicts) {
        Some(v) => Outcome::judged(report, v),
        None => Outcome::ok(report),
    })
}

/// Falsified dominates Inconclusive, which dominates Verified.
fn worst(vs: &[Verdict]) -> Option<Verdict> {
    vs.iter().copied().max_by_key(|v| match v {
        Verdict::Verified => 0,
        Verdict::Inconclusive => 1,
        Verdict::Falsified => 2,
    })
}

/// Runs one configuration and returns its report body.
pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    cfg.validate()?;
    match cfg.command.as_str() {
        "h1" => run_h1(cfg),
        "cycle" => run_cycle(cfg),
        "hecke" => run_hecke(cfg),
        "ordinary" => run_ordinary(cfg),
        "verify-main" => {
            let r = verify_main_theorem(&cfg.spec()?, cfg.k, cfg.prime()?, cfg.m, &cfg.budget())?;
            Ok(Outcome::judged(to_value(&r), r.verdict))
        }
        "quotient" => {
            let r = cycle_quotient_report(&cfg.spec()?, cfg.k, &cfg.budget())?;
            Ok(Outcome::judged(to_value(&r), r.verdict))
        }
        "boundary" => run_boundary(cfg),
        "check-identity" => {
            let r = check_boundary_identity(cfg.n.unwrap_or(0), cfg.prime()?, cfg.k, cfg.ring_spec()?)?;
            Ok(Outcome::judged(to_value(&r), r.verdict))
        }
        other => Err(Error::InvalidInput(format!("unknown command `{other}`"))),
    }
}

fn envelope(cfg: &RunConfig, mut body: Value) -> Value {
    if let Value::Object(map) = &mut body {
        map.insert("config".into(), to_value(cfg));
        map.insert("tool".into(), json!("hypcycle"));
        map.insert("version".into(), json!(VERSION));
    }
    body
}

fn error_value(e: &Error) -> Value {
    json!({ "error": { "kind": e.kind(), "message": e.to_string() } })
}

/// The full JSON document of a run and its exit code.
pub fn run_document(cfg: &RunConfig) -> (Value, i32) {
    match run(cfg) {
        Ok(o) => (envelope(cfg, o.report), o.exit_code),
        Err(e) => (envelope(cfg, error_value(&e)), EXIT_ERROR),
    }
}

const CSV_HEADER: [&str; 13] = ["index", "command", "group", "k", "ring", "p", "M", "seed", "status", "verdict", "exit_code", "error", "report"];

fn csv_row(index: usize, cfg: &RunConfig, result: &Result<Outcome>) -> Vec<String> {
    let opt = |x: Option<u64>| x.map(|v| v.to_string()).unwrap_or_default();
    let mut row = vec![
        index.to_string(),
        cfg.command.clone(),
        cfg.group.clone(),
        cfg.k.to_string(),
        cfg.ring.clone(),
        opt(cfg.p),
        cfg.m.to_string(),
        cfg.seed.to_string(),
    ];
    match result {
        Ok(o) => row.extend([
            "ok".to_string(),
            o.verdict.map(|v| format!("{v:?}")).unwrap_or_default(),
            o.exit_code.to_string(),
            String::new(),
            serde_json::to_string(&o.report).expect("reports serialize"),
        ]),
        Err(e) => row.extend([
            "error".to_string(),
            String::new(),
            EXIT_ERROR.to_string(),
            format!("{}: {e}", e.kind()),
            String::new(),
        ]),
    }
    row
}

fn write_csv(rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::InvalidInput(format!("csv: {e}"));
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("utf-8 fields"))
}

/// Reads a manifest: a JSON array of run configurations.
pub fn read_manifest(path: &Path) -> Result<Vec<Value>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("manifest: {e}")))
}

/// Runs every manifest row (in parallel) and returns the CSV and exit code.
///
/// Rows that fail to parse or run become error rows; the exit code is 1 if
/// any row is Falsified, otherwise 2 if any row errored or is Inconclusive.
pub fn batch(rows: &[Value]) -> Result<(String, i32)> {
    let results: Vec<(RunConfig, Result<Outcome>)> = rows
        .par_iter()
        .map(|v| match serde_json::from_value::<RunConfig>(v.clone()) {
            Ok(cfg) => {
                let r = run(&cfg).map(|o| Outcome { report: envelope(&cfg, o.report), ..o });
                (cfg, r)
            }
            Err(e) => (RunConfig { command: v.get("command").and_then(Value::as_str).unwrap_or("").into(), ..RunConfig::default() }, Err(Error::InvalidInput(format!("config: {e}")))),
        })
        .collect();
    let mut code = 0;
    let mut table = Vec::new();
    for (i, (cfg, r)) in results.iter().enumerate() {
        code = match r {
            Ok(o) if o.exit_code == 1 => 1,
            Ok(o) if o.exit_code == 0 => code,
            _ if code == 1 => 1,
            _ => 2,
        };
        table.push(csv_row(i, cfg, r));
    }
    Ok((write_csv(&table)?, code))
}

#[derive(Parser, Debug)]
#[command(name = "hypcycle", version, about = "Homology of congruence subgroups, hyperbolic cycles and Hecke operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// gamma0:N, gamma1:N or gammaH:N:h1,h2,...
    #[arg(long, default_value = "gamma0:1")]
    group: String,
    /// Coefficients V_{2k}.
    #[arg(long, default_value_t = 0)]
    k: usize,
    /// Z, Q, F<p> or Zp:<p>:<M>.
    #[arg(long, default_value = "Z")]
    ring: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = BudgetConfig::default().max_word_len)]
    max_word_len: usize,
    #[arg(long, default_value_t = BudgetConfig::default().max_generators)]
    max_generators: usize,
    #[arg(long, default_value_t = BudgetConfig::default().patience)]
    patience: usize,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Debug, Clone)]
struct PrimeArgs {
    #[arg(long)]
    p: u64,
    #[arg(long = "M", default_value_t = 2)]
    m: u32,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Invariant factors of H₁.
    H1(Common),
    /// Cycle class of a hyperbolic or parabolic element.
    Cycle {
        #[arg(long)]
        gamma: String,
        #[command(flatten)]
        common: Common,
    },
    /// Hecke or diamond operator matrix and characteristic polynomial.
    Hecke {
        /// Tp, Up or diamond:d
        #[arg(long)]
        op: String,
        #[arg(long)]
        p: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Ordinary part over Z/p^M.
    Ordinary {
        #[command(flatten)]
        prime: PrimeArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Checks that hyperbolic cycles span the ordinary part.
    VerifyMain {
        #[command(flatten)]
        prime: PrimeArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Structure and non-ordinarity of H₁ modulo hyperbolic cycles.
    Quotient(Common),
    /// Cusp data and the boundary subgroup.
    Boundary {
        /// Compare with the integral span of hyperbolic cycles.
        #[arg(long)]
        localize: bool,
        /// Check generation by the cycle of T under Hecke operators.
        #[arg(long)]
        generation: bool,
        #[command(flatten)]
        common: Common,
    },
    /// T_p 𝔷(T) = (1 + p^{2k+1}⟨p⟩) 𝔷(T) on Γ₁(N²).
    CheckIdentity {
        #[arg(long, alias = "N")]
        n: u64,
        #[arg(long)]
        p: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Runs a JSON manifest of configurations and prints CSV.
    Batch {
        manifest: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn config_from(command: &str, c: &Common) -> RunConfig {
    RunConfig {
        command: command.into(),
        group: c.group.clone(),
        k: c.k,
        ring: c.ring.clone(),
        seed: c.seed,
        budget: BudgetConfig { max_word_len: c.max_word_len, max_generators: c.max_generators, patience: c.patience },
        output: c.output.as_ref().map(|p| p.display().to_string()),
        format: c.format,
        ..RunConfig::default()
    }
}

fn to_config(cmd: &Command) -> Option<RunConfig> {
    Some(match cmd {
        Command::H1(c) => config_from("h1", c),
        Command::Cycle { gamma, common } => RunConfig { gamma: Some(gamma.clone()), ..config_from("cycle", common) },
        Command::Hecke { op, p, common } => RunConfig { op: Some(op.clone()), p: *p, ..config_from("hecke", common) },
        Command::Ordinary { prime, common } => RunConfig { p: Some(prime.p), m: prime.m, ..config_from("ordinary", common) },
        Command::VerifyMain { prime, common } => RunConfig { p: Some(prime.p), m: prime.m, ..config_from("verify-main", common) },
        Command::Quotient(c) => config_from("quotient", c),
        Command::Boundary { localize, generation, common } => RunConfig { localize: *localize, generation: *generation, ..config_from("boundary", common) },
        Command::CheckIdentity { n, p, common } => RunConfig { n: Some(*n), p: Some(*p), ..config_from("check-identity", common) },
        Command::Batch { .. } => return None,
    })
}

fn emit(text: &str, output: Option<&Path>) -> std::io::Result<()> {
    match output {
        Some(path) => std::fs::write(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Caps rayon's global pool at `HYPCYCLE_THREADS` when set.
pub fn configure_threads() {
    if let Some(n) = std::env::var("HYPCYCLE_THREADS").ok().and_then(|s| s.parse::<usize>().ok()).filter(|&n| n > 0) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Renders a single run in the requested format.
pub fn render(cfg: &RunConfig) -> (String, i32) {
    match cfg.format {
        Format::Json => {
            let (doc, code) = run_document(cfg);
            (serde_json::to_string_pretty(&doc).expect("reports serialize") + "\n", code)
        }
        Format::Csv => {
            let r = run(cfg).map(|o| Outcome { report: envelope(cfg, o.report), ..o });
            let code = r.as_ref().map(|o| o.exit_code).unwrap_or(EXIT_ERROR);
            (write_csv(&[csv_row(0, cfg, &r)]).expect("csv"), code)
        }
    }
}

/// Entry point shared by the binary and tests; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = e.print();
                return 0;
            }
            eprint!("{e}");
            let doc = json!({ "error": { "kind": "Usage", "message": e.to_string().trim() }, "tool": "hypcycle", "version": VERSION });
            println!("{}", serde_json::to_string_pretty(&doc).expect("json"));
            return EXIT_ERROR;
        }
    };
    configure_threads();
    if let Command::Batch { manifest, output } = &cli.command {
        let outcome = read_manifest(manifest).and_then(|rows| batch(&rows));
        return match outcome {
            Ok((text, code)) => match emit(&text, output.as_deref()) {
                Ok(()) => code,
                Err(e) => {
                    eprintln!("cannot write output: {e}");
                    EXIT_ERROR
                }
            },
            Err(e) => {
                println!("{}", serde_json::to_string_pretty(&error_value(&e)).expect("json"));
                EXIT_ERROR
            }
        };
    }
    let cfg = to_config(&cli.command).expect("non-batch command");
    let (text, code) = render(&cfg);
    match emit(&text, cfg.output.as_deref().map(Path::new)) {
        Ok(()) => code,
        Err(e) => {
            eprintln!("cannot write output: {e}");
            EXIT_ERROR
        }
    }
}
