use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use cantorkit::real::{self, Dyadic as GDyadic, OpenCover, Rational};
use cantorkit::{
    check_suite, fan_modulus, psi_sup, qffan_bound, sup_cantor, ufan2_bound, xi, BinWord, Budget, CheckConfig, Corpus,
    DslProgram, DyadicInt, Error, FanConfig, Functional2Family, Point, RealConfig, RealExpr, RealFunction,
    SeqFunctional, Status, Suite, Tree,
};
use clap::{Args, Parser, Subcommand};
use num_bigint::BigInt;
use serde::ser::{Serialize, SerializeMap, Serializer};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "cantorkit", version, about = "Exact search over Cantor space and exact analysis on [0,1]")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// DSL source file
    #[arg(long)]
    def: Option<PathBuf>,
    /// Definition to use; defaults to the first in the file
    #[arg(long)]
    name: Option<String>,
    /// Work units available to the search (default: $CANTORKIT_BUDGET or 2^26)
    #[arg(long)]
    budget: Option<u64>,
    /// Steps allowed per evaluation
    #[arg(long, default_value_t = cantorkit::DEFAULT_STEP_LIMIT)]
    steps: u64,
    /// Print JSON instead of text
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Least uniform modulus, certified by doubling the depth
    Fan {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 5)]
        m0: usize,
        #[arg(long, default_value_t = 20)]
        max_depth: usize,
    },
    /// The ps approximation at depth M, next to xi
    Psfan {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10)]
        m: usize,
    },
    /// Supremum over Cantor space with a witness
    Sup {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, default_value_t = 20)]
        max_depth: usize,
    },
    /// Bar depth of a tree `func T(s, n)`
    Bar {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 12)]
        max_depth: usize,
    },
    /// Fan-theorem bound of a predicate `func H(a, n)`
    Qffan {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 12)]
        max_depth: usize,
        /// Also print the table of local bounds
        #[arg(long)]
        local: bool,
    },
    /// Modulus and maximum of `func L(z, i)` below a bound `w@c`
    Ubp {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "1@1")]
        y: String,
        #[arg(long, default_value_t = 1)]
        k: u64,
        #[arg(long, default_value_t = 6)]
        m: usize,
    },
    /// Pointwise modulus at a word
    Delta {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "")]
        word: String,
        #[arg(long, default_value_t = 10)]
        m: usize,
    },
    /// Associate table truncated at the export depth
    Assoc {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 6)]
        m: usize,
        #[arg(long)]
        export_depth: Option<usize>,
        /// Decode the associate at this word
        #[arg(long)]
        word: Option<String>,
    },
    /// Modulus of uniform continuity for tolerance 1/k
    Ucmod {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10)]
        k: u64,
        #[arg(long, default_value_t = 20)]
        max_depth: usize,
    },
    /// Positivity bound from the grid i/m
    Posbound {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 8)]
        m: u64,
    },
    /// Supremum on [0,1] within 2^-k
    Supreal {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 6)]
        k: u32,
        #[arg(long, default_value_t = 20)]
        max_depth: usize,
    },
    /// Integral over [0,1] within 2^-k
    Integrate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10)]
        k: u32,
        #[arg(long, default_value_t = 20)]
        max_depth: usize,
    },
    /// Finite subcover of [0,1] from a JSON list of [c, d] pairs
    Cover {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        cover: PathBuf,
        #[arg(long, default_value_t = 12)]
        resolution: u32,
        /// Use only the first N intervals
        #[arg(long)]
        cap: Option<usize>,
    },
    /// Bound on |F| from the grid i/m
    Finbound {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 8)]
        m: u64,
    },
    /// Cross-check suite over the shipped corpus, or over --def
    Check {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "all")]
        suite: String,
    },
}

/// One report: command-specific fields, then the common envelope.
struct Report {
    fields: Vec<(&'static str, Value)>,
    result: Value,
    certified: bool,
    depth: u64,
    work_units: u64,
}

impl Serialize for Report {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.fields.len() + 4))?;
        for (k, v) in &self.fields {
            map.serialize_entry(k, v)?;
        }
        map.serialize_entry("result", &self.result)?;
        map.serialize_entry("certified", &self.certified)?;
        map.serialize_entry("depth", &self.depth)?;
        map.serialize_entry("work_units", &self.work_units)?;
        map.end()
    }
}

impl Report {
    fn new(result: Value, certified: bool, depth: u64) -> Self {
        Self {
            fields: Vec::new(),
            result,
            certified,
            depth,
            work_units: 0,
        }
    }

    fn field(mut self, key: &'static str, value: impl Into<Value>) -> Self {
        self.fields.push((key, value.into()));
        self
    }
}

fn die(msg: impl std::fmt::Display) -> Error {
    Error::InvalidArgument(msg.to_string())
}

fn load(common: &Common) -> Result<(DslProgram, String), Error> {
    let path = common.def.as_ref().ok_or_else(|| die("--def FILE is required"))?;
    let src = fs::read_to_string(path).map_err(|e| die(format!("{}: {e}", path.display())))?;
    let program = cantorkit::parse(&src)?;
    let name = match &common.name {
        Some(n) => n.clone(),
        None => program
            .defs
            .first()
            .map(|d| d.name.clone())
            .ok_or_else(|| die("the file has no definitions"))?,
    };
    Ok((program, name))
}

fn budget(common: &Common) -> Result<Budget, Error> {
    let work = match common.budget {
        Some(b) => b,
        None => match std::env::var("CANTORKIT_BUDGET") {
            Ok(v) => v.trim().parse().map_err(|_| die(format!("CANTORKIT_BUDGET=`{v}` is not a number")))?,
            Err(_) => cantorkit::DEFAULT_WORK_LIMIT,
        },
    };
    Ok(Budget::new(common.steps, work))
}

fn word(s: &str) -> Result<BinWord, Error> {
    s.parse()
}

fn to_json(x: &impl Serialize) -> Value {
    serde_json::to_value(x).expect("reports serialize")
}

/// Runs a real-number command with `i128` numerators, falling back to
/// `BigInt` when those overflow.
fn with_reals<T>(f: &RealExpr, run: impl Fn(&dyn RealRunner) -> Result<T, Error>) -> Result<T, Error> {
    match run(&Runner::<i128>::new(f)) {
        Err(Error::Overflow) => run(&Runner::<BigInt>::new(f)),
        other => other,
    }
}

trait RealRunner {
    fn ucmod(&self, k: u64, c: RealConfig, b: &Budget) -> Result<Report, Error>;
    fn posbound(&self, m: u64) -> Result<Report, Error>;
    fn finbound(&self, m: u64) -> Result<Report, Error>;
    fn supreal(&self, k: u32, c: RealConfig, b: &Budget) -> Result<Report, Error>;
    fn integrate(&self, k: u32, c: RealConfig, b: &Budget) -> Result<Report, Error>;
}

struct Runner<I> {
    f: Arc<dyn RealFunction<I>>,
}

impl<I: DyadicInt> Runner<I>
where
    RealExpr: RealFunction<I>,
{
    fn new(f: &RealExpr) -> Self {
        Self { f: Arc::new(f.clone()) }
    }
}

impl<I: DyadicInt> RealRunner for Runner<I> {
    fn ucmod(&self, k: u64, c: RealConfig, b: &Budget) -> Result<Report, Error> {
        let m = real::uc_modulus(self.f.clone(), k, c, b)?;
        Ok(Report::new(m.n.into(), true, m.grid_depth)
            .field("n", m.n)
            .field("log2_n", m.depth)
            .field("digits", m.digits))
    }

    fn posbound(&self, m: u64) -> Result<Report, Error> {
        let n = real::pos_bound(&*self.f, m)?;
        Ok(Report::new(n.into(), true, m).field("bound", n).field("lower", format!("1/{n}")))
    }

    fn finbound(&self, m: u64) -> Result<Report, Error> {
        let n = real::finite_bound(&*self.f, m)?;
        Ok(Report::new(n.into(), true, m).field("bound", n))
    }

    fn supreal(&self, k: u32, c: RealConfig, b: &Budget) -> Result<Report, Error> {
        let s = real::sup_real(self.f.clone(), k, c, b)?;
        Ok(Report::new(s.value.to_string().into(), true, s.grid_depth)
            .field("value", s.value.to_string())
            .field("argmax", s.argmax.to_string()))
    }

    fn integrate(&self, k: u32, c: RealConfig, b: &Budget) -> Result<Report, Error> {
        let r = real::integrate(self.f.clone(), k, c, b)?;
        let value: &GDyadic<I> = &r.value;
        Ok(Report::new(value.to_string().into(), r.certified, r.pieces_log2 as u64)
            .field("value", value.to_string())
            .field("pieces_log2", r.pieces_log2))
    }
}

fn rational(v: &Value) -> Result<Rational, Error> {
    let bad = || die(format!("`{v}` is not a rational endpoint"));
    match v {
        Value::String(s) => s.trim().parse().map_err(|_| bad()),
        Value::Number(n) => n
            .as_i64()
            .map(|i| Rational::from_integer(i.into()))
            .ok_or_else(bad),
        _ => Err(bad()),
    }
}

fn read_cover(path: &PathBuf) -> Result<OpenCover, Error> {
    let src = fs::read_to_string(path).map_err(|e| die(format!("{}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&src).map_err(|e| die(format!("{}: {e}", path.display())))?;
    let pairs = v.as_array().ok_or_else(|| die("a cover is a JSON array of [c, d] pairs"))?;
    let intervals = pairs
        .iter()
        .map(|p| match p.as_array().map(Vec::as_slice) {
            Some([c, d]) => Ok((rational(c)?, rational(d)?)),
            _ => Err(die(format!("`{p}` is not a [c, d] pair"))),
        })
        .collect::<Result<_, _>>()?;
    Ok(OpenCover::new(intervals))
}

fn run(command: &Command, b: &Budget) -> Result<Report, Error> {
    Ok(match command {
        Command::Fan { common, m0, max_depth } => {
            let (p, n) = load(common)?;
            let r = fan_modulus(&p.functional(&n)?, FanConfig { m0: *m0, max_depth: *max_depth }, b)?;
            let depth = if r.certified { 2 * r.stabilized_at } else { r.stabilized_at };
            Report::new(r.modulus.into(), r.certified, depth)
                .field("modulus", r.modulus)
                .field("stabilized_at", r.stabilized_at)
        }
        Command::Psfan { common, m } => {
            let (p, n) = load(common)?;
            let phi = p.functional(&n)?;
            let ps = cantorkit::ps_fan(&phi, *m, b)?;
            let x = xi(&phi, *m, b)?.expect("xi is defined on Cantor space");
            Report::new(ps.into(), true, *m as u64)
                .field("ps", ps)
                .field("xi", x)
                .field("equal", ps == x)
        }
        Command::Sup { common, m, max_depth } => {
            let (p, n) = load(common)?;
            let phi = p.functional(&n)?;
            match m {
                Some(m) => {
                    let (v, w) = psi_sup(&phi, *m, b)?;
                    Report::new(v.into(), true, *m as u64)
                        .field("value", v)
                        .field("witness", w.to_string())
                }
                None => {
                    let r = sup_cantor(&phi, FanConfig { max_depth: *max_depth, ..FanConfig::default() }, b)?;
                    Report::new(r.value.into(), true, r.depth_used)
                        .field("value", r.value)
                        .field("witness", r.witness.to_string())
                }
            }
        }
        Command::Bar { common, max_depth } => {
            let (p, n) = load(common)?;
            let r = ufan2_bound(&Tree::from_program(p.program(&n)?)?, *max_depth, b)?;
            Report::new(r.k.into(), r.certified, r.k).field("k", r.k)
        }
        Command::Qffan { common, max_depth, local } => {
            let (p, n) = load(common)?;
            let h = p.program(&n)?;
            if *local {
                let (r, table) = cantorkit::sup::fanc_local(&h, *max_depth, FanConfig::default(), b)?;
                let table: serde_json::Map<String, Value> =
                    table.into_iter().map(|(w, v)| (w.to_string(), v.into())).collect();
                Report::new(r.k.into(), r.certified, *max_depth as u64)
                    .field("k", r.k)
                    .field("table", Value::Object(table))
            } else {
                let r = qffan_bound(&h, *max_depth, FanConfig::default(), b)?;
                Report::new(r.k.into(), r.certified, *max_depth as u64).field("k", r.k)
            }
        }
        Command::Ubp { common, y, k, m } => {
            let (p, n) = load(common)?;
            let prog = p.program(&n)?;
            let y: cantorkit::BoundedDomain = y.parse()?;
            let lambda = SeqFunctional::new(prog.clone());
            let theta = cantorkit::theta_uco(&lambda, &y, *k, *m, b)?.ok_or(Error::NoModulus { depth: *m as u64 })?;
            let family = Functional2Family::new(prog);
            let a = cantorkit::uf_argmax(&family, &cantorkit::DomainFamily::constant(y.clone()), *k, *m, b)?;
            Report::new(theta.into(), true, *m as u64)
                .field("theta", theta)
                .field("max", a.value)
                .field("witness", a.witness.0.clone())
        }
        Command::Delta { common, word: w, m } => {
            let (p, n) = load(common)?;
            let phi = p.functional(&n)?;
            let point = Point::pad(&word(w)?);
            let d = cantorkit::delta_mpc(&phi, &point, *m, b)?.ok_or(Error::NoModulus { depth: *m as u64 })?;
            let q = cantorkit::query_bound(&phi, &point, b)?;
            Report::new(d.into(), true, *m as u64).field("delta", d).field("query_bound", q)
        }
        Command::Assoc { common, m, export_depth, word: w } => {
            let (p, n) = load(common)?;
            let alpha = cantorkit::build_associate(&p.functional(&n)?, *m);
            let depth = export_depth.unwrap_or(*m);
            let table = alpha.export(depth, b)?;
            let mut r = Report::new(Value::Null, true, depth as u64).field("table", to_json(&table));
            if let Some(w) = w {
                let v = cantorkit::eval_associate(&alpha, &Point::pad(&word(w)?), b)?;
                r = r.field("value", v);
                r.result = v.into();
            } else {
                r.result = (table.len() as u64).into();
            }
            r
        }
        Command::Ucmod { common, k, max_depth } => {
            let (p, n) = load(common)?;
            let f = p.real(&n)?;
            with_reals(&f, |r| r.ucmod(*k, RealConfig { max_depth: *max_depth }, b))?
        }
        Command::Posbound { common, m } => {
            let (p, n) = load(common)?;
            with_reals(&p.real(&n)?, |r| r.posbound(*m))?
        }
        Command::Finbound { common, m } => {
            let (p, n) = load(common)?;
            with_reals(&p.real(&n)?, |r| r.finbound(*m))?
        }
        Command::Supreal { common, k, max_depth } => {
            let (p, n) = load(common)?;
            with_reals(&p.real(&n)?, |r| r.supreal(*k, RealConfig { max_depth: *max_depth }, b))?
        }
        Command::Integrate { common, k, max_depth } => {
            let (p, n) = load(common)?;
            with_reals(&p.real(&n)?, |r| r.integrate(*k, RealConfig { max_depth: *max_depth }, b))?
        }
        Command::Cover { cover, resolution, cap, .. } => {
            let c = read_cover(cover)?;
            let cap = cap.unwrap_or(c.intervals.len());
            let s = cantorkit::heine_borel(&c, *resolution, cap)?;
            Report::new(to_json(&s.indices), true, *resolution as u64).field("indices", to_json(&s.indices))
        }
        Command::Check { common, suite } => {
            let suite: Suite = suite.parse()?;
            let corpus = match &common.def {
                Some(_) => Corpus::from_program(&load(common)?.0)?,
                None => Corpus::shipped()?,
            };
            let config = CheckConfig {
                step_limit: common.steps,
                work_limit: b.work_limit(),
                ..CheckConfig::default()
            };
            let report = check_suite(&corpus, suite, config);
            let failed = report.entries.iter().filter(|e| e.status == Status::Fail).count();
            if failed > 0 {
                for e in report.entries.iter().filter(|e| e.status == Status::Fail) {
                    eprintln!("FAIL {}: {} ({})", e.name, e.detail, e.counterexample.as_deref().unwrap_or(""));
                }
            }
            let mut r = Report::new(json!(report.passed()), report.certified(), report.depth())
                .field("entries", to_json(&report.entries))
                .field("failed", failed as u64);
            r.work_units = report.work_units();
            r
        }
    })
}

fn common(command: &Command) -> &Common {
    match command {
        Command::Fan { common, .. }
        | Command::Psfan { common, .. }
        | Command::Sup { common, .. }
        | Command::Bar { common, .. }
        | Command::Qffan { common, .. }
        | Command::Ubp { common, .. }
        | Command::Delta { common, .. }
        | Command::Assoc { common, .. }
        | Command::Ucmod { common, .. }
        | Command::Posbound { common, .. }
        | Command::Supreal { common, .. }
        | Command::Integrate { common, .. }
        | Command::Cover { common, .. }
        | Command::Finbound { common, .. }
        | Command::Check { common, .. } => common,
    }
}

fn print(report: &Report, json: bool) {
    if json {
        println!("{}", serde_json::to_string(report).expect("reports serialize"));
        return;
    }
    let show = |v: &Value| match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    };
    for (k, v) in &report.fields {
        if k == &"entries" {
            for e in v.as_array().into_iter().flatten() {
                println!("{:<12} {} {}", e["status"].as_str().unwrap_or(""), show(&e["name"]), show(&e["detail"]));
            }
            continue;
        }
        println!("{k}: {}", show(v));
    }
    println!("result: {}", show(&report.result));
    println!("certified: {}", report.certified);
    println!("depth: {}", report.depth);
    println!("work_units: {}", report.work_units);
}

fn is_uncertified(e: &Error) -> bool {
    matches!(
        e,
        Error::StepBudget { .. }
            | Error::WorkBudget { .. }
            | Error::Uncertified { .. }
            | Error::NoModulus { .. }
            | Error::NoSubcover { .. }
    )
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 64 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let common = common(&cli.command).clone();
    let b = match budget(&common) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match run(&cli.command, &b) {
        Ok(mut report) => {
            if !matches!(cli.command, Command::Check { .. }) {
                report.work_units = b.used();
            }
            print(&report, common.json);
            let failed = matches!(cli.command, Command::Check { .. }) && report.result == json!(false);
            ExitCode::from(if failed {
                1
            } else if report.certified {
                0
            } else {
                2
            })
        }
        Err(e) if is_uncertified(&e) => {
            let report = Report {
                fields: vec![("error", e.to_string().into())],
                result: Value::Null,
                certified: false,
                depth: 0,
                work_units: b.used(),
            };
            print(&report, common.json);
            eprintln!("uncertified: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
