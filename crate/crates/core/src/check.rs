//! Cross-checks of every search against an independent brute-force scan.
//!
//! Each corpus item gets its own budget, so one item running out of work
//! shows up as an uncertified entry while the rest of the suite carries on.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::budget::{Budget, DEFAULT_STEP_LIMIT, DEFAULT_WORK_LIMIT};
use crate::dsl::{parse, BinOp, Builtin, DslProgram, Expr, RealExpr};
use crate::error::{Error, Result};
use crate::fan::{fan_modulus, ps_fan, xi, FanConfig};
use crate::functional::{Functional2, Functional2Family, OracleProgram, PointOracle, SeqFunctional};
use crate::pointwise::{build_associate, delta_functional, delta_mpc, eval_associate, query_bound, rm_code_check};
use crate::real::{
    apply, heine_borel, integrate, pos_bound, finite_bound, riemann_sum, sup_real, uc_modulus_dyadic,
    uncovered_point, grid_modulus, uniform_partition, Dyadic, ExactReal, OpenCover, RealConfig, RealFunction,
};
use crate::seq::{enumerate_grid, BinWord, NatWord, Point};
use crate::sup::{fanc_local, psi_sup, qffan_bound, sup_cantor, ufan2_bound, Tree};
use crate::ubp::{theta_uco, uf_argmax, BoundedDomain, DomainFamily};

const FUNCTIONALS: &str = include_str!("../corpus/functionals.fn");
const TREES: &str = include_str!("../corpus/trees.fn");
const PREDICATES: &str = include_str!("../corpus/predicates.fn");
const SEQUENCES: &str = include_str!("../corpus/sequences.fn");
const REALS: &str = include_str!("../corpus/reals.fn");

type D = Dyadic<i128>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Uncertified,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckEntry {
    pub name: String,
    pub status: Status,
    pub depth: u64,
    pub work_units: u64,
    /// Always present on failures: the inputs that reproduce it.
    pub counterexample: Option<String>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckReport {
    pub entries: Vec<CheckEntry>,
}

impl CheckReport {
    /// No entry failed. Uncertified entries do not count against this.
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.status != Status::Fail)
    }

    pub fn certified(&self) -> bool {
        self.entries.iter().all(|e| e.status == Status::Pass)
    }

    pub fn work_units(&self) -> u64 {
        self.entries.iter().map(|e| e.work_units).sum()
    }

    pub fn depth(&self) -> u64 {
        self.entries.iter().map(|e| e.depth).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    All,
    Fan,
    Sup,
    Bar,
    Ubp,
    Pointwise,
    Real,
}

impl Suite {
    fn includes(self, other: Suite) -> bool {
        self == Suite::All || self == other
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "all" => Suite::All,
            "fan" => Suite::Fan,
            "sup" => Suite::Sup,
            "bar" => Suite::Bar,
            "ubp" => Suite::Ubp,
            "pointwise" => Suite::Pointwise,
            "real" => Suite::Real,
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "unknown suite `{s}` (all, fan, sup, bar, ubp, pointwise, real)"
                )))
            }
        })
    }
}

/// A cover fixture and whether it should yield a finite subcover.
#[derive(Debug, Clone)]
pub struct CoverFixture {
    pub name: String,
    pub cover: OpenCover,
    pub covers: bool,
}

#[derive(Clone, Default)]
pub struct Corpus {
    pub functionals: Vec<Functional2>,
    pub trees: Vec<Tree>,
    pub predicates: Vec<OracleProgram>,
    pub sequences: Vec<SeqFunctional>,
    pub reals: Vec<RealExpr>,
    pub covers: Vec<CoverFixture>,
}

impl fmt::Debug for Corpus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Corpus")
            .field("functionals", &self.functionals.len())
            .field("trees", &self.trees.len())
            .field("predicates", &self.predicates.len())
            .field("sequences", &self.sequences.len())
            .field("reals", &self.reals.len())
            .field("covers", &self.covers.len())
            .finish()
    }
}

fn each_def<T>(src: &str, f: impl Fn(&DslProgram, &str) -> Result<T>) -> Result<Vec<T>> {
    let p = parse(src)?;
    p.defs.iter().map(|d| f(&p, &d.name)).collect()
}

fn q(a: i64, b: i64) -> BigRational {
    BigRational::new(a.into(), b.into())
}

impl Corpus {
    pub fn empty() -> Self {
        Self::default()
    }

    /// The corpus shipped with the crate.
    pub fn shipped() -> Result<Self> {
        Ok(Self {
            functionals: each_def(FUNCTIONALS, |p, n| p.functional(n))?,
            trees: each_def(TREES, |p, n| Tree::from_program(p.program(n)?))?,
            predicates: each_def(PREDICATES, |p, n| p.program(n))?,
            sequences: each_def(SEQUENCES, |p, n| Ok(SeqFunctional::new(p.program(n)?)))?,
            reals: each_def(REALS, |p, n| p.real(n))?,
            covers: vec![
                CoverFixture {
                    name: "quarters".into(),
                    cover: OpenCover::new((0..5).map(|n| (q(n - 1, 4), q(n + 1, 4))).collect()),
                    covers: true,
                },
                CoverFixture {
                    name: "misses-zero".into(),
                    cover: OpenCover::new((0..64).map(|n| (q(1, n + 2), q(2, 1))).collect()),
                    covers: false,
                },
            ],
        })
    }

    /// Functionals and real functions from a user file: one-parameter
    /// definitions that apply their parameter are functionals, the rest
    /// real functions. Other definitions are ignored.
    pub fn from_program(p: &DslProgram) -> Result<Self> {
        let mut corpus = Self::empty();
        for def in &p.defs {
            if def.params.len() != 1 {
                continue;
            }
            if applies(&def.body) {
                corpus.functionals.push(p.functional(&def.name)?);
            } else {
                corpus.reals.push(p.real(&def.name)?);
            }
        }
        Ok(corpus)
    }
}

fn applies(e: &Expr) -> bool {
    match e {
        Expr::Nat(_) | Expr::Var(_) => false,
        Expr::Apply(..) | Expr::If(..) | Expr::Mu(..) => true,
        Expr::Bin(_, a, b) | Expr::Call(_, a, b) => applies(a) || applies(b),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CheckConfig {
    pub step_limit: u64,
    /// Work units per corpus item and check.
    pub work_limit: u64,
    pub fan: FanConfig,
    pub real: RealConfig,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            step_limit: DEFAULT_STEP_LIMIT,
            work_limit: DEFAULT_WORK_LIMIT,
            fan: FanConfig::default(),
            real: RealConfig::default(),
        }
    }
}

enum Verdict {
    Pass(String),
    Uncertified(String),
    Fail { counterexample: String, detail: String },
}

struct Outcome {
    verdict: Verdict,
    depth: u64,
}

fn pass(depth: u64, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome {
        verdict: Verdict::Pass(detail.into()),
        depth,
    })
}

fn fail(depth: u64, counterexample: impl Into<String>, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome {
        verdict: Verdict::Fail {
            counterexample: counterexample.into(),
            detail: detail.into(),
        },
        depth,
    })
}

fn uncertified(depth: u64, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome {
        verdict: Verdict::Uncertified(detail.into()),
        depth,
    })
}

type Job = Box<dyn Fn(&Budget) -> Result<Outcome> + Send + Sync>;

fn run(name: &str, job: &Job, config: &CheckConfig) -> CheckEntry {
    let budget = Budget::new(config.step_limit, config.work_limit);
    let (status, depth, counterexample, detail) = match job(&budget) {
        Ok(Outcome { verdict, depth }) => match verdict {
            Verdict::Pass(d) => (Status::Pass, depth, None, d),
            Verdict::Uncertified(d) => (Status::Uncertified, depth, None, d),
            Verdict::Fail { counterexample, detail } => (Status::Fail, depth, Some(counterexample), detail),
        },
        Err(
            e @ (Error::StepBudget { .. }
            | Error::WorkBudget { .. }
            | Error::Uncertified { .. }
            | Error::NoModulus { .. }),
        ) => (Status::Uncertified, 0, None, e.to_string()),
        Err(e) => (Status::Fail, 0, Some(name.to_string()), e.to_string()),
    };
    CheckEntry {
        name: name.to_string(),
        status,
        depth,
        work_units: budget.used(),
        counterexample,
        detail,
    }
}

/// Runs the selected checks over the corpus. Items run in parallel; the
/// report lists them in a fixed order.
pub fn check_suite(corpus: &Corpus, suite: Suite, config: CheckConfig) -> CheckReport {
    let mut jobs: Vec<(String, Job)> = Vec::new();
    let fan = config.fan;
    let rc = config.real;
    for phi in &corpus.functionals {
        let n = phi.name().to_string();
        let mut add = |kind: &str, job: Job| jobs.push((format!("{kind}/{n}"), job));
        if suite.includes(Suite::Fan) {
            let p = phi.clone();
            add("fan", Box::new(move |b| check_fan(&p, fan, b)));
            let p = phi.clone();
            add("ps", Box::new(move |b| check_ps(&p, fan, b)));
            let p = phi.clone();
            add("trace", Box::new(move |b| check_trace_bound(&p, 10, b)));
        }
        if suite.includes(Suite::Sup) {
            let p = phi.clone();
            add("sup", Box::new(move |b| check_sup(&p, fan, b)));
            let p = phi.clone();
            add("ycode", Box::new(move |b| check_ycode(&p, 7, b)));
        }
        if suite.includes(Suite::Ubp) {
            let p = phi.clone();
            add("cantor", Box::new(move |b| check_cantor_theta(&p, 8, b)));
        }
        if suite.includes(Suite::Pointwise) {
            let p = phi.clone();
            add("assoc", Box::new(move |b| check_associate(&p, 10, b)));
            let p = phi.clone();
            add("delta", Box::new(move |b| check_delta(&p, 8, b)));
            let p = phi.clone();
            add("rm", Box::new(move |b| check_rm(&p, 6, b)));
        }
    }
    if suite.includes(Suite::Bar) {
        for t in &corpus.trees {
            let t2 = t.clone();
            jobs.push((format!("bar/{}", t.name()), Box::new(move |b| check_bar(&t2, 12, b))));
        }
        for h in &corpus.predicates {
            let h2 = h.clone();
            jobs.push((format!("qffan/{}", h.name()), Box::new(move |b| check_qffan(&h2, 10, fan, b))));
        }
    }
    if suite.includes(Suite::Ubp) {
        for s in &corpus.sequences {
            let s2 = s.clone();
            jobs.push((format!("theta/{}", s.name()), Box::new(move |b| check_theta(&s2, b))));
            let s2 = s.clone();
            jobs.push((format!("argmax/{}", s.name()), Box::new(move |b| check_argmax(&s2, b))));
        }
    }
    if suite.includes(Suite::Real) {
        for f in &corpus.reals {
            let n = RealFunction::<i128>::name(f).to_string();
            let mut add = |kind: &str, job: Job| jobs.push((format!("{kind}/{n}"), job));
            let g = f.clone();
            add("cauchy", Box::new(move |_| check_cauchy(&g)));
            let g = f.clone();
            add("ucmod", Box::new(move |b| check_ucmod(&g, 6, rc, b)));
            let g = f.clone();
            add("integrate", Box::new(move |b| check_integrate(&g, 10, rc, b)));
            let g = f.clone();
            add("supreal", Box::new(move |b| check_sup_real(&g, 6, rc, b)));
            let g = f.clone();
            add("posbound", Box::new(move |_| check_pos_bound(&g, 8)));
            let g = f.clone();
            add("finbound", Box::new(move |_| check_finite_bound(&g, 8)));
        }
        for c in &corpus.covers {
            let c2 = c.clone();
            jobs.push((format!("cover/{}", c.name), Box::new(move |_| check_cover(&c2, 10))));
        }
    }
    let entries = jobs
        .par_iter()
        .map(|(name, job)| run(name, job, &config))
        .collect();
    CheckReport { entries }
}

// --- brute-force oracles -------------------------------------------------

fn word_values(phi: &Functional2, depth: usize, budget: &Budget) -> Result<Vec<u64>> {
    (0..1u64 << depth)
        .into_par_iter()
        .map(|i| phi.eval(&Point::pad(&BinWord::from_index(i, depth)), budget))
        .collect()
}

/// A pair of words of length `depth` agreeing below `y` with different
/// values, if any.
fn agreement_violation(values: &[u64], depth: usize, y: usize) -> Option<(usize, usize)> {
    let mut seen: HashMap<usize, (usize, u64)> = HashMap::new();
    for (i, &v) in values.iter().enumerate() {
        let key = i >> (depth - y);
        match seen.get(&key) {
            Some(&(j, w)) if w != v => return Some((j, i)),
            Some(_) => {}
            None => {
                seen.insert(key, (i, v));
            }
        }
    }
    None
}

fn pair(i: usize, j: usize, depth: usize) -> String {
    format!(
        "{} {}",
        BinWord::from_index(i as u64, depth),
        BinWord::from_index(j as u64, depth)
    )
}

/// Least `y` for which no violation exists, scanning every level.
fn brute_least_modulus(values: &[u64], depth: usize) -> usize {
    (0..=depth)
        .find(|&y| agreement_violation(values, depth, y).is_none())
        .expect("y = depth always agrees")
}

fn check_fan(phi: &Functional2, config: FanConfig, budget: &Budget) -> Result<Outcome> {
    let r = fan_modulus(phi, config, budget)?;
    let depth = 2 * r.stabilized_at as usize;
    if !r.certified {
        return uncertified(r.stabilized_at, format!("modulus {} not stable below the cap", r.modulus));
    }
    let values = word_values(phi, depth, budget)?;
    let y = r.modulus as usize;
    if let Some((i, j)) = agreement_violation(&values, depth, y) {
        return fail(depth as u64, pair(i, j, depth), format!("{y} is not a modulus at depth {depth}"));
    }
    let least = brute_least_modulus(&values, depth);
    if least != y {
        let (i, j) = agreement_violation(&values, depth, y - 1).unwrap_or((0, 0));
        return fail(depth as u64, pair(i, j, depth), format!("least modulus is {least}, not {y}"));
    }
    pass(depth as u64, format!("modulus {y}, certified at {}", r.stabilized_at))
}

fn check_ps(phi: &Functional2, config: FanConfig, budget: &Budget) -> Result<Outcome> {
    let r = fan_modulus(phi, config, budget)?;
    if !r.certified {
        return uncertified(r.stabilized_at, "no certifying depth");
    }
    let m = r.stabilized_at as usize;
    let ps: Vec<u64> = [m, 2 * m, 4 * m]
        .iter()
        .map(|&d| ps_fan(phi, d, budget))
        .collect::<Result<_>>()?;
    if ps.iter().any(|&v| v != ps[0]) {
        return fail(m as u64, format!("{} at depths {m}, {}, {}", phi.name(), 2 * m, 4 * m), format!("ps varies: {ps:?}"));
    }
    let values = word_values(phi, m, budget)?;
    if let Some((i, j)) = agreement_violation(&values, m, (ps[0] as usize).min(m)) {
        return fail(m as u64, pair(i, j, m), format!("ps {} is not a modulus at depth {m}", ps[0]));
    }
    let x = xi(phi, m, budget)?.expect("xi is defined on Cantor space");
    if ps[0] < x {
        return fail(m as u64, phi.name(), format!("ps {} below xi {x}", ps[0]));
    }
    let relation = if ps[0] == x { "=" } else { ">" };
    pass(4 * m as u64, format!("ps {} {relation} xi {x}", ps[0]))
}

fn check_trace_bound(phi: &Functional2, m: usize, budget: &Budget) -> Result<Outcome> {
    let x = xi(phi, m, budget)?.expect("xi is defined on Cantor space");
    let bound = (0..1u64 << m)
        .into_par_iter()
        .map(|i| Ok(query_bound(phi, &Point::pad(&BinWord::from_index(i, m)), budget)?))
        .try_reduce(|| 0, |a, b| Ok(a.max(b)))?;
    if x > bound {
        return fail(m as u64, phi.name(), format!("xi {x} exceeds the query bound {bound}"));
    }
    pass(m as u64, format!("xi {x} <= {bound}"))
}

fn check_sup(phi: &Functional2, config: FanConfig, budget: &Budget) -> Result<Outcome> {
    let r = fan_modulus(phi, config, budget)?;
    if !r.certified {
        return uncertified(r.stabilized_at, "no certifying depth");
    }
    let s = sup_cantor(phi, config, budget)?;
    let omega = r.modulus as usize;
    let brute = word_values(phi, omega, budget)?.into_iter().max().unwrap_or(0);
    if s.value != brute {
        return fail(omega as u64, phi.name(), format!("sup {} but the exhaustive max is {brute}", s.value));
    }
    if phi.eval(&Point::pad(&s.witness), budget)? != s.value {
        return fail(omega as u64, s.witness.to_string(), "witness does not attain the sup");
    }
    let m = r.stabilized_at as usize;
    for d in [m, m + 1, 2 * m] {
        let (v, w) = psi_sup(phi, d, budget)?;
        if v != s.value {
            return fail(d as u64, format!("{} at depth {d}", phi.name()), format!("psi_sup {v} (at {w}) != sup {}", s.value));
        }
    }
    pass(2 * m as u64, format!("sup {}", s.value))
}

/// `sup_{f⊕g} Y(f, g) = xi(φ, M)`, where `Y` is 0 when `φ(f) = φ(g)` and
/// otherwise one more than the first index where `f` and `g` differ.
fn check_ycode(phi: &Functional2, m: usize, budget: &Budget) -> Result<Outcome> {
    let p = phi.clone();
    let step_limit = budget.step_limit();
    let y = Functional2::new(format!("Y[{}]", phi.name()), move |o| {
        let (mut f, mut g) = (BinWord::new(), BinWord::new());
        for i in 0..m as u64 {
            f.push(o.query(2 * i)?.min(1) as u8);
            g.push(o.query(2 * i + 1)?.min(1) as u8);
        }
        let inner = Budget::new(step_limit, u64::MAX);
        if p.eval(&Point::pad(&f), &inner)? == p.eval(&Point::pad(&g), &inner)? {
            return Ok(0);
        }
        Ok((0..m).find(|&i| f.bit(i) != g.bit(i)).map_or(0, |i| i as u64 + 1))
    });
    let (sup, witness) = psi_sup(&y, 2 * m, budget)?;
    let x = xi(phi, m, budget)?.expect("xi is defined on Cantor space");
    if sup != x {
        return fail(2 * m as u64, witness.to_string(), format!("sup of Y {sup} != xi {x}"));
    }
    pass(2 * m as u64, format!("sup of Y = xi = {x}"))
}

fn check_bar(tree: &Tree, cap: usize, budget: &Budget) -> Result<Outcome> {
    let r = ufan2_bound(tree, cap, budget)?;
    // Least level with no word of T, scanning every word of that length.
    let mut brute = None;
    for k in 0..=cap {
        let mut any = false;
        for i in 0..1u64 << k {
            if tree.contains(&BinWord::from_index(i, k), budget)? {
                any = true;
                break;
            }
        }
        if !any {
            brute = Some(k as u64);
            break;
        }
    }
    match brute {
        Some(k) if r.certified && r.k == k => pass(k, format!("bar at {k}")),
        None if !r.certified && r.k == cap as u64 => pass(cap as u64, "no bar below the cap; reported uncertified"),
        _ => fail(cap as u64, tree.name(), format!("scan gives {brute:?}, search gives {r:?}")),
    }
}

fn check_qffan(h: &OracleProgram, cap: usize, config: FanConfig, budget: &Budget) -> Result<Outcome> {
    let r = qffan_bound(h, cap, config, budget)?;
    let mut brute: Option<u64> = Some(0);
    let mut worst = BinWord::new();
    for i in 0..1u64 << cap {
        let w = BinWord::from_index(i, cap);
        let point = Point::pad(&w);
        let mut least = None;
        for n in 0..=cap as u64 {
            let mut o = PointOracle::new(&point, budget.step_limit(), false);
            if h.apply(&mut o, &[n])? == 0 {
                least = Some(n);
                break;
            }
        }
        match (least, brute) {
            (None, _) => {
                brute = None;
                worst = w;
                break;
            }
            (Some(n), Some(b)) if n > b => {
                brute = Some(n);
                worst = w;
            }
            _ => {}
        }
    }
    let (local, table) = fanc_local(h, cap, config, budget)?;
    let table_max = table.values().copied().max().unwrap_or(0).min(cap as u64);
    if local.k != r.k || table_max != r.k {
        return fail(cap as u64, h.name(), format!("local table gives {}, bound {}", local.k, r.k));
    }
    match brute {
        Some(k) if r.certified && r.k == k => pass(k, format!("bound {k}, attained at {worst}")),
        None if !r.certified && r.k == cap as u64 => pass(cap as u64, format!("{worst} has no witness below the cap; reported uncertified")),
        _ => fail(cap as u64, worst.to_string(), format!("scan gives {brute:?}, search gives {r:?}")),
    }
}

fn domain_grid(y: &BoundedDomain, m: usize) -> Vec<NatWord> {
    let radices: Vec<u64> = (0..m).map(|i| y.bound(i) + 1).collect();
    enumerate_grid(&radices).collect()
}

/// Least `N` such that grid words agreeing below `N` have equal outputs.
fn brute_theta(lambda: &SeqFunctional, y: &BoundedDomain, k: u64, m: usize, budget: &Budget) -> Result<u64> {
    let grid = domain_grid(y, m);
    let outputs: Vec<Vec<u64>> = grid
        .iter()
        .map(|z| crate::functional::eval_seq(lambda, &Point::pad_naturals(z), k, budget))
        .collect::<Result<_>>()?;
    'n: for n in 0..=m {
        let mut seen: HashMap<NatWord, usize> = HashMap::new();
        for (i, z) in grid.iter().enumerate() {
            match seen.get(&z.truncate(n)) {
                Some(&j) if outputs[j] != outputs[i] => continue 'n,
                Some(_) => {}
                None => {
                    seen.insert(z.truncate(n), i);
                }
            }
        }
        return Ok(n as u64);
    }
    unreachable!("n = m always agrees")
}

fn check_theta(lambda: &SeqFunctional, budget: &Budget) -> Result<Outcome> {
    let y: BoundedDomain = "21@1".parse()?;
    let (m, mut last) = (6, 0);
    for k in 1..=3 {
        let t = theta_uco(lambda, &y, k, m, budget)?.ok_or(Error::NoModulus { depth: m as u64 })?;
        let b = brute_theta(lambda, &y, k, m, budget)?;
        if t != b {
            return fail(m as u64, format!("{} y={y} k={k} M={m}", lambda.name()), format!("theta {t}, scan {b}"));
        }
        if t < last {
            return fail(m as u64, format!("{} y={y} k={k}", lambda.name()), "theta decreases in k");
        }
        last = t;
        let doubled = theta_uco(lambda, &y, k, 2 * m, budget)?;
        if doubled != Some(t) {
            return fail(2 * m as u64, format!("{} y={y} k={k} M={}", lambda.name(), 2 * m), format!("theta {doubled:?} at {}, {t} at {m}", 2 * m));
        }
    }
    pass(2 * m as u64, format!("theta {last} at k = 3"))
}

fn check_argmax(lambda: &SeqFunctional, budget: &Budget) -> Result<Outcome> {
    let y: BoundedDomain = "21@1".parse()?;
    let family = Functional2Family::new(seq_program(lambda));
    let r = uf_argmax(&family, &DomainFamily::constant(y.clone()), 1, 4, budget)?;
    let phi = family.at(1);
    let brute = domain_grid(&y, 4)
        .iter()
        .map(|z| phi.eval(&Point::pad_naturals(z), budget))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .max()
        .unwrap_or(0);
    let attained = phi.eval(&Point::pad_naturals(&r.witness), budget)?;
    if r.value != brute || attained != r.value || !y.contains(&r.witness) {
        return fail(4, format!("{} y={y} k=1", lambda.name()), format!("argmax {r:?}, brute max {brute}"));
    }
    pass(r.modulus, format!("max {brute} at {:?}", r.witness.0))
}

fn seq_program(lambda: &SeqFunctional) -> OracleProgram {
    let l = lambda.clone();
    OracleProgram::new(lambda.name().to_string(), 1, move |o, args| l.component(args[0]).apply(o))
}

fn check_cantor_theta(phi: &Functional2, m: usize, budget: &Budget) -> Result<Outcome> {
    let y = BoundedDomain::constant(1);
    let t = theta_uco(&SeqFunctional::repeat(phi.clone()), &y, 1, m, budget)?;
    let x = xi(phi, m, budget)?;
    if t != x {
        return fail(m as u64, phi.name(), format!("theta {t:?} but xi {x:?}"));
    }
    pass(m as u64, format!("theta = xi = {}", x.unwrap_or(0)))
}

fn check_associate(phi: &Functional2, m: usize, budget: &Budget) -> Result<Outcome> {
    let alpha = build_associate(phi, m);
    for i in 0..1u64 << m {
        let w = BinWord::from_index(i, m);
        let point = Point::pad(&w);
        let want = phi.eval(&point, budget)?;
        let got = eval_associate(&alpha, &point, budget)?;
        if got != want {
            return fail(m as u64, w.to_string(), format!("associate gives {got}, eval {want}"));
        }
        // Every later hit along the path agrees with the first one.
        for n in 0..=m {
            let v = alpha.lookup(&w.truncate(n), budget)?;
            if v > 0 && v - 1 != want {
                return fail(m as u64, w.truncate(n).to_string(), format!("entry {v} on a path with value {want}"));
            }
        }
    }
    pass(m as u64, "round trip on every word")
}

/// Does every length-`m` extension of `w̄n` get `target`?
fn neighbourhood_agrees(phi: &Functional2, w: &BinWord, n: usize, m: usize, target: u64, budget: &Budget) -> Result<bool> {
    let head = w.truncate(n);
    for i in 0..1u64 << (m - n) {
        if phi.eval(&Point::pad(&head.concat(&BinWord::from_index(i, m - n))), budget)? != target {
            return Ok(false);
        }
    }
    Ok(true)
}

fn check_delta(phi: &Functional2, m: usize, budget: &Budget) -> Result<Outcome> {
    let mut best = 0;
    for i in 0..1u64 << m {
        let w = BinWord::from_index(i, m);
        let point = Point::pad(&w);
        let target = phi.eval(&point, budget)?;
        let d = delta_mpc(phi, &point, m, budget)?.ok_or(Error::NoModulus { depth: m as u64 })?;
        let qb = query_bound(phi, &point, budget)?;
        if d > qb {
            return fail(m as u64, w.to_string(), format!("delta {d} exceeds query bound {qb}"));
        }
        let d = d as usize;
        if !neighbourhood_agrees(phi, &w, d, m, target, budget)?
            || (d > 0 && neighbourhood_agrees(phi, &w, d - 1, m, target, budget)?)
        {
            return fail(m as u64, w.to_string(), format!("delta {d} is not the least pointwise modulus"));
        }
        best = best.max(d as u64);
    }
    let x = xi(phi, m, budget)?.expect("xi is defined on Cantor space");
    if best != x {
        return fail(m as u64, phi.name(), format!("max delta {best} != xi {x}"));
    }
    pass(m as u64, format!("max delta = xi = {x}"))
}

fn check_rm(phi: &Functional2, m: usize, budget: &Budget) -> Result<Outcome> {
    let value = build_associate(phi, m);
    let modulus = build_associate(&delta_functional(phi, m), m);
    let good = rm_code_check(&value, &modulus, m, budget)?;
    if let Some(v) = good.violation {
        return fail(m as u64, format!("{} {}", v.zeta, v.gamma), "the delta code is rejected");
    }
    let zero = build_associate(&Functional2::constant("zero", 0), m);
    let bad = rm_code_check(&value, &zero, m, budget)?;
    let constant = xi(phi, m, budget)? == Some(0);
    match bad.violation {
        None if constant => pass(m as u64, "delta code accepted; zero code accepted for a constant"),
        Some(v) if !constant => {
            let a = phi.eval(&Point::pad(&v.zeta), budget)?;
            let b = phi.eval(&Point::pad(&v.gamma), budget)?;
            if a == b {
                return fail(m as u64, format!("{} {}", v.zeta, v.gamma), "reported violation has equal values");
            }
            pass(m as u64, format!("delta code accepted; zero code rejected at {}", v.zeta))
        }
        other => fail(m as u64, phi.name(), format!("zero code verdict {other:?}")),
    }
}

// --- exact rational evaluation of the real dialect ----------------------

fn exact(e: &Expr, x: &BigRational) -> BigRational {
    match e {
        Expr::Nat(n) => BigRational::from_integer((*n).into()),
        Expr::Var(_) => x.clone(),
        Expr::Bin(op, a, b) => {
            let (a, b) = (exact(a, x), exact(b, x));
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => a / b,
                BinOp::Mod => unreachable!("not in the real dialect"),
            }
        }
        Expr::Call(f, a, b) => {
            let (a, b) = (exact(a, x), exact(b, x));
            match f {
                Builtin::Min => a.min(b),
                Builtin::Max => a.max(b),
            }
        }
        Expr::Apply(..) | Expr::If(..) | Expr::Mu(..) => unreachable!("not in the real dialect"),
    }
}

/// Coefficients, lowest degree first, when the expression is a polynomial.
fn polynomial(e: &Expr) -> Option<Vec<BigRational>> {
    Some(match e {
        Expr::Nat(n) => vec![BigRational::from_integer((*n).into())],
        Expr::Var(_) => vec![BigRational::zero(), BigRational::one()],
        Expr::Bin(op, a, b) => {
            let (a, b) = (polynomial(a)?, polynomial(b)?);
            let zero = BigRational::zero();
            let len = a.len().max(b.len());
            let at = |p: &[BigRational], i: usize| p.get(i).cloned().unwrap_or_else(|| zero.clone());
            match op {
                BinOp::Add => (0..len).map(|i| at(&a, i) + at(&b, i)).collect(),
                BinOp::Sub => (0..len).map(|i| at(&a, i) - at(&b, i)).collect(),
                BinOp::Mul => {
                    let mut out = vec![BigRational::zero(); a.len() + b.len() - 1];
                    for (i, x) in a.iter().enumerate() {
                        for (j, y) in b.iter().enumerate() {
                            out[i + j] += x * y;
                        }
                    }
                    out
                }
                BinOp::Div => a.iter().map(|c| c / &b[0]).collect(),
                BinOp::Mod => return None,
            }
        }
        _ => return None,
    })
}

fn rational(d: &D) -> BigRational {
    BigRational::new(BigInt::from(*d.numerator()), BigInt::one() << d.exponent())
}

fn epsilon(n: u32) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::one() << n)
}

fn grid_point(i: u64, g: u32) -> BigRational {
    BigRational::new(i.into(), BigInt::one() << g)
}

fn check_cauchy(f: &RealExpr) -> Result<Outcome> {
    let arc: Arc<dyn RealFunction<i128>> = Arc::new(f.clone());
    for (a, b) in [(0, 1), (1, 3), (1, 2), (5, 7), (1, 1)] {
        let x = ExactReal::<i128>::from_ratio(a, b)?;
        let y = apply(arc.clone(), x);
        let truth = exact(f.body(), &BigRational::new(a.into(), b.into()));
        for n in 0..=24u32 {
            let qn = rational(&y.approx(n));
            if (&qn - &truth).abs() > epsilon(n) {
                return fail(n as u64, format!("x = {a}/{b}, n = {n}"), format!("approximation {qn} is not within 2^-{n} of {truth}"));
            }
            for i in 1..=10 {
                if (&qn - rational(&y.approx(n + i))).abs() > epsilon(n) {
                    return fail(n as u64, format!("x = {a}/{b}, n = {n}, i = {i}"), "Cauchy contract broken");
                }
            }
        }
    }
    pass(34, "fast Cauchy at five points")
}

/// Grid points `i/2^g` with index distance below `window` whose exact
/// values differ by `2^-t` or more.
fn exact_modulus_violation(f: &RealExpr, t: u32, g: u32, window: u64) -> Option<(u64, u64)> {
    let values: Vec<BigRational> = (0..=1u64 << g).map(|i| exact(f.body(), &grid_point(i, g))).collect();
    let tol = epsilon(t);
    for i in 0..values.len() {
        for j in i + 1..values.len().min(i + window as usize) {
            if (&values[i] - &values[j]).abs() >= tol {
                return Some((i as u64, j as u64));
            }
        }
    }
    None
}

fn check_ucmod(f: &RealExpr, t: u32, config: RealConfig, budget: &Budget) -> Result<Outcome> {
    let m = uc_modulus_dyadic(Arc::new(f.clone()) as Arc<dyn RealFunction<i128>>, t, config, budget)?;
    // Points closer than 2^-d sit fewer than 4 steps apart on a grid of 2^-(d+2).
    let g = m.depth as u32 + 2;
    if let Some((i, j)) = exact_modulus_violation(f, t, g, 4) {
        return fail(g as u64, format!("{} and {}", grid_point(i, g), grid_point(j, g)), format!("N = {} fails", m.n));
    }
    let direct = grid_modulus::<i128>(f, t, g, budget)?;
    let Some(d) = direct else {
        return fail(g as u64, f.body().to_string(), "direct grid search found no modulus");
    };
    if let Some((i, j)) = exact_modulus_violation(f, t, g, 1 << (g as u64 - d)) {
        return fail(g as u64, format!("{} and {}", grid_point(i, g), grid_point(j, g)), format!("direct 2^{d} fails"));
    }
    pass(g as u64, format!("N = {} (direct grid search 2^{d})", m.n))
}

fn check_integrate(f: &RealExpr, k: u32, config: RealConfig, budget: &Budget) -> Result<Outcome> {
    let arc: Arc<dyn RealFunction<i128>> = Arc::new(f.clone());
    let r = integrate(arc.clone(), k, config, budget)?;
    if !r.certified {
        return uncertified(r.pieces_log2 as u64, "mesh cap reached");
    }
    let value = rational(&r.value);
    let mut detail = format!("{} with 2^{} pieces", r.value, r.pieces_log2);
    if let Some(p) = polynomial(f.body()) {
        let truth: BigRational = p
            .iter()
            .enumerate()
            .map(|(i, c)| c / BigRational::from_integer((i as u64 + 1).into()))
            .sum();
        if (&value - &truth).abs() > epsilon(k) {
            return fail(r.pieces_log2 as u64, format!("k = {k}"), format!("{value} is not within 2^-{k} of {truth}"));
        }
        detail = format!("{detail}; exact {truth}");
    }
    let m = uc_modulus_dyadic(arc, k + 1, config, budget)?;
    let sums: Vec<BigRational> = [m.depth, m.depth + 1]
        .iter()
        .map(|&d| Ok(rational(&riemann_sum::<i128>(f, &uniform_partition(1 << d)?, k + 3)?)))
        .collect::<Result<_>>()?;
    if (&sums[0] - &sums[1]).abs() > epsilon(k) {
        return fail(m.depth + 1, format!("2^{} and 2^{} pieces", m.depth, m.depth + 1), "sums differ by more than 2^-k");
    }
    pass(r.pieces_log2 as u64, detail)
}

fn check_sup_real(f: &RealExpr, k: u32, config: RealConfig, budget: &Budget) -> Result<Outcome> {
    let r = sup_real(Arc::new(f.clone()) as Arc<dyn RealFunction<i128>>, k, config, budget)?;
    let value = rational(&r.value);
    // A grid of 2^12 bounds the sup from below; corpus slopes are at most 3,
    // so the grid max is within 2^-10 of the sup.
    let g = 12;
    let grid_max = (0..=1u64 << g)
        .map(|i| exact(f.body(), &grid_point(i, g)))
        .max()
        .expect("grid is nonempty");
    if (&value - &grid_max).abs() > epsilon(k) + epsilon(10) {
        return fail(r.grid_depth, format!("k = {k}"), format!("sup {value} but the fine grid reaches {grid_max}"));
    }
    let at = exact(f.body(), &rational(&r.argmax));
    if at <= &value - epsilon(k) {
        return fail(r.grid_depth, r.argmax.to_string(), format!("F there is {at}, not near {value}"));
    }
    pass(r.grid_depth, format!("sup {} at {}", r.value, r.argmax))
}

fn check_pos_bound(f: &RealExpr, m: u64) -> Result<Outcome> {
    let grid: Vec<BigRational> = (0..=m)
        .map(|i| exact(f.body(), &BigRational::new(i.into(), m.into())))
        .collect();
    match pos_bound::<i128>(f, m) {
        Ok(n) => {
            let floor = BigRational::new(BigInt::one(), n.into());
            if let Some(i) = grid.iter().position(|v| *v <= floor) {
                return fail(m, format!("{i}/{m}"), format!("F = {} is not above 1/{n}", grid[i]));
            }
            pass(m, format!("F > 1/{n} on the grid"))
        }
        Err(Error::NotGridPositive { index, .. }) => {
            let v = &grid[index as usize];
            // Approximation error is at most 2^-m, so the exact value can
            // sit that far above 1/m.
            if *v > BigRational::new(BigInt::one(), m.into()) + epsilon(m as u32) {
                return fail(m, format!("{index}/{m}"), format!("rejected although F = {v}"));
            }
            pass(m, format!("not positive on the grid: F({index}/{m}) = {v}"))
        }
        Err(e) => Err(e),
    }
}

fn check_finite_bound(f: &RealExpr, m: u64) -> Result<Outcome> {
    let n = finite_bound::<i128>(f, m)?;
    let top = (0..=m)
        .map(|i| exact(f.body(), &BigRational::new(i.into(), m.into())).abs())
        .max()
        .expect("grid is nonempty");
    let bound = BigRational::from_integer(n.into());
    let below = &bound - BigRational::one();
    if top >= bound || below > &top + epsilon(m as u32) {
        return fail(m, format!("grid 1/{m}"), format!("bound {n} but max |F| is {top}"));
    }
    pass(m, format!("|F| < {n} on the grid"))
}

fn check_cover(fixture: &CoverFixture, resolution: u32) -> Result<Outcome> {
    let n = fixture.cover.intervals.len();
    match heine_borel(&fixture.cover, resolution, n) {
        Ok(s) if fixture.covers => {
            let chosen = &s.indices;
            for i in 0..=1u64 << resolution {
                let x = grid_point(i, resolution);
                if !chosen.iter().any(|&c| fixture.cover.contains(c, &x)) {
                    return fail(resolution as u64, x.to_string(), "subcover misses a dyadic");
                }
            }
            if uncovered_point(&fixture.cover, &chosen[..chosen.len() - 1], resolution).is_none() {
                return fail(resolution as u64, format!("{chosen:?}"), "chain is not minimal");
            }
            pass(resolution as u64, format!("subcover {chosen:?}"))
        }
        Err(Error::NoSubcover { frontier, .. }) if !fixture.covers => {
            pass(resolution as u64, format!("no subcover; stuck at {frontier}"))
        }
        Ok(s) => fail(resolution as u64, format!("{:?}", s.indices), "found a subcover of a non-covering fixture"),
        Err(e) => Err(e),
    }
}
