//! Instrumented evaluation of type-2 functionals.
//!
//! A functional only ever sees its argument through an [`Oracle`]. Every
//! query and every interpreter step goes through that trait, which is what
//! makes traces sound: if `g` agrees with `f` on every index the evaluation
//! of `φ(f)` asked about, then `φ(g) = φ(f)`.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::seq::{BinWord, Point};

/// The only channel through which a functional observes its argument.
pub trait Oracle {
    fn query(&mut self, index: u64) -> Result<u64>;

    /// Accounts for one interpreter step.
    fn tick(&mut self) -> Result<()>;
}

/// Oracle over a [`Point`] with a step limit and optional query recording.
pub struct PointOracle<'a> {
    point: &'a Point,
    steps: u64,
    limit: u64,
    max_index: Option<u64>,
    queried: Option<BTreeSet<u64>>,
}

impl<'a> PointOracle<'a> {
    pub fn new(point: &'a Point, limit: u64, record: bool) -> Self {
        Self {
            point,
            steps: 0,
            limit,
            max_index: None,
            queried: record.then(BTreeSet::new),
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn max_index(&self) -> Option<u64> {
        self.max_index
    }
}

impl Oracle for PointOracle<'_> {
    fn query(&mut self, index: u64) -> Result<u64> {
        self.tick()?;
        self.max_index = Some(self.max_index.map_or(index, |m| m.max(index)));
        if let Some(q) = &mut self.queried {
            q.insert(index);
        }
        Ok(self.point.value(index))
    }

    fn tick(&mut self) -> Result<()> {
        self.steps += 1;
        if self.steps > self.limit {
            Err(Error::StepBudget { limit: self.limit })
        } else {
            Ok(())
        }
    }
}

/// Reads one track of an interleaved argument: index `i` is forwarded to
/// `2i + track` of the inner oracle.
pub struct TrackOracle<'a> {
    inner: &'a mut dyn Oracle,
    track: u64,
}

impl<'a> TrackOracle<'a> {
    pub fn new(inner: &'a mut dyn Oracle, track: u64) -> Self {
        Self { inner, track }
    }
}

impl Oracle for TrackOracle<'_> {
    fn query(&mut self, index: u64) -> Result<u64> {
        let mapped = index
            .checked_mul(2)
            .and_then(|i| i.checked_add(self.track))
            .ok_or(Error::Overflow)?;
        self.inner.query(mapped)
    }

    fn tick(&mut self) -> Result<()> {
        self.inner.tick()
    }
}

/// Result of a traced evaluation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EvalTrace {
    pub value: u64,
    /// 0 when nothing was queried; check `queried_indices` to tell apart.
    pub max_index_queried: u64,
    pub queried_indices: BTreeSet<u64>,
}

impl EvalTrace {
    /// `max_index_queried + 1`, or 0 when nothing was queried.
    pub fn query_bound(&self) -> u64 {
        if self.queried_indices.is_empty() {
            0
        } else {
            self.max_index_queried + 1
        }
    }
}

type ProgramBody = dyn Fn(&mut dyn Oracle, &[u64]) -> Result<u64> + Send + Sync;

/// A program reading one oracle argument and `arity` natural arguments.
///
/// This is the common carrier for `φ(f)`, predicates `H(f, n)`, sequence
/// functionals `Λ(z)(i)` and families `Φ(k)(z)`.
#[derive(Clone)]
pub struct OracleProgram {
    name: Arc<str>,
    arity: usize,
    body: Arc<ProgramBody>,
}

impl OracleProgram {
    pub fn new(
        name: impl Into<Arc<str>>,
        arity: usize,
        body: impl Fn(&mut dyn Oracle, &[u64]) -> Result<u64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            arity,
            body: Arc::new(body),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn apply(&self, oracle: &mut dyn Oracle, args: &[u64]) -> Result<u64> {
        debug_assert_eq!(args.len(), self.arity);
        (self.body)(oracle, args)
    }

    /// Fixes the natural arguments, leaving a [`Functional2`].
    pub fn bind(&self, args: &[u64]) -> Functional2 {
        assert_eq!(args.len(), self.arity, "wrong number of arguments for {}", self.name);
        let args = args.to_vec();
        let program = self.clone();
        let name = if args.is_empty() {
            self.name.to_string()
        } else {
            let shown: Vec<String> = args.iter().map(u64::to_string).collect();
            format!("{}[{}]", self.name, shown.join(","))
        };
        Functional2::new(name, move |o| program.apply(o, &args))
    }
}

type FunctionalBody = dyn Fn(&mut dyn Oracle) -> Result<u64> + Send + Sync;

/// A deterministic functional from points to naturals.
#[derive(Clone)]
pub struct Functional2 {
    name: Arc<str>,
    body: Arc<FunctionalBody>,
}

impl Functional2 {
    pub fn new(
        name: impl Into<Arc<str>>,
        body: impl Fn(&mut dyn Oracle) -> Result<u64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            body: Arc::new(body),
        }
    }

    pub fn constant(name: impl Into<Arc<str>>, value: u64) -> Self {
        Self::new(name, move |o| {
            o.tick()?;
            Ok(value)
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn apply(&self, oracle: &mut dyn Oracle) -> Result<u64> {
        (self.body)(oracle)
    }

    pub fn eval(&self, f: &Point, budget: &Budget) -> Result<u64> {
        let mut oracle = PointOracle::new(f, budget.step_limit(), false);
        self.apply(&mut oracle)
    }

    pub fn eval_traced(&self, f: &Point, budget: &Budget) -> Result<EvalTrace> {
        let mut oracle = PointOracle::new(f, budget.step_limit(), true);
        let value = self.apply(&mut oracle)?;
        Ok(EvalTrace {
            value,
            max_index_queried: oracle.max_index.unwrap_or(0),
            queried_indices: oracle.queried.unwrap_or_default(),
        })
    }

    /// Value at `w * 00...` together with whether the evaluation stayed
    /// inside the first `|w|` indices. When it did, the functional is constant
    /// on the whole neighbourhood of `w`.
    pub fn eval_on_word(&self, w: &BinWord, budget: &Budget) -> Result<(u64, bool)> {
        let point = Point::pad(w);
        let mut oracle = PointOracle::new(&point, budget.step_limit(), false);
        let value = self.apply(&mut oracle)?;
        let local = oracle.max_index.is_none_or(|m| m < w.len() as u64);
        Ok((value, local))
    }
}

impl fmt::Debug for Functional2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Functional2({})", self.name)
    }
}

pub fn eval(phi: &Functional2, f: &Point, budget: &Budget) -> Result<u64> {
    phi.eval(f, budget)
}

pub fn eval_traced(phi: &Functional2, f: &Point, budget: &Budget) -> Result<EvalTrace> {
    phi.eval_traced(f, budget)
}

/// `Λ : point -> point`, given pointwise as `(z, i) ↦ Λ(z)(i)`.
#[derive(Clone, Debug)]
pub struct SeqFunctional(Functional2Family);

impl SeqFunctional {
    pub fn new(program: OracleProgram) -> Self {
        assert_eq!(program.arity(), 1, "a sequence functional takes one output index");
        Self(Functional2Family(program))
    }

    pub fn from_fn(
        name: impl Into<Arc<str>>,
        body: impl Fn(&mut dyn Oracle, u64) -> Result<u64> + Send + Sync + 'static,
    ) -> Self {
        Self::new(OracleProgram::new(name, 1, move |o, args| body(o, args[0])))
    }

    /// `(Φ(z), Φ(z), ...)`
    pub fn repeat(phi: Functional2) -> Self {
        let name = format!("repeat({})", phi.name());
        Self::from_fn(name, move |o, _| phi.apply(o))
    }

    pub fn name(&self) -> &str {
        self.0.name()
    }

    pub fn component(&self, i: u64) -> Functional2 {
        self.0.at(i)
    }
}

/// `Λ(z)̄k`: the first `k` outputs, each evaluated under its own step limit.
pub fn eval_seq(lambda: &SeqFunctional, z: &Point, k: u64, budget: &Budget) -> Result<Vec<u64>> {
    (0..k)
        .map(|i| {
            let mut oracle = PointOracle::new(z, budget.step_limit(), false);
            lambda.0 .0.apply(&mut oracle, &[i])
        })
        .collect()
}

/// `k ↦ Φ(k)` for a program taking one natural argument after its oracle.
#[derive(Clone)]
pub struct Functional2Family(OracleProgram);

impl Functional2Family {
    pub fn new(program: OracleProgram) -> Self {
        assert_eq!(program.arity(), 1, "a functional family takes one natural index");
        Self(program)
    }

    pub fn name(&self) -> &str {
        self.0.name()
    }

    pub fn at(&self, k: u64) -> Functional2 {
        self.0.bind(&[k])
    }
}

impl fmt::Debug for Functional2Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Functional2Family({})", self.0.name())
    }
}
