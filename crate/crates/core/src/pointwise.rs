//! Pointwise moduli and associates.
//!
//! An associate `α` codes a functional by its finite information: the first
//! `n` with `α(f̄n) > 0` gives `φ(f) = α(f̄n) - 1`. From a modulus one is
//! read off directly, `α(s) = φ(s*00...) + 1` as soon as `s` is long enough
//! to fix the value on its whole neighbourhood.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::Serialize;

use crate::budget::{Budget, DEFAULT_STEP_LIMIT};
use crate::error::{Error, Result};
use crate::fan::values_at_depth;
use crate::functional::Functional2;
use crate::seq::{word_count, BinWord, Point};

/// Do all length-`m` extensions of `s` take the value `target`?
fn cylinder_is(phi: &Functional2, s: &BinWord, m: usize, target: u64, budget: &Budget) -> Result<bool> {
    let free = m - s.len();
    let count = word_count(free).ok_or(Error::Overflow)?;
    budget.charge(count)?;
    (0..count)
        .into_par_iter()
        .map(|i| Ok(phi.eval(&Point::pad(&s.concat(&BinWord::from_index(i, free))), budget)? == target))
        .try_fold(|| true, |acc, ok: Result<bool>| Ok(acc && ok?))
        .try_reduce(|| true, |a, b| Ok(a && b))
}

/// `Δ(φ, f)` at depth `M`: the least `N <= M` such that every length-`M`
/// word extending `f̄N` gets the value `φ(f)`.
///
/// Scans downwards from `N = M`, each step adding the words that branch off
/// `f̄N` at position `N - 1`, so the total work is at most `2^M`.
pub fn delta_mpc(phi: &Functional2, f: &Point, m: usize, budget: &Budget) -> Result<Option<u64>> {
    let target = phi.eval(f, budget)?;
    let base = f.prefix(m);
    if phi.eval(&Point::pad(&base), budget)? != target {
        return Ok(None);
    }
    for n in (0..m).rev() {
        let branch = base.truncate(n).child(1 - base.bit(n));
        if !cylinder_is(phi, &branch, m, target, budget)? {
            return Ok(Some(n as u64 + 1));
        }
    }
    Ok(Some(0))
}

/// `max queried index + 1`; an upper bound for [`delta_mpc`] at any depth.
pub fn query_bound(phi: &Functional2, f: &Point, budget: &Budget) -> Result<u64> {
    Ok(phi.eval_traced(f, budget)?.query_bound())
}

/// `f ↦ Δ(φ, f̄M*00...)` as a functional; it reads exactly `f̄M`.
pub fn delta_functional(phi: &Functional2, m: usize) -> Functional2 {
    let phi = phi.clone();
    let name = format!("delta[{},{m}]", phi.name());
    Functional2::new(name, move |o| {
        let mut w = BinWord::new();
        for i in 0..m {
            w.push(o.query(i as u64)?.min(1) as u8);
        }
        let inner = Budget::new(DEFAULT_STEP_LIMIT, u64::MAX);
        delta_mpc(&phi, &Point::pad(&w), m, &inner)?
            .ok_or(Error::NoModulus { depth: m as u64 })
    })
}

enum Source {
    Built { phi: Functional2, depth: usize },
    Table(BTreeMap<BinWord, u64>),
}

/// A lazily tabulated associate. Entries of built associates are computed
/// on first lookup and memoised.
pub struct Associate {
    source: Source,
    depth: usize,
    memo: Mutex<HashMap<BinWord, u64>>,
}

impl Associate {
    /// An explicit table; missing words map to 0.
    pub fn from_table(table: BTreeMap<BinWord, u64>) -> Self {
        let depth = table.keys().map(BinWord::len).max().unwrap_or(0);
        Self {
            source: Source::Table(table),
            depth,
            memo: Mutex::new(HashMap::new()),
        }
    }

    /// Longest prefix [`eval_associate`] will look at.
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn lookup(&self, s: &BinWord, budget: &Budget) -> Result<u64> {
        let (phi, m) = match &self.source {
            Source::Table(t) => return Ok(t.get(s).copied().unwrap_or(0)),
            Source::Built { phi, depth } => (phi, *depth),
        };
        if let Some(&v) = self.memo.lock().expect("memo lock").get(s) {
            return Ok(v);
        }
        let point = Point::pad(s);
        let trace = phi.eval_traced(&point, budget)?;
        let determined = if trace.query_bound() <= s.len() as u64 {
            true
        } else if s.len() <= m {
            cylinder_is(phi, s, m, trace.value, budget)?
        } else {
            delta_mpc(phi, &point, m, budget)?.is_some_and(|d| d <= s.len() as u64)
        };
        let v = if determined {
            trace.value.checked_add(1).ok_or(Error::Overflow)?
        } else {
            0
        };
        // Racing writers compute the same value, so last write wins harmlessly.
        self.memo.lock().expect("memo lock").insert(s.clone(), v);
        Ok(v)
    }

    /// Every entry for words of length at most `depth`, keyed by bit string.
    pub fn export(&self, depth: usize, budget: &Budget) -> Result<BTreeMap<String, u64>> {
        let mut out = BTreeMap::new();
        for len in 0..=depth {
            budget.charge(word_count(len).ok_or(Error::Overflow)?)?;
            for i in 0..word_count(len).expect("charged above") {
                let w = BinWord::from_index(i, len);
                let v = self.lookup(&w, budget)?;
                out.insert(w.to_string(), v);
            }
        }
        Ok(out)
    }
}

impl fmt::Debug for Associate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.source {
            Source::Built { phi, depth } => write!(f, "Associate({}, depth {depth})", phi.name()),
            Source::Table(t) => write!(f, "Associate(table of {})", t.len()),
        }
    }
}

/// `α(s) = φ(s*00...) + 1` when `|s| >= Δ(φ, s*00..., M)`, else 0.
pub fn build_associate(phi: &Functional2, m: usize) -> Associate {
    Associate {
        source: Source::Built {
            phi: phi.clone(),
            depth: m,
        },
        depth: m,
        memo: Mutex::new(HashMap::new()),
    }
}

/// `α(f̄n) - 1` for the least `n` with `α(f̄n) > 0`.
pub fn eval_associate(alpha: &Associate, f: &Point, budget: &Budget) -> Result<u64> {
    eval_associate_at(alpha, f, budget).map(|(v, _)| v)
}

/// As [`eval_associate`], also returning the hit length `n`.
pub fn eval_associate_at(alpha: &Associate, f: &Point, budget: &Budget) -> Result<(u64, u64)> {
    for n in 0..=alpha.depth() {
        let v = alpha.lookup(&f.prefix(n), budget)?;
        if v > 0 {
            return Ok((v - 1, n as u64));
        }
    }
    Err(Error::AssociateMiss {
        word: f.prefix(alpha.depth()).to_string(),
        depth: alpha.depth() as u64,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RmViolation {
    pub zeta: BinWord,
    pub gamma: BinWord,
    /// The coded modulus at `zeta`.
    pub n: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RmReport {
    pub passed: bool,
    pub depth: u64,
    pub violation: Option<RmViolation>,
}

/// Checks over `{0,1}^depth` that `ζ̄ω(ζ) = γ̄ω(ζ) → φ(ζ) = φ(γ)`, with `φ`
/// and `ω` decoded from the two associates. Reports the first `ζ` (in
/// lexicographic order) where it fails.
pub fn rm_code_check(value: &Associate, modulus: &Associate, depth: usize, budget: &Budget) -> Result<RmReport> {
    let decode = |alpha: &Associate| {
        let count = word_count(depth).ok_or(Error::Overflow)?;
        budget.charge(count)?;
        (0..count)
            .into_par_iter()
            .map(|i| eval_associate(alpha, &Point::pad(&BinWord::from_index(i, depth)), budget))
            .collect::<Result<Vec<u64>>>()
    };
    let vals = decode(value)?;
    let mods = decode(modulus)?;
    // uniform[y][b]: the values on the b-th block of words sharing a length-y
    // prefix are all equal.
    let mut uniform = vec![vec![true; vals.len()]; depth + 1];
    for y in (0..depth).rev() {
        let step = 1usize << (depth - y);
        let half = step / 2;
        for b in 0..(vals.len() / step) {
            let lo = b * step;
            uniform[y][b] = uniform[y + 1][2 * b] && uniform[y + 1][2 * b + 1] && vals[lo] == vals[lo + half];
        }
    }
    for (i, &n) in mods.iter().enumerate() {
        let n = (n as usize).min(depth);
        let block = i >> (depth - n);
        if !uniform[n][block] {
            let start = block << (depth - n);
            let end = start + (1 << (depth - n));
            let j = (start..end).find(|&j| vals[j] != vals[i]).expect("block is not uniform");
            return Ok(RmReport {
                passed: false,
                depth: depth as u64,
                violation: Some(RmViolation {
                    zeta: BinWord::from_index(i as u64, depth),
                    gamma: BinWord::from_index(j as u64, depth),
                    n: n as u64,
                }),
            });
        }
    }
    Ok(RmReport {
        passed: true,
        depth: depth as u64,
        violation: None,
    })
}

/// `max_f Δ(φ, f)` over the words of length `M`, the pointwise side of the
/// fan modulus.
pub fn max_delta(phi: &Functional2, m: usize, budget: &Budget) -> Result<u64> {
    let values = values_at_depth(phi, m, budget)?;
    // Δ at word i is the least n whose block around i is constant.
    let mut best = 0;
    for (i, _) in values.iter().enumerate() {
        let mut n = m;
        while n > 0 {
            let size = 1usize << (m - n + 1);
            let start = (i / size) * size;
            if values[start..start + size].iter().all(|&v| v == values[i]) {
                n -= 1;
            } else {
                break;
            }
        }
        best = best.max(n as u64);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> BinWord {
        s.parse().unwrap()
    }

    fn at(i: u64) -> Functional2 {
        Functional2::new(format!("f({i})"), move |o| o.query(i))
    }

    #[test]
    fn delta_examples() {
        let b = Budget::default();
        let c = Functional2::constant("c", 2);
        assert_eq!(delta_mpc(&c, &Point::pad(&w("101")), 6, &b).unwrap(), Some(0));
        for s in ["", "0001", "111011"] {
            assert_eq!(delta_mpc(&at(3), &Point::pad(&w(s)), 6, &b).unwrap(), Some(4));
        }
        let g = Functional2::new("g", |o| if o.query(0)? == 1 { Ok(0) } else { o.query(5) });
        assert_eq!(delta_mpc(&g, &Point::pad(&w("1")), 7, &b).unwrap(), Some(1));
        assert_eq!(delta_mpc(&g, &Point::pad(&w("0")), 7, &b).unwrap(), Some(6));
        assert_eq!(query_bound(&c, &Point::zeros(), &b).unwrap(), 0);
        assert_eq!(query_bound(&at(3), &Point::zeros(), &b).unwrap(), 4);
    }

    #[test]
    fn associate_examples() {
        let b = Budget::default();
        let c = build_associate(&Functional2::constant("c", 6), 4);
        assert_eq!(c.lookup(&w(""), &b).unwrap(), 7);
        assert_eq!(eval_associate(&c, &Point::from_fn(|i| i % 2), &b).unwrap(), 6);
        let a = build_associate(&at(3), 6);
        for s in ["", "0", "01", "011"] {
            assert_eq!(a.lookup(&w(s), &b).unwrap(), 0);
        }
        assert_eq!(a.lookup(&w("0001"), &b).unwrap(), 2);
        assert_eq!(a.lookup(&w("1110"), &b).unwrap(), 1);
        assert_eq!(eval_associate_at(&a, &Point::pad(&w("0001")), &b).unwrap(), (1, 4));
        let sum = Functional2::new("sum", |o| Ok(o.query(0)? + o.query(1)?));
        let s = build_associate(&sum, 5);
        assert_eq!(eval_associate_at(&s, &Point::pad(&w("10")), &b).unwrap(), (1, 2));
    }

    #[test]
    fn table_associates_and_misses() {
        let b = Budget::default();
        let t = Associate::from_table([(w("1"), 3), (w("01"), 1)].into_iter().collect());
        assert_eq!(eval_associate(&t, &Point::pad(&w("1")), &b).unwrap(), 2);
        assert_eq!(eval_associate(&t, &Point::pad(&w("01")), &b).unwrap(), 0);
        assert!(matches!(
            eval_associate(&t, &Point::zeros(), &b),
            Err(Error::AssociateMiss { .. })
        ));
        let built = build_associate(&at(1), 3);
        let export = built.export(2, &b).unwrap();
        assert_eq!(export.len(), 7);
        assert_eq!(export["01"], 2);
        assert_eq!(export["0"], 0);
    }

    #[test]
    fn rm_codes() {
        let b = Budget::default();
        let phi = at(3);
        let value = build_associate(&phi, 5);
        let good = build_associate(&delta_functional(&phi, 5), 5);
        assert!(rm_code_check(&value, &good, 5, &b).unwrap().passed);
        let zero = build_associate(&Functional2::constant("z", 0), 5);
        let r = rm_code_check(&value, &zero, 5, &b).unwrap();
        let v = r.violation.unwrap();
        assert_eq!((v.n, v.zeta, v.gamma), (0, w("00000"), w("00010")));
        let c = build_associate(&Functional2::constant("c", 1), 0);
        assert!(rm_code_check(&c, &zero, 0, &b).unwrap().passed);
    }

    #[test]
    fn pointwise_sup_is_the_fan_modulus() {
        let b = Budget::default();
        let g = Functional2::new("g", |o| if o.query(0)? == 1 { Ok(0) } else { o.query(5) });
        assert_eq!(max_delta(&g, 8, &b).unwrap(), 6);
        assert_eq!(max_delta(&at(2), 8, &b).unwrap(), 3);
        assert_eq!(max_delta(&Functional2::constant("c", 0), 4, &b).unwrap(), 0);
    }
}
