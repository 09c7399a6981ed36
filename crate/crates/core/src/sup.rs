//! Suprema on Cantor space and bar bounds for the fan theorems.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::fan::{fan_modulus, values_at_depth, FanConfig, FanResult};
use crate::functional::{Functional2, OracleProgram, PointOracle};
use crate::seq::{enumerate_words, BinWord, Point};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SupResult {
    pub value: u64,
    pub witness: BinWord,
    pub depth_used: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BarBound {
    pub k: u64,
    pub certified: bool,
}

/// Index of the first maximum.
fn first_argmax(values: &[u64]) -> (usize, u64) {
    values
        .iter()
        .enumerate()
        .fold((0, 0), |(bi, bv), (i, &v)| if i == 0 || v > bv { (i, v) } else { (bi, bv) })
}

/// `max φ` over the words of length `Ω(φ)`, which is `sup φ` once the
/// modulus is right. The witness is the first maximiser of that length.
pub fn sup_cantor(phi: &Functional2, config: FanConfig, budget: &Budget) -> Result<SupResult> {
    let fan = fan_modulus(phi, config, budget)?;
    sup_with_modulus(phi, fan, budget)
}

pub(crate) fn sup_with_modulus(phi: &Functional2, fan: FanResult, budget: &Budget) -> Result<SupResult> {
    if !fan.certified {
        return Err(Error::Uncertified {
            depth: 2 * fan.stabilized_at,
        });
    }
    let d = fan.modulus as usize;
    let values = values_at_depth(phi, d, budget)?;
    let (i, value) = first_argmax(&values);
    Ok(SupResult {
        value,
        witness: BinWord::from_index(i as u64, d),
        depth_used: fan.modulus,
    })
}

/// `Ψ(ψ, M)`: the least bound of `ψ` on the depth-`M` words, and the
/// left-most word of least length attaining it.
///
/// The bound is not capped at `M`; see the crate README.
pub fn psi_sup(psi: &Functional2, m: usize, budget: &Budget) -> Result<(u64, BinWord)> {
    let values = values_at_depth(psi, m, budget)?;
    let (_, k) = first_argmax(&values);
    for len in 0..=m {
        for w in enumerate_words(len, budget)? {
            if psi.eval(&Point::pad(&w), budget)? == k {
                return Ok((k, w));
            }
        }
    }
    unreachable!("the maximum is attained at depth {m}")
}

type Membership = dyn Fn(&BinWord, &Budget) -> Result<bool> + Send + Sync;

/// A decidable set of binary words.
#[derive(Clone)]
pub struct Tree {
    name: Arc<str>,
    member: Arc<Membership>,
}

impl Tree {
    pub fn new(
        name: impl Into<Arc<str>>,
        member: impl Fn(&BinWord, &Budget) -> Result<bool> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            member: Arc::new(member),
        }
    }

    /// `σ ∈ T` iff `program(σ*00..., |σ|) ≠ 0`.
    pub fn from_program(program: OracleProgram) -> Result<Self> {
        if program.arity() != 1 {
            return Err(Error::Shape {
                name: program.name().to_string(),
                expected: "a tree",
                reason: "takes the word and its length".into(),
            });
        }
        let name = program.name().to_string();
        Ok(Self::new(name, move |w, budget| {
            let point = Point::pad(w);
            let mut o = PointOracle::new(&point, budget.step_limit(), false);
            Ok(program.apply(&mut o, &[w.len() as u64])? != 0)
        }))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn contains(&self, w: &BinWord, budget: &Budget) -> Result<bool> {
        (self.member)(w, budget)
    }
}

impl fmt::Debug for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tree({})", self.name)
    }
}

/// Every word of length `1..=depth` in `T` has its parent in `T`.
pub fn check_downward_closed(tree: &Tree, depth: usize, budget: &Budget) -> Result<()> {
    for len in 1..=depth {
        let bad = enumerate_words(len, budget)?
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|w| {
                let inside = tree.contains(&w, budget)?;
                let parent = tree.contains(&w.truncate(len - 1), budget)?;
                Ok((inside && !parent).then_some(w))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .next();
        if let Some(w) = bad {
            return Err(Error::NotDownwardClosed { word: w.to_string() });
        }
    }
    Ok(())
}

/// Least `k <= cap` such that every word of length `k` leaves `T` at some
/// prefix. Words are only extended while all their prefixes are in `T`, so
/// level `k` of the search is empty exactly when `k` is a bar depth.
pub fn ufan2_bound(tree: &Tree, cap: usize, budget: &Budget) -> Result<BarBound> {
    let mut level = vec![BinWord::new()];
    let mut k = 0;
    loop {
        budget.charge(level.len() as u64)?;
        let inside: Vec<bool> = level
            .par_iter()
            .map(|w| tree.contains(w, budget))
            .collect::<Result<_>>()?;
        let survivors: Vec<BinWord> = level
            .into_iter()
            .zip(inside)
            .filter_map(|(w, keep)| keep.then_some(w))
            .collect();
        if survivors.is_empty() {
            check_downward_closed(tree, closure_depth(k, cap, budget), budget)?;
            return Ok(BarBound {
                k: k as u64,
                certified: true,
            });
        }
        if k == cap {
            check_downward_closed(tree, cap, budget)?;
            return Ok(BarBound {
                k: cap as u64,
                certified: false,
            });
        }
        level = survivors
            .iter()
            .flat_map(|w| [w.child(0), w.child(1)])
            .collect();
        k += 1;
    }
}

// The closure scan covers the whole working depth when that fits in the
// budget, and the levels walked otherwise.
fn closure_depth(k: usize, cap: usize, budget: &Budget) -> usize {
    let full = crate::seq::word_count(cap + 1).unwrap_or(u64::MAX);
    if full <= budget.remaining() / 2 {
        cap
    } else {
        k
    }
}

/// `α ↦ μn <= cap. H(α, n) = 0`, or `cap + 1` when there is no such `n`.
pub fn mu_functional(h: &OracleProgram, cap: u64) -> Result<Functional2> {
    if h.arity() != 1 {
        return Err(Error::Shape {
            name: h.name().to_string(),
            expected: "a predicate",
            reason: "takes a point and one natural".into(),
        });
    }
    let h = h.clone();
    Ok(Functional2::new(format!("mu[{}]", h.name()), move |o| {
        for n in 0..=cap {
            if h.apply(o, &[n])? == 0 {
                return Ok(n);
            }
        }
        Ok(cap + 1)
    }))
}

fn fan_config_for(cap: usize, config: FanConfig) -> FanConfig {
    FanConfig {
        m0: config.m0.min(cap / 2).max(1),
        max_depth: cap,
    }
}

/// Least `k` with `∀α ∃n <= k. H(α, n) = 0`: the supremum of the μ-search
/// functional. The μ-search cap and the depth cap are the same number.
pub fn qffan_bound(h: &OracleProgram, cap: usize, config: FanConfig, budget: &Budget) -> Result<BarBound> {
    let mu = mu_functional(h, cap as u64)?;
    let fan = fan_modulus(&mu, fan_config_for(cap, config), budget)?;
    let value = if fan.certified {
        sup_with_modulus(&mu, fan, budget)?.value
    } else {
        let values = values_at_depth(&mu, cap, budget)?;
        first_argmax(&values).1
    };
    Ok(if value > cap as u64 {
        BarBound {
            k: cap as u64,
            certified: false,
        }
    } else {
        BarBound {
            k: value,
            certified: fan.certified,
        }
    })
}

/// [`qffan_bound`] together with, for each word `σ` of length `Ω(μ_H)`, the
/// least `n` that works on the whole neighbourhood of `σ`.
pub fn fanc_local(
    h: &OracleProgram,
    cap: usize,
    config: FanConfig,
    budget: &Budget,
) -> Result<(BarBound, BTreeMap<BinWord, u64>)> {
    let mu = mu_functional(h, cap as u64)?;
    let fan = fan_modulus(&mu, fan_config_for(cap, config), budget)?;
    let d = fan.modulus as usize;
    let words: Vec<BinWord> = enumerate_words(cap, budget)?.collect();
    let values: Vec<u64> = words
        .par_iter()
        .map(|w| mu.eval(&Point::pad(w), budget))
        .collect::<Result<_>>()?;
    // Words sharing a length-d prefix form contiguous blocks of 2^(cap-d).
    let block = 1usize << (cap - d.min(cap));
    let mut table = BTreeMap::new();
    for (i, chunk) in values.chunks(block).enumerate() {
        let n = *chunk.iter().max().expect("blocks are nonempty");
        table.insert(BinWord::from_index(i as u64, d.min(cap)), n);
    }
    let k = table.values().copied().max().unwrap_or(0);
    let complete = k <= cap as u64;
    let bound = BarBound {
        k: k.min(cap as u64),
        certified: fan.certified && complete,
    };
    Ok((bound, table))
}
