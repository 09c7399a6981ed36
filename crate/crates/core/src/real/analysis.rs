use std::collections::VecDeque;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::{dyadic::pow2, Dyadic, DyadicInt, ExactReal, Interval, RealFunction, Shifted};
use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::fan::exact_modulus;
use crate::functional::{Functional2, Oracle};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RealConfig {
    /// Deepest prefix the modulus search may split, and the most mesh
    /// halvings [`integrate`] will try.
    pub max_depth: usize,
}

impl Default for RealConfig {
    fn default() -> Self {
        Self { max_depth: 20 }
    }
}

/// `⌊F(x)·2^k⌋` with `x = Σ α(i)/2^{i+1}`, where `F(x)` is itself the
/// precision-`k` approximation. Bits are read only as far as the enclosure
/// needs them, so the functional is continuous by construction.
pub fn digit_encode<I: DyadicInt>(f: Arc<dyn RealFunction<I>>, k: u32) -> Functional2 {
    let name = format!("digits[{},{k}]", f.name());
    Functional2::new(name, move |o: &mut dyn Oracle| {
        let mut bits = BitReader::default();
        let r = approximate(&*f, k, |n| bits.enclosure(o, n))?;
        let j = r.floor_at(k)?;
        if j.is_negative() {
            return Err(Error::NegativeDigit {
                value: r.to_string(),
            });
        }
        j.to_u64().ok_or(Error::Overflow)
    })
}

#[derive(Default)]
struct BitReader {
    read: u32,
    // Σ_{i<read} α(i) 2^{read-1-i}
    acc: u128,
}

impl BitReader {
    /// `[Σ_{i<n} α(i)/2^{i+1}, that + 2^-n]`: every point with this prefix.
    fn enclosure<I: DyadicInt>(&mut self, o: &mut dyn Oracle, n: u32) -> Result<Interval<I>> {
        if n > 120 {
            return Err(Error::Overflow);
        }
        while self.read < n {
            let bit = o.query(self.read as u64)?.min(1);
            self.acc = (self.acc << 1) | bit as u128;
            self.read += 1;
        }
        let acc = self.acc >> (self.read - n);
        let lo = Dyadic::new(I::from_u128(acc).ok_or(Error::Overflow)?, n);
        let hi = lo.add(&Dyadic::epsilon(n))?;
        Ok(Interval::new(lo, hi))
    }
}

/// The loop behind [`RealFunction::eval`], over any source of shrinking
/// input enclosures.
pub(crate) fn approximate<I: DyadicInt, F: RealFunction<I> + ?Sized>(
    f: &F,
    p: u32,
    mut input: impl FnMut(u32) -> Result<Interval<I>>,
) -> Result<Dyadic<I>> {
    let target = Dyadic::epsilon(p + 1);
    let mut extra = 2;
    while extra <= super::MAX_EXTRA_PRECISION {
        let n = p + extra;
        let out = f.enclose(&input(n)?, n)?;
        if out.width()? <= target {
            return out.midpoint()?.round_at(p + 2);
        }
        extra += 2;
    }
    Err(Error::NoConvergence { precision: p })
}

/// A certified modulus of uniform continuity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UcModulus {
    /// `|x - y| < 1/n` implies `|F(x) - F(y)| < tolerance`.
    pub n: u64,
    /// `n = 2^depth`.
    pub depth: u64,
    /// Digits used by the encoded functional.
    pub digits: u32,
    /// Spacing exponent of the grid the modulus was re-verified on.
    pub grid_depth: u64,
}

fn bit_length(k: u64) -> u32 {
    64 - k.leading_zeros()
}

/// `N` with `|x - y| < 1/N ⇒ |F(x) - F(y)| < 1/k` on [0,1].
pub fn uc_modulus<I: DyadicInt>(
    f: Arc<dyn RealFunction<I>>,
    k: u64,
    config: RealConfig,
    budget: &Budget,
) -> Result<UcModulus> {
    if k == 0 {
        return Err(Error::InvalidArgument("tolerance 1/k needs k >= 1".into()));
    }
    // 2^-bitlen(k) < 1/k
    uc_modulus_dyadic(f, bit_length(k), config, budget)
}

/// As [`uc_modulus`] with tolerance `2^-t`.
///
/// The encoded functional reads `t + 3` digits of `F`. If its uniform
/// modulus is `d`, points in one dyadic cell of width `2^-d` get equal
/// digits, so their values differ by less than `2^-(t+2)`; points closer
/// than `2^-d` lie in at most two adjacent cells, giving `2^-(t+1)`. The
/// remaining half of the tolerance absorbs evaluation error in the grid
/// re-check.
pub fn uc_modulus_dyadic<I: DyadicInt>(
    f: Arc<dyn RealFunction<I>>,
    t: u32,
    config: RealConfig,
    budget: &Budget,
) -> Result<UcModulus> {
    let digits = t + 3;
    let lower = f.enclose(&Interval::unit(), 0)?.lo;
    let nonneg: Arc<dyn RealFunction<I>> = if lower.is_negative() {
        let shift = Dyadic::new(-lower.floor()?, 0);
        Arc::new(Shifted {
            inner: f.clone(),
            shift,
        })
    } else {
        f.clone()
    };
    let phi = digit_encode(nonneg, digits);
    let depth = exact_modulus(&phi, config.max_depth, budget)?.ok_or(Error::Uncertified {
        depth: config.max_depth as u64,
    })?;
    let n = 1u64.checked_shl(depth as u32).ok_or(Error::Overflow)?;
    let grid_depth = depth + 1;
    let tolerance = Dyadic::epsilon(t);
    let slack = Dyadic::epsilon(t + 4).shl(1)?;
    let window = 1usize << (grid_depth - depth);
    let values = grid_values(&*f, grid_depth as u32, t + 3, budget)?;
    if let Some(spread) = max_window_spread(&values, window)? {
        if spread >= tolerance.sub(&slack)? {
            return Err(Error::Uncertified { depth });
        }
    }
    Ok(UcModulus {
        n,
        depth,
        digits,
        grid_depth,
    })
}

/// `F(i/2^g)` at precision `p` for `i = 0..=2^g`.
fn grid_values<I: DyadicInt>(
    f: &dyn RealFunction<I>,
    g: u32,
    p: u32,
    budget: &Budget,
) -> Result<Vec<Dyadic<I>>> {
    let count = 1u64.checked_shl(g).ok_or(Error::Overflow)? + 1;
    budget.charge(count)?;
    (0..count)
        .into_par_iter()
        .map(|i| {
            let x = ExactReal::from_dyadic(Dyadic::new(I::from_u64(i).ok_or(Error::Overflow)?, g));
            f.eval(&x, p)
        })
        .collect()
}

/// Largest `max - min` over runs of `window` consecutive values.
fn max_window_spread<I: DyadicInt>(values: &[Dyadic<I>], window: usize) -> Result<Option<Dyadic<I>>> {
    if values.len() < 2 || window < 2 {
        return Ok(None);
    }
    let mut hi: VecDeque<usize> = VecDeque::new();
    let mut lo: VecDeque<usize> = VecDeque::new();
    let mut best: Option<Dyadic<I>> = None;
    for i in 0..values.len() {
        while hi.back().is_some_and(|&j| values[j] <= values[i]) {
            hi.pop_back();
        }
        hi.push_back(i);
        while lo.back().is_some_and(|&j| values[j] >= values[i]) {
            lo.pop_back();
        }
        lo.push_back(i);
        let start = (i + 1).saturating_sub(window);
        while hi.front().is_some_and(|&j| j < start) {
            hi.pop_front();
        }
        while lo.front().is_some_and(|&j| j < start) {
            lo.pop_front();
        }
        if i + 1 >= window.min(values.len()) {
            let spread = values[hi[0]].sub(&values[lo[0]])?;
            best = Some(match best {
                Some(b) => b.max(spread),
                None => spread,
            });
        }
    }
    Ok(best)
}

/// Least `d <= g` such that grid points `i/2^g` closer than `2^-d` have
/// values (precision `t + 3`) within `2^-t` minus evaluation slack. A direct
/// search, independent of the encoded functional.
pub fn grid_modulus<I: DyadicInt>(
    f: &dyn RealFunction<I>,
    t: u32,
    g: u32,
    budget: &Budget,
) -> Result<Option<u64>> {
    let values = grid_values(f, g, t + 3, budget)?;
    let bound = Dyadic::epsilon(t).sub(&Dyadic::epsilon(t + 4).shl(1)?)?;
    for d in 0..=g {
        let window = 1usize << (g - d);
        match max_window_spread(&values, window)? {
            Some(spread) if spread >= bound => continue,
            _ => return Ok(Some(d as u64)),
        }
    }
    Ok(None)
}

/// Least `n` such that 1/n is strictly below every grid value `F(i/m)`
/// (precision `m`), doubled: `1/(2n)` is then a lower bound for `F` with room
/// for the grid spacing.
pub fn pos_bound<I: DyadicInt>(f: &dyn RealFunction<I>, m: u64) -> Result<u64> {
    if m == 0 {
        return Err(Error::InvalidArgument("grid size must be at least 1".into()));
    }
    let values = ratio_grid(f, m)?;
    let big_m = I::from_u64(m).ok_or(Error::Overflow)?;
    let mut least: Option<u64> = None;
    for (i, r) in values.iter().enumerate() {
        // r > 1/n  ⟺  n·r > 1; the least such n is ⌊1/r⌋ + 1.
        let bad = || Error::NotGridPositive {
            index: i as u64,
            size: m,
            value: r.to_string(),
        };
        // r > 1/M is needed for any n <= M to work.
        if r.mul(&Dyadic::new(big_m.clone(), 0))? <= Dyadic::one() {
            return Err(bad());
        }
        let n = least_n_above(r)?;
        least = Some(least.map_or(n, |l| l.max(n)));
    }
    let n0 = least.expect("grid has m + 1 >= 2 points");
    n0.checked_mul(2).ok_or(Error::Overflow)
}

// ⌊1/r⌋ + 1 for r > 0
fn least_n_above<I: DyadicInt>(r: &Dyadic<I>) -> Result<u64> {
    let num = r.numerator().clone();
    let den = pow2::<I>(r.exponent())?;
    let q = den.div_floor(&num);
    (q + I::one()).to_u64().ok_or(Error::Overflow)
}

/// `F(i/m)` at precision `m` for `i = 0..=m`.
fn ratio_grid<I: DyadicInt>(f: &dyn RealFunction<I>, m: u64) -> Result<Vec<Dyadic<I>>> {
    let p = u32::try_from(m).map_err(|_| Error::Overflow)?;
    let big_m = I::from_u64(m).ok_or(Error::Overflow)?;
    (0..=m)
        .map(|i| {
            let x = ExactReal::from_ratio(I::from_u64(i).ok_or(Error::Overflow)?, big_m.clone())?;
            f.eval(&x, p)
        })
        .collect()
}

/// Least `N` with `|F(i/m)| < N` (precision `m`) on the grid.
pub fn finite_bound<I: DyadicInt>(f: &dyn RealFunction<I>, m: u64) -> Result<u64> {
    if m == 0 {
        return Err(Error::InvalidArgument("grid size must be at least 1".into()));
    }
    let values = ratio_grid(f, m)?;
    let top = values
        .iter()
        .map(|v| v.abs())
        .max()
        .expect("grid is nonempty");
    (top.floor()? + I::one()).to_u64().ok_or(Error::Overflow)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SupReal<I: DyadicInt> {
    /// Within `2^-k` of `sup F`.
    #[serde(serialize_with = "super::serialize_display")]
    pub value: Dyadic<I>,
    /// Grid point with `F(z) > value - 2^-k`.
    #[serde(serialize_with = "super::serialize_display")]
    pub argmax: Dyadic<I>,
    pub grid_depth: u64,
}

/// Supremum of `F` on [0,1] to within `2^-k`, with a near-maximiser.
///
/// The grid has spacing `1/N` for a modulus `N` at tolerance `2^-(k+1)`,
/// so every point is within that tolerance of a sampled value.
pub fn sup_real<I: DyadicInt>(
    f: Arc<dyn RealFunction<I>>,
    k: u32,
    config: RealConfig,
    budget: &Budget,
) -> Result<SupReal<I>> {
    let modulus = uc_modulus_dyadic(f.clone(), k + 1, config, budget)?;
    let g = modulus.depth as u32;
    let values = grid_values(&*f, g, k + 2, budget)?;
    let (best, value) = values
        .iter()
        .enumerate()
        .fold(None::<(usize, &Dyadic<I>)>, |acc, (i, v)| match acc {
            Some((_, b)) if b >= v => acc,
            _ => Some((i, v)),
        })
        .expect("grid is nonempty");
    Ok(SupReal {
        value: value.clone(),
        argmax: Dyadic::new(I::from_usize(best).ok_or(Error::Overflow)?, g),
        grid_depth: modulus.depth,
    })
}

/// `0 = t_0 < ... < t_m = 1` with `t_i = i/m`; `m` must be a power of two.
pub fn uniform_partition<I: DyadicInt>(m: u64) -> Result<Vec<Dyadic<I>>> {
    if !m.is_power_of_two() {
        return Err(Error::MalformedPartition(format!(
            "{m} pieces do not give dyadic endpoints"
        )));
    }
    let e = m.trailing_zeros();
    (0..=m)
        .map(|i| Ok(Dyadic::new(I::from_u64(i).ok_or(Error::Overflow)?, e)))
        .collect()
}

/// Left-endpoint Riemann sum, each tag evaluated at precision `p`.
pub fn riemann_sum<I: DyadicInt>(
    f: &dyn RealFunction<I>,
    partition: &[Dyadic<I>],
    p: u32,
) -> Result<Dyadic<I>> {
    match (partition.first(), partition.last()) {
        (Some(a), Some(b)) if a.is_zero() && *b == Dyadic::one() && partition.len() >= 2 => {}
        _ => {
            return Err(Error::MalformedPartition(
                "must run from 0 to 1 with at least one piece".into(),
            ))
        }
    }
    if let Some(w) = partition.windows(2).find(|w| w[0] >= w[1]) {
        return Err(Error::MalformedPartition(format!(
            "{} is not below {}",
            w[0], w[1]
        )));
    }
    let terms: Vec<Dyadic<I>> = partition
        .par_windows(2)
        .map(|w| {
            let tag = f.eval(&ExactReal::from_dyadic(w[0].clone()), p)?;
            tag.mul(&w[1].sub(&w[0])?)
        })
        .collect::<Result<_>>()?;
    terms.iter().try_fold(Dyadic::zero(), |acc, t| acc.add(t))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Integral<I: DyadicInt> {
    #[serde(serialize_with = "super::serialize_display")]
    pub value: Dyadic<I>,
    /// log2 of the number of pieces in the final sum.
    pub pieces_log2: u32,
    /// The sum is within `2^-k` of the integral.
    pub certified: bool,
}

/// `∫_0^1 F` to within `2^-k`.
///
/// Halves the mesh until two successive sums agree to `2^-(k+1)` and the
/// mesh is below the modulus for `2^-(k+1)`; the latter is what bounds the
/// error, since every tag is then within that tolerance of every value on
/// its piece. Tags are evaluated to `2^-(k+3)`.
pub fn integrate<I: DyadicInt>(
    f: Arc<dyn RealFunction<I>>,
    k: u32,
    config: RealConfig,
    budget: &Budget,
) -> Result<Integral<I>> {
    let modulus = uc_modulus_dyadic(f.clone(), k + 1, config, budget)?;
    let p = k + 2;
    let close = Dyadic::epsilon(k + 1);
    let mut level = 0u32;
    let mut prev = riemann_sum(&*f, &uniform_partition(1)?, p)?;
    loop {
        if level as usize >= config.max_depth {
            return Ok(Integral {
                value: prev,
                pieces_log2: level,
                certified: level as u64 >= modulus.depth,
            });
        }
        level += 1;
        budget.charge(1u64 << level)?;
        let next = riemann_sum(&*f, &uniform_partition(1u64 << level)?, p)?;
        let settled = next.sub(&prev)?.abs() <= close;
        prev = next;
        if settled && level as u64 >= modulus.depth {
            return Ok(Integral {
                value: prev,
                pieces_log2: level,
                certified: true,
            });
        }
    }
}
