use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use super::{DyadicInt, ExactReal};
use crate::error::{Error, Result};

/// Exact rational endpoints. Covers come from user input as arbitrary
/// fractions, so they are kept as `BigRational` rather than dyadics.
pub type Rational = BigRational;

/// A sequence of open intervals `(c_n, d_n)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpenCover {
    pub intervals: Vec<(Rational, Rational)>,
}

impl OpenCover {
    pub fn new(intervals: Vec<(Rational, Rational)>) -> Self {
        Self { intervals }
    }

    /// Rational intervals inside `(c_n, d_n)` for `n < count`: the endpoints
    /// are approximated at precision `p` and pulled inwards by `2^-p`, so
    /// anything covered by the result is covered by the original.
    pub fn from_reals<I: DyadicInt>(
        count: usize,
        p: u32,
        interval: impl Fn(usize) -> (ExactReal<I>, ExactReal<I>),
    ) -> Self {
        let eps = Rational::new(BigInt::one(), BigInt::one() << p);
        let to_rational = |x: &ExactReal<I>| {
            let q = x.approx(p);
            Rational::new(q.numerator().clone().into(), BigInt::one() << q.exponent())
        };
        let intervals = (0..count)
            .map(|n| {
                let (c, d) = interval(n);
                (to_rational(&c) + &eps, to_rational(&d) - &eps)
            })
            .collect();
        Self { intervals }
    }

    pub fn contains(&self, n: usize, x: &Rational) -> bool {
        let (c, d) = &self.intervals[n];
        c < x && x < d
    }
}

/// A dyadic of the given resolution that no chosen interval contains.
pub fn uncovered_point(cover: &OpenCover, chosen: &[usize], resolution: u32) -> Option<Rational> {
    let den = BigInt::one() << resolution;
    let mut i = BigInt::zero();
    while i <= den {
        let x = Rational::new(i.clone(), den.clone());
        if !chosen.iter().any(|&n| cover.contains(n, &x)) {
            return Some(x);
        }
        i += 1;
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Subcover {
    /// In chaining order, starting from the interval holding 0.
    pub indices: Vec<usize>,
    pub resolution: u32,
}

/// A finite subcover of [0,1] from the first `n_cap` intervals.
///
/// Starting from the frontier 0, repeatedly take the interval that contains
/// the frontier and reaches furthest right (least index on ties), and move
/// the frontier to its right end, until it passes 1. Consecutive chosen
/// intervals overlap, so the chain covers [0,1]; it is re-checked on every
/// dyadic of the given resolution anyway.
pub fn heine_borel(cover: &OpenCover, resolution: u32, n_cap: usize) -> Result<Subcover> {
    let usable = n_cap.min(cover.intervals.len());
    let one = Rational::one();
    let mut frontier = Rational::zero();
    let mut indices = Vec::new();
    loop {
        let best = (0..usable)
            .filter(|&n| cover.contains(n, &frontier))
            .fold(None::<usize>, |best, n| match best {
                Some(b) if cover.intervals[b].1 >= cover.intervals[n].1 => Some(b),
                _ => Some(n),
            });
        let Some(n) = best else {
            return Err(Error::NoSubcover {
                cap: n_cap,
                frontier: frontier.to_string(),
            });
        };
        indices.push(n);
        frontier = cover.intervals[n].1.clone();
        if frontier > one {
            break;
        }
    }
    if let Some(x) = uncovered_point(cover, &indices, resolution) {
        return Err(Error::NoSubcover {
            cap: n_cap,
            frontier: x.to_string(),
        });
    }
    Ok(Subcover {
        indices,
        resolution,
    })
}
