//! Exact reals on [0,1] and the analysis built on the Cantor-space searches.
//!
//! Everything here is generic over the numerator carrier `I` of
//! [`Dyadic`]; the crate root provides `BigInt` and `i128` aliases. No
//! floating point is used anywhere.

mod analysis;
mod cover;
mod dyadic;

pub use analysis::{
    digit_encode, finite_bound, grid_modulus, integrate, pos_bound, riemann_sum, sup_real,
    uc_modulus, uc_modulus_dyadic, uniform_partition, Integral, RealConfig, SupReal, UcModulus,
};
pub use cover::{heine_borel, uncovered_point, OpenCover, Rational, Subcover};
pub use dyadic::{Dyadic, DyadicInt};
pub(crate) use dyadic::pow2;

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::Zero;

use crate::error::{Error, Result};

/// Closed interval `[lo, hi]` with dyadic endpoints.
#[derive(Clone, PartialEq, Eq)]
pub struct Interval<I> {
    pub lo: Dyadic<I>,
    pub hi: Dyadic<I>,
}

impl<I: DyadicInt> Interval<I> {
    pub fn new(lo: Dyadic<I>, hi: Dyadic<I>) -> Self {
        debug_assert!(lo <= hi);
        Self { lo, hi }
    }

    pub fn point(x: Dyadic<I>) -> Self {
        Self {
            lo: x.clone(),
            hi: x,
        }
    }

    pub fn unit() -> Self {
        Self::new(Dyadic::zero(), Dyadic::one())
    }

    pub fn width(&self) -> Result<Dyadic<I>> {
        self.hi.sub(&self.lo)
    }

    pub fn midpoint(&self) -> Result<Dyadic<I>> {
        self.lo.midpoint(&self.hi)
    }

    pub fn contains(&self, x: &Dyadic<I>) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        Ok(Self::new(self.lo.add(&other.lo)?, self.hi.add(&other.hi)?))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        Ok(Self::new(self.lo.sub(&other.hi)?, self.hi.sub(&other.lo)?))
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        let products = [
            self.lo.mul(&other.lo)?,
            self.lo.mul(&other.hi)?,
            self.hi.mul(&other.lo)?,
            self.hi.mul(&other.hi)?,
        ];
        let lo = products.iter().min().expect("four products").clone();
        let hi = products.iter().max().expect("four products").clone();
        Ok(Self::new(lo, hi))
    }

    pub fn min(&self, other: &Self) -> Self {
        Self::new(
            self.lo.clone().min(other.lo.clone()),
            self.hi.clone().min(other.hi.clone()),
        )
    }

    pub fn max(&self, other: &Self) -> Self {
        Self::new(
            self.lo.clone().max(other.lo.clone()),
            self.hi.clone().max(other.hi.clone()),
        )
    }

    /// Smallest interval with endpoints on the `2^-p` grid containing `self`.
    pub fn round_out(&self, p: u32) -> Result<Self> {
        let lo = if self.lo.exponent() <= p {
            self.lo.clone()
        } else {
            Dyadic::new(self.lo.floor_at(p)?, p)
        };
        let hi = if self.hi.exponent() <= p {
            self.hi.clone()
        } else {
            Dyadic::new(self.hi.ceil_at(p)?, p)
        };
        Ok(Self::new(lo, hi))
    }
}

impl<I: DyadicInt> fmt::Debug for Interval<I> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

type ApproxFn<I> = dyn Fn(u32) -> Dyadic<I> + Send + Sync;

/// A real given by a fast-converging Cauchy sequence: `|x - approx(n)| <= 2^-n`.
#[derive(Clone)]
pub enum ExactReal<I> {
    Exact(Dyadic<I>),
    Cauchy(Arc<ApproxFn<I>>),
}

impl<I: DyadicInt> ExactReal<I> {
    pub fn from_dyadic(x: Dyadic<I>) -> Self {
        ExactReal::Exact(x)
    }

    pub fn from_fn(approx: impl Fn(u32) -> Dyadic<I> + Send + Sync + 'static) -> Self {
        ExactReal::Cauchy(Arc::new(approx))
    }

    /// `a / b` for `b > 0`, approximated from below.
    pub fn from_ratio(a: I, b: I) -> Result<Self> {
        if !b.is_positive() {
            return Err(Error::InvalidArgument("denominator must be positive".into()));
        }
        let big: BigInt = b.clone().into();
        if (&big & (&big - 1u32)).is_zero() {
            let exp = big.trailing_zeros().and_then(|t| u32::try_from(t).ok()).ok_or(Error::Overflow)?;
            return Ok(ExactReal::Exact(Dyadic::new(a, exp)));
        }
        Ok(ExactReal::from_fn(move |n| {
            let scaled = dyadic::pow2::<I>(n)
                .ok()
                .and_then(|p| a.checked_mul(&p))
                .map(|num| num.div_floor(&b));
            match scaled {
                Some(q) => Dyadic::new(q, n),
                // Past the carrier's range: fall back to the coarsest
                // approximation that still fits.
                None => Dyadic::new(a.div_floor(&b), 0),
            }
        }))
    }

    pub fn approx(&self, n: u32) -> Dyadic<I> {
        match self {
            ExactReal::Exact(x) => x.clone(),
            ExactReal::Cauchy(f) => f(n),
        }
    }

    /// An interval of width at most `2^{1-n}` containing the real.
    pub fn enclosure(&self, n: u32) -> Result<Interval<I>> {
        match self {
            ExactReal::Exact(x) => Ok(Interval::point(x.clone())),
            ExactReal::Cauchy(f) => {
                let q = f(n);
                let e = Dyadic::epsilon(n);
                Ok(Interval::new(q.sub(&e)?, q.add(&e)?))
            }
        }
    }
}

impl<I: DyadicInt> fmt::Debug for ExactReal<I> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExactReal::Exact(x) => write!(f, "Exact({x})"),
            ExactReal::Cauchy(fun) => write!(f, "Cauchy(~{})", fun(16)),
        }
    }
}

pub(crate) fn serialize_display<T: fmt::Display, S: serde::Serializer>(
    value: &T,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(value)
}

/// Most extra input bits [`RealFunction::eval`] will try before giving up.
pub const MAX_EXTRA_PRECISION: u32 = 96;

/// A real function on [0,1], represented by an interval extension.
pub trait RealFunction<I: DyadicInt>: Send + Sync {
    /// An interval containing `F(x)` for every `x` in `input`. Constants
    /// that are not dyadic are enclosed on the `2^-prec` grid; as `input`
    /// shrinks and `prec` grows the result must shrink to a point.
    fn enclose(&self, input: &Interval<I>, prec: u32) -> Result<Interval<I>>;

    /// A dyadic `r` with `|F(x) - r| <= 2^-(p+1)`. Successive precisions
    /// therefore form a fast-converging Cauchy sequence.
    fn eval(&self, x: &ExactReal<I>, p: u32) -> Result<Dyadic<I>> {
        analysis::approximate(self, p, |n| x.enclosure(n))
    }

    fn name(&self) -> &str {
        "F"
    }
}

/// `F + c`
pub struct Shifted<F, I> {
    pub inner: F,
    pub shift: Dyadic<I>,
}

impl<I: DyadicInt, F: RealFunction<I>> RealFunction<I> for Shifted<F, I> {
    fn enclose(&self, input: &Interval<I>, prec: u32) -> Result<Interval<I>> {
        self.inner
            .enclose(input, prec)?
            .add(&Interval::point(self.shift.clone()))
    }

    fn name(&self) -> &str {
        self.inner.name()
    }
}

impl<I: DyadicInt, F: RealFunction<I> + ?Sized> RealFunction<I> for &F {
    fn enclose(&self, input: &Interval<I>, prec: u32) -> Result<Interval<I>> {
        (**self).enclose(input, prec)
    }

    fn name(&self) -> &str {
        (**self).name()
    }
}

impl<I: DyadicInt, F: RealFunction<I> + ?Sized> RealFunction<I> for Arc<F> {
    fn enclose(&self, input: &Interval<I>, prec: u32) -> Result<Interval<I>> {
        (**self).enclose(input, prec)
    }

    fn name(&self) -> &str {
        (**self).name()
    }
}

/// `x ↦ F(x)` as an [`ExactReal`].
pub fn apply<I: DyadicInt>(f: Arc<dyn RealFunction<I>>, x: ExactReal<I>) -> ExactReal<I> {
    ExactReal::from_fn(move |n| {
        f.eval(&x, n)
            .expect("real function failed while being sampled as a Cauchy sequence")
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Signed;
    use num_bigint::BigInt;

    type D = Dyadic<BigInt>;

    fn d(s: &str) -> D {
        s.parse().unwrap()
    }

    #[test]
    fn interval_arithmetic_encloses() {
        let a = Interval::new(d("-1/2"), d("1/4"));
        let b = Interval::new(d("1/2"), d("1"));
        assert_eq!(a.mul(&b).unwrap(), Interval::new(d("-1/2"), d("1/4")));
        assert_eq!(a.sub(&b).unwrap(), Interval::new(d("-3/2"), d("-1/4")));
        assert_eq!(
            Interval::new(d("341/1024"), d("1/2")).round_out(2).unwrap(),
            Interval::new(d("1/4"), d("1/2"))
        );
    }

    #[test]
    fn ratio_cauchy_contract() {
        let third = ExactReal::<BigInt>::from_ratio(1.into(), 3.into()).unwrap();
        let exact = num_rational::BigRational::new(1.into(), 3.into());
        for n in 0..40 {
            let q = third.approx(n);
            let q = num_rational::BigRational::new(q.numerator().clone(), BigInt::from(1) << q.exponent());
            let err = (q - exact.clone()).abs();
            assert!(err <= num_rational::BigRational::new(1.into(), BigInt::from(1) << n));
        }
        assert!(matches!(
            ExactReal::<BigInt>::from_ratio(3.into(), 4.into()).unwrap(),
            ExactReal::Exact(_)
        ));
    }
}
