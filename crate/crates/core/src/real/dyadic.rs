use std::cmp::Ordering;
use std::fmt;
use std::hash::Hash;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{CheckedAdd, CheckedMul, CheckedSub, FromPrimitive, Signed, ToPrimitive};

use crate::error::{Error, Result};

/// Integer carriers for dyadic numerators: `i64`, `i128` and `BigInt`.
///
/// All arithmetic is checked; a fixed-width carrier reports
/// [`Error::Overflow`] instead of wrapping, so callers can retry with
/// `BigInt`.
pub trait DyadicInt:
    Integer
    + Signed
    + Clone
    + CheckedAdd
    + CheckedSub
    + CheckedMul
    + FromPrimitive
    + ToPrimitive
    + Into<BigInt>
    + Hash
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + 'static
{
}

impl<T> DyadicInt for T where
    T: Integer
        + Signed
        + Clone
        + CheckedAdd
        + CheckedSub
        + CheckedMul
        + FromPrimitive
        + ToPrimitive
        + Into<BigInt>
        + Hash
        + fmt::Debug
        + fmt::Display
        + Send
        + Sync
        + 'static
{
}

pub(crate) fn pow2<I: DyadicInt>(k: u32) -> Result<I> {
    let two = I::one() + I::one();
    num_traits::checked_pow(two, k as usize).ok_or(Error::Overflow)
}

fn ovf<T>(v: Option<T>) -> Result<T> {
    v.ok_or(Error::Overflow)
}

/// `num / 2^exp`, kept canonical: `num` is odd or `exp` is 0.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dyadic<I> {
    num: I,
    exp: u32,
}

impl<I: DyadicInt> Dyadic<I> {
    pub fn new(num: I, exp: u32) -> Self {
        let mut d = Dyadic { num, exp };
        d.normalize();
        d
    }

    fn normalize(&mut self) {
        if self.num.is_zero() {
            self.exp = 0;
            return;
        }
        let two = I::one() + I::one();
        while self.exp > 0 && self.num.is_even() {
            self.num = self.num.clone() / two.clone();
            self.exp -= 1;
        }
    }

    pub fn zero() -> Self {
        Dyadic {
            num: I::zero(),
            exp: 0,
        }
    }

    pub fn one() -> Self {
        Dyadic {
            num: I::one(),
            exp: 0,
        }
    }

    pub fn from_int(n: i64) -> Result<Self> {
        Ok(Dyadic {
            num: ovf(I::from_i64(n))?,
            exp: 0,
        })
    }

    pub fn from_u64(n: u64) -> Result<Self> {
        Ok(Dyadic {
            num: ovf(I::from_u64(n))?,
            exp: 0,
        })
    }

    /// `2^-k`
    pub fn epsilon(k: u32) -> Self {
        Dyadic {
            num: I::one(),
            exp: k,
        }
    }

    pub fn numerator(&self) -> &I {
        &self.num
    }

    pub fn exponent(&self) -> u32 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.num.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.num.is_positive()
    }

    fn aligned(&self, other: &Self) -> Result<(I, I, u32)> {
        let exp = self.exp.max(other.exp);
        let a = ovf(self.num.checked_mul(&pow2(exp - self.exp)?))?;
        let b = ovf(other.num.checked_mul(&pow2(exp - other.exp)?))?;
        Ok((a, b, exp))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let (a, b, exp) = self.aligned(other)?;
        Ok(Self::new(ovf(a.checked_add(&b))?, exp))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        let (a, b, exp) = self.aligned(other)?;
        Ok(Self::new(ovf(a.checked_sub(&b))?, exp))
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        let exp = ovf(self.exp.checked_add(other.exp))?;
        Ok(Self::new(ovf(self.num.checked_mul(&other.num))?, exp))
    }

    pub fn neg(&self) -> Self {
        Dyadic {
            num: -self.num.clone(),
            exp: self.exp,
        }
    }

    pub fn abs(&self) -> Self {
        Dyadic {
            num: self.num.abs(),
            exp: self.exp,
        }
    }

    /// `self / 2^k`
    pub fn shr(&self, k: u32) -> Result<Self> {
        Ok(Self::new(self.num.clone(), ovf(self.exp.checked_add(k))?))
    }

    /// `self * 2^k`
    pub fn shl(&self, k: u32) -> Result<Self> {
        if k <= self.exp {
            Ok(Self::new(self.num.clone(), self.exp - k))
        } else {
            Ok(Self::new(
                ovf(self.num.checked_mul(&pow2(k - self.exp)?))?,
                0,
            ))
        }
    }

    /// `(self + other) / 2`
    pub fn midpoint(&self, other: &Self) -> Result<Self> {
        self.add(other)?.shr(1)
    }

    /// `⌊self · 2^p⌋`
    pub fn floor_at(&self, p: u32) -> Result<I> {
        if p >= self.exp {
            ovf(self.num.checked_mul(&pow2(p - self.exp)?))
        } else {
            Ok(self.num.div_floor(&pow2(self.exp - p)?))
        }
    }

    /// `⌈self · 2^p⌉`
    pub fn ceil_at(&self, p: u32) -> Result<I> {
        if p >= self.exp {
            ovf(self.num.checked_mul(&pow2(p - self.exp)?))
        } else {
            let d = pow2::<I>(self.exp - p)?;
            let (q, r) = self.num.div_mod_floor(&d);
            Ok(if r.is_zero() { q } else { q + I::one() })
        }
    }

    /// Nearest multiple of `2^-p`, ties upward.
    pub fn round_at(&self, p: u32) -> Result<Self> {
        let shifted = self.add(&Self::epsilon(p + 1))?;
        Ok(Self::new(shifted.floor_at(p)?, p))
    }

    /// `⌊self⌋`
    pub fn floor(&self) -> Result<I> {
        self.floor_at(0)
    }

    pub fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    /// Converts to another carrier.
    pub fn convert<J: DyadicInt>(&self) -> Result<Dyadic<J>> {
        let big: BigInt = self.num.clone().into();
        let num = match big.to_i128() {
            Some(v) => J::from_i128(v),
            None => big_into::<J>(&big),
        }
        .ok_or(Error::Overflow)?;
        Ok(Dyadic { num, exp: self.exp })
    }

    pub fn to_big(&self) -> Dyadic<BigInt> {
        Dyadic {
            num: self.num.clone().into(),
            exp: self.exp,
        }
    }
}

fn big_into<J: DyadicInt>(big: &BigInt) -> Option<J> {
    // Only BigInt itself can hold values beyond i128.
    let s = big.to_string();
    J::from_str_radix(&s, 10).ok()
}

impl<I: DyadicInt> Ord for Dyadic<I> {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.aligned(other) {
            Ok((a, b, _)) => a.cmp(&b),
            Err(_) => {
                let (a, b) = (self.to_big(), other.to_big());
                let (x, y, _) = a.aligned(&b).expect("BigInt alignment cannot overflow");
                x.cmp(&y)
            }
        }
    }
}

impl<I: DyadicInt> PartialOrd for Dyadic<I> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<I: DyadicInt> fmt::Display for Dyadic<I> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/2^{}", self.num, self.exp)
    }
}

impl<I: DyadicInt> fmt::Debug for Dyadic<I> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl<I: DyadicInt> std::str::FromStr for Dyadic<I> {
    type Err = Error;

    /// Accepts `p/2^e`, `p/q` with `q` a power of two, or an integer.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("`{s}` is not a dyadic rational"));
        let s = s.trim();
        let parse_int = |t: &str| I::from_str_radix(t.trim(), 10).map_err(|_| bad());
        match s.split_once('/') {
            None => Ok(Self::new(parse_int(s)?, 0)),
            Some((p, q)) => {
                let q = q.trim();
                let exp = if let Some(e) = q.strip_prefix("2^") {
                    e.parse::<u32>().map_err(|_| bad())?
                } else {
                    let q: u64 = q.parse().map_err(|_| bad())?;
                    if !q.is_power_of_two() {
                        return Err(bad());
                    }
                    q.trailing_zeros()
                };
                Ok(Self::new(parse_int(p)?, exp))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type D = Dyadic<i64>;

    fn d(s: &str) -> D {
        s.parse().unwrap()
    }

    #[test]
    fn canonical_form() {
        assert_eq!(D::new(4, 3), d("1/2"));
        assert_eq!(D::new(0, 7), D::zero());
        assert_eq!(d("3/2^2").to_string(), "3/2^2");
        assert_eq!(d("6/8").to_string(), "3/2^2");
        assert_eq!(d("-5").to_string(), "-5/2^0");
        assert!("1/3".parse::<D>().is_err());
    }

    #[test]
    fn arithmetic_is_exact() {
        assert_eq!(d("1/2").add(&d("1/4")).unwrap(), d("3/4"));
        assert_eq!(d("1/2").sub(&d("3/4")).unwrap(), d("-1/4"));
        assert_eq!(d("3/4").mul(&d("-1/2")).unwrap(), d("-3/8"));
        assert_eq!(d("3/4").midpoint(&d("1")).unwrap(), d("7/8"));
        assert!(d("1/4") < d("1/2") && d("-1") < d("0"));
    }

    #[test]
    fn floors_and_rounding() {
        assert_eq!(d("7/8").floor_at(2).unwrap(), 3);
        assert_eq!(d("-7/8").floor_at(2).unwrap(), -4);
        assert_eq!(d("7/8").ceil_at(2).unwrap(), 4);
        assert_eq!(d("3/4").ceil_at(2).unwrap(), 3);
        assert_eq!(d("5/8").round_at(2).unwrap(), d("3/4"));
        assert_eq!(d("9/16").round_at(2).unwrap(), d("1/2"));
    }

    #[test]
    fn fixed_width_overflow_is_reported() {
        let big = Dyadic::<i64>::new(i64::MAX / 2, 0);
        assert_eq!(big.add(&big).and_then(|x| x.add(&big)), Err(Error::Overflow));
        assert_eq!(big.mul(&big), Err(Error::Overflow));
        // comparison still works past the carrier's range
        let tiny = Dyadic::<i64>::new(1, 62);
        assert!(tiny < big);
    }

    #[test]
    fn carriers_convert() {
        let x: Dyadic<BigInt> = d("-3/8").convert().unwrap();
        assert_eq!(x.to_string(), "-3/2^3");
        let back: Dyadic<i128> = x.convert().unwrap();
        assert_eq!(back.to_string(), "-3/2^3");
    }
}
