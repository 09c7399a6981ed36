//! Moduli for sequence functionals on bounded domains `{z : z <= y}`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::functional::{eval_seq, Functional2Family, OracleProgram, PointOracle, SeqFunctional};
use crate::seq::{enumerate_grid, grid_size, least_agreement_depth, NatWord, Point};

/// An eventually constant bound sequence `y = head * tail tail ...`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BoundedDomain {
    pub head: Vec<u64>,
    pub tail: u64,
}

impl BoundedDomain {
    pub fn new(head: Vec<u64>, tail: u64) -> Self {
        Self { head, tail }
    }

    /// `y ≡ c`
    pub fn constant(c: u64) -> Self {
        Self::new(Vec::new(), c)
    }

    pub fn bound(&self, i: usize) -> u64 {
        self.head.get(i).copied().unwrap_or(self.tail)
    }

    pub fn contains(&self, z: &NatWord) -> bool {
        z.0.iter().enumerate().all(|(i, &v)| v <= self.bound(i))
    }

    /// `y(i) + 1` for `i < m`.
    pub fn radices(&self, m: usize) -> Result<Vec<u64>> {
        (0..m)
            .map(|i| self.bound(i).checked_add(1).ok_or(Error::Overflow))
            .collect()
    }

    /// All words of length `m` below `y`, lexicographically, charged to the
    /// budget up front.
    pub fn grid(&self, m: usize, budget: &Budget) -> Result<Vec<NatWord>> {
        let radices = self.radices(m)?;
        let size = grid_size(&radices).ok_or(Error::WorkBudget {
            needed: u64::MAX,
            remaining: budget.remaining(),
        })?;
        budget.charge(size)?;
        Ok(enumerate_grid(&radices).collect())
    }
}

impl fmt::Display for BoundedDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let multi = self.head.iter().any(|&v| v > 9);
        let parts: Vec<String> = self.head.iter().map(u64::to_string).collect();
        if !multi {
            return write!(f, "{}@{}", parts.concat(), self.tail);
        }
        // A lone multi-digit entry keeps a trailing comma so it reads back.
        let trail = if parts.len() == 1 { "," } else { "" };
        write!(f, "{}{trail}@{}", parts.join(","), self.tail)
    }
}

impl FromStr for BoundedDomain {
    type Err = Error;

    /// `w@c`: `w` is a digit string (`21`) or comma separated (`2,10`).
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("`{s}` is not a bound of the form w@c"));
        let (head, tail) = s.trim().split_once('@').ok_or_else(bad)?;
        let tail = tail.trim().parse().map_err(|_| bad())?;
        let head = if head.contains(',') {
            head.split(',')
                .filter(|p| !p.trim().is_empty())
                .map(|p| p.trim().parse().map_err(|_| bad()))
                .collect::<Result<_>>()?
        } else {
            head.chars()
                .map(|c| c.to_digit(10).map(u64::from).ok_or_else(bad))
                .collect::<Result<_>>()?
        };
        Ok(Self { head, tail })
    }
}

type DomainFn = dyn Fn(u64) -> BoundedDomain + Send + Sync;

/// `k ↦ y(k)`
#[derive(Clone)]
pub struct DomainFamily(Arc<DomainFn>);

impl DomainFamily {
    pub fn new(f: impl Fn(u64) -> BoundedDomain + Send + Sync + 'static) -> Self {
        Self(Arc::new(f))
    }

    pub fn constant(y: BoundedDomain) -> Self {
        Self::new(move |_| y.clone())
    }

    pub fn at(&self, k: u64) -> BoundedDomain {
        (self.0)(k)
    }
}

impl fmt::Debug for DomainFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DomainFamily(y(0) = {})", self.at(0))
    }
}

/// `Θ(Λ, y, M)` at output length `k`: least `N <= M` such that words of
/// length `M` below `y` that agree up to `N` have equal `Λ(z)̄k`.
pub fn theta_uco(
    lambda: &SeqFunctional,
    y: &BoundedDomain,
    k: u64,
    m: usize,
    budget: &Budget,
) -> Result<Option<u64>> {
    let grid = y.grid(m, budget)?;
    let outputs: Vec<Vec<u64>> = grid
        .par_iter()
        .map(|z| eval_seq(lambda, &Point::pad_naturals(z), k, budget))
        .collect::<Result<_>>()?;
    Ok(Some(least_agreement_depth(&outputs, &y.radices(m)?) as u64))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Argmax {
    pub value: u64,
    pub witness: NatWord,
    /// The modulus the witness length comes from.
    pub modulus: u64,
}

/// Maximum of `Φ(k)` below `y(k)`, with the left-most maximiser among words
/// of modulus length.
pub fn uf_argmax(
    family: &Functional2Family,
    y: &DomainFamily,
    k: u64,
    m: usize,
    budget: &Budget,
) -> Result<Argmax> {
    let phi = family.at(k);
    let yk = y.at(k);
    let modulus = theta_uco(&SeqFunctional::repeat(phi.clone()), &yk, 1, m, budget)?
        .ok_or(Error::NoModulus { depth: m as u64 })?;
    let grid = yk.grid(modulus as usize, budget)?;
    let values: Vec<u64> = grid
        .par_iter()
        .map(|z| phi.eval(&Point::pad_naturals(z), budget))
        .collect::<Result<_>>()?;
    let (best, value) = values
        .iter()
        .enumerate()
        .fold((0, 0), |(bi, bv), (i, &v)| if i == 0 || v > bv { (i, v) } else { (bi, bv) });
    Ok(Argmax {
        value,
        witness: grid[best].clone(),
        modulus,
    })
}

/// Least `b` such that every depth-`cap` point `x` below `y(k)` has some
/// `z <= b` with `H(x, z, k) = 0`; `None` when some point has no `z <= cap`.
pub fn usb_bound(
    h: &OracleProgram,
    y: &DomainFamily,
    k: u64,
    cap: usize,
    budget: &Budget,
) -> Result<Option<u64>> {
    if h.arity() != 2 {
        return Err(Error::Shape {
            name: h.name().to_string(),
            expected: "a bounded predicate",
            reason: "takes a point, a witness and an index".into(),
        });
    }
    let grid = y.at(k).grid(cap, budget)?;
    let witnesses: Vec<Option<u64>> = grid
        .par_iter()
        .map(|x| {
            let point = Point::pad_naturals(x);
            for z in 0..=cap as u64 {
                let mut o = PointOracle::new(&point, budget.step_limit(), false);
                if h.apply(&mut o, &[z, k])? == 0 {
                    return Ok(Some(z));
                }
            }
            Ok(None)
        })
        .collect::<Result<_>>()?;
    Ok(witnesses
        .into_iter()
        .try_fold(0, |acc, w| w.map(|z| acc.max(z))))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(name: &str, body: impl Fn(&mut dyn crate::functional::Oracle, u64) -> Result<u64> + Send + Sync + 'static) -> SeqFunctional {
        SeqFunctional::from_fn(name, body)
    }

    #[test]
    fn domain_syntax() {
        let y: BoundedDomain = "21@1".parse().unwrap();
        assert_eq!((y.bound(0), y.bound(1), y.bound(5)), (2, 1, 1));
        assert_eq!(y.to_string(), "21@1");
        let z: BoundedDomain = "2,10@0".parse().unwrap();
        assert_eq!(z.head, vec![2, 10]);
        assert_eq!(z.to_string().parse::<BoundedDomain>().unwrap(), z);
        assert!("21".parse::<BoundedDomain>().is_err());
        let lone = BoundedDomain::new(vec![12], 3);
        assert_eq!(lone.to_string().parse::<BoundedDomain>().unwrap(), lone);
        assert!(y.contains(&NatWord(vec![2, 0, 1])) && !y.contains(&NatWord(vec![0, 2])));
    }

    #[test]
    fn theta_examples() {
        let b = Budget::default();
        let one = BoundedDomain::constant(1);
        let c = seq("c", |o, _| {
            o.tick()?;
            Ok(4)
        });
        assert_eq!(theta_uco(&c, &one, 3, 4, &b).unwrap(), Some(0));
        let id = seq("id", |o, i| o.query(i));
        assert_eq!(theta_uco(&id, &one, 2, 4, &b).unwrap(), Some(2));
        let even = seq("even", |o, i| o.query(2 * i));
        assert_eq!(theta_uco(&even, &one, 2, 6, &b).unwrap(), Some(3));
    }

    #[test]
    fn argmax_examples() {
        let b = Budget::default();
        let fam = |name: &str, body: fn(&mut dyn crate::functional::Oracle) -> Result<u64>| {
            Functional2Family::new(OracleProgram::new(name, 1, move |o, _| body(o)))
        };
        let five = fam("five", |o| {
            o.tick()?;
            Ok(5)
        });
        let ones = DomainFamily::constant(BoundedDomain::constant(1));
        let r = uf_argmax(&five, &ones, 0, 4, &b).unwrap();
        assert_eq!((r.value, r.witness), (5, NatWord(vec![])));
        let first = fam("first", |o| o.query(0));
        let r = uf_argmax(&first, &ones, 0, 4, &b).unwrap();
        assert_eq!((r.value, r.witness), (1, NatWord(vec![1])));
        let sum = fam("sum", |o| Ok(o.query(0)? + o.query(1)?));
        let y = DomainFamily::constant("21@0".parse().unwrap());
        let r = uf_argmax(&sum, &y, 0, 4, &b).unwrap();
        assert_eq!((r.value, r.witness), (3, NatWord(vec![2, 1])));
    }

    #[test]
    fn usb_examples() {
        let b = Budget::default();
        let ones = DomainFamily::constant(BoundedDomain::constant(1));
        let pred = |name: &str, body: fn(&mut dyn crate::functional::Oracle, u64) -> Result<u64>| {
            OracleProgram::new(name, 2, move |o, a| body(o, a[0]))
        };
        let zero = pred("zero", |_, _| Ok(0));
        assert_eq!(usb_bound(&zero, &ones, 0, 4, &b).unwrap(), Some(0));
        let first = pred("first", |o, z| Ok(u64::from(z < o.query(0)?)));
        assert_eq!(usb_bound(&first, &ones, 0, 4, &b).unwrap(), Some(1));
        let two = pred("two", |o, z| Ok(u64::from(z < o.query(0)? + o.query(1)?)));
        assert_eq!(usb_bound(&two, &ones, 0, 4, &b).unwrap(), Some(2));
        let never = pred("never", |_, _| Ok(1));
        assert_eq!(usb_bound(&never, &ones, 0, 3, &b).unwrap(), None);
    }
}
