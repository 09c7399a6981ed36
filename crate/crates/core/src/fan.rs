//! The fan functional on Cantor space.
//!
//! [`xi`] is the depth-`M` approximation: the least `y` such that words of
//! length `M` agreeing on their first `y` bits get equal values. It is
//! elementary but its correctness as a modulus depends on `M` being large
//! enough, so [`fan_modulus`] doubles `M` until two successive values agree.
//! [`exact_modulus`] instead walks the tree of prefixes using query traces
//! and terminates with the true least modulus when every branch becomes
//! locally constant before the depth cap.

use rayon::prelude::*;
use serde::Serialize;

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::functional::Functional2;
use crate::seq::{least_agreement_depth, word_count, BinWord, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FanConfig {
    /// First approximation depth.
    pub m0: usize,
    /// Deepest approximation ever evaluated.
    pub max_depth: usize,
}

impl Default for FanConfig {
    fn default() -> Self {
        Self {
            m0: 5,
            max_depth: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FanResult {
    pub modulus: u64,
    pub stabilized_at: u64,
    pub certified: bool,
}

/// Values of `phi` on every padded word of length `m`, in lexicographic order.
pub(crate) fn values_at_depth(phi: &Functional2, m: usize, budget: &Budget) -> Result<Vec<u64>> {
    budget.charge_pow2(m)?;
    let count = word_count(m).expect("charged above, so it fits");
    (0..count)
        .into_par_iter()
        .map(|i| phi.eval(&Point::pad(&BinWord::from_index(i, m)), budget))
        .collect()
}

/// `Ξ(φ, M)`. On Cantor space `y = M` always qualifies, so this is `None`
/// only in the sense of the signature; errors are the real failure mode.
pub fn xi(phi: &Functional2, m: usize, budget: &Budget) -> Result<Option<u64>> {
    let values = values_at_depth(phi, m, budget)?;
    Ok(Some(least_agreement_depth(&values, &vec![2; m]) as u64))
}

/// Doubles the depth from `m0` until `xi(M) = xi(2M)`.
///
/// Running out of depth or work leaves the last value uncertified rather than
/// failing; only a failure at the very first depth is an error.
pub fn fan_modulus(phi: &Functional2, config: FanConfig, budget: &Budget) -> Result<FanResult> {
    if config.m0 == 0 {
        return Err(Error::InvalidArgument("m0 must be at least 1".into()));
    }
    let mut m = config.m0.min(config.max_depth.max(1));
    let mut current = xi(phi, m, budget)?.expect("xi is defined on Cantor space");
    loop {
        let uncertified = FanResult {
            modulus: current,
            stabilized_at: m as u64,
            certified: false,
        };
        let next_depth = 2 * m;
        if next_depth > config.max_depth {
            return Ok(uncertified);
        }
        let next = match xi(phi, next_depth, budget) {
            Ok(v) => v.expect("xi is defined on Cantor space"),
            Err(Error::WorkBudget { .. }) => return Ok(uncertified),
            Err(e) => return Err(e),
        };
        if next == current {
            return Ok(FanResult {
                certified: true,
                ..uncertified
            });
        }
        m = next_depth;
        current = next;
    }
}

enum Node {
    Constant(u64),
    /// Not constant; every cylinder this many levels further down is.
    Varies(u64),
}

impl Node {
    fn height(&self) -> u64 {
        match self {
            Node::Constant(_) => 0,
            Node::Varies(h) => *h,
        }
    }
}

// Below this depth the two subtrees are explored in parallel.
const PARALLEL_DEPTH: usize = 8;

fn explore(phi: &Functional2, s: &BinWord, cap: usize, budget: &Budget) -> Result<Option<Node>> {
    budget.charge(1)?;
    let (value, local) = phi.eval_on_word(s, budget)?;
    if local {
        return Ok(Some(Node::Constant(value)));
    }
    if s.len() >= cap {
        return Ok(None);
    }
    let (l, r) = if s.len() < PARALLEL_DEPTH {
        rayon::join(
            || explore(phi, &s.child(0), cap, budget),
            || explore(phi, &s.child(1), cap, budget),
        )
    } else {
        (
            explore(phi, &s.child(0), cap, budget),
            explore(phi, &s.child(1), cap, budget),
        )
    };
    let (Some(l), Some(r)) = (l?, r?) else {
        return Ok(None);
    };
    Ok(Some(match (&l, &r) {
        (Node::Constant(a), Node::Constant(b)) if a == b => Node::Constant(*a),
        _ => Node::Varies(1 + l.height().max(r.height())),
    }))
}

/// The least uniform modulus over all of Cantor space, found by splitting
/// every prefix whose padded evaluation looks past its own length. `None`
/// when some branch is still undecided at depth `cap`.
pub fn exact_modulus(phi: &Functional2, cap: usize, budget: &Budget) -> Result<Option<u64>> {
    Ok(explore(phi, &BinWord::new(), cap, budget)?.map(|n| n.height()))
}

/// `𝕡𝕙(s, φ, m, M)` as the word it pads: a length-`M` extension of `s` with
/// `φ ≠ m` when one exists, searching 0 before 1.
pub fn ph_word(s: &BinWord, phi: &Functional2, m: u64, depth: usize, budget: &Budget) -> Result<BinWord> {
    if s.len() >= depth {
        return Ok(s.clone());
    }
    let (value, local) = phi.eval_on_word(s, budget)?;
    if local {
        // Constant neighbourhood: the recursion would run straight down one
        // side, so jump to where it ends.
        let fill = u8::from(value == m);
        let mut out = s.clone();
        while out.len() < depth {
            out.push(fill);
        }
        return Ok(out);
    }
    let left = ph_word(&s.child(0), phi, m, depth, budget)?;
    if phi.eval(&Point::pad(&left), budget)? != m {
        Ok(left)
    } else {
        ph_word(&s.child(1), phi, m, depth, budget)
    }
}

pub fn ph(s: &BinWord, phi: &Functional2, m: u64, depth: usize, budget: &Budget) -> Result<Point> {
    Ok(Point::pad(&ph_word(s, phi, m, depth, budget)?))
}

/// `𝕡𝕤(s, φ, M)`
pub fn ps(s: &BinWord, phi: &Functional2, depth: usize, budget: &Budget) -> Result<u64> {
    if s.len() >= depth {
        return Ok(0);
    }
    let (here, local) = phi.eval_on_word(s, budget)?;
    if local {
        return Ok(0);
    }
    let alpha = ph(s, phi, here, depth, budget)?;
    if phi.eval(&alpha, budget)? == here {
        return Ok(0);
    }
    let l = ps(&s.child(0), phi, depth, budget)?;
    let r = ps(&s.child(1), phi, depth, budget)?;
    Ok(1 + l.max(r))
}

pub fn ps_fan(phi: &Functional2, depth: usize, budget: &Budget) -> Result<u64> {
    ps(&BinWord::new(), phi, depth, budget)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::Oracle;

    fn w(s: &str) -> BinWord {
        s.parse().unwrap()
    }

    fn at(i: u64) -> Functional2 {
        Functional2::new(format!("f({i})"), move |o| o.query(i))
    }

    fn bin8() -> Functional2 {
        Functional2::new("bin8", |o: &mut dyn Oracle| {
            (0..8).try_fold(0, |acc, i| Ok(acc + (o.query(i)? << i)))
        })
    }

    // The recursion exactly as displayed, without the neighbourhood shortcut.
    fn ph_naive(s: &BinWord, phi: &Functional2, m: u64, depth: usize) -> BinWord {
        if s.len() >= depth {
            return s.clone();
        }
        let left = ph_naive(&s.child(0), phi, m, depth);
        let b = Budget::default();
        if phi.eval(&Point::pad(&left), &b).unwrap() != m {
            left
        } else {
            ph_naive(&s.child(1), phi, m, depth)
        }
    }

    fn ps_naive(s: &BinWord, phi: &Functional2, depth: usize) -> u64 {
        if s.len() >= depth {
            return 0;
        }
        let b = Budget::default();
        let here = phi.eval(&Point::pad(s), &b).unwrap();
        let alpha = Point::pad(&ph_naive(s, phi, here, depth));
        if phi.eval(&alpha, &b).unwrap() == here {
            0
        } else {
            1 + ps_naive(&s.child(0), phi, depth).max(ps_naive(&s.child(1), phi, depth))
        }
    }

    #[test]
    fn xi_examples() {
        let b = Budget::default();
        assert_eq!(xi(&Functional2::constant("c", 3), 4, &b).unwrap(), Some(0));
        assert_eq!(xi(&at(3), 6, &b).unwrap(), Some(4));
        let sum = Functional2::new("sum", |o| Ok(o.query(0)? + o.query(1)?));
        assert_eq!(xi(&sum, 5, &b).unwrap(), Some(2));
    }

    #[test]
    fn fan_modulus_examples() {
        let b = Budget::default();
        let cfg = FanConfig { m0: 2, max_depth: 64 };
        let r = fan_modulus(&Functional2::constant("c", 1), cfg, &b).unwrap();
        assert_eq!((r.modulus, r.certified), (0, true));
        let r = fan_modulus(&at(3), cfg, &b).unwrap();
        assert_eq!(r, FanResult { modulus: 4, stabilized_at: 4, certified: true });
        let r = fan_modulus(&bin8(), cfg, &b).unwrap();
        assert_eq!((r.modulus, r.certified), (8, true));
    }

    #[test]
    fn fan_modulus_gives_up_at_the_cap() {
        let b = Budget::default();
        let r = fan_modulus(&at(12), FanConfig { m0: 7, max_depth: 12 }, &b).unwrap();
        assert!(!r.certified);
        let tight = Budget::new(1000, 100);
        let r = fan_modulus(&at(3), FanConfig { m0: 4, max_depth: 20 }, &tight).unwrap();
        assert!(!r.certified);
    }

    #[test]
    fn exact_modulus_matches_xi() {
        let b = Budget::default();
        assert_eq!(exact_modulus(&bin8(), 20, &b).unwrap(), Some(8));
        // queries index 1 but never depends on it
        let lazy = Functional2::new("lazy", |o| Ok(o.query(0)? + o.query(1)? * 0));
        assert_eq!(exact_modulus(&lazy, 20, &b).unwrap(), Some(1));
        assert_eq!(exact_modulus(&at(30), 20, &b).unwrap(), None);
    }

    #[test]
    fn ph_examples() {
        let b = Budget::default();
        let c = Functional2::constant("c", 2);
        assert_eq!(ph_word(&w("10"), &c, 0, 2, &b).unwrap(), w("10"));
        assert_eq!(ph_word(&w(""), &c, 2, 3, &b).unwrap(), w("111"));
        assert_eq!(ph_word(&w(""), &c, 5, 3, &b).unwrap(), w("000"));
        for phi in [at(0), at(2), bin8()] {
            for m in 0..3 {
                for s in ["", "0", "1", "01"] {
                    assert_eq!(
                        ph_word(&w(s), &phi, m, 5, &b).unwrap(),
                        ph_naive(&w(s), &phi, m, 5),
                        "{} m={m} s={s}",
                        phi.name()
                    );
                }
            }
        }
    }

    #[test]
    fn ps_examples() {
        let b = Budget::default();
        assert_eq!(ps(&w("101"), &at(0), 3, &b).unwrap(), 0);
        assert_eq!(ps_fan(&Functional2::constant("c", 4), 6, &b).unwrap(), 0);
        assert_eq!(ps_fan(&at(0), 4, &b).unwrap(), 1);
        for phi in [at(3), bin8()] {
            for depth in [2, 4, 7] {
                assert_eq!(ps_fan(&phi, depth, &b).unwrap(), ps_naive(&BinWord::new(), &phi, depth));
            }
        }
    }
}
