mod common;

use std::collections::BTreeMap;
use std::sync::Arc;

use cantorkit::dsl::{compile_functional, parse, Def};
use cantorkit::fan::{ps_fan, xi};
use cantorkit::pointwise::{build_associate, delta_mpc, eval_associate_at};
use cantorkit::real::{apply, riemann_sum, uniform_partition, ExactReal, Interval, RealFunction};
use cantorkit::{eval_seq, fan_modulus, psi_sup, query_bound, sup_cantor, theta_uco, BinWord, BoundedDomain, Budget, FanConfig, Functional2, Point, SeqFunctional};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};
use proptest::prelude::*;

fn functional(def: &Def) -> Functional2 {
    compile_functional(def).unwrap()
}

fn values(phi: &Functional2, m: usize) -> Vec<u64> {
    let b = Budget::unlimited();
    (0..1u64 << m)
        .map(|i| phi.eval(&Point::pad(&BinWord::from_index(i, m)), &b).unwrap())
        .collect()
}

/// Least `y` such that words of length `m` agreeing below `y` share a value.
fn least_modulus(vals: &[u64], m: usize) -> u64 {
    (0..=m)
        .find(|&y| {
            let mut seen = BTreeMap::new();
            vals.iter()
                .enumerate()
                .all(|(i, v)| *seen.entry(i >> (m - y)).or_insert(*v) == *v)
        })
        .unwrap() as u64
}

fn word(bits: &[bool]) -> BinWord {
    BinWord::from_bits(bits.iter().map(|&b| b as u8)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn traces_are_deterministic_and_sound(def in common::functional_def(), bits in prop::collection::vec(any::<bool>(), 0..12), noise in any::<u64>()) {
        let phi = functional(&def);
        let b = Budget::unlimited();
        let f = Point::pad(&word(&bits));
        let t1 = phi.eval_traced(&f, &b).unwrap();
        let t2 = phi.eval_traced(&f, &b).unwrap();
        prop_assert_eq!(&t1, &t2);
        // g agrees with f on the queried indices and is arbitrary elsewhere.
        let queried = t1.queried_indices.clone();
        let f2 = f.clone();
        let g = Point::from_fn(move |i| if queried.contains(&i) { f2.value(i) } else { (noise >> (i % 64)) & 1 });
        prop_assert_eq!(phi.eval(&g, &b).unwrap(), t1.value);
    }

    #[test]
    fn budget_monotonicity(def in common::functional_def(), limit in 1u64..200) {
        let phi = functional(&def);
        let f = Point::zeros();
        if let Ok(v) = phi.eval(&f, &Budget::new(limit, u64::MAX)) {
            prop_assert_eq!(phi.eval(&f, &Budget::new(limit * 4, u64::MAX)).unwrap(), v);
        }
    }

    #[test]
    fn xi_is_the_least_modulus(def in common::functional_def(), m in 1usize..9) {
        let phi = functional(&def);
        let b = Budget::unlimited();
        let x = xi(&phi, m, &b).unwrap().unwrap();
        prop_assert_eq!(x, least_modulus(&values(&phi, m), m));
        // ... and never exceeds what the evaluations looked at.
        let bound = (0..1u64 << m)
            .map(|i| query_bound(&phi, &Point::pad(&BinWord::from_index(i, m)), &b).unwrap())
            .max()
            .unwrap();
        prop_assert!(x <= bound);
    }

    #[test]
    fn certified_moduli_hold_at_twice_the_depth(def in common::functional_def()) {
        let phi = functional(&def);
        let b = Budget::unlimited();
        let r = fan_modulus(&phi, FanConfig { m0: 3, max_depth: 16 }, &b).unwrap();
        if r.certified {
            let d = 2 * r.stabilized_at as usize;
            prop_assert_eq!(least_modulus(&values(&phi, d), d), r.modulus);
            prop_assert_eq!(xi(&phi, r.stabilized_at as usize, &b).unwrap(), Some(r.modulus));
        }
    }

    #[test]
    fn ps_is_a_modulus_above_xi(def in common::functional_def(), m in 1usize..9) {
        let phi = functional(&def);
        let b = Budget::unlimited();
        let ps = ps_fan(&phi, m, &b).unwrap();
        let x = xi(&phi, m, &b).unwrap().unwrap();
        prop_assert!(ps >= x);
        prop_assert!(least_modulus(&values(&phi, m), m) <= ps.min(m as u64));
        // Queries stay below 8, so ps settles by depth 8.
        if m == 8 {
            prop_assert_eq!(ps_fan(&phi, 16, &b).unwrap(), ps);
        }
    }

    #[test]
    fn sup_agrees_with_psi(def in common::functional_def()) {
        let phi = functional(&def);
        let b = Budget::unlimited();
        let cfg = FanConfig { m0: 4, max_depth: 16 };
        let r = fan_modulus(&phi, cfg, &b).unwrap();
        prop_assume!(r.certified);
        let s = sup_cantor(&phi, cfg, &b).unwrap();
        prop_assert_eq!(s.value, values(&phi, 8).into_iter().max().unwrap());
        for m in [r.stabilized_at as usize, r.stabilized_at as usize + 2] {
            let (v, w) = psi_sup(&phi, m, &b).unwrap();
            prop_assert_eq!(v, s.value);
            prop_assert_eq!(phi.eval(&Point::pad(&w), &b).unwrap(), v);
        }
    }

    #[test]
    fn delta_is_sound_least_and_below_the_query_bound(def in common::functional_def(), i in 0u64..64) {
        let phi = functional(&def);
        let b = Budget::unlimited();
        let m = 6;
        let w = BinWord::from_index(i, m);
        let f = Point::pad(&w);
        let d = delta_mpc(&phi, &f, m, &b).unwrap().unwrap();
        prop_assert!(d <= m as u64);
        prop_assert!(d <= query_bound(&phi, &f, &b).unwrap());
        let target = phi.eval(&f, &b).unwrap();
        let vals = values(&phi, m);
        let agrees = |n: u64| vals.iter().enumerate().all(|(j, v)| (j as u64 >> (m as u64 - n)) != (i >> (m as u64 - n)) || *v == target);
        prop_assert!(agrees(d));
        prop_assert!(d == 0 || !agrees(d - 1));
    }

    #[test]
    fn associates_hit_consistently(def in common::functional_def()) {
        let phi = functional(&def);
        let b = Budget::unlimited();
        let m = 8;
        let alpha = build_associate(&phi, m);
        for (i, v) in values(&phi, m).into_iter().enumerate() {
            let w = BinWord::from_index(i as u64, m);
            let (got, n) = eval_associate_at(&alpha, &Point::pad(&w), &b).unwrap();
            prop_assert_eq!(got, v);
            for len in n as usize..=m {
                let entry = alpha.lookup(&w.truncate(len), &b).unwrap();
                prop_assert_eq!(entry, v + 1);
            }
        }
    }

    #[test]
    fn theta_matches_brute_force_and_grows_with_k(def in common::functional_def(), head in prop::collection::vec(0u64..3, 0..3)) {
        // Λ(z)(i) = φ(z shifted by i).
        let phi = functional(&def);
        let lambda = SeqFunctional::from_fn("shifted", move |o, i| phi.apply(&mut ShiftOracle { inner: o, by: i }));
        let y = BoundedDomain::new(head, 1);
        let b = Budget::unlimited();
        let m = 5;
        let grid = y.grid(m, &b).unwrap();
        let mut last = 0;
        for k in 1..=3 {
            let t = theta_uco(&lambda, &y, k, m, &b).unwrap().unwrap();
            prop_assert!(t >= last);
            last = t;
            let outs: Vec<Vec<u64>> = grid.iter().map(|z| eval_seq(&lambda, &Point::pad_naturals(z), k, &b).unwrap()).collect();
            let brute = (0..=m)
                .find(|&n| {
                    let mut seen = BTreeMap::new();
                    grid.iter().zip(&outs).all(|(z, o)| seen.entry(z.truncate(n)).or_insert(o) == &o)
                })
                .unwrap() as u64;
            prop_assert_eq!(t, brute);
        }
    }
}

struct ShiftOracle<'a> {
    inner: &'a mut dyn cantorkit::Oracle,
    by: u64,
}

impl cantorkit::Oracle for ShiftOracle<'_> {
    fn query(&mut self, index: u64) -> cantorkit::Result<u64> {
        self.inner.query(index + self.by)
    }

    fn tick(&mut self) -> cantorkit::Result<()> {
        self.inner.tick()
    }
}

fn rational(x: &cantorkit::real::Dyadic<BigInt>) -> BigRational {
    BigRational::new(x.numerator().clone(), BigInt::one() << x.exponent())
}

fn real(src: &str) -> Arc<dyn RealFunction<BigInt>> {
    let p = parse(src).unwrap();
    Arc::new(p.real(&p.defs[0].name).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn applied_reals_are_fast_cauchy(a in 0i64..=64, n in 0u32..20, i in 1u32..=10) {
        let x = ExactReal::<BigInt>::from_ratio(a.into(), 64i64.into()).unwrap();
        let third = ExactReal::<BigInt>::from_ratio(a.into(), 67i64.into()).unwrap();
        for f in [real("func F(x) = x * x * x - 1/3 * x"), real("func G(x) = 3 * x + 1/7")] {
            for point in [&x, &third] {
                let y = apply(f.clone(), point.clone());
                let d = rational(&y.approx(n)) - rational(&y.approx(n + i));
                prop_assert!(d.abs() <= BigRational::new(BigInt::one(), BigInt::one() << n));
            }
        }
    }

    #[test]
    fn interval_products_enclose_point_products(a in -64i64..64, b in -64i64..64, c in -64i64..64, d in -64i64..64) {
        let dy = |v: i64| cantorkit::real::Dyadic::<BigInt>::new(v.into(), 4);
        let (lo1, hi1) = (a.min(b), a.max(b));
        let (lo2, hi2) = (c.min(d), c.max(d));
        let i1 = Interval::new(dy(lo1), dy(hi1));
        let i2 = Interval::new(dy(lo2), dy(hi2));
        let p = i1.mul(&i2).unwrap();
        for x in [lo1, hi1, (lo1 + hi1) / 2] {
            for y in [lo2, hi2, (lo2 + hi2) / 2] {
                let prod = cantorkit::real::Dyadic::<BigInt>::new((x * y).into(), 8);
                prop_assert!(p.contains(&prod));
            }
        }
    }
}

#[test]
fn partitions_finer_than_the_modulus_agree() {
    let b = Budget::unlimited();
    for src in ["func F(x) = x * x", "func F(x) = x * (1 - x) + 1/3", "func F(x) = max(x, 1/2)"] {
        let f = real(src);
        let k = 8;
        let m = cantorkit::real::uc_modulus_dyadic(f.clone(), k + 1, Default::default(), &b).unwrap();
        let sums: Vec<BigRational> = [m.depth, m.depth + 1, m.depth + 3]
            .iter()
            .map(|&d| rational(&riemann_sum(&*f, &uniform_partition(1 << d).unwrap(), k + 3).unwrap()))
            .collect();
        for s in &sums[1..] {
            assert!((s - &sums[0]).abs() <= BigRational::new(BigInt::one(), BigInt::one() << k), "{src}");
        }
    }
}
