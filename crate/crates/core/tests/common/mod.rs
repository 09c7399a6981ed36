//! Generated DSL expressions for property tests.
//!
//! Strategies build a scope-free [`Raw`] tree; [`close`] turns it into a
//! well-formed [`Expr`] by resolving variable references against whatever
//! is bound at that point.
#![allow(dead_code)]

use cantorkit::dsl::{BinOp, Builtin, CmpOp, Cond, Def, Expr};
use proptest::prelude::*;

#[derive(Debug, Clone)]
pub enum Raw {
    Nat(u64),
    Var(usize),
    Apply(Box<Raw>),
    Call(bool, Box<Raw>, Box<Raw>),
    Bin(u8, Box<Raw>, Box<Raw>),
    DivLit(bool, Box<Raw>, u64),
    If(u8, Box<Raw>, Box<Raw>, Box<Raw>, Box<Raw>),
    Mu(u64, u8, Box<Raw>, Box<Raw>),
}

pub fn raw(max_literal: u64, max_bound: u64, depth: u32) -> impl Strategy<Value = Raw> {
    let leaf = prop_oneof![(0..=max_literal).prop_map(Raw::Nat), (0usize..4).prop_map(Raw::Var)];
    leaf.prop_recursive(depth, 48, 4, move |inner| {
        let b = || inner.clone().prop_map(Box::new);
        prop_oneof![
            b().prop_map(Raw::Apply),
            (any::<bool>(), b(), b()).prop_map(|(m, x, y)| Raw::Call(m, x, y)),
            (0u8..3, b(), b()).prop_map(|(o, x, y)| Raw::Bin(o, x, y)),
            (any::<bool>(), b(), 1..=9u64).prop_map(|(m, x, q)| Raw::DivLit(m, x, q)),
            (0u8..6, b(), b(), b(), b()).prop_map(|(c, l, r, t, e)| Raw::If(c, l, r, t, e)),
            (0..=max_bound, 0u8..6, b(), b()).prop_map(|(n, c, l, r)| Raw::Mu(n, c, l, r)),
        ]
    })
}

const CMPS: [CmpOp; 6] = [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge];
const OPS: [BinOp; 3] = [BinOp::Add, BinOp::Sub, BinOp::Mul];

pub struct Closer<'a> {
    pub oracle: &'a str,
    pub params: &'a [&'a str],
    /// Wrap oracle arguments as `(e) % n` to keep query indices small.
    pub index_mod: Option<u64>,
}

impl Closer<'_> {
    pub fn close(&self, raw: &Raw) -> Expr {
        self.go(raw, &mut Vec::new())
    }

    fn go(&self, raw: &Raw, scope: &mut Vec<String>) -> Expr {
        let b = |e: Expr| Box::new(e);
        match raw {
            Raw::Nat(n) => Expr::Nat(*n),
            Raw::Var(i) => {
                let names: Vec<&str> = self.params.iter().copied().chain(scope.iter().map(String::as_str)).collect();
                if names.is_empty() {
                    Expr::Nat(*i as u64)
                } else {
                    Expr::Var(names[i % names.len()].to_string())
                }
            }
            Raw::Apply(x) => {
                let arg = self.go(x, scope);
                let arg = match self.index_mod {
                    Some(m) => Expr::Bin(BinOp::Mod, b(arg), b(Expr::Nat(m))),
                    None => arg,
                };
                Expr::Apply(self.oracle.to_string(), b(arg))
            }
            Raw::Call(max, x, y) => Expr::Call(
                if *max { Builtin::Max } else { Builtin::Min },
                b(self.go(x, scope)),
                b(self.go(y, scope)),
            ),
            Raw::Bin(o, x, y) => Expr::Bin(OPS[*o as usize], b(self.go(x, scope)), b(self.go(y, scope))),
            Raw::DivLit(m, x, q) => Expr::Bin(
                if *m { BinOp::Mod } else { BinOp::Div },
                b(self.go(x, scope)),
                b(Expr::Nat(*q)),
            ),
            Raw::If(c, l, r, t, e) => Expr::If(
                Cond {
                    lhs: b(self.go(l, scope)),
                    op: CMPS[*c as usize],
                    rhs: b(self.go(r, scope)),
                },
                b(self.go(t, scope)),
                b(self.go(e, scope)),
            ),
            Raw::Mu(n, c, l, r) => {
                let var = format!("v{}", scope.len());
                scope.push(var.clone());
                let cond = Cond {
                    lhs: b(self.go(l, scope)),
                    op: CMPS[*c as usize],
                    rhs: b(self.go(r, scope)),
                };
                scope.pop();
                Expr::Mu(var, *n, cond)
            }
        }
    }
}

/// A program definition `func g(f, a, b) = ...` with arbitrary literals.
pub fn program_def() -> impl Strategy<Value = Def> {
    raw(u64::MAX, 1000, 5).prop_map(|r| {
        let params = ["a", "b"];
        let body = Closer {
            oracle: "f",
            params: &params,
            index_mod: None,
        }
        .close(&r);
        Def {
            name: "g".into(),
            params: vec!["f".into(), "a".into(), "b".into()],
            body,
        }
    })
}

/// A small functional `func phi(f) = ...`: literals up to 6, μ-bounds up to
/// 3 and queries below 8, so evaluations stay cheap and moduli at most 8.
pub fn functional_def() -> impl Strategy<Value = Def> {
    raw(6, 3, 3).prop_map(|r| {
        let body = Closer {
            oracle: "f",
            params: &[],
            index_mod: Some(8),
        }
        .close(&r);
        Def {
            name: "phi".into(),
            params: vec!["f".into()],
            body,
        }
    })
}
