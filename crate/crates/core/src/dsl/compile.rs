//! Lowering of parsed definitions to evaluatable objects.

use std::sync::Arc;


use super::{BinOp, Builtin, CmpOp, Def, DslProgram, Expr};
use crate::error::{Error, Result};
use crate::functional::{Functional2, Oracle, OracleProgram};
use crate::real::{Dyadic, DyadicInt, Interval, RealFunction};

// Variables are resolved to environment slots once, at compile time.
#[derive(Debug, Clone)]
enum Code {
    Nat(u64),
    Slot(usize),
    Query(Box<Code>),
    Call(Builtin, Box<Code>, Box<Code>),
    Bin(BinOp, Box<Code>, Box<Code>),
    If(Box<Test>, Box<Code>, Box<Code>),
    /// Least value of the slot in `0..=bound` passing the test, else `bound + 1`.
    Mu(usize, u64, Box<Test>),
}

#[derive(Debug, Clone)]
struct Test {
    lhs: Code,
    op: CmpOp,
    rhs: Code,
}

struct Scope<'a> {
    def: &'a Def,
    names: Vec<String>,
}

impl Scope<'_> {
    fn shape(&self, expected: &'static str, reason: impl Into<String>) -> Error {
        Error::Shape {
            name: self.def.name.clone(),
            expected,
            reason: reason.into(),
        }
    }

    fn slot(&self, name: &str) -> Option<usize> {
        self.names.iter().rposition(|n| n == name)
    }

    fn lower(&mut self, e: &Expr) -> Result<Code> {
        Ok(match e {
            Expr::Nat(n) => Code::Nat(*n),
            Expr::Var(v) => {
                let slot = self
                    .slot(v)
                    .ok_or_else(|| self.shape("a functional", format!("unbound `{v}`")))?;
                if slot == 0 {
                    return Err(self.shape(
                        "a functional",
                        format!("the oracle `{v}` can only be applied, not used as a number"),
                    ));
                }
                Code::Slot(slot)
            }
            Expr::Apply(f, arg) => {
                if self.slot(f) != Some(0) {
                    return Err(self.shape(
                        "a functional",
                        format!("only the first parameter may be applied, not `{f}`"),
                    ));
                }
                Code::Query(Box::new(self.lower(arg)?))
            }
            Expr::Call(b, x, y) => Code::Call(*b, Box::new(self.lower(x)?), Box::new(self.lower(y)?)),
            Expr::Bin(op, x, y) => Code::Bin(*op, Box::new(self.lower(x)?), Box::new(self.lower(y)?)),
            Expr::If(c, a, b) => Code::If(
                Box::new(self.test(&c.lhs, c.op, &c.rhs)?),
                Box::new(self.lower(a)?),
                Box::new(self.lower(b)?),
            ),
            Expr::Mu(var, bound, c) => {
                self.names.push(var.clone());
                let slot = self.names.len() - 1;
                let test = self.test(&c.lhs, c.op, &c.rhs);
                self.names.pop();
                Code::Mu(slot, *bound, Box::new(test?))
            }
        })
    }

    fn test(&mut self, lhs: &Expr, op: CmpOp, rhs: &Expr) -> Result<Test> {
        Ok(Test {
            lhs: self.lower(lhs)?,
            op,
            rhs: self.lower(rhs)?,
        })
    }
}

fn depth_of(code: &Code) -> usize {
    match code {
        Code::Nat(_) | Code::Slot(_) => 0,
        Code::Query(a) => depth_of(a),
        Code::Call(_, a, b) | Code::Bin(_, a, b) => depth_of(a).max(depth_of(b)),
        Code::If(t, a, b) => test_depth(t).max(depth_of(a)).max(depth_of(b)),
        Code::Mu(slot, _, t) => (*slot + 1).max(test_depth(t)),
    }
}

fn test_depth(t: &Test) -> usize {
    depth_of(&t.lhs).max(depth_of(&t.rhs))
}

fn run(code: &Code, o: &mut dyn Oracle, env: &mut [u64]) -> Result<u64> {
    o.tick()?;
    match code {
        Code::Nat(n) => Ok(*n),
        Code::Slot(s) => Ok(env[*s]),
        Code::Query(arg) => {
            let i = run(arg, o, env)?;
            o.query(i)
        }
        Code::Call(b, x, y) => {
            let (x, y) = (run(x, o, env)?, run(y, o, env)?);
            Ok(match b {
                Builtin::Min => x.min(y),
                Builtin::Max => x.max(y),
            })
        }
        Code::Bin(op, x, y) => {
            let (x, y) = (run(x, o, env)?, run(y, o, env)?);
            match op {
                BinOp::Add => x.checked_add(y).ok_or(Error::Overflow),
                BinOp::Sub => Ok(x.saturating_sub(y)),
                BinOp::Mul => x.checked_mul(y).ok_or(Error::Overflow),
                BinOp::Div => Ok(x / y),
                BinOp::Mod => Ok(x % y),
            }
        }
        Code::If(t, a, b) => {
            if check(t, o, env)? {
                run(a, o, env)
            } else {
                run(b, o, env)
            }
        }
        Code::Mu(slot, bound, t) => {
            let saved = env[*slot];
            let mut found = bound.checked_add(1).ok_or(Error::Overflow)?;
            for n in 0..=*bound {
                env[*slot] = n;
                if check(t, o, env)? {
                    found = n;
                    break;
                }
            }
            env[*slot] = saved;
            Ok(found)
        }
    }
}

fn check(t: &Test, o: &mut dyn Oracle, env: &mut [u64]) -> Result<bool> {
    let l = run(&t.lhs, o, env)?;
    let r = run(&t.rhs, o, env)?;
    Ok(t.op.holds(&l, &r))
}

/// Compiles `func name(f, n1, ..., nk) = body` to a program with one oracle
/// argument `f` and `k` natural arguments.
pub fn compile_program(def: &Def) -> Result<OracleProgram> {
    if def.params.is_empty() {
        return Err(Error::Shape {
            name: def.name.clone(),
            expected: "a functional",
            reason: "needs an oracle parameter".into(),
        });
    }
    let mut scope = Scope {
        def,
        names: def.params.clone(),
    };
    let code = Arc::new(scope.lower(&def.body)?);
    let arity = def.params.len() - 1;
    let env_size = depth_of(&code).max(def.params.len());
    Ok(OracleProgram::new(def.name.as_str(), arity, move |o, args| {
        let mut env = vec![0; env_size];
        env[1..=args.len()].copy_from_slice(args);
        run(&code, o, &mut env)
    }))
}

/// Compiles `func name(f) = body`.
pub fn compile_functional(def: &Def) -> Result<Functional2> {
    let program = compile_program(def)?;
    if program.arity() != 0 {
        return Err(Error::Shape {
            name: def.name.clone(),
            expected: "a functional",
            reason: format!("takes {} extra arguments", program.arity()),
        });
    }
    Ok(program.bind(&[]))
}

/// A real function compiled from the real dialect.
#[derive(Debug, Clone)]
pub struct RealExpr {
    name: String,
    body: Expr,
}

/// Compiles `func name(x) = body` in the real dialect: `x`, literals,
/// `+ - *`, division by a literal, `min` and `max`.
pub fn compile_real(def: &Def) -> Result<RealExpr> {
    let shape = |reason: String| Error::Shape {
        name: def.name.clone(),
        expected: "a real function",
        reason,
    };
    if def.params.len() != 1 {
        return Err(shape(format!("takes {} parameters, not 1", def.params.len())));
    }
    fn validate(e: &Expr, shape: &dyn Fn(String) -> Error) -> Result<()> {
        match e {
            Expr::Nat(_) | Expr::Var(_) => Ok(()),
            Expr::Apply(f, _) => Err(shape(format!("`{f}(...)` is oracle application"))),
            Expr::If(..) => Err(shape("`if` is not available on reals".into())),
            Expr::Mu(..) => Err(shape("`mu` is not available on reals".into())),
            Expr::Bin(BinOp::Mod, ..) => Err(shape("`%` is not available on reals".into())),
            Expr::Bin(_, a, b) | Expr::Call(_, a, b) => {
                validate(a, shape)?;
                validate(b, shape)
            }
        }
    }
    validate(&def.body, &shape)?;
    Ok(RealExpr {
        name: def.name.clone(),
        body: def.body.clone(),
    })
}

impl RealExpr {
    pub fn body(&self) -> &Expr {
        &self.body
    }
}

// Products are rounded outwards to this many bits beyond the requested
// precision, which keeps fixed-width numerators from overflowing.
const GUARD_BITS: u32 = 16;

fn div_literal<I: DyadicInt>(x: &Interval<I>, q: u64, prec: u32) -> Result<Interval<I>> {
    if q.is_power_of_two() {
        let k = q.trailing_zeros();
        return Ok(Interval::new(x.lo.shr(k)?, x.hi.shr(k)?));
    }
    let q = I::from_u64(q).ok_or(Error::Overflow)?;
    let p = prec + GUARD_BITS;
    let bound = |d: &Dyadic<I>, up: bool| -> Result<Dyadic<I>> {
        // d / q = num·2^p / (q·2^(e+p))
        let scaled = d
            .numerator()
            .checked_mul(&crate::real::pow2(p)?)
            .ok_or(Error::Overflow)?;
        let (fl, rem) = scaled.div_mod_floor(&q);
        let n = if up && !rem.is_zero() { fl + I::one() } else { fl };
        Ok(Dyadic::new(n, d.exponent() + p))
    };
    Ok(Interval::new(bound(&x.lo, false)?, bound(&x.hi, true)?))
}

fn enclose_expr<I: DyadicInt>(e: &Expr, x: &Interval<I>, prec: u32) -> Result<Interval<I>> {
    Ok(match e {
        Expr::Nat(n) => Interval::point(Dyadic::from_u64(*n)?),
        Expr::Var(_) => x.clone(),
        Expr::Bin(op, a, b) => {
            let l = enclose_expr(a, x, prec)?;
            match (op, &**b) {
                (BinOp::Div, Expr::Nat(q)) => div_literal(&l, *q, prec)?,
                (BinOp::Div | BinOp::Mod, _) => unreachable!("rejected by the parser and compile_real"),
                _ => {
                    let r = enclose_expr(b, x, prec)?;
                    match op {
                        BinOp::Add => l.add(&r)?,
                        BinOp::Sub => l.sub(&r)?,
                        _ => l.mul(&r)?.round_out(prec + GUARD_BITS)?,
                    }
                }
            }
        }
        Expr::Call(b, l, r) => {
            let (l, r) = (enclose_expr(l, x, prec)?, enclose_expr(r, x, prec)?);
            match b {
                Builtin::Min => l.min(&r),
                Builtin::Max => l.max(&r),
            }
        }
        Expr::Apply(..) | Expr::If(..) | Expr::Mu(..) => unreachable!("rejected by compile_real"),
    })
}

impl<I: DyadicInt> RealFunction<I> for RealExpr {
    fn enclose(&self, input: &Interval<I>, prec: u32) -> Result<Interval<I>> {
        enclose_expr(&self.body, input, prec)
    }

    fn name(&self) -> &str {
        &self.name
    }
}

impl DslProgram {
    fn def(&self, name: &str) -> Result<&Def> {
        self.get(name)
            .ok_or_else(|| Error::UnknownDefinition(name.to_string()))
    }

    pub fn functional(&self, name: &str) -> Result<Functional2> {
        compile_functional(self.def(name)?)
    }

    pub fn program(&self, name: &str) -> Result<OracleProgram> {
        compile_program(self.def(name)?)
    }

    pub fn real(&self, name: &str) -> Result<RealExpr> {
        compile_real(self.def(name)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Signed;
    use crate::budget::Budget;
    use crate::dsl::parse;
    use crate::real::ExactReal;
    use crate::seq::{BinWord, Point};

    fn functional(src: &str) -> Functional2 {
        let p = parse(src).unwrap();
        p.functional(&p.defs[0].name).unwrap()
    }

    fn at(phi: &Functional2, w: &str) -> u64 {
        phi.eval(&Point::pad(&w.parse::<BinWord>().unwrap()), &Budget::default()).unwrap()
    }

    #[test]
    fn arithmetic_on_naturals() {
        let phi = functional("func g(f) = f(0) - f(1) * 3 + 10 / 4 + 7 % 3");
        assert_eq!(at(&phi, "01"), 3);
        assert_eq!(at(&phi, "10"), 1 + 2 + 1);
        let big = functional("func g(f) = 18446744073709551615 + f(0) + 1");
        assert_eq!(big.eval(&Point::zeros(), &Budget::default()), Err(Error::Overflow));
    }

    #[test]
    fn bounded_search_and_branching() {
        let mu = functional("func m(f) = mu n <= 4 : f(n) == 1");
        assert_eq!(at(&mu, "001"), 2);
        assert_eq!(at(&mu, "0000000"), 5);
        let branch = functional("func b(f) = if f(0) == 0 then f(1) else f(2)");
        let t = branch
            .eval_traced(&Point::pad(&"1".parse().unwrap()), &Budget::default())
            .unwrap();
        assert_eq!(t.queried_indices.into_iter().collect::<Vec<_>>(), vec![0, 2]);
        let nested = functional("func m(f) = mu n <= 3 : (mu n <= 3 : f(n) == 1) + n == 4");
        assert_eq!(at(&nested, "001"), 2);
    }

    #[test]
    fn programs_take_natural_arguments() {
        let p = parse("func H(a, n) = if n >= a(0) + a(1) then 0 else 1").unwrap();
        let h = p.program("H").unwrap();
        assert_eq!(h.arity(), 1);
        assert_eq!(at(&h.bind(&[1]), "11"), 1);
        assert_eq!(at(&h.bind(&[2]), "11"), 0);
        assert!(matches!(p.functional("H"), Err(Error::Shape { .. })));
        assert!(matches!(p.functional("G"), Err(Error::UnknownDefinition(_))));
    }

    #[test]
    fn step_budget_stops_long_searches() {
        let phi = functional("func s(f) = mu n <= 100000000 : f(n) == 1");
        assert!(matches!(
            phi.eval(&Point::zeros(), &Budget::default()),
            Err(Error::StepBudget { .. })
        ));
    }

    #[test]
    fn real_dialect() {
        let p = parse("func F(x) = x * (1 - x) + 1/3\nfunc G(x) = x(0)\nfunc H(x) = if x == 0 then 1 else 0")
            .unwrap();
        let f = p.real("F").unwrap();
        let v: Dyadic<i128> = f.eval(&ExactReal::from_dyadic("1/2".parse().unwrap()), 30).unwrap();
        let exact = num_rational::BigRational::new(7.into(), 12.into());
        let got = num_rational::BigRational::new(v.numerator().clone().into(), num_bigint::BigInt::from(1) << v.exponent());
        assert!((got - exact).abs() <= num_rational::BigRational::new(1.into(), num_bigint::BigInt::from(1) << 31));
        assert!(matches!(p.real("G"), Err(Error::Shape { .. })));
        assert!(matches!(p.real("H"), Err(Error::Shape { .. })));
    }
}
