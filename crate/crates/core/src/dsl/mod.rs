//! A small, total language for writing functionals and real functions.
//!
//! ```text
//! program := def+
//! def     := "func" name "(" params ")" "=" expr
//! expr    := literal | param | param "(" expr ")" | expr op expr
//!          | "min" "(" expr "," expr ")" | "max" "(" expr "," expr ")"
//!          | "if" expr cmp expr "then" expr "else" expr
//!          | "mu" name "<=" literal ":" expr cmp expr
//! op      := "+" | "-" | "*" | "/" literal | "%" literal
//! cmp     := "==" | "!=" | "<" | "<=" | ">" | ">="
//! ```
//!
//! On naturals `-` is truncated subtraction and `/`, `%` are floor division
//! and remainder by a nonzero literal. `mu n <= b : c` is the least `n <= b`
//! satisfying `c`, or `b + 1` when there is none. Every search is bounded
//! by a literal and nothing recurses, so evaluation is total.
//!
//! The real dialect uses the same syntax with a single value parameter
//! (conventionally `x`), exact `-`, and `a/b` as a rational literal.
//! Oracle application, `if`, `mu` and `%` are rejected there.

mod compile;
mod parse;
mod print;

pub use compile::{compile_functional, compile_program, compile_real, RealExpr};
pub use parse::{parse, parse_expr};

use std::fmt;

/// A parsed source file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DslProgram {
    pub defs: Vec<Def>,
}

impl DslProgram {
    pub fn get(&self, name: &str) -> Option<&Def> {
        self.defs.iter().find(|d| d.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Def {
    pub name: String,
    pub params: Vec<String>,
    pub body: Expr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div | BinOp::Mod => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn holds<T: PartialOrd>(self, a: &T, b: &T) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Builtin {
    Min,
    Max,
}

impl Builtin {
    pub fn name(self) -> &'static str {
        match self {
            Builtin::Min => "min",
            Builtin::Max => "max",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cond {
    pub lhs: Box<Expr>,
    pub op: CmpOp,
    pub rhs: Box<Expr>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Nat(u64),
    Var(String),
    /// `f(e)` where `f` is the oracle parameter.
    Apply(String, Box<Expr>),
    Call(Builtin, Box<Expr>, Box<Expr>),
    /// For `Div` and `Mod` the right operand is always a nonzero literal.
    Bin(BinOp, Box<Expr>, Box<Expr>),
    If(Cond, Box<Expr>, Box<Expr>),
    Mu(String, u64, Cond),
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print::expr_to_string(self))
    }
}

impl fmt::Display for Def {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "func {}({}) = {}", self.name, self.params.join(", "), self.body)
    }
}

impl fmt::Display for DslProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for def in &self.defs {
            writeln!(f, "{def}")?;
        }
        Ok(())
    }
}
