//! Exact search over Cantor space: moduli of continuity, suprema and bar
//! bounds of functionals on `{0,1}^ℕ`, associates, and exact real analysis
//! on [0,1] built on top of them.
//!
//! The real-number layer is generic over the numerator type of its dyadic
//! rationals; the aliases below fix it to `BigInt` (exact, unbounded) or
//! `i128` (fast, errors with [`Error::Overflow`] past its range).

pub mod budget;
pub mod check;
pub mod dsl;
pub mod error;
pub mod fan;
pub mod functional;
pub mod pointwise;
pub mod real;
pub mod seq;
pub mod sup;
pub mod ubp;

pub use budget::{Budget, DEFAULT_STEP_LIMIT, DEFAULT_WORK_LIMIT};
pub use check::{check_suite, CheckConfig, CheckEntry, CheckReport, Corpus, Status, Suite};
pub use dsl::{parse, DslProgram, RealExpr};
pub use error::{Error, Result};
pub use fan::{exact_modulus, fan_modulus, ph, ps, ps_fan, xi, FanConfig, FanResult};
pub use functional::{eval, eval_seq, eval_traced, EvalTrace, Functional2, Functional2Family, Oracle, OracleProgram, SeqFunctional};
pub use pointwise::{build_associate, delta_mpc, eval_associate, query_bound, rm_code_check, Associate, RmReport};
pub use real::{
    heine_borel, integrate, pos_bound, riemann_sum, sup_real, uc_modulus, DyadicInt, OpenCover, RealConfig,
    RealFunction, Subcover,
};
pub use seq::{enumerate_words, interleave, pad, prefix, BinWord, NatWord, Point};
pub use sup::{psi_sup, qffan_bound, sup_cantor, ufan2_bound, BarBound, SupResult, Tree};
pub use ubp::{theta_uco, uf_argmax, usb_bound, BoundedDomain, DomainFamily};

pub type Dyadic = real::Dyadic<num_bigint::BigInt>;
pub type Dyadic128 = real::Dyadic<i128>;
pub type ExactReal = real::ExactReal<num_bigint::BigInt>;
pub type ExactReal128 = real::ExactReal<i128>;
pub type Interval = real::Interval<num_bigint::BigInt>;
pub type Integral = real::Integral<num_bigint::BigInt>;
pub type SupReal = real::SupReal<num_bigint::BigInt>;
