use super::{Cond, Expr};

/// Prints with the fewest parentheses that still parse back to `e`.
pub(super) fn expr_to_string(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(e, &mut out, 0, false);
    out
}

// `context` is the precedence of the enclosing operator (0 at top level);
// `right` marks the right operand of a left-associative operator.
fn write_expr(e: &Expr, out: &mut String, context: u8, right: bool) {
    match e {
        Expr::Nat(n) => out.push_str(&n.to_string()),
        Expr::Var(v) => out.push_str(v),
        Expr::Apply(f, arg) => {
            out.push_str(f);
            out.push('(');
            write_expr(arg, out, 0, false);
            out.push(')');
        }
        Expr::Call(b, x, y) => {
            out.push_str(b.name());
            out.push('(');
            write_expr(x, out, 0, false);
            out.push_str(", ");
            write_expr(y, out, 0, false);
            out.push(')');
        }
        Expr::Bin(op, lhs, rhs) => {
            let p = op.precedence();
            let parens = p < context || (p == context && right);
            if parens {
                out.push('(');
            }
            write_expr(lhs, out, p, false);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            write_expr(rhs, out, p, true);
            if parens {
                out.push(')');
            }
        }
        Expr::If(c, a, b) => {
            let parens = context > 0;
            if parens {
                out.push('(');
            }
            out.push_str("if ");
            write_cond(c, out);
            out.push_str(" then ");
            write_expr(a, out, 0, false);
            out.push_str(" else ");
            write_expr(b, out, 0, false);
            if parens {
                out.push(')');
            }
        }
        Expr::Mu(var, bound, c) => {
            let parens = context > 0;
            if parens {
                out.push('(');
            }
            out.push_str(&format!("mu {var} <= {bound} : "));
            write_cond(c, out);
            if parens {
                out.push(')');
            }
        }
    }
}

fn write_cond(c: &Cond, out: &mut String) {
    write_expr(&c.lhs, out, 1, false);
    out.push(' ');
    out.push_str(c.op.symbol());
    out.push(' ');
    write_expr(&c.rhs, out, 1, false);
}

#[cfg(test)]
mod tests {
    use crate::dsl::parse_expr;

    fn round(src: &str) -> String {
        parse_expr(src, &["f", "k"]).unwrap().to_string()
    }

    #[test]
    fn minimal_parentheses() {
        assert_eq!(round("(1 + 2) + 3"), "1 + 2 + 3");
        assert_eq!(round("1 + (2 + 3)"), "1 + (2 + 3)");
        assert_eq!(round("1 - (2 - 3)"), "1 - (2 - 3)");
        assert_eq!(round("(1 + 2) * 3"), "(1 + 2) * 3");
        assert_eq!(round("(f(0) * 2) / 4"), "f(0) * 2 / 4");
        assert_eq!(round("(if f(0) == 0 then 1 else 2) + 1"), "(if f(0) == 0 then 1 else 2) + 1");
        assert_eq!(
            round("mu n <= 3 : f(n) + k == (mu m <= 2 : f(m) == 1)"),
            "mu n <= 3 : f(n) + k == (mu m <= 2 : f(m) == 1)"
        );
        assert_eq!(round("min(f(0), max(1, k))"), "min(f(0), max(1, k))");
    }
}
