use super::{BinOp, Builtin, CmpOp, Cond, Def, DslProgram, Expr};
use crate::error::{Error, Result};

const KEYWORDS: &[&str] = &["func", "if", "then", "else", "mu", "min", "max"];

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(u64),
    Sym(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

fn lex(source: &str) -> Result<Vec<Token>> {
    const SYMBOLS: &[&str] = &[
        "==", "!=", "<=", ">=", "<", ">", "=", "(", ")", ",", "+", "-", "*", "/", "%", ":",
    ];
    let mut tokens = Vec::new();
    let chars: Vec<char> = source.chars().collect();
    let (mut i, mut line, mut column) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            column = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            column += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start = column;
        if c.is_ascii_digit() {
            let mut j = i;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            let text: String = chars[i..j].iter().collect();
            let n = text
                .parse::<u64>()
                .map_err(|_| err(line, start, format!("literal {text} does not fit in 64 bits")))?;
            tokens.push(Token {
                tok: Tok::Num(n),
                line,
                column: start,
            });
            column += j - i;
            i = j;
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let mut j = i;
            while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                j += 1;
            }
            tokens.push(Token {
                tok: Tok::Ident(chars[i..j].iter().collect()),
                line,
                column: start,
            });
            column += j - i;
            i = j;
            continue;
        }
        let rest: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(*s)) {
            Some(sym) => {
                tokens.push(Token {
                    tok: Tok::Sym(sym),
                    line,
                    column: start,
                });
                i += sym.len();
                column += sym.len();
            }
            None => return Err(err(line, start, format!("unexpected character `{c}`"))),
        }
    }
    tokens.push(Token {
        tok: Tok::Eof,
        line,
        column,
    });
    Ok(tokens)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    params: Vec<String>,
    bound: Vec<String>,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn at_sym(&self, sym: &str) -> bool {
        matches!(&self.peek().tok, Tok::Sym(s) if *s == sym)
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn error_here(&self, message: impl Into<String>) -> Error {
        let t = self.peek();
        err(t.line, t.column, message)
    }

    fn describe(tok: &Tok) -> String {
        match tok {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Num(n) => format!("`{n}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".to_string(),
        }
    }

    fn expect_sym(&mut self, sym: &str) -> Result<()> {
        if self.at_sym(sym) {
            self.next();
            Ok(())
        } else {
            Err(self.error_here(format!(
                "expected `{sym}`, found {}",
                Self::describe(&self.peek().tok)
            )))
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<()> {
        if self.at_keyword(kw) {
            self.next();
            Ok(())
        } else {
            Err(self.error_here(format!(
                "expected `{kw}`, found {}",
                Self::describe(&self.peek().tok)
            )))
        }
    }

    fn expect_name(&mut self, what: &str) -> Result<String> {
        let t = self.peek().clone();
        match &t.tok {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.next();
                Ok(s.clone())
            }
            other => Err(err(
                t.line,
                t.column,
                format!("expected {what}, found {}", Self::describe(other)),
            )),
        }
    }

    fn expect_literal(&mut self, what: &str) -> Result<u64> {
        match self.peek().tok {
            Tok::Num(n) => {
                self.next();
                Ok(n)
            }
            ref other => Err(self.error_here(format!(
                "{what} must be a literal, found {}",
                Self::describe(other)
            ))),
        }
    }

    fn program(&mut self) -> Result<DslProgram> {
        let mut defs: Vec<Def> = Vec::new();
        loop {
            if self.peek().tok == Tok::Eof {
                break;
            }
            let (line, column) = (self.peek().line, self.peek().column);
            let def = self.def()?;
            if defs.iter().any(|d| d.name == def.name) {
                return Err(err(line, column, format!("duplicate definition `{}`", def.name)));
            }
            defs.push(def);
        }
        if defs.is_empty() {
            return Err(self.error_here("expected at least one `func` definition"));
        }
        Ok(DslProgram { defs })
    }

    fn def(&mut self) -> Result<Def> {
        self.expect_keyword("func")?;
        let name = self.expect_name("a definition name")?;
        self.expect_sym("(")?;
        let mut params = Vec::new();
        loop {
            let t = self.peek().clone();
            let p = self.expect_name("a parameter name")?;
            if params.contains(&p) {
                return Err(err(t.line, t.column, format!("duplicate parameter `{p}`")));
            }
            params.push(p);
            if self.at_sym(",") {
                self.next();
            } else {
                break;
            }
        }
        self.expect_sym(")")?;
        self.expect_sym("=")?;
        self.params = params.clone();
        self.bound.clear();
        let body = self.expr()?;
        Ok(Def { name, params, body })
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.at_sym("+") {
                BinOp::Add
            } else if self.at_sym("-") {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            self.next();
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.atom()?;
        loop {
            if self.at_sym("*") {
                self.next();
                let rhs = self.atom()?;
                lhs = Expr::Bin(BinOp::Mul, Box::new(lhs), Box::new(rhs));
            } else if self.at_sym("/") || self.at_sym("%") {
                let op = if self.at_sym("/") { BinOp::Div } else { BinOp::Mod };
                self.next();
                let t = self.peek().clone();
                let d = self.expect_literal("divisor")?;
                if d == 0 {
                    return Err(err(t.line, t.column, "division by the literal 0"));
                }
                lhs = Expr::Bin(op, Box::new(lhs), Box::new(Expr::Nat(d)));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn cond(&mut self) -> Result<Cond> {
        let lhs = self.expr()?;
        let op = match &self.peek().tok {
            Tok::Sym("==") => CmpOp::Eq,
            Tok::Sym("!=") => CmpOp::Ne,
            Tok::Sym("<") => CmpOp::Lt,
            Tok::Sym("<=") => CmpOp::Le,
            Tok::Sym(">") => CmpOp::Gt,
            Tok::Sym(">=") => CmpOp::Ge,
            other => {
                return Err(self.error_here(format!(
                    "expected a comparison, found {}",
                    Self::describe(other)
                )))
            }
        };
        self.next();
        let rhs = self.expr()?;
        Ok(Cond {
            lhs: Box::new(lhs),
            op,
            rhs: Box::new(rhs),
        })
    }

    fn atom(&mut self) -> Result<Expr> {
        let t = self.peek().clone();
        match &t.tok {
            Tok::Num(n) => {
                self.next();
                Ok(Expr::Nat(*n))
            }
            Tok::Sym("(") => {
                self.next();
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Ident(kw) if kw == "if" => {
                self.next();
                let c = self.cond()?;
                self.expect_keyword("then")?;
                let a = self.expr()?;
                self.expect_keyword("else")?;
                let b = self.expr()?;
                Ok(Expr::If(c, Box::new(a), Box::new(b)))
            }
            Tok::Ident(kw) if kw == "mu" => {
                self.next();
                let var = self.expect_name("a search variable")?;
                if self.at_sym(":") {
                    return Err(self.error_here("mu-search needs an explicit bound `<= literal`"));
                }
                self.expect_sym("<=")?;
                let bound = self.expect_literal("mu-search bound")?;
                self.expect_sym(":")?;
                self.bound.push(var.clone());
                let c = self.cond();
                self.bound.pop();
                Ok(Expr::Mu(var, bound, c?))
            }
            Tok::Ident(kw) if kw == "min" || kw == "max" => {
                let builtin = if kw == "min" { Builtin::Min } else { Builtin::Max };
                self.next();
                self.expect_sym("(")?;
                let a = self.expr()?;
                self.expect_sym(",")?;
                let b = self.expr()?;
                self.expect_sym(")")?;
                Ok(Expr::Call(builtin, Box::new(a), Box::new(b)))
            }
            Tok::Ident(name) if !KEYWORDS.contains(&name.as_str()) => {
                let name = name.clone();
                self.next();
                if self.at_sym("(") {
                    if !self.params.contains(&name) || self.bound.contains(&name) {
                        return Err(err(t.line, t.column, format!("unbound name `{name}`")));
                    }
                    self.next();
                    let arg = self.expr()?;
                    self.expect_sym(")")?;
                    Ok(Expr::Apply(name, Box::new(arg)))
                } else if self.params.contains(&name) || self.bound.contains(&name) {
                    Ok(Expr::Var(name))
                } else {
                    Err(err(t.line, t.column, format!("unbound name `{name}`")))
                }
            }
            other => Err(err(
                t.line,
                t.column,
                format!("expected an expression, found {}", Self::describe(other)),
            )),
        }
    }
}

/// Parses a whole source file.
pub fn parse(source: &str) -> Result<DslProgram> {
    let mut parser = Parser {
        tokens: lex(source)?,
        pos: 0,
        params: Vec::new(),
        bound: Vec::new(),
    };
    parser.program()
}

/// Parses a single expression with the given parameters in scope.
pub fn parse_expr(source: &str, params: &[&str]) -> Result<Expr> {
    let mut parser = Parser {
        tokens: lex(source)?,
        pos: 0,
        params: params.iter().map(|s| s.to_string()).collect(),
        bound: Vec::new(),
    };
    let e = parser.expr()?;
    if parser.peek().tok != Tok::Eof {
        return Err(parser.error_here(format!(
            "unexpected {} after expression",
            Parser::describe(&parser.peek().tok)
        )));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn body(src: &str) -> Expr {
        parse(src).unwrap().defs.remove(0).body
    }

    #[test]
    fn oracle_application() {
        assert_eq!(
            body("func phi(f) = f(3)"),
            Expr::Apply("f".into(), Box::new(Expr::Nat(3)))
        );
    }

    #[test]
    fn unbound_name_is_reported_with_position() {
        match parse("func bad(f) = g(0)") {
            Err(Error::Parse { line, column, message }) => {
                assert_eq!((line, column), (1, 15));
                assert!(message.contains("`g`"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse("func bad(f) =\n  f(0) + y"),
            Err(Error::Parse { line: 2, column: 10, .. })
        ));
    }

    #[test]
    fn bounded_search_node() {
        assert_eq!(
            body("func mu1(f) = mu n <= 8 : f(n) == 1"),
            Expr::Mu(
                "n".into(),
                8,
                Cond {
                    lhs: Box::new(Expr::Apply("f".into(), Box::new(Expr::Var("n".into())))),
                    op: CmpOp::Eq,
                    rhs: Box::new(Expr::Nat(1)),
                }
            )
        );
    }

    #[test]
    fn missing_mu_bound() {
        match parse("func m(f) = mu n : f(n) == 1") {
            Err(Error::Parse { message, .. }) => assert!(message.contains("bound"), "{message}"),
            other => panic!("{other:?}"),
        }
        assert!(parse("func m(f) = mu n <= f(0) : f(n) == 1").is_err());
    }

    #[test]
    fn search_variable_scope_ends_with_the_search() {
        assert!(parse("func m(f) = (mu n <= 3 : f(n) == 1) + n").is_err());
        assert!(parse("func m(f) = mu n <= 3 : n(0) == 1").is_err());
    }

    #[test]
    fn precedence_and_associativity() {
        let e = body("func p(f) = 1 + 2 * 3 - 4");
        assert_eq!(e.to_string(), "1 + 2 * 3 - 4");
        match e {
            Expr::Bin(BinOp::Sub, lhs, _) => assert!(matches!(*lhs, Expr::Bin(BinOp::Add, _, _))),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn division_needs_nonzero_literal() {
        assert!(parse("func d(f) = f(0) / f(1)").is_err());
        assert!(parse("func d(f) = f(0) / 0").is_err());
        assert!(parse("func d(f) = f(0) / 2 + f(1) % 3").is_ok());
    }

    #[test]
    fn several_definitions_and_comments() {
        let p = parse("# corpus\nfunc a(f) = 1\nfunc b(f, n) = f(n) # tail\n").unwrap();
        assert_eq!(p.defs.len(), 2);
        assert_eq!(p.get("b").unwrap().params, vec!["f", "n"]);
        assert!(parse("func a(f) = 1 func a(f) = 2").is_err());
        assert!(parse("").is_err());
        assert!(parse("func a(f, f) = 1").is_err());
    }
}
