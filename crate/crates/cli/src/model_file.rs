//! Declarative matrix-valued model files.
//!
//! ```text
//! file      = { line } ;
//! line      = [ statement ] [ comment ] newline ;
//! statement = "dim" integer | "params" integer | entry ;
//! entry     = "H" "[" integer "," integer "]" "=" expr ;
//! expr      = term { ( "+" | "-" ) term } ;
//! term      = unary { ( "*" | "/" ) unary } ;
//! unary     = ( "+" | "-" ) unary | primary ;
//! primary   = number | "i" | "pi" | param | func "(" expr ")" | "(" expr ")" ;
//! number    = digits [ "." digits ] [ ( "e" | "E" ) [ "+" | "-" ] digits ] [ "i" ] ;
//! param     = ( "l" | "λ" ) integer ;
//! func      = "sin" | "cos" | "exp" ;
//! comment   = "#" { any character } ;
//! ```
//!
//! Indices are 1-based. `dim` and `params` come before any entry; unlisted entries are zero.

use std::fmt;
use std::path::Path;

use num_complex::Complex64;
use ptqgt_core::{CMatrix, HamiltonianFamily};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.col, self.message)
    }
}

impl std::error::Error for ModelError {}

type PResult<T> = Result<T, ModelError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(Complex64),
    /// Zero-based parameter index.
    Param(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

fn konst(re: f64) -> Expr {
    Expr::Const(Complex64::new(re, 0.0))
}

fn as_const(e: &Expr) -> Option<Complex64> {
    match e {
        Expr::Const(z) => Some(*z),
        _ => None,
    }
}

fn is(e: &Expr, v: f64) -> bool {
    as_const(e) == Some(Complex64::new(v, 0.0))
}

// Constructors that fold the zeros and ones produced by differentiation.
fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(z) => Expr::Const(-z),
        Expr::Neg(inner) => *inner,
        a => Expr::Neg(Box::new(a)),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    if is(&a, 0.0) {
        b
    } else if is(&b, 0.0) {
        a
    } else {
        Expr::Add(Box::new(a), Box::new(b))
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    if is(&b, 0.0) {
        a
    } else if is(&a, 0.0) {
        neg(b)
    } else {
        Expr::Sub(Box::new(a), Box::new(b))
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    if is(&a, 0.0) || is(&b, 0.0) {
        konst(0.0)
    } else if is(&a, 1.0) {
        b
    } else if is(&b, 1.0) {
        a
    } else {
        Expr::Mul(Box::new(a), Box::new(b))
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    if is(&a, 0.0) {
        konst(0.0)
    } else if is(&b, 1.0) {
        a
    } else {
        Expr::Div(Box::new(a), Box::new(b))
    }
}

fn call(f: Func, a: Expr) -> Expr {
    Expr::Call(f, Box::new(a))
}

impl Expr {
    pub fn eval(&self, l: &[f64]) -> Complex64 {
        match self {
            Expr::Const(z) => *z,
            Expr::Param(i) => Complex64::new(l[*i], 0.0),
            Expr::Neg(a) => -a.eval(l),
            Expr::Add(a, b) => a.eval(l) + b.eval(l),
            Expr::Sub(a, b) => a.eval(l) - b.eval(l),
            Expr::Mul(a, b) => a.eval(l) * b.eval(l),
            Expr::Div(a, b) => a.eval(l) / b.eval(l),
            Expr::Call(f, a) => {
                let z = a.eval(l);
                match f {
                    Func::Sin => z.sin(),
                    Func::Cos => z.cos(),
                    Func::Exp => z.exp(),
                }
            }
        }
    }

    /// Symbolic `∂/∂λ_j`.
    pub fn derivative(&self, j: usize) -> Expr {
        match self {
            Expr::Const(_) => konst(0.0),
            Expr::Param(i) => konst(if *i == j { 1.0 } else { 0.0 }),
            Expr::Neg(a) => neg(a.derivative(j)),
            Expr::Add(a, b) => add(a.derivative(j), b.derivative(j)),
            Expr::Sub(a, b) => sub(a.derivative(j), b.derivative(j)),
            Expr::Mul(a, b) => add(mul(a.derivative(j), (**b).clone()), mul((**a).clone(), b.derivative(j))),
            Expr::Div(a, b) => {
                let num = sub(mul(a.derivative(j), (**b).clone()), mul((**a).clone(), b.derivative(j)));
                div(num, mul((**b).clone(), (**b).clone()))
            }
            Expr::Call(f, a) => {
                let inner = a.derivative(j);
                if is(&inner, 0.0) {
                    return konst(0.0);
                }
                let outer = match f {
                    Func::Sin => call(Func::Cos, (**a).clone()),
                    Func::Cos => neg(call(Func::Sin, (**a).clone())),
                    Func::Exp => call(Func::Exp, (**a).clone()),
                };
                mul(outer, inner)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Imag(f64),
    Ident(String),
    Sym(char),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    col: usize,
}

fn lex(text: &str, line: usize) -> PResult<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |col: usize, message: String| ModelError { line, col, message };
    while i < chars.len() {
        let ch = chars[i];
        let col = i + 1;
        if ch == '#' {
            break;
        }
        if ch.is_whitespace() {
            i += 1;
        } else if ch.is_ascii_digit() || (ch == '.' && chars.get(i + 1).is_some_and(|c| c.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let literal: String = chars[start..i].iter().collect();
            let value: f64 = literal.parse().map_err(|_| err(col, format!("malformed number '{literal}'")))?;
            let imaginary = chars.get(i) == Some(&'i') && !chars.get(i + 1).is_some_and(|c| c.is_alphanumeric());
            if imaginary {
                i += 1;
                out.push(Token { tok: Tok::Imag(value), col });
            } else {
                out.push(Token { tok: Tok::Num(value), col });
            }
        } else if ch.is_alphabetic() || ch == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token { tok: Tok::Ident(chars[start..i].iter().collect()), col });
        } else if "+-*/()[],=".contains(ch) {
            out.push(Token { tok: Tok::Sym(ch), col });
            i += 1;
        } else {
            return Err(err(col, format!("unexpected character '{ch}'")));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
    line: usize,
    end_col: usize,
    n_params: usize,
}

impl<'a> Parser<'a> {
    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |t| t.col)
    }

    fn error<T>(&self, message: impl Into<String>) -> PResult<T> {
        Err(ModelError { line: self.line, col: self.col(), message: message.into() })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> PResult<()> {
        if self.eat(c) {
            Ok(())
        } else {
            self.error(format!("expected '{c}'"))
        }
    }

    fn integer(&mut self, what: &str) -> PResult<usize> {
        match self.peek() {
            Some(Tok::Num(v)) if v.fract() == 0.0 && *v >= 0.0 && *v < 1e9 => {
                let v = *v as usize;
                self.pos += 1;
                Ok(v)
            }
            _ => self.error(format!("expected {what} (a non-negative integer)")),
        }
    }

    fn finish(&self) -> PResult<()> {
        if self.pos < self.toks.len() {
            return self.error("unexpected trailing input");
        }
        Ok(())
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        let Some(tok) = self.peek().cloned() else {
            return self.error("expected an expression");
        };
        let col = self.col();
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(Expr::Const(Complex64::new(v, 0.0))),
            Tok::Imag(v) => Ok(Expr::Const(Complex64::new(0.0, v))),
            Tok::Sym('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => self.identifier(&name, col),
            Tok::Sym(c) => {
                self.pos -= 1;
                self.error(format!("unexpected '{c}'"))
            }
        }
    }

    fn identifier(&mut self, name: &str, col: usize) -> PResult<Expr> {
        let err = |message: String| Err(ModelError { line: self.line, col, message });
        let func = match name {
            "i" => return Ok(Expr::Const(Complex64::new(0.0, 1.0))),
            "pi" => return Ok(konst(std::f64::consts::PI)),
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "exp" => Some(Func::Exp),
            _ => None,
        };
        if let Some(f) = func {
            self.expect('(')?;
            let arg = self.expr()?;
            self.expect(')')?;
            return Ok(Expr::Call(f, Box::new(arg)));
        }
        let digits = name.strip_prefix('l').or_else(|| name.strip_prefix('λ'));
        match digits.and_then(|d| d.parse::<usize>().ok()) {
            Some(k) if k >= 1 && k <= self.n_params => Ok(Expr::Param(k - 1)),
            Some(_) => err(format!("parameter {name} out of range: the model declares {} parameter(s)", self.n_params)),
            None => err(format!("unknown identifier '{name}'")),
        }
    }
}

/// A family read from a model file, with symbolic derivatives.
#[derive(Debug, Clone)]
pub struct ModelFamily {
    pub dim: usize,
    pub n_params: usize,
    pub entries: Vec<(usize, usize, Expr)>,
    derivatives: Vec<Vec<(usize, usize, Expr)>>,
}

impl ModelFamily {
    pub fn parse(text: &str) -> PResult<Self> {
        let mut dim = None;
        let mut n_params = None;
        let mut entries: Vec<(usize, usize, Expr)> = Vec::new();
        let mut last_line = 0;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            last_line = line;
            let toks = lex(raw, line)?;
            if toks.is_empty() {
                continue;
            }
            let mut p =
                Parser { toks: &toks, pos: 1, line, end_col: raw.chars().count() + 1, n_params: n_params.unwrap_or(0) };
            let head_err = |message: String| Err(ModelError { line, col: toks[0].col, message });
            match &toks[0].tok {
                Tok::Ident(kw) if kw == "dim" || kw == "params" => {
                    if !entries.is_empty() {
                        return head_err(format!("'{kw}' must come before the matrix entries"));
                    }
                    let slot = if kw == "dim" { &mut dim } else { &mut n_params };
                    if slot.is_some() {
                        return head_err(format!("duplicate '{kw}'"));
                    }
                    let v = p.integer(kw)?;
                    if v == 0 {
                        return head_err(format!("'{kw}' must be at least 1"));
                    }
                    p.finish()?;
                    *slot = Some(v);
                }
                Tok::Ident(h) if h == "H" => {
                    let (Some(n), Some(_)) = (dim, n_params) else {
                        return head_err("'dim' and 'params' must be declared before the first entry".into());
                    };
                    p.expect('[')?;
                    let row_col = p.col();
                    let r = p.integer("row index")?;
                    p.expect(',')?;
                    let c = p.integer("column index")?;
                    p.expect(']')?;
                    if !(1..=n).contains(&r) || !(1..=n).contains(&c) {
                        return Err(ModelError {
                            line,
                            col: row_col,
                            message: format!("entry H[{r},{c}] outside a {n}x{n} matrix (indices are 1-based)"),
                        });
                    }
                    if entries.iter().any(|(er, ec, _)| *er == r - 1 && *ec == c - 1) {
                        return head_err(format!("entry H[{r},{c}] given twice"));
                    }
                    p.expect('=')?;
                    let e = p.expr()?;
                    p.finish()?;
                    entries.push((r - 1, c - 1, e));
                }
                _ => return head_err("expected 'dim', 'params' or an entry 'H[r,c] = ...'".into()),
            }
        }
        let missing = |what: &str| ModelError {
            line: last_line.max(1),
            col: 1,
            message: format!("missing '{what}' declaration"),
        };
        let dim = dim.ok_or_else(|| missing("dim"))?;
        let n_params = n_params.ok_or_else(|| missing("params"))?;
        let derivatives = (0..n_params)
            .map(|j| {
                entries.iter().map(|(r, c, e)| (*r, *c, e.derivative(j))).filter(|(_, _, d)| !is(d, 0.0)).collect()
            })
            .collect();
        Ok(Self { dim, n_params, entries, derivatives })
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| anyhow::Error::new(e).context(format!("in model file {}", path.display())))
    }

    fn assemble(&self, entries: &[(usize, usize, Expr)], l: &[f64]) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for (r, c, e) in entries {
            m[(*r, *c)] = e.eval(l);
        }
        m
    }
}

impl HamiltonianFamily for ModelFamily {
    fn dim_hilbert(&self) -> usize {
        self.dim
    }
    fn dim_param(&self) -> usize {
        self.n_params
    }
    fn evaluate(&self, point: &[f64]) -> CMatrix {
        self.assemble(&self.entries, point)
    }
    fn derivative(&self, point: &[f64], mu: usize) -> Option<CMatrix> {
        Some(self.assemble(&self.derivatives[mu], point))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ptqgt_core::family::central_difference;
    use ptqgt_core::linalg::max_abs;

    const PT: &str = "\
# PT dimer
dim 2
params 2
H[1,1] = i*l1
H[1,2] = l2      # coupling
H[2,1] = l2
H[2,2] = -1i*l1
";

    #[test]
    fn parses_and_evaluates() {
        let m = ModelFamily::parse(PT).unwrap();
        let h = m.evaluate(&[0.3, 1.2]);
        assert_eq!(h[(0, 0)], Complex64::new(0.0, 0.3));
        assert_eq!(h[(1, 1)], Complex64::new(0.0, -0.3));
        assert_eq!(h[(0, 1)], Complex64::new(1.2, 0.0));
    }

    #[test]
    fn precedence_and_literals() {
        let src = "dim 1\nparams 2\nH[1,1] = -2*l1 + l2/4 - (1.5e1 - 2.5i) * 2 + pi - 3*-1\n";
        let m = ModelFamily::parse(src).unwrap();
        let v = m.evaluate(&[1.0, 2.0])[(0, 0)];
        let expect = Complex64::new(-2.0 + 0.5 - 30.0 + std::f64::consts::PI + 3.0, 5.0);
        assert!((v - expect).norm() < 1e-14);
    }

    #[test]
    fn symbolic_derivatives_match_differences() {
        let src = "dim 2\nparams 2\nH[1,1] = sin(l1*l2)\nH[1,2] = exp(i*l1)/(2 + cos(l2))\nH[2,1] = l1*l1*l2 - 3\n";
        let m = ModelFamily::parse(src).unwrap();
        let p = [0.7, -0.4];
        for mu in 0..2 {
            let d = m.derivative(&p, mu).unwrap();
            let fd = central_difference(&m, &p, mu, 1e-6);
            assert!(max_abs(&(d - fd)) < 1e-8, "direction {mu}");
        }
    }

    #[test]
    fn unicode_parameters() {
        let m = ModelFamily::parse("dim 1\nparams 1\nH[1,1] = 2*λ1\n").unwrap();
        assert_eq!(m.evaluate(&[1.5])[(0, 0)], Complex64::new(3.0, 0.0));
    }

    fn err(src: &str) -> ModelError {
        ModelFamily::parse(src).unwrap_err()
    }

    #[test]
    fn errors_carry_positions() {
        let e = err("dim 2\nparams 1\nH[1,1] = l1 + * 2\n");
        assert_eq!((e.line, e.col), (3, 15));
        let e = err("dim 2\nparams 1\nH[1,1] = l2\n");
        assert_eq!((e.line, e.col), (3, 10));
        assert!(e.message.contains("out of range"));
        let e = err("dim 2\nparams 1\nH[3,1] = 1\n");
        assert_eq!((e.line, e.col), (3, 3));
        let e = err("dim 2\nparams 1\nH[1,1] = (l1\n");
        assert_eq!((e.line, e.col), (3, 13));
        let e = err("dim 2\nparams 1\nH[1,1] = 1 $ 2\n");
        assert_eq!((e.line, e.col), (3, 12));
        let e = err("dim 2\nH[1,1] = 1\n");
        assert_eq!(e.line, 2);
        let e = err("dim 2\nparams 1\nH[1,1] = foo(1)\n");
        assert!(e.message.contains("unknown identifier"));
        assert!(err("dim 2\nparams 1\nH[1,1] = 1\nH[1,1] = 2\n").message.contains("twice"));
        assert!(err("params 1\n").message.contains("dim"));
    }
}
