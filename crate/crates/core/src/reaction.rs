//! Reaction terms `f(u, v)`, `g(u, v)`: a small expression language, named
//! presets, structural-assumption validators and the smooth truncation cutoff.

use std::fmt;

use crate::error::{domain, Error, Result};
use crate::scalar::{lit, Real};

/// Arithmetic expression in two variables, `u` and `v` for reaction terms.
/// [`Expr::parse_in`] binds other names (such as `x`, `y`) to the same slots.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    U,
    V,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Sqrt,
    Abs,
    Cos,
    Sin,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Cos => "cos",
            Func::Sin => "sin",
        }
    }
}

impl Expr {
    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_in(text, ["u", "v"])
    }

    /// Parses with `vars[0]` and `vars[1]` as the two variable names.
    pub fn parse_in(text: &str, vars: [&str; 2]) -> Result<Self> {
        let tokens = tokenize(text)?;
        let mut p = Parser { tokens: &tokens, pos: 0, vars };
        let e = p.sum()?;
        if p.pos != tokens.len() {
            return domain(format!("unexpected '{}' in expression '{text}'", tokens[p.pos]));
        }
        Ok(e)
    }

    pub fn eval<T: Real>(&self, u: T, v: T) -> T {
        match self {
            Expr::Const(c) => lit(*c),
            Expr::U => u,
            Expr::V => v,
            Expr::Neg(a) => -a.eval(u, v),
            Expr::Add(a, b) => a.eval(u, v) + b.eval(u, v),
            Expr::Sub(a, b) => a.eval(u, v) - b.eval(u, v),
            Expr::Mul(a, b) => a.eval(u, v) * b.eval(u, v),
            Expr::Div(a, b) => a.eval(u, v) / b.eval(u, v),
            Expr::Pow(a, b) => {
                let base = a.eval(u, v);
                match **b {
                    Expr::Const(c) if c == c.trunc() && c.abs() <= 64.0 => base.powi(c as i32),
                    _ => base.powf(b.eval(u, v)),
                }
            }
            Expr::Call(f, a) => {
                let x = a.eval(u, v);
                match f {
                    Func::Exp => x.exp(),
                    Func::Sqrt => x.sqrt(),
                    Func::Abs => x.abs(),
                    Func::Cos => x.cos(),
                    Func::Sin => x.sin(),
                }
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c:?}"),
            Expr::U => f.write_str("u"),
            Expr::V => f.write_str("v"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, b) => write!(f, "({a} ^ {b})"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Num(x) => write!(f, "{x}"),
            Token::Ident(s) => f.write_str(s),
            Token::Op(c) => write!(f, "{c}"),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            // exponent part
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
            let s: String = chars[start..i].iter().collect();
            let x = s.parse::<f64>().map_err(|_| Error::Domain(format!("bad number '{s}'")))?;
            out.push(Token::Num(x));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^()".contains(c) {
            out.push(Token::Op(c));
            i += 1;
        } else {
            return domain(format!("unexpected character '{c}' in expression '{text}'"));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    vars: [&'a str; 2],
}

impl Parser<'_> {
    fn peek_op(&self) -> Option<char> {
        match self.tokens.get(self.pos) {
            Some(Token::Op(c)) => Some(*c),
            _ => None,
        }
    }

    fn expect(&mut self, op: char) -> Result<()> {
        if self.peek_op() == Some(op) {
            self.pos += 1;
            Ok(())
        } else {
            domain(format!("expected '{op}'"))
        }
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut lhs = self.product()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.product()?;
            lhs = if op == '+' { Expr::Add(lhs.into(), rhs.into()) } else { Expr::Sub(lhs.into(), rhs.into()) };
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' { Expr::Mul(lhs.into(), rhs.into()) } else { Expr::Div(lhs.into(), rhs.into()) };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek_op() {
            Some('-') => {
                self.pos += 1;
                Ok(Expr::Neg(self.unary()?.into()))
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    // right associative, binds tighter than unary minus on its left
    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Expr::Pow(base.into(), exp.into()));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let Some(tok) = self.tokens.get(self.pos) else {
            return domain("expression ends unexpectedly");
        };
        self.pos += 1;
        match tok {
            Token::Num(x) => Ok(Expr::Const(*x)),
            Token::Op('(') => {
                let e = self.sum()?;
                self.expect(')')?;
                Ok(e)
            }
            Token::Ident(name) if name == self.vars[0] => Ok(Expr::U),
            Token::Ident(name) if name == self.vars[1] => Ok(Expr::V),
            Token::Ident(name) => match name.as_str() {
                "pi" => Ok(Expr::Const(std::f64::consts::PI)),
                "exp" | "sqrt" | "abs" | "cos" | "sin" => {
                    let func = match name.as_str() {
                        "exp" => Func::Exp,
                        "sqrt" => Func::Sqrt,
                        "cos" => Func::Cos,
                        "sin" => Func::Sin,
                        _ => Func::Abs,
                    };
                    self.expect('(')?;
                    let e = self.sum()?;
                    self.expect(')')?;
                    Ok(Expr::Call(func, e.into()))
                }
                other => domain(format!(
                    "unknown identifier '{other}' (variables are {} and {})",
                    self.vars[0], self.vars[1]
                )),
            },
            Token::Op(c) => domain(format!("unexpected '{c}'")),
        }
    }
}

/// Which structural assumption the pair `(f, g)` is meant to satisfy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime {
    /// `f(0, η) = g(ξ, 0) = 0` and `f + λg ≤ 0` on the nonnegative quadrant.
    Dissipative,
    /// `f + λg ≥ C (ξ^p + η^p)` on the nonnegative quadrant.
    Blowup { p: f64, c: f64 },
}

/// The reaction pair with its coupling weight and the diffusion multiplier of
/// the second component.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearSystem {
    pub f: Expr,
    pub g: Expr,
    pub lambda: f64,
    pub d: f64,
    pub regime: Regime,
}

/// Nonnegative lattice on which the assumptions are sampled.
pub const LATTICE_MAX: f64 = 10.0;
pub const LATTICE_POINTS: usize = 41;
const ASSUMPTION_TOL: f64 = 1e-12;

fn lattice() -> impl Iterator<Item = (f64, f64)> {
    let step = LATTICE_MAX / (LATTICE_POINTS - 1) as f64;
    (0..LATTICE_POINTS).flat_map(move |i| (0..LATTICE_POINTS).map(move |j| (i as f64 * step, j as f64 * step)))
}

impl NonlinearSystem {
    pub fn new(f: Expr, g: Expr, lambda: f64, d: f64, regime: Regime) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return domain(format!("coupling lambda = {lambda} must be positive"));
        }
        if !(d > 0.0 && d.is_finite()) {
            return domain(format!("diffusion multiplier d = {d} must be positive"));
        }
        if let Regime::Blowup { p, c } = regime {
            if !(p > 1.0) {
                return domain(format!("exponent p = {p} must exceed 1"));
            }
            if !(c > 0.0) {
                return domain(format!("C_p_lambda = {c} must be positive"));
            }
        }
        Ok(Self { f, g, lambda, d, regime })
    }

    /// `f ≡ g ≡ 0`.
    pub fn zero() -> Self {
        Self::new(Expr::Const(0.0), Expr::Const(0.0), 1.0, 1.0, Regime::Dissipative).unwrap()
    }

    /// `f = -u v²`, `g = u v² - k v`, `λ = 1`.
    pub fn gray_scott(k: f64) -> Result<Self> {
        if !(k >= 0.0) {
            return domain(format!("feed/kill rate k = {k} must be nonnegative"));
        }
        let f = Expr::parse("-u*v^2")?;
        let g = Expr::Sub(Expr::parse("u*v^2")?.into(), Expr::Mul(Expr::Const(k).into(), Expr::V.into()).into());
        Self::new(f, g, 1.0, 1.0, Regime::Dissipative)
    }

    /// `f = u^p`, `g = v^p`, `λ = 1`, `C = 1`.
    pub fn power(p: f64) -> Result<Self> {
        let f = Expr::Pow(Expr::U.into(), Expr::Const(p).into());
        let g = Expr::Pow(Expr::V.into(), Expr::Const(p).into());
        Self::new(f, g, 1.0, 1.0, Regime::Blowup { p, c: 1.0 })
    }

    /// Looks up a named preset; `param` is `k` for Gray-Scott and `p` for the
    /// power law.
    pub fn preset(name: &str, param: Option<f64>) -> Result<Self> {
        match name {
            "zero" => Ok(Self::zero()),
            "gray-scott" => Self::gray_scott(param.unwrap_or(0.06)),
            "quadratic" => Self::power(2.0),
            "power" => Self::power(param.unwrap_or(2.0)),
            other => domain(format!("unknown preset '{other}' (zero, gray-scott, quadratic, power)")),
        }
    }

    pub fn f<T: Real>(&self, u: T, v: T) -> T {
        self.f.eval(u, v)
    }

    pub fn g<T: Real>(&self, u: T, v: T) -> T {
        self.g.eval(u, v)
    }

    /// Checks the regime's assumption on the sample lattice and lists every
    /// violated sample (at most a few per kind).
    pub fn validate(&self) -> std::result::Result<(), Vec<String>> {
        let mut problems = Vec::new();
        let lam = self.lambda;
        for (xi, eta) in lattice() {
            let f = self.f::<f64>(xi, eta);
            let g = self.g::<f64>(xi, eta);
            if !f.is_finite() || !g.is_finite() {
                problems.push(format!("f or g is not finite at ({xi}, {eta})"));
                continue;
            }
            match self.regime {
                Regime::Dissipative => {
                    if xi == 0.0 && f.abs() > ASSUMPTION_TOL {
                        problems.push(format!("f(0, {eta}) = {f} must vanish"));
                    }
                    if eta == 0.0 && g.abs() > ASSUMPTION_TOL {
                        problems.push(format!("g({xi}, 0) = {g} must vanish"));
                    }
                    if f + lam * g > ASSUMPTION_TOL {
                        problems.push(format!("f + lambda g = {} > 0 at ({xi}, {eta})", f + lam * g));
                    }
                }
                Regime::Blowup { p, c } => {
                    let lower = c * (xi.powf(p) + eta.powf(p));
                    if f + lam * g < lower - ASSUMPTION_TOL {
                        problems.push(format!(
                            "f + lambda g = {} below C (xi^p + eta^p) = {lower} at ({xi}, {eta})",
                            f + lam * g
                        ));
                    }
                }
            }
            if problems.len() >= 8 {
                problems.push("further violations omitted".into());
                break;
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(problems)
        }
    }

    /// Largest `C` with `f + λg ≥ C (ξ^p + η^p)` on the sample lattice.
    pub fn largest_admissible_c(&self, p: f64) -> f64 {
        lattice()
            .filter(|&(x, y)| x > 0.0 || y > 0.0)
            .map(|(x, y)| (self.f::<f64>(x, y) + self.lambda * self.g::<f64>(x, y)) / (x.powf(p) + y.powf(p)))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Smooth plateau `ψₙ(ξ, η) = ψ₁(ξ/n, η/n)` with `ψ₁` a tensor product of the
/// quintic smoothstep: 1 on `[-1, 1]`, 0 outside `[-2, 2]`, C² in between.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationCutoff<T> {
    level: T,
}

impl<T: Real> TruncationCutoff<T> {
    pub fn new(level: T) -> Result<Self> {
        if !(level > T::zero()) {
            return domain(format!("truncation level {level} must be positive"));
        }
        Ok(Self { level })
    }

    pub fn level(&self) -> T {
        self.level
    }

    fn profile(r: T) -> T {
        let r = r.abs();
        if r <= T::one() {
            return T::one();
        }
        if r >= lit(2.0) {
            return T::zero();
        }
        let x = r - T::one();
        let s = x * x * x * (lit::<T>(10.0) - lit::<T>(15.0) * x + lit::<T>(6.0) * x * x);
        T::one() - s
    }

    pub fn psi(&self, xi: T, eta: T) -> T {
        Self::profile(xi / self.level) * Self::profile(eta / self.level)
    }

    /// `(ψₙ f, ψₙ g)` at `(u, v)`.
    pub fn apply(&self, system: &NonlinearSystem, u: T, v: T) -> (T, T) {
        let psi = self.psi(u, v);
        if psi == T::zero() {
            return (T::zero(), T::zero());
        }
        (psi * system.f(u, v), psi * system.g(u, v))
    }
}
