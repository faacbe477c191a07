use std::fmt;
use std::sync::Arc;

use super::series::TruncatedSeries;
use super::TaylorError;

/// A smooth function of one real variable that can report its own Taylor
/// coefficients. Used for piecewise-polynomial cutoffs inside expressions.
pub trait UnivariateFn: Send + Sync {
    /// Identifier used when printing and parsing.
    fn name(&self) -> &str;
    /// Differentiability class of the function.
    fn smoothness(&self) -> usize;
    /// `f^(j)(t) / j!` for `j = 0..=order`.
    fn taylor_coeffs(&self, t: f64, order: usize) -> Vec<f64>;

    fn eval(&self, t: f64) -> f64 {
        self.taylor_coeffs(t, 0)[0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    Sin,
    Cos,
    Exp,
    Sqrt,
}

impl Builtin {
    pub fn name(self) -> &'static str {
        match self {
            Builtin::Sin => "sin",
            Builtin::Cos => "cos",
            Builtin::Exp => "exp",
            Builtin::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Builtin> {
        match name {
            "sin" => Some(Builtin::Sin),
            "cos" => Some(Builtin::Cos),
            "exp" => Some(Builtin::Exp),
            "sqrt" => Some(Builtin::Sqrt),
            _ => None,
        }
    }
}

/// Expression tree over variables `x1..xn` (stored zero-based).
#[derive(Clone)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Builtin, Box<Expr>),
    Named(Arc<dyn UnivariateFn>, Box<Expr>),
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        use Expr::*;
        match (self, other) {
            (Const(a), Const(b)) => a.to_bits() == b.to_bits(),
            (Var(a), Var(b)) => a == b,
            (Neg(a), Neg(b)) => a == b,
            (Add(a, b), Add(c, d)) | (Sub(a, b), Sub(c, d)) | (Mul(a, b), Mul(c, d)) | (Div(a, b), Div(c, d)) => {
                a == c && b == d
            }
            (Pow(a, e), Pow(b, f)) => e == f && a == b,
            (Call(f, a), Call(g, b)) => f == g && a == b,
            (Named(f, a), Named(g, b)) => f.name() == g.name() && a == b,
            _ => false,
        }
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

impl Expr {
    pub fn constant(c: f64) -> Expr {
        Expr::Const(c)
    }

    pub fn var(i: usize) -> Expr {
        Expr::Var(i)
    }

    pub fn call(f: Builtin, arg: Expr) -> Expr {
        Expr::Call(f, Box::new(arg))
    }

    pub fn named(f: Arc<dyn UnivariateFn>, arg: Expr) -> Expr {
        Expr::Named(f, Box::new(arg))
    }

    pub fn powi(self, e: i32) -> Expr {
        Expr::Pow(Box::new(self), e)
    }

    /// Largest variable index used plus one.
    pub fn arity(&self) -> usize {
        let mut m = 0;
        self.visit(&mut |e| {
            if let Expr::Var(i) = e {
                m = m.max(i + 1);
            }
        });
        m
    }

    /// Smallest smoothness class among named functions, `usize::MAX` if none.
    pub fn smoothness(&self) -> usize {
        let mut m = usize::MAX;
        self.visit(&mut |e| {
            if let Expr::Named(f, _) = e {
                m = m.min(f.smoothness());
            }
        });
        m
    }

    fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Const(_) | Expr::Var(_) => {}
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) | Expr::Named(_, a) => a.visit(f),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.visit(f);
                b.visit(f);
            }
        }
    }

    /// Replaces every variable by the given expression.
    pub fn substitute(&self, sub: &dyn Fn(usize) -> Expr) -> Expr {
        let rec = |e: &Expr| Box::new(e.substitute(sub));
        match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Var(i) => sub(*i),
            Expr::Neg(a) => Expr::Neg(rec(a)),
            Expr::Add(a, b) => Expr::Add(rec(a), rec(b)),
            Expr::Sub(a, b) => Expr::Sub(rec(a), rec(b)),
            Expr::Mul(a, b) => Expr::Mul(rec(a), rec(b)),
            Expr::Div(a, b) => Expr::Div(rec(a), rec(b)),
            Expr::Pow(a, e) => Expr::Pow(rec(a), *e),
            Expr::Call(f, a) => Expr::Call(*f, rec(a)),
            Expr::Named(f, a) => Expr::Named(f.clone(), rec(a)),
        }
    }

    /// Renumbers variables through `map`.
    pub fn remap_vars(&self, map: &[usize]) -> Expr {
        self.substitute(&|i| Expr::Var(map[i]))
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, TaylorError> {
        Ok(match self {
            Expr::Const(c) => *c,
            Expr::Var(i) => *x.get(*i).ok_or_else(|| self.domain("variable index beyond input"))?,
            Expr::Neg(a) => -a.eval(x)?,
            Expr::Add(a, b) => a.eval(x)? + b.eval(x)?,
            Expr::Sub(a, b) => a.eval(x)? - b.eval(x)?,
            Expr::Mul(a, b) => a.eval(x)? * b.eval(x)?,
            Expr::Div(a, b) => {
                let d = b.eval(x)?;
                if d == 0.0 {
                    return Err(self.domain("division by zero"));
                }
                a.eval(x)? / d
            }
            Expr::Pow(a, e) => {
                let v = a.eval(x)?;
                if v == 0.0 && *e < 0 {
                    return Err(self.domain("negative power of zero"));
                }
                v.powi(*e)
            }
            Expr::Call(f, a) => {
                let v = a.eval(x)?;
                match f {
                    Builtin::Sin => v.sin(),
                    Builtin::Cos => v.cos(),
                    Builtin::Exp => v.exp(),
                    Builtin::Sqrt => {
                        if v < 0.0 {
                            return Err(self.domain("negative radicand"));
                        }
                        v.sqrt()
                    }
                }
            }
            Expr::Named(f, a) => f.eval(a.eval(x)?),
        })
    }

    /// Taylor expansion at `basepoint` to order `r` by propagating truncated
    /// series through the tree.
    pub fn taylor_expand(&self, basepoint: &[f64], r: usize) -> Result<TruncatedSeries, TaylorError> {
        Ok(match self {
            Expr::Const(c) => TruncatedSeries::constant(basepoint, r, *c),
            Expr::Var(i) => {
                if *i >= basepoint.len() {
                    return Err(self.domain("variable index beyond input"));
                }
                TruncatedSeries::variable(basepoint, r, *i)
            }
            Expr::Neg(a) => a.taylor_expand(basepoint, r)?.scale(-1.0),
            Expr::Add(a, b) => a.taylor_expand(basepoint, r)? + b.taylor_expand(basepoint, r)?,
            Expr::Sub(a, b) => a.taylor_expand(basepoint, r)? - b.taylor_expand(basepoint, r)?,
            Expr::Mul(a, b) => {
                if let Expr::Const(c) = **a {
                    b.taylor_expand(basepoint, r)?.scale(c)
                } else if let Expr::Const(c) = **b {
                    a.taylor_expand(basepoint, r)?.scale(c)
                } else {
                    a.taylor_expand(basepoint, r)? * b.taylor_expand(basepoint, r)?
                }
            }
            Expr::Div(a, b) => {
                let num = a.taylor_expand(basepoint, r)?;
                let den = b.taylor_expand(basepoint, r)?;
                num.div_series(&den).map_err(|e| self.wrap(e))?
            }
            Expr::Pow(a, e) => a.taylor_expand(basepoint, r)?.powi(*e).map_err(|err| self.wrap(err))?,
            Expr::Call(f, a) => {
                let s = a.taylor_expand(basepoint, r)?;
                match f {
                    Builtin::Sin => s.sin(),
                    Builtin::Cos => s.cos(),
                    Builtin::Exp => s.exp(),
                    Builtin::Sqrt => s.sqrt().map_err(|e| self.wrap(e))?,
                }
            }
            Expr::Named(f, a) => {
                let s = a.taylor_expand(basepoint, r)?;
                let c = f.taylor_coeffs(s.value(), r);
                s.compose_univariate(&c)
            }
        })
    }

    fn domain(&self, what: &str) -> TaylorError {
        TaylorError::Eval {
            message: what.to_string(),
            node: self.to_string(),
        }
    }

    fn wrap(&self, err: TaylorError) -> TaylorError {
        match err {
            TaylorError::Domain(message) => TaylorError::Eval {
                message,
                node: self.to_string(),
            },
            other => other,
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Const(c) if c.is_sign_negative() => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        }
    }

    fn write_child(&self, f: &mut fmt::Formatter<'_>, child: &Expr, min_prec: u8) -> fmt::Result {
        if child.precedence() < min_prec {
            write!(f, "({child})")
        } else {
            write!(f, "{child}")
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c:?}"),
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Neg(a) => {
                f.write_str("-")?;
                self.write_child(f, a, 3)
            }
            Expr::Add(a, b) => {
                self.write_child(f, a, 1)?;
                f.write_str(" + ")?;
                self.write_child(f, b, 2)
            }
            Expr::Sub(a, b) => {
                self.write_child(f, a, 1)?;
                f.write_str(" - ")?;
                self.write_child(f, b, 2)
            }
            Expr::Mul(a, b) => {
                self.write_child(f, a, 2)?;
                f.write_str("*")?;
                self.write_child(f, b, 3)
            }
            Expr::Div(a, b) => {
                self.write_child(f, a, 2)?;
                f.write_str("/")?;
                self.write_child(f, b, 3)
            }
            Expr::Pow(a, e) => {
                self.write_child(f, a, 5)?;
                if *e < 0 {
                    write!(f, "^({e})")
                } else {
                    write!(f, "^{e}")
                }
            }
            Expr::Call(g, a) => write!(f, "{}({a})", g.name()),
            Expr::Named(g, a) => write!(f, "{}({a})", g.name()),
        }
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $variant:ident) => {
        impl std::ops::$trait for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$variant(Box::new(self), Box::new(rhs))
            }
        }
    };
}

binop!(Add, add, Add);
binop!(Sub, sub, Sub);
binop!(Mul, mul, Mul);
binop!(Div, div, Div);

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        match self {
            Expr::Const(c) => Expr::Const(-c),
            e => Expr::Neg(Box::new(e)),
        }
    }
}
