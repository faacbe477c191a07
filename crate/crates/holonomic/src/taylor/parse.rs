use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use thiserror::Error;

use super::expr::{Builtin, Expr, UnivariateFn};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at position {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unknown identifier '{name}' at position {pos}")]
    UnknownIdentifier { pos: usize, name: String },
    #[error("function '{name}' at position {pos} takes {expected} argument(s), got {got}")]
    Arity {
        pos: usize,
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("variable '{name}' at position {pos} exceeds the input dimension {n}")]
    VariableOutOfRange { pos: usize, name: String, n: usize },
}

impl ParseError {
    pub fn position(&self) -> usize {
        match self {
            ParseError::Syntax { pos, .. }
            | ParseError::UnknownIdentifier { pos, .. }
            | ParseError::Arity { pos, .. }
            | ParseError::VariableOutOfRange { pos, .. } => *pos,
        }
    }
}

/// Parses a formula over `x1..xn` with the builtin functions only.
pub fn parse_expr(source: &str, n: usize) -> Result<Expr, ParseError> {
    ExprParser::new(n).parse(source)
}

/// Configurable parser: extra variable names and named univariate functions.
#[derive(Clone)]
pub struct ExprParser {
    n: usize,
    aliases: HashMap<String, usize>,
    functions: HashMap<String, Arc<dyn UnivariateFn>>,
}

impl ExprParser {
    pub fn new(n: usize) -> Self {
        ExprParser {
            n,
            aliases: HashMap::new(),
            functions: HashMap::new(),
        }
    }

    /// Makes `name` refer to variable index `index` (zero-based).
    pub fn with_alias(mut self, name: &str, index: usize) -> Self {
        self.aliases.insert(name.to_string(), index);
        self
    }

    pub fn with_function(mut self, f: Arc<dyn UnivariateFn>) -> Self {
        self.functions.insert(f.name().to_string(), f);
        self
    }

    pub fn parse(&self, source: &str) -> Result<Expr, ParseError> {
        let tokens = lex(source)?;
        let mut p = Parser {
            ctx: self,
            tokens,
            pos: 0,
            end: source.len(),
        };
        let e = p.expr()?;
        match p.peek() {
            None => Ok(e),
            Some(t) => Err(ParseError::Syntax {
                pos: t.pos,
                message: format!("unexpected {}", t.kind.describe()),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Num(f64),
    Ident(String),
    Op(char),
}

impl Kind {
    fn describe(&self) -> String {
        match self {
            Kind::Num(v) => format!("number {v}"),
            Kind::Ident(s) => format!("identifier '{s}'"),
            Kind::Op(c) => format!("token '{c}'"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: Kind,
    pos: usize,
}

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == '.' && bytes.get(i + 1).is_some_and(|b| b.is_ascii_digit())) {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            let v: f64 = text.parse().map_err(|_| ParseError::Syntax {
                pos: start,
                message: format!("malformed number '{text}'"),
            })?;
            out.push(Token {
                kind: Kind::Num(v),
                pos: start,
            });
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token {
                kind: Kind::Ident(src[start..i].to_string()),
                pos: start,
            });
        } else if "+-*/^(),".contains(c) {
            out.push(Token {
                kind: Kind::Op(c),
                pos: i,
            });
            i += 1;
        } else {
            return Err(ParseError::Syntax {
                pos: i,
                message: format!("unexpected character '{c}'"),
            });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    ctx: &'a ExprParser,
    tokens: Vec<Token>,
    pos: usize,
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_op(&self) -> Option<char> {
        match self.peek() {
            Some(Token { kind: Kind::Op(c), .. }) => Some(*c),
            _ => None,
        }
    }

    fn here(&self) -> usize {
        self.peek().map_or(self.end, |t| t.pos)
    }

    fn expect(&mut self, op: char) -> Result<(), ParseError> {
        if self.peek_op() == Some(op) {
            self.pos += 1;
            Ok(())
        } else {
            Err(ParseError::Syntax {
                pos: self.here(),
                message: match self.peek() {
                    Some(t) => format!("expected '{op}', found {}", t.kind.describe()),
                    None => format!("expected '{op}', found end of input"),
                },
            })
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' { lhs + rhs } else { lhs - rhs };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = if op == '*' { lhs * rhs } else { lhs / rhs };
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.peek_op() == Some('-') {
            self.pos += 1;
            let inner = self.factor()?;
            return Ok(-inner);
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek_op() != Some('^') {
            return Ok(base);
        }
        self.pos += 1;
        let at = self.here();
        let exponent = self.factor()?;
        let v = exponent.eval(&[]).map_err(|_| ParseError::Syntax {
            pos: at,
            message: "exponent must be a constant integer".into(),
        })?;
        if v.fract() != 0.0 || v.abs() > 1024.0 {
            return Err(ParseError::Syntax {
                pos: at,
                message: format!("exponent {v} is not a small integer"),
            });
        }
        Ok(base.powi(v as i32))
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let Some(tok) = self.peek().cloned() else {
            return Err(ParseError::Syntax {
                pos: self.end,
                message: "unexpected end of input".into(),
            });
        };
        self.pos += 1;
        match tok.kind {
            Kind::Num(v) => Ok(Expr::Const(v)),
            Kind::Op('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Kind::Op(_) => Err(ParseError::Syntax {
                pos: tok.pos,
                message: format!("unexpected {}", tok.kind.describe()),
            }),
            Kind::Ident(name) => self.identifier(name, tok.pos),
        }
    }

    fn identifier(&mut self, name: String, pos: usize) -> Result<Expr, ParseError> {
        if self.peek_op() == Some('(') {
            self.pos += 1;
            let mut args = Vec::new();
            if self.peek_op() != Some(')') {
                args.push(self.expr()?);
                while self.peek_op() == Some(',') {
                    self.pos += 1;
                    args.push(self.expr()?);
                }
            }
            self.expect(')')?;
            let arity = |expected: usize| ParseError::Arity {
                pos,
                name: name.clone(),
                expected,
                got: args.len(),
            };
            if let Some(b) = Builtin::from_name(&name) {
                if args.len() != 1 {
                    return Err(arity(1));
                }
                return Ok(Expr::call(b, args.pop().unwrap()));
            }
            if let Some(f) = self.ctx.functions.get(&name) {
                if args.len() != 1 {
                    return Err(arity(1));
                }
                return Ok(Expr::named(f.clone(), args.pop().unwrap()));
            }
            return Err(ParseError::UnknownIdentifier { pos, name });
        }
        if name == "pi" {
            return Ok(Expr::Const(PI));
        }
        if let Some(&i) = self.ctx.aliases.get(&name) {
            return Ok(Expr::Var(i));
        }
        if let Some(digits) = name.strip_prefix('x') {
            if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) && !digits.starts_with('0') {
                let i: usize = digits.parse().unwrap_or(usize::MAX);
                if i == 0 || i > self.ctx.n {
                    return Err(ParseError::VariableOutOfRange {
                        pos,
                        name,
                        n: self.ctx.n,
                    });
                }
                return Ok(Expr::Var(i - 1));
            }
        }
        if Builtin::from_name(&name).is_some() || self.ctx.functions.contains_key(&name) {
            return Err(ParseError::Arity {
                pos,
                name,
                expected: 1,
                got: 0,
            });
        }
        Err(ParseError::UnknownIdentifier { pos, name })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(src: &str, n: usize, x: &[f64]) -> f64 {
        parse_expr(src, n).unwrap().eval(x).unwrap()
    }

    #[test]
    fn basic_arithmetic() {
        assert_eq!(ev("x1 + 2*x2", 2, &[1.0, 1.0]), 3.0);
        assert!((ev("cos(2*pi*x1)", 1, &[0.5]) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("-2^2", 0, &[]), -4.0);
        assert_eq!(ev("2^3^2", 0, &[]), 512.0);
        assert_eq!(ev("1 - 2 - 3", 0, &[]), -4.0);
        assert_eq!(ev("8/4/2", 0, &[]), 1.0);
        assert_eq!(ev("2*-3", 0, &[]), -6.0);
        assert_eq!(ev("x1^-2", 1, &[2.0]), 0.25);
        assert_eq!(ev("1e-3*1E3", 0, &[]), 1.0);
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_expr("x1 + * x2", 2).unwrap_err();
        assert_eq!(e.position(), 5);
        assert!(matches!(e, ParseError::Syntax { .. }));
        assert!(matches!(
            parse_expr("foo(x1)", 1),
            Err(ParseError::UnknownIdentifier { pos: 0, .. })
        ));
        assert!(matches!(parse_expr("sin(x1, x1)", 1), Err(ParseError::Arity { .. })));
        assert!(matches!(
            parse_expr("x1 + x3", 2),
            Err(ParseError::VariableOutOfRange { pos: 5, .. })
        ));
        assert!(matches!(parse_expr("x1^x1", 1), Err(ParseError::Syntax { pos: 3, .. })));
        assert!(matches!(parse_expr("(x1", 1), Err(ParseError::Syntax { pos: 3, .. })));
        assert!(parse_expr("", 1).is_err());
    }

    #[test]
    fn aliases() {
        let p = ExprParser::new(2).with_alias("z1", 2);
        let e = p.parse("x1*z1").unwrap();
        assert_eq!(e.eval(&[2.0, 0.0, 3.0]).unwrap(), 6.0);
    }
}
