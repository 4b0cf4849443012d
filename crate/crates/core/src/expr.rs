//! Small recursive-descent parser and evaluator for the closed-form
//! expressions accepted in problem configs (kernels, weights, nonlinearities,
//! deviation maps and declared bounds).
//!
//! Grammar: the usual arithmetic with `+ - * /`, right-associative `^`,
//! unary minus, parentheses, call syntax for `exp`, `ln`, `sqrt`, `sin`,
//! `cos`, `tan`, `abs`, `min`, `max`, and the constants `pi`, `e`, `inf`.
//! Variable names are fixed per context (for example `t`, `u`, `v` for a
//! nonlinearity, `rho` for a declared bound).

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Const(f64),
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call1(Func1, Box<Node>),
    Call2(Func2, Box<Node>, Box<Node>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Func1 {
    Exp,
    Ln,
    Sqrt,
    Sin,
    Cos,
    Tan,
    Abs,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Func2 {
    Min,
    Max,
}

/// A parsed expression over a fixed list of variable names.
#[derive(Debug, Clone)]
pub struct Expr {
    source: String,
    vars: Vec<String>,
    root: Node,
}

impl Expr {
    pub fn parse(source: &str, vars: &[&str]) -> Result<Expr> {
        let mut p = Parser {
            chars: source.chars().collect(),
            pos: 0,
            vars,
        };
        let root = p.expression()?;
        p.skip_ws();
        if p.pos != p.chars.len() {
            return Err(Error::Expr(format!(
                "unexpected trailing input at byte {} in `{}`",
                p.pos, source
            )));
        }
        Ok(Expr {
            source: source.to_string(),
            vars: vars.iter().map(|s| s.to_string()).collect(),
            root,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn var_names(&self) -> &[String] {
        &self.vars
    }

    /// Evaluate with one value per declared variable, in declaration order.
    pub fn eval(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.vars.len());
        eval_node(&self.root, values)
    }
}

fn eval_node(node: &Node, values: &[f64]) -> f64 {
    match node {
        Node::Const(c) => *c,
        Node::Var(i) => values[*i],
        Node::Neg(a) => -eval_node(a, values),
        Node::Add(a, b) => eval_node(a, values) + eval_node(b, values),
        Node::Sub(a, b) => eval_node(a, values) - eval_node(b, values),
        Node::Mul(a, b) => eval_node(a, values) * eval_node(b, values),
        Node::Div(a, b) => eval_node(a, values) / eval_node(b, values),
        Node::Pow(a, b) => {
            let base = eval_node(a, values);
            let exp = eval_node(b, values);
            if exp.fract() == 0.0 && exp.abs() < 64.0 {
                base.powi(exp as i32)
            } else {
                base.powf(exp)
            }
        }
        Node::Call1(f, a) => {
            let x = eval_node(a, values);
            match f {
                Func1::Exp => x.exp(),
                Func1::Ln => x.ln(),
                Func1::Sqrt => x.sqrt(),
                Func1::Sin => x.sin(),
                Func1::Cos => x.cos(),
                Func1::Tan => x.tan(),
                Func1::Abs => x.abs(),
            }
        }
        Node::Call2(f, a, b) => {
            let x = eval_node(a, values);
            let y = eval_node(b, values);
            match f {
                Func2::Min => x.min(y),
                Func2::Max => x.max(y),
            }
        }
    }
}

struct Parser<'a> {
    chars: Vec<char>,
    pos: usize,
    vars: &'a [&'a str],
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek();
        if c.is_some() {
            self.pos += 1;
        }
        c
    }

    fn expect(&mut self, c: char) -> Result<()> {
        match self.bump() {
            Some(got) if got == c => Ok(()),
            got => Err(Error::Expr(format!("expected `{c}`, found {got:?}"))),
        }
    }

    fn expression(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some('+') => {
                    self.bump();
                    lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some('-') => {
                    self.bump();
                    lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some('*') => {
                    self.bump();
                    lhs = Node::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Some('/') => {
                    self.bump();
                    lhs = Node::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Node> {
        match self.peek() {
            Some('-') => {
                self.bump();
                Ok(Node::Neg(Box::new(self.factor()?)))
            }
            Some('+') => {
                self.bump();
                self.factor()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.peek() == Some('^') {
            self.bump();
            // right associative; exponent may itself carry a unary minus
            let exp = self.factor()?;
            Ok(Node::Pow(Box::new(base), Box::new(exp)))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Node> {
        match self.peek() {
            Some('(') => {
                self.bump();
                let inner = self.expression()?;
                self.expect(')')?;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == '_' => self.identifier(),
            got => Err(Error::Expr(format!("unexpected token {got:?}"))),
        }
    }

    fn number(&mut self) -> Result<Node> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.chars.len() {
            let c = self.chars[self.pos];
            if c.is_ascii_digit() || c == '.' {
                self.pos += 1;
            } else if (c == 'e' || c == 'E')
                && self.pos > start
                && self
                    .chars
                    .get(self.pos + 1)
                    .is_some_and(|n| n.is_ascii_digit() || *n == '+' || *n == '-')
            {
                self.pos += 2;
            } else {
                break;
            }
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        text.parse::<f64>()
            .map(Node::Const)
            .map_err(|_| Error::Expr(format!("bad number literal `{text}`")))
    }

    fn identifier(&mut self) -> Result<Node> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.chars.len() {
            let c = self.chars[self.pos];
            if c.is_ascii_alphanumeric() || c == '_' {
                self.pos += 1;
            } else {
                break;
            }
        }
        let name: String = self.chars[start..self.pos].iter().collect();
        if let Some(i) = self.vars.iter().position(|v| *v == name) {
            return Ok(Node::Var(i));
        }
        match name.as_str() {
            "pi" => return Ok(Node::Const(std::f64::consts::PI)),
            "e" => return Ok(Node::Const(std::f64::consts::E)),
            "inf" => return Ok(Node::Const(f64::INFINITY)),
            _ => {}
        }
        let f1 = match name.as_str() {
            "exp" => Some(Func1::Exp),
            "ln" | "log" => Some(Func1::Ln),
            "sqrt" => Some(Func1::Sqrt),
            "sin" => Some(Func1::Sin),
            "cos" => Some(Func1::Cos),
            "tan" => Some(Func1::Tan),
            "abs" => Some(Func1::Abs),
            _ => None,
        };
        if let Some(f) = f1 {
            self.expect('(')?;
            let arg = self.expression()?;
            self.expect(')')?;
            return Ok(Node::Call1(f, Box::new(arg)));
        }
        let f2 = match name.as_str() {
            "min" => Some(Func2::Min),
            "max" => Some(Func2::Max),
            _ => None,
        };
        if let Some(f) = f2 {
            self.expect('(')?;
            let a = self.expression()?;
            self.expect(',')?;
            let b = self.expression()?;
            self.expect(')')?;
            return Ok(Node::Call2(f, Box::new(a), Box::new(b)));
        }
        Err(Error::Expr(format!(
            "unknown identifier `{name}` (variables here: {:?})",
            self.vars
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_and_precedence() {
        let e = Expr::parse("1 + 2 * 3 ^ 2", &[]).unwrap();
        assert_eq!(e.eval(&[]), 19.0);
        let e = Expr::parse("(1 + 2) * 3", &[]).unwrap();
        assert_eq!(e.eval(&[]), 9.0);
        let e = Expr::parse("2 ^ 3 ^ 2", &[]).unwrap();
        assert_eq!(e.eval(&[]), 512.0);
        let e = Expr::parse("-t^2", &["t"]).unwrap();
        assert_eq!(e.eval(&[3.0]), -9.0);
    }

    #[test]
    fn functions_and_constants() {
        let e = Expr::parse("exp(1)", &[]).unwrap();
        assert!((e.eval(&[]) - std::f64::consts::E).abs() < 1e-15);
        let e = Expr::parse("min(t, 1 - t) * max(u, 0)", &["t", "u"]).unwrap();
        assert_eq!(e.eval(&[0.25, -3.0]), 0.0);
        assert_eq!(e.eval(&[0.75, 2.0]), 0.5);
        let e = Expr::parse("abs(-2) + sqrt(9)", &[]).unwrap();
        assert_eq!(e.eval(&[]), 5.0);
        assert!(Expr::parse("inf", &[]).unwrap().eval(&[]).is_infinite());
    }

    #[test]
    fn example_nonlinearity() {
        let f = Expr::parse("t * u^2", &["t", "u", "v"]).unwrap();
        assert_eq!(f.eval(&[0.5, 3.0, 0.0]), 4.5);
    }

    #[test]
    fn rejects_unknown_names_and_garbage() {
        assert!(Expr::parse("t + q", &["t"]).is_err());
        assert!(Expr::parse("1 +", &[]).is_err());
        assert!(Expr::parse("sin(1", &[]).is_err());
        assert!(Expr::parse("1 2", &[]).is_err());
    }

    #[test]
    fn scientific_notation() {
        let e = Expr::parse("1e-3 + 2.5E+2", &[]).unwrap();
        assert_eq!(e.eval(&[]), 250.001);
    }
}
