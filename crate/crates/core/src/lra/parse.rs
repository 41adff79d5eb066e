//! S-expression syntax for formulas and polynomials.
//!
//! ```text
//! formula := true | false | (and f*) | (or f*) | (not f) | (=> f f)
//!          | (<= e e+) | (< e e+) | (>= e e+) | (> e e+) | (= e e+)
//! expr    := number | name | (+ e*) | (- e e*) | (* e+) | (/ e number) | (^ e k)
//! ```
//!
//! Numbers are integers, `p/q` fractions or decimals. `;` starts a comment.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::linear::{LinearExpr, VarTable};
use crate::lra::atom::{Atom, Cmp};
use crate::lra::formula::Formula;
use crate::poly::Polynomial;
use crate::rational;

#[derive(Debug, Clone)]
enum Sexp {
    Token { text: String, line: usize, column: usize },
    List { items: Vec<Sexp>, line: usize, column: usize },
}

impl Sexp {
    fn pos(&self) -> (usize, usize) {
        match self {
            Sexp::Token { line, column, .. } | Sexp::List { line, column, .. } => (*line, *column),
        }
    }

    fn error(&self, message: impl Into<String>) -> Error {
        let (line, column) = self.pos();
        Error::Syntax {
            line,
            column,
            message: message.into(),
        }
    }
}

fn read(text: &str) -> Result<Sexp> {
    let mut stack: Vec<(Vec<Sexp>, usize, usize)> = Vec::new();
    let mut done: Option<Sexp> = None;
    let mut chars = text.chars().peekable();
    let (mut line, mut column) = (1usize, 1usize);
    let err = |line, column, message: &str| Error::Syntax {
        line,
        column,
        message: message.to_string(),
    };
    while let Some(&c) = chars.peek() {
        let (l, col) = (line, column);
        if c == '\n' {
            chars.next();
            line += 1;
            column = 1;
            continue;
        }
        if c.is_whitespace() {
            chars.next();
            column += 1;
            continue;
        }
        if c == ';' {
            while let Some(&c) = chars.peek() {
                if c == '\n' {
                    break;
                }
                chars.next();
            }
            continue;
        }
        if done.is_some() {
            return Err(err(l, col, "trailing input after expression"));
        }
        match c {
            '(' => {
                chars.next();
                column += 1;
                stack.push((Vec::new(), l, col));
            }
            ')' => {
                chars.next();
                column += 1;
                let (items, line0, col0) = stack.pop().ok_or_else(|| err(l, col, "unbalanced `)`"))?;
                let node = Sexp::List {
                    items,
                    line: line0,
                    column: col0,
                };
                match stack.last_mut() {
                    Some((parent, _, _)) => parent.push(node),
                    None => done = Some(node),
                }
            }
            _ => {
                let mut tok = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    tok.push(c);
                    chars.next();
                    column += 1;
                }
                let node = Sexp::Token {
                    text: tok,
                    line: l,
                    column: col,
                };
                match stack.last_mut() {
                    Some((parent, _, _)) => parent.push(node),
                    None => done = Some(node),
                }
            }
        }
    }
    if let Some((_, l, c)) = stack.last() {
        return Err(err(*l, *c, "unclosed `(`"));
    }
    done.ok_or_else(|| err(line, column, "empty input"))
}

/// Parser state: the variable table and named constants.
pub struct Parser<'a> {
    vars: &'a mut VarTable,
    constants: BTreeMap<String, BigRational>,
    declare: bool,
}

impl<'a> Parser<'a> {
    /// Unknown names are rejected.
    pub fn new(vars: &'a mut VarTable) -> Self {
        Parser {
            vars,
            constants: BTreeMap::new(),
            declare: false,
        }
    }

    /// Unknown names are declared as fresh variables.
    pub fn declaring(vars: &'a mut VarTable) -> Self {
        Parser {
            vars,
            constants: BTreeMap::new(),
            declare: true,
        }
    }

    /// Binds `name` to a constant; it then never becomes a variable.
    pub fn bind(mut self, name: &str, value: BigRational) -> Self {
        self.constants.insert(name.to_string(), value);
        self
    }

    pub fn formula(&mut self, text: &str) -> Result<Formula> {
        let s = read(text)?;
        self.formula_of(&s)
    }

    pub fn polynomial(&mut self, text: &str) -> Result<Polynomial> {
        let s = read(text)?;
        self.poly_of(&s)
    }

    pub fn linear(&mut self, text: &str) -> Result<LinearExpr> {
        let s = read(text)?;
        self.linear_of(&s)
    }

    fn formula_of(&mut self, s: &Sexp) -> Result<Formula> {
        match s {
            Sexp::Token { text, .. } => match text.as_str() {
                "true" => Ok(Formula::True),
                "false" => Ok(Formula::False),
                _ => Err(s.error(format!("expected a formula, found `{text}`"))),
            },
            Sexp::List { items, .. } => {
                let (head, args) = split_head(s, items)?;
                match head {
                    "and" => Ok(Formula::And(self.formulas(args)?)),
                    "or" => Ok(Formula::Or(self.formulas(args)?)),
                    "not" => {
                        let [f] = args else {
                            return Err(s.error("`not` takes one argument"));
                        };
                        Ok(Formula::not(self.formula_of(f)?))
                    }
                    "=>" => {
                        let [a, b] = args else {
                            return Err(s.error("`=>` takes two arguments"));
                        };
                        Ok(Formula::implies(self.formula_of(a)?, self.formula_of(b)?))
                    }
                    "<=" | "<" | ">=" | ">" | "=" => {
                        let op = match head {
                            "<=" => Cmp::Le,
                            "<" => Cmp::Lt,
                            ">=" => Cmp::Ge,
                            ">" => Cmp::Gt,
                            _ => Cmp::Eq,
                        };
                        if args.len() < 2 {
                            return Err(s.error(format!("`{head}` takes at least two arguments")));
                        }
                        let exprs = args.iter().map(|a| self.linear_of(a)).collect::<Result<Vec<_>>>()?;
                        let mut atoms: Vec<Formula> = exprs
                            .windows(2)
                            .map(|w| Formula::Atom(Atom::compare(w[0].clone(), op, w[1].clone())))
                            .collect();
                        if atoms.len() == 1 {
                            Ok(atoms.pop().unwrap())
                        } else {
                            Ok(Formula::And(atoms))
                        }
                    }
                    _ => Err(s.error(format!("unknown connective `{head}`"))),
                }
            }
        }
    }

    fn formulas(&mut self, args: &[Sexp]) -> Result<Vec<Formula>> {
        args.iter().map(|a| self.formula_of(a)).collect()
    }

    fn linear_of(&mut self, s: &Sexp) -> Result<LinearExpr> {
        let p = self.poly_of(s)?;
        p.to_linear().ok_or_else(|| Error::Nonlinear(p.display(self.vars).to_string()))
    }

    fn poly_of(&mut self, s: &Sexp) -> Result<Polynomial> {
        match s {
            Sexp::Token { text, .. } => {
                if let Some(c) = self.constants.get(text) {
                    return Ok(Polynomial::constant(c.clone()));
                }
                if looks_numeric(text) {
                    return rational::parse(text)
                        .map(Polynomial::constant)
                        .map_err(|_| s.error(format!("malformed number `{text}`")));
                }
                if !is_identifier(text) {
                    return Err(s.error(format!("unexpected token `{text}`")));
                }
                let v = match self.vars.lookup(text) {
                    Some(v) => v,
                    None if self.declare => self.vars.declare(text),
                    None => return Err(Error::UnknownVariable(text.clone())),
                };
                Ok(Polynomial::var(v))
            }
            Sexp::List { items, .. } => {
                let (head, args) = split_head(s, items)?;
                match head {
                    "+" => {
                        let mut acc = Polynomial::zero();
                        for a in args {
                            acc = acc + self.poly_of(a)?;
                        }
                        Ok(acc)
                    }
                    "-" => match args {
                        [] => Err(s.error("`-` takes at least one argument")),
                        [a] => Ok(-self.poly_of(a)?),
                        [a, rest @ ..] => {
                            let mut acc = self.poly_of(a)?;
                            for b in rest {
                                acc = acc - self.poly_of(b)?;
                            }
                            Ok(acc)
                        }
                    },
                    "*" => {
                        if args.is_empty() {
                            return Err(s.error("`*` takes at least one argument"));
                        }
                        let mut acc = Polynomial::one();
                        for a in args {
                            acc = &acc * &self.poly_of(a)?;
                        }
                        Ok(acc)
                    }
                    "/" => {
                        let [a, b] = args else {
                            return Err(s.error("`/` takes two arguments"));
                        };
                        let num = self.poly_of(a)?;
                        let den = self
                            .poly_of(b)?
                            .as_constant()
                            .ok_or_else(|| b.error("divisor must be a constant"))?;
                        if den.is_zero() {
                            return Err(Error::DivisionByZero("constant divisor"));
                        }
                        Ok(num.scale(&(BigRational::one() / den)))
                    }
                    "^" => {
                        let [a, k] = args else {
                            return Err(s.error("`^` takes two arguments"));
                        };
                        let base = self.poly_of(a)?;
                        let Sexp::Token { text, .. } = k else {
                            return Err(k.error("exponent must be a non-negative integer"));
                        };
                        let k: u32 = text.parse().map_err(|_| k.error("exponent must be a non-negative integer"))?;
                        Ok(base.pow(k))
                    }
                    _ => Err(s.error(format!("unknown operator `{head}`"))),
                }
            }
        }
    }
}

fn split_head<'s>(s: &Sexp, items: &'s [Sexp]) -> Result<(&'s str, &'s [Sexp])> {
    match items.split_first() {
        Some((Sexp::Token { text, .. }, rest)) => Ok((text.as_str(), rest)),
        Some((other, _)) => Err(other.error("expected an operator")),
        None => Err(s.error("empty list")),
    }
}

fn looks_numeric(t: &str) -> bool {
    let t = t.strip_prefix('-').unwrap_or(t);
    t.starts_with(|c: char| c.is_ascii_digit() || c == '.')
}

fn is_identifier(t: &str) -> bool {
    t.chars().next().is_some_and(|c| c.is_alphabetic() || c == '_')
        && t.chars().all(|c| c.is_alphanumeric() || "_.'[]".contains(c))
}

/// Parses a formula, declaring unknown variables.
pub fn parse_formula(text: &str, vars: &mut VarTable) -> Result<Formula> {
    Parser::declaring(vars).formula(text)
}

/// Parses a polynomial, declaring unknown variables.
pub fn parse_polynomial(text: &str, vars: &mut VarTable) -> Result<Polynomial> {
    Parser::declaring(vars).polynomial(text)
}
