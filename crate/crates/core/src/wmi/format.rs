//! JSON problem files.
//!
//! ```json
//! {
//!   "variables": [{"name": "w", "lower": -3, "upper": 3}],
//!   "formula": "(and (<= -3 w) (<= w 3))",
//!   "weights": [
//!     {"literal": "(> w 0)", "poly": [{"coeff": "1/6", "monomial": {"w": 1}}]},
//!     {"literal": "(<= w 0)", "poly": "0"}
//!   ],
//!   "query": {"type": "value"}
//! }
//! ```
//!
//! Numbers may be JSON numbers or strings (`"1/6"`, `"-0.25"`); a weight's
//! `poly` may be a term list or an s-expression string.
//!
//! A file may instead hold `{"fragments": [problem, ...], "query": ...}`:
//! problems over disjoint regions whose values add up. Each fragment
//! resolves the query variable by name.

use std::collections::BTreeMap;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linear::{Var, VarTable};
use crate::lra::{BoxDomain, Formula, Parser};
use crate::poly::{Monomial, Polynomial};
use crate::rational;
use crate::wmi::problem::{Literal, Weight, WmiProblem};

#[derive(Debug, Clone, PartialEq)]
pub enum Query {
    Value,
    Density { var: Var, at: BigRational },
    Expectation { var: Var },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum Num {
    Number(serde_json::Number),
    Text(String),
}

impl Num {
    fn value(&self) -> Result<BigRational> {
        match self {
            Num::Number(n) => rational::parse(&n.to_string()),
            Num::Text(s) => rational::parse(s.trim()),
        }
    }

    fn exact(q: &BigRational) -> Num {
        Num::Text(q.to_string())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VarSpec {
    name: String,
    lower: Num,
    upper: Num,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermSpec {
    coeff: Num,
    #[serde(default)]
    monomial: BTreeMap<String, u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum PolySpec {
    Terms(Vec<TermSpec>),
    Expr(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightSpec {
    literal: String,
    poly: PolySpec,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum QueryKind {
    Value,
    Density,
    Expectation,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct QuerySpec {
    #[serde(rename = "type")]
    kind: QueryKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    var: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    at: Option<Num>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    variables: Vec<VarSpec>,
    formula: String,
    #[serde(default)]
    weights: Vec<WeightSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    query: Option<QuerySpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FragmentFile {
    fragments: Vec<ProblemFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    query: Option<QuerySpec>,
}

fn syntax(e: serde_json::Error) -> Error {
    Error::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

/// Parses a single-problem file. A missing query means [`Query::Value`].
pub fn from_json(text: &str) -> Result<(WmiProblem, Query)> {
    let file: ProblemFile = serde_json::from_str(text).map_err(syntax)?;
    build(&file, file.query.as_ref())
}

/// Parses a single-problem or fragment file into its summands.
pub fn from_json_fragments(text: &str) -> Result<Vec<(WmiProblem, Query)>> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(syntax)?;
    if value.get("fragments").is_none() {
        return Ok(vec![from_json(text)?]);
    }
    let file: FragmentFile = serde_json::from_str(text).map_err(syntax)?;
    if file.fragments.is_empty() {
        return Err(Error::Invalid("no fragments".into()));
    }
    file.fragments
        .iter()
        .map(|f| {
            if f.query.is_some() {
                return Err(Error::Invalid("a fragment cannot carry its own query".into()));
            }
            build(f, file.query.as_ref())
        })
        .collect()
}

fn build(file: &ProblemFile, query: Option<&QuerySpec>) -> Result<(WmiProblem, Query)> {
    let mut vars = VarTable::new();
    let mut domain = BoxDomain::new();
    for spec in &file.variables {
        if vars.lookup(&spec.name).is_some() {
            return Err(Error::Invalid(format!("variable `{}` declared twice", spec.name)));
        }
        let v = vars.declare(&spec.name);
        domain.set(v, spec.lower.value()?, spec.upper.value()?);
    }
    let delta = Parser::new(&mut vars).formula(&file.formula)?;
    let mut weights = Vec::new();
    for w in &file.weights {
        let literal = if w.literal.trim() == "true" {
            Literal::True
        } else {
            Literal::from_formula(&Parser::new(&mut vars).formula(&w.literal)?)?
        };
        let poly = match &w.poly {
            PolySpec::Expr(s) => Parser::new(&mut vars).polynomial(s)?,
            PolySpec::Terms(terms) => {
                let mut p = Polynomial::zero();
                for t in terms {
                    let mut powers = Vec::new();
                    for (name, e) in &t.monomial {
                        let v = vars.lookup(name).ok_or_else(|| Error::UnknownVariable(name.clone()))?;
                        powers.push((v, *e));
                    }
                    p.add_term(Monomial::new(powers), t.coeff.value()?);
                }
                p
            }
        };
        weights.push(Weight::new(literal, poly));
    }
    let query = match query {
        None => Query::Value,
        Some(q) => {
            let var = || -> Result<Var> {
                let name = q.var.as_ref().ok_or_else(|| Error::Invalid("query needs `var`".into()))?;
                vars.lookup(name).ok_or_else(|| Error::UnknownVariable(name.clone()))
            };
            match q.kind {
                QueryKind::Value => Query::Value,
                QueryKind::Expectation => Query::Expectation { var: var()? },
                QueryKind::Density => Query::Density {
                    var: var()?,
                    at: q
                        .at
                        .as_ref()
                        .ok_or_else(|| Error::Invalid("density query needs `at`".into()))?
                        .value()?,
                },
            }
        }
    };
    let problem = WmiProblem::new(vars, delta, weights, domain);
    problem.validate()?;
    Ok((problem, query))
}

/// Serializes a problem with exact coefficients.
pub fn to_json(p: &WmiProblem, query: &Query) -> String {
    serde_json::to_string_pretty(&problem_file(p, query)).expect("problem files always serialize")
}

/// Serializes summands as a fragment file; the query is taken from the first.
pub fn to_json_fragments(fragments: &[WmiProblem], query: &Query) -> String {
    let mut files: Vec<ProblemFile> = fragments.iter().map(|p| problem_file(p, query)).collect();
    let query = files.first_mut().and_then(|f| f.query.take());
    for f in &mut files {
        f.query = None;
    }
    serde_json::to_string_pretty(&FragmentFile { fragments: files, query }).expect("problem files always serialize")
}

fn problem_file(p: &WmiProblem, query: &Query) -> ProblemFile {
    let variables = p
        .domain
        .iter()
        .map(|(v, l, h)| VarSpec {
            name: p.vars.name(v).to_string(),
            lower: Num::exact(l),
            upper: Num::exact(h),
        })
        .collect();
    let weights = p
        .weights
        .iter()
        .map(|w| WeightSpec {
            literal: match &w.literal {
                Literal::True => "true".to_string(),
                Literal::Atom(a) => Formula::Atom(a.clone()).display(&p.vars).to_string(),
            },
            poly: PolySpec::Terms(
                w.poly
                    .terms()
                    .map(|(m, c)| TermSpec {
                        coeff: Num::exact(c),
                        monomial: m.powers().iter().map(|(v, e)| (p.vars.name(*v).to_string(), *e)).collect(),
                    })
                    .collect(),
            ),
        })
        .collect();
    let query = match query {
        Query::Value => None,
        Query::Density { var, at } => Some(QuerySpec {
            kind: QueryKind::Density,
            var: Some(p.vars.name(*var).to_string()),
            at: Some(Num::exact(at)),
        }),
        Query::Expectation { var } => Some(QuerySpec {
            kind: QueryKind::Expectation,
            var: Some(p.vars.name(*var).to_string()),
            at: None,
        }),
    };
    ProblemFile {
        variables,
        formula: p.delta.display(&p.vars).to_string(),
        weights,
        query,
    }
}
