//! `∫_box g(a·w + c) dw` for a piecewise polynomial `g`.

use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::integrate::cell::IntegrationResult;
use crate::integrate::spline::{uniform_sum_density, uniform_sum_moments, Piecewise, UniformTerm};
use crate::linear::LinearExpr;
use crate::lra::BoxDomain;

/// Default cap on exact spline pieces.
pub const DEFAULT_MAX_PIECES: usize = 4096;

/// Summands of `a·w + c` under the uniform law on `domain`.
pub fn functional_terms(a: &LinearExpr, domain: &BoxDomain) -> Result<Vec<UniformTerm>> {
    let mut terms = vec![UniformTerm {
        lo: a.constant_term().clone(),
        width: BigRational::zero(),
    }];
    for (v, c) in a.coeffs() {
        let (l, h) = domain.get(*v).ok_or_else(|| Error::Unbounded(v.to_string()))?;
        let (x, y) = (c * l, c * h);
        let lo = if x < y { x.clone() } else { y.clone() };
        terms.push(UniformTerm {
            lo,
            width: (y - x).abs(),
        });
    }
    Ok(terms)
}

/// `E[g(S)]` exactly. A single polynomial piece covering the support of `S`
/// uses moments; otherwise the density spline is built, subject to `max_pieces`.
pub fn expectation_exact(g: &Piecewise, terms: &[UniformTerm], max_pieces: usize) -> Result<BigRational> {
    let lo: BigRational = terms.iter().fold(BigRational::zero(), |acc, t| acc + &t.lo);
    let hi: BigRational = terms.iter().fold(lo.clone(), |acc, t| acc + &t.width);
    let (gl, gh) = g.support();
    if g.num_pieces() == 1 && *gl <= lo && hi <= *gh {
        let piece = &g.pieces[0];
        let m = uniform_sum_moments(terms, piece.degree());
        return Ok(piece.0.iter().zip(&m).fold(BigRational::zero(), |acc, (c, mk)| acc + c * mk));
    }
    let (density, offset) = uniform_sum_density(terms, max_pieces)?;
    match density {
        None => Ok(g.eval(&offset)),
        Some(d) => {
            let shifted = Piecewise {
                breaks: d.breaks.iter().map(|b| b + &offset).collect(),
                pieces: d.pieces.iter().map(|p| p.shift(&-offset.clone())).collect(),
            };
            Ok(g.inner(&shifted))
        }
    }
}

/// `∫_domain g(a·w + c) dw` where the box may contain variables `a` ignores.
pub fn integrate_linear_functional(g: &Piecewise, a: &LinearExpr, domain: &BoxDomain, max_pieces: usize) -> Result<IntegrationResult> {
    let terms = functional_terms(a, domain)?;
    let e = expectation_exact(g, &terms, max_pieces)?;
    Ok(IntegrationResult {
        value: domain.volume() * e,
        cells_split: 0,
    })
}
