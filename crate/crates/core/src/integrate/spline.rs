//! Univariate piecewise polynomials and the exact density of a sum of
//! independent uniforms (a generalized Irwin–Hall spline).

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Dense univariate polynomial, coefficients in ascending degree.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct UPoly(pub Vec<BigRational>);

impl UPoly {
    pub fn zero() -> Self {
        UPoly(Vec::new())
    }

    pub fn constant(c: BigRational) -> Self {
        UPoly(vec![c]).trimmed()
    }

    fn trimmed(mut self) -> Self {
        while self.0.last().is_some_and(Zero::is_zero) {
            self.0.pop();
        }
        self
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn eval(&self, s: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.0.iter().rev() {
            acc = acc * s + c;
        }
        acc
    }

    pub fn eval_f64(&self, s: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * s + crate::rational::to_f64(c))
    }

    pub fn add(&self, other: &UPoly) -> UPoly {
        let n = self.0.len().max(other.0.len());
        let z = BigRational::zero();
        UPoly(
            (0..n)
                .map(|i| self.0.get(i).unwrap_or(&z) + other.0.get(i).unwrap_or(&z))
                .collect(),
        )
        .trimmed()
    }

    pub fn sub(&self, other: &UPoly) -> UPoly {
        self.add(&other.scale(&-BigRational::one()))
    }

    pub fn scale(&self, k: &BigRational) -> UPoly {
        UPoly(self.0.iter().map(|c| c * k).collect()).trimmed()
    }

    pub fn mul(&self, other: &UPoly) -> UPoly {
        if self.0.is_empty() || other.0.is_empty() {
            return UPoly::zero();
        }
        let mut out = vec![BigRational::zero(); self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        UPoly(out).trimmed()
    }

    /// Antiderivative vanishing at zero.
    pub fn antiderivative(&self) -> UPoly {
        let mut out = vec![BigRational::zero()];
        for (i, c) in self.0.iter().enumerate() {
            out.push(c / BigRational::from_integer(BigInt::from(i + 1)));
        }
        UPoly(out).trimmed()
    }

    /// `s ↦ p(s + c)`.
    pub fn shift(&self, c: &BigRational) -> UPoly {
        if c.is_zero() {
            return self.clone();
        }
        let lin = UPoly(vec![c.clone(), BigRational::one()]);
        let mut acc = UPoly::zero();
        for k in self.0.iter().rev() {
            acc = acc.mul(&lin).add(&UPoly::constant(k.clone()));
        }
        acc
    }

    /// `∫_a^b p(s) ds`.
    pub fn integral(&self, a: &BigRational, b: &BigRational) -> BigRational {
        let f = self.antiderivative();
        f.eval(b) - f.eval(a)
    }
}

/// Piecewise polynomial: piece `i` lives on `[breaks[i], breaks[i+1]]`,
/// zero outside `[breaks[0], breaks[last]]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Piecewise {
    pub breaks: Vec<BigRational>,
    pub pieces: Vec<UPoly>,
}

impl Piecewise {
    pub fn new(breaks: Vec<BigRational>, pieces: Vec<UPoly>) -> Result<Self> {
        if breaks.len() != pieces.len() + 1 || breaks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invalid("piecewise breakpoints must be strictly increasing, one more than pieces".into()));
        }
        Ok(Piecewise { breaks, pieces })
    }

    pub fn single(lo: BigRational, hi: BigRational, p: UPoly) -> Result<Self> {
        Self::new(vec![lo, hi], vec![p])
    }

    pub fn num_pieces(&self) -> usize {
        self.pieces.len()
    }

    pub fn support(&self) -> (&BigRational, &BigRational) {
        (&self.breaks[0], &self.breaks[self.breaks.len() - 1])
    }

    fn locate(&self, s: &BigRational) -> Option<usize> {
        if s < &self.breaks[0] || s >= self.breaks.last().unwrap() {
            return None;
        }
        match self.breaks.binary_search_by(|b| b.cmp(s)) {
            Ok(i) => Some(i),
            Err(i) => Some(i - 1),
        }
    }

    pub fn eval(&self, s: &BigRational) -> BigRational {
        match self.locate(s) {
            Some(i) => self.pieces[i].eval(s),
            None if s == self.breaks.last().unwrap() => self.pieces.last().unwrap().eval(s),
            None => BigRational::zero(),
        }
    }

    pub fn total(&self) -> BigRational {
        self.pieces
            .iter()
            .enumerate()
            .map(|(i, p)| p.integral(&self.breaks[i], &self.breaks[i + 1]))
            .fold(BigRational::zero(), |a, b| a + b)
    }

    /// Joins neighbours with identical polynomials and drops zero tails.
    pub fn merged(self) -> Self {
        let mut breaks = vec![self.breaks[0].clone()];
        let mut pieces: Vec<UPoly> = Vec::new();
        for (i, p) in self.pieces.into_iter().enumerate() {
            if pieces.last() == Some(&p) {
                *breaks.last_mut().unwrap() = self.breaks[i + 1].clone();
            } else {
                pieces.push(p);
                breaks.push(self.breaks[i + 1].clone());
            }
        }
        while pieces.len() > 1 && pieces[0].is_zero() {
            pieces.remove(0);
            breaks.remove(0);
        }
        while pieces.len() > 1 && pieces.last().unwrap().is_zero() {
            pieces.pop();
            breaks.pop();
        }
        Piecewise { breaks, pieces }
    }

    /// Cumulative integral, continuous; constant `total` right of the support.
    fn cumulative(&self) -> Vec<UPoly> {
        let mut acc = BigRational::zero();
        let mut out = Vec::with_capacity(self.pieces.len());
        for (i, p) in self.pieces.iter().enumerate() {
            let f = p.antiderivative();
            let at = f.eval(&self.breaks[i]);
            out.push(f.add(&UPoly::constant(&acc - &at)));
            acc += f.eval(&self.breaks[i + 1]) - at;
        }
        out
    }

    /// Density of `S + X` with `X ~ Uniform[lo, hi]` independent of `S ~ self`.
    pub fn convolve_uniform(&self, lo: &BigRational, hi: &BigRational, max_pieces: usize) -> Result<Piecewise> {
        let width = hi - lo;
        let cum = self.cumulative();
        let total = UPoly::constant(self.total());
        let mut knots: Vec<BigRational> = self
            .breaks
            .iter()
            .flat_map(|b| [b + lo, b + hi])
            .collect();
        knots.sort();
        knots.dedup();
        if knots.len() > max_pieces + 1 {
            return Err(Error::capacity("spline pieces", max_pieces));
        }
        let two = BigRational::from_integer(2.into());
        let inv = BigRational::one() / &width;
        let cum_at = |t: &BigRational| -> UPoly {
            match self.locate(t) {
                Some(i) => cum[i].clone(),
                None if t < &self.breaks[0] => UPoly::zero(),
                None => total.clone(),
            }
        };
        let pieces: Vec<UPoly> = knots
            .windows(2)
            .map(|w| {
                let mid = (&w[0] + &w[1]) / &two;
                let a = cum_at(&(&mid - lo)).shift(&-lo.clone());
                let b = cum_at(&(&mid - hi)).shift(&-hi.clone());
                a.sub(&b).scale(&inv)
            })
            .collect();
        Ok(Piecewise { breaks: knots, pieces }.merged())
    }

    /// `∫ self(s)·other(s) ds`.
    pub fn inner(&self, other: &Piecewise) -> BigRational {
        let mut acc = BigRational::zero();
        let (mut i, mut j) = (0, 0);
        while i < self.pieces.len() && j < other.pieces.len() {
            let lo = (&self.breaks[i]).max(&other.breaks[j]);
            let hi = (&self.breaks[i + 1]).min(&other.breaks[j + 1]);
            if lo < hi {
                acc += self.pieces[i].mul(&other.pieces[j]).integral(lo, hi);
            }
            match self.breaks[i + 1].cmp(&other.breaks[j + 1]) {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => {
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }
}

/// One summand `X ~ Uniform[lo, lo + width]` of a linear functional.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformTerm {
    pub lo: BigRational,
    pub width: BigRational,
}

/// Upper bound on the knot count of the density of `Σ X_i`: the subset-sum
/// count `2^n`, or the size of the lattice generated by the widths.
pub fn knot_bound(terms: &[UniformTerm]) -> Option<u128> {
    let widths: Vec<&BigRational> = terms.iter().map(|t| &t.width).filter(|w| w.is_positive()).collect();
    let subset = if widths.len() < 120 { Some(1u128 << widths.len()) } else { None };
    let g = widths.iter().skip(1).fold(widths.first().map(|w| (*w).clone()), |g, w| g.map(|g| rational_gcd(&g, w)));
    let lattice = g.and_then(|g| {
        let total: BigRational = widths.iter().fold(BigRational::zero(), |a, w| a + *w);
        let n = (total / g).to_integer() + BigInt::one();
        u128::try_from(n).ok()
    });
    match (subset, lattice) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    }
}

fn rational_gcd(a: &BigRational, b: &BigRational) -> BigRational {
    let num = (a.numer() * b.denom()).gcd(&(b.numer() * a.denom()));
    BigRational::new(num, a.denom() * b.denom())
}

/// Exact density of `Σ X_i`; `None` when every width is zero (a point mass at the
/// returned offset is then the law).
pub fn uniform_sum_density(terms: &[UniformTerm], max_pieces: usize) -> Result<(Option<Piecewise>, BigRational)> {
    match knot_bound(terms) {
        Some(n) if n <= max_pieces as u128 + 1 => {}
        _ => return Err(Error::capacity("spline pieces", max_pieces)),
    }
    let mut offset = BigRational::zero();
    let mut density: Option<Piecewise> = None;
    let mut order: Vec<&UniformTerm> = terms.iter().collect();
    // Equal widths first keeps intermediate splines on a common lattice.
    order.sort_by(|a, b| a.width.cmp(&b.width));
    for t in order {
        if !t.width.is_positive() {
            offset += &t.lo;
            continue;
        }
        let hi = &t.lo + &t.width;
        density = Some(match density {
            None => Piecewise::single(t.lo.clone(), hi, UPoly::constant(BigRational::one() / &t.width))?,
            Some(d) => d.convolve_uniform(&t.lo, &hi, max_pieces)?,
        });
    }
    Ok((density, offset))
}

/// `E[(Σ X_i)^k]` for `k = 0..=max_degree`, exactly.
pub fn uniform_sum_moments(terms: &[UniformTerm], max_degree: usize) -> Vec<BigRational> {
    let mut m = vec![BigRational::zero(); max_degree + 1];
    m[0] = BigRational::one();
    let binom = binomials(max_degree);
    for t in terms {
        let hi = &t.lo + &t.width;
        let own: Vec<BigRational> = (0..=max_degree)
            .map(|j| {
                if t.width.is_zero() {
                    crate::rational::pow(&t.lo, j as u32)
                } else {
                    let e = (j + 1) as u32;
                    (crate::rational::pow(&hi, e) - crate::rational::pow(&t.lo, e))
                        / (BigRational::from_integer(BigInt::from(j + 1)) * &t.width)
                }
            })
            .collect();
        m = (0..=max_degree)
            .map(|k| {
                (0..=k).fold(BigRational::zero(), |acc, j| {
                    acc + &binom[k][j] * &m[j] * &own[k - j]
                })
            })
            .collect();
    }
    m
}

fn binomials(n: usize) -> Vec<Vec<BigRational>> {
    let mut rows: Vec<Vec<BigRational>> = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let mut row = vec![BigRational::one(); k + 1];
        for j in 1..k {
            row[j] = &rows[k - 1][j - 1] + &rows[k - 1][j];
        }
        rows.push(row);
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn unit(lo: i64, w: i64) -> UniformTerm {
        UniformTerm { lo: int(lo), width: int(w) }
    }

    #[test]
    fn irwin_hall_two() {
        let (d, off) = uniform_sum_density(&[unit(0, 1), unit(0, 1)], 100).unwrap();
        let d = d.unwrap();
        assert_eq!(off, int(0));
        assert_eq!(d.num_pieces(), 2);
        assert_eq!(d.eval(&int(1)), int(1));
        assert_eq!(d.eval(&ratio(1, 2)), ratio(1, 2));
        assert_eq!(d.total(), int(1));
    }

    #[test]
    fn irwin_hall_knots_stay_linear() {
        let terms: Vec<UniformTerm> = (0..12).map(|_| unit(0, 1)).collect();
        let (d, _) = uniform_sum_density(&terms, 100).unwrap();
        let d = d.unwrap();
        assert_eq!(d.num_pieces(), 12);
        assert_eq!(d.total(), int(1));
        assert_eq!(knot_bound(&terms), Some(13));
    }

    #[test]
    fn moments_match_density() {
        let terms = vec![
            UniformTerm { lo: ratio(-1, 2), width: ratio(3, 2) },
            UniformTerm { lo: int(2), width: ratio(1, 3) },
            UniformTerm { lo: int(1), width: int(0) },
        ];
        let (d, off) = uniform_sum_density(&terms, 1000).unwrap();
        let d = d.unwrap();
        let m = uniform_sum_moments(&terms, 3);
        for k in 0..=3usize {
            let mut coeffs = vec![int(0); k + 1];
            coeffs[k] = int(1);
            let g = Piecewise::single(d.breaks[0].clone(), d.support().1.clone(), UPoly(coeffs).shift(&off)).unwrap();
            assert_eq!(g.inner(&d), m[k], "moment {k}");
        }
    }

    #[test]
    fn capacity_for_incommensurate_widths() {
        let terms: Vec<UniformTerm> = (0..20)
            .map(|i| UniformTerm {
                lo: int(0),
                width: ratio(1000 + 7 * i * i + 1, 997 + i),
            })
            .collect();
        assert!(uniform_sum_density(&terms, 5000).unwrap_err().is_capacity());
    }

    #[test]
    fn shift_and_integral() {
        let p = UPoly(vec![int(0), int(0), int(1)]);
        assert_eq!(p.shift(&int(1)), UPoly(vec![int(1), int(2), int(1)]));
        assert_eq!(p.integral(&int(0), &int(3)), int(9));
    }
}
