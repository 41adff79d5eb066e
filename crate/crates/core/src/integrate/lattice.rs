//! Floating-point fallback for the density of a sum of uniforms when the
//! exact spline would need too many knots.
//!
//! Widths are rounded to multiples of a common step `δ`; the resulting density
//! lives on unit cells of the lattice, each carrying a Bernstein polynomial.
//! Widths that round to zero become point masses at their midpoint. The mean
//! of every summand is preserved exactly.

use crate::integrate::spline::{Piecewise, UniformTerm};
use crate::rational::to_f64;

/// Lattice resolution used by the solver.
pub const DEFAULT_RESOLUTION: usize = 65_536;

/// `E[g(Σ X_i)]` in floating point.
pub fn lattice_expectation(g: &Piecewise, terms: &[UniformTerm], resolution: usize) -> f64 {
    let widths: Vec<f64> = terms.iter().map(|t| to_f64(&t.width)).collect();
    let mut offset: f64 = terms.iter().map(|t| to_f64(&t.lo)).sum();
    let total: f64 = widths.iter().sum();
    let gf = FloatPiecewise::from(g);
    if total <= 0.0 {
        return gf.eval(offset);
    }
    let delta = total / resolution.max(1) as f64;
    let mut steps = Vec::new();
    for &c in &widths {
        let k = (c / delta).round() as usize;
        offset += (c - k as f64 * delta) / 2.0;
        if k > 0 {
            steps.push(k);
        }
    }
    let Some(density) = lattice_density(&steps) else {
        return gf.eval(offset);
    };
    let degree = density.degree;
    let stride = degree + 1;
    let mut rules: Vec<Option<Vec<(f64, f64)>>> = Vec::new();
    let mut cuts = Vec::new();
    let mut acc = 0.0;
    for (j, coeffs) in density.cells.chunks_exact(stride).enumerate() {
        let a = offset + delta * j as f64;
        let b = a + delta;
        if b < gf.breaks[0] || a > *gf.breaks.last().unwrap() {
            continue;
        }
        cuts.clear();
        cuts.push(a);
        cuts.extend(gf.breaks.iter().copied().filter(|&x| x > a && x < b));
        cuts.push(b);
        for w in cuts.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let Some(piece) = gf.piece_at(0.5 * (lo + hi)) else {
                continue;
            };
            let n = (piece.len() + degree) / 2 + 2;
            if rules.len() <= n {
                rules.resize(n + 1, None);
            }
            let nodes = rules[n].get_or_insert_with(|| gauss_legendre(n));
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            for &(x, wt) in nodes.iter() {
                let s = mid + half * x;
                let tau = (s - a) / delta;
                acc += wt * half / delta * horner(piece, s) * bernstein(coeffs, tau);
            }
        }
    }
    acc
}

struct LatticeDensity {
    degree: usize,
    /// Bernstein coefficients, `degree + 1` per unit cell.
    cells: Vec<f64>,
}

/// Density of `Σ U[0, k_i]` on unit cells, as Bernstein coefficients.
fn lattice_density(steps: &[usize]) -> Option<LatticeDensity> {
    let (&first, rest) = steps.split_first()?;
    let mut degree = 0;
    let mut cells: Vec<f64> = vec![1.0 / first as f64; first];
    let mut cum: Vec<f64> = Vec::new();
    for &k in rest {
        let n = degree + 1;
        let len = cells.len() / n;
        // Cumulative integral in degree n Bernstein form.
        cum.clear();
        cum.reserve(len * (n + 1));
        let mut base = 0.0;
        for b in cells.chunks_exact(n) {
            let mut run = 0.0;
            cum.push(base);
            for &bi in b {
                run += bi / n as f64;
                cum.push(base + run);
            }
            base += run;
        }
        let inv = 1.0 / k as f64;
        let mut next = Vec::with_capacity((len + k) * (n + 1));
        for j in 0..len + k {
            for i in 0..=n {
                let hi = if j >= len { base } else { cum[j * (n + 1) + i] };
                let lo = if j < k { 0.0 } else { cum[(j - k) * (n + 1) + i] };
                next.push((hi - lo) * inv);
            }
        }
        cells = next;
        degree = n;
    }
    Some(LatticeDensity { degree, cells })
}

fn bernstein(b: &[f64], tau: f64) -> f64 {
    let n = b.len() - 1;
    if n == 0 {
        return b[0];
    }
    // Horner in τ/(1-τ) or its mirror, scaled by the binomials.
    let mirrored = tau > 0.5;
    let t = if mirrored { 1.0 - tau } else { tau };
    let s = 1.0 - t;
    let r = t / s;
    let mut acc = 0.0;
    let mut binom = 1.0;
    let mut rp = 1.0;
    for i in 0..=n {
        let c = if mirrored { b[n - i] } else { b[i] };
        acc += c * binom * rp;
        binom = binom * (n - i) as f64 / (i + 1) as f64;
        rp *= r;
    }
    acc * s.powi(n as i32)
}

fn horner(p: &[f64], s: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, c| acc * s + c)
}

struct FloatPiecewise {
    breaks: Vec<f64>,
    pieces: Vec<Vec<f64>>,
}

impl From<&Piecewise> for FloatPiecewise {
    fn from(g: &Piecewise) -> Self {
        FloatPiecewise {
            breaks: g.breaks.iter().map(to_f64).collect(),
            pieces: g.pieces.iter().map(|p| p.0.iter().map(to_f64).collect()).collect(),
        }
    }
}

impl FloatPiecewise {
    fn piece_at(&self, s: f64) -> Option<&[f64]> {
        if s < self.breaks[0] || s > *self.breaks.last().unwrap() {
            return None;
        }
        let i = self.breaks.partition_point(|&b| b <= s).saturating_sub(1);
        self.pieces.get(i.min(self.pieces.len() - 1)).map(Vec::as_slice)
    }

    fn eval(&self, s: f64) -> f64 {
        self.piece_at(s).map_or(0.0, |p| horner(p, s))
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let n = n.max(1);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::spline::{uniform_sum_density, UPoly};
    use crate::rational::{int, ratio, to_f64};

    #[test]
    fn quadrature_is_exact_for_polynomials() {
        let q = gauss_legendre(5);
        let s: f64 = q.iter().map(|(x, w)| w * x.powi(8)).sum();
        assert!((s - 2.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn bernstein_partition_of_unity() {
        for tau in [0.0, 0.2, 0.5, 0.9, 1.0] {
            assert!((bernstein(&[1.0; 7], tau) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn matches_exact_spline_on_commensurate_widths() {
        let terms = vec![
            UniformTerm { lo: int(-1), width: int(2) },
            UniformTerm { lo: int(0), width: int(1) },
            UniformTerm { lo: ratio(1, 2), width: int(3) },
        ];
        let (d, _) = uniform_sum_density(&terms, 100).unwrap();
        let d = d.unwrap();
        // A triangle bump against the density.
        let g = Piecewise::new(
            vec![int(0), int(1), int(2)],
            vec![UPoly(vec![int(0), int(1)]), UPoly(vec![int(2), int(-1)])],
        )
        .unwrap();
        let exact = to_f64(&g.inner(&d));
        let approx = lattice_expectation(&g, &terms, 600);
        assert!((exact - approx).abs() < 1e-10, "{exact} vs {approx}");
    }
}
