//! Dense exact simplex with Bland's rule.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Infeasible,
    Unbounded,
    Optimal { value: BigRational, point: Vec<BigRational> },
}

/// Maximizes `c·y` subject to `A y ≤ b`, `y ≥ 0`.
pub fn maximize(c: &[BigRational], a: &[Vec<BigRational>], b: &[BigRational]) -> LpOutcome {
    let n = c.len();
    let m = a.len();
    let artificial_rows: Vec<usize> = (0..m).filter(|&i| b[i].is_negative()).collect();
    let k = artificial_rows.len();
    let width = n + m + k;
    let zero = BigRational::zero();
    let one = BigRational::one();

    let mut rows: Vec<Vec<BigRational>> = Vec::with_capacity(m);
    let mut rhs: Vec<BigRational> = Vec::with_capacity(m);
    let mut basis: Vec<usize> = Vec::with_capacity(m);
    for i in 0..m {
        let mut row = vec![zero.clone(); width];
        row[..n].clone_from_slice(&a[i]);
        row[n + i] = one.clone();
        let mut r = b[i].clone();
        if let Some(j) = artificial_rows.iter().position(|&x| x == i) {
            for v in row.iter_mut() {
                *v = -v.clone();
            }
            r = -r;
            row[n + m + j] = one.clone();
            basis.push(n + m + j);
        } else {
            basis.push(n + i);
        }
        rows.push(row);
        rhs.push(r);
    }
    let mut t = Tableau { rows, rhs, basis };

    if k > 0 {
        let mut obj = vec![zero.clone(); width];
        for j in 0..k {
            obj[n + m + j] = -one.clone();
        }
        match t.run(&obj, width) {
            Some(v) if v.is_zero() => {}
            _ => return LpOutcome::Infeasible,
        }
        // Drive artificials out of the basis.
        let mut i = 0;
        while i < t.rows.len() {
            if t.basis[i] >= n + m {
                match (0..n + m).find(|&j| !t.rows[i][j].is_zero()) {
                    Some(j) => t.pivot(i, j),
                    None => {
                        t.rows.remove(i);
                        t.rhs.remove(i);
                        t.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
        for row in t.rows.iter_mut() {
            row.truncate(n + m);
        }
    }

    let mut obj = vec![zero.clone(); n + m];
    obj[..n].clone_from_slice(c);
    match t.run(&obj, n + m) {
        None => LpOutcome::Unbounded,
        Some(value) => {
            let mut point = vec![zero; n];
            for (i, &bv) in t.basis.iter().enumerate() {
                if bv < n {
                    point[bv] = t.rhs[i].clone();
                }
            }
            LpOutcome::Optimal { value, point }
        }
    }
}

struct Tableau {
    rows: Vec<Vec<BigRational>>,
    rhs: Vec<BigRational>,
    basis: Vec<usize>,
}

impl Tableau {
    fn pivot(&mut self, r: usize, col: usize) {
        let p = self.rows[r][col].clone();
        for v in self.rows[r].iter_mut() {
            *v = &*v / &p;
        }
        self.rhs[r] = &self.rhs[r] / &p;
        let prow = self.rows[r].clone();
        let prhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let f = self.rows[i][col].clone();
            if f.is_zero() {
                continue;
            }
            for (v, pv) in self.rows[i].iter_mut().zip(&prow) {
                if !pv.is_zero() {
                    *v -= &f * pv;
                }
            }
            self.rhs[i] -= &f * &prhs;
        }
        self.basis[r] = col;
    }

    /// Maximizes `obj` over the first `width` columns. `None` means unbounded.
    fn run(&mut self, obj: &[BigRational], width: usize) -> Option<BigRational> {
        loop {
            // Reduced costs c_j - c_B B^-1 A_j.
            let entering = (0..width).find(|&j| {
                if self.basis.contains(&j) {
                    return false;
                }
                let mut z = obj[j].clone();
                for (i, &bv) in self.basis.iter().enumerate() {
                    if !obj[bv].is_zero() && !self.rows[i][j].is_zero() {
                        z -= &obj[bv] * &self.rows[i][j];
                    }
                }
                z.is_positive()
            });
            let Some(col) = entering else {
                let mut value = BigRational::zero();
                for (i, &bv) in self.basis.iter().enumerate() {
                    value += &obj[bv] * &self.rhs[i];
                }
                return Some(value);
            };
            let mut best: Option<(usize, BigRational)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][col];
                if a.is_positive() {
                    let ratio = &self.rhs[i] / a;
                    let better = match &best {
                        None => true,
                        Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                    };
                    if better {
                        best = Some((i, ratio));
                    }
                }
            }
            let (r, _) = best?;
            self.pivot(r, col);
        }
    }
}
