//! Seeded generators of random problems for cross-checking.

use rand::Rng;
use wmi_core::lra::{Atom, BoxDomain, Cmp, Formula};
use wmi_core::rational::{int, ratio};
use wmi_core::wmi::{Literal, Weight, WmiProblem};
use wmi_core::{BigRational, LinearExpr, Monomial, Polynomial, Var, VarTable};

pub fn small_rational<R: Rng>(rng: &mut R, max_num: i64, max_den: i64) -> BigRational {
    ratio(rng.random_range(-max_num..=max_num), rng.random_range(1..=max_den))
}

pub fn random_box<R: Rng>(rng: &mut R, vars: &[Var]) -> BoxDomain {
    let mut dom = BoxDomain::new();
    for v in vars {
        let lo = ratio(rng.random_range(-6..=3), 3);
        let w = ratio(rng.random_range(2..=9), 3);
        dom.set(*v, lo.clone(), lo + w);
    }
    dom
}

/// An affine expression that cuts through `dom` near its center.
pub fn random_cut<R: Rng>(rng: &mut R, vars: &[Var], dom: &BoxDomain) -> LinearExpr {
    loop {
        let mut e = LinearExpr::zero();
        for v in vars {
            e.add_term(*v, int(rng.random_range(-2..=2)));
        }
        if e.is_constant() {
            continue;
        }
        let (lo, hi) = dom.range_of(&e).expect("bounded");
        let t = ratio(rng.random_range(1..=9), 10);
        let offset = &lo + (&hi - &lo) * t;
        return e - LinearExpr::constant(offset);
    }
}

pub fn random_atom<R: Rng>(rng: &mut R, vars: &[Var], dom: &BoxDomain) -> Atom {
    let e = random_cut(rng, vars, dom);
    let op = match rng.random_range(0..4) {
        0 => Cmp::Le,
        1 => Cmp::Lt,
        2 => Cmp::Ge,
        _ => Cmp::Gt,
    };
    Atom::compare(e, op, LinearExpr::zero())
}

pub fn random_poly<R: Rng>(rng: &mut R, vars: &[Var], max_degree: u32) -> Polynomial {
    let mut p = Polynomial::zero();
    for _ in 0..rng.random_range(1..=4) {
        let mut powers = Vec::new();
        let mut left = rng.random_range(0..=max_degree);
        for v in vars {
            if left == 0 {
                break;
            }
            let e = rng.random_range(0..=left);
            left -= e;
            powers.push((*v, e));
        }
        p.add_term(Monomial::new(powers), small_rational(rng, 6, 3));
    }
    p
}

fn random_formula<R: Rng>(rng: &mut R, atoms: &[Atom]) -> Formula {
    let leaf = |rng: &mut R| {
        let a = Formula::Atom(atoms[rng.random_range(0..atoms.len())].clone());
        if rng.random_bool(0.25) {
            Formula::not(a)
        } else {
            a
        }
    };
    match rng.random_range(0..4) {
        0 => leaf(rng),
        1 => Formula::and((0..rng.random_range(2..=3)).map(|_| leaf(rng)).collect::<Vec<_>>()),
        2 => Formula::or((0..rng.random_range(2..=3)).map(|_| leaf(rng)).collect::<Vec<_>>()),
        _ => Formula::implies(leaf(rng), Formula::or([leaf(rng), leaf(rng)])),
    }
}

/// At most 3 variables, at most 6 distinct literals, weight degree at most 2.
pub fn random_problem<R: Rng>(rng: &mut R) -> WmiProblem {
    let mut names = VarTable::new();
    let n = rng.random_range(1..=3);
    let vars: Vec<Var> = (0..n).map(|i| names.declare(["x", "y", "z"][i])).collect();
    let dom = random_box(rng, &vars);
    let delta_atoms: Vec<Atom> = (0..rng.random_range(1..=3)).map(|_| random_atom(rng, &vars, &dom)).collect();
    let delta = random_formula(rng, &delta_atoms);
    let mut weights = vec![Weight::global(random_poly(rng, &vars, 2))];
    let budget = 6 - delta_atoms.len();
    for _ in 0..rng.random_range(0..=budget.min(3)) {
        let a = if rng.random_bool(0.5) {
            delta_atoms[rng.random_range(0..delta_atoms.len())].clone()
        } else {
            random_atom(rng, &vars, &dom)
        };
        weights.push(Weight::new(Literal::Atom(a), random_poly(rng, &vars, 2)));
    }
    WmiProblem::new(names, delta, weights, dom)
}
