use proptest::prelude::*;
use wmi_core::integrate::{integrate_linear_functional, integrate_region, IntegrateOptions, Piecewise, UPoly};
use wmi_core::lra::{has_interior, BoxDomain, Constraint};
use wmi_core::rational::{int, ratio};
use wmi_core::{BigRational, LinearExpr, Monomial, Polynomial, Var};

fn rat() -> impl Strategy<Value = BigRational> {
    (-12i64..=12, 1i64..=4).prop_map(|(n, d)| ratio(n, d))
}

#[derive(Debug, Clone)]
struct Region {
    dims: usize,
    constraints: Vec<LinearExpr>,
}

fn region() -> impl Strategy<Value = Region> {
    (1usize..=4).prop_flat_map(|dims| {
        let bounds = prop::collection::vec((-3i64..=1, 1i64..=3), dims);
        let atoms = prop::collection::vec((prop::collection::vec(-2i64..=2, dims), rat()), 0..=6);
        (Just(dims), bounds, atoms).prop_map(|(dims, bounds, atoms)| {
            let mut constraints = Vec::new();
            for (i, (lo, w)) in bounds.into_iter().enumerate() {
                let v = LinearExpr::var(Var(i as u32));
                constraints.push(LinearExpr::constant(int(lo)) - v.clone());
                constraints.push(v - LinearExpr::constant(int(lo + w)));
            }
            for (coeffs, k) in atoms {
                let e = LinearExpr::from_terms(coeffs.into_iter().enumerate().map(|(i, c)| (Var(i as u32), int(c))), k);
                if !e.is_constant() {
                    constraints.push(e);
                }
            }
            Region { dims, constraints }
        })
    })
}

fn poly(dims: usize) -> impl Strategy<Value = Polynomial> {
    prop::collection::vec((prop::collection::vec(0u32..=3, dims), rat()), 1..5).prop_map(|terms| {
        let mut p = Polynomial::zero();
        for (exps, c) in terms {
            if exps.iter().sum::<u32>() <= 3 {
                p.add_term(Monomial::new(exps.iter().enumerate().map(|(i, e)| (Var(i as u32), *e))), c);
            }
        }
        p
    })
}

fn permutations(n: usize) -> Vec<Vec<Var>> {
    fn go(prefix: &mut Vec<Var>, rest: &mut Vec<Var>, out: &mut Vec<Vec<Var>>) {
        if rest.is_empty() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..rest.len() {
            let v = rest.remove(i);
            prefix.push(v);
            go(prefix, rest, out);
            prefix.pop();
            rest.insert(i, v);
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut (0..n as u32).map(Var).collect(), &mut out);
    out
}

fn integrate(p: &Polynomial, cons: &[LinearExpr], order: Option<Vec<Var>>) -> BigRational {
    let opts = IntegrateOptions {
        order,
        ..Default::default()
    };
    integrate_region(p, cons, &opts).unwrap().value
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn order_invariance((r, p) in region().prop_flat_map(|r| { let d = r.dims; (Just(r), poly(d)) })) {
        let reference = integrate(&p, &r.constraints, None);
        for order in permutations(r.dims) {
            prop_assert_eq!(integrate(&p, &r.constraints, Some(order)), reference.clone());
        }
    }

    #[test]
    fn additivity_under_hyperplane_cuts(
        (r, p, cut) in region().prop_flat_map(|r| {
            let d = r.dims;
            (Just(r), poly(d), (prop::collection::vec(-2i64..=2, d), rat()))
        })
    ) {
        let h = LinearExpr::from_terms(cut.0.into_iter().enumerate().map(|(i, c)| (Var(i as u32), int(c))), cut.1);
        let whole = integrate(&p, &r.constraints, None);
        let mut below = r.constraints.clone();
        below.push(h.clone());
        let mut above = r.constraints.clone();
        above.push(-h);
        prop_assert_eq!(integrate(&p, &below, None) + integrate(&p, &above, None), whole);
    }

    #[test]
    fn nonnegative_integrand_on_nonempty_region(r in region()) {
        let cs: Vec<Constraint> = r.constraints.iter().cloned().map(Constraint::le).collect();
        let v = integrate(&Polynomial::one(), &r.constraints, None);
        prop_assert_eq!(v > int(0), has_interior(&cs));
    }

    #[test]
    fn fast_path_equals_cell_integration(
        dims in 2usize..=4,
        coeffs in prop::collection::vec(prop_oneof![-3i64..=-1, 1i64..=3], 4),
        lows in prop::collection::vec(rat(), 4),
        widths in prop::collection::vec((1i64..=5, 1i64..=3), 4),
        pieces in prop::collection::vec(prop::collection::vec(rat(), 3), 1..=3),
        cuts in prop::collection::vec(0i64..=100, 2),
    ) {
        let a = LinearExpr::from_terms((0..dims).map(|i| (Var(i as u32), int(coeffs[i]))), ratio(1, 3));
        let mut dom = BoxDomain::new();
        for i in 0..dims {
            let lo = lows[i].clone();
            dom.set(Var(i as u32), lo.clone(), lo + ratio(widths[i].0, widths[i].1));
        }
        let (s_lo, s_hi) = dom.range_of(&a).unwrap();
        let span = &s_hi - &s_lo;
        let mut breaks = vec![s_lo.clone(), s_hi.clone()];
        for c in cuts.iter().take(pieces.len() - 1) {
            breaks.push(&s_lo + &span * ratio(*c, 100));
        }
        breaks.sort();
        breaks.dedup();
        let g = Piecewise::new(breaks.clone(), pieces.iter().cycle().take(breaks.len() - 1).map(|c| UPoly(c.clone())).collect()).unwrap();

        let fast = integrate_linear_functional(&g, &a, &dom, 4096).unwrap().value;

        let s = Var(99);
        let mut slow = int(0);
        for (i, piece) in g.pieces.iter().enumerate() {
            let q = Polynomial::from_univariate(s, &piece.0).substitute_linear(s, &a);
            let mut cons: Vec<LinearExpr> = dom.constraints().into_iter().map(|c| c.expr).collect();
            cons.push(LinearExpr::constant(g.breaks[i].clone()) - a.clone());
            cons.push(a.clone() - LinearExpr::constant(g.breaks[i + 1].clone()));
            slow += integrate(&q, &cons, None);
        }
        prop_assert_eq!(fast, slow);
    }
}
