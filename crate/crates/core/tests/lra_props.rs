use std::collections::BTreeMap;

use proptest::prelude::*;
use wmi_core::lra::{enumerate_cells, fm_feasible, simplex_feasible, Atom, BoxDomain, CellBudget, Cmp, Constraint, Formula, Parser};
use wmi_core::rational::{int, ratio};
use wmi_core::{LinearExpr, Var, VarTable};

fn expr() -> impl Strategy<Value = LinearExpr> {
    (prop::collection::vec(-3i64..=3, 3), -6i64..=6, 1i64..=3)
        .prop_map(|(c, k, d)| LinearExpr::from_terms(c.into_iter().enumerate().map(|(i, c)| (Var(i as u32), int(c))), ratio(k, d)))
}

fn atom() -> impl Strategy<Value = Atom> {
    (expr(), prop_oneof![Just(Cmp::Le), Just(Cmp::Lt), Just(Cmp::Ge), Just(Cmp::Gt)])
        .prop_map(|(e, op)| Atom::compare(e, op, LinearExpr::zero()))
}

fn formula() -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![atom().prop_map(Formula::Atom), Just(Formula::True), Just(Formula::False)];
    leaf.prop_recursive(3, 16, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 0..3).prop_map(Formula::And),
            prop::collection::vec(inner.clone(), 0..3).prop_map(Formula::Or),
            inner.clone().prop_map(Formula::not),
            (inner.clone(), inner).prop_map(|(a, b)| Formula::implies(a, b)),
        ]
    })
}

fn table() -> VarTable {
    let mut t = VarTable::new();
    for n in ["x", "y", "z"] {
        t.declare(n);
    }
    t
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn print_parse_round_trip(f in formula()) {
        let mut vars = table();
        let text = f.display(&vars).to_string();
        let g = Parser::new(&mut vars).formula(&text).unwrap();
        prop_assert_eq!(g, f);
    }

    #[test]
    fn elimination_agrees_with_simplex(es in prop::collection::vec((expr(), any::<bool>()), 1..7)) {
        let cs: Vec<Constraint> = es.into_iter().map(|(expr, strict)| Constraint { expr, strict }).collect();
        prop_assert_eq!(fm_feasible(&cs, 100_000), Some(simplex_feasible(&cs)));
    }

    #[test]
    fn cells_decide_the_formula(f in formula(), pts in prop::collection::vec(prop::collection::vec(-11i64..=11, 3), 10)) {
        let dom = (0..3).fold(BoxDomain::new(), |d, i| d.with(Var(i), int(-2), int(2)));
        let dec = enumerate_cells(&f, &[], &dom, CellBudget::default()).unwrap();
        for p in pts {
            let x: BTreeMap<Var, _> = p.iter().enumerate().map(|(i, c)| (Var(i as u32), ratio(*c, 6) + ratio(1, 997))).collect();
            // Locate the containing cell, if the point is off every boundary.
            let inside: Vec<_> = dec.cells.iter().filter(|c| c.constraints.iter().all(|e| e.eval_map(&x).unwrap() < int(0))).collect();
            let sat = f.satisfied_by(&x, None).unwrap();
            let on_boundary = dec.atoms.iter().any(|a| a.expr().eval_map(&x).unwrap() == int(0));
            if !on_boundary {
                prop_assert!(inside.len() <= 1);
                prop_assert_eq!(inside.len() == 1, sat);
            }
        }
    }
}
