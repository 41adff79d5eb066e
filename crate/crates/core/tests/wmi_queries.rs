use num_rational::BigRational;
use wmi_core::lra::{parse_formula, BoxDomain, Formula, Parser};
use wmi_core::rational::{int, ratio, to_f64};
use wmi_core::wmi::{FastPath, Literal, Path, Solver, SolverOptions, Weight, WmiProblem};
use wmi_core::{Polynomial, VarTable};

fn solver(fast: FastPath) -> Solver {
    Solver::new(SolverOptions {
        fast_path: fast,
        ..Default::default()
    })
}

fn lit(vars: &mut VarTable, s: &str) -> Literal {
    Literal::from_formula(&Parser::new(vars).formula(s).unwrap()).unwrap()
}

fn poly(vars: &mut VarTable, s: &str) -> Polynomial {
    Parser::new(vars).polynomial(s).unwrap()
}

/// Triangular density of half-width `r` around `center` for `y`.
fn triangle(vars: &mut VarTable, y: &str, center: &str, r: &BigRational) -> (Formula, Vec<Weight>) {
    let d = format!("(- {y} {center})");
    let delta = Parser::new(vars)
        .bind("r", r.clone())
        .formula(&format!("(and (<= {d} r) (>= {d} (- r)))"))
        .unwrap();
    let up = Parser::new(vars).bind("r", r.clone()).polynomial(&format!("(- (/ 1 r) (/ {d} (* r r)))")).unwrap();
    let down = Parser::new(vars).bind("r", r.clone()).polynomial(&format!("(+ (/ 1 r) (/ {d} (* r r)))")).unwrap();
    let weights = vec![
        Weight::new(lit(vars, &format!("(>= {y} {center})")), up),
        Weight::new(lit(vars, &format!("(< {y} {center})")), down),
    ];
    (delta, weights)
}

#[test]
fn unit_box_volume() {
    let mut vars = VarTable::new();
    let a = vars.declare("a");
    let b = vars.declare("b");
    let dom = BoxDomain::new().with(a, int(0), int(1)).with(b, int(0), int(1));
    let p = WmiProblem::new(vars, Formula::True, vec![Weight::global(Polynomial::one())], dom);
    for fast in [FastPath::Auto, FastPath::Never] {
        assert_eq!(solver(fast).wmi(&p).unwrap().value.exact().cloned(), Some(int(1)));
    }
}

#[test]
fn example_one_expectation_numerator() {
    let mut vars = VarTable::new();
    let delta = parse_formula("(and (<= -3 w) (<= w 3))", &mut vars).unwrap();
    let w = vars.lookup("w").unwrap();
    let weights = vec![
        Weight::new(lit(&mut vars, "(> w 0)"), poly(&mut vars, "(/ w 6)")),
        Weight::new(lit(&mut vars, "(<= w 0)"), Polynomial::zero()),
    ];
    let p = WmiProblem::new(vars, delta, weights, BoxDomain::new().with(w, int(-3), int(3)));
    assert_eq!(solver(FastPath::Auto).wmi(&p).unwrap().value.exact().cloned(), Some(ratio(3, 4)));
}

#[test]
fn triangular_density_queries() {
    let mut vars = VarTable::new();
    let y = vars.declare("y");
    let r = ratio(5, 2);
    let m = ratio(1, 3);
    let (delta, weights) = triangle(&mut vars, "y", "1/3", &r);
    let dom = BoxDomain::new().with(y, &m - &r, &m + &r);
    let p = WmiProblem::new(vars, delta, weights, dom);
    let s = solver(FastPath::Auto);
    assert_eq!(s.wmi(&p).unwrap().value.exact().cloned(), Some(int(1)));
    assert_eq!(s.conditioned(&p, y, &m).unwrap().value.exact().cloned(), Some(int(1) / &r));
    assert_eq!(s.conditioned(&p, y, &(&m + &r)).unwrap().value.exact().cloned(), Some(int(0)));
    assert_eq!(s.conditioned(&p, y, &int(100)).unwrap().value.exact().cloned(), Some(int(0)));
    assert_eq!(s.expectation(&p, y).unwrap().exact().cloned(), Some(m));
}

/// Triangle around an affine function of three uniform weights.
fn affine_predictive() -> (WmiProblem, wmi_core::Var) {
    let mut vars = VarTable::new();
    let a = vars.declare("a");
    let b = vars.declare("b");
    let c = vars.declare("c");
    let y = vars.declare("y");
    let r = ratio(3, 2);
    let center = "(+ a (* 2 b) (- c) 1/2)";
    let (delta, mut weights) = triangle(&mut vars, "y", center, &r);
    let dom = BoxDomain::new()
        .with(a, int(-1), int(1))
        .with(b, ratio(0, 1), ratio(1, 2))
        .with(c, ratio(-1, 3), int(1))
        .with(y, int(-6), int(6));
    let vol = ratio(4, 3);
    weights.push(Weight::global(Polynomial::constant(int(1) / vol)));
    (WmiProblem::new(vars, delta, weights, dom), y)
}

#[test]
fn fast_path_matches_generic() {
    let (p, y) = affine_predictive();
    let fast = solver(FastPath::Auto);
    let slow = solver(FastPath::Never);
    let z_fast = fast.wmi(&p).unwrap();
    assert_eq!(z_fast.path, Path::FastExact);
    let z_slow = slow.wmi(&p).unwrap();
    assert_eq!(z_fast.value, z_slow.value);
    assert_eq!(z_fast.value.exact().cloned(), Some(int(1)));
    assert_eq!(fast.expectation(&p, y).unwrap(), slow.expectation(&p, y).unwrap());
    for at in [ratio(1, 2), ratio(-7, 4), int(3)] {
        let f = fast.conditioned(&p, y, &at).unwrap();
        let g = slow.conditioned(&p, y, &at).unwrap();
        assert_eq!(f.path, Path::FastExact);
        assert_eq!(f.value, g.value, "density at {at}");
    }
}

#[test]
fn scaling_and_monotonicity() {
    let (p, y) = affine_predictive();
    let s = solver(FastPath::Auto);
    let base = s.wmi(&p).unwrap().value;
    let scaled = p.clone().with_weight(Weight::global(Polynomial::constant(ratio(7, 3))));
    assert_eq!(s.wmi(&scaled).unwrap().value, base.scale(&ratio(7, 3)));
    assert_eq!(s.expectation(&scaled, y).unwrap(), s.expectation(&p, y).unwrap());

    let mut vars = VarTable::new();
    let f = parse_formula("(<= (+ u v) 1)", &mut vars).unwrap();
    let (u, v) = (vars.lookup("u").unwrap(), vars.lookup("v").unwrap());
    let w = vec![Weight::global(poly(&mut vars, "(+ 1 (* u u))"))];
    let small = WmiProblem::new(vars.clone(), f.clone(), w.clone(), BoxDomain::new().with(u, int(0), int(1)).with(v, int(0), int(1)));
    let big = WmiProblem::new(vars, f, w, BoxDomain::new().with(u, int(-1), int(1)).with(v, int(0), int(2)));
    let a = s.wmi(&small).unwrap().value.exact().cloned().unwrap();
    let b = s.wmi(&big).unwrap().value.exact().cloned().unwrap();
    assert!(a <= b);
}

#[test]
fn lattice_fallback_tracks_exact_spline() {
    // Ten incommensurate widths: up to 2^10 knots in the exact spline.
    let mut vars = VarTable::new();
    let ws: Vec<_> = (0..10).map(|i| vars.declare(&format!("w{i}"))).collect();
    let y = vars.declare("y");
    let terms: Vec<String> = (0..10).map(|i| format!("(* {} w{i})", 1 + i % 3)).collect();
    let center = format!("(+ {})", terms.join(" "));
    let (delta, weights) = triangle(&mut vars, "y", &center, &int(2));
    let mut dom = BoxDomain::new().with(y, int(-40), int(40));
    for (i, w) in ws.iter().enumerate() {
        dom.set(*w, int(0), ratio(97 + 3 * i as i64 * i as i64, 89 + i as i64));
    }
    let p = WmiProblem::new(vars, delta, weights, dom);
    let exact = Solver::new(SolverOptions {
        max_spline_pieces: 1 << 11,
        ..Default::default()
    });
    let approx = Solver::new(SolverOptions {
        max_spline_pieces: 256,
        ..Default::default()
    });
    let at = int(9);
    let t = std::time::Instant::now();
    let e = exact.conditioned(&p, y, &at).unwrap();
    eprintln!("exact spline: {:?}", t.elapsed());
    assert_eq!(e.path, Path::FastExact);
    let a = approx.conditioned(&p, y, &at).unwrap();
    assert_eq!(a.path, Path::FastLattice);
    let (ev, av) = (e.value.to_f64(), a.value.to_f64());
    assert!((ev - av).abs() <= 1e-4 * ev.abs(), "{ev} vs {av}");
    // Partition function stays exact through the moment shortcut.
    let z = approx.wmi(&p).unwrap();
    assert_eq!(z.path, Path::FastExact);
    assert!(to_f64(z.value.exact().unwrap()) > 0.0);
}
