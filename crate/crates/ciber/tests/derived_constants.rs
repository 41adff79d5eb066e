use ciber::bnn::{alpha_objective, derive_alpha, fit_sigmoid_cubic};
use ciber::mlp::sigmoid;
use statrs::function::erf::erf;
use wmi_core::rational::{int, parse, to_f64};

/// Closed form of the L2 objective through the error function.
fn objective_closed_form(a: f64) -> f64 {
    let phi0 = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let phi_a = phi0 * (-0.5 * a * a).exp();
    let half_mass = 0.5 * erf(a / std::f64::consts::SQRT_2);
    let cross = 2.0 * (half_mass / a - (phi0 - phi_a) / (a * a));
    1.0 / (2.0 * std::f64::consts::PI.sqrt()) - 2.0 * cross + 2.0 / (3.0 * a)
}

#[test]
fn alpha_agrees_with_grid_search() {
    let (mut best, mut arg) = (f64::INFINITY, 0.0);
    for i in 0..=30_000 {
        let a = 1.0 + i as f64 * 1e-4;
        let f = objective_closed_form(a);
        if f < best {
            best = f;
            arg = a;
        }
    }
    // frozen from the grid: 2.2970
    assert!((arg - 2.2970).abs() < 1e-9);
    let alpha = to_f64(&derive_alpha());
    assert!((alpha - arg).abs() <= 1e-4, "{alpha} vs {arg}");
    // frozen from a 40-digit root of the derivative: 2.2970037645786...
    assert_eq!(derive_alpha(), parse("2.297003765").unwrap());
}

#[test]
fn quadrature_objective_matches_closed_form() {
    for a in [1.0, 1.7, 2.297, 3.2, 4.0] {
        let (q, c) = (alpha_objective(a), objective_closed_form(a));
        // the closed form is limited by the accuracy of `erf`
        assert!((q - c).abs() < 1e-9, "{a}: {q} vs {c}");
    }
}

#[test]
fn triangle_has_unit_mass() {
    for a in [0.5, 1.0, 2.297003765, 7.0] {
        // two linear pieces of base a and height 1/a
        assert!((2.0 * 0.5 * a * (1.0 / a) - 1.0f64).abs() < 1e-15);
    }
}

#[test]
fn cubic_matches_dense_grid_oracle() {
    let c = fit_sigmoid_cubic(&int(4)).unwrap();
    // independent fit: discrete least squares on a fine midpoint grid
    let n = 400_000;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..n {
        let t = -4.0 + 8.0 * (i as f64 + 0.5) / n as f64;
        let b = t * (t * t - 16.0);
        num += (sigmoid(t) - 0.5 - t / 8.0) * b;
        den += b * b;
    }
    let q = num / den;
    assert!((to_f64(&c.coeffs[3]) - q).abs() < 1e-9);
    assert!((c.eval(0.0) - 0.5).abs() < 1e-3);
    // frozen: the least-squares fit misses the sigmoid by 0.0338 at worst
    assert!((c.max_error - 0.033_781_6).abs() < 1e-5, "{}", c.max_error);
}

#[test]
fn no_constrained_cubic_reaches_two_hundredths() {
    // Every cubic with c(-4) = 0 and c(4) = 1 is (t + 4)/8 + (t² − 16)(p + q·t).
    // A coarse search over (p, q) bounds the best achievable worst-case error.
    let ts: Vec<f64> = (0..=800).map(|i| -4.0 + i as f64 * 0.01).collect();
    let mut best = f64::INFINITY;
    for i in 0..=80 {
        let p = -0.01 + i as f64 * 0.00025;
        for j in 0..=200 {
            let q = -0.01 + j as f64 * 0.0001;
            let err = ts
                .iter()
                .map(|&t| ((t + 4.0) / 8.0 + (t * t - 16.0) * (p + q * t) - sigmoid(t)).abs())
                .fold(0.0, f64::max);
            best = best.min(err);
        }
    }
    assert!(best > 0.03, "{best}");
}
