use hypermin_core::expansion::{expand, ProblemSpec};
use hypermin_core::geometry::variation_residuals;
use hypermin_core::series::{PolyJet, Rational, Scalar};
use hypermin_core::solver::{
    discrete_residual, discrete_system, energy, energy_solve, newton_solve, normalized_energy_gradient, ode_solve,
    refine_study, rotational_refinement, rotational_series, rotational_solve, rotational_value, Grid, GridField,
    NewtonConfig, UnknownMap,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn zeros(k: usize) -> impl Fn(&[f64]) -> Vec<f64> {
    move |_| vec![0.0; k]
}

#[test]
fn vertical_plane_solution() {
    let g = Grid::new(3, 2, 0.5, 5, 1.0, 8, 2.0).unwrap();
    let (u, rep) = newton_solve(&g, &zeros(2), &|_, _| vec![0.0, 0.0], None, &NewtonConfig::default()).unwrap();
    assert!(u.values.iter().all(|&v| v == 0.0));
    assert!(rep.converged && rep.iterations <= 1 && rep.final_residual == 0.0);
}

#[test]
fn affine_data_is_node_exact() {
    let a = [0.3, -0.7];
    let f = move |y: &[f64]| vec![a[0] * y[0] + a[1] * y[1], 0.5 * y[1]];
    let g = Grid::new(3, 2, 0.5, 5, 1.0, 8, 2.0).unwrap();
    let (u, rep) = newton_solve(&g, &f, &|y, _| f(y), None, &NewtonConfig::default()).unwrap();
    assert!(rep.converged && rep.iterations <= 1);
    for tang in 0..g.tangential_count() {
        let y = g.y_of(tang);
        for j in 0..=g.nt {
            let want = f(&y);
            let got = u.at(g.node(tang, j));
            assert!((got[0] - want[0]).abs() < 1e-14 && (got[1] - want[1]).abs() < 1e-14);
        }
    }
    let vr = variation_residuals(&u).unwrap();
    assert!(vr.max_abs() < 1e-12);
}

#[test]
fn jacobian_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let g = Grid::new(3, 2, 0.5, 5, 1.0, 6, 2.0).unwrap();
    let mut u = GridField::zeros(g.clone());
    for v in &mut u.values {
        *v = rng.random_range(-0.3..0.3);
    }
    let map = UnknownMap::interior(&g);
    let (_, jac) = discrete_system(&u, &map).unwrap();
    let k = g.codim;
    let dim = map.nodes.len() * k;
    for _ in 0..20 {
        let col = rng.random_range(0..dim);
        let (node, l) = (map.nodes[col / k], col % k);
        let h = 1e-6;
        let mut up = u.clone();
        up.values[node * k + l] += h;
        let mut dn = u.clone();
        dn.values[node * k + l] -= h;
        let rp = discrete_residual(&up, &map).unwrap();
        let rm = discrete_residual(&dn, &map).unwrap();
        for row in 0..dim {
            let fd = (rp[row] - rm[row]) / (2.0 * h);
            let an = jac.get(row, col);
            assert!((fd - an).abs() <= 1e-6 * (1.0 + an.abs()), "({row}, {col}): {fd} vs {an}");
        }
    }
}

#[test]
fn rotational_quadrature_matches_series() {
    // n = 2, K = 1/2: u = t³/6 + t⁷/112 + O(t¹¹).
    let p = ode_solve(2, 0.5, 1.0, &[0.0, 0.1, 0.2, 0.4]).unwrap();
    let s = rotational_series(2, 0.5, 8);
    assert!((s[0].1 - 1.0 / 6.0).abs() < 1e-15 && (s[1].1 - 1.0 / 112.0).abs() < 1e-15);
    for (t, u) in p.t.iter().zip(&p.u) {
        let sum: f64 = s.iter().map(|(e, c)| c * t.powi(*e as i32)).sum();
        assert!((u - sum).abs() <= 1e-14 + 1e-12 * sum.abs(), "{t}: {u} vs {sum}");
    }
}

#[test]
fn rotational_profile_solves_reduced_equation() {
    // t² u''/(1 + u'²) − n t u' with u from quadrature and centered differences.
    let (n, k) = (3usize, 0.8);
    for &t in &[0.2, 0.5, 0.8] {
        let h = 1e-3;
        let um = rotational_value(n, k, t - h).unwrap();
        let u0 = rotational_value(n, k, t).unwrap();
        let up = rotational_value(n, k, t + h).unwrap();
        let d1 = (up - um) / (2.0 * h);
        let d2 = (up - 2.0 * u0 + um) / (h * h);
        let q = t * t * d2 / (1.0 + d1 * d1) - n as f64 * t * d1;
        assert!(q.abs() < 1e-5, "t = {t}: {q}");
    }
}

#[test]
fn rotational_refinement_second_order() {
    let cfg = NewtonConfig::default();
    let table = rotational_refinement(2, 0.5, 1.0, 5, &[16, 32, 64, 128], &cfg).unwrap();
    let order = table.order.unwrap();
    assert!((1.8..=2.2).contains(&order), "{table:?}");
    assert!(table.monotone);
    let g = Grid::new(2, 1, 0.5, 5, 1.0, 64, 2.0).unwrap();
    let (_, rep, _) = rotational_solve(&g, 0.5, &cfg).unwrap();
    assert!(rep.converged && rep.final_residual <= 1e-10);
    assert!(rep.residual_history.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn variational_residuals_decay() {
    // Sampled exact profile: the residuals are pure truncation error.
    let mut prev = f64::INFINITY;
    let mut ratios = Vec::new();
    for nt in [16, 32, 64] {
        let g = Grid::new(2, 1, 0.5, 5, 1.0, nt, 2.0).unwrap();
        let u = GridField::from_fn(g, |_, t| vec![rotational_value(2, 0.5, t).unwrap()]);
        let m = variation_residuals(&u).unwrap().max_abs();
        ratios.push(prev / m);
        prev = m;
    }
    assert!(ratios[1..].iter().all(|&r| r > 2.8), "{ratios:?}");
    // On a converged discrete solution they vanish with the scaled residual.
    let g = Grid::new(2, 1, 0.5, 5, 1.0, 32, 2.0).unwrap();
    let (u, _, _) = rotational_solve(&g, 0.5, &NewtonConfig::default()).unwrap();
    assert!(variation_residuals(&u).unwrap().max_abs() < 1e-10);
    let z = variation_residuals(&GridField::zeros(Grid::new(3, 2, 0.5, 5, 1.0, 8, 2.0).unwrap())).unwrap();
    assert_eq!(z.max_abs(), 0.0);
}

#[test]
fn refine_needs_three_levels() {
    assert!(refine_study(&[8, 16], |_| Ok(1.0)).is_err());
    let t = refine_study(&[8, 16, 32], |_| Ok(0.0)).unwrap();
    assert!(t.exact && t.order.is_none());
}

#[test]
fn energy_gradient_against_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let g = Grid::new(3, 2, 0.5, 4, 1.0, 5, 2.0).unwrap();
    let t_cut = g.t(1);
    let mut u = GridField::zeros(g.clone());
    for v in &mut u.values {
        *v = rng.random_range(-0.5..0.5);
    }
    let e = energy(&u, t_cut).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let dir: Vec<f64> = (0..u.values.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let h = 1e-5;
        let shift = |s: f64| {
            let mut w = u.clone();
            for (v, d) in w.values.iter_mut().zip(&dir) {
                *v += s * d;
            }
            energy(&w, t_cut).unwrap().value
        };
        let fd = (shift(h) - shift(-h)) / (2.0 * h);
        let an: f64 = e.gradient.iter().zip(&dir).map(|(a, b)| a * b).sum();
        worst = worst.max((fd - an).abs() / an.abs().max(1e-300));
    }
    assert!(worst <= 1e-6, "{worst}");
}

#[test]
fn energy_critical_point() {
    let cfg = NewtonConfig::default();
    let g = Grid::new(2, 1, 0.5, 5, 1.0, 24, 2.0).unwrap();
    let (u, _, _) = rotational_solve(&g, 0.5, &cfg).unwrap();
    let t_cut = g.t(2);
    let before = normalized_energy_gradient(&u, t_cut).unwrap();
    let (v, rep) = energy_solve(&u, t_cut, &cfg).unwrap();
    let after = normalized_energy_gradient(&v, t_cut).unwrap();
    let norm = |x: &[f64]| x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(rep.converged);
    assert!(norm(&after) <= 10.0 * cfg.tol, "{}", norm(&after));
    assert!(norm(&before) > norm(&after));
}

#[test]
fn manufactured_boundary_errors_decrease() {
    let q = |a, b| Rational::from_frac(a, b);
    let phi = PolyJet::from_terms(1, 8, vec![(vec![2], q(1, 2))]).unwrap();
    let res = expand(&ProblemSpec::new(2, vec![phi.clone()], 10, 8)).unwrap();
    let u_ref = res.u.to_f64();
    let phi_f = phi.to_f64();
    let phi_fn = move |y: &[f64]| vec![phi_f.eval(y)];
    let closure = |y: &[f64], t: f64| u_ref.eval(y, t).unwrap();
    let mut errors = Vec::new();
    for nt in [8, 16, 32] {
        let g = Grid::new(2, 1, 0.25, 2 * nt + 1, 0.25, nt, 2.0).unwrap();
        let (u, rep) = newton_solve(&g, &phi_fn, &closure, None, &NewtonConfig::default()).unwrap();
        assert!(rep.converged);
        let mut err: f64 = 0.0;
        for q in g.interior_nodes() {
            let (tang, j) = g.split(q);
            err = err.max((u.at(q)[0] - closure(&g.y_of(tang), g.t(j))[0]).abs());
        }
        errors.push(err);
    }
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
}
