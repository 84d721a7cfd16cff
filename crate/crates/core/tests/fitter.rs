use hypermin_core::expansion::{expand, ProblemSpec};
use hypermin_core::fitter::{
    compare_fit_to_formal, fit_expansion, geometric_samples, stations_from_refinement, stations_from_series,
    verticality_check, FitConfig, Station,
};
use hypermin_core::series::{PolyJet, Rational, Scalar};
use hypermin_core::solver::{newton_solve, richardson_extrapolate, rotational_value, Grid, NewtonConfig};

fn q(a: i64, b: i64) -> Rational {
    Rational::from_frac(a, b)
}

fn quadratic_phi(n: usize) -> PolyJet<Rational> {
    let d = n - 1;
    let mut terms = Vec::new();
    for a in 0..d {
        let mut e = vec![0u32; d];
        e[a] = 2;
        terms.push((e, q(1, 2 + 2 * a as i64)));
    }
    let mut e = vec![0u32; d];
    e[0] = 1;
    terms.push((e, q(1, 5)));
    PolyJet::from_terms(d, 6, terms).unwrap()
}

fn window() -> (f64, f64) {
    (1.0 / 64.0, 1.0 / 4.0)
}

#[test]
fn recovers_series_coefficients() {
    // Admissible slot sets: n = 2 without logs, n = 3 with its structural logs.
    for (n, logs) in [(2usize, false), (3, true)] {
        let res = expand(&ProblemSpec::new(n, vec![quadratic_phi(n)], 6, 6)).unwrap();
        let u = res.u.to_f64();
        let ys = vec![vec![0.0; n - 1], vec![0.1; n - 1]];
        let t = geometric_samples(window().0, window().1, 240);
        let st = stations_from_series(&u, &ys, &t);
        let cfg = FitConfig { max_order: 6, logs, window: Some(window()), ..FitConfig::default() };
        let fit = fit_expansion(n, &st, &cfg).unwrap();
        let cmp = compare_fit_to_formal(&fit, &res, 6).unwrap();
        // Relative to the coefficient, or to the data amplitude carried by t^i.
        let amp = st[0].u.iter().zip(&t).filter(|(_, &tp)| tp <= window().1).fold(0.0f64, |m, (v, _)| m.max((v - st[0].phi[0]).abs()));
        for r in &cmp.rows {
            let tol = 1e-8 * r.formal.abs().max(amp / window().1.powi(r.i as i32));
            assert!(r.abs_err <= tol, "n = {n}: {r:?}");
        }
        assert!(verticality_check(&fit, 1e-10).pass);
        assert_eq!(fit.log_detected(), n == 3);
        assert!(fit.stations.iter().all(|s| s.joint_order == 6));
    }
}

fn rotational_station(n: usize, k: f64, lo: f64, hi: f64, shift: f64) -> Station {
    let t = geometric_samples(lo, hi, 120);
    Station::from_fn(vec![0.0; n - 1], vec![0.0], &t, |x| vec![rotational_value(n, k, x).unwrap() + shift * x])
}

#[test]
fn rotational_oracle_coefficients() {
    let cfg = FitConfig { max_order: 8, logs: false, window: Some(window()), ..FitConfig::default() };
    let fit = fit_expansion(2, &[rotational_station(2, 0.5, window().0, window().1, 0.0)], &cfg).unwrap();
    assert!((fit.value(0, 3, 0, 0) - 1.0 / 6.0).abs() <= 1e-5);
    assert!(fit.value(0, 1, 0, 0).abs() < 1e-6 && fit.value(0, 2, 0, 0).abs() < 1e-6);
    assert!(verticality_check(&fit, 1e-6).pass);
}

#[test]
fn corrupted_samples_fail_verticality() {
    let cfg = FitConfig { max_order: 8, logs: false, window: Some(window()), ..FitConfig::default() };
    let fit = fit_expansion(2, &[rotational_station(2, 0.5, window().0, window().1, 0.1)], &cfg).unwrap();
    let rep = verticality_check(&fit, 1e-4);
    assert!(!rep.pass);
    assert!((rep.max_c1 - 0.1).abs() < 1e-6);
    assert!((rep.g_nn[0] - 1.01).abs() < 1e-6);
}

#[test]
fn rotational_coefficient_ratio() {
    // ĉ_{3n+1} / ĉ_{n+1}³ = (n+1)³ / (2(3n+1)) for every slope.
    // The windows keep the first omitted power below the fit noise.
    for (n, hi, max_order) in [(2usize, 0.25, 12u32), (3, 0.125, 11)] {
        let want = ((n + 1) as f64).powi(3) / (2.0 * (3 * n + 1) as f64);
        for k in [0.3, 0.6] {
            let cfg = FitConfig { max_order, logs: false, window: Some((hi / 16.0, hi)), ..FitConfig::default() };
            let fit = fit_expansion(n, &[rotational_station(n, k, hi / 16.0, hi, 0.0)], &cfg).unwrap();
            let a = fit.value(0, n as u32 + 1, 0, 0);
            let b = fit.value(0, 3 * n as u32 + 1, 0, 0);
            assert!((b / a.powi(3) / want - 1.0).abs() < 1e-2, "n = {n}, K = {k}: {}", b / a.powi(3));
        }
    }
}

#[test]
fn even_dimension_series_has_no_logs() {
    let res = expand(&ProblemSpec::new(2, vec![quadratic_phi(2)], 5, 6)).unwrap();
    let t = geometric_samples(window().0, window().1, 160);
    let st = stations_from_series(&res.u.to_f64(), &[vec![0.0], vec![0.15]], &t);
    let cfg = FitConfig { max_order: 5, window: Some(window()), ..FitConfig::default() };
    let fit = fit_expansion(2, &st, &cfg).unwrap();
    assert!(!fit.log_detected(), "{fit:?}");
}

#[test]
fn solver_output_log_term() {
    // Dirichlet data from the truncated series; two extrapolated levels give the samples and their error.
    let r = 0.25;
    for n in [2usize, 3] {
        let phi = quadratic_phi(n);
        let res = expand(&ProblemSpec::new(n, vec![phi.clone()], 3 * n as u32 + 2, 6)).unwrap();
        let u_ref = res.u.to_f64();
        let phi_f = phi.to_f64();
        let phi_fn = move |y: &[f64]| vec![phi_f.eval(y)];
        let closure = |y: &[f64], t: f64| u_ref.eval(y, t).unwrap();
        let sols: Vec<_> = [64, 128, 256, 512]
            .iter()
            .map(|&nt| {
                let g = Grid::new(n, 1, r, 9, r, nt, 2.0).unwrap();
                newton_solve(&g, &phi_fn, &closure, None, &NewtonConfig::default()).unwrap().0
            })
            .collect();
        let coarse = richardson_extrapolate(&sols[2], &sols[1], 2.0).unwrap();
        let fine = richardson_extrapolate(&sols[3], &sols[2], 2.0).unwrap();
        let mid = coarse.grid.tangential_count() / 2;
        let st = stations_from_refinement(&fine, &coarse, &phi_fn, &[mid, mid + 1]).unwrap();
        let cfg = FitConfig { max_order: 6, window: Some((r / 64.0, r / 4.0)), ..FitConfig::default() };
        let fit = fit_expansion(n, &st, &cfg).unwrap();
        assert_eq!(fit.log_detected(), n == 3, "n = {n}");
        assert!(verticality_check(&fit, 1e-4).pass);
        let cmp = compare_fit_to_formal(&fit, &res, 6).unwrap();
        for row in cmp.rows.iter().filter(|x| !x.depends_on_free && x.i as usize <= n + 1) {
            assert!(row.abs_err <= 1e-3, "n = {n}: {row:?}");
        }
        if n == 3 {
            let c = fit.stations[0].coefficients.iter().find(|c| (c.i, c.j) == (4, 1)).unwrap();
            let formal = cmp.row(0, 4, 1, 0).unwrap().formal;
            assert!(c.significant && c.value * formal > 0.0);
            assert!((c.value / formal - 1.0).abs() <= 0.2, "{} vs {formal}", c.value);
        }
    }
}
