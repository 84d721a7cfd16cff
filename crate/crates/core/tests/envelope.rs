use hypermin_core::envelope::{
    calibrate_offset_constant, delta_q_r, envelope_exponent_fit, envelope_height, envelope_offset_exponent, in_w,
    normal_offset, BoundaryManifold, EnvelopeConfig, EnvelopeError, Verdict,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn geometric(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count).map(|j| lo * (hi / lo).powf(j as f64 / (count - 1) as f64)).collect()
}

/// `min_s |x − (s, c|s|^{1+α})|` over a dense uniform sample of `[−half, half]`.
fn crease_brute(x: [f64; 2], c: f64, alpha: f64, half: f64, count: usize) -> f64 {
    (0..count)
        .map(|j| {
            let s = -half + 2.0 * half * j as f64 / (count - 1) as f64;
            let y = c * s.abs().powf(1.0 + alpha);
            ((x[0] - s).powi(2) + (x[1] - y).powi(2)).sqrt()
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn circle_distances() {
    let g = BoundaryManifold::circle(2, 1.0, 512).unwrap();
    assert!((g.dist_to_gamma(&[0.0, 0.0]).unwrap().distance - 1.0).abs() < 1e-15);
    for i in [0, 17, 300] {
        assert!(g.dist_to_gamma(g.point(i)).unwrap().distance < 1e-15);
    }
    // Between samples the refinement reaches the circle itself.
    let th: f64 = 0.123;
    let d = g.dist_to_gamma(&[1.5 * th.cos(), 1.5 * th.sin()]).unwrap();
    assert!((d.distance - 0.5).abs() < 1e-12 && !d.coarse);
    let d = g.dist_to_gamma(&[0.0, 0.0, 0.75]).unwrap();
    assert!((d.distance - 1.25).abs() < 1e-15);
    assert!(matches!(g.dist_to_gamma(&[0.0]), Err(EnvelopeError::Shape(_))));
}

#[test]
fn distances_match_oversampled_scan() {
    // Queries keep a distance of 0.05 so the scan at ten times the resolution is itself accurate.
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let crease = BoundaryManifold::crease(2, 1.0, 0.5, 1.0, 8001).unwrap();
    let crease_fine = BoundaryManifold::crease(2, 1.0, 0.5, 1.0, 80001).unwrap();
    let circle = BoundaryManifold::circle(2, 1.0, 16384).unwrap();
    let circle_fine = BoundaryManifold::circle(2, 1.0, 163840).unwrap();
    let mut checked = 0;
    while checked < 200 {
        let x = [rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)];
        for (g, fine) in [(&crease, &crease_fine), (&circle, &circle_fine)] {
            let got = g.dist_to_gamma(&x).unwrap().distance;
            if got < 0.05 {
                continue;
            }
            let scan = fine.nearest_sample(&x).1.sqrt();
            assert!(got <= scan + 1e-15 && scan - got <= 1e-8, "{x:?}: {got} vs {scan}");
            checked += 1;
        }
        let exact = ((x[0] * x[0] + x[1] * x[1]).sqrt() - 1.0).abs();
        assert!((circle.dist_to_gamma(&x).unwrap().distance - exact).abs() <= 1e-12, "{x:?}");
    }
    // Near the crease, against a continuous minimum over a very dense sample.
    for _ in 0..20 {
        let x = [rng.random_range(-0.2..0.2), rng.random_range(-0.1..0.3)];
        let got = crease.dist_to_gamma(&x).unwrap().distance;
        assert!((got - crease_brute(x, 1.0, 0.5, 0.6, 1_200_001)).abs() <= 1e-9, "{x:?}");
    }
}

#[test]
fn circle_and_line_offsets_are_exact() {
    let g = BoundaryManifold::circle(2, 1.0, 1000).unwrap();
    for q in [0, 123, 777] {
        for r in [1e-4, 0.01, 0.3, 0.9] {
            let d = delta_q_r(&g, q, r).unwrap();
            assert!((d.delta - r).abs() <= 1e-10, "{q} {r}: {d:?}");
        }
    }
    let fit = envelope_exponent_fit(&g, 0, &geometric(1e-3, 0.5, 8), 1e-9).unwrap();
    assert_eq!(fit.verdict, Verdict::Exact);
    assert!(fit.target.is_none());
    let line = BoundaryManifold::line(3, 2.0, 401).unwrap();
    for r in [1e-3, 0.5, 5.0] {
        assert_eq!(delta_q_r(&line, 200, r).unwrap().delta, r);
    }
    assert!(envelope_exponent_fit(&line, 200, &[0.1, 1.0], 1e-9).unwrap().samples.iter().all(|s| s.deficit == 0.0));
}

#[test]
fn crease_deficit_slope() {
    let g = BoundaryManifold::crease(2, 1.0, 0.5, 1.0, 2001).unwrap();
    let q = g.sample_at(0.0).unwrap();
    let rs = geometric(0.01, 0.1, 8);
    for &r in &rs {
        let d = delta_q_r(&g, q, r).unwrap();
        let brute = crease_brute([0.0, r], 1.0, 0.5, 0.2, 400_001);
        assert!(d.delta < r && (d.plus - brute).abs() <= 1e-10, "{r}: {d:?} vs {brute}");
        assert_eq!(d.minus, r);
    }
    let fit = envelope_exponent_fit(&g, q, &rs, 1e-9).unwrap();
    assert_eq!(fit.target, Some(2.0));
    assert_eq!(fit.verdict, Verdict::Pass, "{fit:?}");
    assert!(fit.slope.unwrap() >= 1.6);
}

#[test]
fn envelope_membership() {
    let cfg = EnvelopeConfig::default();
    let g = BoundaryManifold::circle(2, 1.0, 720).unwrap();
    // Directly above the boundary.
    let m = in_w(&g, &[1.0, 0.0, 1e-3], &cfg).unwrap();
    assert!(m.inside && m.height.height < 1e-6);
    // Above the centre, lower than the ball of radius one.
    assert!(!in_w(&g, &[0.0, 0.0, 0.5], &cfg).unwrap().inside);
    assert!(in_w(&g, &[0.0, 0.0, 1.0 + 1e-6], &cfg).unwrap().inside);
    // Outside the convex hull every height is swallowed.
    let far = in_w(&g, &[1.5, 0.0, 10.0], &cfg).unwrap();
    assert!(!far.inside && far.height.unbounded);
    // Inside a circle the edge above 1 − r sits at √(2r − r²).
    for r in [1e-3, 0.05, 0.4] {
        let h = envelope_height(&g, &[1.0 - r, 0.0], &cfg).unwrap();
        assert!((h.height - (2.0 * r - r * r).sqrt()).abs() <= 1e-8, "{r}: {h:?}");
    }
    assert!(matches!(in_w(&g, &[0.0, 0.0, 0.0], &cfg), Err(EnvelopeError::Parameter(_))));
}

#[test]
fn envelope_offset_exponents() {
    let cfg = EnvelopeConfig::default();
    let crease = BoundaryManifold::crease(2, 1.0, 0.5, 1.0, 2001).unwrap();
    let q = crease.sample_at(0.0).unwrap();
    let fit = envelope_offset_exponent(&crease, q, &geometric(1e-4, 1e-2, 6), &cfg).unwrap();
    assert_eq!(fit.verdict, Verdict::Pass, "{fit:?}");
    let circle = BoundaryManifold::circle(2, 1.0, 720).unwrap();
    let fit = envelope_offset_exponent(&circle, 0, &geometric(-1e-2, -1e-4, 6), &cfg).unwrap();
    assert!((fit.slope.unwrap() - 2.0).abs() < 0.05, "{fit:?}");
    // Points on the edge obey r ≤ C t^{1+α} with one constant.
    let offsets: Vec<_> = fit
        .samples
        .iter()
        .map(|&(r, t)| normal_offset(&circle, &[1.0 + r, 0.0, t]).unwrap())
        .collect();
    let c = calibrate_offset_constant(&offsets);
    assert!((0.4..0.6).contains(&c), "{c}");
    assert!(offsets.iter().all(|o| o.within(1.01 * c)));
}

#[test]
fn cloud_input() {
    let count = 2000;
    let mut points = Vec::new();
    let mut normals = Vec::new();
    for j in 0..count {
        let th = 2.0 * std::f64::consts::PI * j as f64 / count as f64;
        points.extend([th.cos(), th.sin()]);
        normals.extend([th.cos(), th.sin()]);
    }
    let g = BoundaryManifold::from_cloud(2, 1, points.clone(), normals.clone(), 1.0, 0.01).unwrap();
    let d = g.dist_to_gamma(&[0.3, 0.1]).unwrap();
    assert!((d.distance - (1.0 - 0.1f64.hypot(0.3))).abs() < 1e-5 && !d.coarse);
    assert!((delta_q_r(&g, 5, 0.2).unwrap().delta - 0.2).abs() < 1e-5);
    let mut bad = normals.clone();
    bad[6] = 2.0;
    assert!(matches!(
        BoundaryManifold::from_cloud(2, 1, points.clone(), bad, 1.0, 0.01),
        Err(EnvelopeError::Normals { index: 3 })
    ));
    let mut tilted = normals;
    let th = 2.0 * std::f64::consts::PI * 10.0 / count as f64;
    tilted[20] = -th.sin();
    tilted[21] = th.cos();
    assert!(matches!(
        BoundaryManifold::from_cloud(2, 1, points.clone(), tilted, 1.0, 0.01),
        Err(EnvelopeError::Tangency { index: 10 })
    ));
    assert!(matches!(
        BoundaryManifold::from_cloud(2, 1, points, vec![0.0; 2 * count], 1.0, 1e-4),
        Err(EnvelopeError::Normals { .. }) | Err(EnvelopeError::Spacing { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn delta_never_exceeds_r(q in 0usize..801, r in 1e-4f64..0.9) {
        let g = BoundaryManifold::crease(2, 1.0, 0.5, 1.0, 801).unwrap();
        let d = delta_q_r(&g, q, r).unwrap();
        prop_assert!(d.delta >= 0.0 && d.delta <= r);
    }

    #[test]
    fn distance_is_one_lipschitz(a in prop::array::uniform3(-2.0f64..2.0), b in prop::array::uniform3(-2.0f64..2.0)) {
        let g = BoundaryManifold::circle(3, 1.0, 300).unwrap();
        let da = g.dist_to_gamma(&a).unwrap().distance;
        let db = g.dist_to_gamma(&b).unwrap().distance;
        let gap = a.iter().zip(&b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt();
        prop_assert!((da - db).abs() <= gap + 1e-12);
    }

    #[test]
    fn membership_monotone_in_height(x in -0.9f64..0.9, y in 0.0f64..0.9, t in 1e-3f64..0.5, lift in 0.0f64..0.5) {
        let g = BoundaryManifold::crease(2, 1.0, 0.5, 1.0, 201).unwrap();
        let cfg = EnvelopeConfig::default();
        if in_w(&g, &[x, y, t], &cfg).unwrap().inside {
            prop_assert!(in_w(&g, &[x, y, t + lift], &cfg).unwrap().inside);
        }
    }
}
