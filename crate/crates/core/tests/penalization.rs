use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use young_core::penalization::{
    hessian_bound_entries, hessian_constant, inf_conv, penal_eval, penal_grad, quasidistance, sup_conv,
    verify_quasidistance, young_gradient, young_hessian, young_radial, GridFunction, PenalizationParams,
};
use young_core::{construct, MeasureFamily, ThetaSpec, YoungFunction, EXAMPLE_FAMILY};

fn young(p: f64) -> YoungFunction {
    let family = MeasureFamily::from_json(EXAMPLE_FAMILY).unwrap().with_p(p).unwrap();
    construct(&family, ThetaSpec::default(), 12, None).unwrap()
}

fn random_point(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> Vec<f64> {
    (0..d).map(|_| scale * (2.0 * rng.gen::<f64>() - 1.0)).collect()
}

#[test]
fn penal_grad_matches_central_differences() {
    for p in [1.5, 2.0, 3.0] {
        let y = young(p);
        let params = PenalizationParams { delta: 0.3, gamma: 0.7, lambda: 2.0, mu: 0.4, ..PenalizationParams::new(&y) };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let x = random_point(&mut rng, 2, 3.0);
            let yv = random_point(&mut rng, 2, 3.0);
            let t = 0.9 * rng.gen::<f64>();
            let (gx, gy) = penal_grad(&params, t, &x, &yv).unwrap();
            let analytic: Vec<f64> = gx.iter().chain(&gy).copied().collect();
            let mut z: Vec<f64> = x.iter().chain(&yv).copied().collect();
            let scale = analytic.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for i in 0..4 {
                let h = 1e-5 * z[i].abs().max(1.0);
                let zi = z[i];
                z[i] = zi + h;
                let fp = penal_eval(&params, t, &z[..2], &z[2..]).unwrap();
                z[i] = zi - h;
                let fm = penal_eval(&params, t, &z[..2], &z[2..]).unwrap();
                z[i] = zi;
                let fd = (fp - fm) / (2.0 * h);
                assert!(
                    (fd - analytic[i]).abs() <= 1e-6 * scale,
                    "p = {p}, point {z:?}, component {i}: fd {fd} vs {}",
                    analytic[i]
                );
            }
        }
    }
}

#[test]
fn hessian_elements_bounded_by_entries() {
    for p in [1.5, 2.0, 3.0] {
        let y = young(p);
        let cp = hessian_constant(p);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let z = random_point(&mut rng, 2, 4.0);
            let bound = cp * hessian_bound_entries(&y, p, &z).unwrap();
            let analytic = young_hessian(&y, p, &z).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    let h = 1e-4 * z.iter().fold(1.0f64, |m, v| m.max(v.abs()));
                    let f = |a: f64, b: f64| {
                        let mut w = z.clone();
                        w[i] += a;
                        w[j] += b;
                        young_radial(&y, p, &w).unwrap()
                    };
                    let fd = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4.0 * h * h);
                    assert!(fd.abs() <= bound * (1.0 + 1e-4), "p = {p}, z = {z:?}, ({i},{j}): |{fd}| > {bound}");
                    assert!(analytic[i][j].abs() <= bound * (1.0 + 1e-12), "p = {p}, z = {z:?}: analytic entry exceeds bound");
                    assert!((fd - analytic[i][j]).abs() <= 1e-4 * bound.max(1e-8), "p = {p}, z = {z:?}: fd {fd} vs {}", analytic[i][j]);
                }
            }
        }
    }
}

#[test]
fn gradient_vanishes_at_origin_and_is_radial() {
    let y = young(2.0);
    assert_eq!(young_gradient(&y, 2.0, &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    let g = young_gradient(&y, 2.0, &[0.3, 0.4]).unwrap();
    assert!((g[0] * 0.4 - g[1] * 0.3).abs() < 1e-15);
    assert!(young_hessian(&y, 2.0, &[0.0, 0.0]).is_err());
}

#[test]
fn penalty_symmetry_and_unit_value() {
    let y = young(2.0);
    let params = PenalizationParams::new(&y);
    let v = penal_eval(&params, 0.0, &[1.0, 0.0], &[0.0, 0.0]).unwrap();
    assert_eq!(v, 1.0 + y.eval(1.0).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let a = random_point(&mut rng, 2, 2.0);
        let b = random_point(&mut rng, 2, 2.0);
        assert_eq!(penal_eval(&params, 0.5, &a, &b).unwrap(), penal_eval(&params, 0.5, &b, &a).unwrap());
    }
    assert!(penal_eval(&params, 1.0, &[0.0], &[0.0]).is_err());
    assert!(penal_eval(&params, 0.0, &[0.0], &[0.0, 1.0]).is_err());
}

#[test]
fn quasidistance_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let samples: Vec<(Vec<f64>, Vec<f64>)> = (0..10_000)
        .map(|_| {
            let s1 = 10f64.powf(rng.gen_range(-3.0..2.0));
            let s2 = 10f64.powf(rng.gen_range(-3.0..2.0));
            (random_point(&mut rng, 2, s1), random_point(&mut rng, 2, s2))
        })
        .collect();
    for p in [1.0, 2.0, 3.0] {
        let r = verify_quasidistance(p, &samples);
        assert!(r.passed(), "p = {p}: {r:?}");
        if p >= 2.0 {
            assert_eq!(r.literal_growth_violations, 0);
        }
    }
    assert!(verify_quasidistance(1.0, &samples).literal_growth_violations > 0);
}

fn grid_axes(n: usize) -> Vec<Vec<f64>> {
    let axis: Vec<f64> = (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect();
    vec![axis.clone(), axis]
}

fn test_function(x: &[f64]) -> f64 {
    (3.0 * x[0]).sin() * (2.0 * x[1]).cos() + 0.5 * x[0].abs()
}

#[test]
fn sup_convolution_dominates_and_fixes_constants() {
    let f = GridFunction::from_fn(grid_axes(64), test_function).unwrap();
    for p in [1.0, 2.0, 3.0] {
        for eps in [0.01, 0.1, 1.0] {
            let up = sup_conv(&f, p, eps).unwrap();
            assert!(up.values().iter().zip(f.values()).all(|(u, v)| u >= v), "domination, p = {p}, eps = {eps}");
            let down = inf_conv(&f, p, eps).unwrap();
            assert!(down.values().iter().zip(f.values()).all(|(d, v)| d <= v));
        }
        let c = GridFunction::from_fn(grid_axes(64), |_| 2.5).unwrap();
        assert_eq!(sup_conv(&c, p, 0.3).unwrap().values(), c.values());
    }
}

#[test]
fn sup_convolution_monotone_in_eps_and_idempotent() {
    let f = GridFunction::from_fn(grid_axes(64), test_function).unwrap();
    let small = sup_conv(&f, 2.0, 0.05).unwrap();
    let large = sup_conv(&f, 2.0, 0.5).unwrap();
    assert!(small.values().iter().zip(large.values()).all(|(a, b)| a <= b));
    // for p <= 2 the quasidistance is |x|^2, whose sup-convolution is a semigroup in eps
    let twice = sup_conv(&small, 2.0, 0.05).unwrap();
    let once = sup_conv(&f, 2.0, 0.1).unwrap();
    assert!(twice.values().iter().zip(once.values()).all(|(a, b)| a <= &(b + 1e-12)));
    let again = sup_conv(&once, 2.0, 1e-9).unwrap();
    assert_eq!(again.values(), once.values());
}

#[test]
fn grid_csv_round_trip() {
    let f = GridFunction::from_fn(grid_axes(9), test_function).unwrap();
    let back = GridFunction::from_csv(&f.to_csv()).unwrap();
    assert_eq!(back, f);
    let g = GridFunction::from_fn(vec![vec![0.0, 0.5, 2.0]], |x| x[0] * x[0]).unwrap();
    assert_eq!(GridFunction::from_csv(&g.to_csv()).unwrap(), g);
    assert!(GridFunction::from_csv("a,b\n1,2\n").is_err());
    assert!(quasidistance(2.0, &[3.0, 4.0]) == 25.0);
}
