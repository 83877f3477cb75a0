use apint::{
    averaged_nonlinear, lambda_functional, AveragingConfig, Kernel, KernelTransform, Model, ModelConfig,
    OscillatorySystem, RsweModel, State,
};
use num_complex::Complex;
use proptest::prelude::*;
use std::sync::OnceLock;

fn bump_table() -> &'static KernelTransform<f64> {
    static T: OnceLock<KernelTransform<f64>> = OnceLock::new();
    T.get_or_init(|| KernelTransform::new(Kernel::bump()))
}

fn gaussian_table() -> &'static KernelTransform<f64> {
    static T: OnceLock<KernelTransform<f64>> = OnceLock::new();
    T.get_or_init(|| KernelTransform::new(Kernel::gaussian(0.1).unwrap()))
}

fn kernels() -> Vec<Kernel<f64>> {
    vec![Kernel::bump(), Kernel::gaussian(0.1).unwrap(), Kernel::gaussian(0.2).unwrap(), Kernel::polynomial(3).unwrap()]
}

/// `|∫₀¹ ρ(s) e^{iys} ds|` by a 20001-point Simpson rule.
fn simpson_transform(k: &Kernel<f64>, y: f64) -> f64 {
    let n = 20_000;
    let h = 1.0 / n as f64;
    let mut acc = Complex::new(0.0, 0.0);
    for i in 0..=n {
        let s = i as f64 * h;
        let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += Complex::from_polar(w * k.eval(s).unwrap(), y * s);
    }
    (acc * h / 3.0).norm()
}

fn random_state(m: &Model, seed: u64) -> State {
    let n = m.n_modes();
    let cut = m.config().dealias_limit();
    let mut x = seed;
    let mut next = || {
        x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let mut comps = [vec![Complex::new(0.0, 0.0); n], vec![Complex::new(0.0, 0.0); n], vec![Complex::new(0.0, 0.0); n]];
    for comp in comps.iter_mut() {
        comp[0] = Complex::new(next(), 0.0);
        for k in 1..=cut {
            let z = Complex::new(next(), next()) / (k * k) as f64;
            comp[m.config().index_of(k)] = z;
            comp[m.config().index_of(-k)] = z.conj();
        }
    }
    State::from_components(comps, 0.0).unwrap()
}

#[test]
fn unit_mass_by_dense_trapezoid() {
    for k in kernels() {
        let n = 10_000;
        let h = 1.0 / n as f64;
        let sum: f64 = (0..=n)
            .map(|i| {
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                w * k.eval(i as f64 * h).unwrap()
            })
            .sum();
        assert!((sum * h - 1.0).abs() < 1e-8, "{:?}: mass {}", k.kind(), sum * h);
        assert!(k.eval(0.0).unwrap() >= 0.0);
    }
    assert_eq!(Kernel::bump().eval(0.0).unwrap(), 0.0);
    assert_eq!(Kernel::bump().eval(1.0).unwrap(), 0.0);
}

#[test]
fn transform_agrees_with_simpson() {
    for k in kernels() {
        let table = KernelTransform::new(k.clone());
        for y in [0.0, 0.5, 3.0, 17.0, 64.0, 250.0] {
            let want = simpson_transform(&k, y);
            assert!((table.magnitude(y) - want).abs() < 1e-9, "{:?} at {y}", k.kind());
        }
    }
}

#[test]
fn averaging_a_zero_state_gives_zero() {
    let m = RsweModel::new(ModelConfig::new(0.1, 1.0, 16).unwrap()).unwrap();
    let out = averaged_nonlinear(&m, &State::zeros(16), 0.3, &AveragingConfig::new(0.5, 32).unwrap(), &Kernel::bump());
    assert_eq!(out.norm(), 0.0);
}

#[test]
fn degenerate_window_is_the_plain_nonlinearity() {
    let m = RsweModel::new(ModelConfig::new(0.1, 1.0, 32).unwrap()).unwrap();
    let u = random_state(&m, 3);
    let out = averaged_nonlinear(&m, &u, 0.0, &AveragingConfig::pointwise(), &Kernel::bump());
    assert!(out.distance(&m.nonlinear(&u)) < 1e-15);
    // a nonzero time conjugates the evaluation
    let t = 0.2;
    let mut v = u.clone();
    m.linear_exponential(&mut v, -t / 0.1);
    let mut want = m.nonlinear(&v);
    m.linear_exponential(&mut want, t / 0.1);
    let got = averaged_nonlinear(&m, &u, t, &AveragingConfig::pointwise(), &Kernel::bump());
    assert!(got.distance(&want) < 1e-13);
}

#[test]
fn quadrature_refinement_self_oracle() {
    let m = RsweModel::new(ModelConfig::new(1.0, 1.0, 32).unwrap()).unwrap();
    let u = random_state(&m, 11);
    let coarse = averaged_nonlinear(&m, &u, 0.0, &AveragingConfig::new(1.0, 64).unwrap(), &Kernel::bump());
    let dense = averaged_nonlinear(&m, &u, 0.0, &AveragingConfig::new(1.0, 4096).unwrap(), &Kernel::bump());
    assert!(coarse.distance(&dense) <= 1e-6 * dense.norm());
    assert!(coarse.symmetry_defect() < 1e-14);
}

#[test]
fn doubling_nodes_shrinks_the_change_fourfold() {
    let m = RsweModel::new(ModelConfig::new(1.0, 1.0, 32).unwrap()).unwrap();
    let u = random_state(&m, 5);
    let avg = |n| averaged_nonlinear(&m, &u, 0.0, &AveragingConfig::new(1.0, n).unwrap(), &Kernel::bump());
    let (a, b, c) = (avg(12), avg(24), avg(48));
    let (d1, d2) = (a.distance(&b), b.distance(&c));
    assert!(d1 >= 4.0 * d2, "changes {d1:e} then {d2:e}");
}

#[test]
fn lambda_examples() {
    let t = KernelTransform::new(Kernel::gaussian(0.1).unwrap());
    let vals: Vec<f64> = [0.1, 1.0, 10.0]
        .iter()
        .map(|&x| lambda_functional(x, 1.0, &[10.0], &t).unwrap())
        .collect();
    assert!(vals[0] > vals[1] && vals[1] > vals[2], "{vals:?}");
    assert!(vals[2] < 1e-3);
    assert_eq!(lambda_functional(1.0, 0.1, &[0.0], &t).unwrap(), 0.0);
    assert!((lambda_functional(1e-9, 0.1, &[1.0], &t).unwrap() - 1.0).abs() < 1e-8);
    assert!(lambda_functional(1.0, 0.1, &[], &t).is_err());
}

#[test]
fn lambda_decays_past_the_fastest_scale() {
    let lambdas = [0.0, 3.0, 17.0, 63.0];
    for k in kernels() {
        let t = KernelTransform::new(k);
        let dt = 0.1;
        let eta0 = 1.0 / (dt * 63.0);
        let a = lambda_functional(eta0, dt, &lambdas, &t).unwrap();
        let b = lambda_functional(10.0 * eta0, dt, &lambdas, &t).unwrap();
        assert!(b < a);
    }
}

#[test]
fn gaussian_transform_is_log_quadratic() {
    let k = Kernel::gaussian(0.1).unwrap();
    let pts: Vec<(f64, f64)> = (0..=40)
        .map(|i| {
            let x = 2.0 + 4.0 * i as f64 / 40.0;
            (x * x, simpson_transform(&k, x).ln())
        })
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let ss_res: f64 = pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum();
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    assert!(slope < 0.0);
    assert!(1.0 - ss_res / ss_tot >= 0.99);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lambda_is_bounded_by_the_largest_rate(
        lambdas in prop::collection::vec(0.0f64..500.0, 1..12),
        eta in 1e-3f64..50.0,
    ) {
        let t = bump_table();
        let top = lambdas.iter().cloned().fold(0.0, f64::max);
        let v = lambda_functional(eta, 0.1, &lambdas, t).unwrap();
        prop_assert!(v >= 0.0);
        prop_assert!(v <= top * top * (1.0 + 1e-12));
    }

    #[test]
    fn transform_never_exceeds_unit_mass(y in 0.0f64..1e5) {
        for t in [bump_table(), gaussian_table()] {
            prop_assert!(t.magnitude(y) <= 1.0 + 1e-12);
        }
    }
}
