use approx::assert_relative_eq;
use fracrd::evolution::{apply_k, apply_s, verify_norm_estimates, KernelConfig};
use fracrd::quadrature::integrate;
use fracrd::spectral::{apply_frac_power, DomainSpec, Field, ModeBasis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn cfg(alpha: f64) -> KernelConfig<f64> {
    let basis = ModeBasis::build(DomainSpec::interval(1.0, 129, 1.0).unwrap(), 32).unwrap();
    KernelConfig::new(alpha, basis).unwrap()
}

#[test]
fn lowest_mode_multiplier() {
    let m = cfg(0.5).s_multipliers(1.0).unwrap();
    assert_relative_eq!(m[0], 0.427_583_576_155_807, max_relative = 1e-12);
    assert!(m.iter().all(|v| *v > 0.0 && *v <= 1.0));
}

#[test]
fn unit_order_is_the_heat_semigroup() {
    let c = cfg(1.0);
    let s = c.s_multipliers(0.3).unwrap();
    let k = c.k_multipliers(0.3).unwrap();
    for (n, m) in c.basis().modes().iter().enumerate() {
        let want = (-m.eigenvalue * 0.3).exp();
        assert_relative_eq!(s[n], want, max_relative = 1e-12, epsilon = 1e-300);
        assert_relative_eq!(k[n], want, max_relative = 1e-12, epsilon = 1e-300);
    }
}

#[test]
fn k_multiplier_integrates_to_closed_form() {
    let (alpha, lambda) = (0.6, 2.0);
    let p = fracrd::mittag_leffler::MlParams::new(alpha, alpha).unwrap();
    // r = t^α removes the endpoint singularity
    let q = integrate(
        |r: f64| fracrd::mittag_leffler::ml(p, -lambda * r).unwrap() / alpha,
        0.0,
        1.0,
        &[],
        1e-14,
        1e-13,
        500,
    );
    assert_relative_eq!(q.value, 0.382_214_484_444_087_5, max_relative = 1e-9);
}

#[test]
fn operators_commute_with_fractional_powers() {
    let c = cfg(0.7);
    let f = Field::from_fn(c.basis().clone(), |x| (1.0 + x[0]).ln());
    let a = apply_s(&c, 0.2, &apply_frac_power(0.5, &f)).unwrap();
    let b = apply_frac_power(0.5, &apply_s(&c, 0.2, &f).unwrap());
    for (x, y) in a.coeffs().unwrap().iter().zip(b.coeffs().unwrap()) {
        assert!((x - y).abs() < 1e-14);
    }
    assert!(apply_k(&c, -1.0, &f).is_err());
}

fn wide(alpha: f64) -> KernelConfig<f64> {
    // dense spectrum, so the mode supremum resolves the continuous one
    let basis = ModeBasis::build(DomainSpec::interval(10.0, 513, 1.0).unwrap(), 256).unwrap();
    KernelConfig::new(alpha, basis).unwrap()
}

#[test]
fn slope_fits_track_the_estimates() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (alpha, gamma) in [(0.5, 1.0), (0.5, 0.5), (0.8, 0.5)] {
        let r = verify_norm_estimates(&wide(alpha), gamma, 3, &mut rng).unwrap();
        assert!(r.pass(), "{r:?}");
    }
    let r = verify_norm_estimates(&wide(0.5), 1.0, 2, &mut rng).unwrap();
    assert!(r.s_slope >= -0.55);
    let r = verify_norm_estimates(&wide(0.5), 0.5, 2, &mut rng).unwrap();
    assert!(r.k_slope >= -0.80);
    assert!(verify_norm_estimates(&wide(0.5), 1.5, 2, &mut rng).is_err());
}
