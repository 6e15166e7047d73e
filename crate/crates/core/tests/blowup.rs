use approx::assert_relative_eq;
use fracrd::blowup::{
    certify_blowup, comparison_trials, detection_spread, lower_solution, lower_solution_violation, t_star,
    t_star_scaling, BlowupConfig, DEFAULT_THRESHOLD,
};
use fracrd::evolution::KernelConfig;
use fracrd::frac_ops::TimeGrid;
use fracrd::reaction::{NonlinearSystem, TruncationCutoff};
use fracrd::spectral::{DomainSpec, Field, ModeBasis};
use fracrd::system::{solve_system, SolverOptions};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn canonical(alpha: f64, m: Option<u32>) -> BlowupConfig<f64> {
    BlowupConfig::new(alpha, 2.0, 1.0, 1.0, 2.0, 1.0, m).unwrap()
}

#[test]
fn closed_form_values() {
    assert_relative_eq!(t_star(&canonical(0.5, None)), 1.0 / PI, max_relative = 1e-14);
    let unit = BlowupConfig::new(1.0, 2.0, 1.0, 1.0, 1.0, 1.0, None).unwrap();
    assert_relative_eq!(t_star(&unit), 1.0, max_relative = 1e-15);
    assert_relative_eq!(t_star_scaling(&canonical(0.5, None), 2.0), 0.25, max_relative = 1e-14);
}

#[test]
fn lower_solution_samples() {
    let cfg = canonical(0.5, Some(2));
    let ts = t_star(&cfg);
    let grid = TimeGrid::new(ts / 2.0, 4).unwrap();
    let lower = lower_solution(&cfg, &grid).unwrap();
    assert_relative_eq!(lower.values()[0], 2.0);
    assert_relative_eq!(lower.values()[4], 8.0, max_relative = 1e-13);
    assert!(lower_solution(&cfg, &TimeGrid::new(ts, 4).unwrap()).is_err());
}

#[test]
fn lower_solution_inequality_refines() {
    let cfg = canonical(0.5, Some(2));
    let ts = t_star(&cfg);
    let coarse = lower_solution_violation(&cfg, &TimeGrid::new(0.9 * ts, 256).unwrap()).unwrap();
    let fine = lower_solution_violation(&cfg, &TimeGrid::new(0.9 * ts, 512).unwrap()).unwrap();
    assert!(fine <= coarse.max(0.0) + 1e-12, "{coarse:e} {fine:e}");
}

#[test]
fn invalid_configurations() {
    assert!(BlowupConfig::new(0.5, 1.0, 1.0, 1.0, 2.0, 1.0, None).is_err());
    assert!(BlowupConfig::new(0.5, 2.0, 1.0, 1.0, 0.0, 1.0, None).is_err());
    assert!(BlowupConfig::new(0.5, 1.5, 1.0, 1.0, 1.0, 1.0, Some(1)).is_err());
    assert_eq!(BlowupConfig::<f64>::min_exponent(1.5), 2);
}

#[test]
fn canonical_run_is_certified() {
    let basis = ModeBasis::build(DomainSpec::interval(1.0, 33, 1.0).unwrap(), 16).unwrap();
    let cfg = KernelConfig::new(0.5, basis.clone()).unwrap();
    let sys = NonlinearSystem::power(2.0).unwrap();
    let one = Field::from_fn(basis.clone(), |_| 1.0);
    let bc = BlowupConfig::from_data(0.5, &sys, &one, &one, None).unwrap();
    let ts = t_star(&bc);
    let dt: f64 = 1.0 / 256.0;
    let steps = (ts / dt).ceil() as usize + 8;
    let opts = SolverOptions { stall_is_divergence: true, ..SolverOptions::default() };
    let sol = solve_system(
        &cfg,
        TimeGrid::new(steps as f64 * dt, steps).unwrap(),
        &sys,
        &one,
        &one,
        TruncationCutoff::new(1e6).unwrap(),
        &opts,
    )
    .unwrap();
    let report = certify_blowup(&sol, &bc, DEFAULT_THRESHOLD, 0.9 * ts, 1e-3).unwrap();
    assert!(report.pass(), "{report:?}");
    assert!(detection_spread(&sol, bc.m0, &[1e4, 1e6, 1e8]).unwrap() < 2);
    assert!(report.csv_row(0.5, 2.0).ends_with(",true"));
}

#[test]
fn dissipative_system_has_no_blowup_config() {
    let basis = ModeBasis::build(DomainSpec::interval(1.0, 33, 1.0).unwrap(), 16).unwrap();
    let one = Field::from_fn(basis, |_| 1.0);
    let gs = NonlinearSystem::gray_scott(0.06).unwrap();
    assert!(BlowupConfig::from_data(0.5, &gs, &one, &one, None).is_err());
}

#[test]
fn comparison_is_ordered() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let r = comparison_trials(10, 128, 1e-6, &mut rng).unwrap();
    assert!(r.pass(), "{r:?}");
}

proptest! {
    #[test]
    fn scaling_law(alpha in 0.1f64..1.0, p in 1.2f64..4.0, k in 0.1f64..10.0) {
        let cfg = BlowupConfig::new(alpha, p, 1.0, 0.7, 1.3, 2.0, None).unwrap();
        let want = k.powf(-(p - 1.0) / alpha);
        prop_assert!((t_star_scaling(&cfg, k) - want).abs() <= 1e-12 * want);
    }
}
