use fracrd::evolution::KernelConfig;
use fracrd::frac_ops::TimeGrid;
use fracrd::linear::{
    check_nonnegativity, projection_allowance, solve_mild, solve_with_coefficient, LinearProblem, MemoryKernel,
};
use fracrd::mittag_leffler::{ml, MlParams};
use fracrd::spectral::{DomainSpec, Field, ModeBasis};
use std::f64::consts::PI;
use std::sync::Arc;

fn basis() -> Arc<ModeBasis<f64>> {
    ModeBasis::build(DomainSpec::interval(1.0, 129, 1.0).unwrap(), 24).unwrap()
}

fn mode(b: &Arc<ModeBasis<f64>>, n: usize, scale: f64) -> Field<f64> {
    let mut c = vec![0.0; b.n_modes()];
    c[n] = scale;
    Field::from_coeffs(b.clone(), c).unwrap()
}

#[test]
fn free_evolution_of_one_mode() {
    let b = basis();
    let grid = TimeGrid::new(2.0, 64).unwrap();
    for alpha in [0.3, 0.5, 0.7, 0.9] {
        let lambda = b.modes()[2].eigenvalue;
        let h = solve_mild(&LinearProblem::new(KernelConfig::new(alpha, b.clone()).unwrap(), grid, mode(&b, 2, 1.0)))
            .unwrap();
        let p = MlParams::new(alpha, 1.0).unwrap();
        for k in 1..grid.len() {
            let want = ml(p, -lambda * grid.node(k).powf(alpha)).unwrap();
            assert!((h.coeffs(k)[2] - want).abs() < 1e-9);
        }
    }
}

#[test]
fn constant_source_closed_form() {
    let b = basis();
    let grid = TimeGrid::new(1.0, 50).unwrap();
    let lambda = b.modes()[1].eigenvalue;
    let problem = LinearProblem::new(KernelConfig::new(0.4, b.clone()).unwrap(), grid, mode(&b, 1, 0.0))
        .with_source(vec![mode(&b, 1, 3.0); grid.len()]);
    let h = solve_mild(&problem).unwrap();
    let p = MlParams::new(0.4, 1.0).unwrap();
    for k in 1..grid.len() {
        let want = 3.0 / lambda * (1.0 - ml(p, -lambda * grid.node(k).powf(0.4)).unwrap());
        assert!((h.coeffs(k)[1] - want).abs() < 1e-9);
    }
}

#[test]
fn unit_order_decays_exponentially() {
    let b = basis();
    let grid = TimeGrid::new(1.0, 20).unwrap();
    let h =
        solve_mild(&LinearProblem::new(KernelConfig::new(1.0, b.clone()).unwrap(), grid, mode(&b, 0, 1.0))).unwrap();
    assert!((h.coeffs(20)[0] - (-1f64).exp()).abs() < 1e-12);
}

#[test]
fn kernel_weights_are_nonnegative() {
    let k = MemoryKernel::new(0.35, &[1.0, 50.0, 4000.0], TimeGrid::new(1.0, 40).unwrap()).unwrap();
    for m in 0..3 {
        for s in 0..=40 {
            assert!(k.relaxation(m, s) >= 0.0);
        }
    }
}

#[test]
fn bounded_coefficient_keeps_solutions_nonnegative() {
    let b = basis();
    let grid = TimeGrid::new(0.5, 64).unwrap();
    let w0 = Field::from_fn(b.clone(), |x| (1.0 + (PI * x[0]).cos()) * 0.5);
    let c: Vec<Field<f64>> = grid
        .nodes()
        .iter()
        .map(|t: &f64| Field::from_fn(b.clone(), |x| 3.0 * (PI * x[0]).cos() - 2.0 + t.sin()))
        .collect();
    let problem = LinearProblem::new(KernelConfig::new(0.6, b.clone()).unwrap(), grid, w0.clone()).with_coefficient(c);
    let h = solve_with_coefficient(&problem, None, 1e-12, 400).unwrap();
    let r = check_nonnegativity(&h, projection_allowance(&[&w0]));
    assert!(r.pass, "{r:?}");
}

#[test]
fn mismatched_source_length_rejected() {
    let b = basis();
    let grid = TimeGrid::new(1.0, 8).unwrap();
    let problem = LinearProblem::new(KernelConfig::new(0.5, b.clone()).unwrap(), grid, mode(&b, 0, 1.0))
        .with_source(vec![mode(&b, 0, 1.0); 3]);
    assert!(solve_mild(&problem).is_err());
}
