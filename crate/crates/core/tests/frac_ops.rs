use approx::assert_relative_eq;
use fracrd::frac_ops::{
    adjoint_caputo, caputo_derivative, rl_integral, solve_fode, solve_fode_system, Signal, TimeGrid,
};
use fracrd::mittag_leffler::{ml, MlParams};
use fracrd::scalar::gamma;

fn grid(n: usize) -> TimeGrid<f64> {
    TimeGrid::new(1.0, n).unwrap()
}

#[test]
fn integral_of_a_ramp_is_exact() {
    let g = grid(100);
    let ramp = Signal::from_fn(g, |t| 2.0 * t + 1.0).unwrap();
    for beta in [0.2, 0.5, 0.9, 1.0] {
        let j = rl_integral(beta, &ramp).unwrap();
        for k in 0..g.len() {
            let t = g.node(k);
            let want = 2.0 * t.powf(1.0 + beta) / gamma(2.0 + beta) + t.powf(beta) / gamma(1.0 + beta);
            assert!((j.values()[k] - want).abs() < 1e-13, "beta {beta} t {t}");
        }
    }
}

#[test]
fn l1_derivative_of_a_ramp_is_exact() {
    let g = grid(64);
    let ramp = Signal::from_fn(g, |t| t).unwrap();
    let d = caputo_derivative(0.4, &ramp).unwrap();
    for k in 1..g.len() {
        assert_relative_eq!(d.values()[k], g.node(k).powf(0.6) / gamma(1.6), max_relative = 1e-12);
    }
}

#[test]
fn semigroup_error_shrinks_with_refinement() {
    let err = |n| {
        let s = Signal::from_fn(grid(n), |t: f64| (3.0 * t).sin() + t * t).unwrap();
        let two = rl_integral(0.25, &rl_integral(0.35, &s).unwrap()).unwrap();
        two.max_abs_diff(&rl_integral(0.6, &s).unwrap())
    };
    let (coarse, fine) = (err(128), err(256));
    assert!(fine < coarse && fine < 1e-4, "{coarse:e} {fine:e}");
}

#[test]
fn derivative_inverts_integral() {
    let g = grid(512);
    let s = Signal::from_fn(g, |t| t * t + t.sin()).unwrap();
    let back = caputo_derivative(0.7, &rl_integral(0.7, &s).unwrap()).unwrap();
    let err = back.values().iter().zip(s.values()).skip(1).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 5e-3, "{err:e}");
}

#[test]
fn scalar_relaxation_matches_mittag_leffler() {
    let p = MlParams::new(0.6, 1.0).unwrap();
    let mut errors = Vec::new();
    for n in [128, 256] {
        let g = grid(n);
        let y = solve_fode(0.6, 1.0, &g, |_, y| -2.0 * y).unwrap();
        let err = (0..g.len())
            .map(|k| (y.values()[k] - ml(p, -2.0 * g.node(k).powf(0.6)).unwrap()).abs())
            .fold(0.0, f64::max);
        errors.push(err);
    }
    assert!(errors[1] < errors[0] && errors[1] < 5e-3, "{errors:?}");
}

#[test]
fn stiff_small_order_step_converges() {
    let g = TimeGrid::<f64>::new(3.0, 64).unwrap();
    let y = solve_fode(0.1, 1.0, &g, |_, y: f64| -20.0 * y + y.tanh()).unwrap();
    assert!(y.values().iter().all(|v| v.is_finite() && v.abs() <= 1.0));
}

#[test]
fn system_solver_handles_coupling() {
    let g = grid(200);
    let out = solve_fode_system(1.0, &[1.0, 0.0], &g, |_, y, f| {
        f[0] = y[1];
        f[1] = -y[0];
    })
    .unwrap();
    assert!((out[0][200] - 1f64.cos()).abs() < 1e-4);
    assert!((out[1][200] + 1f64.sin()).abs() < 1e-4);
}

#[test]
fn adjoint_requires_vanishing_endpoint() {
    let g = grid(32);
    let psi = Signal::from_fn(g, |t| (1.0 - t).powi(2)).unwrap();
    assert!(adjoint_caputo(0.5, &psi).is_ok());
    let bad = Signal::from_fn(g, |_| 1.0).unwrap();
    assert!(adjoint_caputo(0.5, &bad).is_err());
}

#[test]
fn grid_and_order_validation() {
    assert!(TimeGrid::<f64>::new(1.0, 0).is_err());
    assert!(TimeGrid::<f64>::new(-1.0, 4).is_err());
    let s = Signal::from_fn(grid(4), |t| t).unwrap();
    assert!(rl_integral(0.0, &s).is_err());
    assert!(caputo_derivative(1.5, &s).is_err());
}
