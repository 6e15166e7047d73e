use fracrd::config::{Reaction, RegimeKind, RunConfig};
use proptest::prelude::*;

const GRAY_SCOTT: &str = "\
# reference run
[domain]
grid = 65
modes = 32
[time]
T = 0.5
steps = 64
[fractional]
alpha = 0.7
[system]
preset = gray-scott
k = 0.06
[initial]
a = 1 + 0.1*cos(pi*x)
b = 0.5 + 0.1*cos(2*pi*x)
";

#[test]
fn full_file_parses_and_builds() {
    let c = RunConfig::parse(GRAY_SCOTT).unwrap();
    assert_eq!(c.alpha, 0.7);
    assert_eq!(c.system.reaction, Reaction::Preset { name: "gray-scott".into(), k: Some(0.06) });
    let basis = c.basis().unwrap();
    let (a, b) = c.initial_fields(&basis).unwrap();
    assert!((a.grid_values().unwrap()[0] - 1.1).abs() < 1e-14);
    assert!((b.grid_values().unwrap()[0] - 0.6).abs() < 1e-14);
    assert_eq!(c.time_grid().unwrap().n_steps(), 64);
    assert!(c.nonlinear_system().is_ok());
}

#[test]
fn unknown_keys_report_line_numbers() {
    let err = RunConfig::parse("[fractional]\nalpha = 0.5\n[system]\npreset = zero\ncolour = red\n[nowhere]\nx = 1\n")
        .unwrap_err();
    assert!(err.violations.iter().any(|v| v.starts_with("line 5") && v.contains("colour")), "{err}");
    assert!(err.violations.iter().any(|v| v.starts_with("line 6") && v.contains("nowhere")), "{err}");
}

#[test]
fn all_range_violations_listed() {
    let text = "[domain]\ngrid = 3\n[time]\nsteps = 1\n[fractional]\nalpha = 1\n[system]\npreset = power\np = 1\nC_p_lambda = 1\n";
    let err = RunConfig::parse(text).unwrap_err();
    for needle in ["grid", "steps", "alpha", "p = 1"] {
        assert!(err.violations.iter().any(|v| v.contains(needle)), "missing {needle}: {err}");
    }
}

#[test]
fn blowup_needs_the_constant() {
    let err = RunConfig::parse("[fractional]\nalpha = 0.5\n[system]\npreset = quadratic\n").unwrap_err();
    assert!(err.to_string().contains("Assumption-2 validator"), "{err}");
    let ok = RunConfig::parse("[fractional]\nalpha = 0.5\n[system]\npreset = quadratic\nC_p_lambda = 1\n").unwrap();
    assert_eq!(ok.system.regime, RegimeKind::Blowup);
}

proptest! {
    #[test]
    fn serialization_round_trips(
        alpha in 0.01f64..0.99,
        steps in 2usize..5000,
        lambda in 0.1f64..=1.0,
        tol in 1e-14f64..1e-6,
        len in 0.1f64..20.0,
    ) {
        let text = format!(
            "[domain]\nlengths = {len}\n[time]\nsteps = {steps}\n[fractional]\nalpha = {alpha}\n\
             [system]\nf = -u*v^2\ng = u*v^2 - 0.1*v\nlambda = {lambda}\n[solver]\ntol = {tol}\n"
        );
        let c = RunConfig::parse(&text).unwrap();
        prop_assert_eq!(RunConfig::parse(&c.to_string()).unwrap(), c);
    }
}
