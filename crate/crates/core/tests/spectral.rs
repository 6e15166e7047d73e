use fracrd::spectral::{parse_snapshot, DomainSpec, Field, ModeBasis};
use std::f64::consts::PI;

#[test]
fn interval_eigenpairs() {
    let b = ModeBasis::build(DomainSpec::interval(2.0, 129, 1.0).unwrap(), 8).unwrap();
    let ev = b.eigenvalues();
    for (n, l) in ev.iter().enumerate() {
        let want = 1.0 + (n as f64 * PI / 2.0).powi(2);
        assert!((l - want).abs() < 1e-12, "mode {n}");
    }
}

#[test]
fn rectangle_modes_are_sorted_and_orthonormal() {
    let b = ModeBasis::build(DomainSpec::<f64>::rectangle([1.0, 2.0], [33, 65], 0.5).unwrap(), 40).unwrap();
    let ev = b.eigenvalues();
    assert!(ev.windows(2).all(|w| w[0] <= w[1]));
    assert!((ev[0] - 0.5).abs() < 1e-14);
    for (i, row) in b.gram().iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-10);
        }
    }
}

#[test]
fn projection_reproduces_band_limited_fields() {
    let b = ModeBasis::build(DomainSpec::interval(1.0, 65, 1.0).unwrap(), 16).unwrap();
    let f = Field::from_fn(b.clone(), |x| 2.0 + (PI * x[0]).cos() - 0.5 * (3.0 * PI * x[0]).cos());
    let back = f.projected();
    let diff = f
        .grid_values()
        .unwrap()
        .iter()
        .zip(back.grid_values().unwrap())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(diff < 1e-12, "{diff:e}");
    assert!((f.to_coeffs().coeffs().unwrap()[0] - 2.0).abs() < 1e-12);
}

#[test]
fn snapshot_round_trip() {
    let b = ModeBasis::build(DomainSpec::rectangle([1.0, 1.0], [9, 9], 1.0).unwrap(), 10).unwrap();
    let f = Field::from_fn(b.clone(), |x| x[0] + 2.0 * x[1]);
    let snap = parse_snapshot(&f.snapshot_csv("u", 0.25)).unwrap();
    assert_eq!(snap.name, "u");
    assert_eq!(snap.time, 0.25);
    assert_eq!(snap.values.len(), 81);
    for (c, v) in snap.coords.iter().zip(&snap.values) {
        assert!((c[0] + 2.0 * c[1] - v).abs() < 1e-12);
    }
    assert!(parse_snapshot("x,value\n0,1\n").is_err());
}

#[test]
fn too_many_modes_rejected() {
    assert!(ModeBasis::build(DomainSpec::interval(1.0, 9, 1.0).unwrap(), 64).is_err());
    assert!(DomainSpec::interval(1.0, 4, 1.0).is_err());
    assert!(DomainSpec::interval(-1.0, 9, 1.0).is_err());
}
