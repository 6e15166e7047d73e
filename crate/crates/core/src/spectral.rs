//! Neumann cosine eigenbasis of `A = -Δ + p₀` on an interval or rectangle.
//!
//! Inner products use the composite trapezoid rule on the uniform grid. Under
//! that rule the sampled cosines `cos(kπx/L)`, `0 ≤ k ≤ G - 2`, are exactly
//! orthogonal, so the discrete Gram matrix is the identity up to rounding. The
//! Nyquist cosine `k = G - 1` has discrete norm twice its continuous one and is
//! therefore not resolvable.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{domain, Result};
use crate::scalar::{count, lit, to_f64, Real};

pub const DEFAULT_GRID_1D: usize = 257;
pub const DEFAULT_GRID_2D: usize = 65;
pub const DEFAULT_MODES_1D: usize = 64;
pub const DEFAULT_MODES_2D: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec<T> {
    lengths: Vec<T>,
    grid_points: Vec<usize>,
    p0: T,
}

impl<T: Real> DomainSpec<T> {
    pub fn interval(length: T, grid_points: usize, p0: T) -> Result<Self> {
        Self::new(vec![length], vec![grid_points], p0)
    }

    pub fn rectangle(lengths: [T; 2], grid_points: [usize; 2], p0: T) -> Result<Self> {
        Self::new(lengths.to_vec(), grid_points.to_vec(), p0)
    }

    fn new(lengths: Vec<T>, grid_points: Vec<usize>, p0: T) -> Result<Self> {
        if let Some(l) = lengths.iter().find(|l| !(**l > T::zero() && l.is_finite())) {
            return domain(format!("domain length {l} must be positive"));
        }
        if let Some(g) = grid_points.iter().find(|g| **g < 8) {
            return domain(format!("grid needs at least 8 points per axis, got {g}"));
        }
        if !(p0 > T::zero()) {
            return domain(format!("shift p0 = {p0} must be positive so that A is positive definite"));
        }
        Ok(Self { lengths, grid_points, p0 })
    }

    pub fn dimension(&self) -> usize {
        self.lengths.len()
    }

    pub fn lengths(&self) -> &[T] {
        &self.lengths
    }

    pub fn grid_points(&self) -> &[usize] {
        &self.grid_points
    }

    pub fn p0(&self) -> T {
        self.p0
    }

    /// |Ω|
    pub fn measure(&self) -> T {
        self.lengths.iter().fold(T::one(), |acc, &l| acc * l)
    }

    pub fn node_count(&self) -> usize {
        self.grid_points.iter().product()
    }

    /// Coordinates of node `i` (row-major, last axis fastest).
    pub fn node(&self, i: usize) -> Vec<T> {
        let mut out = vec![T::zero(); self.dimension()];
        let mut rest = i;
        for axis in (0..self.dimension()).rev() {
            let g = self.grid_points[axis];
            let idx = rest % g;
            rest /= g;
            out[axis] = self.lengths[axis] * count::<T>(idx) / count::<T>(g - 1);
        }
        out
    }

    fn axis_weights(&self, axis: usize) -> Vec<T> {
        let g = self.grid_points[axis];
        let h = self.lengths[axis] / count::<T>(g - 1);
        let mut w = vec![h; g];
        w[0] = h * lit(0.5);
        w[g - 1] = h * lit(0.5);
        w
    }

    /// Trapezoid quadrature weights for every node.
    pub fn quadrature_weights(&self) -> Vec<T> {
        let per_axis: Vec<Vec<T>> = (0..self.dimension()).map(|a| self.axis_weights(a)).collect();
        (0..self.node_count())
            .map(|i| {
                let mut rest = i;
                let mut w = T::one();
                for axis in (0..self.dimension()).rev() {
                    let g = self.grid_points[axis];
                    w = w * per_axis[axis][rest % g];
                    rest /= g;
                }
                w
            })
            .collect()
    }

    /// Largest number of modes with an exact discrete Gram matrix.
    pub fn resolvable_modes(&self) -> usize {
        self.grid_points.iter().map(|g| g - 1).product()
    }
}

/// One Neumann eigenpair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode<T> {
    pub eigenvalue: T,
    /// Cosine wavenumbers per axis (second entry zero in 1D).
    pub indices: [usize; 2],
    pub normalization: T,
}

#[derive(Debug, Clone)]
pub struct ModeBasis<T> {
    domain: DomainSpec<T>,
    modes: Vec<Mode<T>>,
    weights: Vec<T>,
    /// `samples[n * nodes + i] = φ_n(x_i)`
    samples: Vec<T>,
}

fn axis_norm<T: Real>(k: usize, length: T) -> T {
    if k == 0 {
        (T::one() / length).sqrt()
    } else {
        (lit::<T>(2.0) / length).sqrt()
    }
}

impl<T: Real> ModeBasis<T> {
    /// Builds the `n_modes` lowest eigenpairs, sorted by eigenvalue.
    pub fn build(domain: DomainSpec<T>, n_modes: usize) -> Result<Arc<Self>> {
        if n_modes == 0 {
            return domain_err("need at least one mode");
        }
        let resolvable = domain.resolvable_modes();
        if n_modes > resolvable {
            return domain_err(format!("{n_modes} modes requested but the grid resolves only {resolvable}"));
        }
        let pi = T::PI();
        let wave = |k: usize, axis: usize| -> T {
            let kf = count::<T>(k) * pi / domain.lengths[axis];
            kf * kf
        };
        let mut modes: Vec<Mode<T>> = if domain.dimension() == 1 {
            (0..n_modes)
                .map(|k| Mode {
                    eigenvalue: wave(k, 0) + domain.p0,
                    indices: [k, 0],
                    normalization: axis_norm(k, domain.lengths[0]),
                })
                .collect()
        } else {
            let kmax = [domain.grid_points[0] - 2, domain.grid_points[1] - 2];
            let mut all = Vec::with_capacity((kmax[0] + 1) * (kmax[1] + 1));
            for k1 in 0..=kmax[0] {
                for k2 in 0..=kmax[1] {
                    all.push(Mode {
                        eigenvalue: wave(k1, 0) + wave(k2, 1) + domain.p0,
                        indices: [k1, k2],
                        normalization: axis_norm(k1, domain.lengths[0]) * axis_norm(k2, domain.lengths[1]),
                    });
                }
            }
            all.sort_by(|a, b| a.eigenvalue.partial_cmp(&b.eigenvalue).unwrap().then(a.indices.cmp(&b.indices)));
            all.truncate(n_modes);
            all
        };
        modes.shrink_to_fit();

        let nodes = domain.node_count();
        let mut samples = vec![T::zero(); n_modes * nodes];
        for (n, mode) in modes.iter().enumerate() {
            for i in 0..nodes {
                let x = domain.node(i);
                let mut v = mode.normalization;
                for (axis, &xa) in x.iter().enumerate() {
                    v = v * (count::<T>(mode.indices[axis]) * pi * xa / domain.lengths[axis]).cos();
                }
                samples[n * nodes + i] = v;
            }
        }
        let weights = domain.quadrature_weights();
        Ok(Arc::new(Self { domain, modes, weights, samples }))
    }

    pub fn domain(&self) -> &DomainSpec<T> {
        &self.domain
    }

    pub fn modes(&self) -> &[Mode<T>] {
        &self.modes
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn node_count(&self) -> usize {
        self.weights.len()
    }

    pub fn eigenvalues(&self) -> Vec<T> {
        self.modes.iter().map(|m| m.eigenvalue).collect()
    }

    /// Eigenvalues of `-dΔ + p₀`: `d(λ - p₀) + p₀`.
    pub fn scaled_eigenvalues(&self, d: T) -> Vec<T> {
        let p0 = self.domain.p0;
        self.modes.iter().map(|m| d * (m.eigenvalue - p0) + p0).collect()
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Sampled eigenfunction `n` on the grid.
    pub fn mode_samples(&self, n: usize) -> &[T] {
        let nodes = self.node_count();
        &self.samples[n * nodes..(n + 1) * nodes]
    }

    /// Quadrature projection `(f, φ_n)` for every retained mode.
    pub fn project(&self, grid_values: &[T], coeffs: &mut [T]) {
        let nodes = self.node_count();
        let weighted: Vec<T> = grid_values.iter().zip(&self.weights).map(|(f, w)| *f * *w).collect();
        for (n, c) in coeffs.iter_mut().enumerate() {
            let row = &self.samples[n * nodes..(n + 1) * nodes];
            *c = row.iter().zip(&weighted).fold(T::zero(), |acc, (p, f)| acc + *p * *f);
        }
    }

    /// Synthesis `Σ c_n φ_n(x_i)`.
    pub fn synthesize(&self, coeffs: &[T], grid_values: &mut [T]) {
        let nodes = self.node_count();
        grid_values.iter_mut().for_each(|v| *v = T::zero());
        for (n, &c) in coeffs.iter().enumerate() {
            if c == T::zero() {
                continue;
            }
            let row = &self.samples[n * nodes..(n + 1) * nodes];
            for (v, p) in grid_values.iter_mut().zip(row) {
                *v = *v + c * *p;
            }
        }
    }

    /// `Σ_i w_i f(x_i)`
    pub fn integrate(&self, grid_values: &[T]) -> T {
        grid_values.iter().zip(&self.weights).fold(T::zero(), |acc, (f, w)| acc + *f * *w)
    }

    pub fn l1_norm(&self, grid_values: &[T]) -> T {
        grid_values.iter().zip(&self.weights).fold(T::zero(), |acc, (f, w)| acc + f.abs() * *w)
    }

    pub fn l2_norm(&self, grid_values: &[T]) -> T {
        grid_values.iter().zip(&self.weights).fold(T::zero(), |acc, (f, w)| acc + *f * *f * *w).sqrt()
    }

    /// Discrete Gram matrix `(φ_m, φ_n)` under the quadrature rule.
    pub fn gram(&self) -> Vec<Vec<T>> {
        let n = self.n_modes();
        (0..n)
            .map(|a| {
                let pa = self.mode_samples(a);
                (0..n)
                    .map(|b| {
                        let pb = self.mode_samples(b);
                        pa.iter().zip(pb).zip(&self.weights).fold(T::zero(), |acc, ((x, y), w)| acc + *x * *y * *w)
                    })
                    .collect()
            })
            .collect()
    }
}

fn domain_err<R>(msg: impl Into<String>) -> Result<R> {
    domain(msg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Current {
    Grid,
    Coeffs,
    Both,
}

/// Spatial snapshot held as grid samples and/or mode coefficients.
#[derive(Debug, Clone)]
pub struct Field<T> {
    basis: Arc<ModeBasis<T>>,
    grid_values: Vec<T>,
    coeffs: Vec<T>,
    current: Current,
}

impl<T: Real> Field<T> {
    pub fn from_grid(basis: Arc<ModeBasis<T>>, grid_values: Vec<T>) -> Result<Self> {
        if grid_values.len() != basis.node_count() {
            return domain(format!("field has {} samples for {} grid nodes", grid_values.len(), basis.node_count()));
        }
        let coeffs = vec![T::zero(); basis.n_modes()];
        Ok(Self { basis, grid_values, coeffs, current: Current::Grid })
    }

    pub fn from_coeffs(basis: Arc<ModeBasis<T>>, coeffs: Vec<T>) -> Result<Self> {
        if coeffs.len() != basis.n_modes() {
            return domain(format!("field has {} coefficients for {} modes", coeffs.len(), basis.n_modes()));
        }
        let grid_values = vec![T::zero(); basis.node_count()];
        Ok(Self { basis, grid_values, coeffs, current: Current::Coeffs })
    }

    /// Samples `f(x)` (1D) or `f(x, y)` (2D; the closure receives the
    /// coordinate slice).
    pub fn from_fn(basis: Arc<ModeBasis<T>>, f: impl Fn(&[T]) -> T) -> Self {
        let values = (0..basis.node_count()).map(|i| f(&basis.domain().node(i))).collect();
        Self::from_grid(basis, values).expect("node count matches by construction")
    }

    pub fn basis(&self) -> &Arc<ModeBasis<T>> {
        &self.basis
    }

    pub fn has_coeffs(&self) -> bool {
        self.current != Current::Grid
    }

    pub fn has_grid(&self) -> bool {
        self.current != Current::Coeffs
    }

    /// Coefficients, when the coefficient representation is current.
    pub fn coeffs(&self) -> Option<&[T]> {
        self.has_coeffs().then_some(self.coeffs.as_slice())
    }

    /// Grid samples, when the grid representation is current.
    pub fn grid_values(&self) -> Option<&[T]> {
        self.has_grid().then_some(self.grid_values.as_slice())
    }

    /// Projects onto the retained modes. The grid samples are kept but marked
    /// stale unless they already were band-limited.
    pub fn to_coeffs(&self) -> Self {
        if self.has_coeffs() {
            return self.clone();
        }
        let mut coeffs = vec![T::zero(); self.basis.n_modes()];
        self.basis.project(&self.grid_values, &mut coeffs);
        Self { basis: self.basis.clone(), grid_values: self.grid_values.clone(), coeffs, current: Current::Coeffs }
    }

    /// Synthesizes the grid from the coefficients.
    pub fn to_grid(&self) -> Self {
        if self.has_grid() {
            return self.clone();
        }
        let mut grid_values = vec![T::zero(); self.basis.node_count()];
        self.basis.synthesize(&self.coeffs, &mut grid_values);
        Self { basis: self.basis.clone(), grid_values, coeffs: self.coeffs.clone(), current: Current::Both }
    }

    /// Band-limited projection with both representations current.
    pub fn projected(&self) -> Self {
        self.to_coeffs().with_fresh_grid()
    }

    fn with_fresh_grid(mut self) -> Self {
        self.basis.synthesize(&self.coeffs, &mut self.grid_values);
        self.current = Current::Both;
        self
    }

    /// Multiplies every coefficient by `m(n, λ_n)`.
    pub fn map_coeffs(&self, m: impl Fn(usize, T) -> T) -> Self {
        let base = self.to_coeffs();
        let coeffs = base
            .coeffs
            .iter()
            .zip(self.basis.modes())
            .enumerate()
            .map(|(n, (c, mode))| *c * m(n, mode.eigenvalue))
            .collect();
        Self::from_coeffs(self.basis.clone(), coeffs).expect("same basis")
    }

    /// Quadrature L² norm of the grid samples.
    pub fn l2_norm(&self) -> T {
        let g = self.to_grid();
        self.basis.l2_norm(&g.grid_values)
    }

    /// ℓ² norm of the coefficients.
    pub fn coeff_norm(&self) -> T {
        let c = self.to_coeffs();
        c.coeffs.iter().fold(T::zero(), |acc, x| acc + *x * *x).sqrt()
    }

    /// Writes `x[,y],value` rows preceded by a header naming the field and time.
    pub fn snapshot_csv(&self, name: &str, t: T) -> String {
        let g = self.to_grid();
        let domain = self.basis.domain();
        let mut out = String::new();
        let _ = writeln!(out, "# field={name} t={:e}", to_f64(t));
        out.push_str(if domain.dimension() == 1 { "x,value\n" } else { "x,y,value\n" });
        for (i, v) in g.grid_values.iter().enumerate() {
            let x = domain.node(i);
            for c in &x {
                let _ = write!(out, "{:e},", to_f64(*c));
            }
            let _ = writeln!(out, "{:e}", to_f64(*v));
        }
        out
    }
}

/// Parsed field snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub name: String,
    pub time: f64,
    pub coords: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

/// Reads a snapshot written by [`Field::snapshot_csv`].
pub fn parse_snapshot(text: &str) -> Result<Snapshot> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    let header = header.strip_prefix('#').map(str::trim).unwrap_or("");
    let mut name = None;
    let mut time = None;
    for part in header.split_whitespace() {
        if let Some(v) = part.strip_prefix("field=") {
            name = Some(v.to_string());
        } else if let Some(v) = part.strip_prefix("t=") {
            time = v.parse::<f64>().ok();
        }
    }
    let (Some(name), Some(time)) = (name, time) else {
        return domain("snapshot header must read `# field=<name> t=<time>`");
    };
    let columns = lines.next().unwrap_or_default().split(',').count();
    if columns < 2 {
        return domain("snapshot column line missing");
    }
    let mut coords = Vec::new();
    let mut values = Vec::new();
    for (n, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = line.split(',').map(|s| s.trim().parse::<f64>()).collect();
        match parsed {
            Ok(mut row) if row.len() == columns => {
                values.push(row.pop().unwrap());
                coords.push(row);
            }
            _ => return domain(format!("malformed snapshot row {}", n + 3)),
        }
    }
    Ok(Snapshot { name, time, coords, values })
}

/// Coefficient-wise `λ_n^γ` scaling (field converted to coefficients first).
pub fn apply_frac_power<T: Real>(gamma: T, field: &Field<T>) -> Field<T> {
    field.map_coeffs(|_, lambda| lambda.powf(gamma))
}

pub fn to_coeffs<T: Real>(field: &Field<T>) -> Field<T> {
    field.to_coeffs()
}

pub fn to_grid<T: Real>(field: &Field<T>) -> Field<T> {
    field.to_grid()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn basis_1d(n: usize) -> Arc<ModeBasis<f64>> {
        ModeBasis::build(DomainSpec::interval(1.0, 65, 1.0).unwrap(), n).unwrap()
    }

    #[test]
    fn interval_spectrum() {
        let b = basis_1d(3);
        let l = b.eigenvalues();
        assert!((l[0] - 1.0).abs() < 1e-15);
        assert!((l[1] - (PI * PI + 1.0)).abs() < 1e-12);
        assert!((l[2] - (4.0 * PI * PI + 1.0)).abs() < 1e-12);
        let b = ModeBasis::build(DomainSpec::interval(2.0 * PI, 33, 0.5).unwrap(), 2).unwrap();
        assert!((b.eigenvalues()[1] - 0.75).abs() < 1e-14);
    }

    #[test]
    fn rectangle_spectrum_matches_enumeration() {
        let b = ModeBasis::build(DomainSpec::rectangle([1.0, 1.0], [17, 17], 1.0).unwrap(), 4).unwrap();
        let mut brute: Vec<f64> =
            (0..16).flat_map(|i| (0..16).map(move |j| ((i * i + j * j) as f64) * PI * PI + 1.0)).collect();
        brute.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (x, y) in b.eigenvalues().iter().zip(&brute[..4]) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn too_many_modes_rejected() {
        let d = DomainSpec::interval(1.0, 9, 1.0).unwrap();
        assert!(ModeBasis::build(d.clone(), 8).is_ok());
        assert!(ModeBasis::build(d, 9).is_err());
        assert!(DomainSpec::interval(1.0, 7, 1.0).is_err());
        assert!(DomainSpec::interval(1.0, 9, 0.0).is_err());
    }

    #[test]
    fn gram_is_identity() {
        for b in [basis_1d(64), ModeBasis::build(DomainSpec::rectangle([1.0, 2.0], [9, 13], 1.0).unwrap(), 40).unwrap()]
        {
            let g = b.gram();
            for (i, row) in g.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    let target = if i == j { 1.0 } else { 0.0 };
                    assert!((v - target).abs() < 1e-10, "gram[{i}][{j}] = {v}");
                }
            }
        }
    }

    #[test]
    fn constant_and_cosine_projection() {
        let b = basis_1d(16);
        let c = Field::from_fn(b.clone(), |_| 3.0).to_coeffs();
        let c = c.coeffs().unwrap();
        assert!((c[0] - 3.0).abs() < 1e-13);
        assert!(c[1..].iter().all(|v| v.abs() < 1e-13));

        let f = Field::from_fn(b.clone(), |x| (PI * x[0]).cos()).to_coeffs();
        let c = f.coeffs().unwrap();
        // cos(πx) = φ_2 / √2
        assert!((c[1] - 1.0 / 2f64.sqrt()).abs() < 1e-13);
        assert!(c.iter().enumerate().all(|(n, v)| n == 1 || v.abs() < 1e-10));
    }

    #[test]
    fn projection_is_idempotent() {
        let b = basis_1d(12);
        let f = Field::from_fn(b, |x| (x[0] * 7.0).sin() + x[0] * x[0]);
        let once = f.projected();
        let twice = once.to_grid().to_coeffs().to_grid();
        let a = once.grid_values().unwrap();
        let c = twice.grid_values().unwrap();
        assert!(a.iter().zip(c).all(|(x, y)| (x - y).abs() < 1e-13));
    }

    #[test]
    fn parseval_on_band_limited_field() {
        let b = basis_1d(20);
        let f = Field::from_fn(b, |x| (x[0] * 5.0).exp()).projected();
        assert!((f.l2_norm() - f.coeff_norm()).abs() < 1e-10 * f.coeff_norm());
    }

    #[test]
    fn frac_power_composition() {
        let b = basis_1d(10);
        let f = Field::from_fn(b, |x| 1.0 + x[0] * (1.0 - x[0]));
        let id = apply_frac_power(0.0, &f);
        let base = f.to_coeffs();
        assert_eq!(id.coeffs().unwrap(), base.coeffs().unwrap());
        let half_twice = apply_frac_power(0.5, &apply_frac_power(0.5, &f));
        let one = apply_frac_power(1.0, &f);
        for (x, y) in half_twice.coeffs().unwrap().iter().zip(one.coeffs().unwrap()) {
            assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0));
        }
    }

    #[test]
    fn snapshot_round_trip() {
        let b = basis_1d(4);
        let f = Field::from_fn(b, |x| x[0]);
        let text = f.snapshot_csv("u", 0.25);
        let snap = parse_snapshot(&text).unwrap();
        assert_eq!(snap.name, "u");
        assert_eq!(snap.time, 0.25);
        assert_eq!(snap.values.len(), 65);
        assert!((snap.coords[64][0] - 1.0).abs() < 1e-15);
    }
}
