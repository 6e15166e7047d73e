//! Linear problem `∂ₜ^α(w - w₀) + A w = F (+ c w)` solved through its
//! mild-solution (Volterra) form.
//!
//! The source is interpolated linearly in time on each panel and integrated
//! exactly against the kernel `τ^{α-1} E_{α,α}(-λτ^α)`, using
//!
//! ```text
//! Φ₁(τ) = ∫₀^τ K = τ^α E_{α,α+1}(-λτ^α)
//! Φ₂(τ) = ∫₀^τ Φ₁ = τ^{α+1} E_{α,α+2}(-λτ^α)
//! ```
//!
//! so the scheme is exact for sources that are constant (or affine) in time.
//! The weight at the current node makes each step implicit; steps are resolved
//! by Picard iteration over windows of steps.

use std::sync::Arc;

use crate::error::{domain, Error, Result};
use crate::evolution::KernelConfig;
use crate::frac_ops::TimeGrid;
use crate::mittag_leffler::{ml, MlParams};
use crate::scalar::{count, lit, CompensatedSum, Real};
use crate::spectral::{Field, ModeBasis};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 200;

/// Time-stepping weights for a set of eigenvalues on a uniform grid.
#[derive(Debug, Clone)]
pub struct MemoryKernel<T> {
    grid: TimeGrid<T>,
    alpha: T,
    eigenvalues: Vec<T>,
    /// `relax[n][m] = E_{α,1}(-λ_n (m h)^α)`
    relax: Vec<Vec<T>>,
    /// weight of the panel's left node at lag m (used for `F_0`)
    left: Vec<Vec<T>>,
    /// weight of `F_j` for interior `j` at lag m = k - j
    interior: Vec<Vec<T>>,
    /// weight of the current node `F_k`
    diagonal: Vec<T>,
}

impl<T: Real> MemoryKernel<T> {
    pub fn new(alpha: T, eigenvalues: &[T], grid: TimeGrid<T>) -> Result<Self> {
        if !(alpha > T::zero() && alpha <= T::one()) {
            return domain(format!("fractional order alpha = {alpha} outside (0, 1]"));
        }
        if let Some(l) = eigenvalues.iter().find(|l| !(**l >= T::zero())) {
            return domain(format!("eigenvalue {l} must be nonnegative"));
        }
        let n = grid.n_steps();
        let h = grid.dt();
        let p1 = MlParams::new(alpha, T::one())?;
        let p_int = MlParams::new(alpha, alpha + T::one())?;
        let p_int2 = MlParams::new(alpha, alpha + lit(2.0))?;

        let mut relax = Vec::with_capacity(eigenvalues.len());
        let mut left = Vec::with_capacity(eigenvalues.len());
        let mut interior = Vec::with_capacity(eigenvalues.len());
        let mut diagonal = Vec::with_capacity(eigenvalues.len());
        for &lambda in eigenvalues {
            let mut s = vec![T::one(); n + 1];
            let mut phi1 = vec![T::zero(); n + 1];
            let mut phi2 = vec![T::zero(); n + 1];
            for m in 1..=n {
                let tau = count::<T>(m) * h;
                let ta = tau.powf(alpha);
                let z = -lambda * ta;
                s[m] = ml(p1, z)?;
                phi1[m] = ta * ml(p_int, z)?;
                phi2[m] = ta * tau * ml(p_int2, z)?;
            }
            // lag m panel spans τ ∈ [(m-1)h, mh]
            let mut p = vec![T::zero(); n + 2];
            let mut q = vec![T::zero(); n + 2];
            for m in 1..=n {
                let mass = phi1[m] - phi1[m - 1];
                let qm = (phi2[m] - phi2[m - 1] - h * phi1[m - 1]) / h;
                q[m] = qm;
                p[m] = mass - qm;
            }
            let inner: Vec<T> = (0..=n).map(|m| if m == 0 { T::zero() } else { p[m] + q[m + 1] }).collect();
            relax.push(s);
            diagonal.push(q[1]);
            left.push(p[..=n].to_vec());
            interior.push(inner);
        }
        Ok(Self { grid, alpha, eigenvalues: eigenvalues.to_vec(), relax, left, interior, diagonal })
    }

    pub fn grid(&self) -> &TimeGrid<T> {
        &self.grid
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn eigenvalues(&self) -> &[T] {
        &self.eigenvalues
    }

    pub fn n_modes(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `E_{α,1}(-λ_n t_k^α)`
    pub fn relaxation(&self, mode: usize, step: usize) -> T {
        self.relax[mode][step]
    }

    /// Contribution of `w₀` and of sources at steps `0..upto` to step `k`,
    /// for `k ≥ upto ≥ 1`.
    fn history(&self, k: usize, upto: usize, w0: &[T], sources: &[Vec<T>], out: &mut [T]) {
        for (n, o) in out.iter_mut().enumerate() {
            let mut acc = CompensatedSum::new();
            acc.add(self.relax[n][k] * w0[n]);
            acc.add(self.left[n][k] * sources[0][n]);
            let inner = &self.interior[n];
            for (j, src) in sources.iter().enumerate().take(upto.min(k)).skip(1) {
                acc.add(inner[k - j] * src[n]);
            }
            *o = acc.value();
        }
    }
}

/// How a windowed march ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    Completed,
    /// The step could not be resolved: values became non-finite or the step
    /// equation lost its fixed point. `last_valid` is the last accepted step.
    Diverged {
        last_valid: usize,
    },
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct PicardOptions<T> {
    pub tol: T,
    pub max_iter: usize,
    pub window: usize,
    /// Treat a window whose iteration stalls as the onset of blow-up (the
    /// implicit step equation has lost its fixed point) rather than an error.
    pub stall_is_divergence: bool,
    /// Coefficient norms above this count as divergence.
    pub cap: T,
}

impl<T: Real> PicardOptions<T> {
    pub fn new(tol: T, max_iter: usize, window: usize) -> Self {
        Self { tol, max_iter, window, stall_is_divergence: false, cap: lit(1e150) }
    }
}

pub(crate) struct MarchResult<T> {
    /// `states[c][k]` = coefficients of component `c` at step `k`
    pub states: Vec<Vec<Vec<T>>>,
    pub termination: Termination,
    /// `(sweeps, final residual)` per accepted window
    pub trace: Vec<(usize, T)>,
}

enum WindowFailure {
    NonFinite,
    Stalled { iterations: usize, residual: f64 },
}

fn vec_norm<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |acc, x| acc + *x * *x).sqrt()
}

/// Windowed Picard iteration for `w_c = S w_c(0) + ∫ K_c F_c(w)` with a source
/// that is local in time. A failing window is retried one step at a time so
/// that divergence is reported at the first step that cannot be resolved.
pub(crate) fn picard_march<T, S>(
    kernels: &[&MemoryKernel<T>],
    initial: &[Vec<T>],
    mut source: S,
    opts: PicardOptions<T>,
) -> Result<MarchResult<T>>
where
    T: Real,
    S: FnMut(usize, &[&[T]]) -> Vec<Vec<T>>,
{
    let n_steps = kernels[0].grid().n_steps();
    let mut states: Vec<Vec<Vec<T>>> = initial.iter().map(|w0| vec![w0.clone()]).collect();
    let mut sources: Vec<Vec<Vec<T>>> = {
        let refs: Vec<&[T]> = initial.iter().map(|v| v.as_slice()).collect();
        source(0, &refs).into_iter().map(|s| vec![s]).collect()
    };
    let mut trace = Vec::new();

    let mut start = 1;
    let mut stepwise_until = 0;
    while start <= n_steps {
        let w = if start <= stepwise_until { 1 } else { opts.window.max(1) };
        let end = (start + w - 1).min(n_steps);
        match run_window(kernels, &mut states, &mut sources, &mut source, start, end, opts) {
            Ok(entry) => {
                trace.push(entry);
                start = end + 1;
            }
            Err(failure) => {
                states.iter_mut().for_each(|s| s.truncate(start));
                sources.iter_mut().for_each(|s| s.truncate(start));
                let divergence = match failure {
                    WindowFailure::NonFinite => true,
                    WindowFailure::Stalled { .. } => opts.stall_is_divergence,
                };
                if divergence && end > start {
                    stepwise_until = end;
                    continue;
                }
                if divergence {
                    return Ok(MarchResult {
                        states,
                        termination: Termination::Diverged { last_valid: start - 1 },
                        trace,
                    });
                }
                let WindowFailure::Stalled { iterations, residual } = failure else { unreachable!() };
                return Err(Error::NonConvergence { iterations, residual });
            }
        }
    }
    Ok(MarchResult { states, termination: Termination::Completed, trace })
}

fn run_window<T, S>(
    kernels: &[&MemoryKernel<T>],
    states: &mut [Vec<Vec<T>>],
    sources: &mut [Vec<Vec<T>>],
    source: &mut S,
    start: usize,
    end: usize,
    opts: PicardOptions<T>,
) -> std::result::Result<(usize, T), WindowFailure>
where
    T: Real,
    S: FnMut(usize, &[&[T]]) -> Vec<Vec<T>>,
{
    let comps = kernels.len();
    let len = end - start + 1;
    // history before the window is fixed during the sweeps
    let mut fixed: Vec<Vec<Vec<T>>> = Vec::with_capacity(comps);
    for c in 0..comps {
        let modes = kernels[c].n_modes();
        let w0 = states[c][0].clone();
        let rows = (start..=end)
            .map(|k| {
                let mut row = vec![T::zero(); modes];
                kernels[c].history(k, start, &w0, &sources[c], &mut row);
                row
            })
            .collect();
        fixed.push(rows);
        // initial guess: hold the last accepted state
        let last = states[c][start - 1].clone();
        let last_src = sources[c][start - 1].clone();
        for _ in 0..len {
            states[c].push(last.clone());
            sources[c].push(last_src.clone());
        }
    }

    let mut residual = T::infinity();
    for sweep in 1..=opts.max_iter {
        let mut change = T::zero();
        let mut scale = T::zero();
        for c in 0..comps {
            let kern = kernels[c];
            for k in start..=end {
                let mut next = fixed[c][k - start].clone();
                for (n, v) in next.iter_mut().enumerate() {
                    let inner = &kern.interior[n];
                    let mut acc = *v;
                    for j in start..k {
                        acc = acc + inner[k - j] * sources[c][j][n];
                    }
                    *v = acc + kern.diagonal[n] * sources[c][k][n];
                }
                let diff: Vec<T> = next.iter().zip(&states[c][k]).map(|(a, b)| *a - *b).collect();
                let size = vec_norm(&next);
                change = change.max(vec_norm(&diff));
                scale = scale.max(size);
                states[c][k] = next;
            }
        }
        if !(scale <= opts.cap) {
            return Err(WindowFailure::NonFinite);
        }
        for k in start..=end {
            let refs: Vec<&[T]> = (0..comps).map(|c| states[c][k].as_slice()).collect();
            let src = source(k, &refs);
            for (c, s) in src.into_iter().enumerate() {
                sources[c][k] = s;
            }
        }
        let finite = (start..=end).all(|k| (0..comps).all(|c| sources[c][k].iter().all(|v| v.is_finite())));
        if !finite || !change.is_finite() {
            return Err(WindowFailure::NonFinite);
        }
        residual = change / scale.max(T::one());
        if residual <= opts.tol {
            return Ok((sweep, residual));
        }
    }
    Err(WindowFailure::Stalled { iterations: opts.max_iter, residual: residual.to_f64().unwrap_or(f64::NAN) })
}

/// Initial value, source and optional zeroth-order coefficient on a time grid.
#[derive(Debug, Clone)]
pub struct LinearProblem<T> {
    pub cfg: KernelConfig<T>,
    pub grid: TimeGrid<T>,
    pub w0: Field<T>,
    /// `F(·, t_k)` for every node, or `None` for `F ≡ 0`.
    pub source: Option<Vec<Field<T>>>,
    /// `c(·, t_k)` for every node.
    pub coefficient: Option<Vec<Field<T>>>,
}

impl<T: Real> LinearProblem<T> {
    pub fn new(cfg: KernelConfig<T>, grid: TimeGrid<T>, w0: Field<T>) -> Self {
        Self { cfg, grid, w0, source: None, coefficient: None }
    }

    pub fn with_source(mut self, source: Vec<Field<T>>) -> Self {
        self.source = Some(source);
        self
    }

    pub fn with_coefficient(mut self, coefficient: Vec<Field<T>>) -> Self {
        self.coefficient = Some(coefficient);
        self
    }

    fn check_alignment(&self) -> Result<()> {
        for (name, series) in [("source", &self.source), ("coefficient", &self.coefficient)] {
            if let Some(s) = series {
                if s.len() != self.grid.len() {
                    return domain(format!("{name} has {} time samples for {} grid nodes", s.len(), self.grid.len()));
                }
            }
        }
        Ok(())
    }

    fn source_coeffs(&self) -> Option<Vec<Vec<T>>> {
        self.source
            .as_ref()
            .map(|s| s.iter().map(|f| f.to_coeffs().coeffs().expect("coefficients current").to_vec()).collect())
    }
}

/// Per-step coefficient vectors of a solution.
#[derive(Debug, Clone)]
pub struct SolutionHistory<T> {
    grid: TimeGrid<T>,
    basis: Arc<ModeBasis<T>>,
    coeffs: Vec<Vec<T>>,
}

impl<T: Real> SolutionHistory<T> {
    pub(crate) fn new(grid: TimeGrid<T>, basis: Arc<ModeBasis<T>>, coeffs: Vec<Vec<T>>) -> Self {
        Self { grid, basis, coeffs }
    }

    pub fn grid(&self) -> &TimeGrid<T> {
        &self.grid
    }

    pub fn basis(&self) -> &Arc<ModeBasis<T>> {
        &self.basis
    }

    /// Number of stored steps (may be fewer than the grid when a run diverged).
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self, step: usize) -> &[T] {
        &self.coeffs[step]
    }

    pub fn field(&self, step: usize) -> Field<T> {
        Field::from_coeffs(self.basis.clone(), self.coeffs[step].clone()).expect("same basis")
    }

    pub fn grid_values(&self, step: usize) -> Vec<T> {
        let mut out = vec![T::zero(); self.basis.node_count()];
        self.basis.synthesize(&self.coeffs[step], &mut out);
        out
    }

    /// Discrete L∞(L²) distance.
    pub fn max_l2_distance(&self, other: &Self) -> T {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| vec_norm(&a.iter().zip(b).map(|(x, y)| *x - *y).collect::<Vec<_>>()))
            .fold(T::zero(), T::max)
    }
}

/// Mild solution `S(t) w₀ + ∫₀^t K(t - s) F(s) ds` for a problem without
/// coefficient.
pub fn solve_mild<T: Real>(problem: &LinearProblem<T>) -> Result<SolutionHistory<T>> {
    if problem.coefficient.is_some() {
        return Err(Error::Precondition("solve_mild handles the pure source case; use solve_with_coefficient".into()));
    }
    problem.check_alignment()?;
    let basis = problem.cfg.basis().clone();
    let kernel = MemoryKernel::new(problem.cfg.alpha(), &basis.eigenvalues(), problem.grid)?;
    let w0 = problem.w0.to_coeffs().coeffs().expect("coefficients current").to_vec();
    Ok(SolutionHistory::new(problem.grid, basis, mild_with_kernel(&kernel, &w0, problem.source_coeffs().as_deref())))
}

/// Direct evaluation with a precomputed kernel; `sources[k]` are coefficient
/// vectors, `None` meaning zero.
pub fn mild_with_kernel<T: Real>(kernel: &MemoryKernel<T>, w0: &[T], sources: Option<&[Vec<T>]>) -> Vec<Vec<T>> {
    let n = kernel.grid().n_steps();
    let modes = kernel.n_modes();
    let mut out = vec![w0.to_vec()];
    for k in 1..=n {
        let mut row = vec![T::zero(); modes];
        match sources {
            None => {
                for (m, r) in row.iter_mut().enumerate() {
                    *r = kernel.relax[m][k] * w0[m];
                }
            }
            Some(src) => {
                kernel.history(k, k, w0, src, &mut row);
                for (m, r) in row.iter_mut().enumerate() {
                    *r = *r + kernel.diagonal[m] * src[k][m];
                }
            }
        }
        out.push(row);
    }
    out
}

/// Resolves `c w` by Picard iteration on the Volterra equation with the
/// operator shifted to `A + c₀` and source `F + (c₀ + c) w`.
///
/// `shift = None` picks `c₀ = sup|c| + 1`.
pub fn solve_with_coefficient<T: Real>(
    problem: &LinearProblem<T>,
    shift: Option<T>,
    tol: T,
    max_iter: usize,
) -> Result<SolutionHistory<T>> {
    problem.check_alignment()?;
    let Some(coefficient) = problem.coefficient.as_ref() else {
        return Err(Error::Precondition("solve_with_coefficient requires a coefficient".into()));
    };
    let basis = problem.cfg.basis().clone();
    let c_grid: Vec<Vec<T>> =
        coefficient.iter().map(|f| f.to_grid().grid_values().expect("grid current").to_vec()).collect();
    let sup = c_grid.iter().flatten().fold(T::zero(), |m, v| m.max(v.abs()));
    if !sup.is_finite() {
        return domain("coefficient must have finite sup-norm");
    }
    let c0 = shift.unwrap_or(sup + T::one());
    if c0 < sup {
        return Err(Error::Precondition(format!("shift {c0} below sup|c| = {sup}")));
    }
    let shifted: Vec<T> = basis.eigenvalues().iter().map(|l| *l + c0).collect();
    let kernel = MemoryKernel::new(problem.cfg.alpha(), &shifted, problem.grid)?;
    let w0 = problem.w0.to_coeffs().coeffs().expect("coefficients current").to_vec();
    let f = problem.source_coeffs();
    let nodes = basis.node_count();
    let mut grid_buf = vec![T::zero(); nodes];
    let mut prod = vec![T::zero(); nodes];
    let source = |k: usize, w: &[&[T]]| -> Vec<Vec<T>> {
        basis.synthesize(w[0], &mut grid_buf);
        for ((p, g), c) in prod.iter_mut().zip(&grid_buf).zip(&c_grid[k]) {
            *p = (c0 + *c) * *g;
        }
        let mut out = vec![T::zero(); basis.n_modes()];
        basis.project(&prod, &mut out);
        if let Some(f) = &f {
            out.iter_mut().zip(&f[k]).for_each(|(o, s)| *o = *o + *s);
        }
        vec![out]
    };
    let opts = PicardOptions::new(tol, max_iter, problem.grid.n_steps());
    let result = picard_march(&[&kernel], &[w0], source, opts)?;
    if let Termination::Diverged { .. } = result.termination {
        return Err(Error::NonConvergence { iterations: max_iter, residual: f64::INFINITY });
    }
    let mut states = result.states;
    Ok(SolutionHistory::new(problem.grid, basis, states.remove(0)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonnegativityReport {
    pub min_value: f64,
    pub min_step: usize,
    pub min_node: usize,
    pub tolerance: f64,
    pub pass: bool,
}

/// `max(0, -min)` of the band-limited projection of each field: how far
/// spectral truncation alone pushes nonnegative data below zero.
pub fn projection_allowance<T: Real>(fields: &[&Field<T>]) -> T {
    fields
        .iter()
        .map(|f| {
            let p = f.projected();
            let min = p.grid_values().unwrap().iter().fold(T::infinity(), |m, v| m.min(*v));
            (-min).max(T::zero())
        })
        .fold(T::zero(), T::max)
}

/// Minimum of the synthesized solution over all nodes and steps; passes when it
/// is at least `-(1e-8 + allowance)`.
pub fn check_nonnegativity<T: Real>(history: &SolutionHistory<T>, allowance: T) -> NonnegativityReport {
    let mut min_value = f64::INFINITY;
    let mut min_step = 0;
    let mut min_node = 0;
    for k in 0..history.len() {
        for (i, v) in history.grid_values(k).into_iter().enumerate() {
            let v = v.to_f64().unwrap_or(f64::NAN);
            if v < min_value {
                min_value = v;
                min_step = k;
                min_node = i;
            }
        }
    }
    let tolerance = 1e-8 + allowance.to_f64().unwrap_or(0.0);
    NonnegativityReport { min_value, min_step, min_node, tolerance, pass: min_value >= -tolerance }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::DomainSpec;

    fn setup(alpha: f64, steps: usize, modes: usize) -> (KernelConfig<f64>, TimeGrid<f64>) {
        let basis = ModeBasis::build(DomainSpec::interval(1.0, 65, 1.0).unwrap(), modes).unwrap();
        (KernelConfig::new(alpha, basis).unwrap(), TimeGrid::new(1.0, steps).unwrap())
    }

    #[test]
    fn kernel_weights_telescope() {
        let grid = TimeGrid::new(1.0, 32).unwrap();
        let k = MemoryKernel::new(0.6, &[0.0, 2.5, 300.0], grid).unwrap();
        for n in 0..3 {
            // Σ of all source weights at step k equals Φ₁(t_k) = (1 - E)/λ
            let steps = 32;
            let total = k.left[n][steps] + (1..steps).map(|j| k.interior[n][steps - j]).sum::<f64>() + k.diagonal[n];
            let lambda = k.eigenvalues[n];
            let expected =
                if lambda == 0.0 { 1.0 / crate::scalar::gamma(1.6f64) } else { (1.0 - k.relax[n][steps]) / lambda };
            assert!((total - expected).abs() < 1e-12, "mode {n}: {total} vs {expected}");
            assert!(k.left[n][1..].iter().all(|&w| w >= 0.0));
            assert!(k.interior[n][1..].iter().all(|&w| w >= 0.0));
            assert!(k.diagonal[n] > 0.0);
        }
    }

    #[test]
    fn zero_data_gives_zero() {
        let (cfg, grid) = setup(0.5, 16, 8);
        let w0 = Field::from_fn(cfg.basis().clone(), |_| 0.0);
        let h = solve_mild(&LinearProblem::new(cfg, grid, w0)).unwrap();
        assert!((0..h.len()).all(|k| h.coeffs(k).iter().all(|&c| c == 0.0)));
    }

    #[test]
    fn misaligned_source_rejected() {
        let (cfg, grid) = setup(0.5, 16, 8);
        let w0 = Field::from_fn(cfg.basis().clone(), |_| 1.0);
        let src = vec![w0.clone(); 3];
        let p = LinearProblem::new(cfg, grid, w0).with_source(src);
        assert!(matches!(solve_mild(&p), Err(Error::Domain(_))));
    }

    #[test]
    fn heat_decay_of_constant_mode() {
        let (cfg, grid) = setup(1.0, 64, 8);
        let w0 = Field::from_fn(cfg.basis().clone(), |_| 1.0);
        let h = solve_mild(&LinearProblem::new(cfg, grid, w0)).unwrap();
        for k in 0..h.len() {
            let t = grid.node(k);
            let g = h.grid_values(k);
            assert!(g.iter().all(|v| (v - (-t).exp()).abs() < 1e-12));
        }
    }

    #[test]
    fn zero_coefficient_reproduces_mild_solution() {
        let (cfg, grid) = setup(0.5, 32, 16);
        let basis = cfg.basis().clone();
        let w0 = Field::from_fn(basis.clone(), |x| 1.0 + (std::f64::consts::PI * x[0]).cos());
        let src: Vec<_> = grid.nodes().iter().map(|&t| Field::from_fn(basis.clone(), move |x| t * x[0])).collect();
        let zero: Vec<_> = (0..grid.len()).map(|_| Field::from_fn(basis.clone(), |_| 0.0)).collect();
        let plain = solve_mild(&LinearProblem::new(cfg.clone(), grid, w0.clone()).with_source(src.clone())).unwrap();
        let with_c = LinearProblem::new(cfg, grid, w0).with_source(src).with_coefficient(zero);
        // c₀ = 0 shift leaves the operator unchanged
        let h = solve_with_coefficient(&with_c, Some(0.0), 1e-12, 5).unwrap();
        assert!(plain.max_l2_distance(&h) < 1e-14);
    }
}
