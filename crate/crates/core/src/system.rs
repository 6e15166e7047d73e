//! Coupled system
//!
//! ```text
//! ∂ₜ^α(u - a) = Δu + fₙ(u, v),    ∂ₜ^α(v - b) = dΔv + gₙ(u, v)
//! ```
//!
//! with homogeneous Neumann data, written as `∂ₜ^α(u - a) + Au = fₙ + p₀u`
//! and solved in Volterra form by windowed Picard iteration. Nonlinear terms
//! are evaluated on the grid, the linear evolution acts on mode coefficients.

use std::sync::Arc;

use crate::error::{domain, Error, Result};
use crate::evolution::KernelConfig;
use crate::frac_ops::{adjoint_caputo, caputo_derivative, rl_integral, Signal, TimeGrid};
use crate::linear::{picard_march, MemoryKernel, PicardOptions, SolutionHistory, Termination};
use crate::reaction::{NonlinearSystem, TruncationCutoff};
use crate::scalar::{count, lit, to_f64, Real};
use crate::spectral::{Field, ModeBasis};

pub const DEFAULT_WINDOW: usize = 32;

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions<T> {
    pub tol: T,
    pub max_iter: usize,
    /// Steps per Picard window.
    pub window: usize,
    /// Treat a stalled window as blow-up instead of failing.
    pub stall_is_divergence: bool,
    /// Coefficient norm regarded as divergence.
    pub cap: T,
}

impl<T: Real> Default for SolverOptions<T> {
    fn default() -> Self {
        Self {
            tol: lit(crate::linear::DEFAULT_TOL),
            max_iter: crate::linear::DEFAULT_MAX_ITER,
            window: DEFAULT_WINDOW,
            stall_is_divergence: false,
            cap: lit(1e150),
        }
    }
}

/// Memory kernels of both components on one time grid.
#[derive(Debug, Clone)]
pub struct SystemKernels<T> {
    cfg: KernelConfig<T>,
    u: Arc<MemoryKernel<T>>,
    v: Arc<MemoryKernel<T>>,
    d: T,
}

impl<T: Real> SystemKernels<T> {
    pub fn new(cfg: &KernelConfig<T>, grid: TimeGrid<T>, d: T) -> Result<Self> {
        let basis = cfg.basis();
        let u = Arc::new(MemoryKernel::new(cfg.alpha(), &basis.eigenvalues(), grid)?);
        let v = if d == T::one() {
            u.clone()
        } else {
            Arc::new(MemoryKernel::new(cfg.alpha(), &basis.scaled_eigenvalues(d), grid)?)
        };
        Ok(Self { cfg: cfg.clone(), u, v, d })
    }

    pub fn grid(&self) -> &TimeGrid<T> {
        self.u.grid()
    }

    pub fn config(&self) -> &KernelConfig<T> {
        &self.cfg
    }

    pub fn d(&self) -> T {
        self.d
    }
}

/// Spatial summaries of one time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    pub t: f64,
    pub mass_u: f64,
    pub mass_v: f64,
    pub min_u: f64,
    pub min_v: f64,
    pub max_u_plus_lambda_v: f64,
    pub l1_u: f64,
    pub l1_v: f64,
}

pub const PROBE_HEADER: &str = "t,mass_u,mass_v,min_u,min_v,max_u_plus_lambda_v,l1_u,l1_v";

impl StepDiagnostics {
    pub fn csv_row(&self) -> String {
        format!(
            "{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e}",
            self.t, self.mass_u, self.mass_v, self.min_u, self.min_v, self.max_u_plus_lambda_v, self.l1_u, self.l1_v
        )
    }
}

#[derive(Debug, Clone)]
pub struct SystemSolution<T> {
    pub u: SolutionHistory<T>,
    pub v: SolutionHistory<T>,
    pub lambda: T,
    pub diagnostics: Vec<StepDiagnostics>,
    pub termination: Termination,
    /// `(sweeps, residual)` of every accepted window.
    pub trace: Vec<(usize, f64)>,
    pub cutoff: TruncationCutoff<T>,
}

impl<T: Real> SystemSolution<T> {
    /// Steps actually computed (all of the grid unless the run diverged).
    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn grid(&self) -> &TimeGrid<T> {
        self.u.grid()
    }

    pub fn basis(&self) -> &Arc<ModeBasis<T>> {
        self.u.basis()
    }

    pub fn probe_csv(&self) -> String {
        let mut out = String::from(PROBE_HEADER);
        out.push('\n');
        for d in &self.diagnostics {
            out.push_str(&d.csv_row());
            out.push('\n');
        }
        out
    }

    /// `θ(t_k) = ∫(u + λv) dx`.
    pub fn theta(&self) -> Vec<f64> {
        let lam = to_f64(self.lambda);
        self.diagnostics.iter().map(|d| d.mass_u + lam * d.mass_v).collect()
    }

    /// Largest grid difference between two solutions over their common steps.
    pub fn max_difference(&self, other: &Self) -> f64 {
        let steps = self.len().min(other.len());
        let mut worst = 0.0f64;
        for k in 0..steps {
            for (a, b) in [(&self.u, &other.u), (&self.v, &other.v)] {
                let x = a.grid_values(k);
                let y = b.grid_values(k);
                for (p, q) in x.iter().zip(&y) {
                    worst = worst.max(to_f64((*p - *q).abs()));
                }
            }
        }
        worst
    }
}

fn min_of<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::infinity(), |m, x| m.min(*x))
}

fn diagnostics<T: Real>(basis: &ModeBasis<T>, lambda: T, t: T, u: &[T], v: &[T]) -> StepDiagnostics {
    let sum: Vec<T> = u.iter().zip(v).map(|(a, b)| *a + lambda * *b).collect();
    StepDiagnostics {
        t: to_f64(t),
        mass_u: to_f64(basis.integrate(u)),
        mass_v: to_f64(basis.integrate(v)),
        min_u: to_f64(min_of(u)),
        min_v: to_f64(min_of(v)),
        max_u_plus_lambda_v: to_f64(sum.iter().fold(T::neg_infinity(), |m, x| m.max(*x))),
        l1_u: to_f64(basis.l1_norm(u)),
        l1_v: to_f64(basis.l1_norm(v)),
    }
}

fn grid_of<T: Real>(field: &Field<T>) -> Vec<T> {
    field.to_grid().grid_values().expect("grid current").to_vec()
}

fn coeffs_of<T: Real>(field: &Field<T>) -> Vec<T> {
    field.to_coeffs().coeffs().expect("coefficients current").to_vec()
}

/// Builds the kernels and solves; see [`solve_with_kernels`].
pub fn solve_system<T: Real>(
    cfg: &KernelConfig<T>,
    grid: TimeGrid<T>,
    system: &NonlinearSystem,
    a: &Field<T>,
    b: &Field<T>,
    cutoff: TruncationCutoff<T>,
    opts: &SolverOptions<T>,
) -> Result<SystemSolution<T>> {
    let kernels = SystemKernels::new(cfg, grid, lit(system.d))?;
    solve_with_kernels(&kernels, system, a, b, cutoff, opts)
}

/// Picard iteration on the Volterra form of the truncated system.
///
/// `a` and `b` must be nonnegative on the grid. A run whose values become
/// non-finite (or, with `stall_is_divergence`, whose step equation stops
/// converging) ends early with [`Termination::Diverged`].
pub fn solve_with_kernels<T: Real>(
    kernels: &SystemKernels<T>,
    system: &NonlinearSystem,
    a: &Field<T>,
    b: &Field<T>,
    cutoff: TruncationCutoff<T>,
    opts: &SolverOptions<T>,
) -> Result<SystemSolution<T>> {
    if lit::<T>(system.d) != kernels.d {
        return Err(Error::Precondition(format!(
            "kernels were built for d = {}, system has d = {}",
            kernels.d, system.d
        )));
    }
    let basis = kernels.cfg.basis().clone();
    for (name, f) in [("a", a), ("b", b)] {
        if !Arc::ptr_eq(f.basis(), &basis) {
            return domain(format!("initial value {name} lives on a different basis"));
        }
        let g = grid_of(f);
        if let Some((i, v)) = g.iter().enumerate().find(|(_, v)| !(**v >= T::zero()) || !v.is_finite()) {
            return domain(format!("initial value {name} must be nonnegative and finite; node {i} holds {v}"));
        }
    }
    let p0 = basis.domain().p0();
    let nodes = basis.node_count();
    let modes = basis.n_modes();
    let mut ug = vec![T::zero(); nodes];
    let mut vg = vec![T::zero(); nodes];
    let mut fg = vec![T::zero(); nodes];
    let mut gg = vec![T::zero(); nodes];
    let source = |_k: usize, w: &[&[T]]| -> Vec<Vec<T>> {
        basis.synthesize(w[0], &mut ug);
        basis.synthesize(w[1], &mut vg);
        for i in 0..nodes {
            let (f, g) = cutoff.apply(system, ug[i], vg[i]);
            fg[i] = f;
            gg[i] = g;
        }
        let mut fc = vec![T::zero(); modes];
        let mut gc = vec![T::zero(); modes];
        basis.project(&fg, &mut fc);
        basis.project(&gg, &mut gc);
        for n in 0..modes {
            fc[n] = fc[n] + p0 * w[0][n];
            gc[n] = gc[n] + p0 * w[1][n];
        }
        vec![fc, gc]
    };
    let popts = PicardOptions {
        tol: opts.tol,
        max_iter: opts.max_iter,
        window: opts.window,
        stall_is_divergence: opts.stall_is_divergence,
        cap: opts.cap,
    };
    let march = picard_march(&[&*kernels.u, &*kernels.v], &[coeffs_of(a), coeffs_of(b)], source, popts)?;
    let grid = *kernels.grid();
    let lambda = lit::<T>(system.lambda);
    let mut states = march.states;
    let v_coeffs = states.pop().unwrap();
    let u_coeffs = states.pop().unwrap();
    let u = SolutionHistory::new(grid, basis.clone(), u_coeffs);
    let v = SolutionHistory::new(grid, basis.clone(), v_coeffs);
    let diagnostics =
        (0..u.len()).map(|k| diagnostics(&basis, lambda, grid.node(k), &u.grid_values(k), &v.grid_values(k))).collect();
    Ok(SystemSolution {
        u,
        v,
        lambda,
        diagnostics,
        termination: march.termination,
        trace: march.trace.into_iter().map(|(n, r)| (n, to_f64(r))).collect(),
        cutoff,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AprioriReport {
    pub min_u: f64,
    pub min_v: f64,
    pub max_u_plus_lambda_v: f64,
    /// `‖a + λb‖_∞` on the grid.
    pub bound: f64,
    /// `max_t (‖u‖₁ + ‖v‖₁) / (‖a‖₁ + ‖b‖₁)`.
    pub l1_ratio: f64,
    /// Largest `ψₙ (f + λg)` seen on the computed iterates (should be ≤ 0).
    pub max_combined_source: f64,
    pub violations: Vec<String>,
}

impl AprioriReport {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Invariant-region and L¹ checks for a dissipative run: at every step
/// `min u, min v ≥ -tol_neg` and `max(u + λv) ≤ ‖a + λb‖_∞ + tol_bound`.
pub fn check_apriori_bounds<T: Real>(
    sol: &SystemSolution<T>,
    system: &NonlinearSystem,
    a: &Field<T>,
    b: &Field<T>,
    tol_neg: f64,
    tol_bound: f64,
) -> AprioriReport {
    let basis = sol.basis();
    let lam = system.lambda;
    let ag = grid_of(a);
    let bg = grid_of(b);
    let bound = ag.iter().zip(&bg).map(|(x, y)| to_f64(*x) + lam * to_f64(*y)).fold(f64::NEG_INFINITY, f64::max);
    let l1_0 = to_f64(basis.l1_norm(&ag)) + to_f64(basis.l1_norm(&bg));
    let mut report = AprioriReport {
        min_u: f64::INFINITY,
        min_v: f64::INFINITY,
        max_u_plus_lambda_v: f64::NEG_INFINITY,
        bound,
        l1_ratio: 0.0,
        max_combined_source: f64::NEG_INFINITY,
        violations: Vec::new(),
    };
    if sol.termination != Termination::Completed {
        report.violations.push(format!("run ended early: {:?}", sol.termination));
    }
    for (k, d) in sol.diagnostics.iter().enumerate() {
        report.min_u = report.min_u.min(d.min_u);
        report.min_v = report.min_v.min(d.min_v);
        report.max_u_plus_lambda_v = report.max_u_plus_lambda_v.max(d.max_u_plus_lambda_v);
        report.l1_ratio = report.l1_ratio.max((d.l1_u + d.l1_v) / l1_0);
        let mut local = Vec::new();
        if d.min_u < -tol_neg {
            local.push(format!("step {k}: min u = {:e}", d.min_u));
        }
        if d.min_v < -tol_neg {
            local.push(format!("step {k}: min v = {:e}", d.min_v));
        }
        if d.max_u_plus_lambda_v > bound + tol_bound {
            local.push(format!("step {k}: max(u + lambda v) = {} exceeds {bound}", d.max_u_plus_lambda_v));
        }
        if report.violations.len() < 20 {
            report.violations.extend(local);
        }
    }
    for k in 0..sol.len() {
        let ug = sol.u.grid_values(k);
        let vg = sol.v.grid_values(k);
        for (x, y) in ug.iter().zip(&vg) {
            let (f, g) = sol.cutoff.apply(system, *x, *y);
            report.max_combined_source = report.max_combined_source.max(to_f64(f) + lam * to_f64(g));
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq)]
pub struct MassReport {
    /// `max_k |∫(u - a) - J^α[∫fₙ]|` and the same for `v`, at the computed steps.
    pub integrated_mismatch: f64,
    /// `max |∂ₜ^α ∫(u - a) - ∫fₙ|` (L1 scheme) over `t ≥ T/8`, where the
    /// scheme is consistent for `t^α`-type masses; `None` for α = 1.
    pub derivative_mismatch: Option<f64>,
    pub steps: usize,
}

impl MassReport {
    /// Larger of the two mismatches.
    pub fn mismatch(&self) -> f64 {
        self.integrated_mismatch.max(self.derivative_mismatch.unwrap_or(0.0))
    }

    pub fn pass(&self, tol: f64) -> bool {
        self.mismatch() < tol
    }
}

/// Both sides of `∂ₜ^α ∫(u - a) dx = ∫ fₙ(u, v) dx` (and its `v` analogue)
/// over the first `upto + 1` steps (all computed steps by default).
pub fn check_mass_identity<T: Real>(
    sol: &SystemSolution<T>,
    system: &NonlinearSystem,
    alpha: T,
    upto: Option<usize>,
) -> Result<MassReport> {
    let steps = upto.map_or(sol.len() - 1, |s| s.min(sol.len() - 1));
    if steps < 2 {
        return domain("mass identity needs at least two steps");
    }
    let grid = sol.grid().truncated(steps)?;
    let basis = sol.basis();
    let mut source_u = Vec::with_capacity(steps + 1);
    let mut source_v = Vec::with_capacity(steps + 1);
    let mut mass_u = Vec::with_capacity(steps + 1);
    let mut mass_v = Vec::with_capacity(steps + 1);
    let mut fg = vec![T::zero(); basis.node_count()];
    let mut gg = vec![T::zero(); basis.node_count()];
    for k in 0..=steps {
        let ug = sol.u.grid_values(k);
        let vg = sol.v.grid_values(k);
        for i in 0..ug.len() {
            let (f, g) = sol.cutoff.apply(system, ug[i], vg[i]);
            fg[i] = f;
            gg[i] = g;
        }
        source_u.push(basis.integrate(&fg));
        source_v.push(basis.integrate(&gg));
        mass_u.push(basis.integrate(&ug) - basis.integrate(&sol.u.grid_values(0)));
        mass_v.push(basis.integrate(&vg) - basis.integrate(&sol.v.grid_values(0)));
    }
    let mut integrated = 0.0f64;
    let mut derivative = if alpha < T::one() { Some(0.0f64) } else { None };
    for (mass, src) in [(mass_u, source_u), (mass_v, source_v)] {
        let mass = Signal::new(grid, mass)?;
        let src = Signal::new(grid, src)?;
        integrated = integrated.max(to_f64(rl_integral(alpha, &src)?.max_abs_diff(&mass)));
        if let Some(dm) = derivative.as_mut() {
            let lhs = caputo_derivative(alpha, &mass)?;
            let worst = lhs
                .values()
                .iter()
                .zip(src.values())
                .skip(steps.div_ceil(8))
                .map(|(x, y)| to_f64((*x - *y).abs()))
                .fold(0.0, f64::max);
            *dm = dm.max(worst);
        }
    }
    Ok(MassReport { integrated_mismatch: integrated, derivative_mismatch: derivative, steps })
}

/// Test function `cos(kπx₁/L₁) · χ(t)` of the weak formulation.
#[derive(Debug, Clone)]
pub struct WeakTest<T> {
    pub wavenumber: usize,
    pub time_profile: Signal<T>,
}

impl<T: Real> WeakTest<T> {
    /// `cos(kπx₁/L₁)(T - t)²`.
    pub fn standard(wavenumber: usize, grid: TimeGrid<T>) -> Self {
        let t_final = grid.t_final();
        let time_profile = Signal::from_fn(grid, |t| (t_final - t) * (t_final - t)).expect("finite profile");
        Self { wavenumber, time_profile }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeakRow {
    pub component: char,
    pub wavenumber: usize,
    /// `∫_Q (w - w₀)(∂ₜ^α)*ψ`
    pub memory_term: f64,
    /// `∫_Q w Δψ` (times `d` for `v`)
    pub diffusion_term: f64,
    /// `∫_Q fₙ ψ` (or `gₙ`)
    pub reaction_term: f64,
    /// `|memory - diffusion - reaction| / (sum of magnitudes)`
    pub relative_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeakResidualReport {
    pub rows: Vec<WeakRow>,
}

impl WeakResidualReport {
    pub fn max_relative(&self) -> f64 {
        self.rows.iter().map(|r| r.relative_residual).fold(0.0, f64::max)
    }
}

fn trapezoid(values: &[f64], dt: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let inner: f64 = values[1..n - 1].iter().sum();
    dt * (inner + 0.5 * (values[0] + values[n - 1]))
}

/// Residuals of the weak identities for both components. Needs a completed
/// run; every test profile must vanish at the final time.
pub fn weak_residual<T: Real>(
    sol: &SystemSolution<T>,
    system: &NonlinearSystem,
    alpha: T,
    tests: &[WeakTest<T>],
) -> Result<WeakResidualReport> {
    if sol.termination != Termination::Completed {
        return Err(Error::Precondition("weak residual needs a run that reached the final time".into()));
    }
    let basis = sol.basis();
    let domain_spec = basis.domain();
    let length = domain_spec.lengths()[0];
    let grid = *sol.grid();
    let dt = to_f64(grid.dt());
    let n_nodes = basis.node_count();
    let u0 = sol.u.grid_values(0);
    let v0 = sol.v.grid_values(0);
    let mut rows = Vec::new();
    for test in tests {
        if test.time_profile.grid().n_steps() != grid.n_steps() {
            return domain("test profile must live on the solution grid");
        }
        let adjoint = if alpha < T::one() {
            adjoint_caputo(alpha, &test.time_profile)?
        } else {
            return domain("weak residual is defined for alpha in (0, 1)");
        };
        let kx = T::PI() * count::<T>(test.wavenumber) / length;
        let spatial: Vec<T> = (0..n_nodes).map(|i| (kx * domain_spec.node(i)[0]).cos()).collect();
        let laplace = -(kx * kx);
        let weighted = |g: &[T]| -> f64 {
            let prod: Vec<T> = g.iter().zip(&spatial).map(|(x, y)| *x * *y).collect();
            to_f64(basis.integrate(&prod))
        };
        for (comp, hist, init, diff) in [('u', &sol.u, &u0, 1.0), ('v', &sol.v, &v0, system.d)] {
            let mut mem = Vec::with_capacity(grid.len());
            let mut dif = Vec::with_capacity(grid.len());
            let mut rea = Vec::with_capacity(grid.len());
            for k in 0..grid.len() {
                let wg = hist.grid_values(k);
                let shifted: Vec<T> = wg.iter().zip(init.iter()).map(|(x, y)| *x - *y).collect();
                let chi = to_f64(test.time_profile.values()[k]);
                mem.push(weighted(&shifted) * to_f64(adjoint.values()[k]));
                dif.push(diff * to_f64(laplace) * weighted(&wg) * chi);
                let ug = sol.u.grid_values(k);
                let vg = sol.v.grid_values(k);
                let r: Vec<T> = ug
                    .iter()
                    .zip(&vg)
                    .map(|(x, y)| {
                        let (f, g) = sol.cutoff.apply(system, *x, *y);
                        if comp == 'u' {
                            f
                        } else {
                            g
                        }
                    })
                    .collect();
                rea.push(weighted(&r) * chi);
            }
            let m = trapezoid(&mem, dt);
            let d = trapezoid(&dif, dt);
            let r = trapezoid(&rea, dt);
            let scale = m.abs() + d.abs() + r.abs();
            let relative_residual = if scale == 0.0 { 0.0 } else { (m - d - r).abs() / scale };
            rows.push(WeakRow {
                component: comp,
                wavenumber: test.wavenumber,
                memory_term: m,
                diffusion_term: d,
                reaction_term: r,
                relative_residual,
            });
        }
    }
    Ok(WeakResidualReport { rows })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncationReport {
    pub levels: (f64, f64),
    pub max_difference: f64,
    pub threshold: f64,
}

impl TruncationReport {
    pub fn pass(&self) -> bool {
        self.max_difference < self.threshold
    }
}

/// Solves at two cutoff levels and compares; passes when the difference is
/// below ten times the Picard tolerance.
pub fn truncation_independence<T: Real>(
    kernels: &SystemKernels<T>,
    system: &NonlinearSystem,
    a: &Field<T>,
    b: &Field<T>,
    levels: (T, T),
    opts: &SolverOptions<T>,
) -> Result<TruncationReport> {
    let first = solve_with_kernels(kernels, system, a, b, TruncationCutoff::new(levels.0)?, opts)?;
    let second = solve_with_kernels(kernels, system, a, b, TruncationCutoff::new(levels.1)?, opts)?;
    Ok(TruncationReport {
        levels: (to_f64(levels.0), to_f64(levels.1)),
        max_difference: first.max_difference(&second),
        threshold: 10.0 * to_f64(opts.tol),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::DomainSpec;

    fn setup(alpha: f64, steps: usize) -> (KernelConfig<f64>, TimeGrid<f64>) {
        let basis = ModeBasis::build(DomainSpec::interval(1.0, 65, 1.0).unwrap(), 16).unwrap();
        (KernelConfig::new(alpha, basis).unwrap(), TimeGrid::new(0.5, steps).unwrap())
    }

    #[test]
    fn zero_reaction_keeps_constants() {
        let (cfg, grid) = setup(0.6, 32);
        let a = Field::from_fn(cfg.basis().clone(), |_| 1.0);
        let sol = solve_system(
            &cfg,
            grid,
            &NonlinearSystem::zero(),
            &a,
            &a,
            TruncationCutoff::new(10.0).unwrap(),
            &SolverOptions::default(),
        )
        .unwrap();
        assert_eq!(sol.termination, Termination::Completed);
        for d in &sol.diagnostics {
            assert!((d.max_u_plus_lambda_v - 2.0).abs() < 1e-12, "{d:?}");
            assert!((d.min_u - 1.0).abs() < 1e-12);
        }
        let apriori = check_apriori_bounds(&sol, &NonlinearSystem::zero(), &a, &a, 1e-12, 1e-12);
        assert!(apriori.pass(), "{apriori:?}");
    }

    #[test]
    fn rejects_negative_data() {
        let (cfg, grid) = setup(0.6, 8);
        let a = Field::from_fn(cfg.basis().clone(), |x| x[0] - 0.5);
        let b = Field::from_fn(cfg.basis().clone(), |_| 1.0);
        let r = solve_system(
            &cfg,
            grid,
            &NonlinearSystem::zero(),
            &a,
            &b,
            TruncationCutoff::new(10.0).unwrap(),
            &SolverOptions::default(),
        );
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn probe_csv_layout() {
        let (cfg, grid) = setup(0.5, 4);
        let a = Field::from_fn(cfg.basis().clone(), |_| 0.5);
        let gs = NonlinearSystem::gray_scott(0.06).unwrap();
        let sol = solve_system(&cfg, grid, &gs, &a, &a, TruncationCutoff::new(5.0).unwrap(), &SolverOptions::default())
            .unwrap();
        let csv = sol.probe_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], PROBE_HEADER);
        assert_eq!(lines.len(), 6);
        assert!(lines[1..].iter().all(|l| l.split(',').count() == 8));
    }

    #[test]
    fn zero_test_function_gives_zero_residual() {
        let (cfg, grid) = setup(0.5, 16);
        let a = Field::from_fn(cfg.basis().clone(), |x| 1.0 + 0.1 * (std::f64::consts::PI * x[0]).cos());
        let gs = NonlinearSystem::gray_scott(0.06).unwrap();
        let sol = solve_system(&cfg, grid, &gs, &a, &a, TruncationCutoff::new(5.0).unwrap(), &SolverOptions::default())
            .unwrap();
        let zero = WeakTest { wavenumber: 1, time_profile: Signal::from_fn(grid, |_| 0.0).unwrap() };
        let r = weak_residual(&sol, &gs, 0.5, &[zero]).unwrap();
        assert!(r.rows.iter().all(|row| row.relative_residual == 0.0));
        let bad = WeakTest { wavenumber: 1, time_profile: Signal::from_fn(grid, |_| 1.0).unwrap() };
        assert!(matches!(weak_residual(&sol, &gs, 0.5, &[bad]), Err(Error::Precondition(_))));
    }
}
