//! Finite-time blow-up under a superlinear source: the closed-form upper
//! bound `T*`, the lower solution `θ̲`, and certification of solver runs
//! against both.

use rand::Rng;

use crate::error::{domain, Error, Result};
use crate::frac_ops::{caputo_derivative, solve_fode, Signal, TimeGrid};
use crate::linear::Termination;
use crate::reaction::{NonlinearSystem, Regime};
use crate::scalar::{gamma, lit, to_f64, Real};
use crate::spectral::Field;
use crate::system::SystemSolution;

/// Default divergence threshold as a multiple of `m₀`.
pub const DEFAULT_THRESHOLD: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlowupConfig<T> {
    pub alpha: T,
    pub p: T,
    pub lambda: T,
    /// `C_{p,λ}`
    pub c: T,
    /// `m₀ = ∫(a + λb)`
    pub m0: T,
    /// `|Ω|`
    pub measure: T,
    /// Lower-solution exponent.
    pub m: u32,
}

impl<T: Real> BlowupConfig<T> {
    /// Smallest admissible lower-solution exponent, `⌈1/(p-1)⌉`.
    pub fn min_exponent(p: T) -> u32 {
        to_f64((T::one() / (p - T::one())).ceil()).max(1.0) as u32
    }

    /// Validates and fills `m` with [`Self::min_exponent`] when absent.
    pub fn new(alpha: T, p: T, lambda: T, c: T, m0: T, measure: T, m: Option<u32>) -> Result<Self> {
        let mut problems = Vec::new();
        if !(alpha > T::zero() && alpha <= T::one()) {
            problems.push(format!("alpha = {alpha} outside (0, 1]"));
        }
        if !(p > T::one()) {
            problems.push(format!("p = {p} must exceed 1"));
        }
        if !(lambda > T::zero()) {
            problems.push(format!("lambda = {lambda} must be positive"));
        }
        if !(c > T::zero()) {
            problems.push(format!("C_p_lambda = {c} must be positive"));
        }
        if !(m0 > T::zero() && m0.is_finite()) {
            problems.push(format!("m0 = {m0} must be positive (initial data must not vanish identically)"));
        }
        if !(measure > T::zero()) {
            problems.push(format!("domain measure {measure} must be positive"));
        }
        if !problems.is_empty() {
            return domain(problems.join("; "));
        }
        let min = Self::min_exponent(p);
        let m = m.unwrap_or(min);
        if m < min {
            return domain(format!("exponent m = {m} below ceil(1/(p-1)) = {min}"));
        }
        Ok(Self { alpha, p, lambda, c, m0, measure, m })
    }

    /// Reads `p`, `C_{p,λ}` and `λ` from a blow-up system and `m₀` from the data.
    pub fn from_data(alpha: T, system: &NonlinearSystem, a: &Field<T>, b: &Field<T>, m: Option<u32>) -> Result<Self> {
        let Regime::Blowup { p, c } = system.regime else {
            return Err(Error::Precondition("system is not in the blow-up regime".into()));
        };
        let basis = a.basis();
        let lambda = lit::<T>(system.lambda);
        let ag = a.to_grid().grid_values().expect("grid current").to_vec();
        let bg = b.to_grid().grid_values().expect("grid current").to_vec();
        let sum: Vec<T> = ag.iter().zip(&bg).map(|(x, y)| *x + lambda * *y).collect();
        Self::new(alpha, lit(p), lambda, lit(c), basis.integrate(&sum), basis.domain().measure(), m)
    }

    /// `C₀ = C_{p,λ}^{-1} |Ω|^{-p/p'}`.
    pub fn c0(&self) -> T {
        let p_over_pprime = self.p - T::one();
        T::one() / (self.c * self.measure.powf(p_over_pprime))
    }
}

/// `T* = [(p-1) Γ(2-α) C^{-1} (m₀/|Ω|)^{p-1}]^{-1/α}`.
pub fn t_star<T: Real>(cfg: &BlowupConfig<T>) -> T {
    let mean = cfg.m0 / cfg.measure;
    let base = (cfg.p - T::one()) * gamma(lit::<T>(2.0) - cfg.alpha) / cfg.c * mean.powf(cfg.p - T::one());
    base.powf(-T::one() / cfg.alpha)
}

/// `θ̲(t) = m₀ (T*/(T* - t))^m` on a grid ending before `T*`.
pub fn lower_solution<T: Real>(cfg: &BlowupConfig<T>, grid: &TimeGrid<T>) -> Result<Signal<T>> {
    let ts = t_star(cfg);
    if !(grid.t_final() < ts) {
        return domain(format!("grid ends at {} which is not before T* = {ts}", grid.t_final()));
    }
    Signal::from_fn(*grid, |t| cfg.m0 * (ts / (ts - t)).powi(cfg.m as i32))
}

/// Largest `∂ₜ^α(θ̲ - m₀) - C₀ θ̲^p` over the grid nodes, relative to the
/// right-hand side; nonpositive when the lower-solution inequality holds.
pub fn lower_solution_violation<T: Real>(cfg: &BlowupConfig<T>, grid: &TimeGrid<T>) -> Result<f64> {
    let theta = lower_solution(cfg, grid)?;
    let shifted = Signal::new(*grid, theta.values().iter().map(|v| *v - cfg.m0).collect())?;
    let lhs = if cfg.alpha < T::one() {
        caputo_derivative(cfg.alpha, &shifted)?
    } else {
        let dt = grid.dt();
        let v = shifted.values();
        let mut d = vec![T::zero(); v.len()];
        for k in 1..v.len() {
            d[k] = (v[k] - v[k - 1]) / dt;
        }
        Signal::new(*grid, d)?
    };
    let c0 = cfg.c0();
    Ok(lhs
        .values()
        .iter()
        .zip(theta.values())
        .skip(1)
        .map(|(l, th)| {
            let rhs = c0 * th.powf(cfg.p);
            to_f64((*l - rhs) / rhs)
        })
        .fold(f64::NEG_INFINITY, f64::max))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlowupReport {
    pub t_star: f64,
    pub times: Vec<f64>,
    /// `θ(t_k) = ∫(u + λv)` at every computed step
    pub theta: Vec<f64>,
    /// `θ̲(t_k)` on the steps before `min(window, T*)`
    pub lower: Vec<f64>,
    /// Multiple of `m₀` used as divergence threshold.
    pub threshold_factor: f64,
    pub detected_step: Option<usize>,
    pub detected_time: Option<f64>,
    /// `max_k (θ̲ - θ)` over the comparison window
    pub lower_gap: f64,
    pub dt: f64,
    pub detected_before_bound: bool,
    pub above_lower: bool,
}

impl BlowupReport {
    pub fn pass(&self) -> bool {
        self.detected_before_bound && self.above_lower
    }

    pub const CSV_HEADER: &'static str = "alpha,p,T_star,detected_T,pass";

    pub fn csv_row(&self, alpha: f64, p: f64) -> String {
        let detected = self.detected_time.map_or_else(|| "nan".to_string(), |t| format!("{t:.10e}"));
        format!("{alpha},{p},{:.15e},{detected},{}", self.t_star, self.pass())
    }
}

/// First step at which the run counts as divergent: `θ` above
/// `factor · m₀`, or the first step the solver could not resolve.
pub fn detect_divergence<T: Real>(sol: &SystemSolution<T>, m0: f64, factor: f64) -> Option<usize> {
    let limit = factor * m0;
    let theta = sol.theta();
    if let Some(k) = theta.iter().position(|th| !(*th <= limit)) {
        return Some(k);
    }
    match sol.termination {
        Termination::Diverged { last_valid } => Some(last_valid + 1),
        Termination::Completed => None,
    }
}

/// Checks a blow-up run: divergence detected no later than `T* + 3dt`, and
/// `θ ≥ θ̲ - tol` on the computed steps inside `[0, window]` (`window < T*`).
pub fn certify_blowup<T: Real>(
    sol: &SystemSolution<T>,
    cfg: &BlowupConfig<T>,
    threshold_factor: f64,
    window: f64,
    tol: f64,
) -> Result<BlowupReport> {
    let ts = to_f64(t_star(cfg));
    if !(window < ts) {
        return domain(format!("comparison window {window} must end before T* = {ts}"));
    }
    let grid = sol.grid();
    let dt = to_f64(grid.dt());
    let theta = sol.theta();
    let times: Vec<f64> = (0..theta.len()).map(|k| to_f64(grid.node(k))).collect();
    let m0 = to_f64(cfg.m0);
    let detected_step = detect_divergence(sol, m0, threshold_factor);
    let detected_time = detected_step.map(|k| to_f64(grid.node(k.min(grid.n_steps()))));
    let mut lower = Vec::new();
    let mut lower_gap = f64::NEG_INFINITY;
    for (t, th) in times.iter().zip(&theta) {
        if *t > window {
            break;
        }
        let bound = m0 * (ts / (ts - t)).powi(cfg.m as i32);
        lower.push(bound);
        lower_gap = lower_gap.max(bound - th);
    }
    Ok(BlowupReport {
        t_star: ts,
        times,
        theta,
        lower,
        threshold_factor,
        detected_step,
        detected_time,
        lower_gap,
        dt,
        detected_before_bound: detected_time.is_some_and(|t| t <= ts + 3.0 * dt),
        above_lower: lower_gap <= tol,
    })
}

/// Largest shift, in steps, of the detected divergence across thresholds.
/// `None` if some threshold never triggers.
pub fn detection_spread<T: Real>(sol: &SystemSolution<T>, m0: f64, factors: &[f64]) -> Option<usize> {
    let steps: Option<Vec<usize>> = factors.iter().map(|f| detect_divergence(sol, m0, *f)).collect();
    let steps = steps?;
    Some(steps.iter().max()? - steps.iter().min()?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub instances: usize,
    /// `max (z - y)` over all instances and nodes (≤ 0 when ordered)
    pub worst_inversion: f64,
    pub tol: f64,
}

impl ComparisonReport {
    pub fn pass(&self) -> bool {
        self.worst_inversion <= self.tol
    }
}

/// Random pairs of scalar problems `∂^α(y - y₀) = h₁(t, y)`,
/// `∂^α(z - z₀) = h₂(t, z)` with `h₁ ≥ h₂` and `y₀ ≥ z₀`; the trajectories
/// must stay ordered.
pub fn comparison_trials<R: Rng + ?Sized>(
    instances: usize,
    steps: usize,
    tol: f64,
    rng: &mut R,
) -> Result<ComparisonReport> {
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..instances {
        let alpha: f64 = rng.gen_range(0.1..0.95);
        let decay: f64 = rng.gen_range(0.0..3.0);
        let amp: f64 = rng.gen_range(-2.0..2.0);
        let freq: f64 = rng.gen_range(0.5..8.0);
        let sat: f64 = rng.gen_range(-1.0..1.0);
        let gap: f64 = rng.gen_range(0.0..0.5);
        let wiggle: f64 = rng.gen_range(0.5..10.0);
        let z0: f64 = rng.gen_range(-1.0..1.0);
        let y0 = z0 + if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..0.5) };
        let horizon: f64 = rng.gen_range(0.5..3.0);
        let grid = TimeGrid::new(horizon, steps)?;
        let base = move |t: f64, y: f64| -decay * y + amp * (freq * t).sin() + sat * y.tanh();
        let lower = solve_fode(alpha, z0, &grid, base)?;
        let upper = solve_fode(alpha, y0, &grid, move |t, y| base(t, y) + gap * (1.0 + (wiggle * t).cos()))?;
        for (z, y) in lower.values().iter().zip(upper.values()) {
            worst = worst.max(z - y);
        }
    }
    Ok(ComparisonReport { instances, worst_inversion: worst, tol })
}

/// `t_star` after scaling the mean of `a + λb` by `k`, divided by the
/// unscaled value; equals `k^{-(p-1)/α}`.
pub fn t_star_scaling<T: Real>(cfg: &BlowupConfig<T>, k: T) -> T {
    let scaled = BlowupConfig { m0: cfg.m0 * k, ..*cfg };
    t_star(&scaled) / t_star(cfg)
}
