//! Mild-solution operators `S(t)` and `K(t)` applied mode by mode, and an
//! empirical check of their smoothing estimates.

use std::sync::Arc;

use rand::Rng;

use crate::error::{domain, Result};
use crate::mittag_leffler::ml_kernel_pair;
use crate::scalar::{count, lit, Real};
use crate::spectral::{Field, ModeBasis};

/// Fractional order together with the eigenbasis the operators act on.
#[derive(Debug, Clone)]
pub struct KernelConfig<T> {
    alpha: T,
    basis: Arc<ModeBasis<T>>,
}

impl<T: Real> KernelConfig<T> {
    /// `alpha ∈ (0, 1]`; `alpha = 1` is the classical heat semigroup and is
    /// accepted as a reference case.
    pub fn new(alpha: T, basis: Arc<ModeBasis<T>>) -> Result<Self> {
        if !(alpha > T::zero() && alpha <= T::one()) {
            return domain(format!("fractional order alpha = {alpha} outside (0, 1)"));
        }
        Ok(Self { alpha, basis })
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn basis(&self) -> &Arc<ModeBasis<T>> {
        &self.basis
    }

    /// `E_{α,1}(-λ_n t^α)` for every mode.
    pub fn s_multipliers(&self, t: T) -> Result<Vec<T>> {
        self.basis.modes().iter().map(|m| ml_kernel_pair(self.alpha, m.eigenvalue, t).map(|p| p.0)).collect()
    }

    /// `t^{α-1} E_{α,α}(-λ_n t^α)` for every mode.
    pub fn k_multipliers(&self, t: T) -> Result<Vec<T>> {
        self.basis.modes().iter().map(|m| ml_kernel_pair(self.alpha, m.eigenvalue, t).map(|p| p.1)).collect()
    }
}

fn scale_field<T: Real>(field: &Field<T>, multipliers: &[T]) -> Field<T> {
    field.map_coeffs(|n, _| multipliers[n])
}

/// `S(t) a = Σ E_{α,1}(-λ_n t^α) (a, φ_n) φ_n`
pub fn apply_s<T: Real>(cfg: &KernelConfig<T>, t: T, field: &Field<T>) -> Result<Field<T>> {
    Ok(scale_field(field, &cfg.s_multipliers(t)?))
}

/// `K(t) a = Σ t^{α-1} E_{α,α}(-λ_n t^α) (a, φ_n) φ_n`
pub fn apply_k<T: Real>(cfg: &KernelConfig<T>, t: T, field: &Field<T>) -> Result<Field<T>> {
    Ok(scale_field(field, &cfg.k_multipliers(t)?))
}

/// Slope fit of `‖A^γ S(t)‖` and `‖A^γ K(t)‖` against `t` on `[1e-3, 1e-2]`.
///
/// The operators are diagonal, so the supremum over unit vectors is the largest
/// weighted multiplier; that envelope is what the estimates bound. Individual
/// random vectors only give lower bounds for it and feed the empirical constants.
#[derive(Debug, Clone, PartialEq)]
pub struct NormEstimateReport {
    pub alpha: f64,
    pub gamma: f64,
    pub trials: usize,
    /// Fitted log-log slopes of the operator norms.
    pub s_slope: f64,
    pub k_slope: f64,
    /// Smallest slope seen for a single random vector (informational).
    pub s_trial_slope: f64,
    pub k_trial_slope: f64,
    /// Predicted exponents `-αγ` and `α(1-γ) - 1`.
    pub s_exponent: f64,
    pub k_exponent: f64,
    /// `max ‖A^γ S(t)‖ t^{αγ}` over `t ∈ [1e-3, 1]`, and likewise for `K`.
    pub s_constant: f64,
    pub k_constant: f64,
    /// Largest ratio of a random-vector norm to the operator norm; at most one.
    pub trial_ratio: f64,
    pub s_pass: bool,
    pub k_pass: bool,
}

impl NormEstimateReport {
    pub fn pass(&self) -> bool {
        self.s_pass && self.k_pass && self.trial_ratio <= 1.0 + 1e-12
    }

    pub const CSV_HEADER: &'static str =
        "alpha,gamma,trials,s_slope,s_exponent,s_constant,k_slope,k_exponent,k_constant,pass";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{:.6},{:.6},{:.6e},{:.6},{:.6},{:.6e},{}",
            self.alpha,
            self.gamma,
            self.trials,
            self.s_slope,
            self.s_exponent,
            self.s_constant,
            self.k_slope,
            self.k_exponent,
            self.k_constant,
            self.pass()
        )
    }
}

const SLOPE_SLACK: f64 = 0.05;
const FIT_POINTS: usize = 16;
const CONSTANT_POINTS: usize = 49;

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn weighted_norm<T: Real>(coeffs: &[T], powers: &[T], multipliers: &[T]) -> f64 {
    coeffs
        .iter()
        .zip(powers)
        .zip(multipliers)
        .map(|((c, p), m)| {
            let v = (*c * *p * *m).to_f64().unwrap_or(f64::NAN);
            v * v
        })
        .sum::<f64>()
        .sqrt()
}

fn operator_norm<T: Real>(powers: &[T], multipliers: &[T]) -> f64 {
    powers.iter().zip(multipliers).map(|(p, m)| (*p * *m).abs().to_f64().unwrap_or(f64::NAN)).fold(0.0, f64::max)
}

fn log_spaced<T: Real>(lo: f64, decades: f64, points: usize) -> Vec<T> {
    (0..points)
        .map(|i| lit::<T>(10.0).powf(lit::<T>(lo) + lit::<T>(decades) * count::<T>(i) / count::<T>(points - 1)))
        .collect()
}

/// Log-spaced times in `[1e-3, 1]`; see [`NormEstimateReport`].
pub fn verify_norm_estimates<T: Real, R: Rng + ?Sized>(
    cfg: &KernelConfig<T>,
    gamma: T,
    trials: usize,
    rng: &mut R,
) -> Result<NormEstimateReport> {
    if !(gamma >= T::zero() && gamma <= T::one()) {
        return domain(format!("gamma = {gamma} outside [0, 1]"));
    }
    let alpha = cfg.alpha().to_f64().unwrap_or(f64::NAN);
    let g = gamma.to_f64().unwrap_or(f64::NAN);
    let powers: Vec<T> = cfg.basis().modes().iter().map(|m| m.eigenvalue.powf(gamma)).collect();
    let fit_times: Vec<T> = log_spaced(-3.0, 1.0, FIT_POINTS);
    let const_times: Vec<T> = log_spaced(-3.0, 3.0, CONSTANT_POINTS);
    let s_fit: Vec<Vec<T>> = fit_times.iter().map(|&t| cfg.s_multipliers(t)).collect::<Result<_>>()?;
    let k_fit: Vec<Vec<T>> = fit_times.iter().map(|&t| cfg.k_multipliers(t)).collect::<Result<_>>()?;
    let s_all: Vec<Vec<T>> = const_times.iter().map(|&t| cfg.s_multipliers(t)).collect::<Result<_>>()?;
    let k_all: Vec<Vec<T>> = const_times.iter().map(|&t| cfg.k_multipliers(t)).collect::<Result<_>>()?;

    let s_exponent = -alpha * g;
    let k_exponent = alpha * (1.0 - g) - 1.0;
    let log_t: Vec<f64> = fit_times.iter().map(|t| t.to_f64().unwrap().ln()).collect();
    let fit = |table: &[Vec<T>]| {
        let logs: Vec<f64> = table.iter().map(|m| operator_norm(&powers, m).ln()).collect();
        least_squares_slope(&log_t, &logs)
    };
    let s_slope = fit(&s_fit);
    let k_slope = fit(&k_fit);
    let s_ops: Vec<f64> = s_all.iter().map(|m| operator_norm(&powers, m)).collect();
    let k_ops: Vec<f64> = k_all.iter().map(|m| operator_norm(&powers, m)).collect();
    let mut s_constant = 0.0f64;
    let mut k_constant = 0.0f64;
    for (i, t) in const_times.iter().enumerate() {
        let t = t.to_f64().unwrap();
        s_constant = s_constant.max(s_ops[i] * t.powf(-s_exponent));
        k_constant = k_constant.max(k_ops[i] * t.powf(-k_exponent));
    }

    let mut s_trial_slope = f64::INFINITY;
    let mut k_trial_slope = f64::INFINITY;
    let mut trial_ratio = 0.0f64;
    let n_modes = cfg.basis().n_modes();
    for _ in 0..trials.max(1) {
        let mut a: Vec<T> = (0..n_modes).map(|_| lit(rng.gen_range(-1.0..1.0))).collect();
        let norm = a.iter().fold(T::zero(), |acc, x| acc + *x * *x).sqrt();
        a.iter_mut().for_each(|x| *x = *x / norm);

        let s_logs: Vec<f64> = s_fit.iter().map(|m| weighted_norm(&a, &powers, m).ln()).collect();
        let k_logs: Vec<f64> = k_fit.iter().map(|m| weighted_norm(&a, &powers, m).ln()).collect();
        s_trial_slope = s_trial_slope.min(least_squares_slope(&log_t, &s_logs));
        k_trial_slope = k_trial_slope.min(least_squares_slope(&log_t, &k_logs));
        for i in 0..const_times.len() {
            trial_ratio = trial_ratio.max(weighted_norm(&a, &powers, &s_all[i]) / s_ops[i]);
            trial_ratio = trial_ratio.max(weighted_norm(&a, &powers, &k_all[i]) / k_ops[i]);
        }
    }
    Ok(NormEstimateReport {
        alpha,
        gamma: g,
        trials: trials.max(1),
        s_slope,
        k_slope,
        s_trial_slope,
        k_trial_slope,
        s_exponent,
        k_exponent,
        s_constant,
        k_constant,
        trial_ratio,
        s_pass: s_slope >= s_exponent - SLOPE_SLACK,
        k_pass: k_slope >= k_exponent - SLOPE_SLACK,
    })
}
