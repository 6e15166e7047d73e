//! Two-parameter Mittag-Leffler function E_{α,β}(z) for real arguments.
//!
//! The negative real axis is where every kernel of the solver lives, so it gets
//! the most care. Four evaluation routes are combined:
//!
//! * Taylor series `Σ z^k / Γ(αk + β)` with compensated summation for `|z| ≤ 1`
//!   and for all admissible positive `z`;
//! * for `α < 1`, the algebraic asymptotic expansion `-Σ z^{-k} / Γ(β - αk)`
//!   truncated at its smallest term, used whenever that term is below machine
//!   precision;
//! * for `0 < α < 1`, `0 < β < 1 + α/2` the Hankel contour collapsed onto the
//!   branch cut, which leaves a real integral with a nonnegative integrand for
//!   the kernel parameters `β ∈ {1, α}`;
//! * the downward recurrence `E_{α,β}(z) = (E_{α,β-α}(z) - 1/Γ(β-α)) / z` to
//!   bring larger `β` into the range of the integral.

use crate::error::{domain, Error, Result};
use crate::quadrature;
use crate::scalar::{count, lit, ln_gamma, rgamma, signed_ln_rgamma, CompensatedSum, Real};

/// Largest positive argument accepted.
pub const Z_MAX: f64 = 5.0;
/// Minimum number of series terms allowed before giving up.
pub const MAX_TERMS: usize = 500;
/// Magnitude below which Taylor is always used on the negative axis.
const TAYLOR_RADIUS: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlParams<T> {
    alpha: T,
    beta: T,
}

impl<T: Real> MlParams<T> {
    /// `alpha ∈ (0, 1]`, `beta > 0`.
    pub fn new(alpha: T, beta: T) -> Result<Self> {
        if !(alpha > T::zero() && alpha <= T::one()) {
            return domain(format!("Mittag-Leffler order alpha = {alpha} outside (0, 1]"));
        }
        if !(beta > T::zero()) || !beta.is_finite() {
            return domain(format!("Mittag-Leffler parameter beta = {beta} must be positive"));
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn beta(&self) -> T {
        self.beta
    }
}

/// Evaluates E_{α,β}(z).
pub fn ml<T: Real>(params: MlParams<T>, z: T) -> Result<T> {
    let MlParams { alpha, beta } = params;
    if z.is_nan() {
        return domain("Mittag-Leffler argument is NaN");
    }
    if z > lit(Z_MAX) {
        return Err(Error::Overflow(format!("Mittag-Leffler argument z = {z} exceeds z_max = {Z_MAX}")));
    }
    if alpha == T::one() && beta == T::one() {
        return Ok(z.exp());
    }
    if z == T::zero() {
        return Ok(rgamma(beta));
    }
    if z == T::neg_infinity() {
        return Ok(T::zero());
    }
    if z > T::zero() {
        // E_{α,β}(z) grows like exp(z^{1/α}) / α
        let growth = z.powf(alpha.recip());
        if growth > T::max_value().ln() {
            return Err(Error::Overflow(format!("E_{{{alpha},{beta}}}({z}) exceeds the floating point range")));
        }
    }
    if z > T::zero() || -z <= lit(TAYLOR_RADIUS) {
        return taylor(alpha, beta, z);
    }
    // for α < 1 the negative axis carries no exponentially small terms
    if alpha < T::one() {
        if let Some(v) = asymptotic(alpha, beta, z) {
            return Ok(v);
        }
    }
    // the integrand behaves like u^{(1-β)/α} at the origin; keep it
    // comfortably integrable and reach larger β through the recurrence
    if alpha < T::one() && beta < T::one() + lit::<T>(0.5) * alpha {
        return hankel_integral(alpha, beta, -z);
    }
    if beta > alpha {
        let lower = ml(MlParams { alpha, beta: beta - alpha }, z)?;
        return Ok((lower - rgamma(beta - alpha)) / z);
    }
    taylor(alpha, beta, z)
}

/// Kernel multipliers of the mild-solution operators for one eigenvalue:
/// `(E_{α,1}(-λ t^α), t^{α-1} E_{α,α}(-λ t^α))`.
pub fn ml_kernel_pair<T: Real>(alpha: T, lambda: T, t: T) -> Result<(T, T)> {
    if !(t > T::zero()) {
        return domain(format!("kernel time t = {t} must be positive"));
    }
    if !(lambda >= T::zero()) {
        return domain(format!("eigenvalue {lambda} must be nonnegative"));
    }
    if !(alpha > T::zero() && alpha <= T::one()) {
        return domain(format!("kernel order alpha = {alpha} outside (0, 1]"));
    }
    let z = -lambda * t.powf(alpha);
    let s = ml(MlParams::new(alpha, T::one())?, z)?;
    let k = t.powf(alpha - T::one()) * ml(MlParams::new(alpha, alpha)?, z)?;
    Ok((s, k))
}

fn taylor<T: Real>(alpha: T, beta: T, z: T) -> Result<T> {
    let eps = T::epsilon();
    let ln_abs = z.abs().ln();
    let negative = z < T::zero();
    let mut acc = CompensatedSum::new();
    let mut largest = T::zero();
    let mut prev = T::infinity();
    // the terms peak near k ≈ |z|^{1/α} / α
    let peak = (z.abs().powf(alpha.recip()) / alpha).to_usize().unwrap_or(usize::MAX);
    let max_terms = MAX_TERMS.max(peak.saturating_mul(3).saturating_add(50));
    for k in 0..max_terms {
        let kf = count::<T>(k);
        let (sign, ln_rg) = signed_ln_rgamma(alpha * kf + beta);
        let magnitude = (kf * ln_abs + ln_rg).exp();
        let term = if negative && k % 2 == 1 { -sign * magnitude } else { sign * magnitude };
        acc.add(term);
        largest = largest.max(magnitude);
        let sum = acc.value();
        if k > 0 && magnitude <= prev && magnitude <= eps * lit(0.25) * sum.abs() {
            if largest > lit::<T>(1e4) * sum.abs() {
                return Err(Error::Accuracy(format!(
                    "series cancellation for E_{{{alpha},{beta}}}({z}): largest term {largest}, sum {sum}"
                )));
            }
            return Ok(sum);
        }
        prev = magnitude;
    }
    Err(Error::Accuracy(format!("series for E_{{{alpha},{beta}}}({z}) did not converge within {max_terms} terms")))
}

/// Asymptotic expansion for z < 0; `None` when the smallest term is not
/// negligible.
fn asymptotic<T: Real>(alpha: T, beta: T, z: T) -> Option<T> {
    let eps = T::epsilon();
    let x = -z;
    let ln_x = x.ln();
    let mut acc = CompensatedSum::new();
    let mut prev = T::infinity();
    for k in 1..MAX_TERMS {
        let kf = count::<T>(k);
        let arg = beta - alpha * kf;
        let (sign, ln_rg) = signed_ln_rgamma(arg);
        let magnitude = (ln_rg - kf * ln_x).exp();
        // near the zeros of 1/Γ the term is accidentally small; convergence is
        // judged on the reflection envelope Γ(1 - arg) / π instead
        let envelope = if arg < T::one() {
            magnitude.max((ln_gamma(T::one() - arg) - kf * ln_x).exp() / T::PI())
        } else {
            magnitude
        };
        if envelope > prev {
            // passed the smallest term without reaching precision
            return None;
        }
        // -z^{-k} = -(-1)^k x^{-k}
        let term = if k % 2 == 0 { -sign * magnitude } else { sign * magnitude };
        acc.add(term);
        let sum = acc.value();
        if envelope <= eps * lit(0.25) * sum.abs() {
            return Some(sum);
        }
        prev = envelope;
    }
    None
}

/// Real-line representation for 0 < α < 1, 0 < β < 1 + α and z = -x < 0,
/// after the substitution r = u^{1/α}.
fn hankel_integral<T: Real>(alpha: T, beta: T, x: T) -> Result<T> {
    let pi = T::PI();
    let inv_alpha = T::one() / alpha;
    let power = (T::one() - beta) * inv_alpha;
    let sin_beta = (pi * beta).sin();
    let sin_ab = (pi * (alpha - beta)).sin();
    let cos_a = (pi * alpha).cos();
    // GK nodes are interior, so u = 0 is never sampled
    let integrand = |u: T| -> T {
        let decay = (-(u.powf(inv_alpha))).exp();
        let numer = u * sin_beta - x * sin_ab;
        let denom = u * u + lit::<T>(2.0) * x * u * cos_a + x * x;
        decay * u.powf(power) * numer / denom
    };
    let upper = lit::<T>(700.0).powf(alpha);
    let mut breaks = vec![T::one()];
    if cos_a < T::zero() {
        let peak = -x * cos_a;
        let width = x * (pi * alpha).sin();
        for m in [-4.0, -1.0, 0.0, 1.0, 4.0] {
            breaks.push(peak + lit::<T>(m) * width);
        }
    }
    let tol = T::epsilon() * lit(8.0);
    let r =
        quadrature::integrate(integrand, T::zero(), upper, &breaks, T::min_positive_value(), tol.max(lit(1e-15)), 4000);
    let value = r.value / (alpha * pi);
    if !r.converged && r.error > lit::<T>(1e-11) * r.value.abs() {
        return Err(Error::Accuracy(format!(
            "integral for E_{{{alpha},{beta}}}({}) reached error {} only",
            -x, r.error
        )));
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(a: f64, b: f64) -> MlParams<f64> {
        MlParams::new(a, b).unwrap()
    }

    #[test]
    fn exponential_and_constant_cases() {
        assert_eq!(ml(p(1.0, 1.0), 1.0).unwrap(), std::f64::consts::E);
        assert_eq!(ml(p(0.5, 1.0), 0.0).unwrap(), 1.0);
        assert!(MlParams::new(2.0, 1.0).is_err());
    }

    #[test]
    fn alpha_one_beta_two_is_expm1_ratio() {
        for &z in &[-0.3f64, -3.0, -25.0] {
            let exact = z.exp_m1() / z;
            assert!((ml(p(1.0, 2.0), z).unwrap() - exact).abs() < 1e-13 * exact.abs());
        }
    }

    #[test]
    fn rejects_invalid_input() {
        assert!(matches!(MlParams::new(0.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(MlParams::new(0.5, -1.0), Err(Error::Domain(_))));
        assert!(matches!(ml(p(0.5, 1.0), 6.0), Err(Error::Overflow(_))));
        assert!(matches!(ml_kernel_pair(0.5, 1.0, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn kernel_pair_closed_forms() {
        let (s, k) = ml_kernel_pair(1.0, 2.0, 0.5).unwrap();
        assert!((s - (-1f64).exp()).abs() < 1e-15);
        assert!((k - (-1f64).exp()).abs() < 1e-15);
        let (s, k) = ml_kernel_pair(0.5, 0.0, 4.0).unwrap();
        assert_eq!(s, 1.0);
        assert!((k - 0.5 / std::f64::consts::PI.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn routes_agree_where_they_overlap() {
        // Taylor (forced) against the integral just past the switch radius,
        // wherever the series itself is still well conditioned.
        let mut compared = 0;
        for &a in &[0.3f64, 0.6, 0.9] {
            for &b in &[a, 1.0, 1.0 + a / 3.0] {
                for &x in &[1.2f64, 2.0, 3.0] {
                    let Ok(series) = taylor(a, b, -x) else { continue };
                    let integral = hankel_integral(a, b, x).unwrap();
                    assert!(
                        (series - integral).abs() < 1e-10 * series.abs().max(1e-3),
                        "a={a} b={b} x={x}: {series} vs {integral}"
                    );
                    compared += 1;
                }
            }
        }
        assert!(compared >= 15, "only {compared} overlapping cases");
    }

    #[test]
    fn recurrence_matches_integral_across_the_switch() {
        // β just below and just above the integral's range
        for &a in &[0.2f64, 0.5, 0.8] {
            for &x in &[1.5f64, 7.0, 40.0] {
                let below = ml(p(a, 1.0 + 0.49 * a), -x).unwrap();
                let direct = hankel_integral(a, 1.0 + 0.49 * a, x).unwrap();
                assert!((below - direct).abs() < 1e-13 * direct.abs().max(1e-3));
                let upper = ml(p(a, 1.0 + 0.51 * a), -x).unwrap();
                let via = (ml(p(a, 1.0 - 0.49 * a), -x).unwrap() - rgamma(1.0 - 0.49 * a)) / -x;
                assert!((upper - via).abs() < 1e-13 * via.abs().max(1e-3));
            }
        }
    }

    #[test]
    fn asymptotic_terms_near_gamma_poles() {
        // β - αk lands next to -1 at k = 6; the series must not stop there
        let v = ml(p(0.6, 2.6), -2.5).unwrap();
        assert!((v - 0.266_979_309_666_894_2).abs() < 1e-14);
    }

    #[test]
    fn positive_axis_series() {
        // E_{1/2,1}(x) = e^{x²} erfc(-x); at x = 1: e (1 + erf 1)
        let v = ml(p(0.5, 1.0), 1.0).unwrap();
        let expected = std::f64::consts::E * (1.0 + 0.842_700_792_949_714_9);
        assert!((v - expected).abs() < 1e-13 * expected);
    }

    #[test]
    fn works_in_single_precision() {
        let v = ml(MlParams::new(0.5f32, 1.0).unwrap(), -1.0).unwrap();
        assert!((v - 0.427_583_6).abs() < 1e-5);
        let v = ml(MlParams::new(0.5f32, 1.0).unwrap(), -20.0).unwrap();
        assert!(v > 0.0 && v < 0.05);
    }
}
