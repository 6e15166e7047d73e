//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar the solvers are generic over (f32 or f64).
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` literal into the working scalar.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in scalar type")
}

/// Converts a count into the working scalar.
#[inline]
pub fn count<T: Real>(n: usize) -> T {
    T::from_usize(n).expect("count representable in scalar type")
}

#[inline]
pub(crate) fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum<T> {
    sum: T,
    carry: T,
}

impl<T: Real> CompensatedSum<T> {
    pub fn new() -> Self {
        Self { sum: T::zero(), carry: T::zero() }
    }

    pub fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry = self.carry + ((self.sum - t) + x);
        } else {
            self.carry = self.carry + ((x - t) + self.sum);
        }
        self.sum = t;
    }

    pub fn value(&self) -> T {
        self.sum + self.carry
    }
}

// Lanczos approximation, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn lanczos_sum<T: Real>(x: T) -> T {
    // x is the shifted argument (z - 1)
    let mut acc = lit::<T>(LANCZOS[0]);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc = acc + lit::<T>(c) / (x + count(i));
    }
    acc
}

fn is_nonpositive_integer<T: Real>(x: T) -> bool {
    x <= T::zero() && x == x.round()
}

/// Gamma function on the real line. Poles return infinity.
pub fn gamma<T: Real>(x: T) -> T {
    if is_nonpositive_integer(x) {
        return T::infinity();
    }
    let half = lit::<T>(0.5);
    if x < half {
        // reflection
        let pi = T::PI();
        return pi / ((pi * x).sin() * gamma(T::one() - x));
    }
    if x > lit(171.7) {
        return T::infinity();
    }
    if x == x.round() && x <= lit(30.0) {
        let mut acc = T::one();
        let mut k = lit::<T>(2.0);
        while k < x {
            acc = acc * k;
            k = k + T::one();
        }
        return acc;
    }
    let z = x - T::one();
    let t = z + lit::<T>(LANCZOS_G) + half;
    (T::TAU()).sqrt() * t.powf(z + half) * (-t).exp() * lanczos_sum(z)
}

/// Natural log of |Γ(x)|.
pub fn ln_gamma<T: Real>(x: T) -> T {
    if is_nonpositive_integer(x) {
        return T::infinity();
    }
    let half = lit::<T>(0.5);
    if x < half {
        let pi = T::PI();
        return (pi / (pi * x).sin().abs()).ln() - ln_gamma(T::one() - x);
    }
    if x < lit(30.0) {
        return gamma(x).abs().ln();
    }
    let z = x - T::one();
    let t = z + lit::<T>(LANCZOS_G) + half;
    half * T::TAU().ln() + (z + half) * t.ln() - t + lanczos_sum(z).ln()
}

/// Reciprocal gamma 1/Γ(x), entire; exactly zero at the poles of Γ.
pub fn rgamma<T: Real>(x: T) -> T {
    if is_nonpositive_integer(x) {
        return T::zero();
    }
    if x < lit(0.5) {
        let pi = T::PI();
        let g = gamma(T::one() - x);
        if g.is_infinite() {
            // |1/Γ(x)| grows without bound; callers use ln_rgamma for these
            return (pi * x).sin().signum() * T::infinity();
        }
        return (pi * x).sin() * g / pi;
    }
    let g = gamma(x);
    if g.is_infinite() {
        T::zero()
    } else {
        T::one() / g
    }
}

/// Sign and natural log of |1/Γ(x)|. Poles give sign 0.
pub(crate) fn signed_ln_rgamma<T: Real>(x: T) -> (T, T) {
    if is_nonpositive_integer(x) {
        return (T::zero(), T::neg_infinity());
    }
    if x > T::zero() {
        return (T::one(), -ln_gamma(x));
    }
    // Γ(x) for x < 0 has sign (-1)^ceil(-x)
    let pi = T::PI();
    let s = (pi * x).sin();
    let ln_abs = s.abs().ln() + ln_gamma(T::one() - x) - pi.ln();
    (s.signum(), ln_abs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_known_values() {
        assert!((gamma(0.5f64) - std::f64::consts::PI.sqrt()).abs() < 1e-14);
        assert!((gamma(1.5f64) - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-14);
        assert_eq!(gamma(5.0f64), 24.0);
        assert!((gamma(-0.5f64) + 2.0 * std::f64::consts::PI.sqrt()).abs() < 1e-13);
        assert!((gamma(10.3f64) / 716_430.689_062_376 - 1.0).abs() < 1e-13);
        assert!(gamma(-2.0f64).is_infinite());
    }

    #[test]
    fn ln_gamma_matches_gamma() {
        for &x in &[0.1f64, 0.7, 2.5, 13.0, 29.5] {
            assert!((ln_gamma(x) - gamma(x).ln()).abs() < 1e-13 * (1.0 + gamma(x).ln().abs()));
        }
        // Stirling regime: ln Γ(100) = ln(99!)
        let ln99: f64 = (1..100).map(|k| (k as f64).ln()).sum();
        assert!((ln_gamma(100.0f64) - ln99).abs() < 1e-11);
    }

    #[test]
    fn reciprocal_gamma_zero_at_poles() {
        assert_eq!(rgamma(0.0f64), 0.0);
        assert_eq!(rgamma(-3.0f64), 0.0);
        assert!((rgamma(-0.5f64) + 0.5 / std::f64::consts::PI.sqrt()).abs() < 1e-14);
        let (s, l) = signed_ln_rgamma(-1.5f64);
        assert!((s * l.exp() - rgamma(-1.5f64)).abs() < 1e-14);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut acc = CompensatedSum::<f64>::new();
        acc.add(1.0);
        for _ in 0..10 {
            acc.add(1e-16);
        }
        acc.add(-1.0);
        assert!((acc.value() - 1e-15).abs() < 1e-28);
    }
}
