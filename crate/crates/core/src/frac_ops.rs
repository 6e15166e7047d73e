//! Fractional calculus on uniformly sampled signals.
//!
//! All memory terms are evaluated by direct O(n²) convolution. Node 0 of the
//! derivative outputs is set to zero; weak-form code never reads it.

use crate::error::{domain, Error, Result};
use crate::scalar::{count, gamma, lit, CompensatedSum, Real};

/// Uniform mesh `t_k = k·dt`, `k = 0..=n_steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid<T> {
    t_final: T,
    n_steps: usize,
}

impl<T: Real> TimeGrid<T> {
    pub fn new(t_final: T, n_steps: usize) -> Result<Self> {
        if !(t_final > T::zero()) || !t_final.is_finite() {
            return domain(format!("final time {t_final} must be positive"));
        }
        if n_steps == 0 {
            return domain("time grid needs at least one step");
        }
        Ok(Self { t_final, n_steps })
    }

    /// Grid with step `dt` covering `[0, t_final]`, rounding the step count up.
    pub fn with_step(t_final: T, dt: T) -> Result<Self> {
        let n = (t_final / dt).ceil().to_usize().unwrap_or(0);
        Self::new(count::<T>(n.max(1)) * dt, n.max(1))
    }

    pub fn t_final(&self) -> T {
        self.t_final
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dt(&self) -> T {
        self.t_final / count(self.n_steps)
    }

    pub fn node(&self, k: usize) -> T {
        if k == self.n_steps {
            self.t_final
        } else {
            count::<T>(k) * self.dt()
        }
    }

    pub fn nodes(&self) -> Vec<T> {
        (0..self.len()).map(|k| self.node(k)).collect()
    }

    /// Grid with the same final time and twice the steps.
    pub fn refined(&self) -> Self {
        Self { t_final: self.t_final, n_steps: 2 * self.n_steps }
    }

    /// The first `n_steps` steps of this grid.
    pub fn truncated(&self, n_steps: usize) -> Result<Self> {
        Self::new(self.node(n_steps.min(self.n_steps)), n_steps.min(self.n_steps))
    }
}

/// Scalar function of time sampled on a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Signal<T> {
    grid: TimeGrid<T>,
    values: Vec<T>,
}

impl<T: Real> Signal<T> {
    pub fn new(grid: TimeGrid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return domain(format!("signal has {} values for {} grid nodes", values.len(), grid.len()));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return domain(format!("signal value at node {k} is not finite"));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: TimeGrid<T>, f: impl Fn(T) -> T) -> Result<Self> {
        Self::new(grid, grid.nodes().into_iter().map(f).collect())
    }

    pub fn grid(&self) -> &TimeGrid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn max_abs_diff(&self, other: &Signal<T>) -> T {
        self.values.iter().zip(&other.values).fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()))
    }
}

/// `(m+1)^γ - m^γ`, accurate for large `m`.
fn forward_difference<T: Real>(m: usize, gamma_exp: T) -> T {
    if m == 0 {
        return T::one();
    }
    let mf = count::<T>(m);
    mf.powf(gamma_exp) * (gamma_exp * (T::one() / mf).ln_1p()).exp_m1()
}

/// `(m+1)^γ - 2m^γ + (m-1)^γ` for `m ≥ 1`.
fn second_difference<T: Real>(m: usize, gamma_exp: T) -> T {
    let mf = count::<T>(m);
    let inv = T::one() / mf;
    let up = (gamma_exp * inv.ln_1p()).exp_m1();
    let down = (gamma_exp * (-inv).ln_1p()).exp_m1();
    mf.powf(gamma_exp) * (up + down)
}

/// Product-trapezoid weights of J^β at node `k` (without the `h^β/Γ(β+2)`
/// factor). Entry `j` multiplies `s_j`.
#[cfg(test)]
fn rl_weights<T: Real>(beta: T, k: usize) -> Vec<T> {
    let g = beta + T::one();
    let mut w = vec![T::zero(); k + 1];
    if k == 0 {
        return w;
    }
    let kf = count::<T>(k);
    w[0] = (kf - T::one()).powf(g) - (kf - beta - T::one()) * kf.powf(beta);
    for (j, wj) in w.iter_mut().enumerate().take(k).skip(1) {
        *wj = second_difference(k - j, g);
    }
    w[k] = T::one();
    w
}

/// Riemann-Liouville integral J^β by product integration, exact for
/// piecewise-linear signals.
pub fn rl_integral<T: Real>(beta: T, s: &Signal<T>) -> Result<Signal<T>> {
    if !(beta > T::zero() && beta <= lit(2.0)) {
        return domain(format!("integral order beta = {beta} outside (0, 2]"));
    }
    let grid = *s.grid();
    let h = grid.dt();
    let scale = h.powf(beta) / gamma(beta + lit(2.0));
    let g = beta + T::one();
    // second differences depend only on the lag
    let lag: Vec<T> = (0..grid.len()).map(|m| if m == 0 { T::zero() } else { second_difference(m, g) }).collect();
    let v = s.values();
    let mut out = vec![T::zero(); grid.len()];
    for k in 1..grid.len() {
        let kf = count::<T>(k);
        let w0 = (kf - T::one()).powf(g) - (kf - beta - T::one()) * kf.powf(beta);
        let mut acc = CompensatedSum::new();
        acc.add(w0 * v[0]);
        for j in 1..k {
            acc.add(lag[k - j] * v[j]);
        }
        acc.add(v[k]);
        out[k] = scale * acc.value();
    }
    Signal::new(grid, out)
}

fn l1_weights<T: Real>(alpha: T, n: usize) -> Vec<T> {
    let e = T::one() - alpha;
    (0..n).map(|i| forward_difference(i, e)).collect()
}

fn check_order<T: Real>(alpha: T) -> Result<()> {
    if !(alpha > T::zero() && alpha < T::one()) {
        return domain(format!("derivative order alpha = {alpha} outside (0, 1)"));
    }
    Ok(())
}

/// Caputo derivative by the L1 scheme.
pub fn caputo_derivative<T: Real>(alpha: T, s: &Signal<T>) -> Result<Signal<T>> {
    check_order(alpha)?;
    let grid = *s.grid();
    let scale = grid.dt().powf(-alpha) / gamma(lit::<T>(2.0) - alpha);
    let b = l1_weights(alpha, grid.len());
    let v = s.values();
    let mut out = vec![T::zero(); grid.len()];
    for k in 1..grid.len() {
        let mut acc = CompensatedSum::new();
        for j in 0..k {
            acc.add(b[k - j - 1] * (v[j + 1] - v[j]));
        }
        out[k] = scale * acc.value();
    }
    Signal::new(grid, out)
}

/// Backward adjoint `-1/Γ(1-α) ∫_s^T (t-s)^{-α} ψ'(t) dt` by the mirrored L1
/// scheme. Requires `ψ(T) = 0`; the value at `T` is set to zero.
pub fn adjoint_caputo<T: Real>(alpha: T, psi: &Signal<T>) -> Result<Signal<T>> {
    check_order(alpha)?;
    let v = psi.values();
    let n = v.len() - 1;
    if v[n].abs() > lit(1e-12) {
        return Err(Error::Precondition(format!("test function must vanish at the final time, got psi(T) = {}", v[n])));
    }
    let grid = *psi.grid();
    let scale = grid.dt().powf(-alpha) / gamma(lit::<T>(2.0) - alpha);
    let b = l1_weights(alpha, grid.len());
    let mut out = vec![T::zero(); grid.len()];
    for k in 0..n {
        let mut acc = CompensatedSum::new();
        for j in k..n {
            acc.add(b[j - k] * (v[j + 1] - v[j]));
        }
        out[k] = -scale * acc.value();
    }
    Signal::new(grid, out)
}

/// Solves the Volterra form `y = y0 + J^α[h(t, y)]` of `∂^α(y - y0) = h(t, y)`
/// with the product trapezoid rule; each step is a damped Newton solve.
///
/// Returns one trajectory per component.
pub fn solve_fode_system<T: Real, F>(alpha: T, y0: &[T], grid: &TimeGrid<T>, rhs: F) -> Result<Vec<Vec<T>>>
where
    F: Fn(T, &[T], &mut [T]),
{
    if !(alpha > T::zero() && alpha <= T::one()) {
        return domain(format!("order alpha = {alpha} outside (0, 1]"));
    }
    let dim = y0.len();
    let n = grid.len();
    let h = grid.dt();
    let scale = h.powf(alpha) / gamma(alpha + lit(2.0));
    let g = alpha + T::one();
    let lag: Vec<T> = (0..n).map(|m| if m == 0 { T::zero() } else { second_difference(m, g) }).collect();

    let mut ys = vec![y0.to_vec()];
    let mut fs = vec![vec![T::zero(); dim]];
    rhs(grid.node(0), y0, &mut fs[0]);

    let tol = T::epsilon() * lit(16.0);
    for k in 1..n {
        let kf = count::<T>(k);
        let w0 = (kf - T::one()).powf(g) - (kf - alpha - T::one()) * kf.powf(alpha);
        let mut history = vec![T::zero(); dim];
        for (c, hist) in history.iter_mut().enumerate() {
            let mut acc = CompensatedSum::new();
            acc.add(w0 * fs[0][c]);
            for j in 1..k {
                acc.add(lag[k - j] * fs[j][c]);
            }
            *hist = y0[c] + scale * acc.value();
        }
        let t = grid.node(k);
        let y = implicit_step(&rhs, t, scale, &history, ys[k - 1].clone(), tol)?;
        let mut f = vec![T::zero(); dim];
        rhs(t, &y, &mut f);
        ys.push(y);
        fs.push(f);
    }
    let mut out = vec![Vec::with_capacity(n); dim];
    for y in ys {
        for (c, v) in y.into_iter().enumerate() {
            out[c].push(v);
        }
    }
    Ok(out)
}

const NEWTON_ITER: usize = 100;

/// Solves `y = history + scale · h(t, y)` by damped Newton iteration with a
/// forward-difference Jacobian.
fn implicit_step<T: Real, F>(rhs: &F, t: T, scale: T, history: &[T], mut y: Vec<T>, tol: T) -> Result<Vec<T>>
where
    F: Fn(T, &[T], &mut [T]),
{
    let dim = y.len();
    let mut f = vec![T::zero(); dim];
    let residual = |y: &[T], f: &mut [T]| -> Vec<T> {
        rhs(t, y, f);
        (0..dim).map(|c| y[c] - history[c] - scale * f[c]).collect()
    };
    let norm = |r: &[T], y: &[T]| (0..dim).fold(T::zero(), |m, c| m.max(r[c].abs() / (T::one() + y[c].abs())));
    let mut r = residual(&y, &mut f);
    let mut size = norm(&r, &y);
    let mut jac = vec![vec![T::zero(); dim]; dim];
    let mut shifted = vec![T::zero(); dim];
    for _ in 0..NEWTON_ITER {
        if size <= tol {
            return Ok(y);
        }
        for j in 0..dim {
            let step = T::epsilon().sqrt() * (T::one() + y[j].abs());
            let mut probe = y.clone();
            probe[j] = probe[j] + step;
            let rp = residual(&probe, &mut shifted);
            for i in 0..dim {
                jac[i][j] = (rp[i] - r[i]) / step;
            }
        }
        let delta = solve_dense(jac.clone(), r.iter().map(|v| -*v).collect())?;
        let mut damping = T::one();
        loop {
            let trial: Vec<T> = (0..dim).map(|c| y[c] + damping * delta[c]).collect();
            let rt = residual(&trial, &mut f);
            let st = norm(&rt, &trial);
            let tiny = (0..dim).all(|c| (damping * delta[c]).abs() <= tol * (T::one() + y[c].abs()));
            if tiny && st <= tol.sqrt() {
                // at roundoff level: the residual cannot shrink further
                return Ok(trial);
            }
            if st < size || damping < lit(1e-6) {
                y = trial;
                r = rt;
                size = st;
                break;
            }
            damping = damping * lit(0.5);
        }
        if !size.is_finite() {
            break;
        }
    }
    if size <= tol {
        return Ok(y);
    }
    Err(Error::NonConvergence { iterations: NEWTON_ITER, residual: size.to_f64().unwrap_or(f64::NAN) })
}

/// Gaussian elimination with partial pivoting.
fn solve_dense<T: Real>(mut a: Vec<Vec<T>>, mut b: Vec<T>) -> Result<Vec<T>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap()).unwrap();
        if !(a[pivot][col].abs() > T::zero()) {
            return Err(Error::Precondition("singular Jacobian in implicit step".into()));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let m = a[row][col] / a[col][col];
            let (upper, lower) = a.split_at_mut(row);
            for (x, p) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                *x = *x - m * *p;
            }
            b[row] = b[row] - m * b[col];
        }
    }
    let mut x = vec![T::zero(); n];
    for row in (0..n).rev() {
        let tail = (row + 1..n).fold(T::zero(), |acc, k| acc + a[row][k] * x[k]);
        x[row] = (b[row] - tail) / a[row][row];
    }
    Ok(x)
}

/// Scalar convenience wrapper around [`solve_fode_system`].
pub fn solve_fode<T: Real>(alpha: T, y0: T, grid: &TimeGrid<T>, rhs: impl Fn(T, T) -> T) -> Result<Signal<T>> {
    let mut out = solve_fode_system(alpha, &[y0], grid, |t, y, f| f[0] = rhs(t, y[0]))?;
    Signal::new(*grid, out.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> TimeGrid<f64> {
        TimeGrid::new(1.0, n).unwrap()
    }

    #[test]
    fn grid_invariants() {
        let g = grid(8);
        assert_eq!(g.len(), 9);
        assert_eq!(g.node(8), 1.0);
        assert!(g.nodes().windows(2).all(|w| w[1] > w[0]));
        assert!(TimeGrid::new(0.0, 4).is_err());
        assert!(TimeGrid::new(1.0, 0).is_err());
    }

    #[test]
    fn signal_rejects_bad_values() {
        assert!(Signal::new(grid(2), vec![0.0, 1.0]).is_err());
        assert!(Signal::new(grid(2), vec![0.0, f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn integral_of_one_is_t() {
        let g = grid(64);
        let one = Signal::from_fn(g, |_| 1.0).unwrap();
        let j1 = rl_integral(1.0, &one).unwrap();
        for (k, v) in j1.values().iter().enumerate() {
            assert!((v - g.node(k)).abs() < 1e-14);
        }
        assert_eq!(j1.values()[0], 0.0);
    }

    #[test]
    fn half_integral_of_constant_is_exact() {
        let g = grid(200);
        let one = Signal::from_fn(g, |_| 1.0).unwrap();
        let j = rl_integral(0.5, &one).unwrap();
        let err = (0..g.len()).map(|k| (j.values()[k] - g.node(k).sqrt() / gamma(1.5f64)).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn rl_weights_are_nonnegative() {
        for &beta in &[0.1f64, 0.5, 0.9, 1.0, 1.5, 2.0] {
            for k in 1..40 {
                assert!(rl_weights(beta, k).iter().all(|&w| w >= 0.0), "beta={beta} k={k}");
            }
        }
    }

    #[test]
    fn caputo_of_linear_and_constant() {
        let g = grid(256);
        let t = Signal::from_fn(g, |t| t).unwrap();
        let d = caputo_derivative(0.5, &t).unwrap();
        for k in 1..g.len() {
            let exact = 2.0 * (g.node(k) / std::f64::consts::PI).sqrt();
            // L1 is exact on linear signals
            assert!((d.values()[k] - exact).abs() < 1e-12);
        }
        let c = Signal::from_fn(g, |_| 3.0).unwrap();
        assert!(caputo_derivative(0.5, &c).unwrap().values().iter().all(|&v| v == 0.0));
        assert!(caputo_derivative(1.0, &c).is_err());
    }

    #[test]
    fn adjoint_of_linear_ramp() {
        let g = grid(128);
        let psi = Signal::from_fn(g, |t| 1.0 - t).unwrap();
        let d = adjoint_caputo(0.5, &psi).unwrap();
        for k in 0..g.len() {
            let exact = (1.0 - g.node(k)).sqrt() / gamma(1.5f64);
            assert!((d.values()[k] - exact).abs() < 1e-12);
        }
        let bad = Signal::from_fn(g, |_| 1.0).unwrap();
        assert!(matches!(adjoint_caputo(0.5, &bad), Err(Error::Precondition(_))));
        let zero = Signal::from_fn(g, |_| 0.0).unwrap();
        assert!(adjoint_caputo(0.5, &zero).unwrap().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn fode_linear_decay_matches_mittag_leffler() {
        use crate::mittag_leffler::{ml, MlParams};
        let g = grid(512);
        let y = solve_fode(0.6, 1.0, &g, |_, y| -y).unwrap();
        let p = MlParams::new(0.6, 1.0).unwrap();
        let exact = ml(p, -1.0).unwrap();
        assert!((y.values()[512] - exact).abs() < 1e-4);
    }
}
