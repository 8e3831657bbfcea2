//! The characteristic solution `ω_c` of `D_c ω = 0`, i.e. the kernel element
//! with `ω_c^(l)(0) = δ_{l,n-1}`.
//!
//! The production path builds `ω_c` in closed form from the root
//! decomposition: for each root `λ_i` of multiplicity `m_i`, the coefficient
//! of `t^j exp(λ_i t)` is `(1/P_i)^(m_i-1-j)(λ_i) / ((m_i-1-j)! j!)`. The
//! derivatives of `1/P_i` come from inverting the Taylor series of `P_i`
//! about `λ_i`. An adaptive Runge–Kutta integrator of the initial-value
//! problem is kept alongside as an independent cross-check.

use num_complex::Complex64;
use thiserror::Error;

use crate::kernel::{ExponentialPolynomial, Operator, Root, RootDecomposition};
use crate::poly;

/// Below this magnitude `P_i(λ_i)` is treated as zero.
pub const SERIES_PIVOT_MIN: f64 = 1e-14;
/// Absolute and relative local tolerance of the IVP oracle.
pub const IVP_TOL: f64 = 1e-11;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CharSolError {
    #[error(
        "cofactor vanishes at root {root} (|P_i(λ_i)| = {magnitude:.3e}); roots are not separated"
    )]
    SeriesInversionFailure { root: Complex64, magnitude: f64 },
    #[error("root decomposition has order {found}, operator has order {expected}")]
    OrderMismatch { expected: usize, found: usize },
    #[error("step size underflow at t = {t}")]
    StepFailure { t: f64 },
    #[error("evaluation grid must be finite and sorted")]
    InvalidGrid,
}

/// First `len` Taylor coefficients at `s = 0` of
/// `1/P_i(λ_i + s) = ∏_{j≠i} (d_j + s)^{-m_j}` with `d_j = λ_i - λ_j`.
///
/// Working from the factored form keeps full relative accuracy even when the
/// expanded cofactor nearly vanishes at `λ_i`.
fn inverse_cofactor_series(roots: &[Root], i: usize, len: usize) -> Vec<Complex64> {
    let mut acc = vec![Complex64::new(0.0, 0.0); len];
    acc[0] = Complex64::new(1.0, 0.0);
    for (j, r) in roots.iter().enumerate() {
        if j == i {
            continue;
        }
        let d = roots[i].value - r.value;
        let m = r.multiplicity as f64;
        // (d + s)^{-m} = d^{-m} Σ_k binom(-m, k) (s/d)^k
        let mut factor = Vec::with_capacity(len);
        let mut term = d.inv().powu(r.multiplicity as u32);
        for k in 0..len {
            factor.push(term);
            term = term * (-(m + k as f64) / (k as f64 + 1.0)) / d;
        }
        acc = poly::mul(&acc, &factor);
        acc.truncate(len);
    }
    acc
}

#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicSolution {
    op: Operator,
    /// `derivs[k]` is `ω_c^(k)`, for `k` in `0..2n`.
    derivs: Vec<ExponentialPolynomial>,
}

impl CharacteristicSolution {
    pub fn new(op: &Operator, rd: &RootDecomposition) -> Result<Self, CharSolError> {
        let n = op.order();
        if rd.order() != n {
            return Err(CharSolError::OrderMismatch {
                expected: n,
                found: rd.order(),
            });
        }
        let roots = rd.roots();
        let mut blocks = Vec::with_capacity(roots.len());
        for (i, root) in roots.iter().enumerate() {
            let m = root.multiplicity;
            let magnitude: f64 = roots
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, r)| (root.value - r.value).norm().powi(r.multiplicity as i32))
                .product();
            if !(magnitude >= SERIES_PIVOT_MIN) {
                return Err(CharSolError::SeriesInversionFailure {
                    root: root.value,
                    magnitude,
                });
            }
            // inv[r] = (1/P_i)^(r)(λ_i) / r!
            let inv = inverse_cofactor_series(roots, i, m);
            let mut fact = 1.0;
            let coeffs: Vec<Complex64> = (0..m)
                .map(|j| {
                    if j > 0 {
                        fact *= j as f64;
                    }
                    inv[m - 1 - j] / fact
                })
                .collect();
            blocks.push((root.value, coeffs));
        }
        let ep = ExponentialPolynomial::new(blocks);
        let mut derivs = Vec::with_capacity(2 * n);
        derivs.push(ep);
        for k in 1..2 * n {
            let next = derivs[k - 1].derivative(1);
            derivs.push(next);
        }
        Ok(Self {
            op: op.clone(),
            derivs,
        })
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }

    pub fn ep(&self) -> &ExponentialPolynomial {
        &self.derivs[0]
    }

    /// `ω_c^(k)` as an exponential polynomial.
    pub fn derivative(&self, k: usize) -> ExponentialPolynomial {
        match self.derivs.get(k) {
            Some(d) => d.clone(),
            None => self.derivs[0].derivative(k),
        }
    }

    /// `ω_c^(k)(t)`.
    pub fn eval_derivative(&self, k: usize, t: f64) -> Complex64 {
        match self.derivs.get(k) {
            Some(d) => d.evaluate(t),
            None => self.derivs[0].derivative(k).evaluate(t),
        }
    }

    pub fn evaluate(&self, t: f64) -> Complex64 {
        self.derivs[0].evaluate(t)
    }

    /// `max_l |ω_c^(l)(0) - δ_{l,n-1}|`.
    pub fn initial_value_deviation(&self) -> f64 {
        let n = self.op.order();
        (0..n)
            .map(|l| {
                let target = if l == n - 1 { 1.0 } else { 0.0 };
                (self.eval_derivative(l, 0.0) - target).norm()
            })
            .fold(0.0, f64::max)
    }

    /// `|δ_{j,β} - Σ_{i=0}^{n-j-1} c_{i+j+1} ω_c^(β+i)(0)|`.
    pub fn kronecker_identity_residual(&self, j: usize, beta: usize) -> f64 {
        let n = self.op.order();
        assert!(j < n && beta < n, "indices must lie in 0..n");
        let sum: Complex64 = (0..n - j)
            .map(|i| self.op.coeff(i + j + 1) * self.eval_derivative(beta + i, 0.0))
            .sum();
        let delta = if j == beta { 1.0 } else { 0.0 };
        (sum - delta).norm()
    }

    pub fn max_kronecker_residual(&self) -> f64 {
        let n = self.op.order();
        (0..n)
            .flat_map(|j| (0..n).map(move |b| (j, b)))
            .map(|(j, b)| self.kronecker_identity_residual(j, b))
            .fold(0.0, f64::max)
    }

    /// Right-hand side of the addition formula
    /// `ω(u+v) = Σ_j Σ_{i ≤ n-1-j} c_{i+j+1} ω_c^(i)(u) ω^(j)(v)`.
    pub fn addition_formula_rhs(&self, omega: &ExponentialPolynomial, u: f64, v: f64) -> Complex64 {
        let n = self.op.order();
        let wc: Vec<Complex64> = (0..n).map(|i| self.eval_derivative(i, u)).collect();
        let mut w = omega.clone();
        let mut total = Complex64::new(0.0, 0.0);
        for j in 0..n {
            if j > 0 {
                w = w.derivative(1);
            }
            let wj = w.evaluate(v);
            let inner: Complex64 = (0..n - j).map(|i| self.op.coeff(i + j + 1) * wc[i]).sum();
            total += inner * wj;
        }
        total
    }

    /// `Σ_{i=0}^{n-1-j} c_{i+j+1} ω_c^(i)(t - a)`, the single-node standard
    /// basis element for derivative order `j`, as an exponential polynomial.
    pub fn taylor_basis_element(&self, j: usize, a: f64) -> ExponentialPolynomial {
        let n = self.op.order();
        let terms: Vec<(Complex64, ExponentialPolynomial)> = (0..n - j)
            .map(|i| (self.op.coeff(i + j + 1), self.derivative(i).translate(-a)))
            .collect();
        ExponentialPolynomial::linear_combination(terms.iter().map(|(w, e)| (*w, e)))
    }
}

// Dormand–Prince 5(4) tableau; the system is autonomous so the nodes are unused.
const DP_A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DP_B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Companion system `y' = A y` for the state `(ω, ω', ..., ω^(n-1))`.
fn companion_rhs(op: &Operator, y: &[Complex64]) -> Vec<Complex64> {
    let n = y.len();
    let mut dy = Vec::with_capacity(n);
    dy.extend_from_slice(&y[1..]);
    let last: Complex64 = (0..n).map(|k| op.coeff(k) * y[k]).sum();
    dy.push(-last);
    dy
}

/// Integrates `y' = A y` from `t0` to `t1` with adaptive Dormand–Prince steps.
fn dopri_integrate(
    op: &Operator,
    y: &mut Vec<Complex64>,
    t0: f64,
    t1: f64,
    h: &mut f64,
) -> Result<(), CharSolError> {
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let mut t = t0;
    let n = y.len();
    while (t1 - t) * dir > 0.0 {
        let remaining = (t1 - t).abs();
        let mut step = h.abs().min(remaining);
        loop {
            if step < 1e-14 * t.abs().max(1.0) {
                return Err(CharSolError::StepFailure { t });
            }
            let hs = step * dir;
            let mut k: Vec<Vec<Complex64>> = Vec::with_capacity(7);
            #[allow(clippy::needless_range_loop)]
            for s in 0..7 {
                let stage: Vec<Complex64> = (0..n)
                    .map(|i| {
                        y[i] + (0..s)
                            .map(|r| k[r][i] * (DP_A[s][r] * hs))
                            .sum::<Complex64>()
                    })
                    .collect();
                k.push(companion_rhs(op, &stage));
            }
            let y5: Vec<Complex64> = (0..n)
                .map(|i| y[i] + (0..7).map(|s| k[s][i] * (DP_B5[s] * hs)).sum::<Complex64>())
                .collect();
            let err = (0..n)
                .map(|i| {
                    let e: Complex64 = (0..7).map(|s| k[s][i] * ((DP_B5[s] - DP_B4[s]) * hs)).sum();
                    let scale = IVP_TOL + IVP_TOL * y[i].norm().max(y5[i].norm());
                    e.norm() / scale
                })
                .fold(0.0, f64::max);
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if err <= 1.0 {
                *y = y5;
                t = if step == remaining { t1 } else { t + hs };
                *h = step * factor;
                break;
            }
            step *= factor.min(1.0);
        }
    }
    Ok(())
}

/// `ω_c` on a sorted grid, obtained by numerically integrating the
/// initial-value problem from `t = 0`. Not used by any production path.
pub fn ivp_solution(op: &Operator, grid: &[f64]) -> Result<Vec<Complex64>, CharSolError> {
    if grid.iter().any(|t| !t.is_finite()) || grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(CharSolError::InvalidGrid);
    }
    let n = op.order();
    let mut init = vec![Complex64::new(0.0, 0.0); n];
    init[n - 1] = Complex64::new(1.0, 0.0);
    let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];

    let split = grid.partition_point(|&t| t < 0.0);
    // forward sweep over t >= 0
    let mut y = init.clone();
    let mut t = 0.0;
    let mut h = 1e-3;
    for (idx, &target) in grid.iter().enumerate().skip(split) {
        dopri_integrate(op, &mut y, t, target, &mut h)?;
        t = target;
        out[idx] = y[0];
    }
    // backward sweep over t < 0
    let mut y = init;
    let mut t = 0.0;
    let mut h = 1e-3;
    for idx in (0..split).rev() {
        let target = grid[idx];
        dopri_integrate(op, &mut y, t, target, &mut h)?;
        t = target;
        out[idx] = y[0];
    }
    Ok(out)
}
