//! The integral remainder of kernel interpolation.
//!
//! For `f ∈ C^n` the interpolant in `ker(D_c)` misses `f` by a sum of
//! integrals of `D_c f` against shifted derivatives of `ω_c`; adding them back
//! reproduces `f(x)` exactly, up to quadrature error.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::charsol::{CharSolError, CharacteristicSolution};
use crate::functions::{EvalError, FunctionEvaluator};
use crate::hermite::{
    HermiteError, HermitePolynomialBasis, InterpolationSystem, Slot, StandardBasis,
};
use crate::kernel::KernelError;
use crate::quadrature::{self, QuadratureResult};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RemainderError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Hermite(#[from] HermiteError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    CharSol(#[from] CharSolError),
    #[error("slot ({alpha}, {beta}) is not part of the interpolation system")]
    InvalidSlot { alpha: usize, beta: usize },
    #[error("function is only C^{available}, operator has order {required}")]
    InsufficientSmoothness { required: usize, available: usize },
    #[error("degenerate parameters: {0}")]
    DegenerateParameters(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemainderIntegral {
    pub value: Complex64,
    pub error_estimate: f64,
    /// False when adaptive refinement hit its depth limit.
    pub converged: bool,
    pub evaluations: usize,
}

impl From<QuadratureResult> for RemainderIntegral {
    fn from(q: QuadratureResult) -> Self {
        Self {
            value: q.value,
            error_estimate: q.error_estimate,
            converged: q.converged,
            evaluations: q.evaluations,
        }
    }
}

/// One summand `(data + integral)·weight` of a reconstruction.
///
/// `slot` is `None` for a term that is not tied to a node, such as the single
/// convolution integral of the condensed Taylor form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemainderTerm {
    pub slot: Option<Slot>,
    pub data: Complex64,
    pub integral: RemainderIntegral,
    pub weight: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemainderReport {
    pub x: f64,
    pub interpolant_value: Complex64,
    pub terms: Vec<RemainderTerm>,
    pub reconstructed: Complex64,
    pub true_value: Complex64,
    pub residual: f64,
    /// `Σ |weight|·error_estimate`.
    pub quadrature_error_estimate: f64,
    /// `Σ_slots |weight| + 1`.
    pub k_check: f64,
    pub converged: bool,
}

impl RemainderReport {
    pub fn assemble(x: f64, terms: Vec<RemainderTerm>, true_value: Complex64) -> Self {
        let mut interpolant_value = Complex64::new(0.0, 0.0);
        let mut reconstructed = Complex64::new(0.0, 0.0);
        let mut err = 0.0;
        let mut k_check = 1.0;
        for term in &terms {
            interpolant_value += term.data * term.weight;
            reconstructed += (term.data + term.integral.value) * term.weight;
            err += term.integral.error_estimate * term.weight.norm();
            if term.slot.is_some() {
                k_check += term.weight.norm();
            }
        }
        Self {
            x,
            interpolant_value,
            converged: terms.iter().all(|t| t.integral.converged),
            terms,
            reconstructed,
            true_value,
            residual: (reconstructed - true_value).norm(),
            quadrature_error_estimate: err,
            k_check,
        }
    }

    pub fn per_node_integrals(&self) -> BTreeMap<Slot, Complex64> {
        self.terms
            .iter()
            .filter_map(|t| t.slot.map(|s| (s, t.integral.value)))
            .collect()
    }

    /// `K_check·(tol + 1e-9·(1 + |f(x)|))`.
    pub fn contract_bound(&self, tol: f64) -> f64 {
        self.k_check * (tol + 1e-9 * (1.0 + self.true_value.norm()))
    }

    pub fn max_integral(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.integral.value.norm())
            .fold(0.0, f64::max)
    }
}

fn check_smoothness<F: FunctionEvaluator + ?Sized>(f: &F, n: usize) -> Result<(), RemainderError> {
    if f.smoothness() < n {
        return Err(RemainderError::InsufficientSmoothness {
            required: n,
            available: f.smoothness(),
        });
    }
    Ok(())
}

/// `∫_{a_α}^x (D_c f)(t)·ω_c^(β)(a_α - t) dt`, signed.
pub fn remainder_integral<F: FunctionEvaluator + ?Sized>(
    cs: &CharacteristicSolution,
    sys: &InterpolationSystem,
    f: &F,
    alpha: usize,
    beta: usize,
    x: f64,
    tol: f64,
) -> Result<RemainderIntegral, RemainderError> {
    if sys.slot_index(Slot::new(alpha, beta)).is_none() {
        return Err(RemainderError::InvalidSlot { alpha, beta });
    }
    let op = cs.operator();
    let n = op.order();
    check_smoothness(f, n)?;
    let a = sys.nodes()[alpha];
    let kernel = cs.derivative(beta);
    let q = quadrature::integrate(
        |t| -> Result<Complex64, EvalError> {
            let d = f.derivatives(t, n)?;
            Ok(op.apply_to_derivatives(&d) * kernel.evaluate(a - t))
        },
        a,
        x,
        tol,
    )?;
    Ok(q.into())
}

fn node_data<F: FunctionEvaluator + ?Sized>(
    sys: &InterpolationSystem,
    f: &F,
) -> Result<Vec<Complex64>, EvalError> {
    let mut out = Vec::with_capacity(sys.dimension());
    for (&a, &m) in sys.nodes().iter().zip(sys.multiplicities()) {
        out.extend(f.derivatives(a, m - 1)?);
    }
    Ok(out)
}

/// `Σ_{α,β} (f^(β)(a_α) + remainder_integral(α, β, x))·χ_{α,β}(x)` together
/// with the true value `f(x)`.
///
/// Integrals run in parallel unless `f` declares itself serial; the report
/// is assembled in slot order either way.
pub fn reconstruct<F: FunctionEvaluator + ?Sized>(
    cs: &CharacteristicSolution,
    basis: &StandardBasis,
    f: &F,
    x: f64,
    tol: f64,
) -> Result<RemainderReport, RemainderError> {
    let sys = basis.system();
    if sys.dimension() != cs.operator().order() {
        return Err(HermiteError::DimensionMismatch {
            system: sys.dimension(),
            operator: cs.operator().order(),
        }
        .into());
    }
    let data = node_data(sys, f)?;
    let slots = sys.slots();
    let integral = |s: &Slot| remainder_integral(cs, sys, f, s.node, s.deriv, x, tol);
    let integrals: Vec<RemainderIntegral> = if f.is_serial() {
        slots.iter().map(integral).collect::<Result<_, _>>()?
    } else {
        slots.par_iter().map(integral).collect::<Result<_, _>>()?
    };
    let terms = slots
        .iter()
        .zip(data)
        .zip(integrals)
        .zip(basis.chis())
        .map(|(((&slot, data), integral), chi)| RemainderTerm {
            slot: Some(slot),
            data,
            integral,
            weight: chi.evaluate(x),
        })
        .collect();
    Ok(RemainderReport::assemble(x, terms, f.value(x)?))
}

/// Single-node reconstruction in condensed form
/// `Σ_β f^(β)(a)·Σ_i c_{i+β+1} ω_c^(i)(x-a) + ∫_a^x (D_c f)(t)·ω_c(x-t) dt`.
pub fn taylor_reconstruct<F: FunctionEvaluator + ?Sized>(
    cs: &CharacteristicSolution,
    a: f64,
    f: &F,
    x: f64,
    tol: f64,
) -> Result<RemainderReport, RemainderError> {
    let op = cs.operator();
    let n = op.order();
    check_smoothness(f, n)?;
    let data = f.derivatives(a, n - 1)?;
    let omegas: Vec<Complex64> = (0..n).map(|i| cs.eval_derivative(i, x - a)).collect();
    let zero = RemainderIntegral {
        value: Complex64::new(0.0, 0.0),
        error_estimate: 0.0,
        converged: true,
        evaluations: 0,
    };
    let mut terms: Vec<RemainderTerm> = data
        .iter()
        .enumerate()
        .map(|(beta, &d)| RemainderTerm {
            slot: Some(Slot::new(0, beta)),
            data: d,
            integral: zero,
            weight: (0..n - beta)
                .map(|i| op.coeff(i + beta + 1) * omegas[i])
                .sum(),
        })
        .collect();
    let omega = cs.ep();
    let q = quadrature::integrate(
        |t| -> Result<Complex64, EvalError> {
            let d = f.derivatives(t, n)?;
            Ok(op.apply_to_derivatives(&d) * omega.evaluate(x - t))
        },
        a,
        x,
        tol,
    )?;
    terms.push(RemainderTerm {
        slot: None,
        data: Complex64::new(0.0, 0.0),
        integral: q.into(),
        weight: Complex64::new(1.0, 0.0),
    });
    Ok(RemainderReport::assemble(x, terms, f.value(x)?))
}

/// Piecewise kernel of the classical Hermite remainder for `D = d^n/dt^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GreenKernel {
    sys: InterpolationSystem,
    basis: HermitePolynomialBasis,
    /// `1/k!` for `k < n`.
    inv_fact: Vec<f64>,
}

impl GreenKernel {
    pub fn new(sys: &InterpolationSystem) -> Self {
        let n = sys.dimension();
        let mut inv_fact = vec![1.0; n];
        for k in 1..n {
            inv_fact[k] = inv_fact[k - 1] / k as f64;
        }
        Self {
            sys: sys.clone(),
            basis: HermitePolynomialBasis::new(sys),
            inv_fact,
        }
    }

    pub fn system(&self) -> &InterpolationSystem {
        &self.sys
    }

    pub fn basis(&self) -> &HermitePolynomialBasis {
        &self.basis
    }

    /// Number of nodes strictly below `t`: the piece `(a_r, a_{r+1}]`
    /// containing `t`, with the first piece closed on the right at `a_1`.
    pub fn piece_index(&self, t: f64) -> usize {
        self.sys.nodes().partition_point(|&a| a < t)
    }

    /// `G(x, t)`.
    pub fn value(&self, x: f64, t: f64) -> f64 {
        let n = self.sys.dimension();
        let r = self.piece_index(t);
        let (range, sign) = if t <= x {
            (0..r, 1.0)
        } else {
            (r..self.sys.nodes().len(), -1.0)
        };
        let mut offset: usize = self.sys.multiplicities()[..range.start].iter().sum();
        let mut total = 0.0;
        for i in range {
            let a = self.sys.nodes()[i];
            for j in 0..self.sys.multiplicities()[i] {
                let k = n - j - 1;
                total += (a - t).powi(k as i32) * self.inv_fact[k] * self.basis.eval(offset + j, x);
            }
            offset += self.sys.multiplicities()[i];
        }
        sign * total
    }

    /// Endpoints of the support of `G(x, ·)` with the nodes and `x` in between.
    fn breakpoints(&self, x: f64) -> Vec<f64> {
        let mut pts: Vec<f64> = self.sys.nodes().to_vec();
        pts.push(x);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }
}

pub fn greens_kernel_value(gk: &GreenKernel, x: f64, t: f64) -> f64 {
    gk.value(x, t)
}

/// `∫ f^(n)(t)·G(x, t) dt` over the support of `G(x, ·)`.
pub fn green_integral<F: FunctionEvaluator + ?Sized>(
    gk: &GreenKernel,
    f: &F,
    x: f64,
    tol: f64,
) -> Result<RemainderIntegral, RemainderError> {
    let n = gk.sys.dimension();
    check_smoothness(f, n)?;
    let pts = gk.breakpoints(x);
    let pieces = (pts.len() - 1).max(1) as f64;
    let mut total = RemainderIntegral {
        value: Complex64::new(0.0, 0.0),
        error_estimate: 0.0,
        converged: true,
        evaluations: 0,
    };
    for w in pts.windows(2) {
        let q = quadrature::integrate(
            |t| -> Result<Complex64, EvalError> { Ok(f.derivatives(t, n)?[n] * gk.value(x, t)) },
            w[0],
            w[1],
            tol / pieces,
        )?;
        total.value += q.value;
        total.error_estimate += q.error_estimate;
        total.converged &= q.converged;
        total.evaluations += q.evaluations;
    }
    Ok(total)
}

/// `Σ f^(β)(a_α) H_{α,β}(x) + ∫ f^(n)(t) G(x,t) dt`.
pub fn classical_reconstruct<F: FunctionEvaluator + ?Sized>(
    gk: &GreenKernel,
    f: &F,
    x: f64,
    tol: f64,
) -> Result<RemainderReport, RemainderError> {
    let zero = RemainderIntegral {
        value: Complex64::new(0.0, 0.0),
        error_estimate: 0.0,
        converged: true,
        evaluations: 0,
    };
    let mut terms: Vec<RemainderTerm> = gk
        .sys
        .slots()
        .into_iter()
        .zip(node_data(&gk.sys, f)?)
        .enumerate()
        .map(|(s, (slot, data))| RemainderTerm {
            slot: Some(slot),
            data,
            integral: zero,
            weight: Complex64::new(gk.basis.eval(s, x), 0.0),
        })
        .collect();
    terms.push(RemainderTerm {
        slot: None,
        data: Complex64::new(0.0, 0.0),
        integral: green_integral(gk, f, x, tol)?,
        weight: Complex64::new(1.0, 0.0),
    });
    Ok(RemainderReport::assemble(x, terms, f.value(x)?))
}
