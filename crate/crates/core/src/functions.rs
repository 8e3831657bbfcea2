//! Test functions with exact derivatives.
//!
//! The remainder needs `D_c f = Σ c_k f^(k)` at arbitrary points, so every
//! evaluator supplies its derivatives directly instead of differencing.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernel::ExponentialPolynomial;
use crate::poly;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("derivative of order {requested} requested, function is only C^{available}")]
    InsufficientSmoothness { requested: usize, available: usize },
    #[error("non-finite value at t = {t}")]
    NonFinite { t: f64 },
    #[error("{0}")]
    Other(String),
}

/// A function together with its derivatives.
///
/// Implementations must be callable from several threads at once unless
/// [`FunctionEvaluator::is_serial`] returns true.
pub trait FunctionEvaluator: Sync {
    /// `f(t), f'(t), …, f^(max_order)(t)`.
    fn derivatives(&self, t: f64, max_order: usize) -> Result<Vec<Complex64>, EvalError>;

    /// Highest derivative order available.
    fn smoothness(&self) -> usize {
        usize::MAX
    }

    fn is_serial(&self) -> bool {
        false
    }

    fn value(&self, t: f64) -> Result<Complex64, EvalError> {
        Ok(self.derivatives(t, 0)?[0])
    }
}

impl<F: FunctionEvaluator + ?Sized> FunctionEvaluator for &F {
    fn derivatives(&self, t: f64, max_order: usize) -> Result<Vec<Complex64>, EvalError> {
        (**self).derivatives(t, max_order)
    }
    fn smoothness(&self) -> usize {
        (**self).smoothness()
    }
    fn is_serial(&self) -> bool {
        (**self).is_serial()
    }
}

impl FunctionEvaluator for ExponentialPolynomial {
    fn derivatives(&self, t: f64, max_order: usize) -> Result<Vec<Complex64>, EvalError> {
        let mut out = Vec::with_capacity(max_order + 1);
        let mut d = self.clone();
        for _ in 0..=max_order {
            out.push(d.evaluate(t));
            d = d.derivative(1);
        }
        Ok(out)
    }
}

fn default_sigma() -> f64 {
    1.0
}

fn default_scale() -> f64 {
    1.0
}

/// Built-in functions addressable from a problem specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CatalogFunction {
    Exp {
        #[serde(default = "default_sigma")]
        sigma: f64,
    },
    Sin {
        #[serde(default = "default_sigma")]
        sigma: f64,
    },
    Cos {
        #[serde(default = "default_sigma")]
        sigma: f64,
    },
    Sinh {
        #[serde(default = "default_sigma")]
        sigma: f64,
    },
    Cosh {
        #[serde(default = "default_sigma")]
        sigma: f64,
    },
    /// Ascending coefficients.
    Polynomial {
        coeffs: Vec<f64>,
    },
    /// `1 / (1 + (s t)^2)`.
    Runge {
        #[serde(default = "default_scale")]
        scale: f64,
    },
    Product {
        factors: Vec<CatalogFunction>,
    },
    Sum {
        terms: Vec<(f64, CatalogFunction)>,
    },
}

impl CatalogFunction {
    /// `t·sin t`.
    pub fn t_sin() -> Self {
        CatalogFunction::Product {
            factors: vec![
                CatalogFunction::Polynomial {
                    coeffs: vec![0.0, 1.0],
                },
                CatalogFunction::Sin { sigma: 1.0 },
            ],
        }
    }

    pub fn runge() -> Self {
        CatalogFunction::Runge { scale: 1.0 }
    }

    fn real_derivatives(&self, t: f64, m: usize) -> Vec<f64> {
        match self {
            CatalogFunction::Exp { sigma } => {
                let e = (sigma * t).exp();
                powers(*sigma, m).into_iter().map(|p| p * e).collect()
            }
            CatalogFunction::Sin { sigma } | CatalogFunction::Cos { sigma } => {
                let (s, c) = (sigma * t).sin_cos();
                // sin, cos, -sin, -cos, ...
                let cycle = [s, c, -s, -c];
                let offset = usize::from(matches!(self, CatalogFunction::Cos { .. }));
                powers(*sigma, m)
                    .into_iter()
                    .enumerate()
                    .map(|(k, p)| p * cycle[(k + offset) % 4])
                    .collect()
            }
            CatalogFunction::Sinh { sigma } | CatalogFunction::Cosh { sigma } => {
                let (s, c) = ((sigma * t).sinh(), (sigma * t).cosh());
                let odd = matches!(self, CatalogFunction::Sinh { .. });
                powers(*sigma, m)
                    .into_iter()
                    .enumerate()
                    .map(|(k, p)| p * if (k % 2 == 0) == odd { s } else { c })
                    .collect()
            }
            CatalogFunction::Polynomial { coeffs } => (0..=m)
                .map(|k| poly::eval_derivative(coeffs, k, t))
                .collect(),
            CatalogFunction::Runge { scale } => {
                let u = scale * t;
                let g = 1.0 + u * u;
                let mut d: Vec<f64> = Vec::with_capacity(m + 1);
                for k in 0..=m {
                    let kf = k as f64;
                    let v = match k {
                        0 => 1.0 / g,
                        1 => -2.0 * u * d[0] / g,
                        _ => -(2.0 * kf * u * d[k - 1] + kf * (kf - 1.0) * d[k - 2]) / g,
                    };
                    d.push(v);
                }
                let pw = powers(*scale, m);
                d.iter().zip(pw).map(|(v, p)| v * p).collect()
            }
            CatalogFunction::Product { factors } => {
                let mut acc = vec![0.0; m + 1];
                acc[0] = 1.0;
                for f in factors {
                    let g = f.real_derivatives(t, m);
                    acc = leibniz(&acc, &g);
                }
                acc
            }
            CatalogFunction::Sum { terms } => {
                let mut acc = vec![0.0; m + 1];
                for (w, f) in terms {
                    for (a, v) in acc.iter_mut().zip(f.real_derivatives(t, m)) {
                        *a += w * v;
                    }
                }
                acc
            }
        }
    }
}

fn powers(s: f64, m: usize) -> Vec<f64> {
    std::iter::successors(Some(1.0), |p| Some(p * s))
        .take(m + 1)
        .collect()
}

fn leibniz(f: &[f64], g: &[f64]) -> Vec<f64> {
    let m = f.len().min(g.len());
    let mut out = vec![0.0; m];
    for (k, o) in out.iter_mut().enumerate() {
        let mut binom = 1.0;
        for i in 0..=k {
            *o += binom * f[i] * g[k - i];
            binom = binom * (k - i) as f64 / (i + 1) as f64;
        }
    }
    out
}

impl FunctionEvaluator for CatalogFunction {
    fn derivatives(&self, t: f64, max_order: usize) -> Result<Vec<Complex64>, EvalError> {
        let d = self.real_derivatives(t, max_order);
        if d.iter().any(|v| !v.is_finite()) {
            return Err(EvalError::NonFinite { t });
        }
        Ok(d.into_iter().map(|v| Complex64::new(v, 0.0)).collect())
    }
}

/// Largest relative mismatch between `f'` and the central difference of `f`
/// over the sample points, scaled by `h²·|f'''|`-style slack.
pub fn derivative_consistency<F: FunctionEvaluator + ?Sized>(
    f: &F,
    points: &[f64],
    h: f64,
) -> Result<f64, EvalError> {
    let mut worst: f64 = 0.0;
    for &t in points {
        let d = f.derivatives(t, 3)?;
        let fd = (f.value(t + h)? - f.value(t - h)?) / (2.0 * h);
        let slack = h * h * (1.0 + d[3].norm()) + 1e-10 * (1.0 + d[0].norm()) / h;
        worst = worst.max((fd - d[1]).norm() / slack);
    }
    Ok(worst)
}
