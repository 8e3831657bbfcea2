//! Closed-form instances of the remainder identity.
//!
//! Each case writes out its weights, kernels and differential expression by
//! hand, so it can be checked against the generic pipeline in
//! [`crate::remainder`].

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::charsol::CharacteristicSolution;
use crate::functions::{EvalError, FunctionEvaluator};
use crate::hermite::{HermitePolynomialBasis, InterpolationSystem, Slot};
use crate::kernel::{Operator, RootDecomposition, RootMode};
use crate::quadrature;
use crate::remainder::{self, RemainderError, RemainderReport, RemainderTerm};

const DEGENERACY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "corollary", rename_all = "snake_case")]
pub enum Corollary {
    /// Classical Hermite interpolation with `f^(n)` remainders.
    ClassicalHermite {
        nodes: Vec<f64>,
        multiplicities: Vec<usize>,
    },
    /// Lagrange interpolation at `n` distinct nodes.
    Lagrange {
        nodes: Vec<f64>,
    },
    /// Single node, arbitrary monic real operator.
    GeneralizedTaylor {
        a: f64,
        coeffs: Vec<f64>,
    },
    /// Classical Taylor formula of order `n`.
    Taylor {
        a: f64,
        n: usize,
    },
    Hyperbolic {
        a1: f64,
        a2: f64,
    },
    Trigonometric {
        a1: f64,
        a2: f64,
    },
    Biharmonic {
        a1: f64,
        a2: f64,
    },
    OddHyperbolic {
        a1: f64,
        a2: f64,
        a3: f64,
    },
    OddTrigonometric {
        a1: f64,
        a2: f64,
        a3: f64,
    },
}

impl Corollary {
    pub fn label(&self) -> &'static str {
        match self {
            Corollary::ClassicalHermite { .. } => "classical_hermite",
            Corollary::Lagrange { .. } => "lagrange",
            Corollary::GeneralizedTaylor { .. } => "generalized_taylor",
            Corollary::Taylor { .. } => "taylor",
            Corollary::Hyperbolic { .. } => "hyperbolic",
            Corollary::Trigonometric { .. } => "trigonometric",
            Corollary::Biharmonic { .. } => "biharmonic",
            Corollary::OddHyperbolic { .. } => "odd_hyperbolic",
            Corollary::OddTrigonometric { .. } => "odd_trigonometric",
        }
    }

    /// Ascending operator coefficients.
    pub fn coefficients(&self) -> Vec<f64> {
        let pure = |n: usize| {
            let mut c = vec![0.0; n + 1];
            c[n] = 1.0;
            c
        };
        match self {
            Corollary::ClassicalHermite { multiplicities, .. } => pure(multiplicities.iter().sum()),
            Corollary::Lagrange { nodes } => pure(nodes.len()),
            Corollary::GeneralizedTaylor { coeffs, .. } => coeffs.clone(),
            Corollary::Taylor { n, .. } => pure(*n),
            Corollary::Hyperbolic { .. } => vec![-1.0, 0.0, 1.0],
            Corollary::Trigonometric { .. } => vec![1.0, 0.0, 1.0],
            Corollary::Biharmonic { .. } => vec![-1.0, 0.0, 0.0, 0.0, 1.0],
            Corollary::OddHyperbolic { .. } => vec![0.0, -1.0, 0.0, 1.0],
            Corollary::OddTrigonometric { .. } => vec![0.0, 1.0, 0.0, 1.0],
        }
    }

    pub fn operator(&self) -> Result<Operator, RemainderError> {
        Ok(Operator::from_real(&self.coefficients())?)
    }

    /// Nodes and multiplicities in the order the case lists them.
    pub fn nodes(&self) -> (Vec<f64>, Vec<usize>) {
        match self {
            Corollary::ClassicalHermite {
                nodes,
                multiplicities,
            } => (nodes.clone(), multiplicities.clone()),
            Corollary::Lagrange { nodes } => (nodes.clone(), vec![1; nodes.len()]),
            Corollary::GeneralizedTaylor { a, coeffs } => {
                (vec![*a], vec![coeffs.len().saturating_sub(1)])
            }
            Corollary::Taylor { a, n } => (vec![*a], vec![*n]),
            Corollary::Hyperbolic { a1, a2 } | Corollary::Trigonometric { a1, a2 } => {
                (vec![*a1, *a2], vec![1, 1])
            }
            Corollary::Biharmonic { a1, a2 } => (vec![*a1, *a2], vec![2, 2]),
            Corollary::OddHyperbolic { a1, a2, a3 }
            | Corollary::OddTrigonometric { a1, a2, a3 } => (vec![*a1, *a2, *a3], vec![1, 1, 1]),
        }
    }
}

fn degenerate(msg: impl Into<String>) -> RemainderError {
    RemainderError::DegenerateParameters(msg.into())
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// `(f^(β)(a) + scale·∫_a^x expr(f)(t)·kernel(t) dt)·weight`.
#[allow(clippy::too_many_arguments)]
fn literal_term<F, D, K>(
    f: &F,
    slot: Slot,
    a: f64,
    x: f64,
    tol: f64,
    order: usize,
    expr: D,
    kernel: K,
    weight: f64,
) -> Result<RemainderTerm, RemainderError>
where
    F: FunctionEvaluator + ?Sized,
    D: Fn(&[Complex64]) -> Complex64,
    K: Fn(f64) -> f64,
{
    let data = f.derivatives(a, slot.deriv)?[slot.deriv];
    let q = quadrature::integrate(
        |t| -> Result<Complex64, EvalError> { Ok(expr(&f.derivatives(t, order)?) * kernel(t)) },
        a,
        x,
        tol,
    )?;
    Ok(RemainderTerm {
        slot: Some(slot),
        data,
        integral: q.into(),
        weight: real(weight),
    })
}

fn distinct(nodes: &[f64]) -> Result<(), RemainderError> {
    for i in 0..nodes.len() {
        for j in 0..i {
            if nodes[i] == nodes[j] {
                return Err(degenerate(format!("nodes {j} and {i} coincide")));
            }
        }
    }
    Ok(())
}

fn inv_factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc / i as f64)
}

/// Evaluates the hand-written identity of a corollary at `x` and compares it
/// with `f(x)`.
pub fn corollary_suite<F: FunctionEvaluator + ?Sized>(
    case: &Corollary,
    f: &F,
    x: f64,
    tol: f64,
) -> Result<RemainderReport, RemainderError> {
    let order = case.coefficients().len().saturating_sub(1);
    if f.smoothness() < order {
        return Err(RemainderError::InsufficientSmoothness {
            required: order,
            available: f.smoothness(),
        });
    }
    let terms = match case {
        Corollary::ClassicalHermite {
            nodes,
            multiplicities,
        } => {
            let sys = InterpolationSystem::new(nodes.clone(), multiplicities.clone())?;
            let n = sys.dimension();
            let h = HermitePolynomialBasis::new(&sys);
            sys.slots()
                .into_iter()
                .enumerate()
                .map(|(s, slot)| {
                    let a = nodes[slot.node];
                    let k = n - 1 - slot.deriv;
                    literal_term(
                        f,
                        slot,
                        a,
                        x,
                        tol,
                        n,
                        |d| d[n],
                        |t| (a - t).powi(k as i32) * inv_factorial(k),
                        h.eval(s, x),
                    )
                })
                .collect::<Result<Vec<_>, _>>()?
        }
        Corollary::Lagrange { nodes } => {
            distinct(nodes)?;
            let n = nodes.len();
            (0..n)
                .map(|alpha| {
                    let a = nodes[alpha];
                    let weight: f64 = (0..n)
                        .filter(|&j| j != alpha)
                        .map(|j| (x - nodes[j]) / (a - nodes[j]))
                        .product();
                    literal_term(
                        f,
                        Slot::new(alpha, 0),
                        a,
                        x,
                        tol,
                        n,
                        |d| d[n],
                        |t| (a - t).powi(n as i32 - 1) * inv_factorial(n - 1),
                        weight,
                    )
                })
                .collect::<Result<Vec<_>, _>>()?
        }
        Corollary::GeneralizedTaylor { a, coeffs } => {
            let op = Operator::from_real(coeffs)?;
            let rd = RootDecomposition::find(&op, RootMode::Companion)?;
            let cs = CharacteristicSolution::new(&op, &rd)?;
            return remainder::taylor_reconstruct(&cs, *a, f, x, tol);
        }
        Corollary::Taylor { a, n } => {
            let (a, n) = (*a, *n);
            if n == 0 {
                return Err(degenerate("Taylor order must be positive"));
            }
            let data = f.derivatives(a, n - 1)?;
            let mut terms: Vec<RemainderTerm> = data
                .into_iter()
                .enumerate()
                .map(|(beta, d)| RemainderTerm {
                    slot: Some(Slot::new(0, beta)),
                    data: d,
                    integral: remainder::RemainderIntegral {
                        value: real(0.0),
                        error_estimate: 0.0,
                        converged: true,
                        evaluations: 0,
                    },
                    weight: real((x - a).powi(beta as i32) * inv_factorial(beta)),
                })
                .collect();
            let q = quadrature::integrate(
                |t| -> Result<Complex64, EvalError> {
                    Ok(f.derivatives(t, n)?[n]
                        * ((x - t).powi(n as i32 - 1) * inv_factorial(n - 1)))
                },
                a,
                x,
                tol,
            )?;
            terms.push(RemainderTerm {
                slot: None,
                data: real(0.0),
                integral: q.into(),
                weight: real(1.0),
            });
            terms
        }
        Corollary::Hyperbolic { a1, a2 } => {
            let (a1, a2) = (*a1, *a2);
            let s = (a1 - a2).sinh();
            if s.abs() <= DEGENERACY_TOL {
                return Err(degenerate("a1 = a2"));
            }
            let expr = |d: &[Complex64]| d[2] - d[0];
            vec![
                literal_term(
                    f,
                    Slot::new(0, 0),
                    a1,
                    x,
                    tol,
                    2,
                    expr,
                    |t| (a1 - t).sinh(),
                    (x - a2).sinh() / s,
                )?,
                literal_term(
                    f,
                    Slot::new(1, 0),
                    a2,
                    x,
                    tol,
                    2,
                    expr,
                    |t| (a2 - t).sinh(),
                    -(x - a1).sinh() / s,
                )?,
            ]
        }
        Corollary::Trigonometric { a1, a2 } => {
            let (a1, a2) = (*a1, *a2);
            let s = (a1 - a2).sin();
            if s.abs() <= DEGENERACY_TOL {
                return Err(degenerate(format!("sin(a1 - a2) = {s:e} vanishes")));
            }
            let expr = |d: &[Complex64]| d[2] + d[0];
            vec![
                literal_term(
                    f,
                    Slot::new(0, 0),
                    a1,
                    x,
                    tol,
                    2,
                    expr,
                    |t| (a1 - t).sin(),
                    (x - a2).sin() / s,
                )?,
                literal_term(
                    f,
                    Slot::new(1, 0),
                    a2,
                    x,
                    tol,
                    2,
                    expr,
                    |t| (a2 - t).sin(),
                    -(x - a1).sin() / s,
                )?,
            ]
        }
        Corollary::Biharmonic { a1, a2 } => {
            let (a1, a2) = (*a1, *a2);
            let d = a1 - a2;
            let k = 2.0 - 2.0 * d.cosh() * d.cos();
            if k.abs() <= DEGENERACY_TOL * (1.0 + (d.cosh() * d.cos()).abs()) {
                return Err(degenerate("cosh(a1 - a2) cos(a1 - a2) = 1"));
            }
            let det = |p: f64, q: f64, r: f64, s: f64| (p * s - q * r) / k;
            let cm = d.cosh() - d.cos();
            let sp = d.sinh() + d.sin();
            let sm = d.sinh() - d.sin();
            let (x1, x2) = (x - a1, x - a2);
            let hs = |u: f64| u.sinh() - u.sin();
            let hc = |u: f64| u.cosh() - u.cos();
            let expr = |d: &[Complex64]| d[4] - d[0];
            let ks = |a: f64| move |t: f64| 0.5 * hs(a - t);
            let kc = |a: f64| move |t: f64| 0.5 * hc(a - t);
            vec![
                literal_term(
                    f,
                    Slot::new(0, 0),
                    a1,
                    x,
                    tol,
                    4,
                    expr,
                    ks(a1),
                    det(cm, hs(x2), sp, hc(x2)),
                )?,
                literal_term(
                    f,
                    Slot::new(0, 1),
                    a1,
                    x,
                    tol,
                    4,
                    expr,
                    kc(a1),
                    det(cm, hc(x2), sm, hs(x2)),
                )?,
                literal_term(
                    f,
                    Slot::new(1, 0),
                    a2,
                    x,
                    tol,
                    4,
                    expr,
                    ks(a2),
                    det(cm, -hs(x1), sp, hc(x1)),
                )?,
                literal_term(
                    f,
                    Slot::new(1, 1),
                    a2,
                    x,
                    tol,
                    4,
                    expr,
                    kc(a2),
                    det(cm, -hc(x1), sm, hs(x1)),
                )?,
            ]
        }
        Corollary::OddHyperbolic { a1, a2, a3 } | Corollary::OddTrigonometric { a1, a2, a3 } => {
            let hyperbolic = matches!(case, Corollary::OddHyperbolic { .. });
            let nodes = [*a1, *a2, *a3];
            distinct(&nodes)?;
            let even = |u: f64| if hyperbolic { u.cosh() } else { u.cos() };
            if !hyperbolic {
                let p = ((a1 - a3) / 2.0).sin() * ((a2 - a1) / 2.0).sin() * ((a3 - a2) / 2.0).sin();
                if p.abs() <= DEGENERACY_TOL {
                    return Err(degenerate(
                        "sin((a1-a3)/2) sin((a2-a1)/2) sin((a3-a2)/2) = 0",
                    ));
                }
            }
            let sign = if hyperbolic { -1.0 } else { 1.0 };
            let expr = move |d: &[Complex64]| d[3] + d[1] * sign;
            (0..3)
                .map(|i| {
                    let others: Vec<f64> = (0..3).filter(|&j| j != i).map(|j| nodes[j]).collect();
                    let mid = 0.5 * (others[0] + others[1]);
                    let half = 0.5 * (others[0] - others[1]);
                    let a = nodes[i];
                    let weight = (even(x - mid) - even(half)) / (even(a - mid) - even(half));
                    let kernel = move |t: f64| {
                        if hyperbolic {
                            (a - t).cosh() - 1.0
                        } else {
                            1.0 - (a - t).cos()
                        }
                    };
                    literal_term(f, Slot::new(i, 0), a, x, tol, 3, expr, kernel, weight)
                })
                .collect::<Result<Vec<_>, _>>()?
        }
    };
    Ok(RemainderReport::assemble(x, terms, f.value(x)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::CatalogFunction;
    use crate::hermite::StandardBasis;

    fn generic(case: &Corollary, f: &CatalogFunction, x: f64, tol: f64) -> RemainderReport {
        let op = case.operator().unwrap();
        let rd = RootDecomposition::find(&op, RootMode::Companion).unwrap();
        let cs = CharacteristicSolution::new(&op, &rd).unwrap();
        let (nodes, mults) = case.nodes();
        let sys = InterpolationSystem::new(nodes, mults).unwrap();
        let basis = StandardBasis::new(&op, &rd, &sys).unwrap();
        remainder::reconstruct(&cs, &basis, f, x, tol).unwrap()
    }

    #[test]
    fn lagrange_with_linear_function_is_exact() {
        let case = Corollary::Lagrange {
            nodes: vec![0.0, 1.0],
        };
        let f = CatalogFunction::Polynomial {
            coeffs: vec![2.0, -3.0],
        };
        let r = corollary_suite(&case, &f, 0.37, 1e-12).unwrap();
        assert!(r.residual < 1e-15);
        assert_eq!(r.max_integral(), 0.0);
    }

    #[test]
    fn biharmonic_with_exp_matches_generic_pipeline() {
        let case = Corollary::Biharmonic { a1: 0.0, a2: 1.0 };
        let f = CatalogFunction::Exp { sigma: 1.0 };
        let lit = corollary_suite(&case, &f, 0.5, 1e-12).unwrap();
        let gen = generic(&case, &f, 0.5, 1e-12);
        assert!(lit.residual < 1e-8, "{}", lit.residual);
        assert!((lit.reconstructed - gen.reconstructed).norm() < 1e-8);
    }

    #[test]
    fn odd_hyperbolic_with_kernel_element() {
        let case = Corollary::OddHyperbolic {
            a1: 0.0,
            a2: 1.0,
            a3: 2.0,
        };
        let f = CatalogFunction::Cosh { sigma: 1.0 };
        for x in [-0.5, 0.7, 2.4] {
            let r = corollary_suite(&case, &f, x, 1e-12).unwrap();
            assert!(r.residual < 1e-10);
        }
    }

    #[test]
    fn every_case_agrees_with_generic_reconstruction() {
        let cases = [
            Corollary::ClassicalHermite {
                nodes: vec![-0.5, 0.4, 1.1],
                multiplicities: vec![2, 1, 2],
            },
            Corollary::Lagrange {
                nodes: vec![-1.0, 0.2, 0.9],
            },
            Corollary::GeneralizedTaylor {
                a: 0.2,
                coeffs: vec![1.0, 0.0, 1.0],
            },
            Corollary::Taylor { a: 0.1, n: 4 },
            Corollary::Hyperbolic { a1: 0.0, a2: 1.3 },
            Corollary::Trigonometric { a1: 0.2, a2: 1.1 },
            Corollary::Biharmonic { a1: 0.3, a2: 1.4 },
            Corollary::OddHyperbolic {
                a1: 0.0,
                a2: 0.8,
                a3: 1.9,
            },
            Corollary::OddTrigonometric {
                a1: 0.1,
                a2: 0.9,
                a3: 1.6,
            },
        ];
        let f = CatalogFunction::t_sin();
        for case in &cases {
            for x in [-0.3, 0.75, 1.8] {
                let lit = corollary_suite(case, &f, x, 1e-11).unwrap();
                let gen = generic(case, &f, x, 1e-11);
                let scale = 1.0 + lit.true_value.norm();
                assert!(
                    lit.residual <= 1e-8 * scale,
                    "{} {x}: {}",
                    case.label(),
                    lit.residual
                );
                assert!(
                    (lit.reconstructed - gen.reconstructed).norm() <= 1e-8 * scale,
                    "{} {x}",
                    case.label()
                );
            }
        }
    }

    #[test]
    fn degenerate_parameters_are_rejected() {
        let f = CatalogFunction::Exp { sigma: 1.0 };
        let pi = std::f64::consts::PI;
        for case in [
            Corollary::Trigonometric { a1: 0.0, a2: pi },
            Corollary::Hyperbolic { a1: 0.5, a2: 0.5 },
            Corollary::OddTrigonometric {
                a1: 0.0,
                a2: 1.0,
                a3: 2.0 * pi,
            },
            Corollary::Lagrange {
                nodes: vec![0.0, 1.0, 0.0],
            },
        ] {
            assert!(matches!(
                corollary_suite(&case, &f, 0.3, 1e-10),
                Err(RemainderError::DegenerateParameters(_))
            ));
        }
    }

    #[test]
    fn cases_round_trip_through_json() {
        let case = Corollary::OddTrigonometric {
            a1: 0.1,
            a2: 0.9,
            a3: 1.6,
        };
        let s = serde_json::to_string(&case).unwrap();
        assert!(s.contains("\"corollary\":\"odd_trigonometric\""));
        assert_eq!(serde_json::from_str::<Corollary>(&s).unwrap(), case);
    }
}
