//! Closed-form standard bases, characteristic solutions and Wronskians for
//! the classical special cases (hyperbolic, trigonometric, biharmonic,
//! odd third-order, Lagrange and Taylor).
//!
//! Everything here is evaluated straight from the formulas, never through
//! the linear-solve pipeline, so it can serve as a golden reference for
//! [`StandardBasis`](crate::hermite::StandardBasis).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::hermite::{kronecker_deviation_of, HermiteError, InterpolationSystem};
use crate::kernel::{ExponentialPolynomial, Operator};

/// `A sinh(t-s) + B cosh(t-s) + C sin(t-s) + D cos(t-s) + E`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Elementary {
    pub shift: f64,
    pub sinh: f64,
    pub cosh: f64,
    pub sin: f64,
    pub cos: f64,
    pub constant: f64,
}

impl Elementary {
    pub fn eval(&self, t: f64, order: usize) -> f64 {
        let x = t - self.shift;
        let (sh, ch) = (x.sinh(), x.cosh());
        let (s, c) = (x.sin(), x.cos());
        let hyp = if order.is_multiple_of(2) {
            self.sinh * sh + self.cosh * ch
        } else {
            self.sinh * ch + self.cosh * sh
        };
        let trig = match order % 4 {
            0 => self.sin * s + self.cos * c,
            1 => self.sin * c - self.cos * s,
            2 => -self.sin * s - self.cos * c,
            _ => -self.sin * c + self.cos * s,
        };
        let constant = if order == 0 { self.constant } else { 0.0 };
        hyp + trig + constant
    }

    /// The same function as an exponential polynomial.
    pub fn to_ep(&self) -> ExponentialPolynomial {
        let half = |x: f64| Complex64::new(0.5 * x, 0.0);
        let i = Complex64::i();
        let base = ExponentialPolynomial::new(vec![
            (Complex64::new(1.0, 0.0), vec![half(self.sinh + self.cosh)]),
            (Complex64::new(-1.0, 0.0), vec![half(self.cosh - self.sinh)]),
            // sin x = (e^{ix} - e^{-ix}) / 2i, cos x = (e^{ix} + e^{-ix}) / 2
            (i, vec![half(self.cos) - i * half(self.sin)]),
            (-i, vec![half(self.cos) + i * half(self.sin)]),
            (
                Complex64::new(0.0, 0.0),
                vec![Complex64::new(self.constant, 0.0)],
            ),
        ]);
        base.translate(-self.shift)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClosedForm {
    Elementary(Elementary),
    /// `∏_{j≠index} (t - a_j)/(a_index - a_j)`.
    Lagrange {
        nodes: Vec<f64>,
        index: usize,
    },
    /// `(t - a)^j / j!`.
    Monomial {
        a: f64,
        j: usize,
    },
}

impl ClosedForm {
    pub fn eval(&self, t: f64, order: usize) -> f64 {
        match self {
            ClosedForm::Elementary(e) => e.eval(t, order),
            ClosedForm::Lagrange { nodes, index } => {
                let ai = nodes[*index];
                let others = nodes
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != *index)
                    .map(|(_, &aj)| aj);
                if order == 0 {
                    others.map(|aj| (t - aj) / (ai - aj)).product()
                } else {
                    let mut p = vec![1.0];
                    for aj in others {
                        p = crate::poly::mul(&p, &[-aj / (ai - aj), 1.0 / (ai - aj)]);
                    }
                    crate::poly::eval_derivative(&p, order, t)
                }
            }
            ClosedForm::Monomial { a, j } => {
                if order > *j {
                    return 0.0;
                }
                let k = j - order;
                let fact: f64 = (1..=k).map(|x| x as f64).product();
                (t - a).powi(k as i32) / fact
            }
        }
    }
}

/// Named closed-form cases with their node parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum CatalogCase {
    /// `f'' - f`, two simple nodes.
    Hyperbolic2 { a1: f64, a2: f64 },
    /// `f'' + f`, two simple nodes.
    Trigonometric2 { a1: f64, a2: f64 },
    /// `f'''' - f`, two double nodes.
    Biharmonic4 { a1: f64, a2: f64 },
    /// `f''' - f'`, three simple nodes.
    OddHyperbolic3 { a1: f64, a2: f64, a3: f64 },
    /// `f''' + f'`, three simple nodes.
    OddTrigonometric3 { a1: f64, a2: f64, a3: f64 },
    /// `f^(n)`, `n` simple nodes.
    Lagrange { nodes: Vec<f64> },
    /// `f^(n)`, one node of multiplicity `n`.
    Taylor { a: f64, n: usize },
}

impl CatalogCase {
    pub fn operator(&self) -> Operator {
        let c: Vec<f64> = match self {
            CatalogCase::Hyperbolic2 { .. } => vec![-1.0, 0.0, 1.0],
            CatalogCase::Trigonometric2 { .. } => vec![1.0, 0.0, 1.0],
            CatalogCase::Biharmonic4 { .. } => vec![-1.0, 0.0, 0.0, 0.0, 1.0],
            CatalogCase::OddHyperbolic3 { .. } => vec![0.0, -1.0, 0.0, 1.0],
            CatalogCase::OddTrigonometric3 { .. } => vec![0.0, 1.0, 0.0, 1.0],
            CatalogCase::Lagrange { nodes } => {
                return Operator::pure_derivative(nodes.len().max(1))
            }
            CatalogCase::Taylor { n, .. } => return Operator::pure_derivative((*n).max(1)),
        };
        Operator::from_real(&c).expect("catalog operators are monic")
    }

    pub fn system(&self) -> Result<InterpolationSystem, HermiteError> {
        match self {
            CatalogCase::Hyperbolic2 { a1, a2 } | CatalogCase::Trigonometric2 { a1, a2 } => {
                InterpolationSystem::new(vec![*a1, *a2], vec![1, 1])
            }
            CatalogCase::Biharmonic4 { a1, a2 } => {
                InterpolationSystem::new(vec![*a1, *a2], vec![2, 2])
            }
            CatalogCase::OddHyperbolic3 { a1, a2, a3 }
            | CatalogCase::OddTrigonometric3 { a1, a2, a3 } => {
                InterpolationSystem::new(vec![*a1, *a2, *a3], vec![1, 1, 1])
            }
            CatalogCase::Lagrange { nodes } => {
                InterpolationSystem::new(nodes.clone(), vec![1; nodes.len()])
            }
            CatalogCase::Taylor { a, n } => InterpolationSystem::taylor(*a, *n),
        }
    }
}

/// A closed-form standard basis in slot order.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormBasis {
    case: CatalogCase,
    system: InterpolationSystem,
    chis: Vec<ClosedForm>,
}

fn degenerate(msg: impl Into<String>) -> HermiteError {
    HermiteError::DegenerateParameters(msg.into())
}

fn odd_third_order(nodes: [f64; 3], hyperbolic: bool) -> Vec<ClosedForm> {
    (0..3)
        .map(|i| {
            let others: Vec<f64> = (0..3).filter(|&j| j != i).map(|j| nodes[j]).collect();
            let mid = 0.5 * (others[0] + others[1]);
            let half = 0.5 * (others[0] - others[1]);
            let (at_node, offset) = if hyperbolic {
                ((nodes[i] - mid).cosh(), half.cosh())
            } else {
                ((nodes[i] - mid).cos(), half.cos())
            };
            let den = at_node - offset;
            let mut e = Elementary {
                shift: mid,
                constant: -offset / den,
                ..Default::default()
            };
            if hyperbolic {
                e.cosh = 1.0 / den;
            } else {
                e.cos = 1.0 / den;
            }
            ClosedForm::Elementary(e)
        })
        .collect()
}

/// Builds the closed-form basis for a catalog case, checking the case's
/// nondegeneracy hypothesis first.
pub fn closed_form_catalog(case: &CatalogCase) -> Result<ClosedFormBasis, HermiteError> {
    let system = case.system()?;
    let chis = match *case {
        CatalogCase::Hyperbolic2 { a1, a2 } => {
            let s = (a1 - a2).sinh();
            vec![
                ClosedForm::Elementary(Elementary {
                    shift: a2,
                    sinh: 1.0 / s,
                    ..Default::default()
                }),
                ClosedForm::Elementary(Elementary {
                    shift: a1,
                    sinh: -1.0 / s,
                    ..Default::default()
                }),
            ]
        }
        CatalogCase::Trigonometric2 { a1, a2 } => {
            let s = (a1 - a2).sin();
            if s.abs() <= 1e-12 {
                return Err(degenerate(format!("sin(a1 - a2) = {s:e} vanishes")));
            }
            vec![
                ClosedForm::Elementary(Elementary {
                    shift: a2,
                    sin: 1.0 / s,
                    ..Default::default()
                }),
                ClosedForm::Elementary(Elementary {
                    shift: a1,
                    sin: -1.0 / s,
                    ..Default::default()
                }),
            ]
        }
        CatalogCase::Biharmonic4 { a1, a2 } => {
            let d = a1 - a2;
            let k = 2.0 - 2.0 * d.cosh() * d.cos();
            if k.abs() <= 1e-12 * (1.0 + (d.cosh() * d.cos()).abs()) {
                return Err(degenerate("cosh(a1 - a2) cos(a1 - a2) = 1"));
            }
            let p = (d.cosh() - d.cos()) / k;
            let q = (d.sinh() + d.sin()) / k;
            let r = (d.sinh() - d.sin()) / k;
            // each element expands a 2x2 determinant linear in the t-column
            let e = |shift, sinh, cosh, sin, cos| {
                ClosedForm::Elementary(Elementary {
                    shift,
                    sinh,
                    cosh,
                    sin,
                    cos,
                    constant: 0.0,
                })
            };
            vec![
                e(a2, -q, p, q, -p),
                e(a2, p, -r, -p, r),
                e(a1, q, p, -q, -p),
                e(a1, p, r, -p, -r),
            ]
        }
        CatalogCase::OddHyperbolic3 { a1, a2, a3 } => odd_third_order([a1, a2, a3], true),
        CatalogCase::OddTrigonometric3 { a1, a2, a3 } => {
            let w = odd_trigonometric_wronskian(a1, a2, a3);
            if w.abs() <= 1e-12 {
                return Err(degenerate(
                    "sin((a1-a3)/2) sin((a2-a1)/2) sin((a3-a2)/2) = 0",
                ));
            }
            odd_third_order([a1, a2, a3], false)
        }
        CatalogCase::Lagrange { ref nodes } => (0..nodes.len())
            .map(|index| ClosedForm::Lagrange {
                nodes: nodes.clone(),
                index,
            })
            .collect(),
        CatalogCase::Taylor { a, n } => (0..n).map(|j| ClosedForm::Monomial { a, j }).collect(),
    };
    Ok(ClosedFormBasis {
        case: case.clone(),
        system,
        chis,
    })
}

impl ClosedFormBasis {
    pub fn case(&self) -> &CatalogCase {
        &self.case
    }

    pub fn system(&self) -> &InterpolationSystem {
        &self.system
    }

    pub fn chis(&self) -> &[ClosedForm] {
        &self.chis
    }

    pub fn eval(&self, slot_index: usize, t: f64, order: usize) -> f64 {
        self.chis[slot_index].eval(t, order)
    }

    pub fn kronecker_deviation(&self) -> f64 {
        kronecker_deviation_of(&self.system, |s, j, t| {
            Complex64::new(self.eval(s, t, j), 0.0)
        })
    }
}

/// Closed forms of `ω_c` for the catalog operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CharacteristicClosedForm {
    /// `t^{n-1}/(n-1)!` for `f^(n)`.
    Power(usize),
    /// `sinh` for `f'' - f`.
    Sinh,
    /// `sin` for `f'' + f`.
    Sin,
    /// `(sinh - sin)/2` for `f'''' - f`.
    HalfSinhMinusSin,
    /// `cosh - 1` for `f''' - f'`.
    CoshMinusOne,
    /// `1 - cos` for `f''' + f'`.
    OneMinusCos,
}

impl CharacteristicClosedForm {
    pub fn operator(&self) -> Operator {
        let c: Vec<f64> = match self {
            CharacteristicClosedForm::Power(n) => return Operator::pure_derivative(*n),
            CharacteristicClosedForm::Sinh => vec![-1.0, 0.0, 1.0],
            CharacteristicClosedForm::Sin => vec![1.0, 0.0, 1.0],
            CharacteristicClosedForm::HalfSinhMinusSin => vec![-1.0, 0.0, 0.0, 0.0, 1.0],
            CharacteristicClosedForm::CoshMinusOne => vec![0.0, -1.0, 0.0, 1.0],
            CharacteristicClosedForm::OneMinusCos => vec![0.0, 1.0, 0.0, 1.0],
        };
        Operator::from_real(&c).expect("monic")
    }

    pub fn as_closed_form(&self) -> ClosedForm {
        let e = |sinh, cosh, sin, cos, constant| {
            ClosedForm::Elementary(Elementary {
                shift: 0.0,
                sinh,
                cosh,
                sin,
                cos,
                constant,
            })
        };
        match *self {
            CharacteristicClosedForm::Power(n) => ClosedForm::Monomial { a: 0.0, j: n - 1 },
            CharacteristicClosedForm::Sinh => e(1.0, 0.0, 0.0, 0.0, 0.0),
            CharacteristicClosedForm::Sin => e(0.0, 0.0, 1.0, 0.0, 0.0),
            CharacteristicClosedForm::HalfSinhMinusSin => e(0.5, 0.0, -0.5, 0.0, 0.0),
            CharacteristicClosedForm::CoshMinusOne => e(0.0, 1.0, 0.0, 0.0, -1.0),
            CharacteristicClosedForm::OneMinusCos => e(0.0, 0.0, 0.0, -1.0, 1.0),
        }
    }

    pub fn eval(&self, t: f64, order: usize) -> f64 {
        self.as_closed_form().eval(t, order)
    }
}

/// `2 - 2 cosh(a1 - a2) cos(a1 - a2)`.
pub fn biharmonic_wronskian(a1: f64, a2: f64) -> f64 {
    let d = a1 - a2;
    2.0 - 2.0 * d.cosh() * d.cos()
}

/// `sinh(a3-a2) + sinh(a1-a3) + sinh(a2-a1)`.
pub fn odd_hyperbolic_wronskian(a1: f64, a2: f64, a3: f64) -> f64 {
    (a3 - a2).sinh() + (a1 - a3).sinh() + (a2 - a1).sinh()
}

/// `4 sinh((a1-a3)/2) sinh((a2-a1)/2) sinh((a3-a2)/2)`, equal to
/// [`odd_hyperbolic_wronskian`].
pub fn odd_hyperbolic_wronskian_product(a1: f64, a2: f64, a3: f64) -> f64 {
    4.0 * ((a1 - a3) / 2.0).sinh() * ((a2 - a1) / 2.0).sinh() * ((a3 - a2) / 2.0).sinh()
}

/// `sin(a3-a2) + sin(a1-a3) + sin(a2-a1)`.
pub fn odd_trigonometric_wronskian(a1: f64, a2: f64, a3: f64) -> f64 {
    (a3 - a2).sin() + (a1 - a3).sin() + (a2 - a1).sin()
}

/// `4 sin((a1-a3)/2) sin((a2-a1)/2) sin((a3-a2)/2)`. This is the negative of
/// [`odd_trigonometric_wronskian`].
pub fn odd_trigonometric_wronskian_product(a1: f64, a2: f64, a3: f64) -> f64 {
    4.0 * ((a1 - a3) / 2.0).sin() * ((a2 - a1) / 2.0).sin() * ((a3 - a2) / 2.0).sin()
}

fn shifted(
    shift: f64,
    sinh: f64,
    cosh: f64,
    sin: f64,
    cos: f64,
    constant: f64,
) -> ExponentialPolynomial {
    Elementary {
        shift,
        sinh,
        cosh,
        sin,
        cos,
        constant,
    }
    .to_ep()
}

/// `sinh(t-a2), cosh(t-a2), sin(t-a2), cos(t-a2)`.
pub fn biharmonic_fundamental(a2: f64) -> Vec<ExponentialPolynomial> {
    vec![
        shifted(a2, 1.0, 0.0, 0.0, 0.0, 0.0),
        shifted(a2, 0.0, 1.0, 0.0, 0.0, 0.0),
        shifted(a2, 0.0, 0.0, 1.0, 0.0, 0.0),
        shifted(a2, 0.0, 0.0, 0.0, 1.0, 0.0),
    ]
}

/// `1, cosh(t-a3), sinh(t-a3)`.
pub fn odd_hyperbolic_fundamental(a3: f64) -> Vec<ExponentialPolynomial> {
    vec![
        shifted(a3, 0.0, 0.0, 0.0, 0.0, 1.0),
        shifted(a3, 0.0, 1.0, 0.0, 0.0, 0.0),
        shifted(a3, 1.0, 0.0, 0.0, 0.0, 0.0),
    ]
}

/// `1, cos(t-a3), sin(t-a3)`.
pub fn odd_trigonometric_fundamental(a3: f64) -> Vec<ExponentialPolynomial> {
    vec![
        shifted(a3, 0.0, 0.0, 0.0, 0.0, 1.0),
        shifted(a3, 0.0, 0.0, 0.0, 1.0, 0.0),
        shifted(a3, 0.0, 0.0, 1.0, 0.0, 0.0),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::wronskian;

    #[test]
    fn elementary_derivatives_and_ep_agree() {
        let e = Elementary {
            shift: 0.3,
            sinh: 0.5,
            cosh: -1.2,
            sin: 2.0,
            cos: 0.7,
            constant: 0.4,
        };
        let ep = e.to_ep();
        for order in 0..6 {
            let d = ep.derivative(order);
            for &t in &[-1.0, 0.0, 0.9] {
                assert!((d.evaluate(t).re - e.eval(t, order)).abs() < 1e-13);
                assert!(d.evaluate(t).im.abs() < 1e-14);
            }
        }
    }

    #[test]
    fn every_case_satisfies_kronecker() {
        let cases = [
            CatalogCase::Hyperbolic2 { a1: 0.2, a2: 1.5 },
            CatalogCase::Trigonometric2 { a1: 0.2, a2: 1.5 },
            CatalogCase::Biharmonic4 { a1: 0.3, a2: 1.4 },
            CatalogCase::OddHyperbolic3 {
                a1: 0.2,
                a2: 0.9,
                a3: 1.7,
            },
            CatalogCase::OddTrigonometric3 {
                a1: 0.2,
                a2: 0.9,
                a3: 1.7,
            },
            CatalogCase::Lagrange {
                nodes: vec![0.1, 0.5, 1.2, 1.9],
            },
            CatalogCase::Taylor { a: 0.7, n: 5 },
        ];
        for case in &cases {
            let b = closed_form_catalog(case).unwrap();
            assert!(b.kronecker_deviation() < 1e-12, "{case:?}");
            assert_eq!(b.chis().len(), case.operator().order());
        }
    }

    #[test]
    fn degenerate_parameters() {
        let pi = std::f64::consts::PI;
        assert!(matches!(
            closed_form_catalog(&CatalogCase::Trigonometric2 { a1: 0.0, a2: pi }),
            Err(HermiteError::DegenerateParameters(_))
        ));
        assert!(matches!(
            closed_form_catalog(&CatalogCase::OddTrigonometric3 {
                a1: 0.0,
                a2: 1.0,
                a3: 2.0 * pi
            }),
            Err(HermiteError::DegenerateParameters(_))
        ));
        assert!(matches!(
            closed_form_catalog(&CatalogCase::Biharmonic4 { a1: 0.0, a2: 0.0 }),
            Err(HermiteError::NonIncreasingNodes(_))
        ));
    }

    #[test]
    fn wronskians_with_shifted_fundamental_systems() {
        let (a1, a2) = (0.3, 1.4);
        let sys = InterpolationSystem::new(vec![a1, a2], vec![2, 2]).unwrap();
        let w = wronskian(&sys, &biharmonic_fundamental(a2)).unwrap();
        assert!((w.determinant.re - biharmonic_wronskian(a1, a2)).abs() < 1e-13);

        let (a1, a2, a3) = (0.2, 0.9, 1.7);
        let sys = InterpolationSystem::new(vec![a1, a2, a3], vec![1, 1, 1]).unwrap();
        let w = wronskian(&sys, &odd_hyperbolic_fundamental(a3)).unwrap();
        assert!((w.determinant.re - odd_hyperbolic_wronskian(a1, a2, a3)).abs() < 1e-13);
        assert!(
            (odd_hyperbolic_wronskian(a1, a2, a3) - odd_hyperbolic_wronskian_product(a1, a2, a3))
                .abs()
                < 1e-14
        );
        let w = wronskian(&sys, &odd_trigonometric_fundamental(a3)).unwrap();
        assert!((w.determinant.re - odd_trigonometric_wronskian(a1, a2, a3)).abs() < 1e-13);
        assert!(
            (odd_trigonometric_wronskian(a1, a2, a3)
                + odd_trigonometric_wronskian_product(a1, a2, a3))
            .abs()
                < 1e-14
        );
    }

    #[test]
    fn characteristic_closed_forms_solve_their_ivp() {
        let forms = [
            CharacteristicClosedForm::Power(4),
            CharacteristicClosedForm::Sinh,
            CharacteristicClosedForm::Sin,
            CharacteristicClosedForm::HalfSinhMinusSin,
            CharacteristicClosedForm::CoshMinusOne,
            CharacteristicClosedForm::OneMinusCos,
        ];
        for f in forms {
            let n = f.operator().order();
            for l in 0..n {
                let expected = if l == n - 1 { 1.0 } else { 0.0 };
                assert!((f.eval(0.0, l) - expected).abs() < 1e-15, "{f:?} l={l}");
            }
        }
    }
}
