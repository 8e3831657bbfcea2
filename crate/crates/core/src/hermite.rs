//! Hermite-type interpolation inside `ker(D_c)`.
//!
//! An interpolation system prescribes `n_i` derivative values at each node
//! `a_i`. Within an `n`-dimensional kernel the problem is uniquely solvable
//! exactly when the generalized Wronskian of a fundamental system at the
//! nodes is nonzero; the dual ("standard") basis `χ_{α,β}` is then obtained
//! from one LU factorization of the evaluation matrix.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::charsol::{CharSolError, CharacteristicSolution};
use crate::kernel::{ExponentialPolynomial, Operator, RootDecomposition};
use crate::poly;

/// Kronecker-property tolerance for every constructed basis.
pub const BASIS_TOL: f64 = 1e-8;
/// Equilibrated condition numbers above this raise an ill-conditioning flag.
pub const ILL_CONDITIONED: f64 = 1e12;
/// Equilibrated condition numbers above this make the system singular.
pub const SINGULAR_CONDITION: f64 = 1e14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HermiteError {
    #[error("interpolation system has no nodes")]
    EmptySystem,
    #[error("nodes must be strictly increasing (position {0})")]
    NonIncreasingNodes(usize),
    #[error("node {0} has multiplicity zero")]
    NonPositiveMultiplicity(usize),
    #[error("{nodes} nodes but {mults} multiplicities")]
    LengthMismatch { nodes: usize, mults: usize },
    #[error("node {0} is not finite")]
    NonFiniteNode(usize),
    #[error("system dimension {system} differs from operator order {operator}")]
    DimensionMismatch { system: usize, operator: usize },
    #[error("expected {expected} fundamental solutions, got {found}")]
    FundamentalCount { expected: usize, found: usize },
    #[error(
        "interpolation system is degenerate for this kernel (W = {wronskian:.3e}, condition {condition:.3e})"
    )]
    SingularSystem {
        wronskian: Complex64,
        condition: f64,
    },
    #[error("missing data for slots {0:?}")]
    MissingData(Vec<Slot>),
    #[error("data given for slots outside the system: {0:?}")]
    UnknownSlots(Vec<Slot>),
    #[error("degenerate parameters: {0}")]
    DegenerateParameters(String),
    #[error(transparent)]
    CharSol(#[from] CharSolError),
}

/// Zero-based `(node index, derivative order)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Slot {
    pub node: usize,
    pub deriv: usize,
}

impl Slot {
    pub fn new(node: usize, deriv: usize) -> Self {
        Self { node, deriv }
    }
}

/// Strictly increasing nodes with positive multiplicities.
#[derive(Debug, Clone, PartialEq)]
pub struct InterpolationSystem {
    nodes: Vec<f64>,
    mults: Vec<usize>,
}

impl InterpolationSystem {
    pub fn new(nodes: Vec<f64>, mults: Vec<usize>) -> Result<Self, HermiteError> {
        if nodes.len() != mults.len() {
            return Err(HermiteError::LengthMismatch {
                nodes: nodes.len(),
                mults: mults.len(),
            });
        }
        if nodes.is_empty() {
            return Err(HermiteError::EmptySystem);
        }
        if let Some(i) = nodes.iter().position(|a| !a.is_finite()) {
            return Err(HermiteError::NonFiniteNode(i));
        }
        if let Some(i) = mults.iter().position(|&m| m == 0) {
            return Err(HermiteError::NonPositiveMultiplicity(i));
        }
        if let Some(i) = nodes.windows(2).position(|w| !(w[0] < w[1])) {
            return Err(HermiteError::NonIncreasingNodes(i + 1));
        }
        Ok(Self { nodes, mults })
    }

    /// Single node carrying derivatives `0..n`.
    pub fn taylor(a: f64, n: usize) -> Result<Self, HermiteError> {
        Self::new(vec![a], vec![n])
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn multiplicities(&self) -> &[usize] {
        &self.mults
    }

    pub fn dimension(&self) -> usize {
        self.mults.iter().sum()
    }

    /// `max(n_i) - 1`.
    pub fn order(&self) -> usize {
        self.mults.iter().copied().max().unwrap_or(1) - 1
    }

    /// Node-major, derivative-minor enumeration of all slots.
    pub fn slots(&self) -> Vec<Slot> {
        self.mults
            .iter()
            .enumerate()
            .flat_map(|(i, &m)| (0..m).map(move |j| Slot::new(i, j)))
            .collect()
    }

    pub fn slot_index(&self, slot: Slot) -> Option<usize> {
        if slot.node >= self.nodes.len() || slot.deriv >= self.mults[slot.node] {
            return None;
        }
        Some(self.mults[..slot.node].iter().sum::<usize>() + slot.deriv)
    }

    fn center(&self) -> f64 {
        0.5 * (self.nodes[0] + self.nodes[self.nodes.len() - 1])
    }
}

/// Generalized Wronskian of a fundamental system at an interpolation system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wronskian {
    pub determinant: Complex64,
    /// 1-norm condition number of the row-equilibrated evaluation matrix.
    pub condition_estimate: f64,
}

/// `M[(i,j)][k] = ω_k^(j)(a_i)`, rows in slot order. This is the transpose
/// of the determinant layout with functions as rows; the determinant agrees.
fn evaluation_matrix(
    sys: &InterpolationSystem,
    fundamental: &[ExponentialPolynomial],
) -> DMatrix<Complex64> {
    let n = sys.dimension();
    let maxd = sys.order();
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for (k, omega) in fundamental.iter().enumerate() {
        let mut d = omega.clone();
        let mut derivs = Vec::with_capacity(maxd + 1);
        for j in 0..=maxd {
            if j > 0 {
                d = d.derivative(1);
            }
            derivs.push(d.clone());
        }
        for (row, slot) in sys.slots().into_iter().enumerate() {
            m[(row, k)] = derivs[slot.deriv].evaluate(sys.nodes[slot.node]);
        }
    }
    m
}

fn one_norm(m: &DMatrix<Complex64>) -> f64 {
    (0..m.ncols())
        .map(|k| m.column(k).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

struct Factored {
    determinant: Complex64,
    condition: f64,
    inverse: Option<DMatrix<Complex64>>,
}

fn factor(m: DMatrix<Complex64>) -> Factored {
    let determinant = m.clone().lu().determinant();
    let mut scaled = m.clone();
    for mut row in scaled.row_iter_mut() {
        let norm: f64 = row.iter().map(|z| z.norm()).sum();
        if norm > 0.0 {
            row /= Complex64::new(norm, 0.0);
        }
    }
    let inverse = m.lu().try_inverse();
    let condition = match scaled.clone().lu().try_inverse() {
        Some(inv) => one_norm(&scaled) * one_norm(&inv),
        None => f64::INFINITY,
    };
    let condition = if condition.is_finite() {
        condition
    } else {
        f64::INFINITY
    };
    Factored {
        determinant,
        condition,
        inverse,
    }
}

/// Determinant of `(ω_r^(j)(a_i))` for the given fundamental system.
pub fn wronskian(
    sys: &InterpolationSystem,
    fundamental: &[ExponentialPolynomial],
) -> Result<Wronskian, HermiteError> {
    if fundamental.len() != sys.dimension() {
        return Err(HermiteError::FundamentalCount {
            expected: sys.dimension(),
            found: fundamental.len(),
        });
    }
    let f = factor(evaluation_matrix(sys, fundamental));
    Ok(Wronskian {
        determinant: f.determinant,
        condition_estimate: f.condition,
    })
}

/// The dual basis `χ_{α,β}` of `ker(D_c)` for an interpolation system.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardBasis {
    system: InterpolationSystem,
    chis: Vec<ExponentialPolynomial>,
    wronskian: Complex64,
    condition_estimate: f64,
}

impl StandardBasis {
    /// Solves for the basis through the evaluation matrix of the fundamental
    /// system `(t-c)^j exp(λ_i (t-c))`, with `c` the midpoint of the nodes.
    pub fn new(
        op: &Operator,
        rd: &RootDecomposition,
        sys: &InterpolationSystem,
    ) -> Result<Self, HermiteError> {
        check_dimension(op, sys)?;
        let center = sys.center();
        let fundamental: Vec<ExponentialPolynomial> = rd
            .fundamental_system()
            .iter()
            .map(|w| w.translate(-center))
            .collect();
        let f = factor(evaluation_matrix(sys, &fundamental));
        let inverse = match f.inverse {
            Some(inv) if f.condition <= SINGULAR_CONDITION => inv,
            _ => {
                return Err(HermiteError::SingularSystem {
                    wronskian: f.determinant,
                    condition: f.condition,
                })
            }
        };
        // column s of M^{-1} holds the coordinates of χ_s
        let chis = (0..sys.dimension())
            .map(|s| {
                ExponentialPolynomial::linear_combination(
                    fundamental
                        .iter()
                        .enumerate()
                        .map(|(k, w)| (inverse[(k, s)], w)),
                )
            })
            .collect();
        Ok(Self {
            system: sys.clone(),
            chis,
            wronskian: f.determinant,
            condition_estimate: f.condition,
        })
    }

    /// Single-node basis `χ_{1,j}(t) = Σ_i c_{i+j+1} ω_c^(i)(t-a)`, built
    /// without any linear solve.
    pub fn taylor(
        cs: &CharacteristicSolution,
        rd: &RootDecomposition,
        a: f64,
    ) -> Result<Self, HermiteError> {
        let n = cs.operator().order();
        let sys = InterpolationSystem::taylor(a, n)?;
        let fundamental: Vec<ExponentialPolynomial> = rd
            .fundamental_system()
            .iter()
            .map(|w| w.translate(-a))
            .collect();
        let w = wronskian(&sys, &fundamental)?;
        let chis = (0..n).map(|j| cs.taylor_basis_element(j, a)).collect();
        Ok(Self {
            system: sys,
            chis,
            wronskian: w.determinant,
            condition_estimate: w.condition_estimate,
        })
    }

    pub fn system(&self) -> &InterpolationSystem {
        &self.system
    }

    /// Basis elements in slot order.
    pub fn chis(&self) -> &[ExponentialPolynomial] {
        &self.chis
    }

    pub fn chi(&self, slot: Slot) -> Option<&ExponentialPolynomial> {
        self.system.slot_index(slot).map(|i| &self.chis[i])
    }

    /// Wronskian of the fundamental system the basis was solved from.
    pub fn wronskian(&self) -> Complex64 {
        self.wronskian
    }

    pub fn condition_estimate(&self) -> f64 {
        self.condition_estimate
    }

    pub fn is_ill_conditioned(&self) -> bool {
        self.condition_estimate > ILL_CONDITIONED
    }

    /// `max |χ_{α,β}^(j)(a_i) - δ_{i,α} δ_{j,β}|` over all slot pairs.
    pub fn kronecker_deviation(&self) -> f64 {
        kronecker_deviation_of(&self.system, |s, j, t| {
            self.chis[s].derivative(j).evaluate(t)
        })
    }
}

fn check_dimension(op: &Operator, sys: &InterpolationSystem) -> Result<(), HermiteError> {
    if sys.dimension() != op.order() {
        return Err(HermiteError::DimensionMismatch {
            system: sys.dimension(),
            operator: op.order(),
        });
    }
    Ok(())
}

/// Kronecker deviation for any basis given as `eval(slot_index, order, t)`.
pub fn kronecker_deviation_of<F>(sys: &InterpolationSystem, eval: F) -> f64
where
    F: Fn(usize, usize, f64) -> Complex64,
{
    let slots = sys.slots();
    let mut worst: f64 = 0.0;
    for (s, basis_slot) in slots.iter().enumerate() {
        for target in &slots {
            let value = eval(s, target.deriv, sys.nodes()[target.node]);
            let expected = if target == basis_slot { 1.0 } else { 0.0 };
            worst = worst.max((value - expected).norm());
        }
    }
    worst
}

/// `ω = Σ f^(β)(a_α) χ_{α,β}` together with the data it interpolates.
#[derive(Debug, Clone, PartialEq)]
pub struct Interpolant {
    data: Vec<Complex64>,
    ep: ExponentialPolynomial,
}

impl Interpolant {
    pub fn ep(&self) -> &ExponentialPolynomial {
        &self.ep
    }

    /// Data values in slot order.
    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn evaluate(&self, t: f64) -> Complex64 {
        self.ep.evaluate(t)
    }

    /// `max |ω^(j)(a_i) - data(i,j)|`.
    pub fn interpolation_residual(&self, sys: &InterpolationSystem) -> f64 {
        sys.slots()
            .iter()
            .zip(&self.data)
            .map(|(s, d)| (self.ep.derivative(s.deriv).evaluate(sys.nodes()[s.node]) - d).norm())
            .fold(0.0, f64::max)
    }
}

/// Combines the basis with one data value per slot.
pub fn interpolate(
    basis: &StandardBasis,
    data: &BTreeMap<Slot, Complex64>,
) -> Result<Interpolant, HermiteError> {
    let slots = basis.system().slots();
    let missing: Vec<Slot> = slots
        .iter()
        .filter(|s| !data.contains_key(s))
        .copied()
        .collect();
    if !missing.is_empty() {
        return Err(HermiteError::MissingData(missing));
    }
    let unknown: Vec<Slot> = data
        .keys()
        .filter(|s| basis.system().slot_index(**s).is_none())
        .copied()
        .collect();
    if !unknown.is_empty() {
        return Err(HermiteError::UnknownSlots(unknown));
    }
    let values: Vec<Complex64> = slots.iter().map(|s| data[s]).collect();
    Ok(interpolate_values(basis, values))
}

/// As [`interpolate`], with data already in slot order.
pub fn interpolate_values(basis: &StandardBasis, values: Vec<Complex64>) -> Interpolant {
    assert_eq!(values.len(), basis.chis.len(), "one value per slot");
    let ep = ExponentialPolynomial::linear_combination(
        values.iter().zip(&basis.chis).map(|(&v, chi)| (v, chi)),
    );
    Interpolant { data: values, ep }
}

/// Classical Hermite basis polynomials `H_{α,β}` for the operator `f^(n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitePolynomialBasis {
    system: InterpolationSystem,
    polys: Vec<Vec<f64>>,
    node_poly: Vec<f64>,
}

impl HermitePolynomialBasis {
    /// `H_{α,β}(x) = q_α(x)/β! · Σ_{k ≤ n_α-1-β} s_k (x - a_α)^{β+k}` where
    /// `q_α = ∏_{i≠α} (x - a_i)^{n_i}` and `s_k` are the Taylor coefficients
    /// of `1/q_α` at `a_α`.
    pub fn new(sys: &InterpolationSystem) -> Self {
        let nodes = sys.nodes();
        let mults = sys.multiplicities();
        let node_poly = poly::from_roots(
            &nodes
                .iter()
                .zip(mults)
                .map(|(&a, &m)| (a, m))
                .collect::<Vec<_>>(),
        );
        let mut polys = Vec::with_capacity(sys.dimension());
        for (alpha, (&a, &m)) in nodes.iter().zip(mults).enumerate() {
            let others: Vec<(f64, usize)> = nodes
                .iter()
                .zip(mults)
                .enumerate()
                .filter(|&(i, _)| i != alpha)
                .map(|(_, (&x, &k))| (x, k))
                .collect();
            let q = poly::from_roots(&others);
            let s = poly::series_inverse(&poly::taylor_shift(&q, a), m);
            let mut beta_fact = 1.0;
            for beta in 0..m {
                if beta > 0 {
                    beta_fact *= beta as f64;
                }
                let mut sum = Vec::new();
                for (k, &sk) in s.iter().enumerate().take(m - beta) {
                    sum = poly::add(&sum, &poly::scale(&poly::shifted_power(a, beta + k), sk));
                }
                polys.push(poly::scale(&poly::mul(&q, &sum), 1.0 / beta_fact));
            }
        }
        Self {
            system: sys.clone(),
            polys,
            node_poly,
        }
    }

    pub fn system(&self) -> &InterpolationSystem {
        &self.system
    }

    /// Ascending coefficients of `H` in slot order.
    pub fn polynomials(&self) -> &[Vec<f64>] {
        &self.polys
    }

    /// `∏ (x - a_i)^{n_i}`.
    pub fn node_poly(&self) -> &[f64] {
        &self.node_poly
    }

    pub fn eval(&self, slot_index: usize, x: f64) -> f64 {
        poly::eval(&self.polys[slot_index], x)
    }

    pub fn eval_derivative(&self, slot_index: usize, order: usize, x: f64) -> f64 {
        poly::eval_derivative(&self.polys[slot_index], order, x)
    }

    pub fn kronecker_deviation(&self) -> f64 {
        kronecker_deviation_of(&self.system, |s, j, t| {
            Complex64::new(self.eval_derivative(s, j, t), 0.0)
        })
    }
}
