//! Constant-coefficient differential operators and the algebra of their
//! kernels.
//!
//! An operator `D_c f = c_n f^(n) + ... + c_1 f' + c_0 f` is stored through its
//! monic coefficient vector, which doubles as the ascending coefficient vector
//! of the characteristic polynomial. Kernel elements are exponential
//! polynomials `Σ p_i(t) exp(λ_i t)`; differentiation, translation and
//! operator application act on the coefficient blocks without any sampling.

use std::cmp::Ordering;

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;
use thiserror::Error;

use crate::poly;

/// Relative radius used to merge companion eigenvalues into one root.
pub const CLUSTER_TOL: f64 = 1e-7;
/// Largest operator order accepted by the companion-matrix root finder.
pub const MAX_COMPANION_DEGREE: usize = 32;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("operator needs at least two coefficients, got {0}")]
    TooShort(usize),
    #[error("leading operator coefficient is zero")]
    ZeroLeadingCoefficient,
    #[error("non-finite operator coefficient at index {0}")]
    NonFiniteCoefficient(usize),
    #[error(
        "roots {first} and {second} are {distance:.3e} apart, too close to tell whether they \
         coincide; supply the roots explicitly"
    )]
    ClusterAmbiguity {
        first: Complex64,
        second: Complex64,
        distance: f64,
    },
    #[error("root product deviates from the characteristic polynomial by {deviation:.3e} (tolerance {tolerance:.3e})")]
    ReconstructionFailure { deviation: f64, tolerance: f64 },
    #[error("invalid root list: {0}")]
    InvalidRoots(String),
    #[error("companion root finding supports order <= {MAX_COMPANION_DEGREE}, got {0}")]
    DegreeTooLarge(usize),
    #[error("value {value} has imaginary part above {tolerance:.3e}")]
    RealificationFailure { value: Complex64, tolerance: f64 },
}

/// `D_c` normalized so that `c_n = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    coeffs: Vec<Complex64>,
    is_real: bool,
}

impl Operator {
    /// Builds the operator from raw coefficients `c_0..c_n`, dividing by `c_n`.
    pub fn new(raw: &[Complex64]) -> Result<Self, KernelError> {
        if raw.len() < 2 {
            return Err(KernelError::TooShort(raw.len()));
        }
        if let Some(k) = raw
            .iter()
            .position(|c| !(c.re.is_finite() && c.im.is_finite()))
        {
            return Err(KernelError::NonFiniteCoefficient(k));
        }
        let lead = raw[raw.len() - 1];
        if lead == Complex64::new(0.0, 0.0) {
            return Err(KernelError::ZeroLeadingCoefficient);
        }
        let mut coeffs: Vec<Complex64> = raw.iter().map(|&c| c / lead).collect();
        let n = coeffs.len() - 1;
        coeffs[n] = Complex64::new(1.0, 0.0);
        let is_real = coeffs.iter().all(|c| c.im == 0.0);
        Ok(Self { coeffs, is_real })
    }

    pub fn from_real(raw: &[f64]) -> Result<Self, KernelError> {
        let raw: Vec<Complex64> = raw.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::new(&raw)
    }

    /// `D_c f = f^(n)`.
    pub fn pure_derivative(n: usize) -> Self {
        assert!(n >= 1, "operator order must be positive");
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n + 1];
        coeffs[n] = Complex64::new(1.0, 0.0);
        Self {
            coeffs,
            is_real: true,
        }
    }

    /// Monic operator whose characteristic polynomial is `∏ (λ - λ_i)^{m_i}`.
    /// Coefficients are snapped to real when the roots are closed under
    /// conjugation.
    pub fn from_roots(roots: &[(Complex64, usize)]) -> Result<Self, KernelError> {
        let mut c = poly::from_roots(roots);
        let conjugate_closed = roots
            .iter()
            .all(|&(z, m)| roots.iter().any(|&(w, k)| w == z.conj() && k == m));
        if conjugate_closed {
            c.iter_mut().for_each(|z| z.im = 0.0);
        }
        Self::new(&c)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `c_0..c_n`, also the ascending coefficients of `P_c`.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// `c_k`, zero outside `0..=n`.
    pub fn coeff(&self, k: usize) -> Complex64 {
        self.coeffs
            .get(k)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn is_real(&self) -> bool {
        self.is_real
    }

    pub fn characteristic(&self, lambda: Complex64) -> Complex64 {
        poly::eval(&self.coeffs, lambda)
    }

    pub fn max_coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// `Σ c_k f^(k)` from the derivative values `f, f', ..., f^(n)`.
    pub fn apply_to_derivatives(&self, derivs: &[Complex64]) -> Complex64 {
        assert!(
            derivs.len() > self.order(),
            "need derivatives up to order n"
        );
        self.coeffs.iter().zip(derivs).map(|(&c, &d)| c * d).sum()
    }

    /// Symbolic `D_c ω`; `ω` need not lie in the kernel.
    pub fn apply(&self, ep: &ExponentialPolynomial) -> ExponentialPolynomial {
        let mut acc = ExponentialPolynomial::zero();
        let mut deriv = ep.clone();
        for (k, &c) in self.coeffs.iter().enumerate() {
            if k > 0 {
                deriv = deriv.derivative(1);
            }
            if c != Complex64::new(0.0, 0.0) {
                acc = acc.add(&deriv.scale(c));
            }
        }
        acc
    }

    /// Largest coefficient of `D_c ω` together with the tolerance it must
    /// stay under for `ω` to count as a kernel element.
    pub fn kernel_residual(&self, ep: &ExponentialPolynomial) -> (f64, f64) {
        let residual = self.apply(ep).max_coeff_norm();
        let mut scale: f64 = 0.0;
        let mut deriv = ep.clone();
        for (k, c) in self.coeffs.iter().enumerate() {
            if k > 0 {
                deriv = deriv.derivative(1);
            }
            scale = scale.max(c.norm() * deriv.max_coeff_norm());
        }
        (residual, 1e-9 * scale)
    }

    pub fn annihilates(&self, ep: &ExponentialPolynomial) -> bool {
        let (res, tol) = self.kernel_residual(ep);
        res <= tol
    }
}

/// How roots of the characteristic polynomial are obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum RootMode {
    /// Eigenvalues of the companion matrix, clustered into multiple roots.
    Companion,
    /// Distinct roots with multiplicities, checked against `P_c`.
    UserSupplied(Vec<(Complex64, usize)>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub value: Complex64,
    pub multiplicity: usize,
}

/// Pairwise distinct roots `λ_i` of `P_c` with multiplicities `m_i` and the
/// cofactors `P_i = ∏_{l≠i} (λ - λ_l)^{m_l}`.
#[derive(Debug, Clone, PartialEq)]
pub struct RootDecomposition {
    roots: Vec<Root>,
    cofactors: Vec<Vec<Complex64>>,
}

impl RootDecomposition {
    pub fn find(op: &Operator, mode: RootMode) -> Result<Self, KernelError> {
        let roots = match mode {
            RootMode::Companion => companion_roots(op)?,
            RootMode::UserSupplied(list) => validate_user_roots(op, list)?,
        };
        Self::assemble(op, roots)
    }

    fn assemble(op: &Operator, mut roots: Vec<Root>) -> Result<Self, KernelError> {
        roots.sort_by(|a, b| cmp_complex(a.value, b.value));
        let pairs: Vec<(Complex64, usize)> =
            roots.iter().map(|r| (r.value, r.multiplicity)).collect();
        let product = poly::from_roots(&pairs);
        let deviation = product
            .iter()
            .zip(op.coeffs())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        let tolerance = 1e-9 * (1.0 + op.max_coeff_norm());
        if product.len() != op.coeffs().len() || !(deviation <= tolerance) {
            return Err(KernelError::ReconstructionFailure {
                deviation,
                tolerance,
            });
        }
        let cofactors = (0..pairs.len())
            .map(|i| {
                let others: Vec<(Complex64, usize)> = pairs
                    .iter()
                    .enumerate()
                    .filter(|&(l, _)| l != i)
                    .map(|(_, &p)| p)
                    .collect();
                poly::from_roots(&others)
            })
            .collect();
        Ok(Self { roots, cofactors })
    }

    pub fn roots(&self) -> &[Root] {
        &self.roots
    }

    pub fn cofactors(&self) -> &[Vec<Complex64>] {
        &self.cofactors
    }

    pub fn order(&self) -> usize {
        self.roots.iter().map(|r| r.multiplicity).sum()
    }

    /// `t^j exp(λ_i t)`, root-major with ascending `j`.
    pub fn fundamental_system(&self) -> Vec<ExponentialPolynomial> {
        self.roots
            .iter()
            .flat_map(|r| {
                (0..r.multiplicity).map(move |j| ExponentialPolynomial::monomial(r.value, j))
            })
            .collect()
    }
}

fn cluster_radius(lambda: Complex64) -> f64 {
    CLUSTER_TOL * lambda.norm().max(1.0)
}

fn companion_roots(op: &Operator) -> Result<Vec<Root>, KernelError> {
    let n = op.order();
    if n > MAX_COMPANION_DEGREE {
        return Err(KernelError::DegreeTooLarge(n));
    }
    let c = op.coeffs();
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..n {
        m[(i, n - 1)] = -c[i];
    }
    let eigen: Vec<Complex64> = if c[..n].iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
        // nilpotent companion: skip the iteration entirely
        vec![Complex64::new(0.0, 0.0); n]
    } else {
        Schur::new(m)
            .eigenvalues()
            .ok_or_else(|| KernelError::InvalidRoots("Schur iteration did not converge".into()))?
            .iter()
            .copied()
            .collect()
    };

    // greedy clustering in a deterministic order
    let mut sorted = eigen;
    sorted.sort_by(|a, b| cmp_complex(*a, *b));
    let mut clusters: Vec<(Complex64, Vec<Complex64>)> = Vec::new();
    for z in sorted {
        match clusters
            .iter_mut()
            .find(|(center, _)| (*center - z).norm() < cluster_radius(*center))
        {
            Some((center, members)) => {
                members.push(z);
                *center = members.iter().sum::<Complex64>() / members.len() as f64;
            }
            None => clusters.push((z, vec![z])),
        }
    }
    for i in 0..clusters.len() {
        for j in i + 1..clusters.len() {
            let (a, b) = (clusters[i].0, clusters[j].0);
            let distance = (a - b).norm();
            let radius = cluster_radius(a).max(cluster_radius(b));
            if distance < 10.0 * radius {
                return Err(KernelError::ClusterAmbiguity {
                    first: a,
                    second: b,
                    distance,
                });
            }
        }
    }

    let roots = clusters
        .into_iter()
        .map(|(center, members)| {
            let multiplicity = members.len();
            let mut value = center;
            if multiplicity == 1 {
                value = newton_polish(op, value);
            }
            if op.is_real() && value.im.abs() < cluster_radius(value) {
                value.im = 0.0;
            }
            Root {
                value,
                multiplicity,
            }
        })
        .collect();
    Ok(roots)
}

fn newton_polish(op: &Operator, mut z: Complex64) -> Complex64 {
    let dp = poly::derivative(op.coeffs());
    let mut best = op.characteristic(z).norm();
    for _ in 0..3 {
        let d = poly::eval(&dp, z);
        if d == Complex64::new(0.0, 0.0) {
            break;
        }
        let next = z - op.characteristic(z) / d;
        let val = op.characteristic(next).norm();
        if !(val < best) {
            break;
        }
        best = val;
        z = next;
    }
    z
}

fn validate_user_roots(
    op: &Operator,
    list: Vec<(Complex64, usize)>,
) -> Result<Vec<Root>, KernelError> {
    if list.iter().any(|&(_, m)| m == 0) {
        return Err(KernelError::InvalidRoots(
            "multiplicities must be positive".into(),
        ));
    }
    let total: usize = list.iter().map(|&(_, m)| m).sum();
    if total != op.order() {
        return Err(KernelError::InvalidRoots(format!(
            "multiplicities sum to {total}, operator order is {}",
            op.order()
        )));
    }
    for (i, &(a, _)) in list.iter().enumerate() {
        for &(b, _) in &list[i + 1..] {
            if (a - b).norm() <= cluster_radius(a).max(cluster_radius(b)) {
                return Err(KernelError::InvalidRoots(format!(
                    "roots {a} and {b} are not distinct"
                )));
            }
        }
    }
    Ok(list
        .into_iter()
        .map(|(value, multiplicity)| Root {
            value,
            multiplicity,
        })
        .collect())
}

pub(crate) fn cmp_complex(a: Complex64, b: Complex64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// One `p(t) exp(λ t)` term; `coeffs[j]` multiplies `t^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpBlock {
    pub lambda: Complex64,
    pub coeffs: Vec<Complex64>,
}

/// `t ↦ Σ_i p_i(t) exp(λ_i t)` in canonical form: blocks sorted by
/// `(Re λ, Im λ)`, equal exponents merged, no empty blocks.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExponentialPolynomial {
    blocks: Vec<ExpBlock>,
}

impl ExponentialPolynomial {
    pub fn new(blocks: Vec<(Complex64, Vec<Complex64>)>) -> Self {
        let mut raw: Vec<ExpBlock> = blocks
            .into_iter()
            .map(|(lambda, coeffs)| ExpBlock { lambda, coeffs })
            .collect();
        raw.sort_by(|a, b| cmp_complex(a.lambda, b.lambda));
        let mut merged: Vec<ExpBlock> = Vec::with_capacity(raw.len());
        for block in raw {
            match merged.last_mut() {
                Some(last) if last.lambda == block.lambda => {
                    last.coeffs = poly::add(&last.coeffs, &block.coeffs);
                }
                _ => merged.push(block),
            }
        }
        for block in &mut merged {
            while block.coeffs.last() == Some(&Complex64::new(0.0, 0.0)) {
                block.coeffs.pop();
            }
        }
        merged.retain(|b| !b.coeffs.is_empty());
        Self { blocks: merged }
    }

    /// Real-coefficient convenience constructor.
    pub fn from_real_blocks(blocks: &[(f64, &[f64])]) -> Self {
        Self::new(
            blocks
                .iter()
                .map(|&(l, p)| {
                    (
                        Complex64::new(l, 0.0),
                        p.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
                    )
                })
                .collect(),
        )
    }

    pub fn zero() -> Self {
        Self { blocks: Vec::new() }
    }

    /// `t^degree exp(λ t)`.
    pub fn monomial(lambda: Complex64, degree: usize) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); degree + 1];
        coeffs[degree] = Complex64::new(1.0, 0.0);
        Self {
            blocks: vec![ExpBlock { lambda, coeffs }],
        }
    }

    pub fn blocks(&self) -> &[ExpBlock] {
        &self.blocks
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn max_coeff_norm(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| b.coeffs.iter())
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    pub fn evaluate(&self, t: f64) -> Complex64 {
        let tc = Complex64::new(t, 0.0);
        self.blocks
            .iter()
            .map(|b| poly::eval(&b.coeffs, tc) * (b.lambda * t).exp())
            .sum()
    }

    /// Value as a real number; fails when the imaginary part is not
    /// negligible relative to the magnitude.
    pub fn evaluate_real(&self, t: f64) -> Result<f64, KernelError> {
        realify(self.evaluate(t))
    }

    /// `order`-th derivative via `p ↦ p' + λ p` per block.
    pub fn derivative(&self, order: usize) -> Self {
        let mut blocks = self.blocks.clone();
        for _ in 0..order {
            for b in &mut blocks {
                let p = &b.coeffs;
                b.coeffs = (0..p.len())
                    .map(|j| {
                        let next = p
                            .get(j + 1)
                            .map(|&c| c * (j + 1) as f64)
                            .unwrap_or(Complex64::new(0.0, 0.0));
                        next + b.lambda * p[j]
                    })
                    .collect();
            }
        }
        Self::new(blocks.into_iter().map(|b| (b.lambda, b.coeffs)).collect())
    }

    /// `t ↦ ω(t + a)`.
    pub fn translate(&self, a: f64) -> Self {
        if a == 0.0 {
            return self.clone();
        }
        Self::new(
            self.blocks
                .iter()
                .map(|b| {
                    let factor = (b.lambda * a).exp();
                    let shifted = poly::taylor_shift(&b.coeffs, Complex64::new(a, 0.0));
                    (b.lambda, poly::scale(&shifted, factor))
                })
                .collect(),
        )
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::new(
            self.blocks
                .iter()
                .map(|b| (b.lambda, poly::scale(&b.coeffs, s)))
                .collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(
            self.blocks
                .iter()
                .chain(other.blocks.iter())
                .map(|b| (b.lambda, b.coeffs.clone()))
                .collect(),
        )
    }

    /// `Σ w_k ω_k`.
    pub fn linear_combination<'a, I>(terms: I) -> Self
    where
        I: IntoIterator<Item = (Complex64, &'a ExponentialPolynomial)>,
    {
        Self::new(
            terms
                .into_iter()
                .flat_map(|(w, ep)| {
                    ep.blocks
                        .iter()
                        .map(move |b| (b.lambda, poly::scale(&b.coeffs, w)))
                })
                .collect(),
        )
    }
}

pub fn realify(value: Complex64) -> Result<f64, KernelError> {
    let tolerance = 1e-9 * (1.0 + value.norm());
    if value.im.abs() <= tolerance {
        Ok(value.re)
    } else {
        Err(KernelError::RealificationFailure { value, tolerance })
    }
}
