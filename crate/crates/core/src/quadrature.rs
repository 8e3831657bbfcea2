//! Adaptive Gauss–Legendre quadrature for complex-valued integrands.
//!
//! Each panel is integrated with the 15-point rule; a panel is accepted when
//! the 15-point value and the sum over its two halves agree to within the
//! panel's share of the tolerance. The reported error estimate is the sum of
//! those discrepancies plus a floating-point rounding floor.

use std::sync::OnceLock;

use num_complex::Complex64;

pub const GAUSS_POINTS: usize = 15;
pub const MAX_DEPTH: usize = 40;
/// Integrand evaluations allowed per integral before refinement stops.
pub const MAX_EVALUATIONS: usize = 1_500_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: Complex64,
    pub error_estimate: f64,
    /// False when some panel hit [`MAX_DEPTH`] or the evaluation budget
    /// before meeting its tolerance.
    pub converged: bool,
    pub evaluations: usize,
}

impl QuadratureResult {
    fn zero() -> Self {
        Self {
            value: Complex64::new(0.0, 0.0),
            error_estimate: 0.0,
            converged: true,
            evaluations: 0,
        }
    }
}

/// Nodes on `[-1, 1]` and weights of the `n`-point Gauss–Legendre rule,
/// found by Newton iteration on the Legendre polynomial.
pub fn gauss_legendre_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn gl15() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre_rule(GAUSS_POINTS))
}

struct Panel {
    value: Complex64,
    abs_value: f64,
}

fn panel<F, E>(f: &mut F, a: f64, b: f64, evals: &mut usize) -> Result<Panel, E>
where
    F: FnMut(f64) -> Result<Complex64, E>,
{
    let (nodes, weights) = gl15();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut value = Complex64::new(0.0, 0.0);
    let mut abs_value = 0.0;
    for (x, w) in nodes.iter().zip(weights) {
        let y = f(mid + half * x)?;
        value += y * *w;
        abs_value += y.norm() * *w;
    }
    *evals += GAUSS_POINTS;
    Ok(Panel {
        value: value * half,
        abs_value: abs_value * half.abs(),
    })
}

struct Accumulator {
    value: Complex64,
    error: f64,
    abs_value: f64,
    converged: bool,
    evals: usize,
}

fn refine<F, E>(
    f: &mut F,
    a: f64,
    b: f64,
    whole: Panel,
    tol: f64,
    depth: usize,
    acc: &mut Accumulator,
) -> Result<(), E>
where
    F: FnMut(f64) -> Result<Complex64, E>,
{
    let mid = 0.5 * (a + b);
    let left = panel(f, a, mid, &mut acc.evals)?;
    let right = panel(f, mid, b, &mut acc.evals)?;
    let sum = left.value + right.value;
    let err = (sum - whole.value).norm();
    let floor = 50.0 * f64::EPSILON * (left.abs_value + right.abs_value);
    let within = err <= tol.max(floor);
    let exhausted = depth >= MAX_DEPTH || acc.evals >= MAX_EVALUATIONS;
    if within || exhausted || mid == a || mid == b {
        acc.converged &= within;
        acc.value += sum;
        acc.error += err;
        acc.abs_value += left.abs_value + right.abs_value;
        return Ok(());
    }
    refine(f, a, mid, left, 0.5 * tol, depth + 1, acc)?;
    refine(f, mid, b, right, 0.5 * tol, depth + 1, acc)
}

/// Signed integral `∫_a^b f(t) dt`, accurate to roughly
/// `max(tol, tol·|I|)`.
pub fn integrate<F, E>(mut f: F, a: f64, b: f64, tol: f64) -> Result<QuadratureResult, E>
where
    F: FnMut(f64) -> Result<Complex64, E>,
{
    if a == b {
        return Ok(QuadratureResult::zero());
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut acc = Accumulator {
        value: Complex64::new(0.0, 0.0),
        error: 0.0,
        abs_value: 0.0,
        converged: true,
        evals: 0,
    };
    let whole = panel(&mut f, lo, hi, &mut acc.evals)?;
    let mid = 0.5 * (lo + hi);
    let halves = panel(&mut f, lo, mid, &mut acc.evals)?.value
        + panel(&mut f, mid, hi, &mut acc.evals)?.value;
    let scale = whole.value.norm().min(halves.norm());
    let target = if scale.is_finite() {
        tol.max(tol * scale)
    } else {
        tol
    };
    refine(&mut f, lo, hi, whole, target, 0, &mut acc)?;
    Ok(QuadratureResult {
        value: acc.value * sign,
        error_estimate: acc.error + 50.0 * f64::EPSILON * acc.abs_value,
        converged: acc.converged,
        evaluations: acc.evals,
    })
}

/// Infallible convenience wrapper around [`integrate`].
pub fn integrate_simple<F>(mut f: F, a: f64, b: f64, tol: f64) -> QuadratureResult
where
    F: FnMut(f64) -> Complex64,
{
    integrate::<_, std::convert::Infallible>(|t| Ok(f(t)), a, b, tol).unwrap_or_else(|e| match e {})
}

/// Composite fixed rule with `panels` equal 15-point panels.
pub fn composite_gauss_legendre<F>(mut f: F, a: f64, b: f64, panels: usize) -> Complex64
where
    F: FnMut(f64) -> Complex64,
{
    let h = (b - a) / panels as f64;
    let mut evals = 0;
    (0..panels)
        .map(|k| {
            let lo = a + h * k as f64;
            let hi = if k + 1 == panels { b } else { lo + h };
            panel::<_, std::convert::Infallible>(&mut |t| Ok(f(t)), lo, hi, &mut evals)
                .unwrap_or_else(|e| match e {})
                .value
        })
        .sum()
}
