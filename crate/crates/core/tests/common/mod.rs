#![allow(dead_code)]

use expinterp::charsol::CharacteristicSolution;
use expinterp::hermite::{InterpolationSystem, StandardBasis};
use expinterp::kernel::{ExponentialPolynomial, Operator, RootDecomposition, RootMode};
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub struct Kernel {
    pub op: Operator,
    pub rd: RootDecomposition,
    pub cs: CharacteristicSolution,
}

impl Kernel {
    pub fn from_coeffs(c: &[f64]) -> Self {
        let op = Operator::from_real(c).unwrap();
        let rd = RootDecomposition::find(&op, RootMode::Companion).unwrap();
        let cs = CharacteristicSolution::new(&op, &rd).unwrap();
        Self { op, rd, cs }
    }

    pub fn basis(&self, sys: &InterpolationSystem) -> Option<StandardBasis> {
        StandardBasis::new(&self.op, &self.rd, sys).ok()
    }
}

fn separated(roots: &[Complex64], z: Complex64, sep: f64) -> bool {
    roots.iter().all(|r| (r - z).norm() >= sep)
}

/// Distinct roots of total multiplicity `n`, pairwise at least `sep` apart,
/// inside the disc of the given radius. Real operators get conjugate pairs.
pub fn random_roots(
    rng: &mut StdRng,
    n: usize,
    sep: f64,
    radius: f64,
    real: bool,
    max_mult: usize,
) -> Vec<(Complex64, usize)> {
    loop {
        let mut out: Vec<(Complex64, usize)> = Vec::new();
        let mut left = n;
        let mut tries = 0;
        while left > 0 && tries < 1000 {
            tries += 1;
            let m = rng.random_range(1..=max_mult.min(left));
            let pair = real && left >= 2 * m && rng.random_bool(0.5);
            let z = if pair {
                Complex64::new(
                    rng.random_range(-radius..radius),
                    rng.random_range(sep..radius),
                )
            } else if real {
                Complex64::new(rng.random_range(-radius..radius), 0.0)
            } else {
                Complex64::new(
                    rng.random_range(-radius..radius),
                    rng.random_range(-radius..radius),
                )
            };
            let taken: Vec<Complex64> = out.iter().map(|r| r.0).collect();
            if !separated(&taken, z, sep) || (pair && !separated(&taken, z.conj(), sep)) {
                continue;
            }
            out.push((z, m));
            left -= m;
            if pair {
                out.push((z.conj(), m));
                left -= m;
            }
        }
        if left == 0 {
            return out;
        }
    }
}

/// Random operator of order `n`; simple roots go through the companion
/// matrix, repeated roots are supplied explicitly.
pub fn random_kernel(
    rng: &mut StdRng,
    n: usize,
    sep: f64,
    radius: f64,
    real: bool,
    max_mult: usize,
) -> Kernel {
    let roots = random_roots(rng, n, sep, radius, real, max_mult);
    let op = Operator::from_roots(&roots).unwrap();
    let mode = if roots.iter().all(|r| r.1 == 1) {
        RootMode::Companion
    } else {
        RootMode::UserSupplied(roots)
    };
    let rd = RootDecomposition::find(&op, mode).unwrap();
    let cs = CharacteristicSolution::new(&op, &rd).unwrap();
    Kernel { op, rd, cs }
}

/// `count` sorted nodes in `[lo, hi]`, pairwise at least `sep` apart.
pub fn random_nodes(rng: &mut StdRng, count: usize, lo: f64, hi: f64, sep: f64) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..count).map(|_| rng.random_range(lo..hi)).collect();
        v.sort_by(f64::total_cmp);
        if v.windows(2).all(|w| w[1] - w[0] >= sep) {
            return v;
        }
    }
}

/// Random system of total dimension `n` on `[lo, hi]`.
pub fn random_system(rng: &mut StdRng, n: usize, lo: f64, hi: f64) -> InterpolationSystem {
    let nodes_count = rng.random_range(1..=n);
    let mut mults = vec![1; nodes_count];
    for _ in nodes_count..n {
        let i = rng.random_range(0..nodes_count);
        mults[i] += 1;
    }
    let nodes = random_nodes(rng, nodes_count, lo, hi, 0.2);
    InterpolationSystem::new(nodes, mults).unwrap()
}

/// Random linear combination of the fundamental system.
pub fn random_kernel_element(rng: &mut StdRng, k: &Kernel) -> ExponentialPolynomial {
    let fs = k.rd.fundamental_system();
    let weights: Vec<Complex64> = fs
        .iter()
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    ExponentialPolynomial::linear_combination(weights.iter().copied().zip(fs.iter()))
}

/// `max_k Σ |a_j|·|d^k/dt^k (t^j e^{λt})|_{t=0}|` over `k < 2n`: the size of
/// the terms that cancel when `ω_c^(k)(0)` is summed.
pub fn cancellation_scale(k: &Kernel) -> f64 {
    let n = k.op.order();
    (0..2 * n)
        .map(|order| {
            k.cs.ep()
                .blocks()
                .iter()
                .map(|b| {
                    b.coeffs
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j <= order)
                        .map(|(j, a)| {
                            let falling: f64 =
                                ((order - j + 1)..=order).map(|x| x as f64).product();
                            a.norm() * falling * b.lambda.norm().powi((order - j) as i32)
                        })
                        .sum::<f64>()
                })
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}
