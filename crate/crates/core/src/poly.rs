//! Dense univariate polynomials stored as ascending coefficient vectors.
//!
//! `p[k]` is the coefficient of `x^k`. The helpers are generic over any
//! copyable numeric field so the same code serves real Hermite polynomials
//! and complex characteristic polynomials.

use num_traits::Num;

/// Horner evaluation.
pub fn eval<T: Copy + Num>(p: &[T], x: T) -> T {
    p.iter().rev().fold(T::zero(), |acc, &c| acc * x + c)
}

pub fn mul<T: Copy + Num>(a: &[T], b: &[T]) -> Vec<T> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![T::zero(); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = out[i + j] + x * y;
        }
    }
    out
}

pub fn add<T: Copy + Num>(a: &[T], b: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); a.len().max(b.len())];
    for (i, &x) in a.iter().enumerate() {
        out[i] = x;
    }
    for (i, &y) in b.iter().enumerate() {
        out[i] = out[i] + y;
    }
    out
}

pub fn scale<T: Copy + Num>(p: &[T], s: T) -> Vec<T> {
    p.iter().map(|&c| c * s).collect()
}

/// First derivative. The derivative of a constant is the empty polynomial.
pub fn derivative<T: Copy + Num>(p: &[T]) -> Vec<T> {
    let mut k = T::zero();
    p.iter()
        .skip(1)
        .map(|&c| {
            k = k + T::one();
            c * k
        })
        .collect()
}

/// `order`-th derivative evaluated at `x`.
pub fn eval_derivative<T: Copy + Num>(p: &[T], order: usize, x: T) -> T {
    let mut q = p.to_vec();
    for _ in 0..order {
        q = derivative(&q);
    }
    eval(&q, x)
}

/// Coefficients of `s ↦ p(center + s)`, by repeated synthetic division.
pub fn taylor_shift<T: Copy + Num>(p: &[T], center: T) -> Vec<T> {
    let mut q = p.to_vec();
    let n = q.len();
    for i in 0..n {
        for k in (i..n - 1).rev() {
            q[k] = q[k] + center * q[k + 1];
        }
    }
    q
}

/// The first `len` coefficients of the power series `1/q(s)`.
///
/// The caller guarantees `q[0] != 0`.
pub fn series_inverse<T: Copy + Num>(q: &[T], len: usize) -> Vec<T> {
    let mut inv = Vec::with_capacity(len);
    if len == 0 {
        return inv;
    }
    let q0 = q[0];
    inv.push(T::one() / q0);
    for r in 1..len {
        let mut acc = T::zero();
        for k in 1..=r.min(q.len().saturating_sub(1)) {
            acc = acc + q[k] * inv[r - k];
        }
        inv.push(T::zero() - acc / q0);
    }
    inv
}

/// Monic `∏ (x - r)^m` over the given roots.
pub fn from_roots<T: Copy + Num>(roots: &[(T, usize)]) -> Vec<T> {
    let mut p = vec![T::one()];
    for &(r, m) in roots {
        for _ in 0..m {
            p = mul(&p, &[T::zero() - r, T::one()]);
        }
    }
    p
}

/// `(x - a)^k` expanded in powers of `x`.
pub fn shifted_power<T: Copy + Num>(a: T, k: usize) -> Vec<T> {
    let mut p = vec![T::one()];
    for _ in 0..k {
        p = mul(&p, &[T::zero() - a, T::one()]);
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn horner_and_product() {
        let p = mul(&[1.0, 1.0], &[-2.0, 1.0]);
        assert_eq!(p, vec![-2.0, -1.0, 1.0]);
        assert_eq!(eval(&p, 3.0), 4.0);
        assert_eq!(eval::<f64>(&[], 3.0), 0.0);
    }

    #[test]
    fn shift_matches_binomial_expansion() {
        // t -> t + 2
        assert_eq!(taylor_shift(&[0.0, 1.0], 2.0), vec![2.0, 1.0]);
        // (t+1)^2 = t^2 + 2t + 1
        assert_eq!(taylor_shift(&[0.0, 0.0, 1.0], 1.0), vec![1.0, 2.0, 1.0]);
    }

    #[test]
    fn series_inverse_of_geometric() {
        // 1/(1 - s) = 1 + s + s^2 + ...
        let inv = series_inverse(&[1.0, -1.0], 5);
        assert_eq!(inv, vec![1.0; 5]);
        // 1/(2 + s^2) = 1/2 - s^2/4 + ...
        let inv = series_inverse(&[2.0, 0.0, 1.0], 4);
        assert_eq!(inv, vec![0.5, 0.0, -0.25, 0.0]);
    }

    #[test]
    fn roots_expand_to_monic_polynomial() {
        let p = from_roots(&[(1.0, 1), (2.0, 1)]);
        assert_eq!(p, vec![2.0, -3.0, 1.0]);
        let i = Complex64::i();
        let p = from_roots(&[(i, 1), (-i, 1)]);
        assert!((p[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(p[1].norm() < 1e-15);
        assert_eq!(shifted_power(1.0, 2), vec![1.0, -2.0, 1.0]);
    }

    #[test]
    fn derivatives() {
        assert_eq!(derivative(&[5.0, 3.0, 2.0]), vec![3.0, 4.0]);
        assert!(derivative(&[5.0]).is_empty());
        assert_eq!(eval_derivative(&[0.0, 0.0, 0.0, 1.0], 2, 2.0), 12.0);
    }
}
