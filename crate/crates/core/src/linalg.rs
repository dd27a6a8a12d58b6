//! Small dense LU factorization, generic over the scalar type.
//!
//! The systems here are tiny (an influence matrix of a few dozen panels, a
//! beam stiffness of a few dozen DOFs) so a row-major `Vec` with partial
//! pivoting is all that is needed. Factor once, solve many right-hand sides.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct Lu<T> {
    n: usize,
    lu: Vec<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> Lu<T> {
    /// Factor a row-major `n × n` matrix.
    pub fn factor(n: usize, mut a: Vec<T>, what: &'static str) -> Result<Self> {
        assert_eq!(a.len(), n * n);
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.value().abs()));
        let tiny = scale * 1e-14;
        for k in 0..n {
            let mut p = k;
            let mut best = a[k * n + k].value().abs();
            for i in (k + 1)..n {
                let v = a[i * n + k].value().abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > tiny) {
                return Err(Error::Singular(what));
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = a[k * n + k];
            for i in (k + 1)..n {
                let f = a[i * n + k] / pivot;
                a[i * n + k] = f;
                for j in (k + 1)..n {
                    let akj = a[k * n + j];
                    a[i * n + j] -= f * akj;
                }
            }
        }
        Ok(Self { n, lu: a, perm })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
        x
    }
}

/// One-shot solve of `a·x = b`.
pub fn solve<T: Scalar>(n: usize, a: Vec<T>, b: &[T], what: &'static str) -> Result<Vec<T>> {
    Ok(Lu::factor(n, a, what)?.solve(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Dual;

    #[test]
    fn solves_with_pivoting() {
        let a = vec![0.0, 2.0, 1.0, 1.0, 1.0, 0.0, 2.0, 0.0, 3.0];
        let x = solve(3, a.clone(), &[5.0, 2.0, 9.0], "test").unwrap();
        for i in 0..3 {
            let r: f64 = (0..3).map(|j| a[i * 3 + j] * x[j]).sum();
            assert!((r - [5.0, 2.0, 9.0][i]).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_is_reported() {
        let a = vec![1.0, 2.0, 2.0, 4.0];
        assert!(matches!(solve(2, a, &[1.0, 2.0], "t"), Err(Error::Singular("t"))));
    }

    #[test]
    fn dual_solution_carries_derivative() {
        // d/dt of x in [[2+t, 1],[1, 3]] x = [1, 2] at t = 0.
        let a = vec![Dual::variable(2.0), Dual::constant(1.0), Dual::constant(1.0), Dual::constant(3.0)];
        let b = [Dual::constant(1.0), Dual::constant(2.0)];
        let x = solve(2, a, &b, "t").unwrap();
        let f = |t: f64| {
            let det = (2.0 + t) * 3.0 - 1.0;
            (1.0 * 3.0 - 2.0) / det
        };
        let h = 1e-6;
        let fd = (f(h) - f(-h)) / (2.0 * h);
        assert!((x[0].eps - fd).abs() < 1e-8);
    }
}
