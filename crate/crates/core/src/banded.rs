//! Square banded matrices with an unpivoted LU factorisation.
//!
//! Storage is row-major over the band: row `i` holds columns
//! `i - lower ..= i + upper`. Without pivoting the factors stay inside the
//! same band, which is all the compact operator needs.

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix<T> {
    n: usize,
    lower: usize,
    upper: usize,
    data: Vec<T>,
}

impl<T: Real> BandedMatrix<T> {
    pub fn zeros(n: usize, lower: usize, upper: usize) -> Self {
        BandedMatrix {
            n,
            lower,
            upper,
            data: vec![T::zero(); n * (lower + upper + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.lower, self.upper)
    }

    #[inline]
    fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.lower >= i && j <= i + self.upper
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.lower + self.upper + 1) + (j + self.lower - i)
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        if i < self.n && j < self.n && self.in_band(i, j) {
            self.data[self.idx(i, j)]
        } else {
            T::zero()
        }
    }

    /// Sets an entry; panics outside the band.
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        assert!(i < self.n && j < self.n && self.in_band(i, j), "({i}, {j}) outside band");
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.lower);
                let hi = (i + self.upper).min(self.n - 1);
                (lo..=hi).map(|j| self.data[self.idx(i, j)] * x[j]).sum()
            })
            .collect()
    }

    fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Doolittle factorisation `A = L U` without pivoting.
    pub fn factor(&self) -> Result<BandedLu<T>> {
        let mut lu = self.clone();
        let n = self.n;
        for k in 0..n {
            let pivot = lu.data[lu.idx(k, k)];
            if pivot == T::zero() || !pivot.is_finite() {
                return Err(Error::NonFinite(format!("zero pivot at row {k} of banded matrix")));
            }
            let i_end = (k + self.lower).min(n - 1);
            let j_end = (k + self.upper).min(n - 1);
            for i in (k + 1)..=i_end {
                let li = lu.idx(i, k);
                let m = lu.data[li] / pivot;
                lu.data[li] = m;
                if m == T::zero() {
                    continue;
                }
                for j in (k + 1)..=j_end {
                    let src = lu.data[lu.idx(k, j)];
                    let dst = lu.idx(i, j);
                    lu.data[dst] -= m * src;
                }
            }
        }
        let scale = self.max_abs();
        let mut umax = T::zero();
        for i in 0..n {
            for j in i..=(i + self.upper).min(n - 1) {
                umax = umax.max(lu.data[lu.idx(i, j)].abs());
            }
        }
        let growth = if scale > T::zero() { umax / scale } else { T::one() };
        Ok(BandedLu { lu, growth })
    }
}

/// Factors of a [`BandedMatrix`]; `L` has a unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedLu<T> {
    lu: BandedMatrix<T>,
    growth: T,
}

impl<T: Real> BandedLu<T> {
    pub fn dim(&self) -> usize {
        self.lu.n
    }

    /// `max |U_ij| / max |A_ij|`.
    pub fn growth(&self) -> T {
        self.growth
    }

    /// Overwrites `b` with `A^{-1} b`.
    pub fn solve_in_place(&self, b: &mut [T]) {
        let a = &self.lu;
        let n = a.n;
        assert_eq!(b.len(), n);
        for i in 0..n {
            let lo = i.saturating_sub(a.lower);
            let mut s = b[i];
            for j in lo..i {
                s -= a.data[a.idx(i, j)] * b[j];
            }
            b[i] = s;
        }
        for i in (0..n).rev() {
            let hi = (i + a.upper).min(n - 1);
            let mut s = b[i];
            for j in (i + 1)..=hi {
                s -= a.data[a.idx(i, j)] * b[j];
            }
            b[i] = s / a.data[a.idx(i, i)];
        }
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
