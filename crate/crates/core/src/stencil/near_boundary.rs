//! Dirichlet near-boundary rows of the compact second-derivative operator.
//!
//! Each row relates `f''` at nodes `1..=k` to the centred difference
//! `12/h^2 (f_0 - 2 f_1 + f_2)`; none of them touches `f''(x_0)`.

use crate::scalar::{int, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NearBoundaryOrder {
    Fourth,
    Fifth,
    Sixth,
}

/// Exact rational coefficients of one near-boundary row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NearBoundaryRow {
    pub order: NearBoundaryOrder,
    numerators: &'static [i64],
    denominator: i64,
}

const FOURTH: [i64; 4] = [14, -5, 4, -1];
const FIFTH: [i64; 5] = [897, -528, 582, -288, 57];
const SIXTH: [i64; 6] = [1902, -1596, 2244, -1656, 654, -108];

/// Coefficient row for the requested order.
pub fn near_boundary_row(order: NearBoundaryOrder) -> NearBoundaryRow {
    let (numerators, denominator): (&'static [i64], i64) = match order {
        NearBoundaryOrder::Fourth => (&FOURTH, 1),
        NearBoundaryOrder::Fifth => (&FIFTH, 60),
        NearBoundaryOrder::Sixth => (&SIXTH, 120),
    };
    NearBoundaryRow {
        order,
        numerators,
        denominator,
    }
}

impl NearBoundaryRow {
    /// Number of `f''` taps (4, 5 or 6).
    pub fn width(&self) -> usize {
        self.numerators.len()
    }

    pub fn numerators(&self) -> &'static [i64] {
        self.numerators
    }

    pub fn denominator(&self) -> i64 {
        self.denominator
    }

    /// Left-hand coefficients of `f''(x_1) .. f''(x_k)`.
    pub fn lhs<T: Real>(&self) -> Vec<T> {
        let d = int::<T>(self.denominator);
        self.numerators.iter().map(|&n| int::<T>(n) / d).collect()
    }

    /// The `12 / h^2` factor multiplying `f_0 - 2 f_1 + f_2`.
    pub fn rhs_factor<T: Real>(&self, h: T) -> T {
        int::<T>(12) / (h * h)
    }

    /// `LHS - RHS` when the row is applied to the monomial `x^p` on the
    /// unit grid `x_j = j`. Zero for every degree the row reproduces.
    pub fn monomial_residual(&self, p: u32) -> f64 {
        let lhs: f64 = if p < 2 {
            0.0
        } else {
            self.numerators
                .iter()
                .enumerate()
                .map(|(j, &n)| n as f64 / self.denominator as f64 * (p * (p - 1)) as f64 * ((j + 1) as f64).powi(p as i32 - 2))
                .sum()
        };
        let f = |x: f64| if p == 0 { 1.0 } else { x.powi(p as i32) };
        let rhs = 12.0 * (f(0.0) - 2.0 * f(1.0) + f(2.0));
        lhs - rhs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficient_sums_are_twelve() {
        for order in [NearBoundaryOrder::Fourth, NearBoundaryOrder::Fifth, NearBoundaryOrder::Sixth] {
            let row = near_boundary_row(order);
            let s: i64 = row.numerators().iter().sum();
            assert_eq!(s, 12 * row.denominator(), "{order:?}");
        }
        let fifth: f64 = near_boundary_row(NearBoundaryOrder::Fifth).lhs::<f64>().iter().sum();
        assert!((fifth - 12.0).abs() < 1e-13);
    }

    #[test]
    fn quadratic_balance_on_any_grid() {
        let row = near_boundary_row(NearBoundaryOrder::Fifth);
        for h in [0.3, 0.01, 1.7] {
            let lhs: f64 = row.lhs::<f64>().iter().map(|c| c * 2.0).sum();
            let x = |j: f64| j * h;
            let rhs = row.rhs_factor(h) * (x(0.0).powi(2) - 2.0 * x(1.0).powi(2) + x(2.0).powi(2));
            assert!((lhs - 24.0).abs() < 1e-12);
            assert!((rhs - 24.0).abs() < 1e-9);
        }
    }

    #[test]
    fn polynomial_exactness() {
        // Fourth-order row: exact through degree 5. Fifth: through 6. Sixth: through 7.
        let cases = [
            (NearBoundaryOrder::Fourth, 5),
            (NearBoundaryOrder::Fifth, 6),
            (NearBoundaryOrder::Sixth, 7),
        ];
        for (order, top) in cases {
            let row = near_boundary_row(order);
            for p in 0..=top {
                assert!(row.monomial_residual(p).abs() < 1e-9, "{order:?} degree {p}");
            }
            assert!(row.monomial_residual(top + 1).abs() > 1e-6, "{order:?} degree {}", top + 1);
        }
    }
}
