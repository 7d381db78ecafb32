//! Sixth-order compact second-derivative operator on the interior nodes.
//!
//! Interior rows (`2 <= i <= n_x - 2`):
//!
//! ```text
//! 2/11 f''_{i-1} + f''_i + 2/11 f''_{i+1}
//!     = 12/11 (f_{i+1} - 2 f_i + f_{i-1}) / h^2 + 3/11 (f_{i+2} - 2 f_i + f_{i-2}) / (4 h^2)
//! ```
//!
//! Rows `1` and `n_x - 1` use the fifth- (or sixth-) order near-boundary
//! relation and its mirror image. The left-hand matrix does not depend on
//! `h` and is factored once.

use crate::banded::{BandedLu, BandedMatrix};
use crate::error::{Error, Result};
use crate::scalar::{int, Real};
use crate::stencil::{near_boundary_row, GridSpec, NearBoundaryOrder};

/// Which near-boundary row closes the left-hand matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum LhsVariant {
    /// Fifth-order near-boundary rows.
    #[default]
    B5,
    /// Sixth-order near-boundary rows.
    B6,
}

impl LhsVariant {
    fn order(self) -> NearBoundaryOrder {
        match self {
            LhsVariant::B5 => NearBoundaryOrder::Fifth,
            LhsVariant::B6 => NearBoundaryOrder::Sixth,
        }
    }
}

/// Dirichlet values at `x = 0` and `x = x_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryValues<T> {
    pub left: T,
    pub right: T,
}

impl<T: Real> BoundaryValues<T> {
    /// Left value only; the far boundary is always zero for this model.
    pub fn left(left: T) -> Self {
        BoundaryValues {
            left,
            right: T::zero(),
        }
    }

    pub fn zero() -> Self {
        BoundaryValues {
            left: T::zero(),
            right: T::zero(),
        }
    }
}

/// Assembled and factored compact operator.
#[derive(Debug, Clone)]
pub struct CompactSystem<T> {
    grid: GridSpec<T>,
    variant: LhsVariant,
    lhs: BandedMatrix<T>,
    lu: BandedLu<T>,
    inv_h2: T,
}

/// Off-diagonal of the interior left-hand rows.
pub const ALPHA: f64 = 2.0 / 11.0;

impl<T: Real> CompactSystem<T> {
    pub fn assemble(grid: GridSpec<T>, variant: LhsVariant) -> Result<Self> {
        let nx = grid.n_x();
        if nx < crate::stencil::MIN_NODES {
            return Err(Error::GridTooSmall {
                n_x: nx,
                min: crate::stencil::MIN_NODES,
            });
        }
        let n = grid.interior();
        let row = near_boundary_row(variant.order()).lhs::<T>();
        let band = row.len() - 1;
        let mut lhs = BandedMatrix::zeros(n, band, band);
        for (j, &c) in row.iter().enumerate() {
            lhs.set(0, j, c);
            lhs.set(n - 1, n - 1 - j, c);
        }
        let alpha = int::<T>(2) / int::<T>(11);
        for r in 1..n - 1 {
            lhs.set(r, r - 1, alpha);
            lhs.set(r, r, T::one());
            lhs.set(r, r + 1, alpha);
        }
        let lu = lhs.factor()?;
        let h = grid.h();
        Ok(CompactSystem {
            grid,
            variant,
            lhs,
            lu,
            inv_h2: T::one() / (h * h),
        })
    }

    pub fn grid(&self) -> &GridSpec<T> {
        &self.grid
    }

    pub fn variant(&self) -> LhsVariant {
        self.variant
    }

    pub fn lhs(&self) -> &BandedMatrix<T> {
        &self.lhs
    }

    /// Pivot growth of the stored factorisation.
    pub fn growth(&self) -> T {
        self.lu.growth()
    }

    /// Right-hand side `A f + forcing(bc)` written into `out`.
    pub fn apply_rhs_into(&self, f: &[T], bc: BoundaryValues<T>, out: &mut [T]) {
        let nx = self.grid.n_x();
        let n = nx - 1;
        assert_eq!(f.len(), n, "interior vector length");
        assert_eq!(out.len(), n);
        let val = |j: usize| -> T {
            if j == 0 {
                bc.left
            } else if j == nx {
                bc.right
            } else {
                f[j - 1]
            }
        };
        let two = int::<T>(2);
        let near = int::<T>(12) * self.inv_h2;
        let a = int::<T>(12) / int::<T>(11) * self.inv_h2;
        let b = int::<T>(3) / int::<T>(44) * self.inv_h2;
        out[0] = near * (bc.left - two * f[0] + f[1]);
        out[n - 1] = near * (f[n - 2] - two * f[n - 1] + bc.right);
        for i in 2..nx - 1 {
            let fi = f[i - 1];
            out[i - 1] = a * (f[i] - two * fi + f[i - 2]) + b * (val(i + 2) - two * fi + val(i - 2));
        }
    }

    /// Boundary contribution to the right-hand side: nonzero only in rows
    /// `1, 2, n_x - 2, n_x - 1`.
    pub fn forcing(&self, bc: BoundaryValues<T>) -> Vec<T> {
        let n = self.grid.interior();
        let mut out = vec![T::zero(); n];
        let near = int::<T>(12) * self.inv_h2;
        let b = int::<T>(3) / int::<T>(44) * self.inv_h2;
        out[0] += near * bc.left;
        out[1] += b * bc.left;
        out[n - 1] += near * bc.right;
        out[n - 2] += b * bc.right;
        out
    }

    /// `B^{-1} (A f + forcing)` into `out`, without input validation.
    pub fn second_derivative_into(&self, f: &[T], bc: BoundaryValues<T>, out: &mut [T]) {
        self.apply_rhs_into(f, bc, out);
        self.lu.solve_in_place(out);
    }

    /// Compact approximation of `f''` on the interior nodes.
    pub fn second_derivative(&self, f: &[T], bc: BoundaryValues<T>) -> Result<Vec<T>> {
        if f.len() != self.grid.interior() {
            return Err(Error::InvalidParameter(format!(
                "expected {} interior values, got {}",
                self.grid.interior(),
                f.len()
            )));
        }
        if !bc.left.is_finite() || !bc.right.is_finite() || f.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("second-derivative input".into()));
        }
        let mut out = vec![T::zero(); f.len()];
        self.second_derivative_into(f, bc, &mut out);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn sys(x_max: f64, h: f64, v: LhsVariant) -> CompactSystem<f64> {
        CompactSystem::assemble(GridSpec::from_step(x_max, h).unwrap(), v).unwrap()
    }

    fn sample(s: &CompactSystem<f64>, f: impl Fn(f64) -> f64) -> (Vec<f64>, BoundaryValues<f64>) {
        let g = s.grid();
        let inner = (1..g.n_x()).map(|i| f(g.x(i))).collect();
        (inner, BoundaryValues { left: f(0.0), right: f(g.x_max()) })
    }

    #[test]
    fn annihilates_constants_and_linears() {
        for v in [LhsVariant::B5, LhsVariant::B6] {
            let s = sys(3.0, 0.05, v);
            let h = s.grid().h();
            let (f, bc) = sample(&s, |_| 7.0);
            for d in s.second_derivative(&f, bc).unwrap() {
                assert!(d.abs() <= 1e-11 * 7.0 / (h * h));
            }
            let (f, bc) = sample(&s, |x| x);
            for d in s.second_derivative(&f, bc).unwrap() {
                assert!(d.abs() <= 1e-9 / (h * h) * 3.0);
            }
        }
    }

    #[test]
    fn quadratic_exact_everywhere() {
        for v in [LhsVariant::B5, LhsVariant::B6] {
            let s = sys(3.0, 0.05, v);
            let (f, bc) = sample(&s, |x| x * x - 0.3 * x + 1.0);
            for d in s.second_derivative(&f, bc).unwrap() {
                assert!((d - 2.0).abs() < 1e-9, "{d}");
            }
        }
    }

    #[test]
    fn cubic_everywhere_septic_inside() {
        let s = sys(1.0, 1.0 / 40.0, LhsVariant::B5);
        let (f, bc) = sample(&s, |x| x.powi(3));
        let g = *s.grid();
        for (i, d) in s.second_derivative(&f, bc).unwrap().iter().enumerate() {
            assert_relative_eq!(*d, 6.0 * g.x(i + 1), epsilon = 1e-8);
        }
        // Interior rows are exact through degree 7 once the near-boundary
        // polluting rows are out of reach: compare the full-system result
        // against the exact solution of the same banded system.
        let p = |x: f64| x.powi(7);
        let (f, bc) = sample(&s, p);
        let mut rhs = vec![0.0; f.len()];
        s.apply_rhs_into(&f, bc, &mut rhs);
        let exact: Vec<f64> = (1..g.n_x()).map(|i| 42.0 * g.x(i).powi(5)).collect();
        let lhs = s.lhs().mul_vec(&exact);
        for r in 2..f.len() - 2 {
            assert!((lhs[r] - rhs[r]).abs() <= 1e-8 * rhs[r].abs().max(1.0), "row {r}");
        }
    }

    #[test]
    fn forcing_examples() {
        let s = sys(3.0, 0.1, LhsVariant::B5);
        assert!(s.forcing(BoundaryValues::zero()).iter().all(|v| *v == 0.0));
        let f = s.forcing(BoundaryValues { left: 1.0, right: 0.0 });
        assert_relative_eq!(f[0], 1200.0, max_relative = 1e-12);
        assert_relative_eq!(f[1], 3.0 / (11.0 * 0.04), max_relative = 1e-12);
        assert!(f[2..].iter().all(|v| *v == 0.0));
        // RHS splits into interior part plus forcing.
        let g = s.grid();
        let v: Vec<f64> = (1..g.n_x()).map(|i| (g.x(i)).cos()).collect();
        let bc = BoundaryValues { left: 0.4, right: -0.2 };
        let mut full = vec![0.0; v.len()];
        let mut inner = vec![0.0; v.len()];
        s.apply_rhs_into(&v, bc, &mut full);
        s.apply_rhs_into(&v, BoundaryValues::zero(), &mut inner);
        for ((a, b), c) in full.iter().zip(&inner).zip(s.forcing(bc)) {
            assert!((a - b - c).abs() < 1e-9 * a.abs().max(1.0));
        }
    }

    #[test]
    fn lhs_is_h_independent_and_stable() {
        let a = sys(3.0, 0.05, LhsVariant::B5);
        let b = sys(6.0, 0.1, LhsVariant::B5);
        assert_eq!(a.lhs(), b.lhs());
        assert!(a.growth() <= 10.0);
        assert!(sys(3.0, 0.05, LhsVariant::B6).growth() <= 10.0);
        for r in 1..a.grid().interior() - 1 {
            let m = a.lhs();
            assert!(m.get(r, r) > m.get(r, r - 1).abs() + m.get(r, r + 1).abs());
        }
    }

    fn max_err(h: f64, f: fn(f64) -> f64, d2: fn(f64) -> f64, x_max: f64, v: LhsVariant) -> (f64, f64) {
        let s = sys(x_max, h, v);
        let (vals, bc) = sample(&s, f);
        let g = *s.grid();
        let d = s.second_derivative(&vals, bc).unwrap();
        let first = (d[0] - d2(g.x(1))).abs();
        let all = d
            .iter()
            .enumerate()
            .map(|(i, v)| (v - d2(g.x(i + 1))).abs())
            .fold(0.0, f64::max);
        (all, first)
    }

    fn observed_rate(v: LhsVariant, f: fn(f64) -> f64, d2: fn(f64) -> f64) -> (f64, f64) {
        let (a, _) = max_err(0.1, f, d2, 3.0, v);
        let (b, _) = max_err(0.05, f, d2, 3.0, v);
        let (c, _) = max_err(0.025, f, d2, 3.0, v);
        ((a / b).log2(), (b / c).log2())
    }

    #[test]
    fn sine_convergence() {
        // The max-norm error sits at the near-boundary row, so the fifth-order
        // closure sets the global rate.
        let (r1, r2) = observed_rate(LhsVariant::B5, f64::sin, |x| -x.sin());
        assert!(r1 >= 4.8 && r2 >= 4.8, "B5 rates {r1} {r2}");
        let (r1, r2) = observed_rate(LhsVariant::B6, f64::sin, |x| -x.sin());
        assert!(r1 >= 5.7 && r2 >= 5.7, "B6 rates {r1} {r2}");
    }

    #[test]
    fn exponential_refinement() {
        let (r1, r2) = observed_rate(LhsVariant::B5, |x| (-x).exp(), |x| (-x).exp());
        assert!(r1 >= 4.8 && r2 >= 4.8, "{r1} {r2}");
    }

    #[test]
    fn zero_in_zero_out_and_errors() {
        let s = sys(3.0, 0.1, LhsVariant::B5);
        let z = vec![0.0; s.grid().interior()];
        assert!(s.second_derivative(&z, BoundaryValues::zero()).unwrap().iter().all(|v| *v == 0.0));
        let mut bad = z.clone();
        bad[3] = f64::NAN;
        assert!(s.second_derivative(&bad, BoundaryValues::zero()).is_err());
        assert!(s.second_derivative(&z[1..], BoundaryValues::zero()).is_err());
        let g = GridSpec::<f64>::new(1.0, 12).unwrap();
        assert!(CompactSystem::assemble(g, LhsVariant::B6).is_ok());
    }

    #[test]
    fn deterministic_output() {
        let s = sys(3.0, 0.05, LhsVariant::B5);
        let (f, bc) = sample(&s, |x| (2.0 * x).sin() * (-x).exp());
        let a = s.second_derivative(&f, bc).unwrap();
        let b = s.second_derivative(&f, bc).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn single_precision_quadratic() {
        let g = GridSpec::<f32>::from_step(3.0, 0.1).unwrap();
        let s = CompactSystem::assemble(g, LhsVariant::B5).unwrap();
        let f: Vec<f32> = (1..g.n_x()).map(|i| g.x(i) * g.x(i)).collect();
        let d = s.second_derivative(&f, BoundaryValues { left: 0.0, right: 9.0 }).unwrap();
        assert!(d.iter().all(|v| (v - 2.0).abs() < 2e-2));
    }

    proptest! {
        #[test]
        fn linear_operator(a in -3.0f64..3.0, b in -3.0f64..3.0, l1 in -1.0f64..1.0, l2 in -1.0f64..1.0) {
            let s = sys(3.0, 0.1, LhsVariant::B5);
            let g = *s.grid();
            let f: Vec<f64> = (1..g.n_x()).map(|i| (g.x(i)).sin()).collect();
            let q: Vec<f64> = (1..g.n_x()).map(|i| (-g.x(i)).exp()).collect();
            let bf = BoundaryValues::left(l1);
            let bq = BoundaryValues::left(l2);
            let comb: Vec<f64> = f.iter().zip(&q).map(|(x, y)| a * x + b * y).collect();
            let lhs = s.second_derivative(&comb, BoundaryValues::left(a * l1 + b * l2)).unwrap();
            let df = s.second_derivative(&f, bf).unwrap();
            let dq = s.second_derivative(&q, bq).unwrap();
            let scale = lhs.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            for ((x, y), z) in lhs.iter().zip(&df).zip(&dq) {
                prop_assert!((x - (a * y + b * z)).abs() <= 1e-12 * scale);
            }
        }
    }
}
