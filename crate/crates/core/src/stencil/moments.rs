//! Moment-condition solver behind every one-sided boundary stencil.
//!
//! A stencil `w0 f(0) + sum_m w_m f(theta_m h)` expands, by Taylor's theorem,
//! into `sum_p (sum_m w_m theta_m^p / p!) h^p f^(p)(0)` (plus `w0 + sum w` at
//! `p = 0`). Annihilating a chosen set of orders is a square linear system
//! in the weights once the farthest weight is pinned.

use crate::error::{Error, Result};
use crate::scalar::MomentField;

/// Number of Taylor coefficients kept on every scheme (orders `0..=10`).
pub const TAYLOR_TERMS: usize = 11;

/// Raw output of the moment solve.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentWeights<F> {
    /// Weight of `f(0)`.
    pub w0: F,
    /// Weights of `f(theta_m h)`, in node order.
    pub weights: Vec<F>,
    /// `taylor[p] = sum_m w_m theta_m^p / p!` for `p >= 1`; `taylor[0]` is
    /// the full zeroth moment including `w0` (zero by construction).
    pub taylor: Vec<F>,
    /// Largest relative residual over the annihilated orders.
    pub residual: F,
}

pub(crate) fn pow<F: MomentField>(x: &F, p: u32) -> F {
    let mut acc = F::one();
    for _ in 0..p {
        acc = acc * x.clone();
    }
    acc
}

pub(crate) fn factorial<F: MomentField>(p: u32) -> F {
    let mut acc = F::one();
    for k in 2..=p {
        acc = acc * F::from_u32(k).expect("small integer");
    }
    acc
}

fn taylor_coefficients<F: MomentField>(nodes: &[F], weights: &[F], w0: &F) -> Vec<F> {
    (0..TAYLOR_TERMS as u32)
        .map(|p| {
            let mut s = if p == 0 { w0.clone() } else { F::zero() };
            for (w, g) in weights.iter().zip(nodes) {
                s = s + w.clone() * pow(g, p);
            }
            s / factorial(p)
        })
        .collect()
}

/// Relative residual `|sum w theta^p| / sum |w theta^p|` of one moment row.
pub(crate) fn relative_moment<F: MomentField>(nodes: &[F], weights: &[F], p: u32) -> F {
    let mut s = F::zero();
    let mut scale = F::zero();
    for (w, g) in weights.iter().zip(nodes) {
        let t = w.clone() * pow(g, p);
        scale = scale + t.abs();
        s = s + t;
    }
    if scale.is_zero() {
        s.abs()
    } else {
        s.abs() / scale
    }
}

/// Gaussian elimination with full pivoting. `a` is row-major `n x n`.
fn solve_full_pivot<F: MomentField>(mut a: Vec<Vec<F>>, mut b: Vec<F>) -> Result<Vec<F>> {
    let n = b.len();
    let mut col_perm: Vec<usize> = (0..n).collect();
    let mut max_entry = F::zero();
    for row in &a {
        for v in row {
            if v.abs() > max_entry {
                max_entry = v.abs();
            }
        }
    }
    for k in 0..n {
        let (mut pr, mut pc) = (k, k);
        let mut best = F::zero();
        for (i, row) in a.iter().enumerate().skip(k) {
            for (j, v) in row.iter().enumerate().skip(k) {
                if v.abs() > best {
                    best = v.abs();
                    pr = i;
                    pc = j;
                }
            }
        }
        if best.is_zero() || best <= F::singular_threshold() * max_entry.clone() {
            return Err(Error::SingularMoments {
                column: k,
                pivot: best.to_f64().unwrap_or(0.0),
            });
        }
        a.swap(k, pr);
        b.swap(k, pr);
        if pc != k {
            for row in a.iter_mut() {
                row.swap(k, pc);
            }
            col_perm.swap(k, pc);
        }
        let pivot = a[k][k].clone();
        for i in (k + 1)..n {
            let factor = a[i][k].clone() / pivot.clone();
            if factor.is_zero() {
                continue;
            }
            for j in k..n {
                let t = factor.clone() * a[k][j].clone();
                a[i][j] = a[i][j].clone() - t;
            }
            b[i] = b[i].clone() - factor * b[k].clone();
        }
    }
    let mut y = vec![F::zero(); n];
    for k in (0..n).rev() {
        let mut s = b[k].clone();
        for j in (k + 1)..n {
            s = s - a[k][j].clone() * y[j].clone();
        }
        y[k] = s / a[k][k].clone();
    }
    let mut x = vec![F::zero(); n];
    for (k, &c) in col_perm.iter().enumerate() {
        x[c] = y[k].clone();
    }
    Ok(x)
}

/// Solves `sum_m w_m theta_m^p = 0` for every `p` in `kill` with the last
/// node's weight pinned to `last_weight`, then derives `w0` and the Taylor
/// coefficients of the resulting stencil.
///
/// Nodes are rescaled to `theta / max(theta)` before elimination; the moment
/// rows are homogeneous so the weights do not change.
pub fn solve_moment_weights<F: MomentField>(
    nodes: &[F],
    kill: &[u32],
    last_weight: F,
) -> Result<MomentWeights<F>> {
    if nodes.len() != kill.len() + 1 {
        return Err(Error::KillSetMismatch {
            kill: kill.len(),
            nodes: nodes.len(),
        });
    }
    if nodes.iter().any(|g| !(g.clone() > F::zero())) {
        return Err(Error::InvalidParameter("stencil nodes must be positive".into()));
    }
    for (i, a) in nodes.iter().enumerate() {
        if nodes[i + 1..].iter().any(|b| b == a) {
            return Err(Error::InvalidParameter("stencil nodes must be distinct".into()));
        }
    }
    if last_weight.is_zero() {
        return Err(Error::InvalidParameter("last weight must be nonzero".into()));
    }

    let n = kill.len();
    let mut max_node = F::zero();
    for g in nodes {
        if g.clone() > max_node {
            max_node = g.clone();
        }
    }
    let scaled: Vec<F> = nodes.iter().map(|g| g.clone() / max_node.clone()).collect();
    let last = &scaled[n];
    let a: Vec<Vec<F>> = kill
        .iter()
        .map(|&p| scaled[..n].iter().map(|t| pow(t, p)).collect())
        .collect();
    let b: Vec<F> = kill
        .iter()
        .map(|&p| -(last_weight.clone() * pow(last, p)))
        .collect();
    let mut weights = solve_full_pivot(a, b)?;
    weights.push(last_weight);

    let mut w0 = F::zero();
    for w in &weights {
        w0 = w0 - w.clone();
    }
    let taylor = taylor_coefficients(nodes, &weights, &w0);

    let mut residual = F::zero();
    for &p in kill {
        let r = relative_moment(nodes, &weights, p);
        if r > residual {
            residual = r;
        }
    }
    if residual > F::moment_tolerance() {
        return Err(Error::MomentResidual {
            residual: residual.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(MomentWeights {
        w0,
        weights,
        taylor,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num_rational::BigRational;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn ints(v: &[i64]) -> Vec<BigRational> {
        v.iter().map(|&n| q(n, 1)).collect()
    }

    #[test]
    fn exact_weights_for_two_to_six() {
        let m = solve_moment_weights(&ints(&[2, 3, 4, 5, 6]), &[4, 5, 6, 7], q(1, 1)).unwrap();
        assert_eq!(
            m.weights,
            vec![q(81, 1), q(-64, 1), q(243, 8), q(-15552, 1875), q(1, 1)]
        );
        assert_eq!(m.residual, q(0, 1));
        // C = 0.771428... = 27/35
        assert_eq!(m.taylor[8], q(27, 35));
    }

    #[test]
    fn exact_weights_for_boundary_derivative_scheme() {
        let m = solve_moment_weights(&ints(&[1, 2, 3, 4]), &[5, 6, 7], q(-1, 1)).unwrap();
        assert_eq!(m.weights, vec![q(1024, 1), q(-96, 1), q(1024, 81), q(-1, 1)]);
        assert_eq!(m.taylor[1], q(23380, 27));
        assert_eq!(m.taylor[2], q(3320, 9));
        assert_eq!(m.taylor[3], q(800, 9));
        assert_eq!(m.taylor[4], q(32, 3));
    }

    #[test]
    fn float_matches_hand_solution() {
        let m = solve_moment_weights(&[2.0, 3.0, 4.0, 5.0, 6.0], &[4, 5, 6, 7], 1.0).unwrap();
        let expect = [81.0, -64.0, 243.0 / 8.0, -15552.0 / 1875.0, 1.0];
        for (w, e) in m.weights.iter().zip(expect) {
            assert_relative_eq!(*w, e, max_relative = 1e-12);
        }
        assert_relative_eq!(m.taylor[8], 0.771_43, epsilon = 5e-6);
        assert!(m.residual <= 1e-10);
    }

    #[test]
    fn input_errors() {
        assert!(matches!(
            solve_moment_weights(&[2.0, 3.0, 4.0], &[4, 5, 6, 7], 1.0),
            Err(Error::KillSetMismatch { .. })
        ));
        assert!(solve_moment_weights(&[2.0, 2.0, 4.0], &[4, 5], 1.0).is_err());
        assert!(solve_moment_weights(&[-1.0, 2.0, 4.0], &[4, 5], 1.0).is_err());
    }

    #[test]
    fn near_coincident_nodes_are_singular() {
        let r = solve_moment_weights(&[2.0, 2.0 + 1e-13, 4.0, 5.0, 6.0], &[4, 5, 6, 7], 1.0);
        assert!(r.is_err());
    }
}
