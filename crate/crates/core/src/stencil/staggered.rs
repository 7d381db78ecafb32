//! Staggered one-sided boundary schemes on arbitrary node distributions.
//!
//! A scheme reads
//!
//! ```text
//! w0 f(0) + sum_m w_m f(gamma_m h) = v1 h f'(0) + v2 h^2 f''(0) + v3 h^3 f'''(0) + C h^8 f^(8)(0) + ...
//! ```
//!
//! Three constructions are provided:
//! * [`scheme_a`]: five nodes, orders 4..=7 annihilated, keeps `f'`, `f''`, `f'''`.
//! * [`scheme_b`]: five nodes, orders 3..=6 annihilated, keeps `f'`, `f''`.
//! * [`scheme_c`]: `A - B`, which cancels the farthest node and leaves a
//!   four-node scheme that still keeps `f'''`.

use super::moments::{factorial, pow, relative_moment, solve_moment_weights, TAYLOR_TERMS};
use super::NodeDistribution;
use crate::error::{Error, Result};
use crate::scalar::MomentField;

/// Orders annihilated by [`scheme_a`].
pub const KILL_A: [u32; 4] = [4, 5, 6, 7];
/// Orders annihilated by [`scheme_b`].
pub const KILL_B: [u32; 4] = [3, 4, 5, 6];
/// Orders annihilated by [`scheme_c`].
pub const KILL_C: [u32; 3] = [4, 5, 6];
/// Orders annihilated by the four-node scheme used for `s_f''`.
pub const KILL_FOURTH_DERIVATIVE: [u32; 3] = [5, 6, 7];

/// A generated one-sided boundary stencil.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryScheme<F> {
    /// Node offsets in units of `h`.
    pub nodes: Vec<F>,
    /// Weight of `f(0)`.
    pub w0: F,
    /// Signed weights of `f(gamma_m h)`.
    pub weights: Vec<F>,
    /// `taylor[p] = sum_m w_m gamma_m^p / p!` (with `w0` folded into `p = 0`).
    pub taylor: Vec<F>,
    /// Annihilated Taylor orders.
    pub kill_set: Vec<u32>,
    /// Largest relative moment residual over `kill_set`.
    pub residual: F,
}

impl<F: MomentField> BoundaryScheme<F> {
    fn from_solve(nodes: &[F], kill: &[u32], last_weight: F) -> Result<Self> {
        let m = solve_moment_weights(nodes, kill, last_weight)?;
        Ok(BoundaryScheme {
            nodes: nodes.to_vec(),
            w0: m.w0,
            weights: m.weights,
            taylor: m.taylor,
            kill_set: kill.to_vec(),
            residual: m.residual,
        })
    }

    /// Weight of `h f'(0)`.
    pub fn v1(&self) -> F {
        self.taylor[1].clone()
    }

    /// Weight of `h^2 f''(0)`.
    pub fn v2(&self) -> F {
        self.taylor[2].clone()
    }

    /// Weight of `h^3 f'''(0)`.
    pub fn v3(&self) -> F {
        self.taylor[3].clone()
    }

    /// Truncation constant `C = sum_m w_m gamma_m^8 / 8!`.
    pub fn truncation_constant(&self) -> F {
        self.taylor[8].clone()
    }

    /// Orders `1..max(kill)` kept on the right-hand side.
    pub fn retained_orders(&self) -> Vec<u32> {
        let top = self.kill_set.iter().copied().max().unwrap_or(0);
        (1..top).filter(|p| !self.kill_set.contains(p)).collect()
    }

    /// Weighted sum `sum_m w_m f_m` of samples taken at the nodes.
    pub fn apply(&self, samples: &[F]) -> F {
        let mut s = F::zero();
        for (w, v) in self.weights.iter().zip(samples) {
            s = s + w.clone() * v.clone();
        }
        s
    }

    /// Number of nodes with a nonzero weight.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Five-node scheme annihilating orders 4..=7 with the farthest weight `+1`.
pub fn scheme_a<F: MomentField>(gamma: &NodeDistribution<F>) -> Result<BoundaryScheme<F>> {
    BoundaryScheme::from_solve(&gamma.completed(), &KILL_A, F::one())
}

/// Five-node scheme annihilating orders 3..=6 with the farthest weight `+1`,
/// so `v3 = 0`.
pub fn scheme_b<F: MomentField>(gamma: &NodeDistribution<F>) -> Result<BoundaryScheme<F>> {
    BoundaryScheme::from_solve(&gamma.completed(), &KILL_B, F::one())
}

/// Difference `scheme_a - scheme_b`. Both pin the farthest weight to `+1`,
/// so that node cancels and a four-node scheme remains.
pub fn scheme_c<F: MomentField>(gamma: &NodeDistribution<F>) -> Result<BoundaryScheme<F>> {
    let a = scheme_a(gamma)?;
    let b = scheme_b(gamma)?;
    let diff: Vec<F> = a
        .weights
        .iter()
        .zip(&b.weights)
        .map(|(x, y)| x.clone() - y.clone())
        .collect();
    let far = diff[4].clone();
    let tol = F::from_f64(1e-9).unwrap_or_else(F::zero);
    if far.abs() > tol {
        return Err(Error::CancellationFailure {
            weight: far.to_f64().unwrap_or(f64::NAN),
        });
    }
    let nodes = a.nodes[..4].to_vec();
    let weights = diff[..4].to_vec();
    let taylor: Vec<F> = a
        .taylor
        .iter()
        .zip(&b.taylor)
        .map(|(x, y)| x.clone() - y.clone())
        .collect();
    let mut residual = F::zero();
    for &p in &KILL_C {
        let r = relative_moment(&nodes, &weights, p);
        if r > residual {
            residual = r;
        }
    }
    Ok(BoundaryScheme {
        nodes,
        w0: a.w0 - b.w0,
        weights,
        taylor,
        kill_set: KILL_C.to_vec(),
        residual,
    })
}

/// Four-node scheme at `(1, 2, 3, 4)` (in units of the spacing) that keeps
/// the first four derivatives; normalised so the farthest weight is `-1`.
pub fn fourth_derivative_scheme<F: MomentField>() -> Result<BoundaryScheme<F>> {
    let nodes: Vec<F> = (1..=4u32).map(|n| F::from_u32(n).expect("small integer")).collect();
    BoundaryScheme::from_solve(&nodes, &KILL_FOURTH_DERIVATIVE, -F::one())
}

/// Residual of one monomial degree.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeResidual<F> {
    pub degree: u32,
    /// `LHS - RHS` on `f = x^degree` with `h = 1`.
    pub residual: F,
    /// Residual divided by `max(1, sum |w_m gamma_m^degree|)`.
    pub relative: F,
    /// True when the scheme is constructed to reproduce this degree.
    pub exact_by_construction: bool,
}

/// Per-degree certification of a scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct Certification<F> {
    pub degrees: Vec<DegreeResidual<F>>,
}

impl<F: MomentField> Certification<F> {
    /// All degrees that should vanish do so within `tol` (relative).
    pub fn passes(&self, tol: F) -> bool {
        self.degrees
            .iter()
            .filter(|d| d.exact_by_construction)
            .all(|d| d.relative <= tol)
    }

    pub fn residual(&self, degree: u32) -> Option<&F> {
        self.degrees.iter().find(|d| d.degree == degree).map(|d| &d.residual)
    }
}

/// Evaluates the scheme on `x^0 .. x^degree` at `h = 1` and reports how far
/// each side is from balancing. Degrees in `kill_set`, the retained orders
/// and degree 0 must vanish.
pub fn certify_scheme<F: MomentField>(scheme: &BoundaryScheme<F>, degree: u32) -> Certification<F> {
    let degree = degree.min(TAYLOR_TERMS as u32 - 1);
    let retained = scheme.retained_orders();
    let degrees = (0..=degree)
        .map(|p| {
            let mut lhs = if p == 0 { scheme.w0.clone() } else { F::zero() };
            let mut scale = F::one();
            for (w, g) in scheme.weights.iter().zip(&scheme.nodes) {
                let t = w.clone() * pow(g, p);
                scale = scale + t.abs();
                lhs = lhs + t;
            }
            let rhs = if retained.contains(&p) {
                scheme.taylor[p as usize].clone() * factorial(p)
            } else {
                F::zero()
            };
            let residual = lhs - rhs;
            let relative = residual.abs() / scale;
            DegreeResidual {
                degree: p,
                exact_by_construction: p == 0 || retained.contains(&p) || scheme.kill_set.contains(&p),
                residual,
                relative,
            }
        })
        .collect();
    Certification { degrees }
}
