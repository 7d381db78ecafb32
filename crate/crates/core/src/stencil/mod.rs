//! Stencil generation: the uniform grid, node distributions for the
//! staggered boundary schemes, near-boundary compact rows, and the moment
//! solver that produces and certifies every one-sided weight set.

mod moments;
mod near_boundary;
mod staggered;

pub use moments::{solve_moment_weights, MomentWeights, TAYLOR_TERMS};
pub use near_boundary::{near_boundary_row, NearBoundaryOrder, NearBoundaryRow};
pub use staggered::{
    certify_scheme, fourth_derivative_scheme, scheme_a, scheme_b, scheme_c, BoundaryScheme,
    Certification, DegreeResidual, KILL_A, KILL_B, KILL_C, KILL_FOURTH_DERIVATIVE,
};

use crate::error::{Error, Result};
use crate::scalar::{MomentField, Real};

/// Smallest node count for which the two near-boundary rows stay disjoint.
pub const MIN_NODES: usize = 12;

/// Uniform grid `x_i = i h`, `i = 0..=n_x`, on `[0, x_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec<T> {
    x_max: T,
    n_x: usize,
}

impl<T: Real> GridSpec<T> {
    pub fn new(x_max: T, n_x: usize) -> Result<Self> {
        if !(x_max > T::zero()) || !x_max.is_finite() {
            return Err(Error::InvalidParameter(format!("x_max must be > 0, got {x_max}")));
        }
        if n_x < MIN_NODES {
            return Err(Error::GridTooSmall { n_x, min: MIN_NODES });
        }
        Ok(GridSpec { x_max, n_x })
    }

    /// Grid with spacing `h`; `h` must divide `x_max` (to `1e-9` relative).
    pub fn from_step(x_max: T, h: T) -> Result<Self> {
        if !(h > T::zero()) || !h.is_finite() {
            return Err(Error::InvalidParameter(format!("h must be > 0, got {h}")));
        }
        let ratio = (x_max / h).to_f64().unwrap_or(f64::NAN);
        let n = ratio.round();
        if !n.is_finite() || (ratio - n).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::NonDividingStep {
                h: h.to_f64().unwrap_or(f64::NAN),
                x_max: x_max.to_f64().unwrap_or(f64::NAN),
            });
        }
        Self::new(x_max, n as usize)
    }

    pub fn x_max(&self) -> T {
        self.x_max
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    /// Number of interior unknowns, `n_x - 1`.
    pub fn interior(&self) -> usize {
        self.n_x - 1
    }

    pub fn h(&self) -> T {
        self.x_max / T::from_usize(self.n_x).expect("node count")
    }

    /// Coordinate of node `i`.
    pub fn x(&self, i: usize) -> T {
        T::from_usize(i).expect("node index") * self.h()
    }
}

/// Node offsets `gamma_1 < ... < gamma_k` (in units of `h`) used by the
/// staggered boundary schemes. Four entries describe a four-node scheme and
/// are completed to five when needed.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeDistribution<F> {
    gamma: Vec<F>,
}

impl<F: MomentField> NodeDistribution<F> {
    pub fn new(gamma: Vec<F>) -> Result<Self> {
        if gamma.len() != 4 && gamma.len() != 5 {
            return Err(Error::InvalidParameter(format!(
                "node distribution needs 4 or 5 offsets, got {}",
                gamma.len()
            )));
        }
        let two = F::from_u32(2).expect("small integer");
        if gamma[0] < two {
            return Err(Error::InvalidParameter(
                "first node offset must be at least 2".into(),
            ));
        }
        if gamma.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter(
                "node offsets must be strictly increasing".into(),
            ));
        }
        Ok(NodeDistribution { gamma })
    }

    pub fn as_slice(&self) -> &[F] {
        &self.gamma
    }

    pub fn len(&self) -> usize {
        self.gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.is_empty()
    }

    /// Five offsets; a four-entry distribution gets an auxiliary
    /// `gamma_5 = gamma_4 + (gamma_4 - gamma_3)`.
    pub fn completed(&self) -> Vec<F> {
        let mut g = self.gamma.clone();
        if g.len() == 4 {
            let next = g[3].clone() + (g[3].clone() - g[2].clone());
            g.push(next);
        }
        g
    }
}

impl NodeDistribution<f64> {
    /// Parses `"2,3,4,5"`-style lists.
    pub fn parse(list: &str) -> Result<Self> {
        let gamma = list
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidParameter(format!("bad node offset {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(gamma)
    }

    /// Integer offsets, if every entry is integer-valued.
    pub fn integer_offsets(&self) -> Option<Vec<usize>> {
        self.gamma
            .iter()
            .map(|g| (g.fract() == 0.0 && *g > 0.0).then_some(*g as usize))
            .collect()
    }
}
