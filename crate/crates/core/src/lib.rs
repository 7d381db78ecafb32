//! Front-fixing solver for American put options.
//!
//! The free boundary is pinned at `x = 0` by the change of variable
//! `x = ln S - ln s_f(tau)`. Option value `U` and delta `W = U_x` are stepped
//! on the interior nodes with a sixth-order compact second-derivative
//! operator, while the boundary velocity is recovered at every stage from a
//! staggered one-sided scheme applied to `Q = sqrt(U - E + e^x s_f)`.
//! Time integration uses the 3(2) Bogacki-Shampine pair with adaptive steps,
//! or fixed-step SSPRK3.

pub mod banded;
pub mod compact;
pub mod error;
pub mod experiments;
pub mod free_boundary;
pub mod integrator;
pub mod market;
pub mod oracle;
pub mod scalar;
pub mod stencil;

pub use error::{Error, Result};
pub use scalar::{MomentField, Real};

pub use compact::{BoundaryValues, CompactSystem, LhsVariant};
pub use free_boundary::{BoundaryState, QuadraticCoeffs};
pub use integrator::{Method, SolveConfig, Solution, SolverState, StepControl};
pub use market::{MarketParams, Preset};
pub use stencil::{BoundaryScheme, GridSpec, NodeDistribution};

/// Double-precision market parameters.
pub type MarketParams64 = MarketParams<f64>;
/// Double-precision grid.
pub type Grid64 = GridSpec<f64>;
/// Double-precision boundary scheme.
pub type Scheme64 = BoundaryScheme<f64>;
/// Boundary scheme with exact rational weights.
pub type ExactScheme = BoundaryScheme<num_rational::BigRational>;
/// Exact rational node distribution.
pub type ExactNodes = NodeDistribution<num_rational::BigRational>;
/// Double-precision compact operator.
pub type Compact64 = CompactSystem<f64>;
/// Double-precision solution.
pub type Solution64 = Solution<f64>;
/// Single-precision solution.
pub type Solution32 = Solution<f32>;
