//! Boundary velocity and second time derivative of the exercise boundary.
//!
//! Near `x = 0` the transformed value `Q = sqrt(U - E + e^x s_f)` behaves like
//! a smooth function with known derivatives `Q'(0)`, `Q''(0)`, `Q'''(0)`,
//! all depending on `beta = nu + g`. Applying a staggered boundary scheme to
//! sampled `Q` and equating it to those derivatives gives a quadratic in the
//! relative velocity `g = s_f' / s_f`.

use crate::error::{Error, Result};
use crate::market::{
    beta, beta_rate_from_q4, drift_nu, q_boundary_derivatives, q_transform_checked, MarketParams,
};
use crate::scalar::{int, lit, Real};
use crate::stencil::{fourth_derivative_scheme, BoundaryScheme, GridSpec};

/// Relative discriminant below which a negative value is treated as round-off.
pub const DISCRIMINANT_SLACK: f64 = 1e-12;

/// `a2 g^2 + a1 g + a0 = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticCoeffs<T> {
    pub a2: T,
    pub a1: T,
    pub a0: T,
}

impl<T: Real> QuadraticCoeffs<T> {
    pub fn discriminant(&self) -> T {
        self.a1 * self.a1 - int::<T>(4) * self.a2 * self.a0
    }

    pub fn eval(&self, g: T) -> T {
        (self.a2 * g + self.a1) * g + self.a0
    }

    fn is_linear(&self) -> bool {
        self.a2 == T::zero()
            || (int::<T>(4) * self.a2 * self.a0).abs() <= lit::<T>(1e-14) * self.a1 * self.a1
    }

    fn sqrt_discriminant(&self) -> Result<T> {
        let d = self.discriminant();
        if d >= T::zero() {
            return Ok(d.sqrt());
        }
        if d > -lit::<T>(DISCRIMINANT_SLACK) * self.a1 * self.a1 {
            return Ok(T::zero());
        }
        Err(Error::NegativeDiscriminant {
            discriminant: d.to_f64().unwrap_or(f64::NAN),
        })
    }

    /// The other root `(-a1 + sqrt(D)) / (2 a2)`.
    pub fn plus_root(&self) -> Result<T> {
        let sd = self.sqrt_discriminant()?;
        Ok((-self.a1 + sd) / (int::<T>(2) * self.a2))
    }
}

/// Minus-branch root `(-a1 - sqrt(a1^2 - 4 a2 a0)) / (2 a2)`.
///
/// Falls back to `-a0 / a1` when the quadratic term vanishes.
pub fn boundary_velocity<T: Real>(q: &QuadraticCoeffs<T>) -> Result<T> {
    if q.is_linear() {
        if q.a1 == T::zero() {
            return Err(Error::NonFinite("degenerate velocity equation".into()));
        }
        return Ok(-q.a0 / q.a1);
    }
    let sd = q.sqrt_discriminant()?;
    let two = int::<T>(2);
    // Same root, written to avoid cancellation when a1 < 0.
    if q.a1 >= T::zero() {
        Ok((-q.a1 - sd) / (two * q.a2))
    } else if sd - q.a1 == T::zero() {
        Ok(T::zero())
    } else {
        Ok(two * q.a0 / (sd - q.a1))
    }
}

/// `Q` at the scheme nodes and how many radicands were clamped at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct QSamples<T> {
    pub values: Vec<T>,
    pub clamped: usize,
}

/// Outcome of one velocity evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityEstimate<T> {
    pub g: T,
    /// Weighted sum of the sampled `Q`.
    pub m: T,
    pub coeffs: QuadraticCoeffs<T>,
    pub clamped: usize,
}

/// Exercise boundary and its time derivatives at one time level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryState<T> {
    pub s_f: T,
    pub g: T,
    pub sf_prime: T,
    pub sf_second: T,
}

/// A boundary scheme bound to a grid and market, ready for repeated use.
#[derive(Debug, Clone)]
pub struct BoundaryEstimator<T> {
    params: MarketParams<T>,
    h: T,
    nodes: Vec<usize>,
    weights: Vec<T>,
    v: [T; 3],
    fourth_nodes: [usize; 4],
    fourth_weights: [T; 4],
    fourth_taylor: [T; 4],
}

fn node_index<T: Real>(offset: T, scale: usize, last: usize) -> Result<usize> {
    let f = offset.to_f64().unwrap_or(f64::NAN);
    let r = f.round();
    if !(r >= 1.0) || (f - r).abs() > 1e-12 * r.max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "node offset {f} is not a positive integer"
        )));
    }
    let index = r as usize * scale;
    if index > last {
        return Err(Error::NodeOutsideGrid {
            index,
            offset: f * scale as f64,
            last,
        });
    }
    Ok(index)
}

impl<T: Real> BoundaryEstimator<T> {
    /// Binds `scheme` (which must keep `f'`, `f''`, `f'''`) to `grid`.
    pub fn new(params: MarketParams<T>, grid: &GridSpec<T>, scheme: &BoundaryScheme<T>) -> Result<Self> {
        params.validate_for_free_boundary()?;
        let last = grid.interior();
        let nodes = scheme
            .nodes
            .iter()
            .map(|g| node_index(*g, 1, last))
            .collect::<Result<Vec<_>>>()?;
        let fourth = fourth_derivative_scheme::<T>()?;
        let mut fourth_nodes = [0usize; 4];
        for (slot, g) in fourth_nodes.iter_mut().zip(&fourth.nodes) {
            *slot = node_index(*g, 2, last)?;
        }
        let fw = &fourth.weights;
        let ft = &fourth.taylor;
        Ok(BoundaryEstimator {
            params,
            h: grid.h(),
            nodes,
            weights: scheme.weights.clone(),
            v: [scheme.v1(), scheme.v2(), scheme.v3()],
            fourth_nodes,
            fourth_weights: [fw[0], fw[1], fw[2], fw[3]],
            fourth_taylor: [ft[1], ft[2], ft[3], ft[4]],
        })
    }

    pub fn params(&self) -> &MarketParams<T> {
        &self.params
    }

    /// Grid indices of the scheme nodes.
    pub fn node_indices(&self) -> &[usize] {
        &self.nodes
    }

    fn q_at(&self, u: &[T], s_f: T, index: usize) -> (T, bool) {
        let x = int::<T>(index as i64) * self.h;
        q_transform_checked(u[index - 1], x, s_f, &self.params)
    }

    /// `Q(gamma_m h)` from the interior values `u` (node `i` at `u[i - 1]`).
    pub fn sample_q(&self, u: &[T], s_f: T) -> QSamples<T> {
        let mut clamped = 0;
        let values = self
            .nodes
            .iter()
            .map(|&i| {
                let (q, c) = self.q_at(u, s_f, i);
                clamped += c as usize;
                q
            })
            .collect();
        QSamples { values, clamped }
    }

    /// Coefficients of the velocity quadratic for a weighted `Q`-sum `m`.
    pub fn velocity_quadratic(&self, m: T) -> QuadraticCoeffs<T> {
        let p = &self.params;
        let (h, s, k) = (self.h, p.volatility, p.sqrt_re());
        let nu = drift_nu(p);
        let [v1, v2, v3] = self.v;
        let s3 = s * s * s;
        let s5 = s3 * s * s;
        let (two, three, four) = (int::<T>(2), int::<T>(3), int::<T>(4));
        let h2 = h * h;
        let h3 = h2 * h;
        QuadraticCoeffs {
            a2: two * h3 * v3 * k / (three * s5),
            a1: -two * h2 * v2 * k / (three * s3) + four * nu * h3 * v3 * k / (three * s5),
            a0: h * v1 * k / s - two * nu * h2 * v2 * k / (three * s3)
                + h3 * v3 * (two * nu * nu * k / (three * s5) + p.rate * k / (two * s3))
                - m,
        }
    }

    /// `v1 h Q'(0) + v2 h^2 Q''(0) + v3 h^3 Q'''(0)` at `beta = nu + g`.
    pub fn scheme_prediction(&self, g: T) -> T {
        let d = q_boundary_derivatives(&self.params, beta(&self.params, g))
            .expect("parameters validated at construction");
        let [v1, v2, v3] = self.v;
        let h = self.h;
        v1 * h * d.q1 + v2 * h * h * d.q2 + v3 * h * h * h * d.q3
    }

    /// `|prediction(g) - m| / (|m| + 1e-3)`; the offset keeps the measure
    /// bounded when `m` itself is tiny.
    pub fn residual(&self, g: T, m: T) -> T {
        (self.scheme_prediction(g) - m).abs() / (m.abs() + lit::<T>(1e-3))
    }

    /// Relative velocity `g` from the current interior values.
    pub fn velocity(&self, u: &[T], s_f: T) -> Result<VelocityEstimate<T>> {
        let mut m = T::zero();
        let mut clamped = 0;
        for (&i, &w) in self.nodes.iter().zip(&self.weights) {
            let (q, c) = self.q_at(u, s_f, i);
            clamped += c as usize;
            m += w * q;
        }
        if !m.is_finite() {
            return Err(Error::NonFinite("weighted Q sum".into()));
        }
        let coeffs = self.velocity_quadratic(m);
        let g = boundary_velocity(&coeffs)?;
        Ok(VelocityEstimate { g, m, coeffs, clamped })
    }

    /// `d^2 s_f / d tau^2` from the four-node scheme at `2h, 4h, 6h, 8h`.
    pub fn second_derivative_sf(&self, u: &[T], s_f: T, g: T) -> T {
        let p = &self.params;
        let b = beta(p, g);
        let d = q_boundary_derivatives(p, b).expect("parameters validated at construction");
        let xb = int::<T>(2) * self.h;
        let mut lhs = T::zero();
        for (&i, &w) in self.fourth_nodes.iter().zip(&self.fourth_weights) {
            lhs += w * self.q_at(u, s_f, i).0;
        }
        let [t1, t2, t3, t4] = self.fourth_taylor;
        let known = t1 * xb * d.q1 + t2 * xb.powi(2) * d.q2 + t3 * xb.powi(3) * d.q3;
        let q4 = (lhs - known) / (t4 * xb.powi(4));
        let beta_tau = beta_rate_from_q4(p, b, q4);
        s_f * (beta_tau + g * g)
    }

    /// Velocity plus both derivatives of `s_f`.
    pub fn boundary_state(&self, u: &[T], s_f: T) -> Result<BoundaryState<T>> {
        let v = self.velocity(u, s_f)?;
        Ok(BoundaryState {
            s_f,
            g: v.g,
            sf_prime: v.g * s_f,
            sf_second: self.second_derivative_sf(u, s_f, v.g),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{q_fourth_derivative, Preset};
    use crate::stencil::{scheme_a, scheme_b, scheme_c, NodeDistribution};

    fn estimator(gamma: &str, h: f64, preset: Preset) -> BoundaryEstimator<f64> {
        let d = NodeDistribution::parse(gamma).unwrap();
        let s = if d.len() == 5 { scheme_a(&d) } else { scheme_c(&d) }.unwrap();
        let grid = GridSpec::from_step(3.0, h).unwrap();
        BoundaryEstimator::new(preset.params(), &grid, &s).unwrap()
    }

    /// Interior `u` whose `Q` is the quartic Taylor polynomial at `beta`.
    fn manufactured(est: &BoundaryEstimator<f64>, n: usize, s_f: f64, g: f64, beta_tau: f64) -> Vec<f64> {
        let p = est.params;
        let b = beta(&p, g);
        let d = q_boundary_derivatives(&p, b).unwrap();
        let q4 = q_fourth_derivative(&p, b, beta_tau);
        (1..n)
            .map(|i| {
                let x = i as f64 * est.h;
                let q = d.q1 * x + d.q2 * x * x / 2.0 + d.q3 * x.powi(3) / 6.0 + q4 * x.powi(4) / 24.0;
                q * q + p.strike - x.exp() * s_f
            })
            .collect()
    }

    #[test]
    fn quadratic_examples() {
        let q = QuadraticCoeffs::<f64> { a2: 1.0, a1: 0.0, a0: -4.0 };
        assert!((boundary_velocity(&q).unwrap() + 2.0).abs() < 1e-15);
        assert!((q.plus_root().unwrap() - 2.0).abs() < 1e-15);
        let q = QuadraticCoeffs::<f64> { a2: 1.0, a1: 3.0, a0: 2.0 };
        assert!((boundary_velocity(&q).unwrap() + 2.0).abs() < 1e-15);
        let q = QuadraticCoeffs::<f64> { a2: 1.0, a1: -3.0, a0: 2.0 };
        assert!((boundary_velocity(&q).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn discriminant_clamp_and_failure() {
        // a1^2 = 4, 4 a2 a0 = 4 + 1e-30.
        let q = QuadraticCoeffs::<f64> { a2: 1.0, a1: 2.0, a0: 1.0 + 2.5e-31 };
        assert!((boundary_velocity(&q).unwrap() + 1.0).abs() < 1e-15);
        let q = QuadraticCoeffs::<f64> { a2: 1.0, a1: 2.0, a0: 2.0 };
        assert!(matches!(boundary_velocity(&q), Err(Error::NegativeDiscriminant { .. })));
    }

    #[test]
    fn linear_fallback() {
        let q = QuadraticCoeffs { a2: 0.0, a1: 2.0, a0: 3.0 };
        assert_eq!(boundary_velocity(&q).unwrap(), -1.5);
        let d = NodeDistribution::parse("2,3,4,5").unwrap();
        let s = scheme_b(&d).unwrap();
        let grid = GridSpec::from_step(3.0, 0.01).unwrap();
        let est = BoundaryEstimator::new(Preset::ExB.params(), &grid, &s).unwrap();
        let c = est.velocity_quadratic(0.3);
        assert!(c.a2.abs() < 1e-12 * c.a1.abs());
    }

    #[test]
    fn payoff_samples() {
        let est = estimator("2,3,4,5,6", 0.05, Preset::ExA);
        let u = vec![0.0; 59];
        let s = est.sample_q(&u, 100.0);
        assert_eq!(s.clamped, 0);
        for (q, g) in s.values.iter().zip([2.0, 3.0, 4.0, 5.0, 6.0]) {
            let want = 10.0 * ((g * 0.05f64).exp() - 1.0).sqrt();
            assert!((q - want).abs() < 1e-12);
        }
        // Intrinsic value everywhere and a boundary beyond the nodes: all clamped.
        let n = 60;
        let u: Vec<f64> = (1..n).map(|i| (100.0 - (i as f64 * 0.05).exp() * 80.0).max(0.0)).collect();
        assert_eq!(est.sample_q(&u, 80.0).values[0], 0.0);
    }

    #[test]
    fn manufactured_velocity_converges() {
        let g_star = -0.12;
        let mut errs = Vec::new();
        for h in [0.05, 0.025, 0.0125] {
            let est = estimator("2,3,4,5,6", h, Preset::ExA);
            let n = (3.0 / h).round() as usize;
            let u = manufactured(&est, n, 95.0, g_star, 0.4);
            let v = est.velocity(&u, 95.0).unwrap();
            assert!(est.residual(v.g, v.m) < 1e-9);
            errs.push((v.g - g_star).abs());
        }
        // Quartic Q: only truncation through order 4, which scheme_a kills.
        assert!(errs.iter().all(|e| *e < 1e-6), "{errs:?}");
    }

    #[test]
    fn residual_identity_and_branches() {
        for gamma in ["2,3,4,5,6", "2,4,6,8", "2,3,4,5"] {
            let est = estimator(gamma, 0.01, Preset::ExB);
            let u = manufactured(&est, 300, 80.0, -0.05, 0.0);
            let v = est.velocity(&u, 80.0).unwrap();
            assert!(est.residual(v.g, v.m) < 1e-9, "{gamma}");
            assert!((v.g + 0.05).abs() < 1e-4, "{gamma}: {}", v.g);
            let plus = v.coeffs.plus_root().unwrap();
            assert!(v.g <= plus);
        }
    }

    #[test]
    fn printed_coefficients_break_residual() {
        // Coefficients exactly as printed, with the unknown taken as ds_f/dt.
        let est = estimator("2,3,4,5", 0.01, Preset::ExB);
        let u = manufactured(&est, 300, 80.0, -0.05, 0.0);
        let v = est.velocity(&u, 80.0).unwrap();
        let p = est.params;
        let (h, s, k, r, sf) = (est.h, p.volatility, p.sqrt_re(), p.rate, 80.0);
        let [v1, v2, v3] = est.v;
        let nu = drift_nu(&p);
        let alpha = h.powi(3) * k / (3.0 * s.powi(5) * sf * sf) * v3;
        let varpi = -2.0 * h * h * k / (3.0 * s.powi(3) * sf) * v2 + 4.0 * h.powi(3) * k / (3.0 * s.powi(5) * sf) * v3;
        let kappa = -v.m + h * k / s * v1 - h * h * nu * k / (3.0 * s.powi(3)) * v2
            + 2.0 * h.powi(3) * nu * nu * k / (3.0 * s.powi(5)) * v3
            + h.powi(3) * r * k / (2.0 * s.powi(3)) * v3;
        let printed = QuadraticCoeffs { a2: alpha, a1: varpi, a0: kappa };
        let rate = boundary_velocity(&printed).unwrap();
        let g_printed = rate / sf;
        assert!(est.residual(g_printed, v.m) > 1e-3, "{}", est.residual(g_printed, v.m));
        assert!(est.residual(v.g, v.m) < 1e-9);
    }

    #[test]
    fn second_derivative_from_manufactured_q() {
        let (g, bt, sf) = (-0.07, 0.9, 85.0);
        let est = estimator("2,3,4,5", 0.01, Preset::ExB);
        let u = manufactured(&est, 300, sf, g, bt);
        let got = est.second_derivative_sf(&u, sf, g);
        let want = sf * (bt + g * g);
        assert!((got - want).abs() < 1e-6 * want.abs().max(1.0), "{got} vs {want}");
        // Stationary boundary: g = 0 and beta_tau = 0.
        let u = manufactured(&est, 300, sf, 0.0, 0.0);
        assert!(est.second_derivative_sf(&u, sf, 0.0).abs() < 1e-6 * 100.0);
    }

    #[test]
    fn grid_checks() {
        let d = NodeDistribution::parse("2,4,6,8,10").unwrap();
        let s = scheme_a(&d).unwrap();
        let tiny = GridSpec::<f64>::new(3.0, 12).unwrap();
        assert!(BoundaryEstimator::new(Preset::ExA.params(), &tiny, &s).is_ok());
        let d = NodeDistribution::parse("2.5,3,4,5,6").unwrap();
        let s = scheme_a(&d).unwrap();
        let g = GridSpec::from_step(3.0, 0.01).unwrap();
        assert!(BoundaryEstimator::new(Preset::ExA.params(), &g, &s).is_err());
        let d = NodeDistribution::parse("2,4,6,8,14").unwrap();
        let s = scheme_a(&d).unwrap();
        assert!(matches!(
            BoundaryEstimator::new(Preset::ExA.params(), &tiny, &s),
            Err(Error::NodeOutsideGrid { .. })
        ));
        let mut p = Preset::ExA.params::<f64>();
        p.rate = 0.0;
        let d = NodeDistribution::parse("2,3,4,5,6").unwrap();
        assert!(BoundaryEstimator::new(p, &g, &scheme_a(&d).unwrap()).is_err());
    }
}
