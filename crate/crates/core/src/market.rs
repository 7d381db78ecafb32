//! Market parameters, the front-fixing change of variable and the
//! square-root transform of the option value near the exercise boundary.
//!
//! Time is always time-to-maturity `tau` in `[0, T]`. The transformed
//! coordinate is `x = ln S - ln s_f(tau)`, so the exercise boundary sits at
//! `x = 0` and the continuation region is `x > 0`.

use crate::error::{Error, Result};
use crate::scalar::{int, lit, Real};

/// Contract and market data for an American put.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketParams<T> {
    pub strike: T,
    pub rate: T,
    pub volatility: T,
    pub maturity: T,
}

/// Named parameter sets used throughout the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    /// Short maturity: E = 100, r = 0.05, sigma = 0.2, T = 0.5.
    ExA,
    /// Medium maturity: E = 100, r = 0.1, sigma = 0.3, T = 1.
    ExB,
    /// Long maturity: E = 100, r = 0.08, sigma = 0.2, T = 3.
    ExC,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::ExA, Preset::ExB, Preset::ExC];

    pub fn name(self) -> &'static str {
        match self {
            Preset::ExA => "ex-a",
            Preset::ExB => "ex-b",
            Preset::ExC => "ex-c",
        }
    }

    pub fn parse(name: &str) -> Option<Preset> {
        Preset::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn params<T: Real>(self) -> MarketParams<T> {
        let (e, r, s, t) = match self {
            Preset::ExA => (100.0, 0.05, 0.2, 0.5),
            Preset::ExB => (100.0, 0.1, 0.3, 1.0),
            Preset::ExC => (100.0, 0.08, 0.2, 3.0),
        };
        MarketParams {
            strike: lit(e),
            rate: lit(r),
            volatility: lit(s),
            maturity: lit(t),
        }
    }
}

impl<T: Real> MarketParams<T> {
    /// Validates `E > 0`, `sigma > 0`, `T > 0`, `r >= 0`.
    pub fn new(strike: T, rate: T, volatility: T, maturity: T) -> Result<Self> {
        let p = MarketParams {
            strike,
            rate,
            volatility,
            maturity,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.strike, self.rate, self.volatility, self.maturity]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParameter("market parameters must be finite".into()));
        }
        if self.strike <= T::zero() {
            return Err(Error::InvalidParameter(format!("strike must be > 0, got {}", self.strike)));
        }
        if self.volatility <= T::zero() {
            return Err(Error::InvalidParameter(format!(
                "volatility must be > 0, got {}",
                self.volatility
            )));
        }
        if self.maturity <= T::zero() {
            return Err(Error::InvalidParameter(format!(
                "maturity must be > 0, got {}",
                self.maturity
            )));
        }
        if self.rate < T::zero() {
            return Err(Error::InvalidParameter(format!("rate must be >= 0, got {}", self.rate)));
        }
        Ok(())
    }

    /// Extra check for the free-boundary solve: every boundary formula is
    /// built from `sqrt(r E)`, so `r = 0` is unusable there.
    pub fn validate_for_free_boundary(&self) -> Result<()> {
        self.validate()?;
        if self.rate <= T::zero() {
            return Err(Error::InvalidParameter(
                "rate must be > 0 for the free-boundary solve".into(),
            ));
        }
        Ok(())
    }

    /// `sqrt(r E)`, the scale of every boundary derivative of `Q`.
    #[inline]
    pub fn sqrt_re(&self) -> T {
        (self.rate * self.strike).sqrt()
    }
}

/// Risk-neutral log drift `nu = r - sigma^2 / 2`.
#[inline]
pub fn drift_nu<T: Real>(p: &MarketParams<T>) -> T {
    p.rate - p.volatility * p.volatility / int(2)
}

/// Convection coefficient of the transformed model, `beta = nu + g` where
/// `g = s_f' / s_f` is the relative boundary velocity.
#[inline]
pub fn beta<T: Real>(p: &MarketParams<T>, g: T) -> T {
    drift_nu(p) + g
}

/// Log-moneyness relative to the exercise boundary.
pub fn to_fixed_domain<T: Real>(spot: T, s_f: T) -> Result<T> {
    if !(spot > T::zero()) || !(s_f > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "spot and boundary must be positive, got S = {spot}, s_f = {s_f}"
        )));
    }
    Ok((spot / s_f).ln())
}

/// Inverse of [`to_fixed_domain`].
#[inline]
pub fn from_fixed_domain<T: Real>(x: T, s_f: T) -> T {
    x.exp() * s_f
}

/// Square-root transform `Q = sqrt(U - E + e^x s_f)`.
///
/// Returns the value and whether the radicand had to be clamped at zero.
#[inline]
pub fn q_transform_checked<T: Real>(u: T, x: T, s_f: T, p: &MarketParams<T>) -> (T, bool) {
    let radicand = u - p.strike + x.exp() * s_f;
    if radicand < T::zero() {
        (T::zero(), true)
    } else {
        (radicand.sqrt(), false)
    }
}

/// Square-root transform with the radicand clamped at zero.
#[inline]
pub fn q_transform<T: Real>(u: T, x: T, s_f: T, p: &MarketParams<T>) -> T {
    q_transform_checked(u, x, s_f, p).0
}

/// `Q` and its first three `x`-derivatives at the boundary `x = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryDerivatives<T> {
    pub q0: T,
    pub q1: T,
    pub q2: T,
    pub q3: T,
}

/// Closed-form boundary derivatives of `Q` for a given `beta`.
pub fn q_boundary_derivatives<T: Real>(p: &MarketParams<T>, beta: T) -> Result<BoundaryDerivatives<T>> {
    if !(p.rate > T::zero()) {
        return Err(Error::InvalidParameter("boundary derivatives need r > 0".into()));
    }
    let s = p.volatility;
    let s3 = s * s * s;
    let s5 = s3 * s * s;
    let k = p.sqrt_re();
    let two = int::<T>(2);
    let three = int::<T>(3);
    Ok(BoundaryDerivatives {
        q0: T::zero(),
        q1: k / s,
        q2: -two * beta * k / (three * s3),
        q3: two * beta * beta * k / (three * s5) + p.rate * k / (two * s3),
    })
}

/// Fourth boundary derivative of `Q`, obtained by differentiating the
/// transformed PDE three times at `x = 0`:
///
/// `Q''''(0) = -(4/5) sqrt(rE) beta_tau / sigma^5 - (14/15) r beta sqrt(rE) / sigma^5
///             - (32/45) beta^3 sqrt(rE) / sigma^7`
///
/// with `beta_tau = d beta / d tau = s_f''/s_f - (s_f'/s_f)^2`.
pub fn q_fourth_derivative<T: Real>(p: &MarketParams<T>, beta: T, beta_tau: T) -> T {
    let s = p.volatility;
    let s5 = s.powi(5);
    let s7 = s.powi(7);
    let k = p.sqrt_re();
    -(lit::<T>(0.8)) * k * beta_tau / s5
        - int::<T>(14) / int::<T>(15) * p.rate * beta * k / s5
        - int::<T>(32) / int::<T>(45) * beta.powi(3) * k / s7
}

/// Solves [`q_fourth_derivative`] for `beta_tau`.
pub fn beta_rate_from_q4<T: Real>(p: &MarketParams<T>, beta: T, q4: T) -> T {
    let s = p.volatility;
    let s5 = s.powi(5);
    let s7 = s.powi(7);
    let k = p.sqrt_re();
    let rest = int::<T>(14) / int::<T>(15) * p.rate * beta * k / s5
        + int::<T>(32) / int::<T>(45) * beta.powi(3) * k / s7;
    -(q4 + rest) * s5 / (lit::<T>(0.8) * k)
}
