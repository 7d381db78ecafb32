//! Independent reference prices: a Cox-Ross-Rubinstein lattice and a
//! fine-grid self-reference for convergence studies.

use crate::error::{Error, Result};
use crate::integrator::{solve, Method, SolveConfig, Solution};
use crate::market::MarketParams;
use crate::scalar::{int, Real};
use crate::stencil::{BoundaryScheme, GridSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinomialConfig {
    pub steps: usize,
}

impl Default for BinomialConfig {
    fn default() -> Self {
        BinomialConfig { steps: 15_000 }
    }
}

/// American put on a CRR lattice with early exercise at every node.
pub fn crr_american_put<T: Real>(p: &MarketParams<T>, s0: T, cfg: BinomialConfig) -> Result<T> {
    p.validate()?;
    if !(s0 > T::zero()) || !s0.is_finite() {
        return Err(Error::InvalidParameter(format!("spot must be > 0, got {s0}")));
    }
    let n = cfg.steps;
    if n == 0 {
        return Err(Error::InvalidParameter("binomial tree needs at least one step".into()));
    }
    let dt = p.maturity / int::<T>(n as i64);
    let up = (p.volatility * dt.sqrt()).exp();
    let down = T::one() / up;
    let q = ((p.rate * dt).exp() - down) / (up - down);
    if !(q > T::zero() && q < T::one()) {
        return Err(Error::InvalidProbability {
            q: q.to_f64().unwrap_or(f64::NAN),
        });
    }
    let disc = (-p.rate * dt).exp();
    let (pu, pd) = (disc * q, disc * (T::one() - q));
    let up2 = up * up;
    let e = p.strike;
    let mut s = s0 * down.powi(n as i32);
    let mut v: Vec<T> = (0..=n)
        .map(|_| {
            let x = (e - s).max(T::zero());
            s *= up2;
            x
        })
        .collect();
    for i in (0..n).rev() {
        let mut s = s0 * down.powi(i as i32);
        for j in 0..=i {
            let cont = pu * v[j + 1] + pd * v[j];
            v[j] = cont.max(e - s);
            s *= up2;
        }
    }
    Ok(v[0])
}

/// Max-norm differences between a coarse run and a finer reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceErrors<T> {
    pub u: T,
    pub w: T,
    pub s_f: T,
    pub sf_prime: T,
}

impl<T: Real> ConvergenceErrors<T> {
    pub fn as_array(&self) -> [T; 4] {
        [self.u, self.w, self.s_f, self.sf_prime]
    }
}

/// Errors of `coarse` against `reference` on the nodes both grids share.
pub fn convergence_errors<T: Real>(coarse: &Solution<T>, reference: &Solution<T>) -> Result<ConvergenceErrors<T>> {
    let (nc, nf) = (coarse.grid.n_x(), reference.grid.n_x());
    let same_domain = (coarse.grid.x_max() - reference.grid.x_max()).abs()
        <= T::epsilon() * int::<T>(16) * coarse.grid.x_max();
    if !same_domain || nf < nc || nf % nc != 0 {
        return Err(Error::InvalidParameter(format!(
            "reference grid ({nf} cells) is not an integer refinement of {nc} cells"
        )));
    }
    let stride = nf / nc;
    let (uc, wc) = coarse.nodal();
    let (uf, wf) = reference.nodal();
    let diff = |a: &[T], b: &[T]| {
        a.iter()
            .enumerate()
            .fold(T::zero(), |m, (i, x)| m.max((*x - b[i * stride]).abs()))
    };
    let fp = |s: &Solution<T>| s.last().map(|t| t.sf_prime).unwrap_or_else(T::zero);
    Ok(ConvergenceErrors {
        u: diff(&uc, &uf),
        w: diff(&wc, &wf),
        s_f: (coarse.terminal.s_f - reference.terminal.s_f).abs(),
        sf_prime: (fp(coarse) - fp(reference)).abs(),
    })
}

/// Runs the solver on `fine` as the error denominator; adaptive runs get a
/// tolerance 100 times tighter.
pub fn reference_solution<T: Real>(
    p: MarketParams<T>,
    fine: GridSpec<T>,
    scheme: &BoundaryScheme<T>,
    cfg: &SolveConfig<T>,
) -> Result<Solution<T>> {
    let mut cfg = *cfg;
    if cfg.method == Method::Bs32 {
        cfg.control.eps = cfg.control.eps / int::<T>(100);
    }
    solve(p, fine, scheme, &cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::Preset;

    #[test]
    fn intrinsic_limit() {
        let p = MarketParams::<f64>::new(100.0, 0.0, 0.001, 1.0).unwrap();
        let v = crr_american_put(&p, 80.0, BinomialConfig { steps: 200 }).unwrap();
        assert!((v - 20.0).abs() < 1e-9);
    }

    #[test]
    fn bounds_and_monotonicity() {
        let p = Preset::ExC.params::<f64>();
        let cfg = BinomialConfig { steps: 400 };
        let mut prev = f64::INFINITY;
        for s in [60.0, 80.0, 90.0, 100.0, 120.0, 160.0] {
            let v = crr_american_put(&p, s, cfg).unwrap();
            assert!(v <= prev + 1e-12);
            assert!(v >= (100.0 - s).max(0.0) - 1e-12 && v <= 100.0);
            prev = v;
        }
    }

    #[test]
    fn one_step_by_hand() {
        let p = MarketParams::new(100.0, 0.05, 0.2, 1.0).unwrap();
        let v = crr_american_put(&p, 100.0, BinomialConfig { steps: 1 }).unwrap();
        let (u, d) = (0.2f64.exp(), (-0.2f64).exp());
        let q = (0.05f64.exp() - d) / (u - d);
        let cont = (-0.05f64).exp() * (1.0 - q) * (100.0 - 100.0 * d);
        assert!((v - cont.max(0.0)).abs() < 1e-12);
    }

    #[test]
    fn invalid_inputs() {
        let p = Preset::ExC.params::<f64>();
        assert!(crr_american_put(&p, -1.0, BinomialConfig::default()).is_err());
        assert!(crr_american_put(&p, 100.0, BinomialConfig { steps: 0 }).is_err());
        // r dt large against sigma sqrt(dt) pushes q above one.
        let p = MarketParams::new(100.0, 0.5, 0.01, 1.0).unwrap();
        assert!(matches!(
            crr_american_put(&p, 100.0, BinomialConfig { steps: 4 }),
            Err(Error::InvalidProbability { .. })
        ));
    }
}
