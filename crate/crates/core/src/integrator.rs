//! Method-of-lines time stepping for `(u, w, s_f)`.
//!
//! The steppers are written against the small [`OdeState`] / [`Rhs`] pair so
//! the same code runs on scalar test problems and on the full front-fixing
//! system.

use num_traits::Float;

use crate::compact::{BoundaryValues, CompactSystem, LhsVariant};
use crate::error::{Error, Result};
use crate::free_boundary::BoundaryEstimator;
use crate::market::{beta, MarketParams};
use crate::scalar::{int, lit, Real};
use crate::stencil::{BoundaryScheme, GridSpec};

/// A state vector the Runge-Kutta steppers can combine.
pub trait OdeState<T>: Clone {
    /// `self + sum_i c_i x_i`.
    fn combine(&self, terms: &[(T, &Self)]) -> Self;
    /// Componentwise error measures of `self - other`; the controller uses
    /// their maximum.
    fn error(&self, other: &Self) -> [T; 3];
    fn is_finite(&self) -> bool;
}

/// Right-hand side `y' = L(y)`.
pub trait Rhs<T, S> {
    fn eval(&self, y: &S) -> Result<S>;
}

impl<T: Real> OdeState<T> for T {
    fn combine(&self, terms: &[(T, &Self)]) -> Self {
        terms.iter().fold(*self, |acc, (c, x)| acc + *c * **x)
    }

    fn error(&self, other: &Self) -> [T; 3] {
        [(*self - *other).abs(), T::zero(), T::zero()]
    }

    fn is_finite(&self) -> bool {
        Float::is_finite(*self)
    }
}

impl<T, F> Rhs<T, T> for F
where
    T: Real,
    F: Fn(T) -> T,
{
    fn eval(&self, y: &T) -> Result<T> {
        Ok(self(*y))
    }
}

/// Option value, delta and boundary at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontState<T> {
    pub u: Vec<T>,
    pub w: Vec<T>,
    pub s_f: T,
}

fn max_abs_diff<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |m, (x, y)| m.max((*x - *y).abs()))
}

impl<T: Real> OdeState<T> for FrontState<T> {
    fn combine(&self, terms: &[(T, &Self)]) -> Self {
        let mut u = self.u.clone();
        let mut w = self.w.clone();
        let mut s_f = self.s_f;
        for (c, x) in terms {
            for (a, b) in u.iter_mut().zip(&x.u) {
                *a += *c * *b;
            }
            for (a, b) in w.iter_mut().zip(&x.w) {
                *a += *c * *b;
            }
            s_f += *c * x.s_f;
        }
        FrontState { u, w, s_f }
    }

    fn error(&self, other: &Self) -> [T; 3] {
        [
            max_abs_diff(&self.u, &other.u),
            max_abs_diff(&self.w, &other.w),
            (self.s_f - other.s_f).abs(),
        ]
    }

    fn is_finite(&self) -> bool {
        Float::is_finite(self.s_f)
            && self.u.iter().all(|v| v.is_finite())
            && self.w.iter().all(|v| v.is_finite())
    }
}

/// Semi-discrete front-fixing operator.
#[derive(Debug, Clone)]
pub struct FrontRhs<T> {
    params: MarketParams<T>,
    system: CompactSystem<T>,
    estimator: BoundaryEstimator<T>,
}

impl<T: Real> FrontRhs<T> {
    pub fn new(
        params: MarketParams<T>,
        grid: GridSpec<T>,
        scheme: &BoundaryScheme<T>,
        variant: LhsVariant,
    ) -> Result<Self> {
        let estimator = BoundaryEstimator::new(params, &grid, scheme)?;
        let system = CompactSystem::assemble(grid, variant)?;
        Ok(FrontRhs {
            params,
            system,
            estimator,
        })
    }

    pub fn system(&self) -> &CompactSystem<T> {
        &self.system
    }

    pub fn estimator(&self) -> &BoundaryEstimator<T> {
        &self.estimator
    }

    /// Payoff state: `u = w = 0`, `s_f = E`.
    pub fn initial_state(&self) -> FrontState<T> {
        let n = self.system.grid().interior();
        FrontState {
            u: vec![T::zero(); n],
            w: vec![T::zero(); n],
            s_f: self.params.strike,
        }
    }
}

impl<T: Real> Rhs<T, FrontState<T>> for FrontRhs<T> {
    fn eval(&self, y: &FrontState<T>) -> Result<FrontState<T>> {
        let p = &self.params;
        let g = self.estimator.velocity(&y.u, y.s_f)?.g;
        let b = beta(p, g);
        let n = y.u.len();
        let mut du = vec![T::zero(); n];
        let mut dw = vec![T::zero(); n];
        self.system
            .second_derivative_into(&y.u, BoundaryValues::left(p.strike - y.s_f), &mut du);
        self.system
            .second_derivative_into(&y.w, BoundaryValues::left(-y.s_f), &mut dw);
        let half_s2 = p.volatility * p.volatility / int::<T>(2);
        let mut lu = vec![T::zero(); n];
        for i in 0..n {
            lu[i] = half_s2 * du[i] + b * y.w[i] - p.rate * y.u[i];
        }
        for i in 0..n {
            dw[i] = half_s2 * dw[i] + b * du[i] - p.rate * y.w[i];
        }
        Ok(FrontState {
            u: lu,
            w: dw,
            s_f: g * y.s_f,
        })
    }
}

/// Result of one Bogacki-Shampine attempt.
#[derive(Debug, Clone)]
pub struct Bs32Proposal<S, T> {
    /// Third-order solution.
    pub y: S,
    /// `L(y)`, reusable as the first stage of the next step.
    pub last_stage: S,
    /// `|third - embedded|` for `u`, `w`, `s_f`.
    pub errors: [T; 3],
}

/// One step of the 3(2) pair. `k1 = L(y)` is supplied by the caller.
pub fn bs32_step<T: Real, S: OdeState<T>, R: Rhs<T, S>>(
    rhs: &R,
    y: &S,
    k1: &S,
    k: T,
) -> Result<Bs32Proposal<S, T>> {
    let half = lit::<T>(0.5);
    let three_q = lit::<T>(0.75);
    let k2 = rhs.eval(&y.combine(&[(half * k, k1)]))?;
    let k3 = rhs.eval(&y.combine(&[(three_q * k, &k2)]))?;
    let c = |n: i64, d: i64| int::<T>(n) / int::<T>(d) * k;
    let y3 = y.combine(&[(c(2, 9), k1), (c(1, 3), &k2), (c(4, 9), &k3)]);
    let k4 = rhs.eval(&y3)?;
    let y2 = y.combine(&[(c(7, 24), k1), (c(6, 24), &k2), (c(8, 24), &k3), (c(3, 24), &k4)]);
    let errors = y3.error(&y2);
    Ok(Bs32Proposal {
        y: y3,
        last_stage: k4,
        errors,
    })
}

/// Shu-Osher three-stage SSPRK3.
pub fn ssprk3_step<T: Real, S: OdeState<T>, R: Rhs<T, S>>(rhs: &R, y: &S, k: T) -> Result<S> {
    let y1 = y.combine(&[(k, &rhs.eval(y)?)]);
    let l1 = rhs.eval(&y1)?;
    let q = lit::<T>(0.25);
    let y2 = y.combine(&[(-q, y), (q, &y1), (q * k, &l1)]);
    let l2 = rhs.eval(&y2)?;
    let t = int::<T>(1) / int::<T>(3);
    Ok(y.combine(&[(-int::<T>(2) * t, y), (int::<T>(2) * t, &y2), (int::<T>(2) * t * k, &l2)]))
}

/// Which error exponent goes with accepted and rejected steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExponentRule {
    /// `1/2` after acceptance, `1/3` after rejection.
    #[default]
    Paper,
    /// `1/3` after acceptance, `1/2` after rejection.
    Swapped,
}

/// Step-size controller settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl<T> {
    pub eps: T,
    pub rho: T,
    pub k_init: T,
    pub k_min: T,
    pub k_max: T,
    pub max_rejects: usize,
    pub exponents: ExponentRule,
}

impl<T: Real> StepControl<T> {
    /// Defaults for maturity `t`: `k_max = t / 10`, `k_init = min(1e-2, k_max)`.
    pub fn for_maturity(t: T, eps: T, rho: T) -> Self {
        let k_max = t / int::<T>(10);
        StepControl {
            eps,
            rho,
            k_init: lit::<T>(1e-2).min(k_max),
            k_min: lit::<T>(1e-12),
            k_max,
            max_rejects: 50,
            exponents: ExponentRule::Paper,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.eps > T::zero()
            && self.rho > T::zero()
            && self.rho < T::one()
            && self.k_min > T::zero()
            && self.k_min <= self.k_init
            && self.k_init <= self.k_max
            && self.max_rejects > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "inconsistent step control: eps = {}, rho = {}, k in [{}, {}], k_init = {}",
                self.eps, self.rho, self.k_min, self.k_max, self.k_init
            )))
        }
    }
}

/// Accept/reject decision and the next step size.
pub fn adapt_step<T: Real>(errors: [T; 3], k_old: T, ctl: &StepControl<T>) -> (bool, T) {
    let e = errors[0].max(errors[1]).max(errors[2]);
    let half = lit::<T>(0.5);
    let third = int::<T>(1) / int::<T>(3);
    let (on_accept, on_reject) = match ctl.exponents {
        ExponentRule::Paper => (half, third),
        ExponentRule::Swapped => (third, half),
    };
    if !Float::is_finite(e) || e.is_nan() {
        return (false, (k_old * lit::<T>(0.25)).max(ctl.k_min));
    }
    let accept = e < ctl.eps;
    if e == T::zero() {
        return (true, ctl.k_max);
    }
    let expo = if accept { on_accept } else { on_reject };
    let k = ctl.rho * k_old * (ctl.eps / e).powf(expo);
    (accept, k.max(ctl.k_min).min(ctl.k_max))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method<T> {
    Bs32,
    Ssprk3 { k: T },
}

/// Everything `solve` needs besides the market, grid and scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveConfig<T> {
    pub method: Method<T>,
    pub control: StepControl<T>,
    pub variant: LhsVariant,
}

impl<T: Real> SolveConfig<T> {
    pub fn bs32(control: StepControl<T>) -> Self {
        SolveConfig {
            method: Method::Bs32,
            control,
            variant: LhsVariant::B5,
        }
    }

    pub fn ssprk3(maturity: T, k: T) -> Self {
        SolveConfig {
            method: Method::Ssprk3 { k },
            control: StepControl::for_maturity(maturity, lit(1e-4), lit(0.9)),
            variant: LhsVariant::B5,
        }
    }
}

/// Terminal state of a solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState<T> {
    pub u: Vec<T>,
    pub w: Vec<T>,
    pub s_f: T,
    pub tau: T,
    pub k: T,
}

/// One accepted step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint<T> {
    pub tau: T,
    pub k: T,
    pub s_f: T,
    pub sf_prime: T,
    pub sf_second: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats<T> {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    pub k_min: T,
    pub k_avg: T,
    pub k_max: T,
    /// Largest velocity residual over accepted states.
    pub max_residual: T,
    /// Largest controller error over accepted steps (zero for fixed steps).
    pub max_accepted_error: T,
    /// Largest single-step increase of `s_f` (non-positive for a monotone boundary).
    pub max_sf_increase: T,
    /// Accepted states where some `Q` radicand was clamped at zero.
    pub clamped_states: usize,
}

#[derive(Debug, Clone)]
pub struct Solution<T> {
    pub params: MarketParams<T>,
    pub grid: GridSpec<T>,
    pub terminal: SolverState<T>,
    pub trajectory: Vec<TrajectoryPoint<T>>,
    pub stats: StepStats<T>,
}

impl<T: Real> Solution<T> {
    /// Full nodal vectors `U_0..U_{n_x}` and `W_0..W_{n_x}` including the
    /// Dirichlet values.
    pub fn nodal(&self) -> (Vec<T>, Vec<T>) {
        let s = &self.terminal;
        let mut u = Vec::with_capacity(s.u.len() + 2);
        u.push(self.params.strike - s.s_f);
        u.extend_from_slice(&s.u);
        u.push(T::zero());
        let mut w = Vec::with_capacity(s.w.len() + 2);
        w.push(-s.s_f);
        w.extend_from_slice(&s.w);
        w.push(T::zero());
        (u, w)
    }

    pub fn last(&self) -> Option<&TrajectoryPoint<T>> {
        self.trajectory.last()
    }
}

struct Recorder<'a, T> {
    rhs: &'a FrontRhs<T>,
    trajectory: Vec<TrajectoryPoint<T>>,
    stats: StepStats<T>,
    k_sum: T,
}

impl<'a, T: Real> Recorder<'a, T> {
    fn new(rhs: &'a FrontRhs<T>) -> Self {
        Recorder {
            rhs,
            trajectory: Vec::new(),
            stats: StepStats {
                accepted: 0,
                rejected: 0,
                rhs_evals: 0,
                k_min: T::infinity(),
                k_avg: T::zero(),
                k_max: T::zero(),
                max_residual: T::zero(),
                max_accepted_error: T::zero(),
                max_sf_increase: T::neg_infinity(),
                clamped_states: 0,
            },
            k_sum: T::zero(),
        }
    }

    fn accept(&mut self, prev_sf: T, y: &FrontState<T>, tau: T, k: T) -> Result<()> {
        let est = self.rhs.estimator();
        let v = est.velocity(&y.u, y.s_f)?;
        let st = &mut self.stats;
        st.accepted += 1;
        st.k_min = st.k_min.min(k);
        st.k_max = st.k_max.max(k);
        self.k_sum += k;
        st.max_residual = st.max_residual.max(est.residual(v.g, v.m));
        st.max_sf_increase = st.max_sf_increase.max(y.s_f - prev_sf);
        st.clamped_states += (v.clamped > 0) as usize;
        self.trajectory.push(TrajectoryPoint {
            tau,
            k,
            s_f: y.s_f,
            sf_prime: v.g * y.s_f,
            sf_second: est.second_derivative_sf(&y.u, y.s_f, v.g),
        });
        Ok(())
    }

    fn finish(mut self, params: MarketParams<T>, y: FrontState<T>, tau: T, k: T) -> Solution<T> {
        if self.stats.accepted > 0 {
            self.stats.k_avg = self.k_sum / int::<T>(self.stats.accepted as i64);
        }
        Solution {
            params,
            grid: *self.rhs.system().grid(),
            terminal: SolverState {
                u: y.u,
                w: y.w,
                s_f: y.s_f,
                tau,
                k,
            },
            trajectory: self.trajectory,
            stats: self.stats,
        }
    }
}

/// Integrates from the payoff at `tau = 0` to `tau = T`.
pub fn solve<T: Real>(
    params: MarketParams<T>,
    grid: GridSpec<T>,
    scheme: &BoundaryScheme<T>,
    cfg: &SolveConfig<T>,
) -> Result<Solution<T>> {
    let rhs = FrontRhs::new(params, grid, scheme, cfg.variant)?;
    solve_with(&rhs, params, cfg)
}

/// [`solve`] on a prebuilt operator.
pub fn solve_with<T: Real>(rhs: &FrontRhs<T>, params: MarketParams<T>, cfg: &SolveConfig<T>) -> Result<Solution<T>> {
    match cfg.method {
        Method::Bs32 => solve_bs32(rhs, params, &cfg.control),
        Method::Ssprk3 { k } => solve_fixed(rhs, params, k),
    }
}

fn solve_fixed<T: Real>(rhs: &FrontRhs<T>, params: MarketParams<T>, k: T) -> Result<Solution<T>> {
    let t_end = params.maturity;
    if !(k > T::zero()) || !Float::is_finite(k) {
        return Err(Error::InvalidParameter(format!("fixed step must be > 0, got {k}")));
    }
    let ratio = (t_end / k).to_f64().unwrap_or(f64::NAN);
    let n = (ratio - 1e-9).ceil().max(1.0) as usize;
    let k = t_end / int::<T>(n as i64);
    let mut rec = Recorder::new(rhs);
    let mut y = rhs.initial_state();
    let mut tau = T::zero();
    for step in 1..=n {
        let next = ssprk3_step(rhs, &y, k)?;
        rec.stats.rhs_evals += 3;
        if !next.is_finite() {
            return Err(Error::NonFinite(format!("state after step {step}")));
        }
        tau = if step == n { t_end } else { int::<T>(step as i64) * k };
        let prev = y.s_f;
        y = next;
        rec.accept(prev, &y, tau, k)?;
    }
    Ok(rec.finish(params, y, tau, k))
}

fn solve_bs32<T: Real>(rhs: &FrontRhs<T>, params: MarketParams<T>, ctl: &StepControl<T>) -> Result<Solution<T>> {
    ctl.validate()?;
    let t_end = params.maturity;
    let mut rec = Recorder::new(rhs);
    let mut y = rhs.initial_state();
    let mut tau = T::zero();
    let mut k = ctl.k_init;
    let mut rejects = 0usize;
    let mut first: Option<FrontState<T>> = None;
    let close = lit::<T>(1e-12) * t_end;
    while tau < t_end {
        let remaining = t_end - tau;
        let last = k >= remaining - close;
        let step = if last { remaining } else { k };
        let k1 = match first.take() {
            Some(k1) => k1,
            None => {
                rec.stats.rhs_evals += 1;
                rhs.eval(&y)?
            }
        };
        let attempt = bs32_step(rhs, &y, &k1, step);
        rec.stats.rhs_evals += 3;
        let (accept, k_new, proposal) = match attempt {
            Ok(p) if p.y.is_finite() => {
                let (a, kn) = adapt_step(p.errors, step, ctl);
                (a, kn, Some(p))
            }
            _ => {
                let (a, kn) = adapt_step([T::infinity(); 3], step, ctl);
                (a, kn, None)
            }
        };
        match proposal {
            Some(p) if accept => {
                let err = p.errors[0].max(p.errors[1]).max(p.errors[2]);
                rec.stats.max_accepted_error = rec.stats.max_accepted_error.max(err);
                tau = if last { t_end } else { tau + step };
                let prev = y.s_f;
                y = p.y;
                rec.accept(prev, &y, tau, step)?;
                first = Some(p.last_stage);
                rejects = 0;
            }
            _ => {
                rec.stats.rejected += 1;
                rejects += 1;
                first = Some(k1);
                if rejects >= ctl.max_rejects {
                    return Err(Error::MaxRejects {
                        rejects,
                        tau: tau.to_f64().unwrap_or(f64::NAN),
                        k: step.to_f64().unwrap_or(f64::NAN),
                    });
                }
            }
        }
        k = k_new;
    }
    Ok(rec.finish(params, y, tau, k))
}
