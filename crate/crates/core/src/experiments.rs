//! Run configuration and the reports behind each CLI subcommand.
//!
//! Every report renders to CSV with a fixed header. Wall-clock columns are
//! named `wall_s` so determinism checks can drop them.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;

use crate::compact::LhsVariant;
use crate::error::{Error, Result};
use crate::integrator::{solve, Method, SolveConfig, Solution, StepControl, StepStats};
use crate::market::{to_fixed_domain, MarketParams, Preset};
use crate::oracle::{convergence_errors, crr_american_put, reference_solution, BinomialConfig, ConvergenceErrors};
use crate::stencil::{certify_scheme, scheme_a, scheme_c, BoundaryScheme, GridSpec, NodeDistribution};

/// Staggered boundary family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Five nodes, `scheme_a`.
    Cs55,
    /// Four nodes, `scheme_a - scheme_b`.
    Cs54,
}

impl Family {
    pub fn parse(s: &str) -> Option<Family> {
        match s {
            "cs55" => Some(Family::Cs55),
            "cs54" => Some(Family::Cs54),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Cs55 => "cs55",
            Family::Cs54 => "cs54",
        }
    }

    pub fn node_count(self) -> usize {
        match self {
            Family::Cs55 => 5,
            Family::Cs54 => 4,
        }
    }

    pub fn default_gamma(self) -> &'static str {
        match self {
            Family::Cs55 => "2,3,4,5,6",
            Family::Cs54 => "2,3,4,5",
        }
    }
}

/// Builds the scheme for `family` on `gamma`.
pub fn build_scheme(family: Family, gamma: &NodeDistribution<f64>) -> Result<BoundaryScheme<f64>> {
    if gamma.len() != family.node_count() {
        return Err(Error::InvalidParameter(format!(
            "{} needs {} node offsets, got {}",
            family.name(),
            family.node_count(),
            gamma.len()
        )));
    }
    if gamma.integer_offsets().is_none() {
        return Err(Error::InvalidParameter("node offsets must be integers".into()));
    }
    match family {
        Family::Cs55 => scheme_a(gamma),
        Family::Cs54 => scheme_c(gamma),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodChoice {
    Bs32,
    Ssprk3,
}

/// Everything one solve needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: MarketParams<f64>,
    pub preset: Option<Preset>,
    pub x_max: f64,
    pub h: f64,
    pub family: Family,
    pub gamma: NodeDistribution<f64>,
    pub eps: f64,
    pub rho: f64,
    pub method: MethodChoice,
    pub k: f64,
    pub spots: Vec<f64>,
    pub variant: LhsVariant,
}

impl RunConfig {
    pub fn from_preset(preset: Preset) -> Self {
        RunConfig {
            params: preset.params(),
            preset: Some(preset),
            x_max: 3.0,
            h: 0.01,
            family: Family::Cs54,
            gamma: NodeDistribution::parse("2,3,4,5").expect("valid default"),
            eps: 1e-4,
            rho: 0.9,
            method: MethodChoice::Bs32,
            k: 1e-4,
            spots: vec![90.0, 100.0, 110.0],
            variant: LhsVariant::B5,
        }
    }

    pub fn grid(&self) -> Result<GridSpec<f64>> {
        GridSpec::from_step(self.x_max, self.h)
    }

    pub fn scheme(&self) -> Result<BoundaryScheme<f64>> {
        build_scheme(self.family, &self.gamma)
    }

    pub fn solve_config(&self) -> SolveConfig<f64> {
        let control = StepControl::for_maturity(self.params.maturity, self.eps, self.rho);
        let method = match self.method {
            MethodChoice::Bs32 => Method::Bs32,
            MethodChoice::Ssprk3 => Method::Ssprk3 { k: self.k },
        };
        SolveConfig {
            method,
            control,
            variant: self.variant,
        }
    }

    /// Checks every configuration-level invariant before any solve.
    pub fn validate(&self) -> Result<()> {
        self.params.validate_for_free_boundary()?;
        let grid = self.grid()?;
        let scheme = self.scheme()?;
        crate::free_boundary::BoundaryEstimator::new(self.params, &grid, &scheme)?;
        self.solve_config().control.validate()?;
        if self.method == MethodChoice::Ssprk3 && !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::InvalidParameter(format!("fixed step must be > 0, got {}", self.k)));
        }
        if self.spots.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidParameter("spots must be positive".into()));
        }
        Ok(())
    }

    pub fn run(&self) -> Result<Solution<f64>> {
        self.validate()?;
        solve(self.params, self.grid()?, &self.scheme()?, &self.solve_config())
    }

    pub fn label(&self) -> String {
        let g: Vec<String> = self.gamma.as_slice().iter().map(|g| format!("{g}")).collect();
        format!("{}({})", self.family.name(), g.join(","))
    }
}

/// Lagrange interpolation through `(xs[i], ys[i])`.
pub fn lagrange(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let mut s = 0.0;
    for (i, (&xi, &yi)) in xs.iter().zip(ys).enumerate() {
        let mut l = 1.0;
        for (j, &xj) in xs.iter().enumerate() {
            if j != i {
                l *= (x - xj) / (xi - xj);
            }
        }
        s += l * yi;
    }
    s
}

/// Price and delta at one spot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Readout {
    pub spot: f64,
    pub price: f64,
    pub delta: f64,
}

/// Degree-6 interpolation of the terminal `U` and `W` at `ln(S / s_f)`.
pub fn readout(sol: &Solution<f64>, spot: f64) -> Result<Readout> {
    let s_f = sol.terminal.s_f;
    let x = to_fixed_domain(spot, s_f)?;
    if x <= 0.0 {
        return Ok(Readout {
            spot,
            price: sol.params.strike - spot,
            delta: -1.0,
        });
    }
    let grid = sol.grid;
    let n = grid.n_x();
    if x > grid.x_max() {
        return Err(Error::InvalidParameter(format!(
            "spot {spot} lies beyond the truncated domain"
        )));
    }
    let h = grid.h();
    let (u, w) = sol.nodal();
    let centre = (x / h).round() as usize;
    let lo = centre.saturating_sub(3).min(n - 6);
    let xs: Vec<f64> = (lo..lo + 7).map(|i| grid.x(i)).collect();
    Ok(Readout {
        spot,
        price: lagrange(&xs, &u[lo..lo + 7], x),
        delta: lagrange(&xs, &w[lo..lo + 7], x) / spot,
    })
}

/// Published lattice benchmarks for the preset spots.
pub fn paper_benchmark(preset: Preset, spot: f64) -> Option<f64> {
    if preset != Preset::ExC {
        return None;
    }
    [(90.0, 11.6976), (100.0, 6.9320), (110.0, 4.1550)]
        .into_iter()
        .find(|(s, _)| *s == spot)
        .map(|(_, v)| v)
}

fn fmt(x: f64) -> String {
    format!("{x:.10e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt).unwrap_or_default()
}

#[derive(Debug, Clone)]
pub struct PriceRow {
    pub readout: Readout,
    pub benchmark: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct PriceReport {
    pub rows: Vec<PriceRow>,
    pub s_f: f64,
    pub stats: StepStats<f64>,
}

pub fn price(cfg: &RunConfig) -> Result<PriceReport> {
    let sol = cfg.run()?;
    let rows = cfg
        .spots
        .iter()
        .map(|&s| {
            Ok(PriceRow {
                readout: readout(&sol, s)?,
                benchmark: cfg.preset.and_then(|p| paper_benchmark(p, s)),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PriceReport {
        rows,
        s_f: sol.terminal.s_f,
        stats: sol.stats,
    })
}

impl PriceReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("spot,price,delta,benchmark,abs_diff\n");
        for r in &self.rows {
            let diff = r.benchmark.map(|b| (r.readout.price - b).abs());
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                r.readout.spot,
                fmt(r.readout.price),
                fmt(r.readout.delta),
                opt(r.benchmark),
                opt(diff)
            );
        }
        s
    }
}

/// `log2(coarse / fine)`; `None` when either error is zero or non-finite.
pub fn rate(coarse: f64, fine: f64) -> Option<f64> {
    let r = (coarse / fine).log2();
    (coarse > 0.0 && fine > 0.0 && r.is_finite()).then_some(r)
}

#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub h: f64,
    pub errors: ConvergenceErrors<f64>,
    /// Rates against the previous (coarser) level.
    pub rates: [Option<f64>; 4],
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub label: String,
    pub h_reference: f64,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceReport {
    /// Rates of the finest pair, in column order.
    pub fn finest_rates(&self) -> [Option<f64>; 4] {
        self.rows.last().map(|r| r.rates).unwrap_or([None; 4])
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "h,err_u,rate_u,err_w,rate_w,err_sf,rate_sf,err_sfp,rate_sfp\n",
        );
        for r in &self.rows {
            let _ = write!(s, "{}", r.h);
            for (e, q) in r.errors.as_array().iter().zip(&r.rates) {
                let q = q.map(|v| format!("{v:.3}")).unwrap_or_else(|| "~".into());
                let _ = write!(s, ",{},{}", fmt(*e), q);
            }
            s.push('\n');
        }
        s
    }
}

/// Runs each ladder level and a reference `refine` times finer than the
/// finest level, all in parallel.
pub fn convergence(cfg: &RunConfig, ladder: &[f64], refine: usize) -> Result<ConvergenceReport> {
    if ladder.is_empty() || refine == 0 {
        return Err(Error::InvalidParameter("empty convergence ladder".into()));
    }
    for pair in ladder.windows(2) {
        if ((pair[0] / pair[1]) - 2.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter("ladder levels must halve h".into()));
        }
    }
    let finest = *ladder.last().expect("non-empty");
    let h_ref = finest / refine as f64;
    let scheme = cfg.scheme()?;
    let mut levels: Vec<f64> = ladder.to_vec();
    levels.push(h_ref);
    for &h in &levels {
        RunConfig { h, ..cfg.clone() }.validate()?;
    }
    let sc = cfg.solve_config();
    let sols = levels
        .par_iter()
        .enumerate()
        .map(|(i, &h)| {
            let grid = GridSpec::from_step(cfg.x_max, h)?;
            if i == levels.len() - 1 {
                reference_solution(cfg.params, grid, &scheme, &sc)
            } else {
                solve(cfg.params, grid, &scheme, &sc)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let reference = sols.last().expect("reference level");
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for (sol, &h) in sols.iter().zip(ladder) {
        let errors = convergence_errors(sol, reference)?;
        let rates = match rows.last() {
            Some(prev) => {
                let p = prev.errors.as_array();
                let e = errors.as_array();
                [0, 1, 2, 3].map(|j| rate(p[j], e[j]))
            }
            None => [None; 4],
        };
        rows.push(ConvergenceRow { h, errors, rates });
    }
    Ok(ConvergenceReport {
        label: cfg.label(),
        h_reference: h_ref,
        rows,
    })
}

/// CSV of `(tau, s_f, s_f', s_f'', k)` per accepted step.
pub fn boundary_csv(sol: &Solution<f64>) -> String {
    let mut s = String::from("tau,s_f,sf_prime,sf_second,k\n");
    for t in &sol.trajectory {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            fmt(t.tau),
            fmt(t.s_f),
            fmt(t.sf_prime),
            fmt(t.sf_second),
            fmt(t.k)
        );
    }
    s
}

#[derive(Debug, Clone)]
pub struct TimingRow {
    pub method: MethodChoice,
    pub eps: f64,
    pub rho: f64,
    pub k: f64,
    pub wall_s: f64,
    pub prices: Vec<f64>,
    pub stats: StepStats<f64>,
}

#[derive(Debug, Clone)]
pub struct TimingReport {
    pub spots: Vec<f64>,
    pub rows: Vec<TimingRow>,
}

fn timed(cfg: &RunConfig) -> Result<TimingRow> {
    cfg.validate()?;
    let (grid, scheme, sc) = (cfg.grid()?, cfg.scheme()?, cfg.solve_config());
    let start = Instant::now();
    let sol = solve(cfg.params, grid, &scheme, &sc)?;
    let wall_s = start.elapsed().as_secs_f64();
    let prices = cfg
        .spots
        .iter()
        .map(|&s| readout(&sol, s).map(|r| r.price))
        .collect::<Result<Vec<_>>>()?;
    Ok(TimingRow {
        method: cfg.method,
        eps: cfg.eps,
        rho: cfg.rho,
        k: cfg.k,
        wall_s,
        prices,
        stats: sol.stats,
    })
}

/// Adaptive runs for every `rho`, then fixed-step runs for every `k`.
/// Cells run one after another so wall times do not compete for cores.
pub fn timing(cfg: &RunConfig, rhos: &[f64], ks: &[f64]) -> Result<TimingReport> {
    let mut rows = Vec::new();
    for &rho in rhos {
        rows.push(timed(&RunConfig { rho, method: MethodChoice::Bs32, ..cfg.clone() })?);
    }
    for &k in ks {
        rows.push(timed(&RunConfig { k, method: MethodChoice::Ssprk3, ..cfg.clone() })?);
    }
    Ok(TimingReport {
        spots: cfg.spots.clone(),
        rows,
    })
}

impl TimingReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("method,eps,rho,k,accepted,rejected,rhs_evals,k_min,k_avg,k_max");
        for sp in &self.spots {
            let _ = write!(s, ",price_{sp}");
        }
        s.push_str(",wall_s\n");
        for r in &self.rows {
            let (m, eps, rho, k) = match r.method {
                MethodChoice::Bs32 => ("bs32", fmt(r.eps), fmt(r.rho), String::new()),
                MethodChoice::Ssprk3 => ("ssprk3", String::new(), String::new(), fmt(r.k)),
            };
            let st = &r.stats;
            let _ = write!(
                s,
                "{m},{eps},{rho},{k},{},{},{},{},{},{}",
                st.accepted,
                st.rejected,
                st.rhs_evals,
                fmt(st.k_min),
                fmt(st.k_avg),
                fmt(st.k_max)
            );
            for p in &r.prices {
                let _ = write!(s, ",{}", fmt(*p));
            }
            let _ = writeln!(s, ",{:.6}", r.wall_s);
        }
        s
    }
}

/// Weights, kept derivative coefficients, truncation constant and
/// certification residuals of the configured scheme.
pub fn stencil_csv(cfg: &RunConfig) -> Result<String> {
    let scheme = cfg.scheme()?;
    let cert = certify_scheme(&scheme, 7);
    let mut s = String::from("quantity,value\n");
    let _ = writeln!(s, "w0,{}", fmt(scheme.w0));
    for (g, w) in scheme.nodes.iter().zip(&scheme.weights) {
        let _ = writeln!(s, "w@{g},{}", fmt(*w));
    }
    let _ = writeln!(s, "v1,{}", fmt(scheme.v1()));
    let _ = writeln!(s, "v2,{}", fmt(scheme.v2()));
    let _ = writeln!(s, "v3,{}", fmt(scheme.v3()));
    let _ = writeln!(s, "C,{}", fmt(scheme.truncation_constant()));
    for d in &cert.degrees {
        let _ = writeln!(s, "residual_deg{},{}", d.degree, fmt(d.residual));
    }
    Ok(s)
}

/// CRR prices at every spot.
pub fn oracle_csv(params: &MarketParams<f64>, spots: &[f64], steps: usize) -> Result<String> {
    let cfg = BinomialConfig { steps };
    let prices = spots
        .par_iter()
        .map(|&s| crr_american_put(params, s, cfg))
        .collect::<Result<Vec<_>>>()?;
    let mut s = String::from("spot,crr_price,steps\n");
    for (sp, p) in spots.iter().zip(prices) {
        let _ = writeln!(s, "{sp},{},{steps}", fmt(p));
    }
    Ok(s)
}
