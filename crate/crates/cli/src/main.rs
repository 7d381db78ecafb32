//! Command-line front end for the frontfix solver.

mod config;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use frontfix::experiments::{self, Family, MethodChoice, RunConfig};
use frontfix::{LhsVariant, MarketParams, NodeDistribution, Preset};

const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "frontfix", version, about = "Front-fixing compact solver for American puts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Price and delta at each spot.
    Price(Common),
    /// Error and rate table over a grid ladder.
    Convergence {
        #[command(flatten)]
        common: Common,
        /// Grid spacings, coarse to fine, each half the previous.
        #[arg(long)]
        ladder: Option<String>,
        /// Reference grid is this many times finer than the finest level.
        #[arg(long)]
        refine: Option<usize>,
    },
    /// Boundary trajectory per accepted step.
    Boundary(Common),
    /// Wall time of adaptive and fixed-step runs.
    Timing {
        #[command(flatten)]
        common: Common,
        /// Safety factors for the adaptive runs.
        #[arg(long)]
        rhos: Option<String>,
        /// Fixed steps for the SSPRK3 runs.
        #[arg(long)]
        ks: Option<String>,
    },
    /// Weights and certification of the boundary scheme.
    Stencil(Common),
    /// CRR lattice prices.
    Oracle {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        steps: Option<usize>,
    },
}

#[derive(Args, Debug, Default)]
struct Common {
    /// key=value file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// ex-a, ex-b or ex-c.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    strike: Option<f64>,
    #[arg(long)]
    rate: Option<f64>,
    #[arg(long)]
    vol: Option<f64>,
    #[arg(long)]
    maturity: Option<f64>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    xmax: Option<f64>,
    /// cs55 or cs54.
    #[arg(long)]
    scheme: Option<String>,
    /// Node offsets, e.g. 2,3,4,5.
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    /// bs32 or ssprk3.
    #[arg(long)]
    method: Option<String>,
    /// Fixed step for ssprk3.
    #[arg(long)]
    k: Option<f64>,
    #[arg(long)]
    spots: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Sixth-order near-boundary rows.
    #[arg(long)]
    b6: bool,
}

/// Flags layered over the config file.
struct Merged {
    settings: config::Settings,
}

impl Merged {
    fn new(common: &Common, extra: &[(&str, Option<String>)]) -> Result<Self, String> {
        let mut settings = match &common.config {
            Some(p) => config::load(p)?,
            None => config::Settings::new(),
        };
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                settings.insert(k.to_string(), v);
            }
        };
        put("preset", common.preset.clone());
        put("strike", common.strike.map(|v| v.to_string()));
        put("rate", common.rate.map(|v| v.to_string()));
        put("vol", common.vol.map(|v| v.to_string()));
        put("maturity", common.maturity.map(|v| v.to_string()));
        put("h", common.h.map(|v| v.to_string()));
        put("xmax", common.xmax.map(|v| v.to_string()));
        put("scheme", common.scheme.clone());
        put("gamma", common.gamma.clone());
        put("eps", common.eps.map(|v| v.to_string()));
        put("rho", common.rho.map(|v| v.to_string()));
        put("method", common.method.clone());
        put("k", common.k.map(|v| v.to_string()));
        put("spots", common.spots.clone());
        put("out", common.out.as_ref().map(|p| p.display().to_string()));
        if common.b6 {
            put("b6", Some("true".into()));
        }
        for (k, v) in extra {
            put(k, v.clone());
        }
        Ok(Merged { settings })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.settings.get(key).map(String::as_str)
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, String> {
        self.raw(key)
            .map(|v| v.parse::<T>().map_err(|_| format!("invalid value {v:?} for {key}")))
            .transpose()
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>, String> {
        self.raw(key)
            .map(|v| {
                v.split(',')
                    .map(|s| s.trim().parse::<f64>().map_err(|_| format!("invalid number {s:?} in {key}")))
                    .collect()
            })
            .transpose()
    }

    fn flag(&self, key: &str) -> Result<bool, String> {
        Ok(self.get::<bool>(key)?.unwrap_or(false))
    }

    fn market(&self) -> Result<(MarketParams<f64>, Option<Preset>), String> {
        let preset = match self.raw("preset") {
            Some(name) => Some(Preset::parse(name).ok_or_else(|| format!("unknown preset {name:?}"))?),
            None => None,
        };
        let base = preset.map(|p| p.params::<f64>());
        let field = |key: &str, pick: fn(&MarketParams<f64>) -> f64| -> Result<f64, String> {
            match (self.get::<f64>(key)?, base.as_ref()) {
                (Some(v), _) => Ok(v),
                (None, Some(b)) => Ok(pick(b)),
                (None, None) => Err(format!("--{key} is required without --preset")),
            }
        };
        let p = MarketParams {
            strike: field("strike", |p| p.strike)?,
            rate: field("rate", |p| p.rate)?,
            volatility: field("vol", |p| p.volatility)?,
            maturity: field("maturity", |p| p.maturity)?,
        };
        p.validate().map_err(|e| e.to_string())?;
        let untouched = ["strike", "rate", "vol", "maturity"]
            .iter()
            .all(|k| self.raw(k).is_none());
        Ok((p, preset.filter(|_| untouched)))
    }

    fn run_config(&self) -> Result<RunConfig, String> {
        let (params, preset) = self.market()?;
        let mut cfg = RunConfig::from_preset(preset.unwrap_or(Preset::ExC));
        cfg.params = params;
        cfg.preset = preset;
        if let Some(v) = self.get("h")? {
            cfg.h = v;
        }
        if let Some(v) = self.get("xmax")? {
            cfg.x_max = v;
        }
        if let Some(name) = self.raw("scheme") {
            cfg.family = Family::parse(name).ok_or_else(|| format!("unknown scheme {name:?}"))?;
        }
        let gamma = self.raw("gamma").unwrap_or(cfg.family.default_gamma());
        cfg.gamma = NodeDistribution::parse(gamma).map_err(|e| e.to_string())?;
        if let Some(v) = self.get("eps")? {
            cfg.eps = v;
        }
        if let Some(v) = self.get("rho")? {
            cfg.rho = v;
        }
        cfg.method = match self.raw("method").unwrap_or("bs32") {
            "bs32" => MethodChoice::Bs32,
            "ssprk3" => MethodChoice::Ssprk3,
            other => return Err(format!("unknown method {other:?}")),
        };
        match self.get("k")? {
            Some(k) => cfg.k = k,
            None if cfg.method == MethodChoice::Ssprk3 => {
                return Err("--k is required with --method ssprk3".into())
            }
            None => {}
        }
        if let Some(s) = self.list("spots")? {
            cfg.spots = s;
        }
        if self.flag("b6")? {
            cfg.variant = LhsVariant::B6;
        }
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }
}

enum Failure {
    Config(String),
    Solver(String),
}

impl From<frontfix::Error> for Failure {
    fn from(e: frontfix::Error) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Solver(e.to_string())
        }
    }
}

fn config_err(e: String) -> Failure {
    Failure::Config(e)
}

fn emit(merged: &Merged, text: &str) -> Result<(), Failure> {
    match merged.raw("out") {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Config(format!("cannot write {path}: {e}"))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Price(common) => {
            let m = Merged::new(&common, &[]).map_err(config_err)?;
            let cfg = m.run_config().map_err(config_err)?;
            let report = experiments::price(&cfg)?;
            eprintln!("s_f(T) = {:.6}", report.s_f);
            emit(&m, &report.to_csv())
        }
        Command::Convergence { common, ladder, refine } => {
            let extra = [("ladder", ladder), ("refine", refine.map(|r| r.to_string()))];
            let m = Merged::new(&common, &extra).map_err(config_err)?;
            let cfg = m.run_config().map_err(config_err)?;
            let ladder = m
                .list("ladder")
                .map_err(config_err)?
                .unwrap_or_else(|| vec![0.05, 0.025, 0.0125, 0.00625]);
            let refine = m.get::<usize>("refine").map_err(config_err)?.unwrap_or(4);
            let report = experiments::convergence(&cfg, &ladder, refine)?;
            eprintln!("{} reference h = {}", report.label, report.h_reference);
            emit(&m, &report.to_csv())
        }
        Command::Boundary(common) => {
            let m = Merged::new(&common, &[]).map_err(config_err)?;
            let cfg = m.run_config().map_err(config_err)?;
            let sol = cfg.run()?;
            emit(&m, &experiments::boundary_csv(&sol))
        }
        Command::Timing { common, rhos, ks } => {
            let m = Merged::new(&common, &[("rhos", rhos), ("ks", ks)]).map_err(config_err)?;
            let cfg = m.run_config().map_err(config_err)?;
            let rhos = m.list("rhos").map_err(config_err)?.unwrap_or_else(|| vec![cfg.rho]);
            let ks = m
                .list("ks")
                .map_err(config_err)?
                .unwrap_or_else(|| vec![4e-3, 8e-4, 4e-4]);
            let report = experiments::timing(&cfg, &rhos, &ks)?;
            emit(&m, &report.to_csv())
        }
        Command::Stencil(common) => {
            let m = Merged::new(&common, &[]).map_err(config_err)?;
            let cfg = m.run_config().map_err(config_err)?;
            emit(&m, &experiments::stencil_csv(&cfg)?)
        }
        Command::Oracle { common, steps } => {
            let m = Merged::new(&common, &[("steps", steps.map(|s| s.to_string()))]).map_err(config_err)?;
            let (params, _) = m.market().map_err(config_err)?;
            let spots = m
                .list("spots")
                .map_err(config_err)?
                .unwrap_or_else(|| vec![90.0, 100.0, 110.0]);
            let steps = m.get::<usize>("steps").map_err(config_err)?.unwrap_or(15_000);
            emit(&m, &experiments::oracle_csv(&params, &spots, steps)?)
        }
    }
}

fn init_pool() -> Result<(), String> {
    let Ok(v) = std::env::var("SOLVER_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| format!("SOLVER_THREADS must be a positive integer, got {v:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_pool() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_CONFIG);
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("configuration error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Solver(e)) => {
            eprintln!("solver failure: {e}");
            ExitCode::from(EXIT_SOLVER)
        }
    }
}
