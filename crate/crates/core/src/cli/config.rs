//! Run configuration: a TOML file with sections, overridden by flags.
//!
//! ```toml
//! [run]
//! seed = 7
//! out_dir = "results"
//! threads = 4
//!
//! [system]
//! name = "lsv"          # doubling | lsv | induced
//! beta = 0.25
//! roof = "constant:1"   # constant:<h> | one_plus_y
//!
//! [observable]
//! name = "cos"          # cos | linear | cos_blend | zero | const:<c>
//! eta = 1.0
//!
//! [experiment]
//! n = [128, 256, 512]
//! samples = 256
//! grid_m = 16
//! q = 1.0
//! bootstrap = 200
//! fit = "half"          # free | half | zero
//! variance = "ulam"     # ulam | green_kubo | fixed:<value>
//! green_kubo_steps = 10000000
//! centering_budget = 100000  # used when variance is not ulam
//! burn_in = 1000
//!
//! [ulam]
//! cells = 1024
//! layout = "base"       # base | suspension
//! height_cells = 16
//! series_tol = 1e-9
//! density_tol = 1e-13
//! max_terms = 10000
//! cache_dir = "cache"
//!
//! [wq]
//! a = "a.csv"
//! b = "b.csv"
//! solver = "assignment" # assignment | sorted | entropic
//! epsilon = 0.01
//! iterations = 10000
//! ```
//!
//! Unknown sections or keys are rejected. Every key has a flag of the same
//! name (underscores become dashes); flags win over the file.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::dynamics::{BaseMap, Roof, SuspensionSystem, DEFAULT_BURN_IN};
use crate::error::{Error, Result};
use crate::process::{ObservableKind, ObservableSpec};
use crate::rates::{FitMode, VarianceSource, DEFAULT_BOOTSTRAP, MIN_SAMPLES};
use crate::ulam::{GridLayout, DEFAULT_MAX_TERMS, DEFAULT_SERIES_TOLERANCE, MIN_CELLS};

use super::Options;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "WIPRATES_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "wiprates-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Decompose,
    Wq,
    Rates,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Decompose => "decompose",
            Command::Wq => "wq",
            Command::Rates => "rates",
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(default)]
    run: RunSection,
    #[serde(default)]
    system: SystemSection,
    #[serde(default)]
    observable: ObservableSection,
    #[serde(default)]
    experiment: ExperimentSection,
    #[serde(default)]
    ulam: UlamSection,
    #[serde(default)]
    wq: WqSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunSection {
    seed: Option<u64>,
    out_dir: Option<PathBuf>,
    threads: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemSection {
    name: Option<String>,
    beta: Option<f64>,
    roof: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObservableSection {
    name: Option<String>,
    eta: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentSection {
    n: Option<Vec<u64>>,
    samples: Option<usize>,
    grid_m: Option<usize>,
    q: Option<f64>,
    bootstrap: Option<usize>,
    fit: Option<String>,
    variance: Option<String>,
    green_kubo_steps: Option<usize>,
    centering_budget: Option<u64>,
    burn_in: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct UlamSection {
    cells: Option<usize>,
    layout: Option<String>,
    height_cells: Option<usize>,
    series_tol: Option<f64>,
    density_tol: Option<f64>,
    max_terms: Option<usize>,
    cache_dir: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct WqSection {
    a: Option<PathBuf>,
    b: Option<PathBuf>,
    solver: Option<String>,
    epsilon: Option<f64>,
    iterations: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemName {
    Doubling,
    Lsv,
    Induced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WqSolver {
    Assignment,
    Sorted,
    Entropic,
}

/// Fully resolved and validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub threads: Option<usize>,
    pub system_name: SystemName,
    pub beta: f64,
    pub roof: Roof,
    pub observable: ObservableKind,
    pub eta: f64,
    pub ns: Vec<u64>,
    pub samples: usize,
    pub grid_m: usize,
    pub q: f64,
    pub bootstrap: usize,
    pub fit: FitMode,
    pub variance: VarianceSource,
    pub centering_budget: u64,
    pub burn_in: usize,
    pub ulam_cells: usize,
    pub layout: GridLayout,
    pub series_tol: f64,
    pub density_tol: f64,
    pub max_terms: usize,
    pub cache_dir: Option<PathBuf>,
    pub wq_a: Option<PathBuf>,
    pub wq_b: Option<PathBuf>,
    pub wq_solver: WqSolver,
    pub epsilon: f64,
    pub iterations: usize,
}

fn usage(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{field}: {msg}"))
}

fn parse_roof(s: &str) -> Result<Roof> {
    match s {
        "one_plus_y" | "1+y" => Ok(Roof::OnePlusY),
        other => {
            let h = other.strip_prefix("constant:").unwrap_or(other);
            let h: f64 = h.parse().map_err(|_| usage("roof", format!("expected constant:<h> or one_plus_y, got '{other}'")))?;
            Roof::constant(h).map_err(|e| usage("roof", e))
        }
    }
}

fn parse_variance(s: &str, ulam_cells: usize, gk_steps: usize) -> Result<VarianceSource> {
    match s {
        "ulam" => Ok(VarianceSource::Ulam { cells: ulam_cells }),
        "green_kubo" | "green-kubo" => Ok(VarianceSource::GreenKubo { steps: gk_steps }),
        other => match other.strip_prefix("fixed:").map(str::parse::<f64>) {
            Some(Ok(v)) if v > 0.0 => Ok(VarianceSource::Fixed(v)),
            _ => Err(usage("variance", format!("expected ulam, green_kubo or fixed:<positive>, got '{other}'"))),
        },
    }
}

fn parse_n_list(s: &str) -> Result<Vec<u64>> {
    s.split(',')
        .map(|t| t.trim().parse::<u64>().map_err(|_| usage("n", format!("not a positive integer: '{t}'"))))
        .collect()
}

fn read_file(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| usage("config", format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| usage("config", e.message().to_string()))
}

impl RunConfig {
    /// Merges the optional config file with the flags and validates the result.
    pub fn resolve(command: Command, opts: &Options) -> Result<Self> {
        let file = match &opts.config {
            Some(p) => read_file(p)?,
            None => FileConfig::default(),
        };
        let seed = opts.seed.or(file.run.seed).ok_or_else(|| usage("seed", "a seed is required"))?;
        let out_dir = opts
            .out_dir
            .clone()
            .or(file.run.out_dir)
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
        let threads = opts.threads.or(file.run.threads);
        if threads == Some(0) {
            return Err(usage("threads", "must be positive"));
        }

        let system_name = match opts.system.clone().or(file.system.name).as_deref().unwrap_or("doubling") {
            "doubling" => SystemName::Doubling,
            "lsv" => SystemName::Lsv,
            "induced" | "lsv_induced" => SystemName::Induced,
            other => return Err(usage("system", format!("unknown system '{other}' (doubling | lsv | induced)"))),
        };
        let beta = opts.beta.or(file.system.beta).unwrap_or(0.25);
        let beta_cap = if command == Command::Rates { 0.5 } else { 1.0 };
        if !(beta > 0.0 && beta < beta_cap) {
            return Err(usage("beta", format!("must lie in (0, {beta_cap}), got {beta}")));
        }
        let roof = parse_roof(opts.roof.as_deref().or(file.system.roof.as_deref()).unwrap_or("constant:1"))?;

        let observable = ObservableKind::parse(opts.observable.as_deref().or(file.observable.name.as_deref()).unwrap_or("cos"))
            .map_err(|e| usage("observable", e))?;
        let eta = opts.eta.or(file.observable.eta).unwrap_or(1.0);
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(usage("eta", format!("must lie in (0, 1], got {eta}")));
        }

        let ex = file.experiment;
        let default_ns: Vec<u64> = match command {
            Command::Rates => (7..=13).map(|k| 1u64 << k).collect(),
            _ => vec![1024],
        };
        let ns = match &opts.n {
            Some(s) => parse_n_list(s)?,
            None => ex.n.unwrap_or(default_ns),
        };
        if ns.is_empty() || ns.contains(&0) {
            return Err(usage("n", "values must be positive"));
        }
        if ns.windows(2).any(|w| w[1] <= w[0]) {
            return Err(usage("n", "values must be strictly increasing"));
        }
        let samples = opts.samples.or(ex.samples).unwrap_or(256);
        if samples == 0 || (command == Command::Rates && samples < MIN_SAMPLES) {
            return Err(usage("samples", format!("must be at least {MIN_SAMPLES} for rate runs, got {samples}")));
        }
        let grid_m = opts.grid_m.or(ex.grid_m).unwrap_or(16);
        if grid_m == 0 {
            return Err(usage("grid_m", "must be positive"));
        }
        let q = opts.q.or(ex.q).unwrap_or(1.0);
        if !(q >= 1.0 && q.is_finite()) {
            return Err(usage("q", format!("must be at least 1, got {q}")));
        }
        let bootstrap = opts.bootstrap.or(ex.bootstrap).unwrap_or(DEFAULT_BOOTSTRAP);
        let fit = FitMode::parse(opts.fit.as_deref().or(ex.fit.as_deref()).unwrap_or("half")).map_err(|e| usage("fit", e))?;

        let u = file.ulam;
        let ulam_cells = opts.ulam_n.or(u.cells).unwrap_or(1024);
        if ulam_cells < MIN_CELLS {
            return Err(usage("ulam_n", format!("must be at least {MIN_CELLS}, got {ulam_cells}")));
        }
        let gk_steps = opts.green_kubo_steps.or(ex.green_kubo_steps).unwrap_or(10_000_000);
        if gk_steps < 2 {
            return Err(usage("green_kubo_steps", "must be at least 2"));
        }
        let default_variance = if roof.is_constant() { "ulam" } else { "green_kubo" };
        let variance =
            parse_variance(opts.variance.as_deref().or(ex.variance.as_deref()).unwrap_or(default_variance), ulam_cells, gk_steps)?;
        let centering_budget = opts.centering_budget.or(ex.centering_budget).unwrap_or(100_000);
        if centering_budget < crate::process::MIN_CENTERING_BUDGET {
            return Err(usage("centering_budget", format!("must be at least {}", crate::process::MIN_CENTERING_BUDGET)));
        }
        let burn_in = opts.burn_in.or(ex.burn_in).unwrap_or(DEFAULT_BURN_IN);

        let height_cells = opts.height_cells.or(u.height_cells).unwrap_or(16);
        let layout = match opts.layout.as_deref().or(u.layout.as_deref()).unwrap_or("base") {
            "base" => GridLayout::Base,
            "suspension" => {
                if height_cells == 0 {
                    return Err(usage("height_cells", "must be positive"));
                }
                GridLayout::Suspension { height_cells }
            }
            other => return Err(usage("layout", format!("expected base or suspension, got '{other}'"))),
        };
        let series_tol = opts.series_tol.or(u.series_tol).unwrap_or(DEFAULT_SERIES_TOLERANCE);
        let density_tol = opts.density_tol.or(u.density_tol).unwrap_or(1e-13);
        if !(series_tol > 0.0) || !(density_tol > 0.0) {
            return Err(usage("series_tol", "tolerances must be positive"));
        }
        let max_terms = opts.max_terms.or(u.max_terms).unwrap_or(DEFAULT_MAX_TERMS);
        let cache_dir = opts.cache_dir.clone().or(u.cache_dir);

        let w = file.wq;
        let wq_solver = match opts.solver.as_deref().or(w.solver.as_deref()).unwrap_or("assignment") {
            "assignment" => WqSolver::Assignment,
            "sorted" => WqSolver::Sorted,
            "entropic" => WqSolver::Entropic,
            other => return Err(usage("solver", format!("expected assignment, sorted or entropic, got '{other}'"))),
        };
        let epsilon = opts.epsilon.or(w.epsilon).unwrap_or(0.01);
        if !(epsilon > 0.0) {
            return Err(usage("epsilon", "must be positive"));
        }
        let iterations = opts.iterations.or(w.iterations).unwrap_or(10_000);
        let wq_a = opts.a.clone().or(w.a);
        let wq_b = opts.b.clone().or(w.b);
        if command == Command::Wq && (wq_a.is_none() || wq_b.is_none()) {
            return Err(usage("a", "wq needs two sample files (--a and --b)"));
        }

        Ok(Self {
            command,
            seed,
            out_dir,
            threads,
            system_name,
            beta,
            roof,
            observable,
            eta,
            ns,
            samples,
            grid_m,
            q,
            bootstrap,
            fit,
            variance,
            centering_budget,
            burn_in,
            ulam_cells,
            layout,
            series_tol,
            density_tol,
            max_terms,
            cache_dir,
            wq_a,
            wq_b,
            wq_solver,
            epsilon,
            iterations,
        })
    }

    pub fn base_map(&self) -> Result<BaseMap> {
        match self.system_name {
            SystemName::Doubling => Ok(BaseMap::Doubling),
            SystemName::Lsv => BaseMap::lsv(self.beta),
            SystemName::Induced => BaseMap::induced(self.beta),
        }
    }

    pub fn system(&self) -> Result<SuspensionSystem> {
        Ok(SuspensionSystem::new(self.base_map()?, self.roof))
    }

    pub fn observable_spec(&self) -> Result<ObservableSpec> {
        ObservableSpec::new(self.observable).with_eta(self.eta)
    }

    fn uses_beta(&self) -> bool {
        self.system_name != SystemName::Doubling
    }

    /// The resolved configuration as `# key = value` lines.
    pub fn header(&self) -> String {
        let mut h = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(h, "# {k} = {v}");
        };
        line("command", self.command.name().into());
        line("seed", self.seed.to_string());
        line("system", format!("{:?}", self.system_name).to_lowercase());
        if self.uses_beta() {
            line("beta", self.beta.to_string());
        }
        line("roof", self.roof.name());
        line("observable", self.observable.name());
        line("eta", self.eta.to_string());
        match self.command {
            Command::Simulate | Command::Rates => {
                line("n", self.ns.iter().map(u64::to_string).collect::<Vec<_>>().join(","));
                line("samples", self.samples.to_string());
                line("grid_m", self.grid_m.to_string());
                line("centering_budget", self.centering_budget.to_string());
                line("burn_in", self.burn_in.to_string());
                line("variance", self.variance.tag());
                if self.command == Command::Rates {
                    line("q", self.q.to_string());
                    line("bootstrap", self.bootstrap.to_string());
                    line("fit", self.fit.tag().into());
                }
            }
            Command::Decompose => {
                line("ulam_n", self.ulam_cells.to_string());
                line(
                    "layout",
                    match self.layout {
                        GridLayout::Base => "base".into(),
                        GridLayout::Suspension { height_cells } => format!("suspension:{height_cells}"),
                    },
                );
                line("series_tol", format!("{:e}", self.series_tol));
                line("density_tol", format!("{:e}", self.density_tol));
                line("max_terms", self.max_terms.to_string());
            }
            Command::Wq => {
                line("a", self.wq_a.as_ref().map_or(String::new(), |p| p.display().to_string()));
                line("b", self.wq_b.as_ref().map_or(String::new(), |p| p.display().to_string()));
                line("q", self.q.to_string());
                line("solver", format!("{:?}", self.wq_solver).to_lowercase());
                if self.wq_solver == WqSolver::Entropic {
                    line("epsilon", self.epsilon.to_string());
                    line("iterations", self.iterations.to_string());
                }
            }
        }
        h
    }
}
