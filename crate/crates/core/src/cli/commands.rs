use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::path::PathSample;
use crate::rates::{fit_rate, prepare, run_rate_experiment, wn_cloud, ExperimentPlan, FitMode};
use crate::transport::{
    wasserstein_1d, wasserstein_assignment, wasserstein_entropic, EmpiricalMeasure, GridSup,
};
use crate::ulam::{self, GridLayout, GriddedFunction};

use super::config::{Command, RunConfig, WqSolver};

pub(super) fn dispatch(config: &RunConfig) -> Result<()> {
    let work = || match config.command {
        Command::Simulate => simulate(config),
        Command::Decompose => decompose(config),
        Command::Wq => wq(config),
        Command::Rates => rates(config),
    };
    match config.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Config(format!("threads: {e}")))?
            .install(work),
        None => work(),
    }
}

fn output_file(config: &RunConfig, name: &str) -> Result<PathBuf> {
    fs::create_dir_all(&config.out_dir)?;
    Ok(config.out_dir.join(name))
}

/// Writes `body` after the config header, creating the output directory.
fn write_output(config: &RunConfig, name: &str, extra_header: &str, body: &[u8]) -> Result<PathBuf> {
    let path = output_file(config, name)?;
    let mut file = fs::File::create(&path)?;
    file.write_all(config.header().as_bytes())?;
    file.write_all(extra_header.as_bytes())?;
    file.write_all(body)?;
    Ok(path)
}

fn plan(config: &RunConfig) -> Result<ExperimentPlan> {
    let mut plan = ExperimentPlan::new(config.system()?, config.observable_spec()?, config.ns.clone(), config.seed);
    plan.q = config.q;
    plan.samples = config.samples;
    plan.grid_m = config.grid_m;
    plan.variance = config.variance;
    plan.centering_budget = config.centering_budget;
    plan.burn_in = config.burn_in;
    plan.bootstrap = config.bootstrap;
    Ok(plan)
}

fn simulate(config: &RunConfig) -> Result<()> {
    let system = config.system()?;
    let (v, sigma2) = prepare(&plan(config)?)?;
    for &n in &config.ns {
        let paths = wn_cloud(&system, &v, n, config.samples, config.grid_m, config.seed, config.burn_in)?;
        let mut body = String::from("sample_id");
        for k in 0..=config.grid_m {
            let _ = write!(body, ",t{k}");
        }
        body.push('\n');
        for (i, p) in paths.iter().enumerate() {
            let _ = write!(body, "{i}");
            for x in p.values() {
                let _ = write!(body, ",{x}");
            }
            body.push('\n');
        }
        let extra = format!("# horizon = {n}\n# mean_offset = {}\n# sigma2 = {sigma2}\n", v.offset());
        let path = write_output(config, &format!("paths_n{n}.csv"), &extra, body.as_bytes())?;
        println!("{}", path.display());
    }
    Ok(())
}

fn decompose(config: &RunConfig) -> Result<()> {
    let system = config.system()?;
    let v = config.observable_spec()?;
    let transfer = ulam::cache::load_or_build(config.cache_dir.as_deref(), system.base(), config.ulam_cells, config.density_tol)?;
    let psi = ulam::observable_on_grid(&system, &v, &transfer, config.layout)?;
    let dec = ulam::solve_coboundary(&psi, &transfer, config.series_tol, config.max_terms)?;

    let mut body = String::from("cell,psi,m,chi,breve_w\n");
    for i in 0..psi.len() {
        let _ = writeln!(
            body,
            "{i},{:e},{:e},{:e},{:e}",
            dec.psi.values()[i],
            dec.m.values()[i],
            dec.chi.values()[i],
            dec.breve_w.values()[i]
        );
    }
    write_output(config, "decomposition.csv", "", body.as_bytes())?;

    let mut density = String::from("cell,density\n");
    for (i, d) in transfer.density().values().iter().enumerate() {
        let _ = writeln!(density, "{i},{d:e}");
    }
    write_output(config, "density.csv", "", density.as_bytes())?;

    let mut report = String::new();
    let _ = writeln!(report, "sigma2 = {:e}", dec.sigma2);
    if config.layout == GridLayout::Base {
        let (lo, hi) = transfer.operator().domain();
        let roof = GriddedFunction::from_fn(lo, hi, config.ulam_cells, |y| system.roof_at(y).unwrap_or(f64::NAN))?;
        let _ = writeln!(report, "sigma2_flow = {:e}", dec.sigma2 / transfer.mean(&roof));
    }
    let r = dec.residuals;
    let _ = writeln!(report, "terms = {}", dec.terms);
    let _ = writeln!(report, "reconstruction = {:e}", r.reconstruction);
    let _ = writeln!(report, "kernel = {:e}", r.kernel);
    let _ = writeln!(report, "breve_mean = {:e}", r.breve_mean);
    let _ = writeln!(report, "series = {:e}", r.series);
    write_output(config, "residuals.txt", "", report.as_bytes())?;
    print!("{report}");
    Ok(())
}

/// Paths and the `# horizon` value of a wide CSV written by `simulate`.
pub(super) fn read_paths(path: &Path) -> Result<(Vec<PathSample>, Option<u64>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut horizon = None;
    let mut paths = Vec::new();
    let mut width = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((k, v)) = comment.split_once('=') {
                if k.trim() == "horizon" {
                    horizon = v.trim().parse().ok();
                }
            }
            continue;
        }
        if line.is_empty() || line.starts_with("sample_id") {
            continue;
        }
        let bad = || Error::input(format!("{}:{}: malformed sample row", path.display(), lineno + 1));
        let values = line
            .split(',')
            .skip(1)
            .map(|x| x.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<Vec<f64>>>()?;
        if values.len() < 2 || *width.get_or_insert(values.len()) != values.len() {
            return Err(bad());
        }
        paths.push(PathSample::from_values(&values)?);
    }
    if paths.is_empty() {
        return Err(Error::input(format!("{}: no samples", path.display())));
    }
    Ok((paths, horizon))
}

fn wq(config: &RunConfig) -> Result<()> {
    let (a_path, b_path) = (config.wq_a.as_deref().unwrap_or(Path::new("")), config.wq_b.as_deref().unwrap_or(Path::new("")));
    let (a, horizon) = read_paths(a_path)?;
    let (b, _) = read_paths(b_path)?;
    if a.len() != b.len() {
        return Err(Error::input(format!("sample files hold {} and {} paths; sizes must match", a.len(), b.len())));
    }
    let m = a[0].m();
    let (estimate, solver) = match config.wq_solver {
        WqSolver::Assignment => {
            let r = wasserstein_assignment(&EmpiricalMeasure::new(a.clone())?, &EmpiricalMeasure::new(b)?, config.q, &GridSup)?;
            (r.distance, "assignment")
        }
        WqSolver::Sorted => {
            if m != 1 || b[0].m() != 1 {
                return Err(Error::Config("solver: sorted needs one-interval paths (grid_m = 1)".into()));
            }
            let terminal = |c: &[PathSample]| EmpiricalMeasure::new(c.iter().map(|p| p.terminal()).collect());
            (wasserstein_1d(&terminal(&a)?, &terminal(&b)?, config.q)?.distance, "sorted")
        }
        WqSolver::Entropic => {
            let r = wasserstein_entropic(
                &EmpiricalMeasure::new(a.clone())?,
                &EmpiricalMeasure::new(b)?,
                config.q,
                &GridSup,
                config.epsilon,
                config.iterations,
            )?;
            (r.value, "entropic")
        }
    };
    let n = horizon.unwrap_or(config.ns[0]);
    let row = format!("{n},{},{},{m},{estimate:e},{solver},{}\n", config.q, a.len(), config.seed);
    let body = format!("n,q,N_samples,grid_m,estimate,solver,seed\n{row}");
    write_output(config, "wq.csv", "", body.as_bytes())?;
    print!("{row}");
    Ok(())
}

fn rates(config: &RunConfig) -> Result<()> {
    if config.fit == FitMode::Free && config.ns.len() < 3 {
        return Err(Error::Fit(format!(
            "a free-gamma fit needs at least three values of n, got {}; use --fit half",
            config.ns.len()
        )));
    }
    let table = run_rate_experiment(&plan(config)?)?;

    let extra = format!(
        "# sigma2 = {}\n# variance_source = {}\n# mean_offset = {}\n",
        table.sigma2, table.variance_source, table.mean_offset
    );
    let mut body = Vec::new();
    table.write_csv(&mut body)?;
    write_output(config, "rates.csv", &extra, &body)?;
    print!("{}", String::from_utf8_lossy(&body));

    let mut marginal = String::from("n,q,estimate\n");
    for r in &table.rows {
        let _ = writeln!(marginal, "{},{},{:e}", r.n, r.q, r.marginal);
    }
    write_output(config, "marginal.csv", &extra, marginal.as_bytes())?;

    let fit = fit_rate(&table, config.fit)?;
    let record = fit.to_record();
    write_output(config, "fit.json", "", format!("{record}\n").as_bytes())?;
    println!("{record}");
    Ok(())
}
