//! Command implementations. Each returns the text for stdout and, where one
//! exists, the machine document for `--out`.

use std::fmt::Write;
use std::path::{Path, PathBuf};

use qvsolve_core::kernels::KernelSet;
use qvsolve_core::model::{validate_model, QueueModel};
use qvsolve_core::phfit::{fit_alpha, pade_lst, rates_from_denominator, target_moments, LogNormal};
use qvsolve_core::roots::{
    approximation_root, approximation_solutions, find_inner_roots, tail_approximation, ApproxMode,
};
use qvsolve_core::simulator::{replication_seed, simulate, Estimate, SimConfig, SimResult};
use qvsolve_core::solver::{solve, Solution, SolveOptions};
use serde_json::Value;

use crate::document::{self, complex_rows};
use crate::error::{CliError, Result};
use crate::json::{int, matrix, num, object, text, vec};
use crate::model_file::{Arrival, ModelFile};
use crate::table::{complex6, f6, root_lines, solve_table};

pub const THREADS_ENV: &str = "QVSOLVE_THREADS";

#[derive(Debug, Default)]
pub struct Output {
    pub stdout: String,
    pub document: Option<Value>,
}

fn load(path: &Path) -> Result<(ModelFile, QueueModel)> {
    let file = ModelFile::load(path)?;
    let model = validate_model(&file.description())?;
    Ok((file, model))
}

fn solve_file(file: &ModelFile, model: &QueueModel) -> Result<Solution> {
    Ok(solve(model, SolveOptions { kernels: file.kernel_options() })?)
}

pub fn cmd_solve(path: &Path) -> Result<Output> {
    let (file, model) = load(path)?;
    let sol = solve_file(&file, &model)?;
    Ok(Output {
        stdout: solve_table(&model, &sol, file.report_levels()),
        document: Some(document::solve_document(&file, &model, &sol)?),
    })
}

pub fn cmd_roots(path: &Path) -> Result<Output> {
    let (file, model) = load(path)?;
    let roots = find_inner_roots(&model)?;
    let mut stdout = root_lines(&roots);
    let _ = writeln!(stdout, "winding = {}, max |det(zI - S(z))| = {:.3e}", roots.winding, roots.residual);
    let doc = object([
        ("format", text(document::FORMAT)),
        ("input", document::input_echo(&file)),
        ("roots", document::roots_value(&roots)),
        (
            "diagnostics",
            object([("winding", Value::from(roots.winding)), ("root_residual", num(roots.residual))]),
        ),
    ]);
    Ok(Output { stdout, document: Some(doc) })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ApproxKind {
    Tail,
    Heavy,
    Light,
    NearRho(f64),
}

pub fn cmd_approx(path: &Path, kind: ApproxKind, order: usize, eps: f64) -> Result<Output> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(CliError::Usage(format!("--eps must lie in (0, 1), got {eps}")));
    }
    let (file, model) = load(path)?;
    let sol = solve_file(&file, &model)?;
    let busy = &sol.pre_arrival.busy;
    let mut stdout = String::new();
    let mut table_rows = Vec::new();
    let mut doc = vec![("format", text(document::FORMAT)), ("input", document::input_echo(&file))];

    let exact_sum = |n: usize| busy.row(n).iter().sum::<f64>();
    match kind {
        ApproxKind::Tail => {
            let t = tail_approximation(&sol.boundary, &sol.roots, order, eps)?;
            let _ = writeln!(stdout, "order {order}, epsilon {eps:e}");
            let _ = writeln!(stdout, "n_eps = {}, n_eps (ratio test) = {}", t.n_epsilon, t.n_epsilon_ratio);
            for (z, k) in t.z_list.iter().zip(&t.k_coefficients) {
                let ks: Vec<String> = k.iter().map(|c| complex6(c.re, c.im)).collect();
                let _ = writeln!(stdout, "z = {}  k = [{}]", complex6(z.re, z.im), ks.join(", "));
            }
            let last = (t.n_epsilon + 5).max(10);
            for n in 0..=last {
                table_rows.push((n, exact_sum(n), t.approx(n).iter().sum::<f64>()));
            }
            doc.extend([
                ("order", int(order as u64)),
                ("epsilon", num(eps)),
                ("n_epsilon", int(t.n_epsilon as u64)),
                ("n_epsilon_ratio", int(t.n_epsilon_ratio as u64)),
                ("z", Value::Array(t.z_list.iter().map(|&z| crate::json::complex(z)).collect())),
                ("k", complex_rows(&t.k_coefficients)),
            ]);
        }
        _ => {
            let mode = match kind {
                ApproxKind::Heavy => ApproxMode::Heavy,
                ApproxKind::Light => ApproxMode::Light,
                ApproxKind::NearRho(r) => ApproxMode::NearRho(r),
                ApproxKind::Tail => unreachable!(),
            };
            let kernels = KernelSet::build_with(&model, file.kernel_options())?;
            let solutions = approximation_solutions(&model, &kernels, mode)?;
            let z = approximation_root(&model, &kernels, mode)?;
            let exact = sol.roots.dominant().re;
            let shift = mode.shift(model.rho)?;
            let _ = writeln!(stdout, "shift c = {}", f6(shift));
            let _ = writeln!(stdout, "approximate root = {}, exact dominant root = {}", f6(z), f6(exact));
            let _ = writeln!(stdout, "relative deviation = {:.3e}", (z - exact).abs() / exact);
            let k1: f64 = sol.boundary.k.row(0).iter().map(|c| c.re).sum();
            for n in 0..=10 {
                table_rows.push((n, exact_sum(n), k1 * z.powi(n as i32)));
            }
            doc.extend([
                ("shift", num(shift)),
                ("solutions", vec(&solutions)),
                ("root", num(z)),
                ("exact_root", num(exact)),
            ]);
        }
    }
    let _ = writeln!(stdout, "\n{:>5}{:>14}{:>14}{:>12}", "n", "exact", "approx", "rel.err");
    for &(n, e, a) in &table_rows {
        let rel = if e != 0.0 { (1.0 - a / e).abs() } else { 0.0 };
        let _ = writeln!(stdout, "{n:>5}{:>14}{:>14}{:>12.3e}", f6(e), f6(a), rel);
    }
    let rows: Vec<Vec<f64>> = table_rows.iter().map(|&(n, e, a)| vec![n as f64, e, a]).collect();
    doc.push(("table", matrix(&rows)));
    Ok(Output { stdout, document: Some(object(doc)) })
}

#[derive(Clone, Debug)]
pub struct SimulateArgs {
    pub path: PathBuf,
    pub arrivals: u64,
    pub seed: u64,
    pub warmup: Option<u64>,
    pub replications: usize,
    pub batches: usize,
    pub restart_phase: bool,
}

pub fn thread_count() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(None),
    }
}

/// Runs `jobs` on a pool capped by `QVSOLVE_THREADS`.
pub fn run_parallel<T: Send>(jobs: Vec<Box<dyn FnOnce() -> T + Send + '_>>) -> Result<Vec<T>> {
    use rayon::prelude::*;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_count()? {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(pool.install(|| jobs.into_par_iter().map(|f| f()).collect()))
}

fn pooled(results: &[SimResult], f: impl Fn(&SimResult) -> Estimate) -> Estimate {
    if results.len() == 1 {
        return f(&results[0]);
    }
    Estimate::from_samples(&results.iter().map(|r| f(r).mean).collect::<Vec<_>>())
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<Output> {
    let file = ModelFile::load(&args.path)?;
    let model = QueueModel::from_description(&file.description())?;
    if args.replications == 0 {
        return Err(CliError::Usage("--replications must be positive".into()));
    }
    let mut cfg = SimConfig::new(args.arrivals, args.seed);
    if let Some(w) = args.warmup {
        cfg.warmup = w;
    }
    cfg.batch_count = args.batches;
    cfg.restart_phase = args.restart_phase;

    let configs: Vec<SimConfig> = (0..args.replications)
        .map(|i| {
            let mut c = cfg;
            if args.replications > 1 {
                c.seed = replication_seed(args.seed, i as u64);
            }
            c
        })
        .collect();
    let model_ref = &model;
    let jobs: Vec<Box<dyn FnOnce() -> qvsolve_core::Result<SimResult> + Send + '_>> = configs
        .iter()
        .map(|c| Box::new(move || simulate(model_ref, c)) as Box<dyn FnOnce() -> _ + Send>)
        .collect();
    let results = run_parallel(jobs)?.into_iter().collect::<qvsolve_core::Result<Vec<_>>>()?;

    let solved = model.ensure_stable().map_err(CliError::from).and_then(|_| solve_file(&file, &model));
    let est: Vec<(&str, Estimate)> = vec![
        ("L_s", pooled(&results, |r| r.l_s)),
        ("W_s", pooled(&results, |r| r.w_s)),
        ("rho_prime", pooled(&results, |r| r.rho_prime)),
        ("pre_arrival_vacation_mass", pooled(&results, |r| r.vacation_mass)),
        ("E_B", pooled(&results, |r| r.e_b)),
        ("E_I", pooled(&results, |r| r.e_i)),
        ("lambda", pooled(&results, |r| r.lambda_hat)),
        ("mu_star", pooled(&results, |r| r.mu_star_hat)),
    ];

    let mut stdout = String::new();
    let _ = writeln!(
        stdout,
        "{} arrivals, warmup {}, seed {}, {} replication(s)\n",
        cfg.arrivals, cfg.warmup, args.seed, args.replications
    );
    let exact_of = |name: &str, sol: &Solution| -> Option<f64> {
        let m = &sol.measures;
        Some(match name {
            "L_s" => m.l_s,
            "W_s" => m.w_s,
            "rho_prime" => m.rho_prime,
            "pre_arrival_vacation_mass" => sol.pre_arrival.vacation.mass(),
            "E_B" => m.e_b,
            "E_I" => m.e_i,
            _ => return None,
        })
    };
    let mut comparison = Vec::new();
    for (name, e) in &est {
        let _ = write!(stdout, "{name:<27}{:>12} +- {:<10}", f6(e.mean), f6(e.half_width));
        if let Ok(sol) = &solved {
            if let Some(x) = exact_of(name, sol) {
                let covered = e.contains(x);
                let _ = write!(stdout, "  solver {:>10}  {}", f6(x), if covered { "covered" } else { "outside" });
                comparison.push((
                    *name,
                    object([
                        ("solver", num(x)),
                        ("simulation", document::estimate(e)),
                        ("covered", Value::Bool(covered)),
                    ]),
                ));
            }
        }
        stdout.push('\n');
    }

    let mut doc = vec![
        ("format", text(document::FORMAT)),
        ("input", document::input_echo(&file)),
        ("derived", document::derived(&model)?),
        ("estimates", object(est.iter().map(|(n, e)| (*n, document::estimate(e))))),
        (
            "replications",
            Value::Array(configs.iter().zip(&results).map(|(c, r)| document::simulation_value(c, r)).collect()),
        ),
    ];
    match &solved {
        Ok(_) => doc.push(("comparison", object(comparison))),
        Err(e) => {
            let _ = writeln!(stdout, "\nno solver comparison: {e}");
            doc.push(("solver_error", text(e.to_string())));
        }
    }
    Ok(Output { stdout, document: Some(object(doc)) })
}

#[derive(Clone, Debug)]
pub struct FitArgs {
    pub shape: f64,
    pub scale: f64,
    pub order: usize,
    pub moments: usize,
    pub weights: Option<Vec<f64>>,
    /// Model file whose arrival section is replaced by the fit.
    pub into: Option<PathBuf>,
}

pub fn cmd_fit_ph(args: &FitArgs) -> Result<Output> {
    if args.order == 0 {
        return Err(CliError::Usage("--order must be positive".into()));
    }
    let target = LogNormal { shape: args.shape, scale: args.scale };
    let weights = args.weights.clone().unwrap_or_else(|| vec![1.0; args.order + 1]);
    let needed = (2 * args.order - 1).max(weights.len());
    if args.moments < needed {
        return Err(CliError::Usage(format!("--moments must be at least {needed}")));
    }
    let mu = target_moments(&target, args.moments)?;
    let pade = pade_lst(&mu, args.order - 1, args.order)?;
    let rates = rates_from_denominator(&pade)?;
    let fit = fit_alpha(&mu[..weights.len()], &rates, &weights)?;
    let ph = fit.to_ph()?;

    let mut stdout = String::new();
    let _ = writeln!(stdout, "target log-normal shape {} scale {}", args.shape, args.scale);
    let _ = writeln!(stdout, "moments: {}", mu[..weights.len()].iter().map(|x| f6(*x)).collect::<Vec<_>>().join(", "));
    let _ = writeln!(stdout, "Pade numerator:   {}", pade.numerator.iter().map(|x| f6(*x)).collect::<Vec<_>>().join(", "));
    let _ = writeln!(stdout, "Pade denominator: {}", pade.denominator.iter().map(|x| f6(*x)).collect::<Vec<_>>().join(", "));
    let _ = writeln!(stdout, "rates: {}", rates.iter().map(|x| f6(*x)).collect::<Vec<_>>().join(", "));
    let _ = writeln!(stdout, "alpha: {}", fit.alpha.iter().map(|x| f6(*x)).collect::<Vec<_>>().join(", "));
    let _ = writeln!(stdout, "objective = {:.6e}, lambda = {}", fit.objective, f6(ph.rate()));

    let arrival = Arrival { alpha: fit.alpha.clone(), t: fit.generator().to_rows() };
    let doc = match &args.into {
        Some(path) => {
            let mut base = ModelFile::load(path)?;
            base.arrival = arrival;
            serde_json::to_value(&base).expect("model files always serialize")
        }
        None => object([("arrival", serde_json::to_value(&arrival).expect("arrival serializes"))]),
    };
    Ok(Output { stdout, document: Some(crate::json::canonical(doc)) })
}
