//! Machine-readable result documents.

use num_complex::Complex64;
use qvsolve_core::kernels::Family;
use qvsolve_core::model::QueueModel;
use qvsolve_core::phfit::service_lag1_correlation;
use qvsolve_core::roots::RootSet;
use qvsolve_core::simulator::{Census, Estimate, SimConfig, SimResult};
use qvsolve_core::solver::{Block, EquationLabel, LevelSeries, Solution};
use serde_json::Value;

use crate::error::Result;
use crate::json::{canonical, complex, int, matrix, num, object, text, vec};
use crate::model_file::ModelFile;

pub const FORMAT: &str = "qvsolve-result/1";

pub fn input_echo(file: &ModelFile) -> Value {
    canonical(serde_json::to_value(file).expect("model files always serialize"))
}

pub fn derived(model: &QueueModel) -> Result<Value> {
    let service = &model.service;
    Ok(object([
        ("lambda", num(model.lambda)),
        ("mu_star", num(service.fundamental_rate())),
        ("rho", num(model.rho)),
        ("omega", num(model.omega)),
        ("tau", num(model.tau)),
        ("omega2", num(model.omega2)),
        ("tau2", num(model.tau2)),
        ("lambda1", num(model.lambda1)),
        ("lambda2", num(model.lambda2)),
        ("pi_bar", vec(service.stationary())),
        ("lag1_correlation", num(service_lag1_correlation(service)?)),
    ]))
}

pub fn roots_value(roots: &RootSet) -> Value {
    Value::Array(roots.roots.iter().map(|&z| complex(z)).collect())
}

pub fn equation_name(label: EquationLabel) -> String {
    let block = match label.block {
        Block::Vacation => "vacation".to_string(),
        Block::LevelZero => "level 0".to_string(),
        Block::Level(n) => format!("level {n}"),
        Block::Normalization => "normalization".to_string(),
    };
    format!("{block}, phase {}", label.component + 1)
}

/// Rows `0..levels`, per-phase totals over all levels and the total mass.
pub fn series(s: &LevelSeries, levels: usize) -> Value {
    let rows: Vec<Vec<f64>> = (0..levels).map(|n| s.row(n)).collect();
    object([("rows", matrix(&rows)), ("total", vec(&s.total())), ("mass", num(s.mass()))])
}

pub fn solve_document(file: &ModelFile, model: &QueueModel, sol: &Solution) -> Result<Value> {
    let levels = file.report_levels();
    let b = &sol.boundary;
    let k: Vec<Value> = (0..b.k.rows())
        .map(|i| Value::Array(b.k.row(i).iter().map(|&z| complex(z)).collect()))
        .collect();
    let m = &sol.measures;
    let deficits = sol.kernels.tail_deficits();
    let tail = object(Family::ALL[..6].iter().zip(deficits).map(|(f, &d)| (f.name(), num(d))));

    Ok(object([
        ("format", text(FORMAT)),
        ("input", input_echo(file)),
        ("derived", derived(model)?),
        ("roots", roots_value(&sol.roots)),
        ("constants", object([("k", Value::Array(k)), ("b", vec(&b.b))])),
        (
            "epochs",
            object([
                (
                    "pre_arrival",
                    object([
                        ("vacation", series(&sol.pre_arrival.vacation, levels)),
                        ("busy", series(&sol.pre_arrival.busy, levels)),
                    ]),
                ),
                (
                    "arbitrary",
                    object([
                        ("vacation", series(&sol.arbitrary.vacation, levels)),
                        ("busy", series(&sol.arbitrary.busy, levels)),
                    ]),
                ),
                ("post_departure", series(&sol.departure.post_departure, levels)),
                ("pre_service", series(&sol.departure.pre_service, levels)),
            ]),
        ),
        (
            "measures",
            object([
                ("L_s", num(m.l_s)),
                ("L_q", num(m.l_q)),
                ("W_s", num(m.w_s)),
                ("W_s_little", num(m.w_s_little)),
                ("rho_prime", num(m.rho_prime)),
                ("E_B", num(m.e_b)),
                ("E_I", num(m.e_i)),
                ("busy_phase", vec(&m.cond_busy_phase)),
            ]),
        ),
        (
            "diagnostics",
            object([
                ("root_residual", num(sol.roots.residual)),
                ("winding", Value::from(sol.roots.winding)),
                ("n_max", int(sol.kernels.n_max() as u64)),
                ("tail_deficits", tail),
                ("clipped_entries", int(sol.kernels.clipped_entries() as u64)),
                ("boundary_residual", num(b.residual)),
                ("dropped_equation", text(equation_name(b.dropped))),
                ("dropped_residual", num(b.dropped_residual)),
                ("normalization_error", num(b.normalization_error)),
                ("conjugate_deviation", num(b.conjugate_deviation)),
                ("condition", num(b.condition)),
                ("pre_arrival_mass_defect", num(sol.pre_arrival.mass() - 1.0)),
                ("arbitrary_raw_mass", num(sol.arbitrary.raw_mass)),
                ("departure_rate", num(sol.departure.departure_rate)),
                ("post_departure_unshifted_mass", num(sol.departure.literal_mass)),
                ("little_gap", num(m.little_gap)),
                ("pi_bar_gap", num(sol.arbitrary.stationary_gap)),
            ]),
        ),
    ]))
}

pub fn estimate(e: &Estimate) -> Value {
    object([("mean", num(e.mean)), ("half_width", num(e.half_width))])
}

/// Census rows by level for one block; the last row is the overflow bin.
pub fn census(c: &Census, block: usize) -> Value {
    let rows: Vec<Vec<f64>> =
        (0..=c.levels).map(|l| (0..c.phases).map(|j| c.get(l, block, j)).collect()).collect();
    matrix(&rows)
}

pub fn simulation_value(cfg: &SimConfig, r: &SimResult) -> Value {
    object([
        (
            "config",
            object([
                ("arrivals", int(cfg.arrivals)),
                ("warmup", int(cfg.warmup)),
                ("seed", int(cfg.seed)),
                ("batches", int(cfg.batch_count as u64)),
            ]),
        ),
        (
            "estimates",
            object([
                ("L_s", estimate(&r.l_s)),
                ("W_s", estimate(&r.w_s)),
                ("rho_prime", estimate(&r.rho_prime)),
                ("E_B", estimate(&r.e_b)),
                ("E_I", estimate(&r.e_i)),
                ("pre_arrival_vacation_mass", estimate(&r.vacation_mass)),
                ("lambda", estimate(&r.lambda_hat)),
                ("mu_star", estimate(&r.mu_star_hat)),
            ]),
        ),
        (
            "census",
            object([
                ("pre_arrival", object([("vacation", census(&r.pre_arrival, 0)), ("busy", census(&r.pre_arrival, 1))])),
                ("arbitrary", object([("vacation", census(&r.arbitrary, 0)), ("busy", census(&r.arbitrary, 1))])),
                ("post_departure", census(&r.post_departure, 0)),
            ]),
        ),
        (
            "counts",
            object([
                ("arrivals", int(r.arrivals)),
                ("departures", int(r.departures)),
                ("in_system_at_end", int(r.in_system_at_end)),
                ("simulated_time", num(r.simulated_time)),
            ]),
        ),
    ])
}

/// Solver values side by side with simulation intervals.
pub fn comparison_rows(sol: &Solution, r: &SimResult) -> Vec<(&'static str, f64, Estimate)> {
    let m = &sol.measures;
    vec![
        ("L_s", m.l_s, r.l_s),
        ("W_s", m.w_s, r.w_s),
        ("rho_prime", m.rho_prime, r.rho_prime),
        ("pre_arrival_vacation_mass", sol.pre_arrival.vacation.mass(), r.vacation_mass),
        ("E_B", m.e_b, r.e_b),
        ("E_I", m.e_i, r.e_i),
    ]
}

pub fn comparison(sol: &Solution, r: &SimResult) -> Value {
    object(comparison_rows(sol, r).into_iter().map(|(name, exact, est)| {
        (
            name,
            object([
                ("solver", num(exact)),
                ("simulation", estimate(&est)),
                ("covered", Value::Bool(est.contains(exact))),
            ]),
        )
    }))
}

pub fn complex_rows(rows: &[Vec<Complex64>]) -> Value {
    Value::Array(rows.iter().map(|r| Value::Array(r.iter().map(|&z| complex(z)).collect())).collect())
}
