//! Fixed-width text tables at six decimals: levels by phases with a row-sum
//! column, one block per epoch.

use std::fmt::Write;

use qvsolve_core::model::QueueModel;
use qvsolve_core::roots::RootSet;
use qvsolve_core::solver::{LevelSeries, Measures, Solution};

const WIDTH: usize = 11;

pub fn f6(x: f64) -> String {
    // Keeps "-0.000000" out of the tables.
    let s = format!("{x:.6}");
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') { s.replace('-', "") } else { s }
}

pub fn complex6(re: f64, im: f64) -> String {
    if im == 0.0 {
        f6(re)
    } else {
        let sign = if im < 0.0 { '-' } else { '+' };
        format!("{}{sign}{}i", f6(re), f6(im.abs()))
    }
}

fn header(out: &mut String, title: &str, width: usize) {
    let _ = writeln!(out, "{title}");
    let _ = write!(out, "{:>5}", "n");
    for j in 1..=width {
        let _ = write!(out, "{:>WIDTH$}", format!("j={j}"));
    }
    let _ = writeln!(out, "{:>WIDTH$}", "sum");
}

fn row(out: &mut String, label: &str, values: &[f64]) {
    let _ = write!(out, "{label:>5}");
    for &x in values {
        let _ = write!(out, "{:>WIDTH$}", f6(x));
    }
    let _ = writeln!(out, "{:>WIDTH$}", f6(values.iter().sum()));
}

/// One block: rows `0..levels` and the full per-phase totals.
pub fn series_block(out: &mut String, title: &str, s: &LevelSeries, levels: usize) {
    header(out, title, s.width);
    for n in 0..levels {
        row(out, &n.to_string(), &s.row(n));
    }
    row(out, "sum", &s.total());
    out.push('\n');
}

pub fn footer(m: &Measures) -> String {
    format!("L_S = {}, W_s = {}, W_s(LL) = {}", f6(m.l_s), f6(m.w_s), f6(m.w_s_little))
}

pub fn model_summary(model: &QueueModel) -> String {
    format!(
        "lambda = {}, mu* = {}, rho = {}, omega = {}, tau = {}\n",
        f6(model.lambda),
        f6(model.service.fundamental_rate()),
        f6(model.rho),
        f6(model.omega),
        f6(model.tau)
    )
}

pub fn root_lines(roots: &RootSet) -> String {
    let mut out = String::new();
    for (i, z) in roots.roots.iter().enumerate() {
        let _ = writeln!(out, "gamma_{} = {}", i + 1, complex6(z.re, z.im));
    }
    out
}

pub fn solve_table(model: &QueueModel, sol: &Solution, levels: usize) -> String {
    let mut out = model_summary(model);
    out.push('\n');
    series_block(&mut out, "Pre-arrival, vacation", &sol.pre_arrival.vacation, levels);
    series_block(&mut out, "Pre-arrival, busy", &sol.pre_arrival.busy, levels);
    series_block(&mut out, "Arbitrary, vacation", &sol.arbitrary.vacation, levels);
    series_block(&mut out, "Arbitrary, dormant (n = 0) or busy", &sol.arbitrary.busy, levels);
    series_block(&mut out, "Post-departure", &sol.departure.post_departure, levels);
    series_block(&mut out, "Pre-service", &sol.departure.pre_service, levels);
    out.push_str(&footer(&sol.measures));
    out.push('\n');
    out
}
