//! Roots of `det(zI - S(z))` inside the unit disk, plus the single-root
//! approximations built on them.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernels::{Family, KernelSet, Resolvent};
use crate::linalg::{CMat, RMat};
use crate::model::QueueModel;
use crate::solver::BoundarySolution;

const WINDING_RADIUS: f64 = 1.0 - 1e-6;
const GRID_POINTS: usize = 512;
const SEED_RADII: [f64; 2] = [0.999, 0.9];
const INSIDE: f64 = 1.0 - 1e-9;
const POLISH_TARGET: f64 = 1e-12;
const RESIDUAL_LIMIT: f64 = 1e-10;
const DISTINCT: f64 = 1e-8;
const REAL_AXIS: f64 = 1e-9;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `f(z) = det(zI - S(z))` for one model.
#[derive(Clone, Debug)]
pub struct Characteristic {
    resolvent: Resolvent,
    m: usize,
}

impl Characteristic {
    pub fn new(model: &QueueModel) -> Self {
        Characteristic { resolvent: Resolvent::new(&model.arrival, &model.service), m: model.m() }
    }

    pub fn value(&self, z: Complex64) -> Result<Complex64> {
        let s = self.resolvent.kernel(z)?;
        Ok(self.shifted(z, &s).det())
    }

    fn shifted(&self, z: Complex64, s: &CMat) -> CMat {
        &CMat::identity(self.m).scale(z) - s
    }

    /// `f(z)` and the logarithmic derivative `f'(z)/f(z)` from Jacobi's formula.
    pub fn value_and_log_derivative(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        let (s, ds) = self.resolvent.kernel_with_derivative(z)?;
        let a = self.shifted(z, &s);
        let lu = match a.lu() {
            Ok(lu) => lu,
            Err(_) => return Ok((c(0.0, 0.0), c(f64::INFINITY, 0.0))),
        };
        let da = &CMat::identity(self.m) - &ds;
        let x = lu.solve(&da)?;
        Ok((lu.det(), x.trace()))
    }
}

/// `det(zI - S(z))`.
pub fn characteristic_value(model: &QueueModel, z: Complex64) -> Result<Complex64> {
    Characteristic::new(model).value(z)
}

/// Winding number of `f` around the circle `|z| = radius`, returned with the
/// unrounded turn count.
pub fn winding_number(ch: &Characteristic, radius: f64) -> Result<(i64, f64)> {
    let point = |theta: f64| c(radius * libm::cos(theta), radius * libm::sin(theta));
    let mut total = 0.0;
    let step = 2.0 * PI / GRID_POINTS as f64;
    let mut prev = ch.value(point(0.0))?;
    for k in 1..=GRID_POINTS {
        let theta = step * k as f64;
        let next = ch.value(point(theta))?;
        total += arc_change(ch, &point, theta - step, theta, prev, next, 0)?;
        prev = next;
    }
    let turns = total / (2.0 * PI);
    Ok((libm::round(turns) as i64, turns))
}

fn arc_change(
    ch: &Characteristic,
    point: &impl Fn(f64) -> Complex64,
    a: f64,
    b: f64,
    fa: Complex64,
    fb: Complex64,
    depth: u32,
) -> Result<f64> {
    if fa.norm() == 0.0 || fb.norm() == 0.0 {
        let z = point(a);
        return Err(Error::SingularResolvent { re: z.re, im: z.im });
    }
    let d = (fb / fa).arg();
    if d.abs() < PI / 8.0 || depth >= 40 {
        return Ok(d);
    }
    let mid = 0.5 * (a + b);
    let fm = ch.value(point(mid))?;
    Ok(arc_change(ch, point, a, mid, fa, fm, depth + 1)? + arc_change(ch, point, mid, b, fm, fb, depth + 1)?)
}

/// The `m` roots inside the unit disk.
#[derive(Clone, Debug, PartialEq)]
pub struct RootSet {
    /// Sorted by descending modulus, then descending imaginary part.
    pub roots: Vec<Complex64>,
    /// `pairing[i] = Some(j)` when `roots[j]` is the conjugate of `roots[i]`.
    pub pairing: Vec<Option<usize>>,
    /// `max_i |f(γ_i)|`.
    pub residual: f64,
    pub winding: i64,
}

impl RootSet {
    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    pub fn dominant(&self) -> Complex64 {
        self.roots[0]
    }

    fn from_roots(mut roots: Vec<Complex64>, residual: f64, winding: i64) -> Self {
        roots.sort_by(|a, b| {
            b.norm()
                .partial_cmp(&a.norm())
                .unwrap()
                .then(b.im.partial_cmp(&a.im).unwrap())
        });
        let pairing = roots
            .iter()
            .map(|r| {
                if r.im == 0.0 {
                    return None;
                }
                roots.iter().position(|s| (s - r.conj()).norm() < DISTINCT)
            })
            .collect();
        RootSet { roots, pairing, residual, winding }
    }
}

/// Locates and certifies the `m` roots of the characteristic function inside
/// the unit disk.
pub fn find_inner_roots(model: &QueueModel) -> Result<RootSet> {
    let ch = Characteristic::new(model);
    let m = model.m();
    let (winding, _) = winding_number(&ch, WINDING_RADIUS)?;
    if winding != m as i64 {
        return Err(Error::RootCountMismatch { expected: m, found: winding.max(0) as usize });
    }

    let mut found: Vec<Complex64> = Vec::new();
    for seeds in [circle_seeds(&ch)?, interior_seeds()] {
        for z0 in seeds {
            if found.len() >= m {
                break;
            }
            let Some(z) = deflated_newton(&ch, z0, &found)? else { continue };
            let z = polish(&ch, z)?;
            if z.norm() >= INSIDE {
                continue;
            }
            if let Some(near) = found.iter().map(|r| (r - z).norm()).reduce(f64::min) {
                if near < DISTINCT {
                    return Err(Error::MultipleRootsUnsupported(near));
                }
            }
            found.push(z);
            if z.im != 0.0 && found.len() < m {
                let w = polish(&ch, z.conj())?;
                if (w - z.conj()).norm() < 1e-6 {
                    found.push(z.conj());
                }
            }
        }
        if found.len() >= m {
            break;
        }
    }
    if found.len() != m {
        return Err(Error::RootCountMismatch { expected: m, found: found.len() });
    }

    // Exact conjugate closure.
    for i in 0..m {
        if found[i].im == 0.0 {
            continue;
        }
        if let Some(j) = (i + 1..m).find(|&j| (found[j] - found[i].conj()).norm() < 1e-6) {
            found[j] = found[i].conj();
        }
    }
    let residual = found
        .iter()
        .map(|&z| ch.value(z).map(|f| f.norm()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    if residual > RESIDUAL_LIMIT {
        return Err(Error::PolishDivergence(residual));
    }
    let set = RootSet::from_roots(found, residual, winding);
    for (i, r) in set.roots.iter().enumerate() {
        if r.im != 0.0 && set.pairing[i].is_none() {
            return Err(Error::RootCountMismatch { expected: m, found: i });
        }
    }
    Ok(set)
}

/// Seeds from local minima of `|f|` on the grid circles, best first.
fn circle_seeds(ch: &Characteristic) -> Result<Vec<Complex64>> {
    let mut seeds: Vec<(f64, Complex64)> = Vec::new();
    for &r in &SEED_RADII {
        let pts: Vec<Complex64> = (0..GRID_POINTS)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / GRID_POINTS as f64;
                c(r * libm::cos(t), r * libm::sin(t))
            })
            .collect();
        let vals = pts.iter().map(|&z| ch.value(z).map(|f| f.norm())).collect::<Result<Vec<_>>>()?;
        for k in 0..GRID_POINTS {
            let prev = vals[(k + GRID_POINTS - 1) % GRID_POINTS];
            let next = vals[(k + 1) % GRID_POINTS];
            if vals[k] <= prev && vals[k] <= next {
                seeds.push((vals[k], pts[k]));
            }
        }
    }
    seeds.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut out: Vec<Complex64> = seeds.into_iter().map(|s| s.1).collect();
    for k in 0..40 {
        out.push(c(-0.975 + 0.05 * k as f64, 0.0));
    }
    Ok(out)
}

/// A deterministic scatter over the disk, used when the circle seeds miss.
fn interior_seeds() -> Vec<Complex64> {
    let mut out = Vec::new();
    for i in 1..=24 {
        let r = i as f64 / 25.0;
        let n = 8 + 2 * i;
        for k in 0..n {
            let t = 2.0 * PI * (k as f64 + 0.5 * (i % 2) as f64) / n as f64;
            out.push(c(r * libm::cos(t), r * libm::sin(t)));
        }
    }
    out
}

/// Newton on `f(z) / ((z - 1) Π (z - r))`. Returns `None` when the iterate
/// leaves the region of interest or stalls.
fn deflated_newton(ch: &Characteristic, z0: Complex64, found: &[Complex64]) -> Result<Option<Complex64>> {
    let one = c(1.0, 0.0);
    let mut z = z0;
    for _ in 0..200 {
        let (f, dlog) = match ch.value_and_log_derivative(z) {
            Ok(v) => v,
            Err(Error::SingularResolvent { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        if f.norm() == 0.0 {
            return Ok(Some(z));
        }
        let mut g = dlog - one / (z - one);
        for &r in found {
            g -= one / (z - r);
        }
        let mut step = one / g;
        if !step.re.is_finite() || !step.im.is_finite() {
            return Ok(None);
        }
        if step.norm() > 0.25 {
            step = step * (0.25 / step.norm());
        }
        z -= step;
        if z.norm() > 1.5 {
            return Ok(None);
        }
        if step.norm() < 1e-14 * z.norm().max(1.0) {
            return Ok(Some(z));
        }
    }
    Ok(None)
}

/// Plain Newton on `f` from a nearby point. Near-real roots are moved onto
/// the axis and polished there.
fn polish(ch: &Characteristic, z0: Complex64) -> Result<Complex64> {
    let mut z = z0;
    if z.im.abs() < REAL_AXIS {
        z.im = 0.0;
    }
    let real = z.im == 0.0;
    for _ in 0..100 {
        let (f, dlog) = ch.value_and_log_derivative(z)?;
        if f.norm() < POLISH_TARGET * 1e-3 {
            break;
        }
        let mut step = c(1.0, 0.0) / dlog;
        if real {
            step.im = 0.0;
        }
        if !step.re.is_finite() {
            break;
        }
        z -= step;
        if step.norm() < 1e-16 * z.norm().max(1e-3) {
            break;
        }
    }
    Ok(z)
}

/// Mode of the single-root approximation equation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ApproxMode {
    /// Shift `c = ρ`.
    Light,
    /// Shift `c = 1 - ρ`.
    Heavy,
    /// Shift `c = ρ - ρ₁`.
    NearRho(f64),
}

impl ApproxMode {
    pub fn shift(self, rho: f64) -> Result<f64> {
        match self {
            ApproxMode::Light => Ok(rho),
            ApproxMode::Heavy => Ok(1.0 - rho),
            ApproxMode::NearRho(rho1) if rho1 > 0.0 && rho1 < 1.0 => Ok(rho - rho1),
            ApproxMode::NearRho(rho1) => Err(Error::InvalidConfig(alloc::format!(
                "near-rho load {rho1} is outside (0, 1)"
            ))),
        }
    }
}

/// Coefficients `π̄ S_n e` of the scalar series.
struct ScalarSeries {
    coef: Vec<f64>,
}

impl ScalarSeries {
    fn new(terms: &[RMat], left: &[f64]) -> Self {
        let coef = terms
            .iter()
            .map(|s| left.iter().zip(s.row_sums()).map(|(a, b)| a * b).sum())
            .collect();
        ScalarSeries { coef }
    }

    /// `π̄ S^{(d)}(w) e` for `d = 0, 1, 2, 3`.
    fn derivatives(&self, w: f64) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (n, &v) in self.coef.iter().enumerate().rev() {
            let nf = n as f64;
            for (d, o) in out.iter_mut().enumerate() {
                let falling = (0..d).map(|i| nf - i as f64).product::<f64>();
                if falling == 0.0 {
                    continue;
                }
                *o += v * falling * libm::pow(w, nf - d as f64);
            }
        }
        out
    }
}

/// Residual of the approximation equation and its derivative in `z`.
fn approx_equation(series: &ScalarSeries, shift: f64, z: f64) -> (f64, f64) {
    let [s0, s1, s2, s3] = series.derivatives(z - shift);
    let f = z - s0 - shift * s1 - 0.5 * shift * shift * s2;
    let df = 1.0 - s1 - shift * s2 - 0.5 * shift * shift * s3;
    (f, df)
}

/// All real solutions of the approximation equation with `|z - c| ≤ 1` and
/// `|z| ≤ 1`, excluding `z = 1`.
pub fn approximation_solutions(model: &QueueModel, kernels: &KernelSet, mode: ApproxMode) -> Result<Vec<f64>> {
    let shift = mode.shift(model.rho)?;
    let series = ScalarSeries::new(kernels.family(Family::S), model.service.stationary());
    let lo = f64::max(-1.0, shift - 1.0);
    let hi = f64::min(1.0, shift + 1.0);
    const GRID: usize = 4096;
    let xs: Vec<f64> = (0..=GRID).map(|k| lo + (hi - lo) * k as f64 / GRID as f64).collect();
    let fs: Vec<f64> = xs.iter().map(|&z| approx_equation(&series, shift, z).0).collect();
    let mut out: Vec<f64> = Vec::new();
    for k in 0..GRID {
        let (a, b) = (xs[k], xs[k + 1]);
        let (fa, fb) = (fs[k], fs[k + 1]);
        if fa == 0.0 {
            out.push(a);
            continue;
        }
        if fa * fb > 0.0 {
            continue;
        }
        out.push(safeguarded_newton(&series, shift, a, b, fa));
    }
    if fs[GRID] == 0.0 {
        out.push(hi);
    }
    out.retain(|z| (z - 1.0).abs() > 1e-6);
    out.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    Ok(out)
}

fn safeguarded_newton(series: &ScalarSeries, shift: f64, mut a: f64, mut b: f64, fa: f64) -> f64 {
    let mut z = 0.5 * (a + b);
    for _ in 0..200 {
        let (f, df) = approx_equation(series, shift, z);
        if f == 0.0 {
            return z;
        }
        if (f < 0.0) == (fa < 0.0) {
            a = z;
        } else {
            b = z;
        }
        let step = f / df;
        if step.is_finite() && step.abs() <= 1e-15 * z.abs().max(1e-3) {
            return z;
        }
        let newton = z - step;
        z = if newton.is_finite() && newton > a && newton < b { newton } else { 0.5 * (a + b) };
        if b - a < 1e-15 {
            break;
        }
    }
    z
}

/// The real solution of the mode's equation closest to the exact dominant
/// root.
pub fn approximation_root(model: &QueueModel, kernels: &KernelSet, mode: ApproxMode) -> Result<f64> {
    let target = find_inner_roots(model)?.dominant().re;
    let sols = approximation_solutions(model, kernels, mode)?;
    sols.into_iter()
        .min_by(|a, b| (a - target).abs().partial_cmp(&(b - target).abs()).unwrap())
        .ok_or(Error::NoRealSolutionInBracket)
}

/// Few-root asymptotic form of the busy pre-arrival tail.
#[derive(Clone, Debug, PartialEq)]
pub struct TailApproximation {
    pub order: usize,
    pub z_list: Vec<Complex64>,
    pub k_coefficients: Vec<Vec<Complex64>>,
    /// First level from which every phase has relative error below `epsilon`.
    pub n_epsilon: usize,
    /// First level at which the successive-ratio test `|π(n)/(z₁π(n-1)) - 1| < ε`
    /// holds for every phase.
    pub n_epsilon_ratio: usize,
    pub epsilon: f64,
}

impl TailApproximation {
    pub fn approx(&self, n: usize) -> Vec<f64> {
        mix_row(&self.z_list, &self.k_coefficients, n)
    }
}

fn mix_row(z: &[Complex64], k: &[Vec<Complex64>], n: usize) -> Vec<f64> {
    let m = k.first().map_or(0, Vec::len);
    let mut out = vec![0.0; m];
    for (zi, ki) in z.iter().zip(k) {
        let p = zi.powu(n as u32);
        for (o, kij) in out.iter_mut().zip(ki) {
            *o += (kij * p).re;
        }
    }
    out
}

pub fn tail_approximation(
    solution: &BoundarySolution,
    roots: &RootSet,
    order: usize,
    epsilon: f64,
) -> Result<TailApproximation> {
    let m = roots.len();
    if order == 0 || order > m {
        return Err(Error::OrderExceedsRoots { order, roots: m });
    }
    let mut take = order;
    if take < m && roots.pairing[take - 1] == Some(take) {
        take += 1;
    }
    let z_list: Vec<Complex64> = roots.roots[..take].to_vec();
    let k_coefficients: Vec<Vec<Complex64>> = (0..take).map(|i| solution.k.row(i).to_vec()).collect();
    let all_k: Vec<Vec<Complex64>> = (0..m).map(|i| solution.k.row(i).to_vec()).collect();

    // Horizon after which the dropped roots are negligible against ε.
    let lead = roots.roots[0].norm();
    let dropped = roots.roots.get(take).map_or(0.0, |z| z.norm());
    let horizon = if dropped == 0.0 || lead == 0.0 {
        4
    } else {
        let n = libm::log(epsilon * 1e-3) / libm::log(dropped / lead);
        (n.max(0.0) as usize + 4).min(20_000)
    };

    let mut n_epsilon = 0;
    let mut n_ratio = None;
    let mut prev_exact: Option<Vec<f64>> = None;
    let z1 = roots.roots[0];
    for n in 0..=horizon {
        let exact = mix_row(&roots.roots, &all_k, n);
        let approx = mix_row(&z_list, &k_coefficients, n);
        let worst = relative_error(&exact, &approx);
        if worst >= epsilon {
            n_epsilon = n + 1;
        }
        if let (Some(p), None) = (&prev_exact, n_ratio) {
            let ok = exact.iter().zip(p).all(|(e, q)| {
                let denom = z1 * *q;
                denom.norm() > 0.0 && ((c(*e, 0.0) / denom) - c(1.0, 0.0)).norm() < epsilon
            });
            if ok {
                n_ratio = Some(n);
            }
        }
        if exact.iter().all(|x| x.abs() < 1e-300) {
            break;
        }
        prev_exact = Some(exact);
    }
    Ok(TailApproximation {
        order,
        z_list,
        k_coefficients,
        n_epsilon,
        n_epsilon_ratio: n_ratio.unwrap_or(horizon),
        epsilon,
    })
}

fn relative_error(exact: &[f64], approx: &[f64]) -> f64 {
    exact
        .iter()
        .zip(approx)
        .filter(|(e, _)| e.abs() > 1e-300)
        .map(|(e, a)| (1.0 - a / e).abs())
        .fold(0.0, f64::max)
}
