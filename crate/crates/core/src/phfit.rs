//! Acyclic phase-type approximation of a non-PH inter-arrival law:
//! moments, a Padé approximant of the transform, rates from its poles and a
//! weighted moment fit of the initial vector.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{dot, least_squares, ones, RMat};
use crate::model::{stationary_vector, MspService, PhDistribution};

const MAX_MOMENTS: usize = 25;

/// A distribution known through its moments.
pub trait MomentTarget {
    /// `E[X^k]`.
    fn moment(&self, k: u32) -> f64;
}

/// Log-normal law with `ln X ~ N(scale, shape²)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogNormal {
    pub shape: f64,
    pub scale: f64,
}

impl LogNormal {
    /// The arrival law of the fitted example: shape 1.04, scale 0.215.
    pub const REFERENCE: LogNormal = LogNormal { shape: 1.04, scale: 0.215 };

    pub fn density(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let z = (libm::log(x) - self.scale) / self.shape;
        libm::exp(-0.5 * z * z) / (x * self.shape * libm::sqrt(2.0 * core::f64::consts::PI))
    }
}

impl MomentTarget for LogNormal {
    fn moment(&self, k: u32) -> f64 {
        let k = k as f64;
        libm::exp(k * self.scale + 0.5 * k * k * self.shape * self.shape)
    }
}

/// `μ_1..μ_count`.
pub fn target_moments(target: &dyn MomentTarget, count: usize) -> Result<Vec<f64>> {
    if count > MAX_MOMENTS {
        return Err(Error::Overflow(format!("{count} moments requested, at most {MAX_MOMENTS} supported")));
    }
    (1..=count as u32)
        .map(|k| {
            let m = target.moment(k);
            if m.is_finite() {
                Ok(m)
            } else {
                Err(Error::Overflow(format!("moment {k} is not finite")))
            }
        })
        .collect()
}

/// Rational approximant `N(s)/D(s)` with `N(0) = D(0) = 1`, coefficients in
/// ascending powers of `s`.
#[derive(Clone, Debug, PartialEq)]
pub struct Pade {
    pub numerator: Vec<f64>,
    pub denominator: Vec<f64>,
}

impl Pade {
    pub fn eval(&self, s: Complex64) -> Complex64 {
        horner(&self.numerator, s) / horner(&self.denominator, s)
    }
}

fn horner(c: &[f64], s: Complex64) -> Complex64 {
    c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &x| acc * s + x)
}

/// Series coefficients `c_k = (-1)^k μ_k / k!` of the transform, `c_0 = 1`.
pub fn lst_series(moments: &[f64]) -> Vec<f64> {
    let mut out = vec![1.0];
    let mut fact = 1.0;
    for (i, &mu) in moments.iter().enumerate() {
        let k = i + 1;
        fact *= k as f64;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        out.push(sign * mu / fact);
    }
    out
}

/// `[p/q]` Padé approximant of `Σ c_k s^k` from `μ_1..μ_{p+q}` (at least).
pub fn pade_lst(moments: &[f64], p: usize, q: usize) -> Result<Pade> {
    if moments.len() < p + q {
        return Err(Error::InvalidConfig(format!(
            "a [{p}/{q}] approximant needs {} moments, got {}",
            p + q,
            moments.len()
        )));
    }
    let c = lst_series(moments);
    let coef = |k: isize| if k < 0 { 0.0 } else { c[k as usize] };
    let mut d = vec![1.0];
    if q > 0 {
        // Σ_{j=1..q} d_j c_{k-j} = -c_k for k = p+1..p+q.
        let a = RMat::from_fn(q, q, |r, j| coef((p + 1 + r) as isize - (j + 1) as isize));
        let rhs: Vec<f64> = (0..q).map(|r| -coef((p + 1 + r) as isize)).collect();
        let lu = a.lu().map_err(|_| Error::SingularPadeSystem)?;
        if a.condition_number() > 1e15 {
            return Err(Error::SingularPadeSystem);
        }
        d.extend(lu.solve_vec(&rhs));
    }
    let numerator = (0..=p)
        .map(|k| (0..=k.min(q)).map(|j| d[j] * coef(k as isize - j as isize)).sum())
        .collect();
    Ok(Pade { numerator, denominator: d })
}

/// Rates `|s_i|` of the real negative poles of the approximant, ascending.
pub fn rates_from_denominator(pade: &Pade) -> Result<Vec<f64>> {
    let roots = polynomial_roots(&pade.denominator)?;
    let mut rates = Vec::with_capacity(roots.len());
    for r in roots {
        if r.im.abs() > 1e-8 * r.norm() || r.re >= 0.0 {
            return Err(Error::ComplexDenominatorRoots);
        }
        rates.push(-r.re);
    }
    rates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(rates)
}

/// Roots of `Σ c_k s^k` (ascending coefficients) by Durand–Kerner iteration
/// followed by Newton polishing.
pub fn polynomial_roots(coef: &[f64]) -> Result<Vec<Complex64>> {
    let mut c = coef.to_vec();
    while c.len() > 1 && *c.last().unwrap() == 0.0 {
        c.pop();
    }
    let n = c.len() - 1;
    if n == 0 {
        return Ok(Vec::new());
    }
    let lead = c[n];
    let monic: Vec<f64> = c.iter().map(|x| x / lead).collect();
    let bound = 1.0 + monic[..n].iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let seed = Complex64::new(0.4, 0.9);
    let mut z: Vec<Complex64> = (0..n).map(|k| seed.powu(k as u32) * bound.min(1e6) * 0.5).collect();
    for _ in 0..2000 {
        let mut delta: f64 = 0.0;
        for i in 0..n {
            let mut den = Complex64::new(1.0, 0.0);
            for j in 0..n {
                if j != i {
                    den *= z[i] - z[j];
                }
            }
            let step = horner(&monic, z[i]) / den;
            z[i] -= step;
            delta = delta.max(step.norm() / z[i].norm().max(1e-300));
        }
        if delta < 1e-15 {
            break;
        }
    }
    let deriv: Vec<f64> = (1..=n).map(|k| k as f64 * monic[k]).collect();
    for zi in z.iter_mut() {
        for _ in 0..5 {
            let d = horner(&deriv, *zi);
            if d.norm() == 0.0 {
                break;
            }
            *zi -= horner(&monic, *zi) / d;
        }
        if zi.im.abs() < 1e-12 * zi.norm() {
            zi.im = 0.0;
        }
    }
    if z.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
        return Err(Error::ComplexDenominatorRoots);
    }
    Ok(z)
}

/// Acyclic PH in canonical bidiagonal form: phase `i` moves to `i+1` at rate
/// `t_i`, the last phase exits.
#[derive(Clone, Debug, PartialEq)]
pub struct AcyclicPhFit {
    pub rates: Vec<f64>,
    pub alpha: Vec<f64>,
    pub objective: f64,
    pub weights: Vec<f64>,
}

pub fn bidiagonal(rates: &[f64]) -> RMat {
    let n = rates.len();
    RMat::from_fn(n, n, |i, j| {
        if i == j {
            -rates[i]
        } else if j == i + 1 {
            rates[i]
        } else {
            0.0
        }
    })
}

impl AcyclicPhFit {
    pub fn generator(&self) -> RMat {
        bidiagonal(&self.rates)
    }

    pub fn to_ph(&self) -> Result<PhDistribution> {
        PhDistribution::new(self.alpha.clone(), self.generator())
    }
}

/// Columns `v_i = i! (-T)^{-i} e`, so that `μ_i^PH = α · v_i`.
fn moment_basis(rates: &[f64], count: usize) -> Result<Vec<Vec<f64>>> {
    let neg_t = bidiagonal(rates).scale(-1.0);
    let lu = neg_t.lu()?;
    let mut v = ones(rates.len());
    let mut fact = 1.0;
    let mut out = Vec::with_capacity(count);
    for i in 1..=count {
        v = lu.solve_vec(&v);
        fact *= i as f64;
        out.push(v.iter().map(|x| x * fact).collect());
    }
    Ok(out)
}

fn objective(target: &[f64], basis: &[Vec<f64>], weights: &[f64], alpha: &[f64]) -> f64 {
    target
        .iter()
        .zip(basis)
        .zip(weights)
        .map(|((mu, v), w)| {
            let e = mu - dot(alpha, v);
            w * e * e
        })
        .sum()
}

/// Minimizes `Σ w_i (μ_i - μ_i^PH(α))²` over the simplex for fixed rates.
///
/// A `1e-3` grid gives a certified starting point; since the moments are
/// linear in `α` the objective is a convex quadratic, and the grid optimum is
/// refined to the exact constrained minimum by solving the least-squares
/// problem on every face of the simplex.
pub fn fit_alpha(target: &[f64], rates: &[f64], weights: &[f64]) -> Result<AcyclicPhFit> {
    let eta = rates.len();
    if eta == 0 || eta > 3 {
        return Err(Error::InvalidConfig(format!("acyclic fits of order {eta} are not supported")));
    }
    if target.len() != weights.len() || weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::InvalidConfig("weights must be nonnegative, one per moment".into()));
    }
    let basis = moment_basis(rates, target.len())?;
    let eval = |a: &[f64]| objective(target, &basis, weights, a);

    const STEPS: usize = 1000;
    let mut best = vec![0.0; eta];
    best[eta - 1] = 1.0;
    let mut best_obj = eval(&best);
    let consider = |a: Vec<f64>, best: &mut Vec<f64>, best_obj: &mut f64| {
        let o = eval(&a);
        if o < *best_obj {
            *best_obj = o;
            *best = a;
        }
    };
    match eta {
        1 => {}
        2 => {
            for i in 0..=STEPS {
                let a = i as f64 / STEPS as f64;
                consider(vec![a, 1.0 - a], &mut best, &mut best_obj);
            }
        }
        _ => {
            for i in 0..=STEPS {
                for j in 0..=STEPS - i {
                    let a1 = i as f64 / STEPS as f64;
                    let a2 = j as f64 / STEPS as f64;
                    consider(vec![a1, a2, (1.0 - a1 - a2).max(0.0)], &mut best, &mut best_obj);
                }
            }
        }
    }

    for mask in 1u32..(1 << eta) {
        let face: Vec<usize> = (0..eta).filter(|&j| mask & (1 << j) != 0).collect();
        if let Some(a) = face_minimum(target, &basis, weights, &face, eta) {
            consider(a, &mut best, &mut best_obj);
        }
    }
    Ok(AcyclicPhFit { rates: rates.to_vec(), alpha: best, objective: best_obj, weights: weights.to_vec() })
}

/// Least-squares minimizer on the relative interior of one face, if feasible.
fn face_minimum(target: &[f64], basis: &[Vec<f64>], weights: &[f64], face: &[usize], eta: usize) -> Option<Vec<f64>> {
    let last = *face.last()?;
    let free = &face[..face.len() - 1];
    let mut alpha = vec![0.0; eta];
    if free.is_empty() {
        alpha[last] = 1.0;
        return Some(alpha);
    }
    let rows: Vec<usize> = (0..target.len()).filter(|&i| weights[i] > 0.0).collect();
    if rows.len() < free.len() {
        return None;
    }
    let mut a = RMat::from_fn(rows.len(), free.len(), |r, j| {
        let i = rows[r];
        libm::sqrt(weights[i]) * (basis[i][free[j]] - basis[i][last])
    });
    let b: Vec<f64> = rows.iter().map(|&i| libm::sqrt(weights[i]) * (target[i] - basis[i][last])).collect();
    let scales: Vec<f64> = (0..free.len())
        .map(|j| {
            let n = libm::sqrt((0..rows.len()).map(|r| a[(r, j)] * a[(r, j)]).sum::<f64>());
            if n > 0.0 { n } else { 1.0 }
        })
        .collect();
    for r in 0..rows.len() {
        for (j, s) in scales.iter().enumerate() {
            a[(r, j)] /= s;
        }
    }
    let y = least_squares(&a, &b).ok()?;
    let mut rest = 1.0;
    for (j, &f) in free.iter().enumerate() {
        alpha[f] = y[j] / scales[j];
        rest -= alpha[f];
    }
    alpha[last] = rest;
    if alpha.iter().any(|&x| x < 0.0) {
        return None;
    }
    Some(alpha)
}

/// Stationary lag-1 correlation of successive inter-completion times.
pub fn service_lag1_correlation(service: &MspService) -> Result<f64> {
    let m = service.order();
    let neg_l0 = service.l0().scale(-1.0);
    let lu = neg_l0.lu()?;
    let p = service.embedded_matrix();
    let q = &p - &RMat::identity(m);
    let phi = stationary_vector(&q)?;
    let mu = service.fundamental_rate();
    let h = lu.solve_vec(&ones(m));
    let h2 = lu.solve_vec(&h);
    let cross = lu.solve_vec(&p.mul_vec(&h));
    let num = mu * mu * dot(&phi, &cross) - 1.0;
    let den = 2.0 * mu * mu * dot(&phi, &h2) - 1.0;
    if den.abs() < 1e-14 {
        return Err(Error::DegenerateVariance);
    }
    Ok(num / den)
}
