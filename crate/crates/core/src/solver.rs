//! Boundary system, epoch distributions and performance measures.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernels::{Family, KernelOptions, KernelSet};
use crate::linalg::{max_abs_diff, sum, CMat, RMat};
use crate::model::QueueModel;
use crate::roots::{find_inner_roots, RootSet};

const CONDITION_LIMIT: f64 = 1e12;
const CONJUGATE_TOL: f64 = 1e-8;
const IMAG_TOL: f64 = 1e-10;
const NEGATIVE_TOL: f64 = 1e-9;
const PRE_ARRIVAL_MASS_TOL: f64 = 1e-9;
/// Largest arbitrary-epoch mass defect absorbed by renormalization.
pub const MASS_DEFECT_LIMIT: f64 = 0.25;
const NEGATIVITY_SCAN: usize = 256;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Which balance equation a boundary row comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Block {
    /// Level-0 balance of the vacation states.
    Vacation,
    /// Level-0 balance of the dormant/busy states.
    LevelZero,
    /// Busy-state balance at level `n`, `1 ≤ n ≤ m - 1`.
    Level(usize),
    Normalization,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EquationLabel {
    pub block: Block,
    pub component: usize,
}

/// All `m(m+1) + 1` boundary equations in the unknowns
/// `u = (k_11..k_1m, .., k_m1..k_mm, b_1..b_m)`, one equation per row.
#[derive(Clone, Debug)]
pub struct BoundarySystem {
    pub matrix: CMat,
    pub rhs: Vec<Complex64>,
    pub labels: Vec<EquationLabel>,
    /// Row left out of the square solve.
    pub dropped: usize,
    pub condition: f64,
    roots: RootSet,
}

impl BoundarySystem {
    pub fn unknowns(&self) -> usize {
        self.matrix.cols()
    }

    fn active(&self) -> (CMat, Vec<Complex64>) {
        active_rows(&self.matrix, &self.rhs, self.dropped)
    }
}

fn active_rows(a: &CMat, rhs: &[Complex64], dropped: usize) -> (CMat, Vec<Complex64>) {
    let rows: Vec<Vec<Complex64>> =
        (0..a.rows()).filter(|&r| r != dropped).map(|r| a.row(r).to_vec()).collect();
    let b = rhs.iter().enumerate().filter(|(r, _)| *r != dropped).map(|(_, &x)| x).collect();
    (CMat::from_rows(&rows).expect("rows have equal length"), b)
}

pub fn assemble_boundary_system(model: &QueueModel, kernels: &KernelSet, roots: &RootSet) -> Result<BoundarySystem> {
    let m = model.m();
    let n_unknowns = m * m + m;
    let omega = model.omega;
    let w = c(omega);
    let id = CMat::identity(m);
    let g = |f: Family, x: Complex64| kernels.generating(f, x);

    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    let mut labels = Vec::new();
    let mut push_block = |block: Block, ck: &[CMat], cb: &CMat| {
        for j in 0..m {
            let mut row = vec![c(0.0); n_unknowns];
            for (i, k) in ck.iter().enumerate() {
                for l in 0..m {
                    row[i * m + l] = k[(l, j)];
                }
            }
            for l in 0..m {
                row[m * m + l] = cb[(l, j)];
            }
            rows.push(row);
            labels.push(EquationLabel { block, component: j });
        }
    };

    let gvs_w = g(Family::VStar, w);
    let gcs_w = g(Family::CStar, w);
    let one_minus_w = c(1.0 - omega);

    let ck: Vec<CMat> = roots.roots.iter().map(|&z| g(Family::VStar, z).scale(-one_minus_w)).collect();
    let cb = &id - &(&gvs_w.scale(one_minus_w) - &gcs_w);
    push_block(Block::Vacation, &ck, &cb);

    let ck: Vec<CMat> = roots
        .roots
        .iter()
        .map(|&z| {
            let jump = &g(Family::V, z) - &g(Family::S, z);
            &id - &(&g(Family::VStar, z).scale(w) + &jump.scale(c(1.0) / (c(1.0) - z)))
        })
        .collect();
    push_block(Block::LevelZero, &ck, &gcs_w.scale(c(-1.0)));

    let v_w = g(Family::V, w);
    let s_at: Vec<CMat> = roots.roots.iter().map(|&z| g(Family::S, z)).collect();
    for n in 1..m {
        let ck: Vec<CMat> = roots
            .roots
            .iter()
            .zip(&s_at)
            .map(|(&z, s)| &id.scale(z.powu(n as u32)) - &s.scale(z.powu(n as u32 - 1)))
            .collect();
        let cb = v_w.scale(c(-(1.0 - omega) * libm::pow(omega, (n - 1) as f64)));
        push_block(Block::Level(n), &ck, &cb);
    }

    let mut norm = vec![c(0.0); n_unknowns];
    for (i, &z) in roots.roots.iter().enumerate() {
        for l in 0..m {
            norm[i * m + l] = c(1.0) / (c(1.0) - z);
        }
    }
    for l in 0..m {
        norm[m * m + l] = c(1.0 / (1.0 - omega));
    }
    rows.push(norm);
    labels.push(EquationLabel { block: Block::Normalization, component: 0 });
    let mut rhs = vec![c(0.0); rows.len()];
    *rhs.last_mut().unwrap() = c(1.0);
    let matrix = CMat::from_rows(&rows)?;

    // Drop one component of the highest-level block, last component first.
    let last_block = if m > 1 { Block::Level(m - 1) } else { Block::LevelZero };
    let mut best = f64::INFINITY;
    for comp in (0..m).rev() {
        let idx = labels
            .iter()
            .position(|l| l.block == last_block && l.component == comp)
            .expect("block present");
        let (a, _) = active_rows(&matrix, &rhs, idx);
        let cond = a.condition_number();
        if cond <= CONDITION_LIMIT {
            return Ok(BoundarySystem { matrix, rhs, labels, dropped: idx, condition: cond, roots: roots.clone() });
        }
        best = best.min(cond);
    }
    Err(Error::IllConditioned(best))
}

/// Boundary constants: `π₀⁻(0) = b` and `π₁⁻(n) = Σ_i k_i γ_iⁿ`.
#[derive(Clone, Debug)]
pub struct BoundarySolution {
    /// Row `i` pairs with `roots.roots[i]`.
    pub k: CMat,
    pub b: Vec<f64>,
    pub roots: RootSet,
    /// Largest violation among the equations that were solved.
    pub residual: f64,
    /// Violation of the equation left out of the solve.
    pub dropped_residual: f64,
    pub dropped: EquationLabel,
    /// Largest violation of the normalization condition.
    pub normalization_error: f64,
    /// Conjugate mismatch of `k` before symmetrization.
    pub conjugate_deviation: f64,
    pub condition: f64,
}

pub fn solve_boundary(system: &BoundarySystem) -> Result<BoundarySolution> {
    let roots = &system.roots;
    let m = roots.len();
    let (a, rhs) = system.active();
    let lu = a.lu().map_err(|_| Error::IllConditioned(f64::INFINITY))?;
    let u = lu.solve_vec(&rhs);

    let mut k = CMat::from_fn(m, m, |i, j| u[i * m + j]);
    let mut deviation: f64 = 0.0;
    for i in 0..m {
        match roots.pairing[i] {
            Some(p) if p > i => {
                for j in 0..m {
                    deviation = deviation.max((k[(i, j)] - k[(p, j)].conj()).norm());
                    let avg = (k[(i, j)] + k[(p, j)].conj()) * 0.5;
                    k[(i, j)] = avg;
                    k[(p, j)] = avg.conj();
                }
            }
            Some(_) => {}
            None => {
                for j in 0..m {
                    deviation = deviation.max(k[(i, j)].im.abs());
                    k[(i, j)].im = 0.0;
                }
            }
        }
    }
    let mut b = Vec::with_capacity(m);
    for j in 0..m {
        let x = u[m * m + j];
        deviation = deviation.max(x.im.abs());
        if x.re < -NEGATIVE_TOL {
            return Err(Error::NegativeProbability { level: 0, value: x.re });
        }
        b.push(x.re.max(0.0));
    }
    if deviation > CONJUGATE_TOL {
        return Err(Error::ConjugateAsymmetry(deviation));
    }

    let mut sym = Vec::with_capacity(u.len());
    for i in 0..m {
        sym.extend_from_slice(k.row(i));
    }
    sym.extend(b.iter().map(|&x| c(x)));
    let res = system.matrix.mul_vec(&sym);
    let mut residual: f64 = 0.0;
    for (r, (got, want)) in res.iter().zip(&system.rhs).enumerate() {
        if r != system.dropped {
            residual = residual.max((got - want).norm());
        }
    }
    let dropped_residual = (res[system.dropped] - system.rhs[system.dropped]).norm();
    let normalization_error = (res[res.len() - 1] - c(1.0)).norm();
    Ok(BoundarySolution {
        k,
        b,
        roots: roots.clone(),
        residual,
        dropped_residual,
        dropped: system.labels[system.dropped],
        normalization_error,
        conjugate_deviation: deviation,
        condition: system.condition,
    })
}

/// One geometric component `coef · ratioⁿ` of a level sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct GeometricTerm {
    pub ratio: Complex64,
    pub coef: Vec<Complex64>,
}

/// A level-indexed sequence of row vectors: explicit rows for
/// `n < head.len()`, then `Re Σ coef · ratio^(n - head.len())`.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelSeries {
    pub width: usize,
    pub head: Vec<Vec<f64>>,
    pub tail: Vec<GeometricTerm>,
}

impl LevelSeries {
    pub fn geometric(width: usize, tail: Vec<GeometricTerm>) -> Self {
        LevelSeries { width, head: Vec::new(), tail }
    }

    fn tail_value(&self, offset: usize) -> Vec<Complex64> {
        let mut out = vec![c(0.0); self.width];
        for t in &self.tail {
            let p = t.ratio.powu(offset as u32);
            for (o, &x) in out.iter_mut().zip(&t.coef) {
                *o += x * p;
            }
        }
        out
    }

    pub fn row(&self, n: usize) -> Vec<f64> {
        match self.head.get(n) {
            Some(r) => r.clone(),
            None => self.tail_value(n - self.head.len()).iter().map(|z| z.re).collect(),
        }
    }

    /// Largest imaginary part left over in row `n`.
    pub fn row_imag(&self, n: usize) -> f64 {
        if n < self.head.len() {
            return 0.0;
        }
        self.tail_value(n - self.head.len()).iter().fold(0.0, |m, z| m.max(z.im.abs()))
    }

    /// `Σ_n row(n)`.
    pub fn total(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.width];
        for r in &self.head {
            for (o, x) in out.iter_mut().zip(r) {
                *o += x;
            }
        }
        for t in &self.tail {
            let f = c(1.0) / (c(1.0) - t.ratio);
            for (o, x) in out.iter_mut().zip(&t.coef) {
                *o += (x * f).re;
            }
        }
        out
    }

    pub fn mass(&self) -> f64 {
        sum(&self.total())
    }

    /// `Σ_n n · row(n)`.
    pub fn first_moment(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.width];
        for (n, r) in self.head.iter().enumerate() {
            for (o, x) in out.iter_mut().zip(r) {
                *o += n as f64 * x;
            }
        }
        let h = c(self.head.len() as f64);
        for t in &self.tail {
            let d = c(1.0) - t.ratio;
            let f = h / d + t.ratio / (d * d);
            for (o, x) in out.iter_mut().zip(&t.coef) {
                *o += (x * f).re;
            }
        }
        out
    }

    pub fn scaled(&self, f: f64) -> Self {
        LevelSeries {
            width: self.width,
            head: self.head.iter().map(|r| r.iter().map(|x| x * f).collect()).collect(),
            tail: self
                .tail
                .iter()
                .map(|t| GeometricTerm { ratio: t.ratio, coef: t.coef.iter().map(|x| x * f).collect() })
                .collect(),
        }
    }

    /// Every row multiplied on the right by `a`.
    pub fn map_right(&self, a: &RMat) -> Self {
        let ac = a.to_complex();
        LevelSeries {
            width: a.cols(),
            head: self.head.iter().map(|r| a.left_mul_vec(r)).collect(),
            tail: self
                .tail
                .iter()
                .map(|t| GeometricTerm { ratio: t.ratio, coef: ac.left_mul_vec(&t.coef) })
                .collect(),
        }
    }

    /// Same sequence with at least `h` explicit rows.
    pub fn materialize(&self, h: usize) -> Self {
        if self.head.len() >= h {
            return self.clone();
        }
        let shift = h - self.head.len();
        let mut head = self.head.clone();
        for n in self.head.len()..h {
            head.push(self.row(n));
        }
        let tail = self
            .tail
            .iter()
            .map(|t| {
                let p = t.ratio.powu(shift as u32);
                GeometricTerm { ratio: t.ratio, coef: t.coef.iter().map(|x| x * p).collect() }
            })
            .collect();
        LevelSeries { width: self.width, head, tail }
    }

    /// The sequence `n ↦ row(n + k)`.
    pub fn drop_first(&self, k: usize) -> Self {
        let mut s = self.materialize(k);
        s.head.drain(..k);
        s
    }

    /// First level with a component below `-tol` among `0..levels`.
    fn first_negative(&self, levels: usize, tol: f64) -> Option<(usize, f64)> {
        (0..levels).find_map(|n| {
            let r = self.row(n);
            r.iter().copied().find(|&x| x < -tol).map(|x| (n, x))
        })
    }

    fn clip_head(&mut self) {
        for r in &mut self.head {
            for x in r.iter_mut() {
                if *x < 0.0 {
                    *x = 0.0;
                }
            }
        }
    }
}

/// Queue-length distribution just before arrivals.
#[derive(Clone, Debug)]
pub struct PreArrival {
    /// `π₀⁻(n) = b ωⁿ`.
    pub vacation: LevelSeries,
    /// `π₁⁻(n) = Σ_i k_i γ_iⁿ`.
    pub busy: LevelSeries,
}

impl PreArrival {
    pub fn mass(&self) -> f64 {
        self.vacation.mass() + self.busy.mass()
    }
}

pub fn pre_arrival_distribution(solution: &BoundarySolution, model: &QueueModel) -> Result<PreArrival> {
    let m = model.m();
    let vacation = LevelSeries::geometric(
        m,
        vec![GeometricTerm { ratio: c(model.omega), coef: solution.b.iter().map(|&x| c(x)).collect() }],
    );
    let busy = LevelSeries::geometric(
        m,
        solution
            .roots
            .roots
            .iter()
            .enumerate()
            .map(|(i, &z)| GeometricTerm { ratio: z, coef: solution.k.row(i).to_vec() })
            .collect(),
    );
    for n in 0..NEGATIVITY_SCAN {
        let im = busy.row_imag(n);
        if im > IMAG_TOL {
            return Err(Error::ConjugateAsymmetry(im));
        }
    }
    for s in [&vacation, &busy] {
        if let Some((level, value)) = s.first_negative(NEGATIVITY_SCAN, NEGATIVE_TOL) {
            return Err(Error::NegativeProbability { level, value });
        }
    }
    let pre = PreArrival { vacation, busy };
    let defect = pre.mass() - 1.0;
    if defect.abs() > PRE_ARRIVAL_MASS_TOL {
        return Err(Error::MassDefect(defect));
    }
    Ok(pre)
}

/// Queue-length distribution at an arbitrary time.
#[derive(Clone, Debug)]
pub struct Arbitrary {
    pub vacation: LevelSeries,
    /// Level 0 is the dormant server, levels `n ≥ 1` are busy.
    pub busy: LevelSeries,
    /// Total mass before renormalization.
    pub raw_mass: f64,
    /// Probability that the server is busy.
    pub rho_prime: f64,
    /// `(1/ρ′) Σ_{n≥1} π₁(n)`.
    pub cond_busy_phase: Vec<f64>,
    /// `‖cond_busy_phase - π̄‖∞`.
    pub stationary_gap: f64,
}

pub fn arbitrary_distribution(
    solution: &BoundarySolution,
    model: &QueueModel,
    kernels: &KernelSet,
) -> Result<Arbitrary> {
    let m = model.m();
    let g = |f: Family, x: Complex64| kernels.generating(f, x);
    let w = c(model.omega);
    let tau = c(model.tau);
    let one = c(1.0);
    let b: Vec<Complex64> = solution.b.iter().map(|&x| c(x)).collect();
    let roots = &solution.roots.roots;
    let k = |i: usize| solution.k.row(i).to_vec();

    let mut pi00 = vec![c(0.0); m];
    let mut pi10 = vec![c(0.0); m];
    let mut pi11 = vec![c(0.0); m];
    let add = |acc: &mut Vec<Complex64>, v: Vec<Complex64>| {
        for (a, x) in acc.iter_mut().zip(v) {
            *a += x;
        }
    };

    let gds_w = g(Family::DeltaStar, w);
    let gps_w = g(Family::PhiStar, w);
    add(&mut pi00, (&gds_w.scale(one - tau) - &gps_w).left_mul_vec(&b));
    add(&mut pi10, gps_w.left_mul_vec(&b));
    let delta_w = g(Family::Delta, w);
    add(&mut pi11, delta_w.scale(one - tau).left_mul_vec(&b));

    let mut busy_tail = vec![GeometricTerm {
        ratio: w,
        coef: delta_w.scale((one - tau) * w).left_mul_vec(&b),
    }];
    let mut dormant_entry = vec![c(0.0); m];
    for (i, &z) in roots.iter().enumerate() {
        let ki = k(i);
        let gds = g(Family::DeltaStar, z);
        let delta = g(Family::Delta, z);
        let omega = g(Family::Omega, z);
        add(&mut pi00, gds.scale(one - tau).left_mul_vec(&ki));
        let jump = (&delta - &omega).scale(one / (one - z));
        add(&mut pi10, (&gds.scale(tau) + &jump).left_mul_vec(&ki));
        add(&mut pi11, omega.left_mul_vec(&ki));
        busy_tail.push(GeometricTerm { ratio: z, coef: omega.scale(z).left_mul_vec(&ki) });
        add(&mut dormant_entry, ki);
    }
    let omega0 = kernels.family(Family::Omega)[0].to_complex();
    let lost = omega0.left_mul_vec(&dormant_entry);
    for (a, x) in pi11.iter_mut().zip(lost) {
        *a -= x;
    }

    let re = |v: &[Complex64]| v.iter().map(|z| z.re).collect::<Vec<f64>>();
    let vacation = LevelSeries {
        width: m,
        head: vec![re(&pi00)],
        tail: vec![GeometricTerm { ratio: w, coef: b.iter().map(|&x| x * tau).collect() }],
    };
    let busy = LevelSeries { width: m, head: vec![re(&pi10), re(&pi11)], tail: busy_tail };

    let raw_mass = vacation.mass() + busy.mass();
    if !raw_mass.is_finite() || (raw_mass - 1.0).abs() >= MASS_DEFECT_LIMIT {
        return Err(Error::MassDefect(raw_mass - 1.0));
    }
    let mut vacation = vacation.scaled(1.0 / raw_mass);
    let mut busy = busy.scaled(1.0 / raw_mass);
    for s in [&vacation, &busy] {
        if let Some((level, value)) = s.first_negative(NEGATIVITY_SCAN, NEGATIVE_TOL) {
            return Err(Error::NegativeProbability { level, value });
        }
    }
    vacation.clip_head();
    busy.clip_head();

    let busy_total = busy.total();
    let dormant = busy.row(0);
    let busy_only: Vec<f64> = busy_total.iter().zip(&dormant).map(|(t, d)| t - d).collect();
    let rho_prime = sum(&busy_only);
    let cond_busy_phase: Vec<f64> = busy_only.iter().map(|x| x / rho_prime).collect();
    let stationary_gap = max_abs_diff(&cond_busy_phase, model.service.stationary());
    Ok(Arbitrary { vacation, busy, raw_mass, rho_prime, cond_busy_phase, stationary_gap })
}

/// Distributions at departure and service-start epochs.
#[derive(Clone, Debug)]
pub struct Departure {
    /// `π⁺(n)`: a departure leaves `n` customers behind.
    pub post_departure: LevelSeries,
    /// `π^{s-}(n)`.
    pub pre_service: LevelSeries,
    /// `Σ_{n≥1} π₁(n) L1 e`, the departure flow implied by the arbitrary-time law.
    pub departure_rate: f64,
    /// `Σ_{n≥1} π₁(n) L1 e / (μ* ρ′)`, the mass of the unshifted reading.
    pub literal_mass: f64,
}

pub fn departure_epochs(arbitrary: &Arbitrary, model: &QueueModel) -> Result<Departure> {
    if !(arbitrary.rho_prime > 0.0) {
        return Err(Error::NormalizationFailure("server is never busy".into()));
    }
    let l1 = model.service.l1();
    let flow = arbitrary.busy.drop_first(1).map_right(l1);
    let departure_rate = flow.mass();
    let literal_mass = departure_rate / (model.service.fundamental_rate() * arbitrary.rho_prime);
    if !(departure_rate > 0.0) {
        return Err(Error::NormalizationFailure(alloc::format!(
            "departure flow {departure_rate}, unshifted mass {literal_mass}"
        )));
    }
    let post_departure = flow.scaled(1.0 / departure_rate);
    let p = post_departure.materialize(2);
    let merged: Vec<f64> = p.row(0).iter().zip(p.row(1)).map(|(a, b)| a + b).collect();
    let rest = p.drop_first(2);
    let mut head = vec![vec![0.0; p.width], merged];
    head.extend(rest.head);
    let pre_service = LevelSeries { width: p.width, head, tail: rest.tail };
    Ok(Departure { post_departure, pre_service, departure_rate, literal_mass })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Measures {
    pub l_s: f64,
    pub l_q: f64,
    pub w_s: f64,
    /// `L_s / λ`.
    pub w_s_little: f64,
    /// `|W_s - L_s/λ| / W_s`.
    pub little_gap: f64,
    pub rho_prime: f64,
    pub e_b: f64,
    pub e_i: f64,
    pub cond_busy_phase: Vec<f64>,
}

pub fn performance_measures(
    solution: &BoundarySolution,
    arbitrary: &Arbitrary,
    departure: &Departure,
    model: &QueueModel,
) -> Result<Measures> {
    let l_s = sum(&arbitrary.vacation.first_moment()) + sum(&arbitrary.busy.first_moment());
    let empty = sum(&arbitrary.vacation.row(0)) + sum(&arbitrary.busy.row(0));
    let l_q = l_s - (1.0 - empty);
    let w_s = mean_sojourn(solution, model)?;
    let w_s_little = l_s / model.lambda;
    let e_s = 1.0 / model.service.fundamental_rate();
    let p0 = sum(&departure.post_departure.row(0));
    let e_b = e_s / p0;
    let rho = arbitrary.rho_prime;
    Ok(Measures {
        l_s,
        l_q,
        w_s,
        w_s_little,
        little_gap: (w_s - w_s_little).abs() / w_s,
        rho_prime: rho,
        e_b,
        e_i: (1.0 - rho) / rho * e_b,
        cond_busy_phase: arbitrary.cond_busy_phase.clone(),
    })
}

/// `W_s = Σ_i k_i (I - γ_i R)^{-1} h / (1 - γ_i) + b e / ((1 - ω) γ)
///        + b (I - ωR)^{-1} h / (1 - ω)`, with `R = (-L0)^{-1} L1`, `h = (-L0)^{-1} e`.
fn mean_sojourn(solution: &BoundarySolution, model: &QueueModel) -> Result<f64> {
    let m = model.m();
    let r = model.service.embedded_matrix().to_complex();
    let neg_l0 = model.service.l0().scale(-1.0);
    let h: Vec<Complex64> = neg_l0.lu()?.solve_vec(&vec![1.0; m]).into_iter().map(c).collect();
    let id = CMat::identity(m);
    let weighted = |x: Complex64, row: &[Complex64]| -> Result<Complex64> {
        let a = &id - &r.scale(x);
        let y = a.lu()?.solve_vec(&h);
        Ok(crate::linalg::dot(row, &y) / (c(1.0) - x))
    };
    let mut total = c(0.0);
    for (i, &z) in solution.roots.roots.iter().enumerate() {
        total += weighted(z, solution.k.row(i))?;
    }
    let b: Vec<Complex64> = solution.b.iter().map(|&x| c(x)).collect();
    let w = model.omega;
    total += c(sum(&solution.b) / ((1.0 - w) * model.gamma));
    total += weighted(c(w), &b)?;
    Ok(total.re)
}

/// LST of the sojourn time of an arriving customer,
/// `Σ_i k_i (I - γ_i φ)^{-1} φ e + γ/(γ+s) b (I - ωφ)^{-1} φ e`, `φ = (sI - L0)^{-1} L1`.
pub fn waiting_time_lst(solution: &BoundarySolution, model: &QueueModel, s: Complex64) -> Result<Complex64> {
    let m = model.m();
    let l0 = model.service.l0().to_complex();
    let shifted = &CMat::identity(m).scale(s) - &l0;
    let phi = shifted.lu()?.solve(&model.service.l1().to_complex())?;
    let phi_e = phi.mul_vec(&vec![c(1.0); m]);
    let id = CMat::identity(m);
    let term = |x: Complex64, row: &[Complex64]| -> Result<Complex64> {
        let a = &id - &phi.scale(x);
        let lu = a.lu().map_err(|_| Error::SeriesDivergence(alloc::format!("I - {x} φ(s) is singular")))?;
        Ok(crate::linalg::dot(row, &lu.solve_vec(&phi_e)))
    };
    let mut total = c(0.0);
    for (i, &z) in solution.roots.roots.iter().enumerate() {
        total += term(z, solution.k.row(i))?;
    }
    let b: Vec<Complex64> = solution.b.iter().map(|&x| c(x)).collect();
    total += c(model.gamma) / (c(model.gamma) + s) * term(c(model.omega), &b)?;
    Ok(total)
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SolveOptions {
    pub kernels: KernelOptions,
}

/// Every stage of one solve.
#[derive(Clone, Debug)]
pub struct Solution {
    pub kernels: KernelSet,
    pub roots: RootSet,
    pub boundary: BoundarySolution,
    pub pre_arrival: PreArrival,
    pub arbitrary: Arbitrary,
    pub departure: Departure,
    pub measures: Measures,
}

pub fn solve(model: &QueueModel, options: SolveOptions) -> Result<Solution> {
    model.ensure_stable()?;
    let kernels = KernelSet::build_with(model, options.kernels)?;
    let roots = find_inner_roots(model)?;
    let system = assemble_boundary_system(model, &kernels, &roots)?;
    let boundary = solve_boundary(&system)?;
    let pre_arrival = pre_arrival_distribution(&boundary, model)?;
    let arbitrary = arbitrary_distribution(&boundary, model, &kernels)?;
    let departure = departure_epochs(&arbitrary, model)?;
    let measures = performance_measures(&boundary, &arbitrary, &departure, model)?;
    Ok(Solution { kernels, roots, boundary, pre_arrival, arbitrary, departure, measures })
}
