//! Independent numerical oracles: a Taylor scaling-and-squaring matrix
//! exponential and composite Gauss-Legendre quadrature that advances
//! `e^{At}` panel by panel.

#![allow(dead_code)]

use qvsolve_core::linalg::RMat;
use qvsolve_core::model::{ModelDescription, QueueModel};

pub fn model(d: &ModelDescription) -> QueueModel {
    QueueModel::from_description(d).unwrap()
}

pub fn expm(a: &RMat) -> RMat {
    let n = a.rows();
    let norm = a.norm1();
    let mut squarings = 0;
    let mut scale = 1.0;
    while norm * scale > 0.25 {
        scale *= 0.5;
        squarings += 1;
    }
    let x = a.scale(scale);
    let mut term = RMat::identity(n);
    let mut sum = RMat::identity(n);
    for k in 1..=20 {
        term = (&term * &x).scale(1.0 / k as f64);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

const GL_NODES: [f64; 4] = [0.183_434_642_495_649_8, 0.525_532_409_916_329, 0.796_666_477_413_626_7, 0.960_289_856_497_536_3];
const GL_WEIGHTS: [f64; 4] = [0.362_683_783_378_362, 0.313_706_645_877_887_3, 0.222_381_034_453_374_5, 0.101_228_536_290_376_3];

/// `∫_0^{x_max} f(t, e^{At}) dt` on panels of width `h` with 8-point
/// Gauss-Legendre on each panel. `f` returns a flat vector.
pub fn integrate_exp(a: &RMat, h: f64, x_max: f64, mut f: impl FnMut(f64, &RMat) -> Vec<f64>) -> Vec<f64> {
    let mut offsets = Vec::new();
    let mut weights = Vec::new();
    for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
        for s in [-1.0, 1.0] {
            offsets.push(0.5 * h * (1.0 + s * x));
            weights.push(0.5 * h * w);
        }
    }
    let node_exp: Vec<RMat> = offsets.iter().map(|&o| expm(&a.scale(o))).collect();
    let step = expm(&a.scale(h));
    let panels = (x_max / h).ceil() as usize;
    let mut base = RMat::identity(a.rows());
    let mut acc: Vec<f64> = Vec::new();
    for p in 0..panels {
        let t0 = p as f64 * h;
        for ((o, w), e) in offsets.iter().zip(&weights).zip(&node_exp) {
            let v = f(t0 + o, &(&base * e));
            if acc.is_empty() {
                acc = vec![0.0; v.len()];
            }
            for (a, x) in acc.iter_mut().zip(v) {
                *a += w * x;
            }
        }
        base = &base * &step;
    }
    acc
}

/// Block diagonal `diag(a, b)`.
pub fn block_diag(a: &RMat, b: &RMat) -> RMat {
    let n = a.rows();
    let m = b.rows();
    RMat::from_fn(n + m, n + m, |i, j| {
        if i < n && j < n {
            a[(i, j)]
        } else if i >= n && j >= n {
            b[(i - n, j - n)]
        } else {
            0.0
        }
    })
}

/// `A[r0.., c0..]` block of size `rows × cols`.
pub fn block(a: &RMat, r0: usize, c0: usize, rows: usize, cols: usize) -> RMat {
    RMat::from_fn(rows, cols, |i, j| a[(r0 + i, c0 + j)])
}

/// Level-truncated counting generator: `levels` diagonal `L0` blocks with
/// `L1` on the superdiagonal; the last level absorbs with `L1` into a sink
/// level of zeros when `sink` is true.
pub fn counting_generator(l0: &RMat, l1: &RMat, levels: usize, sink: bool) -> RMat {
    let m = l0.rows();
    let total = levels + usize::from(sink);
    RMat::from_fn(total * m, total * m, |i, j| {
        let (li, lj) = (i / m, j / m);
        let (pi, pj) = (i % m, j % m);
        if li >= levels {
            0.0
        } else if li == lj {
            l0[(pi, pj)]
        } else if lj == li + 1 {
            l1[(pi, pj)]
        } else {
            0.0
        }
    })
}

/// Time after which `α e^{Tx} e` stays below `tol`.
pub fn horizon(alpha: &[f64], t: &RMat, tol: f64) -> f64 {
    let mut x = 1.0;
    loop {
        let e = expm(&t.scale(x));
        let s: f64 = e.left_mul_vec(alpha).iter().map(|v| v.abs()).sum();
        if s < tol {
            return x;
        }
        x *= 1.5;
    }
}

pub fn max_abs(a: &RMat, b: &RMat) -> f64 {
    (a - b).max_abs()
}

/// Steady state of the level-truncated CTMC of the queue. State order in a
/// level: server block (0 = vacation; 1 = dormant at level 0, busy above),
/// then service phase, then arrival phase.
pub struct ExactQueue {
    pub levels: Vec<Vec<f64>>,
    pub block: usize,
}

impl ExactQueue {
    pub fn solve(model: &QueueModel, cap: usize) -> Self {
        let m = model.m();
        let eta = model.eta();
        let b = m * eta;
        let d = 2 * b;
        let t = model.arrival.generator();
        let arrive = &RMat::column_vector(model.arrival.exit_vector()) * &RMat::row_vector(model.arrival.alpha());
        let im = RMat::identity(m);
        let ie = RMat::identity(eta);
        let g = model.gamma;
        let phase_t = im.kron(t);
        let up_phase = im.kron(&arrive);
        let busy_local = &model.service.l0().kron(&ie) + &phase_t;
        let down = model.service.l1().kron(&ie);
        let vac_local = &phase_t - &RMat::identity(b).scale(g);
        let put = |dst: &mut RMat, r0: usize, c0: usize, src: &RMat| {
            for i in 0..src.rows() {
                for j in 0..src.cols() {
                    dst[(r0 + i, c0 + j)] += src[(i, j)];
                }
            }
        };
        let gamma_i = RMat::identity(b).scale(g);

        let mut local = RMat::zeros(d, d);
        put(&mut local, 0, 0, &vac_local);
        put(&mut local, 0, b, &gamma_i);
        put(&mut local, b, b, &busy_local);
        let mut up = RMat::zeros(d, d);
        put(&mut up, 0, 0, &up_phase);
        put(&mut up, b, b, &up_phase);
        let mut down_n = RMat::zeros(d, d);
        put(&mut down_n, b, b, &down);
        let mut down_1 = RMat::zeros(d, d);
        put(&mut down_1, b, 0, &down);
        let mut local0 = RMat::zeros(d, d);
        put(&mut local0, 0, 0, &vac_local);
        put(&mut local0, 0, b, &gamma_i);
        put(&mut local0, b, b, &phase_t);

        let mut rs: Vec<RMat> = vec![RMat::zeros(d, d); cap + 1];
        let top = &local + &up;
        rs[cap] = up.matmul(&top.scale(-1.0).inverse().unwrap());
        for n in (1..cap).rev() {
            let a = &local + &rs[n + 1].matmul(&down_n);
            rs[n] = up.matmul(&a.scale(-1.0).inverse().unwrap());
        }
        let a0 = &local0 + &rs[1].matmul(&down_1);
        let mut sys = a0.transpose();
        let mut rhs = vec![0.0; d];
        let mut weight = vec![1.0; d];
        let mut acc = RMat::identity(d);
        for r in &rs[1..] {
            acc = acc.matmul(r);
            for (w, s) in weight.iter_mut().zip(acc.row_sums()) {
                *w += s;
            }
        }
        for j in 0..d {
            sys[(d - 1, j)] = weight[j];
        }
        rhs[d - 1] = 1.0;
        let pi0 = sys.lu().unwrap().solve_vec(&rhs);
        let mut levels = vec![pi0];
        for r in &rs[1..] {
            let next = r.left_mul_vec(levels.last().unwrap());
            levels.push(next);
        }
        ExactQueue { levels, block: b }
    }

    pub fn mass(&self) -> f64 {
        self.levels.iter().flatten().sum()
    }

    pub fn mean_level(&self) -> f64 {
        self.levels.iter().enumerate().map(|(n, p)| n as f64 * p.iter().sum::<f64>()).sum()
    }

    pub fn busy_probability(&self) -> f64 {
        self.levels[1..].iter().map(|p| p[self.block..].iter().sum::<f64>()).sum()
    }

    /// Probability that an arrival finds the server on vacation.
    pub fn vacation_at_arrival(&self, model: &QueueModel) -> f64 {
        let eta = model.eta();
        let t0 = model.arrival.exit_vector();
        let weighted = |p: &[f64]| -> f64 { p.iter().enumerate().map(|(i, x)| x * t0[i % eta]).sum() };
        let vac: f64 = self.levels.iter().map(|p| weighted(&p[..self.block])).sum();
        let all: f64 = self.levels.iter().map(|p| weighted(p)).sum();
        vac / all
    }

    pub fn top_mass(&self) -> f64 {
        self.levels.last().unwrap().iter().sum()
    }
}
