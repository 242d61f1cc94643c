//! Matrix kernel families indexed by the number of service completions
//! during an inter-arrival time (or one of its excess variants).
//!
//! With `M = -(L0 ⊗ I + I ⊗ T)` and `B = L1 ⊗ I`, every family is driven by
//! the sequence `W_0 = M^{-1}(I ⊗ T⁰)`, `W_n = M^{-1} B W_{n-1}`.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{CMat, Lu, Matrix, RMat};
use crate::model::{MspService, PhDistribution, QueueModel};

pub const DEFAULT_TAIL_TOL: f64 = 1e-12;
pub const DEFAULT_N_MAX: usize = 4096;
const FIRST_STAGE: usize = 64;
const CLIP_BELOW: f64 = 1e-14;
const NEGATIVE_LIMIT: f64 = 1e-10;

/// Closed-form evaluator for the transforms of one arrival law against the
/// service process.
#[derive(Clone, Debug)]
pub struct Resolvent {
    m: usize,
    eta: usize,
    mmat: RMat,
    bmat: RMat,
    alpha_block: RMat,
    exit_block: RMat,
    ones_block: RMat,
}

impl Resolvent {
    pub fn new(ph: &PhDistribution, service: &MspService) -> Self {
        let m = service.order();
        let eta = ph.order();
        let im = RMat::identity(m);
        let ie = RMat::identity(eta);
        let mmat = (&service.l0().kron(&ie) + &im.kron(ph.generator())).scale(-1.0);
        let bmat = service.l1().kron(&ie);
        Resolvent {
            m,
            eta,
            mmat,
            bmat,
            alpha_block: im.kron(&RMat::row_vector(ph.alpha())),
            exit_block: im.kron(&RMat::column_vector(ph.exit_vector())),
            ones_block: im.kron(&RMat::column_vector(&vec![1.0; eta])),
        }
    }

    fn factor(&self, z: Complex64) -> Result<Lu<Complex64>> {
        let a = CMat::from_fn(self.m * self.eta, self.m * self.eta, |i, j| {
            Complex64::new(self.mmat[(i, j)], 0.0) - z * self.bmat[(i, j)]
        });
        a.lu().map_err(|_| Error::SingularResolvent { re: z.re, im: z.im })
    }

    /// `S(z) = Σ S_n zⁿ = (I ⊗ α)(M - zB)^{-1}(I ⊗ T⁰)`.
    pub fn kernel(&self, z: Complex64) -> Result<CMat> {
        let lu = self.factor(z)?;
        Ok(&self.alpha_block.to_complex() * &lu.solve(&self.exit_block.to_complex())?)
    }

    /// `S(z)` and `S'(z)`.
    pub fn kernel_with_derivative(&self, z: Complex64) -> Result<(CMat, CMat)> {
        let lu = self.factor(z)?;
        let a = self.alpha_block.to_complex();
        let x = lu.solve(&self.exit_block.to_complex())?;
        let y = lu.solve(&(&self.bmat.to_complex() * &x))?;
        Ok((&a * &x, &a * &y))
    }

    /// `rate · (I ⊗ α)(M - zB)^{-1}(I ⊗ e)`, the transform of the elapsed-time
    /// family built on this law.
    pub fn elapsed(&self, rate: f64, z: Complex64) -> Result<CMat> {
        let lu = self.factor(z)?;
        let x = lu.solve(&self.ones_block.to_complex())?;
        Ok((&self.alpha_block.to_complex() * &x).scale(Complex64::new(rate, 0.0)))
    }
}

/// `S(z)` for the model's arrival law.
pub fn s_matrix_of_z(model: &QueueModel, z: Complex64) -> Result<CMat> {
    Resolvent::new(&model.arrival, &model.service).kernel(z)
}

/// Kernel families available from a [`KernelSet`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    /// Completions during a full inter-arrival time.
    S,
    /// Completions during the excess time `A⁺`.
    V,
    /// Completions during the second-order excess `A⁺⁺`.
    C,
    /// Arbitrary-time counterpart of `S`.
    Omega,
    /// Arbitrary-time counterpart of `V`.
    Delta,
    /// Arbitrary-time counterpart of `C`.
    Phi,
    /// `V*_{n}`, stored from `n = 1`.
    VStar,
    /// `C*_{n}`, stored from `n = 1`.
    CStar,
    /// `Δ*_{n}`, stored from `n = 1`.
    DeltaStar,
    /// `Φ*_{n}`, stored from `n = 1`.
    PhiStar,
}

impl Family {
    pub const ALL: [Family; 10] = [
        Family::S,
        Family::V,
        Family::C,
        Family::Omega,
        Family::Delta,
        Family::Phi,
        Family::VStar,
        Family::CStar,
        Family::DeltaStar,
        Family::PhiStar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::S => "S",
            Family::V => "V",
            Family::C => "C",
            Family::Omega => "Omega",
            Family::Delta => "Delta",
            Family::Phi => "Phi",
            Family::VStar => "V*",
            Family::CStar => "C*",
            Family::DeltaStar => "Delta*",
            Family::PhiStar => "Phi*",
        }
    }

    /// Index of the first stored term.
    pub fn first_index(self) -> usize {
        match self {
            Family::VStar | Family::CStar | Family::DeltaStar | Family::PhiStar => 1,
            _ => 0,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct KernelOptions {
    pub tail_tol: f64,
    pub n_max: usize,
}

impl Default for KernelOptions {
    fn default() -> Self {
        KernelOptions { tail_tol: DEFAULT_TAIL_TOL, n_max: DEFAULT_N_MAX }
    }
}

/// Truncated kernel families sharing one truncation index.
#[derive(Clone, Debug)]
pub struct KernelSet {
    families: [Vec<RMat>; 10],
    n_max: usize,
    deficits: [f64; 6],
    clipped: usize,
    signed: bool,
}

struct Recursion {
    lu: Lu<f64>,
    bmat: RMat,
    w: RMat,
}

impl Recursion {
    fn new(ph: &PhDistribution, service: &MspService) -> Result<Self> {
        let r = Resolvent::new(ph, service);
        let lu = r.mmat.lu().map_err(|_| Error::SingularMatrix("kernel recursion"))?;
        let w = lu.solve(&r.exit_block)?;
        Ok(Recursion { lu, bmat: r.bmat, w })
    }

    fn advance(&mut self) -> Result<()> {
        self.w = self.lu.solve(&(&self.bmat * &self.w))?;
        Ok(())
    }
}

/// Forward recursion `X_0 = rate (I - K_0)(-L0)^{-1}`,
/// `X_n = (X_{n-1} L1 - rate K_n)(-L0)^{-1}`.
struct Elapsed {
    rate: f64,
    prev: Option<RMat>,
}

impl Elapsed {
    fn next(&mut self, k_n: &RMat, neg_l0: &Lu<f64>, l1: &RMat) -> Result<RMat> {
        let m = k_n.rows();
        let rhs = match &self.prev {
            None => (&RMat::identity(m) - k_n).scale(self.rate),
            Some(p) => &(p * l1) - &k_n.scale(self.rate),
        };
        let x = neg_l0.solve_right(&rhs)?;
        self.prev = Some(x.clone());
        Ok(x)
    }
}

fn row_deficit(seq_sum: &RMat) -> f64 {
    seq_sum.row_sums().into_iter().map(|r| libm::fabs(1.0 - r)).fold(0.0, f64::max)
}

impl KernelSet {
    pub fn build(model: &QueueModel) -> Result<Self> {
        Self::build_with(model, KernelOptions::default())
    }

    pub fn build_with(model: &QueueModel, opts: KernelOptions) -> Result<Self> {
        let service = &model.service;
        let m = model.m();
        let l1 = service.l1();
        let neg_l0 = service.l0().scale(-1.0).lu()?;
        let alpha_s = RMat::identity(m).kron(&RMat::row_vector(model.arrival.alpha()));
        let alpha_v = RMat::identity(m).kron(&RMat::row_vector(model.excess.alpha()));
        let alpha_c = RMat::identity(m).kron(&RMat::row_vector(model.double_excess.alpha()));

        let mut rec = Recursion::new(&model.arrival, service)?;
        let mut rec2 = Recursion::new(&model.double_excess, service)?;
        let mut el = [
            Elapsed { rate: model.lambda, prev: None },
            Elapsed { rate: model.lambda1, prev: None },
            Elapsed { rate: model.lambda2, prev: None },
        ];
        let mut fam: [Vec<RMat>; 6] = Default::default();
        let mut sums: [RMat; 6] = core::array::from_fn(|_| RMat::zeros(m, m));

        let cap = opts.n_max.max(1);
        let mut stage = FIRST_STAGE.min(cap + 1);
        let mut n = 0usize;
        let mut deficits;
        loop {
            while n < stage {
                if n > 0 {
                    rec.advance()?;
                    rec2.advance()?;
                }
                let s = &alpha_s * &rec.w;
                let v = &alpha_v * &rec.w;
                let c = &alpha_c * &rec2.w;
                let om = el[0].next(&s, &neg_l0, l1)?;
                let de = el[1].next(&v, &neg_l0, l1)?;
                let ph = el[2].next(&c, &neg_l0, l1)?;
                for (i, x) in [s, v, c, om, de, ph].into_iter().enumerate() {
                    sums[i] += &x;
                    fam[i].push(x);
                }
                n += 1;
            }
            deficits = core::array::from_fn(|i| row_deficit(&sums[i]));
            let (worst, &d) = deficits
                .iter()
                .enumerate()
                .fold((0, &0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if d < opts.tail_tol {
                break;
            }
            if stage > cap {
                return Err(Error::TruncationTooSmall {
                    family: Family::ALL[worst].name(),
                    deficit: d,
                    n_max: stage - 1,
                });
            }
            stage = (stage * 2).min(cap + 1);
        }
        let n_max = n - 1;

        let r = service.embedded_matrix();
        let [s, v, c, omega, delta, phi] = fam;
        let v_star: Vec<RMat> = delta.iter().map(|d| (d * l1).scale(1.0 / model.lambda1)).collect();
        let c_star: Vec<RMat> = phi.iter().map(|d| (d * l1).scale(1.0 / model.lambda2)).collect();
        let delta_star = starred(&delta, &r);
        let phi_star = starred(&phi, &r);

        let mut set = KernelSet {
            families: [s, v, c, omega, delta, phi, v_star, c_star, delta_star, phi_star],
            n_max,
            deficits,
            clipped: 0,
            signed: model.arrival.has_signed_exit(),
        };
        set.clip()?;
        Ok(set)
    }

    fn clip(&mut self) -> Result<()> {
        for (fi, seq) in self.families.iter_mut().enumerate() {
            for (n, mat) in seq.iter_mut().enumerate() {
                for i in 0..mat.rows() {
                    for j in 0..mat.cols() {
                        let x = mat[(i, j)];
                        if x >= 0.0 {
                            continue;
                        }
                        if x > -CLIP_BELOW {
                            mat[(i, j)] = 0.0;
                            self.clipped += 1;
                        } else if x < -NEGATIVE_LIMIT && !self.signed {
                            let f = Family::ALL[fi];
                            return Err(Error::NegativeEntry {
                                family: f.name(),
                                index: n + f.first_index(),
                                value: x,
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Row-sum deficits of the six unstarred families, in [`Family::ALL`] order.
    pub fn tail_deficits(&self) -> &[f64; 6] {
        &self.deficits
    }

    pub fn clipped_entries(&self) -> usize {
        self.clipped
    }

    pub fn family(&self, f: Family) -> &[RMat] {
        let i = Family::ALL.iter().position(|&g| g == f).unwrap();
        &self.families[i]
    }

    /// Term `n` of a family (starred families start at `n = 1`).
    pub fn get(&self, f: Family, n: usize) -> Option<&RMat> {
        n.checked_sub(f.first_index()).and_then(|k| self.family(f).get(k))
    }

    /// `Σ_k x^k X_{k + first}` over the stored terms.
    pub fn generating(&self, f: Family, x: Complex64) -> CMat {
        generating_sum(self.family(f), x)
    }

    /// `Σ_j x^j Σ_{k ≤ j} X_k`, i.e. the transform of the cumulative sums,
    /// taken as `X(x) / (1 - x)`.
    pub fn cumulative_generating(&self, f: Family, x: Complex64) -> CMat {
        let one = Complex64::new(1.0, 0.0);
        self.generating(f, x).scale(one / (one - x))
    }
}

/// `X*_1 = (I - X_0) R`, `X*_{n+1} = (X*_n - X_n) R`, with `R = (-L0)^{-1} L1`.
fn starred(elapsed: &[RMat], r: &RMat) -> Vec<RMat> {
    let m = r.rows();
    let mut out = Vec::with_capacity(elapsed.len());
    let mut prev = RMat::identity(m);
    for x in elapsed {
        let next = &(&prev - x) * r;
        out.push(next.clone());
        prev = next;
    }
    out
}

/// Horner evaluation of `Σ_k x^k seq[k]`.
pub fn generating_sum(seq: &[RMat], x: Complex64) -> CMat {
    let (m, c) = seq.first().map_or((0, 0), |s| (s.rows(), s.cols()));
    let mut acc = CMat::zeros(m, c);
    for term in seq.iter().rev() {
        acc = Matrix::from_fn(m, c, |i, j| acc[(i, j)] * x + term[(i, j)]);
    }
    acc
}

/// Closed form of a starred family's transform from its elapsed
/// transform: `Σ_k x^k X*_{k+1} = (I - X(x)) R (I - xR)^{-1}`.
pub fn starred_closed_form(elapsed_at_x: &CMat, r: &RMat, x: Complex64) -> Result<CMat> {
    let m = r.rows();
    let id = CMat::identity(m);
    let rc = r.to_complex();
    let left = &(&id - elapsed_at_x) * &rc;
    (&id - &rc.scale(x)).solve_right(&left)
}
