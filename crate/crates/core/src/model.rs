//! Model primitives: phase-type inter-arrival law, Markovian service process,
//! the exponential vacation, and the derived constants the solver needs.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{dot, ones, sum, RMat};

const ROW_SUM_TOL: f64 = 1e-12;
const ALPHA_SUM_TOL: f64 = 1e-12;
const DERIVED_ALPHA_TOL: f64 = 1e-9;

/// What to do with an arrival generator whose rows sum to a positive value.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ExitPolicy {
    /// Rows of `T` must sum to at most zero.
    #[default]
    Strict,
    /// Accept a signed exit vector as long as the law has a positive mean.
    /// Such a law is not a probability distribution; analytic results are
    /// computed formally and simulation is refused.
    AllowSigned,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhDistribution {
    alpha: Vec<f64>,
    t: RMat,
    exit: Vec<f64>,
    signed: bool,
}

impl PhDistribution {
    pub fn new(alpha: Vec<f64>, t: RMat) -> Result<Self> {
        Self::with_policy(alpha, t, ExitPolicy::Strict)
    }

    pub fn with_policy(alpha: Vec<f64>, t: RMat, policy: ExitPolicy) -> Result<Self> {
        Self::build(alpha, t, policy, ALPHA_SUM_TOL)
    }

    fn build(alpha: Vec<f64>, t: RMat, policy: ExitPolicy, alpha_tol: f64) -> Result<Self> {
        let n = alpha.len();
        if n == 0 || !t.is_square() || t.rows() != n {
            return Err(Error::DimensionMismatch(format!(
                "initial vector of length {} against a {}x{} generator",
                n,
                t.rows(),
                t.cols()
            )));
        }
        if alpha.iter().any(|a| !a.is_finite() || *a < -alpha_tol) {
            return Err(Error::InvalidInitialVector(format!("negative entry in {:?}", alpha)));
        }
        let s = sum(&alpha);
        if (s - 1.0).abs() > alpha_tol {
            return Err(Error::InvalidInitialVector(format!("entries sum to {s}")));
        }
        check_subgenerator_pattern(&t, "T")?;
        let exit: Vec<f64> = t.row_sums().into_iter().map(|r| -r).collect();
        let signed = exit.iter().any(|&x| x < -ROW_SUM_TOL);
        if signed && policy == ExitPolicy::Strict {
            let (i, x) = exit.iter().enumerate().find(|(_, x)| **x < -ROW_SUM_TOL).unwrap();
            return Err(Error::NotSubgenerator(format!("row {i} of T sums to {:e}", -x)));
        }
        let exit: Vec<f64> = exit.into_iter().map(|x| if x.abs() <= ROW_SUM_TOL { 0.0 } else { x }).collect();
        let lu = t.lu().map_err(|_| Error::NotSubgenerator("T is singular".into()))?;
        let mean = -sum(&lu.solve_left_vec(&alpha));
        if !(mean.is_finite() && mean > 0.0) {
            return Err(Error::NotSubgenerator(format!("mean inter-arrival time {mean} is not positive")));
        }
        let alpha = alpha.into_iter().map(|a| a.max(0.0)).collect();
        Ok(PhDistribution { alpha, t, exit, signed })
    }

    /// Exponential law with the given rate.
    pub fn exponential(rate: f64) -> Result<Self> {
        Self::new(vec![1.0], RMat::from_rows(&[vec![-rate]])?)
    }

    pub fn order(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn generator(&self) -> &RMat {
        &self.t
    }

    /// `T⁰ = -T e`.
    pub fn exit_vector(&self) -> &[f64] {
        &self.exit
    }

    pub fn has_signed_exit(&self) -> bool {
        self.signed
    }

    fn policy(&self) -> ExitPolicy {
        if self.signed {
            ExitPolicy::AllowSigned
        } else {
            ExitPolicy::Strict
        }
    }

    /// `E[X^k] = k! α (-T)^{-k} e`.
    pub fn moment(&self, k: u32) -> f64 {
        let neg_t = self.t.scale(-1.0);
        let lu = neg_t.lu().expect("validated generator is nonsingular");
        let mut v = ones(self.order());
        let mut fact = 1.0;
        for i in 1..=k {
            v = lu.solve_vec(&v);
            fact *= i as f64;
        }
        fact * dot(&self.alpha, &v)
    }

    pub fn mean(&self) -> f64 {
        self.moment(1)
    }

    pub fn rate(&self) -> f64 {
        1.0 / self.mean()
    }

    /// Laplace–Stieltjes transform `α (sI - T)^{-1} T⁰`.
    pub fn lst(&self, s: num_complex::Complex64) -> Result<num_complex::Complex64> {
        let n = self.order();
        let a = crate::linalg::CMat::from_fn(n, n, |i, j| {
            let d = if i == j { s } else { num_complex::Complex64::new(0.0, 0.0) };
            d - self.t[(i, j)]
        });
        let x = a.lu()?.solve_vec(&crate::linalg::to_complex(&self.exit));
        Ok(dot(&crate::linalg::to_complex(&self.alpha), &x))
    }
}

fn check_subgenerator_pattern(t: &RMat, name: &str) -> Result<()> {
    for i in 0..t.rows() {
        for j in 0..t.cols() {
            let x = t[(i, j)];
            if !x.is_finite() {
                return Err(Error::NotSubgenerator(format!("{name}[{i}][{j}] is not finite")));
            }
            if i == j && x >= 0.0 {
                return Err(Error::NotSubgenerator(format!("{name}[{i}][{i}] = {x} is not negative")));
            }
            if i != j && x < 0.0 {
                return Err(Error::NotSubgenerator(format!("{name}[{i}][{j}] = {x} is negative")));
            }
        }
    }
    Ok(())
}

/// Markovian service process `(L0, L1)`: `L0` governs phase moves without a
/// completion, `L1` moves that complete a service.
#[derive(Clone, Debug, PartialEq)]
pub struct MspService {
    l0: RMat,
    l1: RMat,
    stationary: Vec<f64>,
    rate: f64,
}

impl MspService {
    pub fn new(l0: RMat, l1: RMat) -> Result<Self> {
        let m = l0.rows();
        if m == 0 || !l0.is_square() || l1.rows() != m || l1.cols() != m {
            return Err(Error::DimensionMismatch(format!(
                "L0 is {}x{}, L1 is {}x{}",
                l0.rows(),
                l0.cols(),
                l1.rows(),
                l1.cols()
            )));
        }
        check_subgenerator_pattern(&l0, "L0")?;
        for i in 0..m {
            for j in 0..m {
                let x = l1[(i, j)];
                if !x.is_finite() || x < 0.0 {
                    return Err(Error::NotGenerator(format!("L1[{i}][{j}] = {x} is negative")));
                }
            }
        }
        let q = &l0 + &l1;
        for (i, r) in q.row_sums().into_iter().enumerate() {
            if r.abs() > ROW_SUM_TOL {
                return Err(Error::NotGenerator(format!("row {i} of L0 + L1 sums to {r:e}")));
            }
        }
        if l1.max_abs() == 0.0 {
            return Err(Error::NotGenerator("L1 has no service completions".into()));
        }
        if !strongly_connected(&q) {
            return Err(Error::Reducible);
        }
        let stationary = stationary_vector(&q)?;
        let rate = dot(&l1.left_mul_vec(&stationary), &ones(m));
        Ok(MspService { l0, l1, stationary, rate })
    }

    /// Poisson service completions at rate `mu`.
    pub fn exponential(mu: f64) -> Result<Self> {
        Self::new(RMat::from_rows(&[vec![-mu]])?, RMat::from_rows(&[vec![mu]])?)
    }

    pub fn order(&self) -> usize {
        self.l0.rows()
    }

    pub fn l0(&self) -> &RMat {
        &self.l0
    }

    pub fn l1(&self) -> &RMat {
        &self.l1
    }

    pub fn generator(&self) -> RMat {
        &self.l0 + &self.l1
    }

    /// Stationary vector `π̄` of `L0 + L1`.
    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    /// Fundamental rate `μ* = π̄ L1 e`.
    pub fn fundamental_rate(&self) -> f64 {
        self.rate
    }

    /// Phase transition matrix between completions, `(-L0)^{-1} L1`.
    pub fn embedded_matrix(&self) -> RMat {
        self.l0.scale(-1.0).solve(&self.l1).expect("validated L0 is nonsingular")
    }
}

fn strongly_connected(q: &RMat) -> bool {
    let n = q.rows();
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                let w = if forward { q[(i, j)] } else { q[(j, i)] };
                if i != j && w > 0.0 && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reach(true) && reach(false)
}

/// Stationary row vector of an irreducible generator.
pub fn stationary_vector(q: &RMat) -> Result<Vec<f64>> {
    let n = q.rows();
    let mut a = q.clone();
    for i in 0..n {
        a[(i, n - 1)] = 1.0;
    }
    let mut rhs = vec![0.0; n];
    rhs[n - 1] = 1.0;
    let x = a.lu().map_err(|_| Error::SingularMatrix("stationary vector"))?.solve_left_vec(&rhs);
    Ok(x)
}

/// `ω = 1 + γ α (T - γI)^{-1} e` and `τ = 1 - λ γ α (T - γI)^{-1} T^{-1} e`.
pub fn omega_tau(arrival: &PhDistribution, gamma: f64) -> Result<(f64, f64)> {
    let n = arrival.order();
    let t = arrival.generator();
    let shifted = t - &RMat::identity(n).scale(gamma);
    let a = shifted.lu()?.solve_left_vec(arrival.alpha());
    let omega = 1.0 + gamma * sum(&a);
    let tinv_e = t.lu()?.solve_vec(&ones(n));
    let tau = 1.0 - arrival.rate() * gamma * dot(&a, &tinv_e);
    Ok((omega, tau))
}

/// Law of the residual inter-arrival time seen at a vacation end:
/// initial vector `γ/(1-ω) α (γI - T)^{-1}`, same generator.
pub fn excess_arrival_ph(arrival: &PhDistribution, gamma: f64, omega: f64) -> Result<PhDistribution> {
    let n = arrival.order();
    let m = &RMat::identity(n).scale(gamma) - arrival.generator();
    let a = m.lu()?.solve_left_vec(arrival.alpha());
    let alpha1 = a.into_iter().map(|x| x * gamma / (1.0 - omega)).collect();
    PhDistribution::build(alpha1, arrival.generator().clone(), arrival.policy(), DERIVED_ALPHA_TOL)
}

/// Second-order excess law together with its `(ω₂, τ₂)`. The generator is
/// `T ⊗ I₂`, built on the Erlang-2 clock `β = (1, 0)`, `U = [[-γ, γ], [0, -γ]]`.
pub fn double_excess_ph(arrival: &PhDistribution, gamma: f64) -> Result<(PhDistribution, f64, f64)> {
    let n = arrival.order();
    let t = arrival.generator();
    let i2 = RMat::identity(2);
    let u = RMat::from_rows(&[vec![-gamma, gamma], vec![0.0, -gamma]])?;
    let k = &t.kron(&i2) + &RMat::identity(n).kron(&u);
    let ab: Vec<f64> = arrival.alpha().iter().flat_map(|&a| [a, 0.0]).collect();
    let x = k.lu()?.solve_left_vec(&ab);
    let half = gamma / 2.0;
    let omega2 = 1.0 + half * sum(&x);
    let tinv_e = t.lu()?.solve_vec(&ones(n));
    let rhs: Vec<f64> = tinv_e.iter().flat_map(|&v| [v, v]).collect();
    let tau2 = 1.0 - arrival.rate() * half * dot(&x, &rhs);
    let alpha2 = x.into_iter().map(|v| -v * half / (1.0 - omega2)).collect();
    let ph = PhDistribution::build(alpha2, t.kron(&i2), arrival.policy(), DERIVED_ALPHA_TOL)?;
    Ok((ph, omega2, tau2))
}

/// The solver refuses loads within this distance of 1.
pub const STABILITY_MARGIN: f64 = 1e-9;

/// Raw model as read from a file or built in code.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelDescription {
    pub alpha: Vec<f64>,
    pub t: Vec<Vec<f64>>,
    pub l0: Vec<Vec<f64>>,
    pub l1: Vec<Vec<f64>>,
    pub gamma: f64,
    pub exit_policy: ExitPolicy,
}

/// A validated queue together with every derived scalar and law.
#[derive(Clone, Debug)]
pub struct QueueModel {
    pub arrival: PhDistribution,
    pub service: MspService,
    pub gamma: f64,
    /// Arrival rate `λ`.
    pub lambda: f64,
    /// Offered load `λ / μ*`.
    pub rho: f64,
    pub omega: f64,
    pub tau: f64,
    /// Excess law `A⁺` and its rate `λ₁`.
    pub excess: PhDistribution,
    pub lambda1: f64,
    pub omega2: f64,
    pub tau2: f64,
    /// Second-order excess law `A⁺⁺` and its rate `λ₂`.
    pub double_excess: PhDistribution,
    pub lambda2: f64,
}

impl QueueModel {
    /// Builds the model without the stability gate.
    pub fn new(arrival: PhDistribution, service: MspService, gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidVacationRate(gamma));
        }
        let lambda = arrival.rate();
        let rho = lambda / service.fundamental_rate();
        let (omega, tau) = omega_tau(&arrival, gamma)?;
        let excess = excess_arrival_ph(&arrival, gamma, omega)?;
        let (double_excess, omega2, tau2) = double_excess_ph(&arrival, gamma)?;
        Ok(QueueModel {
            lambda1: excess.rate(),
            lambda2: double_excess.rate(),
            arrival,
            service,
            gamma,
            lambda,
            rho,
            omega,
            tau,
            excess,
            omega2,
            tau2,
            double_excess,
        })
    }

    pub fn from_description(desc: &ModelDescription) -> Result<Self> {
        let t = RMat::from_rows(&desc.t)?;
        let arrival = PhDistribution::with_policy(desc.alpha.clone(), t, desc.exit_policy)?;
        let service = MspService::new(RMat::from_rows(&desc.l0)?, RMat::from_rows(&desc.l1)?)?;
        Self::new(arrival, service, desc.gamma)
    }

    pub fn m(&self) -> usize {
        self.service.order()
    }

    pub fn eta(&self) -> usize {
        self.arrival.order()
    }

    pub fn ensure_stable(&self) -> Result<()> {
        if !(self.rho < 1.0 - STABILITY_MARGIN) {
            return Err(Error::Unstable { rho: self.rho });
        }
        Ok(())
    }
}

/// Validates a description and applies the stability gate `ρ < 1`.
pub fn validate_model(desc: &ModelDescription) -> Result<QueueModel> {
    let model = QueueModel::from_description(desc)?;
    model.ensure_stable()?;
    Ok(model)
}

/// `P(n, t)`, the probability of `n` service completions in `(0, t]` by
/// phase pair, for `n = 0..=n_max`, by uniformization.
pub fn counting_probabilities(service: &MspService, n_max: usize, t: f64, tol: f64) -> Result<Vec<RMat>> {
    const MAX_TERMS: usize = 1_000_000;
    let m = service.order();
    let l0 = service.l0();
    let l1 = service.l1();
    let theta = (0..m).map(|i| -l0[(i, i)]).fold(0.0, f64::max)
        + l1.row_sums().into_iter().fold(0.0, f64::max);
    let p0 = &RMat::identity(m) + &l0.scale(1.0 / theta);
    let p1 = l1.scale(1.0 / theta);
    let mean = theta * t;

    let weight = |k: usize| libm::exp(-mean + k as f64 * libm::log(mean) - libm::lgamma(k as f64 + 1.0));
    let mut out = vec![RMat::zeros(m, m); n_max + 1];
    let mut u: Vec<RMat> = vec![RMat::zeros(m, m); n_max + 1];
    u[0] = RMat::identity(m);
    let mut acc = 0.0;
    let mut k = 0usize;
    loop {
        let w = if mean == 0.0 { if k == 0 { 1.0 } else { 0.0 } } else { weight(k) };
        if w > 0.0 {
            for (o, uk) in out.iter_mut().zip(&u) {
                *o += &uk.scale(w);
            }
        }
        acc += w;
        if 1.0 - acc < tol && k as f64 >= mean {
            break;
        }
        k += 1;
        if k > MAX_TERMS {
            return Err(Error::TailBoundExceeded(MAX_TERMS));
        }
        let mut next = Vec::with_capacity(n_max + 1);
        for n in 0..=n_max {
            let mut x = &u[n] * &p0;
            if n > 0 {
                x += &(&u[n - 1] * &p1);
            }
            next.push(x);
        }
        u = next;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference;

    #[test]
    fn rejects_positive_row_sum_unless_allowed() {
        let d = reference::table1();
        let t = RMat::from_rows(&d.t).unwrap();
        assert!(matches!(
            PhDistribution::new(d.alpha.clone(), t.clone()),
            Err(Error::NotSubgenerator(_))
        ));
        let ph = PhDistribution::with_policy(d.alpha.clone(), t, ExitPolicy::AllowSigned).unwrap();
        assert!(ph.has_signed_exit());
    }

    #[test]
    fn table1_constants() {
        let model = QueueModel::from_description(&reference::table1()).unwrap();
        assert!((model.lambda - 0.259558).abs() < 1e-6);
        assert!((model.omega - 0.0327837).abs() < 1e-7);
        assert!((model.tau - 0.1394714).abs() < 1e-7);
        assert!((model.omega2 - 0.0820038).abs() < 1e-7);
        assert!((model.tau2 - 0.2021096).abs() < 1e-7);
        assert!((model.service.fundamental_rate() - 1.1219724).abs() < 1e-6);
    }

    #[test]
    fn excess_law_is_a_distribution() {
        let model = QueueModel::from_description(&reference::table2()).unwrap();
        assert!((sum(model.excess.alpha()) - 1.0).abs() < 1e-12);
        assert!((sum(model.double_excess.alpha()) - 1.0).abs() < 1e-12);
        assert!(model.omega2 > model.omega && model.omega < 1.0);
    }

    #[test]
    fn exponential_excess_is_memoryless() {
        let ph = PhDistribution::exponential(0.7).unwrap();
        let (omega, tau) = omega_tau(&ph, 2.0).unwrap();
        assert!((omega - 0.7 / 2.7).abs() < 1e-14);
        assert!((tau - 0.7 / 2.7).abs() < 1e-14);
        let ex = excess_arrival_ph(&ph, 2.0, omega).unwrap();
        assert!((ex.mean() - 1.0 / 0.7).abs() < 1e-12);
    }

    #[test]
    fn reducible_service_is_rejected() {
        let l0 = RMat::from_rows(&[vec![-1.0, 0.0], vec![0.0, -1.0]]).unwrap();
        let l1 = RMat::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(MspService::new(l0, l1), Err(Error::Reducible));
    }

    #[test]
    fn unstable_queue_is_rejected() {
        let mut d = reference::mm1(0.5, 1.0, 1.0);
        d.l0 = vec![vec![-0.4]];
        d.l1 = vec![vec![0.4]];
        assert!(matches!(validate_model(&d), Err(Error::Unstable { .. })));
    }

    #[test]
    fn poisson_counts() {
        let s = MspService::exponential(2.0).unwrap();
        let p = counting_probabilities(&s, 10, 0.75, 1e-14).unwrap();
        let mean: f64 = 1.5;
        let mut fact = 1.0;
        for (n, pn) in p.iter().enumerate() {
            if n > 0 {
                fact *= n as f64;
            }
            let exact = libm::exp(-mean) * mean.powi(n as i32) / fact;
            assert!((pn[(0, 0)] - exact).abs() < 1e-13, "n = {n}");
        }
    }
}
