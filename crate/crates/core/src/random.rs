//! Random valid models for property tests and simulator cross-checks.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::RMat;
use crate::model::{ExitPolicy, ModelDescription, MspService, PhDistribution};

/// Bounds of a random model draw.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelBounds {
    pub max_m: usize,
    pub max_eta: usize,
    pub min_rho: f64,
    pub max_rho: f64,
}

impl Default for ModelBounds {
    fn default() -> Self {
        ModelBounds { max_m: 3, max_eta: 3, min_rho: 0.1, max_rho: 0.8 }
    }
}

fn split(rng: &mut ChaCha8Rng, total: f64, parts: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..parts).map(|_| rng.random::<f64>() + 0.05).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| total * x / s).collect()
}

/// Draws a strict model with `m ≤ max_m`, `η ≤ max_eta` and load in
/// `[min_rho, max_rho]`. The service process is irreducible by
/// construction (every phase can complete into the next one).
pub fn random_model(seed: u64, bounds: ModelBounds) -> ModelDescription {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.random_range(1..=bounds.max_m);
    let eta = rng.random_range(1..=bounds.max_eta);

    let alpha = split(&mut rng, 1.0, eta);
    let mut t = vec![vec![0.0; eta]; eta];
    for i in 0..eta {
        let rate = rng.random_range(0.5..3.0);
        t[i][i] = -rate;
        let exit = if eta == 1 { 1.0 } else { rng.random_range(0.2..1.0) };
        if eta > 1 {
            let others = split(&mut rng, (1.0 - exit) * rate, eta - 1);
            for (k, j) in (0..eta).filter(|&j| j != i).enumerate() {
                t[i][j] = others[k];
            }
        }
    }

    let mut l0 = vec![vec![0.0; m]; m];
    let mut l1 = vec![vec![0.0; m]; m];
    for i in 0..m {
        let rate = rng.random_range(0.5..4.0);
        l0[i][i] = -rate;
        let completion = if m == 1 { 1.0 } else { rng.random_range(0.3..1.0) };
        let done = split(&mut rng, completion * rate, m);
        for j in 0..m {
            l1[i][j] = done[j];
        }
        if m > 1 {
            let others = split(&mut rng, (1.0 - completion) * rate, m - 1);
            for (k, j) in (0..m).filter(|&j| j != i).enumerate() {
                l0[i][j] = others[k];
            }
        }
    }

    let target = rng.random_range(bounds.min_rho..=bounds.max_rho);
    let lambda = PhDistribution::new(alpha.clone(), RMat::from_rows(&t).expect("square"))
        .expect("valid by construction")
        .rate();
    let mu = MspService::new(RMat::from_rows(&l0).expect("square"), RMat::from_rows(&l1).expect("square"))
        .expect("valid by construction")
        .fundamental_rate();
    let scale = lambda / (target * mu);
    for row in l0.iter_mut().chain(l1.iter_mut()) {
        for x in row.iter_mut() {
            *x *= scale;
        }
    }
    let gamma = libm::exp(rng.random_range(libm::log(0.2)..libm::log(5.0)));
    ModelDescription { alpha, t, l0, l1, gamma, exit_policy: ExitPolicy::Strict }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_model;

    #[test]
    fn draws_are_valid_and_within_bounds() {
        let b = ModelBounds::default();
        for seed in 0..200 {
            let d = random_model(seed, b);
            let model = validate_model(&d).unwrap();
            assert!(model.m() <= 3 && model.eta() <= 3);
            assert!(model.rho >= b.min_rho - 1e-12 && model.rho <= b.max_rho + 1e-12);
        }
        assert_eq!(random_model(9, b), random_model(9, b));
    }
}
