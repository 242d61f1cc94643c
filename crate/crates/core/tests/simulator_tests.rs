mod common;

use common::{model, ExactQueue};
use qvsolve_core::model::QueueModel;
use qvsolve_core::random::{random_model, ModelBounds};
use qvsolve_core::reference;
use qvsolve_core::simulator::{simulate, Estimate, SimConfig};
use qvsolve_core::solver::{solve, SolveOptions};

fn near(e: &Estimate, x: f64, widths: f64) -> bool {
    (e.mean - x).abs() <= widths * e.half_width
}

/// Mean sojourn time of M/M/1 with one exponential vacation, by the
/// stochastic decomposition of the M/G/1 queue with a single vacation.
fn single_vacation_sojourn(lambda: f64, mu: f64, gamma: f64) -> f64 {
    let rho = lambda / mu;
    let mg1 = lambda * 2.0 / (mu * mu) / (2.0 * (1.0 - rho)) + 1.0 / mu;
    let ev = 1.0 / gamma;
    let ev2 = 2.0 / (gamma * gamma);
    let no_arrival = gamma / (gamma + lambda);
    mg1 + lambda * ev2 / (2.0 * (lambda * ev + no_arrival))
}

#[test]
fn exact_chain_reproduces_decomposition() {
    for (la, mu, g) in [(0.5, 1.0, 1.0), (0.3, 1.2, 0.4), (0.8, 1.0, 3.0)] {
        let m = model(&reference::mm1(la, mu, g));
        let q = ExactQueue::solve(&m, 600);
        assert!((q.mass() - 1.0).abs() < 1e-10);
        assert!(q.top_mass() < 1e-14);
        let w = single_vacation_sojourn(la, mu, g);
        assert!((q.mean_level() - la * w).abs() < 1e-9, "{} vs {}", q.mean_level(), la * w);
        assert!((q.busy_probability() - la / mu).abs() < 1e-10);
    }
}

#[test]
fn instant_vacations_give_the_plain_exponential_queue() {
    let m = model(&reference::mm1(0.5, 1.0, 1e6));
    let r = simulate(&m, &SimConfig::new(1_000_000, 7)).unwrap();
    assert!(near(&r.l_s, 1.0, 3.0), "{:?}", r.l_s);
    assert!(near(&r.w_s, 2.0, 3.0), "{:?}", r.w_s);
    assert!(near(&r.rho_prime, 0.5, 3.0), "{:?}", r.rho_prime);
    assert!(r.vacation_mass.mean < 1e-4);
}

#[test]
fn single_vacation_exponential_queue() {
    let m = model(&reference::mm1(0.5, 1.0, 1.0));
    let w = single_vacation_sojourn(0.5, 1.0, 1.0);
    assert!((w - 2.428_571_428_571_428_5).abs() < 1e-12);
    let r = simulate(&m, &SimConfig::new(2_000_000, 11)).unwrap();
    assert!(near(&r.w_s, w, 3.0), "{:?}", r.w_s);
    assert!(near(&r.l_s, 0.5 * w, 3.0), "{:?}", r.l_s);
    assert!(near(&r.rho_prime, 0.5, 3.0));
    assert!(near(&r.lambda_hat, 0.5, 3.0));
    assert!(near(&r.mu_star_hat, 1.0, 3.0));
}

fn check_against_exact(m: &QueueModel, arrivals: u64, seed: u64) {
    let q = ExactQueue::solve(m, 800);
    assert!(q.top_mass() < 1e-12);
    let r = simulate(m, &SimConfig::new(arrivals, seed)).unwrap();
    assert!(near(&r.l_s, q.mean_level(), 3.0), "L: {:?} vs {}", r.l_s, q.mean_level());
    assert!(near(&r.rho_prime, q.busy_probability(), 3.0), "rho': {:?} vs {}", r.rho_prime, q.busy_probability());
    let va = q.vacation_at_arrival(m);
    assert!(near(&r.vacation_mass, va, 3.0), "vac: {:?} vs {va}", r.vacation_mass);
    assert!(near(&r.l_s, r.w_s.mean * r.lambda_hat.mean, 3.0));
    assert!((r.pre_arrival.total() - 1.0).abs() < 1e-12);
    assert!((r.arbitrary.total() - 1.0).abs() < 1e-12);
    assert!((r.post_departure.total() - 1.0).abs() < 1e-12);
}

#[test]
fn table2_matches_exact_chain() {
    check_against_exact(&model(&reference::table2()), 1_000_000, 3);
}

#[test]
fn random_models_match_exact_chain() {
    for seed in [1u64, 4, 7] {
        check_against_exact(&model(&random_model(seed, ModelBounds::default())), 400_000, seed);
    }
}

#[test]
fn root_method_differs_from_exact_chain() {
    let m = model(&reference::table2());
    let q = ExactQueue::solve(&m, 800);
    let s = solve(&m, SolveOptions::default()).unwrap();
    assert!((q.mean_level() - 2.1109).abs() < 1e-3);
    assert!((s.measures.l_s - q.mean_level()).abs() > 0.2);
    assert!((q.busy_probability() - m.rho).abs() < 1e-10);
}

#[test]
fn different_seeds_give_different_paths() {
    let m = model(&reference::table2());
    let a = simulate(&m, &SimConfig::new(20_000, 1)).unwrap();
    let b = simulate(&m, &SimConfig::new(20_000, 2)).unwrap();
    assert_ne!(a.l_s.mean, b.l_s.mean);
    assert_eq!(a, simulate(&m, &SimConfig::new(20_000, 1)).unwrap());
}
