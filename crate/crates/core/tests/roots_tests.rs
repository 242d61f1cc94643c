mod common;

use common::model;
use num_complex::Complex64;
use qvsolve_core::kernels::KernelSet;
use qvsolve_core::random::{random_model, ModelBounds};
use qvsolve_core::reference;
use qvsolve_core::roots::{
    approximation_root, approximation_solutions, characteristic_value, find_inner_roots, tail_approximation,
    winding_number, ApproxMode, Characteristic,
};
use qvsolve_core::solver::{solve, SolveOptions};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn table2_roots() {
    let m = model(&reference::table2());
    let r = find_inner_roots(&m).unwrap();
    let want = [c(0.831411, 0.0), c(0.328896, 0.025835), c(0.328896, -0.025835), c(0.194296, 0.0)];
    for (got, want) in r.roots.iter().zip(want) {
        assert!((got - want).norm() < 1e-4, "{got} vs {want}");
    }
    assert_eq!(r.pairing, vec![None, Some(2), Some(1), None]);
}

#[test]
#[ignore = "fails: the printed root is rounded and the value there is 3.1e-8 (see the decisions ledger)"]
fn table1_printed_dominant_root_is_a_zero() {
    let m = model(&reference::table1());
    assert!(characteristic_value(&m, c(0.853818, 0.0)).unwrap().norm() < 1e-8);
}

#[test]
fn table1_dominant_root_rounds_to_printed_value() {
    let m = model(&reference::table1());
    let z = find_inner_roots(&m).unwrap().dominant();
    assert_eq!(format!("{:.6}", z.re), "0.853818");
    assert!(characteristic_value(&m, z).unwrap().norm() < 1e-14);
    assert!(characteristic_value(&m, c(0.853818, 0.0)).unwrap().norm() < 1e-7);
}

#[test]
fn exponential_roots_are_the_load() {
    for (la, mu) in [(0.5, 1.0), (0.2, 0.9), (3.0, 4.0)] {
        let m = model(&reference::mm1(la, mu, 1.0));
        let r = find_inner_roots(&m).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r.roots[0] - c(la / mu, 0.0)).norm() < 1e-12);
        // z(λ + μ - μz) - λ vanishes at 1 as well, outside the search disk.
        assert!(characteristic_value(&m, c(1.0, 0.0)).unwrap().norm() < 1e-12);
    }
}

#[test]
fn random_models_certify_their_roots() {
    for seed in 100..140 {
        let m = model(&random_model(seed, ModelBounds::default()));
        let r = find_inner_roots(&m).unwrap();
        assert_eq!(r.len(), m.m());
        assert_eq!(r.winding, m.m() as i64);
        let (w, _) = winding_number(&Characteristic::new(&m), 1.0 - 1e-6).unwrap();
        assert_eq!(w, m.m() as i64);
        assert!(r.residual < 1e-10);
        for (i, z) in r.roots.iter().enumerate() {
            assert!(z.norm() < 1.0);
            assert!(characteristic_value(&m, *z).unwrap().norm() < 1e-10);
            match r.pairing[i] {
                Some(j) => assert!((r.roots[j] - z.conj()).norm() < 1e-10),
                None => assert_eq!(z.im, 0.0),
            }
            for w in &r.roots[..i] {
                assert!((w - z).norm() > 1e-8);
            }
        }
        for pair in r.roots.windows(2) {
            assert!(pair[0].norm() >= pair[1].norm() - 1e-15);
        }
    }
}

#[test]
fn tail_decays_at_the_dominant_root() {
    for d in [reference::table1(), reference::table2()] {
        let m = model(&d);
        let s = solve(&m, SolveOptions::default()).unwrap();
        let z1 = s.roots.dominant();
        let total = |n: usize| s.pre_arrival.busy.row(n).iter().sum::<f64>();
        let ratio = total(301) / total(300);
        assert!((ratio - z1.re).abs() < 1e-6, "{ratio} vs {z1}");
    }
}

#[test]
fn single_phase_tail_is_exact() {
    let m = model(&reference::mm1(0.5, 1.0, 1.0));
    let s = solve(&m, SolveOptions::default()).unwrap();
    let t = tail_approximation(&s.boundary, &s.roots, 1, 1e-3).unwrap();
    assert_eq!(t.n_epsilon, 0);
    for n in 0..50 {
        let exact = s.pre_arrival.busy.row(n)[0];
        assert!((t.approx(n)[0] - exact).abs() < 1e-15);
    }
}

#[test]
fn table1_tail_approximations() {
    let m = model(&reference::table1());
    let s = solve(&m, SolveOptions::default()).unwrap();
    let eps = 1e-3;
    let t1 = tail_approximation(&s.boundary, &s.roots, 1, eps).unwrap();
    assert!((t1.z_list[0] - c(0.853818, 0.0)).norm() < 1e-5);
    for n in t1.n_epsilon..400 {
        let exact = s.pre_arrival.busy.row(n);
        for (a, e) in t1.approx(n).iter().zip(&exact) {
            assert!((1.0 - a / e).abs() < eps, "n = {n}");
        }
    }
    let t3 = tail_approximation(&s.boundary, &s.roots, 3, eps).unwrap();
    assert_eq!(t3.z_list.len(), 3);
    assert!(t3.n_epsilon <= t1.n_epsilon);
    assert!(t1.n_epsilon_ratio >= 1);
    assert!(tail_approximation(&s.boundary, &s.roots, 5, eps).is_err());
}

#[test]
fn order_three_keeps_conjugate_pairs_whole() {
    let m = model(&reference::table2());
    let s = solve(&m, SolveOptions::default()).unwrap();
    let t = tail_approximation(&s.boundary, &s.roots, 2, 1e-3).unwrap();
    assert_eq!(t.z_list.len(), 3);
    for n in 0..30 {
        let exact = s.pre_arrival.busy.row(n);
        let a = t.approx(n);
        let all = tail_approximation(&s.boundary, &s.roots, 4, 1e-3).unwrap().approx(n);
        for j in 0..4 {
            assert!((all[j] - exact[j]).abs() < 1e-12);
            assert!(a[j].is_finite());
        }
    }
}

#[test]
fn zero_shift_approximation_is_exact_for_exponential_queues() {
    let m = model(&reference::mm1(0.5, 1.0, 1.0));
    let ks = KernelSet::build(&m).unwrap();
    let z = approximation_root(&m, &ks, ApproxMode::NearRho(m.rho)).unwrap();
    assert!((z - 0.5).abs() < 1e-12);
}

#[test]
fn light_traffic_root_for_exponential_queue() {
    let m = model(&reference::mm1(0.5, 1.0, 1.0));
    let ks = KernelSet::build(&m).unwrap();
    let z = approximation_root(&m, &ks, ApproxMode::Light).unwrap();
    assert!(z > 0.0 && z < 1.0);
    assert!((z - 0.5).abs() < 0.1, "{z}");
}

#[test]
fn approximation_solutions_satisfy_their_equation() {
    let ks_model = |d| {
        let m = model(&d);
        let ks = KernelSet::build(&m).unwrap();
        (m, ks)
    };
    for d in [reference::table1(), reference::table2(), random_model(3, ModelBounds::default())] {
        let (m, ks) = ks_model(d);
        let pi = m.service.stationary().to_vec();
        let series = |x: f64, order: u32| -> f64 {
            ks.family(qvsolve_core::kernels::Family::S)
                .iter()
                .enumerate()
                .map(|(n, s)| {
                    let v: f64 = pi.iter().zip(s.row_sums()).map(|(a, b)| a * b).sum();
                    let falling: f64 = (0..order).map(|i| n as f64 - i as f64).product();
                    if falling == 0.0 { 0.0 } else { v * falling * x.powi(n as i32 - order as i32) }
                })
                .sum()
        };
        for mode in [ApproxMode::Light, ApproxMode::Heavy, ApproxMode::NearRho(m.rho - 0.01)] {
            let shift = mode.shift(m.rho).unwrap();
            for z in approximation_solutions(&m, &ks, mode).unwrap() {
                let f = |z: f64| {
                    let w = z - shift;
                    z - series(w, 0) - shift * series(w, 1) - 0.5 * shift * shift * series(w, 2)
                };
                let h = 1e-7;
                assert!(f(z - h) * f(z + h) <= 0.0 || f(z).abs() < 1e-12, "{mode:?}: f({z}) = {}", f(z));
                assert!((z - 1.0).abs() > 1e-6);
            }
        }
    }
}

#[test]
fn approximation_root_is_the_solution_closest_to_the_dominant_root() {
    let m = model(&reference::table2());
    let ks = KernelSet::build(&m).unwrap();
    let target = find_inner_roots(&m).unwrap().dominant().re;
    for mode in [ApproxMode::Light, ApproxMode::Heavy] {
        let z = approximation_root(&m, &ks, mode).unwrap();
        for s in approximation_solutions(&m, &ks, mode).unwrap() {
            assert!((z - target).abs() <= (s - target).abs());
        }
    }
    assert!(ApproxMode::NearRho(1.5).shift(0.4).is_err());
}

#[test]
#[ignore = "fails: the only real solution is near 0.50 for this model (see the decisions ledger)"]
fn table1_near_rho_root_is_close_to_dominant() {
    let m = model(&reference::table1());
    let ks = KernelSet::build(&m).unwrap();
    let z = approximation_root(&m, &ks, ApproxMode::NearRho(m.rho - 0.01)).unwrap();
    assert!((z - 0.853818).abs() < 0.05 * 0.853818, "{z}");
}
