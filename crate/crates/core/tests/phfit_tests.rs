mod common;

use common::model;
use qvsolve_core::phfit::{
    fit_alpha, pade_lst, rates_from_denominator, target_moments, LogNormal, MomentTarget,
};
use qvsolve_core::reference;
use qvsolve_core::solver::{solve, SolveOptions};

const GL_NODES: [f64; 4] = [0.183_434_642_495_649_8, 0.525_532_409_916_329, 0.796_666_477_413_626_7, 0.960_289_856_497_536_3];
const GL_WEIGHTS: [f64; 4] = [0.362_683_783_378_362, 0.313_706_645_877_887_3, 0.222_381_034_453_374_5, 0.101_228_536_290_376_3];

/// `∫ x^k f(x) dx` in the variable `u = ln x`, composite Gauss-Legendre.
fn lognormal_moment_quadrature(ln: &LogNormal, k: u32) -> f64 {
    let center = ln.scale + k as f64 * ln.shape * ln.shape;
    let (lo, hi) = (center - 14.0 * ln.shape, center + 14.0 * ln.shape);
    let panels = 400;
    let h = (hi - lo) / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        let mid = lo + (p as f64 + 0.5) * h;
        for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
            for s in [-1.0, 1.0] {
                let u = mid + s * 0.5 * h * x;
                let xv = u.exp();
                acc += 0.5 * h * w * xv.powi(k as i32) * ln.density(xv) * xv;
            }
        }
    }
    acc
}

#[test]
fn moments_match_quadrature() {
    for ln in [LogNormal::REFERENCE, LogNormal { shape: 0.4, scale: -0.3 }] {
        for k in 0..=3 {
            let q = lognormal_moment_quadrature(&ln, k);
            let exact = if k == 0 { 1.0 } else { ln.moment(k) };
            assert!(((q - exact) / exact).abs() < 1e-9, "k = {k}: {q} vs {exact}");
        }
    }
}

#[test]
fn published_pipeline() {
    let mu = target_moments(&LogNormal::REFERENCE, 20).unwrap();
    let pade = pade_lst(&mu, 2, 3).unwrap();
    for (got, want) in pade.denominator[1..].iter().zip([66.455094, 613.950181, 904.240262]) {
        assert!(((got - want) / want).abs() < 1e-3);
    }
    let rates = rates_from_denominator(&pade).unwrap();
    for (got, want) in rates.iter().zip(reference::FITTED_RATES) {
        assert!((got - want).abs() < 1e-5);
    }
    assert!(rates.windows(2).all(|w| w[0] <= w[1]));
    let fit = fit_alpha(&mu[..4], &rates, &[1.0; 4]).unwrap();
    assert!((fit.alpha.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!(fit.alpha.iter().all(|&a| a >= 0.0));
    assert!((fit.to_ph().unwrap().rate() - 0.469635).abs() < 1e-5);
}

#[test]
fn rates_are_moderately_sensitive_to_moments() {
    let mu = target_moments(&LogNormal::REFERENCE, 5).unwrap();
    let base = rates_from_denominator(&pade_lst(&mu, 2, 3).unwrap()).unwrap();
    for i in 0..5 {
        let mut p = mu.clone();
        p[i] *= 1.0 + 1e-6;
        let moved = rates_from_denominator(&pade_lst(&p, 2, 3).unwrap()).unwrap();
        let shift = base.iter().zip(&moved).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(shift < 1e-3, "moment {}: {shift}", i + 1);
    }
}

#[test]
fn fitted_arrivals_reproduce_the_published_footer() {
    let mu = target_moments(&LogNormal::REFERENCE, 4).unwrap();
    let fit = fit_alpha(&mu, &reference::FITTED_RATES, &[1.0; 4]).unwrap();
    let mut d = reference::table2();
    d.alpha = fit.alpha.clone();
    let m = model(&d);
    let s = solve(&m, SolveOptions::default()).unwrap();
    let me = &s.measures;
    assert!((me.l_s - 1.817167).abs() < 1e-6, "{}", me.l_s);
    assert!((me.w_s - 3.776260).abs() < 1e-6, "{}", me.w_s);
    assert!((me.w_s_little - 3.869320).abs() < 1e-6, "{}", me.w_s_little);
}
