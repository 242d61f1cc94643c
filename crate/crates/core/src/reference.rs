//! Reference configurations used by tests, examples and the CLI fixtures.

use alloc::vec;
use alloc::vec::Vec;

use crate::model::{ExitPolicy, ModelDescription};

fn service_base() -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let l0 = vec![
        vec![-3.69939, 0.01276, 0.00572, 0.0],
        vec![0.01012, -0.55759, 0.0, 0.00682],
        vec![0.0, 0.02343, -0.53152, 0.48730],
        vec![0.00649, 0.55363, 0.0, -0.58531],
    ];
    let l1 = vec![
        vec![3.65748, 0.01727, 0.0, 0.00616],
        vec![0.01353, 0.00517, 0.52195, 0.0],
        vec![0.00924, 0.0, 0.0, 0.01155],
        vec![0.00561, 0.0, 0.00847, 0.01111],
    ];
    (l0, l1)
}

/// Three-phase arrivals with a signed exit vector against a four-phase
/// service process, vacation rate 1.8.
pub fn table1() -> ModelDescription {
    let (l0, l1) = service_base();
    ModelDescription {
        alpha: vec![0.22, 0.33, 0.45],
        t: vec![vec![-2.823, 0.0, 2.812], vec![3.542, -2.942, 1.0], vec![1.71, 0.0, -2.24]],
        l0,
        l1,
        gamma: 1.8,
        exit_policy: ExitPolicy::AllowSigned,
    }
}

/// Rates of the acyclic PH fitted to the log-normal(1.04, 0.215) law.
pub const FITTED_RATES: [f64; 3] = [0.017943, 0.112322, 0.548702];
/// Published initial vector for [`FITTED_RATES`].
pub const FITTED_ALPHA: [f64; 3] = [0.000024, 0.034291, 0.965685];

/// Fitted acyclic PH arrivals against a strongly correlated service process,
/// vacation rate 1.7.
pub fn table2() -> ModelDescription {
    let (mut l0, mut l1) = service_base();
    l0[0][0] = -2.69939;
    l0[2][2] = -1.53152;
    l1[0][0] = 2.65748;
    l1[2] = vec![0.00924, 0.0, 1.0, 0.01155];
    let [r1, r2, r3] = FITTED_RATES;
    ModelDescription {
        alpha: FITTED_ALPHA.to_vec(),
        t: vec![vec![-r1, r1, 0.0], vec![0.0, -r2, r2], vec![0.0, 0.0, -r3]],
        l0,
        l1,
        gamma: 1.7,
        exit_policy: ExitPolicy::Strict,
    }
}

/// M/M/1 with exponential vacation.
pub fn mm1(lambda: f64, mu: f64, gamma: f64) -> ModelDescription {
    ModelDescription {
        alpha: vec![1.0],
        t: vec![vec![-lambda]],
        l0: vec![vec![-mu]],
        l1: vec![vec![mu]],
        gamma,
        exit_policy: ExitPolicy::Strict,
    }
}
