//! Resonant closed forms written out independently of the library and checked
//! against the trace-formula quasiprobabilities at the fig5 preset point.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use kdcoll::analytic::{kdq_index, resonant_kdq_q, resonant_kdq_us, resonant_kdq_w, AnalyticParams};
use kdcoll::kdq::Quantity;
use kdcoll::model::{build_system_state, Model, ModelConfig, SystemStateParams};

struct Point {
    cfg: ModelConfig,
    rho11: f64,
    rho12: C64,
}

fn fig5_point() -> Point {
    let beta: f64 = 0.1;
    let mut cfg = ModelConfig {
        omega_a: 1.0,
        omega_s: 1.0,
        g: 1.0,
        tau: PI / 6.0,
        beta,
        ..ModelConfig::default()
    };
    cfg.lambda = 1.0 / (2.0 * (beta / 2.0).cosh());
    let rho11: f64 = 0.25;
    Point {
        cfg,
        rho11,
        rho12: C64::from_polar((3.0f64).sqrt() / 4.0, PI / 3.0),
    }
}

/// `[(fin, in)] = 00, 01, 10, 11` entries of u_S, q_S and w_S.
fn oracle(p: &Point) -> [[C64; 4]; 3] {
    let w = p.cfg.omega_a;
    let b = p.cfg.beta;
    let z = (b * w / 2.0).exp() + (-b * w / 2.0).exp();
    let up = (b * w / 2.0).exp() / z;
    let down = (-b * w / 2.0).exp() / z;
    let phi = p.cfg.g * p.cfg.tau;
    let (s2, c2) = (phi.sin().powi(2), phi.cos().powi(2));
    let j1 = p.cfg.lambda * p.rho12.re;
    let j2 = p.cfg.lambda * p.rho12.im;
    let h = (2.0 * phi).sin() / 2.0;
    let q = [
        p.rho11 * (up * c2 + down),
        (1.0 - p.rho11) * down * s2,
        p.rho11 * up * s2,
        (1.0 - p.rho11) * (down * c2 + up),
    ];
    let wk = [
        C64::new(-j2 * h, j1 * h),
        C64::new(-j2 * h, -j1 * h),
        C64::new(j2 * h, -j1 * h),
        C64::new(j2 * h, j1 * h),
    ];
    let qs = q.map(|v| C64::new(v, 0.0));
    let us = [0, 1, 2, 3].map(|k| qs[k] + wk[k]);
    [us, qs, wk]
}

#[test]
fn fig5_point_entries_match_trace_formula() {
    let p = fig5_point();
    let rho = build_system_state(&SystemStateParams {
        rho11: p.rho11,
        r: p.rho12.norm(),
        phi_c: p.rho12.arg(),
    })
    .unwrap();
    let model = Model::new(&p.cfg).unwrap();
    let expected = oracle(&p);
    for (k, q) in [Quantity::Us, Quantity::Qs, Quantity::Ws].into_iter().enumerate() {
        let d = model.kdq(q, &rho).unwrap();
        for fin in 0..2 {
            for init in 0..2 {
                let got = d.entries[kdq_index(fin, init)].quasiprob;
                let want = expected[k][2 * fin + init];
                assert!((got - want).norm() < 1e-10, "{q} ({fin},{init}): {got} vs {want}");
            }
        }
    }
    let ap = AnalyticParams::new(&p.cfg, &rho);
    for (lib, want) in [
        (resonant_kdq_us(&ap).unwrap(), expected[0]),
        (resonant_kdq_q(&ap).unwrap(), expected[1]),
        (resonant_kdq_w(&ap).unwrap(), expected[2]),
    ] {
        for (a, b) in lib.iter().zip(&want) {
            assert!((a - b).norm() < 1e-14);
        }
    }
}

#[test]
fn heat_entries_nonnegative_on_grid() {
    for i in 0..=20 {
        for j in 0..=20 {
            let mut p = fig5_point();
            p.cfg.beta = 0.05 + 0.5 * i as f64;
            p.cfg.tau = PI * j as f64 / 20.0;
            p.rho11 = (i as f64 / 20.0).min(1.0);
            for q in oracle(&p)[1] {
                assert!(q.re >= 0.0 && q.im == 0.0);
            }
        }
    }
}
