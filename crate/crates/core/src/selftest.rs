//! Acceptance criteria, runnable from the library, the CLI and the test suite.
//!
//! Every criterion draws from a fixed-seed generator so results are reproducible.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analytic::{
    delta_e_s, delta_e_sa, delta_e_sa_limit, kdq_index, resonant_energy_stats, resonant_kdq_q,
    resonant_kdq_us, resonant_kdq_w, resonant_nonpositivity, resonant_values, resonant_w_q_stats,
    AnalyticParams,
};
use crate::cli::preset::Preset;
use crate::cli::run::run;
use crate::collision::Propagator;
use crate::error::{Error, Result};
use crate::kdq::{marginalize_usa_to_ua, marginalize_usa_to_us, moments, nonpositivity, Quantity};
use crate::linalg::{trace_distance, ComplexMatrix};
use crate::model::{build_system_state, energy_commutator_norm, Mode, Model, ModelConfig, SystemStateParams};
use crate::smalltau::{default_dt, integrate_master_equation, operator_approach};

pub const SEED: u64 = 0x6b64_636f_6c6c;

pub const LAMBDA_MAX_TOL: f64 = 5e-4;
pub const NORMALIZATION_TOL: f64 = 1e-12;
pub const NORMALIZATION_DRAWS: usize = 1200;
pub const FIRST_LAW_TOL: f64 = 1e-10;
pub const ORACLE_TOL: f64 = 1e-10;
pub const ORACLE_POINTS: usize = 240;
pub const MARGINAL_TOL: f64 = 1e-12;
pub const TPM_TOL: f64 = 1e-12;
pub const RESONANT_COMMUTATOR_TOL: f64 = 1e-12;
pub const BCH_RATIO_RANGE: (f64, f64) = (6.5, 9.5);
pub const ME_MIN_RATIO: f64 = 1.5;
pub const OA_TOL: f64 = 1e-12;
pub const OA_MEAN_TOL: f64 = 1e-10;
pub const QUADRATIC_TOL: f64 = 1e-10;
pub const LIMIT_REL_TOL: f64 = 0.05;
pub const LIMIT_FLOOR: f64 = 1e-3;

/// Criterion known to be unattainable as stated; see the README.
pub const KNOWN_UNATTAINABLE: u8 = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] criterion {:>2} {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail
        )
    }
}

pub const NAMES: [&str; 13] = [
    "lambda_max reproduction",
    "normalization",
    "first law",
    "oracle equivalence",
    "marginalization",
    "TPM limit",
    "energy-preservation switch",
    "BCH order",
    "master-equation consistency",
    "operator approach",
    "variance structure",
    "extreme out-of-resonance limit",
    "determinism",
];

fn finish(id: u8, outcome: Result<(bool, String)>) -> CriterionResult {
    let (passed, detail) = match outcome {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}")),
    };
    CriterionResult {
        id,
        name: NAMES[id as usize - 1],
        passed,
        detail,
    }
}

/// Runs criterion `id` (1 to 13).
pub fn criterion(id: u8) -> CriterionResult {
    let outcome = match id {
        1 => lambda_max_reproduction(),
        2 => normalization(),
        3 => first_law(),
        4 => oracle_equivalence(),
        5 => marginalization(),
        6 => tpm_limit(),
        7 => energy_preservation_switch(),
        8 => bch_order(),
        9 => master_equation_consistency(),
        10 => operator_approach_check(),
        11 => variance_structure(),
        12 => out_of_resonance_limit(),
        13 => determinism(),
        _ => Err(Error::InvalidConfig {
            field: "criterion",
            reason: format!("no criterion {id}"),
        }),
    };
    finish(id, outcome)
}

pub fn run_all() -> Vec<CriterionResult> {
    (1..=13).map(criterion).collect()
}

/// A random admissible model point with unit `hbar` and `omega_a`.
#[derive(Debug, Clone)]
pub struct RandomPoint {
    pub cfg: ModelConfig,
    pub state: SystemStateParams,
    pub rho_s: ComplexMatrix,
}

/// Draws a point; `delta = None` picks a random detuning in `[-10, 10]`.
pub fn random_point(rng: &mut ChaCha8Rng, mode: Mode, delta: Option<f64>) -> RandomPoint {
    let delta = delta.unwrap_or_else(|| rng.gen_range(-10.0..10.0));
    let tau = rng.gen_range(0.01..1.5);
    let mut cfg = ModelConfig {
        omega_a: 1.0,
        omega_s: 1.0 + delta,
        g: rng.gen_range(0.1..2.0),
        tau,
        beta: rng.gen_range(0.05..6.0),
        mode,
        ..ModelConfig::default()
    };
    let frac = rng.gen_range(-1.0..1.0);
    match mode {
        Mode::Exact => cfg.lambda = frac * cfg.lambda_max(),
        Mode::WeaklyCoherent => cfg.lambda_tilde = frac * cfg.lambda_max() / tau.sqrt(),
    }
    let rho11 = rng.gen_range(0.0..1.0);
    let state = SystemStateParams {
        rho11,
        r: rng.gen_range(0.0..1.0) * SystemStateParams::r_max(rho11),
        phi_c: rng.gen_range(0.0..2.0 * PI),
    };
    let rho_s = build_system_state(&state).expect("admissible by construction");
    RandomPoint { cfg, state, rho_s }
}

fn rng() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(SEED)
}

fn unit_cfg(delta: f64) -> ModelConfig {
    ModelConfig {
        omega_a: 1.0,
        omega_s: 1.0 + delta,
        ..ModelConfig::default()
    }
}

fn lambda_max_reproduction() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    let mut got = Vec::new();
    for (beta, expected) in [(5.0, 0.082), (1.0, 0.443), (0.2, 0.498)] {
        let cfg = ModelConfig { beta, ..unit_cfg(0.0) };
        let v = 1.0 / cfg.z_a();
        worst = worst.max((v - expected).abs());
        got.push(format!("{v:.4}"));
    }
    Ok((worst <= LAMBDA_MAX_TOL, format!("1/Z_A = [{}], max deviation {worst:.2e}", got.join(", "))))
}

fn normalization() -> Result<(bool, String)> {
    let mut rng = rng();
    let mut worst: f64 = 0.0;
    for k in 0..NORMALIZATION_DRAWS {
        let p = if k % 2 == 0 {
            random_point(&mut rng, Mode::WeaklyCoherent, None)
        } else {
            random_point(&mut rng, Mode::Exact, Some(0.0))
        };
        let model = Model::new(&p.cfg)?;
        for q in Quantity::ALL {
            let expected = if q.is_work_type() { 0.0 } else { 1.0 };
            let total = model.kdq(q, &p.rho_s)?.total();
            worst = worst.max((total - C64::new(expected, 0.0)).norm());
        }
    }
    Ok((
        worst <= NORMALIZATION_TOL,
        format!("{NORMALIZATION_DRAWS} draws, 7 quantities, max |sum - target| {worst:.2e}"),
    ))
}

fn first_law() -> Result<(bool, String)> {
    let pt = Preset::Fig7.spec().base.resolve()?;
    let model = Model::new(&pt.cfg)?;
    let traj = model.evolve_with(&pt.rho_s, 100, true, Propagator::Exact)?;
    let unit = pt.cfg.hbar * pt.cfg.omega_a;
    let (mut law, mut usa, mut work, mut heat) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for step in &traj.per_step {
        let t = step.thermo.as_ref().expect("thermo requested");
        let mean = |q| t.moments_of(q).map(|m| m.mean.re).ok_or(Error::InvalidState(format!("missing {q}")));
        let (us, ua, usa_m) = (mean(Quantity::Us)?, mean(Quantity::Ua)?, mean(Quantity::Usa)?);
        law = law.max((us + ua - usa_m).abs() / unit);
        usa = usa.max(usa_m.abs() / unit);
        let missing = || Error::InvalidState("split quantities missing at resonance".into());
        work = work.max((t.w_s.ok_or_else(missing)? + t.w_a.ok_or_else(missing)?).abs() / unit);
        heat = heat.max((t.q_s.ok_or_else(missing)? + t.q_a.ok_or_else(missing)?).abs() / unit);
    }
    let worst = law.max(usa).max(work).max(heat);
    Ok((
        worst < FIRST_LAW_TOL,
        format!(
            "100 collisions, in units of hbar*omega: |us+ua-usa| {law:.1e}, |usa| {usa:.1e}, |w_s+w_a| {work:.1e}, |q_s+q_a| {heat:.1e}"
        ),
    ))
}

fn oracle_equivalence() -> Result<(bool, String)> {
    let mut rng = rng();
    let (mut app_c, mut sec5) = (0.0f64, 0.0f64);
    for k in 0..ORACLE_POINTS {
        let mode = if k % 4 == 3 { Mode::WeaklyCoherent } else { Mode::Exact };
        // Resonant point: all twenty components, delta E_S and Delta u_S^2.
        let p = random_point(&mut rng, mode, Some(0.0));
        let model = Model::new(&p.cfg)?;
        let ap = AnalyticParams::new(&p.cfg, &p.rho_s);
        let values = resonant_values(&ap);
        for (quantity, closed) in [
            (Quantity::Us, resonant_kdq_us(&ap)?),
            (Quantity::Qs, resonant_kdq_q(&ap)?),
            (Quantity::Ws, resonant_kdq_w(&ap)?),
        ] {
            let d = model.kdq(quantity, &p.rho_s)?;
            for fin in 0..2 {
                for init in 0..2 {
                    let e = &d.entries[kdq_index(fin, init)];
                    let c = closed[2 * fin + init];
                    app_c = app_c.max((e.quasiprob.re - c.re).abs()).max((e.quasiprob.im - c.im).abs());
                    app_c = app_c.max((e.value - values[2 * fin + init]).abs());
                }
            }
        }
        let m_us = moments(&model.kdq(Quantity::Us, &p.rho_s)?);
        let (mean, var) = resonant_energy_stats(&ap)?;
        app_c = app_c.max((m_us.mean.re - mean).abs()).max((m_us.variance - var).norm());

        let stats = resonant_w_q_stats(&ap)?;
        let m_w = moments(&model.kdq(Quantity::W, &p.rho_s)?);
        let m_q = moments(&model.kdq(Quantity::Q, &p.rho_s)?);
        sec5 = sec5
            .max((m_w.mean - stats.w_mean).norm())
            .max((m_w.variance - stats.w_variance).norm())
            .max((m_q.mean - stats.q_mean).norm())
            .max((m_q.variance - stats.q_variance).norm());
        let np = nonpositivity(&model.kdq(Quantity::Us, &p.rho_s)?)?;
        let (n_re, n_im) = resonant_nonpositivity(&ap)?;
        sec5 = sec5.max((np.n_re - n_re).abs()).max((np.n_im - n_im).abs());

        // Detuned point: mean energy changes from the trace formula.
        let p = random_point(&mut rng, mode, None);
        let model = Model::new(&p.cfg)?;
        let (_, joint) = model.collide(&p.rho_s)?;
        let (es, _, esa) = model.energy_changes(&p.rho_s, &joint);
        let ap = AnalyticParams::new(&p.cfg, &p.rho_s);
        sec5 = sec5.max((es - delta_e_s(&ap)).abs()).max((esa - delta_e_sa(&ap)).abs());
    }
    let worst = app_c.max(sec5);
    Ok((
        worst <= ORACLE_TOL,
        format!(
            "{ORACLE_POINTS} resonant + {ORACLE_POINTS} detuned points, max error: componentwise {app_c:.1e}, moments and witnesses {sec5:.1e}"
        ),
    ))
}

fn marginalization() -> Result<(bool, String)> {
    let mut rng = rng();
    let mut worst: f64 = 0.0;
    for k in 0..300 {
        let mode = if k % 2 == 0 { Mode::Exact } else { Mode::WeaklyCoherent };
        let p = random_point(&mut rng, mode, None);
        let model = Model::new(&p.cfg)?;
        let usa = model.kdq(Quantity::Usa, &p.rho_s)?;
        for (marg, q) in [
            (marginalize_usa_to_us(&usa)?, Quantity::Us),
            (marginalize_usa_to_ua(&usa)?, Quantity::Ua),
        ] {
            let direct = model.kdq(q, &p.rho_s)?;
            if marg.entries.len() != direct.entries.len() {
                return Ok((false, format!("{q}: {} vs {} entries", marg.entries.len(), direct.entries.len())));
            }
            for (a, b) in marg.entries.iter().zip(&direct.entries) {
                worst = worst.max((a.quasiprob - b.quasiprob).norm()).max((a.value - b.value).abs());
            }
        }
    }
    Ok((worst <= MARGINAL_TOL, format!("300 points, max entry difference {worst:.2e}")))
}

fn tpm_limit() -> Result<(bool, String)> {
    let mut rng = rng();
    let mut worst: f64 = 0.0;
    for _ in 0..300 {
        let mut p = random_point(&mut rng, Mode::Exact, None);
        p.cfg.lambda = 0.0;
        p.state.r = 0.0;
        let rho_s = build_system_state(&p.state)?;
        let model = Model::new(&p.cfg)?;
        for q in [Quantity::Us, Quantity::Ua, Quantity::Usa] {
            let r = nonpositivity(&model.kdq(q, &rho_s)?)?;
            worst = worst.max(r.n_q).max(r.n_re).max(r.n_im);
        }
    }
    Ok((worst < TPM_TOL, format!("300 points, max witness {worst:.2e}")))
}

fn energy_preservation_switch() -> Result<(bool, String)> {
    let resonant = energy_commutator_norm(&unit_cfg(0.0))?;
    let delta = 3.0;
    let cfg = unit_cfg(delta);
    let detuned = energy_commutator_norm(&cfg)?;
    let hg = cfg.hbar * cfg.g;
    let floor = 0.1 * hg * delta / (hg + delta.abs());
    Ok((
        resonant < RESONANT_COMMUTATOR_TOL && detuned > floor,
        format!("norm {resonant:.1e} at delta = 0, {detuned:.3} at delta = 3 (floor {floor:.3})"),
    ))
}

fn bch_error(model: &Model, rho_s: &ComplexMatrix) -> f64 {
    let exact = model.collide_joint(rho_s);
    (&exact - &model.bch_joint(rho_s)).frobenius_norm()
}

fn bch_order() -> Result<(bool, String)> {
    let rho_s = build_system_state(&SystemStateParams {
        rho11: 0.25,
        r: SystemStateParams::r_max(0.25),
        phi_c: PI / 4.0,
    })?;
    let mut ratios = Vec::new();
    for tau in [PI / 360.0, PI / 3600.0, PI / 36000.0] {
        let mut errs = [0.0; 2];
        for (k, t) in [tau, tau / 2.0].into_iter().enumerate() {
            let mut cfg = ModelConfig { tau: t, ..unit_cfg(0.5) };
            cfg.lambda = 0.5 * cfg.lambda_max();
            errs[k] = bch_error(&Model::new(&cfg)?, &rho_s);
        }
        ratios.push(errs[0] / errs[1]);
    }
    let (lo, hi) = BCH_RATIO_RANGE;
    let ok = ratios.iter().all(|r| (lo..=hi).contains(r));
    let shown: Vec<String> = ratios.iter().map(|r| format!("{r:.3}")).collect();
    Ok((ok, format!("ratios at g*tau = pi/360, pi/3600, pi/36000: [{}]", shown.join(", "))))
}

/// Max trace distance between collision and master-equation trajectories.
pub fn master_equation_gap(tau: f64, total_time: f64, lambda_tilde: f64) -> Result<f64> {
    let cfg = ModelConfig {
        tau,
        beta: 1.0,
        lambda_tilde,
        mode: Mode::WeaklyCoherent,
        ..unit_cfg(0.0)
    };
    let rho0 = build_system_state(&SystemStateParams {
        rho11: 0.25,
        r: SystemStateParams::r_max(0.25),
        phi_c: PI / 4.0,
    })?;
    let n = (total_time / tau).round() as usize;
    let traj = Model::new(&cfg)?.evolve_with(&rho0, n, false, Propagator::Exact)?;
    let dt = default_dt(&cfg);
    let me = integrate_master_equation(&rho0, &cfg, n as f64 * tau, dt)?;
    let per_collision = (me.states.len() - 1) / n;
    if per_collision * n != me.states.len() - 1 {
        return Err(Error::InvalidConfig {
            field: "dt",
            reason: "integration grid does not align with collision times".into(),
        });
    }
    let mut worst: f64 = 0.0;
    for (k, rho) in traj.states.iter().enumerate() {
        worst = worst.max(trace_distance(rho, &me.states[k * per_collision])?);
    }
    Ok(worst)
}

fn master_equation_consistency() -> Result<(bool, String)> {
    let gaps = [0.04, 0.02, 0.01]
        .into_iter()
        .map(|tau| master_equation_gap(tau, 2.0, 0.3))
        .collect::<Result<Vec<_>>>()?;
    let r1 = gaps[0] / gaps[1];
    let r2 = gaps[1] / gaps[2];
    Ok((
        r1 >= ME_MIN_RATIO && r2 >= ME_MIN_RATIO,
        format!(
            "max trace distance {:.3e}, {:.3e}, {:.3e} at tau = 0.04, 0.02, 0.01; ratios {r1:.3}, {r2:.3}",
            gaps[0], gaps[1], gaps[2]
        ),
    ))
}

fn operator_approach_check() -> Result<(bool, String)> {
    let mut rng = rng();
    let (mut o1, mut probs, mut vals, mut mean) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut used = 0;
    while used < 200 {
        let mode = if used % 2 == 0 { Mode::Exact } else { Mode::WeaklyCoherent };
        let p = random_point(&mut rng, mode, Some(0.0));
        let cfg = &p.cfg;
        let amp = 0.5 * cfg.hbar * cfg.omega_a * cfg.lambda_eff() * (2.0 * cfg.pulse_area()).sin();
        if amp.abs() < 1e-6 {
            continue;
        }
        used += 1;
        let oa = operator_approach(&p.rho_s, cfg)?;
        o1 = o1.max(oa.o1_norm);
        if oa.values.len() != 2 {
            return Ok((false, format!("expected two levels, got {}", oa.values.len())));
        }
        let im = p.rho_s[(0, 1)].im;
        for (c, pr) in oa.values.iter().zip(&oa.probs) {
            // w_+ = -amp carries p_+ = 1/2 + Im rho12.
            let (target, expected_p) = if (c + amp).abs() < (c - amp).abs() {
                (-amp, 0.5 + im)
            } else {
                (amp, 0.5 - im)
            };
            vals = vals.max((c - target).abs());
            probs = probs.max((pr - expected_p).abs());
        }
        let kdq_mean = moments(&Model::new(cfg)?.kdq(Quantity::W, &p.rho_s)?).mean;
        mean = mean.max((C64::new(oa.mean(), 0.0) - kdq_mean).norm());
    }
    let ok = o1 < OA_TOL && probs <= OA_TOL && vals <= OA_TOL && mean <= OA_MEAN_TOL;
    Ok((
        ok,
        format!("200 points: |O1| {o1:.1e}, p err {probs:.1e}, w err {vals:.1e}, mean err {mean:.1e}"),
    ))
}

fn variance_at(cfg: &ModelConfig, lambda: f64, rho_s: &ComplexMatrix, q: Quantity) -> Result<C64> {
    let c = ModelConfig { lambda, ..cfg.clone() };
    Ok(moments(&Model::new(&c)?.kdq(q, rho_s)?).variance)
}

/// `fig4` preset point: `tau = pi/6`, `beta = 1`, `rho11 = 1/4`, maximal `r`, `phi_c = pi/4`.
fn fig4_point(delta: f64) -> Result<(ModelConfig, ComplexMatrix)> {
    let pt = Preset::Fig4.spec().base;
    let mut ps = pt.clone();
    ps.set(crate::cli::config::Param::Delta, delta);
    ps.set(crate::cli::config::Param::LambdaFrac, 0.0);
    let r = ps.resolve()?;
    Ok((r.cfg, r.rho_s))
}

fn variance_structure() -> Result<(bool, String)> {
    let mut rng = rng();
    let mut quad: f64 = 0.0;
    for _ in 0..200 {
        let p = random_point(&mut rng, Mode::Exact, None);
        let m = p.cfg.lambda_max();
        let (a, b) = (0.6 * m, rng.gen_range(-m..m));
        for q in [Quantity::Us, Quantity::Usa] {
            let fm = variance_at(&p.cfg, -a, &p.rho_s, q)?;
            let f0 = variance_at(&p.cfg, 0.0, &p.rho_s, q)?;
            let fp = variance_at(&p.cfg, a, &p.rho_s, q)?;
            // Lagrange interpolation through -a, 0, a.
            let c2 = (fp + fm - f0 * 2.0) / (2.0 * a * a);
            let c1 = (fp - fm) / (2.0 * a);
            let predicted = f0 + c1 * b + c2 * b * b;
            let actual = variance_at(&p.cfg, b, &p.rho_s, q)?;
            quad = quad.max((predicted - actual).norm());
        }
    }

    // Local maxima of Re Var(u_S) at lambda = 0 along the fig4 detuning grid.
    let grid: Vec<f64> = (1..=512).map(|k| 20.0 * k as f64 / 512.0).collect();
    let curve = grid
        .iter()
        .map(|&d| {
            let (cfg, rho) = fig4_point(d)?;
            Ok(variance_at(&cfg, 0.0, &rho, Quantity::Us)?.re)
        })
        .collect::<Result<Vec<f64>>>()?;
    let maxima: Vec<usize> = (1..curve.len() - 1)
        .filter(|&i| curve[i] > curve[i - 1] && curve[i] > curve[i + 1])
        .collect();
    let mut below = true;
    for &i in &maxima {
        let (cfg, rho) = fig4_point(grid[i])?;
        let half = 0.5 * cfg.lambda_max();
        let v0 = variance_at(&cfg, 0.0, &rho, Quantity::Us)?.re;
        for l in [-half, half] {
            below &= variance_at(&cfg, l, &rho, Quantity::Us)?.re < v0;
        }
    }
    let shown: Vec<String> = maxima.iter().map(|&i| format!("{:.3}", grid[i])).collect();
    Ok((
        quad <= QUADRATIC_TOL && below && !maxima.is_empty(),
        format!(
            "quadratic prediction error {quad:.1e}; Var(+-lambda_max/2) < Var(0) at delta = [{}]: {below}",
            shown.join(", ")
        ),
    ))
}

/// Worst pointwise and amplitude-relative errors of the large-detuning form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitErrors {
    pub pointwise: f64,
    pub amplitude: f64,
    pub points: usize,
}

pub fn limit_errors(deltas: &[f64], taus: usize, lambda_fracs: &[f64]) -> LimitErrors {
    let state = SystemStateParams {
        rho11: 0.25,
        r: SystemStateParams::r_max(0.25),
        phi_c: PI / 4.0,
    };
    let mut out = LimitErrors {
        pointwise: 0.0,
        amplitude: 0.0,
        points: 0,
    };
    for &delta in deltas {
        for &frac in lambda_fracs {
            let mut cfg = unit_cfg(delta);
            cfg.lambda = frac * cfg.lambda_max();
            let floor = LIMIT_FLOOR * cfg.hbar * cfg.g * cfg.lambda.abs() * state.r;
            let scale = 4.0 * cfg.hbar * cfg.g * cfg.lambda.abs() * state.r;
            for k in 1..=taus {
                let tau = PI / 6.0 * k as f64 / taus as f64;
                let p = AnalyticParams::from_state_params(&ModelConfig { tau, ..cfg.clone() }, &state);
                let full = delta_e_sa(&p);
                let lim = delta_e_sa_limit(&p);
                out.amplitude = out.amplitude.max((full - lim).abs() / scale);
                if full.abs() > floor {
                    out.points += 1;
                    out.pointwise = out.pointwise.max((full - lim).abs() / full.abs());
                }
            }
        }
    }
    out
}

fn out_of_resonance_limit() -> Result<(bool, String)> {
    let e = limit_errors(&[200.0, -200.0, 2000.0, -2000.0], 2048, &[-1.0, -0.5, 0.5, 1.0]);
    Ok((
        e.pointwise <= LIMIT_REL_TOL,
        format!(
            "{} points above floor, max relative error {:.1}% (max error relative to 4 hbar g lambda r: {:.2}%)",
            e.points,
            100.0 * e.pointwise,
            100.0 * e.amplitude
        ),
    ))
}

fn determinism() -> Result<(bool, String)> {
    let mut differing = Vec::new();
    for p in Preset::ALL {
        let spec = p.spec();
        let a = run(&spec)?.to_csv();
        let b = run(&spec)?.to_csv();
        if a != b {
            differing.push(p.name());
        }
    }
    Ok((
        differing.is_empty(),
        if differing.is_empty() {
            format!("{} presets byte-identical across two runs", Preset::ALL.len())
        } else {
            format!("differing presets: {}", differing.join(", "))
        },
    ))
}
