//! Closed-form results for the qubit-qubit model.
//!
//! Resonant KDQ entries are indexed by `(fin, in)` in the order
//! `00, 01, 10, 11`, so the stochastic values are `u^00 = 0`, `u^01 = +hbar omega`,
//! `u^10 = -hbar omega`, `u^11 = 0`. Use [`kdq_index`] to find the matching
//! entry of a numeric distribution (which is ordered `in` major).

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::model::{ModelConfig, SystemStateParams};

/// Model and state parameters entering the closed forms. In the weak mode the
/// coupling is `g / sqrt(tau)` and the coherence `lambda_tilde sqrt(tau)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticParams {
    pub omega_a: f64,
    pub delta: f64,
    pub g: f64,
    pub tau: f64,
    pub beta: f64,
    pub lambda: f64,
    pub hbar: f64,
    pub rho11: f64,
    pub rho12: C64,
}

impl AnalyticParams {
    pub fn new(cfg: &ModelConfig, rho_s: &ComplexMatrix) -> Self {
        Self {
            omega_a: cfg.omega_a,
            delta: cfg.delta(),
            g: cfg.g_eff(),
            tau: cfg.tau,
            beta: cfg.beta,
            lambda: cfg.lambda_eff(),
            hbar: cfg.hbar,
            rho11: rho_s[(0, 0)].re,
            rho12: rho_s[(0, 1)],
        }
    }

    pub fn from_state_params(cfg: &ModelConfig, p: &SystemStateParams) -> Self {
        Self {
            rho11: p.rho11,
            rho12: p.rho12(),
            ..Self::new(cfg, &ComplexMatrix::identity(2))
        }
    }

    pub fn pulse_area(&self) -> f64 {
        self.g * self.tau
    }

    fn x(&self) -> f64 {
        0.5 * self.beta * self.hbar * self.omega_a
    }

    /// Thermal populations `e^{-x}/Z` and `e^{x}/Z`, `x = beta hbar omega_A / 2`.
    fn populations(&self) -> (f64, f64) {
        let t = self.x().tanh();
        (0.5 * (1.0 - t), 0.5 * (1.0 + t))
    }

    fn require_resonance(&self) -> Result<()> {
        if self.delta.abs() > 1e-12 * self.omega_a.abs().max(1e-300) {
            return Err(Error::NotResonant { delta: self.delta });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuxiliaryFunctions {
    pub c_beta: f64,
    pub tau_tilde: f64,
    pub a: f64,
    pub b: f64,
    /// `atan2(b, a)`; zero when both vanish.
    pub theta: f64,
    pub j1: f64,
    pub j2: f64,
    pub z_a: f64,
}

impl AuxiliaryFunctions {
    pub fn amplitude(&self) -> f64 {
        self.a.hypot(self.b)
    }
}

pub fn auxiliary(p: &AnalyticParams) -> AuxiliaryFunctions {
    let c_beta = 1.0 + (2.0 * p.x()).exp();
    let rabi = (4.0 * p.g * p.g + p.delta * p.delta).sqrt();
    let a = p.lambda * c_beta * p.rho12.im * rabi;
    let b = p.g * (c_beta * p.rho11 - 1.0) - p.delta * p.lambda * c_beta * p.rho12.re;
    let theta = if a == 0.0 && b == 0.0 { 0.0 } else { b.atan2(a) };
    AuxiliaryFunctions {
        c_beta,
        tau_tilde: p.tau * rabi,
        a,
        b,
        theta,
        j1: p.lambda * p.rho12.re,
        j2: p.lambda * p.rho12.im,
        z_a: (-p.x()).exp() + p.x().exp(),
    }
}

/// Position of App.-C-ordered entry `(fin, in)` in a numeric distribution.
pub fn kdq_index(fin: usize, init: usize) -> usize {
    init * 2 + fin
}

fn prefactor_s(p: &AnalyticParams, aux: &AuxiliaryFunctions) -> f64 {
    2.0 * p.hbar * p.g * (p.omega_a + p.delta)
        / (aux.c_beta * (4.0 * p.g * p.g + p.delta * p.delta))
}

fn constant_s(p: &AnalyticParams, aux: &AuxiliaryFunctions) -> f64 {
    p.g * (1.0 - aux.c_beta * p.rho11) + aux.c_beta * p.lambda * p.delta * p.rho12.re
}

/// Mean system energy change of one collision at any detuning.
pub fn delta_e_s(p: &AnalyticParams) -> f64 {
    let aux = auxiliary(p);
    prefactor_s(p, &aux)
        * (constant_s(p, &aux) - aux.amplitude() * (aux.tau_tilde - aux.theta).sin())
}

/// `(lower, upper)` envelopes of [`delta_e_s`], the oscillation replaced by its extremes.
pub fn delta_e_s_envelopes(p: &AnalyticParams) -> (f64, f64) {
    let aux = auxiliary(p);
    let pre = prefactor_s(p, &aux);
    let c = constant_s(p, &aux);
    let r = aux.amplitude();
    let e1 = pre * (c - r);
    let e2 = pre * (c + r);
    (e1.min(e2), e1.max(e2))
}

/// Mean non-energy-preserving work of one collision.
pub fn delta_e_sa(p: &AnalyticParams) -> f64 {
    let aux = auxiliary(p);
    let half = 0.5 * aux.tau_tilde;
    -4.0 * p.hbar * p.g * p.delta / (aux.c_beta * (4.0 * p.g * p.g + p.delta * p.delta))
        * aux.amplitude()
        * half.sin()
        * (half - aux.theta).cos()
}

/// Large-detuning form `4 hbar g lambda r sin(Delta tau/2) sin(Delta tau/2 - phi_c)`.
pub fn delta_e_sa_limit(p: &AnalyticParams) -> f64 {
    let r = p.rho12.norm();
    let phi_c = p.rho12.arg();
    let half = 0.5 * p.delta * p.tau;
    4.0 * p.hbar * p.g * p.lambda * r * half.sin() * (half - phi_c).sin()
}

struct Resonant {
    p0: f64,
    p1: f64,
    sin2: f64,
    cos2: f64,
    s2: f64,
    j1: f64,
    j2: f64,
}

fn resonant_terms(p: &AnalyticParams) -> Result<Resonant> {
    p.require_resonance()?;
    let (p0, p1) = p.populations();
    let phi = p.pulse_area();
    Ok(Resonant {
        p0,
        p1,
        sin2: phi.sin().powi(2),
        cos2: phi.cos().powi(2),
        s2: (2.0 * phi).sin(),
        j1: p.lambda * p.rho12.re,
        j2: p.lambda * p.rho12.im,
    })
}

/// System energy-change KDQ entries at resonance, `(fin, in)` ordered.
pub fn resonant_kdq_us(p: &AnalyticParams) -> Result<[C64; 4]> {
    let q = resonant_kdq_q(p)?;
    let w = resonant_kdq_w(p)?;
    Ok([q[0] + w[0], q[1] + w[1], q[2] + w[2], q[3] + w[3]])
}

/// System-side incoherent-heat KDQ entries at resonance, `(fin, in)` ordered.
pub fn resonant_kdq_q(p: &AnalyticParams) -> Result<[C64; 4]> {
    let t = resonant_terms(p)?;
    let r11 = p.rho11;
    let r22 = 1.0 - p.rho11;
    Ok([
        C64::new(r11 * (t.p1 * t.cos2 + t.p0), 0.0),
        C64::new(r22 * t.p0 * t.sin2, 0.0),
        C64::new(r11 * t.p1 * t.sin2, 0.0),
        C64::new(r22 * (t.p0 * t.cos2 + t.p1), 0.0),
    ])
}

/// System-side coherent-work KDQ entries at resonance, `(fin, in)` ordered.
pub fn resonant_kdq_w(p: &AnalyticParams) -> Result<[C64; 4]> {
    let t = resonant_terms(p)?;
    let re = 0.5 * t.j2 * t.s2;
    let im = 0.5 * t.j1 * t.s2;
    Ok([
        C64::new(-re, im),
        C64::new(-re, -im),
        C64::new(re, -im),
        C64::new(re, im),
    ])
}

/// Stochastic values matching the `(fin, in)` entry order.
pub fn resonant_values(p: &AnalyticParams) -> [f64; 4] {
    let e = p.hbar * p.omega_a;
    [0.0, e, -e, 0.0]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkHeatStats {
    pub w_mean: f64,
    pub w_variance: C64,
    pub q_mean: f64,
    pub q_variance: f64,
}

pub fn resonant_w_q_stats(p: &AnalyticParams) -> Result<WorkHeatStats> {
    let t = resonant_terms(p)?;
    let e = p.hbar * p.omega_a;
    let w_mean = -e * t.j2 * t.s2;
    let w_variance = C64::new(t.j2 * t.j2 * t.s2, t.j1) * (-e * e * t.s2);
    let q_mean = e * t.sin2 * (t.p0 - p.rho11);
    // (e^{-x} + 2 sinh(x) rho11) / Z in terms of populations.
    let q_variance = e * e * (t.p0 + (t.p1 - t.p0) * p.rho11) * t.sin2 - q_mean * q_mean;
    Ok(WorkHeatStats {
        w_mean,
        w_variance,
        q_mean,
        q_variance,
    })
}

/// `(N_Re, N_Im)` of the system energy-change distribution at resonance.
pub fn resonant_nonpositivity(p: &AnalyticParams) -> Result<(f64, f64)> {
    let t = resonant_terms(p)?;
    let phi = p.pulse_area();
    let (s, c) = phi.sin_cos();
    let mut n_re = -1.0;
    for (k, rho_k, up, down) in [(1.0, p.rho11, t.p1, t.p0), (-1.0, 1.0 - p.rho11, t.p0, t.p1)] {
        // up = e^{k x}/Z, down = e^{-k x}/Z
        n_re += s.abs() * (rho_k * up * s + k * t.j2 * c).abs();
        n_re += (0.5 * rho_k * (1.0 + down + up * (2.0 * phi).cos()) - 0.5 * k * t.j2 * t.s2).abs();
    }
    let n_im = 2.0 * (t.j1 * t.s2).abs();
    Ok((n_re, n_im))
}

/// `(delta E_S, Delta u_S^2)` at resonance.
pub fn resonant_energy_stats(p: &AnalyticParams) -> Result<(f64, C64)> {
    let t = resonant_terms(p)?;
    let e = p.hbar * p.omega_a;
    let mean = e * (t.sin2 * (t.p0 - p.rho11) - t.j2 * t.s2);
    let second = C64::new((t.p0 + (t.p1 - t.p0) * p.rho11) * t.sin2, -t.j1 * t.s2) * (e * e);
    Ok((mean, second - mean * mean))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn params(delta: f64, lambda_frac: f64, tau: f64) -> AnalyticParams {
        let beta: f64 = 1.0;
        let z = 2.0 * (0.5 * beta).cosh();
        let rho11 = 0.25;
        AnalyticParams {
            omega_a: 1.0,
            delta,
            g: 1.0,
            tau,
            beta,
            lambda: lambda_frac / z,
            hbar: 1.0,
            rho11,
            rho12: C64::from_polar((rho11 * (1.0 - rho11)).sqrt(), PI / 4.0),
        }
    }

    #[test]
    fn zero_time_and_resonance_limits() {
        for delta in [-5.0, 0.0, 3.0] {
            assert!(delta_e_s(&params(delta, 0.7, 0.0)).abs() < 1e-14);
            assert!(delta_e_sa(&params(delta, 0.7, 0.0)).abs() < 1e-14);
        }
        assert_eq!(delta_e_sa(&params(0.0, 0.7, 0.5)), 0.0);
        assert_eq!(delta_e_sa_limit(&params(200.0, 0.0, 0.5)), 0.0);
    }

    #[test]
    fn envelopes_bracket_mean() {
        for i in 0..200 {
            let delta = -20.0 + 40.0 * i as f64 / 199.0;
            for frac in [-1.0, 0.0, 1.0] {
                let p = params(delta, frac, PI / 6.0);
                let (lo, hi) = delta_e_s_envelopes(&p);
                let v = delta_e_s(&p);
                assert!(lo - 1e-14 <= v && v <= hi + 1e-14);
            }
        }
    }

    #[test]
    fn resonant_entries_at_zero_pulse() {
        let p = params(0.0, 1.0, 0.0);
        let us = resonant_kdq_us(&p).unwrap();
        let want = [0.25, 0.0, 0.0, 0.75];
        for (z, w) in us.iter().zip(want) {
            assert!((z.re - w).abs() < 1e-15 && z.im.abs() < 1e-15);
        }
    }

    #[test]
    fn resonant_sums_and_heat_positivity() {
        for k in 0..50 {
            let p = params(0.0, 1.0 - k as f64 / 25.0, 0.05 * k as f64);
            let us: C64 = resonant_kdq_us(&p).unwrap().iter().sum();
            let q = resonant_kdq_q(&p).unwrap();
            let w: C64 = resonant_kdq_w(&p).unwrap().iter().sum();
            assert!((us - 1.0).norm() < 1e-14);
            assert!((q.iter().sum::<C64>() - 1.0).norm() < 1e-14);
            assert!(w.norm() < 1e-15);
            assert!(q.iter().all(|z| z.re >= 0.0 && z.im == 0.0));
        }
        let w = resonant_kdq_w(&params(0.0, 0.0, 0.4)).unwrap();
        assert!(w.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn resonant_requires_zero_detuning() {
        let p = params(0.5, 1.0, 0.3);
        assert!(matches!(resonant_kdq_us(&p), Err(Error::NotResonant { .. })));
        assert!(resonant_w_q_stats(&p).is_err());
        assert!(resonant_nonpositivity(&p).is_err());
        assert!(resonant_energy_stats(&p).is_err());
    }

    #[test]
    fn first_law_of_closed_forms() {
        let p = params(0.0, 0.8, 0.4);
        let s = resonant_w_q_stats(&p).unwrap();
        let (mean, _) = resonant_energy_stats(&p).unwrap();
        assert!((s.w_mean + s.q_mean - mean).abs() < 1e-12);
        assert!((mean - delta_e_s(&p)).abs() < 1e-12);
        let vals = resonant_values(&p);
        let from_entries: C64 = resonant_kdq_us(&p).unwrap().iter().zip(vals).map(|(q, v)| q * v).sum();
        assert!((from_entries.re - mean).abs() < 1e-12);
    }

    #[test]
    fn work_symmetries() {
        let mut p = params(0.0, 1.0, 0.4);
        let s = resonant_w_q_stats(&p).unwrap();
        assert!((s.w_variance.re + s.w_mean * s.w_mean).abs() < 1e-15);
        p.rho12 = C64::new(p.rho12.norm(), 0.0);
        let s = resonant_w_q_stats(&p).unwrap();
        assert_eq!(s.w_mean, 0.0);
        assert_eq!(s.w_variance.re, 0.0);
    }

    #[test]
    fn heat_ignores_coherence() {
        let base = resonant_w_q_stats(&params(0.0, 0.0, 0.4)).unwrap();
        for frac in [-1.0, 0.5, 1.0] {
            let mut p = params(0.0, frac, 0.4);
            for phi in [0.0, 1.0, 3.0] {
                p.rho12 = C64::from_polar(p.rho12.norm(), phi);
                let s = resonant_w_q_stats(&p).unwrap();
                assert!((s.q_mean - base.q_mean).abs() < 1e-15);
                assert!((s.q_variance - base.q_variance).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn nonpositivity_closed_form_limits() {
        let (re, im) = resonant_nonpositivity(&params(0.0, 0.0, 0.4)).unwrap();
        assert!(re.abs() < 1e-15 && im.abs() < 1e-15);
        let mut p = params(0.0, 1.0, 0.4);
        p.rho12 = C64::new(0.3, 0.0);
        let (re, im) = resonant_nonpositivity(&p).unwrap();
        let (re0, _) = resonant_nonpositivity(&params(0.0, 0.0, 0.4)).unwrap();
        assert!(im > 0.0);
        assert!((re - re0).abs() < 1e-15);
    }

    #[test]
    fn theta_degenerate_point() {
        let mut p = params(0.0, 0.0, 0.4);
        p.g = 0.0;
        let aux = auxiliary(&p);
        assert_eq!((aux.a, aux.b, aux.theta), (0.0, 0.0, 0.0));
    }
}
