//! Single collisions and repeated-collision trajectories.

use crate::error::{Error, Result};
use crate::kdq::{moments, nonpositivity, MomentSet, NonPositivityReport, Quantity};
use crate::linalg::{
    eigenvalues_hermitian, partial_trace, tensor, trace_distance, ComplexMatrix, Subsystem,
};
use crate::model::{check_density_matrix, Model, ModelConfig, STATE_TOL};

/// How one collision maps the joint state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Propagator {
    /// Full unitary `U rho U^dagger`.
    Exact,
    /// Second-order BCH expansion of the same map.
    Bch,
}

/// Thermodynamic bookkeeping of one collision, from the pre-collision state.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermoRecord {
    pub moments: Vec<(Quantity, MomentSet)>,
    pub nonpositivity: Vec<(Quantity, NonPositivityReport)>,
    /// Mean coherent work and incoherent heat (ancilla side, system frame).
    pub w_avg: Option<f64>,
    pub q_avg: Option<f64>,
    /// System-side coherent work and heat gained by the system.
    pub w_s: Option<f64>,
    pub q_s: Option<f64>,
    /// Coherent work and heat gained by the ancilla.
    pub w_a: Option<f64>,
    pub q_a: Option<f64>,
}

impl ThermoRecord {
    pub fn moments_of(&self, q: Quantity) -> Option<&MomentSet> {
        self.moments.iter().find(|(k, _)| *k == q).map(|(_, m)| m)
    }

    pub fn nonpositivity_of(&self, q: Quantity) -> Option<&NonPositivityReport> {
        self.nonpositivity.iter().find(|(k, _)| *k == q).map(|(_, m)| m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub delta_e_s: f64,
    pub delta_e_a: f64,
    pub delta_e_sa: f64,
    /// Most negative eigenvalue of the output states, floored at zero.
    /// Only the BCH propagator can make this nonzero.
    pub psd_violation: f64,
    pub thermo: Option<ThermoRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollisionTrajectory {
    pub states: Vec<ComplexMatrix>,
    pub per_step: Vec<StepRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStateResult {
    pub state: ComplexMatrix,
    pub iterations: usize,
    /// Trace distance of the last step.
    pub residual: f64,
    /// Trace distance between the state and its own image.
    pub fixed_point_residual: f64,
    pub converged: bool,
}

pub const DEFAULT_STEADY_TOL: f64 = 1e-12;
pub const DEFAULT_STEADY_MAX_ITER: usize = 1_000_000;

fn check_input(rho_s: &ComplexMatrix) -> Result<()> {
    if rho_s.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: rho_s.dim(),
        });
    }
    check_density_matrix(rho_s, STATE_TOL)
}

fn psd_violation(m: &ComplexMatrix) -> Result<f64> {
    let ev = eigenvalues_hermitian(&m.hermitian_part())?;
    Ok((-ev.last().copied().unwrap_or(0.0)).max(0.0))
}

impl Model {
    /// Joint state after one exact collision.
    pub fn collide_joint(&self, rho_s: &ComplexMatrix) -> ComplexMatrix {
        self.conjugate(&tensor(rho_s, &self.anc.rho_a))
    }

    /// Joint state after one collision in the second-order BCH expansion.
    pub fn bch_joint(&self, rho_s: &ComplexMatrix) -> ComplexMatrix {
        let x = tensor(rho_s, &self.anc.rho_a);
        let h = &self.ham.h_sa;
        let t = self.cfg.tau / self.cfg.hbar;
        let c1 = h.commutator(&x);
        let c2 = h.commutator(&c1);
        let first = c1.scale(num_complex::Complex64::new(0.0, -t));
        let second = c2.scale_re(-0.5 * t * t);
        &(&x + &first) + &second
    }

    pub fn collide(&self, rho_s: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
        check_input(rho_s)?;
        let joint = self.collide_joint(rho_s);
        let next = partial_trace(&joint, Subsystem::S, (2, 2))?;
        Ok((next, joint))
    }

    /// `(delta E_S, delta E_A, delta E_SA)` between `rho_s ⊗ rho_a` and `joint`.
    pub fn energy_changes(&self, rho_s: &ComplexMatrix, joint: &ComplexMatrix) -> (f64, f64, f64) {
        let diff = joint - &tensor(rho_s, &self.anc.rho_a);
        let es = self.ham.h_s_ext().trace_product(&diff).re;
        let ea = self.ham.h_a_ext().trace_product(&diff).re;
        let esa = self.ham.h_0().trace_product(&diff).re;
        (es, ea, esa)
    }

    /// Moments and witnesses of every quantity defined for this model.
    pub fn thermo(&self, rho_s: &ComplexMatrix) -> Result<ThermoRecord> {
        let split = self.cfg.mode == crate::model::Mode::WeaklyCoherent || self.cfg.is_resonant();
        let mut rec = ThermoRecord {
            moments: Vec::new(),
            nonpositivity: Vec::new(),
            w_avg: None,
            q_avg: None,
            w_s: None,
            q_s: None,
            w_a: None,
            q_a: None,
        };
        for q in Quantity::ALL {
            if q.needs_split() && !split {
                continue;
            }
            let d = self.kdq(q, rho_s)?;
            let m = moments(&d);
            if !q.is_work_type() {
                rec.nonpositivity.push((q, nonpositivity(&d)?));
            }
            match q {
                Quantity::W => {
                    rec.w_avg = Some(m.mean.re);
                    rec.w_a = Some(-m.mean.re);
                }
                Quantity::Q => {
                    rec.q_avg = Some(m.mean.re);
                    rec.q_a = Some(-m.mean.re);
                }
                Quantity::Ws => rec.w_s = Some(m.mean.re),
                Quantity::Qs => rec.q_s = Some(m.mean.re),
                _ => {}
            }
            rec.moments.push((q, m));
        }
        Ok(rec)
    }

    fn step(
        &self,
        rho_s: &ComplexMatrix,
        thermo: bool,
        propagator: Propagator,
    ) -> Result<(ComplexMatrix, StepRecord)> {
        let thermo = if thermo { Some(self.thermo(rho_s)?) } else { None };
        let (next, joint, violation) = match propagator {
            Propagator::Exact => {
                let (next, joint) = self.collide(rho_s)?;
                check_density_matrix(&next, STATE_TOL)?;
                (next, joint, 0.0)
            }
            Propagator::Bch => {
                let joint = self.bch_joint(rho_s);
                let next = partial_trace(&joint, Subsystem::S, (2, 2))?;
                let v = psd_violation(&joint)?.max(psd_violation(&next)?);
                (next, joint, v)
            }
        };
        let (delta_e_s, delta_e_a, delta_e_sa) = self.energy_changes(rho_s, &joint);
        Ok((
            next,
            StepRecord {
                delta_e_s,
                delta_e_a,
                delta_e_sa,
                psd_violation: violation,
                thermo,
            },
        ))
    }

    pub fn evolve_with(
        &self,
        rho_s0: &ComplexMatrix,
        n: usize,
        thermo: bool,
        propagator: Propagator,
    ) -> Result<CollisionTrajectory> {
        if n == 0 {
            return Err(Error::InvalidConfig {
                field: "collisions",
                reason: "must be at least 1".into(),
            });
        }
        check_input(rho_s0)?;
        let mut states = Vec::with_capacity(n + 1);
        let mut per_step = Vec::with_capacity(n);
        states.push(rho_s0.clone());
        for _ in 0..n {
            let (next, rec) = self.step(states.last().expect("non-empty"), thermo, propagator)?;
            states.push(next);
            per_step.push(rec);
        }
        Ok(CollisionTrajectory { states, per_step })
    }

    pub fn steady_state(&self, tol: f64, max_iter: usize, rho_s0: &ComplexMatrix) -> Result<SteadyStateResult> {
        if tol.is_nan() || tol <= 0.0 {
            return Err(Error::InvalidConfig {
                field: "tol",
                reason: format!("must be > 0, got {tol}"),
            });
        }
        check_input(rho_s0)?;
        let mut rho = rho_s0.clone();
        let mut residual = f64::INFINITY;
        let mut iterations = 0;
        while iterations < max_iter {
            let (next, _) = self.collide(&rho)?;
            residual = trace_distance(&next, &rho)?;
            rho = next;
            iterations += 1;
            if residual <= tol {
                break;
            }
        }
        let (image, _) = self.collide(&rho)?;
        let fixed_point_residual = trace_distance(&image, &rho)?;
        let converged = residual <= tol && fixed_point_residual <= 10.0 * tol;
        if !converged {
            log::warn!(
                "steady state not reached after {iterations} collisions (residual {residual:.3e})"
            );
        }
        Ok(SteadyStateResult {
            state: rho,
            iterations,
            residual,
            fixed_point_residual,
            converged,
        })
    }
}

pub fn collide_once(rho_s: &ComplexMatrix, cfg: &ModelConfig) -> Result<(ComplexMatrix, ComplexMatrix)> {
    Model::new(cfg)?.collide(rho_s)
}

/// BCH joint state for either mode; in the weak mode the Hamiltonian
/// carries the `1/sqrt(tau)` interaction scaling.
pub fn bch_collide_once(rho_s: &ComplexMatrix, cfg: &ModelConfig) -> Result<ComplexMatrix> {
    check_input(rho_s)?;
    Ok(Model::new(cfg)?.bch_joint(rho_s))
}

pub fn evolve(rho_s0: &ComplexMatrix, cfg: &ModelConfig, n: usize, thermo: bool) -> Result<CollisionTrajectory> {
    Model::new(cfg)?.evolve_with(rho_s0, n, thermo, Propagator::Exact)
}

pub fn find_steady_state(
    cfg: &ModelConfig,
    tol: f64,
    max_iter: usize,
    rho_s0: &ComplexMatrix,
) -> Result<SteadyStateResult> {
    Model::new(cfg)?.steady_state(tol, max_iter, rho_s0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_system_state, Mode, SystemStateParams};

    fn cfg(delta: f64, lambda_frac: f64, tau: f64) -> ModelConfig {
        let mut c = ModelConfig {
            omega_a: 1.0,
            omega_s: 1.0 + delta,
            tau,
            beta: 1.0,
            ..ModelConfig::default()
        };
        c.lambda = lambda_frac * c.lambda_max();
        c
    }

    fn state(rho11: f64, frac: f64, phi_c: f64) -> ComplexMatrix {
        let r = frac * SystemStateParams::r_max(rho11);
        build_system_state(&SystemStateParams { rho11, r, phi_c }).unwrap()
    }

    #[test]
    fn zero_time_collision_is_identity() {
        let rho = state(0.3, 0.9, 1.0);
        // tau must be positive, so use a tiny one and compare loosely.
        let (next, _) = collide_once(&rho, &cfg(2.0, 0.5, 1e-14)).unwrap();
        assert!((&next - &rho).max_abs() < 1e-12);
    }

    #[test]
    fn thermal_state_is_fixed_at_resonance() {
        let c = cfg(0.0, 0.0, 0.8);
        let th = Model::new(&c).unwrap().anc.rho_a_th.clone();
        let (next, _) = collide_once(&th, &c).unwrap();
        assert!((&next - &th).max_abs() < 1e-14);
    }

    #[test]
    fn full_swap_populations() {
        // Pulse area pi/2 swaps the qubits: |0> in, thermal populations out.
        let c = cfg(0.0, 0.0, std::f64::consts::FRAC_PI_2);
        let (next, _) = collide_once(&state(1.0, 0.0, 0.0), &c).unwrap();
        let (p0, p1) = c.thermal_populations();
        assert!((next[(0, 0)].re - p0).abs() < 1e-14);
        assert!((next[(1, 1)].re - p1).abs() < 1e-14);
    }

    #[test]
    fn first_law_every_step() {
        for delta in [0.0, 1.3, -2.0] {
            let tr = evolve(&state(0.25, 1.0, 0.7), &cfg(delta, 0.8, 0.5), 20, false).unwrap();
            assert_eq!(tr.states.len(), 21);
            for s in &tr.per_step {
                assert!((s.delta_e_s + s.delta_e_a - s.delta_e_sa).abs() < 1e-10);
                if delta == 0.0 {
                    assert!(s.delta_e_sa.abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn single_step_matches_collide_once() {
        let c = cfg(0.7, 0.4, 0.3);
        let rho = state(0.6, 0.5, 2.0);
        let tr = evolve(&rho, &c, 1, false).unwrap();
        let (next, _) = collide_once(&rho, &c).unwrap();
        assert_eq!(tr.states[1], next);
    }

    #[test]
    fn markovian_suffix() {
        let c = cfg(0.9, 0.6, 0.4);
        let tr = evolve(&state(0.2, 0.8, 0.1), &c, 12, false).unwrap();
        let tail = evolve(&tr.states[5], &c, 7, false).unwrap();
        for (a, b) in tr.states[5..].iter().zip(&tail.states) {
            assert!((a - b).max_abs() < 1e-15);
        }
    }

    #[test]
    fn thermalizes_monotonically_without_coherence() {
        let c = cfg(0.0, 0.0, 0.5);
        let th = Model::new(&c).unwrap().anc.rho_a_th.clone();
        let tr = evolve(&state(0.9, 0.5, 0.3), &c, 200, false).unwrap();
        let d: Vec<f64> = tr.states.iter().map(|s| trace_distance(s, &th).unwrap()).collect();
        for w in d.windows(2) {
            assert!(w[1] <= w[0] + 1e-15);
        }
        assert!(d.last().unwrap() < &1e-8);
    }

    #[test]
    fn steady_state_thermal_and_independent_of_start() {
        let c = cfg(0.0, 0.0, 0.5);
        let th = Model::new(&c).unwrap().anc.rho_a_th.clone();
        let ss = find_steady_state(&c, 1e-12, DEFAULT_STEADY_MAX_ITER, &state(1.0, 0.0, 0.0)).unwrap();
        assert!(ss.converged);
        assert!(trace_distance(&ss.state, &th).unwrap() < 1e-10);

        let c = cfg(0.0, 0.7, 0.5);
        let a = find_steady_state(&c, 1e-12, DEFAULT_STEADY_MAX_ITER, &state(1.0, 0.0, 0.0)).unwrap();
        let b = find_steady_state(&c, 1e-12, DEFAULT_STEADY_MAX_ITER, &state(0.1, 1.0, 2.0)).unwrap();
        assert!(a.converged && b.converged);
        assert!(a.fixed_point_residual <= 1e-11);
        assert!(trace_distance(&a.state, &b.state).unwrap() < 1e-10);
        assert!(a.state[(0, 1)].norm() > 1e-3);
    }

    #[test]
    fn steady_state_flags_iteration_limit() {
        let c = cfg(0.0, 0.5, 0.05);
        let ss = find_steady_state(&c, 1e-12, 3, &state(1.0, 0.0, 0.0)).unwrap();
        assert!(!ss.converged);
        assert_eq!(ss.iterations, 3);
        assert!(find_steady_state(&c, 0.0, 3, &state(1.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn bch_trace_and_small_tau_limit() {
        let rho = state(0.3, 0.7, 0.5);
        let c = cfg(0.4, 0.5, 1e-9);
        let joint = bch_collide_once(&rho, &c).unwrap();
        assert!((joint.trace() - 1.0).norm() < 1e-15);
        let anc = Model::new(&c).unwrap().anc;
        assert!((&joint - &tensor(&rho, &anc.rho_a)).max_abs() < 1e-8);
    }

    fn bch_error(c: &ModelConfig, rho: &ComplexMatrix, reduced: bool) -> f64 {
        let m = Model::new(c).unwrap();
        let e = m.collide_joint(rho);
        let b = m.bch_joint(rho);
        if reduced {
            let pe = partial_trace(&e, Subsystem::S, (2, 2)).unwrap();
            let pb = partial_trace(&b, Subsystem::S, (2, 2)).unwrap();
            (&pe - &pb).frobenius_norm()
        } else {
            (&e - &b).frobenius_norm()
        }
    }

    #[test]
    fn bch_local_error_is_third_order_at_fixed_hamiltonian() {
        let rho = state(0.3, 0.7, 0.5);
        for tau in [1e-2, 1e-3] {
            let r = bch_error(&cfg(0.5, 0.5, tau), &rho, false) / bch_error(&cfg(0.5, 0.5, tau / 2.0), &rho, false);
            assert!((r - 8.0).abs() < 0.1, "{r}");
        }
    }

    #[test]
    fn bch_order_under_weak_scaling() {
        // With H_int / sqrt(tau) the joint error scales as tau^(3/2) and the
        // reduced error as tau^2.
        let rho = state(0.3, 0.7, 0.5);
        let weak = |tau: f64| ModelConfig {
            mode: Mode::WeaklyCoherent,
            lambda_tilde: 0.3,
            ..cfg(0.0, 0.0, tau)
        };
        for tau in [1e-3, 1e-4] {
            let joint = bch_error(&weak(tau), &rho, false) / bch_error(&weak(tau / 2.0), &rho, false);
            let red = bch_error(&weak(tau), &rho, true) / bch_error(&weak(tau / 2.0), &rho, true);
            assert!((joint - 2f64.sqrt() * 2.0).abs() < 0.05, "{joint}");
            assert!((red - 4.0).abs() < 0.05, "{red}");
        }
    }

    #[test]
    fn bch_trajectory_records_violation() {
        // A long collision drives the truncated map outside the state space.
        let c = cfg(0.0, 1.0, 1.5);
        let m = Model::new(&c).unwrap();
        let tr = m.evolve_with(&state(1.0, 0.0, 0.0), 3, false, Propagator::Bch).unwrap();
        assert!(tr.per_step.iter().any(|s| s.psd_violation > 0.0));
        let exact = m.evolve_with(&state(1.0, 0.0, 0.0), 3, false, Propagator::Exact).unwrap();
        assert!(exact.per_step.iter().all(|s| s.psd_violation == 0.0));
    }

    #[test]
    fn thermo_record_at_resonance() {
        let c = cfg(0.0, 0.5, 0.3);
        let tr = evolve(&state(0.25, 1.0, 0.8), &c, 5, true).unwrap();
        for s in &tr.per_step {
            let t = s.thermo.as_ref().unwrap();
            assert!((t.w_s.unwrap() + t.w_a.unwrap()).abs() < 1e-12);
            assert!((t.q_s.unwrap() + t.q_a.unwrap()).abs() < 1e-12);
            assert!((t.w_avg.unwrap() + t.q_avg.unwrap() - s.delta_e_s).abs() < 1e-12);
            assert!(t.nonpositivity_of(Quantity::W).is_none());
            assert!(t.moments_of(Quantity::W).is_some());
        }
        let off = evolve(&state(0.25, 1.0, 0.8), &cfg(1.0, 0.5, 0.3), 1, true).unwrap();
        let t = off.per_step[0].thermo.as_ref().unwrap();
        assert!(t.w_avg.is_none() && t.moments_of(Quantity::Us).is_some());
    }

    #[test]
    fn rejects_invalid_state() {
        let bad = ComplexMatrix::from_real_diag(&[1.2, -0.2]);
        assert!(matches!(
            collide_once(&bad, &cfg(0.0, 0.0, 0.3)),
            Err(Error::InvalidState(_))
        ));
        assert!(evolve(&state(0.5, 0.0, 0.0), &cfg(0.0, 0.0, 0.3), 0, false).is_err());
    }
}
