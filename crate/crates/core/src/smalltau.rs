//! Weakly coherent regime: coherent drive, master equation, coherent work and
//! incoherent heat, and the operator approach to work statistics.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{
    eig_hermitian, eigenvalues_hermitian, partial_trace, tensor, ComplexMatrix, Subsystem,
    DEFAULT_DEGENERACY_TOL,
};
use crate::model::{bare_interaction, build_ancilla, Mode, Model, ModelConfig};

fn require_weak(cfg: &ModelConfig) -> Result<()> {
    if cfg.mode != Mode::WeaklyCoherent {
        return Err(Error::ModeMismatch {
            required: "weakly coherent mode",
        });
    }
    Ok(())
}

fn local_hamiltonians(cfg: &ModelConfig) -> (ComplexMatrix, ComplexMatrix) {
    let z = crate::linalg::pauli::z();
    (
        z.scale_re(0.5 * cfg.hbar * cfg.omega_s),
        z.scale_re(0.5 * cfg.hbar * cfg.omega_a),
    )
}

/// `G = Tr_A[H_int (I ⊗ chi_A)]`, with the unscaled interaction.
pub fn coherent_correction_g(cfg: &ModelConfig) -> Result<ComplexMatrix> {
    cfg.validate()?;
    let x = tensor(&ComplexMatrix::identity(2), &cfg.chi_a);
    partial_trace(&(&bare_interaction(cfg) * &x), Subsystem::S, (2, 2))
}

/// `G_A = Tr_S[H_int (rho_S ⊗ I)]`.
pub fn ancilla_correction_g(rho_s: &ComplexMatrix, cfg: &ModelConfig) -> Result<ComplexMatrix> {
    let x = tensor(rho_s, &ComplexMatrix::identity(2));
    partial_trace(&(&bare_interaction(cfg) * &x), Subsystem::A, (2, 2))
}

/// `-(1/2 hbar^2) Tr_A[H_int, [H_int, rho ⊗ rho_A^th]]`.
pub fn dissipator(rho_s: &ComplexMatrix, cfg: &ModelConfig) -> Result<ComplexMatrix> {
    let anc = build_ancilla(cfg)?;
    let h = bare_interaction(cfg);
    let dc = h.commutator(&h.commutator(&tensor(rho_s, &anc.rho_a_th)));
    Ok(partial_trace(&dc, Subsystem::S, (2, 2))?.scale_re(-0.5 / (cfg.hbar * cfg.hbar)))
}

/// Coherent work from both sides of the collision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentWork {
    pub system: f64,
    pub ancilla: f64,
}

/// Both expressions of the coherent work, without the agreement check.
pub fn coherent_work_sides(rho_s: &ComplexMatrix, cfg: &ModelConfig) -> Result<CoherentWork> {
    require_weak(cfg)?;
    let (h_s, h_a) = local_hamiltonians(cfg);
    let g = coherent_correction_g(cfg)?;
    let i_over_hbar = C64::new(0.0, 1.0 / cfg.hbar);
    let system = i_over_hbar * cfg.lambda_tilde * cfg.tau * g.commutator(&h_s).trace_product(rho_s);

    let ga = ancilla_correction_g(rho_s, cfg)?;
    let rho_a = build_ancilla(cfg)?.rho_a;
    let ancilla = -i_over_hbar * cfg.tau.sqrt() * ga.commutator(&h_a).trace_product(&rho_a);
    Ok(CoherentWork {
        system: system.re,
        ancilla: ancilla.re,
    })
}

/// Coherent work of one collision; fails if the system-side and ancilla-side
/// expressions disagree beyond `1e-10` of the natural scale.
pub fn coherent_work_bch(rho_s: &ComplexMatrix, cfg: &ModelConfig) -> Result<f64> {
    let w = coherent_work_sides(rho_s, cfg)?;
    let scale = cfg.hbar * cfg.omega_s.abs().max(cfg.omega_a.abs()) * cfg.g * cfg.lambda_tilde.abs() * cfg.tau;
    if (w.system - w.ancilla).abs() > 1e-10 * scale.max(w.system.abs()).max(f64::MIN_POSITIVE) {
        return Err(Error::CoherentWorkMismatch {
            system: w.system,
            ancilla: w.ancilla,
        });
    }
    Ok(w.system)
}

/// `Tr[H_A D_n]` with `D_n = (tau / 2 hbar^2) Tr_S[H_int, [H_int, rho_S ⊗ rho_A^th]]`.
pub fn incoherent_heat_bch(rho_s: &ComplexMatrix, cfg: &ModelConfig) -> Result<f64> {
    require_weak(cfg)?;
    let anc = build_ancilla(cfg)?;
    let h = bare_interaction(cfg);
    let dc = h.commutator(&h.commutator(&tensor(rho_s, &anc.rho_a_th)));
    let d_n = partial_trace(&dc, Subsystem::A, (2, 2))?.scale_re(cfg.tau / (2.0 * cfg.hbar * cfg.hbar));
    let (_, h_a) = local_hamiltonians(cfg);
    Ok(h_a.trace_product(&d_n).re)
}

/// `-(i/hbar)[H_S + lambda_tilde G, rho] + D[rho]`.
pub fn master_equation_rhs(rho_s: &ComplexMatrix, cfg: &ModelConfig) -> Result<ComplexMatrix> {
    require_weak(cfg)?;
    MasterEquation::new(cfg)?.rhs(rho_s)
}

/// Precomputed generator pieces of the master equation.
struct MasterEquation {
    h_eff: ComplexMatrix,
    h_int: ComplexMatrix,
    rho_th: ComplexMatrix,
    hbar: f64,
}

impl MasterEquation {
    fn new(cfg: &ModelConfig) -> Result<Self> {
        let (h_s, _) = local_hamiltonians(cfg);
        let g = coherent_correction_g(cfg)?;
        Ok(Self {
            h_eff: &h_s + &g.scale_re(cfg.lambda_tilde),
            h_int: bare_interaction(cfg),
            rho_th: build_ancilla(cfg)?.rho_a_th,
            hbar: cfg.hbar,
        })
    }

    fn rhs(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        let unitary = self.h_eff.commutator(rho).scale(C64::new(0.0, -1.0 / self.hbar));
        let h = &self.h_int;
        let dc = h.commutator(&h.commutator(&tensor(rho, &self.rho_th)));
        let diss = partial_trace(&dc, Subsystem::S, (2, 2))?.scale_re(-0.5 / (self.hbar * self.hbar));
        Ok(&unitary + &diss)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MasterEquationTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<ComplexMatrix>,
    /// Smallest eigenvalue met along the way.
    pub min_eigenvalue: f64,
}

/// Default integration step, a twentieth of the collision time.
pub fn default_dt(cfg: &ModelConfig) -> f64 {
    cfg.tau / 20.0
}

/// Fixed-step RK4 from `0` to `t_final`. The step is shrunk slightly so the
/// grid lands on `t_final`.
pub fn integrate_master_equation(
    rho_s0: &ComplexMatrix,
    cfg: &ModelConfig,
    t_final: f64,
    dt: f64,
) -> Result<MasterEquationTrajectory> {
    require_weak(cfg)?;
    if !(dt > 0.0 && dt <= cfg.tau) {
        return Err(Error::InvalidConfig {
            field: "dt",
            reason: format!("must lie in (0, tau = {}], got {dt}", cfg.tau),
        });
    }
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidConfig {
            field: "t_final",
            reason: format!("must be finite and >= 0, got {t_final}"),
        });
    }
    let me = MasterEquation::new(cfg)?;
    let steps = (t_final / dt - 1e-9).ceil().max(0.0) as usize;
    let h = if steps == 0 { 0.0 } else { t_final / steps as f64 };
    let mut rho = rho_s0.clone();
    let mut times = vec![0.0];
    let mut states = vec![rho.clone()];
    let mut min_eigenvalue = eigenvalues_hermitian(&rho)?.last().copied().unwrap_or(0.0);
    for i in 0..steps {
        let k1 = me.rhs(&rho)?;
        let k2 = me.rhs(&(&rho + &k1.scale_re(0.5 * h)))?;
        let k3 = me.rhs(&(&rho + &k2.scale_re(0.5 * h)))?;
        let k4 = me.rhs(&(&rho + &k3.scale_re(h)))?;
        let incr = &(&k1 + &k2.scale_re(2.0)) + &(&k3.scale_re(2.0) + &k4);
        rho = &rho + &incr.scale_re(h / 6.0);
        min_eigenvalue = min_eigenvalue.min(
            eigenvalues_hermitian(&rho.hermitian_part())?
                .last()
                .copied()
                .unwrap_or(0.0),
        );
        times.push(h * (i + 1) as f64);
        states.push(rho.clone());
    }
    Ok(MasterEquationTrajectory {
        times,
        states,
        min_eigenvalue,
    })
}

/// Coherent-work statistics from the spectrum of the system observable `O_2`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorWorkSpectrum {
    /// Eigenvalues of `O_2`, descending.
    pub values: Vec<f64>,
    pub probs: Vec<f64>,
    pub projectors: Vec<ComplexMatrix>,
    /// Frobenius norm of `O_1`, null by construction.
    pub o1_norm: f64,
}

impl OperatorWorkSpectrum {
    pub fn mean(&self) -> f64 {
        self.values.iter().zip(&self.probs).map(|(c, p)| c * p).sum()
    }

    pub fn second_moment(&self) -> f64 {
        self.values.iter().zip(&self.probs).map(|(c, p)| c * c * p).sum()
    }
}

/// Builds `O_1` and `O_2` with `-H_A`, the stochastic work being `-u_A`, so the
/// mean matches the coherent-work KDQ mean.
pub fn operator_approach(rho_s: &ComplexMatrix, cfg: &ModelConfig) -> Result<OperatorWorkSpectrum> {
    if !cfg.is_resonant() {
        return Err(Error::NotResonant { delta: cfg.delta() });
    }
    let model = Model::new(cfg)?;
    let lam = cfg.lambda_eff();
    let chi = tensor(&ComplexMatrix::identity(2), &model.anc.chi_a);
    let minus_ha = model.ham.h_a_ext().scale_re(-1.0);
    let o1 = partial_trace(&(&chi * &minus_ha), Subsystem::S, (2, 2))?.scale_re(lam);
    let o2_raw = partial_trace(&(&chi * &model.heisenberg(&minus_ha)), Subsystem::S, (2, 2))?.scale_re(lam);
    // Only the Hermitian part contributes to expectation values in Hermitian states.
    let o2 = o2_raw.hermitian_part();
    let spec = eig_hermitian(&o2, DEFAULT_DEGENERACY_TOL)?;
    let probs = spec.projectors.iter().map(|p| p.trace_product(rho_s).re).collect();
    Ok(OperatorWorkSpectrum {
        values: spec.eigenvalues,
        probs,
        projectors: spec.projectors,
        o1_norm: o1.frobenius_norm(),
    })
}
