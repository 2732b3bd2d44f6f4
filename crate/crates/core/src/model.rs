//! Qubit-qubit collision model: Hamiltonians, ancilla and system states.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{
    commutator_norm, eig_hermitian, pauli, tensor, unitary_from_hamiltonian, ComplexMatrix,
    SpectralDecomposition, DEFAULT_DEGENERACY_TOL,
};

/// Relative slack on positivity bounds, so values computed as exactly the
/// bound are not rejected over a rounding error.
const BOUND_SLACK: f64 = 1e-12;

/// Tolerance for density-matrix validation (trace, Hermiticity, eigenvalue floor).
pub const STATE_TOL: f64 = 1e-10;

/// Which interaction convention the collision uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Plain interaction, ancilla coherence `lambda`.
    Exact,
    /// Interaction scaled by `1/sqrt(tau)`, ancilla coherence `lambda_tilde * sqrt(tau)`.
    WeaklyCoherent,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Exact => "exact",
            Mode::WeaklyCoherent => "weak",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub omega_s: f64,
    pub omega_a: f64,
    pub g: f64,
    pub tau: f64,
    pub beta: f64,
    pub lambda: f64,
    pub lambda_tilde: f64,
    pub hbar: f64,
    pub mode: Mode,
    /// Hollow Hermitian 2x2 coherence direction, `sigma_x` by default.
    pub chi_a: ComplexMatrix,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            omega_s: 1.0,
            omega_a: 1.0,
            g: 1.0,
            tau: std::f64::consts::PI / 6.0,
            beta: 1.0,
            lambda: 0.0,
            lambda_tilde: 0.0,
            hbar: 1.0,
            mode: Mode::Exact,
            chi_a: pauli::x(),
        }
    }
}

impl ModelConfig {
    /// Detuning `omega_s - omega_a`.
    pub fn delta(&self) -> f64 {
        self.omega_s - self.omega_a
    }

    /// Coefficient of `chi_a` in the ancilla state.
    pub fn lambda_eff(&self) -> f64 {
        match self.mode {
            Mode::Exact => self.lambda,
            Mode::WeaklyCoherent => self.lambda_tilde * self.tau.sqrt(),
        }
    }

    /// Effective coupling rate in the Hamiltonian actually applied.
    pub fn g_eff(&self) -> f64 {
        match self.mode {
            Mode::Exact => self.g,
            Mode::WeaklyCoherent => self.g / self.tau.sqrt(),
        }
    }

    /// Rotation angle of one collision at resonance.
    pub fn pulse_area(&self) -> f64 {
        self.g_eff() * self.tau
    }

    pub fn z_a(&self) -> f64 {
        let x = 0.5 * self.beta * self.hbar * self.omega_a;
        (-x).exp() + x.exp()
    }

    /// Thermal populations of `|0>` and `|1>`.
    pub fn thermal_populations(&self) -> (f64, f64) {
        let x = 0.5 * self.beta * self.hbar * self.omega_a;
        // Written via tanh so large beta*omega does not overflow.
        let t = x.tanh();
        (0.5 * (1.0 - t), 0.5 * (1.0 + t))
    }

    /// Largest admissible `|lambda_eff|` keeping the ancilla state positive.
    /// Equals `1/Z_A` for `chi_a = sigma_x`.
    pub fn lambda_max(&self) -> f64 {
        let (p0, p1) = self.thermal_populations();
        let c = self.chi_a[(0, 1)].norm();
        if c == 0.0 {
            f64::INFINITY
        } else {
            (p0 * p1).sqrt() / c
        }
    }

    pub fn is_resonant(&self) -> bool {
        self.delta().abs() <= 1e-12 * self.omega_a.abs().max(self.omega_s.abs()).max(1e-300)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |field: &'static str, v: f64| -> Result<()> {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig {
                    field,
                    reason: format!("must be finite and > 0, got {v}"),
                });
            }
            Ok(())
        };
        positive("g", self.g)?;
        positive("tau", self.tau)?;
        positive("hbar", self.hbar)?;
        for (field, v) in [
            ("omega_s", self.omega_s),
            ("omega_a", self.omega_a),
            ("lambda", self.lambda),
            ("lambda_tilde", self.lambda_tilde),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidConfig {
                    field,
                    reason: format!("must be finite, got {v}"),
                });
            }
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(Error::InvalidConfig {
                field: "beta",
                reason: format!("must be finite and >= 0, got {}", self.beta),
            });
        }
        let chi = &self.chi_a;
        if chi.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: chi.dim(),
            });
        }
        if !chi.is_hermitian(1e-12) || chi[(0, 0)].norm() > 1e-12 || chi[(1, 1)].norm() > 1e-12 {
            return Err(Error::InvalidConfig {
                field: "chi_a",
                reason: "must be Hermitian with zero diagonal".into(),
            });
        }
        let max = self.lambda_max();
        let value = self.lambda_eff();
        if value.abs() > max * (1.0 + BOUND_SLACK) {
            return Err(Error::CoherenceBound { value, max });
        }
        Ok(())
    }
}

/// Parameters of the system qubit state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemStateParams {
    pub rho11: f64,
    pub r: f64,
    pub phi_c: f64,
}

impl SystemStateParams {
    /// Largest coherence modulus compatible with `rho11`.
    pub fn r_max(rho11: f64) -> f64 {
        (rho11 * (1.0 - rho11)).max(0.0).sqrt()
    }

    pub fn rho12(&self) -> C64 {
        C64::from_polar(self.r, self.phi_c)
    }

    /// Parameters of an arbitrary 2x2 density matrix.
    pub fn from_matrix(rho: &ComplexMatrix) -> Self {
        let c = rho[(0, 1)];
        Self {
            rho11: rho[(0, 0)].re,
            r: c.norm(),
            phi_c: c.arg().rem_euclid(2.0 * std::f64::consts::PI),
        }
    }
}

pub struct Hamiltonians {
    /// Local system Hamiltonian (2x2).
    pub h_s: ComplexMatrix,
    /// Local ancilla Hamiltonian (2x2).
    pub h_a: ComplexMatrix,
    /// Interaction as applied, including the weak-mode scaling (4x4).
    pub h_int: ComplexMatrix,
    /// Total `H_S ⊗ I + I ⊗ H_A + H_int` (4x4).
    pub h_sa: ComplexMatrix,
}

impl Hamiltonians {
    pub fn h_s_ext(&self) -> ComplexMatrix {
        tensor(&self.h_s, &ComplexMatrix::identity(2))
    }

    pub fn h_a_ext(&self) -> ComplexMatrix {
        tensor(&ComplexMatrix::identity(2), &self.h_a)
    }

    /// Bare energy `H_S ⊗ I + I ⊗ H_A`.
    pub fn h_0(&self) -> ComplexMatrix {
        &self.h_s_ext() + &self.h_a_ext()
    }
}

/// `hbar g (sigma_+ ⊗ sigma_- + sigma_- ⊗ sigma_+)`, without weak-mode scaling.
pub fn bare_interaction(cfg: &ModelConfig) -> ComplexMatrix {
    let swap = &tensor(&pauli::plus(), &pauli::minus()) + &tensor(&pauli::minus(), &pauli::plus());
    swap.scale_re(cfg.hbar * cfg.g)
}

pub fn build_hamiltonians(cfg: &ModelConfig) -> Result<Hamiltonians> {
    cfg.validate()?;
    let h_s = pauli::z().scale_re(0.5 * cfg.hbar * cfg.omega_s);
    let h_a = pauli::z().scale_re(0.5 * cfg.hbar * cfg.omega_a);
    let h_int = match cfg.mode {
        Mode::Exact => bare_interaction(cfg),
        Mode::WeaklyCoherent => bare_interaction(cfg).scale_re(1.0 / cfg.tau.sqrt()),
    };
    let i2 = ComplexMatrix::identity(2);
    let h_sa = &(&tensor(&h_s, &i2) + &tensor(&i2, &h_a)) + &h_int;
    Ok(Hamiltonians {
        h_s,
        h_a,
        h_int,
        h_sa,
    })
}

pub struct AncillaStates {
    pub rho_a: ComplexMatrix,
    pub rho_a_th: ComplexMatrix,
    pub chi_a: ComplexMatrix,
}

pub fn build_ancilla(cfg: &ModelConfig) -> Result<AncillaStates> {
    cfg.validate()?;
    let (p0, p1) = cfg.thermal_populations();
    let rho_a_th = ComplexMatrix::from_real_diag(&[p0, p1]);
    let chi_a = cfg.chi_a.clone();
    let rho_a = &rho_a_th + &chi_a.scale_re(cfg.lambda_eff());
    Ok(AncillaStates {
        rho_a,
        rho_a_th,
        chi_a,
    })
}

pub fn build_system_state(p: &SystemStateParams) -> Result<ComplexMatrix> {
    let SystemStateParams { rho11, r, phi_c } = *p;
    if !(rho11.is_finite() && r.is_finite() && phi_c.is_finite()) {
        return Err(Error::InvalidState("non-finite state parameter".into()));
    }
    if !(0.0..=1.0).contains(&rho11) {
        return Err(Error::InvalidState(format!("rho11 = {rho11} outside [0, 1]")));
    }
    if r < 0.0 {
        return Err(Error::InvalidState(format!("r = {r} is negative")));
    }
    let r_max = SystemStateParams::r_max(rho11);
    if r > r_max * (1.0 + BOUND_SLACK) + 1e-15 {
        return Err(Error::InvalidState(format!(
            "r = {r} exceeds sqrt(rho11 (1 - rho11)) = {r_max}"
        )));
    }
    let c = p.rho12();
    Ok(ComplexMatrix::from_rows(&[
        &[C64::new(rho11, 0.0), c],
        &[c.conj(), C64::new(1.0 - rho11, 0.0)],
    ]))
}

/// Fails unless `rho` is Hermitian, unit trace and PSD within `tol`.
pub fn check_density_matrix(rho: &ComplexMatrix, tol: f64) -> Result<()> {
    let dev = rho.hermiticity_defect();
    if dev > tol {
        return Err(Error::InvalidState(format!("not Hermitian (deviation {dev:.3e})")));
    }
    if !rho.trace_one(tol) {
        let t = rho.trace();
        return Err(Error::InvalidState(format!("trace {} + {}i != 1", t.re, t.im)));
    }
    if !rho.is_psd(tol) {
        return Err(Error::InvalidState("negative eigenvalue".into()));
    }
    Ok(())
}

fn relative_commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    let scale = a.frobenius_norm() * b.frobenius_norm();
    let n = commutator_norm(a, b)?;
    Ok(if scale == 0.0 { 0.0 } else { n / scale })
}

/// Norm of `[H_int, H_S + H_A]`.
pub fn energy_commutator_norm(cfg: &ModelConfig) -> Result<f64> {
    let h = build_hamiltonians(cfg)?;
    commutator_norm(&h.h_int, &h.h_0())
}

/// Excitation number `n_S + n_A` with `n = |0><0|`.
pub fn excitation_number() -> ComplexMatrix {
    let n = ComplexMatrix::from_real_diag(&[1.0, 0.0]);
    let i2 = ComplexMatrix::identity(2);
    &tensor(&n, &i2) + &tensor(&i2, &n)
}

/// Whether `[H_int, H_S + H_A]` vanishes, relative to the operator scales.
pub fn check_energy_preserving(cfg: &ModelConfig) -> Result<bool> {
    let h = build_hamiltonians(cfg)?;
    Ok(relative_commutator(&h.h_int, &h.h_0())? < 1e-10)
}

/// Whether `[H_int, n_S + n_A]` vanishes, relative to the operator scales.
pub fn check_excitation_preserving(cfg: &ModelConfig) -> Result<bool> {
    let h = build_hamiltonians(cfg)?;
    Ok(relative_commutator(&h.h_int, &excitation_number())? < 1e-10)
}

/// A configuration with its operators precomputed.
pub struct Model {
    pub cfg: ModelConfig,
    pub ham: Hamiltonians,
    pub anc: AncillaStates,
    pub u: ComplexMatrix,
    pub u_adj: ComplexMatrix,
    pub spec_s: SpectralDecomposition,
    pub spec_a: SpectralDecomposition,
}

impl Model {
    pub fn new(cfg: &ModelConfig) -> Result<Self> {
        let ham = build_hamiltonians(cfg)?;
        let anc = build_ancilla(cfg)?;
        let u = unitary_from_hamiltonian(&ham.h_sa, cfg.tau, cfg.hbar)?;
        let u_adj = u.adjoint();
        let spec_s = eig_hermitian(&ham.h_s, DEFAULT_DEGENERACY_TOL)?;
        let spec_a = eig_hermitian(&ham.h_a, DEFAULT_DEGENERACY_TOL)?;
        Ok(Self {
            cfg: cfg.clone(),
            ham,
            anc,
            u,
            u_adj,
            spec_s,
            spec_a,
        })
    }

    /// `U x U^dagger`.
    pub fn conjugate(&self, x: &ComplexMatrix) -> ComplexMatrix {
        &(&self.u * x) * &self.u_adj
    }

    /// `U^dagger x U`.
    pub fn heisenberg(&self, x: &ComplexMatrix) -> ComplexMatrix {
        &(&self.u_adj * x) * &self.u
    }
}
