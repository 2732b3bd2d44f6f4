//! Kirkwood-Dirac quasiprobabilities of energy exchanges in one collision.
//!
//! Every entry is `Tr[U^dagger P_fin U P_in rho]` for a pair of projectors and
//! a (pseudo-)state `rho` on `S ⊗ A`. Entries are listed with the initial
//! index major and the final index minor.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{
    eig_hermitian, tensor, ComplexMatrix, SpectralDecomposition, DEFAULT_DEGENERACY_TOL,
};
use crate::model::{Mode, Model, ModelConfig};

/// Pulse area above which coherent-work and heat KDQs leave the short-collision regime.
pub const SMALL_TAU_PULSE_AREA: f64 = PI / 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Quantity {
    /// System internal energy change.
    Us,
    /// Ancilla internal energy change.
    Ua,
    /// Change of the bare total energy (non-energy-preserving work).
    Usa,
    /// Coherent work, ancilla side. Values are `-u_A`.
    W,
    /// Incoherent heat, ancilla side. Values are `-u_A`.
    Q,
    /// Coherent work, system side. Values are `u_S`.
    Ws,
    /// Incoherent heat, system side. Values are `u_S`.
    Qs,
}

impl Quantity {
    pub const ALL: [Quantity; 7] = [
        Quantity::Us,
        Quantity::Ua,
        Quantity::Usa,
        Quantity::W,
        Quantity::Q,
        Quantity::Ws,
        Quantity::Qs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Quantity::Us => "us",
            Quantity::Ua => "ua",
            Quantity::Usa => "usa",
            Quantity::W => "w",
            Quantity::Q => "q",
            Quantity::Ws => "ws",
            Quantity::Qs => "qs",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|q| q.name() == s)
    }

    /// Coherent-work distributions sum to zero rather than one.
    pub fn is_work_type(self) -> bool {
        matches!(self, Quantity::W | Quantity::Ws)
    }

    /// Work and heat splits need resonance or the weak-coupling mode.
    pub fn needs_split(self) -> bool {
        matches!(self, Quantity::W | Quantity::Q | Quantity::Ws | Quantity::Qs)
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Single(usize),
    /// `(system level, ancilla level)`.
    Pair(usize, usize),
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Level::Single(i) => write!(f, "{i}"),
            Level::Pair(l, k) => write!(f, "{l}{k}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransitionLabel {
    pub quantity: Quantity,
    pub i_in: Level,
    pub i_fin: Level,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KdqEntry {
    pub label: TransitionLabel,
    pub value: f64,
    pub quasiprob: C64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KdqDistribution {
    pub quantity: Quantity,
    pub entries: Vec<KdqEntry>,
    pub collision_index: usize,
    /// Set for work/heat distributions evaluated past the short-collision regime.
    pub beyond_small_tau: bool,
    /// Level energies of `H_S` and `H_A` the labels index into.
    pub energies_s: Vec<f64>,
    pub energies_a: Vec<f64>,
}

impl KdqDistribution {
    pub fn total(&self) -> C64 {
        self.entries.iter().map(|e| e.quasiprob).sum()
    }

    /// Quasiprobabilities summed per distinct stochastic value, ascending.
    pub fn by_value(&self, tol: f64) -> Vec<(f64, C64)> {
        let mut sorted: Vec<&KdqEntry> = self.entries.iter().collect();
        sorted.sort_by(|a, b| a.value.total_cmp(&b.value));
        let mut out: Vec<(f64, C64)> = Vec::new();
        for e in sorted {
            match out.last_mut() {
                Some((v, q)) if (e.value - *v).abs() <= tol => *q += e.quasiprob,
                _ => out.push((e.value, e.quasiprob)),
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSet {
    pub mean: C64,
    pub second_moment: C64,
    pub variance: C64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonPositivityReport {
    pub n_q: f64,
    pub n_re: f64,
    pub n_im: f64,
}

/// Which projector family a quantity is measured with.
#[derive(Clone, Copy)]
enum Side {
    S,
    A,
}

fn side_of(q: Quantity) -> Option<Side> {
    match q {
        Quantity::Us | Quantity::Ws | Quantity::Qs => Some(Side::S),
        Quantity::Ua | Quantity::W | Quantity::Q => Some(Side::A),
        Quantity::Usa => None,
    }
}

/// `-1` for quantities whose stochastic value is `-u_A`.
fn value_sign(q: Quantity) -> f64 {
    match q {
        Quantity::W | Quantity::Q => -1.0,
        _ => 1.0,
    }
}

impl Model {
    fn check_split_allowed(&self, quantity: Quantity) -> Result<bool> {
        if !quantity.needs_split() {
            return Ok(false);
        }
        if self.cfg.mode == Mode::Exact && !self.cfg.is_resonant() {
            return Err(Error::NotResonant {
                delta: self.cfg.delta(),
            });
        }
        let area = self.cfg.pulse_area().abs();
        let beyond = area > SMALL_TAU_PULSE_AREA;
        if beyond {
            log::warn!(
                "{} quasiprobabilities at pulse area {area:.4} > pi/6 are outside the short-collision regime",
                quantity
            );
        }
        Ok(beyond)
    }

    /// Pseudo-state the quantity's quasiprobabilities are built on.
    pub fn kdq_state(&self, quantity: Quantity, rho_s: &ComplexMatrix) -> ComplexMatrix {
        match quantity {
            Quantity::Us | Quantity::Ua | Quantity::Usa => tensor(rho_s, &self.anc.rho_a),
            Quantity::Q | Quantity::Qs => tensor(rho_s, &self.anc.rho_a_th),
            Quantity::W | Quantity::Ws => {
                tensor(rho_s, &self.anc.chi_a).scale_re(self.cfg.lambda_eff())
            }
        }
    }

    fn local_projectors(&self, side: Side) -> (Vec<ComplexMatrix>, &[f64]) {
        let i2 = ComplexMatrix::identity(2);
        match side {
            Side::S => (
                self.spec_s.projectors.iter().map(|p| tensor(p, &i2)).collect(),
                &self.spec_s.eigenvalues,
            ),
            Side::A => (
                self.spec_a.projectors.iter().map(|p| tensor(&i2, p)).collect(),
                &self.spec_a.eigenvalues,
            ),
        }
    }

    /// Product projectors `P^S_l ⊗ P^A_k` with levels and energies.
    fn product_projectors(&self) -> Vec<(Level, f64, ComplexMatrix)> {
        let mut out = Vec::new();
        for (l, (es, ps)) in self.spec_s.eigenvalues.iter().zip(&self.spec_s.projectors).enumerate() {
            for (k, (ea, pa)) in self.spec_a.eigenvalues.iter().zip(&self.spec_a.projectors).enumerate() {
                out.push((Level::Pair(l, k), es + ea, tensor(ps, pa)));
            }
        }
        out
    }

    fn assemble(
        &self,
        quantity: Quantity,
        rho: &ComplexMatrix,
        projectors: &[(Level, f64, ComplexMatrix)],
        sign: f64,
    ) -> Vec<KdqEntry> {
        let evolved: Vec<ComplexMatrix> =
            projectors.iter().map(|(_, _, p)| self.heisenberg(p)).collect();
        let mut entries = Vec::with_capacity(projectors.len() * projectors.len());
        for (lin, ein, pin) in projectors {
            let prho = pin * rho;
            for ((lfin, efin, _), ufin) in projectors.iter().zip(&evolved) {
                entries.push(KdqEntry {
                    label: TransitionLabel {
                        quantity,
                        i_in: *lin,
                        i_fin: *lfin,
                    },
                    value: sign * (efin - ein),
                    quasiprob: ufin.trace_product(&prho),
                });
            }
        }
        entries
    }

    pub fn kdq(&self, quantity: Quantity, rho_s: &ComplexMatrix) -> Result<KdqDistribution> {
        if rho_s.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: rho_s.dim(),
            });
        }
        let beyond_small_tau = self.check_split_allowed(quantity)?;
        let rho = self.kdq_state(quantity, rho_s);
        let projectors: Vec<(Level, f64, ComplexMatrix)> = match side_of(quantity) {
            Some(side) => {
                let (ps, es) = self.local_projectors(side);
                ps.into_iter()
                    .zip(es)
                    .enumerate()
                    .map(|(i, (p, &e))| (Level::Single(i), e, p))
                    .collect()
            }
            None => self.product_projectors(),
        };
        Ok(KdqDistribution {
            quantity,
            entries: self.assemble(quantity, &rho, &projectors, value_sign(quantity)),
            collision_index: 0,
            beyond_small_tau,
            energies_s: self.spec_s.eigenvalues.clone(),
            energies_a: self.spec_a.eigenvalues.clone(),
        })
    }

    /// Mean of the quantity as a single trace, `±(Tr[U^dagger H U rho] - Tr[H rho])`.
    pub fn average_via_trace(&self, quantity: Quantity, rho_s: &ComplexMatrix) -> Result<C64> {
        self.check_split_allowed(quantity)?;
        let rho = self.kdq_state(quantity, rho_s);
        let h = match side_of(quantity) {
            Some(Side::S) => self.ham.h_s_ext(),
            Some(Side::A) => self.ham.h_a_ext(),
            None => self.ham.h_0(),
        };
        let after = self.conjugate(&rho);
        Ok((h.trace_product(&after) - h.trace_product(&rho)) * value_sign(quantity))
    }
}

pub fn kdq_distribution(
    quantity: Quantity,
    rho_s: &ComplexMatrix,
    cfg: &ModelConfig,
) -> Result<KdqDistribution> {
    Model::new(cfg)?.kdq(quantity, rho_s)
}

/// USA distribution over the grouped eigenspaces of `H_S ⊗ I + I ⊗ H_A`.
/// At resonance the two middle levels merge into one projector.
pub fn kdq_usa_spectral(rho_s: &ComplexMatrix, cfg: &ModelConfig) -> Result<KdqDistribution> {
    let model = Model::new(cfg)?;
    let spec: SpectralDecomposition = eig_hermitian(&model.ham.h_0(), DEFAULT_DEGENERACY_TOL)?;
    let projectors: Vec<(Level, f64, ComplexMatrix)> = spec
        .eigenvalues
        .iter()
        .zip(spec.projectors)
        .enumerate()
        .map(|(i, (&e, p))| (Level::Single(i), e, p))
        .collect();
    let rho = model.kdq_state(Quantity::Usa, rho_s);
    Ok(KdqDistribution {
        quantity: Quantity::Usa,
        entries: model.assemble(Quantity::Usa, &rho, &projectors, 1.0),
        collision_index: 0,
        beyond_small_tau: false,
        energies_s: model.spec_s.eigenvalues.clone(),
        energies_a: model.spec_a.eigenvalues.clone(),
    })
}

fn marginalize(d: &KdqDistribution, keep_system: bool) -> Result<KdqDistribution> {
    if d.quantity != Quantity::Usa {
        return Err(Error::WrongQuantity {
            expected: "usa",
            found: d.quantity.name(),
        });
    }
    let pick = |lv: Level| -> Result<usize> {
        match lv {
            Level::Pair(l, k) => Ok(if keep_system { l } else { k }),
            Level::Single(_) => Err(Error::WrongQuantity {
                expected: "usa over product levels",
                found: "usa over grouped levels",
            }),
        }
    };
    let (quantity, energies) = if keep_system {
        (Quantity::Us, &d.energies_s)
    } else {
        (Quantity::Ua, &d.energies_a)
    };
    let n = energies.len();
    let mut acc = vec![C64::new(0.0, 0.0); n * n];
    for e in &d.entries {
        acc[pick(e.label.i_in)? * n + pick(e.label.i_fin)?] += e.quasiprob;
    }
    let entries = acc
        .into_iter()
        .enumerate()
        .map(|(idx, quasiprob)| {
            let (i, f) = (idx / n, idx % n);
            KdqEntry {
                label: TransitionLabel {
                    quantity,
                    i_in: Level::Single(i),
                    i_fin: Level::Single(f),
                },
                value: energies[f] - energies[i],
                quasiprob,
            }
        })
        .collect();
    Ok(KdqDistribution {
        quantity,
        entries,
        collision_index: d.collision_index,
        beyond_small_tau: d.beyond_small_tau,
        energies_s: d.energies_s.clone(),
        energies_a: d.energies_a.clone(),
    })
}

/// Sums USA quasiprobabilities over the ancilla indices.
pub fn marginalize_usa_to_us(d: &KdqDistribution) -> Result<KdqDistribution> {
    marginalize(d, true)
}

/// Sums USA quasiprobabilities over the system indices.
pub fn marginalize_usa_to_ua(d: &KdqDistribution) -> Result<KdqDistribution> {
    marginalize(d, false)
}

pub fn moments(d: &KdqDistribution) -> MomentSet {
    let mean: C64 = d.entries.iter().map(|e| e.quasiprob * e.value).sum();
    let second_moment: C64 = d.entries.iter().map(|e| e.quasiprob * (e.value * e.value)).sum();
    MomentSet {
        mean,
        second_moment,
        variance: second_moment - mean * mean,
    }
}

pub fn average_via_trace(quantity: Quantity, rho_s: &ComplexMatrix, cfg: &ModelConfig) -> Result<C64> {
    Model::new(cfg)?.average_via_trace(quantity, rho_s)
}

pub fn nonpositivity(d: &KdqDistribution) -> Result<NonPositivityReport> {
    if d.quantity.is_work_type() {
        return Err(Error::WrongQuantity {
            expected: "a distribution summing to one",
            found: d.quantity.name(),
        });
    }
    let (mut abs, mut re, mut im) = (0.0, 0.0, 0.0);
    for e in &d.entries {
        abs += e.quasiprob.norm();
        re += e.quasiprob.re.abs();
        im += e.quasiprob.im.abs();
    }
    Ok(NonPositivityReport {
        n_q: abs - 1.0,
        n_re: re - 1.0,
        n_im: im,
    })
}
