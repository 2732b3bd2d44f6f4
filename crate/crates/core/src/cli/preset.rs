//! Built-in experiments.

use std::f64::consts::PI;

use crate::kdq::Quantity;
use crate::model::Mode;

use super::config::{Coherence, Detuning, ExperimentSpec, Grid, Output, Param, ParamSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Fig1,
    Fig2,
    Fig3a,
    Fig3b,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Custom,
}

/// Reduced Planck constant in J s.
pub const HBAR_SI: f64 = 1.054571817e-34;

impl Preset {
    pub const ALL: [Preset; 9] = [
        Preset::Fig1,
        Preset::Fig2,
        Preset::Fig3a,
        Preset::Fig3b,
        Preset::Fig4,
        Preset::Fig5,
        Preset::Fig6,
        Preset::Fig7,
        Preset::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig1 => "fig1",
            Preset::Fig2 => "fig2",
            Preset::Fig3a => "fig3a",
            Preset::Fig3b => "fig3b",
            Preset::Fig4 => "fig4",
            Preset::Fig5 => "fig5",
            Preset::Fig6 => "fig6",
            Preset::Fig7 => "fig7",
            Preset::Custom => "custom",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == s)
    }

    pub fn describe(self) -> &'static str {
        match self {
            Preset::Fig1 => "KDQ non-positivity of u_S vs coherence phase, three temperatures",
            Preset::Fig2 => "KDQ non-positivity of u_SA vs coherence phase, three temperatures",
            Preset::Fig3a => "system energy change vs detuning",
            Preset::Fig3b => "total energy change vs collision time, large detuning",
            Preset::Fig4 => "energy-change variances vs detuning and ancilla coherence",
            Preset::Fig5 => "coherent-work quasiprobabilities vs collision time",
            Preset::Fig6 => "operator-approach work distribution vs collision time",
            Preset::Fig7 => "heat and work per collision over a trajectory, SI units",
            Preset::Custom => "single point, energy changes",
        }
    }

    /// The full experiment with every parameter filled in.
    pub fn spec(self) -> ExperimentSpec {
        let unit = ParamSet {
            omega_a: 1.0,
            detuning: Detuning::Delta(0.0),
            g: 1.0,
            tau: PI / 6.0,
            beta: 1.0,
            hbar: 1.0,
            mode: Mode::Exact,
            lambda: Coherence::Fraction(1.0),
            lambda_tilde: Coherence::Absolute(0.0),
            rho11: 0.25,
            r: Coherence::Fraction(1.0),
            phi_c: PI / 4.0,
        };
        let taus = Grid::List(vec![PI / 36.0, PI / 18.0, PI / 12.0, PI / 9.0, 5.0 * PI / 36.0, PI / 6.0]);
        let lambdas = Grid::List(vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        let spec = |base, sweep, outputs| ExperimentSpec {
            preset: self,
            base,
            sweep,
            outputs,
            collisions: 1,
            out: None,
        };
        match self {
            Preset::Fig1 | Preset::Fig2 => {
                let q = if self == Preset::Fig1 { Quantity::Us } else { Quantity::Usa };
                spec(
                    ParamSet {
                        detuning: Detuning::Delta(3.0),
                        ..unit
                    },
                    vec![
                        (Param::Beta, Grid::List(vec![5.0, 1.0, 0.2])),
                        (Param::Tau, taus),
                        (Param::PhiC, Grid::Periodic(0.0, 2.0 * PI, 512)),
                    ],
                    vec![Output::Np(q)],
                )
            }
            Preset::Fig3a => spec(
                unit,
                vec![
                    (Param::LambdaFrac, lambdas),
                    (Param::Delta, Grid::Linspace(-20.0, 20.0, 512)),
                ],
                vec![Output::DeltaE, Output::DeltaEAnalytic, Output::DeltaESEnvelope],
            ),
            Preset::Fig3b => spec(
                ParamSet {
                    detuning: Detuning::Delta(20.0),
                    ..unit
                },
                vec![
                    (Param::LambdaFrac, lambdas),
                    (Param::Tau, Grid::Linspace(PI / 1536.0, PI / 3.0, 512)),
                ],
                vec![Output::DeltaE, Output::DeltaEAnalytic, Output::DeltaESALimit],
            ),
            Preset::Fig4 => spec(
                unit,
                vec![
                    (Param::LambdaFrac, Grid::Linspace(-1.0, 1.0, 9)),
                    (Param::Delta, Grid::Linspace(20.0 / 512.0, 20.0, 512)),
                ],
                vec![
                    Output::Var(Quantity::Us),
                    Output::Var(Quantity::Usa),
                    Output::VarRel(Quantity::Us),
                    Output::VarRel(Quantity::Usa),
                ],
            ),
            Preset::Fig5 | Preset::Fig6 => {
                let outputs = if self == Preset::Fig5 {
                    vec![Output::Kdq(Quantity::W), Output::Pdist(Quantity::W)]
                } else {
                    vec![Output::OperatorApproach, Output::Mean(Quantity::W), Output::Var(Quantity::W)]
                };
                spec(
                    ParamSet {
                        beta: 0.1,
                        phi_c: PI / 3.0,
                        ..unit
                    },
                    vec![(Param::Tau, Grid::Linspace(PI / 512.0, PI, 512))],
                    outputs,
                )
            }
            Preset::Fig7 => {
                let omega = 5.7e9;
                ExperimentSpec {
                    collisions: 100,
                    ..spec(
                        ParamSet {
                            omega_a: omega,
                            g: 0.4 * omega,
                            tau: 135e-12,
                            beta: 0.4e-9 / HBAR_SI,
                            hbar: HBAR_SI,
                            lambda: Coherence::Fraction(0.5),
                            ..unit
                        },
                        Vec::new(),
                        vec![Output::Thermo, Output::DeltaE],
                    )
                }
            }
            Preset::Custom => spec(
                ParamSet {
                    lambda: Coherence::Absolute(0.0),
                    phi_c: 0.0,
                    ..unit
                },
                Vec::new(),
                vec![Output::DeltaE],
            ),
        }
    }

    /// Derived quantities recorded in the metadata sidecar.
    pub fn notes(self, spec: &ExperimentSpec) -> Vec<String> {
        let mut out = Vec::new();
        let b = &spec.base;
        out.push(format!("beta*hbar*omega_a = {:.6}", b.beta * b.hbar * b.omega_a));
        if let Ok(pt) = b.resolve() {
            out.push(format!("lambda_max = 1/Z_A = {:.6e}", pt.cfg.lambda_max()));
            out.push(format!("pulse area g*tau = {:.6}", pt.cfg.pulse_area()));
        }
        if self == Preset::Fig7 {
            out.push(format!("g/omega_a = {}", b.g / b.omega_a));
        }
        for (p, g) in &spec.sweep {
            if *p == Param::Beta {
                let vals: Vec<String> = g
                    .values()
                    .iter()
                    .map(|v| format!("{:.4}", v * b.hbar * b.omega_a))
                    .collect();
                out.push(format!("beta*hbar*omega_a along sweep = [{}]", vals.join(", ")));
            }
        }
        out
    }
}
