//! Experiment configuration: a small INI-like format with arithmetic values.
//!
//! ```text
//! preset = fig5
//! out = fig5.csv
//!
//! [model]
//! beta = 0.1
//! lambda_frac = 1
//!
//! [state]
//! phi_c = pi/3
//!
//! [sweep]
//! tau = linspace(pi/512, pi, 512)
//!
//! [output]
//! quantities = kdq_w, pdist_w
//! collisions = 1
//! ```

use std::fmt::{self, Write as _};
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::kdq::Quantity;
use crate::linalg::{pauli, ComplexMatrix};
use crate::model::{build_system_state, Mode, ModelConfig, SystemStateParams};

use super::expr::{eval, split_args};
use super::preset::Preset;

/// A coherence given directly or as a fraction of its positivity bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coherence {
    Absolute(f64),
    Fraction(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Detuning {
    Delta(f64),
    OmegaS(f64),
}

/// Every scalar a config or sweep may set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Param {
    OmegaA,
    OmegaS,
    Delta,
    G,
    Tau,
    Beta,
    Hbar,
    Lambda,
    LambdaFrac,
    LambdaTilde,
    LambdaTildeFrac,
    Rho11,
    R,
    RFrac,
    PhiC,
}

impl Param {
    pub const ALL: [Param; 15] = [
        Param::OmegaA,
        Param::OmegaS,
        Param::Delta,
        Param::G,
        Param::Tau,
        Param::Beta,
        Param::Hbar,
        Param::Lambda,
        Param::LambdaFrac,
        Param::LambdaTilde,
        Param::LambdaTildeFrac,
        Param::Rho11,
        Param::R,
        Param::RFrac,
        Param::PhiC,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Param::OmegaA => "omega_a",
            Param::OmegaS => "omega_s",
            Param::Delta => "delta",
            Param::G => "g",
            Param::Tau => "tau",
            Param::Beta => "beta",
            Param::Hbar => "hbar",
            Param::Lambda => "lambda",
            Param::LambdaFrac => "lambda_frac",
            Param::LambdaTilde => "lambda_tilde",
            Param::LambdaTildeFrac => "lambda_tilde_frac",
            Param::Rho11 => "rho11",
            Param::R => "r",
            Param::RFrac => "r_frac",
            Param::PhiC => "phi_c",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == s)
    }

    fn in_state_section(self) -> bool {
        matches!(self, Param::Rho11 | Param::R | Param::RFrac | Param::PhiC)
    }

    /// Params that set the same underlying field.
    fn slot(self) -> u8 {
        match self {
            Param::OmegaS | Param::Delta => 1,
            Param::Lambda | Param::LambdaFrac => 2,
            Param::LambdaTilde | Param::LambdaTildeFrac => 3,
            Param::R | Param::RFrac => 4,
            other => 10 + other as u8,
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Unresolved parameters of one model point.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    pub omega_a: f64,
    pub detuning: Detuning,
    pub g: f64,
    pub tau: f64,
    pub beta: f64,
    pub hbar: f64,
    pub mode: Mode,
    pub lambda: Coherence,
    pub lambda_tilde: Coherence,
    pub rho11: f64,
    pub r: Coherence,
    pub phi_c: f64,
}

impl Default for ParamSet {
    fn default() -> Self {
        Self {
            omega_a: 1.0,
            detuning: Detuning::Delta(0.0),
            g: 1.0,
            tau: std::f64::consts::PI / 6.0,
            beta: 1.0,
            hbar: 1.0,
            mode: Mode::Exact,
            lambda: Coherence::Absolute(0.0),
            lambda_tilde: Coherence::Absolute(0.0),
            rho11: 0.25,
            r: Coherence::Fraction(1.0),
            phi_c: 0.0,
        }
    }
}

/// A fully resolved point: model, state parameters and density matrix.
#[derive(Debug, Clone)]
pub struct ResolvedPoint {
    pub cfg: ModelConfig,
    pub state: SystemStateParams,
    pub rho_s: ComplexMatrix,
}

impl ParamSet {
    pub fn set(&mut self, p: Param, v: f64) {
        match p {
            Param::OmegaA => self.omega_a = v,
            Param::OmegaS => self.detuning = Detuning::OmegaS(v),
            Param::Delta => self.detuning = Detuning::Delta(v),
            Param::G => self.g = v,
            Param::Tau => self.tau = v,
            Param::Beta => self.beta = v,
            Param::Hbar => self.hbar = v,
            Param::Lambda => self.lambda = Coherence::Absolute(v),
            Param::LambdaFrac => self.lambda = Coherence::Fraction(v),
            Param::LambdaTilde => self.lambda_tilde = Coherence::Absolute(v),
            Param::LambdaTildeFrac => self.lambda_tilde = Coherence::Fraction(v),
            Param::Rho11 => self.rho11 = v,
            Param::R => self.r = Coherence::Absolute(v),
            Param::RFrac => self.r = Coherence::Fraction(v),
            Param::PhiC => self.phi_c = v,
        }
    }

    pub fn omega_s(&self) -> f64 {
        match self.detuning {
            Detuning::Delta(d) => self.omega_a + d,
            Detuning::OmegaS(w) => w,
        }
    }

    /// Builds and validates the model and state.
    pub fn resolve(&self) -> Result<ResolvedPoint> {
        let mut cfg = ModelConfig {
            omega_s: self.omega_s(),
            omega_a: self.omega_a,
            g: self.g,
            tau: self.tau,
            beta: self.beta,
            lambda: 0.0,
            lambda_tilde: 0.0,
            hbar: self.hbar,
            mode: self.mode,
            chi_a: pauli::x(),
        };
        let max = cfg.lambda_max();
        cfg.lambda = match self.lambda {
            Coherence::Absolute(v) => v,
            Coherence::Fraction(f) => f * max,
        };
        cfg.lambda_tilde = match self.lambda_tilde {
            Coherence::Absolute(v) => v,
            Coherence::Fraction(f) => f * max / self.tau.sqrt(),
        };
        cfg.validate()?;
        let r = match self.r {
            Coherence::Absolute(v) => v,
            Coherence::Fraction(f) => {
                if !(0.0..=1.0).contains(&self.rho11) {
                    return Err(Error::InvalidState(format!(
                        "rho11 = {} outside [0, 1]",
                        self.rho11
                    )));
                }
                f * SystemStateParams::r_max(self.rho11)
            }
        };
        let state = SystemStateParams {
            rho11: self.rho11,
            r,
            phi_c: self.phi_c,
        };
        let rho_s = build_system_state(&state)?;
        Ok(ResolvedPoint { cfg, state, rho_s })
    }

    fn render(&self, out: &mut String) {
        let coh = |name: &str, c: Coherence| match c {
            Coherence::Absolute(v) => format!("{name} = {v:?}\n"),
            Coherence::Fraction(v) => format!("{name}_frac = {v:?}\n"),
        };
        out.push_str("[model]\n");
        let _ = writeln!(out, "mode = {}", self.mode.name());
        let _ = writeln!(out, "omega_a = {:?}", self.omega_a);
        match self.detuning {
            Detuning::Delta(d) => {
                let _ = writeln!(out, "delta = {d:?}");
            }
            Detuning::OmegaS(w) => {
                let _ = writeln!(out, "omega_s = {w:?}");
            }
        }
        let _ = writeln!(out, "g = {:?}", self.g);
        let _ = writeln!(out, "tau = {:?}", self.tau);
        let _ = writeln!(out, "beta = {:?}", self.beta);
        let _ = writeln!(out, "hbar = {:?}", self.hbar);
        out.push_str(&coh("lambda", self.lambda));
        out.push_str(&coh("lambda_tilde", self.lambda_tilde));
        out.push_str("\n[state]\n");
        let _ = writeln!(out, "rho11 = {:?}", self.rho11);
        out.push_str(&coh("r", self.r));
        let _ = writeln!(out, "phi_c = {:?}", self.phi_c);
    }
}

/// Values taken by one sweep axis.
#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    /// `n` points from `a` to `b` inclusive.
    Linspace(f64, f64, usize),
    /// `n` points from `a` with step `(b - a)/n`, excluding `b`.
    Periodic(f64, f64, usize),
    List(Vec<f64>),
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match *self {
            Grid::Linspace(a, b, n) => {
                if n == 1 {
                    return vec![a];
                }
                let h = (b - a) / (n - 1) as f64;
                (0..n)
                    .map(|k| if k == n - 1 { b } else { a + h * k as f64 })
                    .collect()
            }
            Grid::Periodic(a, b, n) => {
                let h = (b - a) / n as f64;
                (0..n).map(|k| a + h * k as f64).collect()
            }
            Grid::List(ref v) => v.clone(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Grid::Linspace(_, _, n) | Grid::Periodic(_, _, n) => *n,
            Grid::List(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn parse(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        if let Some(inner) = s.strip_prefix('[') {
            let inner = inner
                .strip_suffix(']')
                .ok_or_else(|| "unterminated list".to_string())?;
            if inner.trim().is_empty() {
                return Err("empty list".into());
            }
            let v = split_args(inner)
                .into_iter()
                .map(eval)
                .collect::<std::result::Result<Vec<_>, _>>()?;
            return Ok(Grid::List(v));
        }
        for (name, periodic) in [("linspace", false), ("periodic", true)] {
            if let Some(rest) = s.strip_prefix(name) {
                let inner = rest
                    .trim()
                    .strip_prefix('(')
                    .and_then(|r| r.strip_suffix(')'))
                    .ok_or_else(|| format!("expected {name}(start, stop, n)"))?;
                let args = split_args(inner);
                if args.len() != 3 {
                    return Err(format!("{name} takes 3 arguments, got {}", args.len()));
                }
                let a = eval(args[0])?;
                let b = eval(args[1])?;
                let n = eval(args[2])?;
                if n < 1.0 || n.fract() != 0.0 || n > 1e7 {
                    return Err(format!("{name} point count must be a positive integer, got {n}"));
                }
                let n = n as usize;
                return Ok(if periodic {
                    Grid::Periodic(a, b, n)
                } else {
                    Grid::Linspace(a, b, n)
                });
            }
        }
        Ok(Grid::List(vec![eval(s)?]))
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Grid::Linspace(a, b, n) => write!(f, "linspace({a:?}, {b:?}, {n})"),
            Grid::Periodic(a, b, n) => write!(f, "periodic({a:?}, {b:?}, {n})"),
            Grid::List(v) => {
                let items: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
                write!(f, "[{}]", items.join(", "))
            }
        }
    }
}

/// One requested output group; each expands to fixed CSV columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Output {
    /// `delta_e_s`, `delta_e_a`, `delta_e_sa` of the collision.
    DeltaE,
    /// Closed forms for `delta_e_s` and `delta_e_sa`.
    DeltaEAnalytic,
    DeltaESEnvelope,
    DeltaESALimit,
    Mean(Quantity),
    Var(Quantity),
    /// Variance divided by its value at zero ancilla coherence.
    VarRel(Quantity),
    Np(Quantity),
    Kdq(Quantity),
    /// Quasiprobability mass on negative, zero and positive values.
    Pdist(Quantity),
    OperatorApproach,
    SteadyState,
    Thermo,
}

impl Output {
    pub fn parse(s: &str) -> std::result::Result<Self, String> {
        let fixed = match s {
            "delta_e" => Some(Output::DeltaE),
            "delta_e_analytic" => Some(Output::DeltaEAnalytic),
            "delta_e_s_envelope" => Some(Output::DeltaESEnvelope),
            "delta_e_sa_limit" => Some(Output::DeltaESALimit),
            "oa" => Some(Output::OperatorApproach),
            "steady_state" => Some(Output::SteadyState),
            "thermo" => Some(Output::Thermo),
            _ => None,
        };
        if let Some(o) = fixed {
            return Ok(o);
        }
        let quantity = |name: &str| {
            Quantity::from_name(name).ok_or_else(|| format!("unknown quantity '{name}' in output '{s}'"))
        };
        if let Some(rest) = s.strip_prefix("var_") {
            if let Some(q) = rest.strip_suffix("_rel") {
                return Ok(Output::VarRel(quantity(q)?));
            }
            return Ok(Output::Var(quantity(rest)?));
        }
        if let Some(rest) = s.strip_prefix("mean_") {
            return Ok(Output::Mean(quantity(rest)?));
        }
        if let Some(rest) = s.strip_prefix("np_") {
            let q = quantity(rest)?;
            if q.is_work_type() {
                return Err(format!("'{s}': non-positivity witnesses are not defined for work quasiprobabilities"));
            }
            return Ok(Output::Np(q));
        }
        if let Some(rest) = s.strip_prefix("kdq_") {
            return Ok(Output::Kdq(quantity(rest)?));
        }
        if let Some(rest) = s.strip_prefix("pdist_") {
            let q = quantity(rest)?;
            if q == Quantity::Usa {
                return Err(format!("'{s}': use kdq_usa for the joint distribution"));
            }
            return Ok(Output::Pdist(q));
        }
        Err(format!("unknown output '{s}'"))
    }

    pub fn quantity(self) -> Option<Quantity> {
        match self {
            Output::Mean(q)
            | Output::Var(q)
            | Output::VarRel(q)
            | Output::Np(q)
            | Output::Kdq(q)
            | Output::Pdist(q) => Some(q),
            _ => None,
        }
    }

    /// CSV column names.
    pub fn columns(self) -> Vec<String> {
        let reim = |base: String| vec![format!("{base}_re"), format!("{base}_im")];
        match self {
            Output::DeltaE => vec!["delta_e_s".into(), "delta_e_a".into(), "delta_e_sa".into()],
            Output::DeltaEAnalytic => vec!["delta_e_s_analytic".into(), "delta_e_sa_analytic".into()],
            Output::DeltaESEnvelope => vec!["delta_e_s_env_lo".into(), "delta_e_s_env_hi".into()],
            Output::DeltaESALimit => vec!["delta_e_sa_limit".into()],
            Output::Mean(q) => reim(format!("mean_{q}")),
            Output::Var(q) => reim(format!("var_{q}")),
            Output::VarRel(q) => reim(format!("var_{q}_rel")),
            Output::Np(q) => vec![format!("np_{q}_nq"), format!("np_{q}_nre"), format!("np_{q}_nim")],
            Output::Kdq(q) => {
                let mut cols = Vec::new();
                for (i, f) in kdq_labels(q) {
                    let base = format!("kdq_{q}_{i}_{f}");
                    cols.push(format!("{base}_value"));
                    cols.extend(reim(base));
                }
                cols
            }
            Output::Pdist(q) => ["minus", "zero", "plus"]
                .iter()
                .flat_map(|s| reim(format!("pdist_{q}_{s}")))
                .collect(),
            Output::OperatorApproach => ["c_lo", "c_hi", "p_lo", "p_hi", "mean", "second_moment"]
                .iter()
                .map(|s| format!("oa_{s}"))
                .collect(),
            Output::SteadyState => ["rho11", "rho12_re", "rho12_im", "iterations", "converged"]
                .iter()
                .map(|s| format!("ss_{s}"))
                .collect(),
            Output::Thermo => vec!["w_s".into(), "q_s".into(), "w_a".into(), "q_a".into()],
        }
    }
}

/// Level labels of the KDQ entries, initial major.
pub fn kdq_labels(q: Quantity) -> Vec<(String, String)> {
    let levels: Vec<String> = if q == Quantity::Usa {
        (0..2)
            .flat_map(|l| (0..2).map(move |k| format!("{l}{k}")))
            .collect()
    } else {
        vec!["0".into(), "1".into()]
    };
    let mut out = Vec::new();
    for i in &levels {
        for f in &levels {
            out.push((i.clone(), f.clone()));
        }
    }
    out
}

impl fmt::Display for Output {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Output::DeltaE => f.write_str("delta_e"),
            Output::DeltaEAnalytic => f.write_str("delta_e_analytic"),
            Output::DeltaESEnvelope => f.write_str("delta_e_s_envelope"),
            Output::DeltaESALimit => f.write_str("delta_e_sa_limit"),
            Output::Mean(q) => write!(f, "mean_{q}"),
            Output::Var(q) => write!(f, "var_{q}"),
            Output::VarRel(q) => write!(f, "var_{q}_rel"),
            Output::Np(q) => write!(f, "np_{q}"),
            Output::Kdq(q) => write!(f, "kdq_{q}"),
            Output::Pdist(q) => write!(f, "pdist_{q}"),
            Output::OperatorApproach => f.write_str("oa"),
            Output::SteadyState => f.write_str("steady_state"),
            Output::Thermo => f.write_str("thermo"),
        }
    }
}

/// A complete experiment: base point, sweep axes (first axis slowest) and outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub preset: Preset,
    pub base: ParamSet,
    pub sweep: Vec<(Param, Grid)>,
    pub outputs: Vec<Output>,
    pub collisions: usize,
    pub out: Option<PathBuf>,
}

impl ExperimentSpec {
    /// Number of CSV rows.
    pub fn row_count(&self) -> usize {
        self.sweep.iter().map(|(_, g)| g.len()).product::<usize>() * self.collisions
    }

    /// Canonical config text; parsing it yields an identical spec.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "preset = {}", self.preset.name());
        if let Some(out) = &self.out {
            let _ = writeln!(s, "out = {}", out.display());
        }
        s.push('\n');
        self.base.render(&mut s);
        s.push_str("\n[sweep]\n");
        for (p, g) in &self.sweep {
            let _ = writeln!(s, "{p} = {g}");
        }
        s.push_str("\n[output]\n");
        let outs: Vec<String> = self.outputs.iter().map(|o| o.to_string()).collect();
        let _ = writeln!(s, "quantities = {}", outs.join(", "));
        let _ = writeln!(s, "collisions = {}", self.collisions);
        s
    }

    /// Checks every sweep axis is well-formed and the base point resolves
    /// when no axis overrides it.
    pub fn validate(&self) -> Result<()> {
        if self.outputs.is_empty() {
            return Err(Error::InvalidConfig {
                field: "quantities",
                reason: "no outputs requested".into(),
            });
        }
        if self.collisions == 0 {
            return Err(Error::InvalidConfig {
                field: "collisions",
                reason: "must be at least 1".into(),
            });
        }
        for (i, (p, g)) in self.sweep.iter().enumerate() {
            if g.is_empty() {
                return Err(Error::InvalidConfig {
                    field: "sweep",
                    reason: format!("axis {p} has no points"),
                });
            }
            if self.sweep[..i].iter().any(|(q, _)| q.slot() == p.slot()) {
                return Err(Error::InvalidConfig {
                    field: "sweep",
                    reason: format!("axis {p} duplicates another axis"),
                });
            }
            if g.values().iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidConfig {
                    field: "sweep",
                    reason: format!("axis {p} has non-finite values"),
                });
            }
        }
        if self.sweep.is_empty() {
            self.base.resolve()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Top,
    Model,
    State,
    Sweep,
    Output,
}

fn perr(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Parses config text. Unknown keys and sections are errors.
///
/// Values given in `[model]`/`[state]` override the preset; a key that the
/// preset sweeps removes that axis. A `[sweep]` section, when present,
/// replaces the preset sweep entirely.
pub fn parse_config(text: &str) -> Result<ExperimentSpec> {
    let mut section = Section::Top;
    let mut preset: Option<Preset> = None;
    let mut out: Option<PathBuf> = None;
    let mut fixed: Vec<(Param, f64, usize)> = Vec::new();
    let mut mode: Option<Mode> = None;
    let mut sweep: Option<Vec<(Param, Grid)>> = None;
    let mut sweep_lines: Vec<usize> = Vec::new();
    let mut outputs: Option<Vec<Output>> = None;
    let mut collisions: Option<usize> = None;
    let mut seen: Vec<(Section, String)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| perr(line_no, format!("malformed section header '{line}'")))?
                .trim();
            section = match name {
                "model" => Section::Model,
                "state" => Section::State,
                "sweep" => {
                    sweep.get_or_insert_with(Vec::new);
                    Section::Sweep
                }
                "output" => Section::Output,
                _ => return Err(perr(line_no, format!("unknown section [{name}]"))),
            };
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| perr(line_no, format!("expected 'key = value', found '{line}'")))?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() {
            return Err(perr(line_no, "missing key before '='"));
        }
        if value.is_empty() {
            return Err(perr(line_no, format!("missing value for '{key}'")));
        }
        if seen.iter().any(|(s, k)| *s == section && k == key) {
            return Err(perr(line_no, format!("duplicate key '{key}'")));
        }
        seen.push((section, key.to_string()));

        match section {
            Section::Top => match key {
                "preset" => {
                    preset = Some(
                        Preset::from_name(value)
                            .ok_or_else(|| perr(line_no, format!("unknown preset '{value}'")))?,
                    )
                }
                "out" => out = Some(PathBuf::from(value)),
                _ => return Err(perr(line_no, format!("unknown top-level key '{key}'"))),
            },
            Section::Model | Section::State => {
                if section == Section::Model && key == "mode" {
                    mode = Some(match value {
                        "exact" => Mode::Exact,
                        "weak" => Mode::WeaklyCoherent,
                        _ => return Err(perr(line_no, format!("mode must be 'exact' or 'weak', got '{value}'"))),
                    });
                    continue;
                }
                let p = Param::from_name(key)
                    .filter(|p| p.in_state_section() == (section == Section::State))
                    .ok_or_else(|| {
                        let sec = if section == Section::Model { "model" } else { "state" };
                        perr(line_no, format!("unknown key '{key}' in [{sec}]"))
                    })?;
                if let Some((q, _, _)) = fixed.iter().find(|(q, _, _)| q.slot() == p.slot()) {
                    return Err(perr(line_no, format!("'{key}' conflicts with '{q}'")));
                }
                let v = eval(value).map_err(|m| perr(line_no, format!("{key}: {m}")))?;
                fixed.push((p, v, line_no));
            }
            Section::Sweep => {
                let p = Param::from_name(key)
                    .ok_or_else(|| perr(line_no, format!("unknown sweep parameter '{key}'")))?;
                let g = Grid::parse(value).map_err(|m| perr(line_no, format!("{key}: {m}")))?;
                let axes = sweep.get_or_insert_with(Vec::new);
                if let Some((q, _)) = axes.iter().find(|(q, _)| q.slot() == p.slot()) {
                    return Err(perr(line_no, format!("sweep axis '{key}' conflicts with '{q}'")));
                }
                axes.push((p, g));
                sweep_lines.push(line_no);
            }
            Section::Output => match key {
                "quantities" => {
                    let list = value
                        .split(',')
                        .map(|t| t.trim())
                        .filter(|t| !t.is_empty())
                        .map(|t| Output::parse(t).map_err(|m| perr(line_no, m)))
                        .collect::<Result<Vec<_>>>()?;
                    outputs = Some(list);
                }
                "collisions" => {
                    let n = eval(value).map_err(|m| perr(line_no, format!("collisions: {m}")))?;
                    if n < 1.0 || n.fract() != 0.0 || n > 1e9 {
                        return Err(perr(line_no, format!("collisions must be a positive integer, got {n}")));
                    }
                    collisions = Some(n as usize);
                }
                _ => return Err(perr(line_no, format!("unknown key '{key}' in [output]"))),
            },
        }
    }

    let preset = preset.unwrap_or(Preset::Custom);
    let mut spec = preset.spec();
    if let Some(m) = mode {
        spec.base.mode = m;
    }
    for (p, v, _) in &fixed {
        spec.base.set(*p, *v);
        spec.sweep.retain(|(q, _)| q.slot() != p.slot());
    }
    if let Some(axes) = sweep {
        spec.sweep = axes;
    }
    if let Some(o) = outputs {
        spec.outputs = o;
    }
    if let Some(n) = collisions {
        spec.collisions = n;
    }
    if out.is_some() {
        spec.out = out;
    }
    if let Some((i, (p, _))) = spec.sweep.iter().enumerate().find(|(_, (_, g))| g.is_empty()) {
        return Err(perr(sweep_lines.get(i).copied().unwrap_or(0), format!("axis {p} has no points")));
    }
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn grids() {
        assert_eq!(Grid::parse("linspace(0, 1, 5)").unwrap().values(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(Grid::parse("periodic(0, 1, 4)").unwrap().values(), vec![0.0, 0.25, 0.5, 0.75]);
        assert_eq!(Grid::parse("[1, pi/2]").unwrap().values(), vec![1.0, PI / 2.0]);
        assert_eq!(Grid::parse("3").unwrap().values(), vec![3.0]);
        assert_eq!(Grid::parse("linspace(2, 5, 1)").unwrap().values(), vec![2.0]);
        assert!(Grid::parse("linspace(0, 1)").is_err());
        assert!(Grid::parse("linspace(0, 1, 2.5)").is_err());
        assert!(Grid::parse("[]").is_err());
        assert!(Grid::parse("[1, 2").is_err());
    }

    #[test]
    fn grid_endpoint_exact() {
        let v = Grid::Linspace(PI / 512.0, PI, 512).values();
        assert_eq!(v[0], PI / 512.0);
        assert_eq!(v[511], PI);
    }

    #[test]
    fn outputs_round_trip() {
        for s in [
            "delta_e", "delta_e_analytic", "delta_e_s_envelope", "delta_e_sa_limit", "mean_w", "var_usa",
            "var_us_rel", "np_usa", "kdq_ws", "pdist_q", "oa", "steady_state", "thermo",
        ] {
            assert_eq!(Output::parse(s).unwrap().to_string(), s);
        }
        assert!(Output::parse("np_w").is_err());
        assert!(Output::parse("pdist_usa").is_err());
        assert!(Output::parse("kdq_x").is_err());
        assert!(Output::parse("nonsense").is_err());
    }

    #[test]
    fn kdq_columns() {
        assert_eq!(Output::Kdq(Quantity::W).columns().len(), 12);
        assert_eq!(Output::Kdq(Quantity::Usa).columns().len(), 48);
        assert_eq!(Output::Kdq(Quantity::Usa).columns()[3], "kdq_usa_00_01_value");
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let e = parse_config("preset = custom\n\n[model]\ntau = pi/\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 4, .. }), "{e}");
        let e = parse_config("[model]\nfoo = 1\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
        let e = parse_config("[nope]\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }));
        let e = parse_config("[model]\ng = 1\ng = 2\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }));
        let e = parse_config("[model]\nlambda = 0.1\nlambda_frac = 0.5\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }));
        let e = parse_config("[state]\ntau = 1\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
        let e = parse_config("[model]\njunk\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn fixed_key_removes_preset_axis() {
        let spec = parse_config("preset = fig1\n[model]\ntau = pi/12\n").unwrap();
        assert!(spec.sweep.iter().all(|(p, _)| *p != Param::Tau));
        assert_eq!(spec.base.tau, PI / 12.0);
        assert_eq!(spec.sweep.len(), 2);
    }

    #[test]
    fn coherence_bound_reported() {
        let e = parse_config("[model]\nlambda_frac = 1.5\n").unwrap_err();
        match e {
            Error::CoherenceBound { value, max } => assert!((value / max - 1.5).abs() < 1e-12),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn omega_s_sets_detuning() {
        let spec = parse_config("[model]\nomega_a = 2\nomega_s = 5\n").unwrap();
        let pt = spec.base.resolve().unwrap();
        assert_eq!(pt.cfg.delta(), 3.0);
    }
}
