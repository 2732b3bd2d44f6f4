//! Sweep evaluation and CSV/metadata output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::analytic::{delta_e_s, delta_e_s_envelopes, delta_e_sa, delta_e_sa_limit, AnalyticParams};
use crate::collision::{DEFAULT_STEADY_MAX_ITER, DEFAULT_STEADY_TOL};
use crate::error::{Error, Result};
use crate::kdq::{moments, nonpositivity, KdqDistribution, Quantity, SMALL_TAU_PULSE_AREA};
use crate::linalg::ComplexMatrix;
use crate::model::Model;
use crate::smalltau::operator_approach;

use super::config::{Coherence, ExperimentSpec, Output, Param, ParamSet, ResolvedPoint};

/// Row status: evaluated normally.
pub const FLAG_OK: i64 = 0;
/// Row status: the point violates a positivity bound (ancilla or system state).
pub const FLAG_BOUND: i64 = 1;
/// Row status: the point is admissible but an output is undefined there.
pub const FLAG_UNDEFINED: i64 = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
}

impl Cell {
    pub fn as_f64(self) -> f64 {
        match self {
            Cell::Num(v) => v,
            Cell::Int(i) => i as f64,
        }
    }

    fn write(self, out: &mut String) {
        use std::fmt::Write as _;
        let _ = match self {
            Cell::Num(v) => write!(out, "{v:.16e}"),
            Cell::Int(i) => write!(out, "{i}"),
        };
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Rows whose KDQ outputs lie beyond the short-collision regime.
    pub beyond_small_tau: usize,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i].as_f64()).collect())
    }

    pub fn flagged(&self) -> usize {
        let i = self.columns.iter().position(|c| c == "flag").expect("flag column");
        self.rows.iter().filter(|r| r[i] != Cell::Int(FLAG_OK)).count()
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            for (k, c) in row.iter().enumerate() {
                if k > 0 {
                    s.push(',');
                }
                c.write(&mut s);
            }
            s.push('\n');
        }
        s
    }
}

pub fn columns(spec: &ExperimentSpec) -> Vec<String> {
    let mut cols: Vec<String> = spec.sweep.iter().map(|(p, _)| p.name().to_string()).collect();
    cols.push("collision".into());
    cols.push("flag".into());
    for o in &spec.outputs {
        cols.extend(o.columns());
    }
    cols
}

/// Grid points in row order, first axis slowest.
fn grid_points(spec: &ExperimentSpec) -> Vec<(Vec<f64>, ParamSet)> {
    let axes: Vec<(Param, Vec<f64>)> = spec.sweep.iter().map(|(p, g)| (*p, g.values())).collect();
    let mut points = vec![(Vec::new(), spec.base.clone())];
    for (p, vals) in &axes {
        let mut next = Vec::with_capacity(points.len() * vals.len());
        for (coords, ps) in &points {
            for &v in vals {
                let mut c = coords.clone();
                c.push(v);
                let mut q = ps.clone();
                q.set(*p, v);
                next.push((c, q));
            }
        }
        points = next;
    }
    points
}

fn output_width(o: Output) -> usize {
    o.columns().len()
}

fn reim(out: &mut Vec<Cell>, z: C64) {
    out.push(Cell::Num(z.re));
    out.push(Cell::Num(z.im));
}

fn kdq_checked(model: &Model, q: Quantity, rho: &ComplexMatrix) -> Result<KdqDistribution> {
    let d = model.kdq(q, rho)?;
    let expected = if q == Quantity::Usa { 16 } else { 4 };
    if d.entries.len() != expected {
        return Err(Error::InvalidConfig {
            field: "omega",
            reason: "degenerate local spectrum; KDQ columns need two distinct levels per qubit".into(),
        });
    }
    Ok(d)
}

fn eval_output(
    o: Output,
    base: &ParamSet,
    pt: &ResolvedPoint,
    model: &Model,
    rho: &ComplexMatrix,
    joint: &ComplexMatrix,
    out: &mut Vec<Cell>,
) -> Result<()> {
    let cfg = &pt.cfg;
    match o {
        Output::DeltaE => {
            let (s, a, sa) = model.energy_changes(rho, joint);
            out.extend([Cell::Num(s), Cell::Num(a), Cell::Num(sa)]);
        }
        Output::DeltaEAnalytic => {
            let p = AnalyticParams::new(cfg, rho);
            out.extend([Cell::Num(delta_e_s(&p)), Cell::Num(delta_e_sa(&p))]);
        }
        Output::DeltaESEnvelope => {
            let (lo, hi) = delta_e_s_envelopes(&AnalyticParams::new(cfg, rho));
            out.extend([Cell::Num(lo), Cell::Num(hi)]);
        }
        Output::DeltaESALimit => out.push(Cell::Num(delta_e_sa_limit(&AnalyticParams::new(cfg, rho)))),
        Output::Mean(q) => reim(out, moments(&kdq_checked(model, q, rho)?).mean),
        Output::Var(q) => reim(out, moments(&kdq_checked(model, q, rho)?).variance),
        Output::VarRel(q) => {
            let v = moments(&kdq_checked(model, q, rho)?).variance;
            let mut zero = base.clone();
            zero.lambda = Coherence::Absolute(0.0);
            zero.lambda_tilde = Coherence::Absolute(0.0);
            let m0 = Model::new(&zero.resolve()?.cfg)?;
            let v0 = moments(&kdq_checked(&m0, q, rho)?).variance;
            reim(out, v / v0);
        }
        Output::Np(q) => {
            let r = nonpositivity(&kdq_checked(model, q, rho)?)?;
            out.extend([Cell::Num(r.n_q), Cell::Num(r.n_re), Cell::Num(r.n_im)]);
        }
        Output::Kdq(q) => {
            for e in kdq_checked(model, q, rho)?.entries {
                out.push(Cell::Num(e.value));
                reim(out, e.quasiprob);
            }
        }
        Output::Pdist(q) => {
            let d = kdq_checked(model, q, rho)?;
            let tol = 1e-9 * cfg.hbar * cfg.omega_a.abs().max(cfg.omega_s.abs());
            let mut bins = [C64::new(0.0, 0.0); 3];
            for e in &d.entries {
                let k = if e.value < -tol {
                    0
                } else if e.value > tol {
                    2
                } else {
                    1
                };
                bins[k] += e.quasiprob;
            }
            for b in bins {
                reim(out, b);
            }
        }
        Output::OperatorApproach => {
            let oa = operator_approach(rho, cfg)?;
            let n = oa.values.len();
            // Values are descending; a degenerate spectrum is reported as one level.
            let (c_lo, c_hi) = (oa.values[n - 1], oa.values[0]);
            let (p_lo, p_hi) = if n == 1 { (oa.probs[0], 0.0) } else { (oa.probs[n - 1], oa.probs[0]) };
            out.extend([c_lo, c_hi, p_lo, p_hi, oa.mean(), oa.second_moment()].map(Cell::Num));
        }
        Output::SteadyState => {
            let ss = model.steady_state(DEFAULT_STEADY_TOL, DEFAULT_STEADY_MAX_ITER, &pt.rho_s)?;
            out.push(Cell::Num(ss.state[(0, 0)].re));
            reim(out, ss.state[(0, 1)]);
            out.push(Cell::Int(ss.iterations as i64));
            out.push(Cell::Int(ss.converged as i64));
        }
        Output::Thermo => {
            let t = model.thermo(rho)?;
            let nan = f64::NAN;
            out.extend(
                [t.w_s, t.q_s, t.w_a, t.q_a].map(|v| Cell::Num(v.unwrap_or(nan))),
            );
        }
    }
    Ok(())
}

fn is_bound_error(e: &Error) -> bool {
    matches!(e, Error::CoherenceBound { .. } | Error::InvalidState(_))
}

fn nan_row(prefix: Vec<Cell>, collision: usize, flag: i64, width: usize) -> Vec<Cell> {
    let mut row = prefix;
    row.push(Cell::Int(collision as i64));
    row.push(Cell::Int(flag));
    row.extend(std::iter::repeat_n(Cell::Num(f64::NAN), width));
    row
}

fn eval_point(spec: &ExperimentSpec, coords: &[f64], ps: &ParamSet) -> Result<Vec<Vec<Cell>>> {
    let prefix: Vec<Cell> = coords.iter().map(|&v| Cell::Num(v)).collect();
    let width: usize = spec.outputs.iter().map(|o| output_width(*o)).sum();
    let pt = match ps.resolve() {
        Ok(pt) => pt,
        Err(e) if is_bound_error(&e) => {
            log::debug!("point {coords:?} flagged: {e}");
            return Ok((1..=spec.collisions)
                .map(|k| nan_row(prefix.clone(), k, FLAG_BOUND, width))
                .collect());
        }
        Err(e) => return Err(e),
    };
    let model = Model::new(&pt.cfg)?;
    let mut rows = Vec::with_capacity(spec.collisions);
    let mut rho = pt.rho_s.clone();
    for k in 1..=spec.collisions {
        let (next, joint) = model.collide(&rho)?;
        let mut cells = Vec::with_capacity(width);
        let mut failure = None;
        for o in &spec.outputs {
            let start = cells.len();
            if let Err(e) = eval_output(*o, ps, &pt, &model, &rho, &joint, &mut cells) {
                cells.truncate(start);
                cells.extend(std::iter::repeat_n(Cell::Num(f64::NAN), output_width(*o)));
                failure.get_or_insert(e);
            }
        }
        let flag = match &failure {
            None => FLAG_OK,
            Some(e) if is_bound_error(e) => FLAG_BOUND,
            Some(e) => {
                log::debug!("point {coords:?} collision {k}: {e}");
                FLAG_UNDEFINED
            }
        };
        let mut row = prefix.clone();
        row.push(Cell::Int(k as i64));
        row.push(Cell::Int(flag));
        row.extend(cells);
        rows.push(row);
        rho = next;
    }
    Ok(rows)
}

/// Evaluates every grid point (in parallel) and returns rows in sweep order.
pub fn run(spec: &ExperimentSpec) -> Result<Table> {
    spec.validate()?;
    let points = grid_points(spec);
    let blocks: Vec<Vec<Vec<Cell>>> = points
        .par_iter()
        .map(|(coords, ps)| eval_point(spec, coords, ps))
        .collect::<Result<_>>()?;
    let uses_split = spec
        .outputs
        .iter()
        .any(|o| o.quantity().is_some_and(|q| q.needs_split()) || *o == Output::Thermo);
    let beyond_small_tau = if uses_split {
        points
            .iter()
            .filter(|(_, ps)| {
                ps.resolve()
                    .map(|pt| pt.cfg.pulse_area() > SMALL_TAU_PULSE_AREA * (1.0 + 1e-12))
                    .unwrap_or(false)
            })
            .count()
            * spec.collisions
    } else {
        0
    };
    let table = Table {
        columns: columns(spec),
        rows: blocks.into_iter().flatten().collect(),
        beyond_small_tau,
    };
    let flagged = table.flagged();
    if flagged > 0 {
        log::warn!("{flagged} of {} rows flagged (bound violated or output undefined)", table.rows.len());
    }
    if beyond_small_tau > 0 {
        log::warn!(
            "{beyond_small_tau} rows have pulse area above pi/6; heat/work quasiprobabilities there lie outside the short-collision regime"
        );
    }
    Ok(table)
}

/// Sidecar text: comment header followed by the canonical config.
pub fn metadata(spec: &ExperimentSpec, table: &Table) -> String {
    let stamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut s = String::new();
    s.push_str(&format!("# kdcoll {}\n", env!("CARGO_PKG_VERSION")));
    s.push_str(&format!("# generated_unix = {stamp}\n"));
    s.push_str(&format!("# preset: {} ({})\n", spec.preset.name(), spec.preset.describe()));
    s.push_str(&format!("# rows = {}, flagged = {}\n", table.rows.len(), table.flagged()));
    if table.beyond_small_tau > 0 {
        s.push_str(&format!("# rows beyond pulse area pi/6 = {}\n", table.beyond_small_tau));
    }
    for note in spec.preset.notes(spec) {
        s.push_str(&format!("# {note}\n"));
    }
    s.push_str(&spec.to_config_string());
    s
}

pub fn meta_path(csv: &Path) -> PathBuf {
    let mut s = csv.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

/// Writes `path` and `path.meta`.
pub fn write_outputs(spec: &ExperimentSpec, table: &Table, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut f = fs::File::create(path)?;
    f.write_all(table.to_csv().as_bytes())?;
    fs::write(meta_path(path), metadata(spec, table))?;
    Ok(())
}

/// Output path: the config's `out`, else `<preset>.csv`.
pub fn default_out(spec: &ExperimentSpec) -> PathBuf {
    spec.out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.csv", spec.preset.name())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::config::parse_config;

    #[test]
    fn empty_sweep_gives_single_row() {
        let spec = parse_config("preset = custom\n").unwrap();
        let t = run(&spec).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.columns[..2], ["collision".to_string(), "flag".to_string()]);
    }

    #[test]
    fn bound_violation_flags_row() {
        let spec = parse_config("[sweep]\nlambda_frac = [0.5, 2]\n[output]\nquantities = delta_e\n").unwrap();
        let t = run(&spec).unwrap();
        let flags = t.column("flag").unwrap();
        assert_eq!(flags, vec![0.0, 1.0]);
        assert!(t.column("delta_e_s").unwrap()[1].is_nan());
    }

    #[test]
    fn undefined_output_flags_row() {
        let spec = parse_config("[model]\ndelta = 1\n[output]\nquantities = mean_w, delta_e\n").unwrap();
        let t = run(&spec).unwrap();
        assert_eq!(t.column("flag").unwrap(), vec![2.0]);
        assert!(t.column("mean_w_re").unwrap()[0].is_nan());
        assert!(t.column("delta_e_s").unwrap()[0].is_finite());
    }

    #[test]
    fn row_order_first_axis_major() {
        let spec = parse_config("[sweep]\ng = [1, 2]\ntau = [0.1, 0.2, 0.3]\n").unwrap();
        let t = run(&spec).unwrap();
        assert_eq!(t.column("g").unwrap(), vec![1.0, 1.0, 1.0, 2.0, 2.0, 2.0]);
        assert_eq!(t.column("tau").unwrap(), vec![0.1, 0.2, 0.3, 0.1, 0.2, 0.3]);
    }

    #[test]
    fn collisions_expand_rows() {
        let spec = parse_config("[model]\nlambda_frac = 0.5\n[output]\nquantities = delta_e, thermo\ncollisions = 3\n").unwrap();
        let t = run(&spec).unwrap();
        assert_eq!(t.column("collision").unwrap(), vec![1.0, 2.0, 3.0]);
        let ws = t.column("w_s").unwrap();
        let wa = t.column("w_a").unwrap();
        for (a, b) in ws.iter().zip(&wa) {
            assert!((a + b).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_number_format() {
        let t = Table {
            columns: vec!["a".into(), "flag".into()],
            rows: vec![vec![Cell::Num(0.5), Cell::Int(0)]],
            beyond_small_tau: 0,
        };
        assert_eq!(t.to_csv(), "a,flag\n5.0000000000000000e-1,0\n");
    }
}
