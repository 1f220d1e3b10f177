//! Full pipeline per ε (profile, initial data, time stepping, diagnostics
//! against the front-tracked reference) and ε-convergence studies.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::calibration::{build_calibration, calibration_triplet, verify_calibration, CalibrationReport};
use crate::config::RunConfig;
use crate::curve::{contact_points, region_indicator, FrontTracker, InterfaceCurve, SignedDistance};
use crate::diagnostics::{
    entropy_report, extract_interface, harmonic_flow_residual, harmonic_region, minimal_pair_check,
    ExtractOptions,
};
use crate::energetics::{gl_energy, EnergeticsContext};
use crate::error::{Error, Result};
use crate::grid::{DiskField, PolarGrid};
use crate::profile::{initial_data, Profile};
use crate::solver::{SolverState, Stepper};

/// Column names of diagnostics.csv.
pub const DIAG_COLUMNS: [&str; 23] = [
    "time",
    "E_eps",
    "bulk",
    "boundary",
    "dissipation_ledger",
    "E_rel",
    "B_rel",
    "bulk_L1",
    "coer_a",
    "coer_b",
    "coer_c",
    "coer_d",
    "coer_e",
    "coer_f",
    "hausdorff",
    "contact_angle_err",
    "minimal_pair_gap",
    "harmonic_residual",
    "perimeter_gap",
    "split_residual",
    "chain_residual",
    "tilt_margin",
    "sup_norm",
];

/// One diagnostics row. Fields that cannot be evaluated are None (written as
/// "nan").
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagRow {
    pub time: f64,
    pub energy: f64,
    pub bulk: f64,
    pub boundary: f64,
    pub ledger: f64,
    pub e_rel: f64,
    pub b_rel: f64,
    pub bulk_l1: f64,
    pub coercivity: [f64; 6],
    pub hausdorff: Option<f64>,
    pub contact_angle_err: Option<f64>,
    pub minimal_pair_gap: Option<f64>,
    pub harmonic_residual: Option<f64>,
    pub perimeter_gap: Option<f64>,
    pub split_residual: f64,
    pub chain_residual: f64,
    pub tilt_margin: f64,
    pub sup_norm: f64,
}

fn fmt_f(x: f64) -> String {
    format!("{x:.17e}")
}

fn fmt_o(x: Option<f64>) -> String {
    x.map(fmt_f).unwrap_or_else(|| "nan".into())
}

impl DiagRow {
    pub fn csv_line(&self) -> String {
        let mut v = vec![
            fmt_f(self.time),
            fmt_f(self.energy),
            fmt_f(self.bulk),
            fmt_f(self.boundary),
            fmt_f(self.ledger),
            fmt_f(self.e_rel),
            fmt_f(self.b_rel),
            fmt_f(self.bulk_l1),
        ];
        v.extend(self.coercivity.iter().map(|x| fmt_f(*x)));
        v.extend(
            [
                self.hausdorff,
                self.contact_angle_err,
                self.minimal_pair_gap,
                self.harmonic_residual,
                self.perimeter_gap,
            ]
            .iter()
            .map(|x| fmt_o(*x)),
        );
        v.extend([self.split_residual, self.chain_residual, self.tilt_margin, self.sup_norm].map(fmt_f));
        v.join(",")
    }
}

pub fn diagnostics_csv(rows: &[DiagRow]) -> String {
    let mut s = DIAG_COLUMNS.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.csv_line());
        s.push('\n');
    }
    s
}

/// Per-run summary written to summary.json.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub eps: f64,
    pub grid: [usize; 2],
    pub tau: f64,
    pub steps: usize,
    pub alpha_deg: f64,
    pub c_f: f64,
    /// E_rel(0) + B_rel(0).
    pub initial_entropy: f64,
    pub sup_e_rel: f64,
    pub sup_b_rel: f64,
    pub sup_bulk_l1: f64,
    pub final_hausdorff: Option<f64>,
    pub sup_hausdorff: Option<f64>,
    pub final_contact_angle_err: Option<f64>,
    pub max_minimal_pair_gap: Option<f64>,
    pub final_harmonic_residual: Option<f64>,
    pub final_perimeter_gap: Option<f64>,
    pub max_energy_increase: f64,
    pub max_sup_norm: f64,
    pub r_n: f64,
    /// max over steps of E(u^{n+1}) + ‖Δu‖²/(2τ_MM) − E(u^n) (MinMove only).
    pub max_one_step_defect: Option<f64>,
    pub dissipation_residual: f64,
    pub relative_dissipation_residual: f64,
    pub max_split_residual: f64,
    pub max_chain_residual: f64,
    pub min_tilt_margin: f64,
    /// max over times and terms of term − multiplier·E_rel.
    pub max_coercivity_excess: f64,
}

pub struct RunOutput {
    pub summary: RunSummary,
    pub rows: Vec<DiagRow>,
    pub curves: Vec<InterfaceCurve>,
    pub final_field: DiskField,
}

/// Objects shared by every stage of one ε-run.
pub struct RunSetup {
    pub ctx: Arc<EnergeticsContext>,
    pub grid: Arc<PolarGrid>,
    pub curve: InterfaceCurve,
    pub eps: f64,
    pub u0: DiskField,
}

pub fn setup_run(cfg: &RunConfig, idx: usize) -> Result<RunSetup> {
    let eps = cfg.epsilons[idx];
    let mp = cfg.manifold.build()?;
    let ctx = Arc::new(EnergeticsContext::new(mp, &cfg.energetics())?);
    let (nr, nt) = cfg.grid_for(idx);
    let grid = Arc::new(PolarGrid::new(cfg.r_omega, nr, nt)?);
    let curve = cfg.curve.build(cfg.r_omega, cfg.curve_nodes)?;
    curve.validate()?;
    if !curve.closed {
        let (_, _, (a0, a1)) = contact_points(&curve);
        for a in [a0, a1] {
            if (a.to_degrees() - cfg.alpha_deg).abs() > 0.5 {
                return Err(Error::Config(format!(
                    "initial curve meets the boundary at {:.3} deg, alpha = {}",
                    a.to_degrees(),
                    cfg.alpha_deg
                )));
            }
        }
    }
    let sd = SignedDistance::new(&curve)?;
    let profile = Profile::standard(&ctx)?;
    let phases = cfg.phases.resolve(&ctx)?;
    let u0 = initial_data(&ctx, &grid, &sd, &profile, eps, cfg.beta, &phases)?;
    Ok(RunSetup {
        ctx,
        grid,
        curve,
        eps,
        u0,
    })
}

/// Diagnostics of `u` against the reference `curve` at the same time.
#[allow(clippy::too_many_arguments)]
pub fn diagnose(
    cfg: &RunConfig,
    ctx: &EnergeticsContext,
    grid: &Arc<PolarGrid>,
    eps: f64,
    state: &SolverState,
    prev: Option<(&DiskField, f64)>,
    curve: &InterfaceCurve,
) -> Result<DiagRow> {
    let u = &state.u;
    let cal = build_calibration(curve, None, grid, &cfg.calibration_params())?;
    let chi = region_indicator(grid, curve)?.values;
    let rep = entropy_report(u, &cal, &chi, ctx, eps, state.time);
    let opts = ExtractOptions {
        angle_window: cfg.diagnostics.angle_window,
        scan_levels: cfg.diagnostics.perimeter_scan,
        ..ExtractOptions::for_eps(eps, ctx.c_f)
    };
    let est = extract_interface(u, ctx, Some(curve), &opts)?;
    let angle_err = est.contact_angles.map(|(a, b)| {
        let al = cfg.alpha_deg;
        (a.to_degrees() - al).abs().max((b.to_degrees() - al).abs())
    });
    let gaps = minimal_pair_check(u, curve, &ctx.mp, cfg.diagnostics.probe_factor * eps)?;
    let gap = gaps.iter().flatten().map(|g| g.abs()).fold(None, |m: Option<f64>, g| {
        Some(m.map_or(g, |x| x.max(g)))
    });
    let harm = prev.map(|(u_prev, dt)| {
        let region = harmonic_region(&cal.dist, cfg.diagnostics.margin_factor * eps);
        harmonic_flow_residual(u_prev, u, dt, ctx, eps, &region)
    });
    let (bulk, boundary) = gl_energy(ctx, u, grid, eps);
    Ok(DiagRow {
        time: state.time,
        energy: bulk + boundary,
        bulk,
        boundary,
        ledger: state.dissipation_ledger,
        e_rel: rep.e_rel,
        b_rel: rep.b_rel,
        bulk_l1: rep.bulk_l1,
        coercivity: rep.coercivity,
        hausdorff: est.hausdorff,
        contact_angle_err: angle_err,
        minimal_pair_gap: gap,
        harmonic_residual: harm,
        perimeter_gap: est.perimeter_gap,
        split_residual: rep.split_residual,
        chain_residual: rep.chain_residual,
        tilt_margin: rep.tilt_margin,
        sup_norm: u.sup_norm(),
    })
}

fn steps_for(t: f64, tau: f64) -> usize {
    (t / tau - 1e-9).ceil().max(0.0) as usize
}

/// Run the pipeline for `cfg.epsilons[idx]`. With `out`, writes
/// diagnostics.csv, curves.csv, summary.json and field snapshots there.
pub fn run_eps(cfg: &RunConfig, idx: usize, out: Option<&Path>) -> Result<RunOutput> {
    let setup = setup_run(cfg, idx)?;
    let RunSetup {
        ctx,
        grid,
        curve,
        eps,
        u0,
    } = setup;
    let stepper = Stepper::new(ctx.clone(), grid.clone(), eps, cfg.scheme.clone())?;
    let tau = stepper.tau;
    let n_steps = steps_for(cfg.t_final, tau);
    let diag_stride = (cfg.diag_every / tau).round().max(1.0) as usize;
    let snap_stride = if cfg.snapshot_every > 0.0 {
        (cfg.snapshot_every / tau).round().max(1.0) as usize
    } else {
        0
    };
    let alpha = cfg.alpha_deg.to_radians();
    let mut tracker = FrontTracker::new(curve, alpha);
    let mut state = SolverState::new(u0, &ctx, eps);
    if let Some(dir) = out {
        std::fs::create_dir_all(dir.join("fields"))?;
        state.u.write_snapshot(&dir.join("fields").join("u_0"), 0.0, eps)?;
    }
    let mut rows = vec![diagnose(cfg, &ctx, &grid, eps, &state, None, &tracker.curve)?];
    let mut curves = vec![tracker.curve.clone()];
    let mut max_inc: f64 = 0.0;
    let mut max_sup = state.u.sup_norm();
    let mut one_step: Option<f64> = None;
    let mut prev = state.u.clone();
    for n in 1..=n_steps {
        if n % diag_stride == 0 || n == n_steps {
            prev.values.copy_from_slice(&state.u.values);
        }
        let rec = stepper.step(&mut state)?;
        max_inc = max_inc.max(rec.energy_after - rec.energy_before);
        max_sup = max_sup.max(state.u.sup_norm());
        if cfg.scheme.scheme == crate::solver::Scheme::MinMove {
            let d = rec.energy_after + rec.penalty - rec.energy_before;
            one_step = Some(one_step.map_or(d, |m: f64| m.max(d)));
        }
        if n % diag_stride == 0 || n == n_steps {
            tracker.advance_to(state.time)?;
            rows.push(diagnose(cfg, &ctx, &grid, eps, &state, Some((&prev, tau)), &tracker.curve)?);
            curves.push(tracker.curve.clone());
        }
        if let Some(dir) = out {
            if (snap_stride > 0 && n % snap_stride == 0) || n == n_steps {
                state
                    .u
                    .write_snapshot(&dir.join("fields").join(format!("u_{n}")), state.time, eps)?;
            }
        }
    }
    let e0 = state.energy_history[0].1;
    let dres = (state.energy() - e0 + state.dissipation_ledger).abs();
    let rel = dres / e0.abs().max(f64::MIN_POSITIVE);
    if let Some(tol) = cfg.tol_dissip {
        if rel > tol {
            return Err(Error::DissipationMismatch { residual: rel, tol });
        }
    }
    let mult = crate::diagnostics::coercivity_multipliers(cfg.calibration.c_decay);
    let omax = |f: &dyn Fn(&DiagRow) -> Option<f64>| -> Option<f64> {
        rows.iter().filter_map(f).fold(None, |m, v| Some(m.map_or(v, |x: f64| x.max(v))))
    };
    let last = rows.last().unwrap();
    let summary = RunSummary {
        eps,
        grid: [grid.n_r, grid.n_theta],
        tau,
        steps: n_steps,
        alpha_deg: cfg.alpha_deg,
        c_f: ctx.c_f,
        initial_entropy: rows[0].e_rel + rows[0].b_rel,
        sup_e_rel: rows.iter().map(|r| r.e_rel).fold(f64::NEG_INFINITY, f64::max),
        sup_b_rel: rows.iter().map(|r| r.b_rel).fold(f64::NEG_INFINITY, f64::max),
        sup_bulk_l1: rows.iter().map(|r| r.bulk_l1).fold(f64::NEG_INFINITY, f64::max),
        final_hausdorff: last.hausdorff,
        sup_hausdorff: omax(&|r| r.hausdorff),
        final_contact_angle_err: last.contact_angle_err,
        max_minimal_pair_gap: omax(&|r| r.minimal_pair_gap),
        final_harmonic_residual: last.harmonic_residual,
        final_perimeter_gap: last.perimeter_gap,
        max_energy_increase: max_inc,
        max_sup_norm: max_sup,
        r_n: stepper.r_trunc,
        max_one_step_defect: one_step,
        dissipation_residual: dres,
        relative_dissipation_residual: rel,
        max_split_residual: rows.iter().map(|r| r.split_residual).fold(0.0, f64::max),
        max_chain_residual: rows.iter().map(|r| r.chain_residual).fold(0.0, f64::max),
        min_tilt_margin: rows.iter().map(|r| r.tilt_margin).fold(f64::INFINITY, f64::min),
        max_coercivity_excess: rows
            .iter()
            .flat_map(|r| r.coercivity.iter().zip(mult).map(move |(t, m)| t - m * r.e_rel))
            .fold(f64::NEG_INFINITY, f64::max),
    };
    if let Some(dir) = out {
        std::fs::write(dir.join("diagnostics.csv"), diagnostics_csv(&rows))?;
        std::fs::write(dir.join("curves.csv"), curves_csv(&curves))?;
        std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    }
    Ok(RunOutput {
        summary,
        rows,
        curves,
        final_field: state.u,
    })
}

/// One row per curve: time, node count, then x0, y0, x1, y1, …
pub fn curves_csv(curves: &[InterfaceCurve]) -> String {
    let mut s = String::from("time,nodes,coords\n");
    for c in curves {
        let _ = write!(s, "{},{}", fmt_f(c.time), c.nodes.len());
        for p in &c.nodes {
            let _ = write!(s, ",{},{}", fmt_f(p[0]), fmt_f(p[1]));
        }
        s.push('\n');
    }
    s
}

pub fn eps_dir(root: &Path, eps: f64) -> PathBuf {
    root.join(format!("eps_{eps}"))
}

/// Run every ε of the config into `<output_dir>/eps_<ε>/`.
pub fn simulate(cfg: &RunConfig) -> Result<Vec<RunSummary>> {
    std::fs::create_dir_all(&cfg.output_dir)?;
    std::fs::write(cfg.output_dir.join("config.json"), cfg.to_json())?;
    let mut out = Vec::new();
    for (i, eps) in cfg.epsilons.iter().enumerate() {
        let dir = eps_dir(&cfg.output_dir, *eps);
        out.push(with_threads(cfg, || run_eps(cfg, i, Some(&dir)))?.summary);
    }
    Ok(out)
}

fn with_threads<R: Send>(cfg: &RunConfig, f: impl FnOnce() -> R + Send) -> R {
    if cfg.threads > 0 {
        crate::par::with_threads(cfg.threads, f)
    } else {
        f()
    }
}

/// Calibration condition report at time `t` for the reference curve of the
/// config, on the grid of `cfg.epsilons[idx]`; time derivatives by central
/// differences with step `dt`.
pub fn calibrate_check(cfg: &RunConfig, idx: usize, t: f64, dt: f64) -> Result<CalibrationReport> {
    if !(dt > 0.0) || t < 2.0 * dt {
        return Err(Error::Config("calibrate-check needs dt > 0 and t >= 2 dt".into()));
    }
    let (nr, nt) = cfg.grid_for(idx);
    let grid = Arc::new(PolarGrid::new(cfg.r_omega, nr, nt)?);
    let curve = cfg.curve.build(cfg.r_omega, cfg.curve_nodes)?;
    let mut tr = FrontTracker::new(curve, cfg.alpha_deg.to_radians());
    let mut curves = Vec::with_capacity(5);
    for k in 0..5 {
        tr.advance_to(t + (k as f64 - 2.0) * dt)?;
        curves.push(tr.curve.clone());
    }
    let (prev, cur, next) = calibration_triplet(
        [&curves[0], &curves[1], &curves[2], &curves[3], &curves[4]],
        &grid,
        &cfg.calibration_params(),
    )?;
    Ok(verify_calibration(&cur, &prev, &next))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileDump {
    pub c_f: f64,
    pub truncation: f64,
    pub t: Vec<f64>,
    pub alpha: Vec<f64>,
    pub alpha_trunc: Vec<f64>,
}

/// Samples of the heteroclinic profile and its truncation on [−span, span].
pub fn profile_dump(cfg: &RunConfig, l: f64, span: f64, samples: usize) -> Result<ProfileDump> {
    let mp = cfg.manifold.build()?;
    let ctx = EnergeticsContext::new(mp, &cfg.energetics())?;
    let p = Profile::standard(&ctx)?;
    let tp = p.truncate(l)?;
    let n = samples.max(2);
    let t: Vec<f64> = (0..n).map(|i| -span + 2.0 * span * i as f64 / (n - 1) as f64).collect();
    Ok(ProfileDump {
        c_f: ctx.c_f,
        truncation: l,
        alpha: t.iter().map(|&x| p.eval(x).0).collect(),
        alpha_trunc: t.iter().map(|&x| tp.eval(x).0).collect(),
        t,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Jackknife (leave-one-out) 95% interval for the slope.
    pub interval: (f64, f64),
}

fn lsq(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let s = sxy / sxx;
    (s, my - s * mx)
}

/// Least squares of log value against log ε.
pub fn fit_slope(pairs: &[(f64, f64)]) -> Result<SlopeFit> {
    if pairs.len() < 3 {
        return Err(Error::Requires3Epsilons);
    }
    for &(e, v) in pairs {
        if !(e > 0.0) {
            return Err(Error::NonPositiveValue(e));
        }
        if !(v > 0.0) {
            return Err(Error::NonPositiveValue(v));
        }
    }
    let x: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let (slope, intercept) = lsq(&x, &y);
    let n = pairs.len();
    let loo: Vec<f64> = (0..n)
        .map(|i| {
            let xs: Vec<f64> = x.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| *v).collect();
            let ys: Vec<f64> = y.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| *v).collect();
            lsq(&xs, &ys).0
        })
        .collect();
    let mean = loo.iter().sum::<f64>() / n as f64;
    let var = (n as f64 - 1.0) / n as f64 * loo.iter().map(|s| (s - mean).powi(2)).sum::<f64>();
    let half = 1.96 * var.sqrt();
    Ok(SlopeFit {
        slope,
        intercept,
        interval: (slope - half, slope + half),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub eps: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<RunSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// Quantity name → fit; absent when fewer than three runs produced a
    /// positive value.
    pub slopes: std::collections::BTreeMap<String, SlopeFit>,
}

/// Quantities fitted against ε.
pub const FITTED: [&str; 6] = [
    "sup_e_rel",
    "sup_b_rel",
    "sup_bulk_l1",
    "initial_entropy",
    "sup_hausdorff",
    "final_perimeter_gap",
];

fn quantity(s: &RunSummary, name: &str) -> Option<f64> {
    match name {
        "sup_e_rel" => Some(s.sup_e_rel),
        "sup_b_rel" => Some(s.sup_b_rel),
        "sup_bulk_l1" => Some(s.sup_bulk_l1),
        "initial_entropy" => Some(s.initial_entropy),
        "sup_hausdorff" => s.sup_hausdorff,
        "final_perimeter_gap" => s.final_perimeter_gap,
        _ => None,
    }
}

pub fn table_from(rows: Vec<ConvergenceRow>) -> ConvergenceTable {
    let mut slopes = std::collections::BTreeMap::new();
    for name in FITTED {
        let pairs: Vec<(f64, f64)> = rows
            .iter()
            .filter_map(|r| r.summary.as_ref().and_then(|s| quantity(s, name)).map(|v| (r.eps, v)))
            .collect();
        if let Ok(f) = fit_slope(&pairs) {
            slopes.insert(name.to_string(), f);
        }
    }
    ConvergenceTable { rows, slopes }
}

/// Run all ε (sequentially, each into its own directory when `write`), then
/// fit slopes. Individual failures are recorded in the table.
pub fn converge(cfg: &RunConfig, write: bool) -> Result<ConvergenceTable> {
    if cfg.epsilons.len() < 3 {
        return Err(Error::Requires3Epsilons);
    }
    if write {
        std::fs::create_dir_all(&cfg.output_dir)?;
        std::fs::write(cfg.output_dir.join("config.json"), cfg.to_json())?;
    }
    let mut rows = Vec::new();
    for (i, eps) in cfg.epsilons.iter().enumerate() {
        let dir = eps_dir(&cfg.output_dir, *eps);
        let res = with_threads(cfg, || run_eps(cfg, i, if write { Some(dir.as_path()) } else { None }));
        rows.push(match res {
            Ok(o) => ConvergenceRow {
                eps: *eps,
                summary: Some(o.summary),
                failure: None,
            },
            Err(e) => ConvergenceRow {
                eps: *eps,
                summary: None,
                failure: Some(e.to_string()),
            },
        });
    }
    let table = table_from(rows);
    if write {
        let mut f = std::fs::File::create(cfg.output_dir.join("convergence.json"))?;
        f.write_all(serde_json::to_string_pretty(&table)?.as_bytes())?;
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_exact_power_laws() {
        let eps = [0.1, 0.05, 0.025];
        let f = fit_slope(&eps.map(|e| (e, 3.0 * e))).unwrap();
        assert!((f.slope - 1.0).abs() < 1e-12);
        assert!((f.interval.1 - f.interval.0).abs() < 1e-10);
        let f = fit_slope(&eps.map(|e| (e, 2.0 * e.sqrt()))).unwrap();
        assert!((f.slope - 0.5).abs() < 1e-12);
        let f = fit_slope(&eps.map(|e| (e, 7.0))).unwrap();
        assert!(f.slope.abs() < 1e-12);
    }

    #[test]
    fn slope_errors() {
        assert_eq!(fit_slope(&[(0.1, 1.0), (0.05, 0.5)]).unwrap_err(), Error::Requires3Epsilons);
        assert_eq!(
            fit_slope(&[(0.1, 1.0), (0.05, 0.0), (0.025, 1.0)]).unwrap_err(),
            Error::NonPositiveValue(0.0)
        );
    }

    #[test]
    fn noisy_interval_covers() {
        let pts = [(0.1, 0.11), (0.05, 0.048), (0.025, 0.026), (0.0125, 0.0124)];
        let f = fit_slope(&pts).unwrap();
        assert!(f.interval.0 < f.slope && f.slope < f.interval.1);
        assert!(f.interval.0 < 1.0 && 1.0 < f.interval.1 + 0.1);
    }

    #[test]
    fn converge_needs_three() {
        let cfg = RunConfig {
            epsilons: vec![0.1],
            ..RunConfig::default()
        };
        assert_eq!(converge(&cfg, false).unwrap_err(), Error::Requires3Epsilons);
    }

    #[test]
    fn zero_time_run() {
        let cfg = RunConfig {
            epsilons: vec![0.1],
            t_final: 0.0,
            ..RunConfig::default()
        };
        let o = run_eps(&cfg, 0, None).unwrap();
        assert_eq!(o.rows.len(), 1);
        assert_eq!(o.summary.steps, 0);
        assert_eq!(o.curves.len(), 1);
    }
}
