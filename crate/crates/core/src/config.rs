//! JSON run configuration with dotted-path overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::calibration::CalibrationParams;
use crate::curve::CurveSpec;
use crate::energetics::{EnergeticsConfig, EnergeticsContext};
use crate::error::{Error, Result};
use crate::manifolds::{ManifoldConfig, VecK};
use crate::profile::{default_pair, Phases};
use crate::solver::SchemeParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum PhaseSpec {
    /// Minimal pair; defaults to the wells (points) or a radially aligned pair.
    Pair {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        minus: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        plus: Option<Vec<f64>>,
    },
    Angular {
        offset: f64,
        gradient: [f64; 2],
        mismatch: f64,
    },
}

impl Default for PhaseSpec {
    fn default() -> Self {
        PhaseSpec::Pair {
            minus: None,
            plus: None,
        }
    }
}

impl PhaseSpec {
    pub fn resolve(&self, ctx: &EnergeticsContext) -> Result<Phases> {
        match self {
            PhaseSpec::Pair { minus, plus } => {
                let (dm, dp) = default_pair(ctx)?;
                let pick = |v: &Option<Vec<f64>>, d: VecK| -> VecK {
                    v.as_ref().map(|x| x.iter().copied().collect()).unwrap_or(d)
                };
                Ok(Phases::Pair(pick(minus, dm), pick(plus, dp)))
            }
            PhaseSpec::Angular {
                offset,
                gradient,
                mismatch,
            } => Ok(Phases::Angular {
                offset: *offset,
                gradient: *gradient,
                mismatch: *mismatch,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsConfig {
    /// Minimal-pair probe offset in units of ε.
    pub probe_factor: f64,
    /// Harmonic-residual margin in units of ε.
    pub margin_factor: f64,
    pub angle_window: f64,
    pub perimeter_scan: usize,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig {
            probe_factor: 6.0,
            margin_factor: 8.0,
            angle_window: 0.1,
            perimeter_scan: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub manifold: ManifoldConfig,
    pub alpha_deg: f64,
    pub lambda_b: f64,
    pub tail_stiffness: f64,
    pub epsilons: Vec<f64>,
    pub r_omega: f64,
    /// N_r = ⌈cells_per_eps · R_Ω / ε⌉ unless `grids` is given.
    pub cells_per_eps: f64,
    /// N_θ = ⌈theta_per_eps / ε⌉ rounded up to even.
    pub theta_per_eps: f64,
    /// Explicit (N_r, N_θ) per ε.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grids: Option<Vec<[usize; 2]>>,
    pub scheme: SchemeParams,
    pub curve: CurveSpec,
    pub curve_nodes: usize,
    pub phases: PhaseSpec,
    pub beta: f64,
    pub t_final: f64,
    pub diag_every: f64,
    /// Snapshot interval in time; 0 writes only the first and last fields.
    pub snapshot_every: f64,
    pub output_dir: PathBuf,
    pub seed: u64,
    /// 0 leaves the thread pool at its default size.
    pub threads: usize,
    pub calibration: CalibrationOptions,
    pub diagnostics: DiagnosticsConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol_dissip: Option<f64>,
}

/// Calibration knobs; the angle comes from the run's α.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationOptions {
    pub c_decay: f64,
    pub blend_radius: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_theta: Option<f64>,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        let p = CalibrationParams::default();
        CalibrationOptions {
            c_decay: p.c_decay,
            blend_radius: p.blend_radius,
            delta_theta: p.delta_theta,
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            manifold: ManifoldConfig::mp(),
            alpha_deg: 90.0,
            lambda_b: 0.5,
            tail_stiffness: 1.0,
            epsilons: vec![0.1, 0.05, 0.025],
            r_omega: 1.0,
            cells_per_eps: 8.0,
            theta_per_eps: 25.6,
            grids: None,
            scheme: SchemeParams::default(),
            curve: CurveSpec::Diameter,
            curve_nodes: 128,
            phases: PhaseSpec::default(),
            beta: 0.5,
            t_final: 0.2,
            diag_every: 0.01,
            snapshot_every: 0.05,
            output_dir: PathBuf::from("runs/default"),
            seed: 0,
            threads: 0,
            calibration: CalibrationOptions::default(),
            diagnostics: DiagnosticsConfig::default(),
            tol_dissip: None,
        }
    }
}

fn ceil_tol(x: f64) -> usize {
    (x - 1e-9).ceil().max(1.0) as usize
}

impl RunConfig {
    /// Named sweep configurations: "mp90" (diameter), "mp60" (arc), "cc60"
    /// (arc, circle wells, phase φ = y on both sides). All
    /// three step with c_tau = 0.05.
    pub fn preset(name: &str) -> Result<Self> {
        let mut c = RunConfig::default();
        c.scheme.c_tau = 0.05;
        match name {
            "mp90" => {}
            "mp60" => {
                c.alpha_deg = 60.0;
                c.curve = CurveSpec::arc60(1.0);
            }
            "cc60" => {
                c.manifold = ManifoldConfig::cc();
                c.alpha_deg = 60.0;
                c.curve = CurveSpec::arc60(1.0);
                c.phases = PhaseSpec::Angular {
                    offset: 0.0,
                    gradient: [0.0, 1.0],
                    mismatch: 0.0,
                };
            }
            _ => return Err(Error::Config(format!("unknown preset {name}"))),
        }
        Ok(c)
    }

    pub fn from_json(text: &str, overrides: &[String]) -> Result<Self> {
        let mut v: Value = serde_json::from_str(text)?;
        for o in overrides {
            apply_override(&mut v, o)?;
        }
        let c: RunConfig = serde_json::from_value(v)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text, overrides)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn grid_for(&self, idx: usize) -> (usize, usize) {
        if let Some(g) = &self.grids {
            return (g[idx][0], g[idx][1]);
        }
        let eps = self.epsilons[idx];
        let nr = ceil_tol(self.cells_per_eps * self.r_omega / eps);
        let nt = ceil_tol(self.theta_per_eps / eps);
        (nr, nt + nt % 2)
    }

    pub fn energetics(&self) -> EnergeticsConfig {
        EnergeticsConfig {
            alpha_deg: self.alpha_deg,
            lambda_b: self.lambda_b,
            tail_stiffness: self.tail_stiffness,
        }
    }

    pub fn calibration_params(&self) -> CalibrationParams {
        CalibrationParams {
            alpha_deg: self.alpha_deg,
            c_decay: self.calibration.c_decay,
            blend_radius: self.calibration.blend_radius,
            delta_theta: self.calibration.delta_theta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.alpha_deg > 0.0 && self.alpha_deg <= 90.0) {
            return bad(format!("alpha = {} outside (0, 90]", self.alpha_deg));
        }
        if self.epsilons.is_empty() || self.epsilons.iter().any(|e| !(*e > 0.0)) {
            return bad("epsilons must be a non-empty list of positive values".into());
        }
        if !(self.r_omega > 0.0) {
            return bad("r_omega must be positive".into());
        }
        if let Some(g) = &self.grids {
            if g.len() != self.epsilons.len() {
                return bad("grids must list one (N_r, N_theta) per epsilon".into());
            }
        }
        for (i, eps) in self.epsilons.iter().enumerate() {
            let (nr, _) = self.grid_for(i);
            let dr = self.r_omega / nr as f64;
            if dr > eps / 4.0 * (1.0 + 1e-12) {
                return bad(format!("resolution rule violated: dr = {dr} > eps/4 = {}", eps / 4.0));
            }
        }
        if !(self.t_final >= 0.0) || !(self.diag_every > 0.0) || !(self.snapshot_every >= 0.0) {
            return bad("t_final >= 0, diag_every > 0, snapshot_every >= 0 required".into());
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return bad(format!("beta = {} outside (0, 1)", self.beta));
        }
        if self.curve_nodes < 8 {
            return bad("curve_nodes must be at least 8".into());
        }
        if !(self.scheme.c_tau > 0.0) {
            return bad("scheme.c_tau must be positive".into());
        }
        Ok(())
    }
}

/// Apply `key=value`; the key is a dotted path, the value JSON or a bare string.
pub fn apply_override(v: &mut Value, o: &str) -> Result<()> {
    let (key, raw) = o
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override '{o}' is not key=value")))?;
    let val: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cur = v;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, p) in parts.iter().enumerate() {
        if p.is_empty() {
            return Err(Error::Config(format!("empty path segment in '{key}'")));
        }
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("'{key}' does not address an object field")))?;
        if i + 1 == parts.len() {
            obj.insert(p.to_string(), val);
            return Ok(());
        }
        cur = obj.entry(p.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}
