//! Time stepping for ∂_t u = Δu − ∇F(u)/ε² with Robin data ∇σ(u)/ε.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::energetics::{gl_energy, EnergeticsContext};
use crate::error::{Error, Result};
use crate::grid::{DiskField, PolarGrid};
use crate::linsolve::{pcg, SpectralSolver};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    SemiImplicit,
    MinMove,
    /// Crank–Nicolson diffusion with a Gonzalez discrete gradient for the
    /// reaction and boundary terms; the discrete dissipation identity holds
    /// to the Picard tolerance.
    DiscreteGradient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinearSolver {
    Spectral,
    Pcg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SchemeParams {
    pub scheme: Scheme,
    /// τ = c_tau · ε² unless `tau` is given.
    pub c_tau: f64,
    pub tau: Option<f64>,
    pub linear_solver: LinearSolver,
    pub linear_tol: f64,
    pub inner_tol: f64,
    pub max_inner: usize,
    /// Truncation radius; defaults to R_N of the manifold pair.
    pub r_trunc: Option<f64>,
}

impl Default for SchemeParams {
    fn default() -> Self {
        SchemeParams {
            scheme: Scheme::SemiImplicit,
            c_tau: 0.2,
            tau: None,
            linear_solver: LinearSolver::Spectral,
            linear_tol: 1e-10,
            inner_tol: 1e-9,
            max_inner: 500,
            r_trunc: None,
        }
    }
}

impl SchemeParams {
    pub fn tau(&self, eps: f64) -> f64 {
        self.tau.unwrap_or(self.c_tau * eps * eps)
    }
}

#[derive(Debug, Clone)]
pub struct SolverState {
    pub u: DiskField,
    pub time: f64,
    pub step_index: usize,
    /// Σ ε τ ‖(u^{n+1} − u^n)/τ‖².
    pub dissipation_ledger: f64,
    pub energy_history: Vec<(f64, f64)>,
}

impl SolverState {
    pub fn new(u: DiskField, ctx: &EnergeticsContext, eps: f64) -> Self {
        let e = total_energy(ctx, &u, eps);
        SolverState {
            u,
            time: 0.0,
            step_index: 0,
            dissipation_ledger: 0.0,
            energy_history: vec![(0.0, e)],
        }
    }

    pub fn energy(&self) -> f64 {
        self.energy_history.last().map(|x| x.1).unwrap_or(f64::NAN)
    }
}

/// Per-step bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub energy_before: f64,
    pub energy_after: f64,
    /// ‖u^{n+1} − u^n‖²_{L²}.
    pub increment_sq: f64,
    /// Minimizing-movement penalty (1/2τ_MM)‖Δu‖², zero for other schemes.
    pub penalty: f64,
    pub inner_iterations: usize,
    /// ‖u^{n+1}‖∞ before truncation.
    pub sup_before_truncation: f64,
}

pub fn total_energy(ctx: &EnergeticsContext, u: &DiskField, eps: f64) -> f64 {
    let (b, s) = gl_energy(ctx, u, &u.grid, eps);
    b + s
}

/// T_R: radial projection of every cell value onto the closed R-ball.
pub fn radial_truncate(u: &DiskField, r: f64) -> DiskField {
    let mut v = u.clone();
    radial_truncate_in_place(&mut v, r);
    v
}

pub fn radial_truncate_in_place(u: &mut DiskField, r: f64) {
    let k = u.k;
    let nt = u.grid.n_theta;
    par::for_each_chunk(&mut u.values, nt * k, |_, row| {
        for cell in row.chunks_mut(k) {
            let n = cell.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > r {
                let s = r / n;
                cell.iter_mut().for_each(|x| *x *= s);
            }
        }
    });
}

/// ∇F(u) per cell and ∇σ(u) per boundary cell.
fn forces(ctx: &EnergeticsContext, u: &DiskField) -> (Vec<f64>, Vec<f64>) {
    let k = u.k;
    let nt = u.grid.n_theta;
    let mut df = vec![0.0; u.values.len()];
    par::for_each_chunk(&mut df, nt * k, |j, out| {
        let row = u.row(j);
        for i in 0..nt {
            let (_, g) = ctx.potential(&row[i * k..(i + 1) * k]);
            out[i * k..(i + 1) * k].copy_from_slice(&g);
        }
    });
    let b = u.boundary_row();
    let mut ds = vec![0.0; b.len()];
    if ctx.cos_alpha != 0.0 {
        for i in 0..nt {
            let (_, g) = ctx.sigma(&b[i * k..(i + 1) * k]);
            ds[i * k..(i + 1) * k].copy_from_slice(&g);
        }
    }
    (df, ds)
}

/// Robin data g = ∇σ(u)/ε per boundary cell (outward radial derivative −g).
pub fn robin_data(ctx: &EnergeticsContext, u: &DiskField, eps: f64) -> Vec<f64> {
    let k = u.k;
    let b = u.boundary_row();
    let mut g = vec![0.0; b.len()];
    if ctx.cos_alpha != 0.0 {
        for (i, cell) in b.chunks(k).enumerate() {
            let (_, ds) = ctx.sigma(cell);
            for c in 0..k {
                g[i * k + c] = ds[c] / eps;
            }
        }
    }
    g
}

/// L² norm of the discrete Euler–Lagrange residual −εΔ_R u + ∇F(u)/ε.
pub fn euler_lagrange_residual(ctx: &EnergeticsContext, u: &DiskField, eps: f64) -> f64 {
    let grid = &u.grid;
    let (df, ds) = forces(ctx, u);
    let g: Vec<f64> = ds.iter().map(|x| x / eps).collect();
    let mut r = grid.laplacian_robin(u, &g);
    for (ri, fi) in r.values.iter_mut().zip(&df) {
        *ri = -eps * *ri + fi / eps;
    }
    r.l2_norm()
}

/// Gonzalez discrete gradient of a scalar function per cell.
fn gonzalez(
    f: impl Fn(&[f64]) -> (f64, smallvec::SmallVec<[f64; 4]>),
    a: &[f64],
    b: &[f64],
    out: &mut [f64],
) {
    let k = a.len();
    let mid: smallvec::SmallVec<[f64; 4]> = a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect();
    let (_, gm) = f(&mid);
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (y - x) * (y - x)).sum();
    if d2 < 1e-14 {
        out.copy_from_slice(&gm);
        return;
    }
    let fa = f(a).0;
    let fb = f(b).0;
    let proj: f64 = (0..k).map(|c| gm[c] * (b[c] - a[c])).sum();
    let corr = (fb - fa - proj) / d2;
    for c in 0..k {
        out[c] = gm[c] + corr * (b[c] - a[c]);
    }
}

pub struct Stepper {
    pub ctx: Arc<EnergeticsContext>,
    pub grid: Arc<PolarGrid>,
    pub eps: f64,
    pub tau: f64,
    pub params: SchemeParams,
    pub r_trunc: f64,
    implicit: SpectralSolver,
    precond: Option<SpectralSolver>,
}

impl Stepper {
    pub fn new(
        ctx: Arc<EnergeticsContext>,
        grid: Arc<PolarGrid>,
        eps: f64,
        params: SchemeParams,
    ) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::Config("epsilon must be positive".into()));
        }
        let tau = params.tau(eps);
        if !(tau > 0.0) {
            return Err(Error::Config("time step must be positive".into()));
        }
        if params.scheme == Scheme::MinMove && params.max_inner < 1 {
            return Err(Error::Config("max_inner must be at least 1".into()));
        }
        let r_trunc = params.r_trunc.unwrap_or(ctx.mp.r_n);
        let (implicit, precond) = match params.scheme {
            Scheme::SemiImplicit => (SpectralSolver::new(grid.clone(), 1.0, tau)?, None),
            Scheme::DiscreteGradient => (SpectralSolver::new(grid.clone(), 1.0 / tau, 0.5)?, None),
            Scheme::MinMove => {
                let tmm = tau / eps;
                let p = SpectralSolver::new(grid.clone(), 1.0 / tmm + 2.0 / eps, eps)?;
                (SpectralSolver::new(grid.clone(), 1.0, tau)?, Some(p))
            }
        };
        Ok(Stepper {
            ctx,
            grid,
            eps,
            tau,
            params,
            r_trunc,
            implicit,
            precond,
        })
    }

    /// Minimizing-movement step size in the unaccelerated clock.
    pub fn tau_mm(&self) -> f64 {
        self.tau / self.eps
    }

    pub fn energy(&self, u: &DiskField) -> f64 {
        total_energy(&self.ctx, u, self.eps)
    }

    /// Advance one step; updates the ledger and energy history.
    pub fn step(&self, state: &mut SolverState) -> Result<StepRecord> {
        let e0 = state.energy();
        let (v, sup, inner, penalty) = match self.params.scheme {
            Scheme::SemiImplicit => {
                let (v, s) = self.semi_implicit(&state.u)?;
                (v, s, 0, 0.0)
            }
            Scheme::DiscreteGradient => {
                let (v, it) = self.discrete_gradient(&state.u)?;
                let s = v.sup_norm();
                (v, s, it, 0.0)
            }
            Scheme::MinMove => {
                let (v, it) = self.min_move(&state.u)?;
                let s = v.sup_norm();
                let d = v.l2_distance(&state.u);
                (v, s, it, d * d / (2.0 * self.tau_mm()))
            }
        };
        if !v.is_finite() {
            return Err(Error::NonFinite("solver step"));
        }
        let d = v.l2_distance(&state.u);
        let inc = d * d;
        state.u = v;
        state.time += self.tau;
        state.step_index += 1;
        state.dissipation_ledger += self.eps * inc / self.tau;
        let e1 = self.energy(&state.u);
        state.energy_history.push((state.time, e1));
        Ok(StepRecord {
            energy_before: e0,
            energy_after: e1,
            increment_sq: inc,
            penalty,
            inner_iterations: inner,
            sup_before_truncation: sup,
        })
    }

    fn check_bound(&self, sup: f64) -> Result<()> {
        if sup > self.r_trunc + 1e-6 {
            Err(Error::StabilityViolation {
                norm: sup,
                bound: self.r_trunc,
            })
        } else {
            Ok(())
        }
    }

    fn semi_implicit(&self, u: &DiskField) -> Result<(DiskField, f64)> {
        let eps2 = self.eps * self.eps;
        let (df, ds) = forces(&self.ctx, u);
        let mut rhs = u.clone();
        for (r, f) in rhs.values.iter_mut().zip(&df) {
            *r -= self.tau * f / eps2;
        }
        let g: Vec<f64> = ds.iter().map(|x| x / self.eps).collect();
        self.grid.add_robin(&mut rhs.values, &g, -self.tau);
        let mut v = match self.params.linear_solver {
            LinearSolver::Spectral => self.implicit.solve(&rhs),
            LinearSolver::Pcg => {
                pcg(&self.grid, 1.0, self.tau, &rhs, u, self.params.linear_tol, 10_000)?.0
            }
        };
        let sup = v.sup_norm();
        self.check_bound(sup)?;
        radial_truncate_in_place(&mut v, self.r_trunc);
        Ok((v, sup))
    }

    /// Discrete-gradient nonlinearity N̄(u, v) = ∇̄F/ε² + boundary part.
    fn dg_nonlinear(&self, u: &DiskField, v: &DiskField) -> Vec<f64> {
        let k = u.k;
        let nt = self.grid.n_theta;
        let eps = self.eps;
        let ctx = &*self.ctx;
        let mut out = vec![0.0; u.values.len()];
        par::for_each_chunk(&mut out, nt * k, |j, orow| {
            let (a, b) = (u.row(j), v.row(j));
            for i in 0..nt {
                let s = i * k..(i + 1) * k;
                gonzalez(|x| ctx.potential(x), &a[s.clone()], &b[s.clone()], &mut orow[s]);
            }
            orow.iter_mut().for_each(|x| *x /= eps * eps);
        });
        if ctx.cos_alpha != 0.0 {
            let (a, b) = (u.boundary_row(), v.boundary_row());
            let mut g = vec![0.0; a.len()];
            for i in 0..nt {
                let s = i * k..(i + 1) * k;
                gonzalez(|x| ctx.sigma(x), &a[s.clone()], &b[s.clone()], &mut g[s]);
            }
            g.iter_mut().for_each(|x| *x /= eps);
            self.grid.add_robin(&mut out, &g, 1.0);
        }
        out
    }

    fn discrete_gradient(&self, u: &DiskField) -> Result<(DiskField, usize)> {
        let mut lap = vec![0.0; u.values.len()];
        self.grid.laplacian0_into(u, &mut lap);
        let base: Vec<f64> = u
            .values
            .iter()
            .zip(&lap)
            .map(|(x, l)| x / self.tau + 0.5 * l)
            .collect();
        let mut v = u.clone();
        let max_it = self.params.max_inner.max(50);
        let mut prev = f64::INFINITY;
        for it in 1..=max_it {
            let n = self.dg_nonlinear(u, &v);
            let mut rhs = u.clone();
            for ((r, b), ni) in rhs.values.iter_mut().zip(&base).zip(&n) {
                *r = b - ni;
            }
            let next = self.implicit.solve(&rhs);
            let change = next
                .values
                .iter()
                .zip(&v.values)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let scale = 1.0 + next.sup_norm();
            v = next;
            if !change.is_finite() {
                return Err(Error::NonFinite("discrete-gradient iteration"));
            }
            // round-off floor: tiny and no longer contracting
            if change <= 1e-13 * scale || (change <= 1e-10 * scale && change >= 0.5 * prev) {
                self.check_bound(v.sup_norm())?;
                return Ok((v, it));
            }
            prev = change;
        }
        Err(Error::InnerLoopStalled(max_it))
    }

    /// Gradient of Φ(v) = E(v) + ‖v − u‖²/(2τ_MM) in the L² metric.
    fn mm_gradient(&self, u: &DiskField, v: &DiskField) -> DiskField {
        let eps = self.eps;
        let (df, ds) = forces(&self.ctx, v);
        let g: Vec<f64> = ds.iter().map(|x| x / eps).collect();
        let mut r = self.grid.laplacian_robin(v, &g);
        let inv = 1.0 / self.tau_mm();
        for (((ri, fi), vi), ui) in r.values.iter_mut().zip(&df).zip(&v.values).zip(&u.values) {
            *ri = -eps * *ri + fi / eps + inv * (vi - ui);
        }
        r
    }

    fn mm_objective(&self, u: &DiskField, v: &DiskField) -> f64 {
        let d = v.l2_distance(u);
        self.energy(v) + d * d / (2.0 * self.tau_mm())
    }

    fn min_move(&self, u: &DiskField) -> Result<(DiskField, usize)> {
        let pre = self.precond.as_ref().expect("preconditioner");
        let tol = self.params.inner_tol;
        let mut v = u.clone();
        let mut g = self.mm_gradient(u, &v);
        let mut phi = self.mm_objective(u, &v);
        let mut step = 1.0;
        let mut flat = 0;
        for it in 0..self.params.max_inner {
            let gn = g.l2_norm();
            let target = tol * (1.0 + v.l2_norm());
            if gn <= target || (flat >= 5 && gn <= 1e3 * target) {
                return Ok((v, it));
            }
            let dir = pre.solve(&g);
            let slope = -g.l2_dot(&dir);
            let mut a = step;
            let mut accepted = None;
            for _ in 0..30 {
                let mut trial = v.clone();
                for (t, d) in trial.values.iter_mut().zip(&dir.values) {
                    *t -= a * d;
                }
                radial_truncate_in_place(&mut trial, self.r_trunc);
                let pt = self.mm_objective(u, &trial);
                if pt <= phi + 1e-4 * a * slope {
                    accepted = Some((trial, pt));
                    break;
                }
                a *= 0.5;
            }
            let (nv, np) = match accepted {
                Some(x) => x,
                None => {
                    // no decrease possible at this resolution: accept the
                    // current iterate if it is already near-stationary
                    if g.l2_norm() <= 1e3 * tol * (1.0 + v.l2_norm()) {
                        return Ok((v, it));
                    }
                    return Err(Error::InnerLoopStalled(it));
                }
            };
            let ng = self.mm_gradient(u, &nv);
            // preconditioned Barzilai–Borwein step
            let mut s = nv.clone();
            let mut y = ng.clone();
            for i in 0..s.values.len() {
                s.values[i] -= v.values[i];
                y.values[i] -= g.values[i];
            }
            let sy = s.l2_dot(&y);
            let ps = crate::linsolve::apply_operator(&self.grid, pre.a, pre.b, &s);
            let sps = s.l2_dot(&ps);
            step = if sy > 0.0 { (sps / sy).clamp(1e-3, 10.0) } else { 1.0 };
            if (phi - np).abs() <= 4.0 * f64::EPSILON * phi.abs() {
                flat += 1;
            } else {
                flat = 0;
            }
            v = nv;
            g = ng;
            phi = np;
        }
        if g.l2_norm() <= tol * (1.0 + v.l2_norm()) {
            Ok((v, self.params.max_inner))
        } else {
            Err(Error::InnerLoopStalled(self.params.max_inner))
        }
    }
}

/// Trajectory produced by [`run`].
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<(f64, DiskField)>,
    pub records: Vec<StepRecord>,
    pub final_state: SolverState,
    /// |E(T) − E(0) + ledger|.
    pub dissipation_residual: f64,
}

impl Trajectory {
    pub fn relative_dissipation_residual(&self) -> f64 {
        let e0 = self.final_state.energy_history[0].1;
        self.dissipation_residual / e0.abs().max(f64::MIN_POSITIVE)
    }
}

/// Step `n_steps` times, keeping a snapshot every `snapshot_every` steps
/// (0 = initial and final only). With `tol_dissip`, the relative dissipation
/// identity residual is asserted at the end.
pub fn run(
    stepper: &Stepper,
    mut state: SolverState,
    n_steps: usize,
    snapshot_every: usize,
    tol_dissip: Option<f64>,
    mut on_step: impl FnMut(&SolverState, &StepRecord) -> Result<()>,
) -> Result<Trajectory> {
    let mut snaps = vec![(state.time, state.u.clone())];
    let mut records = Vec::with_capacity(n_steps);
    for n in 1..=n_steps {
        let rec = stepper.step(&mut state)?;
        on_step(&state, &rec)?;
        records.push(rec);
        if (snapshot_every > 0 && n % snapshot_every == 0) || n == n_steps {
            if snaps.last().map(|s| s.0) != Some(state.time) {
                snaps.push((state.time, state.u.clone()));
            }
        }
    }
    let e0 = state.energy_history[0].1;
    let residual = (state.energy() - e0 + state.dissipation_ledger).abs();
    let traj = Trajectory {
        snapshots: snaps,
        records,
        final_state: state,
        dissipation_residual: residual,
    };
    if let Some(tol) = tol_dissip {
        let rel = traj.relative_dissipation_residual();
        if rel > tol {
            return Err(Error::DissipationMismatch { residual: rel, tol });
        }
    }
    Ok(traj)
}
