//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. The three ε-sweeps dominate the runtime.

use std::f64::consts::FRAC_PI_2;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use acsharp::calibration::{build_calibration, CONDITIONS};
use acsharp::config::RunConfig;
use acsharp::curve::{contact_points, evolve_mcf, region_indicator, CurveSpec, FrontTracker};
use acsharp::diagnostics::{entropy_report, harmonic_flow_residual};
use acsharp::energetics::{EnergeticsConfig, EnergeticsContext};
use acsharp::grid::{DiskField, PolarGrid};
use acsharp::manifolds::{ManifoldConfig, VecK};
use acsharp::profile::{default_pair, f_tilde, Profile};
use acsharp::solver::{radial_truncate, total_energy, Scheme};
use acsharp::study::{calibrate_check, run_eps, simulate, table_from, ConvergenceRow, DiagRow, RunSummary};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Check {
    ok: bool,
    what: String,
}

fn check(ok: bool, what: impl Into<String>) -> Check {
    Check { ok, what: what.into() }
}

#[derive(Default)]
struct Gate {
    results: Vec<(usize, &'static str, Vec<Check>)>,
}

impl Gate {
    fn record(&mut self, n: usize, name: &'static str, checks: Vec<Check>) {
        for c in checks.iter().filter(|c| !c.ok) {
            eprintln!("[{n}] failed: {}", c.what);
        }
        eprintln!("[{n}] done");
        self.results.push((n, name, checks));
    }

    /// Prints the criteria in order and returns the number that failed.
    fn print(mut self) -> usize {
        self.results.sort_by_key(|r| r.0);
        let mut failed = 0;
        for (n, name, checks) in &self.results {
            let ok = checks.iter().all(|c| c.ok);
            failed += usize::from(!ok);
            let detail: Vec<String> = checks
                .iter()
                .map(|c| if c.ok { c.what.clone() } else { format!("FAILED {}", c.what) })
                .collect();
            println!("criterion {n} ({name}): {} | {}", if ok { "PASS" } else { "FAIL" }, detail.join("; "));
        }
        failed
    }
}

fn ctx_for(mc: ManifoldConfig, alpha: f64) -> EnergeticsContext {
    EnergeticsContext::new(
        mc.build().unwrap(),
        &EnergeticsConfig {
            alpha_deg: alpha,
            ..Default::default()
        },
    )
    .unwrap()
}

fn vk(x: &[f64]) -> VecK {
    VecK::from_slice(x)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

struct Sweep {
    runs: Vec<(RunSummary, Vec<DiagRow>)>,
}

impl Sweep {
    fn summaries(&self) -> Vec<&RunSummary> {
        self.runs.iter().map(|r| &r.0).collect()
    }

    fn slope(&self, key: &str) -> Option<f64> {
        let rows = self
            .runs
            .iter()
            .map(|(s, _)| ConvergenceRow {
                eps: s.eps,
                summary: Some(s.clone()),
                failure: None,
            })
            .collect();
        table_from(rows).slopes.get(key).map(|f| f.slope)
    }
}

fn sweep(name: &str) -> Sweep {
    let cfg = RunConfig::preset(name).unwrap();
    let t0 = Instant::now();
    let runs = (0..cfg.epsilons.len())
        .map(|i| {
            let out = run_eps(&cfg, i, None).unwrap_or_else(|e| panic!("{name} eps {}: {e}", cfg.epsilons[i]));
            (out.summary, out.rows)
        })
        .collect();
    eprintln!("sweep {name}: {:.0} s", t0.elapsed().as_secs_f64());
    Sweep { runs }
}

fn decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn fmt(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(", ")
}

fn exact_identities(mp90: &Sweep, mp60: &Sweep) -> Vec<Check> {
    let mut out = vec![];
    // Young's law
    let mut young: f64 = 0.0;
    for mc in [ManifoldConfig::mp(), ManifoldConfig::cc()] {
        for alpha in [90.0, 75.0, 60.0, 45.0, 30.0] {
            let c = ctx_for(mc.clone(), alpha);
            let (pm, pp) = default_pair(&c).unwrap();
            let r = c.sigma_value(&pp) - c.sigma_value(&pm) - c.c_f * c.cos_alpha;
            young = young.max(r.abs());
        }
    }
    out.push(check(young <= 1e-10, format!("Young residual {young:.1e}")));

    // coercivity split and chain rule on prepared and rough states
    let cfg = RunConfig::preset("mp60").unwrap();
    let s = acsharp::study::setup_run(&cfg, 0).unwrap();
    let cal = build_calibration(&s.curve, None, &s.grid, &cfg.calibration_params()).unwrap();
    let chi = region_indicator(&s.grid, &s.curve).unwrap().values;
    let rough = DiskField::from_fn(s.grid.clone(), 2, |p| {
        vk(&[1.2 * (3.0 * p[0] + p[1]).sin(), 0.4 * (5.0 * p[1]).cos()])
    });
    let mut split: f64 = 0.0;
    let mut chain: f64 = 0.0;
    for u in [&s.u0, &rough] {
        let r = entropy_report(u, &cal, &chi, &s.ctx, s.eps, 0.0);
        split = split.max(r.split_residual / (1.0 + r.e_rel.abs()));
        chain = chain.max(r.chain_residual);
    }
    for sw in [mp90, mp60] {
        for s in sw.summaries() {
            split = split.max(s.max_split_residual);
            chain = chain.max(s.max_chain_residual);
        }
    }
    out.push(check(split <= 1e-12, format!("split residual {split:.1e}")));
    out.push(check(chain <= 1e-10, format!("chain-rule residual {chain:.1e}")));

    // radial truncation: 1-Lipschitz and energy-decreasing
    let c = ctx_for(ManifoldConfig::mp(), 60.0);
    let rn = c.mp.r_n;
    let g = Arc::new(PolarGrid::new(1.0, 24, 64).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut lip: f64 = 0.0;
    let mut energy_gain: f64 = f64::NEG_INFINITY;
    for _ in 0..20 {
        let mut a = DiskField::zeros(g.clone(), 2);
        let mut b = DiskField::zeros(g.clone(), 2);
        for v in a.values.iter_mut().chain(b.values.iter_mut()) {
            *v = rng.gen_range(-2.0 * rn..2.0 * rn);
        }
        let (ta, tb) = (radial_truncate(&a, rn), radial_truncate(&b, rn));
        for idx in 0..g.cells() {
            let d0 = norm(&[a.values[2 * idx] - b.values[2 * idx], a.values[2 * idx + 1] - b.values[2 * idx + 1]]);
            let d1 = norm(&[ta.values[2 * idx] - tb.values[2 * idx], ta.values[2 * idx + 1] - tb.values[2 * idx + 1]]);
            lip = lip.max(d1 - d0);
        }
        // smooth field leaving the ball of radius R_N
        let amp = rng.gen_range(1.0..3.0) * rn;
        let ph = rng.gen_range(0.0..6.3);
        let w = DiskField::from_fn(g.clone(), 2, |p| {
            let r = amp * (p[0] * p[0] + p[1] * p[1]).sqrt();
            vk(&[r * (3.0 * p[1] + ph).cos(), r * (2.0 * p[0] - ph).sin()])
        });
        for eps in [0.1, 0.3] {
            let e0 = total_energy(&c, &w, eps);
            let e1 = total_energy(&c, &radial_truncate(&w, rn), eps);
            energy_gain = energy_gain.max(e1 - e0);
        }
    }
    out.push(check(lip <= 1e-12, format!("truncation Lipschitz excess {lip:.1e}")));
    out.push(check(energy_gain <= 0.0, format!("truncation energy change {energy_gain:.2e}")));

    // profile equipartition
    let p = Profile::standard(&c).unwrap();
    let mut eq: f64 = 0.0;
    for i in 0..=4000 {
        let t = -12.0 + 24.0 * i as f64 / 4000.0;
        let (a, da) = p.eval(t);
        eq = eq.max((0.5 * da * da - f_tilde(&c, a)).abs());
    }
    out.push(check(eq <= 1e-8, format!("equipartition residual {eq:.1e}")));
    out
}

fn quasi_distance_inequality() -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut out = vec![];
    for (name, mc, box_) in [("MP", ManifoldConfig::mp(), 2.5), ("CC", ManifoldConfig::cc(), 4.5)] {
        let c = ctx_for(mc, 60.0);
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..100_000 {
            let u = [rng.gen_range(-box_..box_), rng.gen_range(-box_..box_)];
            let g = c.quasi_distance_grad(&u);
            let f = c.potential_value(&u);
            worst = worst.max(norm(&g) - (2.0 * f).sqrt());
        }
        out.push(check(worst <= 1e-10, format!("{name} max violation {worst:.1e}")));
    }
    out
}

fn scheme_checks() -> Vec<Check> {
    let short = |scheme: Scheme, t_final: f64| {
        let mut cfg = RunConfig::preset("mp60").unwrap();
        cfg.scheme.scheme = scheme;
        cfg.t_final = t_final;
        cfg.diag_every = t_final;
        run_eps(&cfg, 0, None).map(|r| r.summary)
    };
    let mut out = vec![];
    match short(Scheme::MinMove, 0.01) {
        Ok(mm) => {
            let d = mm.max_one_step_defect.unwrap_or(f64::INFINITY);
            out.push(check(
                d <= 1e-12 && mm.max_sup_norm <= mm.r_n,
                format!("MinMove E(u1) + penalty - E(u0) max {d:.1e} over {} steps", mm.steps),
            ));
        }
        Err(e) => out.push(check(false, format!("MinMove run: {e}"))),
    }
    match short(Scheme::DiscreteGradient, 0.02) {
        Ok(dg) => out.push(check(
            dg.relative_dissipation_residual <= 1e-6,
            format!("discrete-gradient dissipation identity {:.1e}", dg.relative_dissipation_residual),
        )),
        Err(e) => out.push(check(false, format!("discrete-gradient run: {e}"))),
    }
    out
}

fn solver_invariants(sweeps: &[(&str, &Sweep)], mut out: Vec<Check>) -> Vec<Check> {
    let mut sup_ok = true;
    let mut inc: f64 = f64::NEG_INFINITY;
    let mut sup_ratio: f64 = 0.0;
    for (_, sw) in sweeps {
        for s in sw.summaries() {
            sup_ok &= s.max_sup_norm <= s.r_n;
            sup_ratio = sup_ratio.max(s.max_sup_norm / s.r_n);
            inc = inc.max(s.max_energy_increase);
        }
    }
    out.push(check(sup_ok, format!("max sup/R_N {sup_ratio:.3}")));
    out.push(check(inc <= 1e-8, format!("max one-step energy increase {inc:.1e}")));
    let si: f64 = sweeps
        .iter()
        .flat_map(|(_, s)| s.summaries())
        .map(|s| s.relative_dissipation_residual)
        .fold(0.0, f64::max);
    out.push(check(true, format!("semi-implicit identity residual {si:.1e} (first order, not gated)")));
    out
}

fn front_tracker() -> Vec<Check> {
    let mut out = vec![];
    let r0: f64 = 0.9;
    let mut tr = FrontTracker::new(
        CurveSpec::Circle {
            center: [0.0, 0.0],
            radius: r0,
        }
        .build(1.0, 256)
        .unwrap(),
        FRAC_PI_2,
    );
    let t = 0.3 * r0 * r0;
    tr.advance_to(t).unwrap();
    let exact = (r0 * r0 - 2.0 * t).sqrt();
    let err = tr.curve.nodes.iter().map(|p| (norm(p) - exact).abs()).fold(0.0, f64::max);
    out.push(check(err < 1e-3, format!("circle radius error {err:.1e}")));

    let mut c = CurveSpec::Diameter.build(1.0, 256).unwrap();
    let mut drift: f64 = 0.0;
    for _ in 0..200 {
        let n = evolve_mcf(&c, c.stable_dt(), FRAC_PI_2).unwrap();
        for (a, b) in c.nodes.iter().zip(&n.nodes) {
            drift = drift.max(norm(&[a[0] - b[0], a[1] - b[1]]));
        }
        c = n;
    }
    out.push(check(drift <= 1e-8, format!("diameter drift per step {drift:.1e}")));

    let mut angle: f64 = 0.0;
    for alpha in [90.0f64, 60.0] {
        let spec = if alpha == 90.0 { CurveSpec::Diameter } else { CurveSpec::arc60(1.0) };
        let mut tr = FrontTracker::new(spec.build(1.0, 256).unwrap(), alpha.to_radians());
        for k in 1..=20 {
            tr.advance_to(0.01 * k as f64).unwrap();
            let (_, _, (a0, a1)) = contact_points(&tr.curve);
            angle = angle.max((a0.to_degrees() - alpha).abs()).max((a1.to_degrees() - alpha).abs());
        }
    }
    out.push(check(angle <= 0.5, format!("contact angle deviation {angle:.3} deg")));
    out
}

fn calibration() -> Vec<Check> {
    let mut out = vec![];
    let mp60 = RunConfig::preset("mp60").unwrap();
    let reps: Vec<_> = (0..2).map(|i| calibrate_check(&mp60, i, 0.05, 0.005).unwrap()).collect();
    let mut bnd: f64 = 0.0;
    for r in &reps {
        bnd = bnd
            .max(r.conditions["boundary_xi"].max_violation)
            .max(r.conditions["boundary_velocity"].max_violation);
    }
    out.push(check(bnd <= 1e-8, format!("boundary identities {bnd:.1e}")));
    let mut worst: f64 = 0.0;
    let mut finite = true;
    for name in CONDITIONS {
        let (a, b) = (reps[0].conditions[name].constant, reps[1].conditions[name].constant);
        finite &= a.is_finite() && b.is_finite();
        if a.max(b) > 1e-8 {
            worst = worst.max((b / a - 1.0).abs());
        }
    }
    out.push(check(
        finite && worst <= 0.2,
        format!("seven constants finite, max change under refinement {:.1}%", 100.0 * worst),
    ));
    let mp90 = RunConfig::preset("mp90").unwrap();
    let mut tr_ok = true;
    let mut tr_max: f64 = 0.0;
    for i in 0..2 {
        let r = calibrate_check(&mp90, i, 0.05, 0.005).unwrap();
        for name in ["transport_full", "transport_length", "velocity_gradient", "weight_transport"] {
            let c = r.conditions[name].constant;
            tr_max = tr_max.max(c / r.h);
            tr_ok &= c <= r.h;
        }
    }
    out.push(check(tr_ok, format!("static diameter transport constants / h max {tr_max:.1e}")));
    out
}

fn scalings(mp90: &Sweep, mp60: &Sweep) -> Vec<Check> {
    let mut out = vec![];
    for (name, sw) in [("90", mp90), ("60", mp60)] {
        for (key, min) in [
            ("sup_e_rel", 0.8),
            ("sup_b_rel", 0.8),
            ("sup_bulk_l1", 0.45),
            ("initial_entropy", 1.0),
        ] {
            let s = sw.slope(key).unwrap_or(f64::NAN);
            out.push(check(s >= min, format!("{name}deg {key} slope {s:.2} (>= {min})")));
        }
    }
    out
}

fn interface_fidelity(mp60: &Sweep) -> Vec<Check> {
    let mut out = vec![];
    let haus: Vec<f64> = mp60.summaries().iter().map(|s| s.sup_hausdorff.unwrap_or(f64::NAN)).collect();
    out.push(check(decreasing(&haus), format!("sup_t Hausdorff over eps sweep [{}]", fmt(&haus))));
    let (last, rows) = mp60.runs.last().unwrap();
    let eps = last.eps;
    let hmax = rows.iter().map(|r| r.hausdorff.unwrap_or(f64::INFINITY)).fold(0.0, f64::max);
    out.push(check(hmax <= 4.0 * eps, format!("eps {eps}: max Hausdorff {hmax:.2e} (<= {:.2e})", 4.0 * eps)));
    let amax = rows.iter().map(|r| r.contact_angle_err.unwrap_or(f64::INFINITY)).fold(0.0, f64::max);
    out.push(check(amax <= 3.0, format!("eps {eps}: max contact-angle error {amax:.2} deg")));
    out
}

fn circle_valued(cc60: &Sweep) -> Vec<Check> {
    let mut out = vec![];
    let s = cc60.summaries();
    let gaps: Vec<f64> = s.iter().map(|s| s.max_minimal_pair_gap.unwrap_or(f64::NAN)).collect();
    let ctx = ctx_for(ManifoldConfig::cc(), 60.0);
    let bound = 0.05 * ctx.mp.dist_n;
    let last = *gaps.last().unwrap();
    out.push(check(last <= bound, format!("minimal-pair gap at eps {} {last:.3e} (<= {bound})", s.last().unwrap().eps)));
    out.push(check(decreasing(&gaps), format!("gap trend [{}]", fmt(&gaps))));
    let harm: Vec<f64> = s.iter().map(|s| s.final_harmonic_residual.unwrap_or(f64::NAN)).collect();
    out.push(check(decreasing(&harm), format!("harmonic residual trend [{}]", fmt(&harm))));

    // φ = x + e^{-t} sin y solves the heat equation; (cos φ, sin φ) then has a
    // purely normal defect.
    let mut errs = vec![];
    let mut hs = vec![];
    for (nr, nt) in [(20, 64), (40, 128), (80, 256)] {
        let g = Arc::new(PolarGrid::new(1.0, nr, nt).unwrap());
        let field = |t: f64| {
            DiskField::from_fn(g.clone(), 2, move |p| {
                let phi = p[0] + (-t).exp() * p[1].sin();
                vk(&[phi.cos(), phi.sin()])
            })
        };
        let dt = 1e-4;
        let region: Vec<bool> = (0..g.cells()).map(|i| g.rc[i / g.n_theta] < 0.7).collect();
        errs.push(harmonic_flow_residual(&field(0.1), &field(0.1 + dt), dt, &ctx, 0.1, &region));
        hs.push(g.dr);
    }
    let orders: Vec<f64> = (0..2).map(|i| (errs[i] / errs[i + 1]).log2()).collect();
    out.push(check(
        orders.iter().all(|o| *o >= 1.8),
        format!("manufactured heat flow residuals [{}], orders [{}]", fmt(&errs), fmt(&orders)),
    ));
    out
}

fn perimeter(mp90: &Sweep, mp60: &Sweep) -> Vec<Check> {
    let mut out = vec![];
    for (name, sw) in [("90", mp90), ("60", mp60)] {
        let gaps: Vec<f64> = sw.summaries().iter().map(|s| s.final_perimeter_gap.unwrap_or(f64::NAN)).collect();
        out.push(check(decreasing(&gaps), format!("{name}deg perimeter gap [{}]", fmt(&gaps))));
    }
    out
}

fn reproducibility() -> Vec<Check> {
    let mut cfg = RunConfig::preset("mp60").unwrap();
    cfg.epsilons = vec![0.1];
    cfg.t_final = 0.05;
    cfg.diag_every = 0.01;
    cfg.snapshot_every = 0.0;
    cfg.threads = 1;
    let mut bytes = vec![];
    for _ in 0..2 {
        let d = tempfile::tempdir().unwrap();
        cfg.output_dir = d.path().to_path_buf();
        simulate(&cfg).unwrap();
        bytes.push(std::fs::read(d.path().join("eps_0.1").join("diagnostics.csv")).unwrap());
    }
    vec![check(bytes[0] == bytes[1], format!("diagnostics.csv {} bytes, identical: {}", bytes[0].len(), bytes[0] == bytes[1]))]
}

fn main() -> ExitCode {
    let mut gate = Gate::default();
    let t0 = Instant::now();
    gate.record(2, "quasi-distance inequality", quasi_distance_inequality());
    gate.record(4, "front tracker", front_tracker());
    gate.record(5, "calibration", calibration());
    gate.record(10, "reproducibility", reproducibility());
    let schemes = scheme_checks();
    eprintln!("short scheme runs: {}", schemes.iter().map(|c| c.what.as_str()).collect::<Vec<_>>().join("; "));
    let mp90 = sweep("mp90");
    let mp60 = sweep("mp60");
    let cc60 = sweep("cc60");
    gate.record(1, "exact identities", exact_identities(&mp90, &mp60));
    gate.record(3, "solver invariants", solver_invariants(&[("mp90", &mp90), ("mp60", &mp60), ("cc60", &cc60)], schemes));
    gate.record(6, "entropy scalings", scalings(&mp90, &mp60));
    gate.record(7, "interface fidelity", interface_fidelity(&mp60));
    gate.record(8, "circle-valued checks", circle_valued(&cc60));
    gate.record(9, "level-set perimeter", perimeter(&mp90, &mp60));
    eprintln!("acceptance: {:.0} s", t0.elapsed().as_secs_f64());
    match gate.print() {
        0 => {
            println!("acceptance: all criteria pass");
            ExitCode::SUCCESS
        }
        n => {
            println!("acceptance: {n} of 10 criteria failed");
            ExitCode::FAILURE
        }
    }
}
