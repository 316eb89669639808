//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits non-zero on any failure.

use choquard::discretization::{
    build_radial_grid, build_riesz_kernel, riesz_convolve, CartesianField, CartesianGrid3,
    GridKind, RadialField,
};
use choquard::dynamics::{
    auto_box, instability_experiment, run_simulation, stability_experiment, DynamicsConfig,
    Monitors, Potential, Propagator, Verdict,
};
use choquard::model::{
    classify_regime, f_mu_a, max_f_closed_form, ModelParams, Regime, SharpConstants,
};
use choquard::solvers::{
    excited_grid, ground_grid, shoot_profile, solve_excited, solve_ground, verify_solution,
    RadialGridConfig, SolutionRecord, SolverConfig,
};
use choquard::verify::{
    check_bubble_expansions, check_energy_landscape, check_inequalities, check_qualitative,
    DiagnosticReport,
};
use num_complex::Complex64;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::Instant;

type Outcome = Result<Vec<(String, bool)>, String>;
type Criterion = (&'static str, fn() -> Outcome);

struct Pair {
    ground: SolutionRecord,
    excited: SolutionRecord,
}

struct Setup {
    base: ModelParams,
    consts: SharpConstants,
    solver: SolverConfig,
}

fn setup() -> &'static Setup {
    static S: OnceLock<Setup> = OnceLock::new();
    S.get_or_init(|| {
        let base = ModelParams::default();
        let consts = SharpConstants::compute(&base).expect("constants");
        Setup {
            base,
            consts,
            solver: SolverConfig::default(),
        }
    })
}

fn ground_at(a: f64) -> choquard::Result<SolutionRecord> {
    let s = setup();
    let p = s.base.with_mass(a);
    let g = ground_grid(&p, &s.consts, &RadialGridConfig::ground())?;
    let k = build_riesz_kernel(&g, p.alpha)?;
    solve_ground(&p, &s.consts, &k, &s.solver)
}

fn pair_at(a: f64) -> choquard::Result<Pair> {
    let s = setup();
    let ground = ground_at(a)?;
    let p = ground.params;
    let g = excited_grid(&p, &RadialGridConfig::excited())?;
    let k = build_riesz_kernel(&g, p.alpha)?;
    let excited = solve_excited(&p, &s.consts, &k, &s.solver, &ground)?;
    Ok(Pair { ground, excited })
}

fn default_pair() -> Result<&'static Pair, String> {
    static P: OnceLock<Result<Pair, String>> = OnceLock::new();
    P.get_or_init(|| pair_at(0.75 * setup().consts.a0).map_err(|e| e.to_string()))
        .as_ref()
        .map_err(Clone::clone)
}

fn item(out: &mut Vec<(String, bool)>, pass: bool, text: String) {
    out.push((text, pass));
}

fn report_items(out: &mut Vec<(String, bool)>, rep: &DiagnosticReport, names: &[&str]) {
    for n in names {
        match rep.find(n) {
            Some(c) => item(
                out,
                c.status != choquard::verify::Status::Fail,
                format!("{n} {:.3e} (bound {:.1e})", c.measured, c.threshold),
            ),
            None => item(out, false, format!("{n} missing from report")),
        }
    }
}

fn constants_pipeline() -> Outcome {
    let s = setup();
    let c = &s.consts;
    let mut out = Vec::new();
    let f0 = f_mu_a(&s.base.with_mass(c.a0), c, c.rho0).map_err(|e| e.to_string())?;
    item(
        &mut out,
        f0.abs() <= 1e-10,
        format!("f(rho0) at a0 = {f0:.2e}"),
    );
    let mut worst: f64 = 0.0;
    let mut agree = true;
    for k in 1..=50 {
        let p = s.base.with_mass(2.0 * c.a0 * k as f64 / 50.0);
        let r = classify_regime(&p, c);
        worst = worst.max((r.fmax - max_f_closed_form(&p, c)).abs());
        agree &= match r.regime {
            Regime::Omega1 => r.fmax > 0.0,
            Regime::Omega2 => r.fmax.abs() < 1e-9,
            Regime::Omega3 => r.fmax < 0.0,
        };
    }
    item(
        &mut out,
        worst <= 1e-10,
        format!("max f vs closed form {worst:.2e}"),
    );
    item(
        &mut out,
        agree,
        "regime matches sign of max f on 50 masses".into(),
    );
    Ok(out)
}

fn riesz_oracle() -> Outcome {
    let mut out = Vec::new();
    let g = build_radial_grid(3, 4.0, 1024, GridKind::Uniform).map_err(|e| e.to_string())?;
    let k = build_riesz_kernel(&g, 2.0).map_err(|e| e.to_string())?;
    let f = RadialField::from_fn(&g, |r| if r < 1.0 { 1.0 } else { 0.0 });
    let v = riesz_convolve(&k, &f).map_err(|e| e.to_string())?;
    let (mut inner, mut outer): (f64, f64) = (0.0, 0.0);
    for (r, val) in g.nodes().iter().zip(&v.values) {
        if *r <= 1.0 {
            inner = inner.max((val / ((3.0 - r * r) / 6.0) - 1.0).abs());
        } else {
            outer = outer.max((val * 3.0 * r - 1.0).abs());
        }
    }
    item(
        &mut out,
        inner <= 1e-4,
        format!("ball interior {inner:.2e}"),
    );
    item(
        &mut out,
        outer <= 1e-4,
        format!("ball exterior {outer:.2e}"),
    );
    let a: Vec<f64> = g
        .nodes()
        .iter()
        .map(|r| (-(r - 1.0).powi(2)).exp() * (2.0 + r.sin()))
        .collect();
    let b: Vec<f64> = g.nodes().iter().map(|r| (-r).exp() * r.cos()).collect();
    let (l, r) = (g.inner(&k.apply(&a), &b), g.inner(&a, &k.apply(&b)));
    let asym = ((l - r) / l).abs();
    item(
        &mut out,
        asym <= 1e-10,
        format!("self-adjointness {asym:.2e}"),
    );
    Ok(out)
}

fn shooting_and_gn() -> Outcome {
    let s = setup();
    let mut out = Vec::new();
    let p = shoot_profile(3, s.base.q).map_err(|e| e.to_string())?;
    let h = 1e-2;
    let rs: Vec<f64> = (0..((p.r_tail - 1.0) / h) as usize)
        .map(|k| 0.5 + k as f64 * h)
        .collect();
    let v = p.sample(&rs);
    let mut worst: f64 = 0.0;
    for i in 2..rs.len() - 2 {
        let d2 = (-v[i + 2] + 16.0 * v[i + 1] - 30.0 * v[i] + 16.0 * v[i - 1] - v[i - 2])
            / (12.0 * h * h);
        let d1 = (-v[i + 2] + 8.0 * v[i + 1] - 8.0 * v[i - 1] + v[i - 2]) / (12.0 * h);
        worst = worst.max((d2 + 2.0 * d1 / rs[i] - v[i] + v[i].powf(s.base.q - 1.0)).abs());
    }
    item(
        &mut out,
        worst <= 1e-6,
        format!("ODE plug-back residual {worst:.2e}"),
    );
    let g = build_radial_grid(3, 30.0, 512, GridKind::Graded { stretch: 3.0 })
        .map_err(|e| e.to_string())?;
    let k = build_riesz_kernel(&g, s.base.alpha).map_err(|e| e.to_string())?;
    let params = s.base.with_mass(0.75 * s.consts.a0);
    let rep = check_inequalities(&g, &k, &s.consts, &params, 20, 1).map_err(|e| e.to_string())?;
    report_items(
        &mut out,
        &rep,
        &["GN equality on Q", "GN strict on random fields"],
    );
    Ok(out)
}

fn bubbles() -> Outcome {
    let s = setup();
    let mut out = Vec::new();
    let g = build_radial_grid(3, 4.0, 1024, GridKind::Graded { stretch: 3.0 })
        .map_err(|e| e.to_string())?;
    let params = s.base.with_mass(0.75 * s.consts.a0);
    let rep = check_bubble_expansions(&g, &s.consts, &params, &[0.2, 0.1, 0.05])
        .map_err(|e| e.to_string())?;
    for c in &rep.checks {
        if c.status != choquard::verify::Status::Skip {
            item(
                &mut out,
                c.status == choquard::verify::Status::Pass,
                format!(
                    "{} {:.3e} (reference {:.2})",
                    c.name, c.measured, c.threshold
                ),
            );
        }
    }
    if out.is_empty() {
        return Err("no bubble checks ran".into());
    }
    Ok(out)
}

fn solution_items(rec: &SolutionRecord, out: &mut Vec<(String, bool)>) -> Result<(), String> {
    let k = build_riesz_kernel(&rec.u.grid, rec.params.alpha).map_err(|e| e.to_string())?;
    let res = verify_solution(rec, &k).map_err(|e| e.to_string())?;
    let grad = rec.u.grad_sq();
    let prel = rec.breakdown.pohozaev.abs() / grad;
    item(
        out,
        rec.converged,
        format!("{} converged, residual {:.2e}", rec.branch, rec.residual),
    );
    item(out, rec.lambda < 0.0, format!("lambda {:.5}", rec.lambda));
    item(out, prel <= 1e-6, format!("|P|/|grad u|^2 {prel:.2e}"));
    item(
        out,
        res.pohozaev_full_rel <= 1e-5,
        format!("full Pohozaev identity {:.2e}", res.pohozaev_full_rel),
    );
    Ok(())
}

fn ground_state() -> Outcome {
    let s = setup();
    let pair = default_pair()?;
    let g = &pair.ground;
    let mut out = Vec::new();
    solution_items(g, &mut out)?;
    item(
        &mut out,
        g.breakdown.total < 0.0,
        format!("E {:.6}", g.breakdown.total),
    );
    let grad = g.u.grad_sq();
    item(
        &mut out,
        grad < s.consts.rho0,
        format!("|grad u|^2 {grad:.4} < rho0"),
    );
    let dt = (g.fiber.tau_plus - 1.0).abs();
    item(&mut out, dt <= 1e-4, format!("tau_plus - 1 = {dt:.1e}"));
    let rep = check_qualitative(g);
    report_items(
        &mut out,
        &rep,
        &[
            "positive profile",
            "radially non-increasing",
            "decay fit R^2",
        ],
    );
    Ok(out)
}

fn excited_checks(pair: &Pair, tag: &str, out: &mut Vec<(String, bool)>) -> Result<(), String> {
    let s = setup();
    let (g, e) = (&pair.ground, &pair.excited);
    let mut local = Vec::new();
    solution_items(e, &mut local)?;
    let level = e.breakdown.total;
    let bound = g.breakdown.total + s.consts.bubble_level(&e.params);
    item(
        &mut local,
        level > 0.0 && level < bound,
        format!("0 < E {level:.5} < {bound:.5}"),
    );
    item(
        &mut local,
        level > g.breakdown.total,
        "E(u-) > E(u+)".into(),
    );
    let dt = (e.fiber.tau_minus - 1.0).abs();
    item(&mut local, dt <= 1e-4, format!("tau_minus - 1 = {dt:.1e}"));
    out.extend(local.into_iter().map(|(t, p)| (format!("{tag}: {t}"), p)));
    Ok(())
}

fn excited_state() -> Outcome {
    let mut out = Vec::new();
    excited_checks(default_pair()?, "0.75 a0", &mut out)?;
    let at_a0 = pair_at(setup().consts.a0).map_err(|e| format!("a0: {e}"))?;
    excited_checks(&at_a0, "a0", &mut out)?;
    Ok(out)
}

fn landscape() -> Outcome {
    let s = setup();
    let a0 = s.consts.a0;
    let pair = default_pair()?;
    let mut out = Vec::new();
    let rep = check_energy_landscape(&pair.ground, &pair.excited, &s.consts, &pair.ground.params);
    report_items(&mut out, &rep, &["ground level negative"]);
    let level = |a: f64| {
        ground_at(a)
            .map(|r| r.breakdown.total)
            .map_err(|e| e.to_string())
    };
    for a in [0.75 * a0, 0.5 * a0] {
        let (m, half) = (level(a)?, level(0.5 * a)?);
        let gap = 2.0 * half - m;
        item(
            &mut out,
            gap >= 1e-6,
            format!("2 m(a/2) - m(a) = {gap:.3e} at a = {:.2} a0", a / a0),
        );
    }
    let m = pair.ground.breakdown.total;
    for f in [0.99, 1.01] {
        let rel = ((level(f * 0.75 * a0)? - m) / m).abs();
        item(
            &mut out,
            rel <= 0.05,
            format!("m at {f} a: relative change {rel:.3e}"),
        );
    }
    Ok(out)
}

fn dynamics_integrity() -> Outcome {
    let pair = default_pair()?;
    let g = &pair.ground;
    let p = g.params;
    let mut out = Vec::new();
    let cfg = DynamicsConfig::default();
    let grid = auto_box(&g.u, p.p_bar(), &cfg).map_err(|e| e.to_string())?;
    let psi0 = CartesianField::from_radial(&grid, &g.u);
    let monitors = Monitors {
        sample_every: 5,
        energy_tol: 1e-2,
        ..Default::default()
    };
    let (traj, _) = run_simulation(&psi0, 5.0, cfg.dt, &p, &monitors).map_err(|e| e.to_string())?;
    item(
        &mut out,
        traj.max_mass_drift <= 1e-10,
        format!("mass drift {:.2e}/step", traj.max_mass_drift),
    );
    let ed = traj.energy_drift();
    item(
        &mut out,
        ed <= 1e-6,
        format!("energy drift {ed:.2e} over T=5 (n={})", grid.n()),
    );

    let lin = CartesianGrid3::new(64, 8.0).map_err(|e| e.to_string())?;
    let v: Vec<f64> = (0..lin.len())
        .map(|i| {
            let [x, y, z] = lin.position(i);
            3.0 * (-(x * x + y * y + z * z)).exp()
        })
        .collect();
    let start = CartesianField::from_fn(&lin, |[x, y, z]| {
        Complex64::new((-((x - 1.0).powi(2) + y * y + z * z) / 2.0).exp(), 0.0)
    });
    let evolve = |dt: f64| -> Result<Vec<Complex64>, String> {
        let mut prop = Propagator::new(&lin, &p, dt, Potential::Frozen(v.clone()))
            .map_err(|e| e.to_string())?;
        let mut psi = start.data.clone();
        prop.advance(&mut psi, (1.0 / dt).round() as usize);
        Ok(psi)
    };
    let reference = evolve(0.05 / 32.0)?;
    let err = |a: &[Complex64]| {
        (a.iter()
            .zip(&reference)
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            * lin.cell_volume())
        .sqrt()
    };
    let ratio = err(&evolve(0.05)?) / err(&evolve(0.025)?);
    item(
        &mut out,
        (3.5..=4.5).contains(&ratio),
        format!("dt-halving error ratio {ratio:.3}"),
    );

    let s = 1.3f64;
    let scaled = CartesianField::from_fn(&grid, |[x, y, z]| {
        let r = s * (x * x + y * y + z * z).sqrt();
        Complex64::new(
            if r < g.u.grid.radius() {
                s.powf(1.5) * g.u.eval(r)
            } else {
                0.0
            },
            0.0,
        )
    });
    let h = 0.01;
    let mut prop = Propagator::new(&grid, &p, h / 10.0, Potential::SelfConsistent)
        .map_err(|e| e.to_string())?;
    let pz = prop.observe(&scaled.data, false).pohozaev;
    let mut fwd = scaled.data.clone();
    prop.advance(&mut fwd, 10);
    let mut back = scaled.data.clone();
    prop.retreat(&mut back, 10);
    let second =
        (prop.observe(&fwd, true).virial_rate - prop.observe(&back, true).virial_rate) / (2.0 * h);
    let rel = ((second - 8.0 * pz) / (8.0 * pz)).abs();
    item(
        &mut out,
        rel <= 0.01,
        format!("Phi'' vs 8P relative {rel:.2e} (P = {pz:.4})"),
    );
    Ok(out)
}

fn stability() -> Outcome {
    let pair = default_pair()?;
    let cfg = DynamicsConfig::default();
    let mut out = Vec::new();
    let (_, o) = stability_experiment(&pair.ground, 0.01, 20.0, &cfg).map_err(|e| e.to_string())?;
    let d = o.max_orbit_dist.unwrap_or(f64::INFINITY);
    item(
        &mut out,
        o.verdict == Verdict::Stable && d <= 0.1,
        format!(
            "delta 0.01: {} with orbit distance {d:.3e} <= 0.1",
            o.verdict
        ),
    );
    let (_, c) = stability_experiment(&pair.ground, 0.0, 20.0, &cfg).map_err(|e| e.to_string())?;
    let d = c.max_orbit_dist.unwrap_or(f64::INFINITY);
    item(
        &mut out,
        d <= 1e-3,
        format!("delta 0 control: orbit distance {d:.3e} <= 1e-3"),
    );
    Ok(out)
}

fn instability() -> Outcome {
    let pair = default_pair()?;
    let cfg = DynamicsConfig::default();
    let mut out = Vec::new();
    let (traj, o) = instability_experiment(&pair.excited, 1.1, cfg.blowup_t_final, &cfg)
        .map_err(|e| e.to_string())?;
    let pmax = traj
        .pohozaev
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    item(
        &mut out,
        o.verdict == Verdict::Blowup,
        format!(
            "s = 1.1: {} (t* = {})",
            o.verdict,
            o.t_star.map_or("none".into(), |t| format!("{t:.3}"))
        ),
    );
    item(
        &mut out,
        pmax < 0.0,
        format!("s = 1.1: max P(psi(t)) = {pmax:.4e} < 0"),
    );
    let (_, c) = instability_experiment(&pair.excited, 1.0, cfg.blowup_t_final, &cfg)
        .map_err(|e| e.to_string())?;
    item(
        &mut out,
        c.verdict != Verdict::Blowup,
        format!("s = 1.0 control: {}", c.verdict),
    );
    Ok(out)
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("constants pipeline", constants_pipeline),
        ("Riesz convolution oracle", riesz_oracle),
        ("scalar shooting and Gagliardo-Nirenberg", shooting_and_gn),
        ("bubble expansions", bubbles),
        ("ground state", ground_state),
        ("excited state", excited_state),
        ("landscape structure", landscape),
        ("dynamics integrity", dynamics_integrity),
        ("stability experiment", stability),
        ("instability experiment", instability),
    ];
    let filter: Vec<usize> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect())
        .unwrap_or_default();
    let mut lines = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let t = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()))
        });
        let secs = t.elapsed().as_secs_f64();
        let (pass, detail) = match &result {
            Ok(items) => (
                !items.is_empty() && items.iter().all(|(_, p)| *p),
                items
                    .iter()
                    .map(|(t, p)| if *p { t.clone() } else { format!("FAILED {t}") })
                    .collect::<Vec<_>>()
                    .join("; "),
            ),
            Err(e) => (false, format!("error: {e}")),
        };
        let line = format!(
            "criterion {id:>2} {:<40} {}  [{secs:.1} s]  {detail}",
            name,
            if pass { "PASS" } else { "FAIL" }
        );
        println!("{line}");
        lines.push(pass);
    }
    let failed = lines.iter().filter(|p| !**p).count();
    println!(
        "acceptance: {} passed, {failed} failed",
        lines.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
