//! Batch front end: `constants`, `solve-ground`, `solve-excited`, `simulate`, `verify`, `sweep`.

use crate::config::{MassSpec, OutputFormat, RunConfig};
use crate::discretization::{build_radial_grid, build_riesz_kernel, GridKind};
use crate::dynamics::{instability_experiment, stability_experiment, Verdict};
use crate::error::{Error, Result};
use crate::io::{self, Provenance};
use crate::model::{
    classify_regime, f_mu_a, max_f_closed_form, ModelParams, Regime, RegimeReport, SharpConstants,
};
use crate::solvers::{excited_grid, ground_grid, solve_excited, solve_ground, SolutionRecord};
use crate::verify::{
    check_bubble_expansions, check_energy_landscape, check_inequalities, check_pohozaev_full,
    check_qualitative, DiagnosticReport,
};
use clap::{CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DIAGNOSTIC: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_REGIME: i32 = 3;
pub const EXIT_VERDICT: i32 = 4;
pub const EXIT_MISSING: i32 = 5;

#[derive(Debug, Parser)]
#[command(
    name = "choquard",
    version,
    about = "Normalized standing waves of the upper-critical Choquard equation"
)]
pub struct Cli {
    /// TOML run configuration; every key is optional.
    #[arg(short, long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides `output_dir` (after `CHOQUARD_OUTPUT_DIR`).
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    /// Mass: a number, `a0` or `<x>a0`.
    #[arg(long, global = true)]
    pub a: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    Stability,
    Instability,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Qualitative,
    Pohozaev,
    Landscape,
    Inequalities,
    Bubbles,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sharp constants, thresholds and the regime of the configured mass.
    Constants,
    /// Ground state on the small-kinetic side of the Pohozaev manifold.
    SolveGround,
    /// Second solution; needs the ground state from `solve-ground`.
    SolveExcited,
    /// Time evolution of a perturbed ground state or dilated second solution.
    Simulate {
        #[arg(long, value_enum)]
        experiment: Experiment,
        /// Horizon; defaults to `T` or `blowup_T` by experiment.
        #[arg(long = "T")]
        t_final: Option<f64>,
        /// Time step; defaults to `dt` or `blowup_dt` by experiment.
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        scale_s: Option<f64>,
        #[arg(long = "box-L")]
        box_l: Option<f64>,
        #[arg(long)]
        box_n: Option<usize>,
    },
    /// Diagnostic suite on the stored solutions.
    Verify {
        /// Restrict to the named groups.
        #[arg(long, value_enum, value_delimiter = ',')]
        only: Vec<Suite>,
    },
    /// Ground and second solution at several fractions of `a₀`.
    Sweep {
        #[arg(long, value_delimiter = ',')]
        fractions: Option<Vec<f64>>,
    },
}

/// Exit code for a failed command.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Validation { .. } => EXIT_CONFIG,
        Error::Regime(_) => EXIT_REGIME,
        Error::MissingArtifact(_) => EXIT_MISSING,
        _ => EXIT_DIAGNOSTIC,
    }
}

/// Parses `args` (program name first) and runs the command; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let defaults = format!(
        "Configuration keys and defaults:\n\n{}",
        RunConfig::default().canonical()
    );
    let matches = match Cli::command()
        .after_long_help(defaults)
        .try_get_matches_from(args)
    {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return EXIT_CONFIG;
        }
    };
    match run(&cli, |k| std::env::var(k).ok()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::MissingArtifact(_) = e {
                eprintln!("run `choquard solve-ground` and `choquard solve-excited` first");
            }
            exit_code(&e)
        }
    }
}

pub fn resolve_config(cli: &Cli, env: impl Fn(&str) -> Option<String>) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.apply_env(env)?;
    if let Some(dir) = &cli.output_dir {
        cfg.output_dir = dir.clone();
    }
    if let Some(a) = &cli.a {
        cfg.a = a.parse::<MassSpec>()?;
    }
    if let Command::Simulate {
        experiment,
        t_final,
        dt,
        delta,
        scale_s,
        box_l,
        box_n,
    } = &cli.command
    {
        let (t, step) = match experiment {
            Experiment::Stability => (&mut cfg.t_final, &mut cfg.dt),
            Experiment::Instability => (&mut cfg.blowup_t_final, &mut cfg.blowup_dt),
        };
        *t = t_final.unwrap_or(*t);
        *step = dt.unwrap_or(*step);
        cfg.delta = delta.unwrap_or(cfg.delta);
        cfg.scale_s = scale_s.unwrap_or(cfg.scale_s);
        cfg.box_half_width = box_l.or(cfg.box_half_width);
        cfg.box_n = box_n.unwrap_or(cfg.box_n);
    }
    cfg.validate()?;
    Ok(cfg)
}

struct Context {
    cfg: RunConfig,
    prov: Provenance,
    consts: SharpConstants,
    params: ModelParams,
}

impl Context {
    fn new(cfg: RunConfig) -> Result<Self> {
        let consts = SharpConstants::compute(&cfg.base_model()?)?;
        let params = cfg.model(&consts)?;
        let prov = Provenance::from_config_text(&cfg.digest_text());
        Ok(Context {
            cfg,
            prov,
            consts,
            params,
        })
    }

    fn dir(&self, name: &str) -> PathBuf {
        self.cfg.output_dir.join(name)
    }

    fn regime(&self) -> RegimeReport {
        classify_regime(&self.params, &self.consts)
    }

    fn require_existence_regime(&self) -> Result<()> {
        let r = self.regime();
        if r.regime == Regime::Omega3 {
            return Err(Error::Regime(format!(
                "a = {} lies in Omega3 (mu a^(q(1-gamma_q)/2) = {:.6e} > {:.6e}); no existence theory covers it",
                self.params.a, r.lhs, r.rhs
            )));
        }
        Ok(())
    }
}

pub fn run(cli: &Cli, env: impl Fn(&str) -> Option<String>) -> Result<i32> {
    let ctx = Context::new(resolve_config(cli, env)?)?;
    match &cli.command {
        Command::Constants => cmd_constants(&ctx),
        Command::SolveGround => cmd_solve_ground(&ctx),
        Command::SolveExcited => cmd_solve_excited(&ctx),
        Command::Simulate { experiment, .. } => cmd_simulate(&ctx, *experiment),
        Command::Verify { only } => cmd_verify(&ctx, only),
        Command::Sweep { fractions } => cmd_sweep(&ctx, fractions.as_deref()),
    }
}

#[derive(Serialize)]
struct ConstantsFile {
    params: ModelParams,
    constants: SharpConstants,
    regime: RegimeReport,
    bubble_level: f64,
    f_at_rho0_for_a0: f64,
    max_f: f64,
    max_f_closed_form: f64,
}

fn cmd_constants(ctx: &Context) -> Result<i32> {
    let (p, c) = (&ctx.params, &ctx.consts);
    let regime = ctx.regime();
    let f0 = f_mu_a(&p.with_mass(c.a0), c, c.rho0)?;
    let file = ConstantsFile {
        params: *p,
        constants: *c,
        regime,
        bubble_level: c.bubble_level(p),
        f_at_rho0_for_a0: f0,
        max_f: regime.fmax,
        max_f_closed_form: max_f_closed_form(p, c),
    };
    io::write_stamped_json(&ctx.dir("constants.json"), &file, &ctx.prov)?;
    println!(
        "A_alpha  {:.12e}\nC_alpha  {:.12e}\nS        {:.12e}",
        c.a_alpha, c.c_alpha, c.s
    );
    println!(
        "S_alpha  {:.12e}\nC_Nq     {:.12e}\nK        {:.12e}",
        c.s_alpha, c.c_nq, c.k
    );
    println!("rho0     {:.12e}\na0       {:.12e}", c.rho0, c.a0);
    println!("a        {:.12e}  ({:.6} a0)", p.a, p.a / c.a0);
    println!("regime   {}", regime.regime);
    if regime.regime == Regime::Omega3 {
        eprintln!("warning: Omega3 mass, no existence theory in scope");
    }
    println!("f(rho0) at a0 = {f0:.3e}");
    if f0.abs() > 1e-10 {
        eprintln!(
            "constants self-check failed: |f(rho0)| = {:.3e} > 1e-10",
            f0.abs()
        );
        return Ok(EXIT_DIAGNOSTIC);
    }
    Ok(EXIT_OK)
}

fn solve_ground_record(
    cfg: &RunConfig,
    params: &ModelParams,
    consts: &SharpConstants,
) -> Result<SolutionRecord> {
    let grid = ground_grid(params, consts, &cfg.ground_grid())?;
    let kernel = build_riesz_kernel(&grid, params.alpha)?;
    solve_ground(params, consts, &kernel, &cfg.solver())
}

fn solve_excited_record(
    cfg: &RunConfig,
    params: &ModelParams,
    consts: &SharpConstants,
    ground: &SolutionRecord,
) -> Result<SolutionRecord> {
    let grid = excited_grid(params, &cfg.excited_grid())?;
    let kernel = build_riesz_kernel(&grid, params.alpha)?;
    solve_excited(params, consts, &kernel, &cfg.solver(), ground)
}

fn report_out(ctx: &Context, dir: &Path, rep: &DiagnosticReport) -> Result<i32> {
    io::write_stamped_json(&dir.join("diagnostics.json"), rep, &ctx.prov)?;
    print!("{}", rep.to_table());
    if rep.passed() {
        Ok(EXIT_OK)
    } else {
        for c in rep.failures() {
            eprintln!("failed: {} ({})", c.name, c.paper_anchor);
        }
        Ok(EXIT_DIAGNOSTIC)
    }
}

fn print_record(rec: &SolutionRecord) {
    let b = &rec.breakdown;
    println!(
        "{}: E = {:.10e}  lambda = {:.10e}  |grad u|^2 = {:.10e}  residual = {:.3e}  iterations = {}+{}",
        rec.branch,
        b.total,
        rec.lambda,
        2.0 * b.kinetic,
        rec.residual,
        rec.iterations,
        rec.newton_iterations
    );
    for w in &rec.warnings {
        eprintln!("warning: {w}");
    }
}

fn solution_checks(rec: &SolutionRecord) -> Result<DiagnosticReport> {
    let kernel = build_riesz_kernel(&rec.u.grid, rec.params.alpha)?;
    let mut rep = check_qualitative(rec);
    rep.merge(check_pohozaev_full(rec, &kernel)?);
    Ok(rep)
}

fn cmd_solve_ground(ctx: &Context) -> Result<i32> {
    ctx.require_existence_regime()?;
    let rec = solve_ground_record(&ctx.cfg, &ctx.params, &ctx.consts)?;
    let dir = ctx.dir("ground");
    io::write_solution(&dir, &rec, &ctx.prov)?;
    print_record(&rec);
    if !rec.converged {
        return Ok(EXIT_DIAGNOSTIC);
    }
    report_out(ctx, &dir, &solution_checks(&rec)?)
}

/// Loads a stored solution and recomputes its diagnostics from the profile.
fn load_solution(ctx: &Context, name: &str) -> Result<SolutionRecord> {
    let (mut rec, _) = io::read_solution(&ctx.dir(name))?;
    if rec.params != ctx.params {
        return Err(Error::MissingArtifact(format!(
            "{} was computed for {:?}, not for the current configuration {:?}",
            ctx.dir(name).display(),
            rec.params,
            ctx.params
        )));
    }
    let kernel = build_riesz_kernel(&rec.u.grid, rec.params.alpha)?;
    rec.refresh(&kernel)?;
    Ok(rec)
}

fn cmd_solve_excited(ctx: &Context) -> Result<i32> {
    ctx.require_existence_regime()?;
    let ground = load_solution(ctx, "ground")?;
    let rec = solve_excited_record(&ctx.cfg, &ctx.params, &ctx.consts, &ground)?;
    let dir = ctx.dir("excited");
    io::write_solution(&dir, &rec, &ctx.prov)?;
    print_record(&rec);
    if !rec.converged {
        return Ok(EXIT_DIAGNOSTIC);
    }
    let mut rep = solution_checks(&rec)?;
    rep.merge(check_energy_landscape(
        &ground,
        &rec,
        &ctx.consts,
        &ctx.params,
    ));
    report_out(ctx, &dir, &rep)
}

fn cmd_simulate(ctx: &Context, experiment: Experiment) -> Result<i32> {
    let p = &ctx.params;
    if p.p_bar() < 2.0 {
        return Err(Error::Regime(format!(
            "dynamics needs p_bar = (N+alpha)/(N-2) >= 2, got {}; the well-posedness theory does not cover it",
            p.p_bar()
        )));
    }
    ctx.require_existence_regime()?;
    let dcfg = ctx.cfg.dynamics();
    let (name, expected, (traj, outcome)) = match experiment {
        Experiment::Stability => {
            let ground = load_solution(ctx, "ground")?;
            (
                "simulate-stability",
                Verdict::Stable,
                stability_experiment(&ground, dcfg.delta, dcfg.t_final, &dcfg)?,
            )
        }
        Experiment::Instability => {
            let excited = load_solution(ctx, "excited")?;
            (
                "simulate-instability",
                Verdict::Blowup,
                instability_experiment(&excited, dcfg.scale_s, dcfg.blowup_t_final, &dcfg)?,
            )
        }
    };
    let dir = ctx.dir(name);
    match ctx.cfg.format {
        OutputFormat::Csv => {
            io::write_trajectory_csv(&dir.join("trajectory.csv"), &traj, &ctx.prov)?
        }
        OutputFormat::Json => {
            io::write_stamped_json(&dir.join("trajectory.json"), &traj, &ctx.prov)?
        }
    }
    io::write_outcome(&dir.join("outcome.json"), &outcome, &ctx.prov)?;
    if let (true, Some(last)) = (ctx.cfg.save_final_state, &traj.final_state) {
        io::write_box_field(&dir.join("final_state.bin"), last, &ctx.prov)?;
    }
    println!("verdict {}", outcome.verdict);
    if let Some(t) = outcome.t_star {
        println!("t_star {t:.6e}");
    }
    if let Some(d) = outcome.max_orbit_dist {
        println!("max orbit distance {d:.6e}");
    }
    println!(
        "energy drift {:.3e}  mass drift per step {:.3e}",
        traj.energy_drift(),
        traj.max_mass_drift
    );
    if let Some(h) = &outcome.halted {
        eprintln!("halted: {h}");
    }
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    Ok(if outcome.verdict == expected {
        EXIT_OK
    } else {
        EXIT_VERDICT
    })
}

fn cmd_verify(ctx: &Context, only: &[Suite]) -> Result<i32> {
    let wants = |s: Suite| only.is_empty() || only.contains(&s);
    let needs_ground = [Suite::Qualitative, Suite::Pohozaev, Suite::Landscape]
        .into_iter()
        .any(wants);
    let needs_excited = needs_ground;
    let mut missing = Vec::new();
    for (name, needed) in [("ground", needs_ground), ("excited", needs_excited)] {
        if needed && !ctx.dir(name).join("meta.json").exists() {
            missing.push(format!(
                "{} (run `choquard solve-{name}`)",
                ctx.dir(name).display()
            ));
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingArtifact(missing.join(", ")));
    }
    let mut rep = DiagnosticReport::default();
    let solutions = if needs_ground {
        Some((
            load_solution(ctx, "ground")?,
            load_solution(ctx, "excited")?,
        ))
    } else {
        None
    };
    if let Some((ground, excited)) = &solutions {
        for rec in [ground, excited] {
            if wants(Suite::Qualitative) {
                rep.merge(check_qualitative(rec));
            }
            if wants(Suite::Pohozaev) {
                let kernel = build_riesz_kernel(&rec.u.grid, rec.params.alpha)?;
                rep.merge(check_pohozaev_full(rec, &kernel)?);
            }
        }
        if wants(Suite::Landscape) {
            rep.merge(check_energy_landscape(
                ground,
                excited,
                &ctx.consts,
                &ctx.params,
            ));
        }
    }
    if wants(Suite::Inequalities) {
        let grid = build_radial_grid(ctx.params.n, 30.0, 512, GridKind::Graded { stretch: 3.0 })?;
        let kernel = build_riesz_kernel(&grid, ctx.params.alpha)?;
        rep.merge(check_inequalities(
            &grid,
            &kernel,
            &ctx.consts,
            &ctx.params,
            ctx.cfg.n_samples,
            ctx.cfg.seed,
        )?);
    }
    if wants(Suite::Bubbles) {
        let grid = build_radial_grid(ctx.params.n, 4.0, 1024, GridKind::Graded { stretch: 3.0 })?;
        rep.merge(check_bubble_expansions(
            &grid,
            &ctx.consts,
            &ctx.params,
            &ctx.cfg.bubble_eps_list,
        )?);
    }
    let dir = ctx.dir("verify");
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("report.txt"), rep.to_table())?;
    io::write_stamped_json(&dir.join("report.json"), &rep, &ctx.prov)?;
    print!("{}", rep.to_table());
    if rep.passed() {
        Ok(EXIT_OK)
    } else {
        for c in rep.failures() {
            eprintln!("failed: {} ({})", c.name, c.paper_anchor);
        }
        Ok(EXIT_DIAGNOSTIC)
    }
}

struct SweepRow {
    fraction: f64,
    a: f64,
    m_a: f64,
    e_minus: f64,
    bound: f64,
    lambda_plus: f64,
    lambda_minus: f64,
    grad_plus: f64,
    grad_minus: f64,
    landscape_ok: bool,
}

fn sweep_job(ctx: &Context, fraction: f64) -> Result<SweepRow> {
    let params = ctx.params.with_mass(fraction * ctx.consts.a0);
    if classify_regime(&params, &ctx.consts).regime == Regime::Omega3 {
        return Err(Error::Regime(format!(
            "fraction {fraction} of a0 lies in Omega3"
        )));
    }
    let ground = solve_ground_record(&ctx.cfg, &params, &ctx.consts)?;
    let excited = solve_excited_record(&ctx.cfg, &params, &ctx.consts, &ground)?;
    let rep = check_energy_landscape(&ground, &excited, &ctx.consts, &params);
    Ok(SweepRow {
        fraction,
        a: params.a,
        m_a: ground.breakdown.total,
        e_minus: excited.breakdown.total,
        bound: ground.breakdown.total + ctx.consts.bubble_level(&params),
        lambda_plus: ground.lambda,
        lambda_minus: excited.lambda,
        grad_plus: ground.u.grad_sq(),
        grad_minus: excited.u.grad_sq(),
        landscape_ok: rep.passed() && ground.converged && excited.converged,
    })
}

/// Runs `jobs` on `threads` workers, keeping the input order.
fn run_pool<T: Send, R: Send>(jobs: Vec<T>, threads: usize, f: impl Fn(T) -> R + Sync) -> Vec<R> {
    let n = jobs.len();
    let queue = std::sync::Mutex::new(jobs.into_iter().enumerate().collect::<Vec<_>>());
    let results = std::sync::Mutex::new((0..n).map(|_| None).collect::<Vec<Option<R>>>());
    std::thread::scope(|s| {
        for _ in 0..threads.clamp(1, n.max(1)) {
            s.spawn(|| loop {
                let Some((i, job)) = queue.lock().unwrap().pop() else {
                    break;
                };
                let r = f(job);
                results.lock().unwrap()[i] = Some(r);
            });
        }
    });
    results
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every job ran"))
        .collect()
}

fn cmd_sweep(ctx: &Context, fractions: Option<&[f64]>) -> Result<i32> {
    let fractions = fractions
        .map(<[f64]>::to_vec)
        .unwrap_or_else(|| ctx.cfg.sweep_fractions.clone());
    if fractions.is_empty() || fractions.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::Config("sweep fractions must be positive".into()));
    }
    let results = run_pool(fractions.clone(), ctx.cfg.threads, |x| sweep_job(ctx, x));
    let mut rows = Vec::new();
    let mut code = EXIT_OK;
    println!(
        "{:>9}  {:>14}  {:>14}  {:>14}  {:>14}  ok",
        "a/a0", "m_a", "E_minus", "bound", "lambda_plus"
    );
    for (x, r) in fractions.iter().zip(results) {
        match r {
            Ok(row) => {
                println!(
                    "{:>9.4}  {:>14.6e}  {:>14.6e}  {:>14.6e}  {:>14.6e}  {}",
                    row.fraction,
                    row.m_a,
                    row.e_minus,
                    row.bound,
                    row.lambda_plus,
                    row.landscape_ok
                );
                if !row.landscape_ok {
                    code = EXIT_DIAGNOSTIC;
                }
                rows.push(vec![
                    row.fraction,
                    row.a,
                    row.m_a,
                    row.e_minus,
                    row.bound,
                    row.lambda_plus,
                    row.lambda_minus,
                    row.grad_plus,
                    row.grad_minus,
                    if row.landscape_ok { 1.0 } else { 0.0 },
                ]);
            }
            Err(e) => {
                eprintln!("fraction {x}: {e}");
                code = code.max(exit_code(&e));
            }
        }
    }
    io::write_csv(
        &ctx.dir("sweep.csv"),
        &ctx.prov,
        &[
            "fraction",
            "a",
            "m_a",
            "E_minus",
            "bound",
            "lambda_plus",
            "lambda_minus",
            "grad_sq_plus",
            "grad_sq_minus",
            "landscape_ok",
        ],
        &rows,
    )?;
    Ok(code)
}
