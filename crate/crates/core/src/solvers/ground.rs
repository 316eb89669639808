use super::{
    flow_step, implicit_factor, newton, normalize, projected_residual, Branch, SolutionRecord,
    SolverConfig,
};
use crate::discretization::{rescale_field, RadialField, RieszKernel};
use crate::error::{Error, Result};
use crate::functionals::{base_integrals, energy, find_fiber_points};
use crate::model::{classify_regime, ModelParams, Regime, SharpConstants};

pub(crate) fn check_regime(params: &ModelParams, consts: &SharpConstants) -> Result<()> {
    let report = classify_regime(params, consts);
    if report.regime == Regime::Omega3 {
        return Err(Error::Regime(format!(
            "mass {} lies in {} (lhs {:.6e} > rhs {:.6e}); no solutions are computed there",
            params.a, report.regime, report.lhs, report.rhs
        )));
    }
    Ok(())
}

/// Ground state from a Gaussian seed whose width matches the local problem.
pub fn solve_ground(
    params: &ModelParams,
    consts: &SharpConstants,
    kernel: &RieszKernel,
    cfg: &SolverConfig,
) -> Result<SolutionRecord> {
    let width = 1.5 / super::local_lambda_estimate(params, consts).abs().sqrt();
    let width = width.min(kernel.grid().radius() / 6.0);
    let seed = RadialField::from_fn(kernel.grid(), |r| (-0.5 * (r / width).powi(2)).exp());
    solve_ground_from(params, consts, kernel, cfg, &seed)
}

/// Shrinks `u` along its fiber until it sits in the ball with negative energy.
fn pull_into_ball(
    u: &RadialField,
    params: &ModelParams,
    kernel: &RieszKernel,
    rho0: f64,
) -> Result<RadialField> {
    let t = u.grad_sq();
    let mut tau = if t < rho0 {
        1.0
    } else {
        (0.5 * rho0 / t).sqrt()
    };
    for _ in 0..80 {
        let v = normalize(&rescale_field(u, tau)?.field, params.a);
        let e = energy(&v, params, kernel)?;
        if e.total < 0.0 && v.grad_sq() < rho0 {
            return Ok(v);
        }
        tau *= 0.7;
    }
    Err(Error::Divergence(
        "no fiber rescaling of the seed reaches negative energy".into(),
    ))
}

pub fn solve_ground_from(
    params: &ModelParams,
    consts: &SharpConstants,
    kernel: &RieszKernel,
    cfg: &SolverConfig,
    seed: &RadialField,
) -> Result<SolutionRecord> {
    params.validate()?;
    cfg.validate()?;
    check_regime(params, consts)?;
    let grid = kernel.grid();
    if !kernel.matches(&seed.grid) {
        return Err(Error::GridMismatch("seed and kernel grids differ".into()));
    }
    if seed.mass() <= 0.0 {
        return Err(Error::Domain("seed has zero mass".into()));
    }
    let rho0 = consts.rho0;
    let mut u = pull_into_ball(&normalize(seed, params.a), params, kernel, rho0)?;
    let mut e = energy(&u, params, kernel)?.total;
    let mut trace = vec![e];
    let mut dt = cfg.dt;
    let dt_max = 200.0 * cfg.dt;
    let mut chol = implicit_factor(grid, dt)?;
    let mut restarts = 0;
    let mut streak = 0;
    let mut newton_iters = 0;
    let mut newton_gate = cfg.newton_switch;
    let mut lambda_final = None;
    let mut converged = false;
    let mut it = 0;
    while it < cfg.max_iter {
        let (lambda, res) = projected_residual(&u.values, params, kernel);
        if res <= cfg.grad_tol {
            converged = true;
            break;
        }
        if res <= newton_gate {
            newton_gate = 0.1 * res;
            if let Some(out) = newton::polish(
                &u,
                lambda,
                params,
                kernel,
                cfg.grad_tol,
                cfg.newton_max_iter,
            ) {
                newton_iters = out.iterations;
                let v = RadialField::new(grid.clone(), out.u)?;
                let ev = energy(&v, params, kernel)?.total;
                if out.residual <= cfg.grad_tol && ev < 0.0 && v.grad_sq() < rho0 {
                    u = v;
                    lambda_final = Some(out.lambda);
                    converged = true;
                    break;
                }
            }
        }
        it += 1;
        let v = RadialField::new(
            grid.clone(),
            flow_step(&u.values, params, kernel, &chol, dt),
        )?;
        let ev = energy(&v, params, kernel)?.total;
        if ev > e + 1e-12 * e.abs() {
            dt *= 0.5;
            streak = 0;
            if dt < 1e-10 {
                return Err(Error::Divergence("flow step collapsed below 1e-10".into()));
            }
            chol = implicit_factor(grid, dt)?;
            continue;
        }
        u = v;
        e = ev;
        if u.grad_sq() >= rho0 {
            restarts += 1;
            if restarts > 3 {
                return Err(Error::Divergence("iterates keep leaving the ball".into()));
            }
            u = pull_into_ball(&u, params, kernel, rho0)?;
            e = energy(&u, params, kernel)?.total;
        }
        trace.push(e);
        streak += 1;
        if streak >= 20 && dt < dt_max {
            dt = (dt * 1.5).min(dt_max);
            streak = 0;
            chol = implicit_factor(grid, dt)?;
        }
    }
    if u.values.iter().sum::<f64>() < 0.0 {
        u = u.scaled(-1.0);
    }
    finish(
        u,
        lambda_final,
        Branch::Ground,
        params,
        kernel,
        it,
        newton_iters,
        converged,
        trace,
        restarts,
    )
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn finish(
    u: RadialField,
    lambda: Option<f64>,
    branch: Branch,
    params: &ModelParams,
    kernel: &RieszKernel,
    iterations: usize,
    newton_iterations: usize,
    converged: bool,
    energy_trace: Vec<f64>,
    restarts: usize,
) -> Result<SolutionRecord> {
    let lambda = lambda.unwrap_or_else(|| projected_residual(&u.values, params, kernel).0);
    let breakdown = energy(&u, params, kernel)?.with_lambda(lambda);
    let fiber = find_fiber_points(&base_integrals(&u, params, kernel)?, params)?;
    let (_, residual) = newton::residual(&u.values, lambda, params, kernel);
    let mut warnings = Vec::new();
    if let Some(w) = &fiber.warning {
        warnings.push(w.clone());
    }
    if !converged {
        warnings.push(format!(
            "not converged after {iterations} iterations (residual {residual:.3e})"
        ));
    }
    Ok(SolutionRecord {
        u,
        lambda,
        breakdown,
        branch,
        fiber,
        iterations,
        newton_iterations,
        residual,
        converged,
        params: *params,
        energy_trace,
        restarts,
        warnings,
    })
}
