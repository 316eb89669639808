use super::ground::{check_regime, finish};
use super::{
    flow_step, implicit_factor, make_bubble, newton, normalize, projected_residual, Branch,
    SolutionRecord, SolverConfig,
};
use crate::discretization::{dilate, rescale_field, RadialField, RieszKernel};
use crate::error::{Error, Result};
use crate::functionals::{base_integrals, energy, find_fiber_points_unchecked};
use crate::model::{ModelParams, SharpConstants};

/// Moves `u` to the upper critical point of its fiber.
fn project_minus(
    u: &RadialField,
    params: &ModelParams,
    kernel: &RieszKernel,
) -> Result<(RadialField, f64)> {
    let fp = find_fiber_points_unchecked(&base_integrals(u, params, kernel)?, params)?;
    let v = normalize(&rescale_field(u, fp.tau_minus)?.field, params.a);
    let e = energy(&v, params, kernel)?.total;
    Ok((v, e))
}

/// Second critical point, by descent of `E(u_{τ_u^−})` over the mass sphere.
pub fn solve_excited(
    params: &ModelParams,
    consts: &SharpConstants,
    kernel: &RieszKernel,
    cfg: &SolverConfig,
    ground: &SolutionRecord,
) -> Result<SolutionRecord> {
    params.validate()?;
    cfg.validate()?;
    check_regime(params, consts)?;
    if !ground.converged || ground.branch != Branch::Ground {
        return Err(Error::Domain(
            "excited solve needs a converged ground state".into(),
        ));
    }
    let grid = kernel.grid();
    let n = params.n;
    let mut warnings = Vec::new();
    if params.p_bar() < 2.0 && n >= 5 {
        warnings.push(
            "seed uses the co-centered bubble construction although p_bar < 2 and N >= 5"
                .to_string(),
        );
    }
    let u_plus = ground.u.resample(grid);
    let bubble = make_bubble(cfg.bubble_eps, grid)?;
    let hat: Vec<f64> = u_plus
        .values
        .iter()
        .zip(&bubble.field.values)
        .map(|(p, b)| p + cfg.bubble_t * b)
        .collect();
    let hat = RadialField::new(grid.clone(), hat)?;
    let theta = (hat.mass() / params.a).sqrt();
    let bar = normalize(&dilate(&hat, theta, 0.5 * (n as f64 - 2.0)), params.a);
    let (mut u, mut e) = project_minus(&bar, params, kernel)?;
    let mut trace = vec![e];
    let mut dt = cfg.dt;
    let dt_max = 200.0 * cfg.dt;
    let mut chol = implicit_factor(grid, dt)?;
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
                if out.residual <= cfg.grad_tol && energy(&v, params, kernel)?.total > 0.0 {
                    u = v;
                    lambda_final = Some(out.lambda);
                    converged = true;
                    break;
                }
            }
        }
        it += 1;
        let stepped = RadialField::new(
            grid.clone(),
            flow_step(&u.values, params, kernel, &chol, dt),
        )?;
        let (v, ev) = project_minus(&stepped, params, kernel)?;
        if ev > e + 1e-12 * e.abs() {
            dt *= 0.5;
            streak = 0;
            if dt < 1e-10 {
                return Err(Error::Divergence(
                    "projected descent step collapsed below 1e-10".into(),
                ));
            }
            chol = implicit_factor(grid, dt)?;
            continue;
        }
        u = v;
        e = ev;
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
    let mut rec = finish(
        u,
        lambda_final,
        Branch::Excited,
        params,
        kernel,
        it,
        newton_iters,
        converged,
        trace,
        0,
    )?;
    let bound = ground.breakdown.total + consts.bubble_level(params);
    if rec.breakdown.total >= bound {
        rec.converged = false;
        warnings.push(format!(
            "energy {:.6e} is not below the bubble bound {bound:.6e}",
            rec.breakdown.total
        ));
    }
    rec.warnings.extend(warnings);
    Ok(rec)
}
