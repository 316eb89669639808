use super::{run_simulation, Monitors, SimOutcome, TrajectoryRecord, Verdict, BOUNDARY_LAYER};
use crate::discretization::{
    radial_tail_fraction, rescale_field, CartesianField, CartesianGrid3, RadialField,
};
use crate::error::{Error, Result};
use crate::functionals::{find_fiber_points, BaseIntegrals};
use crate::solvers::{Branch, SolutionRecord};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsConfig {
    #[serde(rename = "T")]
    pub t_final: f64,
    pub dt: f64,
    pub delta: f64,
    pub scale_s: f64,
    pub box_n: usize,
    /// Half-width of the box; `None` sizes it from the tail of the profile.
    #[serde(rename = "box_L")]
    pub box_half_width: Option<f64>,
    pub sample_every: usize,
    /// Largest admissible mass fraction in the boundary layer, and of the
    /// Hartree density outside `|x| > L/2`.
    pub tail_tol: f64,
    /// Relative energy drift that aborts the stability run.
    pub energy_tol: f64,
    /// Horizon of the instability run.
    #[serde(rename = "blowup_T")]
    pub blowup_t_final: f64,
    pub blowup_dt: f64,
    pub blowup_sample_every: usize,
    /// Relative energy drift at which the instability run stops integrating.
    pub blowup_energy_tol: f64,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        DynamicsConfig {
            t_final: 20.0,
            dt: 0.1,
            delta: 0.01,
            scale_s: 1.1,
            box_n: 128,
            box_half_width: None,
            sample_every: 10,
            tail_tol: 1e-6,
            energy_tol: 1e-4,
            blowup_t_final: 1.0,
            blowup_dt: 0.005,
            blowup_sample_every: 2,
            blowup_energy_tol: 1e-3,
        }
    }
}

/// Smallest box whose boundary layer holds at most `tail_tol` of the mass and whose
/// inner half holds all but `tail_tol` of the Hartree density.
pub fn auto_box(u: &RadialField, p_bar: f64, cfg: &DynamicsConfig) -> Result<Arc<CartesianGrid3>> {
    let half = match cfg.box_half_width {
        Some(l) => l,
        None => {
            let nodes = u.grid.nodes();
            let reach = |power: f64| {
                let i =
                    nodes.partition_point(|&r| radial_tail_fraction(u, r, power) > cfg.tail_tol);
                nodes.get(i).copied().unwrap_or(u.grid.radius())
            };
            (reach(2.0) / BOUNDARY_LAYER).max(2.0 * reach(p_bar))
        }
    };
    CartesianGrid3::new(cfg.box_n, half)
}

fn load(
    u: &RadialField,
    grid: &Arc<CartesianGrid3>,
    cfg: &DynamicsConfig,
) -> Result<CartesianField> {
    let f = CartesianField::from_radial(grid, u);
    let layer = BOUNDARY_LAYER * grid.half_width();
    let tail = f.tail_fraction(layer);
    if tail > cfg.tail_tol.max(1e-12) * 10.0 {
        return Err(Error::Resolution(format!(
            "{tail:.2e} of the mass lies beyond |x| = {layer}; enlarge the box"
        )));
    }
    Ok(f)
}

fn normalized(f: CartesianField, a: f64) -> CartesianField {
    let s = (a / f.mass()).sqrt();
    f.scaled(s)
}

/// Smooth radial perturbation with unit `H¹` norm, shaped on the scale of `u`.
pub fn perturbation(u: &RadialField) -> RadialField {
    let width = (u.grid.integrate(
        &u.grid
            .nodes()
            .iter()
            .zip(&u.values)
            .map(|(r, v)| r * r * v * v)
            .collect::<Vec<_>>(),
    ) / u.mass())
    .sqrt();
    let eta = RadialField::from_fn(&u.grid, |r| {
        let x = r / width;
        (1.0 - x * x) * (-x * x).exp()
    });
    let norm = (eta.mass() + eta.grad_sq()).sqrt();
    eta.scaled(1.0 / norm)
}

fn check_hypotheses(
    rec: &SolutionRecord,
    branch: Branch,
    warnings: &mut Vec<String>,
) -> Result<()> {
    if !rec.converged || rec.branch != branch {
        return Err(Error::Domain(format!(
            "experiment needs a converged {branch} record"
        )));
    }
    let p = &rec.params;
    if p.p_bar() < 2.0 {
        return Err(Error::Domain(format!(
            "dynamics needs p_bar >= 2, got {}",
            p.p_bar()
        )));
    }
    if p.alpha >= p.dim() - 2.0 {
        warnings.push(format!(
            "alpha = {} >= N - 2: outside the range where orbital stability is known",
            p.alpha
        ));
    }
    Ok(())
}

/// Perturbs the ground state by `δη`, evolves to `T` and measures the orbit distance.
pub fn stability_experiment(
    ground: &SolutionRecord,
    delta: f64,
    t_final: f64,
    cfg: &DynamicsConfig,
) -> Result<(TrajectoryRecord, SimOutcome)> {
    let mut warnings = Vec::new();
    check_hypotheses(ground, Branch::Ground, &mut warnings)?;
    let a = ground.params.a;
    let grid = auto_box(&ground.u, ground.params.p_bar(), cfg)?;
    let reference = load(&ground.u, &grid, cfg)?;
    let eta = CartesianField::from_radial(&grid, &perturbation(&ground.u));
    let data = reference
        .data
        .iter()
        .zip(&eta.data)
        .map(|(u, e)| u + delta * e)
        .collect();
    let psi0 = normalized(
        CartesianField {
            grid: grid.clone(),
            data,
        },
        a,
    );
    let monitors = Monitors {
        sample_every: cfg.sample_every,
        reference: Some(reference),
        energy_tol: cfg.energy_tol,
        boundary_tol: 10.0 * cfg.tail_tol,
        ..Default::default()
    };
    let (traj, mut out) = run_simulation(&psi0, t_final, cfg.dt, &ground.params, &monitors)?;
    let bound = 10.0 * delta.abs().max(1e-4);
    if out.verdict == Verdict::Stable && out.max_orbit_dist.is_some_and(|d| d > bound) {
        out.verdict = Verdict::Inconclusive;
        warnings.push(format!("orbit distance exceeded {bound:.1e}"));
    }
    out.warnings.splice(0..0, warnings);
    Ok((traj, out))
}

/// Evolves the dilated excited state `s^{N/2}u(sx)`.
pub fn instability_experiment(
    excited: &SolutionRecord,
    s: f64,
    t_final: f64,
    cfg: &DynamicsConfig,
) -> Result<(TrajectoryRecord, SimOutcome)> {
    let mut warnings = Vec::new();
    check_hypotheses(excited, Branch::Excited, &mut warnings)?;
    if !(s >= 1.0) {
        return Err(Error::Validation {
            name: "scale_s",
            value: s,
            bound: "s >= 1",
        });
    }
    let p = &excited.params;
    let b = excited.breakdown.integrals(p);
    let scaled = BaseIntegrals {
        grad_sq: s * s * b.grad_sq,
        hartree_d: s.powf(2.0 * p.p_bar()) * b.hartree_d,
        lq: s.powf(p.q_gamma()) * b.lq,
        mass: b.mass,
    };
    let fiber = find_fiber_points(&scaled, p)?;
    if (fiber.tau_minus * s - 1.0).abs() > 1e-6 {
        return Err(Error::Structure(format!(
            "scaled datum has tau_minus {} instead of 1/s",
            fiber.tau_minus
        )));
    }
    let us = rescale_field(&excited.u, s)?.field;
    let grid = auto_box(&us, p.p_bar(), cfg)?;
    let psi0 = normalized(load(&us, &grid, cfg)?, p.a);
    let monitors = Monitors {
        sample_every: cfg.blowup_sample_every,
        energy_tol: cfg.blowup_energy_tol,
        halt_on_drift: true,
        boundary_tol: 10.0 * cfg.tail_tol,
        ..Default::default()
    };
    let (traj, mut out) = run_simulation(&psi0, t_final, cfg.blowup_dt, p, &monitors)?;
    if out.verdict == Verdict::Stable {
        out.verdict = Verdict::Inconclusive;
    }
    if s > 1.0 && traj.energy[0] >= excited.breakdown.total {
        warnings.push(format!(
            "E(psi0) = {} is not below the second level {}",
            traj.energy[0], excited.breakdown.total
        ));
    }
    out.warnings.splice(0..0, warnings);
    Ok((traj, out))
}
