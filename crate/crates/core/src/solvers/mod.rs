//! Shooting, ground-state and excited-state solvers.

pub mod bubble;
mod excited;
mod ground;
pub mod newton;
pub mod ode;
pub mod shooting;

pub use bubble::{make_bubble, BubbleProfile};
pub use excited::solve_excited;
pub use ground::{solve_ground, solve_ground_from};
pub use shooting::{shoot_profile, shoot_scalar_ground_state, ScalarProfile};

use crate::discretization::{build_radial_grid, GridKind, RadialField, RadialGrid, RieszKernel};
use crate::error::{Error, Result};
use crate::functionals::{
    base_integrals, find_fiber_points, nonlinearity, EnergyBreakdown, FiberPoints,
};
use crate::model::{ModelParams, SharpConstants};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedKind {
    Gaussian,
    BubbleSuperposition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub dt: f64,
    pub grad_tol: f64,
    pub max_iter: usize,
    pub seed_kind: SeedKind,
    pub bubble_eps: f64,
    pub bubble_t: f64,
    /// Flow residual below which Newton takes over; 0 disables Newton.
    pub newton_switch: f64,
    pub newton_max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            dt: 0.5,
            grad_tol: 1e-9,
            max_iter: 20_000,
            seed_kind: SeedKind::Gaussian,
            bubble_eps: 0.1,
            bubble_t: 1.0,
            newton_switch: 1e-2,
            newton_max_iter: 30,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Validation {
                name: "dt",
                value: self.dt,
                bound: "dt > 0",
            });
        }
        if !(self.grad_tol > 0.0) {
            return Err(Error::Validation {
                name: "grad_tol",
                value: self.grad_tol,
                bound: "grad_tol > 0",
            });
        }
        if !(self.bubble_eps > 0.0 && self.bubble_eps <= 0.5) {
            return Err(Error::Validation {
                name: "bubble_eps",
                value: self.bubble_eps,
                bound: "0 < eps <= 0.5",
            });
        }
        if !(self.bubble_t > 0.0) {
            return Err(Error::Validation {
                name: "bubble_t",
                value: self.bubble_t,
                bound: "t > 0",
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Ground,
    Excited,
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Branch::Ground => "ground",
            Branch::Excited => "excited",
        })
    }
}

#[derive(Debug, Clone)]
pub struct SolutionRecord {
    pub u: RadialField,
    pub lambda: f64,
    pub breakdown: EnergyBreakdown,
    pub branch: Branch,
    pub fiber: FiberPoints,
    pub iterations: usize,
    pub newton_iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub params: ModelParams,
    /// Energies of the accepted flow iterates.
    pub energy_trace: Vec<f64>,
    pub restarts: usize,
    pub warnings: Vec<String>,
}

impl SolutionRecord {
    /// Recomputes energies, fiber points and residual from the stored profile and `λ`.
    pub fn refresh(&mut self, kernel: &RieszKernel) -> Result<()> {
        let b = base_integrals(&self.u, &self.params, kernel)?;
        self.breakdown = EnergyBreakdown::from_integrals(&self.params, &b).with_lambda(self.lambda);
        match find_fiber_points(&b, &self.params) {
            Ok(f) => self.fiber = f,
            Err(e) => self
                .warnings
                .push(format!("fiber points not recomputed: {e}")),
        }
        self.residual = newton::residual(&self.u.values, self.lambda, &self.params, kernel).1;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub residual_l2: f64,
    pub pohozaev_full_rel: f64,
    pub nehari_rel: f64,
    pub pohozaev_rel: f64,
}

/// Recomputes the equation residual and the two integral identities.
pub fn verify_solution(record: &SolutionRecord, kernel: &RieszKernel) -> Result<ResidualReport> {
    let p = &record.params;
    let u = &record.u;
    let b = base_integrals(u, p, kernel)?;
    let lambda = record.lambda;
    let (_, residual_l2) = newton::residual(&u.values, lambda, p, kernel);
    let nf = p.dim();
    let pb = p.p_bar();
    let lhs = 0.5 * (nf - 2.0) * b.grad_sq;
    let rhs = 0.5 * nf * lambda * b.mass
        + (nf + p.alpha) / (2.0 * pb) * b.hartree_d
        + p.mu * nf / p.q * b.lq;
    let neh_rhs = lambda * b.mass + b.hartree_d + p.mu * b.lq;
    let poh = b.grad_sq - b.hartree_d - p.mu * p.gamma_q() * b.lq;
    Ok(ResidualReport {
        residual_l2,
        pohozaev_full_rel: (lhs - rhs).abs() / lhs.abs().max(f64::MIN_POSITIVE),
        nehari_rel: (b.grad_sq - neh_rhs).abs() / b.grad_sq,
        pohozaev_rel: poh.abs() / b.grad_sq,
    })
}

/// Radial grid parameters; `None` radius means sized from the expected decay rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialGridConfig {
    pub radius: Option<f64>,
    pub n: usize,
    pub kind: GridKind,
}

impl RadialGridConfig {
    pub fn ground() -> Self {
        RadialGridConfig {
            radius: None,
            n: 1024,
            kind: GridKind::Graded { stretch: 2.0 },
        }
    }

    pub fn excited() -> Self {
        RadialGridConfig {
            radius: None,
            n: 1024,
            kind: GridKind::Graded { stretch: 4.0 },
        }
    }
}

/// Multiplier of the purely local problem at mass `a`, a proxy for the ground-state `λ`.
pub fn local_lambda_estimate(params: &ModelParams, consts: &SharpConstants) -> f64 {
    let nf = params.dim();
    let s = params.q - 2.0;
    let base = params.a * params.mu.powf(2.0 / s) / consts.q_mass;
    -base.powf(2.0 * s / (4.0 - nf * s))
}

pub fn ground_grid(
    params: &ModelParams,
    consts: &SharpConstants,
    cfg: &RadialGridConfig,
) -> Result<Arc<RadialGrid>> {
    let radius = cfg.radius.unwrap_or_else(|| {
        (30.0 / local_lambda_estimate(params, consts).abs().sqrt()).clamp(40.0, 4000.0)
    });
    build_radial_grid(params.n, radius, cfg.n, cfg.kind)
}

pub fn excited_grid(params: &ModelParams, cfg: &RadialGridConfig) -> Result<Arc<RadialGrid>> {
    build_radial_grid(params.n, cfg.radius.unwrap_or(60.0), cfg.n, cfg.kind)
}

pub(crate) fn projected_residual(
    u: &[f64],
    params: &ModelParams,
    kernel: &RieszKernel,
) -> (f64, f64) {
    let grid = kernel.grid();
    let lap = grid.laplacian_values(u);
    let nl = nonlinearity(u, params, kernel);
    let g: Vec<f64> = (0..u.len()).map(|i| -lap[i] - nl[i]).collect();
    let lambda = grid.inner(&g, u) / grid.inner(u, u);
    let r: Vec<f64> = (0..u.len()).map(|i| g[i] - lambda * u[i]).collect();
    (lambda, grid.inner(&r, &r).sqrt())
}

/// One semi-implicit step `(W + dt A)u* = W(u + dt N(u))` followed by mass renormalization.
pub(crate) fn flow_step(
    u: &[f64],
    params: &ModelParams,
    kernel: &RieszKernel,
    chol: &crate::linalg::BandedCholesky,
    dt: f64,
) -> Vec<f64> {
    let grid = kernel.grid();
    let w = grid.weights();
    let nl = nonlinearity(u, params, kernel);
    let rhs: Vec<f64> = (0..u.len()).map(|i| w[i] * (u[i] + dt * nl[i])).collect();
    let mut v = chol.solve(&rhs);
    let s = (params.a / grid.inner(&v, &v)).sqrt();
    v.iter_mut().for_each(|x| *x *= s);
    v
}

pub(crate) fn implicit_factor(grid: &RadialGrid, dt: f64) -> Result<crate::linalg::BandedCholesky> {
    let mut m = grid.stiffness().scaled(dt);
    m.add_diagonal(grid.weights(), 1.0);
    m.cholesky()
        .ok_or_else(|| Error::Divergence("implicit operator lost definiteness".into()))
}

pub(crate) fn normalize(u: &RadialField, a: f64) -> RadialField {
    u.scaled((a / u.mass()).sqrt())
}
