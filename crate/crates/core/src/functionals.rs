//! Energy, Pohozaev functional, gradient, Lagrange multiplier and fiber map.

use crate::discretization::{RadialField, RieszKernel};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use serde::{Deserialize, Serialize};

/// The four integrals every functional is built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseIntegrals {
    /// `‖∇u‖₂²`
    pub grad_sq: f64,
    /// `D(u) = ∫(I_α ∗ |u|^{p̄})|u|^{p̄}`
    pub hartree_d: f64,
    /// `‖u‖_q^q`
    pub lq: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub kinetic: f64,
    pub hartree: f64,
    pub local: f64,
    pub total: f64,
    pub pohozaev: f64,
    pub mass: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lambda: Option<f64>,
}

impl EnergyBreakdown {
    pub fn from_integrals(params: &ModelParams, b: &BaseIntegrals) -> Self {
        let pb = params.p_bar();
        let kinetic = 0.5 * b.grad_sq;
        let hartree = b.hartree_d / (2.0 * pb);
        let local = params.mu / params.q * b.lq;
        EnergyBreakdown {
            kinetic,
            hartree,
            local,
            total: kinetic - hartree - local,
            pohozaev: b.grad_sq - b.hartree_d - params.mu * params.gamma_q() * b.lq,
            mass: b.mass,
            lambda: None,
        }
    }

    pub fn integrals(&self, params: &ModelParams) -> BaseIntegrals {
        BaseIntegrals {
            grad_sq: 2.0 * self.kinetic,
            hartree_d: 2.0 * params.p_bar() * self.hartree,
            lq: self.local * params.q / params.mu,
            mass: self.mass,
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = Some(lambda);
        self
    }
}

fn check(u: &RadialField, kernel: &RieszKernel) -> Result<()> {
    if !kernel.matches(&u.grid) {
        return Err(Error::GridMismatch(
            "field and kernel live on different grids".into(),
        ));
    }
    if u.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("energy evaluation"));
    }
    Ok(())
}

pub fn base_integrals(
    u: &RadialField,
    params: &ModelParams,
    kernel: &RieszKernel,
) -> Result<BaseIntegrals> {
    check(u, kernel)?;
    let g: Vec<f64> = u
        .values
        .iter()
        .map(|v| v.abs().powf(params.p_bar()))
        .collect();
    Ok(BaseIntegrals {
        grad_sq: u.grad_sq(),
        hartree_d: kernel.bilinear(&g, &g),
        lq: u.lp_pow(params.q),
        mass: u.mass(),
    })
}

pub fn energy(
    u: &RadialField,
    params: &ModelParams,
    kernel: &RieszKernel,
) -> Result<EnergyBreakdown> {
    Ok(EnergyBreakdown::from_integrals(
        params,
        &base_integrals(u, params, kernel)?,
    ))
}

/// `|u|^{s}·sign(u)` with the small-amplitude cutoff used for `s < 1`.
pub(crate) fn signed_pow(v: f64, s: f64, floor: f64) -> f64 {
    let a = v.abs();
    if s < 1.0 && a < floor {
        0.0
    } else {
        a.powf(s) * v.signum()
    }
}

/// `(I_α ∗ |u|^{p̄})|u|^{p̄−2}u + μ|u|^{q−2}u` at the nodes.
pub fn nonlinearity(values: &[f64], params: &ModelParams, kernel: &RieszKernel) -> Vec<f64> {
    let pb = params.p_bar();
    let floor = 1e-14 * values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let g: Vec<f64> = values.iter().map(|v| v.abs().powf(pb)).collect();
    let pot = kernel.apply(&g);
    values
        .iter()
        .zip(&pot)
        .map(|(&v, &p)| {
            p * signed_pow(v, pb - 1.0, floor) + params.mu * signed_pow(v, params.q - 1.0, floor)
        })
        .collect()
}

/// `−Δu − (I_α ∗ |u|^{p̄})|u|^{p̄−2}u − μ|u|^{q−2}u`
pub fn l2_gradient(
    u: &RadialField,
    params: &ModelParams,
    kernel: &RieszKernel,
) -> Result<RadialField> {
    check(u, kernel)?;
    let lap = u.grid.laplacian_values(&u.values);
    let nl = nonlinearity(&u.values, params, kernel);
    Ok(RadialField {
        grid: u.grid.clone(),
        values: lap.iter().zip(&nl).map(|(l, n)| -l - n).collect(),
    })
}

/// `λ = (‖∇u‖₂² − D(u) − μ‖u‖_q^q)/‖u‖₂²`
pub fn lagrange_multiplier(breakdown: &EnergyBreakdown, params: &ModelParams) -> Result<f64> {
    if !(breakdown.mass > 0.0) {
        return Err(Error::Domain(
            "Lagrange multiplier undefined for zero mass".into(),
        ));
    }
    let b = breakdown.integrals(params);
    Ok((b.grad_sq - b.hartree_d - params.mu * b.lq) / b.mass)
}

fn tau_check(tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Domain(format!(
            "fiber parameter must be positive, got {tau}"
        )));
    }
    Ok(())
}

/// `Ψ_u(τ) = E(u_τ)`
pub fn fiber_value(b: &BaseIntegrals, params: &ModelParams, tau: f64) -> Result<f64> {
    tau_check(tau)?;
    let pb = params.p_bar();
    Ok(0.5 * tau * tau * b.grad_sq
        - tau.powf(2.0 * pb) * b.hartree_d / (2.0 * pb)
        - params.mu / params.q * tau.powf(params.q_gamma()) * b.lq)
}

/// `Ψ′_u(τ) = P(u_τ)/τ`
pub fn fiber_derivative(b: &BaseIntegrals, params: &ModelParams, tau: f64) -> Result<f64> {
    tau_check(tau)?;
    let pb = params.p_bar();
    let qg = params.q_gamma();
    Ok(tau * b.grad_sq
        - tau.powf(2.0 * pb - 1.0) * b.hartree_d
        - params.mu * params.gamma_q() * tau.powf(qg - 1.0) * b.lq)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberPoints {
    pub tau_plus: f64,
    pub tau_minus: f64,
    #[serde(rename = "E_plus")]
    pub e_plus: f64,
    #[serde(rename = "E_minus")]
    pub e_minus: f64,
    /// Central-difference estimate of `Ψ″_u(τ_u^−)`.
    pub curvature_minus: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub warning: Option<String>,
}

/// The two critical points of the fiber map, bisected to `1e-12` relative.
pub fn find_fiber_points(b: &BaseIntegrals, params: &ModelParams) -> Result<FiberPoints> {
    if ((b.mass - params.a) / params.a).abs() > 1e-8 {
        return Err(Error::Domain(format!(
            "fiber analysis needs mass {} but field has {}",
            params.a, b.mass
        )));
    }
    find_fiber_points_unchecked(b, params)
}

pub(crate) fn find_fiber_points_unchecked(
    b: &BaseIntegrals,
    params: &ModelParams,
) -> Result<FiberPoints> {
    let pb = params.p_bar();
    let qg = params.q_gamma();
    let gq = params.gamma_q();
    if !(b.grad_sq > 0.0 && b.hartree_d > 0.0 && b.lq > 0.0) {
        return Err(Error::Structure(
            "fiber map needs nonzero kinetic, Hartree and local terms".into(),
        ));
    }
    // h(τ) = τ^{1−qγ}Ψ′(τ) rises then falls
    let h = |t: f64| {
        t.powf(2.0 - qg) * b.grad_sq - t.powf(2.0 * pb - qg) * b.hartree_d - params.mu * gq * b.lq
    };
    let tc =
        ((2.0 - qg) * b.grad_sq / ((2.0 * pb - qg) * b.hartree_d)).powf(1.0 / (2.0 * pb - 2.0));
    if h(tc) <= 0.0 {
        return Err(Error::Structure(format!(
            "fiber derivative has no sign change (peak {:.3e})",
            h(tc)
        )));
    }
    let bisect = |mut lo: f64, mut hi: f64, rising: bool| {
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if (hi - lo) <= 1e-13 * mid {
                break;
            }
            if (h(mid) < 0.0) == rising {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let mut lo = tc;
    while h(lo) >= 0.0 {
        lo *= 0.5;
    }
    let mut hi = tc;
    while h(hi) >= 0.0 {
        hi *= 2.0;
    }
    let tau_plus = bisect(lo, tc, true);
    let tau_minus = bisect(tc, hi, false);
    let step = 1e-6 * tau_minus;
    let curvature_minus = (fiber_derivative(b, params, tau_minus + step)?
        - fiber_derivative(b, params, tau_minus - step)?)
        / (2.0 * step);
    let warning = (curvature_minus >= 0.0)
        .then(|| format!("nonnegative fiber curvature {curvature_minus:.3e} at tau_minus"));
    Ok(FiberPoints {
        tau_plus,
        tau_minus,
        e_plus: fiber_value(b, params, tau_plus)?,
        e_minus: fiber_value(b, params, tau_minus)?,
        curvature_minus,
        warning,
    })
}

/// The values of the two constrained minimax levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinimaxValues {
    pub m_a: f64,
    #[serde(rename = "M_a")]
    pub big_m_a: f64,
    pub gap: f64,
}

impl MinimaxValues {
    pub fn new(m_a: f64, big_m_a: f64, bubble_level: f64) -> Self {
        MinimaxValues {
            m_a,
            big_m_a,
            gap: big_m_a - (m_a + bubble_level),
        }
    }
}
