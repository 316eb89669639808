//! Strang-split evolution of the time-dependent equation on the periodic box.

mod experiments;
mod propagator;

pub use experiments::{
    auto_box, instability_experiment, perturbation, stability_experiment, DynamicsConfig,
};
pub use propagator::{strang_step, Observables, Potential, Propagator};

use crate::discretization::CartesianField;
use crate::error::{Error, Result};
use crate::model::ModelParams;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Mass beyond `|x| > BOUNDARY_LAYER·L` counts as having reached the box boundary.
pub const BOUNDARY_LAYER: f64 = 0.75;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub mass: Vec<f64>,
    pub energy: Vec<f64>,
    pub kinetic: Vec<f64>,
    pub virial: Vec<f64>,
    /// `Φ′(0)`.
    pub virial_rate0: f64,
    pub pohozaev: Vec<f64>,
    pub sup_amp: Vec<f64>,
    pub orbit_dist: Option<Vec<f64>>,
    pub center_offset: Vec<f64>,
    /// Largest relative mass change per step.
    pub max_mass_drift: f64,
    #[serde(skip)]
    pub final_state: Option<CartesianField>,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn energy_drift(&self) -> f64 {
        let e0 = self.energy[0];
        self.energy
            .iter()
            .map(|e| (e - e0).abs())
            .fold(0.0, f64::max)
            / e0.abs()
    }

    fn push(&mut self, t: f64, o: &Observables, dist: Option<f64>) {
        self.times.push(t);
        self.mass.push(o.mass);
        self.energy.push(o.energy);
        self.kinetic.push(o.kinetic);
        self.virial.push(o.virial);
        self.pohozaev.push(o.pohozaev);
        self.sup_amp.push(o.sup_amp);
        self.center_offset
            .push(o.center.iter().map(|c| c * c).sum::<f64>().sqrt());
        if let Some(d) = dist {
            self.orbit_dist.get_or_insert_with(Vec::new).push(d);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Stable,
    Blowup,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Stable => "stable",
            Verdict::Blowup => "blowup",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOutcome {
    pub verdict: Verdict,
    pub t_star: Option<f64>,
    pub max_orbit_dist: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub halted: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Monitors {
    pub sample_every: usize,
    /// Standing-wave profile for the orbit distance.
    pub reference: Option<CartesianField>,
    pub ceiling_factor: f64,
    pub energy_tol: f64,
    /// Stop instead of failing when the energy drifts past `energy_tol`.
    pub halt_on_drift: bool,
    /// Boundary-layer mass fraction past which the run is inconclusive.
    pub boundary_tol: f64,
}

impl Default for Monitors {
    fn default() -> Self {
        Monitors {
            sample_every: 10,
            reference: None,
            ceiling_factor: 1e3,
            energy_tol: 1e-4,
            halt_on_drift: false,
            boundary_tol: 1e-5,
        }
    }
}

/// Zero of the virial parabola `Φ(0) + Φ′(0)t − 4δt²`, if `Φ` is seen concave and decreasing.
pub fn virial_crossing(traj: &TrajectoryRecord) -> Option<f64> {
    let delta = -traj
        .pohozaev
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    if !(delta > 0.0) || traj.len() < 3 {
        return None;
    }
    let phi = &traj.virial;
    let concave = phi.windows(3).all(|w| w[2] - 2.0 * w[1] + w[0] < 0.0);
    let decreasing = phi[phi.len() - 1] < phi[0];
    if !(concave && decreasing) {
        return None;
    }
    let (p0, d0) = (phi[0], traj.virial_rate0);
    Some((d0 + (d0 * d0 + 16.0 * delta * p0).sqrt()) / (8.0 * delta))
}

pub fn run_simulation(
    psi0: &CartesianField,
    t_final: f64,
    dt: f64,
    params: &ModelParams,
    monitors: &Monitors,
) -> Result<(TrajectoryRecord, SimOutcome)> {
    if !(t_final > 0.0) {
        return Err(Error::Validation {
            name: "T",
            value: t_final,
            bound: "T > 0",
        });
    }
    let grid = psi0.grid.clone();
    let steps = (t_final / dt).ceil().max(1.0) as usize;
    let dt = t_final / steps as f64;
    let mut prop = Propagator::new(&grid, params, dt, Potential::SelfConsistent)?;
    let ref_hat: Option<Vec<Complex64>> =
        monitors.reference.as_ref().map(|r| prop.spectrum(&r.data));
    let mut psi = psi0.data.clone();
    let mut traj = TrajectoryRecord::default();
    let mut warnings = Vec::new();
    let o0 = prop.observe(&psi, true);
    let dist = ref_hat.as_ref().map(|h| prop.orbit_distance(&psi, h));
    traj.push(0.0, &o0, dist);
    traj.virial_rate0 = o0.virial_rate;
    let ceiling = monitors.ceiling_factor * o0.sup_amp;
    let mut done = 0;
    let mut halted = None;
    let mut ceiling_hit = None;
    while done < steps {
        let chunk = monitors.sample_every.max(1).min(steps - done);
        let m_before = *traj.mass.last().unwrap();
        prop.advance(&mut psi, chunk);
        done += chunk;
        let t = done as f64 * dt;
        let o = prop.observe(&psi, false);
        if !o.energy.is_finite() || !o.mass.is_finite() {
            if monitors.halt_on_drift {
                halted = Some(format!("non-finite state at t = {t:.4}"));
                break;
            }
            return Err(Error::IntegratorAccuracy(format!(
                "non-finite state at t = {t:.4}"
            )));
        }
        let dist = ref_hat.as_ref().map(|h| prop.orbit_distance(&psi, h));
        let drift = (o.energy - o0.energy).abs() / o0.energy.abs();
        if drift > monitors.energy_tol {
            let msg = format!("energy drift {drift:.3e} at t = {t:.4}");
            if monitors.halt_on_drift {
                halted = Some(msg);
                break;
            }
            return Err(Error::IntegratorAccuracy(format!(
                "{msg}; refine dt or the box"
            )));
        }
        traj.max_mass_drift = traj
            .max_mass_drift
            .max((o.mass - m_before).abs() / (m_before * chunk as f64));
        traj.push(t, &o, dist);
        if o.sup_amp > ceiling {
            ceiling_hit = Some(t);
            break;
        }
        if o.center.iter().map(|c| c * c).sum::<f64>().sqrt() > grid.dx() && warnings.is_empty() {
            warnings.push(format!("center of mass drifted beyond dx at t = {t:.4}"));
        }
    }
    let last = CartesianField {
        grid: grid.clone(),
        data: psi,
    };
    let tail = last.tail_fraction(BOUNDARY_LAYER * grid.half_width());
    traj.final_state = Some(last);
    let boundary = tail > monitors.boundary_tol;
    if boundary {
        warnings.push(format!("{tail:.2e} of the mass reached the boundary layer"));
    }
    let max_orbit_dist = traj
        .orbit_dist
        .as_ref()
        .map(|d| d.iter().cloned().fold(0.0, f64::max));
    let (verdict, t_star) = if let Some(t) = ceiling_hit {
        (Verdict::Blowup, Some(t))
    } else if let Some(t) = virial_crossing(&traj).filter(|&t| t < 2.0 * t_final && !boundary) {
        (Verdict::Blowup, Some(t))
    } else if halted.is_some() || boundary {
        (Verdict::Inconclusive, None)
    } else {
        (Verdict::Stable, None)
    };
    Ok((
        traj,
        SimOutcome {
            verdict,
            t_star,
            max_orbit_dist,
            halted,
            warnings,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::CartesianGrid3;
    use std::sync::Arc;

    fn gaussian(grid: &Arc<CartesianGrid3>, amp: f64, w: f64, shift: f64) -> CartesianField {
        CartesianField::from_fn(grid, |[x, y, z]| {
            let r2 = (x - shift).powi(2) + y * y + z * z;
            Complex64::new(amp * (-r2 / w).exp(), 0.0)
        })
    }

    fn l2_diff(a: &[Complex64], b: &[Complex64], dv: f64) -> f64 {
        (a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            * dv)
            .sqrt()
    }

    #[test]
    fn free_gaussian_matches_closed_form() {
        let grid = CartesianGrid3::new(64, 10.0).unwrap();
        let w = 2.0;
        let t = 0.5;
        let params = ModelParams::default();
        let mut prop = Propagator::new(&grid, &params, 0.05, Potential::Free).unwrap();
        let mut psi = gaussian(&grid, 1.0, w, 0.0).data;
        prop.advance(&mut psi, 10);
        let z = Complex64::new(w, 4.0 * t);
        let pre = (Complex64::new(w, 0.0) / z).powf(1.5);
        let exact = CartesianField::from_fn(&grid, |[x, y, z2]| {
            pre * (-(x * x + y * y + z2 * z2) / z).exp()
        });
        let err = l2_diff(&psi, &exact.data, grid.cell_volume());
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn frozen_potential_is_second_order() {
        let grid = CartesianGrid3::new(32, 8.0).unwrap();
        let params = ModelParams::default();
        let v: Vec<f64> = (0..grid.len())
            .map(|i| {
                let [x, y, z] = grid.position(i);
                3.0 * (-(x * x + y * y + z * z)).exp()
            })
            .collect();
        let psi0 = gaussian(&grid, 1.0, 2.0, 1.0).data;
        let run = |dt: f64| {
            let mut prop =
                Propagator::new(&grid, &params, dt, Potential::Frozen(v.clone())).unwrap();
            let mut psi = psi0.clone();
            prop.advance(&mut psi, (1.0 / dt).round() as usize);
            psi
        };
        let reference = run(0.1 / 64.0);
        let dv = grid.cell_volume();
        let e1 = l2_diff(&run(0.1), &reference, dv);
        let e2 = l2_diff(&run(0.05), &reference, dv);
        let ratio = e1 / e2;
        assert!((3.5..=4.5).contains(&ratio), "{e1} {e2} {ratio}");
    }

    #[test]
    fn self_consistent_flow_is_reversible_and_unitary() {
        let grid = CartesianGrid3::new(32, 8.0).unwrap();
        let params = ModelParams::default();
        let psi0 = gaussian(&grid, 1.2, 2.0, 0.5).data;
        let mut prop = Propagator::new(&grid, &params, 0.02, Potential::SelfConsistent).unwrap();
        let mut psi = psi0.clone();
        let m0 = prop.observe(&psi, false).mass;
        prop.advance(&mut psi, 25);
        let m1 = prop.observe(&psi, false).mass;
        assert!(((m1 - m0) / m0).abs() < 1e-12);
        assert!(l2_diff(&psi, &psi0, grid.cell_volume()) > 1e-3);
        prop.retreat(&mut psi, 25);
        let err = l2_diff(&psi, &psi0, grid.cell_volume()) / m0.sqrt();
        assert!(err < 1e-11, "{err}");
    }

    #[test]
    fn virial_second_derivative_is_eight_pohozaev() {
        let grid = CartesianGrid3::new(64, 8.0).unwrap();
        let params = ModelParams::default();
        let psi0 = gaussian(&grid, 1.5, 2.0, 0.0).data;
        let h = 0.01;
        let mut prop =
            Propagator::new(&grid, &params, h / 10.0, Potential::SelfConsistent).unwrap();
        let p0 = prop.observe(&psi0, false).pohozaev;
        let mut fwd = psi0.clone();
        prop.advance(&mut fwd, 10);
        let mut back = psi0.clone();
        prop.retreat(&mut back, 10);
        let rate = |prop: &mut Propagator, psi: &[Complex64]| prop.observe(psi, true).virial_rate;
        let second = (rate(&mut prop, &fwd) - rate(&mut prop, &back)) / (2.0 * h);
        assert!(p0.abs() > 1e-2);
        assert!(
            ((second - 8.0 * p0) / (8.0 * p0)).abs() < 1e-2,
            "{second} {p0}"
        );
        assert!(rate(&mut prop, &psi0).abs() < 1e-10);
    }

    #[test]
    fn simulation_conserves_and_reports() {
        let grid = CartesianGrid3::new(32, 8.0).unwrap();
        let params = ModelParams::default();
        let psi0 = gaussian(&grid, 0.5, 2.0, 0.0);
        let monitors = Monitors {
            sample_every: 5,
            reference: Some(psi0.clone()),
            ..Default::default()
        };
        let (traj, out) = run_simulation(&psi0, 1.0, 0.02, &params, &monitors).unwrap();
        assert_eq!(traj.len(), 11);
        assert!(traj.max_mass_drift < 1e-12);
        assert!(traj.energy_drift() < 1e-4, "{}", traj.energy_drift());
        assert_eq!(traj.orbit_dist.as_ref().unwrap()[0], 0.0);
        assert!(traj.final_state.is_some());
        assert_eq!(out.verdict, Verdict::Inconclusive);
        assert!(out.warnings.iter().any(|w| w.contains("boundary layer")));
        assert!(run_simulation(&psi0, 0.0, 0.02, &params, &monitors).is_err());
    }

    #[test]
    fn virial_crossing_of_exact_parabola() {
        let (p0, d0, delta) = (4.0, -1.0, 0.5);
        let mut traj = TrajectoryRecord {
            virial_rate0: d0,
            ..Default::default()
        };
        for i in 0..6 {
            let t = 0.1 * i as f64;
            traj.times.push(t);
            traj.virial.push(p0 + d0 * t - 4.0 * delta * t * t);
            traj.pohozaev.push(-delta - 0.1 * t);
        }
        let t = virial_crossing(&traj).unwrap();
        assert!((p0 + d0 * t - 4.0 * delta * t * t).abs() < 1e-12);
        traj.pohozaev[2] = 0.1;
        assert!(virial_crossing(&traj).is_none());
    }
}
