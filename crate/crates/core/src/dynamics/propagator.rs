use crate::discretization::{BoxRiesz, CartesianField, CartesianGrid3};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// What drives the nonlinear substep.
#[derive(Debug, Clone)]
pub enum Potential {
    SelfConsistent,
    /// A fixed real potential `V(x)`.
    Frozen(Vec<f64>),
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observables {
    pub mass: f64,
    pub kinetic: f64,
    pub hartree_d: f64,
    pub lq: f64,
    pub energy: f64,
    pub pohozaev: f64,
    pub virial: f64,
    pub virial_rate: f64,
    pub sup_amp: f64,
    pub center: [f64; 3],
}

/// Hartree potential and its source density.
type HartreeParts = (Vec<f64>, Vec<f64>);

pub struct Propagator {
    grid: Arc<CartesianGrid3>,
    params: ModelParams,
    riesz: Option<BoxRiesz>,
    potential: Potential,
    dt: f64,
    half: Vec<Complex64>,
    full: Vec<Complex64>,
    work: Vec<Complex64>,
}

/// `|z|^e` from `|z|²`, avoiding `powf` for integer exponents.
fn abs_pow(n2: f64, e: f64) -> f64 {
    if e.fract() == 0.0 && (0.0..=32.0).contains(&e) {
        let m = e as i32;
        let base = n2.powi(m / 2);
        if m % 2 == 0 {
            base
        } else {
            base * n2.sqrt()
        }
    } else {
        n2.powf(0.5 * e)
    }
}

fn phases(grid: &CartesianGrid3, tau: f64) -> Vec<Complex64> {
    (0..grid.len())
        .map(|i| Complex64::from_polar(1.0, -grid.k2(i) * tau))
        .collect()
}

impl Propagator {
    pub fn new(
        grid: &Arc<CartesianGrid3>,
        params: &ModelParams,
        dt: f64,
        potential: Potential,
    ) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Validation {
                name: "dt",
                value: dt,
                bound: "dt > 0",
            });
        }
        if dt > grid.dx() * grid.dx() {
            return Err(Error::Validation {
                name: "dt",
                value: dt,
                bound: "dt <= dx^2",
            });
        }
        let riesz = match potential {
            Potential::SelfConsistent => {
                if params.p_bar() < 2.0 {
                    return Err(Error::Domain(format!(
                        "dynamics needs p_bar >= 2, got {}",
                        params.p_bar()
                    )));
                }
                if params.n != 3 {
                    return Err(Error::Unsupported(
                        "the box backend is three-dimensional".into(),
                    ));
                }
                Some(BoxRiesz::new(grid, params.alpha)?)
            }
            Potential::Frozen(ref v) if v.len() != grid.len() => {
                return Err(Error::GridMismatch(
                    "frozen potential has the wrong length".into(),
                ))
            }
            _ => None,
        };
        Ok(Propagator {
            grid: grid.clone(),
            params: *params,
            riesz,
            potential,
            dt,
            half: phases(grid, 0.5 * dt),
            full: phases(grid, dt),
            work: Vec::new(),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> &Arc<CartesianGrid3> {
        &self.grid
    }

    /// Real potential `V[ψ]`, and the Hartree field `I_α ∗ |ψ|^{p̄}` when present.
    fn potential_of(&mut self, psi: &[Complex64]) -> (Vec<f64>, Option<HartreeParts>) {
        match &self.potential {
            Potential::Free => (vec![0.0; psi.len()], None),
            Potential::Frozen(v) => (v.clone(), None),
            Potential::SelfConsistent => {
                let pb = self.params.p_bar();
                let (mu, q) = (self.params.mu, self.params.q);
                let n2: Vec<f64> = psi.iter().map(|v| v.norm_sqr()).collect();
                let g: Vec<f64> = n2.iter().map(|&a| abs_pow(a, pb)).collect();
                let h = self
                    .riesz
                    .as_ref()
                    .expect("self-consistent mode has a kernel")
                    .apply_real(&g, &mut self.work);
                let v = n2
                    .iter()
                    .zip(&h)
                    .map(|(&a, hv)| hv * abs_pow(a, pb - 2.0) + mu * abs_pow(a, q - 2.0))
                    .collect();
                (v, Some((h, g)))
            }
        }
    }

    fn nonlinear(&mut self, psi: &mut [Complex64], tau: f64) {
        let (v, _) = self.potential_of(psi);
        psi.iter_mut()
            .zip(&v)
            .for_each(|(p, vv)| *p *= Complex64::from_polar(1.0, tau * vv));
    }

    fn kinetic(&mut self, psi: &mut Vec<Complex64>, half: bool) {
        self.grid.forward(psi, &mut self.work);
        let ph = if half { &self.half } else { &self.full };
        psi.iter_mut().zip(ph).for_each(|(p, e)| *p *= e);
        self.grid.inverse(psi, &mut self.work);
    }

    /// `count` Strang steps with the inner kinetic half-steps merged.
    pub fn advance(&mut self, psi: &mut Vec<Complex64>, count: usize) {
        if count == 0 {
            return;
        }
        self.kinetic(psi, true);
        for s in 0..count {
            self.nonlinear(psi, self.dt);
            self.kinetic(psi, s + 1 == count);
        }
    }

    /// Runs `count` steps backwards in time.
    pub fn retreat(&mut self, psi: &mut Vec<Complex64>, count: usize) {
        self.reverse();
        self.advance(psi, count);
        self.reverse();
    }

    fn reverse(&mut self) {
        self.dt = -self.dt;
        self.half
            .iter_mut()
            .chain(self.full.iter_mut())
            .for_each(|v| *v = v.conj());
    }

    /// Fourier transform of `ψ`.
    pub fn spectrum(&mut self, psi: &[Complex64]) -> Vec<Complex64> {
        let mut s = psi.to_vec();
        self.grid.forward(&mut s, &mut self.work);
        s
    }

    /// Diagnostics of `ψ`; `Φ′` costs three extra transforms and is only computed when asked.
    pub fn observe(&mut self, psi: &[Complex64], with_rate: bool) -> Observables {
        let grid = self.grid.clone();
        let dv = grid.cell_volume();
        let nn = grid.len() as f64;
        let hat = self.spectrum(psi);
        let kinetic = hat
            .iter()
            .enumerate()
            .map(|(i, v)| grid.k2(i) * v.norm_sqr())
            .sum::<f64>()
            * dv
            / nn;
        let mass = psi.iter().map(|v| v.norm_sqr()).sum::<f64>() * dv;
        let (v, hg) = self.potential_of(psi);
        let (hartree_d, lq) = match &hg {
            Some((h, g)) => (
                h.iter().zip(g).map(|(a, b)| a * b).sum::<f64>() * dv,
                psi.iter()
                    .map(|p| abs_pow(p.norm_sqr(), self.params.q))
                    .sum::<f64>()
                    * dv,
            ),
            None => (0.0, 0.0),
        };
        let (energy, pohozaev) = match self.potential {
            Potential::SelfConsistent => {
                let p = &self.params;
                (
                    0.5 * kinetic - hartree_d / (2.0 * p.p_bar()) - p.mu / p.q * lq,
                    kinetic - hartree_d - p.mu * p.gamma_q() * lq,
                )
            }
            Potential::Frozen(_) => {
                let pot: f64 = psi
                    .iter()
                    .zip(&v)
                    .map(|(p, vv)| vv * p.norm_sqr())
                    .sum::<f64>()
                    * dv;
                (0.5 * kinetic - 0.5 * pot, f64::NAN)
            }
            Potential::Free => (0.5 * kinetic, kinetic),
        };
        let mut virial = 0.0;
        let mut center = [0.0; 3];
        let mut sup_amp: f64 = 0.0;
        for (i, p) in psi.iter().enumerate() {
            let x = grid.position(i);
            let m = p.norm_sqr();
            virial += (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) * m;
            for d in 0..3 {
                center[d] += x[d] * m;
            }
            sup_amp = sup_amp.max(m);
        }
        let mut rate = 0.0;
        let n = grid.n();
        let wave = grid.wavenumbers();
        for axis in (0..3).filter(|_| with_rate) {
            let mut d: Vec<Complex64> = hat
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let idx = [i / (n * n), (i / n) % n, i % n][axis];
                    v * Complex64::new(0.0, if idx == n / 2 { 0.0 } else { wave[idx] })
                })
                .collect();
            grid.inverse(&mut d, &mut self.work);
            rate += psi
                .iter()
                .zip(&d)
                .enumerate()
                .map(|(i, (p, dp))| grid.position(i)[axis] * (p.conj() * dp).im)
                .sum::<f64>();
        }
        Observables {
            mass,
            kinetic,
            hartree_d,
            lq,
            energy,
            pohozaev,
            virial: virial * dv,
            virial_rate: 4.0 * rate * dv,
            sup_amp: sup_amp.sqrt(),
            center: center.map(|c| c * dv / mass),
        }
    }

    /// `inf_θ ‖ψ − e^{iθ}u‖_{H¹}` given the spectrum of `u`.
    pub fn orbit_distance(&mut self, psi: &[Complex64], ref_hat: &[Complex64]) -> f64 {
        let grid = self.grid.clone();
        let hat = self.spectrum(psi);
        let mut np = 0.0;
        let mut nu = 0.0;
        let mut cross = Complex64::new(0.0, 0.0);
        for (i, (a, b)) in hat.iter().zip(ref_hat).enumerate() {
            let w = 1.0 + grid.k2(i);
            np += w * a.norm_sqr();
            nu += w * b.norm_sqr();
            cross += w * a * b.conj();
        }
        let s = grid.cell_volume() / grid.len() as f64;
        ((np + nu - 2.0 * cross.norm()) * s).max(0.0).sqrt()
    }
}

/// One Strang step of the self-consistent flow.
pub fn strang_step(
    psi: &CartesianField,
    dt: f64,
    params: &ModelParams,
    grid: &Arc<CartesianGrid3>,
) -> Result<CartesianField> {
    if !grid.same_as(&psi.grid) {
        return Err(Error::GridMismatch("field lives on another box".into()));
    }
    let mut prop = Propagator::new(grid, params, dt, Potential::SelfConsistent)?;
    let mut data = psi.data.clone();
    prop.advance(&mut data, 1);
    Ok(CartesianField {
        grid: grid.clone(),
        data,
    })
}
