//! Radial shooting for the scalar-field ground state `−ΔQ + Q = Q^{q−1}`.

use super::ode::{Dopri5, Stop};
use crate::discretization::{RadialField, RadialGrid};
use crate::error::{Error, Result};
use crate::quadrature::GaussRule;
use crate::special::sphere_area;
use std::sync::Arc;

const R_START: f64 = 1e-4;
const R_END: f64 = 80.0;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Shot {
    Under,
    Over,
}

/// The positive radial solution, represented by its initial value and the
/// radius beyond which an asymptotic tail replaces the shot.
#[derive(Debug, Clone)]
pub struct ScalarProfile {
    pub dim: usize,
    pub q: f64,
    pub q0: f64,
    pub r_tail: f64,
    tail_value: f64,
    /// `‖Q‖₂²`
    pub q_mass: f64,
    /// `‖∇Q‖₂²`
    pub grad_sq: f64,
    /// `‖Q‖_q^q`
    pub lq: f64,
}

fn rhs(dim: usize, q: f64) -> impl Fn(f64, &[f64; 5]) -> [f64; 5] {
    let k = dim as f64 - 1.0;
    move |r, y| {
        let (u, p) = (y[0], y[1]);
        let rk = r.powi(k as i32);
        let au = u.abs();
        [
            p,
            -k * p / r + u - au.powf(q - 2.0) * u,
            u * u * rk,
            au.powf(q) * rk,
            p * p * rk,
        ]
    }
}

fn start(dim: usize, q: f64, q0: f64) -> [f64; 5] {
    let nf = dim as f64;
    let c = (q0 - q0.powf(q - 1.0)) / (2.0 * nf);
    let r = R_START;
    let rn = r.powi(dim as i32) / nf;
    [
        q0 + c * r * r,
        2.0 * c * r,
        q0 * q0 * rn,
        q0.powf(q) * rn,
        0.0,
    ]
}

fn integrator() -> Dopri5 {
    Dopri5 {
        rtol: 1e-13,
        atol: 1e-300,
        h_max: 0.05,
    }
}

fn classify(dim: usize, q: f64, q0: f64) -> Shot {
    let (stop, _, y) = integrator().integrate(
        rhs(dim, q),
        R_START,
        start(dim, q, q0),
        R_END,
        &[],
        |_, y| y[0] < 0.0 || y[1] > 0.0,
        |_, _, _| {},
    );
    match stop {
        Stop::Event if y[0] < 0.0 => Shot::Over,
        _ => Shot::Under,
    }
}

/// Samples one shot at ascending radii, stopping at the first turn or crossing.
fn trace(dim: usize, q: f64, q0: f64, rs: &[f64]) -> Vec<Option<[f64; 5]>> {
    let mut out = vec![None; rs.len()];
    integrator().integrate(
        rhs(dim, q),
        R_START,
        start(dim, q, q0),
        rs.last().copied().unwrap_or(R_START),
        rs,
        |_, y| y[0] < 0.0 || y[1] > 0.0,
        |i, _, y| out[i] = Some(*y),
    );
    out
}

fn tail_shape(dim: usize, r: f64) -> f64 {
    let nu = (dim as f64 - 2.0) / 2.0;
    let m = 4.0 * nu * nu;
    r.powf(-nu - 0.5)
        * (-r).exp()
        * (1.0 + (m - 1.0) / (8.0 * r) + (m - 1.0) * (m - 9.0) / (128.0 * r * r))
}

pub fn shoot_profile(dim: usize, q: f64) -> Result<ScalarProfile> {
    if dim < 3 {
        return Err(Error::Validation {
            name: "N",
            value: dim as f64,
            bound: "N >= 3",
        });
    }
    let crit = 2.0 * dim as f64 / (dim as f64 - 2.0);
    if !(q > 2.0 && q < crit) {
        return Err(Error::Validation {
            name: "q",
            value: q,
            bound: "2 < q < 2N/(N-2)",
        });
    }
    let scan: Vec<f64> = (0..=48)
        .map(|k| 1e-3 * 10f64.powf(k as f64 / 8.0))
        .collect();
    let mut bracket = None;
    let mut prev = (scan[0], classify(dim, q, scan[0]));
    for &x in &scan[1..] {
        let s = classify(dim, q, x);
        if prev.1 == Shot::Under && s == Shot::Over {
            bracket = Some((prev.0, x));
            break;
        }
        prev = (x, s);
    }
    let (mut lo, mut hi) =
        bracket.ok_or_else(|| Error::Shooting("no bracket for Q(0) in [1e-3, 1e3]".into()))?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match classify(dim, q, mid) {
            Shot::Under => lo = mid,
            Shot::Over => hi = mid,
        }
    }
    let probe: Vec<f64> = (1..=1600).map(|k| k as f64 * 0.05).collect();
    let a = trace(dim, q, lo, &probe);
    let b = trace(dim, q, hi, &probe);
    let mut cut = None;
    for i in 0..probe.len() {
        match (a[i], b[i]) {
            (Some(ya), Some(yb)) if (ya[0] - yb[0]).abs() <= 1e-7 * ya[0].abs() => {}
            _ => {
                cut = Some(i);
                break;
            }
        }
    }
    let idx = cut.unwrap_or(probe.len()).saturating_sub(1);
    if idx < 20 {
        return Err(Error::Shooting(
            "shots separate before the profile decays".into(),
        ));
    }
    let y = a[idx].unwrap();
    let r_tail = probe[idx];
    let area = sphere_area(dim);
    let g = GaussRule::new(40);
    let k = dim as i32 - 1;
    let scale = y[0] / tail_shape(dim, r_tail);
    let (mut tm, mut tq, mut tg) = (0.0, 0.0, 0.0);
    for j in 0..20 {
        let (x0, x1) = (r_tail + 4.0 * j as f64, r_tail + 4.0 * (j + 1) as f64);
        tm += g.integrate(x0, x1, |r| (scale * tail_shape(dim, r)).powi(2) * r.powi(k));
        tq += g.integrate(x0, x1, |r| (scale * tail_shape(dim, r)).powf(q) * r.powi(k));
        tg += g.integrate(x0, x1, |r| {
            let d = (tail_shape(dim, r + 1e-5) - tail_shape(dim, r - 1e-5)) / 2e-5 * scale;
            d * d * r.powi(k)
        });
    }
    Ok(ScalarProfile {
        dim,
        q,
        q0: lo,
        r_tail,
        tail_value: y[0],
        q_mass: area * (y[2] + tm),
        lq: area * (y[3] + tq),
        grad_sq: area * (y[4] + tg),
    })
}

impl ScalarProfile {
    /// `(Q, Q′)` at ascending radii.
    pub fn sample_with_derivative(&self, rs: &[f64]) -> Vec<(f64, f64)> {
        let split = rs.partition_point(|&r| r <= self.r_tail);
        let inner: Vec<f64> = rs[..split]
            .iter()
            .copied()
            .filter(|&r| r >= R_START)
            .collect();
        let traced = trace(self.dim, self.q, self.q0, &inner);
        let mut out = Vec::with_capacity(rs.len());
        let nf = self.dim as f64;
        let c = (self.q0 - self.q0.powf(self.q - 1.0)) / (2.0 * nf);
        let mut it = traced.into_iter();
        for &r in &rs[..split] {
            if r < R_START {
                out.push((self.q0 + c * r * r, 2.0 * c * r));
            } else {
                let y = it.next().flatten().unwrap_or([0.0; 5]);
                out.push((y[0], y[1]));
            }
        }
        let scale = self.tail_value / tail_shape(self.dim, self.r_tail);
        for &r in &rs[split..] {
            let v = scale * tail_shape(self.dim, r);
            let d =
                scale * (tail_shape(self.dim, r + 1e-6) - tail_shape(self.dim, r - 1e-6)) / 2e-6;
            out.push((v, d));
        }
        out
    }

    pub fn sample(&self, rs: &[f64]) -> Vec<f64> {
        self.sample_with_derivative(rs)
            .into_iter()
            .map(|p| p.0)
            .collect()
    }

    pub fn to_field(&self, grid: &Arc<RadialGrid>) -> RadialField {
        RadialField {
            grid: grid.clone(),
            values: self.sample(grid.nodes()),
        }
    }
}

/// Shoots the scalar-field ground state and samples it on `grid`.
pub fn shoot_scalar_ground_state(
    dim: usize,
    q: f64,
    grid: &Arc<RadialGrid>,
) -> Result<(RadialField, f64)> {
    if grid.dim() != dim {
        return Err(Error::GridMismatch(format!(
            "grid dimension {} vs N = {dim}",
            grid.dim()
        )));
    }
    let p = shoot_profile(dim, q)?;
    Ok((p.to_field(grid), p.q_mass))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_dimensional_quadratic_profile() {
        let p = shoot_profile(3, 3.0).unwrap();
        assert!((p.q0 - 4.1916830).abs() < 1e-6, "{}", p.q0);
        assert!(p.r_tail > 10.0);
        // Pohozaev: ‖∇Q‖² = γ_q·(2/q)... for −ΔQ+Q=Q^{q−1}: ‖∇Q‖² = N(q−2)/(2q)‖Q‖_q^q
        let poh = 3.0 * (3.0 - 2.0) / (2.0 * 3.0) * p.lq;
        assert!(((p.grad_sq - poh) / poh).abs() < 1e-8);
        // Nehari: ‖∇Q‖² + ‖Q‖² = ‖Q‖_q^q
        assert!(((p.grad_sq + p.q_mass - p.lq) / p.lq).abs() < 1e-8);
    }

    #[test]
    fn plug_back_residual() {
        for &(dim, q) in &[(3usize, 3.0), (3, 2.5), (4, 2.8), (5, 2.6)] {
            let p = shoot_profile(dim, q).unwrap();
            let h = 1e-2;
            let rs: Vec<f64> = (0..((p.r_tail - 1.0) / h) as usize)
                .map(|k| 0.5 + k as f64 * h)
                .collect();
            let v = p.sample(&rs);
            let k = dim as f64 - 1.0;
            let mut worst = 0.0f64;
            for i in 2..rs.len() - 2 {
                let d2 = (-v[i + 2] + 16.0 * v[i + 1] - 30.0 * v[i] + 16.0 * v[i - 1] - v[i - 2])
                    / (12.0 * h * h);
                let d1 = (-v[i + 2] + 8.0 * v[i + 1] - 8.0 * v[i - 1] + v[i - 2]) / (12.0 * h);
                let res = d2 + k * d1 / rs[i] - v[i] + v[i].powf(q - 1.0);
                worst = worst.max(res.abs());
            }
            assert!(worst < 1e-6, "N={dim} q={q}: {worst}");
            assert!(v.windows(2).all(|w| w[1] < w[0] && w[1] > 0.0));
        }
    }

    #[test]
    fn rejects_supercritical() {
        assert!(shoot_profile(3, 6.5).is_err());
        assert!(shoot_profile(3, 2.0).is_err());
    }
}
