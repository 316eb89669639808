//! Periodic 3-D box `[−L, L)³`, its FFT, and the Riesz potential on it.

use super::RadialField;
use crate::error::{Error, Result};
use crate::model::riesz_normalization;
use crate::quadrature::GaussRule;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

pub struct CartesianGrid3 {
    n: usize,
    half_width: f64,
    dx: f64,
    coords: Vec<f64>,
    wave: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for CartesianGrid3 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CartesianGrid3")
            .field("n", &self.n)
            .field("L", &self.half_width)
            .finish()
    }
}

impl CartesianGrid3 {
    pub fn new(n: usize, half_width: f64) -> Result<Arc<Self>> {
        if n < 32 || !n.is_power_of_two() {
            return Err(Error::Grid(format!(
                "box needs a power of two n >= 32, got {n}"
            )));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::Validation {
                name: "L",
                value: half_width,
                bound: "L > 0",
            });
        }
        let dx = 2.0 * half_width / n as f64;
        let coords = (0..n).map(|i| -half_width + i as f64 * dx).collect();
        let dk = PI / half_width;
        let wave = (0..n).map(|i| if i < n / 2 { i as f64 } else { i as f64 - n as f64 } * dk).collect();
        let mut planner = FftPlanner::new();
        Ok(Arc::new(CartesianGrid3 {
            n,
            half_width,
            dx,
            coords,
            wave,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx.powi(3)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Angular wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wave
    }

    pub fn position(&self, idx: usize) -> [f64; 3] {
        let n = self.n;
        [
            self.coords[idx / (n * n)],
            self.coords[(idx / n) % n],
            self.coords[idx % n],
        ]
    }

    pub fn k2(&self, idx: usize) -> f64 {
        let n = self.n;
        let (a, b, c) = (
            self.wave[idx / (n * n)],
            self.wave[(idx / n) % n],
            self.wave[idx % n],
        );
        a * a + b * b + c * c
    }

    pub fn same_as(&self, other: &CartesianGrid3) -> bool {
        self.n == other.n && self.half_width == other.half_width
    }

    fn rotate(&self, src: &[Complex64], dst: &mut [Complex64]) {
        let n = self.n;
        const B: usize = 16;
        for i in 0..n {
            for jb in (0..n).step_by(B) {
                for kb in (0..n).step_by(B) {
                    for k in kb..(kb + B).min(n) {
                        let out = (k * n + i) * n;
                        for j in jb..(jb + B).min(n) {
                            dst[out + j] = src[(i * n + j) * n + k];
                        }
                    }
                }
            }
        }
    }

    fn transform(
        &self,
        fft: &Arc<dyn Fft<f64>>,
        data: &mut Vec<Complex64>,
        work: &mut Vec<Complex64>,
    ) {
        work.resize(data.len(), Complex64::new(0.0, 0.0));
        for _ in 0..3 {
            fft.process(data);
            self.rotate(data, work);
            std::mem::swap(data, work);
        }
    }

    /// Unnormalized forward transform in place; `work` is scratch.
    pub fn forward(&self, data: &mut Vec<Complex64>, work: &mut Vec<Complex64>) {
        self.transform(&self.fwd, data, work);
    }

    /// Inverse transform including the `1/n³` factor.
    pub fn inverse(&self, data: &mut Vec<Complex64>, work: &mut Vec<Complex64>) {
        self.transform(&self.inv, data, work);
        let s = 1.0 / self.len() as f64;
        data.iter_mut().for_each(|v| *v *= s);
    }
}

#[derive(Debug, Clone)]
pub struct CartesianField {
    pub grid: Arc<CartesianGrid3>,
    pub data: Vec<Complex64>,
}

impl CartesianField {
    pub fn from_fn<F: Fn([f64; 3]) -> Complex64>(grid: &Arc<CartesianGrid3>, f: F) -> Self {
        let data = (0..grid.len()).map(|i| f(grid.position(i))).collect();
        CartesianField {
            grid: grid.clone(),
            data,
        }
    }

    /// Samples a radial profile, zero beyond its grid radius.
    pub fn from_radial(grid: &Arc<CartesianGrid3>, u: &RadialField) -> Self {
        let radius = u.grid.radius();
        Self::from_fn(grid, |[x, y, z]| {
            let r = (x * x + y * y + z * z).sqrt();
            Complex64::new(if r < radius { u.eval(r) } else { 0.0 }, 0.0)
        })
    }

    pub fn mass(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// Fraction of the mass outside the ball of radius `radius`.
    pub fn tail_fraction(&self, radius: f64) -> f64 {
        let r2 = radius * radius;
        let mut out = 0.0;
        let mut total = 0.0;
        for (i, v) in self.data.iter().enumerate() {
            let [x, y, z] = self.grid.position(i);
            let m = v.norm_sqr();
            total += m;
            if x * x + y * y + z * z > r2 {
                out += m;
            }
        }
        out / total
    }

    pub fn scaled(&self, s: f64) -> Self {
        CartesianField {
            grid: self.grid.clone(),
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }
}

/// Fraction of `∫|u|^power` lying beyond `r`.
pub fn radial_tail_fraction(u: &RadialField, r: f64, power: f64) -> f64 {
    let g = &u.grid;
    let density: Vec<f64> = u.values.iter().map(|v| v.abs().powf(power)).collect();
    let tail: f64 = g
        .nodes()
        .iter()
        .zip(g.weights())
        .zip(&density)
        .filter(|((x, _), _)| **x > r)
        .map(|((_, w), d)| w * d)
        .sum();
    tail / g.integrate(&density)
}

/// `∫₀^X u^s sin u du` at increasing `X`, for `s > −2`.
fn sine_moments(s: f64, xs: &[f64]) -> Vec<f64> {
    let series = |x: f64| {
        let mut sum = 0.0;
        let mut fact = 1.0;
        for m in 0..40 {
            let e = s + 2.0 * m as f64 + 2.0;
            let term = x.powf(e) / (fact * e);
            sum += if m % 2 == 0 { term } else { -term };
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
            fact *= ((2 * m + 2) * (2 * m + 3)) as f64;
        }
        sum
    };
    let rule = GaussRule::new(16);
    let mut out = Vec::with_capacity(xs.len());
    let mut acc = 0.0;
    let mut last = 0.0;
    for &x in xs {
        if x <= 1.0 {
            acc = series(x);
        } else {
            let mut a = if last < 1.0 {
                acc = series(1.0);
                1.0
            } else {
                last
            };
            while a < x {
                let b = (a + 1.0).min(x);
                acc += rule.integrate(a, b, |u| u.powf(s) * u.sin());
                a = b;
            }
        }
        last = x;
        out.push(acc);
    }
    out
}

/// Riesz potential on the box via the free-space kernel truncated at radius `L`.
///
/// Exact for densities supported in `|x| ≤ L/2`; periodic images never interact.
#[derive(Debug, Clone)]
pub struct BoxRiesz {
    grid: Arc<CartesianGrid3>,
    alpha: f64,
    symbol: Vec<f64>,
}

impl BoxRiesz {
    pub fn new(grid: &Arc<CartesianGrid3>, alpha: f64) -> Result<Self> {
        if alpha >= 3.0 {
            return Err(Error::Unsupported(format!(
                "Riesz order {alpha} >= 3 on a 3-D box"
            )));
        }
        let a = riesz_normalization(3, alpha)?;
        let d = grid.half_width;
        let n = grid.n;
        let dk = PI / grid.half_width;
        let mmax = 3 * (n / 2) * (n / 2);
        let xs: Vec<f64> = (1..=mmax).map(|m| dk * (m as f64).sqrt() * d).collect();
        let moments = if alpha == 2.0 {
            xs.iter().map(|x| 1.0 - x.cos()).collect()
        } else {
            sine_moments(alpha - 2.0, &xs)
        };
        let mut by_m = vec![4.0 * PI * a * d.powf(alpha) / alpha; mmax + 1];
        for m in 1..=mmax {
            let k = dk * (m as f64).sqrt();
            by_m[m] = 4.0 * PI * a * k.powf(-alpha) * moments[m - 1];
        }
        let idx = |w: f64| {
            let i = (w / dk).round() as i64;
            (i * i) as usize
        };
        let mut symbol = vec![0.0; grid.len()];
        for (p, s) in symbol.iter_mut().enumerate() {
            let (i, j, k) = (p / (n * n), (p / n) % n, p % n);
            *s = by_m[idx(grid.wave[i]) + idx(grid.wave[j]) + idx(grid.wave[k])];
        }
        Ok(BoxRiesz {
            grid: grid.clone(),
            alpha,
            symbol,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn grid(&self) -> &Arc<CartesianGrid3> {
        &self.grid
    }

    pub fn symbol(&self) -> &[f64] {
        &self.symbol
    }

    /// `I_α ∗ f` for real `f`.
    pub fn apply_real(&self, f: &[f64], work: &mut Vec<Complex64>) -> Vec<f64> {
        let mut buf: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.grid.forward(&mut buf, work);
        buf.iter_mut().zip(&self.symbol).for_each(|(v, s)| *v *= s);
        self.grid.inverse(&mut buf, work);
        buf.iter().map(|v| v.re).collect()
    }
}

/// Riesz potential of a real box field.
pub fn fourier_riesz_multiplier(
    grid: &Arc<CartesianGrid3>,
    alpha: f64,
    f: &CartesianField,
) -> Result<CartesianField> {
    if !grid.same_as(&f.grid) {
        return Err(Error::GridMismatch("field lives on another box".into()));
    }
    let op = BoxRiesz::new(grid, alpha)?;
    let re: Vec<f64> = f.data.iter().map(|v| v.re).collect();
    let mut work = Vec::new();
    let out = op.apply_real(&re, &mut work);
    Ok(CartesianField {
        grid: grid.clone(),
        data: out.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
    })
}
