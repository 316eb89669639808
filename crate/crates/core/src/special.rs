//! Gamma-function helpers, sphere areas and the angular integral behind the
//! radial Riesz kernel.

use crate::quadrature::GaussRule;
use std::f64::consts::PI;

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma_r(x).0
}

/// `Γ(x)` for any non-pole real argument.
pub fn gamma(x: f64) -> f64 {
    if x > 0.0 && x < 150.0 {
        libm::tgamma(x)
    } else if x > 0.0 {
        ln_gamma(x).exp()
    } else {
        libm::tgamma(x)
    }
}

pub fn rgamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.round() {
        0.0
    } else {
        1.0 / gamma(x)
    }
}

/// Euler beta function for positive arguments.
pub fn beta(a: f64, b: f64) -> f64 {
    (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)).exp()
}

/// Surface area of the unit sphere `S^{dim-1}` in `R^dim`.
pub fn sphere_area(dim: usize) -> f64 {
    let h = dim as f64 / 2.0;
    2.0 * (h * PI.ln() - ln_gamma(h)).exp()
}

/// Gauss hypergeometric series, intended for `|z| <= 0.6`.
pub fn hyp2f1_series(a: f64, b: f64, c: f64, z: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..4000 {
        let k = k as f64;
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z;
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
        if term == 0.0 {
            break;
        }
    }
    sum
}

/// `∫_0^π sin^{n-2}θ (1 + t² − 2t cosθ)^{(α−n)/2} dθ` for `0 <= t <= 1`.
pub fn angular_integral(n: usize, alpha: f64, t: f64) -> f64 {
    AngularKernel::new(n, alpha).eval(t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum AngularMode {
    Terminating(usize),
    Connection,
    Quadrature,
}

/// Precomputed evaluator of the angular integral for fixed `(n, α)`.
///
/// Uses the hypergeometric closed form; falls back to graded panel
/// quadrature when the connection coefficients degenerate.
#[derive(Debug, Clone)]
pub struct AngularKernel {
    n: usize,
    alpha: f64,
    a: f64,
    b: f64,
    c: f64,
    s: f64,
    pref: f64,
    g1: f64,
    g2: f64,
    mode: AngularMode,
}

impl AngularKernel {
    pub fn new(n: usize, alpha: f64) -> Self {
        let nf = n as f64;
        let lam = (nf - alpha) / 2.0;
        let nu = (nf - 2.0) / 2.0;
        let (a, b, c) = (lam, lam - nu, nu + 1.0);
        let pref = beta((nf - 1.0) / 2.0, 0.5);
        let s = alpha - 1.0;
        let mode = if b <= 0.0 && (b - b.round()).abs() < 1e-13 {
            AngularMode::Terminating((-b.round()) as usize)
        } else if (s - s.round()).abs() > 0.02 {
            AngularMode::Connection
        } else {
            AngularMode::Quadrature
        };
        let (g1, g2) = if mode == AngularMode::Connection {
            (
                gamma(c) * gamma(s) * rgamma(c - a) * rgamma(c - b),
                gamma(c) * gamma(-s) * rgamma(a) * rgamma(b),
            )
        } else {
            (0.0, 0.0)
        };
        AngularKernel {
            n,
            alpha,
            a,
            b,
            c,
            s,
            pref,
            g1,
            g2,
            mode,
        }
    }

    /// Whether the kernel is a polynomial in `t²` (no singular behaviour at `t = 1`).
    pub fn is_polynomial(&self) -> bool {
        matches!(self.mode, AngularMode::Terminating(_))
    }

    pub fn eval(&self, t: f64) -> f64 {
        let z = t * t;
        let (a, b, c) = (self.a, self.b, self.c);
        match self.mode {
            AngularMode::Terminating(terms) => {
                let br = b.round();
                let mut term = 1.0;
                let mut sum = 1.0;
                for k in 0..terms {
                    let kf = k as f64;
                    term *= (a + kf) * (br + kf) / ((c + kf) * (kf + 1.0)) * z;
                    sum += term;
                }
                self.pref * sum
            }
            _ if z <= 0.5 => self.pref * hyp2f1_series(a, b, c, z),
            AngularMode::Connection => {
                let s = self.s;
                let w = 1.0 - z;
                let mut val = self.g1 * hyp2f1_series(a, b, 1.0 - s, w);
                if w > 0.0 {
                    val += w.powf(s) * self.g2 * hyp2f1_series(c - a, c - b, 1.0 + s, w);
                } else if s <= 0.0 {
                    return f64::INFINITY;
                }
                self.pref * val
            }
            AngularMode::Quadrature => angular_integral_quadrature(self.n, self.alpha, t),
        }
    }
}

/// Direct graded quadrature of the angular integral.
pub fn angular_integral_quadrature(n: usize, alpha: f64, t: f64) -> f64 {
    let expo = (alpha - n as f64) / 2.0;
    let f = |th: f64| {
        let s = (th / 2.0).sin();
        let d = (1.0 - t) * (1.0 - t) + 4.0 * t * s * s;
        th.sin().powi(n as i32 - 2) * d.powf(expo)
    };
    let rule = GaussRule::new(24);
    let scale = if t > 0.0 {
        (1.0 - t).abs() / t.sqrt()
    } else {
        1.0
    };
    let floor = (scale * 1e-3).max(1e-13);
    let mut hi = PI;
    let mut total = 0.0;
    while hi > floor {
        let lo = if hi * 0.5 > floor { hi * 0.5 } else { 0.0 };
        total += rule.integrate(lo, hi, f);
        if lo == 0.0 {
            return total;
        }
        hi = lo;
    }
    total + rule.integrate(0.0, hi, f)
}
