//! Problem parameters, sharp constants, thresholds and the regime partition.

use crate::error::{Error, Result};
use crate::quadrature::GaussRule;
use crate::solvers::shooting::shoot_profile;
use crate::special::{ln_gamma, sphere_area};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Relative half-width of the band in which `lhs = rhs` is declared.
pub const OMEGA2_BAND: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    #[serde(rename = "N")]
    pub n: usize,
    pub alpha: f64,
    pub mu: f64,
    pub a: f64,
    pub q: f64,
}

pub fn derive_exponents(n: usize, alpha: f64, q: f64) -> Result<(f64, f64)> {
    if !(3..=12).contains(&n) {
        return Err(Error::Validation {
            name: "N",
            value: n as f64,
            bound: "3 <= N <= 12",
        });
    }
    let nf = n as f64;
    if !(alpha > 0.0 && alpha < nf) {
        return Err(Error::Validation {
            name: "alpha",
            value: alpha,
            bound: "0 < alpha < N",
        });
    }
    if !(q > 2.0 && q < 2.0 + 4.0 / nf) {
        return Err(Error::Validation {
            name: "q",
            value: q,
            bound: "2 < q < 2 + 4/N",
        });
    }
    Ok(((nf + alpha) / (nf - 2.0), nf / 2.0 - nf / q))
}

impl ModelParams {
    pub fn new(n: usize, alpha: f64, mu: f64, a: f64, q: f64) -> Result<Self> {
        derive_exponents(n, alpha, q)?;
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::Validation {
                name: "mu",
                value: mu,
                bound: "mu > 0",
            });
        }
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::Validation {
                name: "a",
                value: a,
                bound: "a > 0",
            });
        }
        Ok(ModelParams { n, alpha, mu, a, q })
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.n, self.alpha, self.mu, self.a, self.q).map(|_| ())
    }

    pub fn with_mass(&self, a: f64) -> Self {
        ModelParams { a, ..*self }
    }

    pub fn dim(&self) -> f64 {
        self.n as f64
    }

    pub fn p_bar(&self) -> f64 {
        (self.dim() + self.alpha) / (self.dim() - 2.0)
    }

    pub fn gamma_q(&self) -> f64 {
        self.dim() / 2.0 - self.dim() / self.q
    }

    pub fn q_gamma(&self) -> f64 {
        self.q * self.gamma_q()
    }

    /// `μ a^{q(1−γ_q)/2}`
    pub fn regime_lhs(&self) -> f64 {
        self.mu * self.a.powf(self.q * (1.0 - self.gamma_q()) / 2.0)
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            n: 3,
            alpha: 2.0,
            mu: 1.0,
            a: 1.0,
            q: 3.0,
        }
    }
}

pub fn riesz_normalization(n: usize, alpha: f64) -> Result<f64> {
    let nf = n as f64;
    if !(alpha > 0.0 && alpha < nf) {
        return Err(Error::Domain(format!(
            "Riesz order {alpha} outside (0, {n})"
        )));
    }
    Ok((ln_gamma((nf - alpha) / 2.0)
        - ln_gamma(alpha / 2.0)
        - nf / 2.0 * PI.ln()
        - alpha * 2f64.ln())
    .exp())
}

/// Sharp Hardy–Littlewood–Sobolev constant in the diagonal case.
pub fn hls_sharp_constant(n: usize, beta: f64) -> Result<f64> {
    let nf = n as f64;
    if !(beta > 0.0 && beta < nf) {
        return Err(Error::Domain(format!("HLS order {beta} outside (0, {n})")));
    }
    let ln = (nf - beta) / 2.0 * PI.ln() + ln_gamma(beta / 2.0)
        - ln_gamma((nf + beta) / 2.0)
        - beta / nf * (ln_gamma(nf / 2.0) - ln_gamma(nf));
    Ok(ln.exp())
}

/// HLS constant for exponents `(p, r)`; only the diagonal pair has a known sharp value.
pub fn hls_constant(n: usize, beta: f64, p: f64, r: f64) -> Result<f64> {
    let diag = 2.0 * n as f64 / (n as f64 + beta);
    if (p - diag).abs() > 1e-12 || (r - diag).abs() > 1e-12 {
        return Err(Error::Unsupported(format!(
            "sharp HLS constant only known for p = r = {diag}, got ({p}, {r})"
        )));
    }
    hls_sharp_constant(n, beta)
}

pub(crate) fn half_line_integral<F: Fn(f64) -> f64>(f: F, scale: f64, panels: usize) -> f64 {
    let g = GaussRule::new(20);
    let h = PI / 2.0 / panels as f64;
    (0..panels)
        .map(|k| {
            g.integrate(k as f64 * h, (k + 1) as f64 * h, |th| {
                let c = th.cos();
                let r = scale * th.tan();
                f(r) * scale / (c * c)
            })
        })
        .sum()
}

/// Sobolev quotient `‖∇u‖₂² / ‖u‖_{2*}²` of a radial profile given with its derivative.
pub fn sobolev_quotient<U, D>(n: usize, u: U, du: D, scale: f64, panels: usize) -> f64
where
    U: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let nf = n as f64;
    let crit = 2.0 * nf / (nf - 2.0);
    let area = sphere_area(n);
    let k = n as i32 - 1;
    let num = area * half_line_integral(|r| du(r).powi(2) * r.powi(k), scale, panels);
    let den = area * half_line_integral(|r| u(r).abs().powf(crit) * r.powi(k), scale, panels);
    num / den.powf((nf - 2.0) / nf)
}

/// `U_ε(r)` and its radial derivative.
pub fn talenti(n: usize, eps: f64, r: f64) -> (f64, f64) {
    let nf = n as f64;
    let c = (nf * (nf - 2.0) * eps * eps).powf((nf - 2.0) / 4.0);
    let d = eps * eps + r * r;
    let u = c * d.powf(-(nf - 2.0) / 2.0);
    (u, -(nf - 2.0) * r * u / d)
}

pub fn sobolev_constant(n: usize) -> Result<f64> {
    if !(3..=12).contains(&n) {
        return Err(Error::Validation {
            name: "N",
            value: n as f64,
            bound: "3 <= N <= 12",
        });
    }
    let eval = |panels| {
        sobolev_quotient(
            n,
            |r| talenti(n, 1.0, r).0,
            |r| talenti(n, 1.0, r).1,
            1.0,
            panels,
        )
    };
    let coarse = eval(16);
    let fine = eval(32);
    let diff = ((fine - coarse) / fine).abs();
    if diff > 1e-8 {
        return Err(Error::NumericalAccuracy {
            what: "Sobolev quotient quadrature".into(),
            achieved: diff,
        });
    }
    Ok(fine)
}

/// Sharp Gagliardo–Nirenberg constant `C_{N,q}` from `‖Q_q‖₂²`.
pub fn gn_constant(n: usize, q: f64, q_mass: f64) -> Result<f64> {
    if !(q_mass > 0.0 && q_mass.is_finite()) {
        return Err(Error::Validation {
            name: "Q_mass",
            value: q_mass,
            bound: "Q_mass > 0",
        });
    }
    let nf = n as f64;
    let crit = if n > 2 {
        2.0 * nf / (nf - 2.0)
    } else {
        f64::INFINITY
    };
    if !(q > 2.0 && q < crit) {
        return Err(Error::Validation {
            name: "q",
            value: q,
            bound: "2 < q < 2N/(N-2)",
        });
    }
    let d = 2.0 * nf + (2.0 - nf) * q;
    let cq = 2.0 * q / d
        * (d / (nf * (q - 2.0))).powf(nf * (q - 2.0) / 4.0)
        * q_mass.powf(-(q - 2.0) / 2.0);
    Ok(cq.powf(1.0 / q))
}

/// Constants that do not depend on `μ` or `a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartialConstants {
    #[serde(rename = "A_alpha")]
    pub a_alpha: f64,
    #[serde(rename = "C_alpha")]
    pub c_alpha: f64,
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(rename = "S_alpha")]
    pub s_alpha: f64,
    #[serde(rename = "C_Nq")]
    pub c_nq: f64,
    #[serde(rename = "Q_mass")]
    pub q_mass: f64,
}

impl PartialConstants {
    pub fn compute(params: &ModelParams) -> Result<Self> {
        params.validate()?;
        let a_alpha = riesz_normalization(params.n, params.alpha)?;
        let c_alpha = hls_sharp_constant(params.n, params.alpha)?;
        let s = sobolev_constant(params.n)?;
        let s_alpha = s / (a_alpha * c_alpha).powf(1.0 / params.p_bar());
        let q_mass = shoot_profile(params.n, params.q)?.q_mass;
        let c_nq = gn_constant(params.n, params.q, q_mass)?;
        Ok(PartialConstants {
            a_alpha,
            c_alpha,
            s,
            s_alpha,
            c_nq,
            q_mass,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SharpConstants {
    #[serde(rename = "A_alpha")]
    pub a_alpha: f64,
    #[serde(rename = "C_alpha")]
    pub c_alpha: f64,
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(rename = "S_alpha")]
    pub s_alpha: f64,
    #[serde(rename = "C_Nq")]
    pub c_nq: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub rho0: f64,
    pub a0: f64,
    #[serde(rename = "Q_mass")]
    pub q_mass: f64,
}

pub fn threshold_constants(params: &ModelParams, partial: &PartialConstants) -> SharpConstants {
    let pb = params.p_bar();
    let qg = params.q_gamma();
    let q = params.q;
    let cq = partial.c_nq.powf(q);
    let sp = partial.s_alpha.powf(pb);
    let k = (2.0 * pb - qg) / (2.0 * pb * (2.0 - qg) * sp)
        * (pb * (2.0 - qg) * cq * sp / (q * (pb - 1.0))).powf((2.0 * pb - 2.0) / (2.0 * pb - qg));
    let rho0 = (pb * (2.0 - qg) * sp / (2.0 * pb - qg)).powf(1.0 / (pb - 1.0));
    let rhs = regime_rhs_from(k, pb, qg);
    let a0 = (rhs / params.mu).powf(2.0 / (q * (1.0 - params.gamma_q())));
    SharpConstants {
        a_alpha: partial.a_alpha,
        c_alpha: partial.c_alpha,
        s: partial.s,
        s_alpha: partial.s_alpha,
        c_nq: partial.c_nq,
        k,
        rho0,
        a0,
        q_mass: partial.q_mass,
    }
}

fn regime_rhs_from(k: f64, pb: f64, qg: f64) -> f64 {
    (2.0 * k).powf((qg - 2.0 * pb) / (2.0 * (pb - 1.0)))
}

impl SharpConstants {
    pub fn compute(params: &ModelParams) -> Result<Self> {
        Ok(threshold_constants(
            params,
            &PartialConstants::compute(params)?,
        ))
    }

    /// Same constants with `a₀` recomputed for another `μ`.
    pub fn for_mu(&self, params: &ModelParams) -> Self {
        let rhs = self.regime_rhs(params);
        SharpConstants {
            a0: (rhs / params.mu).powf(2.0 / (params.q * (1.0 - params.gamma_q()))),
            ..*self
        }
    }

    /// `(2K)^{(qγ_q−2p̄)/(2(p̄−1))}`
    pub fn regime_rhs(&self, params: &ModelParams) -> f64 {
        regime_rhs_from(self.k, params.p_bar(), params.q_gamma())
    }

    /// `(2+α)/(2(N+α))·S_α^{(N+α)/(2+α)}`
    pub fn bubble_level(&self, params: &ModelParams) -> f64 {
        let (n, al) = (params.dim(), params.alpha);
        (2.0 + al) / (2.0 * (n + al)) * self.s_alpha.powf((n + al) / (2.0 + al))
    }
}

pub fn f_mu_a(params: &ModelParams, consts: &SharpConstants, rho: f64) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(Error::Domain(format!("f_mu_a needs rho > 0, got {rho}")));
    }
    let pb = params.p_bar();
    let q = params.q;
    let g = params.gamma_q();
    Ok(0.5
        - consts.s_alpha.powf(-pb) * rho.powf(pb - 1.0) / (2.0 * pb)
        - params.mu / q
            * consts.c_nq.powf(q)
            * params.a.powf(q * (1.0 - g) / 2.0)
            * rho.powf((q * g - 2.0) / 2.0))
}

/// The unique stationary point of `f_{μ,a}`.
pub fn rho_mu_a(params: &ModelParams, consts: &SharpConstants) -> f64 {
    let pb = params.p_bar();
    let q = params.q;
    let qg = params.q_gamma();
    (pb * params.mu * (2.0 - qg) / (q * (pb - 1.0))
        * consts.c_nq.powf(q)
        * params.a.powf(q * (1.0 - params.gamma_q()) / 2.0)
        * consts.s_alpha.powf(pb))
    .powf(2.0 / (2.0 * pb - qg))
}

/// `1/2 − K (μ a^{q(1−γ_q)/2})^{2(p̄−1)/(2p̄−qγ_q)}`
pub fn max_f_closed_form(params: &ModelParams, consts: &SharpConstants) -> f64 {
    let pb = params.p_bar();
    let qg = params.q_gamma();
    0.5 - consts.k * params.regime_lhs().powf(2.0 * (pb - 1.0) / (2.0 * pb - qg))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Omega1,
    Omega2,
    Omega3,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Regime::Omega1 => "Omega1",
            Regime::Omega2 => "Omega2",
            Regime::Omega3 => "Omega3",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub regime: Regime,
    pub lhs: f64,
    pub rhs: f64,
    pub fmax: f64,
    pub rho_max: f64,
}

pub fn classify_regime(params: &ModelParams, consts: &SharpConstants) -> RegimeReport {
    let lhs = params.regime_lhs();
    let rhs = consts.regime_rhs(params);
    let rho_max = rho_mu_a(params, consts);
    let fmax = f_mu_a(params, consts, rho_max).unwrap_or(f64::NAN);
    let regime = if (lhs - rhs).abs() <= OMEGA2_BAND * rhs {
        Regime::Omega2
    } else if lhs < rhs {
        Regime::Omega1
    } else {
        Regime::Omega3
    };
    RegimeReport {
        regime,
        lhs,
        rhs,
        fmax,
        rho_max,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::{beta, gamma};

    fn defaults() -> (ModelParams, SharpConstants) {
        let p = ModelParams::default();
        let c = SharpConstants::compute(&p).unwrap();
        (p, c)
    }

    #[test]
    fn exponents() {
        let (p, g) = derive_exponents(3, 2.0, 3.0).unwrap();
        assert_eq!((p, g), (5.0, 0.5));
        let (p, g) = derive_exponents(4, 2.0, 2.5).unwrap();
        assert!((p - 3.0).abs() < 1e-15 && (g - 0.4).abs() < 1e-15);
        let q = 2.0 + 4.0 / 3.0 - 1e-12;
        let (_, g) = derive_exponents(3, 2.0, q).unwrap();
        assert!((q * g - 2.0).abs() < 1e-10);
        assert!(derive_exponents(3, 3.0, 3.0).is_err());
        assert!(derive_exponents(3, 2.0, 3.5).is_err());
        assert!(derive_exponents(2, 1.0, 3.0).is_err());
        let err = ModelParams::new(3, 2.0, -1.0, 1.0, 3.0)
            .unwrap_err()
            .to_string();
        assert!(err.contains("mu"));
    }

    #[test]
    fn riesz_constants() {
        assert!((riesz_normalization(3, 2.0).unwrap() - 1.0 / (4.0 * PI)).abs() < 1e-15);
        assert!((riesz_normalization(4, 2.0).unwrap() - 1.0 / (4.0 * PI * PI)).abs() < 1e-15);
        let a = riesz_normalization(5, 1.3).unwrap();
        let back = a * gamma(0.65) * 2f64.powf(1.3) * PI.powf(2.5);
        assert!((back - gamma((5.0 - 1.3) / 2.0)).abs() < 1e-13);
        assert!(riesz_normalization(3, 3.0).is_err());
        assert!(riesz_normalization(3, 0.0).is_err());
    }

    #[test]
    fn hls_constants() {
        let c = hls_sharp_constant(3, 2.0).unwrap();
        assert!((c - 4.0 / 3.0 * (4.0 / PI.sqrt()).powf(2.0 / 3.0)).abs() < 1e-13);
        let c = hls_sharp_constant(4, 2.0).unwrap();
        assert!((c - PI / 2.0 * 6f64.sqrt()).abs() < 1e-13);
        for k in 1..6 {
            let b = 0.5 * k as f64;
            let c = hls_sharp_constant(3, b).unwrap();
            assert!(c.is_finite() && c > 0.0);
        }
        assert!(matches!(
            hls_constant(3, 2.0, 1.5, 1.2),
            Err(Error::Unsupported(_))
        ));
        assert!(hls_constant(3, 2.0, 1.2, 1.2).is_ok());
    }

    #[test]
    fn sobolev() {
        for n in [3usize, 4, 5, 7] {
            let s = sobolev_constant(n).unwrap();
            // closed form through the volume of S^N
            let nf = n as f64;
            let area_n = 2.0 * PI.powf((nf + 1.0) / 2.0) / gamma((nf + 1.0) / 2.0);
            let exact = nf * (nf - 2.0) / 4.0 * area_n.powf(2.0 / nf);
            assert!(((s - exact) / exact).abs() < 1e-10, "N={n}: {s} {exact}");
        }
        let s3 = sobolev_constant(3).unwrap();
        assert!((s3 - 3.0 * (PI / 2.0).powf(4.0 / 3.0)).abs() < 1e-9);
        for eps in [0.5, 2.0] {
            let q = sobolev_quotient(
                3,
                |r| talenti(3, eps, r).0,
                |r| talenti(3, eps, r).1,
                eps,
                32,
            );
            assert!(((q - s3) / s3).abs() < 1e-10);
        }
        let tent = sobolev_quotient(
            3,
            |r| (1.0 - r).max(0.0),
            |r| if r < 1.0 { -1.0 } else { 0.0 },
            1.0,
            32,
        );
        assert!(tent > s3);
        // tent value: 4π/3 over (4π·∫(1-r)^6 r² dr)^{1/3}
        let exact = 4.0 * PI / 3.0 / (4.0 * PI * beta(3.0, 7.0)).powf(1.0 / 3.0);
        assert!(((tent - exact) / exact).abs() < 1e-10);
    }

    #[test]
    fn default_constants() {
        let (p, c) = defaults();
        assert!((c.a_alpha - 0.0795775).abs() < 1e-7);
        assert!((c.c_alpha - 2.2940107).abs() < 1e-7);
        assert!((c.s - 5.4779041).abs() < 1e-7);
        assert!((c.s_alpha - 7.6972804).abs() < 1e-6);
        assert!((c.q_mass - 130.98).abs() < 0.01, "{}", c.q_mass);
        assert!((c.c_nq.powf(3.0) - 0.17475).abs() < 1e-4);
        assert!((c.k - 0.0412651).abs() < 1e-6);
        assert!((c.rho0 - 9.44174).abs() < 1e-4);
        assert!((c.a0 - 34.2609).abs() < 1e-3, "{}", c.a0);
        assert!((c.bubble_level(&p) - 5.1284).abs() < 1e-3);
        assert!((c.s_alpha - c.s / (c.a_alpha * c.c_alpha).powf(0.2)).abs() < 1e-12);
        // formula consistency of the GN prefactor
        let pref = 2.0 * 3.0 / (6.0 - 3.0) * ((6.0 - 3.0) / 3.0f64).powf(0.75);
        assert!((c.c_nq.powf(3.0) * c.q_mass.sqrt() - pref).abs() < 1e-12);
    }

    #[test]
    fn thresholds() {
        let (p, c) = defaults();
        let at = p.with_mass(c.a0);
        assert!(f_mu_a(&at, &c, c.rho0).unwrap().abs() < 1e-10);
        for frac in [0.1, 0.5, 0.9, 1.0, 1.7] {
            let pp = p.with_mass(frac * c.a0);
            let rho = rho_mu_a(&pp, &c);
            let f = f_mu_a(&pp, &c, rho).unwrap();
            assert!((f - max_f_closed_form(&pp, &c)).abs() < 1e-10);
            let h = 1e-4 * rho;
            let d =
                (f_mu_a(&pp, &c, rho + h).unwrap() - f_mu_a(&pp, &c, rho - h).unwrap()) / (2.0 * h);
            let d2 = (f_mu_a(&pp, &c, rho + h).unwrap() - 2.0 * f
                + f_mu_a(&pp, &c, rho - h).unwrap())
                / (h * h);
            assert!(d.abs() <= 1e-6 * d2.abs().max(1.0), "{d} {d2}");
            if frac < 1.0 {
                assert!(f_mu_a(&pp, &c, c.rho0).unwrap() > 0.0);
            }
        }
        assert!(f_mu_a(&p, &c, 1e-30).unwrap() < -1e3);
        assert!(f_mu_a(&p, &c, 0.0).is_err());
    }

    #[test]
    fn trichotomy_sweep() {
        let (p, c) = defaults();
        for k in 1..=50 {
            let pp = p.with_mass(3.0 * c.a0 * k as f64 / 50.0);
            let r = classify_regime(&pp, &c);
            match r.regime {
                Regime::Omega1 => assert!(r.fmax > 0.0 && r.lhs < r.rhs),
                Regime::Omega2 => assert!(r.fmax.abs() < 1e-9),
                Regime::Omega3 => assert!(r.fmax < 0.0 && r.lhs > r.rhs),
            }
        }
        assert_eq!(
            classify_regime(&p.with_mass(c.a0), &c).regime,
            Regime::Omega2
        );
        assert_eq!(
            classify_regime(&p.with_mass(c.a0 / 2.0), &c).regime,
            Regime::Omega1
        );
        assert_eq!(
            classify_regime(&p.with_mass(2.0 * c.a0), &c).regime,
            Regime::Omega3
        );
    }

    #[test]
    fn monotone_safety() {
        let (p, c) = defaults();
        let a1 = 0.9 * c.a0;
        let p1 = p.with_mass(a1);
        let rho1 = rho_mu_a(&p1, &c);
        assert!(f_mu_a(&p1, &c, rho1).unwrap() >= 0.0);
        for a2 in [0.1 * a1, 0.5 * a1, 0.99 * a1] {
            let p2 = p.with_mass(a2);
            for k in 0..100 {
                let rho = a2 * rho1 / a1 + (rho1 - a2 * rho1 / a1) * k as f64 / 99.0;
                assert!(f_mu_a(&p2, &c, rho).unwrap() > 0.0);
            }
        }
    }

    #[test]
    fn deterministic() {
        let p = ModelParams::default();
        let a = SharpConstants::compute(&p).unwrap();
        let b = SharpConstants::compute(&p).unwrap();
        assert_eq!(a.k.to_bits(), b.k.to_bits());
        assert_eq!(a.a0.to_bits(), b.a0.to_bits());
        let json = serde_json::to_value(a).unwrap();
        for key in [
            "A_alpha", "C_alpha", "S", "S_alpha", "C_Nq", "K", "rho0", "a0",
        ] {
            assert!(json.get(key).is_some(), "{key}");
        }
    }
}
