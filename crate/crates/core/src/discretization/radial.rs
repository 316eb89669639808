//! Radial grids built from Gauss–Legendre elements, with a symmetric
//! interior-penalty Laplacian.

use crate::error::{Error, Result};
use crate::linalg::SymBanded;
use crate::quadrature::{GaussRule, LagrangeBasis};
use crate::special::sphere_area;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Nodes per element.
pub const ELEMENT_ORDER: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    Uniform,
    /// Element edges `R·sinh(β k/K)/sinh(β)`.
    Graded {
        stretch: f64,
    },
}

#[derive(Debug, Clone)]
pub struct RadialGrid {
    dim: usize,
    radius: f64,
    kind: GridKind,
    edges: Vec<f64>,
    r: Vec<f64>,
    w: Vec<f64>,
    rule: GaussRule,
    basis: LagrangeBasis,
    stiffness: SymBanded,
}

pub fn build_radial_grid(
    dim: usize,
    radius: f64,
    n: usize,
    kind: GridKind,
) -> Result<Arc<RadialGrid>> {
    RadialGrid::new(dim, radius, n, kind).map(Arc::new)
}

impl RadialGrid {
    pub fn new(dim: usize, radius: f64, n: usize, kind: GridKind) -> Result<Self> {
        if !(3..=12).contains(&dim) {
            return Err(Error::Validation {
                name: "N",
                value: dim as f64,
                bound: "3 <= N <= 12",
            });
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Validation {
                name: "R",
                value: radius,
                bound: "R > 0",
            });
        }
        if n < 64 || !n.is_multiple_of(ELEMENT_ORDER) {
            return Err(Error::Validation {
                name: "n",
                value: n as f64,
                bound: "n >= 64 and a multiple of 8",
            });
        }
        let m = ELEMENT_ORDER;
        let k = n / m;
        let edges: Vec<f64> = match kind {
            GridKind::Uniform => (0..=k).map(|i| radius * i as f64 / k as f64).collect(),
            GridKind::Graded { stretch } => {
                if !(stretch > 0.0 && stretch < 50.0) {
                    return Err(Error::Validation {
                        name: "grid_stretch",
                        value: stretch,
                        bound: "0 < stretch < 50",
                    });
                }
                let s = stretch.sinh();
                (0..=k)
                    .map(|i| radius * (stretch * i as f64 / k as f64).sinh() / s)
                    .collect()
            }
        };
        let rule = GaussRule::new(m);
        let basis = LagrangeBasis::new(&rule.nodes);
        let area = sphere_area(dim);
        let mut r = Vec::with_capacity(n);
        let mut w = Vec::with_capacity(n);
        for e in 0..k {
            for (x, wx) in rule.mapped(edges[e], edges[e + 1]) {
                r.push(x);
                w.push(area * x.powi(dim as i32 - 1) * wx);
            }
        }
        let mut grid = RadialGrid {
            dim,
            radius,
            kind,
            edges,
            r,
            w,
            rule,
            basis,
            stiffness: SymBanded::zeros(n, 2 * m - 1),
        };
        let vol: f64 = grid.w.iter().sum();
        let exact = area * radius.powi(dim as i32) / dim as f64;
        if ((vol - exact) / exact).abs() > 1e-10 {
            return Err(Error::Grid(format!("ball volume {vol} vs {exact}")));
        }
        grid.stiffness = grid.assemble_stiffness();
        if grid.stiffness.cholesky().is_none() {
            return Err(Error::Grid(
                "stiffness matrix is not positive definite".into(),
            ));
        }
        Ok(grid)
    }

    fn assemble_stiffness(&self) -> SymBanded {
        let m = ELEMENT_ORDER;
        let n = self.len();
        let dim = self.dim;
        let area = sphere_area(dim);
        let rho = |x: f64| area * x.powi(dim as i32 - 1);
        let mut a = SymBanded::zeros(n, 2 * m - 1);
        let over = GaussRule::new(m + dim / 2 + 2);
        let mut dl = vec![0.0; m];
        let dq: Vec<Vec<f64>> = over
            .nodes
            .iter()
            .map(|&x| {
                self.basis.derivatives(x, &mut dl);
                dl.clone()
            })
            .collect();
        let mut tr_l = vec![0.0; m];
        let mut tr_r = vec![0.0; m];
        let mut dtr_l = vec![0.0; m];
        let mut dtr_r = vec![0.0; m];
        self.basis.values(-1.0, &mut tr_l);
        self.basis.values(1.0, &mut tr_r);
        self.basis.derivatives(-1.0, &mut dtr_l);
        self.basis.derivatives(1.0, &mut dtr_r);
        let k = self.n_elements();
        for e in 0..k {
            let (lo, hi) = (self.edges[e], self.edges[e + 1]);
            let h = hi - lo;
            let base = e * m;
            for (q, (&xq, &wq)) in over.nodes.iter().zip(&over.weights).enumerate() {
                let x = lo + 0.5 * h * (xq + 1.0);
                let f = wq * 0.5 * h * rho(x) * (2.0 / h) * (2.0 / h);
                for i in 0..m {
                    for j in 0..=i {
                        a.add(base + i, base + j, f * dq[q][i] * dq[q][j]);
                    }
                }
            }
        }
        let pen = 2.0 * ((m + dim) as f64).powi(2);
        // interior faces
        for e in 0..k {
            let f = self.edges[e + 1];
            let hl = self.edges[e + 1] - self.edges[e];
            let mut dofs: Vec<(usize, f64, f64)> = Vec::with_capacity(2 * m);
            let sigma = if e + 1 < k {
                let hr = self.edges[e + 2] - self.edges[e + 1];
                for j in 0..m {
                    dofs.push((e * m + j, tr_r[j], (1.0 / hl) * dtr_r[j]));
                }
                for j in 0..m {
                    dofs.push(((e + 1) * m + j, -tr_l[j], (1.0 / hr) * dtr_l[j]));
                }
                pen / hl.min(hr)
            } else {
                for j in 0..m {
                    dofs.push((e * m + j, tr_r[j], (2.0 / hl) * dtr_r[j]));
                }
                pen / hl
            };
            let rf = rho(f);
            for x in 0..dofs.len() {
                for y in 0..=x {
                    let (i, ji, gi) = dofs[x];
                    let (j, jj, gj) = dofs[y];
                    a.add(i, j, rf * (-(gj * ji + gi * jj) + sigma * ji * jj));
                }
            }
        }
        a
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.r
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn n_elements(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn order(&self) -> usize {
        ELEMENT_ORDER
    }

    pub fn reference_rule(&self) -> &GaussRule {
        &self.rule
    }

    pub fn basis(&self) -> &LagrangeBasis {
        &self.basis
    }

    /// Weighted stiffness matrix: `uᵀAu = ‖∇u‖₂²` for the discrete field.
    pub fn stiffness(&self) -> &SymBanded {
        &self.stiffness
    }

    pub fn integrate(&self, v: &[f64]) -> f64 {
        self.w.iter().zip(v).map(|(w, v)| w * v).sum()
    }

    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.w
            .iter()
            .zip(u)
            .zip(v)
            .map(|((w, a), b)| w * a * b)
            .sum()
    }

    pub fn dirichlet_energy(&self, u: &[f64]) -> f64 {
        self.stiffness.quadratic_form(u)
    }

    pub fn laplacian_values(&self, u: &[f64]) -> Vec<f64> {
        let au = self.stiffness.matvec(u);
        au.iter().zip(&self.w).map(|(a, w)| -a / w).collect()
    }

    /// Element containing `r` (the last one for `r = R`).
    pub fn locate(&self, r: f64) -> Option<usize> {
        if !(0.0..=self.radius).contains(&r) {
            return None;
        }
        let k = self.edges.partition_point(|&e| e <= r);
        Some(k.saturating_sub(1).min(self.n_elements() - 1))
    }

    /// Evaluates the element polynomial through `values` at `r`; zero beyond `R`.
    pub fn interpolate(&self, values: &[f64], r: f64) -> f64 {
        let Some(e) = self.locate(r) else { return 0.0 };
        let (lo, hi) = (self.edges[e], self.edges[e + 1]);
        let xi = 2.0 * (r - lo) / (hi - lo) - 1.0;
        let mut l = [0.0; ELEMENT_ORDER];
        self.basis.values(xi, &mut l);
        let base = e * ELEMENT_ORDER;
        l.iter()
            .enumerate()
            .map(|(j, lj)| lj * values[base + j])
            .sum()
    }

    pub fn interpolate_derivative(&self, values: &[f64], r: f64) -> f64 {
        let Some(e) = self.locate(r) else { return 0.0 };
        let (lo, hi) = (self.edges[e], self.edges[e + 1]);
        let xi = 2.0 * (r - lo) / (hi - lo) - 1.0;
        let mut l = [0.0; ELEMENT_ORDER];
        self.basis.derivatives(xi, &mut l);
        let base = e * ELEMENT_ORDER;
        l.iter()
            .enumerate()
            .map(|(j, lj)| lj * values[base + j])
            .sum::<f64>()
            * 2.0
            / (hi - lo)
    }

    /// Whether two grids share nodes (same construction parameters).
    pub fn same_as(&self, other: &RadialGrid) -> bool {
        self.dim == other.dim && self.r == other.r
    }
}

/// A real radial profile sampled at the nodes of a grid.
#[derive(Debug, Clone)]
pub struct RadialField {
    pub grid: Arc<RadialGrid>,
    pub values: Vec<f64>,
}

impl RadialField {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("radial field"));
        }
        Ok(RadialField { grid, values })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(grid: &Arc<RadialGrid>, f: F) -> Self {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        RadialField {
            grid: grid.clone(),
            values,
        }
    }

    pub fn zeros(grid: &Arc<RadialGrid>) -> Self {
        RadialField {
            grid: grid.clone(),
            values: vec![0.0; grid.len()],
        }
    }

    pub fn mass(&self) -> f64 {
        self.grid.inner(&self.values, &self.values)
    }

    pub fn grad_sq(&self) -> f64 {
        self.grid.dirichlet_energy(&self.values)
    }

    pub fn lp_pow(&self, p: f64) -> f64 {
        let v: Vec<f64> = self.values.iter().map(|u| u.abs().powf(p)).collect();
        self.grid.integrate(&v)
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.grid.interpolate(&self.values, r)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, s: f64) -> Self {
        RadialField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    /// Resamples onto another grid through the element polynomials.
    pub fn resample(&self, grid: &Arc<RadialGrid>) -> Self {
        RadialField::from_fn(grid, |r| self.eval(r))
    }
}

pub fn radial_laplacian(u: &RadialField) -> RadialField {
    RadialField {
        grid: u.grid.clone(),
        values: u.grid.laplacian_values(&u.values),
    }
}

/// `r ↦ θ^κ u(θ r)`, evaluated through the element polynomials.
pub fn dilate(u: &RadialField, theta: f64, kappa: f64) -> RadialField {
    let s = theta.powf(kappa);
    RadialField::from_fn(&u.grid, |r| s * u.eval(theta * r))
}

#[derive(Debug, Clone)]
pub struct Rescaled {
    pub field: RadialField,
    pub lost_mass: f64,
    pub warning: Option<String>,
}

/// Mass-preserving dilation `u_τ(r) = τ^{N/2} u(τ r)`.
pub fn rescale_field(u: &RadialField, tau: f64) -> Result<Rescaled> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Domain(format!(
            "rescale factor must be positive, got {tau}"
        )));
    }
    if tau == 1.0 {
        return Ok(Rescaled {
            field: u.clone(),
            lost_mass: 0.0,
            warning: None,
        });
    }
    let field = dilate(u, tau, u.grid.dim() as f64 / 2.0);
    let m0 = u.mass();
    let lost = if tau < 1.0 && m0 > 0.0 {
        let cut = tau * u.grid.radius();
        let tail: f64 = u
            .grid
            .nodes()
            .iter()
            .zip(u.grid.weights())
            .zip(&u.values)
            .filter(|((r, _), _)| **r > cut)
            .map(|((_, w), v)| w * v * v)
            .sum();
        tail / m0
    } else {
        0.0
    };
    let warning =
        (lost > 1e-6).then(|| format!("rescale by {tau} pushes {lost:.2e} of the mass beyond R"));
    Ok(Rescaled {
        field,
        lost_mass: lost,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn ball_volume_and_gaussian_moment() {
        let g = build_radial_grid(3, 20.0, 512, GridKind::Uniform).unwrap();
        let vol = g.integrate(&vec![1.0; g.len()]);
        let exact = 4.0 * PI * 8000.0 / 3.0;
        assert!(((vol - exact) / exact).abs() < 1e-10);
        let f: Vec<f64> = g.nodes().iter().map(|r| (-r * r).exp()).collect();
        let m = g.integrate(&f) / (4.0 * PI);
        assert!((m - PI.sqrt() / 4.0).abs() < 1e-8);
    }

    #[test]
    fn graded_refines_near_origin() {
        let g = build_radial_grid(3, 40.0, 256, GridKind::Graded { stretch: 4.0 }).unwrap();
        let r = g.nodes();
        let n = r.len();
        assert!(r[1] - r[0] < r[n - 1] - r[n - 2]);
        assert!(r[0] > 0.0);
        assert_eq!(*g.edges().last().unwrap(), 40.0);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(build_radial_grid(3, 10.0, 60, GridKind::Uniform).is_err());
        assert!(build_radial_grid(3, 10.0, 100, GridKind::Uniform).is_err());
        assert!(build_radial_grid(2, 10.0, 64, GridKind::Uniform).is_err());
        assert!(build_radial_grid(3, -1.0, 64, GridKind::Uniform).is_err());
    }

    #[test]
    fn laplacian_of_r_squared() {
        for dim in [3usize, 4, 5] {
            let g = build_radial_grid(dim, 4.0, 256, GridKind::Uniform).unwrap();
            let u = RadialField::from_fn(&g, |r| r * r);
            let lap = radial_laplacian(&u);
            let last = g.len() - ELEMENT_ORDER;
            for (i, v) in lap.values[..last].iter().enumerate() {
                assert!(
                    (v / (2.0 * dim as f64) - 1.0).abs() < 1e-7,
                    "dim {dim} node {i}: {v}"
                );
            }
        }
    }

    fn gaussian_laplacian_error(n: usize) -> f64 {
        let g = build_radial_grid(3, 10.0, n, GridKind::Uniform).unwrap();
        let u = RadialField::from_fn(&g, |r| (-r * r / 2.0).exp());
        let lap = radial_laplacian(&u);
        g.nodes()
            .iter()
            .zip(&lap.values)
            .filter(|(r, _)| **r < 8.0)
            .map(|(r, v)| (v - (r * r - 3.0) * (-r * r / 2.0).exp()).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn gaussian_laplacian_converges() {
        let e1 = gaussian_laplacian_error(64);
        let e2 = gaussian_laplacian_error(128);
        assert!(e2 < 1e-2, "{e1} {e2}");
        assert!((e1 / e2).log2() >= 2.0, "{e1} {e2}");
    }

    #[test]
    fn integration_by_parts_matches_continuum() {
        let g = build_radial_grid(3, 12.0, 512, GridKind::Uniform).unwrap();
        let u = RadialField::from_fn(&g, |r| (-r * r / 2.0).exp());
        let lap = radial_laplacian(&u);
        let lhs = -g.inner(&lap.values, &u.values);
        let rhs = u.grad_sq();
        assert!(((lhs - rhs) / rhs).abs() < 1e-12);
        // ∫|∇e^{-r²/2}|² = 4π ∫ r⁴ e^{-r²} dr = 3π^{3/2}/2
        let exact = 1.5 * PI.powf(1.5);
        assert!(((rhs - exact) / exact).abs() < 1e-8, "{rhs} {exact}");
    }

    #[test]
    fn interpolation_and_rescale() {
        let g = build_radial_grid(3, 20.0, 512, GridKind::Uniform).unwrap();
        let u = RadialField::from_fn(&g, |r| (-r * r / 2.0).exp());
        assert!((u.eval(1.234) - (-1.234f64 * 1.234 / 2.0).exp()).abs() < 1e-10);
        assert_eq!(u.eval(25.0), 0.0);
        let id = rescale_field(&u, 1.0).unwrap();
        assert_eq!(id.field.values, u.values);
        for tau in [0.5, 0.8, 1.3, 2.0] {
            let v = rescale_field(&u, tau).unwrap();
            assert!(v.warning.is_none());
            assert!(((v.field.mass() - u.mass()) / u.mass()).abs() < 1e-6);
            let ratio = v.field.grad_sq() / u.grad_sq();
            assert!((ratio / (tau * tau) - 1.0).abs() < 1e-4);
        }
        let shrunk = rescale_field(&u, 0.1).unwrap();
        assert!(shrunk.warning.is_some());
    }
}
